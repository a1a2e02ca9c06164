//! Zero-forcing precoding, SINR/rate evaluation, and the per-sample
//! interference identity `|h_k^H v_i|^2 = ||h_k||^2 X |s^H v_i|^2`.

use num_complex::Complex64;
use serde::Serialize;

use crate::channel::{ChannelSample, PowerCalibration};
use crate::codebook::{decompose, QuantizationOutcome, DEGENERATE_ERROR};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};

/// Largest accepted condition number of `G^H G`.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PrecoderSource {
    /// Built from the true channel matrix.
    Ideal,
    /// Built from the quantized feedback matrix.
    Feedback,
}

/// Unit-norm ZF beamformers, one column per user.
#[derive(Debug, Clone)]
pub struct PrecodingMatrix {
    pub columns: CMatrix,
    pub source: PrecoderSource,
}

impl PrecodingMatrix {
    pub fn num_users(&self) -> usize {
        self.columns.ncols()
    }

    pub fn column(&self, i: usize) -> &[Complex64] {
        linalg::column(&self.columns, i)
    }
}

/// Condition number of the Hermitian Gram matrix from its eigenvalues.
fn gram_condition(gram: &CMatrix) -> f64 {
    let eigenvalues = gram.clone().symmetric_eigenvalues();
    let max = eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
    let min = eigenvalues.iter().cloned().fold(f64::MAX, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Normalized columns of `G (G^H G)^-1`, computed by solving
/// `(G^H G) Y = G^H` with partial pivoting and taking `Y^H`.
pub fn zf_precoder(channel: &CMatrix, source: PrecoderSource) -> Result<PrecodingMatrix> {
    let (m, k) = channel.shape();
    if k == 0 || k > m {
        return Err(Error::InvalidArgument(format!(
            "zero-forcing needs 1 <= K <= M (K={k}, M={m})"
        )));
    }
    let gram = channel.adjoint() * channel;
    let condition = gram_condition(&gram);
    if !(condition <= MAX_CONDITION) {
        return Err(Error::SingularChannel { condition });
    }
    let solved = gram
        .lu()
        .solve(&channel.adjoint())
        .ok_or(Error::SingularChannel { condition })?;
    let mut columns = solved.adjoint();
    for mut col in columns.column_iter_mut() {
        let norm = col.norm();
        col /= Complex64::new(norm, 0.0);
    }
    Ok(PrecodingMatrix { columns, source })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub per_user_sinr: Vec<f64>,
    /// `log2(1 + SINR_k)` in bits/s/Hz.
    pub per_user_rate: Vec<f64>,
    pub mean_rate: f64,
}

/// `SINR_k = (g/K)|h_k^H v_k|^2 / (1 + (g/K) sum_{i != k} |h_k^H v_i|^2)`
/// with unit noise variance.
pub fn evaluate_rates(
    channel: &CMatrix,
    precoder: &PrecodingMatrix,
    cal: &PowerCalibration,
) -> Result<RateReport> {
    let k = channel.ncols();
    if precoder.columns.shape() != channel.shape() {
        return Err(Error::InvalidArgument(format!(
            "precoder is {:?} but channel is {:?}",
            precoder.columns.shape(),
            channel.shape()
        )));
    }
    let gains = channel.adjoint() * &precoder.columns;
    let power = cal.per_user_power();
    let per_user_sinr: Vec<f64> = (0..k)
        .map(|user| {
            let signal = gains[(user, user)].norm_sqr();
            let interference: f64 = (0..k)
                .filter(|i| *i != user)
                .map(|i| gains[(user, i)].norm_sqr())
                .sum();
            power * signal / (1.0 + power * interference)
        })
        .collect();
    let per_user_rate: Vec<f64> = per_user_sinr.iter().map(|s| s.ln_1p() / std::f64::consts::LN_2).collect();
    let mean_rate = per_user_rate.iter().sum::<f64>() / k as f64;
    Ok(RateReport {
        per_user_sinr,
        per_user_rate,
        mean_rate,
    })
}

/// One interferer's contribution to user `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InterferenceTerm {
    pub interferer: usize,
    /// `|h_k^H v_i|^2`
    pub cross_power: f64,
    /// `||h_k||^2 X`
    pub error_scale: f64,
    /// `|s^H v_i|^2`
    pub residual_alignment: f64,
}

const FACTORIZATION_TOLERANCE: f64 = 1e-9;

/// Splits every interference term of user `k` through the direction
/// decomposition and checks `|h_k^H v_i|^2 = ||h_k||^2 X |s^H v_i|^2` and
/// `|s^H v_i|^2 <= 1`. `precoder` must be zero-forcing on a feedback matrix
/// whose `k`-th column is `outcome.feedback`.
pub fn interference_witness(
    h: &ChannelSample,
    outcome: &QuantizationOutcome,
    precoder: &PrecodingMatrix,
    k: usize,
) -> Result<Vec<InterferenceTerm>> {
    let users = precoder.num_users();
    if k >= users {
        return Err(Error::InvalidArgument(format!("user {k} out of range (K={users})")));
    }
    let cross = |i: usize| linalg::inner(h.h.as_slice(), precoder.column(i)).norm_sqr();
    if outcome.quantization_error < DEGENERATE_ERROR {
        return Ok((0..users)
            .filter(|i| *i != k)
            .map(|i| InterferenceTerm {
                interferer: i,
                cross_power: cross(i),
                error_scale: 0.0,
                residual_alignment: 0.0,
            })
            .collect());
    }
    let decomposition = decompose(h, outcome)?;
    let error_scale = h.norm_sq * outcome.quantization_error;
    let tolerance = FACTORIZATION_TOLERANCE * h.norm_sq.max(1.0);
    (0..users)
        .filter(|i| *i != k)
        .map(|i| {
            let cross_power = cross(i);
            let residual_alignment =
                linalg::inner(decomposition.residual_direction.as_slice(), precoder.column(i)).norm_sqr();
            let predicted = error_scale * residual_alignment;
            if (cross_power - predicted).abs() > tolerance || residual_alignment > 1.0 + 1e-12 {
                return Err(Error::Numeric(format!(
                    "interference factorization failed for user {k}, interferer {i}: \
                     |h^H v|^2 = {cross_power:e}, ||h||^2 X |s^H v|^2 = {predicted:e}"
                )));
            }
            Ok(InterferenceTerm {
                interferer: i,
                cross_power,
                error_scale,
                residual_alignment,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{draw_channel, make_correlation, SingularValueProfile};
    use crate::codebook::{build_statistics, quantize};
    use crate::rng::from_seed;

    #[test]
    fn orthonormal_columns_are_their_own_precoder() {
        let u = linalg::haar_unitary(6, &mut from_seed(1));
        let g = u.columns(0, 3).into_owned();
        let v = zf_precoder(&g, PrecoderSource::Ideal).unwrap();
        assert!((&v.columns - &g).norm() < 1e-10);
    }

    #[test]
    fn single_user_is_matched_filter() {
        let g = linalg::gaussian_matrix(5, 1, &mut from_seed(2));
        let v = zf_precoder(&g, PrecoderSource::Ideal).unwrap();
        let expected = &g / Complex64::new(g.norm(), 0.0);
        assert!((&v.columns - expected).norm() < 1e-12);
    }

    #[test]
    fn zero_forcing_nulls_other_users() {
        let mut rng = from_seed(3);
        for _ in 0..50 {
            let g = linalg::gaussian_matrix(8, 3, &mut rng);
            let v = zf_precoder(&g, PrecoderSource::Feedback).unwrap();
            for k in 0..3 {
                let gk = linalg::column(&g, k);
                let gnorm = linalg::norm_sq(gk).sqrt();
                assert!((linalg::norm_sq(v.column(k)) - 1.0).abs() < 1e-12);
                for i in (0..3).filter(|i| *i != k) {
                    assert!(linalg::inner(gk, v.column(i)).norm() < 1e-8 * gnorm);
                }
            }
        }
    }

    #[test]
    fn rank_deficient_channel_is_rejected() {
        let g = linalg::gaussian_matrix(4, 1, &mut from_seed(4));
        let doubled = CMatrix::from_fn(4, 2, |i, _| g[(i, 0)]);
        match zf_precoder(&doubled, PrecoderSource::Feedback) {
            Err(Error::SingularChannel { condition }) => assert!(condition > MAX_CONDITION),
            other => panic!("unexpected {other:?}"),
        }
        assert!(zf_precoder(&linalg::gaussian_matrix(2, 3, &mut from_seed(5)), PrecoderSource::Ideal).is_err());
    }

    #[test]
    fn single_user_rate_without_interference() {
        let mut g = CMatrix::zeros(3, 1);
        g[(0, 0)] = Complex64::new(2.0, 0.0);
        let v = zf_precoder(&g, PrecoderSource::Ideal).unwrap();
        // gamma = 1, K = 1, ||h||^2 = 4
        let cal = PowerCalibration::new(10.0 * 4f64.log10(), 1, 4.0).unwrap();
        assert!((cal.transmit_power - 1.0).abs() < 1e-12);
        let report = evaluate_rates(&g, &v, &cal).unwrap();
        assert!((report.per_user_rate[0] - 5f64.log2()).abs() < 1e-12);
        assert!((report.per_user_sinr[0] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn ideal_precoding_has_no_cross_terms() {
        let mut rng = from_seed(6);
        let g = linalg::gaussian_matrix(16, 4, &mut rng);
        let v = zf_precoder(&g, PrecoderSource::Ideal).unwrap();
        let gains = g.adjoint() * &v.columns;
        for k in 0..4 {
            for i in (0..4).filter(|i| *i != k) {
                assert!(gains[(k, i)].norm_sqr() < 1e-15);
            }
        }
        let cal = PowerCalibration::new(10.0, 4, 16.0).unwrap();
        let report = evaluate_rates(&g, &v, &cal).unwrap();
        for k in 0..4 {
            let expected = (1.0 + cal.per_user_power() * gains[(k, k)].norm_sqr()).log2();
            assert!((report.per_user_rate[k] - expected).abs() < 1e-12);
            assert!((report.per_user_rate[k] - report.per_user_sinr[k].ln_1p() / std::f64::consts::LN_2).abs() < 1e-12);
        }
        let mean = report.per_user_rate.iter().sum::<f64>() / 4.0;
        assert!((report.mean_rate - mean).abs() < 1e-15);
    }

    #[test]
    fn feedback_interference_respects_per_sample_bound() {
        let (m, k, r) = (32, 4, 3);
        let mut rng = from_seed(7);
        for trial in 0..100u64 {
            let models: Vec<_> = (0..k)
                .map(|u| make_correlation(m, r, &SingularValueProfile::Equal, trial * 10 + u as u64).unwrap())
                .collect();
            let samples: Vec<_> = models.iter().map(|md| draw_channel(md, &mut rng)).collect();
            let outcomes: Vec<_> = models
                .iter()
                .zip(&samples)
                .enumerate()
                .map(|(u, (md, h))| quantize(h, &build_statistics(md, 4, trial * 100 + u as u64).unwrap()).unwrap())
                .collect();
            let h_true = CMatrix::from_fn(m, k, |i, j| samples[j].h[i]);
            let h_hat = CMatrix::from_fn(m, k, |i, j| outcomes[j].feedback[i]);
            let v = zf_precoder(&h_hat, PrecoderSource::Feedback).unwrap();
            let cal = PowerCalibration::new(10.0, k, m as f64).unwrap();
            let gains = h_true.adjoint() * &v.columns;
            for user in 0..k {
                let interference: f64 = (0..k).filter(|i| *i != user).map(|i| gains[(user, i)].norm_sqr()).sum();
                let bound = (k - 1) as f64 * samples[user].norm_sq * outcomes[user].quantization_error;
                assert!(cal.per_user_power() * interference <= cal.per_user_power() * bound + 1e-9);
                let terms = interference_witness(&samples[user], &outcomes[user], &v, user).unwrap();
                assert_eq!(terms.len(), k - 1);
                for t in terms {
                    assert!(t.residual_alignment <= 1.0 + 1e-12);
                    assert!((t.cross_power - t.error_scale * t.residual_alignment).abs() < 1e-9);
                }
            }
            let _ = evaluate_rates(&h_true, &v, &cal).unwrap();
        }
    }

    #[test]
    fn perfect_feedback_has_no_cross_terms() {
        let g = linalg::gaussian_matrix(8, 3, &mut from_seed(8));
        let v = zf_precoder(&g, PrecoderSource::Feedback).unwrap();
        let h = ChannelSample::from_channel(g.column(0).into_owned());
        let outcome = QuantizationOutcome::new(&h, 0, 1.0, h.direction.clone());
        let terms = interference_witness(&h, &outcome, &v, 0).unwrap();
        for t in terms {
            assert!(t.cross_power < 1e-15);
            assert_eq!(t.error_scale, 0.0);
        }
    }
}
