//! Quantization against a freshly drawn random codebook without storing it.
//!
//! [`streaming_quantize`] scans the `2^B` codewords one at a time. For RVQ it
//! consumes the stream exactly like [`build_rvq`](super::build_rvq) followed by
//! [`quantize`](super::quantize), so both give the same outcome for one seed.
//! For statistics codebooks the scan runs in the `r`-dimensional active
//! subspace: with `c_i = U_r diag(sigma) a_i / ||diag(sigma) a_i||` and
//! `a_i ~ CN(0, I_r)` the codewords have the same law as the `M`-dimensional
//! construction, at `O(r)` cost per codeword.
//!
//! [`order_statistic_quantize`] handles codebooks whose codewords are uniform
//! on the unit sphere of an `n`-dimensional space containing the channel (RVQ,
//! and statistics codebooks with equal singular values). There every
//! `|h~^H c_i|^2` is Beta(1, n-1), so the best of `N = 2^B` has CDF
//! `(1 - (1 - z)^(n-1))^N` and can be drawn by inversion. The winning codeword
//! is `e^{i theta} (sqrt(Z) h~ + sqrt(1 - Z) s)` with `s` uniform on the unit
//! sphere orthogonal to `h~`. Cost is independent of `B`.

use std::f64::consts::TAU;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;

use super::{check_channel, unit_gaussian, QuantizationOutcome};
use crate::channel::{ChannelSample, CorrelationModel};
use crate::error::{Error, Result};
use crate::linalg::{self, CVector};
use crate::rng;

/// Random codebook family to quantize against.
#[derive(Debug, Clone, Copy)]
pub enum CodebookFamily<'a> {
    Rvq,
    Statistics(&'a CorrelationModel),
}

fn check_bits(bits: u32) -> Result<()> {
    if bits >= 63 {
        return Err(Error::InvalidArgument(format!("{bits} feedback bits is out of range")));
    }
    Ok(())
}

pub fn streaming_quantize(
    h: &ChannelSample,
    family: CodebookFamily<'_>,
    bits: u32,
    seed: u64,
) -> Result<QuantizationOutcome> {
    check_bits(bits)?;
    let size = 1u64 << bits;
    let mut rng = rng::from_seed(seed);
    match family {
        CodebookFamily::Rvq => {
            let dim = h.dim();
            check_channel(h, dim)?;
            let direction = h.direction.as_slice();
            let mut w = vec![Complex64::new(0.0, 0.0); dim];
            let mut best_word = w.clone();
            let mut best = (0usize, f64::NEG_INFINITY);
            for i in 0..size {
                unit_gaussian(&mut rng, &mut w);
                let z = linalg::inner(direction, &w).norm_sqr();
                if z > best.1 {
                    best = (i as usize, z);
                    best_word.copy_from_slice(&w);
                }
            }
            let codeword = DVector::from_vec(best_word);
            Ok(QuantizationOutcome::new(h, best.0, best.1, codeword))
        }
        CodebookFamily::Statistics(model) => {
            check_channel(h, model.num_antennas())?;
            let r = model.rank();
            let sigma = model.singular_values();
            let y = model.reduced_coordinates(h.direction.as_slice());
            let mut d = vec![Complex64::new(0.0, 0.0); r];
            let mut best_word = d.clone();
            let mut best = (0usize, f64::NEG_INFINITY);
            for i in 0..size {
                for (dj, sj) in d.iter_mut().zip(sigma) {
                    *dj = rng::complex_gaussian(&mut rng) * *sj;
                }
                let norm_sq = linalg::norm_sq(&d);
                if norm_sq == 0.0 {
                    continue;
                }
                let z = linalg::inner(&y, &d).norm_sqr() / norm_sq;
                if z > best.1 {
                    best = (i as usize, z);
                    best_word.copy_from_slice(&d);
                }
            }
            let norm = linalg::norm_sq(&best_word).sqrt();
            let codeword = model.lift(&best_word) / Complex64::new(norm, 0.0);
            Ok(QuantizationOutcome::new(h, best.0, best.1, codeword))
        }
    }
}

/// Exact draw of the best-of-`2^B` outcome for isotropic codebooks.
pub fn order_statistic_quantize(
    h: &ChannelSample,
    family: CodebookFamily<'_>,
    bits: u32,
    seed: u64,
) -> Result<QuantizationOutcome> {
    check_bits(bits)?;
    let space_dim = match family {
        CodebookFamily::Rvq => h.dim(),
        CodebookFamily::Statistics(model) => {
            if !model.is_isotropic() {
                return Err(Error::InvalidArgument(
                    "order-statistic quantization needs equal singular values".into(),
                ));
            }
            model.rank()
        }
    };
    check_channel(h, h.dim())?;
    let mut rng = rng::from_seed(seed);

    let uniform = 1.0 - rng.random::<f64>();
    let size = (1u64 << bits) as f64;
    let error = if space_dim == 1 {
        0.0
    } else {
        // 1 - Z = (1 - u^(1/N))^(1/(n-1))
        (-(uniform.ln() / size).exp_m1()).powf(1.0 / (space_dim - 1) as f64)
    };
    let cosine_sq = 1.0 - error;
    let index = if bits == 0 {
        0
    } else {
        rng.random_range(0..(1u64 << bits)) as usize
    };
    let phase = Complex64::from_polar(1.0, rng.random::<f64>() * TAU);

    let direction = &h.direction;
    let mut codeword: CVector = direction * Complex64::new(cosine_sq.sqrt(), 0.0);
    if space_dim > 1 {
        let residual = loop {
            let g = match family {
                CodebookFamily::Rvq => linalg::gaussian_vector(h.dim(), &mut rng),
                CodebookFamily::Statistics(model) => {
                    let coords: Vec<Complex64> =
                        (0..model.rank()).map(|_| rng::complex_gaussian(&mut rng)).collect();
                    model.lift(&coords)
                }
            };
            let along = linalg::inner(direction.as_slice(), g.as_slice());
            let orthogonal = g - direction * along;
            let norm = linalg::norm_sq(orthogonal.as_slice()).sqrt();
            if norm > 1e-12 {
                break orthogonal / Complex64::new(norm, 0.0);
            }
        };
        codeword += residual * Complex64::new(error.sqrt(), 0.0);
    }
    codeword *= phase;
    Ok(QuantizationOutcome::new(h, index, cosine_sq, codeword))
}
