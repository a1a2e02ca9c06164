//! Correlated channel model `h = R^(1/2) h_w` with `R^(1/2) = U diag(sigma) U^H`.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector};
use crate::rng;

/// How the `r` nonzero singular values of `R^(1/2)` are chosen before the
/// trace normalization is applied.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SingularValueProfile {
    /// All `sigma_i` equal.
    #[default]
    Equal,
    /// `sigma_i^2` proportional to `rho^(i-1)`, `0 < rho <= 1`.
    Exponential { rho: f64 },
    /// Explicit `sigma_1..sigma_r`, sorted into non-increasing order.
    Explicit { values: Vec<f64> },
}

impl FromStr for SingularValueProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "equal" {
            return Ok(SingularValueProfile::Equal);
        }
        if let Some(rho) = s.strip_prefix("exp:") {
            let rho: f64 = rho
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad decay factor in profile {s:?}")))?;
            return Ok(SingularValueProfile::Exponential { rho });
        }
        if let Some(list) = s.strip_prefix("list:") {
            let values = list
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| Error::InvalidArgument(format!("bad value list in profile {s:?}")))?;
            return Ok(SingularValueProfile::Explicit { values });
        }
        Err(Error::InvalidArgument(format!(
            "unknown profile {s:?} (expected equal, exp:RHO or list:S1,S2,...)"
        )))
    }
}

impl fmt::Display for SingularValueProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SingularValueProfile::Equal => write!(f, "equal"),
            SingularValueProfile::Exponential { rho } => write!(f, "exp:{rho}"),
            SingularValueProfile::Explicit { values } => {
                let parts: Vec<String> = values.iter().map(|v| v.to_string()).collect();
                write!(f, "list:{}", parts.join(","))
            }
        }
    }
}

impl SingularValueProfile {
    /// Singular values for rank `r`, scaled so that `sum sigma_i^2 = trace`.
    pub fn singular_values(&self, rank: usize, trace: f64) -> Result<Vec<f64>> {
        if rank == 0 {
            return Err(Error::InvalidArgument("rank must be at least 1".into()));
        }
        if !(trace > 0.0 && trace.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "trace normalization target must be positive, got {trace}"
            )));
        }
        let mut squares: Vec<f64> = match self {
            SingularValueProfile::Equal => vec![1.0; rank],
            SingularValueProfile::Exponential { rho } => {
                if !(*rho > 0.0 && *rho <= 1.0) {
                    return Err(Error::InvalidArgument(format!(
                        "exponential decay factor must lie in (0, 1], got {rho}"
                    )));
                }
                (0..rank).map(|i| rho.powi(i as i32)).collect()
            }
            SingularValueProfile::Explicit { values } => {
                if values.len() != rank {
                    return Err(Error::InvalidArgument(format!(
                        "explicit profile has {} values but rank is {rank}",
                        values.len()
                    )));
                }
                if let Some(bad) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
                    return Err(Error::InvalidArgument(format!(
                        "profile entries must be positive, got {bad}"
                    )));
                }
                values.iter().map(|v| v * v).collect()
            }
        };
        squares.sort_by(|a, b| b.total_cmp(a));
        let total: f64 = squares.iter().sum();
        let scale = trace / total;
        Ok(squares.into_iter().map(|s| (s * scale).sqrt()).collect())
    }
}

/// `R^(1/2) = U diag(sigma_1..sigma_r, 0..0) U^H` for one user.
#[derive(Debug, Clone)]
pub struct CorrelationModel {
    eigenbasis: CMatrix,
    /// First `r` columns of the eigenbasis.
    active: CMatrix,
    singular_values: Vec<f64>,
    profile: SingularValueProfile,
    seed: u64,
    isotropic_full_rank: bool,
}

/// Replay record for a correlation model. The eigenbasis is regenerated from
/// the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRecord {
    #[serde(rename = "M")]
    pub num_antennas: usize,
    pub r: usize,
    pub profile: SingularValueProfile,
    pub seed: u64,
    pub sigma: Vec<f64>,
}

/// Builds a model with a Haar eigenbasis drawn from `seed` and
/// `trace(R) = M`.
pub fn make_correlation(
    num_antennas: usize,
    rank: usize,
    profile: &SingularValueProfile,
    seed: u64,
) -> Result<CorrelationModel> {
    CorrelationModel::with_trace(num_antennas, rank, profile, seed, num_antennas as f64)
}

impl CorrelationModel {
    pub fn with_trace(
        num_antennas: usize,
        rank: usize,
        profile: &SingularValueProfile,
        seed: u64,
        trace: f64,
    ) -> Result<Self> {
        if num_antennas == 0 {
            return Err(Error::InvalidArgument("number of antennas must be positive".into()));
        }
        if rank == 0 || rank > num_antennas {
            return Err(Error::InvalidArgument(format!(
                "rank must satisfy 1 <= r <= M (r={rank}, M={num_antennas})"
            )));
        }
        let sigma = profile.singular_values(rank, trace)?;
        let mut rng = rng::from_seed(seed);
        let eigenbasis = linalg::haar_unitary(num_antennas, &mut rng);
        Self::from_parts(eigenbasis, sigma, profile.clone(), seed)
    }

    /// Assembles a model from an explicit eigenbasis and singular values.
    pub fn from_parts(
        eigenbasis: CMatrix,
        mut singular_values: Vec<f64>,
        profile: SingularValueProfile,
        seed: u64,
    ) -> Result<Self> {
        let m = eigenbasis.nrows();
        if eigenbasis.ncols() != m || m == 0 {
            return Err(Error::InvalidArgument("eigenbasis must be square".into()));
        }
        let r = singular_values.len();
        if r == 0 || r > m {
            return Err(Error::InvalidArgument(format!(
                "need 1 <= r <= M singular values (r={r}, M={m})"
            )));
        }
        if let Some(bad) = singular_values.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidArgument(format!(
                "singular values must be positive, got {bad}"
            )));
        }
        let defect = linalg::unitarity_defect(&eigenbasis);
        if defect > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "eigenbasis is not unitary (||U^H U - I||_F = {defect:e})"
            )));
        }
        singular_values.sort_by(|a, b| b.total_cmp(a));
        let isotropic_full_rank = r == m && singular_values.iter().all(|s| *s == singular_values[0]);
        let active = eigenbasis.columns(0, r).into_owned();
        Ok(Self {
            eigenbasis,
            active,
            singular_values,
            profile,
            seed,
            isotropic_full_rank,
        })
    }

    pub fn from_record(record: &CorrelationRecord) -> Result<Self> {
        let mut rng = rng::from_seed(record.seed);
        let eigenbasis = linalg::haar_unitary(record.num_antennas, &mut rng);
        if record.sigma.len() != record.r {
            return Err(Error::InvalidArgument(format!(
                "record lists {} singular values for rank {}",
                record.sigma.len(),
                record.r
            )));
        }
        Self::from_parts(eigenbasis, record.sigma.clone(), record.profile.clone(), record.seed)
    }

    pub fn record(&self) -> CorrelationRecord {
        CorrelationRecord {
            num_antennas: self.num_antennas(),
            r: self.rank(),
            profile: self.profile.clone(),
            seed: self.seed,
            sigma: self.singular_values.clone(),
        }
    }

    pub fn num_antennas(&self) -> usize {
        self.eigenbasis.nrows()
    }

    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    pub fn eigenbasis(&self) -> &CMatrix {
        &self.eigenbasis
    }

    /// The `M x r` block of eigenvectors with nonzero singular values.
    pub fn active_basis(&self) -> &CMatrix {
        &self.active
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    pub fn profile(&self) -> &SingularValueProfile {
        &self.profile
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `trace(R) = sum sigma_i^2 = E[||h||^2]`.
    pub fn trace(&self) -> f64 {
        self.singular_values.iter().map(|s| s * s).sum()
    }

    /// True when all active singular values coincide, so codewords of a
    /// statistics codebook are uniform on the unit sphere of the active
    /// subspace.
    pub fn is_isotropic(&self) -> bool {
        let first = self.singular_values[0];
        self.singular_values
            .iter()
            .all(|s| (s - first).abs() <= 1e-12 * first)
    }

    /// `U_r^H v`, the coordinates of `v` in the active eigenbasis.
    pub fn reduced_coordinates(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.rank())
            .map(|j| linalg::inner(linalg::column(&self.active, j), v))
            .collect()
    }

    /// Maps active-subspace coordinates back to `C^M`: `U_r y`.
    pub fn lift(&self, coords: &[Complex64]) -> CVector {
        let m = self.num_antennas();
        let mut out = DVector::from_element(m, Complex64::new(0.0, 0.0));
        for (j, c) in coords.iter().enumerate() {
            let col = linalg::column(&self.active, j);
            for (o, u) in out.iter_mut().zip(col) {
                *o += u * c;
            }
        }
        out
    }

    /// `R^(1/2) w`.
    pub fn sqrt_apply(&self, w: &[Complex64]) -> CVector {
        if self.isotropic_full_rank {
            let s = self.singular_values[0];
            return DVector::from_iterator(w.len(), w.iter().map(|z| z * s));
        }
        let mut coords = self.reduced_coordinates(w);
        for (c, s) in coords.iter_mut().zip(&self.singular_values) {
            *c *= *s;
        }
        self.lift(&coords)
    }

    /// Dense `R^(1/2)`.
    pub fn sqrt_matrix(&self) -> CMatrix {
        let scaled = CMatrix::from_fn(self.num_antennas(), self.rank(), |i, j| {
            self.active[(i, j)] * self.singular_values[j]
        });
        scaled * self.active.adjoint()
    }

    /// Dense `R = U diag(sigma^2) U^H`.
    pub fn correlation_matrix(&self) -> CMatrix {
        let sqrt = self.sqrt_matrix();
        &sqrt * &sqrt
    }

    /// Norm of the component of `v` orthogonal to the active subspace.
    pub fn subspace_residual(&self, v: &[Complex64]) -> f64 {
        let projected = self.lift(&self.reduced_coordinates(v));
        v.iter()
            .zip(projected.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// One channel realization.
#[derive(Debug, Clone)]
pub struct ChannelSample {
    pub h: CVector,
    pub h_w: CVector,
    pub norm_sq: f64,
    pub direction: CVector,
}

impl ChannelSample {
    pub fn new(h_w: CVector, h: CVector) -> Self {
        let norm_sq = linalg::norm_sq(h.as_slice());
        let direction = if norm_sq > 0.0 {
            &h / Complex64::new(norm_sq.sqrt(), 0.0)
        } else {
            h.clone()
        };
        Self {
            h,
            h_w,
            norm_sq,
            direction,
        }
    }

    /// Sample whose inner vector is the channel itself (`R^(1/2) = I`).
    pub fn from_channel(h: CVector) -> Self {
        Self::new(h.clone(), h)
    }

    pub fn dim(&self) -> usize {
        self.h.len()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq.sqrt()
    }
}

/// Draws `h = R^(1/2) h_w` with `h_w ~ CN(0, I_M)`.
pub fn draw_channel<R: Rng + ?Sized>(model: &CorrelationModel, rng: &mut R) -> ChannelSample {
    let h_w = linalg::gaussian_vector(model.num_antennas(), rng);
    let h = model.sqrt_apply(h_w.as_slice());
    ChannelSample::new(h_w, h)
}

/// Transmit power needed for a target receive SNR.
///
/// Noise variance is 1, so `SNR = 10 log10(gamma / K * E[||h||^2])`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerCalibration {
    pub snr_db: f64,
    pub transmit_power: f64,
    pub num_users: usize,
    pub mean_channel_gain: f64,
}

impl PowerCalibration {
    pub fn new(snr_db: f64, num_users: usize, mean_channel_gain: f64) -> Result<Self> {
        if num_users == 0 {
            return Err(Error::InvalidArgument("number of users must be positive".into()));
        }
        if !(mean_channel_gain > 0.0 && mean_channel_gain.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "mean channel gain must be positive, got {mean_channel_gain}"
            )));
        }
        if !snr_db.is_finite() {
            return Err(Error::InvalidArgument(format!("SNR must be finite, got {snr_db}")));
        }
        let transmit_power = num_users as f64 * 10f64.powf(snr_db / 10.0) / mean_channel_gain;
        Ok(Self {
            snr_db,
            transmit_power,
            num_users,
            mean_channel_gain,
        })
    }

    /// Power allotted to each user's stream, `gamma / K`.
    pub fn per_user_power(&self) -> f64 {
        self.transmit_power / self.num_users as f64
    }

    /// Receive SNR recomputed from the stored power.
    pub fn receive_snr_db(&self) -> f64 {
        10.0 * (self.per_user_power() * self.mean_channel_gain).log10()
    }
}

pub fn calibrate_power(
    snr_db: f64,
    num_users: usize,
    model: &CorrelationModel,
) -> Result<PowerCalibration> {
    PowerCalibration::new(snr_db, num_users, model.trace())
}
