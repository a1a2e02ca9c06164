//! RVQ and channel-statistics codebooks, direction quantization, and the
//! orthogonal split of a channel direction around its chosen codeword.

mod sampled;

pub use sampled::{order_statistic_quantize, streaming_quantize, CodebookFamily};

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelSample, CorrelationModel};
use crate::error::{Error, Result};
use crate::linalg::{self, CVector};
use crate::rng;

/// Largest codebook size accepted by the builders unless a caller supplies
/// its own guard.
pub const DEFAULT_MAX_BITS: u32 = 26;

const DEGENERATE_NORM: f64 = 1e-14;
const MAX_REDRAWS: u32 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CodebookKind {
    Rvq,
    Statistics,
    EigenBaseline,
}

impl CodebookKind {
    fn code(self) -> u32 {
        match self {
            CodebookKind::Rvq => 0,
            CodebookKind::Statistics => 1,
            CodebookKind::EigenBaseline => 2,
        }
    }

    fn from_code(code: u32) -> Option<Self> {
        match code {
            0 => Some(CodebookKind::Rvq),
            1 => Some(CodebookKind::Statistics),
            2 => Some(CodebookKind::EigenBaseline),
            _ => None,
        }
    }
}

impl fmt::Display for CodebookKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CodebookKind::Rvq => "rvq",
            CodebookKind::Statistics => "statistics",
            CodebookKind::EigenBaseline => "eigen-baseline",
        })
    }
}

impl FromStr for CodebookKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rvq" => Ok(CodebookKind::Rvq),
            "statistics" | "stats" => Ok(CodebookKind::Statistics),
            "eigen" | "eigen-baseline" => Ok(CodebookKind::EigenBaseline),
            other => Err(Error::InvalidArgument(format!("unknown codebook kind {other:?}"))),
        }
    }
}

/// `2^B` unit-norm codewords of dimension `M`, stored column-major.
#[derive(Debug, Clone)]
pub struct Codebook {
    kind: CodebookKind,
    bits: u32,
    dim: usize,
    codewords: Vec<Complex64>,
    source_seed: u64,
    correlation: Option<Arc<CorrelationModel>>,
}

fn check_budget(bits: u32, max_bits: u32) -> Result<()> {
    if bits > max_bits {
        return Err(Error::ResourceLimit { bits, max_bits });
    }
    Ok(())
}

pub(crate) fn unit_gaussian(rng: &mut rng::StreamRng, out: &mut [Complex64]) {
    loop {
        rng::fill_complex_gaussian(rng, out);
        let norm = linalg::norm_sq(out).sqrt();
        if norm > 0.0 {
            out.iter_mut().for_each(|z| *z /= norm);
            return;
        }
    }
}

/// RVQ codebook: `2^B` i.i.d. vectors uniform on the complex unit sphere of
/// `C^M`. The first `2^b` codewords of a book built from a given seed are the
/// `b`-bit book for that seed.
pub fn build_rvq(num_antennas: usize, bits: u32, seed: u64) -> Result<Codebook> {
    build_rvq_guarded(num_antennas, bits, seed, DEFAULT_MAX_BITS)
}

pub fn build_rvq_guarded(num_antennas: usize, bits: u32, seed: u64, max_bits: u32) -> Result<Codebook> {
    check_budget(bits, max_bits)?;
    if num_antennas == 0 {
        return Err(Error::InvalidArgument("codeword dimension must be positive".into()));
    }
    let size = 1usize << bits;
    let mut codewords = vec![Complex64::new(0.0, 0.0); size * num_antennas];
    let mut rng = rng::from_seed(seed);
    for column in codewords.chunks_exact_mut(num_antennas) {
        unit_gaussian(&mut rng, column);
    }
    Ok(Codebook {
        kind: CodebookKind::Rvq,
        bits,
        dim: num_antennas,
        codewords,
        source_seed: seed,
        correlation: None,
    })
}

/// Channel-statistics codebook `c_i = R^(1/2) w_i / ||R^(1/2) w_i||` where
/// `w_i` are the RVQ vectors for the same seed.
pub fn build_statistics(model: &CorrelationModel, bits: u32, seed: u64) -> Result<Codebook> {
    build_statistics_guarded(model, bits, seed, DEFAULT_MAX_BITS)
}

pub fn build_statistics_guarded(
    model: &CorrelationModel,
    bits: u32,
    seed: u64,
    max_bits: u32,
) -> Result<Codebook> {
    check_budget(bits, max_bits)?;
    let dim = model.num_antennas();
    let size = 1usize << bits;
    let mut codewords = vec![Complex64::new(0.0, 0.0); size * dim];
    let mut rng = rng::from_seed(seed);
    let mut w = vec![Complex64::new(0.0, 0.0); dim];
    for column in codewords.chunks_exact_mut(dim) {
        let mut attempts = 0;
        loop {
            unit_gaussian(&mut rng, &mut w);
            let c = model.sqrt_apply(&w);
            let norm = linalg::norm_sq(c.as_slice()).sqrt();
            if norm >= DEGENERATE_NORM {
                for (dst, src) in column.iter_mut().zip(c.iter()) {
                    *dst = src / norm;
                }
                break;
            }
            attempts += 1;
            if attempts >= MAX_REDRAWS {
                return Err(Error::DegenerateDraw { attempts });
            }
        }
    }
    Ok(Codebook {
        kind: CodebookKind::Statistics,
        bits,
        dim,
        codewords,
        source_seed: seed,
        correlation: Some(Arc::new(model.clone())),
    })
}

/// Zero-bit baseline whose single codeword is the principal eigenvector of
/// `R` (first column of the eigenbasis; ties resolve to the lowest index).
pub fn build_eigen_baseline(model: &CorrelationModel) -> Codebook {
    let codewords = linalg::column(model.eigenbasis(), 0).to_vec();
    Codebook {
        kind: CodebookKind::EigenBaseline,
        bits: 0,
        dim: model.num_antennas(),
        codewords,
        source_seed: model.seed(),
        correlation: Some(Arc::new(model.clone())),
    }
}

const MAGIC: &[u8; 4] = b"CBK1";

impl Codebook {
    pub fn kind(&self) -> CodebookKind {
        self.kind
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.codewords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.codewords.is_empty()
    }

    pub fn source_seed(&self) -> u64 {
        self.source_seed
    }

    pub fn correlation(&self) -> Option<&CorrelationModel> {
        self.correlation.as_deref()
    }

    pub fn codeword(&self, index: usize) -> &[Complex64] {
        &self.codewords[index * self.dim..(index + 1) * self.dim]
    }

    pub fn codewords(&self) -> impl Iterator<Item = &[Complex64]> {
        self.codewords.chunks_exact(self.dim)
    }

    /// The first `2^bits` codewords as a smaller book.
    pub fn truncated(&self, bits: u32) -> Result<Codebook> {
        if bits > self.bits {
            return Err(Error::InvalidArgument(format!(
                "cannot truncate a {}-bit codebook to {bits} bits",
                self.bits
            )));
        }
        let len = (1usize << bits) * self.dim;
        Ok(Codebook {
            bits,
            codewords: self.codewords[..len].to_vec(),
            ..self.clone()
        })
    }

    /// Debug dump: 16-byte header (`CBK1`, M, B, kind as little-endian u32)
    /// followed by little-endian f64 pairs (re, im), column-major.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + self.codewords.len() * 16);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        out.extend_from_slice(&self.bits.to_le_bytes());
        out.extend_from_slice(&self.kind.code().to_le_bytes());
        for z in &self.codewords {
            out.extend_from_slice(&z.re.to_le_bytes());
            out.extend_from_slice(&z.im.to_le_bytes());
        }
        out
    }

    /// Inverse of [`Codebook::to_bytes`]. Seed and correlation model are not
    /// part of the dump and come back as `0` and `None`.
    pub fn from_bytes(bytes: &[u8]) -> Result<Codebook> {
        let bad = |msg: &str| Error::InvalidArgument(format!("codebook dump: {msg}"));
        if bytes.len() < 16 || &bytes[..4] != MAGIC {
            return Err(bad("missing CBK1 header"));
        }
        let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
        let dim = word(4) as usize;
        let bits = word(8);
        let kind = CodebookKind::from_code(word(12)).ok_or_else(|| bad("unknown kind"))?;
        if dim == 0 || bits >= usize::BITS {
            return Err(bad("bad dimensions"));
        }
        let count = (1usize << bits) * dim;
        if bytes.len() != 16 + count * 16 {
            return Err(bad("payload length does not match header"));
        }
        let codewords = bytes[16..]
            .chunks_exact(16)
            .map(|c| {
                Complex64::new(
                    f64::from_le_bytes(c[..8].try_into().unwrap()),
                    f64::from_le_bytes(c[8..].try_into().unwrap()),
                )
            })
            .collect();
        Ok(Codebook {
            kind,
            bits,
            dim,
            codewords,
            source_seed: 0,
            correlation: None,
        })
    }
}

/// Result of quantizing one channel direction.
#[derive(Debug, Clone)]
pub struct QuantizationOutcome {
    /// Chosen codeword index `F`.
    pub index: usize,
    /// `Z = |h~^H c_F|^2`.
    pub squared_cosine: f64,
    /// `X = 1 - Z`, the squared sine of the quantization angle.
    pub quantization_error: f64,
    /// `c_F`.
    pub codeword: CVector,
    /// `||h|| c_F`, what the base station reconstructs.
    pub feedback: CVector,
}

impl QuantizationOutcome {
    pub(crate) fn new(h: &ChannelSample, index: usize, squared_cosine: f64, codeword: CVector) -> Self {
        let squared_cosine = squared_cosine.clamp(0.0, 1.0);
        let feedback = &codeword * Complex64::new(h.norm(), 0.0);
        Self {
            index,
            squared_cosine,
            quantization_error: 1.0 - squared_cosine,
            codeword,
            feedback,
        }
    }
}

pub(crate) fn check_channel(h: &ChannelSample, dim: usize) -> Result<()> {
    if h.dim() != dim {
        return Err(Error::InvalidArgument(format!(
            "channel has dimension {} but codebook has {dim}",
            h.dim()
        )));
    }
    if !(h.norm_sq > 0.0 && h.norm_sq.is_finite()) {
        return Err(Error::InvalidArgument("cannot quantize a zero-norm channel".into()));
    }
    Ok(())
}

/// Exhaustive argmax of `|h~^H c_i|^2`; ties go to the lowest index.
pub fn quantize(h: &ChannelSample, cb: &Codebook) -> Result<QuantizationOutcome> {
    check_channel(h, cb.dim())?;
    let direction = h.direction.as_slice();
    let mut best = (0usize, f64::NEG_INFINITY);
    for (i, c) in cb.codewords().enumerate() {
        let z = linalg::inner(direction, c).norm_sqr();
        if z > best.1 {
            best = (i, z);
        }
    }
    let codeword = DVector::from_column_slice(cb.codeword(best.0));
    Ok(QuantizationOutcome::new(h, best.0, best.1, codeword))
}

/// `h~ = sqrt(1 - X) c_F e^{i phi} + sqrt(X) s` with `s` orthogonal to `c_F`.
#[derive(Debug, Clone)]
pub struct DirectionDecomposition {
    /// `c_F` rotated by the phase of `c_F^H h~`.
    pub aligned_component: CVector,
    /// Unit residual direction `s`.
    pub residual_direction: CVector,
    pub error: f64,
}

/// Quantization errors below this leave the residual direction undefined.
pub const DEGENERATE_ERROR: f64 = 1e-12;

pub fn decompose(h: &ChannelSample, outcome: &QuantizationOutcome) -> Result<DirectionDecomposition> {
    let x = outcome.quantization_error;
    if x < DEGENERATE_ERROR {
        return Err(Error::DegenerateDecomposition { error: x });
    }
    let c = &outcome.codeword;
    let projection = linalg::inner(c.as_slice(), h.direction.as_slice());
    let phase = if projection.norm() > 0.0 {
        projection / projection.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    let aligned_component = c * phase;
    let residual = &h.direction - c * projection;
    let residual_norm = linalg::norm_sq(residual.as_slice()).sqrt();
    if residual_norm == 0.0 {
        return Err(Error::DegenerateDecomposition { error: x });
    }
    let residual_direction = residual / Complex64::new(residual_norm, 0.0);

    let rebuilt = &aligned_component * Complex64::new((1.0 - x).sqrt(), 0.0)
        + &residual_direction * Complex64::new(x.sqrt(), 0.0);
    let defect = (&h.direction - rebuilt).norm();
    if defect > 1e-10 {
        return Err(Error::Numeric(format!(
            "direction decomposition does not reconstruct the channel (defect {defect:e})"
        )));
    }
    Ok(DirectionDecomposition {
        aligned_component,
        residual_direction,
        error: x,
    })
}
