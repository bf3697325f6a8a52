//! Reproducible random streams, Haar-random unitaries and coupling phases.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use faer::Mat;
use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SffError};
use crate::matrix::UnitaryMatrix;

/// One independent random stream keyed by `(master_seed, stream_index)`.
///
/// Backed by ChaCha8 with the master seed as key and the stream index as
/// the ChaCha stream id, so streams do not overlap and any stream can be
/// reconstructed without touching the others.
#[derive(Clone, Debug)]
pub struct RngStream {
    master_seed: u64,
    stream_index: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(stream_index);
        Self {
            master_seed,
            stream_index,
            rng,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Distribution of the coupling phases `xi`. All kinds have zero mean.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PhaseDistribution {
    /// Uniform on `[-pi, pi]`.
    UniformPi,
    /// `cos(eta)` with `eta` uniform on `[-pi, pi]`.
    CosineOfUniform,
    /// Centered normal with standard deviation `sigma`.
    Gaussian { sigma: f64 },
}

impl PhaseDistribution {
    pub fn gaussian(sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(SffError::Config(format!(
                "gaussian sigma must be finite and >= 0, got {sigma}"
            )));
        }
        Ok(Self::Gaussian { sigma })
    }

    /// Standard deviation of a single phase.
    pub fn sigma(&self) -> f64 {
        match *self {
            Self::UniformPi => PI / 3f64.sqrt(),
            Self::CosineOfUniform => std::f64::consts::FRAC_1_SQRT_2,
            Self::Gaussian { sigma } => sigma,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::UniformPi => "uniform_pi",
            Self::CosineOfUniform => "cosine_of_uniform",
            Self::Gaussian { .. } => "gaussian",
        }
    }

    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        match *self {
            Self::UniformPi => PI * (2.0 * rng.uniform() - 1.0),
            Self::CosineOfUniform => (PI * (2.0 * rng.uniform() - 1.0)).cos(),
            Self::Gaussian { sigma } => sigma * rng.standard_normal(),
        }
    }
}

impl fmt::Display for PhaseDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Gaussian { sigma } => write!(f, "gaussian:{sigma}"),
            other => f.write_str(other.kind()),
        }
    }
}

impl FromStr for PhaseDistribution {
    type Err = SffError;

    /// Accepts `uniform_pi`, `cosine_of_uniform`, `gaussian` (sigma = 1) and
    /// `gaussian:<sigma>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "uniform_pi" => Ok(Self::UniformPi),
            "cosine_of_uniform" => Ok(Self::CosineOfUniform),
            "gaussian" => Self::gaussian(1.0),
            _ => match s.strip_prefix("gaussian:") {
                Some(rest) => {
                    let sigma = rest.trim().parse::<f64>().map_err(|_| {
                        SffError::Config(format!("bad gaussian sigma in {s:?}"))
                    })?;
                    Self::gaussian(sigma)
                }
                None => Err(SffError::Config(format!(
                    "unknown phase distribution {s:?} \
                     (expected uniform_pi, cosine_of_uniform or gaussian[:sigma])"
                ))),
            },
        }
    }
}

impl Serialize for PhaseDistribution {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PhaseDistribution {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Haar-random `dim x dim` unitary (CUE).
///
/// QR of a complex Ginibre matrix, then each column of `Q` is multiplied by
/// `R_kk / |R_kk|`. The correction makes `R` positive on the diagonal, which
/// pins down the otherwise non-unique factorization so that `Q` is exactly
/// Haar distributed.
pub fn sample_cue(dim: usize, rng: &mut RngStream) -> Result<UnitaryMatrix> {
    if dim == 0 {
        return Err(SffError::InvalidDimension(
            "CUE dimension must be >= 1".into(),
        ));
    }
    let mut ginibre = Mat::<Complex64>::zeros(dim, dim);
    // column-major fill keeps the draw order independent of faer internals
    for j in 0..dim {
        for i in 0..dim {
            let re = rng.standard_normal();
            let im = rng.standard_normal();
            ginibre[(i, j)] = Complex64::new(re, im);
        }
    }
    let qr = ginibre.qr();
    let mut q = qr.compute_Q();
    let r = qr.R();
    for k in 0..dim {
        let rkk = r[(k, k)];
        let norm = rkk.norm();
        let phase = if norm > 0.0 {
            rkk / norm
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..dim {
            q[(i, k)] *= phase;
        }
    }
    Ok(UnitaryMatrix::from_mat_unchecked(q))
}

/// `count` i.i.d. coupling phases drawn from `dist`.
pub fn sample_phases(
    count: usize,
    dist: &PhaseDistribution,
    rng: &mut RngStream,
) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(SffError::Config("phase count must be >= 1".into()));
    }
    Ok((0..count).map(|_| dist.sample(rng)).collect())
}
