//! Closed-form predictions for the spectral form factor of coupled chaotic
//! subsystems.
//!
//! Times are integers `t >= 1` or rescaled `tau = t / N^L`. The subsystem
//! Heisenberg time is `t_SH = N` (`tau_SH = N^{1-L}`), the full one
//! `t_H = N^L` (`tau_H = 1`).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::bessel::j0;
use crate::error::{Result, SffError};
use crate::estimator::{factorial, kappa_from_moment, Smoothing};
use crate::random::PhaseDistribution;

/// `|<exp(i eps xi)>|` for the phase distribution.
pub fn chi_abs(dist: &PhaseDistribution, epsilon: f64) -> f64 {
    match *dist {
        PhaseDistribution::UniformPi => {
            if epsilon == 0.0 {
                1.0
            } else {
                (sin_pi(epsilon) / (PI * epsilon)).abs()
            }
        }
        PhaseDistribution::CosineOfUniform => j0(epsilon).abs(),
        PhaseDistribution::Gaussian { sigma } => (-0.5 * sigma * sigma * epsilon * epsilon).exp(),
    }
}

/// `sin(pi x)` with exact zeros at the integers.
fn sin_pi(x: f64) -> f64 {
    let r = x.abs() % 2.0;
    let (r, sign) = if r > 1.0 { (r - 1.0, -x.signum()) } else { (r, x.signum()) };
    if r == 0.0 || r == 1.0 {
        return 0.0;
    }
    sign * (PI * r.min(1.0 - r)).sin()
}

/// Moment `m!(min{t, M})^m` of a single CUE(M).
pub fn cue_sff_moment(dim: usize, m: u32, t: usize) -> f64 {
    factorial(m) * (t.min(dim) as f64).powi(m as i32)
}

/// Decay weight `|chi|^{2t}`.
pub fn decay_weight(chi: f64, t: usize) -> f64 {
    chi.powf(2.0 * t as f64)
}

/// Convex combination `w (min{t,N})^L + (1 - w) min{t, N^L}` with `w = chi^{2t}`.
pub fn sff_prediction_chi(n: usize, l: u32, chi: f64, t: usize) -> f64 {
    let w = decay_weight(chi, t);
    let dim = n.pow(l);
    w * (t.min(n) as f64).powi(l as i32) + (1.0 - w) * t.min(dim) as f64
}

/// `K(t)`, exact at large `N` for `t < N` and extended through both plateaus.
pub fn sff_prediction(n: usize, l: u32, epsilon: f64, dist: &PhaseDistribution, t: usize) -> f64 {
    sff_prediction_chi(n, l, chi_abs(dist, epsilon), t)
}

#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct ScalingGamma(pub f64);

/// `Gamma = sigma eps N^{L/2}`.
pub fn scaling_gamma(n: usize, l: u32, epsilon: f64, dist: &PhaseDistribution) -> ScalingGamma {
    ScalingGamma(dist.sigma() * epsilon * (n as f64).powf(l as f64 / 2.0))
}

/// The `epsilon` giving scaling parameter `gamma`.
pub fn epsilon_for_gamma(gamma: f64, n: usize, l: u32, dist: &PhaseDistribution) -> f64 {
    gamma / (dist.sigma() * (n as f64).powf(l as f64 / 2.0))
}

pub fn tau_sh(n: usize, l: u32) -> f64 {
    (n as f64).powi(1 - l as i32)
}

/// `exp(-Gamma^2 tau) min(tau/tau_SH, 1)^L + (1 - exp(-Gamma^2 tau)) min(tau, 1)`.
pub fn scaled_sff_prediction(gamma: f64, l: u32, n: usize, tau: f64) -> f64 {
    let w = (-gamma * gamma * tau).exp();
    w * (tau / tau_sh(n, l)).min(1.0).powi(l as i32) + (1.0 - w) * tau.min(1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThoulessTime {
    pub t: f64,
    pub tau: f64,
}

/// `t_Th = L ln N / (2 |ln chi|)`, defined for `0 < chi < 1`.
pub fn thouless_time_chi(n: usize, l: u32, chi: f64) -> Result<ThoulessTime> {
    if !(chi > 0.0 && chi < 1.0) {
        return Err(SffError::UndefinedRegime(format!(
            "Thouless time needs 0 < |chi| < 1, got {chi}"
        )));
    }
    let t = l as f64 * (n as f64).ln() / (2.0 * chi.ln().abs());
    Ok(ThoulessTime {
        t,
        tau: t / (n as f64).powi(l as i32),
    })
}

pub fn thouless_time(
    n: usize,
    l: u32,
    epsilon: f64,
    dist: &PhaseDistribution,
) -> Result<ThoulessTime> {
    thouless_time_chi(n, l, chi_abs(dist, epsilon))
}

/// Which first coefficient to use in the bipartite second moment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Moment2Form {
    /// `(1 - |chi|^{2t})^2`, the reading consistent with both limits.
    #[default]
    DecayWeight,
    /// `(1 - |chi|)^2` as typeset in the original derivation; kept for
    /// comparison against Monte Carlo data.
    Printed,
}

/// Second moment `K_2(t)` for `L = 2` with `p = chi^{2t}`:
/// `(1-p)^2 2 min(t,N^2)^2 + p^2 (2 min(t,N)^2)^2 + 4 p (1-p) min(t,N^2) min(t,N)^2`.
pub fn moment2_prediction_chi(n: usize, chi: f64, t: usize, form: Moment2Form) -> f64 {
    let p = decay_weight(chi, t);
    let full = t.min(n * n) as f64;
    let sub = t.min(n) as f64;
    let first = match form {
        Moment2Form::DecayWeight => (1.0 - p).powi(2),
        Moment2Form::Printed => (1.0 - chi).powi(2),
    };
    first * 2.0 * full * full + p * p * (2.0 * sub * sub).powi(2) + 4.0 * p * (1.0 - p) * full * sub * sub
}

pub fn moment2_prediction(n: usize, epsilon: f64, dist: &PhaseDistribution, t: usize) -> f64 {
    moment2_prediction_chi(n, chi_abs(dist, epsilon), t, Moment2Form::DecayWeight)
}

/// `1 - Gamma^2 tau exp(-(Gamma tau)^2)`, valid for `tau > tau_SH` and small `Gamma`.
pub fn perturbative_sff(gamma: f64, tau: f64) -> f64 {
    assert!(tau > 0.0, "perturbative_sff needs tau > 0, got {tau}");
    1.0 - gamma * gamma * tau * (-(gamma * tau).powi(2)).exp()
}

/// `t_E = ln N / (2 ln(k1 k2 / 4))`.
pub fn ehrenfest_time(n: usize, k1: f64, k2: f64) -> Result<f64> {
    let stretch = k1 * k2 / 4.0;
    if !(stretch > 1.0) {
        return Err(SffError::UndefinedRegime(format!(
            "Ehrenfest estimate needs k1 k2 > 4, got {}",
            k1 * k2
        )));
    }
    Ok((n as f64).ln() / (2.0 * stretch.ln()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    ExactExtended,
    Perturbative,
}

/// The coupling model behind a prediction: `N`, `L` and `|chi(eps)|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CouplingModel {
    pub n: usize,
    pub l: u32,
    pub epsilon: f64,
    pub dist: PhaseDistribution,
}

impl CouplingModel {
    pub fn dim(&self) -> usize {
        self.n.pow(self.l)
    }

    pub fn chi(&self) -> f64 {
        chi_abs(&self.dist, self.epsilon)
    }

    pub fn gamma(&self) -> f64 {
        scaling_gamma(self.n, self.l, self.epsilon, &self.dist).0
    }

    /// Predicted raw moment `K_m(t)` where a closed form exists:
    /// `m = 1` for any `L`, `m = 2` for `L = 2`.
    pub fn moment(&self, m: u32, t: usize) -> Option<f64> {
        match (m, self.l) {
            (1, _) => Some(sff_prediction_chi(self.n, self.l, self.chi(), t)),
            (2, 2) => Some(moment2_prediction_chi(self.n, self.chi(), t, Moment2Form::DecayWeight)),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryMeta {
    pub gamma: f64,
    pub tau_sh: f64,
    pub tau_h: f64,
    pub tau_th: Option<f64>,
    pub regime: Regime,
    /// Plateaus are an extension beyond `t_SH`; expect deviations near `tau_H`.
    pub plateau_extension: bool,
}

/// Sampled prediction `kappa_m(tau)` on `t = 1..=tmax`, `None` where the
/// prediction does not apply.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryCurve {
    pub tau: Vec<f64>,
    pub orders: Vec<u32>,
    /// Row-major over `(order, t)`.
    pub kappa: Vec<Option<f64>>,
    pub meta: TheoryMeta,
}

impl TheoryCurve {
    /// Convex-combination prediction (and its `L = 2` second moment),
    /// optionally passed through the same moving average as the data.
    pub fn exact(model: &CouplingModel, tmax: usize, orders: &[u32], smoothing: &Smoothing) -> Self {
        let dim = model.dim();
        let mut kappa = Vec::with_capacity(tmax * orders.len());
        for &m in orders {
            match (1..=tmax).map(|t| model.moment(m, t)).collect::<Option<Vec<f64>>>() {
                Some(raw) => kappa.extend(
                    smoothing
                        .apply(&raw)
                        .into_iter()
                        .map(|k| Some(kappa_from_moment(k, m, dim))),
                ),
                None => kappa.extend(std::iter::repeat_n(None, tmax)),
            }
        }
        Self {
            tau: (1..=tmax).map(|t| t as f64 / dim as f64).collect(),
            orders: orders.to_vec(),
            kappa,
            meta: Self::meta(model, Regime::ExactExtended),
        }
    }

    /// Perturbative `kappa(tau)` for `m = 1` and `tau > tau_SH`.
    pub fn perturbative(model: &CouplingModel, tmax: usize, orders: &[u32], smoothing: &Smoothing) -> Self {
        let dim = model.dim();
        let gamma = model.gamma();
        let tsh = tau_sh(model.n, model.l);
        let tau: Vec<f64> = (1..=tmax).map(|t| t as f64 / dim as f64).collect();
        let curve: Vec<f64> = tau.iter().map(|&x| perturbative_sff(gamma, x)).collect();
        let smoothed = smoothing.apply(&curve);
        let mut kappa = Vec::with_capacity(tmax * orders.len());
        for &m in orders {
            for (k, &x) in tau.iter().enumerate() {
                kappa.push((m == 1 && x > tsh).then_some(smoothed[k]));
            }
        }
        Self {
            tau,
            orders: orders.to_vec(),
            kappa,
            meta: Self::meta(model, Regime::Perturbative),
        }
    }

    fn meta(model: &CouplingModel, regime: Regime) -> TheoryMeta {
        TheoryMeta {
            gamma: model.gamma(),
            tau_sh: tau_sh(model.n, model.l),
            tau_h: 1.0,
            tau_th: thouless_time_chi(model.n, model.l, model.chi()).ok().map(|t| t.tau),
            regime,
            plateau_extension: regime == Regime::ExactExtended,
        }
    }

    pub fn kappa(&self, m: u32) -> &[Option<f64>] {
        let oi = self
            .orders
            .iter()
            .position(|&o| o == m)
            .unwrap_or_else(|| panic!("order {m} not in theory curve"));
        &self.kappa[oi * self.tau.len()..(oi + 1) * self.tau.len()]
    }
}
