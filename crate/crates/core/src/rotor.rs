//! Two coupled kicked rotors quantized on the torus.
//!
//! With `1/h = N`, each rotor lives on an `N`-point position grid
//! `q_n = (n + theta_q) / N` with dual momenta `p_m = (m + theta_p) / N`.
//! The Bloch phases `theta_q`, `theta_p` set the quasi-periodic boundary
//! conditions; generic values break time-reversal invariance, and ensemble
//! averages are taken over them.

use std::f64::consts::PI;

use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bessel::j0;
use crate::error::{Result, SffError};
use crate::matrix::UnitaryMatrix;
use crate::random::RngStream;

pub const DEFAULT_K1: f64 = 9.7;
pub const DEFAULT_K2: f64 = 10.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotorParams {
    /// Hilbert space dimension of one rotor, `1/h`.
    pub n: usize,
    pub k1: f64,
    pub k2: f64,
    /// Coupling strength.
    pub gamma: f64,
    pub theta_q1: f64,
    pub theta_p1: f64,
    pub theta_q2: f64,
    pub theta_p2: f64,
}

impl RotorParams {
    /// Default kick strengths and zero boundary phases.
    pub fn new(n: usize, gamma: f64) -> Self {
        Self {
            n,
            k1: DEFAULT_K1,
            k2: DEFAULT_K2,
            gamma,
            theta_q1: 0.0,
            theta_p1: 0.0,
            theta_q2: 0.0,
            theta_p2: 0.0,
        }
    }

    /// Effective interaction strength `gamma N / (2 pi)`.
    pub fn epsilon(&self) -> f64 {
        self.gamma * self.n as f64 / (2.0 * PI)
    }

    /// Coupling strength giving the effective interaction `epsilon`.
    pub fn gamma_for_epsilon(n: usize, epsilon: f64) -> f64 {
        2.0 * PI * epsilon / n as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(SffError::InvalidDimension(format!(
                "rotor dimension must be >= 2, got {}",
                self.n
            )));
        }
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(SffError::Config(format!(
                "gamma must be finite and >= 0, got {}",
                self.gamma
            )));
        }
        for (name, t) in [
            ("theta_q1", self.theta_q1),
            ("theta_p1", self.theta_p1),
            ("theta_q2", self.theta_q2),
            ("theta_p2", self.theta_p2),
        ] {
            if !(0.0..1.0).contains(&t) {
                return Err(SffError::Config(format!("{name} must lie in [0, 1), got {t}")));
            }
        }
        Ok(())
    }

    /// Same rotor with all four Bloch phases redrawn uniformly on `[0, 1)`.
    /// The symmetric points `0` and `1/2` are rejected.
    pub fn with_random_boundary(&self, rng: &mut RngStream) -> Self {
        let mut draw = || loop {
            let t = rng.uniform();
            if t != 0.0 && t != 0.5 {
                break t;
            }
        };
        Self {
            theta_q1: draw(),
            theta_p1: draw(),
            theta_q2: draw(),
            theta_p2: draw(),
            ..self.clone()
        }
    }
}

/// Single kicked rotor `U_kin * U_kick` in the position basis.
pub fn build_rotor_subsystem(
    n: usize,
    kick: f64,
    theta_q: f64,
    theta_p: f64,
) -> Result<UnitaryMatrix> {
    if n < 2 {
        return Err(SffError::InvalidDimension(format!(
            "rotor dimension must be >= 2, got {n}"
        )));
    }
    let nf = n as f64;
    let norm = 1.0 / nf.sqrt();
    // <q_a|p_m> with both grids shifted by their Bloch phases
    let fourier = Mat::<Complex64>::from_fn(n, n, |a, m| {
        let arg = 2.0 * PI * (a as f64 + theta_q) * (m as f64 + theta_p) / nf;
        Complex64::from_polar(norm, arg)
    });
    let kinetic = Mat::<Complex64>::from_fn(n, n, |a, m| {
        let p = (m as f64 + theta_p) / nf;
        fourier[(a, m)] * Complex64::from_polar(1.0, -PI * nf * p * p)
    });
    let mut u = &kinetic * fourier.adjoint();
    for b in 0..n {
        let q = (b as f64 + theta_q) / nf;
        let kick_phase = Complex64::from_polar(1.0, -kick * nf / (2.0 * PI) * (2.0 * PI * q).cos());
        for a in 0..n {
            u[(a, b)] *= kick_phase;
        }
    }
    Ok(UnitaryMatrix::from_mat_unchecked(u))
}

/// Diagonal of the coupling operator on the `N^2` product grid, first rotor
/// slowest.
pub fn rotor_coupling_diagonal(
    n: usize,
    gamma: f64,
    theta_q1: f64,
    theta_q2: f64,
) -> Result<Vec<Complex64>> {
    if n < 2 {
        return Err(SffError::InvalidDimension(format!(
            "rotor dimension must be >= 2, got {n}"
        )));
    }
    let nf = n as f64;
    let strength = gamma * nf / (2.0 * PI);
    let mut diag = Vec::with_capacity(n * n);
    for a in 0..n {
        let q1 = (a as f64 + theta_q1) / nf;
        for b in 0..n {
            let q2 = (b as f64 + theta_q2) / nf;
            diag.push(Complex64::from_polar(1.0, -strength * (2.0 * PI * (q1 + q2)).cos()));
        }
    }
    Ok(diag)
}

pub fn build_rotor_coupling(
    n: usize,
    gamma: f64,
    theta_q1: f64,
    theta_q2: f64,
) -> Result<UnitaryMatrix> {
    let diag = rotor_coupling_diagonal(n, gamma, theta_q1, theta_q2)?;
    let d = diag.len();
    let mut m = Mat::<Complex64>::zeros(d, d);
    for (k, z) in diag.into_iter().enumerate() {
        m[(k, k)] = z;
    }
    Ok(UnitaryMatrix::from_mat_unchecked(m))
}

/// `U_c (U_1 ⊗ U_2)` for the boundary phases stored in `params`.
pub fn build_coupled_rotors(params: &RotorParams) -> Result<UnitaryMatrix> {
    params.validate()?;
    let u1 = build_rotor_subsystem(params.n, params.k1, params.theta_q1, params.theta_p1)?;
    let u2 = build_rotor_subsystem(params.n, params.k2, params.theta_q2, params.theta_p2)?;
    let diag = rotor_coupling_diagonal(params.n, params.gamma, params.theta_q1, params.theta_q2)?;
    Ok(UnitaryMatrix::kron(&[&u1, &u2]).left_scale_rows(&diag))
}

/// Random-matrix model of the rotors: `xi = cos(eta)`, so `chi = J_0(epsilon)`
/// and `sigma = 1/sqrt(2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotorTheory {
    pub epsilon: f64,
    pub chi_abs: f64,
    pub gamma_scaling: f64,
}

pub fn rotor_effective_theory(params: &RotorParams) -> RotorTheory {
    let epsilon = params.epsilon();
    RotorTheory {
        epsilon,
        chi_abs: j0(epsilon).abs(),
        // sigma * eps * N^{L/2} with L = 2
        gamma_scaling: std::f64::consts::FRAC_1_SQRT_2 * epsilon * params.n as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{eigenphases, wrap_phase};

    #[test]
    fn rejects_small_dimension() {
        assert!(build_rotor_subsystem(1, 9.7, 0.1, 0.2).is_err());
        assert!(build_rotor_coupling(1, 0.1, 0.0, 0.0).is_err());
        assert!(build_coupled_rotors(&RotorParams::new(1, 0.0)).is_err());
    }

    #[test]
    fn subsystem_is_unitary() {
        for &(n, k, tq, tp) in &[(2, 9.7, 0.3, 0.7), (17, 10.5, 0.11, 0.93), (64, 9.7, 0.5, 0.25)] {
            let u = build_rotor_subsystem(n, k, tq, tp).unwrap();
            assert!(u.unitarity_defect() < 1e-10, "n = {n}");
        }
    }

    #[test]
    fn free_rotor_spectrum_is_kinetic() {
        let n = 12;
        let tq = 0.37;
        let u = build_rotor_subsystem(n, 0.0, tq, 0.0).unwrap();
        let got = eigenphases(&u).unwrap().phases().to_vec();
        let want: Vec<f64> = (0..n)
            .map(|m| {
                let p = m as f64 / n as f64;
                -PI * n as f64 * p * p
            })
            .collect();
        // multiset match on the circle; m and n - m are exactly degenerate
        let mut used = vec![false; n];
        for w in want {
            let (k, dist) = got
                .iter()
                .enumerate()
                .filter(|(k, _)| !used[*k])
                .map(|(k, g)| (k, wrap_phase(g - w).abs()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            assert!(dist < 1e-8, "phase {w} unmatched ({dist:e})");
            used[k] = true;
        }
    }

    #[test]
    fn coupling_zero_is_identity() {
        let c = build_rotor_coupling(5, 0.0, 0.3, 0.6).unwrap();
        for i in 0..25 {
            for j in 0..25 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_eq!(c.get(i, j), Complex64::new(want, 0.0));
            }
        }
    }

    #[test]
    fn coupling_entries_unimodular() {
        let diag = rotor_coupling_diagonal(9, 3.3, 0.41, 0.77).unwrap();
        assert_eq!(diag.len(), 81);
        assert!(diag.iter().all(|z| (z.norm() - 1.0).abs() < 1e-14));
    }

    #[test]
    fn coupling_two_site_table() {
        // N = 2, theta = 0: q in {0, 1/2}, so q1 + q2 in {0, 1/2, 1/2, 1}
        // and cos(2 pi (q1 + q2)) = [1, -1, -1, 1].
        let gamma = 1.3;
        let diag = rotor_coupling_diagonal(2, gamma, 0.0, 0.0).unwrap();
        let s = gamma * 2.0 / (2.0 * PI);
        let cosines = [1.0, -1.0, -1.0, 1.0];
        for (z, c) in diag.iter().zip(cosines) {
            assert!((z - Complex64::from_polar(1.0, -s * c)).norm() < 1e-15);
        }
        // shifted grid: theta_q1 = 1/4, theta_q2 = 0 gives q1 in {1/8, 5/8}
        let diag = rotor_coupling_diagonal(2, gamma, 0.25, 0.0).unwrap();
        let q1 = [0.125, 0.625];
        let q2 = [0.0, 0.5];
        for a in 0..2 {
            for b in 0..2 {
                let want = Complex64::from_polar(1.0, -s * (2.0 * PI * (q1[a] + q2[b])).cos());
                assert!((diag[2 * a + b] - want).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn effective_theory() {
        let t = rotor_effective_theory(&RotorParams::new(16, 0.0));
        assert_eq!((t.epsilon, t.chi_abs, t.gamma_scaling), (0.0, 1.0, 0.0));

        for x in [0.25, 1.0, 3.5] {
            let p = RotorParams::new(64, 2.0 * PI * x / 64.0);
            assert!((p.epsilon() - x).abs() < 1e-14);
        }

        let mut p = RotorParams::new(32, 0.0);
        p.gamma = RotorParams::gamma_for_epsilon(32, 2.404825557695773);
        let t = rotor_effective_theory(&p);
        assert!(t.chi_abs < 1e-8);
        assert!((t.gamma_scaling - 2.404825557695773 * 32.0 / 2f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn coupled_rotors_unitary_and_boundary_draw() {
        let base = RotorParams::new(8, 0.4);
        let p = base.with_random_boundary(&mut RngStream::new(3, 0));
        p.validate().unwrap();
        assert_ne!(p.theta_q1, p.theta_q2);
        let u = build_coupled_rotors(&p).unwrap();
        assert_eq!(u.dim(), 64);
        assert!(u.unitarity_defect() < 1e-10);
        let mut bad = base.clone();
        bad.theta_p2 = 1.0;
        assert!(build_coupled_rotors(&bad).is_err());
    }
}
