//! Extended random matrix transition ensemble: `U = U_c(eps) (U_1 ⊗ ... ⊗ U_L)`.

use std::f64::consts::PI;

use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SffError};
use crate::matrix::UnitaryMatrix;
use crate::random::{sample_cue, sample_phases, PhaseDistribution, RngStream};

/// Largest total dimension `N^L` accepted unless a budget is given explicitly.
pub const DEFAULT_DIM_BUDGET: usize = 1 << 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleParams {
    /// Subsystem dimension.
    pub n: usize,
    /// Number of subsystems.
    pub l: u32,
    /// Interaction strength.
    pub epsilon: f64,
    pub dist: PhaseDistribution,
}

impl EnsembleParams {
    pub fn new(n: usize, l: u32, epsilon: f64, dist: PhaseDistribution) -> Result<Self> {
        let p = Self { n, l, epsilon, dist };
        p.validate(DEFAULT_DIM_BUDGET)?;
        Ok(p)
    }

    pub fn validate(&self, budget: usize) -> Result<()> {
        if self.n == 0 {
            return Err(SffError::InvalidDimension("N must be >= 1".into()));
        }
        if self.l == 0 {
            return Err(SffError::InvalidDimension("L must be >= 1".into()));
        }
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return Err(SffError::Config(format!(
                "epsilon must be finite and >= 0, got {}",
                self.epsilon
            )));
        }
        total_dim(self.n, self.l, budget).map(|_| ())
    }

    /// Hilbert space dimension `N^L`.
    pub fn dim(&self) -> usize {
        self.n.pow(self.l)
    }
}

/// `base^power`, rejecting overflow and anything above `budget`.
pub fn total_dim(base: usize, power: u32, budget: usize) -> Result<usize> {
    match base.checked_pow(power) {
        Some(d) if d <= budget => Ok(d),
        _ => Err(SffError::Budget {
            base,
            power,
            budget,
        }),
    }
}

/// Draws one realization: fresh CUE(N) factors, then `N^L` fresh phases.
pub fn build_rmte(params: &EnsembleParams, rng: &mut RngStream) -> Result<UnitaryMatrix> {
    params.validate(DEFAULT_DIM_BUDGET)?;
    let factors = (0..params.l)
        .map(|_| sample_cue(params.n, rng))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&UnitaryMatrix> = factors.iter().collect();
    let product = UnitaryMatrix::kron(&refs);
    let xi = sample_phases(params.dim(), &params.dist, rng)?;
    let coupling: Vec<Complex64> = xi
        .iter()
        .map(|x| Complex64::from_polar(1.0, params.epsilon * x))
        .collect();
    Ok(product.left_scale_rows(&coupling))
}

/// Quasi-energies of one realization, each in `(-pi, pi]`.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenphaseSpectrum {
    phases: Vec<f64>,
}

impl EigenphaseSpectrum {
    /// Wraps phases after mapping each into `(-pi, pi]`.
    pub fn from_phases(phases: impl IntoIterator<Item = f64>) -> Self {
        Self {
            phases: phases.into_iter().map(wrap_phase).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.phases.len()
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    /// `sum_j exp(i phi_j)`.
    pub fn trace(&self) -> Complex64 {
        self.phases.iter().map(|&p| Complex64::from_polar(1.0, p)).sum()
    }
}

/// Maps an angle into `(-pi, pi]`.
pub fn wrap_phase(phi: f64) -> f64 {
    let mut p = phi.rem_euclid(2.0 * PI);
    if p > PI {
        p -= 2.0 * PI;
    }
    if p <= -PI {
        p += 2.0 * PI;
    }
    p
}

/// How [`eigenphases_with`] diagonalizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum EigenRoute {
    /// Dense non-Hermitian eigensolver (Hessenberg + Schur).
    General,
    /// Exploits normality: diagonalize the Hermitian part `(U + U^dagger)/2`,
    /// read each phase off the Rayleigh quotient `v^dagger U v`, and resolve
    /// clusters of the Hermitian spectrum (where `phi` and `-phi` meet) with a
    /// small general eigenproblem on the cluster subspace. Falls back to
    /// [`EigenRoute::General`] when any consistency check fails.
    #[default]
    Unitary,
}

/// Cluster width on the Hermitian spectrum, in units of `|cos phi| <= 1`.
const CLUSTER_GAP: f64 = 1e-6;
/// Accepted shortfall of `|v^dagger U v|` below 1 for an isolated eigenvector.
const RAYLEIGH_TOL: f64 = 1e-8;
/// Trace contract: `|sum_j exp(i phi_j) - tr U| <= TRACE_TOL * dim`.
pub const TRACE_TOL: f64 = 1e-8;

pub fn eigenphases(u: &UnitaryMatrix) -> Result<EigenphaseSpectrum> {
    eigenphases_with(u, EigenRoute::default())
}

pub fn eigenphases_with(u: &UnitaryMatrix, route: EigenRoute) -> Result<EigenphaseSpectrum> {
    let tr = u.trace();
    let tol = TRACE_TOL * u.dim() as f64;
    if route == EigenRoute::Unitary {
        if let Some(spec) = unitary_route(u.as_mat()) {
            if (spec.trace() - tr).norm() <= tol {
                return Ok(spec);
            }
        }
    }
    let spec = general_route(u.as_mat())?;
    let err = (spec.trace() - tr).norm();
    if !(err <= tol) {
        return Err(SffError::Eigensolver(format!(
            "eigenphases inconsistent with the trace: |sum exp(i phi) - tr U| = {err:e}"
        )));
    }
    Ok(spec)
}

fn general_route(m: &Mat<Complex64>) -> Result<EigenphaseSpectrum> {
    let vals = m
        .eigenvalues()
        .map_err(|e| SffError::Eigensolver(format!("{e:?}")))?;
    Ok(EigenphaseSpectrum::from_phases(vals.iter().map(|z| z.arg())))
}

fn unitary_route(m: &Mat<Complex64>) -> Option<EigenphaseSpectrum> {
    let d = m.nrows();
    let herm = Mat::<Complex64>::from_fn(d, d, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5);
    let evd = herm.self_adjoint_eigen(faer::Side::Lower).ok()?;
    let vecs = evd.U();
    let vals: Vec<f64> = (0..d).map(|k| evd.S()[k].re).collect();
    let uv = m * vecs;

    let mut phases = Vec::with_capacity(d);
    let mut start = 0;
    while start < d {
        let mut end = start + 1;
        while end < d && vals[end] - vals[end - 1] < CLUSTER_GAP {
            end += 1;
        }
        if end - start == 1 {
            let mut z = Complex64::new(0.0, 0.0);
            for i in 0..d {
                z += vecs[(i, start)].conj() * uv[(i, start)];
            }
            if z.norm() < 1.0 - RAYLEIGH_TOL {
                return None;
            }
            phases.push(z.arg());
        } else {
            let k = end - start;
            let block = vecs.subcols(start, k);
            let proj = block.adjoint() * uv.subcols(start, k);
            let small = proj.eigenvalues().ok()?;
            for z in small {
                if (z.norm() - 1.0).abs() > RAYLEIGH_TOL {
                    return None;
                }
                phases.push(z.arg());
            }
        }
        start = end;
    }
    Some(EigenphaseSpectrum::from_phases(phases))
}

/// `tr(U^t)` for `t = 1..=tmax`.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceSequence {
    values: Vec<Complex64>,
}

impl TraceSequence {
    pub fn new(values: Vec<Complex64>) -> Result<Self> {
        if values.is_empty() {
            return Err(SffError::Shape("trace sequence must have tmax >= 1".into()));
        }
        Ok(Self { values })
    }

    pub fn tmax(&self) -> usize {
        self.values.len()
    }

    /// Value at time `t`, `1 <= t <= tmax`.
    pub fn at(&self, t: usize) -> Complex64 {
        assert!(t >= 1 && t <= self.values.len(), "t = {t} out of range");
        self.values[t - 1]
    }

    /// Values for `t = 1..=tmax`, in order.
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
}

/// `sum_j exp(i t phi_j)` for `t = 1..=tmax` by running phase rotation,
/// `O(dim * tmax)`.
pub fn trace_powers(spec: &EigenphaseSpectrum, tmax: usize) -> Result<TraceSequence> {
    if tmax == 0 {
        return Err(SffError::Shape("tmax must be >= 1".into()));
    }
    let step: Vec<Complex64> = spec
        .phases()
        .iter()
        .map(|&p| Complex64::from_polar(1.0, p))
        .collect();
    let mut cur = step.clone();
    let mut values = Vec::with_capacity(tmax);
    for t in 1..=tmax {
        if t > 1 {
            for (c, s) in cur.iter_mut().zip(&step) {
                *c *= s;
            }
        }
        values.push(cur.iter().sum());
    }
    TraceSequence::new(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sorted(mut v: Vec<f64>) -> Vec<f64> {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }

    #[test]
    fn wrap_phase_range() {
        assert_eq!(wrap_phase(PI), PI);
        assert_eq!(wrap_phase(-PI), PI);
        assert!((wrap_phase(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert_eq!(wrap_phase(0.0), 0.0);
        for k in -50..50 {
            let p = wrap_phase(0.37 * k as f64);
            assert!(p > -PI && p <= PI);
        }
    }

    #[test]
    fn budget_guard() {
        assert!(EnsembleParams::new(2, 17, 0.0, PhaseDistribution::UniformPi).is_err());
        assert!(EnsembleParams::new(2, 16, 0.0, PhaseDistribution::UniformPi).is_ok());
        assert!(total_dim(usize::MAX, 2, usize::MAX).is_err());
        assert!(EnsembleParams::new(0, 2, 0.0, PhaseDistribution::UniformPi).is_err());
        assert!(EnsembleParams::new(3, 0, 0.0, PhaseDistribution::UniformPi).is_err());
        assert!(EnsembleParams::new(3, 2, -0.1, PhaseDistribution::UniformPi).is_err());
    }

    #[test]
    fn identity_phases_are_zero() {
        for route in [EigenRoute::General, EigenRoute::Unitary] {
            let spec = eigenphases_with(&UnitaryMatrix::identity(6), route).unwrap();
            assert_eq!(spec.dim(), 6);
            assert!(spec.phases().iter().all(|p| p.abs() < 1e-14));
        }
    }

    #[test]
    fn diagonal_phases_recovered() {
        let thetas = [0.1, -2.0, 3.0, 4.0, -3.5, PI];
        let u = UnitaryMatrix::from_phases(&thetas);
        let want = sorted(thetas.iter().map(|&t| wrap_phase(t)).collect());
        for route in [EigenRoute::General, EigenRoute::Unitary] {
            let got = sorted(eigenphases_with(&u, route).unwrap().phases().to_vec());
            for (g, w) in got.iter().zip(&want) {
                // pi and -pi are the same eigenvalue; compare on the circle
                let diff = wrap_phase(g - w).abs();
                assert!(diff < 1e-12, "{g} vs {w}");
            }
        }
    }

    #[test]
    fn conjugate_pairs_resolved() {
        // cos(phi) degenerate for phi and -phi
        let u = UnitaryMatrix::from_phases(&[0.7, -0.7, 2.0, -2.0, 0.0]);
        let got = sorted(eigenphases_with(&u, EigenRoute::Unitary).unwrap().phases().to_vec());
        let want = sorted(vec![0.7, -0.7, 2.0, -2.0, 0.0]);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-12);
        }
    }

    #[test]
    fn single_phase_powers_of_i() {
        let spec = EigenphaseSpectrum::from_phases([PI / 2.0]);
        let tr = trace_powers(&spec, 4).unwrap();
        let want = [
            Complex64::new(0.0, 1.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, -1.0),
            Complex64::new(1.0, 0.0),
        ];
        for (g, w) in tr.values().iter().zip(&want) {
            assert!((g - w).norm() < 1e-12);
        }
    }

    #[test]
    fn identity_traces_equal_dim() {
        let spec = EigenphaseSpectrum::from_phases(vec![0.0; 9]);
        let tr = trace_powers(&spec, 20).unwrap();
        assert!(tr.values().iter().all(|z| (z - Complex64::new(9.0, 0.0)).norm() == 0.0));
        assert!(trace_powers(&spec, 0).is_err());
    }

    #[test]
    fn epsilon_zero_is_plain_product() {
        let params = EnsembleParams::new(3, 2, 0.0, PhaseDistribution::UniformPi).unwrap();
        let u = build_rmte(&params, &mut RngStream::new(77, 2)).unwrap();
        let mut rng = RngStream::new(77, 2);
        let u1 = sample_cue(3, &mut rng).unwrap();
        let u2 = sample_cue(3, &mut rng).unwrap();
        let k = UnitaryMatrix::kron(&[&u1, &u2]);
        for i in 0..9 {
            for j in 0..9 {
                assert_eq!(u.get(i, j), k.get(i, j));
            }
        }
    }

    #[test]
    fn rmte_is_unitary() {
        let params = EnsembleParams::new(4, 3, 1.3, PhaseDistribution::CosineOfUniform).unwrap();
        let u = build_rmte(&params, &mut RngStream::new(1, 0)).unwrap();
        assert_eq!(u.dim(), 64);
        assert!(u.unitarity_defect() < 1e-10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn rmte_is_unitary_and_traces_are_bounded(
            n in 2usize..6, l in 1u32..3, eps in 0.0f64..3.0, seed in any::<u64>(),
        ) {
            let params = EnsembleParams::new(n, l, eps, PhaseDistribution::UniformPi).unwrap();
            let u = build_rmte(&params, &mut RngStream::new(seed, 0)).unwrap();
            prop_assert!(u.unitarity_defect() < 1e-12);
            let spec = eigenphases(&u).unwrap();
            prop_assert_eq!(spec.dim(), params.dim());
            prop_assert!((spec.trace() - u.trace()).norm() < 1e-9);
            let tr = trace_powers(&spec, 40).unwrap();
            let bound = params.dim() as f64 * (1.0 + 1e-12);
            prop_assert!(tr.values().iter().all(|z| z.norm() <= bound));
        }
    }
}
