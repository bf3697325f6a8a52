//! Dense complex unitary matrices.

use faer::Mat;
use num_complex::Complex64;

use crate::error::{Result, SffError};

/// Tolerance on `max |U^dagger U - 1|` accepted by [`UnitaryMatrix::new`].
pub const UNITARITY_TOL: f64 = 1e-10;

/// A dense square complex matrix that is unitary to within [`UNITARITY_TOL`].
///
/// Composite operators built by [`UnitaryMatrix::kron`] use row-major
/// product indexing with the first factor varying slowest, i.e. the basis
/// state `|i_1 ... i_L>` sits at index `((i_1 * N + i_2) * N + ...) + i_L`.
#[derive(Clone, Debug)]
pub struct UnitaryMatrix {
    inner: Mat<Complex64>,
}

impl UnitaryMatrix {
    /// Wraps `mat` after checking that it is square and unitary.
    pub fn new(mat: Mat<Complex64>) -> Result<Self> {
        if mat.nrows() == 0 || mat.nrows() != mat.ncols() {
            return Err(SffError::InvalidDimension(format!(
                "expected a non-empty square matrix, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        let u = Self { inner: mat };
        let defect = u.unitarity_defect();
        if !(defect < UNITARITY_TOL) {
            return Err(SffError::InvalidDimension(format!(
                "matrix is not unitary: max |U^dagger U - 1| = {defect:e}"
            )));
        }
        Ok(u)
    }

    /// Skips the unitarity check. Callers guarantee unitarity by construction.
    pub(crate) fn from_mat_unchecked(mat: Mat<Complex64>) -> Self {
        debug_assert_eq!(mat.nrows(), mat.ncols());
        Self { inner: mat }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_mat_unchecked(Mat::identity(dim, dim))
    }

    /// Diagonal unitary with entries `exp(i * phases[k])`.
    pub fn from_phases(phases: &[f64]) -> Self {
        let d = phases.len();
        let mut m = Mat::<Complex64>::zeros(d, d);
        for (k, &p) in phases.iter().enumerate() {
            m[(k, k)] = Complex64::from_polar(1.0, p);
        }
        Self::from_mat_unchecked(m)
    }

    pub fn dim(&self) -> usize {
        self.inner.nrows()
    }

    pub fn as_mat(&self) -> &Mat<Complex64> {
        &self.inner
    }

    pub fn into_mat(self) -> Mat<Complex64> {
        self.inner
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.inner[(row, col)]
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim()).map(|k| self.inner[(k, k)]).sum()
    }

    /// `max_{ij} |(U^dagger U - 1)_{ij}|`.
    pub fn unitarity_defect(&self) -> f64 {
        let prod = self.inner.adjoint() * &self.inner;
        let d = self.dim();
        let mut worst = 0.0f64;
        for j in 0..d {
            for i in 0..d {
                let target = if i == j { 1.0 } else { 0.0 };
                let dev = (prod[(i, j)] - Complex64::new(target, 0.0)).norm();
                if !(dev <= worst) {
                    worst = dev;
                }
            }
        }
        worst
    }

    pub fn matmul(&self, rhs: &UnitaryMatrix) -> UnitaryMatrix {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch in matmul");
        Self::from_mat_unchecked(&self.inner * &rhs.inner)
    }

    /// Multiplies row `k` by `diag[k]`, i.e. returns `D * U` for `D = diag(diag)`.
    pub fn left_scale_rows(mut self, diag: &[Complex64]) -> Self {
        assert_eq!(diag.len(), self.dim(), "diagonal length mismatch");
        let d = self.dim();
        for j in 0..d {
            for (i, &z) in diag.iter().enumerate() {
                self.inner[(i, j)] *= z;
            }
        }
        self
    }

    /// Kronecker product `factors[0] ⊗ factors[1] ⊗ ...` with the first
    /// factor as the slowest-varying index.
    pub fn kron(factors: &[&UnitaryMatrix]) -> UnitaryMatrix {
        assert!(!factors.is_empty(), "kron of an empty factor list");
        let mut acc = factors[0].inner.clone();
        for f in &factors[1..] {
            acc = kron_pair(&acc, &f.inner);
        }
        Self::from_mat_unchecked(acc)
    }

    /// `U^power` by repeated multiplication. Only meant for checks.
    pub fn power(&self, power: u32) -> UnitaryMatrix {
        let mut acc = Self::identity(self.dim());
        for _ in 0..power {
            acc = acc.matmul(self);
        }
        acc
    }
}

fn kron_pair(a: &Mat<Complex64>, b: &Mat<Complex64>) -> Mat<Complex64> {
    let (ra, ca) = (a.nrows(), a.ncols());
    let (rb, cb) = (b.nrows(), b.ncols());
    Mat::from_fn(ra * rb, ca * cb, |i, j| a[(i / rb, j / cb)] * b[(i % rb, j % cb)])
}
