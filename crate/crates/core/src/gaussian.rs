//! Gaussian states of `n` bosonic modes.
//!
//! A state is stored as a mean vector and a covariance matrix in `xpxp` order
//! (`x1, y1, x2, y2, ...`). Quadratures are normalized so that the vacuum has
//! variance 1 in every quadrature. With that convention a covariance matrix is
//! physical when `cov + iΩ ≥ 0`, equivalently when every symplectic eigenvalue
//! is at least 1.
//!
//! All transforms return new states and re-symmetrize the covariance matrix.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};

use crate::error::{invalid, Error, Result};

/// Tolerance used by the physicality check on symplectic eigenvalues.
pub const PHYSICALITY_TOL: f64 = 1e-9;

/// Measured variances below this are treated as deterministic.
pub const DEGENERATE_VARIANCE: f64 = 1e-12;

/// Converts a squeezing level in dB into the squeezing parameter `r`.
pub fn db_to_squeezing(db: f64) -> f64 {
    std::f64::consts::LN_10 * db / 20.0
}

/// Inverse of [`db_to_squeezing`].
pub fn squeezing_to_db(r: f64) -> f64 {
    20.0 * r / std::f64::consts::LN_10
}

/// One of the two quadratures of a mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quadrature {
    /// Amplitude quadrature `X = a + a†`.
    X,
    /// Phase quadrature `Y = i(a† - a)`.
    Y,
}

impl Quadrature {
    fn offset(self) -> usize {
        match self {
            Quadrature::X => 0,
            Quadrature::Y => 1,
        }
    }
}

/// Index of `quadrature` of `mode` in the `xpxp` vector.
pub fn quadrature_index(mode: usize, quadrature: Quadrature) -> usize {
    2 * mode + quadrature.offset()
}

/// The symplectic form `Ω = ⊕ [[0, 1], [-1, 0]]` for `n` modes.
pub fn symplectic_form(n_modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for k in 0..n_modes {
        omega[(2 * k, 2 * k + 1)] = 1.0;
        omega[(2 * k + 1, 2 * k)] = -1.0;
    }
    omega
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Mean vector and covariance matrix of an `n`-mode Gaussian state.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianState {
    /// Builds a state from its first and second moments. The covariance is
    /// symmetrized; physicality is not checked here (see
    /// [`GaussianState::check_physical`]).
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let dim = mean.len();
        if dim == 0 || dim % 2 == 1 {
            return Err(invalid("mean", format!("length {dim} is not 2n with n ≥ 1")));
        }
        if cov.nrows() != dim || cov.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: cov.nrows().max(cov.ncols()),
            });
        }
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(invalid("cov", "non-finite entry"));
        }
        Ok(Self {
            mean,
            cov: symmetrize(&cov),
        })
    }

    /// The `n`-mode vacuum: zero mean, identity covariance.
    pub fn vacuum(n_modes: usize) -> Self {
        assert!(n_modes >= 1, "a state needs at least one mode");
        Self {
            mean: DVector::zeros(2 * n_modes),
            cov: DMatrix::identity(2 * n_modes, 2 * n_modes),
        }
    }

    /// Single-mode coherent state with quadrature means `(x, y)`.
    pub fn coherent(x: f64, y: f64) -> Self {
        Self {
            mean: DVector::from_vec(vec![x, y]),
            cov: DMatrix::identity(2, 2),
        }
    }

    /// Single-mode Gaussian state with diagonal covariance.
    pub fn single_mode(mean: [f64; 2], var: [f64; 2]) -> Result<Self> {
        Self::new(
            DVector::from_vec(mean.to_vec()),
            DMatrix::from_diagonal(&DVector::from_vec(var.to_vec())),
        )
    }

    /// Single-mode thermal state with variance `v` in both quadratures.
    pub fn thermal(v: f64) -> Result<Self> {
        Self::single_mode([0.0, 0.0], [v, v])
    }

    pub fn n_modes(&self) -> usize {
        self.mean.len() / 2
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.n_modes() {
            Err(Error::ModeOutOfRange {
                mode,
                n_modes: self.n_modes(),
            })
        } else {
            Ok(())
        }
    }

    /// Joint state of `self` followed by `other` (no correlations).
    pub fn direct_sum(&self, other: &GaussianState) -> GaussianState {
        let (d1, d2) = (self.mean.len(), other.mean.len());
        let mut mean = DVector::zeros(d1 + d2);
        mean.rows_mut(0, d1).copy_from(&self.mean);
        mean.rows_mut(d1, d2).copy_from(&other.mean);
        let mut cov = DMatrix::zeros(d1 + d2, d1 + d2);
        cov.view_mut((0, 0), (d1, d1)).copy_from(&self.cov);
        cov.view_mut((d1, d1), (d2, d2)).copy_from(&other.cov);
        GaussianState { mean, cov }
    }

    /// Applies the linear map `v -> S v`, `σ -> S σ Sᵀ`.
    pub fn transform(&self, s: &DMatrix<f64>) -> Result<GaussianState> {
        if s.nrows() != self.mean.len() || s.ncols() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                got: s.nrows(),
            });
        }
        Ok(GaussianState {
            mean: s * &self.mean,
            cov: symmetrize(&(s * &self.cov * s.transpose())),
        })
    }

    /// Mixes modes `i` and `j` on a beamsplitter of intensity transmissivity
    /// `t`:
    ///
    /// ```text
    /// a_i' =  √t a_i + √(1-t) a_j
    /// a_j' = -√(1-t) a_i + √t a_j
    /// ```
    pub fn beamsplitter(&self, i: usize, j: usize, t: f64) -> Result<GaussianState> {
        self.check_mode(i)?;
        self.check_mode(j)?;
        if i == j {
            return Err(invalid("mode_j", "beamsplitter needs two distinct modes"));
        }
        if !(0.0..=1.0).contains(&t) {
            return Err(invalid("t", format!("transmissivity {t} outside [0, 1]")));
        }
        let (ct, st) = (t.sqrt(), (1.0 - t).sqrt());
        let mut s = DMatrix::identity(self.mean.len(), self.mean.len());
        for q in 0..2 {
            let (a, b) = (2 * i + q, 2 * j + q);
            s[(a, a)] = ct;
            s[(a, b)] = st;
            s[(b, a)] = -st;
            s[(b, b)] = ct;
        }
        self.transform(&s)
    }

    /// Pure loss of intensity transmissivity `efficiency` on `mode`: the mode
    /// is mixed with vacuum and the environment is traced out.
    pub fn apply_loss(&self, mode: usize, efficiency: f64) -> Result<GaussianState> {
        if !(0.0..=1.0).contains(&efficiency) {
            return Err(invalid("efficiency", format!("{efficiency} outside [0, 1]")));
        }
        self.apply_attenuation(mode, efficiency, 1.0 - efficiency)
    }

    /// `mean -> √τ mean`, `block -> τ block + ν I`, cross blocks scaled by
    /// `√τ`. Shared by loss and general phase-insensitive channels.
    pub(crate) fn apply_attenuation(&self, mode: usize, tau: f64, nu: f64) -> Result<GaussianState> {
        self.check_mode(mode)?;
        let scale = tau.sqrt();
        let mut mean = self.mean.clone();
        let mut cov = self.cov.clone();
        for q in 0..2 {
            let k = 2 * mode + q;
            mean[k] *= scale;
            for c in 0..cov.ncols() {
                cov[(k, c)] *= scale;
            }
            for r in 0..cov.nrows() {
                cov[(r, k)] *= scale;
            }
            cov[(k, k)] += nu;
        }
        Ok(GaussianState {
            mean,
            cov: symmetrize(&cov),
        })
    }

    /// Homodyne measurement of `quadrature` on `mode` with result `outcome`.
    ///
    /// The measured mode is removed; the remaining modes are updated with the
    /// Schur complement of the measured variance. The returned covariance
    /// does not depend on `outcome`.
    pub fn condition_on_quadrature(&self, mode: usize, quadrature: Quadrature, outcome: f64) -> Result<GaussianState> {
        self.check_mode(mode)?;
        if self.n_modes() < 2 {
            return Err(invalid("mode", "conditioning would leave no modes"));
        }
        let k = quadrature_index(mode, quadrature);
        let var = self.cov[(k, k)];
        if var < DEGENERATE_VARIANCE {
            return Err(Error::DegenerateConditioning(var));
        }
        let rest: Vec<usize> = (0..self.mean.len()).filter(|&idx| idx / 2 != mode).collect();
        let n = rest.len();
        let cross = DVector::from_iterator(n, rest.iter().map(|&r| self.cov[(r, k)]));
        let shift = (outcome - self.mean[k]) / var;
        let mean = DVector::from_iterator(n, rest.iter().map(|&r| self.mean[r])) + &cross * shift;
        let base = DMatrix::from_fn(n, n, |a, b| self.cov[(rest[a], rest[b])]);
        let cov = base - (&cross * cross.transpose()) / var;
        Ok(GaussianState {
            mean,
            cov: symmetrize(&cov),
        })
    }

    /// The reduced state on `modes`, in the given order.
    pub fn reduced(&self, modes: &[usize]) -> Result<GaussianState> {
        for &m in modes {
            self.check_mode(m)?;
        }
        if modes.is_empty() {
            return Err(invalid("modes", "empty selection"));
        }
        let idx: Vec<usize> = modes.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect();
        let n = idx.len();
        Ok(GaussianState {
            mean: DVector::from_iterator(n, idx.iter().map(|&i| self.mean[i])),
            cov: DMatrix::from_fn(n, n, |a, b| self.cov[(idx[a], idx[b])]),
        })
    }

    /// Partial transposition of `mode` (sign flip of its phase quadrature).
    pub fn partial_transpose(&self, mode: usize) -> Result<GaussianState> {
        self.check_mode(mode)?;
        let k = 2 * mode + 1;
        let mut out = self.clone();
        out.mean[k] = -out.mean[k];
        for c in 0..out.cov.ncols() {
            out.cov[(k, c)] = -out.cov[(k, c)];
        }
        for r in 0..out.cov.nrows() {
            out.cov[(r, k)] = -out.cov[(r, k)];
        }
        Ok(out)
    }

    /// Symplectic eigenvalues, ascending. Computed as the singular values of
    /// `σ^{1/2} Ω σ^{1/2}`, which requires a positive-definite covariance.
    pub fn symplectic_eigenvalues(&self) -> Result<Vec<f64>> {
        let dim = self.cov.nrows();
        let eig = SymmetricEigen::try_new(self.cov.clone(), 1e-15, 10_000).ok_or(Error::EigenNonConvergence)?;
        let scale = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        if eig.eigenvalues.iter().any(|&l| l <= 1e-14 * scale) {
            return Err(Error::NotPositiveDefinite);
        }
        let root =
            &eig.eigenvectors * DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt)) * eig.eigenvectors.transpose();
        let a = &root * symplectic_form(dim / 2) * &root;
        let mut nu: Vec<f64> = SVD::try_new(a, false, false, 1e-15, 10_000)
            .ok_or(Error::EigenNonConvergence)?
            .singular_values
            .iter()
            .copied()
            .collect();
        nu.sort_by(f64::total_cmp);
        Ok(nu.chunks(2).map(|pair| 0.5 * (pair[0] + pair[1])).collect())
    }

    /// Smallest symplectic eigenvalue.
    pub fn min_symplectic_eigenvalue(&self) -> Result<f64> {
        Ok(self.symplectic_eigenvalues()?[0])
    }

    /// Whether the covariance satisfies the uncertainty principle within
    /// [`PHYSICALITY_TOL`].
    pub fn is_physical(&self) -> bool {
        self.check_physical().is_ok()
    }

    pub fn check_physical(&self) -> Result<()> {
        let nu_min = match self.min_symplectic_eigenvalue() {
            Ok(v) => v,
            Err(Error::NotPositiveDefinite) => return Err(Error::NonPhysical(f64::NAN)),
            Err(e) => return Err(e),
        };
        if nu_min >= 1.0 - PHYSICALITY_TOL {
            Ok(())
        } else {
            Err(Error::NonPhysical(nu_min))
        }
    }
}

/// Squeezing parameters of the two squeezed states that form the EPR
/// resource, one per mode and quadrature. Squeezer `A` is squeezed in `x`
/// and squeezer `B` in `y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EprSpec {
    pub r_ax: f64,
    pub r_ay: f64,
    pub r_bx: f64,
    pub r_by: f64,
}

impl EprSpec {
    /// Equal squeezing `r` in every quadrature: a two-mode squeezed vacuum.
    pub fn symmetric(r: f64) -> Self {
        Self {
            r_ax: r,
            r_ay: r,
            r_bx: r,
            r_by: r,
        }
    }

    /// Symmetric squeezing given in dB.
    pub fn from_db(db: f64) -> Self {
        Self::symmetric(db_to_squeezing(db))
    }

    pub fn validate(&self) -> Result<()> {
        for (name, r) in [
            ("r_ax", self.r_ax),
            ("r_ay", self.r_ay),
            ("r_bx", self.r_bx),
            ("r_by", self.r_by),
        ] {
            if !r.is_finite() || r < 0.0 {
                return Err(invalid(name, format!("squeezing {r} must be finite and ≥ 0")));
            }
        }
        Ok(())
    }

    /// Whether both squeezers are at least minimum-uncertainty states:
    /// anti-squeezing never smaller than squeezing.
    pub fn is_physical(&self) -> bool {
        self.r_ay >= self.r_ax && self.r_bx >= self.r_by
    }

    /// The four distinct covariance entries `(C11, C22, C13, C24)`.
    pub fn entries(&self) -> (f64, f64, f64, f64) {
        let e = |v: f64| v.exp();
        let c11 = 0.5 * (e(-2.0 * self.r_ax) + e(2.0 * self.r_bx));
        let c22 = 0.5 * (e(-2.0 * self.r_by) + e(2.0 * self.r_ay));
        let c13 = 0.5 * (e(2.0 * self.r_bx) - e(-2.0 * self.r_ax));
        let c24 = 0.5 * (e(-2.0 * self.r_by) - e(2.0 * self.r_ay));
        (c11, c22, c13, c24)
    }
}

/// Two-mode EPR state built from `spec`, zero mean.
pub fn epr_covariance(spec: &EprSpec) -> Result<GaussianState> {
    spec.validate()?;
    let (c11, c22, c13, c24) = spec.entries();
    #[rustfmt::skip]
    let cov = DMatrix::from_row_slice(4, 4, &[
        c11, 0.0, c13, 0.0,
        0.0, c22, 0.0, c24,
        c13, 0.0, c11, 0.0,
        0.0, c24, 0.0, c22,
    ]);
    GaussianState::new(DVector::zeros(4), cov)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn vacuum_is_identity() {
        let v = GaussianState::vacuum(1);
        assert_eq!(v.mean().as_slice(), &[0.0, 0.0]);
        assert_eq!(v.cov(), &DMatrix::identity(2, 2));
        assert_eq!(GaussianState::vacuum(2).cov(), &DMatrix::identity(4, 4));
        let eig = v.symplectic_eigenvalues().unwrap();
        assert_abs_diff_eq!(eig[0], 1.0, epsilon = 1e-12);
        assert!(v.is_physical());
    }

    #[test]
    fn unsqueezed_epr_is_vacuum() {
        let s = epr_covariance(&EprSpec::symmetric(0.0)).unwrap();
        assert_eq!(s.cov(), &DMatrix::identity(4, 4));
    }

    #[test]
    fn three_db_entries() {
        let r = db_to_squeezing(3.0);
        assert_abs_diff_eq!(r, 0.3454, epsilon = 1e-4);
        let (c11, c22, c13, c24) = EprSpec::from_db(3.0).entries();
        assert_abs_diff_eq!(c11, 1.24821, epsilon = 2e-5);
        assert_abs_diff_eq!(c22, 1.24821, epsilon = 2e-5);
        assert_abs_diff_eq!(c13, 0.74703, epsilon = 2e-5);
        assert_abs_diff_eq!(c24, -0.74703, epsilon = 2e-5);
    }

    #[test]
    fn thermal_symplectic_eigenvalue() {
        let s = GaussianState::thermal(3.5).unwrap();
        assert_abs_diff_eq!(s.symplectic_eigenvalues().unwrap()[0], 3.5, epsilon = 1e-12);
    }

    #[test]
    fn beamsplitter_validation() {
        let s = GaussianState::vacuum(2);
        assert!(s.beamsplitter(0, 0, 0.5).is_err());
        assert!(s.beamsplitter(0, 2, 0.5).is_err());
        assert!(s.beamsplitter(0, 1, 1.5).is_err());
        assert_eq!(s.beamsplitter(0, 1, 1.0).unwrap(), s);
        let mixed = s.beamsplitter(0, 1, 0.3).unwrap();
        assert!((mixed.cov() - DMatrix::identity(4, 4)).amax() < 1e-15);
    }

    #[test]
    fn loss_extremes() {
        let c = GaussianState::coherent(1.7, -0.4);
        assert_eq!(c.apply_loss(0, 1.0).unwrap(), c);
        let gone = c.apply_loss(0, 0.0).unwrap();
        assert!(gone.mean().amax() < 1e-15);
        assert!((gone.cov() - DMatrix::identity(2, 2)).amax() < 1e-15);
        assert!(c.apply_loss(0, -0.1).is_err());
        assert!(c.apply_loss(1, 0.5).is_err());
    }

    #[test]
    fn conditioning_product_state_leaves_rest_alone() {
        let a = GaussianState::single_mode([0.3, -1.0], [2.0, 0.7]).unwrap();
        let b = GaussianState::single_mode([1.0, 2.0], [1.5, 1.5]).unwrap();
        let joint = a.direct_sum(&b);
        let post = joint.condition_on_quadrature(1, Quadrature::X, 5.0).unwrap();
        assert_eq!(post.mean(), a.mean());
        assert_eq!(post.cov(), a.cov());
    }

    #[test]
    fn conditioning_errors() {
        let one = GaussianState::vacuum(1);
        assert!(one.condition_on_quadrature(0, Quadrature::X, 0.0).is_err());
        let mut cov = DMatrix::identity(4, 4);
        cov[(2, 2)] = 0.0;
        let degenerate = GaussianState::new(DVector::zeros(4), cov).unwrap();
        assert!(matches!(
            degenerate.condition_on_quadrature(1, Quadrature::X, 0.0),
            Err(Error::DegenerateConditioning(_))
        ));
    }

    #[test]
    fn epr_conditional_variance_is_sech() {
        for r in [0.0, 0.2, 0.3454, 1.0, 2.0] {
            let s = epr_covariance(&EprSpec::symmetric(r)).unwrap();
            let post = s.condition_on_quadrature(1, Quadrature::X, 0.8).unwrap();
            assert_abs_diff_eq!(post.cov()[(0, 0)], 1.0 / (2.0 * r).cosh(), epsilon = 1e-12);
        }
    }

    #[test]
    fn unphysical_covariance_is_flagged() {
        let squeezed_too_much = GaussianState::single_mode([0.0, 0.0], [0.5, 0.5]).unwrap();
        assert!(matches!(squeezed_too_much.check_physical(), Err(Error::NonPhysical(_))));
        let indefinite = GaussianState::single_mode([0.0, 0.0], [-1.0, 1.0]).unwrap();
        assert!(!indefinite.is_physical());
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(GaussianState::new(DVector::zeros(3), DMatrix::identity(3, 3)).is_err());
        assert!(GaussianState::new(DVector::zeros(2), DMatrix::identity(4, 4)).is_err());
        assert!(EprSpec::symmetric(-0.1).validate().is_err());
        assert!(EprSpec::symmetric(f64::NAN).validate().is_err());
    }
}
