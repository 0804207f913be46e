//! Field-state representations and the truncated Fock bridge.
//!
//! Large driving amplitudes are never expanded in the number basis: states
//! are handled in the frame displaced by the driving amplitude, where the
//! branches of a conditioned state sit within a few photons of the origin.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{HhgError, Result};
use crate::fock;

/// Default photon-number cutoff, adequate for `|beta| <= 4`.
pub const DEFAULT_CUTOFF: usize = 64;

/// Tolerated deviation between truncated and exact norms.
pub const CUTOFF_TOLERANCE: f64 = 1e-8;

/// Complex amplitude labelling a coherent state `|alpha>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherentLabel(pub C64);

impl CoherentLabel {
    pub fn new(re: f64, im: f64) -> Self {
        CoherentLabel(C64::new(re, im))
    }

    pub fn alpha(&self) -> C64 {
        self.0
    }

    pub fn mean_photon_number(&self) -> f64 {
        self.0.norm_sqr()
    }

    pub fn is_finite(&self) -> bool {
        self.0.re.is_finite() && self.0.im.is_finite()
    }
}

/// `<a|b>` for coherent states, closed form.
pub fn coherent_overlap(a: C64, b: C64) -> C64 {
    (-0.5 * a.norm_sqr() - 0.5 * b.norm_sqr() + a.conj() * b).exp()
}

/// Tensor product of coherent states, one label per mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductCoherent {
    pub modes: Vec<CoherentLabel>,
    /// Accumulated phase `sum_q phi_q`; carried along, not observable here.
    pub global_phase: f64,
}

impl ProductCoherent {
    pub fn new(modes: Vec<CoherentLabel>) -> Self {
        ProductCoherent {
            modes,
            global_phase: 0.0,
        }
    }

    pub fn single(alpha: C64) -> Self {
        Self::new(vec![CoherentLabel(alpha)])
    }
}

/// `sum_k c_k |beta_k>`, usually two branches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherentSuperposition {
    pub branches: Vec<(C64, CoherentLabel)>,
}

impl CoherentSuperposition {
    pub fn new(branches: Vec<(C64, CoherentLabel)>) -> Self {
        CoherentSuperposition { branches }
    }

    /// `<psi|psi>` from the closed-form branch overlaps.
    pub fn norm_sqr(&self) -> f64 {
        let mut s = C64::new(0.0, 0.0);
        for (ci, bi) in &self.branches {
            for (cj, bj) in &self.branches {
                s += ci.conj() * cj * coherent_overlap(bi.0, bj.0);
            }
        }
        s.re
    }

    /// Same state with coefficients rescaled to unit norm.
    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sqr();
        if !(n > 1e-300) {
            return Err(HhgError::DegenerateSuperposition);
        }
        let s = 1.0 / n.sqrt();
        Ok(CoherentSuperposition {
            branches: self.branches.iter().map(|(c, b)| (c * s, *b)).collect(),
        })
    }

    /// Every branch label shifted by `delta`; coefficients pick up the
    /// phase of `D(delta) D(beta) = e^{i Im(delta beta*)} D(delta + beta)`.
    pub fn displaced(&self, delta: C64) -> Self {
        CoherentSuperposition {
            branches: self
                .branches
                .iter()
                .map(|(c, b)| {
                    let ph = C64::new(0.0, (delta * b.0.conj()).im).exp();
                    (c * ph, CoherentLabel(b.0 + delta))
                })
                .collect(),
        }
    }

    /// `<psi|phi>` between two superpositions, unnormalized.
    pub fn inner(&self, other: &CoherentSuperposition) -> C64 {
        let mut s = C64::new(0.0, 0.0);
        for (ci, bi) in &self.branches {
            for (cj, bj) in &other.branches {
                s += ci.conj() * cj * coherent_overlap(bi.0, bj.0);
            }
        }
        s
    }
}

/// Photon-number diagonal mixture `sum_n p_n |n><n|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagonalMixture {
    pub weights: Vec<f64>,
}

impl DiagonalMixture {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(HhgError::InvalidState("empty weight vector".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(HhgError::InvalidState("negative or non-finite weight".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(HhgError::InvalidState(format!(
                "weights sum to {total}, not 1"
            )));
        }
        Ok(DiagonalMixture { weights })
    }

    pub fn mean(&self) -> f64 {
        self.weights.iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.weights
            .iter()
            .enumerate()
            .map(|(n, p)| (n as f64 - m).powi(2) * p)
            .sum()
    }
}

/// Pure state on `modes` modes, each truncated to `dim` levels.
/// Amplitudes are row-major: mode 0 is the most significant index.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedFock {
    dim: usize,
    modes: usize,
    amps: Vec<C64>,
}

impl TruncatedFock {
    pub fn new(dim: usize, modes: usize, amps: Vec<C64>) -> Result<Self> {
        if dim == 0 || modes == 0 {
            return Err(HhgError::InvalidState("dim and modes must be >= 1".into()));
        }
        let want = dim
            .checked_pow(modes as u32)
            .ok_or_else(|| HhgError::InvalidState("tensor size overflow".into()))?;
        if amps.len() != want {
            return Err(HhgError::DimensionMismatch(format!(
                "{} amplitudes for dim {dim} and {modes} modes",
                amps.len()
            )));
        }
        let n = fock::norm_sqr(&amps);
        if !n.is_finite() || n > 1.0 + 1e-12 {
            return Err(HhgError::InvalidState(format!("norm^2 {n} exceeds 1")));
        }
        Ok(TruncatedFock { dim, modes, amps })
    }

    pub fn single(amps: Vec<C64>) -> Result<Self> {
        let dim = amps.len();
        Self::new(dim, 1, amps)
    }

    pub fn vacuum(dim: usize) -> Self {
        let mut amps = vec![C64::new(0.0, 0.0); dim.max(1)];
        amps[0] = C64::new(1.0, 0.0);
        TruncatedFock {
            dim: dim.max(1),
            modes: 1,
            amps,
        }
    }

    pub fn number_state(n: usize, dim: usize) -> Result<Self> {
        if n >= dim {
            return Err(HhgError::CutoffTooSmall {
                dim,
                deviation: 1.0,
            });
        }
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[n] = C64::new(1.0, 0.0);
        Self::single(amps)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        fock::norm_sqr(&self.amps)
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sqr();
        if !(n > 1e-300) {
            return Err(HhgError::InvalidState("zero vector".into()));
        }
        let s = 1.0 / n.sqrt();
        Ok(TruncatedFock {
            dim: self.dim,
            modes: self.modes,
            amps: self.amps.iter().map(|a| a * s).collect(),
        })
    }

    /// Reduced photon-number distribution of `mode`.
    pub fn number_distribution(&self, mode: usize) -> Vec<f64> {
        let mut p = vec![0.0; self.dim];
        let stride = self.dim.pow((self.modes - 1 - mode) as u32);
        for (idx, a) in self.amps.iter().enumerate() {
            p[(idx / stride) % self.dim] += a.norm_sqr();
        }
        p
    }

    /// `<n>` of `mode`.
    pub fn mean_photon_number(&self, mode: usize) -> f64 {
        self.number_distribution(mode)
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum::<f64>()
            / self.norm_sqr()
    }

    /// Applies a single-mode operator to `mode`.
    pub fn apply_mode_operator(&self, mode: usize, op: &DMatrix<C64>) -> Result<Self> {
        if mode >= self.modes {
            return Err(HhgError::ModeCountMismatch {
                expected: mode + 1,
                got: self.modes,
            });
        }
        let d = self.dim;
        let stride = d.pow((self.modes - 1 - mode) as u32);
        let block = stride * d;
        let mut out = vec![C64::new(0.0, 0.0); self.amps.len()];
        for outer in 0..self.amps.len() / block {
            for inner in 0..stride {
                let base = outer * block + inner;
                for m in 0..d {
                    let mut s = C64::new(0.0, 0.0);
                    for n in 0..d {
                        s += op[(m, n)] * self.amps[base + n * stride];
                    }
                    out[base + m * stride] = s;
                }
            }
        }
        Ok(TruncatedFock {
            dim: d,
            modes: self.modes,
            amps: out,
        })
    }
}

/// Real quadrature-space Gaussian state, ordering `(x_1, p_1, x_2, p_2, ...)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianState {
    pub mean: Vec<f64>,
    /// Row-major `2N x 2N` covariance `V_ij = <{dr_i, dr_j}>/2`.
    pub cov: Vec<f64>,
}

impl GaussianState {
    pub fn new(mean: Vec<f64>, cov: Vec<f64>) -> Result<Self> {
        let s = GaussianState { mean, cov };
        s.validate()?;
        Ok(s)
    }

    pub fn vacuum(modes: usize) -> Self {
        let n = 2 * modes;
        let mut cov = vec![0.0; n * n];
        for i in 0..n {
            cov[i * n + i] = 0.5;
        }
        GaussianState {
            mean: vec![0.0; n],
            cov,
        }
    }

    pub fn coherent(alphas: &[C64]) -> Self {
        let mut g = Self::vacuum(alphas.len());
        for (k, a) in alphas.iter().enumerate() {
            g.mean[2 * k] = std::f64::consts::SQRT_2 * a.re;
            g.mean[2 * k + 1] = std::f64::consts::SQRT_2 * a.im;
        }
        g
    }

    pub fn modes(&self) -> usize {
        self.mean.len() / 2
    }

    pub fn cov_matrix(&self) -> DMatrix<f64> {
        let n = self.mean.len();
        DMatrix::from_row_slice(n, n, &self.cov)
    }

    /// Complex mode amplitudes `<b_k> = (x_k + i p_k)/sqrt(2)`.
    pub fn amplitudes(&self) -> Vec<C64> {
        (0..self.modes())
            .map(|k| C64::new(self.mean[2 * k], self.mean[2 * k + 1]) / std::f64::consts::SQRT_2)
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.mean.len();
        if n == 0 || n % 2 != 0 {
            return Err(HhgError::InvalidCovariance(format!(
                "mean vector length {n} is not a positive even number"
            )));
        }
        if self.cov.len() != n * n {
            return Err(HhgError::InvalidCovariance(format!(
                "covariance has {} entries, expected {}",
                self.cov.len(),
                n * n
            )));
        }
        if self.cov.iter().chain(&self.mean).any(|v| !v.is_finite()) {
            return Err(HhgError::InvalidCovariance("non-finite entry".into()));
        }
        let v = self.cov_matrix();
        let scale = v.amax().max(1.0);
        if (&v - v.transpose()).amax() > 1e-12 * scale {
            return Err(HhgError::InvalidCovariance("not symmetric".into()));
        }
        let min_eig = uncertainty_min_eigenvalue(&v);
        if min_eig < -1e-10 {
            return Err(HhgError::InvalidCovariance(format!(
                "uncertainty relation violated: min eigenvalue of V + i Omega/2 is {min_eig:.3e}"
            )));
        }
        Ok(())
    }
}

/// Symplectic form for interleaved `(x, p)` ordering.
pub fn symplectic_form(modes: usize) -> DMatrix<f64> {
    let n = 2 * modes;
    let mut o = DMatrix::<f64>::zeros(n, n);
    for k in 0..modes {
        o[(2 * k, 2 * k + 1)] = 1.0;
        o[(2 * k + 1, 2 * k)] = -1.0;
    }
    o
}

/// Smallest eigenvalue of the Hermitian matrix `V + (i/2) Omega`.
pub fn uncertainty_min_eigenvalue(v: &DMatrix<f64>) -> f64 {
    let n = v.nrows();
    let o = symplectic_form(n / 2);
    let h = DMatrix::<C64>::from_fn(n, n, |i, j| C64::new(v[(i, j)], 0.5 * o[(i, j)]));
    SymmetricEigen::new(h).eigenvalues.min()
}

/// Symplectic eigenvalues of a positive-definite covariance, ascending.
pub fn symplectic_eigenvalues(v: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = v.nrows();
    let eig = SymmetricEigen::new(v.clone());
    if eig.eigenvalues.min() <= 0.0 {
        return Err(HhgError::InvalidCovariance(
            "covariance is not positive definite".into(),
        ));
    }
    let sqrt_d = DVector::from_iterator(n, eig.eigenvalues.iter().map(|l| l.sqrt()));
    let root = &eig.eigenvectors * DMatrix::from_diagonal(&sqrt_d) * eig.eigenvectors.transpose();
    let o = symplectic_form(n / 2);
    // i * root * Omega * root is Hermitian with eigenvalues +-nu_k
    let m = &root * o * &root;
    let h = DMatrix::<C64>::from_fn(n, n, |i, j| C64::new(0.0, m[(i, j)]));
    let mut ev: Vec<f64> = SymmetricEigen::new(h)
        .eigenvalues
        .iter()
        .copied()
        .filter(|e| *e > 0.0)
        .collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    if ev.len() != n / 2 {
        return Err(HhgError::InvalidCovariance(
            "degenerate symplectic spectrum".into(),
        ));
    }
    Ok(ev)
}

/// Photon-number density matrix on `dim` levels (single mode).
#[derive(Debug, Clone, PartialEq)]
pub struct FockDensity {
    pub rho: DMatrix<C64>,
}

impl FockDensity {
    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|n| self.rho[(n, n)].re).collect()
    }

    pub fn from_pure(psi: &TruncatedFock) -> Result<Self> {
        if psi.modes() != 1 {
            return Err(HhgError::MultiModeUnsupported(psi.modes()));
        }
        let v = DVector::from_column_slice(psi.amplitudes());
        Ok(FockDensity {
            rho: &v * v.adjoint(),
        })
    }
}

/// Every state the pipeline produces.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldState {
    ProductCoherent(ProductCoherent),
    CoherentSuperposition(CoherentSuperposition),
    DiagonalMixture(DiagonalMixture),
    TruncatedFock(TruncatedFock),
    Gaussian(GaussianState),
}

impl FieldState {
    pub fn variant_name(&self) -> &'static str {
        match self {
            FieldState::ProductCoherent(_) => "ProductCoherent",
            FieldState::CoherentSuperposition(_) => "CoherentSuperposition",
            FieldState::DiagonalMixture(_) => "DiagonalMixture",
            FieldState::TruncatedFock(_) => "TruncatedFock",
            FieldState::Gaussian(_) => "GaussianState",
        }
    }

    pub fn modes(&self) -> usize {
        match self {
            FieldState::ProductCoherent(p) => p.modes.len(),
            FieldState::CoherentSuperposition(_) | FieldState::DiagonalMixture(_) => 1,
            FieldState::TruncatedFock(t) => t.modes(),
            FieldState::Gaussian(g) => g.modes(),
        }
    }

    pub fn coherent(alpha: C64) -> Self {
        FieldState::ProductCoherent(ProductCoherent::single(alpha))
    }

    pub fn vacuum() -> Self {
        Self::coherent(C64::new(0.0, 0.0))
    }
}

fn check_cutoff(dim: usize, kept: f64, exact: f64) -> Result<()> {
    let deviation = (exact - kept).abs();
    if deviation > CUTOFF_TOLERANCE * exact.max(1e-300) {
        return Err(HhgError::CutoffTooSmall { dim, deviation });
    }
    Ok(())
}

/// Number-basis amplitudes of a pure state.
///
/// Coherent labels expand as `e^{-|a|^2/2} a^n / sqrt(n!)`; a superposition is
/// returned normalized. Mixed variants have no amplitude vector (see
/// [`to_density`]).
pub fn to_fock(state: &FieldState, dim: usize) -> Result<TruncatedFock> {
    if dim == 0 {
        return Err(HhgError::CutoffTooSmall {
            dim,
            deviation: 1.0,
        });
    }
    match state {
        FieldState::ProductCoherent(p) => {
            if p.modes.is_empty() {
                return Err(HhgError::InvalidState("no modes".into()));
            }
            let mut amps = vec![C64::new(1.0, 0.0)];
            for label in &p.modes {
                if !label.is_finite() {
                    return Err(HhgError::InvalidState("non-finite coherent label".into()));
                }
                let c = fock::coherent_amplitudes(label.0, dim);
                check_cutoff(dim, fock::norm_sqr(&c), 1.0)?;
                amps = amps
                    .iter()
                    .flat_map(|a| c.iter().map(move |x| a * x))
                    .collect();
            }
            TruncatedFock::new(dim, p.modes.len(), amps)
        }
        FieldState::CoherentSuperposition(s) => {
            let s = s.normalized()?;
            let mut amps = vec![C64::new(0.0, 0.0); dim];
            for (c, b) in &s.branches {
                for (a, x) in amps.iter_mut().zip(fock::coherent_amplitudes(b.0, dim)) {
                    *a += c * x;
                }
            }
            check_cutoff(dim, fock::norm_sqr(&amps), 1.0)?;
            let n = fock::norm_sqr(&amps).sqrt();
            TruncatedFock::single(amps.into_iter().map(|a| a / n).collect())
        }
        FieldState::TruncatedFock(t) => {
            if t.dim() == dim {
                return Ok(t.clone());
            }
            if t.modes() != 1 {
                return Err(HhgError::MultiModeUnsupported(t.modes()));
            }
            let mut amps = t.amplitudes().to_vec();
            let total = fock::norm_sqr(&amps);
            amps.resize(dim, C64::new(0.0, 0.0));
            check_cutoff(dim, fock::norm_sqr(&amps), total)?;
            TruncatedFock::single(amps)
        }
        FieldState::DiagonalMixture(_) | FieldState::Gaussian(_) => {
            Err(HhgError::UnsupportedVariant(state.variant_name()))
        }
    }
}

/// Single-mode density matrix of any state with a number-basis form.
pub fn to_density(state: &FieldState, dim: usize) -> Result<FockDensity> {
    match state {
        FieldState::DiagonalMixture(m) => {
            let kept: f64 = m.weights.iter().take(dim).sum();
            check_cutoff(dim, kept, 1.0)?;
            let mut rho = DMatrix::<C64>::zeros(dim, dim);
            for (n, w) in m.weights.iter().take(dim).enumerate() {
                rho[(n, n)] = C64::new(*w, 0.0);
            }
            Ok(FockDensity { rho })
        }
        FieldState::Gaussian(_) => Err(HhgError::UnsupportedVariant(state.variant_name())),
        _ => FockDensity::from_pure(&to_fock(state, dim)?),
    }
}

/// `exp(beta b^dag - beta^* b)` on the truncated basis, applied to mode 0.
pub fn displace(state: &TruncatedFock, beta: C64) -> Result<TruncatedFock> {
    if state.modes() != 1 {
        return Err(HhgError::MultiModeUnsupported(state.modes()));
    }
    displace_mode(state, 0, beta)
}

/// Displacement of one mode of a (possibly multi-mode) state.
///
/// The truncated exponential is exactly unitary, so the cutoff check uses
/// exact matrix elements to measure the weight pushed past the cutoff.
pub fn displace_mode(state: &TruncatedFock, mode: usize, beta: C64) -> Result<TruncatedFock> {
    if beta == C64::new(0.0, 0.0) {
        return Ok(state.clone());
    }
    let dim = state.dim();
    let headroom = dim + (beta.norm_sqr() + 10.0 * beta.norm()).ceil() as usize + 16;
    let exact = fock::displacement_matrix(beta, headroom, dim);
    let stride = dim.pow((state.modes() - 1 - mode) as u32);
    let mut leaked = 0.0;
    let block = stride * dim;
    for outer in 0..state.amplitudes().len() / block {
        for inner in 0..stride {
            let base = outer * block + inner;
            for m in dim..headroom {
                let mut s = C64::new(0.0, 0.0);
                for n in 0..dim {
                    s += exact[(m, n)] * state.amplitudes()[base + n * stride];
                }
                leaked += s.norm_sqr();
            }
        }
    }
    let total = state.norm_sqr();
    if leaked > CUTOFF_TOLERANCE * total.max(1e-300) {
        return Err(HhgError::CutoffTooSmall {
            dim,
            deviation: leaked,
        });
    }
    let b = fock::annihilation(dim);
    let generator = b.adjoint() * beta - b * beta.conj();
    state.apply_mode_operator(mode, &generator.exp())
}

/// `<a|b>`.
pub fn overlap(a: &TruncatedFock, b: &TruncatedFock) -> Result<C64> {
    if a.dim() != b.dim() || a.modes() != b.modes() {
        return Err(HhgError::DimensionMismatch(format!(
            "({} levels, {} modes) vs ({} levels, {} modes)",
            a.dim(),
            a.modes(),
            b.dim(),
            b.modes()
        )));
    }
    Ok(fock::inner(a.amplitudes(), b.amplitudes()))
}

/// Phase-insensitive fidelity between pure states.
pub fn fidelity(a: &TruncatedFock, b: &TruncatedFock) -> Result<f64> {
    let o = overlap(a, b)?;
    Ok(o.norm_sqr() / (a.norm_sqr() * b.norm_sqr()))
}

/// Trace distance between pure states, `sqrt(1 - F)`.
pub fn pure_trace_distance(fid: f64) -> f64 {
    (1.0 - fid.min(1.0)).max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn vacuum_label_is_number_state_zero() {
        let v = to_fock(&FieldState::vacuum(), 16).unwrap();
        assert_eq!(v.amplitudes()[0], c(1.0, 0.0));
        assert!(v.amplitudes()[1..].iter().all(|a| a.norm() == 0.0));
    }

    #[test]
    fn coherent_expansion_ground_amplitude() {
        let s = to_fock(&FieldState::coherent(c(1.0, 0.0)), 32).unwrap();
        assert_abs_diff_eq!(s.amplitudes()[0].re, 0.606_530_659_712_633_4, epsilon = 1e-14);
    }

    #[test]
    fn small_cutoff_is_rejected() {
        let err = to_fock(&FieldState::coherent(c(3.0, 0.0)), 8).unwrap_err();
        assert!(matches!(err, HhgError::CutoffTooSmall { dim: 8, .. }));
        let psi = to_fock(&FieldState::coherent(c(1.0, 0.0)), 12).unwrap();
        assert!(matches!(
            displace(&psi, c(3.0, 0.0)),
            Err(HhgError::CutoffTooSmall { .. })
        ));
    }

    #[test]
    fn mixed_states_have_no_amplitudes() {
        let m = FieldState::DiagonalMixture(DiagonalMixture::new(vec![0.5, 0.5]).unwrap());
        assert!(matches!(to_fock(&m, 4), Err(HhgError::UnsupportedVariant(_))));
        let rho = to_density(&m, 4).unwrap();
        assert_eq!(rho.diagonal(), vec![0.5, 0.5, 0.0, 0.0]);
    }

    #[test]
    fn displaced_vacuum_is_coherent_state() {
        let beta = c(1.5, -2.0);
        let d = displace(&TruncatedFock::vacuum(64), beta).unwrap();
        let want = to_fock(&FieldState::coherent(beta), 64).unwrap();
        assert!(fidelity(&d, &want).unwrap() > 1.0 - 1e-10);
    }

    #[test]
    fn zero_displacement_is_identity() {
        let psi = to_fock(&FieldState::coherent(c(0.3, 0.4)), 32).unwrap();
        assert_eq!(displace(&psi, c(0.0, 0.0)).unwrap(), psi);
    }

    #[test]
    fn displacement_inverse_returns_vacuum() {
        let beta = c(-2.5, 1.0);
        let v = TruncatedFock::vacuum(64);
        let back = displace(&displace(&v, beta).unwrap(), -beta).unwrap();
        assert!(fidelity(&back, &v).unwrap() > 1.0 - 1e-10);
    }

    #[test]
    fn overlap_rejects_mismatched_dims() {
        let a = TruncatedFock::vacuum(8);
        let b = TruncatedFock::vacuum(9);
        assert!(matches!(overlap(&a, &b), Err(HhgError::DimensionMismatch(_))));
    }

    #[test]
    fn overlap_of_vacua_is_one() {
        let a = TruncatedFock::vacuum(8);
        assert_eq!(overlap(&a, &a).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn overlap_law_through_the_truncated_basis() {
        for (chi, want) in [(1.0, 0.606_530_66), (0.1, 0.995_012_48)] {
            let alpha = c(1.2, -0.3);
            let a = to_fock(&FieldState::coherent(alpha), 64).unwrap();
            let b = to_fock(&FieldState::coherent(alpha + chi), 64).unwrap();
            let o = overlap(&a, &b).unwrap().norm();
            assert_abs_diff_eq!(o, want, epsilon = 1e-8);
            assert_abs_diff_eq!(o, (-0.5 * chi * chi).exp(), epsilon = 1e-10);
        }
    }

    #[test]
    fn multimode_tensor_layout() {
        let s = FieldState::ProductCoherent(ProductCoherent::new(vec![
            CoherentLabel::new(0.5, 0.0),
            CoherentLabel::new(0.0, 0.2),
        ]));
        let t = to_fock(&s, 20).unwrap();
        assert_eq!(t.amplitudes().len(), 400);
        assert_abs_diff_eq!(t.mean_photon_number(0), 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(t.mean_photon_number(1), 0.04, epsilon = 1e-12);
        // displacing mode 1 only
        let d = displace_mode(&t, 1, c(0.0, -0.2)).unwrap();
        assert_abs_diff_eq!(d.mean_photon_number(1), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.mean_photon_number(0), 0.25, epsilon = 1e-12);
    }

    #[test]
    fn superposition_displacement_phase_matches_fock() {
        let s = CoherentSuperposition::new(vec![
            (c(1.0, 0.0), CoherentLabel::new(0.7, 0.2)),
            (c(-0.4, 0.1), CoherentLabel::new(0.0, 0.0)),
        ]);
        let delta = c(-0.5, 0.9);
        let moved = to_fock(&FieldState::CoherentSuperposition(s.displaced(delta)), 48).unwrap();
        let psi = to_fock(&FieldState::CoherentSuperposition(s.clone()), 48).unwrap();
        let via_fock = displace(&psi, delta).unwrap();
        // componentwise agreement, not just fidelity: coefficients carry the phase
        for (a, b) in moved.amplitudes().iter().zip(via_fock.amplitudes()) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn gaussian_validation() {
        assert!(GaussianState::vacuum(2).validate().is_ok());
        let bad = GaussianState {
            mean: vec![0.0, 0.0],
            cov: vec![0.2, 0.0, 0.0, 0.2],
        };
        assert!(matches!(bad.validate(), Err(HhgError::InvalidCovariance(_))));
        let asym = GaussianState {
            mean: vec![0.0, 0.0],
            cov: vec![1.0, 0.1, 0.0, 1.0],
        };
        assert!(asym.validate().is_err());
        let nu = symplectic_eigenvalues(&GaussianState::vacuum(3).cov_matrix()).unwrap();
        for v in nu {
            assert_abs_diff_eq!(v, 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn mixture_validation() {
        assert!(DiagonalMixture::new(vec![0.5, 0.6]).is_err());
        assert!(DiagonalMixture::new(vec![1.5, -0.5]).is_err());
        assert!(DiagonalMixture::new(vec![]).is_err());
    }

    proptest! {
        #[test]
        fn displacement_preserves_norm(re in -3.0f64..3.0, im in -3.0f64..3.0) {
            let psi = to_fock(&FieldState::coherent(c(0.4, -0.2)), 64).unwrap();
            let out = displace(&psi, c(re, im)).unwrap();
            prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-10);
        }

        #[test]
        fn displacements_compose(a in -1.5f64..1.5, b in -1.5f64..1.5, c2 in -1.5f64..1.5, d in -1.5f64..1.5) {
            let v = TruncatedFock::vacuum(64);
            let two = displace(&displace(&v, c(a, b)).unwrap(), c(c2, d)).unwrap();
            let one = displace(&v, c(a + c2, b + d)).unwrap();
            prop_assert!(fidelity(&two, &one).unwrap() > 1.0 - 1e-9);
        }

        #[test]
        fn coherent_mean_photon_number(re in -3.5f64..3.5, im in -3.5f64..3.5) {
            let alpha = c(re, im);
            let t = to_fock(&FieldState::coherent(alpha), 64).unwrap();
            let n = t.mean_photon_number(0);
            prop_assert!((n - alpha.norm_sqr()).abs() <= 1e-8 * alpha.norm_sqr().max(1e-8));
        }
    }
}
