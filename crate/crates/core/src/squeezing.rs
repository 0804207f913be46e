//! Beyond the classical-current approximation: the commutator of the
//! interaction Hamiltonian at two times and a Gaussian propagator correct to
//! second order in the coupling.
//!
//! The interaction is `H_I(t) = -D(t) E_Q(t)` with the atomic dipole `D(t)`
//! in the frame of the driven atom and
//! `E_Q(t) = -i g sum_q sqrt(q) (b_q^dag e^{i w_q t} - b_q e^{-i w_q t})`.

use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::dipole::{fmt_f64, DipoleSignal, TransitionDipoles};
use crate::error::{HhgError, Result};
use crate::statespace::{symplectic_eigenvalues, uncertainty_min_eigenvalue, GaussianState};

/// Third-to-second order ratio allowed per time step.
pub const ORDER_LIMIT: f64 = 1e-3;

fn dipole_matrix(dij: &TransitionDipoles, k: usize) -> DMatrix<C64> {
    let b = dij.basis();
    DMatrix::from_row_slice(b, b, dij.at(k))
}

/// `D(t)` linearly interpolated between grid points.
fn dipole_at(dipole: &DipoleSignal, dij: &TransitionDipoles, t: f64) -> Result<DMatrix<C64>> {
    let end = dipole.end();
    let slack = 1e-9 * dipole.dt;
    if !(t >= dipole.t0 - slack && t <= end + slack) {
        return Err(HhgError::OutOfGridRange {
            t,
            start: dipole.t0,
            end,
        });
    }
    let x = ((t - dipole.t0) / dipole.dt).max(0.0);
    let k = (x.floor() as usize).min(dipole.len() - 1);
    let frac = x - k as f64;
    if k + 1 == dipole.len() || frac < 1e-12 {
        return Ok(dipole_matrix(dij, k));
    }
    Ok(dipole_matrix(dij, k) * C64::new(1.0 - frac, 0.0) + dipole_matrix(dij, k + 1) * C64::new(frac, 0.0))
}

/// Normally ordered two-mode terms of the commutator; each entry is the
/// atomic operator multiplying the named field monomial.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeMixing {
    pub q: usize,
    pub p: usize,
    /// `b_q^dag b_p^dag`.
    pub creation_creation: DMatrix<C64>,
    /// `b_q^dag b_p`.
    pub creation_annihilation: DMatrix<C64>,
    /// `b_p^dag b_q` (from `b_q b_p^dag`).
    pub annihilation_creation: DMatrix<C64>,
    /// `b_q b_p`.
    pub annihilation_annihilation: DMatrix<C64>,
}

impl ModeMixing {
    pub fn max_abs(&self) -> f64 {
        [
            &self.creation_creation,
            &self.creation_annihilation,
            &self.annihilation_creation,
            &self.annihilation_annihilation,
        ]
        .iter()
        .map(|m| m.iter().map(|z| z.norm()).fold(0.0, f64::max))
        .fold(0.0, f64::max)
    }
}

/// `[H_I(t1), H_I(t2)]` split into field-bilinear and field-identity parts.
#[derive(Debug, Clone, PartialEq)]
pub struct CommutatorValue {
    pub t1: f64,
    pub t2: f64,
    /// `[D(t1), D(t2)]`.
    pub atomic_block: DMatrix<C64>,
    /// One entry per ordered mode pair `(q, p)`.
    pub mode_mixing: Vec<ModeMixing>,
    /// Atomic operator multiplying the field identity,
    /// `g^2 sum_q q (D1 D2 e^{-i w_q (t1 - t2)} - D2 D1 e^{i w_q (t1 - t2)})`.
    pub identity_part: DMatrix<C64>,
    /// Ground-state expectation of `identity_part`.
    pub scalar_part: C64,
}

impl CommutatorValue {
    pub fn max_mixing_coefficient(&self) -> f64 {
        self.mode_mixing.iter().map(|m| m.max_abs()).fold(0.0, f64::max)
    }
}

/// Evaluates the interaction commutator for the harmonic orders in `modes`.
pub fn commutator(dipole: &DipoleSignal, g: f64, omega: f64, modes: &[usize], t1: f64, t2: f64) -> Result<CommutatorValue> {
    let dij = dipole.dij.as_ref().ok_or(HhgError::MissingTransitionDipoles)?;
    if dij.basis() < 2 {
        return Err(HhgError::BasisTooSmall(dij.basis()));
    }
    if modes.iter().any(|q| *q == 0) {
        return Err(HhgError::ParameterOutOfRange("harmonic orders start at 1".into()));
    }
    let d1 = dipole_at(dipole, dij, t1)?;
    let d2 = dipole_at(dipole, dij, t2)?;
    let d12 = &d1 * &d2;
    let d21 = &d2 * &d1;
    let c = &d12 - &d21;
    let g2 = g * g;
    let mut mode_mixing = Vec::with_capacity(modes.len() * modes.len());
    for &q in modes {
        let wq = q as f64 * omega;
        for &p in modes {
            let wp = p as f64 * omega;
            let s = g2 * ((q * p) as f64).sqrt();
            let term = |sign: f64, phase: f64| &c * C64::from_polar(sign * s, phase);
            mode_mixing.push(ModeMixing {
                q,
                p,
                creation_creation: term(-1.0, wq * t1 + wp * t2),
                creation_annihilation: term(1.0, wq * t1 - wp * t2),
                annihilation_creation: term(1.0, -wq * t1 + wp * t2),
                annihilation_annihilation: term(-1.0, -wq * t1 - wp * t2),
            });
        }
    }
    let b = dij.basis();
    let mut identity_part = DMatrix::<C64>::zeros(b, b);
    for &q in modes {
        let phase = q as f64 * omega * (t1 - t2);
        let s = g2 * q as f64;
        identity_part += &d12 * C64::from_polar(s, -phase) - &d21 * C64::from_polar(s, phase);
    }
    let scalar_part = identity_part[(0, 0)];
    Ok(CommutatorValue {
        t1,
        t2,
        atomic_block: c,
        mode_mixing,
        identity_part,
        scalar_part,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PropagatorOptions {
    /// Drop the two-photon generator, leaving only displacements.
    pub zero_mixing: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticResult {
    pub state: GaussianState,
    /// Harmonic orders of the modes, in state order.
    pub modes: Vec<usize>,
    /// Displacement `beta_q = sqrt(q) g int <d> e^{i w_q t} dt`.
    pub beta: Vec<C64>,
    /// Symmetric two-photon amplitudes `Z_qp`.
    pub z: DMatrix<C64>,
    /// Per-step order-control estimate.
    pub order_estimate: f64,
}

/// Gaussian state of the harmonic modes after the whole dipole record,
/// projected on the atomic ground state, to second order in `g`.
///
/// The linear generator gives `D(beta)`; the connected dipole correlation
/// `K(t1, t2) = sum_{k != 0} d_0k(t1) d_k0(t2)` (`t1 > t2`) gives the
/// two-photon generator `(1/2) sum Z_qp b_q^dag b_p^dag` with
/// `Z_qp = g^2 sqrt(qp) int int_{t2 < t1} K (e^{i(w_q t1 + w_p t2)} + e^{i(w_p t1 + w_q t2)})`.
/// The output is `D(beta) S(Z)|0>`, with `S(Z)` applied as an exact
/// symplectic map so the covariance is always physical.
pub fn quadratic_propagator(
    dipole: &DipoleSignal,
    g: f64,
    omega: f64,
    modes: &[usize],
    options: PropagatorOptions,
) -> Result<QuadraticResult> {
    let dij = dipole.dij.as_ref().ok_or(HhgError::MissingTransitionDipoles)?;
    if dij.basis() < 2 {
        return Err(HhgError::BasisTooSmall(dij.basis()));
    }
    if modes.is_empty() || modes.iter().any(|q| *q == 0) {
        return Err(HhgError::ParameterOutOfRange(
            "need at least one harmonic order >= 1".into(),
        ));
    }
    let dt = dipole.dt;
    let n = dipole.len();
    let q_top = *modes.iter().max().expect("non-empty");
    let samples = 2.0 * std::f64::consts::PI / (q_top as f64 * omega * dt);
    if samples < 8.0 {
        return Err(HhgError::GridTooCoarse(format!(
            "harmonic {q_top} has {samples:.2} samples per period (need >= 8)"
        )));
    }
    let d_norm = (0..n)
        .map(|k| dij.at(k).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let coupling: f64 = modes.iter().map(|q| (*q as f64).sqrt()).sum();
    let order_estimate = g.abs() * coupling * d_norm * dt;
    if order_estimate > ORDER_LIMIT {
        return Err(HhgError::StepTooLarge {
            estimate: order_estimate,
            limit: ORDER_LIMIT,
            suggested_dt: 0.9 * dt * ORDER_LIMIT / order_estimate,
        });
    }
    let phases: Vec<Vec<C64>> = modes
        .iter()
        .map(|q| {
            let w = *q as f64 * omega;
            (0..n).map(|k| C64::from_polar(1.0, w * dipole.time(k))).collect()
        })
        .collect();
    let trapezoid = |f: &dyn Fn(usize) -> C64| -> C64 {
        let inner: C64 = (1..n - 1).map(f).sum();
        (inner + (f(0) + f(n - 1)) * 0.5) * dt
    };
    let beta: Vec<C64> = modes
        .iter()
        .enumerate()
        .map(|(m, q)| trapezoid(&|k| phases[m][k] * dipole.d[k]) * ((*q as f64).sqrt() * g))
        .collect();

    let nm = modes.len();
    let mut z = DMatrix::<C64>::zeros(nm, nm);
    if !options.zero_mixing {
        for k_state in 1..dij.basis() {
            // R_p(t) = int_0^t d_k0 e^{i w_p t'} dt'
            let running: Vec<Vec<C64>> = (0..nm)
                .map(|m| {
                    let mut acc = C64::new(0.0, 0.0);
                    let mut out = vec![acc; n];
                    for k in 1..n {
                        let a = dij.get(k - 1, k_state, 0) * phases[m][k - 1];
                        let b = dij.get(k, k_state, 0) * phases[m][k];
                        acc += (a + b) * (0.5 * dt);
                        out[k] = acc;
                    }
                    out
                })
                .collect();
            for a in 0..nm {
                for b in a..nm {
                    let val = trapezoid(&|k| {
                        dij.get(k, 0, k_state)
                            * (phases[a][k] * running[b][k] + phases[b][k] * running[a][k])
                    });
                    z[(a, b)] += val;
                    if a != b {
                        z[(b, a)] += val;
                    }
                }
            }
        }
        for a in 0..nm {
            for b in 0..nm {
                z[(a, b)] *= g * g * ((modes[a] * modes[b]) as f64).sqrt();
            }
        }
    }
    let state = displaced_squeezed(&beta, &z)?;
    Ok(QuadraticResult {
        state,
        modes: modes.to_vec(),
        beta,
        z,
        order_estimate,
    })
}

/// `D(beta) S(Z)|0>` with `S(Z) = exp((1/2) sum (Z b^dag b^dag - Z^* b b))`.
pub fn displaced_squeezed(beta: &[C64], z: &DMatrix<C64>) -> Result<GaussianState> {
    let n = beta.len();
    // Heisenberg map (b; b^dag) -> exp([[0, Z], [Z^*, 0]]) (b; b^dag)
    let mut gen = DMatrix::<C64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            gen[(i, n + j)] = z[(i, j)];
            gen[(n + i, j)] = z[(i, j)].conj();
        }
    }
    let t = gen.exp();
    // (b; b^dag) = L (x; p) in block ordering
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut l = DMatrix::<C64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        l[(i, i)] = C64::new(s, 0.0);
        l[(i, n + i)] = C64::new(0.0, s);
        l[(n + i, i)] = C64::new(s, 0.0);
        l[(n + i, n + i)] = C64::new(0.0, -s);
    }
    let l_inv = l.adjoint();
    let sr = &l_inv * t * &l;
    let sym = DMatrix::<f64>::from_fn(2 * n, 2 * n, |i, j| sr[(i, j)].re);
    let v_block = &sym * sym.transpose() * 0.5;
    // block (x..., p...) -> interleaved (x1, p1, ...)
    let idx = |k: usize| if k % 2 == 0 { k / 2 } else { n + k / 2 };
    let mut cov = vec![0.0; 4 * n * n];
    for a in 0..2 * n {
        for b in 0..2 * n {
            cov[a * 2 * n + b] = 0.5 * (v_block[(idx(a), idx(b))] + v_block[(idx(b), idx(a))]);
        }
    }
    let mut mean = vec![0.0; 2 * n];
    for (k, b) in beta.iter().enumerate() {
        mean[2 * k] = std::f64::consts::SQRT_2 * b.re;
        mean[2 * k + 1] = std::f64::consts::SQRT_2 * b.im;
    }
    GaussianState::new(mean, cov)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianDiagnostics {
    /// Eigenvalues of each single-mode covariance block, ascending.
    pub principal_variances: Vec<[f64; 2]>,
    /// `10 log10(0.5 / smallest principal variance)`.
    pub squeezing_db: Vec<f64>,
    /// `((i, j), E_N)` in nats for every mode pair.
    pub log_negativity: Vec<((usize, usize), f64)>,
    /// `1 / (2^N sqrt(det V))`.
    pub purity: f64,
    pub min_symplectic_eigenvalue: f64,
    /// Smallest eigenvalue of `V + i Omega / 2`.
    pub uncertainty_min_eigenvalue: f64,
}

impl GaussianDiagnostics {
    pub fn is_physical(&self) -> bool {
        self.min_symplectic_eigenvalue >= 0.5 - 1e-10 && self.uncertainty_min_eigenvalue >= -1e-10
    }
}

pub fn gaussian_diagnostics(state: &GaussianState) -> Result<GaussianDiagnostics> {
    state.validate()?;
    let v = state.cov_matrix();
    let n = state.modes();
    let mut principal_variances = Vec::with_capacity(n);
    let mut squeezing_db = Vec::with_capacity(n);
    for k in 0..n {
        let block = v.fixed_view::<2, 2>(2 * k, 2 * k).into_owned();
        let mut ev: Vec<f64> = block.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        if ev[0] <= 0.0 {
            return Err(HhgError::InvalidCovariance(format!(
                "mode {k} has non-positive variance"
            )));
        }
        squeezing_db.push(10.0 * (0.5 / ev[0]).log10());
        principal_variances.push([ev[0], ev[1]]);
    }
    let mut log_negativity = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let idx = [2 * i, 2 * i + 1, 2 * j, 2 * j + 1];
            let mut sub = DMatrix::<f64>::from_fn(4, 4, |a, b| v[(idx[a], idx[b])]);
            // partial transpose: p_j -> -p_j
            for a in 0..4 {
                sub[(a, 3)] = -sub[(a, 3)];
                sub[(3, a)] = -sub[(3, a)];
            }
            let nu = symplectic_eigenvalues(&sub)?;
            let en: f64 = nu.iter().map(|x| (-(2.0 * x).ln()).max(0.0)).sum();
            log_negativity.push(((i, j), en));
        }
    }
    let det = v.determinant();
    let purity = 1.0 / (2f64.powi(n as i32) * det.sqrt());
    let min_symplectic_eigenvalue = symplectic_eigenvalues(&v)?[0];
    Ok(GaussianDiagnostics {
        principal_variances,
        squeezing_db,
        log_negativity,
        purity,
        min_symplectic_eigenvalue,
        uncertainty_min_eigenvalue: uncertainty_min_eigenvalue(&v),
    })
}

/// Covariance matrix as CSV, one row per matrix row, header `c0,c1,...`.
pub fn write_covariance_csv<W: Write>(state: &GaussianState, w: W) -> Result<()> {
    let n = state.mean.len();
    let mut wr = csv::Writer::from_writer(w);
    let header: Vec<String> = (0..n).map(|k| format!("c{k}")).collect();
    wr.write_record(&header).map_err(io_err)?;
    for r in 0..n {
        wr.write_record(state.cov[r * n..(r + 1) * n].iter().map(|v| fmt_f64(*v)))
            .map_err(io_err)?;
    }
    wr.flush()?;
    Ok(())
}

/// Quadrature means as CSV with header `index,quadrature,mean`.
pub fn write_mean_csv<W: Write>(state: &GaussianState, modes: &[usize], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["q", "quadrature", "mean"]).map_err(io_err)?;
    for (k, v) in state.mean.iter().enumerate() {
        let q = modes.get(k / 2).copied().unwrap_or(k / 2 + 1);
        let quad = if k % 2 == 0 { "x" } else { "p" };
        wr.write_record([q.to_string(), quad.to_string(), fmt_f64(*v)])
            .map_err(io_err)?;
    }
    wr.flush()?;
    Ok(())
}

fn io_err(e: csv::Error) -> HhgError {
    HhgError::Io(e.to_string())
}
