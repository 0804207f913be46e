//! Wigner functions and homodyne quadrature distributions.
//!
//! Convention: `W(x, p)` integrates to one, the vacuum has `W(0, 0) = 1/pi`
//! and a coherent label `a` sits at `(sqrt(2) Re a, sqrt(2) Im a)`.
//! Closed forms are used for every variant; [`wigner_fock_pure`] and
//! [`wigner_fock_density`] compute the same quantity as a displaced-parity
//! expectation in the number basis.

use std::f64::consts::{FRAC_1_PI, PI, SQRT_2};
use std::io::Write;

use nalgebra::{DMatrix, Matrix2, Vector2};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dipole::fmt_f64;
use crate::error::{HhgError, Result};
use crate::fock;
use crate::statespace::{FieldState, GaussianState};

pub const CONVENTION: &str = "hbar=1; x=sqrt(2)Re(alpha), p=sqrt(2)Im(alpha); vacuum variance 1/2; integral W dx dp = 1; W_vac(0,0)=1/pi";

/// Boundary magnitude above which a grid is considered too small.
pub const BOUNDARY_TOLERANCE: f64 = 1e-6;

/// `n` evenly spaced points on `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub start: f64,
    pub end: f64,
    pub n: usize,
}

impl Axis {
    pub fn new(start: f64, end: f64, n: usize) -> Self {
        Axis { start, end, n }
    }

    pub fn symmetric(half_width: f64, n: usize) -> Self {
        Axis::new(-half_width, half_width, n)
    }

    pub fn step(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.end - self.start) / (self.n - 1) as f64
        }
    }

    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.end
        } else {
            self.start + i as f64 * self.step()
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.point(i)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || !(self.end > self.start) || !self.start.is_finite() || !self.end.is_finite()
        {
            return Err(HhgError::ParameterOutOfRange(format!(
                "axis [{}, {}] with {} points",
                self.start, self.end, self.n
            )));
        }
        Ok(())
    }
}

impl Default for Axis {
    fn default() -> Self {
        Axis::symmetric(6.0, 201)
    }
}

/// Samples `W(x_i, p_j)`, stored row-major with `x` as the slow index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WignerGrid {
    pub x_axis: Axis,
    pub p_axis: Axis,
    pub values: Vec<f64>,
    pub convention: String,
}

impl WignerGrid {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.p_axis.n + j]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Location `(x, p)` of the minimum.
    pub fn argmin(&self) -> (f64, f64) {
        let (k, _) = self
            .values
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |b, (k, v)| if *v < b.1 { (k, *v) } else { b });
        let i = k / self.p_axis.n;
        let j = k % self.p_axis.n;
        (self.x_axis.point(i), self.p_axis.point(j))
    }

    /// Trapezoid estimate of `int int W dx dp`.
    pub fn integral(&self) -> f64 {
        let wx = trapezoid_weights(&self.x_axis);
        let wp = trapezoid_weights(&self.p_axis);
        let mut s = 0.0;
        for (i, a) in wx.iter().enumerate() {
            for (j, b) in wp.iter().enumerate() {
                s += a * b * self.get(i, j);
            }
        }
        s
    }

    /// Largest `|W|` on the outer frame of the grid.
    pub fn boundary_max(&self) -> f64 {
        let (nx, np) = (self.x_axis.n, self.p_axis.n);
        let mut m: f64 = 0.0;
        for i in 0..nx {
            m = m.max(self.get(i, 0).abs()).max(self.get(i, np - 1).abs());
        }
        for j in 0..np {
            m = m.max(self.get(0, j).abs()).max(self.get(nx - 1, j).abs());
        }
        m
    }

    /// CSV with header `x,p,W`, one row per grid point.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["x", "p", "W"]).map_err(io_err)?;
        for i in 0..self.x_axis.n {
            let x = fmt_f64(self.x_axis.point(i));
            for j in 0..self.p_axis.n {
                wr.write_record([&x, &fmt_f64(self.p_axis.point(j)), &fmt_f64(self.get(i, j))])
                    .map_err(io_err)?;
            }
        }
        wr.flush()?;
        Ok(())
    }

    pub fn metadata(&self) -> WignerMetadata {
        WignerMetadata {
            convention: self.convention.clone(),
            x_axis: self.x_axis,
            p_axis: self.p_axis,
            integral: self.integral(),
            min: self.min(),
            max: self.max(),
            boundary_max: self.boundary_max(),
        }
    }
}

/// Sidecar describing a [`WignerGrid`] export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WignerMetadata {
    pub convention: String,
    pub x_axis: Axis,
    pub p_axis: Axis,
    pub integral: f64,
    pub min: f64,
    pub max: f64,
    pub boundary_max: f64,
}

fn io_err(e: csv::Error) -> HhgError {
    HhgError::Io(e.to_string())
}

fn trapezoid_weights(axis: &Axis) -> Vec<f64> {
    let h = axis.step();
    (0..axis.n)
        .map(|i| if i == 0 || i + 1 == axis.n { 0.5 * h } else { h })
        .collect()
}

fn single_mode(state: &FieldState) -> Result<()> {
    match state.modes() {
        1 => Ok(()),
        m => Err(HhgError::MultiModeUnsupported(m)),
    }
}

/// `W(x, p)` of a single-mode state from its closed form.
pub fn wigner_point(state: &FieldState, x: f64, p: f64) -> Result<f64> {
    single_mode(state)?;
    let gamma = C64::new(x, p) / SQRT_2;
    Ok(match state {
        FieldState::ProductCoherent(pc) => {
            let a = pc.modes[0].0;
            FRAC_1_PI * (-2.0 * (gamma - a).norm_sqr()).exp()
        }
        FieldState::CoherentSuperposition(s) => {
            let n = s.norm_sqr();
            if !(n > 1e-300) {
                return Err(HhgError::DegenerateSuperposition);
            }
            let mut w = C64::new(0.0, 0.0);
            for (ci, bi) in &s.branches {
                for (cj, bj) in &s.branches {
                    w += ci * cj.conj() * cross_wigner(bi.0, bj.0, gamma);
                }
            }
            w.re / n
        }
        FieldState::DiagonalMixture(m) => {
            // (-1)^n e^{-r^2} L_n(2 r^2) is the normalized Laguerre function at 2 r^2
            let l = fock::laguerre_normalized(0, 2.0 * (x * x + p * p), m.weights.len());
            FRAC_1_PI
                * m.weights
                    .iter()
                    .zip(&l)
                    .enumerate()
                    .map(|(n, (w, v))| if n % 2 == 0 { w * v } else { -w * v })
                    .sum::<f64>()
        }
        FieldState::TruncatedFock(f) => wigner_fock_pure(f.amplitudes(), x, p) / f.norm_sqr(),
        FieldState::Gaussian(g) => gaussian_wigner(g, x, p)?,
    })
}

/// `W` of the operator `|a><b|`: `<b|a> e^{-2 (g - a)(g^* - b^*)} / pi`.
fn cross_wigner(a: C64, b: C64, gamma: C64) -> C64 {
    let ln_overlap = -0.5 * a.norm_sqr() - 0.5 * b.norm_sqr() + b.conj() * a;
    FRAC_1_PI * (ln_overlap - 2.0 * (gamma - a) * (gamma.conj() - b.conj())).exp()
}

fn gaussian_wigner(g: &GaussianState, x: f64, p: f64) -> Result<f64> {
    let v = Matrix2::new(g.cov[0], g.cov[1], g.cov[2], g.cov[3]);
    let det = v.determinant();
    let inv = v
        .try_inverse()
        .ok_or_else(|| HhgError::InvalidCovariance("singular covariance".into()))?;
    let d = Vector2::new(x - g.mean[0], p - g.mean[1]);
    Ok((-0.5 * d.dot(&(inv * d))).exp() / (2.0 * PI * det.sqrt()))
}

/// Evaluates `W` on `x_axis x p_axis`; fails with `GridTooSmall` when the
/// function has not decayed to `BOUNDARY_TOLERANCE` on the frame.
pub fn wigner_of(state: &FieldState, x_axis: Axis, p_axis: Axis) -> Result<WignerGrid> {
    let grid = wigner_of_unchecked(state, x_axis, p_axis)?;
    let boundary = grid.boundary_max();
    if boundary > BOUNDARY_TOLERANCE {
        return Err(HhgError::GridTooSmall { boundary });
    }
    Ok(grid)
}

/// As [`wigner_of`] without the boundary check.
pub fn wigner_of_unchecked(state: &FieldState, x_axis: Axis, p_axis: Axis) -> Result<WignerGrid> {
    single_mode(state)?;
    x_axis.validate()?;
    p_axis.validate()?;
    if let FieldState::Gaussian(g) = state {
        g.validate()?;
    }
    let rows: Result<Vec<Vec<f64>>> = (0..x_axis.n)
        .into_par_iter()
        .map(|i| {
            let x = x_axis.point(i);
            (0..p_axis.n)
                .map(|j| wigner_point(state, x, p_axis.point(j)))
                .collect()
        })
        .collect();
    Ok(WignerGrid {
        x_axis,
        p_axis,
        values: rows?.concat(),
        convention: CONVENTION.to_string(),
    })
}

/// Output cutoff for `D(-gamma)` acting on `in_dim` levels.
fn parity_cutoff(in_dim: usize, gamma: C64) -> usize {
    let r = gamma.norm();
    in_dim + (r * r + 10.0 * r).ceil() as usize + 20
}

/// Displaced parity `(1/pi) sum_k (-1)^k |<k|D(-gamma)|psi>|^2` for a
/// normalized pure state given by number-basis amplitudes.
pub fn wigner_fock_pure(psi: &[C64], x: f64, p: f64) -> f64 {
    let gamma = C64::new(x, p) / SQRT_2;
    let shifted = fock::displace_exact(psi, -gamma, parity_cutoff(psi.len(), gamma));
    FRAC_1_PI
        * shifted
            .iter()
            .enumerate()
            .map(|(k, a)| if k % 2 == 0 { a.norm_sqr() } else { -a.norm_sqr() })
            .sum::<f64>()
}

/// Displaced parity `(1/pi) Tr[Pi D(-gamma) rho D(gamma)]` of a density matrix.
pub fn wigner_fock_density(rho: &DMatrix<C64>, x: f64, p: f64) -> f64 {
    let gamma = C64::new(x, p) / SQRT_2;
    let dim = rho.nrows();
    let d = fock::displacement_matrix(-gamma, parity_cutoff(dim, gamma), dim);
    let shifted = &d * rho * d.adjoint();
    FRAC_1_PI
        * (0..shifted.nrows())
            .map(|k| if k % 2 == 0 { shifted[(k, k)].re } else { -shifted[(k, k)].re })
            .sum::<f64>()
}

/// Homodyne distribution of `x_phi = x cos(phi) + p sin(phi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraturePdf {
    pub phase: f64,
    pub x_axis: Axis,
    pub pdf: Vec<f64>,
}

impl QuadraturePdf {
    pub fn integral(&self) -> f64 {
        trapezoid_weights(&self.x_axis)
            .iter()
            .zip(&self.pdf)
            .map(|(w, v)| w * v)
            .sum()
    }
}

/// `<x|beta>` with `x0 = sqrt(2) Re beta`, `p0 = sqrt(2) Im beta`.
fn coherent_wavefunction(beta: C64, x: f64) -> C64 {
    let (x0, p0) = (SQRT_2 * beta.re, SQRT_2 * beta.im);
    let arg = C64::new(-0.5 * (x - x0).powi(2), p0 * x - 0.5 * x0 * p0);
    PI.powf(-0.25) * arg.exp()
}

/// Quadrature distribution at local-oscillator phase `phase`.
pub fn quadrature_pdf(state: &FieldState, phase: f64, x_axis: Axis) -> Result<QuadraturePdf> {
    single_mode(state)?;
    x_axis.validate()?;
    let rot = C64::from_polar(1.0, -phase);
    let xs = x_axis.points();
    let pdf: Vec<f64> = match state {
        FieldState::ProductCoherent(pc) => {
            let b = pc.modes[0].0 * rot;
            xs.iter().map(|&x| coherent_wavefunction(b, x).norm_sqr()).collect()
        }
        FieldState::CoherentSuperposition(s) => {
            let n = s.norm_sqr();
            if !(n > 1e-300) {
                return Err(HhgError::DegenerateSuperposition);
            }
            xs.iter()
                .map(|&x| {
                    s.branches
                        .iter()
                        .map(|(c, b)| c * coherent_wavefunction(b.0 * rot, x))
                        .sum::<C64>()
                        .norm_sqr()
                        / n
                })
                .collect()
        }
        FieldState::DiagonalMixture(m) => xs
            .iter()
            .map(|&x| {
                let h = fock::hermite_functions(x, m.weights.len());
                m.weights.iter().zip(&h).map(|(w, v)| w * v * v).sum()
            })
            .collect(),
        FieldState::TruncatedFock(f) => {
            let amps = f.amplitudes();
            let norm = f.norm_sqr();
            xs.iter()
                .map(|&x| {
                    let h = fock::hermite_functions(x, amps.len());
                    amps.iter()
                        .zip(&h)
                        .enumerate()
                        .map(|(n, (a, v))| a * C64::from_polar(*v, -phase * n as f64))
                        .sum::<C64>()
                        .norm_sqr()
                        / norm
                })
                .collect()
        }
        FieldState::Gaussian(g) => {
            g.validate()?;
            let (c, s) = (phase.cos(), phase.sin());
            let mean = c * g.mean[0] + s * g.mean[1];
            let var = c * c * g.cov[0] + 2.0 * c * s * g.cov[1] + s * s * g.cov[3];
            xs.iter()
                .map(|&x| (-(x - mean).powi(2) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt())
                .collect()
        }
    };
    Ok(QuadraturePdf {
        phase,
        x_axis,
        pdf,
    })
}

/// Number-basis quadrature distribution `|sum_n c_n e^{-i phi n} psi_n(x)|^2`.
pub fn quadrature_pdf_fock(psi: &[C64], phase: f64, x: f64) -> f64 {
    let h = fock::hermite_functions(x, psi.len());
    psi.iter()
        .zip(&h)
        .enumerate()
        .map(|(n, (a, v))| a * C64::from_polar(*v, -phase * n as f64))
        .sum::<C64>()
        .norm_sqr()
}

/// Marginal of a Wigner grid along the axis orthogonal to `x_phi`, sampled
/// at the grid's `x` points.
///
/// Phases that are multiples of `pi/2` on a grid symmetric in both axes
/// reduce to sums over grid lines; other phases use bilinear interpolation
/// along the rotated line.
pub fn wigner_marginal(grid: &WignerGrid, phase: f64) -> Vec<f64> {
    let quarter = phase / (0.5 * PI);
    let k = quarter.round();
    let aligned = (quarter - k).abs() < 1e-12
        && grid.x_axis == grid.p_axis
        && (grid.x_axis.start + grid.x_axis.end).abs() < 1e-12;
    let (nx, np) = (grid.x_axis.n, grid.p_axis.n);
    if aligned {
        let wx = trapezoid_weights(&grid.x_axis);
        let wp = trapezoid_weights(&grid.p_axis);
        let turns = (k as i64).rem_euclid(4);
        return (0..nx)
            .map(|i| match turns {
                0 => (0..np).map(|j| wp[j] * grid.get(i, j)).sum(),
                1 => (0..nx).map(|m| wx[m] * grid.get(m, i)).sum(),
                2 => (0..np).map(|j| wp[j] * grid.get(nx - 1 - i, j)).sum(),
                _ => (0..nx).map(|m| wx[m] * grid.get(m, np - 1 - i)).sum(),
            })
            .collect();
    }
    let (c, s) = (phase.cos(), phase.sin());
    let h = grid.p_axis.step();
    let vmax = grid
        .x_axis
        .start
        .abs()
        .max(grid.x_axis.end.abs())
        .hypot(grid.p_axis.start.abs().max(grid.p_axis.end.abs()));
    let nv = (vmax / h).ceil() as i64;
    (0..nx)
        .map(|i| {
            let u = grid.x_axis.point(i);
            (-nv..=nv)
                .map(|m| {
                    let v = m as f64 * h;
                    bilinear(grid, u * c - v * s, u * s + v * c)
                })
                .sum::<f64>()
                * h
        })
        .collect()
}

fn bilinear(grid: &WignerGrid, x: f64, p: f64) -> f64 {
    let fx = (x - grid.x_axis.start) / grid.x_axis.step();
    let fp = (p - grid.p_axis.start) / grid.p_axis.step();
    if fx < 0.0 || fp < 0.0 || fx > (grid.x_axis.n - 1) as f64 || fp > (grid.p_axis.n - 1) as f64 {
        return 0.0;
    }
    let i = (fx.floor() as usize).min(grid.x_axis.n - 2);
    let j = (fp.floor() as usize).min(grid.p_axis.n - 2);
    let (a, b) = (fx - i as f64, fp - j as f64);
    (1.0 - a) * (1.0 - b) * grid.get(i, j)
        + a * (1.0 - b) * grid.get(i + 1, j)
        + (1.0 - a) * b * grid.get(i, j + 1)
        + a * b * grid.get(i + 1, j + 1)
}

/// Largest deviation between the Wigner marginal at `phase` and the
/// directly computed quadrature distribution of `state`.
pub fn wigner_marginal_consistency(state: &FieldState, grid: &WignerGrid, phase: f64) -> Result<f64> {
    let marginal = wigner_marginal(grid, phase);
    let direct = quadrature_pdf(state, phase, grid.x_axis)?;
    Ok(marginal
        .iter()
        .zip(&direct.pdf)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// Writes `phase,x,pdf` rows for several distributions.
pub fn write_quadratures_csv<W: Write>(pdfs: &[QuadraturePdf], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["phase", "x", "pdf"]).map_err(io_err)?;
    for q in pdfs {
        let ph = fmt_f64(q.phase);
        for (i, v) in q.pdf.iter().enumerate() {
            wr.write_record([&ph, &fmt_f64(q.x_axis.point(i)), &fmt_f64(*v)])
                .map_err(io_err)?;
        }
    }
    wr.flush()?;
    Ok(())
}
