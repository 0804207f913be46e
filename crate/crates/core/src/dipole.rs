//! Dipole signals of a laser-driven atom.
//!
//! Two built-in models are provided: a two-level atom integrated exactly
//! (fixed-step RK4 on the full propagator, so transition dipoles are
//! available) and the strong-field approximation for a hydrogen-like
//! ground state. Measured or externally computed signals enter through the
//! CSV ingestion path.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HhgError, Result};

/// Default regularization of the wave-packet spreading factor in the SFA.
pub const SFA_EPSILON: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Envelope {
    /// Constant amplitude after a `sin^2` turn-on lasting `ramp_cycles`.
    Flat { ramp_cycles: f64 },
    /// `sin^2(pi t / T)` over the whole pulse.
    Sin2,
    /// Gaussian centred in the pulse window.
    Gaussian { fwhm_cycles: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondColor {
    /// Amplitude of the `2 omega` component relative to the fundamental.
    pub relative_amplitude: f64,
    /// Phase of the `2 omega` component, radians.
    pub relative_phase: f64,
}

/// Classical driving field
/// `E(t) = E0 f(t) [sin(w t + cep) + r sin(2 (w t + cep) + phi)]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseConfig {
    pub omega: f64,
    pub e0: f64,
    pub envelope: Envelope,
    /// Pulse duration in fundamental cycles.
    pub cycles: f64,
    pub cep: f64,
    pub second_color: Option<SecondColor>,
}

impl PulseConfig {
    pub fn new(omega: f64, e0: f64, envelope: Envelope, cycles: f64) -> Self {
        PulseConfig {
            omega,
            e0,
            envelope,
            cycles,
            cep: 0.0,
            second_color: None,
        }
    }

    pub fn with_second_color(mut self, relative_amplitude: f64, relative_phase: f64) -> Self {
        self.second_color = Some(SecondColor {
            relative_amplitude,
            relative_phase,
        });
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(HhgError::ParameterOutOfRange(format!(
                "omega must be > 0, got {}",
                self.omega
            )));
        }
        if !(self.e0 >= 0.0 && self.e0.is_finite()) {
            return Err(HhgError::ParameterOutOfRange(format!(
                "E0 must be >= 0, got {}",
                self.e0
            )));
        }
        if !(self.cycles >= 1.0) {
            return Err(HhgError::ParameterOutOfRange(format!(
                "duration must be >= 1 cycle, got {}",
                self.cycles
            )));
        }
        match self.envelope {
            Envelope::Flat { ramp_cycles } if !(0.0..=self.cycles).contains(&ramp_cycles) => {
                return Err(HhgError::ParameterOutOfRange(format!(
                    "ramp of {ramp_cycles} cycles does not fit the pulse"
                )))
            }
            Envelope::Gaussian { fwhm_cycles } if !(fwhm_cycles > 0.0) => {
                return Err(HhgError::ParameterOutOfRange("gaussian FWHM must be > 0".into()))
            }
            _ => {}
        }
        Ok(())
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega
    }

    pub fn duration(&self) -> f64 {
        self.cycles * self.period()
    }

    pub fn envelope_at(&self, t: f64) -> f64 {
        let total = self.duration();
        if !(0.0..=total).contains(&t) {
            return 0.0;
        }
        match self.envelope {
            Envelope::Flat { ramp_cycles } => {
                let ramp = ramp_cycles * self.period();
                if t < ramp {
                    (0.5 * PI * t / ramp).sin().powi(2)
                } else {
                    1.0
                }
            }
            Envelope::Sin2 => (PI * t / total).sin().powi(2),
            Envelope::Gaussian { fwhm_cycles } => {
                let fwhm = fwhm_cycles * self.period();
                let x = t - 0.5 * total;
                (-4.0 * 2f64.ln() * x * x / (fwhm * fwhm)).exp()
            }
        }
    }

    pub fn field(&self, t: f64) -> f64 {
        let phase = self.omega * t + self.cep;
        let mut carrier = phase.sin();
        if let Some(sc) = self.second_color {
            carrier += sc.relative_amplitude * (2.0 * phase + sc.relative_phase).sin();
        }
        self.e0 * self.envelope_at(t) * carrier
    }

    /// Highest carrier frequency present in the drive.
    pub fn max_carrier_frequency(&self) -> f64 {
        match self.second_color {
            Some(sc) if sc.relative_amplitude != 0.0 => 2.0 * self.omega,
            _ => self.omega,
        }
    }

    /// Peak of `|E(t)|` bound.
    pub fn peak_field_bound(&self) -> f64 {
        self.e0 * (1.0 + self.second_color.map_or(0.0, |s| s.relative_amplitude.abs()))
    }

    /// Ponderomotive energy `E0^2 / (4 w^2)`.
    pub fn ponderomotive_energy(&self) -> f64 {
        self.e0 * self.e0 / (4.0 * self.omega * self.omega)
    }
}

/// Uniform time grid `t_k = t0 + k dt`, `k < len`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t0: f64,
    pub dt: f64,
    pub len: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, dt: f64, len: usize) -> Self {
        TimeGrid { t0, dt, len }
    }

    /// Grid covering `[0, pulse duration]` with `per_cycle` points per cycle.
    pub fn for_pulse(pulse: &PulseConfig, per_cycle: usize) -> Self {
        let dt = pulse.period() / per_cycle as f64;
        let len = (pulse.cycles * per_cycle as f64).round() as usize + 1;
        TimeGrid { t0: 0.0, dt, len }
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn end(&self) -> f64 {
        self.time(self.len.saturating_sub(1))
    }
}

/// Transition dipoles `d_ij(t_k)` on a finite atomic basis; state 0 is the
/// ground state.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionDipoles {
    basis: usize,
    /// Time-major, then row-major `basis x basis`.
    data: Vec<C64>,
}

impl TransitionDipoles {
    pub fn new(basis: usize, data: Vec<C64>) -> Result<Self> {
        if basis == 0 || data.len() % (basis * basis) != 0 {
            return Err(HhgError::DimensionMismatch(format!(
                "{} entries do not form {basis}x{basis} matrices",
                data.len()
            )));
        }
        Ok(TransitionDipoles { basis, data })
    }

    pub fn basis(&self) -> usize {
        self.basis
    }

    pub fn len(&self) -> usize {
        self.data.len() / (self.basis * self.basis)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, k: usize, i: usize, j: usize) -> C64 {
        self.data[k * self.basis * self.basis + i * self.basis + j]
    }

    /// Matrix at time index `k`, row-major.
    pub fn at(&self, k: usize) -> &[C64] {
        let b2 = self.basis * self.basis;
        &self.data[k * b2..(k + 1) * b2]
    }

    /// `<d(t)> 1`: the classical-current replacement in which the dipole
    /// operator commutes with itself at all times.
    pub fn mean_field(d: &[f64], basis: usize) -> Self {
        let b2 = basis * basis;
        let mut data = vec![C64::new(0.0, 0.0); d.len() * b2];
        for (k, v) in d.iter().enumerate() {
            for i in 0..basis {
                data[k * b2 + i * basis + i] = C64::new(*v, 0.0);
            }
        }
        TransitionDipoles { basis, data }
    }
}

/// Uniformly sampled `<d(t)>` with optional transition dipoles.
#[derive(Debug, Clone, PartialEq)]
pub struct DipoleSignal {
    pub t0: f64,
    pub dt: f64,
    pub d: Vec<f64>,
    pub dij: Option<TransitionDipoles>,
}

impl DipoleSignal {
    pub fn new(t0: f64, dt: f64, d: Vec<f64>, dij: Option<TransitionDipoles>) -> Result<Self> {
        if d.len() < 2 {
            return Err(HhgError::GridTooCoarse(format!(
                "dipole signal needs at least 2 samples, got {}",
                d.len()
            )));
        }
        if !(dt > 0.0 && dt.is_finite() && t0.is_finite()) {
            return Err(HhgError::ParameterOutOfRange(format!(
                "time step must be positive and finite, got {dt}"
            )));
        }
        if let Some(row) = d.iter().position(|v| !v.is_finite()) {
            return Err(HhgError::NonFiniteValue { row });
        }
        if let Some(t) = &dij {
            if t.len() != d.len() {
                return Err(HhgError::DimensionMismatch(format!(
                    "{} transition-dipole samples for {} dipole samples",
                    t.len(),
                    d.len()
                )));
            }
        }
        Ok(DipoleSignal { t0, dt, d, dij })
    }

    /// Samples a closure on a grid.
    pub fn from_fn(grid: TimeGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let d = (0..grid.len).map(|k| f(grid.time(k))).collect();
        Self::new(grid.t0, grid.dt, d, None)
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn end(&self) -> f64 {
        self.time(self.len() - 1)
    }

    pub fn grid(&self) -> TimeGrid {
        TimeGrid::new(self.t0, self.dt, self.len())
    }

    /// Same `<d(t)>` with `d_ij` replaced by its classical-current form.
    pub fn mean_field(&self) -> Self {
        let basis = self.dij.as_ref().map_or(2, |t| t.basis());
        DipoleSignal {
            t0: self.t0,
            dt: self.dt,
            d: self.d.clone(),
            dij: Some(TransitionDipoles::mean_field(&self.d, basis)),
        }
    }

    /// Sub-signal on samples `[start, end)`.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        let dij = match &self.dij {
            Some(t) => {
                let b2 = t.basis() * t.basis();
                Some(TransitionDipoles::new(
                    t.basis(),
                    t.data[start * b2..end * b2].to_vec(),
                )?)
            }
            None => None,
        };
        Self::new(self.time(start), self.dt, self.d[start..end].to_vec(), dij)
    }

    /// Writes the documented CSV layout: `t,d` followed by `re_ij,im_ij`
    /// column pairs in row-major order when transition dipoles are present.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string(), "d".to_string()];
        if let Some(t) = &self.dij {
            for i in 0..t.basis() {
                for j in 0..t.basis() {
                    header.push(format!("re{i}{j}"));
                    header.push(format!("im{i}{j}"));
                }
            }
        }
        wr.write_record(&header).map_err(csv_err)?;
        for k in 0..self.len() {
            let mut row = vec![fmt_f64(self.time(k)), fmt_f64(self.d[k])];
            if let Some(t) = &self.dij {
                for z in t.at(k) {
                    row.push(fmt_f64(z.re));
                    row.push(fmt_f64(z.im));
                }
            }
            wr.write_record(&row).map_err(csv_err)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn export(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// Round-trip float formatting (17 significant digits).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_err(e: csv::Error) -> HhgError {
    let line = e.position().map_or(0, |p| p.line() as usize);
    HhgError::ParseError {
        line,
        msg: e.to_string(),
    }
}

/// Reads a dipole CSV (see [`DipoleSignal::write_csv`]).
pub fn ingest_dipole(path: &Path) -> Result<DipoleSignal> {
    read_dipole_csv(std::fs::File::open(path)?)
}

pub fn read_dipole_csv<R: Read>(r: R) -> Result<DipoleSignal> {
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let header = rd.headers().map_err(csv_err)?.clone();
    let ncols = header.len();
    if ncols < 2 || header.get(0) != Some("t") || header.get(1) != Some("d") {
        return Err(HhgError::ParseError {
            line: 1,
            msg: "header must start with `t,d`".into(),
        });
    }
    let extra = ncols - 2;
    let basis = if extra == 0 {
        0
    } else {
        let b = ((extra / 2) as f64).sqrt().round() as usize;
        if extra % 2 != 0 || b * b * 2 != extra {
            return Err(HhgError::ParseError {
                line: 1,
                msg: format!("{extra} transition-dipole columns do not form a square basis"),
            });
        }
        b
    };
    let mut times = Vec::new();
    let mut d = Vec::new();
    let mut dij = Vec::new();
    for (row, rec) in rd.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = row + 2;
        if rec.len() != ncols {
            return Err(HhgError::ParseError {
                line,
                msg: format!("expected {ncols} fields, found {}", rec.len()),
            });
        }
        let mut vals = Vec::with_capacity(ncols);
        for field in rec.iter() {
            let v: f64 = field.parse().map_err(|_| HhgError::ParseError {
                line,
                msg: format!("cannot parse `{field}` as a number"),
            })?;
            if !v.is_finite() {
                return Err(HhgError::NonFiniteValue { row });
            }
            vals.push(v);
        }
        times.push(vals[0]);
        d.push(vals[1]);
        for pair in vals[2..].chunks(2) {
            dij.push(C64::new(pair[0], pair[1]));
        }
    }
    if times.len() < 2 {
        return Err(HhgError::ParseError {
            line: times.len() + 1,
            msg: "need at least two samples".into(),
        });
    }
    let n = times.len();
    let t0 = times[0];
    let span = times[n - 1] - t0;
    let nominal = span / (n - 1) as f64;
    if !(nominal > 0.0) {
        return Err(HhgError::NonUniformGrid { row: 1 });
    }
    for k in 1..n {
        let step = times[k] - times[k - 1];
        if !(step > 0.0) || (step - nominal).abs() > 1e-9 * nominal.max(1.0) * n as f64 {
            return Err(HhgError::NonUniformGrid { row: k });
        }
        if (times[k] - (t0 + k as f64 * nominal)).abs() > 1e-9 * span.abs().max(nominal) {
            return Err(HhgError::NonUniformGrid { row: k });
        }
    }
    // pick the representable step that reproduces the most sample times
    let candidates = [
        nominal,
        next_up(nominal),
        next_down(nominal),
        times[1] - t0,
    ];
    let dt = candidates
        .iter()
        .copied()
        .max_by_key(|c| (0..n).filter(|&k| t0 + k as f64 * c == times[k]).count())
        .unwrap_or(nominal);
    let dij = if basis > 0 {
        Some(TransitionDipoles::new(basis, dij)?)
    } else {
        None
    };
    DipoleSignal::new(t0, dt, d, dij)
}

fn next_up(x: f64) -> f64 {
    f64::from_bits(x.to_bits() + 1)
}

fn next_down(x: f64) -> f64 {
    f64::from_bits(x.to_bits() - 1)
}

/// Two-level atom: ground `|0>`, excited `|1>` at `level_splitting`, dipole
/// operator `mu sigma_x`, Hamiltonian `H_A - d E(t)`.
///
/// The full 2x2 propagator is integrated with fixed-step RK4, which yields
/// `<d(t)> = d_00(t)` and `d_ij(t) = (U^dag d U)_ij`.
pub fn solve_two_level(
    pulse: &PulseConfig,
    dipole_matrix_element: f64,
    level_splitting: f64,
    grid: TimeGrid,
) -> Result<DipoleSignal> {
    pulse.validate()?;
    if grid.len < 2 || !(grid.dt > 0.0) {
        return Err(HhgError::GridTooCoarse("need at least 2 positive steps".into()));
    }
    let mu = dipole_matrix_element;
    let coupling = 2.0 * mu.abs() * pulse.peak_field_bound();
    let fastest = pulse
        .max_carrier_frequency()
        .max((level_splitting.powi(2) + coupling.powi(2)).sqrt());
    let points = 2.0 * PI / (fastest * grid.dt);
    if points < 40.0 {
        return Err(HhgError::GridTooCoarse(format!(
            "{points:.1} points per fastest period (need >= 40)"
        )));
    }

    // U as [u00, u01, u10, u11]
    let deriv = |t: f64, u: &[C64; 4]| -> [C64; 4] {
        let off = -mu * pulse.field(t);
        // -i H U with H = [[0, off], [off, delta]]
        let mi = C64::new(0.0, -1.0);
        [
            mi * (off * u[2]),
            mi * (off * u[3]),
            mi * (off * u[0] + level_splitting * u[2]),
            mi * (off * u[1] + level_splitting * u[3]),
        ]
    };
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let mut u = [one, zero, zero, one];
    let mut d = Vec::with_capacity(grid.len);
    let mut dij = Vec::with_capacity(grid.len * 4);
    let h = grid.dt;
    for k in 0..grid.len {
        // d(t) = U^dag (mu sigma_x) U
        let (a, b, c, e) = (u[0], u[1], u[2], u[3]);
        let m00 = mu * (a.conj() * c + c.conj() * a);
        let m01 = mu * (a.conj() * e + c.conj() * b);
        let m10 = m01.conj();
        let m11 = mu * (b.conj() * e + e.conj() * b);
        d.push(m00.re);
        dij.extend_from_slice(&[m00, m01, m10, m11]);
        if k + 1 == grid.len {
            break;
        }
        let t = grid.time(k);
        let k1 = deriv(t, &u);
        let y2 = add_scaled(&u, &k1, 0.5 * h);
        let k2 = deriv(t + 0.5 * h, &y2);
        let y3 = add_scaled(&u, &k2, 0.5 * h);
        let k3 = deriv(t + 0.5 * h, &y3);
        let y4 = add_scaled(&u, &k3, h);
        let k4 = deriv(t + h, &y4);
        for i in 0..4 {
            u[i] += (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (h / 6.0);
        }
        reorthonormalize(&mut u);
        if u.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(HhgError::NonFiniteState { step: k + 1 });
        }
    }
    DipoleSignal::new(grid.t0, grid.dt, d, Some(TransitionDipoles::new(2, dij)?))
}

// Gram-Schmidt on the columns keeps U unitary; RK4 alone drifts as h^4 per period
fn reorthonormalize(u: &mut [C64; 4]) {
    let n0 = (u[0].norm_sqr() + u[2].norm_sqr()).sqrt();
    u[0] /= n0;
    u[2] /= n0;
    let p = u[0].conj() * u[1] + u[2].conj() * u[3];
    u[1] -= p * u[0];
    u[3] -= p * u[2];
    let n1 = (u[1].norm_sqr() + u[3].norm_sqr()).sqrt();
    u[1] /= n1;
    u[3] /= n1;
}

fn add_scaled(u: &[C64; 4], k: &[C64; 4], s: f64) -> [C64; 4] {
    [u[0] + k[0] * s, u[1] + k[1] * s, u[2] + k[2] * s, u[3] + k[3] * s]
}

/// Bound-continuum dipole of a hydrogen-like ground state,
/// `i 2^{7/2} (2 Ip)^{5/4} / pi * v / (v^2 + 2 Ip)^3`, without the `i`.
fn hydrogenic_dipole(v: f64, ip: f64) -> f64 {
    let a = 2.0 * ip;
    2f64.powf(3.5) * a.powf(1.25) / PI * v / (v * v + a).powi(3)
}

/// Strong-field-approximation dipole with the default regularization.
pub fn solve_sfa(pulse: &PulseConfig, ionization_potential: f64, grid: TimeGrid) -> Result<DipoleSignal> {
    solve_sfa_with(pulse, ionization_potential, grid, SFA_EPSILON)
}

/// Single-active-electron SFA dipole
///
/// `x(t) = i int_0^t dt' (pi / (eps + i tau/2))^{3/2} d*(p_s + A(t)) d(p_s + A(t')) E(t') e^{-i S} + c.c.`
///
/// with the stationary momentum `p_s = -(1/tau) int_{t'}^t A` and the
/// quasi-classical action `S = Ip tau + (int A^2 - (int A)^2 / tau) / 2`.
/// Both time integrals are evaluated directly on the grid; the returned
/// dipole is `-x(t)`.
pub fn solve_sfa_with(
    pulse: &PulseConfig,
    ionization_potential: f64,
    grid: TimeGrid,
    epsilon: f64,
) -> Result<DipoleSignal> {
    pulse.validate()?;
    let ip = ionization_potential;
    if !(ip > 0.0) || !(epsilon > 0.0) {
        return Err(HhgError::ParameterOutOfRange(
            "ionization potential and regularization must be positive".into(),
        ));
    }
    if grid.len < 2 {
        return Err(HhgError::GridTooCoarse("need at least 2 samples".into()));
    }
    let up = pulse.ponderomotive_energy()
        * (1.0 + pulse.second_color.map_or(0.0, |s| s.relative_amplitude.abs())).powi(2);
    let max_energy = 3.17 * up + 1.32 * ip;
    let samples = 2.0 * PI / (max_energy * grid.dt);
    if samples < 4.0 {
        return Err(HhgError::ParameterOutOfRange(format!(
            "cutoff photon energy {max_energy:.3} a.u. has only {samples:.2} samples per period"
        )));
    }
    if grid.end() < pulse.duration() - 0.5 * grid.dt || grid.t0 > 0.0 {
        return Err(HhgError::ParameterOutOfRange(
            "grid must span the whole pulse".into(),
        ));
    }
    let n = grid.len;
    let h = grid.dt;
    if pulse.e0 == 0.0 {
        return DipoleSignal::new(grid.t0, h, vec![0.0; n], None);
    }
    let e: Vec<f64> = (0..n).map(|k| pulse.field(grid.time(k))).collect();
    // A = -int E, then running integrals of A and A^2
    let mut a = vec![0.0; n];
    let mut ia = vec![0.0; n];
    let mut ia2 = vec![0.0; n];
    for k in 1..n {
        a[k] = a[k - 1] - 0.5 * h * (e[k] + e[k - 1]);
        ia[k] = ia[k - 1] + 0.5 * h * (a[k] + a[k - 1]);
        ia2[k] = ia2[k - 1] + 0.5 * h * (a[k] * a[k] + a[k - 1] * a[k - 1]);
    }
    let spread: Vec<C64> = (0..n)
        .map(|m| {
            let tau = m as f64 * h;
            (C64::new(PI, 0.0) / C64::new(epsilon, 0.5 * tau)).powf(1.5)
        })
        .collect();
    let d: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|k| {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..k {
                let m = k - j;
                let tau = m as f64 * h;
                let da = ia[k] - ia[j];
                let ps = -da / tau;
                let action = ip * tau + 0.5 * (ia2[k] - ia2[j] - da * da / tau);
                let rec = hydrogenic_dipole(ps + a[k], ip);
                let ion = hydrogenic_dipole(ps + a[j], ip);
                let w = if j == 0 { 0.5 } else { 1.0 };
                acc += spread[m] * (w * rec * ion * e[j]) * C64::new(0.0, -action).exp();
            }
            // x = i * acc * h + c.c. = -2 h Im(acc); dipole = -x
            2.0 * h * acc.im
        })
        .collect();
    DipoleSignal::new(grid.t0, h, d, None)
}

/// Semiclassical cutoff photon energy `3.17 Up + Ip`.
pub fn semiclassical_cutoff_energy(pulse: &PulseConfig, ip: f64) -> f64 {
    3.17 * pulse.ponderomotive_energy() + ip
}

/// Hann weights over `len` samples.
pub fn hann(len: usize) -> Vec<f64> {
    if len < 2 {
        return vec![1.0; len];
    }
    (0..len)
        .map(|k| (PI * k as f64 / (len - 1) as f64).sin().powi(2))
        .collect()
}

/// Power per harmonic order: `|d_w(omega')|^2` of the Hann-windowed
/// dipole integrated over `[q - 1/2, q + 1/2] omega` for `q = 1..=q_max`.
pub fn harmonic_powers(signal: &DipoleSignal, omega: f64, q_max: usize) -> Vec<f64> {
    let w = hann(signal.len());
    let per_order = 16usize;
    let df = omega / per_order as f64;
    (1..=q_max)
        .into_par_iter()
        .map(|q| {
            let mut total = 0.0;
            for s in 0..per_order {
                let f = (q as f64 - 0.5) * omega + (s as f64 + 0.5) * df;
                let amp: C64 = signal
                    .d
                    .iter()
                    .zip(&w)
                    .enumerate()
                    .map(|(k, (d, wk))| C64::from_polar(d * wk, f * signal.time(k)))
                    .sum::<C64>()
                    * signal.dt;
                total += amp.norm_sqr() * df;
            }
            total
        })
        .collect()
}

/// Default plateau drop used to locate the cutoff.
pub const CUTOFF_DROP: f64 = 0.1;

/// Highest odd harmonic order whose power is at least `drop` times the
/// plateau level. The plateau level is the median log power of the odd
/// orders from 7 upward that lie within four decades of their maximum.
pub fn detect_cutoff(powers: &[f64], drop: f64) -> f64 {
    let logs: Vec<f64> = powers.iter().map(|p| p.max(1e-300).log10()).collect();
    let odd: Vec<(usize, f64)> = logs
        .iter()
        .enumerate()
        .filter(|(i, _)| (i + 1) % 2 == 1 && i + 1 >= 7)
        .map(|(i, l)| (i + 1, *l))
        .collect();
    if odd.is_empty() {
        return 0.0;
    }
    let top = odd.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
    let mut plateau: Vec<f64> = odd.iter().map(|x| x.1).filter(|l| *l > top - 4.0).collect();
    plateau.sort_by(|a, b| a.total_cmp(b));
    let median = plateau[plateau.len() / 2];
    let threshold = median + drop.log10();
    odd.iter()
        .filter(|(_, l)| *l >= threshold)
        .map(|(q, _)| *q as f64)
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pulse_validation() {
        let mut p = PulseConfig::new(0.057, 0.05, Envelope::Sin2, 4.0);
        assert!(p.validate().is_ok());
        p.omega = 0.0;
        assert!(p.validate().is_err());
        let q = PulseConfig::new(0.057, -1.0, Envelope::Sin2, 4.0);
        assert!(q.validate().is_err());
        let r = PulseConfig::new(0.057, 0.1, Envelope::Sin2, 0.5);
        assert!(r.validate().is_err());
        let s = PulseConfig::new(0.057, 0.1, Envelope::Flat { ramp_cycles: 9.0 }, 4.0);
        assert!(s.validate().is_err());
    }

    #[test]
    fn envelopes() {
        let p = PulseConfig::new(1.0, 1.0, Envelope::Flat { ramp_cycles: 1.0 }, 4.0);
        assert_eq!(p.envelope_at(0.0), 0.0);
        assert_eq!(p.envelope_at(2.0 * PI), 1.0);
        assert_eq!(p.envelope_at(100.0), 0.0);
        let s = PulseConfig::new(1.0, 1.0, Envelope::Sin2, 4.0);
        assert!((s.envelope_at(4.0 * PI) - 1.0).abs() < 1e-15);
        let g = PulseConfig::new(1.0, 1.0, Envelope::Gaussian { fwhm_cycles: 1.0 }, 4.0);
        assert!((g.envelope_at(4.0 * PI + PI) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn coarse_two_level_grid_is_rejected() {
        let p = PulseConfig::new(0.057, 0.01, Envelope::Sin2, 4.0);
        let grid = TimeGrid::for_pulse(&p, 10);
        assert!(matches!(
            solve_two_level(&p, 1.0, 0.057, grid),
            Err(HhgError::GridTooCoarse(_))
        ));
    }

    #[test]
    fn undriven_two_level_is_stationary() {
        let p = PulseConfig::new(0.057, 0.0, Envelope::Sin2, 3.0);
        let delta = 0.2;
        let s = solve_two_level(&p, 1.3, delta, TimeGrid::for_pulse(&p, 2000)).unwrap();
        assert!(s.d.iter().all(|v| v.abs() < 1e-14));
        let t = s.dij.as_ref().unwrap();
        for k in [0, 100, 777] {
            // d_01(t) = mu e^{-i delta t}
            let want = C64::from_polar(1.3, -delta * s.time(k));
            assert!((t.get(k, 0, 1) - want).norm() < 1e-8);
        }
    }

    #[test]
    fn csv_rejects_bad_header_and_irregular_grid() {
        let bad = "x,d\n0,0\n1,0\n";
        assert!(matches!(
            read_dipole_csv(bad.as_bytes()),
            Err(HhgError::ParseError { .. })
        ));
        let irregular = "t,d\n0,0\n1,0\n2.5,0\n3,0\n";
        assert!(matches!(
            read_dipole_csv(irregular.as_bytes()),
            Err(HhgError::NonUniformGrid { .. })
        ));
        let odd = "t,d,re00\n0,0,0\n1,0,0\n";
        assert!(read_dipole_csv(odd.as_bytes()).is_err());
        let text = "t,d\n0,1\n1,zz\n";
        assert!(matches!(
            read_dipole_csv(text.as_bytes()),
            Err(HhgError::ParseError { line: 3, .. })
        ));
    }

    #[test]
    fn csv_nan_row_is_named() {
        let text = "t,d\n0,0\n1,0\n2,NaN\n3,0\n";
        match read_dipole_csv(text.as_bytes()) {
            Err(HhgError::NonFiniteValue { row }) => assert_eq!(row, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zeros_file_is_zero_signal() {
        let text = "t,d\n0,0\n0.5,0\n1.0,0\n";
        let s = read_dipole_csv(text.as_bytes()).unwrap();
        assert_eq!(s.d, vec![0.0; 3]);
        assert_eq!(s.dt, 0.5);
        assert!(s.dij.is_none());
    }

    #[test]
    fn zero_field_sfa_is_zero() {
        let p = PulseConfig::new(0.057, 0.0, Envelope::Sin2, 2.0);
        let s = solve_sfa(&p, 0.5, TimeGrid::for_pulse(&p, 200)).unwrap();
        assert!(s.d.iter().all(|v| *v == 0.0));
    }
}
