//! Field correlation functions and emission spectra.
//!
//! To first order in the coupling the Heisenberg field operator of mode `q`
//! is `b_q(t) = e^{-i w_q t} (b_q + sqrt(q) g M_q(t))` with the atomic
//! operator `M_q(t) = int_0^t d(t') e^{i w_q t'} dt'`. With the field in
//! vacuum, every normally ordered moment reduces to ground-state matrix
//! elements of products of `M_q`, which are finite sums over the atomic
//! basis when the transition dipoles `d_ij(t)` are known.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dipole::{fmt_f64, DipoleSignal};
use crate::error::{HhgError, Result};

/// `b_q(t) = free_phase * b_q + source`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeisenbergMode {
    pub q: usize,
    pub free_phase: C64,
    /// `sqrt(q) g int_0^t <d(t')> e^{-i w_q (t - t')} dt'`.
    pub source: C64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSeries<T> {
    pub base_time: f64,
    pub tau: Vec<f64>,
    pub values: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum G1Mode {
    /// Built from `<d(t1)> <d(t2)>` only.
    CoherentOnly,
    /// Basis-resolved `sum_p <g|d(t1)|p><p|d(t2)|g>`.
    Full,
}

/// `G1` split into its coherent part and the dipole-fluctuation remainder.
#[derive(Debug, Clone, PartialEq)]
pub struct G1Split {
    pub coherent: CorrelationSeries<C64>,
    pub incoherent: CorrelationSeries<C64>,
    pub full: CorrelationSeries<C64>,
}

fn check_time(dipole: &DipoleSignal, t: f64) -> Result<()> {
    let end = dipole.end();
    let slack = 1e-9 * dipole.dt;
    if !(t >= dipole.t0 - slack && t <= end + slack) {
        return Err(HhgError::OutOfGridRange {
            t,
            start: dipole.t0,
            end,
        });
    }
    Ok(())
}

/// Running trapezoid integral `int_{t0}^{t_k} f(t') e^{i w t'} dt'`.
fn running_transform(dipole: &DipoleSignal, w: f64, f: impl Fn(usize) -> C64) -> Vec<C64> {
    let mut out = Vec::with_capacity(dipole.len());
    let mut acc = C64::new(0.0, 0.0);
    let mut prev = f(0) * C64::from_polar(1.0, w * dipole.time(0));
    out.push(acc);
    for k in 1..dipole.len() {
        let cur = f(k) * C64::from_polar(1.0, w * dipole.time(k));
        acc += (prev + cur) * (0.5 * dipole.dt);
        out.push(acc);
        prev = cur;
    }
    out
}

/// Value of a running integral at an off-grid time, integrating the
/// linearly interpolated integrand over the last partial step.
fn running_at(dipole: &DipoleSignal, cum: &[C64], w: f64, f: &impl Fn(usize) -> C64, t: f64) -> C64 {
    let x = (t - dipole.t0) / dipole.dt;
    let n = dipole.len();
    let k = (x.floor().max(0.0) as usize).min(n - 1);
    let h = t - dipole.time(k);
    if k + 1 >= n || h.abs() < 1e-12 * dipole.dt {
        return cum[k];
    }
    let vk = f(k) * C64::from_polar(1.0, w * dipole.time(k));
    let vn = f(k + 1) * C64::from_polar(1.0, w * dipole.time(k + 1));
    let vt = vk + (vn - vk) * (h / dipole.dt);
    cum[k] + (vk + vt) * (0.5 * h)
}

fn mode_frequency(q: usize, omega: f64) -> Result<f64> {
    if q == 0 || !(omega > 0.0) {
        return Err(HhgError::ParameterOutOfRange(format!(
            "mode index {q} and omega {omega} must be positive"
        )));
    }
    Ok(q as f64 * omega)
}

/// Free evolution and c-number source of mode `q` at time `t`.
pub fn heisenberg_mode(dipole: &DipoleSignal, g: f64, q: usize, omega: f64, t: f64) -> Result<HeisenbergMode> {
    let w = mode_frequency(q, omega)?;
    check_time(dipole, t)?;
    let f = |k: usize| C64::new(dipole.d[k], 0.0);
    let cum = running_transform(dipole, w, f);
    let a = running_at(dipole, &cum, w, &f, t);
    let free_phase = C64::from_polar(1.0, -w * t);
    Ok(HeisenbergMode {
        q,
        free_phase,
        source: free_phase * a * ((q as f64).sqrt() * g),
    })
}

/// Ground-state column `<p|M_q(s)|g>` for every basis state `p`, as running
/// integrals over the grid. Row `p` of the result is one time series.
fn ground_columns(dipole: &DipoleSignal, w: f64) -> Result<Vec<Vec<C64>>> {
    let t = dipole.dij.as_ref().ok_or(HhgError::MissingTransitionDipoles)?;
    Ok((0..t.basis())
        .map(|p| running_transform(dipole, w, |k| t.get(k, p, 0)))
        .collect())
}

fn columns_at(dipole: &DipoleSignal, cols: &[Vec<C64>], w: f64, s: f64) -> Vec<C64> {
    let t = dipole.dij.as_ref().expect("checked by caller");
    cols.iter()
        .enumerate()
        .map(|(p, cum)| running_at(dipole, cum, w, &|k| t.get(k, p, 0), s))
        .collect()
}

fn check_window(dipole: &DipoleSignal, t: f64, taus: &[f64]) -> Result<()> {
    check_time(dipole, t)?;
    for tau in taus {
        check_time(dipole, t + tau)?;
    }
    Ok(())
}

/// `G1(t, t + tau) = <b_q^dag(t) b_q(t + tau)>` for every `tau`.
pub fn g1(
    dipole: &DipoleSignal,
    g: f64,
    q: usize,
    omega: f64,
    t: f64,
    taus: &[f64],
    mode: G1Mode,
) -> Result<CorrelationSeries<C64>> {
    let split = g1_parts(dipole, g, q, omega, t, taus, mode)?;
    Ok(match mode {
        G1Mode::CoherentOnly => split.0,
        G1Mode::Full => split.1.expect("full part computed"),
    })
}

/// Coherent, incoherent and full `G1` (requires transition dipoles).
pub fn g1_split(dipole: &DipoleSignal, g: f64, q: usize, omega: f64, t: f64, taus: &[f64]) -> Result<G1Split> {
    let (coherent, full) = g1_parts(dipole, g, q, omega, t, taus, G1Mode::Full)?;
    let full = full.expect("full part computed");
    let incoherent = CorrelationSeries {
        base_time: t,
        tau: taus.to_vec(),
        values: full.values.iter().zip(&coherent.values).map(|(f, c)| f - c).collect(),
    };
    Ok(G1Split {
        coherent,
        incoherent,
        full,
    })
}

type G1Parts = (CorrelationSeries<C64>, Option<CorrelationSeries<C64>>);

fn g1_parts(
    dipole: &DipoleSignal,
    g: f64,
    q: usize,
    omega: f64,
    t: f64,
    taus: &[f64],
    mode: G1Mode,
) -> Result<G1Parts> {
    let w = mode_frequency(q, omega)?;
    if mode == G1Mode::Full && dipole.dij.is_none() {
        return Err(HhgError::MissingTransitionDipoles);
    }
    check_window(dipole, t, taus)?;
    let scale = q as f64 * g * g;
    let f = |k: usize| C64::new(dipole.d[k], 0.0);
    let cum = running_transform(dipole, w, f);
    let a0 = running_at(dipole, &cum, w, &f, t);
    let series = |values| CorrelationSeries {
        base_time: t,
        tau: taus.to_vec(),
        values,
    };
    let coherent = taus
        .iter()
        .map(|&tau| {
            let a1 = running_at(dipole, &cum, w, &f, t + tau);
            C64::from_polar(scale, -w * tau) * a0.conj() * a1
        })
        .collect();
    let full = if mode == G1Mode::Full {
        let cols = ground_columns(dipole, w)?;
        let c0 = columns_at(dipole, &cols, w, t);
        Some(series(
            taus.iter()
                .map(|&tau| {
                    let c1 = columns_at(dipole, &cols, w, t + tau);
                    let s: C64 = c0.iter().zip(&c1).map(|(a, b)| a.conj() * b).sum();
                    C64::from_polar(scale, -w * tau) * s
                })
                .collect(),
        ))
    } else {
        None
    };
    Ok((series(coherent), full))
}

/// Normalized `g2(tau) = <b^dag(t) b^dag(t+tau) b(t+tau) b(t)> / (n(t) n(t+tau))`.
///
/// With the field in vacuum the numerator is `|M(t+tau) M(t)|g>|^2` and
/// each occupation is `|M(s)|g>|^2` (common factors cancel).
pub fn g2(dipole: &DipoleSignal, q: usize, omega: f64, t: f64, taus: &[f64]) -> Result<CorrelationSeries<f64>> {
    let w = mode_frequency(q, omega)?;
    let dij = dipole.dij.as_ref().ok_or(HhgError::MissingTransitionDipoles)?;
    check_window(dipole, t, taus)?;
    let b = dij.basis();
    // running M(s) for every matrix element, element-major
    let cums: Vec<Vec<C64>> = (0..b * b)
        .map(|e| running_transform(dipole, w, |k| dij.at(k)[e]))
        .collect();
    let m_at = |s: f64| -> Vec<C64> {
        cums.iter()
            .enumerate()
            .map(|(e, cum)| running_at(dipole, cum, w, &|k| dij.at(k)[e], s))
            .collect()
    };
    let m0 = m_at(t);
    let v0: Vec<C64> = (0..b).map(|i| m0[i * b]).collect();
    let n0: f64 = v0.iter().map(|z| z.norm_sqr()).sum();
    let values = taus
        .iter()
        .map(|&tau| {
            let m1 = m_at(t + tau);
            let n1: f64 = (0..b).map(|i| m1[i * b].norm_sqr()).sum();
            let num: f64 = (0..b)
                .map(|i| (0..b).map(|j| m1[i * b + j] * v0[j]).sum::<C64>().norm_sqr())
                .sum();
            let den = n0 * n1;
            if !(den > 1e-300) || !(num.is_finite()) {
                return Err(HhgError::DivisionByZeroIntensity);
            }
            Ok(num / den)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(CorrelationSeries {
        base_time: t,
        tau: taus.to_vec(),
        values,
    })
}

/// Finite-time stand-in for the stationary limit of the spectrum.
///
/// A base time at the end of the record (the emission is over, the source
/// integrals no longer change) gives the stationary form directly; earlier
/// base times are allowed and show up in the stationarity diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumWindow {
    /// Reference time `t` of `G1(t, t + tau)`; snapped to the dipole grid.
    pub base_time: f64,
    /// Maximum lag, possibly past the end of the record; a half-Hann taper
    /// brings `G1` to zero there.
    pub lag: f64,
    /// Frequency samples per fundamental `omega` in the exported grid.
    pub points_per_omega: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonicWeight {
    pub q: usize,
    /// Integrated coherent power over `[(q - 1/2) w, (q + 1/2) w]`.
    pub coherent: f64,
    pub incoherent: f64,
    /// `q g^2 |int <d> e^{i q w t}|^2` up to the base time.
    pub expected_coherent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumDiagnostics {
    /// `max |G1(t, t + tau) - G1(t', t' + tau)|` over earlier base times
    /// `t' = t - j T`, `j = 1..=3`, summed over modes.
    pub stationarity: f64,
    /// The same deviation relative to `max G1(t, t)`.
    pub stationarity_relative: f64,
    /// Most negative spectral value relative to the maximum before clipping.
    pub min_relative_value: f64,
    /// True when the clipped excursion exceeded `1e-9` of the maximum.
    pub negative_excursion: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub freq: Vec<f64>,
    pub s_coherent: Vec<f64>,
    pub s_incoherent: Vec<f64>,
    pub window: SpectrumWindow,
    pub harmonics: Vec<HarmonicWeight>,
    pub diagnostics: SpectrumDiagnostics,
}

impl SpectrumResult {
    /// CSV with header `freq,s_coherent,s_incoherent`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["freq", "s_coherent", "s_incoherent"]).map_err(io_err)?;
        for k in 0..self.freq.len() {
            wr.write_record([
                fmt_f64(self.freq[k]),
                fmt_f64(self.s_coherent[k]),
                fmt_f64(self.s_incoherent[k]),
            ])
            .map_err(io_err)?;
        }
        wr.flush()?;
        Ok(())
    }

    /// CSV with header `q,coherent,incoherent,expected_coherent`.
    pub fn write_harmonics_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["q", "coherent", "incoherent", "expected_coherent"])
            .map_err(io_err)?;
        for h in &self.harmonics {
            wr.write_record([
                h.q.to_string(),
                fmt_f64(h.coherent),
                fmt_f64(h.incoherent),
                fmt_f64(h.expected_coherent),
            ])
            .map_err(io_err)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn odd_power(&self) -> f64 {
        self.harmonics.iter().filter(|h| h.q % 2 == 1).map(|h| h.coherent + h.incoherent).sum()
    }

    pub fn even_power(&self) -> f64 {
        self.harmonics.iter().filter(|h| h.q % 2 == 0).map(|h| h.coherent + h.incoherent).sum()
    }
}

fn io_err(e: csv::Error) -> HhgError {
    HhgError::Io(e.to_string())
}

/// Lag-domain `G1` of one mode at base index `kb`: coherent and incoherent
/// parts for `k = 0..=n_lag`. Past the end of the record the source
/// integrals are frozen at their final values.
fn lag_series(dipole: &DipoleSignal, g: f64, q: usize, w: f64, kb: usize, n_lag: usize) -> (Vec<C64>, Vec<C64>) {
    let scale = q as f64 * g * g;
    let last = dipole.len() - 1;
    let a = running_transform(dipole, w, |k| C64::new(dipole.d[k], 0.0));
    let cols = dipole
        .dij
        .as_ref()
        .map(|t| {
            (0..t.basis())
                .map(|p| running_transform(dipole, w, |k| t.get(k, p, 0)))
                .collect::<Vec<_>>()
        });
    let mut coh = Vec::with_capacity(n_lag + 1);
    let mut inc = Vec::with_capacity(n_lag + 1);
    for k in 0..=n_lag {
        let j = (kb + k).min(last);
        let ph = C64::from_polar(scale, -w * k as f64 * dipole.dt);
        let c = ph * a[kb].conj() * a[j];
        coh.push(c);
        inc.push(match &cols {
            Some(cols) => ph * cols.iter().map(|v| v[kb].conj() * v[j]).sum::<C64>() - c,
            None => C64::new(0.0, 0.0),
        });
    }
    (coh, inc)
}

/// Windowed power spectrum `S(w) = (1/pi) Re int_0^L h(tau) G1(t, t+tau) e^{i w tau} dtau`
/// summed over modes `q = 1..=q_max`, with per-harmonic integrated weights.
pub fn spectrum(dipole: &DipoleSignal, g: f64, q_max: usize, omega: f64, window: SpectrumWindow) -> Result<SpectrumResult> {
    mode_frequency(q_max, omega)?;
    let period = 2.0 * PI / omega;
    if window.lag < 4.0 * period {
        return Err(HhgError::WindowTooShort(format!(
            "lag {:.4} is shorter than 4 fundamental periods ({:.4})",
            window.lag,
            4.0 * period
        )));
    }
    if window.points_per_omega == 0 {
        return Err(HhgError::ParameterOutOfRange("points_per_omega must be > 0".into()));
    }
    let kb = ((window.base_time - dipole.t0) / dipole.dt).round();
    let n_lag = (window.lag / dipole.dt).round() as usize;
    if kb < 0.0 || kb as usize >= dipole.len() {
        return Err(HhgError::OutOfGridRange {
            t: window.base_time,
            start: dipole.t0,
            end: dipole.end(),
        });
    }
    let kb = kb as usize;
    let dt = dipole.dt;
    let samples = period / (q_max as f64 * dt);
    if samples < 8.0 {
        return Err(HhgError::GridTooCoarse(format!(
            "harmonic {q_max} has {samples:.2} samples per period (need >= 8)"
        )));
    }
    let snapped = SpectrumWindow {
        base_time: dipole.time(kb),
        lag: n_lag as f64 * dt,
        ..window
    };
    // tapered lag-domain series summed over modes (trapezoid end weights folded in)
    let taper: Vec<f64> = (0..=n_lag)
        .map(|k| {
            let h = (0.5 * PI * k as f64 / n_lag as f64).cos().powi(2);
            if k == 0 || k == n_lag {
                0.5 * h * dt
            } else {
                h * dt
            }
        })
        .collect();
    let per_mode: Vec<(Vec<C64>, Vec<C64>)> = (1..=q_max)
        .into_par_iter()
        .map(|q| lag_series(dipole, g, q, q as f64 * omega, kb, n_lag))
        .collect();
    let mut coh = vec![C64::new(0.0, 0.0); n_lag + 1];
    let mut inc = vec![C64::new(0.0, 0.0); n_lag + 1];
    for (c, i) in &per_mode {
        for k in 0..=n_lag {
            coh[k] += c[k] * taper[k];
            inc[k] += i[k] * taper[k];
        }
    }
    let transform = |series: &[C64], f: f64| -> f64 {
        series
            .iter()
            .enumerate()
            .map(|(k, v)| (v * C64::from_polar(1.0, f * k as f64 * dt)).re)
            .sum::<f64>()
            / PI
    };
    // exact frequency integral of the transform over [lo, hi]
    let band = |series: &[C64], lo: f64, hi: f64| -> f64 {
        series
            .iter()
            .enumerate()
            .map(|(k, v)| {
                let tau = k as f64 * dt;
                let kernel = if k == 0 {
                    C64::new(hi - lo, 0.0)
                } else {
                    (C64::from_polar(1.0, hi * tau) - C64::from_polar(1.0, lo * tau)) / C64::new(0.0, tau)
                };
                (v * kernel).re
            })
            .sum::<f64>()
            / PI
    };
    let n_freq = ((q_max as f64 + 0.5) * window.points_per_omega as f64).round() as usize + 1;
    let df = omega / window.points_per_omega as f64;
    let freq: Vec<f64> = (0..n_freq).map(|k| k as f64 * df).collect();
    let raw: Vec<(f64, f64)> = freq
        .par_iter()
        .map(|&f| (transform(&coh, f), transform(&inc, f)))
        .collect();
    let peak = raw.iter().map(|(a, b)| a.max(*b)).fold(0.0, f64::max);
    let lowest = raw.iter().map(|(a, b)| a.min(*b)).fold(0.0, f64::min);
    let min_relative_value = if peak > 0.0 { lowest / peak } else { 0.0 };
    let s_coherent = raw.iter().map(|(a, _)| a.max(0.0)).collect();
    let s_incoherent = raw.iter().map(|(_, b)| b.max(0.0)).collect();

    let harmonics = (1..=q_max)
        .into_par_iter()
        .map(|q| {
            let lo = (q as f64 - 0.5) * omega;
            let hi = (q as f64 + 0.5) * omega;
            let w = q as f64 * omega;
            let a = running_transform(dipole, w, |k| C64::new(dipole.d[k], 0.0));
            HarmonicWeight {
                q,
                coherent: band(&coh, lo, hi),
                incoherent: band(&inc, lo, hi),
                expected_coherent: q as f64 * g * g * a[kb].norm_sqr(),
            }
        })
        .collect();

    // stationarity: compare against earlier base times one period apart
    let shift = (period / dt).round() as usize;
    let mut stationarity: f64 = 0.0;
    let g_tt: f64 = per_mode.iter().map(|(c, i)| (c[0] + i[0]).re).sum();
    for j in 1..=3 {
        if kb < j * shift {
            break;
        }
        let other = kb - j * shift;
        let earlier: Vec<(Vec<C64>, Vec<C64>)> = (1..=q_max)
            .into_par_iter()
            .map(|q| lag_series(dipole, g, q, q as f64 * omega, other, n_lag))
            .collect();
        for k in 0..=n_lag {
            let now: C64 = per_mode.iter().map(|(c, i)| c[k] + i[k]).sum();
            let then: C64 = earlier.iter().map(|(c, i)| c[k] + i[k]).sum();
            stationarity = stationarity.max((now - then).norm());
        }
    }
    Ok(SpectrumResult {
        freq,
        s_coherent,
        s_incoherent,
        window: snapped,
        harmonics,
        diagnostics: SpectrumDiagnostics {
            stationarity,
            stationarity_relative: if g_tt > 0.0 { stationarity / g_tt } else { 0.0 },
            min_relative_value,
            negative_excursion: min_relative_value < -1e-9,
        },
    })
}

/// Writes `tau,re,im` rows of a complex correlation series.
pub fn write_g1_csv<W: Write>(split: &G1Split, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record([
        "tau",
        "re_coherent",
        "im_coherent",
        "re_incoherent",
        "im_incoherent",
        "re_full",
        "im_full",
    ])
    .map_err(io_err)?;
    for k in 0..split.full.tau.len() {
        let (c, i, f) = (split.coherent.values[k], split.incoherent.values[k], split.full.values[k]);
        wr.write_record([
            fmt_f64(split.full.tau[k]),
            fmt_f64(c.re),
            fmt_f64(c.im),
            fmt_f64(i.re),
            fmt_f64(i.im),
            fmt_f64(f.re),
            fmt_f64(f.im),
        ])
        .map_err(io_err)?;
    }
    wr.flush()?;
    Ok(())
}

/// Writes `tau,re,im` rows of a coherent-only `G1` series.
pub fn write_complex_series_csv<W: Write>(series: &CorrelationSeries<C64>, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["tau", "re", "im"]).map_err(io_err)?;
    for (t, v) in series.tau.iter().zip(&series.values) {
        wr.write_record([fmt_f64(*t), fmt_f64(v.re), fmt_f64(v.im)]).map_err(io_err)?;
    }
    wr.flush()?;
    Ok(())
}

/// Writes `tau,g2` rows.
pub fn write_g2_csv<W: Write>(series: &CorrelationSeries<f64>, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["tau", "g2"]).map_err(io_err)?;
    for (t, v) in series.tau.iter().zip(&series.values) {
        wr.write_record([fmt_f64(*t), fmt_f64(*v)]).map_err(io_err)?;
    }
    wr.flush()?;
    Ok(())
}
