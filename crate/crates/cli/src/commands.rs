//! Pipelines behind each subcommand. Nothing touches the disk here.

use std::f64::consts::PI;

use hhgq::coherence::{
    g1, g1_split, g2, spectrum, write_complex_series_csv, write_g1_csv, write_g2_csv, G1Mode, SpectrumResult,
    SpectrumWindow,
};
use hhgq::dipole::{fmt_f64, ingest_dipole, solve_sfa_with, solve_two_level, DipoleSignal, PulseConfig, TimeGrid};
use hhgq::field::{
    apply_hhg, classical_field, compute_chi, condition_on_harmonics, condition_relative, phase_average,
    ConditionResult, ModeAmplitudes,
};
use hhgq::squeezing::{
    gaussian_diagnostics, quadratic_propagator, write_covariance_csv, write_mean_csv, PropagatorOptions,
};
use hhgq::statespace::{to_fock, CoherentLabel, FieldState, ProductCoherent};
use hhgq::wigner::{quadrature_pdf, wigner_fock_pure, wigner_of, write_quadratures_csv, Axis, WignerGrid};
use hhgq::{HhgError, Result, C64};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{GridSpec, RunConfig, Scenario};
use crate::output::Artifacts;

fn axis(spec: GridSpec) -> Axis {
    Axis::symmetric(spec.half_width, spec.points)
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn rows(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    out.into_bytes()
}

fn complex_json(z: C64) -> Value {
    json!([z.re, z.im])
}

fn dipole_for(cfg: &RunConfig, pulse: &PulseConfig) -> Result<DipoleSignal> {
    let grid = || TimeGrid::for_pulse(pulse, cfg.points_per_cycle);
    match cfg.scenario {
        Scenario::TwoLevel => solve_two_level(pulse, cfg.dipole_matrix_element, cfg.level_splitting, grid()),
        Scenario::Sfa => solve_sfa_with(pulse, cfg.ionization_potential, grid(), cfg.sfa_epsilon),
        Scenario::Ingest => ingest_dipole(cfg.dipole_file.as_deref().expect("validated with the config")),
    }
}

fn dipole(cfg: &RunConfig) -> Result<DipoleSignal> {
    dipole_for(cfg, &cfg.pulse)
}

fn chi_csv(chi: &ModeAmplitudes) -> Vec<u8> {
    rows(
        &["q", "re", "im", "abs2", "phase"],
        chi.chi.iter().zip(&chi.phases).enumerate().map(|(k, (c, ph))| {
            vec![(k + 1).to_string(), fmt_f64(c.re), fmt_f64(c.im), fmt_f64(c.norm_sqr()), fmt_f64(*ph)]
        }),
    )
}

fn add_wigner(out: &mut Artifacts, grid: &WignerGrid, frame: &str) -> Result<()> {
    out.add("wigner.csv", csv_bytes(|b| grid.write_csv(b))?);
    let mut meta = serde_json::to_value(grid.metadata()).expect("metadata serializes");
    meta["frame"] = json!(frame);
    out.add_json("wigner.json", &meta);
    let (x, p) = grid.argmin();
    out.diag("wigner_min", json!(grid.min()));
    out.diag("wigner_argmin", json!([x, p]));
    out.diag("wigner_integral", json!(grid.integral()));
    Ok(())
}

fn conditioned(cfg: &RunConfig, out: &mut Artifacts) -> Result<ConditionResult> {
    let alpha = CoherentLabel(cfg.alpha);
    if let Some(chi1) = cfg.chi1_override {
        out.note("chi_1 set by chi1_override; no dipole model evaluated");
        return condition_relative(alpha, chi1, cfg.tail_sum.unwrap_or(0.0), cfg.use_exact_m);
    }
    let s = dipole(cfg)?;
    let chi = compute_chi(&s, cfg.g, cfg.pulse.omega, cfg.modes)?;
    out.add("chi.csv", chi_csv(&chi));
    let mut initial = vec![alpha];
    initial.extend((1..cfg.modes).map(|_| CoherentLabel::new(0.0, 0.0)));
    let after = apply_hhg(&ProductCoherent::new(initial), &chi)?;
    condition_on_harmonics(&after, alpha, cfg.use_exact_m)
}

pub fn cat_wigner(cfg: &RunConfig) -> Result<Artifacts> {
    let mut out = Artifacts::default();
    let c = conditioned(cfg, &mut out)?;
    let state = FieldState::CoherentSuperposition(c.relative.clone());
    let grid = wigner_of(&state, axis(cfg.wigner), axis(cfg.wigner))?;
    add_wigner(&mut out, &grid, "relative: displaced by -alpha")?;
    // independent check of the closed form at the minimum
    let psi = to_fock(&state, cfg.fock_dim)?;
    let (x, p) = grid.argmin();
    let oracle = wigner_fock_pure(psi.amplitudes(), x, p);
    out.diag("fock_oracle_deviation_at_min", json!((oracle - grid.min()).abs()));
    let pdfs = cfg
        .quadrature_phases
        .iter()
        .map(|phi| quadrature_pdf(&state, *phi, axis(cfg.quadrature)))
        .collect::<Result<Vec<_>>>()?;
    out.add("quadratures.csv", csv_bytes(|b| write_quadratures_csv(&pdfs, b))?);
    out.diag("chi1", complex_json(c.chi1));
    out.diag("tail_sum", json!(c.tail_sum));
    out.diag("success_probability", json!(c.success_probability));
    out.diag("exact_measurement_operator", json!(c.exact_operator_used()));
    Ok(out)
}

fn window(cfg: &RunConfig, s: &DipoleSignal) -> SpectrumWindow {
    SpectrumWindow {
        base_time: cfg.spectrum_base_time.unwrap_or(s.end()),
        lag: cfg.spectrum_lag_cycles * cfg.pulse.period(),
        points_per_omega: cfg.points_per_omega,
    }
}

fn coherent_parity(sp: &SpectrumResult) -> (f64, f64) {
    let sum = |parity| {
        sp.harmonics
            .iter()
            .filter(|h| h.q % 2 == parity)
            .map(|h| h.coherent)
            .sum::<f64>()
    };
    (sum(0), sum(1))
}

pub fn spectrum_cmd(cfg: &RunConfig) -> Result<Artifacts> {
    let mut out = Artifacts::default();
    let omega = cfg.pulse.omega;
    let s = dipole(cfg)?;
    let sp = spectrum(&s, cfg.g, cfg.q_max, omega, window(cfg, &s))?;
    out.add("spectrum.csv", csv_bytes(|b| sp.write_csv(b))?);
    out.add("harmonics.csv", csv_bytes(|b| sp.write_harmonics_csv(b))?);
    out.diag("spectrum_window", serde_json::to_value(sp.window).expect("serializes"));
    out.diag("stationarity", serde_json::to_value(&sp.diagnostics).expect("serializes"));
    let (even, odd) = coherent_parity(&sp);
    out.diag("coherent_even_weight", json!(even));
    out.diag("coherent_odd_weight", json!(odd));
    if sp.diagnostics.negative_excursion {
        out.note("spectrum went negative beyond -1e-9 of its maximum before clipping");
    }

    let tau_max = cfg.correlation_tau_cycles * cfg.pulse.period();
    let n = cfg.correlation_points;
    let taus: Vec<f64> = (0..n).map(|k| tau_max * k as f64 / (n - 1) as f64).collect();
    let t = cfg.correlation_base_time.unwrap_or((s.end() - tau_max).max(s.t0));
    let q = cfg.correlation_harmonic;
    out.diag("correlation_base_time", json!(t));
    if s.dij.is_some() {
        let split = g1_split(&s, cfg.g, q, omega, t, &taus)?;
        out.add("g1.csv", csv_bytes(|b| write_g1_csv(&split, b))?);
        let series = g2(&s, q, omega, t, &taus)?;
        out.add("g2.csv", csv_bytes(|b| write_g2_csv(&series, b))?);
    } else {
        let series = g1(&s, cfg.g, q, omega, t, &taus, G1Mode::CoherentOnly)?;
        out.add("g1.csv", csv_bytes(|b| write_complex_series_csv(&series, b))?);
        let msg = "g2.csv omitted: transition dipoles d_ij(t) absent; g1.csv holds the coherent part only";
        eprintln!("warning: {msg}");
        out.note(msg);
    }

    if cfg.two_color_sweep >= 2 {
        let n = cfg.two_color_sweep;
        let phases: Vec<f64> = (0..n).map(|k| cfg.sweep_phase_max * k as f64 / (n - 1) as f64).collect();
        let weights = phases
            .par_iter()
            .map(|phi| {
                let pulse = cfg.pulse.with_second_color(cfg.sweep_amplitude, *phi);
                let s = dipole_for(cfg, &pulse)?;
                let sp = spectrum(&s, cfg.g, cfg.q_max, omega, window(cfg, &s))?;
                Ok(coherent_parity(&sp))
            })
            .collect::<Result<Vec<_>>>()?;
        out.add(
            "two_color.csv",
            rows(
                &["phase", "even_coherent", "odd_coherent", "even_over_odd"],
                phases.iter().zip(&weights).map(|(phi, (e, o))| {
                    vec![fmt_f64(*phi), fmt_f64(*e), fmt_f64(*o), fmt_f64(e / o)]
                }),
            ),
        );
        out.diag(
            "two_color_even_over_odd",
            json!(weights.iter().map(|(e, o)| e / o).collect::<Vec<_>>()),
        );
    }
    Ok(out)
}

pub fn squeeze(cfg: &RunConfig) -> Result<Artifacts> {
    let mut out = Artifacts::default();
    let omega = cfg.pulse.omega;
    let mut s = dipole(cfg)?;
    if cfg.mean_field {
        s = s.mean_field();
        out.note("transition dipoles replaced by the mean-field series <d(t)> delta_ij");
    }
    let r = quadratic_propagator(&s, cfg.g, omega, &cfg.squeeze_modes, PropagatorOptions::default())?;
    let d = gaussian_diagnostics(&r.state)?;
    let q_top = *cfg.squeeze_modes.iter().max().expect("at least two modes");
    let chi = compute_chi(&s, cfg.g, omega, q_top)?;
    // beta_q = i sqrt(q) chi_q
    let chi_deviation = r
        .modes
        .iter()
        .zip(&r.beta)
        .map(|(q, b)| (b - C64::new(0.0, (*q as f64).sqrt()) * chi.chi(*q)).norm())
        .fold(0.0, f64::max);
    out.add("covariance.csv", csv_bytes(|b| write_covariance_csv(&r.state, b))?);
    out.add("mean.csv", csv_bytes(|b| write_mean_csv(&r.state, &r.modes, b))?);
    let physical = json!({
        "symplectic_eigenvalues_at_least_half": d.min_symplectic_eigenvalue >= 0.5 - 1e-10,
        "uncertainty_relation": d.uncertainty_min_eigenvalue >= -1e-10,
        "purity_at_most_one": d.purity <= 1.0 + 1e-10,
    });
    let diagnostics = json!({
        "modes": r.modes,
        "mean_field": cfg.mean_field,
        "squeezing_db": d.squeezing_db,
        "principal_variances": d.principal_variances,
        "log_negativity": d.log_negativity.iter().map(|((i, j), e)| json!({
            "modes": [r.modes[*i], r.modes[*j]],
            "nats": e,
        })).collect::<Vec<_>>(),
        "purity": d.purity,
        "min_symplectic_eigenvalue": d.min_symplectic_eigenvalue,
        "uncertainty_min_eigenvalue": d.uncertainty_min_eigenvalue,
        "physical": physical,
        "is_physical": d.is_physical(),
        "order_estimate": r.order_estimate,
        "beta": r.beta.iter().map(|b| complex_json(*b)).collect::<Vec<_>>(),
        "max_beta_minus_i_sqrt_q_chi": chi_deviation,
    });
    out.add_json("diagnostics.json", &diagnostics);
    out.diag("is_physical", json!(d.is_physical()));
    Ok(out)
}

pub fn chi(cfg: &RunConfig) -> Result<Artifacts> {
    let mut out = Artifacts::default();
    let s = dipole(cfg)?;
    let chi = compute_chi(&s, cfg.g, cfg.pulse.omega, cfg.modes)?;
    out.add("dipole.csv", csv_bytes(|b| s.write_csv(b))?);
    out.add("chi.csv", chi_csv(&chi));
    out.diag("tail_sum", json!(chi.tail_sum()));
    out.diag("global_phase", json!(chi.global_phase()));
    Ok(out)
}

pub fn phase_avg(cfg: &RunConfig) -> Result<Artifacts> {
    let mut out = Artifacts::default();
    let m = phase_average(cfg.phase_avg_alpha)?;
    out.add(
        "weights.csv",
        rows(
            &["n", "weight"],
            m.weights.iter().enumerate().map(|(n, w)| vec![n.to_string(), fmt_f64(*w)]),
        ),
    );
    let state = FieldState::DiagonalMixture(m.clone());
    let grid = wigner_of(&state, axis(cfg.wigner), axis(cfg.wigner))?;
    add_wigner(&mut out, &grid, "lab")?;
    let omega = cfg.pulse.omega;
    let n = cfg.field_samples;
    let period = 2.0 * PI / omega;
    let field = (0..n)
        .map(|k| {
            let t = period * k as f64 / n as f64;
            Ok((t, classical_field(&state, cfg.g, omega, t)?[0]))
        })
        .collect::<Result<Vec<_>>>()?;
    let max_field = field.iter().map(|(_, e)| e.abs()).fold(0.0, f64::max);
    out.add(
        "field.csv",
        rows(&["t", "mean_field"], field.iter().map(|(t, e)| vec![fmt_f64(*t), fmt_f64(*e)])),
    );
    out.diag("mean_photon_number", json!(m.mean()));
    out.diag("photon_number_variance", json!(m.variance()));
    out.diag("max_abs_mean_field", json!(max_field));
    Ok(out)
}

/// Variant name of an inner error, e.g. `DegenerateSuperposition`.
pub fn error_name(e: &HhgError) -> String {
    let debug = format!("{e:?}");
    debug
        .split(|c: char| !c.is_alphanumeric())
        .next()
        .unwrap_or("Error")
        .to_string()
}
