//! Python bindings for the `hhgq` core crate.

use hhgq::coherence::{g2 as core_g2, spectrum as core_spectrum, SpectrumWindow};
use hhgq::dipole::{
    ingest_dipole, solve_sfa_with, solve_two_level as core_two_level, DipoleSignal, Envelope, PulseConfig, TimeGrid,
    SFA_EPSILON,
};
use hhgq::field::{compute_chi as core_chi, condition_relative, phase_average as core_phase_average};
use hhgq::squeezing::{gaussian_diagnostics, quadratic_propagator, PropagatorOptions};
use hhgq::statespace::{CoherentLabel, FieldState};
use hhgq::wigner::{quadrature_pdf, wigner_of, wigner_point, Axis};
use hhgq::HhgError;
use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(hhgq_py, HhgqError, PyException);

fn err(e: HhgError) -> PyErr {
    let name = format!("{e:?}");
    let name = name.split(|c: char| !c.is_alphanumeric()).next().unwrap_or("Error");
    HhgqError::new_err(format!("{name}: {e}"))
}

#[allow(clippy::too_many_arguments)]
fn pulse(
    omega: f64,
    e0: f64,
    envelope: &str,
    cycles: f64,
    cep: f64,
    ramp_cycles: f64,
    fwhm_cycles: f64,
    second_color: Option<(f64, f64)>,
) -> PyResult<PulseConfig> {
    let env = match envelope {
        "flat" => Envelope::Flat { ramp_cycles },
        "sin2" => Envelope::Sin2,
        "gaussian" => Envelope::Gaussian { fwhm_cycles },
        other => return Err(PyValueError::new_err(format!("unknown envelope '{other}'"))),
    };
    let mut p = PulseConfig::new(omega, e0, env, cycles);
    p.cep = cep;
    if let Some((r, phi)) = second_color {
        p = p.with_second_color(r, phi);
    }
    Ok(p)
}

/// Dipole expectation value and optional transition dipoles on a uniform grid.
#[pyclass(name = "Dipole", module = "hhgq_py", frozen)]
struct Dipole {
    inner: DipoleSignal,
}

#[pymethods]
impl Dipole {
    #[getter]
    fn t0(&self) -> f64 {
        self.inner.t0
    }

    #[getter]
    fn dt(&self) -> f64 {
        self.inner.dt
    }

    #[getter]
    fn d(&self) -> Vec<f64> {
        self.inner.d.clone()
    }

    #[getter]
    fn end(&self) -> f64 {
        self.inner.end()
    }

    #[getter]
    fn has_transition_dipoles(&self) -> bool {
        self.inner.dij.is_some()
    }

    fn times(&self) -> Vec<f64> {
        (0..self.inner.len()).map(|k| self.inner.time(k)).collect()
    }

    fn mean_field(&self) -> Dipole {
        Dipole {
            inner: self.inner.mean_field(),
        }
    }

    fn export(&self, path: std::path::PathBuf) -> PyResult<()> {
        self.inner.export(&path).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

#[pyfunction]
#[pyo3(signature = (omega, e0, envelope="sin2", cycles=10.0, points_per_cycle=400, dipole_matrix_element=1.0, level_splitting=1.0, cep=0.0, ramp_cycles=2.0, fwhm_cycles=4.0, second_color=None))]
#[allow(clippy::too_many_arguments)]
fn solve_two_level(
    omega: f64,
    e0: f64,
    envelope: &str,
    cycles: f64,
    points_per_cycle: usize,
    dipole_matrix_element: f64,
    level_splitting: f64,
    cep: f64,
    ramp_cycles: f64,
    fwhm_cycles: f64,
    second_color: Option<(f64, f64)>,
) -> PyResult<Dipole> {
    let p = pulse(omega, e0, envelope, cycles, cep, ramp_cycles, fwhm_cycles, second_color)?;
    let inner = core_two_level(&p, dipole_matrix_element, level_splitting, TimeGrid::for_pulse(&p, points_per_cycle))
        .map_err(err)?;
    Ok(Dipole { inner })
}

#[pyfunction]
#[pyo3(signature = (omega, e0, ionization_potential, envelope="sin2", cycles=4.0, points_per_cycle=200, epsilon=SFA_EPSILON, cep=0.0))]
#[allow(clippy::too_many_arguments)]
fn solve_sfa(
    omega: f64,
    e0: f64,
    ionization_potential: f64,
    envelope: &str,
    cycles: f64,
    points_per_cycle: usize,
    epsilon: f64,
    cep: f64,
) -> PyResult<Dipole> {
    let p = pulse(omega, e0, envelope, cycles, cep, 2.0, 4.0, None)?;
    let inner =
        solve_sfa_with(&p, ionization_potential, TimeGrid::for_pulse(&p, points_per_cycle), epsilon).map_err(err)?;
    Ok(Dipole { inner })
}

#[pyfunction]
fn load_dipole(path: std::path::PathBuf) -> PyResult<Dipole> {
    Ok(Dipole {
        inner: ingest_dipole(&path).map_err(err)?,
    })
}

/// `chi_q` for `q = 1..=n`.
#[pyfunction]
fn compute_chi(dipole: &Dipole, g: f64, omega: f64, n: usize) -> PyResult<Vec<Complex64>> {
    Ok(core_chi(&dipole.inner, g, omega, n).map_err(err)?.chi)
}

/// A single-mode field state with Wigner and homodyne evaluation.
#[pyclass(name = "State", module = "hhgq_py", frozen)]
struct State {
    inner: FieldState,
    success_probability: Option<f64>,
}

#[pymethods]
impl State {
    #[staticmethod]
    fn coherent(alpha: Complex64) -> State {
        State {
            inner: FieldState::coherent(alpha),
            success_probability: None,
        }
    }

    /// Cat state conditioned on harmonic generation, in the frame displaced by `-alpha`.
    #[staticmethod]
    #[pyo3(signature = (chi1, alpha=Complex64::new(0.0, 0.0), tail_sum=0.0, use_exact_m=false))]
    fn cat(chi1: Complex64, alpha: Complex64, tail_sum: f64, use_exact_m: bool) -> PyResult<State> {
        let c = condition_relative(CoherentLabel(alpha), chi1, tail_sum, use_exact_m).map_err(err)?;
        Ok(State {
            inner: FieldState::CoherentSuperposition(c.relative),
            success_probability: Some(c.success_probability),
        })
    }

    /// Coherent state of modulus `alpha` averaged over its phase.
    #[staticmethod]
    fn phase_averaged(alpha: f64) -> PyResult<State> {
        Ok(State {
            inner: FieldState::DiagonalMixture(core_phase_average(alpha).map_err(err)?),
            success_probability: None,
        })
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.variant_name()
    }

    #[getter]
    fn success_probability(&self) -> Option<f64> {
        self.success_probability
    }

    fn wigner(&self, x: f64, p: f64) -> PyResult<f64> {
        wigner_point(&self.inner, x, p).map_err(err)
    }

    /// `(axis, W)` on a square grid, `W[i][j] = W(axis[i], axis[j])`.
    #[pyo3(signature = (half_width=6.0, points=201))]
    fn wigner_grid(&self, half_width: f64, points: usize) -> PyResult<(Vec<f64>, Vec<Vec<f64>>)> {
        let axis = Axis::symmetric(half_width, points);
        let grid = wigner_of(&self.inner, axis, axis).map_err(err)?;
        let w = (0..points).map(|i| (0..points).map(|j| grid.get(i, j)).collect()).collect();
        Ok((axis.points(), w))
    }

    /// `(axis, pdf)` of `x cos(phase) + p sin(phase)`.
    #[pyo3(signature = (phase, half_width=6.0, points=401))]
    fn quadrature_pdf(&self, phase: f64, half_width: f64, points: usize) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let axis = Axis::symmetric(half_width, points);
        let pdf = quadrature_pdf(&self.inner, phase, axis).map_err(err)?;
        Ok((axis.points(), pdf.pdf))
    }
}

#[pyfunction]
#[pyo3(signature = (dipole, g, q_max, omega, lag_cycles=32.0, points_per_omega=8, base_time=None))]
fn spectrum<'py>(
    py: Python<'py>,
    dipole: &Dipole,
    g: f64,
    q_max: usize,
    omega: f64,
    lag_cycles: f64,
    points_per_omega: usize,
    base_time: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let window = SpectrumWindow {
        base_time: base_time.unwrap_or(dipole.inner.end()),
        lag: lag_cycles * 2.0 * std::f64::consts::PI / omega,
        points_per_omega,
    };
    let sp = core_spectrum(&dipole.inner, g, q_max, omega, window).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("freq", sp.freq)?;
    out.set_item("s_coherent", sp.s_coherent)?;
    out.set_item("s_incoherent", sp.s_incoherent)?;
    out.set_item("coherent_weight", sp.harmonics.iter().map(|h| h.coherent).collect::<Vec<_>>())?;
    out.set_item("incoherent_weight", sp.harmonics.iter().map(|h| h.incoherent).collect::<Vec<_>>())?;
    out.set_item("stationarity", sp.diagnostics.stationarity_relative)?;
    Ok(out)
}

#[pyfunction]
fn g2(dipole: &Dipole, q: usize, omega: f64, t: f64, taus: Vec<f64>) -> PyResult<Vec<f64>> {
    Ok(core_g2(&dipole.inner, q, omega, t, &taus).map_err(err)?.values)
}

/// Quadratic-order Gaussian state of the listed harmonic modes.
#[pyfunction]
#[pyo3(signature = (dipole, g, omega, modes, mean_field=false))]
fn squeeze<'py>(
    py: Python<'py>,
    dipole: &Dipole,
    g: f64,
    omega: f64,
    modes: Vec<usize>,
    mean_field: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let signal = if mean_field { dipole.inner.mean_field() } else { dipole.inner.clone() };
    let r = quadratic_propagator(&signal, g, omega, &modes, PropagatorOptions::default()).map_err(err)?;
    let d = gaussian_diagnostics(&r.state).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("modes", r.modes)?;
    out.set_item("beta", r.beta)?;
    out.set_item("mean", r.state.mean.clone())?;
    let n = r.state.mean.len();
    out.set_item("cov", r.state.cov.chunks(n).map(|c| c.to_vec()).collect::<Vec<_>>())?;
    out.set_item("squeezing_db", d.squeezing_db.clone())?;
    out.set_item("log_negativity", d.log_negativity.clone())?;
    out.set_item("purity", d.purity)?;
    out.set_item("min_symplectic_eigenvalue", d.min_symplectic_eigenvalue)?;
    out.set_item("is_physical", d.is_physical())?;
    Ok(out)
}

#[pymodule]
pub fn hhgq_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("HhgqError", m.py().get_type::<HhgqError>())?;
    m.add_class::<Dipole>()?;
    m.add_class::<State>()?;
    m.add_function(wrap_pyfunction!(solve_two_level, m)?)?;
    m.add_function(wrap_pyfunction!(solve_sfa, m)?)?;
    m.add_function(wrap_pyfunction!(load_dipole, m)?)?;
    m.add_function(wrap_pyfunction!(compute_chi, m)?)?;
    m.add_function(wrap_pyfunction!(spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(g2, m)?)?;
    m.add_function(wrap_pyfunction!(squeeze, m)?)?;
    Ok(())
}
