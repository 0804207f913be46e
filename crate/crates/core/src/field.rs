//! From dipole signal to field state: per-mode displacements, the
//! harmonic-mode conditioning that produces cat states, and the
//! phase-averaged driving state.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::dipole::DipoleSignal;
use crate::error::{HhgError, Result};
use crate::fock;
use crate::statespace::{
    coherent_overlap, CoherentLabel, CoherentSuperposition, DiagonalMixture, FieldState,
    ProductCoherent, TruncatedFock,
};

/// Displacement `chi_q` acquired by harmonic modes `q = 1..=N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeAmplitudes {
    pub g: f64,
    pub omega: f64,
    /// `chi[q - 1]` is the amplitude of harmonic `q`.
    pub chi: Vec<C64>,
    /// Phase factors `phi_q` of the ordered displacement product.
    pub phases: Vec<f64>,
}

impl ModeAmplitudes {
    /// Amplitudes set by hand (no dipole model), zero phases.
    pub fn from_chi(g: f64, omega: f64, chi: Vec<C64>) -> Result<Self> {
        if chi.len() < 2 {
            return Err(HhgError::ParameterOutOfRange(format!(
                "need at least 2 modes, got {}",
                chi.len()
            )));
        }
        if chi.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(HhgError::InvalidState("non-finite chi".into()));
        }
        let phases = vec![0.0; chi.len()];
        Ok(ModeAmplitudes {
            g,
            omega,
            chi,
            phases,
        })
    }

    pub fn modes(&self) -> usize {
        self.chi.len()
    }

    pub fn chi(&self, q: usize) -> C64 {
        self.chi[q - 1]
    }

    /// `sum_{q >= 2} |chi_q|^2`.
    pub fn tail_sum(&self) -> f64 {
        self.chi.iter().skip(1).map(|c| c.norm_sqr()).sum()
    }

    pub fn global_phase(&self) -> f64 {
        self.phases.iter().sum()
    }
}

/// `chi_q = -i g int <d(t)> e^{i q omega t} dt` (trapezoid) for `q = 1..=n`.
pub fn compute_chi(dipole: &DipoleSignal, g: f64, omega: f64, n: usize) -> Result<ModeAmplitudes> {
    if n < 2 {
        return Err(HhgError::ParameterOutOfRange(format!(
            "need at least 2 modes, got {n}"
        )));
    }
    if !(omega > 0.0) {
        return Err(HhgError::ParameterOutOfRange("omega must be > 0".into()));
    }
    let samples = 2.0 * std::f64::consts::PI / (n as f64 * omega * dipole.dt);
    if samples < 8.0 {
        return Err(HhgError::GridTooCoarse(format!(
            "harmonic {n} has {samples:.2} samples per period (need >= 8)"
        )));
    }
    let mut chi = Vec::with_capacity(n);
    let mut phases = Vec::with_capacity(n);
    let len = dipole.len();
    for q in 1..=n {
        let w = q as f64 * omega;
        // running chi(t) and the ordering phase Im int chi' chi^* dt
        let mut acc = C64::new(0.0, 0.0);
        let mut phase = 0.0;
        let mut prev = C64::from_polar(dipole.d[0], w * dipole.time(0));
        for k in 1..len {
            let cur = C64::from_polar(dipole.d[k], w * dipole.time(k));
            let delta = C64::new(0.0, -g) * (prev + cur) * (0.5 * dipole.dt);
            phase += (delta * acc.conj()).im;
            acc += delta;
            prev = cur;
        }
        chi.push(acc);
        phases.push(phase);
    }
    Ok(ModeAmplitudes {
        g,
        omega,
        chi,
        phases,
    })
}

/// Displaces every mode by its `chi_q`: `|a_q> -> |a_q + chi_q>`.
pub fn apply_hhg(initial: &ProductCoherent, chi: &ModeAmplitudes) -> Result<ProductCoherent> {
    if initial.modes.len() != chi.modes() {
        return Err(HhgError::ModeCountMismatch {
            expected: chi.modes(),
            got: initial.modes.len(),
        });
    }
    Ok(ProductCoherent {
        modes: initial
            .modes
            .iter()
            .zip(&chi.chi)
            .map(|(a, c)| CoherentLabel(a.0 + c))
            .collect(),
        global_phase: initial.global_phase + chi.global_phase(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConditioningOperator {
    /// `P = 1 - |alpha><alpha|`.
    Projector,
    /// `M = 1 - e^{-sum_{q>=2} |chi_q|^2} |alpha><alpha|`.
    Measurement,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionResult {
    /// Unnormalized fundamental-mode state, absolute labels
    /// `|alpha + chi_1> - s <alpha|alpha + chi_1> |alpha>`.
    pub cat: FieldState,
    /// Same state with unit norm.
    pub normalized: CoherentSuperposition,
    /// Normalized state in the frame displaced by `-alpha`.
    pub relative: CoherentSuperposition,
    pub success_probability: f64,
    pub operator: ConditioningOperator,
    pub alpha: CoherentLabel,
    pub chi1: C64,
    pub tail_sum: f64,
}

impl ConditionResult {
    pub fn exact_operator_used(&self) -> bool {
        self.operator == ConditioningOperator::Measurement
    }

    /// Probability of the complementary outcome.
    pub fn complement_probability(&self) -> f64 {
        1.0 - self.success_probability
    }
}

/// Conditions the fundamental mode on having generated harmonics.
///
/// `state` is the output of [`apply_hhg`]; `alpha` the initial label of the
/// fundamental. The relative-frame state is built directly from
/// `chi_1 = label_1 - alpha`, so arbitrarily large `alpha` is harmless.
pub fn condition_on_harmonics(
    state: &ProductCoherent,
    alpha: CoherentLabel,
    use_exact_m: bool,
) -> Result<ConditionResult> {
    let first = state
        .modes
        .first()
        .ok_or_else(|| HhgError::InvalidState("no modes".into()))?;
    let chi1 = first.0 - alpha.0;
    let tail: f64 = state.modes.iter().skip(1).map(|l| l.mean_photon_number()).sum();
    condition_relative(alpha, chi1, tail, use_exact_m)
}

/// Conditioning from `alpha`, `chi_1` and the harmonic tail sum.
pub fn condition_relative(
    alpha: CoherentLabel,
    chi1: C64,
    tail_sum: f64,
    use_exact_m: bool,
) -> Result<ConditionResult> {
    let (operator, s, one_minus_s) = if use_exact_m {
        (
            ConditioningOperator::Measurement,
            (-tail_sum).exp(),
            -(-tail_sum).exp_m1(),
        )
    } else {
        (ConditioningOperator::Projector, 1.0, 0.0)
    };
    let x = chi1.norm_sqr();
    // <M^dag M> = 1 - |o|^2 + |o|^2 (1 - s)^2, |o|^2 = e^{-x}
    let success = -(-x).exp_m1() + (-x).exp() * one_minus_s * one_minus_s;
    if !(success > 1e-300) {
        return Err(HhgError::DegenerateSuperposition);
    }
    let a = alpha.0;
    // <alpha|alpha + chi_1> = e^{-|chi|^2/2} e^{-i Im(alpha chi^*)}
    let twist = C64::from_polar(1.0, -(a * chi1.conj()).im);
    let overlap = twist * (-0.5 * x).exp();
    let cat = CoherentSuperposition::new(vec![
        (C64::new(1.0, 0.0), CoherentLabel(a + chi1)),
        (-s * overlap, alpha),
    ]);
    let norm = success.sqrt();
    let normalized = CoherentSuperposition::new(
        cat.branches.iter().map(|(c, b)| (c / norm, *b)).collect(),
    );
    // D(-alpha) maps |alpha + chi> to e^{-i Im(alpha chi^*)} |chi>
    let relative = CoherentSuperposition::new(vec![
        (twist / norm, CoherentLabel(chi1)),
        (-s * overlap / norm, CoherentLabel(C64::new(0.0, 0.0))),
    ]);
    Ok(ConditionResult {
        cat: FieldState::CoherentSuperposition(cat),
        normalized,
        relative,
        success_probability: success,
        operator,
        alpha,
        chi1,
        tail_sum,
    })
}

/// `M = 1 - s |alpha><alpha|` on `dim` levels with `s = e^{-tail_sum}`
/// (`s = 1` gives the projector).
pub fn measurement_operator(alpha: C64, tail_sum: f64, dim: usize) -> DMatrix<C64> {
    let s = (-tail_sum).exp();
    let c = fock::coherent_amplitudes(alpha, dim);
    DMatrix::from_fn(dim, dim, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        C64::new(id, 0.0) - s * c[i] * c[j].conj()
    })
}

/// `<psi|M^dag M|psi> / <psi|psi>`.
pub fn measurement_expectation(psi: &TruncatedFock, alpha: C64, tail_sum: f64) -> Result<f64> {
    if psi.modes() != 1 {
        return Err(HhgError::MultiModeUnsupported(psi.modes()));
    }
    let m = measurement_operator(alpha, tail_sum, psi.dim());
    let v = nalgebra::DVector::from_column_slice(psi.amplitudes());
    let mv = &m * &v;
    Ok(mv.norm_squared() / v.norm_squared())
}

/// Poisson weights `e^{-|a|^2} |a|^{2n} / n!`, truncated once the
/// neglected mass is below `1e-12`.
pub fn phase_average(alpha_mod: f64) -> Result<DiagonalMixture> {
    if !(alpha_mod >= 0.0 && alpha_mod.is_finite()) {
        return Err(HhgError::ParameterOutOfRange(format!(
            "|alpha| must be finite and >= 0, got {alpha_mod}"
        )));
    }
    let mean = alpha_mod * alpha_mod;
    if mean == 0.0 {
        return DiagonalMixture::new(vec![1.0]);
    }
    let ln_mean = mean.ln();
    let mut weights = Vec::new();
    let mut ln_fact = 0.0;
    let mut total = 0.0;
    for n in 0.. {
        if n > 0 {
            ln_fact += (n as f64).ln();
        }
        let p = (n as f64 * ln_mean - mean - ln_fact).exp();
        weights.push(p);
        total += p;
        if n as f64 > mean && 1.0 - total < 1e-13 && p < 1e-16 {
            break;
        }
    }
    DiagonalMixture::new(weights)
}

/// Expected classical field `Tr[E_Q(t) rho]` of every mode, where
/// `E_q(t) = i g sqrt(q) (b_q e^{-i q w t} - b_q^dag e^{i q w t})`.
pub fn classical_field(state: &FieldState, g: f64, omega: f64, t: f64) -> Result<Vec<f64>> {
    let amplitude = |q: usize, b: C64| -> f64 {
        let w = q as f64 * omega;
        -2.0 * g * (q as f64).sqrt() * (b * C64::from_polar(1.0, -w * t)).im
    };
    match state {
        FieldState::ProductCoherent(p) => Ok(p
            .modes
            .iter()
            .enumerate()
            .map(|(k, l)| amplitude(k + 1, l.0))
            .collect()),
        FieldState::CoherentSuperposition(s) => {
            let s = s.normalized()?;
            let mut mean = C64::new(0.0, 0.0);
            for (ci, bi) in &s.branches {
                for (cj, bj) in &s.branches {
                    mean += ci.conj() * cj * bj.0 * coherent_overlap(bi.0, bj.0);
                }
            }
            Ok(vec![amplitude(1, mean)])
        }
        // diagonal in the number basis: <b> vanishes identically
        FieldState::DiagonalMixture(_) => Ok(vec![0.0]),
        FieldState::TruncatedFock(f) => {
            let b = fock::annihilation(f.dim());
            let norm = f.norm_sqr();
            (0..f.modes())
                .map(|m| {
                    let bf = f.apply_mode_operator(m, &b)?;
                    let mean = fock::inner(f.amplitudes(), bf.amplitudes()) / norm;
                    Ok(amplitude(m + 1, mean))
                })
                .collect()
        }
        FieldState::Gaussian(_) => Err(HhgError::UnsupportedVariant(state.variant_name())),
    }
}
