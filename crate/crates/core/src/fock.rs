//! Number-basis numerics shared by the truncated Fock representation and the
//! oracle paths: coherent amplitudes, exact displacement matrix elements,
//! ladder operators and harmonic-oscillator wavefunctions.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

/// `e^{-|alpha|^2/2} alpha^n / sqrt(n!)` for `n < dim`.
pub fn coherent_amplitudes(alpha: C64, dim: usize) -> Vec<C64> {
    let mut out = Vec::with_capacity(dim);
    if dim == 0 {
        return out;
    }
    let mut c = C64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    out.push(c);
    for n in 1..dim {
        c = c * alpha / (n as f64).sqrt();
        out.push(c);
    }
    out
}

/// Probability mass of `|alpha>` above the cutoff.
pub fn coherent_tail(alpha: C64, dim: usize) -> f64 {
    let kept: f64 = coherent_amplitudes(alpha, dim).iter().map(|c| c.norm_sqr()).sum();
    (1.0 - kept).max(0.0)
}

/// Smallest cutoff that keeps the coherent tail mass below `tol`.
pub fn coherent_cutoff(alpha: C64, tol: f64) -> usize {
    let n2 = alpha.norm_sqr();
    let mut dim = (n2 + 8.0 * n2.sqrt()).ceil() as usize + 8;
    while coherent_tail(alpha, dim) > tol {
        dim += 8;
    }
    dim
}

/// Normalized associated-Laguerre functions
/// `l_n^{(a)}(x) = sqrt(n!/(n+a)!) x^{a/2} e^{-x/2} L_n^{(a)}(x)`
/// for `n = 0..len`, evaluated with the forward three-term recurrence.
pub(crate) fn laguerre_normalized(a: usize, x: f64, len: usize) -> Vec<f64> {
    laguerre_from(a, x, log_laguerre_start(a, x, ln_factorial(a)), len)
}

/// `ln l_0^{(a)}(x) = (a/2) ln x - x/2 - ln(a!)/2`.
fn log_laguerre_start(a: usize, x: f64, ln_fact_a: f64) -> f64 {
    if x > 0.0 {
        0.5 * a as f64 * x.ln() - 0.5 * x - 0.5 * ln_fact_a
    } else if a == 0 {
        0.0
    } else {
        f64::NEG_INFINITY
    }
}

fn laguerre_from(a: usize, x: f64, log_l0: f64, len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    if len == 0 {
        return out;
    }
    let l0 = log_l0.exp();
    out.push(l0);
    let af = a as f64;
    let mut prev = 0.0;
    let mut cur = l0;
    for n in 0..len - 1 {
        let nf = n as f64;
        let next = ((2.0 * nf + 1.0 + af - x) * cur - (nf * (nf + af)).sqrt() * prev)
            / ((nf + 1.0) * (nf + 1.0 + af)).sqrt();
        prev = cur;
        cur = next;
        out.push(cur);
    }
    out
}

pub fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// Exact matrix elements `<m|D(gamma)|n>` for `m < rows`, `n < cols`.
///
/// Unlike the exponential of a truncated generator these are the elements
/// of the infinite-dimensional operator, so leakage past a cutoff can be
/// measured with them.
pub fn displacement_matrix(gamma: C64, rows: usize, cols: usize) -> DMatrix<C64> {
    let mut d = DMatrix::<C64>::zeros(rows, cols);
    let x = gamma.norm_sqr();
    let phase = if gamma.norm() > 0.0 {
        gamma / gamma.norm()
    } else {
        C64::new(1.0, 0.0)
    };
    let minus_conj = -phase.conj();
    let mut ln_fact = 0.0;
    // m >= n: l_n^{(m-n)}(x) phase^{m-n}; m < n: l_m^{(n-m)}(x) (-conj(phase))^{n-m}
    let mut ph_lo = C64::new(1.0, 0.0);
    let mut ph_hi = C64::new(1.0, 0.0);
    for a in 0..rows.max(cols) {
        if a > 0 {
            ln_fact += (a as f64).ln();
            ph_lo *= phase;
            ph_hi *= minus_conj;
        }
        let lower = cols.min(rows.saturating_sub(a));
        let upper = if a == 0 { 0 } else { rows.min(cols.saturating_sub(a)) };
        let len = lower.max(upper);
        if len == 0 {
            continue;
        }
        let l = laguerre_from(a, x, log_laguerre_start(a, x, ln_fact), len);
        for (n, v) in l.iter().take(lower).enumerate() {
            d[(n + a, n)] = ph_lo * *v;
        }
        for (m, v) in l.iter().take(upper).enumerate() {
            d[(m, m + a)] = ph_hi * *v;
        }
    }
    d
}

/// `D(gamma)|psi>` truncated to `out_dim` levels, using exact elements.
pub fn displace_exact(psi: &[C64], gamma: C64, out_dim: usize) -> Vec<C64> {
    let d = displacement_matrix(gamma, out_dim, psi.len());
    (0..out_dim)
        .map(|m| (0..psi.len()).map(|n| d[(m, n)] * psi[n]).sum())
        .collect()
}

/// Annihilation operator on `dim` levels.
pub fn annihilation(dim: usize) -> DMatrix<C64> {
    let mut b = DMatrix::<C64>::zeros(dim, dim);
    for n in 1..dim {
        b[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    b
}

/// Normalized Hermite functions `psi_n(x) = <x|n>` for `n < dim`
/// (vacuum variance 1/2, `psi_0 = pi^{-1/4} e^{-x^2/2}`).
pub fn hermite_functions(x: f64, dim: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(dim);
    if dim == 0 {
        return out;
    }
    let h0 = std::f64::consts::PI.powf(-0.25) * (-0.5 * x * x).exp();
    out.push(h0);
    if dim == 1 {
        return out;
    }
    let h1 = std::f64::consts::SQRT_2 * x * h0;
    out.push(h1);
    for n in 1..dim - 1 {
        let nf = n as f64;
        let next = ((2.0 / (nf + 1.0)).sqrt() * x * out[n]) - (nf / (nf + 1.0)).sqrt() * out[n - 1];
        out.push(next);
    }
    out
}

pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm_sqr(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

/// `|<a|b>|^2 / (<a|a><b|b>)`, insensitive to global phase.
pub fn fidelity(a: &[C64], b: &[C64]) -> f64 {
    inner(a, b).norm_sqr() / (norm_sqr(a) * norm_sqr(b))
}
