#![allow(dead_code)]

use std::f64::consts::PI;

use hhgq::C64;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Coherent amplitudes by the recursion `a_n = a_{n-1} alpha / sqrt(n)`.
pub fn coherent_by_recursion(alpha: C64, dim: usize) -> Vec<C64> {
    let mut out = vec![c((-0.5 * alpha.norm_sqr()).exp(), 0.0)];
    for n in 1..dim {
        let prev = out[n - 1];
        out.push(prev * alpha / (n as f64).sqrt());
    }
    out
}

/// `psi(x) = sum_n a_n phi_n(x)` from the oscillator eigenfunction recursion.
pub fn wavefunction(amps: &[C64], x: f64) -> C64 {
    let mut prev = 0.0;
    let mut cur = PI.powf(-0.25) * (-0.5 * x * x).exp();
    let mut out = amps[0] * cur;
    for (n, a) in amps.iter().enumerate().skip(1) {
        let m = (n - 1) as f64;
        let next = (2.0 / (m + 1.0)).sqrt() * x * cur - (m / (m + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        out += a * cur;
    }
    out
}

/// Weyl transform `(1/pi) int psi*(x+y) psi(x-y) e^{2ipy} dy` for a normalized
/// state, by the trapezoid rule on `|y| <= 10`.
pub fn wigner_by_wavefunction(amps: &[C64], x: f64, p: f64) -> f64 {
    let h = 0.02;
    let n = (10.0 / h) as i64;
    let mut s = C64::new(0.0, 0.0);
    for k in -n..=n {
        let y = k as f64 * h;
        s += wavefunction(amps, x + y).conj() * wavefunction(amps, x - y) * C64::from_polar(1.0, 2.0 * p * y);
    }
    (s * h).re / PI
}

/// Brute-force propagation of `atom (x) mode_a (x) mode_b` (each mode cut at
/// `dim` photons) under `H_I = -D(t) E(t)` with
/// `E = -i g sum_q sqrt(q) (b_q^dag e^{i w_q t} - b_q e^{-i w_q t})`,
/// RK4 on the dipole grid, starting from the atomic ground state and field
/// vacuum. The field is then projected on the atomic ground state and the
/// interleaved `(x_a, p_a, x_b, p_b)` means and covariance are returned.
pub fn fock_oracle(s: &hhgq::dipole::DipoleSignal, g: f64, omega: f64, modes: [usize; 2], dim: usize) -> (Vec<f64>, Vec<f64>) {
    let dij = s.dij.as_ref().expect("transition dipoles");
    let nb = dij.basis();
    let fd = dim * dim;
    let zero = C64::new(0.0, 0.0);
    // b_m and b_m^dag on the two-mode register, index n_a * dim + n_b
    let shift = |m: usize, v: &[C64], up: bool| -> Vec<C64> {
        let mut out = vec![zero; fd];
        for na in 0..dim {
            for nb_ in 0..dim {
                let n = if m == 0 { na } else { nb_ };
                let src = na * dim + nb_;
                if up {
                    if n + 1 < dim {
                        let dst = if m == 0 { src + dim } else { src + 1 };
                        out[dst] += v[src] * ((n + 1) as f64).sqrt();
                    }
                } else if n > 0 {
                    let dst = if m == 0 { src - dim } else { src - 1 };
                    out[dst] += v[src] * (n as f64).sqrt();
                }
            }
        }
        out
    };
    let dmat = |t: f64| -> Vec<C64> {
        let x = ((t - s.t0) / s.dt).max(0.0);
        let k = (x.floor() as usize).min(s.len() - 2);
        let fr = x - k as f64;
        (0..nb * nb).map(|e| dij.at(k)[e] * (1.0 - fr) + dij.at(k + 1)[e] * fr).collect()
    };
    let rhs = |t: f64, psi: &[C64]| -> Vec<C64> {
        let d = dmat(t);
        let mut e_psi = vec![zero; nb * fd];
        for a in 0..nb {
            let blk = &psi[a * fd..(a + 1) * fd];
            for (m, q) in modes.iter().enumerate() {
                let w = *q as f64 * omega;
                let (up, dn) = (shift(m, blk, true), shift(m, blk, false));
                let cq = C64::new(0.0, -g * (*q as f64).sqrt());
                let (eu, ed) = (C64::from_polar(1.0, w * t), C64::from_polar(1.0, -w * t));
                for i in 0..fd {
                    e_psi[a * fd + i] += cq * (up[i] * eu - dn[i] * ed);
                }
            }
        }
        // -i H psi = i (D (x) E) psi
        let mut out = vec![zero; nb * fd];
        for a in 0..nb {
            for b in 0..nb {
                let dab = d[a * nb + b] * C64::new(0.0, 1.0);
                for i in 0..fd {
                    out[a * fd + i] += dab * e_psi[b * fd + i];
                }
            }
        }
        out
    };
    let axpy = |a: &[C64], b: &[C64], h: f64| -> Vec<C64> { a.iter().zip(b).map(|(x, y)| x + y * h).collect() };
    let mut psi = vec![zero; nb * fd];
    psi[0] = C64::new(1.0, 0.0);
    let h = s.dt;
    for k in 0..s.len() - 1 {
        let t = s.time(k);
        let k1 = rhs(t, &psi);
        let k2 = rhs(t + 0.5 * h, &axpy(&psi, &k1, 0.5 * h));
        let k3 = rhs(t + 0.5 * h, &axpy(&psi, &k2, 0.5 * h));
        let k4 = rhs(t + h, &axpy(&psi, &k3, h));
        for i in 0..psi.len() {
            psi[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0);
        }
    }
    let mut phi = psi[..fd].to_vec();
    let norm = phi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    phi.iter_mut().for_each(|z| *z /= norm);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut quads: Vec<Vec<C64>> = Vec::new();
    for m in 0..2 {
        let (up, dn) = (shift(m, &phi, true), shift(m, &phi, false));
        quads.push((0..fd).map(|i| (dn[i] + up[i]) * r).collect());
        quads.push((0..fd).map(|i| (dn[i] - up[i]) * C64::new(0.0, -r)).collect());
    }
    let inner = |a: &[C64], b: &[C64]| -> C64 { a.iter().zip(b).map(|(x, y)| x.conj() * y).sum() };
    let mean: Vec<f64> = quads.iter().map(|v| inner(&phi, v).re).collect();
    let mut cov = vec![0.0; 16];
    for i in 0..4 {
        for j in 0..4 {
            cov[i * 4 + j] = inner(&quads[i], &quads[j]).re - mean[i] * mean[j];
        }
    }
    (mean, cov)
}
