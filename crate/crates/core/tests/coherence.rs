mod common;

use std::f64::consts::PI;

use common::c;
use hhgq::coherence::*;
use hhgq::dipole::*;
use hhgq::field::compute_chi;
use hhgq::{HhgError, C64};

fn tone(omega: f64, q: f64, cycles: usize, per_cycle: usize) -> DipoleSignal {
    let n = cycles * per_cycle;
    let dt = 2.0 * PI / omega / per_cycle as f64;
    let d = (0..=n).map(|k| (q * omega * k as f64 * dt).cos()).collect();
    DipoleSignal::new(0.0, dt, d, None).unwrap()
}

fn weak_two_level(per_cycle: usize) -> DipoleSignal {
    let p = PulseConfig::new(0.2, 0.1, Envelope::Sin2, 12.0);
    solve_two_level(&p, 1.0, 1.0, TimeGrid::for_pulse(&p, per_cycle)).unwrap()
}

fn coherent_split(sp: &SpectrumResult) -> (f64, f64) {
    let even = sp.harmonics.iter().filter(|h| h.q % 2 == 0).map(|h| h.coherent).sum();
    let odd = sp.harmonics.iter().filter(|h| h.q % 2 == 1).map(|h| h.coherent).sum();
    (even, odd)
}

#[test]
fn heisenberg_mode_of_zero_dipole_is_free() {
    let s = DipoleSignal::new(0.0, 0.05, vec![0.0; 400], None).unwrap();
    let m = heisenberg_mode(&s, 0.1, 3, 0.5, 7.0).unwrap();
    assert_eq!(m.source, c(0.0, 0.0));
    assert!((m.free_phase - C64::from_polar(1.0, -1.5 * 7.0)).norm() < 1e-15);
    assert!(matches!(
        heisenberg_mode(&s, 0.1, 3, 0.5, 100.0),
        Err(HhgError::OutOfGridRange { .. })
    ));
}

#[test]
fn heisenberg_source_of_a_tone() {
    let (w, g, q) = (0.4, 0.02, 2usize);
    let s = tone(w, q as f64, 10, 300);
    for cycles in [3.0, 7.0, 10.0] {
        let t = cycles * 2.0 * PI / w;
        let m = heisenberg_mode(&s, g, q, w, t).unwrap();
        let want = (q as f64).sqrt() * g * t / 2.0;
        assert!(((m.source.norm() - want) / want).abs() < 1e-6, "t {t}");
    }
}

#[test]
fn heisenberg_source_agrees_with_chi_and_converges() {
    let s = weak_two_level(1600);
    let g = 0.01;
    let chi = compute_chi(&s, g, 0.2, 7).unwrap();
    let mut best = (0, 0.0);
    let top = chi.chi(1).norm();
    for q in 1..=7 {
        let m = heisenberg_mode(&s, g, q, 0.2, s.end()).unwrap();
        let want = (q as f64).sqrt() * chi.chi(q).norm();
        assert!((m.source.norm() - want).abs() < 1e-12 * top, "q = {q}");
        if m.source.norm() > best.1 {
            best = (q, m.source.norm());
        }
    }
    // the drive line dominates
    assert_eq!(best.0, 1);
    let coarse_d: Vec<f64> = s.d.iter().step_by(2).copied().collect();
    let coarse = DipoleSignal::new(s.t0, 2.0 * s.dt, coarse_d, None).unwrap();
    let a = heisenberg_mode(&s, g, 1, 0.2, s.end()).unwrap().source;
    let b = heisenberg_mode(&coarse, g, 1, 0.2, coarse.end()).unwrap().source;
    assert!((a - b).norm() / a.norm() < 1e-6);
}

#[test]
fn g1_of_zero_dipole_vanishes() {
    let s = DipoleSignal::new(0.0, 0.05, vec![0.0; 400], None).unwrap();
    let taus = [0.0, 1.0, 2.0];
    let r = g1(&s, 0.1, 1, 1.0, 5.0, &taus, G1Mode::CoherentOnly).unwrap();
    assert!(r.values.iter().all(|v| *v == c(0.0, 0.0)));
    assert!(matches!(
        g1(&s, 0.1, 1, 1.0, 5.0, &taus, G1Mode::Full),
        Err(HhgError::MissingTransitionDipoles)
    ));
}

#[test]
fn g1_approaches_stationary_form() {
    let (w, g, q) = (0.5, 0.05, 3usize);
    let period = 2.0 * PI / w;
    let n = 64 * 200;
    let dt = period / 200.0;
    let d = (0..=n + 100)
        .map(|k| {
            let t = k as f64 * dt;
            0.3 * (w * t).cos() + (3.0 * w * t).cos()
        })
        .collect();
    let s = DipoleSignal::new(0.0, dt, d, None).unwrap();
    let t = 64.0 * period;
    let taus: Vec<f64> = (0..50).map(|k| k as f64 * period / 100.0).collect();
    let r = g1(&s, g, q, w, t, &taus, G1Mode::CoherentOnly).unwrap();
    let a = heisenberg_mode(&s, 1.0, q, w, t).unwrap().source.norm() / (q as f64).sqrt();
    let scale = g * g * q as f64 * a * a;
    for (tau, v) in taus.iter().zip(&r.values) {
        let want = C64::from_polar(scale, -(q as f64) * w * tau);
        let dev = (v - want).norm() / scale;
        assert!(dev < 1e-2, "tau {tau}: {dev:e}");
    }
    assert!(r.values[0].im.abs() < 1e-15 * scale && r.values[0].re >= 0.0);
}

#[test]
fn g1_split_is_exact_and_mean_field_has_no_incoherent_part() {
    let s = weak_two_level(400);
    let t = 0.6 * s.end();
    let taus: Vec<f64> = (0..40).map(|k| k as f64 * 0.37).collect();
    let split = g1_split(&s, 0.05, 3, 0.2, t, &taus).unwrap();
    for k in 0..taus.len() {
        let sum = split.coherent.values[k] + split.incoherent.values[k];
        assert!((sum - split.full.values[k]).norm() < 1e-10 * split.full.values[0].norm());
    }
    let inc = split.incoherent.values[0].re;
    assert!(inc > 1e-6 * split.full.values[0].re, "incoherent {inc:e}");

    let mf = g1_split(&s.mean_field(), 0.05, 3, 0.2, t, &taus).unwrap();
    let top = mf.full.values[0].norm();
    assert!(mf.incoherent.values.iter().all(|v| v.norm() < 1e-12 * top));
    assert!(mf.coherent.values.iter().zip(&split.coherent.values).all(|(a, b)| (a - b).norm() < 1e-14 * top));
}

#[test]
fn tone_spectrum_weight() {
    let (w, g) = (0.5, 0.02);
    let s = tone(w, 3.0, 40, 64);
    let run = |lag_cycles: f64| {
        let win = SpectrumWindow {
            base_time: s.end(),
            lag: lag_cycles * 2.0 * PI / w,
            points_per_omega: 16,
        };
        spectrum(&s, g, 5, w, win).unwrap()
    };
    let sp = run(32.0);
    let a = heisenberg_mode(&s, 1.0, 3, w, s.end()).unwrap().source.norm() / 3f64.sqrt();
    let want = g * g * 3.0 * a * a;
    let h3 = sp.harmonics[2];
    assert!(((h3.coherent - want) / want).abs() < 1e-2, "{} vs {want}", h3.coherent);
    assert!(((h3.expected_coherent - want) / want).abs() < 1e-12);
    for h in sp.harmonics.iter().filter(|h| h.q != 3) {
        assert!(h.coherent < 1e-3 * want, "q = {}: {:e}", h.q, h.coherent);
    }
    // peak sits within a bin of 3 w
    let k = (0..sp.freq.len())
        .max_by(|i, j| sp.s_coherent[*i].total_cmp(&sp.s_coherent[*j]))
        .unwrap();
    let bin = sp.freq[1] - sp.freq[0];
    assert!((sp.freq[k] - 3.0 * w).abs() <= bin);
    assert!(!sp.diagnostics.negative_excursion);

    let doubled = run(64.0);
    let change = (doubled.harmonics[2].coherent - h3.coherent).abs() / h3.coherent;
    assert!(change < 1e-2, "window doubling {change:e}");
}

#[test]
fn spectrum_rejects_short_windows() {
    let s = tone(1.0, 1.0, 10, 64);
    let win = SpectrumWindow {
        base_time: s.end(),
        lag: 3.0 * 2.0 * PI,
        points_per_omega: 8,
    };
    assert!(matches!(spectrum(&s, 0.1, 3, 1.0, win), Err(HhgError::WindowTooShort(_))));
}

#[test]
fn single_color_spectrum_is_odd() {
    let w = 0.2;
    let p = PulseConfig::new(w, 0.1, Envelope::Flat { ramp_cycles: 5.0 }, 40.0);
    let s = solve_two_level(&p, 1.0, 1.0, TimeGrid::for_pulse(&p, 400)).unwrap();
    let win = SpectrumWindow {
        base_time: s.end(),
        lag: 32.0 * p.period(),
        points_per_omega: 8,
    };
    let sp = spectrum(&s, 0.01, 8, w, win).unwrap();
    let (even, odd) = coherent_split(&sp);
    assert!(even / odd < 1e-4, "even/odd {:e}", even / odd);
    for h in &sp.harmonics {
        assert!(((h.coherent - h.expected_coherent) / odd).abs() < 1e-3, "q = {}", h.q);
    }
    assert!(sp.s_coherent.iter().chain(&sp.s_incoherent).all(|v| *v >= 0.0));
}

#[test]
fn two_color_phase_modulates_even_harmonics() {
    let w = 0.2;
    let ratios: Vec<f64> = (0..=6)
        .map(|k| {
            let phi = k as f64 * PI / 12.0;
            let p = PulseConfig::new(w, 0.6, Envelope::Sin2, 10.0).with_second_color(0.1, phi);
            let s = solve_two_level(&p, 1.0, 1.0, TimeGrid::for_pulse(&p, 800)).unwrap();
            let win = SpectrumWindow {
                base_time: s.end(),
                lag: 32.0 * p.period(),
                points_per_omega: 8,
            };
            let (even, odd) = coherent_split(&spectrum(&s, 0.01, 15, w, win).unwrap());
            even / odd
        })
        .collect();
    assert!(ratios.windows(2).all(|r| r[1] > r[0]), "{ratios:?}");
    assert!(ratios[6] / ratios[0] > 1.1, "{ratios:?}");
}

#[test]
fn g2_of_mean_field_source_is_one() {
    let s = weak_two_level(400).mean_field();
    let t = 0.5 * s.end();
    let taus: Vec<f64> = (0..60).map(|k| k as f64 * 0.5).collect();
    for q in [1, 3] {
        let r = g2(&s, q, 0.2, t, &taus).unwrap();
        assert!(r.values.iter().all(|v| (v - 1.0).abs() < 1e-8), "q = {q}");
    }
}

#[test]
fn g2_errors() {
    let zero = DipoleSignal::new(0.0, 0.05, vec![0.0; 400], None).unwrap().mean_field();
    assert!(matches!(
        g2(&zero, 1, 1.0, 5.0, &[0.0, 1.0]),
        Err(HhgError::DivisionByZeroIntensity)
    ));
    let bare = DipoleSignal::new(0.0, 0.05, vec![0.1; 400], None).unwrap();
    assert!(matches!(g2(&bare, 1, 1.0, 5.0, &[0.0]), Err(HhgError::MissingTransitionDipoles)));
}

/// Independent propagation: exact 2x2 exponentials of the midpoint
/// Hamiltonian on `sub` substeps per grid step, then `M_q(s)` as a 2x2
/// matrix by the trapezoid rule. Returns `M` at every grid point.
fn brute_force_m(p: &PulseConfig, mu: f64, delta: f64, grid: TimeGrid, w: f64, sub: usize) -> Vec<[C64; 4]> {
    let h = grid.dt / sub as f64;
    let step = |t: f64| -> [C64; 4] {
        let e = -mu * p.field(t + 0.5 * h);
        let (nx, nz) = (e, -0.5 * delta);
        let r = nx.hypot(nz);
        let (cs, sn) = ((r * h).cos(), if r > 0.0 { (r * h).sin() / r } else { h });
        let ph = C64::from_polar(1.0, -0.5 * delta * h);
        let i = C64::new(0.0, 1.0);
        [
            ph * (cs - i * sn * nz),
            ph * (-i * sn * nx),
            ph * (-i * sn * nx),
            ph * (cs + i * sn * nz),
        ]
    };
    let mul = |a: &[C64; 4], b: &[C64; 4]| {
        [
            a[0] * b[0] + a[1] * b[2],
            a[0] * b[1] + a[1] * b[3],
            a[2] * b[0] + a[3] * b[2],
            a[2] * b[1] + a[3] * b[3],
        ]
    };
    // U^dag (mu sigma_x) U e^{i w t}
    let integrand = |u: &[C64; 4], t: f64| -> [C64; 4] {
        let x = [c(0.0, 0.0), c(mu, 0.0), c(mu, 0.0), c(0.0, 0.0)];
        let ud = [u[0].conj(), u[2].conj(), u[1].conj(), u[3].conj()];
        let m = mul(&ud, &mul(&x, u));
        let f = C64::from_polar(1.0, w * t);
        [m[0] * f, m[1] * f, m[2] * f, m[3] * f]
    };
    let one = c(1.0, 0.0);
    let mut u = [one, c(0.0, 0.0), c(0.0, 0.0), one];
    let mut acc = [c(0.0, 0.0); 4];
    let mut out = vec![acc];
    let mut prev = integrand(&u, grid.t0);
    for k in 0..grid.len - 1 {
        for j in 0..sub {
            let t = grid.t0 + k as f64 * grid.dt + j as f64 * h;
            u = mul(&step(t), &u);
            let cur = integrand(&u, t + h);
            for e in 0..4 {
                acc[e] += (prev[e] + cur[e]) * (0.5 * h);
            }
            prev = cur;
        }
        out.push(acc);
    }
    out
}

#[test]
fn two_level_antibunching_point() {
    let (w, delta, e0, q) = (1.0, 2.0, 0.01, 7usize);
    let p = PulseConfig::new(w, e0, Envelope::Flat { ramp_cycles: 2.0 }, 20.0);
    let grid = TimeGrid::for_pulse(&p, 602);
    let s = solve_two_level(&p, 1.0, delta, grid).unwrap();
    let kb = (0.28 * (s.len() - 1) as f64).round() as usize;
    let t = s.time(kb);
    let stride = (s.len() - 1 - kb) / 199;
    let taus: Vec<f64> = (0..200).map(|k| (k * stride) as f64 * s.dt).collect();
    let r = g2(&s, q, w, t, &taus).unwrap();
    let min_rest = r.values[1..].iter().copied().fold(f64::INFINITY, f64::min);
    assert!(r.values[0] < min_rest, "g2(0) {} vs min {min_rest}", r.values[0]);

    let split = g1_split(&s, 1.0, q, w, t, &[0.0]).unwrap();
    assert!(split.incoherent.values[0].re > 100.0 * split.coherent.values[0].re);

    let m = brute_force_m(&p, 1.0, delta, grid, q as f64 * w, 8);
    let col = |mm: &[C64; 4]| [mm[0], mm[2]];
    let n = |v: [C64; 2]| v[0].norm_sqr() + v[1].norm_sqr();
    let v0 = col(&m[kb]);
    let oracle: Vec<f64> = (0..200)
        .map(|k| {
            let m1 = &m[kb + k * stride];
            let mv = [m1[0] * v0[0] + m1[1] * v0[1], m1[2] * v0[0] + m1[3] * v0[1]];
            n(mv) / (n(v0) * n(col(m1)))
        })
        .collect();
    let oracle_min = oracle[1..].iter().copied().fold(f64::INFINITY, f64::min);
    assert!(oracle[0] < oracle_min);
    for (k, (a, b)) in r.values.iter().zip(&oracle).enumerate().skip(1) {
        assert!(((a - b) / b).abs() < 1e-2, "tau index {k}: {a} vs {b}");
    }
}

#[test]
fn correlation_csv_headers() {
    let s = weak_two_level(400);
    let split = g1_split(&s, 0.05, 1, 0.2, 0.5 * s.end(), &[0.0, 1.0]).unwrap();
    let mut buf = Vec::new();
    write_g1_csv(&split, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 3);
    let r = g2(&s, 1, 0.2, 0.5 * s.end(), &[0.0, 1.0]).unwrap();
    let mut buf = Vec::new();
    write_g2_csv(&r, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next(), Some("tau,g2"));
}
