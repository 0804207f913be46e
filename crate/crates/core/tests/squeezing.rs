mod common;

use common::{c, fock_oracle};
use hhgq::dipole::*;
use hhgq::field::compute_chi;
use hhgq::squeezing::*;
use hhgq::statespace::{symplectic_eigenvalues, GaussianState};
use hhgq::{HhgError, C64};
use nalgebra::DMatrix;

fn two_level(per_cycle: usize) -> (PulseConfig, DipoleSignal) {
    let p = PulseConfig::new(0.5, 0.2, Envelope::Sin2, 4.0);
    let s = solve_two_level(&p, 1.0, 0.8, TimeGrid::for_pulse(&p, per_cycle)).unwrap();
    (p, s)
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[test]
fn equal_times_commute() {
    let (_, s) = two_level(400);
    let t = 0.3 * s.end();
    let v = commutator(&s, 0.1, 0.5, &[1, 2, 3], t, t).unwrap();
    assert_eq!(max_abs(&v.atomic_block), 0.0);
    assert_eq!(v.max_mixing_coefficient(), 0.0);
    assert_eq!(max_abs(&v.identity_part), 0.0);
}

#[test]
fn commutator_is_antisymmetric_and_anti_hermitian() {
    let (_, s) = two_level(400);
    let (t1, t2) = (0.31 * s.end(), 0.58 * s.end());
    let a = commutator(&s, 0.1, 0.5, &[1, 2], t1, t2).unwrap();
    let b = commutator(&s, 0.1, 0.5, &[1, 2], t2, t1).unwrap();
    assert!(max_abs(&(&a.atomic_block + &b.atomic_block)) < 1e-10);
    assert!(max_abs(&(&a.atomic_block + a.atomic_block.adjoint())) < 1e-10);
    assert!(max_abs(&(&a.identity_part + &b.identity_part)) < 1e-10);
    assert!(max_abs(&(&a.identity_part + a.identity_part.adjoint())) < 1e-10);
    for ma in &a.mode_mixing {
        let mb = b.mode_mixing.iter().find(|m| m.q == ma.p && m.p == ma.q).unwrap();
        assert!(max_abs(&(&ma.creation_creation + &mb.creation_creation)) < 1e-10);
        assert!(max_abs(&(&ma.annihilation_annihilation + &mb.annihilation_annihilation)) < 1e-10);
    }
}

#[test]
fn mean_field_cancels_mode_mixing() {
    let (_, s) = two_level(400);
    let mf = s.mean_field();
    for (f1, f2) in [(0.1, 0.9), (0.25, 0.5), (0.7, 0.2)] {
        let v = commutator(&mf, 0.1, 0.5, &[1, 2, 3], f1 * s.end(), f2 * s.end()).unwrap();
        assert!(v.max_mixing_coefficient() < 1e-12);
    }
}

#[test]
fn quarter_period_mixing_matches_direct_expansion() {
    let (g, w) = (0.1, 0.5);
    let (p, s) = two_level(400);
    let k1 = s.len() / 3;
    let k2 = k1 + 100; // a quarter period at 400 points per cycle
    let (t1, t2) = (s.time(k1), s.time(k2));
    assert!((t2 - t1 - 0.25 * p.period()).abs() < 1e-9);
    let v = commutator(&s, g, w, &[1, 2], t1, t2).unwrap();
    assert!(v.max_mixing_coefficient() > 1e-6);

    // [H(t1), H(t2)] on atom (x) two modes cut at 3 photons, H = -D (x) E
    let dim = 3;
    let b = DMatrix::<C64>::from_fn(dim, dim, |i, j| if j == i + 1 { c((j as f64).sqrt(), 0.0) } else { c(0.0, 0.0) });
    let id = DMatrix::<C64>::identity(dim, dim);
    let modes = [b.kronecker(&id), id.kronecker(&b)];
    let field = |t: f64| {
        let mut e = DMatrix::<C64>::zeros(dim * dim, dim * dim);
        for (m, q) in [1usize, 2].iter().enumerate() {
            let wq = *q as f64 * w;
            let bm = &modes[m];
            e += (bm.adjoint() * C64::from_polar(1.0, wq * t) - bm * C64::from_polar(1.0, -wq * t))
                * c(0.0, -g * (*q as f64).sqrt());
        }
        e
    };
    let dij = s.dij.as_ref().unwrap();
    let d = |k: usize| DMatrix::from_row_slice(2, 2, dij.at(k));
    let h1 = -d(k1).kronecker(&field(t1));
    let h2 = -d(k2).kronecker(&field(t2));
    let comm = &h1 * &h2 - &h2 * &h1;
    // field index n_a * 3 + n_b; |0,0> = 0, |1,1> = 4, |2,0> = 6, |0,2> = 2
    let element = |i: usize, j: usize, out: usize| comm[(i * 9 + out, j * 9)];
    let cc = |q: usize, pp: usize| {
        v.mode_mixing.iter().find(|m| m.q == q && m.p == pp).unwrap().creation_creation.clone()
    };
    let both = cc(1, 2) + cc(2, 1);
    for i in 0..2 {
        for j in 0..2 {
            assert!((element(i, j, 4) - both[(i, j)]).norm() < 1e-12);
            assert!((element(i, j, 6) - cc(1, 1)[(i, j)] * 2f64.sqrt()).norm() < 1e-12);
            assert!((element(i, j, 2) - cc(2, 2)[(i, j)] * 2f64.sqrt()).norm() < 1e-12);
        }
    }
    assert!(both.iter().any(|z| z.norm() > 1e-6));
}

#[test]
fn commutator_errors() {
    let (_, s) = two_level(400);
    assert!(matches!(
        commutator(&s, 0.1, 0.5, &[1], 0.0, 2.0 * s.end()),
        Err(HhgError::OutOfGridRange { .. })
    ));
    let one = DipoleSignal::new(0.0, 0.1, vec![0.0; 10], Some(TransitionDipoles::mean_field(&[0.0; 10], 1))).unwrap();
    assert!(matches!(commutator(&one, 0.1, 0.5, &[1], 0.0, 0.5), Err(HhgError::BasisTooSmall(1))));
    let bare = DipoleSignal::new(0.0, 0.1, vec![0.0; 10], None).unwrap();
    assert!(matches!(commutator(&bare, 0.1, 0.5, &[1], 0.0, 0.5), Err(HhgError::MissingTransitionDipoles)));
}

#[test]
fn mean_field_propagator_reduces_to_displacements() {
    let (_, s) = two_level(2000);
    let (g, w) = (0.02, 0.5);
    let modes = [1, 2, 3];
    let r = quadratic_propagator(&s.mean_field(), g, w, &modes, PropagatorOptions::default()).unwrap();
    let vac = GaussianState::vacuum(3);
    assert!(r.state.cov.iter().zip(&vac.cov).all(|(a, b)| (a - b).abs() < 1e-12));
    let chi = compute_chi(&s, g, w, 3).unwrap();
    for (k, q) in modes.iter().enumerate() {
        let want = C64::new(0.0, (*q as f64).sqrt()) * chi.chi(*q);
        assert!((r.beta[k] - want).norm() < 1e-8 * chi.chi(1).norm());
    }
    let coherent = GaussianState::coherent(&r.beta);
    // Gaussian fidelity of two coherent states: e^{-|delta|^2}
    let delta2: f64 = r.state.mean.iter().zip(&coherent.mean).map(|(a, b)| 0.5 * (a - b).powi(2)).sum();
    assert!(1.0 - (-delta2).exp() < 1e-8);

    let full = quadratic_propagator(&s, g, w, &modes, PropagatorOptions { zero_mixing: true }).unwrap();
    assert!(full.state.cov.iter().zip(&vac.cov).all(|(a, b)| (a - b).abs() < 1e-12));
    assert!(full.beta.iter().zip(&r.beta).all(|(a, b)| (a - b).norm() < 1e-15));
}

#[test]
fn propagator_matches_fock_oracle_at_second_order() {
    let (_, s) = two_level(8000);
    let w = 0.5;
    let mut errors = Vec::new();
    let mut mean_errors = Vec::new();
    for g in [0.04, 0.02, 0.01] {
        let r = quadratic_propagator(&s, g, w, &[1, 2], PropagatorOptions::default()).unwrap();
        let diag = gaussian_diagnostics(&r.state).unwrap();
        assert!(diag.is_physical());
        assert!(diag.min_symplectic_eigenvalue >= 0.5 - 1e-10);
        let (mean, cov) = fock_oracle(&s, g, w, [1, 2], 15);
        let err = cov.iter().zip(&r.state.cov).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let merr = mean.iter().zip(&r.state.mean).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        errors.push(err);
        mean_errors.push(merr);
    }
    for e in errors.windows(2) {
        assert!(e[0] / e[1] >= 8.0, "covariance errors {errors:?}");
    }
    // the mean is first order in g, its error third order
    for e in mean_errors.windows(2) {
        assert!(e[0] / e[1] >= 7.0, "mean errors {mean_errors:?}");
    }
}

#[test]
fn two_level_emission_is_squeezed_and_entangled() {
    let (_, s) = two_level(8000);
    let (g, w) = (0.04, 0.5);
    let r = quadratic_propagator(&s, g, w, &[1, 2], PropagatorOptions::default()).unwrap();
    let d = gaussian_diagnostics(&r.state).unwrap();
    assert!(d.is_physical());
    assert!(d.principal_variances.iter().any(|v| v[0] < 0.5), "{:?}", d.principal_variances);
    assert!(d.squeezing_db.iter().any(|x| *x > 0.0));
    assert!(d.log_negativity[0].1 > 0.0);
    assert!((d.purity - 1.0).abs() < 1e-9);

    // the oracle state shows the same signatures
    let (_, cov) = fock_oracle(&s, g, w, [1, 2], 15);
    let oracle = GaussianState { mean: vec![0.0; 4], cov };
    let od = gaussian_diagnostics(&oracle).unwrap();
    assert!(od.squeezing_db.iter().any(|x| *x > 0.0));
    assert!(od.log_negativity[0].1 > 0.0);
}

#[test]
fn order_control_rejects_large_steps() {
    let (_, s) = two_level(400);
    match quadratic_propagator(&s, 0.5, 0.5, &[1, 2], PropagatorOptions::default()) {
        Err(HhgError::StepTooLarge { estimate, limit, suggested_dt }) => {
            assert!(estimate > limit);
            assert!(suggested_dt < s.dt);
        }
        other => panic!("expected StepTooLarge, got {other:?}"),
    }
}

#[test]
fn diagnostics_of_reference_states() {
    let vac = gaussian_diagnostics(&GaussianState::vacuum(2)).unwrap();
    assert!(vac.squeezing_db.iter().all(|x| x.abs() < 1e-12));
    assert!(vac.log_negativity[0].1.abs() < 1e-12);
    assert!((vac.purity - 1.0).abs() < 1e-12);

    let r: f64 = 0.5;
    let sq = GaussianState::new(vec![0.0, 0.0], vec![(-2.0 * r).exp() / 2.0, 0.0, 0.0, (2.0 * r).exp() / 2.0]).unwrap();
    let d = gaussian_diagnostics(&sq).unwrap();
    let want = 10.0 * (2.0 * r).exp().log10();
    assert!((d.squeezing_db[0] - want).abs() < 1e-12);
    assert!((d.squeezing_db[0] - 4.34).abs() < 5e-3);

    // two-mode squeezed vacuum
    let r: f64 = 0.3;
    let (ch, sh) = ((2.0 * r).cosh() / 2.0, (2.0 * r).sinh() / 2.0);
    #[rustfmt::skip]
    let cov = vec![
        ch, 0.0, sh, 0.0,
        0.0, ch, 0.0, -sh,
        sh, 0.0, ch, 0.0,
        0.0, -sh, 0.0, ch,
    ];
    let tms = GaussianState::new(vec![0.0; 4], cov).unwrap();
    let d = gaussian_diagnostics(&tms).unwrap();
    assert!((d.log_negativity[0].1 - 0.6).abs() < 1e-10);
    assert!((d.purity - 1.0).abs() < 1e-10);

    // the same state from the two-photon generator
    let z = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(r, 0.0), c(r, 0.0), c(0.0, 0.0)]);
    let built = displaced_squeezed(&[c(0.0, 0.0); 2], &z).unwrap();
    let d2 = gaussian_diagnostics(&built).unwrap();
    assert!((d2.log_negativity[0].1 - 0.6).abs() < 1e-10);
    let nu = symplectic_eigenvalues(&built.cov_matrix()).unwrap();
    assert!(nu.iter().all(|v| (v - 0.5).abs() < 1e-10));
}

#[test]
fn covariance_csv_layout() {
    let st = GaussianState::vacuum(2);
    let mut buf = Vec::new();
    write_covariance_csv(&st, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "c0,c1,c2,c3");
    assert_eq!(lines.len(), 5);
    let mut buf = Vec::new();
    write_mean_csv(&st, &[1, 3], &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("q,quadrature,mean\n1,x,"));
    assert!(text.lines().nth(3).unwrap().starts_with("3,x,"));
}
