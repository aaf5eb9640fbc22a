use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use nkge_core::grid::d2x;
use nkge_core::problem::{eval_g, PRESET_TORUS};
use nkge_core::schemes::{self, cnfd_step, lffd_step, sifd1_step, sifd2_step, scheme_residual, ScalarCubic};
use nkge_core::{Grid1D, GridFunction, LinearBackend, ProblemSpec, SchemeKind, SolverParams, StepperState};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn torus(eps: f64) -> ProblemSpec {
    ProblemSpec::preset(PRESET_TORUS, 0.0, 2.0 * PI, eps, 0.0).unwrap()
}

fn random_state(rng: &mut StdRng, kind: SchemeKind, m: usize, tau: f64, eps2: f64, solver: SolverParams) -> StepperState {
    let g = Grid1D::new(0.0, 2.0 * PI, m).unwrap();
    let mut level = || GridFunction::new((0..m).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap();
    let (p, u) = (level(), level());
    StepperState::new(kind, g, tau, 1.0, eps2, p, u, 1, solver).unwrap()
}

/// Plain bisection for an increasing function on `[lo, hi]`.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    assert!(f(lo) <= 0.0 && f(hi) >= 0.0);
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn sifd2_fft_and_dense_backends_agree() {
    let mut rng = StdRng::seed_from_u64(11);
    for m in [3, 4, 7, 8, 16, 31, 32, 64] {
        for _ in 0..20 {
            let tau = rng.random_range(0.001..0.5);
            let eps2 = rng.random_range(0.0..1.0);
            let mut fft = random_state(&mut rng, SchemeKind::Sifd2, m, tau, eps2, SolverParams::default());
            let mut dense = fft.clone();
            dense.solver.linear_backend = LinearBackend::Dense;
            fft.solver.linear_backend = LinearBackend::Fft;
            let a = sifd2_step(&mut fft).unwrap();
            let b = sifd2_step(&mut dense).unwrap();
            assert!(a.max_abs_diff(&b) <= 1e-12 * a.max_abs().max(1.0), "M = {m}");
        }
    }
}

#[test]
fn sifd2_backends_agree_over_a_run() {
    let spec = torus(1.0);
    let g = Grid1D::new(0.0, 2.0 * PI, 64).unwrap();
    let dense = SolverParams {
        linear_backend: LinearBackend::Dense,
        ..SolverParams::default()
    };
    let a = schemes::run(&spec, SchemeKind::Sifd2, &g, 0.01, 200, SolverParams::default()).unwrap();
    let b = schemes::run(&spec, SchemeKind::Sifd2, &g, 0.01, 200, dense).unwrap();
    assert!(a.u_curr.max_abs_diff(&b.u_curr) <= 1e-12);
}

#[test]
fn scalar_cubic_matches_bisection_on_a_million_instances() {
    let mut rng = StdRng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..1_000_000 {
        let tau: f64 = rng.random_range(1e-3..1.0);
        let mass: f64 = 10f64.powf(rng.random_range(-4.0..0.0));
        let alpha = mass / (tau * tau) + 0.5;
        let kappa = 0.25 * rng.random_range(0.0..1.0f64);
        let w = rng.random_range(-5.0..5.0);
        let rhs = rng.random_range(-50.0..50.0) * alpha.sqrt();
        let cubic = ScalarCubic { alpha, kappa, w, rhs };
        let root = cubic.solve(rhs / alpha, 1e-12, 50).expect("scalar Newton must converge");
        let (lo, hi) = cubic.bracket();
        let oracle = bisect(|x| cubic.eval(x), lo, hi);
        let err = (root.x - oracle).abs() / oracle.abs().max(1.0);
        worst = worst.max(err);
    }
    assert!(worst <= 1e-12, "worst relative root error {worst:e}");
}

#[test]
fn sifd1_nodes_match_bisection_with_zero_previous_level() {
    let mut rng = StdRng::seed_from_u64(5);
    let m = 16;
    let g = Grid1D::new(0.0, 2.0 * PI, m).unwrap();
    for _ in 0..50 {
        let (tau, eps2) = (rng.random_range(0.01..0.5), rng.random_range(0.0..1.0));
        let u = GridFunction::new((0..m).map(|_| rng.random_range(-3.0..3.0)).collect()).unwrap();
        let mut state =
            StepperState::new(SchemeKind::Sifd1, g, tau, 1.0, eps2, GridFunction::zeros(m), u.clone(), 1, SolverParams::default())
                .unwrap();
        let next = sifd1_step(&mut state).unwrap();
        let lap = d2x(&g, &u).unwrap();
        let alpha = 1.0 / (tau * tau) + 0.5;
        for j in 0..m {
            let rhs = 2.0 * u[j] / (tau * tau) + lap[j];
            let f = |x: f64| alpha * x + 0.25 * eps2 * x * x * x - rhs;
            let bound = rhs.abs() / alpha + 1.0;
            let oracle = bisect(f, -bound, bound);
            assert!((next[j] - oracle).abs() <= 1e-12 * oracle.abs().max(1.0), "node {j}");
        }
    }
}

#[test]
fn cnfd_constant_state_matches_scalar_oracle() {
    let g = Grid1D::new(0.0, 2.0 * PI, 32).unwrap();
    for (p, q, tau, eps2, mass) in [
        (0.3, 0.5, 0.1, 1.0, 1.0),
        (-1.2, 0.7, 0.05, 0.25, 1.0),
        (2.0, 2.0, 0.2, 1.0, 0.0625),
        (0.0, -3.0, 0.01, 1.0, 1.0),
        (2.9, -2.7, 0.3, 0.95, 1.0),
    ] {
        let mut state = StepperState::new(
            SchemeKind::Cnfd,
            g,
            tau,
            mass,
            eps2,
            GridFunction::constant(32, p),
            GridFunction::constant(32, q),
            1,
            SolverParams::default(),
        )
        .unwrap();
        let next = cnfd_step(&mut state).unwrap();
        let f = |x: f64| mass * (x - 2.0 * q + p) / (tau * tau) + 0.5 * (x + p) + eps2 * eval_g(x, p);
        let oracle = bisect(f, -100.0, 100.0);
        for j in 0..32 {
            assert!((next[j] - oracle).abs() <= 1e-12 * oracle.abs().max(1.0), "({p}, {q}): {} vs {oracle}", next[j]);
            assert!((next[j] - next[0]).abs() <= 4.0 * f64::EPSILON * next[0].abs().max(1.0));
        }
    }
}

#[test]
fn lffd_matches_dense_matrix_update() {
    let m = 8;
    let g = Grid1D::new(0.0, 2.0 * PI, m).unwrap();
    let h = g.h();
    let mut d2 = DMatrix::<f64>::zeros(m, m);
    for j in 0..m {
        d2[(j, j)] = -2.0 / (h * h);
        d2[(j, (j + 1) % m)] += 1.0 / (h * h);
        d2[(j, (j + m - 1) % m)] += 1.0 / (h * h);
    }
    let tau = 0.1;
    let u = g.sample(f64::cos);
    let uv = DVector::from_column_slice(u.as_slice());
    let eye = DMatrix::<f64>::identity(m, m);
    let expect = (&eye * 2.0 - &eye + (&d2 - &eye) * (tau * tau)) * &uv;
    let mut state = StepperState::new(SchemeKind::Lffd, g, tau, 1.0, 0.0, u.clone(), u, 1, SolverParams::default()).unwrap();
    let got = lffd_step(&mut state).unwrap();
    for j in 0..m {
        assert!((got[j] - expect[j]).abs() <= 1e-14, "node {j}");
    }
}

#[test]
fn cnfd_and_sifd2_coincide_without_nonlinearity() {
    let mut rng = StdRng::seed_from_u64(9);
    for m in [8, 16, 32] {
        let mut cnfd = random_state(&mut rng, SchemeKind::Cnfd, m, 0.05, 0.0, SolverParams::default());
        let mut sifd2 = cnfd.clone();
        sifd2.scheme = SchemeKind::Sifd2;
        sifd2.solver.linear_backend = LinearBackend::Dense;
        for _ in 0..50 {
            cnfd.advance().unwrap();
            sifd2.advance().unwrap();
        }
        assert!(cnfd.u_curr.max_abs_diff(&sifd2.u_curr) <= 1e-12);
    }
}

#[test]
fn all_schemes_are_time_reversible() {
    let spec = torus(1.0);
    let g = Grid1D::new(0.0, 2.0 * PI, 32).unwrap();
    let solver = SolverParams::default();
    for kind in SchemeKind::ALL {
        let start = StepperState::from_problem(&spec, kind, g, 0.05, solver).unwrap();
        let mut state = start.clone();
        for _ in 0..20 {
            state.advance().unwrap();
        }
        state.reverse();
        for _ in 0..20 {
            state.advance().unwrap();
        }
        state.reverse();
        let err = state.u_prev.max_abs_diff(&start.u_prev).max(state.u_curr.max_abs_diff(&start.u_curr));
        assert!(err <= 100.0 * solver.tol, "{kind}: {err:e}");
    }
}

/// `u = cos(x) cos(t) + 0.3 sin(2x) sin(3t)` and the exact PDE operator applied to it.
fn manufactured(x: f64, t: f64) -> f64 {
    x.cos() * t.cos() + 0.3 * (2.0 * x).sin() * (3.0 * t).sin()
}

fn pde_operator(x: f64, t: f64, eps2: f64) -> f64 {
    let u = manufactured(x, t);
    let utt = -x.cos() * t.cos() - 2.7 * (2.0 * x).sin() * (3.0 * t).sin();
    let uxx = -x.cos() * t.cos() - 1.2 * (2.0 * x).sin() * (3.0 * t).sin();
    utt - uxx + u + eps2 * u * u * u
}

#[test]
fn local_truncation_error_is_second_order() {
    let eps2 = 1.0;
    let t = 0.7;
    for kind in SchemeKind::ALL {
        let mut errs = Vec::new();
        for m in [16, 32, 64, 128] {
            let g = Grid1D::new(0.0, 2.0 * PI, m).unwrap();
            let tau = g.h() / 2.0;
            let level = |s: f64| g.sample(|x| manufactured(x, s));
            let residual = scheme_residual(kind, &g, tau, 1.0, eps2, &level(t - tau), &level(t), &level(t + tau)).unwrap();
            let exact = g.sample(|x| pde_operator(x, t, eps2));
            errs.push(residual.max_abs_diff(&exact));
        }
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((ratio - 4.0).abs() <= 0.6, "{kind}: ratio {ratio} in {errs:?}");
        }
    }
}

#[test]
fn small_data_rescaling_is_exact_for_every_scheme() {
    let eps = 0.5;
    let spec = torus(eps);
    let small = spec.small_data_form();
    for m in [8, 16, 32] {
        let g = Grid1D::new(0.0, 2.0 * PI, m).unwrap();
        for kind in SchemeKind::ALL {
            let u = schemes::run(&spec, kind, &g, 0.05, 10, SolverParams::default()).unwrap();
            let w = schemes::run(&small, kind, &g, 0.05, 10, SolverParams::default()).unwrap();
            let scaled = u.u_curr.scaled(eps);
            let rel = scaled.max_abs_diff(&w.u_curr) / scaled.max_abs();
            assert!(rel <= 1e-13, "{kind}, M = {m}: {rel:e}");
        }
    }
}

#[test]
fn lffd_and_cnfd_agree_to_second_order_in_the_linear_case() {
    let spec = ProblemSpec::preset(PRESET_TORUS, 0.0, 2.0 * PI, 1.0, 0.0).unwrap();
    let g = Grid1D::new(0.0, 2.0 * PI, 32).unwrap();
    let linear = |kind, tau: f64, steps| {
        let base = StepperState::from_problem(&spec, kind, g, tau, SolverParams::default()).unwrap();
        let mut s = StepperState::new(kind, g, tau, 1.0, 0.0, base.u_prev.clone(), base.u_curr.clone(), 1, base.solver).unwrap();
        for _ in 1..steps {
            s.advance().unwrap();
        }
        s.u_curr
    };
    let mut diffs = Vec::new();
    for (tau, steps) in [(0.02, 100), (0.01, 200), (0.005, 400)] {
        let d = linear(SchemeKind::Lffd, tau, steps).max_abs_diff(&linear(SchemeKind::Cnfd, tau, steps));
        diffs.push(d);
    }
    assert!(diffs[0] > diffs[1] && diffs[1] > diffs[2], "{diffs:?}");
    for w in diffs.windows(2) {
        assert!((w[0] / w[1] - 4.0).abs() < 0.6, "{diffs:?}");
    }
}
