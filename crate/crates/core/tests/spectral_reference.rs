use std::f64::consts::PI;

use nkge_core::diagnostics::{continuous_energy, error_norm};
use nkge_core::grid::norm_l2;
use nkge_core::problem::PRESET_TORUS;
use nkge_core::spectral::{reference_fine, reference_solve, SpectralState};
use nkge_core::{schemes, Grid1D, GridFunction, ProblemSpec, SchemeKind, SolverParams};

fn torus(eps: f64) -> ProblemSpec {
    ProblemSpec::preset(PRESET_TORUS, 0.0, 2.0 * PI, eps, 0.0).unwrap()
}

#[test]
fn every_linear_mode_is_propagated_exactly() {
    let m = 32;
    let g = Grid1D::new(0.0, 2.0 * PI, m).unwrap();
    let tau = 0.037;
    let steps = 300;
    for l in [0usize, 1, 5, 15] {
        let w = (1.0 + (l * l) as f64).sqrt();
        let u0 = g.sample(|x| (l as f64 * x).cos());
        let v0 = g.sample(|x| (l as f64 * x).sin());
        let mut s = SpectralState::new(g, &u0, &v0, 0.0).unwrap();
        for _ in 0..steps {
            s.advance(tau, 0.0).unwrap();
        }
        let t = steps as f64 * tau;
        let exact = g.sample(|x| (w * t).cos() * (l as f64 * x).cos() + (w * t).sin() / w * (l as f64 * x).sin());
        assert!(s.u().max_abs_diff(&exact) <= 1e-12, "mode {l}");
    }
}

#[test]
fn conjugate_symmetry_is_kept() {
    let spec = torus(1.0);
    let g = Grid1D::new(0.0, 2.0 * PI, 256).unwrap();
    let mut s = SpectralState::from_problem(&spec, g).unwrap();
    for _ in 0..1000 {
        s.advance(1e-3, 1.0).unwrap();
        assert!(s.max_imag_residue <= 1e-12, "{:e}", s.max_imag_residue);
    }
    assert!(s.conjugate_asymmetry() <= 1e-12 * norm_l2(&g, &s.u()).unwrap());
}

#[test]
fn continuous_energy_drift_is_small_at_reference_resolution() {
    let spec = torus(1.0);
    let g = Grid1D::new(0.0, 2.0 * PI, 4096).unwrap();
    let mut s = SpectralState::from_problem(&spec, g).unwrap();
    let e0 = continuous_energy(&g, &s.u(), &s.u_t(), 1.0).unwrap();
    let mut worst: f64 = 0.0;
    for n in 1..=10_000 {
        s.advance(1e-4, 1.0).unwrap();
        if n % 500 == 0 {
            let e = continuous_energy(&g, &s.u(), &s.u_t(), 1.0).unwrap();
            worst = worst.max((e - e0).abs() / e0);
        }
    }
    assert!(worst <= 1e-6, "relative drift {worst:e}");
}

#[test]
fn agrees_with_leap_frog_on_a_fine_grid() {
    let spec = torus(1.0);
    let m = 2048;
    let g = Grid1D::new(0.0, 2.0 * PI, m).unwrap();
    let lffd = schemes::run(&spec, SchemeKind::Lffd, &g, 1e-4, 10_000, SolverParams::default()).unwrap();
    let reference = reference_fine(&spec, 1.0, m, 1e-4).unwrap();
    let diff = lffd.u_curr.sub(&reference).unwrap();
    let err = norm_l2(&g, &diff).unwrap();
    assert!(err <= 1e-5, "l2 difference {err:e}");
}

#[test]
fn reference_step_is_shrunk_to_hit_the_final_time() {
    let spec = torus(0.5);
    let coarse = Grid1D::new(0.0, 2.0 * PI, 16).unwrap();
    let a = reference_solve(&spec, 0.3, 64, 0.07, &coarse).unwrap();
    let b = reference_solve(&spec, 0.3, 64, 0.06, &coarse).unwrap();
    // 0.3 / 0.07 rounds up to 5 steps of 0.06, the same as asking for 0.06 directly.
    assert_eq!(a, b);
    assert!(matches!(
        reference_solve(&spec, 0.3, 48, 0.01, &Grid1D::new(0.0, 2.0 * PI, 32).unwrap()),
        Err(nkge_core::Error::Structural(_))
    ));
}

#[test]
fn nested_restriction_is_subsampling() {
    let spec = torus(1.0);
    let fine = reference_fine(&spec, 0.5, 128, 1e-3).unwrap();
    let coarse = Grid1D::new(0.0, 2.0 * PI, 32).unwrap();
    let r = reference_solve(&spec, 0.5, 128, 1e-3, &coarse).unwrap();
    let expect = GridFunction::new(fine.as_slice().iter().step_by(4).copied().collect()).unwrap();
    assert_eq!(r, expect);
    assert_eq!(error_norm(&coarse, &r, &expect).unwrap(), 0.0);
}
