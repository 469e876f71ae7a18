mod common;

use common::lp;
use common::toy::{toy_pair, Dense};
use gsep::frames::{build_shearlet_frame, build_wavelet_frame};
use gsep::grid::{Grid, Image, Part, StripMask};
use gsep::solver::{
    residual_report, solve, solve_per_scale, trace_csv, Dictionary, LambdaSchedule, Mode,
    Regularizer, SeparationProblem, SolverOptions, TRACE_HEADER,
};
use gsep::Complex64;
use rand::Rng;

fn opts(max_iters: usize, tol: f64) -> SolverOptions {
    SolverOptions { max_iters, tol, frame_bound: Some(1.0), ..Default::default() }
}

#[test]
fn lp_l1_fit_by_hand() {
    // One pixel, A1 = [1; 1] and A2 = [1]: min 2|x1| + |x2| with x1 + x2 = 3.
    let d1 = (2, vec![1.0, 1.0]);
    let d2 = (1, vec![1.0]);
    let v = lp::l1_analysis_value(&[d1, d2], 1, &[3.0], &[true]);
    assert!((v - 3.0).abs() < 1e-12);
}

#[test]
fn lp_single_orthonormal_frame_gives_l1_norm() {
    // One frame, all pixels known: the only feasible x is y itself.
    let id = (2, vec![1.0, 0.0, 0.0, 1.0]);
    let v = lp::l1_analysis_value(&[id], 2, &[1.5, -2.0], &[true, true]);
    assert!((v - 3.5).abs() < 1e-12);
    // A missing pixel is free and costs nothing.
    let id = (2, vec![1.0, 0.0, 0.0, 1.0]);
    let v = lp::l1_analysis_value(&[id], 2, &[1.5, -2.0], &[true, false]);
    assert!((v - 1.5).abs() < 1e-12);
}

#[test]
fn matches_lp_oracle_on_toy_instances() {
    for seed in 0..3 {
        let (obj, oracle) = common::toy::lp_instance(seed);
        let rel = (obj - oracle).abs() / oracle;
        assert!(rel < 1e-4, "seed {seed}: solver {obj} vs LP {oracle}");
        assert!(obj >= oracle * (1.0 - 1e-9), "solver below the LP optimum");
    }
}

#[test]
fn recovers_single_wavelet_atom() {
    let grid = Grid::new(32).unwrap();
    let frame = build_wavelet_frame(grid, grid.j_max()).unwrap();
    let s = frame.subbands().iter().position(|s| s.kind().scale() == Some(1)).unwrap();
    let atom = frame.atom(frame.flat(s, 3, 5));
    let p = SeparationProblem::new(atom.clone(), StripMask::empty(grid), vec![&frame], Mode::Constrained, opts(500, 1e-10))
        .unwrap();
    let r = solve(&p).unwrap();
    assert!(r.components[0].rel_err(&atom) < 1e-6);
}

#[test]
fn zero_observation_returns_zeros_without_iterating() {
    let grid = Grid::new(16).unwrap();
    let w = build_wavelet_frame(grid, grid.j_max()).unwrap();
    let s = build_shearlet_frame(grid, grid.j_max()).unwrap();
    let p = SeparationProblem::new(Image::zeros(grid), StripMask::new(grid, 2.0).unwrap(), vec![&w, &s], Mode::Constrained, opts(50, 1e-8))
        .unwrap();
    let r = solve(&p).unwrap();
    assert_eq!(r.iterations, 0);
    assert!(r.components.iter().all(|c| c.norm() == 0.0));
}

fn two_frame_problem(grid: Grid) -> (Image, StripMask) {
    let n = grid.n();
    let img = Image::from_fn(grid, |r, c| {
        let spike = if (r, c) == (3, 5) || (r, c) == (n - 4, n / 2) { 4.0 } else { 0.0 };
        let x = r as f64 - n as f64 / 2.0;
        Complex64::new(spike + (-(x * x) / 4.0).exp(), 0.0)
    });
    let mask = StripMask::new(grid, 1.0).unwrap();
    (mask.apply(&img, Part::Known).unwrap(), mask)
}

#[test]
fn constrained_solution_is_feasible_and_deterministic() {
    let grid = Grid::new(32).unwrap();
    let w = build_wavelet_frame(grid, grid.j_max()).unwrap();
    let s = build_shearlet_frame(grid, grid.j_max()).unwrap();
    let (obs, mask) = two_frame_problem(grid);
    let p = SeparationProblem::new(obs.clone(), mask.clone(), vec![&w, &s], Mode::Constrained, opts(400, 1e-7)).unwrap();
    let a = solve(&p).unwrap();
    let b = solve(&p).unwrap();
    assert_eq!(a, b);
    assert_eq!(trace_csv(&a), trace_csv(&b));
    let sum = a.sum().unwrap();
    let resid = mask.apply(&sum, Part::Known).unwrap().sub(&obs).norm();
    assert!(resid <= 1e-7 * obs.norm(), "residual {resid}");
}

#[test]
fn objective_settles_after_burn_in() {
    let grid = Grid::new(32).unwrap();
    let w = build_wavelet_frame(grid, grid.j_max()).unwrap();
    let s = build_shearlet_frame(grid, grid.j_max()).unwrap();
    let (obs, mask) = two_frame_problem(grid);
    let o = SolverOptions { max_iters: 600, tol: 0.0, frame_bound: Some(1.0), ..Default::default() };
    let r = solve(&SeparationProblem::new(obs, mask, vec![&w, &s], Mode::Constrained, o.clone()).unwrap()).unwrap();
    let windows: Vec<f64> = r.objective[o.burn_in..]
        .chunks(o.burn_in)
        .filter(|c| c.len() == o.burn_in)
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect();
    for pair in windows.windows(2) {
        assert!(pair[1] <= pair[0] * (1.0 + 1e-9), "window averages rose: {windows:?}");
    }
}

#[test]
fn large_lambda_approaches_constrained_objective() {
    let grid = Grid::new(32).unwrap();
    let w = build_wavelet_frame(grid, grid.j_max()).unwrap();
    let s = build_shearlet_frame(grid, grid.j_max()).unwrap();
    let (obs, mask) = two_frame_problem(grid);
    let o = opts(3000, 1e-9);
    let c = solve(&SeparationProblem::new(obs.clone(), mask.clone(), vec![&w, &s], Mode::Constrained, o.clone()).unwrap())
        .unwrap();
    let mode = Mode::Unconstrained { lambda: 1e4, regularizer: Regularizer::L1 };
    let u = solve(&SeparationProblem::new(obs, mask, vec![&w, &s], mode, o).unwrap()).unwrap();
    let gap = (u.final_objective() - c.final_objective()).abs() / c.final_objective();
    assert!(gap < 0.01, "gap {gap}");
}

#[test]
fn l2sq_regulariser_runs_and_shrinks_residual_with_lambda() {
    let grid = Grid::new(16).unwrap();
    let w = build_wavelet_frame(grid, grid.j_max()).unwrap();
    let s = build_shearlet_frame(grid, grid.j_max()).unwrap();
    let (obs, mask) = two_frame_problem(grid);
    let resid = |lambda: f64| {
        let mode = Mode::Unconstrained { lambda, regularizer: Regularizer::L2Sq };
        let r = solve(&SeparationProblem::new(obs.clone(), mask.clone(), vec![&w, &s], mode, opts(1500, 1e-10)).unwrap())
            .unwrap();
        mask.apply(&r.sum().unwrap(), Part::Known).unwrap().sub(&obs).norm()
    };
    assert!(resid(100.0) < resid(0.1));
}

#[test]
fn per_scale_solves_are_order_independent() {
    let grid = Grid::new(16).unwrap();
    let w = build_wavelet_frame(grid, grid.j_max()).unwrap();
    let s = build_shearlet_frame(grid, grid.j_max()).unwrap();
    let (obs, mask) = two_frame_problem(grid);
    let mode = Mode::Unconstrained { lambda: 1.0, regularizer: Regularizer::L1 };
    let mk = |j: usize, scale: f64| {
        (j, SeparationProblem::new(obs.scaled(scale), mask.clone(), vec![&w, &s], mode, opts(200, 1e-8)).unwrap())
    };
    let fwd = solve_per_scale(&[mk(1, 1.0), mk(2, 2.0)], &LambdaSchedule::default());
    let rev = solve_per_scale(&[mk(2, 2.0), mk(1, 1.0)], &LambdaSchedule::default());
    let a = fwd.iter().find(|r| r.0 == 2).unwrap().1.as_ref().unwrap();
    let b = rev.iter().find(|r| r.0 == 2).unwrap().1.as_ref().unwrap();
    assert_eq!(a, b);
    assert_eq!(LambdaSchedule::default().at(3), 64.0);
}

#[test]
fn invalid_problems_are_rejected() {
    let grid = Grid::new(16).unwrap();
    let other = Grid::new(32).unwrap();
    let w = build_wavelet_frame(other, other.j_max()).unwrap();
    let bad = SeparationProblem::new(Image::zeros(grid), StripMask::empty(grid), vec![&w], Mode::Constrained, opts(1, 0.0));
    assert!(bad.is_err());
    let w16 = build_wavelet_frame(grid, grid.j_max()).unwrap();
    let mode = Mode::Unconstrained { lambda: 0.0, regularizer: Regularizer::L1 };
    assert!(SeparationProblem::new(Image::zeros(grid), StripMask::empty(grid), vec![&w16], mode, opts(1, 0.0)).is_err());
    assert!(SeparationProblem::new(Image::zeros(grid), StripMask::empty(grid), vec![], Mode::Constrained, opts(1, 0.0)).is_err());
}

#[test]
fn residual_report_on_truth_and_swap() {
    let grid = Grid::new(32).unwrap();
    let a = common::random_real_image(grid, 1);
    let mut b = common::random_real_image(grid, 2);
    let s = a.norm() / b.norm();
    b.scale(s);
    let same = residual_report(&[a.clone(), b.clone()], &[a.clone(), b.clone()]).unwrap();
    assert_eq!(same.sum, 0.0);
    assert!(!same.flagged);
    let swapped = residual_report(&[b.clone(), a.clone()], &[a, b]).unwrap();
    for e in swapped.errors.iter().flatten() {
        assert!((e - 2f64.sqrt()).abs() < 0.1, "swap error {e}");
    }
    assert!(swapped.flagged);
    let zero = residual_report(&[Image::zeros(grid)], &[Image::zeros(grid)]).unwrap();
    assert_eq!(zero.errors, vec![None]);
}

#[test]
fn trace_has_fixed_header() {
    let grid = Grid::new(16).unwrap();
    let w = build_wavelet_frame(grid, grid.j_max()).unwrap();
    let (obs, mask) = two_frame_problem(grid);
    let r = solve(&SeparationProblem::new(obs, mask, vec![&w], Mode::Constrained, opts(5, 0.0)).unwrap()).unwrap();
    let csv = trace_csv(&r);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(TRACE_HEADER));
    assert_eq!(lines.count(), 5);
}

#[test]
fn dense_toy_dictionary_is_adjoint() {
    let mut rng = common::rng(9);
    let (a, _) = toy_pair(16, &mut rng);
    let x: Vec<Complex64> = (0..16).map(|_| Complex64::new(rng.random(), rng.random())).collect();
    let c: Vec<Complex64> = (0..32).map(|_| Complex64::new(rng.random(), rng.random())).collect();
    let mut ax = vec![Complex64::default(); 32];
    let mut sc = vec![Complex64::default(); 16];
    Dictionary::analyze_into(&a, &x, &mut ax);
    Dictionary::synthesize_into(&a, &c, &mut sc);
    let lhs: Complex64 = ax.iter().zip(&c).map(|(p, q)| p * q.conj()).sum();
    let rhs: Complex64 = x.iter().zip(&sc).map(|(p, q)| p * q.conj()).sum();
    assert!((lhs - rhs).norm() < 1e-12);
    let _: &Dense = &a;
}
