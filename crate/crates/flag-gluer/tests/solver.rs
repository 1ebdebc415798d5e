mod common;

use common::*;
use flag_gluer::solver::{self, parse_pin, ResidualSystem, SolveOptions, Status, Variable};
use flag_gluer::{ParamSet, Triangulation};

fn log_distance(a: &ParamSet, b: &ParamSet) -> f64 {
    let shapes = a.shapes.iter().zip(&b.shapes).flat_map(|(x, y)| x.0.iter().zip(y.0).map(|(p, q)| (p / q).ln().abs()));
    let gluing = a.gluing.iter().zip(&b.gluing).map(|(p, q)| (p / q).ln().abs());
    shapes.chain(gluing).fold(0.0, f64::max)
}

fn system(tri: &Triangulation, pins: &[&str]) -> ResidualSystem {
    let pins: Vec<_> = pins.iter().map(|p| parse_pin(p).unwrap()).collect();
    ResidualSystem::assemble(tri, &pins).unwrap()
}

const FIG8_GAUGE: [&str; 4] = ["face0:g=1", "face1:g=1", "face2:g=1", "face3:g=1"];
const SISTER_GAUGE: [&str; 2] = ["face2:g=1", "face3:g=1"];

#[test]
fn fixtures_match_closed_form_families() {
    let tri = triangulation("fig8/fig8.tri");
    for (file, t) in [("t0.5", 0.5), ("t1", 1.0), ("t2", 2.0), ("t3", 3.0)] {
        assert!(log_distance(&params(&tri, &format!("fig8/{file}.params")), &fig8_at(&tri, t)) < 1e-14);
    }
    let tri = triangulation("sister/sister.tri");
    for (file, t) in [("t0.5", 0.5), ("t1", 1.0), ("t2", 2.0)] {
        assert!(log_distance(&params(&tri, &format!("sister/{file}.params")), &sister_at(&tri, t)) < 1e-14);
    }
}

#[test]
fn families_solve_every_equation_off_the_tabulated_values() {
    for t in [0.3, 0.8, 1.7, 4.5] {
        let tri = triangulation("fig8/fig8.tri");
        let r = system(&tri, &[]).evaluate(&fig8_at(&tri, t)).unwrap();
        assert!(r.iter().all(|v| v.abs() < 1e-12), "fig8 at {t}: {r:?}");
        let tri = triangulation("sister/sister.tri");
        let r = system(&tri, &[]).evaluate(&sister_at(&tri, t)).unwrap();
        assert!(r.iter().all(|v| v.abs() < 1e-12), "sister at {t}: {r:?}");
    }
}

#[test]
fn pinned_solve_lands_on_the_figure_eight_family() {
    let tri = triangulation("fig8/fig8.tri");
    let mut pins = vec!["tet0:e12=2"];
    pins.extend(FIG8_GAUGE);
    let sys = system(&tri, &pins);
    let r = solver::solve(&sys, &ParamSet::all_ones(&tri), &SolveOptions::default()).unwrap();
    assert_eq!(r.status, Status::Converged);
    assert!(log_distance(&r.params, &fig8_at(&tri, 2.0)) < 1e-9);
    assert_eq!(r.jacobian_rank, sys.num_free());
}

#[test]
fn figure_eight_trace_follows_the_family() {
    let tri = triangulation("fig8/fig8.tri");
    let sys = system(&tri, &FIG8_GAUGE);
    let vary: Variable = "tet0:e12".parse().unwrap();
    for (from, to) in [(1.0, 3.0), (1.0, 0.5)] {
        let tr = solver::trace(&sys, &ParamSet::all_ones(&tri), vary, from, to, 12, &SolveOptions::default()).unwrap();
        assert!(tr.breakdown.is_none());
        assert_eq!(tr.steps.len(), 12);
        assert_eq!((tr.steps[0].value, tr.steps[11].value), (from, to));
        for step in &tr.steps {
            assert_eq!(step.result.status, Status::Converged);
            assert!(log_distance(&step.result.params, &fig8_at(&tri, step.value)) < 1e-9, "t = {}", step.value);
        }
    }
}

#[test]
fn sister_trace_follows_the_family() {
    let tri = triangulation("sister/sister.tri");
    let sys = system(&tri, &SISTER_GAUGE);
    let vary: Variable = "tet0:e12".parse().unwrap();
    for (from, to) in [(1.0, 2.0), (1.0, 0.5)] {
        let tr = solver::trace(&sys, &ParamSet::all_ones(&tri), vary, from, to, 8, &SolveOptions::default()).unwrap();
        assert!(tr.breakdown.is_none());
        for step in &tr.steps {
            assert!(log_distance(&step.result.params, &sister_at(&tri, step.value)) < 1e-9, "t = {}", step.value);
        }
    }
}

#[test]
fn hopf_fixture_is_a_solution() {
    let tri = triangulation("hopf/hopf.tri");
    let ps = params(&tri, "hopf/solution.params");
    let r = system(&tri, &[]).evaluate(&ps).unwrap();
    assert!(r.iter().all(|v| v.abs() < 1e-13), "{r:?}");
}

#[test]
fn restarts_are_reproducible() {
    let tri = triangulation("hopf/hopf.tri");
    let sys = system(&tri, &[]);
    let opts = SolveOptions { max_iter: 3, seed: Some(11), ..SolveOptions::default() };
    let a = solver::solve(&sys, &ParamSet::all_ones(&tri), &opts).unwrap();
    let b = solver::solve(&sys, &ParamSet::all_ones(&tri), &opts).unwrap();
    assert_eq!(a.params, b.params);
    assert_eq!(a.residual_norm, b.residual_norm);
}

#[test]
fn iteration_budget_is_reported_as_stalled() {
    let tri = triangulation("hopf/hopf.tri");
    let opts = SolveOptions { max_iter: 2, ..SolveOptions::default() };
    let r = solver::solve(&system(&tri, &[]), &ParamSet::all_ones(&tri), &opts).unwrap();
    assert_eq!(r.status, Status::Stalled);
    assert!(r.residual_norm > opts.tol);
}

#[test]
fn forward_and_central_jacobians_agree_at_solutions() {
    let tri = triangulation("fig8/fig8.tri");
    let sys = system(&tri, &FIG8_GAUGE);
    for t in [0.5, 2.0] {
        assert!(sys.jacobian_discrepancy(&fig8_at(&tri, t)).unwrap() < 1e-5);
    }
}
