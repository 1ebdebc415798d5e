mod common;

use std::collections::BTreeMap;

use common::*;
use flag_gluer::flags::{proportional, random_shape, standard_representative};
use flag_gluer::monodromy::{Cochain, MonodromyComplex, PathSpec};
use flag_gluer::solver::{self, parse_pin, ResidualSystem, SolveOptions, Status};
use flag_gluer::{EdgeFace, ParamSet, Triangulation};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Parameters for `tri.relabeled(new_index)` describing the same structure.
fn relabel_params(tri: &Triangulation, ps: &ParamSet, relabeled: &Triangulation, new_index: &[usize]) -> ParamSet {
    let mut shapes = ps.shapes.clone();
    for (t, s) in ps.shapes.iter().enumerate() {
        shapes[new_index[t]] = *s;
    }
    let kappa = ps.complete_gluings(tri);
    let old_index: BTreeMap<usize, usize> = new_index.iter().enumerate().map(|(old, &new)| (new, old)).collect();
    let gluing =
        relabeled.face_classes().iter().map(|fc| kappa.get(old_index[&fc.canonical.0], fc.canonical.1)).collect();
    ParamSet { shapes, gluing }
}

fn residual_norm(tri: &Triangulation, ps: &ParamSet) -> f64 {
    ResidualSystem::assemble(tri, &[]).unwrap().evaluate(ps).unwrap().iter().map(|r| r * r).sum::<f64>().sqrt()
}

/// Each edge class as the sorted set of (tetrahedron, unoriented edge) it
/// contains, with its cone order.
fn edge_signature(tri: &Triangulation, relabel: &[usize]) -> Vec<(Vec<(usize, usize)>, u32)> {
    let mut out: Vec<_> = tri
        .edge_cycles()
        .iter()
        .map(|c| {
            let mut members: Vec<_> = c.slots.iter().map(|s| (relabel[s.tet], s.outgoing.edge_index())).collect();
            members.sort();
            (members, c.order)
        })
        .collect();
    out.sort();
    out
}

fn permutation(n: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((0..n).collect::<Vec<_>>()).prop_shuffle()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn edge_cycles_survive_relabeling(perm in permutation(2), which in 0usize..2) {
        let rel = ["fig8/fig8.tri", "sister/sister.tri"][which];
        let tri = triangulation(rel).with_edge_orders(&BTreeMap::from([(0, 3)])).unwrap();
        let relabeled = tri.relabeled(&perm).unwrap();
        let identity: Vec<usize> = (0..tri.num_tets()).collect();
        prop_assert_eq!(edge_signature(&tri, &perm), edge_signature(&relabeled, &identity));
    }
}

#[test]
fn relabeling_rejects_non_permutations() {
    let tri = triangulation("fig8/fig8.tri");
    assert!(tri.relabeled(&[0, 0]).is_err());
    assert!(tri.relabeled(&[0]).is_err());
    assert!(tri.relabeled(&[1, 2]).is_err());
}

#[test]
fn solutions_map_bijectively_under_relabeling() {
    let cases = [("fig8/fig8.tri", "fig8/t2.params"), ("sister/sister.tri", "sister/t0.5.params")];
    for (tri_file, params_file) in cases {
        let tri = triangulation(tri_file);
        let ps = params(&tri, params_file);
        let perm = [1, 0];
        let relabeled = tri.relabeled(&perm).unwrap();
        let mapped = relabel_params(&tri, &ps, &relabeled, &perm);
        assert!(residual_norm(&relabeled, &mapped) < 1e-12, "{tri_file}");
        let back = relabel_params(&relabeled, &mapped, &tri.relabeled(&perm).unwrap().relabeled(&perm).unwrap(), &perm);
        assert_eq!(back.shapes, ps.shapes);
        // A non-solution stays a non-solution.
        let mut off = ps.clone();
        off.gluing[0] *= 1.3;
        let off_mapped = relabel_params(&tri, &off, &relabeled, &perm);
        assert!(residual_norm(&relabeled, &off_mapped) > 1e-3);
    }
}

#[test]
fn relabeled_solve_converges_to_the_mapped_solution() {
    let tri = triangulation("fig8/fig8.tri");
    let perm = [1, 0];
    let relabeled = tri.relabeled(&perm).unwrap();
    let target = relabel_params(&tri, &fig8_at(&tri, 2.0), &relabeled, &perm);
    let system = ResidualSystem::assemble(&relabeled, &[]).unwrap();
    // Start near the mapped solution; the solve should stay on it.
    let mut init = target.clone();
    init.shapes[0].0[0] *= 1.01;
    init.shapes[0].0[5] /= 1.01;
    let r = solver::solve(&system, &init, &SolveOptions::default()).unwrap();
    assert_eq!(r.status, Status::Converged);
    assert!(residual_norm(&relabeled, &r.params) < 1e-11);
}

fn trace4_over_det(m: &flag_gluer::ProjMatrix) -> f64 {
    let n = m.normal_form().unwrap();
    n.trace().powi(4) / n.determinant()
}

/// The meridian stays parabolic along the family; the other peripheral
/// loops are parabolic only at the complete structure.
#[test]
fn figure_eight_meridian_is_unipotent() {
    let tri = triangulation("fig8/fig8.tri");
    let complex = MonodromyComplex::new(&tri);
    for t in [0.5, 1.0, 2.0, 3.0] {
        let ps = fig8_at(&tri, t);
        let cochain = Cochain::new(&tri, &ps).unwrap();
        let loops = cochain.independent_peripheral_loops(0, 3).unwrap();
        let ratios: Vec<f64> =
            loops.iter().map(|l| trace4_over_det(&cochain.holonomy(&complex, l, 1e-9).unwrap())).collect();
        let unipotent = ratios.iter().filter(|r| (*r - 256.0).abs() < 1e-6).count();
        if t == 1.0 {
            assert_eq!(unipotent, loops.len(), "{ratios:?}");
        } else {
            assert!(unipotent >= 1 && unipotent < loops.len(), "t = {t}: {ratios:?}");
        }
    }
}

#[test]
fn holonomy_ignores_inserted_cell_boundaries() {
    let tri = triangulation("sister/sister.tri");
    let ps = params(&tri, "sister/t2.params");
    let complex = MonodromyComplex::new(&tri);
    let cochain = Cochain::new(&tri, &ps).unwrap();
    let mut insertions = 0;
    for l in cochain.independent_peripheral_loops(0, 3).unwrap() {
        let base = cochain.holonomy(&complex, &l, 1e-9).unwrap();
        for i in 0..=l.moves.len() {
            let here = PathSpec::new(l.start, l.moves[..i].to_vec()).end(&tri);
            for cell in complex.cells.iter().filter(|c| c.boundary.start == here) {
                let mut moves = l.moves[..i].to_vec();
                moves.extend(&cell.boundary.moves);
                moves.extend(&l.moves[i..]);
                let m = cochain.holonomy(&complex, &PathSpec::new(l.start, moves), 1e-9).unwrap();
                assert!(m.distance(&base) < 1e-9, "{} inserted at {i} of {l}", cell.label);
                insertions += 1;
            }
        }
    }
    assert!(insertions > 0);
}

#[test]
fn develop_depth_zero_and_one() {
    let tri = triangulation("fig8/fig8.tri");
    let ps = params(&tri, "fig8/t2.params");
    let complex = MonodromyComplex::new(&tri);
    let cochain = Cochain::new(&tri, &ps).unwrap();
    let sigma: EdgeFace = "(12)3".parse().unwrap();

    let zero = cochain.develop(&complex, (0, sigma), 0, 1e-9).unwrap();
    assert_eq!(zero.len(), 1);
    let std = standard_representative(&ps.shapes[0], sigma).unwrap();
    for (a, b) in zero[0].flags.flags.iter().zip(&std.flags) {
        assert!(proportional(&a.point, &b.point, 1e-12) && proportional(&a.plane, &b.plane, 1e-12));
    }

    let one = cochain.develop(&complex, (0, sigma), 1, 1e-9).unwrap();
    assert_eq!(one.len(), 5);
    assert!(one[1..].iter().all(|c| c.parent == Some(0) && c.depth == 1));
    assert!(flag_gluer::monodromy::develop_mismatch(&one) < 1e-9);
    for depth in [2, 3] {
        let copies = cochain.develop(&complex, (0, sigma), depth, 1e-9).unwrap();
        assert!(flag_gluer::monodromy::develop_mismatch(&copies) < 1e-9, "depth {depth}");
    }
}

#[test]
fn edge_matrix_cross_checks_hold_at_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for rel in ["fig8/fig8.tri", "sister/sister.tri", "hopf/hopf.tri"] {
        let tri = triangulation(rel);
        for _ in 0..10 {
            let shapes = (0..tri.num_tets()).map(|_| random_shape(&mut rng)).collect();
            let gluing = tri.face_classes().iter().map(|_| rng.gen_range(-1.0f64..1.0).exp()).collect();
            let ps = ParamSet { shapes, gluing }.project_consistent(&tri);
            for m in Cochain::new(&tri, &ps).unwrap().edge_matrices() {
                assert!((m.g11 / m.product_e - 1.0).abs() < 1e-12, "{rel} edge {}", m.edge);
                assert!((m.det / m.det_expected - 1.0).abs() < 1e-10, "{rel} edge {}", m.edge);
                assert!(m.off_pattern < 1e-9);
            }
        }
    }
}

#[test]
fn converged_solutions_are_cocycles() {
    let cases: [(&str, &[&str]); 3] = [
        ("hopf/hopf.tri", &[]),
        ("fig8/fig8.tri", &["tet0:e12=0.7", "face0:g=1", "face1:g=1", "face2:g=1", "face3:g=1"]),
        ("sister/sister.tri", &["tet0:e12=1.6", "face2:g=1", "face3:g=1"]),
    ];
    for (rel, pins) in cases {
        let tri = triangulation(rel);
        let pins: Vec<_> = pins.iter().map(|p| parse_pin(p).unwrap()).collect();
        let system = ResidualSystem::assemble(&tri, &pins).unwrap();
        let r = solver::solve(&system, &ParamSet::all_ones(&tri), &SolveOptions::default()).unwrap();
        assert_eq!(r.status, Status::Converged, "{rel}");
        assert!(r.residual_norm < SolveOptions::default().tol);
        assert!(r.params.shapes.iter().flat_map(|s| s.0).chain(r.params.gluing.iter().copied()).all(|v| v > 0.0));
        let complex = MonodromyComplex::new(&tri);
        let cochain = Cochain::new(&tri, &r.params).unwrap();
        assert!(cochain.verify(&complex, 1e-9).pass, "{rel}");
        for m in cochain.edge_matrices() {
            assert!((m.g11 / m.product_e - 1.0).abs() < 1e-10);
            assert!((m.det / m.det_expected - 1.0).abs() < 1e-10);
        }
    }
}

#[test]
fn forward_and_central_jacobians_agree_at_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for rel in ["fig8/fig8.tri", "hopf/hopf.tri"] {
        let tri = triangulation(rel);
        let system = ResidualSystem::assemble(&tri, &[]).unwrap();
        for _ in 0..5 {
            let shapes = (0..tri.num_tets()).map(|_| random_shape(&mut rng)).collect();
            let gluing = tri.face_classes().iter().map(|_| rng.gen_range(-1.0f64..1.0).exp()).collect();
            let d = system.jacobian_discrepancy(&ParamSet { shapes, gluing }).unwrap();
            assert!(d < 1e-4, "{rel}: {d}");
        }
    }
}

#[test]
fn solver_is_deterministic() {
    let tri = triangulation("sister/sister.tri");
    let system = ResidualSystem::assemble(&tri, &[parse_pin("tet0:e12=1.3").unwrap()]).unwrap();
    let opts = SolveOptions { seed: Some(4), ..SolveOptions::default() };
    let a = solver::solve(&system, &ParamSet::all_ones(&tri), &opts).unwrap();
    let b = solver::solve(&system, &ParamSet::all_ones(&tri), &opts).unwrap();
    assert_eq!((a.params, a.iterations, a.residual_norm), (b.params, b.iterations, b.residual_norm));
}
