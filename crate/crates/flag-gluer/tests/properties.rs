mod common;

use common::*;
use flag_gluer::flags::{random_projective_map, random_shape, standard_representative};
use flag_gluer::monodromy::{CellKind, Cochain, MonodromyComplex, PathSpec};
use flag_gluer::solver::ResidualSystem;
use flag_gluer::{EdgeFace, ParamSet, TetShape, Triangulation};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn log_ratio() -> impl Strategy<Value = f64> {
    -1.5f64..1.5
}

/// Positive edge ratios with product one, from five free logarithms.
fn shape() -> impl Strategy<Value = TetShape> {
    prop::array::uniform5(log_ratio()).prop_map(|l| {
        let last = -l.iter().sum::<f64>();
        TetShape([l[0].exp(), l[1].exp(), l[2].exp(), l[3].exp(), l[4].exp(), last.exp()])
    })
}

fn fixture_triangulation() -> impl Strategy<Value = Triangulation> {
    prop_oneof![Just("fig8/fig8.tri"), Just("sister/sister.tri"), Just("hopf/hopf.tri")].prop_map(triangulation)
}

/// A triangulation with parameters satisfying the internal and face
/// equations but, generically, not the edge equations.
fn consistent_params() -> impl Strategy<Value = (Triangulation, ParamSet)> {
    fixture_triangulation().prop_flat_map(|tri| {
        let n = tri.num_tets();
        let faces = tri.face_classes().len();
        (prop::collection::vec(shape(), n), prop::collection::vec(log_ratio(), faces)).prop_map(move |(shapes, g)| {
            let ps = ParamSet { shapes, gluing: g.into_iter().map(f64::exp).collect() };
            (tri.clone(), ps.project_consistent(&tri))
        })
    })
}

fn edge_face() -> impl Strategy<Value = EdgeFace> {
    (0usize..12).prop_map(|i| EdgeFace::ALL[i])
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn ratios_are_projective_invariants(seed in any::<u64>(), s in shape(), sigma in edge_face()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let std = standard_representative(&s, sigma).unwrap();
        let moved = std.transformed(&random_projective_map(&mut rng)).unwrap();
        let (a, b) = (std.ratios().unwrap(), moved.ratios().unwrap());
        for t in EdgeFace::ALL {
            let n = t.index();
            prop_assert!((a.e[n] / b.e[n]).ln().abs() < 1e-8);
            prop_assert!((a.t[n] / b.t[n]).ln().abs() < 1e-8);
            prop_assert!((a.e[n] / s.e(t)).ln().abs() < 1e-8);
        }
    }

    #[test]
    fn triple_ratios_are_products_of_opposite_edges(s in shape()) {
        let d = s.derive();
        for sigma in EdgeFace::ALL {
            let want = s.e(sigma.opp()) * s.e(sigma.succ().opp()) * s.e(sigma.pred().opp());
            prop_assert!((d.t(sigma) / want).ln().abs() < 1e-12);
            prop_assert!((d.t(sigma) * d.e(sigma) * d.e(sigma.succ()) * d.e(sigma.pred()) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn completed_gluings_are_reciprocal((tri, ps) in consistent_params()) {
        let g = ps.complete_gluings(&tri);
        for t in 0..tri.num_tets() {
            for s in EdgeFace::ALL {
                let (t2, tau) = tri.partner(t, s);
                prop_assert!((g.get(t, s) * g.get(t2, tau) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn small_cells_are_trivial((tri, ps) in consistent_params()) {
        let complex = MonodromyComplex::new(&tri);
        let report = Cochain::new(&tri, &ps).unwrap().verify(&complex, 1e-9);
        for c in report.cells.iter().filter(|c| c.kind != CellKind::EdgePolygon) {
            prop_assert!(c.pass, "{} at distance {}", c.label, c.distance);
        }
    }

    #[test]
    fn reversed_paths_invert((tri, ps) in consistent_params(), start in edge_face(), moves in prop::collection::vec(0u8..4, 0..12)) {
        let text: Vec<&str> = moves.iter().map(|m| ["rot+", "rot-", "flip", "glue"][*m as usize]).collect();
        let path: PathSpec = format!("0:{start} {}", text.join(" ")).parse().unwrap();
        let cochain = Cochain::new(&tri, &ps).unwrap();
        let (_, m) = cochain.evaluate(&path).unwrap();
        let (_, back) = cochain.evaluate(&path.reversed(&tri)).unwrap();
        prop_assert!(back.mul(&m).distance_to_identity() < 1e-8);
        prop_assert_eq!(path.to_string().parse::<PathSpec>().unwrap(), path);
    }

    #[test]
    fn parameter_files_round_trip((tri, ps) in consistent_params()) {
        let back = ParamSet::from_json(&ps.to_json(&tri), &tri).unwrap();
        for (a, b) in ps.shapes.iter().zip(&back.shapes) {
            for (x, y) in a.0.iter().zip(b.0) {
                prop_assert!((x / y - 1.0).abs() < 1e-15);
            }
        }
        for (a, b) in ps.gluing.iter().zip(&back.gluing) {
            prop_assert!((a / b - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn residuals_vanish_exactly_on_the_families(log_t in -1.5f64..1.5) {
        let t = log_t.exp();
        let tri = triangulation("fig8/fig8.tri");
        let r = ResidualSystem::assemble(&tri, &[]).unwrap().evaluate(&fig8_at(&tri, t)).unwrap();
        prop_assert!(r.iter().all(|v| v.abs() < 1e-11));
        let tri = triangulation("sister/sister.tri");
        let r = ResidualSystem::assemble(&tri, &[]).unwrap().evaluate(&sister_at(&tri, t)).unwrap();
        prop_assert!(r.iter().all(|v| v.abs() < 1e-11));
    }

    #[test]
    fn random_shapes_satisfy_the_vertex_equation(seed in any::<u64>()) {
        let s = random_shape(&mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert!(s.internal_residual().abs() < 1e-12);
        prop_assert!(s.0.iter().all(|e| *e > 0.0));
    }
}

#[test]
fn triangulation_files_round_trip() {
    for rel in ["fig8/fig8.tri", "sister/sister.tri", "hopf/hopf.tri"] {
        let tri = triangulation(rel);
        assert_eq!(Triangulation::from_json(&tri.to_json()).unwrap(), tri);
    }
}
