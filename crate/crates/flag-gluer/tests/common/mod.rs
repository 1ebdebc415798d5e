#![allow(dead_code)]

use std::path::PathBuf;

use flag_gluer::{ParamSet, Triangulation};

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(rel)
}

pub fn read(rel: &str) -> String {
    std::fs::read_to_string(fixture(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

pub fn triangulation(rel: &str) -> Triangulation {
    Triangulation::from_json(&read(rel)).unwrap()
}

pub fn params(tri: &Triangulation, rel: &str) -> ParamSet {
    ParamSet::from_json(&read(rel), tri).unwrap()
}

/// Closed-form parameters of a deformation family at `t`, from the fixture
/// generator's sign tables.
pub fn fig8_at(tri: &Triangulation, t: f64) -> ParamSet {
    family(tri, t, FIG8_SIGNS, &[(0, "(23)1", -2), (0, "(41)3", -2)])
}

pub fn sister_at(tri: &Triangulation, t: f64) -> ParamSet {
    family(tri, t, SISTER_SIGNS, &[(0, "(24)3", -2), (0, "(13)4", -2)])
}

const COLUMNS: [&str; 12] =
    ["(12)3", "(21)4", "(34)1", "(43)2", "(13)4", "(31)2", "(24)3", "(42)1", "(14)2", "(41)3", "(23)1", "(32)4"];
const FIG8_SIGNS: [&str; 2] = ["++++--++----", "----++--++++"];
const SISTER_SIGNS: [&str; 2] = ["++------++++", "------++++++"];

fn family(tri: &Triangulation, t: f64, signs: [&str; 2], special: &[(usize, &str, i32)]) -> ParamSet {
    let mut edge = serde_json::Map::new();
    for (tet, row) in signs.iter().enumerate() {
        for (c, s) in COLUMNS.iter().zip(row.chars()) {
            edge.insert(format!("{tet}:{c}"), (if s == '+' { t } else { 1.0 / t }).into());
        }
    }
    let mut gluing = serde_json::Map::new();
    for &(tet, name, power) in special {
        let sigma = name.parse().unwrap();
        let (t2, tau) = tri.partner(tet, sigma);
        gluing.insert(format!("{tet}:{name}|{t2}:{tau}"), t.powi(power).into());
    }
    for fc in tri.face_classes() {
        let ((a, s), (b, tau)) = (fc.canonical, fc.partner);
        let covered = special.iter().any(|&(tet, name, _)| {
            let sigma: flag_gluer::EdgeFace = name.parse().unwrap();
            tri.face_class_of(tet, sigma.l()) == fc.id
        });
        if !covered {
            gluing.insert(format!("{a}:{s}|{b}:{tau}"), 1.0.into());
        }
    }
    let text = serde_json::json!({"edge_ratios": edge, "gluing_params": gluing}).to_string();
    ParamSet::from_json(&text, tri).unwrap()
}
