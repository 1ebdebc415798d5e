//! Parameter layer: six edge ratios per tetrahedron, one gluing parameter per
//! face class, the quantities derived from them, and the scalar residuals.
//!
//! Gluing parameters are stored as `κ^T_σ`, the value that enters the Glue
//! matrix on the green edge arriving at `(T, σ)`. For a glued pair `(σ, τ)`
//! between `T` and `T'` the relations are
//! `κ^T_{σ₊} = κ^T_σ · e^T_{σ₊} · e^{T'}_τ` and `κ^{T'}_τ = 1 / κ^T_σ`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::edgeface::{EdgeFace, EDGES};
use crate::error::{Error, Result};
use crate::triangulation::Triangulation;

/// Edge ratios of one tetrahedron, one per unoriented edge in [`EDGES`] order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TetShape(pub [f64; 6]);

impl TetShape {
    pub fn new(e: [f64; 6]) -> Result<Self> {
        if let Some(bad) = e.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::Params(format!("edge ratio {bad} is not a positive finite number")));
        }
        Ok(TetShape(e))
    }

    pub fn all_ones() -> Self {
        TetShape([1.0; 6])
    }

    pub fn e(&self, sigma: EdgeFace) -> f64 {
        self.0[sigma.edge_index()]
    }

    /// Edge ratios per edge-face, indexed by [`EdgeFace::index`].
    pub fn full(&self) -> [f64; 12] {
        EdgeFace::ALL.map(|s| self.e(s))
    }

    /// Builds a shape from 12 edge-face values, checking `e_σ = e_σ̄`.
    pub fn from_full(values: &[f64; 12], rel_tol: f64) -> Result<Self> {
        let mut e = [0.0; 6];
        for s in EdgeFace::ALL {
            let (a, b) = (values[s.index()], values[s.conj().index()]);
            if (a - b).abs() > rel_tol * a.abs().max(b.abs()) {
                return Err(Error::Params(format!("edge ratios of {s} and {} differ: {a} vs {b}", s.conj())));
            }
            e[s.edge_index()] = a;
        }
        TetShape::new(e)
    }

    pub fn derive(&self) -> DerivedTet {
        derive(self)
    }

    /// `log` of the product of the six edge ratios.
    pub fn internal_residual(&self) -> f64 {
        self.0.iter().map(|v| v.ln()).sum()
    }
}

/// Quantities derived from the edge ratios of a tetrahedron, indexed by
/// [`EdgeFace::index`].
///
/// `y` is infinite where `mu` vanishes, which happens for some positive edge
/// ratios (for instance `e_{σ₋} = 2`, `e_{σ₊} = 1/2`). Nothing downstream
/// divides by `mu`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DerivedTet {
    pub e: [f64; 12],
    pub t: [f64; 12],
    pub mu: [f64; 12],
    pub x: [f64; 12],
    pub y: [f64; 12],
    pub nu: [f64; 12],
    pub j: [f64; 12],
}

impl DerivedTet {
    pub fn e(&self, s: EdgeFace) -> f64 {
        self.e[s.index()]
    }
    pub fn t(&self, s: EdgeFace) -> f64 {
        self.t[s.index()]
    }
    pub fn mu(&self, s: EdgeFace) -> f64 {
        self.mu[s.index()]
    }
    pub fn x(&self, s: EdgeFace) -> f64 {
        self.x[s.index()]
    }
    pub fn y(&self, s: EdgeFace) -> f64 {
        self.y[s.index()]
    }
    pub fn j(&self, s: EdgeFace) -> f64 {
        self.j[s.index()]
    }
}

pub fn derive(shape: &TetShape) -> DerivedTet {
    let e = shape.full();
    let mut d = DerivedTet { e, t: [0.0; 12], mu: [0.0; 12], x: [0.0; 12], y: [0.0; 12], nu: [0.0; 12], j: [0.0; 12] };
    for s in EdgeFace::ALL {
        let n = s.index();
        let t = shape.e(s.opp()) * shape.e(s.succ().opp()) * shape.e(s.pred().opp());
        let (em, ep) = (shape.e(s.pred()), shape.e(s.succ()));
        let mu = em * ep - em + 1.0;
        let x = mu * t * e[n] / (t + 1.0);
        d.t[n] = t;
        d.mu[n] = mu;
        d.nu[n] = mu;
        d.x[n] = x;
        d.y[n] = if mu == 0.0 { f64::INFINITY } else { (t + 1.0) / (t * mu) };
        d.j[n] = e[n] - x * x;
    }
    d
}

/// `log(t_σ · t_τ)` for a glued pair.
pub fn face_residual(a: &DerivedTet, sigma: EdgeFace, b: &DerivedTet, tau: EdgeFace) -> f64 {
    (a.t(sigma) * b.t(tau)).ln()
}

/// A point of the parameter space: edge ratios per tetrahedron and one gluing
/// parameter per face class, attached to the class's canonical edge-face.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamSet {
    pub shapes: Vec<TetShape>,
    pub gluing: Vec<f64>,
}

/// All 12 gluing parameters of every tetrahedron.
#[derive(Clone, Debug, PartialEq)]
pub struct GluingTable {
    pub kappa: Vec<[f64; 12]>,
}

impl GluingTable {
    pub fn get(&self, tet: usize, sigma: EdgeFace) -> f64 {
        self.kappa[tet][sigma.index()]
    }
}

/// Scalar residuals in log space.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalarResiduals {
    pub internal: Vec<f64>,
    pub face: Vec<f64>,
}

impl ScalarResiduals {
    pub fn max_abs(&self) -> f64 {
        self.internal.iter().chain(&self.face).fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl ParamSet {
    pub fn all_ones(tri: &Triangulation) -> Self {
        ParamSet { shapes: vec![TetShape::all_ones(); tri.num_tets()], gluing: vec![1.0; tri.face_classes().len()] }
    }

    pub fn validate(&self, tri: &Triangulation) -> Result<()> {
        if self.shapes.len() != tri.num_tets() {
            return Err(Error::Params(format!(
                "{} tetrahedra in the parameters, {} in the triangulation",
                self.shapes.len(),
                tri.num_tets()
            )));
        }
        if self.gluing.len() != tri.face_classes().len() {
            return Err(Error::Params(format!(
                "{} gluing parameters for {} face classes",
                self.gluing.len(),
                tri.face_classes().len()
            )));
        }
        for s in &self.shapes {
            TetShape::new(s.0)?;
        }
        if let Some(bad) = self.gluing.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::Params(format!("gluing parameter {bad} is not a positive finite number")));
        }
        Ok(())
    }

    pub fn derived(&self) -> Vec<DerivedTet> {
        self.shapes.iter().map(derive).collect()
    }

    /// Fills in all gluing parameters from the canonical ones so that every
    /// gluing consistency relation holds by construction.
    pub fn complete_gluings(&self, tri: &Triangulation) -> GluingTable {
        let mut kappa = vec![[0.0; 12]; tri.num_tets()];
        for fc in tri.face_classes() {
            let (t, s0) = fc.canonical;
            let mut cur = self.gluing[fc.id];
            let mut s = s0;
            for _ in 0..3 {
                let (t2, tau) = tri.partner(t, s);
                kappa[t][s.index()] = cur;
                kappa[t2][tau.index()] = 1.0 / cur;
                let next = s.succ();
                let (_, tau_next) = tri.partner(t, next);
                // tau_next is tau's predecessor; the relation uses e of tau.
                debug_assert_eq!(tau_next, tau.pred());
                cur *= self.shapes[t].e(next) * self.shapes[t2].e(tau);
                s = next;
            }
        }
        GluingTable { kappa }
    }

    pub fn scalar_residuals(&self, tri: &Triangulation) -> ScalarResiduals {
        let derived = self.derived();
        let internal = self.shapes.iter().map(TetShape::internal_residual).collect();
        let face = tri
            .face_classes()
            .iter()
            .map(|fc| {
                let (t, s) = fc.canonical;
                let (t2, tau) = fc.partner;
                face_residual(&derived[t], s, &derived[t2], tau)
            })
            .collect();
        ScalarResiduals { internal, face }
    }

    /// The nearest point, in log coordinates, on which every internal and
    /// face residual vanishes. Both families are linear in `log e`, so this is
    /// an orthogonal projection; gluing parameters are left unchanged.
    pub fn project_consistent(&self, tri: &Triangulation) -> ParamSet {
        let n = tri.num_tets();
        let rows = n + tri.face_classes().len();
        let mut a = nalgebra::DMatrix::<f64>::zeros(rows, 6 * n);
        for t in 0..n {
            for e in 0..6 {
                a[(t, 6 * t + e)] = 1.0;
            }
        }
        let t_row = |a: &mut nalgebra::DMatrix<f64>, r: usize, t: usize, s: EdgeFace| {
            for o in [s.opp(), s.succ().opp(), s.pred().opp()] {
                a[(r, 6 * t + o.edge_index())] += 1.0;
            }
        };
        for fc in tri.face_classes() {
            let ((t, s), (t2, tau)) = (fc.canonical, fc.partner);
            t_row(&mut a, n + fc.id, t, s);
            t_row(&mut a, n + fc.id, t2, tau);
        }
        let x = nalgebra::DVector::from_iterator(6 * n, self.shapes.iter().flat_map(|s| s.0.map(f64::ln)));
        let svd = a.clone().svd(true, true);
        let correction = svd.solve(&(&a * &x), 1e-12).expect("SVD has both factors");
        let y = x - correction;
        let shapes = (0..n).map(|t| TetShape(std::array::from_fn(|e| y[6 * t + e].exp()))).collect();
        ParamSet { shapes, gluing: self.gluing.clone() }
    }

    /// Reads a parameter file. Edge ratios may be given for all 12 edge-faces
    /// (checked for `e_σ = e_σ̄`) or for one edge-face per edge. Gluing
    /// parameters may name any glued pair of a face class; several entries on
    /// one class must agree.
    pub fn from_json(text: &str, tri: &Triangulation) -> Result<Self> {
        let file: ParamFile = serde_json::from_str(text).map_err(|e| Error::Parse(format!("parameter file: {e}")))?;
        let n = tri.num_tets();
        let mut values: Vec<[Option<f64>; 12]> = vec![[None; 12]; n];
        for (key, &v) in &file.edge_ratios {
            let (t, s) = parse_slot(key)?;
            if t >= n {
                return Err(Error::Params(format!("edge ratio key '{key}': no tetrahedron {t}")));
            }
            values[t][s.index()] = Some(v);
        }
        let mut shapes = Vec::with_capacity(n);
        for (t, row) in values.iter().enumerate() {
            let mut e = [0.0; 6];
            for (edge, &(a, b)) in EDGES.iter().enumerate() {
                let both: Vec<(EdgeFace, f64)> = EdgeFace::ALL
                    .into_iter()
                    .filter(|s| s.edge_index() == edge)
                    .filter_map(|s| row[s.index()].map(|v| (s, v)))
                    .collect();
                match both.as_slice() {
                    [] => return Err(Error::Params(format!("tetrahedron {t}: no edge ratio for edge {a}{b}"))),
                    [(_, v)] => e[edge] = *v,
                    [(s1, v1), (s2, v2)] => {
                        if (v1 - v2).abs() > 1e-9 * v1.abs().max(v2.abs()) {
                            return Err(Error::Params(format!(
                                "tetrahedron {t}: edge ratios of {s1} and {s2} differ ({v1} vs {v2})"
                            )));
                        }
                        e[edge] = *v1;
                    }
                    _ => unreachable!("two edge-faces per edge"),
                }
            }
            shapes.push(TetShape::new(e).map_err(|err| Error::Params(format!("tetrahedron {t}: {err}")))?);
        }

        let unit = ParamSet { shapes: shapes.clone(), gluing: vec![1.0; tri.face_classes().len()] };
        let unit_table = unit.complete_gluings(tri);
        let mut gluing: Vec<Option<f64>> = vec![None; tri.face_classes().len()];
        for (key, &v) in &file.gluing_params {
            let (left, right) = key
                .split_once('|')
                .ok_or_else(|| Error::Parse(format!("gluing key '{key}' must have the form 'T:(ij)k|T:(ij)k'")))?;
            let (ta, sa) = parse_slot(left)?;
            let (tb, sb) = parse_slot(right)?;
            if ta >= n || tb >= n {
                return Err(Error::Params(format!("gluing key '{key}': tetrahedron out of range")));
            }
            if tri.partner(ta, sa) != (tb, sb) {
                return Err(Error::Params(format!("gluing key '{key}': these edge-faces are not glued")));
            }
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Params(format!("gluing key '{key}': value {v} is not positive")));
            }
            let class = tri.face_class_of(ta, sa.l());
            let fc = tri.face_classes()[class];
            let on_canonical_side = (ta, sa.l()) == (fc.canonical.0, fc.canonical.1.l());
            let base = unit_table.get(ta, sa);
            let k0 = if on_canonical_side { v / base } else { base / v };
            match gluing[class] {
                None => gluing[class] = Some(k0),
                Some(prev) if (prev - k0).abs() <= 1e-9 * prev.abs().max(k0.abs()) => {}
                Some(prev) => {
                    return Err(Error::Params(format!(
                        "gluing key '{key}' implies {k0} on face class {class}, but other entries imply {prev}"
                    )))
                }
            }
        }
        let gluing = gluing
            .into_iter()
            .enumerate()
            .map(|(c, g)| g.ok_or_else(|| Error::Params(format!("no gluing parameter for face class {c}"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(ParamSet { shapes, gluing })
    }

    /// Writes the reduced form: six edge ratios per tetrahedron and the
    /// canonical gluing parameter of each face class.
    pub fn to_json(&self, tri: &Triangulation) -> String {
        serde_json::to_string_pretty(&self.to_file(tri)).expect("parameters serialize")
    }

    pub(crate) fn to_file(&self, tri: &Triangulation) -> ParamFile {
        let mut edge_ratios = BTreeMap::new();
        for (t, shape) in self.shapes.iter().enumerate() {
            for (edge, &(a, b)) in EDGES.iter().enumerate() {
                let s = EdgeFace::ALL.into_iter().find(|s| s.i() == a && s.j() == b).expect("edge has an edge-face");
                edge_ratios.insert(format!("{t}:{s}"), shape.0[edge]);
            }
        }
        let mut gluing_params = BTreeMap::new();
        for fc in tri.face_classes() {
            let ((t, s), (t2, tau)) = (fc.canonical, fc.partner);
            gluing_params.insert(format!("{t}:{s}|{t2}:{tau}"), self.gluing[fc.id]);
        }
        ParamFile { edge_ratios, gluing_params }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct ParamFile {
    pub edge_ratios: BTreeMap<String, f64>,
    pub gluing_params: BTreeMap<String, f64>,
}

/// Parses `"<tet>:(ij)k"`.
pub fn parse_slot(text: &str) -> Result<(usize, EdgeFace)> {
    let (t, s) = text
        .trim()
        .split_once(':')
        .ok_or_else(|| Error::Parse(format!("'{text}' is not of the form '<tet>:(ij)k'")))?;
    let t = t.trim().parse::<usize>().map_err(|_| Error::Parse(format!("'{t}' is not a tetrahedron index")))?;
    Ok((t, s.trim().parse()?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ef(s: &str) -> EdgeFace {
        s.parse().unwrap()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12 * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn all_ones_derivation() {
        let d = TetShape::all_ones().derive();
        for s in EdgeFace::ALL {
            assert!(close(d.t(s), 1.0));
            assert!(close(d.mu(s), 1.0));
            assert!(close(d.x(s), 0.5));
            assert!(close(d.y(s), 2.0));
            assert!(close(d.j(s), 0.75));
        }
    }

    #[test]
    fn hopf_shape_derivation() {
        // e12 = e34 = 1, e13 = e24 = 1/3, e14 = e23 = 3
        let d = TetShape([1.0, 1.0 / 3.0, 3.0, 3.0, 1.0 / 3.0, 1.0]).derive();
        let s = ef("(12)3");
        assert!(close(d.t(s), 1.0));
        assert!(close(d.mu(s), -1.0));
        assert!(close(d.x(s), -0.5));
        assert!(close(d.j(s), 0.75));
    }

    #[test]
    fn triple_ratio_from_opposite_edges() {
        // t_(12)3 = 1 / (e12 e31 e23) once the vertex-star product is 1.
        let t = 2.0;
        let shape = TetShape([t, 1.0 / t, t, 1.0 / t, 1.0 / t, t]);
        let d = shape.derive();
        let s = ef("(12)3");
        assert!(close(d.t(s), 1.0 / (shape.e(s) * shape.e(ef("(31)2")) * shape.e(ef("(23)1")))));
    }

    #[test]
    fn mu_vanishes_for_some_positive_ratios() {
        let s = ef("(12)3");
        let mut e = [1.0; 6];
        e[s.pred().edge_index()] = 2.0;
        e[s.succ().edge_index()] = 0.5;
        let d = TetShape(e).derive();
        assert_eq!(d.mu(s), 0.0);
        assert!(d.y(s).is_infinite());
        assert!(d.x(s) == 0.0 && d.j(s) > 0.0);
    }

    #[test]
    fn internal_residual_values() {
        assert_eq!(TetShape::all_ones().internal_residual(), 0.0);
        let mut e = [1.0; 6];
        e[0] = 2.0;
        assert!(close(TetShape(e).internal_residual(), 2f64.ln()));
    }

    #[test]
    fn face_residual_values() {
        let a = TetShape::all_ones().derive();
        assert_eq!(face_residual(&a, ef("(12)3"), &a, ef("(21)4")), 0.0);
        // t_(12)3 = 2 on the first side, 1 on the second
        let b = TetShape([0.5, 1.0, 1.0, 1.0, 1.0, 2.0]).derive();
        assert!(close(b.t(ef("(12)3")), 2.0));
        assert!(close(face_residual(&b, ef("(12)3"), &a, ef("(21)4")), 2f64.ln()));
    }

    #[test]
    fn shape_validation() {
        assert!(TetShape::new([1.0, 0.0, 1.0, 1.0, 1.0, 1.0]).is_err());
        assert!(TetShape::new([1.0, f64::NAN, 1.0, 1.0, 1.0, 1.0]).is_err());
        let mut full = TetShape([1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).full();
        assert_eq!(TetShape::from_full(&full, 1e-12).unwrap().0, [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        full[0] *= 1.1;
        assert!(TetShape::from_full(&full, 1e-12).is_err());
    }

    #[test]
    fn slot_parsing() {
        assert_eq!(parse_slot("3:(41)3").unwrap(), (3, ef("(41)3")));
        assert!(parse_slot("(41)3").is_err());
        assert!(parse_slot("x:(41)3").is_err());
    }
}
