//! The monodromy complex and its PGL(4) cochain.
//!
//! Vertices are pairs `(tet, σ)`. The value of an oriented edge `a → b`
//! converts coordinates in the σ-standard frame of `b` into the frame of `a`,
//! so a path product `C(v₀→v₁)·C(v₁→v₂)···` places the standard
//! representative of the last vertex in the frame of the first.
//!
//! - red `(T,σ₊) → (T,σ)`: `Rot_σ`
//! - blue `(T,σ̄) → (T,σ)`: `Flip_σ`
//! - green `(T',τ) → (T,σ)`: `Glue(κ^T_σ)`

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::edgeface::EdgeFace;
use crate::error::{Error, Result};
use crate::flags::{standard_representative, Mat4, ProjMatrix, TetOfFlags, Vec4};
use crate::params::{DerivedTet, GluingTable, ParamSet};
use crate::triangulation::Triangulation;

pub type Vertex = (usize, EdgeFace);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Move {
    RotPlus,
    RotMinus,
    Flip,
    Glue,
}

impl Move {
    pub fn inverse(self) -> Move {
        match self {
            Move::RotPlus => Move::RotMinus,
            Move::RotMinus => Move::RotPlus,
            other => other,
        }
    }
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Move::RotPlus => "rot+",
            Move::RotMinus => "rot-",
            Move::Flip => "flip",
            Move::Glue => "glue",
        })
    }
}

impl FromStr for Move {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rot+" => Ok(Move::RotPlus),
            "rot-" => Ok(Move::RotMinus),
            "flip" => Ok(Move::Flip),
            "glue" => Ok(Move::Glue),
            _ => Err(Error::Parse(format!("unknown move '{s}' (expected rot+, rot-, flip or glue)"))),
        }
    }
}

/// Where `mv` leads from `v`.
pub fn step(tri: &Triangulation, v: Vertex, mv: Move) -> Vertex {
    let (t, s) = v;
    match mv {
        Move::RotPlus => (t, s.succ()),
        Move::RotMinus => (t, s.pred()),
        Move::Flip => (t, s.conj()),
        Move::Glue => tri.partner(t, s),
    }
}

/// A start vertex and a sequence of moves, written `"<tet>:(ij)k move ..."`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathSpec {
    pub start: Vertex,
    pub moves: Vec<Move>,
}

impl PathSpec {
    pub fn new(start: Vertex, moves: Vec<Move>) -> Self {
        PathSpec { start, moves }
    }

    pub fn end(&self, tri: &Triangulation) -> Vertex {
        self.moves.iter().fold(self.start, |v, &m| step(tri, v, m))
    }

    /// The same path traversed backwards.
    pub fn reversed(&self, tri: &Triangulation) -> PathSpec {
        PathSpec { start: self.end(tri), moves: self.moves.iter().rev().map(|m| m.inverse()).collect() }
    }

    /// Concatenation; `other` must start where `self` ends.
    pub fn then(&self, other: &PathSpec) -> PathSpec {
        let mut moves = self.moves.clone();
        moves.extend(&other.moves);
        PathSpec { start: self.start, moves }
    }

    fn check(&self, tri: &Triangulation) -> Result<()> {
        if self.start.0 >= tri.num_tets() {
            return Err(Error::Path(format!("path starts in tetrahedron {} of {}", self.start.0, tri.num_tets())));
        }
        Ok(())
    }
}

impl fmt::Display for PathSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.start.0, self.start.1)?;
        for m in &self.moves {
            write!(f, " {m}")?;
        }
        Ok(())
    }
}

impl FromStr for PathSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let mut tokens = s.split_whitespace();
        let head = tokens.next().ok_or_else(|| Error::Parse("empty path".into()))?;
        let start = crate::params::parse_slot(head)?;
        let moves = tokens.map(str::parse).collect::<Result<Vec<_>>>()?;
        Ok(PathSpec { start, moves })
    }
}

/// `Rot_σ`: sends the σ-standard representative to the σ₊-standard one.
pub fn rot_matrix(d: &DerivedTet, sigma: EdgeFace) -> Mat4 {
    let t = d.t(sigma);
    Mat4::new(
        0.0,
        1.0,
        0.0,
        0.0, //
        t,
        1.0,
        -1.0 - t,
        0.0, //
        0.0,
        1.0,
        -1.0,
        0.0, //
        0.0,
        0.0,
        0.0,
        1.0 / d.e(sigma.succ()),
    )
}

/// `Flip_σ`: sends the σ-standard representative to the σ̄-standard one.
pub fn flip_matrix(d: &DerivedTet, sigma: EdgeFace) -> Mat4 {
    let (e, x, xb) = (d.e(sigma), d.x(sigma), d.x(sigma.conj()));
    Mat4::new(
        0.0,
        e,
        0.0,
        0.0, //
        1.0,
        0.0,
        0.0,
        0.0, //
        0.0,
        0.0,
        xb,
        x * xb - e, //
        0.0,
        0.0,
        -1.0,
        -x,
    )
}

pub fn glue_matrix(kappa: f64) -> Result<Mat4> {
    if kappa == 0.0 || !kappa.is_finite() {
        return Err(Error::Params(format!("gluing parameter {kappa} cannot enter a Glue matrix")));
    }
    Ok(Mat4::new(
        0.0, 1.0, 0.0, 0.0, //
        1.0, 0.0, 0.0, 0.0, //
        0.0, 0.0, 1.0, 0.0, //
        0.0, 0.0, 0.0, -kappa,
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CellKind {
    Triangle,
    Quadrilateral,
    Hexagon,
    EdgePolygon,
}

/// A 2-cell and its boundary loop.
#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub kind: CellKind,
    pub label: String,
    pub boundary: PathSpec,
    /// Edge class, for the 2k-gons.
    pub edge: Option<usize>,
}

/// The combinatorial complex: vertex and edge counts and all 2-cells.
#[derive(Clone, Debug)]
pub struct MonodromyComplex {
    pub num_vertices: usize,
    pub num_red: usize,
    pub num_blue: usize,
    pub num_green: usize,
    pub cells: Vec<Cell>,
}

impl MonodromyComplex {
    pub fn new(tri: &Triangulation) -> Self {
        use Move::*;
        let n = tri.num_tets();
        let mut cells = Vec::new();
        for t in 0..n {
            for face in 1..=4u8 {
                let s = EdgeFace::on_face(face)[0];
                cells.push(Cell {
                    kind: CellKind::Triangle,
                    label: format!("triangle {t}:{s}"),
                    boundary: PathSpec::new((t, s), vec![RotPlus, RotPlus, RotPlus]),
                    edge: None,
                });
            }
            for v in 1..=4u8 {
                // The hexagon around vertex v runs through the six edge-faces
                // whose edge contains v.
                let s = EdgeFace::ALL.into_iter().find(|s| s.j() == v).expect("vertex has edge-faces");
                cells.push(Cell {
                    kind: CellKind::Hexagon,
                    label: format!("hexagon {t}:{s}"),
                    boundary: PathSpec::new((t, s), vec![RotMinus, Flip, RotMinus, Flip, RotMinus, Flip]),
                    edge: None,
                });
            }
        }
        for fc in tri.face_classes() {
            let (t, s0) = fc.canonical;
            let mut s = s0;
            for _ in 0..3 {
                cells.push(Cell {
                    kind: CellKind::Quadrilateral,
                    label: format!("quadrilateral {t}:{s}"),
                    boundary: PathSpec::new((t, s), vec![Glue, RotMinus, Glue, RotMinus]),
                    edge: None,
                });
                s = s.succ();
            }
        }
        for c in tri.edge_cycles() {
            let first = c.slots[0];
            let moves = c.slots.iter().flat_map(|_| [Flip, Glue]).collect();
            cells.push(Cell {
                kind: CellKind::EdgePolygon,
                label: format!("edge {} ({}-gon)", c.id, 2 * c.valence()),
                boundary: PathSpec::new((first.tet, first.incoming), moves),
                edge: Some(c.id),
            });
        }
        MonodromyComplex {
            num_vertices: 12 * n,
            num_red: 12 * n,
            num_blue: 6 * n,
            num_green: 3 * tri.face_classes().len(),
            cells,
        }
    }

    pub fn count(&self, kind: CellKind) -> usize {
        self.cells.iter().filter(|c| c.kind == kind).count()
    }
}

/// Per-edge data of the products around edges.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EdgeMatrix {
    pub edge: usize,
    pub order: u32,
    pub valence: usize,
    /// Row-major; the (2,2) entry is exactly 1 so no rescaling is needed.
    pub matrix: [f64; 16],
    pub g11: f64,
    pub g33: f64,
    pub g34: f64,
    pub g43: f64,
    pub g44: f64,
    pub residuals: Vec<f64>,
    /// `∏ e_{σ_i}`, to compare with `g11`.
    pub product_e: f64,
    pub det: f64,
    /// `∏ e_{σ_i}² κ_{τ_{i+1}}`, to compare with `det`.
    pub det_expected: f64,
    /// Largest entry outside the block pattern, relative to the matrix norm.
    pub off_pattern: f64,
}

/// Residuals of one edge matrix: `[G11−1, G33−1, G44−1, G34, G43]` for a
/// manifold edge, `[G11−1, G33+G44−2cos(2π/n), G33G44−G34G43−1]` for a cone
/// edge of order `n ≥ 2`.
pub fn edge_residuals(g: &Mat4, order: u32) -> Vec<f64> {
    let (g11, g33, g34, g43, g44) = (g[(0, 0)], g[(2, 2)], g[(2, 3)], g[(3, 2)], g[(3, 3)]);
    if order <= 1 {
        vec![g11 - 1.0, g33 - 1.0, g44 - 1.0, g34, g43]
    } else {
        vec![g11 - 1.0, g33 + g44 - rotation_trace(order), g33 * g44 - g34 * g43 - 1.0]
    }
}

/// `2cos(2π/n)`, exact for the orders where it is an integer.
pub fn rotation_trace(order: u32) -> f64 {
    match order {
        2 => -2.0,
        3 => -1.0,
        4 => 0.0,
        6 => 1.0,
        n => 2.0 * (2.0 * std::f64::consts::PI / n as f64).cos(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellCheck {
    pub kind: CellKind,
    pub label: String,
    pub distance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CocycleReport {
    pub pass: bool,
    pub tol: f64,
    pub cells: Vec<CellCheck>,
}

impl CocycleReport {
    pub fn failing(&self) -> Vec<&CellCheck> {
        self.cells.iter().filter(|c| !c.pass).collect()
    }
}

/// One placed copy of a tetrahedron in the developing map.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DevelopedTet {
    pub id: usize,
    pub parent: Option<usize>,
    /// Face of the parent crossed to reach this copy.
    pub parent_face: Option<u8>,
    pub depth: usize,
    pub tet: usize,
    #[serde(serialize_with = "ser_ef")]
    pub sigma: EdgeFace,
    /// Row-major frame matrix, scaled to unit Frobenius norm.
    pub frame: [f64; 16],
    /// Vertex flags, each vector scaled to unit norm.
    pub flags: TetOfFlags,
}

fn ser_ef<S: serde::Serializer>(ef: &EdgeFace, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(ef)
}

/// The cochain attached to a parameter set.
pub struct Cochain<'a> {
    tri: &'a Triangulation,
    params: ParamSet,
    derived: Vec<DerivedTet>,
    gluings: GluingTable,
}

impl<'a> Cochain<'a> {
    pub fn new(tri: &'a Triangulation, params: &ParamSet) -> Result<Self> {
        params.validate(tri)?;
        Ok(Cochain { tri, derived: params.derived(), gluings: params.complete_gluings(tri), params: params.clone() })
    }

    pub fn triangulation(&self) -> &Triangulation {
        self.tri
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn gluings(&self) -> &GluingTable {
        &self.gluings
    }

    /// Value of the oriented edge leaving `v` by `mv`.
    pub fn edge_value(&self, v: Vertex, mv: Move) -> Mat4 {
        let (t, s) = v;
        let d = &self.derived[t];
        match mv {
            Move::RotPlus => {
                rot_matrix(d, s).try_inverse().expect("Rot matrices are invertible for positive parameters")
            }
            Move::RotMinus => rot_matrix(d, s.pred()),
            Move::Flip => flip_matrix(d, s.conj()),
            Move::Glue => {
                let (t2, tau) = self.tri.partner(t, s);
                glue_matrix(self.gluings.get(t2, tau)).expect("validated gluing parameters are positive")
            }
        }
    }

    /// Product of the edge values along `path` and the vertex it ends at.
    pub fn evaluate(&self, path: &PathSpec) -> Result<(Vertex, ProjMatrix)> {
        path.check(self.tri)?;
        let mut v = path.start;
        let mut m = Mat4::identity();
        for &mv in &path.moves {
            m *= self.edge_value(v, mv);
            v = step(self.tri, v, mv);
        }
        Ok((v, ProjMatrix(m)))
    }

    pub fn edge_matrices(&self) -> Vec<EdgeMatrix> {
        self.tri
            .edge_cycles()
            .iter()
            .map(|c| {
                let k = c.valence();
                let mut g = Mat4::identity();
                let (mut product_e, mut det_expected) = (1.0, 1.0);
                for i in 0..k {
                    let (slot, next) = (c.slots[i], c.slots[(i + 1) % k]);
                    let d = &self.derived[slot.tet];
                    let kappa = self.gluings.get(next.tet, next.incoming);
                    g *= flip_matrix(d, slot.outgoing);
                    g *= glue_matrix(kappa).expect("validated gluing parameters are positive");
                    product_e *= d.e(slot.outgoing);
                    det_expected *= d.e(slot.outgoing).powi(2) * kappa;
                }
                let norm = g.norm();
                let mut off: f64 = 0.0;
                for r in 0..4 {
                    for q in 0..4 {
                        let in_pattern = (r == q && r < 2) || (r >= 2 && q >= 2);
                        if !in_pattern && !(r == 1 && q == 1) {
                            off = off.max(g[(r, q)].abs() / norm);
                        }
                    }
                }
                EdgeMatrix {
                    edge: c.id,
                    order: c.order,
                    valence: k,
                    matrix: ProjMatrix(g).row_major(),
                    g11: g[(0, 0)],
                    g33: g[(2, 2)],
                    g34: g[(2, 3)],
                    g43: g[(3, 2)],
                    g44: g[(3, 3)],
                    residuals: edge_residuals(&g, c.order),
                    product_e,
                    det: g.determinant(),
                    det_expected,
                    off_pattern: off,
                }
            })
            .collect()
    }

    /// Evaluates every 2-cell boundary. A cone edge of order `n` passes when
    /// the `n`-th power of its boundary product is trivial.
    pub fn verify(&self, complex: &MonodromyComplex, tol: f64) -> CocycleReport {
        let cells: Vec<CellCheck> = complex
            .cells
            .par_iter()
            .map(|cell| {
                let (_, m) = self.evaluate(&cell.boundary).expect("cells lie in the complex");
                let order = cell.edge.map_or(1, |e| self.tri.edge_cycles()[e].order.max(1));
                let power = ProjMatrix(m.0.pow(order - 1) * m.0);
                let distance = power.distance_to_identity();
                CellCheck { kind: cell.kind, label: cell.label.clone(), distance, pass: distance <= tol }
            })
            .collect();
        CocycleReport { pass: cells.iter().all(|c| c.pass), tol, cells }
    }

    /// Holonomy of a closed path, after checking that the cochain is a cocycle.
    pub fn holonomy(&self, complex: &MonodromyComplex, path: &PathSpec, tol: f64) -> Result<ProjMatrix> {
        let (end, m) = self.evaluate(path)?;
        if end != path.start {
            return Err(Error::Path(format!("path '{path}' is not closed: it ends at {}:{}", end.0, end.1)));
        }
        let report = self.verify(complex, tol);
        if !report.pass {
            let names: Vec<&str> = report.failing().iter().map(|c| c.label.as_str()).collect();
            return Err(Error::Cocycle(format!("not a cocycle; failing cells: {}", names.join(", "))));
        }
        Ok(m)
    }

    /// Places copies of tetrahedra by breadth-first expansion across faces, up
    /// to `depth` gluings from `base`. Each copy is its standard
    /// representative moved by the product along the path that reached it.
    pub fn develop(
        &self,
        complex: &MonodromyComplex,
        base: Vertex,
        depth: usize,
        tol: f64,
    ) -> Result<Vec<DevelopedTet>> {
        if base.0 >= self.tri.num_tets() {
            return Err(Error::Path(format!("no tetrahedron {}", base.0)));
        }
        let report = self.verify(complex, tol);
        if !report.pass {
            let names: Vec<&str> = report.failing().iter().map(|c| c.label.as_str()).collect();
            return Err(Error::Cocycle(format!("not a cocycle; failing cells: {}", names.join(", "))));
        }
        let mut out = Vec::new();
        let mut queue = VecDeque::new();
        let base_copy = self.place(0, None, None, 0, base, Mat4::identity())?;
        queue.push_back((0usize, Mat4::identity(), None::<u8>));
        out.push(base_copy);
        while let Some((id, frame, entered)) = queue.pop_front() {
            let copy = out[id].clone();
            if copy.depth == depth {
                continue;
            }
            for face in 1..=4u8 {
                if Some(face) == entered {
                    continue;
                }
                let target = EdgeFace::on_face(face)[0];
                let inner = inner_path(copy.sigma, target);
                let mut m = frame;
                let mut v = (copy.tet, copy.sigma);
                for mv in inner.into_iter().chain([Move::Glue]) {
                    m *= self.edge_value(v, mv);
                    v = step(self.tri, v, mv);
                }
                // Keep the frame well scaled; placements are projective.
                m /= m.norm();
                let new_id = out.len();
                out.push(self.place(new_id, Some(id), Some(face), copy.depth + 1, v, m)?);
                queue.push_back((new_id, m, Some(v.1.l())));
            }
        }
        Ok(out)
    }

    fn place(
        &self,
        id: usize,
        parent: Option<usize>,
        parent_face: Option<u8>,
        depth: usize,
        v: Vertex,
        frame: Mat4,
    ) -> Result<DevelopedTet> {
        let std = standard_representative(&self.params.shapes[v.0], v.1)?;
        let mut flags = std.transformed(&frame)?;
        for f in flags.flags.iter_mut() {
            f.point /= f.point.norm();
            f.plane /= f.plane.norm();
        }
        let frame = ProjMatrix(frame / frame.norm()).row_major();
        Ok(DevelopedTet { id, parent, parent_face, depth, tet: v.0, sigma: v.1, frame, flags })
    }

    /// Closed paths based at the first vertex of `cusp` built from moves that
    /// keep the first vertex of the edge-face inside the cusp. They are the
    /// fundamental cycles of a spanning tree of that peripheral graph.
    pub fn peripheral_loops(&self, cusp: usize) -> Result<Vec<PathSpec>> {
        peripheral_loops(self.tri, cusp)
    }

    /// Up to `count` peripheral loops whose holonomies are pairwise distinct
    /// and nontrivial, filled up with the remaining loops in order when there
    /// are not enough of those.
    pub fn independent_peripheral_loops(&self, cusp: usize, count: usize) -> Result<Vec<PathSpec>> {
        let loops = self.peripheral_loops(cusp)?;
        let mut chosen: Vec<(PathSpec, ProjMatrix)> = Vec::new();
        for l in &loops {
            let (_, m) = self.evaluate(l)?;
            if chosen.len() < count
                && m.distance_to_identity() > 1e-6
                && chosen.iter().all(|(_, c)| c.distance(&m) > 1e-6 && c.distance(&m.inverse().unwrap_or(m)) > 1e-6)
            {
                chosen.push((l.clone(), m));
            }
        }
        let mut out: Vec<PathSpec> = chosen.into_iter().map(|(l, _)| l).collect();
        for l in loops {
            if out.len() >= count {
                break;
            }
            if !out.contains(&l) {
                out.push(l);
            }
        }
        Ok(out)
    }
}

/// Shortest path of rot/flip moves between two edge-faces of one tetrahedron.
fn inner_path(from: EdgeFace, to: EdgeFace) -> Vec<Move> {
    let mut prev: [Option<(EdgeFace, Move)>; 12] = [None; 12];
    let mut seen = [false; 12];
    seen[from.index()] = true;
    let mut queue = VecDeque::from([from]);
    while let Some(s) = queue.pop_front() {
        if s == to {
            break;
        }
        for (mv, n) in [(Move::RotPlus, s.succ()), (Move::RotMinus, s.pred()), (Move::Flip, s.conj())] {
            if !seen[n.index()] {
                seen[n.index()] = true;
                prev[n.index()] = Some((s, mv));
                queue.push_back(n);
            }
        }
    }
    let mut moves = Vec::new();
    let mut cur = to;
    while let Some((p, mv)) = prev[cur.index()] {
        moves.push(mv);
        cur = p;
    }
    moves.reverse();
    moves
}

/// The composite moves of the peripheral graph; each keeps the first vertex
/// of the edge-face in the same cusp.
const PERIPHERAL_MOVES: [[Move; 2]; 4] =
    [[Move::Flip, Move::RotMinus], [Move::RotPlus, Move::Flip], [Move::Glue, Move::Flip], [Move::Glue, Move::RotMinus]];

/// Key identifying an undirected peripheral edge, so that a move and its
/// inverse are counted once.
fn peripheral_edge_key(a: Vertex, kind: usize, b: Vertex) -> (usize, Vertex, Vertex) {
    match kind {
        0 => (0, a, b),
        1 => (0, b, a),
        2 => (2, a.min(b), a.max(b)),
        _ => (3, a, b),
    }
}

/// See [`Cochain::peripheral_loops`].
pub fn peripheral_loops(tri: &Triangulation, cusp: usize) -> Result<Vec<PathSpec>> {
    let class = tri
        .vertex_classes()
        .get(cusp)
        .ok_or_else(|| Error::Path(format!("no cusp {cusp} (there are {})", tri.vertex_classes().len())))?;
    let &(t0, v0) = class.members.iter().min().expect("cusps are nonempty");
    let base = (t0, EdgeFace::ALL.into_iter().find(|s| s.i() == v0).expect("vertex has edge-faces"));
    let mut tree: BTreeMap<Vertex, Vec<Move>> = BTreeMap::from([(base, Vec::new())]);
    let mut tree_edges = BTreeSet::new();
    let mut queue = VecDeque::from([base]);
    let mut order = vec![base];
    while let Some(a) = queue.pop_front() {
        for (kind, moves) in PERIPHERAL_MOVES.iter().enumerate() {
            let b = moves.iter().fold(a, |v, &m| step(tri, v, m));
            if !tree.contains_key(&b) {
                let mut path = tree[&a].clone();
                path.extend(moves);
                tree.insert(b, path);
                tree_edges.insert(peripheral_edge_key(a, kind, b));
                queue.push_back(b);
                order.push(b);
            }
        }
    }
    let mut seen = tree_edges.clone();
    let mut loops = Vec::new();
    for a in order {
        for (kind, moves) in PERIPHERAL_MOVES.iter().enumerate() {
            let b = moves.iter().fold(a, |v, &m| step(tri, v, m));
            if !seen.insert(peripheral_edge_key(a, kind, b)) {
                continue;
            }
            let to_a = PathSpec::new(base, tree[&a].clone());
            let back = PathSpec::new(base, tree[&b].clone()).reversed(tri);
            let l = to_a.then(&PathSpec::new(a, moves.to_vec())).then(&back);
            loops.push(l);
        }
    }
    Ok(loops)
}

/// Largest deviation, over all vertices of the developed copies, of the
/// face shared with the parent: the three flags on the crossed face must
/// coincide with three flags of the parent.
pub fn develop_mismatch(copies: &[DevelopedTet]) -> f64 {
    let mut worst: f64 = 0.0;
    for c in copies {
        let Some(p) = c.parent else { continue };
        let parent = &copies[p];
        for v in (1..=4u8).filter(|&v| v != c.sigma.l()) {
            let f = c.flags.flag(v);
            let best = parent
                .flags
                .flags
                .iter()
                .map(|g| {
                    crate::flags::line_distance(&f.point, &g.point) + crate::flags::line_distance(&f.plane, &g.plane)
                })
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(best);
        }
    }
    worst
}

/// All distinct developed vertices, as unit vectors.
pub fn developed_vertices(copies: &[DevelopedTet]) -> Vec<Vec4> {
    copies.iter().flat_map(|c| c.flags.flags.iter().map(|f| f.point)).collect()
}
