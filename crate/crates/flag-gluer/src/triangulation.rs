//! Ideal triangulations: face pairings and the combinatorial classes derived
//! from them (faces, edges with their cyclic order, and cusps).
//!
//! Vertex labels are `1..=4` internally. The JSON format is 0-based; the shift
//! happens only in [`Triangulation::from_json`] and [`Triangulation::to_json`].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::edgeface::EdgeFace;
use crate::error::{Error, Result};

/// Pairing of one face with a face of `tet`. `perm[v - 1]` is the image label
/// of vertex `v`; the target face is `perm[source_face - 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FaceGluing {
    pub tet: usize,
    pub perm: [u8; 4],
}

impl FaceGluing {
    pub fn map(&self, v: u8) -> u8 {
        self.perm[v as usize - 1]
    }

    fn inverse(&self) -> [u8; 4] {
        let mut inv = [0u8; 4];
        for v in 1..=4u8 {
            inv[self.map(v) as usize - 1] = v;
        }
        inv
    }
}

/// One position around an edge: tetrahedron `tet` is entered through
/// `incoming` and left through `outgoing == incoming.conj()`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Slot {
    pub tet: usize,
    #[serde(serialize_with = "ser_ef")]
    pub incoming: EdgeFace,
    #[serde(serialize_with = "ser_ef")]
    pub outgoing: EdgeFace,
}

fn ser_ef<S: serde::Serializer>(ef: &EdgeFace, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(ef)
}

/// An edge class with its tetrahedra in cyclic order. Consecutive slots are
/// glued along `(slots[i].outgoing, slots[i + 1].incoming)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EdgeCycle {
    pub id: usize,
    pub order: u32,
    pub slots: Vec<Slot>,
}

impl EdgeCycle {
    pub fn valence(&self) -> usize {
        self.slots.len()
    }
}

/// A pair of identified faces, with the canonical edge-face pair that carries
/// the class's free gluing parameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FaceClass {
    pub id: usize,
    pub canonical: (usize, EdgeFace),
    pub partner: (usize, EdgeFace),
}

/// A cusp: the set of tetrahedron vertices identified by the face pairings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VertexClass {
    pub id: usize,
    pub members: Vec<(usize, u8)>,
}

#[derive(Clone, Debug)]
pub struct Triangulation {
    gluings: Vec<[FaceGluing; 4]>,
    edge_cycles: Vec<EdgeCycle>,
    face_classes: Vec<FaceClass>,
    face_class_of: Vec<[usize; 4]>,
    edge_of: Vec<[usize; 12]>,
    vertex_classes: Vec<VertexClass>,
}

impl PartialEq for Triangulation {
    fn eq(&self, other: &Self) -> bool {
        self.gluings == other.gluings && self.edge_orders() == other.edge_orders()
    }
}

#[derive(Serialize, Deserialize)]
struct GluingEntry {
    tet: usize,
    perm: [u8; 4],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TriangulationFile {
    num_tetrahedra: usize,
    gluings: Vec<Vec<GluingEntry>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    edge_orders: BTreeMap<String, u32>,
}

fn is_odd(p: &[u8; 4]) -> bool {
    let mut inversions = 0;
    for a in 0..4 {
        for b in a + 1..4 {
            if p[a] > p[b] {
                inversions += 1;
            }
        }
    }
    inversions % 2 == 1
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

impl Triangulation {
    /// Validates the pairings and derives all classes. `edge_orders` maps edge
    /// ids (in discovery order) to cone orders; missing ids default to 1.
    pub fn new(gluings: Vec<[FaceGluing; 4]>, edge_orders: &BTreeMap<usize, u32>) -> Result<Self> {
        let n = gluings.len();
        if n == 0 {
            return Err(Error::Triangulation("no tetrahedra".into()));
        }
        for (t, faces) in gluings.iter().enumerate() {
            for f in 1..=4u8 {
                let g = faces[f as usize - 1];
                let at = format!("tetrahedron {t}, face {}", f - 1);
                if g.tet >= n {
                    return Err(Error::Triangulation(format!("{at}: target tetrahedron {} out of range", g.tet)));
                }
                let mut sorted = g.perm;
                sorted.sort_unstable();
                if sorted != [1, 2, 3, 4] {
                    return Err(Error::Triangulation(format!("{at}: perm is not a permutation")));
                }
                if !is_odd(&g.perm) {
                    return Err(Error::Triangulation(format!("{at}: face map is orientation-preserving")));
                }
                let target_face = g.map(f);
                if g.tet == t && target_face == f {
                    return Err(Error::Triangulation(format!("{at}: face glued to itself")));
                }
                let back = gluings[g.tet][target_face as usize - 1];
                if back.tet != t || back.perm != g.inverse() {
                    return Err(Error::Triangulation(format!(
                        "{at}: pairing is not involutive (target tetrahedron {}, face {})",
                        g.tet,
                        target_face - 1
                    )));
                }
            }
        }

        let mut parent: Vec<usize> = (0..n).collect();
        for (t, faces) in gluings.iter().enumerate() {
            for g in faces {
                let (a, b) = (find(&mut parent, t), find(&mut parent, g.tet));
                parent[a] = b;
            }
        }
        let root = find(&mut parent, 0);
        if (0..n).any(|t| find(&mut parent, t) != root) {
            return Err(Error::Triangulation("more than one connected component".into()));
        }

        let mut tri = Triangulation {
            gluings,
            edge_cycles: Vec::new(),
            face_classes: Vec::new(),
            face_class_of: vec![[usize::MAX; 4]; n],
            edge_of: vec![[usize::MAX; 12]; n],
            vertex_classes: Vec::new(),
        };
        tri.build_face_classes();
        tri.build_edge_cycles();
        tri.build_vertex_classes();

        for (&id, &order) in edge_orders {
            if id >= tri.edge_cycles.len() {
                return Err(Error::Triangulation(format!(
                    "edge order given for edge {id}, but there are only {} edges",
                    tri.edge_cycles.len()
                )));
            }
            if order == 0 {
                return Err(Error::Triangulation(format!("edge {id}: cone order must be at least 1")));
            }
            tri.edge_cycles[id].order = order;
        }
        Ok(tri)
    }

    fn build_face_classes(&mut self) {
        for t in 0..self.gluings.len() {
            for f in 1..=4u8 {
                if self.face_class_of[t][f as usize - 1] != usize::MAX {
                    continue;
                }
                let g = self.gluings[t][f as usize - 1];
                let tf = g.map(f);
                let id = self.face_classes.len();
                self.face_class_of[t][f as usize - 1] = id;
                self.face_class_of[g.tet][tf as usize - 1] = id;
                // t <= g.tet here because classes are discovered in tet order.
                let mut candidates: Vec<EdgeFace> = EdgeFace::on_face(f).to_vec();
                if g.tet == t {
                    candidates.extend(EdgeFace::on_face(tf));
                }
                let sigma = candidates.into_iter().min().expect("a face has edge-faces");
                let canonical = (t, sigma);
                self.face_classes.push(FaceClass { id, canonical, partner: self.partner(t, sigma) });
            }
        }
    }

    fn build_edge_cycles(&mut self) {
        let n = self.gluings.len();
        for t in 0..n {
            for s in EdgeFace::ALL {
                if self.edge_of[t][s.index()] != usize::MAX {
                    continue;
                }
                let id = self.edge_cycles.len();
                let mut slots = Vec::new();
                let (mut ct, mut cs) = (t, s);
                loop {
                    self.edge_of[ct][cs.index()] = id;
                    self.edge_of[ct][cs.conj().index()] = id;
                    slots.push(Slot { tet: ct, incoming: cs.conj(), outgoing: cs });
                    let (nt, tau) = self.partner(ct, cs);
                    (ct, cs) = (nt, tau.conj());
                    if (ct, cs) == (t, s) {
                        break;
                    }
                    debug_assert!(slots.len() <= 6 * n);
                }
                self.edge_cycles.push(EdgeCycle { id, order: 1, slots });
            }
        }
    }

    fn build_vertex_classes(&mut self) {
        let n = self.gluings.len();
        let key = |t: usize, v: u8| 4 * t + v as usize - 1;
        let mut parent: Vec<usize> = (0..4 * n).collect();
        for t in 0..n {
            for f in 1..=4u8 {
                let g = self.gluings[t][f as usize - 1];
                for v in (1..=4u8).filter(|&v| v != f) {
                    let (a, b) = (find(&mut parent, key(t, v)), find(&mut parent, key(g.tet, g.map(v))));
                    parent[a] = b;
                }
            }
        }
        let mut by_root: BTreeMap<usize, usize> = BTreeMap::new();
        for t in 0..n {
            for v in 1..=4u8 {
                let r = find(&mut parent, key(t, v));
                let next = self.vertex_classes.len();
                let id = *by_root.entry(r).or_insert(next);
                if id == next {
                    self.vertex_classes.push(VertexClass { id, members: Vec::new() });
                }
                self.vertex_classes[id].members.push((t, v));
            }
        }
    }

    pub fn num_tets(&self) -> usize {
        self.gluings.len()
    }

    pub fn gluing(&self, tet: usize, face: u8) -> FaceGluing {
        self.gluings[tet][face as usize - 1]
    }

    /// The edge-face `tau` of the neighbouring tetrahedron glued to
    /// `(tet, sigma)`: for `sigma = (ij)k` the face map sends `V_i, V_j, V_k`
    /// to `W_j', W_i', W_k'`.
    pub fn partner(&self, tet: usize, sigma: EdgeFace) -> (usize, EdgeFace) {
        let g = self.gluing(tet, sigma.l());
        let [i, j, k, _] = sigma.perm();
        let tau = EdgeFace::new(g.map(j), g.map(i), g.map(k)).expect("face maps send edge-faces to edge-faces");
        (g.tet, tau)
    }

    pub fn edge_cycles(&self) -> &[EdgeCycle] {
        &self.edge_cycles
    }

    pub fn face_classes(&self) -> &[FaceClass] {
        &self.face_classes
    }

    pub fn vertex_classes(&self) -> &[VertexClass] {
        &self.vertex_classes
    }

    /// Face class of the face opposite vertex `face` of `tet`.
    pub fn face_class_of(&self, tet: usize, face: u8) -> usize {
        self.face_class_of[tet][face as usize - 1]
    }

    /// Edge class containing the edge of `sigma` in `tet`.
    pub fn edge_of(&self, tet: usize, sigma: EdgeFace) -> usize {
        self.edge_of[tet][sigma.index()]
    }

    /// Cusp containing vertex `v` of `tet`.
    pub fn vertex_class_of(&self, tet: usize, v: u8) -> usize {
        self.vertex_classes
            .iter()
            .find(|c| c.members.contains(&(tet, v)))
            .map(|c| c.id)
            .expect("every tetrahedron vertex lies in a class")
    }

    /// Cone orders keyed by edge id, omitting the default order 1.
    pub fn edge_orders(&self) -> BTreeMap<usize, u32> {
        self.edge_cycles.iter().filter(|c| c.order != 1).map(|c| (c.id, c.order)).collect()
    }

    /// The same gluings with every cone order reset to 1.
    pub fn as_manifold(&self) -> Self {
        let mut out = self.clone();
        for c in &mut out.edge_cycles {
            c.order = 1;
        }
        out
    }

    /// Replaces the cone orders.
    pub fn with_edge_orders(&self, orders: &BTreeMap<usize, u32>) -> Result<Self> {
        Triangulation::new(self.gluings.clone(), orders)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: TriangulationFile =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("triangulation file: {e}")))?;
        if file.gluings.len() != file.num_tetrahedra {
            return Err(Error::Parse(format!(
                "num_tetrahedra is {} but {} gluing rows were given",
                file.num_tetrahedra,
                file.gluings.len()
            )));
        }
        let mut gluings = Vec::with_capacity(file.num_tetrahedra);
        for (t, row) in file.gluings.iter().enumerate() {
            if row.len() != 4 {
                return Err(Error::Parse(format!("tetrahedron {t}: expected 4 face entries, got {}", row.len())));
            }
            let mut faces = [FaceGluing { tet: 0, perm: [0; 4] }; 4];
            for (f, entry) in row.iter().enumerate() {
                if entry.perm.iter().any(|&p| p > 3) {
                    return Err(Error::Parse(format!("tetrahedron {t}, face {f}: perm entries must be in 0..=3")));
                }
                faces[f] = FaceGluing { tet: entry.tet, perm: entry.perm.map(|p| p + 1) };
            }
            gluings.push(faces);
        }
        let mut orders = BTreeMap::new();
        for (k, v) in file.edge_orders {
            let id = k
                .trim()
                .parse::<usize>()
                .map_err(|_| Error::Parse(format!("edge_orders key '{k}' is not an edge id")))?;
            orders.insert(id, v);
        }
        Triangulation::new(gluings, &orders)
    }

    pub fn to_json(&self) -> String {
        let file = TriangulationFile {
            num_tetrahedra: self.num_tets(),
            gluings: self
                .gluings
                .iter()
                .map(|faces| faces.iter().map(|g| GluingEntry { tet: g.tet, perm: g.perm.map(|p| p - 1) }).collect())
                .collect(),
            edge_orders: self.edge_orders().into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        };
        serde_json::to_string_pretty(&file).expect("triangulation serializes")
    }

    /// Relabels tetrahedra: old tetrahedron `t` becomes `new_index[t]`.
    /// Cone orders follow their edges.
    pub fn relabeled(&self, new_index: &[usize]) -> Result<Self> {
        let n = self.num_tets();
        let mut seen = vec![false; n];
        for &t in new_index {
            if t >= n || std::mem::replace(&mut seen[t], true) {
                return Err(Error::Triangulation(format!("{new_index:?} is not a permutation of 0..{n}")));
            }
        }
        if new_index.len() != n {
            return Err(Error::Triangulation(format!("{new_index:?} is not a permutation of 0..{n}")));
        }
        let mut gluings = vec![[FaceGluing { tet: 0, perm: [0; 4] }; 4]; n];
        for (t, faces) in self.gluings.iter().enumerate() {
            for (f, g) in faces.iter().enumerate() {
                gluings[new_index[t]][f] = FaceGluing { tet: new_index[g.tet], perm: g.perm };
            }
        }
        let plain = Triangulation::new(gluings, &BTreeMap::new())?;
        let orders = self
            .edge_cycles
            .iter()
            .filter(|c| c.order != 1)
            .map(|c| (plain.edge_of(new_index[c.slots[0].tet], c.slots[0].outgoing), c.order))
            .collect();
        plain.with_edge_orders(&orders)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const FIG8: &str = r#"{"num_tetrahedra":2,"gluings":[
        [{"tet":1,"perm":[0,1,3,2]},{"tet":1,"perm":[1,3,0,2]},{"tet":1,"perm":[1,0,2,3]},{"tet":1,"perm":[2,0,3,1]}],
        [{"tet":0,"perm":[0,1,3,2]},{"tet":0,"perm":[1,3,0,2]},{"tet":0,"perm":[1,0,2,3]},{"tet":0,"perm":[2,0,3,1]}]]}"#;

    const HOPF: &str = r#"{"num_tetrahedra":1,"gluings":[
        [{"tet":0,"perm":[1,0,2,3]},{"tet":0,"perm":[1,0,2,3]},{"tet":0,"perm":[0,1,3,2]},{"tet":0,"perm":[0,1,3,2]}]],
        "edge_orders":{"0":3,"1":3,"2":3}}"#;

    #[test]
    fn figure_eight_structure() {
        let tri = Triangulation::from_json(FIG8).unwrap();
        assert_eq!(tri.num_tets(), 2);
        assert_eq!(tri.face_classes().len(), 4);
        let valences: Vec<_> = tri.edge_cycles().iter().map(|c| c.valence()).collect();
        assert_eq!(valences, vec![6, 6]);
        assert_eq!(tri.vertex_classes().len(), 1);
        assert_eq!(tri.vertex_classes()[0].members.len(), 8);
    }

    #[test]
    fn hopf_structure() {
        let tri = Triangulation::from_json(HOPF).unwrap();
        assert_eq!(tri.face_classes().len(), 2);
        let mut valences: Vec<_> = tri.edge_cycles().iter().map(|c| c.valence()).collect();
        valences.sort();
        assert_eq!(valences, vec![1, 1, 4]);
        assert_eq!(tri.vertex_classes().len(), 2);
        assert!(tri.edge_cycles().iter().all(|c| c.order == 3));
    }

    #[test]
    fn cycle_slots_are_glued_in_order() {
        for text in [FIG8, HOPF] {
            let tri = Triangulation::from_json(text).unwrap();
            let total: usize = tri.edge_cycles().iter().map(|c| c.valence()).sum();
            assert_eq!(total, 6 * tri.num_tets());
            for c in tri.edge_cycles() {
                for (n, s) in c.slots.iter().enumerate() {
                    assert_eq!(s.outgoing, s.incoming.conj());
                    let next = c.slots[(n + 1) % c.slots.len()];
                    assert_eq!(tri.partner(s.tet, s.outgoing), (next.tet, next.incoming));
                }
            }
        }
    }

    #[test]
    fn partner_is_an_involution() {
        let tri = Triangulation::from_json(FIG8).unwrap();
        for t in 0..2 {
            for s in EdgeFace::ALL {
                let (u, tau) = tri.partner(t, s);
                assert_eq!(tri.partner(u, tau), (t, s));
            }
        }
    }

    #[test]
    fn json_round_trip() {
        for text in [FIG8, HOPF] {
            let tri = Triangulation::from_json(text).unwrap();
            let again = Triangulation::from_json(&tri.to_json()).unwrap();
            assert_eq!(tri, again);
        }
    }

    #[test]
    fn face_glued_twice_is_rejected() {
        let text = r#"{"num_tetrahedra":2,"gluings":[
            [{"tet":1,"perm":[0,1,3,2]},{"tet":1,"perm":[0,1,3,2]},{"tet":1,"perm":[1,0,2,3]},{"tet":1,"perm":[2,0,3,1]}],
            [{"tet":0,"perm":[0,1,3,2]},{"tet":0,"perm":[1,3,0,2]},{"tet":0,"perm":[1,0,2,3]},{"tet":0,"perm":[2,0,3,1]}]]}"#;
        let err = Triangulation::from_json(text).unwrap_err();
        assert!(matches!(err, Error::Triangulation(_)), "{err}");
    }

    #[test]
    fn orientation_preserving_map_is_rejected() {
        let text = r#"{"num_tetrahedra":1,"gluings":[
            [{"tet":0,"perm":[1,0,2,3]},{"tet":0,"perm":[1,0,2,3]},{"tet":0,"perm":[0,1,2,3]},{"tet":0,"perm":[0,1,2,3]}]]}"#;
        let err = Triangulation::from_json(text).unwrap_err().to_string();
        assert!(err.contains("orientation") || err.contains("itself"), "{err}");
    }

    #[test]
    fn disconnected_input_is_rejected() {
        let one = r#"[{"tet":T,"perm":[1,0,2,3]},{"tet":T,"perm":[1,0,2,3]},{"tet":T,"perm":[0,1,3,2]},{"tet":T,"perm":[0,1,3,2]}]"#;
        let text = format!(r#"{{"num_tetrahedra":2,"gluings":[{},{}]}}"#, one.replace('T', "0"), one.replace('T', "1"));
        let err = Triangulation::from_json(&text).unwrap_err().to_string();
        assert!(err.contains("connected"), "{err}");
    }

    #[test]
    fn malformed_json_is_a_parse_error() {
        assert!(matches!(Triangulation::from_json("{"), Err(Error::Parse(_))));
        assert!(matches!(Triangulation::from_json(r#"{"num_tetrahedra":1,"gluings":[]}"#), Err(Error::Parse(_))));
    }

    #[test]
    fn canonical_pair_is_lowest_on_lower_tet() {
        let tri = Triangulation::from_json(FIG8).unwrap();
        for fc in tri.face_classes() {
            let (t, s) = fc.canonical;
            assert_eq!(t, 0);
            assert_eq!(s, EdgeFace::on_face(s.l())[0]);
            assert_eq!(tri.partner(t, s), fc.partner);
        }
    }
}
