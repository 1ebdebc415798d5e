//! The twelve edge-faces of a tetrahedron.
//!
//! An edge-face is an oriented edge `(ij)` lying in an oriented face `<ijk>`.
//! They correspond one-to-one with the even permutations `[i, j, k, l]` of the
//! vertex labels `1..=4`, written `(ij)k`. Values are interned as indices
//! `0..12` so the rotations and involutions reduce to table lookups.

use std::fmt;
use std::str::FromStr;

use crate::error::Error;

/// The even permutations of `1..=4` in lexicographic order.
const PERMS: [[u8; 4]; 12] = [
    [1, 2, 3, 4],
    [1, 3, 4, 2],
    [1, 4, 2, 3],
    [2, 1, 4, 3],
    [2, 3, 1, 4],
    [2, 4, 3, 1],
    [3, 1, 2, 4],
    [3, 2, 4, 1],
    [3, 4, 1, 2],
    [4, 1, 3, 2],
    [4, 2, 1, 3],
    [4, 3, 2, 1],
];

const fn index_of(p: [u8; 4]) -> u8 {
    let mut n = 0;
    while n < 12 {
        let q = PERMS[n];
        if q[0] == p[0] && q[1] == p[1] && q[2] == p[2] && q[3] == p[3] {
            return n as u8;
        }
        n += 1;
    }
    panic!("not an even permutation");
}

/// Table of the map `p ↦ [p[pos[0]], p[pos[1]], p[pos[2]], p[pos[3]]]`.
const fn build(pos: [usize; 4]) -> [u8; 12] {
    let mut out = [0u8; 12];
    let mut n = 0;
    while n < 12 {
        let p = PERMS[n];
        out[n] = index_of([p[pos[0]], p[pos[1]], p[pos[2]], p[pos[3]]]);
        n += 1;
    }
    out
}

// (ij)k ↦ (ki)j, (jk)i, (ji)l, (lk)j
const SUCC: [u8; 12] = build([2, 0, 1, 3]);
const PRED: [u8; 12] = build([1, 2, 0, 3]);
const CONJ: [u8; 12] = build([1, 0, 3, 2]);
const OPP: [u8; 12] = build([3, 2, 1, 0]);

/// Unordered edges of a tetrahedron, in the storage order used for edge ratios.
pub const EDGES: [(u8, u8); 6] = [(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)];

/// Index of the unordered edge `{a, b}` in [`EDGES`].
pub fn edge_index(a: u8, b: u8) -> usize {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    EDGES.iter().position(|&e| e == (lo, hi)).expect("edge endpoints must be distinct labels in 1..=4")
}

/// One of the twelve edge-faces, stored as an index into the even permutations.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct EdgeFace(u8);

impl EdgeFace {
    /// All edge-faces in index order.
    pub const ALL: [EdgeFace; 12] = {
        let mut out = [EdgeFace(0); 12];
        let mut n = 0;
        while n < 12 {
            out[n] = EdgeFace(n as u8);
            n += 1;
        }
        out
    };

    pub fn from_index(n: usize) -> Option<Self> {
        (n < 12).then_some(EdgeFace(n as u8))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// Looks up the edge-face with permutation `[i, j, k, l]`; `None` for odd
    /// or malformed permutations.
    pub fn from_perm(p: [u8; 4]) -> Option<Self> {
        PERMS.iter().position(|q| *q == p).map(|n| EdgeFace(n as u8))
    }

    /// Builds `(ij)k`; the fourth label is implied.
    pub fn new(i: u8, j: u8, k: u8) -> Option<Self> {
        if [i, j, k].iter().any(|&v| !(1..=4).contains(&v)) || i == j || j == k || i == k {
            return None;
        }
        Self::from_perm([i, j, k, 10 - i - j - k])
    }

    pub fn perm(self) -> [u8; 4] {
        PERMS[self.0 as usize]
    }

    pub fn i(self) -> u8 {
        self.perm()[0]
    }
    pub fn j(self) -> u8 {
        self.perm()[1]
    }
    pub fn k(self) -> u8 {
        self.perm()[2]
    }
    /// The vertex not on the face, which also labels the face.
    pub fn l(self) -> u8 {
        self.perm()[3]
    }

    /// `(ij)k -> (ki)j`.
    pub fn succ(self) -> Self {
        EdgeFace(SUCC[self.0 as usize])
    }

    /// `(ij)k -> (jk)i`.
    pub fn pred(self) -> Self {
        EdgeFace(PRED[self.0 as usize])
    }

    /// `(ij)k -> (ji)l`: same edge, reversed, in the other face containing it.
    pub fn conj(self) -> Self {
        EdgeFace(CONJ[self.0 as usize])
    }

    /// `(ij)k -> (lk)j`: the vertex-disjoint edge.
    pub fn opp(self) -> Self {
        EdgeFace(OPP[self.0 as usize])
    }

    /// `(ij)k -> (kl)i`.
    pub fn conj_opp(self) -> Self {
        self.conj().opp()
    }

    /// Storage slot of the underlying unordered edge.
    pub fn edge_index(self) -> usize {
        edge_index(self.i(), self.j())
    }

    /// The three edge-faces lying on the face opposite vertex `l`, as a
    /// `succ`-orbit starting from the lowest index.
    pub fn on_face(l: u8) -> [EdgeFace; 3] {
        let first = Self::ALL.into_iter().find(|s| s.l() == l).expect("face label must be in 1..=4");
        [first, first.succ(), first.pred()]
    }
}

impl fmt::Display for EdgeFace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [i, j, k, _] = self.perm();
        write!(f, "({i}{j}){k}")
    }
}

impl FromStr for EdgeFace {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let b = s.trim().as_bytes();
        let bad = || Error::Parse(format!("malformed edge-face '{s}', expected the form (ij)k"));
        if b.len() != 5 || b[0] != b'(' || b[3] != b')' {
            return Err(bad());
        }
        let digit = |c: u8| c.checked_sub(b'0').filter(|d| (1..=4).contains(d));
        match (digit(b[1]), digit(b[2]), digit(b[4])) {
            (Some(i), Some(j), Some(k)) => Self::new(i, j, k).ok_or_else(bad),
            _ => Err(bad()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ef(s: &str) -> EdgeFace {
        s.parse().unwrap()
    }

    #[test]
    fn rotations_match_named_examples() {
        assert_eq!(ef("(12)3").succ(), ef("(31)2"));
        assert_eq!(ef("(31)2").succ(), ef("(23)1"));
        assert_eq!(ef("(21)4").succ(), ef("(42)1"));
        assert_eq!(ef("(12)3").pred(), ef("(23)1"));
        assert_eq!(ef("(23)1").pred(), ef("(31)2"));
        assert_eq!(ef("(43)2").pred(), ef("(32)4"));
    }

    #[test]
    fn involutions_match_named_examples() {
        assert_eq!(ef("(12)3").conj(), ef("(21)4"));
        assert_eq!(ef("(12)3").opp(), ef("(43)2"));
        assert_eq!(ef("(12)3").conj_opp(), ef("(34)1"));
    }

    #[test]
    fn group_identities() {
        for s in EdgeFace::ALL {
            assert_eq!(s.succ().succ().succ(), s);
            assert_eq!(s.succ().pred(), s);
            assert_eq!(s.pred(), s.succ().succ());
            assert_eq!(s.conj().conj(), s);
            assert_eq!(s.opp().opp(), s);
            assert_eq!(s.conj_opp(), s.conj().opp());
            assert_eq!(s.conj().edge_index(), s.edge_index());
            let (a, b) = EDGES[s.opp().edge_index()];
            assert!(![s.i(), s.j()].contains(&a) && ![s.i(), s.j()].contains(&b));
        }
    }

    #[test]
    fn succ_and_conj_generate_everything() {
        let mut seen = vec![EdgeFace::ALL[0]];
        let mut n = 0;
        while n < seen.len() {
            for next in [seen[n].succ(), seen[n].conj()] {
                if !seen.contains(&next) {
                    seen.push(next);
                }
            }
            n += 1;
        }
        assert_eq!(seen.len(), 12);
    }

    #[test]
    fn text_round_trip_and_rejections() {
        for s in EdgeFace::ALL {
            assert_eq!(s.to_string().parse::<EdgeFace>().unwrap(), s);
        }
        for bad in ["(12)4", "(11)3", "12)3", "(15)3", "(12)", ""] {
            assert!(bad.parse::<EdgeFace>().is_err(), "{bad}");
        }
    }

    #[test]
    fn faces_hold_three_edge_faces() {
        for l in 1..=4 {
            let f = EdgeFace::on_face(l);
            assert!(f.iter().all(|s| s.l() == l));
            assert_ne!(f[0], f[1]);
            assert_ne!(f[1], f[2]);
        }
    }
}
