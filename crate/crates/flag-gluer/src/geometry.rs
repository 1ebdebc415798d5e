//! Subgeometries: arithmetic in `B_⋆ = ℝ[ι]/(ι² = ⋆)`, the test for
//! X_⋆-tetrahedra, Thurston parameters, and the maps between Thurston
//! parameters and flag parameters.
//!
//! The dictionary on an X-tetrahedron is `e_σ = |z_σ|²`, `X_σ = Re z_σ` and
//! `j_σ = −⋆·(Im z_σ)²`, with gluing parameter `κ^T_σ = Im z^T_σ / Im z^{T'}_τ`.

use std::collections::VecDeque;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::Serialize;

use crate::edgeface::EdgeFace;
use crate::error::{Error, Result};
use crate::flags::{Mat4, Vec4};
use crate::monodromy::DevelopedTet;
use crate::params::{DerivedTet, ParamSet, TetShape};
use crate::triangulation::Triangulation;

/// An element `re + ι·im` of `B_⋆` with `ι² = star`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BNumber {
    pub re: f64,
    pub im: f64,
    pub star: i8,
}

impl BNumber {
    pub fn new(re: f64, im: f64, star: i8) -> Self {
        debug_assert!(matches!(star, -1..=1));
        BNumber { re, im, star }
    }

    pub fn real(re: f64, star: i8) -> Self {
        BNumber::new(re, 0.0, star)
    }

    pub fn conj(self) -> Self {
        BNumber::new(self.re, -self.im, self.star)
    }

    /// `z z̄ = re² − ⋆·im²`; may be negative or zero when `⋆ ≠ −1`.
    pub fn norm2(self) -> f64 {
        self.re * self.re - self.star as f64 * self.im * self.im
    }

    pub fn is_space_like(self) -> bool {
        self.norm2() > 0.0
    }

    pub fn inv(self) -> Result<Self> {
        let n = self.norm2();
        if n == 0.0 {
            return Err(Error::Numerical(format!("{self} is light-like and has no inverse")));
        }
        Ok(BNumber::new(self.re / n, -self.im / n, self.star))
    }

    pub fn checked_div(self, other: BNumber) -> Result<Self> {
        Ok(self * other.inv()?)
    }

    /// Coefficient distance, used to report residuals.
    pub fn dist(self, other: BNumber) -> f64 {
        (self.re - other.re).hypot(self.im - other.im)
    }
}

impl fmt::Display for BNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}ι (ι² = {})", self.re, self.im, self.star)
    }
}

impl Add for BNumber {
    type Output = BNumber;
    fn add(self, o: BNumber) -> BNumber {
        debug_assert_eq!(self.star, o.star);
        BNumber::new(self.re + o.re, self.im + o.im, self.star)
    }
}

impl Sub for BNumber {
    type Output = BNumber;
    fn sub(self, o: BNumber) -> BNumber {
        debug_assert_eq!(self.star, o.star);
        BNumber::new(self.re - o.re, self.im - o.im, self.star)
    }
}

impl Neg for BNumber {
    type Output = BNumber;
    fn neg(self) -> BNumber {
        BNumber::new(-self.re, -self.im, self.star)
    }
}

impl Mul for BNumber {
    type Output = BNumber;
    fn mul(self, o: BNumber) -> BNumber {
        debug_assert_eq!(self.star, o.star);
        let s = self.star as f64;
        BNumber::new(self.re * o.re + s * self.im * o.im, self.re * o.im + self.im * o.re, self.star)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Kind {
    Hyperbolic,
    AntiDeSitter,
    HalfPipe,
    NonX,
}

impl Kind {
    pub fn star(self) -> Option<i8> {
        match self {
            Kind::Hyperbolic => Some(-1),
            Kind::AntiDeSitter => Some(1),
            Kind::HalfPipe => Some(0),
            Kind::NonX => None,
        }
    }
}

/// Why a tetrahedron is not an X-tetrahedron: the edge-face with the largest
/// deviation of its triple ratio from 1.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub edge_face: String,
    pub triple_ratio: f64,
    pub edge_ratio: f64,
    pub opposite_edge_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TetClass {
    pub kind: Kind,
    /// Thurston parameters indexed by [`EdgeFace::index`], for X-tetrahedra.
    pub z: Option<Vec<BNumber>>,
    pub witness: Option<Witness>,
    pub warning: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Classification {
    pub tets: Vec<TetClass>,
    pub uniform_kind: Option<Kind>,
    /// For half-pipe structures: the imaginary part at `0:(12)3`, which
    /// fixes the otherwise free global scale.
    pub half_pipe_scale: Option<f64>,
}

/// Classifies one tetrahedron from its derived parameters.
pub fn classify_tet(d: &DerivedTet, tol: f64) -> TetClass {
    let worst = EdgeFace::ALL.into_iter().map(|s| (s, (d.t(s) - 1.0).abs())).fold((EdgeFace::ALL[0], -1.0), |a, b| {
        if b.1 > a.1 * (1.0 + 1e-12) + 1e-300 {
            b
        } else {
            a
        }
    });
    if worst.1 >= tol {
        let s = worst.0;
        return TetClass {
            kind: Kind::NonX,
            z: None,
            witness: Some(Witness {
                edge_face: s.to_string(),
                triple_ratio: d.t(s),
                edge_ratio: d.e(s),
                opposite_edge_ratio: d.e(s.opp()),
            }),
            warning: None,
        };
    }
    let flat = EdgeFace::ALL.into_iter().filter(|&s| d.j(s).abs() < tol * d.e(s)).count();
    let positive = EdgeFace::ALL.into_iter().filter(|&s| d.j(s) > 0.0).count();
    let kind = if flat == 12 {
        Kind::HalfPipe
    } else if flat > 0 {
        let s = EdgeFace::ALL.into_iter().find(|&s| d.j(s).abs() < tol * d.e(s)).expect("flat > 0");
        return TetClass {
            kind: Kind::NonX,
            z: None,
            witness: None,
            warning: Some(format!("borderline: j at {s} is {} but not every j vanishes", d.j(s))),
        };
    } else if positive == 12 {
        Kind::Hyperbolic
    } else if positive == 0 {
        Kind::AntiDeSitter
    } else {
        return TetClass {
            kind: Kind::NonX,
            z: None,
            witness: None,
            warning: Some("sign of j is not constant".into()),
        };
    };
    let star = kind.star().expect("X kinds have a star");
    let z = EdgeFace::ALL
        .into_iter()
        .map(|s| BNumber::new(d.x(s), if star == 0 { 0.0 } else { d.j(s).abs().sqrt() }, star))
        .collect();
    TetClass { kind, z: Some(z), witness: None, warning: None }
}

pub fn classify(tri: &Triangulation, ps: &ParamSet, tol: f64) -> Result<Classification> {
    ps.validate(tri)?;
    let mut tets: Vec<TetClass> = ps.derived().iter().map(|d| classify_tet(d, tol)).collect();
    let first = tets[0].kind;
    let uniform_kind = tets.iter().all(|t| t.kind == first).then_some(first);
    let mut half_pipe_scale = None;
    if uniform_kind == Some(Kind::HalfPipe) {
        match psi_star(tri, ps, 0, 1.0, tol) {
            Ok(z) => {
                for (t, zt) in tets.iter_mut().zip(z) {
                    t.z = Some(zt.to_vec());
                }
                half_pipe_scale = Some(1.0);
            }
            Err(e) => {
                for t in tets.iter_mut() {
                    t.warning = Some(format!("imaginary parts unavailable: {e}"));
                }
            }
        }
    }
    Ok(Classification { tets, uniform_kind, half_pipe_scale })
}

pub type ThurstonTet = [BNumber; 12];

/// Per tetrahedron, the largest residual of `z_σ = z_σ̄`, `z_σ = z_op(σ)` and
/// `z_{σ₊} = 1/(1 − z_σ)`.
pub fn thurston_internal_check(z: &[ThurstonTet]) -> Result<Vec<f64>> {
    z.iter()
        .map(|zt| {
            let mut worst: f64 = 0.0;
            for s in EdgeFace::ALL {
                let v = zt[s.index()];
                let one = BNumber::real(1.0, v.star);
                let next = (one - v).inv().map_err(|_| Error::Numerical(format!("1 − z at {s} is light-like")))?;
                worst = worst.max(v.dist(zt[s.conj().index()]));
                worst = worst.max(v.dist(zt[s.opp().index()]));
                worst = worst.max(next.dist(zt[s.succ().index()]));
            }
            Ok(worst)
        })
        .collect()
}

/// Per edge class, the distance of `∏ z` from 1, or for a cone edge of
/// order `n` (hyperbolic only) from the nearer of `exp(±2πι/n)`.
pub fn thurston_gluing_check(z: &[ThurstonTet], tri: &Triangulation) -> Result<Vec<f64>> {
    if z.len() != tri.num_tets() {
        return Err(Error::Params(format!("{} Thurston tetrahedra for {} tetrahedra", z.len(), tri.num_tets())));
    }
    let star = z[0][0].star;
    tri.edge_cycles()
        .iter()
        .map(|c| {
            let prod = c.slots.iter().fold(BNumber::real(1.0, star), |p, s| p * z[s.tet][s.outgoing.index()]);
            if c.order <= 1 {
                return Ok(prod.dist(BNumber::real(1.0, star)));
            }
            if star != -1 {
                return Err(Error::Params(format!("cone edge {} needs hyperbolic parameters", c.id)));
            }
            let th = 2.0 * std::f64::consts::PI / c.order as f64;
            let a = prod.dist(BNumber::new(th.cos(), th.sin(), star));
            let b = prod.dist(BNumber::new(th.cos(), -th.sin(), star));
            Ok(a.min(b))
        })
        .collect()
}

/// Flag parameters of Thurston parameters: `e = |z|²` and
/// `κ^T_σ = Im z^T_σ / Im z^{T'}_τ`.
pub fn phi_star(z: &[ThurstonTet], tri: &Triangulation, star: i8) -> Result<ParamSet> {
    if z.len() != tri.num_tets() {
        return Err(Error::Params(format!("{} Thurston tetrahedra for {} tetrahedra", z.len(), tri.num_tets())));
    }
    for (t, zt) in z.iter().enumerate() {
        for s in EdgeFace::ALL {
            let v = zt[s.index()];
            if v.star != star {
                return Err(Error::Params(format!("{t}:{s}: parameter has ι² = {}, expected {star}", v.star)));
            }
            if v.im.is_nan() || v.im <= 0.0 {
                return Err(Error::Params(format!("{t}:{s}: imaginary part {} is not positive", v.im)));
            }
            if !v.is_space_like() || !(BNumber::real(1.0, star) - v).is_space_like() {
                return Err(Error::Params(format!("{t}:{s}: z or 1 − z is not space-like")));
            }
        }
    }
    let shapes = z
        .iter()
        .map(|zt| {
            let mut e = [0.0; 6];
            for s in EdgeFace::ALL {
                e[s.edge_index()] = zt[s.index()].norm2();
            }
            TetShape::new(e)
        })
        .collect::<Result<Vec<_>>>()?;
    let gluing = tri
        .face_classes()
        .iter()
        .map(|fc| {
            let ((t, s), (t2, tau)) = (fc.canonical, fc.partner);
            z[t][s.index()].im / z[t2][tau.index()].im
        })
        .collect();
    Ok(ParamSet { shapes, gluing })
}

/// Diagnostics for membership in the image of [`phi_star`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SStarReport {
    pub star: i8,
    /// Largest `|log e_σ − log e_op(σ)|`.
    pub opposite_edges: f64,
    /// Largest `|j_σ − κ_σ² j_τ| / e_σ` over glued pairs.
    pub j_gluing: f64,
    /// Largest violation of the sign condition on `j`, relative to `e`.
    pub j_sign: f64,
    pub pass: bool,
}

pub fn check_s_star(tri: &Triangulation, ps: &ParamSet, star: i8, tol: f64) -> Result<SStarReport> {
    ps.validate(tri)?;
    if !matches!(star, -1..=1) {
        return Err(Error::Params(format!("star must be -1, 0 or 1, not {star}")));
    }
    let d = ps.derived();
    let g = ps.complete_gluings(tri);
    let (mut opposite_edges, mut j_gluing, mut j_sign): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for (t, dt) in d.iter().enumerate() {
        for s in EdgeFace::ALL {
            opposite_edges = opposite_edges.max((dt.e(s).ln() - dt.e(s.opp()).ln()).abs());
            let (t2, tau) = tri.partner(t, s);
            let k = g.get(t, s);
            j_gluing = j_gluing.max((dt.j(s) - k * k * d[t2].j(tau)).abs() / dt.e(s));
            let rel = dt.j(s) / dt.e(s);
            let violation = match star {
                -1 => (-rel).max(0.0),
                1 => rel.max(0.0),
                _ => rel.abs(),
            };
            j_sign = j_sign.max(violation);
        }
    }
    // A strict sign is required for star = ±1.
    let strict_ok = match star {
        0 => true,
        _ => d.iter().all(|dt| EdgeFace::ALL.into_iter().all(|s| dt.j(s) * (-star as f64) > 0.0)),
    };
    let pass = opposite_edges <= tol && j_gluing <= tol && j_sign <= tol && strict_ok;
    Ok(SStarReport { star, opposite_edges, j_gluing, j_sign, pass })
}

/// Thurston parameters of flag parameters in the image of [`phi_star`]:
/// `z = X + ι δ`. For `star = ±1`, `δ = √|j|`. For `star = 0` the imaginary
/// parts are propagated from `δ = scale` at `0:(12)3` through
/// `δ_{σ₊} = e_{σ₊} δ_σ` and `δ^T_σ = κ^T_σ δ^{T'}_τ`.
pub fn psi_star(tri: &Triangulation, ps: &ParamSet, star: i8, scale: f64, tol: f64) -> Result<Vec<ThurstonTet>> {
    let report = check_s_star(tri, ps, star, tol)?;
    if !report.pass {
        return Err(Error::Params(format!(
            "parameters are not in the image for ι² = {star} (opposite edges {:.3e}, j gluing {:.3e}, j sign {:.3e})",
            report.opposite_edges, report.j_gluing, report.j_sign
        )));
    }
    let d = ps.derived();
    let n = tri.num_tets();
    let delta: Vec<[f64; 12]> = if star != 0 {
        d.iter().map(|dt| dt.j.map(|j| j.abs().sqrt())).collect()
    } else {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::Params(format!("half-pipe scale {scale} is not positive")));
        }
        let g = ps.complete_gluings(tri);
        let mut delta: Vec<[Option<f64>; 12]> = vec![[None; 12]; n];
        let start = (0usize, EdgeFace::ALL[0]);
        delta[0][0] = Some(scale);
        let mut queue = VecDeque::from([start]);
        while let Some((t, s)) = queue.pop_front() {
            let v = delta[t][s.index()].expect("queued values are set");
            let (t2, tau) = tri.partner(t, s);
            let dt = &d[t];
            let next = [
                ((t, s.succ()), dt.e(s.succ()) * v),
                ((t, s.pred()), v / dt.e(s)),
                ((t, s.conj()), v),
                ((t, s.opp()), v),
                ((t2, tau), v / g.get(t, s)),
            ];
            for ((tn, sn), val) in next {
                match delta[tn][sn.index()] {
                    None => {
                        delta[tn][sn.index()] = Some(val);
                        queue.push_back((tn, sn));
                    }
                    Some(old) if (old - val).abs() <= 1e-8 * old.abs().max(val.abs()) => {}
                    Some(old) => {
                        return Err(Error::Numerical(format!(
                            "imaginary parts at {tn}:{sn} are inconsistent ({old} vs {val})"
                        )))
                    }
                }
            }
        }
        delta.into_iter().map(|row| row.map(|v| v.expect("the triangulation is connected"))).collect()
    };
    Ok(d.iter()
        .zip(delta)
        .map(|(dt, del)| {
            let mut zt = [BNumber::real(0.0, star); 12];
            for s in EdgeFace::ALL {
                zt[s.index()] = BNumber::new(dt.x(s), del[s.index()], star);
            }
            zt
        })
        .collect())
}

/// The quadric of the hyperbolic structure in the σ-standard frame of a
/// hyperbolic tetrahedron with `δ² = j_σ`: every vertex of every ideal
/// tetrahedron lies on it and interiors lie on its negative side.
pub fn hyperbolic_quadric(delta_sq: f64) -> Mat4 {
    Mat4::new(
        0.0,
        -1.0,
        0.0,
        0.0, //
        -1.0,
        0.0,
        0.0,
        0.0, //
        0.0,
        0.0,
        2.0,
        0.0, //
        0.0,
        0.0,
        0.0,
        2.0 * delta_sq,
    )
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuadricCheck {
    /// Largest `|vᵀJv| / (‖J‖‖v‖²)` over developed vertices.
    pub vertex_residual: f64,
    /// Largest `cᵀJc / (‖J‖‖c‖²)` over barycentres of developed tetrahedra.
    pub interior_value: f64,
}

/// Checks developed copies against a quadric form.
pub fn quadric_check(copies: &[DevelopedTet], j: &Mat4) -> Result<QuadricCheck> {
    let jn = j.norm();
    let q = |v: &Vec4| (v.transpose() * j * v)[(0, 0)] / (jn * v.norm_squared());
    let mut vertex_residual: f64 = 0.0;
    let mut interior_value = f64::NEG_INFINITY;
    for c in copies {
        let pts: Vec<Vec4> = c.flags.flags.iter().map(|f| f.point).collect();
        for p in &pts {
            vertex_residual = vertex_residual.max(q(p).abs());
        }
        let centre = barycentre(&c.flags).ok_or_else(|| {
            Error::Degenerate(format!("copy {}: no sign choice puts the vertices on one side of every face", c.id))
        })?;
        interior_value = interior_value.max(q(&centre));
    }
    Ok(QuadricCheck { vertex_residual, interior_value })
}

/// A point inside the projective tetrahedron cut out by the flags' planes:
/// signs are chosen so each plane takes one sign on the three other vertices.
pub fn barycentre(f: &crate::flags::TetOfFlags) -> Option<Vec4> {
    for bits in 0..8u8 {
        let signs = [
            1.0,
            if bits & 1 == 0 { 1.0 } else { -1.0 },
            if bits & 2 == 0 { 1.0 } else { -1.0 },
            if bits & 4 == 0 { 1.0 } else { -1.0 },
        ];
        let pts: Vec<Vec4> = (0..4).map(|a| f.flags[a].point * signs[a]).collect();
        let ok = (0..4).all(|b| {
            let vals: Vec<f64> = (0..4).filter(|&a| a != b).map(|a| f.flags[b].plane.dot(&pts[a])).collect();
            vals.iter().all(|v| *v > 0.0) || vals.iter().all(|v| *v < 0.0)
        });
        if ok {
            return Some(pts.iter().fold(Vec4::zeros(), |acc, p| acc + p));
        }
    }
    None
}
