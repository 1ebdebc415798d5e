//! Incomplete flags in RP³, tetrahedra of flags, and the projective
//! invariants computed directly from explicit coordinates.
//!
//! Points are column vectors and planes are covectors stored as vectors; a
//! plane `η` pairs with a point `V` as `η · V`. A projective map `A` acts by
//! `V ↦ A V` and `η ↦ η A⁻¹`.

use nalgebra::{Matrix4, Vector4};
use rand::Rng;
use serde::Serialize;

use crate::edgeface::EdgeFace;
use crate::error::{Error, Result};
use crate::params::TetShape;

pub type Vec4 = Vector4<f64>;
pub type Mat4 = Matrix4<f64>;

/// Pairings below this fraction of `‖η‖‖V‖` count as zero.
pub const DEGENERACY_TOL: f64 = 1e-12;
/// Relative tolerance for incidence and for projective equality of vectors.
pub const INCIDENCE_TOL: f64 = 1e-9;
/// Sine of the largest angle accepted between a normalized flag and its
/// standard position. Looser than [`INCIDENCE_TOL`] because the normalizing
/// map can be badly conditioned for extreme ratios.
const EQUIVALENCE_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Flag {
    pub point: Vec4,
    pub plane: Vec4,
}

impl Flag {
    /// A flag, checked for incidence.
    pub fn new(point: Vec4, plane: Vec4) -> Result<Self> {
        let f = Flag { point, plane };
        if point.norm() == 0.0 || plane.norm() == 0.0 {
            return Err(Error::Degenerate("zero point or plane".into()));
        }
        if !f.is_incident(INCIDENCE_TOL) {
            return Err(Error::Degenerate(format!("plane does not contain the point (pairing {})", plane.dot(&point))));
        }
        Ok(f)
    }

    pub fn is_incident(&self, rel_tol: f64) -> bool {
        self.plane.dot(&self.point).abs() <= rel_tol * self.plane.norm() * self.point.norm()
    }

    pub fn transformed(&self, a: &Mat4, a_inv: &Mat4) -> Flag {
        Flag { point: a * self.point, plane: a_inv.transpose() * self.plane }
    }
}

/// Four flags indexed by vertex label `1..=4`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TetOfFlags {
    pub flags: [Flag; 4],
}

impl TetOfFlags {
    pub fn flag(&self, v: u8) -> &Flag {
        &self.flags[v as usize - 1]
    }

    pub fn point(&self, v: u8) -> Vec4 {
        self.flag(v).point
    }

    pub fn plane(&self, v: u8) -> Vec4 {
        self.flag(v).plane
    }

    /// `η_a(V_b)`.
    pub fn pairing(&self, a: u8, b: u8) -> f64 {
        self.plane(a).dot(&self.point(b))
    }

    /// Image under the projective map `a`.
    pub fn transformed(&self, a: &Mat4) -> Result<TetOfFlags> {
        let inv = a.try_inverse().ok_or_else(|| Error::Degenerate("singular projective map".into()))?;
        Ok(TetOfFlags { flags: self.flags.map(|f| f.transformed(a, &inv)) })
    }

    /// Checks nonzero vectors, incidence, nondegeneracy and general position.
    pub fn check_nondegenerate(&self) -> Result<()> {
        for v in 1..=4u8 {
            let f = self.flag(v);
            if f.point.norm() == 0.0 || f.plane.norm() == 0.0 {
                return Err(Error::Degenerate(format!("flag {v} has a zero point or plane")));
            }
            if !f.is_incident(INCIDENCE_TOL) {
                return Err(Error::Degenerate(format!("flag {v} is not incident")));
            }
        }
        for a in 1..=4u8 {
            for b in 1..=4u8 {
                if a != b {
                    let scale = self.plane(a).norm() * self.point(b).norm();
                    if self.pairing(a, b).abs() < DEGENERACY_TOL * scale {
                        return Err(Error::Degenerate(format!("degenerate: plane {a} contains point {b}")));
                    }
                }
            }
        }
        let m = Mat4::from_columns(&[self.point(1), self.point(2), self.point(3), self.point(4)]);
        let scale: f64 = (1..=4u8).map(|v| self.point(v).norm()).product();
        if m.determinant().abs() < DEGENERACY_TOL * scale {
            return Err(Error::Degenerate("points are not in general position".into()));
        }
        Ok(())
    }

    pub fn edge_ratio(&self, sigma: EdgeFace) -> Result<f64> {
        self.check_nondegenerate()?;
        Ok(self.edge_ratio_unchecked(sigma))
    }

    fn edge_ratio_unchecked(&self, sigma: EdgeFace) -> f64 {
        let [i, j, k, l] = sigma.perm();
        self.pairing(i, k) * self.pairing(j, l) / (self.pairing(i, l) * self.pairing(j, k))
    }

    /// Triple ratio of the face of `sigma`, i.e. of the flags `i, j, k`.
    pub fn triple_ratio(&self, sigma: EdgeFace) -> Result<f64> {
        self.check_nondegenerate()?;
        triple_ratio([self.flag(sigma.i()), self.flag(sigma.j()), self.flag(sigma.k())])
    }

    /// All 12 edge ratios and 12 triple ratios, indexed by [`EdgeFace::index`].
    pub fn ratios(&self) -> Result<Ratios> {
        self.check_nondegenerate()?;
        let mut r = Ratios { e: [0.0; 12], t: [0.0; 12] };
        for s in EdgeFace::ALL {
            r.e[s.index()] = self.edge_ratio_unchecked(s);
            r.t[s.index()] = triple_ratio([self.flag(s.i()), self.flag(s.j()), self.flag(s.k())])?;
        }
        Ok(r)
    }
}

/// Ratios extracted from explicit flags.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ratios {
    pub e: [f64; 12],
    pub t: [f64; 12],
}

impl Ratios {
    pub fn all_positive(&self) -> bool {
        self.e.iter().chain(&self.t).all(|v| *v > 0.0)
    }

    /// Largest violation, in log scale, of the internal consistency
    /// equations. Ratios must be positive.
    pub fn internal_consistency(&self) -> f64 {
        let (e, t) = (&self.e, &self.t);
        let ln = |v: f64| v.ln();
        let mut worst: f64 = 0.0;
        for s in EdgeFace::ALL {
            let n = s.index();
            worst = worst.max(ln(t[n] / t[s.succ().index()]).abs());
            worst = worst.max(ln(e[n] / e[s.conj().index()]).abs());
            worst = worst.max(ln(t[n] * e[n] * e[s.succ().index()] * e[s.pred().index()]).abs());
            let opp = e[s.opp().index()] * e[s.succ().opp().index()] * e[s.pred().opp().index()];
            worst = worst.max(ln(t[n] / opp).abs());
        }
        let star: f64 = e.iter().map(|v| v.ln()).sum::<f64>() / 2.0;
        worst.max(star.abs())
    }
}

/// `η₁(V₂)η₂(V₃)η₃(V₁) / (η₁(V₃)η₂(V₁)η₃(V₂))`.
pub fn triple_ratio(f: [&Flag; 3]) -> Result<f64> {
    let p = |a: usize, b: usize| f[a].plane.dot(&f[b].point);
    for a in 0..3 {
        for b in 0..3 {
            if a != b && p(a, b).abs() < DEGENERACY_TOL * f[a].plane.norm() * f[b].point.norm() {
                return Err(Error::Degenerate(format!("degenerate triple: pairing ({}, {}) vanishes", a + 1, b + 1)));
            }
        }
    }
    Ok(p(0, 1) * p(1, 2) * p(2, 0) / (p(0, 2) * p(1, 0) * p(2, 1)))
}

/// A value on the projective line: finite or the point at infinity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Extended {
    Finite(f64),
    Infinity,
}

impl Extended {
    fn homogeneous(self) -> [f64; 2] {
        match self {
            Extended::Finite(x) => [x, 1.0],
            Extended::Infinity => [1.0, 0.0],
        }
    }
}

impl From<f64> for Extended {
    fn from(x: f64) -> Self {
        if x.is_infinite() {
            Extended::Infinity
        } else {
            Extended::Finite(x)
        }
    }
}

fn bracket(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn cross_ratio_homogeneous(x: [[f64; 2]; 4]) -> Result<f64> {
    let scale: f64 = x.iter().map(|v| v[0].hypot(v[1])).fold(0.0, f64::max);
    for a in 0..4 {
        for b in a + 1..4 {
            if bracket(x[a], x[b]).abs() <= 1e-14 * scale * scale {
                return Err(Error::Degenerate(format!("cross ratio: points {} and {} coincide", a + 1, b + 1)));
            }
        }
    }
    Ok(bracket(x[0], x[2]) * bracket(x[1], x[3]) / (bracket(x[0], x[3]) * bracket(x[1], x[2])))
}

/// `(x1−x3)(x2−x4) / ((x1−x4)(x2−x3))` on the extended real line. The four
/// values must be distinct.
pub fn cross_ratio(x: [Extended; 4]) -> Result<f64> {
    cross_ratio_homogeneous(x.map(Extended::homogeneous))
}

/// Cross ratio of four collinear homogeneous vectors (points on a line, or
/// planes in a pencil), measured in the basis given by the first two.
pub fn cross_ratio_collinear(v: [Vec4; 4]) -> Result<f64> {
    let basis = nalgebra::Matrix4x2::from_columns(&[v[0], v[1]]);
    let svd = basis.svd(true, true);
    let coords = |w: &Vec4| -> Result<[f64; 2]> {
        let c = svd.solve(w, 1e-14).map_err(|e| Error::Degenerate(e.into()))?;
        let resid = (basis * c - w).norm();
        if resid > INCIDENCE_TOL * w.norm() {
            return Err(Error::Degenerate("cross ratio: vectors are not collinear".into()));
        }
        Ok([c[0], c[1]])
    };
    if v[0].norm() == 0.0 || v[1].norm() == 0.0 || bracket_rank(&basis) {
        return Err(Error::Degenerate("cross ratio: first two vectors coincide".into()));
    }
    cross_ratio_homogeneous([[1.0, 0.0], [0.0, 1.0], coords(&v[2])?, coords(&v[3])?])
}

fn bracket_rank(basis: &nalgebra::Matrix4x2<f64>) -> bool {
    let sv = basis.singular_values();
    sv[1] <= 1e-12 * sv[0]
}

/// The vector orthogonal to `a`, `b`, `c` (generalized cross product). For
/// points it is the plane through them; for planes, their common point.
pub fn wedge3(a: &Vec4, b: &Vec4, c: &Vec4) -> Vec4 {
    let m = nalgebra::Matrix3x4::from_rows(&[a.transpose(), b.transpose(), c.transpose()]);
    let minor = |skip: usize| {
        let cols: Vec<usize> = (0..4).filter(|&x| x != skip).collect();
        nalgebra::Matrix3::from_fn(|r, q| m[(r, cols[q])]).determinant()
    };
    Vec4::new(-minor(0), minor(1), -minor(2), minor(3))
}

/// True when `u` and `v` span the same line, relative to their norms.
pub fn proportional(u: &Vec4, v: &Vec4, rel_tol: f64) -> bool {
    let (nu, nv) = (u.norm(), v.norm());
    if nu == 0.0 || nv == 0.0 {
        return false;
    }
    let (a, b) = (u / nu, v / nv);
    (a - b).norm().min((a + b).norm()) <= rel_tol
}

/// Gluing parameter of the pair `(F, E)` glued along `(σ, τ)`: the value of
/// the Glue matrix that places `E` against `F`. Reciprocal under swapping the
/// two sides.
pub fn gluing_parameter(f: &TetOfFlags, e: &TetOfFlags, sigma: EdgeFace, tau: EdgeFace) -> Result<f64> {
    f.check_nondegenerate()?;
    e.check_nondegenerate()?;
    let [i, j, k, l] = sigma.perm();
    let matched = [(i, tau.j()), (j, tau.i()), (k, tau.k())];
    for (a, b) in matched {
        let (fa, eb) = (f.flag(a), e.flag(b));
        if !proportional(&fa.point, &eb.point, 1e-8) || !proportional(&fa.plane, &eb.plane, 1e-8) {
            return Err(Error::Degenerate(format!(
                "flags are not glued along ({sigma}, {tau}): vertex {a} does not match vertex {b}"
            )));
        }
    }
    let w = e.point(tau.l());
    let eta_ijk = wedge3(&f.point(i), &f.point(j), &f.point(k));
    Ok(-f.pairing(i, l) * f.pairing(j, k) * eta_ijk.dot(&w)
        / (f.pairing(i, k) * f.plane(j).dot(&w) * eta_ijk.dot(&f.point(l))))
}

/// The σ-standard representative: `V_i = e₁`, `V_j = e₂`, `V_k = [1,1,1,0]`,
/// `V_l = [e_σ, 1, X_σ, −1]` with the matching planes.
pub fn standard_representative(shape: &TetShape, sigma: EdgeFace) -> Result<TetOfFlags> {
    let shape = TetShape::new(shape.0)?;
    let d = shape.derive();
    let c = sigma.conj();
    let t = d.t(sigma);
    let (tc, mu_c) = (d.t(c), d.mu(c));
    let x = d.x(sigma);
    let [i, j, k, l] = sigma.perm();
    let mut flags = [Flag { point: Vec4::zeros(), plane: Vec4::zeros() }; 4];
    flags[i as usize - 1] = Flag { point: Vec4::new(1.0, 0.0, 0.0, 0.0), plane: Vec4::new(0.0, 1.0, 0.0, 0.0) };
    flags[j as usize - 1] = Flag { point: Vec4::new(0.0, 1.0, 0.0, 0.0), plane: Vec4::new(1.0, 0.0, 0.0, 0.0) };
    flags[k as usize - 1] = Flag { point: Vec4::new(1.0, 1.0, 1.0, 0.0), plane: Vec4::new(t, 1.0, -(t + 1.0), 0.0) };
    // The last entry equals μ_c (Y_c − X_σ) but stays finite when μ_c = 0.
    flags[l as usize - 1] = Flag {
        point: Vec4::new(d.e(sigma), 1.0, x, -1.0),
        plane: Vec4::new(d.e(c.pred()) * d.e(c.succ()), 1.0, -mu_c, (tc + 1.0) / tc - mu_c * x),
    };
    Ok(TetOfFlags { flags })
}

/// Outcome of [`is_tet_of_flags`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TetCheck {
    pub ok: bool,
    pub reason: Option<String>,
}

impl TetCheck {
    fn fail(reason: impl Into<String>) -> Self {
        TetCheck { ok: false, reason: Some(reason.into()) }
    }
}

/// Decides whether four flags form a tetrahedron of flags: nondegenerate,
/// points in general position, all ratios positive, and projectively
/// equivalent to the standard representative of their ratios.
///
/// The equivalence is constructive. With `σ = (12)3`, the map sending
/// `V₁, V₂, V₃` and the common point of `η₁, η₂, η₃` to their standard
/// positions, normalized by `V₄`, must carry every flag onto the standard one.
pub fn is_tet_of_flags(q: &TetOfFlags) -> TetCheck {
    if let Err(e) = q.check_nondegenerate() {
        return TetCheck::fail(e.to_string());
    }
    let r = match q.ratios() {
        Ok(r) => r,
        Err(e) => return TetCheck::fail(e.to_string()),
    };
    if let Some(s) = EdgeFace::ALL.into_iter().find(|s| r.e[s.index()] <= 0.0) {
        return TetCheck::fail(format!("edge ratio at {s} is not positive"));
    }
    if let Some(s) = EdgeFace::ALL.into_iter().find(|s| r.t[s.index()] <= 0.0) {
        return TetCheck::fail(format!("triple ratio at {s} is not positive"));
    }
    let shape = match TetShape::from_full(&r.e, 1e-8) {
        Ok(s) => s,
        Err(e) => return TetCheck::fail(e.to_string()),
    };
    let sigma = EdgeFace::ALL[0];
    let std = match standard_representative(&shape, sigma) {
        Ok(s) => s,
        Err(e) => return TetCheck::fail(e.to_string()),
    };
    let frame = |t: &TetOfFlags| -> Option<Mat4> {
        let [i, j, k, l] = sigma.perm();
        let p = wedge3(&t.plane(i), &t.plane(j), &t.plane(k));
        let m = Mat4::from_columns(&[t.point(i), t.point(j), t.point(k), p]);
        let c = m.lu().solve(&t.point(l))?;
        if c.iter().any(|v| v.abs() < DEGENERACY_TOL * c.norm()) {
            return None;
        }
        Some(m * Mat4::from_diagonal(&c))
    };
    let (Some(fq), Some(fs)) = (frame(q), frame(&std)) else {
        return TetCheck::fail("standardizing frame is degenerate");
    };
    let Some(fq_inv) = fq.try_inverse() else {
        return TetCheck::fail("standardizing frame is singular");
    };
    let a = fs * fq_inv;
    let moved = match q.transformed(&a) {
        Ok(m) => m,
        Err(e) => return TetCheck::fail(e.to_string()),
    };
    for v in 1..=4u8 {
        let (got, want) = (moved.flag(v), std.flag(v));
        if line_distance(&got.point, &want.point) > EQUIVALENCE_TOL
            || line_distance(&got.plane, &want.plane) > EQUIVALENCE_TOL
        {
            return TetCheck::fail(format!("flag {v} does not match its standard position"));
        }
    }
    TetCheck { ok: true, reason: None }
}

/// A random tetrahedron of flags: log-uniform edge ratios in `[1/10, 10]`
/// (the last one fixed by the vertex-star equation), pushed through the
/// standard representative and moved by a random map with condition number
/// below 10³.
pub fn random_tet_of_flags<R: Rng + ?Sized>(rng: &mut R) -> (TetShape, TetOfFlags) {
    let shape = random_shape(rng);
    let sigma = EdgeFace::ALL[rng.gen_range(0..12)];
    let std = standard_representative(&shape, sigma).expect("random shapes are valid");
    let a = random_projective_map(rng);
    (shape, std.transformed(&a).expect("random map is invertible"))
}

/// Log-uniform positive edge ratios whose product is 1.
pub fn random_shape<R: Rng + ?Sized>(rng: &mut R) -> TetShape {
    let mut e = [1.0; 6];
    let mut log_sum = 0.0;
    for v in e.iter_mut().take(5) {
        let l = rng.gen_range(-10f64.ln()..10f64.ln());
        *v = l.exp();
        log_sum += l;
    }
    e[5] = (-log_sum).exp();
    TetShape(e)
}

/// A random invertible 4×4 matrix with condition number below 10³.
pub fn random_projective_map<R: Rng + ?Sized>(rng: &mut R) -> Mat4 {
    loop {
        let m = Mat4::from_fn(|_, _| rng.gen_range(-1.0..1.0));
        let sv = m.singular_values();
        if sv.min() > 0.0 && sv.max() / sv.min() < 1e3 {
            return m;
        }
    }
}

/// A 4×4 matrix up to nonzero scale.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjMatrix(pub Mat4);

impl ProjMatrix {
    pub fn identity() -> Self {
        ProjMatrix(Mat4::identity())
    }

    pub fn from_row_major(v: &[f64; 16]) -> Self {
        ProjMatrix(Mat4::from_row_slice(v))
    }

    pub fn row_major(&self) -> [f64; 16] {
        let mut out = [0.0; 16];
        for r in 0..4 {
            for c in 0..4 {
                out[4 * r + c] = self.0[(r, c)];
            }
        }
        out
    }

    /// Divided by its Frobenius norm, with the first entry (row-major) of
    /// largest magnitude made positive.
    pub fn normal_form(&self) -> Result<Mat4> {
        let n = self.0.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::Numerical("projective matrix is zero or not finite".into()));
        }
        let m = self.0 / n;
        let rm = ProjMatrix(m).row_major();
        let max = rm.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let lead = rm.iter().find(|v| v.abs() >= max * (1.0 - 1e-12)).copied().unwrap_or(1.0);
        Ok(if lead < 0.0 { -m } else { m })
    }

    /// Frobenius distance between normal forms. Both signs are compared so
    /// that near-ties in the sign convention cannot inflate the distance.
    pub fn distance(&self, other: &ProjMatrix) -> f64 {
        match (self.normal_form(), other.normal_form()) {
            (Ok(a), Ok(b)) => (a - b).norm().min((a + b).norm()),
            _ => f64::INFINITY,
        }
    }

    pub fn distance_to_identity(&self) -> f64 {
        self.distance(&ProjMatrix::identity())
    }

    pub fn inverse(&self) -> Result<ProjMatrix> {
        self.0.try_inverse().map(ProjMatrix).ok_or_else(|| Error::Numerical("matrix is singular".into()))
    }

    pub fn mul(&self, other: &ProjMatrix) -> ProjMatrix {
        ProjMatrix(self.0 * other.0)
    }

    /// How far the matrix is from fixing the flag `(point, plane)`: the sum of
    /// the relative distances of the image point and plane from the originals.
    pub fn flag_displacement(&self, point: &Vec4, plane: &Vec4) -> f64 {
        let img_point = self.0 * point;
        let img_plane = self.0.transpose() * plane;
        line_distance(&img_point, point) + line_distance(&img_plane, plane)
    }
}

/// Distance between the lines spanned by `u` and `v`: the sine of the angle.
pub fn line_distance(u: &Vec4, v: &Vec4) -> f64 {
    let (nu, nv) = (u.norm(), v.norm());
    if nu == 0.0 || nv == 0.0 {
        return f64::INFINITY;
    }
    // The rejection of one unit vector from the other is the sine of the
    // angle, without the cancellation of sqrt(1 - cos^2) near zero.
    let (a, b) = (u / nu, v / nv);
    (a - b * a.dot(&b)).norm().min(1.0)
}
