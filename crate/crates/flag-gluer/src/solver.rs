//! Damped least-squares solving of the full gluing system in log coordinates,
//! with pinned variables and one-parameter continuation.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use twofloat::TwoFloat;

use crate::edgeface::{EdgeFace, EDGES};
use crate::error::{Error, Result};
use crate::monodromy::rotation_trace;
use crate::params::{ParamSet, TetShape};
use crate::triangulation::Triangulation;

/// Forward-difference step in log coordinates.
pub const FD_STEP: f64 = 1e-7;
const CENTRAL_STEP: f64 = 1e-5;
const DIVERGENCE_NORM: f64 = 1e6;
/// Solutions further than this from the origin in log coordinates are
/// treated as divergent.
const MAX_LOG: f64 = 40.0;

/// A coordinate of the parameter space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Variable {
    /// Edge ratio of tetrahedron `tet` on edge `edge` (index into [`EDGES`]).
    Edge { tet: usize, edge: usize },
    /// Free gluing parameter of a face class.
    Gluing { class: usize },
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Variable::Edge { tet, edge } => {
                let (a, b) = EDGES[edge];
                write!(f, "tet{tet}:e{a}{b}")
            }
            Variable::Gluing { class } => write!(f, "face{class}:g"),
        }
    }
}

impl FromStr for Variable {
    type Err = Error;

    /// Accepts `tet0:e12`, `0:(12)3` and `face2:g`.
    fn from_str(text: &str) -> Result<Self> {
        let text = text.trim();
        let bad = || Error::Parse(format!("'{text}' is not a variable name (try 'tet0:e12', '0:(12)3' or 'face0:g')"));
        if let Some(rest) = text.strip_prefix("face") {
            let class = rest.strip_suffix(":g").ok_or_else(bad)?.parse().map_err(|_| bad())?;
            return Ok(Variable::Gluing { class });
        }
        if let Some(rest) = text.strip_prefix("tet") {
            let (t, e) = rest.split_once(":e").ok_or_else(bad)?;
            let tet = t.parse().map_err(|_| bad())?;
            let digits: Vec<u8> = e.bytes().map(|b| b.wrapping_sub(b'0')).collect();
            let edge = match digits.as_slice() {
                [a, b] => EDGES.iter().position(|&(x, y)| (x, y) == (*a.min(b), *a.max(b)) && a != b),
                _ => None,
            }
            .ok_or_else(bad)?;
            return Ok(Variable::Edge { tet, edge });
        }
        let (tet, sigma) = crate::params::parse_slot(text).map_err(|_| bad())?;
        Ok(Variable::Edge { tet, edge: sigma.edge_index() })
    }
}

/// Parses `name=value`.
pub fn parse_pin(text: &str) -> Result<(Variable, f64)> {
    let (name, value) =
        text.split_once('=').ok_or_else(|| Error::Parse(format!("pin '{text}' must have the form name=value")))?;
    let value: f64 =
        value.trim().parse().map_err(|_| Error::Parse(format!("pin '{text}': '{}' is not a number", value.trim())))?;
    Ok((name.parse()?, value))
}

/// The gluing system of a triangulation with some variables held fixed.
#[derive(Clone, Debug)]
pub struct ResidualSystem {
    tri: Triangulation,
    variables: Vec<Variable>,
    pins: Vec<(Variable, f64)>,
    free: Vec<usize>,
}

impl ResidualSystem {
    pub fn assemble(tri: &Triangulation, pins: &[(Variable, f64)]) -> Result<Self> {
        let n = tri.num_tets();
        let variables: Vec<Variable> = (0..n)
            .flat_map(|tet| (0..6).map(move |edge| Variable::Edge { tet, edge }))
            .chain((0..tri.face_classes().len()).map(|class| Variable::Gluing { class }))
            .collect();
        let mut kept: Vec<(Variable, f64)> = Vec::new();
        for &(v, value) in pins {
            if !variables.contains(&v) {
                return Err(Error::Params(format!("pin on {v}: no such variable")));
            }
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Params(format!("pin {v}={value}: values must be positive")));
            }
            match kept.iter().find(|(w, _)| *w == v) {
                Some(&(_, old)) if old != value => {
                    return Err(Error::Params(format!("contradictory pins {v}={old} and {v}={value}")))
                }
                Some(_) => {}
                None => kept.push((v, value)),
            }
        }
        let free = (0..variables.len()).filter(|&i| !kept.iter().any(|(v, _)| *v == variables[i])).collect();
        Ok(ResidualSystem { tri: tri.clone(), variables, pins: kept, free })
    }

    pub fn triangulation(&self) -> &Triangulation {
        &self.tri
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn pins(&self) -> &[(Variable, f64)] {
        &self.pins
    }

    pub fn num_free(&self) -> usize {
        self.free.len()
    }

    pub fn with_pin(&self, v: Variable, value: f64) -> Result<Self> {
        let mut pins: Vec<_> = self.pins.iter().copied().filter(|(w, _)| *w != v).collect();
        pins.push((v, value));
        ResidualSystem::assemble(&self.tri, &pins)
    }

    /// Names of the residuals, in evaluation order.
    pub fn residual_names(&self) -> Vec<String> {
        let mut names: Vec<String> = (0..self.tri.num_tets()).map(|t| format!("tet{t}:internal")).collect();
        names.extend((0..self.tri.face_classes().len()).map(|c| format!("face{c}:triple")));
        for c in self.tri.edge_cycles() {
            let parts: &[&str] =
                if c.order <= 1 { &["g11", "g33", "g44", "g34", "g43"] } else { &["g11", "trace", "det"] };
            names.extend(parts.iter().map(|p| format!("edge{}:{p}", c.id)));
        }
        names
    }

    pub fn num_residuals(&self) -> usize {
        self.tri.num_tets()
            + self.tri.face_classes().len()
            + self.tri.edge_cycles().iter().map(|c| if c.order <= 1 { 5 } else { 3 }).sum::<usize>()
    }

    /// Log coordinates of all variables.
    pub fn to_logs(&self, ps: &ParamSet) -> Vec<f64> {
        self.variables
            .iter()
            .map(|v| match *v {
                Variable::Edge { tet, edge } => ps.shapes[tet].0[edge].ln(),
                Variable::Gluing { class } => ps.gluing[class].ln(),
            })
            .collect()
    }

    pub fn from_logs(&self, x: &[f64]) -> ParamSet {
        let n = self.tri.num_tets();
        let shapes = (0..n).map(|t| TetShape(std::array::from_fn(|e| x[6 * t + e].exp()))).collect();
        let gluing = x[6 * n..].iter().map(|v| v.exp()).collect();
        ParamSet { shapes, gluing }
    }

    /// Free coordinates of a parameter set.
    pub fn free_logs(&self, ps: &ParamSet) -> Vec<f64> {
        let all = self.to_logs(ps);
        self.free.iter().map(|&i| all[i]).collect()
    }

    /// The parameter set with free coordinates `y` and every pin applied.
    pub fn params_at(&self, y: &[f64]) -> ParamSet {
        let mut x = vec![0.0; self.variables.len()];
        for (&i, &v) in self.free.iter().zip(y) {
            x[i] = v;
        }
        let mut ps = self.from_logs(&x);
        for &(v, value) in &self.pins {
            match v {
                Variable::Edge { tet, edge } => ps.shapes[tet].0[edge] = value,
                Variable::Gluing { class } => ps.gluing[class] = value,
            }
        }
        ps
    }

    /// Applies the pins to a parameter set.
    pub fn pinned(&self, ps: &ParamSet) -> ParamSet {
        self.params_at(&self.free_logs(ps))
    }

    /// All residuals: internal, face, then edge residuals per edge class.
    pub fn evaluate(&self, ps: &ParamSet) -> Result<Vec<f64>> {
        ps.validate(&self.tri)?;
        Ok(residuals_precise(&self.tri, &Precise::of(ps)))
    }

    fn evaluate_free(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.evaluate(&self.params_at(y))
    }

    /// Forward-difference Jacobian with respect to the free log coordinates.
    pub fn jacobian(&self, y: &[f64]) -> Result<DMatrix<f64>> {
        let r0 = self.evaluate_free(y)?;
        self.difference_jacobian(y, |col| {
            let mut yp = y.to_vec();
            yp[col] += FD_STEP;
            let rp = self.evaluate_free(&yp)?;
            Ok(rp.iter().zip(&r0).map(|(a, b)| (a - b) / FD_STEP).collect())
        })
    }

    /// Central-difference Jacobian, used to validate [`Self::jacobian`].
    pub fn central_jacobian(&self, y: &[f64]) -> Result<DMatrix<f64>> {
        self.difference_jacobian(y, |col| {
            let (mut yp, mut ym) = (y.to_vec(), y.to_vec());
            yp[col] += CENTRAL_STEP;
            ym[col] -= CENTRAL_STEP;
            let (rp, rm) = (self.evaluate_free(&yp)?, self.evaluate_free(&ym)?);
            Ok(rp.iter().zip(&rm).map(|(a, b)| (a - b) / (2.0 * CENTRAL_STEP)).collect())
        })
    }

    fn difference_jacobian<F>(&self, y: &[f64], column: F) -> Result<DMatrix<f64>>
    where
        F: Fn(usize) -> Result<Vec<f64>> + Sync + Send,
    {
        let cols: Vec<Vec<f64>> = (0..y.len()).into_par_iter().map(column).collect::<Result<_>>()?;
        let m = self.num_residuals();
        Ok(DMatrix::from_fn(m, y.len(), |r, c| cols[c][r]))
    }

    /// Largest discrepancy between forward and central differences, relative
    /// to the largest Jacobian entry.
    pub fn jacobian_discrepancy(&self, ps: &ParamSet) -> Result<f64> {
        let y = self.free_logs(ps);
        let (f, c) = (self.jacobian(&y)?, self.central_jacobian(&y)?);
        let scale = c.amax().max(1e-300);
        Ok((f - c).amax() / scale)
    }
}

/// A parameter set in double-double precision.
#[derive(Clone, Debug)]
struct Precise {
    e: Vec<[TwoFloat; 6]>,
    gluing: Vec<TwoFloat>,
}

impl Precise {
    fn of(ps: &ParamSet) -> Self {
        Precise {
            e: ps.shapes.iter().map(|s| s.0.map(TwoFloat::from)).collect(),
            gluing: ps.gluing.iter().map(|&g| TwoFloat::from(g)).collect(),
        }
    }

    fn get(&self, v: Variable) -> TwoFloat {
        match v {
            Variable::Edge { tet, edge } => self.e[tet][edge],
            Variable::Gluing { class } => self.gluing[class],
        }
    }

    fn set(&mut self, v: Variable, value: TwoFloat) {
        match v {
            Variable::Edge { tet, edge } => self.e[tet][edge] = value,
            Variable::Gluing { class } => self.gluing[class] = value,
        }
    }

    fn round(&self) -> ParamSet {
        ParamSet {
            shapes: self.e.iter().map(|e| TetShape(e.map(f64::from))).collect(),
            gluing: self.gluing.iter().map(|&g| f64::from(g)).collect(),
        }
    }
}

/// All residuals of a double-double parameter set.
fn residuals_precise(tri: &Triangulation, p: &Precise) -> Vec<f64> {
    // Accurate relative to the result, which is what matters near a root.
    let ln = |v: TwoFloat| v.hi().ln() + v.lo() / v.hi();
    let e = |t: usize, s: EdgeFace| p.e[t][s.edge_index()];
    let t_of = |t: usize, s: EdgeFace| e(t, s.opp()) * e(t, s.succ().opp()) * e(t, s.pred().opp());
    let mut out: Vec<f64> = p.e.iter().map(|row| ln(row.iter().fold(TwoFloat::from(1.0), |acc, &v| acc * v))).collect();
    for fc in tri.face_classes() {
        let ((a, s), (b, tau)) = (fc.canonical, fc.partner);
        out.push(ln(t_of(a, s) * t_of(b, tau)));
    }
    out.extend(edge_residuals_in(tri, &p.e, &p.gluing));
    out
}

/// Arithmetic used by [`edge_residuals_in`].
trait Real: Copy + std::ops::Add<Output = Self> + std::ops::Sub<Output = Self> + std::ops::Mul<Output = Self> {
    fn of(v: f64) -> Self;
    fn to_f64(self) -> f64;
    fn quot(self, other: Self) -> Self;
}

impl Real for f64 {
    fn of(v: f64) -> Self {
        v
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn quot(self, other: Self) -> Self {
        self / other
    }
}

impl Real for TwoFloat {
    fn of(v: f64) -> Self {
        TwoFloat::from(v)
    }
    fn to_f64(self) -> f64 {
        f64::from(self)
    }
    /// The crate's own quotient is only f64-accurate; one correction step
    /// restores full precision.
    fn quot(self, other: Self) -> Self {
        let q = self / other;
        q + (self - q * other) / other
    }
}

/// Edge residuals computed from the block structure of the edge matrices:
/// the upper block is `diag(∏ e, 1)` and the lower block is a product of
/// 2×2 matrices, so only scalars enter. The solver evaluates this in
/// double-double arithmetic because at degenerate roots the residual is
/// quadratic in the distance to the root.
fn edge_residuals_in<R: Real>(tri: &Triangulation, edges: &[[R; 6]], gluing: &[R]) -> Vec<f64> {
    let one = R::of(1.0);
    let e: Vec<[R; 12]> = edges.iter().map(|row| EdgeFace::ALL.map(|f| row[f.edge_index()])).collect();
    let x: Vec<[R; 12]> = e
        .iter()
        .map(|e| {
            EdgeFace::ALL.map(|s| {
                let t = e[s.opp().index()] * e[s.succ().opp().index()] * e[s.pred().opp().index()];
                let (em, ep) = (e[s.pred().index()], e[s.succ().index()]);
                let mu = em * ep - em + one;
                (mu * t * e[s.index()]).quot(t + one)
            })
        })
        .collect();
    let mut kappa = vec![[R::of(0.0); 12]; tri.num_tets()];
    for fc in tri.face_classes() {
        let (t, mut s) = fc.canonical;
        let mut cur = gluing[fc.id];
        for _ in 0..3 {
            let (t2, tau) = tri.partner(t, s);
            kappa[t][s.index()] = cur;
            kappa[t2][tau.index()] = one.quot(cur);
            s = s.succ();
            cur = cur * e[t][s.index()] * e[t2][tau.index()];
        }
    }
    let mut out = Vec::new();
    for c in tri.edge_cycles() {
        let k = c.valence();
        let mut g11 = one;
        let mut b = [[one, R::of(0.0)], [R::of(0.0), one]];
        for i in 0..k {
            let (slot, next) = (c.slots[i], c.slots[(i + 1) % k]);
            let s = slot.outgoing;
            let (ev, xv, xb) = (e[slot.tet][s.index()], x[slot.tet][s.index()], x[slot.tet][s.conj().index()]);
            let kap = kappa[next.tet][next.incoming.index()];
            // Lower block of Flip_σ · Glue(κ).
            let m = [[xb, R::of(0.0) - kap * (xv * xb - ev)], [R::of(-1.0), kap * xv]];
            b = [
                [b[0][0] * m[0][0] + b[0][1] * m[1][0], b[0][0] * m[0][1] + b[0][1] * m[1][1]],
                [b[1][0] * m[0][0] + b[1][1] * m[1][0], b[1][0] * m[0][1] + b[1][1] * m[1][1]],
            ];
            g11 = g11 * ev;
        }
        let r: Vec<R> = if c.order <= 1 {
            vec![g11 - one, b[0][0] - one, b[1][1] - one, b[0][1], b[1][0]]
        } else {
            vec![
                g11 - one,
                b[0][0] + b[1][1] - R::of(rotation_trace(c.order)),
                b[0][0] * b[1][1] - b[0][1] * b[1][0] - one,
            ]
        };
        out.extend(r.into_iter().map(R::to_f64));
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Converged,
    Stalled,
    Diverged,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Converged => "converged",
            Status::Stalled => "stalled",
            Status::Diverged => "diverged",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveResult {
    pub params: ParamSet,
    pub residual_norm: f64,
    pub iterations: usize,
    pub jacobian_rank: usize,
    pub status: Status,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Enables random restarts when the first attempt does not converge.
    pub seed: Option<u64>,
    pub restarts: usize,
    /// Refines converged points with central-difference steps.
    pub polish: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { tol: 1e-11, max_iter: 200, seed: None, restarts: 8, polish: true }
    }
}

fn norm(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Numerical rank with the usual relative cutoff.
pub fn numerical_rank(j: &DMatrix<f64>) -> usize {
    if j.is_empty() {
        return 0;
    }
    let sv = j.singular_values();
    let max = sv.max();
    let cutoff = max * 1e-8 * (j.nrows().max(j.ncols()) as f64);
    sv.iter().filter(|&&s| s > cutoff && s > 0.0).count()
}

/// Levenberg-Marquardt from `init`; with a seed, log-uniform restarts in
/// `[1/4, 4]` follow a failed first attempt and the best result is kept.
pub fn solve(system: &ResidualSystem, init: &ParamSet, opts: &SolveOptions) -> Result<SolveResult> {
    init.validate(system.triangulation())?;
    let first = levenberg_marquardt(system, &system.free_logs(init), opts)?;
    let Some(seed) = opts.seed else { return Ok(first) };
    if first.status == Status::Converged {
        return Ok(first);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = first;
    for _ in 0..opts.restarts {
        let y: Vec<f64> = (0..system.num_free()).map(|_| rng.gen_range(-4f64.ln()..=4f64.ln())).collect();
        let r = levenberg_marquardt(system, &y, opts)?;
        let better = (r.status == Status::Converged && best.status != Status::Converged)
            || (r.status == best.status && r.residual_norm < best.residual_norm);
        if better {
            best = r;
        }
        if best.status == Status::Converged {
            break;
        }
    }
    Ok(best)
}

fn levenberg_marquardt(system: &ResidualSystem, y0: &[f64], opts: &SolveOptions) -> Result<SolveResult> {
    let mut state = LmState::new(system, y0)?;
    let mut status = Status::Stalled;
    while state.iterations < opts.max_iter {
        if state.f < opts.tol {
            status = Status::Converged;
            break;
        }
        if !state.f.is_finite() || state.f > DIVERGENCE_NORM {
            status = Status::Diverged;
            break;
        }
        let j = match state.cached.take() {
            Some(j) => j,
            None => system.jacobian(state.y.as_slice())?,
        };
        let y = state.y.clone();
        let accepted = state.damped_step(&j, |step| {
            let candidate = &y + step;
            if candidate.amax() > MAX_LOG {
                return None;
            }
            system.evaluate_free(candidate.as_slice()).ok().map(|r| (candidate, r))
        });
        if !accepted {
            state.cached = Some(j);
            if state.lambda > 1e16 {
                break;
            }
        }
    }
    if status == Status::Stalled && state.f < opts.tol {
        status = Status::Converged;
    }
    let mut params = system.params_at(state.y.as_slice());
    let mut residual_norm = state.f;
    if status == Status::Converged && opts.polish {
        let (p, extra) = polish(system, &params, opts.max_iter.saturating_sub(state.iterations))?;
        state.iterations += extra;
        let r = norm(&system.evaluate(&p)?);
        if r <= residual_norm.max(opts.tol) {
            params = p;
            residual_norm = r;
        }
    }
    let jacobian_rank = numerical_rank(&system.jacobian(&system.free_logs(&params))?);
    Ok(SolveResult { params, residual_norm, iterations: state.iterations, jacobian_rank, status })
}

struct LmState {
    y: DVector<f64>,
    r: Vec<f64>,
    f: f64,
    lambda: f64,
    iterations: usize,
    /// Jacobian at `y`, kept across rejected steps.
    cached: Option<DMatrix<f64>>,
}

impl LmState {
    fn new(system: &ResidualSystem, y0: &[f64]) -> Result<Self> {
        let r = system.evaluate_free(y0)?;
        Ok(LmState { y: DVector::from_column_slice(y0), f: norm(&r), r, lambda: 1e-3, iterations: 0, cached: None })
    }

    /// Solves the damped normal equations and tries the step; `apply` maps a
    /// step to the new point and its residuals. Returns whether it was taken.
    fn damped_step<F>(&mut self, j: &DMatrix<f64>, apply: F) -> bool
    where
        F: FnOnce(&DVector<f64>) -> Option<(DVector<f64>, Vec<f64>)>,
    {
        self.iterations += 1;
        let g = j.transpose() * DVector::from_column_slice(&self.r);
        let mut a = j.transpose() * j;
        for d in 0..a.nrows() {
            a[(d, d)] += self.lambda;
        }
        let candidate = a.cholesky().map(|c| c.solve(&-&g)).and_then(|step| apply(&step));
        match candidate {
            Some((y, r)) if norm(&r) < self.f => {
                self.y = y;
                self.f = norm(&r);
                self.r = r;
                self.lambda *= 0.3;
                true
            }
            _ => {
                self.lambda *= 3.0;
                false
            }
        }
    }
}

const POLISH_HALVINGS: usize = 6;
const POLISH_STEP: f64 = 1e-6;
const POLISH_RADIUS: f64 = 1e-3;

/// Refines a converged point with the free variables carried in
/// double-double precision, as multiplicative offsets `exp(z)` from `ps`.
///
/// At a degenerate root the residual grows only quadratically along some
/// directions. Rounding the parameters to f64 then leaves first-order residual
/// noise near 1e-16 that hides offsets up to a few 1e-8 along those
/// directions; extended precision removes that floor. Returns the rounded
/// point and the number of iterations used.
fn polish(system: &ResidualSystem, ps: &ParamSet, budget: usize) -> Result<(ParamSet, usize)> {
    let base = Precise::of(ps);
    let free: Vec<Variable> = system.free.iter().map(|&i| system.variables[i]).collect();
    let point = |z: &[TwoFloat]| {
        let mut p = base.clone();
        for (&v, &zi) in free.iter().zip(z) {
            p.set(v, base.get(v) * exp_small(zi));
        }
        p
    };
    let residuals = |z: &[TwoFloat]| residuals_precise(system.triangulation(), &point(z));
    let mut z = vec![TwoFloat::from(0.0); free.len()];
    let mut r = residuals(&z);
    let mut f = norm(&r);
    let mut iterations = 0;
    // Damping would swamp the directions in which the Jacobian degenerates,
    // so these are plain Gauss-Newton steps, halved until the norm drops.
    while iterations < budget && f > 0.0 {
        iterations += 1;
        let cols: Vec<Vec<f64>> = (0..z.len())
            .into_par_iter()
            .map(|c| {
                let (mut zp, mut zm) = (z.clone(), z.clone());
                zp[c] += POLISH_STEP;
                zm[c] -= POLISH_STEP;
                let (rp, rm) = (residuals(&zp), residuals(&zm));
                rp.iter().zip(&rm).map(|(a, b)| (a - b) / (2.0 * POLISH_STEP)).collect()
            })
            .collect();
        let j = DMatrix::from_fn(r.len(), z.len(), |row, c| cols[c][row]);
        let svd = j.svd(true, true);
        let cutoff = 1e-14 * svd.singular_values.max();
        let Ok(step) = svd.solve(&-DVector::from_column_slice(&r), cutoff) else { break };
        let mut improved = false;
        let mut scale = 1.0;
        for _ in 0..POLISH_HALVINGS {
            let moved: Vec<TwoFloat> = z.iter().zip(step.iter()).map(|(&a, &b)| a + b * scale).collect();
            if moved.iter().all(|v| f64::from(*v).abs() <= POLISH_RADIUS) {
                let rm = residuals(&moved);
                if norm(&rm) < f {
                    (z, f, r) = (moved, norm(&rm), rm);
                    improved = true;
                    break;
                }
            }
            scale /= 2.0;
        }
        if !improved {
            break;
        }
    }
    Ok((point(&z).round(), iterations))
}

/// `exp(z)` for `|z| ≤ 1e-3`, to double-double accuracy.
fn exp_small(z: TwoFloat) -> TwoFloat {
    let mut term = TwoFloat::from(1.0);
    let mut sum = TwoFloat::from(1.0);
    for k in 1..=12 {
        term = term * z / k as f64;
        sum += term;
    }
    sum
}

/// One point of a continuation run.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceStep {
    pub value: f64,
    pub result: SolveResult,
}

/// Where a continuation run stopped early.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Breakdown {
    pub target: f64,
    pub last_good: Option<f64>,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub steps: Vec<TraceStep>,
    pub breakdown: Option<Breakdown>,
}

/// Natural-parameter continuation in `pin`: `steps` equally spaced values
/// from `from` to `to` inclusive, each warm-started from the previous
/// solution. A failed step is retried from intermediate values, halving the
/// gap up to 8 times, before the run stops with its partial results.
pub fn trace(
    system: &ResidualSystem,
    init: &ParamSet,
    pin: Variable,
    from: f64,
    to: f64,
    steps: usize,
    opts: &SolveOptions,
) -> Result<Trace> {
    if steps == 0 {
        return Err(Error::Params("a trace needs at least one step".into()));
    }
    let targets: Vec<f64> = if from == to || steps == 1 {
        vec![from]
    } else {
        (0..steps).map(|k| from + (to - from) * k as f64 / (steps - 1) as f64).collect()
    };
    let mut out = Vec::new();
    let mut current = init.clone();
    let mut last_good: Option<f64> = None;
    for &target in &targets {
        let mut start_value = last_good.unwrap_or(target);
        let mut reached = None;
        let mut gap_halvings = 0;
        let mut value = target;
        loop {
            let sys = system.with_pin(pin, value)?;
            let r = solve(&sys, &sys.pinned(&current), opts)?;
            if r.status == Status::Converged {
                current = r.params.clone();
                if value == target {
                    reached = Some(r);
                    break;
                }
                start_value = value;
                value = target;
                continue;
            }
            if gap_halvings == 8 || last_good.is_none() {
                break;
            }
            gap_halvings += 1;
            value = start_value + (value - start_value) / 2.0;
        }
        match reached {
            Some(result) => {
                out.push(TraceStep { value: target, result });
                last_good = Some(target);
            }
            None => {
                return Ok(Trace {
                    steps: out,
                    breakdown: Some(Breakdown {
                        target,
                        last_good,
                        reason: format!("no convergence at {pin}={target} after 8 bisections"),
                    }),
                })
            }
        }
    }
    Ok(Trace { steps: out, breakdown: None })
}

/// The edge-face whose edge ratio a variable controls, for reporting.
pub fn variable_edge_face(v: Variable) -> Option<(usize, EdgeFace)> {
    match v {
        Variable::Edge { tet, edge } => {
            let (a, b) = EDGES[edge];
            EdgeFace::ALL.into_iter().find(|s| s.i() == a && s.j() == b).map(|s| (tet, s))
        }
        Variable::Gluing { .. } => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha8Rng;

    const FIG8: &str = r#"{"num_tetrahedra":2,"gluings":[
        [{"tet":1,"perm":[0,1,3,2]},{"tet":1,"perm":[1,3,0,2]},{"tet":1,"perm":[1,0,2,3]},{"tet":1,"perm":[2,0,3,1]}],
        [{"tet":0,"perm":[0,1,3,2]},{"tet":0,"perm":[1,3,0,2]},{"tet":0,"perm":[1,0,2,3]},{"tet":0,"perm":[2,0,3,1]}]]}"#;

    const HOPF: &str = r#"{"num_tetrahedra":1,"gluings":[[
        {"tet":0,"perm":[1,0,2,3]},{"tet":0,"perm":[1,0,2,3]},{"tet":0,"perm":[0,1,3,2]},{"tet":0,"perm":[0,1,3,2]}]],
        "edge_orders":{"0":3,"1":3,"2":3}}"#;

    #[test]
    fn variable_names_round_trip() {
        for text in ["tet0:e12", "tet3:e34", "face5:g"] {
            assert_eq!(text.parse::<Variable>().unwrap().to_string(), text);
        }
        assert_eq!("0:(21)4".parse::<Variable>().unwrap(), Variable::Edge { tet: 0, edge: 0 });
        assert_eq!("tet1:e31".parse::<Variable>().unwrap(), Variable::Edge { tet: 1, edge: 1 });
        for bad in ["tet0:e11", "face:g", "x", "tet0:e5"] {
            assert!(bad.parse::<Variable>().is_err(), "{bad}");
        }
        assert_eq!(parse_pin("tet0:e12 = 2").unwrap(), (Variable::Edge { tet: 0, edge: 0 }, 2.0));
    }

    #[test]
    fn counts() {
        let fig8 = Triangulation::from_json(FIG8).unwrap();
        let sys = ResidualSystem::assemble(&fig8, &[]).unwrap();
        assert_eq!((sys.variables().len(), sys.num_residuals()), (16, 16));
        assert_eq!(sys.residual_names().len(), 16);
        let pinned = ResidualSystem::assemble(&fig8, &[parse_pin("tet0:e12=2").unwrap()]).unwrap();
        assert_eq!(pinned.num_free(), 15);

        let hopf = Triangulation::from_json(HOPF).unwrap();
        let sys = ResidualSystem::assemble(&hopf, &[]).unwrap();
        assert_eq!((sys.variables().len(), sys.num_residuals()), (8, 12));
    }

    #[test]
    fn pins_are_checked() {
        let fig8 = Triangulation::from_json(FIG8).unwrap();
        let a = parse_pin("tet0:e12=2").unwrap();
        let b = parse_pin("0:(12)3=3").unwrap();
        assert!(ResidualSystem::assemble(&fig8, &[a, b]).is_err());
        assert!(ResidualSystem::assemble(&fig8, &[a, a]).is_ok());
        assert!(ResidualSystem::assemble(&fig8, &[parse_pin("tet5:e12=2").unwrap()]).is_err());
        assert!(ResidualSystem::assemble(&fig8, &[parse_pin("tet0:e12=-1").unwrap()]).is_err());
    }

    #[test]
    fn edge_residuals_match_edge_matrices() {
        use rand::{Rng, SeedableRng};
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for text in [FIG8, HOPF] {
            let tri = Triangulation::from_json(text).unwrap();
            for _ in 0..20 {
                let shapes =
                    (0..tri.num_tets()).map(|_| TetShape([(); 6].map(|_| rng.gen_range(-1.0f64..1.0).exp()))).collect();
                let gluing = tri.face_classes().iter().map(|_| rng.gen_range(-1.0f64..1.0).exp()).collect();
                let ps = ParamSet { shapes, gluing };
                let oracle: Vec<f64> = crate::monodromy::Cochain::new(&tri, &ps)
                    .unwrap()
                    .edge_matrices()
                    .into_iter()
                    .flat_map(|m| m.residuals)
                    .collect();
                let shapes: Vec<[f64; 6]> = ps.shapes.iter().map(|s| s.0).collect();
                let plain = edge_residuals_in(&tri, &shapes, &ps.gluing);
                let p = Precise::of(&ps);
                let precise = edge_residuals_in(&tri, &p.e, &p.gluing);
                for ((a, b), c) in oracle.iter().zip(&plain).zip(&precise) {
                    let scale = 1.0 + a.abs();
                    assert!((a - b).abs() < 1e-11 * scale, "{a} vs {b}");
                    assert!((a - c).abs() < 1e-11 * scale, "{a} vs {c}");
                }
                let sys = ResidualSystem::assemble(&tri, &[]).unwrap();
                let all = sys.evaluate(&ps).unwrap();
                let scalars = ps.scalar_residuals(&tri);
                let expected: Vec<f64> = scalars.internal.iter().chain(&scalars.face).copied().collect();
                let n = expected.len();
                for (a, b) in all[..n].iter().zip(&expected) {
                    assert!((a - b).abs() < 1e-14, "{a} vs {b}");
                }
                assert_eq!(&all[n..], precise.as_slice());
            }
        }
    }

    #[test]
    fn all_ones_is_a_fixed_point() {
        let fig8 = Triangulation::from_json(FIG8).unwrap();
        let sys = ResidualSystem::assemble(&fig8, &[]).unwrap();
        let r = solve(&sys, &ParamSet::all_ones(&fig8), &SolveOptions::default()).unwrap();
        assert_eq!(r.status, Status::Converged);
        assert_eq!(r.params, ParamSet::all_ones(&fig8));
        assert!(r.residual_norm < 1e-12);
    }

    #[test]
    fn degenerate_trace_is_one_solve() {
        let fig8 = Triangulation::from_json(FIG8).unwrap();
        let sys = ResidualSystem::assemble(&fig8, &[]).unwrap();
        let pin = Variable::Edge { tet: 0, edge: 0 };
        let t = trace(&sys, &ParamSet::all_ones(&fig8), pin, 1.0, 1.0, 5, &SolveOptions::default()).unwrap();
        assert_eq!(t.steps.len(), 1);
        assert!(t.breakdown.is_none());
    }
}
