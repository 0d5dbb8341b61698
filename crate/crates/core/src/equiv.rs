//! Phases from Lagrangian graph data, Λ-cloud comparison, Hessian
//! signatures, the matrix equation `W + Wᵀ C W = B`, and the
//! principal-level equivalence test.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::classical::{compatibility_check, principal_part, ClassicalError, Excision, Triple};
use crate::compact::{bdf, iota, Face};
use crate::expr::{EvalError, Expression, Node, VarKind};
use crate::extrap::RadialLimit;
use crate::phase::{face_system, PhaseError, PhaseFunction};
use crate::sample::{distance, norm, normalized, random_unit, rng, scaled};
use crate::stationary::{
    all_clouds, newton, LagrangianPoint, SearchConfig, StationaryCloud, StationaryError,
    StationaryPoint,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EquivError {
    #[error("graph data violates conormality: corner discrepancy {0:.3e}")]
    Conormality(f64),
    #[error("invalid graph data: {0}")]
    InvalidInput(String),
    #[error("no small solution found: {0}")]
    NoSmallSolution(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Classical(#[from] ClassicalError),
    #[error(transparent)]
    Phase(#[from] PhaseError),
    #[error(transparent)]
    Stationary(#[from] StationaryError),
}

/// Graph description of a Lagrangian pair over the split
/// `x = (x', x'')`, `ξ = (ξ', ξ'')` with `x', ξ' ∈ R^s`.
///
/// All fields are expressions in `(x, t)` with dims `(d, s)` that may only
/// use `x_{s+1..d}` (that is `x''`) and `t` (standing for `ξ'`).
#[derive(Debug, Clone, PartialEq)]
pub struct GraphData {
    pub d: usize,
    pub s: usize,
    /// `X^e(x'', ξ')`: `s` components, 1-homogeneous in `x''`.
    pub x_e: Vec<Expression>,
    /// `Ξ^e(x'', ξ')`: `d - s` components, 0-homogeneous in `x''`.
    pub xi_e: Vec<Expression>,
    /// `X^ψ(x'', ξ')`: `s` components, 0-homogeneous in `ξ'`.
    pub x_psi: Vec<Expression>,
    /// `Ξ^ψ(x'', ξ')`: `d - s` components, 1-homogeneous in `ξ'`.
    pub xi_psi: Vec<Expression>,
    /// Corner data `Ξ^{ψe}`; derived from `Ξ^e` when absent.
    pub xi_corner: Option<Vec<Expression>>,
}

/// Output of [`build_phase`].
#[derive(Debug, Clone, PartialEq)]
pub struct BuiltPhase {
    pub triple: Triple,
    pub phase: PhaseFunction,
}

fn sum_nodes(terms: Vec<Node>) -> Node {
    terms
        .into_iter()
        .reduce(|a, b| Node::Add(Box::new(a), Box::new(b)))
        .unwrap_or(Node::Const(0.0))
}

fn mul(a: Node, b: Node) -> Node {
    Node::Mul(Box::new(a), Box::new(b))
}

/// `Σ_i x_i t_i` over the primed block.
fn primed_pairing(s: usize) -> Node {
    sum_nodes(
        (0..s)
            .map(|i| mul(Node::Var(VarKind::X, i), Node::Var(VarKind::T, i)))
            .collect(),
    )
}

/// Sample points `(x'' embedded into x, ξ')` for identity checks.
fn graph_samples(d: usize, s: usize, seed: u64, count: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut g = rng(seed);
    (0..count)
        .map(|_| {
            let mut x = vec![0.0; d];
            let xpp = scaled(&random_unit(&mut g, d - s), 0.5 + 2.0 * rand::Rng::gen::<f64>(&mut g));
            x[s..].copy_from_slice(&xpp);
            let t = scaled(&random_unit(&mut g, s), 0.5 + 2.0 * rand::Rng::gen::<f64>(&mut g));
            (x, t)
        })
        .collect()
}

impl GraphData {
    fn validate(&self) -> Result<(), EquivError> {
        let (d, s) = (self.d, self.s);
        if s == 0 || s > d {
            return Err(EquivError::InvalidInput(format!("split s={s} must satisfy 1 ≤ s ≤ d={d}")));
        }
        let lens = [
            ("X^e", self.x_e.len(), s),
            ("Xi^e", self.xi_e.len(), d - s),
            ("X^psi", self.x_psi.len(), s),
            ("Xi^psi", self.xi_psi.len(), d - s),
        ];
        for (name, got, want) in lens {
            if got != want {
                return Err(EquivError::InvalidInput(format!("{name} has {got} components, expected {want}")));
            }
        }
        let all = self
            .x_e
            .iter()
            .chain(&self.xi_e)
            .chain(&self.x_psi)
            .chain(&self.xi_psi)
            .chain(self.xi_corner.iter().flatten());
        for f in all {
            if (f.d(), f.s()) != (d, s) {
                return Err(EquivError::InvalidInput("component dims differ from (d, s)".into()));
            }
            if (0..s).any(|i| f.uses_component(VarKind::X, i)) {
                return Err(EquivError::InvalidInput(format!(
                    "`{f}` depends on the primed block x_1..x_{s}"
                )));
            }
        }
        Ok(())
    }

    /// Scaling tests of the declared homogeneities, `μ ∈ {2, 3}`.
    pub fn check_homogeneity(&self, seed: u64, tol: f64) -> Result<(), EquivError> {
        let (d, s) = (self.d, self.s);
        let groups: [(&str, &Vec<Expression>, bool, f64); 4] = [
            ("X^e", &self.x_e, true, 1.0),
            ("Xi^e", &self.xi_e, true, 0.0),
            ("X^psi", &self.x_psi, false, 0.0),
            ("Xi^psi", &self.xi_psi, false, 1.0),
        ];
        for (x, t) in graph_samples(d, s, seed, 10) {
            for mu in [2.0, 3.0] {
                for (name, fields, in_x, deg) in groups {
                    for f in fields {
                        let v = f.eval(&x, &t)?;
                        let w = if in_x {
                            f.eval(&scaled(&x, mu), &t)?
                        } else {
                            f.eval(&x, &scaled(&t, mu))?
                        };
                        let want = mu.powf(deg) * v;
                        if (w - want).abs() > tol * want.abs().max(1.0) {
                            return Err(EquivError::InvalidInput(format!(
                                "{name} component `{f}` is not homogeneous of degree {deg}"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Max residual of `X^e + ∇_{ξ'}(x''·Ξ^e) = 0` and `∇_{x''}(ξ'·X^ψ) + Ξ^ψ = 0`.
    pub fn identity_residual(&self, seed: u64) -> Result<f64, EquivError> {
        let (d, s) = (self.d, self.s);
        let mut worst = 0.0f64;
        for (x, t) in graph_samples(d, s, seed, 20) {
            // ∇_{ξ'}(x''·Ξ^e)
            let mut grad_e = vec![0.0; s];
            for (j, f) in self.xi_e.iter().enumerate() {
                let jet = f.eval_jet(&x, &t, 1)?;
                for (i, g) in jet.grad_t().iter().enumerate() {
                    grad_e[i] += x[s + j] * g;
                }
            }
            for (i, f) in self.x_e.iter().enumerate() {
                worst = worst.max((f.eval(&x, &t)? + grad_e[i]).abs());
            }
            // ∇_{x''}(ξ'·X^ψ)
            let mut grad_p = vec![0.0; d - s];
            for (i, f) in self.x_psi.iter().enumerate() {
                let jet = f.eval_jet(&x, &t, 1)?;
                for (j, g) in jet.grad_x()[s..].iter().enumerate() {
                    grad_p[j] += t[i] * g;
                }
            }
            for (j, f) in self.xi_psi.iter().enumerate() {
                worst = worst.max((grad_p[j] + f.eval(&x, &t)?).abs());
            }
        }
        Ok(worst)
    }

    fn corner_fields(&self) -> Result<Vec<Expression>, EquivError> {
        if let Some(c) = &self.xi_corner {
            if c.len() != self.d - self.s {
                return Err(EquivError::InvalidInput("corner data has the wrong length".into()));
            }
            return Ok(c.clone());
        }
        if self.d == self.s {
            return Ok(Vec::new());
        }
        // Ξ^e already 1-homogeneous in ξ' is its own ψ-limit.
        let mut g = rng(7);
        for f in &self.xi_e {
            for _ in 0..5 {
                let (x, t) = graph_samples(self.d, self.s, rand::Rng::gen(&mut g), 1).remove(0);
                let v = f.eval(&x, &t)?;
                let w = f.eval(&x, &scaled(&t, 3.0))?;
                if (w - 3.0 * v).abs() > 1e-9 * v.abs().max(1.0) {
                    return Err(EquivError::InvalidInput(
                        "corner data Xi^psie required (Xi^e is not 1-homogeneous in xi')".into(),
                    ));
                }
            }
        }
        Ok(self.xi_e.clone())
    }
}

/// `φ^e = x'·ξ' + x''·Ξ^e`, `φ^ψ = x'·ξ' - X^ψ·ξ'`, `φ^{ψe} = x'·ξ' + x''·Ξ^{ψe}`,
/// glued by the principal part with the given excisions.
pub fn build_phase(g: &GraphData, excision: Excision) -> Result<BuiltPhase, EquivError> {
    g.validate()?;
    g.check_homogeneity(11, 1e-9)?;
    let ident = g.identity_residual(13)?;
    if ident > 1e-8 {
        return Err(EquivError::InvalidInput(format!(
            "graph identities violated (residual {ident:.3e})"
        )));
    }
    let (d, s) = (g.d, g.s);
    let pair_with_xpp = |fields: &[Expression]| -> Node {
        sum_nodes(
            fields
                .iter()
                .enumerate()
                .map(|(j, f)| mul(Node::Var(VarKind::X, s + j), f.root().clone()))
                .collect(),
        )
    };
    let e_root = Node::Add(Box::new(primed_pairing(s)), Box::new(pair_with_xpp(&g.xi_e)));
    let psi_root = Node::Sub(
        Box::new(primed_pairing(s)),
        Box::new(sum_nodes(
            g.x_psi
                .iter()
                .enumerate()
                .map(|(i, f)| mul(f.root().clone(), Node::Var(VarKind::T, i)))
                .collect(),
        )),
    );
    let corner = g.corner_fields()?;
    let c_root = Node::Add(Box::new(primed_pairing(s)), Box::new(pair_with_xpp(&corner)));
    let mk = |n: Node| Expression::from_node(n, d, s).map_err(|e| EquivError::InvalidInput(e.to_string()));
    let triple = Triple {
        e: mk(e_root)?,
        psi: mk(psi_root)?,
        psie: mk(c_root)?,
    };
    let compat = compatibility_check(&triple, crate::phase::PHASE_ORDER, 20, 1e-7, 0, &RadialLimit::default())?;
    if !compat.pass {
        return Err(EquivError::Conormality(compat.max_discrepancy));
    }
    let glued = principal_part(&triple, excision, excision);
    let phase = PhaseFunction::new(glued, Some(triple.clone()))?;
    Ok(BuiltPhase { triple, phase })
}

/// Graph data read off the Λ clouds of a phase with `d = s = 1`:
/// `X^ψ = c_0 + c_1 ξ/|ξ|` from the ψ-face points, `X^e = 0`.
pub fn extract_graph_data(clouds: &[StationaryCloud], d: usize, s: usize) -> Result<GraphData, EquivError> {
    if d != 1 || s != 1 {
        return Err(EquivError::InvalidInput(
            "graph extraction is implemented for d = s = 1 only".into(),
        ));
    }
    let mut at = [None::<f64>, None::<f64>];
    for c in clouds.iter().filter(|c| c.face == Face::Psi) {
        for lp in &c.lagrangian {
            let slot = if lp.xi[0] > 0.0 { 0 } else { 1 };
            match at[slot] {
                None => at[slot] = Some(lp.x[0]),
                Some(v) if (v - lp.x[0]).abs() <= 1e-8 => {}
                Some(_) => {
                    return Err(EquivError::InvalidInput(
                        "psi-face Lagrangian is not a graph over the fiber direction".into(),
                    ))
                }
            }
        }
    }
    let (c0, c1) = match at {
        [Some(p), Some(m)] => ((p + m) / 2.0, (p - m) / 2.0),
        [Some(v), None] | [None, Some(v)] => (v, 0.0),
        [None, None] => (0.0, 0.0),
    };
    let x_psi = Expression::from_node(
        Node::Add(
            Box::new(Node::Const(c0)),
            Box::new(mul(
                Node::Const(c1),
                Node::Div(
                    Box::new(Node::Var(VarKind::T, 0)),
                    Box::new(Node::Norm2(crate::expr::Arg::Vector(VarKind::T))),
                ),
            )),
        ),
        1,
        1,
    )
    .map_err(|e| EquivError::InvalidInput(e.to_string()))?;
    Ok(GraphData {
        d: 1,
        s: 1,
        x_e: vec![Expression::constant(0.0, 1, 1)],
        xi_e: Vec::new(),
        x_psi: vec![x_psi],
        xi_psi: Vec::new(),
        xi_corner: None,
    })
}

/// Compactified position of the Λ image of a face point.
fn lambda_embedding(phase: &PhaseFunction, face: Face, x: &[f64], t: &[f64]) -> Result<(Vec<f64>, Vec<f64>), PhaseError> {
    let sys = face_system(phase, face, x, t)?;
    let xpart = if face.x_at_infinity() { x.to_vec() } else { iota(x) };
    let xi = if face.theta_at_infinity() {
        normalized(&sys.grad_x)
    } else {
        iota(&sys.grad_x)
    };
    let mut key = xpart;
    key.extend(xi);
    Ok((key, sys.residual))
}

/// Closest point of `Λ^face` of `phase` to `target`, starting from a
/// stationary point; Levenberg-Marquardt followed by a Newton polish.
pub fn project_onto(
    phase: &PhaseFunction,
    face: Face,
    start: &StationaryPoint,
    target: &[f64],
    cfg: &SearchConfig,
) -> Result<Option<(StationaryPoint, f64)>, EquivError> {
    let residual = |x: &[f64], t: &[f64]| -> Option<Vec<f64>> {
        let (key, f) = lambda_embedding(phase, face, x, t).ok()?;
        let mut r = f;
        r.extend(key.iter().zip(target).map(|(a, b)| a - b));
        Some(r)
    };
    let (mut x, mut t) = (start.x.clone(), start.theta.clone());
    let Some(mut r) = residual(&x, &t) else {
        return Ok(None);
    };
    let sq = |v: &[f64]| v.iter().map(|c| c * c).sum::<f64>();
    let mut mu = 1e-3;
    for _ in 0..200 {
        if sq(&r).sqrt() < 1e-13 {
            break;
        }
        let sys = face_system(phase, face, &x, &t)?;
        let m = sys.jacobian.ncols();
        if m == 0 {
            break;
        }
        let h = 1e-7;
        let mut jac = DMatrix::zeros(r.len(), m);
        for k in 0..m {
            let mut e = vec![0.0; m];
            e[k] = h;
            let (nx, nt) = step(&sys, &x, &t, &e);
            let Some(rk) = residual(&nx, &nt) else {
                return Ok(None);
            };
            for (i, v) in rk.iter().enumerate() {
                jac[(i, k)] = (v - r[i]) / h;
            }
        }
        let jt = jac.transpose();
        let rv = nalgebra::DVector::from_column_slice(&r);
        let grad = &jt * &rv;
        let jtj = &jt * &jac;
        let mut improved = false;
        for _ in 0..20 {
            let mut a = jtj.clone();
            for i in 0..m {
                a[(i, i)] += mu * (1.0 + jtj[(i, i)]);
            }
            let Some(delta) = a.lu().solve(&(-&grad)) else {
                mu *= 10.0;
                continue;
            };
            let dv: Vec<f64> = delta.iter().copied().collect();
            let (nx, nt) = step(&sys, &x, &t, &dv);
            if let Some(nr) = residual(&nx, &nt) {
                if sq(&nr) < sq(&r) {
                    x = nx;
                    t = nt;
                    r = nr;
                    mu = (mu / 3.0).max(1e-12);
                    improved = true;
                    break;
                }
            }
            mu *= 4.0;
        }
        if !improved {
            break;
        }
    }
    let Some((px, pt)) = newton(phase, face, &x, &t, cfg)? else {
        return Ok(None);
    };
    let (key, _) = lambda_embedding(phase, face, &px, &pt)?;
    let dist = distance(&key, target);
    let sys = face_system(phase, face, &px, &pt)?;
    let nd = crate::phase::nondegeneracy_check(phase, face, &px, &pt)?;
    let point = StationaryPoint {
        face,
        residual: norm(&sys.residual),
        x: px,
        theta: pt,
        singular_values: nd.singular_values,
        rank: nd.rank,
        nondegenerate: nd.nondegenerate,
        seed_index: start.seed_index,
    };
    Ok(Some((point, dist)))
}

fn step(sys: &crate::phase::FaceSystem, x: &[f64], t: &[f64], delta: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let (dx, dt) = sys.ambient(delta);
    let add = |p: &[f64], q: &[f64], sphere: bool| {
        let v: Vec<f64> = p.iter().zip(q).map(|(a, b)| a + b).collect();
        if sphere {
            normalized(&v)
        } else {
            v
        }
    };
    (
        add(x, &dx, sys.face.x_at_infinity()),
        add(t, &dt, sys.face.theta_at_infinity()),
    )
}

/// Distance from `target` to `Λ^face` of `phase`, with the matching point.
fn distance_to_cloud(
    phase: &PhaseFunction,
    cloud: &[LagrangianPoint],
    target: &[f64],
    cfg: &SearchConfig,
) -> Result<(f64, Option<StationaryPoint>), EquivError> {
    let mut ranked: Vec<(f64, &LagrangianPoint)> = cloud
        .iter()
        .map(|p| (distance(&p.compactified(), target), p))
        .collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0));
    let Some(&(d0, nearest)) = ranked.first() else {
        return Ok((f64::INFINITY, None));
    };
    let mut best = (d0, Some(nearest.source.clone()));
    if d0 > 1e-12 {
        if let Some((p, dist)) = project_onto(phase, nearest.face, &nearest.source, target, cfg)? {
            if dist < best.0 {
                best = (dist, Some(p));
            }
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceDistance {
    pub face: Face,
    pub hausdorff: f64,
    pub points: (usize, usize),
    pub diagnosis: Option<String>,
}

/// Symmetric Hausdorff distance of compactified Λ clouds, per face.
pub fn hausdorff_per_face(
    a: &PhaseFunction,
    ca: &[StationaryCloud],
    b: &PhaseFunction,
    cb: &[StationaryCloud],
    cfg: &SearchConfig,
) -> Result<Vec<FaceDistance>, EquivError> {
    let mut out = Vec::new();
    for face in Face::BOUNDARY {
        let la: Vec<LagrangianPoint> = pick(ca, face);
        let lb: Vec<LagrangianPoint> = pick(cb, face);
        let (na, nb) = (la.len(), lb.len());
        let (hausdorff, diagnosis) = match (na, nb) {
            (0, 0) => (0.0, None),
            (0, _) | (_, 0) => (
                f64::INFINITY,
                Some(format!("face {} empty on one side only ({na} vs {nb} points)", face.name())),
            ),
            _ => {
                let mut h = 0.0f64;
                for p in &la {
                    h = h.max(distance_to_cloud(b, &lb, &p.compactified(), cfg)?.0);
                }
                for p in &lb {
                    h = h.max(distance_to_cloud(a, &la, &p.compactified(), cfg)?.0);
                }
                (h, None)
            }
        };
        out.push(FaceDistance {
            face,
            hausdorff,
            points: (na, nb),
            diagnosis,
        });
    }
    Ok(out)
}

fn pick(clouds: &[StationaryCloud], face: Face) -> Vec<LagrangianPoint> {
    clouds
        .iter()
        .filter(|c| c.face == face)
        .flat_map(|c| c.lagrangian.iter().cloned())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundtripReport {
    pub faces: Vec<FaceDistance>,
    pub tol: f64,
    pub pass: bool,
}

pub fn roundtrip_verify(
    src: &PhaseFunction,
    rec: &PhaseFunction,
    cfg: &SearchConfig,
    tol: f64,
) -> Result<RoundtripReport, EquivError> {
    let ca = all_clouds(src, cfg)?;
    let cb = all_clouds(rec, cfg)?;
    let faces = hausdorff_per_face(src, &ca, rec, &cb, cfg)?;
    let pass = faces.iter().all(|f| f.hausdorff <= tol);
    Ok(RoundtripReport { faces, tol, pass })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    pub n_plus: usize,
    pub n_minus: usize,
    pub n_zero: usize,
}

pub fn signature_of(m: &DMatrix<f64>) -> Signature {
    let n = m.nrows();
    if n == 0 {
        return Signature { n_plus: 0, n_minus: 0, n_zero: 0 };
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigenvalues();
    let max = eig.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let cut = 1e-8 * max;
    let mut sig = Signature { n_plus: 0, n_minus: 0, n_zero: 0 };
    for &v in eig.iter() {
        if max == 0.0 || v.abs() <= cut {
            sig.n_zero += 1;
        } else if v > 0.0 {
            sig.n_plus += 1;
        } else {
            sig.n_minus += 1;
        }
    }
    sig
}

/// Fiber Hessian `∂²_{θθ} φ^face` at the homogeneity-one representative.
pub fn face_hessian(phase: &PhaseFunction, p: &StationaryPoint) -> Result<DMatrix<f64>, EquivError> {
    let comp = phase.component(p.face)?;
    Ok(comp.eval_jet(&p.x, &p.theta, 2)?.hess_tt())
}

pub fn hessian_signature(phase: &PhaseFunction, p: &StationaryPoint) -> Result<Signature, EquivError> {
    Ok(signature_of(&face_hessian(phase, p)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WSolution {
    pub w: Vec<Vec<f64>>,
    pub iterations: usize,
    pub residual: f64,
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// Fixed-point iteration `W ← B - Wᵀ C W` from `W = B`.
pub fn solve_w(b: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<WSolution, EquivError> {
    let mut w = b.clone();
    for it in 1..=200 {
        let next = b - w.transpose() * c * &w;
        let change = (&next - &w).norm();
        w = next;
        if w.norm() > 1e3 || !w.norm().is_finite() {
            return Err(EquivError::NoSmallSolution(format!("iterates exceed 1e3 after {it} steps")));
        }
        if change <= 1e-12 {
            let residual = (&w + w.transpose() * c * &w - b).norm();
            return Ok(WSolution {
                w: to_rows(&w),
                iterations: it,
                residual,
            });
        }
    }
    Err(EquivError::NoSmallSolution("no convergence in 200 iterations".into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceVerdict {
    pub same_lagrangian: bool,
    pub values_agree: bool,
    pub signatures_match: bool,
    pub faces: Vec<FaceDistance>,
    pub matched_pairs: usize,
    pub max_value_gap: f64,
    pub solver_w: Option<WSolution>,
    pub verdict: String,
}

pub const VERDICT_EQUIVALENT: &str = "equivalent (principal level)";
pub const VERDICT_LAGRANGIANS_DIFFER: &str = "Lagrangians differ";
pub const VERDICT_VALUES_DIFFER: &str = "values differ";
pub const VERDICT_SIGNATURE: &str = "signature mismatch";

/// Transported phase value on the face at a stationary point.
fn face_value(phase: &PhaseFunction, p: &StationaryPoint) -> Result<f64, EquivError> {
    let v = phase.component(p.face)?.eval(&p.x, &p.theta)?;
    Ok(match p.face {
        Face::E => bdf(&iota(&p.theta)) * v,
        Face::Psi => bdf(&iota(&p.x)) * v,
        _ => v,
    })
}

/// Necessary conditions for principal-level equivalence: matching Λ
/// clouds, agreeing face values and equal fiber Hessian signatures.
pub fn equivalence_check(
    phi1: &PhaseFunction,
    phi2: &PhaseFunction,
    cfg: &SearchConfig,
) -> Result<EquivalenceVerdict, EquivError> {
    let match_tol = 1e-4;
    let c1 = all_clouds(phi1, cfg)?;
    let c2 = all_clouds(phi2, cfg)?;
    let faces = hausdorff_per_face(phi1, &c1, phi2, &c2, cfg)?;
    let same_lagrangian = faces.iter().all(|f| f.hausdorff <= match_tol);
    let mut values_agree = true;
    let mut signatures_match = true;
    let mut matched_pairs = 0;
    let mut max_value_gap = 0.0f64;
    let mut solver_w = None;
    if same_lagrangian {
        for face in Face::BOUNDARY {
            let l2 = pick(&c2, face);
            for p in pick(&c1, face) {
                let (dist, q) = distance_to_cloud(phi2, &l2, &p.compactified(), cfg)?;
                let Some(q) = q.filter(|_| dist <= match_tol) else {
                    continue;
                };
                matched_pairs += 1;
                let gap = (face_value(phi1, &p.source)? - face_value(phi2, &q)?).abs();
                max_value_gap = max_value_gap.max(gap);
                if gap > 1e-6 {
                    values_agree = false;
                }
                let h1 = face_hessian(phi1, &p.source)?;
                let h2 = face_hessian(phi2, &q)?;
                if signature_of(&h1) != signature_of(&h2) {
                    signatures_match = false;
                }
                if solver_w.is_none() {
                    solver_w = solve_w(&(&h2 - &h1), &h1).ok();
                }
            }
        }
    }
    let verdict = if !same_lagrangian {
        VERDICT_LAGRANGIANS_DIFFER
    } else if !values_agree {
        VERDICT_VALUES_DIFFER
    } else if !signatures_match {
        VERDICT_SIGNATURE
    } else {
        VERDICT_EQUIVALENT
    };
    Ok(EquivalenceVerdict {
        same_lagrangian,
        values_agree,
        signatures_match,
        faces,
        matched_pairs,
        max_value_gap,
        solver_w,
        verdict: verdict.to_string(),
    })
}
