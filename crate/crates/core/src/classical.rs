//! SG-classical structure: principal triples, principal parts with
//! excision, compatibility of the triple and ellipticity on the boundary.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compact::{transport, CompactError, Face, FacePoint};
use crate::expr::{EvalError, Expression, Node, VarKind};
use crate::extrap::{LimitError, RadialLimit};
use crate::sample::{norm, random_unit, rng, scaled, sphere_points};
use crate::symbols::OrderPair;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClassicalError {
    #[error("not classical in the {which} expansion: {source}")]
    NotClassical { which: &'static str, source: LimitError },
    #[error("declared {which} component {declared} disagrees with extracted limit {extracted}")]
    DeclaredMismatch {
        which: &'static str,
        declared: f64,
        extracted: f64,
    },
    #[error("declared {which} component is not homogeneous of degree {degree}: relative error {error:.3e}")]
    NotHomogeneous {
        which: &'static str,
        degree: f64,
        error: f64,
    },
    #[error("{0} must be a unit vector")]
    NotUnit(&'static str),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Compact(#[from] CompactError),
}

/// The homogeneous principal components `(a^e, a^ψ, a^{ψe})`.
#[derive(Debug, Clone, PartialEq)]
pub struct Triple {
    pub e: Expression,
    pub psi: Expression,
    pub psie: Expression,
}

impl Triple {
    pub fn zero(d: usize, s: usize) -> Self {
        let z = Expression::constant(0.0, d, s);
        Triple {
            e: z.clone(),
            psi: z.clone(),
            psie: z,
        }
    }

    pub fn component(&self, which: Face) -> &Expression {
        match which {
            Face::E => &self.e,
            Face::Psi => &self.psi,
            Face::PsiE => &self.psie,
            Face::Interior => panic!("interior has no principal component"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalSymbol {
    pub base: Expression,
    pub order: OrderPair,
    pub triple: Option<Triple>,
}

impl ClassicalSymbol {
    pub fn new(base: Expression, order: OrderPair) -> Self {
        ClassicalSymbol {
            base,
            order,
            triple: None,
        }
    }

    pub fn with_triple(mut self, triple: Triple) -> Self {
        self.triple = Some(triple);
        self
    }

    pub fn d(&self) -> usize {
        self.base.d()
    }

    pub fn s(&self) -> usize {
        self.base.s()
    }

    /// Scaling test of the declared triple at random points, `μ ∈ {2, 3, 5}`.
    pub fn check_homogeneity(&self, seed: u64, tol: f64) -> Result<(), ClassicalError> {
        let Some(tr) = &self.triple else {
            return Ok(());
        };
        let (d, s) = (self.d(), self.s());
        let (me, mp) = (self.order.m_e, self.order.m_psi);
        let mut g = rng(seed);
        for _ in 0..10 {
            let x = scaled(&random_unit(&mut g, d), 0.5 + 2.0 * rand::Rng::gen::<f64>(&mut g));
            let t = if s == 0 {
                Vec::new()
            } else {
                scaled(&random_unit(&mut g, s), 0.5 + 2.0 * rand::Rng::gen::<f64>(&mut g))
            };
            for mu in [2.0, 3.0, 5.0] {
                let cases: [(&'static str, &Expression, f64, f64, f64); 3] = [
                    ("e", &tr.e, mu, 1.0, mu.powf(me)),
                    ("psi", &tr.psi, 1.0, mu, mu.powf(mp)),
                    ("psie", &tr.psie, mu, mu, mu.powf(me + mp)),
                ];
                for (which, f, sx, st, factor) in cases {
                    let base = f.eval(&x, &t)?;
                    let scaled_v = f.eval(&scaled(&x, sx), &scaled(&t, st))?;
                    let err = (scaled_v - factor * base).abs();
                    let scale = (factor * base).abs().max(1e-300);
                    if err > tol * scale.max(1.0) {
                        let degree = match which {
                            "e" => me,
                            "psi" => mp,
                            _ => me + mp,
                        };
                        return Err(ClassicalError::NotHomogeneous {
                            which,
                            degree,
                            error: err / scale,
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

fn unit(v: &[f64], what: &'static str) -> Result<(), ClassicalError> {
    if (norm(v) - 1.0).abs() > 1e-9 {
        Err(ClassicalError::NotUnit(what))
    } else {
        Ok(())
    }
}

fn which_name(which: Face) -> &'static str {
    which.name()
}

/// Radial limit of `a` towards a boundary face.
///
/// `x` is a unit direction when `which` puts x at infinity, a finite point
/// otherwise; likewise for `theta`.
pub fn extract_component(
    a: &Expression,
    order: OrderPair,
    which: Face,
    x: &[f64],
    theta: &[f64],
    limit: &RadialLimit,
) -> Result<f64, ClassicalError> {
    radial_component(|x, t| a.eval(x, t), order, which, x, theta, limit)
}

/// Component of `D_x^beta D_θ^alpha a`, whose order is
/// `(m_e - |beta|, m_ψ - |alpha|)`.
#[allow(clippy::too_many_arguments)]
pub fn extract_derivative_component(
    a: &Expression,
    order: OrderPair,
    beta: &[usize],
    alpha: &[usize],
    which: Face,
    x: &[f64],
    theta: &[f64],
    limit: &RadialLimit,
) -> Result<f64, ClassicalError> {
    let k = beta.iter().chain(alpha).sum::<usize>();
    let reduced = OrderPair::new(
        order.m_e - beta.iter().sum::<usize>() as f64,
        order.m_psi - alpha.iter().sum::<usize>() as f64,
    );
    let f = |x: &[f64], t: &[f64]| -> Result<f64, EvalError> {
        Ok(a.eval_jet(x, t, k)?.partial(beta, alpha).unwrap_or(0.0))
    };
    radial_component(f, reduced, which, x, theta, limit)
}

fn radial_component(
    a: impl Fn(&[f64], &[f64]) -> Result<f64, EvalError>,
    order: OrderPair,
    which: Face,
    x: &[f64],
    theta: &[f64],
    limit: &RadialLimit,
) -> Result<f64, ClassicalError> {
    let (me, mp) = (order.m_e, order.m_psi);
    let res = match which {
        Face::E => {
            unit(x, "x direction")?;
            limit.limit(|r| Ok(r.powf(-me) * a(&scaled(x, r), theta)?))
        }
        Face::Psi => {
            unit(theta, "theta direction")?;
            limit.limit(|r| Ok(r.powf(-mp) * a(x, &scaled(theta, r))?))
        }
        Face::PsiE => {
            unit(x, "x direction")?;
            unit(theta, "theta direction")?;
            limit.limit(|r| Ok(r.powf(-me - mp) * a(&scaled(x, r), &scaled(theta, r))?))
        }
        Face::Interior => return a(x, theta).map_err(Into::into),
    };
    res.map_err(|source| match source {
        LimitError::Eval(e) => ClassicalError::Eval(e),
        other => ClassicalError::NotClassical {
            which: which_name(which),
            source: other,
        },
    })
}

/// Extracted principal component, cross-checked against the declared triple.
pub fn principal_component(
    a: &ClassicalSymbol,
    which: Face,
    x: &[f64],
    theta: &[f64],
    limit: &RadialLimit,
) -> Result<f64, ClassicalError> {
    let extracted = extract_component(&a.base, a.order, which, x, theta, limit)?;
    if let Some(tr) = &a.triple {
        let declared = tr.component(which).eval(x, theta)?;
        if (declared - extracted).abs() > 1e-6 * declared.abs().max(1.0) {
            return Err(ClassicalError::DeclaredMismatch {
                which: which_name(which),
                declared,
                extracted,
            });
        }
    }
    Ok(extracted)
}

/// Extends a component known on unit directions by homogeneity:
/// `a^e(x, θ) = |x|^{m_e} a^e(x/|x|, θ)` and analogues.
pub fn extend_homogeneous(
    which: Face,
    order: OrderPair,
    x: &[f64],
    theta: &[f64],
    on_units: impl Fn(&[f64], &[f64]) -> Result<f64, ClassicalError>,
) -> Result<f64, ClassicalError> {
    let (rx, rt) = (norm(x), norm(theta));
    match which {
        Face::E => Ok(rx.powf(order.m_e) * on_units(&scaled(x, 1.0 / rx), theta)?),
        Face::Psi => Ok(rt.powf(order.m_psi) * on_units(x, &scaled(theta, 1.0 / rt))?),
        Face::PsiE => Ok(rx.powf(order.m_e)
            * rt.powf(order.m_psi)
            * on_units(&scaled(x, 1.0 / rx), &scaled(theta, 1.0 / rt))?),
        Face::Interior => on_units(x, theta),
    }
}

/// Excision profile `χ(z) = S((|z| - R1)/(R2 - R1))`, clamped to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Excision {
    pub inner: f64,
    pub outer: f64,
}

impl Default for Excision {
    fn default() -> Self {
        Excision {
            inner: 1.0,
            outer: 2.0,
        }
    }
}

impl Excision {
    pub fn new(inner: f64, outer: f64) -> Self {
        assert!(0.0 < inner && inner < outer, "excision radii must satisfy 0 < R1 < R2");
        Excision { inner, outer }
    }

    pub fn profile(&self, z: &[f64]) -> f64 {
        let u = (norm(z) - self.inner) / (self.outer - self.inner);
        if u <= 0.0 {
            0.0
        } else if u >= 1.0 {
            1.0
        } else {
            u * u * u * (10.0 + u * (-15.0 + 6.0 * u))
        }
    }

    fn wrap(&self, var: VarKind, body: Node) -> Node {
        Node::Excise {
            var,
            inner: self.inner,
            outer: self.outer,
            body: Box::new(body),
        }
    }
}

/// `a_p = χ^e a^e + χ^ψ (a^ψ - χ^e a^{ψe})` as an expression.
///
/// Components are only evaluated where their excision factor is non-zero,
/// so singularities of homogeneous functions at the origin are harmless.
pub fn principal_part(triple: &Triple, chi_e: Excision, chi_psi: Excision) -> Expression {
    let (d, s) = (triple.e.d(), triple.e.s());
    let e = chi_e.wrap(VarKind::X, triple.e.root().clone());
    let corner = chi_e.wrap(VarKind::X, triple.psie.root().clone());
    let psi = chi_psi.wrap(
        VarKind::T,
        Node::Sub(Box::new(triple.psi.root().clone()), Box::new(corner)),
    );
    let root = Node::Add(Box::new(e), Box::new(psi));
    Expression::from_node(root, d, s).expect("principal part of a validated triple")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompatibilityReport {
    pub pass: bool,
    pub max_discrepancy: f64,
    /// `(x direction, θ direction)` of the worst pair when failing.
    pub witness: Option<(Vec<f64>, Vec<f64>)>,
}

/// Checks `σ_ψ(a^e) = σ_e(a^ψ) = a^{ψe}` at random unit direction pairs.
pub fn compatibility_check(
    triple: &Triple,
    order: OrderPair,
    pairs: usize,
    tol: f64,
    seed: u64,
    limit: &RadialLimit,
) -> Result<CompatibilityReport, ClassicalError> {
    let (d, s) = (triple.e.d(), triple.e.s());
    let mut g = rng(seed);
    let dirs: Vec<(Vec<f64>, Vec<f64>)> = (0..pairs)
        .map(|_| (random_unit(&mut g, d), random_unit(&mut g, s)))
        .collect();
    let mut worst = (0.0f64, None);
    for (xd, td) in dirs {
        let corner = triple.psie.eval(&xd, &td)?;
        let from_e = extract_component(&triple.e, order, Face::Psi, &xd, &td, limit)?;
        let from_psi = extract_component(&triple.psi, order, Face::E, &xd, &td, limit)?;
        let scale = corner.abs().max(1.0);
        let gap = ((from_e - corner).abs().max((from_psi - corner).abs())) / scale;
        if worst.1.is_none() || gap > worst.0 {
            worst = (gap, Some((xd, td)));
        }
    }
    let pass = worst.0 <= tol;
    Ok(CompatibilityReport {
        pass,
        max_discrepancy: worst.0,
        witness: if pass { None } else { worst.1 },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipticityReport {
    pub min_abs: f64,
    pub max_abs: f64,
    pub argmin: FacePoint,
    pub elliptic: bool,
    pub eps_ell: f64,
}

/// Finite-factor samples: origin plus shells at the listed radii.
pub fn ball_samples(n: usize, radii: &[f64], directions: usize) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; n]];
    let dirs = sphere_points(n, directions);
    for &r in radii {
        for u in &dirs {
            out.push(scaled(u, r));
        }
    }
    out
}

/// Boundary mesh over the three faces of `B^d × B^s`.
pub fn boundary_mesh(d: usize, s: usize) -> Vec<FacePoint> {
    let radii = [0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 64.0];
    let xd = sphere_points(d, 32);
    let td = sphere_points(s, 32);
    let xb = ball_samples(d, &radii, 16);
    let tb = ball_samples(s, &radii, 16);
    let mut mesh = Vec::new();
    for u in &xd {
        for t in &tb {
            mesh.push(FacePoint::e_face(u, t));
        }
    }
    for x in &xb {
        for v in &td {
            mesh.push(FacePoint::psi_face(x, v));
        }
    }
    for u in &xd {
        for v in &td {
            mesh.push(FacePoint::corner(u, v));
        }
    }
    mesh
}

/// Min of `|transport(a)|` over the boundary mesh; elliptic iff it exceeds
/// `eps_ell` times the mesh maximum.
pub fn ellipticity_check(
    a: &Expression,
    order: OrderPair,
    eps_ell: f64,
    limit: &RadialLimit,
) -> Result<EllipticityReport, ClassicalError> {
    let mesh = boundary_mesh(a.d(), a.s());
    let values = mesh
        .par_iter()
        .map(|p| transport(a, order, p, limit).map(f64::abs))
        .collect::<Result<Vec<f64>, CompactError>>()?;
    let mut imin = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[imin] {
            imin = i;
        }
    }
    let max_abs = values.iter().copied().fold(0.0, f64::max);
    let min_abs = values[imin];
    Ok(EllipticityReport {
        min_abs,
        max_abs,
        argmin: mesh[imin].clone(),
        elliptic: min_abs > eps_ell * max_abs,
        eps_ell,
    })
}
