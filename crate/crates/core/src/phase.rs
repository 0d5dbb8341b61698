//! Phase functions of order (1,1): admissibility of
//! `Φ = ⟨x⟩²|∇_xφ|² + ⟨θ⟩²|∇_θφ|²` and face-wise non-degeneracy.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::{boundary_mesh, principal_part, ClassicalError, ClassicalSymbol, Excision, Triple};
use crate::compact::{bdf, iota_inv, CompactError, Face, FacePoint};
use crate::expr::{EvalError, Expression};
use crate::extrap::{LimitError, RadialLimit};
use crate::sample::{norm, scaled, sphere_points, tangent_basis};
use crate::symbols::{check_estimates, OrderPair, SampleConfig};

pub const PHASE_ORDER: OrderPair = OrderPair::new(1.0, 1.0);

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PhaseError {
    #[error("phase needs a declared principal triple for face computations")]
    NoTriple,
    #[error("x dimension must be positive and the fiber dimension at least 1")]
    Dimensions,
    #[error("point is not on a boundary face")]
    NotBoundary,
    #[error("gradient extrapolation failed at {face:?}: {source}")]
    Limit { face: Face, source: LimitError },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Compact(#[from] CompactError),
    #[error(transparent)]
    Classical(#[from] ClassicalError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseFunction {
    pub symbol: ClassicalSymbol,
}

impl PhaseFunction {
    pub fn new(base: Expression, triple: Option<Triple>) -> Result<Self, PhaseError> {
        if base.d() == 0 || base.s() == 0 {
            return Err(PhaseError::Dimensions);
        }
        let mut symbol = ClassicalSymbol::new(base, PHASE_ORDER);
        symbol.triple = triple;
        Ok(PhaseFunction { symbol })
    }

    pub fn base(&self) -> &Expression {
        &self.symbol.base
    }

    pub fn d(&self) -> usize {
        self.symbol.d()
    }

    pub fn s(&self) -> usize {
        self.symbol.s()
    }

    pub fn triple(&self) -> Result<&Triple, PhaseError> {
        self.symbol.triple.as_ref().ok_or(PhaseError::NoTriple)
    }

    pub fn component(&self, face: Face) -> Result<&Expression, PhaseError> {
        match face {
            Face::Interior => Ok(self.base()),
            f => Ok(self.triple()?.component(f)),
        }
    }
}

/// `Φ(x, θ)` from first-order jets.
pub fn big_phi(phi: &Expression, x: &[f64], t: &[f64]) -> Result<f64, EvalError> {
    let jet = phi.eval_jet(x, t, 1)?;
    let gx: f64 = jet.grad_x().iter().map(|v| v * v).sum();
    let gt: f64 = jet.grad_t().iter().map(|v| v * v).sum();
    let wx = 1.0 + x.iter().map(|v| v * v).sum::<f64>();
    let wt = 1.0 + t.iter().map(|v| v * v).sum::<f64>();
    Ok(wx * gx + wt * gt)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityConfig {
    pub radius: f64,
    pub eps_ell: f64,
    pub limit: RadialLimit,
    pub max_exp: i32,
    pub directions: usize,
}

impl Default for AdmissibilityConfig {
    fn default() -> Self {
        AdmissibilityConfig {
            radius: 8.0,
            eps_ell: 1e-6,
            limit: RadialLimit::default(),
            max_exp: 10,
            directions: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub radius: f64,
    /// Min and max of `Φ/(⟨x⟩²⟨θ⟩²)` over mesh points with `|x|+|θ| ≥ R`.
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub witness: (Vec<f64>, Vec<f64>),
    /// Min and max of `|(γ̃∇_xφ, ỹ∇_θφ)|` over the boundary mesh.
    pub boundary_min: f64,
    pub boundary_max: f64,
    pub boundary_witness: FacePoint,
    pub admissible: bool,
}

fn shells(n: usize, max_exp: i32, directions: usize) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; n]];
    let dirs = sphere_points(n, directions);
    for k in 0..=max_exp {
        let r = 2f64.powi(k);
        out.extend(dirs.iter().map(|u| scaled(u, r)));
    }
    out
}

/// Boundary value of `(γ̃ ∇_xφ, ỹ ∇_θφ)` at a face point.
pub fn boundary_gradient(
    phi: &Expression,
    p: &FacePoint,
    limit: &RadialLimit,
) -> Result<Vec<f64>, PhaseError> {
    let (d, s) = (phi.d(), phi.s());
    let grad = |x: &[f64], t: &[f64]| -> Result<Vec<f64>, EvalError> {
        Ok(phi.eval_jet(x, t, 1)?.grad())
    };
    let weighted = |g: Vec<f64>, wx: f64, wt: f64| -> Vec<f64> {
        // x-gradient has order (0,1), θ-gradient order (1,0).
        g.iter()
            .enumerate()
            .map(|(i, v)| if i < d { v * wt } else { v * wx })
            .collect()
    };
    let lim = |f: &dyn Fn(f64) -> Result<Vec<f64>, EvalError>| {
        limit
            .limit_vec(d + s, f)
            .map_err(|source| match source {
                LimitError::Eval(e) => PhaseError::Eval(e),
                other => PhaseError::Limit {
                    face: p.face,
                    source: other,
                },
            })
    };
    match p.face {
        Face::Interior => {
            let x = iota_inv(&p.y)?;
            let t = iota_inv(&p.gamma)?;
            Ok(weighted(grad(&x, &t)?, bdf(&p.y), bdf(&p.gamma)))
        }
        Face::E => {
            let t = iota_inv(&p.gamma)?;
            let wt = bdf(&p.gamma);
            lim(&|r| Ok(weighted(grad(&scaled(&p.y, r), &t)?, 1.0 / r, wt)))
        }
        Face::Psi => {
            let x = iota_inv(&p.y)?;
            let wx = bdf(&p.y);
            lim(&|r| Ok(weighted(grad(&x, &scaled(&p.gamma, r))?, wx, 1.0 / r)))
        }
        Face::PsiE => lim(&|r| {
            Ok(weighted(
                grad(&scaled(&p.y, r), &scaled(&p.gamma, r))?,
                1.0 / r,
                1.0 / r,
            ))
        }),
    }
}

/// Interior ratio test on `|x|+|θ| ≥ R` plus joint non-vanishing of the
/// transported gradient pair on the boundary.
pub fn admissibility_check(
    phi: &Expression,
    cfg: &AdmissibilityConfig,
) -> Result<AdmissibilityReport, PhaseError> {
    let (d, s) = (phi.d(), phi.s());
    let xs = shells(d, cfg.max_exp, cfg.directions);
    let ts = shells(s, cfg.max_exp, cfg.directions);
    let mut pts = Vec::new();
    for x in &xs {
        for t in &ts {
            if norm(x) + norm(t) >= cfg.radius {
                pts.push((x.clone(), t.clone()));
            }
        }
    }
    let ratios = pts
        .par_iter()
        .map(|(x, t)| {
            let w = (1.0 + x.iter().map(|v| v * v).sum::<f64>())
                * (1.0 + t.iter().map(|v| v * v).sum::<f64>());
            Ok(big_phi(phi, x, t)? / w)
        })
        .collect::<Result<Vec<f64>, EvalError>>()?;
    let (imin, ratio_min) = argmin(&ratios);
    let ratio_max = ratios.iter().copied().fold(0.0, f64::max);

    let mesh = boundary_mesh(d, s);
    let bvals = mesh
        .par_iter()
        .map(|p| boundary_gradient(phi, p, &cfg.limit).map(|g| norm(&g)))
        .collect::<Result<Vec<f64>, PhaseError>>()?;
    let (bmin_i, boundary_min) = argmin(&bvals);
    let boundary_max = bvals.iter().copied().fold(0.0, f64::max);
    let admissible =
        ratio_min > cfg.eps_ell * ratio_max && boundary_min > cfg.eps_ell * boundary_max;
    Ok(AdmissibilityReport {
        radius: cfg.radius,
        ratio_min,
        ratio_max,
        witness: pts[imin].clone(),
        boundary_min,
        boundary_max,
        boundary_witness: mesh[bmin_i].clone(),
        admissible,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsorptionReport {
    /// `r = φ - φ_p` passes the symbol estimates at order (0,0).
    pub remainder_order_zero: bool,
    pub principal_admissible: bool,
    pub original_admissible: bool,
    /// Both verdicts agree.
    pub consistent: bool,
}

/// Splits `φ = φ_p + r` with `φ_p` the excised principal part of the
/// declared triple. `r` has order (0,0) and moves into the amplitude as
/// `e^{ir}`, so admissibility must be decided by `φ_p` alone.
pub fn absorption_check(phi: &PhaseFunction, cfg: &AdmissibilityConfig) -> Result<AbsorptionReport, PhaseError> {
    let triple = phi.triple()?;
    let principal = principal_part(triple, Excision::default(), Excision::default());
    let remainder = phi.base().sub(&principal);
    let est = check_estimates(&remainder, OrderPair::new(0.0, 0.0), 1, &SampleConfig::default())?;
    let principal_admissible = admissibility_check(&principal, cfg)?.admissible;
    let original_admissible = admissibility_check(phi.base(), cfg)?.admissible;
    Ok(AbsorptionReport {
        remainder_order_zero: est.passed(),
        principal_admissible,
        original_admissible,
        consistent: principal_admissible == original_admissible,
    })
}

/// First minimum (ties resolved towards the lower index).
pub(crate) fn argmin(v: &[f64]) -> (usize, f64) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x < v[best] {
            best = i;
        }
    }
    (best, v[best])
}

/// Linearization of `∇_θφ^face = 0` in face-adapted coordinates.
///
/// Coordinates are Euclidean for a finite factor and the tangent chart of
/// the unit sphere for a factor at infinity.
#[derive(Debug, Clone)]
pub struct FaceSystem {
    pub face: Face,
    pub residual: Vec<f64>,
    /// `s × m` Jacobian, `m` the face dimension.
    pub jacobian: DMatrix<f64>,
    /// Tangent bases used for sphere factors (empty for finite factors).
    pub x_basis: Vec<Vec<f64>>,
    pub t_basis: Vec<Vec<f64>>,
    pub grad_x: Vec<f64>,
    pub hess_xx: DMatrix<f64>,
    /// `∂_θ ∇_x φ^face`, `d × s`.
    pub hess_xt: DMatrix<f64>,
    pub hess_tt: DMatrix<f64>,
    pub value: f64,
}

impl FaceSystem {
    pub fn nx(&self) -> usize {
        if self.face.x_at_infinity() {
            self.x_basis.len()
        } else {
            self.hess_xx.nrows()
        }
    }

    /// Maps face coordinates to ambient `(δx, δθ)`.
    pub fn ambient(&self, delta: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let d = self.hess_xx.nrows();
        let s = self.hess_tt.nrows();
        let nx = self.nx();
        let lift = |basis: &[Vec<f64>], coeffs: &[f64], n: usize, sphere: bool| {
            if sphere {
                let mut v = vec![0.0; n];
                for (b, c) in basis.iter().zip(coeffs) {
                    v.iter_mut().zip(b).for_each(|(a, q)| *a += c * q);
                }
                v
            } else {
                coeffs.to_vec()
            }
        };
        (
            lift(&self.x_basis, &delta[..nx], d, self.face.x_at_infinity()),
            lift(&self.t_basis, &delta[nx..], s, self.face.theta_at_infinity()),
        )
    }
}

pub fn face_system(
    phase: &PhaseFunction,
    face: Face,
    x: &[f64],
    theta: &[f64],
) -> Result<FaceSystem, PhaseError> {
    if face == Face::Interior {
        return Err(PhaseError::NotBoundary);
    }
    let comp = phase.component(face)?;
    let jet = comp.eval_jet(x, theta, 2)?;
    let (d, s) = (phase.d(), phase.s());
    let h = jet.hessian();
    let h_tx = h.view((d, 0), (s, d)).into_owned();
    let h_tt = h.view((d, d), (s, s)).into_owned();
    let x_basis = if face.x_at_infinity() {
        tangent_basis(x)
    } else {
        Vec::new()
    };
    let t_basis = if face.theta_at_infinity() {
        tangent_basis(theta)
    } else {
        Vec::new()
    };
    let project = |m: &DMatrix<f64>, basis: &[Vec<f64>], sphere: bool| -> DMatrix<f64> {
        if !sphere {
            return m.clone();
        }
        DMatrix::from_fn(m.nrows(), basis.len(), |i, j| {
            (0..m.ncols()).map(|k| m[(i, k)] * basis[j][k]).sum()
        })
    };
    let jx = project(&h_tx, &x_basis, face.x_at_infinity());
    let jt = project(&h_tt, &t_basis, face.theta_at_infinity());
    let mut jacobian = DMatrix::zeros(s, jx.ncols() + jt.ncols());
    jacobian.view_mut((0, 0), (s, jx.ncols())).copy_from(&jx);
    jacobian
        .view_mut((0, jx.ncols()), (s, jt.ncols()))
        .copy_from(&jt);
    Ok(FaceSystem {
        face,
        residual: jet.grad_t(),
        jacobian,
        x_basis,
        t_basis,
        grad_x: jet.grad_x(),
        hess_xx: h.view((0, 0), (d, d)).into_owned(),
        hess_xt: h.view((0, d), (d, s)).into_owned(),
        hess_tt: h_tt,
        value: jet.value(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NondegeneracyReport {
    pub rank: usize,
    pub singular_values: Vec<f64>,
    pub smallest_singular_value: f64,
    pub nondegenerate: bool,
}

/// Relative cutoff for the rank decision.
pub const RANK_RTOL: f64 = 1e-6;

pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

pub fn rank_of(sv: &[f64]) -> usize {
    let max = sv.first().copied().unwrap_or(0.0);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&v| v > RANK_RTOL * max).count()
}

/// Rank of the face Jacobian of `∇_θφ^face` at a stationary point.
pub fn nondegeneracy_check(
    phase: &PhaseFunction,
    face: Face,
    x: &[f64],
    theta: &[f64],
) -> Result<NondegeneracyReport, PhaseError> {
    let sys = face_system(phase, face, x, theta)?;
    Ok(nondegeneracy_of(&sys, phase.s()))
}

pub(crate) fn nondegeneracy_of(sys: &FaceSystem, s: usize) -> NondegeneracyReport {
    let sv = singular_values(&sys.jacobian);
    let rank = rank_of(&sv);
    // Missing singular values (more rows than columns) count as zeros.
    let smallest = if sv.len() < s {
        0.0
    } else {
        sv.last().copied().unwrap_or(0.0)
    };
    NondegeneracyReport {
        rank,
        singular_values: sv,
        smallest_singular_value: smallest,
        nondegenerate: rank == s,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmin_prefers_first() {
        assert_eq!(argmin(&[3.0, 1.0, 1.0, 2.0]), (1, 1.0));
    }

    #[test]
    fn rank_with_relative_cutoff() {
        assert_eq!(rank_of(&[1.0, 1e-7]), 1);
        assert_eq!(rank_of(&[1.0, 1e-5]), 2);
        assert_eq!(rank_of(&[]), 0);
        assert_eq!(rank_of(&[0.0]), 0);
    }
}
