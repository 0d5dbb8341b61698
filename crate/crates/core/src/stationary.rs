//! Stationary sets `C^•` of the face components, their images under the
//! extended map `λ̃(x, θ) = (x, ∇_xφ)`, tangent frames and neatness checks.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compact::{iota, Face};
use crate::phase::{face_system, nondegeneracy_of, FaceSystem, PhaseError, PhaseFunction, RANK_RTOL};
use crate::sample::{distance, norm, normalized, random_unit, rng, scaled, sphere_points};

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub sphere_directions: usize,
    /// Directions per shell for finite-factor seeds.
    pub ball_directions: usize,
    pub ball_radii: Vec<f64>,
    pub newton_tol: f64,
    pub max_iter: usize,
    pub dedupe: f64,
    /// Iterates leaving this radius are treated as escaping to a corner.
    pub escape_radius: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            sphere_directions: 64,
            ball_directions: 16,
            ball_radii: vec![0.25, 0.5, 1.0, 2.0, 4.0],
            newton_tol: 1e-10,
            max_iter: 50,
            dedupe: 1e-4,
            escape_radius: 1e8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryPoint {
    pub face: Face,
    /// Unit direction on faces e/ψe, finite point on face ψ.
    pub x: Vec<f64>,
    /// Unit direction on faces ψ/ψe, finite point on face e.
    pub theta: Vec<f64>,
    pub residual: f64,
    pub singular_values: Vec<f64>,
    pub rank: usize,
    pub nondegenerate: bool,
    pub seed_index: usize,
}

impl StationaryPoint {
    /// Position in `B^d × B^s`.
    pub fn compactified(&self) -> (Vec<f64>, Vec<f64>) {
        let x = if self.face.x_at_infinity() {
            self.x.clone()
        } else {
            iota(&self.x)
        };
        let t = if self.face.theta_at_infinity() {
            self.theta.clone()
        } else {
            iota(&self.theta)
        };
        (x, t)
    }
}

/// Tangent vector `(δx, δξ)` in conic coordinates.
pub type TangentVector = (Vec<f64>, Vec<f64>);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagrangianPoint {
    pub face: Face,
    /// Unit direction on faces e/ψe, finite on face ψ.
    pub x: Vec<f64>,
    /// Finite on face e, unit direction on faces ψ/ψe.
    pub xi: Vec<f64>,
    pub source: StationaryPoint,
    /// `None` until [`tangent_frame`] has been attached.
    pub frame: Option<Vec<TangentVector>>,
}

impl LagrangianPoint {
    /// Position in `B^d × B^d`.
    pub fn compactified(&self) -> Vec<f64> {
        let mut out = if self.face.x_at_infinity() {
            self.x.clone()
        } else {
            iota(&self.x)
        };
        if self.face.theta_at_infinity() {
            out.extend_from_slice(&self.xi);
        } else {
            out.extend(iota(&self.xi));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryCloud {
    pub face: Face,
    pub points: Vec<StationaryPoint>,
    pub lagrangian: Vec<LagrangianPoint>,
    pub seeds: usize,
    pub dedupe: f64,
}

fn seeds_for(face: Face, d: usize, s: usize, cfg: &SearchConfig) -> Vec<(Vec<f64>, Vec<f64>)> {
    let finite = |n: usize| {
        let mut out = vec![vec![0.0; n]];
        let dirs = sphere_points(n, cfg.ball_directions);
        for &r in &cfg.ball_radii {
            out.extend(dirs.iter().map(|u| scaled(u, r)));
        }
        out
    };
    let xs = if face.x_at_infinity() {
        sphere_points(d, cfg.sphere_directions)
    } else {
        finite(d)
    };
    let ts = if face.theta_at_infinity() {
        sphere_points(s, cfg.sphere_directions)
    } else {
        finite(s)
    };
    let mut out = Vec::with_capacity(xs.len() * ts.len());
    for x in &xs {
        for t in &ts {
            out.push((x.clone(), t.clone()));
        }
    }
    out
}

/// Moore-Penrose step `-J^+ F`.
fn gauss_newton_step(j: &DMatrix<f64>, f: &[f64]) -> Option<Vec<f64>> {
    if j.ncols() == 0 {
        return None;
    }
    let svd = j.clone().svd(true, true);
    let max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return None;
    }
    let rhs = DVector::from_column_slice(f);
    let sol = svd.solve(&rhs, RANK_RTOL * max).ok()?;
    Some(sol.iter().map(|v| -v).collect())
}

fn apply_step(sys: &FaceSystem, x: &[f64], t: &[f64], delta: &[f64], lambda: f64) -> (Vec<f64>, Vec<f64>) {
    let step: Vec<f64> = delta.iter().map(|v| v * lambda).collect();
    let (dx, dt) = sys.ambient(&step);
    let move_factor = |p: &[f64], dp: &[f64], sphere: bool| {
        let q: Vec<f64> = p.iter().zip(dp).map(|(a, b)| a + b).collect();
        if sphere {
            normalized(&q)
        } else {
            q
        }
    };
    (
        move_factor(x, &dx, sys.face.x_at_infinity()),
        move_factor(t, &dt, sys.face.theta_at_infinity()),
    )
}

/// Damped Gauss-Newton from one seed; `None` if it does not converge.
pub fn newton(
    phase: &PhaseFunction,
    face: Face,
    x0: &[f64],
    t0: &[f64],
    cfg: &SearchConfig,
) -> Result<Option<(Vec<f64>, Vec<f64>)>, PhaseError> {
    let (mut x, mut t) = (x0.to_vec(), t0.to_vec());
    let sq = |v: &[f64]| v.iter().map(|c| c * c).sum::<f64>();
    let mut sys = match face_system(phase, face, &x, &t) {
        Ok(s) => s,
        Err(PhaseError::Eval(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    for _ in 0..=cfg.max_iter {
        let f2 = sq(&sys.residual);
        if f2.sqrt() <= cfg.newton_tol {
            return Ok(Some((x, t)));
        }
        let Some(delta) = gauss_newton_step(&sys.jacobian, &sys.residual) else {
            return Ok(None);
        };
        let mut lambda = 1.0;
        let mut accepted = None;
        while lambda >= 1e-6 {
            let (nx, nt) = apply_step(&sys, &x, &t, &delta, lambda);
            if let Ok(ns) = face_system(phase, face, &nx, &nt) {
                if sq(&ns.residual) <= (1.0 - 1e-4 * lambda) * f2 {
                    accepted = Some((nx, nt, ns));
                    break;
                }
            }
            lambda *= 0.5;
        }
        let Some((nx, nt, ns)) = accepted else {
            return Ok(None);
        };
        if norm(&nx) > cfg.escape_radius || norm(&nt) > cfg.escape_radius {
            return Ok(None);
        }
        x = nx;
        t = nt;
        sys = ns;
    }
    Ok(None)
}

fn finish_point(
    phase: &PhaseFunction,
    face: Face,
    x: Vec<f64>,
    t: Vec<f64>,
    seed_index: usize,
) -> Result<StationaryPoint, PhaseError> {
    // Independent re-evaluation of the residual and the rank data.
    let sys = face_system(phase, face, &x, &t)?;
    let nd = nondegeneracy_of(&sys, phase.s());
    Ok(StationaryPoint {
        face,
        residual: norm(&sys.residual),
        x,
        theta: t,
        singular_values: nd.singular_values,
        rank: nd.rank,
        nondegenerate: nd.nondegenerate,
        seed_index,
    })
}

/// Solves `∇_θ φ^face = 0` from the seed grid and deduplicates in
/// compactified coordinates (sequentially, in seed order).
pub fn stationary_solve(
    phase: &PhaseFunction,
    face: Face,
    cfg: &SearchConfig,
) -> Result<Vec<StationaryPoint>, PhaseError> {
    if face == Face::Interior {
        return Err(PhaseError::NotBoundary);
    }
    phase.triple()?;
    let seeds = seeds_for(face, phase.d(), phase.s(), cfg);
    let solved = seeds
        .par_iter()
        .enumerate()
        .map(|(i, (x0, t0))| -> Result<Option<StationaryPoint>, PhaseError> {
            match newton(phase, face, x0, t0, cfg)? {
                Some((x, t)) => Ok(Some(finish_point(phase, face, x, t, i)?)),
                None => Ok(None),
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(dedupe(solved.into_iter().flatten(), cfg.dedupe))
}

fn dedupe(points: impl Iterator<Item = StationaryPoint>, radius: f64) -> Vec<StationaryPoint> {
    let mut kept: Vec<(Vec<f64>, StationaryPoint)> = Vec::new();
    for p in points {
        let (a, b) = p.compactified();
        let key: Vec<f64> = a.into_iter().chain(b).collect();
        if kept.iter().all(|(k, _)| distance(k, &key) >= radius) {
            kept.push((key, p));
        }
    }
    kept.into_iter().map(|(_, p)| p).collect()
}

/// Image of a stationary point under the extended map `λ̃`.
pub fn lambda_extend(phase: &PhaseFunction, p: &StationaryPoint) -> Result<LagrangianPoint, StationaryError> {
    let sys = face_system(phase, p.face, &p.x, &p.theta)?;
    let g = sys.grad_x.clone();
    let xi = if p.face.theta_at_infinity() {
        let n = norm(&g);
        if n <= 1e-12 * (1.0 + norm(&p.x)) {
            return Err(StationaryError::LambdaUndefined {
                face: p.face,
                x: p.x.clone(),
                theta: p.theta.clone(),
            });
        }
        scaled(&g, 1.0 / n)
    } else {
        g
    };
    Ok(LagrangianPoint {
        face: p.face,
        x: p.x.clone(),
        xi,
        source: p.clone(),
        frame: None,
    })
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StationaryError {
    #[error("extended map undefined here: ∇_xφ vanishes at {face:?} point x={x:?}, θ={theta:?}")]
    LambdaUndefined {
        face: Face,
        x: Vec<f64>,
        theta: Vec<f64>,
    },
    #[error("kernel dimension {got} differs from the expected {expected} (degenerate point)")]
    KernelDimension { got: usize, expected: usize },
    #[error(transparent)]
    Phase(#[from] PhaseError),
}

/// Expected dimension of `Λ^face`.
pub fn expected_frame_size(face: Face, d: usize) -> usize {
    match face {
        Face::PsiE => d.saturating_sub(2),
        _ => d.saturating_sub(1),
    }
}

/// Null space of the face Jacobian, pushed forward by
/// `(δx, (δx·∇_x)∇_xφ + (δθ·∇_θ)∇_xφ)`. On faces where ξ is a direction the
/// ξ-part is projected onto the tangent space of the unit sphere.
pub fn tangent_frame(phase: &PhaseFunction, p: &StationaryPoint) -> Result<Vec<TangentVector>, StationaryError> {
    let sys = face_system(phase, p.face, &p.x, &p.theta)?;
    let (s, m) = (sys.jacobian.nrows(), sys.jacobian.ncols());
    let expected = expected_frame_size(p.face, phase.d());
    let kernel = null_space(&sys.jacobian);
    if kernel.len() != expected || m < s {
        return Err(StationaryError::KernelDimension {
            got: kernel.len(),
            expected,
        });
    }
    let g = &sys.grad_x;
    let gn = norm(g);
    let mut frame = Vec::with_capacity(kernel.len());
    for k in kernel {
        let (dx, dt) = sys.ambient(&k);
        let dxv = DVector::from_column_slice(&dx);
        let dtv = DVector::from_column_slice(&dt);
        let dg: Vec<f64> = (&sys.hess_xx * &dxv + &sys.hess_xt * &dtv).iter().copied().collect();
        let dxi = if p.face.theta_at_infinity() {
            let u = scaled(g, 1.0 / gn);
            let c: f64 = u.iter().zip(&dg).map(|(a, b)| a * b).sum();
            dg.iter().zip(&u).map(|(a, b)| (a - c * b) / gn).collect()
        } else {
            dg
        };
        frame.push((dx, dxi));
    }
    Ok(frame)
}

/// Orthonormal basis of `ker J` from the SVD of `J` padded to a square matrix.
pub fn null_space(j: &DMatrix<f64>) -> Vec<Vec<f64>> {
    let (r, c) = (j.nrows(), j.ncols());
    if c == 0 {
        return Vec::new();
    }
    let n = r.max(c);
    let mut padded = DMatrix::zeros(n, c);
    padded.view_mut((0, 0), (r, c)).copy_from(j);
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    let max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cut = if max == 0.0 { f64::INFINITY } else { RANK_RTOL * max };
    let mut out = Vec::new();
    for (i, sv) in svd.singular_values.iter().enumerate() {
        if max == 0.0 || *sv <= cut {
            out.push(vt.row(i).iter().copied().collect());
        }
    }
    out
}

/// Stationary points, Λ images and frames on one face.
pub fn face_cloud(phase: &PhaseFunction, face: Face, cfg: &SearchConfig) -> Result<StationaryCloud, StationaryError> {
    let points = stationary_solve(phase, face, cfg)?;
    let lagrangian = points
        .par_iter()
        .map(|p| {
            let mut lp = lambda_extend(phase, p)?;
            lp.frame = if p.nondegenerate {
                Some(tangent_frame(phase, p)?)
            } else {
                None
            };
            Ok(lp)
        })
        .collect::<Result<Vec<_>, StationaryError>>()?;
    Ok(StationaryCloud {
        face,
        seeds: seeds_for(face, phase.d(), phase.s(), cfg).len(),
        dedupe: cfg.dedupe,
        points,
        lagrangian,
    })
}

/// Clouds for the three boundary faces, in the order e, ψ, ψe.
pub fn all_clouds(phase: &PhaseFunction, cfg: &SearchConfig) -> Result<Vec<StationaryCloud>, StationaryError> {
    Face::BOUNDARY
        .iter()
        .map(|&f| face_cloud(phase, f, cfg))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeatnessReport {
    pub corner_points: usize,
    pub matched: usize,
    /// Corner points without nearby e- or ψ-face families, with the best
    /// distances found on each face.
    pub unmatched: Vec<(Vec<f64>, Vec<f64>, f64, f64)>,
    pub frame_dims_ok: bool,
    pub consistent: bool,
}

pub const CORNER_MATCH_TOL: f64 = 1e-3;

/// Checks that corner points are limits of e- and ψ-face families and
/// that frame sizes follow the codimension-s rule.
pub fn neatness_report(
    phase: &PhaseFunction,
    clouds: &[StationaryCloud],
    cfg: &SearchConfig,
) -> Result<NeatnessReport, StationaryError> {
    let d = phase.d();
    let mut frame_dims_ok = true;
    for c in clouds {
        for lp in &c.lagrangian {
            if let Some(f) = &lp.frame {
                if f.len() != expected_frame_size(c.face, d) {
                    frame_dims_ok = false;
                }
            }
        }
    }
    let corner: Vec<&StationaryPoint> = clouds
        .iter()
        .filter(|c| c.face == Face::PsiE)
        .flat_map(|c| c.points.iter())
        .collect();
    let mut matched = 0;
    let mut unmatched = Vec::new();
    for p in &corner {
        let target: Vec<f64> = p.x.iter().chain(&p.theta).copied().collect();
        let mut best = [f64::INFINITY; 2];
        for k in 6..=12 {
            let r = 2f64.powi(k);
            let attempts = [
                (0usize, Face::Psi, scaled(&p.x, r), p.theta.clone()),
                (1usize, Face::E, p.x.clone(), scaled(&p.theta, r)),
            ];
            for (slot, face, x0, t0) in attempts {
                if let Some((x, t)) = newton(phase, face, &x0, &t0, cfg)? {
                    let sp = finish_point(phase, face, x, t, 0)?;
                    let (a, b) = sp.compactified();
                    let key: Vec<f64> = a.into_iter().chain(b).collect();
                    best[slot] = best[slot].min(distance(&key, &target));
                }
            }
        }
        if best[0] <= CORNER_MATCH_TOL && best[1] <= CORNER_MATCH_TOL {
            matched += 1;
        } else {
            unmatched.push((p.x.clone(), p.theta.clone(), best[0], best[1]));
        }
    }
    Ok(NeatnessReport {
        corner_points: corner.len(),
        matched,
        consistent: unmatched.is_empty() && frame_dims_ok,
        unmatched,
        frame_dims_ok,
    })
}

/// Max relative error of the Euler identities `x·∇_xφ^e = φ^e`,
/// `θ·∇_θφ^ψ = φ^ψ` (and both for `φ^{ψe}`) at random points.
pub fn euler_check(phase: &PhaseFunction, samples: usize, seed: u64) -> Result<f64, PhaseError> {
    let tr = phase.triple()?;
    let (d, s) = (phase.d(), phase.s());
    let mut g = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let x = scaled(&random_unit(&mut g, d), 0.5 + 3.0 * rand::Rng::gen::<f64>(&mut g));
        let t = scaled(&random_unit(&mut g, s), 0.5 + 3.0 * rand::Rng::gen::<f64>(&mut g));
        let mut rel = |lhs: f64, rhs: f64, scale: f64| {
            worst = worst.max((lhs - rhs).abs() / scale.max(1e-300));
        };
        let je = tr.e.eval_jet(&x, &t, 1)?;
        let se = norm(&x) * norm(&je.grad_x()) + je.value().abs();
        rel(crate::sample::dot(&x, &je.grad_x()), je.value(), se);
        let jp = tr.psi.eval_jet(&x, &t, 1)?;
        let sp = norm(&t) * norm(&jp.grad_t()) + jp.value().abs();
        rel(crate::sample::dot(&t, &jp.grad_t()), jp.value(), sp);
        let jc = tr.psie.eval_jet(&x, &t, 1)?;
        let sc = norm(&x) * norm(&jc.grad_x()) + norm(&t) * norm(&jc.grad_t()) + jc.value().abs();
        rel(crate::sample::dot(&x, &jc.grad_x()), jc.value(), sc);
        rel(crate::sample::dot(&t, &jc.grad_t()), jc.value(), sc);
    }
    Ok(worst)
}

/// CSV rows: face, x-coordinates, ξ-coordinates, residual, smallest singular value.
pub fn write_csv<W: Write>(out: &mut W, clouds: &[StationaryCloud]) -> std::io::Result<()> {
    let (d, s) = clouds
        .iter()
        .flat_map(|c| c.lagrangian.first())
        .map(|p| (p.x.len(), p.xi.len()))
        .next()
        .unwrap_or((0, 0));
    let mut header = vec!["face".to_string()];
    header.extend((1..=d).map(|i| format!("x{i}")));
    header.extend((1..=s).map(|i| format!("xi{i}")));
    header.push("residual".into());
    header.push("min_singular_value".into());
    writeln!(out, "{}", header.join(","))?;
    for c in clouds {
        for p in &c.lagrangian {
            let mut row = vec![c.face.name().to_string()];
            row.extend(p.x.iter().map(|v| format!("{v:.12e}")));
            row.extend(p.xi.iter().map(|v| format!("{v:.12e}")));
            row.push(format!("{:.3e}", p.source.residual));
            let smin = p.source.singular_values.last().copied().unwrap_or(0.0);
            row.push(format!("{smin:.6e}"));
            writeln!(out, "{}", row.join(","))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_space_of_wide_matrix() {
        let j = DMatrix::from_row_slice(1, 3, &[1.0, 0.0, 0.0]);
        let k = null_space(&j);
        assert_eq!(k.len(), 2);
        for v in &k {
            assert!(v[0].abs() < 1e-14);
        }
    }

    #[test]
    fn frame_sizes() {
        assert_eq!(expected_frame_size(Face::Psi, 2), 1);
        assert_eq!(expected_frame_size(Face::PsiE, 2), 0);
        assert_eq!(expected_frame_size(Face::E, 1), 0);
    }
}
