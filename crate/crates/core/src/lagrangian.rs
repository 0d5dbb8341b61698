//! One-forms `α^ψ = ξ·dx`, `α^e = -x·dξ` on Lagrangian frames and the
//! SG-Lagrangian validator.

use serde::{Deserialize, Serialize};

use crate::compact::Face;
use crate::sample::{dot, norm};
use crate::stationary::{expected_frame_size, LagrangianPoint, NeatnessReport, StationaryCloud};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OneFormKind {
    Psi,
    E,
}

pub fn oneform_eval(kind: OneFormKind, x: &[f64], xi: &[f64], dx: &[f64], dxi: &[f64]) -> f64 {
    match kind {
        OneFormKind::Psi => dot(xi, dx),
        OneFormKind::E => -dot(x, dxi),
    }
}

/// `ω(u, v) = δξ_u·δx_v - δξ_v·δx_u`.
pub fn omega(u: (&[f64], &[f64]), v: (&[f64], &[f64])) -> f64 {
    dot(u.1, v.0) - dot(v.1, u.0)
}

/// Antisymmetrized directional derivative of `α^e` along constant fields
/// `u`, `v` at `(x, ξ)`, by central differences (exact for the linear
/// coefficients of `α^e`).
pub fn d_alpha_e(x: &[f64], xi: &[f64], u: (&[f64], &[f64]), v: (&[f64], &[f64])) -> f64 {
    let h = 0.5;
    let shifted = |w: (&[f64], &[f64]), sign: f64| -> (Vec<f64>, Vec<f64>) {
        (
            x.iter().zip(w.0).map(|(a, b)| a + sign * h * b).collect(),
            xi.iter().zip(w.1).map(|(a, b)| a + sign * h * b).collect(),
        )
    };
    let deriv = |along: (&[f64], &[f64]), of: (&[f64], &[f64])| {
        let (xp, ep) = shifted(along, 1.0);
        let (xm, em) = shifted(along, -1.0);
        (oneform_eval(OneFormKind::E, &xp, &ep, of.0, of.1)
            - oneform_eval(OneFormKind::E, &xm, &em, of.0, of.1))
            / (2.0 * h)
    };
    deriv(u, v) - deriv(v, u)
}

/// Per-face Lagrangian points with attached frames.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianData {
    pub d: usize,
    pub e: Vec<LagrangianPoint>,
    pub psi: Vec<LagrangianPoint>,
    pub corner: Vec<LagrangianPoint>,
}

impl LagrangianData {
    pub fn from_clouds(d: usize, clouds: &[StationaryCloud]) -> Self {
        let pick = |f: Face| -> Vec<LagrangianPoint> {
            clouds
                .iter()
                .filter(|c| c.face == f)
                .flat_map(|c| c.lagrangian.iter().cloned())
                .collect()
        };
        LagrangianData {
            d,
            e: pick(Face::E),
            psi: pick(Face::Psi),
            corner: pick(Face::PsiE),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LagrangianError {
    #[error("missing tangent frame at {face:?} point x={x:?}")]
    MissingFrame { face: Face, x: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagrangianReport {
    pub alpha_psi_max: f64,
    pub alpha_e_max: f64,
    pub corner_pairing_max: f64,
    pub frame_dims_ok: bool,
    pub neat: Option<bool>,
    pub points: [usize; 3],
    pub witness: Option<String>,
    pub verdict: bool,
}

fn scale(p: &LagrangianPoint, dx: &[f64], dxi: &[f64]) -> f64 {
    (norm(&p.xi) * norm(dx) + norm(&p.x) * norm(dxi)).max(1e-300)
}

/// Relative maxima of the one-forms on their faces and of `⟨x, ξ⟩` on the
/// corner; empty faces pass.
pub fn lagrangian_validate(
    data: &LagrangianData,
    tol: f64,
    neatness: Option<&NeatnessReport>,
) -> Result<LagrangianReport, LagrangianError> {
    let mut frame_dims_ok = true;
    let mut witness = None;
    let mut track = |current: &mut f64, value: f64, what: &str, p: &LagrangianPoint| {
        if value > *current {
            *current = value;
        }
        if value > tol && witness.is_none() {
            witness = Some(format!("{what} = {value:.3e} at x={:?}, xi={:?}", p.x, p.xi));
        }
    };
    let (mut a_psi, mut a_e, mut pairing) = (0.0f64, 0.0f64, 0.0f64);
    let faces: [(Face, &Vec<LagrangianPoint>); 3] = [
        (Face::E, &data.e),
        (Face::Psi, &data.psi),
        (Face::PsiE, &data.corner),
    ];
    for (face, pts) in faces {
        let expected = expected_frame_size(face, data.d);
        for p in pts {
            let frame = p.frame.as_ref().ok_or_else(|| LagrangianError::MissingFrame {
                face,
                x: p.x.clone(),
            })?;
            if frame.len() != expected {
                frame_dims_ok = false;
            }
            for (dx, dxi) in frame {
                let sc = scale(p, dx, dxi);
                if matches!(face, Face::Psi | Face::PsiE) {
                    let v = oneform_eval(OneFormKind::Psi, &p.x, &p.xi, dx, dxi).abs() / sc;
                    track(&mut a_psi, v, "alpha_psi", p);
                }
                if matches!(face, Face::E | Face::PsiE) {
                    let v = oneform_eval(OneFormKind::E, &p.x, &p.xi, dx, dxi).abs() / sc;
                    track(&mut a_e, v, "alpha_e", p);
                }
            }
            if face == Face::PsiE {
                let v = dot(&p.x, &p.xi).abs() / (norm(&p.x) * norm(&p.xi)).max(1e-300);
                track(&mut pairing, v, "<x,xi>", p);
            }
        }
    }
    let neat = neatness.map(|n| n.consistent);
    let verdict = a_psi <= tol && a_e <= tol && pairing <= tol && frame_dims_ok && neat != Some(false);
    Ok(LagrangianReport {
        alpha_psi_max: a_psi,
        alpha_e_max: a_e,
        corner_pairing_max: pairing,
        frame_dims_ok,
        neat,
        points: [data.e.len(), data.psi.len(), data.corner.len()],
        witness,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairings() {
        let x = [1.0, 0.0];
        let xi = [0.0, 3.0];
        assert_eq!(oneform_eval(OneFormKind::E, &x, &xi, &[0.0, 0.0], &[0.0, 1.0]), 0.0);
        assert_eq!(oneform_eval(OneFormKind::E, &x, &xi, &[0.0, 0.0], &[1.0, 0.0]), -1.0);
        assert_eq!(oneform_eval(OneFormKind::Psi, &[0.0, 0.0], &xi, &[0.0, 0.0], &[1.0, 1.0]), 0.0);
    }
}
