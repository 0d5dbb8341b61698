//! Radial compactification `ι: R^d → (B^d)°`, boundary defining functions,
//! symbol transport and the face stratification of `B^d × B^s`.

use serde::{Deserialize, Serialize};

use crate::expr::{EvalError, Expression};
use crate::extrap::{LimitError, RadialLimit};
use crate::sample::{norm, scaled};
use crate::symbols::OrderPair;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CompactError {
    #[error("boundary point not invertible (|y| = {0})")]
    NotInvertible(f64),
    #[error("invalid point: |{which}| = {norm} exceeds 1")]
    InvalidPoint { which: &'static str, norm: f64 },
    #[error("not classical at {face:?}: {source}")]
    NotClassical { face: Face, source: LimitError },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// `ι` is exactly `(x/|x|)(1 - 1/|x|)` from this radius on.
pub const OUTER_RADIUS: f64 = 3.0;
/// `h(y) = |y|` from this ball radius on.
pub const INNER_BALL_RADIUS: f64 = 2.0 / 3.0;

/// Radial profile of `ι`: `r g(r^2)` below 3, `(r-1)/r` above.
///
/// `g` is the quadratic that matches value, first and second derivative at
/// `r = 3`, so the profile is `C^2` across the seam and smooth at 0.
pub fn rho(r: f64) -> f64 {
    if r >= OUTER_RADIUS {
        (r - 1.0) / r
    } else {
        let v = r * r - 9.0;
        r * (2.0 / 9.0 - v / 162.0 + v * v / 5832.0)
    }
}

pub fn rho_prime(r: f64) -> f64 {
    if r >= OUTER_RADIUS {
        1.0 / (r * r)
    } else {
        let v = r * r - 9.0;
        1.0 / 9.0 - v / 81.0 + 5.0 * v * v / 5832.0
    }
}

/// `⟨z⟩ = sqrt(1 + |z|^2)`.
pub fn weight(v: &[f64]) -> f64 {
    (1.0 + v.iter().map(|c| c * c).sum::<f64>()).sqrt()
}

pub fn iota(x: &[f64]) -> Vec<f64> {
    let r = norm(x);
    if r == 0.0 {
        return x.to_vec();
    }
    scaled(x, rho(r) / r)
}

/// Inverse of [`iota`]; closed form outside radius 2/3, safeguarded Newton inside.
pub fn iota_inv(y: &[f64]) -> Result<Vec<f64>, CompactError> {
    let s = norm(y);
    if s >= 1.0 - 1e-12 {
        return Err(CompactError::NotInvertible(s));
    }
    if s == 0.0 {
        return Ok(y.to_vec());
    }
    if s > INNER_BALL_RADIUS {
        return Ok(scaled(y, 1.0 / (s * (1.0 - s))));
    }
    Ok(scaled(y, radial_inverse(s) / s))
}

// rho is increasing on [0, 3] with rho(3) = 2/3.
fn radial_inverse(s: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, OUTER_RADIUS);
    let mut r = 4.5 * s;
    for _ in 0..100 {
        let f = rho(r) - s;
        if f == 0.0 {
            return r;
        }
        if f > 0.0 {
            hi = r;
        } else {
            lo = r;
        }
        let mut next = r - f / rho_prime(r);
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - r).abs() <= 1e-16 * r.max(1e-300) {
            return next;
        }
        r = next;
    }
    r
}

/// `h` on the ball: `|y|^2 q(|y|^2)` inside radius 2/3, `|y|` outside.
pub fn h(y: &[f64]) -> f64 {
    let s = norm(y);
    if s > INNER_BALL_RADIUS {
        s
    } else {
        let u = s * s;
        u * (45.0 / 16.0 - 135.0 / 32.0 * u + 729.0 / 256.0 * u * u)
    }
}

/// Boundary defining function `1 - h(y)`.
pub fn bdf(y: &[f64]) -> f64 {
    1.0 - h(y)
}

/// Boundary stratum of `B^d × B^s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Face {
    Interior,
    E,
    Psi,
    #[serde(rename = "psie")]
    PsiE,
}

impl Face {
    pub fn index(self) -> usize {
        match self {
            Face::Interior => 0,
            Face::E | Face::Psi => 1,
            Face::PsiE => 2,
        }
    }

    /// The three boundary faces.
    pub const BOUNDARY: [Face; 3] = [Face::E, Face::Psi, Face::PsiE];

    pub fn x_at_infinity(self) -> bool {
        matches!(self, Face::E | Face::PsiE)
    }

    pub fn theta_at_infinity(self) -> bool {
        matches!(self, Face::Psi | Face::PsiE)
    }

    pub fn name(self) -> &'static str {
        match self {
            Face::Interior => "interior",
            Face::E => "e",
            Face::Psi => "psi",
            Face::PsiE => "psie",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FacePoint {
    pub face: Face,
    pub y: Vec<f64>,
    pub gamma: Vec<f64>,
}

impl FacePoint {
    pub fn index(&self) -> usize {
        self.face.index()
    }

    /// Point with `x` at infinity in direction `x_dir` and finite `theta`.
    pub fn e_face(x_dir: &[f64], theta: &[f64]) -> Self {
        FacePoint {
            face: Face::E,
            y: x_dir.to_vec(),
            gamma: iota(theta),
        }
    }

    pub fn psi_face(x: &[f64], theta_dir: &[f64]) -> Self {
        FacePoint {
            face: Face::Psi,
            y: iota(x),
            gamma: theta_dir.to_vec(),
        }
    }

    pub fn corner(x_dir: &[f64], theta_dir: &[f64]) -> Self {
        FacePoint {
            face: Face::PsiE,
            y: x_dir.to_vec(),
            gamma: theta_dir.to_vec(),
        }
    }
}

/// Classifies `(y, gamma)`, snapping norms within `tol` of 1 onto the sphere.
pub fn face_classify(y: &[f64], gamma: &[f64], tol: f64) -> Result<FacePoint, CompactError> {
    let snap = |v: &[f64], which: &'static str| -> Result<(Vec<f64>, bool), CompactError> {
        let n = norm(v);
        if n > 1.0 + tol {
            return Err(CompactError::InvalidPoint { which, norm: n });
        }
        if (n - 1.0).abs() <= tol && n > 0.0 {
            Ok((scaled(v, 1.0 / n), true))
        } else {
            Ok((v.to_vec(), false))
        }
    };
    let (y, ye) = snap(y, "y")?;
    let (gamma, gp) = snap(gamma, "gamma")?;
    let face = match (ye, gp) {
        (false, false) => Face::Interior,
        (true, false) => Face::E,
        (false, true) => Face::Psi,
        (true, true) => Face::PsiE,
    };
    Ok(FacePoint { face, y, gamma })
}

/// `b(y, γ) = (1-h(y))^{m_e} (1-h(γ))^{m_ψ} a(ι^{-1} y, ι^{-1} γ)`, continued to
/// the boundary by radial extrapolation.
pub fn transport(
    a: &Expression,
    order: OrderPair,
    p: &FacePoint,
    limit: &RadialLimit,
) -> Result<f64, CompactError> {
    transport_with(|x, t| a.eval(x, t), order, p, limit)
}

/// [`transport`] for any scalar function of `(x, θ)`.
pub fn transport_with(
    f: impl Fn(&[f64], &[f64]) -> Result<f64, EvalError>,
    order: OrderPair,
    p: &FacePoint,
    limit: &RadialLimit,
) -> Result<f64, CompactError> {
    let (me, mp) = (order.m_e, order.m_psi);
    let finite = |v: &[f64]| iota_inv(v);
    match p.face {
        Face::Interior => {
            let x = finite(&p.y)?;
            let t = finite(&p.gamma)?;
            Ok(bdf(&p.y).powf(me) * bdf(&p.gamma).powf(mp) * f(&x, &t)?)
        }
        Face::E => {
            let t = finite(&p.gamma)?;
            let wt = bdf(&p.gamma).powf(mp);
            limit
                .limit(|r| Ok(r.powf(-me) * wt * f(&scaled(&p.y, r), &t)?))
                .map_err(|source| classical_error(Face::E, source))
        }
        Face::Psi => {
            let x = finite(&p.y)?;
            let wx = bdf(&p.y).powf(me);
            limit
                .limit(|r| Ok(wx * r.powf(-mp) * f(&x, &scaled(&p.gamma, r))?))
                .map_err(|source| classical_error(Face::Psi, source))
        }
        Face::PsiE => limit
            .limit(|r| Ok(r.powf(-me - mp) * f(&scaled(&p.y, r), &scaled(&p.gamma, r))?))
            .map_err(|source| classical_error(Face::PsiE, source)),
    }
}

fn classical_error(face: Face, source: LimitError) -> CompactError {
    match source {
        LimitError::Eval(e) => CompactError::Eval(e),
        other => CompactError::NotClassical {
            face,
            source: other,
        },
    }
}
