//! Regularized pairings `⟨I_φ(a), u⟩` and a directional-decay wave-front
//! probe.
//!
//! The pairing is computed as the `ε → 0` limit of
//! `∬ e^{iφ} a u e^{-ε(|x|²+|θ|²)} dθ dx` on an `ε` ladder, each rung by a
//! nested trapezoid rule: an outer lattice in `x` and, per `x` slice, a
//! lattice in `θ` resolving the local oscillation of `e^{iφ}`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::expr::{EvalError, Expression, VarKind};
use crate::sample::norm;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OscIntError {
    #[error("regularization unstable: extrapolant differences {diffs:?}")]
    Unstable { diffs: Vec<f64>, result: Box<OscIntResult> },
    #[error("quadrature needs {nodes} nodes, above the budget {budget}")]
    TooLarge { nodes: usize, budget: usize },
    #[error("invalid test function: {0}")]
    TestFunction(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// `u(x) = p(x) exp(-(x-c)ᵀQ(x-c)) exp(-i k·x)` with `Q` positive definite.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    prefactor: Expression,
    quad: DMatrix<f64>,
    center: Vec<f64>,
    modulation: Vec<f64>,
    lambda_min: f64,
}

impl TestFunction {
    pub fn new(prefactor: Expression, quad: DMatrix<f64>, center: Vec<f64>) -> Result<Self, OscIntError> {
        let d = prefactor.d();
        if quad.nrows() != d || quad.ncols() != d || center.len() != d {
            return Err(OscIntError::TestFunction(format!("envelope data must be {d}-dimensional")));
        }
        if prefactor.uses(VarKind::T) {
            return Err(OscIntError::TestFunction("prefactor depends on t".into()));
        }
        if (&quad - quad.transpose()).amax() > 1e-12 * quad.amax().max(1.0) {
            return Err(OscIntError::TestFunction("quadratic form is not symmetric".into()));
        }
        let lambda_min = quad.symmetric_eigenvalues().min();
        if quad.clone().cholesky().is_none() || lambda_min <= 0.0 {
            return Err(OscIntError::TestFunction("quadratic form is not positive definite".into()));
        }
        Ok(TestFunction {
            prefactor,
            quad,
            center,
            modulation: vec![0.0; d],
            lambda_min,
        })
    }

    /// `exp(-|x|²/2)`.
    pub fn standard(d: usize, s: usize) -> Self {
        Self::new(
            Expression::constant(1.0, d, s),
            DMatrix::identity(d, d) * 0.5,
            vec![0.0; d],
        )
        .expect("identity envelope")
    }

    /// `exp(-|x-x₀|²/(2σ²))`.
    pub fn bump(x0: &[f64], sigma: f64, s: usize) -> Result<Self, OscIntError> {
        let d = x0.len();
        Self::new(
            Expression::constant(1.0, d, s),
            DMatrix::identity(d, d) / (2.0 * sigma * sigma),
            x0.to_vec(),
        )
    }

    pub fn modulated(mut self, k: &[f64]) -> Self {
        self.modulation = k.to_vec();
        self
    }

    pub fn modulation(&self) -> &[f64] {
        &self.modulation
    }

    /// Complex conjugate (real prefactor, so only the modulation flips).
    pub fn conj(&self) -> Self {
        let mut c = self.clone();
        c.modulation.iter_mut().for_each(|k| *k = -*k);
        c
    }

    /// Radius beyond which the envelope is below `e^{-level}`.
    pub fn envelope_radius(&self, level: f64) -> f64 {
        (level / self.lambda_min).sqrt()
    }

    pub fn eval(&self, x: &[f64], t0: &[f64]) -> Result<Complex64, EvalError> {
        let p = self.prefactor.eval(x, t0)?;
        let y: Vec<f64> = x.iter().zip(&self.center).map(|(a, c)| a - c).collect();
        let mut q = 0.0;
        for i in 0..y.len() {
            for j in 0..y.len() {
                q += y[i] * self.quad[(i, j)] * y[j];
            }
        }
        let kx: f64 = self.modulation.iter().zip(x).map(|(k, v)| k * v).sum();
        Ok(Complex64::from_polar(p * (-q).exp(), -kx))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscIntConfig {
    pub eps_ladder: Vec<f64>,
    /// Upper bound for any lattice step.
    pub h_cap: f64,
    /// Inflation of sampled gradient maxima.
    pub safety: f64,
    pub max_nodes: usize,
    /// The `x` box ends where the test-function envelope drops below `e^{-envelope}`.
    pub envelope: f64,
}

impl Default for OscIntConfig {
    fn default() -> Self {
        OscIntConfig {
            eps_ladder: vec![1e-1, 3e-2, 1e-2, 3e-3, 1e-3],
            h_cap: 0.1,
            safety: 1.25,
            max_nodes: 200_000_000,
            envelope: 40.0,
        }
    }
}

/// `L(ε) = 6/√ε`.
pub fn truncation_radius(eps: f64) -> f64 {
    6.0 / eps.sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureInfo {
    pub x_nodes: usize,
    pub theta_nodes: usize,
    pub truncation_radius: f64,
    pub h_x: f64,
    pub h_theta_min: f64,
    pub h_theta_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscIntResult {
    pub value: Complex64,
    pub ladder: Vec<(f64, Complex64)>,
    pub extrapolants: Vec<Complex64>,
    pub residual: f64,
    pub quadrature: QuadratureInfo,
}

/// Per-slice fiber sums `G_ε(x) = h^s Σ_θ e^{iφ} a e^{-ε|θ|²}` on an `x` lattice.
struct FiberTable {
    d: usize,
    s: usize,
    eps: Vec<f64>,
    h_x: f64,
    xs: Vec<Vec<f64>>,
    g: Vec<Vec<Complex64>>,
    info: QuadratureInfo,
}

/// Visits the cube lattice `{-n..=n}^dim` scaled by `h`.
fn for_lattice(dim: usize, n: i64, h: f64, mut f: impl FnMut(&[f64])) {
    let mut idx = vec![-n; dim];
    let mut p: Vec<f64> = idx.iter().map(|&i| i as f64 * h).collect();
    loop {
        f(&p);
        let mut k = 0;
        loop {
            if k == dim {
                return;
            }
            if idx[k] < n {
                idx[k] += 1;
                p[k] = idx[k] as f64 * h;
                break;
            }
            idx[k] = -n;
            p[k] = -(n as f64) * h;
            k += 1;
        }
    }
}

fn pairwise(v: &[Complex64]) -> Complex64 {
    if v.len() <= 32 {
        return v.iter().sum();
    }
    let (a, b) = v.split_at(v.len() / 2);
    pairwise(a) + pairwise(b)
}

fn axis_points(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64)
        .collect()
}

fn grid_points(lo: &[f64], hi: &[f64], per_axis: usize) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    for (a, b) in lo.iter().zip(hi) {
        let axis = axis_points(*a, *b, per_axis);
        out = out
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push(*v);
                    q
                })
            })
            .collect();
    }
    out
}

impl FiberTable {
    fn build(
        phi: &Expression,
        a: &Expression,
        lo: &[f64],
        hi: &[f64],
        extra_freq: f64,
        cfg: &OscIntConfig,
    ) -> Result<Self, OscIntError> {
        let (d, s) = (phi.d(), phi.s());
        if d + s > 3 {
            return Err(OscIntError::Config(format!("dense quadrature needs d + s ≤ 3, got {}", d + s)));
        }
        if (a.d(), a.s()) != (d, s) {
            return Err(OscIntError::Config("amplitude dims differ from the phase".into()));
        }
        if cfg.eps_ladder.len() < 3 || cfg.eps_ladder.iter().any(|e| !(*e > 0.0)) {
            return Err(OscIntError::Config("need at least three positive ladder entries".into()));
        }
        let eps = cfg.eps_ladder.clone();
        let eps_min = eps.iter().copied().fold(f64::INFINITY, f64::min);
        let l_max = truncation_radius(eps_min);
        let lo: Vec<f64> = lo.iter().map(|v| v.max(-l_max)).collect();
        let hi: Vec<f64> = hi.iter().map(|v| v.min(l_max)).collect();

        // Gradient maxima on coarse samples: per x cell for θ, globally for x.
        let theta_samples = grid_points(&vec![-l_max; s], &vec![l_max; s], if s == 1 { 129 } else { 33 });
        let cells = 64usize;
        let per_axis_x = if d == 1 { cells + 1 } else { 17 };
        let x_samples = grid_points(&lo, &hi, per_axis_x);
        let grads: Vec<(f64, f64)> = x_samples
            .par_iter()
            .map(|x| {
                let mut gx = 0.0f64;
                let mut gt = 0.0f64;
                for t in &theta_samples {
                    let jet = phi.eval_jet(x, t, 1)?;
                    gx = gx.max(norm(&jet.grad_x()));
                    gt = gt.max(norm(&jet.grad_t()));
                }
                Ok((gx, gt))
            })
            .collect::<Result<_, EvalError>>()?;
        let gx_max = grads.iter().map(|g| g.0).fold(0.0, f64::max);
        let step = |g: f64| -> f64 {
            let bound = std::f64::consts::PI / (8.0 * cfg.safety * g);
            if bound.is_finite() {
                bound.min(cfg.h_cap)
            } else {
                cfg.h_cap
            }
        };
        let h_x = std::f64::consts::PI / (8.0 * (cfg.safety * gx_max + extra_freq));
        let h_x = if h_x.is_finite() { h_x.min(cfg.h_cap) } else { cfg.h_cap };

        let ranges: Vec<(i64, i64)> = lo
            .iter()
            .zip(&hi)
            .map(|(a, b)| ((a / h_x).floor() as i64, (b / h_x).ceil() as i64))
            .collect();
        let mut xs = vec![Vec::new()];
        for &(a, b) in &ranges {
            xs = xs
                .into_iter()
                .flat_map(|p| {
                    (a..=b).map(move |i| {
                        let mut q = p.clone();
                        q.push(i as f64 * h_x);
                        q
                    })
                })
                .collect();
        }

        // θ step of a slice: the worst sampled gradient among nearby samples.
        let h_theta_of = |x: &[f64]| -> f64 {
            if d == 1 {
                let span = (hi[0] - lo[0]).max(1e-300);
                let pos = ((x[0] - lo[0]) / span * cells as f64).clamp(0.0, cells as f64);
                let k = (pos.floor() as usize).min(cells - 1);
                step(grads[k].1.max(grads[k + 1].1))
            } else {
                step(grads.iter().map(|g| g.1).fold(0.0, f64::max))
            }
        };
        let slices: Vec<(f64, i64)> = xs
            .iter()
            .map(|x| {
                let h = h_theta_of(x);
                (h, (l_max / h).ceil() as i64)
            })
            .collect();
        let nodes: usize = slices.iter().map(|&(_, n)| ((2 * n + 1) as usize).pow(s as u32)).sum();
        if nodes > cfg.max_nodes {
            return Err(OscIntError::TooLarge {
                nodes,
                budget: cfg.max_nodes,
            });
        }
        let radii: Vec<f64> = eps.iter().map(|e| truncation_radius(*e)).collect();
        let g: Vec<Vec<Complex64>> = xs
            .par_iter()
            .zip(slices.par_iter())
            .map(|(x, &(h, n))| {
                let mut acc = vec![Complex64::new(0.0, 0.0); eps.len()];
                let mut err = None;
                for_lattice(s, n, h, |t| {
                    if err.is_some() {
                        return;
                    }
                    let v = match (phi.eval(x, t), a.eval(x, t)) {
                        (Ok(p), Ok(amp)) => Complex64::from_polar(amp, p),
                        (Err(e), _) | (_, Err(e)) => {
                            err = Some(e);
                            return;
                        }
                    };
                    let r2: f64 = t.iter().map(|c| c * c).sum();
                    let tmax = t.iter().fold(0.0f64, |m, c| m.max(c.abs()));
                    for (k, e) in eps.iter().enumerate() {
                        if tmax <= radii[k] {
                            acc[k] += v * (-e * r2).exp();
                        }
                    }
                });
                if let Some(e) = err {
                    return Err(e);
                }
                let w = h.powi(s as i32);
                Ok(acc.into_iter().map(|c| c * w).collect())
            })
            .collect::<Result<_, EvalError>>()?;
        let info = QuadratureInfo {
            x_nodes: xs.len(),
            theta_nodes: nodes,
            truncation_radius: l_max,
            h_x,
            h_theta_min: slices.iter().map(|p| p.0).fold(f64::INFINITY, f64::min),
            h_theta_max: slices.iter().map(|p| p.0).fold(0.0, f64::max),
        };
        Ok(FiberTable {
            d,
            s,
            eps,
            h_x,
            xs,
            g,
            info,
        })
    }

    /// `I_ε = h_x^d Σ_x G_ε(x) u(x) e^{-ε|x|²}` for every rung.
    fn pair(&self, u: &TestFunction) -> Result<Vec<Complex64>, EvalError> {
        let t0 = vec![0.0; self.s];
        let uv: Vec<Complex64> = self
            .xs
            .iter()
            .map(|x| u.eval(x, &t0))
            .collect::<Result<_, _>>()?;
        let w = self.h_x.powi(self.d as i32);
        Ok(self
            .eps
            .iter()
            .enumerate()
            .map(|(k, e)| {
                let l = truncation_radius(*e);
                let terms: Vec<Complex64> = self
                    .xs
                    .iter()
                    .zip(&uv)
                    .zip(&self.g)
                    .map(|((x, u), g)| {
                        if x.iter().any(|c| c.abs() > l) {
                            return Complex64::new(0.0, 0.0);
                        }
                        let r2: f64 = x.iter().map(|c| c * c).sum();
                        g[k] * u * (-e * r2).exp()
                    })
                    .collect();
                pairwise(&terms) * w
            })
            .collect())
    }
}

/// Quadratic extrapolation to `ε = 0` through consecutive rung triples.
pub fn extrapolate(eps: &[f64], values: &[Complex64]) -> Vec<Complex64> {
    (0..eps.len().saturating_sub(2))
        .map(|j| {
            let e = &eps[j..j + 3];
            let v = &values[j..j + 3];
            (0..3)
                .map(|i| {
                    let mut w = 1.0;
                    for m in 0..3 {
                        if m != i {
                            w *= -e[m] / (e[i] - e[m]);
                        }
                    }
                    v[i] * w
                })
                .sum()
        })
        .collect()
}

fn assemble(eps: &[f64], values: Vec<Complex64>, info: QuadratureInfo) -> (OscIntResult, Vec<f64>) {
    let extrapolants = extrapolate(eps, &values);
    let diffs: Vec<f64> = extrapolants.windows(2).map(|w| (w[1] - w[0]).norm()).collect();
    let value = *extrapolants.last().expect("ladder has three rungs");
    let residual = diffs.last().copied().unwrap_or(0.0);
    (
        OscIntResult {
            value,
            ladder: eps.iter().copied().zip(values).collect(),
            extrapolants,
            residual,
            quadrature: info,
        },
        diffs,
    )
}

/// Growing extrapolant differences above a noise floor.
fn unstable(diffs: &[f64], value: Complex64) -> bool {
    let floor = 1e-6 * value.norm().max(1.0);
    diffs.windows(2).any(|w| w[1] > w[0] && w[1] > floor)
}

/// `⟨I_φ(a), u⟩` by Gaussian regularization and extrapolation in `ε`.
///
/// Admissibility of `φ` and the symbol estimates of `a` are the caller's
/// responsibility.
pub fn oscint_eval(
    phi: &Expression,
    a: &Expression,
    u: &TestFunction,
    cfg: &OscIntConfig,
) -> Result<OscIntResult, OscIntError> {
    if u.center.len() != phi.d() {
        return Err(OscIntError::TestFunction("test function dims differ from the phase".into()));
    }
    let r = u.envelope_radius(cfg.envelope);
    let lo: Vec<f64> = u.center.iter().map(|c| c - r).collect();
    let hi: Vec<f64> = u.center.iter().map(|c| c + r).collect();
    let table = FiberTable::build(phi, a, &lo, &hi, norm(&u.modulation), cfg)?;
    let values = table.pair(u)?;
    let (result, diffs) = assemble(&table.eps, values, table.info.clone());
    if unstable(&diffs, result.value) {
        return Err(OscIntError::Unstable {
            diffs,
            result: Box::new(result),
        });
    }
    Ok(result)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub sigma: f64,
    pub scales: Vec<f64>,
    pub slope_threshold: f64,
    /// Magnitudes below this are treated as decayed.
    pub floor: f64,
    pub quadrature: OscIntConfig,
}

impl ProbeConfig {
    /// Distance from a singular point beyond which the Gaussian tail of the
    /// bump leaks less than `floor` into `F`; probe grids finer than this
    /// flag neighbours of singular points.
    pub fn resolution(&self) -> f64 {
        self.sigma * (2.0 * (2.0 * std::f64::consts::PI / self.floor).ln()).sqrt()
    }
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            sigma: 0.15,
            scales: vec![2.0, 4.0, 8.0, 16.0, 32.0],
            slope_threshold: -3.0,
            floor: 1e-8,
            quadrature: OscIntConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeVerdict {
    RegularDirection,
    PossibleWavefront,
}

impl ProbeVerdict {
    pub fn label(self) -> &'static str {
        match self {
            ProbeVerdict::RegularDirection => "regular direction",
            ProbeVerdict::PossibleWavefront => "possible wave-front direction",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WavefrontProbe {
    pub x0: Vec<f64>,
    pub xi_dir: Vec<f64>,
    pub scales: Vec<f64>,
    pub magnitudes: Vec<f64>,
    /// Per scale: extrapolated value (true) or finest rung (false).
    pub extrapolated: Vec<bool>,
    /// Least-squares slope of `log|F|` against `log λ`, magnitudes clamped
    /// at the floor.
    pub slope: f64,
    /// Fewer than three magnitudes above the floor.
    pub decayed: bool,
    pub verdict: ProbeVerdict,
}

fn fit_slope(scales: &[f64], mags: &[f64], floor: f64) -> f64 {
    let xs: Vec<f64> = scales.iter().map(|l| l.ln()).collect();
    let ys: Vec<f64> = mags.iter().map(|m| m.max(floor).ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}

/// The last extrapolant when it agrees with the one before; otherwise the
/// finest rung. Localized probes away from the support behave like
/// `e^{-c/ε}` in `ε`, where the quadratic model amplifies coarse rungs.
fn probe_value(eps: &[f64], values: &[Complex64], floor: f64) -> (Complex64, bool) {
    let ex = extrapolate(eps, values);
    let last = ex[ex.len() - 1];
    let prev = if ex.len() > 1 { ex[ex.len() - 2] } else { last };
    if (last - prev).norm() <= 1e-2 * last.norm() + floor {
        return (last, true);
    }
    let finest = eps
        .iter()
        .zip(values)
        .min_by(|a, b| a.0.total_cmp(b.0))
        .map(|p| *p.1)
        .expect("three rungs");
    (finest, false)
}

/// Probes `F(λ) = ⟨I_φ(a), u_{x₀} e^{-iλ ξ̂·x}⟩` at every `(x₀, ξ̂)` pair,
/// sharing one fiber table.
pub fn wavefront_scan(
    phi: &Expression,
    a: &Expression,
    locations: &[Vec<f64>],
    directions: &[Vec<f64>],
    cfg: &ProbeConfig,
) -> Result<Vec<WavefrontProbe>, OscIntError> {
    let d = phi.d();
    if d > 2 {
        return Err(OscIntError::Config("wave-front probing supports d ≤ 2".into()));
    }
    if cfg.scales.len() < 3 {
        return Err(OscIntError::Config("need at least three probe scales".into()));
    }
    if locations.iter().chain(directions).any(|v| v.len() != d) {
        return Err(OscIntError::Config("probe location or direction has the wrong length".into()));
    }
    if locations.is_empty() || directions.is_empty() {
        return Ok(Vec::new());
    }
    let bumps: Vec<TestFunction> = locations
        .iter()
        .map(|x0| TestFunction::bump(x0, cfg.sigma, phi.s()))
        .collect::<Result<_, _>>()?;
    let r = bumps[0].envelope_radius(cfg.quadrature.envelope);
    let lo: Vec<f64> = (0..d)
        .map(|i| locations.iter().map(|p| p[i]).fold(f64::INFINITY, f64::min) - r)
        .collect();
    let hi: Vec<f64> = (0..d)
        .map(|i| locations.iter().map(|p| p[i]).fold(f64::NEG_INFINITY, f64::max) + r)
        .collect();
    let lambda_max = cfg.scales.iter().copied().fold(0.0, f64::max);
    let table = FiberTable::build(phi, a, &lo, &hi, lambda_max, &cfg.quadrature)?;
    let mut out = Vec::new();
    for (x0, bump) in locations.iter().zip(&bumps) {
        for dir in directions {
            let unit = crate::sample::normalized(dir);
            let mut mags = Vec::with_capacity(cfg.scales.len());
            let mut extrapolated = Vec::with_capacity(cfg.scales.len());
            for &lambda in &cfg.scales {
                let u = bump.clone().modulated(&crate::sample::scaled(&unit, lambda));
                let values = table.pair(&u)?;
                let (value, used) = probe_value(&table.eps, &values, cfg.floor);
                mags.push(value.norm());
                extrapolated.push(used);
            }
            let above = mags.iter().filter(|m| **m > cfg.floor).count();
            let decayed = above < 3;
            let slope = fit_slope(&cfg.scales, &mags, cfg.floor);
            let verdict = if decayed || slope <= cfg.slope_threshold {
                ProbeVerdict::RegularDirection
            } else {
                ProbeVerdict::PossibleWavefront
            };
            out.push(WavefrontProbe {
                x0: x0.clone(),
                xi_dir: unit,
                scales: cfg.scales.clone(),
                magnitudes: mags,
                extrapolated,
                slope,
                decayed,
                verdict,
            });
        }
    }
    Ok(out)
}

pub fn wavefront_probe(
    phi: &Expression,
    a: &Expression,
    x0: &[f64],
    xi_dir: &[f64],
    cfg: &ProbeConfig,
) -> Result<WavefrontProbe, OscIntError> {
    let mut v = wavefront_scan(phi, a, &[x0.to_vec()], &[xi_dir.to_vec()], cfg)?;
    Ok(v.remove(0))
}

/// CSV rows `x0.., xi.., slope, verdict`.
pub fn write_probe_csv<W: std::io::Write>(out: &mut W, probes: &[WavefrontProbe]) -> std::io::Result<()> {
    let d = probes.first().map_or(0, |p| p.x0.len());
    let mut header: Vec<String> = (1..=d).map(|i| format!("x0_{i}")).collect();
    header.extend((1..=d).map(|i| format!("xi_{i}")));
    header.push("slope".into());
    header.push("verdict".into());
    writeln!(out, "{}", header.join(","))?;
    for p in probes {
        let mut row: Vec<String> = p.x0.iter().chain(&p.xi_dir).map(|v| format!("{v:.17e}")).collect();
        row.push(format!("{:.17e}", p.slope));
        row.push(p.verdict.label().to_string());
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extrapolation_is_exact_on_quadratics() {
        let eps = [1e-1, 3e-2, 1e-2, 3e-3];
        let f = |e: f64| Complex64::new(2.0 - 3.0 * e + 5.0 * e * e, e);
        let v: Vec<Complex64> = eps.iter().map(|e| f(*e)).collect();
        for ex in extrapolate(&eps, &v) {
            assert!((ex - Complex64::new(2.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn lattice_visits_every_node() {
        let mut count = 0;
        for_lattice(2, 3, 0.5, |p| {
            assert!(p.iter().all(|c| c.abs() <= 1.5));
            count += 1;
        });
        assert_eq!(count, 49);
    }

    #[test]
    fn rejects_indefinite_envelope() {
        let q = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let p = Expression::constant(1.0, 2, 1);
        assert!(TestFunction::new(p, q, vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn slope_of_power_law() {
        let sc = [2.0, 4.0, 8.0, 16.0, 32.0];
        let m: Vec<f64> = sc.iter().map(|l: &f64| l.powf(-4.0)).collect();
        assert!((fit_slope(&sc, &m, 1e-30) + 4.0).abs() < 1e-12);
    }
}
