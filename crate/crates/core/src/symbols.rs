//! SG symbol orders and sampled verification of the symbol estimates
//! `|D_θ^α D_x^β a| ≤ C ⟨x⟩^{m_e-|β|} ⟨θ⟩^{m_ψ-|α|}`.

use std::ops::Add;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compact::weight;
use crate::expr::{EvalError, Expression};
use crate::sample::{rng, scaled, sphere_points};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderPair {
    pub m_e: f64,
    pub m_psi: f64,
}

impl OrderPair {
    pub const fn new(m_e: f64, m_psi: f64) -> Self {
        OrderPair { m_e, m_psi }
    }
}

impl Add for OrderPair {
    type Output = OrderPair;
    fn add(self, o: OrderPair) -> OrderPair {
        OrderPair::new(self.m_e + o.m_e, self.m_psi + o.m_psi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleConfig {
    /// Dyadic radii `2^0 ..= 2^max_exp`.
    pub max_exp: i32,
    pub directions: usize,
    pub random_points: usize,
    pub box_half_width: f64,
    pub seed: u64,
    /// Number of outermost radii in the slope fit.
    pub fit_radii: usize,
    pub slope_threshold: f64,
    /// Additional `(x, t)` samples appended to the mesh.
    pub extra: Vec<(Vec<f64>, Vec<f64>)>,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig {
            max_exp: 10,
            directions: 32,
            random_points: 200,
            box_half_width: 8.0,
            seed: 0,
            fit_radii: 4,
            slope_threshold: 0.1,
            extra: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GrowthVerdict {
    Pass,
    SuspectedViolation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateEntry {
    /// Derivative orders in θ.
    pub alpha: Vec<usize>,
    /// Derivative orders in x.
    pub beta: Vec<usize>,
    pub constant: f64,
    /// Largest fitted log-log slope over all rays.
    pub slope: f64,
    pub verdict: GrowthVerdict,
    pub witness: Option<(Vec<f64>, Vec<f64>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub order: OrderPair,
    pub entries: Vec<EstimateEntry>,
    pub verdict: GrowthVerdict,
}

impl EstimateReport {
    pub fn passed(&self) -> bool {
        self.verdict == GrowthVerdict::Pass
    }

    pub fn entry(&self, alpha: &[usize], beta: &[usize]) -> Option<&EstimateEntry> {
        self.entries
            .iter()
            .find(|e| e.alpha == alpha && e.beta == beta)
    }
}

/// Points of one factor: origin-free dyadic shells times directions.
fn factor_grid(n: usize, cfg: &SampleConfig) -> (Vec<f64>, Vec<Vec<f64>>) {
    let radii: Vec<f64> = (0..=cfg.max_exp).map(|k| 2f64.powi(k)).collect();
    (radii, sphere_points(n, cfg.directions))
}

struct Mesh {
    points: Vec<(Vec<f64>, Vec<f64>)>,
    /// Structured part: `(x radius, x dir, t radius, t dir)` → index.
    nr: usize,
    nxd: usize,
    ntd: usize,
}

impl Mesh {
    fn build(d: usize, s: usize, cfg: &SampleConfig) -> Mesh {
        let (radii, xdirs) = factor_grid(d, cfg);
        let (_, tdirs) = factor_grid(s, cfg);
        // A zero-dimensional factor contributes the single empty point.
        let xr: Vec<f64> = if d == 0 { vec![0.0] } else { radii.clone() };
        let tr: Vec<f64> = if s == 0 { vec![0.0] } else { radii.clone() };
        let nr = radii.len();
        let mut points = Vec::new();
        for &r in &xr {
            for xd in &xdirs {
                for &q in &tr {
                    for td in &tdirs {
                        points.push((scaled(xd, r), scaled(td, q)));
                    }
                }
            }
        }
        let mut g = rng(cfg.seed);
        let w = cfg.box_half_width;
        for _ in 0..cfg.random_points {
            let x = (0..d).map(|_| g.gen_range(-w..w)).collect();
            let t = (0..s).map(|_| g.gen_range(-w..w)).collect();
            points.push((x, t));
        }
        points.extend(cfg.extra.iter().cloned());
        Mesh {
            points,
            nr,
            nxd: xdirs.len(),
            ntd: tdirs.len(),
        }
    }

    fn ntr(&self, s: usize) -> usize {
        if s == 0 {
            1
        } else {
            self.nr
        }
    }

    fn index(&self, s: usize, ir: usize, ixd: usize, jr: usize, jtd: usize) -> usize {
        ((ir * self.nxd + ixd) * self.ntr(s) + jr) * self.ntd + jtd
    }
}

fn multi_indices(n: usize, max: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![0; n]];
    let mut frontier = vec![vec![0; n]];
    for _ in 0..max {
        let mut next = Vec::new();
        for m in &frontier {
            let last = m.iter().rposition(|&e| e > 0).unwrap_or(0);
            for i in last..n {
                let mut k = m.clone();
                k[i] += 1;
                next.push(k);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Least-squares slope of `ys` against `xs`.
fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Observed constants and growth verdicts for all `|α|+|β| ≤ max_deriv`.
pub fn check_estimates(
    a: &Expression,
    order: OrderPair,
    max_deriv: usize,
    cfg: &SampleConfig,
) -> Result<EstimateReport, EvalError> {
    let (d, s) = (a.d(), a.s());
    let mesh = Mesh::build(d, s, cfg);
    let joint = multi_indices(d + s, max_deriv);
    // Weighted values per point, per multi-index.
    let weighted: Vec<Vec<f64>> = mesh
        .points
        .par_iter()
        .map(|(x, t)| -> Result<Vec<f64>, EvalError> {
            let jet = a.eval_jet(x, t, max_deriv)?;
            let (wx, wt) = (weight(x), weight(t));
            Ok(joint
                .iter()
                .map(|m| {
                    let b: usize = m[..d].iter().sum();
                    let al: usize = m[d..].iter().sum();
                    let exps: Vec<u8> = m.iter().map(|&e| e as u8).collect();
                    let v = jet.partial_exps(&exps).unwrap_or(0.0);
                    v.abs() * wx.powf(b as f64 - order.m_e) * wt.powf(al as f64 - order.m_psi)
                })
                .collect())
        })
        .collect::<Result<_, _>>()?;

    let nr = mesh.nr;
    let fit = cfg.fit_radii.min(nr);
    let top: Vec<usize> = (nr - fit..nr).collect();
    let mut entries = Vec::with_capacity(joint.len());
    for (mi, m) in joint.iter().enumerate() {
        let constant = weighted.iter().map(|w| w[mi]).fold(0.0, f64::max);
        let negligible = 1e-12 * constant.max(1e-300);
        let mut best = (f64::NEG_INFINITY, None::<usize>);
        let mut consider = |idx: Vec<usize>| {
            let ys: Vec<f64> = idx.iter().map(|&i| weighted[i][mi]).collect();
            if ys.iter().any(|&v| !(v > negligible)) {
                return;
            }
            let xs: Vec<f64> = idx
                .iter()
                .map(|&i| {
                    let (x, t) = &mesh.points[i];
                    (weight(x) * weight(t)).ln()
                })
                .collect();
            let logs: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
            let k = slope(&xs, &logs);
            if k > best.0 {
                best = (k, idx.last().copied());
            }
        };
        let ntr = mesh.ntr(s);
        for ixd in 0..mesh.nxd {
            for jtd in 0..mesh.ntd {
                for other in 0..nr.max(ntr) {
                    if other < ntr {
                        consider(top.iter().map(|&ir| mesh.index(s, ir, ixd, other, jtd)).collect());
                    }
                    if s > 0 && other < nr {
                        consider(top.iter().map(|&jr| mesh.index(s, other, ixd, jr, jtd)).collect());
                    }
                }
                if s > 0 {
                    consider(top.iter().map(|&k| mesh.index(s, k, ixd, k, jtd)).collect());
                }
            }
        }
        let (k, at) = best;
        let k = if k.is_finite() { k } else { 0.0 };
        let verdict = if k > cfg.slope_threshold {
            GrowthVerdict::SuspectedViolation
        } else {
            GrowthVerdict::Pass
        };
        entries.push(EstimateEntry {
            alpha: m[d..].to_vec(),
            beta: m[..d].to_vec(),
            constant,
            slope: k,
            verdict,
            witness: match verdict {
                GrowthVerdict::Pass => None,
                GrowthVerdict::SuspectedViolation => at.map(|i| mesh.points[i].clone()),
            },
        });
    }
    let verdict = if entries.iter().all(|e| e.verdict == GrowthVerdict::Pass) {
        GrowthVerdict::Pass
    } else {
        GrowthVerdict::SuspectedViolation
    };
    Ok(EstimateReport {
        order,
        entries,
        verdict,
    })
}
