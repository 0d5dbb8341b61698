//! Task execution and the run report.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use sgcalc_core::classical::{compatibility_check, Excision};
use sgcalc_core::compact::{iota, Face};
use sgcalc_core::equiv::{
    build_phase, equivalence_check, extract_graph_data, roundtrip_verify, EquivError, VERDICT_EQUIVALENT,
};
use sgcalc_core::extrap::RadialLimit;
use sgcalc_core::lagrangian::{lagrangian_validate, LagrangianData, LagrangianError};
use sgcalc_core::oscint::{
    oscint_eval, wavefront_scan, write_probe_csv, OscIntConfig, OscIntError, ProbeConfig, ProbeVerdict,
};
use sgcalc_core::phase::{absorption_check, admissibility_check, AdmissibilityConfig, PhaseFunction, PHASE_ORDER};
use sgcalc_core::sample::distance;
use sgcalc_core::stationary::{all_clouds, euler_check, neatness_report, write_csv, SearchConfig, StationaryCloud};
use sgcalc_core::symbols::{check_estimates, SampleConfig};

use crate::scenario::{Expectation, Scenario, TaskSpec};

pub const SCHEMA_VERSION: &str = "1.0.0";
/// Flagged probes must lie this close to the computed Λ cloud.
pub const INCLUSION_TOL: f64 = 0.05;
pub const EULER_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    pub eps_ell: f64,
    pub newton_tol: f64,
    pub parallel: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            eps_ell: 1e-6,
            newton_tol: 1e-10,
            parallel: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskReport {
    pub index: usize,
    pub kind: String,
    pub verdict: Verdict,
    pub expected: Expectation,
    pub expectation_met: bool,
    pub summary: String,
    pub data: Value,
    pub artifacts: Vec<String>,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tool {
    pub name: String,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: String,
    pub tool: Tool,
    pub scenario: String,
    pub seed: u64,
    pub config: RunConfig,
    pub tasks: Vec<TaskReport>,
    pub all_expectations_met: bool,
    pub wall_time_s: f64,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        if self.tasks.iter().all(|t| t.verdict == Verdict::Pass) {
            0
        } else {
            1
        }
    }
}

struct Outcome {
    pass: bool,
    summary: String,
    data: Value,
    artifacts: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct TaskError(String);

fn err(e: impl ToString) -> TaskError {
    TaskError(e.to_string())
}

struct Ctx<'a> {
    scenario: &'a Scenario,
    cfg: &'a RunConfig,
    out: &'a Path,
    index: usize,
}

impl Ctx<'_> {
    fn search(&self) -> SearchConfig {
        SearchConfig {
            newton_tol: self.cfg.newton_tol,
            ..SearchConfig::default()
        }
    }

    fn phase(&self, name: &str) -> &PhaseFunction {
        &self.scenario.phases[name]
    }

    fn artifact(&self, stem: &str) -> (PathBuf, String) {
        let name = format!("task{:02}_{stem}.csv", self.index);
        (self.out.join(&name), name)
    }

    fn clouds_csv(&self, stem: &str, clouds: &[StationaryCloud]) -> Result<String, TaskError> {
        let (path, name) = self.artifact(stem);
        let mut f = BufWriter::new(fs::File::create(path).map_err(err)?);
        write_csv(&mut f, clouds).map_err(err)?;
        Ok(name)
    }
}

fn cloud_summary(clouds: &[StationaryCloud]) -> Value {
    let faces: Vec<Value> = clouds
        .iter()
        .map(|c| {
            let max_res = c.points.iter().map(|p| p.residual).fold(0.0, f64::max);
            let min_sv = c
                .points
                .iter()
                .filter_map(|p| p.singular_values.last().copied())
                .fold(f64::INFINITY, f64::min);
            json!({
                "face": c.face,
                "points": c.points.len(),
                "seeds": c.seeds,
                "max_residual": max_res,
                "min_singular_value": if min_sv.is_finite() { json!(min_sv) } else { Value::Null },
                "degenerate": c.points.iter().filter(|p| !p.nondegenerate).count(),
            })
        })
        .collect();
    json!(faces)
}

fn run_task(ctx: &Ctx, task: &TaskSpec) -> Result<Outcome, TaskError> {
    let sc = ctx.scenario;
    let seed = ctx.cfg.seed;
    match task {
        TaskSpec::CheckSymbol { symbol, max_deriv, .. } => {
            let a = &sc.amplitudes[symbol];
            let order = a
                .order
                .ok_or_else(|| err(format!("amplitude `{symbol}` has no declared order")))?;
            let cfg = SampleConfig {
                seed,
                ..SampleConfig::default()
            };
            let rep = check_estimates(&a.expr, order, max_deriv.unwrap_or(2), &cfg).map_err(err)?;
            let worst = rep
                .entries
                .iter()
                .max_by(|p, q| p.slope.total_cmp(&q.slope))
                .map(|e| json!({"alpha": e.alpha, "beta": e.beta, "slope": e.slope, "witness": e.witness}));
            Ok(Outcome {
                pass: rep.passed(),
                summary: format!("symbol estimates: {:?}", rep.verdict),
                data: json!({"order": order, "verdict": rep.verdict, "entries": rep.entries.len(), "worst": worst}),
                artifacts: vec![],
            })
        }
        TaskSpec::CheckPhase { phase, .. } => {
            let p = ctx.phase(phase);
            let cfg = AdmissibilityConfig {
                eps_ell: ctx.cfg.eps_ell,
                ..AdmissibilityConfig::default()
            };
            let adm = admissibility_check(p.base(), &cfg).map_err(err)?;
            let compat = match &p.symbol.triple {
                Some(t) => Some(
                    compatibility_check(t, PHASE_ORDER, 20, 1e-6, seed, &RadialLimit::default()).map_err(err)?,
                ),
                None => None,
            };
            let compat_ok = compat.as_ref().is_none_or(|c| c.pass);
            let absorption = match &p.symbol.triple {
                Some(_) => Some(absorption_check(p, &cfg).map_err(err)?),
                None => None,
            };
            let absorption_ok = absorption.as_ref().is_none_or(|a| a.consistent);
            let summary = if adm.admissible && !absorption_ok {
                "admissible, but the principal part is not".to_string()
            } else if adm.admissible {
                "admissible".to_string()
            } else {
                format!(
                    "not admissible: Phi ratio {:.3e} at x={:?}, theta={:?}",
                    adm.ratio_min, adm.witness.0, adm.witness.1
                )
            };
            Ok(Outcome {
                pass: adm.admissible && compat_ok && absorption_ok,
                summary,
                data: json!({"admissibility": adm, "compatibility": compat, "absorption": absorption}),
                artifacts: vec![],
            })
        }
        TaskSpec::Stationary { phase, .. } => {
            let clouds = all_clouds(ctx.phase(phase), &ctx.search()).map_err(err)?;
            let file = ctx.clouds_csv(&format!("stationary_{phase}"), &clouds)?;
            let degenerate: usize = clouds
                .iter()
                .map(|c| c.points.iter().filter(|p| !p.nondegenerate).count())
                .sum();
            let total: usize = clouds.iter().map(|c| c.points.len()).sum();
            Ok(Outcome {
                pass: degenerate == 0,
                summary: format!("{total} stationary points, {degenerate} degenerate"),
                data: json!({"faces": cloud_summary(&clouds)}),
                artifacts: vec![file],
            })
        }
        TaskSpec::LagrangianVerify { phase, tol, .. } => {
            let p = ctx.phase(phase);
            let search = ctx.search();
            let clouds = all_clouds(p, &search).map_err(err)?;
            let neat = neatness_report(p, &clouds, &search).map_err(err)?;
            let data = LagrangianData::from_clouds(p.d(), &clouds);
            let tol = tol.unwrap_or(1e-8);
            let euler = euler_check(p, 50, seed).map_err(err)?;
            let file = ctx.clouds_csv(&format!("lagrangian_{phase}"), &clouds)?;
            match lagrangian_validate(&data, tol, Some(&neat)) {
                Ok(rep) => {
                    let pass = rep.verdict && euler <= EULER_TOL;
                    Ok(Outcome {
                        pass,
                        summary: format!(
                            "alpha_psi {:.2e}, alpha_e {:.2e}, <x,xi> {:.2e}, euler {:.2e}",
                            rep.alpha_psi_max, rep.alpha_e_max, rep.corner_pairing_max, euler
                        ),
                        data: json!({"report": rep, "neatness": neat, "euler_max": euler, "tol": tol}),
                        artifacts: vec![file],
                    })
                }
                Err(e @ LagrangianError::MissingFrame { .. }) => Ok(Outcome {
                    pass: false,
                    summary: format!("not certifiable: {e}"),
                    data: json!({"neatness": neat, "euler_max": euler}),
                    artifacts: vec![file],
                }),
            }
        }
        TaskSpec::Parametrize { graph, source, tol, .. } => {
            let d = sc.file.dims.d;
            let s = sc.file.dims.s;
            let search = ctx.search();
            let data = match (graph, source) {
                (Some(g), _) => sc.graphs[g].clone(),
                (None, Some(src)) => {
                    let clouds = all_clouds(ctx.phase(src), &search).map_err(err)?;
                    extract_graph_data(&clouds, d, s).map_err(err)?
                }
                (None, None) => unreachable!("validated"),
            };
            let built = match build_phase(&data, Excision::default()) {
                Ok(b) => b,
                Err(e @ EquivError::Conormality(_)) => {
                    return Ok(Outcome {
                        pass: false,
                        summary: e.to_string(),
                        data: json!({"error": e.to_string()}),
                        artifacts: vec![],
                    })
                }
                Err(e) => return Err(err(e)),
            };
            let triple = json!({
                "e": built.triple.e.to_string(),
                "psi": built.triple.psi.to_string(),
                "psie": built.triple.psie.to_string(),
            });
            match source {
                Some(src) => {
                    let tol = tol.unwrap_or(1e-6);
                    let rep = roundtrip_verify(ctx.phase(src), &built.phase, &search, tol).map_err(err)?;
                    let worst = rep.faces.iter().map(|f| f.hausdorff).fold(0.0, f64::max);
                    Ok(Outcome {
                        pass: rep.pass,
                        summary: format!("round trip Hausdorff {worst:.3e} (tol {tol:.0e})"),
                        data: json!({"triple": triple, "roundtrip": rep}),
                        artifacts: vec![],
                    })
                }
                None => Ok(Outcome {
                    pass: true,
                    summary: "phase built from graph data".into(),
                    data: json!({"triple": triple}),
                    artifacts: vec![],
                }),
            }
        }
        TaskSpec::Equivalence {
            phase1,
            phase2,
            expect_verdict,
            ..
        } => {
            let v = equivalence_check(ctx.phase(phase1), ctx.phase(phase2), &ctx.search()).map_err(err)?;
            if let Some(want) = expect_verdict {
                if &v.verdict != want {
                    return Err(err(format!("verdict `{}` differs from expected `{want}`", v.verdict)));
                }
            }
            Ok(Outcome {
                pass: v.verdict == VERDICT_EQUIVALENT,
                summary: v.verdict.clone(),
                data: serde_json::to_value(&v).map_err(err)?,
                artifacts: vec![],
            })
        }
        TaskSpec::Oscint {
            phase,
            amplitude,
            test_function,
            eps_ladder,
            reference,
            rel_tol,
            ..
        } => {
            let mut cfg = OscIntConfig::default();
            if let Some(l) = eps_ladder {
                cfg.eps_ladder = l.clone();
            }
            let a = &sc.amplitudes[amplitude].expr;
            let u = &sc.test_functions[test_function];
            let r = match oscint_eval(ctx.phase(phase).base(), a, u, &cfg) {
                Ok(r) => r,
                Err(OscIntError::Unstable { diffs, result }) => {
                    return Ok(Outcome {
                        pass: false,
                        summary: "regularization unstable".into(),
                        data: json!({"diffs": diffs, "result": result}),
                        artifacts: vec![],
                    })
                }
                Err(e) => return Err(err(e)),
            };
            let mut pass = true;
            let mut summary = format!("value {:.10} {:+.3e}i, residual {:.2e}", r.value.re, r.value.im, r.residual);
            if let Some([re, im]) = reference {
                let tol = rel_tol.unwrap_or(1e-2);
                let gap = ((r.value.re - re).powi(2) + (r.value.im - im).powi(2)).sqrt();
                let scale = (re * re + im * im).sqrt().max(1e-300);
                pass = gap <= tol * scale;
                summary.push_str(&format!(", relative gap {:.2e}", gap / scale));
            }
            Ok(Outcome {
                pass,
                summary,
                data: json!({"value": [r.value.re, r.value.im], "result": r, "reference": reference}),
                artifacts: vec![],
            })
        }
        TaskSpec::Wavefront {
            phase,
            amplitude,
            locations,
            directions,
            ..
        } => {
            let p = ctx.phase(phase);
            let a = &sc.amplitudes[amplitude].expr;
            let cfg = ProbeConfig::default();
            let probes = wavefront_scan(p.base(), a, locations, directions, &cfg).map_err(err)?;
            let clouds = all_clouds(p, &ctx.search()).map_err(err)?;
            let lambda: Vec<Vec<f64>> = clouds
                .iter()
                .flat_map(|c| c.lagrangian.iter().map(|l| l.compactified()))
                .collect();
            let mut worst = 0.0f64;
            let mut flagged = Vec::new();
            for pr in probes.iter().filter(|p| p.verdict == ProbeVerdict::PossibleWavefront) {
                let mut key = iota(&pr.x0);
                key.extend(pr.xi_dir.iter().copied());
                let dist = lambda.iter().map(|l| distance(l, &key)).fold(f64::INFINITY, f64::min);
                worst = worst.max(dist);
                flagged.push(json!({"x0": pr.x0, "xi_dir": pr.xi_dir, "slope": pr.slope, "distance": dist}));
            }
            let (path, name) = ctx.artifact(&format!("wavefront_{phase}"));
            let mut f = BufWriter::new(fs::File::create(path).map_err(err)?);
            write_probe_csv(&mut f, &probes).map_err(err)?;
            let psi_points = clouds
                .iter()
                .filter(|c| c.face == Face::Psi)
                .map(|c| c.lagrangian.len())
                .sum::<usize>();
            Ok(Outcome {
                pass: worst <= INCLUSION_TOL,
                summary: format!(
                    "{} of {} probes flagged, max distance to Lambda {:.3e}",
                    flagged.len(),
                    probes.len(),
                    if flagged.is_empty() { 0.0 } else { worst }
                ),
                data: json!({
                    "flagged": flagged,
                    "probes": probes.len(),
                    "lambda_points": lambda.len(),
                    "psi_points": psi_points,
                    "sigma": cfg.sigma,
                    "resolution": cfg.resolution(),
                    "inclusion_tol": INCLUSION_TOL,
                }),
                artifacts: vec![name],
            })
        }
    }
}

/// Runs every task in order and writes `report.json` plus CSV artifacts.
pub fn run(scenario: &Scenario, out: &Path, cfg: &RunConfig) -> std::io::Result<RunReport> {
    fs::create_dir_all(out)?;
    let body = || {
        let start = Instant::now();
        let mut tasks = Vec::new();
        for (i, task) in scenario.file.tasks.iter().enumerate() {
            let t0 = Instant::now();
            let ctx = Ctx {
                scenario,
                cfg,
                out,
                index: i + 1,
            };
            let (verdict, summary, data, artifacts) = match run_task(&ctx, task) {
                Ok(o) => (
                    if o.pass { Verdict::Pass } else { Verdict::Fail },
                    o.summary,
                    o.data,
                    o.artifacts,
                ),
                Err(e) => (Verdict::Error, e.0.clone(), json!({"error": e.0}), vec![]),
            };
            let expected = task.expect();
            let expectation_met = match expected {
                Expectation::Pass => verdict == Verdict::Pass,
                Expectation::Fail => verdict == Verdict::Fail,
            };
            tasks.push(TaskReport {
                index: i + 1,
                kind: task.kind().to_string(),
                verdict,
                expected,
                expectation_met,
                summary,
                data,
                artifacts,
                wall_time_s: t0.elapsed().as_secs_f64(),
            });
        }
        RunReport {
            schema_version: SCHEMA_VERSION.into(),
            tool: Tool {
                name: "sgcalc".into(),
                version: env!("CARGO_PKG_VERSION").into(),
            },
            scenario: scenario.file.name.clone(),
            seed: cfg.seed,
            config: cfg.clone(),
            all_expectations_met: tasks.iter().all(|t| t.expectation_met),
            tasks,
            wall_time_s: start.elapsed().as_secs_f64(),
        }
    };
    let report = match cfg.parallel {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build()
            .map_err(std::io::Error::other)?
            .install(body),
        None => body(),
    };
    let text = serde_json::to_string_pretty(&report).map_err(std::io::Error::other)?;
    fs::write(out.join("report.json"), text + "\n")?;
    Ok(report)
}
