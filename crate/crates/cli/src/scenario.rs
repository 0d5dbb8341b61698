//! Scenario documents: named expressions plus an ordered task list.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use sgcalc_core::classical::Triple;
use sgcalc_core::equiv::GraphData;
use sgcalc_core::oscint::TestFunction;
use sgcalc_core::phase::PhaseFunction;
use sgcalc_core::symbols::OrderPair;
use sgcalc_core::Expression;

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read scenario: {0}")]
    Io(#[from] std::io::Error),
    #[error("scenario is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{context}: {message}")]
    Invalid { context: String, message: String },
}

fn invalid(context: impl Into<String>, message: impl ToString) -> ScenarioError {
    ScenarioError::Invalid {
        context: context.into(),
        message: message.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dims {
    pub d: usize,
    pub s: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TripleSpec {
    pub e: String,
    pub psi: String,
    pub psie: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSpec {
    pub base: String,
    #[serde(default)]
    pub triple: Option<TripleSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmplitudeSpec {
    pub expr: String,
    /// `[m_e, m_psi]`.
    #[serde(default)]
    pub order: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestFunctionSpec {
    #[serde(default = "one")]
    pub prefactor: String,
    /// Symmetric positive-definite `Q` in `exp(-(x-c)ᵀQ(x-c))`.
    pub quadratic: Vec<Vec<f64>>,
    #[serde(default)]
    pub center: Option<Vec<f64>>,
}

fn one() -> String {
    "1".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub x_e: Vec<String>,
    pub xi_e: Vec<String>,
    pub x_psi: Vec<String>,
    pub xi_psi: Vec<String>,
    #[serde(default)]
    pub xi_corner: Option<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Expectation {
    #[default]
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TaskSpec {
    CheckSymbol {
        symbol: String,
        #[serde(default)]
        max_deriv: Option<usize>,
        #[serde(default)]
        expect: Expectation,
    },
    CheckPhase {
        phase: String,
        #[serde(default)]
        expect: Expectation,
    },
    Stationary {
        phase: String,
        #[serde(default)]
        expect: Expectation,
    },
    LagrangianVerify {
        phase: String,
        #[serde(default)]
        tol: Option<f64>,
        #[serde(default)]
        expect: Expectation,
    },
    /// Builds a phase from graph data, or from data extracted off `source`;
    /// with a source, the rebuilt Lagrangian is compared to the original.
    Parametrize {
        #[serde(default)]
        graph: Option<String>,
        #[serde(default)]
        source: Option<String>,
        #[serde(default)]
        tol: Option<f64>,
        #[serde(default)]
        expect: Expectation,
    },
    Equivalence {
        phase1: String,
        phase2: String,
        #[serde(default)]
        expect_verdict: Option<String>,
        #[serde(default)]
        expect: Expectation,
    },
    Oscint {
        phase: String,
        amplitude: String,
        test_function: String,
        #[serde(default)]
        eps_ladder: Option<Vec<f64>>,
        /// `[re, im]` reference value with relative tolerance `rel_tol`.
        #[serde(default)]
        reference: Option<[f64; 2]>,
        #[serde(default)]
        rel_tol: Option<f64>,
        #[serde(default)]
        expect: Expectation,
    },
    Wavefront {
        phase: String,
        amplitude: String,
        locations: Vec<Vec<f64>>,
        directions: Vec<Vec<f64>>,
        #[serde(default)]
        expect: Expectation,
    },
}

impl TaskSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            TaskSpec::CheckSymbol { .. } => "check-symbol",
            TaskSpec::CheckPhase { .. } => "check-phase",
            TaskSpec::Stationary { .. } => "stationary",
            TaskSpec::LagrangianVerify { .. } => "lagrangian-verify",
            TaskSpec::Parametrize { .. } => "parametrize",
            TaskSpec::Equivalence { .. } => "equivalence",
            TaskSpec::Oscint { .. } => "oscint",
            TaskSpec::Wavefront { .. } => "wavefront",
        }
    }

    pub fn expect(&self) -> Expectation {
        match self {
            TaskSpec::CheckSymbol { expect, .. }
            | TaskSpec::CheckPhase { expect, .. }
            | TaskSpec::Stationary { expect, .. }
            | TaskSpec::LagrangianVerify { expect, .. }
            | TaskSpec::Parametrize { expect, .. }
            | TaskSpec::Equivalence { expect, .. }
            | TaskSpec::Oscint { expect, .. }
            | TaskSpec::Wavefront { expect, .. } => *expect,
        }
    }
}

/// The JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub dims: Dims,
    #[serde(default)]
    pub phases: BTreeMap<String, PhaseSpec>,
    #[serde(default)]
    pub amplitudes: BTreeMap<String, AmplitudeSpec>,
    #[serde(default)]
    pub test_functions: BTreeMap<String, TestFunctionSpec>,
    #[serde(default)]
    pub graph_data: BTreeMap<String, GraphSpec>,
    pub tasks: Vec<TaskSpec>,
}

pub struct Amplitude {
    pub expr: Expression,
    pub order: Option<OrderPair>,
}

/// A validated scenario with every expression parsed.
pub struct Scenario {
    pub file: ScenarioFile,
    pub phases: BTreeMap<String, PhaseFunction>,
    pub amplitudes: BTreeMap<String, Amplitude>,
    pub test_functions: BTreeMap<String, TestFunction>,
    pub graphs: BTreeMap<String, GraphData>,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let file: ScenarioFile = serde_json::from_str(text)?;
        Self::validate(file)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ScenarioError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(file: ScenarioFile) -> Result<Self, ScenarioError> {
        let Dims { d, s } = file.dims;
        if d == 0 || s == 0 {
            return Err(invalid("dims", "d and s must be positive"));
        }
        let parse = |ctx: &str, text: &str| Expression::parse(text, d, s).map_err(|e| invalid(ctx, e));

        let mut phases = BTreeMap::new();
        for (name, p) in &file.phases {
            let ctx = format!("phase `{name}`");
            let base = parse(&ctx, &p.base)?;
            let triple = match &p.triple {
                Some(t) => Some(Triple {
                    e: parse(&ctx, &t.e)?,
                    psi: parse(&ctx, &t.psi)?,
                    psie: parse(&ctx, &t.psie)?,
                }),
                None => None,
            };
            let phase = PhaseFunction::new(base, triple).map_err(|e| invalid(&ctx, e))?;
            phases.insert(name.clone(), phase);
        }

        let mut amplitudes = BTreeMap::new();
        for (name, a) in &file.amplitudes {
            let ctx = format!("amplitude `{name}`");
            amplitudes.insert(
                name.clone(),
                Amplitude {
                    expr: parse(&ctx, &a.expr)?,
                    order: a.order.map(|[e, p]| OrderPair::new(e, p)),
                },
            );
        }

        let mut test_functions = BTreeMap::new();
        for (name, u) in &file.test_functions {
            let ctx = format!("test function `{name}`");
            if u.quadratic.len() != d || u.quadratic.iter().any(|r| r.len() != d) {
                return Err(invalid(&ctx, format!("quadratic must be {d}x{d}")));
            }
            let q = DMatrix::from_fn(d, d, |i, j| u.quadratic[i][j]);
            let center = u.center.clone().unwrap_or_else(|| vec![0.0; d]);
            let tf = TestFunction::new(parse(&ctx, &u.prefactor)?, q, center).map_err(|e| invalid(&ctx, e))?;
            test_functions.insert(name.clone(), tf);
        }

        let mut graphs = BTreeMap::new();
        for (name, g) in &file.graph_data {
            let ctx = format!("graph data `{name}`");
            let list = |v: &[String]| v.iter().map(|t| parse(&ctx, t)).collect::<Result<Vec<_>, _>>();
            graphs.insert(
                name.clone(),
                GraphData {
                    d,
                    s,
                    x_e: list(&g.x_e)?,
                    xi_e: list(&g.xi_e)?,
                    x_psi: list(&g.x_psi)?,
                    xi_psi: list(&g.xi_psi)?,
                    xi_corner: g.xi_corner.as_deref().map(list).transpose()?,
                },
            );
        }

        let scenario = Scenario {
            file,
            phases,
            amplitudes,
            test_functions,
            graphs,
        };
        scenario.check_references()?;
        Ok(scenario)
    }

    fn check_references(&self) -> Result<(), ScenarioError> {
        let d = self.file.dims.d;
        for (i, task) in self.file.tasks.iter().enumerate() {
            let ctx = format!("task {} ({})", i + 1, task.kind());
            let phase = |n: &str| {
                if self.phases.contains_key(n) {
                    Ok(())
                } else {
                    Err(invalid(&ctx, format!("undefined phase `{n}`")))
                }
            };
            let amp = |n: &str| {
                if self.amplitudes.contains_key(n) {
                    Ok(())
                } else {
                    Err(invalid(&ctx, format!("undefined amplitude `{n}`")))
                }
            };
            match task {
                TaskSpec::CheckSymbol { symbol, .. } => amp(symbol)?,
                TaskSpec::CheckPhase { phase: p, .. }
                | TaskSpec::Stationary { phase: p, .. }
                | TaskSpec::LagrangianVerify { phase: p, .. } => phase(p)?,
                TaskSpec::Parametrize { graph, source, .. } => {
                    match (graph, source) {
                        (None, None) => return Err(invalid(&ctx, "needs `graph` or `source`")),
                        (Some(g), _) if !self.graphs.contains_key(g) => {
                            return Err(invalid(&ctx, format!("undefined graph data `{g}`")))
                        }
                        _ => {}
                    }
                    if let Some(p) = source {
                        phase(p)?;
                    }
                }
                TaskSpec::Equivalence { phase1, phase2, .. } => {
                    phase(phase1)?;
                    phase(phase2)?;
                }
                TaskSpec::Oscint {
                    phase: p,
                    amplitude,
                    test_function,
                    ..
                } => {
                    phase(p)?;
                    amp(amplitude)?;
                    if !self.test_functions.contains_key(test_function) {
                        return Err(invalid(&ctx, format!("undefined test function `{test_function}`")));
                    }
                }
                TaskSpec::Wavefront {
                    phase: p,
                    amplitude,
                    locations,
                    directions,
                    ..
                } => {
                    phase(p)?;
                    amp(amplitude)?;
                    if locations.iter().chain(directions).any(|v| v.len() != d) {
                        return Err(invalid(&ctx, format!("probe vectors must have {d} entries")));
                    }
                }
            }
        }
        Ok(())
    }
}
