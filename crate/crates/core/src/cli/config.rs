//! Experiment configuration file schema.

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::error::Error;
use crate::sft::{Symbol, SymbolicPoint, TransitionSystem};
use crate::suspension::{FlowObservable, SuspensionPoint, SuspensionSystem};
use crate::thermo::LocallyConstantFunction;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemConfig,
    pub roof: Option<TableConfig>,
    pub potential: Option<TableConfig>,
    pub observable: Option<TableConfig>,
    pub seed: Option<u64>,
    pub verify_gibbs: Option<GibbsConfig>,
    pub glue: Option<GlueConfig>,
    pub glue_flow: Option<GlueFlowConfig>,
    pub rate_function: Option<RateConfig>,
    pub ldp_simulate: Option<Level1Config>,
    pub ldp_level2: Option<Level2Config>,
    pub tempered_profile: Option<TemperedConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub matrix: Vec<Vec<i64>>,
    pub labels: Option<Vec<String>>,
}

/// A locally constant function: either a constant or a table of
/// `[word, value]` pairs covering every admissible word of length `depth`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableConfig {
    pub constant: Option<f64>,
    pub depth: Option<usize>,
    pub entries: Option<Vec<(String, f64)>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GibbsConfig {
    pub n_max: usize,
    /// Constant to test; the pressure of the potential when absent.
    pub pressure: Option<f64>,
    pub budget: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscreteSegment {
    #[serde(default)]
    pub preperiod: String,
    pub cycle: String,
    pub length: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlueConfig {
    pub epsilon: f64,
    pub segments: Vec<DiscreteSegment>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSegment {
    #[serde(default)]
    pub preperiod: String,
    pub cycle: String,
    pub height: f64,
    pub time: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlueFlowConfig {
    pub epsilon: f64,
    pub segments: Vec<FlowSegment>,
    pub step: Option<f64>,
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateConfig {
    pub s: Vec<f64>,
    #[serde(default)]
    pub oracle: bool,
    pub resolution: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Level1Config {
    pub interval: (f64, f64),
    pub times: Vec<f64>,
    pub samples: usize,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Level2Config {
    pub basis: Vec<TableConfig>,
    pub center: Vec<f64>,
    pub radius: f64,
    pub times: Vec<f64>,
    pub samples: usize,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemperedConfig {
    pub delta: f64,
    pub times: Vec<f64>,
    pub pairs: usize,
    pub seed: Option<u64>,
}

fn at(path: impl Into<String>) -> impl FnOnce(Error) -> CliError {
    let path = path.into();
    move |e| CliError::from(e).at(path)
}

impl SystemConfig {
    pub fn build(&self) -> Result<TransitionSystem, CliError> {
        let sys = TransitionSystem::from_rows(&self.matrix).map_err(|e| {
            let path = match &e {
                Error::NotSquare { row, .. } | Error::ZeroRow(row) => format!("system.matrix[{row}]"),
                Error::NotBoolean { row, col, .. } => format!("system.matrix[{row}][{col}]"),
                _ => "system.matrix".to_string(),
            };
            CliError::from(e).at(path)
        })?;
        match &self.labels {
            Some(labels) => sys.with_labels(labels.clone()).map_err(at("system.labels")),
            None => Ok(sys),
        }
    }
}

impl TableConfig {
    pub fn build(&self, sys: &TransitionSystem, path: &str) -> Result<LocallyConstantFunction, CliError> {
        match (self.constant, self.depth, &self.entries) {
            (Some(c), None, None) => {
                if !c.is_finite() {
                    return Err(CliError::validation(format!("{path}.constant"), "value must be finite"));
                }
                Ok(LocallyConstantFunction::constant(sys, c))
            }
            (None, Some(depth), Some(entries)) => {
                let parsed = entries
                    .iter()
                    .enumerate()
                    .map(|(i, (word, value))| {
                        sys.parse_word(word).map(|w| (w, *value)).map_err(at(format!("{path}.entries[{i}]")))
                    })
                    .collect::<Result<Vec<(Vec<Symbol>, f64)>, CliError>>()?;
                LocallyConstantFunction::from_entries(sys, depth, &parsed).map_err(at(format!("{path}.entries")))
            }
            _ => Err(CliError::validation(
                path.to_string(),
                "give either `constant` or both `depth` and `entries`",
            )),
        }
    }
}

pub(crate) fn table_or(
    table: &Option<TableConfig>,
    sys: &TransitionSystem,
    path: &str,
    default: f64,
) -> Result<LocallyConstantFunction, CliError> {
    match table {
        Some(t) => t.build(sys, path),
        None => Ok(LocallyConstantFunction::constant(sys, default)),
    }
}

pub(crate) fn point(
    sys: &TransitionSystem,
    preperiod: &str,
    cycle: &str,
    path: &str,
) -> Result<SymbolicPoint, CliError> {
    let pre = sys
        .parse_word(preperiod)
        .and_then(|w| sys.check_word(&w).map(|_| w))
        .map_err(at(format!("{path}.preperiod")))?;
    let cyc = sys.parse_word(cycle).and_then(|w| sys.check_word(&w).map(|_| w)).map_err(at(format!("{path}.cycle")))?;
    SymbolicPoint::new(sys, pre, cyc).map_err(at(path.to_string()))
}

impl ExperimentConfig {
    pub fn base(&self) -> Result<TransitionSystem, CliError> {
        self.system.build()
    }

    pub fn suspension(&self, base: &TransitionSystem) -> Result<SuspensionSystem, CliError> {
        let roof = table_or(&self.roof, base, "roof", 1.0)?;
        SuspensionSystem::new(base.clone(), roof).map_err(at("roof"))
    }

    pub fn potential(&self, base: &TransitionSystem) -> Result<LocallyConstantFunction, CliError> {
        table_or(&self.potential, base, "potential", 0.0)
    }

    pub fn observable(&self, base: &TransitionSystem) -> Result<FlowObservable, CliError> {
        match &self.observable {
            Some(t) => Ok(FlowObservable::new(t.build(base, "observable")?)),
            None => Err(CliError::validation("observable", "this subcommand needs an [observable] table")),
        }
    }

    pub fn flow_segments(
        &self,
        sys: &SuspensionSystem,
        segments: &[FlowSegment],
    ) -> Result<Vec<(SuspensionPoint, f64)>, CliError> {
        segments
            .iter()
            .enumerate()
            .map(|(i, seg)| {
                let path = format!("glue_flow.segments[{i}]");
                let x = point(sys.base(), &seg.preperiod, &seg.cycle, &path)?;
                let p = SuspensionPoint::new(sys, x, seg.height).map_err(at(format!("{path}.height")))?;
                if !(seg.time >= 0.0) || !seg.time.is_finite() {
                    return Err(CliError::from(Error::NegativeTime(seg.time)).at(format!("{path}.time")));
                }
                Ok((p, seg.time))
            })
            .collect()
    }
}
