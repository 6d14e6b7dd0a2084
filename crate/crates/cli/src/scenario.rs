//! Scenario files: a plant, a controller, a reference, solver settings and
//! output paths. Relative paths are resolved against the scenario's own
//! directory.

use std::fs;
use std::path::{Path, PathBuf};

use higs_core::io::{controller_from_json, plant_from_json, trajectory_csv};
use higs_core::{
    assemble, simulate, ClosedLoop, ControllerConfig, InitialState, InputSignal, PlantModel, SimConfig, SimReport,
    Wiring,
};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{code, CliError, CliResult};

/// A file reference or an inline document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Source {
    Path(String),
    Inline(Value),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// `null` drives the controller directly with the reference.
    pub plant: Option<Source>,
    pub controller: Source,
    #[serde(default)]
    pub wiring: Wiring,
    /// Zero reference when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<InputSignal>,
    pub sim: SimConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<InitialState>,
    #[serde(default)]
    pub outputs: Outputs,
}

/// Outcome of one scenario run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub scenario: String,
    pub trajectory: Option<String>,
    pub report_path: Option<String>,
    pub report: SimReport,
}

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::read(path, e))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::write(path, e))
}

fn load_source(src: &Source, base: &Path) -> CliResult<(String, PathBuf)> {
    match src {
        Source::Path(p) => {
            let path = base.join(p);
            Ok((read_text(&path)?, path))
        }
        Source::Inline(v) => Ok((v.to_string(), base.to_path_buf())),
    }
}

pub fn load_plant_file(path: &Path) -> CliResult<PlantModel> {
    let text = read_text(path)?;
    plant_from_json(&text).map_err(|e| CliError::from(e).context(path.display()))
}

impl Scenario {
    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = read_text(path)?;
        serde_json::from_str(&text).map_err(|e| CliError::parse(path, e))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).unwrap_or_default();
        s.push('\n');
        s
    }

    /// Loads the referenced documents and builds the interconnection.
    pub fn closed_loop(&self, base: &Path) -> CliResult<ClosedLoop> {
        let (text, from) = load_source(&self.controller, base)?;
        let ctrl: ControllerConfig = controller_from_json(&text).map_err(|e| CliError::from(e).context(from.display()))?;
        match &self.plant {
            Some(src) => {
                let (text, from) = load_source(src, base)?;
                let plant = plant_from_json(&text).map_err(|e| CliError::from(e).context(from.display()))?;
                Ok(assemble(&plant, &ctrl, self.wiring)?)
            }
            None => Ok(ClosedLoop::open_higs(&ctrl)?),
        }
    }

    /// Simulates and writes the configured outputs.
    pub fn run(&self, base: &Path, name: &str) -> CliResult<RunSummary> {
        self.sim.validate()?;
        let lp = self.closed_loop(base)?;
        let input = match &self.input {
            Some(i) => i.clone(),
            None => InputSignal::zero(lp.channels()),
        };
        let init = self.initial_state.clone().unwrap_or_default();
        let (traj, report) = simulate(&lp, &input, &self.sim, &init)?;
        let trajectory = match &self.outputs.trajectory {
            Some(p) => {
                let path = base.join(p);
                write_text(&path, &trajectory_csv(&traj))?;
                Some(path.display().to_string())
            }
            None => None,
        };
        let report_path = match &self.outputs.report {
            Some(p) => {
                let path = base.join(p);
                write_text(&path, &to_pretty(&report))?;
                Some(path.display().to_string())
            }
            None => None,
        };
        Ok(RunSummary {
            scenario: name.to_string(),
            trajectory,
            report_path,
            report,
        })
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).unwrap_or_default();
    s.push('\n');
    s
}

/// Directory that relative paths inside `path` refer to.
pub fn base_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

/// Exit code of a batch: that of the first failed run, else success.
pub fn batch_code(results: &[CliResult<RunSummary>]) -> i32 {
    results
        .iter()
        .find_map(|r| r.as_ref().err().map(|e| e.code))
        .unwrap_or(code::NI)
}
