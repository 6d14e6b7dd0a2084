//! End-to-end nanopositioner demonstration.
//!
//! Writes the bundled model, controller and scenarios, then certifies the
//! model, regulates from a nonzero state and compares the pulse response
//! of the closed loop with the uncontrolled plant.
//!
//! The reference enters at the plant input (`u = r + u_ctrl`, `e = y`):
//! with this wiring the closed loop follows the pulse edges and the HIGS
//! damps the resonance ringing, which is the response shape the
//! comparison is about. The controller-input wiring is run as well and
//! reported for reference.

use std::fs;
use std::path::{Path, PathBuf};

use higs_core::io::{data, plant_from_json, plant_to_json};
use higs_core::{SimReport, StepMetrics};
use serde::Serialize;

use crate::commands::{ni_verdict, run_scenarios, verdict_code};
use crate::error::{CliError, CliResult};
use crate::scenario::{to_pretty, write_text, RunSummary};
use crate::{MethodArg, Outcome};

const PLANT: &str = "mems_plant.json";
const CONTROLLER: &str = "mems_controller.json";
const OPEN_CONTROLLER: &str = "none_controller.json";
const REGULATION: &str = "mems_regulation.json";
const PULSE: &str = "mems_pulse.json";
const PULSE_OPEN: &str = "mems_pulse_open.json";
const PULSE_CONTROLLER_INPUT: &str = "mems_pulse_controller_input.json";

const REGULATION_SCENARIO: &str = r#"{
  "plant": "mems_plant.json",
  "controller": "mems_controller.json",
  "wiring": "plant_input",
  "sim": { "t_end": 0.02, "dt": 1e-6, "output_stride": 10 },
  "initial_state": { "x": [0.5, 0.5, 0.5, 0.5], "x_h": [0.0, 0.0] },
  "outputs": { "trajectory": "mems_regulation.csv", "report": "mems_regulation_report.json" }
}
"#;

#[derive(Debug, Clone, Serialize)]
pub struct CheckNiSummary {
    pub exit_code: i32,
    pub is_ni: Option<bool>,
    pub method: String,
    pub note: Option<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AxisComparison {
    pub axis: usize,
    pub closed_loop_settling_s: Option<f64>,
    pub open_loop_settling_s: Option<f64>,
    pub closed_loop_overshoot: f64,
    pub open_loop_overshoot: f64,
    /// Closed loop settles strictly earlier (an open loop that never
    /// settles counts as slower).
    pub closed_loop_faster: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DemoSummary {
    pub out_dir: String,
    pub model_round_trip: bool,
    pub check_ni: CheckNiSummary,
    pub wiring: String,
    pub regulation: SimReport,
    pub pulse_closed_loop: SimReport,
    pub pulse_open_loop: SimReport,
    pub pulse_controller_input: SimReport,
    pub comparison: Vec<AxisComparison>,
    pub closed_loop_faster_on_all_axes: bool,
}

fn settles_before(closed: &StepMetrics, open: &StepMetrics) -> bool {
    match (closed.settling_time, open.settling_time) {
        (Some(c), Some(o)) => c < o,
        (Some(_), None) => true,
        _ => false,
    }
}

fn compare(closed: &SimReport, open: &SimReport) -> Vec<AxisComparison> {
    let (Some(c), Some(o)) = (&closed.step_metrics, &open.step_metrics) else {
        return Vec::new();
    };
    c.iter()
        .zip(o)
        .enumerate()
        .map(|(axis, (c, o))| AxisComparison {
            axis,
            closed_loop_settling_s: c.settling_time,
            open_loop_settling_s: o.settling_time,
            closed_loop_overshoot: c.overshoot,
            open_loop_overshoot: o.overshoot,
            closed_loop_faster: settles_before(c, o),
        })
        .collect()
}

/// Open-loop and controller-input variants of the bundled pulse scenario.
fn pulse_variant(controller: &str, wiring: &str, stem: &str) -> CliResult<String> {
    let mut v: serde_json::Value = serde_json::from_str(data::MEMS_PULSE_SCENARIO_JSON)
        .map_err(|e| CliError::new(crate::error::code::INPUT, e.to_string()))?;
    v["controller"] = controller.into();
    v["wiring"] = wiring.into();
    v["outputs"]["trajectory"] = format!("{stem}.csv").into();
    v["outputs"]["report"] = format!("{stem}_report.json").into();
    Ok(to_pretty(&v))
}

pub fn run(out_dir: &Path, jobs: usize) -> CliResult<Outcome> {
    fs::create_dir_all(out_dir).map_err(|e| CliError::write(out_dir, e))?;
    let files = [
        (PLANT, data::MEMS_PLANT_JSON.to_string()),
        (CONTROLLER, data::MEMS_CONTROLLER_JSON.to_string()),
        (OPEN_CONTROLLER, "{\n  \"type\": \"none\"\n}\n".to_string()),
        (REGULATION, REGULATION_SCENARIO.to_string()),
        (PULSE, data::MEMS_PULSE_SCENARIO_JSON.to_string()),
        (PULSE_OPEN, pulse_variant(OPEN_CONTROLLER, "plant_input", "mems_pulse_open")?),
        (
            PULSE_CONTROLLER_INPUT,
            pulse_variant(CONTROLLER, "controller_input", "mems_pulse_controller_input")?,
        ),
    ];
    for (name, text) in &files {
        write_text(&out_dir.join(name), text)?;
    }

    let plant = plant_from_json(data::MEMS_PLANT_JSON)?;
    let written = fs::read_to_string(out_dir.join(PLANT)).map_err(|e| CliError::read(&out_dir.join(PLANT), e))?;
    let model_round_trip = plant_to_json(&plant_from_json(&written)?) == written;

    let check_ni = match ni_verdict(&plant, MethodArg::Auto, None, None, 400) {
        Ok((v, note)) => {
            write_text(&out_dir.join("check_ni.json"), &to_pretty(&v))?;
            CheckNiSummary {
                exit_code: verdict_code(&v),
                is_ni: v.is_ni,
                method: serde_json::to_value(v.method).ok().and_then(|m| m.as_str().map(String::from)).unwrap_or_default(),
                note,
                error: None,
            }
        }
        Err(e) => CheckNiSummary {
            exit_code: e.code,
            is_ni: None,
            method: "auto".into(),
            note: None,
            error: Some(e.message),
        },
    };

    let paths: Vec<PathBuf> = [REGULATION, PULSE, PULSE_OPEN, PULSE_CONTROLLER_INPUT]
        .iter()
        .map(|n| out_dir.join(n))
        .collect();
    let mut runs: Vec<RunSummary> = Vec::new();
    for r in run_scenarios(&paths, jobs)? {
        runs.push(r?);
    }
    let [regulation, closed, open, controller_input] = <[RunSummary; 4]>::try_from(runs).expect("four scenarios");
    let comparison = compare(&closed.report, &open.report);
    let summary = DemoSummary {
        out_dir: out_dir.display().to_string(),
        model_round_trip,
        check_ni,
        wiring: "plant_input".into(),
        closed_loop_faster_on_all_axes: !comparison.is_empty() && comparison.iter().all(|c| c.closed_loop_faster),
        comparison,
        regulation: regulation.report,
        pulse_closed_loop: closed.report,
        pulse_open_loop: open.report,
        pulse_controller_input: controller_input.report,
    };
    let text = to_pretty(&summary);
    write_text(&out_dir.join("demo_summary.json"), &text)?;
    Ok(Outcome::ok(text))
}
