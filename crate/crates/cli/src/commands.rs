use std::path::{Path, PathBuf};

use higs_core::io::{describing_csv, ControllerDoc};
use higs_core::plant::{default_grid, log_grid};
use higs_core::{
    describing_function, ni_certificate_test, ni_frequency_test, ni_hamiltonian_test, DescribingOptions,
    DescribingPoint, Error, HigsParams, NiVerdict, PlantModel, SynthesisRequest, Topology,
};
use rayon::prelude::*;

use crate::error::{code, CliError, CliResult};
use crate::scenario::{base_dir, batch_code, load_plant_file, to_pretty, write_text, RunSummary, Scenario};
use crate::{MethodArg, Outcome, TopologyArg};

pub fn verdict_code(v: &NiVerdict) -> i32 {
    match v.is_ni {
        Some(true) => code::NI,
        Some(false) => code::NOT_NI,
        None => code::UNKNOWN,
    }
}

fn sweep_grid(plant: &PlantModel, lo: Option<f64>, hi: Option<f64>, points: usize) -> CliResult<Vec<f64>> {
    if lo.is_none() && hi.is_none() && points == 400 {
        return Ok(default_grid(plant)?);
    }
    let default = default_grid(plant)?;
    let lo = lo.unwrap_or(default[0]);
    let hi = hi.unwrap_or(default[default.len() - 1]);
    Ok(log_grid(lo, hi, points)?)
}

/// Runs the requested NI test. Returns the verdict and an optional note.
pub fn ni_verdict(
    plant: &PlantModel,
    method: MethodArg,
    grid_min: Option<f64>,
    grid_max: Option<f64>,
    grid_points: usize,
) -> CliResult<(NiVerdict, Option<String>)> {
    let sweep = || -> CliResult<NiVerdict> {
        let grid = sweep_grid(plant, grid_min, grid_max, grid_points)?;
        Ok(ni_frequency_test(plant, &grid)?)
    };
    match method {
        MethodArg::Sweep => Ok((sweep()?, None)),
        MethodArg::Hamiltonian => Ok((ni_hamiltonian_test(plant)?, None)),
        MethodArg::Certificate => Ok((ni_certificate_test(plant)?, None)),
        MethodArg::Auto => match ni_hamiltonian_test(plant) {
            Ok(v) => Ok((v, None)),
            Err(e @ Error::PreconditionQ0 { .. }) => {
                Ok((sweep()?, Some(format!("Hamiltonian test not applicable ({e}); used the frequency sweep"))))
            }
            Err(e) => Err(e.into()),
        },
    }
}

pub fn check_ni(
    model: &Path,
    method: MethodArg,
    grid_min: Option<f64>,
    grid_max: Option<f64>,
    grid_points: usize,
) -> CliResult<Outcome> {
    let plant = load_plant_file(model)?;
    let (verdict, note) = ni_verdict(&plant, method, grid_min, grid_max, grid_points)?;
    Ok(Outcome {
        code: verdict_code(&verdict),
        stdout: to_pretty(&verdict),
        stderr: note.map(|n| format!("note: {n}\n")).unwrap_or_default(),
    })
}

pub fn synthesize(
    model: &Path,
    topology: TopologyArg,
    margin: f64,
    cap: f64,
    omega_h: Option<Vec<f64>>,
) -> CliResult<Outcome> {
    let plant = load_plant_file(model)?;
    let topology = match topology {
        TopologyArg::Single => Topology::Single,
        TopologyArg::Multi => Topology::Multi,
        TopologyArg::Cascade => Topology::Cascade,
    };
    let mut req = SynthesisRequest::new(plant, topology, margin, cap);
    req.omega_h_hint = omega_h;
    let res = higs_core::synthesize(&req)?;
    let mut doc = ControllerDoc::from_config(&res.controller);
    doc.notes = res.warnings.clone();
    doc.notes.push(format!("stability predicate margin {:e}", res.predicate_margin));
    let stderr: String = res.warnings.iter().map(|w| format!("warning: {w}\n")).collect();
    Ok(Outcome {
        code: code::NI,
        stdout: higs_core::io::controller_to_json(&doc),
        stderr,
    })
}

pub fn pool(jobs: usize) -> CliResult<rayon::ThreadPool> {
    if jobs == 0 {
        return Err(CliError::new(code::VALIDATION, "--jobs must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::new(code::VALIDATION, format!("cannot start {jobs} workers: {e}")))
}

/// Runs scenario files, `jobs` at a time, in isolation from each other.
pub fn run_scenarios(paths: &[PathBuf], jobs: usize) -> CliResult<Vec<CliResult<RunSummary>>> {
    let run_one = |path: &PathBuf| -> CliResult<RunSummary> {
        let scenario = Scenario::from_file(path)?;
        scenario
            .run(&base_dir(path), &path.display().to_string())
            .map_err(|e| e.context(path.display()))
    };
    Ok(pool(jobs)?.install(|| paths.par_iter().map(run_one).collect()))
}

pub fn simulate(paths: &[PathBuf], jobs: usize) -> CliResult<Outcome> {
    let results = run_scenarios(paths, jobs)?;
    let code = batch_code(&results);
    let summaries: Vec<&RunSummary> = results.iter().filter_map(|r| r.as_ref().ok()).collect();
    let stderr: String = results
        .iter()
        .filter_map(|r| r.as_ref().err())
        .map(|e| format!("error: {e}\n"))
        .collect();
    Ok(Outcome {
        code,
        stdout: to_pretty(&summaries),
        stderr,
    })
}

pub fn describe_points(
    p: &HigsParams,
    amplitude: f64,
    freqs: &[f64],
    opts: &DescribingOptions,
    jobs: usize,
) -> CliResult<Vec<DescribingPoint>> {
    let points: Vec<Result<DescribingPoint, Error>> =
        pool(jobs)?.install(|| freqs.par_iter().map(|&w| describing_function(p, amplitude, w, opts)).collect());
    Ok(points.into_iter().collect::<Result<Vec<_>, _>>()?)
}

pub fn describe_fn(
    k_h: f64,
    omega_h: f64,
    amplitude: f64,
    freqs: &[f64],
    opts: DescribingOptions,
    out: Option<&Path>,
    jobs: usize,
) -> CliResult<Outcome> {
    let p = HigsParams::new(k_h, omega_h)?;
    let csv = describing_csv(&describe_points(&p, amplitude, freqs, &opts, jobs)?);
    match out {
        Some(path) => {
            write_text(path, &csv)?;
            Ok(Outcome::ok(String::new()))
        }
        None => Ok(Outcome::ok(csv)),
    }
}
