//! Describing functions of a HIGS element and response metrics.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize, Serializer};

use crate::closedloop::{simulate, ClosedLoop, ControllerConfig, InitialState, InputChannel, InputSignal, SimConfig, Trajectory};
use crate::error::{Error, Result};
use crate::higs::HigsParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DescribingPoint {
    pub omega: f64,
    pub amplitude: f64,
    #[serde(serialize_with = "serialize_complex")]
    pub complex_gain: Complex64,
    pub magnitude_db: f64,
    pub phase_deg: f64,
}

fn serialize_complex<S: Serializer>(c: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    [c.re, c.im].serialize(s)
}

impl DescribingPoint {
    pub fn from_gain(omega: f64, amplitude: f64, g: Complex64) -> Self {
        let mut phase = g.arg().to_degrees();
        if phase <= -180.0 {
            phase += 360.0;
        }
        DescribingPoint {
            omega,
            amplitude,
            complex_gain: g,
            magnitude_db: 20.0 * g.norm().log10(),
            phase_deg: phase,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescribingOptions {
    pub settle_cycles: usize,
    pub measure_cycles: usize,
    pub steps_per_cycle: usize,
}

impl Default for DescribingOptions {
    fn default() -> Self {
        DescribingOptions {
            settle_cycles: 10,
            measure_cycles: 10,
            steps_per_cycle: 2000,
        }
    }
}

/// First-harmonic gain of a single element driven by `amplitude·sin(ωt)`.
pub fn describing_function(p: &HigsParams, amplitude: f64, omega: f64, opts: &DescribingOptions) -> Result<DescribingPoint> {
    describing_function_trace(p, amplitude, omega, opts).map(|(pt, _)| pt)
}

/// As [`describing_function`], also returning the simulated trace.
pub fn describing_function_trace(
    p: &HigsParams,
    amplitude: f64,
    omega: f64,
    opts: &DescribingOptions,
) -> Result<(DescribingPoint, Trajectory)> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::InvalidConfig(format!("omega must be > 0, got {omega}")));
    }
    if !(amplitude > 0.0 && amplitude.is_finite()) {
        return Err(Error::InvalidConfig(format!("amplitude must be > 0, got {amplitude}")));
    }
    if opts.settle_cycles + opts.measure_cycles == 0 || opts.measure_cycles == 0 || opts.steps_per_cycle < 2000 {
        return Err(Error::InvalidConfig(
            "need at least one measured cycle and 2000 steps per cycle".into(),
        ));
    }
    let period = 2.0 * PI / omega;
    let dt = period / opts.steps_per_cycle as f64;
    let cycles = opts.settle_cycles + opts.measure_cycles;
    let mut cfg = SimConfig::new(cycles as f64 * period, dt);
    cfg.eps_switch = 1e-3 * dt;
    let lp = ClosedLoop::open_higs(&ControllerConfig::Single(*p))?;
    let input = InputSignal {
        channels: vec![InputChannel::sine(amplitude, omega / (2.0 * PI))],
    };
    let (traj, _) = simulate(&lp, &input, &cfg, &InitialState::default())?;

    let first = opts.settle_cycles * opts.steps_per_cycle;
    let last = cycles * opts.steps_per_cycle;
    let (mut a, mut b) = (0.0, 0.0);
    // Rectangle rule over whole periods (trapezoid for periodic data).
    for j in first..last {
        let t = traj.times[j];
        let u = traj.y[j][0];
        if !u.is_finite() {
            return Err(Error::NonFinite(format!("controller output at t = {t}")));
        }
        a += u * (omega * t).sin();
        b += u * (omega * t).cos();
    }
    let scale = 2.0 / (last - first) as f64;
    let g = Complex64::new(a * scale, b * scale) / amplitude;
    Ok((DescribingPoint::from_gain(omega, amplitude, g), traj))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics {
    pub overshoot: f64,
    /// `None` when the 2% band is not entered and held.
    pub settling_time: Option<f64>,
    pub steady_state_error: f64,
}

/// Metrics of output `channel` over the whole trajectory.
pub fn step_metrics(traj: &Trajectory, channel: usize, reference_final: f64) -> StepMetrics {
    let from = traj.times.first().copied().unwrap_or(0.0);
    step_metrics_window(traj, channel, reference_final, from)
}

/// Metrics over samples at or after `t_from`; settling time is measured
/// from `t_from`. The 2% band is taken relative to `|reference_final|`, or
/// to the largest deviation in the window when the reference is zero.
pub fn step_metrics_window(traj: &Trajectory, channel: usize, reference_final: f64, t_from: f64) -> StepMetrics {
    let samples: Vec<(f64, f64)> = traj
        .times
        .iter()
        .zip(&traj.y)
        .filter(|(t, _)| **t >= t_from)
        .map(|(t, y)| (*t, y[channel]))
        .collect();
    let Some(&(_, y_last)) = samples.last() else {
        return StepMetrics {
            overshoot: 0.0,
            settling_time: None,
            steady_state_error: f64::NAN,
        };
    };
    let r = reference_final;
    let dev_peak = samples.iter().map(|(_, y)| (y - r).abs()).fold(0.0, f64::max);

    let overshoot = if r != 0.0 {
        samples.iter().map(|(_, y)| r.signum() * (y - r)).fold(0.0, f64::max) / r.abs()
    } else {
        let y0 = samples[0].1;
        if y0 == 0.0 {
            0.0
        } else {
            samples.iter().map(|(_, y)| -y0.signum() * y).fold(0.0, f64::max) / y0.abs()
        }
    };

    let band = 0.02 * if r != 0.0 { r.abs() } else { dev_peak };
    let settling_time = if (y_last - r).abs() > band {
        None
    } else {
        let mut idx = samples.len();
        while idx > 0 && (samples[idx - 1].1 - r).abs() <= band {
            idx -= 1;
        }
        let t_settle = if idx == 0 { samples[0].0 } else { samples[idx].0 };
        Some(t_settle - t_from.max(samples[0].0))
    };

    StepMetrics {
        overshoot,
        settling_time,
        steady_state_error: (y_last - r).abs(),
    }
}
