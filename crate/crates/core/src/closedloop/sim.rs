//! Fixed-step hybrid simulation.
//!
//! Each step of length `dt` is split at reference jumps. Inside a piece the
//! HIGS modes are frozen and the joint state is advanced by classical RK4.
//! If the end state shows an integrator element beyond its gain line, or a
//! gain element whose gain condition `ω_h·e² > k_h·e·ė` has failed, the
//! first such instant is bracketed by bisection down to `eps_switch` and
//! then refined by Illinois regula falsi. The piece is cut there, the modes
//! are re-classified and integration resumes. Gain-mode elements are
//! projected onto `x_h = k_h·e` at every accepted state.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::input::InputSignal;
use super::{ClosedLoop, ControllerConfig, InitialState, LyapunovForm, Wiring};
use crate::analysis::{step_metrics_window, StepMetrics};
use crate::error::{Error, Result};
use crate::higs::{classify_mode, gain_condition, higs_rate, sector_excess, sector_tolerance, HigsMode};
use crate::numerics::{Mat, Tolerances};
use crate::plant::{find_ni_certificate, mat_from_rows};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub t_end: f64,
    pub dt: f64,
    #[serde(default = "default_eps_switch")]
    pub eps_switch: f64,
    /// Switches per second over any 1 s window.
    #[serde(default = "default_max_switch_rate")]
    pub max_switch_rate: f64,
    /// Certificate `Y` for the composite Lyapunov monitor.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monitor_y: Option<Vec<Vec<f64>>>,
    /// Search for a certificate when `monitor_y` is absent.
    #[serde(default = "default_true")]
    pub auto_certificate: bool,
    /// Converged when the final joint-state norm is at most this fraction
    /// of its peak.
    #[serde(default = "default_converge_tol")]
    pub converge_tol: f64,
    /// Keep every `output_stride`-th sample (the last one is always kept).
    #[serde(default = "default_stride")]
    pub output_stride: usize,
}

fn default_eps_switch() -> f64 {
    1e-9
}
fn default_max_switch_rate() -> f64 {
    1e6
}
fn default_true() -> bool {
    true
}
fn default_converge_tol() -> f64 {
    1e-3
}
fn default_stride() -> usize {
    1
}

impl SimConfig {
    pub fn new(t_end: f64, dt: f64) -> Self {
        SimConfig {
            t_end,
            dt,
            eps_switch: default_eps_switch(),
            max_switch_rate: default_max_switch_rate(),
            monitor_y: None,
            auto_certificate: true,
            converge_tol: default_converge_tol(),
            output_stride: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.dt > 0.0 && self.t_end.is_finite() && self.dt < self.t_end) {
            return bad(format!("need 0 < dt < t_end, got dt = {}, t_end = {}", self.dt, self.t_end));
        }
        if !(self.eps_switch > 0.0 && self.eps_switch < self.dt) {
            return bad(format!("need 0 < eps_switch < dt, got {}", self.eps_switch));
        }
        if !(self.max_switch_rate > 0.0) {
            return bad("max_switch_rate must be positive".into());
        }
        if !(self.converge_tol > 0.0) {
            return bad("converge_tol must be positive".into());
        }
        if self.output_stride == 0 {
            return bad("output_stride must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchEvent {
    pub time: f64,
    /// Element index (0-based).
    pub channel: usize,
    pub from: HigsMode,
    pub to: HigsMode,
}

/// Sampled signals. Every per-sample vector is aligned with `times`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub x_h: Vec<Vec<f64>>,
    /// HIGS element inputs.
    pub e: Vec<Vec<f64>>,
    /// Plant inputs, or controller outputs for a bare controller.
    pub u: Vec<Vec<f64>>,
    /// Plant outputs, or controller outputs for a bare controller.
    pub y: Vec<Vec<f64>>,
    pub r: Vec<Vec<f64>>,
    pub modes: Vec<Vec<HigsMode>>,
    pub v: Vec<f64>,
    pub w: Option<Vec<f64>>,
    pub switches: Vec<SwitchEvent>,
    /// `ΔV − ∫eᵀdu` for every integration step (not only kept samples).
    pub step_dissipation: Vec<f64>,
    /// Mode combinations in force during any integration piece.
    pub visited_modes: Vec<Vec<HigsMode>>,
    /// Largest `|Δx_h|/(1 + |x_h|)` caused by re-projection at a switch.
    pub max_switch_jump: f64,
    /// Start of the window used for response metrics.
    pub metrics_from: f64,
    /// How the `W` column was obtained.
    pub w_monitor: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub converged: bool,
    pub final_state_norm: f64,
    pub peak_state_norm: f64,
    pub convergence_threshold: f64,
    pub max_w_increase: Option<f64>,
    pub max_w: Option<f64>,
    pub w_monitor: String,
    pub switch_count: usize,
    pub dissipation_max_residual: f64,
    pub max_switch_jump: f64,
    pub step_metrics: Option<Vec<StepMetrics>>,
}

struct Work {
    ext: Vec<f64>,
    ext_dot: Vec<f64>,
    y: Vec<f64>,
    u: Vec<f64>,
    xdot: Vec<f64>,
    ydot: Vec<f64>,
    e: Vec<f64>,
    edot: Vec<f64>,
    out: Vec<f64>,
    r: Vec<f64>,
    rdot: Vec<f64>,
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl Work {
    fn new(lp: &ClosedLoop) -> Self {
        let (n, m, nh, d) = (lp.n, lp.m, lp.params.len(), lp.state_dim());
        Work {
            ext: vec![0.0; m],
            ext_dot: vec![0.0; m],
            y: vec![0.0; m],
            u: vec![0.0; m],
            xdot: vec![0.0; n],
            ydot: vec![0.0; m],
            e: vec![0.0; nh],
            edot: vec![0.0; nh],
            out: vec![0.0; nh],
            r: vec![0.0; m],
            rdot: vec![0.0; m],
            k: [vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]],
            tmp: vec![0.0; d],
        }
    }
}

/// Why a piece had to be cut.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Crossing {
    /// Integrator element passed its gain line; carries the side sign.
    Boundary(f64),
    /// Gain element lost its gain condition.
    GainExit,
}

struct Sim<'a> {
    lp: &'a ClosedLoop,
    input: &'a InputSignal,
    tol: Tolerances,
    w: Work,
}

impl<'a> Sim<'a> {
    /// Fills all signal buffers for the joint state `z` at time `t`.
    fn eval(&mut self, t: f64, level: f64, z: &[f64], modes: &[HigsMode]) {
        let lp = self.lp;
        let w = &mut self.w;
        let (x, h) = z.split_at(lp.n);
        self.input.eval(t, level, &mut w.r, &mut w.rdot);
        let has_plant = lp.plant.is_some();
        if has_plant {
            lp.output(x, &mut w.y);
        }
        for i in 0..lp.m {
            w.ext[i] = match (has_plant, lp.wiring) {
                (false, _) => w.r[i],
                (true, Wiring::PlantInput) => w.y[i],
                (true, Wiring::ControllerInput) => w.r[i] + w.y[i],
            };
        }
        let eff = |i: usize, e: f64| match modes[i] {
            HigsMode::Gain => lp.params[i].k_h * e,
            HigsMode::Integrator => h[i],
        };
        match &lp.controller {
            ControllerConfig::None => w.u.iter_mut().for_each(|v| *v = 0.0),
            ControllerConfig::Single(_) | ControllerConfig::Multi(_) => {
                for i in 0..lp.m {
                    w.e[i] = w.ext[i];
                    w.out[i] = eff(i, w.e[i]);
                    w.u[i] = w.out[i];
                }
            }
            ControllerConfig::Cascade { .. } => {
                w.e[0] = w.ext[0];
                w.out[0] = eff(0, w.e[0]);
                w.e[1] = w.out[0];
                w.out[1] = eff(1, w.e[1]);
                w.u[0] = w.out[1];
            }
        }
        if has_plant {
            if lp.wiring == Wiring::PlantInput {
                for i in 0..lp.m {
                    w.u[i] += w.r[i];
                }
            }
            lp.plant_rate(x, &w.u, &mut w.xdot);
            lp.output(&w.xdot, &mut w.ydot);
        }
        for i in 0..lp.m {
            w.ext_dot[i] = match (has_plant, lp.wiring) {
                (false, _) => w.rdot[i],
                (true, Wiring::PlantInput) => w.ydot[i],
                (true, Wiring::ControllerInput) => w.rdot[i] + w.ydot[i],
            };
        }
        match &lp.controller {
            ControllerConfig::None => {}
            ControllerConfig::Single(_) | ControllerConfig::Multi(_) => {
                w.edot.copy_from_slice(&w.ext_dot[..lp.m]);
            }
            ControllerConfig::Cascade { .. } => {
                w.edot[0] = w.ext_dot[0];
                w.edot[1] = higs_rate(&lp.params[0], modes[0], w.e[0], w.edot[0]);
            }
        }
    }

    fn deriv(&mut self, t: f64, level: f64, z: &[f64], modes: &[HigsMode], slot: usize) {
        self.eval(t, level, z, modes);
        let n = self.lp.n;
        let w = &mut self.w;
        let (xdot, e, edot) = (&w.xdot, &w.e, &w.edot);
        let k = &mut w.k[slot];
        k[..n].copy_from_slice(xdot);
        for (i, p) in self.lp.params.iter().enumerate() {
            k[n + i] = higs_rate(p, modes[i], e[i], edot[i]);
        }
    }

    fn rk4(&mut self, t: f64, level: f64, z: &[f64], h: f64, modes: &[HigsMode]) -> Vec<f64> {
        let d = z.len();
        self.deriv(t, level, z, modes, 0);
        for slot in 1..4 {
            let c = if slot == 3 { h } else { 0.5 * h };
            for j in 0..d {
                self.w.tmp[j] = z[j] + c * self.w.k[slot - 1][j];
            }
            let tmp = std::mem::take(&mut self.w.tmp);
            self.deriv(t + c, level, &tmp, modes, slot);
            self.w.tmp = tmp;
        }
        let k = &self.w.k;
        (0..d)
            .map(|j| z[j] + h / 6.0 * (k[0][j] + 2.0 * k[1][j] + 2.0 * k[2][j] + k[3][j]))
            .collect()
    }

    /// First element (in order) whose frozen mode has become invalid.
    fn crossing(&mut self, t: f64, level: f64, z: &[f64], modes: &[HigsMode]) -> Option<(usize, Crossing)> {
        self.eval(t, level, z, modes);
        let h = &z[self.lp.n..];
        for (i, p) in self.lp.params.iter().enumerate() {
            let e = self.w.e[i];
            match modes[i] {
                HigsMode::Integrator => {
                    if sector_excess(p, e, h[i]) > 0.5 * sector_tolerance(p, e, &self.tol) {
                        return Some((i, Crossing::Boundary(h[i].signum())));
                    }
                }
                HigsMode::Gain => {
                    if gain_condition(p, e, self.w.edot[i]) <= 0.0 {
                        return Some((i, Crossing::GainExit));
                    }
                }
            }
        }
        None
    }

    /// Signed event function of element `i`, positive past the event.
    fn event_value(&mut self, t: f64, level: f64, z: &[f64], modes: &[HigsMode], i: usize, kind: Crossing) -> f64 {
        self.eval(t, level, z, modes);
        let p = &self.lp.params[i];
        let e = self.w.e[i];
        match kind {
            Crossing::Boundary(side) => side * (z[self.lp.n + i] - p.k_h * e),
            Crossing::GainExit => -gain_condition(p, e, self.w.edot[i]),
        }
    }

    /// Locates the first event in `(t0, t1]`, knowing one has occurred by
    /// `t1`. Returns the cut time, the state there and the element.
    fn locate(
        &mut self,
        t0: f64,
        t1: f64,
        level: f64,
        z0: &[f64],
        modes: &[HigsMode],
        eps: f64,
    ) -> (f64, Vec<f64>, usize, Crossing) {
        let (mut lo, mut hi) = (t0, t1);
        let mut z_hi = self.rk4(t0, level, z0, t1 - t0, modes);
        let mut hit = self.crossing(t1, level, &z_hi, modes).expect("event present at t1");
        while hi - lo > eps {
            let mid = 0.5 * (lo + hi);
            let z_mid = self.rk4(t0, level, z0, mid - t0, modes);
            match self.crossing(mid, level, &z_mid, modes) {
                Some(found) => {
                    hi = mid;
                    z_hi = z_mid;
                    hit = found;
                }
                None => lo = mid,
            }
        }
        let (i, kind) = hit;

        // Illinois refinement of the element's event function on [lo, hi].
        let z_lo = self.rk4(t0, level, z0, lo - t0, modes);
        let mut f_lo = self.event_value(lo, level, &z_lo, modes, i, kind);
        let mut f_hi = self.event_value(hi, level, &z_hi, modes, i, kind);
        if f_lo >= 0.0 && lo > t0 {
            // Already on (or within tolerance past) the event at `lo`.
            return (lo, z_lo, i, kind);
        }
        let (mut a, mut b) = (lo, hi);
        let mut z_b = z_hi;
        if f_lo < 0.0 && f_hi > 0.0 {
            let scale = f_hi.abs().max(f_lo.abs());
            // Illinois scales the retained endpoint value; keep the true one
            // at `b` for the stopping test.
            let mut f_b = f_hi;
            let (mut f_a, mut z_a) = (f_lo, z_lo);
            let mut side = 0i8;
            for _ in 0..60 {
                let c = a + (b - a) * (f_lo / (f_lo - f_hi));
                if !(c > a && c < b) {
                    break;
                }
                let z_c = self.rk4(t0, level, z0, c - t0, modes);
                let f_c = self.event_value(c, level, &z_c, modes, i, kind);
                if f_c >= 0.0 {
                    b = c;
                    f_hi = f_c;
                    f_b = f_c;
                    z_b = z_c;
                    if side == 1 {
                        f_lo *= 0.5;
                    }
                    side = 1;
                } else {
                    a = c;
                    f_lo = f_c;
                    f_a = f_c;
                    z_a = z_c;
                    if side == -1 {
                        f_hi *= 0.5;
                    }
                    side = -1;
                }
                if f_b <= 1e-12 * scale || b - a <= 1e-15 * b.abs().max(1e-300) {
                    break;
                }
            }
            // A boundary crossing only needs a point close to the line; the
            // projection puts it exactly there.
            if matches!(kind, Crossing::Boundary(_)) && -f_a < f_b {
                return (a, z_a, i, kind);
            }
        }
        // Always cut on the far side so re-classification sees the event.
        (b, z_b, i, kind)
    }
}

struct Recorder {
    traj: Trajectory,
}

/// Joint-state norm.
fn joint_norm(z: &[f64]) -> f64 {
    z.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Runs the hybrid closed loop from `init` under `input`.
pub fn simulate(
    lp: &ClosedLoop,
    input: &InputSignal,
    cfg: &SimConfig,
    init: &InitialState,
) -> Result<(Trajectory, SimReport)> {
    cfg.validate()?;
    input.validate()?;
    if input.channels.len() != lp.m {
        return Err(Error::DimensionMismatch(format!(
            "input has {} channel(s), loop has {}",
            input.channels.len(),
            lp.m
        )));
    }
    let (n, nh) = (lp.n, lp.params.len());
    let mut z = vec![0.0; n + nh];
    if !init.x.is_empty() {
        if init.x.len() != n {
            return Err(Error::DimensionMismatch(format!("initial x has {} entries, plant has {n}", init.x.len())));
        }
        z[..n].copy_from_slice(&init.x);
    }
    if !init.x_h.is_empty() {
        if init.x_h.len() != nh {
            return Err(Error::DimensionMismatch(format!(
                "initial x_h has {} entries, controller has {nh}",
                init.x_h.len()
            )));
        }
        z[n..].copy_from_slice(&init.x_h);
    }
    if !z.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("initial state".into()));
    }

    let (lyap, w_monitor) = lyapunov_monitor(lp, cfg)?;

    let mut sim = Sim {
        lp,
        input,
        tol: Tolerances::default(),
        w: Work::new(lp),
    };
    let steps = ((cfg.t_end / cfg.dt).round() as usize).max(1);
    let mut rec = Recorder {
        traj: Trajectory {
            w: lyap.as_ref().map(|_| Vec::new()),
            w_monitor,
            metrics_from: input.last_jump_before(steps as f64 * cfg.dt).unwrap_or(0.0),
            ..Trajectory::default()
        },
    };
    let mut modes = vec![HigsMode::Integrator; nh];
    let mut window: VecDeque<f64> = VecDeque::new();
    let mut v_prev = lp.controller.storage(&z[n..]);
    // (e, u) at the end of the previous piece, for the supply integral.
    let mut last_pair: Option<(Vec<f64>, Vec<f64>)> = None;
    let max_pieces = 10_000usize;

    for k in 0..=steps {
        let t0 = k as f64 * cfg.dt;
        if k == steps {
            // Final sample: classify with the right-continuous reference.
            let new = classify_all(&mut sim, t0, t0, &z, &modes, false)?;
            log_switches(&mut rec.traj, &mut window, t0, &modes, &new, cfg)?;
            modes = new;
            record(&mut sim, &mut rec, t0, t0, &z, &modes, lyap.as_ref());
            break;
        }
        let t1 = (k + 1) as f64 * cfg.dt;
        let mut cuts = input.jumps_in(t0, t1);
        cuts.retain(|&t| t - t0 > 1e-9 * cfg.dt && t1 - t > 1e-9 * cfg.dt);
        cuts.push(t1);

        let mut supply = 0.0;
        let mut tau = t0;
        let mut pieces = 0usize;
        let mut after_jump = k > 0 && !input.jumps_in(t0 - 1e-9 * cfg.dt, t0 + 1e-9 * cfg.dt).is_empty();
        for &sb in &cuts {
            while tau < sb {
                let level = 0.5 * (tau + sb);
                if after_jump {
                    clamp_into_sector(&mut sim, tau, level, &mut z, &modes);
                    after_jump = false;
                }
                let new = classify_all(&mut sim, tau, level, &z, &modes, true)?;
                log_switches(&mut rec.traj, &mut window, tau, &modes, &new, cfg)?;
                modes = new;
                project_gain(&mut sim, tau, level, &mut z, &modes);
                if !rec.traj.visited_modes.contains(&modes) {
                    rec.traj.visited_modes.push(modes.clone());
                }
                if tau == t0 && k % cfg.output_stride == 0 {
                    record(&mut sim, &mut rec, tau, level, &z, &modes, lyap.as_ref());
                }

                // Supply across whatever changed since the previous piece. A
                // reference jump moves e first; any resulting clamp or
                // projection of u then happens at the new e.
                let start = supply_pair(&mut sim, tau, level, &z, &modes);
                if let Some((_, u_prev)) = &last_pair {
                    supply += connector(&start.0, u_prev, &start.1);
                }

                let z1 = sim.rk4(tau, level, &z, sb - tau, &modes);
                let (t_acc, mut z_acc, event) = match sim.crossing(sb, level, &z1, &modes) {
                    None => (sb, z1, None),
                    Some(_) => {
                        let (tc, zc, i, kind) = sim.locate(tau, sb, level, &z, &modes, cfg.eps_switch);
                        (tc, zc, Some((i, kind)))
                    }
                };
                let end = supply_pair(&mut sim, t_acc, level, &z_acc, &modes);
                supply += trapezoid(&start.0, &start.1, &end.0, &end.1);
                last_pair = Some(end);

                if let Some((i, Crossing::Boundary(_))) = event {
                    sim.eval(t_acc, level, &z_acc, &modes);
                    let p = lp.params[i];
                    let before = z_acc[n + i];
                    let after = p.k_h * sim.w.e[i];
                    z_acc[n + i] = after;
                    let jump = (after - before).abs() / (1.0 + before.abs());
                    rec.traj.max_switch_jump = rec.traj.max_switch_jump.max(jump);
                }
                project_gain(&mut sim, t_acc, level, &mut z_acc, &modes);
                check_sector(&mut sim, t_acc, level, &z_acc, &modes)?;
                if !z_acc.iter().all(|v| v.is_finite()) {
                    return Err(Error::NonFinite(format!("state at t = {t_acc}")));
                }
                z = z_acc;
                tau = t_acc;
                pieces += 1;
                if pieces > max_pieces {
                    return Err(Error::ZenoGuard {
                        time: tau,
                        limit: cfg.max_switch_rate,
                    });
                }
            }
            if sb < t1 {
                after_jump = true;
            }
        }
        let v_now = lp.controller.storage(&z[n..]);
        rec.traj.step_dissipation.push(v_now - v_prev - supply);
        v_prev = v_now;
    }

    let traj = rec.traj;
    let report = monitor_report(&traj, cfg.converge_tol);
    Ok((traj, report))
}

fn lyapunov_monitor(lp: &ClosedLoop, cfg: &SimConfig) -> Result<(Option<LyapunovForm>, String)> {
    let plant = match (&lp.plant, &lp.controller) {
        (Some(p), c) if *c != ControllerConfig::None => p,
        _ => return Ok((None, "not applicable".into())),
    };
    if let Some(rows) = &cfg.monitor_y {
        let y = mat_from_rows(rows)?;
        return Ok((Some(LyapunovForm::new(lp, &y)?), "supplied".into()));
    }
    if !cfg.auto_certificate {
        return Ok((None, "off".into()));
    }
    match find_ni_certificate(plant) {
        Ok(cert) => match LyapunovForm::new(lp, &cert.y) {
            Ok(form) => Ok((Some(form), "certificate".into())),
            Err(e) => Ok((None, format!("unavailable: {e}"))),
        },
        Err(e) => Ok((None, format!("unavailable: {e}"))),
    }
}

/// Modes from the set definitions, element by element (a cascade's second
/// input rate depends on the first element's mode).
fn classify_all(
    sim: &mut Sim<'_>,
    t: f64,
    level: f64,
    z: &[f64],
    current: &[HigsMode],
    strict: bool,
) -> Result<Vec<HigsMode>> {
    let n = sim.lp.n;
    let mut modes = current.to_vec();
    for i in 0..modes.len() {
        // Evaluate with this element tentatively integrating so that its
        // raw state is what gets classified.
        modes[i] = HigsMode::Integrator;
        sim.eval(t, level, z, &modes);
        let p = sim.lp.params[i];
        let (e, edot) = (sim.w.e[i], sim.w.edot[i]);
        modes[i] = match classify_mode(&p, e, z[n + i], edot, &sim.tol) {
            Ok(m) => m,
            Err(err) if strict => return Err(err),
            Err(_) => current[i],
        };
    }
    Ok(modes)
}

fn log_switches(
    traj: &mut Trajectory,
    window: &mut VecDeque<f64>,
    t: f64,
    old: &[HigsMode],
    new: &[HigsMode],
    cfg: &SimConfig,
) -> Result<()> {
    for (i, (a, b)) in old.iter().zip(new).enumerate() {
        if a != b {
            traj.switches.push(SwitchEvent {
                time: t,
                channel: i,
                from: *a,
                to: *b,
            });
            window.push_back(t);
            while window.front().is_some_and(|&f| f < t - 1.0) {
                window.pop_front();
            }
            if window.len() as f64 > cfg.max_switch_rate {
                return Err(Error::ZenoGuard {
                    time: t,
                    limit: cfg.max_switch_rate,
                });
            }
        }
    }
    Ok(())
}

/// `x_h := k_h·e` for every gain-mode element.
fn project_gain(sim: &mut Sim<'_>, t: f64, level: f64, z: &mut [f64], modes: &[HigsMode]) {
    if !modes.contains(&HigsMode::Gain) {
        return;
    }
    sim.eval(t, level, z, modes);
    let n = sim.lp.n;
    for (i, m) in modes.iter().enumerate() {
        if *m == HigsMode::Gain {
            z[n + i] = sim.w.out[i];
        }
    }
}

/// After a reference jump the input of a HIGS may move so that its state
/// leaves the sector; the state is then moved to the nearest sector point.
fn clamp_into_sector(sim: &mut Sim<'_>, t: f64, level: f64, z: &mut [f64], modes: &[HigsMode]) {
    let n = sim.lp.n;
    for i in 0..sim.lp.params.len() {
        sim.eval(t, level, z, modes);
        let p = sim.lp.params[i];
        let ke = p.k_h * sim.w.e[i];
        let (lo, hi) = if ke >= 0.0 { (0.0, ke) } else { (ke, 0.0) };
        z[n + i] = z[n + i].clamp(lo, hi);
    }
}

fn check_sector(sim: &mut Sim<'_>, t: f64, level: f64, z: &[f64], modes: &[HigsMode]) -> Result<()> {
    sim.eval(t, level, z, modes);
    let n = sim.lp.n;
    for (i, p) in sim.lp.params.iter().enumerate() {
        let e = sim.w.e[i];
        let excess = sector_excess(p, e, z[n + i]);
        if excess > sector_tolerance(p, e, &sim.tol) {
            return Err(Error::OutsideSector(format!(
                "element {i} at t = {t}: e = {e}, x_h = {}, excess {excess:e}",
                z[n + i]
            )));
        }
    }
    Ok(())
}

/// The (input, output) pairs entering the controller's supply rate.
fn supply_pair(sim: &mut Sim<'_>, t: f64, level: f64, z: &[f64], modes: &[HigsMode]) -> (Vec<f64>, Vec<f64>) {
    sim.eval(t, level, z, modes);
    let w = &sim.w;
    match sim.lp.controller {
        ControllerConfig::None => (Vec::new(), Vec::new()),
        ControllerConfig::Cascade { .. } => (vec![w.e[0]], vec![w.out[1]]),
        _ => (w.e.clone(), w.out.clone()),
    }
}

fn connector(e: &[f64], u0: &[f64], u1: &[f64]) -> f64 {
    (0..e.len()).map(|i| e[i] * (u1[i] - u0[i])).sum()
}

fn trapezoid(e0: &[f64], u0: &[f64], e1: &[f64], u1: &[f64]) -> f64 {
    (0..e0.len()).map(|i| 0.5 * (e0[i] + e1[i]) * (u1[i] - u0[i])).sum()
}

fn record(
    sim: &mut Sim<'_>,
    rec: &mut Recorder,
    t: f64,
    level: f64,
    z: &[f64],
    modes: &[HigsMode],
    lyap: Option<&LyapunovForm>,
) {
    let lp = sim.lp;
    sim.eval(t, level, z, modes);
    let (x, h) = z.split_at(lp.n);
    let w = &sim.w;
    let traj = &mut rec.traj;
    traj.times.push(t);
    traj.x.push(x.to_vec());
    traj.x_h.push(h.to_vec());
    traj.e.push(w.e.clone());
    traj.u.push(w.u.clone());
    traj.y.push(if lp.plant.is_some() {
        w.y.clone()
    } else {
        match lp.controller {
            ControllerConfig::Cascade { .. } => vec![w.out[1]],
            _ => w.out.clone(),
        }
    });
    traj.r.push(w.r.clone());
    traj.modes.push(modes.to_vec());
    traj.v.push(lp.controller.storage(h));
    if let (Some(form), Some(ws)) = (lyap, traj.w.as_mut()) {
        ws.push(form.value(lp, x, h));
    }
}

/// Aggregates the monitors of a finished trajectory.
pub fn monitor_report(traj: &Trajectory, converge_tol: f64) -> SimReport {
    let norms: Vec<f64> = traj
        .x
        .iter()
        .zip(&traj.x_h)
        .map(|(x, h)| joint_norm(&[x.as_slice(), h.as_slice()].concat()))
        .collect();
    let final_state_norm = norms.last().copied().unwrap_or(0.0);
    let peak_state_norm = norms.iter().copied().fold(0.0, f64::max);
    let convergence_threshold = converge_tol * peak_state_norm;
    let (max_w_increase, max_w) = match &traj.w {
        Some(w) if !w.is_empty() => (
            Some(w.windows(2).map(|p| p[1] - p[0]).fold(0.0, f64::max)),
            Some(w.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
        ),
        _ => (None, None),
    };
    let has_plant = traj.x.first().is_some_and(|x| !x.is_empty());
    let step_metrics = has_plant.then(|| {
        let channels = traj.y.first().map_or(0, Vec::len);
        (0..channels)
            .map(|c| {
                let reference = traj.r.last().map_or(0.0, |r| r[c]);
                step_metrics_window(traj, c, reference, traj.metrics_from)
            })
            .collect()
    });
    SimReport {
        converged: final_state_norm <= convergence_threshold,
        final_state_norm,
        peak_state_norm,
        convergence_threshold,
        max_w_increase,
        max_w,
        w_monitor: traj.w_monitor.clone(),
        switch_count: traj.switches.len(),
        dissipation_max_residual: traj.step_dissipation.iter().copied().fold(0.0, f64::max),
        max_switch_jump: traj.max_switch_jump,
        step_metrics,
    }
}

impl SimConfig {
    /// `Y` from `monitor_y`, if given.
    pub fn monitor_matrix(&self) -> Result<Option<Mat>> {
        self.monitor_y.as_deref().map(mat_from_rows).transpose()
    }
}
