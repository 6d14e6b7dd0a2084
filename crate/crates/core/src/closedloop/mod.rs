//! Positive-feedback interconnection of a plant with a HIGS controller,
//! hybrid simulation and Lyapunov monitoring.

mod input;
mod sim;

pub use input::{InputChannel, InputKind, InputSignal};
pub use sim::{monitor_report, simulate, SimConfig, SimReport, SwitchEvent, Trajectory};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::higs::{check_cascade, cascade_storage_value, storage_single, HigsParams};
use crate::numerics::{self, Mat, Tolerances};
use crate::plant::PlantModel;

/// Where the reference enters the loop. Feedback is always positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Wiring {
    /// `u = r + u_ctrl`, `e = y`.
    #[default]
    PlantInput,
    /// `u = u_ctrl`, `e = r + y`.
    ControllerInput,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ControllerConfig {
    /// No controller: the plant runs open loop.
    None,
    Single(HigsParams),
    /// One element per plant channel.
    Multi(Vec<HigsParams>),
    /// `e₂ = x₁`, output `x₂`.
    Cascade { first: HigsParams, second: HigsParams, a: f64 },
}

impl ControllerConfig {
    pub fn elements(&self) -> Vec<HigsParams> {
        match self {
            ControllerConfig::None => Vec::new(),
            ControllerConfig::Single(p) => vec![*p],
            ControllerConfig::Multi(ps) => ps.clone(),
            ControllerConfig::Cascade { first, second, .. } => vec![*first, *second],
        }
    }

    /// Number of controller inputs, `None` when any count is accepted.
    pub fn channels(&self) -> Option<usize> {
        match self {
            ControllerConfig::None => None,
            ControllerConfig::Single(_) | ControllerConfig::Cascade { .. } => Some(1),
            ControllerConfig::Multi(ps) => Some(ps.len()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for p in self.elements() {
            HigsParams::new(p.k_h, p.omega_h)?;
        }
        if let ControllerConfig::Cascade { first, second, a } = self {
            check_cascade(first, second, *a)?;
        }
        Ok(())
    }

    /// Controller storage at HIGS states `h`.
    pub fn storage(&self, h: &[f64]) -> f64 {
        match self {
            ControllerConfig::Cascade { first, second, a } => {
                cascade_storage_value(first.k_h, second.k_h, *a, h[0], h[1]).unwrap_or(f64::NAN)
            }
            _ => self.elements().iter().zip(h).map(|(p, &x)| storage_single(p, x)).sum(),
        }
    }
}

/// Plant plus controller, ready to simulate. Without a plant the HIGS is
/// driven directly by the reference (`e = r`).
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoop {
    pub(crate) plant: Option<PlantModel>,
    pub(crate) controller: ControllerConfig,
    pub(crate) wiring: Wiring,
    pub(crate) params: Vec<HigsParams>,
    n: usize,
    m: usize,
    // Row-major copies for the inner loop.
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
}

pub fn assemble(plant: &PlantModel, controller: &ControllerConfig, wiring: Wiring) -> Result<ClosedLoop> {
    controller.validate()?;
    let m = plant.channels();
    if let Some(k) = controller.channels() {
        if k != m {
            return Err(Error::DimensionMismatch(format!(
                "controller has {k} input channel(s), plant has {m}"
            )));
        }
    }
    let row_major = |x: &Mat| (0..x.nrows()).flat_map(|i| x.row(i).iter().copied().collect::<Vec<_>>()).collect();
    Ok(ClosedLoop {
        plant: Some(plant.clone()),
        controller: controller.clone(),
        wiring,
        params: controller.elements(),
        n: plant.states(),
        m,
        a: row_major(plant.a()),
        b: row_major(plant.b()),
        c: row_major(plant.c()),
    })
}

impl ClosedLoop {
    /// Bare controller driven by the reference.
    pub fn open_higs(controller: &ControllerConfig) -> Result<ClosedLoop> {
        controller.validate()?;
        let m = controller
            .channels()
            .ok_or_else(|| Error::InvalidConfig("a bare controller needs at least one element".into()))?;
        Ok(ClosedLoop {
            plant: None,
            controller: controller.clone(),
            wiring: Wiring::ControllerInput,
            params: controller.elements(),
            n: 0,
            m,
            a: Vec::new(),
            b: Vec::new(),
            c: Vec::new(),
        })
    }

    pub fn plant(&self) -> Option<&PlantModel> {
        self.plant.as_ref()
    }

    pub fn controller(&self) -> &ControllerConfig {
        &self.controller
    }

    pub fn wiring(&self) -> Wiring {
        self.wiring
    }

    pub fn plant_states(&self) -> usize {
        self.n
    }

    pub fn higs_states(&self) -> usize {
        self.params.len()
    }

    /// Continuous states: plant plus one per HIGS element.
    pub fn state_dim(&self) -> usize {
        self.n + self.params.len()
    }

    /// Number of reference / plant input channels.
    pub fn channels(&self) -> usize {
        self.m
    }

    pub(crate) fn output(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = (0..self.n).map(|j| self.c[i * self.n + j] * x[j]).sum();
        }
    }

    pub(crate) fn plant_rate(&self, x: &[f64], u: &[f64], xdot: &mut [f64]) {
        for (i, xd) in xdot.iter_mut().enumerate() {
            let ax: f64 = (0..self.n).map(|j| self.a[i * self.n + j] * x[j]).sum();
            let bu: f64 = (0..self.m).map(|j| self.b[i * self.m + j] * u[j]).sum();
            *xd = ax + bu;
        }
    }
}

/// Initial plant and HIGS states; omitted parts start at zero.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InitialState {
    #[serde(default)]
    pub x: Vec<f64>,
    #[serde(default)]
    pub x_h: Vec<f64>,
}

/// Precomputed pieces of the composite Lyapunov function.
#[derive(Debug, Clone)]
pub(crate) struct LyapunovForm {
    y_inv: Mat,
}

impl LyapunovForm {
    /// Checks `Y ≻ 0` and the controller-specific definiteness condition.
    pub(crate) fn new(lp: &ClosedLoop, y: &Mat) -> Result<Self> {
        let plant = lp
            .plant
            .as_ref()
            .ok_or_else(|| Error::InvalidConfig("Lyapunov function needs a plant".into()))?;
        let n = plant.states();
        if y.nrows() != n || y.ncols() != n {
            return Err(Error::DimensionMismatch(format!("Y must be {n}x{n}")));
        }
        let tol = Tolerances::default();
        let asym = numerics::asymmetry(y);
        if asym > tol.symmetry {
            return Err(Error::AsymmetricInput { asymmetry: asym });
        }
        let ys = numerics::symmetrize(y);
        if !numerics::is_pos_def(&ys, tol.definite * ys.norm())? {
            return Err(Error::PreconditionDefiniteness("Y is not positive definite".into()));
        }
        let cyc = plant.c() * &ys * plant.c().transpose();
        let cyc = numerics::symmetrize(&cyc);
        match &lp.controller {
            ControllerConfig::None => {
                return Err(Error::InvalidConfig("no controller to monitor".into()));
            }
            ControllerConfig::Single(_) | ControllerConfig::Multi(_) => {
                let kinv = Mat::from_diagonal(&nalgebra::DVector::from_iterator(
                    lp.params.len(),
                    lp.params.iter().map(|p| 1.0 / p.k_h),
                ));
                let gap = kinv - &cyc;
                if !numerics::is_pos_def(&gap, tol.definite * gap.norm().max(1.0))? {
                    return Err(Error::PreconditionDefiniteness(
                        "K_h^-1 - C Y C^T is not positive definite".into(),
                    ));
                }
            }
            ControllerConfig::Cascade { first, second, a } => {
                let (k1, k2) = (first.k_h, second.k_h);
                let bound = (k2 - 2.0 * a * k1) / (k1 * k2 * k2);
                if !(bound > cyc[(0, 0)]) {
                    return Err(Error::PreconditionDefiniteness(format!(
                        "(k2 - 2 a k1)/(k1 k2^2) = {bound} does not exceed C Y C^T = {}",
                        cyc[(0, 0)]
                    )));
                }
            }
        }
        let y_inv = numerics::solve_linear(&ys, &Mat::identity(n, n))?;
        Ok(LyapunovForm {
            y_inv: numerics::symmetrize(&y_inv),
        })
    }

    pub(crate) fn value(&self, lp: &ClosedLoop, x: &[f64], h: &[f64]) -> f64 {
        let n = x.len();
        let mut quad = 0.0;
        for i in 0..n {
            for j in 0..n {
                quad += x[i] * self.y_inv[(i, j)] * x[j];
            }
        }
        let mut y = vec![0.0; lp.m];
        lp.output(x, &mut y);
        let cross: f64 = match &lp.controller {
            ControllerConfig::Cascade { .. } => y[0] * h[1],
            _ => y.iter().zip(h).map(|(a, b)| a * b).sum(),
        };
        0.5 * quad + lp.controller.storage(h) - cross
    }
}

/// Composite Lyapunov function
/// `½xᵀY⁻¹x + V(x_h) − (Cx)ᵀ·u_ctrl` at the joint state `[x; x_h]`.
pub fn lyapunov_value(lp: &ClosedLoop, y: &Mat, state: &[f64]) -> Result<f64> {
    if state.len() != lp.state_dim() {
        return Err(Error::DimensionMismatch(format!(
            "joint state has {} entries, expected {}",
            state.len(),
            lp.state_dim()
        )));
    }
    let form = LyapunovForm::new(lp, y)?;
    Ok(form.value(lp, &state[..lp.n], &state[lp.n..]))
}
