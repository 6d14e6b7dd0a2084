//! HIGS gains from the plant's DC gain.
//!
//! Closed-loop stability of the positive-feedback loop only constrains the
//! gain slopes through `G(0)`: `k_h·G(0) < 1` for a single element,
//! `K_h⁻¹ − G(0) ≻ 0` for parallel elements and `k₁k₂·G(0) < 1` for a
//! series pair. Integrator frequencies are free; the defaults used here are
//! heuristics and are reported as such.

use serde::{Deserialize, Serialize};

use crate::closedloop::ControllerConfig;
use crate::error::{Error, Result};
use crate::higs::HigsParams;
use crate::numerics::{self, Mat, Tolerances};
use crate::plant::PlantModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    Single,
    Multi,
    Cascade,
}

impl std::str::FromStr for Topology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(Topology::Single),
            "multi" => Ok(Topology::Multi),
            "cascade" => Ok(Topology::Cascade),
            other => Err(Error::InvalidConfig(format!("unknown topology {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthesisRequest {
    pub plant: PlantModel,
    pub topology: Topology,
    /// Relative stability margin in `(0, 1)`.
    pub margin: f64,
    /// Integrator frequencies per channel, rad/s.
    pub omega_h_hint: Option<Vec<f64>>,
    pub gain_cap: f64,
}

impl SynthesisRequest {
    pub fn new(plant: PlantModel, topology: Topology, margin: f64, gain_cap: f64) -> Self {
        SynthesisRequest {
            plant,
            topology,
            margin,
            omega_h_hint: None,
            gain_cap,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.margin > 0.0 && self.margin < 1.0) {
            return Err(Error::InvalidConfig(format!("margin must lie in (0, 1), got {}", self.margin)));
        }
        if !(self.gain_cap > 0.0 && self.gain_cap.is_finite()) {
            return Err(Error::InvalidConfig(format!("gain cap must be finite and > 0, got {}", self.gain_cap)));
        }
        if let Some(h) = &self.omega_h_hint {
            if h.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
                return Err(Error::InvalidConfig("omega_h hints must be finite and >= 0".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisResult {
    pub controller: ControllerConfig,
    /// Symmetrized DC gain used by the predicates.
    pub dc_gain: Mat,
    /// Bisection scale for parallel elements.
    pub scale: Option<f64>,
    /// Smallest eigenvalue of the stability predicate matrix
    /// (`1/k − G(0)`, `K⁻¹ − G(0)` or `1/(k₁k₂) − G(0)`).
    pub predicate_margin: f64,
    pub warnings: Vec<String>,
}

/// `k_h = min(cap, (1 − margin)/G(0))` for `G(0) > 0`, otherwise `cap`.
pub fn single_gain(g0: f64, margin: f64, cap: f64) -> f64 {
    if g0 > 0.0 {
        cap.min((1.0 - margin) / g0)
    } else {
        cap
    }
}

/// Common slope of a series pair: `√` of the single-element rule.
pub fn cascade_gain(g0: f64, margin: f64, cap: f64) -> f64 {
    if g0 > 0.0 {
        cap.sqrt().min(((1.0 - margin) / g0).sqrt())
    } else {
        cap.sqrt()
    }
}

/// Cascade storage parameter: midpoint of the interval where both the
/// storage and the closed-loop Lyapunov function stay positive definite.
pub fn cascade_a(k1: f64, k2: f64, g0: f64) -> f64 {
    k2 / (4.0 * k1) * (1.0 - k1 * k2 * g0).min(1.0)
}

/// Largest `s ∈ (0, 1]` such that `K = s·cap·I` gives `K⁻¹ − G ≻ 0` with
/// `λ_min(K⁻¹ − G) ≥ margin·λ_min(K⁻¹)`, found by bisection.
pub fn multi_scale(g0: &Mat, margin: f64, cap: f64) -> Result<f64> {
    let p = g0.nrows();
    let g = numerics::symmetrize(g0);
    let tol = Tolerances::default().definite;
    let feasible = |s: f64| -> Result<bool> {
        let kinv = 1.0 / (s * cap);
        let gap = Mat::identity(p, p) * kinv - &g;
        if !numerics::is_pos_def(&gap, tol * gap.norm().max(1.0))? {
            return Ok(false);
        }
        Ok(numerics::sym_eigenvalues(&gap)[0] >= margin * kinv)
    };
    if feasible(1.0)? {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= 0.0 || mid == hi {
            break;
        }
        if feasible(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
        if lo > 0.0 && hi - lo <= 1e-12 * hi {
            break;
        }
    }
    if lo <= 0.0 {
        let largest = numerics::sym_eigenvalues(&g).last().copied().unwrap_or(0.0);
        return Err(Error::Infeasible {
            largest_eigenvalue: largest,
        });
    }
    Ok(lo)
}

/// `0.5·min|λ(A)|`: a heuristic integrator frequency.
pub fn default_omega_h(plant: &PlantModel) -> Result<f64> {
    let poles = plant.poles()?;
    Ok(0.5 * poles.iter().map(|l| l.norm()).fold(f64::INFINITY, f64::min))
}

fn omegas(req: &SynthesisRequest, count: usize, warnings: &mut Vec<String>) -> Result<Vec<f64>> {
    let out = match &req.omega_h_hint {
        Some(h) if h.len() == count => h.clone(),
        Some(h) if h.len() == 1 => vec![h[0]; count],
        Some(h) => {
            return Err(Error::InvalidConfig(format!(
                "{} omega_h hint(s) given for {count} channel(s)",
                h.len()
            )))
        }
        None => {
            let w = default_omega_h(&req.plant)?;
            warnings.push(format!(
                "omega_h set heuristically to 0.5*min|eig(A)| = {w:.6e} rad/s; tune for performance"
            ));
            vec![w; count]
        }
    };
    if out.iter().all(|&w| w == 0.0) {
        warnings.push("every omega_h is zero: the elements act as pure gains with no integrating action".into());
    }
    Ok(out)
}

fn siso_g0(req: &SynthesisRequest) -> Result<f64> {
    let p = &req.plant;
    if !p.is_siso() {
        return Err(Error::NotSiso {
            inputs: p.channels(),
            outputs: p.c().nrows(),
        });
    }
    Ok(p.dc_gain()?[(0, 0)])
}

pub fn synthesize_single(req: &SynthesisRequest) -> Result<SynthesisResult> {
    req.validate()?;
    let g0 = siso_g0(req)?;
    let mut warnings = Vec::new();
    let k = single_gain(g0, req.margin, req.gain_cap);
    let w = omegas(req, 1, &mut warnings)?[0];
    let predicate_margin = 1.0 / k - g0;
    debug_assert!(predicate_margin > 0.0);
    Ok(SynthesisResult {
        controller: ControllerConfig::Single(HigsParams::new(k, w)?),
        dc_gain: Mat::from_element(1, 1, g0),
        scale: None,
        predicate_margin,
        warnings,
    })
}

pub fn synthesize_multi(req: &SynthesisRequest) -> Result<SynthesisResult> {
    req.validate()?;
    let g0 = req.plant.dc_gain()?;
    if g0.nrows() != g0.ncols() {
        return Err(Error::NotSquare(format!("G(0) is {}x{}", g0.nrows(), g0.ncols())));
    }
    let mut warnings = Vec::new();
    let asym = numerics::asymmetry(&g0);
    if asym > 1e-6 {
        warnings.push(format!("G(0) is not symmetric (relative asymmetry {asym:.3e}); its symmetric part is used"));
    }
    let g = numerics::symmetrize(&g0);
    let s = multi_scale(&g, req.margin, req.gain_cap)?;
    let k = s * req.gain_cap;
    let ws = omegas(req, g.nrows(), &mut warnings)?;
    let params = ws.iter().map(|&w| HigsParams::new(k, w)).collect::<Result<Vec<_>>>()?;
    let kinv = Mat::identity(g.nrows(), g.nrows()) / k;
    let predicate_margin = numerics::sym_eigenvalues(&(kinv - &g))[0];
    Ok(SynthesisResult {
        controller: ControllerConfig::Multi(params),
        dc_gain: g,
        scale: Some(s),
        predicate_margin,
        warnings,
    })
}

pub fn synthesize_cascade(req: &SynthesisRequest) -> Result<SynthesisResult> {
    req.validate()?;
    let g0 = siso_g0(req)?;
    let mut warnings = Vec::new();
    let k = cascade_gain(g0, req.margin, req.gain_cap);
    let (k1, k2) = (k, k);
    let w2 = match &req.omega_h_hint {
        Some(h) if !h.is_empty() => *h.last().unwrap_or(&0.0),
        _ => omegas(req, 1, &mut warnings)?[0],
    };
    if w2 == 0.0 {
        warnings.push("omega_2 is zero, which forces omega_1 = 0".into());
    }
    let w1 = w2 * k1 / k2;
    let a = cascade_a(k1, k2, g0);
    let first = HigsParams::new(k1, w1)?;
    let second = HigsParams::new(k2, w2)?;
    let controller = ControllerConfig::Cascade { first, second, a };
    controller.validate()?;
    Ok(SynthesisResult {
        controller,
        dc_gain: Mat::from_element(1, 1, g0),
        scale: None,
        predicate_margin: 1.0 / (k1 * k2) - g0,
        warnings,
    })
}

pub fn synthesize(req: &SynthesisRequest) -> Result<SynthesisResult> {
    match req.topology {
        Topology::Single => synthesize_single(req),
        Topology::Multi => synthesize_multi(req),
        Topology::Cascade => synthesize_cascade(req),
    }
}
