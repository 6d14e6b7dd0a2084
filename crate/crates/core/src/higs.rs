//! Hybrid integrator-gain system (HIGS) elements.
//!
//! A single element integrates its input (`ẋ_h = ω_h·e`) while the pair
//! `(e, x_h)` lies strictly inside the sector `e·x_h ≥ x_h²/k_h`, and is
//! tied to the gain line `x_h = k_h·e` when it sits on the sector boundary
//! and would otherwise leave it (`ω_h·e² > k_h·e·ė`). The output is `x_h`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HigsParams {
    pub k_h: f64,
    pub omega_h: f64,
}

impl HigsParams {
    pub fn new(k_h: f64, omega_h: f64) -> Result<Self> {
        if !(k_h > 0.0 && k_h.is_finite()) {
            return Err(Error::ParameterViolation(format!("k_h must be > 0, got {k_h}")));
        }
        if !(omega_h >= 0.0 && omega_h.is_finite()) {
            return Err(Error::ParameterViolation(format!("omega_h must be >= 0, got {omega_h}")));
        }
        Ok(HigsParams { k_h, omega_h })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HigsMode {
    Integrator,
    Gain,
}

impl HigsMode {
    /// CSV code: 0 = integrator, 1 = gain.
    pub fn code(self) -> u8 {
        match self {
            HigsMode::Integrator => 0,
            HigsMode::Gain => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HigsElement {
    pub params: HigsParams,
    pub x_h: f64,
    pub mode: HigsMode,
}

impl HigsElement {
    pub fn new(params: HigsParams) -> Self {
        HigsElement {
            params,
            x_h: 0.0,
            mode: HigsMode::Integrator,
        }
    }

    pub fn storage(&self) -> f64 {
        storage_single(&self.params, self.x_h)
    }
}

/// `N` elements in parallel; channel `i` reads input `e_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiHigs {
    pub elements: Vec<HigsElement>,
}

impl MultiHigs {
    pub fn new(params: &[HigsParams]) -> Self {
        MultiHigs {
            elements: params.iter().copied().map(HigsElement::new).collect(),
        }
    }

    /// Diagonal of `K_h`.
    pub fn gains(&self) -> Vec<f64> {
        self.elements.iter().map(|e| e.params.k_h).collect()
    }
}

/// Two elements in series: the first element's output drives the second
/// (`e₂ = x₁`). `a` only enters the storage function.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeHigs {
    pub first: HigsElement,
    pub second: HigsElement,
    pub a: f64,
}

impl CascadeHigs {
    pub fn new(first: HigsParams, second: HigsParams, a: f64) -> Result<Self> {
        check_cascade(&first, &second, a)?;
        Ok(CascadeHigs {
            first: HigsElement::new(first),
            second: HigsElement::new(second),
            a,
        })
    }

    /// Uses `a = k₂/(4k₁)`, the midpoint of the admissible interval.
    pub fn with_default_a(first: HigsParams, second: HigsParams) -> Result<Self> {
        Self::new(first, second, second.k_h / (4.0 * first.k_h))
    }
}

/// Checks `0 < a < k₂/(2k₁)` and `k₂·ω₁ ≤ k₁·ω₂`.
pub fn check_cascade(first: &HigsParams, second: &HigsParams, a: f64) -> Result<()> {
    check_cascade_a(first.k_h, second.k_h, a)?;
    let lhs = second.k_h * first.omega_h;
    let rhs = first.k_h * second.omega_h;
    if lhs > rhs * (1.0 + 1e-12) {
        return Err(Error::ParameterViolation(format!(
            "cascade requires k2*omega1 <= k1*omega2, got {lhs} > {rhs}"
        )));
    }
    Ok(())
}

fn check_cascade_a(k1: f64, k2: f64, a: f64) -> Result<()> {
    let upper = k2 / (2.0 * k1);
    if !(a > 0.0 && a < upper) {
        return Err(Error::ParameterViolation(format!(
            "cascade parameter a must lie in (0, {upper}), got {a}"
        )));
    }
    Ok(())
}

/// Absolute sector tolerance `sector·(1 + |k_h·e|)`.
pub fn sector_tolerance(p: &HigsParams, e: f64, tol: &Tolerances) -> f64 {
    tol.sector * (1.0 + (p.k_h * e).abs())
}

/// `e·x_h − x_h²/k_h`; nonnegative inside the sector.
pub fn sector_residual(p: &HigsParams, e: f64, x_h: f64) -> f64 {
    e * x_h - x_h * x_h / p.k_h
}

/// Distance of `x_h` outside the interval spanned by `0` and `k_h·e`
/// (zero inside the sector).
pub fn sector_excess(p: &HigsParams, e: f64, x_h: f64) -> f64 {
    let ke = p.k_h * e;
    let (lo, hi) = if ke >= 0.0 { (0.0, ke) } else { (ke, 0.0) };
    (lo - x_h).max(x_h - hi).max(0.0)
}

/// Mode from the set definitions. Ties at `e = 0` resolve to integrator,
/// since `ω_h·e² > k_h·e·ė` cannot hold there.
pub fn classify_mode(p: &HigsParams, e: f64, x_h: f64, e_dot: f64, tol: &Tolerances) -> Result<HigsMode> {
    let band = sector_tolerance(p, e, tol);
    let excess = sector_excess(p, e, x_h);
    if excess > band {
        return Err(Error::OutsideSector(format!(
            "e = {e}, x_h = {x_h}, k_h = {}, excess {excess:e} > {band:e}",
            p.k_h
        )));
    }
    let on_boundary = (x_h - p.k_h * e).abs() <= band;
    if on_boundary && gain_condition(p, e, e_dot) > 0.0 {
        Ok(HigsMode::Gain)
    } else {
        Ok(HigsMode::Integrator)
    }
}

/// `ω_h·e² − k_h·e·ė`; positive keeps a boundary element in gain mode.
pub fn gain_condition(p: &HigsParams, e: f64, e_dot: f64) -> f64 {
    p.omega_h * e * e - p.k_h * e * e_dot
}

/// `ẋ_h` in the given mode: `ω_h·e` when integrating, `k_h·ė` on the gain
/// line.
pub fn higs_rate(p: &HigsParams, mode: HigsMode, e: f64, e_dot: f64) -> f64 {
    match mode {
        HigsMode::Integrator => p.omega_h * e,
        HigsMode::Gain => p.k_h * e_dot,
    }
}

/// `x_h²/(2k_h)`.
pub fn storage_single(p: &HigsParams, x_h: f64) -> f64 {
    x_h * x_h / (2.0 * p.k_h)
}

/// `½·X_hᵀ·K_h⁻¹·X_h`.
pub fn storage_multi(m: &MultiHigs) -> f64 {
    m.elements.iter().map(HigsElement::storage).sum()
}

/// `a·x₁² + (k₂ − 2a·k₁)/(2k₁k₂²)·x₂²`.
pub fn storage_cascade(c: &CascadeHigs) -> Result<f64> {
    cascade_storage_value(c.first.params.k_h, c.second.params.k_h, c.a, c.first.x_h, c.second.x_h)
}

pub fn cascade_storage_value(k1: f64, k2: f64, a: f64, x1: f64, x2: f64) -> Result<f64> {
    check_cascade_a(k1, k2, a)?;
    Ok(a * x1 * x1 + (k2 - 2.0 * a * k1) / (2.0 * k1 * k2 * k2) * x2 * x2)
}

/// Which storage function a dissipation check refers to.
#[derive(Debug, Clone, PartialEq)]
pub enum StorageKind {
    Single(HigsParams),
    Multi(Vec<HigsParams>),
    /// State is `(x₁, x₂)`; the supplied `(e, u)` samples are `(e₁, x₂)`.
    Cascade { k1: f64, k2: f64, a: f64 },
}

impl StorageKind {
    pub fn storage(&self, state: &[f64]) -> Result<f64> {
        match self {
            StorageKind::Single(p) => Ok(storage_single(p, state[0])),
            StorageKind::Multi(ps) => Ok(ps.iter().zip(state).map(|(p, &x)| storage_single(p, x)).sum()),
            StorageKind::Cascade { k1, k2, a } => cascade_storage_value(*k1, *k2, *a, state[0], state[1]),
        }
    }
}

/// Trapezoidal `∫ eᵀ du` over consecutive samples.
pub fn supply_integral(e_samples: &[Vec<f64>], u_samples: &[Vec<f64>]) -> f64 {
    e_samples
        .windows(2)
        .zip(u_samples.windows(2))
        .map(|(e, u)| {
            e[0].iter()
                .zip(&e[1])
                .zip(u[0].iter().zip(&u[1]))
                .map(|((e0, e1), (u0, u1))| 0.5 * (e0 + e1) * (u1 - u0))
                .sum::<f64>()
        })
        .sum()
}

/// `ΔV − ∫ eᵀ du` over one step; nonpositive (up to tolerance) for an NNI
/// element.
pub fn dissipation_residual(
    kind: &StorageKind,
    state_before: &[f64],
    state_after: &[f64],
    e_samples: &[Vec<f64>],
    u_samples: &[Vec<f64>],
) -> Result<f64> {
    if e_samples.len() != u_samples.len() {
        return Err(Error::DimensionMismatch("e and u sample counts differ".into()));
    }
    let dv = kind.storage(state_after)? - kind.storage(state_before)?;
    Ok(dv - supply_integral(e_samples, u_samples))
}
