//! JSON documents (plants, controllers) and CSV traces.
//!
//! Plant JSON is written in one canonical layout (one matrix row per line,
//! shortest round-trip float formatting) so that load followed by save
//! reproduces the file byte for byte.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize, Serializer};

use crate::analysis::DescribingPoint;
use crate::closedloop::{ControllerConfig, Trajectory};
use crate::error::{Error, Result};
use crate::higs::HigsParams;
use crate::numerics::Mat;
use crate::plant::{mat_to_rows, PlantModel};

/// Bundled nanopositioner data files.
pub mod data {
    pub const MEMS_PLANT_JSON: &str = include_str!("../data/mems_plant.json");
    pub const MEMS_CONTROLLER_JSON: &str = include_str!("../data/mems_controller.json");
    pub const MEMS_PULSE_SCENARIO_JSON: &str = include_str!("../data/mems_pulse.json");
    /// Hamiltonian eigenvalues as printed alongside the model (rounded).
    pub const MEMS_PRINTED_EIGENVALUES_JSON: &str = include_str!("../data/mems_hamiltonian_eigenvalues.json");
}

/// Serializes a matrix as row-major nested arrays.
pub fn serialize_mat<S: Serializer>(m: &Mat, s: S) -> std::result::Result<S::Ok, S::Error> {
    mat_to_rows(m).serialize(s)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
struct PlantDoc {
    A: Vec<Vec<f64>>,
    B: Vec<Vec<f64>>,
    C: Vec<Vec<f64>>,
}

pub fn plant_from_json(text: &str) -> Result<PlantModel> {
    let doc: PlantDoc = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    PlantModel::from_rows(&doc.A, &doc.B, &doc.C)
}

fn fmt_f64(v: f64) -> String {
    // serde_json never fails on finite floats; plants are validated finite.
    serde_json::to_string(&v).unwrap_or_else(|_| "null".into())
}

fn write_matrix(out: &mut String, name: &str, m: &Mat, last: bool) {
    let _ = writeln!(out, "  \"{name}\": [");
    for i in 0..m.nrows() {
        let row: Vec<String> = m.row(i).iter().map(|&v| fmt_f64(v)).collect();
        let sep = if i + 1 == m.nrows() { "" } else { "," };
        let _ = writeln!(out, "    [{}]{sep}", row.join(", "));
    }
    let _ = writeln!(out, "  ]{}", if last { "" } else { "," });
}

/// Canonical plant JSON.
pub fn plant_to_json(plant: &PlantModel) -> String {
    let mut out = String::from("{\n");
    write_matrix(&mut out, "A", plant.a(), false);
    write_matrix(&mut out, "B", plant.b(), false);
    write_matrix(&mut out, "C", plant.c(), true);
    out.push_str("}\n");
    out
}

/// Controller fragment: `{"type": ..., "k_h": [..], "omega_h": [..], "a": ..}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerDoc {
    #[serde(rename = "type")]
    pub kind: String,
    #[serde(default)]
    pub k_h: Vec<f64>,
    #[serde(default)]
    pub omega_h: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl ControllerDoc {
    pub fn to_config(&self) -> Result<ControllerConfig> {
        if self.k_h.len() != self.omega_h.len() {
            return Err(Error::InvalidConfig(format!(
                "k_h has {} entries but omega_h has {}",
                self.k_h.len(),
                self.omega_h.len()
            )));
        }
        let params = self
            .k_h
            .iter()
            .zip(&self.omega_h)
            .map(|(&k, &w)| HigsParams::new(k, w))
            .collect::<Result<Vec<_>>>()?;
        let expect = |n: usize| {
            if params.len() == n {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!(
                    "controller type {:?} needs {n} channel(s), got {}",
                    self.kind,
                    params.len()
                )))
            }
        };
        let cfg = match self.kind.as_str() {
            "none" => {
                expect(0)?;
                ControllerConfig::None
            }
            "single" => {
                expect(1)?;
                ControllerConfig::Single(params[0])
            }
            "multi" => {
                if params.is_empty() {
                    return Err(Error::InvalidConfig("multi controller needs at least one channel".into()));
                }
                ControllerConfig::Multi(params)
            }
            "cascade" => {
                expect(2)?;
                let a = self.a.unwrap_or(params[1].k_h / (4.0 * params[0].k_h));
                ControllerConfig::Cascade {
                    first: params[0],
                    second: params[1],
                    a,
                }
            }
            other => return Err(Error::InvalidConfig(format!("unknown controller type {other:?}"))),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_config(cfg: &ControllerConfig) -> Self {
        let params = cfg.elements();
        let (kind, a) = match cfg {
            ControllerConfig::None => ("none", None),
            ControllerConfig::Single(_) => ("single", None),
            ControllerConfig::Multi(_) => ("multi", None),
            ControllerConfig::Cascade { a, .. } => ("cascade", Some(*a)),
        };
        ControllerDoc {
            kind: kind.into(),
            k_h: params.iter().map(|p| p.k_h).collect(),
            omega_h: params.iter().map(|p| p.omega_h).collect(),
            a,
            notes: Vec::new(),
        }
    }
}

pub fn controller_from_json(text: &str) -> Result<ControllerConfig> {
    let doc: ControllerDoc = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    doc.to_config()
}

pub fn controller_to_json(doc: &ControllerDoc) -> String {
    let mut s = serde_json::to_string_pretty(doc).unwrap_or_default();
    s.push('\n');
    s
}

/// Floats in traces carry 17 significant digits.
fn sci(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn trajectory_csv_header(traj: &Trajectory) -> String {
    let mut cols = vec!["t".to_string()];
    let n = traj.x.first().map_or(0, Vec::len);
    let nh = traj.x_h.first().map_or(0, Vec::len);
    let m = traj.u.first().map_or(0, Vec::len);
    cols.extend((1..=n).map(|i| format!("x{i}")));
    cols.extend((1..=nh).map(|i| format!("xh{i}")));
    cols.extend((1..=nh).map(|i| format!("e{i}")));
    cols.extend((1..=m).map(|i| format!("u{i}")));
    cols.extend((1..=nh).map(|i| format!("mode{i}")));
    cols.push("V".into());
    if traj.w.is_some() {
        cols.push("W".into());
    }
    cols.join(",")
}

/// `t,x1..xn,xh1..xhN,e1..eN,u1..um,mode1..modeN,V[,W]`.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = trajectory_csv_header(traj);
    out.push('\n');
    for k in 0..traj.times.len() {
        let mut fields = vec![sci(traj.times[k])];
        fields.extend(traj.x[k].iter().map(|&v| sci(v)));
        fields.extend(traj.x_h[k].iter().map(|&v| sci(v)));
        fields.extend(traj.e[k].iter().map(|&v| sci(v)));
        fields.extend(traj.u[k].iter().map(|&v| sci(v)));
        fields.extend(traj.modes[k].iter().map(|m| m.code().to_string()));
        fields.push(sci(traj.v[k]));
        if let Some(w) = &traj.w {
            fields.push(sci(w[k]));
        }
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// `omega_rad_s,amplitude,re,im,mag_db,phase_deg`.
pub fn describing_csv(points: &[DescribingPoint]) -> String {
    let mut out = String::from("omega_rad_s,amplitude,re,im,mag_db,phase_deg\n");
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            sci(p.omega),
            sci(p.amplitude),
            sci(p.complex_gain.re),
            sci(p.complex_gain.im),
            sci(p.magnitude_db),
            sci(p.phase_deg)
        );
    }
    out
}
