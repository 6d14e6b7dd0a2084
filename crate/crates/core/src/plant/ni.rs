use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use super::certificate::{find_ni_certificate, NiCertificate};
use super::PlantModel;
use crate::error::{Error, Result};
use crate::numerics::{self, Mat, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NiMethod {
    Sweep,
    Hamiltonian,
    Certificate,
}

/// A group of imaginary-axis eigenvalues sharing (numerically) the same
/// imaginary part.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxisCluster {
    pub imag: f64,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NiDetail {
    Sweep {
        points: usize,
        worst_omega: f64,
        worst_min_eigenvalue: f64,
        worst_tolerance: f64,
    },
    Hamiltonian {
        /// `[re, im]` pairs.
        eigenvalues: Vec<[f64; 2]>,
        clusters: Vec<AxisCluster>,
        norm: f64,
    },
    Certificate {
        certificate: Option<NiCertificate>,
        reason: Option<String>,
    },
}

/// Outcome of an NI test. `is_ni` is `None` when the test is inconclusive.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NiVerdict {
    pub method: NiMethod,
    pub is_ni: Option<bool>,
    pub detail: NiDetail,
}

/// `count` logarithmically spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::EmptyGrid);
    }
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
        return Err(Error::InvalidGrid(format!("need 0 < lo <= hi, got [{lo}, {hi}]")));
    }
    if count == 1 {
        return Ok(vec![lo]);
    }
    let (l0, l1) = (lo.log10(), hi.log10());
    Ok((0..count)
        .map(|i| 10f64.powf(l0 + (l1 - l0) * i as f64 / (count - 1) as f64))
        .collect())
}

/// 400 log-spaced points over `[0.01·min|λ(A)|, 100·max|λ(A)|]`.
pub fn default_grid(plant: &PlantModel) -> Result<Vec<f64>> {
    let poles = plant.poles()?;
    let mags = poles.iter().map(|p| p.norm());
    let lo = mags.clone().fold(f64::INFINITY, f64::min);
    let hi = mags.fold(0.0, f64::max);
    log_grid(0.01 * lo, 100.0 * hi, 400)
}

/// Smallest eigenvalue of the Hermitian matrix `j(G − G*)`.
fn min_eig_ni_matrix(g: &DMatrix<Complex64>) -> f64 {
    let m = g.nrows();
    let j = Complex64::new(0.0, 1.0);
    let h = (g - g.adjoint()) * j;
    // Real symmetric embedding [[Re, −Im], [Im, Re]]; same spectrum, doubled.
    let emb = Mat::from_fn(2 * m, 2 * m, |r, c| {
        let (i, k) = (r % m, c % m);
        match (r < m, c < m) {
            (true, true) | (false, false) => h[(i, k)].re,
            (true, false) => -h[(i, k)].im,
            (false, true) => h[(i, k)].im,
        }
    });
    numerics::sym_eigenvalues(&emb)[0]
}

pub fn ni_frequency_test(plant: &PlantModel, grid: &[f64]) -> Result<NiVerdict> {
    ni_frequency_test_tol(plant, grid, Tolerances::default().ni_sweep)
}

/// Checks `j(G(jω) − G(jω)*) ⪰ −tol·‖G(jω)‖` at every grid frequency.
pub fn ni_frequency_test_tol(plant: &PlantModel, grid: &[f64], rel_tol: f64) -> Result<NiVerdict> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mut is_ni = true;
    let mut worst = (f64::NAN, f64::INFINITY, 0.0, f64::INFINITY);
    for &omega in grid {
        if !(omega > 0.0) {
            return Err(Error::InvalidGrid(format!("grid frequencies must be positive, got {omega}")));
        }
        let g = plant.freq_response(omega)?;
        let scale = g.norm();
        let tol = rel_tol * scale;
        let lam = min_eig_ni_matrix(&g);
        if lam < -tol {
            is_ni = false;
        }
        let score = if scale > 0.0 { lam / scale } else { 0.0 };
        if score < worst.3 {
            worst = (omega, lam, tol, score);
        }
    }
    Ok(NiVerdict {
        method: NiMethod::Sweep,
        is_ni: Some(is_ni),
        detail: NiDetail::Sweep {
            points: grid.len(),
            worst_omega: worst.0,
            worst_min_eigenvalue: worst.1,
            worst_tolerance: worst.2,
        },
    })
}

/// The 2n×2n Hamiltonian matrix with `Q₀ = −(CB + BᵀCᵀ)`. Only requires
/// `Q₀` to be invertible; the NI test additionally needs `CB + BᵀCᵀ ≻ 0`.
pub fn hamiltonian_matrix(plant: &PlantModel) -> Result<Mat> {
    let (a, b, c) = (plant.a(), plant.b(), plant.c());
    let n = plant.states();
    let cb = c * b;
    let q0 = -(&cb + cb.transpose());
    let m = q0.nrows();
    let q0_inv = numerics::solve_linear(&q0, &Mat::identity(m, m))?;
    let ca = c * a;
    let at = a.transpose();

    let top_left = a + b * &q0_inv * &ca;
    let top_right = b * &q0_inv * b.transpose();
    let bottom_left = -(&at * c.transpose() * &q0_inv * &ca);
    let bottom_right = -&at - &at * c.transpose() * &q0_inv * b.transpose();

    let mut n0 = Mat::zeros(2 * n, 2 * n);
    n0.view_mut((0, 0), (n, n)).copy_from(&top_left);
    n0.view_mut((0, n), (n, n)).copy_from(&top_right);
    n0.view_mut((n, 0), (n, n)).copy_from(&bottom_left);
    n0.view_mut((n, n), (n, n)).copy_from(&bottom_right);
    Ok(n0)
}

pub fn ni_hamiltonian_test(plant: &PlantModel) -> Result<NiVerdict> {
    ni_hamiltonian_test_tol(plant, &Tolerances::default())
}

/// NI iff no imaginary-axis eigenvalue of `N₀` has odd multiplicity.
///
/// Eigenvalues with `|Re λ| ≤ axis·‖N₀‖` count as imaginary-axis and are
/// grouped when their imaginary parts differ by at most `cluster·‖N₀‖`.
/// `‖N₀‖` is the Frobenius norm of the balanced matrix, the scale on which
/// the eigenvalue errors live.
pub fn ni_hamiltonian_test_tol(plant: &PlantModel, tol: &Tolerances) -> Result<NiVerdict> {
    let cb = plant.c() * plant.b();
    let s = &cb + cb.transpose();
    let s_scale = numerics::norm(&s).max(f64::MIN_POSITIVE);
    if !numerics::is_pos_def(&s, tol.definite * s_scale)? {
        return Err(Error::PreconditionQ0 {
            min_eigenvalue: numerics::sym_eigenvalues(&s)[0],
        });
    }
    let n0 = hamiltonian_matrix(plant)?;
    let eig = numerics::eig_general(&n0)?;
    let scale = numerics::norm(&numerics::balance(&n0));

    let mut axis: Vec<f64> = eig
        .iter()
        .filter(|l| l.re.abs() <= tol.axis * scale)
        .map(|l| l.im)
        .collect();
    axis.sort_by(|a, b| a.total_cmp(b));
    let mut clusters: Vec<(Vec<f64>, usize)> = Vec::new();
    for im in axis {
        match clusters.last_mut() {
            Some((members, count)) if (im - members[members.len() - 1]).abs() <= tol.cluster * scale => {
                members.push(im);
                *count += 1;
            }
            _ => clusters.push((vec![im], 1)),
        }
    }
    let clusters: Vec<AxisCluster> = clusters
        .into_iter()
        .map(|(members, multiplicity)| AxisCluster {
            imag: members.iter().sum::<f64>() / multiplicity as f64,
            multiplicity,
        })
        .collect();
    let is_ni = clusters.iter().all(|c| c.multiplicity % 2 == 0);
    Ok(NiVerdict {
        method: NiMethod::Hamiltonian,
        is_ni: Some(is_ni),
        detail: NiDetail::Hamiltonian {
            eigenvalues: eig.iter().map(|l| [l.re, l.im]).collect(),
            clusters,
            norm: scale,
        },
    })
}

/// Runs the certificate search and maps its outcome onto a three-valued
/// verdict: found → NI, equality infeasible → not NI, search exhausted →
/// unknown.
pub fn ni_certificate_test(plant: &PlantModel) -> Result<NiVerdict> {
    let (is_ni, certificate, reason) = match find_ni_certificate(plant) {
        Ok(cert) => (Some(true), Some(cert), None),
        Err(e @ Error::EqualityInfeasible { .. }) => (Some(false), None, Some(e.to_string())),
        Err(e @ Error::SearchInconclusive { .. }) => (None, None, Some(e.to_string())),
        Err(e) => return Err(e),
    };
    Ok(NiVerdict {
        method: NiMethod::Certificate,
        is_ni,
        detail: NiDetail::Certificate { certificate, reason },
    })
}
