//! Search for a symmetric `Y ≻ 0` with `AY + YAᵀ ⪯ 0` and `B + AYCᵀ = 0`.
//!
//! The equality is linear in `Y`, so it is solved once (least squares over
//! the symmetric unknowns) for a particular solution plus a basis of its
//! affine solution family. The two semidefinite conditions are then folded
//! into the scalar merit
//!
//! ```text
//! φ(Y) = max( λ_max(AY + YAᵀ), ‖A‖·(δ − λ_min(Y)) )
//! ```
//!
//! which is minimized over the family by subgradient steps with diminishing
//! step length. This is a heuristic: running out of iterations means
//! "unknown", never "not NI".

use nalgebra::DVector;
use serde::Serialize;

use super::PlantModel;
use crate::error::{Error, Result};
use crate::numerics::{self, Mat, Tolerances};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NiCertificate {
    #[serde(serialize_with = "crate::io::serialize_mat")]
    pub y: Mat,
    /// `‖B + AYCᵀ‖`.
    pub residual_eq: f64,
    /// `λ_max(AY + YAᵀ)`.
    pub residual_lyap: f64,
}

impl NiCertificate {
    /// Checks the residual bounds the certificate is required to meet.
    pub fn satisfies_bounds(&self, plant: &PlantModel) -> bool {
        let (a, b, c) = (plant.a(), plant.b(), plant.c());
        let s = a * &self.y + &self.y * a.transpose();
        let eq_bound = 1e-6 * (b.norm() + a.norm() * self.y.norm() * c.norm());
        let lyap_bound = 1e-8 * s.norm() + 1e-10;
        numerics::asymmetry(&self.y) == 0.0
            && self.residual_eq <= eq_bound
            && self.residual_lyap <= lyap_bound
            && numerics::sym_eigenvalues(&self.y)[0] > 0.0
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CertificateOptions {
    pub max_iter: usize,
    pub tol: Tolerances,
}

impl Default for CertificateOptions {
    fn default() -> Self {
        CertificateOptions {
            max_iter: 20_000,
            tol: Tolerances::default(),
        }
    }
}

pub fn find_ni_certificate(plant: &PlantModel) -> Result<NiCertificate> {
    find_ni_certificate_with(plant, &CertificateOptions::default())
}

/// Symmetric basis matrices `E_ii` and `E_ij + E_ji` (i < j).
fn symmetric_basis(n: usize) -> Vec<Mat> {
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            let mut e = Mat::zeros(n, n);
            e[(i, j)] = 1.0;
            e[(j, i)] = 1.0;
            out.push(e);
        }
    }
    out
}

fn combine(basis: &[Mat], coeffs: &DVector<f64>, n: usize) -> Mat {
    basis
        .iter()
        .zip(coeffs.iter())
        .fold(Mat::zeros(n, n), |acc, (e, &c)| acc + e * c)
}

pub fn find_ni_certificate_with(plant: &PlantModel, opts: &CertificateOptions) -> Result<NiCertificate> {
    let (a, b, c) = (plant.a(), plant.b(), plant.c());
    let n = plant.states();
    let m = plant.channels();
    let basis = symmetric_basis(n);

    // vec(A·E·Cᵀ) for every basis element, column-major.
    let mut lin = Mat::zeros(n * m, basis.len());
    for (k, e) in basis.iter().enumerate() {
        let img = a * e * c.transpose();
        for (r, v) in img.iter().enumerate() {
            lin[(r, k)] = *v;
        }
    }
    let rhs = DVector::from_iterator(n * m, b.iter().map(|v| -v));
    let (particular, null) = numerics::least_squares_with_null_space(&lin, &rhs, 1e-10);

    let eq_res = (&lin * &particular - &rhs).norm();
    let rel = eq_res / b.norm().max(f64::MIN_POSITIVE);
    if rel > opts.tol.certificate_eq {
        return Err(Error::EqualityInfeasible { relative_residual: rel });
    }

    let y_particular = combine(&basis, &particular, n);
    let directions: Vec<Mat> = null.iter().map(|v| combine(&basis, v, n)).collect();
    let delta = 1e-8 * y_particular.norm();
    let a_norm = a.norm();
    let at = a.transpose();

    let mut t = DVector::<f64>::zeros(directions.len());
    let mut best_phi = f64::INFINITY;
    let step0 = 1.0 / a_norm;

    for iter in 0..opts.max_iter.max(1) {
        let y = directions
            .iter()
            .zip(t.iter())
            .fold(y_particular.clone(), |acc, (z, &ti)| acc + z * ti);
        let s = a * &y + &y * &at;
        let (lmax, v) = numerics::sym_max_eigenpair(&s);
        let (lmin, w) = numerics::sym_min_eigenpair(&y);

        let lyap_bound = 1e-8 * s.norm() + 1e-10;
        if lmin >= delta && lmin > 0.0 && lmax <= lyap_bound {
            let y = numerics::symmetrize(&y);
            let residual_eq = (b + a * &y * c.transpose()).norm();
            let residual_lyap = numerics::sym_eigenvalues(&(a * &y + &y * &at))
                .last()
                .copied()
                .unwrap_or(0.0);
            return Ok(NiCertificate {
                y,
                residual_eq,
                residual_lyap,
            });
        }

        let pos_term = a_norm * (delta - lmin);
        let phi = lmax.max(pos_term);
        best_phi = best_phi.min(phi);
        if directions.is_empty() {
            break;
        }

        let grad = DVector::from_iterator(
            directions.len(),
            directions.iter().map(|z| {
                if lmax >= pos_term {
                    2.0 * v.dot(&(a * z * &v))
                } else {
                    -a_norm * w.dot(&(z * &w))
                }
            }),
        );
        let step = step0 / ((iter + 1) as f64).sqrt();
        t -= grad * step;
    }

    Err(Error::SearchInconclusive {
        best_phi,
        iterations: opts.max_iter,
    })
}
