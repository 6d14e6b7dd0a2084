//! Strictly proper linear plants `ẋ = Ax + Bu, y = Cx`, their DC and
//! frequency responses, and three negative-imaginary (NI) tests.

mod certificate;
mod ni;

pub use certificate::{find_ni_certificate, find_ni_certificate_with, CertificateOptions, NiCertificate};
pub use ni::{
    default_grid, hamiltonian_matrix, log_grid, ni_certificate_test, ni_frequency_test,
    ni_frequency_test_tol, ni_hamiltonian_test, ni_hamiltonian_test_tol, AxisCluster, NiDetail,
    NiMethod, NiVerdict,
};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{self, CMat, Mat, Tolerances};

/// Square, strictly proper state-space model. `A` is required to be
/// nonsingular.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantModel {
    a: Mat,
    b: Mat,
    c: Mat,
}

impl PlantModel {
    pub fn new(a: Mat, b: Mat, c: Mat) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || a.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "A must be square and nonempty, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.nrows() != n {
            return Err(Error::DimensionMismatch(format!("B has {} rows, A has {}", b.nrows(), n)));
        }
        if c.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "C has {} columns, A has {}",
                c.ncols(),
                n
            )));
        }
        if c.nrows() != b.ncols() || b.ncols() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "plant must be square: {} inputs, {} outputs",
                b.ncols(),
                c.nrows()
            )));
        }
        if !(numerics::all_finite(&a) && numerics::all_finite(&b) && numerics::all_finite(&c)) {
            return Err(Error::NonFinite("plant matrices".into()));
        }
        // Nonsingularity of A, checked through the same LU the solves use.
        numerics::solve_linear(&a, &Mat::identity(n, n))?;
        Ok(PlantModel { a, b, c })
    }

    /// Builds a plant from row-major nested rows.
    pub fn from_rows(a: &[Vec<f64>], b: &[Vec<f64>], c: &[Vec<f64>]) -> Result<Self> {
        Self::new(mat_from_rows(a)?, mat_from_rows(b)?, mat_from_rows(c)?)
    }

    pub fn a(&self) -> &Mat {
        &self.a
    }

    pub fn b(&self) -> &Mat {
        &self.b
    }

    pub fn c(&self) -> &Mat {
        &self.c
    }

    /// Number of states.
    pub fn states(&self) -> usize {
        self.a.nrows()
    }

    /// Number of inputs (equal to the number of outputs).
    pub fn channels(&self) -> usize {
        self.b.ncols()
    }

    pub fn is_siso(&self) -> bool {
        self.channels() == 1
    }

    /// `G(0) = −C·A⁻¹·B`.
    pub fn dc_gain(&self) -> Result<Mat> {
        let x = numerics::solve_linear(&self.a, &self.b)?;
        Ok(-(&self.c * x))
    }

    /// `G(jω) = C·(jωI − A)⁻¹·B`.
    pub fn freq_response(&self, omega: f64) -> Result<CMat> {
        if !(omega >= 0.0) || !omega.is_finite() {
            return Err(Error::InvalidGrid(format!("frequency must be finite and >= 0, got {omega}")));
        }
        if omega == 0.0 {
            return Ok(self.dc_gain()?.map(|v| Complex64::new(v, 0.0)));
        }
        let n = self.states();
        let m = DMatrix::from_fn(n, n, |i, j| {
            let diag = if i == j { Complex64::new(0.0, omega) } else { Complex64::new(0.0, 0.0) };
            diag - self.a[(i, j)]
        });
        let b = self.b.map(|v| Complex64::new(v, 0.0));
        let x = numerics::solve_complex(&m, &b, Tolerances::default().pivot)
            .map_err(|_| Error::SingularAtFrequency { omega })?;
        Ok(self.c.map(|v| Complex64::new(v, 0.0)) * x)
    }

    /// Eigenvalues of `A`.
    pub fn poles(&self) -> Result<Vec<Complex64>> {
        numerics::eig_general(&self.a)
    }
}

pub fn mat_from_rows(rows: &[Vec<f64>]) -> Result<Mat> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|row| row.len() != c) {
        return Err(Error::DimensionMismatch("ragged matrix rows".into()));
    }
    Ok(Mat::from_fn(r, c, |i, j| rows[i][j]))
}

pub fn mat_to_rows(m: &Mat) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::dmatrix;

    #[test]
    fn dc_gain_examples() {
        assert_relative_eq!(second_order(2.0, 0.3).dc_gain().unwrap()[(0, 0)], 0.25, epsilon = 1e-15);
        assert_relative_eq!(first_order(-1.0, 1.0, 1.0).dc_gain().unwrap()[(0, 0)], 1.0);
    }

    #[test]
    fn freq_response_examples() {
        let g = first_order(-1.0, 1.0, 1.0).freq_response(1.0).unwrap()[(0, 0)];
        assert_relative_eq!(g.re, 0.5, epsilon = 1e-14);
        assert_relative_eq!(g.im, -0.5, epsilon = 1e-14);

        let g = second_order(1.0, 0.5).freq_response(1.0).unwrap()[(0, 0)];
        assert_relative_eq!(g.re, 0.0, epsilon = 1e-14);
        assert_relative_eq!(g.im, -1.0, epsilon = 1e-14);
    }

    #[test]
    fn freq_response_at_zero_is_dc_gain() {
        let p = second_order(3.0, 0.1);
        let g = p.freq_response(0.0).unwrap();
        let g0 = p.dc_gain().unwrap();
        assert!((g[(0, 0)].re - g0[(0, 0)]).abs() <= 1e-10);
        // and just off zero it is continuous
        let g = p.freq_response(1e-9).unwrap();
        assert!((g[(0, 0)].re - g0[(0, 0)]).abs() <= 1e-10);
    }

    #[test]
    fn undamped_pole_is_singular() {
        let p = second_order(2.0, 0.0);
        assert!(matches!(p.freq_response(2.0), Err(Error::SingularAtFrequency { .. })));
    }

    #[test]
    fn construction_checks() {
        assert!(matches!(
            PlantModel::new(dmatrix![0.0, 1.0; 0.0, 0.0], dmatrix![0.0; 1.0], dmatrix![1.0, 0.0]),
            Err(Error::SingularMatrix { .. })
        ));
        assert!(matches!(
            PlantModel::new(dmatrix![-1.0], dmatrix![1.0, 1.0], dmatrix![1.0]),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(matches!(
            PlantModel::new(dmatrix![-1.0], dmatrix![f64::NAN], dmatrix![1.0]),
            Err(Error::NonFinite(_))
        ));
    }
}
