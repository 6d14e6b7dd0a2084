//! Dense linear-algebra substrate.
//!
//! Everything here works on small matrices (a few dozen rows at most) and is
//! built on top of `nalgebra`. Matrices are passed by reference and every
//! operation returns a fresh value.

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Real dense matrix.
pub type Mat = DMatrix<f64>;
/// Complex dense matrix.
pub type CMat = DMatrix<Complex64>;

/// Default numerical tolerances used across the crate.
///
/// Every predicate that needs a tolerance takes it explicitly; these are the
/// values the higher-level operations fall back to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative pivot threshold for LU solves.
    pub pivot: f64,
    /// Relative symmetry threshold, `‖M − Mᵀ‖ ≤ symmetry·‖M‖`.
    pub symmetry: f64,
    /// Absolute pivot threshold for positive-definiteness checks.
    pub definite: f64,
    /// NI sweep tolerance, relative to `‖G(jω)‖`.
    pub ni_sweep: f64,
    /// Imaginary-axis proximity for Hamiltonian eigenvalues, relative to `‖N₀‖`.
    pub axis: f64,
    /// Clustering width for imaginary-axis eigenvalues, relative to `‖N₀‖`.
    pub cluster: f64,
    /// Sector tolerance, `tol = sector·(1 + |k·e|)`.
    pub sector: f64,
    /// Dissipation tolerance, `tol = dissipation·(1 + max|V|)`.
    pub dissipation: f64,
    /// Relative equality residual allowed for the NI-lemma particular solution.
    pub certificate_eq: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            pivot: 1e-12,
            symmetry: 1e-8,
            definite: 1e-12,
            ni_sweep: 1e-8,
            axis: 1e-7,
            cluster: 1e-6,
            sector: 1e-9,
            dissipation: 1e-6,
            certificate_eq: 1e-6,
        }
    }
}

/// Frobenius norm.
pub fn norm(m: &Mat) -> f64 {
    m.norm()
}

pub fn all_finite(m: &Mat) -> bool {
    m.iter().all(|v| v.is_finite())
}

/// `(M + Mᵀ)/2`.
pub fn symmetrize(m: &Mat) -> Mat {
    (m + m.transpose()) * 0.5
}

/// Relative asymmetry `‖M − Mᵀ‖/‖M‖` (0 for the zero matrix).
pub fn asymmetry(m: &Mat) -> f64 {
    let n = norm(m);
    if n == 0.0 {
        return 0.0;
    }
    norm(&(m - m.transpose())) / n
}

fn check_square(m: &Mat) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// Solves `M·X = rhs` by partial-pivot LU with one step of iterative
/// refinement.
pub fn solve_linear(m: &Mat, rhs: &Mat) -> Result<Mat> {
    solve_linear_tol(m, rhs, Tolerances::default().pivot)
}

pub fn solve_linear_tol(m: &Mat, rhs: &Mat, pivot_tol: f64) -> Result<Mat> {
    check_square(m)?;
    if rhs.nrows() != m.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "rhs has {} rows, matrix has {}",
            rhs.nrows(),
            m.nrows()
        )));
    }
    if m.nrows() == 0 {
        return Ok(rhs.clone());
    }
    let scale = norm(m);
    let lu = m.clone().lu();
    let min_pivot = lu
        .u()
        .diagonal()
        .iter()
        .fold(f64::INFINITY, |acc, v| acc.min(v.abs()));
    if !(min_pivot > pivot_tol * scale) {
        return Err(Error::SingularMatrix {
            pivot: min_pivot,
            scale,
        });
    }
    let mut x = lu.solve(rhs).ok_or(Error::SingularMatrix {
        pivot: min_pivot,
        scale,
    })?;
    let residual = rhs - m * &x;
    if let Some(dx) = lu.solve(&residual) {
        x += dx;
    }
    Ok(x)
}

/// Complex counterpart of [`solve_linear`] (no refinement).
pub fn solve_complex(m: &CMat, rhs: &CMat, pivot_tol: f64) -> Result<CMat> {
    if m.nrows() != m.ncols() || rhs.nrows() != m.nrows() {
        return Err(Error::DimensionMismatch("complex solve".into()));
    }
    if m.nrows() == 0 {
        return Ok(rhs.clone());
    }
    let scale = m.norm();
    let lu = m.clone().lu();
    let min_pivot = lu
        .u()
        .diagonal()
        .iter()
        .fold(f64::INFINITY, |acc, v| acc.min(v.norm()));
    if !(min_pivot > pivot_tol * scale) {
        return Err(Error::SingularMatrix {
            pivot: min_pivot,
            scale,
        });
    }
    lu.solve(rhs).ok_or(Error::SingularMatrix {
        pivot: min_pivot,
        scale,
    })
}

/// Diagonal similarity scaling so that row and column norms are comparable
/// (the scaling half of LAPACK's `gebal`). Eigenvalues are unchanged.
pub fn balance(m: &Mat) -> Mat {
    let n = m.nrows();
    let mut b = m.clone();
    const RADIX: f64 = 2.0;
    let mut converged = false;
    let mut sweeps = 0;
    while !converged && sweeps < 100 {
        converged = true;
        sweeps += 1;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += b[(j, i)].abs();
                    r += b[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut cc = c;
            let mut rr = r;
            while cc < rr / RADIX {
                cc *= RADIX;
                rr /= RADIX;
                f *= RADIX;
            }
            while cc >= rr * RADIX {
                cc /= RADIX;
                rr *= RADIX;
                f /= RADIX;
            }
            if (cc + rr) < 0.95 * s {
                converged = false;
                for j in 0..n {
                    b[(i, j)] /= f;
                    b[(j, i)] *= f;
                }
            }
        }
    }
    b
}

/// Eigenvalues of a general real square matrix (balanced real Schur form).
///
/// Complex pairs are returned conjugate-adjacent, positive imaginary part
/// first.
pub fn eig_general(m: &Mat) -> Result<Vec<Complex64>> {
    check_square(m)?;
    if m.nrows() > 64 {
        return Err(Error::DimensionMismatch(format!(
            "eig_general supports dimension <= 64, got {}",
            m.nrows()
        )));
    }
    if !all_finite(m) {
        return Err(Error::NonFinite("eigenvalue input".into()));
    }
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let balanced = balance(m);
    let schur = Schur::try_new(balanced, f64::EPSILON, 10_000)
        .ok_or(Error::ConvergenceFailure("real Schur iteration".into()))?;
    let mut vals: Vec<Complex64> = schur.complex_eigenvalues().iter().copied().collect();
    // nalgebra emits each 2x2 block's pair in either order; normalize.
    let mut i = 0;
    while i + 1 < vals.len() {
        if vals[i].im != 0.0 && (vals[i].conj() - vals[i + 1]).norm() <= 1e-12 * vals[i].norm() {
            if vals[i].im < 0.0 {
                vals.swap(i, i + 1);
            }
            i += 2;
        } else {
            i += 1;
        }
    }
    Ok(vals)
}

fn check_symmetric(m: &Mat, tol: f64) -> Result<Mat> {
    check_square(m)?;
    let asym = asymmetry(m);
    if asym > tol {
        return Err(Error::AsymmetricInput { asymmetry: asym });
    }
    Ok(symmetrize(m))
}

/// Eigenvalues of a symmetric matrix in ascending order (input symmetrized).
pub fn sym_eigenvalues(m: &Mat) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut v: Vec<f64> = SymmetricEigen::new(symmetrize(m)).eigenvalues.iter().copied().collect();
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

/// Largest eigenvalue and its unit eigenvector.
pub fn sym_max_eigenpair(m: &Mat) -> (f64, DVector<f64>) {
    let eig = SymmetricEigen::new(symmetrize(m));
    let (idx, val) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    (val, eig.eigenvectors.column(idx).into_owned())
}

/// Smallest eigenvalue and its unit eigenvector.
pub fn sym_min_eigenpair(m: &Mat) -> (f64, DVector<f64>) {
    let (v, vec) = sym_max_eigenpair(&(-m));
    (-v, vec)
}

/// True iff an unpivoted Cholesky factorization succeeds with every pivot
/// strictly above `tol`.
pub fn is_pos_def(m: &Mat, tol: f64) -> Result<bool> {
    let s = check_symmetric(m, Tolerances::default().symmetry)?;
    let n = s.nrows();
    let mut l = Mat::zeros(n, n);
    for j in 0..n {
        let mut d = s[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > tol) {
            return Ok(false);
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in (j + 1)..n {
            let mut v = s[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = v / djj;
        }
    }
    Ok(true)
}

/// True iff every eigenvalue is at most `+tol`.
pub fn is_neg_semidef(m: &Mat, tol: f64) -> Result<bool> {
    let s = check_symmetric(m, Tolerances::default().symmetry)?;
    Ok(sym_eigenvalues(&s).iter().all(|&v| v <= tol))
}

/// Right singular vectors spanning the numerical null space of `m`, plus the
/// minimum-norm least-squares solution of `m·x = b`.
pub(crate) fn least_squares_with_null_space(
    m: &Mat,
    b: &DVector<f64>,
    rel_tol: f64,
) -> (DVector<f64>, Vec<DVector<f64>>) {
    let cols = m.ncols();
    // Pad to at least square so the SVD exposes the full right basis.
    let rows = m.nrows().max(cols);
    let mut padded = Mat::zeros(rows, cols);
    padded.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
    let mut rhs = DVector::zeros(rows);
    rhs.rows_mut(0, b.len()).copy_from(b);

    let svd = padded.svd(true, true);
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v_t requested");
    let smax = svd.singular_values.iter().fold(0.0_f64, |a, &s| a.max(s));
    let cutoff = rel_tol * smax.max(f64::MIN_POSITIVE);

    let mut x = DVector::zeros(cols);
    let mut null = Vec::new();
    for (i, &s) in svd.singular_values.iter().enumerate() {
        let v = vt.row(i).transpose();
        if s > cutoff {
            let coeff = u.column(i).dot(&rhs) / s;
            x += v * coeff;
        } else {
            null.push(v);
        }
    }
    (x, null)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::dmatrix;

    #[test]
    fn solve_identity_and_diagonal() {
        let b = dmatrix![1.0; -2.0; 3.0];
        let x = solve_linear(&Mat::identity(3, 3), &b).unwrap();
        assert_eq!(x, b);

        let m = dmatrix![2.0, 0.0; 0.0, 4.0];
        let x = solve_linear(&m, &dmatrix![2.0; 4.0]).unwrap();
        assert_relative_eq!(x, dmatrix![1.0; 1.0], epsilon = 1e-15);
    }

    #[test]
    fn solve_rejects_singular() {
        let m = dmatrix![1.0, 2.0; 2.0, 4.0];
        assert!(matches!(
            solve_linear(&m, &dmatrix![1.0; 1.0]),
            Err(Error::SingularMatrix { .. })
        ));
    }

    #[test]
    fn eig_rotation_and_diagonal() {
        let ev = eig_general(&dmatrix![0.0, 1.0; -1.0, 0.0]).unwrap();
        assert_relative_eq!(ev[0].re, 0.0, epsilon = 1e-14);
        assert_relative_eq!(ev[0].im, 1.0, epsilon = 1e-14);
        assert_relative_eq!(ev[1].im, -1.0, epsilon = 1e-14);

        let mut ev: Vec<f64> = eig_general(&dmatrix![2.0, 0.0; 0.0, -3.0])
            .unwrap()
            .iter()
            .map(|c| c.re)
            .collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        assert_eq!(ev, vec![-3.0, 2.0]);
    }

    #[test]
    fn definiteness_boundaries() {
        let tol = 1e-12;
        assert!(is_pos_def(&Mat::identity(2, 2), tol).unwrap());
        assert!(!is_pos_def(&dmatrix![1.0, 0.0; 0.0, -1e-3], tol).unwrap());
        assert!(!is_pos_def(&dmatrix![1.0, 0.0; 0.0, 0.0], tol).unwrap());

        assert!(is_neg_semidef(&Mat::zeros(2, 2), tol).unwrap());
        assert!(is_neg_semidef(&dmatrix![0.0, 0.0; 0.0, -2.0], tol).unwrap());
        assert!(!is_neg_semidef(&dmatrix![0.0, 1.0; 1.0, 0.0], tol).unwrap());
    }

    #[test]
    fn asymmetric_input_rejected() {
        let m = dmatrix![1.0, 1.0; 0.0, 1.0];
        assert!(matches!(is_pos_def(&m, 1e-12), Err(Error::AsymmetricInput { .. })));
        assert!(matches!(is_neg_semidef(&m, 1e-12), Err(Error::AsymmetricInput { .. })));
    }

    #[test]
    fn least_squares_underdetermined() {
        // x + y = 2: min-norm solution (1, 1), null space along (1, -1).
        let m = dmatrix![1.0, 1.0];
        let (x, null) = least_squares_with_null_space(&m, &DVector::from_vec(vec![2.0]), 1e-12);
        assert_relative_eq!(x[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(x[1], 1.0, epsilon = 1e-12);
        assert_eq!(null.len(), 1);
        assert_relative_eq!(null[0][0] + null[0][1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn balancing_preserves_spectrum() {
        let m = dmatrix![1.0, 1e6; 1e-6, 2.0];
        let b = balance(&m);
        assert_relative_eq!(b.trace(), m.trace(), epsilon = 1e-12);
        assert!(b.norm() < m.norm());
    }
}
