//! Symmetric-matrix helpers: eigendecomposition-based Moore-Penrose
//! pseudo-inverse and singular quadratic forms.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative eigenvalue cutoff below which a symmetric matrix is treated as
/// rank-deficient.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSymmetric {
            max_asym: f64::INFINITY,
        });
    }
    let mut max_asym = 0.0f64;
    let mut scale = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..i {
            max_asym = max_asym.max((m[(i, j)] - m[(j, i)]).abs());
        }
        scale = scale.max(m[(i, i)].abs());
    }
    if max_asym > 1e-9 * scale.max(1.0) {
        return Err(Error::NotSymmetric { max_asym });
    }
    Ok(())
}

/// Eigendecomposition of a symmetric matrix with eigenvalues below
/// `rel_tol * max|eigenvalue|` zeroed out.
struct TruncatedEigen {
    vectors: DMatrix<f64>,
    values: DVector<f64>,
    rank: usize,
}

fn truncated_eigen(m: &DMatrix<f64>, rel_tol: f64) -> Result<TruncatedEigen> {
    check_symmetric(m)?;
    // Symmetrize exactly so round-off in the input cannot leak into the
    // eigensolver.
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let max_abs = eig.eigenvalues.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    let cutoff = rel_tol * max_abs;
    let mut values = eig.eigenvalues.clone();
    let mut rank = 0;
    for v in values.iter_mut() {
        if v.abs() <= cutoff {
            *v = 0.0;
        } else {
            rank += 1;
        }
    }
    Ok(TruncatedEigen {
        vectors: eig.eigenvectors,
        values,
        rank,
    })
}

/// Moore-Penrose pseudo-inverse of a symmetric matrix.
///
/// Eigenvalues with magnitude below `rel_tol` times the largest are treated
/// as zero. The result satisfies the four Penrose identities up to the
/// truncation tolerance.
pub fn pseudo_inverse(m: &DMatrix<f64>, rel_tol: f64) -> Result<DMatrix<f64>> {
    let eig = truncated_eigen(m, rel_tol)?;
    let n = m.nrows();
    let mut inv_vals = DVector::zeros(n);
    for i in 0..n {
        if eig.values[i] != 0.0 {
            inv_vals[i] = 1.0 / eig.values[i];
        }
    }
    let mut scaled = eig.vectors.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= inv_vals[j];
    }
    Ok(&scaled * eig.vectors.transpose())
}

/// Numerical rank of a symmetric matrix at the given relative tolerance.
pub fn symmetric_rank(m: &DMatrix<f64>, rel_tol: f64) -> Result<usize> {
    Ok(truncated_eigen(m, rel_tol)?.rank)
}

/// Quadratic form `d' S^- d` with a pseudo-inverted symmetric `S`.
///
/// Returns the value, the numerical rank used, and whether `S` had a
/// negative eigenvalue beyond the truncation tolerance (a covariance matrix
/// should not).
pub struct QuadForm {
    pub value: f64,
    pub rank: usize,
    pub full_rank: bool,
}

pub fn quad_form_pinv(s: &DMatrix<f64>, d: &DVector<f64>, rel_tol: f64) -> Result<QuadForm> {
    if s.nrows() != d.len() {
        return Err(Error::LengthMismatch {
            left: s.nrows(),
            right: d.len(),
            context: "matrix vs vector",
        });
    }
    let eig = truncated_eigen(s, rel_tol)?;
    let max_abs = eig.values.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    if eig.values.iter().any(|&v| v < 0.0 && -v > 1e-6 * max_abs.max(1.0)) {
        return Err(Error::NumericalFailure(format!(
            "covariance matrix has a negative eigenvalue ({:.3e})",
            eig.values.iter().cloned().fold(f64::INFINITY, f64::min)
        )));
    }
    let proj = eig.vectors.transpose() * d;
    let mut value = 0.0;
    for i in 0..eig.values.len() {
        if eig.values[i] > 0.0 {
            value += proj[i] * proj[i] / eig.values[i];
        }
    }
    Ok(QuadForm {
        value,
        rank: eig.rank,
        full_rank: eig.rank == s.nrows(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn penrose_ok(a: &DMatrix<f64>, p: &DMatrix<f64>, tol: f64) -> bool {
        let apa = a * p * a;
        let pap = p * a * p;
        let ap = a * p;
        let pa = p * a;
        (apa - a).abs().max() < tol
            && (pap - p).abs().max() < tol
            && (ap.clone() - ap.transpose()).abs().max() < tol
            && (pa.clone() - pa.transpose()).abs().max() < tol
    }

    #[test]
    fn identity_and_rank_one() {
        let i3 = DMatrix::<f64>::identity(3, 3);
        let p = pseudo_inverse(&i3, DEFAULT_RANK_TOL).unwrap();
        assert!((p - i3).abs().max() < 1e-14);

        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 0.0]));
        let p = pseudo_inverse(&d, DEFAULT_RANK_TOL).unwrap();
        assert!((p[(0, 0)] - 0.5).abs() < 1e-14);
        assert_eq!(p[(1, 1)], 0.0);
        assert_eq!(symmetric_rank(&d, DEFAULT_RANK_TOL).unwrap(), 1);
    }

    #[test]
    fn rejects_non_symmetric() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert!(pseudo_inverse(&m, DEFAULT_RANK_TOL).is_err());
    }

    #[test]
    fn quad_form_flags_negative_eigenvalue() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -0.5]));
        let d = DVector::from_vec(vec![1.0, 1.0]);
        assert!(quad_form_pinv(&m, &d, DEFAULT_RANK_TOL).is_err());
    }

    proptest! {
        // Random PSD rank-deficient matrices satisfy A A^- A = A.
        #[test]
        fn penrose_identities(seed in 0u64..500) {
            use rand::Rng;
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let n = 6;
            let rank = rng.gen_range(1..=4);
            let b = DMatrix::from_fn(n, rank, |_, _| rng.gen_range(-1.0..1.0));
            let a = &b * b.transpose();
            let p = pseudo_inverse(&a, DEFAULT_RANK_TOL).unwrap();
            prop_assert!(penrose_ok(&a, &p, 1e-8));
            prop_assert_eq!(symmetric_rank(&a, DEFAULT_RANK_TOL).unwrap(), rank);
        }
    }
}
