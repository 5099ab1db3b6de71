//! Dense real linear algebra kernel.
//!
//! Everything resolvent-related goes through the real spectrum of a
//! symmetric matrix; there is no complex eigensolver.

mod eigh;
pub mod facts;
mod frame;
mod matrix;
mod resolvent;

pub use eigh::{
    eigh, eigh_psd, principal_sqrt, Spectrum, MAX_QL_ITERATIONS, PSD_CLAMP, TOL_ORTH, TOL_RECON,
};
pub use frame::{haar_frame, ProjectorFrame};
pub use matrix::{axpy, dot, norm2, Matrix, SymMatrix};
pub use resolvent::{
    rank_one_terms, rank_one_trace_update, resolvent_trace, ComplexPoint, RankOneTerms,
};
pub(crate) use resolvent::spectral_form;

use crate::error::{Error, Result};

/// Largest singular value of a rectangular matrix.
///
/// Symmetric input uses `max |λ|` directly; otherwise the eigenvalues of the
/// smaller Gram matrix (`AAᵀ` or `AᵀA`) are used.
pub fn spectral_norm(m: &Matrix) -> Result<f64> {
    if !m.is_finite() {
        return Err(Error::InvalidInput("spectral norm of non-finite matrix".into()));
    }
    if m.rows() == 0 || m.cols() == 0 {
        return Ok(0.0);
    }
    if m.is_square() && *m == m.transpose() {
        let s = eigh(&SymMatrix::new(m.clone())?, false)?;
        return Ok(s.max_abs());
    }
    let gram = if m.rows() <= m.cols() {
        m.matmul_transpose(m)?
    } else {
        let t = m.transpose();
        t.matmul_transpose(&t)?
    };
    let s = eigh_psd(&SymMatrix::new(gram)?, false)?;
    Ok(s.max().max(0.0).sqrt())
}

/// `‖B + iC‖` through the real embedding `[[B, −C], [C, B]]`, whose singular
/// values are those of `B + iC`, each repeated twice.
pub fn complex_spectral_norm(re: &Matrix, im: &Matrix) -> Result<f64> {
    if re.rows() != im.rows() || re.cols() != im.cols() {
        return Err(Error::dims(
            format!("{}x{}", re.rows(), re.cols()),
            format!("{}x{}", im.rows(), im.cols()),
        ));
    }
    let (r, c) = (re.rows(), re.cols());
    let emb = Matrix::from_fn(2 * r, 2 * c, |i, j| match (i < r, j < c) {
        (true, true) => re[(i, j)],
        (true, false) => -im[(i, j - c)],
        (false, true) => im[(i - r, j)],
        (false, false) => re[(i - r, j - c)],
    });
    spectral_norm(&emb)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norm_of_simple_matrices() {
        assert_eq!(spectral_norm(&Matrix::identity(5)).unwrap(), 1.0);
        let d = Matrix::from_diag(&[-3.0, 2.0]);
        assert_eq!(spectral_norm(&d).unwrap(), 3.0);
        let bad = Matrix::from_rows(&[vec![f64::INFINITY, 0.0]]).unwrap();
        assert!(matches!(spectral_norm(&bad), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn rectangular_norm_both_orientations() {
        let a = Matrix::from_rows(&[vec![3.0, 0.0, 0.0], vec![0.0, 4.0, 0.0]]).unwrap();
        assert!((spectral_norm(&a).unwrap() - 4.0).abs() < 1e-14);
        assert!((spectral_norm(&a.transpose()).unwrap() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn complex_norm_of_scaled_identity() {
        // ‖(3 + 4i) I‖ = 5
        let mut b = Matrix::identity(3);
        b.scale(3.0);
        let mut c = Matrix::identity(3);
        c.scale(4.0);
        assert!((complex_spectral_norm(&b, &c).unwrap() - 5.0).abs() < 1e-14);
    }
}
