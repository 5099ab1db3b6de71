use rand::Rng;
use rand_distr::StandardNormal;

use super::eigh::TOL_ORTH;
use super::matrix::{axpy, dot, Matrix, SymMatrix};
use crate::error::{Error, Result};

/// A `q×p` matrix `C` with orthonormal rows, `C Cᵀ = I_q`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectorFrame(Matrix);

impl ProjectorFrame {
    /// Wraps `c` after checking `C Cᵀ = I` within [`TOL_ORTH`].
    pub fn new(c: Matrix) -> Result<Self> {
        if c.rows() == 0 || c.rows() > c.cols() {
            return Err(Error::Domain(format!(
                "frame needs 1 <= q <= p, got {}x{}",
                c.rows(),
                c.cols()
            )));
        }
        let err = c.row_orthonormality_error();
        if !(err <= TOL_ORTH) {
            return Err(Error::InvalidInput(format!(
                "frame rows are not orthonormal (error {err:e})"
            )));
        }
        Ok(Self(c))
    }

    /// Rows `e_1, …, e_q` of the identity: projection onto the leading coordinates.
    pub fn coordinate(q: usize, p: usize) -> Result<Self> {
        check_dims(q, p)?;
        Ok(Self(Matrix::from_fn(q, p, |i, j| if i == j { 1.0 } else { 0.0 })))
    }

    pub fn q(&self) -> usize {
        self.0.rows()
    }

    pub fn p(&self) -> usize {
        self.0.cols()
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    /// `C x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.0.mat_vec(x)
    }

    /// The orthogonal projector `Cᵀ C` onto the row space.
    pub fn projector(&self) -> SymMatrix {
        let ct = self.0.transpose();
        SymMatrix::new(ct.matmul(&self.0).expect("conformable")).expect("finite")
    }

    pub fn orthonormality_error(&self) -> f64 {
        self.0.row_orthonormality_error()
    }
}

fn check_dims(q: usize, p: usize) -> Result<()> {
    if q == 0 || q > p {
        return Err(Error::Domain(format!("frame needs 1 <= q <= p, got q={q}, p={p}")));
    }
    Ok(())
}

/// Samples a Haar-distributed `q×p` frame.
///
/// Draws a standard Gaussian `G` (q×p), factors `G = L·C` with Householder
/// reflections applied from the right (the LQ form of QR on `Gᵀ`) and flips
/// row signs so that `diag(L) > 0`. With that sign convention the factor is
/// unique and its law is invariant under rotations on either side.
pub fn haar_frame<R: Rng + ?Sized>(q: usize, p: usize, rng: &mut R) -> Result<ProjectorFrame> {
    check_dims(q, p)?;
    let mut w = Matrix::from_fn(q, p, |_, _| rng.sample(StandardNormal));
    let mut reflectors: Vec<(f64, Vec<f64>)> = Vec::with_capacity(q);
    let mut l_diag = vec![0.0; q];

    for i in 0..q {
        let x = &w.row(i)[i..];
        let tail = dot(&x[1..], &x[1..]);
        if tail == 0.0 {
            l_diag[i] = x[0];
            reflectors.push((0.0, Vec::new()));
            continue;
        }
        let alpha = (x[0] * x[0] + tail).sqrt();
        let sign = if x[0] >= 0.0 { 1.0 } else { -1.0 };
        let mut v = x.to_vec();
        v[0] += sign * alpha;
        let beta = 1.0 / (alpha * v[0].abs());
        l_diag[i] = -sign * alpha;
        for r in i..q {
            let row = &mut w.row_mut(r)[i..];
            let s = beta * dot(row, &v);
            axpy(-s, &v, row);
        }
        reflectors.push((beta, v));
    }

    // C = [I_q 0] H_{q-1} ··· H_0
    let mut c = Matrix::from_fn(q, p, |i, j| if i == j { 1.0 } else { 0.0 });
    for (i, (beta, v)) in reflectors.iter().enumerate().rev() {
        if *beta == 0.0 {
            continue;
        }
        for r in 0..q {
            let row = &mut c.row_mut(r)[i..];
            let s = beta * dot(row, v);
            if s != 0.0 {
                axpy(-s, v, row);
            }
        }
    }
    for (i, &l) in l_diag.iter().enumerate() {
        if l < 0.0 {
            c.row_mut(i).iter_mut().for_each(|v| *v = -*v);
        }
    }
    ProjectorFrame::new(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamKey;

    #[test]
    fn square_frame_is_orthogonal() {
        let mut rng = StreamKey::new(1, "haar").stream();
        let c = haar_frame(4, 4, &mut rng).unwrap();
        let ctc = c.as_matrix().transpose().matmul(c.as_matrix()).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((ctc[(i, j)] - target).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_row_is_unit() {
        let mut rng = StreamKey::new(2, "haar").stream();
        let c = haar_frame(1, 9, &mut rng).unwrap();
        let n: f64 = c.as_matrix().row(0).iter().map(|v| v * v).sum();
        assert!((n - 1.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_shapes() {
        let mut rng = StreamKey::new(3, "haar").stream();
        assert!(matches!(haar_frame(5, 4, &mut rng), Err(Error::Domain(_))));
        assert!(matches!(haar_frame(0, 4, &mut rng), Err(Error::Domain(_))));
        assert!(ProjectorFrame::coordinate(3, 2).is_err());
    }

    #[test]
    fn frame_recovers_gaussian_row_space() {
        // L = G Cᵀ must be lower triangular with positive diagonal
        let key = StreamKey::new(4, "haar");
        let mut rng = key.stream();
        let c = haar_frame(3, 7, &mut rng).unwrap();
        let mut rng = key.stream();
        let g = Matrix::from_fn(3, 7, |_, _| rng.sample(StandardNormal));
        let l = g.matmul_transpose(c.as_matrix()).unwrap();
        for i in 0..3 {
            assert!(l[(i, i)] > 0.0);
            for j in i + 1..3 {
                assert!(l[(i, j)].abs() < 1e-12);
            }
        }
    }

    #[test]
    fn projector_is_idempotent() {
        let mut rng = StreamKey::new(5, "haar").stream();
        let c = haar_frame(3, 6, &mut rng).unwrap();
        let pr = c.projector();
        let sq = pr.as_matrix().matmul(pr.as_matrix()).unwrap();
        for (a, b) in sq.as_slice().iter().zip(pr.as_matrix().as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((pr.trace() - 3.0).abs() < 1e-12);
    }
}
