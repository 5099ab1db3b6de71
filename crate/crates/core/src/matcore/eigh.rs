//! Dense symmetric eigensolver: Householder reduction to tridiagonal form
//! followed by the implicit-shift QL iteration.
//!
//! The reduction works on the full row-major matrix so every inner loop
//! runs over contiguous rows. Eigenvectors are accumulated transposed (one
//! eigenvector per row) for the same reason and transposed once at the end.
//! No step depends on thread scheduling, so equal input bits give equal
//! output bits.

use rayon::prelude::*;

use super::matrix::{axpy, dot, Matrix, SymMatrix};
use crate::error::{Error, Result};

/// QL sweeps allowed per eigenvalue before giving up.
pub const MAX_QL_ITERATIONS: usize = 64;

/// Orthogonality tolerance for computed eigenvectors and frames.
pub const TOL_ORTH: f64 = 1e-10;

/// Relative Frobenius tolerance for `QΛQᵀ` reconstruction.
pub const TOL_RECON: f64 = 1e-9;

/// Relative negativity accepted (and clamped) for nominally PSD input.
pub const PSD_CLAMP: f64 = 1e-10;

const PAR_THRESHOLD: usize = 192;

#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    values: Vec<f64>,
    /// Column `k` is the unit eigenvector for `values[k]`.
    vectors: Option<Matrix>,
}

impl Spectrum {
    pub fn from_values(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("spectrum needs >= 1 finite eigenvalue".into()));
        }
        values.sort_by(f64::total_cmp);
        Ok(Self { values, vectors: None })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn vectors(&self) -> Option<&Matrix> {
        self.vectors.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        *self.values.last().expect("non-empty spectrum")
    }

    pub fn max_abs(&self) -> f64 {
        self.min().abs().max(self.max().abs())
    }

    /// `QΛQᵀ`; `None` without eigenvectors.
    pub fn reconstruct(&self) -> Option<Matrix> {
        let q = self.vectors.as_ref()?;
        let n = self.dim();
        let mut scaled = q.clone();
        for i in 0..n {
            for (v, lambda) in scaled.row_mut(i).iter_mut().zip(&self.values) {
                *v *= lambda;
            }
        }
        scaled.matmul_transpose(q).ok()
    }

    /// Largest entry of `|QᵀQ − I|`; `None` without eigenvectors.
    pub fn orthogonality_error(&self) -> Option<f64> {
        Some(self.vectors.as_ref()?.transpose().row_orthonormality_error())
    }

    /// Maps `f` over the eigenvalues, keeping the eigenbasis: `Q f(Λ) Qᵀ`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> Result<SymMatrix> {
        let q = self.vectors.as_ref().ok_or_else(|| {
            Error::Precondition("matrix function needs eigenvectors".into())
        })?;
        let n = self.dim();
        let fl: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        let mut scaled = q.clone();
        for i in 0..n {
            for (v, w) in scaled.row_mut(i).iter_mut().zip(&fl) {
                *v *= w;
            }
        }
        SymMatrix::new(scaled.matmul_transpose(q)?)
    }

    /// Clamp eigenvalues of a nominally PSD matrix: values within
    /// `-PSD_CLAMP·max|λ|` become 0, anything more negative is an error.
    pub fn clamp_psd(&mut self) -> Result<()> {
        let tol = PSD_CLAMP * self.max_abs();
        for v in &mut self.values {
            if *v < 0.0 {
                if *v < -tol {
                    return Err(Error::NotPsd {
                        eigenvalue: *v,
                        tolerance: -tol,
                    });
                }
                *v = 0.0;
            }
        }
        Ok(())
    }
}

/// Full symmetric eigendecomposition, eigenvalues ascending.
pub fn eigh(m: &SymMatrix, want_vectors: bool) -> Result<Spectrum> {
    let n = m.dim();
    if !m.as_matrix().is_finite() {
        return Err(Error::InvalidInput("eigh input has non-finite entries".into()));
    }
    let mut a = m.as_matrix().clone();
    let tri = tridiagonalize(&mut a);
    let mut d = tri.diag;
    let mut e = tri.off;
    let mut vt = if want_vectors {
        Some(tri.reflectors.accumulate_transposed(n))
    } else {
        None
    };
    tql(&mut d, &mut e, vt.as_mut())?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    let values: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let vectors = vt.map(|vt| {
        let mut q = Matrix::zeros(n, n);
        for (col, &src) in order.iter().enumerate() {
            for (row, &v) in vt.row(src).iter().enumerate() {
                q[(row, col)] = v;
            }
        }
        q
    });
    Ok(Spectrum { values, vectors })
}

/// Eigenvalues of a PSD matrix with round-off negatives clamped to zero.
pub fn eigh_psd(m: &SymMatrix, want_vectors: bool) -> Result<Spectrum> {
    let mut s = eigh(m, want_vectors)?;
    s.clamp_psd()?;
    Ok(s)
}

/// Principal square root `A^{1/2}` of a PSD matrix.
pub fn principal_sqrt(m: &SymMatrix) -> Result<SymMatrix> {
    if m.is_diagonal() {
        let d = m.diagonal();
        if let Some(&bad) = d.iter().find(|&&v| v < 0.0) {
            return Err(Error::NotPsd {
                eigenvalue: bad,
                tolerance: 0.0,
            });
        }
        return SymMatrix::from_diag(&d.iter().map(|v| v.sqrt()).collect::<Vec<_>>());
    }
    eigh_psd(m, true)?.apply(f64::sqrt)
}

struct Reflectors {
    /// `(offset, beta, v)`: `H = I − β v vᵀ` acting on indices `offset..n`.
    items: Vec<(usize, f64, Vec<f64>)>,
}

impl Reflectors {
    /// `Qᵀ = H_{last}···H_0` where `A = Q T Qᵀ`, built by backward accumulation.
    fn accumulate_transposed(&self, n: usize) -> Matrix {
        let mut m = Matrix::identity(n);
        for (offset, beta, v) in self.items.iter().rev() {
            if *beta == 0.0 {
                continue;
            }
            let offset = *offset;
            for r in offset..n {
                let row = &mut m.row_mut(r)[offset..];
                let s = beta * dot(row, v);
                if s != 0.0 {
                    axpy(-s, v, row);
                }
            }
        }
        m
    }
}

struct Tridiagonal {
    diag: Vec<f64>,
    /// `off[i] = T[i, i+1]`; the last entry is 0.
    off: Vec<f64>,
    reflectors: Reflectors,
}

fn tridiagonalize(a: &mut Matrix) -> Tridiagonal {
    let n = a.rows();
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n];
    let mut items = Vec::with_capacity(n.saturating_sub(2));

    for k in 0..n.saturating_sub(2) {
        diag[k] = a[(k, k)];
        let x: Vec<f64> = a.row(k)[k + 1..].to_vec();
        let tail = dot(&x[1..], &x[1..]);
        if tail == 0.0 {
            off[k] = x[0];
            items.push((k + 1, 0.0, Vec::new()));
            continue;
        }
        let alpha = (x[0] * x[0] + tail).sqrt();
        let sign = if x[0] >= 0.0 { 1.0 } else { -1.0 };
        let mut v = x;
        v[0] += sign * alpha;
        let beta = 1.0 / (alpha * v[0].abs());
        off[k] = -sign * alpha;

        let start = k + 1;
        let m = n - start;
        // p = β A22 v
        let mut p = vec![0.0; m];
        let rows_of = |i: usize, a: &Matrix| dot(&a.row(start + i)[start..], &v);
        if m >= PAR_THRESHOLD {
            let a_ref = &*a;
            p.par_iter_mut()
                .enumerate()
                .for_each(|(i, pi)| *pi = beta * rows_of(i, a_ref));
        } else {
            for (i, pi) in p.iter_mut().enumerate() {
                *pi = beta * rows_of(i, a);
            }
        }
        let kfac = 0.5 * beta * dot(&p, &v);
        let w: Vec<f64> = p.iter().zip(&v).map(|(pi, vi)| pi - kfac * vi).collect();
        // A22 -= v wᵀ + w vᵀ
        let cols = a.cols();
        let update = |i: usize, row: &mut [f64]| {
            let row = &mut row[start..];
            axpy(-v[i], &w, row);
            axpy(-w[i], &v, row);
        };
        let body = &mut a.as_mut_slice()[start * cols..];
        if m >= PAR_THRESHOLD {
            body.par_chunks_mut(cols)
                .enumerate()
                .for_each(|(i, row)| update(i, row));
        } else {
            for (i, row) in body.chunks_mut(cols).enumerate() {
                update(i, row);
            }
        }
        items.push((start, beta, v));
    }
    if n >= 2 {
        diag[n - 2] = a[(n - 2, n - 2)];
        off[n - 2] = a[(n - 2, n - 1)];
    }
    if n >= 1 {
        diag[n - 1] = a[(n - 1, n - 1)];
    }
    Tridiagonal {
        diag,
        off,
        reflectors: Reflectors { items },
    }
}

/// Implicit-shift QL on a symmetric tridiagonal matrix. `vt`, when given,
/// holds one basis vector per row and receives every rotation.
fn tql(d: &mut [f64], e: &mut [f64], mut vt: Option<&mut Matrix>) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    e[n - 1] = 0.0;
    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1 = 0.0f64;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_QL_ITERATIONS {
                    return Err(Error::Convergence {
                        iterations: MAX_QL_ITERATIONS,
                        residual: e[l].abs(),
                    });
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    let h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(vt) = vt.as_deref_mut() {
                        rotate_rows(vt, i, c, s);
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

#[inline]
fn rotate_rows(vt: &mut Matrix, i: usize, c: f64, s: f64) {
    let cols = vt.cols();
    let (head, tail) = vt.as_mut_slice().split_at_mut((i + 1) * cols);
    let ri = &mut head[i * cols..];
    let rj = &mut tail[..cols];
    for (a, b) in ri.iter_mut().zip(rj.iter_mut()) {
        let h = *b;
        *b = s * *a + c * h;
        *a = c * *a - s * h;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamKey;
    use rand_distr::{Distribution, StandardNormal};

    fn random_symmetric(n: usize, seed: u64) -> SymMatrix {
        let mut rng = StreamKey::new(seed, "eigh-test").stream();
        let g = Matrix::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
        SymMatrix::symmetric_part(&g).unwrap()
    }

    fn rel_recon_error(m: &SymMatrix, s: &Spectrum) -> f64 {
        let r = s.reconstruct().unwrap();
        let diff = r.add(&{
            let mut neg = m.as_matrix().clone();
            neg.scale(-1.0);
            neg
        })
        .unwrap();
        diff.frobenius_norm() / m.as_matrix().frobenius_norm()
    }

    #[test]
    fn identity_and_diagonal() {
        let s = eigh(&SymMatrix::identity(3), false).unwrap();
        assert_eq!(s.values(), &[1.0, 1.0, 1.0]);
        let s = eigh(&SymMatrix::from_diag(&[3.0, 1.0, 2.0]).unwrap(), true).unwrap();
        assert_eq!(s.values(), &[1.0, 2.0, 3.0]);
        assert!(s.orthogonality_error().unwrap() < 1e-15);
    }

    #[test]
    fn tiny_dimensions() {
        let s = eigh(&SymMatrix::from_diag(&[-2.5]).unwrap(), true).unwrap();
        assert_eq!(s.values(), &[-2.5]);
        let m = SymMatrix::new(Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap()).unwrap();
        let s = eigh(&m, true).unwrap();
        assert!((s.values()[0] - 1.0).abs() < 1e-14);
        assert!((s.values()[1] - 3.0).abs() < 1e-14);
        assert!(rel_recon_error(&m, &s) < 1e-14);
    }

    #[test]
    fn random_50_reconstructs() {
        let m = random_symmetric(50, 11);
        let s = eigh(&m, true).unwrap();
        assert!(rel_recon_error(&m, &s) <= 1e-10);
        assert!(s.orthogonality_error().unwrap() <= TOL_ORTH);
        assert!(s.values().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn values_only_match_vector_run() {
        let m = random_symmetric(300, 5);
        let a = eigh(&m, false).unwrap();
        let b = eigh(&m, true).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() < 1e-10);
        }
        assert!(rel_recon_error(&m, &b) <= TOL_RECON);
    }

    #[test]
    fn deterministic_bits() {
        let m = random_symmetric(64, 3);
        let a = eigh(&m, true).unwrap();
        let b = eigh(&m, true).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn non_finite_is_rejected_before_iteration() {
        // SymMatrix refuses non-finite entries at construction, which is
        // the only way to reach eigh.
        let bad = Matrix::from_rows(&[vec![f64::NAN]]).unwrap();
        assert!(matches!(SymMatrix::new(bad), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn degenerate_spectra() {
        // repeated eigenvalues and an exactly zero block
        let mut d = vec![0.0; 10];
        d.extend(std::iter::repeat(2.0).take(10));
        let m = SymMatrix::from_diag(&d).unwrap();
        let s = eigh(&m, true).unwrap();
        assert_eq!(&s.values()[..10], &[0.0; 10]);
        let zero = SymMatrix::new(Matrix::zeros(7, 7)).unwrap();
        assert_eq!(eigh(&zero, false).unwrap().values(), &[0.0; 7]);
    }

    #[test]
    fn psd_clamp_and_violation() {
        let mut s = Spectrum::from_values(vec![-1e-14, 1.0, 2.0]).unwrap();
        s.clamp_psd().unwrap();
        assert_eq!(s.values()[0], 0.0);
        let mut s = Spectrum::from_values(vec![-1e-3, 1.0]).unwrap();
        assert!(matches!(s.clamp_psd(), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn principal_sqrt_squares_back() {
        let g = random_symmetric(20, 9);
        let gm = g.as_matrix();
        let psd = SymMatrix::new(gm.matmul_transpose(gm).unwrap()).unwrap();
        let root = principal_sqrt(&psd).unwrap();
        let back = root.as_matrix().matmul(root.as_matrix()).unwrap();
        for (x, y) in back.as_slice().iter().zip(psd.as_matrix().as_slice()) {
            assert!((x - y).abs() < 1e-9);
        }
        assert!(eigh(&root, false).unwrap().min() >= -1e-12);
    }
}
