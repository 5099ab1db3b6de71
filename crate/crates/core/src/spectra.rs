//! Sample covariances, empirical spectral distributions and their distance
//! to the Marchenko–Pastur law.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matcore::{dot, eigh, ComplexPoint, Matrix, ProjectorFrame, SymMatrix, PSD_CLAMP};
use crate::mp_law::MpLaw;

/// Empirical spectral distribution: ascending eigenvalues, mass `1/p` each.
#[derive(Clone, Debug, PartialEq)]
pub struct Esd {
    values: Vec<f64>,
}

impl Esd {
    pub fn from_values(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("ESD needs at least one atom".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("ESD atoms must be finite".into()));
        }
        values.sort_by(f64::total_cmp);
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `∫ x^k dμ_A`.
    pub fn moment(&self, k: i32) -> f64 {
        self.values.iter().map(|v| v.powi(k)).sum::<f64>() / self.len() as f64
    }

    /// `μ_A((−∞, x])`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.values.partition_point(|&v| v <= x) as f64 / self.len() as f64
    }

    /// One-column CSV (`eigenvalue` header), 17 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["eigenvalue"])?;
        for v in &self.values {
            w.write_record([format!("{v:.16e}")])?;
        }
        w.flush()
    }
}

/// `Σ̂ = (1/n) X Xᵀ` for a `p×n` data matrix.
pub fn sample_covariance(x: &Matrix) -> Result<SymMatrix> {
    let (p, n) = (x.rows(), x.cols());
    if n == 0 {
        return Err(Error::Domain("sample covariance needs n >= 1".into()));
    }
    if p == 0 {
        return Err(Error::Domain("sample covariance needs p >= 1".into()));
    }
    let inv_n = 1.0 / n as f64;
    let mut s = Matrix::zeros(p, p);
    s.as_mut_slice()
        .par_chunks_mut(p)
        .enumerate()
        .for_each(|(i, row)| {
            let xi = x.row(i);
            for (j, out) in row.iter_mut().enumerate().take(i + 1) {
                *out = dot(xi, x.row(j)) * inv_n;
            }
        });
    SymMatrix::new(s)
}

/// Eigenvalues of any symmetric matrix.
pub fn esd(m: &SymMatrix) -> Result<Esd> {
    Esd::from_values(eigh(m, false)?.into_values())
}

/// Eigenvalues of a nominally PSD matrix. Values with
/// `|λ| ≤ PSD_CLAMP·λ_max` are set to exactly 0 so that numerically null
/// directions land on the atom of the limiting law; more negative values
/// are an error.
pub fn esd_psd(m: &SymMatrix) -> Result<Esd> {
    let mut values = eigh(m, false)?.into_values();
    let scale = values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let tol = PSD_CLAMP * scale;
    for v in &mut values {
        if *v < -tol {
            return Err(Error::NotPsd {
                eigenvalue: *v,
                tolerance: -tol,
            });
        }
        if v.abs() <= tol {
            *v = 0.0;
        }
    }
    Esd::from_values(values)
}

/// Kolmogorov distance `sup_x |F_A(x) − F(x)|` between an ESD and `μ_ρ`.
///
/// Evaluated exactly at the jumps of both distribution functions: for each
/// group of tied atoms at `v` with ranks `j..=k` the candidates are
/// `|k/p − F(v)|` and `|(j−1)/p − F(v−)|`.
pub fn ks_distance(e: &Esd, law: &MpLaw) -> f64 {
    let p = e.len() as f64;
    let vals = e.values();
    let mut worst: f64 = 0.0;
    let mut start = 0;
    while start < vals.len() {
        let v = vals[start];
        let mut end = start + 1;
        while end < vals.len() && vals[end] == v {
            end += 1;
        }
        let below = start as f64 / p;
        let upto = end as f64 / p;
        worst = worst
            .max((upto - law.cdf(v)).abs())
            .max((below - law.cdf_left(v)).abs());
        start = end;
    }
    // the law's own jump at 0
    worst = worst.max((e.cdf(0.0) - law.cdf(0.0)).abs());
    worst.min(1.0)
}

/// `(1/p) Σ 1/(λ_k − z)`.
pub fn empirical_stieltjes(e: &Esd, z: ComplexPoint) -> Complex64 {
    let zc = z.to_complex();
    let sum: Complex64 = e.values().iter().map(|&l| (l - zc).inv()).sum();
    sum / e.len() as f64
}

/// `C M Cᵀ` for a `q×p` frame and a `p×p` matrix.
pub fn projected_covariance(frame: &ProjectorFrame, m: &SymMatrix) -> Result<SymMatrix> {
    if frame.p() != m.dim() {
        return Err(Error::Domain(format!(
            "frame has {} columns but the matrix has dimension {}",
            frame.p(),
            m.dim()
        )));
    }
    let cm = frame.as_matrix().matmul(m.as_matrix())?;
    SymMatrix::new(cm.matmul_transpose(frame.as_matrix())?)
}

/// `C X` for a `q×p` frame and a `p×n` data matrix, so that
/// `sample_covariance(C X) = C Σ̂ Cᵀ`.
pub fn project_data(frame: &ProjectorFrame, x: &Matrix) -> Result<Matrix> {
    if frame.p() != x.rows() {
        return Err(Error::Domain(format!(
            "frame has {} columns but the data has {} rows",
            frame.p(),
            x.rows()
        )));
    }
    frame.as_matrix().matmul(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covariance_of_constant_row() {
        let x = Matrix::from_vec(1, 5, vec![1.0; 5]).unwrap();
        let s = sample_covariance(&x).unwrap();
        assert_eq!(s.as_matrix().as_slice(), &[1.0]);
        let z = sample_covariance(&Matrix::zeros(3, 4)).unwrap();
        assert!(z.as_matrix().as_slice().iter().all(|&v| v == 0.0));
        assert!(sample_covariance(&Matrix::zeros(3, 0)).is_err());
    }

    #[test]
    fn ks_of_disjoint_support_is_one() {
        let e = Esd::from_values(vec![1e6; 10]).unwrap();
        let d = ks_distance(&e, &MpLaw::new(1.0).unwrap());
        assert!((d - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ks_handles_the_atom() {
        // ρ = 2: half the mass sits at 0
        let law = MpLaw::new(2.0).unwrap();
        let mut v = vec![0.0; 50];
        v.extend((0..50).map(|i| law.quantile(0.5 + (i as f64 + 0.5) / 100.0).unwrap()));
        let d = ks_distance(&Esd::from_values(v).unwrap(), &law);
        assert!(d <= 0.5 / 100.0 + 1e-9, "d = {d}");
        // no atoms at zero: the missing jump is counted
        let e = Esd::from_values(vec![1.0; 4]).unwrap();
        assert!(ks_distance(&e, &law) >= 0.5);
    }

    #[test]
    fn esd_cdf_and_moments() {
        let e = Esd::from_values(vec![3.0, 1.0, 2.0, 2.0]).unwrap();
        assert_eq!(e.values(), &[1.0, 2.0, 2.0, 3.0]);
        assert_eq!(e.cdf(2.0), 0.75);
        assert_eq!(e.cdf(0.5), 0.0);
        assert_eq!(e.moment(1), 2.0);
    }

    #[test]
    fn psd_clamp_zeroes_tiny_values() {
        let m = SymMatrix::from_diag(&[1e-15, -1e-14, 2.0]).unwrap();
        assert_eq!(esd_psd(&m).unwrap().values(), &[0.0, 0.0, 2.0]);
        let bad = SymMatrix::from_diag(&[-0.1, 1.0]).unwrap();
        assert!(matches!(esd_psd(&bad), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn stieltjes_of_unit_atoms() {
        let e = Esd::from_values(vec![1.0; 7]).unwrap();
        let s = empirical_stieltjes(&e, ComplexPoint::new(0.0, 1.0).unwrap());
        assert!((s - Complex64::new(0.5, 0.5)).norm() < 1e-15);
    }

    #[test]
    fn coordinate_projection_is_submatrix() {
        let m = SymMatrix::from_diag(&[4.0, 5.0, 6.0]).unwrap();
        let c = ProjectorFrame::coordinate(2, 3).unwrap();
        let pm = projected_covariance(&c, &m).unwrap();
        assert_eq!(pm.diagonal(), vec![4.0, 5.0]);
        assert!(projected_covariance(&ProjectorFrame::coordinate(2, 4).unwrap(), &m).is_err());
    }

    #[test]
    fn csv_is_one_column() {
        let mut buf = Vec::new();
        Esd::from_values(vec![0.5, 0.25]).unwrap().write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = s.lines().collect();
        assert_eq!(lines[0], "eigenvalue");
        assert_eq!(lines[1].parse::<f64>().unwrap(), 0.25);
        assert_eq!(lines.len(), 3);
    }
}
