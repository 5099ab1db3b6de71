use num_complex::Complex64;

use super::eigh::Spectrum;
use super::matrix::Matrix;
use crate::error::{Error, Result};

/// A point of the open upper half-plane `ℂ⁺`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexPoint {
    re: f64,
    im: f64,
}

impl ComplexPoint {
    pub fn new(re: f64, im: f64) -> Result<Self> {
        if !(re.is_finite() && im.is_finite()) {
            return Err(Error::Domain(format!("non-finite point {re} + {im}i")));
        }
        if im <= 0.0 {
            return Err(Error::Domain(format!(
                "resolvent argument must lie in the upper half-plane, got im = {im}"
            )));
        }
        Ok(Self { re, im })
    }

    pub fn re(&self) -> f64 {
        self.re
    }

    pub fn im(&self) -> f64 {
        self.im
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    /// `z − s` for real `s` (still in `ℂ⁺`).
    pub fn shifted(self, s: f64) -> Self {
        Self {
            re: self.re - s,
            im: self.im,
        }
    }
}

impl TryFrom<Complex64> for ComplexPoint {
    type Error = Error;

    fn try_from(z: Complex64) -> Result<Self> {
        Self::new(z.re, z.im)
    }
}

/// `(1/p)·tr(A − zI)⁻¹ = (1/p)·Σ 1/(λ_k − z)`.
pub fn resolvent_trace(s: &Spectrum, z: ComplexPoint) -> Complex64 {
    let z = z.to_complex();
    let sum: Complex64 = s.values().iter().map(|&l| (l - z).inv()).sum();
    sum / s.dim() as f64
}

/// `tr(A + wwᵀ − zI)⁻¹` from the eigendecomposition of `A` via
/// Sherman–Morrison: `tr(A−zI)⁻¹ − wᵀ(A−zI)⁻²w / (1 + wᵀ(A−zI)⁻¹w)`.
pub fn rank_one_trace_update(s: &Spectrum, w: &[f64], z: ComplexPoint) -> Result<Complex64> {
    Ok(rank_one_terms(s, w, z.to_complex())?.updated_trace())
}

/// The three scalars entering Sherman–Morrison for `(A − zI)`.
#[derive(Clone, Copy, Debug)]
pub struct RankOneTerms {
    /// `tr(A − zI)⁻¹`
    pub trace: Complex64,
    /// `wᵀ(A − zI)⁻¹w`
    pub first: Complex64,
    /// `wᵀ(A − zI)⁻²w`
    pub second: Complex64,
}

impl RankOneTerms {
    pub fn updated_trace(&self) -> Complex64 {
        self.trace - self.second / (1.0 + self.first)
    }

    /// `wᵀ(A + wwᵀ − zI)⁻¹w`.
    pub fn updated_form(&self) -> Complex64 {
        self.first / (1.0 + self.first)
    }
}

/// Sherman–Morrison ingredients at any `z` off the spectrum. Public callers
/// go through [`rank_one_trace_update`], which insists on `z ∈ ℂ⁺`.
pub fn rank_one_terms(s: &Spectrum, w: &[f64], z: Complex64) -> Result<RankOneTerms> {
    let q = s.vectors().ok_or_else(|| {
        Error::Precondition("rank-one update needs eigenvectors of A".into())
    })?;
    if w.len() != s.dim() {
        return Err(Error::dims(s.dim(), w.len()));
    }
    let u = project_onto_basis(q, w);
    let mut trace = Complex64::new(0.0, 0.0);
    let mut first = Complex64::new(0.0, 0.0);
    let mut second = Complex64::new(0.0, 0.0);
    for (&l, &uk) in s.values().iter().zip(&u) {
        let r = (l - z).inv();
        trace += r;
        first += uk * uk * r;
        second += uk * uk * r * r;
    }
    Ok(RankOneTerms {
        trace,
        first,
        second,
    })
}

/// `Qᵀ w` for a basis stored column-wise.
pub(crate) fn project_onto_basis(q: &Matrix, w: &[f64]) -> Vec<f64> {
    let n = q.cols();
    let mut u = vec![0.0; n];
    for (i, &wi) in w.iter().enumerate() {
        if wi != 0.0 {
            super::matrix::axpy(wi, q.row(i), &mut u);
        }
    }
    u
}

/// `vᵀ · M · v` through the spectrum, for a complex function of the eigenvalues.
pub(crate) fn spectral_form(
    s: &Spectrum,
    v: &[f64],
    f: impl Fn(f64) -> Complex64,
) -> Result<Complex64> {
    let q = s
        .vectors()
        .ok_or_else(|| Error::Precondition("spectral form needs eigenvectors".into()))?;
    let u = project_onto_basis(q, v);
    Ok(s.values()
        .iter()
        .zip(&u)
        .map(|(&l, &uk)| uk * uk * f(l))
        .sum())
}
