//! Gaussian-swap experiment: the normalised trace-resolvent gap between a
//! data matrix and its Gaussian twin with the same covariance,
//!
//! ```text
//! Δ = (1/p) [ tr(n⁻¹X̂X̂ᵀ + B − zI)⁻¹ − tr(n⁻¹ẐẐᵀ + B − zI)⁻¹ ],
//! X̂ = X + C,  Ẑ = Z + C,
//! ```
//!
//! with an optional deterministic shift `B` and column offset `C`. Both
//! resolvent traces are bounded by `1/im z`, so `|Δ| ≤ 2/im z` always.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::conditions::random_psd_unit_norm;
use crate::ensembles::{CovSpec, Sampler, VectorModel};
use crate::error::{Error, Result};
use crate::matcore::{eigh, resolvent_trace, ComplexPoint, Matrix, Spectrum, SymMatrix};
use crate::rng::StreamKey;
use crate::spectra::sample_covariance;

/// `(np²)⁻¹ Σ_k tr(Σ_k²)` above this value is flagged as a violation of the
/// averaged trace condition.
pub const A3_STAR_FLAG: f64 = 0.1;

/// The shift `B`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ShiftSpec {
    None,
    ScaledIdentity(f64),
    /// Random PSD with `‖B‖ = 1`, drawn once from this seed.
    RandomPsdUnitNorm(u64),
}

impl ShiftSpec {
    fn matrix(&self, p: usize) -> Result<Option<SymMatrix>> {
        Ok(match *self {
            ShiftSpec::None => None,
            ShiftSpec::ScaledIdentity(beta) => {
                Some(SymMatrix::from_diag(&vec![beta; p])?)
            }
            ShiftSpec::RandomPsdUnitNorm(seed) => {
                let key = StreamKey::new(seed, "shift");
                Some(random_psd_unit_norm(p, &mut key.stream())?.matrix())
            }
        })
    }
}

impl fmt::Display for ShiftSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShiftSpec::None => write!(f, "none"),
            ShiftSpec::ScaledIdentity(b) => write!(f, "identity:{b}"),
            ShiftSpec::RandomPsdUnitNorm(s) => write!(f, "random-psd:{s}"),
        }
    }
}

impl FromStr for ShiftSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "none" {
            return Ok(ShiftSpec::None);
        }
        if let Some(b) = s.strip_prefix("identity:") {
            let beta: f64 = b.parse().map_err(|_| Error::parse(b, "expected a number"))?;
            if !beta.is_finite() {
                return Err(Error::parse(b, "expected a finite number"));
            }
            return Ok(ShiftSpec::ScaledIdentity(beta));
        }
        if let Some(seed) = s.strip_prefix("random-psd:") {
            let seed = seed.parse().map_err(|_| Error::parse(seed, "expected a u64 seed"))?;
            return Ok(ShiftSpec::RandomPsdUnitNorm(seed));
        }
        Err(Error::parse(s, "expected none, identity:<beta> or random-psd:<seed>"))
    }
}

/// The offset `C`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OffsetSpec {
    None,
    /// Every column equals `γ·𝟙/√p`, so `‖n⁻¹CCᵀ‖ = γ²`.
    ConstantColumns(f64),
}

impl fmt::Display for OffsetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OffsetSpec::None => write!(f, "none"),
            OffsetSpec::ConstantColumns(g) => write!(f, "constant:{g}"),
        }
    }
}

impl FromStr for OffsetSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "none" {
            return Ok(OffsetSpec::None);
        }
        if let Some(g) = s.strip_prefix("constant:") {
            let gamma: f64 = g.parse().map_err(|_| Error::parse(g, "expected a number"))?;
            if !gamma.is_finite() {
                return Err(Error::parse(g, "expected a finite number"));
            }
            return Ok(OffsetSpec::ConstantColumns(gamma));
        }
        Err(Error::parse(s, "expected none or constant:<gamma>"))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SwapConfig {
    pub model: VectorModel,
    pub p: usize,
    pub n: usize,
    pub z: ComplexPoint,
    pub shift: ShiftSpec,
    pub offset: OffsetSpec,
    /// Per-column covariances; column `k` of `X` is `Σ_k^{1/2} y_k` with `y_k`
    /// drawn from the (isotropic) model.
    pub hetero: Option<Vec<CovSpec>>,
}

impl SwapConfig {
    pub fn new(model: VectorModel, p: usize, n: usize, z: ComplexPoint) -> Self {
        Self {
            model,
            p,
            n,
            z,
            shift: ShiftSpec::None,
            offset: OffsetSpec::None,
            hetero: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.p == 0 || self.n == 0 {
            return Err(Error::Domain(format!("need p, n >= 1, got p={}, n={}", self.p, self.n)));
        }
        Ok(())
    }
}

/// Gaussian model with the same population covariance.
pub fn paired_gaussian(model: &VectorModel) -> VectorModel {
    VectorModel::GaussianCov(model.covariance_spec())
}

fn add_offset(x: &mut Matrix, offset: OffsetSpec) {
    if let OffsetSpec::ConstantColumns(gamma) = offset {
        let c = gamma / (x.rows() as f64).sqrt();
        x.as_mut_slice().iter_mut().for_each(|v| *v += c);
    }
}

/// Spectrum of `n⁻¹X̂X̂ᵀ + B`.
fn shifted_spectrum(mut x: Matrix, offset: OffsetSpec, shift: Option<&SymMatrix>) -> Result<Spectrum> {
    add_offset(&mut x, offset);
    let s = sample_covariance(&x)?;
    let m = match shift {
        None => s,
        Some(b) => SymMatrix::new(s.as_matrix().add(b.as_matrix())?)?,
    };
    eigh(&m, false)
}

/// The two spectra whose resolvent traces are compared.
#[derive(Clone, Debug)]
pub struct SwapSpectra {
    pub model: Spectrum,
    pub gaussian: Spectrum,
    /// `(np²)⁻¹ Σ_k tr(Σ_k²)` in heterogeneous mode.
    pub a3_star: Option<f64>,
}

impl SwapSpectra {
    /// `Δ(z)`.
    pub fn gap(&self, z: ComplexPoint) -> Complex64 {
        resolvent_trace(&self.model, z) - resolvent_trace(&self.gaussian, z)
    }
}

/// Draws `X` (from `key.derive("x")`) and `Z` (from `key.derive("z")`) and
/// diagonalises both sides; heterogeneous mode when `cfg.hetero` is set.
pub fn swap_spectra(cfg: &SwapConfig, key: &StreamKey) -> Result<SwapSpectra> {
    cfg.validate()?;
    let (x, z, a3_star) = match &cfg.hetero {
        None => {
            let x = cfg.model.sampler(cfg.p)?.data_matrix(cfg.n, &key.derive("x"))?;
            let z = paired_gaussian(&cfg.model)
                .sampler(cfg.p)?
                .data_matrix(cfg.n, &key.derive("z"))?;
            (x, z, None)
        }
        Some(covs) => {
            let (x, z, a3) = hetero_data(cfg, covs, key)?;
            (x, z, Some(a3))
        }
    };
    let shift = cfg.shift.matrix(cfg.p)?;
    Ok(SwapSpectra {
        model: shifted_spectrum(x, cfg.offset, shift.as_ref())?,
        gaussian: shifted_spectrum(z, cfg.offset, shift.as_ref())?,
        a3_star,
    })
}

/// The model-side data matrix `X` (without offset) that [`swap_spectra`]
/// draws for `key`.
pub fn model_data(cfg: &SwapConfig, key: &StreamKey) -> Result<Matrix> {
    cfg.validate()?;
    match &cfg.hetero {
        None => cfg.model.sampler(cfg.p)?.data_matrix(cfg.n, &key.derive("x")),
        Some(covs) => Ok(hetero_data(cfg, covs, key)?.0),
    }
}

/// `Δ` at `cfg.z` for one trial.
pub fn resolvent_gap(cfg: &SwapConfig, key: &StreamKey) -> Result<Complex64> {
    Ok(swap_spectra(cfg, key)?.gap(cfg.z))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeteroGap {
    pub gap: Complex64,
    /// `(np²)⁻¹ Σ_k tr(Σ_k²)`.
    pub a3_star: f64,
    /// `a3_star ≥ A3_STAR_FLAG`.
    pub a3_violated: bool,
}

/// `Δ` with column-dependent covariances; `Z` has columns `Σ_k^{1/2} g_k`.
pub fn resolvent_gap_hetero(cfg: &SwapConfig, key: &StreamKey) -> Result<HeteroGap> {
    if cfg.hetero.is_none() {
        return Err(Error::Precondition("heterogeneous swap needs a covariance list".into()));
    }
    let s = swap_spectra(cfg, key)?;
    let a3_star = s.a3_star.expect("heterogeneous mode");
    Ok(HeteroGap {
        gap: s.gap(cfg.z),
        a3_star,
        a3_violated: a3_star >= A3_STAR_FLAG,
    })
}

fn hetero_data(cfg: &SwapConfig, covs: &[CovSpec], key: &StreamKey) -> Result<(Matrix, Matrix, f64)> {
    if covs.len() != cfg.n {
        return Err(Error::dims(format!("{} column covariances", cfg.n), covs.len()));
    }
    if !cfg.model.is_isotropic() {
        return Err(Error::Domain(format!(
            "heterogeneous columns colour an isotropic model, got {}",
            cfg.model
        )));
    }
    let (p, n) = (cfg.p, cfg.n);
    let base = cfg.model.sampler(p)?;
    let mut colours: HashMap<String, (Sampler, f64)> = HashMap::new();
    for c in covs {
        let k = c.to_string();
        if !colours.contains_key(&k) {
            let sigma = c.matrix(p)?;
            let tr2 = sigma.trace_product(&sigma);
            colours.insert(k, (VectorModel::GaussianCov(c.clone()).sampler(p)?, tr2));
        }
    }
    let (kx, kz) = (key.derive("x"), key.derive("z"));
    let mut xt = Matrix::zeros(n, p);
    let mut zt = Matrix::zeros(n, p);
    let mut tr2_sum = 0.0;
    for (k, c) in covs.iter().enumerate() {
        let (colour, tr2) = &colours[&c.to_string()];
        tr2_sum += tr2;
        let row = xt.row_mut(k);
        base.sample_into(&mut kx.column(k as u64), row);
        colour.colour(row);
        colour.sample_into(&mut kz.column(k as u64), zt.row_mut(k));
    }
    let a3_star = tr2_sum / (n as f64 * (p * p) as f64);
    Ok((xt.transpose(), zt.transpose(), a3_star))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::population_covariance;

    fn i() -> ComplexPoint {
        ComplexPoint::new(0.0, 1.0).unwrap()
    }

    #[test]
    fn paired_models() {
        assert_eq!(
            paired_gaussian(&VectorModel::IidRademacher),
            VectorModel::GaussianCov(CovSpec::Identity)
        );
        let ma = VectorModel::weak_ma(vec![1.0, 1.0]).unwrap();
        let twin = paired_gaussian(&ma);
        assert!(twin.is_gaussian());
        assert_eq!(
            population_covariance(&twin, 6).unwrap(),
            population_covariance(&ma, 6).unwrap()
        );
    }

    #[test]
    fn gap_is_bounded() {
        let cfg = SwapConfig::new(VectorModel::SparseSpike, 20, 30, i());
        for t in 0..5 {
            let d = resolvent_gap(&cfg, &StreamKey::new(1, "gap").trial(t)).unwrap();
            assert!(d.norm() <= 2.0 + 1e-10);
        }
    }

    #[test]
    fn identity_hetero_matches_plain() {
        let mut cfg = SwapConfig::new(VectorModel::IidRademacher, 12, 18, i());
        let key = StreamKey::new(2, "hetero");
        let plain = resolvent_gap(&cfg, &key).unwrap();
        cfg.hetero = Some(vec![CovSpec::Identity; 18]);
        let h = resolvent_gap_hetero(&cfg, &key).unwrap();
        assert_eq!(plain, h.gap);
        assert!((h.a3_star - 1.0 / 12.0).abs() < 1e-15);
        cfg.hetero = Some(vec![CovSpec::Identity; 3]);
        assert!(matches!(resolvent_gap_hetero(&cfg, &key), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn spec_strings_round_trip() {
        for s in ["none", "identity:0.5", "random-psd:9"] {
            assert_eq!(s.parse::<ShiftSpec>().unwrap().to_string(), s);
        }
        for s in ["none", "constant:1.5"] {
            assert_eq!(s.parse::<OffsetSpec>().unwrap().to_string(), s);
        }
        assert!("identity:x".parse::<ShiftSpec>().is_err());
    }
}
