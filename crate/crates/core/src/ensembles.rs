//! Random-vector families with known population covariance.
//!
//! | spec string                 | model                                          | `E x xᵀ`            |
//! |-----------------------------|------------------------------------------------|---------------------|
//! | `iid-gauss`                 | i.i.d. N(0, 1) entries                         | `I`                 |
//! | `iid-rademacher`            | i.i.d. ±1 entries                              | `I`                 |
//! | `sparse-spike`              | i.i.d. ±√p w.p. 1/(2p) each, else 0            | `I`                 |
//! | `block-xi`                  | `√2 (z ξ, z (1−ξ))`, `z ~ N(0, I_{p/2})`       | `I`                 |
//! | `gauss-cov:<cov>`           | `Σ^{1/2} z`                                    | `Σ`                 |
//! | `weak-ma:c0,c1,…`           | `X_k = Σ_j c_j ε_{k−j}`, ±1 innovations        | Toeplitz of `γ(h)`  |
//!
//! `<cov>` is `identity`, `spiked:k,s` (first `k` eigenvalues set to `s`;
//! `s` may be the literal `p`), `toeplitz:phi` (`Σ_ij = φ^|i−j|`) or
//! `banded:g0,g1,…` (`Σ_ij = g_|i−j|`).
//!
//! The sparse-spike model violates the Lindeberg condition; block-xi is
//! isotropic but its quadratic forms do not concentrate.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matcore::{principal_sqrt, Matrix, SymMatrix};
use crate::rng::StreamKey;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpikeSize {
    Value(f64),
    /// The spike equals the dimension `p`.
    Dimension,
}

impl SpikeSize {
    pub fn at(self, p: usize) -> f64 {
        match self {
            SpikeSize::Value(s) => s,
            SpikeSize::Dimension => p as f64,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CovSpec {
    Identity,
    Spiked { count: usize, size: SpikeSize },
    Toeplitz { phi: f64 },
    /// Autocovariance sequence `γ(0), γ(1), …`; zero beyond its length.
    Banded(Vec<f64>),
}

impl CovSpec {
    pub fn is_identity(&self) -> bool {
        match self {
            CovSpec::Identity => true,
            CovSpec::Spiked { count, size } => *count == 0 || *size == SpikeSize::Value(1.0),
            CovSpec::Toeplitz { phi } => *phi == 0.0,
            CovSpec::Banded(g) => g.first() == Some(&1.0) && g[1..].iter().all(|&v| v == 0.0),
        }
    }

    fn validate(&self, p: usize) -> Result<()> {
        match self {
            CovSpec::Identity => Ok(()),
            CovSpec::Spiked { count, size } => {
                if *count > p {
                    return Err(Error::Domain(format!("{count} spikes exceed dimension {p}")));
                }
                let s = size.at(p);
                if !(s >= 0.0 && s.is_finite()) {
                    return Err(Error::Domain(format!("spike size must be >= 0, got {s}")));
                }
                Ok(())
            }
            CovSpec::Toeplitz { phi } => {
                if !(phi.abs() < 1.0) {
                    return Err(Error::Domain(format!("toeplitz needs |phi| < 1, got {phi}")));
                }
                Ok(())
            }
            CovSpec::Banded(g) => {
                if g.is_empty() || g.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Domain("banded covariance needs finite gamma(0..)".into()));
                }
                Ok(())
            }
        }
    }

    pub fn matrix(&self, p: usize) -> Result<SymMatrix> {
        self.validate(p)?;
        let m = match self {
            CovSpec::Identity => Matrix::identity(p),
            CovSpec::Spiked { count, size } => {
                let s = size.at(p);
                let d: Vec<f64> = (0..p).map(|i| if i < *count { s } else { 1.0 }).collect();
                Matrix::from_diag(&d)
            }
            CovSpec::Toeplitz { phi } => {
                Matrix::from_fn(p, p, |i, j| phi.powi(i.abs_diff(j) as i32))
            }
            CovSpec::Banded(g) => {
                Matrix::from_fn(p, p, |i, j| g.get(i.abs_diff(j)).copied().unwrap_or(0.0))
            }
        };
        SymMatrix::new(m)
    }
}

impl fmt::Display for CovSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CovSpec::Identity => write!(f, "identity"),
            CovSpec::Spiked { count, size } => match size {
                SpikeSize::Value(s) => write!(f, "spiked:{count},{s}"),
                SpikeSize::Dimension => write!(f, "spiked:{count},p"),
            },
            CovSpec::Toeplitz { phi } => write!(f, "toeplitz:{phi}"),
            CovSpec::Banded(g) => write!(f, "banded:{}", join(g)),
        }
    }
}

impl FromStr for CovSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (head, args) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        match (head, args) {
            ("identity", None) => Ok(CovSpec::Identity),
            ("spiked", Some(a)) => {
                let (k, size) = a
                    .split_once(',')
                    .ok_or_else(|| Error::parse(a, "expected spiked:k,s"))?;
                let count = k
                    .trim()
                    .parse()
                    .map_err(|_| Error::parse(k, "spike count must be a non-negative integer"))?;
                let size = match size.trim() {
                    "p" => SpikeSize::Dimension,
                    v => SpikeSize::Value(parse_f64(v)?),
                };
                Ok(CovSpec::Spiked { count, size })
            }
            ("toeplitz", Some(a)) => Ok(CovSpec::Toeplitz { phi: parse_f64(a)? }),
            ("banded", Some(a)) => Ok(CovSpec::Banded(parse_list(a)?)),
            _ => Err(Error::parse(s, "unknown covariance spec")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum VectorModel {
    IidGaussian,
    IidRademacher,
    SparseSpike,
    BlockXi,
    GaussianCov(CovSpec),
    /// Moving-average coefficients as given; normalised to unit variance when sampled.
    WeakDependent(Vec<f64>),
}

impl VectorModel {
    pub fn weak_ma(coeffs: Vec<f64>) -> Result<Self> {
        let m = VectorModel::WeakDependent(coeffs);
        m.validate(1)?;
        Ok(m)
    }

    /// Checks that the model can be sampled at dimension `p`.
    pub fn validate(&self, p: usize) -> Result<()> {
        if p == 0 {
            return Err(Error::Domain("dimension must be >= 1".into()));
        }
        match self {
            VectorModel::BlockXi if p % 2 != 0 => {
                Err(Error::Domain(format!("block-xi needs even p, got {p}")))
            }
            VectorModel::GaussianCov(c) => c.validate(p),
            VectorModel::WeakDependent(c) => {
                let ss: f64 = c.iter().map(|v| v * v).sum();
                if c.is_empty() || !(ss > 0.0 && ss.is_finite()) {
                    return Err(Error::Domain("weak-ma needs a non-zero finite coefficient".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Unit-variance MA coefficients.
    pub fn ma_coefficients(&self) -> Option<Vec<f64>> {
        match self {
            VectorModel::WeakDependent(c) => {
                let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
                Some(c.iter().map(|v| v / norm).collect())
            }
            _ => None,
        }
    }

    /// Covariance spec of the model, independent of dimension.
    pub fn covariance_spec(&self) -> CovSpec {
        match self {
            VectorModel::IidGaussian
            | VectorModel::IidRademacher
            | VectorModel::SparseSpike
            | VectorModel::BlockXi => CovSpec::Identity,
            VectorModel::GaussianCov(c) => c.clone(),
            VectorModel::WeakDependent(_) => {
                let c = self.ma_coefficients().expect("weak-ma");
                let gamma = (0..c.len())
                    .map(|h| c.iter().zip(&c[h..]).map(|(a, b)| a * b).sum())
                    .collect();
                CovSpec::Banded(gamma)
            }
        }
    }

    pub fn is_isotropic(&self) -> bool {
        self.covariance_spec().is_identity()
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self, VectorModel::IidGaussian | VectorModel::GaussianCov(_))
    }

    /// Precomputes whatever sampling at dimension `p` needs (e.g. `Σ^{1/2}`).
    pub fn sampler(&self, p: usize) -> Result<Sampler> {
        self.validate(p)?;
        let root = match self {
            VectorModel::GaussianCov(c) if !c.is_identity() => {
                let sigma = c.matrix(p)?;
                let root = principal_sqrt(&sigma)?;
                Some(if root.is_diagonal() {
                    Root::Diagonal(root.diagonal())
                } else {
                    Root::Dense(root)
                })
            }
            _ => None,
        };
        Ok(Sampler {
            model: self.clone(),
            p,
            root,
            ma: self.ma_coefficients(),
        })
    }
}

impl fmt::Display for VectorModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VectorModel::IidGaussian => write!(f, "iid-gauss"),
            VectorModel::IidRademacher => write!(f, "iid-rademacher"),
            VectorModel::SparseSpike => write!(f, "sparse-spike"),
            VectorModel::BlockXi => write!(f, "block-xi"),
            VectorModel::GaussianCov(c) => write!(f, "gauss-cov:{c}"),
            VectorModel::WeakDependent(c) => write!(f, "weak-ma:{}", join(c)),
        }
    }
}

impl FromStr for VectorModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "iid-gauss" => return Ok(VectorModel::IidGaussian),
            "iid-rademacher" => return Ok(VectorModel::IidRademacher),
            "sparse-spike" => return Ok(VectorModel::SparseSpike),
            "block-xi" => return Ok(VectorModel::BlockXi),
            _ => {}
        }
        if let Some(rest) = s.strip_prefix("gauss-cov:") {
            return Ok(VectorModel::GaussianCov(rest.parse()?));
        }
        if let Some(rest) = s.strip_prefix("weak-ma:") {
            return VectorModel::weak_ma(parse_list(rest)?);
        }
        let token = s.split(':').next().unwrap_or(s);
        Err(Error::parse(token, "unknown model"))
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| Error::parse(s, "expected a number"))?;
    if !v.is_finite() {
        return Err(Error::parse(s, "expected a finite number"));
    }
    Ok(v)
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',').map(parse_f64).collect()
}

fn join(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

#[derive(Clone, Debug)]
enum Root {
    Diagonal(Vec<f64>),
    Dense(SymMatrix),
}

/// A model bound to a dimension, ready to draw vectors.
#[derive(Clone, Debug)]
pub struct Sampler {
    model: VectorModel,
    p: usize,
    root: Option<Root>,
    ma: Option<Vec<f64>>,
}

impl Sampler {
    pub fn model(&self) -> &VectorModel {
        &self.model
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let p = self.p;
        debug_assert_eq!(out.len(), p);
        match &self.model {
            VectorModel::IidGaussian => out.iter_mut().for_each(|v| *v = rng.sample(StandardNormal)),
            VectorModel::IidRademacher => {
                out.iter_mut().for_each(|v| *v = if rng.random::<bool>() { 1.0 } else { -1.0 })
            }
            VectorModel::SparseSpike => {
                let half = 0.5 / p as f64;
                let spike = (p as f64).sqrt();
                for v in out.iter_mut() {
                    let u: f64 = rng.random();
                    *v = if u < half {
                        spike
                    } else if u < 2.0 * half {
                        -spike
                    } else {
                        0.0
                    };
                }
            }
            VectorModel::BlockXi => {
                let q = p / 2;
                let xi: bool = rng.random();
                let (live, dead) = if xi { (0, q) } else { (q, 0) };
                for v in &mut out[dead..dead + q] {
                    *v = 0.0;
                }
                for v in &mut out[live..live + q] {
                    *v = std::f64::consts::SQRT_2 * rng.sample::<f64, _>(StandardNormal);
                }
            }
            VectorModel::GaussianCov(_) => {
                out.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
                self.colour(out);
            }
            VectorModel::WeakDependent(_) => {
                let c = self.ma.as_deref().expect("weak-ma coefficients");
                let lag = c.len() - 1;
                // innovations ε_{1−J}, …, ε_p
                let eps: Vec<f64> = (0..p + lag)
                    .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
                    .collect();
                for (k, v) in out.iter_mut().enumerate() {
                    *v = c.iter().enumerate().map(|(j, cj)| cj * eps[k + lag - j]).sum();
                }
            }
        }
    }

    /// Multiplies `v` by `Σ^{1/2}` of a Gaussian-covariance sampler in place
    /// (no-op for isotropic samplers).
    pub fn colour(&self, v: &mut [f64]) {
        match &self.root {
            None => {}
            Some(Root::Diagonal(d)) => v.iter_mut().zip(d).for_each(|(x, s)| *x *= s),
            Some(Root::Dense(r)) => {
                let y = r.as_matrix().mat_vec(v);
                v.copy_from_slice(&y);
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut out = vec![0.0; self.p];
        self.sample_into(rng, &mut out);
        out
    }

    /// `p×n` data matrix whose column `k` is drawn from `key.column(k)`.
    pub fn data_matrix(&self, n: usize, key: &StreamKey) -> Result<Matrix> {
        if n == 0 {
            return Err(Error::Domain("need n >= 1 observations".into()));
        }
        let p = self.p;
        let mut obs = Matrix::zeros(n, p);
        for k in 0..n {
            self.sample_into(&mut key.column(k as u64), obs.row_mut(k));
        }
        Ok(obs.transpose())
    }
}

/// Exact `Σ_p = E x xᵀ` of the model at dimension `p`.
pub fn population_covariance(model: &VectorModel, p: usize) -> Result<SymMatrix> {
    model.validate(p)?;
    model.covariance_spec().matrix(p)
}

/// One draw of `x_p`.
pub fn sample_vector<R: Rng + ?Sized>(model: &VectorModel, p: usize, rng: &mut R) -> Result<Vec<f64>> {
    Ok(model.sampler(p)?.sample(rng))
}

/// `p×n` matrix of i.i.d. columns; column `k` uses stream `key.column(k)`.
pub fn sample_data_matrix(model: &VectorModel, p: usize, n: usize, key: &StreamKey) -> Result<Matrix> {
    model.sampler(p)?.data_matrix(n, key)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key() -> StreamKey {
        StreamKey::new(17, "ensembles")
    }

    #[test]
    fn grammar_round_trips() {
        for s in [
            "iid-gauss",
            "iid-rademacher",
            "sparse-spike",
            "block-xi",
            "gauss-cov:identity",
            "gauss-cov:spiked:2,5.5",
            "gauss-cov:spiked:1,p",
            "gauss-cov:toeplitz:0.5",
            "gauss-cov:banded:1,0.5",
            "weak-ma:1,1",
            "weak-ma:0.8,-0.3,0.1",
        ] {
            let m: VectorModel = s.parse().unwrap();
            assert_eq!(m.to_string(), s);
            assert_eq!(m.to_string().parse::<VectorModel>().unwrap(), m);
        }
    }

    #[test]
    fn parse_errors_name_the_token() {
        match "iid-cauchy".parse::<VectorModel>() {
            Err(Error::Parse { token, .. }) => assert_eq!(token, "iid-cauchy"),
            other => panic!("unexpected {other:?}"),
        }
        match "gauss-cov:toeplitz:abc".parse::<VectorModel>() {
            Err(Error::Parse { token, .. }) => assert_eq!(token, "abc"),
            other => panic!("unexpected {other:?}"),
        }
        assert!("weak-ma:0,0".parse::<VectorModel>().is_err());
    }

    #[test]
    fn rademacher_entries_are_signs() {
        let x = sample_vector(&VectorModel::IidRademacher, 64, &mut key().stream()).unwrap();
        assert!(x.iter().all(|&v| v == 1.0 || v == -1.0));
    }

    #[test]
    fn block_xi_has_one_dead_half() {
        let s = VectorModel::BlockXi.sampler(32).unwrap();
        for c in 0..50 {
            let x = s.sample(&mut key().column(c));
            let first = x[..16].iter().all(|&v| v == 0.0);
            let second = x[16..].iter().all(|&v| v == 0.0);
            assert!(first ^ second);
        }
        assert!(matches!(VectorModel::BlockXi.sampler(7), Err(Error::Domain(_))));
    }

    #[test]
    fn population_covariances() {
        let i8 = SymMatrix::identity(8);
        for m in [VectorModel::IidGaussian, VectorModel::BlockXi, VectorModel::SparseSpike] {
            assert_eq!(population_covariance(&m, 8).unwrap(), i8);
        }
        let t0 = VectorModel::GaussianCov(CovSpec::Toeplitz { phi: 0.0 });
        assert_eq!(population_covariance(&t0, 8).unwrap(), i8);
        let ma = VectorModel::weak_ma(vec![1.0, 1.0]).unwrap();
        let s = population_covariance(&ma, 5).unwrap();
        for i in 0..5usize {
            for j in 0..5 {
                let want = match i.abs_diff(j) {
                    0 => 1.0,
                    1 => 0.5,
                    _ => 0.0,
                };
                assert!((s[(i, j)] - want).abs() < 1e-15);
            }
        }
        let spiked = VectorModel::GaussianCov(CovSpec::Spiked { count: 1, size: SpikeSize::Dimension });
        assert_eq!(population_covariance(&spiked, 10).unwrap()[(0, 0)], 10.0);
    }

    #[test]
    fn data_matrix_columns_follow_streams() {
        let m = VectorModel::IidGaussian;
        let x = sample_data_matrix(&m, 6, 1, &key()).unwrap();
        let v = sample_vector(&m, 6, &mut key().column(0)).unwrap();
        assert_eq!(x.column(0), v);
        let a = sample_data_matrix(&m, 6, 9, &key()).unwrap();
        let b = sample_data_matrix(&m, 6, 9, &key()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn isotropy_flags() {
        assert!(VectorModel::BlockXi.is_isotropic());
        assert!(VectorModel::weak_ma(vec![2.0]).unwrap().is_isotropic());
        assert!(!VectorModel::weak_ma(vec![1.0, 1.0]).unwrap().is_isotropic());
        assert!(!"gauss-cov:toeplitz:0.5".parse::<VectorModel>().unwrap().is_isotropic());
    }
}
