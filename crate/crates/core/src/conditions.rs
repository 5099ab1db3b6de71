//! Monte-Carlo diagnostics for the hypotheses of the MP theorem: the
//! Lindeberg functional, quadratic-form concentration over families of
//! test matrices, the `tr(Σ²)/p²` statistic with its Chebyshev bound, and
//! the projected-spectrum (MP-property) trial.
//!
//! Trial `t` of every estimator draws from `key.trial(t)`, and trials are
//! reduced in index order, so results do not depend on thread count.

use std::fmt;

use rand::Rng;
use rayon::prelude::*;

use crate::ensembles::{population_covariance, Sampler, VectorModel};
use crate::error::{Error, Result};
use crate::matcore::{dot, haar_frame, spectral_norm, ComplexPoint, Matrix, ProjectorFrame, SymMatrix};
use crate::mp_law::MpLaw;
use crate::rng::StreamKey;
use crate::spectra::{esd_psd, ks_distance, project_data, sample_covariance};

/// Monte-Carlo mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
    pub trials: usize,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let t = xs.len();
        if t == 0 {
            return Self { value: f64::NAN, se: f64::NAN, trials: 0 };
        }
        let mean = xs.iter().sum::<f64>() / t as f64;
        let se = if t > 1 {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (t - 1) as f64;
            (var / t as f64).sqrt()
        } else {
            0.0
        };
        Self { value: mean, se, trials: t }
    }

    /// Frequency `hits/trials` with binomial SE `√(f(1−f)/T)`.
    pub fn frequency(hits: usize, trials: usize) -> Self {
        let f = hits as f64 / trials as f64;
        Self {
            value: f,
            se: (f * (1.0 - f) / trials as f64).sqrt(),
            trials,
        }
    }
}

fn run_trials<T: Send>(
    trials: usize,
    key: &StreamKey,
    f: impl Fn(StreamKey) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    (0..trials as u64)
        .into_par_iter()
        .map(|t| f(key.trial(t)))
        .collect()
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::Domain(format!("{name} must be > 0, got {v}")));
    }
    Ok(())
}

fn check_trials(trials: usize) -> Result<()> {
    if trials == 0 {
        return Err(Error::Domain("need at least one trial".into()));
    }
    Ok(())
}

/// `L_p(ε) = (1/p) Σ_k E X_k² 1(|X_k| > ε√p)`, one vector per trial.
pub fn lindeberg_stat(
    model: &VectorModel,
    p: usize,
    eps: f64,
    trials: usize,
    key: &StreamKey,
) -> Result<Estimate> {
    check_positive("epsilon", eps)?;
    check_trials(trials)?;
    let sampler = model.sampler(p)?;
    let values = run_trials(trials, key, |k| Ok(lindeberg_value(&sampler.sample(&mut k.stream()), eps)))?;
    Ok(Estimate::from_samples(&values))
}

/// `(1/p) Σ_k x_k² 1(|x_k| > ε√p)` for one vector.
pub fn lindeberg_value(x: &[f64], eps: f64) -> f64 {
    let p = x.len() as f64;
    let cut = eps * p.sqrt();
    x.iter().filter(|v| v.abs() > cut).fold(0.0, |acc, v| acc + v * v) / p
}

/// A symmetric test matrix `A` in a form cheap to evaluate `xᵀAx` with.
#[derive(Clone, Debug)]
pub enum TestMatrix {
    Zero(usize),
    Identity(usize),
    /// `Cᵀ C` for a frame `C`.
    Projector(ProjectorFrame),
    Dense(SymMatrix),
}

impl TestMatrix {
    pub fn dim(&self) -> usize {
        match self {
            TestMatrix::Zero(p) | TestMatrix::Identity(p) => *p,
            TestMatrix::Projector(c) => c.p(),
            TestMatrix::Dense(a) => a.dim(),
        }
    }

    pub fn quad(&self, x: &[f64]) -> f64 {
        match self {
            TestMatrix::Zero(_) => 0.0,
            TestMatrix::Identity(_) => dot(x, x),
            TestMatrix::Projector(c) => c.as_matrix().mat_vec(x).iter().map(|v| v * v).sum(),
            TestMatrix::Dense(a) => a.quadratic_form(x),
        }
    }

    pub fn to_sym(&self) -> SymMatrix {
        match self {
            TestMatrix::Zero(p) => SymMatrix::from_diag(&vec![0.0; *p]).expect("finite"),
            TestMatrix::Identity(p) => SymMatrix::identity(*p),
            TestMatrix::Projector(c) => c.projector(),
            TestMatrix::Dense(a) => a.clone(),
        }
    }
}

/// `E xxᵀ`, stored as compactly as its structure allows.
#[derive(Clone, Debug)]
enum Centering {
    Identity,
    Diagonal(Vec<f64>),
    Dense(SymMatrix),
}

impl Centering {
    fn of(model: &VectorModel, p: usize) -> Result<Self> {
        if model.is_isotropic() {
            return Ok(Centering::Identity);
        }
        let sigma = population_covariance(model, p)?;
        Ok(if sigma.is_diagonal() {
            Centering::Diagonal(sigma.diagonal())
        } else {
            Centering::Dense(sigma)
        })
    }

    /// `tr(Σ A)`.
    fn trace_with(&self, a: &TestMatrix) -> f64 {
        match (self, a) {
            (_, TestMatrix::Zero(_)) => 0.0,
            (Centering::Identity, TestMatrix::Identity(p)) => *p as f64,
            (Centering::Identity, TestMatrix::Projector(c)) => c.q() as f64,
            (Centering::Identity, TestMatrix::Dense(m)) => m.trace(),
            (Centering::Diagonal(d), TestMatrix::Identity(_)) => d.iter().sum(),
            (Centering::Diagonal(d), TestMatrix::Projector(c)) => (0..c.q())
                .map(|i| c.as_matrix().row(i).iter().zip(d).map(|(v, s)| v * v * s).sum::<f64>())
                .sum(),
            (Centering::Diagonal(d), TestMatrix::Dense(m)) => {
                m.diagonal().iter().zip(d).map(|(a, s)| a * s).sum()
            }
            (Centering::Dense(s), TestMatrix::Identity(_)) => s.trace(),
            (Centering::Dense(s), TestMatrix::Projector(c)) => (0..c.q())
                .map(|i| s.quadratic_form(c.as_matrix().row(i)))
                .sum(),
            (Centering::Dense(s), TestMatrix::Dense(m)) => s.trace_product(m),
        }
    }
}

/// Families of test matrices `A` for the quadratic-form statistic.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MatrixFamily {
    Identity,
    /// `CᵀC` for a Haar `q×p` frame, redrawn per trial.
    HaarProjector(usize),
    /// `diag(I_{p/2}, 0)`.
    FixedHalfProjector,
    /// `Qᵀ diag(u) Q` with Haar `Q`, `u` uniform on `[0, 1]` rescaled so `‖A‖ = 1`.
    RandomPsdUnitNorm,
    /// `Re (W − zI)⁻²` for `W = Qᵀ diag(λ) Q`, `λ` uniform on `[−2, 2]`.
    SquaredResolvent(ComplexPoint),
}

impl MatrixFamily {
    pub fn is_random(&self) -> bool {
        !matches!(self, MatrixFamily::Identity | MatrixFamily::FixedHalfProjector)
    }

    /// Bound `M` with `‖A‖ ≤ M` for every member.
    pub fn norm_bound(&self) -> f64 {
        match self {
            MatrixFamily::SquaredResolvent(z) => 1.0 / (z.im() * z.im()),
            _ => 1.0,
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, p: usize, rng: &mut R) -> Result<TestMatrix> {
        if p == 0 {
            return Err(Error::Domain("dimension must be >= 1".into()));
        }
        Ok(match self {
            MatrixFamily::Identity => TestMatrix::Identity(p),
            MatrixFamily::HaarProjector(q) => TestMatrix::Projector(haar_frame(*q, p, rng)?),
            MatrixFamily::FixedHalfProjector => {
                if p < 2 {
                    return Err(Error::Domain("half projector needs p >= 2".into()));
                }
                TestMatrix::Projector(ProjectorFrame::coordinate(p / 2, p)?)
            }
            MatrixFamily::RandomPsdUnitNorm => TestMatrix::Dense(random_psd_unit_norm(p, rng)?.matrix()),
            MatrixFamily::SquaredResolvent(z) => {
                let q = haar_frame(p, p, rng)?;
                let zc = z.to_complex();
                let d: Vec<f64> = (0..p)
                    .map(|_| {
                        let l: f64 = rng.random_range(-2.0..2.0);
                        ((l - zc) * (l - zc)).inv().re
                    })
                    .collect();
                TestMatrix::Dense(conjugate_diag(q.as_matrix(), &d))
            }
        })
    }
}

impl fmt::Display for MatrixFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatrixFamily::Identity => write!(f, "identity"),
            MatrixFamily::HaarProjector(q) => write!(f, "haar-projector:{q}"),
            MatrixFamily::FixedHalfProjector => write!(f, "fixed-half"),
            MatrixFamily::RandomPsdUnitNorm => write!(f, "random-psd"),
            MatrixFamily::SquaredResolvent(z) => write!(f, "squared-resolvent:{},{}", z.re(), z.im()),
        }
    }
}

impl std::str::FromStr for MatrixFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => return Ok(MatrixFamily::Identity),
            "fixed-half" => return Ok(MatrixFamily::FixedHalfProjector),
            "random-psd" => return Ok(MatrixFamily::RandomPsdUnitNorm),
            _ => {}
        }
        if let Some(q) = s.strip_prefix("haar-projector:") {
            let q = q.parse().map_err(|_| Error::parse(q, "expected a frame rank"))?;
            return Ok(MatrixFamily::HaarProjector(q));
        }
        if let Some(z) = s.strip_prefix("squared-resolvent:") {
            return Ok(MatrixFamily::SquaredResolvent(parse_point(z)?));
        }
        Err(Error::parse(s, "unknown matrix family"))
    }
}

/// `"re,im"` as a point of the upper half-plane.
pub fn parse_point(s: &str) -> Result<ComplexPoint> {
    let (re, im) = s
        .split_once(',')
        .ok_or_else(|| Error::parse(s, "expected re,im"))?;
    let re: f64 = re.trim().parse().map_err(|_| Error::parse(re, "expected a number"))?;
    let im: f64 = im.trim().parse().map_err(|_| Error::parse(im, "expected a number"))?;
    ComplexPoint::new(re, im)
}

/// `Qᵀ diag(d) Q` for a square `Q` with orthonormal rows.
fn conjugate_diag(q: &Matrix, d: &[f64]) -> SymMatrix {
    let qt = q.transpose();
    let mut scaled = qt.clone();
    for i in 0..scaled.rows() {
        scaled.row_mut(i).iter_mut().zip(d).for_each(|(v, s)| *v *= s);
    }
    SymMatrix::new(scaled.matmul_transpose(&qt).expect("square")).expect("finite")
}

/// A PSD matrix with known eigenpairs: rows of `basis` are eigenvectors,
/// `values` descending with `values[0] = 1`.
#[derive(Clone, Debug)]
pub struct RandomPsd {
    pub basis: ProjectorFrame,
    pub values: Vec<f64>,
}

impl RandomPsd {
    pub fn matrix(&self) -> SymMatrix {
        conjugate_diag(self.basis.as_matrix(), &self.values)
    }
}

/// Random PSD matrix with `‖A‖ = 1` and Haar eigenbasis.
pub fn random_psd_unit_norm<R: Rng + ?Sized>(p: usize, rng: &mut R) -> Result<RandomPsd> {
    let basis = haar_frame(p, p, rng)?;
    let mut values: Vec<f64> = (0..p).map(|_| rng.random::<f64>()).collect();
    values.sort_by(|a, b| b.total_cmp(a));
    let top = values[0].max(f64::MIN_POSITIVE);
    values.iter_mut().for_each(|v| *v /= top);
    Ok(RandomPsd { basis, values })
}

/// One realisation of `(xᵀAx − tr(ΣA))/p`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadformStat {
    pub value: f64,
    pub p: usize,
    pub model: String,
    pub family: String,
    pub seed: u64,
}

/// Draws one `x` from `key.stream()` and evaluates the centred quadratic form.
pub fn quadform_stat(model: &VectorModel, a: &TestMatrix, key: &StreamKey) -> Result<QuadformStat> {
    let p = a.dim();
    let sampler = model.sampler(p)?;
    let centre = Centering::of(model, p)?.trace_with(a);
    let x = sampler.sample(&mut key.stream());
    Ok(QuadformStat {
        value: (a.quad(&x) - centre) / p as f64,
        p,
        model: model.to_string(),
        family: match a {
            TestMatrix::Zero(_) => "zero".into(),
            TestMatrix::Identity(_) => "identity".into(),
            TestMatrix::Projector(_) => "projector".into(),
            TestMatrix::Dense(_) => "dense".into(),
        },
        seed: key.seed(),
    })
}

/// Prepared quadratic-form experiment: sampler and `Σ` computed once.
pub struct QuadformProbe {
    sampler: Sampler,
    centering: Centering,
}

impl QuadformProbe {
    pub fn new(model: &VectorModel, p: usize) -> Result<Self> {
        Ok(Self {
            sampler: model.sampler(p)?,
            centering: Centering::of(model, p)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.sampler.dim()
    }

    /// `A` together with `tr(ΣA)`, for reuse across trials.
    pub fn centre(&self, a: TestMatrix) -> Result<CentredMatrix> {
        if a.dim() != self.dim() {
            return Err(Error::dims(self.dim(), a.dim()));
        }
        let trace = self.centering.trace_with(&a);
        Ok(CentredMatrix { matrix: a, trace })
    }

    /// `(xᵀAx − tr(ΣA))/p` with `x` drawn from `rng`.
    pub fn stat<R: Rng + ?Sized>(&self, a: &TestMatrix, rng: &mut R) -> Result<f64> {
        let c = self.centre(a.clone())?;
        Ok(self.centred_stat(&c, rng))
    }

    fn centred_stat<R: Rng + ?Sized>(&self, a: &CentredMatrix, rng: &mut R) -> f64 {
        let x = self.sampler.sample(rng);
        (a.matrix.quad(&x) - a.trace) / self.dim() as f64
    }

    /// Per-trial statistics; the matrix comes from `key.trial(t).derive("matrix")`
    /// (fixed families draw it once from `key.derive("matrix")`) and `x` from
    /// `key.trial(t).derive("x")`.
    pub fn trials(&self, family: &MatrixFamily, trials: usize, key: &StreamKey) -> Result<Vec<f64>> {
        check_trials(trials)?;
        let fixed = if family.is_random() {
            None
        } else {
            Some(self.centre(family.draw(self.dim(), &mut key.derive("matrix").stream())?)?)
        };
        run_trials(trials, key, |k| self.trial(family, fixed.as_ref(), &k))
    }

    /// One trial of [`trials`](Self::trials) for an already derived trial key.
    pub fn trial(&self, family: &MatrixFamily, fixed: Option<&CentredMatrix>, key: &StreamKey) -> Result<f64> {
        match fixed {
            Some(a) => Ok(self.centred_stat(a, &mut key.derive("x").stream())),
            None => {
                let a = self.centre(family.draw(self.dim(), &mut key.derive("matrix").stream())?)?;
                Ok(self.centred_stat(&a, &mut key.derive("x").stream()))
            }
        }
    }
}

/// A test matrix with its centring constant `tr(ΣA)` precomputed.
#[derive(Clone, Debug)]
pub struct CentredMatrix {
    pub matrix: TestMatrix,
    pub trace: f64,
}

/// `P(|stat| > ε)` over `trials` draws, matrices redrawn per trial for random families.
pub fn concentration_probe(
    model: &VectorModel,
    family: &MatrixFamily,
    p: usize,
    eps: f64,
    trials: usize,
    key: &StreamKey,
) -> Result<Estimate> {
    check_positive("epsilon", eps)?;
    let stats = QuadformProbe::new(model, p)?.trials(family, trials, key)?;
    Ok(Estimate::frequency(stats.iter().filter(|s| s.abs() > eps).count(), trials))
}

/// Exceedance of a PSD `A` with `‖A‖ ≤ 1` next to the exceedance of the
/// worst projector in its spectral rank sweep `P_k` (top-`k` eigenvectors).
///
/// `A = Σ_k (λ_k − λ_{k+1}) P_k` with weights summing to `λ_1 ≤ 1`, so per
/// trial `|stat(A)| ≤ max_k |stat(P_k)|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RankSweep {
    pub matrix: Estimate,
    pub sweep: Estimate,
    /// Trials in which `|stat(A)| > max_k |stat(P_k)|` beyond round-off.
    pub violations: usize,
}

pub fn rank_sweep_check(
    model: &VectorModel,
    p: usize,
    eps: f64,
    trials: usize,
    key: &StreamKey,
) -> Result<RankSweep> {
    check_positive("epsilon", eps)?;
    check_trials(trials)?;
    let sampler = model.sampler(p)?;
    let centering = Centering::of(model, p)?;
    let pf = p as f64;
    let rows = run_trials(trials, key, |k| {
        let a = random_psd_unit_norm(p, &mut k.derive("matrix").stream())?;
        let x = sampler.sample(&mut k.derive("x").stream());
        let basis = a.basis.as_matrix();
        let mut stat_a = 0.0;
        let mut cum = 0.0;
        let mut worst: f64 = 0.0;
        for (i, &l) in a.values.iter().enumerate() {
            let v = basis.row(i);
            let u = dot(v, &x);
            let s = match &centering {
                Centering::Identity => 1.0,
                Centering::Diagonal(d) => v.iter().zip(d).map(|(a, b)| a * a * b).sum(),
                Centering::Dense(m) => m.quadratic_form(v),
            };
            let term = (u * u - s) / pf;
            stat_a += l * term;
            cum += term;
            worst = worst.max(cum.abs());
        }
        Ok((stat_a.abs(), worst))
    })?;
    let slack = 1e-12;
    Ok(RankSweep {
        matrix: Estimate::frequency(rows.iter().filter(|r| r.0 > eps).count(), trials),
        sweep: Estimate::frequency(rows.iter().filter(|r| r.1 > eps).count(), trials),
        violations: rows.iter().filter(|r| r.0 > r.1 + slack).count(),
    })
}

/// `tr(Σ²)/p²`.
pub fn a3_stat(sigma: &SymMatrix) -> f64 {
    let p = sigma.dim() as f64;
    sigma.trace_product(sigma) / (p * p)
}

/// Observed `P(|stat| > ε)` for a Gaussian model against `2‖A‖² tr(Σ²)/(εp)²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChebyshevCheck {
    pub observed: Estimate,
    pub bound: f64,
}

impl ChebyshevCheck {
    /// `observed ≤ bound + 4·SE`.
    pub fn holds(&self) -> bool {
        self.observed.value <= self.bound + 4.0 * self.observed.se
    }
}

pub fn chebyshev_bound_check(
    model: &VectorModel,
    a: &SymMatrix,
    eps: f64,
    trials: usize,
    key: &StreamKey,
) -> Result<ChebyshevCheck> {
    if !model.is_gaussian() {
        return Err(Error::Domain(format!(
            "the variance bound holds for Gaussian models only, got {model}"
        )));
    }
    check_positive("epsilon", eps)?;
    let p = a.dim();
    let sigma = population_covariance(model, p)?;
    let norm = spectral_norm(a.as_matrix())?;
    let bound = 2.0 * norm * norm * sigma.trace_product(&sigma) / (eps * p as f64).powi(2);
    let probe = QuadformProbe::new(model, p)?;
    let tm = probe.centre(TestMatrix::Dense(a.clone()))?;
    let stats = run_trials(trials.max(1), key, |k| probe.trial(&MatrixFamily::Identity, Some(&tm), &k))?;
    Ok(ChebyshevCheck {
        observed: Estimate::frequency(stats.iter().filter(|s| s.abs() > eps).count(), stats.len()),
        bound,
    })
}

/// Frame used in the projected-spectrum trial.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FrameMode {
    Haar,
    /// The first `q` coordinates.
    FixedHalf,
}

impl fmt::Display for FrameMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FrameMode::Haar => "haar",
            FrameMode::FixedHalf => "fixed-half",
        })
    }
}

impl std::str::FromStr for FrameMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "haar" => Ok(FrameMode::Haar),
            "fixed-half" => Ok(FrameMode::FixedHalf),
            _ => Err(Error::parse(s, "expected haar or fixed-half")),
        }
    }
}

/// KS distance between the ESD of `C Σ̂ C ᵀ` and `μ_{q/n}`.
///
/// Data come from `key.derive("x")`, a Haar frame from `key.derive("frame")`.
/// `C Σ̂ Cᵀ` is formed as the sample covariance of `C X`.
pub fn mp_property_trial(
    model: &VectorModel,
    p: usize,
    n: usize,
    q: usize,
    key: &StreamKey,
    mode: FrameMode,
) -> Result<f64> {
    projected_ks(&model.sampler(p)?, n, q, key, mode)
}

/// [`mp_property_trial`] with a prepared sampler.
pub fn projected_ks(sampler: &Sampler, n: usize, q: usize, key: &StreamKey, mode: FrameMode) -> Result<f64> {
    let p = sampler.dim();
    if q == 0 || q > p {
        return Err(Error::Domain(format!("need 1 <= q <= p, got q={q}, p={p}")));
    }
    let x = sampler.data_matrix(n, &key.derive("x"))?;
    let frame = match mode {
        FrameMode::Haar => haar_frame(q, p, &mut key.derive("frame").stream())?,
        FrameMode::FixedHalf => ProjectorFrame::coordinate(q, p)?,
    };
    let y = if q == p && mode == FrameMode::FixedHalf {
        x
    } else {
        project_data(&frame, &x)?
    };
    let e = esd_psd(&sample_covariance(&y)?)?;
    Ok(ks_distance(&e, &MpLaw::for_dims(q, n)?))
}

/// `(xᵀx − p)/p` for an isotropic model, `x` from `key.stream()`.
pub fn e9_stat(model: &VectorModel, p: usize, key: &StreamKey) -> Result<f64> {
    if !model.is_isotropic() {
        return Err(Error::Domain(format!("norm statistic needs an isotropic model, got {model}")));
    }
    let x = model.sampler(p)?.sample(&mut key.stream());
    Ok((dot(&x, &x) - p as f64) / p as f64)
}
