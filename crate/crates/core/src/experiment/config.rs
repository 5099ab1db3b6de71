use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Parser, ValueEnum};

use crate::conditions::{parse_point, FrameMode, MatrixFamily};
use crate::ensembles::{CovSpec, VectorModel};
use crate::equivalence::{OffsetSpec, ShiftSpec};
use crate::error::{Error, Result};
use crate::matcore::ComplexPoint;

/// Largest dimension the runner accepts.
pub const MAX_DIM: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, ValueEnum)]
pub enum ExperimentKind {
    /// KS distance between the sample-covariance ESD and the MP law.
    Esd,
    /// Lindeberg, quadratic-form, norm and Chebyshev diagnostics.
    Conditions,
    /// KS distance of the projected sample covariance.
    MpProperty,
    /// Resolvent gap between a model and its Gaussian twin.
    Equivalence,
    /// Support, moments and Stieltjes transform of the MP law.
    LawTables,
    /// Randomised linear-algebra invariant suite.
    Facts,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Esd => "esd",
            ExperimentKind::Conditions => "conditions",
            ExperimentKind::MpProperty => "mp-property",
            ExperimentKind::Equivalence => "equivalence",
            ExperimentKind::LawTables => "law-tables",
            ExperimentKind::Facts => "facts",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

/// Per-trial statistic of the `conditions` experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ConditionStat {
    /// `(1/p) Σ x_k² 1(|x_k| > ε√p)`.
    Lindeberg,
    /// `(xᵀAx − tr(ΣA))/p` for `A` from `--family`.
    Quadform,
    /// `(xᵀx − p)/p`.
    Norm,
    /// Quadratic form of a Gaussian model against the variance bound.
    Chebyshev,
}

impl ConditionStat {
    pub fn name(self) -> &'static str {
        match self {
            ConditionStat::Lindeberg => "lindeberg",
            ConditionStat::Quadform => "quadform",
            ConditionStat::Norm => "norm",
            ConditionStat::Chebyshev => "chebyshev",
        }
    }
}

/// Column covariances cycled over the `n` columns, written `c0/c1/…`.
#[derive(Clone, Debug, PartialEq)]
pub struct HeteroPattern(pub Vec<CovSpec>);

impl HeteroPattern {
    pub fn expand(&self, n: usize) -> Vec<CovSpec> {
        (0..n).map(|k| self.0[k % self.0.len()].clone()).collect()
    }
}

impl fmt::Display for HeteroPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join("/"))
    }
}

impl FromStr for HeteroPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let covs = s.split('/').map(str::parse).collect::<Result<Vec<CovSpec>>>()?;
        Ok(Self(covs))
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "mplab",
    version,
    about = "Marchenko-Pastur laboratory: batch experiments with CSV/JSON output",
    after_help = "Set MPLAB_THREADS to cap the worker pool. Exit status is 0 iff every \
                  matching acceptance threshold is met."
)]
struct Args {
    /// Experiment to run.
    #[arg(value_enum)]
    experiment: ExperimentKind,
    /// Vector model, e.g. iid-gauss, sparse-spike, block-xi, gauss-cov:toeplitz:0.5, weak-ma:1,0.5.
    #[arg(long, default_value = "iid-gauss")]
    model: String,
    #[arg(long, default_value_t = 64)]
    p: usize,
    #[arg(long, default_value_t = 128)]
    n: usize,
    /// Frame rank for mp-property (default p/2).
    #[arg(long)]
    q: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    eps: f64,
    /// Resolvent argument `re,im`; repeatable.
    #[arg(long = "z", allow_hyphen_values = true)]
    z: Vec<String>,
    /// Aspect ratio for law-tables; repeatable.
    #[arg(long)]
    rho: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Record file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// haar or fixed-half.
    #[arg(long, default_value = "haar")]
    frame: String,
    #[arg(long, value_enum, default_value_t = ConditionStat::Quadform)]
    stat: ConditionStat,
    /// identity, fixed-half, haar-projector:q, random-psd or squared-resolvent:re,im.
    #[arg(long, default_value = "identity")]
    family: String,
    /// Shift B: none, identity:beta or random-psd:seed.
    #[arg(long, default_value = "none")]
    shift: String,
    /// Offset C: none or constant:gamma.
    #[arg(long, default_value = "none")]
    offset: String,
    /// Column covariances cycled over columns, e.g. identity/toeplitz:0.5.
    #[arg(long)]
    hetero: Option<String>,
    /// Write the first trial's data matrix in binary form.
    #[arg(long)]
    dump_matrix: Option<PathBuf>,
    /// Summary JSON file (stderr when absent).
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Thresholds TOML replacing the built-in table.
    #[arg(long)]
    thresholds: Option<PathBuf>,
    /// Fill the wall_ms column (makes output timing-dependent).
    #[arg(long)]
    timing: bool,
}

/// Fully parsed and validated run configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub model: VectorModel,
    pub p: usize,
    pub n: usize,
    pub q: Option<usize>,
    pub eps: f64,
    pub z: Vec<ComplexPoint>,
    pub rho: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub frame: FrameMode,
    pub stat: ConditionStat,
    pub family: MatrixFamily,
    pub shift: ShiftSpec,
    pub offset: OffsetSpec,
    pub hetero: Option<HeteroPattern>,
    pub dump_matrix: Option<PathBuf>,
    pub summary: Option<PathBuf>,
    pub thresholds: Option<PathBuf>,
    pub timing: bool,
}

impl ExperimentConfig {
    /// Defaults for `experiment`, as if no flag were given.
    pub fn new(experiment: ExperimentKind) -> Self {
        Self::from_args([experiment.name()]).expect("defaults are valid")
    }

    /// Parses the process arguments; prints help or usage errors and exits
    /// like any clap program.
    pub fn from_env() -> Result<Self> {
        Self::from_raw(Args::parse())
    }

    /// Parses an argument list (without the program name).
    pub fn from_args<I, T>(args: I) -> Result<Self>
    where
        I: IntoIterator<Item = T>,
        T: Into<std::ffi::OsString> + Clone,
    {
        let argv = std::iter::once(std::ffi::OsString::from("mplab"))
            .chain(args.into_iter().map(Into::into));
        let raw = Args::try_parse_from(argv).map_err(|e| Error::InvalidInput(e.to_string()))?;
        Self::from_raw(raw)
    }

    fn from_raw(a: Args) -> Result<Self> {
        let cfg = Self {
            experiment: a.experiment,
            model: a.model.parse()?,
            p: a.p,
            n: a.n,
            q: a.q,
            eps: a.eps,
            z: a.z.iter().map(|s| parse_point(s)).collect::<Result<_>>()?,
            rho: a.rho,
            trials: a.trials,
            seed: a.seed,
            out: a.out,
            format: a.format,
            frame: a.frame.parse()?,
            stat: a.stat,
            family: a.family.parse()?,
            shift: a.shift.parse()?,
            offset: a.offset.parse()?,
            hetero: a.hetero.as_deref().map(str::parse).transpose()?,
            dump_matrix: a.dump_matrix,
            summary: a.summary,
            thresholds: a.thresholds,
            timing: a.timing,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Argument list that parses back to an identical config.
    pub fn to_args(&self) -> Vec<String> {
        let mut v = vec![
            self.experiment.name().to_string(),
            format!("--model={}", self.model),
            format!("--p={}", self.p),
            format!("--n={}", self.n),
        ];
        if let Some(q) = self.q {
            v.push(format!("--q={q}"));
        }
        v.push(format!("--eps={}", self.eps));
        for z in &self.z {
            v.push(format!("--z={},{}", z.re(), z.im()));
        }
        for r in &self.rho {
            v.push(format!("--rho={r}"));
        }
        v.push(format!("--trials={}", self.trials));
        v.push(format!("--seed={}", self.seed));
        if let Some(o) = &self.out {
            v.push(format!("--out={}", o.display()));
        }
        v.push(format!("--format={}", self.format));
        v.push(format!("--frame={}", self.frame));
        v.push(format!("--stat={}", self.stat.name()));
        v.push(format!("--family={}", self.family));
        v.push(format!("--shift={}", self.shift));
        v.push(format!("--offset={}", self.offset));
        if let Some(h) = &self.hetero {
            v.push(format!("--hetero={h}"));
        }
        if let Some(d) = &self.dump_matrix {
            v.push(format!("--dump-matrix={}", d.display()));
        }
        if let Some(s) = &self.summary {
            v.push(format!("--summary={}", s.display()));
        }
        if let Some(t) = &self.thresholds {
            v.push(format!("--thresholds={}", t.display()));
        }
        if self.timing {
            v.push("--timing".into());
        }
        v
    }

    /// Frame rank: `--q`, else `p/2` (at least 1).
    pub fn frame_rank(&self) -> usize {
        self.q.unwrap_or((self.p / 2).max(1))
    }

    /// `--z` points, or the default grid `{i, 1+i, −1+0.5i, 2i}`.
    pub fn z_points(&self) -> Vec<ComplexPoint> {
        if !self.z.is_empty() {
            return self.z.clone();
        }
        [(0.0, 1.0), (1.0, 1.0), (-1.0, 0.5), (0.0, 2.0)]
            .iter()
            .map(|&(re, im)| ComplexPoint::new(re, im).expect("upper half-plane"))
            .collect()
    }

    /// `re,im` points joined by `;`, or `default` for the built-in grid.
    fn z_tag(&self) -> String {
        if self.z.is_empty() {
            return "default".into();
        }
        let parts: Vec<String> = self.z.iter().map(|z| format!("{},{}", z.re(), z.im())).collect();
        parts.join(";")
    }

    /// `--rho` values, or `{0.1, 0.5, 1, 2, 4}`.
    pub fn rho_values(&self) -> Vec<f64> {
        if self.rho.is_empty() {
            vec![0.1, 0.5, 1.0, 2.0, 4.0]
        } else {
            self.rho.clone()
        }
    }

    /// Checks every dimension constraint before any work is dispatched.
    pub fn validate(&self) -> Result<()> {
        if self.p > MAX_DIM || self.n > 16 * MAX_DIM {
            return Err(Error::Refused(format!(
                "p = {}, n = {} exceed the caps p <= {MAX_DIM}, n <= {}",
                self.p,
                self.n,
                16 * MAX_DIM
            )));
        }
        if self.trials == 0 {
            return Err(Error::InvalidInput("--trials must be >= 1".into()));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::InvalidInput(format!("--eps must be > 0, got {}", self.eps)));
        }
        if let Some(&r) = self.rho.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
            return Err(Error::InvalidInput(format!("--rho must be > 0, got {r}")));
        }
        let needs_data = !matches!(
            self.experiment,
            ExperimentKind::LawTables | ExperimentKind::Facts
        );
        if needs_data {
            if self.n == 0 {
                return Err(Error::InvalidInput("--n must be >= 1".into()));
            }
            self.model.validate(self.p)?;
        }
        match self.experiment {
            ExperimentKind::MpProperty => {
                let q = self.frame_rank();
                if q == 0 || q > self.p {
                    return Err(Error::Domain(format!("need 1 <= q <= p, got q={q}, p={}", self.p)));
                }
            }
            ExperimentKind::Conditions => match self.stat {
                ConditionStat::Chebyshev if !self.model.is_gaussian() => {
                    return Err(Error::Domain(format!(
                        "the variance bound holds for Gaussian models only, got {}",
                        self.model
                    )));
                }
                ConditionStat::Norm if !self.model.is_isotropic() => {
                    return Err(Error::Domain(format!(
                        "norm statistic needs an isotropic model, got {}",
                        self.model
                    )));
                }
                _ => {
                    if let MatrixFamily::HaarProjector(q) = self.family {
                        if q == 0 || q > self.p {
                            return Err(Error::Domain(format!("haar projector rank {q} not in 1..=p")));
                        }
                    }
                }
            },
            ExperimentKind::Equivalence => {
                if self.hetero.is_some() && !self.model.is_isotropic() {
                    return Err(Error::Domain(format!(
                        "heterogeneous columns colour an isotropic model, got {}",
                        self.model
                    )));
                }
                if let Some(h) = &self.hetero {
                    for c in &h.0 {
                        c.matrix(1)?;
                    }
                }
            }
            _ => {}
        }
        if self.dump_matrix.is_some()
            && !matches!(
                self.experiment,
                ExperimentKind::Esd | ExperimentKind::MpProperty | ExperimentKind::Equivalence
            )
        {
            return Err(Error::InvalidInput(format!(
                "--dump-matrix is not available for {}",
                self.experiment
            )));
        }
        Ok(())
    }

    /// `key=value` tags that threshold rules match against.
    pub fn tags(&self) -> Vec<(&'static str, String)> {
        let mut t = vec![
            ("experiment", self.experiment.name().to_string()),
            ("model", self.model.to_string()),
            ("p", self.p.to_string()),
            ("n", self.n.to_string()),
            ("eps", self.eps.to_string()),
            ("frame", self.frame.to_string()),
            ("stat", self.stat.name().to_string()),
            ("family", self.family.to_string()),
            ("shift", self.shift.to_string()),
            ("offset", self.offset.to_string()),
            ("hetero", self.hetero.as_ref().map_or("none".into(), ToString::to_string)),
            ("z", self.z_tag()),
        ];
        if self.experiment == ExperimentKind::MpProperty {
            t.push(("q", self.frame_rank().to_string()));
        }
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        for k in ExperimentKind::value_variants() {
            let cfg = ExperimentConfig::new(*k);
            assert_eq!(ExperimentConfig::from_args(cfg.to_args()).unwrap(), cfg);
        }
    }

    #[test]
    fn full_config_round_trips() {
        let cfg = ExperimentConfig::from_args([
            "equivalence",
            "--model",
            "iid-rademacher",
            "--p",
            "32",
            "--n",
            "64",
            "--z",
            "-1,0.5",
            "--z=0.25,2",
            "--shift",
            "identity:0.5",
            "--offset",
            "constant:1",
            "--hetero",
            "identity/toeplitz:0.5",
            "--format",
            "json",
            "--timing",
        ])
        .unwrap();
        assert_eq!(cfg.z.len(), 2);
        assert_eq!(ExperimentConfig::from_args(cfg.to_args()).unwrap(), cfg);
    }

    #[test]
    fn oversized_p_is_refused() {
        let r = ExperimentConfig::from_args(["esd", "--p", "5000"]);
        assert!(matches!(r, Err(Error::Refused(_))));
    }

    #[test]
    fn bad_model_names_token() {
        match ExperimentConfig::from_args(["esd", "--model", "gauss-cov:wishart:3"]) {
            Err(Error::Parse { token, .. }) => assert_eq!(token, "wishart:3"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn constraints_checked_before_dispatch() {
        assert!(ExperimentConfig::from_args(["esd", "--model", "block-xi", "--p", "7"]).is_err());
        assert!(ExperimentConfig::from_args(["mp-property", "--p", "8", "--q", "9"]).is_err());
        assert!(ExperimentConfig::from_args(["conditions", "--stat", "chebyshev", "--model", "block-xi"]).is_err());
        assert!(ExperimentConfig::from_args(["facts", "--dump-matrix", "x.bin"]).is_err());
    }
}
