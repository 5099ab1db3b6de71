use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The acceptance table shipped with the crate.
pub const BUILTIN: &str = include_str!("../../thresholds.toml");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Op {
    Le,
    Ge,
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Op::Le => "<=",
            Op::Ge => ">=",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rule {
    /// Config tags that must all match (see `ExperimentConfig::tags`).
    #[serde(default)]
    pub when: BTreeMap<String, String>,
    pub metric: String,
    pub op: Op,
    pub bound: f64,
}

impl Rule {
    fn applies(&self, tags: &[(&str, String)]) -> bool {
        self.when
            .iter()
            .all(|(k, v)| tags.iter().any(|(tk, tv)| tk == k && tv == v))
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    pub version: u32,
    #[serde(default, rename = "rule")]
    pub rules: Vec<Rule>,
}

/// Outcome of one rule against a run's metrics.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub metric: String,
    pub op: Op,
    pub bound: f64,
    /// `None` when the run did not produce the metric (counts as a failure).
    pub observed: Option<f64>,
    pub passed: bool,
}

impl Thresholds {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidInput(format!("thresholds: {e}")))
    }

    pub fn builtin() -> Self {
        Self::parse(BUILTIN).expect("built-in thresholds parse")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn evaluate(&self, tags: &[(&str, String)], metrics: &BTreeMap<String, f64>) -> Vec<Check> {
        self.rules
            .iter()
            .filter(|r| r.applies(tags))
            .map(|r| {
                let observed = metrics.get(&r.metric).copied();
                let passed = match (observed, r.op) {
                    (Some(v), Op::Le) => v <= r.bound,
                    (Some(v), Op::Ge) => v >= r.bound,
                    (None, _) => false,
                };
                Check {
                    metric: r.metric.clone(),
                    op: r.op,
                    bound: r.bound,
                    observed,
                    passed,
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_table_parses() {
        assert!(!Thresholds::builtin().rules.is_empty());
    }

    #[test]
    fn rules_match_on_all_tags() {
        let t = Thresholds::parse(
            r#"
            version = 1
            [[rule]]
            when = { experiment = "esd", p = "8" }
            metric = "mean_ks"
            op = "le"
            bound = 0.5
            [[rule]]
            when = { experiment = "facts" }
            metric = "violations"
            op = "le"
            bound = 0
            "#,
        )
        .unwrap();
        let tags = vec![("experiment", "esd".to_string()), ("p", "8".to_string())];
        let mut m = BTreeMap::new();
        m.insert("mean_ks".to_string(), 0.7);
        let checks = t.evaluate(&tags, &m);
        assert_eq!(checks.len(), 1);
        assert!(!checks[0].passed);
        m.insert("mean_ks".to_string(), 0.1);
        assert!(t.evaluate(&tags, &m)[0].passed);
        assert!(t.evaluate(&tags, &BTreeMap::new())[0].observed.is_none());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(Thresholds::parse("version = 1\n[[rule]]\nmetric='a'\nop='lt'\nbound=1").is_err());
    }
}
