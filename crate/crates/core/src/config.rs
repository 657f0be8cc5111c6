//! Run configuration shared by every CLI command.
//!
//! A [`RunConfig`] is a TOML document; command-line flags are applied on
//! top of it. Serializing a parsed config and parsing it again yields the
//! same value.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::confidence::ConfidenceParams;
use crate::error::{Error, Result};
use crate::eval::{density_grid, EvalParams, DEFAULT_TAU};
use crate::imagery::DisparityFormat;
use crate::matcher::{CensusMatcher, ExternalMatcher, ExternalMatcherSpec, MatcherConfig, StereoMatcher};
use crate::sweep::SweepSpec;

/// Default subprocess timeout for external matchers, in seconds.
pub const DEFAULT_TIMEOUT_SECS: f64 = 600.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MatcherChoice {
    #[default]
    Builtin,
    External(ExternalMatcherSpec),
}

/// Explicit shift list, or the `n`/`k` shorthand for `[-k, ..., k]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shifts: Option<Vec<i32>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<u32>,
}

impl SweepConfig {
    /// Explicit shifts win over the shorthand. With only `n` given it must
    /// be odd; with only `k`, `n = 2k + 1`. Nothing given means `k = 2`.
    pub fn resolve(&self) -> Result<SweepSpec> {
        if let Some(shifts) = &self.shifts {
            return SweepSpec::new(shifts.clone());
        }
        match (self.n, self.k) {
            (Some(n), Some(k)) => SweepSpec::from_n_k(n, k),
            (Some(n), None) if n % 2 == 1 => Ok(SweepSpec::symmetric(n / 2)),
            (Some(n), None) => Err(Error::InvalidConfig(format!(
                "N={n} is even; give an explicit shift list instead"
            ))),
            (None, Some(k)) => Ok(SweepSpec::symmetric(k)),
            (None, None) => Ok(SweepSpec::default()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ConfidenceConfig {
    /// Defaults to `d_max * ln 2`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub tau: f64,
    pub densities: Vec<f64>,
    /// Base seed of the random control; image `i` uses `seed + i`.
    pub seed: u64,
    /// Pool all pixels of a dataset into one ranking instead of averaging
    /// per-image AUCs.
    pub pooled_auc: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            tau: DEFAULT_TAU,
            densities: density_grid(20),
            seed: 0,
            pooled_auc: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IoConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub left: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub right: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gt: Option<PathBuf>,
    /// Root holding `left/`, `right/` and `gt/`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dataset: Option<PathBuf>,
    pub out_dir: PathBuf,
    /// Ground-truth format; inferred from the file extension when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gt_format: Option<DisparityFormat>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dump_dir: Option<PathBuf>,
}

impl Default for IoConfig {
    fn default() -> Self {
        IoConfig {
            left: None,
            right: None,
            gt: None,
            dataset: None,
            out_dir: PathBuf::from("out"),
            gt_format: None,
            dump_dir: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Maximum concurrent matcher calls (and concurrent images in batch
    /// runs); 0 means one per shift.
    pub parallelism: usize,
    pub matcher: MatcherChoice,
    pub matcher_config: MatcherConfig,
    pub sweep: SweepConfig,
    pub confidence: ConfidenceConfig,
    pub eval: EvalConfig,
    pub io: IoConfig,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
            _ => Error::io(path, e),
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml_string()?).map_err(|e| Error::io(path, e))
    }

    pub fn sweep_spec(&self) -> Result<SweepSpec> {
        self.sweep.resolve()
    }

    pub fn confidence_params(&self) -> Result<ConfidenceParams> {
        let d_max = f64::from(self.matcher_config.d_max);
        match self.confidence.sigma {
            Some(sigma) => ConfidenceParams::with_sigma(d_max, sigma),
            None => Ok(ConfidenceParams::new(d_max)),
        }
    }

    pub fn eval_params(&self) -> Result<EvalParams> {
        let p = EvalParams {
            tau: self.eval.tau,
            densities: self.eval.densities.clone(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn is_builtin(&self) -> bool {
        matches!(self.matcher, MatcherChoice::Builtin)
    }

    pub fn build_matcher(&self) -> Result<Box<dyn StereoMatcher>> {
        match &self.matcher {
            MatcherChoice::Builtin => Ok(Box::new(CensusMatcher::new(self.matcher_config.clone())?)),
            MatcherChoice::External(spec) => Ok(Box::new(
                ExternalMatcher::new(spec.clone())?.with_d_max(self.matcher_config.d_max),
            )),
        }
    }

    /// Checks parameters and that every referenced input path exists.
    /// Output locations are created on demand and not checked.
    pub fn validate(&self) -> Result<()> {
        self.matcher_config.validate()?;
        if let MatcherChoice::External(spec) = &self.matcher {
            spec.validate()?;
            require_exists(&spec.work_dir)?;
        }
        self.sweep_spec()?;
        self.confidence_params()?;
        self.eval_params()?;
        let io = &self.io;
        for path in [&io.left, &io.right, &io.gt, &io.dataset].into_iter().flatten() {
            require_exists(path)?;
        }
        Ok(())
    }
}

fn require_exists(path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::MissingFile(path.to_path_buf()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips() {
        let c = RunConfig::default();
        let text = c.to_toml_string().unwrap();
        assert_eq!(RunConfig::from_toml_str(&text).unwrap(), c);
    }

    #[test]
    fn external_matcher_round_trips() {
        let mut c = RunConfig {
            matcher: MatcherChoice::External(ExternalMatcherSpec {
                command_template: "tool {left} {right} {out}".into(),
                work_dir: "/tmp".into(),
                output_format: DisparityFormat::KittiPng16,
                timeout_secs: 30.0,
            }),
            ..RunConfig::default()
        };
        c.sweep.shifts = Some(vec![0, 1]);
        c.confidence.sigma = Some(2.5);
        let text = c.to_toml_string().unwrap();
        assert!(text.contains("kind = \"external\""));
        let back = RunConfig::from_toml_str(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_toml_string().unwrap(), text);
    }

    #[test]
    fn partial_documents_use_defaults() {
        let c = RunConfig::from_toml_str("[sweep]\nn = 3\n[matcher_config]\nd_max = 64\n").unwrap();
        assert_eq!(c.sweep_spec().unwrap().shifts(), &[-1, 0, 1]);
        assert_eq!(c.matcher_config.d_max, 64);
        assert_eq!(c.eval.tau, 3.0);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml_str("bogus = 1\n").is_err());
        assert!(RunConfig::from_toml_str("[sweep]\nm = 3\n").is_err());
    }

    #[test]
    fn shorthand_rules() {
        let s = |n, k| SweepConfig { shifts: None, n, k }.resolve();
        assert!(s(Some(4), Some(2)).is_err());
        assert!(s(Some(4), None).is_err());
        assert_eq!(s(Some(7), None).unwrap().shifts(), &[-3, -2, -1, 0, 1, 2, 3]);
        assert_eq!(s(None, Some(1)).unwrap().shifts(), &[-1, 0, 1]);
        assert_eq!(s(None, None).unwrap(), SweepSpec::default());
        let explicit = SweepConfig {
            shifts: Some(vec![0, 1]),
            n: Some(4),
            k: Some(2),
        };
        assert_eq!(explicit.resolve().unwrap().shifts(), &[0, 1]);
    }

    #[test]
    fn missing_paths_fail_validation() {
        let mut c = RunConfig::default();
        c.io.left = Some("/definitely/not/here.png".into());
        assert!(matches!(c.validate(), Err(Error::MissingFile(_))));
    }

    #[test]
    fn sigma_defaults_to_calibrated_value() {
        let c = RunConfig::default();
        let p = c.confidence_params().unwrap();
        assert!((p.confidence(1.0) - 0.5).abs() < 1e-12);
    }
}
