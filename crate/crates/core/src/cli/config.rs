//! Experiment configuration (JSON, schema version 1).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::entropy::ScalingFamily;
use crate::groups::GroupSpec;
use crate::treewalk::{MAX_RADIX, ORBIT_MAX_WORDS};
use crate::walksim::DEFAULT_LEAF_CAP;

use super::CliError;

pub const CONFIG_VERSION: u32 = 1;
/// Largest sampled space accepted by `scaling-fit`.
pub const MAX_SPACE_POINTS: usize = 4096;
/// Largest dyadic model accepted by `standardness`.
pub const MAX_DYADIC_BITS: u32 = 10;
/// Default cap on meeting-diagnostic sequence length.
pub const DEFAULT_MEETING_LENGTH: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Standardness,
    BallMeasure,
    ScalingFit,
    OrbitEntropy,
    MeetingDiagnostic,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::Standardness => "standardness",
            ExperimentKind::BallMeasure => "ball-measure",
            ExperimentKind::ScalingFit => "scaling-fit",
            ExperimentKind::OrbitEntropy => "orbit-entropy",
            ExperimentKind::MeetingDiagnostic => "meeting-diagnostic",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub version: u32,
    pub experiment: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Seeds>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<GroupSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub walk: Option<WalkSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dyadic: Option<DyadicSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ball: Option<BallSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entropy: Option<EntropySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaling: Option<ScalingFamily>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orbit: Option<OrbitSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meeting: Option<MeetingSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seeds {
    pub master: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkSection {
    /// Deepest level for `standardness`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    /// Observation depth; `None` means `m = n` at every level.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    /// Sample count `K` (pairs, points or ball samples by experiment).
    pub samples: usize,
    #[serde(default = "default_leaf_cap")]
    pub leaf_cap: usize,
}

fn default_leaf_cap() -> usize {
    DEFAULT_LEAF_CAP
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DyadicSection {
    pub bits: u32,
    /// Cylinder order of the initial semimetric; defaults to `bits`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<u32>,
    /// Chain length; defaults to `bits - 1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallSection {
    pub ns: Vec<usize>,
    pub epsilon: f64,
    #[serde(default)]
    pub center: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntropySection {
    pub epsilons: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ns: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitSection {
    pub radix: usize,
    pub depth: usize,
    /// Letter law at each leaf.
    pub letters: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeetingSection {
    pub h: usize,
    #[serde(default = "default_meeting_c")]
    pub c: f64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_meeting_length")]
    pub max_length: usize,
}

fn default_meeting_c() -> f64 {
    1.0
}

fn default_trials() -> usize {
    1
}

fn default_meeting_length() -> usize {
    DEFAULT_MEETING_LENGTH
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Output file stem; defaults to the config file stem.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stem: Option<String>,
    /// Output directory; `--out-dir` takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
}

/// A parsed config together with its source text, for line-numbered errors.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: Config,
    pub text: String,
    pub stem: String,
}

impl LoadedConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config {
            line: 0,
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "result".into());
        Self::from_text(text, stem)
    }

    pub fn from_text(text: String, stem: String) -> Result<Self, CliError> {
        let config: Config = serde_json::from_str(&text).map_err(|e| CliError::Config {
            line: e.line(),
            message: e.to_string(),
        })?;
        let stem = config
            .output
            .as_ref()
            .and_then(|o| o.stem.clone())
            .unwrap_or(stem);
        Ok(LoadedConfig { config, text, stem })
    }

    fn err(&self, key: &str, message: impl Into<String>) -> CliError {
        CliError::Config {
            line: line_of(&self.text, key),
            message: message.into(),
        }
    }

    /// Master seed after the command-line override; required by every
    /// randomized experiment.
    pub fn apply_seed(&mut self, seed: Option<u64>) {
        if let Some(master) = seed {
            self.config.seeds = Some(Seeds { master });
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let c = &self.config;
        if c.version != CONFIG_VERSION {
            return Err(self.err(
                "version",
                format!("unsupported config version {} (expected {CONFIG_VERSION})", c.version),
            ));
        }
        match c.experiment {
            ExperimentKind::Standardness => {
                if let Some(d) = &c.dyadic {
                    if d.bits == 0 || d.bits > MAX_DYADIC_BITS {
                        return Err(self.err(
                            "bits",
                            format!("dyadic bits must lie in 1..={MAX_DYADIC_BITS}, got {}", d.bits),
                        ));
                    }
                    let order = d.order.unwrap_or(d.bits);
                    if order == 0 || order > d.bits {
                        return Err(self.err("order", format!("order must lie in 1..={}", d.bits)));
                    }
                    if d.depth.unwrap_or(d.bits - 1) > d.bits {
                        return Err(self.err("depth", format!("depth must not exceed {}", d.bits)));
                    }
                    return Ok(());
                }
                let group = self.group()?;
                let walk = self.walk()?;
                let n_max = walk
                    .n_max
                    .ok_or_else(|| self.err("walk", "walk.n_max is required"))?;
                if n_max == 0 {
                    return Err(self.err("n_max", "n_max must be positive"));
                }
                if walk.samples < 2 {
                    return Err(self.err("samples", "standardness needs at least 2 pairs"));
                }
                self.check_m(walk)?;
                self.check_cap(group, walk, n_max)?;
                self.seed()?;
            }
            ExperimentKind::BallMeasure => {
                let group = self.group()?;
                let walk = self.walk()?;
                let ball = c.ball.as_ref().ok_or_else(|| self.missing("ball"))?;
                if ball.ns.is_empty() || ball.ns.contains(&0) {
                    return Err(self.err("ns", "ball.ns must list positive depths"));
                }
                if !(ball.epsilon > 0.0) {
                    return Err(self.err("epsilon", "epsilon must be positive"));
                }
                if walk.samples < 100 {
                    return Err(self.err("samples", "ball-measure needs at least 100 samples"));
                }
                self.check_m(walk)?;
                self.check_cap(group, walk, *ball.ns.iter().max().unwrap())?;
                self.seed()?;
            }
            ExperimentKind::ScalingFit => {
                let group = self.group()?;
                let walk = self.walk()?;
                let grid = c.entropy.as_ref().ok_or_else(|| self.missing("entropy"))?;
                self.check_epsilons(&grid.epsilons)?;
                let ns = grid
                    .ns
                    .as_ref()
                    .filter(|ns| !ns.is_empty() && !ns.contains(&0))
                    .ok_or_else(|| self.err("entropy", "entropy.ns must list positive depths"))?;
                if walk.samples < 2 || walk.samples > MAX_SPACE_POINTS {
                    return Err(self.err(
                        "samples",
                        format!("scaling-fit samples must lie in 2..={MAX_SPACE_POINTS}"),
                    ));
                }
                self.check_m(walk)?;
                self.check_cap(group, walk, *ns.iter().max().unwrap())?;
                if let Some(family) = &c.scaling {
                    family
                        .validate(&grid.epsilons, ns)
                        .map_err(|e| self.err("scaling", e.to_string()))?;
                }
                self.seed()?;
            }
            ExperimentKind::OrbitEntropy => {
                let orbit = c.orbit.as_ref().ok_or_else(|| self.missing("orbit"))?;
                if orbit.radix < 2 || orbit.radix > MAX_RADIX {
                    return Err(self.err("radix", format!("radix must lie in 2..={MAX_RADIX}")));
                }
                if orbit.depth == 0 {
                    return Err(self.err("depth", "depth must be positive"));
                }
                if orbit.letters.len() < 2
                    || orbit.letters.iter().any(|&p| !(p >= 0.0) || !p.is_finite())
                    || (orbit.letters.iter().sum::<f64>() - 1.0).abs() > 1e-9
                {
                    return Err(self.err(
                        "letters",
                        "letters must be a probability vector with at least 2 entries",
                    ));
                }
                let leaves = (orbit.radix as f64).powi(orbit.depth as i32);
                let words = (orbit.letters.len() as f64).powf(leaves);
                if words > ORBIT_MAX_WORDS as f64 {
                    return Err(self.err(
                        "depth",
                        format!("{words} leaf words exceed the cap {ORBIT_MAX_WORDS}"),
                    ));
                }
                let grid = c.entropy.as_ref().ok_or_else(|| self.missing("entropy"))?;
                self.check_epsilons(&grid.epsilons)?;
            }
            ExperimentKind::MeetingDiagnostic => {
                self.group()?;
                let m = c.meeting.as_ref().ok_or_else(|| self.missing("meeting"))?;
                if m.h == 0 {
                    return Err(self.err("h", "h must be positive"));
                }
                if !(m.c > 0.0) {
                    return Err(self.err("\"c\"", "c must be positive"));
                }
                if m.trials == 0 {
                    return Err(self.err("trials", "trials must be positive"));
                }
                self.seed()?;
            }
        }
        Ok(())
    }

    fn missing(&self, section: &str) -> CliError {
        self.err(
            "experiment",
            format!(
                "experiment {} requires a \"{section}\" section",
                self.config.experiment.as_str()
            ),
        )
    }

    fn group(&self) -> Result<&GroupSpec, CliError> {
        let g = self.config.group.as_ref().ok_or_else(|| self.missing("group"))?;
        g.validate().map_err(|e| self.err("group", e.to_string()))?;
        Ok(g)
    }

    fn walk(&self) -> Result<&WalkSection, CliError> {
        self.config.walk.as_ref().ok_or_else(|| self.missing("walk"))
    }

    pub fn seed(&self) -> Result<u64, CliError> {
        self.config
            .seeds
            .as_ref()
            .map(|s| s.master)
            .ok_or_else(|| self.missing("seeds"))
    }

    fn check_m(&self, walk: &WalkSection) -> Result<(), CliError> {
        if walk.m == Some(0) {
            return Err(self.err("\"m\"", "observation depth m must be positive"));
        }
        Ok(())
    }

    fn check_cap(&self, group: &GroupSpec, walk: &WalkSection, n: usize) -> Result<(), CliError> {
        let r = group.symbol_count();
        if r > MAX_RADIX {
            return Err(self.err(
                "group",
                format!("walk alphabet {r} exceeds the limit {MAX_RADIX}"),
            ));
        }
        let leaves = (r as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
        if leaves > walk.leaf_cap as u128 {
            return Err(self.err(
                "leaf_cap",
                format!("(2s)^n = {r}^{n} = {leaves} exceeds the leaf cap {}", walk.leaf_cap),
            ));
        }
        Ok(())
    }

    fn check_epsilons(&self, eps: &[f64]) -> Result<(), CliError> {
        if eps.is_empty() || eps.iter().any(|&e| !(e > 0.0) || !e.is_finite()) {
            return Err(self.err("epsilons", "epsilons must be a nonempty list of positive values"));
        }
        Ok(())
    }
}

/// 1-based line of the first occurrence of `"key"` (or of `key` itself when
/// it is already quoted); line 1 when absent.
fn line_of(text: &str, key: &str) -> usize {
    let needle = if key.starts_with('"') {
        key.to_string()
    } else {
        format!("\"{key}\"")
    };
    text.find(&needle)
        .map(|at| text[..at].matches('\n').count() + 1)
        .unwrap_or(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str) -> Result<LoadedConfig, CliError> {
        LoadedConfig::from_text(text.into(), "t".into())
    }

    #[test]
    fn syntax_errors_carry_lines() {
        let err = load("{\n  \"version\": 1,\n  \"experiment\": \n}").unwrap_err();
        assert!(matches!(err, CliError::Config { line: 4, .. }), "{err:?}");
        let err = load("{\"version\": 1, \"experiment\": \"teleport\"}").unwrap_err();
        assert!(err.to_string().contains("teleport"));
    }

    #[test]
    fn semantic_errors_point_at_keys() {
        let text = "{\n \"version\": 1,\n \"experiment\": \"ball-measure\",\n \"group\": {\"kind\": \"free\", \"generators\": 2},\n \"walk\": {\"samples\": 200, \"leaf_cap\": 64},\n \"ball\": {\"ns\": [3, 4], \"epsilon\": 0.2},\n \"seeds\": {\"master\": 1}\n}";
        let cfg = load(text).unwrap();
        let err = cfg.validate().unwrap_err();
        assert!(matches!(err, CliError::Config { line: 5, .. }), "{err:?}");
    }

    #[test]
    fn seeds_are_required_unless_overridden() {
        let text = r#"{"version": 1, "experiment": "meeting-diagnostic",
            "group": {"kind": "lattice", "dim": 1}, "meeting": {"h": 3}}"#;
        let mut cfg = load(text).unwrap();
        assert!(cfg.validate().is_err());
        cfg.apply_seed(Some(5));
        cfg.validate().unwrap();
        assert_eq!(cfg.seed().unwrap(), 5);
    }
}
