//! Run configuration: a TOML document whose every section is optional and
//! falls back to the library defaults. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ddqn::DqnHyperparams;
use crate::env::EnvConfig;
use crate::harness::{SchemeConfig, SchemeName, DEFAULT_LEARNING_RATES};
use crate::scenario::{self, GenerationParams, ScenarioInstance};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub zetas: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            zetas: DEFAULT_LEARNING_RATES.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Instance JSON to load instead of generating from `[instance]`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instance_path: Option<PathBuf>,
    pub instance: GenerationParams,
    pub schemes: Vec<SchemeName>,
    pub seeds: Vec<u64>,
    pub episodes: usize,
    pub output_dir: PathBuf,
    pub record_wall_time: bool,
    /// Final episodes averaged by the summary.
    pub summary_k: usize,
    pub dqn: DqnHyperparams,
    pub env: EnvConfig,
    pub sweep: SweepConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            instance_path: None,
            instance: GenerationParams::default(),
            schemes: vec![
                SchemeName::Ddqn,
                SchemeName::DdqnCvxTau,
                SchemeName::DdqnCvxTauTheta,
            ],
            seeds: (0..10).collect(),
            episodes: 200,
            output_dir: PathBuf::from("results"),
            record_wall_time: false,
            summary_k: 10,
            dqn: DqnHyperparams::default(),
            env: EnvConfig::default(),
            sweep: SweepConfig::default(),
        }
    }
}

fn err(key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        message: message.into(),
    }
}

/// Dotted key of the line a TOML error points at, prefixed by its table.
fn toml_key(e: &toml::de::Error, text: &str) -> String {
    let Some(span) = e.span() else {
        return "<document>".into();
    };
    let start = span.start.min(text.len());
    let line_start = text[..start].rfind('\n').map_or(0, |i| i + 1);
    let line = text[line_start..].lines().next().unwrap_or("").trim();
    let table = text[..line_start]
        .lines()
        .rev()
        .map(str::trim)
        .find(|l| l.starts_with('[') && l.ends_with(']'))
        .map(|l| l.trim_matches(|c| c == '[' || c == ']').trim().to_string());
    let key = match line.split_once('=') {
        Some((k, _)) if !line.starts_with('[') => k.trim().trim_matches('"').to_string(),
        _ => String::new(),
    };
    match (table, key.is_empty()) {
        (Some(t), false) => format!("{t}.{key}"),
        (Some(t), true) => t,
        (None, false) => key,
        (None, true) => "<document>".into(),
    }
}

impl RunConfig {
    /// Parses and validates a config document; the empty document yields the
    /// defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| err(&toml_key(&e, text), e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `path`, resolving `instance_path` relative to its directory and
    /// checking that it exists.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::parse(&text)?;
        if let Some(p) = &cfg.instance_path {
            let resolved = if p.is_relative() {
                path.parent().unwrap_or(Path::new(".")).join(p)
            } else {
                p.clone()
            };
            if !resolved.exists() {
                return Err(err(
                    "instance_path",
                    format!("{} does not exist", resolved.display()),
                ));
            }
            cfg.instance_path = Some(resolved);
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| err("<document>", e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.instance;
        if g.n_devices == 0 {
            return Err(err("instance.n_devices", "must be >= 1"));
        }
        if g.n_agents == 0 {
            return Err(err("instance.n_agents", "must be >= 1"));
        }
        if !(0.0..=1.0).contains(&g.learner_fraction) {
            return Err(err(
                "instance.learner_fraction",
                format!("{} not in [0, 1]", g.learner_fraction),
            ));
        }
        if g.capacity() * g.n_agents < g.n_devices {
            return Err(err(
                "instance.agent.capacity",
                "total capacity below device count",
            ));
        }
        if !(g.radio.area_side_m > 0.0) {
            return Err(err("instance.radio.area_side_m", "must be > 0"));
        }
        if !(g.radio.bandwidth_hz > 0.0) {
            return Err(err("instance.radio.bandwidth_hz", "must be > 0"));
        }
        if !(g.radio.carrier_freq_hz > 0.0) {
            return Err(err("instance.radio.carrier_freq_hz", "must be > 0"));
        }
        if !(g.radio.min_snr_linear >= 0.0) {
            return Err(err("instance.radio.min_snr_linear", "must be >= 0"));
        }
        if !(0.0..1.0).contains(&g.device.heterogeneity) {
            return Err(err("instance.device.heterogeneity", "must be in [0, 1)"));
        }
        if self.schemes.is_empty() {
            return Err(err("schemes", "at least one scheme required"));
        }
        if self.seeds.is_empty() {
            return Err(err("seeds", "at least one seed required"));
        }
        if self
            .seeds
            .iter()
            .chain([&g.seed])
            .any(|&s| s > i64::MAX as u64)
        {
            return Err(err("seeds", "seeds must fit in a signed 64-bit integer"));
        }
        if self.episodes == 0 {
            return Err(err("episodes", "must be >= 1"));
        }
        if self.summary_k == 0 || self.summary_k > self.episodes {
            return Err(err(
                "summary_k",
                format!("must be in [1, episodes = {}]", self.episodes),
            ));
        }
        self.dqn
            .check()
            .map_err(|(k, m)| err(&format!("dqn.{k}"), m))?;
        let e = &self.env;
        if e.steps_per_episode == 0 {
            return Err(err("env.steps_per_episode", "must be >= 1"));
        }
        if !(e.tau_floor > 0.0 && e.tau_floor < 1.0) {
            return Err(err("env.tau_floor", "must be in (0, 1)"));
        }
        if !(e.theta_tol > 0.0) {
            return Err(err("env.theta_tol", "must be > 0"));
        }
        e.cost
            .fl
            .check()
            .map_err(|x| err("env.cost.fl", x.to_string()))?;
        if !(e.cost.fl.theta_min..=e.cost.fl.theta_max).contains(&e.theta_default) {
            return Err(err(
                "env.theta_default",
                "must lie within [theta_min, theta_max]",
            ));
        }
        let c = &e.cost;
        for (k, v) in [
            ("env.cost.learn_weight", c.learn_weight),
            ("env.cost.offload_weight", c.offload_weight),
            ("env.cost.penalty_unassoc_s", c.penalty_unassoc_s),
            ("env.cost.penalty_deadline_s", c.penalty_deadline_s),
            ("env.cost.penalty_reliability_s", c.penalty_reliability_s),
        ] {
            if !(v >= 0.0) {
                return Err(err(k, "must be >= 0"));
            }
        }
        if !(c.cost_floor_s > 0.0) {
            return Err(err("env.cost.cost_floor_s", "must be > 0"));
        }
        if let Some(z) = self.sweep.zetas.iter().find(|z| !(**z > 0.0)) {
            return Err(err("sweep.zetas", format!("{z} must be > 0")));
        }
        Ok(())
    }

    pub fn scheme_configs(&self) -> Vec<SchemeConfig> {
        self.schemes
            .iter()
            .map(|&name| SchemeConfig {
                name,
                hyper: self.dqn.clone(),
                episodes: self.episodes,
            })
            .collect()
    }

    pub fn resolve_instance(&self) -> Result<ScenarioInstance> {
        match &self.instance_path {
            Some(p) => {
                let inst = ScenarioInstance::from_json(&std::fs::read_to_string(p)?)?;
                let violations = scenario::validate(&inst);
                if let Some(v) = violations.first() {
                    return Err(err("instance_path", format!("invalid instance: {v}")));
                }
                Ok(inst)
            }
            None => scenario::gen_instance(&self.instance),
        }
    }
}
