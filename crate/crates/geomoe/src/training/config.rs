//! Training configuration: defaults, TOML(-style dotted key) parsing with
//! strict unknown-key rejection, validation, and a canonical echo format
//! that parses back through the same reader.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("bad value for `{key}`: {detail}")]
    BadValue { key: String, detail: String },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("config parse error: {0}")]
    Parse(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TaskKind {
    #[serde(rename = "lp")]
    LinkPrediction,
    #[serde(rename = "nc")]
    NodeClassification,
}

impl TaskKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TaskKind::LinkPrediction => "lp",
            TaskKind::NodeClassification => "nc",
        }
    }
}

impl std::str::FromStr for TaskKind {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            "lp" => Ok(TaskKind::LinkPrediction),
            "nc" => Ok(TaskKind::NodeClassification),
            other => Err(ConfigError::BadValue {
                key: "task".into(),
                detail: format!("expected `lp` or `nc`, got `{other}`"),
            }),
        }
    }
}

/// Full training configuration. `d_in`/`d_out`/`d_h` stay unset until
/// [`TrainConfig::resolve`] pins them against the dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub task: TaskKind,
    pub seed: u64,
    pub deterministic: bool,
    pub lambda: f64,
    pub lr: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub patience: usize,
    pub k: usize,
    pub init_curvatures: Vec<f64>,
    pub d_in: Option<usize>,
    pub d_h: Option<usize>,
    pub d_out: Option<usize>,
    pub d_t: usize,
    pub radii: Vec<usize>,
    pub pair_budget: usize,
    pub landmarks: usize,
    pub fd_r: f64,
    pub fd_t: f64,
    pub tau: f64,
    pub split_ratios: (f64, f64, f64),
}

impl Default for TrainConfig {
    fn default() -> TrainConfig {
        TrainConfig {
            task: TaskKind::LinkPrediction,
            seed: 42,
            deterministic: true,
            // Grid-searched ranges: lambda {1.0, 0.5, 0.1, 0.05, 0.01},
            // lr {0.1, 0.01, 0.001}, weight decay {0, 5e-4, 1e-3}.
            lambda: 0.1,
            lr: 0.01,
            weight_decay: 5e-4,
            epochs: 200,
            patience: 100,
            k: 5,
            init_curvatures: vec![-3.0, -1.0, 0.0, 1.0, 3.0],
            d_in: None,
            d_h: None,
            d_out: None,
            d_t: 16,
            radii: vec![1, 2],
            pair_budget: 100_000,
            landmarks: 512,
            fd_r: crate::mixture::DEFAULT_FERMI_DIRAC_R,
            fd_t: crate::mixture::DEFAULT_FERMI_DIRAC_T,
            tau: 1.0,
            split_ratios: (0.85, 0.05, 0.10),
        }
    }
}

const KNOWN_KEYS: &[&str] = &[
    "task",
    "seed",
    "deterministic",
    "train.lambda",
    "train.lr",
    "train.weight_decay",
    "train.epochs",
    "train.patience",
    "experts.k",
    "experts.init_curvatures",
    "dims.d_in",
    "dims.d_h",
    "dims.d_out",
    "dims.d_t",
    "gating.radii",
    "pairs.budget",
    "pairs.landmarks",
    "decoder.r",
    "decoder.t",
    "align.tau",
    "split.ratios",
];

impl TrainConfig {
    /// Parses dotted-key TOML over the defaults. Unknown keys are errors.
    pub fn from_toml_str(text: &str) -> Result<TrainConfig, ConfigError> {
        let table: toml::Value =
            text.parse().map_err(|e| ConfigError::Parse(format!("{e}")))?;
        let mut leaves: Vec<(String, toml::Value)> = Vec::new();
        flatten("", &table, &mut leaves);
        let mut cfg = TrainConfig::default();
        for (key, value) in leaves {
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(ConfigError::UnknownKey(key));
            }
            cfg.apply(&key, &value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply(&mut self, key: &str, v: &toml::Value) -> Result<(), ConfigError> {
        let bad = |detail: String| ConfigError::BadValue { key: key.to_string(), detail };
        match key {
            "task" => {
                let s = v.as_str().ok_or_else(|| bad("expected string".into()))?;
                self.task = s.parse()?;
            }
            "seed" => self.seed = as_u64(v).ok_or_else(|| bad("expected integer".into()))?,
            "deterministic" => {
                self.deterministic = v.as_bool().ok_or_else(|| bad("expected bool".into()))?
            }
            "train.lambda" => self.lambda = as_f64(v).ok_or_else(|| bad("expected number".into()))?,
            "train.lr" => self.lr = as_f64(v).ok_or_else(|| bad("expected number".into()))?,
            "train.weight_decay" => {
                self.weight_decay = as_f64(v).ok_or_else(|| bad("expected number".into()))?
            }
            "train.epochs" => {
                self.epochs = as_u64(v).ok_or_else(|| bad("expected integer".into()))? as usize
            }
            "train.patience" => {
                self.patience = as_u64(v).ok_or_else(|| bad("expected integer".into()))? as usize
            }
            "experts.k" => {
                self.k = as_u64(v).ok_or_else(|| bad("expected integer".into()))? as usize
            }
            "experts.init_curvatures" => {
                self.init_curvatures =
                    as_f64_array(v).ok_or_else(|| bad("expected array of numbers".into()))?
            }
            "dims.d_in" => {
                self.d_in =
                    Some(as_u64(v).ok_or_else(|| bad("expected integer".into()))? as usize)
            }
            "dims.d_h" => {
                self.d_h = Some(as_u64(v).ok_or_else(|| bad("expected integer".into()))? as usize)
            }
            "dims.d_out" => {
                self.d_out =
                    Some(as_u64(v).ok_or_else(|| bad("expected integer".into()))? as usize)
            }
            "dims.d_t" => {
                self.d_t = as_u64(v).ok_or_else(|| bad("expected integer".into()))? as usize
            }
            "gating.radii" => {
                let arr =
                    as_u64_array(v).ok_or_else(|| bad("expected array of integers".into()))?;
                self.radii = arr.into_iter().map(|x| x as usize).collect();
            }
            "pairs.budget" => {
                self.pair_budget = as_u64(v).ok_or_else(|| bad("expected integer".into()))? as usize
            }
            "pairs.landmarks" => {
                self.landmarks = as_u64(v).ok_or_else(|| bad("expected integer".into()))? as usize
            }
            "decoder.r" => self.fd_r = as_f64(v).ok_or_else(|| bad("expected number".into()))?,
            "decoder.t" => self.fd_t = as_f64(v).ok_or_else(|| bad("expected number".into()))?,
            "align.tau" => self.tau = as_f64(v).ok_or_else(|| bad("expected number".into()))?,
            "split.ratios" => {
                let arr =
                    as_f64_array(v).ok_or_else(|| bad("expected array of numbers".into()))?;
                if arr.len() != 3 {
                    return Err(bad(format!("expected 3 ratios, got {}", arr.len())));
                }
                self.split_ratios = (arr[0], arr[1], arr[2]);
            }
            _ => unreachable!("key `{key}` vetted against KNOWN_KEYS"),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.lambda < 0.0 {
            return Err(ConfigError::Invalid(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if self.epochs < 1 {
            return Err(ConfigError::Invalid("epochs must be >= 1".into()));
        }
        if self.k == 0 {
            return Err(ConfigError::Invalid("experts.k must be >= 1".into()));
        }
        if self.init_curvatures.len() != self.k {
            return Err(ConfigError::Invalid(format!(
                "experts.init_curvatures has {} entries for k = {}",
                self.init_curvatures.len(),
                self.k
            )));
        }
        let (a, b, c) = self.split_ratios;
        if (a + b + c - 1.0).abs() > 1e-9 {
            return Err(ConfigError::Invalid(format!(
                "split.ratios must sum to 1, got {}",
                a + b + c
            )));
        }
        if self.radii.is_empty() || !self.radii.windows(2).all(|w| w[0] < w[1]) {
            return Err(ConfigError::Invalid(
                "gating.radii must be nonempty and sorted ascending".into(),
            ));
        }
        if self.radii[0] < 1 {
            return Err(ConfigError::Invalid("gating.radii entries must be >= 1".into()));
        }
        if self.fd_t <= 0.0 || self.tau <= 0.0 {
            return Err(ConfigError::Invalid("decoder.t and align.tau must be > 0".into()));
        }
        if self.lr <= 0.0 {
            return Err(ConfigError::Invalid("train.lr must be > 0".into()));
        }
        Ok(())
    }

    /// Pins the open dimensions against the dataset: d_in from the feature
    /// matrix; d_out 32 for graphs up to 4000 nodes, 16 beyond; d_h follows
    /// d_out unless set.
    pub fn resolve(&self, n_nodes: usize, feature_dim: usize) -> TrainConfig {
        let mut cfg = self.clone();
        cfg.d_in = Some(cfg.d_in.unwrap_or(feature_dim));
        let d_out = cfg.d_out.unwrap_or(if n_nodes <= 4000 { 32 } else { 16 });
        cfg.d_out = Some(d_out);
        cfg.d_h = Some(cfg.d_h.unwrap_or(d_out));
        cfg
    }

    pub fn dims(&self) -> crate::experts::ExpertDims {
        crate::experts::ExpertDims {
            d_in: self.d_in.expect("config not resolved"),
            d_h: self.d_h.expect("config not resolved"),
            d_out: self.d_out.expect("config not resolved"),
        }
    }

    /// Canonical dotted-key echo; parses back through `from_toml_str`.
    pub fn echo_string(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("task = \"{}\"\n", self.task.as_str()));
        s.push_str(&format!("seed = {}\n", self.seed));
        s.push_str(&format!("deterministic = {}\n", self.deterministic));
        s.push_str(&format!("train.lambda = {}\n", fmt_f64(self.lambda)));
        s.push_str(&format!("train.lr = {}\n", fmt_f64(self.lr)));
        s.push_str(&format!("train.weight_decay = {}\n", fmt_f64(self.weight_decay)));
        s.push_str(&format!("train.epochs = {}\n", self.epochs));
        s.push_str(&format!("train.patience = {}\n", self.patience));
        s.push_str(&format!("experts.k = {}\n", self.k));
        let curv: Vec<String> = self.init_curvatures.iter().map(|&x| fmt_f64(x)).collect();
        s.push_str(&format!("experts.init_curvatures = [{}]\n", curv.join(", ")));
        if let Some(d) = self.d_in {
            s.push_str(&format!("dims.d_in = {d}\n"));
        }
        if let Some(d) = self.d_h {
            s.push_str(&format!("dims.d_h = {d}\n"));
        }
        if let Some(d) = self.d_out {
            s.push_str(&format!("dims.d_out = {d}\n"));
        }
        s.push_str(&format!("dims.d_t = {}\n", self.d_t));
        let radii: Vec<String> = self.radii.iter().map(|r| r.to_string()).collect();
        s.push_str(&format!("gating.radii = [{}]\n", radii.join(", ")));
        s.push_str(&format!("pairs.budget = {}\n", self.pair_budget));
        s.push_str(&format!("pairs.landmarks = {}\n", self.landmarks));
        s.push_str(&format!("decoder.r = {}\n", fmt_f64(self.fd_r)));
        s.push_str(&format!("decoder.t = {}\n", fmt_f64(self.fd_t)));
        s.push_str(&format!("align.tau = {}\n", fmt_f64(self.tau)));
        s.push_str(&format!(
            "split.ratios = [{}, {}, {}]\n",
            fmt_f64(self.split_ratios.0),
            fmt_f64(self.split_ratios.1),
            fmt_f64(self.split_ratios.2)
        ));
        s
    }
}

/// Formats a float so TOML reads it back as a float (integral values keep a
/// trailing `.0`).
fn fmt_f64(x: f64) -> String {
    if x.is_finite() && x == x.trunc() && x.abs() < 1e15 {
        format!("{x:.1}")
    } else {
        format!("{x}")
    }
}

fn flatten(prefix: &str, v: &toml::Value, out: &mut Vec<(String, toml::Value)>) {
    match v {
        toml::Value::Table(t) => {
            for (k, inner) in t {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, inner, out);
            }
        }
        other => out.push((prefix.to_string(), other.clone())),
    }
}

fn as_f64(v: &toml::Value) -> Option<f64> {
    match v {
        toml::Value::Float(f) => Some(*f),
        toml::Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

fn as_u64(v: &toml::Value) -> Option<u64> {
    match v {
        toml::Value::Integer(i) if *i >= 0 => Some(*i as u64),
        _ => None,
    }
}

fn as_f64_array(v: &toml::Value) -> Option<Vec<f64>> {
    v.as_array()?.iter().map(as_f64).collect()
}

fn as_u64_array(v: &toml::Value) -> Option<Vec<u64>> {
    v.as_array()?.iter().map(as_u64).collect()
}
