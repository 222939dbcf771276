use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::agents::AgentHyper;
use crate::envs::{DiscreteDist, RedPillBluePillConfig};
use crate::error::{Error, Result};
use crate::quantile::HuberParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EnvId {
    Rpbp,
    Pendulum,
    Mdp,
}

impl EnvId {
    pub fn id(self) -> &'static str {
        match self {
            EnvId::Rpbp => "rpbp",
            EnvId::Pendulum => "pendulum",
            EnvId::Mdp => "mdp",
        }
    }

    pub fn is_finite(self) -> bool {
        self != EnvId::Pendulum
    }
}

impl FromStr for EnvId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rpbp" => Ok(EnvId::Rpbp),
            "pendulum" => Ok(EnvId::Pendulum),
            "mdp" => Ok(EnvId::Mdp),
            _ => Err(Error::Config(format!("unknown env '{s}' (rpbp, pendulum, mdp)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Algorithm {
    D2Q,
    D2Td,
    D3Q,
    D3Td,
    DiffQ,
    D2FaTd,
    D2FaQ,
    D2Ac,
    D3FaTd,
    D3FaQ,
    D3Ac,
    DiffAc,
}

impl Algorithm {
    pub const ALL: [Algorithm; 12] = [
        Algorithm::D2Q,
        Algorithm::D2Td,
        Algorithm::D3Q,
        Algorithm::D3Td,
        Algorithm::DiffQ,
        Algorithm::D2FaTd,
        Algorithm::D2FaQ,
        Algorithm::D2Ac,
        Algorithm::D3FaTd,
        Algorithm::D3FaQ,
        Algorithm::D3Ac,
        Algorithm::DiffAc,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Algorithm::D2Q => "d2_q",
            Algorithm::D2Td => "d2_td",
            Algorithm::D3Q => "d3_q",
            Algorithm::D3Td => "d3_td",
            Algorithm::DiffQ => "diff_q",
            Algorithm::D2FaTd => "d2_fa_td",
            Algorithm::D2FaQ => "d2_fa_q",
            Algorithm::D2Ac => "d2_ac",
            Algorithm::D3FaTd => "d3_fa_td",
            Algorithm::D3FaQ => "d3_fa_q",
            Algorithm::D3Ac => "d3_ac",
            Algorithm::DiffAc => "diff_ac",
        }
    }

    pub fn is_tabular(self) -> bool {
        matches!(
            self,
            Algorithm::D2Q | Algorithm::D2Td | Algorithm::D3Q | Algorithm::D3Td | Algorithm::DiffQ
        )
    }

    /// Prediction agents follow a fixed behavior policy.
    pub fn is_prediction(self) -> bool {
        matches!(
            self,
            Algorithm::D2Td | Algorithm::D3Td | Algorithm::D2FaTd | Algorithm::D3FaTd
        )
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.id() == s)
            .ok_or_else(|| {
                let ids: Vec<_> = Algorithm::ALL.iter().map(|a| a.id()).collect();
                Error::Config(format!("unknown algorithm '{s}' ({})", ids.join(", ")))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureSpec {
    OneHot,
    Tiles { tilings: usize, per_dim: usize },
}

/// One experiment: environment, agent, step sizes and run length.
///
/// The text form is one `key = value` per line; `#` starts a comment.
///
/// | key | default | meaning |
/// |-----|---------|---------|
/// | `env` | `rpbp` | `rpbp`, `pendulum` or `mdp` |
/// | `mdp.path` | | MDP file, required for `env = mdp` |
/// | `mdp.start` | random | fixed start state |
/// | `rpbp.blue_values`, `rpbp.blue_probs` | `0,1,2`, uniform | blue-world reward law |
/// | `rpbp.red_values`, `rpbp.red_probs` | `-2,-1,0`, uniform | red-world reward law |
/// | `rpbp.reward_on_arrival` | `true` | reward drawn from the arrival world |
/// | `algorithm` | `d2_q` | see [`Algorithm`] |
/// | `alpha`, `eta_theta`, `eta_rbar`, `eta_pi`, `epsilon` | see [`AgentHyper`] | |
/// | `huber_lambda` | `1` | quantile Huber threshold |
/// | `m`, `n` | `10`, `10` | reward and return quantile counts |
/// | `features` | `tiles` on pendulum | `onehot` or `tiles` |
/// | `tiles.tilings`, `tiles.per_dim` | `32`, `8` | tile coder shape |
/// | `behavior.actions` | uniform | per-state actions of an ε-greedy behavior policy |
/// | `total_steps` | `100000` | |
/// | `seed`, `n_seeds` | `0`, `1` | seeds `seed .. seed + n_seeds` |
/// | `snapshot_interval` | `100` | steps between record rows |
/// | `rolling_window` | `1000` | trailing window of `rolling_reward` |
/// | `output` | `out` | output directory |
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub env: EnvId,
    pub mdp_path: Option<PathBuf>,
    pub mdp_start: Option<usize>,
    pub rpbp: RedPillBluePillConfig,
    pub algorithm: Algorithm,
    pub hyper: AgentHyper,
    pub huber_lambda: f64,
    pub m: usize,
    pub n: usize,
    pub features: Option<FeatureSpec>,
    pub behavior_actions: Option<Vec<usize>>,
    pub total_steps: u64,
    pub seed: u64,
    pub n_seeds: usize,
    pub snapshot_interval: u64,
    pub rolling_window: usize,
    pub output: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            env: EnvId::Rpbp,
            mdp_path: None,
            mdp_start: None,
            rpbp: RedPillBluePillConfig::default(),
            algorithm: Algorithm::D2Q,
            hyper: AgentHyper::default(),
            huber_lambda: 1.0,
            m: 10,
            n: 10,
            features: None,
            behavior_actions: None,
            total_steps: 100_000,
            seed: 0,
            n_seeds: 1,
            snapshot_interval: 100,
            rolling_window: 1000,
            output: PathBuf::from("out"),
        }
    }
}

fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse '{value}'")))
}

fn list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value.split(',').map(|v| num(key, v.trim())).collect()
}

fn join<T: fmt::Debug>(xs: &[T]) -> String {
    xs.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",")
}

const RPBP_KEYS: [&str; 4] = [
    "rpbp.blue_values",
    "rpbp.blue_probs",
    "rpbp.red_values",
    "rpbp.red_probs",
];

impl ExperimentConfig {
    /// Parses the key-value text form on top of the defaults, then validates.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        let (probs, rest): (Vec<_>, Vec<_>) = parse_pairs(text)?
            .into_iter()
            .partition(|(k, _)| k.starts_with("rpbp.") && k.ends_with("_probs"));
        for (key, value) in rest.into_iter().chain(probs) {
            cfg.set(&key, &value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }

    /// Sets one key. Reward laws of the red-pill blue-pill world are
    /// rebuilt as a whole, so a `*_values` key resets the matching
    /// probabilities to uniform; [`from_text`](Self::from_text) applies
    /// `*_probs` keys last for that reason.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "env" => self.env = value.parse()?,
            "mdp.path" => self.mdp_path = Some(PathBuf::from(value)),
            "mdp.start" => self.mdp_start = Some(num(key, value)?),
            "rpbp.reward_on_arrival" => self.rpbp.reward_on_arrival = num(key, value)?,
            k if RPBP_KEYS.contains(&k) => self.set_reward_law(k, value)?,
            "algorithm" => self.algorithm = value.parse()?,
            "alpha" => self.hyper.alpha = num(key, value)?,
            "eta_theta" => self.hyper.eta_theta = num(key, value)?,
            "eta_rbar" => self.hyper.eta_rbar = num(key, value)?,
            "eta_pi" => self.hyper.eta_pi = num(key, value)?,
            "epsilon" => self.hyper.epsilon = num(key, value)?,
            "huber_lambda" => self.huber_lambda = num(key, value)?,
            "m" => self.m = num(key, value)?,
            "n" => self.n = num(key, value)?,
            "features" => {
                self.features = Some(match value {
                    "onehot" => FeatureSpec::OneHot,
                    "tiles" => match self.features {
                        Some(t @ FeatureSpec::Tiles { .. }) => t,
                        _ => FeatureSpec::Tiles {
                            tilings: 32,
                            per_dim: 8,
                        },
                    },
                    _ => return Err(Error::Config(format!("unknown features '{value}'"))),
                })
            }
            "tiles.tilings" | "tiles.per_dim" => {
                let v: usize = num(key, value)?;
                let (mut tilings, mut per_dim) = match self.features {
                    Some(FeatureSpec::Tiles { tilings, per_dim }) => (tilings, per_dim),
                    _ => (32, 8),
                };
                if key == "tiles.tilings" {
                    tilings = v;
                } else {
                    per_dim = v;
                }
                self.features = Some(FeatureSpec::Tiles { tilings, per_dim });
            }
            "behavior.actions" => self.behavior_actions = Some(list(key, value)?),
            "total_steps" => self.total_steps = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "n_seeds" => self.n_seeds = num(key, value)?,
            "snapshot_interval" => self.snapshot_interval = num(key, value)?,
            "rolling_window" => self.rolling_window = num(key, value)?,
            "output" => self.output = PathBuf::from(value),
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    fn set_reward_law(&mut self, key: &str, value: &str) -> Result<()> {
        let blue = key.starts_with("rpbp.blue");
        let current = if blue {
            &self.rpbp.blue_reward
        } else {
            &self.rpbp.red_reward
        };
        let law = if key.ends_with("_values") {
            DiscreteDist::uniform(list(key, value)?)
        } else {
            DiscreteDist::new(current.values().to_vec(), list(key, value)?)
        }
        .map_err(|e| Error::Config(format!("{key}: {e}")))?;
        if blue {
            self.rpbp.blue_reward = law;
        } else {
            self.rpbp.red_reward = law;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.total_steps == 0 {
            return fail("total_steps must be at least 1".into());
        }
        if self.m == 0 || self.n == 0 {
            return fail("m and n must be at least 1".into());
        }
        if self.n_seeds == 0 || self.snapshot_interval == 0 || self.rolling_window == 0 {
            return fail("n_seeds, snapshot_interval and rolling_window must be at least 1".into());
        }
        self.hyper
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        HuberParams::new(self.huber_lambda).map_err(|e| Error::Config(e.to_string()))?;
        if self.env == EnvId::Rpbp {
            self.rpbp
                .validate()
                .map_err(|e| Error::Config(e.to_string()))?;
        }
        if self.env == EnvId::Mdp && self.mdp_path.is_none() {
            return fail("env = mdp needs mdp.path".into());
        }
        let alg = self.algorithm;
        match (self.env.is_finite(), alg.is_tabular(), self.features) {
            (false, true, _) => {
                return fail(format!("{alg} is tabular and cannot run on pendulum"));
            }
            (false, false, Some(FeatureSpec::OneHot)) => {
                return fail("pendulum needs tile features".into());
            }
            (true, false, f) if f != Some(FeatureSpec::OneHot) => {
                return fail(format!("{alg} on a finite env needs features = onehot"));
            }
            (true, true, Some(_)) => {
                return fail(format!("{alg} is tabular and takes no features"));
            }
            _ => {}
        }
        if let Some(FeatureSpec::Tiles { tilings, per_dim }) = self.features {
            if tilings == 0 || per_dim == 0 {
                return fail("tile coder needs at least one tiling and tile".into());
            }
        }
        if self.behavior_actions.is_some() && !(alg.is_prediction() && self.env.is_finite()) {
            return fail("behavior.actions applies only to prediction agents on finite envs".into());
        }
        Ok(())
    }

    /// Canonical text form: every key, sorted, floats in round-trip form.
    pub fn to_text(&self) -> String {
        let mut pairs: BTreeMap<&str, String> = BTreeMap::new();
        pairs.insert("env", self.env.id().into());
        if let Some(p) = &self.mdp_path {
            pairs.insert("mdp.path", p.display().to_string());
        }
        if let Some(s) = self.mdp_start {
            pairs.insert("mdp.start", s.to_string());
        }
        pairs.insert("rpbp.blue_values", join(self.rpbp.blue_reward.values()));
        pairs.insert("rpbp.blue_probs", join(self.rpbp.blue_reward.probs()));
        pairs.insert("rpbp.red_values", join(self.rpbp.red_reward.values()));
        pairs.insert("rpbp.red_probs", join(self.rpbp.red_reward.probs()));
        pairs.insert("rpbp.reward_on_arrival", self.rpbp.reward_on_arrival.to_string());
        pairs.insert("algorithm", self.algorithm.id().into());
        pairs.insert("alpha", format!("{:?}", self.hyper.alpha));
        pairs.insert("eta_theta", format!("{:?}", self.hyper.eta_theta));
        pairs.insert("eta_rbar", format!("{:?}", self.hyper.eta_rbar));
        pairs.insert("eta_pi", format!("{:?}", self.hyper.eta_pi));
        pairs.insert("epsilon", format!("{:?}", self.hyper.epsilon));
        pairs.insert("huber_lambda", format!("{:?}", self.huber_lambda));
        pairs.insert("m", self.m.to_string());
        pairs.insert("n", self.n.to_string());
        match self.features {
            Some(FeatureSpec::OneHot) => {
                pairs.insert("features", "onehot".into());
            }
            Some(FeatureSpec::Tiles { tilings, per_dim }) => {
                pairs.insert("features", "tiles".into());
                pairs.insert("tiles.tilings", tilings.to_string());
                pairs.insert("tiles.per_dim", per_dim.to_string());
            }
            None => {}
        }
        if let Some(actions) = &self.behavior_actions {
            pairs.insert("behavior.actions", join(actions));
        }
        pairs.insert("total_steps", self.total_steps.to_string());
        pairs.insert("seed", self.seed.to_string());
        pairs.insert("n_seeds", self.n_seeds.to_string());
        pairs.insert("snapshot_interval", self.snapshot_interval.to_string());
        pairs.insert("rolling_window", self.rolling_window.to_string());
        pairs.insert("output", self.output.display().to_string());
        pairs
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    /// SHA-256 of everything that affects a run's numbers, in hex.
    /// Seeds and the output directory are excluded.
    pub fn hash(&self) -> String {
        let text: String = self
            .to_text()
            .lines()
            .filter(|l| !["seed ", "n_seeds ", "output "].iter().any(|p| l.starts_with(p)))
            .map(|l| format!("{l}\n"))
            .collect();
        Sha256::digest(text.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.n_seeds as u64).map(|i| self.seed + i).collect()
    }

    pub fn huber(&self) -> HuberParams {
        HuberParams::new(self.huber_lambda).expect("validated")
    }
}

/// Splits `key = value` lines; blank lines and `#` comments are skipped.
/// A key given twice is an error.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut seen = BTreeMap::new();
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(i + 1, "expected key = value"))?;
        let key = key.trim().to_string();
        if seen.insert(key.clone(), i + 1).is_some() {
            return Err(Error::parse(i + 1, format!("duplicate key '{key}'")));
        }
        out.push((key, value.trim().to_string()));
    }
    Ok(out)
}
