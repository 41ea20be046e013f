//! Parameter sets shared by every subcommand, and the plain-text config file.
//!
//! A config file holds one `key = value` pair per line; `#` starts a comment.
//! Keys are the long flag names (`lambda`, `mu`, `alpha`, `n-peers`, `k`,
//! `sources`, `messages`, `trials`, `seed`, `out`); underscores are accepted
//! in place of dashes.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use churncov_core::ChurnParams64;

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub lambda: f64,
    pub mu: f64,
    pub alpha: f64,
    pub n_peers: usize,
    pub k: usize,
    pub n_sources: usize,
    pub messages: usize,
    pub trials: usize,
    pub seed: u64,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            mu: 1.0,
            alpha: 1.0,
            n_peers: 100,
            k: 1,
            n_sources: 1,
            messages: 1000,
            trials: 10,
            seed: 1,
        }
    }
}

impl Params {
    pub fn churn(&self) -> Result<ChurnParams64> {
        Ok(ChurnParams64::new(self.n_peers, self.lambda, self.mu)?)
    }
}

/// Values that may come from a config file or from flags; unset fields fall
/// through to the next layer.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub lambda: Option<f64>,
    pub mu: Option<f64>,
    pub alpha: Option<f64>,
    pub n_peers: Option<usize>,
    pub k: Option<usize>,
    pub n_sources: Option<usize>,
    pub messages: Option<usize>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl Overrides {
    /// Fields set in `self` win over those in `lower`.
    pub fn over(self, lower: Overrides) -> Overrides {
        Overrides {
            lambda: self.lambda.or(lower.lambda),
            mu: self.mu.or(lower.mu),
            alpha: self.alpha.or(lower.alpha),
            n_peers: self.n_peers.or(lower.n_peers),
            k: self.k.or(lower.k),
            n_sources: self.n_sources.or(lower.n_sources),
            messages: self.messages.or(lower.messages),
            trials: self.trials.or(lower.trials),
            seed: self.seed.or(lower.seed),
            out: self.out.or(lower.out),
        }
    }

    pub fn apply(&self, mut base: Params) -> Params {
        base.lambda = self.lambda.unwrap_or(base.lambda);
        base.mu = self.mu.unwrap_or(base.mu);
        base.alpha = self.alpha.unwrap_or(base.alpha);
        base.n_peers = self.n_peers.unwrap_or(base.n_peers);
        base.k = self.k.unwrap_or(base.k);
        base.n_sources = self.n_sources.unwrap_or(base.n_sources);
        base.messages = self.messages.unwrap_or(base.messages);
        base.trials = self.trials.unwrap_or(base.trials);
        base.seed = self.seed.unwrap_or(base.seed);
        base
    }

    pub fn parse_config(text: &str) -> Result<Overrides> {
        let mut o = Overrides::default();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| HarnessError::Config { line: line_no, message };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected key = value, got {line:?}")))?;
            let key = key.trim().replace('_', "-");
            let value = value.trim();
            match key.as_str() {
                "lambda" => o.lambda = Some(parse(value, &key).map_err(err)?),
                "mu" => o.mu = Some(parse(value, &key).map_err(err)?),
                "alpha" => o.alpha = Some(parse(value, &key).map_err(err)?),
                "n-peers" => o.n_peers = Some(parse(value, &key).map_err(err)?),
                "k" => o.k = Some(parse(value, &key).map_err(err)?),
                "sources" => o.n_sources = Some(parse(value, &key).map_err(err)?),
                "messages" => o.messages = Some(parse(value, &key).map_err(err)?),
                "trials" => o.trials = Some(parse(value, &key).map_err(err)?),
                "seed" => o.seed = Some(parse(value, &key).map_err(err)?),
                "out" => o.out = Some(PathBuf::from(value)),
                _ => return Err(err(format!("unknown key {key:?}"))),
            }
        }
        Ok(o)
    }

    pub fn read_config(path: &Path) -> Result<Overrides> {
        Self::parse_config(&std::fs::read_to_string(path)?)
    }
}

fn parse<T: FromStr>(value: &str, key: &str) -> std::result::Result<T, String>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e| format!("{key}: {e}"))
}
