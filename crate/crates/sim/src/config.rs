use churncov_core::{ChurnParams64, StreamParams64};

use crate::error::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// One source peer generates the whole stream.
    SingleSource,
    /// `n_sources` distinct peers each generate at `alpha / n_sources`.
    MultiSource,
}

/// What happens to a message generated while its source is offline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZeroPolicy {
    /// It waits in the source's own buffer (coverage starts at 1).
    CountAsOne,
    /// It is dropped and left out of all statistics.
    Exclude,
}

/// How the single source is picked among the peers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceChoice {
    Random,
    /// Uniformly among the peers online at time 0.
    Online,
    /// Uniformly among the peers offline at time 0.
    Offline,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub churn: ChurnParams64,
    pub stream: StreamParams64,
    /// Messages generated before the run winds down.
    pub n_messages: usize,
    pub seed: u64,
    pub mode: Mode,
    pub zero_policy: ZeroPolicy,
    pub source_choice: SourceChoice,
    /// Generate the first message at time 0 instead of after a waiting time.
    pub first_message_at_start: bool,
    /// After the last generation the run continues for
    /// `drain_factor / min(lambda, mu, alpha)` so resident messages keep spreading.
    pub drain_factor: f64,
    /// Fixed run length; generation stops early if it is reached first.
    pub time_horizon: Option<f64>,
    /// Times after its birth at which the coverage of message 0 is sampled.
    pub sample_times: Vec<f64>,
    /// Check after every event that all online peers hold identical buffers.
    pub debug_checks: bool,
    /// Keep one [`crate::TraceRecord`] per event, preceded by an `online` record
    /// for every peer that starts online.
    pub trace: bool,
}

impl SimConfig {
    /// Single-source run with the defaults used throughout: count offline
    /// messages as coverage 1, random source, drain factor 10.
    pub fn single_source(
        churn: ChurnParams64,
        alpha: f64,
        k: usize,
        n_messages: usize,
        seed: u64,
    ) -> Result<Self, SimError> {
        let stream = StreamParams64::new(alpha, k, 1).map_err(|e| SimError::InvalidConfig(e.to_string()))?;
        let cfg = Self {
            churn,
            stream,
            n_messages,
            seed,
            mode: Mode::SingleSource,
            zero_policy: ZeroPolicy::CountAsOne,
            source_choice: SourceChoice::Random,
            first_message_at_start: false,
            drain_factor: 10.0,
            time_horizon: None,
            sample_times: Vec::new(),
            debug_checks: false,
            trace: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Multi-source run: offline-generated messages are excluded.
    pub fn multi_source(
        churn: ChurnParams64,
        alpha: f64,
        k: usize,
        n_sources: usize,
        n_messages: usize,
        seed: u64,
    ) -> Result<Self, SimError> {
        let mut cfg = Self::single_source(churn, alpha, k, n_messages, seed)?;
        cfg.stream.n_sources = n_sources;
        cfg.mode = Mode::MultiSource;
        cfg.zero_policy = ZeroPolicy::Exclude;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidConfig(m));
        self.churn
            .validate()
            .map_err(|e| SimError::InvalidConfig(e.to_string()))?;
        self.stream
            .validate_against(&self.churn)
            .map_err(|e| SimError::InvalidConfig(e.to_string()))?;
        if self.n_messages == 0 {
            return bad("n_messages must be at least 1".into());
        }
        if self.mode == Mode::SingleSource && self.stream.n_sources != 1 {
            return bad(format!("single-source mode with {} sources", self.stream.n_sources));
        }
        if self.mode == Mode::MultiSource && self.source_choice != SourceChoice::Random {
            return bad("source choice applies to single-source mode only".into());
        }
        if !(self.drain_factor >= 0.0) || !self.drain_factor.is_finite() {
            return bad(format!("drain factor {}", self.drain_factor));
        }
        if let Some(h) = self.time_horizon {
            if !(h > 0.0) || !h.is_finite() {
                return bad(format!("time horizon {h}"));
            }
        }
        if self.sample_times.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
            return bad("sample times must be finite and nonnegative".into());
        }
        Ok(())
    }

    /// Length of the wind-down after the last generation.
    pub fn drain_time(&self) -> f64 {
        let slowest = self.churn.lambda.min(self.churn.mu).min(self.stream.alpha);
        self.drain_factor / slowest
    }
}
