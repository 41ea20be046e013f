//! Interval series for messages that are the last ones of an online or offline
//! period of the source.
//!
//! Time is measured from the moment such a message starts propagating. The
//! source then alternates between average-length periods: for a last-online
//! message an offline stretch of `1/lambda` followed by an online stretch of
//! `1/mu`; for a last-offline message the online stretch comes first. The
//! message stops spreading when the displacing arrival lands; if it lands while
//! the source is offline the message keeps spreading until the source returns.

use crate::engset::{ChurnParams, OnlineGrowth};
use crate::error::Result;
use crate::numerics::{integrate_graded, sum_truncated, Erlang, Feature, Tolerance};
use crate::scalar::Scalar;

/// Coverage of a last-message category split by the source state at the
/// displacing arrival.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LastSplit<T> {
    /// Displacing arrival while the source is offline (e.g. `L1-0`).
    pub next_offline: T,
    /// Displacing arrival while the source is online (e.g. `L1-1`).
    pub next_online: T,
}

impl<T: Scalar> LastSplit<T> {
    pub fn total(&self) -> T {
        self.next_offline + self.next_online
    }
}

pub(crate) struct IntervalSeries<T> {
    pub growth: OnlineGrowth<T>,
    pub waiting: Erlang<T>,
    pub offline_len: T,
    pub online_len: T,
    pub cycle: T,
    pub tol: Tolerance<T>,
}

impl<T: Scalar> IntervalSeries<T> {
    pub fn new(params: &ChurnParams<T>, growth: OnlineGrowth<T>, waiting: Erlang<T>) -> Self {
        Self {
            growth,
            waiting,
            offline_len: params.lambda.recip(),
            online_len: params.mu.recip(),
            cycle: params.mean_cycle(),
            tol: Tolerance::fine(),
        }
    }

    fn tail(&self, from_index: usize) -> T {
        self.growth.ceiling * self.waiting.survival(T::from_count(from_index) * self.cycle)
    }

    fn weighted(&self, a: T, b: T, offset: T) -> Result<T> {
        let g = self.growth;
        let w = self.waiting;
        let edge = Feature {
            center: a,
            width: T::one() / w.rate(),
        };
        let feats = [w.feature(), edge];
        Ok(integrate_graded(|t| g.at(t + offset) * w.pdf(t), a, b, &feats, &self.tol)?.value)
    }

    /// Last message of an online period; `offset` shifts the coverage clock
    /// forward (used when the message sits `i - 1` arrivals from the end).
    pub fn last_online(&self, offset: T) -> Result<LastSplit<T>> {
        let a = self.cycle;
        let off = self.offline_len;
        let next_offline = sum_truncated(
            |j| {
                let start = T::from_count(j) * a;
                Ok(self.growth.at(start + off + offset) * self.waiting.interval_mass(start, start + off))
            },
            |j| self.tail(j),
            &self.tol,
        )?;
        let next_online = sum_truncated(
            |j| {
                let start = T::from_count(j) * a;
                self.weighted(start + off, start + a, offset)
            },
            |j| self.tail(j),
            &self.tol,
        )?;
        Ok(LastSplit {
            next_offline: next_offline.value,
            next_online: next_online.value,
        })
    }

    /// Last message of an offline period; its propagation starts when the source
    /// comes online, so no clock offset applies.
    pub fn last_offline(&self) -> Result<LastSplit<T>> {
        let a = self.cycle;
        let on = self.online_len;
        let next_offline = sum_truncated(
            |j| {
                let start = T::from_count(j) * a;
                let end = start + a;
                Ok(self.growth.at(end) * self.waiting.interval_mass(start + on, end))
            },
            |j| self.tail(j),
            &self.tol,
        )?;
        let next_online = sum_truncated(
            |j| {
                let start = T::from_count(j) * a;
                self.weighted(start, start + on, T::zero())
            },
            |j| self.tail(j),
            &self.tol,
        )?;
        Ok(LastSplit {
            next_offline: next_offline.value,
            next_online: next_online.value,
        })
    }
}
