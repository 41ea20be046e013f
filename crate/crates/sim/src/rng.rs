//! Deterministic random streams.
//!
//! Every peer gets two independent ChaCha streams (state changes and message
//! generation) derived from the master seed, plus one stream for the initial
//! state, so a trial's outcome does not depend on event processing order.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use crate::error::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Transitions,
    Generation,
}

pub fn init_stream(seed: u64) -> ChaCha8Rng {
    stream(seed, 0)
}

pub fn peer_stream(seed: u64, peer: usize, purpose: Purpose) -> ChaCha8Rng {
    let offset = match purpose {
        Purpose::Transitions => 1,
        Purpose::Generation => 2,
    };
    stream(seed, 2 * peer as u64 + offset)
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Waiting time of a Poisson process with the given rate.
pub fn sample_exponential<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> Result<f64, SimError> {
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(SimError::InvalidConfig(format!("exponential rate {rate}")));
    }
    let d = Exp::new(rate).map_err(|_| SimError::InvalidConfig(format!("exponential rate {rate}")))?;
    Ok(d.sample(rng))
}
