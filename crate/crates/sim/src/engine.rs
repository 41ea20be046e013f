use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap};

use churncov_core::Category;
use fixedbitset::FixedBitSet;
use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::buffer::{merge_buffers, Buffer};
use crate::config::{Mode, SimConfig, SourceChoice, ZeroPolicy};
use crate::error::SimError;
use crate::rng::{init_stream, peer_stream, sample_exponential, Purpose};
use crate::trace::{EventKind, TraceRecord};

/// One generated message and its final coverage.
#[derive(Debug, Clone, PartialEq)]
pub struct MessageRecord {
    pub id: u64,
    pub origin: usize,
    pub birth_time: f64,
    pub source_online: bool,
    /// Peers online when the message was born.
    pub online_at_birth: usize,
    /// False for messages dropped under [`ZeroPolicy::Exclude`].
    pub counted: bool,
    /// Number of peers that ever held the message.
    pub coverage: u32,
    /// Coverage when the last message was generated, before the drain.
    pub coverage_before_drain: u32,
    /// Assigned after the run from the position in the source's on/off period.
    pub category: Option<Category>,
    period: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub n_peers: usize,
    pub seed: u64,
    pub messages: Vec<MessageRecord>,
    /// Mean coverage of the counted messages (peers).
    pub mean_coverage: f64,
    pub mean_coverage_normalized: f64,
    pub category_tallies: BTreeMap<Category, usize>,
    pub event_count: u64,
    pub end_time: f64,
    /// Time average of the number of online peers, and of its square.
    pub mean_online: f64,
    pub mean_online_sq: f64,
    /// Coverage of message 0 at each configured sample time.
    pub trajectory: Vec<(f64, u32)>,
    pub trace: Vec<TraceRecord>,
}

impl SimResult {
    pub fn per_message_coverage(&self) -> Vec<u32> {
        self.counted().map(|m| m.coverage).collect()
    }

    pub fn counted(&self) -> impl Iterator<Item = &MessageRecord> {
        self.messages.iter().filter(|m| m.counted)
    }

    /// Fraction of peer-time spent online.
    pub fn online_fraction(&self) -> f64 {
        self.mean_online / self.n_peers as f64
    }

    /// Time-averaged variance of the online count.
    pub fn online_variance(&self) -> f64 {
        self.mean_online_sq - self.mean_online * self.mean_online
    }

    /// Online fraction at each message birth.
    pub fn online_fraction_timeline(&self) -> Vec<(f64, f64)> {
        let n = self.n_peers as f64;
        self.messages
            .iter()
            .map(|m| (m.birth_time, m.online_at_birth as f64 / n))
            .collect()
    }

    /// Relative change of the mean coverage caused by the drain phase.
    pub fn drain_effect(&self) -> f64 {
        let (mut before, mut after) = (0.0, 0.0);
        for m in self.counted() {
            before += m.coverage_before_drain as f64;
            after += m.coverage as f64;
        }
        if after > 0.0 {
            (after - before) / after
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Action {
    Transition(usize),
    Generate(usize),
    Sample(usize),
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    seq: u64,
    action: Action,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    // equal times fall back to scheduling order
    fn cmp(&self, other: &Self) -> Ordering {
        self.time.total_cmp(&other.time).then(self.seq.cmp(&other.seq))
    }
}

/// Set of online peers with O(1) insert and remove.
struct OnlineSet {
    members: Vec<usize>,
    slot: Vec<Option<usize>>,
}

impl OnlineSet {
    fn new(n: usize) -> Self {
        Self {
            members: Vec::with_capacity(n),
            slot: vec![None; n],
        }
    }

    fn contains(&self, p: usize) -> bool {
        self.slot[p].is_some()
    }

    fn insert(&mut self, p: usize) {
        if self.slot[p].is_none() {
            self.slot[p] = Some(self.members.len());
            self.members.push(p);
        }
    }

    fn remove(&mut self, p: usize) {
        if let Some(i) = self.slot[p].take() {
            self.members.swap_remove(i);
            if let Some(&moved) = self.members.get(i) {
                self.slot[moved] = Some(i);
            }
        }
    }

    fn len(&self) -> usize {
        self.members.len()
    }
}

struct Sim<'a> {
    cfg: &'a SimConfig,
    k: usize,
    now: f64,
    seq: u64,
    queue: BinaryHeap<Reverse<Event>>,
    online: OnlineSet,
    buffers: Vec<Buffer>,
    period: Vec<u64>,
    transition_rng: Vec<ChaCha8Rng>,
    generation_rng: Vec<ChaCha8Rng>,
    source_rate: f64,
    messages: Vec<MessageRecord>,
    seen: Vec<FixedBitSet>,
    generated: usize,
    end_time: f64,
    online_area: f64,
    online_sq_area: f64,
    trajectory: Vec<(f64, u32)>,
    trace: Vec<TraceRecord>,
    events: u64,
    /// Source periods still running when generation stopped.
    open_period: Option<Vec<u64>>,
}

/// Runs one seeded trial.
///
/// Peers start online with probability `lambda / (lambda + mu)` and then toggle
/// after exponential holding times. A message born at an online source reaches
/// every online peer at once; one born at an offline source waits in the
/// source's own buffer (or is dropped, see [`ZeroPolicy`]). A peer coming online
/// merges its buffer with the common online buffer and the result, the `k`
/// newest ids of both, is shared by all online peers.
pub fn run_trial(cfg: &SimConfig) -> Result<SimResult, SimError> {
    cfg.validate()?;
    let n = cfg.churn.n_peers;
    let mut init = init_stream(cfg.seed);
    let p_on = cfg.churn.online_probability();
    let mut sim = Sim {
        cfg,
        k: cfg.stream.buffer_k,
        now: 0.0,
        seq: 0,
        queue: BinaryHeap::new(),
        online: OnlineSet::new(n),
        buffers: vec![Buffer::new(); n],
        period: vec![0; n],
        transition_rng: (0..n).map(|p| peer_stream(cfg.seed, p, Purpose::Transitions)).collect(),
        generation_rng: (0..n).map(|p| peer_stream(cfg.seed, p, Purpose::Generation)).collect(),
        source_rate: cfg.stream.alpha / cfg.stream.n_sources as f64,
        messages: Vec::with_capacity(cfg.n_messages.min(1 << 16)),
        seen: Vec::with_capacity(cfg.n_messages.min(1 << 16)),
        generated: 0,
        end_time: cfg.time_horizon.unwrap_or(f64::INFINITY),
        online_area: 0.0,
        online_sq_area: 0.0,
        trajectory: Vec::with_capacity(cfg.sample_times.len()),
        trace: Vec::new(),
        events: 0,
        open_period: None,
    };
    for p in 0..n {
        if init.gen_bool(p_on) {
            sim.online.insert(p);
            sim.record(EventKind::Online, p, None);
        }
    }
    for p in 0..n {
        sim.schedule_transition(p)?;
    }
    for (i, src) in sim.pick_sources(&mut init)?.into_iter().enumerate() {
        if i == 0 && cfg.first_message_at_start {
            sim.push(0.0, Action::Generate(src));
        } else {
            sim.schedule_generation(src)?;
        }
    }
    sim.run()?;
    Ok(sim.finish())
}

impl<'a> Sim<'a> {
    fn push(&mut self, time: f64, action: Action) {
        self.seq += 1;
        self.queue.push(Reverse(Event {
            time,
            seq: self.seq,
            action,
        }));
    }

    fn schedule_transition(&mut self, p: usize) -> Result<(), SimError> {
        let rate = if self.online.contains(p) {
            self.cfg.churn.mu
        } else {
            self.cfg.churn.lambda
        };
        let dt = sample_exponential(rate, &mut self.transition_rng[p])?;
        self.push(self.now + dt, Action::Transition(p));
        Ok(())
    }

    fn schedule_generation(&mut self, src: usize) -> Result<(), SimError> {
        let dt = sample_exponential(self.source_rate, &mut self.generation_rng[src])?;
        self.push(self.now + dt, Action::Generate(src));
        Ok(())
    }

    fn pick_sources(&self, rng: &mut ChaCha8Rng) -> Result<Vec<usize>, SimError> {
        let n = self.cfg.churn.n_peers;
        match self.cfg.mode {
            Mode::MultiSource => Ok(sample(rng, n, self.cfg.stream.n_sources).into_vec()),
            Mode::SingleSource => {
                let pool: Vec<usize> = match self.cfg.source_choice {
                    SourceChoice::Random => (0..n).collect(),
                    SourceChoice::Online => (0..n).filter(|&p| self.online.contains(p)).collect(),
                    SourceChoice::Offline => (0..n).filter(|&p| !self.online.contains(p)).collect(),
                };
                if pool.is_empty() {
                    let which = if self.cfg.source_choice == SourceChoice::Online {
                        "online"
                    } else {
                        "offline"
                    };
                    return Err(SimError::NoEligibleSource(which));
                }
                Ok(vec![pool[rng.gen_range(0..pool.len())]])
            }
        }
    }

    fn run(&mut self) -> Result<(), SimError> {
        while let Some(Reverse(ev)) = self.queue.pop() {
            if ev.time > self.end_time {
                self.advance(self.end_time);
                return Ok(());
            }
            self.advance(ev.time);
            self.events += 1;
            match ev.action {
                Action::Transition(p) => self.transition(p)?,
                Action::Generate(src) => self.generate(src)?,
                Action::Sample(i) => {
                    let c = self.messages[0].coverage;
                    self.trajectory.push((self.cfg.sample_times[i], c));
                    self.record(EventKind::Sample, 0, Some(0));
                }
            }
            if self.cfg.debug_checks {
                self.check_online_buffers()?;
            }
        }
        Ok(())
    }

    fn advance(&mut self, t: f64) {
        let dt = t - self.now;
        let on = self.online.len() as f64;
        self.online_area += on * dt;
        self.online_sq_area += on * on * dt;
        self.now = t;
    }

    fn record(&mut self, kind: EventKind, peer: usize, message: Option<u64>) {
        if self.cfg.trace {
            self.trace.push(TraceRecord {
                time: self.now,
                kind,
                peer,
                message,
            });
        }
    }

    fn deliver(&mut self, id: u64, peer: usize) {
        let idx = id as usize;
        if !self.seen[idx].put(peer) {
            self.messages[idx].coverage += 1;
        }
    }

    fn transition(&mut self, p: usize) -> Result<(), SimError> {
        self.period[p] += 1;
        if self.online.contains(p) {
            self.online.remove(p);
            self.record(EventKind::Offline, p, None);
        } else {
            // any current online peer holds the common buffer
            let common = self.online.members.first().map(|&q| self.buffers[q].clone());
            self.online.insert(p);
            self.record(EventKind::Online, p, None);
            if let Some(common) = common {
                let merged = merge_buffers(&common, &self.buffers[p], self.k);
                if merged == common {
                    for &id in merged.ids() {
                        self.deliver(id, p);
                    }
                    self.buffers[p] = merged;
                } else {
                    let members = self.online.members.clone();
                    for &q in &members {
                        for &id in merged.ids() {
                            self.deliver(id, q);
                        }
                        self.buffers[q] = merged.clone();
                    }
                }
            }
        }
        self.schedule_transition(p)
    }

    fn generate(&mut self, src: usize) -> Result<(), SimError> {
        if self.generated >= self.cfg.n_messages {
            return Ok(());
        }
        let id = self.generated as u64;
        self.generated += 1;
        let source_online = self.online.contains(src);
        let counted = source_online || self.cfg.zero_policy == ZeroPolicy::CountAsOne;
        self.messages.push(MessageRecord {
            id,
            origin: src,
            birth_time: self.now,
            source_online,
            online_at_birth: self.online.len(),
            counted,
            coverage: 0,
            coverage_before_drain: 0,
            category: None,
            period: self.period[src],
        });
        self.seen.push(FixedBitSet::with_capacity(self.cfg.churn.n_peers));
        self.record(EventKind::Generate, src, Some(id));
        if source_online {
            let members = self.online.members.clone();
            for &q in &members {
                if self.buffers[q].insert(id, self.k) {
                    self.deliver(id, q);
                }
            }
        } else if counted && self.buffers[src].insert(id, self.k) {
            self.deliver(id, src);
        }
        if id == 0 {
            for i in 0..self.cfg.sample_times.len() {
                self.push(self.now + self.cfg.sample_times[i], Action::Sample(i));
            }
        }
        if self.generated < self.cfg.n_messages {
            self.schedule_generation(src)?;
        } else {
            for m in &mut self.messages {
                m.coverage_before_drain = m.coverage;
            }
            self.open_period = Some(self.period.clone());
            if self.cfg.time_horizon.is_none() {
                let last_sample = self.cfg.sample_times.iter().fold(0.0f64, |a, &b| a.max(b));
                let birth0 = self.messages[0].birth_time;
                self.end_time = (self.now + self.cfg.drain_time()).max(birth0 + last_sample);
            }
        }
        Ok(())
    }

    fn check_online_buffers(&self) -> Result<(), SimError> {
        let mut it = self.online.members.iter();
        if let Some(&first) = it.next() {
            for &q in it {
                if self.buffers[q] != self.buffers[first] {
                    return Err(SimError::InvariantViolated {
                        time: self.now,
                        what: format!(
                            "peers {first} and {q} hold {:?} and {:?}",
                            self.buffers[first].ids(),
                            self.buffers[q].ids()
                        ),
                    });
                }
            }
        }
        Ok(())
    }

    fn finish(mut self) -> SimResult {
        let k = self.k;
        let open = self.open_period.take().unwrap_or_else(|| self.period.clone());
        // position from the end of the message's source period; periods cut
        // short by the end of generation are left untagged
        let mut later: BTreeMap<(usize, u64), usize> = BTreeMap::new();
        for m in self.messages.iter_mut().rev() {
            if open[m.origin] == m.period {
                continue;
            }
            let count = later.entry((m.origin, m.period)).or_insert(0);
            *count += 1;
            let from_end = *count;
            m.category = Some(match (m.source_online, from_end <= k) {
                (true, true) => Category::LastOnline(from_end),
                (false, true) => Category::LastOffline(from_end),
                (true, false) => Category::One,
                (false, false) => Category::Zero,
            });
        }
        let mut tallies = BTreeMap::new();
        let (mut sum, mut count) = (0.0, 0usize);
        for m in self.messages.iter().filter(|m| m.counted) {
            if let Some(cat) = m.category {
                *tallies.entry(cat).or_insert(0) += 1;
            }
            sum += m.coverage as f64;
            count += 1;
        }
        let mean = if count > 0 { sum / count as f64 } else { f64::NAN };
        let span = self.now.max(f64::MIN_POSITIVE);
        let n = self.cfg.churn.n_peers;
        SimResult {
            n_peers: n,
            seed: self.cfg.seed,
            mean_coverage: mean,
            mean_coverage_normalized: mean / n as f64,
            category_tallies: tallies,
            event_count: self.events,
            end_time: self.now,
            mean_online: self.online_area / span,
            mean_online_sq: self.online_sq_area / span,
            trajectory: self.trajectory,
            trace: self.trace,
            messages: self.messages,
        }
    }
}
