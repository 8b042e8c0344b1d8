//! Double deep Q-learning from scratch: a dense network, a FIFO replay
//! buffer, epsilon-greedy behaviour, RMSProp updates and a periodically
//! synchronised target copy.

mod mlp;
mod replay;
mod rmsprop;

pub use mlp::{Layer, MlpParams};
pub use replay::{ReplayBuffer, Transition};
pub use rmsprop::{rmsprop_update, RmsPropState};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    /// Multiplicative decay per episode.
    pub decay: f64,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self {
            start: 1.0,
            end: 0.05,
            decay: 0.995,
        }
    }
}

impl EpsilonSchedule {
    pub fn at(&self, episode: u64) -> f64 {
        (self.start * self.decay.powf(episode as f64)).max(self.end)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DqnHyperparams {
    pub gamma: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub replay_capacity: usize,
    pub hidden: Vec<usize>,
    pub epsilon: EpsilonSchedule,
    pub target_sync_period: u64,
    pub rmsprop_rho: f64,
    pub rmsprop_eps: f64,
    /// Gradient steps per environment step once the buffer holds a batch.
    pub updates_per_step: usize,
    /// Standardize rewards with running statistics as they enter the buffer.
    pub normalize_rewards: bool,
}

impl Default for DqnHyperparams {
    fn default() -> Self {
        Self {
            gamma: 0.9,
            learning_rate: 0.001,
            batch_size: 16,
            replay_capacity: 500,
            hidden: vec![64, 32, 32],
            epsilon: EpsilonSchedule::default(),
            target_sync_period: 100,
            rmsprop_rho: 0.9,
            rmsprop_eps: 1e-8,
            updates_per_step: 1,
            normalize_rewards: true,
        }
    }
}

impl DqnHyperparams {
    pub fn check(&self) -> std::result::Result<(), (&'static str, String)> {
        let bad = |k: &'static str, m: String| Err((k, m));
        if !(0.0..1.0).contains(&self.gamma) {
            return bad("gamma", format!("{} not in [0, 1)", self.gamma));
        }
        if !(self.learning_rate > 0.0) {
            return bad(
                "learning_rate",
                format!("{} must be > 0", self.learning_rate),
            );
        }
        if self.batch_size == 0 {
            return bad("batch_size", "must be >= 1".into());
        }
        if self.replay_capacity == 0 {
            return bad("replay_capacity", "must be >= 1".into());
        }
        if self.hidden.contains(&0) {
            return bad("hidden", "layer widths must be >= 1".into());
        }
        let e = &self.epsilon;
        if !((0.0..=1.0).contains(&e.start)
            && (0.0..=1.0).contains(&e.end)
            && e.decay > 0.0
            && e.decay <= 1.0)
        {
            return bad(
                "epsilon",
                "start, end in [0, 1] and decay in (0, 1] required".into(),
            );
        }
        if self.target_sync_period == 0 {
            return bad("target_sync_period", "must be >= 1".into());
        }
        if !(0.0..1.0).contains(&self.rmsprop_rho) || !(self.rmsprop_eps > 0.0) {
            return bad("rmsprop_rho", "rho in [0, 1) and eps > 0 required".into());
        }
        Ok(())
    }

    pub fn layer_sizes(&self, state_dim: usize, n_actions: usize) -> Vec<usize> {
        let mut sizes = vec![state_dim];
        sizes.extend(&self.hidden);
        sizes.push(n_actions);
        sizes
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(q: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in q.iter().enumerate().skip(1) {
        if v > q[best] {
            best = i;
        }
    }
    best
}

/// Epsilon-greedy action.
pub fn act<R: Rng + ?Sized>(
    params: &MlpParams,
    state: &[f64],
    epsilon: f64,
    rng: &mut R,
) -> Result<usize> {
    let q = params.forward(state)?;
    if rng.random::<f64>() < epsilon {
        Ok(rng.random_range(0..q.len()))
    } else {
        Ok(argmax(&q))
    }
}

/// Double-Q targets: the online network picks the next action, the target
/// network scores it.
pub fn td_targets(
    online: &MlpParams,
    target: &MlpParams,
    batch: &[&Transition],
    gamma: f64,
) -> Result<Vec<f64>> {
    if batch.is_empty() {
        return Err(Error::Empty("td batch"));
    }
    batch
        .iter()
        .map(|t| {
            if t.terminal {
                return Ok(t.reward);
            }
            let next = argmax(&online.forward(&t.next_state)?);
            Ok(t.reward + gamma * target.forward(&t.next_state)?[next])
        })
        .collect()
}

/// One RMSProp step on the mean squared TD error of `batch`.
pub fn train_step(
    online: &MlpParams,
    opt: &RmsPropState,
    batch: &[&Transition],
    targets: &[f64],
    learning_rate: f64,
) -> Result<(MlpParams, RmsPropState, f64)> {
    let states: Vec<&[f64]> = batch.iter().map(|t| t.state.as_slice()).collect();
    let actions: Vec<usize> = batch.iter().map(|t| t.action).collect();
    let (loss, grad) = online.loss_and_grad(&states, &actions, targets)?;
    let grad_norm = grad.params().map(|g| g * g).sum::<f64>().sqrt();
    if !loss.is_finite() || !grad_norm.is_finite() {
        return Err(Error::NonFinite { loss, grad_norm });
    }
    let (next, next_opt) = rmsprop::apply(online, opt, &grad, learning_rate);
    Ok((next, next_opt, loss))
}

pub fn sync_target(online: &MlpParams) -> MlpParams {
    online.clone()
}

/// Online and target networks, optimiser state and replay memory of one
/// learner.
#[derive(Debug, Clone)]
pub struct QLearner {
    pub online: MlpParams,
    pub target: MlpParams,
    pub optimizer: RmsPropState,
    pub buffer: ReplayBuffer,
    pub hyper: DqnHyperparams,
    pub train_steps: u64,
    pub episodes: u64,
    pub reward_stats: RewardStats,
}

/// Running mean and variance (Welford) of raw rewards.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RewardStats {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
}

impl RewardStats {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn std(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        (self.m2 / self.count as f64).sqrt()
    }

    /// `(x - mean) / std`, or just centred while the spread is still zero.
    pub fn standardize(&self, x: f64) -> f64 {
        let sd = self.std();
        if sd > 0.0 {
            (x - self.mean) / sd
        } else {
            x - self.mean
        }
    }
}

impl QLearner {
    pub fn new<R: Rng + ?Sized>(
        state_dim: usize,
        n_actions: usize,
        hyper: DqnHyperparams,
        rng: &mut R,
    ) -> Self {
        let online = MlpParams::init(&hyper.layer_sizes(state_dim, n_actions), rng);
        let target = sync_target(&online);
        let optimizer = RmsPropState::new(online.n_params(), hyper.rmsprop_rho, hyper.rmsprop_eps);
        Self {
            online,
            target,
            optimizer,
            buffer: ReplayBuffer::new(hyper.replay_capacity),
            hyper,
            train_steps: 0,
            episodes: 0,
            reward_stats: RewardStats::default(),
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.hyper.epsilon.at(self.episodes)
    }

    pub fn act<R: Rng + ?Sized>(&self, state: &[f64], epsilon: f64, rng: &mut R) -> Result<usize> {
        act(&self.online, state, epsilon, rng)
    }

    pub fn greedy(&self, state: &[f64]) -> Result<usize> {
        Ok(argmax(&self.online.forward(state)?))
    }

    pub fn remember(&mut self, mut t: Transition) {
        if self.hyper.normalize_rewards {
            self.reward_stats.push(t.reward);
            t.reward = self.reward_stats.standardize(t.reward);
        }
        self.buffer.push(t);
    }

    /// Samples a batch and takes one gradient step, syncing the target every
    /// `target_sync_period` steps. `None` until the buffer holds a batch.
    pub fn learn<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Option<f64>> {
        if self.buffer.len() < self.hyper.batch_size {
            return Ok(None);
        }
        let batch = self.buffer.sample(self.hyper.batch_size, rng);
        let targets = td_targets(&self.online, &self.target, &batch, self.hyper.gamma)?;
        let (online, opt, loss) = train_step(
            &self.online,
            &self.optimizer,
            &batch,
            &targets,
            self.hyper.learning_rate,
        )?;
        self.online = online;
        self.optimizer = opt;
        self.train_steps += 1;
        if self
            .train_steps
            .is_multiple_of(self.hyper.target_sync_period)
        {
            self.target = sync_target(&self.online);
        }
        Ok(Some(loss))
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            layer_sizes: self.online.layer_sizes.clone(),
            online: self.online.layers.clone(),
            target: self.target.layers.clone(),
            optimizer: self.optimizer.clone(),
            train_steps: self.train_steps,
            episodes: self.episodes,
            reward_stats: self.reward_stats,
        }
    }

    /// Restores networks and counters; the replay buffer starts empty.
    pub fn from_checkpoint(ck: Checkpoint, hyper: DqnHyperparams) -> Result<Self> {
        let online = MlpParams {
            layer_sizes: ck.layer_sizes.clone(),
            layers: ck.online,
        };
        let target = MlpParams {
            layer_sizes: ck.layer_sizes,
            layers: ck.target,
        };
        online.check()?;
        target.check()?;
        if ck.optimizer.sq_avg.len() != online.n_params() {
            return Err(Error::DimensionMismatch {
                context: "optimizer state",
                expected: online.n_params(),
                actual: ck.optimizer.sq_avg.len(),
            });
        }
        Ok(Self {
            online,
            target,
            optimizer: ck.optimizer,
            buffer: ReplayBuffer::new(hyper.replay_capacity),
            hyper,
            train_steps: ck.train_steps,
            episodes: ck.episodes,
            reward_stats: ck.reward_stats,
        })
    }
}

/// On-disk learner state. Weight matrices are row-major `[out][in]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub layer_sizes: Vec<usize>,
    pub online: Vec<Layer>,
    pub target: Vec<Layer>,
    pub optimizer: RmsPropState,
    pub train_steps: u64,
    pub episodes: u64,
    pub reward_stats: RewardStats,
}

impl Checkpoint {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}
