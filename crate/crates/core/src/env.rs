//! Episodic MDP over one scenario. Every device is an agent choosing a
//! server; all agents share one DDQN. Each step grants associations, runs
//! the configured frame and accuracy solvers, and pays reward `1 / cost`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::convex_opt::{self, TimeAllocation, DEFAULT_TAU_FLOOR};
use crate::ddqn::{QLearner, Transition};
use crate::flcost::{self, CostBreakdown, CostModel, RelativeAccuracy};
use crate::radio::{self, Channel};
use crate::scenario::ScenarioInstance;
use crate::{Error, Result};

/// Device-to-server assignment; each device holds at most one server.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Association {
    servers: Vec<Option<usize>>,
}

impl Association {
    pub fn from_servers(servers: Vec<Option<usize>>) -> Self {
        Self { servers }
    }

    /// Grants requests in device-id order until each server is full;
    /// devices arriving at a full server stay unassociated.
    pub fn grant(actions: &[usize], inst: &ScenarioInstance) -> Result<Self> {
        if actions.len() != inst.n_devices() {
            return Err(Error::DimensionMismatch {
                context: "actions",
                expected: inst.n_devices(),
                actual: actions.len(),
            });
        }
        let mut load = vec![0usize; inst.n_agents()];
        let servers = actions
            .iter()
            .enumerate()
            .map(|(device, &a)| {
                if a >= inst.n_agents() {
                    return Err(Error::ActionOutOfRange {
                        device,
                        action: a,
                        n_agents: inst.n_agents(),
                    });
                }
                if load[a] < inst.agents[a].capacity {
                    load[a] += 1;
                    Ok(Some(a))
                } else {
                    Ok(None)
                }
            })
            .collect::<Result<_>>()?;
        Ok(Self { servers })
    }

    pub fn len(&self) -> usize {
        self.servers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.servers.is_empty()
    }

    pub fn server_of(&self, device: usize) -> Option<usize> {
        self.servers[device]
    }

    pub fn members(&self, server: usize) -> Vec<usize> {
        (0..self.servers.len())
            .filter(|&i| self.servers[i] == Some(server))
            .collect()
    }

    pub fn counts(&self, n_agents: usize) -> Vec<usize> {
        let mut c = vec![0; n_agents];
        for j in self.servers.iter().flatten() {
            c[*j] += 1;
        }
        c
    }

    pub fn n_unassociated(&self) -> usize {
        self.servers.iter().filter(|s| s.is_none()).count()
    }

    /// Binary matrix `a[device][server]`.
    pub fn to_matrix(&self, n_agents: usize) -> Vec<Vec<u8>> {
        self.servers
            .iter()
            .map(|s| (0..n_agents).map(|j| u8::from(*s == Some(j))).collect())
            .collect()
    }

    pub fn check(&self, inst: &ScenarioInstance) -> std::result::Result<(), String> {
        if self.servers.len() != inst.n_devices() {
            return Err(format!(
                "{} rows for {} devices",
                self.servers.len(),
                inst.n_devices()
            ));
        }
        if let Some(j) = self
            .servers
            .iter()
            .flatten()
            .find(|&&j| j >= inst.n_agents())
        {
            return Err(format!("server {j} out of range"));
        }
        for (j, c) in self.counts(inst.n_agents()).into_iter().enumerate() {
            if c > inst.agents[j].capacity {
                return Err(format!(
                    "server {j} holds {c} > capacity {}",
                    inst.agents[j].capacity
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TauSolver {
    Uniform,
    Convex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ThetaSolver {
    Fixed,
    Convex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub tau: TauSolver,
    pub theta: ThetaSolver,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvConfig {
    pub steps_per_episode: usize,
    /// Per-step Rayleigh power fading; off gives a static channel.
    pub fading: bool,
    pub cost: CostModel,
    pub tau_floor: f64,
    pub theta_tol: f64,
    pub theta_default: f64,
    /// Rounds of alternating tau/theta refinement when both solvers run.
    pub alternations: usize,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            steps_per_episode: 20,
            fading: true,
            cost: CostModel::default(),
            tau_floor: DEFAULT_TAU_FLOOR,
            theta_tol: 1e-6,
            theta_default: 0.5,
            alternations: 2,
        }
    }
}

/// Decisions and cost of one step.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub association: Association,
    pub tau: TimeAllocation,
    pub theta: RelativeAccuracy,
    pub cost: CostBreakdown,
}

/// Grants `actions`, runs the configured solvers on `channel` and prices the
/// result.
pub fn evaluate(
    inst: &ScenarioInstance,
    channel: &Channel,
    actions: &[usize],
    solvers: SolverConfig,
    cfg: &EnvConfig,
) -> Result<Evaluation> {
    let association = Association::grant(actions, inst)?;
    let model = &cfg.cost;
    let price = |tau: &TimeAllocation, theta| {
        flcost::total_cost(inst, channel, &association, tau, theta, model)
    };

    let mut theta = RelativeAccuracy::new(cfg.theta_default, &model.fl)?;
    let mut tau = match solvers.tau {
        TauSolver::Uniform => convex_opt::uniform_time(&association, inst.n_agents()),
        TauSolver::Convex => {
            convex_opt::allocate_time(inst, channel, &association, theta, model, cfg.tau_floor)
        }
    };
    let mut cost = price(&tau, theta);

    if solvers.theta == ThetaSolver::Convex {
        for round in 0..cfg.alternations.max(1) {
            let t =
                convex_opt::optimize_theta(inst, channel, &association, &tau, model, cfg.theta_tol);
            let c = price(&tau, t);
            if c.total_s <= cost.total_s {
                theta = t;
                cost = c;
            }
            if solvers.tau == TauSolver::Uniform || round + 1 == cfg.alternations.max(1) {
                break;
            }
            let next =
                convex_opt::allocate_time(inst, channel, &association, theta, model, cfg.tau_floor);
            let c = price(&next, theta);
            if c.total_s <= cost.total_s {
                tau = next;
                cost = c;
            }
        }
    }
    Ok(Evaluation {
        association,
        tau,
        theta,
        cost,
    })
}

/// Per-device observations at one step.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    pub observations: Vec<Vec<f64>>,
    pub step: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub cost: CostBreakdown,
    pub reward: f64,
    pub next_state: EnvState,
    pub terminal: bool,
    pub evaluation: Evaluation,
}

/// Fixed affine map of link gain in dB onto `[-1, 1]`.
#[derive(Debug, Clone, Copy)]
struct GainScale {
    low_db: f64,
    high_db: f64,
}

impl GainScale {
    fn for_instance(inst: &ScenarioInstance) -> Self {
        let f = inst.radio.carrier_freq_hz;
        let side = inst.radio.area_side_m;
        let high_db = radio::linear_to_db(radio::path_gain(side / 20.0, f));
        let low_db =
            radio::linear_to_db(radio::path_gain(side * std::f64::consts::SQRT_2, f)) - 10.0;
        Self { low_db, high_db }
    }

    fn feature(&self, gain: f64) -> f64 {
        if !(gain > 0.0) {
            return -1.0;
        }
        let db = radio::linear_to_db(gain);
        (2.0 * (db - self.low_db) / (self.high_db - self.low_db) - 1.0).clamp(-1.0, 1.0)
    }
}

pub struct Env<'a> {
    inst: &'a ScenarioInstance,
    cfg: EnvConfig,
    gains: Vec<Vec<f64>>,
    fading: Vec<Vec<f64>>,
    step: usize,
    rng: ChaCha8Rng,
    scale: GainScale,
}

impl<'a> Env<'a> {
    pub fn new(inst: &'a ScenarioInstance, cfg: EnvConfig) -> Self {
        let gains = inst.path_gains();
        let fading = vec![vec![1.0; inst.n_agents()]; inst.n_devices()];
        Self {
            inst,
            cfg,
            gains,
            fading,
            step: 0,
            rng: ChaCha8Rng::seed_from_u64(0),
            scale: GainScale::for_instance(inst),
        }
    }

    pub fn instance(&self) -> &ScenarioInstance {
        self.inst
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    /// Observation length: gains and loads per server, a role flag and the
    /// step position within the episode.
    pub fn state_dim(&self) -> usize {
        2 * self.inst.n_agents() + 2
    }

    pub fn n_actions(&self) -> usize {
        self.inst.n_agents()
    }

    pub fn path_gains(&self) -> &[Vec<f64>] {
        &self.gains
    }

    pub fn reset(&mut self, seed: u64) -> EnvState {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self.step = 0;
        self.resample_fading();
        self.state()
    }

    fn resample_fading(&mut self) {
        if !self.cfg.fading {
            return;
        }
        for row in &mut self.fading {
            for h in row.iter_mut() {
                *h = self.rng.sample(Exp1);
            }
        }
    }

    pub fn channel(&self) -> Channel {
        let r = &self.inst.radio;
        Channel::from_gains(
            &self.gains,
            &self.fading,
            r.tx_power_w(),
            r.bandwidth_hz,
            r.noise_psd_w_hz(),
        )
    }

    /// Observations with every server still empty, as seen by the first
    /// device to choose in a step.
    pub fn state(&self) -> EnvState {
        let empty = vec![0; self.inst.n_agents()];
        let observations = (0..self.inst.n_devices())
            .map(|d| self.observe(d, &empty))
            .collect();
        EnvState {
            observations,
            step: self.step,
        }
    }

    /// Observation of `device` given the seats already granted this step to
    /// devices with a lower id.
    pub fn observe(&self, device: usize, granted: &[usize]) -> Vec<f64> {
        let d = &self.inst.devices[device];
        let mut obs = Vec::with_capacity(self.state_dim());
        obs.extend(
            self.gains[device]
                .iter()
                .zip(&self.fading[device])
                .map(|(g, h)| self.scale.feature(g * h)),
        );
        obs.extend(
            granted
                .iter()
                .zip(&self.inst.agents)
                .map(|(&l, a)| 2.0 * (l as f64 / a.capacity as f64).min(1.0) - 1.0),
        );
        obs.push(if d.is_learner() { 1.0 } else { -1.0 });
        obs.push(2.0 * self.step as f64 / self.cfg.steps_per_episode.max(1) as f64 - 1.0);
        obs
    }

    pub fn step(&mut self, actions: &[usize], solvers: SolverConfig) -> Result<StepOutcome> {
        let evaluation = evaluate(self.inst, &self.channel(), actions, solvers, &self.cfg)?;
        let cost = evaluation.cost;
        self.step += 1;
        self.resample_fading();
        Ok(StepOutcome {
            cost,
            reward: 1.0 / cost.total_s,
            next_state: self.state(),
            terminal: self.step >= self.cfg.steps_per_episode,
            evaluation,
        })
    }
}

/// How devices pick servers during an episode.
pub enum Policy<'a> {
    Ddqn {
        learner: &'a mut QLearner,
        epsilon: f64,
        train: bool,
    },
    Random,
    /// Strongest free-space link, ignoring fading.
    Nearest,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EpisodeLog {
    pub rewards: Vec<f64>,
    pub costs: Vec<CostBreakdown>,
    pub unassociated: Vec<usize>,
}

impl EpisodeLog {
    pub fn mean_reward(&self) -> f64 {
        self.rewards.iter().sum::<f64>() / self.rewards.len().max(1) as f64
    }

    pub fn mean_cost(&self) -> f64 {
        self.costs.iter().map(|c| c.total_s).sum::<f64>() / self.costs.len().max(1) as f64
    }
}

/// Runs one episode from `reset(seed)`. Devices choose in id order and a
/// learning policy sees the seats granted so far in the current step. Every device contributes one transition per
/// step to the shared buffer whose next state is its observation at the start
/// of the following step. When `train` is set, gradient steps follow each
/// environment step.
pub fn run_episode(
    env: &mut Env<'_>,
    policy: &mut Policy<'_>,
    solvers: SolverConfig,
    seed: u64,
    rng: &mut ChaCha8Rng,
) -> Result<EpisodeLog> {
    env.reset(seed);
    let mut log = EpisodeLog::default();
    let n_actions = env.n_actions();
    let n_devices = env.instance().n_devices();
    if let Policy::Ddqn { learner, .. } = policy {
        let expected = (env.state_dim(), n_actions);
        let actual = (learner.online.input_dim(), learner.online.output_dim());
        if expected != actual {
            return Err(Error::DimensionMismatch {
                context: "learner input",
                expected: expected.0,
                actual: actual.0,
            });
        }
    }
    let mut observations = Vec::with_capacity(n_devices);
    loop {
        observations.clear();
        let actions: Vec<usize> = match policy {
            Policy::Ddqn {
                learner, epsilon, ..
            } => {
                let mut granted = vec![0; n_actions];
                let mut actions = Vec::with_capacity(n_devices);
                for d in 0..n_devices {
                    let obs = env.observe(d, &granted);
                    let a = learner.act(&obs, *epsilon, rng)?;
                    if granted[a] < env.instance().agents[a].capacity {
                        granted[a] += 1;
                    }
                    observations.push(obs);
                    actions.push(a);
                }
                actions
            }
            Policy::Random => (0..n_devices)
                .map(|_| rng.random_range(0..n_actions))
                .collect(),
            Policy::Nearest => env
                .path_gains()
                .iter()
                .map(|g| crate::ddqn::argmax(g))
                .collect(),
        };
        let out = env.step(&actions, solvers)?;
        if let Policy::Ddqn { learner, train, .. } = policy {
            for ((obs, next), &a) in observations
                .drain(..)
                .zip(&out.next_state.observations)
                .zip(&actions)
            {
                learner.remember(Transition {
                    state: obs,
                    action: a,
                    reward: out.reward,
                    next_state: next.clone(),
                    terminal: out.terminal,
                });
            }
            if *train {
                for _ in 0..learner.hyper.updates_per_step {
                    learner.learn(rng)?;
                }
            }
        }
        log.rewards.push(out.reward);
        log.costs.push(out.cost);
        log.unassociated
            .push(out.evaluation.association.n_unassociated());
        if out.terminal {
            break;
        }
    }
    if let Policy::Ddqn {
        learner,
        train: true,
        ..
    } = policy
    {
        learner.episodes += 1;
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ddqn::DqnHyperparams;
    use crate::scenario::{gen_instance, GenerationParams};

    const ALL: SolverConfig = SolverConfig {
        tau: TauSolver::Convex,
        theta: ThetaSolver::Convex,
    };
    const TAU: SolverConfig = SolverConfig {
        tau: TauSolver::Convex,
        theta: ThetaSolver::Fixed,
    };
    const NONE: SolverConfig = SolverConfig {
        tau: TauSolver::Uniform,
        theta: ThetaSolver::Fixed,
    };

    fn default_instance() -> ScenarioInstance {
        gen_instance(&GenerationParams::default()).unwrap()
    }

    #[test]
    fn capacity_granting_in_id_order() {
        let inst = default_instance();
        let assoc = Association::grant(&vec![0; 36], &inst).unwrap();
        assert_eq!(assoc.members(0), (0..11).collect::<Vec<_>>());
        assert_eq!(assoc.n_unassociated(), 25);
        assoc.check(&inst).unwrap();
        let m = assoc.to_matrix(5);
        assert!(m
            .iter()
            .all(|row| row.iter().map(|&x| x as usize).sum::<usize>() <= 1));
    }

    #[test]
    fn out_of_range_action_is_error() {
        let inst = default_instance();
        let mut actions = vec![0; 36];
        actions[4] = 5;
        assert!(matches!(
            Association::grant(&actions, &inst),
            Err(Error::ActionOutOfRange {
                device: 4,
                action: 5,
                ..
            })
        ));
    }

    #[test]
    fn reset_determinism() {
        let inst = default_instance();
        let mut env = Env::new(&inst, EnvConfig::default());
        let a = env.reset(3);
        let b = env.reset(3);
        assert_eq!(a, b);
        assert_eq!(a.step, 0);
        let c = env.reset(4);
        assert_ne!(a.observations, c.observations);
        assert!(a
            .observations
            .iter()
            .flatten()
            .all(|x| (-1.0..=1.0).contains(x)));
        assert_eq!(a.observations[0].len(), env.state_dim());
    }

    #[test]
    fn reward_is_reciprocal_cost_and_terminal_at_20() {
        let inst = default_instance();
        let mut env = Env::new(&inst, EnvConfig::default());
        env.reset(1);
        let actions: Vec<usize> = (0..36).map(|i| i % 5).collect();
        for k in 1..=20 {
            let out = env.step(&actions, ALL).unwrap();
            assert!((out.reward * out.cost.total_s - 1.0).abs() < 1e-12);
            assert_eq!(out.terminal, k == 20);
            out.evaluation
                .tau
                .check(&out.evaluation.association, 5, DEFAULT_TAU_FLOOR)
                .unwrap();
        }
    }

    #[test]
    fn solver_dominance_on_fixed_actions() {
        let inst = default_instance();
        let mut env = Env::new(&inst, EnvConfig::default());
        env.reset(9);
        let ch = env.channel();
        let cfg = EnvConfig::default();
        let actions: Vec<usize> = (0..36).map(|i| (i * 7) % 5).collect();
        let r = |s| {
            1.0 / evaluate(&inst, &ch, &actions, s, &cfg)
                .unwrap()
                .cost
                .total_s
        };
        assert!(r(TAU) >= r(NONE) * (1.0 - 1e-9));
        assert!(r(ALL) >= r(TAU) * (1.0 - 1e-9));
    }

    #[test]
    fn episode_lengths_and_frozen_parameters() {
        let inst = default_instance();
        let mut env = Env::new(&inst, EnvConfig::default());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut learner = QLearner::new(
            env.state_dim(),
            env.n_actions(),
            DqnHyperparams::default(),
            &mut rng,
        );
        let before = learner.online.clone();
        let run = |env: &mut Env, learner: &mut QLearner| {
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            let mut policy = Policy::Ddqn {
                learner,
                epsilon: 0.0,
                train: false,
            };
            run_episode(env, &mut policy, ALL, 42, &mut rng).unwrap()
        };
        let a = run(&mut env, &mut learner);
        let b = run(&mut env, &mut learner);
        assert_eq!(a.rewards.len(), 20);
        assert_eq!(a, b);
        assert_eq!(learner.online, before);
        assert_eq!(learner.episodes, 0);

        let mut policy = Policy::Ddqn {
            learner: &mut learner,
            epsilon: 0.5,
            train: true,
        };
        run_episode(&mut env, &mut policy, ALL, 43, &mut rng).unwrap();
        assert_ne!(learner.online, before);
        assert_eq!(learner.episodes, 1);
    }

    #[test]
    fn observation_layout() {
        let inst = default_instance();
        let mut env = Env::new(&inst, EnvConfig::default());
        env.reset(0);
        let o = env.observe(0, &[0, 11, 5, 0, 30]);
        assert_eq!(o.len(), 12);
        assert_eq!(&o[5..10], &[-1.0, 1.0, 2.0 * 5.0 / 11.0 - 1.0, -1.0, 1.0]);
        assert_eq!(o[10], 1.0);
        assert_eq!(o[11], -1.0);
        assert_eq!(env.observe(35, &[0; 5])[10], -1.0);
        let out = env.step(&vec![0; 36], NONE).unwrap();
        assert_eq!(out.next_state.observations[0][11], 2.0 / 20.0 - 1.0);
        assert_eq!(out.next_state.observations[0][5..10], [-1.0; 5]);
    }
}
