//! Latency cost model. A learner's FL round takes `v log2(1/theta)` local
//! passes plus one model upload, and the network needs `alpha / (1 - theta)`
//! global rounds; offloaders pay upload plus server compute time. Constraint
//! violations are charged as fixed latency penalties so the reward
//! `1 / total` stays finite and informative.

use serde::{Deserialize, Serialize};

use crate::convex_opt::TimeAllocation;
use crate::env::Association;
use crate::radio::{self, Channel};
use crate::scenario::{Device, Role, ScenarioInstance};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlModelParams {
    /// Local iterations per unit of `log2(1/theta)`.
    pub local_iter_coeff: f64,
    pub global_round_coeff: f64,
    pub theta_min: f64,
    pub theta_max: f64,
}

impl Default for FlModelParams {
    fn default() -> Self {
        Self {
            local_iter_coeff: 2.0,
            global_round_coeff: 2.0,
            theta_min: 0.01,
            theta_max: 0.99,
        }
    }
}

impl FlModelParams {
    pub fn check(&self) -> Result<()> {
        if !(self.local_iter_coeff > 0.0) {
            return Err(Error::InvalidParameter {
                name: "local_iter_coeff",
                reason: "must be > 0".into(),
            });
        }
        if !(self.global_round_coeff > 0.0) {
            return Err(Error::InvalidParameter {
                name: "global_round_coeff",
                reason: "must be > 0".into(),
            });
        }
        if !(0.0 < self.theta_min && self.theta_min <= self.theta_max && self.theta_max < 1.0) {
            return Err(Error::InvalidParameter {
                name: "theta_min/theta_max",
                reason: format!("need 0 < {} <= {} < 1", self.theta_min, self.theta_max),
            });
        }
        Ok(())
    }

    pub fn local_iterations(&self, theta: RelativeAccuracy) -> f64 {
        self.local_iter_coeff * (1.0 / theta.value()).log2()
    }

    pub fn global_rounds(&self, theta: RelativeAccuracy) -> f64 {
        self.global_round_coeff / (1.0 - theta.value())
    }
}

/// Relative local accuracy; larger values mean a looser local solve.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RelativeAccuracy(f64);

impl RelativeAccuracy {
    pub const DEFAULT: RelativeAccuracy = RelativeAccuracy(0.5);

    pub fn new(theta: f64, params: &FlModelParams) -> Result<Self> {
        if !(params.theta_min..=params.theta_max).contains(&theta) {
            return Err(Error::InvalidParameter {
                name: "theta",
                reason: format!(
                    "{theta} not in [{}, {}]",
                    params.theta_min, params.theta_max
                ),
            });
        }
        Ok(Self(theta))
    }

    /// Unchecked constructor for values already known to lie in the bounds.
    pub(crate) fn from_raw(theta: f64) -> Self {
        Self(theta)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CostModel {
    pub fl: FlModelParams,
    pub learn_weight: f64,
    pub offload_weight: f64,
    pub penalty_unassoc_s: f64,
    pub penalty_deadline_s: f64,
    pub penalty_reliability_s: f64,
    pub cost_floor_s: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        Self {
            fl: FlModelParams::default(),
            learn_weight: 1.0,
            offload_weight: 1.0,
            penalty_unassoc_s: 5.0,
            penalty_deadline_s: 2.0,
            penalty_reliability_s: 2.0,
            cost_floor_s: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub learning_cost_s: f64,
    pub offload_cost_s: f64,
    pub penalty_s: f64,
    pub total_s: f64,
}

/// One device's share of the cost.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DeviceCost {
    pub learning_s: f64,
    pub offload_s: f64,
    pub penalty_s: f64,
}

impl DeviceCost {
    pub fn total(&self) -> f64 {
        self.learning_s + self.offload_s + self.penalty_s
    }
}

/// Wall time of one FL round for a learner uploading at `rate` bit/s.
/// Infinite when the rate is zero.
pub fn learner_round_time(
    dev: &Device,
    rate: f64,
    theta: RelativeAccuracy,
    params: &FlModelParams,
) -> f64 {
    let compute = params.local_iterations(theta) * dev.local_pass_time_s();
    if rate <= 0.0 {
        return f64::INFINITY;
    }
    compute + dev.model_size_bits / rate
}

/// Upload plus server execution time of an offloaded task.
pub fn offload_latency(inst: &ScenarioInstance, dev: &Device, server: usize, rate: f64) -> f64 {
    if rate <= 0.0 {
        return f64::INFINITY;
    }
    let agent = &inst.agents[server];
    dev.task_size_bits / rate
        + dev.task_size_bits * agent.server_cycles_per_bit / agent.server_cpu_hz
}

/// Cost contributed by `device` holding frame share `tau` on `server`
/// (`None` when unassociated).
pub fn device_cost(
    inst: &ScenarioInstance,
    channel: &Channel,
    device: usize,
    server: Option<usize>,
    tau: f64,
    theta: RelativeAccuracy,
    model: &CostModel,
) -> DeviceCost {
    let dev = &inst.devices[device];
    let Some(server) = server else {
        return DeviceCost {
            penalty_s: model.penalty_unassoc_s,
            ..Default::default()
        };
    };
    let rate = tau * channel.full_frame_rate(device, server);
    match dev.role {
        Role::Learner => {
            let t = learner_round_time(dev, rate, theta, &model.fl);
            if t.is_finite() {
                DeviceCost {
                    learning_s: model.learn_weight * model.fl.global_rounds(theta) * t,
                    ..Default::default()
                }
            } else {
                DeviceCost {
                    penalty_s: model.penalty_unassoc_s,
                    ..Default::default()
                }
            }
        }
        Role::Offloader => {
            let latency = offload_latency(inst, dev, server, rate);
            if !latency.is_finite() {
                return DeviceCost {
                    penalty_s: model.penalty_unassoc_s,
                    ..Default::default()
                };
            }
            let mut penalty = 0.0;
            if latency > dev.deadline_s {
                penalty += model.penalty_deadline_s;
            }
            if !radio::reliability_ok(channel.snr(device, server), inst.radio.min_snr_linear) {
                penalty += model.penalty_reliability_s;
            }
            DeviceCost {
                offload_s: model.offload_weight * latency,
                penalty_s: penalty,
                ..Default::default()
            }
        }
    }
}

fn sum_role(
    inst: &ScenarioInstance,
    channel: &Channel,
    assoc: &Association,
    tau: &TimeAllocation,
    theta: RelativeAccuracy,
    model: &CostModel,
    role: Role,
) -> DeviceCost {
    let mut acc = DeviceCost::default();
    for d in inst.devices.iter().filter(|d| d.role == role) {
        let c = device_cost(
            inst,
            channel,
            d.id,
            assoc.server_of(d.id),
            tau.get(d.id),
            theta,
            model,
        );
        acc.learning_s += c.learning_s;
        acc.offload_s += c.offload_s;
        acc.penalty_s += c.penalty_s;
    }
    acc
}

/// Weighted FL latency over all learners, including their unassociation
/// penalties.
pub fn learning_cost(
    inst: &ScenarioInstance,
    channel: &Channel,
    assoc: &Association,
    tau: &TimeAllocation,
    theta: RelativeAccuracy,
    model: &CostModel,
) -> f64 {
    sum_role(inst, channel, assoc, tau, theta, model, Role::Learner).total()
}

/// Offloading latency over all offloaders, including deadline, reliability
/// and unassociation penalties.
pub fn offload_cost(
    inst: &ScenarioInstance,
    channel: &Channel,
    assoc: &Association,
    tau: &TimeAllocation,
    model: &CostModel,
) -> f64 {
    sum_role(
        inst,
        channel,
        assoc,
        tau,
        RelativeAccuracy::DEFAULT,
        model,
        Role::Offloader,
    )
    .total()
}

pub fn total_cost(
    inst: &ScenarioInstance,
    channel: &Channel,
    assoc: &Association,
    tau: &TimeAllocation,
    theta: RelativeAccuracy,
    model: &CostModel,
) -> CostBreakdown {
    let l = sum_role(inst, channel, assoc, tau, theta, model, Role::Learner);
    let o = sum_role(inst, channel, assoc, tau, theta, model, Role::Offloader);
    let penalty_s = l.penalty_s + o.penalty_s;
    let total = l.learning_s + o.offload_s + penalty_s;
    CostBreakdown {
        learning_cost_s: l.learning_s,
        offload_cost_s: o.offload_s,
        penalty_s,
        total_s: total.max(model.cost_floor_s),
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;
    use crate::scenario::{EdgeAgent, RadioConfig};

    pub fn device(id: usize, role: Role) -> Device {
        Device {
            id,
            position: (0.0, 0.0),
            role,
            cycles_per_bit: 100.0,
            cpu_freq_hz: 1e9,
            local_data_bits: 1e6,
            model_size_bits: 5e5,
            task_size_bits: 2e6,
            deadline_s: 0.5,
        }
    }

    pub fn agent(id: usize) -> EdgeAgent {
        EdgeAgent {
            id,
            position: (0.0, 0.0),
            capacity: 4,
            server_cpu_hz: 1e10,
            server_cycles_per_bit: 50.0,
        }
    }

    pub fn instance(roles: &[Role], n_agents: usize) -> ScenarioInstance {
        ScenarioInstance {
            radio: RadioConfig {
                min_snr_linear: 0.0,
                ..Default::default()
            },
            devices: roles
                .iter()
                .enumerate()
                .map(|(i, r)| device(i, *r))
                .collect(),
            agents: (0..n_agents).map(agent).collect(),
            seed: 0,
        }
    }
}
