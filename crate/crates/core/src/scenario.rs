//! Seeded problem instances: device and edge-agent placement, device roles,
//! radio and compute constants.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::radio;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadioConfig {
    pub area_side_m: f64,
    pub carrier_freq_hz: f64,
    /// Bandwidth of one server's TDMA frame.
    pub bandwidth_hz: f64,
    pub noise_psd_dbm_hz: f64,
    pub tx_power_dbm: f64,
    pub min_snr_linear: f64,
}

impl Default for RadioConfig {
    fn default() -> Self {
        Self {
            area_side_m: 1000.0,
            carrier_freq_hz: 2.4e9,
            bandwidth_hz: 1e6,
            noise_psd_dbm_hz: -174.0,
            tx_power_dbm: 50.0,
            min_snr_linear: 1e5,
        }
    }
}

impl RadioConfig {
    pub fn tx_power_w(&self) -> f64 {
        radio::dbm_to_watts(self.tx_power_dbm)
    }

    pub fn noise_psd_w_hz(&self) -> f64 {
        radio::dbm_to_watts(self.noise_psd_dbm_hz)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Learner,
    Offloader,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Device {
    pub id: usize,
    pub position: (f64, f64),
    pub role: Role,
    pub cycles_per_bit: f64,
    pub cpu_freq_hz: f64,
    pub local_data_bits: f64,
    pub model_size_bits: f64,
    pub task_size_bits: f64,
    pub deadline_s: f64,
}

impl Device {
    pub fn is_learner(&self) -> bool {
        self.role == Role::Learner
    }

    /// Time for one local pass over the training data (s).
    pub fn local_pass_time_s(&self) -> f64 {
        self.cycles_per_bit * self.local_data_bits / self.cpu_freq_hz
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeAgent {
    pub id: usize,
    pub position: (f64, f64),
    pub capacity: usize,
    pub server_cpu_hz: f64,
    pub server_cycles_per_bit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioInstance {
    pub radio: RadioConfig,
    pub devices: Vec<Device>,
    pub agents: Vec<EdgeAgent>,
    pub seed: u64,
}

pub fn distance(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

impl ScenarioInstance {
    pub fn n_devices(&self) -> usize {
        self.devices.len()
    }

    pub fn n_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn total_capacity(&self) -> usize {
        self.agents.iter().map(|a| a.capacity).sum()
    }

    /// Free-space gain from every device to every agent, row-major by device.
    pub fn path_gains(&self) -> Vec<Vec<f64>> {
        self.devices
            .iter()
            .map(|d| {
                self.agents
                    .iter()
                    .map(|a| {
                        radio::path_gain(
                            distance(d.position, a.position),
                            self.radio.carrier_freq_hz,
                        )
                    })
                    .collect()
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Nominal per-device constants; each device draws uniformly within
/// `nominal * (1 ± heterogeneity)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeviceDefaults {
    pub cycles_per_bit: f64,
    pub cpu_freq_hz: f64,
    pub local_data_bits: f64,
    pub model_size_bits: f64,
    pub task_size_bits: f64,
    pub deadline_s: f64,
    pub heterogeneity: f64,
}

impl Default for DeviceDefaults {
    fn default() -> Self {
        Self {
            cycles_per_bit: 100.0,
            cpu_freq_hz: 1e9,
            local_data_bits: 1e6,
            model_size_bits: 5e5,
            task_size_bits: 2e6,
            deadline_s: 0.5,
            heterogeneity: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentPlacement {
    Uniform,
    /// Agents at the centres of a near-square grid of cells.
    Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AgentDefaults {
    /// `None` means `ceil(1.5 * n_devices / n_agents)`.
    pub capacity: Option<usize>,
    pub server_cpu_hz: f64,
    pub server_cycles_per_bit: f64,
    pub placement: AgentPlacement,
}

impl Default for AgentDefaults {
    fn default() -> Self {
        Self {
            capacity: None,
            server_cpu_hz: 1e10,
            server_cycles_per_bit: 50.0,
            placement: AgentPlacement::Uniform,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenerationParams {
    pub n_devices: usize,
    pub n_agents: usize,
    pub learner_fraction: f64,
    pub radio: RadioConfig,
    pub device: DeviceDefaults,
    pub agent: AgentDefaults,
    pub seed: u64,
}

impl Default for GenerationParams {
    fn default() -> Self {
        Self {
            n_devices: 36,
            n_agents: 5,
            learner_fraction: 0.8,
            radio: RadioConfig::default(),
            device: DeviceDefaults::default(),
            agent: AgentDefaults::default(),
            seed: 7,
        }
    }
}

impl GenerationParams {
    pub fn capacity(&self) -> usize {
        self.agent
            .capacity
            .unwrap_or_else(|| (1.5 * self.n_devices as f64 / self.n_agents as f64).ceil() as usize)
    }

    pub fn n_learners(&self) -> usize {
        (self.learner_fraction * self.n_devices as f64).round() as usize
    }
}

fn jitter(rng: &mut ChaCha8Rng, nominal: f64, spread: f64) -> f64 {
    if spread == 0.0 {
        // Still consume a draw so instances with and without heterogeneity
        // share placements.
        let _: f64 = rng.random();
        return nominal;
    }
    nominal * rng.random_range(1.0 - spread..=1.0 + spread)
}

pub fn gen_instance(cfg: &GenerationParams) -> Result<ScenarioInstance> {
    if cfg.n_devices == 0 {
        return Err(Error::InvalidParameter {
            name: "n_devices",
            reason: "must be >= 1".into(),
        });
    }
    if cfg.n_agents == 0 {
        return Err(Error::InvalidParameter {
            name: "n_agents",
            reason: "must be >= 1".into(),
        });
    }
    if !(0.0..=1.0).contains(&cfg.learner_fraction) {
        return Err(Error::InvalidParameter {
            name: "learner_fraction",
            reason: format!("{} not in [0, 1]", cfg.learner_fraction),
        });
    }
    if !(0.0..1.0).contains(&cfg.device.heterogeneity) {
        return Err(Error::InvalidParameter {
            name: "device.heterogeneity",
            reason: format!("{} not in [0, 1)", cfg.device.heterogeneity),
        });
    }
    let capacity = cfg.capacity();
    if capacity * cfg.n_agents < cfg.n_devices {
        return Err(Error::InfeasibleCapacity {
            capacity: capacity * cfg.n_agents,
            devices: cfg.n_devices,
        });
    }

    let side = cfg.radio.area_side_m;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let grid_cols = (cfg.n_agents as f64).sqrt().ceil() as usize;
    let grid_rows = cfg.n_agents.div_ceil(grid_cols);

    let agents = (0..cfg.n_agents)
        .map(|id| {
            let position = match cfg.agent.placement {
                AgentPlacement::Uniform => (rng.random::<f64>() * side, rng.random::<f64>() * side),
                AgentPlacement::Grid => {
                    let (r, c) = (id / grid_cols, id % grid_cols);
                    (
                        (c as f64 + 0.5) * side / grid_cols as f64,
                        (r as f64 + 0.5) * side / grid_rows as f64,
                    )
                }
            };
            EdgeAgent {
                id,
                position,
                capacity,
                server_cpu_hz: cfg.agent.server_cpu_hz,
                server_cycles_per_bit: cfg.agent.server_cycles_per_bit,
            }
        })
        .collect();

    let n_learners = cfg.n_learners();
    let d = &cfg.device;
    let h = d.heterogeneity;
    let devices = (0..cfg.n_devices)
        .map(|id| {
            let position = (rng.random::<f64>() * side, rng.random::<f64>() * side);
            Device {
                id,
                position,
                role: if id < n_learners {
                    Role::Learner
                } else {
                    Role::Offloader
                },
                cycles_per_bit: jitter(&mut rng, d.cycles_per_bit, h),
                cpu_freq_hz: jitter(&mut rng, d.cpu_freq_hz, h),
                local_data_bits: jitter(&mut rng, d.local_data_bits, h),
                model_size_bits: jitter(&mut rng, d.model_size_bits, h),
                task_size_bits: jitter(&mut rng, d.task_size_bits, h),
                deadline_s: jitter(&mut rng, d.deadline_s, h),
            }
        })
        .collect();

    Ok(ScenarioInstance {
        radio: cfg.radio.clone(),
        devices,
        agents,
        seed: cfg.seed,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

fn check(out: &mut Vec<Violation>, ok: bool, field: impl Into<String>, message: impl Into<String>) {
    if !ok {
        out.push(Violation {
            field: field.into(),
            message: message.into(),
        });
    }
}

fn positive(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

/// Every violated invariant of `inst`; empty iff the instance is valid.
pub fn validate(inst: &ScenarioInstance) -> Vec<Violation> {
    let mut v = Vec::new();
    let r = &inst.radio;
    check(
        &mut v,
        positive(r.area_side_m),
        "radio.area_side_m",
        "must be > 0",
    );
    check(
        &mut v,
        positive(r.bandwidth_hz),
        "radio.bandwidth_hz",
        "must be > 0",
    );
    check(
        &mut v,
        positive(r.carrier_freq_hz),
        "radio.carrier_freq_hz",
        "must be > 0",
    );
    check(
        &mut v,
        r.min_snr_linear >= 0.0,
        "radio.min_snr_linear",
        "must be >= 0",
    );
    check(
        &mut v,
        r.tx_power_dbm.is_finite(),
        "radio.tx_power_dbm",
        "must be finite",
    );
    check(
        &mut v,
        r.noise_psd_dbm_hz.is_finite(),
        "radio.noise_psd_dbm_hz",
        "must be finite",
    );

    let side = r.area_side_m;
    let in_area = |p: (f64, f64)| (0.0..=side).contains(&p.0) && (0.0..=side).contains(&p.1);

    for (i, d) in inst.devices.iter().enumerate() {
        let f = |name: &str| format!("devices[{i}].{name}");
        check(
            &mut v,
            d.id == i,
            f("id"),
            format!("expected dense id {i}, got {}", d.id),
        );
        check(
            &mut v,
            in_area(d.position),
            f("position"),
            format!("{:?} outside [0, {side}]^2", d.position),
        );
        for (name, x) in [
            ("cycles_per_bit", d.cycles_per_bit),
            ("cpu_freq_hz", d.cpu_freq_hz),
            ("local_data_bits", d.local_data_bits),
            ("model_size_bits", d.model_size_bits),
            ("task_size_bits", d.task_size_bits),
            ("deadline_s", d.deadline_s),
        ] {
            check(&mut v, positive(x), f(name), format!("{x} must be > 0"));
        }
    }
    for (j, a) in inst.agents.iter().enumerate() {
        let f = |name: &str| format!("agents[{j}].{name}");
        check(
            &mut v,
            a.id == j,
            f("id"),
            format!("expected dense id {j}, got {}", a.id),
        );
        check(
            &mut v,
            in_area(a.position),
            f("position"),
            format!("{:?} outside [0, {side}]^2", a.position),
        );
        check(&mut v, a.capacity >= 1, f("capacity"), "must be >= 1");
        check(
            &mut v,
            positive(a.server_cpu_hz),
            f("server_cpu_hz"),
            "must be > 0",
        );
        check(
            &mut v,
            positive(a.server_cycles_per_bit),
            f("server_cycles_per_bit"),
            "must be > 0",
        );
    }
    let cap = inst.total_capacity();
    check(
        &mut v,
        cap >= inst.n_devices(),
        "agents.capacity",
        format!("total capacity {cap} < {} devices", inst.n_devices()),
    );
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn default_instance_shape() {
        let inst = gen_instance(&GenerationParams::default()).unwrap();
        assert_eq!(inst.n_devices(), 36);
        assert_eq!(inst.n_agents(), 5);
        assert_eq!(inst.agents[0].capacity, 11);
        assert_eq!(inst.devices.iter().filter(|d| d.is_learner()).count(), 29);
        assert!(validate(&inst).is_empty());
    }

    #[test]
    fn minimal_instance() {
        let cfg = GenerationParams {
            n_devices: 1,
            n_agents: 1,
            learner_fraction: 1.0,
            ..Default::default()
        };
        let inst = gen_instance(&cfg).unwrap();
        assert_eq!(inst.devices.len(), 1);
        assert_eq!(inst.agents.len(), 1);
        assert_eq!(inst.devices[0].role, Role::Learner);
    }

    #[test]
    fn deterministic_serialization() {
        let cfg = GenerationParams::default();
        let a = gen_instance(&cfg).unwrap().to_json().unwrap();
        let b = gen_instance(&cfg).unwrap().to_json().unwrap();
        assert_eq!(a, b);
        let back = ScenarioInstance::from_json(&a).unwrap();
        assert_eq!(back.to_json().unwrap(), a);
    }

    #[test]
    fn rejects_infeasible_capacity() {
        let mut cfg = GenerationParams::default();
        cfg.agent.capacity = Some(7);
        assert!(matches!(
            gen_instance(&cfg),
            Err(Error::InfeasibleCapacity {
                capacity: 35,
                devices: 36
            })
        ));
    }

    #[test]
    fn rejects_bad_params() {
        assert!(gen_instance(&GenerationParams {
            n_devices: 0,
            ..Default::default()
        })
        .is_err());
        assert!(gen_instance(&GenerationParams {
            n_agents: 0,
            ..Default::default()
        })
        .is_err());
        assert!(gen_instance(&GenerationParams {
            learner_fraction: 1.5,
            ..Default::default()
        })
        .is_err());
    }

    #[test]
    fn validate_flags_position() {
        let mut inst = gen_instance(&GenerationParams::default()).unwrap();
        inst.devices[3].position = (-1.0, 0.0);
        let v = validate(&inst);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "devices[3].position");
        assert!(v[0].message.contains("[0, 1000]"));
    }

    #[test]
    fn validate_flags_feasibility() {
        let mut inst = gen_instance(&GenerationParams::default()).unwrap();
        for a in &mut inst.agents {
            a.capacity = 7;
        }
        inst.agents[0].capacity = 8; // 5 * 7 + 1 = 36
        assert!(validate(&inst).is_empty());
        inst.agents[0].capacity = 7; // 35 = n_devices - 1
        let v = validate(&inst);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "agents.capacity");
    }

    #[test]
    fn grid_placement_is_inside_area() {
        let mut cfg = GenerationParams::default();
        cfg.agent.placement = AgentPlacement::Grid;
        let inst = gen_instance(&cfg).unwrap();
        assert!(validate(&inst).is_empty());
        assert_eq!(inst.agents[0].position, (1000.0 / 6.0, 250.0));
    }

    #[test]
    fn positions_are_uniform() {
        let cfg = GenerationParams {
            n_devices: 10_000,
            n_agents: 1,
            seed: 11,
            ..Default::default()
        };
        let mut cfg = cfg;
        cfg.agent.capacity = Some(10_000);
        let inst = gen_instance(&cfg).unwrap();
        let n = inst.devices.len() as f64;
        let mx = inst.devices.iter().map(|d| d.position.0).sum::<f64>() / n;
        let my = inst.devices.iter().map(|d| d.position.1).sum::<f64>() / n;
        for m in [mx, my] {
            assert!((m / 1000.0 - 0.5).abs() < 0.02, "axis mean {m}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn generated_instances_validate(
            n_devices in 1usize..80,
            n_agents in 1usize..10,
            learner_fraction in 0.0f64..=1.0,
            seed in any::<u64>(),
            side in 10.0f64..5000.0,
        ) {
            let mut cfg = GenerationParams { n_devices, n_agents, learner_fraction, seed, ..Default::default() };
            cfg.radio.area_side_m = side;
            let inst = gen_instance(&cfg).unwrap();
            prop_assert!(validate(&inst).is_empty(), "{:?}", validate(&inst));
        }
    }
}
