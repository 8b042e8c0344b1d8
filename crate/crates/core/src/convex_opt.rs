//! Continuous subproblem solvers: TDMA frame allocation (tau) and the
//! network-wide relative local accuracy (theta).
//!
//! For fixed association and theta the per-server frame problem is
//! `min sum w_i / tau_i  s.t.  sum tau_i <= 1, tau_i >= l_i`, whose KKT
//! solution is a water-filling on `sqrt(w_i)`. Offloader deadlines enter as
//! lower bounds `l_i`; since a missed deadline is a fixed penalty rather than
//! a hard constraint, [`allocate_time`] picks the best set of deadlines to
//! honour exactly (by enumeration for small servers).

use serde::{Deserialize, Serialize};

use crate::env::Association;
use crate::flcost::{self, CostModel, FlModelParams, RelativeAccuracy};
use crate::radio::Channel;
use crate::scenario::{Role, ScenarioInstance};

pub const DEFAULT_TAU_FLOOR: f64 = 1e-4;

/// Above this many deadline-constrained offloaders on one server the subset
/// search falls back to nested prefixes.
const MAX_EXACT_DEADLINE_SET: usize = 12;

/// Per-device TDMA frame fractions; zero for unassociated devices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TimeAllocation {
    tau: Vec<f64>,
}

impl TimeAllocation {
    pub fn new(tau: Vec<f64>) -> Self {
        Self { tau }
    }

    pub fn get(&self, device: usize) -> f64 {
        self.tau[device]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.tau
    }

    /// Checks the floor, zero-when-unassociated and per-server budget rules.
    pub fn check(
        &self,
        assoc: &Association,
        n_agents: usize,
        tau_floor: f64,
    ) -> Result<(), String> {
        if self.tau.len() != assoc.len() {
            return Err(format!(
                "{} fractions for {} devices",
                self.tau.len(),
                assoc.len()
            ));
        }
        let mut load = vec![0.0; n_agents];
        for (i, &t) in self.tau.iter().enumerate() {
            match assoc.server_of(i) {
                Some(j) => {
                    if t < tau_floor {
                        return Err(format!("tau[{i}] = {t} below floor {tau_floor}"));
                    }
                    load[j] += t;
                }
                None if t != 0.0 => return Err(format!("tau[{i}] = {t} for unassociated device")),
                None => {}
            }
        }
        match load.iter().position(|&l| l > 1.0 + 1e-12) {
            Some(j) => Err(format!("server {j} frame oversubscribed: {}", load[j])),
            None => Ok(()),
        }
    }
}

/// Minimises `sum w_i / tau_i` over `sum tau_i = 1, tau_i >= lower_i`.
/// Returns `None` when the lower bounds alone exceed the frame.
pub fn waterfill(weights: &[f64], lower: &[f64]) -> Option<Vec<f64>> {
    debug_assert_eq!(weights.len(), lower.len());
    let n = weights.len();
    if n == 0 {
        return Some(Vec::new());
    }
    if lower.iter().sum::<f64>() > 1.0 {
        return None;
    }
    let roots: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
    let mut bound = vec![false; n];
    loop {
        let budget = 1.0 - (0..n).filter(|&i| bound[i]).map(|i| lower[i]).sum::<f64>();
        let mass: f64 = (0..n).filter(|&i| !bound[i]).map(|i| roots[i]).sum();
        let share = |i: usize| {
            if mass > 0.0 {
                roots[i] * budget / mass
            } else {
                0.0
            }
        };
        let mut changed = false;
        for i in 0..n {
            if !bound[i] && share(i) < lower[i] {
                bound[i] = true;
                changed = true;
            }
        }
        if !changed {
            return Some(
                (0..n)
                    .map(|i| if bound[i] { lower[i] } else { share(i) })
                    .collect(),
            );
        }
    }
}

/// KKT frame split for one server: `tau_i proportional to sqrt(w_i)`,
/// with every share held at or above `tau_floor`.
pub fn optimize_tau(weights: &[f64], tau_floor: f64) -> Vec<f64> {
    let lower = vec![tau_floor; weights.len()];
    waterfill(weights, &lower).unwrap_or_else(|| vec![1.0 / weights.len() as f64; weights.len()])
}

/// Equal split of each server's frame among its associated devices.
pub fn uniform_time(assoc: &Association, n_agents: usize) -> TimeAllocation {
    let counts = assoc.counts(n_agents);
    TimeAllocation::new(
        (0..assoc.len())
            .map(|i| assoc.server_of(i).map_or(0.0, |j| 1.0 / counts[j] as f64))
            .collect(),
    )
}

/// Latency at a full frame, scaled by how often the upload is paid: the
/// reduction of the frame subproblem to `sum w_i / tau_i`. Zero for links
/// with zero rate (their cost does not depend on tau).
pub fn tau_weight(
    inst: &ScenarioInstance,
    channel: &Channel,
    device: usize,
    server: usize,
    theta: RelativeAccuracy,
    model: &CostModel,
) -> f64 {
    let rate = channel.full_frame_rate(device, server);
    if !(rate > 0.0) {
        return 0.0;
    }
    let dev = &inst.devices[device];
    match dev.role {
        Role::Learner => {
            model.learn_weight * model.fl.global_rounds(theta) * dev.model_size_bits / rate
        }
        Role::Offloader => model.offload_weight * dev.task_size_bits / rate,
    }
}

/// Smallest frame share that meets an offloader's deadline, if any.
fn deadline_share(
    inst: &ScenarioInstance,
    channel: &Channel,
    device: usize,
    server: usize,
) -> Option<f64> {
    let dev = &inst.devices[device];
    let agent = &inst.agents[server];
    let rate = channel.full_frame_rate(device, server);
    let slack =
        dev.deadline_s - dev.task_size_bits * agent.server_cycles_per_bit / agent.server_cpu_hz;
    if !(rate > 0.0) || slack <= 0.0 {
        return None;
    }
    // Slight inflation so the recomputed latency cannot round above the deadline.
    let share = dev.task_size_bits / (rate * slack) * (1.0 + 1e-12);
    (share <= 1.0).then_some(share)
}

/// Exact CVX(tau) step: per server, the frame split minimising the true
/// latency-plus-penalty cost for the given association and theta.
pub fn allocate_time(
    inst: &ScenarioInstance,
    channel: &Channel,
    assoc: &Association,
    theta: RelativeAccuracy,
    model: &CostModel,
    tau_floor: f64,
) -> TimeAllocation {
    let n_agents = inst.n_agents();
    let uniform = uniform_time(assoc, n_agents);
    let mut tau = vec![0.0; assoc.len()];
    for server in 0..n_agents {
        let members = assoc.members(server);
        if members.is_empty() {
            continue;
        }
        let weights: Vec<f64> = members
            .iter()
            .map(|&i| tau_weight(inst, channel, i, server, theta, model))
            .collect();
        // (position in `members`, required share)
        let mut deadlines: Vec<(usize, f64)> = members
            .iter()
            .enumerate()
            .filter(|(_, &i)| inst.devices[i].role == Role::Offloader)
            .filter_map(|(k, &i)| {
                deadline_share(inst, channel, i, server).map(|s| (k, s.max(tau_floor)))
            })
            .collect();
        let k = deadlines.len();
        if k > MAX_EXACT_DEADLINE_SET {
            deadlines.sort_by(|a, b| a.1.total_cmp(&b.1));
        }

        let server_cost = |shares: &[f64]| -> f64 {
            members
                .iter()
                .zip(shares)
                .map(|(&i, &t)| {
                    flcost::device_cost(inst, channel, i, Some(server), t, theta, model).total()
                })
                .sum()
        };
        let solve = |subset: &[usize]| -> Option<Vec<f64>> {
            let mut lower = vec![tau_floor; members.len()];
            for &d in subset {
                let (k, share) = deadlines[d];
                lower[k] = share;
            }
            waterfill(&weights, &lower)
        };

        let mut subsets: Vec<Vec<usize>> = Vec::new();
        if k <= MAX_EXACT_DEADLINE_SET {
            for mask in 0u32..(1 << k) {
                subsets.push((0..k).filter(|b| mask & (1 << b) != 0).collect());
            }
        } else {
            subsets.extend((0..=k).map(|m| (0..m).collect()));
            // The set met by the equal split keeps CVX(tau) no worse than it.
            subsets.push(
                (0..k)
                    .filter(|&d| uniform.get(members[deadlines[d].0]) >= deadlines[d].1)
                    .collect(),
            );
        }

        let mut best: Option<(f64, Vec<f64>)> = None;
        for subset in &subsets {
            let Some(shares) = solve(subset) else {
                continue;
            };
            let cost = server_cost(&shares);
            if best.as_ref().is_none_or(|(c, _)| cost < *c) {
                best = Some((cost, shares));
            }
        }
        let shares = best
            .map(|(_, s)| s)
            .unwrap_or_else(|| optimize_tau(&weights, tau_floor));
        for (&i, t) in members.iter().zip(shares) {
            tau[i] = t;
        }
    }
    TimeAllocation::new(tau)
}

/// Golden-section search for the minimiser of a unimodal `f` on `[lo, hi]`,
/// stopping once the bracket is narrower than `tol`.
pub fn golden_section<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    // Endpoints of the original interval are admissible minimisers too.
    [lo, mid, hi]
        .into_iter()
        .map(|x| (f(x), x))
        .min_by(|p, q| p.0.total_cmp(&q.0))
        .map(|(_, x)| x)
        .unwrap_or(mid)
}

/// Scalar learning objective `alpha / (1 - theta) * (c1 log2(1/theta) + c2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaObjective {
    pub alpha: f64,
    pub c1: f64,
    pub c2: f64,
}

impl ThetaObjective {
    pub fn value(&self, theta: f64) -> f64 {
        self.alpha / (1.0 - theta) * (self.c1 * (1.0 / theta).log2() + self.c2)
    }

    pub fn minimize(&self, params: &FlModelParams, tol: f64) -> RelativeAccuracy {
        RelativeAccuracy::from_raw(golden_section(
            |t| self.value(t),
            params.theta_min,
            params.theta_max,
            tol,
        ))
    }
}

/// CVX(theta) step: the theta minimising the learning cost for fixed
/// association and frame split. Returns the default when no learner is
/// associated.
pub fn optimize_theta(
    inst: &ScenarioInstance,
    channel: &Channel,
    assoc: &Association,
    tau: &TimeAllocation,
    model: &CostModel,
    tol: f64,
) -> RelativeAccuracy {
    let any_learner = inst
        .devices
        .iter()
        .any(|d| d.is_learner() && assoc.server_of(d.id).is_some());
    if !any_learner {
        return RelativeAccuracy::DEFAULT;
    }
    let f = |t: f64| {
        flcost::learning_cost(
            inst,
            channel,
            assoc,
            tau,
            RelativeAccuracy::from_raw(t),
            model,
        )
    };
    RelativeAccuracy::from_raw(golden_section(
        f,
        model.fl.theta_min,
        model.fl.theta_max,
        tol,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flcost::fixtures;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn objective(w: &[f64], tau: &[f64]) -> f64 {
        w.iter().zip(tau).map(|(w, t)| w / t).sum()
    }

    #[test]
    fn symmetric_and_single() {
        let t = optimize_tau(&[1.0, 1.0], DEFAULT_TAU_FLOOR);
        assert!((t[0] - 0.5).abs() < 1e-15 && (t[1] - 0.5).abs() < 1e-15);
        assert_eq!(optimize_tau(&[3.7], DEFAULT_TAU_FLOOR), vec![1.0]);
        assert!(optimize_tau(&[], DEFAULT_TAU_FLOOR).is_empty());
    }

    #[test]
    fn sqrt_rule_matches_grid() {
        let w = [1.0, 4.0];
        let t = optimize_tau(&w, DEFAULT_TAU_FLOOR);
        assert!((t[0] - 1.0 / 3.0).abs() < 1e-12 && (t[1] - 2.0 / 3.0).abs() < 1e-12);
        let grid_best = (1..1000)
            .map(|k| k as f64 / 1000.0)
            .map(|x| (objective(&w, &[x, 1.0 - x]), x))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .unwrap();
        assert!((grid_best.1 - 1.0 / 3.0).abs() < 1e-3);
        assert!(objective(&w, &t) <= grid_best.0);
    }

    #[test]
    fn floor_binds_for_tiny_weights() {
        let t = optimize_tau(&[1.0, 1e-12], 1e-3);
        assert_eq!(t[1], 1e-3);
        assert!((t[0] + t[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn waterfill_respects_lower_bounds() {
        let t = waterfill(&[1.0, 1.0, 1.0], &[0.6, 0.0, 0.0]).unwrap();
        assert_eq!(t[0], 0.6);
        assert!((t[1] - 0.2).abs() < 1e-15 && (t[2] - 0.2).abs() < 1e-15);
        assert!(waterfill(&[1.0, 1.0], &[0.6, 0.6]).is_none());
    }

    #[test]
    fn golden_section_monotone_limit() {
        // Zero local compute leaves alpha c2 / (1 - theta), minimised at theta_min.
        let obj = ThetaObjective {
            alpha: 1.0,
            c1: 0.0,
            c2: 1.0,
        };
        let p = FlModelParams::default();
        assert_eq!(obj.minimize(&p, 1e-6).value(), p.theta_min);
    }

    #[test]
    fn theta_analytic_fixture() {
        // Coefficient 1 on ln(1/theta): c1 log2(1/theta) = ln(1/theta) for c1 = ln 2.
        let obj = ThetaObjective {
            alpha: 1.0,
            c1: std::f64::consts::LN_2,
            c2: 1.0,
        };
        let theta = obj.minimize(&FlModelParams::default(), 1e-9).value();
        // Stationarity of (1 - ln t)/(1 - t): 2 - 1/t - ln t = 0, bisected.
        let g = |t: f64| 2.0 - 1.0 / t - t.ln();
        let (mut lo, mut hi) = (0.1, 0.9);
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if g(m) < 0.0 {
                lo = m;
            } else {
                hi = m;
            }
        }
        assert!((theta - lo).abs() < 1e-6, "{theta} vs {lo}");
        assert!((lo - 0.3178).abs() < 1e-4);
    }

    #[test]
    fn optimize_theta_without_learners_returns_default() {
        let inst = fixtures::instance(&[Role::Offloader], 1);
        let ch = Channel::new(vec![vec![10.0]], 1e6);
        let assoc = Association::from_servers(vec![Some(0)]);
        let tau = TimeAllocation::new(vec![1.0]);
        let t = optimize_theta(&inst, &ch, &assoc, &tau, &CostModel::default(), 1e-6);
        assert_eq!(t, RelativeAccuracy::DEFAULT);
    }

    #[test]
    fn theta_dominates_default_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let model = CostModel::default();
        for _ in 0..50 {
            let n = rng.random_range(1..6);
            let mut inst = fixtures::instance(&vec![Role::Learner; n], 1);
            for d in &mut inst.devices {
                d.local_data_bits = rng.random_range(1e5..1e7);
                d.model_size_bits = rng.random_range(1e4..1e7);
            }
            let ch = Channel::new(
                (0..n).map(|_| vec![rng.random_range(1.0..1e6)]).collect(),
                1e6,
            );
            let assoc = Association::from_servers(vec![Some(0); n]);
            let tau = TimeAllocation::new(vec![1.0 / n as f64; n]);
            let t = optimize_theta(&inst, &ch, &assoc, &tau, &model, 1e-6);
            let at = |th| flcost::learning_cost(&inst, &ch, &assoc, &tau, th, &model);
            assert!(at(t) <= at(RelativeAccuracy::DEFAULT) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn allocate_time_meets_deadline_when_worth_it() {
        // Two offloaders with a tight deadline for device 0 only.
        let mut inst = fixtures::instance(&[Role::Offloader, Role::Offloader], 1);
        inst.devices[0].deadline_s = 0.35;
        inst.devices[1].deadline_s = 100.0;
        // 10 Mbit/s full-frame; task 2 Mbit -> needs tau >= 2e6/(1e7*(0.35-0.01)).
        let ch = Channel::new(vec![vec![1023.0], vec![1023.0]], 1e6);
        let assoc = Association::from_servers(vec![Some(0), Some(0)]);
        let model = CostModel::default();
        let t = allocate_time(
            &inst,
            &ch,
            &assoc,
            RelativeAccuracy::DEFAULT,
            &model,
            DEFAULT_TAU_FLOOR,
        );
        let need = 2e6 / (1e7 * 0.34);
        assert!(
            t.get(0) >= need && t.get(0) < need * (1.0 + 1e-9),
            "{:?}",
            t
        );
        assert!((t.get(0) + t.get(1) - 1.0).abs() < 1e-12);
        t.check(&assoc, 1, DEFAULT_TAU_FLOOR).unwrap();
        let tot = |tau: &TimeAllocation| {
            flcost::total_cost(&inst, &ch, &assoc, tau, RelativeAccuracy::DEFAULT, &model).total_s
        };
        assert!(tot(&t) < tot(&uniform_time(&assoc, 1)));
    }

    /// Pairwise exchange search over the simplex: each move redistributes the
    /// mass of two coordinates on a 10^3-point grid, zooming in around the best
    /// point. Independent of the KKT route.
    fn pairwise_grid_search(w: &[f64], floor: f64) -> f64 {
        let n = w.len();
        let mut tau = vec![1.0 / n as f64; n];
        if n == 1 {
            return objective(w, &tau);
        }
        for _sweep in 0..60 {
            for i in 0..n {
                for j in (i + 1)..n {
                    let mass = tau[i] + tau[j];
                    let (mut lo, mut hi) = (floor, mass - floor);
                    let mut best = tau[i];
                    for _zoom in 0..4 {
                        let step = (hi - lo) / 999.0;
                        best = (0..1000)
                            .map(|k| lo + step * k as f64)
                            .min_by(|a, b| {
                                (w[i] / a + w[j] / (mass - a))
                                    .total_cmp(&(w[i] / b + w[j] / (mass - b)))
                            })
                            .unwrap();
                        lo = (best - step).max(floor);
                        hi = (best + step).min(mass - floor);
                    }
                    tau[i] = best;
                    tau[j] = mass - best;
                }
            }
        }
        objective(w, &tau)
    }

    #[test]
    fn tau_matches_grid_oracle_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..10 {
            let n = rng.random_range(1..=4);
            let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..10.0)).collect();
            let kkt = objective(&w, &optimize_tau(&w, DEFAULT_TAU_FLOOR));
            let oracle = pairwise_grid_search(&w, DEFAULT_TAU_FLOOR);
            assert!(((kkt - oracle) / oracle).abs() < 1e-4, "{kkt} vs {oracle}");
            assert!(kkt <= oracle * (1.0 + 1e-12));
        }
    }

    proptest! {
        #[test]
        fn tau_feasible_and_dominant(w in proptest::collection::vec(1e-6f64..1e3, 1..12)) {
            let t = optimize_tau(&w, DEFAULT_TAU_FLOOR);
            prop_assert!(t.iter().all(|&x| x >= DEFAULT_TAU_FLOOR));
            prop_assert!((t.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let uni = vec![1.0 / w.len() as f64; w.len()];
            prop_assert!(objective(&w, &t) <= objective(&w, &uni) * (1.0 + 1e-9));
        }

        #[test]
        fn tau_strictly_better_unless_equal(w in proptest::collection::vec(0.1f64..10.0, 2..8)) {
            let t = optimize_tau(&w, DEFAULT_TAU_FLOOR);
            let uni = vec![1.0 / w.len() as f64; w.len()];
            let all_equal = w.iter().all(|x| (x - w[0]).abs() < 1e-12);
            if !all_equal {
                prop_assert!(objective(&w, &t) < objective(&w, &uni));
            }
        }

        #[test]
        fn tau_scale_invariant(w in proptest::collection::vec(1e-3f64..1e3, 1..8), c in 1e-3f64..1e3) {
            let a = optimize_tau(&w, DEFAULT_TAU_FLOOR);
            let scaled: Vec<f64> = w.iter().map(|x| x * c).collect();
            let b = optimize_tau(&scaled, DEFAULT_TAU_FLOOR);
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
