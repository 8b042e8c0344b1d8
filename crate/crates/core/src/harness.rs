//! Experiment orchestration: scheme registry, seeded multi-run execution,
//! learning-rate sweeps, aggregation and the results CSV.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ddqn::{Checkpoint, DqnHyperparams, QLearner};
use crate::env::{self, Env, EnvConfig, Policy, SolverConfig, TauSolver, ThetaSolver};
use crate::scenario::ScenarioInstance;
use crate::{Error, Result};

pub const RESULTS_HEADER: [&str; 7] = [
    "scheme",
    "seed",
    "episode",
    "mean_reward",
    "mean_cost_s",
    "epsilon",
    "wall_ms",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SchemeName {
    #[serde(rename = "DDQN")]
    Ddqn,
    #[serde(rename = "DDQN_CVX_TAU")]
    DdqnCvxTau,
    #[serde(rename = "DDQN_CVX_TAU_THETA")]
    DdqnCvxTauTheta,
    #[serde(rename = "RANDOM")]
    Random,
    #[serde(rename = "GREEDY_NEAREST")]
    GreedyNearest,
}

impl SchemeName {
    pub const ALL: [SchemeName; 5] = [
        Self::Ddqn,
        Self::DdqnCvxTau,
        Self::DdqnCvxTauTheta,
        Self::Random,
        Self::GreedyNearest,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Ddqn => "DDQN",
            Self::DdqnCvxTau => "DDQN_CVX_TAU",
            Self::DdqnCvxTauTheta => "DDQN_CVX_TAU_THETA",
            Self::Random => "RANDOM",
            Self::GreedyNearest => "GREEDY_NEAREST",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|n| n.as_str().eq_ignore_ascii_case(s.trim()))
    }

    /// Baselines run both convex solvers so they isolate the value of the
    /// learned association.
    pub fn solvers(self) -> SolverConfig {
        match self {
            Self::Ddqn => SolverConfig {
                tau: TauSolver::Uniform,
                theta: ThetaSolver::Fixed,
            },
            Self::DdqnCvxTau => SolverConfig {
                tau: TauSolver::Convex,
                theta: ThetaSolver::Fixed,
            },
            _ => SolverConfig {
                tau: TauSolver::Convex,
                theta: ThetaSolver::Convex,
            },
        }
    }

    pub fn is_learned(self) -> bool {
        matches!(self, Self::Ddqn | Self::DdqnCvxTau | Self::DdqnCvxTauTheta)
    }
}

impl std::fmt::Display for SchemeName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeConfig {
    pub name: SchemeName,
    pub hyper: DqnHyperparams,
    pub episodes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub scheme: SchemeName,
    pub seed: u64,
    pub episode: usize,
    pub mean_reward: f64,
    pub mean_cost_s: f64,
    pub epsilon: f64,
    pub wall_ms: f64,
}

/// splitmix64 finaliser; decorrelates the per-episode and per-learner
/// streams derived from one run seed.
fn mix(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fading seed of an episode. Shared by every scheme so schemes face the
/// same channels.
pub fn episode_seed(seed: u64, episode: usize) -> u64 {
    mix(seed, 1 + episode as u64)
}

pub fn agent_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(seed, 0xA6E7))
}

/// Options that do not change what is simulated.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunOptions {
    /// Records wall-clock time per episode; otherwise `wall_ms` is 0 and the
    /// results are byte-reproducible.
    pub record_wall_time: bool,
}

/// Trains (or runs) one scheme from scratch on one seed.
pub fn run_single(
    inst: &ScenarioInstance,
    scheme: &SchemeConfig,
    env_cfg: &EnvConfig,
    seed: u64,
    opts: RunOptions,
) -> Result<(Vec<RunRecord>, Option<QLearner>)> {
    let mut env = Env::new(inst, env_cfg.clone());
    let mut rng = agent_rng(seed);
    let mut learner = scheme.name.is_learned().then(|| {
        QLearner::new(
            env.state_dim(),
            env.n_actions(),
            scheme.hyper.clone(),
            &mut rng,
        )
    });
    let solvers = scheme.name.solvers();
    let mut records = Vec::with_capacity(scheme.episodes);
    for episode in 0..scheme.episodes {
        let start = Instant::now();
        let (log, epsilon) = match (&mut learner, scheme.name) {
            (Some(l), _) => {
                let epsilon = l.epsilon();
                let mut policy = Policy::Ddqn {
                    learner: l,
                    epsilon,
                    train: true,
                };
                (
                    env::run_episode(
                        &mut env,
                        &mut policy,
                        solvers,
                        episode_seed(seed, episode),
                        &mut rng,
                    )?,
                    epsilon,
                )
            }
            (None, SchemeName::GreedyNearest) => (
                env::run_episode(
                    &mut env,
                    &mut Policy::Nearest,
                    solvers,
                    episode_seed(seed, episode),
                    &mut rng,
                )?,
                0.0,
            ),
            (None, _) => (
                env::run_episode(
                    &mut env,
                    &mut Policy::Random,
                    solvers,
                    episode_seed(seed, episode),
                    &mut rng,
                )?,
                1.0,
            ),
        };
        records.push(RunRecord {
            scheme: scheme.name,
            seed,
            episode,
            mean_reward: log.mean_reward(),
            mean_cost_s: log.mean_cost(),
            epsilon,
            wall_ms: if opts.record_wall_time {
                start.elapsed().as_secs_f64() * 1e3
            } else {
                0.0
            },
        });
    }
    Ok((records, learner))
}

/// Every (scheme, seed) pair trained independently, in parallel. Output is
/// sorted by scheme, seed and episode.
pub fn run_experiment(
    inst: &ScenarioInstance,
    schemes: &[SchemeConfig],
    seeds: &[u64],
    env_cfg: &EnvConfig,
    opts: RunOptions,
) -> Result<Vec<RunRecord>> {
    run_experiment_with_checkpoints(inst, schemes, seeds, env_cfg, opts).map(|r| r.0)
}

/// [`run_experiment`] that also returns the final learner state of every
/// learned (scheme, seed) run.
/// Final learner state of one (scheme, seed) run.
pub type SchemeCheckpoint = (SchemeName, u64, Checkpoint);

pub fn run_experiment_with_checkpoints(
    inst: &ScenarioInstance,
    schemes: &[SchemeConfig],
    seeds: &[u64],
    env_cfg: &EnvConfig,
    opts: RunOptions,
) -> Result<(Vec<RunRecord>, Vec<SchemeCheckpoint>)> {
    if schemes.is_empty() {
        return Err(Error::Empty("scheme list"));
    }
    if seeds.is_empty() {
        return Err(Error::Empty("seed list"));
    }
    let jobs: Vec<(&SchemeConfig, u64)> = schemes
        .iter()
        .flat_map(|s| seeds.iter().map(move |&x| (s, x)))
        .collect();
    let runs: Vec<(Vec<RunRecord>, Option<QLearner>)> = jobs
        .par_iter()
        .map(|&(scheme, seed)| {
            run_single(inst, scheme, env_cfg, seed, opts).map_err(|e| Error::Run {
                scheme: scheme.name.to_string(),
                seed,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    let mut checkpoints: Vec<SchemeCheckpoint> = jobs
        .iter()
        .zip(&runs)
        .filter_map(|((s, seed), (_, l))| l.as_ref().map(|l| (s.name, *seed, l.checkpoint())))
        .collect();
    checkpoints.sort_by_key(|c| (c.0, c.1));
    let mut records: Vec<RunRecord> = runs.into_iter().flat_map(|r| r.0).collect();
    records.sort_by_key(|r| (r.scheme, r.seed, r.episode));
    Ok((records, checkpoints))
}

pub const SWEEP_SCHEME: SchemeName = SchemeName::DdqnCvxTauTheta;
pub const DEFAULT_LEARNING_RATES: [f64; 3] = [0.01, 0.001, 0.0001];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGroup {
    pub zeta: f64,
    pub records: Vec<RunRecord>,
    /// First episode reaching 90% of the plateau, per seed in input order.
    pub convergence: Vec<(u64, Option<usize>)>,
}

pub fn sweep_learning_rate(
    inst: &ScenarioInstance,
    zetas: &[f64],
    seeds: &[u64],
    episodes: usize,
    hyper: &DqnHyperparams,
    env_cfg: &EnvConfig,
    opts: RunOptions,
) -> Result<Vec<SweepGroup>> {
    if let Some(z) = zetas.iter().find(|z| !(**z > 0.0)) {
        return Err(Error::InvalidParameter {
            name: "zeta",
            reason: format!("{z} must be > 0"),
        });
    }
    zetas
        .iter()
        .map(|&zeta| {
            let scheme = SchemeConfig {
                name: SWEEP_SCHEME,
                hyper: DqnHyperparams {
                    learning_rate: zeta,
                    ..hyper.clone()
                },
                episodes,
            };
            let records = run_experiment(inst, &[scheme], seeds, env_cfg, opts)?;
            let convergence = seeds
                .iter()
                .map(|&s| {
                    let curve: Vec<f64> = records
                        .iter()
                        .filter(|r| r.seed == s)
                        .map(|r| r.mean_reward)
                        .collect();
                    (
                        s,
                        convergence_episode(&curve, PLATEAU_WINDOW, PLATEAU_FRACTION),
                    )
                })
                .collect();
            Ok(SweepGroup {
                zeta,
                records,
                convergence,
            })
        })
        .collect()
}

pub const PLATEAU_WINDOW: usize = 20;
pub const PLATEAU_FRACTION: f64 = 0.9;

/// First index whose value reaches `fraction` of the mean of the last
/// `window` values. `None` for an empty curve or a non-positive plateau.
pub fn convergence_episode(curve: &[f64], window: usize, fraction: f64) -> Option<usize> {
    if curve.is_empty() {
        return None;
    }
    let tail = &curve[curve.len().saturating_sub(window.max(1))..];
    let plateau = tail.iter().sum::<f64>() / tail.len() as f64;
    if !(plateau > 0.0) {
        return None;
    }
    curve.iter().position(|&r| r >= fraction * plateau)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeSummary {
    pub scheme: SchemeName,
    pub n_seeds: usize,
    pub reward_mean: f64,
    pub reward_std: f64,
    pub cost_mean: f64,
    pub cost_std: f64,
}

impl SchemeSummary {
    pub fn reward_se(&self) -> f64 {
        self.reward_std / (self.n_seeds as f64).sqrt()
    }

    pub fn cost_se(&self) -> f64 {
        self.cost_std / (self.n_seeds as f64).sqrt()
    }
}

pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Per scheme: mean and sample standard deviation across seeds of each
/// seed's average over its final `k` episodes.
pub fn summarize(records: &[RunRecord], k: usize) -> Result<Vec<SchemeSummary>> {
    if records.is_empty() {
        return Err(Error::Empty("records"));
    }
    if k == 0 {
        return Err(Error::InvalidParameter {
            name: "k",
            reason: "must be >= 1".into(),
        });
    }
    let mut runs: BTreeMap<(SchemeName, u64), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        runs.entry((r.scheme, r.seed)).or_default().push(r);
    }
    let mut per_scheme: BTreeMap<SchemeName, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for ((scheme, seed), mut rs) in runs {
        if rs.len() < k {
            return Err(Error::InvalidParameter {
                name: "k",
                reason: format!(
                    "{k} exceeds the {} episodes of {scheme}/seed {seed}",
                    rs.len()
                ),
            });
        }
        rs.sort_by_key(|r| r.episode);
        let tail = &rs[rs.len() - k..];
        let entry = per_scheme.entry(scheme).or_default();
        entry
            .0
            .push(tail.iter().map(|r| r.mean_reward).sum::<f64>() / k as f64);
        entry
            .1
            .push(tail.iter().map(|r| r.mean_cost_s).sum::<f64>() / k as f64);
    }
    Ok(per_scheme
        .into_iter()
        .map(|(scheme, (rewards, costs))| {
            let (reward_mean, reward_std) = mean_std(&rewards);
            let (cost_mean, cost_std) = mean_std(&costs);
            SchemeSummary {
                scheme,
                n_seeds: rewards.len(),
                reward_mean,
                reward_std,
                cost_mean,
                cost_std,
            }
        })
        .collect())
}

/// `%.9g`-style formatting: nine significant digits, trailing zeros dropped.
pub fn fmt_sig9(x: f64) -> String {
    const P: i32 = 9;
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", (P - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if (-4..P).contains(&exp) {
        trim(&format!("{:.*}", (P - 1 - exp) as usize, x))
    } else {
        format!(
            "{}e{}{:02}",
            trim(mantissa),
            if exp < 0 { '-' } else { '+' },
            exp.abs()
        )
    }
}

fn record_fields(r: &RunRecord) -> [String; 7] {
    [
        r.scheme.as_str().to_string(),
        r.seed.to_string(),
        r.episode.to_string(),
        fmt_sig9(r.mean_reward),
        fmt_sig9(r.mean_cost_s),
        fmt_sig9(r.epsilon),
        fmt_sig9(r.wall_ms),
    ]
}

pub fn write_records<W: Write>(w: W, records: &[RunRecord]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(RESULTS_HEADER)?;
    for r in records {
        out.write_record(record_fields(r))?;
    }
    out.flush()?;
    Ok(())
}

/// Sweep CSV: the results columns prefixed with the learning rate.
pub fn write_sweep<W: Write>(w: W, groups: &[SweepGroup]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(std::iter::once("zeta").chain(RESULTS_HEADER))?;
    for g in groups {
        for r in &g.records {
            out.write_record(std::iter::once(fmt_sig9(g.zeta)).chain(record_fields(r)))?;
        }
    }
    out.flush()?;
    Ok(())
}

fn parse_field<T: std::str::FromStr>(
    rec: &csv::StringRecord,
    idx: usize,
    name: &str,
    line: u64,
) -> Result<T> {
    let raw = rec.get(idx).unwrap_or("");
    raw.trim().parse().map_err(|_| Error::Config {
        key: format!("line {line}: {name}"),
        message: format!("cannot parse {raw:?}"),
    })
}

fn parse_record(rec: &csv::StringRecord, offset: usize, line: u64) -> Result<RunRecord> {
    let name = rec.get(offset).unwrap_or("");
    let scheme = SchemeName::parse(name).ok_or_else(|| Error::Config {
        key: format!("line {line}: scheme"),
        message: format!("unknown scheme {name:?}"),
    })?;
    Ok(RunRecord {
        scheme,
        seed: parse_field(rec, offset + 1, "seed", line)?,
        episode: parse_field(rec, offset + 2, "episode", line)?,
        mean_reward: parse_field(rec, offset + 3, "mean_reward", line)?,
        mean_cost_s: parse_field(rec, offset + 4, "mean_cost_s", line)?,
        epsilon: parse_field(rec, offset + 5, "epsilon", line)?,
        wall_ms: parse_field(rec, offset + 6, "wall_ms", line)?,
    })
}

fn check_header(found: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    if found.iter().ne(expected.iter().copied()) {
        return Err(Error::Config {
            key: "header".into(),
            message: format!(
                "expected `{}`, found `{}`",
                expected.join(","),
                found.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    Ok(())
}

/// Reads a results CSV; the header must match exactly.
pub fn read_records<R: Read>(r: R) -> Result<Vec<RunRecord>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    check_header(rdr.headers()?, &RESULTS_HEADER)?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        out.push(parse_record(&rec?, 0, i as u64 + 2)?);
    }
    Ok(out)
}

/// Reads a sweep CSV into `(zeta, record)` rows.
pub fn read_sweep<R: Read>(r: R) -> Result<Vec<(f64, RunRecord)>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let expected: Vec<&str> = std::iter::once("zeta").chain(RESULTS_HEADER).collect();
    check_header(rdr.headers()?, &expected)?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i as u64 + 2;
        out.push((
            parse_field(&rec, 0, "zeta", line)?,
            parse_record(&rec, 1, line)?,
        ));
    }
    Ok(out)
}

/// Mean over seeds of `value` at every episode, per series key.
pub fn episode_means<K: Ord + Clone>(
    rows: impl IntoIterator<Item = (K, usize, f64)>,
) -> BTreeMap<K, Vec<f64>> {
    let mut acc: BTreeMap<K, BTreeMap<usize, (f64, usize)>> = BTreeMap::new();
    for (k, ep, v) in rows {
        let e = acc.entry(k).or_default().entry(ep).or_insert((0.0, 0));
        e.0 += v;
        e.1 += 1;
    }
    acc.into_iter()
        .map(|(k, eps)| (k, eps.into_values().map(|(s, n)| s / n as f64).collect()))
        .collect()
}

/// Plot data: `episode,<series...>` with one row per episode.
pub fn write_series<W: Write>(w: W, series: &[(String, Vec<f64>)]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(
        std::iter::once("episode".to_string()).chain(series.iter().map(|s| s.0.clone())),
    )?;
    let len = series.iter().map(|s| s.1.len()).max().unwrap_or(0);
    for ep in 0..len {
        let row = std::iter::once(ep.to_string()).chain(
            series
                .iter()
                .map(|s| s.1.get(ep).map(|v| fmt_sig9(*v)).unwrap_or_default()),
        );
        out.write_record(row)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{gen_instance, GenerationParams};

    fn rec(scheme: SchemeName, seed: u64, episode: usize, reward: f64) -> RunRecord {
        RunRecord {
            scheme,
            seed,
            episode,
            mean_reward: reward,
            mean_cost_s: 1.0 / reward,
            epsilon: 0.5,
            wall_ms: 0.0,
        }
    }

    #[test]
    fn sig9_formatting() {
        assert_eq!(fmt_sig9(0.0), "0");
        assert_eq!(fmt_sig9(0.3), "0.3");
        assert_eq!(fmt_sig9(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt_sig9(123456789.4), "123456789");
        assert_eq!(fmt_sig9(1234567890.0), "1.23456789e+09");
        assert_eq!(fmt_sig9(1.5e-7), "1.5e-07");
        assert_eq!(fmt_sig9(-2.5), "-2.5");
        assert_eq!(fmt_sig9(0.0001), "0.0001");
    }

    #[test]
    fn sig9_round_trips_to_nine_digits() {
        for x in [0.0123456789123, 98765.4321987, 3.3e-12, 7.0] {
            let back: f64 = fmt_sig9(x).parse().unwrap();
            assert!(((back - x) / x).abs() < 1e-8);
        }
    }

    #[test]
    fn summary_basics() {
        let s = summarize(&[rec(SchemeName::Ddqn, 1, 0, 0.7)], 1).unwrap();
        assert_eq!(s[0].reward_mean, 0.7);
        assert_eq!(s[0].reward_std, 0.0);
        let s = summarize(
            &[
                rec(SchemeName::Ddqn, 1, 0, 0.2),
                rec(SchemeName::Ddqn, 2, 0, 0.4),
            ],
            1,
        )
        .unwrap();
        assert!((s[0].reward_mean - 0.3).abs() < 1e-15);
        assert!(summarize(&[], 1).is_err());
        assert!(summarize(&[rec(SchemeName::Ddqn, 1, 0, 0.7)], 2).is_err());
    }

    #[test]
    fn summary_is_order_independent() {
        let mut rs: Vec<RunRecord> = (0..3)
            .flat_map(|s| {
                (0..15).map(move |e| {
                    rec(
                        SchemeName::DdqnCvxTau,
                        s,
                        e,
                        0.01 * (e + 1) as f64 + 0.003 * s as f64,
                    )
                })
            })
            .collect();
        let a = summarize(&rs, 10).unwrap();
        rs.reverse();
        rs.swap(3, 17);
        assert_eq!(summarize(&rs, 10).unwrap(), a);
    }

    #[test]
    fn convergence_rules() {
        assert_eq!(convergence_episode(&[], 20, 0.9), None);
        assert_eq!(convergence_episode(&[0.0, 0.0], 20, 0.9), None);
        let curve: Vec<f64> = (0..50).map(|e| (e as f64).min(30.0)).collect();
        assert_eq!(convergence_episode(&curve, 20, 0.9), Some(27));
    }

    #[test]
    fn csv_round_trip_and_header() {
        let rs = vec![
            rec(SchemeName::Ddqn, 3, 0, 0.0123),
            rec(SchemeName::Random, 4, 1, 0.5),
        ];
        let mut buf = Vec::new();
        write_records(&mut buf, &rs).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("scheme,seed,episode,mean_reward,mean_cost_s,epsilon,wall_ms\n"));
        let back = read_records(buf.as_slice()).unwrap();
        assert_eq!(back[1].scheme, SchemeName::Random);
        assert_eq!(back[0].mean_reward, 0.0123);
        assert!(read_records("a,b\n1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn experiment_cardinality_determinism_and_isolation() {
        let inst = gen_instance(&GenerationParams::default()).unwrap();
        let schemes: Vec<SchemeConfig> = [SchemeName::Ddqn, SchemeName::Random]
            .into_iter()
            .map(|name| SchemeConfig {
                name,
                hyper: DqnHyperparams::default(),
                episodes: 3,
            })
            .collect();
        let cfg = EnvConfig::default();
        let a = run_experiment(&inst, &schemes, &[1, 2], &cfg, RunOptions::default()).unwrap();
        assert_eq!(a.len(), 2 * 2 * 3);
        let b = run_experiment(&inst, &schemes, &[1, 2], &cfg, RunOptions::default()).unwrap();
        assert_eq!(a, b);
        let only2 = run_experiment(&inst, &schemes, &[2], &cfg, RunOptions::default()).unwrap();
        let from_both: Vec<_> = a.iter().filter(|r| r.seed == 2).cloned().collect();
        assert_eq!(only2, from_both);
        assert!(run_experiment(&inst, &[], &[1], &cfg, RunOptions::default()).is_err());
        assert!(run_experiment(&inst, &schemes, &[], &cfg, RunOptions::default()).is_err());
    }

    #[test]
    fn scheme_names_parse() {
        for s in SchemeName::ALL {
            assert_eq!(SchemeName::parse(s.as_str()), Some(s));
        }
        assert_eq!(SchemeName::parse("BSUM"), None);
    }
}
