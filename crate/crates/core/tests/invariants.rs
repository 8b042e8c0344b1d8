use fl_offload::ddqn::DqnHyperparams;
use fl_offload::env::{Association, Env, EnvConfig, SolverConfig, TauSolver, ThetaSolver};
use fl_offload::harness::{run_experiment, RunOptions, SchemeConfig, SchemeName};
use fl_offload::scenario::{gen_instance, GenerationParams};
use proptest::prelude::*;

/// Least-squares slope of `ys` against its index and the slope's t statistic.
fn slope_t(ys: &[f64]) -> (f64, f64) {
    let n = ys.len() as f64;
    let xbar = (n - 1.0) / 2.0;
    let ybar = ys.iter().sum::<f64>() / n;
    let sxx: f64 = (0..ys.len()).map(|i| (i as f64 - xbar).powi(2)).sum();
    let sxy: f64 = ys
        .iter()
        .enumerate()
        .map(|(i, y)| (i as f64 - xbar) * (y - ybar))
        .sum();
    let b = sxy / sxx;
    let a = ybar - b * xbar;
    let sse: f64 = ys
        .iter()
        .enumerate()
        .map(|(i, y)| (y - a - b * i as f64).powi(2))
        .sum();
    let se = (sse / (n - 2.0) / sxx).sqrt();
    (b, b / se)
}

#[test]
fn random_scheme_has_no_upward_trend() {
    let inst = gen_instance(&GenerationParams::default()).unwrap();
    let scheme = SchemeConfig {
        name: SchemeName::Random,
        hyper: DqnHyperparams::default(),
        episodes: 200,
    };
    let seeds: Vec<u64> = (0..10).collect();
    let records = run_experiment(
        &inst,
        &[scheme],
        &seeds,
        &EnvConfig::default(),
        RunOptions::default(),
    )
    .unwrap();
    let mut curve = vec![0.0; 200];
    for r in &records {
        curve[r.episode] += r.mean_reward / seeds.len() as f64;
    }
    let (_, t) = slope_t(&curve);
    // One-sided test at roughly the 0.1% level.
    assert!(t < 3.1, "t = {t}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn association_and_reward_invariants(
        seed in 0u64..1000,
        n_devices in 1usize..30,
        n_agents in 1usize..6,
        picks in proptest::collection::vec(0usize..1000, 30 * 5),
    ) {
        let params = GenerationParams { n_devices, n_agents, seed, ..GenerationParams::default() };
        let inst = gen_instance(&params).unwrap();
        let mut env = Env::new(&inst, EnvConfig::default());
        env.reset(seed);
        let solvers = SolverConfig { tau: TauSolver::Convex, theta: ThetaSolver::Convex };
        for step in 0..5 {
            let actions: Vec<usize> = (0..n_devices).map(|d| picks[step * 30 + d] % n_agents).collect();
            let assoc = Association::grant(&actions, &inst).unwrap();
            prop_assert!(assoc.check(&inst).is_ok());
            for row in assoc.to_matrix(n_agents) {
                prop_assert!(row.iter().map(|&x| x as usize).sum::<usize>() <= 1);
            }
            let out = env.step(&actions, solvers).unwrap();
            prop_assert!(out.reward > 0.0);
            prop_assert!((out.reward * out.cost.total_s - 1.0).abs() < 1e-12);
            prop_assert_eq!(&out.evaluation.association, &assoc);
        }
    }
}
