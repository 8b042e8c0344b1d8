use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fl_offload::config::RunConfig;
use fl_offload::harness::{self, RunOptions, SchemeName};
use fl_offload::{scenario, Error, Result};

#[derive(Parser)]
#[command(
    name = "fl-offload",
    version,
    about = "DDQN + convex scheduling of FL updates and task offloading at the edge"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Instance generation seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    episodes: Option<usize>,
    /// Comma-separated scheme names, e.g. DDQN,DDQN_CVX_TAU.
    #[arg(long, value_delimiter = ',')]
    schemes: Option<Vec<String>>,
}

#[derive(Subcommand)]
enum Command {
    /// Write the scenario instance as JSON.
    GenInstance(Common),
    /// Train every scheme on every seed and write the results CSV.
    Train(Common),
    /// Learning-rate sweep of the full scheme.
    SweepLr(Common),
    /// Turn results CSVs into per-series plot data.
    ExportPlots(Common),
}

fn resolve(c: &Common) -> Result<RunConfig> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = c.seed {
        cfg.instance.seed = s;
    }
    if let Some(o) = &c.out {
        cfg.output_dir = o.clone();
    }
    if let Some(e) = c.episodes {
        cfg.episodes = e;
        cfg.summary_k = cfg.summary_k.min(e);
    }
    if let Some(names) = &c.schemes {
        cfg.schemes = names
            .iter()
            .map(|n| {
                SchemeName::parse(n).ok_or_else(|| Error::Config {
                    key: "--schemes".into(),
                    message: format!("unknown scheme {n:?}"),
                })
            })
            .collect::<Result<_>>()?;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Files written by a command; removed again if the command fails.
struct Outputs {
    written: Vec<PathBuf>,
}

impl Outputs {
    fn new() -> Self {
        Self {
            written: Vec::new(),
        }
    }

    fn write(&mut self, path: PathBuf, contents: impl AsRef<[u8]>) -> Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        self.written.push(path.clone());
        fs::write(&path, contents)?;
        Ok(())
    }

    fn rollback(&self) {
        for p in &self.written {
            let _ = fs::remove_file(p);
        }
    }
}

fn gen_instance(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let inst = cfg.resolve_instance()?;
    let json = inst.to_json()?;
    let path = cfg.output_dir.join("instance.json");
    out.write(path.clone(), &json)?;
    let back = scenario::ScenarioInstance::from_json(&fs::read_to_string(&path)?)?;
    if back != inst {
        return Err(Error::Config {
            key: "instance.json".into(),
            message: "written instance does not read back".into(),
        });
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn verify_csv(path: &Path, expected: usize) -> Result<()> {
    let n = harness::read_records(fs::File::open(path)?)?.len();
    if n != expected {
        return Err(Error::Config {
            key: path.display().to_string(),
            message: format!("{n} rows read back, {expected} written"),
        });
    }
    Ok(())
}

fn train(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let inst = cfg.resolve_instance()?;
    let dir = &cfg.output_dir;
    out.write(dir.join("config.resolved.toml"), cfg.to_toml()?)?;
    let opts = RunOptions {
        record_wall_time: cfg.record_wall_time,
    };
    let (records, learners) = harness::run_experiment_with_checkpoints(
        &inst,
        &cfg.scheme_configs(),
        &cfg.seeds,
        &cfg.env,
        opts,
    )?;

    let mut buf = Vec::new();
    harness::write_records(&mut buf, &records)?;
    let results = dir.join("results.csv");
    out.write(results.clone(), buf)?;
    verify_csv(&results, records.len())?;

    for (scheme, seed, ck) in learners {
        out.write(
            dir.join("checkpoints")
                .join(format!("{scheme}_seed{seed}.json")),
            ck.to_json()?,
        )?;
    }

    let summary = harness::summarize(&records, cfg.summary_k)?;
    let mut text = String::from("scheme,n_seeds,reward_mean,reward_std,cost_mean_s,cost_std_s\n");
    for s in &summary {
        text += &format!(
            "{},{},{},{},{},{}\n",
            s.scheme,
            s.n_seeds,
            harness::fmt_sig9(s.reward_mean),
            harness::fmt_sig9(s.reward_std),
            harness::fmt_sig9(s.cost_mean),
            harness::fmt_sig9(s.cost_std)
        );
        println!(
            "{:<20} reward {:.6} ± {:.6}   cost {:.4} ± {:.4} s",
            s.scheme.as_str(),
            s.reward_mean,
            s.reward_std,
            s.cost_mean,
            s.cost_std
        );
    }
    out.write(dir.join("summary.csv"), text)?;
    println!("wrote {}", results.display());
    Ok(())
}

fn sweep_lr(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let inst = cfg.resolve_instance()?;
    let dir = &cfg.output_dir;
    out.write(dir.join("config.resolved.toml"), cfg.to_toml()?)?;
    let opts = RunOptions {
        record_wall_time: cfg.record_wall_time,
    };
    let groups = harness::sweep_learning_rate(
        &inst,
        &cfg.sweep.zetas,
        &cfg.seeds,
        cfg.episodes,
        &cfg.dqn,
        &cfg.env,
        opts,
    )?;
    let mut buf = Vec::new();
    harness::write_sweep(&mut buf, &groups)?;
    let path = dir.join("sweep_lr.csv");
    out.write(path.clone(), buf)?;
    let n = harness::read_sweep(fs::File::open(&path)?)?.len();
    if n != groups.iter().map(|g| g.records.len()).sum::<usize>() {
        return Err(Error::Config {
            key: "sweep_lr.csv".into(),
            message: "row count mismatch on read-back".into(),
        });
    }
    let mut conv = String::from("zeta,seed,convergence_episode\n");
    for g in &groups {
        for (seed, ep) in &g.convergence {
            conv += &format!(
                "{},{},{}\n",
                harness::fmt_sig9(g.zeta),
                seed,
                ep.map(|e| e.to_string()).unwrap_or_default()
            );
        }
        let mut eps: Vec<usize> = g.convergence.iter().filter_map(|c| c.1).collect();
        eps.sort_unstable();
        println!(
            "zeta {:<8} median convergence episode {:?}",
            g.zeta,
            eps.get(eps.len() / 2)
        );
    }
    out.write(dir.join("convergence.csv"), conv)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn export_plots(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let dir = &cfg.output_dir;
    let records = harness::read_records(fs::File::open(dir.join("results.csv"))?)?;
    if records.is_empty() {
        return Err(Error::Empty("results.csv has no rows"));
    }
    let series = |value: fn(&harness::RunRecord) -> f64| -> Vec<(String, Vec<f64>)> {
        harness::episode_means(records.iter().map(|r| (r.scheme, r.episode, value(r))))
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect()
    };
    let mut buf = Vec::new();
    harness::write_series(&mut buf, &series(|r| r.mean_reward))?;
    out.write(dir.join("reward_by_scheme.csv"), buf)?;
    let mut buf = Vec::new();
    harness::write_series(&mut buf, &series(|r| r.mean_cost_s))?;
    out.write(dir.join("cost_by_scheme.csv"), buf)?;

    let sweep_path = dir.join("sweep_lr.csv");
    if sweep_path.exists() {
        let rows = harness::read_sweep(fs::File::open(&sweep_path)?)?;
        if rows.is_empty() {
            return Err(Error::Empty("sweep_lr.csv has no rows"));
        }
        let by_zeta = harness::episode_means(
            rows.iter()
                .map(|(z, r)| (ordered_key(*z), r.episode, r.mean_reward)),
        );
        let series: Vec<(String, Vec<f64>)> = by_zeta
            .into_iter()
            .rev()
            .map(|(z, v)| (format!("zeta={}", harness::fmt_sig9(f64::from_bits(z))), v))
            .collect();
        let mut buf = Vec::new();
        harness::write_series(&mut buf, &series)?;
        out.write(dir.join("reward_by_learning_rate.csv"), buf)?;
    }
    for p in &out.written {
        println!("wrote {}", p.display());
    }
    Ok(())
}

/// Positive floats order like their bit patterns.
fn ordered_key(z: f64) -> u64 {
    z.to_bits()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut out = Outputs::new();
    let result = match &cli.command {
        Command::GenInstance(c) => resolve(c).and_then(|cfg| gen_instance(&cfg, &mut out)),
        Command::Train(c) => resolve(c).and_then(|cfg| train(&cfg, &mut out)),
        Command::SweepLr(c) => resolve(c).and_then(|cfg| sweep_lr(&cfg, &mut out)),
        Command::ExportPlots(c) => resolve(c).and_then(|cfg| export_plots(&cfg, &mut out)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            out.rollback();
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
