use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use xerm_core::causal_oracle::verify_random_scms;
use xerm_core::datasets::{encode_csv, encode_raw_f32};
use xerm_core::harness::{
    self, ablate_constant_w, evaluate_model, execute_pipeline, feature_probe, prepare_data,
    report, run_dir, run_xerm_pipeline, sweep_gamma, train_xe, write_atomic,
    write_report, write_sweep, EpochStats, ExperimentConfig, HarnessError,
};
use xerm_core::model::{load_checkpoint, save_checkpoint};
use xerm_core::ModelParams;

/// Long-tailed classification with cross-domain empirical risk minimization.
#[derive(Parser)]
#[command(name = "xerm", version)]
struct Cli {
    /// Experiment config file (`key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run a single seed instead of the config's seed list.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Config override, `key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum DataFormat {
    Csv,
    RawF32,
}

#[derive(Subcommand)]
enum Command {
    /// Write the synthetic train/test splits of each seed.
    GenData {
        #[arg(long, value_enum, default_value = "csv")]
        format: DataFormat,
    },
    /// Train the imbalanced model with cross-entropy.
    TrainXe,
    /// Run the full pipeline and write a manifest per seed.
    TrainXerm,
    /// Evaluate a checkpoint on the balanced and imbalanced test suites.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Apply post-hoc logit adjustment with the training prior.
        #[arg(long)]
        adjust: bool,
    },
    /// Balanced-test accuracy per gamma on shared base models.
    SweepGamma {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "-2,0,1,2,4")]
        gammas: Vec<f64>,
    },
    /// Balanced-test accuracy per constant distillation weight.
    AblateW {
        #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,0.75,1")]
        ws: Vec<f64>,
    },
    /// Retrain the classifier head of a backbone on balanced data.
    Probe {
        /// Backbone to probe; default probes the XE and xERM backbones of a
        /// fresh pipeline run.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Check the backdoor identities on random discrete causal models.
    VerifyCausal {
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, default_value_t = 5)]
        max_card: usize,
    },
    /// Aggregate manifests into mean ± std tables.
    Report {
        #[arg(required = true)]
        manifests: Vec<PathBuf>,
    },
}

enum Failure {
    Config(String),
    Runtime(String),
    Violation,
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Config(_) => Failure::Config(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, HarnessError> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    config.apply_overrides(&cli.overrides)?;
    if let Some(seed) = cli.seed {
        config.seeds = vec![seed];
    }
    if let Some(out) = &cli.out {
        config.out = out.clone();
    }
    Ok(config)
}

fn read_checkpoint(path: &Path) -> Result<ModelParams, Failure> {
    let bytes = std::fs::read(path).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    load_checkpoint(&bytes).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

fn print_eval_header() {
    println!("{:<6} {:<14} {:>8} {:>8} {:>8} {:>8} {:>8}", "seed", "suite", "acc", "many", "medium", "few", "l1");
}

fn print_eval_row(seed: u64, suite: &str, r: &xerm_core::MetricsReport) {
    let sub = |s: Option<xerm_core::metrics::SubsetScores>| s.map_or("-".to_string(), |s| format!("{:.4}", s.recall));
    println!(
        "{:<6} {:<14} {:>8.4} {:>8} {:>8} {:>8} {:>8.4}",
        seed,
        suite,
        r.accuracy,
        sub(r.subsets.many),
        sub(r.subsets.medium),
        sub(r.subsets.few),
        r.l1_to_truth
    );
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if let Command::VerifyCausal { count, max_card } = &cli.command {
        return verify_causal(cli.seed.unwrap_or(0), *count, *max_card);
    }
    if let Command::Report { manifests } = &cli.command {
        let tables = report(manifests)?;
        let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
        for path in write_report(&tables, &out)? {
            println!("wrote {}", path.display());
        }
        println!("{:<6} {:<10} {:<18} {:>8} {:>8} {:>3}", "model", "suite", "metric", "mean", "std", "n");
        for c in tables.cells.iter().filter(|c| c.metric == "accuracy" || c.metric == "l1_to_truth") {
            println!("{:<6} {:<10} {:<18} {:>8.4} {:>8.4} {:>3}", c.model, c.suite, c.metric, c.mean, c.std, c.n);
        }
        return Ok(());
    }

    let config = load_config(cli)?;
    match &cli.command {
        Command::GenData { format } => {
            for &seed in &config.seeds {
                let data = prepare_data(&config, seed)?;
                let dir = run_dir(&config, seed);
                for (name, split) in [("train", &data.train), ("test", &data.test)] {
                    let (file, bytes) = match format {
                        DataFormat::Csv => (format!("{name}.csv"), encode_csv(split, true)),
                        DataFormat::RawF32 => (format!("{name}.bin"), encode_raw_f32(split)),
                    };
                    write_atomic(&dir.join(&file), &bytes)?;
                    println!("wrote {} ({} rows)", dir.join(&file).display(), split.len());
                }
            }
        }
        Command::TrainXe => {
            for &seed in &config.seeds {
                let (params, curve) = train_xe(&config, seed)?;
                let dir = run_dir(&config, seed);
                write_atomic(&dir.join("xe.ckpt"), &save_checkpoint(&params))?;
                write_atomic(&dir.join("xe_loss.csv"), &EpochStats::curve_csv(&curve))?;
                let last = curve.last().map_or(f64::NAN, |s| s.mean_loss);
                println!("seed {seed}: final loss {last:.6}, wrote {}", dir.join("xe.ckpt").display());
            }
        }
        Command::TrainXerm => {
            print_eval_header();
            for &seed in &config.seeds {
                let manifest = run_xerm_pipeline(&config, seed)?;
                for e in &manifest.evaluations {
                    print_eval_row(seed, &format!("{}/{}", e.model, e.suite), &e.report);
                }
                println!("wrote {}", run_dir(&config, seed).join("manifest.json").display());
            }
        }
        Command::Eval { checkpoint, adjust } => {
            let params = read_checkpoint(checkpoint)?;
            print_eval_header();
            for &seed in &config.seeds {
                let data = prepare_data(&config, seed)?;
                let prior = xerm_core::balanced_adjust::estimate_prior(&data.train)
                    .map_err(|e| Failure::Runtime(e.to_string()))?;
                let suites = harness::build_suites(&config, &data, seed)?;
                for suite in &suites {
                    let adj = adjust.then_some((&prior, config.tau));
                    let r = evaluate_model(&params, adj, &suite.data, &data.partition)?;
                    print_eval_row(seed, &suite.name, &r);
                }
            }
        }
        Command::SweepGamma { gammas } => {
            let table = sweep_gamma(&config, gammas)?;
            let path = write_sweep(&table, &config.out, "sweep_gamma")?;
            print_sweep(&table, gammas);
            println!("wrote {}", path.display());
        }
        Command::AblateW { ws } => {
            let table = ablate_constant_w(&config, ws)?;
            let path = write_sweep(&table, &config.out, "ablate_w")?;
            print_sweep(&table, ws);
            println!("wrote {}", path.display());
        }
        Command::Probe { checkpoint } => {
            println!("{:<6} {:<10} {:>8}", "seed", "backbone", "probe_acc");
            for &seed in &config.seeds {
                match checkpoint {
                    Some(path) => {
                        let backbone = read_checkpoint(path)?;
                        let data = prepare_data(&config, seed)?;
                        let r = feature_probe(&backbone, &data.probe_train, &data.probe_test, &data.partition, &config, seed)?;
                        println!("{:<6} {:<10} {:>8.4}", seed, "given", r.accuracy);
                    }
                    None => {
                        let run = execute_pipeline(&config, seed)?;
                        let d = &run.base.data;
                        for (name, backbone) in [("xe", &run.base.xe), ("xerm", &run.xerm)] {
                            let r = feature_probe(backbone, &d.probe_train, &d.probe_test, &d.partition, &config, seed)?;
                            println!("{:<6} {:<10} {:>8.4}", seed, name, r.accuracy);
                        }
                    }
                }
            }
        }
        Command::VerifyCausal { .. } | Command::Report { .. } => unreachable!(),
    }
    Ok(())
}

fn print_sweep(table: &harness::SweepTable, values: &[f64]) {
    println!("{:>8} {:>10}", table.parameter, "mean_acc");
    let mut seen = Vec::new();
    for &v in values {
        if seen.contains(&v) {
            continue;
        }
        seen.push(v);
        println!("{:>8} {:>10.4}", v, table.mean_balanced(v).unwrap_or(f64::NAN));
    }
}

fn verify_causal(seed: u64, count: usize, max_card: usize) -> Result<(), Failure> {
    if count == 0 || max_card < 2 {
        return Err(Failure::Config("need count >= 1 and max-card >= 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let summaries = verify_random_scms(&mut rng, count, max_card);
    println!("{:<42} {:>7} {:>8} {:>12} {:>6}", "identity", "cases", "failures", "worst_dev", "status");
    let mut ok = true;
    for s in &summaries {
        ok &= s.passed();
        println!(
            "{:<42} {:>7} {:>8} {:>12.3e} {:>6}",
            s.identity,
            s.cases,
            s.failures,
            s.worst_deviation,
            if s.passed() { "pass" } else { "FAIL" }
        );
    }
    if ok {
        Ok(())
    } else {
        Err(Failure::Violation)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Violation) => {
            eprintln!("error: causal identity violated");
            ExitCode::from(3)
        }
    }
}
