use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vectorplus_core::bundle::ModelBundle;
use vectorplus_core::generate::Reward;
use vectorplus_core::pipeline::{self, PipelineConfig, VerifyOptions};
use vectorplus_core::{Error, Result};

#[derive(Parser, Debug)]
#[command(
    name = "vectorplus",
    version,
    about = "Class-conditioned molecule generation from a contrastive latent space"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// JSON configuration file; flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    #[arg(long, global = true, value_name = "DIR")]
    output: Option<PathBuf>,
    /// Input CSV, overriding the config's dataset path.
    #[arg(long, global = true, value_name = "PATH")]
    data: Option<PathBuf>,
    #[arg(long, global = true, value_name = "NAME")]
    smiles_col: Option<String>,
    #[arg(long, global = true, value_name = "NAME")]
    value_col: Option<String>,
    /// Use categorical labels from this column instead of median binning.
    #[arg(long, global = true, value_name = "NAME")]
    label_col: Option<String>,
    /// Fit one Gaussian per class instead of a joint mixture.
    #[arg(long, global = true)]
    per_class_gmm: bool,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    /// 1-based class; all classes when omitted.
    #[arg(long, value_name = "C")]
    class: Option<usize>,
    #[arg(long, value_name = "T")]
    count: Option<usize>,
    #[arg(long, value_name = "none|lipinski")]
    reward: Option<Reward>,
    #[arg(long, value_name = "H")]
    hill_steps: Option<usize>,
    #[arg(long, value_name = "K")]
    knn: Option<usize>,
    #[arg(long, value_name = "A")]
    alpha: Option<f64>,
    #[arg(long, value_name = "T")]
    temperature: Option<f64>,
    /// Model bundle; defaults to bundle.json in the output directory.
    #[arg(long, value_name = "PATH")]
    bundle: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Load, filter and bin the dataset.
    Preprocess,
    /// Train encoder, mixture and decoder; write the model bundle.
    Train,
    /// Generate molecules for one or every class.
    Generate(GenerateArgs),
    /// Score generated SMILES files against the training set.
    Evaluate {
        /// SMILES files, one molecule per line; defaults to every class file
        /// in the output directory.
        files: Vec<PathBuf>,
        #[arg(long, value_name = "PATH")]
        bundle: Option<PathBuf>,
    },
    /// Numeric checks of the cross-entropy optimality result.
    Verify {
        /// Samples per source.
        #[arg(long, value_name = "N")]
        samples: Option<usize>,
        #[arg(long)]
        grad_check_only: bool,
    },
    /// Preprocess, train, generate and evaluate in one go.
    RunAll(GenerateArgs),
}

fn load_config(common: &Common) -> Result<PipelineConfig> {
    let mut cfg = match &common.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(o) = &common.output {
        cfg.output = o.clone();
    }
    if let Some(d) = &common.data {
        cfg.dataset.path = d.clone();
    }
    if let Some(c) = &common.smiles_col {
        cfg.dataset.smiles_col = c.clone();
    }
    if let Some(c) = &common.value_col {
        cfg.dataset.value_col = c.clone();
    }
    if let Some(c) = &common.label_col {
        cfg.dataset.label_col = c.clone();
        cfg.dataset.binning = pipeline::Binning::Labels;
    }
    if common.per_class_gmm {
        cfg.gmm.per_class = true;
    }
    Ok(cfg)
}

fn apply_generation(cfg: &mut PipelineConfig, g: &GenerateArgs) {
    let gen = &mut cfg.generation;
    if let Some(v) = g.count {
        gen.samples = v;
    }
    if let Some(v) = g.reward {
        gen.reward = v;
    }
    if let Some(v) = g.hill_steps {
        gen.hill_steps = v;
    }
    if let Some(v) = g.knn {
        gen.knn = v;
    }
    if let Some(v) = g.alpha {
        gen.alpha = v;
    }
    if let Some(v) = g.temperature {
        gen.temperature = v;
    }
}

fn load_bundle(cfg: &PipelineConfig, path: &Option<PathBuf>) -> Result<ModelBundle> {
    let path = path.clone().unwrap_or_else(|| cfg.out("bundle.json"));
    let bundle = ModelBundle::load(&path)?;
    bundle.check_config(cfg)?;
    Ok(bundle)
}

fn classes(bundle: &ModelBundle, class: Option<usize>) -> Result<Vec<usize>> {
    let k = bundle.class_names.len();
    match class {
        Some(c) if c == 0 || c > k => {
            Err(Error::InvalidConfig(format!("class {c} outside 1..={k}")))
        }
        Some(c) => Ok(vec![c]),
        None => Ok((1..=k).collect()),
    }
}

fn print_metrics(name: &str, m: &vectorplus_core::eval::MetricsSummary) {
    println!(
        "{name}: {} molecules, validity {:.3}, uniqueness {:.3}, novelty {:.3}, mean tanimoto {:.3}",
        m.total, m.validity, m.uniqueness, m.novelty, m.mean_tanimoto
    );
}

/// Returns false when a check reported failure.
fn run(cli: Cli) -> Result<bool> {
    let mut cfg = load_config(&cli.common)?;
    match cli.command {
        Command::Preprocess => {
            let r = pipeline::cmd_preprocess(&cfg)?;
            for (name, n) in r.class_names.iter().zip(&r.class_counts) {
                println!("{name}: {n}");
            }
            println!(
                "{} molecules written to {}",
                r.rows,
                cfg.out("dataset.json").display()
            );
        }
        Command::Train => {
            let (_, r) = pipeline::cmd_train(&cfg)?;
            println!(
                "encoder loss {:.6} -> {:.6}",
                r.encoder_loss_first.unwrap_or(f64::NAN),
                r.encoder_loss_last.unwrap_or(f64::NAN)
            );
            println!(
                "decoder loss {:.6} -> {:.6}",
                r.decoder_loss_first.unwrap_or(f64::NAN),
                r.decoder_loss_last.unwrap_or(f64::NAN)
            );
            let gamma: Vec<String> = r
                .alignment
                .iter()
                .enumerate()
                .map(|(k, c)| format!("component {} -> class {c}", k + 1))
                .collect();
            println!("alignment: {}", gamma.join(", "));
            println!("purity {:.4}", r.purity);
        }
        Command::Generate(g) => {
            apply_generation(&mut cfg, &g);
            let bundle = load_bundle(&cfg, &g.bundle)?;
            for c in classes(&bundle, g.class)? {
                let r = pipeline::cmd_generate(&cfg, &bundle, c)?;
                println!(
                    "class {c}: {} of {} molecules in {} attempts, shortfall {} -> {}",
                    r.produced,
                    r.requested,
                    r.attempts,
                    r.shortfall,
                    pipeline::molecules_path(&cfg, c).display()
                );
            }
        }
        Command::Evaluate { files, bundle } => {
            let bundle = load_bundle(&cfg, &bundle)?;
            let files: Vec<PathBuf> = if files.is_empty() {
                (1..=bundle.class_names.len())
                    .map(|c| pipeline::molecules_path(&cfg, c))
                    .filter(|p| p.is_file())
                    .collect()
            } else {
                files
            };
            if files.is_empty() {
                return Err(Error::InvalidConfig(format!(
                    "no generated molecule files in {}",
                    cfg.output.display()
                )));
            }
            for f in files {
                let m = pipeline::cmd_evaluate(&cfg, &f, &bundle)?;
                print_metrics(&f.display().to_string(), &m);
            }
        }
        Command::Verify {
            samples,
            grad_check_only,
        } => {
            let mut opts = VerifyOptions {
                grad_check_only,
                ..VerifyOptions::default()
            };
            opts.theorem.seed = cfg.seed;
            if let Some(n) = samples {
                opts.theorem.samples = n;
            }
            let r = pipeline::cmd_verify(&cfg, &opts)?;
            for g in &r.gradients {
                println!(
                    "{} gradient {}: rel error {:.3e} (threshold {:.0e})",
                    if g.passed { "PASS" } else { "FAIL" },
                    g.name,
                    g.rel_error,
                    g.threshold
                );
            }
            for t in &r.theorem {
                println!(
                    "{} {}: mean error {:.2e}, covariance error {:.2e} vs sample moments; {:.2e}, {:.2e} vs true moments (tolerance {}, {} iterations{})",
                    if t.passed { "PASS" } else { "FAIL" },
                    t.source,
                    t.mean_error_sample,
                    t.cov_error_sample,
                    t.mean_error_true,
                    t.cov_error_true,
                    t.tolerance,
                    t.iterations,
                    if t.converged { "" } else { ", not converged" }
                );
                if !t.passed {
                    for (i, f) in t.trajectory.iter().enumerate() {
                        println!("  trajectory {i}: {f:.12}");
                    }
                }
            }
            return Ok(r.passed);
        }
        Command::RunAll(g) => {
            apply_generation(&mut cfg, &g);
            if g.class.is_some() || g.bundle.is_some() {
                return Err(Error::InvalidConfig(
                    "run-all generates every class from a fresh bundle".into(),
                ));
            }
            let r = pipeline::run_all(&cfg)?;
            println!(
                "purity {:.4}, greedy reconstruction {:.3}",
                r.train.purity, r.train.greedy_reconstruction
            );
            for c in &r.classes {
                let g = &c.generation;
                println!(
                    "class {} ({}): {} of {} molecules in {} attempts",
                    g.class, g.class_name, g.produced, g.requested, g.attempts
                );
                print_metrics("  raw attempts", &c.raw_metrics);
            }
            println!("report written to {}", cfg.out("run_report.json").display());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("VECTORPLUS_LOG", "warn"))
        .init();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 1 })
        }
    }
}
