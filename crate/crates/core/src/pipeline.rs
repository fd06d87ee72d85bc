//! End-to-end orchestration: preprocessing, training, generation,
//! evaluation and the numeric verification suite. Every command writes its
//! outputs under `PipelineConfig::output` and is fully determined by the
//! configuration.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vectorplus_chem::canonical_smiles;

use crate::bundle::{ModelBundle, Traces, BUNDLE_FORMAT, BUNDLE_VERSION};
use crate::data::{self, LabeledDataset, Loaded, Provenance, Schema, ZScale};
use crate::decoder::{sample_smiles, train_decoder, DecoderConfig, SampleOptions, Vocabulary};
use crate::encoder::{embed_all, train_encoder, ContrastiveConfig, EmbeddingSet, Featurizer};
use crate::error::{Error, Result};
use crate::eval::{self, GradientCheck, MetricsSummary, TheoremConfig, TheoremReport};
use crate::generate::{self, GenerationConfig, GenerationReport, Models, Outcome};
use crate::latent::{self, Alignment, GmmConfig};
use crate::rng::{derive, seeded};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Binning {
    /// Two classes split at the median log IC50.
    #[default]
    Median,
    /// Classes taken from a categorical label column.
    Labels,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub path: PathBuf,
    pub smiles_col: String,
    pub value_col: String,
    pub label_col: String,
    pub binning: Binning,
    /// Class order for label binning; empty means sorted distinct labels.
    pub class_names: Vec<String>,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            path: PathBuf::new(),
            smiles_col: "smiles".into(),
            value_col: "ic50".into(),
            label_col: "label".into(),
            binning: Binning::Median,
            class_names: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessConfig {
    /// `None` disables outlier removal.
    pub z_threshold: Option<f64>,
    pub z_scale: ZScale,
    pub dedup: bool,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            z_threshold: Some(3.0),
            z_scale: ZScale::Log,
            dedup: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeaturizerConfig {
    pub fp_width: usize,
    pub fp_radius: u32,
}

impl Default for FeaturizerConfig {
    fn default() -> Self {
        let f = Featurizer::default();
        FeaturizerConfig {
            fp_width: f.fp_width,
            fp_radius: f.fp_radius,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub dataset: DatasetConfig,
    pub preprocess: PreprocessConfig,
    pub featurizer: FeaturizerConfig,
    pub encoder: ContrastiveConfig,
    pub gmm: GmmConfig,
    pub decoder: DecoderConfig,
    pub generation: GenerationConfig,
    /// Master seed; stage seeds are derived from it.
    pub seed: u64,
    pub output: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            dataset: DatasetConfig::default(),
            preprocess: PreprocessConfig::default(),
            featurizer: FeaturizerConfig::default(),
            encoder: ContrastiveConfig::default(),
            gmm: GmmConfig::default(),
            decoder: DecoderConfig::default(),
            generation: GenerationConfig::default(),
            seed: 0,
            output: PathBuf::from("vectorplus_out"),
        }
    }
}

const ENCODER_STREAM: u64 = 1;
const GMM_STREAM: u64 = 2;
const DECODER_STREAM: u64 = 3;
const GENERATION_STREAM: u64 = 4;

impl PipelineConfig {
    /// Reads a JSON config. A relative dataset path is taken relative to the
    /// config file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: PipelineConfig = serde_json::from_str(&text)?;
        if cfg.dataset.path.is_relative() && !cfg.dataset.path.as_os_str().is_empty() {
            if let Some(dir) = path.parent() {
                cfg.dataset.path = dir.join(&cfg.dataset.path);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.encoder.validate()?;
        self.decoder.validate()?;
        self.generation.validate()?;
        if let Some(t) = self.preprocess.z_threshold {
            if !(t > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "z threshold must be positive, got {t}"
                )));
            }
        }
        if self.featurizer.fp_width == 0 {
            return Err(Error::InvalidConfig(
                "fingerprint width must be positive".into(),
            ));
        }
        let g = &self.gmm;
        if !(g.tol >= 0.0) || !(g.reg_scale >= 0.0) {
            return Err(Error::InvalidConfig(
                "gmm tol and reg_scale must be non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Copy with every stage seed derived from the master seed.
    pub fn resolved(&self) -> PipelineConfig {
        let mut c = self.clone();
        c.encoder.seed = derive(self.seed, ENCODER_STREAM);
        c.gmm.seed = derive(self.seed, GMM_STREAM);
        c.decoder.seed = derive(self.seed, DECODER_STREAM);
        c.generation.seed = derive(self.seed, GENERATION_STREAM);
        c
    }

    /// The configuration as recorded in outputs: resolved, output blanked.
    pub fn echo(&self) -> PipelineConfig {
        let mut c = self.resolved();
        c.output = PathBuf::new();
        c
    }

    pub fn featurizer(&self) -> Featurizer {
        Featurizer {
            fp_width: self.featurizer.fp_width,
            fp_radius: self.featurizer.fp_radius,
            ..Featurizer::default()
        }
    }

    pub fn out(&self, name: &str) -> PathBuf {
        self.output.join(name)
    }

    fn ensure_output(&self) -> Result<()> {
        fs::create_dir_all(&self.output).map_err(|e| Error::io(&self.output, e))
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_lines(path: &Path, lines: &[String]) -> Result<()> {
    let mut text = String::new();
    for l in lines {
        text.push_str(l);
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_smiles_file(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect())
}

// ---------------------------------------------------------------- preprocess

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessReport {
    pub source: PathBuf,
    pub binning: Binning,
    pub provenance: Provenance,
    pub class_names: Vec<String>,
    pub class_counts: Vec<usize>,
    pub rows: usize,
}

pub fn preprocess(cfg: &PipelineConfig) -> Result<(LabeledDataset, PreprocessReport)> {
    cfg.validate()?;
    let ds = &cfg.dataset;
    if !ds.path.is_file() {
        return Err(Error::io(
            &ds.path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "dataset file not found"),
        ));
    }
    let schema = match ds.binning {
        Binning::Median => Schema::Activity {
            smiles_col: ds.smiles_col.clone(),
            value_col: ds.value_col.clone(),
        },
        Binning::Labels => Schema::Labels {
            smiles_col: ds.smiles_col.clone(),
            label_col: ds.label_col.clone(),
        },
    };
    let dataset = match data::load_csv(&ds.path, &schema)? {
        Loaded::Activity(table) => {
            let table = match cfg.preprocess.z_threshold {
                Some(t) => data::zscore_filter(&table, t, cfg.preprocess.z_scale)?,
                None => table,
            };
            data::median_bin(&data::log_transform(&table)?, cfg.preprocess.dedup)?
        }
        Loaded::Labels(table) => {
            data::from_class_labels(&table, &ds.class_names, cfg.preprocess.dedup)?
        }
    };
    let report = PreprocessReport {
        source: ds.path.clone(),
        binning: ds.binning,
        provenance: dataset.provenance.clone(),
        class_names: dataset.class_names.clone(),
        class_counts: dataset.class_counts(),
        rows: dataset.len(),
    };
    log::info!(
        "preprocess: {} rows, class counts {:?}",
        report.rows,
        report.class_counts
    );
    Ok((dataset, report))
}

pub fn cmd_preprocess(cfg: &PipelineConfig) -> Result<PreprocessReport> {
    let (dataset, report) = preprocess(cfg)?;
    cfg.ensure_output()?;
    dataset.save_json(&cfg.out("dataset.json"))?;
    dataset.write_csv(&cfg.out("dataset.csv"))?;
    write_json(&cfg.out("preprocess_report.json"), &report)?;
    Ok(report)
}

// --------------------------------------------------------------------- train

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub rows: usize,
    pub class_names: Vec<String>,
    pub encoder_loss_first: Option<f64>,
    pub encoder_loss_last: Option<f64>,
    pub gmm_iterations: usize,
    pub gmm_converged: bool,
    pub gmm_reseeds: usize,
    pub log_likelihood: Option<f64>,
    /// 1-based class served by each component.
    pub alignment: Vec<usize>,
    pub alignment_total: f64,
    pub purity: f64,
    pub silhouette: Option<f64>,
    pub decoder_loss_first: Option<f64>,
    pub decoder_loss_last: Option<f64>,
    /// Share of training molecules recovered by greedy decoding of their
    /// embedding.
    pub greedy_reconstruction: f64,
}

/// Exact-match greedy reconstruction rate.
pub fn reconstruction_rate(
    dec: &crate::decoder::GruDecoder,
    latents: &[Vec<f64>],
    smiles: &[String],
) -> Result<f64> {
    let opts = SampleOptions {
        greedy: true,
        ..SampleOptions::default()
    };
    let mut hits = 0;
    for (z, s) in latents.iter().zip(smiles) {
        if sample_smiles(dec, z, &opts, &mut seeded(0))?.smiles == *s {
            hits += 1;
        }
    }
    Ok(hits as f64 / smiles.len().max(1) as f64)
}

/// Trains encoder, mixture, alignment and decoder on a labeled dataset.
pub fn train(cfg: &PipelineConfig, dataset: &LabeledDataset) -> Result<(ModelBundle, TrainReport)> {
    cfg.validate()?;
    dataset.validate()?;
    let run = cfg.resolved();
    let classes = dataset.class_count();
    let smiles: Vec<String> = dataset.records.iter().map(|r| r.smiles.clone()).collect();
    let labels = dataset.labels();

    let featurizer = run.featurizer();
    let features = featurizer
        .featurize_all(&smiles)
        .map_err(Error::in_stage("encoder"))?;
    let enc =
        train_encoder(&features, &labels, &run.encoder).map_err(Error::in_stage("encoder"))?;
    let z = embed_all(&enc.params, &features).map_err(Error::in_stage("encoder"))?;
    log::info!(
        "encoder: loss {:?} -> {:?} over {} epochs",
        enc.loss_trace.first(),
        enc.loss_trace.last(),
        enc.loss_trace.len()
    );

    let (gmm, ll_trace, converged, reseeds) = if run.gmm.per_class {
        (
            latent::fit_per_class(&z, &labels, classes, &run.gmm)
                .map_err(Error::in_stage("gmm"))?,
            Vec::new(),
            true,
            0,
        )
    } else {
        let fit = latent::fit(&z, classes, &run.gmm).map_err(Error::in_stage("gmm"))?;
        (fit.params, fit.trace, fit.converged, fit.reseeds)
    };
    let resp = latent::e_step(&gmm, &z).map_err(Error::in_stage("gmm"))?;
    let alignment = if run.gmm.per_class {
        // component c was fitted on class c
        Alignment::new(
            latent::affinity(&resp, &labels, classes),
            (0..classes).collect(),
        )
    } else {
        latent::align(&resp, &labels, classes).map_err(Error::in_stage("align"))?
    };
    let purity = latent::purity(&resp, &labels, &alignment.gamma);
    log::info!(
        "gmm: {} iterations, alignment {:?}, purity {purity:.4}",
        ll_trace.len(),
        alignment.gamma.iter().map(|g| g + 1).collect::<Vec<_>>()
    );

    let vocab = Vocabulary::build(&smiles);
    let dec = train_decoder(
        run.decoder.build(vocab, run.encoder.dim),
        &z,
        &smiles,
        &run.decoder,
    )
    .map_err(Error::in_stage("decoder"))?;
    log::info!(
        "decoder: loss {:?} -> {:?} over {} epochs",
        dec.loss_trace.first(),
        dec.loss_trace.last(),
        dec.loss_trace.len()
    );

    let report = TrainReport {
        rows: dataset.len(),
        class_names: dataset.class_names.clone(),
        encoder_loss_first: enc.loss_trace.first().copied(),
        encoder_loss_last: enc.loss_trace.last().copied(),
        gmm_iterations: ll_trace.len(),
        gmm_converged: converged,
        gmm_reseeds: reseeds,
        log_likelihood: Some(resp.log_likelihood),
        alignment: alignment.gamma.iter().map(|g| g + 1).collect(),
        alignment_total: alignment.total,
        purity,
        silhouette: eval::silhouette(&z, &labels).ok(),
        decoder_loss_first: dec.loss_trace.first().copied(),
        decoder_loss_last: dec.loss_trace.last().copied(),
        greedy_reconstruction: reconstruction_rate(&dec.decoder, &z, &smiles)?,
    };
    let bundle = ModelBundle {
        format: BUNDLE_FORMAT.into(),
        version: BUNDLE_VERSION,
        config: cfg.echo(),
        provenance: dataset.provenance.clone(),
        class_names: dataset.class_names.clone(),
        featurizer,
        encoder: enc.params,
        gmm,
        per_class_gmm: run.gmm.per_class,
        alignment,
        decoder: dec.decoder,
        training: EmbeddingSet {
            vectors: z,
            labels,
            smiles,
        },
        traces: Traces {
            encoder_loss: enc.loss_trace,
            gmm_log_likelihood: ll_trace,
            decoder_loss: dec.loss_trace,
        },
    };
    bundle.validate()?;
    Ok((bundle, report))
}

/// Trains on `output/dataset.json`, preprocessing first if it is missing.
pub fn cmd_train(cfg: &PipelineConfig) -> Result<(ModelBundle, TrainReport)> {
    let path = cfg.out("dataset.json");
    let dataset = if path.is_file() {
        LabeledDataset::load_json(&path)?
    } else {
        cmd_preprocess(cfg)?;
        LabeledDataset::load_json(&path)?
    };
    let (bundle, report) = train(cfg, &dataset)?;
    cfg.ensure_output()?;
    bundle.save(&cfg.out("bundle.json"))?;
    bundle.training.write_csv(&cfg.out("embeddings.csv"))?;
    write_json(&cfg.out("train_report.json"), &report)?;
    Ok((bundle, report))
}

// ------------------------------------------------------------------ generate

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationSummary {
    pub class: usize,
    pub class_name: String,
    pub component: usize,
    pub requested: usize,
    pub attempts: usize,
    pub produced: usize,
    pub invalid: usize,
    pub duplicate: usize,
    pub non_novel: usize,
    pub truncated: usize,
    pub shortfall: usize,
    pub config: GenerationConfig,
}

impl GenerationSummary {
    pub fn new(report: &GenerationReport, class_name: &str) -> Self {
        GenerationSummary {
            class: report.class,
            class_name: class_name.to_string(),
            component: report.component,
            requested: report.requested,
            attempts: report.attempts,
            produced: report.produced,
            invalid: report.invalid,
            duplicate: report.duplicate,
            non_novel: report.non_novel,
            truncated: report.truncated,
            shortfall: report.shortfall,
            config: report.config.clone(),
        }
    }
}

/// Generation settings for `class`; each class gets its own seed stream.
pub fn generation_config(cfg: &PipelineConfig, class: usize) -> GenerationConfig {
    let mut g = cfg.resolved().generation;
    g.class = class;
    g.seed = derive(g.seed, class as u64);
    g
}

pub fn generate(
    cfg: &PipelineConfig,
    bundle: &ModelBundle,
    class: usize,
) -> Result<GenerationReport> {
    bundle.check_config(cfg)?;
    let training: BTreeSet<String> = bundle
        .training
        .smiles
        .iter()
        .map(|s| canonical_smiles(s))
        .collect::<std::result::Result<_, _>>()?;
    let models = Models {
        decoder: &bundle.decoder,
        gmm: &bundle.gmm,
        alignment: &bundle.alignment,
        embeddings: &bundle.training.vectors,
        training: &training,
        logp: &bundle.featurizer.logp,
    };
    generate::generate_class(&models, &generation_config(cfg, class))
}

pub fn attempts_path(cfg: &PipelineConfig, class: usize) -> PathBuf {
    cfg.out(&format!("class_{class}_attempts.csv"))
}

pub fn molecules_path(cfg: &PipelineConfig, class: usize) -> PathBuf {
    cfg.out(&format!("class_{class}.smi"))
}

pub fn raw_path(cfg: &PipelineConfig, class: usize) -> PathBuf {
    cfg.out(&format!("class_{class}_raw.smi"))
}

fn write_attempts(path: &Path, report: &GenerationReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "attempt",
        "smiles",
        "valid",
        "novel",
        "unique",
        "accepted",
        "truncated",
        "reward",
        "climb_accepts",
    ])?;
    for r in &report.records {
        let valid = r.outcome != Outcome::Invalid;
        let novel = valid && r.outcome != Outcome::NonNovel;
        let unique = valid && r.outcome != Outcome::Duplicate;
        let flag = |b: bool| if b { "1" } else { "0" }.to_string();
        w.write_record([
            r.attempt.to_string(),
            r.smiles.clone(),
            flag(valid),
            flag(novel),
            flag(unique),
            flag(r.outcome == Outcome::Accepted),
            flag(r.truncated),
            r.reward.map(|v| v.to_string()).unwrap_or_default(),
            r.climb_accepts.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Generates for one class and writes the molecule file, the raw attempt
/// strings, the attempt CSV and a JSON summary.
pub fn cmd_generate(
    cfg: &PipelineConfig,
    bundle: &ModelBundle,
    class: usize,
) -> Result<GenerationReport> {
    let report = generate(cfg, bundle, class)?;
    cfg.ensure_output()?;
    write_lines(&molecules_path(cfg, class), &report.molecules())?;
    write_lines(&raw_path(cfg, class), &report.raw())?;
    write_attempts(&attempts_path(cfg, class), &report)?;
    let name = bundle
        .class_names
        .get(class - 1)
        .cloned()
        .unwrap_or_default();
    write_json(
        &cfg.out(&format!("class_{class}_summary.json")),
        &GenerationSummary::new(&report, &name),
    )?;
    log::info!(
        "generate class {class}: {} of {} molecules from {} attempts ({} invalid, {} duplicate, {} not novel)",
        report.produced,
        report.requested,
        report.attempts,
        report.invalid,
        report.duplicate,
        report.non_novel
    );
    Ok(report)
}

// ------------------------------------------------------------------ evaluate

/// Metrics of `generated` against the bundle's training molecules.
pub fn evaluate(generated: &[String], bundle: &ModelBundle) -> Result<MetricsSummary> {
    let reference = eval::Reference::new(&bundle.training.smiles)?;
    eval::metrics_with(generated, &reference, &bundle.featurizer.logp)
}

/// Writes `<stem>_metrics.json` and `<stem>_histograms.csv` next to the
/// other outputs.
pub fn cmd_evaluate(
    cfg: &PipelineConfig,
    generated: &Path,
    bundle: &ModelBundle,
) -> Result<MetricsSummary> {
    let smiles = read_smiles_file(generated)?;
    let m = evaluate(&smiles, bundle)?;
    let stem = generated
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("generated");
    cfg.ensure_output()?;
    write_json(&cfg.out(&format!("{stem}_metrics.json")), &m)?;
    eval::write_histograms(&m, &cfg.out(&format!("{stem}_histograms.csv")))?;
    Ok(m)
}

// -------------------------------------------------------------------- verify

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyOptions {
    pub theorem: TheoremConfig,
    pub grad_check_only: bool,
    pub grad_trials: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            theorem: TheoremConfig::default(),
            grad_check_only: false,
            grad_trials: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub theorem: Vec<TheoremReport>,
    pub gradients: Vec<GradientCheck>,
    pub passed: bool,
}

pub fn verify(opts: &VerifyOptions) -> Result<VerifyReport> {
    let gradients = eval::gradient_checks(opts.grad_trials, derive(opts.theorem.seed, 99))?;
    let theorem = if opts.grad_check_only {
        Vec::new()
    } else {
        eval::Source::ALL
            .into_iter()
            .map(|s| eval::verify_theorem1(s, &opts.theorem))
            .collect::<Result<_>>()?
    };
    let passed = gradients.iter().all(|g| g.passed) && theorem.iter().all(|t| t.passed);
    Ok(VerifyReport {
        theorem,
        gradients,
        passed,
    })
}

pub fn cmd_verify(cfg: &PipelineConfig, opts: &VerifyOptions) -> Result<VerifyReport> {
    let report = verify(opts)?;
    cfg.ensure_output()?;
    write_json(&cfg.out("verify_report.json"), &report)?;
    Ok(report)
}

// ------------------------------------------------------------------- run-all

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassRun {
    pub generation: GenerationSummary,
    /// Metrics over every raw attempt.
    pub raw_metrics: MetricsSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: PipelineConfig,
    pub preprocess: PreprocessReport,
    pub train: TrainReport,
    pub classes: Vec<ClassRun>,
}

/// Preprocess, train, generate every class, and evaluate the raw attempts.
pub fn run_all(cfg: &PipelineConfig) -> Result<RunReport> {
    let preprocess = cmd_preprocess(cfg)?;
    let (bundle, train) = cmd_train(cfg)?;
    let mut classes = Vec::new();
    for class in 1..=bundle.class_names.len() {
        let report = cmd_generate(cfg, &bundle, class)?;
        let raw_metrics = cmd_evaluate(cfg, &raw_path(cfg, class), &bundle)?;
        classes.push(ClassRun {
            generation: GenerationSummary::new(&report, &bundle.class_names[class - 1]),
            raw_metrics,
        });
    }
    let report = RunReport {
        config: cfg.echo(),
        preprocess,
        train,
        classes,
    };
    write_json(&cfg.out("run_report.json"), &report)?;
    Ok(report)
}
