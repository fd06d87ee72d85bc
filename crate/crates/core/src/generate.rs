//! Class-conditional generation: sample latents from the mixture component
//! aligned to a class, optionally hill-climb on a reward, decode, and keep
//! valid, novel, non-duplicate molecules.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use vectorplus_chem::{canonical, parse_smiles, properties_with, LogPTable};

use crate::decoder::{sample_smiles, GruDecoder, SampleOptions};
use crate::error::{Error, Result};
use crate::floats;
use crate::latent::{self, Alignment, GmmParams};
use crate::linalg::sq_dist;
use crate::rng::{derive, seeded, Rng};

/// Lower bound on the local variance estimate.
pub const VAR_FLOOR: f64 = 1e-8;

/// Raw attempts allowed per requested molecule.
pub const ATTEMPTS_PER_SAMPLE: usize = 5;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reward {
    #[default]
    None,
    Lipinski,
}

impl FromStr for Reward {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Reward::None),
            "lipinski" => Ok(Reward::Lipinski),
            other => Err(Error::InvalidConfig(format!(
                "unknown reward {other:?}, expected none or lipinski"
            ))),
        }
    }
}

impl fmt::Display for Reward {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Reward::None => "none",
            Reward::Lipinski => "lipinski",
        })
    }
}

/// Number of rule-of-five conditions met (0 to 4).
pub fn lipinski_reward(smiles: &str, table: &LogPTable) -> Result<u32> {
    let mol = parse_smiles(smiles).map_err(|e| Error::InvalidSmiles(format!("{smiles}: {e}")))?;
    let p = properties_with(&mol, table)?;
    let rules = [p.mw <= 500.0, p.logp <= 5.0, p.hbd <= 5, p.hba <= 10];
    Ok(rules.iter().filter(|&&ok| ok).count() as u32)
}

/// Mean squared distance from `z` to its `k` nearest references, floored at
/// [`VAR_FLOOR`].
pub fn knn_local_variance(z: &[f64], references: &[Vec<f64>], k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    if references.len() < k {
        return Err(Error::InsufficientNeighbors {
            need: k,
            have: references.len(),
        });
    }
    let mut d = Vec::with_capacity(references.len());
    for r in references {
        if r.len() != z.len() {
            return Err(Error::DimensionMismatch {
                expected: z.len(),
                found: r.len(),
            });
        }
        d.push(sq_dist(z, r));
    }
    d.sort_by(f64::total_cmp);
    let var = d[..k].iter().sum::<f64>() / k as f64;
    Ok(var.max(VAR_FLOOR))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClimbConfig {
    pub steps: usize,
    pub knn: usize,
    pub alpha: f64,
}

/// One proposal in a hill-climbing run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClimbStep {
    pub smiles: String,
    pub valid: bool,
    pub reward: Option<u32>,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClimbOutcome {
    #[serde(with = "floats")]
    pub z: Vec<f64>,
    pub smiles: String,
    /// The starting latent did not decode to a scoreable molecule.
    pub initial_invalid: bool,
    /// Reward of the start followed by every accepted proposal.
    pub accepted_rewards: Vec<u32>,
    pub proposals: Vec<ClimbStep>,
}

/// Perturb-and-accept search. `decode` must be deterministic in `z`; `score`
/// returns `None` for strings that are not valid molecules.
pub fn hill_climb<D, S>(
    z0: &[f64],
    mut decode: D,
    mut score: S,
    cfg: &ClimbConfig,
    references: &[Vec<f64>],
    rng: &mut Rng,
) -> Result<ClimbOutcome>
where
    D: FnMut(&[f64]) -> Result<String>,
    S: FnMut(&str) -> Option<u32>,
{
    if !(cfg.alpha > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "alpha must be positive, got {}",
            cfg.alpha
        )));
    }
    let mut z = z0.to_vec();
    let mut smiles = decode(&z)?;
    let Some(mut reward) = score(&smiles) else {
        return Ok(ClimbOutcome {
            z,
            smiles,
            initial_invalid: true,
            accepted_rewards: vec![],
            proposals: vec![],
        });
    };
    let mut accepted_rewards = vec![reward];
    let mut proposals = Vec::with_capacity(cfg.steps);
    for _ in 0..cfg.steps {
        let var = knn_local_variance(&z, references, cfg.knn)?;
        let noise = Normal::new(0.0, cfg.alpha * var.sqrt())
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        let cand: Vec<f64> = z.iter().map(|v| v + noise.sample(rng)).collect();
        let s = decode(&cand)?;
        let r = score(&s);
        let accepted = r.is_some_and(|r| r > reward);
        proposals.push(ClimbStep {
            smiles: s.clone(),
            valid: r.is_some(),
            reward: r,
            accepted,
        });
        if accepted {
            z = cand;
            smiles = s;
            reward = r.unwrap_or(reward);
            accepted_rewards.push(reward);
        }
    }
    Ok(ClimbOutcome {
        z,
        smiles,
        initial_invalid: false,
        accepted_rewards,
        proposals,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationConfig {
    /// 1-based target class.
    pub class: usize,
    pub samples: usize,
    pub hill_steps: usize,
    pub knn: usize,
    pub alpha: f64,
    pub temperature: f64,
    pub max_len: usize,
    pub reward: Reward,
    pub seed: u64,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            class: 1,
            samples: 100,
            hill_steps: 10,
            knn: 5,
            alpha: 0.1,
            temperature: 1.0,
            max_len: 150,
            reward: Reward::None,
            seed: 0,
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.class == 0 {
            return bad("class is 1-based".into());
        }
        if self.samples == 0 {
            return bad("sample count must be at least 1".into());
        }
        if self.knn == 0 {
            return bad("knn must be at least 1".into());
        }
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return bad(format!("alpha must be positive, got {}", self.alpha));
        }
        if !(self.temperature > 0.0) || !self.temperature.is_finite() {
            return bad(format!(
                "temperature must be positive, got {}",
                self.temperature
            ));
        }
        if self.max_len == 0 {
            return bad("max_len must be at least 1".into());
        }
        Ok(())
    }

    fn sample_options(&self) -> SampleOptions {
        SampleOptions {
            temperature: self.temperature,
            greedy: false,
            max_len: self.max_len,
        }
    }
}

/// Everything generation needs from a trained pipeline.
#[derive(Debug, Clone, Copy)]
pub struct Models<'a> {
    pub decoder: &'a GruDecoder,
    pub gmm: &'a GmmParams,
    pub alignment: &'a Alignment,
    /// Training embeddings, used as hill-climbing references.
    pub embeddings: &'a [Vec<f64>],
    /// Canonical forms of the training molecules.
    pub training: &'a BTreeSet<String>,
    pub logp: &'a LogPTable,
}

impl Models<'_> {
    pub fn check(&self) -> Result<()> {
        self.gmm.validate()?;
        self.decoder.validate()?;
        let d = self.gmm.dim();
        if self.decoder.shape.latent != d {
            return Err(Error::ModelMismatch(format!(
                "decoder latent dimension {} differs from mixture dimension {d}",
                self.decoder.shape.latent
            )));
        }
        if let Some(e) = self.embeddings.iter().find(|e| e.len() != d) {
            return Err(Error::ModelMismatch(format!(
                "embedding of dimension {} in a {d}-dimensional model",
                e.len()
            )));
        }
        let k = self.gmm.k();
        if self.alignment.gamma.len() != k || self.alignment.inverse.len() != k {
            return Err(Error::ModelMismatch(format!(
                "alignment covers {} components, mixture has {k}",
                self.alignment.gamma.len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Accepted,
    Invalid,
    Duplicate,
    NonNovel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttemptRecord {
    pub attempt: usize,
    pub smiles: String,
    pub canonical: Option<String>,
    pub outcome: Outcome,
    pub truncated: bool,
    pub reward: Option<u32>,
    pub climb_accepts: usize,
    /// Latent sampled from the mixture.
    #[serde(with = "floats")]
    pub source: Vec<f64>,
    /// Latent that was finally decoded.
    #[serde(with = "floats")]
    pub latent: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationReport {
    pub class: usize,
    pub component: usize,
    pub requested: usize,
    pub attempts: usize,
    pub produced: usize,
    pub invalid: usize,
    pub duplicate: usize,
    pub non_novel: usize,
    /// Attempts that hit `max_len`; these are also counted in one of the
    /// categories above.
    pub truncated: usize,
    pub shortfall: usize,
    pub config: GenerationConfig,
    pub records: Vec<AttemptRecord>,
}

impl GenerationReport {
    pub fn accepted(&self) -> impl Iterator<Item = &AttemptRecord> {
        self.records
            .iter()
            .filter(|r| r.outcome == Outcome::Accepted)
    }

    pub fn molecules(&self) -> Vec<String> {
        self.accepted().map(|r| r.smiles.clone()).collect()
    }

    /// Raw decoded strings of every attempt, in order.
    pub fn raw(&self) -> Vec<String> {
        self.records.iter().map(|r| r.smiles.clone()).collect()
    }
}

/// Runs attempts `t = 0, 1, ...` until `samples` molecules are accepted or
/// `5 × samples` attempts are spent. Attempt `t` uses seed
/// `derive(cfg.seed, t)` only, so any attempt can be replayed on its own.
pub fn generate_class(models: &Models<'_>, cfg: &GenerationConfig) -> Result<GenerationReport> {
    cfg.validate()?;
    models.check()?;
    let classes = models.alignment.inverse.len();
    if cfg.class > classes {
        return Err(Error::InvalidConfig(format!(
            "class {} out of range 1..={classes}",
            cfg.class
        )));
    }
    let component = models.alignment.component_for(cfg.class);
    let climbing = cfg.reward != Reward::None && cfg.hill_steps > 0;
    let references = if climbing {
        cluster_members(models, component)?
    } else {
        Vec::new()
    };
    let opts = cfg.sample_options();
    let climb = ClimbConfig {
        steps: cfg.hill_steps,
        knn: cfg.knn,
        alpha: cfg.alpha,
    };

    let mut seen = BTreeSet::new();
    let mut records = Vec::new();
    let mut produced = 0;
    let budget = cfg.samples.saturating_mul(ATTEMPTS_PER_SAMPLE);
    for t in 0..budget {
        if produced == cfg.samples {
            break;
        }
        let seed = derive(cfg.seed, t as u64);
        let mut rng = seeded(seed);
        let source = latent::sample(models.gmm, component, 1, &mut rng)?.remove(0);
        let decode_seed = derive(seed, 1);
        let decode = |z: &[f64]| -> Result<(String, bool)> {
            let s = sample_smiles(models.decoder, z, &opts, &mut seeded(decode_seed))?;
            Ok((s.smiles, s.truncated))
        };
        let (latent, climb_accepts) = if climbing {
            let score = |s: &str| lipinski_reward(s, models.logp).ok();
            let out = hill_climb(
                &source,
                |z| decode(z).map(|d| d.0),
                score,
                &climb,
                &references,
                &mut rng,
            )?;
            let n = out.accepted_rewards.len().saturating_sub(1);
            (out.z, n)
        } else {
            (source.clone(), 0)
        };
        let (smiles, truncated) = decode(&latent)?;
        let canon = parse_smiles(&smiles).ok().map(|m| canonical(&m));
        let reward = match (&canon, cfg.reward) {
            (Some(_), Reward::Lipinski) => lipinski_reward(&smiles, models.logp).ok(),
            _ => None,
        };
        let outcome = match &canon {
            None => Outcome::Invalid,
            Some(c) if models.training.contains(c) => Outcome::NonNovel,
            Some(c) if !seen.insert(c.clone()) => Outcome::Duplicate,
            Some(_) => {
                produced += 1;
                Outcome::Accepted
            }
        };
        records.push(AttemptRecord {
            attempt: t,
            smiles,
            canonical: canon,
            outcome,
            truncated,
            reward,
            climb_accepts,
            source,
            latent,
        });
    }
    let count = |o: Outcome| records.iter().filter(|r| r.outcome == o).count();
    let report = GenerationReport {
        class: cfg.class,
        component,
        requested: cfg.samples,
        attempts: records.len(),
        produced,
        invalid: count(Outcome::Invalid),
        duplicate: count(Outcome::Duplicate),
        non_novel: count(Outcome::NonNovel),
        truncated: records.iter().filter(|r| r.truncated).count(),
        shortfall: cfg.samples - produced,
        config: cfg.clone(),
        records,
    };
    if report.shortfall > 0 {
        log::warn!(
            "class {}: produced {} of {} molecules",
            cfg.class,
            produced,
            cfg.samples
        );
    }
    Ok(report)
}

/// Training embeddings whose most responsible component is `component`.
fn cluster_members(models: &Models<'_>, component: usize) -> Result<Vec<Vec<f64>>> {
    if models.embeddings.is_empty() {
        return Ok(Vec::new());
    }
    let hard = latent::e_step(models.gmm, models.embeddings)?.hard();
    Ok(models
        .embeddings
        .iter()
        .zip(hard)
        .filter(|(_, k)| *k == component)
        .map(|(e, _)| e.clone())
        .collect())
}
