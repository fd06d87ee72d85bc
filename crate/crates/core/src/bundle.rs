//! Versioned JSON file holding every trained part of a pipeline run.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::Provenance;
use crate::decoder::GruDecoder;
use crate::encoder::{EmbeddingSet, EncoderParams, Featurizer};
use crate::error::{Error, Result};
use crate::floats;
use crate::latent::{Alignment, GmmParams};
use crate::pipeline::PipelineConfig;

pub const BUNDLE_FORMAT: &str = "vectorplus-bundle";
pub const BUNDLE_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Traces {
    #[serde(with = "floats")]
    pub encoder_loss: Vec<f64>,
    /// Empty for per-class mixtures, which are not fitted by EM.
    #[serde(with = "floats")]
    pub gmm_log_likelihood: Vec<f64>,
    #[serde(with = "floats")]
    pub decoder_loss: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub format: String,
    pub version: u32,
    /// Configuration the bundle was trained with, output directory blanked.
    pub config: PipelineConfig,
    pub provenance: Provenance,
    pub class_names: Vec<String>,
    pub featurizer: Featurizer,
    pub encoder: EncoderParams,
    pub gmm: GmmParams,
    pub per_class_gmm: bool,
    pub alignment: Alignment,
    pub decoder: GruDecoder,
    /// Training molecules with their embeddings and labels.
    pub training: EmbeddingSet,
    pub traces: Traces,
}

fn mismatch(msg: String) -> Error {
    Error::ModelMismatch(msg)
}

impl ModelBundle {
    pub fn validate(&self) -> Result<()> {
        if self.format != BUNDLE_FORMAT {
            return Err(mismatch(format!(
                "not a model bundle (format {:?})",
                self.format
            )));
        }
        if self.version != BUNDLE_VERSION {
            return Err(mismatch(format!(
                "bundle version {} is not supported (expected {BUNDLE_VERSION})",
                self.version
            )));
        }
        self.gmm.validate()?;
        self.decoder.validate()?;
        let d = self.encoder.d;
        let checks = [
            ("featurizer width", self.featurizer.dim(), self.encoder.d_in),
            ("mixture dimension", self.gmm.dim(), d),
            ("decoder latent dimension", self.decoder.shape.latent, d),
            ("mixture components", self.gmm.k(), self.class_names.len()),
            (
                "alignment size",
                self.alignment.gamma.len(),
                self.class_names.len(),
            ),
            (
                "training labels",
                self.training.labels.len(),
                self.training.len(),
            ),
            (
                "training molecules",
                self.training.smiles.len(),
                self.training.len(),
            ),
        ];
        for (what, found, expected) in checks {
            if found != expected {
                return Err(mismatch(format!("{what} is {found}, expected {expected}")));
            }
        }
        if let Some(v) = self.training.vectors.iter().find(|v| v.len() != d) {
            return Err(mismatch(format!(
                "training embedding of dimension {} in a {d}-dimensional model",
                v.len()
            )));
        }
        let classes = self.class_names.len();
        if let Some(l) = self
            .training
            .labels
            .iter()
            .find(|&&l| l == 0 || l > classes)
        {
            return Err(mismatch(format!(
                "training label {l} outside 1..={classes}"
            )));
        }
        Ok(())
    }

    /// Rejects a configuration whose model shapes differ from the bundle's.
    pub fn check_config(&self, cfg: &PipelineConfig) -> Result<()> {
        let dec = &self.decoder.shape;
        let checks = [
            ("encoder.dim", cfg.encoder.dim, self.encoder.d),
            ("encoder.hidden", cfg.encoder.hidden, self.encoder.d_h),
            (
                "featurizer.fp_width",
                cfg.featurizer.fp_width,
                self.featurizer.fp_width,
            ),
            ("decoder.hidden", cfg.decoder.hidden, dec.hidden),
            ("decoder.layers", cfg.decoder.layers, dec.layers),
            ("decoder.embed", cfg.decoder.embed, dec.embed),
        ];
        for (what, config, bundle) in checks {
            if config != bundle {
                return Err(mismatch(format!(
                    "config sets {what} = {config}, bundle was trained with {bundle}"
                )));
            }
        }
        if cfg.featurizer.fp_radius != self.featurizer.fp_radius {
            return Err(mismatch(format!(
                "config sets featurizer.fp_radius = {}, bundle was trained with {}",
                cfg.featurizer.fp_radius, self.featurizer.fp_radius
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let b: ModelBundle = serde_json::from_str(text)?;
        b.validate()?;
        Ok(b)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        ModelBundle::from_json(&text)
    }
}
