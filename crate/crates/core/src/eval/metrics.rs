use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use vectorplus_chem::{
    canonical, fingerprint, parse_smiles, properties_with, tanimoto, Fingerprint, LogPTable,
};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `bins + 1` increasing edges; values outside go to the end bins.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn uniform(lo: f64, hi: f64, bins: usize) -> Self {
        let step = (hi - lo) / bins as f64;
        Histogram {
            edges: (0..=bins).map(|i| lo + step * i as f64).collect(),
            counts: vec![0; bins],
        }
    }

    pub fn add(&mut self, v: f64) {
        let bins = self.counts.len();
        let i = self.edges[1..bins].partition_point(|&e| e <= v);
        self.counts[i] += 1;
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub total: usize,
    pub valid: usize,
    pub unique: usize,
    pub novel: usize,
    pub validity: f64,
    /// Distinct canonical forms over valid strings.
    pub uniqueness: f64,
    /// Distinct molecules absent from training over distinct molecules.
    pub novelty: f64,
    /// Mean over distinct molecules of the best Tanimoto to any training
    /// molecule.
    pub mean_tanimoto: f64,
    pub max_tanimoto: f64,
    pub mw: Histogram,
    pub logp: Histogram,
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Canonical forms and fingerprints of a training set. Invalid entries are
/// an error.
pub struct Reference {
    pub canonical: BTreeSet<String>,
    pub fingerprints: Vec<Fingerprint>,
}

impl Reference {
    pub fn new<S: AsRef<str>>(training: &[S]) -> Result<Self> {
        if training.is_empty() {
            return Err(Error::InsufficientData { need: 1, have: 0 });
        }
        let mut canon = BTreeSet::new();
        let mut fps = Vec::with_capacity(training.len());
        for s in training {
            let s = s.as_ref();
            let mol = parse_smiles(s).map_err(|e| Error::InvalidSmiles(format!("{s}: {e}")))?;
            fps.push(fingerprint(
                &mol,
                vectorplus_chem::DEFAULT_RADIUS,
                vectorplus_chem::DEFAULT_WIDTH,
            ));
            canon.insert(canonical(&mol));
        }
        Ok(Reference {
            canonical: canon,
            fingerprints: fps,
        })
    }
}

/// Validity, uniqueness, novelty, similarity to training and property
/// histograms of the distinct valid molecules.
pub fn metrics<S: AsRef<str>, T: AsRef<str>>(
    generated: &[S],
    training: &[T],
) -> Result<MetricsSummary> {
    metrics_with(generated, &Reference::new(training)?, &LogPTable::default())
}

pub fn metrics_with<S: AsRef<str>>(
    generated: &[S],
    reference: &Reference,
    table: &LogPTable,
) -> Result<MetricsSummary> {
    let mut valid = 0;
    let mut distinct = BTreeSet::new();
    let mut mols = Vec::new();
    for s in generated {
        let Ok(mol) = parse_smiles(s.as_ref()) else {
            continue;
        };
        valid += 1;
        if distinct.insert(canonical(&mol)) {
            mols.push(mol);
        }
    }
    let novel = distinct
        .iter()
        .filter(|c| !reference.canonical.contains(*c))
        .count();
    let mut mw = Histogram::uniform(0.0, 1000.0, 20);
    let mut logp = Histogram::uniform(-5.0, 10.0, 15);
    let mut sims = Vec::with_capacity(mols.len());
    for mol in &mols {
        let fp = fingerprint(
            mol,
            vectorplus_chem::DEFAULT_RADIUS,
            vectorplus_chem::DEFAULT_WIDTH,
        );
        let mut best: f64 = 0.0;
        for t in &reference.fingerprints {
            best = best.max(tanimoto(&fp, t)?);
        }
        sims.push(best);
        if let Ok(p) = properties_with(mol, table) {
            mw.add(p.mw);
            logp.add(p.logp);
        }
    }
    let mean_tanimoto = if sims.is_empty() {
        0.0
    } else {
        sims.iter().sum::<f64>() / sims.len() as f64
    };
    let max_tanimoto = sims.iter().copied().fold(0.0, f64::max);
    Ok(MetricsSummary {
        total: generated.len(),
        valid,
        unique: distinct.len(),
        novel,
        validity: ratio(valid, generated.len()),
        uniqueness: ratio(distinct.len(), valid),
        novelty: ratio(novel, distinct.len()),
        mean_tanimoto,
        max_tanimoto,
        mw,
        logp,
    })
}

/// `property,lo,hi,count` rows for both histograms.
pub fn write_histograms(m: &MetricsSummary, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["property", "lo", "hi", "count"])?;
    for (name, h) in [("mw", &m.mw), ("logp", &m.logp)] {
        for (i, c) in h.counts.iter().enumerate() {
            w.write_record([
                name.to_string(),
                h.edges[i].to_string(),
                h.edges[i + 1].to_string(),
                c.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}
