//! Molecule encoder: a fingerprint + descriptor featurizer followed by a
//! trainable two-layer projection head with ELU, fitted with the pairwise
//! contrastive loss.
//!
//! The featurizer stands in for a pretrained language-model encoder. It is
//! deterministic and has no parameters; only the projection head learns.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use vectorplus_chem::{fingerprint, parse_smiles, properties_with, LogPTable, Molecule};

use crate::error::{Error, Result};
use crate::floats;
use crate::linalg::{matvec, matvec_t_add, outer_add, Matrix};
use crate::optim::{Adam, AdamConfig};
use crate::rng::{seeded, Rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Featurizer {
    pub fp_width: usize,
    pub fp_radius: u32,
    pub logp: LogPTable,
}

impl Default for Featurizer {
    fn default() -> Self {
        Featurizer {
            fp_width: 2048,
            fp_radius: 2,
            logp: LogPTable::default(),
        }
    }
}

impl Featurizer {
    pub fn dim(&self) -> usize {
        self.fp_width + 4
    }

    /// Fingerprint bits followed by mw/500, logp/5, hbd/5, hba/10.
    pub fn featurize(&self, mol: &Molecule) -> Result<Vec<f64>> {
        let fp = fingerprint(mol, self.fp_radius, self.fp_width);
        let mut x = vec![0.0; self.dim()];
        for bit in fp.ones() {
            x[bit] = 1.0;
        }
        let p = properties_with(mol, &self.logp)?;
        let w = self.fp_width;
        x[w] = p.mw / 500.0;
        x[w + 1] = p.logp / 5.0;
        x[w + 2] = f64::from(p.hbd) / 5.0;
        x[w + 3] = f64::from(p.hba) / 10.0;
        Ok(x)
    }

    pub fn featurize_smiles(&self, smiles: &str) -> Result<Vec<f64>> {
        self.featurize(&parse_smiles(smiles)?)
    }

    pub fn featurize_all<S: AsRef<str>>(&self, smiles: &[S]) -> Result<Vec<Vec<f64>>> {
        smiles
            .iter()
            .map(|s| self.featurize_smiles(s.as_ref()))
            .collect()
    }
}

/// Projection head `z = W2·ELU(W1·x + b1) + b2`. Weights are stored
/// output-major (`w1` is d_h × d_in).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderParams {
    pub d_in: usize,
    pub d_h: usize,
    pub d: usize,
    pub w1: Matrix,
    #[serde(with = "floats")]
    pub b1: Vec<f64>,
    pub w2: Matrix,
    #[serde(with = "floats")]
    pub b2: Vec<f64>,
    /// L2-normalize the output.
    pub normalize: bool,
}

impl EncoderParams {
    pub fn zeros(d_in: usize, d_h: usize, d: usize) -> Self {
        EncoderParams {
            d_in,
            d_h,
            d,
            w1: Matrix::zeros(d_h, d_in),
            b1: vec![0.0; d_h],
            w2: Matrix::zeros(d, d_h),
            b2: vec![0.0; d],
            normalize: false,
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init(d_in: usize, d_h: usize, d: usize, rng: &mut Rng) -> Self {
        let mut p = EncoderParams::zeros(d_in, d_h, d);
        glorot(&mut p.w1, rng);
        glorot(&mut p.w2, rng);
        p
    }

    fn tensors_mut(&mut self) -> [&mut [f64]; 4] {
        [
            &mut self.w1.data,
            &mut self.b1,
            &mut self.w2.data,
            &mut self.b2,
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.w1.is_finite()
            && self.w2.is_finite()
            && self.b1.iter().chain(&self.b2).all(|v| v.is_finite())
    }
}

fn glorot(m: &mut Matrix, rng: &mut Rng) {
    let a = (6.0 / (m.rows + m.cols) as f64).sqrt();
    for v in &mut m.data {
        *v = rng.random_range(-a..=a);
    }
}

#[inline]
pub fn elu(u: f64) -> f64 {
    if u > 0.0 {
        u
    } else {
        u.exp() - 1.0
    }
}

#[inline]
fn elu_grad(u: f64) -> f64 {
    if u > 0.0 {
        1.0
    } else {
        u.exp()
    }
}

struct Forward {
    a1: Vec<f64>,
    h: Vec<f64>,
    raw: Vec<f64>,
    z: Vec<f64>,
}

fn forward(p: &EncoderParams, x: &[f64]) -> Forward {
    let mut a1 = p.b1.clone();
    crate::linalg::matvec_add(&p.w1.data, p.d_in, x, &mut a1);
    let h: Vec<f64> = a1.iter().map(|&u| elu(u)).collect();
    let mut raw = vec![0.0; p.d];
    matvec(&p.w2.data, p.d, p.d_h, &h, &mut raw);
    for (r, b) in raw.iter_mut().zip(&p.b2) {
        *r += b;
    }
    let z = if p.normalize {
        l2_normalize(&raw)
    } else {
        raw.clone()
    };
    Forward { a1, h, raw, z }
}

fn l2_normalize(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n == 0.0 {
        v.to_vec()
    } else {
        v.iter().map(|x| x / n).collect()
    }
}

pub fn embed(p: &EncoderParams, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != p.d_in {
        return Err(Error::DimensionMismatch {
            expected: p.d_in,
            found: x.len(),
        });
    }
    Ok(forward(p, x).z)
}

pub fn embed_all(p: &EncoderParams, xs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    xs.iter().map(|x| embed(p, x)).collect()
}

/// Accumulates parameter gradients for one sample given dL/dz.
fn backward(p: &EncoderParams, x: &[f64], f: &Forward, dz: &[f64], g: &mut EncoderParams) {
    let draw: Vec<f64> = if p.normalize {
        let n = f.raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n == 0.0 {
            dz.to_vec()
        } else {
            let proj: f64 = f.z.iter().zip(dz).map(|(a, b)| a * b).sum();
            dz.iter()
                .zip(&f.z)
                .map(|(g, z)| (g - z * proj) / n)
                .collect()
        }
    } else {
        dz.to_vec()
    };
    outer_add(&mut g.w2.data, p.d_h, &draw, &f.h);
    for (gb, d) in g.b2.iter_mut().zip(&draw) {
        *gb += d;
    }
    let mut dh = vec![0.0; p.d_h];
    matvec_t_add(&p.w2.data, p.d_h, &draw, &mut dh);
    let da1: Vec<f64> = dh
        .iter()
        .zip(&f.a1)
        .map(|(d, &a)| d * elu_grad(a))
        .collect();
    outer_add(&mut g.w1.data, p.d_in, &da1, x);
    for (gb, d) in g.b1.iter_mut().zip(&da1) {
        *gb += d;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContrastiveConfig {
    pub margin: f64,
    /// Norm order, 1 or 2.
    pub p: u32,
    pub batch_size: usize,
    pub epochs: usize,
    pub lr: f64,
    pub hidden: usize,
    pub dim: usize,
    pub normalize: bool,
    pub class_balanced: bool,
    pub seed: u64,
}

impl Default for ContrastiveConfig {
    fn default() -> Self {
        ContrastiveConfig {
            margin: 1.0,
            p: 1,
            batch_size: 32,
            epochs: 100,
            lr: 1e-3,
            hidden: 64,
            dim: 64,
            normalize: false,
            class_balanced: false,
            seed: 0,
        }
    }
}

impl ContrastiveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.margin > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "margin must be positive, got {}",
                self.margin
            )));
        }
        if self.p != 1 && self.p != 2 {
            return Err(Error::InvalidConfig(format!(
                "norm order must be 1 or 2, got {}",
                self.p
            )));
        }
        if self.batch_size < 2 {
            return Err(Error::BatchTooSmall(self.batch_size));
        }
        if !(self.lr > 0.0) || self.hidden == 0 || self.dim == 0 {
            return Err(Error::InvalidConfig(
                "encoder lr and dimensions must be positive".into(),
            ));
        }
        Ok(())
    }
}

fn norm(delta: &[f64], p: u32) -> f64 {
    if p == 1 {
        delta.iter().map(|v| v.abs()).sum()
    } else {
        delta.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

fn check_batch(z: &[Vec<f64>], labels: &[usize]) -> Result<()> {
    if z.len() < 2 {
        return Err(Error::BatchTooSmall(z.len()));
    }
    if labels.len() != z.len() {
        return Err(Error::LengthMismatch(z.len(), labels.len()));
    }
    Ok(())
}

/// Mean over ordered pairs i ≠ j of `y‖Δ‖² + (1−y)·max(0, m − ‖Δ‖)²`.
pub fn contrastive_loss(z: &[Vec<f64>], labels: &[usize], margin: f64, p: u32) -> Result<f64> {
    check_batch(z, labels)?;
    let b = z.len();
    let mut total = 0.0;
    let mut delta = vec![0.0; z[0].len()];
    for i in 0..b {
        for j in 0..b {
            if i == j {
                continue;
            }
            for (c, d) in delta.iter_mut().enumerate() {
                *d = z[i][c] - z[j][c];
            }
            let dist = norm(&delta, p);
            total += if labels[i] == labels[j] {
                dist * dist
            } else {
                (margin - dist).max(0.0).powi(2)
            };
        }
    }
    Ok(total / (b * (b - 1)) as f64)
}

/// Loss and its gradient with respect to every embedding. The L1
/// subgradient at a zero coordinate and the hinge subgradient at the margin
/// are both taken as 0.
pub fn contrastive_grad(
    z: &[Vec<f64>],
    labels: &[usize],
    margin: f64,
    p: u32,
) -> Result<(f64, Vec<Vec<f64>>)> {
    check_batch(z, labels)?;
    let b = z.len();
    let d = z[0].len();
    let scale = 1.0 / (b * (b - 1)) as f64;
    let mut grads = vec![vec![0.0; d]; b];
    let mut total = 0.0;
    let mut delta = vec![0.0; d];
    for i in 0..b {
        for j in 0..b {
            if i == j {
                continue;
            }
            for (c, v) in delta.iter_mut().enumerate() {
                *v = z[i][c] - z[j][c];
            }
            let dist = norm(&delta, p);
            // coefficient on ∂dist/∂Δ, or on Δ directly for the squared L2 case
            let coef = if labels[i] == labels[j] {
                total += dist * dist;
                2.0 * dist
            } else if dist < margin {
                total += (margin - dist).powi(2);
                -2.0 * (margin - dist)
            } else {
                0.0
            };
            if coef == 0.0 {
                continue;
            }
            for c in 0..d {
                let ddist = if p == 1 {
                    sign(delta[c])
                } else if dist > 0.0 {
                    delta[c] / dist
                } else {
                    0.0
                };
                let g = scale * coef * ddist;
                grads[i][c] += g;
                grads[j][c] -= g;
            }
        }
    }
    Ok((total * scale, grads))
}

#[inline]
fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Loss of a batch of inputs and the gradient with respect to every
/// projection-head parameter.
pub fn loss_and_param_grad(
    params: &EncoderParams,
    xs: &[&[f64]],
    labels: &[usize],
    margin: f64,
    p: u32,
) -> Result<(f64, EncoderParams)> {
    let fw: Vec<Forward> = xs.iter().map(|x| forward(params, x)).collect();
    let z: Vec<Vec<f64>> = fw.iter().map(|f| f.z.clone()).collect();
    let (loss, dz) = contrastive_grad(&z, labels, margin, p)?;
    let mut g = EncoderParams::zeros(params.d_in, params.d_h, params.d);
    for ((x, f), d) in xs.iter().zip(&fw).zip(&dz) {
        backward(params, x, f, d, &mut g);
    }
    Ok((loss, g))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingSet {
    #[serde(with = "floats::nested")]
    pub vectors: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub smiles: Vec<String>,
}

impl EmbeddingSet {
    pub fn dim(&self) -> usize {
        self.vectors.first().map_or(0, Vec::len)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// One row per molecule: smiles, label, z_1..z_d.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["smiles".to_string(), "label".to_string()];
        header.extend((1..=self.dim()).map(|i| format!("z_{i}")));
        w.write_record(&header)?;
        for ((s, l), v) in self.smiles.iter().zip(&self.labels).zip(&self.vectors) {
            let mut row = vec![s.clone(), l.to_string()];
            row.extend(v.iter().map(|x| format!("{x:.16e}")));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone)]
pub struct TrainedEncoder {
    pub params: EncoderParams,
    /// Mean batch loss per epoch.
    pub loss_trace: Vec<f64>,
}

/// Minibatch Adam on the contrastive loss.
pub fn train_encoder(
    features: &[Vec<f64>],
    labels: &[usize],
    cfg: &ContrastiveConfig,
) -> Result<TrainedEncoder> {
    cfg.validate()?;
    if features.len() < 2 {
        return Err(Error::BatchTooSmall(features.len()));
    }
    if features.len() != labels.len() {
        return Err(Error::LengthMismatch(features.len(), labels.len()));
    }
    let classes: std::collections::BTreeSet<usize> = labels.iter().copied().collect();
    if classes.len() < 2 {
        return Err(Error::InvalidClassCount(classes.len()));
    }
    let d_in = features[0].len();
    let mut rng = seeded(cfg.seed);
    let mut params = EncoderParams::init(d_in, cfg.hidden, cfg.dim, &mut rng);
    params.normalize = cfg.normalize;
    let adam_cfg = AdamConfig {
        lr: cfg.lr,
        ..AdamConfig::default()
    };
    let mut opt: Vec<Adam> = params
        .tensors_mut()
        .iter()
        .map(|t| Adam::new(t.len(), adam_cfg))
        .collect();
    let mut trace = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let batches = if cfg.class_balanced {
            balanced_batches(labels, &classes, cfg.batch_size, &mut rng)
        } else {
            random_batches(features.len(), cfg.batch_size, &mut rng)
        };
        let mut sum = 0.0;
        for batch in &batches {
            let xs: Vec<&[f64]> = batch.iter().map(|&i| features[i].as_slice()).collect();
            let ys: Vec<usize> = batch.iter().map(|&i| labels[i]).collect();
            let (loss, mut g) = loss_and_param_grad(&params, &xs, &ys, cfg.margin, cfg.p)?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss {
                    stage: "encoder",
                    epoch,
                });
            }
            sum += loss;
            for ((t, gt), o) in params
                .tensors_mut()
                .into_iter()
                .zip(g.tensors_mut())
                .zip(&mut opt)
            {
                o.step(t, gt);
            }
        }
        let mean = sum / batches.len() as f64;
        log::debug!("encoder epoch {epoch}: loss {mean:.6}");
        trace.push(mean);
    }
    if !params.is_finite() {
        return Err(Error::NonFiniteLoss {
            stage: "encoder",
            epoch: cfg.epochs,
        });
    }
    Ok(TrainedEncoder {
        params,
        loss_trace: trace,
    })
}

fn random_batches(n: usize, size: usize, rng: &mut Rng) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let mut batches: Vec<Vec<usize>> = idx.chunks(size).map(<[usize]>::to_vec).collect();
    if batches.len() > 1 && batches.last().is_some_and(|b| b.len() < 2) {
        let last = batches.pop().unwrap();
        batches.last_mut().unwrap().extend(last);
    }
    batches
}

/// Equal draws from every class per batch, cycling through a shuffled
/// queue of each class.
fn balanced_batches(
    labels: &[usize],
    classes: &std::collections::BTreeSet<usize>,
    size: usize,
    rng: &mut Rng,
) -> Vec<Vec<usize>> {
    let per_class = (size / classes.len()).max(1);
    let mut queues: Vec<Vec<usize>> = classes
        .iter()
        .map(|&c| {
            let mut q: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
            q.shuffle(rng);
            q
        })
        .collect();
    let mut cursors = vec![0usize; queues.len()];
    let count = labels.len().div_ceil(per_class * classes.len());
    (0..count)
        .map(|_| {
            let mut batch = Vec::with_capacity(per_class * queues.len());
            for (q, cur) in queues.iter_mut().zip(&mut cursors) {
                for _ in 0..per_class {
                    if *cur == q.len() {
                        q.shuffle(rng);
                        *cur = 0;
                    }
                    batch.push(q[*cur]);
                    *cur += 1;
                }
            }
            batch
        })
        .collect()
}
