//! Character-level GRU decoder from latent vectors to SMILES.
//!
//! The latent enters only through the initial hidden state
//! `tanh(P z + b)`. Gates follow the combined layout
//! `a_w = W x + b_w`, `a_u = U h + b_u` with rows ordered (reset, update,
//! candidate):
//!
//! ```text
//! r  = σ(a_w[r] + a_u[r])
//! u  = σ(a_w[u] + a_u[u])
//! n  = tanh(a_w[n] + r ⊙ a_u[n])
//! h' = (1 − u) ⊙ n + u ⊙ h
//! ```

use std::collections::BTreeMap;
use std::ops::Range;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::floats;
use crate::linalg::{matvec_add, matvec_t_add, outer_add};
use crate::optim::{clip_global_norm, Adam, AdamConfig};
use crate::rng::{seeded, Rng};

pub const PAD: usize = 0;
pub const BOS: usize = 1;
pub const EOS: usize = 2;
const SPECIALS: [&str; 3] = ["<pad>", "<bos>", "<eos>"];

/// Splits SMILES into decoder tokens: single characters, except `Cl`, `Br`
/// and two-digit ring labels `%nn`.
pub fn split_tokens(smiles: &str) -> Vec<&str> {
    let b = smiles.as_bytes();
    let mut out = Vec::with_capacity(b.len());
    let mut i = 0;
    while i < b.len() {
        let len = match b[i] {
            b'C' if b.get(i + 1) == Some(&b'l') => 2,
            b'B' if b.get(i + 1) == Some(&b'r') => 2,
            b'%' if b.len() >= i + 3 && b[i + 1].is_ascii_digit() && b[i + 2].is_ascii_digit() => 3,
            c if c.is_ascii() => 1,
            _ => smiles[i..].chars().next().map_or(1, char::len_utf8),
        };
        out.push(&smiles[i..i + len]);
        i += len;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: BTreeMap<String, usize>,
}

impl TryFrom<Vec<String>> for Vocabulary {
    type Error = String;

    fn try_from(tokens: Vec<String>) -> std::result::Result<Self, String> {
        if tokens.len() < SPECIALS.len() || tokens[..3] != SPECIALS {
            return Err(format!("vocabulary must start with {SPECIALS:?}"));
        }
        let index: BTreeMap<String, usize> = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        if index.len() != tokens.len() {
            return Err("vocabulary has duplicate tokens".into());
        }
        Ok(Vocabulary { tokens, index })
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.tokens
    }
}

impl Vocabulary {
    /// Specials followed by every corpus token in sorted order.
    pub fn build<S: AsRef<str>>(corpus: &[S]) -> Self {
        let mut seen = std::collections::BTreeSet::new();
        for s in corpus {
            seen.extend(split_tokens(s.as_ref()).into_iter().map(str::to_string));
        }
        let tokens: Vec<String> = SPECIALS.iter().map(|s| s.to_string()).chain(seen).collect();
        Vocabulary::try_from(tokens).expect("corpus tokens never collide with specials")
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn token(&self, id: usize) -> &str {
        &self.tokens[id]
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn encode(&self, smiles: &str) -> Result<Vec<usize>> {
        split_tokens(smiles)
            .into_iter()
            .map(|t| self.id(t).ok_or_else(|| Error::UnknownToken(t.to_string())))
            .collect()
    }

    /// Concatenates tokens, skipping specials.
    pub fn decode(&self, ids: &[usize]) -> String {
        ids.iter()
            .filter(|&&i| i > EOS)
            .map(|&i| self.tokens[i].as_str())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecoderShape {
    pub latent: usize,
    pub vocab: usize,
    pub embed: usize,
    pub hidden: usize,
    pub layers: usize,
}

#[derive(Debug, Clone)]
struct LayerSlots {
    input: usize,
    w: Range<usize>,
    u: Range<usize>,
    bw: Range<usize>,
    bu: Range<usize>,
}

#[derive(Debug, Clone)]
struct Layout {
    proj: Range<usize>,
    proj_b: Range<usize>,
    embed: Range<usize>,
    layers: Vec<LayerSlots>,
    out: Range<usize>,
    out_b: Range<usize>,
    total: usize,
}

impl Layout {
    fn new(s: &DecoderShape) -> Layout {
        let mut at = 0;
        let mut take = |n: usize| {
            let r = at..at + n;
            at += n;
            r
        };
        let h = s.hidden;
        let proj = take(s.layers * h * s.latent);
        let proj_b = take(s.layers * h);
        let embed = take(s.vocab * s.embed);
        let layers = (0..s.layers)
            .map(|l| {
                let input = if l == 0 { s.embed } else { h };
                LayerSlots {
                    input,
                    w: take(3 * h * input),
                    u: take(3 * h * h),
                    bw: take(3 * h),
                    bu: take(3 * h),
                }
            })
            .collect();
        let out = take(s.vocab * h);
        let out_b = take(s.vocab);
        Layout {
            proj,
            proj_b,
            embed,
            layers,
            out,
            out_b,
            total: at,
        }
    }
}

/// Decoder parameters in one flat vector plus the vocabulary they index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GruDecoder {
    pub shape: DecoderShape,
    pub dropout: f64,
    pub vocab: Vocabulary,
    #[serde(with = "floats")]
    pub theta: Vec<f64>,
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl GruDecoder {
    pub fn zeros(
        vocab: Vocabulary,
        latent: usize,
        embed: usize,
        hidden: usize,
        layers: usize,
        dropout: f64,
    ) -> Self {
        let shape = DecoderShape {
            latent,
            vocab: vocab.len(),
            embed,
            hidden,
            layers,
        };
        let total = Layout::new(&shape).total;
        GruDecoder {
            shape,
            dropout,
            vocab,
            theta: vec![0.0; total],
        }
    }

    /// GRU and output weights uniform in ±1/√hidden, unit-variance
    /// embeddings, Glorot-uniform latent projection, zero projection bias.
    pub fn init(
        vocab: Vocabulary,
        latent: usize,
        embed: usize,
        hidden: usize,
        layers: usize,
        dropout: f64,
        rng: &mut Rng,
    ) -> Self {
        let mut dec = GruDecoder::zeros(vocab, latent, embed, hidden, layers, dropout);
        let lay = dec.layout();
        let k = 1.0 / (hidden as f64).sqrt();
        let g = (6.0 / (latent + layers * hidden) as f64).sqrt();
        let e = 3f64.sqrt();
        for (i, v) in dec.theta.iter_mut().enumerate() {
            *v = if lay.proj.contains(&i) {
                rng.random_range(-g..=g)
            } else if lay.proj_b.contains(&i) {
                0.0
            } else if lay.embed.contains(&i) {
                rng.random_range(-e..=e)
            } else {
                rng.random_range(-k..=k)
            };
        }
        dec
    }

    fn layout(&self) -> Layout {
        Layout::new(&self.shape)
    }

    pub fn param_count(&self) -> usize {
        self.theta.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.shape.vocab != self.vocab.len() {
            return Err(Error::ModelMismatch(format!(
                "decoder expects {} tokens, vocabulary has {}",
                self.shape.vocab,
                self.vocab.len()
            )));
        }
        let want = self.layout().total;
        if self.theta.len() != want {
            return Err(Error::ModelMismatch(format!(
                "decoder has {} parameters, shape needs {want}",
                self.theta.len()
            )));
        }
        Ok(())
    }
}

/// `tanh(P z + b)` split into one hidden vector per layer.
pub fn init_hidden(dec: &GruDecoder, z: &[f64]) -> Result<Vec<Vec<f64>>> {
    let s = &dec.shape;
    if z.len() != s.latent {
        return Err(Error::DimensionMismatch {
            expected: s.latent,
            found: z.len(),
        });
    }
    let lay = dec.layout();
    let mut pre = dec.theta[lay.proj_b.clone()].to_vec();
    matvec_add(&dec.theta[lay.proj.clone()], s.latent, z, &mut pre);
    Ok(pre
        .chunks(s.hidden)
        .map(|c| c.iter().map(|v| v.tanh()).collect())
        .collect())
}

struct CellCache {
    input: Vec<f64>,
    h_prev: Vec<f64>,
    r: Vec<f64>,
    u: Vec<f64>,
    n: Vec<f64>,
    au_n: Vec<f64>,
    /// dropout mask applied to the input (already scaled), layers > 0 only
    mask: Option<Vec<f64>>,
}

fn cell(
    theta: &[f64],
    slots: &LayerSlots,
    h: usize,
    input: &[f64],
    h_prev: &[f64],
) -> (Vec<f64>, CellCache) {
    let mut aw = theta[slots.bw.clone()].to_vec();
    matvec_add(&theta[slots.w.clone()], slots.input, input, &mut aw);
    let mut au = theta[slots.bu.clone()].to_vec();
    matvec_add(&theta[slots.u.clone()], h, h_prev, &mut au);
    let mut r = vec![0.0; h];
    let mut u = vec![0.0; h];
    let mut n = vec![0.0; h];
    let mut out = vec![0.0; h];
    for j in 0..h {
        r[j] = sigmoid(aw[j] + au[j]);
        u[j] = sigmoid(aw[h + j] + au[h + j]);
        n[j] = (aw[2 * h + j] + r[j] * au[2 * h + j]).tanh();
        out[j] = (1.0 - u[j]) * n[j] + u[j] * h_prev[j];
    }
    let cache = CellCache {
        input: input.to_vec(),
        h_prev: h_prev.to_vec(),
        r,
        u,
        n,
        au_n: au[2 * h..].to_vec(),
        mask: None,
    };
    (out, cache)
}

fn logits(dec: &GruDecoder, lay: &Layout, top: &[f64]) -> Vec<f64> {
    let mut l = dec.theta[lay.out_b.clone()].to_vec();
    matvec_add(&dec.theta[lay.out.clone()], dec.shape.hidden, top, &mut l);
    l
}

/// Runs every layer for one input token. With `dropout`, inputs to layers
/// above the first are masked (inverted dropout) and caches are returned.
fn advance(
    dec: &GruDecoder,
    lay: &Layout,
    hidden: &mut [Vec<f64>],
    token: usize,
    mut dropout: Option<&mut Rng>,
    keep_cache: bool,
) -> (Vec<f64>, Vec<CellCache>) {
    let s = &dec.shape;
    let e0 = lay.embed.start + token * s.embed;
    let mut input = dec.theta[e0..e0 + s.embed].to_vec();
    let mut caches = Vec::new();
    for (l, slots) in lay.layers.iter().enumerate() {
        let mut mask = None;
        if l > 0 {
            if let Some(rng) = dropout.as_deref_mut() {
                if dec.dropout > 0.0 {
                    let keep = 1.0 - dec.dropout;
                    let m: Vec<f64> = (0..s.hidden)
                        .map(|_| {
                            if rng.random::<f64>() < keep {
                                1.0 / keep
                            } else {
                                0.0
                            }
                        })
                        .collect();
                    input.iter_mut().zip(&m).for_each(|(x, k)| *x *= k);
                    mask = Some(m);
                }
            }
        }
        let (out, mut cache) = cell(&dec.theta, slots, s.hidden, &input, &hidden[l]);
        hidden[l].copy_from_slice(&out);
        if keep_cache {
            cache.mask = mask;
            caches.push(cache);
        }
        input = out;
    }
    (logits(dec, lay, &input), caches)
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

/// One inference step: next-token distribution and the updated hidden state.
pub fn decode_step(
    dec: &GruDecoder,
    hidden: &[Vec<f64>],
    token: usize,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    if token >= dec.vocab.len() {
        return Err(Error::UnknownToken(format!("#{token}")));
    }
    let lay = dec.layout();
    let mut h = hidden.to_vec();
    let (l, _) = advance(dec, &lay, &mut h, token, None, false);
    Ok((softmax(&l), h))
}

/// Teacher-forced cross-entropy summed over the `ids.len() + 1` predictions;
/// gradients scaled by `scale` are added into `grad`.
fn sequence_grad(
    dec: &GruDecoder,
    lay: &Layout,
    z: &[f64],
    ids: &[usize],
    dropout: Option<&mut Rng>,
    grad: &mut [f64],
    scale: f64,
) -> Result<f64> {
    let s = dec.shape;
    let h = s.hidden;
    let h0 = init_hidden(dec, z)?;
    let mut hidden = h0.clone();
    let inputs: Vec<usize> = std::iter::once(BOS).chain(ids.iter().copied()).collect();
    let targets: Vec<usize> = ids.iter().copied().chain(std::iter::once(EOS)).collect();
    let mut caches = Vec::with_capacity(inputs.len());
    let mut tops = Vec::with_capacity(inputs.len());
    let mut dlogits = Vec::with_capacity(inputs.len());
    let mut loss = 0.0;
    let mut rng = dropout;
    for (&x, &y) in inputs.iter().zip(&targets) {
        let (l, cache) = advance(dec, lay, &mut hidden, x, rng.as_deref_mut(), true);
        let mut p = softmax(&l);
        loss -= p[y].max(f64::MIN_POSITIVE).ln();
        p[y] -= 1.0;
        p.iter_mut().for_each(|v| *v *= scale);
        dlogits.push(p);
        tops.push(hidden[s.layers - 1].clone());
        caches.push(cache);
    }

    let mut carry = vec![vec![0.0; h]; s.layers];
    for t in (0..inputs.len()).rev() {
        let dl = &dlogits[t];
        outer_add(&mut grad[lay.out.clone()], h, dl, &tops[t]);
        for (g, d) in grad[lay.out_b.clone()].iter_mut().zip(dl) {
            *g += d;
        }
        let mut dh = std::mem::take(&mut carry);
        matvec_t_add(&dec.theta[lay.out.clone()], h, dl, &mut dh[s.layers - 1]);
        let mut next_carry = vec![vec![0.0; h]; s.layers];
        for l in (0..s.layers).rev() {
            let c = &caches[t][l];
            let slots = &lay.layers[l];
            let g = &dh[l];
            let mut daw = vec![0.0; 3 * h];
            let mut dau = vec![0.0; 3 * h];
            let dprev = &mut next_carry[l];
            for j in 0..h {
                let dn = g[j] * (1.0 - c.u[j]);
                let du = g[j] * (c.h_prev[j] - c.n[j]);
                dprev[j] = g[j] * c.u[j];
                let dan = dn * (1.0 - c.n[j] * c.n[j]);
                let dar = dan * c.au_n[j] * c.r[j] * (1.0 - c.r[j]);
                let dau_ = du * c.u[j] * (1.0 - c.u[j]);
                daw[j] = dar;
                daw[h + j] = dau_;
                daw[2 * h + j] = dan;
                dau[j] = dar;
                dau[h + j] = dau_;
                dau[2 * h + j] = dan * c.r[j];
            }
            outer_add(&mut grad[slots.w.clone()], slots.input, &daw, &c.input);
            for (gb, d) in grad[slots.bw.clone()].iter_mut().zip(&daw) {
                *gb += d;
            }
            outer_add(&mut grad[slots.u.clone()], h, &dau, &c.h_prev);
            for (gb, d) in grad[slots.bu.clone()].iter_mut().zip(&dau) {
                *gb += d;
            }
            matvec_t_add(&dec.theta[slots.u.clone()], h, &dau, dprev);
            let mut dinput = vec![0.0; slots.input];
            matvec_t_add(&dec.theta[slots.w.clone()], slots.input, &daw, &mut dinput);
            if l > 0 {
                if let Some(m) = &c.mask {
                    dinput.iter_mut().zip(m).for_each(|(d, k)| *d *= k);
                }
                for (a, b) in dh[l - 1].iter_mut().zip(&dinput) {
                    *a += b;
                }
            } else {
                let e0 = lay.embed.start + inputs[t] * s.embed;
                for (a, b) in grad[e0..e0 + s.embed].iter_mut().zip(&dinput) {
                    *a += b;
                }
            }
        }
        carry = next_carry;
    }

    let dpre: Vec<f64> = carry
        .iter()
        .zip(&h0)
        .flat_map(|(d, h0)| d.iter().zip(h0).map(|(g, v)| g * (1.0 - v * v)))
        .collect();
    outer_add(&mut grad[lay.proj.clone()], s.latent, &dpre, z);
    for (g, d) in grad[lay.proj_b.clone()].iter_mut().zip(&dpre) {
        *g += d;
    }
    Ok(loss)
}

/// Mean per-token teacher-forced cross-entropy without dropout.
pub fn teacher_forced_loss(dec: &GruDecoder, z: &[f64], smiles: &str) -> Result<f64> {
    let ids = dec.vocab.encode(smiles)?;
    let lay = dec.layout();
    let mut hidden = init_hidden(dec, z)?;
    let mut loss = 0.0;
    let inputs = std::iter::once(BOS).chain(ids.iter().copied());
    let targets = ids.iter().copied().chain(std::iter::once(EOS));
    for (x, y) in inputs.zip(targets) {
        let (l, _) = advance(dec, &lay, &mut hidden, x, None, false);
        loss -= softmax(&l)[y].max(f64::MIN_POSITIVE).ln();
    }
    Ok(loss / (ids.len() + 1) as f64)
}

/// Gradient of the summed sequence loss with respect to every parameter,
/// without dropout. Exposed for gradient checking.
pub fn loss_gradient(dec: &GruDecoder, z: &[f64], smiles: &str) -> Result<(f64, Vec<f64>)> {
    let ids = dec.vocab.encode(smiles)?;
    let lay = dec.layout();
    let mut grad = vec![0.0; dec.theta.len()];
    let loss = sequence_grad(dec, &lay, z, &ids, None, &mut grad, 1.0)?;
    Ok((loss, grad))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecoderConfig {
    pub embed: usize,
    pub hidden: usize,
    pub layers: usize,
    pub dropout: f64,
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub clip_norm: f64,
    pub seed: u64,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        DecoderConfig {
            embed: 32,
            hidden: 128,
            layers: 3,
            dropout: 0.2,
            epochs: 200,
            lr: 1e-3,
            batch_size: 16,
            clip_norm: 5.0,
            seed: 0,
        }
    }
}

impl DecoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 || self.layers == 0 || self.embed == 0 || self.batch_size == 0 {
            return Err(Error::InvalidConfig(
                "decoder dimensions and batch size must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidConfig(format!(
                "dropout must be in [0, 1), got {}",
                self.dropout
            )));
        }
        if !(self.lr > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "decoder lr must be positive, got {}",
                self.lr
            )));
        }
        Ok(())
    }

    pub fn build(&self, vocab: Vocabulary, latent: usize) -> GruDecoder {
        let mut rng = seeded(self.seed);
        GruDecoder::init(
            vocab,
            latent,
            self.embed,
            self.hidden,
            self.layers,
            self.dropout,
            &mut rng,
        )
    }
}

#[derive(Debug, Clone)]
pub struct TrainedDecoder {
    pub decoder: GruDecoder,
    /// Mean per-token training loss of every epoch (with dropout active).
    pub loss_trace: Vec<f64>,
}

/// Teacher-forced minibatch Adam. Gradients are averaged over the tokens of
/// each batch and clipped to `clip_norm`.
pub fn train_decoder(
    mut dec: GruDecoder,
    latents: &[Vec<f64>],
    smiles: &[String],
    cfg: &DecoderConfig,
) -> Result<TrainedDecoder> {
    cfg.validate()?;
    dec.validate()?;
    if latents.len() != smiles.len() {
        return Err(Error::LengthMismatch(latents.len(), smiles.len()));
    }
    let seqs = smiles
        .iter()
        .map(|s| dec.vocab.encode(s))
        .collect::<Result<Vec<_>>>()?;
    let lay = dec.layout();
    let mut rng = seeded(cfg.seed ^ 0x5eed_0de0);
    let mut adam = Adam::new(
        dec.theta.len(),
        AdamConfig {
            lr: cfg.lr,
            ..AdamConfig::default()
        },
    );
    let mut grad = vec![0.0; dec.theta.len()];
    let mut order: Vec<usize> = (0..seqs.len()).collect();
    let mut trace = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut epoch_tokens = 0usize;
        for batch in order.chunks(cfg.batch_size) {
            let tokens: usize = batch.iter().map(|&i| seqs[i].len() + 1).sum();
            let scale = 1.0 / tokens as f64;
            grad.iter_mut().for_each(|g| *g = 0.0);
            for &i in batch {
                epoch_loss += sequence_grad(
                    &dec,
                    &lay,
                    &latents[i],
                    &seqs[i],
                    Some(&mut rng),
                    &mut grad,
                    scale,
                )?;
            }
            epoch_tokens += tokens;
            clip_global_norm(&mut grad, cfg.clip_norm);
            adam.step(&mut dec.theta, &grad);
        }
        let mean = epoch_loss / epoch_tokens.max(1) as f64;
        if !mean.is_finite() {
            return Err(Error::NonFiniteLoss {
                stage: "decoder",
                epoch,
            });
        }
        if epoch % 25 == 0 || epoch + 1 == cfg.epochs {
            log::debug!("decoder epoch {epoch}: loss {mean:.5}");
        }
        trace.push(mean);
    }
    Ok(TrainedDecoder {
        decoder: dec,
        loss_trace: trace,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleOptions {
    pub temperature: f64,
    /// Argmax decoding; the temperature is ignored.
    pub greedy: bool,
    pub max_len: usize,
}

impl Default for SampleOptions {
    fn default() -> Self {
        SampleOptions {
            temperature: 1.0,
            greedy: false,
            max_len: 150,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sampled {
    pub smiles: String,
    /// No end token within `max_len` tokens.
    pub truncated: bool,
}

/// Autoregressive decoding from `z`. PAD and BOS are never emitted.
pub fn sample_smiles(
    dec: &GruDecoder,
    z: &[f64],
    opts: &SampleOptions,
    rng: &mut Rng,
) -> Result<Sampled> {
    if !opts.greedy && !(opts.temperature > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "temperature must be positive, got {}",
            opts.temperature
        )));
    }
    if opts.max_len == 0 {
        return Err(Error::InvalidConfig("max_len must be at least 1".into()));
    }
    let lay = dec.layout();
    let mut hidden = init_hidden(dec, z)?;
    let mut token = BOS;
    let mut ids = Vec::new();
    for _ in 0..opts.max_len {
        let (mut l, _) = advance(dec, &lay, &mut hidden, token, None, false);
        l[PAD] = f64::NEG_INFINITY;
        l[BOS] = f64::NEG_INFINITY;
        token = if opts.greedy {
            argmax(&l)
        } else {
            l.iter_mut().for_each(|v| *v /= opts.temperature);
            draw(&softmax(&l), rng)
        };
        if token == EOS {
            return Ok(Sampled {
                smiles: dec.vocab.decode(&ids),
                truncated: false,
            });
        }
        ids.push(token);
    }
    Ok(Sampled {
        smiles: dec.vocab.decode(&ids),
        truncated: true,
    })
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

fn draw(p: &[f64], rng: &mut Rng) -> usize {
    let mut u = rng.random::<f64>();
    let mut last = 0;
    for (i, &pi) in p.iter().enumerate() {
        if pi > 0.0 {
            last = i;
            if u < pi {
                return i;
            }
            u -= pi;
        }
    }
    last
}
