use nalgebra::{Cholesky, DMatrix, DVector};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::linalg::{dist, sq_dist};
use crate::rng::{derive, seeded};

/// Mean silhouette with Euclidean distance. A point whose intra- and
/// nearest-other-cluster distances are both zero scores 0.
pub fn silhouette(x: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    if x.len() != labels.len() {
        return Err(Error::LengthMismatch(x.len(), labels.len()));
    }
    let mut classes: Vec<usize> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::DegenerateClass(format!(
            "{} class present, need at least 2",
            classes.len()
        )));
    }
    for &c in &classes {
        let n = labels.iter().filter(|&&l| l == c).count();
        if n < 2 {
            return Err(Error::DegenerateClass(format!("class {c} has {n} point")));
        }
    }
    let mut total = 0.0;
    for i in 0..x.len() {
        let mut sums = vec![0.0; classes.len()];
        let mut counts = vec![0usize; classes.len()];
        for j in 0..x.len() {
            if i == j {
                continue;
            }
            let c = classes.binary_search(&labels[j]).expect("label listed");
            sums[c] += dist(&x[i], &x[j]);
            counts[c] += 1;
        }
        let own = classes.binary_search(&labels[i]).expect("label listed");
        let a = sums[own] / counts[own] as f64;
        let b = (0..classes.len())
            .filter(|&c| c != own)
            .map(|c| sums[c] / counts[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let m = a.max(b);
        total += if m > 0.0 { (b - a) / m } else { 0.0 };
    }
    Ok(total / x.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    /// Two-tailed.
    pub p: f64,
    pub df: usize,
}

fn paired_differences(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < 2 {
        return Err(Error::InsufficientData {
            need: 2,
            have: a.len(),
        });
    }
    Ok(a.iter().zip(b).map(|(x, y)| x - y).collect())
}

fn mean_sd(d: &[f64]) -> (f64, f64) {
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Paired two-tailed t-test on `a − b`. With zero spread the statistic is
/// reported as 0 and `p` is 1 for a zero mean difference, 0 otherwise.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTest> {
    let d = paired_differences(a, b)?;
    let df = d.len() - 1;
    let (mean, sd) = mean_sd(&d);
    // Spread below rounding noise of the mean counts as none.
    if sd <= 1e-12 * mean.abs().max(f64::MIN_POSITIVE) || sd == 0.0 {
        return Ok(TTest {
            t: 0.0,
            p: if mean == 0.0 { 1.0 } else { 0.0 },
            df,
        });
    }
    let t = mean / (sd / (d.len() as f64).sqrt());
    let dist =
        StudentsT::new(0.0, 1.0, df as f64).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let p = (2.0 * dist.sf(t.abs())).min(1.0);
    Ok(TTest { t, p, df })
}

/// `mean(a − b) / sd(a − b)` with the n − 1 sample deviation. Zero spread
/// gives 0 for a zero mean and a signed infinity otherwise.
pub fn cohens_d(a: &[f64], b: &[f64]) -> Result<f64> {
    let d = paired_differences(a, b)?;
    let (mean, sd) = mean_sd(&d);
    if sd == 0.0 {
        return Ok(if mean == 0.0 {
            0.0
        } else {
            mean.signum() * f64::INFINITY
        });
    }
    Ok(mean / sd)
}

/// Closed-form ridge regression with an unpenalized intercept. Uses the
/// dual system when there are more features than rows.
#[derive(Debug, Clone)]
pub struct Ridge {
    weights: Vec<f64>,
    intercept: f64,
}

impl Ridge {
    pub fn fit(x: &[Vec<f64>], y: &[f64], lambda: f64) -> Result<Ridge> {
        let n = x.len();
        let p = x.first().map_or(0, Vec::len);
        let x_mean: Vec<f64> = (0..p)
            .map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n as f64)
            .collect();
        let y_mean = y.iter().sum::<f64>() / n as f64;
        let xc = DMatrix::from_fn(n, p, |i, j| x[i][j] - x_mean[j]);
        let yc = DVector::from_iterator(n, y.iter().map(|v| v - y_mean));
        let w = if p <= n {
            let g = xc.transpose() * &xc + DMatrix::identity(p, p) * lambda;
            let ch = Cholesky::new(g).ok_or(Error::NotPd)?;
            ch.solve(&(xc.transpose() * &yc))
        } else {
            let k = &xc * xc.transpose() + DMatrix::identity(n, n) * lambda;
            let ch = Cholesky::new(k).ok_or(Error::NotPd)?;
            xc.transpose() * ch.solve(&yc)
        };
        let weights = w.as_slice().to_vec();
        let intercept = y_mean - weights.iter().zip(&x_mean).map(|(a, b)| a * b).sum::<f64>();
        Ok(Ridge { weights, intercept })
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.intercept + self.weights.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
    }
}

/// Mean target of the `k` nearest training rows; ties go to the lower index.
pub fn knn_predict(train_x: &[Vec<f64>], train_y: &[f64], x: &[f64], k: usize) -> f64 {
    let mut d: Vec<(f64, usize)> = train_x
        .iter()
        .enumerate()
        .map(|(i, r)| (sq_dist(r, x), i))
        .collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let k = k.min(d.len());
    d[..k].iter().map(|&(_, i)| train_y[i]).sum::<f64>() / k as f64
}

fn mae(pred: &[f64], y: &[f64]) -> f64 {
    pred.iter().zip(y).map(|(p, t)| (p - t).abs()).sum::<f64>() / y.len() as f64
}

/// `1 − SS_res / SS_tot`, or 0 when the targets are constant.
fn r2(pred: &[f64], y: &[f64]) -> f64 {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res: f64 = pred.iter().zip(y).map(|(p, t)| (p - t).powi(2)).sum();
    if ss_tot == 0.0 {
        0.0
    } else {
        1.0 - ss_res / ss_tot
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RegressionConfig {
    pub seeds: usize,
    pub train_fraction: f64,
    pub ridge_lambda: f64,
    pub knn: usize,
    pub seed: u64,
}

impl Default for RegressionConfig {
    fn default() -> Self {
        RegressionConfig {
            seeds: 50,
            train_fraction: 0.8,
            ridge_lambda: 1.0,
            knn: 5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelComparison {
    pub model: String,
    pub mae_base: Vec<f64>,
    pub mae_contrastive: Vec<f64>,
    pub r2_base: Vec<f64>,
    pub r2_contrastive: Vec<f64>,
    pub mean_mae_base: f64,
    pub mean_mae_contrastive: f64,
    /// Mean over seeds of `R²_contrastive − R²_base`.
    pub delta_r2: f64,
    /// Paired test of base against contrastive MAE.
    pub p_value: f64,
    pub t: f64,
    /// Effect size of `MAE_base − MAE_contrastive`.
    pub cohens_d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionStudyResult {
    pub seeds: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub models: Vec<ModelComparison>,
}

type Predictor = fn(&[Vec<f64>], &[f64], &[Vec<f64>], &RegressionConfig) -> Result<Vec<f64>>;

fn ridge_predictions(
    tx: &[Vec<f64>],
    ty: &[f64],
    test: &[Vec<f64>],
    cfg: &RegressionConfig,
) -> Result<Vec<f64>> {
    let m = Ridge::fit(tx, ty, cfg.ridge_lambda)?;
    Ok(test.iter().map(|x| m.predict(x)).collect())
}

fn knn_predictions(
    tx: &[Vec<f64>],
    ty: &[f64],
    test: &[Vec<f64>],
    cfg: &RegressionConfig,
) -> Result<Vec<f64>> {
    Ok(test
        .iter()
        .map(|x| knn_predict(tx, ty, x, cfg.knn))
        .collect())
}

/// Seed `s` shuffles rows with `derive(cfg.seed, s)`; both representations
/// see the same split.
pub fn regression_study(
    base: &[Vec<f64>],
    contrastive: &[Vec<f64>],
    y: &[f64],
    cfg: &RegressionConfig,
) -> Result<RegressionStudyResult> {
    let n = y.len();
    if base.len() != n {
        return Err(Error::LengthMismatch(base.len(), n));
    }
    if contrastive.len() != n {
        return Err(Error::LengthMismatch(contrastive.len(), n));
    }
    if n < 10 {
        return Err(Error::InsufficientData { need: 10, have: n });
    }
    if cfg.seeds < 2 {
        return Err(Error::InvalidConfig(format!(
            "need at least 2 seeds, got {}",
            cfg.seeds
        )));
    }
    if !(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "train fraction {} outside (0, 1)",
            cfg.train_fraction
        )));
    }
    if cfg.knn == 0 || !(cfg.ridge_lambda > 0.0) {
        return Err(Error::InvalidConfig(
            "knn must be at least 1 and the ridge penalty positive".into(),
        ));
    }
    let train_size = ((n as f64 * cfg.train_fraction).round() as usize).clamp(1, n - 1);
    let models: [(&str, Predictor); 2] = [("ridge", ridge_predictions), ("knn", knn_predictions)];
    let mut runs: Vec<[Vec<f64>; 4]> = vec![Default::default(); models.len()];
    for s in 0..cfg.seeds {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut seeded(derive(cfg.seed, s as u64)));
        let (tr, te) = idx.split_at(train_size);
        let ty: Vec<f64> = tr.iter().map(|&i| y[i]).collect();
        let test_y: Vec<f64> = te.iter().map(|&i| y[i]).collect();
        for (m, (_, predict)) in models.iter().enumerate() {
            for (r, rep) in [base, contrastive].into_iter().enumerate() {
                let tx: Vec<Vec<f64>> = tr.iter().map(|&i| rep[i].clone()).collect();
                let test: Vec<Vec<f64>> = te.iter().map(|&i| rep[i].clone()).collect();
                let pred = predict(&tx, &ty, &test, cfg)?;
                runs[m][r].push(mae(&pred, &test_y));
                runs[m][2 + r].push(r2(&pred, &test_y));
            }
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let mut out = Vec::new();
    for ((name, _), [mb, mc, rb, rc]) in models.iter().zip(runs) {
        let test = paired_t_test(&mb, &mc)?;
        let delta: Vec<f64> = rc.iter().zip(&rb).map(|(c, b)| c - b).collect();
        out.push(ModelComparison {
            model: name.to_string(),
            mean_mae_base: mean(&mb),
            mean_mae_contrastive: mean(&mc),
            delta_r2: mean(&delta),
            p_value: test.p,
            t: test.t,
            cohens_d: cohens_d(&mb, &mc)?,
            mae_base: mb,
            mae_contrastive: mc,
            r2_base: rb,
            r2_contrastive: rc,
        });
    }
    Ok(RegressionStudyResult {
        seeds: cfg.seeds,
        train_size,
        test_size: n - train_size,
        models: out,
    })
}
