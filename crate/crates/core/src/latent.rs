//! Full-covariance Gaussian mixture fitted by EM in log space, class
//! conditional sampling, and the responsibility-based alignment of mixture
//! components to classes.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::assign;
use crate::error::{Error, Result};
use crate::floats;
use crate::linalg::{covariance, log_sum_exp, mean_rows, sq_dist, to_dvector, Matrix};
use crate::rng::{seeded, Rng};

const LOG_2PI: f64 = 1.837_877_066_409_345_5;

/// Components with less total responsibility than this are treated as empty.
pub const MIN_MASS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmParams {
    #[serde(with = "floats")]
    pub weights: Vec<f64>,
    #[serde(with = "floats::nested")]
    pub means: Vec<Vec<f64>>,
    pub covariances: Vec<Matrix>,
}

/// Cholesky factor and log-determinant of one covariance.
#[derive(Debug, Clone)]
pub struct Factor {
    pub l: DMatrix<f64>,
    pub log_det: f64,
}

impl Factor {
    pub fn new(cov: &Matrix, component: usize) -> Result<Factor> {
        let chol = Cholesky::<f64, Dyn>::new(cov.to_dmatrix())
            .ok_or(Error::SingularCovariance(component))?;
        let l = chol.l();
        let log_det = 2.0 * l.diagonal().iter().map(|v| v.ln()).sum::<f64>();
        Ok(Factor { l, log_det })
    }

    /// log N(z; mean, LLᵀ)
    pub fn log_density(&self, mean: &[f64], z: &[f64]) -> f64 {
        let diff = DVector::from_iterator(z.len(), z.iter().zip(mean).map(|(a, b)| a - b));
        let u = self
            .l
            .solve_lower_triangular(&diff)
            .expect("factor has a positive diagonal");
        -0.5 * (z.len() as f64 * LOG_2PI + self.log_det + u.norm_squared())
    }
}

impl GmmParams {
    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.means.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        let (k, d) = (self.k(), self.dim());
        if self.means.len() != k || self.covariances.len() != k {
            return Err(Error::ModelMismatch(format!(
                "{} weights, {} means, {} covariances",
                k,
                self.means.len(),
                self.covariances.len()
            )));
        }
        for (m, c) in self.means.iter().zip(&self.covariances) {
            if m.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: m.len(),
                });
            }
            if c.rows != d || c.cols != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: c.rows,
                });
            }
        }
        Ok(())
    }

    pub fn factors(&self) -> Result<Vec<Factor>> {
        self.covariances
            .iter()
            .enumerate()
            .map(|(k, c)| Factor::new(c, k))
            .collect()
    }
}

fn joint_log(params: &GmmParams, factors: &[Factor], z: &[f64], out: &mut [f64]) {
    for (k, f) in factors.iter().enumerate() {
        out[k] = params.weights[k].ln() + f.log_density(&params.means[k], z);
    }
}

/// `log Σ_k π_k N(z; μ_k, Σ_k)`
pub fn log_density(params: &GmmParams, z: &[f64]) -> Result<f64> {
    if z.len() != params.dim() {
        return Err(Error::DimensionMismatch {
            expected: params.dim(),
            found: z.len(),
        });
    }
    let factors = params.factors()?;
    let mut terms = vec![0.0; params.k()];
    joint_log(params, &factors, z, &mut terms);
    Ok(log_sum_exp(&terms))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Responsibilities {
    /// n × K posterior weights
    pub r: Matrix,
    pub log_likelihood: f64,
}

impl Responsibilities {
    /// Most responsible component of every point (lowest index on ties).
    pub fn hard(&self) -> Vec<usize> {
        (0..self.r.rows)
            .map(|i| {
                let row = self.r.row(i);
                let mut best = 0;
                for (k, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = k;
                    }
                }
                best
            })
            .collect()
    }
}

pub fn e_step(params: &GmmParams, z: &[Vec<f64>]) -> Result<Responsibilities> {
    let k = params.k();
    let factors = params.factors()?;
    let mut r = Matrix::zeros(z.len(), k);
    let mut terms = vec![0.0; k];
    let mut ll = 0.0;
    for (i, zi) in z.iter().enumerate() {
        if zi.len() != params.dim() {
            return Err(Error::DimensionMismatch {
                expected: params.dim(),
                found: zi.len(),
            });
        }
        joint_log(params, &factors, zi, &mut terms);
        let lse = log_sum_exp(&terms);
        ll += lse;
        for (j, t) in terms.iter().enumerate() {
            r.set(i, j, (t - lse).exp());
        }
    }
    Ok(Responsibilities {
        r,
        log_likelihood: ll,
    })
}

/// Diagonal loading `scale · tr(Σ_global) / d`; falls back to `scale` when
/// every point coincides.
pub fn regularization(z: &[Vec<f64>], scale: f64) -> f64 {
    let d = z.first().map_or(1, Vec::len).max(1);
    let tr = covariance(z).trace();
    if tr > 0.0 {
        scale * tr / d as f64
    } else {
        scale
    }
}

pub fn m_step(z: &[Vec<f64>], resp: &Responsibilities, lambda: f64) -> Result<GmmParams> {
    let (n, k) = (resp.r.rows, resp.r.cols);
    let d = z.first().map_or(0, Vec::len);
    let mut weights = Vec::with_capacity(k);
    let mut means = Vec::with_capacity(k);
    let mut covariances = Vec::with_capacity(k);
    for j in 0..k {
        let nk: f64 = (0..n).map(|i| resp.r.get(i, j)).sum();
        if nk < MIN_MASS {
            return Err(Error::EmptyComponent(j));
        }
        let mut mu = vec![0.0; d];
        for (i, zi) in z.iter().enumerate() {
            crate::linalg::axpy(resp.r.get(i, j), zi, &mut mu);
        }
        mu.iter_mut().for_each(|v| *v /= nk);
        let mut cov = Matrix::zeros(d, d);
        let mut diff = vec![0.0; d];
        for (i, zi) in z.iter().enumerate() {
            let r = resp.r.get(i, j);
            if r == 0.0 {
                continue;
            }
            for c in 0..d {
                diff[c] = zi[c] - mu[c];
            }
            let scaled: Vec<f64> = diff.iter().map(|v| v * r).collect();
            crate::linalg::outer_add(&mut cov.data, d, &scaled, &diff);
        }
        cov.data.iter_mut().for_each(|v| *v /= nk);
        symmetrize(&mut cov);
        for c in 0..d {
            cov.data[c * d + c] += lambda;
        }
        weights.push(nk / n as f64);
        means.push(mu);
        covariances.push(cov);
    }
    Ok(GmmParams {
        weights,
        means,
        covariances,
    })
}

fn symmetrize(m: &mut Matrix) {
    for i in 0..m.rows {
        for j in i + 1..m.cols {
            let v = 0.5 * (m.get(i, j) + m.get(j, i));
            m.set(i, j, v);
            m.set(j, i, v);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GmmConfig {
    pub tol: f64,
    pub max_iter: usize,
    /// λ = reg_scale · tr(Σ_global) / d
    pub reg_scale: f64,
    pub max_reseeds: usize,
    pub per_class: bool,
    pub seed: u64,
}

impl Default for GmmConfig {
    fn default() -> Self {
        GmmConfig {
            tol: 1e-6,
            max_iter: 500,
            reg_scale: 1e-6,
            max_reseeds: 5,
            per_class: false,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GmmFit {
    pub params: GmmParams,
    /// Log-likelihood of the data under the parameters of every iteration.
    pub trace: Vec<f64>,
    pub converged: bool,
    pub reseeds: usize,
}

/// k-means++ seeding refined by Lloyd iterations for the means, global
/// covariance for every component, uniform weights.
pub fn initialize(z: &[Vec<f64>], k: usize, lambda: f64, rng: &mut Rng) -> GmmParams {
    let n = z.len();
    let mut centers = vec![rng.random_range(0..n)];
    while centers.len() < k {
        let d2: Vec<f64> = z
            .iter()
            .map(|p| {
                centers
                    .iter()
                    .map(|&c| sq_dist(p, &z[c]))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, w) in d2.iter().enumerate() {
                if *w > 0.0 && target < *w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        centers.push(next);
    }
    let means = lloyd(
        z,
        centers.iter().map(|&c| z[c].clone()).collect(),
        LLOYD_ITERS,
    );
    let mut global = covariance(z);
    let d = global.rows;
    for c in 0..d {
        global.data[c * d + c] += lambda;
    }
    GmmParams {
        weights: vec![1.0 / k as f64; k],
        means,
        covariances: vec![global; k],
    }
}

const LLOYD_ITERS: usize = 100;

/// Plain k-means from the given centers; stops when assignments settle.
/// A center that loses all its points stays where it is.
pub fn lloyd(z: &[Vec<f64>], mut centers: Vec<Vec<f64>>, max_iter: usize) -> Vec<Vec<f64>> {
    let mut assignment = vec![usize::MAX; z.len()];
    for _ in 0..max_iter {
        let mut changed = false;
        for (i, p) in z.iter().enumerate() {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (c, m) in centers.iter().enumerate() {
                let d = sq_dist(p, m);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            if assignment[i] != best {
                assignment[i] = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        for (c, center) in centers.iter_mut().enumerate() {
            let members: Vec<Vec<f64>> = z
                .iter()
                .zip(&assignment)
                .filter(|(_, &a)| a == c)
                .map(|(p, _)| p.clone())
                .collect();
            if !members.is_empty() {
                *center = mean_rows(&members);
            }
        }
    }
    centers
}

pub fn fit(z: &[Vec<f64>], k: usize, cfg: &GmmConfig) -> Result<GmmFit> {
    if k == 0 || z.len() < k {
        return Err(Error::InsufficientData {
            need: k.max(1),
            have: z.len(),
        });
    }
    let lambda = regularization(z, cfg.reg_scale);
    let mut rng = seeded(cfg.seed);
    let mut params = initialize(z, k, lambda, &mut rng);
    let mut trace = Vec::new();
    let mut reseeds = 0;
    let mut converged = false;
    for iter in 0..=cfg.max_iter {
        let resp = e_step(&params, z)?;
        let ll = resp.log_likelihood;
        if let Some(&prev) = trace.last() {
            if ll - prev <= cfg.tol * f64::abs(prev) {
                trace.push(ll);
                converged = true;
                break;
            }
        }
        trace.push(ll);
        if iter == cfg.max_iter {
            break;
        }
        match m_step(z, &resp, lambda) {
            Ok(next) => params = next,
            Err(Error::EmptyComponent(j)) => {
                reseeds += 1;
                if reseeds > cfg.max_reseeds {
                    return Err(Error::EmptyComponent(j));
                }
                log::warn!("GMM component {j} emptied, reseeding (attempt {reseeds})");
                reseed(&mut params, z, &resp, j, lambda);
            }
            Err(e) => return Err(e),
        }
    }
    log::info!(
        "GMM: {} iterations, log-likelihood {:.6}",
        trace.len(),
        trace.last().copied().unwrap_or(f64::NAN)
    );
    Ok(GmmFit {
        params,
        trace,
        converged,
        reseeds,
    })
}

/// Moves component `j` onto the point the current mixture explains worst.
fn reseed(params: &mut GmmParams, z: &[Vec<f64>], resp: &Responsibilities, j: usize, lambda: f64) {
    let worst = (0..z.len())
        .min_by(|&a, &b| {
            let ma = resp.r.row(a).iter().copied().fold(0.0, f64::max);
            let mb = resp.r.row(b).iter().copied().fold(0.0, f64::max);
            ma.total_cmp(&mb)
        })
        .unwrap_or(0);
    let mut global = covariance(z);
    let d = global.rows;
    for c in 0..d {
        global.data[c * d + c] += lambda;
    }
    params.means[j] = z[worst].clone();
    params.covariances[j] = global;
    let k = params.k() as f64;
    params.weights[j] = 1.0 / k;
    let total: f64 = params.weights.iter().sum();
    params.weights.iter_mut().for_each(|w| *w /= total);
}

/// One Gaussian per class from its own points; weights are class shares.
pub fn fit_per_class(
    z: &[Vec<f64>],
    labels: &[usize],
    classes: usize,
    cfg: &GmmConfig,
) -> Result<GmmParams> {
    let lambda = regularization(z, cfg.reg_scale);
    let n = z.len() as f64;
    let mut params = GmmParams {
        weights: Vec::new(),
        means: Vec::new(),
        covariances: Vec::new(),
    };
    for c in 1..=classes {
        let rows: Vec<Vec<f64>> = z
            .iter()
            .zip(labels)
            .filter(|(_, &l)| l == c)
            .map(|(v, _)| v.clone())
            .collect();
        if rows.is_empty() {
            return Err(Error::EmptyComponent(c - 1));
        }
        let mut cov = covariance(&rows);
        let d = cov.rows;
        for i in 0..d {
            cov.data[i * d + i] += lambda;
        }
        params.weights.push(rows.len() as f64 / n);
        params.means.push(mean_rows(&rows));
        params.covariances.push(cov);
    }
    Ok(params)
}

/// `z = μ_k + L ξ` with `ξ` standard normal.
pub fn sample(params: &GmmParams, k: usize, count: usize, rng: &mut Rng) -> Result<Vec<Vec<f64>>> {
    if k >= params.k() {
        return Err(Error::InvalidConfig(format!(
            "component {k} out of range 0..{}",
            params.k()
        )));
    }
    let factor = Factor::new(&params.covariances[k], k)?;
    let d = params.dim();
    Ok((0..count)
        .map(|_| {
            let xi =
                DVector::from_iterator(d, (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)));
            let z = &factor.l * xi + to_dvector(&params.means[k]);
            z.as_slice().to_vec()
        })
        .collect())
}

/// `Φ[k, c] = Σ_{i: label_i = c} r_ik` with 1-based labels.
pub fn affinity(resp: &Responsibilities, labels: &[usize], classes: usize) -> Matrix {
    let k = resp.r.cols;
    let mut phi = Matrix::zeros(k, classes);
    for (i, &c) in labels.iter().enumerate() {
        for j in 0..k {
            phi.data[j * classes + (c - 1)] += resp.r.get(i, j);
        }
    }
    phi
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alignment {
    pub affinity: Matrix,
    /// component k → class index (0-based)
    pub gamma: Vec<usize>,
    /// class index (0-based) → component
    pub inverse: Vec<usize>,
    pub total: f64,
}

impl Alignment {
    pub fn new(affinity: Matrix, gamma: Vec<usize>) -> Self {
        let total = assign::total(&affinity, &gamma);
        let inverse = assign::inverse(&gamma);
        Alignment {
            affinity,
            gamma,
            inverse,
            total,
        }
    }

    /// Component serving 1-based class `c`.
    pub fn component_for(&self, class: usize) -> usize {
        self.inverse[class - 1]
    }
}

pub fn align(resp: &Responsibilities, labels: &[usize], classes: usize) -> Result<Alignment> {
    let phi = affinity(resp, labels, classes);
    let gamma = assign::assign(&phi)?;
    Ok(Alignment::new(phi, gamma))
}

/// Fraction of points whose most responsible component maps to their label.
pub fn purity(resp: &Responsibilities, labels: &[usize], gamma: &[usize]) -> f64 {
    let hard = resp.hard();
    let hits = hard
        .iter()
        .zip(labels)
        .filter(|(&k, &l)| gamma[k] + 1 == l)
        .count();
    hits as f64 / labels.len().max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn standard(d: usize) -> GmmParams {
        GmmParams {
            weights: vec![1.0],
            means: vec![vec![0.0; d]],
            covariances: vec![Matrix::identity(d)],
        }
    }

    fn two(mu1: Vec<f64>, mu2: Vec<f64>) -> GmmParams {
        let d = mu1.len();
        GmmParams {
            weights: vec![0.5, 0.5],
            means: vec![mu1, mu2],
            covariances: vec![Matrix::identity(d), Matrix::identity(d)],
        }
    }

    #[test]
    fn standard_normal_peak() {
        let v = log_density(&standard(2), &[0.0, 0.0]).unwrap();
        assert!((v - (-(2.0 * std::f64::consts::PI).ln())).abs() < 1e-12);
        assert!((v + 1.8379).abs() < 1e-4);
    }

    #[test]
    fn identical_components_collapse() {
        let z = [0.3, -1.2];
        let one = log_density(&standard(2), &z).unwrap();
        let both = log_density(&two(vec![0.0, 0.0], vec![0.0, 0.0]), &z).unwrap();
        assert!((one - both).abs() < 1e-12);
    }

    #[test]
    fn separated_components_at_a_mean() {
        // 10σ apart: the far component contributes exp(-50) relative weight
        let p = two(vec![-5.0, 0.0], vec![5.0, 0.0]);
        let v = log_density(&p, &[-5.0, 0.0]).unwrap();
        let expected = 0.5f64.ln() - (2.0 * std::f64::consts::PI).ln();
        // the cross term log(1 + e^-50) is far below double precision
        assert!((v - expected).abs() < 1e-12);
    }

    #[test]
    fn responsibilities_examples() {
        let pts = vec![vec![1.0, 2.0], vec![-3.0, 0.5]];
        let r = e_step(&standard(2), &pts).unwrap();
        assert!(r.r.data.iter().all(|&v| v == 1.0));

        let r = e_step(&two(vec![0.0, 0.0], vec![0.0, 0.0]), &pts).unwrap();
        assert!(r.r.data.iter().all(|&v| (v - 0.5).abs() < 1e-15));

        let r = e_step(&two(vec![-5.0, 0.0], vec![5.0, 0.0]), &[vec![-5.0, 0.0]]).unwrap();
        let expected = 1.0 / (1.0 + (-50.0f64).exp());
        assert!((r.r.get(0, 0) - expected).abs() < 1e-15);
    }

    #[test]
    fn one_hot_m_step_gives_sample_statistics() {
        let z = vec![
            vec![0.0, 0.0],
            vec![2.0, 0.0],
            vec![10.0, 10.0],
            vec![10.0, 12.0],
        ];
        let resp = Responsibilities {
            r: Matrix::from_rows(&[
                vec![1.0, 0.0],
                vec![1.0, 0.0],
                vec![0.0, 1.0],
                vec![0.0, 1.0],
            ]),
            log_likelihood: 0.0,
        };
        let p = m_step(&z, &resp, 0.0).unwrap();
        assert_eq!(p.weights, vec![0.5, 0.5]);
        assert_eq!(p.means, vec![vec![1.0, 0.0], vec![10.0, 11.0]]);
        assert_eq!(p.covariances[0].data, vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(p.covariances[1].data, vec![0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn uniform_m_step_shares_global_moments() {
        let z = vec![vec![0.0, 1.0], vec![2.0, 3.0], vec![4.0, -1.0]];
        let resp = Responsibilities {
            r: Matrix::from_rows(&vec![vec![1.0 / 3.0; 3]; 3]),
            log_likelihood: 0.0,
        };
        let lambda = 1e-3;
        let p = m_step(&z, &resp, lambda).unwrap();
        let mut global = covariance(&z);
        global.data[0] += lambda;
        global.data[3] += lambda;
        for k in 0..3 {
            assert!((p.weights[k] - 1.0 / 3.0).abs() < 1e-15);
            for (a, b) in p.means[k].iter().zip(&mean_rows(&z)) {
                assert!((a - b).abs() < 1e-12);
            }
            for (a, b) in p.covariances[k].data.iter().zip(&global.data) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn empty_component_is_reported() {
        let z = vec![vec![0.0], vec![1.0]];
        let resp = Responsibilities {
            r: Matrix::from_rows(&[vec![1.0, 0.0], vec![1.0, 0.0]]),
            log_likelihood: 0.0,
        };
        assert!(matches!(
            m_step(&z, &resp, 0.0),
            Err(Error::EmptyComponent(1))
        ));
    }

    #[test]
    fn single_component_converges_to_sample_moments() {
        let z: Vec<Vec<f64>> = (0..20)
            .map(|i| vec![i as f64, (i * i) as f64 / 10.0])
            .collect();
        let fit = fit(&z, 1, &GmmConfig::default()).unwrap();
        assert!(fit.converged);
        let lambda = regularization(&z, 1e-6);
        let mut cov = covariance(&z);
        cov.data[0] += lambda;
        cov.data[3] += lambda;
        for (a, b) in fit.params.means[0].iter().zip(&mean_rows(&z)) {
            assert!((a - b).abs() < 1e-9);
        }
        for (a, b) in fit.params.covariances[0].data.iter().zip(&cov.data) {
            assert!((a - b).abs() < 1e-9 * (1.0 + b.abs()));
        }
        assert_eq!(fit.params.weights, vec![1.0]);
    }

    #[test]
    fn two_points_two_components_shrink_to_the_floor() {
        let z = vec![vec![0.0, 0.0], vec![3.0, 4.0]];
        let cfg = GmmConfig {
            tol: 1e-12,
            ..Default::default()
        };
        let fit = fit(&z, 2, &cfg).unwrap();
        let lambda = regularization(&z, cfg.reg_scale);
        let mut means = fit.params.means.clone();
        means.sort_by(|a, b| a[0].total_cmp(&b[0]));
        assert!(sq_dist(&means[0], &z[0]) < 1e-12);
        assert!(sq_dist(&means[1], &z[1]) < 1e-12);
        for c in &fit.params.covariances {
            let expected = Matrix::identity(2)
                .data
                .iter()
                .map(|v| v * lambda)
                .collect::<Vec<_>>();
            for (a, b) in c.data.iter().zip(&expected) {
                assert!((a - b).abs() < 1e-3 * lambda, "{:?}", c.data);
            }
        }
    }

    #[test]
    fn lloyd_moves_seeds_to_centroids() {
        let z = vec![vec![0.0], vec![1.0], vec![10.0], vec![12.0]];
        let c = lloyd(&z, vec![vec![0.0], vec![1.0]], 100);
        assert_eq!(c, vec![vec![0.5], vec![11.0]]);
    }

    #[test]
    fn affinity_by_hand() {
        let resp = Responsibilities {
            r: Matrix::from_rows(&[
                vec![0.9, 0.1],
                vec![0.6, 0.4],
                vec![0.2, 0.8],
                vec![0.3, 0.7],
            ]),
            log_likelihood: 0.0,
        };
        let phi = affinity(&resp, &[1, 2, 2, 1], 2);
        // class 1 = rows 0 and 3, class 2 = rows 1 and 2
        let expected = [1.2, 0.8, 0.8, 1.2];
        for (a, b) in phi.data.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        let a = align(&resp, &[1, 2, 2, 1], 2).unwrap();
        assert_eq!(a.gamma, vec![0, 1]);
        assert_eq!(purity(&resp, &[1, 2, 2, 1], &a.gamma), 0.5);
    }

    #[test]
    fn permutation_affinity() {
        let resp = Responsibilities {
            r: Matrix::from_rows(&[
                vec![0.0, 1.0, 0.0],
                vec![0.0, 0.0, 1.0],
                vec![1.0, 0.0, 0.0],
            ]),
            log_likelihood: 0.0,
        };
        let a = align(&resp, &[1, 2, 3], 3).unwrap();
        assert_eq!(
            a.affinity.data,
            vec![0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0]
        );
        assert_eq!(a.gamma, vec![2, 0, 1]);
        assert_eq!(a.component_for(1), 1);
        assert_eq!(purity(&resp, &[1, 2, 3], &a.gamma), 1.0);
    }

    #[test]
    fn sample_count_zero_and_bad_component() {
        let p = standard(3);
        assert!(sample(&p, 0, 0, &mut seeded(1)).unwrap().is_empty());
        assert!(sample(&p, 1, 1, &mut seeded(1)).is_err());
        let mut bad = standard(2);
        bad.covariances[0] = Matrix::zeros(2, 2);
        assert!(matches!(
            sample(&bad, 0, 1, &mut seeded(1)),
            Err(Error::SingularCovariance(0))
        ));
    }
}
