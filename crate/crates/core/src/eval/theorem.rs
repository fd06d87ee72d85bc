//! Numeric check that the Gaussian minimizing cross-entropy against a
//! non-Gaussian distribution is the moment-matched one.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng as _;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::floats;
use crate::linalg::{covariance, mean_rows, Matrix};
use crate::rng::{derive, seeded, Rng};

const LOG_2PI: f64 = 1.837_877_066_409_345_5;

fn cholesky(m: &DMatrix<f64>) -> Result<Cholesky<f64, nalgebra::Dyn>> {
    Cholesky::new(m.clone()).ok_or(Error::NotPd)
}

/// `CE(N(μ, Σ) ‖ N(ν, Λ))`, which is also the cross-entropy of any
/// distribution with moments `(μ, Σ)` against `N(ν, Λ)`.
pub fn gaussian_cross_entropy(
    mu: &[f64],
    sigma: &Matrix,
    nu: &[f64],
    lambda: &Matrix,
) -> Result<f64> {
    let d = mu.len();
    for (found, what) in [
        (nu.len(), "nu"),
        (sigma.rows, "sigma"),
        (sigma.cols, "sigma"),
        (lambda.rows, "lambda"),
        (lambda.cols, "lambda"),
    ] {
        if found != d {
            log::debug!("{what} has size {found}, expected {d}");
            return Err(Error::DimensionMismatch { expected: d, found });
        }
    }
    cholesky(&sigma.to_dmatrix())?;
    let ch = cholesky(&lambda.to_dmatrix())?;
    let prec_sigma = ch.solve(&sigma.to_dmatrix());
    let diff = DVector::from_iterator(d, mu.iter().zip(nu).map(|(a, b)| a - b));
    let quad = diff.dot(&ch.solve(&diff));
    let log_det = 2.0 * ch.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    Ok(0.5 * prec_sigma.trace() + 0.5 * quad + 0.5 * log_det + 0.5 * d as f64 * LOG_2PI)
}

/// `g(A) = ½ tr(AΣ) − ½ log det A` for a precision matrix `A`.
pub fn precision_objective(a: &DMatrix<f64>, sigma: &DMatrix<f64>) -> Result<f64> {
    let det = a.clone().lu().determinant();
    if !(det > 0.0) {
        return Err(Error::NotPd);
    }
    Ok(0.5 * (a * sigma).trace() - 0.5 * det.ln())
}

/// `∇_A g = ½Σ − ½A⁻¹`.
pub fn precision_gradient(a: &DMatrix<f64>, sigma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let inv = cholesky(a)?.inverse();
    Ok(0.5 * sigma - 0.5 * inv)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    /// Uniform on the unit square.
    Uniform,
    /// Equal mixture of N(−3, 1) and N(3, 1).
    Mixture,
    /// Exp(1).
    Exponential,
}

impl Source {
    pub const ALL: [Source; 3] = [Source::Uniform, Source::Mixture, Source::Exponential];

    pub fn dim(self) -> usize {
        match self {
            Source::Uniform => 2,
            Source::Mixture | Source::Exponential => 1,
        }
    }

    pub fn draw(self, rng: &mut Rng) -> Vec<f64> {
        match self {
            Source::Uniform => vec![rng.random::<f64>(), rng.random::<f64>()],
            Source::Mixture => {
                let centre = if rng.random::<bool>() { 3.0 } else { -3.0 };
                let e: f64 = StandardNormal.sample(rng);
                vec![centre + e]
            }
            Source::Exponential => vec![Exp1.sample(rng)],
        }
    }

    /// Population mean and covariance.
    pub fn moments(self) -> (Vec<f64>, Matrix) {
        match self {
            Source::Uniform => {
                let mut c = Matrix::identity(2);
                c.data.iter_mut().for_each(|v| *v /= 12.0);
                (vec![0.5, 0.5], c)
            }
            Source::Mixture => (vec![0.0], Matrix::from_rows(&[vec![10.0]])),
            Source::Exponential => (vec![1.0], Matrix::identity(1)),
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Uniform => "uniform",
            Source::Mixture => "mixture",
            Source::Exponential => "exponential",
        })
    }
}

impl FromStr for Source {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Source::ALL
            .into_iter()
            .find(|src| src.to_string() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown source {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TheoremConfig {
    pub samples: usize,
    pub max_iter: usize,
    /// Stop once the gradient norm falls below this.
    pub grad_tol: f64,
    /// Allowed relative error of the minimizer.
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for TheoremConfig {
    fn default() -> Self {
        TheoremConfig {
            samples: 100_000,
            max_iter: 100_000,
            grad_tol: 1e-8,
            tolerance: 0.02,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub source: Source,
    pub samples: usize,
    pub iterations: usize,
    pub converged: bool,
    pub objective: f64,
    #[serde(with = "floats")]
    pub nu: Vec<f64>,
    pub lambda: Matrix,
    #[serde(with = "floats")]
    pub sample_mean: Vec<f64>,
    pub sample_cov: Matrix,
    #[serde(with = "floats")]
    pub true_mean: Vec<f64>,
    pub true_cov: Matrix,
    pub mean_error_sample: f64,
    pub cov_error_sample: f64,
    pub mean_error_true: f64,
    pub cov_error_true: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// Objective after every iteration.
    #[serde(with = "floats")]
    pub trajectory: Vec<f64>,
}

/// `‖ν − m‖ / max(‖m‖, √tr C)`; the scale keeps zero-mean sources finite.
pub fn mean_error(nu: &[f64], m: &[f64], c: &Matrix) -> f64 {
    let diff = nu
        .iter()
        .zip(m)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    let norm = m.iter().map(|v| v * v).sum::<f64>().sqrt();
    diff / norm.max(c.trace().sqrt())
}

/// `‖Λ − C‖_F / ‖C‖_F`.
pub fn cov_error(lambda: &Matrix, c: &Matrix) -> f64 {
    let diff = lambda
        .data
        .iter()
        .zip(&c.data)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    diff / c.data.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Empirical cross-entropy of `N(ν, L Lᵀ)` against a sample, evaluated
/// through the sample mean `m` and covariance `C`:
/// `−(1/n) Σ log q(x_i) = ½ tr(Λ⁻¹ (C + (m − ν)(m − ν)ᵀ)) + ½ log det Λ + (d/2) log 2π`.
///
/// Parameters: `ν` then the lower triangle of `L` row by row, with the
/// diagonal stored as `log L_ii`.
struct Surrogate {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    d: usize,
}

impl Surrogate {
    fn new(xs: &[Vec<f64>]) -> Self {
        let d = xs[0].len();
        Surrogate {
            mean: DVector::from_vec(mean_rows(xs)),
            cov: covariance(xs).to_dmatrix(),
            d,
        }
    }

    fn unpack(&self, theta: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let d = self.d;
        let nu = DVector::from_column_slice(&theta[..d]);
        let mut l = DMatrix::zeros(d, d);
        let mut at = d;
        for i in 0..d {
            for j in 0..=i {
                l[(i, j)] = if i == j { theta[at].exp() } else { theta[at] };
                at += 1;
            }
        }
        (nu, l)
    }

    fn pack(&self, nu: &[f64], l: &DMatrix<f64>) -> Vec<f64> {
        let mut theta = nu.to_vec();
        for i in 0..self.d {
            for j in 0..=i {
                theta.push(if i == j { l[(i, j)].ln() } else { l[(i, j)] });
            }
        }
        theta
    }

    /// `C + (m − ν)(m − ν)ᵀ`
    fn scatter(&self, nu: &DVector<f64>) -> DMatrix<f64> {
        let r = &self.mean - nu;
        &self.cov + &r * r.transpose()
    }

    fn value(&self, theta: &[f64]) -> f64 {
        let (nu, l) = self.unpack(theta);
        let d = self.d;
        let log_det_l: f64 = (0..d).map(|i| l[(i, i)].ln()).sum();
        // tr(Λ⁻¹ S) = tr(L⁻¹ S L⁻ᵀ)
        let linv = l
            .clone()
            .solve_lower_triangular(&DMatrix::identity(d, d))
            .expect("positive diagonal");
        let quad = (&linv * self.scatter(&nu) * linv.transpose()).trace();
        0.5 * quad + log_det_l + 0.5 * d as f64 * LOG_2PI
    }

    fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        let (nu, l) = self.unpack(theta);
        let d = self.d;
        let s = self.scatter(&nu);
        let lambda = &l * l.transpose();
        let p = Cholesky::new(lambda)
            .expect("L has a positive diagonal")
            .inverse();
        let g_nu = -(&p * (&self.mean - &nu));
        let g_lambda = 0.5 * (&p - &p * s * &p);
        let g_l = 2.0 * g_lambda * &l;
        let mut grad = g_nu.as_slice().to_vec();
        for i in 0..d {
            for j in 0..=i {
                grad.push(if i == j {
                    g_l[(i, i)] * l[(i, i)]
                } else {
                    g_l[(i, j)]
                });
            }
        }
        grad
    }
}

/// `−(1/n) Σ log N(x_i; ν, Λ)` summed sample by sample.
pub fn empirical_cross_entropy(xs: &[Vec<f64>], nu: &[f64], lambda: &Matrix) -> Result<f64> {
    let d = nu.len();
    let ch = cholesky(&lambda.to_dmatrix())?;
    let l = ch.l();
    let log_det_l: f64 = (0..d).map(|i| l[(i, i)].ln()).sum();
    let mut quad = 0.0;
    for x in xs {
        let r = DVector::from_iterator(d, x.iter().zip(nu).map(|(a, b)| a - b));
        let y = l.solve_lower_triangular(&r).ok_or(Error::NotPd)?;
        quad += y.norm_squared();
    }
    Ok(0.5 * quad / xs.len() as f64 + log_det_l + 0.5 * d as f64 * LOG_2PI)
}

struct Descent {
    theta: Vec<f64>,
    iterations: usize,
    converged: bool,
    trajectory: Vec<f64>,
}

/// Gradient descent with Armijo backtracking. The trial step starts at
/// twice the last accepted step.
fn descend(f: &Surrogate, mut theta: Vec<f64>, max_iter: usize, grad_tol: f64) -> Descent {
    const ARMIJO: f64 = 1e-4;
    let mut value = f.value(&theta);
    let mut step = 1.0;
    let mut trajectory = Vec::new();
    for it in 0..max_iter {
        let g = f.gradient(&theta);
        let gg: f64 = g.iter().map(|v| v * v).sum();
        if gg.sqrt() < grad_tol {
            return Descent {
                theta,
                iterations: it,
                converged: true,
                trajectory,
            };
        }
        step *= 2.0;
        loop {
            let trial: Vec<f64> = theta.iter().zip(&g).map(|(t, gi)| t - step * gi).collect();
            let v = f.value(&trial);
            if v < value && v <= value - ARMIJO * step * gg {
                theta = trial;
                value = v;
                break;
            }
            step *= 0.5;
            if step < 1e-300 {
                // No step lowers the objective in f64; the point is
                // stationary to working precision.
                return Descent {
                    theta,
                    iterations: it,
                    converged: true,
                    trajectory,
                };
            }
        }
        trajectory.push(value);
    }
    Descent {
        theta,
        iterations: max_iter,
        converged: false,
        trajectory,
    }
}

/// Minimizes the empirical cross-entropy of `N(ν, Λ)` against samples from
/// `source` and compares the minimizer with sample and population moments.
pub fn verify_theorem1(source: Source, cfg: &TheoremConfig) -> Result<TheoremReport> {
    if cfg.samples < 2 {
        return Err(Error::InsufficientData {
            need: 2,
            have: cfg.samples,
        });
    }
    let mut rng = seeded(derive(cfg.seed, source as u64));
    let xs: Vec<Vec<f64>> = (0..cfg.samples).map(|_| source.draw(&mut rng)).collect();
    let d = source.dim();
    let f = Surrogate::new(&xs);
    let start = f.pack(&vec![0.0; d], &DMatrix::identity(d, d));
    let run = descend(&f, start, cfg.max_iter, cfg.grad_tol);
    let (nu, l) = f.unpack(&run.theta);
    let lambda = Matrix::from_dmatrix(&(&l * l.transpose()));
    let nu = nu.as_slice().to_vec();
    let sample_mean = mean_rows(&xs);
    let sample_cov = covariance(&xs);
    let (true_mean, true_cov) = source.moments();
    let mean_error_sample = mean_error(&nu, &sample_mean, &sample_cov);
    let cov_error_sample = cov_error(&lambda, &sample_cov);
    let mean_error_true = mean_error(&nu, &true_mean, &true_cov);
    let cov_error_true = cov_error(&lambda, &true_cov);
    let passed = run.converged
        && [
            mean_error_sample,
            cov_error_sample,
            mean_error_true,
            cov_error_true,
        ]
        .iter()
        .all(|&e| e <= cfg.tolerance);
    Ok(TheoremReport {
        source,
        samples: cfg.samples,
        iterations: run.iterations,
        converged: run.converged,
        objective: f.value(&run.theta),
        nu,
        lambda,
        sample_mean,
        sample_cov,
        true_mean,
        true_cov,
        mean_error_sample,
        cov_error_sample,
        mean_error_true,
        cov_error_true,
        tolerance: cfg.tolerance,
        passed,
        trajectory: run.trajectory,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientCheck {
    pub name: String,
    pub rel_error: f64,
    pub threshold: f64,
    pub passed: bool,
}

fn rel_error(a: &[f64], b: &[f64]) -> f64 {
    let diff = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    let scale = a
        .iter()
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt()
        .max(b.iter().map(|x| x * x).sum::<f64>().sqrt());
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

fn central<F: FnMut(&[f64]) -> f64>(x: &[f64], h: f64, mut f: F) -> Vec<f64> {
    let mut x = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = x[i];
            x[i] = orig + h;
            let up = f(&x);
            x[i] = orig - h;
            let down = f(&x);
            x[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Random SPD matrix `B Bᵀ + I`.
pub fn random_spd(d: usize, rng: &mut Rng) -> DMatrix<f64> {
    let b = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
    &b * b.transpose() + DMatrix::identity(d, d)
}

/// Worst relative error over `trials` random points for the precision-form
/// gradient, the mean gradient, and the optimizer's own gradient.
pub fn gradient_checks(trials: usize, seed: u64) -> Result<Vec<GradientCheck>> {
    const THRESHOLD: f64 = 1e-5;
    const H: f64 = 1e-6;
    let mut rng = seeded(seed);
    let (mut worst_a, mut worst_nu, mut worst_opt) = (0.0_f64, 0.0_f64, 0.0_f64);
    for t in 0..trials {
        let d = 1 + t % 3;
        let sigma = random_spd(d, &mut rng);
        let a = random_spd(d, &mut rng);
        let analytic = precision_gradient(&a, &sigma)?;
        let fd = central(a.as_slice(), H, |v| {
            precision_objective(&DMatrix::from_column_slice(d, d, v), &sigma).unwrap_or(f64::NAN)
        });
        worst_a = worst_a.max(rel_error(analytic.as_slice(), &fd));

        let mu: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
        let nu: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
        let lam = random_spd(d, &mut rng);
        let sig = Matrix::from_dmatrix(&sigma);
        let lam_m = Matrix::from_dmatrix(&lam);
        let diff = DVector::from_iterator(d, nu.iter().zip(&mu).map(|(a, b)| a - b));
        let analytic = cholesky(&lam)?.solve(&diff);
        let fd = central(&nu, H, |v| {
            gaussian_cross_entropy(&mu, &sig, v, &lam_m).unwrap_or(f64::NAN)
        });
        worst_nu = worst_nu.max(rel_error(analytic.as_slice(), &fd));

        let xs: Vec<Vec<f64>> = (0..50)
            .map(|_| (0..d).map(|_| rng.random_range(-3.0..3.0)).collect())
            .collect();
        let f = Surrogate::new(&xs);
        let l = cholesky(&random_spd(d, &mut rng))?.l();
        let theta = f.pack(&nu, &l);
        let fd = central(&theta, H, |v| f.value(v));
        worst_opt = worst_opt.max(rel_error(&f.gradient(&theta), &fd));
    }
    Ok([
        ("precision gradient ½Σ − ½A⁻¹", worst_a),
        ("mean gradient Λ⁻¹(ν − μ)", worst_nu),
        ("surrogate objective gradient", worst_opt),
    ]
    .into_iter()
    .map(|(name, e)| GradientCheck {
        name: name.to_string(),
        rel_error: e,
        threshold: THRESHOLD,
        passed: e < THRESHOLD,
    })
    .collect())
}
