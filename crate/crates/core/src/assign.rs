//! Maximum-weight perfect matching on a square matrix (Hungarian method).

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Minimum-cost assignment for a square cost matrix given row-major.
/// Returns `col[row]`. O(n³) shortest augmenting path formulation.
pub fn min_cost_assignment(n: usize, cost: &[f64]) -> Vec<usize> {
    assert_eq!(cost.len(), n * n);
    if n == 0 {
        return Vec::new();
    }
    // 1-based potentials; p[j] = row matched to column j
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut col = vec![0; n];
    for j in 1..=n {
        col[p[j] - 1] = j - 1;
    }
    col
}

fn best_total(phi: &Matrix, rows: &[usize], cols: &[usize]) -> f64 {
    let n = rows.len();
    if n == 0 {
        return 0.0;
    }
    let max = phi.data.iter().copied().fold(0.0, f64::max);
    let mut cost = Vec::with_capacity(n * n);
    for &r in rows {
        for &c in cols {
            cost.push(max - phi.get(r, c));
        }
    }
    let a = min_cost_assignment(n, &cost);
    rows.iter()
        .zip(&a)
        .map(|(&r, &j)| phi.get(r, cols[j]))
        .sum()
}

/// Permutation `γ` (row k → column γ[k]) maximizing `Σ_k Φ[k, γ[k]]`.
/// Among optimal permutations the lexicographically smallest is returned.
pub fn assign(phi: &Matrix) -> Result<Vec<usize>> {
    if phi.rows != phi.cols {
        return Err(Error::NonSquare {
            rows: phi.rows,
            cols: phi.cols,
        });
    }
    let n = phi.rows;
    let all: Vec<usize> = (0..n).collect();
    let optimum = best_total(phi, &all, &all);
    let tol = 1e-9 * (1.0 + optimum.abs());
    let mut gamma = Vec::with_capacity(n);
    let mut free = all.clone();
    let mut fixed = 0.0;
    for k in 0..n {
        let rest_rows: Vec<usize> = (k + 1..n).collect();
        let choice = free
            .iter()
            .position(|&c| {
                let cols: Vec<usize> = free.iter().copied().filter(|&x| x != c).collect();
                fixed + phi.get(k, c) + best_total(phi, &rest_rows, &cols) >= optimum - tol
            })
            .expect("some column completes an optimal assignment");
        let c = free.remove(choice);
        fixed += phi.get(k, c);
        gamma.push(c);
    }
    Ok(gamma)
}

pub fn total(phi: &Matrix, gamma: &[usize]) -> f64 {
    gamma.iter().enumerate().map(|(k, &c)| phi.get(k, c)).sum()
}

pub fn inverse(gamma: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; gamma.len()];
    for (k, &c) in gamma.iter().enumerate() {
        inv[c] = k;
    }
    inv
}
