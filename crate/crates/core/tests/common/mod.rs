//! Test-only oracles and random space generators.
//!
//! The spectral oracle does not share code with the library: it projects
//! `D_p` with `P = I − 𝟙𝟙ᵀ/m`, pushes the `𝟙` direction far below the rest
//! of the spectrum, and diagonalizes with a cyclic Jacobi sweep.

#![allow(dead_code, clippy::needless_range_loop)]

use negtype::metric::{self, MetricSpace, NormOrder};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Eigenvalues of a symmetric matrix (row-major `n×n`) by cyclic Jacobi.
pub fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        let scale: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum::<f64>() + off;
        if off <= 1e-30 * scale.max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}

/// Largest eigenvalue of `⟨D_p ξ, ξ⟩` on the zero-sum hyperplane.
pub fn oracle_lambda_max(space: &MetricSpace, p: f64) -> f64 {
    let m = space.len();
    let d: Vec<Vec<f64>> =
        (0..m).map(|i| (0..m).map(|j| if i == j { 0.0 } else { space.dist(i, j).powf(p) }).collect()).collect();
    let mf = m as f64;
    let proj = |i: usize, j: usize| if i == j { 1.0 - 1.0 / mf } else { -1.0 / mf };
    let total: f64 = d.iter().flatten().map(|x| x.abs()).sum();
    let shift = -10.0 * (total + 1.0);
    let mut a = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in 0..m {
            let mut acc = 0.0;
            for k in 0..m {
                for l in 0..m {
                    acc += proj(i, k) * d[k][l] * proj(l, j);
                }
            }
            a[i][j] = acc + shift / mf;
        }
    }
    jacobi_eigenvalues(a).into_iter().fold(f64::NEG_INFINITY, f64::max)
}

/// Brute-force `⟨D_p ξ, ξ⟩` over all ordered pairs.
pub fn oracle_form(space: &MetricSpace, p: f64, xi: &[f64]) -> f64 {
    let m = space.len();
    let mut acc = 0.0;
    for i in 0..m {
        for j in 0..m {
            if i != j {
                acc += space.dist(i, j).powf(p) * xi[i] * xi[j];
            }
        }
    }
    acc
}

/// Random metric space on `m` points, drawn from a mix of families:
/// uniform `[1,2)` matrices, ℓ_1 / ℓ_2 / ℓ_∞ point clouds, weighted graphs.
pub fn random_space(m: usize, rng: &mut ChaCha8Rng) -> MetricSpace {
    match rng.random_range(0..5) {
        0 => metric::random_metric(m, rng.random()).unwrap(),
        1 => random_cloud(m, rng.random_range(1..=4), NormOrder::Finite(1.0), rng),
        2 => random_cloud(m, rng.random_range(1..=4), NormOrder::Finite(2.0), rng),
        3 => random_cloud(m, rng.random_range(2..=4), NormOrder::Infinity, rng),
        _ => random_graph(m, rng),
    }
}

pub fn random_cloud(m: usize, dim: usize, q: NormOrder, rng: &mut ChaCha8Rng) -> MetricSpace {
    loop {
        let coords: Vec<Vec<f64>> = (0..m).map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        if let Ok(space) = metric::from_points(&coords, q) {
            return space;
        }
    }
}

/// Random connected weighted graph: a random spanning path plus extra edges.
pub fn random_graph(m: usize, rng: &mut ChaCha8Rng) -> MetricSpace {
    let perm = metric::random_permutation(m, rng.random());
    let mut edges: Vec<(usize, usize, f64)> =
        perm.windows(2).map(|w| (w[0], w[1], rng.random_range(0.5..2.0))).collect();
    for i in 0..m {
        for j in (i + 1)..m {
            if rng.random_bool(0.3) {
                edges.push((i, j, rng.random_range(0.5..2.0)));
            }
        }
    }
    metric::from_graph(m, &edges).unwrap()
}

/// Random unit vector in the zero-sum hyperplane.
pub fn random_balanced(m: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mean = raw.iter().sum::<f64>() / m as f64;
    let v: Vec<f64> = raw.iter().map(|x| x - mean).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / n).collect()
}

pub fn angle_between(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    // Parallel up to sign.
    (dot.abs() / (na * nb)).min(1.0).acos()
}
