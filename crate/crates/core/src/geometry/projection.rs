//! 2-D projections of task vectors for figures.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::jacobi_eigen;
use crate::seeding::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProjectionMethod {
    Pca,
    Tsne,
}

pub fn project_2d(deltas: &[Vec<f64>], method: ProjectionMethod, seed: u64) -> Result<Vec<[f64; 2]>> {
    match method {
        ProjectionMethod::Pca => pca_2d(deltas),
        ProjectionMethod::Tsne => tsne_2d(deltas, &TsneParams::default(), seed),
    }
}

fn check_points(deltas: &[Vec<f64>]) -> Result<usize> {
    let n = deltas.len();
    if n < 3 {
        return Err(Error::InvalidArgument("projection needs at least 3 points".into()));
    }
    let dim = deltas[0].len();
    if deltas.iter().any(|d| d.len() != dim) {
        return Err(Error::Dimension("points differ in dimension".into()));
    }
    if deltas.iter().all(|d| d == &deltas[0]) {
        return Err(Error::InvalidArgument(
            "degenerate covariance: all points identical".into(),
        ));
    }
    Ok(n)
}

/// Top-2 principal component scores via the centered Gram matrix.
///
/// Each component's sign is fixed so its largest-magnitude score is positive.
pub fn pca_2d(deltas: &[Vec<f64>]) -> Result<Vec<[f64; 2]>> {
    let n = check_points(deltas)?;
    let dim = deltas[0].len();
    let mut mean = vec![0.0; dim];
    for d in deltas {
        mean.iter_mut().zip(d).for_each(|(m, x)| *m += x / n as f64);
    }
    let centered: Vec<Vec<f64>> = deltas
        .iter()
        .map(|d| d.iter().zip(&mean).map(|(x, m)| x - m).collect())
        .collect();
    let mut gram = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let g: f64 = centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum();
            gram[i * n + j] = g;
            gram[j * n + i] = g;
        }
    }
    let eig = jacobi_eigen(&gram, n)?;
    let mut out = vec![[0.0; 2]; n];
    for c in 0..2 {
        let idx = n - 1 - c;
        let lam = eig.values[idx].max(0.0);
        let v = &eig.vectors[idx];
        let pivot = v
            .iter()
            .enumerate()
            .fold(0, |b, (i, x)| if x.abs() > v[b].abs() { i } else { b });
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            out[i][c] = sign * v[i] * lam.sqrt();
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TsneParams {
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub early_exaggeration: f64,
    pub exaggeration_iters: usize,
}

impl Default for TsneParams {
    fn default() -> Self {
        TsneParams {
            perplexity: 15.0,
            iterations: 500,
            learning_rate: 100.0,
            early_exaggeration: 12.0,
            exaggeration_iters: 100,
        }
    }
}

/// Row-conditional affinities matched to `perplexity` by bisection on beta.
fn conditional_p(d2: &[f64], n: usize, perplexity: f64) -> Vec<f64> {
    let target = perplexity.ln();
    let mut p = vec![0.0; n * n];
    for i in 0..n {
        let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
        let mut beta = 1.0;
        let row = &d2[i * n..(i + 1) * n];
        let dmin = row
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &d)| d)
            .fold(f64::INFINITY, f64::min);
        for _ in 0..200 {
            let mut sum = 0.0;
            let mut wsum = 0.0;
            for j in 0..n {
                if j != i {
                    let e = (-(row[j] - dmin) * beta).exp();
                    p[i * n + j] = e;
                    sum += e;
                    wsum += (row[j] - dmin) * e;
                }
            }
            let entropy = sum.ln() + beta * wsum / sum;
            for j in 0..n {
                p[i * n + j] /= sum;
            }
            let diff = entropy - target;
            if diff.abs() < 1e-8 {
                break;
            }
            if diff > 0.0 {
                lo = beta;
                beta = if hi.is_finite() { 0.5 * (beta + hi) } else { beta * 2.0 };
            } else {
                hi = beta;
                beta = 0.5 * (beta + lo);
            }
        }
    }
    p
}

/// Exact O(n²) t-SNE with early exaggeration, momentum and gains.
///
/// Perplexity is capped at `(n - 1) / 3` for small inputs.
pub fn tsne_2d(deltas: &[Vec<f64>], params: &TsneParams, seed: u64) -> Result<Vec<[f64; 2]>> {
    let n = check_points(deltas)?;
    let mut d2 = vec![0.0; n * n];
    let mut scale = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            let d: f64 = deltas[i].iter().zip(&deltas[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            d2[i * n + j] = d;
            d2[j * n + i] = d;
            scale = scale.max(d);
        }
    }
    d2.iter_mut().for_each(|d| *d /= scale);
    let perplexity = params.perplexity.min((n - 1) as f64 / 3.0).max(1.0);
    let cond = conditional_p(&d2, n, perplexity);
    let mut p = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            p[i * n + j] = ((cond[i * n + j] + cond[j * n + i]) / (2.0 * n as f64)).max(1e-12);
        }
    }

    let mut r = rng(seed);
    let mut y: Vec<[f64; 2]> = (0..n)
        .map(|_| [1e-4 * r.sample::<f64, _>(StandardNormal), 1e-4 * r.sample::<f64, _>(StandardNormal)])
        .collect();
    let mut vel = vec![[0.0; 2]; n];
    let mut gains = vec![[1.0f64; 2]; n];
    let mut q = vec![0.0; n * n];
    for it in 0..params.iterations {
        let exag = if it < params.exaggeration_iters { params.early_exaggeration } else { 1.0 };
        let momentum = if it < 250 { 0.5 } else { 0.8 };
        let mut qsum = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                let dx = y[i][0] - y[j][0];
                let dy = y[i][1] - y[j][1];
                let w = 1.0 / (1.0 + dx * dx + dy * dy);
                q[i * n + j] = w;
                q[j * n + i] = w;
                qsum += 2.0 * w;
            }
        }
        for i in 0..n {
            let mut g = [0.0; 2];
            for j in 0..n {
                if i == j {
                    continue;
                }
                let w = q[i * n + j];
                let coef = 4.0 * (exag * p[i * n + j] - w / qsum) * w;
                g[0] += coef * (y[i][0] - y[j][0]);
                g[1] += coef * (y[i][1] - y[j][1]);
            }
            for c in 0..2 {
                gains[i][c] = if (g[c] > 0.0) != (vel[i][c] > 0.0) {
                    gains[i][c] + 0.2
                } else {
                    (gains[i][c] * 0.8).max(0.01)
                };
                vel[i][c] = momentum * vel[i][c] - params.learning_rate * gains[i][c] * g[c];
            }
        }
        for i in 0..n {
            y[i][0] += vel[i][0];
            y[i][1] += vel[i][1];
        }
        let mean = y.iter().fold([0.0; 2], |m, v| [m[0] + v[0] / n as f64, m[1] + v[1] / n as f64]);
        for v in &mut y {
            v[0] -= mean[0];
            v[1] -= mean[1];
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rank2_points(offset: f64) -> Vec<Vec<f64>> {
        let a = [1.0, 2.0, -1.0, 0.5, 0.0];
        let b = [0.0, 1.0, 1.0, -2.0, 3.0];
        let coefs = [(0.0, 1.0), (2.0, -1.0), (-1.5, 0.3), (0.7, 2.2), (3.0, 0.0)];
        coefs
            .iter()
            .map(|(s, t)| (0..5).map(|k| s * a[k] + t * b[k] + offset).collect())
            .collect()
    }

    fn dist(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    }

    #[test]
    fn pca_is_exact_on_rank_two_data() {
        let pts = rank2_points(0.0);
        let proj = pca_2d(&pts).unwrap();
        for i in 0..pts.len() {
            for j in 0..pts.len() {
                let err = (dist(&pts[i], &pts[j]) - dist(&proj[i], &proj[j])).abs();
                assert!(err <= 1e-9, "{err}");
            }
        }
    }

    #[test]
    fn pca_ignores_translation() {
        let a = pca_2d(&rank2_points(0.0)).unwrap();
        let b = pca_2d(&rank2_points(5.5)).unwrap();
        for (p, q) in a.iter().zip(&b) {
            for c in 0..2 {
                assert!((p[c].abs() - q[c].abs()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn identical_points_are_degenerate() {
        let pts = vec![vec![1.0, 2.0]; 4];
        assert!(pca_2d(&pts).is_err());
        assert!(pca_2d(&pts[..2]).is_err());
    }

    #[test]
    fn tsne_is_deterministic_and_separates_blobs() {
        let mut pts = Vec::new();
        for c in 0..2 {
            for i in 0..8 {
                let mut p = vec![10.0 * c as f64; 6];
                p[i % 6] += 0.1 * i as f64;
                pts.push(p);
            }
        }
        let a = tsne_2d(&pts, &TsneParams::default(), 3).unwrap();
        let b = tsne_2d(&pts, &TsneParams::default(), 3).unwrap();
        assert_eq!(a, b);
        let centroid = |r: std::ops::Range<usize>| {
            let m = r.len() as f64;
            a[r].iter().fold([0.0; 2], |s, v| [s[0] + v[0] / m, s[1] + v[1] / m])
        };
        let (c0, c1) = (centroid(0..8), centroid(8..16));
        let between = dist(&c0, &c1);
        let within = a[..8].iter().map(|v| dist(v, &c0)).fold(0.0, f64::max);
        assert!(between > within, "{between} vs {within}");
    }
}
