//! Normalized spectral clustering with seeded farthest-first k-means.

use rand::seq::index;

use crate::error::{Error, Result};
use crate::linalg::jacobi_eigen;
use crate::seeding::rng;

/// Restart cap for k-means.
pub const KMEANS_RESTARTS: usize = 100;
const KMEANS_MAX_ITER: usize = 300;

/// `A = (S + 1) / 2` with a zero diagonal.
pub fn affinity(similarity: &[f64], n: usize) -> Vec<f64> {
    let mut a: Vec<f64> = similarity.iter().map(|s| (s + 1.0) / 2.0).collect();
    for i in 0..n {
        a[i * n + i] = 0.0;
    }
    a
}

/// `L = I - D^{-1/2} A D^{-1/2}`; isolated nodes get a zero scaling.
pub fn normalized_laplacian(a: &[f64], n: usize) -> Vec<f64> {
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|i| {
            let d: f64 = a[i * n..(i + 1) * n].iter().sum();
            if d > 0.0 {
                1.0 / d.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let id = if i == j { 1.0 } else { 0.0 };
            l[i * n + j] = id - inv_sqrt[i] * a[i * n + j] * inv_sqrt[j];
        }
    }
    l
}

/// Rows of the `k` smallest Laplacian eigenvectors, each L2-normalized.
pub fn spectral_embedding(similarity: &[f64], n: usize, k: usize) -> Result<Vec<Vec<f64>>> {
    if similarity.len() != n * n {
        return Err(Error::Dimension(format!("similarity is not {n}x{n}")));
    }
    if k < 2 || k > n {
        return Err(Error::InvalidArgument(format!("need 2 <= k <= n, got k={k}, n={n}")));
    }
    for i in 0..n {
        for j in 0..i {
            if (similarity[i * n + j] - similarity[j * n + i]).abs() > 1e-12 {
                return Err(Error::InvalidArgument("similarity is not symmetric".into()));
            }
        }
    }
    let lap = normalized_laplacian(&affinity(similarity, n), n);
    let eig = jacobi_eigen(&lap, n)?;
    let mut rows: Vec<Vec<f64>> = (0..n)
        .map(|i| eig.vectors[..k].iter().map(|v| v[i]).collect())
        .collect();
    for r in &mut rows {
        let norm = r.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            r.iter_mut().for_each(|x| *x /= norm);
        }
    }
    Ok(rows)
}

/// Cluster assignments (relabelled by first appearance) for a similarity matrix.
pub fn spectral_cluster(similarity: &[f64], n: usize, k: usize, seed: u64) -> Result<Vec<usize>> {
    let rows = spectral_embedding(similarity, n, k)?;
    Ok(kmeans(&rows, k, seed)?.assignments)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub assignments: Vec<usize>,
    pub centers: Vec<Vec<f64>>,
    pub inertia: f64,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(p: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.iter().enumerate() {
        let d = sq_dist(p, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn farthest_first(points: &[Vec<f64>], k: usize, first: usize) -> Vec<Vec<f64>> {
    let mut centers = vec![points[first].clone()];
    let mut mind: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let mut far = 0;
        for i in 1..points.len() {
            if mind[i] > mind[far] {
                far = i;
            }
        }
        centers.push(points[far].clone());
        for (m, p) in mind.iter_mut().zip(points) {
            *m = m.min(sq_dist(p, &points[far]));
        }
    }
    centers
}

fn lloyd(points: &[Vec<f64>], mut centers: Vec<Vec<f64>>) -> KMeansFit {
    let k = centers.len();
    let dim = points[0].len();
    let mut assign: Vec<usize> = points.iter().map(|p| nearest(p, &centers).0).collect();
    for _ in 0..KMEANS_MAX_ITER {
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assign) {
            counts[a] += 1;
            sums[a].iter_mut().zip(p).for_each(|(s, x)| *s += x);
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centers).0).collect();
        if next == assign {
            break;
        }
        assign = next;
    }
    let inertia = points
        .iter()
        .zip(&assign)
        .map(|(p, &a)| sq_dist(p, &centers[a]))
        .sum();
    KMeansFit {
        assignments: assign,
        centers,
        inertia,
    }
}

fn relabel_by_first_appearance(assign: &[usize], k: usize) -> Vec<usize> {
    let mut map = vec![usize::MAX; k];
    let mut next = 0;
    assign
        .iter()
        .map(|&a| {
            if map[a] == usize::MAX {
                map[a] = next;
                next += 1;
            }
            map[a]
        })
        .collect()
}

/// K-means with farthest-first seeding. Restarts differ in the first center
/// (a seeded permutation of the points, at most [`KMEANS_RESTARTS`]); the
/// lowest-inertia fit wins, earliest on ties.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Result<KMeansFit> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("k-means with k={k} on {n} points")));
    }
    let mut r = rng(seed);
    let firsts = index::sample(&mut r, n, n.min(KMEANS_RESTARTS)).into_vec();
    let mut best: Option<KMeansFit> = None;
    for first in firsts {
        let fit = lloyd(points, farthest_first(points, k, first));
        if best.as_ref().is_none_or(|b| fit.inertia < b.inertia) {
            best = Some(fit);
        }
    }
    let mut best = best.expect("at least one restart");
    let relabeled = relabel_by_first_appearance(&best.assignments, k);
    let mut centers = best.centers.clone();
    for (old, new) in best.assignments.iter().zip(&relabeled) {
        centers[*new] = best.centers[*old].clone();
    }
    best.assignments = relabeled;
    best.centers = centers;
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block_similarity(sizes: &[usize]) -> (Vec<f64>, Vec<usize>) {
        let truth: Vec<usize> = sizes
            .iter()
            .enumerate()
            .flat_map(|(b, &s)| std::iter::repeat_n(b, s))
            .collect();
        let n = truth.len();
        let mut s = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                s[i * n + j] = if truth[i] == truth[j] { 1.0 } else { -1.0 };
            }
        }
        (s, truth)
    }

    /// Minimum nontrivial cut over all 2-partitions, by enumeration.
    fn brute_force_min_cut(a: &[f64], n: usize) -> Vec<usize> {
        let mut best = (f64::INFINITY, 0u32);
        for mask in 1..(1u32 << n) - 1 {
            if mask & 1 == 0 {
                continue; // fix node 0 on side 1 to skip mirror images
            }
            let mut cut = 0.0;
            for i in 0..n {
                for j in 0..n {
                    if (mask >> i) & 1 == 1 && (mask >> j) & 1 == 0 {
                        cut += a[i * n + j];
                    }
                }
            }
            if cut < best.0 {
                best = (cut, mask);
            }
        }
        (0..n).map(|i| usize::from((best.1 >> i) & 1 == 0)).collect()
    }

    #[test]
    fn two_blocks_are_recovered() {
        let (s, _) = block_similarity(&[4, 5]);
        let n = 9;
        let got = spectral_cluster(&s, n, 2, 3).unwrap();
        let oracle = brute_force_min_cut(&affinity(&s, n), n);
        assert_eq!(got, oracle);
    }

    #[test]
    fn k_equals_n_isolates_points() {
        let pts: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let fit = kmeans(&pts, 6, 1).unwrap();
        assert_eq!(fit.inertia, 0.0);
        let mut a = fit.assignments.clone();
        a.sort_unstable();
        a.dedup();
        assert_eq!(a.len(), 6);
    }

    #[test]
    fn permuting_rows_permutes_assignments() {
        let (s, truth) = block_similarity(&[3, 4, 3]);
        let n = truth.len();
        // soften so the problem is not trivially degenerate
        let mut soft = s.clone();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    soft[i * n + j] = 0.8 * s[i * n + j] + 0.01 * ((i + j) % 3) as f64;
                }
            }
        }
        let base = spectral_cluster(&soft, n, 3, 7).unwrap();
        let perm: Vec<usize> = vec![9, 2, 5, 0, 7, 1, 8, 3, 6, 4];
        let mut ps = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                ps[i * n + j] = soft[perm[i] * n + perm[j]];
            }
        }
        let permuted = spectral_cluster(&ps, n, 3, 7).unwrap();
        // same partition: i ~ j in base iff their images agree in permuted
        for i in 0..n {
            for j in 0..n {
                assert_eq!(
                    permuted[i] == permuted[j],
                    base[perm[i]] == base[perm[j]]
                );
            }
        }
    }

    #[test]
    fn rejects_bad_k() {
        let (s, _) = block_similarity(&[2, 2]);
        assert!(spectral_cluster(&s, 4, 1, 0).is_err());
        assert!(spectral_cluster(&s, 4, 5, 0).is_err());
    }
}
