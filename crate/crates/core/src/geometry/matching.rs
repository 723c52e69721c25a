//! One-to-one cluster/label matching and per-class F1.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Minimum-cost assignment of every row to a distinct column (`rows <= cols`).
///
/// Potentials-based Hungarian algorithm, O(rows² · cols).
pub fn hungarian(cost: &[Vec<f64>]) -> Result<Vec<usize>> {
    let n = cost.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let m = cost[0].len();
    if cost.iter().any(|r| r.len() != m) || n > m {
        return Err(Error::Dimension(format!(
            "hungarian needs a rectangular matrix with rows <= cols (got {n} rows, {m} cols)"
        )));
    }
    // 1-based internals; column 0 is the virtual start
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0; n];
    for j in 1..=m {
        if owner[j] != 0 {
            assign[owner[j] - 1] = j - 1;
        }
    }
    Ok(assign)
}

fn distinct_labels(truth: &[String]) -> Vec<String> {
    let mut labels: Vec<String> = truth.to_vec();
    labels.sort();
    labels.dedup();
    labels
}

/// Injective cluster → label map maximizing the matched count, plus accuracy.
///
/// With more labels than clusters every cluster gets a distinct label and
/// the surplus labels stay unmatched.
pub fn match_labels(
    assignments: &[usize],
    truth_labels: &[String],
    k: usize,
) -> Result<(BTreeMap<usize, String>, f64)> {
    if assignments.len() != truth_labels.len() || assignments.is_empty() {
        return Err(Error::Dimension(
            "assignments and labels must be nonempty and equally long".into(),
        ));
    }
    if let Some(&a) = assignments.iter().find(|&&a| a >= k) {
        return Err(Error::InvalidArgument(format!("cluster {a} out of range for k={k}")));
    }
    let labels = distinct_labels(truth_labels);
    let mut confusion = vec![vec![0.0; k]; labels.len()];
    for (&c, t) in assignments.iter().zip(truth_labels) {
        let l = labels.binary_search(t).expect("label collected above");
        confusion[l][c] += 1.0;
    }
    let cost: Vec<Vec<f64>> = confusion
        .iter()
        .map(|row| row.iter().map(|x| -x).collect())
        .collect();
    let pairs: Vec<(usize, usize)> = if labels.len() <= k {
        hungarian(&cost)?.into_iter().enumerate().collect()
    } else {
        let transposed: Vec<Vec<f64>> = (0..k).map(|c| cost.iter().map(|row| row[c]).collect()).collect();
        hungarian(&transposed)?
            .into_iter()
            .enumerate()
            .map(|(c, l)| (l, c))
            .collect()
    };
    let mut mapping = BTreeMap::new();
    let mut matched = 0.0;
    for (l, c) in pairs {
        mapping.insert(c, labels[l].clone());
        matched += confusion[l][c];
    }
    Ok((mapping, matched / assignments.len() as f64))
}

/// Per-label F1 treating each point's mapped cluster as its predicted label.
///
/// Points in unmapped clusters predict nothing; a label that is never
/// predicted correctly scores 0.
pub fn cluster_f1(
    assignments: &[usize],
    truth_labels: &[String],
    mapping: &BTreeMap<usize, String>,
) -> BTreeMap<String, f64> {
    let labels = distinct_labels(truth_labels);
    labels
        .into_iter()
        .map(|label| {
            let mut tp = 0usize;
            let mut fp = 0usize;
            let mut fneg = 0usize;
            for (c, t) in assignments.iter().zip(truth_labels) {
                let predicted = mapping.get(c) == Some(&label);
                let actual = *t == label;
                match (predicted, actual) {
                    (true, true) => tp += 1,
                    (true, false) => fp += 1,
                    (false, true) => fneg += 1,
                    _ => {}
                }
            }
            let f1 = if tp == 0 {
                0.0
            } else {
                let p = tp as f64 / (tp + fp) as f64;
                let r = tp as f64 / (tp + fneg) as f64;
                2.0 * p * r / (p + r)
            };
            (label, f1)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::rng;
    use rand::Rng;

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
        if items.len() <= 1 {
            return vec![items.to_vec()];
        }
        let mut out = Vec::new();
        for i in 0..items.len() {
            let mut rest = items.to_vec();
            let x = rest.remove(i);
            for mut p in permutations(&rest) {
                p.insert(0, x);
                out.push(p);
            }
        }
        out
    }

    /// Best matched count over every injective label → cluster map.
    fn brute_force_best(assign: &[usize], truth: &[usize], k: usize, labels: usize) -> usize {
        let mut best = 0;
        for perm in permutations(&(0..k).collect::<Vec<_>>()) {
            let hits = assign
                .iter()
                .zip(truth)
                .filter(|(&c, &t)| perm[..labels].iter().position(|&pc| pc == c) == Some(t))
                .count();
            best = best.max(hits);
        }
        best
    }

    #[test]
    fn hungarian_equals_factorial_brute_force() {
        let mut r = rng(2024);
        for trial in 0..200 {
            let k = r.random_range(1..=6);
            let labels = r.random_range(1..=k);
            let n = r.random_range(labels..=20);
            let mut truth: Vec<usize> = (0..labels).collect();
            truth.extend((labels..n).map(|_| r.random_range(0..labels)));
            let assign: Vec<usize> = (0..n).map(|_| r.random_range(0..k)).collect();
            let names: Vec<String> = truth.iter().map(|t| format!("L{t}")).collect();
            let (_, acc) = match_labels(&assign, &names, k).unwrap();
            let best = brute_force_best(&assign, &truth, k, labels);
            assert_eq!((acc * n as f64).round() as usize, best, "trial {trial}");
        }
    }

    #[test]
    fn renamed_clusters_match_perfectly() {
        let truth = s(&["a", "a", "b", "c", "c", "b"]);
        let (mapping, acc) = match_labels(&[2, 2, 0, 1, 1, 0], &truth, 3).unwrap();
        assert_eq!(acc, 1.0);
        assert_eq!(mapping[&2], "a");
        let f1 = cluster_f1(&[2, 2, 0, 1, 1, 0], &truth, &mapping);
        assert!(f1.values().all(|&v| v == 1.0));
    }

    #[test]
    fn single_cluster_takes_the_majority() {
        let mut truth = s(&["x"; 7]);
        truth.extend(s(&["y"; 3]));
        let (_, acc) = match_labels(&[0; 10], &truth, 1).unwrap();
        assert!((acc - 0.7).abs() < 1e-12);
    }

    #[test]
    fn surplus_labels_stay_unmatched() {
        let truth = s(&["a", "a", "b", "c", "c", "c"]);
        let (mapping, acc) = match_labels(&[0, 0, 1, 1, 1, 1], &truth, 2).unwrap();
        assert_eq!(mapping.len(), 2);
        assert_eq!(mapping[&1], "c");
        assert!((acc - 5.0 / 6.0).abs() < 1e-12);
        assert!(match_labels(&[2, 0], &s(&["a", "b"]), 2).is_err());
    }

    #[test]
    fn f1_on_known_confusion() {
        // truth a a a b b b c c c; predicted via mapping 0->a, 1->b, 2->c
        let truth = s(&["a", "a", "a", "b", "b", "b", "c", "c", "c"]);
        let assign = [0, 0, 1, 1, 1, 2, 2, 2, 0];
        let mapping: BTreeMap<usize, String> =
            [(0, "a".to_string()), (1, "b".into()), (2, "c".into())].into();
        let f1 = cluster_f1(&assign, &truth, &mapping);
        // a: tp 2, fp 1, fn 1 -> P 2/3 R 2/3 F1 2/3
        // b: tp 2, fp 1, fn 1 -> 2/3 ; c: tp 2, fp 1, fn 1 -> 2/3
        for v in f1.values() {
            assert!((v - 2.0 / 3.0).abs() < 1e-12);
        }
        let uneven = [0, 0, 0, 0, 1, 2, 2, 2, 2];
        let f1 = cluster_f1(&uneven, &truth, &mapping);
        // a: tp 3 fp 1 fn 0 -> P .75 R 1 F1 6/7
        // b: tp 1 fp 0 fn 2 -> P 1 R 1/3 F1 .5
        // c: tp 3 fp 1 fn 0 -> 6/7
        assert!((f1["a"] - 6.0 / 7.0).abs() < 1e-12);
        assert!((f1["b"] - 0.5).abs() < 1e-12);
        assert!((f1["c"] - 6.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn never_predicted_label_scores_zero() {
        let truth = s(&["a", "b", "b"]);
        let mapping: BTreeMap<usize, String> = [(0, "b".to_string())].into();
        let f1 = cluster_f1(&[0, 0, 0], &truth, &mapping);
        assert_eq!(f1["a"], 0.0);
    }
}
