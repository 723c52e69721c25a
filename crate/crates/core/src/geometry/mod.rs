//! Task vectors and their geometry: cosine similarity, spectral clustering,
//! optimal cluster-to-label matching and 2-D projections.
//!
//! Clustering runs in the full parameter space. Euclidean distance between
//! task vectors is not used for clustering; norms are still available for
//! radius scans.

mod matching;
mod projection;
mod spectral;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regions::encoder_of;
use crate::weightstore::WeightVector;

pub use matching::{cluster_f1, hungarian, match_labels};
pub use projection::{pca_2d, project_2d, tsne_2d, ProjectionMethod, TsneParams};
pub use spectral::{affinity, kmeans, normalized_laplacian, spectral_cluster, spectral_embedding, KMeansFit};

/// Encoder difference `ft - pre`.
pub fn task_vector(ft: &WeightVector, pre: &WeightVector) -> Result<Vec<f64>> {
    let (ft, pre) = (encoder_of(ft)?, encoder_of(pre)?);
    if !ft.same_layout(&pre) {
        return Err(Error::SegmentMismatch(
            "fine-tuned and pretrained encoders differ in layout".into(),
        ));
    }
    Ok(ft.values().iter().zip(pre.values()).map(|(a, b)| a - b).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskVectorSet {
    pub deltas: Vec<Vec<f64>>,
    pub model_ids: Vec<String>,
    pub truth_labels: Vec<String>,
}

impl TaskVectorSet {
    pub fn new(deltas: Vec<Vec<f64>>, model_ids: Vec<String>, truth_labels: Vec<String>) -> Result<Self> {
        if deltas.len() != model_ids.len() || deltas.len() != truth_labels.len() {
            return Err(Error::Dimension(format!(
                "{} deltas, {} ids, {} labels",
                deltas.len(),
                model_ids.len(),
                truth_labels.len()
            )));
        }
        if let Some(w) = deltas.first().map(Vec::len) {
            if deltas.iter().any(|d| d.len() != w) {
                return Err(Error::Dimension("task vectors differ in length".into()));
            }
        }
        Ok(TaskVectorSet {
            deltas,
            model_ids,
            truth_labels,
        })
    }

    pub fn len(&self) -> usize {
        self.deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }

    /// Same vectors under a different labelling.
    pub fn relabeled(&self, truth_labels: Vec<String>) -> Result<Self> {
        TaskVectorSet::new(self.deltas.clone(), self.model_ids.clone(), truth_labels)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Row-major `n × n` cosine-similarity matrix with an exact unit diagonal.
pub fn cosine_matrix(deltas: &[Vec<f64>], ids: &[String]) -> Result<Vec<f64>> {
    let n = deltas.len();
    let norms: Vec<f64> = deltas.iter().map(|d| dot(d, d).sqrt()).collect();
    if let Some(i) = norms.iter().position(|&x| x == 0.0) {
        let name = ids.get(i).cloned().unwrap_or_else(|| format!("row {i}"));
        return Err(Error::ZeroNorm(name));
    }
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
        for j in i + 1..n {
            let c = (dot(&deltas[i], &deltas[j]) / (norms[i] * norms[j])).clamp(-1.0, 1.0);
            m[i * n + j] = c;
            m[j * n + i] = c;
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterResult {
    pub assignments: Vec<usize>,
    pub k: usize,
    pub mapping: BTreeMap<usize, String>,
    pub accuracy: f64,
    pub per_class_f1: BTreeMap<String, f64>,
    #[serde(skip)]
    pub similarity: Vec<f64>,
}

/// Cosine similarity, spectral clustering with `k` clusters, matching and F1.
pub fn cluster_task_vectors(tvs: &TaskVectorSet, k: usize, seed: u64) -> Result<ClusterResult> {
    let similarity = cosine_matrix(&tvs.deltas, &tvs.model_ids)?;
    let assignments = spectral_cluster(&similarity, tvs.len(), k, seed)?;
    let (mapping, accuracy) = match_labels(&assignments, &tvs.truth_labels, k)?;
    let per_class_f1 = cluster_f1(&assignments, &tvs.truth_labels, &mapping);
    Ok(ClusterResult {
        assignments,
        k,
        mapping,
        accuracy,
        per_class_f1,
        similarity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weightstore::{ParamSegment, SegmentKind};
    use proptest::prelude::*;

    fn flat(values: &[f64]) -> WeightVector {
        let n = values.len();
        WeightVector::new(
            values.to_vec(),
            vec![ParamSegment {
                name: "enc.0.weight".into(),
                offset: 0,
                length: n,
                shape: vec![1, n],
                kind: SegmentKind::EncoderWeight,
            }],
            "flat",
        )
        .unwrap()
    }

    #[test]
    fn task_vector_examples() {
        let pre = flat(&[0.5, -1.0, 2.0]);
        assert_eq!(task_vector(&pre, &pre).unwrap(), vec![0.0; 3]);
        let e1 = flat(&[0.5, 0.0, 2.0]);
        assert_eq!(task_vector(&e1, &pre).unwrap(), vec![0.0, 1.0, 0.0]);
        let short = flat(&[1.0, 2.0]);
        assert!(task_vector(&short, &pre).is_err());
    }

    proptest! {
        #[test]
        fn task_vector_is_linear(a in prop::collection::vec(-4i32..4, 5), b in prop::collection::vec(-4i32..4, 5)) {
            // small integers keep the arithmetic exact
            let pre = flat(&[0.25, -1.0, 3.0, 0.0, 7.5]);
            let add = |x: &[i32]| -> WeightVector {
                flat(&pre.values().iter().zip(x).map(|(p, v)| p + *v as f64).collect::<Vec<_>>())
            };
            let ab: Vec<i32> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
            let da = task_vector(&add(&a), &pre).unwrap();
            let db = task_vector(&add(&b), &pre).unwrap();
            let dab = task_vector(&add(&ab), &pre).unwrap();
            for i in 0..5 {
                prop_assert_eq!(dab[i], da[i] + db[i]);
            }
        }

        #[test]
        fn cosine_is_scale_invariant(rows in prop::collection::vec(prop::collection::vec(0.1f64..2.0, 4), 3), p in -3i32..4) {
            let ids: Vec<String> = (0..3).map(|i| i.to_string()).collect();
            let base = cosine_matrix(&rows, &ids).unwrap();
            let mut scaled = rows.clone();
            let c = 2f64.powi(p);
            scaled[1].iter_mut().for_each(|v| *v *= c);
            prop_assert_eq!(base, cosine_matrix(&scaled, &ids).unwrap());
        }
    }

    #[test]
    fn cosine_examples() {
        let ids: Vec<String> = vec!["a".into(), "b".into()];
        let m = cosine_matrix(&[vec![1.0, 0.0], vec![1.0, 0.0]], &ids).unwrap();
        assert_eq!(m[1], 1.0);
        let m = cosine_matrix(&[vec![1.0, 0.0], vec![0.0, 1.0]], &ids).unwrap();
        assert_eq!(m[1], 0.0);
        let m = cosine_matrix(&[vec![1.0, 0.0], vec![1.0, 1.0]], &ids).unwrap();
        assert!((m[1] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
        assert_eq!(m[1], m[2]);
        assert_eq!((m[0], m[3]), (1.0, 1.0));
        match cosine_matrix(&[vec![1.0, 0.0], vec![0.0, 0.0]], &ids) {
            Err(Error::ZeroNorm(name)) => assert_eq!(name, "b"),
            other => panic!("{other:?}"),
        }
    }
}
