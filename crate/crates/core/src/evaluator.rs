//! Generalized loss by linear probing, family averages and the PB metric.
//!
//! A probe freezes an encoder, attaches a fresh seeded head and fits only the
//! head on the target's training split. The objective is convex in the head
//! parameters, so the fitted loss is essentially independent of the probe
//! seed. The reported generalized loss is the test cross-entropy.

use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regions::{GroupKind, ModelGroup};
use crate::seeding::rng;
use crate::synthgen::DatasetPair;
use crate::trainer::{axpy, dot, encode, softmax_xent, xavier_std, ModelConfig};
use crate::weightstore::WeightVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeConfig {
    /// Initial step; halved whenever a step would increase the loss.
    pub learning_rate: f64,
    pub max_steps: usize,
    pub grad_tol: f64,
    /// Step multiplier after an accepted step, capped at `max_learning_rate`.
    pub growth: f64,
    pub max_learning_rate: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            learning_rate: 1.0,
            max_steps: 1000,
            grad_tol: 1e-6,
            growth: 1.0,
            max_learning_rate: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub model_id: String,
    pub target_dataset_id: String,
    pub probe_train_loss: f64,
    pub generalized_loss: f64,
    pub accuracy: f64,
    pub probe_seed: u64,
    pub converged: bool,
    pub steps: usize,
    /// Test loss of the freshly initialized head.
    pub initial_loss: f64,
}

/// Dense head `[classes, dim]` plus bias, fit by full-batch descent.
#[derive(Debug, Clone)]
struct Head {
    w: Vec<f64>,
    b: Vec<f64>,
    dim: usize,
}

impl Head {
    fn init(classes: usize, dim: usize, seed: u64) -> Self {
        let mut r = rng(seed);
        let std = xavier_std(&[classes, dim]);
        Head {
            w: (0..classes * dim).map(|_| std * r.sample::<f64, _>(StandardNormal)).collect(),
            b: vec![0.0; classes],
            dim,
        }
    }

    fn logits(&self, feats: &[f64], out: &mut [f64]) {
        let k = self.b.len();
        for (fr, zr) in feats.chunks_exact(self.dim).zip(out.chunks_exact_mut(k)) {
            for c in 0..k {
                let wr = &self.w[c * self.dim..(c + 1) * self.dim];
                zr[c] = dot(wr, fr) + self.b[c];
            }
        }
    }

    fn eval(&self, feats: &[f64], labels: &[usize]) -> (f64, f64) {
        let k = self.b.len();
        let mut z = vec![0.0; labels.len() * k];
        self.logits(feats, &mut z);
        softmax_xent(&z, labels, k, None)
    }

    /// Loss at the current point and its gradient, written into `gw`, `gb`.
    fn loss_grad(&self, feats: &[f64], labels: &[usize], gw: &mut [f64], gb: &mut [f64], z: &mut [f64], dz: &mut [f64]) -> f64 {
        let k = self.b.len();
        if k == 2 {
            return self.binary_loss_grad(feats, labels, gw, gb);
        }
        self.logits(feats, z);
        let (loss, _) = softmax_xent(z, labels, k, Some(dz));
        gw.iter_mut().for_each(|g| *g = 0.0);
        gb.iter_mut().for_each(|g| *g = 0.0);
        for (fr, dr) in feats.chunks_exact(self.dim).zip(dz.chunks_exact(k)) {
            for c in 0..k {
                let d = dr[c];
                gb[c] += d;
                axpy(&mut gw[c * self.dim..(c + 1) * self.dim], d, fr);
            }
        }
        loss
    }
}

impl Head {
    /// Two-class case through the logit difference `z1 - z0`; the class-0
    /// gradient is the negated class-1 gradient.
    fn binary_loss_grad(&self, feats: &[f64], labels: &[usize], gw: &mut [f64], gb: &mut [f64]) -> f64 {
        let d = self.dim;
        let u: Vec<f64> = self.w[d..].iter().zip(&self.w[..d]).map(|(a, b)| a - b).collect();
        let c = self.b[1] - self.b[0];
        let n = labels.len() as f64;
        let (g0, g1) = gw.split_at_mut(d);
        g1.iter_mut().for_each(|g| *g = 0.0);
        let mut gbias = 0.0;
        let mut loss = 0.0;
        for (fr, &y) in feats.chunks_exact(d).zip(labels) {
            let t = dot(&u, fr) + c;
            // margin is positive when the true class wins
            let margin = if y == 1 { t } else { -t };
            let e = (-t.abs()).exp();
            loss += (-margin).max(0.0) + e.ln_1p();
            let p1 = if t >= 0.0 { 1.0 / (1.0 + e) } else { e / (1.0 + e) };
            let r = (p1 - y as f64) / n;
            gbias += r;
            axpy(g1, r, fr);
        }
        for (a, b) in g0.iter_mut().zip(g1.iter()) {
            *a = -b;
        }
        gb[0] = -gbias;
        gb[1] = gbias;
        loss / n
    }
}

#[derive(Debug, Clone)]
struct ProbeFit {
    head: Head,
    train_loss: f64,
    converged: bool,
    steps: usize,
}

/// Full-batch descent on the head with step halving on loss increase.
fn fit_head(feats: &[f64], labels: &[usize], mut head: Head, pc: &ProbeConfig) -> Result<ProbeFit> {
    let k = head.b.len();
    let n = labels.len();
    let mut gw = vec![0.0; head.w.len()];
    let mut gb = vec![0.0; k];
    let mut z = vec![0.0; n * k];
    let mut dz = vec![0.0; n * k];
    let mut loss = head.loss_grad(feats, labels, &mut gw, &mut gb, &mut z, &mut dz);
    let mut lr = pc.learning_rate;
    let mut cand = head.clone();
    let mut cgw = gw.clone();
    let mut cgb = gb.clone();
    let mut steps = 0;
    let mut converged = false;
    while steps < pc.max_steps {
        let gnorm = gw.iter().chain(&gb).map(|g| g * g).sum::<f64>().sqrt();
        if gnorm <= pc.grad_tol {
            converged = true;
            break;
        }
        if !loss.is_finite() {
            return Err(Error::Diverged { step: steps, loss });
        }
        steps += 1;
        for ((c, h), g) in cand.w.iter_mut().zip(&head.w).zip(&gw) {
            *c = h - lr * g;
        }
        for ((c, h), g) in cand.b.iter_mut().zip(&head.b).zip(&gb) {
            *c = h - lr * g;
        }
        let cl = cand.loss_grad(feats, labels, &mut cgw, &mut cgb, &mut z, &mut dz);
        if cl <= loss {
            std::mem::swap(&mut head, &mut cand);
            std::mem::swap(&mut gw, &mut cgw);
            std::mem::swap(&mut gb, &mut cgb);
            loss = cl;
            lr = (lr * pc.growth).min(pc.max_learning_rate.max(lr));
        } else {
            lr *= 0.5;
            if lr < 1e-300 {
                break;
            }
        }
    }
    if !converged {
        let gnorm = gw.iter().chain(&gb).map(|g| g * g).sum::<f64>().sqrt();
        converged = gnorm <= pc.grad_tol;
    }
    Ok(ProbeFit {
        head,
        train_loss: loss,
        converged,
        steps,
    })
}

/// Probes `encoder` on `target` with an explicit probe configuration.
pub fn probe(
    encoder: &WeightVector,
    model_id: &str,
    config: &ModelConfig,
    target: &DatasetPair,
    probe_seed: u64,
    pc: &ProbeConfig,
) -> Result<LossReport> {
    if encoder.has_head() {
        return Err(Error::InvalidArgument(
            "probing expects a head-free encoder".into(),
        ));
    }
    let train = encode(encoder, config, &target.train)?;
    let test = encode(encoder, config, &target.test)?;
    let head = Head::init(config.label_count, config.feature_dim(), probe_seed);
    let (initial_loss, _) = head.eval(&test, &target.test.labels);
    let fit = fit_head(&train, &target.train.labels, head, pc)?;
    let (generalized_loss, accuracy) = fit.head.eval(&test, &target.test.labels);
    if !generalized_loss.is_finite() {
        return Err(Error::Diverged {
            step: fit.steps,
            loss: generalized_loss,
        });
    }
    Ok(LossReport {
        model_id: model_id.to_owned(),
        target_dataset_id: target.spec.dataset_id.clone(),
        probe_train_loss: fit.train_loss,
        generalized_loss,
        accuracy,
        probe_seed,
        converged: fit.converged,
        steps: fit.steps,
        initial_loss,
    })
}

/// Generalized loss of a head-free encoder on `target` (default probe).
pub fn generalized_loss(
    encoder: &WeightVector,
    config: &ModelConfig,
    target: &DatasetPair,
    probe_seed: u64,
) -> Result<LossReport> {
    let id = crate::regions::weight_id(encoder)?;
    probe(encoder, &id, config, target, probe_seed, &ProbeConfig::default())
}

/// Mean generalized loss over a family's datasets.
pub fn family_loss(
    encoder: &WeightVector,
    config: &ModelConfig,
    family: &[&DatasetPair],
    probe_seed: u64,
    pc: &ProbeConfig,
) -> Result<f64> {
    if family.is_empty() {
        return Err(Error::InvalidArgument("family has no datasets".into()));
    }
    let id = crate::regions::weight_id(encoder)?;
    let losses = family
        .iter()
        .map(|d| probe(encoder, &id, config, d, probe_seed, pc).map(|r| r.generalized_loss))
        .collect::<Result<Vec<_>>>()?;
    Ok(mean(&losses))
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Fraction of pairs `(i, j)` with `in_losses[i] <= ex_losses[j]`.
pub fn pb(in_losses: &[f64], ex_losses: &[f64]) -> Result<f64> {
    pb_with(in_losses, ex_losses, |a, b| a <= b)
}

/// Same as [`pb`] with strict `<`.
pub fn pb_strict(in_losses: &[f64], ex_losses: &[f64]) -> Result<f64> {
    pb_with(in_losses, ex_losses, |a, b| a < b)
}

fn pb_with(a: &[f64], b: &[f64], wins: impl Fn(f64, f64) -> bool) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument("PB needs two nonempty loss lists".into()));
    }
    let count = a
        .iter()
        .map(|&x| b.iter().filter(|&&y| wins(x, y)).count())
        .sum::<usize>();
    Ok(count as f64 / (a.len() * b.len()) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossRow {
    pub model_id: String,
    pub source_dataset: Option<String>,
    pub target_dataset_id: String,
    pub generalized_loss: f64,
    pub accuracy: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupLossTable {
    pub group_name: GroupKind,
    pub rows: Vec<LossRow>,
    pub aggregate: f64,
}

impl GroupLossTable {
    /// Mean loss per member over the table's targets, in member order.
    pub fn per_model(&self) -> Vec<(String, f64)> {
        let mut out: Vec<(String, Vec<f64>)> = Vec::new();
        for r in &self.rows {
            match out.iter_mut().find(|(id, _)| *id == r.model_id) {
                Some((_, v)) => v.push(r.generalized_loss),
                None => out.push((r.model_id.clone(), vec![r.generalized_loss])),
            }
        }
        out.into_iter().map(|(id, v)| (id, mean(&v))).collect()
    }

    pub fn write_csv(&self, path: &Path, append_to: Option<&mut csv::Writer<std::fs::File>>) -> Result<()> {
        match append_to {
            Some(w) => self.write_rows(w),
            None => {
                let mut w = loss_csv_writer(path)?;
                self.write_rows(&mut w)?;
                w.flush().map_err(|e| Error::io(path, e))
            }
        }
    }

    fn write_rows(&self, w: &mut csv::Writer<std::fs::File>) -> Result<()> {
        for r in &self.rows {
            w.write_record([
                self.group_name.as_str(),
                &r.model_id,
                r.source_dataset.as_deref().unwrap_or(""),
                &r.target_dataset_id,
                &r.generalized_loss.to_string(),
                &r.accuracy.to_string(),
                &r.converged.to_string(),
            ])?;
        }
        Ok(())
    }
}

pub const LOSS_CSV_HEADER: [&str; 7] = [
    "group",
    "model_id",
    "source_dataset",
    "target_dataset",
    "generalized_loss",
    "accuracy",
    "converged",
];

/// CSV writer with the loss-table header already written.
pub fn loss_csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(LOSS_CSV_HEADER)?;
    Ok(w)
}

/// Probes every member on every target.
pub fn group_eval(
    group: &ModelGroup,
    targets: &[&DatasetPair],
    config: &ModelConfig,
    probe_seed: u64,
    pc: &ProbeConfig,
) -> Result<GroupLossTable> {
    if targets.is_empty() {
        return Err(Error::InvalidArgument("group_eval needs targets".into()));
    }
    if group.config_id != config.config_id() {
        return Err(Error::InvalidArgument(format!(
            "group config {} does not match {}",
            group.config_id,
            config.config_id()
        )));
    }
    let jobs: Vec<(usize, usize)> = (0..group.len())
        .flat_map(|m| (0..targets.len()).map(move |t| (m, t)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(m, t)| {
            let member = &group.members[m];
            let rep = probe(&member.weights, &member.id, config, targets[t], probe_seed, pc)?;
            Ok(LossRow {
                model_id: member.id.clone(),
                source_dataset: member.source_dataset.clone(),
                target_dataset_id: rep.target_dataset_id,
                generalized_loss: rep.generalized_loss,
                accuracy: rep.accuracy,
                converged: rep.converged,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let aggregate = mean(&rows.iter().map(|r| r.generalized_loss).collect::<Vec<_>>());
    Ok(GroupLossTable {
        group_name: group.name,
        rows,
        aggregate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    /// Exhaustive pair count, written independently of `pb_with`.
    fn pb_oracle(a: &[f64], b: &[f64]) -> f64 {
        let mut wins = 0.0;
        let mut total = 0.0;
        for x in a {
            for y in b {
                total += 1.0;
                if x <= y {
                    wins += 1.0;
                }
            }
        }
        wins / total
    }

    #[test]
    fn pb_examples() {
        assert_eq!(pb(&[0.5, 0.5], &[0.5, 0.5]).unwrap(), 1.0);
        assert_eq!(pb(&[0.1, 0.3], &[0.2, 0.4]).unwrap(), 0.75);
        assert_eq!(pb(&[0.9, 0.8], &[0.1, 0.2]).unwrap(), 0.0);
        assert!(pb(&[], &[0.1]).is_err());
        assert!(pb(&[0.1], &[]).is_err());
    }

    proptest! {
        #[test]
        fn pb_matches_enumeration(a in prop::collection::vec(0.0f64..1.0, 1..12),
                                  b in prop::collection::vec(0.0f64..1.0, 1..12)) {
            prop_assert_eq!(pb(&a, &b).unwrap(), pb_oracle(&a, &b));
        }

        #[test]
        fn pb_self_comparison(a in prop::collection::vec(-5i32..5, 1..20), c in -5.0f64..5.0) {
            let a: Vec<f64> = a.iter().map(|&x| x as f64).collect();
            let n = a.len();
            let equal_pairs = a.iter().map(|x| a.iter().filter(|y| x == *y).count()).sum::<usize>();
            let expected = (n * n + equal_pairs) as f64 / (2 * n * n) as f64;
            prop_assert_eq!(pb(&a, &a).unwrap(), expected);
            prop_assert_eq!(pb(&vec![c; n], &vec![c; n]).unwrap(), 1.0);
        }

        #[test]
        fn pb_complements_strict(a in prop::collection::vec(0u32..1_000_000, 1..10),
                                 b in prop::collection::vec(0u32..1_000_000, 1..10)) {
            // distinct values across lists: no ties
            let a: Vec<f64> = a.iter().map(|&x| 2.0 * x as f64).collect();
            let b: Vec<f64> = b.iter().map(|&x| 2.0 * x as f64 + 1.0).collect();
            let s = pb(&a, &b).unwrap() + pb_strict(&b, &a).unwrap();
            prop_assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fit_head_descends_monotonically() {
        let mut r = rng(4);
        let n = 200;
        let dim = 5;
        let feats: Vec<f64> = (0..n * dim).map(|_| r.sample::<f64, _>(StandardNormal).tanh()).collect();
        let labels: Vec<usize> = (0..n)
            .map(|i| usize::from(feats[i * dim] + 0.5 * r.sample::<f64, _>(StandardNormal) > 0.0))
            .collect();
        let head = Head::init(2, dim, 1);
        let mut prev = head.eval(&feats, &labels).0;
        let mut h = head;
        for _ in 0..20 {
            let pc = ProbeConfig {
                max_steps: 10,
                ..ProbeConfig::default()
            };
            let fit = fit_head(&feats, &labels, h, &pc).unwrap();
            assert!(fit.train_loss <= prev);
            prev = fit.train_loss;
            h = fit.head;
        }
    }
}
