//! Task-vector clustering by dataset and by family, the data-size control
//! and the two-pretrained-lineage control.

use std::collections::BTreeMap;

use super::{log, mean, num, pretrain_encoder, run_training, standalone, ExperimentPlan, ExperimentReport, Lab, Table, TrainJob};
use crate::error::{Error, Result};
use crate::geometry::{cluster_task_vectors, pca_2d, task_vector, tsne_2d, ClusterResult, TaskVectorSet, TsneParams};
use crate::regions::weight_id;
use crate::seeding::derive_seed;
use crate::synthgen::subsample;
use crate::trainer::TrainMode;

pub fn run_clustering_suite(plan: &ExperimentPlan) -> Result<ExperimentReport> {
    standalone(plan, clustering_suite)
}

fn distinct(labels: &[String]) -> usize {
    let mut v = labels.to_vec();
    v.sort();
    v.dedup();
    v.len()
}

/// Rejects labellings where some label has fewer than two models.
fn check_support(labels: &[String], what: &str) -> Result<()> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for l in labels {
        *counts.entry(l).or_default() += 1;
    }
    match counts.iter().find(|(_, &c)| c < 2) {
        Some((l, c)) => Err(Error::InvalidArgument(format!(
            "{what}: label {l} has {c} model(s); clustering needs at least 2 per label"
        ))),
        None => Ok(()),
    }
}

fn cluster_by(tvs: &TaskVectorSet, labels: &[String], what: &str, seed: u64) -> Result<ClusterResult> {
    check_support(labels, what)?;
    cluster_task_vectors(&tvs.relabeled(labels.to_vec())?, distinct(labels), seed)
}

fn record(rep: &mut ExperimentReport, acc: &mut Table, f1: &mut Table, key: &str, r: &ClusterResult, n: usize) {
    acc.push(vec![key.into(), num(r.k as f64), num(n as f64), num(r.accuracy)]);
    for (label, v) in &r.per_class_f1 {
        f1.push(vec![key.into(), label.clone(), num(*v)]);
    }
    rep.metric(&format!("clustering.{key}.accuracy"), r.accuracy);
    let f1s: Vec<f64> = r.per_class_f1.values().copied().collect();
    rep.metric(&format!("clustering.{key}.mean_f1"), mean(&f1s));
}

pub fn clustering_suite(lab: &Lab) -> Result<ExperimentReport> {
    let plan = &lab.plan;
    let seed = derive_seed(plan.seed, "clustering");
    let mut rep = ExperimentReport::new(&plan.name);
    let mut acc = Table::new(&["experiment", "k", "models", "accuracy"]);
    let mut f1 = Table::new(&["experiment", "label", "f1"]);

    // same-dataset and same-family clustering of the full grid
    let models: Vec<_> = lab.grid.iter().filter(|m| m.seed_index < plan.cluster_seeds).collect();
    let deltas = models
        .iter()
        .map(|m| task_vector(&m.encoder, &lab.pretrained))
        .collect::<Result<Vec<_>>>()?;
    let ids: Vec<String> = models.iter().map(|m| m.id.clone()).collect();
    let ds: Vec<String> = models.iter().map(|m| lab.dataset_id(m.dataset).to_owned()).collect();
    let fam: Vec<String> = models.iter().map(|m| lab.family_id(m.dataset).to_owned()).collect();
    let tvs = TaskVectorSet::new(deltas, ids, ds.clone())?;
    let by_dataset = cluster_by(&tvs, &ds, "dataset clustering", seed)?;
    let by_family = cluster_by(&tvs, &fam, "family clustering", seed)?;
    record(&mut rep, &mut acc, &mut f1, "dataset", &by_dataset, tvs.len());
    record(&mut rep, &mut acc, &mut f1, "family", &by_family, tvs.len());
    log(format!(
        "clustering: dataset accuracy {:.3}, family accuracy {:.3}",
        by_dataset.accuracy, by_family.accuracy
    ));

    let pca = pca_2d(&tvs.deltas)?;
    let tsne = tsne_2d(&tvs.deltas, &TsneParams::default(), derive_seed(seed, "tsne"))?;
    let mut assign = Table::new(&[
        "model_id",
        "dataset",
        "family",
        "seed_index",
        "dataset_cluster",
        "family_cluster",
        "pca_x",
        "pca_y",
        "tsne_x",
        "tsne_y",
    ]);
    for (i, m) in models.iter().enumerate() {
        assign.push(vec![
            m.id.clone(),
            ds[i].clone(),
            fam[i].clone(),
            m.seed_index.to_string(),
            by_dataset.assignments[i].to_string(),
            by_family.assignments[i].to_string(),
            num(pca[i][0]),
            num(pca[i][1]),
            num(tsne[i][0]),
            num(tsne[i][1]),
        ]);
    }
    let n = tvs.len();
    let mut header = vec!["model_id".to_string()];
    header.extend(tvs.model_ids.iter().cloned());
    let mut sim = Table {
        header,
        rows: Vec::new(),
    };
    for i in 0..n {
        let mut row = vec![tvs.model_ids[i].clone()];
        row.extend(by_dataset.similarity[i * n..(i + 1) * n].iter().map(|&v| num(v)));
        sim.push(row);
    }
    rep.tables.insert("clustering_assignments".into(), assign);
    rep.tables.insert("clustering_similarity".into(), sim);

    size_control(lab, seed, &mut rep, &mut acc, &mut f1)?;
    lineage_control(lab, seed, &mut rep, &mut acc, &mut f1)?;
    rep.tables.insert("clustering_accuracy".into(), acc);
    rep.tables.insert("clustering_f1".into(), f1);
    Ok(rep)
}

/// Models trained on subsamples of several sizes, clustered by dataset and by size.
fn size_control(lab: &Lab, seed: u64, rep: &mut ExperimentReport, acc: &mut Table, f1: &mut Table) -> Result<()> {
    let plan = &lab.plan;
    let mut subsets = Vec::new();
    for (d, pair) in lab.data.iter().enumerate() {
        for &size in &plan.size_grid {
            let id = &pair.spec.dataset_id;
            subsets.push((d, size, subsample(&pair.train, size, derive_seed(seed, &format!("subsample/{id}/{size}")))?));
        }
    }
    let jobs: Vec<TrainJob> = subsets
        .iter()
        .map(|(d, size, set)| {
            let seed = derive_seed(plan.seed, &format!("size/{}/{size}", lab.dataset_id(*d)));
            TrainJob::new(plan, &lab.pretrained, set, plan.finetune.train_config(TrainMode::Full, seed))
        })
        .collect();
    let trained = run_training(&lab.config, &jobs)?;
    let mut deltas = Vec::new();
    let mut ids = Vec::new();
    for t in &trained {
        let enc = t.weights.strip_head()?;
        deltas.push(task_vector(&enc, &lab.pretrained)?);
        ids.push(weight_id(&enc)?);
    }
    let types: Vec<String> = subsets.iter().map(|(d, _, _)| lab.dataset_id(*d).to_owned()).collect();
    let families: Vec<String> = subsets.iter().map(|(d, _, _)| lab.family_id(*d).to_owned()).collect();
    let sizes: Vec<String> = subsets.iter().map(|(_, s, _)| s.to_string()).collect();
    let tvs = TaskVectorSet::new(deltas, ids, types.clone())?;
    let by_type = cluster_by(&tvs, &types, "size control (type)", seed)?;
    let by_family = cluster_by(&tvs, &families, "size control (family)", seed)?;
    let by_size = cluster_by(&tvs, &sizes, "size control (size)", seed)?;
    record(rep, acc, f1, "size_control.type", &by_type, tvs.len());
    record(rep, acc, f1, "size_control.family", &by_family, tvs.len());
    record(rep, acc, f1, "size_control.size", &by_size, tvs.len());
    log(format!(
        "size control: type accuracy {:.3}, size accuracy {:.3}",
        by_type.accuracy, by_size.accuracy
    ));
    let mut t = Table::new(&["model_id", "dataset", "family", "size", "type_cluster", "size_cluster"]);
    for i in 0..tvs.len() {
        t.push(vec![
            tvs.model_ids[i].clone(),
            types[i].clone(),
            families[i].clone(),
            sizes[i].clone(),
            by_type.assignments[i].to_string(),
            by_size.assignments[i].to_string(),
        ]);
    }
    rep.tables.insert("clustering_size_control".into(), t);
    Ok(())
}

/// Fine-tunes from a second, independently initialized pretrained encoder and
/// clusters both lineages together with two clusters.
fn lineage_control(lab: &Lab, seed: u64, rep: &mut ExperimentReport, acc: &mut Table, f1: &mut Table) -> Result<()> {
    let plan = &lab.plan;
    let (pre_b, _) = pretrain_encoder(plan, &lab.config, &lab.families, "pretrain-b")?;
    let mut jobs = Vec::new();
    let mut keys = Vec::new();
    for (d, pair) in lab.data.iter().enumerate() {
        for s in 0..plan.lineage_seeds {
            let seed = derive_seed(plan.seed, &format!("lineage-b/{}/{s}", pair.spec.dataset_id));
            jobs.push(TrainJob::new(plan, &pre_b, &pair.train, plan.finetune.train_config(TrainMode::Full, seed)));
            keys.push(d);
        }
    }
    let trained = run_training(&lab.config, &jobs)?;
    let mid: Vec<f64> = lab
        .pretrained
        .values()
        .iter()
        .zip(pre_b.values())
        .map(|(a, b)| 0.5 * (a + b))
        .collect();
    let mut deltas = Vec::new();
    let mut ids = Vec::new();
    let mut lineage = Vec::new();
    let mut datasets = Vec::new();
    for m in lab.grid.iter().filter(|m| m.seed_index < plan.lineage_seeds) {
        deltas.push(m.encoder.values().iter().zip(&mid).map(|(a, b)| a - b).collect());
        ids.push(m.id.clone());
        lineage.push("A".to_string());
        datasets.push(lab.dataset_id(m.dataset).to_owned());
    }
    for (t, d) in trained.iter().zip(keys) {
        let enc = t.weights.strip_head()?;
        deltas.push(enc.values().iter().zip(&mid).map(|(a, b)| a - b).collect());
        ids.push(weight_id(&enc)?);
        lineage.push("B".to_string());
        datasets.push(lab.dataset_id(d).to_owned());
    }
    let tvs = TaskVectorSet::new(deltas, ids, lineage.clone())?;
    let by_lineage = cluster_by(&tvs, &lineage, "lineage control", seed)?;
    record(rep, acc, f1, "lineage", &by_lineage, tvs.len());
    log(format!("lineage control: accuracy {:.3}", by_lineage.accuracy));
    let mut t = Table::new(&["model_id", "lineage", "dataset", "cluster"]);
    for i in 0..tvs.len() {
        t.push(vec![
            tvs.model_ids[i].clone(),
            lineage[i].clone(),
            datasets[i].clone(),
            by_lineage.assignments[i].to_string(),
        ]);
    }
    rep.tables.insert("clustering_lineage".into(), t);
    Ok(())
}
