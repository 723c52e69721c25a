//! Desk-scale experiment suites and the end-to-end reproduction driver.
//!
//! A [`Lab`] owns everything the suites share: generated datasets, the
//! pretrained encoder, the fine-tuned model grid and a cache of probe
//! results keyed by encoder digest and target. Suites only append rows to
//! tables; every summary number is an aggregate of rows they emit.

mod clustering;
mod edges;
mod fusion;
mod pb;
mod scans;

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::evaluator::{probe, LossReport, ProbeConfig};
use crate::regions::{weight_id, GroupKind, GroupMember, ModelGroup};
use crate::seeding::derive_seed;
use crate::synthgen::{builtin_families, gen_dataset, pretrain_corpus, DatasetPair, LabeledSet, TaskFamilySpec};
use crate::trainer::{evaluate, finetune_with_head, pretrain, ModelConfig, TrainConfig, TrainMetrics, TrainMode, Trained};
use crate::weightstore::{CheckpointManifest, CheckpointRole, CheckpointStore, WeightVector, CONFIG_ID_KEY};

pub use clustering::{clustering_suite, run_clustering_suite};
pub use edges::{edge_suite, run_edge_suite};
pub use fusion::{fusion_suite, run_fusion_suite};
pub use pb::{pb_suite, run_pb_suite};
pub use scans::{extrapolation_suite, interpolation_suite, run_extrapolation_suite, run_interpolation_suite};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Granularity {
    SameDataset,
    SameTask,
    General,
}

impl Granularity {
    pub const ALL: [Granularity; 3] = [Granularity::SameDataset, Granularity::SameTask, Granularity::General];

    pub fn as_str(self) -> &'static str {
        match self {
            Granularity::SameDataset => "same-dataset",
            Granularity::SameTask => "same-task",
            Granularity::General => "general",
        }
    }
}

/// Optimizer settings for one training stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageConfig {
    pub learning_rate: f64,
    pub steps: usize,
    pub batch_size: usize,
}

impl StageConfig {
    pub fn train_config(&self, mode: TrainMode, seed: u64) -> TrainConfig {
        TrainConfig {
            mode,
            learning_rate: self.learning_rate,
            steps: self.steps,
            batch_size: self.batch_size,
            seed,
            max_examples: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentPlan {
    pub name: String,
    /// Granularity for single-suite commands that take one.
    pub granularity: Granularity,
    pub seed: u64,
    pub input_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub datasets_per_family: usize,
    /// Empty means the three built-in families.
    pub families: Vec<TaskFamilySpec>,
    /// Dataset ids used as targets; empty means every dataset.
    pub targets: Vec<String>,
    pub n_train: usize,
    pub n_test: usize,
    pub pretrain_size: usize,
    pub pretrain: StageConfig,
    pub finetune: StageConfig,
    pub fusion: StageConfig,
    /// One head initialization shared by every fine-tuning run (run seeds then
    /// only vary the data order) instead of one per run.
    pub shared_head: bool,
    /// Fine-tuning seeds per dataset used by the region suites.
    pub seeds_per_dataset: usize,
    /// Fine-tuning seeds per dataset used by same-dataset clustering.
    pub cluster_seeds: usize,
    pub size_grid: Vec<usize>,
    /// Seeds per dataset and lineage in the two-pretrained control.
    pub lineage_seeds: usize,
    pub probe: ProbeConfig,
    pub interpolation_points: usize,
    /// Same-dataset interpolation pairs per dataset.
    pub pairs_per_dataset: usize,
    pub general_pairs: usize,
    /// Size of the random-direction exterior group.
    pub random_models: usize,
    pub radii: Vec<f64>,
    pub random_directions: usize,
    pub few_shot: usize,
    pub output_dir: PathBuf,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        ExperimentPlan {
            name: "desk".into(),
            granularity: Granularity::SameDataset,
            seed: 0,
            input_dim: 32,
            hidden_dims: vec![64, 32],
            datasets_per_family: 3,
            families: Vec::new(),
            targets: Vec::new(),
            n_train: 2048,
            n_test: 1024,
            pretrain_size: 4096,
            pretrain: StageConfig {
                learning_rate: 0.05,
                steps: 500,
                batch_size: 128,
            },
            finetune: StageConfig {
                learning_rate: 0.5,
                steps: 2000,
                batch_size: 32,
            },
            fusion: StageConfig {
                learning_rate: 0.5,
                steps: 500,
                batch_size: 128,
            },
            shared_head: true,
            seeds_per_dataset: 5,
            cluster_seeds: 8,
            size_grid: vec![256, 512, 1024],
            lineage_seeds: 2,
            probe: ProbeConfig::default(),
            interpolation_points: 11,
            pairs_per_dataset: 2,
            general_pairs: 2,
            random_models: 20,
            radii: vec![0.25, 0.5, 1.0, 2.0, 4.0, 8.0],
            random_directions: 5,
            few_shot: 64,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentPlan {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let plan: ExperimentPlan = serde_json::from_str(&text)?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn families(&self) -> Vec<TaskFamilySpec> {
        if self.families.is_empty() {
            builtin_families(self.input_dim, self.datasets_per_family, derive_seed(self.seed, "families"))
        } else {
            self.families.clone()
        }
    }

    /// Head seed of a fine-tuning run with seed `run_seed`.
    pub fn head_seed(&self, run_seed: u64) -> u64 {
        if self.shared_head {
            derive_seed(self.seed, "head")
        } else {
            derive_seed(run_seed, "head")
        }
    }

    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            input_dim: self.input_dim,
            hidden_dims: self.hidden_dims.clone(),
            label_count: 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(format!("plan {}: {msg}", self.name)));
        if self.seeds_per_dataset < 2 {
            return bad("seeds_per_dataset must be >= 2".into());
        }
        if self.cluster_seeds < 2 || self.lineage_seeds < 1 {
            return bad("cluster_seeds must be >= 2 and lineage_seeds >= 1".into());
        }
        if self.lineage_seeds > self.cluster_seeds.max(self.seeds_per_dataset) {
            return bad("lineage_seeds cannot exceed the trained seeds per dataset".into());
        }
        if self.interpolation_points < 2 || self.pairs_per_dataset == 0 {
            return bad("need >= 2 interpolation points and >= 1 pair per dataset".into());
        }
        if self.pairs_per_dataset * 2 > self.seeds_per_dataset {
            return bad("each interpolation pair needs two seeds of its own".into());
        }
        if self.radii.is_empty() || self.radii.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return bad("radii must be finite and non-negative".into());
        }
        if self.random_models == 0 || self.random_directions == 0 {
            return bad("random_models and random_directions must be >= 1".into());
        }
        if self.size_grid.len() < 2 {
            return bad("size_grid needs at least two sizes".into());
        }
        if let Some(&s) = self.size_grid.iter().find(|&&s| s < 64 || s > self.n_train) {
            return bad(format!("subsample size {s} outside [64, n_train]"));
        }
        if self.few_shot == 0 {
            return bad("few_shot must be >= 1".into());
        }
        self.model_config().validate()?;
        let families = self.families();
        for f in &families {
            f.validate()?;
        }
        let specs: Vec<_> = families.iter().flat_map(|f| f.datasets(self.n_train, self.n_test)).collect();
        for spec in &specs {
            spec.validate()?;
        }
        let ids: Vec<String> = specs.into_iter().map(|d| d.dataset_id).collect();
        if let Some(t) = self.targets.iter().find(|t| !ids.contains(t)) {
            return bad(format!("unknown target dataset {t}"));
        }
        Ok(())
    }
}

/// CSV-shaped table with string cells.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Formats a number the same way everywhere (shortest round-trip form).
pub(crate) fn num(x: f64) -> String {
    format!("{x}")
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentReport {
    pub plan_name: String,
    pub tables: BTreeMap<String, Table>,
    /// SVG documents by name.
    pub figures: BTreeMap<String, String>,
    pub summary: BTreeMap<String, Value>,
}

impl ExperimentReport {
    pub fn new(plan_name: &str) -> Self {
        ExperimentReport {
            plan_name: plan_name.to_owned(),
            ..Default::default()
        }
    }

    pub fn metric(&mut self, key: &str, value: f64) {
        self.summary.insert(key.to_owned(), serde_json::json!(value));
    }

    pub fn flag(&mut self, key: &str, value: bool) {
        self.summary.insert(key.to_owned(), Value::Bool(value));
    }

    pub fn number(&self, key: &str) -> Option<f64> {
        self.summary.get(key).and_then(Value::as_f64)
    }

    pub fn merge(&mut self, other: ExperimentReport) {
        self.tables.extend(other.tables);
        self.figures.extend(other.figures);
        self.summary.extend(other.summary);
    }

    /// Writes `tables/*.csv`, `figures/*.svg` and `summary.json` under `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let tables = dir.join("tables");
        let figures = dir.join("figures");
        for d in [&tables, &figures] {
            fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
        }
        for (name, t) in &self.tables {
            t.write_csv(&tables.join(format!("{name}.csv")))?;
        }
        for (name, svg) in &self.figures {
            let p = figures.join(format!("{name}.svg"));
            fs::write(&p, svg).map_err(|e| Error::io(&p, e))?;
        }
        let mut doc = serde_json::Map::new();
        doc.insert("plan".into(), Value::String(self.plan_name.clone()));
        doc.insert(
            "metrics".into(),
            Value::Object(self.summary.clone().into_iter().collect()),
        );
        let p = dir.join("summary.json");
        let text = serde_json::to_string_pretty(&Value::Object(doc))? + "\n";
        fs::write(&p, text).map_err(|e| Error::io(&p, e))
    }
}

pub(crate) fn log(msg: impl AsRef<str>) {
    eprintln!("[wrl] {}", msg.as_ref());
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population standard deviation.
pub(crate) fn std_dev(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64).sqrt()
}

/// One fine-tuned model of the grid.
#[derive(Debug, Clone)]
pub struct GridModel {
    pub id: String,
    pub dataset: usize,
    pub seed_index: usize,
    pub encoder: WeightVector,
    pub metrics: TrainMetrics,
    pub test_accuracy: f64,
}

/// A fine-tuning request.
#[derive(Debug, Clone)]
pub(crate) struct TrainJob<'a> {
    pub start: &'a WeightVector,
    pub head_seed: u64,
    pub data: &'a LabeledSet,
    pub tc: TrainConfig,
}

impl<'a> TrainJob<'a> {
    pub fn new(plan: &ExperimentPlan, start: &'a WeightVector, data: &'a LabeledSet, tc: TrainConfig) -> Self {
        TrainJob {
            start,
            head_seed: plan.head_seed(tc.seed),
            data,
            tc,
        }
    }
}

/// Shared state of a desk-scale replication.
pub struct Lab {
    pub plan: ExperimentPlan,
    pub config: ModelConfig,
    pub families: Vec<TaskFamilySpec>,
    pub data: Vec<DatasetPair>,
    pub targets: Vec<usize>,
    pub pretrained: WeightVector,
    pub pretrained_id: String,
    pub pretrain_accuracy: f64,
    pub grid: Vec<GridModel>,
    store: Option<CheckpointStore>,
    cache: RefCell<BTreeMap<(String, usize), LossReport>>,
    probe_seed: u64,
}

impl Lab {
    /// Generates data, pretrains and fine-tunes the model grid.
    pub fn new(plan: &ExperimentPlan, store: Option<CheckpointStore>) -> Result<Self> {
        plan.validate()?;
        let t0 = Instant::now();
        let config = plan.model_config();
        let families = plan.families();
        let data = generate_data(plan, &families)?;
        let targets = if plan.targets.is_empty() {
            (0..data.len()).collect()
        } else {
            plan.targets
                .iter()
                .map(|t| data.iter().position(|d| &d.spec.dataset_id == t).expect("validated"))
                .collect()
        };
        let (pretrained, pretrain_accuracy) = pretrain_encoder(plan, &config, &families, "pretrain")?;
        let pretrained_id = weight_id(&pretrained)?;
        log(format!(
            "pretrained {} (proxy accuracy {:.3}) in {:.1}s",
            &pretrained_id[..12],
            pretrain_accuracy,
            t0.elapsed().as_secs_f64()
        ));

        let mut lab = Lab {
            plan: plan.clone(),
            config,
            families,
            data,
            targets,
            pretrained,
            pretrained_id,
            pretrain_accuracy,
            grid: Vec::new(),
            store,
            cache: RefCell::new(BTreeMap::new()),
            probe_seed: derive_seed(plan.seed, "probe"),
        };
        if let Some(store) = &lab.store {
            let mut m = CheckpointManifest::new(CheckpointRole::Pretrained, derive_seed(plan.seed, "pretrain"));
            m.hyperparams.insert(CONFIG_ID_KEY.into(), lab.config.config_id());
            m.metrics.insert("proxy_train_accuracy".into(), pretrain_accuracy);
            store.save(&lab.pretrained, m)?;
        }
        lab.train_grid()?;
        log(format!("model grid ready: {} models in {:.1}s", lab.grid.len(), t0.elapsed().as_secs_f64()));
        Ok(lab)
    }

    fn train_grid(&mut self) -> Result<()> {
        let seeds = self.plan.cluster_seeds.max(self.plan.seeds_per_dataset);
        let mut jobs = Vec::new();
        let mut keys = Vec::new();
        for (d, pair) in self.data.iter().enumerate() {
            for s in 0..seeds {
                let seed = self.finetune_seed(d, s);
                jobs.push(TrainJob::new(
                    &self.plan,
                    &self.pretrained,
                    &pair.train,
                    self.plan.finetune.train_config(TrainMode::Full, seed),
                ));
                keys.push((d, s, seed));
            }
        }
        let trained = run_training(&self.config, &jobs)?;
        let mut grid = Vec::with_capacity(trained.len());
        for ((d, s, seed), t) in keys.into_iter().zip(trained) {
            let (_, test_accuracy) = evaluate(&t.weights, &self.config, &self.data[d].test)?;
            if let Some(store) = &self.store {
                let mut m = CheckpointManifest::new(CheckpointRole::Finetuned, seed);
                m.source_dataset_id = Some(self.data[d].spec.dataset_id.clone());
                m.family_id = Some(self.data[d].spec.family_id.clone());
                m.parent_pretrained_id = Some(self.pretrained_id.clone());
                m.hyperparams.insert(CONFIG_ID_KEY.into(), self.config.config_id());
                m.hyperparams.insert("mode".into(), "full".into());
                m.metrics.insert("final_train_loss".into(), t.metrics.final_train_loss);
                m.metrics.insert("final_train_accuracy".into(), t.metrics.final_train_accuracy);
                m.metrics.insert("test_accuracy".into(), test_accuracy);
                store.save(&t.weights, m)?;
            }
            let encoder = t.weights.strip_head()?;
            grid.push(GridModel {
                id: weight_id(&encoder)?,
                dataset: d,
                seed_index: s,
                encoder,
                metrics: t.metrics,
                test_accuracy,
            });
        }
        self.grid = grid;
        Ok(())
    }

    pub(crate) fn finetune_seed(&self, dataset: usize, seed_index: usize) -> u64 {
        finetune_seed(&self.plan, &self.data[dataset].spec.dataset_id, seed_index)
    }

    pub fn dataset_id(&self, d: usize) -> &str {
        &self.data[d].spec.dataset_id
    }

    pub fn family_id(&self, d: usize) -> &str {
        &self.data[d].spec.family_id
    }

    /// Dataset indices of a family, in generation order.
    pub fn family_datasets(&self, family: &str) -> Vec<usize> {
        (0..self.data.len()).filter(|&d| self.family_id(d) == family).collect()
    }

    /// Grid models of dataset `d` used by the region suites.
    pub fn in_models(&self, d: usize) -> Vec<&GridModel> {
        self.grid
            .iter()
            .filter(|m| m.dataset == d && m.seed_index < self.plan.seeds_per_dataset)
            .collect()
    }

    pub fn group_of(&self, models: &[&GridModel], name: GroupKind, provenance: &str) -> Result<ModelGroup> {
        let members = models
            .iter()
            .map(|m| GroupMember::new(&m.encoder, Some(self.dataset_id(m.dataset)), Some(self.family_id(m.dataset))))
            .collect::<Result<Vec<_>>>()?;
        ModelGroup::new(name, members, provenance)
    }

    /// Probes every `(encoder, target)` job, reusing cached results.
    pub fn probe_many(&self, jobs: &[(&WeightVector, usize)]) -> Result<Vec<LossReport>> {
        let ids = jobs
            .iter()
            .map(|(w, _)| weight_id(w))
            .collect::<Result<Vec<_>>>()?;
        let mut todo: Vec<usize> = Vec::new();
        {
            let cache = self.cache.borrow();
            let mut queued = std::collections::BTreeSet::new();
            for (i, (id, (_, t))) in ids.iter().zip(jobs).enumerate() {
                let key = (id.clone(), *t);
                if !cache.contains_key(&key) && queued.insert(key) {
                    todo.push(i);
                }
            }
        }
        let (config, data, seed, pc) = (&self.config, &self.data, self.probe_seed, &self.plan.probe);
        let fresh = todo
            .par_iter()
            .map(|&i| {
                let (w, t) = jobs[i];
                probe(w, &ids[i], config, &data[t], seed, pc)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut cache = self.cache.borrow_mut();
        for (&i, r) in todo.iter().zip(fresh) {
            cache.insert((ids[i].clone(), jobs[i].1), r);
        }
        Ok(ids
            .iter()
            .zip(jobs)
            .map(|(id, (_, t))| cache[&(id.clone(), *t)].clone())
            .collect())
    }

    pub fn probes_run(&self) -> usize {
        self.cache.borrow().len()
    }

    pub(crate) fn save_derived(&self, w: &WeightVector, provenance: &str, seed: u64) -> Result<()> {
        if let Some(store) = &self.store {
            let mut m = CheckpointManifest::new(CheckpointRole::Derived, seed);
            m.parent_pretrained_id = Some(self.pretrained_id.clone());
            m.hyperparams.insert(CONFIG_ID_KEY.into(), self.config.config_id());
            m.hyperparams.insert("provenance".into(), provenance.into());
            store.save(w, m)?;
        }
        Ok(())
    }
}

/// Every dataset of the plan's families, in family order.
pub fn generate_data(plan: &ExperimentPlan, families: &[TaskFamilySpec]) -> Result<Vec<DatasetPair>> {
    let data_seed = derive_seed(plan.seed, "data");
    let mut data = Vec::new();
    for f in families {
        for spec in f.datasets(plan.n_train, plan.n_test) {
            data.push(gen_dataset(&spec, f, data_seed)?);
        }
    }
    Ok(data)
}

/// Seed of grid run `seed_index` on `dataset_id`.
pub fn finetune_seed(plan: &ExperimentPlan, dataset_id: &str, seed_index: usize) -> u64 {
    derive_seed(plan.seed, &format!("finetune/{dataset_id}/{seed_index}"))
}

/// Pretrains an encoder on the proxy corpus; `stream` names the seed stream.
pub fn pretrain_encoder(
    plan: &ExperimentPlan,
    config: &ModelConfig,
    families: &[TaskFamilySpec],
    stream: &str,
) -> Result<(WeightVector, f64)> {
    let corpus = pretrain_corpus(families, plan.pretrain_size, derive_seed(plan.seed, "corpus"))?;
    let tc = plan.pretrain.train_config(TrainMode::Full, derive_seed(plan.seed, stream));
    let trained = pretrain(config, &corpus, &tc)?;
    Ok((trained.weights.strip_head()?, trained.metrics.final_train_accuracy))
}

pub(crate) fn run_training(config: &ModelConfig, jobs: &[TrainJob<'_>]) -> Result<Vec<Trained>> {
    jobs.par_iter()
        .map(|j| finetune_with_head(j.start, j.head_seed, config, j.data, &j.tc))
        .collect()
}

type Suite = fn(&Lab) -> Result<ExperimentReport>;

/// Runs every suite on one shared lab and writes the report to `plan.output_dir`.
pub fn reproduce_all(plan: &ExperimentPlan, store: Option<CheckpointStore>) -> Result<ExperimentReport> {
    reproduce_all_timed(plan, store).map(|(report, _)| report)
}

/// [`reproduce_all`] plus wall-clock seconds per phase: `lab` (data,
/// pretraining and the model grid), one entry per suite, and `total`.
pub fn reproduce_all_timed(
    plan: &ExperimentPlan,
    store: Option<CheckpointStore>,
) -> Result<(ExperimentReport, BTreeMap<String, f64>)> {
    let t0 = Instant::now();
    let mut timings = BTreeMap::new();
    let lab = Lab::new(plan, store)?;
    timings.insert("lab".to_string(), t0.elapsed().as_secs_f64());
    let mut report = ExperimentReport::new(&plan.name);
    let suites: [(&str, Suite); 6] = [
        ("clustering", clustering_suite),
        ("pb", pb_suite),
        ("interpolation", interpolation_suite),
        ("extrapolation", extrapolation_suite),
        ("edges", edge_suite),
        ("fusion", fusion_suite),
    ];
    for (name, suite) in suites {
        let t = Instant::now();
        report.merge(suite(&lab)?);
        let secs = t.elapsed().as_secs_f64();
        timings.insert(name.to_string(), secs);
        log(format!("{name} suite done in {secs:.1}s ({} probes so far)", lab.probes_run()));
    }
    let mut keys = Table::new(&["key", "value"]);
    for (k, v) in &report.summary {
        keys.push(vec![k.clone(), v.to_string()]);
    }
    report.tables.insert("summary".into(), keys);
    report.write(&plan.output_dir)?;
    let total = t0.elapsed().as_secs_f64();
    timings.insert("total".to_string(), total);
    log(format!("reproduce-all finished in {total:.1}s"));
    Ok((report, timings))
}

/// Builds a lab for `plan` without a store and runs one suite on it.
pub(crate) fn standalone(plan: &ExperimentPlan, suite: Suite) -> Result<ExperimentReport> {
    let lab = Lab::new(plan, None)?;
    let report = suite(&lab)?;
    report.write(&plan.output_dir)?;
    Ok(report)
}
