//! `wrl`: command-line entry point for the weight-space region lab.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::json;
use wrl_core::evaluator::probe;
use wrl_core::experiments::{
    self, finetune_seed, generate_data, pretrain_encoder, reproduce_all_timed, ExperimentPlan, ExperimentReport, Table,
};
use wrl_core::geometry::{cluster_task_vectors, project_2d, task_vector, ProjectionMethod, TaskVectorSet};
use wrl_core::plot::{emit_svg_lineplot, LinePlot};
use wrl_core::regions::{
    centroid, exclude_target_centroid, extrapolation_schedules, hull_sample, interpolate_pair, AlphaSchedule,
    GroupMember, ModelGroup,
};
use wrl_core::seeding::derive_seed;
use wrl_core::synthgen::{write_csv, DatasetPair};
use wrl_core::trainer::{evaluate, finetune_with_head, TrainMode};
use wrl_core::weightstore::{CheckpointManifest, CheckpointRole, CheckpointStore, CONFIG_ID_KEY};
use wrl_core::{Error, GroupKind, ModelConfig, WeightVector};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_INTEGRITY: u8 = 3;

#[derive(Parser)]
#[command(name = "wrl", version, about = "Weight-space region lab")]
struct Cli {
    /// Checkpoint store directory.
    #[arg(long, env = "WRL_STORE", default_value = "wrl-store", global = true)]
    store: PathBuf,
    /// Output directory for tables, figures and summary.json; defaults to the plan's.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Global seed; overrides the plan's.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Experiment plan (JSON); missing fields take their defaults.
    #[arg(long, global = true)]
    plan: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate every dataset of the plan as CSV under <out>/data.
    GenData,
    /// Pretrain the shared encoder and save it to the store.
    Pretrain,
    /// Fine-tune every dataset with several seeds and save the models.
    FinetuneGrid(GridArgs),
    /// Linear-probe one checkpoint on target datasets.
    Probe(ProbeArgs),
    /// Cluster the stored fine-tuned models' task vectors.
    Cluster(ClusterArgs),
    /// 2-D projection of the stored task vectors.
    Project(ProjectArgs),
    /// Interpolate between two checkpoints (or run the interpolation suite).
    Interpolate(PairArgs),
    /// Extrapolate along two checkpoints (or run the extrapolation suite).
    Extrapolate(PairArgs),
    /// Sample models from the convex hull of stored fine-tuned models.
    HullSample(HullArgs),
    /// PB of two loss tables (or run the PB suite).
    Pb(PbArgs),
    /// Average stored fine-tuned models into a centroid checkpoint.
    Centroid(CentroidArgs),
    /// Run the centroid-fusion suite.
    Fuse,
    /// Run the radius-scan suite.
    EdgeScan,
    /// Render a CSV table (or every curve table under <out>/tables) as SVG.
    Report(ReportArgs),
    /// Run every suite and write summary.json.
    ReproduceAll,
}

#[derive(Args)]
struct GridArgs {
    /// Seeds per dataset (default: the plan's seeds_per_dataset).
    #[arg(long)]
    seeds: Option<usize>,
    /// Pretrained checkpoint to start from; pretrains a new one when absent.
    #[arg(long)]
    pretrained: Option<String>,
    /// Datasets to fine-tune on (default: the plan's targets, else every dataset).
    #[arg(long)]
    dataset: Vec<String>,
}

#[derive(Args)]
struct ProbeArgs {
    #[arg(long)]
    model: String,
    /// Target dataset ids (default: every dataset).
    #[arg(long)]
    dataset: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum LabelBy {
    Dataset,
    Family,
}

#[derive(Args)]
struct ClusterArgs {
    #[arg(long, value_enum, default_value = "dataset")]
    by: LabelBy,
    /// Run the full clustering suite on a fresh lab instead.
    #[arg(long)]
    suite: bool,
    /// Pretrained parent (default: the most recent one in the store).
    #[arg(long)]
    pretrained: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Pca,
    Tsne,
}

#[derive(Args)]
struct ProjectArgs {
    #[arg(long, value_enum, default_value = "pca")]
    method: Method,
    #[arg(long)]
    pretrained: Option<String>,
}

#[derive(Args)]
struct PairArgs {
    #[arg(long, requires_all = ["second", "dataset"])]
    first: Option<String>,
    #[arg(long, requires = "first")]
    second: Option<String>,
    /// Target dataset for probing.
    #[arg(long)]
    dataset: Option<String>,
    /// Interpolation grid size (default: the plan's).
    #[arg(long)]
    points: Option<usize>,
}

#[derive(Args)]
struct HullArgs {
    /// Restrict the group to models of one dataset.
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long, default_value_t = 8)]
    count: usize,
    #[arg(long)]
    pretrained: Option<String>,
}

#[derive(Args)]
struct PbArgs {
    /// In-group losses: CSV with a generalized_loss column (else the first column).
    #[arg(long = "in", requires = "ex")]
    in_csv: Option<PathBuf>,
    /// Ex-group losses, same format.
    #[arg(long = "ex", requires = "in_csv")]
    ex: Option<PathBuf>,
}

#[derive(Args)]
struct CentroidArgs {
    /// Restrict the group to models of one dataset.
    #[arg(long)]
    dataset: Option<String>,
    /// Leave out every model fine-tuned on this dataset.
    #[arg(long, conflicts_with = "dataset")]
    exclude: Option<String>,
    #[arg(long)]
    pretrained: Option<String>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    table: Option<PathBuf>,
    #[arg(long, default_value = "alpha")]
    x: String,
    #[arg(long, default_value = "mean_loss")]
    y: String,
    #[arg(long, default_value = "std_loss")]
    std: String,
    /// Column whose values split the rows into series.
    #[arg(long)]
    group: Option<String>,
    #[arg(long, default_value = "")]
    title: String,
    /// Output file (default: <out>/figures/<table stem>.svg).
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn usage(msg: impl Into<String>) -> Self {
        Failure { code: EXIT_USAGE, msg: msg.into() }
    }

    fn data(msg: impl Into<String>) -> Self {
        Failure { code: EXIT_DATA, msg: msg.into() }
    }

    fn integrity(msg: impl Into<String>) -> Self {
        Failure { code: EXIT_INTEGRITY, msg: msg.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Integrity { .. } | Error::MissingCheckpoint(_) | Error::Format(_) => EXIT_INTEGRITY,
            Error::InvalidArgument(_) => EXIT_USAGE,
            _ => EXIT_DATA,
        };
        Failure { code, msg: e.to_string() }
    }
}

type Outcome<T = ()> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("wrl: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

fn load_plan(cli: &Cli) -> Outcome<ExperimentPlan> {
    let mut plan = match &cli.plan {
        Some(p) => ExperimentPlan::from_json_file(p)
            .map_err(|e| Failure::data(format!("invalid plan file {}: {e}", p.display())))?,
        None => ExperimentPlan::default(),
    };
    if let Some(s) = cli.seed {
        plan.seed = s;
    }
    if let Some(o) = &cli.out {
        plan.output_dir = o.clone();
    }
    plan.validate().map_err(|e| Failure::data(e.to_string()))?;
    Ok(plan)
}

fn run(cli: Cli) -> Outcome {
    if let Some(w) = cli.workers {
        if w == 0 {
            return Err(Failure::usage("--workers must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| Failure::usage(e.to_string()))?;
    }
    let plan = load_plan(&cli)?;
    let ctx = Ctx { plan, store_path: cli.store };
    match cli.command {
        Command::GenData => ctx.gen_data(),
        Command::Pretrain => ctx.pretrain().map(|id| println!("{id}")),
        Command::FinetuneGrid(a) => ctx.finetune_grid(a),
        Command::Probe(a) => ctx.probe(a),
        Command::Cluster(a) if a.suite => suite(experiments::run_clustering_suite(&ctx.plan)?),
        Command::Cluster(a) => ctx.cluster(a),
        Command::Project(a) => ctx.project(a),
        Command::Interpolate(a) if a.first.is_none() => suite(experiments::run_interpolation_suite(&ctx.plan)?),
        Command::Interpolate(a) => ctx.pair_scan(a, false),
        Command::Extrapolate(a) if a.first.is_none() => suite(experiments::run_extrapolation_suite(&ctx.plan)?),
        Command::Extrapolate(a) => ctx.pair_scan(a, true),
        Command::HullSample(a) => ctx.hull_sample(a),
        Command::Pb(PbArgs { in_csv: Some(i), ex: Some(e) }) => {
            let v = wrl_core::pb(&read_losses(&i)?, &read_losses(&e)?)?;
            println!("{v}");
            Ok(())
        }
        Command::Pb(_) => suite(experiments::run_pb_suite(&ctx.plan)?),
        Command::Centroid(a) => ctx.centroid(a),
        Command::Fuse => suite(experiments::run_fusion_suite(&ctx.plan)?),
        Command::EdgeScan => suite(experiments::run_edge_suite(&ctx.plan)?),
        Command::Report(a) => ctx.report(a),
        Command::ReproduceAll => {
            let store = CheckpointStore::open(&ctx.store_path)?;
            let (report, timings) = reproduce_all_timed(&ctx.plan, Some(store))?;
            for (k, v) in &timings {
                eprintln!("time.{k}\t{v:.1}s");
            }
            suite(report)
        }
    }
}

fn suite(report: ExperimentReport) -> Outcome {
    for (k, v) in &report.summary {
        println!("{k}\t{v}");
    }
    Ok(())
}

/// Reads one loss column: `generalized_loss` when present, else the first.
fn read_losses(path: &Path) -> Outcome<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .from_path(path)
        .map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
    let headers = rdr.headers().map_err(|e| Failure::data(e.to_string()))?.clone();
    let col = headers.iter().position(|h| h == "generalized_loss").unwrap_or(0);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Failure::data(e.to_string()))?;
        let v = rec.get(col).unwrap_or("").trim();
        out.push(
            v.parse()
                .map_err(|_| Failure::data(format!("{}: not a number: {v:?}", path.display())))?,
        );
    }
    if out.is_empty() {
        return Err(Failure::data(format!("{}: no losses", path.display())));
    }
    Ok(out)
}

/// A stored fine-tuned encoder.
struct Stored {
    id: String,
    dataset: String,
    family: String,
    encoder: WeightVector,
}

struct Ctx {
    plan: ExperimentPlan,
    store_path: PathBuf,
}

impl Ctx {
    fn store(&self) -> Outcome<CheckpointStore> {
        Ok(CheckpointStore::open(&self.store_path)?)
    }

    fn out_dir(&self, sub: &str) -> Outcome<PathBuf> {
        let dir = self.plan.output_dir.join(sub);
        fs::create_dir_all(&dir).map_err(|e| Failure::data(format!("{}: {e}", dir.display())))?;
        Ok(dir)
    }

    fn config(&self) -> ModelConfig {
        self.plan.model_config()
    }

    fn data(&self) -> Outcome<Vec<DatasetPair>> {
        Ok(generate_data(&self.plan, &self.plan.families())?)
    }

    fn dataset<'a>(&self, data: &'a [DatasetPair], id: &str) -> Outcome<&'a DatasetPair> {
        data.iter()
            .find(|d| d.spec.dataset_id == id)
            .ok_or_else(|| Failure::usage(format!("unknown dataset {id}")))
    }

    /// Loads a checkpoint as a head-free encoder of the plan's architecture.
    fn encoder(&self, store: &CheckpointStore, id: &str) -> Outcome<(WeightVector, CheckpointManifest)> {
        let (w, m) = store.load(id)?;
        let want = self.config().config_id();
        if w.model_config_id() != want {
            return Err(Failure::data(format!(
                "checkpoint {id} has model config {}, plan expects {want}",
                w.model_config_id()
            )));
        }
        let enc = if w.has_head() { w.strip_head()? } else { w };
        Ok((enc, m))
    }

    fn pretrained(&self, store: &CheckpointStore, id: Option<&str>) -> Outcome<(WeightVector, String)> {
        let id = match id {
            Some(id) => id.to_owned(),
            None => store
                .manifests()?
                .into_iter()
                .rev()
                .find(|m| m.role == CheckpointRole::Pretrained)
                .map(|m| m.checkpoint_id)
                .ok_or_else(|| Failure::integrity("no pretrained checkpoint in the store"))?,
        };
        let (w, _) = self.encoder(store, &id)?;
        Ok((w, id))
    }

    /// Fine-tuned checkpoints whose parent is `parent`, in index order.
    fn finetuned(&self, store: &CheckpointStore, parent: &str) -> Outcome<Vec<Stored>> {
        let mut seen = std::collections::BTreeSet::new();
        let mut out = Vec::new();
        for m in store.manifests()? {
            if m.role != CheckpointRole::Finetuned
                || m.parent_pretrained_id.as_deref() != Some(parent)
                || !seen.insert(m.checkpoint_id.clone())
            {
                continue;
            }
            let (encoder, _) = self.encoder(store, &m.checkpoint_id)?;
            out.push(Stored {
                id: m.checkpoint_id,
                dataset: m.source_dataset_id.unwrap_or_default(),
                family: m.family_id.unwrap_or_default(),
                encoder,
            });
        }
        if out.is_empty() {
            return Err(Failure::integrity(format!("no fine-tuned checkpoints of {parent} in the store")));
        }
        Ok(out)
    }

    fn group(&self, models: &[&Stored], kind: GroupKind, provenance: &str) -> Outcome<ModelGroup> {
        let members = models
            .iter()
            .map(|m| GroupMember::new(&m.encoder, Some(&m.dataset), Some(&m.family)))
            .collect::<wrl_core::Result<Vec<_>>>()?;
        Ok(ModelGroup::new(kind, members, provenance)?)
    }

    fn save_derived(&self, store: &CheckpointStore, w: &WeightVector, parent: &str, extra: &[(&str, String)]) -> Outcome<String> {
        let mut m = CheckpointManifest::new(CheckpointRole::Derived, self.plan.seed);
        m.parent_pretrained_id = Some(parent.to_owned());
        m.hyperparams.insert(CONFIG_ID_KEY.into(), self.config().config_id());
        for (k, v) in extra {
            m.hyperparams.insert((*k).into(), v.clone());
        }
        Ok(store.save(w, m)?)
    }

    fn gen_data(&self) -> Outcome {
        let dir = self.out_dir("data")?;
        let data = self.data()?;
        let mut index = Vec::new();
        for d in &data {
            let id = &d.spec.dataset_id;
            write_csv(&[&d.train, &d.test], &dir.join(format!("{id}.csv")))?;
            println!("{id}\t{}\t{}\t{}", d.spec.family_id, d.train.len(), d.test.len());
            index.push(json!({"spec": d.spec, "meta": d.meta}));
        }
        let p = dir.join("datasets.json");
        let text = serde_json::to_string_pretty(&index).map_err(|e| Failure::data(e.to_string()))?;
        fs::write(&p, text + "\n").map_err(|e| Failure::data(format!("{}: {e}", p.display())))
    }

    fn pretrain(&self) -> Outcome<String> {
        let config = self.config();
        let (enc, acc) = pretrain_encoder(&self.plan, &config, &self.plan.families(), "pretrain")?;
        let mut m = CheckpointManifest::new(CheckpointRole::Pretrained, derive_seed(self.plan.seed, "pretrain"));
        m.hyperparams.insert(CONFIG_ID_KEY.into(), config.config_id());
        m.metrics.insert("proxy_train_accuracy".into(), acc);
        eprintln!("proxy train accuracy {acc:.4}");
        Ok(self.store()?.save(&enc, m)?)
    }

    fn finetune_grid(&self, a: GridArgs) -> Outcome {
        let store = self.store()?;
        let pre_id = match a.pretrained {
            Some(id) => id,
            None => self.pretrain()?,
        };
        let (pre, pre_id) = self.pretrained(&store, Some(&pre_id))?;
        let seeds = a.seeds.unwrap_or(self.plan.seeds_per_dataset);
        if seeds == 0 {
            return Err(Failure::usage("--seeds must be at least 1"));
        }
        let config = self.config();
        let data = self.data()?;
        let ids = if a.dataset.is_empty() { &self.plan.targets } else { &a.dataset };
        let chosen: Vec<usize> = if ids.is_empty() {
            (0..data.len()).collect()
        } else {
            ids.iter()
                .map(|id| {
                    data.iter()
                        .position(|d| &d.spec.dataset_id == id)
                        .ok_or_else(|| Failure::usage(format!("unknown dataset {id}")))
                })
                .collect::<Outcome<_>>()?
        };
        let jobs: Vec<(usize, u64)> = chosen
            .into_iter()
            .flat_map(|d| (0..seeds).map(move |s| (d, s)))
            .map(|(d, s)| (d, finetune_seed(&self.plan, &data[d].spec.dataset_id, s)))
            .collect();
        let trained = jobs
            .par_iter()
            .map(|&(d, seed)| {
                let tc = self.plan.finetune.train_config(TrainMode::Full, seed);
                let t = finetune_with_head(&pre, self.plan.head_seed(seed), &config, &data[d].train, &tc)?;
                let (_, acc) = evaluate(&t.weights, &config, &data[d].test)?;
                Ok((t, acc))
            })
            .collect::<wrl_core::Result<Vec<_>>>()?;
        for ((d, seed), (t, acc)) in jobs.into_iter().zip(trained) {
            let spec = &data[d].spec;
            let mut m = CheckpointManifest::new(CheckpointRole::Finetuned, seed);
            m.source_dataset_id = Some(spec.dataset_id.clone());
            m.family_id = Some(spec.family_id.clone());
            m.parent_pretrained_id = Some(pre_id.clone());
            m.hyperparams.insert(CONFIG_ID_KEY.into(), config.config_id());
            m.hyperparams.insert("mode".into(), "full".into());
            m.metrics.insert("final_train_loss".into(), t.metrics.final_train_loss);
            m.metrics.insert("final_train_accuracy".into(), t.metrics.final_train_accuracy);
            m.metrics.insert("test_accuracy".into(), acc);
            let id = store.save(&t.weights, m)?;
            println!("{id}\t{}\t{acc:.4}", spec.dataset_id);
        }
        Ok(())
    }

    fn probe(&self, a: ProbeArgs) -> Outcome {
        let store = self.store()?;
        let (enc, _) = self.encoder(&store, &a.model)?;
        let data = self.data()?;
        let targets: Vec<&DatasetPair> = if a.dataset.is_empty() {
            data.iter().collect()
        } else {
            a.dataset.iter().map(|id| self.dataset(&data, id)).collect::<Outcome<_>>()?
        };
        let config = self.config();
        let seed = derive_seed(self.plan.seed, "probe");
        let reports = targets
            .par_iter()
            .map(|t| probe(&enc, &a.model, &config, t, seed, &self.plan.probe))
            .collect::<wrl_core::Result<Vec<_>>>()?;
        let mut table = Table::new(&["model_id", "target_dataset", "generalized_loss", "accuracy", "probe_train_loss", "converged", "steps"]);
        for r in &reports {
            println!("{}\t{}\t{:.6}\t{:.4}", r.model_id, r.target_dataset_id, r.generalized_loss, r.accuracy);
            table.push(vec![
                r.model_id.clone(),
                r.target_dataset_id.clone(),
                r.generalized_loss.to_string(),
                r.accuracy.to_string(),
                r.probe_train_loss.to_string(),
                r.converged.to_string(),
                r.steps.to_string(),
            ]);
        }
        Ok(table.write_csv(&self.out_dir("tables")?.join("probe.csv"))?)
    }

    fn task_vectors(&self, models: &[Stored], pre: &WeightVector, by: LabelBy) -> Outcome<TaskVectorSet> {
        let deltas = models
            .iter()
            .map(|m| task_vector(&m.encoder, pre))
            .collect::<wrl_core::Result<Vec<_>>>()?;
        let labels = models
            .iter()
            .map(|m| match by {
                LabelBy::Dataset => m.dataset.clone(),
                LabelBy::Family => m.family.clone(),
            })
            .collect();
        Ok(TaskVectorSet::new(deltas, models.iter().map(|m| m.id.clone()).collect(), labels)?)
    }

    fn cluster(&self, a: ClusterArgs) -> Outcome {
        let store = self.store()?;
        let (pre, pre_id) = self.pretrained(&store, a.pretrained.as_deref())?;
        let models = self.finetuned(&store, &pre_id)?;
        let tvs = self.task_vectors(&models, &pre, a.by)?;
        let mut labels = tvs.truth_labels.clone();
        labels.sort();
        labels.dedup();
        let r = cluster_task_vectors(&tvs, labels.len(), derive_seed(self.plan.seed, "clustering"))?;
        let mut table = Table::new(&["model_id", "label", "cluster", "cluster_label"]);
        for (i, m) in tvs.model_ids.iter().enumerate() {
            let c = r.assignments[i];
            table.push(vec![
                m.clone(),
                tvs.truth_labels[i].clone(),
                c.to_string(),
                r.mapping.get(&c).cloned().unwrap_or_default(),
            ]);
        }
        table.write_csv(&self.out_dir("tables")?.join("cluster_assignments.csv"))?;
        println!("accuracy\t{}", r.accuracy);
        for (label, f1) in &r.per_class_f1 {
            println!("f1.{label}\t{f1}");
        }
        Ok(())
    }

    fn project(&self, a: ProjectArgs) -> Outcome {
        let store = self.store()?;
        let (pre, pre_id) = self.pretrained(&store, a.pretrained.as_deref())?;
        let models = self.finetuned(&store, &pre_id)?;
        let tvs = self.task_vectors(&models, &pre, LabelBy::Dataset)?;
        let (method, name) = match a.method {
            Method::Pca => (ProjectionMethod::Pca, "pca"),
            Method::Tsne => (ProjectionMethod::Tsne, "tsne"),
        };
        let xy = project_2d(&tvs.deltas, method, derive_seed(self.plan.seed, "tsne"))?;
        let mut table = Table::new(&["model_id", "dataset", "family", "x", "y"]);
        for (m, p) in models.iter().zip(&xy) {
            table.push(vec![m.id.clone(), m.dataset.clone(), m.family.clone(), p[0].to_string(), p[1].to_string()]);
        }
        let path = self.out_dir("tables")?.join(format!("projection_{name}.csv"));
        table.write_csv(&path)?;
        println!("{}", path.display());
        Ok(())
    }

    fn pair_scan(&self, a: PairArgs, extrapolate: bool) -> Outcome {
        let (first, second, target) = match (a.first, a.second, a.dataset) {
            (Some(f), Some(s), Some(d)) => (f, s, d),
            _ => return Err(Failure::usage("--first, --second and --dataset go together")),
        };
        let store = self.store()?;
        let (w1, _) = self.encoder(&store, &first)?;
        let (w2, _) = self.encoder(&store, &second)?;
        let data = self.data()?;
        let target = self.dataset(&data, &target)?;
        let schedules: Vec<(&str, AlphaSchedule)> = if extrapolate {
            let (pos, neg) = extrapolation_schedules();
            vec![("positive", pos), ("negative", neg)]
        } else {
            let n = a.points.unwrap_or(self.plan.interpolation_points);
            vec![("interpolation", AlphaSchedule::interpolation_grid(n)?)]
        };
        let config = self.config();
        let seed = derive_seed(self.plan.seed, "probe");
        let mut table = Table::new(&["side", "alpha", "target_dataset", "generalized_loss", "accuracy"]);
        for (side, sched) in &schedules {
            let models = interpolate_pair(&w1, &w2, sched)?;
            let reports = models
                .par_iter()
                .map(|w| probe(w, &wrl_core::regions::weight_id(w)?, &config, target, seed, &self.plan.probe))
                .collect::<wrl_core::Result<Vec<_>>>()?;
            for (alpha, r) in sched.values.iter().zip(&reports) {
                println!("{side}\t{alpha}\t{:.6}\t{:.4}", r.generalized_loss, r.accuracy);
                table.push(vec![
                    side.to_string(),
                    alpha.to_string(),
                    r.target_dataset_id.clone(),
                    r.generalized_loss.to_string(),
                    r.accuracy.to_string(),
                ]);
            }
        }
        let name = if extrapolate { "pair_extrapolation.csv" } else { "pair_interpolation.csv" };
        Ok(table.write_csv(&self.out_dir("tables")?.join(name))?)
    }

    fn hull_sample(&self, a: HullArgs) -> Outcome {
        if a.count == 0 {
            return Err(Failure::usage("--count must be at least 1"));
        }
        let store = self.store()?;
        let (_, pre_id) = self.pretrained(&store, a.pretrained.as_deref())?;
        let models = self.finetuned(&store, &pre_id)?;
        let chosen: Vec<&Stored> = models
            .iter()
            .filter(|m| a.dataset.as_ref().is_none_or(|d| &m.dataset == d))
            .collect();
        let scope = a.dataset.clone().unwrap_or_else(|| "all".into());
        if chosen.is_empty() {
            return Err(Failure::integrity(format!("no fine-tuned checkpoints for {scope}")));
        }
        let group = self.group(&chosen, GroupKind::In, &scope)?;
        let samples = hull_sample(&group, a.count, derive_seed(self.plan.seed, &format!("hull-sample/{scope}")))?;
        for s in &samples {
            let coeffs = serde_json::to_string(&s.coefficients).map_err(|e| Failure::data(e.to_string()))?;
            let id = self.save_derived(
                &store,
                &s.weights,
                &pre_id,
                &[("provenance", format!("hull sample of {} models ({scope})", group.len())), ("coefficients", coeffs)],
            )?;
            println!("{id}");
        }
        Ok(())
    }

    fn centroid(&self, a: CentroidArgs) -> Outcome {
        let store = self.store()?;
        let (_, pre_id) = self.pretrained(&store, a.pretrained.as_deref())?;
        let models = self.finetuned(&store, &pre_id)?;
        let chosen: Vec<&Stored> = models
            .iter()
            .filter(|m| a.dataset.as_ref().is_none_or(|d| &m.dataset == d))
            .collect();
        if chosen.is_empty() {
            return Err(Failure::integrity("no fine-tuned checkpoints match"));
        }
        let group = self.group(&chosen, GroupKind::In, "centroid")?;
        let (w, provenance) = match &a.exclude {
            Some(t) => {
                let c = exclude_target_centroid(&group, t)?;
                (c.weights, c.provenance)
            }
            None => (
                centroid(&group)?,
                format!("centroid of {} models ({})", group.len(), a.dataset.as_deref().unwrap_or("all")),
            ),
        };
        let id = self.save_derived(&store, &w, &pre_id, &[("provenance", provenance)])?;
        println!("{id}");
        Ok(())
    }

    fn report(&self, a: ReportArgs) -> Outcome {
        let jobs: Vec<(PathBuf, LinePlot, PathBuf)> = match &a.table {
            Some(t) => {
                let mut plot = LinePlot::from_csv(t, &a.x, &a.y, &a.std, a.group.as_deref())?;
                plot.title = a.title.clone();
                let stem = t.file_stem().and_then(|s| s.to_str()).unwrap_or("figure");
                let svg = match &a.svg {
                    Some(p) => p.clone(),
                    None => self.out_dir("figures")?.join(format!("{stem}.svg")),
                };
                vec![(t.clone(), plot, svg)]
            }
            None => {
                let tables = self.plan.output_dir.join("tables");
                let known: BTreeMap<&str, [&str; 4]> = [
                    ("interpolation_curve", ["alpha", "mean_loss", "std_loss", "series"]),
                    ("extrapolation_curve", ["alpha", "mean_loss", "std_loss", "side"]),
                    ("edge_curve", ["radius", "mean_accuracy", "std_accuracy", "direction"]),
                ]
                .into_iter()
                .collect();
                let mut jobs = Vec::new();
                for (name, [x, y, s, g]) in known {
                    let t = tables.join(format!("{name}.csv"));
                    if t.exists() {
                        let plot = LinePlot::from_csv(&t, x, y, s, Some(g))?;
                        jobs.push((t, plot, self.out_dir("figures")?.join(format!("{name}.svg"))));
                    }
                }
                if jobs.is_empty() {
                    return Err(Failure::data(format!("no curve tables under {}", tables.display())));
                }
                jobs
            }
        };
        for (_, plot, svg) in jobs {
            emit_svg_lineplot(&plot, &svg)?;
            println!("{}", svg.display());
        }
        Ok(())
    }
}
