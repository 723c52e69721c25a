//! Bias-only fine-tuning from the exclude-target centroid against the same
//! training from the pretrained encoder, on full data and few-shot.

use super::{log, mean, num, run_training, standalone, ExperimentPlan, ExperimentReport, GridModel, Lab, Table, TrainJob};
use crate::error::Result;
use crate::plot::{render_svg, LinePlot};
use crate::regions::{exclude_target_centroid, GroupKind};
use crate::seeding::derive_seed;
use crate::trainer::{evaluate, TrainMode};

pub fn run_fusion_suite(plan: &ExperimentPlan) -> Result<ExperimentReport> {
    standalone(plan, fusion_suite)
}

pub fn fusion_suite(lab: &Lab) -> Result<ExperimentReport> {
    let plan = &lab.plan;
    let seed = derive_seed(plan.seed, "fusion");
    let all: Vec<&GridModel> = lab.grid.iter().filter(|m| m.seed_index < plan.seeds_per_dataset).collect();
    let group = lab.group_of(&all, GroupKind::In, "all fine-tuned models")?;

    let mut centroids = Vec::new();
    for &t in &lab.targets {
        let c = exclude_target_centroid(&group, lab.dataset_id(t))?;
        lab.save_derived(&c.weights, &c.provenance, seed)?;
        centroids.push(c);
    }
    let settings = [("full", None), ("few_shot", Some(plan.few_shot))];
    let mut jobs = Vec::new();
    for (_, cap) in &settings {
        for (i, &t) in lab.targets.iter().enumerate() {
            let mut tc = plan
                .fusion
                .train_config(TrainMode::BiasOnly, derive_seed(seed, lab.dataset_id(t)));
            tc.max_examples = *cap;
            for start in [&centroids[i].weights, &lab.pretrained] {
                jobs.push(TrainJob::new(plan, start, &lab.data[t].train, tc.clone()));
            }
        }
    }
    let trained = run_training(&lab.config, &jobs)?;

    let mut rep = ExperimentReport::new(&plan.name);
    let mut runs = Table::new(&["setting", "target_dataset", "start", "examples", "members_used", "test_accuracy", "test_loss"]);
    let mut gains = Table::new(&["setting", "target_dataset", "centroid_accuracy", "pretrained_accuracy", "gain"]);
    let mut bars = Vec::new();
    let mut k = 0;
    for (setting, _) in &settings {
        let mut g = Vec::new();
        for (i, &t) in lab.targets.iter().enumerate() {
            let mut acc = [0.0; 2];
            for (s, start) in ["centroid", "pretrained"].iter().enumerate() {
                let tr = &trained[k];
                k += 1;
                let (loss, a) = evaluate(&tr.weights, &lab.config, &lab.data[t].test)?;
                acc[s] = a;
                runs.push(vec![
                    setting.to_string(),
                    lab.dataset_id(t).into(),
                    start.to_string(),
                    tr.metrics.examples.to_string(),
                    if s == 0 { centroids[i].members_used.to_string() } else { String::new() },
                    num(a),
                    num(loss),
                ]);
            }
            let gain = acc[0] - acc[1];
            gains.push(vec![setting.to_string(), lab.dataset_id(t).into(), num(acc[0]), num(acc[1]), num(gain)]);
            g.push(gain);
        }
        let non_losing = g.iter().filter(|x| **x >= 0.0).count() as f64 / g.len() as f64;
        rep.metric(&format!("fusion.{setting}.mean_gain"), mean(&g));
        rep.metric(&format!("fusion.{setting}.non_losing_fraction"), non_losing);
        log(format!("fusion {setting}: mean gain {:+.4}, non-losing {non_losing:.2}", mean(&g)));
        bars.push((*setting, g));
    }
    let mut plot = LinePlot::new("Centroid start minus pretrained start", "target index", "accuracy gain");
    for (setting, g) in bars {
        plot = plot.with_series(setting, g.iter().enumerate().map(|(i, &v)| (i as f64, v, 0.0)).collect());
    }
    rep.tables.insert("fusion_runs".into(), runs);
    rep.tables.insert("fusion_gains".into(), gains);
    rep.figures.insert("fusion".into(), render_svg(&plot)?);
    Ok(rep)
}
