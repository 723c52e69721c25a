//! Radius scans from a dataset's centroid toward the origin and along random
//! directions.

use super::{log, mean, num, standalone, std_dev, ExperimentPlan, ExperimentReport, Lab, Table};
use crate::error::Result;
use crate::plot::{render_svg, LinePlot};
use crate::regions::{avg_distance, centroid, centroid_spread, radius_scan, DirectionKind, GroupKind};
use crate::seeding::derive_seed;
use crate::weightstore::WeightVector;

pub fn run_edge_suite(plan: &ExperimentPlan) -> Result<ExperimentReport> {
    standalone(plan, edge_suite)
}

pub fn edge_suite(lab: &Lab) -> Result<ExperimentReport> {
    let plan = &lab.plan;
    let seed = derive_seed(plan.seed, "edge");
    let mut rep = ExperimentReport::new(&plan.name);
    let mut rows = Table::new(&["target_dataset", "direction", "direction_index", "radius", "distance", "accuracy", "generalized_loss"]);
    // accuracies per radius index
    let mut origin: Vec<Vec<f64>> = vec![Vec::new(); plan.radii.len()];
    let mut random: Vec<Vec<f64>> = vec![Vec::new(); plan.radii.len()];
    let mut in_acc = Vec::new();
    let mut near_gaps = Vec::new();
    let mut units = Vec::new();

    for &t in &lab.targets {
        let ins = lab.in_models(t);
        let group = lab.group_of(&ins, GroupKind::In, lab.dataset_id(t))?;
        let center = centroid(&group)?;
        // one unit is how far the fine-tuned models sit from their centroid
        let unit = centroid_spread(&group)?;
        units.push((unit, avg_distance(&group, &lab.pretrained)?));
        let mut scans: Vec<(DirectionKind, usize, Vec<WeightVector>)> =
            vec![(DirectionKind::Origin, 0, radius_scan(&center, DirectionKind::Origin, &plan.radii, unit, 0)?)];
        for j in 0..plan.random_directions {
            let s = derive_seed(seed, &format!("{}/{j}", lab.dataset_id(t)));
            scans.push((DirectionKind::Random, j, radius_scan(&center, DirectionKind::Random, &plan.radii, unit, s)?));
        }
        let in_jobs: Vec<(&WeightVector, usize)> = ins.iter().map(|m| (&m.encoder, t)).collect();
        let in_mean = mean(&lab.probe_many(&in_jobs)?.iter().map(|r| r.accuracy).collect::<Vec<_>>());
        in_acc.push(in_mean);

        let jobs: Vec<(&WeightVector, usize)> = scans.iter().flat_map(|s| s.2.iter().map(|w| (w, t))).collect();
        let reports = lab.probe_many(&jobs)?;
        let mut k = 0;
        let mut near = Vec::new();
        for (kind, j, _) in &scans {
            for (i, &rho) in plan.radii.iter().enumerate() {
                let r = &reports[k];
                k += 1;
                let name = match kind {
                    DirectionKind::Origin => "origin",
                    DirectionKind::Random => "random",
                };
                rows.push(vec![
                    lab.dataset_id(t).into(),
                    name.into(),
                    j.to_string(),
                    num(rho),
                    num(rho * unit),
                    num(r.accuracy),
                    num(r.generalized_loss),
                ]);
                match kind {
                    DirectionKind::Origin => origin[i].push(r.accuracy),
                    DirectionKind::Random => {
                        random[i].push(r.accuracy);
                        if rho <= 1.0 {
                            near.push(r.accuracy);
                        }
                    }
                }
            }
        }
        if !near.is_empty() {
            near_gaps.push((in_mean - mean(&near)).abs());
        }
    }

    let mut curves = Table::new(&["direction", "radius", "mean_accuracy", "std_accuracy", "models"]);
    let mut plot = LinePlot::new("Radius scans", "radius (units of mean distance to the centroid)", "probe accuracy");
    for (name, acc) in [("origin", &origin), ("random", &random)] {
        let pts: Vec<(f64, f64, f64)> = plan
            .radii
            .iter()
            .zip(acc.iter())
            .map(|(&r, a)| (r, mean(a), std_dev(a)))
            .collect();
        for (&(r, m, s), a) in pts.iter().zip(acc.iter()) {
            curves.push(vec![name.into(), num(r), num(m), num(s), a.len().to_string()]);
        }
        plot = plot.with_series(name, pts);
    }
    let pick = |lo: f64, hi: f64| -> Vec<f64> {
        plan.radii
            .iter()
            .zip(&random)
            .filter(|(r, _)| **r >= lo && **r <= hi)
            .flat_map(|(_, a)| a.iter().copied())
            .collect()
    };
    let near = mean(&pick(0.0, 1.0));
    let far = mean(&pick(4.0, f64::INFINITY));
    let in_mean = mean(&in_acc);
    rep.metric("edges.in_mean_accuracy", in_mean);
    rep.metric("edges.unit_radius_mean", mean(&units.iter().map(|u| u.0).collect::<Vec<_>>()));
    rep.metric("edges.distance_to_pretrained_mean", mean(&units.iter().map(|u| u.1).collect::<Vec<_>>()));
    rep.metric("edges.random.near_mean_accuracy", near);
    rep.metric("edges.random.far_mean_accuracy", far);
    rep.metric("edges.random.drop", near - far);
    rep.metric("edges.random.near_gap", (in_mean - near).abs());
    rep.metric("edges.random.max_target_near_gap", near_gaps.iter().copied().fold(0.0, f64::max));
    let origin_all: Vec<f64> = origin.iter().flatten().copied().collect();
    rep.metric("edges.origin.mean_accuracy", mean(&origin_all));
    log(format!(
        "edges: In {in_mean:.3}, random near {near:.3}, random far {far:.3}, origin {:.3}",
        mean(&origin_all)
    ));
    rep.tables.insert("edge_scan".into(), rows);
    rep.tables.insert("edge_curve".into(), curves);
    rep.figures.insert("edges".into(), render_svg(&plot)?);
    Ok(rep)
}
