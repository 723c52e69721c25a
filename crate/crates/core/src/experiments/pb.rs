//! Region-loss comparisons (In, In′ and Ex groups) at three granularities.

use super::{log, mean, num, standalone, ExperimentPlan, ExperimentReport, Granularity, GridModel, Lab, Table};
use crate::error::Result;
use crate::evaluator::{pb, LossReport};
use crate::regions::{avg_distance, hull_sample, random_direction_model, GroupKind};
use crate::seeding::derive_seed;
use crate::weightstore::WeightVector;

pub fn run_pb_suite(plan: &ExperimentPlan) -> Result<ExperimentReport> {
    standalone(plan, pb_suite)
}

/// Per-model losses of one comparison scope.
struct Scope {
    granularity: Granularity,
    name: String,
    inside: Vec<(String, Option<usize>, Vec<LossReport>)>,
    hull: Vec<(String, Vec<LossReport>)>,
    outside: Vec<(String, Option<usize>, Vec<LossReport>)>,
}

fn avg(reports: &[LossReport]) -> f64 {
    mean(&reports.iter().map(|r| r.generalized_loss).collect::<Vec<_>>())
}

/// Probes each encoder on every target; results are grouped per encoder.
fn probe_rows(lab: &Lab, encoders: &[&WeightVector], targets: &[usize]) -> Result<Vec<Vec<LossReport>>> {
    let jobs: Vec<(&WeightVector, usize)> = encoders
        .iter()
        .flat_map(|w| targets.iter().map(move |&t| (*w, t)))
        .collect();
    let flat = lab.probe_many(&jobs)?;
    Ok(flat.chunks(targets.len()).map(<[LossReport]>::to_vec).collect())
}

fn scope(
    lab: &Lab,
    granularity: Granularity,
    name: String,
    targets: Vec<usize>,
    inside: &[&GridModel],
    outside: Vec<(String, Option<usize>, &WeightVector)>,
    seed: u64,
) -> Result<Scope> {
    let group = lab.group_of(inside, GroupKind::In, &name)?;
    let hull = hull_sample(&group, group.len(), derive_seed(seed, &format!("hull/{}/{name}", granularity.as_str())))?;
    let in_enc: Vec<&WeightVector> = inside.iter().map(|m| &m.encoder).collect();
    let hull_enc: Vec<&WeightVector> = hull.iter().map(|h| &h.weights).collect();
    let out_enc: Vec<&WeightVector> = outside.iter().map(|o| o.2).collect();
    let in_rows = probe_rows(lab, &in_enc, &targets)?;
    let hull_rows = probe_rows(lab, &hull_enc, &targets)?;
    let out_rows = probe_rows(lab, &out_enc, &targets)?;
    log(format!("pb {} {name}: {} probes cached", granularity.as_str(), lab.probes_run()));
    Ok(Scope {
        granularity,
        inside: inside
            .iter()
            .zip(in_rows)
            .map(|(m, r)| (m.id.clone(), Some(m.dataset), r))
            .collect(),
        hull: hull_rows
            .into_iter()
            .map(|r| (r[0].model_id.clone(), r))
            .collect(),
        outside: outside.into_iter().zip(out_rows).map(|((id, d, _), r)| (id, d, r)).collect(),
        name,
    })
}

pub fn pb_suite(lab: &Lab) -> Result<ExperimentReport> {
    let plan = &lab.plan;
    let seed = derive_seed(plan.seed, "pb");
    let all: Vec<&GridModel> = lab.grid.iter().filter(|m| m.seed_index < plan.seeds_per_dataset).collect();
    let mut scopes = Vec::new();

    for &t in &lab.targets {
        let inside = lab.in_models(t);
        let outside = all
            .iter()
            .filter(|m| m.dataset != t)
            .map(|m| (m.id.clone(), Some(m.dataset), &m.encoder))
            .collect();
        scopes.push(scope(lab, Granularity::SameDataset, lab.dataset_id(t).to_owned(), vec![t], &inside, outside, seed)?);
    }
    for f in &lab.families {
        let targets = lab.family_datasets(&f.family_id);
        let inside: Vec<&GridModel> = all.iter().copied().filter(|m| targets.contains(&m.dataset)).collect();
        let outside = all
            .iter()
            .filter(|m| !targets.contains(&m.dataset))
            .map(|m| (m.id.clone(), Some(m.dataset), &m.encoder))
            .collect();
        scopes.push(scope(lab, Granularity::SameTask, f.family_id.clone(), targets, &inside, outside, seed)?);
    }
    let group = lab.group_of(&all, GroupKind::In, "general")?;
    let radius = avg_distance(&group, &lab.pretrained)?;
    let randoms = (0..plan.random_models)
        .map(|j| random_direction_model(&lab.pretrained, radius, derive_seed(seed, &format!("random/{j}"))))
        .collect::<Result<Vec<_>>>()?;
    let outside = randoms
        .iter()
        .enumerate()
        .map(|(j, w)| (format!("random-{j}"), None, w))
        .collect();
    scopes.push(scope(lab, Granularity::General, "all".into(), (0..lab.data.len()).collect(), &all, outside, seed)?);

    let mut rep = ExperimentReport::new(&plan.name);
    let mut losses = Table::new(&[
        "granularity",
        "scope",
        "group",
        "model_id",
        "source_dataset",
        "target_dataset",
        "generalized_loss",
        "accuracy",
        "converged",
    ]);
    let mut triplets = Table::new(&[
        "granularity",
        "scope",
        "n_in",
        "n_in_prime",
        "n_ex",
        "mean_in",
        "mean_in_prime",
        "mean_ex",
        "pb_in_ex",
        "pb_in_prime_ex",
        "pb_in_prime_in",
    ]);
    let mut per_granularity: Vec<(Granularity, [f64; 3])> = Vec::new();
    for s in &scopes {
        let g = s.granularity.as_str();
        let source = |d: &Option<usize>| d.map_or_else(String::new, |d| lab.dataset_id(d).to_owned());
        let mut emit = |group: &str, id: &str, src: String, rows: &[LossReport]| {
            for r in rows {
                losses.push(vec![
                    g.into(),
                    s.name.clone(),
                    group.into(),
                    id.into(),
                    src.clone(),
                    r.target_dataset_id.clone(),
                    num(r.generalized_loss),
                    num(r.accuracy),
                    r.converged.to_string(),
                ]);
            }
        };
        for (id, d, rows) in &s.inside {
            emit("In", id, source(d), rows);
        }
        for (id, rows) in &s.hull {
            emit("In'", id, String::new(), rows);
        }
        for (id, d, rows) in &s.outside {
            emit("Ex", id, source(d), rows);
        }
        let li: Vec<f64> = s.inside.iter().map(|r| avg(&r.2)).collect();
        let lh: Vec<f64> = s.hull.iter().map(|r| avg(&r.1)).collect();
        let le: Vec<f64> = s.outside.iter().map(|r| avg(&r.2)).collect();
        let trip = [pb(&li, &le)?, pb(&lh, &le)?, pb(&lh, &li)?];
        triplets.push(vec![
            g.into(),
            s.name.clone(),
            li.len().to_string(),
            lh.len().to_string(),
            le.len().to_string(),
            num(mean(&li)),
            num(mean(&lh)),
            num(mean(&le)),
            num(trip[0]),
            num(trip[1]),
            num(trip[2]),
        ]);
        per_granularity.push((s.granularity, trip));
    }
    for g in Granularity::ALL {
        let rows: Vec<[f64; 3]> = per_granularity.iter().filter(|(x, _)| *x == g).map(|(_, t)| *t).collect();
        if rows.is_empty() {
            continue;
        }
        let key = g.as_str();
        let col = |i: usize| mean(&rows.iter().map(|t| t[i]).collect::<Vec<_>>());
        rep.metric(&format!("pb.{key}.in_ex"), col(0));
        rep.metric(&format!("pb.{key}.in_prime_ex"), col(1));
        rep.metric(&format!("pb.{key}.in_prime_in"), col(2));
        log(format!(
            "pb {key}: In/Ex {:.3}, In'/Ex {:.3}, In'/In {:.3}",
            col(0),
            col(1),
            col(2)
        ));
    }
    rep.metric("pb.general.random_radius", radius);
    rep.tables.insert("pb_losses".into(), losses);
    rep.tables.insert("pb_triplets".into(), triplets);
    Ok(rep)
}
