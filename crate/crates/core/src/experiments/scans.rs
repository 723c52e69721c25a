//! Linear scans between pairs of models: interpolation inside `[0, 1]` and
//! logarithmic extrapolation on both sides.

use std::collections::BTreeMap;

use super::{log, mean, num, standalone, std_dev, ExperimentPlan, ExperimentReport, Granularity, Lab, Table};
use crate::error::Result;
use crate::evaluator::LossReport;
use crate::plot::{render_svg, LinePlot};
use crate::regions::{centroid, extrapolation_schedules, interpolate_pair, AlphaSchedule, GroupKind};
use crate::weightstore::WeightVector;

pub fn run_interpolation_suite(plan: &ExperimentPlan) -> Result<ExperimentReport> {
    standalone(plan, interpolation_suite)
}

pub fn run_extrapolation_suite(plan: &ExperimentPlan) -> Result<ExperimentReport> {
    standalone(plan, extrapolation_suite)
}

/// Two endpoint encoders and the targets their scan is scored on.
pub(crate) struct Pair {
    pub id: String,
    pub series: String,
    pub w1: WeightVector,
    pub w2: WeightVector,
    pub targets: Vec<usize>,
}

/// Scan result of one pair: per alpha, the probe of every target.
pub(crate) struct PairScan {
    pub alphas: Vec<f64>,
    pub reports: Vec<Vec<LossReport>>,
}

impl PairScan {
    /// Target-averaged loss per alpha.
    pub fn losses(&self) -> Vec<f64> {
        self.reports
            .iter()
            .map(|rs| mean(&rs.iter().map(|r| r.generalized_loss).collect::<Vec<_>>()))
            .collect()
    }
}

/// Disjoint seed pairs `(2p, 2p + 1)` within each target dataset.
pub(crate) fn same_dataset_pairs(lab: &Lab, per_dataset: usize) -> Vec<Pair> {
    let mut out = Vec::new();
    for &d in &lab.targets {
        let ins = lab.in_models(d);
        for p in 0..per_dataset.min(ins.len() / 2) {
            out.push(Pair {
                id: format!("same-dataset/{}/{}-{}", lab.dataset_id(d), 2 * p, 2 * p + 1),
                series: Granularity::SameDataset.as_str().into(),
                w1: ins[2 * p].encoder.clone(),
                w2: ins[2 * p + 1].encoder.clone(),
                targets: vec![d],
            });
        }
    }
    out
}

fn same_task_pairs(lab: &Lab) -> Vec<Pair> {
    let mut out = Vec::new();
    for f in &lab.families {
        let ds = lab.family_datasets(&f.family_id);
        if ds.len() < 2 {
            continue;
        }
        out.push(Pair {
            id: format!("same-task/{}/{}~{}", f.family_id, lab.dataset_id(ds[0]), lab.dataset_id(ds[1])),
            series: Granularity::SameTask.as_str().into(),
            w1: lab.in_models(ds[0])[0].encoder.clone(),
            w2: lab.in_models(ds[1])[0].encoder.clone(),
            targets: ds,
        });
    }
    out
}

fn general_pairs(lab: &Lab, count: usize) -> Vec<Pair> {
    let nf = lab.families.len();
    if nf < 2 {
        return Vec::new();
    }
    (0..count)
        .map(|j| {
            let a = lab.family_datasets(&lab.families[j % nf].family_id)[0];
            let b = lab.family_datasets(&lab.families[(j + 1) % nf].family_id)[0];
            let s = (j / nf) % lab.plan.seeds_per_dataset;
            Pair {
                id: format!("general/{}~{}/{s}", lab.dataset_id(a), lab.dataset_id(b)),
                series: Granularity::General.as_str().into(),
                w1: lab.in_models(a)[s].encoder.clone(),
                w2: lab.in_models(b)[s].encoder.clone(),
                targets: (0..lab.data.len()).collect(),
            }
        })
        .collect()
}

/// Centroid of one dataset's models against the centroid of a sibling dataset's.
fn centroid_pairs(lab: &Lab) -> Result<Vec<Pair>> {
    let mut out = Vec::new();
    for f in &lab.families {
        let ds = lab.family_datasets(&f.family_id);
        if ds.len() < 2 {
            continue;
        }
        let c = |d: usize| -> Result<WeightVector> {
            let group = lab.group_of(&lab.in_models(d), GroupKind::In, lab.dataset_id(d))?;
            centroid(&group)
        };
        out.push(Pair {
            id: format!("centroid/{}/{}~{}", f.family_id, lab.dataset_id(ds[0]), lab.dataset_id(ds[1])),
            series: "centroid-to-centroid".into(),
            w1: c(ds[0])?,
            w2: c(ds[1])?,
            targets: vec![ds[0], ds[1]],
        });
    }
    Ok(out)
}

pub(crate) fn scan(lab: &Lab, pairs: &[Pair], schedule: &AlphaSchedule) -> Result<Vec<PairScan>> {
    let models = pairs
        .iter()
        .map(|p| interpolate_pair(&p.w1, &p.w2, schedule))
        .collect::<Result<Vec<_>>>()?;
    let mut jobs = Vec::new();
    for (p, ms) in pairs.iter().zip(&models) {
        for m in ms {
            for &t in &p.targets {
                jobs.push((m, t));
            }
        }
    }
    let mut reports = lab.probe_many(&jobs)?.into_iter();
    Ok(pairs
        .iter()
        .map(|p| PairScan {
            alphas: schedule.values.clone(),
            reports: schedule
                .values
                .iter()
                .map(|_| reports.by_ref().take(p.targets.len()).collect())
                .collect(),
        })
        .collect())
}

fn scan_rows(table: &mut Table, pairs: &[Pair], scans: &[PairScan]) {
    for (p, s) in pairs.iter().zip(scans) {
        for (a, rs) in s.alphas.iter().zip(&s.reports) {
            for r in rs {
                table.push(vec![
                    p.id.clone(),
                    num(*a),
                    r.target_dataset_id.clone(),
                    num(r.generalized_loss),
                    num(r.accuracy),
                ]);
            }
        }
    }
}

const SCAN_HEADER: [&str; 5] = ["pair_id", "alpha", "target_dataset", "generalized_loss", "accuracy"];

/// Mean and std across pairs of the target-averaged loss, per alpha.
fn curve(scans: &[&PairScan]) -> Vec<(f64, f64, f64)> {
    let per_pair: Vec<Vec<f64>> = scans.iter().map(|s| s.losses()).collect();
    scans[0]
        .alphas
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            let xs: Vec<f64> = per_pair.iter().map(|l| l[i]).collect();
            (a, mean(&xs), std_dev(&xs))
        })
        .collect()
}

pub fn interpolation_suite(lab: &Lab) -> Result<ExperimentReport> {
    let plan = &lab.plan;
    let grid = AlphaSchedule::interpolation_grid(plan.interpolation_points)?;
    let mut pairs = same_dataset_pairs(lab, plan.pairs_per_dataset);
    pairs.extend(same_task_pairs(lab));
    pairs.extend(general_pairs(lab, plan.general_pairs));
    pairs.extend(centroid_pairs(lab)?);
    let scans = scan(lab, &pairs, &grid)?;

    let mut rep = ExperimentReport::new(&plan.name);
    let mut rows = Table::new(&SCAN_HEADER);
    scan_rows(&mut rows, &pairs, &scans);
    let mut by_series: BTreeMap<&str, Vec<&PairScan>> = BTreeMap::new();
    for (p, s) in pairs.iter().zip(&scans) {
        by_series.entry(&p.series).or_default().push(s);
    }
    let mut curves = Table::new(&["series", "alpha", "mean_loss", "std_loss", "pairs"]);
    let mut plot = LinePlot::new("Interpolation", "alpha", "generalized loss");
    for (series, ss) in &by_series {
        let c = curve(ss);
        for &(a, m, sd) in &c {
            curves.push(vec![series.to_string(), num(a), num(m), num(sd), ss.len().to_string()]);
        }
        plot = plot.with_series(series, c);
    }

    // endpoint identities: the scan ends are the pair members themselves
    let ends: Vec<(&WeightVector, usize)> = pairs
        .iter()
        .flat_map(|p| p.targets.iter().flat_map(move |&t| [(&p.w2, t), (&p.w1, t)]))
        .collect();
    let direct = lab.probe_many(&ends)?;
    let mut deviation: f64 = 0.0;
    let mut k = 0;
    for (p, s) in pairs.iter().zip(&scans) {
        let last = s.reports.len() - 1;
        for j in 0..p.targets.len() {
            deviation = deviation.max((s.reports[0][j].generalized_loss - direct[k].generalized_loss).abs());
            deviation = deviation.max((s.reports[last][j].generalized_loss - direct[k + 1].generalized_loss).abs());
            k += 2;
        }
    }
    rep.metric("interpolation.endpoint_max_deviation", deviation);

    let key = Granularity::SameDataset.as_str();
    if let Some(ss) = by_series.get(key) {
        let c = curve(ss);
        let last = c.len() - 1;
        let max_end = c[0].1.max(c[last].1);
        let max_interior = c[1..last].iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
        let wins = ss
            .iter()
            .filter(|s| {
                let l = s.losses();
                let inner = l[1..last].iter().copied().fold(f64::INFINITY, f64::min);
                inner < l[0] && inner < l[last]
            })
            .count();
        let frac = wins as f64 / ss.len() as f64;
        rep.metric(&format!("interpolation.{key}.max_endpoint_mean"), max_end);
        rep.metric(&format!("interpolation.{key}.max_interior_mean"), max_interior);
        rep.metric(&format!("interpolation.{key}.interior_win_fraction"), frac);
        rep.metric(&format!("interpolation.{key}.pairs"), ss.len() as f64);
        log(format!(
            "interpolation: endpoint mean {max_end:.4}, worst interior mean {max_interior:.4}, interior wins {frac:.2}"
        ));
    }
    for (series, ss) in &by_series {
        let c = curve(ss);
        rep.metric(&format!("interpolation.{series}.mean_loss"), mean(&c.iter().map(|x| x.1).collect::<Vec<_>>()));
    }
    rep.tables.insert("interpolation_scan".into(), rows);
    rep.tables.insert("interpolation_curve".into(), curves);
    rep.figures.insert("interpolation".into(), render_svg(&plot)?);
    Ok(rep)
}

pub fn extrapolation_suite(lab: &Lab) -> Result<ExperimentReport> {
    let plan = &lab.plan;
    let pairs = same_dataset_pairs(lab, 1);
    let grid = AlphaSchedule::interpolation_grid(plan.interpolation_points)?;
    let (pos, neg) = extrapolation_schedules();
    let basin_scans = scan(lab, &pairs, &grid)?;
    let pos_scans = scan(lab, &pairs, &pos)?;
    let neg_scans = scan(lab, &pairs, &neg)?;

    let mut rep = ExperimentReport::new(&plan.name);
    let mut rows = Table::new(&SCAN_HEADER);
    scan_rows(&mut rows, &pairs, &pos_scans);
    scan_rows(&mut rows, &pairs, &neg_scans);
    let basin_losses: Vec<f64> = basin_scans.iter().flat_map(|s| s.losses()).collect();
    let basin = mean(&basin_losses);
    let pos_curve = curve(&pos_scans.iter().collect::<Vec<_>>());
    let neg_curve = curve(&neg_scans.iter().collect::<Vec<_>>());

    let mut curves = Table::new(&["side", "alpha", "mean_loss", "std_loss", "ratio_to_basin"]);
    for (side, c) in [("positive", &pos_curve), ("negative", &neg_curve)] {
        for &(a, m, sd) in c {
            curves.push(vec![side.into(), num(a), num(m), num(sd), num(m / basin)]);
        }
    }
    let far = |c: &[(f64, f64, f64)]| mean(&c.iter().filter(|x| x.0.abs() >= 8.0).map(|x| x.1).collect::<Vec<_>>());
    // basin edge: the alpha closest to the basin middle whose mean loss doubles the interior mean
    let edge = |c: &[(f64, f64, f64)]| {
        c.iter()
            .filter(|x| x.1 > 2.0 * basin)
            .min_by(|a, b| (a.0 - 0.5).abs().total_cmp(&(b.0 - 0.5).abs()))
            .map(|x| x.0)
    };
    rep.metric("extrapolation.basin_mean", basin);
    rep.metric("extrapolation.positive.far_mean", far(&pos_curve));
    rep.metric("extrapolation.negative.far_mean", far(&neg_curve));
    rep.metric("extrapolation.positive.far_ratio", far(&pos_curve) / basin);
    rep.metric("extrapolation.negative.far_ratio", far(&neg_curve) / basin);
    let (first, last) = (pos_curve[0], pos_curve[pos_curve.len() - 1]);
    rep.metric("extrapolation.alpha32_over_alpha1", last.1 / first.1);
    for (side, c, s) in [("positive", &pos_curve, &pos), ("negative", &neg_curve, &neg)] {
        match edge(c) {
            Some(a) => rep.metric(&format!("extrapolation.{side}.edge_alpha"), a),
            None => rep.flag(&format!("extrapolation.{side}.edge_found"), false),
        }
        rep.metric(&format!("extrapolation.{side}.schedule_first"), s.values[0]);
        rep.metric(&format!("extrapolation.{side}.schedule_last"), s.values[s.values.len() - 1]);
    }
    log(format!(
        "extrapolation: basin {basin:.4}, far positive {:.4}, far negative {:.4}",
        far(&pos_curve),
        far(&neg_curve)
    ));
    let plot = LinePlot::new("Extrapolation", "alpha", "generalized loss")
        .with_series("positive side", pos_curve)
        .with_series("negative side", neg_curve);
    rep.tables.insert("extrapolation_scan".into(), rows);
    rep.tables.insert("extrapolation_curve".into(), curves);
    rep.figures.insert("extrapolation".into(), render_svg(&plot)?);
    Ok(rep)
}
