//! Acceptance run: the unit oracles, then two full default-plan replications
//! whose summaries are checked against every acceptance threshold.
//!
//! Prints one PASS/FAIL line per criterion and exits non-zero if any fails.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::Rng;
use wrl_core::evaluator::pb;
use wrl_core::experiments::{reproduce_all_timed, ExperimentPlan, ExperimentReport};
use wrl_core::geometry::hungarian;
use wrl_core::linalg::jacobi_eigen;
use wrl_core::regions::{interpolate_pair, AlphaSchedule};
use wrl_core::seeding::rng;
use wrl_core::synthgen::{LabeledSet, Split};
use wrl_core::trainer::{init_model, loss_and_grad};
use wrl_core::weightstore::{decode_wsv1, encode_wsv1, CheckpointManifest, CheckpointRole, CheckpointStore};
use wrl_core::{ModelConfig, TrainMode};

struct Verdict {
    criterion: usize,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn pb_enumerated(a: &[f64], b: &[f64]) -> f64 {
    let mut hits = 0usize;
    for x in a {
        for y in b {
            if x <= y {
                hits += 1;
            }
        }
    }
    hits as f64 / (a.len() * b.len()) as f64
}

fn permutations(items: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == items.len() {
        out.push(items.clone());
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permutations(items, k + 1, out);
        items.swap(k, i);
    }
}

/// Minimum assignment cost over every injective row → column map.
fn brute_force_cost(cost: &[Vec<f64>]) -> f64 {
    let cols = cost[0].len();
    let mut all = Vec::new();
    permutations(&mut (0..cols).collect(), 0, &mut all);
    all.iter()
        .map(|p| cost.iter().enumerate().map(|(r, row)| row[p[r]]).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

/// Roots of the characteristic polynomial of a symmetric 3×3 matrix, ascending.
fn cubic_eigenvalues(a: &[f64]) -> [f64; 3] {
    let m = |i: usize, j: usize| a[i * 3 + j];
    let tr = m(0, 0) + m(1, 1) + m(2, 2);
    let minors = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0) + m(0, 0) * m(2, 2) - m(0, 2) * m(2, 0) + m(1, 1) * m(2, 2)
        - m(1, 2) * m(2, 1);
    let det = m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
        + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
    // λ³ − tr λ² + minors λ − det = 0; substitute λ = t + tr/3
    let s = tr / 3.0;
    let p = minors - tr * tr / 3.0;
    let q = -(2.0 * tr.powi(3) / 27.0 - tr * minors / 3.0 + det);
    let r = (-p / 3.0).max(0.0).sqrt();
    let phi = if r == 0.0 {
        0.0
    } else {
        (3.0 * q / (2.0 * p * r)).clamp(-1.0, 1.0).acos() / 3.0
    };
    let mut roots = [0.0; 3];
    for (k, root) in roots.iter_mut().enumerate() {
        *root = s + 2.0 * r * (phi - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos();
    }
    roots.sort_by(f64::total_cmp);
    roots
}

fn oracle_suite() -> Result<String, String> {
    let mut r = rng(17);
    let mut notes = Vec::new();

    for case in 0..200 {
        let n = r.random_range(1..12);
        let m = r.random_range(1..12);
        // coarse grid so ties occur
        let a: Vec<f64> = (0..n).map(|_| (r.random_range(0..10) as f64) / 10.0).collect();
        let b: Vec<f64> = (0..m).map(|_| (r.random_range(0..10) as f64) / 10.0).collect();
        let got = pb(&a, &b).map_err(|e| e.to_string())?;
        if got != pb_enumerated(&a, &b) {
            return Err(format!("PB case {case}: {got} vs {}", pb_enumerated(&a, &b)));
        }
    }
    notes.push("PB 200 lists".to_string());

    let mut cases = 0;
    for k in 1..=6 {
        for cols in k..=6 {
            for _ in 0..5 {
                let cost: Vec<Vec<f64>> = (0..k).map(|_| (0..cols).map(|_| r.random_range(-5.0..5.0)).collect()).collect();
                let assign = hungarian(&cost).map_err(|e| e.to_string())?;
                let mut seen = assign.clone();
                seen.sort();
                seen.dedup();
                if seen.len() != k || assign.iter().any(|&c| c >= cols) {
                    return Err(format!("hungarian {k}x{cols}: not injective {assign:?}"));
                }
                let total: f64 = assign.iter().enumerate().map(|(i, &c)| cost[i][c]).sum();
                if (total - brute_force_cost(&cost)).abs() > 1e-9 {
                    return Err(format!("hungarian {k}x{cols}: {total} vs brute force {}", brute_force_cost(&cost)));
                }
                cases += 1;
            }
        }
    }
    notes.push(format!("Hungarian {cases} matrices k<=6"));

    let mut worst = 0.0f64;
    for _ in 0..100 {
        let mut a = [0.0; 9];
        for i in 0..3 {
            for j in i..3 {
                let v = r.random_range(-3.0..3.0);
                a[i * 3 + j] = v;
                a[j * 3 + i] = v;
            }
        }
        let eig = jacobi_eigen(&a, 3).map_err(|e| e.to_string())?;
        let want = cubic_eigenvalues(&a);
        for (x, y) in eig.values.iter().zip(want) {
            worst = worst.max((x - y).abs());
        }
    }
    if worst > 1e-8 {
        return Err(format!("Jacobi eigenvalues off by {worst:e}"));
    }
    notes.push(format!("Jacobi 3x3 max err {worst:.1e}"));

    let config = ModelConfig {
        input_dim: 5,
        hidden_dims: vec![4, 3],
        label_count: 2,
    };
    let w1 = init_model(&config, 1).map_err(|e| e.to_string())?;
    let w2 = init_model(&config, 2).map_err(|e| e.to_string())?;
    let ends = AlphaSchedule::interpolation_grid(2).map_err(|e| e.to_string())?;
    let (e1, e2) = (w1.strip_head().map_err(|e| e.to_string())?, w2.strip_head().map_err(|e| e.to_string())?);
    let scan = interpolate_pair(&w1, &w2, &ends).map_err(|e| e.to_string())?;
    if scan[0].values() != e2.values() || scan[1].values() != e1.values() {
        return Err("interpolation endpoints are not the pair members".into());
    }
    notes.push("endpoints exact".into());

    let bytes = encode_wsv1(&w1).map_err(|e| e.to_string())?;
    let back = decode_wsv1(&bytes).map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let store = CheckpointStore::open(dir.path()).map_err(|e| e.to_string())?;
    let id = store
        .save(&w1, CheckpointManifest::new(CheckpointRole::Derived, 3))
        .map_err(|e| e.to_string())?;
    let (loaded, _) = store.load(&id).map_err(|e| e.to_string())?;
    let bits = |w: &wrl_core::WeightVector| w.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    if bits(&back) != bits(&w1) || bits(&loaded) != bits(&w1) || back.segments() != w1.segments() {
        return Err("checkpoint round-trip is not bit-exact".into());
    }
    notes.push("checkpoint round-trip bit-exact".into());

    let batch = LabeledSet {
        inputs: (0..7 * 5).map(|_| r.random_range(-2.0..2.0)).collect(),
        input_dim: 5,
        labels: (0..7).map(|i| i % 2).collect(),
        split: Split::Train,
        dataset_id: "fd".into(),
        family_id: "fd".into(),
    };
    let (_, grad) = loss_and_grad(&w1, &config, &batch, TrainMode::Full).map_err(|e| e.to_string())?;
    let h = 1e-5;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..w1.len() {
        let shifted = |d: f64| {
            let mut v = w1.values().to_vec();
            v[i] += d;
            let w = w1.with_values(v).expect("same layout");
            loss_and_grad(&w, &config, &batch, TrainMode::Full).expect("valid batch").0
        };
        let fd = (shifted(h) - shifted(-h)) / (2.0 * h);
        num += (grad[i] - fd).powi(2);
        den += fd * fd;
    }
    let rel = (num / den).sqrt();
    if rel > 1e-4 {
        return Err(format!("gradient relative error {rel:e}"));
    }
    notes.push(format!("gradient rel err {rel:.1e}"));
    Ok(notes.join("; "))
}

fn metric(rep: &ExperimentReport, key: &str) -> f64 {
    rep.number(key).unwrap_or(f64::NAN)
}

fn judge(rep: &ExperimentReport, timings: &BTreeMap<String, f64>) -> Vec<Verdict> {
    let m = |k: &str| metric(rep, k);
    let mut out = Vec::new();

    let (ds, fam) = (m("clustering.dataset.accuracy"), m("clustering.family.accuracy"));
    let secs = timings["lab"] + timings["clustering"];
    out.push(Verdict {
        criterion: 2,
        name: "clustering",
        pass: ds >= 0.90 && fam >= 0.80 && secs <= 180.0,
        detail: format!("dataset {ds:.3} (>= 0.90), family {fam:.3} (>= 0.80), {secs:.0}s (<= 180s)"),
    });

    let (ty, sz) = (m("clustering.size_control.type.accuracy"), m("clustering.size_control.size.accuracy"));
    out.push(Verdict {
        criterion: 3,
        name: "size control",
        pass: ty > sz,
        detail: format!("type {ty:.3} > size {sz:.3}"),
    });

    let (end, interior, wins) = (
        m("interpolation.same-dataset.max_endpoint_mean"),
        m("interpolation.same-dataset.max_interior_mean"),
        m("interpolation.same-dataset.interior_win_fraction"),
    );
    out.push(Verdict {
        criterion: 4,
        name: "interpolation",
        pass: interior <= 1.1 * end && wins >= 0.5,
        detail: format!(
            "worst interior mean {interior:.4} <= 1.1 x endpoint {end:.4} = {:.4}; interior wins {wins:.2} (>= 0.50)",
            1.1 * end
        ),
    });

    let pbs = [
        ("same-dataset In/Ex", m("pb.same-dataset.in_ex"), 0.9),
        ("same-dataset In'/Ex", m("pb.same-dataset.in_prime_ex"), 0.9),
        ("same-dataset In'/In", m("pb.same-dataset.in_prime_in"), 0.5),
        ("general In/random Ex", m("pb.general.in_ex"), 0.8),
    ];
    out.push(Verdict {
        criterion: 5,
        name: "region losses",
        pass: pbs.iter().all(|(_, v, t)| v >= t),
        detail: pbs
            .iter()
            .map(|(n, v, t)| format!("{n} {v:.3} (>= {t})"))
            .collect::<Vec<_>>()
            .join(", "),
    });

    let (pos, neg) = (m("extrapolation.positive.far_ratio"), m("extrapolation.negative.far_ratio"));
    let ends = [
        m("extrapolation.positive.schedule_first"),
        m("extrapolation.positive.schedule_last"),
        m("extrapolation.negative.schedule_first"),
        m("extrapolation.negative.schedule_last"),
    ];
    out.push(Verdict {
        criterion: 6,
        name: "extrapolation",
        pass: pos >= 2.0 && neg >= 2.0 && ends == [1.0, 32.0, 0.0, -31.0],
        detail: format!("far/basin +{pos:.2} -{neg:.2} (>= 2); schedule ends {ends:?}"),
    });

    let (in_acc, near, far) = (
        m("edges.in_mean_accuracy"),
        m("edges.random.near_mean_accuracy"),
        m("edges.random.far_mean_accuracy"),
    );
    out.push(Verdict {
        criterion: 7,
        name: "edges",
        pass: near - far >= 0.15 && (in_acc - near).abs() <= 0.05,
        detail: format!(
            "near {near:.3} - far {far:.3} = {:.3} (>= 0.15); |In {in_acc:.3} - near| = {:.3} (<= 0.05)",
            near - far,
            (in_acc - near).abs()
        ),
    });

    let (gain, non_losing, few) = (
        m("fusion.full.mean_gain"),
        m("fusion.full.non_losing_fraction"),
        m("fusion.few_shot.mean_gain"),
    );
    out.push(Verdict {
        criterion: 8,
        name: "centroid fusion",
        pass: non_losing >= 0.6 && gain > 0.0 && few >= gain,
        detail: format!(
            "non-losing {non_losing:.2} (>= 0.60), mean gain {gain:+.4} (> 0), few-shot gain {few:+.4} (>= full)"
        ),
    });
    out
}

fn main() {
    let mut verdicts = Vec::new();

    let t = Instant::now();
    let oracle = oracle_suite();
    let secs = t.elapsed().as_secs_f64();
    verdicts.push(Verdict {
        criterion: 1,
        name: "oracle/unit suite",
        pass: oracle.is_ok() && secs < 10.0,
        detail: format!("{} ({secs:.2}s, < 10s)", oracle.unwrap_or_else(|e| e)),
    });

    let plan = ExperimentPlan::default();
    let runs: Vec<_> = (0..2)
        .map(|i| {
            let dir = tempfile::tempdir().expect("temp dir");
            let mut p = plan.clone();
            p.output_dir = dir.path().join("out");
            let store = CheckpointStore::open(dir.path().join("store")).expect("store");
            let (rep, timings) = reproduce_all_timed(&p, Some(store)).unwrap_or_else(|e| panic!("run {i}: {e}"));
            let summary = std::fs::read(p.output_dir.join("summary.json")).expect("summary.json");
            (rep, timings, summary, dir)
        })
        .collect();
    let (rep, timings, first, _) = &runs[0];
    verdicts.extend(judge(rep, timings));
    let total = runs.iter().map(|r| r.1["total"]).fold(0.0, f64::max);
    let identical = *first == runs[1].2;
    verdicts.push(Verdict {
        criterion: 9,
        name: "determinism",
        pass: identical && total <= 600.0,
        detail: format!(
            "summary.json byte-identical across runs: {identical}; slowest run {total:.0}s (<= 600s)"
        ),
    });

    println!();
    for v in &verdicts {
        println!(
            "criterion {} [{}] {}: {}",
            v.criterion,
            if v.pass { "PASS" } else { "FAIL" },
            v.name,
            v.detail
        );
    }
    let failed = verdicts.iter().filter(|v| !v.pass).count();
    println!("acceptance: {} of {} criteria pass", verdicts.len() - failed, verdicts.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
