//! Constructions in weight space: weighted combinations, pairwise
//! interpolation and extrapolation, convex-hull sampling, centroids,
//! random-direction baselines and radius scans.
//!
//! Everything here operates on encoder values only. Heads never take part in
//! a combination; scanned points are evaluated by re-probing.

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding::rng;
use crate::trainer::xavier_std;
use crate::weightstore::{encode_wsv1, wsv1_digest_hex, SegmentKind, WeightVector};

/// Tolerance on `sum(coefficients) == 1`.
pub const COEFFICIENT_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GroupKind {
    In,
    Ex,
    #[serde(rename = "In'")]
    InPrime,
}

impl GroupKind {
    pub fn as_str(self) -> &'static str {
        match self {
            GroupKind::In => "In",
            GroupKind::Ex => "Ex",
            GroupKind::InPrime => "In'",
        }
    }
}

/// Content id of a weight vector; equals the id the checkpoint store assigns.
pub fn weight_id(w: &WeightVector) -> Result<String> {
    wsv1_digest_hex(&encode_wsv1(w)?)
}

/// Encoder-only copy of `w` (no-op when `w` has no head).
pub fn encoder_of(w: &WeightVector) -> Result<WeightVector> {
    if w.has_head() {
        w.strip_head()
    } else {
        Ok(w.clone())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupMember {
    pub id: String,
    pub source_dataset: Option<String>,
    pub family: Option<String>,
    pub weights: WeightVector,
}

impl GroupMember {
    /// Member keyed by the content id of its encoder.
    pub fn new(weights: &WeightVector, source_dataset: Option<&str>, family: Option<&str>) -> Result<Self> {
        let weights = encoder_of(weights)?;
        Ok(GroupMember {
            id: weight_id(&weights)?,
            source_dataset: source_dataset.map(str::to_owned),
            family: family.map(str::to_owned),
            weights,
        })
    }
}

/// Named collection of encoder vectors sharing one layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelGroup {
    pub name: GroupKind,
    pub members: Vec<GroupMember>,
    pub provenance: String,
    pub config_id: String,
}

impl ModelGroup {
    pub fn new(name: GroupKind, members: Vec<GroupMember>, provenance: impl Into<String>) -> Result<Self> {
        let first = members
            .first()
            .ok_or_else(|| Error::InvalidArgument(format!("group {} is empty", name.as_str())))?;
        let config_id = first.weights.model_config_id().to_owned();
        for m in &members[1..] {
            if !m.weights.same_layout(&first.weights) || m.weights.model_config_id() != config_id {
                return Err(Error::SegmentMismatch(format!(
                    "member {} does not share the layout of {}",
                    m.id, first.id
                )));
            }
        }
        Ok(ModelGroup {
            name,
            members,
            provenance: provenance.into(),
            config_id,
        })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn ids(&self) -> Vec<String> {
        self.members.iter().map(|m| m.id.clone()).collect()
    }

    fn member(&self, id: &str) -> Option<&GroupMember> {
        self.members.iter().find(|m| m.id == id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleKind {
    Interpolation,
    ExtrapolationPositive,
    ExtrapolationNegative,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaSchedule {
    pub kind: ScheduleKind,
    pub values: Vec<f64>,
}

impl AlphaSchedule {
    pub fn new(kind: ScheduleKind, values: Vec<f64>) -> Result<Self> {
        let s = AlphaSchedule { kind, values };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() || self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("schedule needs finite values".into()));
        }
        if self.kind == ScheduleKind::Interpolation
            && self.values.iter().any(|v| !(0.0..=1.0).contains(v))
        {
            return Err(Error::InvalidArgument("interpolation values must lie in [0, 1]".into()));
        }
        let inc = self.values.windows(2).all(|w| w[1] > w[0]);
        let dec = self.values.windows(2).all(|w| w[1] < w[0]);
        if !(inc || dec) {
            return Err(Error::InvalidArgument("schedule must be strictly monotone".into()));
        }
        Ok(())
    }

    /// `n` equally spaced values covering `[0, 1]`.
    pub fn interpolation_grid(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument("grid needs at least 2 points".into()));
        }
        let values = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        AlphaSchedule::new(ScheduleKind::Interpolation, values)
    }
}

/// Logarithmic extrapolation schedules: `2^(5j/9)` for `j = 0..9` (1 to 32)
/// and `1 - 2^(5j/9)` (0 to -31).
pub fn extrapolation_schedules() -> (AlphaSchedule, AlphaSchedule) {
    let pos: Vec<f64> = (0..10).map(|j| (5.0 * j as f64 / 9.0).exp2()).collect();
    let neg: Vec<f64> = pos.iter().map(|a| 1.0 - a).collect();
    (
        AlphaSchedule {
            kind: ScheduleKind::ExtrapolationPositive,
            values: pos,
        },
        AlphaSchedule {
            kind: ScheduleKind::ExtrapolationNegative,
            values: neg,
        },
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinationWeights {
    pub coefficients: Vec<f64>,
    pub member_ids: Vec<String>,
}

impl CombinationWeights {
    pub fn new(member_ids: Vec<String>, coefficients: Vec<f64>) -> Result<Self> {
        let cw = CombinationWeights {
            coefficients,
            member_ids,
        };
        cw.validate()?;
        Ok(cw)
    }

    pub fn uniform(member_ids: Vec<String>) -> Result<Self> {
        let c = 1.0 / member_ids.len() as f64;
        let coefficients = vec![c; member_ids.len()];
        CombinationWeights::new(member_ids, coefficients)
    }

    pub fn validate(&self) -> Result<()> {
        if self.coefficients.len() != self.member_ids.len() || self.coefficients.is_empty() {
            return Err(Error::InvalidArgument(
                "need one coefficient per member".into(),
            ));
        }
        if self.coefficients.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::InvalidArgument(
                "convex coefficients must be finite and non-negative".into(),
            ));
        }
        let sum: f64 = self.coefficients.iter().sum();
        if (sum - 1.0).abs() > COEFFICIENT_SUM_TOL {
            return Err(Error::InvalidArgument(format!(
                "coefficients sum to {sum}, not 1"
            )));
        }
        Ok(())
    }
}

/// `sum_i c_i * x_i` elementwise, skipping zero coefficients so that one-hot
/// combinations reproduce their operand bit for bit.
fn weighted_sum(terms: &[(f64, &[f64])]) -> Vec<f64> {
    let mut live = terms.iter().filter(|(c, _)| *c != 0.0);
    let Some(&(c0, x0)) = live.next() else {
        return vec![0.0; terms.first().map_or(0, |t| t.1.len())];
    };
    let mut out: Vec<f64> = if c0 == 1.0 {
        x0.to_vec()
    } else {
        x0.iter().map(|v| c0 * v).collect()
    };
    for &(c, x) in live {
        for (o, v) in out.iter_mut().zip(x) {
            *o += c * v;
        }
    }
    out
}

/// Convex combination of group members over encoder segments.
///
/// Terms are summed in member-id order, so the result does not depend on
/// the order of `(member, coefficient)` pairs.
pub fn combine(group: &ModelGroup, cw: &CombinationWeights) -> Result<WeightVector> {
    cw.validate()?;
    let mut pairs: Vec<(&GroupMember, f64)> = Vec::with_capacity(cw.member_ids.len());
    for (id, &c) in cw.member_ids.iter().zip(&cw.coefficients) {
        let m = group
            .member(id)
            .ok_or_else(|| Error::InvalidArgument(format!("{id} is not a member of the group")))?;
        pairs.push((m, c));
    }
    pairs.sort_by(|a, b| a.0.id.cmp(&b.0.id).then(a.1.total_cmp(&b.1)));
    let template = &pairs[0].0.weights;
    let terms: Vec<(f64, &[f64])> = pairs.iter().map(|(m, c)| (*c, m.weights.values())).collect();
    template.with_values(weighted_sum(&terms))
}

fn check_pair(w1: &WeightVector, w2: &WeightVector) -> Result<(WeightVector, WeightVector)> {
    let (a, b) = (encoder_of(w1)?, encoder_of(w2)?);
    if !a.same_layout(&b) {
        return Err(Error::SegmentMismatch("interpolation endpoints differ in layout".into()));
    }
    Ok((a, b))
}

/// `alpha * w1 + (1 - alpha) * w2` for each alpha, encoder segments only.
pub fn interpolate_pair(
    w1: &WeightVector,
    w2: &WeightVector,
    schedule: &AlphaSchedule,
) -> Result<Vec<WeightVector>> {
    let (a, b) = check_pair(w1, w2)?;
    schedule
        .values
        .iter()
        .map(|&alpha| {
            let v = weighted_sum(&[(alpha, a.values()), (1.0 - alpha, b.values())]);
            a.with_values(v)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct HullSample {
    pub coefficients: CombinationWeights,
    pub weights: WeightVector,
}

/// Flat-Dirichlet coefficients over `n` members: normalized standard exponentials.
pub fn flat_dirichlet(r: &mut impl Rng, n: usize) -> Vec<f64> {
    let draws: Vec<f64> = (0..n).map(|_| r.sample::<f64, _>(Exp1)).collect();
    let total: f64 = draws.iter().sum();
    draws.into_iter().map(|d| d / total).collect()
}

/// `m` models drawn uniformly over the coefficient simplex of `group`.
pub fn hull_sample(group: &ModelGroup, m: usize, seed: u64) -> Result<Vec<HullSample>> {
    if group.len() < 2 {
        return Err(Error::InvalidArgument("hull sampling needs at least 2 members".into()));
    }
    let mut r = rng(seed);
    let ids = group.ids();
    (0..m)
        .map(|_| {
            let cw = CombinationWeights::new(ids.clone(), flat_dirichlet(&mut r, ids.len()))?;
            let weights = combine(group, &cw)?;
            Ok(HullSample {
                coefficients: cw,
                weights,
            })
        })
        .collect()
}

/// Equal-weight average of the group.
pub fn centroid(group: &ModelGroup) -> Result<WeightVector> {
    combine(group, &CombinationWeights::uniform(group.ids())?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilteredCentroid {
    pub weights: WeightVector,
    pub members_used: usize,
    pub excluded: usize,
    pub provenance: String,
}

/// Centroid of the members not fine-tuned on `target_dataset_id`.
pub fn exclude_target_centroid(group: &ModelGroup, target_dataset_id: &str) -> Result<FilteredCentroid> {
    let kept: Vec<GroupMember> = group
        .members
        .iter()
        .filter(|m| m.source_dataset.as_deref() != Some(target_dataset_id))
        .cloned()
        .collect();
    if kept.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "no members left after excluding {target_dataset_id}"
        )));
    }
    let excluded = group.len() - kept.len();
    let used = kept.len();
    let provenance = format!(
        "{}; excluding {target_dataset_id}: {used} of {} members",
        group.provenance,
        group.len()
    );
    let sub = ModelGroup::new(group.name, kept, provenance.clone())?;
    Ok(FilteredCentroid {
        weights: centroid(&sub)?,
        members_used: used,
        excluded,
        provenance,
    })
}

/// Unnormalized direction with Xavier-Gaussian weight entries; bias entries
/// use the scale of the weight matrix they belong to.
pub fn xavier_direction(template: &WeightVector, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    let mut out = vec![0.0; template.len()];
    let segs = template.segments();
    for (i, seg) in segs.iter().enumerate() {
        let scale = if seg.kind.is_bias() {
            // the preceding segment is this layer's weight matrix
            segs[..i]
                .iter()
                .rev()
                .find(|s| matches!(s.kind, SegmentKind::EncoderWeight | SegmentKind::HeadWeight))
                .map_or(1.0, |w| xavier_std(&w.shape))
        } else {
            xavier_std(&seg.shape)
        };
        for v in &mut out[seg.range()] {
            *v = scale * r.sample::<f64, _>(StandardNormal);
        }
    }
    out
}

fn unit(mut v: Vec<f64>) -> Result<Vec<f64>> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n == 0.0 || !n.is_finite() {
        return Err(Error::InvalidArgument("cannot normalize a zero direction".into()));
    }
    v.iter_mut().for_each(|x| *x /= n);
    Ok(v)
}

/// `pre + r` with `r` a Xavier-prior direction rescaled to `target_norm`.
pub fn random_direction_model(pre: &WeightVector, target_norm: f64, seed: u64) -> Result<WeightVector> {
    if !(target_norm > 0.0 && target_norm.is_finite()) {
        return Err(Error::InvalidArgument("target_norm must be > 0".into()));
    }
    let pre = encoder_of(pre)?;
    let dir = unit(xavier_direction(&pre, seed))?;
    let values = pre
        .values()
        .iter()
        .zip(&dir)
        .map(|(p, d)| p + target_norm * d)
        .collect();
    pre.with_values(values)
}

/// Euclidean norm of `a - b`.
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Mean distance between `pre` and the group members.
pub fn avg_distance(group: &ModelGroup, pre: &WeightVector) -> Result<f64> {
    let pre = encoder_of(pre)?;
    let mut total = 0.0;
    for m in &group.members {
        if !m.weights.same_layout(&pre) {
            return Err(Error::SegmentMismatch(format!("member {} vs pretrained", m.id)));
        }
        total += distance(m.weights.values(), pre.values());
    }
    Ok(total / group.len() as f64)
}

/// Mean distance between the group members and their centroid.
pub fn centroid_spread(group: &ModelGroup) -> Result<f64> {
    let c = centroid(group)?;
    let total: f64 = group
        .members
        .iter()
        .map(|m| distance(m.weights.values(), c.values()))
        .sum();
    Ok(total / group.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DirectionKind {
    Origin,
    Random,
}

/// Models at `center + rho * unit_radius * direction` for each `rho`.
pub fn radius_scan(
    center: &WeightVector,
    kind: DirectionKind,
    radii: &[f64],
    unit_radius: f64,
    seed: u64,
) -> Result<Vec<WeightVector>> {
    let center = encoder_of(center)?;
    if radii.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
        return Err(Error::InvalidArgument("radii must be finite and non-negative".into()));
    }
    let dir = match kind {
        DirectionKind::Origin => {
            let norm = center.l2_norm();
            if norm == 0.0 {
                return Err(Error::InvalidArgument(
                    "origin scan needs a center with nonzero norm".into(),
                ));
            }
            center.values().iter().map(|v| -v / norm).collect()
        }
        DirectionKind::Random => unit(xavier_direction(&center, seed))?,
    };
    radii
        .iter()
        .map(|&rho| {
            let step = rho * unit_radius;
            let v = weighted_sum(&[(1.0, center.values()), (step, &dir)]);
            center.with_values(v)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weightstore::ParamSegment;

    fn vec_of(values: &[f64]) -> WeightVector {
        let n = values.len();
        let segs = vec![ParamSegment {
            name: "enc.0.bias".into(),
            offset: 0,
            length: n,
            shape: vec![n],
            kind: SegmentKind::EncoderBias,
        }];
        WeightVector::new(values.to_vec(), segs, "flat").unwrap()
    }

    fn group_of(rows: &[&[f64]]) -> ModelGroup {
        let members = rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let src = format!("d{i}");
                GroupMember::new(&vec_of(r), Some(&src), None).unwrap()
            })
            .collect();
        ModelGroup::new(GroupKind::In, members, "test").unwrap()
    }

    #[test]
    fn combine_examples() {
        let g = group_of(&[&[1.0, 3.0], &[3.0, 5.0]]);
        let ids = g.ids();
        let mid = combine(&g, &CombinationWeights::new(ids.clone(), vec![0.5, 0.5]).unwrap()).unwrap();
        assert_eq!(mid.values(), &[2.0, 4.0]);
        let one = combine(&g, &CombinationWeights::new(ids.clone(), vec![0.0, 1.0]).unwrap()).unwrap();
        assert_eq!(one, g.members[1].weights);

        let g3 = group_of(&[&[0.1, -0.7], &[1.3, 2.2], &[-4.0, 0.25]]);
        let ids = g3.ids();
        let a = combine(&g3, &CombinationWeights::new(ids.clone(), vec![0.2, 0.3, 0.5]).unwrap()).unwrap();
        let rev_ids: Vec<String> = ids.iter().rev().cloned().collect();
        let b = combine(&g3, &CombinationWeights::new(rev_ids, vec![0.5, 0.3, 0.2]).unwrap()).unwrap();
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn combine_rejects_bad_weights() {
        let g = group_of(&[&[1.0], &[2.0]]);
        assert!(CombinationWeights::new(g.ids(), vec![0.5, 0.6]).is_err());
        assert!(CombinationWeights::new(g.ids(), vec![1.5, -0.5]).is_err());
        let stranger = CombinationWeights::new(vec!["x".into()], vec![1.0]).unwrap();
        assert!(combine(&g, &stranger).is_err());
    }

    #[test]
    fn interpolation_endpoints_and_extrapolation() {
        let w1 = vec_of(&[1.0, -2.5, 0.0]);
        let w2 = vec_of(&[0.5, 7.0, -0.0]);
        let s = AlphaSchedule::new(ScheduleKind::Custom, vec![0.0, 0.5, 1.0, 2.0]).unwrap();
        let out = interpolate_pair(&w1, &w2, &s).unwrap();
        assert_eq!(bits(&out[0]), bits(&w2));
        assert_eq!(bits(&out[2]), bits(&w1));
        let g = group_of(&[w1.values(), w2.values()]);
        let mid = combine(&g, &CombinationWeights::uniform(g.ids()).unwrap()).unwrap();
        assert_eq!(out[1].values(), mid.values());

        let e = interpolate_pair(&vec_of(&[1.0]), &vec_of(&[0.0]), &s).unwrap();
        assert_eq!(e[3].values(), &[2.0]);
    }

    fn bits(w: &WeightVector) -> Vec<u64> {
        w.values().iter().map(|v| v.to_bits()).collect()
    }

    #[test]
    fn extrapolation_schedule_endpoints() {
        let (pos, neg) = extrapolation_schedules();
        assert_eq!(pos.values.len(), 10);
        assert_eq!(pos.values[0], 1.0);
        assert_eq!(pos.values[9], 32.0);
        assert_eq!(neg.values[0], 0.0);
        assert_eq!(neg.values[9], -31.0);
        let ratio = (5.0f64 / 9.0).exp2();
        for w in pos.values.windows(2) {
            assert!((w[1] / w[0] - ratio).abs() < 1e-12);
        }
        pos.validate().unwrap();
        neg.validate().unwrap();
    }

    #[test]
    fn schedules_validate() {
        assert!(AlphaSchedule::new(ScheduleKind::Interpolation, vec![0.0, 1.5]).is_err());
        assert!(AlphaSchedule::new(ScheduleKind::Custom, vec![0.0, 2.0, 1.0]).is_err());
        let g = AlphaSchedule::interpolation_grid(11).unwrap();
        assert_eq!(g.values.first(), Some(&0.0));
        assert_eq!(g.values.last(), Some(&1.0));
    }

    #[test]
    fn hull_of_two_lies_on_segment() {
        let g = group_of(&[&[1.0, 0.0, 2.0], &[-1.0, 4.0, 0.5]]);
        for s in hull_sample(&g, 20, 3).unwrap() {
            let sum: f64 = s.coefficients.coefficients.iter().sum();
            assert!((sum - 1.0).abs() <= 1e-12);
            let a = s.coefficients.coefficients[0];
            assert!((0.0..=1.0).contains(&a));
            let (w0, w1) = (g.members[0].weights.values(), g.members[1].weights.values());
            for (k, v) in s.weights.values().iter().enumerate() {
                assert!((v - (a * w0[k] + (1.0 - a) * w1[k])).abs() < 1e-12);
            }
        }
        assert!(hull_sample(&group_of(&[&[1.0]]), 2, 0).is_err());
    }

    #[test]
    fn flat_dirichlet_mean_is_uniform() {
        // Monte-Carlo oracle: E[c_i] = 1/n for the flat Dirichlet
        let mut r = rng(12);
        let n = 4;
        let mut mean = vec![0.0; n];
        for _ in 0..10_000 {
            for (m, c) in mean.iter_mut().zip(flat_dirichlet(&mut r, n)) {
                *m += c / 10_000.0;
            }
        }
        for m in mean {
            assert!((m - 0.25).abs() < 0.02, "{m}");
        }
    }

    #[test]
    fn centroid_examples() {
        let g = group_of(&[&[0.0], &[2.0]]);
        assert_eq!(centroid(&g).unwrap().values(), &[1.0]);
        let single = group_of(&[&[0.3, -1.1]]);
        assert_eq!(centroid(&single).unwrap(), single.members[0].weights);

        let c = centroid(&group_of(&[&[0.1, 0.7], &[0.9, -0.2], &[0.33, 5.0]])).unwrap();
        let again = group_of(&[c.values()]);
        assert_eq!(centroid(&again).unwrap().values(), c.values());
    }

    #[test]
    fn exclude_target_bookkeeping() {
        let g = group_of(&[&[0.0], &[2.0], &[4.0]]);
        let none = exclude_target_centroid(&g, "zzz").unwrap();
        assert_eq!(none.weights, centroid(&g).unwrap());
        assert_eq!(none.excluded, 0);
        let one = exclude_target_centroid(&g, "d1").unwrap();
        assert_eq!(one.members_used, 2);
        assert_eq!(one.weights.values(), &[2.0]);
        let g1 = group_of(&[&[5.0]]);
        assert!(exclude_target_centroid(&g1, "d0").is_err());
    }

    #[test]
    fn random_direction_norm_and_orthogonality() {
        let pre = vec_of(&vec![0.5; 2000]);
        let a = random_direction_model(&pre, 3.0, 1).unwrap();
        let b = random_direction_model(&pre, 3.0, 2).unwrap();
        assert!((distance(a.values(), pre.values()) - 3.0).abs() < 1e-9);
        assert_eq!(a, random_direction_model(&pre, 3.0, 1).unwrap());
        let da: Vec<f64> = a.values().iter().zip(pre.values()).map(|(x, p)| x - p).collect();
        let db: Vec<f64> = b.values().iter().zip(pre.values()).map(|(x, p)| x - p).collect();
        let cos = da.iter().zip(&db).map(|(x, y)| x * y).sum::<f64>() / 9.0;
        assert!(cos.abs() < 0.2, "{cos}");
    }

    #[test]
    fn avg_distance_examples() {
        let pre = vec_of(&[0.0, 0.0]);
        assert_eq!(avg_distance(&group_of(&[&[0.0, 0.0]]), &pre).unwrap(), 0.0);
        assert_eq!(avg_distance(&group_of(&[&[1.0, 0.0]]), &pre).unwrap(), 1.0);
        assert_eq!(avg_distance(&group_of(&[&[1.0, 0.0], &[0.0, 3.0]]), &pre).unwrap(), 2.0);
    }

    #[test]
    fn radius_scan_contract() {
        let c = vec_of(&[3.0, 4.0]);
        let out = radius_scan(&c, DirectionKind::Origin, &[0.0, 1.0, 2.5], 2.0, 0).unwrap();
        assert_eq!(out[0], c);
        assert!(out[2].values().iter().all(|v| v.abs() < 1e-15));
        let rnd = radius_scan(&c, DirectionKind::Random, &[0.5, 1.0, 2.0, 4.0], 1.0, 9).unwrap();
        let d: Vec<f64> = rnd.iter().map(|w| distance(w.values(), c.values())).collect();
        assert!(d.windows(2).all(|w| w[1] > w[0]));
        assert!(radius_scan(&vec_of(&[0.0, 0.0]), DirectionKind::Origin, &[1.0], 1.0, 0).is_err());
    }
}
