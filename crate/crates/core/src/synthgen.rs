//! Synthetic task families.
//!
//! Three built-in families share the input distribution (standard normal in
//! `input_dim` dimensions) and differ in the structure of the labelling rule:
//!
//! * linear-threshold: `y = [w·x > 0]`
//! * band-membership: `y = [|v·x| < τ]`
//! * sign-parity: `y = [x_a > 0] xor [x_b > 0]`
//!
//! Datasets inside a family draw their rule parameters from a family-shared
//! structure (a direction scattered inside a low-dimensional subspace, or a
//! small pool of coordinates), so they are related but not identical. Every family subspace is orthogonal to the
//! all-ones direction used by the pretraining proxy rule.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding::{derive_seed, rng, LabRng};

/// Dimension of the subspace a family's rule vectors live in.
pub const FAMILY_SUBSPACE_DIM: usize = 4;
/// Spread of a dataset's rule vector around its family anchor, relative to
/// the unit-norm anchor.
pub const FAMILY_SPREAD: f64 = 0.75;
/// Coordinates available to sign-parity datasets within one family.
pub const PARITY_POOL: usize = 4;
/// `τ` with `P(|z| < τ) = 1/2` for standard normal `z`.
pub const BAND_TAU: f64 = 0.674_489_750_196_081_7;
/// Whole-split regeneration attempts before the rule seed is perturbed.
pub const MAX_BALANCE_ATTEMPTS: usize = 16;
const MAX_RULE_PERTURBATIONS: u64 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleKind {
    LinearThreshold,
    BandMembership,
    SignParity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskFamilySpec {
    pub family_id: String,
    pub rule_kind: RuleKind,
    pub input_dim: usize,
    pub shared_subspace_seed: u64,
    pub num_datasets: usize,
}

impl TaskFamilySpec {
    pub fn validate(&self) -> Result<()> {
        if self.input_dim < 8 {
            return Err(Error::InvalidArgument(format!(
                "family {}: input_dim {} < 8",
                self.family_id, self.input_dim
            )));
        }
        if self.num_datasets < 2 {
            return Err(Error::InvalidArgument(format!(
                "family {}: needs at least 2 datasets",
                self.family_id
            )));
        }
        Ok(())
    }

    /// The family's datasets: ids `<family>-<k>`, rule seeds `0..num_datasets`.
    pub fn datasets(&self, n_train: usize, n_test: usize) -> Vec<DatasetSpec> {
        (0..self.num_datasets)
            .map(|k| DatasetSpec {
                dataset_id: format!("{}-{k}", self.family_id),
                family_id: self.family_id.clone(),
                rule_params_seed: k as u64,
                n_train,
                n_test,
                label_count: 2,
            })
            .collect()
    }
}

/// The three built-in families, one per rule kind.
pub fn builtin_families(input_dim: usize, num_datasets: usize, seed: u64) -> Vec<TaskFamilySpec> {
    [
        ("linear", RuleKind::LinearThreshold),
        ("band", RuleKind::BandMembership),
        ("parity", RuleKind::SignParity),
    ]
    .into_iter()
    .map(|(id, kind)| TaskFamilySpec {
        family_id: id.to_owned(),
        rule_kind: kind,
        input_dim,
        shared_subspace_seed: derive_seed(seed, id),
        num_datasets,
    })
    .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub dataset_id: String,
    pub family_id: String,
    pub rule_params_seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub label_count: usize,
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_train < 64 || self.n_test < 256 {
            return Err(Error::InvalidArgument(format!(
                "dataset {}: needs n_train >= 64 and n_test >= 256 (got {}, {})",
                self.dataset_id, self.n_train, self.n_test
            )));
        }
        if self.label_count != 2 {
            return Err(Error::InvalidArgument(format!(
                "dataset {}: only binary labels are supported",
                self.dataset_id
            )));
        }
        Ok(())
    }
}

/// Row-major inputs with integer labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSet {
    pub inputs: Vec<f64>,
    pub input_dim: usize,
    pub labels: Vec<usize>,
    pub split: Split,
    pub dataset_id: String,
    pub family_id: String,
}

impl LabeledSet {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.input_dim..(i + 1) * self.input_dim]
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&y| y == 1).count()
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> LabeledSet {
        let mut inputs = Vec::with_capacity(indices.len() * self.input_dim);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            inputs.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        LabeledSet {
            inputs,
            input_dim: self.input_dim,
            labels,
            split: self.split,
            dataset_id: self.dataset_id.clone(),
            family_id: self.family_id.clone(),
        }
    }

    fn balanced(&self) -> bool {
        let frac = self.positives() as f64 / self.len() as f64;
        (0.4..=0.6).contains(&frac)
    }
}

/// Concrete labelling rule of one dataset.
#[derive(Debug, Clone, PartialEq)]
pub enum RuleParams {
    Linear { w: Vec<f64> },
    Band { v: Vec<f64>, tau: f64 },
    Parity { a: usize, b: usize },
}

impl RuleParams {
    pub fn label(&self, x: &[f64]) -> usize {
        match self {
            RuleParams::Linear { w } => usize::from(dot(w, x) > 0.0),
            RuleParams::Band { v, tau } => usize::from(dot(v, x).abs() < *tau),
            RuleParams::Parity { a, b } => usize::from((x[*a] > 0.0) ^ (x[*b] > 0.0)),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) {
    let n = dot(v, v).sqrt();
    v.iter_mut().for_each(|x| *x /= n);
}

/// Orthonormal basis of the family subspace, orthogonal to the all-ones vector.
pub fn family_basis(family: &TaskFamilySpec) -> Vec<Vec<f64>> {
    let d = family.input_dim;
    let mut r = rng(derive_seed(family.shared_subspace_seed, "subspace"));
    let ones = vec![1.0 / (d as f64).sqrt(); d];
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(FAMILY_SUBSPACE_DIM);
    while basis.len() < FAMILY_SUBSPACE_DIM {
        let mut v: Vec<f64> = (0..d).map(|_| r.sample(StandardNormal)).collect();
        for b in std::iter::once(&ones).chain(basis.iter()) {
            let p = dot(&v, b);
            v.iter_mut().zip(b).for_each(|(x, bi)| *x -= p * bi);
        }
        if dot(&v, &v).sqrt() > 1e-6 {
            normalize(&mut v);
            basis.push(v);
        }
    }
    basis
}

/// Unit-norm coefficients, in the family basis, of the direction every
/// dataset's rule vector scatters around.
pub fn family_anchor(family: &TaskFamilySpec) -> Vec<f64> {
    let mut r = rng(derive_seed(family.shared_subspace_seed, "anchor"));
    let mut a: Vec<f64> = (0..FAMILY_SUBSPACE_DIM).map(|_| r.sample(StandardNormal)).collect();
    normalize(&mut a);
    a
}

/// Coordinate pool shared by the sign-parity datasets of a family.
pub fn parity_pool(family: &TaskFamilySpec) -> Vec<usize> {
    let mut r = rng(derive_seed(family.shared_subspace_seed, "pool"));
    index::sample(&mut r, family.input_dim, PARITY_POOL.min(family.input_dim)).into_vec()
}

/// Rule parameters for `rule_seed` within `family`.
///
/// For sign-parity, seeds select pairs from a family-shuffled list of all
/// pool pairs, so seeds that differ modulo the pair count give distinct pairs.
pub fn rule_params(family: &TaskFamilySpec, rule_seed: u64) -> RuleParams {
    match family.rule_kind {
        RuleKind::LinearThreshold | RuleKind::BandMembership => {
            let basis = family_basis(family);
            let anchor = family_anchor(family);
            let mut r = rng(derive_seed(family.shared_subspace_seed, &format!("rule-{rule_seed}")));
            let scale = FAMILY_SPREAD / (basis.len() as f64).sqrt();
            let mut v = vec![0.0; family.input_dim];
            for (b, a) in basis.iter().zip(&anchor) {
                let c = a + scale * r.sample::<f64, _>(StandardNormal);
                v.iter_mut().zip(b).for_each(|(x, bi)| *x += c * bi);
            }
            normalize(&mut v);
            if family.rule_kind == RuleKind::LinearThreshold {
                RuleParams::Linear { w: v }
            } else {
                RuleParams::Band { v, tau: BAND_TAU }
            }
        }
        RuleKind::SignParity => {
            let pool = parity_pool(family);
            let mut pairs = Vec::new();
            for i in 0..pool.len() {
                for j in i + 1..pool.len() {
                    pairs.push((pool[i], pool[j]));
                }
            }
            let mut r = rng(derive_seed(family.shared_subspace_seed, "pairs"));
            let order = index::sample(&mut r, pairs.len(), pairs.len()).into_vec();
            let (a, b) = pairs[order[(rule_seed % pairs.len() as u64) as usize]];
            RuleParams::Parity { a, b }
        }
    }
}

/// Train and test splits of one dataset plus generation metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetPair {
    pub spec: DatasetSpec,
    pub train: LabeledSet,
    pub test: LabeledSet,
    pub meta: GenerationMeta,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationMeta {
    /// Rule seed actually used; differs from the spec when balance failed.
    pub rule_seed_used: u64,
    pub rule_perturbed: bool,
    pub attempts: usize,
}

fn draw_split(
    r: &mut LabRng,
    n: usize,
    dim: usize,
    split: Split,
    ids: (&str, &str),
    label: impl Fn(&[f64]) -> usize,
) -> LabeledSet {
    let mut inputs = Vec::with_capacity(n * dim);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let start = inputs.len();
        inputs.extend((0..dim).map(|_| r.sample::<f64, _>(StandardNormal)));
        labels.push(label(&inputs[start..]));
    }
    LabeledSet {
        inputs,
        input_dim: dim,
        labels,
        split,
        dataset_id: ids.0.to_owned(),
        family_id: ids.1.to_owned(),
    }
}

fn draw_balanced(
    seed: u64,
    n: usize,
    dim: usize,
    split: Split,
    ids: (&str, &str),
    label: &impl Fn(&[f64]) -> usize,
    attempts: &mut usize,
) -> Option<LabeledSet> {
    let mut r = rng(seed);
    for _ in 0..MAX_BALANCE_ATTEMPTS {
        *attempts += 1;
        let set = draw_split(&mut r, n, dim, split, ids, label);
        if set.balanced() {
            return Some(set);
        }
    }
    None
}

/// Generates the train/test splits of `spec`; a pure function of its inputs.
pub fn gen_dataset(spec: &DatasetSpec, family: &TaskFamilySpec, seed: u64) -> Result<DatasetPair> {
    if spec.family_id != family.family_id {
        return Err(Error::InvalidArgument(format!(
            "dataset {} belongs to family {}, not {}",
            spec.dataset_id, spec.family_id, family.family_id
        )));
    }
    family.validate()?;
    spec.validate()?;
    let ids = (spec.dataset_id.as_str(), spec.family_id.as_str());
    let base = derive_seed(seed, &spec.dataset_id);
    let mut attempts = 0;
    for p in 0..MAX_RULE_PERTURBATIONS {
        let rule_seed = spec.rule_params_seed.wrapping_add(p * 1_000_003);
        let rule = rule_params(family, rule_seed);
        let label = |x: &[f64]| rule.label(x);
        let stream = derive_seed(base, &format!("rule-{rule_seed}"));
        let train = draw_balanced(
            derive_seed(stream, "train"),
            spec.n_train,
            family.input_dim,
            Split::Train,
            ids,
            &label,
            &mut attempts,
        );
        let test = draw_balanced(
            derive_seed(stream, "test"),
            spec.n_test,
            family.input_dim,
            Split::Test,
            ids,
            &label,
            &mut attempts,
        );
        if let (Some(train), Some(test)) = (train, test) {
            return Ok(DatasetPair {
                spec: spec.clone(),
                train,
                test,
                meta: GenerationMeta {
                    rule_seed_used: rule_seed,
                    rule_perturbed: p > 0,
                    attempts,
                },
            });
        }
    }
    Err(Error::InvalidArgument(format!(
        "dataset {}: could not draw a balanced sample after {attempts} attempts",
        spec.dataset_id
    )))
}

/// Uniform without-replacement subsample of `n` rows.
pub fn subsample(train: &LabeledSet, n: usize, seed: u64) -> Result<LabeledSet> {
    if n > train.len() {
        return Err(Error::InvalidArgument(format!(
            "subsample of {n} requested from {} examples",
            train.len()
        )));
    }
    let mut r = rng(seed);
    let idx = index::sample(&mut r, train.len(), n).into_vec();
    Ok(train.select(&idx))
}

/// The pretraining proxy label: sign of the coordinate sum.
pub fn proxy_label(x: &[f64]) -> usize {
    usize::from(x.iter().sum::<f64>() > 0.0)
}

/// Mixed corpus for pretraining, labelled by [`proxy_label`].
pub fn pretrain_corpus(families: &[TaskFamilySpec], size: usize, seed: u64) -> Result<LabeledSet> {
    let first = families
        .first()
        .ok_or_else(|| Error::InvalidArgument("pretraining needs at least one family".into()))?;
    if families.iter().any(|f| f.input_dim != first.input_dim) {
        return Err(Error::InvalidArgument(
            "families disagree on input_dim".into(),
        ));
    }
    if size == 0 {
        return Err(Error::InvalidArgument("empty pretraining corpus".into()));
    }
    let mut attempts = 0;
    draw_balanced(
        derive_seed(seed, "pretrain-corpus"),
        size,
        first.input_dim,
        Split::Train,
        ("pretrain", "mixed"),
        &proxy_label,
        &mut attempts,
    )
    .ok_or_else(|| Error::InvalidArgument("unbalanced pretraining corpus".into()))
}

/// CSV with header `dataset_id,family_id,split,label,x0..x{d-1}`.
pub fn write_csv(sets: &[&LabeledSet], path: &Path) -> Result<()> {
    let dim = sets.first().map_or(0, |s| s.input_dim);
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["dataset_id".to_owned(), "family_id".into(), "split".into(), "label".into()];
    header.extend((0..dim).map(|i| format!("x{i}")));
    w.write_record(&header)?;
    for set in sets {
        for i in 0..set.len() {
            let mut rec = vec![
                set.dataset_id.clone(),
                set.family_id.clone(),
                set.split.as_str().to_owned(),
                set.labels[i].to_string(),
            ];
            rec.extend(set.row(i).iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

const CACHE_MAGIC: &[u8; 4] = b"WDS1";

/// Binary cache: ids, split, labels (u8), then inputs as LE f64.
pub fn encode_binary(set: &LabeledSet) -> Vec<u8> {
    let mut buf = Vec::with_capacity(32 + set.len() * (1 + 8 * set.input_dim));
    buf.extend_from_slice(CACHE_MAGIC);
    for s in [&set.dataset_id, &set.family_id] {
        buf.extend_from_slice(&(s.len() as u16).to_le_bytes());
        buf.extend_from_slice(s.as_bytes());
    }
    buf.push(match set.split {
        Split::Train => 0,
        Split::Test => 1,
    });
    buf.extend_from_slice(&(set.input_dim as u32).to_le_bytes());
    buf.extend_from_slice(&(set.len() as u64).to_le_bytes());
    buf.extend(set.labels.iter().map(|&y| y as u8));
    for v in &set.inputs {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf
}

pub fn decode_binary(bytes: &[u8]) -> Result<LabeledSet> {
    let bad = |m: &str| Error::Format(format!("dataset cache: {m}"));
    let mut pos = 0usize;
    let mut take = |n: usize| -> Result<&[u8]> {
        let s = bytes.get(pos..pos + n).ok_or_else(|| bad("truncated"))?;
        pos += n;
        Ok(s)
    };
    if take(4)? != CACHE_MAGIC {
        return Err(bad("bad magic"));
    }
    let mut ids = Vec::new();
    for _ in 0..2 {
        let n = u16::from_le_bytes(take(2)?.try_into().unwrap()) as usize;
        ids.push(String::from_utf8(take(n)?.to_vec()).map_err(|_| bad("utf-8"))?);
    }
    let split = match take(1)?[0] {
        0 => Split::Train,
        1 => Split::Test,
        _ => return Err(bad("split")),
    };
    let dim = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
    let rows = u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize;
    let labels = take(rows)?.iter().map(|&b| b as usize).collect();
    let inputs = take(rows * dim * 8)?
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let family_id = ids.pop().unwrap();
    let dataset_id = ids.pop().unwrap();
    Ok(LabeledSet {
        inputs,
        input_dim: dim,
        labels,
        split,
        dataset_id,
        family_id,
    })
}

pub fn write_binary(set: &LabeledSet, path: &Path) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&encode_binary(set)).map_err(|e| Error::io(path, e))
}
