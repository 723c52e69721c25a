//! Encoder + head classifier with exact gradients.
//!
//! The encoder is a stack of dense tanh layers; the head is a dense layer
//! producing logits for a softmax cross-entropy loss. Parameters live in a
//! [`WeightVector`] laid out as `enc.{l}.weight, enc.{l}.bias, ...,
//! head.weight, head.bias` with weights stored row-major as `[out, in]`.

use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding::{derive_seed, rng};
use crate::synthgen::LabeledSet;
use crate::weightstore::{ParamSegment, SegmentKind, WeightVector};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelConfig {
    pub input_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub label_count: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            input_dim: 32,
            hidden_dims: vec![64, 32],
            label_count: 2,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden_dims.is_empty() || self.hidden_dims.contains(&0) {
            return Err(Error::InvalidArgument(format!("bad model config {self:?}")));
        }
        if self.label_count < 2 {
            return Err(Error::InvalidArgument("label_count must be >= 2".into()));
        }
        Ok(())
    }

    /// Stable identifier, e.g. `tanh-mlp-32-64x32-2`.
    pub fn config_id(&self) -> String {
        let hidden: Vec<String> = self.hidden_dims.iter().map(|h| h.to_string()).collect();
        format!(
            "tanh-mlp-{}-{}-{}",
            self.input_dim,
            hidden.join("x"),
            self.label_count
        )
    }

    /// Width of the representation the head reads.
    pub fn feature_dim(&self) -> usize {
        *self.hidden_dims.last().expect("validated config has hidden layers")
    }

    fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden_dims.len());
        let mut fan_in = self.input_dim;
        for &h in &self.hidden_dims {
            dims.push((h, fan_in));
            fan_in = h;
        }
        dims
    }

    /// Segment table; head segments are appended when `with_head`.
    pub fn segments(&self, with_head: bool) -> Vec<ParamSegment> {
        let mut segs = Vec::new();
        let mut offset = 0;
        let mut push = |name: String, shape: Vec<usize>, kind| {
            let length = shape.iter().product();
            segs.push(ParamSegment {
                name,
                offset,
                length,
                shape,
                kind,
            });
            offset += length;
        };
        for (l, (out, inp)) in self.layer_dims().into_iter().enumerate() {
            push(format!("enc.{l}.weight"), vec![out, inp], SegmentKind::EncoderWeight);
            push(format!("enc.{l}.bias"), vec![out], SegmentKind::EncoderBias);
        }
        if with_head {
            push("head.weight".into(), vec![self.label_count, self.feature_dim()], SegmentKind::HeadWeight);
            push("head.bias".into(), vec![self.label_count], SegmentKind::HeadBias);
        }
        segs
    }

    pub fn encoder_param_count(&self) -> usize {
        self.layer_dims().iter().map(|(o, i)| o * i + o).sum()
    }

    pub fn head_param_count(&self) -> usize {
        self.label_count * (self.feature_dim() + 1)
    }

    fn check_weights(&self, w: &WeightVector, need_head: bool) -> Result<()> {
        let expected = self.segments(w.has_head());
        if w.segments() != expected.as_slice() {
            return Err(Error::Dimension(format!(
                "weight vector layout does not match {}",
                self.config_id()
            )));
        }
        if need_head && !w.has_head() {
            return Err(Error::NoHead);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrainMode {
    Full,
    BiasOnly,
    HeadOnly,
}

impl TrainMode {
    pub fn trains(self, kind: SegmentKind) -> bool {
        match self {
            TrainMode::Full => true,
            TrainMode::BiasOnly => kind != SegmentKind::EncoderWeight,
            TrainMode::HeadOnly => kind.is_head(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub mode: TrainMode,
    pub learning_rate: f64,
    pub steps: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub max_examples: Option<usize>,
}

impl TrainConfig {
    pub fn new(mode: TrainMode, seed: u64) -> Self {
        TrainConfig {
            mode,
            learning_rate: 0.05,
            steps: 500,
            batch_size: 128,
            seed,
            max_examples: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument("learning_rate must be > 0".into()));
        }
        if self.steps == 0 || self.batch_size == 0 {
            return Err(Error::InvalidArgument("steps and batch_size must be >= 1".into()));
        }
        Ok(())
    }
}

/// Draws Xavier-Gaussian values for one `[out, in]` matrix.
pub(crate) fn xavier_fill(r: &mut impl Rng, shape: &[usize], out: &mut [f64]) {
    let std = xavier_std(shape);
    for v in out {
        *v = std * r.sample::<f64, _>(StandardNormal);
    }
}

/// `sqrt(2 / (fan_in + fan_out))` for a `[out, in]` matrix.
pub fn xavier_std(shape: &[usize]) -> f64 {
    let fan: usize = shape.iter().sum();
    (2.0 / fan as f64).sqrt()
}

/// Xavier-initialized encoder and head, zero biases.
pub fn init_model(config: &ModelConfig, seed: u64) -> Result<WeightVector> {
    config.validate()?;
    let segments = config.segments(true);
    let total = segments.iter().map(|s| s.length).sum();
    let mut values = vec![0.0; total];
    let mut r = rng(seed);
    for seg in &segments {
        if !seg.kind.is_bias() {
            xavier_fill(&mut r, &seg.shape, &mut values[seg.range()]);
        }
    }
    WeightVector::new(values, segments, config.config_id())
}

/// Appends a fresh Xavier head (zero bias) to an encoder-only vector.
pub fn attach_head(encoder: &WeightVector, config: &ModelConfig, seed: u64) -> Result<WeightVector> {
    config.check_weights(encoder, false)?;
    if encoder.has_head() {
        return Err(Error::InvalidArgument("vector already has a head".into()));
    }
    let segments = config.segments(true);
    let mut values = encoder.values().to_vec();
    values.resize(config.encoder_param_count() + config.head_param_count(), 0.0);
    let head_w = &segments[segments.len() - 2];
    let mut r = rng(seed);
    xavier_fill(&mut r, &head_w.shape, &mut values[head_w.range()]);
    WeightVector::new(values, segments, config.config_id())
}

/// Appends an all-zero head, which predicts the uniform distribution.
pub fn attach_zero_head(encoder: &WeightVector, config: &ModelConfig) -> Result<WeightVector> {
    config.check_weights(encoder, false)?;
    let mut values = encoder.values().to_vec();
    values.resize(config.encoder_param_count() + config.head_param_count(), 0.0);
    WeightVector::new(values, config.segments(true), config.config_id())
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

#[inline]
pub(crate) fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// `out[b, o] = w[o, :] · x[b, :] + bias[o]`.
fn affine(x: &[f64], in_dim: usize, w: &[f64], bias: &[f64], out: &mut [f64]) {
    let out_dim = bias.len();
    for (xr, or) in x.chunks_exact(in_dim).zip(out.chunks_exact_mut(out_dim)) {
        for (o, (wr, &b)) in w.chunks_exact(in_dim).zip(bias).enumerate() {
            or[o] = dot(wr, xr) + b;
        }
    }
}

/// Per-layer views into a flat parameter buffer.
struct Layers<'a> {
    enc: Vec<(&'a [f64], &'a [f64], usize)>,
    head: Option<(&'a [f64], &'a [f64])>,
}

fn split_layers<'a>(config: &ModelConfig, values: &'a [f64]) -> Layers<'a> {
    let mut enc = Vec::new();
    let mut pos = 0;
    for (out, inp) in config.layer_dims() {
        let w = &values[pos..pos + out * inp];
        pos += out * inp;
        let b = &values[pos..pos + out];
        pos += out;
        enc.push((w, b, inp));
    }
    let head = (values.len() > pos).then(|| {
        let f = config.feature_dim();
        let w = &values[pos..pos + config.label_count * f];
        let b = &values[pos + config.label_count * f..pos + config.head_param_count()];
        (w, b)
    });
    Layers { enc, head }
}

/// Post-activation outputs of every encoder layer (`acts[0]` is the input).
fn encoder_forward(layers: &Layers<'_>, inputs: &[f64], batch: usize) -> Vec<Vec<f64>> {
    let mut acts = Vec::with_capacity(layers.enc.len() + 1);
    acts.push(inputs.to_vec());
    for (w, b, inp) in &layers.enc {
        let mut out = vec![0.0; batch * b.len()];
        affine(acts.last().unwrap(), *inp, w, b, &mut out);
        out.iter_mut().for_each(|v| *v = v.tanh());
        acts.push(out);
    }
    acts
}

/// Frozen-encoder representation of `set` (`len × feature_dim`, row-major).
pub fn encode(encoder: &WeightVector, config: &ModelConfig, set: &LabeledSet) -> Result<Vec<f64>> {
    config.check_weights(encoder, false)?;
    check_inputs(config, set)?;
    let layers = split_layers(config, encoder.values());
    Ok(encoder_forward(&layers, &set.inputs, set.len()).pop().unwrap())
}

fn check_inputs(config: &ModelConfig, set: &LabeledSet) -> Result<()> {
    if set.is_empty() {
        return Err(Error::InvalidArgument(format!("empty batch from {}", set.dataset_id)));
    }
    if set.input_dim != config.input_dim || set.inputs.len() != set.len() * set.input_dim {
        return Err(Error::Dimension(format!(
            "inputs of width {} for model with input_dim {}",
            set.input_dim, config.input_dim
        )));
    }
    if let Some(&y) = set.labels.iter().find(|&&y| y >= config.label_count) {
        return Err(Error::Dimension(format!("label {y} out of range")));
    }
    Ok(())
}

/// Mean softmax cross-entropy and accuracy for row-major `logits`.
///
/// When `dlogits` is given it receives `(softmax - onehot) / n`.
pub fn softmax_xent(
    logits: &[f64],
    labels: &[usize],
    classes: usize,
    mut dlogits: Option<&mut [f64]>,
) -> (f64, f64) {
    let n = labels.len() as f64;
    let mut loss = 0.0;
    let mut correct = 0usize;
    for (i, (z, &y)) in logits.chunks_exact(classes).zip(labels).enumerate() {
        let mut best = 0;
        for c in 1..classes {
            if z[c] > z[best] {
                best = c;
            }
        }
        correct += usize::from(best == y);
        let m = z[best];
        let sum: f64 = z.iter().map(|v| (v - m).exp()).sum();
        let lse = m + sum.ln();
        loss += lse - z[y];
        if let Some(d) = dlogits.as_deref_mut() {
            let row = &mut d[i * classes..(i + 1) * classes];
            for c in 0..classes {
                row[c] = ((z[c] - lse).exp() - f64::from(u8::from(c == y))) / n;
            }
        }
    }
    (loss / n, correct as f64 / n)
}

/// Mean cross-entropy and exact gradient of `w` on `batch`.
///
/// Gradient entries outside `mode`'s trainable segments are exactly zero.
pub fn loss_and_grad(
    w: &WeightVector,
    config: &ModelConfig,
    batch: &LabeledSet,
    mode: TrainMode,
) -> Result<(f64, Vec<f64>)> {
    config.check_weights(w, true)?;
    check_inputs(config, batch)?;
    let mut grad = vec![0.0; w.len()];
    let loss = forward_backward(config, w.values(), &batch.inputs, &batch.labels, mode, &mut grad);
    Ok((loss, grad))
}

fn forward_backward(
    config: &ModelConfig,
    values: &[f64],
    inputs: &[f64],
    labels: &[usize],
    mode: TrainMode,
    grad: &mut [f64],
) -> f64 {
    let n = labels.len();
    let k = config.label_count;
    let layers = split_layers(config, values);
    let (hw, hb) = layers.head.expect("checked head");
    let acts = encoder_forward(&layers, inputs, n);
    let feat = acts.last().unwrap();
    let f = config.feature_dim();

    let mut logits = vec![0.0; n * k];
    affine(feat, f, hw, hb, &mut logits);
    let mut dz = vec![0.0; n * k];
    let (loss, _) = softmax_xent(&logits, labels, k, Some(&mut dz));

    let enc_len = config.encoder_param_count();
    {
        let (ghw, ghb) = grad[enc_len..].split_at_mut(k * f);
        for (dzr, fr) in dz.chunks_exact(k).zip(feat.chunks_exact(f)) {
            for c in 0..k {
                axpy(&mut ghw[c * f..(c + 1) * f], dzr[c], fr);
                ghb[c] += dzr[c];
            }
        }
    }
    if mode == TrainMode::HeadOnly {
        return loss;
    }

    // delta w.r.t. the last encoder activation
    let mut delta = vec![0.0; n * f];
    for (dr, dzr) in delta.chunks_exact_mut(f).zip(dz.chunks_exact(k)) {
        for c in 0..k {
            axpy(dr, dzr[c], &hw[c * f..(c + 1) * f]);
        }
    }

    let train_weights = mode.trains(SegmentKind::EncoderWeight);
    let mut offsets = Vec::with_capacity(layers.enc.len());
    let mut pos = 0;
    for (w, b, _) in &layers.enc {
        offsets.push(pos);
        pos += w.len() + b.len();
    }
    for l in (0..layers.enc.len()).rev() {
        let (w, b, inp) = layers.enc[l];
        let out = b.len();
        let a = &acts[l + 1];
        for (d, &av) in delta.iter_mut().zip(a) {
            *d *= 1.0 - av * av;
        }
        let prev = &acts[l];
        let (gw, gb) = grad[offsets[l]..offsets[l] + w.len() + out].split_at_mut(w.len());
        for (dr, pr) in delta.chunks_exact(out).zip(prev.chunks_exact(inp)) {
            for o in 0..out {
                gb[o] += dr[o];
                if train_weights {
                    axpy(&mut gw[o * inp..(o + 1) * inp], dr[o], pr);
                }
            }
        }
        if l > 0 {
            let mut next = vec![0.0; n * inp];
            for (nr, dr) in next.chunks_exact_mut(inp).zip(delta.chunks_exact(out)) {
                for o in 0..out {
                    axpy(nr, dr[o], &w[o * inp..(o + 1) * inp]);
                }
            }
            delta = next;
        }
    }
    loss
}

/// Mean cross-entropy and top-1 accuracy of a headed model on `test`.
pub fn evaluate(w: &WeightVector, config: &ModelConfig, test: &LabeledSet) -> Result<(f64, f64)> {
    config.check_weights(w, true)?;
    check_inputs(config, test)?;
    let layers = split_layers(config, w.values());
    let (hw, hb) = layers.head.expect("checked head");
    let feat = encoder_forward(&layers, &test.inputs, test.len()).pop().unwrap();
    let mut logits = vec![0.0; test.len() * config.label_count];
    affine(&feat, config.feature_dim(), hw, hb, &mut logits);
    Ok(softmax_xent(&logits, &test.labels, config.label_count, None))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainMetrics {
    pub initial_train_loss: f64,
    pub final_train_loss: f64,
    pub final_train_accuracy: f64,
    pub steps: usize,
    pub examples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trained {
    pub weights: WeightVector,
    pub metrics: TrainMetrics,
}

/// Mini-batch gradient descent over seeded epoch shuffles.
///
/// Aborts when a batch loss is non-finite or exceeds ten times the initial
/// full-set loss.
pub fn train(
    mut w: WeightVector,
    config: &ModelConfig,
    data: &LabeledSet,
    tc: &TrainConfig,
) -> Result<Trained> {
    tc.validate()?;
    config.check_weights(&w, true)?;
    check_inputs(config, data)?;

    let n = data.len();
    let d = config.input_dim;
    let bs = tc.batch_size.min(n);
    let mask: Vec<(std::ops::Range<usize>, bool)> = w
        .segments()
        .iter()
        .map(|s| (s.range(), tc.mode.trains(s.kind)))
        .collect();

    let mut scratch = vec![0.0; w.len()];
    let initial = forward_backward(config, w.values(), &data.inputs, &data.labels, TrainMode::HeadOnly, &mut scratch);
    let mut r = rng(derive_seed(tc.seed, "shuffle"));
    let mut order: Vec<usize> = Vec::new();
    let mut cursor = 0;
    let mut xb = Vec::with_capacity(bs * d);
    let mut yb = Vec::with_capacity(bs);

    for step in 0..tc.steps {
        xb.clear();
        yb.clear();
        while yb.len() < bs {
            if cursor == order.len() {
                order = index::sample(&mut r, n, n).into_vec();
                cursor = 0;
            }
            let i = order[cursor];
            cursor += 1;
            xb.extend_from_slice(data.row(i));
            yb.push(data.labels[i]);
        }
        scratch.iter_mut().for_each(|g| *g = 0.0);
        let loss = forward_backward(config, w.values(), &xb, &yb, tc.mode, &mut scratch);
        if !loss.is_finite() || loss > 10.0 * initial {
            return Err(Error::Diverged { step, loss });
        }
        let values = w.values_mut();
        for (range, trainable) in &mask {
            if *trainable {
                for i in range.clone() {
                    values[i] -= tc.learning_rate * scratch[i];
                }
            }
        }
    }
    w.validate()?;
    let (final_loss, final_acc) = evaluate(&w, config, data)?;
    Ok(Trained {
        weights: w,
        metrics: TrainMetrics {
            initial_train_loss: initial,
            final_train_loss: final_loss,
            final_train_accuracy: final_acc,
            steps: tc.steps,
            examples: n,
        },
    })
}

/// Trains a fresh model on the proxy corpus in full mode.
pub fn pretrain(config: &ModelConfig, corpus: &LabeledSet, tc: &TrainConfig) -> Result<Trained> {
    let w = init_model(config, derive_seed(tc.seed, "init"))?;
    let tc = TrainConfig {
        mode: TrainMode::Full,
        ..tc.clone()
    };
    train(w, config, corpus, &tc)
}

/// Attaches a seeded head to `pre` and trains on `train_set`.
pub fn finetune(
    pre: &WeightVector,
    config: &ModelConfig,
    train_set: &LabeledSet,
    tc: &TrainConfig,
) -> Result<Trained> {
    finetune_with_head(pre, derive_seed(tc.seed, "head"), config, train_set, tc)
}

/// [`finetune`] with the head drawn from `head_seed` instead of from `tc.seed`.
pub fn finetune_with_head(
    pre: &WeightVector,
    head_seed: u64,
    config: &ModelConfig,
    train_set: &LabeledSet,
    tc: &TrainConfig,
) -> Result<Trained> {
    if tc.mode == TrainMode::HeadOnly {
        return Err(Error::InvalidArgument(
            "finetune supports full and bias-only modes".into(),
        ));
    }
    if pre.has_head() {
        return Err(Error::InvalidArgument("finetune expects an encoder-only vector".into()));
    }
    let w = attach_head(pre, config, head_seed)?;
    match tc.max_examples {
        Some(cap) if cap < train_set.len() => {
            let mut r = rng(derive_seed(tc.seed, "few-shot"));
            let order = index::sample(&mut r, train_set.len(), train_set.len()).into_vec();
            train(w, config, &train_set.select(&order[..cap]), tc)
        }
        _ => train(w, config, train_set, tc),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthgen::Split;

    fn toy_set(n: usize, dim: usize, seed: u64) -> LabeledSet {
        let mut r = rng(seed);
        let inputs: Vec<f64> = (0..n * dim).map(|_| r.sample(StandardNormal)).collect();
        let labels = (0..n).map(|i| usize::from(inputs[i * dim] > 0.0)).collect();
        LabeledSet {
            inputs,
            input_dim: dim,
            labels,
            split: Split::Train,
            dataset_id: "toy".into(),
            family_id: "toy".into(),
        }
    }

    #[test]
    fn init_has_zero_biases_and_is_seeded() {
        let cfg = ModelConfig::default();
        let w = init_model(&cfg, 3).unwrap();
        for s in w.segments().iter().filter(|s| s.kind.is_bias()) {
            assert!(w.values()[s.range()].iter().all(|&v| v == 0.0));
        }
        assert_eq!(w, init_model(&cfg, 3).unwrap());
        assert_ne!(w, init_model(&cfg, 4).unwrap());
    }

    #[test]
    fn xavier_variance_of_64_by_32_layer() {
        let cfg = ModelConfig {
            input_dim: 32,
            hidden_dims: vec![64],
            label_count: 2,
        };
        let w = init_model(&cfg, 17).unwrap();
        let seg = w.segment("enc.0.weight").unwrap();
        let vals = &w.values()[seg.range()];
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (vals.len() - 1) as f64;
        let target = 2.0 / 96.0;
        assert!((var - target).abs() <= 0.2 * target, "var {var}");
    }

    #[test]
    fn symmetric_head_gives_log_two() {
        let cfg = ModelConfig {
            input_dim: 8,
            ..ModelConfig::default()
        };
        let enc = init_model(&cfg, 1).unwrap().strip_head().unwrap();
        let w = attach_zero_head(&enc, &cfg).unwrap();
        let (loss, _) = loss_and_grad(&w, &cfg, &toy_set(200, 8, 2), TrainMode::Full).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 0.05);
    }

    #[test]
    fn gradient_matches_central_differences() {
        // 6 -> 8 -> 4 -> 2: 56 + 36 + 10 = 102 parameters
        let cfg = ModelConfig {
            input_dim: 6,
            hidden_dims: vec![8, 4],
            label_count: 2,
        };
        let mut w = init_model(&cfg, 5).unwrap();
        let mut r = rng(99);
        for v in w.values_mut() {
            *v += 0.3 * r.sample::<f64, _>(StandardNormal);
        }
        let batch = toy_set(16, 6, 7);
        let (_, grad) = loss_and_grad(&w, &cfg, &batch, TrainMode::Full).unwrap();
        let h = 1e-5;
        for i in 0..w.len() {
            let mut plus = w.clone();
            plus.values_mut()[i] += h;
            let mut minus = w.clone();
            minus.values_mut()[i] -= h;
            let (lp, _) = loss_and_grad(&plus, &cfg, &batch, TrainMode::Full).unwrap();
            let (lm, _) = loss_and_grad(&minus, &cfg, &batch, TrainMode::Full).unwrap();
            let fd = (lp - lm) / (2.0 * h);
            let rel = (fd - grad[i]).abs() / fd.abs().max(grad[i].abs()).max(1e-8);
            assert!(rel <= 1e-4 || (fd - grad[i]).abs() < 1e-9, "param {i}: fd {fd} analytic {}", grad[i]);
        }
    }

    #[test]
    fn mode_masks_gradients() {
        let cfg = ModelConfig {
            input_dim: 8,
            hidden_dims: vec![6, 4],
            label_count: 2,
        };
        let w = init_model(&cfg, 2).unwrap();
        let batch = toy_set(20, 8, 3);
        for mode in [TrainMode::BiasOnly, TrainMode::HeadOnly] {
            let (_, g) = loss_and_grad(&w, &cfg, &batch, mode).unwrap();
            for s in w.segments() {
                let nonzero = g[s.range()].iter().any(|&v| v != 0.0);
                if !mode.trains(s.kind) {
                    assert!(!nonzero, "{mode:?} {}", s.name);
                } else {
                    assert!(nonzero, "{mode:?} {}", s.name);
                }
            }
        }
    }

    #[test]
    fn evaluate_matches_hand_softmax() {
        // single hidden unit; construct logits by hand through the head
        let cfg = ModelConfig {
            input_dim: 1,
            hidden_dims: vec![1],
            label_count: 2,
        };
        // enc: w=1, b=0 -> h = tanh(x); head: w=[0, 2], b=[0.5, 0]
        let w = WeightVector::new(vec![1.0, 0.0, 0.0, 2.0, 0.5, 0.0], cfg.segments(true), cfg.config_id())
            .unwrap();
        let xs = [0.3, -1.2, 2.0];
        let ys = [1usize, 0, 0];
        let set = LabeledSet {
            inputs: xs.to_vec(),
            input_dim: 1,
            labels: ys.to_vec(),
            split: Split::Test,
            dataset_id: "t".into(),
            family_id: "t".into(),
        };
        let mut expected = 0.0;
        let mut correct = 0.0;
        for (x, y) in xs.iter().zip(ys) {
            let h = f64::tanh(*x);
            let z = [0.5, 2.0 * h];
            let p1 = z[1].exp() / (z[0].exp() + z[1].exp());
            let p = if y == 1 { p1 } else { 1.0 - p1 };
            expected -= p.ln();
            if (p1 > 0.5) == (y == 1) {
                correct += 1.0;
            }
        }
        let (loss, acc) = evaluate(&w, &cfg, &set).unwrap();
        assert!((loss - expected / 3.0).abs() < 1e-12);
        assert_eq!(acc, correct / 3.0);
    }

    #[test]
    fn evaluate_needs_head() {
        let cfg = ModelConfig::default();
        let enc = init_model(&cfg, 0).unwrap().strip_head().unwrap();
        assert!(matches!(evaluate(&enc, &cfg, &toy_set(4, 32, 0)), Err(Error::NoHead)));
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let cfg = ModelConfig::default();
        let w = init_model(&cfg, 0).unwrap();
        assert!(matches!(
            loss_and_grad(&w, &cfg, &toy_set(4, 8, 0), TrainMode::Full),
            Err(Error::Dimension(_))
        ));
    }
}
