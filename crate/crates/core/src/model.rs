//! Siamese Bradley-Terry style model.
//!
//! One shared head maps a feature vector to a 16-d style embedding and
//! four per-style scores:
//!
//! ```text
//! hidden     = tanh(f · W1 + b1)          W1: D × H
//! embedding  = hidden · W2 + b2           W2: H × 16
//! scores     = embedding · W3 + b3        W3: 16 × 4
//! ```
//!
//! For a pair of images and a style `s`, the probability that the first
//! image wins is `σ(scores_a[s] − scores_b[s])`. Both towers share every
//! parameter, so gradients from both images land in the same buffers.
//!
//! Parameters live in one flat row-major vector laid out as
//! `W1, b1, W2, b2, W3, b3`.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::catalog::{Style, NUM_STYLES};
use crate::comparisons::Label;
use crate::error::{Error, Result};

/// Width of the style embedding layer.
pub const EMBED_DIM: usize = 16;

pub type Embedding = [f64; EMBED_DIM];
pub type Scores = [f64; NUM_STYLES];

const CHECKPOINT_FORMAT: &str = "stylesim-checkpoint";
const CHECKPOINT_VERSION: u32 = 1;

/// Offsets of each parameter block in the flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Layout {
    input: usize,
    hidden: usize,
}

impl Layout {
    fn w1(&self) -> usize {
        0
    }
    fn b1(&self) -> usize {
        self.input * self.hidden
    }
    fn w2(&self) -> usize {
        self.b1() + self.hidden
    }
    fn b2(&self) -> usize {
        self.w2() + self.hidden * EMBED_DIM
    }
    fn w3(&self) -> usize {
        self.b2() + EMBED_DIM
    }
    fn b3(&self) -> usize {
        self.w3() + EMBED_DIM * NUM_STYLES
    }
    fn len(&self) -> usize {
        self.b3() + NUM_STYLES
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StyleModel {
    layout: Layout,
    seed: u64,
    params: Vec<f64>,
}

/// Output of one tower.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Forward {
    pub embedding: Embedding,
    pub scores: Scores,
}

/// Gradient of the comparison loss, laid out like the model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub values: Vec<f64>,
    pub loss: f64,
}

struct Trace {
    hidden: Vec<f64>,
    out: Forward,
}

impl StyleModel {
    /// Uniform `[-1/√fan_in, 1/√fan_in]` weights, zero biases.
    pub fn init(input_dim: usize, hidden_dim: usize, seed: u64) -> Result<StyleModel> {
        if input_dim == 0 || hidden_dim == 0 {
            return Err(Error::InvalidArgument(
                "input and hidden dimensions must be at least 1".into(),
            ));
        }
        let layout = Layout {
            input: input_dim,
            hidden: hidden_dim,
        };
        let mut params = vec![0.0; layout.len()];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let blocks = [
            (layout.w1(), layout.b1(), input_dim),
            (layout.w2(), layout.b2(), hidden_dim),
            (layout.w3(), layout.b3(), EMBED_DIM),
        ];
        for (start, end, fan_in) in blocks {
            let bound = 1.0 / (fan_in as f64).sqrt();
            for p in &mut params[start..end] {
                *p = rng.random_range(-bound..=bound);
            }
        }
        Ok(StyleModel {
            layout,
            seed,
            params,
        })
    }

    /// Model with every parameter set to zero.
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Result<StyleModel> {
        let mut m = StyleModel::init(input_dim, hidden_dim, 0)?;
        m.params.fill(0.0);
        Ok(m)
    }

    pub fn input_dim(&self) -> usize {
        self.layout.input
    }

    pub fn hidden_dim(&self) -> usize {
        self.layout.hidden
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn w1(&self) -> &[f64] {
        &self.params[self.layout.w1()..self.layout.b1()]
    }
    pub fn b1(&self) -> &[f64] {
        &self.params[self.layout.b1()..self.layout.w2()]
    }
    pub fn w2(&self) -> &[f64] {
        &self.params[self.layout.w2()..self.layout.b2()]
    }
    pub fn b2(&self) -> &[f64] {
        &self.params[self.layout.b2()..self.layout.w3()]
    }
    pub fn w3(&self) -> &[f64] {
        &self.params[self.layout.w3()..self.layout.b3()]
    }
    pub fn b3(&self) -> &[f64] {
        &self.params[self.layout.b3()..]
    }

    pub fn w1_mut(&mut self) -> &mut [f64] {
        let (a, b) = (self.layout.w1(), self.layout.b1());
        &mut self.params[a..b]
    }
    pub fn b1_mut(&mut self) -> &mut [f64] {
        let (a, b) = (self.layout.b1(), self.layout.w2());
        &mut self.params[a..b]
    }
    pub fn w2_mut(&mut self) -> &mut [f64] {
        let (a, b) = (self.layout.w2(), self.layout.b2());
        &mut self.params[a..b]
    }
    pub fn b2_mut(&mut self) -> &mut [f64] {
        let (a, b) = (self.layout.b2(), self.layout.w3());
        &mut self.params[a..b]
    }
    pub fn w3_mut(&mut self) -> &mut [f64] {
        let (a, b) = (self.layout.w3(), self.layout.b3());
        &mut self.params[a..b]
    }
    pub fn b3_mut(&mut self) -> &mut [f64] {
        let a = self.layout.b3();
        &mut self.params[a..]
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    fn check_input(&self, features: &[f64]) -> Result<()> {
        if features.len() != self.layout.input {
            return Err(Error::DimensionMismatch {
                context: "model input".into(),
                expected: self.layout.input,
                found: features.len(),
            });
        }
        Ok(())
    }

    fn trace(&self, features: &[f64]) -> Trace {
        let (d, h) = (self.layout.input, self.layout.hidden);
        let (w1, b1, w2, b2, w3, b3) = (
            self.w1(),
            self.b1(),
            self.w2(),
            self.b2(),
            self.w3(),
            self.b3(),
        );

        let mut hidden = b1.to_vec();
        for (i, &x) in features.iter().enumerate() {
            let row = &w1[i * h..(i + 1) * h];
            for (acc, &w) in hidden.iter_mut().zip(row) {
                *acc += x * w;
            }
        }
        debug_assert_eq!(features.len(), d);
        for v in &mut hidden {
            *v = v.tanh();
        }

        let mut embedding = [0.0; EMBED_DIM];
        embedding.copy_from_slice(b2);
        for (j, &a) in hidden.iter().enumerate() {
            let row = &w2[j * EMBED_DIM..(j + 1) * EMBED_DIM];
            for (acc, &w) in embedding.iter_mut().zip(row) {
                *acc += a * w;
            }
        }

        let mut scores = [0.0; NUM_STYLES];
        scores.copy_from_slice(b3);
        for (k, &e) in embedding.iter().enumerate() {
            let row = &w3[k * NUM_STYLES..(k + 1) * NUM_STYLES];
            for (acc, &w) in scores.iter_mut().zip(row) {
                *acc += e * w;
            }
        }

        Trace {
            hidden,
            out: Forward { embedding, scores },
        }
    }

    pub fn forward(&self, features: &[f64]) -> Result<Forward> {
        self.check_input(features)?;
        Ok(self.trace(features).out)
    }

    pub fn embed(&self, features: &[f64]) -> Result<Embedding> {
        Ok(self.forward(features)?.embedding)
    }

    pub fn scores(&self, features: &[f64]) -> Result<Scores> {
        Ok(self.forward(features)?.scores)
    }

    /// Backpropagates `upstream = dL/dscores[style]` through one tower and
    /// adds `scale ·` gradient into `grad`.
    fn backward_into(
        &self,
        features: &[f64],
        trace: &Trace,
        style: usize,
        upstream: f64,
        grad: &mut [f64],
    ) {
        let l = self.layout;
        let h = l.hidden;
        let w2 = self.w2();
        let w3 = self.w3();

        // scores[style] = Σ_k embedding[k] · W3[k, style] + b3[style]
        grad[l.b3() + style] += upstream;
        let mut d_embedding = [0.0; EMBED_DIM];
        for k in 0..EMBED_DIM {
            grad[l.w3() + k * NUM_STYLES + style] += trace.out.embedding[k] * upstream;
            d_embedding[k] = w3[k * NUM_STYLES + style] * upstream;
        }

        let mut d_pre = vec![0.0; h];
        for j in 0..h {
            let a = trace.hidden[j];
            let row = &w2[j * EMBED_DIM..(j + 1) * EMBED_DIM];
            let g = &mut grad[l.w2() + j * EMBED_DIM..l.w2() + (j + 1) * EMBED_DIM];
            let mut d_hidden = 0.0;
            for k in 0..EMBED_DIM {
                g[k] += a * d_embedding[k];
                d_hidden += row[k] * d_embedding[k];
            }
            d_pre[j] = d_hidden * (1.0 - a * a);
        }
        for (g, d) in grad[l.b2()..l.w3()].iter_mut().zip(&d_embedding) {
            *g += d;
        }

        for (i, &x) in features.iter().enumerate() {
            let g = &mut grad[l.w1() + i * h..l.w1() + (i + 1) * h];
            for (gj, dj) in g.iter_mut().zip(&d_pre) {
                *gj += x * dj;
            }
        }
        for (g, d) in grad[l.b1()..l.w2()].iter_mut().zip(&d_pre) {
            *g += d;
        }
    }

    /// Adds `scale · ∇L` for one comparison into `grad` and returns the loss.
    pub(crate) fn accumulate_gradient(
        &self,
        features_a: &[f64],
        features_b: &[f64],
        style: Style,
        label: Label,
        scale: f64,
        grad: &mut [f64],
    ) -> f64 {
        let ta = self.trace(features_a);
        let tb = self.trace(features_b);
        let s = style.code();
        let diff = ta.out.scores[s] - tb.out.scores[s];
        let loss = pairwise_logistic_loss(diff, label);
        let d_diff = loss_slope(diff, label) * scale;
        self.backward_into(features_a, &ta, s, d_diff, grad);
        self.backward_into(features_b, &tb, s, -d_diff, grad);
        loss
    }

    /// Stable digest of the checkpoint encoding.
    pub fn checksum(&self) -> String {
        let json = self.to_checkpoint_json();
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    /// Checkpoint encoding. Numbers are written in shortest round-trip
    /// decimal form, so decoding restores every parameter bit for bit.
    pub fn to_checkpoint_json(&self) -> String {
        let file = CheckpointFile {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            input_dim: self.layout.input,
            hidden_dim: self.layout.hidden,
            embed_dim: EMBED_DIM,
            num_styles: NUM_STYLES,
            seed: self.seed,
            w1: self.w1().to_vec(),
            b1: self.b1().to_vec(),
            w2: self.w2().to_vec(),
            b2: self.b2().to_vec(),
            w3: self.w3().to_vec(),
            b3: self.b3().to_vec(),
        };
        serde_json::to_string_pretty(&file).expect("checkpoint serializes") + "\n"
    }

    pub fn from_checkpoint_json(text: &str) -> Result<StyleModel> {
        let file: CheckpointFile = serde_json::from_str(text)?;
        if file.format != CHECKPOINT_FORMAT || file.version != CHECKPOINT_VERSION {
            return Err(Error::Malformed {
                format: "checkpoint",
                message: format!("unsupported format {} v{}", file.format, file.version),
            });
        }
        if file.embed_dim != EMBED_DIM || file.num_styles != NUM_STYLES {
            return Err(Error::Malformed {
                format: "checkpoint",
                message: "embedding or style dimension differs from this build".into(),
            });
        }
        let mut model = StyleModel::zeros(file.input_dim, file.hidden_dim)?;
        model.seed = file.seed;
        let blocks: [(&[f64], &mut [f64], &str); 6] = {
            let l = model.layout;
            let (w1, rest) = model.params.split_at_mut(l.b1());
            let (b1, rest) = rest.split_at_mut(l.hidden);
            let (w2, rest) = rest.split_at_mut(l.hidden * EMBED_DIM);
            let (b2, rest) = rest.split_at_mut(EMBED_DIM);
            let (w3, b3) = rest.split_at_mut(EMBED_DIM * NUM_STYLES);
            [
                (&file.w1, w1, "w1"),
                (&file.b1, b1, "b1"),
                (&file.w2, w2, "w2"),
                (&file.b2, b2, "b2"),
                (&file.w3, w3, "w3"),
                (&file.b3, b3, "b3"),
            ]
        };
        for (src, dst, name) in blocks {
            if src.len() != dst.len() {
                return Err(Error::DimensionMismatch {
                    context: format!("checkpoint block {name}"),
                    expected: dst.len(),
                    found: src.len(),
                });
            }
            dst.copy_from_slice(src);
        }
        if !model.is_finite() {
            return Err(Error::Malformed {
                format: "checkpoint",
                message: "non-finite parameter".into(),
            });
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_checkpoint_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<StyleModel> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        StyleModel::from_checkpoint_json(&text)
    }
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    format: String,
    version: u32,
    input_dim: usize,
    hidden_dim: usize,
    embed_dim: usize,
    num_styles: usize,
    seed: u64,
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: Vec<f64>,
    w3: Vec<f64>,
    b3: Vec<f64>,
}

/// Logistic function, stable for large |z|.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Bradley-Terry probability that `a` beats `b` given their score difference.
pub fn win_probability(diff: f64) -> f64 {
    sigmoid(diff)
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn pairwise_logistic_loss(diff: f64, label: Label) -> f64 {
    softplus(-label.sign() * diff)
}

/// dL/d(diff)
fn loss_slope(diff: f64, label: Label) -> f64 {
    let y = label.sign();
    -y * sigmoid(-y * diff)
}

/// Softmax over the four style scores.
pub fn style_probabilities(scores: &Scores) -> [f64; NUM_STYLES] {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps = scores.map(|s| (s - max).exp());
    let total: f64 = exps.iter().sum();
    exps.map(|e| e / total)
}

/// Negative log-likelihood of `label` under the Bradley-Terry model on
/// the style's score difference: `ln(1 + exp(−label · (a[s] − b[s])))`.
pub fn comparison_loss(scores_a: &Scores, scores_b: &Scores, style: Style, label: Label) -> f64 {
    let s = style.code();
    pairwise_logistic_loss(scores_a[s] - scores_b[s], label)
}

/// Exact gradient of [`comparison_loss`] with respect to every parameter.
pub fn loss_gradient(
    model: &StyleModel,
    features_a: &[f64],
    features_b: &[f64],
    style: Style,
    label: Label,
) -> Result<Gradient> {
    model.check_input(features_a)?;
    model.check_input(features_b)?;
    let mut values = vec![0.0; model.param_count()];
    let loss = model.accumulate_gradient(features_a, features_b, style, label, 1.0, &mut values);
    Ok(Gradient { values, loss })
}

/// Highest-scoring style; ties go to the lowest style code.
pub fn argmax_style(scores: &Scores) -> Style {
    let mut best = 0;
    for s in 1..NUM_STYLES {
        if scores[s] > scores[best] {
            best = s;
        }
    }
    Style::ALL[best]
}

pub fn estimate_style(model: &StyleModel, features: &[f64]) -> Result<Style> {
    Ok(argmax_style(&model.scores(features)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn init_is_deterministic_and_bounded() {
        let a = StyleModel::init(8, 5, 11).unwrap();
        let b = StyleModel::init(8, 5, 11).unwrap();
        assert_eq!(a, b);
        assert!(a
            .params()
            .iter()
            .zip(b.params())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
        let c = StyleModel::init(8, 5, 12).unwrap();
        assert_ne!(a.params(), c.params());
        for &w in a.w1() {
            assert!(w.abs() <= 1.0 / 8f64.sqrt());
        }
        for &w in a.w2() {
            assert!(w.abs() <= 1.0 / 5f64.sqrt());
        }
        for &w in a.w3() {
            assert!(w.abs() <= 0.25);
        }
        assert!(a.b1().iter().chain(a.b2()).chain(a.b3()).all(|&b| b == 0.0));
        assert!(StyleModel::init(0, 3, 1).is_err());
        assert!(StyleModel::init(3, 0, 1).is_err());
    }

    #[test]
    fn parameter_count() {
        assert_eq!(StyleModel::init(4, 2, 0).unwrap().param_count(), 126);
    }

    #[test]
    fn zero_model_outputs_zero() {
        let m = StyleModel::zeros(3, 4).unwrap();
        let out = m.forward(&[1.0, -2.0, 0.5]).unwrap();
        assert_eq!(out.embedding, [0.0; EMBED_DIM]);
        assert_eq!(out.scores, [0.0; NUM_STYLES]);

        let m = StyleModel::init(3, 4, 5).unwrap();
        let out = m.forward(&[0.0; 3]).unwrap();
        assert_eq!(out.embedding, [0.0; EMBED_DIM]);
        assert_eq!(out.scores, [0.0; NUM_STYLES]);
    }

    #[test]
    fn forward_matches_hand_computation() {
        // D = H = 1: hidden = tanh(0.5·x + 0.1); e_k = hidden·(k+1)/10 + k/100;
        // scores_s = Σ_k e_k·W3[k,s] + b3_s with W3[k,s] = (s+1)/(k+1)·0.01.
        let mut m = StyleModel::zeros(1, 1).unwrap();
        m.w1_mut()[0] = 0.5;
        m.b1_mut()[0] = 0.1;
        for k in 0..EMBED_DIM {
            m.w2_mut()[k] = (k + 1) as f64 / 10.0;
            m.b2_mut()[k] = k as f64 / 100.0;
            for s in 0..NUM_STYLES {
                m.w3_mut()[k * NUM_STYLES + s] = (s + 1) as f64 / (k + 1) as f64 * 0.01;
            }
        }
        m.b3_mut().copy_from_slice(&[1.0, -1.0, 0.5, 0.0]);
        let x = 2.0;
        let out = m.forward(&[x]).unwrap();
        let hidden = (0.5f64 * 2.0 + 0.1).tanh();
        assert!((hidden - 0.800_499_021_760_629_7).abs() < 1e-15);
        for k in 0..EMBED_DIM {
            let e = hidden * (k + 1) as f64 / 10.0 + k as f64 / 100.0;
            assert!((out.embedding[k] - e).abs() < 1e-14);
        }
        // Σ_k e_k/(k+1) = hidden·16/10 + Σ_k k/(100(k+1))
        let harmonic_part: f64 = (0..EMBED_DIM)
            .map(|k| k as f64 / (100.0 * (k + 1) as f64))
            .sum();
        let base = hidden * 1.6 + harmonic_part;
        for (s, b) in [1.0, -1.0, 0.5, 0.0].iter().enumerate() {
            let expected = base * (s + 1) as f64 * 0.01 + b;
            assert!((out.scores[s] - expected).abs() < 1e-13, "style {s}");
        }
    }

    #[test]
    fn forward_rejects_wrong_dimension() {
        let m = StyleModel::init(3, 2, 0).unwrap();
        assert!(matches!(
            m.forward(&[1.0, 2.0]),
            Err(Error::DimensionMismatch {
                expected: 3,
                found: 2,
                ..
            })
        ));
    }

    #[test]
    fn probability_examples() {
        assert_eq!(style_probabilities(&[0.0; 4]), [0.25; 4]);
        let p = style_probabilities(&[std::f64::consts::LN_2, 0.0, 0.0, 0.0]);
        for (got, want) in p.iter().zip([0.4, 0.2, 0.2, 0.2]) {
            assert!((got - want).abs() < 1e-15);
        }
        let big = style_probabilities(&[1000.0, 999.0, -1000.0, 0.0]);
        assert!(big.iter().all(|p| p.is_finite()));
        assert!((big.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn loss_examples() {
        let a = [0.3, 1.0, 2.0, 0.0];
        for label in [Label::Positive, Label::Negative] {
            let l = comparison_loss(&a, &a, Style::Traditional, label);
            assert!((l - std::f64::consts::LN_2).abs() < 1e-15);
        }
        let hi = [10.0, 0.0, 0.0, 0.0];
        let lo = [0.0; 4];
        let l = comparison_loss(&hi, &lo, Style::Modern, Label::Positive);
        // ln(1 + e^-10)
        assert!((l - 4.539_889_921_686_465e-5).abs() < 1e-18);
        assert_eq!(
            comparison_loss(&hi, &lo, Style::Modern, Label::Positive),
            comparison_loss(&lo, &hi, Style::Modern, Label::Negative)
        );
        let huge = comparison_loss(&[1e6, 0.0, 0.0, 0.0], &lo, Style::Modern, Label::Negative);
        assert_eq!(huge, 1e6);
    }

    #[test]
    fn slope_at_zero() {
        assert_eq!(loss_slope(0.0, Label::Positive), -0.5);
        assert_eq!(loss_slope(0.0, Label::Negative), 0.5);
    }

    #[test]
    fn identical_inputs_cancel() {
        let m = StyleModel::init(5, 7, 3).unwrap();
        let f = [0.3, -1.2, 0.8, 2.0, -0.1];
        let g = loss_gradient(&m, &f, &f, Style::Cottage, Label::Positive).unwrap();
        assert!(g.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn argmax_examples() {
        assert_eq!(argmax_style(&[2.0, 1.0, 0.0, 0.0]), Style::Modern);
        assert_eq!(argmax_style(&[0.5; 4]), Style::Modern);
        assert_eq!(argmax_style(&[0.0, 1.0, 3.0, 3.0]), Style::Cottage);
    }

    #[test]
    fn checkpoint_roundtrip_is_bit_exact() {
        let mut m = StyleModel::init(6, 3, 99).unwrap();
        m.params_mut()[0] = 0.1 + 0.2;
        m.params_mut()[1] = 1e-300;
        m.params_mut()[2] = -123456.789e10;
        let text = m.to_checkpoint_json();
        let back = StyleModel::from_checkpoint_json(&text).unwrap();
        assert_eq!(back.seed(), 99);
        for (a, b) in m.params().iter().zip(back.params()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(back.to_checkpoint_json(), text);
        assert_eq!(back.checksum(), m.checksum());

        let broken = text.replace("\"stylesim-checkpoint\"", "\"other\"");
        assert!(StyleModel::from_checkpoint_json(&broken).is_err());
    }

    proptest! {
        #[test]
        fn bt_probabilities_normalize(diff in -60.0f64..60.0) {
            prop_assert!((win_probability(diff) + win_probability(-diff) - 1.0).abs() < 1e-12);
        }

        #[test]
        fn loss_antisymmetry(a in prop::array::uniform4(-20.0f64..20.0), b in prop::array::uniform4(-20.0f64..20.0), s in 0usize..4) {
            let style = Style::ALL[s];
            prop_assert_eq!(
                comparison_loss(&a, &b, style, Label::Positive),
                comparison_loss(&b, &a, style, Label::Negative)
            );
            prop_assert!(comparison_loss(&a, &b, style, Label::Positive) >= 0.0);
        }

        #[test]
        fn softmax_sums_to_one(scores in prop::array::uniform4(-50.0f64..50.0), c in -100.0f64..100.0) {
            let p = style_probabilities(&scores);
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(p.iter().all(|&x| x > 0.0));
            let shifted = style_probabilities(&scores.map(|s| s + c));
            for (x, y) in p.iter().zip(shifted) {
                prop_assert!((x - y).abs() < 1e-9);
            }
            prop_assert_eq!(argmax_style(&scores), argmax_style(&p));
        }

        #[test]
        fn argmax_shift_invariant(scores in prop::array::uniform4(-8i32..8), c in -5i32..5) {
            let base = scores.map(f64::from);
            let shifted = scores.map(|s| f64::from(s + c));
            prop_assert_eq!(argmax_style(&base), argmax_style(&shifted));
        }
    }
}
