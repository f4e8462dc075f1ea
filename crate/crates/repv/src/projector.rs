//! Trainable projection from embedding space to a low-dimensional latent
//! space in which interpreter reliability is separable, plus the linear
//! safety classifier trained jointly with it.
//!
//! A sample is "safe" when the interpreter's compliance prediction agrees
//! with the model checker's verdict. The projector is a small multilayer
//! perceptron trained with plain stochastic gradient descent on the
//! cross-entropy of the attached two-way classifier head.

use crate::automata::TransitionSystem;
use crate::l2a::{l2a, PropositionMapping};
use crate::ltl::{model_check, LtlFormula};
use crate::oracle::{Embedder, Interpreter};
use crate::plan_lang::parse_plan;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProjectorError {
    #[error("training data contains a single class; both safe and unsafe samples are required")]
    DegenerateLabels,
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub input_dim: usize,
    pub hidden1: usize,
    pub hidden2: usize,
    pub latent_dim: usize,
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            input_dim: 1536,
            hidden1: 128,
            hidden2: 32,
            latent_dim: 10,
            batch_size: 20,
            epochs: 10,
            learning_rate: 0.001,
            seed: 0,
        }
    }
}

/// Weights stored row-major: `w[r * cols + c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectorParams {
    pub hp: Hyperparams,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
    pub w3: Vec<f64>,
    pub b3: Vec<f64>,
    pub wc: Vec<f64>,
    pub bc: Vec<f64>,
}

impl ProjectorParams {
    /// Seeded initialization: uniform fan-in scaling for weights, zero
    /// biases.
    pub fn init(hp: Hyperparams) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
        let mut layer = |rows: usize, cols: usize| -> Vec<f64> {
            let a = 1.0 / (cols as f64).sqrt();
            (0..rows * cols).map(|_| rng.gen_range(-a..a)).collect()
        };
        ProjectorParams {
            w1: layer(hp.hidden1, hp.input_dim),
            b1: vec![0.0; hp.hidden1],
            w2: layer(hp.hidden2, hp.hidden1),
            b2: vec![0.0; hp.hidden2],
            w3: layer(hp.latent_dim, hp.hidden2),
            b3: vec![0.0; hp.latent_dim],
            wc: layer(2, hp.latent_dim),
            bc: vec![0.0; 2],
            hp,
        }
    }

    pub fn param_count(&self) -> usize {
        self.w1.len()
            + self.b1.len()
            + self.w2.len()
            + self.b2.len()
            + self.w3.len()
            + self.b3.len()
            + self.wc.len()
            + self.bc.len()
    }

    fn arrays(&self) -> [&Vec<f64>; 8] {
        [
            &self.w1, &self.b1, &self.w2, &self.b2, &self.w3, &self.b3, &self.wc, &self.bc,
        ]
    }

    fn arrays_mut(&mut self) -> [&mut Vec<f64>; 8] {
        [
            &mut self.w1,
            &mut self.b1,
            &mut self.w2,
            &mut self.b2,
            &mut self.w3,
            &mut self.b3,
            &mut self.wc,
            &mut self.bc,
        ]
    }

    /// Read one parameter by flat index (layer arrays concatenated in
    /// declaration order).
    pub fn get_flat(&self, mut idx: usize) -> f64 {
        for a in self.arrays() {
            if idx < a.len() {
                return a[idx];
            }
            idx -= a.len();
        }
        panic!("flat index out of range");
    }

    /// Write one parameter by flat index; same order as [`Self::get_flat`].
    pub fn set_flat(&mut self, mut idx: usize, v: f64) {
        for a in self.arrays_mut() {
            if idx < a.len() {
                a[idx] = v;
                return;
            }
            idx -= a.len();
        }
        panic!("flat index out of range");
    }
}

// ---------------------------------------------------------------------------
// Training records
// ---------------------------------------------------------------------------

/// A rule paired with its formal specification.
#[derive(Debug, Clone)]
pub struct RuleSpec {
    pub id: String,
    pub text: String,
    pub phi: LtlFormula,
}

#[derive(Debug, Clone)]
pub struct PlanSample {
    pub id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentRecord {
    pub plan_id: String,
    pub rule_id: String,
    pub embedding: Vec<f64>,
    /// Latent projection; empty until a trained projector fills it in.
    pub z: Vec<f64>,
    /// Interpreter's compliance prediction.
    pub y: u8,
    /// Model checker's verdict.
    pub y_star: u8,
    /// 1 iff the interpreter agreed with the checker.
    pub y_safe: u8,
}

/// Build one record per plan: the plan is paired round-robin with a rule,
/// judged by the interpreter, verified by the model checker, and embedded
/// together with the interpreter's rationale. Failed samples are skipped and
/// reported in the second return value.
pub fn collect_training_set(
    plans: &[PlanSample],
    rules: &[RuleSpec],
    ts: &TransitionSystem,
    map: &PropositionMapping,
    interpreter: &dyn Interpreter,
    embedder: &dyn Embedder,
) -> (Vec<LatentRecord>, Vec<String>) {
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for (i, plan) in plans.iter().enumerate() {
        let rule = &rules[i % rules.len()];
        match collect_one(plan, rule, ts, map, interpreter, embedder) {
            Ok(r) => records.push(r),
            Err(e) => skipped.push(format!("{} × {}: {e}", plan.id, rule.id)),
        }
    }
    (records, skipped)
}

fn collect_one(
    plan: &PlanSample,
    rule: &RuleSpec,
    ts: &TransitionSystem,
    map: &PropositionMapping,
    interpreter: &dyn Interpreter,
    embedder: &dyn Embedder,
) -> Result<LatentRecord, String> {
    let ast = parse_plan(&plan.text).map_err(|e| e.to_string())?;
    let fsa = l2a(&ast, map).map_err(|e| e.to_string())?;
    let phi_ap =
        crate::automata::PropSet::new(rule.phi.atoms()).map_err(|e| e.to_string())?;
    let fsa = fsa.extend_ap(&phi_ap).map_err(|e| e.to_string())?;
    let verdict = model_check(&fsa, ts, &rule.phi).map_err(|e| e.to_string())?;
    let out = interpreter
        .interpret(&plan.text, &rule.text)
        .map_err(|e| e.to_string())?;
    let text = format!("{}\n{}", plan.text, out.rationale);
    let embedding = embedder.embed(&text).map_err(|e| e.to_string())?;
    let y_star = verdict.holds as u8;
    Ok(LatentRecord {
        plan_id: plan.id.clone(),
        rule_id: rule.id.clone(),
        embedding: embedding.values,
        z: Vec::new(),
        y: out.y,
        y_star,
        y_safe: (out.y == y_star) as u8,
    })
}

// ---------------------------------------------------------------------------
// Forward / backward
// ---------------------------------------------------------------------------

fn affine(w: &[f64], b: &[f64], x: &[f64], out: &mut [f64]) {
    let cols = x.len();
    for (r, o) in out.iter_mut().enumerate() {
        let row = &w[r * cols..(r + 1) * cols];
        let mut acc = b[r];
        for (wv, xv) in row.iter().zip(x) {
            acc += wv * xv;
        }
        *o = acc;
    }
}

fn relu_inplace(v: &mut [f64]) {
    for x in v {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}

struct Activations {
    h1: Vec<f64>,
    h2: Vec<f64>,
    z: Vec<f64>,
    probs: [f64; 2],
}

fn forward(p: &ProjectorParams, x: &[f64]) -> Activations {
    let hp = &p.hp;
    let mut h1 = vec![0.0; hp.hidden1];
    affine(&p.w1, &p.b1, x, &mut h1);
    relu_inplace(&mut h1);
    let mut h2 = vec![0.0; hp.hidden2];
    affine(&p.w2, &p.b2, &h1, &mut h2);
    relu_inplace(&mut h2);
    let mut z = vec![0.0; hp.latent_dim];
    affine(&p.w3, &p.b3, &h2, &mut z);
    let mut logits = [0.0; 2];
    affine(&p.wc, &p.bc, &z, &mut logits);
    let m = logits[0].max(logits[1]);
    let e0 = (logits[0] - m).exp();
    let e1 = (logits[1] - m).exp();
    let s = e0 + e1;
    Activations {
        h1,
        h2,
        z,
        probs: [e0 / s, e1 / s],
    }
}

/// Per-parameter gradients, same layout as the parameters.
struct Grads {
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: Vec<f64>,
    w3: Vec<f64>,
    b3: Vec<f64>,
    wc: Vec<f64>,
    bc: Vec<f64>,
}

impl Grads {
    fn zeros(p: &ProjectorParams) -> Self {
        Grads {
            w1: vec![0.0; p.w1.len()],
            b1: vec![0.0; p.b1.len()],
            w2: vec![0.0; p.w2.len()],
            b2: vec![0.0; p.b2.len()],
            w3: vec![0.0; p.w3.len()],
            b3: vec![0.0; p.b3.len()],
            wc: vec![0.0; p.wc.len()],
            bc: vec![0.0; p.bc.len()],
        }
    }

    fn scale(&mut self, k: f64) {
        for a in [
            &mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2, &mut self.w3, &mut self.b3,
            &mut self.wc, &mut self.bc,
        ] {
            for v in a.iter_mut() {
                *v *= k;
            }
        }
    }
}

/// dL/dW accumulation for one affine layer; returns dL/dx.
fn backprop_affine(
    w: &[f64],
    x: &[f64],
    dout: &[f64],
    gw: &mut [f64],
    gb: &mut [f64],
) -> Vec<f64> {
    let cols = x.len();
    let mut dx = vec![0.0; cols];
    for (r, &d) in dout.iter().enumerate() {
        gb[r] += d;
        let row = &w[r * cols..(r + 1) * cols];
        let grow = &mut gw[r * cols..(r + 1) * cols];
        for c in 0..cols {
            grow[c] += d * x[c];
            dx[c] += row[c] * d;
        }
    }
    dx
}

/// Accumulate cross-entropy gradients for one sample; returns its loss.
fn backward(p: &ProjectorParams, x: &[f64], label: u8, g: &mut Grads) -> f64 {
    let act = forward(p, x);
    let loss = -act.probs[label as usize].max(1e-300).ln();
    let mut dlogits = [act.probs[0], act.probs[1]];
    dlogits[label as usize] -= 1.0;
    let dz = backprop_affine(&p.wc, &act.z, &dlogits, &mut g.wc, &mut g.bc);
    let mut dh2 = backprop_affine(&p.w3, &act.h2, &dz, &mut g.w3, &mut g.b3);
    for (d, h) in dh2.iter_mut().zip(&act.h2) {
        if *h <= 0.0 {
            *d = 0.0;
        }
    }
    let mut dh1 = backprop_affine(&p.w2, &act.h1, &dh2, &mut g.w2, &mut g.b2);
    for (d, h) in dh1.iter_mut().zip(&act.h1) {
        if *h <= 0.0 {
            *d = 0.0;
        }
    }
    let _dx = backprop_affine(&p.w1, x, &dh1, &mut g.w1, &mut g.b1);
    loss
}

/// Mean cross-entropy of the classifier head over `records`.
pub fn mean_loss(p: &ProjectorParams, records: &[LatentRecord]) -> f64 {
    records
        .iter()
        .map(|r| {
            let act = forward(p, &r.embedding);
            -act.probs[r.y_safe as usize].max(1e-300).ln()
        })
        .sum::<f64>()
        / records.len() as f64
}

/// Flat analytic gradient of [`mean_loss`] with respect to every parameter,
/// in the same index order as `get_flat`/`set_flat`.
pub fn loss_gradient(p: &ProjectorParams, records: &[LatentRecord]) -> Vec<f64> {
    let mut g = Grads::zeros(p);
    for r in records {
        backward(p, &r.embedding, r.y_safe, &mut g);
    }
    g.scale(1.0 / records.len() as f64);
    let mut flat = Vec::with_capacity(p.param_count());
    for a in [&g.w1, &g.b1, &g.w2, &g.b2, &g.w3, &g.b3, &g.wc, &g.bc] {
        flat.extend_from_slice(a);
    }
    flat
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

/// Train projector and classifier jointly with minibatch SGD. The shuffle is
/// owned by the trainer (seeded per epoch), so the caller's record order does
/// not affect the result beyond identifying records.
pub fn train(
    records: &[LatentRecord],
    hp: Hyperparams,
) -> Result<ProjectorParams, ProjectorError> {
    if let Some(r) = records.iter().find(|r| r.embedding.len() != hp.input_dim) {
        return Err(ProjectorError::DimensionMismatch {
            expected: hp.input_dim,
            actual: r.embedding.len(),
        });
    }
    let n_safe = records.iter().filter(|r| r.y_safe == 1).count();
    if hp.epochs > 0 && (n_safe == 0 || n_safe == records.len()) {
        return Err(ProjectorError::DegenerateLabels);
    }
    let mut params = ProjectorParams::init(hp);
    // Sort by identity first so caller-side ordering cannot leak into the
    // seeded shuffle.
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by(|&a, &b| {
        (&records[a].plan_id, &records[a].rule_id).cmp(&(&records[b].plan_id, &records[b].rule_id))
    });
    for epoch in 0..hp.epochs {
        let mut rng =
            ChaCha8Rng::seed_from_u64(hp.seed ^ (epoch as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let mut idx = order.clone();
        idx.shuffle(&mut rng);
        for batch in idx.chunks(hp.batch_size.max(1)) {
            let mut g = Grads::zeros(&params);
            for &i in batch {
                backward(&params, &records[i].embedding, records[i].y_safe, &mut g);
            }
            g.scale(1.0 / batch.len() as f64);
            let lr = hp.learning_rate;
            for (p, gr) in params.w1.iter_mut().zip(&g.w1) {
                *p -= lr * gr;
            }
            for (p, gr) in params.b1.iter_mut().zip(&g.b1) {
                *p -= lr * gr;
            }
            for (p, gr) in params.w2.iter_mut().zip(&g.w2) {
                *p -= lr * gr;
            }
            for (p, gr) in params.b2.iter_mut().zip(&g.b2) {
                *p -= lr * gr;
            }
            for (p, gr) in params.w3.iter_mut().zip(&g.w3) {
                *p -= lr * gr;
            }
            for (p, gr) in params.b3.iter_mut().zip(&g.b3) {
                *p -= lr * gr;
            }
            for (p, gr) in params.wc.iter_mut().zip(&g.wc) {
                *p -= lr * gr;
            }
            for (p, gr) in params.bc.iter_mut().zip(&g.bc) {
                *p -= lr * gr;
            }
        }
    }
    Ok(params)
}

/// Latent projection of an embedding.
pub fn project(params: &ProjectorParams, embedding: &[f64]) -> Result<Vec<f64>, ProjectorError> {
    if embedding.len() != params.hp.input_dim {
        return Err(ProjectorError::DimensionMismatch {
            expected: params.hp.input_dim,
            actual: embedding.len(),
        });
    }
    Ok(forward(params, embedding).z)
}

/// Safety classification of a latent vector; ties break toward 0 (unsafe),
/// the conservative side.
pub fn classify(params: &ProjectorParams, z: &[f64]) -> u8 {
    assert_eq!(z.len(), params.hp.latent_dim, "latent dimension mismatch");
    let mut logits = [0.0; 2];
    affine(&params.wc, &params.bc, z, &mut logits);
    (logits[1] > logits[0]) as u8
}

/// Compare analytic gradients against central finite differences (step 1e-4)
/// on a deterministic subsample of parameters; returns the max relative
/// error.
pub fn grad_check(params: &ProjectorParams, records: &[LatentRecord]) -> f64 {
    assert!(!records.is_empty() && records.len() <= 8, "small record set");
    let mut g = Grads::zeros(params);
    for r in records {
        backward(params, &r.embedding, r.y_safe, &mut g);
    }
    g.scale(1.0 / records.len() as f64);
    let flat_grads: Vec<&[f64]> = vec![
        &g.w1, &g.b1, &g.w2, &g.b2, &g.w3, &g.b3, &g.wc, &g.bc,
    ];
    let total: usize = flat_grads.iter().map(|a| a.len()).sum();
    let samples = 64.min(total);
    let step = 1e-4;
    let mut max_err: f64 = 0.0;
    let mut probe = params.clone();
    for k in 0..samples {
        let idx = k * total / samples;
        let analytic = {
            let mut i = idx;
            let mut val = 0.0;
            for a in &flat_grads {
                if i < a.len() {
                    val = a[i];
                    break;
                }
                i -= a.len();
            }
            val
        };
        let orig = params.get_flat(idx);
        probe.set_flat(idx, orig + step);
        let hi = mean_loss(&probe, records);
        probe.set_flat(idx, orig - step);
        let lo = mean_loss(&probe, records);
        probe.set_flat(idx, orig);
        let numeric = (hi - lo) / (2.0 * step);
        let denom = analytic.abs().max(numeric.abs()).max(1e-6);
        max_err = max_err.max((analytic - numeric).abs() / denom);
    }
    max_err
}

// ---------------------------------------------------------------------------
// Checkpoint (versioned binary, little-endian f64 arrays)
// ---------------------------------------------------------------------------

const CHECKPOINT_MAGIC: &[u8; 8] = b"PLNPROJ1";

pub fn save_checkpoint(params: &ProjectorParams, path: &Path) -> Result<(), ProjectorError> {
    let io = |e: std::io::Error| ProjectorError::Checkpoint(e.to_string());
    let mut f = std::fs::File::create(path).map_err(io)?;
    f.write_all(CHECKPOINT_MAGIC).map_err(io)?;
    let hp = &params.hp;
    for v in [
        hp.input_dim,
        hp.hidden1,
        hp.hidden2,
        hp.latent_dim,
        hp.batch_size,
        hp.epochs,
    ] {
        f.write_all(&(v as u64).to_le_bytes()).map_err(io)?;
    }
    f.write_all(&hp.learning_rate.to_le_bytes()).map_err(io)?;
    f.write_all(&hp.seed.to_le_bytes()).map_err(io)?;
    for a in params.arrays() {
        f.write_all(&(a.len() as u64).to_le_bytes()).map_err(io)?;
        for v in a {
            f.write_all(&v.to_le_bytes()).map_err(io)?;
        }
    }
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<ProjectorParams, ProjectorError> {
    let io = |e: std::io::Error| ProjectorError::Checkpoint(e.to_string());
    let mut f = std::fs::File::open(path).map_err(io)?;
    let mut magic = [0u8; 8];
    f.read_exact(&mut magic).map_err(io)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(ProjectorError::Checkpoint(
            "not a projector checkpoint (bad magic)".into(),
        ));
    }
    let mut u64buf = [0u8; 8];
    let mut read_u64 = |f: &mut std::fs::File| -> Result<u64, ProjectorError> {
        f.read_exact(&mut u64buf).map_err(io)?;
        Ok(u64::from_le_bytes(u64buf))
    };
    let input_dim = read_u64(&mut f)? as usize;
    let hidden1 = read_u64(&mut f)? as usize;
    let hidden2 = read_u64(&mut f)? as usize;
    let latent_dim = read_u64(&mut f)? as usize;
    let batch_size = read_u64(&mut f)? as usize;
    let epochs = read_u64(&mut f)? as usize;
    let mut f64buf = [0u8; 8];
    f.read_exact(&mut f64buf).map_err(io)?;
    let learning_rate = f64::from_le_bytes(f64buf);
    let seed = read_u64(&mut f)?;
    let hp = Hyperparams {
        input_dim,
        hidden1,
        hidden2,
        latent_dim,
        batch_size,
        epochs,
        learning_rate,
        seed,
    };
    let mut params = ProjectorParams::init(hp);
    for a in params.arrays_mut() {
        let mut lenbuf = [0u8; 8];
        f.read_exact(&mut lenbuf).map_err(io)?;
        let len = u64::from_le_bytes(lenbuf) as usize;
        if len != a.len() {
            return Err(ProjectorError::Checkpoint(format!(
                "array length {len} does not match dimensions (expected {})",
                a.len()
            )));
        }
        for v in a.iter_mut() {
            let mut b = [0u8; 8];
            f.read_exact(&mut b).map_err(io)?;
            *v = f64::from_le_bytes(b);
        }
    }
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_hp(seed: u64) -> Hyperparams {
        Hyperparams {
            input_dim: 16,
            hidden1: 12,
            hidden2: 8,
            latent_dim: 4,
            batch_size: 4,
            epochs: 30,
            learning_rate: 0.5,
            seed,
        }
    }

    /// Two well-separated Gaussian-ish blobs with a known separating
    /// direction.
    fn blobs(n: usize, dim: usize, seed: u64) -> Vec<LatentRecord> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let label = (i % 2) as u8;
                let center = if label == 1 { 1.0 } else { -1.0 };
                let embedding: Vec<f64> = (0..dim)
                    .map(|d| {
                        let noise: f64 = rng.gen_range(-0.3..0.3);
                        if d < 4 {
                            center + noise
                        } else {
                            noise
                        }
                    })
                    .collect();
                LatentRecord {
                    plan_id: format!("p{i}"),
                    rule_id: "r0".into(),
                    embedding,
                    z: Vec::new(),
                    y: label,
                    y_star: label,
                    y_safe: label,
                }
            })
            .collect()
    }

    #[test]
    fn default_dimensions_give_about_two_hundred_thousand_parameters() {
        let p = ProjectorParams::init(Hyperparams::default());
        assert_eq!(p.param_count(), 201_216);
    }

    #[test]
    fn separable_blobs_reach_high_accuracy() {
        let train_set = blobs(120, 16, 1);
        let held_out = blobs(100, 16, 2);
        let params = train(&train_set, small_hp(7)).unwrap();
        let correct = held_out
            .iter()
            .filter(|r| {
                let z = project(&params, &r.embedding).unwrap();
                classify(&params, &z) == r.y_safe
            })
            .count();
        assert!(
            correct as f64 / held_out.len() as f64 >= 0.99,
            "held-out accuracy {correct}/100"
        );
    }

    #[test]
    fn zero_epochs_returns_initialization() {
        let mut hp = small_hp(3);
        hp.epochs = 0;
        let trained = train(&blobs(10, 16, 1), hp).unwrap();
        assert_eq!(trained, ProjectorParams::init(hp));
    }

    #[test]
    fn single_class_is_degenerate() {
        let mut records = blobs(10, 16, 1);
        for r in &mut records {
            r.y_safe = 1;
        }
        assert!(matches!(
            train(&records, small_hp(3)),
            Err(ProjectorError::DegenerateLabels)
        ));
    }

    #[test]
    fn training_is_deterministic_and_order_independent() {
        let records = blobs(40, 16, 5);
        let a = train(&records, small_hp(9)).unwrap();
        let b = train(&records, small_hp(9)).unwrap();
        assert_eq!(a, b);
        let mut reversed = records.clone();
        reversed.reverse();
        let c = train(&reversed, small_hp(9)).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn training_reduces_loss() {
        let records = blobs(40, 16, 5);
        let init = ProjectorParams::init(small_hp(9));
        let trained = train(&records, small_hp(9)).unwrap();
        assert!(mean_loss(&trained, &records) < mean_loss(&init, &records));
    }

    #[test]
    fn classify_breaks_ties_toward_unsafe() {
        let mut p = ProjectorParams::init(small_hp(0));
        for v in &mut p.wc {
            *v = 0.0;
        }
        p.bc = vec![0.3, 0.3];
        assert_eq!(classify(&p, &vec![1.0; 4]), 0);
        p.bc = vec![0.0, 0.1];
        assert_eq!(classify(&p, &vec![0.0; 4]), 1);
    }

    #[test]
    fn projection_is_pure_and_checks_dimension() {
        let p = ProjectorParams::init(small_hp(0));
        let x = vec![0.25; 16];
        assert_eq!(project(&p, &x).unwrap(), project(&p, &x).unwrap());
        assert!(matches!(
            project(&p, &vec![0.0; 5]),
            Err(ProjectorError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn gradients_match_finite_differences() {
        let records = blobs(6, 16, 11);
        let params = ProjectorParams::init(small_hp(11));
        let err = grad_check(&params, &records);
        assert!(err < 1e-4, "max relative gradient error {err}");
    }

    #[test]
    fn corrupted_gradient_is_detected() {
        // Recompute the finite-difference comparison against a deliberately
        // wrong analytic gradient by perturbing the loss scale: emulate by
        // checking against params whose loss surface was shifted.
        let records = blobs(6, 16, 11);
        let params = ProjectorParams::init(small_hp(11));
        // Mutation: scale one weight after computing gradients, so the
        // finite-difference probe sees a different surface.
        let mut mutated = params.clone();
        mutated.w1[0] += 0.5;
        let mut g = Grads::zeros(&params);
        for r in &records {
            backward(&params, &r.embedding, r.y_safe, &mut g);
        }
        g.scale(1.0 / records.len() as f64);
        // Finite difference on the mutated params vs analytic grad of the
        // original: the first coordinate must disagree noticeably.
        let step = 1e-4;
        let mut probe = mutated.clone();
        let orig = probe.get_flat(0);
        probe.set_flat(0, orig + step);
        let hi = mean_loss(&probe, &records);
        probe.set_flat(0, orig - step);
        let lo = mean_loss(&probe, &records);
        let numeric = (hi - lo) / (2.0 * step);
        let analytic = g.w1[0];
        let denom = analytic.abs().max(numeric.abs()).max(1e-6);
        assert!((analytic - numeric).abs() / denom > 1e-2);
    }

    #[test]
    fn loss_behaves_at_probability_grid_points() {
        // With logits (0, t) and label 1, loss = ln(1 + e^-t): decreasing in
        // confidence toward the right class, increasing toward the wrong one.
        let mut p = ProjectorParams::init(small_hp(0));
        for v in &mut p.w1 {
            *v = 0.0;
        }
        for v in &mut p.w2 {
            *v = 0.0;
        }
        for v in &mut p.w3 {
            *v = 0.0;
        }
        for v in &mut p.wc {
            *v = 0.0;
        }
        let rec = |label: u8| LatentRecord {
            plan_id: "p".into(),
            rule_id: "r".into(),
            embedding: vec![0.0; 16],
            z: Vec::new(),
            y: label,
            y_star: label,
            y_safe: label,
        };
        let mut losses = Vec::new();
        for t in [-4.0, -2.0, 0.0, 2.0, 4.0] {
            p.bc = vec![0.0, t];
            losses.push(mean_loss(&p, &[rec(1)]));
        }
        for w in losses.windows(2) {
            assert!(w[1] < w[0], "loss must fall as the correct logit grows");
        }
        p.bc = vec![0.0, 30.0];
        assert!(mean_loss(&p, &[rec(1)]) < 1e-9);
    }

    #[test]
    fn checkpoint_round_trip() {
        let records = blobs(20, 16, 5);
        let params = train(&records, small_hp(2)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("proj.bin");
        save_checkpoint(&params, &path).unwrap();
        let loaded = load_checkpoint(&path).unwrap();
        assert_eq!(params, loaded);
    }

    #[test]
    fn checkpoint_rejects_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.bin");
        std::fs::write(&path, b"not a checkpoint at all").unwrap();
        assert!(matches!(
            load_checkpoint(&path),
            Err(ProjectorError::Checkpoint(_))
        ));
    }
}
