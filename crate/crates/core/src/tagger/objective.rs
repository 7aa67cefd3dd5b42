//! Forward passes, the two training objectives, and their analytic gradients.
//!
//! Both objectives are token-averaged negative log-likelihoods. The
//! correction objective scores gold labels given `r_i ⊕ onehot(noisy_i)`;
//! the multi-task objective is the `α`-weighted sum of per-head NLLs over
//! a shared `r_i`.

use serde::{Deserialize, Serialize};

use super::params::{EncoderParams, Head, HeadKind, TaggerParams};
use super::tensor::{log_softmax, softmax};
use super::vocab::Vocabulary;
use crate::error::{Error, Result};
use crate::tasks::TaskDescriptor;

fn window_id(ids: &[usize], i: usize, slot: usize, radius: usize) -> usize {
    (i + slot).checked_sub(radius).and_then(|j| ids.get(j).copied()).unwrap_or(Vocabulary::BOUNDARY)
}

fn window_input(params: &EncoderParams, ids: &[usize], i: usize) -> Vec<f64> {
    let mut u = Vec::with_capacity(params.projection.cols());
    for slot in 0..params.window_len() {
        u.extend_from_slice(params.embeddings.row(window_id(ids, i, slot, params.radius)));
    }
    u
}

fn check_ids(params: &EncoderParams, ids: &[usize]) -> Result<()> {
    match ids.iter().find(|&&id| id >= params.vocab_size()) {
        Some(id) => Err(Error::Config(format!("token id {id} outside vocabulary of {}", params.vocab_size()))),
        None => Ok(()),
    }
}

/// Contextual token representations, each component in (−1, 1).
pub fn encode_ids(params: &EncoderParams, ids: &[usize]) -> Result<Vec<Vec<f64>>> {
    params.validate()?;
    check_ids(params, ids)?;
    Ok(encode_unchecked(params, ids))
}

fn encode_unchecked(params: &EncoderParams, ids: &[usize]) -> Vec<Vec<f64>> {
    (0..ids.len())
        .map(|i| {
            let u = window_input(params, ids, i);
            params.projection.affine(&u, &params.bias).into_iter().map(f64::tanh).collect()
        })
        .collect()
}

pub fn encode<S: AsRef<str>>(tokens: &[S], vocab: &Vocabulary, params: &EncoderParams) -> Result<Vec<Vec<f64>>> {
    encode_ids(params, &vocab.ids(tokens))
}

/// Accumulates encoder gradients given `d_reps[i] = ∂L/∂r_i`.
fn backward_encoder(params: &EncoderParams, ids: &[usize], reps: &[Vec<f64>], d_reps: &[Vec<f64>], grad: &mut EncoderParams) {
    let e = params.embedding_dim();
    for (i, (r, dr)) in reps.iter().zip(d_reps).enumerate() {
        let dz: Vec<f64> = r.iter().zip(dr).map(|(r, d)| d * (1.0 - r * r)).collect();
        if dz.iter().all(|&x| x == 0.0) {
            continue;
        }
        let u = window_input(params, ids, i);
        grad.projection.add_outer(&dz, &u);
        for (b, d) in grad.bias.iter_mut().zip(&dz) {
            *b += d;
        }
        let mut du = vec![0.0; u.len()];
        params.projection.add_transpose_product(&dz, &mut du);
        for slot in 0..params.window_len() {
            let row = grad.embeddings.row_mut(window_id(ids, i, slot, params.radius));
            for (g, d) in row.iter_mut().zip(&du[slot * e..(slot + 1) * e]) {
                *g += d;
            }
        }
    }
}

/// One softmax head on one token: returns `−weight · log p(target)` and,
/// when asked, accumulates `scale`-scaled gradients into the head and the
/// feature vector.
fn head_step(
    head: &Head,
    feature: &[f64],
    target: usize,
    weight: f64,
    scale: f64,
    grads: Option<(&mut Head, &mut [f64])>,
) -> f64 {
    let logits = head.weight.affine(feature, &head.bias);
    let logp = log_softmax(&logits);
    let loss = -weight * logp[target];
    if let Some((g_head, d_feature)) = grads {
        let mut g: Vec<f64> = logp.iter().map(|lp| lp.exp()).collect();
        g[target] -= 1.0;
        g.iter_mut().for_each(|x| *x *= weight * scale);
        g_head.weight.add_outer(&g, feature);
        for (b, d) in g_head.bias.iter_mut().zip(&g) {
            *b += d;
        }
        head.weight.add_transpose_product(&g, d_feature);
    }
    loss
}

/// A correction training example with ids and label indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrectionSample {
    pub ids: Vec<usize>,
    pub noisy: Vec<usize>,
    pub gold: Vec<usize>,
}

/// A tagging example: `targets[i][h]` is the class of task `h` at token `i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggingSample {
    pub ids: Vec<usize>,
    pub targets: Vec<Vec<usize>>,
}

fn correction_head(params: &TaggerParams) -> Result<&Head> {
    match params.heads.as_slice() {
        [head] if head.kind == HeadKind::Correction => Ok(head),
        _ => Err(Error::Config("the correction objective needs exactly one correction head".into())),
    }
}

fn correction_feature(params: &TaggerParams, rep: &[f64], noisy: usize) -> Vec<f64> {
    let mut c = rep.to_vec();
    if let Some(embedder) = params.label_embedder {
        c.extend(embedder.embed(noisy));
    }
    c
}

/// Per-token distributions over the nine labels.
pub fn correction_forward(params: &TaggerParams, ids: &[usize], noisy: &[usize]) -> Result<Vec<Vec<f64>>> {
    if ids.len() != noisy.len() {
        return Err(Error::Shape(format!("{} tokens but {} noisy labels", ids.len(), noisy.len())));
    }
    params.validate()?;
    check_ids(&params.encoder, ids)?;
    let head = correction_head(params)?;
    let reps = encode_unchecked(&params.encoder, ids);
    Ok(reps
        .iter()
        .zip(noisy)
        .map(|(r, &l)| softmax(&head.weight.affine(&correction_feature(params, r, l), &head.bias)))
        .collect())
}

/// Per-token, per-head distributions; heads must follow `tasks`.
pub fn multitask_forward(params: &TaggerParams, ids: &[usize], tasks: &[TaskDescriptor]) -> Result<Vec<Vec<Vec<f64>>>> {
    params.validate()?;
    check_ids(&params.encoder, ids)?;
    check_layout(params, tasks.len())?;
    for (k, (head, task)) in params.heads.iter().zip(tasks).enumerate() {
        if head.kind != HeadKind::for_task(task) {
            return Err(Error::Config(format!("head {k} is {:?} but task {k} is {task:?}", head.kind)));
        }
    }
    let reps = encode_unchecked(&params.encoder, ids);
    Ok(reps
        .iter()
        .map(|r| params.heads.iter().map(|h| softmax(&h.weight.affine(r, &h.bias))).collect())
        .collect())
}

fn check_layout(params: &TaggerParams, task_count: usize) -> Result<()> {
    if params.heads.len() != task_count {
        return Err(Error::Config(format!("{} heads for {task_count} tasks", params.heads.len())));
    }
    if params.heads.iter().any(|h| h.kind == HeadKind::Correction) {
        return Err(Error::Config("tagging heads cannot include a correction head".into()));
    }
    Ok(())
}

/// A differentiable training loss.
pub trait Objective {
    fn loss(&self, params: &TaggerParams) -> Result<f64>;
    fn loss_and_grad(&self, params: &TaggerParams) -> Result<(f64, TaggerParams)>;
}

/// Analytic gradient of `objective` at `params`.
pub fn grad(params: &TaggerParams, objective: &impl Objective) -> Result<TaggerParams> {
    objective.loss_and_grad(params).map(|(_, g)| g)
}

/// Token-mean NLL of gold labels under the correction head.
pub struct CorrectionObjective<'a> {
    pub samples: Vec<&'a CorrectionSample>,
}

impl<'a> CorrectionObjective<'a> {
    pub fn new(samples: impl IntoIterator<Item = &'a CorrectionSample>) -> Self {
        CorrectionObjective { samples: samples.into_iter().collect() }
    }

    fn run(&self, params: &TaggerParams, mut grad: Option<&mut TaggerParams>) -> Result<f64> {
        params.validate()?;
        let head = correction_head(params)?;
        let hidden = params.encoder.hidden_dim();
        let tokens: usize = self.samples.iter().map(|s| s.ids.len()).sum();
        if tokens == 0 {
            return Ok(0.0);
        }
        let scale = 1.0 / tokens as f64;
        let mut total = 0.0;
        for sample in &self.samples {
            if sample.noisy.len() != sample.ids.len() || sample.gold.len() != sample.ids.len() {
                return Err(Error::Shape("sample ids and labels differ in length".into()));
            }
            check_ids(&params.encoder, &sample.ids)?;
            let reps = encode_unchecked(&params.encoder, &sample.ids);
            let mut d_reps = Vec::with_capacity(reps.len());
            for ((rep, &noisy), &gold) in reps.iter().zip(&sample.noisy).zip(&sample.gold) {
                let feature = correction_feature(params, rep, noisy);
                let mut d_feature = vec![0.0; feature.len()];
                let grads = grad.as_deref_mut().map(|g| (&mut g.heads[0], d_feature.as_mut_slice()));
                total += head_step(head, &feature, gold, 1.0, scale, grads);
                d_feature.truncate(hidden);
                d_reps.push(d_feature);
            }
            if let Some(g) = grad.as_deref_mut() {
                backward_encoder(&params.encoder, &sample.ids, &reps, &d_reps, &mut g.encoder);
            }
        }
        Ok(total * scale)
    }
}

impl Objective for CorrectionObjective<'_> {
    fn loss(&self, params: &TaggerParams) -> Result<f64> {
        self.run(params, None)
    }

    fn loss_and_grad(&self, params: &TaggerParams) -> Result<(f64, TaggerParams)> {
        let mut grad = params.zeros_like();
        let loss = self.run(params, Some(&mut grad))?;
        Ok((loss, grad))
    }
}

/// Token-mean of `Σ_h α_h · NLL_h`.
pub struct MultiTaskObjective<'a> {
    pub samples: Vec<&'a TaggingSample>,
    pub weights: &'a [f64],
}

impl<'a> MultiTaskObjective<'a> {
    pub fn new(samples: impl IntoIterator<Item = &'a TaggingSample>, weights: &'a [f64]) -> Self {
        MultiTaskObjective { samples: samples.into_iter().collect(), weights }
    }

    fn run(&self, params: &TaggerParams, mut grad: Option<&mut TaggerParams>) -> Result<f64> {
        params.validate()?;
        check_layout(params, self.weights.len())?;
        let tokens: usize = self.samples.iter().map(|s| s.ids.len()).sum();
        if tokens == 0 {
            return Ok(0.0);
        }
        let scale = 1.0 / tokens as f64;
        let hidden = params.encoder.hidden_dim();
        let mut total = 0.0;
        for sample in &self.samples {
            if sample.targets.len() != sample.ids.len() {
                return Err(Error::Shape("sample ids and targets differ in length".into()));
            }
            check_ids(&params.encoder, &sample.ids)?;
            let reps = encode_unchecked(&params.encoder, &sample.ids);
            let mut d_reps = Vec::with_capacity(reps.len());
            for (rep, targets) in reps.iter().zip(&sample.targets) {
                if targets.len() != params.heads.len() {
                    return Err(Error::Config(format!(
                        "{} task targets for {} heads",
                        targets.len(),
                        params.heads.len()
                    )));
                }
                let mut d_rep = vec![0.0; hidden];
                for (h, ((head, &target), &alpha)) in params.heads.iter().zip(targets).zip(self.weights).enumerate() {
                    if target >= head.kind.classes() {
                        return Err(Error::Shape(format!("target {target} out of range for head {h}")));
                    }
                    if alpha == 0.0 {
                        continue;
                    }
                    let grads = grad.as_deref_mut().map(|g| (&mut g.heads[h], d_rep.as_mut_slice()));
                    total += head_step(head, rep, target, alpha, scale, grads);
                }
                d_reps.push(d_rep);
            }
            if let Some(g) = grad.as_deref_mut() {
                backward_encoder(&params.encoder, &sample.ids, &reps, &d_reps, &mut g.encoder);
            }
        }
        Ok(total * scale)
    }
}

impl Objective for MultiTaskObjective<'_> {
    fn loss(&self, params: &TaggerParams) -> Result<f64> {
        self.run(params, None)
    }

    fn loss_and_grad(&self, params: &TaggerParams) -> Result<(f64, TaggerParams)> {
        let mut grad = params.zeros_like();
        let loss = self.run(params, Some(&mut grad))?;
        Ok((loss, grad))
    }
}

/// `α_h = 1/T`.
pub fn uniform_weights(task_count: usize) -> Vec<f64> {
    vec![1.0 / task_count as f64; task_count]
}
