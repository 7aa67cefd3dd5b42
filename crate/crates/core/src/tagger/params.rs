use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tensor::Matrix;
use crate::error::{Error, Result};
use crate::label::Iob2Label;
use crate::tasks::TaskDescriptor;

/// Windowed embedding encoder: `r_i = tanh(W · [x_{i-w}; …; x_{i+w}] + b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderParams {
    /// V × E
    pub embeddings: Matrix,
    /// H × (2w+1)·E
    pub projection: Matrix,
    /// H
    pub bias: Vec<f64>,
    pub radius: usize,
}

impl EncoderParams {
    pub fn vocab_size(&self) -> usize {
        self.embeddings.rows()
    }

    pub fn embedding_dim(&self) -> usize {
        self.embeddings.cols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.projection.rows()
    }

    pub fn window_len(&self) -> usize {
        2 * self.radius + 1
    }

    pub fn validate(&self) -> Result<()> {
        let (v, e, h) = (self.vocab_size(), self.embedding_dim(), self.hidden_dim());
        if v < 2 || e == 0 || h == 0 {
            return Err(Error::Config(format!("encoder dimensions must be positive (V={v}, E={e}, H={h})")));
        }
        if !self.embeddings.is_consistent() || !self.projection.is_consistent() {
            return Err(Error::Config("tensor data does not match its shape".into()));
        }
        if self.projection.cols() != self.window_len() * e {
            return Err(Error::Config(format!(
                "projection has {} columns, expected {} for radius {} and E={e}",
                self.projection.cols(),
                self.window_len() * e,
                self.radius
            )));
        }
        if self.bias.len() != h {
            return Err(Error::Config(format!("encoder bias has length {}, expected {h}", self.bias.len())));
        }
        Ok(())
    }
}

/// Fixed one-hot label embeddings of width `dim ≥ 9`; label `l` maps to
/// the unit vector at `l.index()`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelEmbedder {
    pub dim: usize,
}

impl LabelEmbedder {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < Iob2Label::COUNT {
            return Err(Error::Config(format!("label embedding needs at least {} dimensions", Iob2Label::COUNT)));
        }
        Ok(LabelEmbedder { dim })
    }

    pub fn embed(&self, label: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        v[label] = 1.0;
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HeadKind {
    Main,
    Correction,
    Binary,
    Positional,
}

impl HeadKind {
    pub fn classes(self) -> usize {
        match self {
            HeadKind::Main | HeadKind::Correction => Iob2Label::COUNT,
            HeadKind::Binary => 2,
            HeadKind::Positional => Iob2Label::COUNT + 1,
        }
    }

    pub fn for_task(task: &TaskDescriptor) -> Self {
        match task {
            TaskDescriptor::Binary { .. } => HeadKind::Binary,
            TaskDescriptor::Positional { .. } => HeadKind::Positional,
            TaskDescriptor::Main => HeadKind::Main,
        }
    }
}

/// Linear softmax classifier over a per-token feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Head {
    pub kind: HeadKind,
    /// classes × input dim
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

impl Head {
    pub fn zeros(kind: HeadKind, input_dim: usize) -> Self {
        Head { kind, weight: Matrix::zeros(kind.classes(), input_dim), bias: vec![0.0; kind.classes()] }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.cols()
    }
}

/// Layer sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub embedding_dim: usize,
    pub hidden_dim: usize,
    pub context_radius: usize,
}

impl Default for Architecture {
    fn default() -> Self {
        Architecture { embedding_dim: 16, hidden_dim: 32, context_radius: 1 }
    }
}

/// Every trainable tensor, plus the fixed label embedder when the model
/// consumes noisy labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaggerParams {
    pub encoder: EncoderParams,
    pub label_embedder: Option<LabelEmbedder>,
    pub heads: Vec<Head>,
}

impl TaggerParams {
    /// Weights uniform in [−0.1, 0.1] in a fixed tensor order, biases zero.
    pub fn init<R: Rng>(
        vocab_size: usize,
        arch: Architecture,
        label_embedder: Option<LabelEmbedder>,
        head_kinds: &[HeadKind],
        rng: &mut R,
    ) -> Result<Self> {
        let mut uniform = |rows, cols| Matrix::from_fn(rows, cols, |_, _| rng.gen_range(-0.1..=0.1));
        let (e, h) = (arch.embedding_dim, arch.hidden_dim);
        let encoder = EncoderParams {
            embeddings: uniform(vocab_size, e),
            projection: uniform(h, (2 * arch.context_radius + 1) * e),
            bias: vec![0.0; h],
            radius: arch.context_radius,
        };
        let heads = head_kinds
            .iter()
            .map(|&kind| {
                let input = h + if kind == HeadKind::Correction { label_embedder.map_or(0, |l| l.dim) } else { 0 };
                Head { kind, weight: uniform(kind.classes(), input), bias: vec![0.0; kind.classes()] }
            })
            .collect();
        let params = TaggerParams { encoder, label_embedder, heads };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        self.encoder.validate()?;
        if let Some(l) = self.label_embedder {
            LabelEmbedder::new(l.dim)?;
        }
        let h = self.encoder.hidden_dim();
        for (k, head) in self.heads.iter().enumerate() {
            let expected = h + match head.kind {
                HeadKind::Correction => self.label_embedder.map_or(0, |l| l.dim),
                _ => 0,
            };
            if !head.weight.is_consistent()
                || head.weight.shape() != (head.kind.classes(), expected)
                || head.bias.len() != head.kind.classes()
            {
                return Err(Error::Config(format!(
                    "head {k} ({:?}) has shape {:?}, expected {:?}",
                    head.kind,
                    head.weight.shape(),
                    (head.kind.classes(), expected)
                )));
            }
        }
        if self.tensors().iter().any(|(_, t)| t.iter().any(|x| !x.is_finite())) {
            return Err(Error::Config("parameters contain non-finite values".into()));
        }
        Ok(())
    }

    /// Named views of every trainable tensor, in a fixed order.
    pub fn tensors(&self) -> Vec<(String, &[f64])> {
        let mut out: Vec<(String, &[f64])> = vec![
            ("encoder.embeddings".into(), self.encoder.embeddings.as_slice()),
            ("encoder.projection".into(), self.encoder.projection.as_slice()),
            ("encoder.bias".into(), &self.encoder.bias),
        ];
        for (k, head) in self.heads.iter().enumerate() {
            out.push((format!("heads[{k}].weight"), head.weight.as_slice()));
            out.push((format!("heads[{k}].bias"), &head.bias));
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = vec![
            self.encoder.embeddings.as_mut_slice(),
            self.encoder.projection.as_mut_slice(),
            &mut self.encoder.bias,
        ];
        for head in &mut self.heads {
            out.push(head.weight.as_mut_slice());
            out.push(&mut head.bias);
        }
        out
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for t in z.tensors_mut() {
            t.iter_mut().for_each(|x| *x = 0.0);
        }
        z
    }

    /// `self += alpha · other`, tensor by tensor.
    pub fn add_scaled(&mut self, alpha: f64, other: &TaggerParams) {
        let others = other.tensors();
        for (mine, (_, theirs)) in self.tensors_mut().into_iter().zip(others) {
            for (a, b) in mine.iter_mut().zip(theirs) {
                *a += alpha * b;
            }
        }
    }

    pub fn norm(&self) -> f64 {
        self.tensors().iter().flat_map(|(_, t)| t.iter()).map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }
}
