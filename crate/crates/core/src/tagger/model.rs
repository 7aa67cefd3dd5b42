//! Trained models: vocabulary, parameters and head layout in one unit,
//! with checkpoint I/O and inference over documents.

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::objective::{
    correction_forward, multitask_forward, uniform_weights, CorrectionObjective, CorrectionSample,
    MultiTaskObjective, Objective, TaggingSample,
};
use super::params::{Architecture, HeadKind, LabelEmbedder, TaggerParams};
use super::tensor::argmax;
use super::train::{train_stages, TrainConfig, TrainTrace};
use super::vocab::Vocabulary;
use crate::correction::CorrectionPair;
use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::label::{repair_iob2, Iob2Label};
use crate::tasks::{describe_tasks, make_task_labels, task_count, TaskConfig, TaskDescriptor};

const FORMAT: &str = "weakner-checkpoint";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelKind {
    /// Consumes tokens plus noisy labels; `noisy_input = false` drops the
    /// label embedding (the head then sees the representation only).
    Correction { noisy_input: bool },
    /// Main head plus optional auxiliary context heads.
    Tagger { tasks: TaskConfig },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub architecture: Architecture,
    /// Width of the one-hot label embeddings (9, or 12 for compatibility).
    pub label_dim: usize,
    pub noisy_input: bool,
    pub train: TrainConfig,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            architecture: Architecture::default(),
            label_dim: Iob2Label::COUNT,
            noisy_input: true,
            train: TrainConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub format: String,
    pub version: u32,
    pub kind: ModelKind,
    pub seed: u64,
    pub task_weights: Vec<f64>,
    pub vocabulary: Vocabulary,
    pub params: TaggerParams,
}

fn init_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn shuffle_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

fn correction_sample(vocab: &Vocabulary, pair: &CorrectionPair) -> CorrectionSample {
    CorrectionSample {
        ids: vocab.ids(pair.tokens()),
        noisy: pair.noisy().iter().map(|l| l.index()).collect(),
        gold: pair.gold().iter().map(|l| l.index()).collect(),
    }
}

/// Trains a correction model on curriculum stages (or one unsplit stage).
pub fn train_correction_model(stages: &[Vec<CorrectionPair>], config: &ModelConfig) -> Result<(Model, TrainTrace)> {
    let vocabulary = Vocabulary::build(stages.iter().flatten().flat_map(|p| p.tokens().iter().map(String::as_str)));
    let embedder = if config.noisy_input { Some(LabelEmbedder::new(config.label_dim)?) } else { None };
    let mut params = TaggerParams::init(
        vocabulary.len(),
        config.architecture,
        embedder,
        &[HeadKind::Correction],
        &mut init_rng(config.train.seed),
    )?;
    let samples: Vec<Vec<CorrectionSample>> =
        stages.iter().map(|s| s.iter().map(|p| correction_sample(&vocabulary, p)).collect()).collect();
    let trace = train_stages(&mut params, &samples, &config.train, &mut shuffle_rng(config.train.seed), |p, batch| {
        CorrectionObjective::new(batch.iter().copied()).loss_and_grad(p)
    })?;
    let model = Model {
        format: FORMAT.into(),
        version: VERSION,
        kind: ModelKind::Correction { noisy_input: config.noisy_input },
        seed: config.train.seed,
        task_weights: vec![1.0],
        vocabulary,
        params,
    };
    Ok((model, trace))
}

/// Trains a tagger on corpora in the order given; each corpus is one stage.
pub fn train_tagger(corpora: &[Vec<Document>], tasks: &TaskConfig, config: &ModelConfig) -> Result<(Model, TrainTrace)> {
    tasks.validate()?;
    let descriptors = describe_tasks(tasks);
    let weights = match &config.train.task_weights {
        Some(w) if w.len() != descriptors.len() => {
            return Err(Error::Config(format!("{} task weights for {} tasks", w.len(), descriptors.len())));
        }
        Some(w) => w.clone(),
        None => uniform_weights(task_count(tasks)),
    };
    let sentences = || corpora.iter().flatten().flat_map(|d| &d.sentences);
    let vocabulary = Vocabulary::build(sentences().flat_map(|s| s.tokens().iter().map(String::as_str)));
    let kinds: Vec<HeadKind> = descriptors.iter().map(HeadKind::for_task).collect();
    let mut params =
        TaggerParams::init(vocabulary.len(), config.architecture, None, &kinds, &mut init_rng(config.train.seed))?;
    let samples: Vec<Vec<TaggingSample>> = corpora
        .iter()
        .map(|docs| {
            docs.iter()
                .flat_map(|d| &d.sentences)
                .map(|s| TaggingSample { ids: vocabulary.ids(s.tokens()), targets: make_task_labels(s.labels(), tasks) })
                .collect()
        })
        .collect();
    let trace = train_stages(&mut params, &samples, &config.train, &mut shuffle_rng(config.train.seed), |p, batch| {
        MultiTaskObjective::new(batch.iter().copied(), &weights).loss_and_grad(p)
    })?;
    let model = Model {
        format: FORMAT.into(),
        version: VERSION,
        kind: ModelKind::Tagger { tasks: tasks.clone() },
        seed: config.train.seed,
        task_weights: weights,
        vocabulary,
        params,
    };
    Ok((model, trace))
}

fn decode(distributions: impl Iterator<Item = Vec<f64>>) -> Vec<Iob2Label> {
    let raw: Vec<Iob2Label> =
        distributions.map(|p| Iob2Label::from_index(argmax(&p)).expect("nine-way distribution")).collect();
    repair_iob2(&raw)
}

impl Model {
    pub fn task_descriptors(&self) -> Vec<TaskDescriptor> {
        match &self.kind {
            ModelKind::Tagger { tasks } => describe_tasks(tasks),
            ModelKind::Correction { .. } => Vec::new(),
        }
    }

    /// Argmax-decoded, IOB2-repaired corrections for one sentence.
    pub fn correct_sentence<S: AsRef<str>>(&self, tokens: &[S], noisy: &[Iob2Label]) -> Result<Vec<Iob2Label>> {
        if !matches!(self.kind, ModelKind::Correction { .. }) {
            return Err(Error::Config("model was not trained for correction".into()));
        }
        let noisy: Vec<usize> = noisy.iter().map(|l| l.index()).collect();
        let probs = correction_forward(&self.params, &self.vocabulary.ids(tokens), &noisy)?;
        Ok(decode(probs.into_iter()))
    }

    pub fn correct_labels(&self, documents: &[Document]) -> Result<Vec<Document>> {
        documents
            .iter()
            .map(|doc| {
                let sentences = doc
                    .sentences
                    .iter()
                    .map(|s| s.relabel(self.correct_sentence(s.tokens(), s.labels())?))
                    .collect::<Result<_>>()?;
                Ok(Document::new(doc.id.clone(), sentences))
            })
            .collect()
    }

    /// Main-head predictions for one sentence.
    pub fn tag_sentence<S: AsRef<str>>(&self, tokens: &[S]) -> Result<Vec<Iob2Label>> {
        let tasks = match &self.kind {
            ModelKind::Tagger { .. } => self.task_descriptors(),
            ModelKind::Correction { .. } => return Err(Error::Config("model was not trained as a tagger".into())),
        };
        let main = tasks.len() - 1;
        let probs = multitask_forward(&self.params, &self.vocabulary.ids(tokens), &tasks)?;
        Ok(decode(probs.into_iter().map(|mut per_head| per_head.swap_remove(main))))
    }

    pub fn tag_documents(&self, documents: &[Document]) -> Result<Vec<Document>> {
        documents
            .iter()
            .map(|doc| {
                let sentences =
                    doc.sentences.iter().map(|s| s.relabel(self.tag_sentence(s.tokens())?)).collect::<Result<_>>()?;
                Ok(Document::new(doc.id.clone(), sentences))
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string(self).map_err(|e| Error::Checkpoint(e.to_string()))?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: Model = serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))?;
        if model.format != FORMAT || model.version != VERSION {
            return Err(Error::Checkpoint(format!("unsupported checkpoint {} v{}", model.format, model.version)));
        }
        model.params.validate().map_err(|e| Error::Checkpoint(e.to_string()))?;
        if model.params.encoder.vocab_size() != model.vocabulary.len() {
            return Err(Error::Checkpoint("vocabulary and embedding table disagree".into()));
        }
        let expected_heads = match &model.kind {
            ModelKind::Correction { noisy_input } => {
                if *noisy_input != model.params.label_embedder.is_some() {
                    return Err(Error::Checkpoint("label embedder does not match the model kind".into()));
                }
                1
            }
            ModelKind::Tagger { tasks } => task_count(tasks),
        };
        if model.params.heads.len() != expected_heads || model.task_weights.len() != expected_heads {
            return Err(Error::Checkpoint("head layout does not match the model kind".into()));
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
