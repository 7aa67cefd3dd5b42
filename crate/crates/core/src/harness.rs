//! Synthetic low-density corpora and a single- vs multi-task comparison.
//!
//! The generator places rare entities into filler text, usually after a
//! type-specific cue word. Train and test share the name pool but never
//! their filler context.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{compute_rat, Document, LabeledSentence};
use crate::error::{Error, Result};
use crate::label::{EntityType, Iob2Label};
use crate::metrics::{span_f1, SpanF1Report};
use crate::tagger::{train_tagger, ModelConfig};
use crate::tasks::{task_count, TaskConfig};

const FILLER_WORDS: usize = 300;
const FILLER_LEN: (usize, usize) = (10, 20);
const NAMES_PER_TYPE: usize = 30;
const CUE_PROBABILITY: f64 = 0.8;
const SENTENCES_PER_DOCUMENT: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub train_sentences: usize,
    pub test_sentences: usize,
    /// Expected fraction of entity tokens.
    pub target_rat: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig { train_sentences: 500, test_sentences: 200, target_rat: 0.05, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub train: Vec<Document>,
    pub test: Vec<Document>,
}

fn cues(ty: EntityType) -> &'static [&'static str] {
    match ty {
        EntityType::Per => &["mr", "ms", "dr"],
        EntityType::Loc => &["in", "near"],
        EntityType::Org => &["at", "joined"],
        EntityType::Misc => &["speaks", "celebrates"],
    }
}

fn name(ty: EntityType, k: usize) -> String {
    let stem = ["Ann", "Bel", "Cor", "Dan", "Eli", "Fen"][k % 6];
    format!("{stem}{}{k}", ty.as_str().to_lowercase())
}

struct Generator {
    rng: ChaCha8Rng,
    /// Probability that a sentence carries an entity.
    entity_rate: f64,
}

impl Generator {
    fn sentence(&mut self) -> LabeledSentence {
        let len = self.rng.gen_range(FILLER_LEN.0..=FILLER_LEN.1);
        let mut tokens: Vec<String> = (0..len).map(|_| format!("w{}", self.rng.gen_range(0..FILLER_WORDS))).collect();
        let mut labels = vec![Iob2Label::O; len];
        if self.rng.gen_bool(self.entity_rate) {
            let ty = EntityType::ALL[self.rng.gen_range(0..EntityType::COUNT)];
            let mut mention = vec![name(ty, self.rng.gen_range(0..NAMES_PER_TYPE))];
            if self.rng.gen_bool(0.5) {
                mention.push(name(ty, self.rng.gen_range(0..NAMES_PER_TYPE)));
            }
            let at = self.rng.gen_range(0..=len);
            let mut inserted = Vec::new();
            let mut inserted_labels = Vec::new();
            if self.rng.gen_bool(CUE_PROBABILITY) {
                inserted.push(cues(ty).choose(&mut self.rng).expect("non-empty cue list").to_string());
                inserted_labels.push(Iob2Label::O);
            }
            for (i, token) in mention.into_iter().enumerate() {
                inserted.push(token);
                inserted_labels.push(if i == 0 { Iob2Label::B(ty) } else { Iob2Label::I(ty) });
            }
            tokens.splice(at..at, inserted);
            labels.splice(at..at, inserted_labels);
        }
        LabeledSentence::new(tokens, labels).expect("generated labels are valid IOB2")
    }

    fn documents(&mut self, prefix: &str, count: usize) -> Vec<Document> {
        let sentences: Vec<LabeledSentence> = (0..count).map(|_| self.sentence()).collect();
        sentences
            .chunks(SENTENCES_PER_DOCUMENT)
            .enumerate()
            .map(|(i, chunk)| Document::new(format!("{prefix}-{:04}", i + 1), chunk.to_vec()))
            .collect()
    }
}

/// Seeded corpus with about `target_rat` entity tokens.
pub fn synthetic_low_rat_corpus(config: &SyntheticConfig) -> Result<SyntheticCorpus> {
    if !(config.target_rat > 0.0 && config.target_rat <= 0.08) {
        return Err(Error::Config(format!("target RAT {} outside (0, 0.08]", config.target_rat)));
    }
    if config.train_sentences == 0 || config.test_sentences == 0 {
        return Err(Error::Config("synthetic corpus needs train and test sentences".into()));
    }
    // rat = q·E / (L + q·(E + c)) solved for the per-sentence entity rate q
    let filler = (FILLER_LEN.0 + FILLER_LEN.1) as f64 / 2.0;
    let mention = 1.5;
    let rat = config.target_rat;
    let entity_rate = rat * filler / (mention - rat * (mention + CUE_PROBABILITY));
    let mut generator = Generator { rng: ChaCha8Rng::seed_from_u64(config.seed), entity_rate };
    let train = generator.documents("train", config.train_sentences);
    let test = generator.documents("test", config.test_sentences);
    Ok(SyntheticCorpus { train, test })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub train_sentences: usize,
    pub test_sentences: usize,
    pub train_rat: f64,
    pub test_rat: f64,
    pub seed: u64,
    pub multi_task_heads: usize,
    pub single_task: SpanF1Report,
    pub multi_task: SpanF1Report,
}

impl ComparisonReport {
    /// Multi-task minus single-task micro F1, in points.
    pub fn gain_points(&self) -> f64 {
        100.0 * (self.multi_task.micro.f1 - self.single_task.micro.f1)
    }

    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "train.sentences = {}", self.train_sentences);
        let _ = writeln!(out, "test.sentences = {}", self.test_sentences);
        let _ = writeln!(out, "train.rat = {}", self.train_rat);
        let _ = writeln!(out, "test.rat = {}", self.test_rat);
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "multi.heads = {}", self.multi_task_heads);
        let _ = writeln!(out, "single.span.f1 = {}", self.single_task.micro.f1);
        let _ = writeln!(out, "multi.span.f1 = {}", self.multi_task.micro.f1);
        let _ = writeln!(out, "gain.points = {}", self.gain_points());
        out
    }
}

/// Trains a main-task-only tagger and a tagger with `tasks`, both from the
/// same seed and configuration, and scores each on `test`.
pub fn compare_single_and_multi(
    train: &[Document],
    test: &[Document],
    tasks: &TaskConfig,
    config: &ModelConfig,
) -> Result<ComparisonReport> {
    let evaluate = |tasks: &TaskConfig| -> Result<SpanF1Report> {
        let (model, _) = train_tagger(&[train.to_vec()], tasks, config)?;
        span_f1(&model.tag_documents(test)?, test)
    };
    let single_task = evaluate(&TaskConfig::single_task())?;
    let multi_task = evaluate(tasks)?;
    let count = |docs: &[Document]| docs.iter().map(|d| d.sentences.len()).sum();
    Ok(ComparisonReport {
        train_sentences: count(train),
        test_sentences: count(test),
        train_rat: compute_rat(train)?,
        test_rat: compute_rat(test)?,
        seed: config.train.seed,
        multi_task_heads: task_count(tasks),
        single_task,
        multi_task,
    })
}
