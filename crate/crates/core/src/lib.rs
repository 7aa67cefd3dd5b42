//! Weakly supervised named entity recognition.
//!
//! * [`annotate`] turns anchored wiki text and a gazetteer into distant IOB2 labels.
//! * [`correction`] pairs noisy labels with gold labels and orders them into a curriculum.
//! * [`tagger`] trains the label-correction model and single/multi-task taggers.
//! * [`tasks`] generates the auxiliary context-label tasks.
//! * [`metrics`] scores predictions at span and token level.

pub mod annotate;
pub mod cli;
pub mod correction;
pub mod corpus;
pub mod error;
pub mod harness;
pub mod label;
pub mod metrics;
pub mod tagger;
pub mod tasks;

pub use corpus::{compute_rat, read_conll, write_conll, Document, LabeledSentence};
pub use error::{Error, Result};
pub use label::{EntitySpan, EntityType, Iob2Label};
