//! The trainable tagger: a windowed embedding encoder with softmax heads
//! for label correction and for (multi-task) tagging.

pub mod gradcheck;
pub mod model;
pub mod objective;
pub mod params;
pub mod tensor;
pub mod train;
pub mod vocab;

pub use gradcheck::{check_gradients, compare_gradients, finite_difference_grad, GradCheckReport};
pub use model::{train_correction_model, train_tagger, Model, ModelConfig, ModelKind};
pub use objective::{
    correction_forward, encode, encode_ids, grad, multitask_forward, uniform_weights, CorrectionObjective,
    CorrectionSample, MultiTaskObjective, Objective, TaggingSample,
};
pub use params::{Architecture, EncoderParams, Head, HeadKind, LabelEmbedder, TaggerParams};
pub use train::{train_stages, EpochRecord, TrainConfig, TrainTrace};
pub use vocab::Vocabulary;
