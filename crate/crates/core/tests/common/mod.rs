//! Test-only oracles, written independently of the library's forward and
//! backward code paths.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use weakner::label::{validate_iob2, EntitySpan, EntityType, Iob2Label};
use weakner::tagger::{Architecture, CorrectionSample, HeadKind, LabelEmbedder, TaggerParams, TaggingSample};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random valid IOB2 sequence of the given length.
pub fn random_iob2<R: Rng>(rng: &mut R, len: usize) -> Vec<Iob2Label> {
    let mut out: Vec<Iob2Label> = Vec::with_capacity(len);
    for i in 0..len {
        let prev = if i == 0 { Iob2Label::O } else { out[i - 1] };
        let roll = rng.gen_range(0..10);
        let label = match (roll, prev.entity_type()) {
            (0..=4, _) => Iob2Label::O,
            (5..=7, Some(t)) => Iob2Label::I(t),
            _ => Iob2Label::B(EntityType::ALL[rng.gen_range(0..4)]),
        };
        out.push(label);
    }
    assert_eq!(validate_iob2(&out), Ok(()));
    out
}

/// Span extraction by brute force: every (start, end) pair is tested
/// directly against the IOB2 definition of an entity.
pub fn brute_force_spans(labels: &[Iob2Label]) -> Vec<EntitySpan> {
    let n = labels.len();
    let mut spans = Vec::new();
    for start in 0..n {
        let Iob2Label::B(t) = labels[start] else { continue };
        for end in start..n {
            let inner_ok = (start + 1..=end).all(|k| labels[k] == Iob2Label::I(t));
            let closed = end + 1 == n || labels[end + 1] != Iob2Label::I(t);
            if inner_ok && closed {
                spans.push(EntitySpan::new(start, end, t));
            }
        }
    }
    spans
}

fn naive_softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().cloned().fold(f64::MIN, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

/// Encoder output computed straight from the definition, one scalar at a time.
pub fn naive_encode(params: &TaggerParams, ids: &[usize]) -> Vec<Vec<f64>> {
    let enc = &params.encoder;
    let (e, h, w) = (enc.embedding_dim(), enc.hidden_dim(), enc.radius as isize);
    let boundary = 1usize;
    let mut reps = Vec::new();
    for i in 0..ids.len() as isize {
        let mut concat = Vec::new();
        for j in i - w..=i + w {
            let id = if j < 0 || j >= ids.len() as isize { boundary } else { ids[j as usize] };
            for c in 0..e {
                concat.push(enc.embeddings.get(id, c));
            }
        }
        let mut r = Vec::new();
        for row in 0..h {
            let mut z = enc.bias[row];
            for (col, x) in concat.iter().enumerate() {
                z += enc.projection.get(row, col) * x;
            }
            r.push(z.tanh());
        }
        reps.push(r);
    }
    reps
}

fn naive_head(params: &TaggerParams, head: usize, feature: &[f64]) -> Vec<f64> {
    let hd = &params.heads[head];
    let logits: Vec<f64> = (0..hd.weight.rows())
        .map(|k| hd.bias[k] + (0..feature.len()).map(|c| hd.weight.get(k, c) * feature[c]).sum::<f64>())
        .collect();
    naive_softmax(&logits)
}

pub fn naive_correction_probs(params: &TaggerParams, sample: &CorrectionSample) -> Vec<Vec<f64>> {
    let reps = naive_encode(params, &sample.ids);
    reps.iter()
        .zip(&sample.noisy)
        .map(|(r, &l)| {
            let mut c = r.clone();
            if let Some(emb) = params.label_embedder {
                let mut one_hot = vec![0.0; emb.dim];
                one_hot[l] = 1.0;
                c.extend(one_hot);
            }
            naive_head(params, 0, &c)
        })
        .collect()
}

pub fn naive_correction_loss(params: &TaggerParams, samples: &[CorrectionSample]) -> f64 {
    let mut total = 0.0;
    let mut n = 0;
    for s in samples {
        for (p, &g) in naive_correction_probs(params, s).iter().zip(&s.gold) {
            total += -p[g].ln();
            n += 1;
        }
    }
    total / n as f64
}

pub fn naive_multitask_loss(params: &TaggerParams, samples: &[TaggingSample], weights: &[f64]) -> f64 {
    let mut total = 0.0;
    let mut n = 0;
    for s in samples {
        let reps = naive_encode(params, &s.ids);
        for (r, targets) in reps.iter().zip(&s.targets) {
            for (h, &t) in targets.iter().enumerate() {
                total += weights[h] * -naive_head(params, h, r)[t].ln();
            }
            n += 1;
        }
    }
    total / n as f64
}

pub struct Instance {
    pub params: TaggerParams,
    pub correction: Vec<CorrectionSample>,
}

/// Random small correction instance: V ≤ 20, E,H ≤ 8, sentences ≤ 5 tokens.
pub fn random_correction_instance(seed: u64, scale: f64) -> Instance {
    let mut r = rng(seed);
    let vocab = r.gen_range(3..=20);
    let arch = Architecture {
        embedding_dim: r.gen_range(1..=8),
        hidden_dim: r.gen_range(1..=8),
        context_radius: r.gen_range(0..=2),
    };
    let label_dim = if r.gen_bool(0.5) { 9 } else { 12 };
    let embedder = if r.gen_bool(0.8) { Some(LabelEmbedder::new(label_dim).unwrap()) } else { None };
    let mut params = TaggerParams::init(vocab, arch, embedder, &[HeadKind::Correction], &mut r).unwrap();
    perturb(&mut params, scale, &mut r);
    let samples = (0..r.gen_range(1..=3))
        .map(|_| {
            let len = r.gen_range(1..=5);
            CorrectionSample {
                ids: (0..len).map(|_| r.gen_range(0..vocab)).collect(),
                noisy: random_iob2(&mut r, len).iter().map(|l| l.index()).collect(),
                gold: random_iob2(&mut r, len).iter().map(|l| l.index()).collect(),
            }
        })
        .collect();
    Instance { params, correction: samples }
}

/// Replace every trainable value (biases included) with uniform noise of the given scale.
pub fn perturb<R: Rng>(params: &mut TaggerParams, scale: f64, r: &mut R) {
    for t in params.tensors_mut() {
        for x in t.iter_mut() {
            *x = r.gen_range(-scale..=scale);
        }
    }
}

pub struct TaskInstance {
    pub params: TaggerParams,
    pub samples: Vec<TaggingSample>,
    pub weights: Vec<f64>,
    pub tasks: weakner::tasks::TaskConfig,
}

/// Random small multi-task instance with random windows and weights.
pub fn random_multitask_instance(seed: u64, scale: f64) -> TaskInstance {
    use weakner::tasks::{describe_tasks, make_task_labels, TaskConfig};
    let mut r = rng(seed ^ 0x5eed);
    let vocab = r.gen_range(3..=20);
    let arch = Architecture {
        embedding_dim: r.gen_range(1..=8),
        hidden_dim: r.gen_range(1..=8),
        context_radius: r.gen_range(0..=2),
    };
    let tasks = TaskConfig::new(
        (0..r.gen_range(0..=2)).map(|_| r.gen_range(1..=4)).collect(),
        (0..r.gen_range(0..=2)).map(|_| r.gen_range(1..=2)).collect(),
    )
    .unwrap();
    let kinds: Vec<HeadKind> = describe_tasks(&tasks).iter().map(HeadKind::for_task).collect();
    let mut params = TaggerParams::init(vocab, arch, None, &kinds, &mut r).unwrap();
    perturb(&mut params, scale, &mut r);
    let raw: Vec<f64> = kinds.iter().map(|_| r.gen_range(0.1..1.0)).collect();
    let sum: f64 = raw.iter().sum();
    let weights = raw.iter().map(|w| w / sum).collect();
    let samples = (0..r.gen_range(1..=3))
        .map(|_| {
            let len = r.gen_range(1..=5);
            let labels = random_iob2(&mut r, len);
            TaggingSample { ids: (0..len).map(|_| r.gen_range(0..vocab)).collect(), targets: make_task_labels(&labels, &tasks) }
        })
        .collect();
    TaskInstance { params, samples, weights, tasks }
}

/// Per-type (predicted, reference, matched) span counts, by pairwise comparison.
pub fn brute_force_span_counts(predicted: &[weakner::Document], reference: &[weakner::Document]) -> [[usize; 3]; 4] {
    let mut counts = [[0usize; 3]; 4];
    for (pd, rd) in predicted.iter().zip(reference) {
        for (ps, rs) in pd.sentences.iter().zip(&rd.sentences) {
            let pred = brute_force_spans(ps.labels());
            let gold = brute_force_spans(rs.labels());
            for a in &pred {
                counts[a.entity_type.index()][0] += 1;
                if gold.iter().any(|b| a.start == b.start && a.end == b.end && a.entity_type == b.entity_type) {
                    counts[a.entity_type.index()][2] += 1;
                }
            }
            for b in &gold {
                counts[b.entity_type.index()][1] += 1;
            }
        }
    }
    counts
}

/// Task targets by scanning each window token by token; head order written
/// out independently of the library's descriptor code.
pub fn brute_force_task_labels(labels: &[Iob2Label], binary: &[usize], positional: &[usize]) -> Vec<Vec<usize>> {
    let n = labels.len() as isize;
    let mut binary = binary.to_vec();
    binary.sort();
    let mut positional = positional.to_vec();
    positional.sort();
    let mut out = Vec::new();
    for i in 0..n {
        let mut row = Vec::new();
        for &w in &binary {
            for dir in [-1isize, 1] {
                for t in EntityType::ALL {
                    let mut hit = 0;
                    for d in 1..=w as isize {
                        let j = i + dir * d;
                        if j >= 0 && j < n && labels[j as usize].entity_type() == Some(t) {
                            hit = 1;
                        }
                    }
                    row.push(hit);
                }
            }
        }
        for &w in &positional {
            for dir in [-1isize, 1] {
                for d in 1..=w as isize {
                    let j = i + dir * d;
                    row.push(if j >= 0 && j < n { labels[j as usize].index() } else { 9 });
                }
            }
        }
        row.push(labels[i as usize].index());
        out.push(row);
    }
    out
}

/// Random aligned corpus pair with up to `max_sentences` sentences.
pub fn random_corpus_pair<R: Rng>(r: &mut R, max_sentences: usize) -> (Vec<weakner::Document>, Vec<weakner::Document>) {
    use weakner::{Document, LabeledSentence};
    let count = r.gen_range(0..=max_sentences);
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for _ in 0..count {
        let len = r.gen_range(1..=12);
        let tokens: Vec<String> = (0..len).map(|k| format!("t{k}")).collect();
        let gold = random_iob2(r, len);
        // predictions are often close to the reference so matches occur
        let pred = if r.gen_bool(0.5) {
            let mut p = gold.clone();
            let k = r.gen_range(0..len);
            p[k] = Iob2Label::B(EntityType::ALL[r.gen_range(0..4)]);
            weakner::label::repair_iob2(&p)
        } else {
            random_iob2(r, len)
        };
        a.push(LabeledSentence::new(tokens.clone(), pred).unwrap());
        b.push(LabeledSentence::new(tokens, gold).unwrap());
    }
    (vec![Document::new("d", a)], vec![Document::new("d", b)])
}
