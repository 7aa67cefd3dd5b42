//! Span-level and token-level evaluation, plus corpus statistics.

use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::{compute_rat, Document, LabeledSentence};
use crate::error::{Error, Result};
use crate::label::EntityType;

/// `num / den`, or 0 when the denominator is 0.
pub fn safe_ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Harmonic mean, 0 when `p + r == 0`.
pub fn f1_score(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PrfCounts {
    pub predicted: usize,
    pub reference: usize,
    pub matched: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl PrfCounts {
    fn from_counts(predicted: usize, reference: usize, matched: usize) -> Self {
        let precision = safe_ratio(matched, predicted);
        let recall = safe_ratio(matched, reference);
        PrfCounts { predicted, reference, matched, precision, recall, f1: f1_score(precision, recall) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpanF1Report {
    /// Indexed by [`EntityType::index`].
    pub per_type: [PrfCounts; 4],
    pub micro: PrfCounts,
}

impl SpanF1Report {
    pub fn for_type(&self, ty: EntityType) -> &PrfCounts {
        &self.per_type[ty.index()]
    }

    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        let mut put = |prefix: &str, c: &PrfCounts| {
            let _ = writeln!(out, "{prefix}.precision = {}", c.precision);
            let _ = writeln!(out, "{prefix}.recall = {}", c.recall);
            let _ = writeln!(out, "{prefix}.f1 = {}", c.f1);
            let _ = writeln!(out, "{prefix}.predicted = {}", c.predicted);
            let _ = writeln!(out, "{prefix}.reference = {}", c.reference);
            let _ = writeln!(out, "{prefix}.matched = {}", c.matched);
        };
        put("span.micro", &self.micro);
        for ty in EntityType::ALL {
            put(&format!("span.{ty}"), &self.per_type[ty.index()]);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TokenReport {
    pub tokens: usize,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl TokenReport {
    pub fn to_key_values(&self) -> String {
        format!(
            "token.count = {}\ntoken.accuracy = {}\ntoken.precision = {}\ntoken.recall = {}\ntoken.f1 = {}\n",
            self.tokens, self.accuracy, self.precision, self.recall, self.f1
        )
    }
}

fn aligned_sentences<'a>(
    predicted: &'a [Document],
    reference: &'a [Document],
) -> Result<Vec<(&'a LabeledSentence, &'a LabeledSentence)>> {
    if predicted.len() != reference.len() {
        return Err(Error::Alignment(format!(
            "{} predicted documents vs {} reference documents",
            predicted.len(),
            reference.len()
        )));
    }
    let mut out = Vec::new();
    for (p, r) in predicted.iter().zip(reference) {
        if p.id != r.id {
            return Err(Error::Alignment(format!("document {:?} paired with {:?}", p.id, r.id)));
        }
        if p.sentences.len() != r.sentences.len() {
            return Err(Error::Alignment(format!(
                "document {:?}: {} vs {} sentences",
                p.id,
                p.sentences.len(),
                r.sentences.len()
            )));
        }
        for (k, (ps, rs)) in p.sentences.iter().zip(&r.sentences).enumerate() {
            if ps.len() != rs.len() {
                return Err(Error::Alignment(format!(
                    "document {:?}, sentence {k}: {} vs {} tokens",
                    p.id,
                    ps.len(),
                    rs.len()
                )));
            }
            out.push((ps, rs));
        }
    }
    Ok(out)
}

/// Exact-match span scoring: boundaries and type must all agree.
pub fn span_f1(predicted: &[Document], reference: &[Document]) -> Result<SpanF1Report> {
    let mut counts = [[0usize; 3]; 4];
    for (p, r) in aligned_sentences(predicted, reference)? {
        let pred = p.spans();
        let gold: HashSet<_> = r.spans().into_iter().collect();
        for span in &pred {
            let c = &mut counts[span.entity_type.index()];
            c[0] += 1;
            if gold.contains(span) {
                c[2] += 1;
            }
        }
        for span in &gold {
            counts[span.entity_type.index()][1] += 1;
        }
    }
    let per_type = counts.map(|[p, r, m]| PrfCounts::from_counts(p, r, m));
    let total = |k: usize| counts.iter().map(|c| c[k]).sum::<usize>();
    let micro = PrfCounts::from_counts(total(0), total(1), total(2));
    Ok(SpanF1Report { per_type, micro })
}

pub fn token_metrics(predicted: &[Document], reference: &[Document]) -> Result<TokenReport> {
    let (mut tokens, mut equal, mut pred_entities, mut ref_entities, mut correct) = (0, 0, 0, 0, 0);
    for (p, r) in aligned_sentences(predicted, reference)? {
        for (&pl, &rl) in p.labels().iter().zip(r.labels()) {
            tokens += 1;
            equal += usize::from(pl == rl);
            pred_entities += usize::from(!pl.is_outside());
            ref_entities += usize::from(!rl.is_outside());
            correct += usize::from(!pl.is_outside() && pl == rl);
        }
    }
    let precision = safe_ratio(correct, pred_entities);
    let recall = safe_ratio(correct, ref_entities);
    Ok(TokenReport { tokens, accuracy: safe_ratio(equal, tokens), precision, recall, f1: f1_score(precision, recall) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub documents: usize,
    pub sentences: usize,
    pub tokens: usize,
    pub annotated_tokens: usize,
    pub rat: f64,
    /// Indexed by [`EntityType::index`].
    pub spans: [usize; 4],
}

impl DatasetStats {
    pub fn to_key_values(&self) -> String {
        let mut out = format!(
            "documents = {}\nsentences = {}\ntokens = {}\nannotated_tokens = {}\nrat = {}\n",
            self.documents, self.sentences, self.tokens, self.annotated_tokens, self.rat
        );
        for ty in EntityType::ALL {
            let _ = writeln!(out, "spans.{ty} = {}", self.spans[ty.index()]);
        }
        out
    }
}

pub fn dataset_stats(documents: &[Document]) -> Result<DatasetStats> {
    let rat = compute_rat(documents)?;
    let mut stats =
        DatasetStats { documents: documents.len(), sentences: 0, tokens: 0, annotated_tokens: 0, rat, spans: [0; 4] };
    for sentence in documents.iter().flat_map(|d| &d.sentences) {
        stats.sentences += 1;
        stats.tokens += sentence.len();
        stats.annotated_tokens += sentence.labels().iter().filter(|l| !l.is_outside()).count();
        for span in sentence.spans() {
            stats.spans[span.entity_type.index()] += 1;
        }
    }
    Ok(stats)
}
