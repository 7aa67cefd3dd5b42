//! Sentences, documents, and the two-column CoNLL text format.
//!
//! Canonical layout:
//!
//! ```text
//! -DOCSTART- doc-id<TAB>O
//!
//! John<TAB>B-PER
//! lives<TAB>O
//!
//! ```
//!
//! Every sentence is terminated by a blank line, and so is every
//! `-DOCSTART-` marker. A file with no marker is read as a single document.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::{check_iob2, iob_to_iob2, spans_from_labels, EntitySpan, Iob2Label};

pub const DOCSTART: &str = "-DOCSTART-";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledSentence {
    tokens: Vec<String>,
    labels: Vec<Iob2Label>,
}

impl LabeledSentence {
    pub fn new(tokens: Vec<String>, labels: Vec<Iob2Label>) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::Shape("a sentence needs at least one token".into()));
        }
        if tokens.len() != labels.len() {
            return Err(Error::Shape(format!("{} tokens but {} labels", tokens.len(), labels.len())));
        }
        check_iob2(&labels)?;
        Ok(LabeledSentence { tokens, labels })
    }

    /// A sentence labeled entirely `O`.
    pub fn unlabeled(tokens: Vec<String>) -> Result<Self> {
        let labels = vec![Iob2Label::O; tokens.len()];
        Self::new(tokens, labels)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn labels(&self) -> &[Iob2Label] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn spans(&self) -> Vec<EntitySpan> {
        spans_from_labels(&self.labels).expect("sentence labels are validated on construction")
    }

    /// Same tokens, new labels.
    pub fn relabel(&self, labels: Vec<Iob2Label>) -> Result<Self> {
        Self::new(self.tokens.clone(), labels)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub sentences: Vec<LabeledSentence>,
}

impl Document {
    pub fn new(id: impl Into<String>, sentences: Vec<LabeledSentence>) -> Self {
        Document { id: id.into(), sentences }
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(LabeledSentence::len).sum()
    }
}

/// Fraction of tokens carrying a non-`O` label.
pub fn compute_rat(documents: &[Document]) -> Result<f64> {
    let (mut labeled, mut total) = (0usize, 0usize);
    for sentence in documents.iter().flat_map(|d| &d.sentences) {
        total += sentence.len();
        labeled += sentence.labels().iter().filter(|l| !l.is_outside()).count();
    }
    if total == 0 {
        return Err(Error::Undefined("RAT"));
    }
    Ok(labeled as f64 / total as f64)
}

pub fn read_conll(path: impl AsRef<Path>) -> Result<Vec<Document>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_conll(&text, path)
}

pub fn write_conll(documents: &[Document], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = format_conll(documents)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub(crate) fn check_token(token: &str) -> Result<()> {
    if token.is_empty() || token.contains(['\t', '\n', '\r']) {
        return Err(Error::Shape(format!("token {token:?} cannot be written as a CoNLL column")));
    }
    Ok(())
}

pub fn format_conll(documents: &[Document]) -> Result<String> {
    let mut out = String::new();
    let mut seen = HashSet::new();
    for doc in documents {
        if doc.id.is_empty() || doc.id.contains(char::is_whitespace) {
            return Err(Error::Shape(format!("document id {:?} must be non-empty without whitespace", doc.id)));
        }
        if !seen.insert(doc.id.as_str()) {
            return Err(Error::Shape(format!("duplicate document id {:?}", doc.id)));
        }
        let _ = write!(out, "{DOCSTART} {}\tO\n\n", doc.id);
        for sentence in &doc.sentences {
            for (token, label) in sentence.tokens().iter().zip(sentence.labels()) {
                check_token(token)?;
                if token.starts_with(DOCSTART) {
                    return Err(Error::Shape(format!("token {token:?} collides with the document marker")));
                }
                let _ = writeln!(out, "{token}\t{label}");
            }
            out.push('\n');
        }
    }
    Ok(out)
}

/// Parses the canonical two-column format. `origin` is used in messages only.
pub fn parse_conll(text: &str, origin: &Path) -> Result<Vec<Document>> {
    let mut docs: Vec<Document> = Vec::new();
    let mut ids = HashSet::new();
    let mut tokens = Vec::new();
    let mut labels = Vec::new();
    let mut sentence_start = 0;
    let mut expect_blank = false;
    let mut last_line = 0;

    let finish = |docs: &mut Vec<Document>,
                  tokens: &mut Vec<String>,
                  labels: &mut Vec<Iob2Label>,
                  first_line: usize|
     -> Result<()> {
        let labels = std::mem::take(labels);
        if let Err(index) = crate::label::validate_iob2(&labels) {
            return Err(Error::parse(
                origin,
                first_line + index,
                format!("{} does not continue an entity", labels[index]),
            ));
        }
        let sentence = LabeledSentence::new(std::mem::take(tokens), labels)?;
        if docs.is_empty() {
            docs.push(Document::new("doc-1", Vec::new()));
        }
        docs.last_mut().expect("document exists").sentences.push(sentence);
        Ok(())
    };

    let mut lines: Vec<&str> = text.split('\n').collect();
    if text.ends_with('\n') {
        lines.pop();
    }
    for (i, line) in lines.into_iter().enumerate() {
        let lineno = i + 1;
        last_line = lineno;
        if line.is_empty() {
            if !tokens.is_empty() {
                finish(&mut docs, &mut tokens, &mut labels, sentence_start)?;
            }
            expect_blank = false;
            continue;
        }
        if expect_blank {
            return Err(Error::parse(origin, lineno, "expected a blank line after the document marker"));
        }
        if line.starts_with(DOCSTART) {
            if !tokens.is_empty() {
                return Err(Error::parse(origin, lineno, "sentence is missing its blank-line terminator"));
            }
            let (head, label) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(origin, lineno, "document marker needs a label column"))?;
            if label != "O" {
                return Err(Error::parse(origin, lineno, "document marker must be labeled O"));
            }
            let id = head[DOCSTART.len()..].trim();
            let id = if id.is_empty() { format!("doc-{}", docs.len() + 1) } else { id.to_string() };
            if !ids.insert(id.clone()) {
                return Err(Error::parse(origin, lineno, format!("duplicate document id {id:?}")));
            }
            docs.push(Document::new(id, Vec::new()));
            expect_blank = true;
            continue;
        }
        let mut cols = line.split('\t');
        let (token, label, rest) = (cols.next(), cols.next(), cols.next());
        let (token, label) = match (token, label, rest) {
            (Some(t), Some(l), None) if !t.is_empty() => (t, l),
            _ => return Err(Error::parse(origin, lineno, "ragged line: expected token<TAB>label")),
        };
        let label: Iob2Label = label
            .parse()
            .map_err(|_| Error::parse(origin, lineno, format!("invalid label {label:?}")))?;
        if tokens.is_empty() {
            sentence_start = lineno;
            if docs.is_empty() {
                ids.insert("doc-1".to_string());
            }
        }
        tokens.push(token.to_string());
        labels.push(label);
    }
    if !tokens.is_empty() || expect_blank {
        return Err(Error::parse(origin, last_line, "file must end with a blank line"));
    }
    Ok(docs)
}

/// Reads a CoNLL-2003 style file: whitespace-separated columns, token
/// first, IOB1 label last. Labels are converted to IOB2.
pub fn read_conll2003(path: impl AsRef<Path>) -> Result<Vec<Document>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut docs: Vec<Document> = Vec::new();
    let mut tokens: Vec<String> = Vec::new();
    let mut raw: Vec<String> = Vec::new();
    let mut start = 0;

    let flush = |docs: &mut Vec<Document>, tokens: &mut Vec<String>, raw: &mut Vec<String>, start: usize| {
        if tokens.is_empty() {
            return Ok(());
        }
        let labels = iob_to_iob2(raw).map_err(|e| match e {
            Error::Format { index, message } => Error::parse(path, start + index, message),
            other => other,
        })?;
        raw.clear();
        if docs.is_empty() {
            docs.push(Document::new("doc-1", Vec::new()));
        }
        let sentence = LabeledSentence::new(std::mem::take(tokens), labels)?;
        docs.last_mut().expect("document exists").sentences.push(sentence);
        Ok::<(), Error>(())
    };

    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.is_empty() {
            flush(&mut docs, &mut tokens, &mut raw, start)?;
            continue;
        }
        if cols[0] == DOCSTART {
            flush(&mut docs, &mut tokens, &mut raw, start)?;
            let id = format!("doc-{}", docs.len() + 1);
            docs.push(Document::new(id, Vec::new()));
            continue;
        }
        if cols.len() < 2 {
            return Err(Error::parse(path, lineno, "expected at least token and label columns"));
        }
        if tokens.is_empty() {
            start = lineno;
        }
        tokens.push(cols[0].to_string());
        raw.push(cols[cols.len() - 1].to_string());
    }
    flush(&mut docs, &mut tokens, &mut raw, start)?;
    Ok(docs)
}
