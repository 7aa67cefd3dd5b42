//! IOB2 label algebra.
//!
//! Labels are stored as a closed enum over the four entity types, so the
//! label vocabulary is always exactly nine entries. Conversions between
//! label sequences and entity spans live here as well, since every metric
//! and every matcher goes through the span form.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The four entity classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EntityType {
    Per,
    Loc,
    Org,
    Misc,
}

impl EntityType {
    pub const ALL: [EntityType; 4] = [EntityType::Per, EntityType::Loc, EntityType::Org, EntityType::Misc];
    /// Number of entity types.
    pub const COUNT: usize = 4;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EntityType::Per => "PER",
            EntityType::Loc => "LOC",
            EntityType::Org => "ORG",
            EntityType::Misc => "MISC",
        }
    }
}

impl fmt::Display for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EntityType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "PER" => Ok(EntityType::Per),
            "LOC" => Ok(EntityType::Loc),
            "ORG" => Ok(EntityType::Org),
            "MISC" => Ok(EntityType::Misc),
            other => Err(Error::UnknownLabel(other.to_string())),
        }
    }
}

/// A single IOB2 tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Iob2Label {
    O,
    B(EntityType),
    I(EntityType),
}

impl Iob2Label {
    /// Size of the label vocabulary.
    pub const COUNT: usize = 1 + 2 * EntityType::COUNT;

    /// Dense index: `O` is 0, then `B-t`, `I-t` pairs in entity-type order.
    pub fn index(self) -> usize {
        match self {
            Iob2Label::O => 0,
            Iob2Label::B(t) => 1 + 2 * t.index(),
            Iob2Label::I(t) => 2 + 2 * t.index(),
        }
    }

    pub fn from_index(index: usize) -> Option<Self> {
        match index {
            0 => Some(Iob2Label::O),
            i if i < Self::COUNT => {
                let t = EntityType::ALL[(i - 1) / 2];
                Some(if i % 2 == 1 { Iob2Label::B(t) } else { Iob2Label::I(t) })
            }
            _ => None,
        }
    }

    pub fn all() -> impl Iterator<Item = Iob2Label> {
        (0..Self::COUNT).filter_map(Self::from_index)
    }

    pub fn entity_type(self) -> Option<EntityType> {
        match self {
            Iob2Label::O => None,
            Iob2Label::B(t) | Iob2Label::I(t) => Some(t),
        }
    }

    pub fn is_outside(self) -> bool {
        self == Iob2Label::O
    }
}

impl fmt::Display for Iob2Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Iob2Label::O => f.write_str("O"),
            Iob2Label::B(t) => write!(f, "B-{t}"),
            Iob2Label::I(t) => write!(f, "I-{t}"),
        }
    }
}

impl FromStr for Iob2Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "O" {
            return Ok(Iob2Label::O);
        }
        let unknown = || Error::UnknownLabel(s.to_string());
        let (prefix, ty) = s.split_once('-').ok_or_else(unknown)?;
        let ty: EntityType = ty.parse().map_err(|_| unknown())?;
        match prefix {
            "B" => Ok(Iob2Label::B(ty)),
            "I" => Ok(Iob2Label::I(ty)),
            _ => Err(unknown()),
        }
    }
}

/// Inclusive token span carrying an entity type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EntitySpan {
    pub start: usize,
    pub end: usize,
    pub entity_type: EntityType,
}

impl EntitySpan {
    pub fn new(start: usize, end: usize, entity_type: EntityType) -> Self {
        EntitySpan { start, end, entity_type }
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn overlaps(&self, other: &EntitySpan) -> bool {
        self.start <= other.end && other.start <= self.end
    }
}

impl fmt::Display for EntitySpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.start, self.end, self.entity_type)
    }
}

/// Returns `Ok(())` for a well-formed IOB2 sequence, otherwise the index of
/// the first `I-t` that does not continue a `t` entity.
pub fn validate_iob2(labels: &[Iob2Label]) -> std::result::Result<(), usize> {
    let mut prev = Iob2Label::O;
    for (i, &label) in labels.iter().enumerate() {
        if let Iob2Label::I(t) = label {
            if prev.entity_type() != Some(t) {
                return Err(i);
            }
        }
        prev = label;
    }
    Ok(())
}

/// Like [`validate_iob2`] but wrapped in the crate error type.
pub fn check_iob2(labels: &[Iob2Label]) -> Result<()> {
    validate_iob2(labels).map_err(|index| Error::InvalidIob2 { index, label: labels[index].to_string() })
}

/// Converts IOB1 tag strings to IOB2.
///
/// In IOB1 a `B-t` only appears between two adjacent entities of the same
/// type, so an `I-t` that does not continue a `t` entity opens a new one.
/// Already-IOB2 input passes through unchanged.
pub fn iob_to_iob2<S: AsRef<str>>(labels: &[S]) -> Result<Vec<Iob2Label>> {
    let mut out = Vec::with_capacity(labels.len());
    let mut prev = Iob2Label::O;
    for (index, raw) in labels.iter().enumerate() {
        let raw = raw.as_ref();
        let label: Iob2Label = raw
            .parse()
            .map_err(|_| Error::Format { index, message: format!("unknown label {raw:?}") })?;
        let fixed = match label {
            Iob2Label::I(t) if prev.entity_type() != Some(t) => Iob2Label::B(t),
            other => other,
        };
        out.push(fixed);
        prev = fixed;
    }
    Ok(out)
}

/// Typed-label variant of [`iob_to_iob2`]; never fails.
pub fn repair_iob2(labels: &[Iob2Label]) -> Vec<Iob2Label> {
    let mut out = Vec::with_capacity(labels.len());
    let mut prev = Iob2Label::O;
    for &label in labels {
        let fixed = match label {
            Iob2Label::I(t) if prev.entity_type() != Some(t) => Iob2Label::B(t),
            other => other,
        };
        out.push(fixed);
        prev = fixed;
    }
    out
}

/// Extracts entity spans from a valid IOB2 sequence, sorted by start.
pub fn spans_from_labels(labels: &[Iob2Label]) -> Result<Vec<EntitySpan>> {
    check_iob2(labels)?;
    let mut spans = Vec::new();
    let mut open: Option<EntitySpan> = None;
    for (i, &label) in labels.iter().enumerate() {
        match label {
            Iob2Label::B(t) => {
                spans.extend(open.take());
                open = Some(EntitySpan::new(i, i, t));
            }
            Iob2Label::I(_) => {
                // validated: an I always continues the open span
                if let Some(span) = open.as_mut() {
                    span.end = i;
                }
            }
            Iob2Label::O => spans.extend(open.take()),
        }
    }
    spans.extend(open);
    Ok(spans)
}

/// Renders spans back into an IOB2 sequence of the given length.
pub fn labels_from_spans(length: usize, spans: &[EntitySpan]) -> Result<Vec<Iob2Label>> {
    let mut labels = vec![Iob2Label::O; length];
    let mut owner: Vec<Option<usize>> = vec![None; length];
    for (k, span) in spans.iter().enumerate() {
        if span.start > span.end || span.end >= length {
            return Err(Error::SpanOutOfRange { span: *span, length });
        }
        for pos in span.start..=span.end {
            if let Some(prev) = owner[pos] {
                return Err(Error::SpanConflict { first: spans[prev], second: *span });
            }
            owner[pos] = Some(k);
        }
        labels[span.start] = Iob2Label::B(span.entity_type);
        for label in &mut labels[span.start + 1..=span.end] {
            *label = Iob2Label::I(span.entity_type);
        }
    }
    Ok(labels)
}
