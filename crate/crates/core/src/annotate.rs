//! Distant annotation of anchored text.
//!
//! Three steps per abstract: pull the `[[target|surface]]` anchors out of
//! the markup, type each anchor by looking its target up in the gazetteer,
//! then label every exact occurrence of the typed surfaces in the plain
//! text with greedy longest-match-first.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Document, LabeledSentence};
use crate::error::{Error, Result};
use crate::label::{check_iob2, EntitySpan, EntityType, Iob2Label};

/// An anchored string and the token span it occupies in the plain text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Anchor {
    pub surface: Vec<String>,
    pub target: String,
    /// First token, inclusive.
    pub start: usize,
    /// Last token, inclusive.
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawAbstract {
    pub id: String,
    pub body: String,
}

/// Surface forms (token sequences) mapped to entity types, with the
/// lookup machinery for greedy longest-match annotation.
///
/// Insertion is first-writer-wins: re-inserting a known surface keeps the
/// original type.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SurfaceMap {
    entries: HashMap<Vec<String>, EntityType>,
    lengths: BTreeSet<usize>,
}

impl SurfaceMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns false (and changes nothing) if the surface was already present.
    pub fn insert(&mut self, surface: Vec<String>, entity_type: EntityType) -> bool {
        assert!(!surface.is_empty(), "surface forms must be non-empty");
        if self.entries.contains_key(&surface) {
            return false;
        }
        self.lengths.insert(surface.len());
        self.entries.insert(surface, entity_type);
        true
    }

    pub fn get(&self, surface: &[String]) -> Option<EntityType> {
        self.entries.get(surface).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[String], EntityType)> {
        self.entries.iter().map(|(k, v)| (k.as_slice(), *v))
    }

    /// Greedy matching: longer surfaces first, leftmost first within a
    /// length, and a token that is already covered is never taken again.
    pub fn match_spans(&self, tokens: &[String]) -> Vec<EntitySpan> {
        let mut taken = vec![false; tokens.len()];
        let mut spans = Vec::new();
        for &len in self.lengths.iter().rev() {
            if len > tokens.len() {
                continue;
            }
            for start in 0..=tokens.len() - len {
                let end = start + len - 1;
                if taken[start..=end].iter().any(|&t| t) {
                    continue;
                }
                if let Some(ty) = self.get(&tokens[start..=end]) {
                    taken[start..=end].iter_mut().for_each(|t| *t = true);
                    spans.push(EntitySpan::new(start, end, ty));
                }
            }
        }
        spans.sort();
        spans
    }
}

/// The typed knowledge base, keyed by entity name.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Gazetteer {
    entries: HashMap<Vec<String>, EntityType>,
}

impl Gazetteer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, surface: &str, entity_type: EntityType) -> Result<()> {
        let key = split_surface(surface);
        if key.is_empty() {
            return Err(Error::Config("gazetteer surface forms must be non-empty".into()));
        }
        if self.entries.contains_key(&key) {
            return Err(Error::Config(format!("duplicate gazetteer entry {surface:?}")));
        }
        self.entries.insert(key, entity_type);
        Ok(())
    }

    /// Whitespace differences in the target are ignored.
    pub fn lookup(&self, target: &str) -> Option<EntityType> {
        self.entries.get(&split_surface(target)).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn split_surface(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_string).collect()
}

/// Reads `surface<TAB>TYPE` lines. Blank lines are skipped.
pub fn read_gazetteer(path: impl AsRef<Path>) -> Result<Gazetteer> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut gazetteer = Gazetteer::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (surface, ty) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(path, i + 1, "expected surface<TAB>TYPE"))?;
        let ty: EntityType =
            ty.parse().map_err(|_| Error::parse(path, i + 1, format!("unknown entity type {ty:?}")))?;
        gazetteer.insert(surface, ty).map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
    }
    Ok(gazetteer)
}

/// Reads `id<TAB>body` records, one per line.
pub fn read_abstracts(path: impl AsRef<Path>) -> Result<Vec<RawAbstract>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let (id, body) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(path, i + 1, "expected id<TAB>body"))?;
        if id.is_empty() {
            return Err(Error::parse(path, i + 1, "empty abstract id"));
        }
        out.push(RawAbstract { id: id.to_string(), body: body.to_string() });
    }
    Ok(out)
}

/// Strips anchor markup from `body`.
///
/// Anchor boundaries are also token boundaries, so `[[Paris]]'s` yields the
/// tokens `Paris` and `'s`. Offsets in errors count characters, not bytes.
pub fn extract_anchors(body: &str) -> Result<(Vec<String>, Vec<Anchor>)> {
    let chars: Vec<char> = body.chars().collect();
    let mut tokens = Vec::new();
    let mut anchors = Vec::new();
    let mut text = String::new();
    let mut i = 0;
    while i < chars.len() {
        if chars[i] == '[' && chars.get(i + 1) == Some(&'[') {
            tokens.extend(split_surface(&std::mem::take(&mut text)));
            let open = i;
            let mut j = i + 2;
            let close = loop {
                match (chars.get(j), chars.get(j + 1)) {
                    (None, _) => {
                        return Err(Error::Markup { offset: open, message: "unterminated [[".into() });
                    }
                    (Some('['), Some('[')) => {
                        return Err(Error::Markup { offset: j, message: "nested anchor".into() });
                    }
                    (Some(']'), Some(']')) => break j,
                    _ => j += 1,
                }
            };
            let inner: String = chars[open + 2..close].iter().collect();
            let (target, surface) = match inner.split_once('|') {
                Some((target, surface)) => (target.trim().to_string(), surface),
                None => (inner.trim().to_string(), inner.as_str()),
            };
            let surface = split_surface(surface);
            if surface.is_empty() || target.is_empty() {
                return Err(Error::Markup { offset: open, message: "empty anchor".into() });
            }
            let start = tokens.len();
            tokens.extend(surface.iter().cloned());
            anchors.push(Anchor { surface, target, start, end: tokens.len() - 1 });
            i = close + 2;
        } else {
            text.push(chars[i]);
            i += 1;
        }
    }
    tokens.extend(split_surface(&text));
    Ok((tokens, anchors))
}

/// Types each anchor by its target. Anchors with unknown targets are
/// dropped; when two anchors share a surface the first one wins.
pub fn resolve_anchor_types(anchors: &[Anchor], gazetteer: &Gazetteer) -> SurfaceMap {
    let mut map = SurfaceMap::new();
    for anchor in anchors {
        if let Some(ty) = gazetteer.lookup(&anchor.target) {
            map.insert(anchor.surface.clone(), ty);
        }
    }
    map
}

pub fn annotate_exact(tokens: &[String], surfaces: &SurfaceMap) -> Vec<Iob2Label> {
    let spans = surfaces.match_spans(tokens);
    crate::label::labels_from_spans(tokens.len(), &spans).expect("greedy matches never overlap")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatorConfig {
    /// Tokens that close a sentence.
    pub terminators: Vec<String>,
}

impl Default for AnnotatorConfig {
    fn default() -> Self {
        AnnotatorConfig { terminators: [".", "!", "?"].iter().map(|s| s.to_string()).collect() }
    }
}

/// Splits after every terminator token; a trailing fragment forms its own sentence.
pub fn split_sentences<'a>(tokens: &'a [String], config: &AnnotatorConfig) -> Vec<&'a [String]> {
    let mut out = Vec::new();
    let mut start = 0;
    for (i, token) in tokens.iter().enumerate() {
        if config.terminators.iter().any(|t| t == token) {
            out.push(&tokens[start..=i]);
            start = i + 1;
        }
    }
    if start < tokens.len() {
        out.push(&tokens[start..]);
    }
    out
}

pub fn annotate_abstract(raw: &RawAbstract, gazetteer: &Gazetteer, config: &AnnotatorConfig) -> Result<Document> {
    let wrap = |e: Error| Error::Document { id: raw.id.clone(), cause: Box::new(e) };
    let (tokens, anchors) = extract_anchors(&raw.body).map_err(wrap)?;
    let surfaces = resolve_anchor_types(&anchors, gazetteer);
    let mut sentences = Vec::new();
    for sentence in split_sentences(&tokens, config) {
        let labels = annotate_exact(sentence, &surfaces);
        debug_assert!(check_iob2(&labels).is_ok());
        sentences.push(LabeledSentence::new(sentence.to_vec(), labels).map_err(wrap)?);
    }
    Ok(Document::new(raw.id.clone(), sentences))
}

/// Annotates every abstract; documents come back in input order.
pub fn annotate_corpus(
    abstracts: &[RawAbstract],
    gazetteer: &Gazetteer,
    config: &AnnotatorConfig,
) -> Result<Vec<Document>> {
    abstracts.par_iter().map(|raw| annotate_abstract(raw, gazetteer, config)).collect()
}
