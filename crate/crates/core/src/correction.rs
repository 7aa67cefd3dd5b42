//! Correction dataset construction and curriculum ordering.
//!
//! A correction pair couples a sentence's distant (noisy) labels with gold
//! labels obtained by matching a human-annotated entity inventory against
//! the same tokens. The curriculum ranks pairs by how much the two label
//! sequences already agree and cuts the ranking into three stages.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::annotate::{split_surface, SurfaceMap};
use crate::corpus::{check_token, Document};
use crate::error::{Error, Result};
use crate::label::{check_iob2, labels_from_spans, spans_from_labels, EntityType, Iob2Label};
use crate::metrics::{f1_score, safe_ratio};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrectionPair {
    tokens: Vec<String>,
    noisy: Vec<Iob2Label>,
    gold: Vec<Iob2Label>,
}

impl CorrectionPair {
    pub fn new(tokens: Vec<String>, noisy: Vec<Iob2Label>, gold: Vec<Iob2Label>) -> Result<Self> {
        if tokens.is_empty() || tokens.len() != noisy.len() || tokens.len() != gold.len() {
            return Err(Error::Shape(format!(
                "correction pair lengths differ: {} tokens, {} noisy, {} gold",
                tokens.len(),
                noisy.len(),
                gold.len()
            )));
        }
        check_iob2(&noisy)?;
        check_iob2(&gold)?;
        Ok(CorrectionPair { tokens, noisy, gold })
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn noisy(&self) -> &[Iob2Label] {
        &self.noisy
    }

    pub fn gold(&self) -> &[Iob2Label] {
        &self.gold
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Agreement between the noisy and gold sequences.
    pub fn f1(&self) -> f64 {
        sentence_f1(&self.noisy, &self.gold).expect("pair invariants hold")
    }
}

/// Gold entities per document, in file order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GoldEntityInventory {
    documents: BTreeMap<String, Vec<(Vec<String>, EntityType)>>,
}

impl GoldEntityInventory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, doc_id: &str, surface: Vec<String>, entity_type: EntityType) -> Result<()> {
        if surface.is_empty() {
            return Err(Error::Config(format!("empty gold surface in document {doc_id:?}")));
        }
        self.documents.entry(doc_id.to_string()).or_default().push((surface, entity_type));
        Ok(())
    }

    pub fn document_ids(&self) -> impl Iterator<Item = &str> {
        self.documents.keys().map(String::as_str)
    }

    pub fn entities(&self, doc_id: &str) -> Option<&[(Vec<String>, EntityType)]> {
        self.documents.get(doc_id).map(Vec::as_slice)
    }

    fn surface_map(&self, doc_id: &str) -> Option<SurfaceMap> {
        let entities = self.documents.get(doc_id)?;
        let mut map = SurfaceMap::new();
        for (surface, ty) in entities {
            map.insert(surface.clone(), *ty);
        }
        Some(map)
    }
}

/// Reads `id<TAB>surface<TAB>TYPE` lines.
pub fn read_gold_inventory(path: impl AsRef<Path>) -> Result<GoldEntityInventory> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut inventory = GoldEntityInventory::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let [id, surface, ty] = cols.as_slice() else {
            return Err(Error::parse(path, i + 1, "expected id<TAB>surface<TAB>TYPE"));
        };
        let ty: EntityType =
            ty.parse().map_err(|_| Error::parse(path, i + 1, format!("unknown entity type {ty:?}")))?;
        inventory
            .add(id, split_surface(surface), ty)
            .map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
    }
    Ok(inventory)
}

/// Pairs noisy sentences with gold labels from the inventory of the
/// document sharing their id.
///
/// Documents absent from the inventory are skipped; inventory ids absent
/// from the noisy corpus are an alignment error. Sentences on which no
/// gold entity matches are left out.
pub fn build_correction_dataset(noisy: &[Document], gold: &GoldEntityInventory) -> Result<Vec<CorrectionPair>> {
    let known: HashSet<&str> = noisy.iter().map(|d| d.id.as_str()).collect();
    if let Some(missing) = gold.document_ids().find(|id| !known.contains(id)) {
        return Err(Error::Alignment(format!("gold inventory references unknown document {missing:?}")));
    }
    let mut pairs = Vec::new();
    for doc in noisy {
        let Some(surfaces) = gold.surface_map(&doc.id) else { continue };
        for sentence in &doc.sentences {
            let spans = surfaces.match_spans(sentence.tokens());
            if spans.is_empty() {
                continue;
            }
            let gold_labels = labels_from_spans(sentence.len(), &spans)?;
            pairs.push(CorrectionPair::new(sentence.tokens().to_vec(), sentence.labels().to_vec(), gold_labels)?);
        }
    }
    Ok(pairs)
}

/// Span-level precision, recall and F1 of `predicted` against `reference`.
///
/// Two span-free sequences agree perfectly (1.0); if only one side has
/// spans the score is 0.
pub fn sentence_prf(predicted: &[Iob2Label], reference: &[Iob2Label]) -> Result<(f64, f64, f64)> {
    if predicted.len() != reference.len() {
        return Err(Error::Shape(format!(
            "label sequences differ in length: {} vs {}",
            predicted.len(),
            reference.len()
        )));
    }
    let pred = spans_from_labels(predicted)?;
    let gold = spans_from_labels(reference)?;
    if pred.is_empty() && gold.is_empty() {
        return Ok((1.0, 1.0, 1.0));
    }
    let gold_set: HashSet<_> = gold.iter().collect();
    let matched = pred.iter().filter(|s| gold_set.contains(s)).count();
    let p = safe_ratio(matched, pred.len());
    let r = safe_ratio(matched, gold.len());
    Ok((p, r, f1_score(p, r)))
}

pub fn sentence_f1(noisy: &[Iob2Label], gold: &[Iob2Label]) -> Result<f64> {
    sentence_prf(noisy, gold).map(|(_, _, f)| f)
}

/// Three curriculum stages, easiest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurriculumSplit {
    pub stages: [Vec<CorrectionPair>; 3],
    /// Per-pair F1, aligned with `stages`.
    pub scores: [Vec<f64>; 3],
}

impl CurriculumSplit {
    pub fn mean_scores(&self) -> [Option<f64>; 3] {
        self.scores.clone().map(|s| if s.is_empty() { None } else { Some(s.iter().sum::<f64>() / s.len() as f64) })
    }

    pub fn into_stages(self) -> Vec<Vec<CorrectionPair>> {
        self.stages.into()
    }
}

/// Stage sizes for `n` items: equal thirds, remainder to earlier stages.
pub fn stage_sizes(n: usize) -> [usize; 3] {
    let base = n / 3;
    let rem = n % 3;
    [base + usize::from(rem > 0), base + usize::from(rem > 1), base]
}

/// Stable descending ranking by sentence F1; returns input indices with scores.
pub fn curriculum_order(pairs: &[CorrectionPair]) -> Vec<(usize, f64)> {
    let mut ranked: Vec<(usize, f64)> = pairs.iter().map(CorrectionPair::f1).enumerate().collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    ranked
}

pub fn split_curriculum(pairs: Vec<CorrectionPair>) -> Result<CurriculumSplit> {
    if pairs.is_empty() {
        return Err(Error::Undefined("curriculum split"));
    }
    let ranked = curriculum_order(&pairs);
    let mut slots: Vec<Option<CorrectionPair>> = pairs.into_iter().map(Some).collect();
    let sizes = stage_sizes(slots.len());
    let mut stages: [Vec<CorrectionPair>; 3] = Default::default();
    let mut scores: [Vec<f64>; 3] = Default::default();
    let mut ranked = ranked.into_iter();
    for (stage, size) in sizes.into_iter().enumerate() {
        for (index, score) in ranked.by_ref().take(size) {
            stages[stage].push(slots[index].take().expect("each index ranked once"));
            scores[stage].push(score);
        }
    }
    Ok(CurriculumSplit { stages, scores })
}

pub fn format_correction_pairs(pairs: &[CorrectionPair]) -> Result<String> {
    let mut out = String::new();
    for pair in pairs {
        for ((token, noisy), gold) in pair.tokens.iter().zip(&pair.noisy).zip(&pair.gold) {
            check_token(token)?;
            let _ = writeln!(out, "{token}\t{noisy}\t{gold}");
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn write_correction_pairs(pairs: &[CorrectionPair], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = format_correction_pairs(pairs)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Reads the three-column `token<TAB>noisy<TAB>gold` format.
pub fn read_correction_pairs(path: impl AsRef<Path>) -> Result<Vec<CorrectionPair>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut pairs = Vec::new();
    let (mut tokens, mut noisy, mut gold) = (Vec::new(), Vec::new(), Vec::new());
    let mut start = 0;
    let mut last = 0;
    let mut lines: Vec<&str> = text.split('\n').collect();
    if text.ends_with('\n') {
        lines.pop();
    }
    for (i, line) in lines.into_iter().enumerate() {
        let lineno = i + 1;
        last = lineno;
        if line.is_empty() {
            if !tokens.is_empty() {
                let pair = CorrectionPair::new(
                    std::mem::take(&mut tokens),
                    std::mem::take(&mut noisy),
                    std::mem::take(&mut gold),
                )
                .map_err(|e| Error::parse(path, start, e.to_string()))?;
                pairs.push(pair);
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let [token, n, g] = cols.as_slice() else {
            return Err(Error::parse(path, lineno, "ragged line: expected token<TAB>noisy<TAB>gold"));
        };
        if token.is_empty() {
            return Err(Error::parse(path, lineno, "empty token"));
        }
        let parse = |s: &str| s.parse::<Iob2Label>().map_err(|_| Error::parse(path, lineno, format!("invalid label {s:?}")));
        if tokens.is_empty() {
            start = lineno;
        }
        tokens.push(token.to_string());
        noisy.push(parse(n)?);
        gold.push(parse(g)?);
    }
    if !tokens.is_empty() {
        return Err(Error::parse(path, last, "file must end with a blank line"));
    }
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::LabeledSentence;
    use crate::label::EntityType::*;
    use crate::label::Iob2Label::{B, I, O};

    fn toks(s: &str) -> Vec<String> {
        split_surface(s)
    }

    fn doc(id: &str, sentences: &[(&str, &[Iob2Label])]) -> Document {
        Document::new(
            id,
            sentences.iter().map(|(t, l)| LabeledSentence::new(toks(t), l.to_vec()).unwrap()).collect(),
        )
    }

    fn pair(noisy: &[Iob2Label], gold: &[Iob2Label]) -> CorrectionPair {
        let tokens = (0..noisy.len()).map(|i| format!("t{i}")).collect();
        CorrectionPair::new(tokens, noisy.to_vec(), gold.to_vec()).unwrap()
    }

    #[test]
    fn builds_pair_from_inventory() {
        let noisy = vec![doc("d", &[("UK PM spoke", &[O, O, O])])];
        let mut inv = GoldEntityInventory::new();
        inv.add("d", toks("UK"), Loc).unwrap();
        let pairs = build_correction_dataset(&noisy, &inv).unwrap();
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].gold(), &[B(Loc), O, O]);
        assert_eq!(pairs[0].noisy(), &[O, O, O]);
    }

    #[test]
    fn sentences_without_hits_are_excluded() {
        let noisy = vec![doc("d", &[("nothing here", &[O, O]), ("UK", &[O])])];
        let mut inv = GoldEntityInventory::new();
        inv.add("d", toks("UK"), Loc).unwrap();
        let pairs = build_correction_dataset(&noisy, &inv).unwrap();
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].tokens(), toks("UK").as_slice());
    }

    #[test]
    fn longest_gold_entity_wins() {
        let noisy = vec![doc("d", &[("New York", &[O, O])])];
        let mut inv = GoldEntityInventory::new();
        inv.add("d", toks("York"), Org).unwrap();
        inv.add("d", toks("New York"), Loc).unwrap();
        let pairs = build_correction_dataset(&noisy, &inv).unwrap();
        assert_eq!(pairs[0].gold(), &[B(Loc), I(Loc)]);
    }

    #[test]
    fn inventory_is_per_document() {
        let noisy = vec![doc("a", &[("Paris", &[O])]), doc("b", &[("Paris", &[O])])];
        let mut inv = GoldEntityInventory::new();
        inv.add("b", toks("Paris"), Loc).unwrap();
        let pairs = build_correction_dataset(&noisy, &inv).unwrap();
        assert_eq!(pairs.len(), 1);
    }

    #[test]
    fn unknown_inventory_id_is_alignment_error() {
        let noisy = vec![doc("a", &[("Paris", &[O])])];
        let mut inv = GoldEntityInventory::new();
        inv.add("zzz", toks("Paris"), Loc).unwrap();
        assert!(matches!(build_correction_dataset(&noisy, &inv), Err(Error::Alignment(_))));
    }

    #[test]
    fn sentence_f1_examples() {
        assert_eq!(sentence_f1(&[B(Per), O], &[B(Per), O]).unwrap(), 1.0);
        assert_eq!(sentence_f1(&[O, O], &[B(Per), O]).unwrap(), 0.0);
        let (p, r, f) = sentence_prf(&[B(Per), O, B(Loc)], &[B(Per), O, O]).unwrap();
        assert_eq!((p, r), (0.5, 1.0));
        assert!((f - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(sentence_f1(&[O], &[O]).unwrap(), 1.0);
        assert!(matches!(sentence_f1(&[O], &[O, O]), Err(Error::Shape(_))));
    }

    #[test]
    fn stage_sizes_put_remainder_first() {
        assert_eq!(stage_sizes(3), [1, 1, 1]);
        assert_eq!(stage_sizes(4), [2, 1, 1]);
        assert_eq!(stage_sizes(5), [2, 2, 1]);
        assert_eq!(stage_sizes(1), [1, 0, 0]);
        assert_eq!(stage_sizes(50), [17, 17, 16]);
    }

    #[test]
    fn split_three_pairs() {
        let p1 = pair(&[B(Per)], &[B(Per)]);
        let p05 = pair(&[B(Per), O, B(Loc)], &[B(Per), O, O]); // 2/3
        let p0 = pair(&[O], &[B(Org)]);
        let split = split_curriculum(vec![p0.clone(), p1.clone(), p05.clone()]).unwrap();
        assert_eq!(split.stages, [vec![p1], vec![p05], vec![p0]]);
    }

    #[test]
    fn split_six_pairs_in_twos() {
        // f = 1, 1, .8, .5, .2, 0 built from span counts
        let mk = |matched: usize, extra_pred: usize, extra_gold: usize| {
            let n = matched + extra_pred + extra_gold;
            let mut noisy = vec![O; n];
            let mut gold = vec![O; n];
            for i in 0..matched {
                noisy[i] = B(Per);
                gold[i] = B(Per);
            }
            for i in matched..matched + extra_pred {
                noisy[i] = B(Loc);
            }
            for i in matched + extra_pred..n {
                gold[i] = B(Org);
            }
            pair(&noisy, &gold)
        };
        let pairs = vec![mk(1, 0, 0), mk(2, 0, 0), mk(2, 1, 0), mk(1, 1, 1), mk(1, 4, 4), mk(0, 1, 0)];
        let fs: Vec<f64> = pairs.iter().map(CorrectionPair::f1).collect();
        let expected = [1.0, 1.0, 0.8, 0.5, 0.2, 0.0];
        for (f, e) in fs.iter().zip(expected) {
            assert!((f - e).abs() < 1e-12, "{f} vs {e}");
        }
        let split = split_curriculum(pairs.clone()).unwrap();
        assert_eq!(split.stages[0], pairs[0..2]);
        assert_eq!(split.stages[1], pairs[2..4]);
        assert_eq!(split.stages[2], pairs[4..6]);
    }

    #[test]
    fn ties_keep_input_order() {
        let pairs: Vec<_> = (0..7)
            .map(|i| {
                let mut noisy = vec![O; 7];
                noisy[i] = B(Misc);
                CorrectionPair::new(toks("a b c d e f g"), noisy.clone(), noisy).unwrap()
            })
            .collect();
        let split = split_curriculum(pairs.clone()).unwrap();
        let flat: Vec<_> = split.stages.concat();
        assert_eq!(flat, pairs);
        assert!(split_curriculum(vec![]).is_err());
    }

    #[test]
    fn three_column_file_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.tsv");
        let pairs = vec![pair(&[B(Per), O], &[B(Per), B(Loc)]), pair(&[O], &[B(Org)])];
        write_correction_pairs(&pairs, &path).unwrap();
        assert_eq!(read_correction_pairs(&path).unwrap(), pairs);
        fs::write(&path, "a\tO\n\n").unwrap();
        assert!(matches!(read_correction_pairs(&path), Err(Error::Parse { line: 1, .. })));
        fs::write(&path, "a\tO\tO\n").unwrap();
        assert!(read_correction_pairs(&path).is_err());
    }

    #[test]
    fn reads_gold_inventory() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gold.tsv");
        fs::write(&path, "d1\tNew York\tLOC\nd1\tBob\tPER\n\nd2\tACME\tORG\n").unwrap();
        let inv = read_gold_inventory(&path).unwrap();
        assert_eq!(inv.document_ids().collect::<Vec<_>>(), vec!["d1", "d2"]);
        assert_eq!(inv.entities("d1").unwrap()[0], (toks("New York"), Loc));
        fs::write(&path, "d1\tBob\tPERSON\n").unwrap();
        assert!(matches!(read_gold_inventory(&path), Err(Error::Parse { line: 1, .. })));
    }
}
