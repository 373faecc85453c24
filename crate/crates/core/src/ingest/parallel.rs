use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::IngestError;
use crate::model::Document;

/// A source scene with its target-language counterparts.
///
/// `utterance_map[lang][i]` is the target utterance aligned to source
/// utterance `i`, or `None` when it has no counterpart. Alignment is 1:0 or
/// 1:1; many-to-one merges must be resolved upstream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParallelDocument {
    pub source: Document,
    pub targets: BTreeMap<String, Document>,
    pub utterance_map: BTreeMap<String, Vec<Option<usize>>>,
}

impl ParallelDocument {
    pub fn target(&self, lang: &str) -> Result<(&Document, &[Option<usize>]), IngestError> {
        let doc = self.targets.get(lang).ok_or_else(|| self.err(format!("no target for language {lang}")))?;
        let map = self
            .utterance_map
            .get(lang)
            .ok_or_else(|| self.err(format!("no utterance map for language {lang}")))?;
        Ok((doc, map))
    }

    /// `(source_utt, target_utt)` pairs with a counterpart, in source order.
    pub fn mapped_pairs(&self, lang: &str) -> Result<Vec<(usize, usize)>, IngestError> {
        let (_, map) = self.target(lang)?;
        Ok(map
            .iter()
            .enumerate()
            .filter_map(|(s, t)| t.map(|t| (s, t)))
            .collect())
    }

    /// Checks map lengths, bounds and injectivity for every language.
    pub fn validate(&self) -> Result<(), IngestError> {
        for (lang, map) in &self.utterance_map {
            let target = self
                .targets
                .get(lang)
                .ok_or_else(|| self.err(format!("utterance map for {lang} without target document")))?;
            if map.len() != self.source.utterances.len() {
                return Err(self.err(format!(
                    "{lang} utterance map has {} entries for {} source utterances",
                    map.len(),
                    self.source.utterances.len()
                )));
            }
            let mut seen = BTreeSet::new();
            for (s, t) in map.iter().enumerate() {
                let Some(t) = *t else { continue };
                if t >= target.utterances.len() {
                    return Err(self.err(format!(
                        "{lang}: source utterance {s} maps to {t}, target has {} utterances",
                        target.utterances.len()
                    )));
                }
                if !seen.insert(t) {
                    return Err(self.err(format!("{lang}: target utterance {t} mapped twice")));
                }
            }
        }
        for lang in self.targets.keys() {
            if !self.utterance_map.contains_key(lang) {
                return Err(self.err(format!("target {lang} has no utterance map")));
            }
        }
        Ok(())
    }

    fn err(&self, message: String) -> IngestError {
        IngestError::Parallel {
            doc_id: self.source.doc_id.clone(),
            message,
        }
    }
}

/// Word alignment for one aligned utterance pair.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct UtteranceAlignment {
    pub source_utt: usize,
    pub target_utt: usize,
    /// `(source_token, target_token)`; duplicates collapse.
    pub links: BTreeSet<(usize, usize)>,
}

/// Word alignments for a scene, keyed by source utterance.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AlignmentSet {
    pairs: BTreeMap<usize, UtteranceAlignment>,
}

impl AlignmentSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, a: UtteranceAlignment) {
        self.pairs.insert(a.source_utt, a);
    }

    pub fn get(&self, source_utt: usize) -> Option<&UtteranceAlignment> {
        self.pairs.get(&source_utt)
    }

    pub fn iter(&self) -> impl Iterator<Item = &UtteranceAlignment> {
        self.pairs.values()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Identity links `(i, i)` for every mapped pair, up to the shorter side.
    pub fn identity(parallel: &ParallelDocument, lang: &str) -> Result<Self, IngestError> {
        let (target, _) = parallel.target(lang)?;
        let mut set = Self::new();
        for (s, t) in parallel.mapped_pairs(lang)? {
            let n = parallel.source.utterances[s].tokens.len().min(target.utterances[t].tokens.len());
            set.insert(UtteranceAlignment {
                source_utt: s,
                target_utt: t,
                links: (0..n).map(|i| (i, i)).collect(),
            });
        }
        Ok(set)
    }
}

impl FromIterator<UtteranceAlignment> for AlignmentSet {
    fn from_iter<I: IntoIterator<Item = UtteranceAlignment>>(iter: I) -> Self {
        let mut s = Self::new();
        for a in iter {
            s.insert(a);
        }
        s
    }
}
