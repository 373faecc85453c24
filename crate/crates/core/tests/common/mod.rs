//! Random fixtures shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use mmc_core::ingest::{AlignmentSet, ParallelDocument, UtteranceAlignment};
use mmc_core::merge::{AnnotationTriplet, Answer};
use mmc_core::model::{Anchor, Clustering, Document, Mention, MentionFlag, Utterance};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

pub const SPEAKERS: [&str; 5] = ["Ross", "Rachel", "Monica", "Chandler", "Joey"];

/// Clustering of `0..n` with at least one cluster of two or more.
pub fn random_clustering(rng: &mut impl Rng, max_mentions: usize) -> Clustering<u32> {
    let n = rng.random_range(2..=max_mentions.max(2));
    loop {
        let k = rng.random_range(1..=n);
        let mut clusters: Vec<Vec<u32>> = vec![Vec::new(); k];
        for m in 0..n as u32 {
            clusters[rng.random_range(0..k)].push(m);
        }
        clusters.retain(|c| !c.is_empty());
        if clusters.iter().any(|c| c.len() >= 2) {
            return Clustering::new(clusters).unwrap();
        }
    }
}

/// Utterances with random speakers and 1..=max_tokens tokens.
pub fn random_utterances(rng: &mut impl Rng, n: usize, max_tokens: usize) -> Vec<Utterance> {
    (0..n)
        .map(|u| {
            let len = rng.random_range(1..=max_tokens);
            let speaker = *SPEAKERS.choose(rng).unwrap();
            Utterance::new(speaker, (0..len).map(|t| format!("w{u}_{t}")))
        })
        .collect()
}

fn crosses(a: (usize, usize), b: (usize, usize)) -> bool {
    (a.0 < b.0 && b.0 < a.1 && a.1 < b.1) || (b.0 < a.0 && a.0 < b.1 && b.1 < a.1)
}

pub struct DocShape {
    pub utterances: usize,
    pub max_tokens: usize,
    pub mentions: usize,
    /// Reject spans crossing an existing span of the same utterance.
    pub laminar: bool,
    pub speaker_mentions: bool,
    pub flags: bool,
}

impl Default for DocShape {
    fn default() -> Self {
        Self { utterances: 5, max_tokens: 8, mentions: 12, laminar: false, speaker_mentions: true, flags: true }
    }
}

/// A valid document with random mentions and backward antecedent links.
pub fn random_document(rng: &mut impl Rng, id: &str, shape: &DocShape) -> Document {
    let mut doc = Document::new(id, "en");
    let n_utt = rng.random_range(1..=shape.utterances);
    doc.utterances = random_utterances(rng, n_utt, shape.max_tokens);

    let mut anchors: BTreeSet<Anchor> = BTreeSet::new();
    for _ in 0..shape.mentions * 3 {
        if anchors.len() >= shape.mentions {
            break;
        }
        let u = rng.random_range(0..n_utt);
        if shape.speaker_mentions && rng.random_bool(0.15) {
            anchors.insert(Anchor::speaker(u));
            continue;
        }
        let len = doc.utterances[u].tokens.len();
        let s = rng.random_range(0..len);
        let e = rng.random_range(s + 1..=len.min(s + 4));
        let ok = !shape.laminar
            || anchors.iter().all(|a| a.utt() != u || a.range().is_none_or(|r| !crosses(r, (s, e))));
        if ok {
            anchors.insert(Anchor::span(u, s, e));
        }
    }

    let ordered: Vec<Anchor> = anchors.into_iter().collect();
    for (i, anchor) in ordered.iter().enumerate() {
        let mut m = Mention { id: format!("m{i}").into(), anchor: *anchor, antecedents: Vec::new(), flags: BTreeSet::new() };
        let roll: f64 = rng.random();
        if shape.flags && roll < 0.05 {
            m.flags.insert(MentionFlag::NotMention);
        } else if i > 0 && roll < 0.7 {
            let j = rng.random_range(0..i);
            m.antecedents.push(format!("m{j}").into());
            if shape.flags && i > 1 && rng.random_bool(0.1) {
                let k = rng.random_range(0..i);
                if k != j {
                    m.antecedents.push(format!("m{k}").into());
                    m.flags.insert(MentionFlag::Plural);
                }
            }
        } else if shape.flags && rng.random_bool(0.5) {
            m.flags.insert(MentionFlag::NoAntecedent);
        }
        doc.mentions.push(m);
    }
    doc
}

/// Target side with the same utterances and an identity utterance map.
pub fn identity_parallel(source: Document) -> ParallelDocument {
    let mut target = Document::new(format!("{}.zh", source.doc_id), "zh");
    target.utterances = source.utterances.clone();
    target.metadata = source.metadata.clone();
    let map = (0..source.utterances.len()).map(Some).collect();
    ParallelDocument {
        source,
        targets: BTreeMap::from([("zh".to_string(), target)]),
        utterance_map: BTreeMap::from([("zh".to_string(), map)]),
    }
}

/// Random target side: some utterances unmapped or blank, the rest with
/// random lengths and shuffled order.
pub fn random_parallel(rng: &mut impl Rng, source: Document) -> ParallelDocument {
    let n = source.utterances.len();
    let mut slots: Vec<usize> = (0..n).collect();
    slots.shuffle(rng);
    let mut target_utts: Vec<Utterance> = Vec::with_capacity(n);
    let mut map = vec![None; n];
    for (t, &s) in slots.iter().enumerate() {
        let speaker = source.utterances[s].speaker.clone();
        let roll: f64 = rng.random();
        if roll < 0.1 {
            target_utts.push(Utterance::placeholder(speaker));
            map[s] = Some(t);
        } else if roll < 0.2 {
            target_utts.push(Utterance::new(speaker, ["extra"]));
        } else {
            let len = rng.random_range(1..=10);
            target_utts.push(Utterance::new(speaker, (0..len).map(|i| format!("t{t}_{i}"))));
            map[s] = Some(t);
        }
    }
    let mut target = Document::new(format!("{}.zh", source.doc_id), "zh");
    target.utterances = target_utts;
    ParallelDocument {
        source,
        targets: BTreeMap::from([("zh".to_string(), target)]),
        utterance_map: BTreeMap::from([("zh".to_string(), map)]),
    }
}

/// Random links per mapped pair, with crossings and many-to-one links.
pub fn random_alignments(rng: &mut impl Rng, p: &ParallelDocument) -> AlignmentSet {
    let (target, _) = p.target("zh").unwrap();
    p.mapped_pairs("zh")
        .unwrap()
        .into_iter()
        .map(|(s, t)| {
            let sl = p.source.utterances[s].tokens.len();
            let tl = target.utterances[t].tokens.len();
            let mut links = BTreeSet::new();
            if tl > 0 {
                for i in 0..sl {
                    for _ in 0..rng.random_range(0..=2) {
                        links.insert((i, rng.random_range(0..tl)));
                    }
                }
            }
            UtteranceAlignment { source_utt: s, target_utt: t, links }
        })
        .collect()
}

/// Triplets over `n` queries in document order with partial agreement.
pub fn random_triplets(rng: &mut impl Rng, n: usize) -> Vec<AnnotationTriplet> {
    let answer = |rng: &mut dyn rand::RngCore, i: usize| -> Answer {
        let roll = rng.random_range(0..100);
        match roll {
            0..10 => Answer::NotMention,
            10..25 => Answer::NoAntecedent,
            _ if i == 0 => Answer::NoAntecedent,
            25..35 => Answer::new_span(Anchor::span(i, 0, 1)),
            _ => Answer::mention(format!("q{}", rng.random_range(0..i))),
        }
    };
    (0..n)
        .map(|i| {
            let a1 = answer(rng, i);
            let a2 = if rng.random_bool(0.5) { a1.clone() } else { answer(rng, i) };
            AnnotationTriplet::new(format!("q{i}"), Anchor::span(i, 1, 2), a1, a2)
        })
        .collect()
}
