use std::collections::{BTreeMap, BTreeSet};

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::Document;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NameError {
    #[error("scene {scene}: speaker {speaker} has no group")]
    UnmappedSpeaker { scene: String, speaker: String },
    #[error("group {0} has no name pool")]
    MissingPool(String),
    #[error("scene {scene}: pool for group {group} exhausted")]
    PoolExhausted { scene: String, group: String },
    #[error("scene {0} is not covered by the plan")]
    MissingScene(String),
    #[error("mapping line {line}: {message}")]
    Mapping { line: usize, message: String },
}

/// Per-scene speaker renaming, drawn from group pools with a fixed seed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NameReplacementPlan {
    pub seed: u64,
    pub pools: BTreeMap<String, Vec<String>>,
    pub speaker_groups: BTreeMap<String, String>,
    /// Scene id → original speaker → replacement.
    pub scenes: BTreeMap<String, BTreeMap<String, String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NameMapping {
    pub scene: String,
    pub original: String,
    pub replacement: String,
}

/// Names from a plain-text list, one per line; blanks and repeats dropped.
pub fn parse_name_pool(text: &str) -> Vec<String> {
    let mut seen = BTreeSet::new();
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && seen.insert(*l))
        .map(str::to_owned)
        .collect()
}

fn first_token(name: &str) -> &str {
    name.split_whitespace().next().unwrap_or(name)
}

/// Samples a replacement for every speaker of every scene.
///
/// Candidates that share a token with the scene's text or speaker labels,
/// or a first token with a name already chosen in the scene, are skipped so
/// the replacement can be undone exactly.
pub fn plan_replacements(
    corpus: &[Document],
    pools: &BTreeMap<String, Vec<String>>,
    speaker_groups: &BTreeMap<String, String>,
    seed: u64,
) -> Result<NameReplacementPlan, NameError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scenes = BTreeMap::new();
    for doc in corpus {
        let speakers = doc.speakers();
        let mut taken: BTreeSet<&str> = doc.utterances.iter().flat_map(|u| u.tokens.iter().map(String::as_str)).collect();
        taken.extend(speakers.iter().flat_map(|s| s.split_whitespace()));
        let mut firsts: BTreeSet<String> = BTreeSet::new();
        let mut chosen = BTreeMap::new();
        for speaker in &speakers {
            let group = speaker_groups.get(*speaker).ok_or_else(|| NameError::UnmappedSpeaker {
                scene: doc.doc_id.clone(),
                speaker: speaker.to_string(),
            })?;
            let pool = pools.get(group).ok_or_else(|| NameError::MissingPool(group.clone()))?;
            let candidates: Vec<&String> = pool
                .iter()
                .filter(|n| !n.split_whitespace().any(|t| taken.contains(t)) && !firsts.contains(first_token(n)))
                .collect();
            let pick = candidates.choose(&mut rng).ok_or_else(|| NameError::PoolExhausted {
                scene: doc.doc_id.clone(),
                group: group.clone(),
            })?;
            firsts.insert(first_token(pick).to_owned());
            chosen.insert(speaker.to_string(), (*pick).clone());
        }
        scenes.insert(doc.doc_id.clone(), chosen);
    }
    Ok(NameReplacementPlan {
        seed,
        pools: pools.clone(),
        speaker_groups: speaker_groups.clone(),
        scenes,
    })
}

/// In-text substitutions: first token to first token, skipping first tokens
/// shared by several names in the scene.
fn token_map<'a>(pairs: impl Iterator<Item = (&'a str, &'a str)> + Clone) -> BTreeMap<&'a str, &'a str> {
    let mut count: BTreeMap<&str, usize> = BTreeMap::new();
    for (from, _) in pairs.clone() {
        *count.entry(first_token(from)).or_default() += 1;
    }
    pairs
        .filter(|(from, _)| count[first_token(from)] == 1)
        .map(|(from, to)| (first_token(from), first_token(to)))
        .collect()
}

fn rename(doc: &Document, labels: &BTreeMap<&str, &str>, tokens: &BTreeMap<&str, &str>) -> Document {
    let mut out = doc.clone();
    for u in &mut out.utterances {
        if let Some(to) = labels.get(u.speaker.as_str()) {
            u.speaker = (*to).to_owned();
        }
        for t in &mut u.tokens {
            if let Some(to) = tokens.get(t.as_str()) {
                *t = (*to).to_owned();
            }
        }
    }
    out
}

/// Applies `plan` to speaker labels and to first-name tokens in the text.
pub fn replace_names(corpus: &[Document], plan: &NameReplacementPlan) -> Result<(Vec<Document>, Vec<NameMapping>), NameError> {
    let mut docs = Vec::with_capacity(corpus.len());
    let mut mapping = Vec::new();
    for doc in corpus {
        let scene = plan.scenes.get(&doc.doc_id).ok_or_else(|| NameError::MissingScene(doc.doc_id.clone()))?;
        let pairs = scene.iter().map(|(a, b)| (a.as_str(), b.as_str()));
        let labels: BTreeMap<&str, &str> = pairs.clone().collect();
        docs.push(rename(doc, &labels, &token_map(pairs)));
        mapping.extend(scene.iter().map(|(o, r)| NameMapping {
            scene: doc.doc_id.clone(),
            original: o.clone(),
            replacement: r.clone(),
        }));
    }
    Ok((docs, mapping))
}

/// Undoes [`replace_names`] given its mapping.
pub fn invert_names(corpus: &[Document], mapping: &[NameMapping]) -> Vec<Document> {
    let mut by_scene: BTreeMap<&str, Vec<(&str, &str)>> = BTreeMap::new();
    for m in mapping {
        by_scene.entry(&m.scene).or_default().push((&m.original, &m.replacement));
    }
    corpus
        .iter()
        .map(|doc| {
            let Some(pairs) = by_scene.get(doc.doc_id.as_str()) else { return doc.clone() };
            let labels: BTreeMap<&str, &str> = pairs.iter().map(|&(o, r)| (r, o)).collect();
            let tokens: BTreeMap<&str, &str> =
                token_map(pairs.iter().copied()).into_iter().map(|(o, r)| (r, o)).collect();
            rename(doc, &labels, &tokens)
        })
        .collect()
}

pub fn mapping_to_tsv(mapping: &[NameMapping]) -> String {
    let mut out = String::from("scene\toriginal\treplacement\n");
    for m in mapping {
        out.push_str(&format!("{}\t{}\t{}\n", m.scene, m.original, m.replacement));
    }
    out
}

pub fn mapping_from_tsv(text: &str) -> Result<Vec<NameMapping>, NameError> {
    text.lines()
        .enumerate()
        .skip(1)
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let cols: Vec<&str> = l.split('\t').collect();
            match cols[..] {
                [scene, original, replacement] => Ok(NameMapping {
                    scene: scene.into(),
                    original: original.into(),
                    replacement: replacement.into(),
                }),
                _ => Err(NameError::Mapping { line: i + 1, message: format!("expected 3 columns, found {}", cols.len()) }),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Utterance;

    fn scene(id: &str) -> Document {
        let mut d = Document::new(id, "en");
        d.utterances = vec![
            Utterance::new("Penny", ["Hi", "Leonard"]),
            Utterance::new("Leonard Hofstadter", ["Penny", "!"]),
            Utterance::new("", ["(", "door", "closes", ")"]),
        ];
        d
    }

    fn setup() -> (BTreeMap<String, Vec<String>>, BTreeMap<String, String>) {
        let pools = BTreeMap::from([
            ("f".to_string(), vec!["Alice".to_string(), "Beth".to_string(), "Carla".to_string()]),
            ("m".to_string(), vec!["Dan Ross".to_string(), "Eli".to_string()]),
        ]);
        let groups = BTreeMap::from([("Penny".to_string(), "f".to_string()), ("Leonard Hofstadter".to_string(), "m".to_string())]);
        (pools, groups)
    }

    #[test]
    fn label_and_text_replaced_consistently() {
        let (pools, groups) = setup();
        let corpus = vec![scene("s1"), scene("s2")];
        let plan = plan_replacements(&corpus, &pools, &groups, 7).unwrap();
        let (out, mapping) = replace_names(&corpus, &plan).unwrap();
        let penny = &plan.scenes["s1"]["Penny"];
        assert_eq!(&out[0].utterances[0].speaker, penny);
        assert_eq!(&out[0].utterances[1].tokens[0], penny);
        let leo = &plan.scenes["s1"]["Leonard Hofstadter"];
        assert_eq!(out[0].utterances[0].tokens[1], first_token(leo));
        assert_eq!(mapping.len(), 4);
        assert_eq!(invert_names(&out, &mapping), corpus);
        assert_eq!(plan, plan_replacements(&corpus, &pools, &groups, 7).unwrap());
    }

    #[test]
    fn errors() {
        let (mut pools, mut groups) = setup();
        let corpus = vec![scene("s1")];
        pools.insert("f".into(), vec!["Zoe".into()]);
        let mut two_women = groups.clone();
        two_women.insert("Leonard Hofstadter".into(), "f".into());
        assert!(matches!(plan_replacements(&corpus, &pools, &two_women, 1), Err(NameError::PoolExhausted { .. })));
        groups.insert("Penny".into(), "x".into());
        assert_eq!(plan_replacements(&corpus, &pools, &groups, 1), Err(NameError::MissingPool("x".into())));
        groups.remove("Penny");
        assert!(matches!(plan_replacements(&corpus, &pools, &groups, 1), Err(NameError::UnmappedSpeaker { .. })));
    }

    #[test]
    fn tsv_roundtrip() {
        let m = vec![NameMapping { scene: "s".into(), original: "Penny".into(), replacement: "Alice".into() }];
        assert_eq!(mapping_from_tsv(&mapping_to_tsv(&m)).unwrap(), m);
        assert!(mapping_from_tsv("h\nonly\tone\n").is_err());
        assert_eq!(parse_name_pool("Amy\n\n Bob \nAmy\n"), vec!["Amy", "Bob"]);
    }
}
