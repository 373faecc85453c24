//! Three-way parallel corpus assembly.
//!
//! Scenes are keyed by `(episode, scene)` metadata. A scene survives when
//! it exists in the source and every target language, no side is empty,
//! and the fraction of source utterances with a non-blank counterpart in
//! every target reaches the misalignment threshold.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{IngestError, ParallelDocument};
use crate::model::Document;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SceneKey {
    pub episode: String,
    pub scene: String,
}

impl SceneKey {
    pub fn of(doc: &Document) -> Result<Self, IngestError> {
        let get = |k: &str| {
            doc.metadata
                .get(k)
                .cloned()
                .ok_or_else(|| IngestError::SceneKeys(format!("document {} has no {k} metadata", doc.doc_id)))
        };
        Ok(Self {
            episode: get("episode")?,
            scene: get("scene")?,
        })
    }
}

impl std::fmt::Display for SceneKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.episode, self.scene)
    }
}

/// Utterance-level alignment of one scene for one target language.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UtteranceMapRecord {
    pub episode: String,
    pub scene: String,
    pub map: Vec<Option<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssembleConfig {
    /// Minimum fraction of source utterances aligned in every target.
    pub min_aligned_fraction: f64,
}

impl Default for AssembleConfig {
    fn default() -> Self {
        Self { min_aligned_fraction: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SceneOutcome {
    Kept,
    /// Missing from at least one target language.
    NotThreeWay,
    DroppedEmpty,
    DroppedMisaligned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneRecord {
    pub key: SceneKey,
    pub outcome: SceneOutcome,
    /// `None` when the scene never reached the alignment check.
    pub aligned_fraction: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LanguageCounts {
    /// Scenes present in both the source and this language.
    pub scenes: usize,
    pub episodes: usize,
}

/// Scene and episode counts per filtering stage.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FilterReport {
    pub threshold: f64,
    pub source_scenes: usize,
    pub source_episodes: usize,
    pub two_way: BTreeMap<String, LanguageCounts>,
    pub three_way: LanguageCounts,
    pub dropped_empty: usize,
    pub dropped_misaligned: usize,
    pub kept: LanguageCounts,
    pub scenes: Vec<SceneRecord>,
}

fn index_by_key(docs: Vec<Document>, what: &str) -> Result<BTreeMap<SceneKey, Document>, IngestError> {
    let mut out = BTreeMap::new();
    for d in docs {
        let key = SceneKey::of(&d)?;
        if out.contains_key(&key) {
            return Err(IngestError::SceneKeys(format!("{what}: scene {key} appears twice")));
        }
        out.insert(key, d);
    }
    Ok(out)
}

fn episodes<'a, I: IntoIterator<Item = &'a SceneKey>>(keys: I) -> usize {
    keys.into_iter().map(|k| &k.episode).collect::<BTreeSet<_>>().len()
}

fn is_empty_side(doc: &Document) -> bool {
    doc.utterances.iter().all(|u| u.is_blank())
}

pub fn assemble_three_way(
    source_docs: Vec<Document>,
    target_docs_by_lang: BTreeMap<String, Vec<Document>>,
    utterance_alignments: BTreeMap<String, Vec<UtteranceMapRecord>>,
    cfg: AssembleConfig,
) -> Result<(Vec<ParallelDocument>, FilterReport), IngestError> {
    let source = index_by_key(source_docs, "source")?;
    let mut targets: BTreeMap<String, BTreeMap<SceneKey, Document>> = BTreeMap::new();
    for (lang, docs) in target_docs_by_lang {
        targets.insert(lang.clone(), index_by_key(docs, &lang)?);
    }
    let mut maps: BTreeMap<String, BTreeMap<SceneKey, Vec<Option<usize>>>> = BTreeMap::new();
    for (lang, records) in utterance_alignments {
        if !targets.contains_key(&lang) {
            return Err(IngestError::SceneKeys(format!("utterance alignments for unknown language {lang}")));
        }
        let m = maps.entry(lang.clone()).or_default();
        for r in records {
            let key = SceneKey {
                episode: r.episode,
                scene: r.scene,
            };
            if m.insert(key.clone(), r.map).is_some() {
                return Err(IngestError::SceneKeys(format!("{lang}: utterance alignment for {key} given twice")));
            }
        }
    }

    let mut report = FilterReport {
        threshold: cfg.min_aligned_fraction,
        source_scenes: source.len(),
        source_episodes: episodes(source.keys()),
        ..Default::default()
    };
    for (lang, docs) in &targets {
        let shared: Vec<&SceneKey> = source.keys().filter(|k| docs.contains_key(*k)).collect();
        report.two_way.insert(
            lang.clone(),
            LanguageCounts {
                scenes: shared.len(),
                episodes: episodes(shared.iter().copied()),
            },
        );
    }

    let mut three_way_keys = Vec::new();
    let mut kept_keys = Vec::new();
    let mut out = Vec::new();
    for (key, src) in &source {
        let in_all = targets.values().all(|t| t.contains_key(key));
        if !in_all || targets.is_empty() {
            report.scenes.push(SceneRecord {
                key: key.clone(),
                outcome: SceneOutcome::NotThreeWay,
                aligned_fraction: None,
            });
            continue;
        }
        three_way_keys.push(key);

        if is_empty_side(src) || targets.values().any(|t| is_empty_side(&t[key])) {
            report.dropped_empty += 1;
            report.scenes.push(SceneRecord {
                key: key.clone(),
                outcome: SceneOutcome::DroppedEmpty,
                aligned_fraction: None,
            });
            continue;
        }

        let mut pd = ParallelDocument {
            source: src.clone(),
            targets: BTreeMap::new(),
            utterance_map: BTreeMap::new(),
        };
        for (lang, t) in &targets {
            let map = maps
                .get(lang)
                .and_then(|m| m.get(key))
                .ok_or_else(|| IngestError::SceneKeys(format!("{lang}: no utterance alignment for scene {key}")))?;
            pd.targets.insert(lang.clone(), t[key].clone());
            pd.utterance_map.insert(lang.clone(), map.clone());
        }
        pd.validate()?;

        let n = src.utterances.len();
        let aligned = (0..n)
            .filter(|&i| {
                pd.utterance_map.iter().all(|(lang, map)| {
                    map[i].is_some_and(|j| !pd.targets[lang].utterances[j].is_blank())
                })
            })
            .count();
        let fraction = aligned as f64 / n as f64;
        if fraction < cfg.min_aligned_fraction {
            report.dropped_misaligned += 1;
            report.scenes.push(SceneRecord {
                key: key.clone(),
                outcome: SceneOutcome::DroppedMisaligned,
                aligned_fraction: Some(fraction),
            });
            continue;
        }
        report.scenes.push(SceneRecord {
            key: key.clone(),
            outcome: SceneOutcome::Kept,
            aligned_fraction: Some(fraction),
        });
        kept_keys.push(key);
        out.push(pd);
    }
    report.three_way = LanguageCounts {
        scenes: three_way_keys.len(),
        episodes: episodes(three_way_keys.iter().copied()),
    };
    report.kept = LanguageCounts {
        scenes: kept_keys.len(),
        episodes: episodes(kept_keys.iter().copied()),
    };
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Utterance;

    fn scene(lang: &str, ep: &str, sc: usize, n: usize) -> Document {
        let mut d = Document::new(format!("{ep}_c{sc:02}.{lang}"), lang);
        d.utterances = (0..n).map(|i| Utterance::new("A", [format!("w{i}")])).collect();
        d.metadata.insert("episode".into(), ep.into());
        d.metadata.insert("scene".into(), sc.to_string());
        d
    }

    fn map(ep: &str, sc: usize, m: Vec<Option<usize>>) -> UtteranceMapRecord {
        UtteranceMapRecord {
            episode: ep.into(),
            scene: sc.to_string(),
            map: m,
        }
    }

    fn ident(n: usize) -> Vec<Option<usize>> {
        (0..n).map(Some).collect()
    }

    #[test]
    fn two_way_only_scene_excluded() {
        let src = vec![scene("en", "s01e01", 0, 3), scene("en", "s01e01", 1, 3)];
        let zh = vec![scene("zh", "s01e01", 0, 3), scene("zh", "s01e01", 1, 3)];
        let fa = vec![scene("fa", "s01e01", 0, 3)];
        let (kept, report) = assemble_three_way(
            src,
            BTreeMap::from([("zh".into(), zh), ("fa".into(), fa)]),
            BTreeMap::from([
                ("zh".into(), vec![map("s01e01", 0, ident(3)), map("s01e01", 1, ident(3))]),
                ("fa".into(), vec![map("s01e01", 0, ident(3))]),
            ]),
            AssembleConfig::default(),
        )
        .unwrap();
        assert_eq!(kept.len(), 1);
        assert_eq!(report.two_way["zh"].scenes, 2);
        assert_eq!(report.two_way["fa"].scenes, 1);
        assert_eq!(report.three_way.scenes, 1);
        assert_eq!(report.scenes[1].outcome, SceneOutcome::NotThreeWay);
    }

    #[test]
    fn unaligned_scene_dropped() {
        let (kept, report) = assemble_three_way(
            vec![scene("en", "e", 0, 12)],
            BTreeMap::from([("zh".into(), vec![scene("zh", "e", 0, 12)])]),
            BTreeMap::from([("zh".into(), vec![map("e", 0, vec![None; 12])])]),
            AssembleConfig::default(),
        )
        .unwrap();
        assert!(kept.is_empty());
        assert_eq!(report.dropped_misaligned, 1);
        assert_eq!(report.scenes[0].aligned_fraction, Some(0.0));
    }

    #[test]
    fn empty_side_dropped_before_alignment() {
        let mut zh = scene("zh", "e", 0, 2);
        zh.utterances = vec![Utterance::placeholder("A"), Utterance::placeholder("B")];
        let (_, report) = assemble_three_way(
            vec![scene("en", "e", 0, 2)],
            BTreeMap::from([("zh".into(), vec![zh])]),
            BTreeMap::new(),
            AssembleConfig::default(),
        )
        .unwrap();
        assert_eq!(report.dropped_empty, 1);
    }

    #[test]
    fn placeholder_counterparts_do_not_count_as_aligned() {
        let mut zh = scene("zh", "e", 0, 4);
        zh.utterances[1] = Utterance::placeholder("A");
        zh.utterances[2] = Utterance::placeholder("A");
        zh.utterances[3] = Utterance::placeholder("A");
        let (kept, report) = assemble_three_way(
            vec![scene("en", "e", 0, 4)],
            BTreeMap::from([("zh".into(), vec![zh])]),
            BTreeMap::from([("zh".into(), vec![map("e", 0, ident(4))])]),
            AssembleConfig::default(),
        )
        .unwrap();
        assert!(kept.is_empty());
        assert_eq!(report.scenes[0].aligned_fraction, Some(0.25));
    }

    #[test]
    fn inconsistent_keys_are_errors() {
        let dup = vec![scene("en", "e", 0, 2), scene("en", "e", 0, 2)];
        assert!(assemble_three_way(dup, BTreeMap::new(), BTreeMap::new(), AssembleConfig::default()).is_err());

        let mut nometa = scene("en", "e", 0, 2);
        nometa.metadata.clear();
        assert!(assemble_three_way(vec![nometa], BTreeMap::new(), BTreeMap::new(), AssembleConfig::default()).is_err());

        let missing_map = assemble_three_way(
            vec![scene("en", "e", 0, 2)],
            BTreeMap::from([("zh".into(), vec![scene("zh", "e", 0, 2)])]),
            BTreeMap::new(),
            AssembleConfig::default(),
        );
        assert!(matches!(missing_map, Err(IngestError::SceneKeys(_))));
    }
}
