use std::collections::BTreeMap;

use serde::Serialize;

use super::{Correction, CorrectionAction, CorrectionRecord, ProjectionResult, ProjectionStats};
use crate::model::MentionId;
use crate::table::{percent, Table};

/// Distinct corrected mentions, each counted under its final action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct CorrectionCounts {
    pub additions: usize,
    pub deletions: usize,
    pub modifications: usize,
}

impl CorrectionCounts {
    pub fn total(&self) -> usize {
        self.additions + self.deletions + self.modifications
    }

    fn add(&mut self, o: &Self) {
        self.additions += o.additions;
        self.deletions += o.deletions;
        self.modifications += o.modifications;
    }

    fn of(log: &[&Correction]) -> Self {
        let mut order: Vec<usize> = (0..log.len()).collect();
        order.sort_by_key(|&i| (log[i].timestamp, i));
        let mut last: BTreeMap<&MentionId, CorrectionAction> = BTreeMap::new();
        for i in order {
            last.insert(&log[i].mention, log[i].normalized().action);
        }
        let mut c = Self::default();
        for a in last.values() {
            match a {
                CorrectionAction::Addition => c.additions += 1,
                CorrectionAction::Deletion => c.deletions += 1,
                CorrectionAction::Modification => c.modifications += 1,
            }
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsRow {
    pub group: String,
    pub scenes: usize,
    pub stats: ProjectionStats,
    pub corrections: CorrectionCounts,
}

impl StatsRow {
    fn new(group: &str) -> Self {
        Self {
            group: group.to_owned(),
            scenes: 0,
            stats: ProjectionStats::default(),
            corrections: CorrectionCounts::default(),
        }
    }

    fn absorb(&mut self, o: &StatsRow) {
        self.scenes += o.scenes;
        self.stats.add(&o.stats);
        self.corrections.add(&o.corrections);
    }

    /// Null projections over source mentions, in percent.
    pub fn drop_rate(&self) -> String {
        percent(self.stats.null_projections, self.stats.source_mentions)
    }

    /// Corrected mentions over source mentions, in percent.
    pub fn corrected_rate(&self) -> String {
        percent(self.corrections.total(), self.stats.source_mentions)
    }
}

/// Per-split projection statistics with a total row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsReport {
    pub rows: Vec<StatsRow>,
    pub total: StatsRow,
}

impl StatsReport {
    pub fn table(&self) -> Table {
        let mut t = Table::new([
            "split", "scenes", "mentions", "projected", "null", "drop%", "clusters_src", "clusters_tgt", "add", "del",
            "mod", "corrected%",
        ]);
        for r in self.rows.iter().chain(std::iter::once(&self.total)) {
            t.push([
                r.group.clone(),
                r.scenes.to_string(),
                r.stats.source_mentions.to_string(),
                r.stats.projected.to_string(),
                r.stats.null_projections.to_string(),
                r.drop_rate(),
                r.stats.clusters_source.to_string(),
                r.stats.clusters_surviving.to_string(),
                r.corrections.additions.to_string(),
                r.corrections.deletions.to_string(),
                r.corrections.modifications.to_string(),
                r.corrected_rate(),
            ]);
        }
        t
    }
}

/// Aggregates projection results by the `split` metadata key (`all` when
/// absent). Corrections are matched to results by target document id.
pub fn projection_stats_report(results: &[ProjectionResult], corrections: &[CorrectionRecord]) -> StatsReport {
    let mut by_doc: BTreeMap<&str, Vec<&Correction>> = BTreeMap::new();
    for rec in corrections {
        by_doc.entry(rec.doc_id.as_str()).or_default().push(&rec.correction);
    }
    let mut groups: BTreeMap<String, StatsRow> = BTreeMap::new();
    for r in results {
        let split = r.target_doc.metadata.get("split").map_or("all", String::as_str);
        let row = groups.entry(split.to_owned()).or_insert_with(|| StatsRow::new(split));
        row.scenes += 1;
        row.stats.add(&r.stats);
        if let Some(log) = by_doc.get(r.target_doc.doc_id.as_str()) {
            row.corrections.add(&CorrectionCounts::of(log));
        }
    }
    let mut total = StatsRow::new("total");
    for row in groups.values() {
        total.absorb(row);
    }
    StatsReport {
        rows: groups.into_values().collect(),
        total,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Anchor, Document};

    fn result(doc_id: &str, split: Option<&str>, mentions: usize, null: usize) -> ProjectionResult {
        let mut d = Document::new(doc_id, "zh");
        if let Some(s) = split {
            d.metadata.insert("split".into(), s.into());
        }
        ProjectionResult {
            source: Document::new(doc_id, "en"),
            language: "zh".into(),
            utterance_map: Vec::new(),
            target_doc: d,
            provenance: BTreeMap::new(),
            stats: ProjectionStats {
                source_mentions: mentions,
                projected: mentions - null,
                null_projections: null,
                clusters_source: 0,
                clusters_surviving: 0,
            },
        }
    }

    fn rec(doc: &str, action: CorrectionAction, id: &str, ts: i64) -> CorrectionRecord {
        CorrectionRecord {
            doc_id: doc.into(),
            task_id: None,
            supersedes: false,
            correction: Correction {
                action,
                mention: id.into(),
                span: (action != CorrectionAction::Deletion).then(|| Anchor::span(0, 0, 1)),
                annotator: "a".into(),
                timestamp: ts,
            },
        }
    }

    #[test]
    fn drop_rate() {
        let r = projection_stats_report(&[result("a", None, 60, 20), result("b", None, 40, 10)], &[]);
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.total.drop_rate(), "30.00");
    }

    #[test]
    fn empty_corpus() {
        let r = projection_stats_report(&[], &[]);
        assert!(r.rows.is_empty());
        assert_eq!(r.total.drop_rate(), "0.00");
        assert_eq!(r.total.corrected_rate(), "0.00");
        assert_eq!(r.table().rows.len(), 1);
    }

    #[test]
    fn corrections_counted_once_per_mention() {
        let results = [result("a", Some("train"), 10, 3), result("b", Some("dev"), 10, 0)];
        let log = [
            rec("a", CorrectionAction::Addition, "m1", 1),
            rec("a", CorrectionAction::Modification, "m1", 2),
            rec("a", CorrectionAction::Deletion, "m2", 1),
            rec("b", CorrectionAction::Modification, "m2", 1),
            rec("zzz", CorrectionAction::Deletion, "m2", 1),
        ];
        let r = projection_stats_report(&results, &log);
        assert_eq!(r.rows.iter().map(|x| x.group.as_str()).collect::<Vec<_>>(), vec!["dev", "train"]);
        assert_eq!(r.total.corrections, CorrectionCounts { additions: 0, deletions: 1, modifications: 2 });
        assert_eq!(r.total.corrected_rate(), "15.00");
        assert_eq!(r.rows[1].drop_rate(), "30.00");
    }
}
