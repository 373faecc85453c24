pub mod loss;
pub mod merge;
pub mod names;
pub mod project;
pub mod score;
pub mod serve;
pub mod stats;

use mmc_core::model::{Anchor, Clustering, Document, MentionFlag, MentionId};

/// Rewrites antecedent links so the document encodes `clusters`: each
/// mention links to the previous member of its cluster, chain starts get
/// `NO_ANTECEDENT`. Mentions outside every cluster are left as singletons.
pub fn link_clusters(doc: &Document, clusters: &Clustering<MentionId>) -> Document {
    let anchors: std::collections::BTreeMap<&MentionId, Anchor> = doc.mentions.iter().map(|m| (&m.id, m.anchor)).collect();
    let mut previous: std::collections::BTreeMap<MentionId, Option<MentionId>> = std::collections::BTreeMap::new();
    for c in clusters.clusters() {
        let mut members: Vec<&MentionId> = c.iter().filter(|m| anchors.contains_key(m)).collect();
        members.sort_by_key(|m| (anchors[m], (*m).clone()));
        for (i, m) in members.iter().enumerate() {
            previous.insert((*m).clone(), i.checked_sub(1).map(|j| members[j].clone()));
        }
    }
    let mut out = doc.clone();
    for m in &mut out.mentions {
        m.antecedents.clear();
        m.flags.remove(&MentionFlag::Plural);
        m.flags.remove(&MentionFlag::NoAntecedent);
        if m.has(MentionFlag::NotMention) {
            continue;
        }
        match previous.get(&m.id).cloned().flatten() {
            Some(a) => m.antecedents.push(a),
            None => {
                m.flags.insert(MentionFlag::NoAntecedent);
            }
        }
    }
    out
}
