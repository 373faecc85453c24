use std::collections::{BTreeMap, BTreeSet};

use crate::model::{cluster_mentions, Anchor, ClusterError, Mention, MentionFlag, MentionId, SplitPolicy};

/// Rebuilds antecedent links for the mentions listed in `present`.
///
/// Each surviving mention links to its nearest surviving transitive
/// antecedent. Survivors of a cluster whose root was dropped are chained in
/// document order, so under [`SplitPolicy::DropSplit`] each target cluster
/// equals the source cluster restricted to the survivors. Split antecedents
/// are kept only while at least two of them survive. Output follows the
/// order of `source`, with anchors taken from `present`.
pub fn relink(source: &[Mention], present: &BTreeMap<MentionId, Anchor>) -> Result<Vec<Mention>, ClusterError> {
    let clusters = cluster_mentions(source, SplitPolicy::DropSplit)?;
    let by_id: BTreeMap<&MentionId, &Mention> = source.iter().map(|m| (&m.id, m)).collect();
    let eligible = |id: &MentionId| present.contains_key(id) && !by_id[id].has(MentionFlag::NotMention);
    // Tree edge under DropSplit: a single antecedent on a linking mention.
    let parent = |id: &MentionId| -> Option<&MentionId> {
        let m = by_id[id];
        if m.has(MentionFlag::NotMention) || m.has(MentionFlag::NoAntecedent) || m.antecedents.len() != 1 {
            return None;
        }
        let a = &m.antecedents[0];
        (!by_id[a].has(MentionFlag::NotMention)).then_some(a)
    };
    let nearest = |id: &MentionId| -> Option<MentionId> {
        let mut seen = BTreeSet::from([id]);
        let mut cur = parent(id);
        while let Some(p) = cur {
            if eligible(p) {
                return Some(p.clone());
            }
            if !seen.insert(p) {
                return None;
            }
            cur = parent(p);
        }
        None
    };

    let mut links: BTreeMap<&MentionId, Vec<MentionId>> = BTreeMap::new();
    let mut orphans: BTreeSet<&MentionId> = BTreeSet::new();
    for m in source.iter().filter(|m| present.contains_key(&m.id)) {
        let ants = if m.has(MentionFlag::NotMention) || m.has(MentionFlag::NoAntecedent) {
            Vec::new()
        } else if m.is_split() {
            let mut out: Vec<MentionId> = Vec::new();
            for a in &m.antecedents {
                let hit = if eligible(a) { Some(a.clone()) } else { nearest(a) };
                if let Some(h) = hit.filter(|h| !out.contains(h) && *h != m.id) {
                    out.push(h);
                }
            }
            if out.len() >= 2 {
                out
            } else {
                Vec::new()
            }
        } else if parent(&m.id).is_some() {
            match nearest(&m.id) {
                Some(p) => vec![p],
                None => {
                    orphans.insert(&m.id);
                    Vec::new()
                }
            }
        } else {
            Vec::new()
        };
        links.insert(&m.id, ants);
    }

    // Orphans exist only where the cluster root was dropped; chain them.
    let mut reroot: BTreeSet<&MentionId> = BTreeSet::new();
    for cluster in clusters.clusters() {
        let mut members: Vec<&MentionId> = cluster.iter().filter(|id| orphans.contains(id)).collect();
        members.sort_by_key(|id| (by_id[*id].anchor, (*id).clone()));
        for w in members.windows(2) {
            links.insert(w[1], vec![w[0].clone()]);
        }
        if let Some(first) = members.first() {
            reroot.insert(first);
        }
    }

    Ok(source
        .iter()
        .filter(|m| present.contains_key(&m.id))
        .map(|m| {
            let mut flags = m.flags.clone();
            if reroot.contains(&m.id) {
                flags.insert(MentionFlag::NoAntecedent);
            }
            Mention {
                id: m.id.clone(),
                anchor: present[&m.id],
                antecedents: links.remove(&m.id).unwrap_or_default(),
                flags,
            }
        })
        .collect())
}
