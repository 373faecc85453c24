use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Clustering, Document, Mention, MentionFlag, MentionId};
use crate::unionfind::UnionFind;

/// How mentions with more than one antecedent contribute links.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SplitPolicy {
    /// Split-antecedent mentions contribute no edges.
    #[default]
    DropSplit,
    /// Every mention contributes only its first link.
    FirstAntecedent,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClusterError {
    #[error("mention {mention} references unknown antecedent {antecedent}")]
    DanglingAntecedent {
        mention: MentionId,
        antecedent: MentionId,
    },
    #[error("mention {0} lists itself as antecedent")]
    SelfAntecedent(MentionId),
}

/// Transitive closure of antecedent links, treating each link as undirected.
///
/// `NOT_MENTION` mentions are excluded and links touching them are ignored.
/// `NO_ANTECEDENT` mentions contribute no outgoing links.
pub fn build_clusters(doc: &Document, policy: SplitPolicy) -> Result<Clustering<MentionId>, ClusterError> {
    cluster_mentions(&doc.mentions, policy)
}

/// [`build_clusters`] over a bare mention list.
pub fn cluster_mentions(mentions: &[Mention], policy: SplitPolicy) -> Result<Clustering<MentionId>, ClusterError> {
    let index: BTreeMap<&MentionId, usize> =
        mentions.iter().enumerate().map(|(i, m)| (&m.id, i)).collect();

    for m in mentions {
        for a in &m.antecedents {
            if *a == m.id {
                return Err(ClusterError::SelfAntecedent(m.id.clone()));
            }
            if !index.contains_key(a) {
                return Err(ClusterError::DanglingAntecedent {
                    mention: m.id.clone(),
                    antecedent: a.clone(),
                });
            }
        }
    }

    let excluded = |i: usize| mentions[i].has(MentionFlag::NotMention);
    let mut uf = UnionFind::new(mentions.len());
    for (i, m) in mentions.iter().enumerate() {
        if excluded(i) || m.has(MentionFlag::NoAntecedent) {
            continue;
        }
        let links: &[MentionId] = match policy {
            SplitPolicy::DropSplit if m.is_split() => &[],
            SplitPolicy::DropSplit => &m.antecedents,
            SplitPolicy::FirstAntecedent => &m.antecedents[..m.antecedents.len().min(1)],
        };
        for a in links {
            let j = index[a];
            if !excluded(j) {
                uf.union(i, j);
            }
        }
    }

    let members = (0..mentions.len()).filter(|&i| !excluded(i));
    let groups = uf.groups(members);
    Ok(Clustering::new(
        groups
            .into_iter()
            .map(|g| g.into_iter().map(|i| mentions[i].id.clone()).collect::<Vec<_>>()),
    )
    .expect("union-find groups are disjoint"))
}
