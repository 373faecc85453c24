//! Merging two independent annotations of the same mentions.
//!
//! Each mention (the query) was annotated twice. Queries whose two answers
//! agree exactly are resolved first and their links closed transitively.
//! Unresolved queries whose two antecedent answers already sit in the same
//! cluster join it, repeated to a fixpoint. What remains is queued for
//! adjudication in document order.

mod agreement;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Anchor, Clustering, MentionId};
use crate::unionfind::UnionFind;

pub use agreement::{agreement_report, cohen_kappa, AgreementReport, AnnotatorScore, Category, Kappa};

/// One annotator's answer for a query.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Answer {
    /// An existing mention as antecedent.
    Mention { id: MentionId },
    /// A span the annotator added as antecedent.
    NewSpan { span: Anchor },
    NotMention,
    NoAntecedent,
}

impl Answer {
    pub fn mention(id: impl Into<MentionId>) -> Self {
        Answer::Mention { id: id.into() }
    }

    pub fn new_span(span: Anchor) -> Self {
        Answer::NewSpan { span }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationTriplet {
    pub query: MentionId,
    /// Position of the query mention.
    pub anchor: Anchor,
    pub answer1: Answer,
    pub answer2: Answer,
}

impl AnnotationTriplet {
    pub fn new(query: impl Into<MentionId>, anchor: Anchor, answer1: Answer, answer2: Answer) -> Self {
        Self {
            query: query.into(),
            anchor,
            answer1,
            answer2,
        }
    }
}

/// A member of a merged cluster.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MergeNode {
    Mention { id: MentionId },
    NewSpan { span: Anchor },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MergeError {
    #[error("query {0} answers itself")]
    SelfReference(MentionId),
    #[error("query {0} appears more than once")]
    DuplicateQuery(MentionId),
    #[error("query {query} answers {answer}, which does not precede it")]
    NotAntecedent { query: MentionId, answer: String },
    #[error("query {query} answers unknown mention {answer}")]
    UnknownMention { query: MentionId, answer: MentionId },
    #[error("decision for {0}, which is not queued for adjudication")]
    NotQueued(MentionId),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "choice", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Choice {
    PickFirst,
    PickSecond,
    Relabel { answer: Answer },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdjudicationDecision {
    pub query: MentionId,
    #[serde(flatten)]
    pub choice: Choice,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeState {
    pub triplets: Vec<AnnotationTriplet>,
    /// Clusters over resolved queries and the antecedents they name.
    pub clusters: Clustering<MergeNode>,
    pub resolved: BTreeSet<MentionId>,
    /// Resolved queries both annotators marked as non-mentions.
    pub non_mentions: BTreeSet<MentionId>,
    /// Unresolved triplets in document order.
    pub disagreements: Vec<AnnotationTriplet>,
}

struct Resolver<'a> {
    anchors: BTreeMap<&'a MentionId, Anchor>,
    by_anchor: BTreeMap<Anchor, &'a MentionId>,
}

impl<'a> Resolver<'a> {
    fn new(triplets: &'a [AnnotationTriplet]) -> Result<Self, MergeError> {
        let mut anchors = BTreeMap::new();
        let mut by_anchor = BTreeMap::new();
        for t in triplets {
            if anchors.insert(&t.query, t.anchor).is_some() {
                return Err(MergeError::DuplicateQuery(t.query.clone()));
            }
            by_anchor.entry(t.anchor).or_insert(&t.query);
        }
        Ok(Self { anchors, by_anchor })
    }

    fn check(&self, t: &AnnotationTriplet, a: &Answer) -> Result<(), MergeError> {
        let pos = match a {
            Answer::Mention { id } if *id == t.query => return Err(MergeError::SelfReference(t.query.clone())),
            Answer::Mention { id } => *self.anchors.get(id).ok_or_else(|| MergeError::UnknownMention {
                query: t.query.clone(),
                answer: id.clone(),
            })?,
            Answer::NewSpan { span } if *span == t.anchor => return Err(MergeError::SelfReference(t.query.clone())),
            Answer::NewSpan { span } => *span,
            Answer::NotMention | Answer::NoAntecedent => return Ok(()),
        };
        if pos < t.anchor {
            Ok(())
        } else {
            let answer = match a {
                Answer::Mention { id } => id.to_string(),
                _ => pos.to_string(),
            };
            Err(MergeError::NotAntecedent { query: t.query.clone(), answer })
        }
    }

    /// Answer as a cluster member; a new span equal to a query's anchor is that query.
    fn node(&self, a: &Answer) -> Option<MergeNode> {
        match a {
            Answer::Mention { id } => Some(MergeNode::Mention { id: id.clone() }),
            Answer::NewSpan { span } => Some(match self.by_anchor.get(span) {
                Some(id) => MergeNode::Mention { id: (*id).clone() },
                None => MergeNode::NewSpan { span: *span },
            }),
            Answer::NotMention | Answer::NoAntecedent => None,
        }
    }
}

/// Checks triplets for duplicate queries, self-references and antecedence.
pub fn validate_triplets(triplets: &[AnnotationTriplet]) -> Result<(), MergeError> {
    let r = Resolver::new(triplets)?;
    for t in triplets {
        r.check(t, &t.answer1)?;
        r.check(t, &t.answer2)?;
    }
    Ok(())
}

/// Merges with the unresolved queries revisited in triplet order.
pub fn merge_two_way(triplets: &[AnnotationTriplet]) -> Result<MergeState, MergeError> {
    let order: Vec<usize> = (0..triplets.len()).collect();
    merge_two_way_with_order(triplets, &order)
}

/// Like [`merge_two_way`], visiting unresolved queries in the fixpoint phase
/// in `order` (indices into `triplets`). The result does not depend on it.
pub fn merge_two_way_with_order(triplets: &[AnnotationTriplet], order: &[usize]) -> Result<MergeState, MergeError> {
    validate_triplets(triplets)?;
    let r = Resolver::new(triplets)?;

    let non_mentions: BTreeSet<MentionId> = triplets
        .iter()
        .filter(|t| t.answer1 == Answer::NotMention && t.answer2 == Answer::NotMention)
        .map(|t| t.query.clone())
        .collect();
    let excluded = |n: &MergeNode| matches!(n, MergeNode::Mention { id } if non_mentions.contains(id));

    let mut nodes: Vec<MergeNode> = Vec::new();
    let mut index: BTreeMap<MergeNode, usize> = BTreeMap::new();
    let mut uf = UnionFind::new(0);
    let mut intern = |n: MergeNode, nodes: &mut Vec<MergeNode>, uf: &mut UnionFind| -> usize {
        *index.entry(n.clone()).or_insert_with(|| {
            nodes.push(n);
            uf.push()
        })
    };

    let mut resolved = BTreeSet::new();
    let mut members: BTreeSet<usize> = BTreeSet::new();
    let mut pending: Vec<(usize, usize, usize)> = Vec::new();
    for (k, t) in triplets.iter().enumerate() {
        if non_mentions.contains(&t.query) {
            resolved.insert(t.query.clone());
            continue;
        }
        let q = intern(MergeNode::Mention { id: t.query.clone() }, &mut nodes, &mut uf);
        let (n1, n2) = (r.node(&t.answer1), r.node(&t.answer2));
        let agreed = match (&n1, &n2) {
            (Some(a), Some(b)) => a == b,
            _ => t.answer1 == t.answer2,
        };
        if agreed {
            resolved.insert(t.query.clone());
            members.insert(q);
            if let Some(a) = n1.filter(|a| !excluded(a)) {
                let a = intern(a, &mut nodes, &mut uf);
                members.insert(a);
                uf.union(q, a);
            }
        } else if let (Some(a), Some(b)) = (n1, n2) {
            if !excluded(&a) && !excluded(&b) {
                let a = intern(a, &mut nodes, &mut uf);
                let b = intern(b, &mut nodes, &mut uf);
                pending.push((k, a, b));
            }
        }
    }

    // Fixpoint: unions only grow clusters, so the set of joining queries is order-free.
    let mut queue: Vec<(usize, usize, usize)> = {
        let by_k: BTreeMap<usize, (usize, usize)> = pending.iter().map(|&(k, a, b)| (k, (a, b))).collect();
        order.iter().filter_map(|k| by_k.get(k).map(|&(a, b)| (*k, a, b))).collect()
    };
    loop {
        let before = queue.len();
        queue.retain(|&(k, a, b)| {
            let linked = members.contains(&a) && members.contains(&b) && uf.same(a, b);
            if linked {
                let q = index[&MergeNode::Mention { id: triplets[k].query.clone() }];
                uf.union(q, a);
                members.insert(q);
                resolved.insert(triplets[k].query.clone());
            }
            !linked
        });
        if queue.len() == before {
            break;
        }
    }

    let groups = uf.groups(members.iter().copied());
    let clusters = Clustering::new(groups.into_iter().map(|g| g.into_iter().map(|i| nodes[i].clone()).collect::<Vec<_>>()))
        .expect("union-find groups are disjoint");

    let mut disagreements: Vec<AnnotationTriplet> =
        triplets.iter().filter(|t| !resolved.contains(&t.query)).cloned().collect();
    disagreements.sort_by(|a, b| (a.anchor, &a.query).cmp(&(b.anchor, &b.query)));

    Ok(MergeState {
        triplets: triplets.to_vec(),
        clusters,
        resolved,
        non_mentions,
        disagreements,
    })
}

/// Turns each decided triplet into an agreeing one and merges again.
pub fn apply_decisions(state: &MergeState, decisions: &[AdjudicationDecision]) -> Result<MergeState, MergeError> {
    let queued: BTreeSet<&MentionId> = state.disagreements.iter().map(|t| &t.query).collect();
    let mut triplets = state.triplets.clone();
    let pos: BTreeMap<MentionId, usize> = triplets.iter().enumerate().map(|(i, t)| (t.query.clone(), i)).collect();
    for d in decisions {
        if !queued.contains(&d.query) {
            return Err(MergeError::NotQueued(d.query.clone()));
        }
        let t = &mut triplets[pos[&d.query]];
        let answer = match &d.choice {
            Choice::PickFirst => t.answer1.clone(),
            Choice::PickSecond => t.answer2.clone(),
            Choice::Relabel { answer } => answer.clone(),
        };
        t.answer1 = answer.clone();
        t.answer2 = answer;
    }
    merge_two_way(&triplets)
}
