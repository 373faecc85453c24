use std::collections::BTreeMap;

use serde::Serialize;

use super::{AnnotationTriplet, Answer, MergeNode, Resolver};
use crate::metrics::{conll_f1, muc, ConllScore, EvalPair, MetricScore};
use crate::model::{Clustering, MentionId};
use crate::num::Scalar;
use crate::unionfind::UnionFind;

/// Outcome of one query, as compared for kappa.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(tag = "type", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Category {
    NotMention,
    NoAntecedent,
    Antecedent { node: MergeNode },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Kappa<T> {
    pub value: T,
    pub observed: T,
    pub expected: T,
    /// No items, or chance agreement is 1.
    pub undefined: bool,
}

/// Cohen's kappa over paired categorical labels.
pub fn cohen_kappa<T: Scalar, C: Ord>(pairs: &[(C, C)]) -> Kappa<T> {
    let n = pairs.len();
    if n == 0 {
        return Kappa { value: T::zero(), observed: T::zero(), expected: T::zero(), undefined: true };
    }
    let mut first: BTreeMap<&C, usize> = BTreeMap::new();
    let mut second: BTreeMap<&C, usize> = BTreeMap::new();
    let mut agree = 0;
    for (a, b) in pairs {
        *first.entry(a).or_default() += 1;
        *second.entry(b).or_default() += 1;
        agree += usize::from(a == b);
    }
    let nn = T::from_count(n);
    let observed = T::from_count(agree) / nn;
    let expected = first
        .iter()
        .map(|(c, &k)| T::from_count(k * second.get(c).copied().unwrap_or(0)))
        .fold(T::zero(), |s, x| s + x)
        / (nn * nn);
    if expected == T::one() {
        return Kappa { value: T::zero(), observed, expected, undefined: true };
    }
    Kappa { value: (observed - expected) / (T::one() - expected), observed, expected, undefined: false }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnnotatorScore<T> {
    pub muc: MetricScore<T>,
    pub conll: ConllScore<T>,
}

impl<T: Scalar> AnnotatorScore<T> {
    fn of(key: &Clustering<MergeNode>, response: &Clustering<MergeNode>) -> Self {
        let pair = EvalPair::new(key.clone(), response.clone());
        Self { muc: muc(&pair), conll: conll_f1(&pair) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementReport<T> {
    pub queries: usize,
    /// Each annotator scored as a response against the final clusters.
    pub first: AnnotatorScore<T>,
    pub second: AnnotatorScore<T>,
    /// Second annotator scored against the first.
    pub between: AnnotatorScore<T>,
    pub kappa: Kappa<T>,
}

/// The clustering one annotator's answers imply on their own.
fn annotator_clustering(r: &Resolver<'_>, triplets: &[AnnotationTriplet], pick: fn(&AnnotationTriplet) -> &Answer) -> Clustering<MergeNode> {
    let dropped: Vec<&MentionId> =
        triplets.iter().filter(|t| *pick(t) == Answer::NotMention).map(|t| &t.query).collect();
    let mut index: BTreeMap<MergeNode, usize> = BTreeMap::new();
    let mut nodes = Vec::new();
    let mut uf = UnionFind::new(0);
    let mut intern = |n: MergeNode, uf: &mut UnionFind| -> usize {
        *index.entry(n.clone()).or_insert_with(|| {
            nodes.push(n);
            uf.push()
        })
    };
    for t in triplets.iter().filter(|t| !dropped.contains(&&t.query)) {
        let q = intern(MergeNode::Mention { id: t.query.clone() }, &mut uf);
        if let Some(n) = r.node(pick(t)) {
            if !matches!(&n, MergeNode::Mention { id } if dropped.contains(&id)) {
                let a = intern(n, &mut uf);
                uf.union(q, a);
            }
        }
    }
    let groups = uf.groups(0..nodes.len());
    Clustering::new(groups.into_iter().map(|g| g.into_iter().map(|i| nodes[i].clone()).collect::<Vec<_>>()))
        .expect("union-find groups are disjoint")
}

fn category(r: &Resolver<'_>, a: &Answer) -> Category {
    match a {
        Answer::NotMention => Category::NotMention,
        Answer::NoAntecedent => Category::NoAntecedent,
        other => Category::Antecedent { node: r.node(other).expect("antecedent answers map to nodes") },
    }
}

/// Per-annotator scores against `final_clusters` and inter-annotator agreement.
///
/// Triplets are assumed valid (see [`super::validate_triplets`]).
pub fn agreement_report<T: Scalar>(triplets: &[AnnotationTriplet], final_clusters: &Clustering<MergeNode>) -> AgreementReport<T> {
    let r = Resolver::new(triplets).expect("valid triplets");
    let first = annotator_clustering(&r, triplets, |t| &t.answer1);
    let second = annotator_clustering(&r, triplets, |t| &t.answer2);
    let pairs: Vec<(Category, Category)> =
        triplets.iter().map(|t| (category(&r, &t.answer1), category(&r, &t.answer2))).collect();
    AgreementReport {
        queries: triplets.len(),
        first: AnnotatorScore::of(final_clusters, &first),
        second: AnnotatorScore::of(final_clusters, &second),
        between: AnnotatorScore::of(&first, &second),
        kappa: cohen_kappa(&pairs),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::merge::merge_two_way;
    use crate::model::Anchor;
    use num_rational::Rational64;

    fn q(id: &str, pos: usize, a1: Answer, a2: Answer) -> AnnotationTriplet {
        AnnotationTriplet::new(id, Anchor::span(0, pos, pos + 1), a1, a2)
    }

    #[test]
    fn identical_annotator_scores_full() {
        let ts = [
            q("a", 0, Answer::NoAntecedent, Answer::NoAntecedent),
            q("b", 1, Answer::mention("a"), Answer::mention("a")),
            q("c", 2, Answer::mention("b"), Answer::mention("b")),
            q("d", 3, Answer::NotMention, Answer::NotMention),
        ];
        let s = merge_two_way(&ts).unwrap();
        let rep: AgreementReport<Rational64> = agreement_report(&ts, &s.clusters);
        assert_eq!(rep.first.muc.f1, Rational64::from_integer(1));
        assert_eq!(rep.between.conll.f1, Rational64::from_integer(1));
        assert_eq!(rep.kappa.value, Rational64::from_integer(1));
    }

    #[test]
    fn always_disagreeing_is_not_positive() {
        let pairs: Vec<(u8, u8)> = (0..10).map(|i| (i % 2, 1 - i % 2)).collect();
        let k: Kappa<f64> = cohen_kappa(&pairs);
        assert!(k.value <= 0.0);
        assert_eq!(k.observed, 0.0);
    }

    #[test]
    fn degenerate_kappa_flagged() {
        let k: Kappa<f64> = cohen_kappa(&[(1, 1), (1, 1)]);
        assert!(k.undefined);
        assert_eq!(k.value, 0.0);
        assert!(cohen_kappa::<f64, u8>(&[]).undefined);
    }

    #[test]
    fn ten_query_hand_value() {
        // Confusion table (rows first annotator):
        //          NM  NA  ANT
        //   NM      2   0   1
        //   NA      0   3   1
        //   ANT     0   1   2
        // po = 7/10, pe = (3*2 + 4*4 + 3*4)/100 = 34/100, kappa = (70-34)/(100-34) = 36/66.
        let mut pairs = Vec::new();
        let cells = [((0, 0), 2), ((0, 2), 1), ((1, 1), 3), ((1, 2), 1), ((2, 1), 1), ((2, 2), 2)];
        for ((a, b), n) in cells {
            for _ in 0..n {
                pairs.push((a, b));
            }
        }
        let k: Kappa<Rational64> = cohen_kappa(&pairs);
        assert_eq!(k.value, Rational64::new(6, 11));
    }
}
