//! Coreference scoring: MUC, B³, CEAF-φ4, the CoNLL average and
//! mention-detection precision/recall.
//!
//! Every metric first reduces a key/response pair to [`Counts`]
//! (precision and recall numerators and denominators). Corpus scores are
//! micro-averaged by summing counts across documents before dividing.
//! Ratios with a zero denominator are reported as 0 with an `undefined`
//! flag rather than NaN.
//!
//! Functions are generic over [`Scalar`], so the same code scores with
//! `f64` or exactly with `Rational64`.

mod assignment;
mod corpus;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::model::{Anchor, ClusterError, Clustering, Document, SplitPolicy};
use crate::num::Scalar;

pub use assignment::max_weight_assignment;
pub use corpus::{Averaging, CorpusScorer};

/// Precision, recall and F1 as fractions in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricScore<T> {
    pub precision: T,
    pub recall: T,
    pub f1: T,
    #[serde(default)]
    pub precision_undefined: bool,
    #[serde(default)]
    pub recall_undefined: bool,
}

impl<T: Scalar> MetricScore<T> {
    pub fn from_pr(precision: T, recall: T) -> Self {
        Self {
            precision,
            recall,
            f1: harmonic_mean(precision, recall),
            precision_undefined: false,
            recall_undefined: false,
        }
    }

    pub fn undefined(&self) -> bool {
        self.precision_undefined || self.recall_undefined
    }
}

/// `2pr / (p + r)`, or 0 when both are 0.
pub fn harmonic_mean<T: Scalar>(p: T, r: T) -> T {
    let s = p + r;
    if s == T::zero() {
        T::zero()
    } else {
        (T::one() + T::one()) * p * r / s
    }
}

/// Numerators and denominators behind a [`MetricScore`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Counts<T> {
    pub precision_num: T,
    pub precision_den: T,
    pub recall_num: T,
    pub recall_den: T,
}

impl<T: Scalar> Counts<T> {
    pub fn zero() -> Self {
        Self {
            precision_num: T::zero(),
            precision_den: T::zero(),
            recall_num: T::zero(),
            recall_den: T::zero(),
        }
    }

    pub fn add(&mut self, other: &Self) {
        self.precision_num = self.precision_num + other.precision_num;
        self.precision_den = self.precision_den + other.precision_den;
        self.recall_num = self.recall_num + other.recall_num;
        self.recall_den = self.recall_den + other.recall_den;
    }

    pub fn score(&self) -> MetricScore<T> {
        let (precision, precision_undefined) = ratio(self.precision_num, self.precision_den);
        let (recall, recall_undefined) = ratio(self.recall_num, self.recall_den);
        MetricScore {
            precision,
            recall,
            f1: harmonic_mean(precision, recall),
            precision_undefined,
            recall_undefined,
        }
    }
}

fn ratio<T: Scalar>(num: T, den: T) -> (T, bool) {
    if den == T::zero() {
        (T::zero(), true)
    } else {
        (num / den, false)
    }
}

/// Gold and system clusterings over a shared mention universe.
///
/// Members are compared by equality, so for documents the member type is
/// the mention [`Anchor`] (utterance, start, end, kind), not the id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalPair<M: Ord> {
    pub key: Clustering<M>,
    pub response: Clustering<M>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EvalOptions {
    pub split_policy: SplitPolicy,
    pub drop_singletons: bool,
}

impl<M: Ord + Clone + std::fmt::Debug> EvalPair<M> {
    pub fn new(key: Clustering<M>, response: Clustering<M>) -> Self {
        Self { key, response }
    }

    pub fn without_singletons(&self) -> Self {
        Self {
            key: self.key.without_singletons(),
            response: self.response.without_singletons(),
        }
    }
}

impl EvalPair<Anchor> {
    pub fn from_documents(key: &Document, response: &Document, opts: EvalOptions) -> Result<Self, ClusterError> {
        let pair = Self {
            key: key.anchor_clustering(opts.split_policy)?,
            response: response.anchor_clustering(opts.split_policy)?,
        };
        Ok(if opts.drop_singletons {
            pair.without_singletons()
        } else {
            pair
        })
    }
}

/// Member → cluster index.
fn index_of<M: Ord>(c: &Clustering<M>) -> BTreeMap<&M, usize> {
    c.assignment()
}

/// Link-based recall of `key` against `response` (swap for precision).
fn muc_side<T: Scalar, M: Ord>(key: &Clustering<M>, response: &Clustering<M>) -> (T, T) {
    let resp = index_of(response);
    let (mut num, mut den) = (0usize, 0usize);
    for k in key.clusters().iter().filter(|k| k.len() > 1) {
        let mut parts = BTreeSet::new();
        let mut twinless = 0usize;
        for m in k {
            match resp.get(m) {
                Some(&j) => {
                    parts.insert(j);
                }
                None => twinless += 1,
            }
        }
        num += k.len() - (parts.len() + twinless);
        den += k.len() - 1;
    }
    (T::from_count(num), T::from_count(den))
}

pub fn muc_counts<T: Scalar, M: Ord>(pair: &EvalPair<M>) -> Counts<T> {
    let (recall_num, recall_den) = muc_side(&pair.key, &pair.response);
    let (precision_num, precision_den) = muc_side(&pair.response, &pair.key);
    Counts {
        precision_num,
        precision_den,
        recall_num,
        recall_den,
    }
}

/// MUC (Vilain et al.). An all-singleton key leaves recall undefined.
pub fn muc<T: Scalar, M: Ord>(pair: &EvalPair<M>) -> MetricScore<T> {
    muc_counts(pair).score()
}

/// Sum over `key` mentions of |K_m ∩ R_m| / |K_m|, with mentions missing
/// from `response` treated as response singletons.
fn b_cubed_side<T: Scalar, M: Ord>(key: &Clustering<M>, response: &Clustering<M>) -> (T, T) {
    let resp = index_of(response);
    let mut num = T::zero();
    let mut den = 0usize;
    for k in key.clusters() {
        let size = T::from_count(k.len());
        let mut overlap: BTreeMap<usize, usize> = BTreeMap::new();
        let mut twinless = 0usize;
        for m in k {
            match resp.get(m) {
                Some(&j) => *overlap.entry(j).or_default() += 1,
                None => twinless += 1,
            }
        }
        for &g in overlap.values() {
            num = num + T::from_count(g * g) / size;
        }
        num = num + T::from_count(twinless) / size;
        den += k.len();
    }
    (num, T::from_count(den))
}

pub fn b_cubed_counts<T: Scalar, M: Ord>(pair: &EvalPair<M>) -> Counts<T> {
    let (recall_num, recall_den) = b_cubed_side(&pair.key, &pair.response);
    let (precision_num, precision_den) = b_cubed_side(&pair.response, &pair.key);
    Counts {
        precision_num,
        precision_den,
        recall_num,
        recall_den,
    }
}

/// B³ (Bagga and Baldwin).
pub fn b_cubed<T: Scalar, M: Ord>(pair: &EvalPair<M>) -> MetricScore<T> {
    b_cubed_counts(pair).score()
}

/// Entity similarity 2|K ∩ R| / (|K| + |R|).
pub fn phi4<T: Scalar, M: Ord>(k: &BTreeSet<M>, r: &BTreeSet<M>) -> T {
    let common = k.intersection(r).count();
    T::from_count(2 * common) / T::from_count(k.len() + r.len())
}

/// φ4 similarity matrix, key clusters as rows.
pub fn phi4_matrix<T: Scalar, M: Ord>(pair: &EvalPair<M>) -> Vec<Vec<T>> {
    pair.key
        .clusters()
        .iter()
        .map(|k| pair.response.clusters().iter().map(|r| phi4(k, r)).collect())
        .collect()
}

pub fn ceaf_phi4_counts<T: Scalar, M: Ord>(pair: &EvalPair<M>) -> Counts<T> {
    let sim = phi4_matrix::<T, M>(pair);
    let (_, total) = max_weight_assignment(&sim);
    // φ4(C, C) = 1, so the self-similarity sums are cluster counts.
    Counts {
        precision_num: total,
        precision_den: T::from_count(pair.response.len()),
        recall_num: total,
        recall_den: T::from_count(pair.key.len()),
    }
}

/// Entity-based CEAF with φ4 similarity (Luo, 2005).
pub fn ceaf_phi4<T: Scalar, M: Ord>(pair: &EvalPair<M>) -> MetricScore<T> {
    ceaf_phi4_counts(pair).score()
}

pub fn mention_counts<T: Scalar, M: Ord>(pair: &EvalPair<M>) -> Counts<T> {
    let key = pair.key.covers();
    let resp = pair.response.covers();
    let tp = T::from_count(key.intersection(&resp).count());
    Counts {
        precision_num: tp,
        precision_den: T::from_count(resp.len()),
        recall_num: tp,
        recall_den: T::from_count(key.len()),
    }
}

/// Exact-match mention detection precision and recall.
pub fn mention_prf<T: Scalar, M: Ord>(pair: &EvalPair<M>) -> MetricScore<T> {
    mention_counts(pair).score()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConllScore<T> {
    pub f1: T,
    #[serde(default)]
    pub undefined: bool,
}

/// Arithmetic mean of MUC, B³ and CEAF-φ4 F1.
pub fn conll_from<T: Scalar>(muc: &MetricScore<T>, b3: &MetricScore<T>, ceaf: &MetricScore<T>) -> ConllScore<T> {
    ConllScore {
        f1: (muc.f1 + b3.f1 + ceaf.f1) / T::from_count(3),
        undefined: muc.undefined() || b3.undefined() || ceaf.undefined(),
    }
}

pub fn conll_f1<T: Scalar, M: Ord>(pair: &EvalPair<M>) -> ConllScore<T> {
    conll_from(&muc(pair), &b_cubed(pair), &ceaf_phi4(pair))
}

/// All metrics for one pair or one corpus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation<T> {
    pub muc: MetricScore<T>,
    pub b_cubed: MetricScore<T>,
    pub ceaf_phi4: MetricScore<T>,
    pub conll: ConllScore<T>,
    pub mentions: MetricScore<T>,
}

/// Per-pair counts for every metric; the unit of micro-averaging.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvaluationCounts<T> {
    pub muc: Counts<T>,
    pub b_cubed: Counts<T>,
    pub ceaf_phi4: Counts<T>,
    pub mentions: Counts<T>,
}

impl<T: Scalar> EvaluationCounts<T> {
    pub fn of<M: Ord>(pair: &EvalPair<M>) -> Self {
        Self {
            muc: muc_counts(pair),
            b_cubed: b_cubed_counts(pair),
            ceaf_phi4: ceaf_phi4_counts(pair),
            mentions: mention_counts(pair),
        }
    }

    pub fn zero() -> Self {
        Self {
            muc: Counts::zero(),
            b_cubed: Counts::zero(),
            ceaf_phi4: Counts::zero(),
            mentions: Counts::zero(),
        }
    }

    pub fn add(&mut self, other: &Self) {
        self.muc.add(&other.muc);
        self.b_cubed.add(&other.b_cubed);
        self.ceaf_phi4.add(&other.ceaf_phi4);
        self.mentions.add(&other.mentions);
    }

    pub fn evaluation(&self) -> Evaluation<T> {
        let muc = self.muc.score();
        let b_cubed = self.b_cubed.score();
        let ceaf_phi4 = self.ceaf_phi4.score();
        Evaluation {
            muc,
            b_cubed,
            ceaf_phi4,
            conll: conll_from(&muc, &b_cubed, &ceaf_phi4),
            mentions: self.mentions.score(),
        }
    }
}

pub fn evaluate<T: Scalar, M: Ord>(pair: &EvalPair<M>) -> Evaluation<T> {
    EvaluationCounts::of(pair).evaluation()
}
