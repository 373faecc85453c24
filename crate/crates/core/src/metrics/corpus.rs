use serde::{Deserialize, Serialize};

use super::{conll_from, EvalPair, Evaluation, EvaluationCounts, MetricScore};
use crate::num::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Averaging {
    /// Sum numerators and denominators across documents, then divide.
    #[default]
    Micro,
    /// Mean of per-document precision, recall and F1.
    Macro,
}

/// Accumulates per-document counts. Order of insertion does not affect
/// the micro average beyond floating-point summation order, which is
/// fixed by document order.
#[derive(Debug, Clone)]
pub struct CorpusScorer<T> {
    docs: Vec<EvaluationCounts<T>>,
}

impl<T: Scalar> Default for CorpusScorer<T> {
    fn default() -> Self {
        Self { docs: Vec::new() }
    }
}

impl<T: Scalar> CorpusScorer<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add<M: Ord>(&mut self, pair: &EvalPair<M>) {
        self.docs.push(EvaluationCounts::of(pair));
    }

    pub fn add_counts(&mut self, counts: EvaluationCounts<T>) {
        self.docs.push(counts);
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn per_document(&self) -> impl Iterator<Item = Evaluation<T>> + '_ {
        self.docs.iter().map(EvaluationCounts::evaluation)
    }

    pub fn evaluation(&self, averaging: Averaging) -> Evaluation<T> {
        match averaging {
            Averaging::Micro => {
                let mut total = EvaluationCounts::zero();
                for d in &self.docs {
                    total.add(d);
                }
                total.evaluation()
            }
            Averaging::Macro => self.macro_average(),
        }
    }

    fn macro_average(&self) -> Evaluation<T> {
        let n = T::from_count(self.docs.len().max(1));
        let evals: Vec<Evaluation<T>> = self.per_document().collect();
        let mean = |get: fn(&Evaluation<T>) -> MetricScore<T>| {
            let mut p = T::zero();
            let mut r = T::zero();
            let mut f = T::zero();
            let mut pu = self.docs.is_empty();
            let mut ru = self.docs.is_empty();
            for e in &evals {
                let s = get(e);
                p = p + s.precision;
                r = r + s.recall;
                f = f + s.f1;
                pu |= s.precision_undefined;
                ru |= s.recall_undefined;
            }
            MetricScore {
                precision: p / n,
                recall: r / n,
                f1: f / n,
                precision_undefined: pu,
                recall_undefined: ru,
            }
        };
        let muc = mean(|e| e.muc);
        let b_cubed = mean(|e| e.b_cubed);
        let ceaf_phi4 = mean(|e| e.ceaf_phi4);
        Evaluation {
            muc,
            b_cubed,
            ceaf_phi4,
            conll: conll_from(&muc, &b_cubed, &ceaf_phi4),
            mentions: mean(|e| e.mentions),
        }
    }
}
