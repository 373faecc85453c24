//! Noise-tolerant mention loss and marginal antecedent loss with analytic
//! gradients.
//!
//! Both losses are negative log-likelihoods to be minimized. The mention
//! loss scales the negative-span term by `tau`, so `tau = 1` is ordinary
//! binary cross-entropy and `tau = 0` ignores negatives entirely. The
//! combined objective is `cluster + alpha_m * mention`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::RealScalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LossError {
    #[error("tau must lie in [0, 1], got {0}")]
    TauOutOfRange(f64),
    #[error("alpha_m must be non-negative, got {0}")]
    NegativeWeight(f64),
    #[error("query {0} has no gold antecedent")]
    EmptyGold(usize),
    #[error("query {query}: gold index {index} outside {len} candidates")]
    GoldOutOfRange { query: usize, index: usize, len: usize },
    #[error("query {0} has no candidate scores")]
    NoCandidates(usize),
    #[error("query {query}: score {index} is not finite")]
    NonFiniteScore { query: usize, index: usize },
}

/// Mention-scorer probabilities for gold candidates (`pos`) and the
/// remaining candidate spans (`neg`), clamped to `[ε, 1 − ε]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MentionBatch<T> {
    pos: Vec<T>,
    neg: Vec<T>,
}

impl<T: RealScalar> MentionBatch<T> {
    pub fn new(pos: Vec<T>, neg: Vec<T>) -> Self {
        let eps = T::prob_epsilon();
        let hi = T::one() - eps;
        let clamp = |p: T| if p.is_nan() { eps } else { p.max(eps).min(hi) };
        Self {
            pos: pos.into_iter().map(clamp).collect(),
            neg: neg.into_iter().map(clamp).collect(),
        }
    }

    pub fn pos(&self) -> &[T] {
        &self.pos
    }

    pub fn neg(&self) -> &[T] {
        &self.neg
    }
}

/// Loss value with its gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct MentionLoss<T> {
    pub value: T,
    /// ∂L/∂p for each positive probability.
    pub grad_pos: Vec<T>,
    /// ∂L/∂p for each negative probability.
    pub grad_neg: Vec<T>,
}

fn check_tau<T: RealScalar>(tau: T) -> Result<(), LossError> {
    if tau >= T::zero() && tau <= T::one() {
        Ok(())
    } else {
        Err(LossError::TauOutOfRange(tau.as_f64()))
    }
}

/// `−[Σ⁺ ln p + τ Σ⁻ ln(1 − p)]` and its gradient.
pub fn mention_loss<T: RealScalar>(batch: &MentionBatch<T>, tau: T) -> Result<MentionLoss<T>, LossError> {
    check_tau(tau)?;
    let pos_ll = batch.pos.iter().fold(T::zero(), |acc, &p| acc + p.ln());
    let neg_ll = batch.neg.iter().fold(T::zero(), |acc, &p| acc + (T::one() - p).ln());
    Ok(MentionLoss {
        value: -(pos_ll + tau * neg_ll),
        grad_pos: batch.pos.iter().map(|&p| -p.recip()).collect(),
        grad_neg: batch.neg.iter().map(|&p| tau / (T::one() - p)).collect(),
    })
}

/// Candidate antecedent scores for one query mention. By convention index 0
/// is the dummy (no-antecedent) entry; `gold` holds every correct index and
/// may be `[0]` for a mention that starts a chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AntecedentQuery<T> {
    pub scores: Vec<T>,
    pub gold: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AntecedentBatch<T> {
    pub queries: Vec<AntecedentQuery<T>>,
}

impl<T: RealScalar> AntecedentBatch<T> {
    pub fn new(queries: Vec<AntecedentQuery<T>>) -> Result<Self, LossError> {
        let batch = Self { queries };
        batch.validate()?;
        Ok(batch)
    }

    pub fn validate(&self) -> Result<(), LossError> {
        for (qi, q) in self.queries.iter().enumerate() {
            if q.scores.is_empty() {
                return Err(LossError::NoCandidates(qi));
            }
            if let Some(index) = q.scores.iter().position(|s| !s.is_finite()) {
                return Err(LossError::NonFiniteScore { query: qi, index });
            }
            if q.gold.is_empty() {
                return Err(LossError::EmptyGold(qi));
            }
            if let Some(&index) = q.gold.iter().find(|&&g| g >= q.scores.len()) {
                return Err(LossError::GoldOutOfRange {
                    query: qi,
                    index,
                    len: q.scores.len(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterLoss<T> {
    pub value: T,
    /// ∂L/∂s, shaped like the batch scores.
    pub grad: Vec<Vec<T>>,
}

fn log_sum_exp<T: RealScalar>(xs: impl Iterator<Item = T> + Clone, max: T) -> T {
    max + xs.fold(T::zero(), |acc, x| acc + (x - max).exp()).ln()
}

/// `−Σ_i ln Σ_{j∈Y_i} softmax_j(s_i)`; the gradient per query is the full
/// softmax minus the softmax restricted to the gold set.
pub fn cluster_loss<T: RealScalar>(batch: &AntecedentBatch<T>) -> Result<ClusterLoss<T>, LossError> {
    batch.validate()?;
    let mut value = T::zero();
    let mut grad = Vec::with_capacity(batch.queries.len());
    for q in &batch.queries {
        let mut gold = q.gold.clone();
        gold.sort_unstable();
        gold.dedup();
        let max = q.scores.iter().copied().fold(T::neg_infinity(), T::max);
        let lse_all = log_sum_exp(q.scores.iter().copied(), max);
        let lse_gold = log_sum_exp(gold.iter().map(|&j| q.scores[j]), max);
        value = value + (lse_all - lse_gold).max(T::zero());

        let mut g: Vec<T> = q.scores.iter().map(|&s| (s - lse_all).exp()).collect();
        for &j in &gold {
            g[j] = g[j] - (q.scores[j] - lse_gold).exp();
        }
        grad.push(g);
    }
    Ok(ClusterLoss { value, grad })
}

/// Weights of the combined objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig<T> {
    pub tau: T,
    pub alpha_m: T,
}

impl<T: RealScalar> LossConfig<T> {
    pub fn new(tau: T, alpha_m: T) -> Result<Self, LossError> {
        check_tau(tau)?;
        if alpha_m < T::zero() || alpha_m.is_nan() {
            return Err(LossError::NegativeWeight(alpha_m.as_f64()));
        }
        Ok(Self { tau, alpha_m })
    }

    pub fn for_profile(profile: Profile) -> Self {
        let (tau, alpha_m) = profile.defaults();
        Self {
            tau: T::lit(tau),
            alpha_m: T::lit(alpha_m),
        }
    }
}

/// Tuned weight presets per language and corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Profile {
    MmcEn,
    MmcZh,
    MmcFa,
    /// Mention loss disabled; tau stays at plain cross-entropy.
    OntoNotes,
}

impl Profile {
    pub const ALL: [Profile; 4] = [Profile::MmcEn, Profile::MmcZh, Profile::MmcFa, Profile::OntoNotes];

    /// `(tau, alpha_m)`.
    pub fn defaults(self) -> (f64, f64) {
        match self {
            Profile::MmcEn => (0.7, 5.0),
            Profile::MmcZh => (0.7, 5.0),
            Profile::MmcFa => (0.55, 6.5),
            Profile::OntoNotes => (1.0, 0.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Profile::MmcEn => "mmc-en",
            Profile::MmcZh => "mmc-zh",
            Profile::MmcFa => "mmc-fa",
            Profile::OntoNotes => "ontonotes",
        }
    }
}

/// `L_c + α_m · L_m^τ`.
pub fn total_loss<T: RealScalar>(
    mention: &MentionBatch<T>,
    antecedent: &AntecedentBatch<T>,
    cfg: &LossConfig<T>,
) -> Result<T, LossError> {
    let m = mention_loss(mention, cfg.tau)?;
    let c = cluster_loss(antecedent)?;
    Ok(c.value + cfg.alpha_m * m.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictions_cost_nothing() {
        let b = MentionBatch::new(vec![1.0f64], vec![0.0]);
        let l = mention_loss(&b, 1.0).unwrap();
        assert!(l.value < 1e-6 && l.value >= 0.0);
    }

    #[test]
    fn hand_evaluated_value() {
        let b = MentionBatch::new(vec![0.8f64], vec![0.4]);
        let l = mention_loss(&b, 0.5).unwrap();
        assert!((l.value - 0.478_556_363_197_205).abs() < 1e-12);
        assert!((l.grad_pos[0] + 1.25).abs() < 1e-12);
        assert!((l.grad_neg[0] - 0.5 / 0.6).abs() < 1e-12);
    }

    #[test]
    fn tau_zero_ignores_negatives() {
        let a = mention_loss(&MentionBatch::new(vec![0.3f64], vec![0.9, 0.2]), 0.0).unwrap();
        let b = mention_loss(&MentionBatch::new(vec![0.3f64], vec![0.01]), 0.0).unwrap();
        assert_eq!(a.value, b.value);
        assert!(a.grad_neg.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn tau_validated() {
        let b = MentionBatch::new(vec![0.5f64], vec![]);
        assert_eq!(mention_loss(&b, 1.5), Err(LossError::TauOutOfRange(1.5)));
        assert!(mention_loss(&b, -0.1).is_err());
        assert!(LossConfig::new(0.5f64, -1.0).is_err());
    }

    #[test]
    fn clamping() {
        let b = MentionBatch::new(vec![0.0f32, 2.0], vec![f32::NAN]);
        assert!(b.pos().iter().chain(b.neg()).all(|&p| p > 0.0 && p < 1.0));
    }

    #[test]
    fn saturated_softmax() {
        let b = AntecedentBatch::new(vec![AntecedentQuery { scores: vec![0.0f64, 30.0, 0.0], gold: vec![1] }]).unwrap();
        let l = cluster_loss(&b).unwrap();
        assert!(l.value < 1e-12);
    }

    #[test]
    fn uniform_scores_give_log_k() {
        for k in 1..8usize {
            let b = AntecedentBatch::new(vec![AntecedentQuery { scores: vec![0.3f64; k], gold: vec![k - 1] }]).unwrap();
            let l = cluster_loss(&b).unwrap();
            assert!((l.value - (k as f64).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn antecedent_errors() {
        assert_eq!(
            AntecedentBatch::new(vec![AntecedentQuery { scores: vec![0.0f64], gold: vec![] }]),
            Err(LossError::EmptyGold(0))
        );
        assert!(matches!(
            AntecedentBatch::new(vec![AntecedentQuery { scores: vec![0.0f64], gold: vec![3] }]),
            Err(LossError::GoldOutOfRange { .. })
        ));
        assert!(matches!(
            AntecedentBatch::new(vec![AntecedentQuery { scores: vec![f64::INFINITY], gold: vec![0] }]),
            Err(LossError::NonFiniteScore { .. })
        ));
    }

    #[test]
    fn combined_objective() {
        let m = MentionBatch::new(vec![0.8f64, 0.6], vec![0.4, 0.1]);
        let a = AntecedentBatch::new(vec![
            AntecedentQuery { scores: vec![0.0f64, 1.0, -0.5], gold: vec![1, 2] },
            AntecedentQuery { scores: vec![0.0f64, 2.0], gold: vec![0] },
        ])
        .unwrap();
        let cfg = LossConfig::new(0.7, 5.0).unwrap();
        let manual = cluster_loss(&a).unwrap().value + 5.0 * mention_loss(&m, 0.7).unwrap().value;
        assert_eq!(total_loss(&m, &a, &cfg).unwrap(), manual);
        let off = LossConfig::new(0.7, 0.0).unwrap();
        assert_eq!(total_loss(&m, &a, &off).unwrap(), cluster_loss(&a).unwrap().value);
    }

    #[test]
    fn profile_defaults() {
        assert_eq!(Profile::MmcEn.defaults(), (0.7, 5.0));
        assert_eq!(Profile::MmcZh.defaults(), (0.7, 5.0));
        assert_eq!(Profile::MmcFa.defaults(), (0.55, 6.5));
        assert_eq!(Profile::OntoNotes.defaults().1, 0.0);
        let c = LossConfig::<f32>::for_profile(Profile::MmcFa);
        assert_eq!(c.tau, 0.55f32);
    }
}
