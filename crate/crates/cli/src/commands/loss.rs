use anyhow::{bail, Result};
use clap::Args;
use mmc_core::loss::{cluster_loss, mention_loss, AntecedentBatch, AntecedentQuery, LossConfig, MentionBatch, Profile};
use mmc_core::table::Table;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;
use crate::io::ReportSink;

#[derive(Debug, Args)]
pub struct LossCheckArgs {
    /// Random batches drawn per check
    #[arg(long, default_value_t = 20)]
    pub batches: usize,
    /// Largest relative error accepted for finite-difference gradients
    #[arg(long, default_value_t = 1e-5)]
    pub tolerance: f64,
}

struct Check {
    name: String,
    detail: String,
    ok: bool,
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

fn random_probs(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0.05..0.95)).collect()
}

fn random_query(rng: &mut ChaCha8Rng) -> AntecedentQuery<f64> {
    let n = rng.random_range(1..6);
    let scores: Vec<f64> = (0..n).map(|_| rng.random_range(-4.0..4.0)).collect();
    let mut gold: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.4)).collect();
    if gold.is_empty() {
        gold.push(0);
    }
    AntecedentQuery { scores, gold }
}

/// Binary cross-entropy written out directly.
fn bce(pos: &[f64], neg: &[f64]) -> f64 {
    -(pos.iter().map(|p| p.ln()).sum::<f64>() + neg.iter().map(|p| (1.0 - p).ln()).sum::<f64>())
}

fn mention_gradients(rng: &mut ChaCha8Rng, batches: usize, tau: f64) -> Result<f64> {
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for _ in 0..batches {
        let (np, nn) = (rng.random_range(1..5), rng.random_range(0..6));
        let pos = random_probs(rng, np);
        let neg = random_probs(rng, nn);
        let l = mention_loss(&MentionBatch::new(pos.clone(), neg.clone()), tau)?;
        let at = |p: Vec<f64>, n: Vec<f64>| mention_loss(&MentionBatch::new(p, n), tau).map(|l| l.value);
        for i in 0..pos.len() {
            let (mut up, mut dn) = (pos.clone(), pos.clone());
            up[i] += h;
            dn[i] -= h;
            let fd = (at(up, neg.clone())? - at(dn, neg.clone())?) / (2.0 * h);
            worst = worst.max(rel_err(fd, l.grad_pos[i]));
        }
        for i in 0..neg.len() {
            let (mut up, mut dn) = (neg.clone(), neg.clone());
            up[i] += h;
            dn[i] -= h;
            let fd = (at(pos.clone(), up)? - at(pos.clone(), dn)?) / (2.0 * h);
            worst = worst.max(rel_err(fd, l.grad_neg[i]));
        }
    }
    Ok(worst)
}

fn cluster_gradients(rng: &mut ChaCha8Rng, batches: usize) -> Result<f64> {
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for _ in 0..batches {
        let queries: Vec<AntecedentQuery<f64>> = (0..rng.random_range(1..4)).map(|_| random_query(rng)).collect();
        let batch = AntecedentBatch::new(queries)?;
        let l = cluster_loss(&batch)?;
        for qi in 0..batch.queries.len() {
            for j in 0..batch.queries[qi].scores.len() {
                let shifted = |d: f64| -> Result<f64> {
                    let mut b = batch.clone();
                    b.queries[qi].scores[j] += d;
                    Ok(cluster_loss(&b)?.value)
                };
                let fd = (shifted(h)? - shifted(-h)?) / (2.0 * h);
                let g = l.grad[qi][j];
                // near-zero gradients: compare absolutely
                let err = if g.abs() < 1e-6 && fd.abs() < 1e-6 { (g - fd).abs() } else { rel_err(fd, g) };
                worst = worst.max(err);
            }
        }
    }
    Ok(worst)
}

pub fn loss_check(a: LossCheckArgs, cfg: &RunConfig, sink: &ReportSink) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut checks = Vec::new();

    let hand = mention_loss(&MentionBatch::new(vec![0.8], vec![0.4]), 0.5)?.value;
    let expected = -(0.8f64.ln() + 0.5 * 0.6f64.ln());
    checks.push(Check {
        name: "hand value pos=0.8 neg=0.4 tau=0.5".into(),
        detail: format!("{hand:.7}"),
        ok: (hand - expected).abs() < 1e-12,
    });

    let mut worst: f64 = 0.0;
    for _ in 0..a.batches {
        let (np, nn) = (rng.random_range(1..6), rng.random_range(0..6));
        let pos = random_probs(&mut rng, np);
        let neg = random_probs(&mut rng, nn);
        let l = mention_loss(&MentionBatch::new(pos.clone(), neg.clone()), 1.0)?.value;
        worst = worst.max((l - bce(&pos, &neg)).abs());
    }
    checks.push(Check { name: "tau=1 equals cross-entropy".into(), detail: format!("max diff {worst:.1e}"), ok: worst < 1e-9 });

    let mut monotone = true;
    for _ in 0..a.batches {
        let pos = random_probs(&mut rng, 2);
        let neg = random_probs(&mut rng, 3);
        let b = MentionBatch::new(pos, neg);
        let vals: Vec<f64> = (0..=10).map(|i| mention_loss(&b, i as f64 / 10.0).map(|l| l.value)).collect::<Result<_, _>>()?;
        monotone &= vals.windows(2).all(|w| w[1] >= w[0]);
    }
    checks.push(Check { name: "non-decreasing in tau".into(), detail: format!("{} batches", a.batches), ok: monotone });

    for profile in Profile::ALL {
        let cfg = LossConfig::<f64>::for_profile(profile);
        let err = mention_gradients(&mut rng, a.batches, cfg.tau)?;
        checks.push(Check {
            name: format!("mention gradient {} (tau={})", profile.name(), cfg.tau),
            detail: format!("max rel err {err:.1e}"),
            ok: err < a.tolerance,
        });
    }
    let err = cluster_gradients(&mut rng, a.batches)?;
    checks.push(Check { name: "antecedent gradient".into(), detail: format!("max rel err {err:.1e}"), ok: err < a.tolerance });

    let mut t = Table::new(["check", "detail", "status"]);
    for c in &checks {
        t.push([c.name.clone(), c.detail.clone(), if c.ok { "PASS" } else { "FAIL" }.to_string()]);
    }
    let mut p = Table::new(["profile", "tau", "alpha_m"]);
    for profile in Profile::ALL {
        let (tau, alpha) = profile.defaults();
        p.push([profile.name().to_string(), tau.to_string(), alpha.to_string()]);
    }
    sink.emit_all(&[t, p])?;
    let failed = checks.iter().filter(|c| !c.ok).count();
    if failed > 0 {
        bail!("{failed} loss check(s) failed");
    }
    Ok(())
}
