//! Closed-form evaluator and Monte Carlo validator for the selection
//! error-rate analysis: when two independently trained classifiers agree in
//! a shared translation space, how often is the first one still wrong?
//!
//! With expected accuracies `eta_a`, `eta_b` and translation-collision
//! probability `epsilon = 1/|sigma|`, the agreement mass decomposes into
//! Z  = eta_a (eta_b + eps (1-eta_b))   (f_a correct),
//! FP = eta_b eps (1-eta_a)             (f_b correct, f_a wrong, collision),
//! E  = eps^2 (1-eta_a)(1-eta_b)        (both wrong, colliding),
//! and the conditional error rate is (FP+E)/(Z+FP+E) = 1 - Z/agreement.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::rng::{derive_seed, rng_from_seed};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryParams {
    pub eta_a: f64,
    pub eta_b: f64,
    pub sigma_size: u64,
}

impl TheoryParams {
    pub fn new(eta_a: f64, eta_b: f64, sigma_size: u64) -> Result<Self, CoreError> {
        let p = TheoryParams {
            eta_a,
            eta_b,
            sigma_size,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        if !(0.0..=1.0).contains(&self.eta_a) || !(0.0..=1.0).contains(&self.eta_b) {
            return Err(CoreError::InvalidConfig(
                "expected accuracies must be in [0,1]".into(),
            ));
        }
        if self.sigma_size < 1 {
            return Err(CoreError::InvalidConfig(
                "translation space size must be >= 1".into(),
            ));
        }
        Ok(())
    }

    /// Expected probability that a wrong prediction's translation hits any
    /// given point of the translation space.
    pub fn epsilon(&self) -> f64 {
        1.0 / self.sigma_size as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryResult {
    pub error_rate: f64,
    pub agreement_rate: f64,
    pub z: f64,
    pub e: f64,
}

/// How a wrong prediction lands in the translation space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TranslationNoise {
    /// Each wrong translation is uniform over the whole space (hits any
    /// given point, gold included, with probability 1/|sigma|), and wrong
    /// translations of the two tasks collide only at the gold point: the
    /// tasks' prediction spaces reduce wrong labels to disjoint sub-
    /// predictions, so both-wrong agreement carries the eps^2 mass of the
    /// closed form. The default.
    UniformIncludingGold,
    /// Sensitivity variant: wrong translations never hit the gold point and
    /// share one error space, so both-wrong draws can collide off gold.
    UniformExcludingGold,
}

pub fn closed_form(params: &TheoryParams) -> Result<TheoryResult, CoreError> {
    params.validate()?;
    let eps = params.epsilon();
    let (eta_a, eta_b) = (params.eta_a, params.eta_b);
    let z = eta_a * (eta_b + eps * (1.0 - eta_b));
    let fp = eta_b * eps * (1.0 - eta_a);
    let e = eps * eps * (1.0 - eta_a) * (1.0 - eta_b);
    let agreement_rate = z + fp + e;
    if agreement_rate == 0.0 {
        return Err(CoreError::ZeroAgreement);
    }
    // (FP+E)/agreement == 1 - Z/agreement, better conditioned near zero.
    let error_rate = (fp + e) / agreement_rate;
    Ok(TheoryResult {
        error_rate,
        agreement_rate,
        z,
        e,
    })
}

pub fn monte_carlo(
    params: &TheoryParams,
    n_samples: u64,
    seed: u64,
) -> Result<TheoryResult, CoreError> {
    monte_carlo_with(params, n_samples, seed, TranslationNoise::UniformIncludingGold)
}

/// Sharded simulation: fixed-size shards with per-shard derived seeds and
/// exact count aggregation, so the result is independent of worker count.
pub fn monte_carlo_with(
    params: &TheoryParams,
    n_samples: u64,
    seed: u64,
    noise: TranslationNoise,
) -> Result<TheoryResult, CoreError> {
    params.validate()?;
    if n_samples < 1 {
        return Err(CoreError::InvalidConfig("n_samples must be >= 1".into()));
    }
    if noise == TranslationNoise::UniformExcludingGold && params.sigma_size < 2 {
        return Err(CoreError::InvalidConfig(
            "excluding-gold noise needs a translation space of size >= 2".into(),
        ));
    }

    const SHARD: u64 = 1 << 16;
    let n_shards = n_samples.div_ceil(SHARD);
    let counts = (0..n_shards)
        .into_par_iter()
        .map(|shard| {
            let lo = shard * SHARD;
            let hi = (lo + SHARD).min(n_samples);
            run_shard(params, noise, hi - lo, derive_seed(seed, shard))
        })
        .reduce(ShardCounts::default, ShardCounts::merge);

    let n = n_samples as f64;
    let error_rate = if counts.agree == 0 {
        0.0
    } else {
        counts.agree_a_wrong as f64 / counts.agree as f64
    };
    Ok(TheoryResult {
        error_rate,
        agreement_rate: counts.agree as f64 / n,
        z: counts.agree_a_right as f64 / n,
        e: counts.agree_both_wrong as f64 / n,
    })
}

#[derive(Debug, Default, Clone, Copy)]
struct ShardCounts {
    agree: u64,
    agree_a_wrong: u64,
    agree_a_right: u64,
    agree_both_wrong: u64,
}

impl ShardCounts {
    fn merge(self, other: ShardCounts) -> ShardCounts {
        ShardCounts {
            agree: self.agree + other.agree,
            agree_a_wrong: self.agree_a_wrong + other.agree_a_wrong,
            agree_a_right: self.agree_a_right + other.agree_a_right,
            agree_both_wrong: self.agree_both_wrong + other.agree_both_wrong,
        }
    }
}

const GOLD: u64 = 0;

fn run_shard(params: &TheoryParams, noise: TranslationNoise, n: u64, seed: u64) -> ShardCounts {
    let mut rng = rng_from_seed(seed);
    let mut counts = ShardCounts::default();
    let sigma = params.sigma_size;
    // Off-gold wrong translations: task-specific points under the default
    // noise model (collisions only through gold), one shared error space
    // for the excluding-gold variant.
    let off_gold = |rng: &mut rand_chacha::ChaCha8Rng, task_marker: u64| match noise {
        TranslationNoise::UniformIncludingGold => {
            if rng.gen_range(0..sigma) == GOLD {
                GOLD
            } else {
                sigma + task_marker
            }
        }
        TranslationNoise::UniformExcludingGold => 1 + rng.gen_range(0..sigma - 1),
    };
    for _ in 0..n {
        let a_ok = rng.gen_bool(params.eta_a);
        let b_ok = rng.gen_bool(params.eta_b);
        // A correct prediction translates to the gold point.
        let ta = if a_ok { GOLD } else { off_gold(&mut rng, 1) };
        let tb = if b_ok { GOLD } else { off_gold(&mut rng, 2) };
        if ta == tb {
            counts.agree += 1;
            if a_ok {
                counts.agree_a_right += 1;
            } else {
                counts.agree_a_wrong += 1;
            }
            if !a_ok && !b_ok {
                counts.agree_both_wrong += 1;
            }
        }
    }
    counts
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SweepRow {
    pub params: TheoryParams,
    pub closed: TheoryResult,
    pub mc: TheoryResult,
}

#[derive(Debug, Clone)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// Closed-form error rate nonincreasing in sigma at fixed accuracies.
    pub monotone_in_sigma: bool,
}

pub fn sweep(
    grid: &[TheoryParams],
    n_samples: u64,
    seed: u64,
) -> Result<SweepTable, CoreError> {
    if grid.is_empty() {
        return Err(CoreError::InvalidConfig("empty sweep grid".into()));
    }
    let rows = grid
        .iter()
        .enumerate()
        .map(|(i, params)| {
            Ok(SweepRow {
                params: *params,
                closed: closed_form(params)?,
                mc: monte_carlo(params, n_samples, derive_seed(seed, i as u64))?,
            })
        })
        .collect::<Result<Vec<_>, CoreError>>()?;

    let mut monotone_in_sigma = true;
    let mut groups: std::collections::BTreeMap<(u64, u64), Vec<(u64, f64)>> =
        std::collections::BTreeMap::new();
    for row in &rows {
        groups
            .entry((row.params.eta_a.to_bits(), row.params.eta_b.to_bits()))
            .or_default()
            .push((row.params.sigma_size, row.closed.error_rate));
    }
    for series in groups.values_mut() {
        series.sort_by_key(|(sigma, _)| *sigma);
        for pair in series.windows(2) {
            if pair[1].1 > pair[0].1 {
                monotone_in_sigma = false;
            }
        }
    }
    Ok(SweepTable {
        rows,
        monotone_in_sigma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(eta_a: f64, eta_b: f64, sigma: u64) -> TheoryParams {
        TheoryParams::new(eta_a, eta_b, sigma).unwrap()
    }

    #[test]
    fn closed_form_hand_arithmetic() {
        // eps=0.02: Z=0.7*0.804=0.56280, FP=0.8*0.02*0.3=0.00480,
        // E=0.0004*0.3*0.2=0.000024, error=(0.004824)/0.567624=0.0084986...
        let r = closed_form(&p(0.7, 0.8, 50)).unwrap();
        assert!((r.z - 0.56280).abs() < 1e-12);
        assert!((r.e - 0.000024).abs() < 1e-12);
        assert!((r.agreement_rate - 0.567624).abs() < 1e-12);
        assert!((r.error_rate - 0.00850).abs() <= 1e-4);
    }

    #[test]
    fn closed_form_limiting_cases() {
        for sigma in [1, 7, 1000] {
            assert_eq!(closed_form(&p(1.0, 1.0, sigma)).unwrap().error_rate, 0.0);
        }
        // |sigma|=1: agreement certain, error exactly 1 - eta_a.
        for i in 0..=10 {
            let eta = i as f64 / 10.0;
            let r = closed_form(&p(eta, 0.6, 1)).unwrap();
            assert!((r.error_rate - (1.0 - eta)).abs() < 1e-12);
            assert!((r.agreement_rate - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn both_error_rate_forms_agree() {
        for &(ea, eb, s) in &[(0.7, 0.8, 50), (0.3, 0.3, 10), (0.05, 0.95, 3), (0.5, 0.5, 1)] {
            let r = closed_form(&p(ea, eb, s)).unwrap();
            let alt = 1.0 - r.z / r.agreement_rate;
            assert!((r.error_rate - alt).abs() < 1e-12);
        }
    }

    #[test]
    fn closed_form_monotone_in_sigma() {
        for i in 1..=20 {
            let eta = i as f64 / 21.0;
            let mut prev = f64::INFINITY;
            for sigma in [1u64, 2, 5, 10, 50, 100, 1_000, 1_000_000] {
                let err = closed_form(&p(eta, eta, sigma)).unwrap().error_rate;
                assert!(err <= prev + 1e-15);
                prev = err;
            }
        }
    }

    #[test]
    fn sweep_grid_strictly_decreasing_at_low_eta() {
        // Hand values: 0.7, ~0.18918, ~0.02280, ~0.0023279.
        let grid: Vec<TheoryParams> =
            [1u64, 10, 100, 1000].iter().map(|&s| p(0.3, 0.3, s)).collect();
        let table = sweep(&grid, 10_000, 9).unwrap();
        assert!(table.monotone_in_sigma);
        let errs: Vec<f64> = table.rows.iter().map(|r| r.closed.error_rate).collect();
        assert!((errs[0] - 0.7).abs() < 1e-12);
        assert!((errs[1] - 0.18918).abs() < 1e-4);
        assert!((errs[2] - 0.02280).abs() < 1e-4);
        assert!((errs[3] - 0.0023279).abs() < 1e-5);
        for w in errs.windows(2) {
            assert!(w[1] < w[0]);
        }
    }

    #[test]
    fn monte_carlo_matches_closed_form() {
        let params = p(0.7, 0.8, 50);
        let cf = closed_form(&params).unwrap();
        let mc = monte_carlo(&params, 1_000_000, 1).unwrap();
        assert!((mc.error_rate - cf.error_rate).abs() <= 0.005);
        // Agreement within 3 binomial standard errors.
        let se = (cf.agreement_rate * (1.0 - cf.agreement_rate) / 1e6).sqrt();
        assert!((mc.agreement_rate - cf.agreement_rate).abs() <= 3.0 * se);
    }

    #[test]
    fn monte_carlo_exact_edges() {
        let mc = monte_carlo(&p(1.0, 1.0, 50), 10_000, 3).unwrap();
        assert_eq!(mc.error_rate, 0.0);
        assert_eq!(mc.agreement_rate, 1.0);

        let mc = monte_carlo(&p(0.5, 0.5, 1), 1_000_000, 4).unwrap();
        assert_eq!(mc.agreement_rate, 1.0);
        assert!((mc.error_rate - 0.5).abs() <= 0.005);
    }

    #[test]
    fn monte_carlo_deterministic_and_shard_exact() {
        let params = p(0.6, 0.4, 9);
        // Crosses shard boundaries (non-multiple of shard size).
        let a = monte_carlo(&params, 100_001, 11).unwrap();
        let b = monte_carlo(&params, 100_001, 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn monte_carlo_gap_shrinks_with_n() {
        let params = p(0.7, 0.8, 50);
        let cf = closed_form(&params).unwrap().error_rate;
        let mut wins = 0;
        for seed in 0..10u64 {
            let small = monte_carlo(&params, 1_000, seed).unwrap().error_rate;
            let large = monte_carlo(&params, 1_000_000, seed).unwrap().error_rate;
            if (large - cf).abs() < (small - cf).abs() {
                wins += 1;
            }
        }
        assert!(wins >= 9, "gap shrank for only {wins}/10 seeds");
    }

    #[test]
    fn excluding_gold_variant() {
        assert!(matches!(
            monte_carlo_with(&p(0.5, 0.5, 1), 100, 0, TranslationNoise::UniformExcludingGold),
            Err(CoreError::InvalidConfig(_))
        ));
        // With gold excluded a wrong prediction never collides with a correct
        // one, so for sigma=2 wrong-wrong always collide (single wrong point).
        let mc = monte_carlo_with(
            &p(0.5, 0.5, 2),
            200_000,
            5,
            TranslationNoise::UniformExcludingGold,
        )
        .unwrap();
        assert!((mc.agreement_rate - 0.5).abs() < 0.01);
        assert!((mc.error_rate - 0.5).abs() < 0.01);
    }

    #[test]
    fn large_sigma_keeps_error_low() {
        let r = closed_form(&p(0.3, 0.3, 1_000_000)).unwrap();
        assert!(r.error_rate < 1e-4);
    }

    #[test]
    fn rejects_invalid_params() {
        assert!(TheoryParams::new(1.2, 0.5, 10).is_err());
        assert!(TheoryParams::new(0.5, -0.1, 10).is_err());
        assert!(TheoryParams::new(0.5, 0.5, 0).is_err());
        assert!(sweep(&[], 10, 0).is_err());
    }
}
