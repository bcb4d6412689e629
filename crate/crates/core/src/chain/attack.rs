//! Race model of an attacker trying to rewrite a buried transaction.
//!
//! The attacker starts `target_depth` blocks behind the honest chain. Each
//! step one block is found: by the attacker with probability
//! `attacker_fraction`, otherwise by the honest network. The attack succeeds
//! once the attacker's fork is strictly longer than the honest chain.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Chain, ChainView};
use crate::digest::Digest32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AttackOutcome {
    pub success: bool,
    /// Blocks drawn before success, or `max_steps` on failure.
    pub steps: u64,
}

/// One seeded trial. `attacker_fraction` is clamped to `[0, 1]`.
pub fn simulate_rewrite_attack(
    target_depth: u64,
    attacker_fraction: f64,
    max_steps: u64,
    seed: u64,
) -> AttackOutcome {
    let p = if attacker_fraction.is_nan() {
        0.0
    } else {
        attacker_fraction.clamp(0.0, 1.0)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Honest length minus attacker length.
    let mut deficit = i128::from(target_depth);
    for step in 1..=max_steps {
        if rng.random_bool(p) {
            deficit -= 1;
        } else {
            deficit += 1;
        }
        if deficit < 0 {
            return AttackOutcome {
                success: true,
                steps: step,
            };
        }
    }
    AttackOutcome {
        success: false,
        steps: max_steps,
    }
}

/// Fraction of `trials` successful attacks; trial `i` uses seed `base_seed + i`.
pub fn success_rate(
    target_depth: u64,
    attacker_fraction: f64,
    max_steps: u64,
    trials: u64,
    base_seed: u64,
) -> f64 {
    if trials == 0 {
        return 0.0;
    }
    let wins = (0..trials)
        .filter(|i| {
            simulate_rewrite_attack(
                target_depth,
                attacker_fraction,
                max_steps,
                base_seed.wrapping_add(*i),
            )
            .success
        })
        .count();
    wins as f64 / trials as f64
}

/// Depth an attacker must overcome to rewrite `txid` on `chain`: its current
/// confirmation count, or `None` if it is not mined.
pub fn rewrite_depth(chain: &Chain, txid: &Digest32) -> Option<u64> {
    match chain.confirmations(txid) {
        0 => None,
        n => Some(n),
    }
}
