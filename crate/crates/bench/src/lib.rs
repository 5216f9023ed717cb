//! Shared inputs for the benchmarks.

use qkrate::attack::simulate_stats;
use qkrate::tomography::estimate_one_way;
use qkrate::{AttackStats, BasisConfig, GramEstimates, OneWayAttack, PsiMode};

/// Exact statistics and estimates of a random 4-dimensional attack.
pub fn random_inputs(seed: u64, psi: PsiMode) -> (GramEstimates, AttackStats) {
    let att = OneWayAttack::random(seed, 4).expect("valid dimension");
    let stats = simulate_stats(&att, &BasisConfig::balanced(), psi);
    let gram = estimate_one_way(&stats).expect("exact stats are consistent");
    (gram, stats)
}
