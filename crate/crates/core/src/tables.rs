//! Regeneration of the reproduction tables.

use crate::error::Result;
use crate::protocols::{b92_keyrate, b92_symmetric, sqkd_symmetric, threshold, Scenario, THRESHOLD_TOL};
use crate::stats::{AttackStats, PsiMode};
use crate::textio::{format_value, parse_stats, write_table, StatsFile};
use crate::tomography::estimate_one_way;

/// Key-distillation `alpha` values of the symmetric threshold table.
pub const TABLE1_ALPHAS: [f64; 5] = [0.0, 0.342, 0.643, 0.939, 0.985];
/// Key-distillation `alpha` values of the asymmetric-channel rate table.
pub const TABLE3_ALPHAS: [f64; 5] = [0.0, 0.1, 0.2, 0.342, 0.643];
/// Threshold search bracket for `Q`.
pub const THRESHOLD_BRACKET: (f64, f64) = (0.0, 0.3);

/// Previously published two-way thresholds (no mismatched statistics):
/// independent, correlated.
pub const SQKD_OLD_BOUNDS: [f64; 2] = [0.0457, 0.0534];

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdRow {
    pub psi: PsiMode,
    pub alpha_key: f64,
    /// Noise level where the rate crosses zero.
    pub q: f64,
}

/// B92 thresholds on the depolarizing channel for every `alpha` in
/// [`TABLE1_ALPHAS`], `Ψ3` first.
pub fn table1() -> Result<Vec<ThresholdRow>> {
    let mut rows = Vec::new();
    for psi in [PsiMode::Psi3, PsiMode::Psi4] {
        for &a in &TABLE1_ALPHAS {
            let (lo, hi) = THRESHOLD_BRACKET;
            let q = threshold(|q| b92_symmetric(q, a, psi), lo, hi, THRESHOLD_TOL)?;
            rows.push(ThresholdRow { psi, alpha_key: a, q });
        }
    }
    Ok(rows)
}

pub fn table1_csv() -> Result<String> {
    let rows: Vec<Vec<String>> = table1()?
        .iter()
        .map(|r| vec![r.psi.number().to_string(), format_value(r.alpha_key), format!("{:.3}", 100.0 * r.q)])
        .collect();
    write_table(&["psi", "alpha_key", "threshold_percent"], &rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub psi: PsiMode,
    pub alpha_key: f64,
    pub rate: f64,
}

impl RateRow {
    pub fn distillable(&self) -> f64 {
        self.rate.max(0.0)
    }
}

/// The bundled asymmetric-channel statistics.
pub fn table2_stats() -> Result<AttackStats> {
    match parse_stats(crate::TABLE2_STATS)? {
        StatsFile::OneWay(s) => Ok(s),
        StatsFile::TwoWay(_) => unreachable!("bundled fixture is one-way"),
    }
}

/// B92 rates on the bundled asymmetric channel for every `alpha` in
/// [`TABLE3_ALPHAS`]. The `Ψ3` row ignores the `|b>` statistics.
pub fn table3() -> Result<Vec<RateRow>> {
    let full = table2_stats()?;
    let mut rows = Vec::new();
    for psi in [PsiMode::Psi3, PsiMode::Psi4] {
        let stats = full.restricted(psi)?;
        let gram = estimate_one_way(&stats)?;
        for &a in &TABLE3_ALPHAS {
            let r = b92_keyrate(&gram, &stats, a)?;
            rows.push(RateRow { psi, alpha_key: a, rate: r.rate });
        }
    }
    Ok(rows)
}

pub fn table3_csv() -> Result<String> {
    let rows: Vec<Vec<String>> = table3()?
        .iter()
        .map(|r| {
            vec![
                r.psi.number().to_string(),
                format_value(r.alpha_key),
                format!("{:.4}", r.rate),
                format!("{:.4}", r.distillable()),
            ]
        })
        .collect();
    write_table(&["psi", "alpha_key", "rate", "distillable"], &rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SqkdRow {
    pub scenario: Scenario,
    pub old_bound: f64,
    pub q: f64,
}

/// Two-way thresholds, independent scenario first.
pub fn table5() -> Result<Vec<SqkdRow>> {
    let mut rows = Vec::new();
    for (scenario, old) in [Scenario::Independent, Scenario::Correlated].into_iter().zip(SQKD_OLD_BOUNDS) {
        let (lo, hi) = THRESHOLD_BRACKET;
        let q = threshold(|q| sqkd_symmetric(q, scenario), lo, hi, THRESHOLD_TOL)?;
        rows.push(SqkdRow { scenario, old_bound: old, q });
    }
    Ok(rows)
}

pub fn table5_csv() -> Result<String> {
    let rows: Vec<Vec<String>> = table5()?
        .iter()
        .map(|r| {
            vec![r.scenario.as_str().to_string(), format!("{:.2}", 100.0 * r.old_bound), format!("{:.3}", 100.0 * r.q)]
        })
        .collect();
    write_table(&["scenario", "old_bound_percent", "threshold_percent"], &rows)
}
