//! Four-parameter protocol: key bit `k` is encoded as `|ψ_k>` and the
//! receiver measures in the basis `{|φ_0>, |φ_1>}` plus an inconclusive
//! outcome.
//!
//! ```text
//! |ψ_0> = α_s|0> + β_s|1>     |ψ_1> = γ_s|0> + δ_s|1>
//! |φ_0> = α_r|0> + β_r|1>     |φ_1> = γ_r|0> + δ_r|1>
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::attack::OneWayAttack;
use crate::error::{Error, Result};
use crate::minimize::nelder_mead;
use crate::qmath::{combine, cr, C64};
use crate::stats::AttackStats;
use crate::tomography::GramEstimates;

use super::{check_z_consistency, eval_two_pairs, minimize_over_re12, Coeffs, KeyRateReport, Protocol};

/// Number of random starts of [`optpi_optimize`] besides the BB84 start.
pub const OPTPI_RANDOM_STARTS: usize = 64;

const IMPROVEMENT: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptPiParams {
    pub alpha_s: f64,
    pub gamma_s: f64,
    pub alpha_r: f64,
    pub gamma_r: f64,
}

fn co(x: f64) -> f64 {
    (1.0 - x * x).max(0.0).sqrt()
}

impl OptPiParams {
    pub fn new(alpha_s: f64, gamma_s: f64, alpha_r: f64, gamma_r: f64) -> Result<Self> {
        for (name, v) in [("alpha_s", alpha_s), ("gamma_s", gamma_s), ("alpha_r", alpha_r), ("gamma_r", gamma_r)] {
            if !v.is_finite() || !(-1.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter(format!("{name} = {v} outside [-1, 1]")));
            }
        }
        Ok(Self { alpha_s, gamma_s, alpha_r, gamma_r })
    }

    /// BB84 encoding and decoding, `(1, 0, 1, 0)`.
    pub fn bb84() -> Self {
        Self { alpha_s: 1.0, gamma_s: 0.0, alpha_r: 1.0, gamma_r: 0.0 }
    }

    pub fn beta_s(&self) -> f64 {
        co(self.alpha_s)
    }
    pub fn delta_s(&self) -> f64 {
        co(self.gamma_s)
    }
    pub fn beta_r(&self) -> f64 {
        co(self.alpha_r)
    }
    pub fn delta_r(&self) -> f64 {
        co(self.gamma_r)
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.alpha_s, self.gamma_s, self.alpha_r, self.gamma_r]
    }

    fn clamped(x: &[f64]) -> Self {
        let c = |v: f64| if v.is_nan() { 0.0 } else { v.clamp(-1.0, 1.0) };
        Self { alpha_s: c(x[0]), gamma_s: c(x[1]), alpha_r: c(x[2]), gamma_r: c(x[3]) }
    }

    /// `f_0..f_3` over `e_0..e_3`.
    fn f(&self) -> [Coeffs; 4] {
        let (a, b, g, d) = (self.alpha_s, self.beta_s(), self.gamma_s, self.delta_s());
        [[a, 0.0, b, 0.0], [0.0, a, 0.0, b], [g, 0.0, d, 0.0], [0.0, g, 0.0, d]]
    }

    /// `g_1^0, g_1^1, g_2^0, g_2^1` over `e_0..e_3`.
    fn g(&self) -> [Coeffs; 4] {
        let f = self.f();
        let (ar, br, gr, dr) = (self.alpha_r, self.beta_r(), self.gamma_r, self.delta_r());
        let mix = |x: f64, u: &Coeffs, y: f64, v: &Coeffs| -> Coeffs { [0, 1, 2, 3].map(|i| x * u[i] + y * v[i]) };
        [mix(ar, &f[0], br, &f[1]), mix(gr, &f[2], dr, &f[3]), mix(gr, &f[0], dr, &f[1]), mix(ar, &f[2], br, &f[3])]
    }
}

/// Key rate at fixed encoder/decoder parameters.
pub fn optpi_keyrate(gram: &GramEstimates, stats: &AttackStats, params: OptPiParams) -> Result<KeyRateReport> {
    check_z_consistency(gram, stats)?;
    optpi_keyrate_gram(gram, params)
}

/// Key rate from Gram estimates alone.
pub fn optpi_keyrate_gram(gram: &GramEstimates, params: OptPiParams) -> Result<KeyRateReport> {
    let params = OptPiParams::new(params.alpha_s, params.gamma_s, params.alpha_r, params.gamma_r)?;
    let v = params.g();
    let (re12, e) = minimize_over_re12(gram, |g| {
        let e = eval_two_pairs(g, &v)?;
        if e.n.iter().sum::<f64>() <= 1e-14 {
            return Err(Error::InvalidParameter("every round is inconclusive (N' = 0)".into()));
        }
        Ok(e)
    })?;
    let mut report = KeyRateReport::new(Protocol::OptPi, gram.psi, e.entropy_bound, e.cond_shannon);
    report.params = Some(params);
    report.terms = e.terms;
    if !gram.free_re12().is_point() {
        report.minimizer.insert("re_12".into(), re12);
        report.minimizer.insert("re_03".into(), gram.sum_03_12 - re12);
    }
    Ok(report)
}

/// Multi-start simplex search for the parameters maximizing the key rate.
/// `budget` bounds the total number of key-rate evaluations.
pub fn optpi_optimize(
    gram: &GramEstimates,
    stats: &AttackStats,
    budget: usize,
    seed: u64,
) -> Result<(OptPiParams, KeyRateReport)> {
    check_z_consistency(gram, stats)?;
    optpi_optimize_gram(gram, budget, seed)
}

/// [`optpi_optimize`] on Gram estimates alone.
pub fn optpi_optimize_gram(gram: &GramEstimates, budget: usize, seed: u64) -> Result<(OptPiParams, KeyRateReport)> {
    if budget == 0 {
        return Err(Error::InvalidParameter("budget must be at least 1".into()));
    }
    let objective = |x: &[f64]| match optpi_keyrate_gram(gram, OptPiParams::clamped(x)) {
        Ok(r) => -r.rate,
        Err(_) => f64::INFINITY,
    };

    let start = OptPiParams::bb84();
    let mut best_x = start.as_array().to_vec();
    let mut best_v = objective(&best_x);
    let mut used = 1usize;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts = vec![best_x.clone()];
    for _ in 0..OPTPI_RANDOM_STARTS {
        starts.push((0..4).map(|_| rng.gen_range(-1.0..=1.0)).collect());
    }
    let per_start = (budget - 1) / starts.len();
    for x0 in &starts {
        let remaining = budget.saturating_sub(used);
        let cap = per_start.min(remaining);
        if cap < 6 {
            break;
        }
        let r = nelder_mead(&mut |x: &[f64]| objective(x), x0, 0.25, cap, 1e-10);
        used += r.evals;
        if r.value < best_v - IMPROVEMENT {
            best_v = r.value;
            best_x = r.x;
        }
    }
    let params = OptPiParams::clamped(&best_x);
    let report = optpi_keyrate_gram(gram, params)?;
    Ok((params, report))
}

/// The pairs `(g_1^0, g_1^1), (g_2^0, g_2^1)` computed directly from an attack.
pub fn optpi_pairs(attack: &OneWayAttack, params: OptPiParams) -> Vec<(Vec<C64>, Vec<C64>)> {
    let e = attack.vectors();
    let lin = |c: &Coeffs| combine(&[(cr(c[0]), &e[0]), (cr(c[1]), &e[1]), (cr(c[2]), &e[2]), (cr(c[3]), &e[3])]);
    let g = params.g().map(|c| lin(&c));
    let [g10, g11, g20, g21] = g;
    vec![(g10, g11), (g20, g21)]
}
