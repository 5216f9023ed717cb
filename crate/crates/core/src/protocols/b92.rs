//! Extended B92: key bit 0 is sent as `|0>`, key bit 1 as `|a>` with
//! `|a> = α|0> + ᾱ|1>`. BB84-style encoding is the `α = 0` case.
//!
//! Conditioned on a conclusive round, the adversary holds
//!
//! ```text
//! g_1^0 = ᾱ e0 - α e1          (A = 0, B = 0)
//! g_1^1 = α e1 + ᾱ e3          (A = 1, B = 1)
//! g_2^0 = e1                   (A = 0, B = 1)
//! g_2^1 = f1                   (A = 1, B = 0)
//! ```

use crate::attack::{f_states, OneWayAttack};
use crate::bound::{best_pairing_bound, PairTerm};
use crate::error::{Error, Result};
use crate::qmath::{combine, cr, C64};
use crate::stats::{AttackStats, PsiMode};
use crate::tomography::{GramEstimates, RealGram};

use super::{
    check_z_consistency, eval_two_pairs, minimize_over_re12, quad, Coeffs, KeyRateReport, Protocol, TwoPairEval,
};

/// How the four vectors are grouped into pairs for the entropy bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Pairing {
    /// `(g_1^0, g_1^1)` and `(g_2^0, g_2^1)`.
    #[default]
    Standard,
    /// The better of the two possible groupings.
    Best,
}

fn check_alpha_key(alpha: f64) -> Result<f64> {
    if !alpha.is_finite() || !(0.0..1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!("alpha_key = {alpha} must lie in [0, 1)")));
    }
    Ok((1.0 - alpha * alpha).sqrt())
}

fn coefficients(alpha: f64, alpha_bar: f64) -> [Coeffs; 4] {
    let (a, ab) = (alpha, alpha_bar);
    [[ab, -a, 0.0, 0.0], [0.0, a, 0.0, ab], [0.0, 1.0, 0.0, 0.0], [a * ab, -a * a, ab * ab, -a * ab]]
}

fn eval_with(g: &RealGram, v: &[Coeffs; 4], pairing: Pairing) -> Result<TwoPairEval> {
    match pairing {
        Pairing::Standard => eval_two_pairs(g, v),
        Pairing::Best => {
            let base = eval_two_pairs(g, v)?;
            let n = base.n;
            // A = 0 vectors are g_1^0, g_2^0; A = 1 vectors are g_1^1, g_2^1
            let zero = [v[0], v[2]];
            let one = [v[1], v[3]];
            let n0 = [n[0], n[2]];
            let n1 = [n[1], n[3]];
            let ov: Vec<Vec<f64>> = zero.iter().map(|a| one.iter().map(|b| quad(g, a, b)).collect()).collect();
            // a violation in any grouping rules the point out for all of them
            for i in 0..2 {
                for j in 0..2 {
                    PairTerm { n0: n0[i], n1: n1[j], re_overlap: ov[i][j] }.validate()?;
                }
            }
            let (best, perm) = best_pairing_bound(&n0, &n1, &ov)?;
            if best.s_lower <= base.entropy_bound {
                return Ok(base);
            }
            let terms = (0..2).map(|i| PairTerm { n0: n0[i], n1: n1[perm[i]], re_overlap: ov[i][perm[i]] }).collect();
            Ok(TwoPairEval { terms, entropy_bound: best.s_lower, ..base })
        }
    }
}

/// B92 key rate from Gram estimates; `stats` must carry the same Z-basis
/// statistics the estimates were built from.
pub fn b92_keyrate(gram: &GramEstimates, stats: &AttackStats, alpha_key: f64) -> Result<KeyRateReport> {
    b92_keyrate_with(gram, stats, alpha_key, Pairing::Standard)
}

pub fn b92_keyrate_with(
    gram: &GramEstimates,
    stats: &AttackStats,
    alpha_key: f64,
    pairing: Pairing,
) -> Result<KeyRateReport> {
    check_z_consistency(gram, stats)?;
    b92_keyrate_gram(gram, alpha_key, pairing)
}

/// B92 key rate from Gram estimates alone.
pub fn b92_keyrate_gram(gram: &GramEstimates, alpha_key: f64, pairing: Pairing) -> Result<KeyRateReport> {
    let ab = check_alpha_key(alpha_key)?;
    let v = coefficients(alpha_key, ab);
    let (re12, e) = minimize_over_re12(gram, |g| eval_with(g, &v, pairing))?;
    let protocol = if alpha_key == 0.0 { Protocol::Bb84 } else { Protocol::B92 };
    let mut report = KeyRateReport::new(protocol, gram.psi, e.entropy_bound, e.cond_shannon);
    report.alpha_key = Some(alpha_key);
    report.terms = e.terms;
    if !gram.free_re12().is_point() {
        report.minimizer.insert("re_12".into(), re12);
        report.minimizer.insert("re_03".into(), gram.sum_03_12 - re12);
    }
    Ok(report)
}

/// B92 on the depolarizing channel with parameter `q`.
pub fn b92_symmetric(q: f64, alpha_key: f64, psi: PsiMode) -> Result<KeyRateReport> {
    if !q.is_finite() || !(0.0..0.5).contains(&q) {
        return Err(Error::InvalidParameter(format!("Q = {q} outside [0, 1/2)")));
    }
    b92_keyrate_gram(&GramEstimates::depolarizing(psi, q)?, alpha_key, Pairing::Standard)
}

/// The four vectors `(g_1^0, g_1^1), (g_2^0, g_2^1)` computed directly from
/// an attack, for the exact-entropy oracle.
pub fn b92_pairs(attack: &OneWayAttack, alpha_key: f64) -> Result<Vec<(Vec<C64>, Vec<C64>)>> {
    let ab = check_alpha_key(alpha_key)?;
    let a = alpha_key;
    let [e0, e1, _, e3] = attack.vectors();
    let g10 = combine(&[(cr(ab), e0), (cr(-a), e1)]);
    let g11 = combine(&[(cr(a), e1), (cr(ab), e3)]);
    let (_, f1) = f_states(attack, a)?;
    Ok(vec![(g10, g11), (e1.clone(), f1)])
}
