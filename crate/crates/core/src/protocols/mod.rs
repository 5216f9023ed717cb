//! Key-rate computations and threshold search.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::bound::{conditional_shannon, theorem1_bound, PairTerm};
use crate::error::{Error, Result};
use crate::minimize::grid_golden;
use crate::qmath::ProbVector;
use crate::stats::{AttackStats, Label, PsiMode};
use crate::tomography::{GramEstimates, RealGram};

mod b92;
mod optpi;
mod sqkd;

pub use b92::{b92_keyrate, b92_keyrate_gram, b92_keyrate_with, b92_pairs, b92_symmetric, Pairing};
pub use optpi::{
    optpi_keyrate, optpi_keyrate_gram, optpi_optimize, optpi_optimize_gram, optpi_pairs, OptPiParams,
    OPTPI_RANDOM_STARTS,
};
pub use sqkd::{sqkd_keyrate, sqkd_keyrate_with, sqkd_pairs, sqkd_symmetric, SqkdSolver};

/// Grid size of the one-dimensional inner minimization.
pub const INNER_GRID: usize = 2001;
/// Golden-section tolerance of the one-dimensional inner minimization.
pub const INNER_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Protocol {
    B92,
    Bb84,
    OptPi,
    Sqkd,
}

impl Protocol {
    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::B92 => "b92",
            Protocol::Bb84 => "bb84",
            Protocol::OptPi => "optpi",
            Protocol::Sqkd => "sqkd",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Protocol {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "b92" => Ok(Protocol::B92),
            "bb84" => Ok(Protocol::Bb84),
            "optpi" => Ok(Protocol::OptPi),
            "sqkd" => Ok(Protocol::Sqkd),
            _ => Err(Error::InvalidParameter(format!("unknown protocol '{s}'"))),
        }
    }
}

/// Reflection-error model for symmetric two-way channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    /// Forward and reverse noise act independently: `Q_A = 2Q(1-Q)`.
    Independent,
    /// `Q_A = Q`.
    Correlated,
}

impl Scenario {
    pub fn qa(self, q: f64) -> f64 {
        match self {
            Scenario::Independent => 2.0 * q * (1.0 - q),
            Scenario::Correlated => q,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Independent => "independent",
            Scenario::Correlated => "correlated",
        }
    }
}

impl FromStr for Scenario {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "independent" => Ok(Scenario::Independent),
            "correlated" => Ok(Scenario::Correlated),
            _ => Err(Error::InvalidParameter(format!("unknown scenario '{s}'"))),
        }
    }
}

/// Outcome of a key-rate computation.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyRateReport {
    pub protocol: Protocol,
    pub psi: PsiMode,
    /// Key-distillation `alpha` for B92 / BB84.
    pub alpha_key: Option<f64>,
    /// `entropy_bound - cond_shannon`, possibly negative.
    pub rate: f64,
    pub entropy_bound: f64,
    pub cond_shannon: f64,
    /// Values of the free parameters at the adversary-optimal point.
    pub minimizer: BTreeMap<String, f64>,
    pub params: Option<OptPiParams>,
    /// Pair terms entering the entropy bound at the minimizer.
    pub terms: Vec<PairTerm>,
}

impl KeyRateReport {
    pub(crate) fn new(protocol: Protocol, psi: PsiMode, entropy_bound: f64, cond_shannon: f64) -> Self {
        Self {
            protocol,
            psi,
            alpha_key: None,
            rate: entropy_bound - cond_shannon,
            entropy_bound,
            cond_shannon,
            minimizer: BTreeMap::new(),
            params: None,
            terms: Vec::new(),
        }
    }

    /// `max(rate, 0)`
    pub fn distillable(&self) -> f64 {
        self.rate.max(0.0)
    }
}

/// Linear combination of the ancilla vectors `e0..e3` with real coefficients.
pub(crate) type Coeffs = [f64; 4];

/// `Re<u|v>` for real combinations `u = Σ u_i e_i`, `v = Σ v_i e_i`.
pub(crate) fn quad(g: &RealGram, u: &Coeffs, v: &Coeffs) -> f64 {
    let mut s = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            s += u[i] * g[i][j] * v[j];
        }
    }
    s
}

/// Entropy bound and `H(A|B)` for a four-vector decomposition
/// `g_1^0, g_1^1, g_2^0, g_2^1` where `(A, B)` outcomes are
/// `(0,0), (1,1), (0,1), (1,0)` respectively.
pub(crate) struct TwoPairEval {
    pub n: [f64; 4],
    pub terms: Vec<PairTerm>,
    pub entropy_bound: f64,
    pub cond_shannon: f64,
}

pub(crate) fn eval_two_pairs(g: &RealGram, v: &[Coeffs; 4]) -> Result<TwoPairEval> {
    let n = [quad(g, &v[0], &v[0]), quad(g, &v[1], &v[1]), quad(g, &v[2], &v[2]), quad(g, &v[3], &v[3])];
    let terms = vec![
        PairTerm { n0: n[0], n1: n[1], re_overlap: quad(g, &v[0], &v[1]) },
        PairTerm { n0: n[2], n1: n[3], re_overlap: quad(g, &v[2], &v[3]) },
    ];
    let entropy_bound = theorem1_bound(&terms)?.s_lower;
    let cond_shannon = cond_shannon_four(&n)?;
    Ok(TwoPairEval { n, terms, entropy_bound, cond_shannon })
}

/// `H(A|B)` from `N_{1,0}, N_{1,1}, N_{2,0}, N_{2,1}`.
pub(crate) fn cond_shannon_four(n: &[f64; 4]) -> Result<f64> {
    // joint indexed a * 2 + b
    let joint = ProbVector::from_weights(&[n[0], n[2], n[3], n[1]])?;
    conditional_shannon(&joint, (2, 2))
}

/// Minimizes the rate over the free `Re<e_1|e_2>` interval of `gram`
/// (a point for `Ψ4`). Points whose pair terms violate Cauchy-Schwarz are
/// not realizable by any attack and are skipped.
pub(crate) fn minimize_over_re12(
    gram: &GramEstimates,
    eval: impl Fn(&RealGram) -> Result<TwoPairEval>,
) -> Result<(f64, TwoPairEval)> {
    let iv = gram.free_re12();
    if iv.is_point() {
        return Ok((iv.lo, eval(&gram.real_gram(iv.lo))?));
    }
    let objective = |x: f64| match eval(&gram.real_gram(x)) {
        Ok(e) => e.entropy_bound - e.cond_shannon,
        Err(_) => f64::INFINITY,
    };
    let (x, v) = grid_golden(objective, iv.lo, iv.hi, INNER_GRID, INNER_TOL);
    if !v.is_finite() {
        return Err(Error::Infeasible(format!("no value of Re<e1|e2> in {iv} yields a consistent decomposition")));
    }
    Ok((x, eval(&gram.real_gram(x))?))
}

/// Gram norms must be the Z-basis statistics of `stats`.
pub(crate) fn check_z_consistency(gram: &GramEstimates, stats: &AttackStats) -> Result<()> {
    let z =
        [(Label::Zero, Label::Zero), (Label::Zero, Label::One), (Label::One, Label::Zero), (Label::One, Label::One)];
    for (i, (s, o)) in z.into_iter().enumerate() {
        let p = stats.require(s, o)?;
        if (p - gram.norms[i]).abs() > 1e-9 {
            return Err(Error::Inconsistent(format!("p,{s},{o} = {p} disagrees with the Gram norm {}", gram.norms[i])));
        }
    }
    Ok(())
}

/// Bisection for the noise level where `rate(q)` crosses zero.
pub fn threshold(rate: impl Fn(f64) -> Result<KeyRateReport>, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    if !(lo < hi) || !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("bad bracket [{lo}, {hi}] or tolerance {tol}")));
    }
    let (mut a, mut b) = (lo, hi);
    let (ra, rb) = (rate(a)?.rate, rate(b)?.rate);
    if !(ra > 0.0 && rb < 0.0) {
        return Err(Error::NoSignChange { lo, hi, rate_lo: ra, rate_hi: rb });
    }
    while b - a > tol {
        let m = 0.5 * (a + b);
        if rate(m)?.rate > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Default bisection tolerance.
pub const THRESHOLD_TOL: f64 = 1e-4;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_requires_sign_change() {
        let mk = |r: f64| Ok(KeyRateReport::new(Protocol::B92, PsiMode::Psi4, r, 0.0));
        assert!(matches!(threshold(|q| mk(0.3 - q), 0.0, 0.2, 1e-4), Err(Error::NoSignChange { .. })));
        let t = threshold(|q| mk(0.1 - q), 0.0, 0.5, 1e-6).unwrap();
        assert!((t - 0.1).abs() < 1e-6);
    }

    #[test]
    fn scenario_qa() {
        assert_eq!(Scenario::Correlated.qa(0.1), 0.1);
        assert!((Scenario::Independent.qa(0.1) - 0.18).abs() < 1e-15);
        assert_eq!("independent".parse::<Scenario>().unwrap(), Scenario::Independent);
        assert!("x".parse::<Scenario>().is_err());
    }
}
