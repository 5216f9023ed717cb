//! The pairwise conditional-entropy lower bound and classical conditional
//! entropies.
//!
//! For a state `ρ_AE = Σ_i (|0><0| ⊗ P(g_i^0) + |1><1| ⊗ P(g_i^1)) / N`,
//!
//! ```text
//! S(A|E) >= Σ_i (N_i^0 + N_i^1)/N · (h(N_i^0/(N_i^0+N_i^1)) - h(λ_i))
//! λ_i = 1/2 + sqrt((N_i^0 - N_i^1)² + 4 Re²<g_i^0|g_i^1>) / (2(N_i^0 + N_i^1))
//! ```
//!
//! where terms with a zero norm contribute nothing.

use crate::error::{Error, Result};
use crate::qmath::{
    cr, exact_conditional_entropy, h2, inner, norm_sqr, shannon_entropy, ComplexMatrix, ProbVector, C64,
};
use crate::tomography::CS_TOL;

/// Slack allowed on `λ` beyond `[1/2, 1]` before it is treated as an error.
pub const LAMBDA_SLACK: f64 = 1e-9;

/// Norms and real overlap of one pair `(g_i^0, g_i^1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairTerm {
    pub n0: f64,
    pub n1: f64,
    pub re_overlap: f64,
}

impl PairTerm {
    /// Validates non-negative norms and the Cauchy-Schwarz inequality.
    pub fn new(n0: f64, n1: f64, re_overlap: f64) -> Result<Self> {
        let t = Self { n0, n1, re_overlap };
        t.validate()?;
        Ok(t)
    }

    pub fn from_vectors(g0: &[C64], g1: &[C64]) -> Self {
        Self { n0: norm_sqr(g0), n1: norm_sqr(g1), re_overlap: inner(g0, g1).re }
    }

    pub fn cs_excess(&self) -> f64 {
        self.re_overlap.abs() - (self.n0.max(0.0) * self.n1.max(0.0)).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.n0.is_finite() && self.n1.is_finite() && self.re_overlap.is_finite()) {
            return Err(Error::Domain("non-finite pair term".into()));
        }
        if self.n0 < -1e-12 || self.n1 < -1e-12 {
            return Err(Error::Domain(format!("negative norm in pair term ({}, {})", self.n0, self.n1)));
        }
        let excess = self.cs_excess();
        if excess > CS_TOL {
            return Err(Error::Inconsistent(format!(
                "|Re<g0|g1>| = {} exceeds sqrt({} * {}) by {excess:e}",
                self.re_overlap.abs(),
                self.n0,
                self.n1
            )));
        }
        Ok(())
    }
}

/// Contribution of one pair to the bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TermResult {
    pub weight: f64,
    pub lambda: f64,
    pub s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundResult {
    pub s_lower: f64,
    pub per_term: Vec<TermResult>,
}

/// `λ` for one term, clamped into `[1/2, 1]`.
pub fn lambda(term: &PairTerm) -> Result<f64> {
    let total = term.n0 + term.n1;
    let l = 0.5 + ((term.n0 - term.n1).powi(2) + 4.0 * term.re_overlap.powi(2)).sqrt() / (2.0 * total);
    if l > 1.0 + LAMBDA_SLACK {
        return Err(Error::Inconsistent(format!("lambda = {l} exceeds 1")));
    }
    Ok(l.clamp(0.5, 1.0))
}

/// The pairwise bound on `S(A|E)`.
pub fn theorem1_bound(terms: &[PairTerm]) -> Result<BoundResult> {
    let n: f64 = terms.iter().map(|t| t.n0.max(0.0) + t.n1.max(0.0)).sum();
    if terms.is_empty() || !(n > 0.0) {
        return Err(Error::Domain("bound needs at least one term with positive norm".into()));
    }
    let mut s_lower = 0.0;
    let mut per_term = Vec::with_capacity(terms.len());
    for t in terms {
        t.validate()?;
        let (n0, n1) = (t.n0.max(0.0), t.n1.max(0.0));
        let weight = (n0 + n1) / n;
        if n0 <= 0.0 || n1 <= 0.0 {
            per_term.push(TermResult { weight, lambda: 1.0, s: 0.0 });
            continue;
        }
        let l = lambda(&PairTerm { n0, n1, re_overlap: t.re_overlap })?;
        let s = (h2(n0 / (n0 + n1)) - h2(l)).max(0.0);
        s_lower += weight * s;
        per_term.push(TermResult { weight, lambda: l, s });
    }
    Ok(BoundResult { s_lower, per_term })
}

/// Best bound over all ways of pairing the `g^0` list with the `g^1` list.
/// `overlaps[i][j] = Re<g_i^0|g_j^1>`. Pairings that violate Cauchy-Schwarz
/// are skipped. Returns the bound and the permutation (`g_i^0 ↔ g_{perm[i]}^1`).
pub fn best_pairing_bound(n0: &[f64], n1: &[f64], overlaps: &[Vec<f64>]) -> Result<(BoundResult, Vec<usize>)> {
    let k = n0.len();
    if n1.len() != k || overlaps.len() != k || overlaps.iter().any(|r| r.len() != k) {
        return Err(Error::Dimension("pairing inputs must be k, k and k x k".into()));
    }
    if k > 4 {
        return Err(Error::InvalidParameter(format!("exhaustive pairing supports at most 4 terms, got {k}")));
    }
    let mut best: Option<(BoundResult, Vec<usize>)> = None;
    for perm in permutations(k) {
        let terms: Vec<PairTerm> =
            (0..k).map(|i| PairTerm { n0: n0[i], n1: n1[perm[i]], re_overlap: overlaps[i][perm[i]] }).collect();
        let Ok(r) = theorem1_bound(&terms) else { continue };
        if best.as_ref().map_or(true, |(b, _)| r.s_lower > b.s_lower) {
            best = Some((r, perm));
        }
    }
    best.ok_or_else(|| Error::Infeasible("no pairing satisfies Cauchy-Schwarz".into()))
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out.sort();
    out
}

/// `H(A|B) = H(joint) - H(B)` for a joint distribution indexed `a * rb + b`.
pub fn conditional_shannon(joint: &ProbVector, arity: (usize, usize)) -> Result<f64> {
    let (ra, rb) = arity;
    if joint.len() != ra * rb {
        return Err(Error::Dimension(format!("joint of length {} is not {ra}x{rb}", joint.len())));
    }
    let p = joint.as_slice();
    let marginal: Vec<f64> = (0..rb).map(|b| (0..ra).map(|a| p[a * rb + b]).sum()).collect();
    Ok(shannon_entropy(joint) - shannon_entropy(&ProbVector::new(marginal)?))
}

/// `(1/N) Σ_i (|0><0| ⊗ P(g_i^0) + |1><1| ⊗ P(g_i^1))` on `C^2 ⊗ C^d`.
pub fn theorem_state(pairs: &[(Vec<C64>, Vec<C64>)]) -> Result<ComplexMatrix> {
    let d = pairs.first().map(|(g, _)| g.len()).unwrap_or(0);
    if d == 0 || pairs.iter().any(|(a, b)| a.len() != d || b.len() != d) {
        return Err(Error::Dimension("pair vectors must share a non-zero length".into()));
    }
    let n: f64 = pairs.iter().map(|(a, b)| norm_sqr(a) + norm_sqr(b)).sum();
    if !(n > 0.0) {
        return Err(Error::Domain("all pair vectors are zero".into()));
    }
    let mut rho = ComplexMatrix::zeros(2 * d, 2 * d);
    for (g0, g1) in pairs {
        for (bit, g) in [(0, g0), (1, g1)] {
            for r in 0..d {
                for s in 0..d {
                    rho[(bit * d + r, bit * d + s)] += g[r] * g[s].conj() * cr(1.0 / n);
                }
            }
        }
    }
    Ok(rho)
}

/// Exact `S(A|E)` against the pairwise bound on the same decomposition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleGap {
    pub exact: f64,
    pub bound: f64,
    pub gap: f64,
}

pub fn oracle_gap(pairs: &[(Vec<C64>, Vec<C64>)]) -> Result<OracleGap> {
    let rho = theorem_state(pairs)?;
    let d = pairs[0].0.len();
    let exact = exact_conditional_entropy(&rho, (2, d))?;
    let terms: Vec<PairTerm> = pairs.iter().map(|(a, b)| PairTerm::from_vectors(a, b)).collect();
    let bound = theorem1_bound(&terms)?.s_lower;
    Ok(OracleGap { exact, bound, gap: exact - bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::c;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn trivial_terms() {
        let r = theorem1_bound(&[PairTerm::new(0.5, 0.5, 0.5).unwrap()]).unwrap();
        assert_abs_diff_eq!(r.per_term[0].lambda, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.s_lower, 1.0, epsilon = 1e-12);
        let r = theorem1_bound(&[PairTerm::new(0.5, 0.5, 0.0).unwrap()]).unwrap();
        assert_abs_diff_eq!(r.per_term[0].lambda, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(r.s_lower, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_norm_terms_contribute_nothing() {
        let r =
            theorem1_bound(&[PairTerm::new(0.4, 0.0, 0.0).unwrap(), PairTerm::new(0.3, 0.3, 0.3).unwrap()]).unwrap();
        assert_eq!(r.per_term[0].s, 0.0);
        assert_abs_diff_eq!(r.s_lower, 0.6, epsilon = 1e-12);
        assert!(theorem1_bound(&[PairTerm { n0: 0.0, n1: 0.0, re_overlap: 0.0 }]).is_err());
        assert!(theorem1_bound(&[]).is_err());
    }

    #[test]
    fn cauchy_schwarz_violation_is_rejected() {
        assert!(PairTerm::new(0.25, 0.25, 0.3).is_err());
        assert!(PairTerm::new(0.25, 0.25, 0.25 + 1e-12).is_ok());
    }

    #[test]
    fn worked_example_terms() {
        // published intermediate values; see also the acceptance suite
        let terms = [PairTerm::new(0.835, 0.816, 0.713).unwrap(), PairTerm::new(0.132, 0.024, 0.03).unwrap()];
        let r = theorem1_bound(&terms).unwrap();
        assert!((r.per_term[0].lambda - 0.932).abs() < 0.001);
        assert!((r.per_term[1].lambda - 0.895).abs() < 0.001);
        assert!((r.s_lower - 0.598).abs() < 0.002);
        let w: f64 = r.per_term.iter().map(|t| t.weight).sum();
        assert_abs_diff_eq!(w, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn conditional_shannon_examples() {
        let p = ProbVector::new(vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        assert_abs_diff_eq!(conditional_shannon(&p, (2, 2)).unwrap(), 0.0, epsilon = 1e-15);
        let p = ProbVector::new(vec![0.25; 4]).unwrap();
        assert_abs_diff_eq!(conditional_shannon(&p, (2, 2)).unwrap(), 1.0, epsilon = 1e-15);
        assert!(conditional_shannon(&p, (2, 3)).is_err());
    }

    #[test]
    fn best_pairing_never_worse_than_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let vecs: Vec<Vec<C64>> = (0..6)
                .map(|_| (0..3).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect())
                .collect();
            let zero = &vecs[..3];
            let one = &vecs[3..];
            let n0: Vec<f64> = zero.iter().map(|v| norm_sqr(v)).collect();
            let n1: Vec<f64> = one.iter().map(|v| norm_sqr(v)).collect();
            let ov: Vec<Vec<f64>> = zero.iter().map(|a| one.iter().map(|b| inner(a, b).re).collect()).collect();
            let (best, perm) = best_pairing_bound(&n0, &n1, &ov).unwrap();
            let ident: Vec<PairTerm> = (0..3).map(|i| PairTerm::new(n0[i], n1[i], ov[i][i]).unwrap()).collect();
            assert!(best.s_lower >= theorem1_bound(&ident).unwrap().s_lower - 1e-15);
            assert_eq!(perm.len(), 3);

            // every pairing is a valid decomposition of the same state
            let pairs: Vec<(Vec<C64>, Vec<C64>)> = (0..3).map(|i| (zero[i].clone(), one[perm[i]].clone())).collect();
            let gap = oracle_gap(&pairs).unwrap();
            assert!(gap.gap >= -1e-8);
        }
        assert_eq!(permutations(4).len(), 24);
    }

    #[test]
    fn oracle_identity_state() {
        let g0 = vec![cr(1.0), cr(0.0)];
        let g1 = vec![cr(1.0), cr(0.0)];
        let gap = oracle_gap(&[(g0, g1)]).unwrap();
        assert_abs_diff_eq!(gap.exact, 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(gap.bound, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn oracle_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..30 {
            let k = rng.gen_range(1..=4);
            let d = rng.gen_range(2..=5);
            let pairs: Vec<(Vec<C64>, Vec<C64>)> = (0..k)
                .map(|_| {
                    let mut v = || (0..d).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
                    (v(), v())
                })
                .collect();
            let gap = oracle_gap(&pairs).unwrap();
            assert!(gap.gap >= -1e-8, "gap {}", gap.gap);
        }
    }

    proptest! {
        #[test]
        fn bound_is_permutation_invariant(
            raw in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0, -1.0f64..1.0), 1..5),
            rot in 0usize..4,
        ) {
            let terms: Vec<PairTerm> = raw
                .iter()
                .map(|&(a, b, t)| PairTerm { n0: a, n1: b, re_overlap: t * (a * b).sqrt() })
                .collect();
            prop_assume!(terms.iter().any(|t| t.n0 + t.n1 > 0.0));
            let mut shifted = terms.clone();
            shifted.rotate_left(rot % terms.len());
            shifted.reverse();
            let a = theorem1_bound(&terms).unwrap().s_lower;
            let b = theorem1_bound(&shifted).unwrap().s_lower;
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn bound_increases_with_overlap(a in 0.01f64..1.0, b in 0.01f64..1.0, t1 in 0.0f64..1.0, t2 in 0.0f64..1.0) {
            let cap = (a * b).sqrt();
            let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
            let s_lo = theorem1_bound(&[PairTerm { n0: a, n1: b, re_overlap: lo * cap }]).unwrap();
            let s_hi = theorem1_bound(&[PairTerm { n0: a, n1: b, re_overlap: -hi * cap }]).unwrap();
            prop_assert!(s_hi.s_lower >= s_lo.s_lower - 1e-12);
        }

        #[test]
        fn lambda_dominates_bias(a in 0.0f64..1.0, b in 0.0f64..1.0, t in -1.0f64..1.0) {
            prop_assume!(a > 0.0 && b > 0.0);
            let term = PairTerm { n0: a, n1: b, re_overlap: t * (a * b).sqrt() };
            let l = lambda(&term).unwrap();
            prop_assert!(l >= a.max(b) / (a + b) - 1e-12);
            let r = theorem1_bound(&[term]).unwrap();
            prop_assert!(r.per_term[0].s >= 0.0);
            prop_assert!(r.per_term[0].s <= h2(a / (a + b)) + 1e-12);
        }
    }
}
