//! Two-way semi-quantum protocol with reverse reconciliation.
//!
//! The adversary's freedom is the four overlaps `E_i = Re<g_i^0|g_i^1>`,
//! constrained by `E_1 + E_2 + E_3 + E_4 = c` and `|E_i| <= sqrt(N_i^0 N_i^1)`.

use crate::attack::{TwoWayAttack, HOPS};
use crate::bound::{conditional_shannon, lambda, PairTerm};
use crate::error::{Error, Result};
use crate::minimize::{box_grid_simplex, separable_convex};
use crate::qmath::{h2, ProbVector, C64};
use crate::stats::PsiMode;
use crate::tomography::{TwoWayGram, SQKD_PAIRS};

use super::{KeyRateReport, Protocol, Scenario};

/// Inner solver for the `E` minimization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SqkdSolver {
    /// Exact dual bisection on the separable convex objective.
    #[default]
    Dual,
    /// 41³ grid over `(E_2, E_3, E_4)` plus simplex refinement from the best
    /// 5 grid points.
    GridSimplex,
}

const GRID_PER_AXIS: usize = 41;
const GRID_STARTS: usize = 5;
const GRID_TOL: f64 = 1e-9;

struct Term {
    n0: f64,
    n1: f64,
    weight: f64,
}

impl Term {
    fn n(&self) -> f64 {
        self.n0 + self.n1
    }

    fn lambda(&self, e: f64) -> f64 {
        let n = self.n();
        let d = self.n0 - self.n1;
        (0.5 + (d * d + 4.0 * e * e).sqrt() / (2.0 * n)).clamp(0.5, 1.0)
    }

    /// `w (h(N^0/N) - h(λ(E)))`
    fn phi(&self, e: f64) -> f64 {
        if self.n() <= 0.0 {
            return 0.0;
        }
        self.weight * (h2(self.n0 / self.n()) - h2(self.lambda(e)))
    }

    fn dphi(&self, e: f64) -> f64 {
        let n = self.n();
        if n <= 0.0 || e == 0.0 {
            return 0.0;
        }
        let d = self.n0 - self.n1;
        let root = (d * d + 4.0 * e * e).sqrt();
        let l = self.lambda(e);
        if l >= 1.0 {
            return if e > 0.0 { f64::INFINITY } else { f64::NEG_INFINITY };
        }
        self.weight * (l / (1.0 - l)).log2() * 2.0 * e / (n * root)
    }
}

fn terms(g: &TwoWayGram) -> Result<Vec<Term>> {
    let pn = g.pair_norms();
    let total: f64 = pn.iter().map(|(a, b)| a + b).sum();
    if !(total > 0.0) {
        return Err(Error::Inconsistent("two-way norms sum to zero".into()));
    }
    Ok(pn.iter().map(|&(n0, n1)| Term { n0, n1, weight: (n0 + n1) / total }).collect())
}

/// `H(B|A)` from the observed `Z`-`Z` joint distribution.
fn cond_shannon_ba(g: &TwoWayGram) -> Result<f64> {
    let mut joint = [0.0; 4];
    for (h, &(b, _)) in HOPS.iter().enumerate() {
        for a in 0..2 {
            joint[b * 2 + a] += 0.5 * g.norms[h][a];
        }
    }
    conditional_shannon(&ProbVector::from_weights(&joint)?, (2, 2))
}

pub fn sqkd_keyrate(g: &TwoWayGram) -> Result<KeyRateReport> {
    sqkd_keyrate_with(g, SqkdSolver::Dual)
}

pub fn sqkd_keyrate_with(g: &TwoWayGram, solver: SqkdSolver) -> Result<KeyRateReport> {
    if g.reflect.psi == PsiMode::Psi4 {
        return Err(Error::InvalidParameter("the two-way protocol supports Psi3 statistics only".into()));
    }
    let terms = terms(g)?;
    let caps = g.caps;
    let total_cap: f64 = caps.iter().sum();
    if g.c.abs() > total_cap + 1e-9 {
        return Err(Error::Infeasible(format!(
            "|c| = {} exceeds the sum of Cauchy-Schwarz caps {total_cap}",
            g.c.abs()
        )));
    }
    let objective = |e: &[f64]| -> f64 { terms.iter().zip(e).map(|(t, &x)| t.phi(x)).sum() };
    let e: Vec<f64> = match solver {
        SqkdSolver::Dual => {
            // c is allowed to exceed the caps by rounding noise
            let c = g.c.clamp(-total_cap, total_cap);
            separable_convex(&|i, x| terms[i].dphi(x), &caps, c)?
        }
        SqkdSolver::GridSimplex => {
            let f = |y: &[f64]| -> f64 {
                if y.iter().zip(&caps[1..]).any(|(v, k)| v.abs() > k + 1e-12) {
                    return f64::INFINITY;
                }
                let e1 = g.c - y.iter().sum::<f64>();
                if e1.abs() > caps[0] + 1e-12 {
                    return f64::INFINITY;
                }
                objective(&[e1, y[0], y[1], y[2]])
            };
            let lo: Vec<f64> = caps[1..].iter().map(|k| -k).collect();
            let hi: Vec<f64> = caps[1..].to_vec();
            let r = box_grid_simplex(&f, &lo, &hi, GRID_PER_AXIS, GRID_STARTS, GRID_TOL);
            if !r.value.is_finite() {
                return Err(Error::Infeasible("no grid point satisfies the E constraints".into()));
            }
            let e1 = g.c - r.x.iter().sum::<f64>();
            vec![e1, r.x[0], r.x[1], r.x[2]]
        }
    };
    let pair_terms: Vec<PairTerm> =
        terms.iter().zip(&e).map(|(t, &x)| PairTerm { n0: t.n0, n1: t.n1, re_overlap: x }).collect();
    // cross-check through the generic bound
    for t in &pair_terms {
        if t.n0 + t.n1 > 0.0 {
            lambda(t)?;
        }
    }
    let s = objective(&e);
    let h = cond_shannon_ba(g)?;
    let mut report = KeyRateReport::new(Protocol::Sqkd, PsiMode::Psi3, s, h);
    report.terms = pair_terms;
    for (i, x) in e.iter().enumerate() {
        report.minimizer.insert(format!("E_{}", i + 1), *x);
    }
    Ok(report)
}

/// Symmetric two-way channel with error `q` in each direction.
pub fn sqkd_symmetric(q: f64, scenario: Scenario) -> Result<KeyRateReport> {
    if !q.is_finite() || !(0.0..0.5).contains(&q) {
        return Err(Error::InvalidParameter(format!("Q = {q} outside [0, 1/2)")));
    }
    sqkd_keyrate(&TwoWayGram::symmetric(q, scenario.qa(q))?)
}

/// The four pairs `(g_i^0, g_i^1)` computed directly from a two-way attack.
pub fn sqkd_pairs(attack: &TwoWayAttack) -> Vec<(Vec<C64>, Vec<C64>)> {
    let vec_of = |(h, k): (usize, usize)| -> Vec<C64> {
        let (i, j) = HOPS[h];
        attack.hop(i, j)[k].clone()
    };
    SQKD_PAIRS.iter().map(|&(a, b)| (vec_of(a), vec_of(b))).collect()
}
