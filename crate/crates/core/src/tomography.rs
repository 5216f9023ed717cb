//! Inversion of observed statistics into estimates of the adversary's
//! ancilla Gram matrix `<e_i|e_j>`.

use std::fmt;

use crate::attack::{simulate_stats, BasisConfig, OneWayAttack, HOPS};
use crate::error::{Error, Result};
use crate::stats::{AttackStats, Label, PsiMode, TwoWayStats};

/// Slack on the Cauchy-Schwarz caps.
pub const CS_TOL: f64 = 1e-9;

/// Closed interval; a point estimate has `lo == hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn point(x: f64) -> Self {
        Self { lo: x, hi: x }
    }

    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) {
            return Err(Error::InvalidParameter(format!("interval [{lo}, {hi}] is empty")));
        }
        Ok(Self { lo, hi })
    }

    /// `[-r, r]`
    pub fn symmetric(r: f64) -> Self {
        let r = r.abs();
        Self { lo: -r, hi: r }
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        x >= self.lo - tol && x <= self.hi + tol
    }

    pub fn neg(&self) -> Self {
        Self { lo: -self.hi, hi: -self.lo }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_point() {
            write!(f, "{}", self.lo)
        } else {
            write!(f, "[{}, {}]", self.lo, self.hi)
        }
    }
}

/// Index pairs of the estimated inner products, in storage order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pair {
    P01,
    P23,
    P02,
    P13,
    P03,
    P12,
}

impl Pair {
    pub const ALL: [Pair; 6] = [Pair::P01, Pair::P23, Pair::P02, Pair::P13, Pair::P03, Pair::P12];

    pub fn indices(self) -> (usize, usize) {
        match self {
            Pair::P01 => (0, 1),
            Pair::P23 => (2, 3),
            Pair::P02 => (0, 2),
            Pair::P13 => (1, 3),
            Pair::P03 => (0, 3),
            Pair::P12 => (1, 2),
        }
    }

    /// Two-digit suffix used in file keys, e.g. `"01"`.
    pub fn suffix(self) -> &'static str {
        match self {
            Pair::P01 => "01",
            Pair::P23 => "23",
            Pair::P02 => "02",
            Pair::P13 => "13",
            Pair::P03 => "03",
            Pair::P12 => "12",
        }
    }

    pub fn from_suffix(s: &str) -> Option<Pair> {
        Pair::ALL.into_iter().find(|p| p.suffix() == s)
    }

    fn slot(self) -> usize {
        self as usize
    }
}

/// Estimates of `Re<e_i|e_j>` and `Im<e_i|e_j>` plus the norms `<e_i|e_i>`.
///
/// `Re<e_0|e_3> + Re<e_1|e_2>` is always point-identified and stored as
/// `sum_03_12`; with `Ψ3` the split between the two is only known to lie in
/// the stored intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct GramEstimates {
    pub psi: PsiMode,
    pub norms: [f64; 4],
    pub re: [Interval; 6],
    pub im: [Interval; 6],
    pub sum_03_12: f64,
}

/// Real parts of the Gram matrix at one admissible point.
pub type RealGram = [[f64; 4]; 4];

impl GramEstimates {
    pub fn re(&self, p: Pair) -> Interval {
        self.re[p.slot()]
    }

    pub fn im(&self, p: Pair) -> Interval {
        self.im[p.slot()]
    }

    pub fn set_re(&mut self, p: Pair, v: Interval) {
        self.re[p.slot()] = v;
    }

    pub fn set_im(&mut self, p: Pair, v: Interval) {
        self.im[p.slot()] = v;
    }

    /// `sqrt(<e_i|e_i><e_j|e_j>)`
    pub fn cs_cap(&self, p: Pair) -> f64 {
        let (i, j) = p.indices();
        (self.norms[i].max(0.0) * self.norms[j].max(0.0)).sqrt()
    }

    /// Range of the one free parameter `Re<e_1|e_2>`; a point for `Ψ4`.
    pub fn free_re12(&self) -> Interval {
        self.re(Pair::P12)
    }

    /// The real Gram matrix with `Re<e_1|e_2> = re12` and
    /// `Re<e_0|e_3> = sum_03_12 - re12`.
    pub fn real_gram(&self, re12: f64) -> RealGram {
        let mut g = [[0.0; 4]; 4];
        for i in 0..4 {
            g[i][i] = self.norms[i];
        }
        for p in [Pair::P01, Pair::P23, Pair::P02, Pair::P13] {
            let (i, j) = p.indices();
            let v = self.re(p).mid();
            g[i][j] = v;
            g[j][i] = v;
        }
        g[1][2] = re12;
        g[2][1] = re12;
        g[0][3] = self.sum_03_12 - re12;
        g[3][0] = g[0][3];
        g
    }

    /// Estimates of the depolarizing channel with parameter `q`.
    pub fn depolarizing(psi: PsiMode, q: f64) -> Result<Self> {
        if !q.is_finite() || !(0.0..=1.0).contains(&q) {
            return Err(Error::InvalidParameter(format!("Q = {q} outside [0, 1]")));
        }
        let mut g = Self {
            psi,
            norms: [1.0 - q, q, q, 1.0 - q],
            re: [Interval::point(0.0); 6],
            im: [Interval::point(0.0); 6],
            sum_03_12: 1.0 - 2.0 * q,
        };
        match psi {
            PsiMode::Psi4 => {
                g.set_re(Pair::P03, Interval::point(1.0 - 2.0 * q));
            }
            PsiMode::Psi3 => {
                g.set_re(Pair::P12, Interval::symmetric(q));
                g.set_re(Pair::P03, Interval { lo: 1.0 - 3.0 * q, hi: 1.0 - q });
                for p in [Pair::P01, Pair::P23, Pair::P02, Pair::P13] {
                    let cap = g.im_cs_cap(p);
                    g.set_im(p, Interval::symmetric(cap));
                }
            }
        }
        for p in [Pair::P03, Pair::P12] {
            let cap = g.cs_cap(p);
            g.set_im(p, Interval::symmetric(cap));
        }
        Ok(g)
    }

    /// Cauchy-Schwarz cap for an imaginary part. The `(0,2)` and `(1,3)`
    /// entries are tied by unitarity, so both share the smaller cap.
    fn im_cs_cap(&self, p: Pair) -> f64 {
        match p {
            Pair::P02 | Pair::P13 => self.cs_cap(Pair::P02).min(self.cs_cap(Pair::P13)),
            _ => self.cs_cap(p),
        }
    }

    /// Largest excursion of any interval endpoint beyond its Cauchy-Schwarz cap.
    pub fn cauchy_schwarz_excess(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for p in Pair::ALL {
            let cap = self.cs_cap(p);
            for iv in [self.re(p), self.im(p)] {
                worst = worst.max(iv.lo.abs() - cap).max(iv.hi.abs() - cap);
            }
        }
        worst.max(0.0)
    }
}

fn require_open_unit(name: &str, x: f64) -> Result<()> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::InvalidParameter(format!("{name} = {x} must lie strictly inside (0, 1) for estimation")));
    }
    Ok(())
}

/// Inverts one-way statistics into Gram estimates.
pub fn estimate_one_way(stats: &AttackStats) -> Result<GramEstimates> {
    let psi = stats.psi;
    let a = stats.alpha;
    require_open_unit("alpha", a)?;
    if psi == PsiMode::Psi4 {
        require_open_unit("beta", stats.beta)?;
    }
    let ab = (1.0 - a * a).sqrt();
    let p = |s: Label, o: Label| stats.require(s, o);
    let n = [
        p(Label::Zero, Label::Zero)?,
        p(Label::Zero, Label::One)?,
        p(Label::One, Label::Zero)?,
        p(Label::One, Label::One)?,
    ];
    let (a2, ab2) = (a * a, ab * ab);
    let two_aab = 2.0 * a * ab;

    let re01 = (p(Label::Zero, Label::A)? - a2 * n[0] - ab2 * n[1]) / two_aab;
    let re23 = (p(Label::One, Label::A)? - a2 * n[2] - ab2 * n[3]) / two_aab;
    let re02 = (p(Label::A, Label::Zero)? - a2 * n[0] - ab2 * n[2]) / two_aab;
    let re13 = -re02;

    // p_{a,ā} = K_a - 2α²ᾱ²(re03 + re12)
    let k_a = a2 * ab2 * (n[0] + n[3]) + ab2 * ab2 * n[2] + a2 * a2 * n[1] + 2.0 * ab2 * ab * a * re02
        - 2.0 * ab * a2 * a * re01
        - 2.0 * a * ab2 * ab * re23
        + 2.0 * a2 * a * ab * re13;
    let sum = (k_a - p(Label::A, Label::ABar)?) / (2.0 * a2 * ab2);

    let mut g =
        GramEstimates { psi, norms: n, re: [Interval::point(0.0); 6], im: [Interval::point(0.0); 6], sum_03_12: sum };
    g.set_re(Pair::P01, Interval::point(re01));
    g.set_re(Pair::P23, Interval::point(re23));
    g.set_re(Pair::P02, Interval::point(re02));
    g.set_re(Pair::P13, Interval::point(re13));

    match psi {
        PsiMode::Psi4 => {
            let b = stats.beta;
            let bb = (1.0 - b * b).sqrt();
            let (b2, bb2) = (b * b, bb * bb);
            let two_bbb = 2.0 * b * bb;
            let im01 = (p(Label::Zero, Label::B)? - b2 * n[0] - bb2 * n[1]) / two_bbb;
            let im23 = (p(Label::One, Label::B)? - b2 * n[2] - bb2 * n[3]) / two_bbb;
            let im02 = (b2 * n[0] + bb2 * n[2] - p(Label::B, Label::Zero)?) / two_bbb;
            let im13 = -im02;
            // p_{b,b̄} = K_b - 2β²β̄²(re03 - re12)
            let k_b = b2 * bb2 * (n[0] + n[3]) + bb2 * bb2 * n[2] + b2 * b2 * n[1]
                - 2.0 * bb2 * bb * b * im02
                - 2.0 * bb * b2 * b * im01
                - 2.0 * b * bb2 * bb * im23
                - 2.0 * b2 * b * bb * im13;
            let diff = (k_b - p(Label::B, Label::BBar)?) / (2.0 * b2 * bb2);
            let re03 = 0.5 * (sum + diff);
            let re12 = 0.5 * (sum - diff);
            g.set_re(Pair::P03, Interval::point(re03));
            g.set_re(Pair::P12, Interval::point(re12));
            g.set_im(Pair::P01, Interval::point(im01));
            g.set_im(Pair::P23, Interval::point(im23));
            g.set_im(Pair::P02, Interval::point(im02));
            g.set_im(Pair::P13, Interval::point(im13));
        }
        PsiMode::Psi3 => {
            // re12 in [-cap12, cap12] and re03 = sum - re12 in [-cap03, cap03]
            let (cap12, cap03) = (g.cs_cap(Pair::P12), g.cs_cap(Pair::P03));
            let mut lo = (-cap12).max(sum - cap03);
            let mut hi = cap12.min(sum + cap03);
            if lo > hi {
                if lo - hi > CS_TOL {
                    return Err(Error::Inconsistent(format!(
                        "Re<e0|e3> + Re<e1|e2> = {sum} is out of Cauchy-Schwarz reach ({cap03} + {cap12})"
                    )));
                }
                lo = 0.5 * (lo + hi);
                hi = lo;
            }
            g.set_re(Pair::P12, Interval { lo, hi });
            g.set_re(Pair::P03, Interval { lo: sum - hi, hi: sum - lo });
            for p in [Pair::P01, Pair::P23, Pair::P02, Pair::P13] {
                let cap = g.im_cs_cap(p);
                g.set_im(p, Interval::symmetric(cap));
            }
        }
    }
    for p in [Pair::P03, Pair::P12] {
        let cap = g.cs_cap(p);
        g.set_im(p, Interval::symmetric(cap));
    }
    Ok(g)
}

/// Maximum deviation observed by [`alpha_beta_invariance_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct InvarianceReport {
    pub pairs_checked: usize,
    pub max_deviation: f64,
    pub max_sum_deviation: f64,
}

/// Runs simulation and estimation for every `(alpha, beta)` pair and checks
/// that the `Ψ4` point estimates, and the `Ψ3` sum `re03 + re12`, agree with
/// the first pair within `tol`.
pub fn alpha_beta_invariance_check(
    attack: &OneWayAttack,
    alphas: &[f64],
    betas: &[f64],
    tol: f64,
) -> Result<InvarianceReport> {
    for &x in alphas.iter().chain(betas) {
        require_open_unit("alpha/beta", x)?;
    }
    let mut reference: Option<(GramEstimates, f64)> = None;
    let mut report = InvarianceReport { pairs_checked: 0, max_deviation: 0.0, max_sum_deviation: 0.0 };
    for &a in alphas {
        for &b in betas {
            let cfg = BasisConfig::new(a, b)?;
            let g4 = estimate_one_way(&simulate_stats(attack, &cfg, PsiMode::Psi4))?;
            let g3 = estimate_one_way(&simulate_stats(attack, &cfg, PsiMode::Psi3))?;
            report.pairs_checked += 1;
            let Some((ref0, sum0)) = &reference else {
                reference = Some((g4, g3.sum_03_12));
                continue;
            };
            let mut dev: f64 = 0.0;
            for p in Pair::ALL {
                dev = dev.max((g4.re(p).mid() - ref0.re(p).mid()).abs()).max((g4.im(p).mid() - ref0.im(p).mid()).abs());
            }
            for i in 0..4 {
                dev = dev.max((g4.norms[i] - ref0.norms[i]).abs());
            }
            let sum_dev = (g3.sum_03_12 - sum0).abs();
            report.max_deviation = report.max_deviation.max(dev);
            report.max_sum_deviation = report.max_sum_deviation.max(sum_dev);
            if dev > tol || sum_dev > tol {
                return Err(Error::Inconsistent(format!(
                    "estimates at (alpha, beta) = ({a}, {b}) deviate by {:e}",
                    dev.max(sum_dev)
                )));
            }
        }
    }
    Ok(report)
}

/// Two-way Gram estimates. Hops are ordered as [`HOPS`]:
/// `e_{0,0}, e_{0,2}, e_{1,1}, e_{1,3}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoWayGram {
    /// `<e_{i,j}^k|e_{i,j}^k>` indexed `[hop][k]`.
    pub norms: [[f64; 2]; 4],
    /// `Re<e_{i,j}^0|e_{i,j}^1>` per hop.
    pub second_hop: [f64; 4],
    /// `Re(<e_{0,0}^0|e_{0,2}^1> + <e_{0,0}^1|e_{0,2}^0>)`
    pub s0: f64,
    /// `Re(<e_{1,1}^0|e_{1,3}^1> + <e_{1,1}^1|e_{1,3}^0>)`
    pub s1: f64,
    /// Estimates for the reflection channel `V = U_R U_F`.
    pub reflect: GramEstimates,
    pub qa: f64,
    /// `E_1 + E_2 + E_3 + E_4 = c`
    pub c: f64,
    /// `|E_i| <= caps[i]`
    pub caps: [f64; 4],
}

/// The four pairs `(g_i^0, g_i^1)` of the two-way decomposition as
/// `((hop, k), (hop, k))`, with the `B = 0` member first.
pub const SQKD_PAIRS: [((usize, usize), (usize, usize)); 4] =
    [((0, 0), (3, 1)), ((1, 0), (2, 1)), ((0, 1), (3, 0)), ((1, 1), (2, 0))];

/// Index into [`HOPS`] for sent bit `x` and receiver outcome `i`.
pub fn hop_index(x: usize, i: usize) -> usize {
    let j = 2 * x + i;
    HOPS.iter().position(|&h| h == (i, j)).expect("valid hop")
}

impl TwoWayGram {
    /// `(N_i^0, N_i^1)` for the four pairs.
    pub fn pair_norms(&self) -> [(f64, f64); 4] {
        SQKD_PAIRS.map(|((h0, k0), (h1, k1))| (self.norms[h0][k0], self.norms[h1][k1]))
    }

    /// Symmetric channel: flip probability `q` in each direction and
    /// reflection error `qa`.
    pub fn symmetric(q: f64, qa: f64) -> Result<Self> {
        if !q.is_finite() || !(0.0..=1.0).contains(&q) {
            return Err(Error::InvalidParameter(format!("Q = {q} outside [0, 1]")));
        }
        if !qa.is_finite() || !(0.0..=1.0).contains(&qa) {
            return Err(Error::Domain(format!("Q_A = {qa} outside [0, 1]")));
        }
        let (ok, bad) = (1.0 - q, q);
        let norms = [[ok * ok, ok * bad], [bad * ok, bad * bad], [bad * bad, bad * ok], [ok * bad, ok * ok]];
        let mut g = Self {
            norms,
            second_hop: [0.0; 4],
            s0: 0.0,
            s1: 0.0,
            reflect: GramEstimates::depolarizing(PsiMode::Psi3, qa)?,
            qa,
            c: 1.0 - 2.0 * qa,
            caps: [0.0; 4],
        };
        g.caps = g.pair_norms().map(|(a, b)| (a * b).sqrt());
        Ok(g)
    }
}

/// Inverts two-way statistics. Only `alpha = 1/sqrt(2)` is supported.
pub fn estimate_two_way(tw: &TwoWayStats) -> Result<TwoWayGram> {
    if (tw.alpha - std::f64::consts::FRAC_1_SQRT_2).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "two-way estimation requires alpha = 1/sqrt(2), got {}",
            tw.alpha
        )));
    }
    if !tw.qa.is_finite() || !(0.0..=1.0).contains(&tw.qa) {
        return Err(Error::Domain(format!("Q_A = {} outside [0, 1]", tw.qa)));
    }
    let f = |s: Label, o: Label| tw.forward.require(s, o);
    let bits = [Label::Zero, Label::One];
    let mut p = [[0.0; 2]; 2];
    for x in 0..2 {
        for i in 0..2 {
            p[x][i] = f(bits[x], bits[i])?;
        }
    }
    let p_a = [f(Label::A, Label::Zero)?, f(Label::A, Label::One)?];

    let mut norms = [[0.0; 2]; 4];
    let mut second_hop = [0.0; 4];
    for x in 0..2 {
        for i in 0..2 {
            let h = hop_index(x, i);
            for k in 0..2 {
                norms[h][k] = p[x][i] * tw.second_z[x][i][k];
            }
            second_hop[h] = p[x][i] * (tw.second_a[x][i] - 0.5);
        }
    }
    let re02 = p_a[0] - 0.5 * (p[0][0] + p[1][0]);
    let s0 = 2.0 * p_a[0] * tw.second_a[2][0]
        - 0.5 * (p[0][0] + p[1][0])
        - second_hop[hop_index(0, 0)]
        - second_hop[hop_index(1, 0)]
        - re02;
    let s1 = 2.0 * p_a[1] * tw.second_a[2][1]
        - 0.5 * (p[0][1] + p[1][1])
        - second_hop[hop_index(0, 1)]
        - second_hop[hop_index(1, 1)]
        + re02;

    let reflect = estimate_one_way(&tw.reflect)?;
    let c = 1.0 - 2.0 * tw.qa - reflect.re(Pair::P01).mid() - reflect.re(Pair::P23).mid() - s0 - s1;
    if !c.is_finite() || c.abs() > 4.0 {
        return Err(Error::Inconsistent(format!("constraint constant c = {c} outside [-4, 4]")));
    }
    let mut g = TwoWayGram { norms, second_hop, s0, s1, reflect, qa: tw.qa, c, caps: [0.0; 4] };
    g.caps = g.pair_norms().map(|(a, b)| (a.max(0.0) * b.max(0.0)).sqrt());
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attack::{simulate_two_way_stats, TwoWayAttack};
    use crate::qmath::{inner, norm_sqr};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn true_inner(att: &OneWayAttack, p: Pair) -> (f64, f64) {
        let (i, j) = p.indices();
        let z = inner(att.e(i), att.e(j));
        (z.re, z.im)
    }

    #[test]
    fn identity_channel_estimates() {
        let att = OneWayAttack::identity(2).unwrap();
        let g = estimate_one_way(&simulate_stats(&att, &BasisConfig::balanced(), PsiMode::Psi4)).unwrap();
        for p in Pair::ALL {
            let expect = if p == Pair::P03 { 1.0 } else { 0.0 };
            assert_abs_diff_eq!(g.re(p).mid(), expect, epsilon = 1e-12);
            assert!(g.re(p).is_point());
        }
        for p in [Pair::P01, Pair::P23, Pair::P02, Pair::P13] {
            assert_abs_diff_eq!(g.im(p).mid(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn depolarizing_psi3_interval() {
        let q = 0.08;
        let att = OneWayAttack::depolarizing(q).unwrap();
        let g = estimate_one_way(&simulate_stats(&att, &BasisConfig::new(0.4, 0.5).unwrap(), PsiMode::Psi3)).unwrap();
        assert_abs_diff_eq!(g.re(Pair::P03).lo, 1.0 - 3.0 * q, epsilon = 1e-9);
        assert_abs_diff_eq!(g.re(Pair::P03).hi, 1.0 - q, epsilon = 1e-9);
        assert_abs_diff_eq!(g.re(Pair::P12).hi, q, epsilon = 1e-9);
        let dep = GramEstimates::depolarizing(PsiMode::Psi3, q).unwrap();
        for p in Pair::ALL {
            assert_abs_diff_eq!(g.re(p).lo, dep.re(p).lo, epsilon = 1e-9);
            assert_abs_diff_eq!(g.re(p).hi, dep.re(p).hi, epsilon = 1e-9);
        }
    }

    #[test]
    fn depolarizing_psi4_points() {
        for q in [0.0, 0.05, 0.2] {
            let att = OneWayAttack::depolarizing(q).unwrap();
            let g =
                estimate_one_way(&simulate_stats(&att, &BasisConfig::new(0.3, 0.8).unwrap(), PsiMode::Psi4)).unwrap();
            let dep = GramEstimates::depolarizing(PsiMode::Psi4, q).unwrap();
            for p in Pair::ALL {
                assert_abs_diff_eq!(g.re(p).mid(), dep.re(p).mid(), epsilon = 1e-9);
            }
            assert_abs_diff_eq!(g.re(Pair::P03).mid(), 1.0 - 2.0 * q, epsilon = 1e-9);
        }
    }

    #[test]
    fn round_trip_random_attacks() {
        let cfgs = [BasisConfig::balanced(), BasisConfig::new(0.25, 0.9).unwrap()];
        for seed in 0..30 {
            let att = OneWayAttack::random(seed, 4).unwrap();
            for cfg in &cfgs {
                let g = estimate_one_way(&simulate_stats(&att, cfg, PsiMode::Psi4)).unwrap();
                for p in Pair::ALL {
                    let (re, im) = true_inner(&att, p);
                    assert_abs_diff_eq!(g.re(p).mid(), re, epsilon = 1e-8);
                    if !matches!(p, Pair::P03 | Pair::P12) {
                        assert_abs_diff_eq!(g.im(p).mid(), im, epsilon = 1e-8);
                    }
                }
                assert_eq!(g.re(Pair::P13).mid(), -g.re(Pair::P02).mid());
                assert_eq!(g.im(Pair::P13).mid(), -g.im(Pair::P02).mid());
            }
        }
    }

    #[test]
    fn psi3_soundness() {
        for seed in 0..30 {
            let att = OneWayAttack::random(seed, 4).unwrap();
            let g =
                estimate_one_way(&simulate_stats(&att, &BasisConfig::new(0.6, 0.5).unwrap(), PsiMode::Psi3)).unwrap();
            for p in Pair::ALL {
                let (re, im) = true_inner(&att, p);
                assert!(g.re(p).contains(re, 1e-9), "{p:?} re {re} not in {}", g.re(p));
                assert!(g.im(p).contains(im, 1e-9), "{p:?} im {im} not in {}", g.im(p));
            }
            assert!(g.cauchy_schwarz_excess() < 1e-9);
        }
    }

    #[test]
    fn estimation_rejects_degenerate_bases() {
        let att = OneWayAttack::random(1, 2).unwrap();
        for a in [0.0, 1.0] {
            let s = simulate_stats(&att, &BasisConfig::new(a, 0.5).unwrap(), PsiMode::Psi3);
            assert!(matches!(estimate_one_way(&s), Err(Error::InvalidParameter(_))));
        }
        let s = simulate_stats(&att, &BasisConfig::new(0.5, 1.0).unwrap(), PsiMode::Psi4);
        assert!(estimate_one_way(&s).is_err());
        let mut s = simulate_stats(&att, &BasisConfig::balanced(), PsiMode::Psi4);
        s.entries.retain(|(sent, _), _| *sent != Label::B);
        assert!(matches!(estimate_one_way(&s), Err(Error::MissingStatistic(_))));
    }

    #[test]
    fn invariance_examples() {
        let dep = OneWayAttack::depolarizing(0.05).unwrap();
        let r = alpha_beta_invariance_check(&dep, &[0.3, FRAC_1_SQRT_2, 0.9], &[0.5], 1e-8).unwrap();
        assert_eq!(r.pairs_checked, 3);
        let att = OneWayAttack::random(17, 4).unwrap();
        alpha_beta_invariance_check(&att, &[0.2, 0.5, 0.8], &[0.3, 0.6, 0.95], 1e-8).unwrap();
        assert!(alpha_beta_invariance_check(&att, &[0.0, 0.5], &[0.5], 1e-8).is_err());
        assert!(alpha_beta_invariance_check(&att, &[0.5], &[1.0], 1e-8).is_err());
    }

    #[test]
    fn two_way_identity() {
        let tw = TwoWayAttack::identity(2).unwrap();
        let g = estimate_two_way(&simulate_two_way_stats(&tw, &BasisConfig::balanced()).unwrap()).unwrap();
        for h in g.second_hop {
            assert_abs_diff_eq!(h, 0.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(g.c, 1.0, epsilon = 1e-12);
        for (got, want) in g.caps.iter().zip([1.0, 0.0, 0.0, 0.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn two_way_symmetric_correlated() {
        let q = 0.06;
        let g = TwoWayGram::symmetric(q, q).unwrap();
        assert_abs_diff_eq!(g.c, 1.0 - 2.0 * q, epsilon = 1e-15);
        assert_eq!(g.s0, 0.0);
        assert_eq!(g.s1, 0.0);
    }

    #[test]
    fn two_way_round_trip() {
        for seed in 0..20 {
            let tw = TwoWayAttack::random(seed, 3).unwrap();
            let g = estimate_two_way(&simulate_two_way_stats(&tw, &BasisConfig::balanced()).unwrap()).unwrap();
            let hops: Vec<[Vec<_>; 2]> = HOPS.iter().map(|&(i, j)| tw.hop(i, j)).collect();
            for h in 0..4 {
                for k in 0..2 {
                    assert_abs_diff_eq!(g.norms[h][k], norm_sqr(&hops[h][k]), epsilon = 1e-8);
                }
                assert_abs_diff_eq!(g.second_hop[h], inner(&hops[h][0], &hops[h][1]).re, epsilon = 1e-8);
            }
            let s0 = (inner(&hops[0][0], &hops[1][1]) + inner(&hops[0][1], &hops[1][0])).re;
            let s1 = (inner(&hops[2][0], &hops[3][1]) + inner(&hops[2][1], &hops[3][0])).re;
            assert_abs_diff_eq!(g.s0, s0, epsilon = 1e-8);
            assert_abs_diff_eq!(g.s1, s1, epsilon = 1e-8);

            let mut total = 0.0;
            for (i, ((h0, k0), (h1, k1))) in SQKD_PAIRS.into_iter().enumerate() {
                let e = inner(&hops[h0][k0], &hops[h1][k1]).re;
                assert!(e.abs() <= g.caps[i] + 1e-9);
                total += e;
            }
            assert_abs_diff_eq!(total, g.c, epsilon = 1e-8);
        }
    }

    #[test]
    fn two_way_rejects_other_alpha() {
        let tw = TwoWayAttack::random(2, 2).unwrap();
        let s = simulate_two_way_stats(&tw, &BasisConfig::new(0.5, 0.5).unwrap()).unwrap();
        assert!(matches!(estimate_two_way(&s), Err(Error::InvalidParameter(_))));
    }
}
