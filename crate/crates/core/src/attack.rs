//! Explicit attack unitaries and exact or sampled simulation of the
//! statistics they induce.
//!
//! A one-way attack acts on `qubit ⊗ ancilla` with the ancilla starting in
//! its first basis vector, so only two columns of the unitary matter:
//!
//! ```text
//! U|0,χ> = |0,e0> + |1,e1>
//! U|1,χ> = |0,e2> + |1,e3>
//! ```
//!
//! Indices into the `2d`-dimensional space are `qubit * d + ancilla`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::qmath::{c, combine, cr, eig_hermitian, inner, norm_sqr, ComplexMatrix, C64};
use crate::stats::{AttackStats, Basis, Label, PsiMode, TwoWayStats};

/// Tolerance on the unitarity conditions of attack vectors and matrices.
pub const UNITARY_TOL: f64 = 1e-9;

/// The estimation bases, parameterized by `alpha` and `beta`:
///
/// ```text
/// |a> = (α, ᾱ)     |ā> = (ᾱ, -α)
/// |b> = (β, iβ̄)    |b̄> = (β̄, -iβ)
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisConfig {
    alpha: f64,
    beta: f64,
}

impl BasisConfig {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("beta", beta)] {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter(format!("{name} = {v} outside [0, 1]")));
            }
        }
        Ok(Self { alpha, beta })
    }

    /// `alpha = beta = 1/sqrt(2)`.
    pub fn balanced() -> Self {
        Self { alpha: std::f64::consts::FRAC_1_SQRT_2, beta: std::f64::consts::FRAC_1_SQRT_2 }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn alpha_bar(&self) -> f64 {
        (1.0 - self.alpha * self.alpha).max(0.0).sqrt()
    }

    pub fn beta_bar(&self) -> f64 {
        (1.0 - self.beta * self.beta).max(0.0).sqrt()
    }

    /// `true` when `alpha` (and `beta`, for `Ψ4`) lie strictly inside `(0, 1)`,
    /// which the inversion formulas need.
    pub fn is_informative(&self, psi: PsiMode) -> bool {
        let inside = |x: f64| x > 0.0 && x < 1.0;
        inside(self.alpha) && (psi == PsiMode::Psi3 || inside(self.beta))
    }

    /// Amplitudes of a labelled state in the computational basis.
    pub fn state(&self, label: Label) -> [C64; 2] {
        let (a, ab, b, bb) = (self.alpha, self.alpha_bar(), self.beta, self.beta_bar());
        match label {
            Label::Zero => [cr(1.0), cr(0.0)],
            Label::One => [cr(0.0), cr(1.0)],
            Label::A => [cr(a), cr(ab)],
            Label::ABar => [cr(ab), cr(-a)],
            Label::B => [cr(b), c(0.0, bb)],
            Label::BBar => [cr(bb), c(0.0, -b)],
        }
    }
}

/// Forward attack described by the four ancilla vectors `e0..e3`.
#[derive(Debug, Clone, PartialEq)]
pub struct OneWayAttack {
    e: [Vec<C64>; 4],
}

impl OneWayAttack {
    /// Validates equal lengths, unit column norms and column orthogonality.
    pub fn new(e0: Vec<C64>, e1: Vec<C64>, e2: Vec<C64>, e3: Vec<C64>) -> Result<Self> {
        let d = e0.len();
        if d == 0 || e1.len() != d || e2.len() != d || e3.len() != d {
            return Err(Error::Dimension("attack vectors must share a non-zero length".into()));
        }
        let attack = Self { e: [e0, e1, e2, e3] };
        let r = attack.unitarity_residual();
        if r > UNITARY_TOL {
            return Err(Error::InvalidParameter(format!("attack vectors violate unitarity by {r:e}")));
        }
        Ok(attack)
    }

    /// Reads columns `|0,χ>` and `|1,χ>` of a unitary on `C^2 ⊗ C^d`.
    pub fn from_unitary(u: &ComplexMatrix) -> Result<Self> {
        if !u.is_square() || u.rows() % 2 != 0 || u.rows() == 0 {
            return Err(Error::Dimension(format!("{}x{} is not a qubit-ancilla unitary", u.rows(), u.cols())));
        }
        let d = u.rows() / 2;
        let col0 = u.column(0);
        let col1 = u.column(d);
        Self::new(col0[..d].to_vec(), col0[d..].to_vec(), col1[..d].to_vec(), col1[d..].to_vec())
    }

    pub fn ancilla_dim(&self) -> usize {
        self.e[0].len()
    }

    pub fn e(&self, i: usize) -> &[C64] {
        &self.e[i]
    }

    pub fn vectors(&self) -> &[Vec<C64>; 4] {
        &self.e
    }

    /// `max(|<e0|e0> + <e1|e1> - 1|, |<e2|e2> + <e3|e3> - 1|, |<e0|e2> + <e1|e3>|)`
    pub fn unitarity_residual(&self) -> f64 {
        let n01 = norm_sqr(&self.e[0]) + norm_sqr(&self.e[1]);
        let n23 = norm_sqr(&self.e[2]) + norm_sqr(&self.e[3]);
        let cross = inner(&self.e[0], &self.e[2]) + inner(&self.e[1], &self.e[3]);
        (n01 - 1.0).abs().max((n23 - 1.0).abs()).max(cross.norm())
    }

    /// The identity channel: `e0 = e3 = χ`, `e1 = e2 = 0`.
    pub fn identity(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("ancilla dimension must be positive".into()));
        }
        let mut chi = vec![cr(0.0); d];
        chi[0] = cr(1.0);
        let zero = vec![cr(0.0); d];
        Self::new(chi.clone(), zero.clone(), zero, chi)
    }

    /// Stinespring dilation of `ρ -> (1-2Q)ρ + Q·I` with Kraus operators
    /// `√(1-3Q/2) I, √(Q/2) X, √(Q/2) Y, √(Q/2) Z` on a 4-dimensional ancilla.
    pub fn depolarizing(q: f64) -> Result<Self> {
        if !q.is_finite() || !(0.0..2.0 / 3.0).contains(&q) {
            return Err(Error::InvalidParameter(format!("depolarizing Q = {q} outside [0, 2/3)")));
        }
        let s0 = (1.0 - 1.5 * q).sqrt();
        let s = (q / 2.0).sqrt();
        Self::new(
            vec![cr(s0), cr(0.0), cr(0.0), cr(s)],
            vec![cr(0.0), cr(s), c(0.0, s), cr(0.0)],
            vec![cr(0.0), cr(s), c(0.0, -s), cr(0.0)],
            vec![cr(s0), cr(0.0), cr(0.0), cr(-s)],
        )
    }

    /// Two columns of a Haar-random unitary on `C^2 ⊗ C^d`.
    pub fn random(seed: u64, d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidParameter(format!("ancilla dimension {d} < 2")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::from_unitary(&haar_unitary(2 * d, &mut rng))
    }

    /// A random channel close to a qubit rotation: `(R_y(θ) ⊗ I) exp(iεH)`
    /// with `H` drawn from the Gaussian unitary ensemble and `θ` uniform in
    /// `[0, π)`. `strength` is `ε`. Rotated channels defeat fixed
    /// computational-basis encodings while leaving the channel itself nearly
    /// noiseless.
    pub fn random_unitary_channel(seed: u64, d: usize, strength: f64) -> Result<Self> {
        if d < 1 {
            return Err(Error::InvalidParameter("ancilla dimension must be positive".into()));
        }
        if !strength.is_finite() || strength < 0.0 {
            return Err(Error::InvalidParameter(format!("strength {strength} must be non-negative")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 2 * d;
        let g = gaussian_matrix(n, &mut rng);
        let h = g.add(&g.adjoint())?.scale(cr(0.5));
        let theta: f64 = rng.gen_range(0.0..std::f64::consts::PI);
        let (cs, sn) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        let ry = ComplexMatrix::from_row_major(2, 2, vec![cr(cs), cr(-sn), cr(sn), cr(cs)])?;
        let u = ry.kron(&ComplexMatrix::identity(d)).mul(&exp_i_hermitian(&h, strength)?)?;
        Self::from_unitary(&u)
    }

    /// A full unitary on `C^2 ⊗ C^d` whose `|0,χ>` and `|1,χ>` columns are
    /// this attack; the remaining columns are an arbitrary orthonormal completion.
    pub fn to_unitary(&self) -> ComplexMatrix {
        let d = self.ancilla_dim();
        let col0: Vec<C64> = self.e[0].iter().chain(&self.e[1]).copied().collect();
        let col1: Vec<C64> = self.e[2].iter().chain(&self.e[3]).copied().collect();
        complete_unitary(2 * d, &[(0, col0), (d, col1)])
    }

    /// `U (c0|0> + c1|1>) ⊗ |χ>` split into its `|0>` and `|1>` ancilla parts.
    pub fn apply(&self, qubit: [C64; 2]) -> [Vec<C64>; 2] {
        let [c0, c1] = qubit;
        [combine(&[(c0, &self.e[0]), (c1, &self.e[2])]), combine(&[(c0, &self.e[1]), (c1, &self.e[3])])]
    }

    /// Probability of observing `outcome` after sending `sent`.
    pub fn probability(&self, cfg: &BasisConfig, sent: Label, outcome: Label) -> f64 {
        let out = self.apply(cfg.state(sent));
        let [o0, o1] = cfg.state(outcome);
        norm_sqr(&combine(&[(o0.conj(), &out[0]), (o1.conj(), &out[1])]))
    }
}

/// `f0`, `f1` for a given `alpha`: the ancilla parts after sending `|a>` and
/// projecting onto `|0>` and `|ā>` respectively:
///
/// ```text
/// f0 = α²e0 + αᾱe2 + αᾱe1 + ᾱ²e3
/// f1 = ᾱαe0 + ᾱ²e2 - α²e1 - αᾱe3
/// ```
pub fn f_states(attack: &OneWayAttack, alpha: f64) -> Result<(Vec<C64>, Vec<C64>)> {
    if !alpha.is_finite() || !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} outside [0, 1]")));
    }
    let a = alpha;
    let ab = (1.0 - a * a).max(0.0).sqrt();
    let [e0, e1, e2, e3] = attack.vectors();
    let f0 = combine(&[(cr(a * a), e0), (cr(a * ab), e2), (cr(a * ab), e1), (cr(ab * ab), e3)]);
    let f1 = combine(&[(cr(ab * a), e0), (cr(ab * ab), e2), (cr(-a * a), e1), (cr(-a * ab), e3)]);
    Ok((f0, f1))
}

/// Exact statistics `p_{s,o}` for every `s` in `psi` and both outcomes of
/// every basis `psi` measures in.
pub fn simulate_stats(attack: &OneWayAttack, cfg: &BasisConfig, psi: PsiMode) -> AttackStats {
    let mut stats = AttackStats::new(psi, cfg.alpha(), cfg.beta());
    for &sent in psi.sent_states() {
        for &basis in psi.bases() {
            let [o0, o1] = basis.outcomes();
            let p = attack.probability(cfg, sent, o0).clamp(0.0, 1.0);
            stats.set(sent, o0, p);
            stats.set(sent, o1, 1.0 - p);
        }
    }
    stats
}

/// Multinomial sample of `m` rounds. Each round draws the sent state uniformly
/// from `psi` and the receiver's basis uniformly from the bases of `psi`.
/// Only (sent, basis) blocks observed at least once are reported, each as an
/// empirical conditional distribution.
pub fn simulate_stats_sampled(
    attack: &OneWayAttack,
    cfg: &BasisConfig,
    psi: PsiMode,
    m: u64,
    seed: u64,
) -> Result<AttackStats> {
    if m == 0 {
        return Err(Error::InvalidParameter("sample count must be at least 1".into()));
    }
    let exact = simulate_stats(attack, cfg, psi);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blocks: Vec<(Label, Basis)> =
        psi.sent_states().iter().flat_map(|&s| psi.bases().iter().map(move |&b| (s, b))).collect();

    let mut stats = AttackStats::new(psi, cfg.alpha(), cfg.beta());
    let mut remaining = m;
    for (k, &(sent, basis)) in blocks.iter().enumerate() {
        let left = (blocks.len() - k) as f64;
        let n = if k + 1 == blocks.len() { remaining } else { draw_binomial(&mut rng, remaining, 1.0 / left)? };
        remaining -= n;
        if n == 0 {
            continue;
        }
        let [o0, o1] = basis.outcomes();
        let p = exact.get(sent, o0).unwrap_or(0.0);
        let hits = draw_binomial(&mut rng, n, p)?;
        let freq = hits as f64 / n as f64;
        stats.set(sent, o0, freq);
        stats.set(sent, o1, (n - hits) as f64 / n as f64);
    }
    Ok(stats)
}

fn draw_binomial(rng: &mut ChaCha8Rng, n: u64, p: f64) -> Result<u64> {
    let dist =
        Binomial::new(n, p.clamp(0.0, 1.0)).map_err(|e| Error::InvalidParameter(format!("binomial({n}, {p}): {e}")))?;
    Ok(dist.sample(rng))
}

/// Forward attack plus a full reverse unitary on `C^2 ⊗ C^d`.
///
/// The reverse unitary acts on each returning `|i, e_j>` as
/// `U_R|i,e_j> = |0,e_{i,j}^0> + |1,e_{i,j}^1>`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoWayAttack {
    forward: OneWayAttack,
    reverse: ComplexMatrix,
}

/// The four (mid, forward-vector) combinations reachable when the receiver
/// measures and resends: `(0,0)`, `(0,2)`, `(1,1)`, `(1,3)`. Hop `(i, j)`
/// arises when `x = j / 2` was sent and the receiver saw `i`.
pub const HOPS: [(usize, usize); 4] = [(0, 0), (0, 2), (1, 1), (1, 3)];

impl TwoWayAttack {
    pub fn new(forward: OneWayAttack, reverse: ComplexMatrix) -> Result<Self> {
        let n = 2 * forward.ancilla_dim();
        if reverse.rows() != n || reverse.cols() != n {
            return Err(Error::Dimension(format!(
                "reverse unitary is {}x{}, expected {n}x{n}",
                reverse.rows(),
                reverse.cols()
            )));
        }
        let r = reverse.unitarity_residual()?;
        if r > UNITARY_TOL {
            return Err(Error::InvalidParameter(format!("reverse operator is not unitary (residual {r:e})")));
        }
        Ok(Self { forward, reverse })
    }

    pub fn forward(&self) -> &OneWayAttack {
        &self.forward
    }

    pub fn reverse(&self) -> &ComplexMatrix {
        &self.reverse
    }

    pub fn ancilla_dim(&self) -> usize {
        self.forward.ancilla_dim()
    }

    pub fn identity(d: usize) -> Result<Self> {
        Self::new(OneWayAttack::identity(d)?, ComplexMatrix::identity(2 * d))
    }

    /// Independent Haar-random forward and reverse unitaries.
    pub fn random(seed: u64, d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidParameter(format!("ancilla dimension {d} < 2")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let forward = OneWayAttack::from_unitary(&haar_unitary(2 * d, &mut rng))?;
        let reverse = haar_unitary(2 * d, &mut rng);
        Self::new(forward, reverse)
    }

    /// Two independent depolarizing channels with parameter `q`, each on its
    /// own 4-dimensional ancilla register (`d = 16`).
    pub fn depolarizing_independent(q: f64) -> Result<Self> {
        let single = OneWayAttack::depolarizing(q)?;
        let w = single.to_unitary();
        let lift = |v: &[C64]| -> Vec<C64> {
            let mut out = vec![cr(0.0); 16];
            for (r1, x) in v.iter().enumerate() {
                out[r1 * 4] = *x;
            }
            out
        };
        let [e0, e1, e2, e3] = single.vectors();
        let forward = OneWayAttack::new(lift(e0), lift(e1), lift(e2), lift(e3))?;
        // index = qubit * 16 + r1 * 4 + r2; W acts on (qubit, r2) and leaves r1 alone
        let reverse = ComplexMatrix::from_fn(32, 32, |row, col| {
            let (k, r1o, r2o) = (row / 16, (row / 4) % 4, row % 4);
            let (q, r1i, r2i) = (col / 16, (col / 4) % 4, col % 4);
            if r1o == r1i {
                w[(k * 4 + r2o, q * 4 + r2i)]
            } else {
                cr(0.0)
            }
        });
        Self::new(forward, reverse)
    }

    /// `e_{i,j}^0, e_{i,j}^1` for the returning state `|i, e_j>`.
    pub fn hop(&self, i: usize, j: usize) -> [Vec<C64>; 2] {
        let d = self.ancilla_dim();
        let ej = self.forward.e(j);
        let block = |k: usize| -> Vec<C64> {
            (0..d).map(|r| (0..d).map(|s| self.reverse[(k * d + r, i * d + s)] * ej[s]).sum()).collect()
        };
        [block(0), block(1)]
    }

    /// The composed reflection channel `V = U_R U_F` as a one-way attack with
    /// vectors `g0..g3`.
    pub fn composed(&self) -> Result<OneWayAttack> {
        let [e000, e001] = self.hop(0, 0);
        let [e110, e111] = self.hop(1, 1);
        let [e020, e021] = self.hop(0, 2);
        let [e130, e131] = self.hop(1, 3);
        let one = cr(1.0);
        OneWayAttack::new(
            combine(&[(one, &e000), (one, &e110)]),
            combine(&[(one, &e001), (one, &e111)]),
            combine(&[(one, &e020), (one, &e130)]),
            combine(&[(one, &e021), (one, &e131)]),
        )
    }

    /// Largest violation of `<e_{i,j}^0|e_{i,j}^0> + <e_{i,j}^1|e_{i,j}^1> = <e_j|e_j>`.
    pub fn hop_norm_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..2 {
            for j in 0..4 {
                let [h0, h1] = self.hop(i, j);
                let lhs = norm_sqr(&h0) + norm_sqr(&h1);
                worst = worst.max((lhs - norm_sqr(self.forward.e(j))).abs());
            }
        }
        worst
    }
}

/// Ratio with the convention that an undefined conditional (zero-probability
/// conditioning event) is reported as 1/2.
fn conditional(num: f64, den: f64) -> f64 {
    if den <= 1e-15 {
        0.5
    } else {
        (num / den).clamp(0.0, 1.0)
    }
}

/// Exact two-way statistics. The sender re-measures in Z or in the `{|a>, |ā>}`
/// basis; reflection statistics are those of `V = U_R U_F` with `Ψ3`.
pub fn simulate_two_way_stats(attack: &TwoWayAttack, cfg: &BasisConfig) -> Result<TwoWayStats> {
    let fwd = attack.forward();
    let (a, ab) = (cfg.alpha(), cfg.alpha_bar());
    let mut forward = AttackStats::new(PsiMode::Psi3, cfg.alpha(), cfg.beta());
    for sent in [Label::Zero, Label::One, Label::A] {
        let p0 = fwd.probability(cfg, sent, Label::Zero).clamp(0.0, 1.0);
        forward.set(sent, Label::Zero, p0);
        forward.set(sent, Label::One, 1.0 - p0);
    }

    let project_a = |h: &[Vec<C64>; 2]| norm_sqr(&combine(&[(cr(a), &h[0]), (cr(ab), &h[1])]));

    let mut second_z = [[[0.5; 2]; 2]; 2];
    let mut second_a = [[0.5; 2]; 3];
    for x in 0..2 {
        for i in 0..2 {
            let j = 2 * x + i;
            let h = attack.hop(i, j);
            let p = norm_sqr(fwd.e(j));
            let z0 = conditional(norm_sqr(&h[0]), p);
            second_z[x][i] = [z0, 1.0 - z0];
            second_a[x][i] = conditional(project_a(&h), p);
        }
    }
    for i in 0..2 {
        // sent |a>: the receiver's outcome i leaves α e_i + ᾱ e_{2+i}
        let hi = attack.hop(i, i);
        let h2 = attack.hop(i, 2 + i);
        let combined = [combine(&[(cr(a), &hi[0]), (cr(ab), &h2[0])]), combine(&[(cr(a), &hi[1]), (cr(ab), &h2[1])])];
        let p_ai = norm_sqr(&combine(&[(cr(a), fwd.e(i)), (cr(ab), fwd.e(2 + i))]));
        second_a[2][i] = conditional(project_a(&combined), p_ai);
    }

    let v = attack.composed()?;
    let reflect = simulate_stats(&v, cfg, PsiMode::Psi3);
    let qa = reflect.get(Label::A, Label::ABar).unwrap_or(0.0);
    Ok(TwoWayStats { alpha: cfg.alpha(), beta: cfg.beta(), forward, second_z, second_a, reflect, qa })
}

fn gaussian_matrix(n: usize, rng: &mut impl Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// Haar-distributed unitary: QR of a complex Ginibre matrix by modified
/// Gram-Schmidt. The implicit `R` has a positive real diagonal, which is the
/// phase correction that makes the distribution Haar.
pub fn haar_unitary(n: usize, rng: &mut impl Rng) -> ComplexMatrix {
    loop {
        let g = gaussian_matrix(n, rng);
        let mut q = ComplexMatrix::zeros(n, n);
        let mut ok = true;
        for col in 0..n {
            let mut v = g.column(col);
            for prev in 0..col {
                let u = q.column(prev);
                let proj = inner(&u, &v);
                for (x, y) in v.iter_mut().zip(&u) {
                    *x -= proj * y;
                }
            }
            let nrm = norm_sqr(&v).sqrt();
            if nrm < 1e-10 {
                ok = false;
                break;
            }
            let v: Vec<C64> = v.iter().map(|x| x / nrm).collect();
            q.set_column(col, &v);
        }
        if ok {
            return q;
        }
    }
}

/// Completes orthonormal columns at fixed positions to a full unitary by
/// Gram-Schmidt against the standard basis.
pub fn complete_unitary(n: usize, fixed: &[(usize, Vec<C64>)]) -> ComplexMatrix {
    let mut basis: Vec<Vec<C64>> = fixed.iter().map(|(_, v)| v.clone()).collect();
    let mut extra = Vec::new();
    for k in 0..n {
        if basis.len() == n {
            break;
        }
        let mut v = vec![cr(0.0); n];
        v[k] = cr(1.0);
        for _ in 0..2 {
            for u in &basis {
                let proj = inner(u, &v);
                for (x, y) in v.iter_mut().zip(u) {
                    *x -= proj * y;
                }
            }
        }
        let nrm = norm_sqr(&v).sqrt();
        if nrm > 1e-6 {
            let v: Vec<C64> = v.iter().map(|x| x / nrm).collect();
            basis.push(v.clone());
            extra.push(v);
        }
    }
    let mut m = ComplexMatrix::zeros(n, n);
    let mut extra = extra.into_iter();
    for col in 0..n {
        match fixed.iter().find(|(p, _)| *p == col) {
            Some((_, v)) => m.set_column(col, v),
            None => {
                if let Some(v) = extra.next() {
                    m.set_column(col, &v);
                }
            }
        }
    }
    m
}

/// `exp(i t H)` for Hermitian `H`, through its eigen-decomposition.
pub fn exp_i_hermitian(h: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    let eig = eig_hermitian(h)?;
    let n = eig.values.len();
    let v = &eig.vectors;
    let phases: Vec<C64> = eig.values.iter().map(|&l| C64::from_polar(1.0, t * l)).collect();
    Ok(ComplexMatrix::from_fn(n, n, |r, col| (0..n).map(|k| v[(r, k)] * phases[k] * v[(col, k)].conj()).sum()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn depolarizing_gram() {
        let att = OneWayAttack::depolarizing(0.1).unwrap();
        let [e0, e1, e2, e3] = att.vectors();
        assert_abs_diff_eq!(norm_sqr(e1), 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(norm_sqr(e2), 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(inner(e0, e3).re, 0.8, epsilon = 1e-12);
        for (x, y) in [(e0, e1), (e0, e2), (e1, e2), (e1, e3), (e2, e3)] {
            assert!(inner(x, y).norm() < 1e-12);
        }
        assert!(OneWayAttack::depolarizing(2.0 / 3.0).is_err());
        assert!(OneWayAttack::depolarizing(-0.01).is_err());
    }

    #[test]
    fn depolarizing_zero_is_identity_like() {
        let att = OneWayAttack::depolarizing(0.0).unwrap();
        assert_eq!(att.e(0), att.e(3));
        assert_abs_diff_eq!(norm_sqr(att.e(0)), 1.0, epsilon = 1e-15);
        assert_eq!(norm_sqr(att.e(1)), 0.0);
        assert_eq!(norm_sqr(att.e(2)), 0.0);
    }

    #[test]
    fn depolarizing_channel_action() {
        // (1-2Q)ρ + Q·I on a generic input state
        let q = 0.13;
        let att = OneWayAttack::depolarizing(q).unwrap();
        let psi = [c(0.6, 0.0), c(0.0, 0.8)];
        let out = att.apply(psi);
        let rho_out = |r: usize, s: usize| inner(&out[s], &out[r]);
        for r in 0..2 {
            for s in 0..2 {
                let expect = psi[r] * psi[s].conj() * (1.0 - 2.0 * q) + if r == s { cr(q) } else { cr(0.0) };
                assert!((rho_out(r, s) - expect).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn depolarizing_stats() {
        let att = OneWayAttack::depolarizing(0.1).unwrap();
        let s = simulate_stats(&att, &BasisConfig::balanced(), PsiMode::Psi4);
        assert_abs_diff_eq!(s.get(Label::Zero, Label::One).unwrap(), 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(s.get(Label::One, Label::Zero).unwrap(), 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(s.get(Label::Zero, Label::A).unwrap(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(s.get(Label::A, Label::ABar).unwrap(), 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(s.get(Label::B, Label::BBar).unwrap(), 0.1, epsilon = 1e-12);
    }

    #[test]
    fn identity_stats() {
        let cfg = BasisConfig::new(0.3, 0.6).unwrap();
        let s = simulate_stats(&OneWayAttack::identity(3).unwrap(), &cfg, PsiMode::Psi3);
        assert_abs_diff_eq!(s.get(Label::Zero, Label::Zero).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.get(Label::A, Label::ABar).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.get(Label::Zero, Label::A).unwrap(), 0.09, epsilon = 1e-15);
    }

    #[test]
    fn random_attack_is_deterministic_and_unitary() {
        let a = OneWayAttack::random(7, 4).unwrap();
        let b = OneWayAttack::random(7, 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, OneWayAttack::random(8, 4).unwrap());
        assert!(a.unitarity_residual() < 1e-12);
        assert!(a.to_unitary().unitarity_residual().unwrap() < 1e-10);
        assert!(OneWayAttack::random(1, 1).is_err());
    }

    #[test]
    fn seed_sweep_stats_are_distributions() {
        let cfg = BasisConfig::new(0.4, 0.8).unwrap();
        for seed in 0..100 {
            let att = OneWayAttack::random(seed, 4).unwrap();
            let s = simulate_stats(&att, &cfg, PsiMode::Psi4);
            s.validate().unwrap();
            for &sent in PsiMode::Psi4.sent_states() {
                let z0 = s.get(sent, Label::Zero).unwrap();
                let z1 = s.get(sent, Label::One).unwrap();
                assert!((0.0..=1.0).contains(&z0));
                assert_abs_diff_eq!(z0 + z1, 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn full_unitary_simulation_matches_vector_formulas() {
        let cfg = BasisConfig::new(0.35, 0.75).unwrap();
        for seed in 0..10 {
            let att = OneWayAttack::random(seed, 3).unwrap();
            let u = att.to_unitary();
            let d = att.ancilla_dim();
            for sent in Label::ALL {
                for outcome in Label::ALL {
                    let s = cfg.state(sent);
                    let mut input = vec![cr(0.0); 2 * d];
                    input[0] = s[0];
                    input[d] = s[1];
                    let out = u.mul_vec(&input).unwrap();
                    let o = cfg.state(outcome);
                    let proj: Vec<C64> = (0..d).map(|k| o[0].conj() * out[k] + o[1].conj() * out[d + k]).collect();
                    assert_abs_diff_eq!(norm_sqr(&proj), att.probability(&cfg, sent, outcome), epsilon = 1e-9);
                }
            }
        }
    }

    #[test]
    fn f_state_examples() {
        let id = OneWayAttack::identity(2).unwrap();
        let (f0, f1) = f_states(&id, 0.4).unwrap();
        assert_abs_diff_eq!(norm_sqr(&f0), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(norm_sqr(&f1), 0.0, epsilon = 1e-12);

        let att = OneWayAttack::random(3, 4).unwrap();
        let (f0, f1) = f_states(&att, 1.0).unwrap();
        assert_eq!(f0, att.e(0));
        let neg: Vec<C64> = att.e(1).iter().map(|x| -x).collect();
        assert_eq!(f1, neg);
        for alpha in [0.0, 0.2, 0.7, 0.95] {
            let (f0, f1) = f_states(&att, alpha).unwrap();
            assert_abs_diff_eq!(norm_sqr(&f0) + norm_sqr(&f1), 1.0, epsilon = 1e-9);
        }

        let dep = OneWayAttack::depolarizing(0.1).unwrap();
        let (_, f1) = f_states(&dep, FRAC_1_SQRT_2).unwrap();
        assert_abs_diff_eq!(norm_sqr(&f1), 0.1, epsilon = 1e-12);
    }

    #[test]
    fn sampled_stats() {
        let att = OneWayAttack::depolarizing(0.1).unwrap();
        let cfg = BasisConfig::balanced();
        let s = simulate_stats_sampled(&att, &cfg, PsiMode::Psi4, 1_000_000, 5).unwrap();
        assert!((s.get(Label::Zero, Label::One).unwrap() - 0.1).abs() <= 0.002);
        let again = simulate_stats_sampled(&att, &cfg, PsiMode::Psi4, 1_000_000, 5).unwrap();
        assert_eq!(s, again);

        let one = simulate_stats_sampled(&att, &cfg, PsiMode::Psi3, 1, 9).unwrap();
        assert_eq!(one.entries.len(), 2);
        let values: Vec<f64> = one.entries.values().copied().collect();
        assert!(values.contains(&1.0) && values.contains(&0.0));
        assert!(simulate_stats_sampled(&att, &cfg, PsiMode::Psi3, 0, 9).is_err());
    }

    #[test]
    fn sampled_stats_converge() {
        let cfg = BasisConfig::new(0.6, 0.3).unwrap();
        for seed in 0..5 {
            let att = OneWayAttack::random(seed, 4).unwrap();
            let exact = simulate_stats(&att, &cfg, PsiMode::Psi4);
            let coarse = simulate_stats_sampled(&att, &cfg, PsiMode::Psi4, 1_000, seed).unwrap();
            let fine = simulate_stats_sampled(&att, &cfg, PsiMode::Psi4, 100_000, seed).unwrap();
            assert!(fine.total_variation(&exact) < coarse.total_variation(&exact));
        }
    }

    #[test]
    fn two_way_identity() {
        let tw = TwoWayAttack::identity(3).unwrap();
        for i in 0..2 {
            for j in 0..4 {
                let [h0, h1] = tw.hop(i, j);
                let expect = tw.forward().e(j);
                let (same, other) = if i == 0 { (&h0, &h1) } else { (&h1, &h0) };
                assert_eq!(same.as_slice(), expect);
                assert_eq!(norm_sqr(other), 0.0);
            }
        }
        let s = simulate_two_way_stats(&tw, &BasisConfig::balanced()).unwrap();
        assert_abs_diff_eq!(s.second_a[0][0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(s.qa, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.second_z[0][0][0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.second_z[1][1][1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn two_way_random_invariants() {
        for seed in 0..10 {
            let tw = TwoWayAttack::random(seed, 3).unwrap();
            assert_eq!(tw, TwoWayAttack::random(seed, 3).unwrap());
            assert!(tw.hop_norm_residual() < 1e-9);
            let s = simulate_two_way_stats(&tw, &BasisConfig::balanced()).unwrap();
            s.validate().unwrap();
        }
    }

    #[test]
    fn two_way_identity_reverse_reflects_forward() {
        let fwd = OneWayAttack::random(11, 3).unwrap();
        let tw = TwoWayAttack::new(fwd.clone(), ComplexMatrix::identity(6)).unwrap();
        let cfg = BasisConfig::new(0.45, 0.5).unwrap();
        let s = simulate_two_way_stats(&tw, &cfg).unwrap();
        let direct = simulate_stats(&fwd, &cfg, PsiMode::Psi3);
        assert!(s.reflect.max_abs_diff(&direct) < 1e-12);
    }

    #[test]
    fn independent_depolarizing_qa() {
        for q in [0.0, 0.03, 0.1, 0.2] {
            let tw = TwoWayAttack::depolarizing_independent(q).unwrap();
            let s = simulate_two_way_stats(&tw, &BasisConfig::balanced()).unwrap();
            assert_abs_diff_eq!(s.qa, 2.0 * q * (1.0 - q), epsilon = 1e-10);
            assert_abs_diff_eq!(s.second_z[0][0][1], q, epsilon = 1e-10);
        }
    }

    #[test]
    fn random_unitary_channel_is_valid() {
        let a = OneWayAttack::random_unitary_channel(4, 2, 0.2).unwrap();
        assert!(a.unitarity_residual() < 1e-9);
        assert_eq!(a, OneWayAttack::random_unitary_channel(4, 2, 0.2).unwrap());
    }

    #[test]
    fn completion_is_unitary() {
        let att = OneWayAttack::depolarizing(0.3).unwrap();
        let u = att.to_unitary();
        assert!(u.unitarity_residual().unwrap() < 1e-10);
        assert_eq!(OneWayAttack::from_unitary(&u).unwrap(), att);
    }
}
