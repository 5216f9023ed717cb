//! Observable statistics: conditional probabilities `p_{sent,outcome}` for the
//! one-way channel, plus the second-hop and reflection statistics of the
//! two-way channel.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Normalization slack for conditional distributions.
pub const NORM_TOL: f64 = 1e-9;

/// Qubit states that can be prepared or observed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Zero,
    One,
    A,
    ABar,
    B,
    BBar,
}

/// Measurement bases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Basis {
    Z,
    A,
    B,
}

impl Basis {
    pub fn outcomes(self) -> [Label; 2] {
        match self {
            Basis::Z => [Label::Zero, Label::One],
            Basis::A => [Label::A, Label::ABar],
            Basis::B => [Label::B, Label::BBar],
        }
    }
}

impl Label {
    pub const ALL: [Label; 6] = [Label::Zero, Label::One, Label::A, Label::ABar, Label::B, Label::BBar];

    pub fn basis(self) -> Basis {
        match self {
            Label::Zero | Label::One => Basis::Z,
            Label::A | Label::ABar => Basis::A,
            Label::B | Label::BBar => Basis::B,
        }
    }

    /// The other outcome of the same basis.
    pub fn complement(self) -> Label {
        match self {
            Label::Zero => Label::One,
            Label::One => Label::Zero,
            Label::A => Label::ABar,
            Label::ABar => Label::A,
            Label::B => Label::BBar,
            Label::BBar => Label::B,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Zero => "0",
            Label::One => "1",
            Label::A => "a",
            Label::ABar => "abar",
            Label::B => "b",
            Label::BBar => "bbar",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Label::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown state label '{s}'")))
    }
}

/// The sender's preparation set: `{|0>, |1>, |a>}` or `{|0>, |1>, |a>, |b>}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PsiMode {
    Psi3,
    Psi4,
}

impl PsiMode {
    pub fn sent_states(self) -> &'static [Label] {
        match self {
            PsiMode::Psi3 => &[Label::Zero, Label::One, Label::A],
            PsiMode::Psi4 => &[Label::Zero, Label::One, Label::A, Label::B],
        }
    }

    pub fn bases(self) -> &'static [Basis] {
        match self {
            PsiMode::Psi3 => &[Basis::Z, Basis::A],
            PsiMode::Psi4 => &[Basis::Z, Basis::A, Basis::B],
        }
    }

    pub fn number(self) -> u8 {
        match self {
            PsiMode::Psi3 => 3,
            PsiMode::Psi4 => 4,
        }
    }

    pub fn from_number(n: u8) -> Result<Self> {
        match n {
            3 => Ok(PsiMode::Psi3),
            4 => Ok(PsiMode::Psi4),
            _ => Err(Error::InvalidParameter(format!("psi must be 3 or 4, got {n}"))),
        }
    }
}

impl fmt::Display for PsiMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

/// One-way channel statistics. Each probability is conditioned on the
/// sender preparing `sent` and the receiver measuring in `outcome`'s basis.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackStats {
    pub psi: PsiMode,
    pub alpha: f64,
    pub beta: f64,
    pub entries: BTreeMap<(Label, Label), f64>,
}

impl AttackStats {
    pub fn new(psi: PsiMode, alpha: f64, beta: f64) -> Self {
        Self { psi, alpha, beta, entries: BTreeMap::new() }
    }

    pub fn set(&mut self, sent: Label, outcome: Label, p: f64) {
        self.entries.insert((sent, outcome), p);
    }

    /// Looks up `p_{sent,outcome}`, falling back to `1 - p_{sent,complement}`.
    pub fn get(&self, sent: Label, outcome: Label) -> Option<f64> {
        self.entries
            .get(&(sent, outcome))
            .copied()
            .or_else(|| self.entries.get(&(sent, outcome.complement())).map(|p| 1.0 - p))
    }

    pub fn require(&self, sent: Label, outcome: Label) -> Result<f64> {
        self.get(sent, outcome).ok_or_else(|| Error::MissingStatistic(format!("p,{sent},{outcome}")))
    }

    /// Checks the range of every entry and the normalization of every
    /// (sent, basis) pair for which both outcomes are present.
    pub fn validate(&self) -> Result<()> {
        for (&(s, o), &p) in &self.entries {
            if !p.is_finite() || !(-NORM_TOL..=1.0 + NORM_TOL).contains(&p) {
                return Err(Error::Domain(format!("p,{s},{o} = {p} outside [0, 1]")));
            }
            if let Some(q) = self.entries.get(&(s, o.complement())) {
                if (p + q - 1.0).abs() > NORM_TOL {
                    return Err(Error::Domain(format!("p,{s},{o} + p,{s},{} = {} != 1", o.complement(), p + q)));
                }
            }
        }
        Ok(())
    }

    /// The same statistics seen through the smaller preparation set: entries
    /// outside `psi` are dropped. Only `Psi4 -> Psi3` (or no change) is possible.
    pub fn restricted(&self, psi: PsiMode) -> Result<AttackStats> {
        if psi > self.psi {
            return Err(Error::InvalidParameter(format!(
                "cannot extend Psi{} statistics to Psi{}",
                self.psi.number(),
                psi.number()
            )));
        }
        let mut out = AttackStats::new(psi, self.alpha, self.beta);
        for (&(s, o), &p) in &self.entries {
            if psi.sent_states().contains(&s) && psi.bases().contains(&o.basis()) {
                out.set(s, o, p);
            }
        }
        Ok(out)
    }

    /// Largest absolute difference over the entries both sides share, plus
    /// a full mismatch (1.0) for entries present on only one side.
    pub fn max_abs_diff(&self, other: &AttackStats) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, v) in &self.entries {
            worst = worst.max(other.entries.get(k).map_or(1.0, |w| (v - w).abs()));
        }
        for k in other.entries.keys() {
            if !self.entries.contains_key(k) {
                worst = worst.max(1.0);
            }
        }
        worst
    }

    /// Total variation distance averaged over the (sent, basis) blocks present
    /// in `self`; blocks missing from `other` count as distance 1.
    pub fn total_variation(&self, other: &AttackStats) -> f64 {
        let mut blocks = 0usize;
        let mut total = 0.0;
        for &s in self.psi.sent_states() {
            for &b in self.psi.bases() {
                let [o0, _] = b.outcomes();
                let Some(p) = self.entries.get(&(s, o0)) else { continue };
                blocks += 1;
                total += match other.entries.get(&(s, o0)) {
                    Some(q) => (p - q).abs(),
                    None => 1.0,
                };
            }
        }
        if blocks == 0 {
            0.0
        } else {
            total / blocks as f64
        }
    }
}

/// Second-hop bookkeeping for the two-way channel. `mid` is the receiver's Z
/// outcome; the sender re-measures the returning qubit.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoWayStats {
    pub alpha: f64,
    pub beta: f64,
    /// Forward one-way statistics restricted to the receiver's Z outcomes:
    /// `p_{x,i}` for `x in {0, 1, a}`.
    pub forward: AttackStats,
    /// `p_{x,i,j}`: sent `x in {0,1}`, receiver got `i`, sender measured `j` in Z.
    pub second_z: [[[f64; 2]; 2]; 2],
    /// `p_{x,i,a}` for `x in {0, 1, a}` (index 2 is the `|a>` preparation).
    pub second_a: [[f64; 2]; 3],
    /// Full one-way statistics of the reflection channel `V = U_R U_F`.
    pub reflect: AttackStats,
    /// Probability that a reflected `|a>` returns as `|abar>`.
    pub qa: f64,
}

impl TwoWayStats {
    pub fn validate(&self) -> Result<()> {
        self.forward.validate()?;
        self.reflect.validate()?;
        let in_range = |p: f64| p.is_finite() && (-NORM_TOL..=1.0 + NORM_TOL).contains(&p);
        for x in 0..2 {
            for i in 0..2 {
                let [p0, p1] = self.second_z[x][i];
                if !in_range(p0) || !in_range(p1) || (p0 + p1 - 1.0).abs() > NORM_TOL {
                    return Err(Error::Domain(format!("p,{x},{i},* not a distribution")));
                }
            }
        }
        for row in &self.second_a {
            for &p in row {
                if !in_range(p) {
                    return Err(Error::Domain(format!("second-hop probability {p} outside [0, 1]")));
                }
            }
        }
        if !in_range(self.qa) {
            return Err(Error::Domain(format!("qa = {} outside [0, 1]", self.qa)));
        }
        Ok(())
    }
}
