//! Asymptotic key-rate lower bounds for discrete-variable QKD protocols.
//!
//! Statistics gathered from *mismatched* measurement rounds (sender and
//! receiver picked different bases) are inverted into estimates of the
//! adversary's ancilla Gram matrix. Those estimates feed a conditional
//! entropy bound that holds for arbitrary, possibly asymmetric, collective
//! attacks.
//!
//! The crate is layered bottom-up:
//!
//! - [`qmath`]: small dense complex linear algebra, entropies and a Jacobi
//!   eigen-solver used as an exact oracle.
//! - [`attack`]: explicit attack unitaries (one-way and two-way) and exact or
//!   sampled simulation of every observable statistic.
//! - [`stats`]: labelled observable probabilities.
//! - [`tomography`]: statistics to Gram estimates (points or intervals).
//! - [`bound`]: the pairwise conditional-entropy bound and classical
//!   conditional entropies.
//! - [`protocols`]: Extended B92 / BB84, the four-parameter optimized
//!   protocol, the two-way semi-quantum protocol and threshold search.
//! - [`textio`] and [`tables`]: file formats and table regeneration used by
//!   the CLI.

#![forbid(unsafe_code)]

pub mod attack;
pub mod bound;
mod error;
pub mod minimize;
pub mod protocols;
pub mod qmath;
pub mod stats;
pub mod tables;
pub mod textio;
pub mod tomography;

pub use attack::{BasisConfig, OneWayAttack, TwoWayAttack};
pub use bound::{BoundResult, PairTerm};
pub use error::{Error, Result};
pub use protocols::{KeyRateReport, OptPiParams, Scenario};
pub use qmath::{ComplexMatrix, ProbVector};
pub use stats::{AttackStats, Label, PsiMode, TwoWayStats};
pub use tomography::{GramEstimates, Interval, TwoWayGram};

/// Bundled fixture: the asymmetric-channel statistics used for the worked
/// Extended B92 example (estimation with `alpha = beta = 1/sqrt(2)`).
pub const TABLE2_STATS: &str = include_str!("../fixtures/table2.stats");
