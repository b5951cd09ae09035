//! Benford's law conformity testing built on the asymptotic distribution of
//! Nigrini's mean absolute deviation (MAD), with post-data severity
//! evaluation of conformity and nonconformity claims.
//!
//! The pipeline is:
//!
//! 1. [`digits`] reads numeric records and tallies first or first-two
//!    significant digits.
//! 2. [`benford`] computes Benford probabilities, the MAD and Pearson's
//!    chi-square statistic.
//! 3. [`asymptotics`] builds the null-distribution constants of the MAD.
//! 4. [`severity`] runs the standardized excess-MAD test and grades claims
//!    about the size of the discrepancy.
//!
//! [`mc`] is a Monte Carlo harness that checks the asymptotic results
//! empirically, and [`report`] assembles the outputs used by the `benford`
//! command-line tool.

pub mod asymptotics;
pub mod benford;
pub mod digits;
pub mod error;
pub mod mc;
pub mod report;
pub mod severity;
pub mod specialfn;

pub use asymptotics::{constants, mad_moments, AsymptoticConstants, MadMoments};
pub use benford::{benford_probs, chi_square_stat, mad, proportions, psi, BenfordProbs, Proportions};
pub use digits::{count_digits, first_digit, first_two_digits, parse_records, DigitCounts, DigitSystem};
pub use error::{Error, Result};
pub use severity::{
    chi_square_severity, delta_star, generic_normal_severity, n_min_for, run_test,
    severity_of_acceptance, severity_of_rejection, CalibrationConfig, Claim, SeverityResult,
    TestOutcome,
};
pub use specialfn::Probability;
