//! Exact counting for Montmort-type matching problems.
//!
//! There are `n` people and `m ≥ n` hats; `ℓ ≤ n` of the people leave with a
//! hat. A rectangular ℓ-matching is an injection from an ℓ-subset of
//! `{1..n}` into `{1..m}`, and person `i` taking hat `i` is a fixed point.
//! The crate counts these matchings by number of fixed points and turns the
//! counts into exact probabilities. [`oracle`] and [`sampler`] cross-check
//! the formulas; [`oeis`] compares them with published sequences.
//!
//! ```
//! use montmort::{derangements, prob_no_fixed_point, MatchShape};
//!
//! assert_eq!(derangements(4), 9u64);
//! let shape = MatchShape::new(2, 3, 1).unwrap();
//! assert_eq!(prob_no_fixed_point(shape).to_string(), "2/3");
//! ```

pub mod counting;
pub mod distributions;
pub mod error;
pub mod oeis;
pub mod oracle;
pub mod real;
pub mod sampler;

pub use counting::{
    arrangements_count, binomial, derangements, derangements_via_pair_recurrence,
    derangements_via_sign_recurrence, factorial, partial_count, partial_derangements,
    partial_rencontres, rect_derangements, rect_rencontres, rencontres, unified_count,
    unified_derangements, unified_rencontres, Count, Family, MatchShape,
};
pub use distributions::{
    fixed_point_pmf, nearest_integer_identity, pmf_closed_form, poisson_pmf, poisson_rate,
    prob_no_fixed_point, tv_distance_to_poisson, ExactProb, FixedPointPmf, PoissonLimit,
};
pub use error::{Error, Result};
pub use oracle::PartialInjection;
pub use real::Real;
pub use sampler::SampleStats;
