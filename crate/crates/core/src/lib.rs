//! Constructive intermediate-point selection for Taylor and mean value
//! expansions of random increments.
//!
//! The expansion `f(a + x) = partial_sum + g(xi)` pins its closing term to
//! an intermediate point `xi` between `0` and the increment. When the
//! increment is a random variable, picking one admissible `xi` per outcome
//! in a deterministic way turns the intermediate point into a random
//! variable itself. This crate makes that selection computable:
//!
//! - [`taylor`]: deterministic partial sums, the directional power
//!   operator, Jacobians and integral remainders;
//! - [`selector`]: the remainder equation per realization, bracketed
//!   root scans, and the sup/inf tie-break policies;
//! - [`probability`]: finite probability spaces where measurability of the
//!   selected point is decided exactly, plus seeded sampling;
//! - [`stats`]: maximum-likelihood score expansions, a delta-method Monte
//!   Carlo harness, and the two-variable probe;
//! - [`report`]: CSV/JSON emission with byte-stable formatting.

pub mod error;
pub mod field;
pub mod functions;
pub mod probability;
pub mod quadrature;
pub mod report;
pub mod selector;
pub mod stats;
pub mod taylor;
pub mod value;

pub use error::{Error, Result};
pub use field::{DerivativeMode, Domain, MultiIndex, ScalarField, VectorField};
pub use probability::{
    empirical_space, expectation, is_measurable_wrt, sigma_generated_by, DistributionSpec,
    FiniteProbabilitySpace, Partition, RandomVariable, SampleStream, SpaceJson, SpaceRef,
};
pub use quadrature::{GaussLegendre, QuadratureSpec};
pub use selector::{
    apply_over_sample, build_remainder_equation, candidate_bracket, solve_selector_multi,
    solve_selector_uni, CandidateBracket, RemainderEquation, SelectionPolicy, SelectionResult,
    SelectorSample, SelectorVariant,
};
pub use value::Value;
