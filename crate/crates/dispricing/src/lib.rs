//! Solver and experiment harness for discriminate energy pricing.
//!
//! A shared facility authority must procure a fixed amount of energy and
//! may buy it either from the grid at a posted price or from its own
//! energy users, each of whom it can offer an individual ("discriminate")
//! unit price. Users respond by selling however much maximizes their own
//! utility. The interaction is a two-stage game: the authority leads with
//! prices, the users follow with quantities, and the crate solves it by
//! backward induction — closed form for the quadratic payment rule,
//! bracketed bisection otherwise.
//!
//! The crate is organized in layers:
//!
//! * [`model`] — market types, the utility and cost functions, validation;
//! * [`equilibrium`] — best responses, stage-1 prices, the full solver,
//!   and budget tuning of the price-sum multiplier;
//! * [`oracle`] — independent brute-force scans and finite-difference
//!   checks that never touch the solver's code paths;
//! * [`baselines`] — the equal-distribution pricing scheme;
//! * [`scenarios`] — the shipped experiments and population builders;
//! * [`config`], [`report`], [`cli`] — JSON configs, CSV/JSON reports,
//!   and the command-line front end.
//!
//! # Example
//!
//! ```
//! use dispricing::{solve_spe, EnergyUser, MarketInstance, MarketParams, ResponseMode};
//!
//! let users = vec![
//!     EnergyUser::new("roof-a", 150.0, 1.0),
//!     EnergyUser::new("roof-b", 150.0, 2.0),
//! ];
//! let instance = MarketInstance::with_default_coefficients(users, MarketParams::default());
//! let outcome = solve_spe(&instance, ResponseMode::Paper)?;
//!
//! // The reluctant user is offered the higher price.
//! assert!(outcome.prices[1] > outcome.prices[0]);
//! # Ok::<(), dispricing::Error>(())
//! ```

// Validation guards are written `!(x > 0.0)` instead of `x <= 0.0` on
// purpose: the negated form is also true for NaN, so a single comparison
// rejects nonpositive and undefined inputs alike.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod cli;
pub mod config;
pub mod equilibrium;
pub mod error;
pub mod model;
pub mod oracle;
pub mod report;
pub mod scenarios;

pub use equilibrium::{
    best_response, solve_spe, stage1_price, stage1_price_general_k, stage1_price_unclamped,
    tune_lambda, ClampFlag, EquilibriumOutcome, ResponseMode,
};
pub use error::{Error, Result};
pub use model::{
    lagrangian, sfa_cost, utility, validate, EnergyUser, EnergyVector, MarketInstance,
    MarketParams, PriceVector, SfaCostCoefficients,
};

/// The guide's chapters, compiled as doc-tests so every snippet in the
/// book builds and runs against the current API.
#[cfg(doctest)]
pub mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}

    #[doc = include_str!("../../../book/src/market-model.md")]
    pub mod market_model {}

    #[doc = include_str!("../../../book/src/equilibrium.md")]
    pub mod equilibrium {}

    #[doc = include_str!("../../../book/src/verification.md")]
    pub mod verification {}

    #[doc = include_str!("../../../book/src/case-studies.md")]
    pub mod case_studies {}

    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
