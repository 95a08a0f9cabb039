//! Baseline pricing schemes the equilibrium is measured against.
//!
//! The reference baseline is the equal-distribution scheme (EDS): the
//! price budget is split evenly, every user is offered
//! `total_unit_price / n`, and users respond as usual. Comparing its cost
//! with the equilibrium's is the headline number of the case studies.

use crate::equilibrium::{self, ClampFlag, EquilibriumOutcome, ResponseMode};
use crate::error::{Error, Result};
use crate::model::{MarketInstance, PriceVector};

/// The equal-distribution price vector: `total_unit_price / n` for every
/// user.
///
/// The share is expected to lie inside the price box; when it does not, a
/// warning is returned alongside the prices rather than an error, so the
/// scheme can still be evaluated as defined.
pub fn eds_prices(instance: &MarketInstance) -> Result<(PriceVector, Vec<String>)> {
    if instance.users.is_empty() {
        return Err(Error::Structural(
            "equal-distribution prices need at least one user".to_string(),
        ));
    }
    let share = instance.params.total_unit_price / instance.n() as f64;
    let mut warnings = Vec::new();
    if share < instance.params.price_min || share > instance.params.price_max {
        warnings.push(format!(
            "equal share {:.4} falls outside the price box [{}, {}]",
            share, instance.params.price_min, instance.params.price_max
        ));
    }
    let prices = PriceVector::new(vec![share; instance.n()])?;
    Ok((prices, warnings))
}

/// Evaluates an arbitrary fixed price vector: users respond under `mode`,
/// and the same record shape as [`equilibrium::solve_spe`] is filled in,
/// so scheme outcomes are directly comparable with equilibria.
///
/// Clamp flags are positional — a price equal to a box bound is flagged
/// as resting on it — which makes evaluating the solver's own prices
/// reproduce the solver's outcome exactly. Prices strictly outside the
/// box are flagged to the nearer bound and noted in the warnings.
pub fn evaluate_scheme(
    instance: &MarketInstance,
    prices: &PriceVector,
    mode: ResponseMode,
) -> Result<EquilibriumOutcome> {
    if prices.len() != instance.n() {
        return Err(Error::Structural(format!(
            "instance has {} users but got {} prices",
            instance.n(),
            prices.len()
        )));
    }
    let mut warnings = Vec::new();
    let mut flags = Vec::with_capacity(prices.len());
    for (i, price) in prices.iter().enumerate() {
        let flag = if *price <= instance.params.price_min {
            ClampFlag::Lower
        } else if *price >= instance.params.price_max {
            ClampFlag::Upper
        } else {
            ClampFlag::Interior
        };
        flags.push(flag);
        if *price < instance.params.price_min || *price > instance.params.price_max {
            warnings.push(format!(
                "price[{i}] = {price} lies outside the box [{}, {}]",
                instance.params.price_min, instance.params.price_max
            ));
        }
    }
    let quantities = instance
        .users
        .iter()
        .zip(prices.iter())
        .map(|(user, price)| equilibrium::best_response(*price, user, mode))
        .collect::<Result<Vec<f64>>>()?;
    equilibrium::assemble_outcome(
        instance,
        prices.as_slice().to_vec(),
        quantities,
        flags,
        mode,
        warnings,
    )
}
