//! Core market types and the money functions of the pricing game.
//!
//! A shared facility authority (SFA) buys energy from a pool of energy
//! users (EUs) at individually chosen unit prices and covers any shortfall
//! against its requirement from the grid. Everything downstream — the
//! equilibrium solver, the brute-force oracles, the scenario harness — is
//! built on the functions here: the per-user [`utility`], the authority's
//! [`sfa_cost`], the budget-constrained [`lagrangian`], and [`validate`].
//!
//! Unit conventions, used consistently across the crate:
//!
//! * energy in kWh,
//! * unit prices in cents per kWh,
//! * money in cents.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One energy user: how much energy it could sell and how much it minds
/// selling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyUser {
    /// Opaque identifier used in reports.
    pub id: String,
    /// Energy the user has available for sale, kWh. Strictly positive.
    pub available_energy: f64,
    /// Inconvenience coefficient: marginal discomfort of selling one more
    /// kWh. Strictly positive; larger means the user holds back more.
    pub inconvenience: f64,
    /// Upper end of the user's strategy interval `[0, strategy_max]`,
    /// always equal to `available_energy`.
    pub strategy_max: f64,
}

impl EnergyUser {
    /// Builds a user whose strategy interval is pinned to its available
    /// energy.
    pub fn new(id: impl Into<String>, available_energy: f64, inconvenience: f64) -> Self {
        EnergyUser {
            id: id.into(),
            available_energy,
            inconvenience,
            strategy_max: available_energy,
        }
    }
}

/// Per-user coefficients of the authority's cost besides the energy
/// payment itself: `a` scales linearly with the unit price (metering,
/// billing overhead per price level), `b` is a fixed service charge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SfaCostCoefficients {
    /// Linear price coefficient, cents per (cent/kWh). Strictly positive.
    pub a: f64,
    /// Fixed charge, cents. Strictly positive.
    pub b: f64,
}

impl Default for SfaCostCoefficients {
    fn default() -> Self {
        SfaCostCoefficients { a: 1.0, b: 1.0 }
    }
}

/// Market-level parameters of the authority's problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketParams {
    /// Energy the authority must procure in total, kWh.
    pub required_energy: f64,
    /// Grid unit price for shortfall energy, cents/kWh. Exceeds every
    /// admissible user price.
    pub grid_price: f64,
    /// Cap on the sum of unit prices offered to users, cents/kWh.
    pub total_unit_price: f64,
    /// Lower bound of the per-user price box, cents/kWh.
    pub price_min: f64,
    /// Upper bound of the per-user price box, cents/kWh.
    pub price_max: f64,
    /// Multiplier attached to the price-sum constraint in the authority's
    /// relaxed objective. Must exceed every `a` coefficient.
    pub lambda: f64,
    /// Exponent `k` of the unit price inside the authority's energy
    /// payment term. The closed-form solver requires `k = 2`.
    pub exponent: u32,
}

impl Default for MarketParams {
    /// The benchmark desk parameters used by the shipped scenarios.
    fn default() -> Self {
        MarketParams {
            required_energy: 650.0,
            grid_price: 50.0,
            total_unit_price: 380.0,
            price_min: 10.0,
            price_max: 38.0,
            lambda: 1000.0,
            exponent: 2,
        }
    }
}

/// A complete problem instance: users, their cost coefficients (aligned
/// by index), and the market parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketInstance {
    pub users: Vec<EnergyUser>,
    pub coefficients: Vec<SfaCostCoefficients>,
    pub params: MarketParams,
}

impl MarketInstance {
    /// Builds an instance, checking only that users and coefficients
    /// align. Semantic invariants are reported by [`validate`].
    pub fn new(
        users: Vec<EnergyUser>,
        coefficients: Vec<SfaCostCoefficients>,
        params: MarketParams,
    ) -> Result<Self> {
        if users.len() != coefficients.len() {
            return Err(Error::Structural(format!(
                "{} users but {} coefficient pairs",
                users.len(),
                coefficients.len()
            )));
        }
        Ok(MarketInstance { users, coefficients, params })
    }

    /// Builds an instance with default coefficients for every user.
    pub fn with_default_coefficients(users: Vec<EnergyUser>, params: MarketParams) -> Self {
        let coefficients = vec![SfaCostCoefficients::default(); users.len()];
        MarketInstance { users, coefficients, params }
    }

    /// Number of users.
    pub fn n(&self) -> usize {
        self.users.len()
    }

    /// Copy of the instance with a different multiplier, used by the
    /// budget-tuning loop.
    pub fn with_lambda(&self, lambda: f64) -> Self {
        let mut out = self.clone();
        out.params.lambda = lambda;
        out
    }

    /// Largest linear cost coefficient across users (0 when empty).
    pub fn max_linear_coefficient(&self) -> f64 {
        self.coefficients.iter().map(|c| c.a).fold(0.0, f64::max)
    }
}

/// Per-user unit prices, cents/kWh, aligned with `MarketInstance::users`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PriceVector(Vec<f64>);

/// Per-user sold energy, kWh, aligned with `MarketInstance::users`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EnergyVector(Vec<f64>);

fn check_entries(kind: &str, values: &[f64]) -> Result<()> {
    for (i, v) in values.iter().enumerate() {
        if !v.is_finite() || *v < 0.0 {
            return Err(Error::Domain(format!(
                "{kind}[{i}] = {v} must be finite and >= 0"
            )));
        }
    }
    Ok(())
}

impl PriceVector {
    /// Wraps a vector of prices; every entry must be finite and `>= 0`.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_entries("price", &values)?;
        Ok(PriceVector(values))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    /// Sum of all unit prices, cents/kWh — the quantity capped by
    /// `MarketParams::total_unit_price`.
    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

impl std::ops::Index<usize> for PriceVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl EnergyVector {
    /// Wraps a vector of energies; every entry must be finite and `>= 0`.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_entries("energy", &values)?;
        Ok(EnergyVector(values))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    /// Total energy sold by all users, kWh.
    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

impl std::ops::Index<usize> for EnergyVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// A user's payoff for selling `energy` at unit price `price`: the payment
/// received plus the consumption value of what remains, net of the
/// inconvenience of parting with it.
///
/// Strictly concave in `energy` (the coefficient on the quadratic term is
/// `-inconvenience`), which is what makes the stage-2 response unique.
///
/// # Arguments
/// * `energy` — kWh offered for sale, `>= 0`.
/// * `price` — unit price offered to this user, cents/kWh, `>= 0`.
///
/// # Returns
/// Payoff in cents.
pub fn utility(energy: f64, price: f64, user: &EnergyUser) -> Result<f64> {
    if !energy.is_finite() || energy < 0.0 {
        return Err(Error::Domain(format!("energy = {energy} must be finite and >= 0")));
    }
    if !price.is_finite() || price < 0.0 {
        return Err(Error::Domain(format!("price = {price} must be finite and >= 0")));
    }
    Ok(energy * price + (user.available_energy - user.inconvenience * energy) * energy)
}

/// Cost of one procurement round from the authority's side, split into
/// its components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SfaCost {
    /// Per-user cost `e_i * c_i^k + a_i * c_i + b_i`, cents.
    pub per_user: Vec<f64>,
    /// Energy bought from the grid, kWh: requirement minus what users
    /// sold. Negative when users oversupply.
    pub grid_energy: f64,
    /// Grid bill `grid_price * grid_energy`, cents (negative on
    /// oversupply — the formula is applied literally).
    pub grid_cost: f64,
    /// Total cost, cents.
    pub total: f64,
    /// Set when users sold more than the requirement, i.e. the grid term
    /// went negative.
    pub oversupply: bool,
}

/// The authority's total procurement cost at given quantities and prices.
///
/// Each user costs `e_i * c_i^k + a_i * c_i + b_i`; the shortfall against
/// `required_energy` is bought from the grid at `grid_price`. When users
/// collectively oversupply, the grid term goes negative and the result is
/// flagged rather than clamped.
///
/// # Arguments
/// * `energy` — per-user sold energy, aligned with `instance.users`.
/// * `prices` — per-user unit prices, aligned with `instance.users`.
///
/// # Returns
/// The cost decomposition, total in cents.
pub fn sfa_cost(
    energy: &EnergyVector,
    prices: &PriceVector,
    instance: &MarketInstance,
) -> Result<SfaCost> {
    let n = instance.n();
    if energy.len() != n || prices.len() != n {
        return Err(Error::Structural(format!(
            "instance has {n} users but got {} energies and {} prices",
            energy.len(),
            prices.len()
        )));
    }
    let k = instance.params.exponent as i32;
    let per_user: Vec<f64> = (0..n)
        .map(|i| {
            let coeff = &instance.coefficients[i];
            energy[i] * prices[i].powi(k) + coeff.a * prices[i] + coeff.b
        })
        .collect();
    let sold = energy.total();
    let grid_energy = instance.params.required_energy - sold;
    let grid_cost = instance.params.grid_price * grid_energy;
    let total = per_user.iter().sum::<f64>() + grid_cost;
    Ok(SfaCost {
        per_user,
        grid_energy,
        grid_cost,
        total,
        oversupply: sold > instance.params.required_energy,
    })
}

/// Stage-2 equilibrium response to a price, used where the relaxed
/// objective substitutes user behavior: the vertex of the utility
/// parabola.
pub(crate) fn response_vertex(price: f64, user: &EnergyUser) -> f64 {
    (price + user.available_energy) / (2.0 * user.inconvenience)
}

/// Default user id: `eu-01`, `eu-02`, ... zero-padded to the roster
/// width. Shared by the scenario builders and the config loader so that
/// equivalent instances compare equal.
pub(crate) fn default_user_id(index: usize, n: usize) -> String {
    let width = n.to_string().len().max(2);
    format!("eu-{:0width$}", index + 1)
}

/// The authority's relaxed objective: procurement cost with each user
/// already playing its stage-2 response, plus the price-sum constraint
/// priced at `lambda`.
///
/// `lagrangian(prices) - sfa_cost(at responses) == lambda *
/// (total_unit_price - sum of prices)` identically.
///
/// # Arguments
/// * `prices` — per-user unit prices, aligned with `instance.users`.
///
/// # Returns
/// Objective value in cents.
pub fn lagrangian(prices: &PriceVector, instance: &MarketInstance) -> Result<f64> {
    let n = instance.n();
    if prices.len() != n {
        return Err(Error::Structural(format!(
            "instance has {n} users but got {} prices",
            prices.len()
        )));
    }
    let params = &instance.params;
    let k = params.exponent as i32;
    let mut user_terms = 0.0;
    let mut sold = 0.0;
    for i in 0..n {
        let response = response_vertex(prices[i], &instance.users[i]);
        let coeff = &instance.coefficients[i];
        user_terms += response * prices[i].powi(k) + coeff.a * prices[i] + coeff.b;
        sold += response;
    }
    Ok(user_terms
        + params.grid_price * (params.required_energy - sold)
        + params.lambda * (params.total_unit_price - prices.total()))
}

/// Checks every model invariant and reports violations as data — one
/// entry per violated invariant, empty when the instance is well-formed.
///
/// Solvers require a clean report before running; evaluation functions
/// such as [`sfa_cost`] deliberately do not, so that raw bookkeeping stays
/// usable on historical or degenerate data.
pub fn validate(instance: &MarketInstance) -> Vec<String> {
    let mut violations = Vec::new();
    if instance.users.is_empty() {
        violations.push("instance must have at least one user".to_string());
    }
    if instance.users.len() != instance.coefficients.len() {
        violations.push(format!(
            "{} users but {} coefficient pairs",
            instance.users.len(),
            instance.coefficients.len()
        ));
    }
    for user in &instance.users {
        if !(user.available_energy > 0.0) {
            violations.push(format!("user {}: available energy must be > 0", user.id));
        }
        if !(user.inconvenience > 0.0) {
            violations.push(format!("user {}: inconvenience must be > 0", user.id));
        }
        if user.strategy_max != user.available_energy {
            violations.push(format!(
                "user {}: strategy interval must end at available energy ({} != {})",
                user.id, user.strategy_max, user.available_energy
            ));
        }
    }
    for (i, coeff) in instance.coefficients.iter().enumerate() {
        if !(coeff.a > 0.0) {
            violations.push(format!("coefficients[{i}]: a must be > 0"));
        }
        if !(coeff.b > 0.0) {
            violations.push(format!("coefficients[{i}]: b must be > 0"));
        }
    }
    let p = &instance.params;
    if !(p.price_min > 0.0) {
        violations.push(format!("price_min ({}) must be > 0", p.price_min));
    }
    if p.price_min > p.price_max {
        violations.push(format!(
            "price_min ({}) must be <= price_max ({})",
            p.price_min, p.price_max
        ));
    }
    if !(p.price_max < p.grid_price) {
        violations.push(format!(
            "price_max ({}) must be < grid_price ({})",
            p.price_max, p.grid_price
        ));
    }
    if !(p.required_energy > 0.0) {
        violations.push(format!("required_energy ({}) must be > 0", p.required_energy));
    }
    if !(p.total_unit_price >= p.price_min) {
        violations.push(format!(
            "total_unit_price ({}) must be >= price_min ({})",
            p.total_unit_price, p.price_min
        ));
    }
    let max_a = instance.max_linear_coefficient();
    if !(p.lambda > max_a) {
        violations.push(format!(
            "lambda ({}) must exceed every linear coefficient (max a = {max_a})",
            p.lambda
        ));
    }
    if p.exponent < 1 {
        violations.push(format!("exponent ({}) must be >= 1", p.exponent));
    }
    violations
}
