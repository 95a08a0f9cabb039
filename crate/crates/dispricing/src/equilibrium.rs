//! Backward-induction solver for the two-stage pricing game.
//!
//! Stage 2 (users): given a unit price, each user sells the quantity that
//! maximizes its concave utility. Stage 1 (authority): anticipating those
//! responses, the authority picks each unit price to minimize its relaxed
//! per-user objective, then projects onto the admissible price box. With
//! the payment exponent `k = 2` the stage-1 condition is a quadratic with
//! exactly one admissible root, so the whole equilibrium is closed-form;
//! other exponents go through a bracketed bisection on the stationarity
//! condition.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    self, EnergyUser, EnergyVector, MarketInstance, MarketParams, PriceVector,
    SfaCostCoefficients,
};

/// How stage-2 quantities are computed from prices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResponseMode {
    /// The response is the unconstrained maximizer of the utility, even
    /// when it exceeds the user's available energy. This is the behavior
    /// the stage-1 algebra assumes, and the default everywhere.
    #[default]
    Paper,
    /// The response is capped to the user's strategy interval
    /// `[0, available_energy]`. Stage-1 prices are unchanged; only
    /// quantities and everything downstream of them differ.
    Physical,
}

/// Where a stage-1 price landed relative to the admissible box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClampFlag {
    /// Projected up to `price_min`.
    Lower,
    /// The unconstrained optimum was already inside the box. A value
    /// exactly on a bound also counts as interior.
    Interior,
    /// Projected down to `price_max`.
    Upper,
}

impl std::fmt::Display for ClampFlag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ClampFlag::Lower => "lower",
            ClampFlag::Interior => "interior",
            ClampFlag::Upper => "upper",
        };
        f.write_str(s)
    }
}

/// Everything the solved game produces, in report-ready form. The same
/// record shape is used for equilibria, fixed-price evaluations, and the
/// brute-force oracle, so outputs are directly comparable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumOutcome {
    /// Per-user unit prices, cents/kWh.
    pub prices: PriceVector,
    /// Per-user sold energy, kWh.
    pub quantities: EnergyVector,
    /// Per-user payoffs at those prices and quantities, cents.
    pub utilities: Vec<f64>,
    /// Per-user procurement cost `e*c^k + a*c + b`, cents.
    pub per_user_costs: Vec<f64>,
    /// Grid bill for the shortfall, cents (negative on oversupply).
    pub grid_cost: f64,
    /// Total authority cost, cents.
    pub total_cost: f64,
    /// Energy bought from the grid, kWh (negative on oversupply).
    pub grid_purchase: f64,
    /// Sum of unit prices, cents/kWh, to compare against the cap.
    pub budget_used: f64,
    /// Where each price landed relative to the box.
    pub clamp_flags: Vec<ClampFlag>,
    /// Which response rule produced the quantities.
    pub response_mode: ResponseMode,
    /// Soft diagnostics: budget overrun, oversupply, out-of-box prices.
    pub warnings: Vec<String>,
}

/// A user's optimal quantity at a given unit price.
///
/// The utility is a downward parabola in the quantity, so the optimum is
/// its vertex `(price + available_energy) / (2 * inconvenience)`; in
/// [`ResponseMode::Physical`] the vertex is clamped to the strategy
/// interval.
///
/// # Arguments
/// * `price` — unit price offered, cents/kWh, `>= 0`.
///
/// # Returns
/// Sold energy in kWh.
pub fn best_response(price: f64, user: &EnergyUser, mode: ResponseMode) -> Result<f64> {
    if !price.is_finite() || price < 0.0 {
        return Err(Error::Domain(format!("price = {price} must be finite and >= 0")));
    }
    let vertex = (price + user.available_energy) / (2.0 * user.inconvenience);
    Ok(match mode {
        ResponseMode::Paper => vertex,
        ResponseMode::Physical => vertex.clamp(0.0, user.strategy_max),
    })
}

/// The stage-1 price before projection onto the box, for `k = 2`.
///
/// Setting the derivative of the per-user relaxed objective to zero gives
/// `3c^2 + 2Ec + 2α(a - λ) - c_g = 0`; of its two roots only
/// `c = (-E + sqrt(E^2 - 3(2α(a - λ) - c_g))) / 3` can be nonnegative,
/// and with `λ > a` it always is.
///
/// # Errors
/// * `Domain` when `params.exponent != 2` (use
///   [`stage1_price_general_k`] instead).
/// * `Infeasible` when the discriminant is negative or the surviving root
///   is negative — both only possible when `λ` fails to dominate `a`.
pub fn stage1_price_unclamped(
    user: &EnergyUser,
    coeff: &SfaCostCoefficients,
    params: &MarketParams,
) -> Result<f64> {
    if params.exponent != 2 {
        return Err(Error::Domain(format!(
            "closed form requires exponent 2, got {}",
            params.exponent
        )));
    }
    let e = user.available_energy;
    let alpha = user.inconvenience;
    let discriminant = e * e - 3.0 * (2.0 * alpha * (coeff.a - params.lambda) - params.grid_price);
    if discriminant < 0.0 {
        return Err(Error::Infeasible(format!(
            "negative discriminant for user {}: lambda = {} does not dominate a = {}",
            user.id, params.lambda, coeff.a
        )));
    }
    let price = (-e + discriminant.sqrt()) / 3.0;
    if price < 0.0 {
        return Err(Error::Infeasible(format!(
            "stage-1 optimum for user {} is negative ({price}); lambda = {} is too small",
            user.id, params.lambda
        )));
    }
    Ok(price)
}

fn project(price: f64, params: &MarketParams) -> (f64, ClampFlag) {
    if price < params.price_min {
        (params.price_min, ClampFlag::Lower)
    } else if price > params.price_max {
        (params.price_max, ClampFlag::Upper)
    } else {
        (price, ClampFlag::Interior)
    }
}

/// The admissible stage-1 price for `k = 2`: the unconstrained optimum
/// projected onto `[price_min, price_max]`, with a flag recording which
/// side (if any) it was clamped to.
///
/// Projection is exact here because the per-user objective is strictly
/// convex in the price: if the vertex lies outside the box, the objective
/// is monotone across it and the nearer bound is optimal.
pub fn stage1_price(
    user: &EnergyUser,
    coeff: &SfaCostCoefficients,
    params: &MarketParams,
) -> Result<(f64, ClampFlag)> {
    let raw = stage1_price_unclamped(user, coeff, params)?;
    Ok(project(raw, params))
}

/// Stage-1 price for a general payment exponent `k >= 1`, by bracketed
/// bisection on the stationarity condition
/// `(k+1)c^k/(2α) + kEc^(k-1)/(2α) + a - c_g/(2α) - λ = 0`,
/// whose left side is increasing in `c > 0`.
///
/// The root is resolved to an absolute 1e-9 before projection onto the
/// box. For `k = 2` this agrees with [`stage1_price`] to the same
/// tolerance.
///
/// # Errors
/// `Infeasible` when the condition has no sign change on `[0, inf)`,
/// i.e. no positive stationary point exists.
pub fn stage1_price_general_k(
    user: &EnergyUser,
    coeff: &SfaCostCoefficients,
    params: &MarketParams,
) -> Result<(f64, ClampFlag)> {
    if params.exponent < 1 {
        return Err(Error::Domain(format!(
            "exponent must be >= 1, got {}",
            params.exponent
        )));
    }
    let e = user.available_energy;
    let two_alpha = 2.0 * user.inconvenience;
    let k = params.exponent;
    let stationarity = |c: f64| -> f64 {
        let ck = c.powi(k as i32);
        let ck1 = if k >= 1 { c.powi(k as i32 - 1) } else { 0.0 };
        ((k + 1) as f64 * ck + k as f64 * e * ck1) / two_alpha + coeff.a
            - params.grid_price / two_alpha
            - params.lambda
    };

    let mut lo = 0.0;
    if stationarity(lo) >= 0.0 {
        return Err(Error::Infeasible(format!(
            "stationarity condition for user {} has no positive root: \
             already nonnegative at c = 0",
            user.id
        )));
    }
    let mut hi = params.price_max.max(1.0);
    let mut doubled = 0;
    while stationarity(hi) < 0.0 {
        hi *= 2.0;
        doubled += 1;
        if doubled > 200 {
            return Err(Error::Infeasible(format!(
                "no sign change found for user {} while bracketing the stationarity root",
                user.id
            )));
        }
    }
    // Bisection: the bracket [lo, hi] always straddles the sign change.
    let mut iterations = 0;
    while hi - lo > 1e-9 && iterations < 200 {
        let mid = 0.5 * (lo + hi);
        if stationarity(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    Ok(project(0.5 * (lo + hi), params))
}

/// Bookkeeping shared by the solver, the fixed-price evaluator, and the
/// brute-force oracle: given prices and quantities from any source,
/// fill in utilities, costs, and diagnostics.
pub(crate) fn assemble_outcome(
    instance: &MarketInstance,
    prices: Vec<f64>,
    quantities: Vec<f64>,
    clamp_flags: Vec<ClampFlag>,
    mode: ResponseMode,
    mut warnings: Vec<String>,
) -> Result<EquilibriumOutcome> {
    let prices = PriceVector::new(prices)?;
    let quantities = EnergyVector::new(quantities)?;
    let utilities = instance
        .users
        .iter()
        .enumerate()
        .map(|(i, user)| model::utility(quantities[i], prices[i], user))
        .collect::<Result<Vec<f64>>>()?;
    let cost = model::sfa_cost(&quantities, &prices, instance)?;
    let budget_used = prices.total();
    if cost.oversupply {
        warnings.push(format!(
            "users oversupply the requirement by {:.4} kWh; the grid term is negative",
            -cost.grid_energy
        ));
    }
    if budget_used > instance.params.total_unit_price {
        warnings.push(format!(
            "price sum {:.4} exceeds the cap {:.4}; consider tuning lambda",
            budget_used, instance.params.total_unit_price
        ));
    }
    Ok(EquilibriumOutcome {
        prices,
        quantities,
        utilities,
        per_user_costs: cost.per_user,
        grid_cost: cost.grid_cost,
        total_cost: cost.total,
        grid_purchase: cost.grid_energy,
        budget_used,
        clamp_flags,
        response_mode: mode,
        warnings,
    })
}

/// Solves the full game by backward induction: each user's stage-1 price
/// (closed form for `k = 2`, bisection otherwise), then each user's
/// stage-2 response under `mode`.
///
/// The per-user problems are separable, so the price vector solves the
/// joint stage-1 problem for the given `lambda`. Whether that `lambda`
/// actually enforces the price-sum cap is reported, not assumed: a
/// warning is recorded whenever the solved prices exceed it (see
/// [`tune_lambda`]).
///
/// # Errors
/// `Validation` listing every violated invariant when the instance is not
/// well-formed; `Infeasible` from the per-user stage-1 solve.
pub fn solve_spe(instance: &MarketInstance, mode: ResponseMode) -> Result<EquilibriumOutcome> {
    let violations = model::validate(instance);
    if !violations.is_empty() {
        return Err(Error::Validation(violations));
    }
    let mut prices = Vec::with_capacity(instance.n());
    let mut flags = Vec::with_capacity(instance.n());
    for (user, coeff) in instance.users.iter().zip(&instance.coefficients) {
        let (price, flag) = if instance.params.exponent == 2 {
            stage1_price(user, coeff, &instance.params)?
        } else {
            stage1_price_general_k(user, coeff, &instance.params)?
        };
        prices.push(price);
        flags.push(flag);
    }
    let quantities = instance
        .users
        .iter()
        .zip(&prices)
        .map(|(user, price)| best_response(*price, user, mode))
        .collect::<Result<Vec<f64>>>()?;
    assemble_outcome(instance, prices, quantities, flags, mode, Vec::new())
}

/// Finds a multiplier under which the solved price sum meets a budget
/// target, returning the multiplier and the equilibrium solved with it.
///
/// The price sum is continuous and nondecreasing in `lambda`, so when the
/// given `lambda` overshoots the target the right value is found by
/// bisection between "just above the largest `a`" (where every price
/// rests on `price_min`) and the given `lambda`. If the instance already
/// meets the target it is returned untouched.
///
/// # Arguments
/// * `target_budget` — cap to enforce on the sum of unit prices,
///   cents/kWh. Must be at least `n * price_min`, the smallest sum any
///   multiplier can reach.
///
/// # Returns
/// `(lambda, outcome)` with `outcome.budget_used <= target_budget + 1e-6`.
pub fn tune_lambda(
    instance: &MarketInstance,
    target_budget: f64,
) -> Result<(f64, EquilibriumOutcome)> {
    let floor = instance.n() as f64 * instance.params.price_min;
    if target_budget < floor {
        return Err(Error::Infeasible(format!(
            "budget target {target_budget} is below the reachable floor {floor} \
             ({} users at price_min {})",
            instance.n(),
            instance.params.price_min
        )));
    }
    let outcome = solve_spe(instance, ResponseMode::Paper)?;
    if outcome.budget_used <= target_budget + 1e-6 {
        return Ok((instance.params.lambda, outcome));
    }

    // Just above max(a) every unconstrained optimum is tiny and clamps to
    // price_min, except in pathological parameter corners; check rather
    // than assume.
    let max_a = instance.max_linear_coefficient();
    let mut lo = max_a + 1e-9 * max_a.abs().max(1.0);
    let mut hi = instance.params.lambda;
    let budget_at = |lambda: f64| -> Result<f64> {
        Ok(solve_spe(&instance.with_lambda(lambda), ResponseMode::Paper)?.budget_used)
    };
    if budget_at(lo)? > target_budget + 1e-6 {
        return Err(Error::Infeasible(format!(
            "budget target {target_budget} is unreachable: the price sum stays above it \
             for every admissible lambda"
        )));
    }
    let mut lambda = lo;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let budget = budget_at(mid)?;
        if (budget - target_budget).abs() <= 1e-6 {
            lambda = mid;
            let outcome = solve_spe(&instance.with_lambda(mid), ResponseMode::Paper)?;
            return Ok((lambda, outcome));
        }
        if budget > target_budget {
            hi = mid;
        } else {
            lo = mid;
            lambda = mid;
        }
    }
    // The bracket collapsed without hitting the target exactly (flat
    // stretches happen when every price rests on a clamp); `lo` is the
    // best multiplier known to respect the budget.
    let outcome = solve_spe(&instance.with_lambda(lambda), ResponseMode::Paper)?;
    Ok((lambda, outcome))
}
