//! Brute-force and finite-difference reference computations.
//!
//! Everything in this module re-derives equilibrium quantities from the
//! definitions alone — sampling payoffs and costs on grids, bisecting on
//! sampled slopes — and never calls the closed-form solver. Tests and the
//! `verify` command compare the two routes; agreement is the evidence
//! that the algebra in [`crate::equilibrium`] is right.
//!
//! The payoff expression is transcribed here a second time on purpose:
//! a transcription slip in either copy shows up as a disagreement.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::equilibrium::{self, ClampFlag, EquilibriumOutcome, ResponseMode};
use crate::error::{Error, Result};
use crate::model::{EnergyUser, MarketInstance, MarketParams, SfaCostCoefficients};

/// Largest number of grid points a single scan may touch.
const MAX_SCAN_POINTS: f64 = 1e7;

/// A validated one-dimensional grid: `lower + j * step` for
/// `j = 0, 1, ...`, plus the exact upper endpoint when the arithmetic
/// grid stops short of it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanSpec {
    lower: f64,
    upper: f64,
    step: f64,
}

impl ScanSpec {
    /// Builds a scan over `[lower, upper]` with the given step.
    ///
    /// # Errors
    /// `Structural` when the interval is degenerate, the step is not a
    /// positive finite number, or the grid would exceed 1e7 points.
    pub fn new(lower: f64, upper: f64, step: f64) -> Result<Self> {
        if !lower.is_finite() || !upper.is_finite() || lower >= upper {
            return Err(Error::Structural(format!(
                "degenerate scan interval [{lower}, {upper}]"
            )));
        }
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::Structural(format!("scan step {step} must be > 0")));
        }
        if (upper - lower) / step > MAX_SCAN_POINTS {
            return Err(Error::Structural(format!(
                "scan of [{lower}, {upper}] at step {step} exceeds {MAX_SCAN_POINTS} points"
            )));
        }
        Ok(ScanSpec { lower, upper, step })
    }

    /// Scan over the admissible price box of `params`.
    pub fn prices(params: &MarketParams, step: f64) -> Result<Self> {
        ScanSpec::new(params.price_min, params.price_max, step)
    }

    /// Scan over `[0, 3 * available_energy]`, wide enough to contain the
    /// stage-2 optimum for every admissible price in the shipped
    /// parameter ranges.
    pub fn energy(user: &EnergyUser, step: f64) -> Result<Self> {
        ScanSpec::new(0.0, 3.0 * user.available_energy, step)
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Index of the last arithmetic grid point at or below `upper`
    /// (tolerating float dust just beyond it; points are clamped to
    /// `upper` when evaluated).
    fn last_index(&self) -> u64 {
        ((self.upper - self.lower) / self.step * (1.0 + 1e-12) + 1e-9).floor() as u64
    }

    fn point(&self, j: u64) -> f64 {
        (self.lower + j as f64 * self.step).min(self.upper)
    }
}

/// The payoff definition, evaluated directly. No domain checks: slope
/// probes deliberately sample just outside `[0, strategy_max]`.
fn utility_at(energy: f64, price: f64, user: &EnergyUser) -> f64 {
    energy * price + (user.available_energy - user.inconvenience * energy) * energy
}

/// Grid argmax of the payoff over the scan — the reference stage-2
/// response. Ties break toward smaller energy.
///
/// Accurate to half a grid step: the payoff is a parabola, so the grid
/// argmax is a nearest grid point to the true vertex.
pub fn best_response_oracle(price: f64, user: &EnergyUser, scan: &ScanSpec) -> f64 {
    let mut best_e = scan.point(0);
    let mut best_u = utility_at(best_e, price, user);
    let last = scan.last_index();
    for j in 1..=last {
        let e = scan.point(j);
        let u = utility_at(e, price, user);
        if u > best_u {
            best_u = u;
            best_e = e;
        }
    }
    if scan.lower + last as f64 * scan.step < scan.upper {
        let u = utility_at(scan.upper, price, user);
        if u > best_u {
            best_e = scan.upper;
        }
    }
    best_e
}

/// Stage-2 response resolved to ~1e-12 kWh by bisecting on sampled
/// slopes over `[0, 3 * available_energy]`.
///
/// Near its maximum the payoff is flat to float precision over a window
/// many orders of magnitude wider than 1e-12, so no value-comparison
/// scan can localize the vertex this tightly. The symmetric difference
/// quotient `(U(e+h) - U(e-h)) / 2h` stays well-conditioned there — and
/// for a quadratic payoff it equals the true slope at any `h` — so the
/// vertex is pinned down as its sign change instead. Used wherever a
/// scan needs the response essentially exact, in particular inside
/// [`stage1_price_oracle`].
pub fn best_response_refined(price: f64, user: &EnergyUser) -> f64 {
    let h = 1.0;
    let slope = |e: f64| {
        (utility_at(e + h, price, user) - utility_at(e - h, price, user)) / (2.0 * h)
    };
    let mut lo = 0.0;
    let mut hi = 3.0 * user.available_energy;
    if slope(lo) <= 0.0 {
        return lo;
    }
    if slope(hi) >= 0.0 {
        return hi;
    }
    for _ in 0..100 {
        if hi - lo <= 1e-12 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if slope(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// The per-user share of the authority's relaxed objective at a price,
/// with the user already playing its (refined) stage-2 response:
/// `e(c) * c^k + a*c + b - grid_price * e(c) - lambda * c`.
///
/// Constant terms shared by all prices are dropped; minimizing this in
/// the price is exactly the stage-1 problem.
pub fn stage1_objective(
    price: f64,
    user: &EnergyUser,
    coeff: &SfaCostCoefficients,
    params: &MarketParams,
) -> f64 {
    let response = best_response_refined(price, user);
    response * price.powi(params.exponent as i32) + coeff.a * price + coeff.b
        - params.grid_price * response
        - params.lambda * price
}

/// Argmin of `g` on the scan's arithmetic grid restricted to a window,
/// expanding the window whenever the best point lands on its edge.
/// Assumes `g` is unimodal on the scan (true for the stage-1 objective,
/// which is strictly convex in the price for every exponent `>= 1`).
fn aligned_argmin<F: Fn(f64) -> f64>(g: &F, scan: &ScanSpec, lo: f64, hi: f64) -> f64 {
    let last = scan.last_index();
    let mut j_lo = if lo <= scan.lower {
        0
    } else {
        (((lo - scan.lower) / scan.step).floor() as u64).min(last)
    };
    let mut j_hi = if hi >= scan.upper {
        last
    } else {
        (((hi - scan.lower) / scan.step).ceil() as u64).min(last)
    };
    loop {
        let mut best_j = j_lo;
        let mut best_x = scan.point(j_lo);
        let mut best_g = g(best_x);
        for j in (j_lo + 1)..=j_hi {
            let x = scan.point(j);
            let v = g(x);
            if v < best_g {
                best_g = v;
                best_x = x;
                best_j = j;
            }
        }
        if j_hi == last && scan.lower + last as f64 * scan.step < scan.upper {
            let v = g(scan.upper);
            if v < best_g {
                best_x = scan.upper;
                best_j = last + 1;
            }
        }
        let push_down = best_j == j_lo && j_lo > 0;
        let push_up = best_j >= j_hi && j_hi < last;
        if !push_down && !push_up {
            return best_x;
        }
        if push_down {
            j_lo = j_lo.saturating_sub(1024);
        }
        if push_up {
            j_hi = (j_hi + 1024).min(last);
        }
    }
}

/// Grid argmin of the per-user stage-1 objective over the scan — the
/// reference stage-1 price. Ties break toward smaller price.
///
/// The minimizer is first bracketed by repeated 64-interval scans (the
/// objective is strictly convex, so each pass keeps it inside the
/// shrunken window), then the requested grid is searched exactly within
/// the bracket. The result is therefore the same point a single flat
/// scan of the full grid would return, at a small fraction of the cost.
pub fn stage1_price_oracle(
    user: &EnergyUser,
    coeff: &SfaCostCoefficients,
    params: &MarketParams,
    scan: &ScanSpec,
) -> f64 {
    let g = |c: f64| stage1_objective(c, user, coeff, params);
    let mut lo = scan.lower;
    let mut hi = scan.upper;
    let stop = (100.0 * scan.step).max(1e-9);
    while hi - lo > stop {
        let step = (hi - lo) / 64.0;
        let mut best_x = lo;
        let mut best_g = g(lo);
        for j in 1..=64 {
            let x = (lo + j as f64 * step).min(hi);
            let v = g(x);
            if v < best_g {
                best_g = v;
                best_x = x;
            }
        }
        lo = (best_x - 2.0 * step).max(scan.lower);
        hi = (best_x + 2.0 * step).min(scan.upper);
    }
    let margin = (hi - lo).max(16.0 * scan.step);
    let center = 0.5 * (lo + hi);
    aligned_argmin(&g, scan, center - margin, center + margin)
}

/// Central finite-difference estimates of the first and second
/// derivative of `f` at `x`:
/// `(f(x+h) - f(x-h)) / 2h` and `(f(x+h) - 2f(x) + f(x-h)) / h^2`.
///
/// # Input
/// `h` must be `> 0`; the estimates carry an O(h^2) truncation error
/// (exact for polynomials of degree <= 2, and the second estimate is
/// exact for cubics too).
///
/// # Output
/// `(first_derivative, second_derivative)`.
pub fn finite_difference<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> (f64, f64) {
    assert!(h > 0.0, "finite_difference needs h > 0, got {h}");
    let plus = f(x + h);
    let minus = f(x - h);
    let center = f(x);
    (
        (plus - minus) / (2.0 * h),
        (plus - 2.0 * center + minus) / (h * h),
    )
}

/// Full-game reference solution: every stage-1 price from
/// [`stage1_price_oracle`] on a per-user copy of `scan`, every stage-2
/// quantity from [`best_response_refined`], assembled into the same
/// record shape the solver produces.
///
/// Clamp flags are positional: a price landing exactly on a box bound is
/// flagged as clamped to it (the scan cannot distinguish a coincidental
/// interior optimum on the bound; that event has measure zero).
///
/// Intended for desk-scale checks; refuses instances with more than 20
/// users. A pinned box (`price_min == price_max`) skips the scan and
/// returns the pinned price for everyone.
pub fn spe_oracle(instance: &MarketInstance, scan: &ScanSpec) -> Result<EquilibriumOutcome> {
    if instance.n() > 20 {
        return Err(Error::Structural(format!(
            "spe_oracle is a desk-scale check; got {} users (max 20)",
            instance.n()
        )));
    }
    let params = &instance.params;
    let pinned = params.price_min == params.price_max;
    let mut prices = Vec::with_capacity(instance.n());
    let mut flags = Vec::with_capacity(instance.n());
    for (user, coeff) in instance.users.iter().zip(&instance.coefficients) {
        let price = if pinned {
            params.price_min
        } else {
            stage1_price_oracle(user, coeff, params, scan)
        };
        let flag = if pinned {
            ClampFlag::Interior
        } else if price == scan.lower {
            ClampFlag::Lower
        } else if price == scan.upper {
            ClampFlag::Upper
        } else {
            ClampFlag::Interior
        };
        prices.push(price);
        flags.push(flag);
    }
    let quantities: Vec<f64> = instance
        .users
        .iter()
        .zip(&prices)
        .map(|(user, price)| best_response_refined(*price, user))
        .collect();
    equilibrium::assemble_outcome(
        instance,
        prices,
        quantities,
        flags,
        ResponseMode::Paper,
        Vec::new(),
    )
}

/// Outcome of an oracle-agreement run: worst deviations between the
/// closed-form solver and the scan oracles over randomized single-user
/// markets, plus how often each clamp regime was exercised.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub trials: usize,
    /// Seed of the trial stream, recorded so any run can be replayed.
    pub seed: u64,
    /// Grid step of the price scans (also the agreement target).
    pub price_scan_step: f64,
    /// Grid step of the energy scans (also the agreement target).
    pub energy_scan_step: f64,
    /// Worst `|closed-form price - scanned price|`, cents/kWh.
    pub max_price_deviation: f64,
    /// Worst `|closed-form response - scanned response|`, kWh.
    pub max_best_response_deviation: f64,
    /// Worst residual of the stage-1 quadratic at the unclamped
    /// closed-form price.
    pub max_quadratic_residual: f64,
    pub lower_clamps: usize,
    pub interior: usize,
    pub upper_clamps: usize,
}

/// Runs `trials` randomized single-user markets (available energy in
/// [50, 250] kWh, inconvenience in [0.5, 3], multiplier in [500, 5000],
/// benchmark box and coefficients) and compares the closed-form solver
/// against the scan oracles at steps 1e-4 (price) and 1e-3 (energy).
///
/// Deterministic for a given seed.
pub fn verify_trials(trials: usize, seed: u64) -> Result<VerifyReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeff = SfaCostCoefficients::default();
    let price_step = 1e-4;
    let energy_step = 1e-3;
    let mut report = VerifyReport {
        trials,
        seed,
        price_scan_step: price_step,
        energy_scan_step: energy_step,
        max_price_deviation: 0.0,
        max_best_response_deviation: 0.0,
        max_quadratic_residual: 0.0,
        lower_clamps: 0,
        interior: 0,
        upper_clamps: 0,
    };
    for trial in 0..trials {
        let energy = rng.gen_range(50.0..250.0);
        let alpha = rng.gen_range(0.5..3.0);
        let lambda = rng.gen_range(500.0..5000.0);
        let user = EnergyUser::new(format!("trial-{trial}"), energy, alpha);
        let params = MarketParams { lambda, ..MarketParams::default() };

        let (price, flag) = equilibrium::stage1_price(&user, &coeff, &params)?;
        let price_scan = ScanSpec::prices(&params, price_step)?;
        let scanned_price = stage1_price_oracle(&user, &coeff, &params, &price_scan);
        report.max_price_deviation =
            report.max_price_deviation.max((price - scanned_price).abs());

        let response = equilibrium::best_response(price, &user, ResponseMode::Paper)?;
        let energy_scan = ScanSpec::energy(&user, energy_step)?;
        let scanned_response = best_response_oracle(price, &user, &energy_scan);
        report.max_best_response_deviation = report
            .max_best_response_deviation
            .max((response - scanned_response).abs());

        let raw = equilibrium::stage1_price_unclamped(&user, &coeff, &params)?;
        let residual =
            3.0 * raw * raw + 2.0 * energy * raw + 2.0 * alpha * (coeff.a - lambda)
                - params.grid_price;
        report.max_quadratic_residual = report.max_quadratic_residual.max(residual.abs());

        match flag {
            ClampFlag::Lower => report.lower_clamps += 1,
            ClampFlag::Interior => report.interior += 1,
            ClampFlag::Upper => report.upper_clamps += 1,
        }
    }
    Ok(report)
}
