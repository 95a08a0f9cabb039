//! The shipped experiments: population builders, the equilibrium-vs-EDS
//! comparison, price sweeps, and the small fixed-quantity worked example.
//!
//! Three named scenarios are exposed through the CLI:
//!
//! * `table1` — the two-user worked example with fixed quantities,
//!   contrasting uniform and discriminate prices;
//! * `fig5` — the stage-1 price across users of growing inconvenience;
//! * `casemix` — one of six ten-user populations, solved and compared
//!   against the equal-distribution scheme.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baselines;
use crate::equilibrium::{self, ClampFlag, ResponseMode};
use crate::error::{Error, Result};
use crate::model::{
    self, EnergyUser, EnergyVector, MarketInstance, MarketParams, PriceVector,
    SfaCostCoefficients,
};

/// A population template: classes of identical users, each class given
/// by its inconvenience coefficient and headcount, all sharing one
/// available-energy figure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseMix {
    /// `(inconvenience, headcount)` in ascending inconvenience order.
    classes: Vec<(f64, usize)>,
    /// Available energy of every user, kWh.
    common_energy: f64,
}

impl CaseMix {
    /// Builds a mix; zero-count classes are dropped and the rest sorted
    /// by ascending inconvenience.
    pub fn new(mut classes: Vec<(f64, usize)>, common_energy: f64) -> Result<Self> {
        if classes.iter().any(|(alpha, _)| !(*alpha > 0.0)) {
            return Err(Error::Domain(
                "every class inconvenience must be > 0".to_string(),
            ));
        }
        classes.retain(|(_, count)| *count > 0);
        if classes.is_empty() {
            return Err(Error::Structural("case mix has no users".to_string()));
        }
        if !(common_energy > 0.0) {
            return Err(Error::Domain(format!(
                "common energy must be > 0, got {common_energy}"
            )));
        }
        classes.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        Ok(CaseMix { classes, common_energy })
    }

    /// One of the six benchmark populations: ten users with 150 kWh each,
    /// split across inconvenience classes 1, 2 and 3. Case 1 is dominated
    /// by easy-going users; by case 6 everyone is reluctant.
    pub fn study_case(case: u8) -> Result<Self> {
        let counts: [(usize, usize, usize); 6] = [
            (6, 2, 2),
            (4, 3, 3),
            (2, 4, 4),
            (2, 2, 6),
            (1, 1, 8),
            (0, 0, 10),
        ];
        let (n1, n2, n3) = *(case as usize)
            .checked_sub(1)
            .and_then(|index| counts.get(index))
            .ok_or_else(|| Error::Config(format!("case must be 1..=6, got {case}")))?;
        CaseMix::new(vec![(1.0, n1), (2.0, n2), (3.0, n3)], 150.0)
    }

    pub fn classes(&self) -> &[(f64, usize)] {
        &self.classes
    }

    pub fn total_users(&self) -> usize {
        self.classes.iter().map(|(_, count)| count).sum()
    }
}

/// Materializes a mix into an instance: users are laid out class by
/// class in ascending inconvenience with default ids and coefficients.
pub fn build_case_mix(mix: &CaseMix, params: &MarketParams) -> Result<MarketInstance> {
    let n = mix.total_users();
    let mut users = Vec::with_capacity(n);
    for (alpha, count) in &mix.classes {
        for _ in 0..*count {
            let id = model::default_user_id(users.len(), n);
            users.push(EnergyUser::new(id, mix.common_energy, *alpha));
        }
    }
    Ok(MarketInstance::with_default_coefficients(users, *params))
}

/// Draws a population of `n` users with independently uniform available
/// energy and inconvenience. Deterministic for a given seed.
///
/// # Arguments
/// * `energy_range` — inclusive kWh bounds, e.g. `(50.0, 250.0)`.
/// * `alpha_range` — inclusive inconvenience bounds, e.g. `(1.0, 3.0)`.
pub fn sample_users(
    n: usize,
    energy_range: (f64, f64),
    alpha_range: (f64, f64),
    seed: u64,
) -> Result<Vec<EnergyUser>> {
    if n == 0 {
        return Err(Error::Structural("cannot sample zero users".to_string()));
    }
    for (label, (lo, hi)) in [("energy", energy_range), ("inconvenience", alpha_range)] {
        if !(lo > 0.0) || !(hi >= lo) {
            return Err(Error::Domain(format!(
                "{label} range ({lo}, {hi}) must satisfy 0 < lo <= hi"
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|i| {
            let energy = rng.gen_range(energy_range.0..=energy_range.1);
            let alpha = rng.gen_range(alpha_range.0..=alpha_range.1);
            EnergyUser::new(model::default_user_id(i, n), energy, alpha)
        })
        .collect())
}

/// Cost attributed to one inconvenience class under the equilibrium
/// prices, in dollars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassCost {
    pub inconvenience: f64,
    pub cost_dollars: f64,
}

/// Equilibrium-vs-EDS comparison for one instance, dollar-denominated
/// and decomposed the way the case-study tables are laid out. The
/// parameters and coefficients that produced it ride along.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    /// Report label, e.g. the case number.
    pub case: String,
    /// Per-class procurement cost under the equilibrium prices.
    pub classes: Vec<ClassCost>,
    /// Grid bill under the equilibrium prices, dollars.
    pub grid_cost_dollars: f64,
    /// Total equilibrium cost, dollars.
    pub total_proposed_dollars: f64,
    /// Total cost under equal-distribution prices, dollars.
    pub total_eds_dollars: f64,
    /// `100 * (eds - proposed) / eds`.
    pub percent_reduction: f64,
    pub params: MarketParams,
    pub coefficients: Vec<SfaCostCoefficients>,
    pub warnings: Vec<String>,
}

/// Solves the instance, evaluates the equal-distribution scheme on the
/// same users, and lays both out as one report.
///
/// Class costs plus the grid bill add up to the proposed total (to well
/// under a cent; the report stores unrounded dollars and rounding only
/// happens at the formatting boundary).
pub fn run_comparison(
    instance: &MarketInstance,
    mode: ResponseMode,
    case_label: &str,
) -> Result<ComparisonReport> {
    let proposed = equilibrium::solve_spe(instance, mode)?;
    let (eds, mut warnings) = baselines::eds_prices(instance)?;
    let eds_outcome = baselines::evaluate_scheme(instance, &eds, mode)?;
    warnings.extend(proposed.warnings.iter().cloned());
    warnings.extend(eds_outcome.warnings.iter().cloned());

    // Group per-user costs by inconvenience, ascending.
    let mut alphas: Vec<f64> = instance.users.iter().map(|u| u.inconvenience).collect();
    alphas.sort_by(|a, b| a.partial_cmp(b).unwrap());
    alphas.dedup();
    let classes: Vec<ClassCost> = alphas
        .iter()
        .map(|alpha| {
            let cents: f64 = instance
                .users
                .iter()
                .zip(&proposed.per_user_costs)
                .filter(|(user, _)| user.inconvenience == *alpha)
                .map(|(_, cost)| cost)
                .sum();
            ClassCost { inconvenience: *alpha, cost_dollars: cents / 100.0 }
        })
        .collect();

    let total_proposed = proposed.total_cost / 100.0;
    let total_eds = eds_outcome.total_cost / 100.0;
    let report = ComparisonReport {
        case: case_label.to_string(),
        classes,
        grid_cost_dollars: proposed.grid_cost / 100.0,
        total_proposed_dollars: total_proposed,
        total_eds_dollars: total_eds,
        percent_reduction: 100.0 * (total_eds - total_proposed) / total_eds,
        params: instance.params,
        coefficients: instance.coefficients.clone(),
        warnings,
    };
    debug_assert!(
        (report.classes.iter().map(|c| c.cost_dollars).sum::<f64>()
            + report.grid_cost_dollars
            - report.total_proposed_dollars)
            .abs()
            < 0.01,
        "class decomposition must add up to the total"
    );
    Ok(report)
}

/// Which user attribute a price sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    /// Vary the inconvenience coefficient.
    Alpha,
    /// Vary the available energy.
    Energy,
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alpha" => Ok(SweepAxis::Alpha),
            "energy" => Ok(SweepAxis::Energy),
            other => Err(Error::Config(format!(
                "unknown sweep axis '{other}' (expected alpha or energy)"
            ))),
        }
    }
}

/// One point of a stage-1 price sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    /// The varied attribute's value.
    pub axis_value: f64,
    /// The admissible stage-1 price at that value, cents/kWh.
    pub price_cents_per_kwh: f64,
    /// Which box bound (if any) the price rests on.
    pub clamp_flag: ClampFlag,
}

/// Stage-1 price at each value of the swept attribute, holding the rest
/// of the template user fixed.
pub fn sweep_prices(
    axis: SweepAxis,
    values: &[f64],
    template: &EnergyUser,
    coeff: &SfaCostCoefficients,
    params: &MarketParams,
) -> Result<Vec<SweepRow>> {
    values
        .iter()
        .map(|value| {
            if !(*value > 0.0) {
                return Err(Error::Domain(format!(
                    "sweep values must be > 0, got {value}"
                )));
            }
            let mut user = template.clone();
            match axis {
                SweepAxis::Alpha => user.inconvenience = *value,
                SweepAxis::Energy => {
                    user.available_energy = *value;
                    user.strategy_max = *value;
                }
            }
            let (price, flag) = equilibrium::stage1_price(&user, coeff, params)?;
            Ok(SweepRow { axis_value: *value, price_cents_per_kwh: price, clamp_flag: flag })
        })
        .collect()
}

/// One column of the fixed-quantity worked example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayCase {
    pub label: String,
    /// Unit prices paid, cents/kWh.
    pub prices: Vec<f64>,
    /// Quantities bought, kWh.
    pub quantities: Vec<f64>,
    /// Per-user revenue `e * c`, cents.
    pub revenues: Vec<f64>,
    /// Authority cost, cents.
    pub total_cost: f64,
}

/// The fixed-quantity worked example and the changes between its two
/// pricing policies. Percent changes are carried exactly and truncated
/// toward zero for display, matching how the headline integers are
/// usually quoted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub cases: Vec<ReplayCase>,
    /// Exact per-user revenue change, percent.
    pub revenue_change_pct: Vec<f64>,
    /// Exact total-cost change, percent.
    pub total_change_pct: f64,
    /// Display form of `revenue_change_pct`, truncated toward zero.
    pub revenue_change_printed: Vec<i64>,
    /// Display form of `total_change_pct`, truncated toward zero.
    pub total_change_printed: i64,
}

/// Replays the two-user worked example: a 40 kWh requirement filled
/// entirely by two users, first at a uniform 20 cents/kWh, then at
/// discriminate prices 18/22 with quantities shifted toward the cheaper
/// seller. Quantities are fixed inputs here — the point is the
/// bookkeeping, not the equilibrium.
pub fn table1_replay() -> ReplayReport {
    let users = vec![
        EnergyUser::new("eu-01", 50.0, 1.0),
        EnergyUser::new("eu-02", 10.0, 1.0),
    ];
    // Pure pass-through cost: linear payment term, no overheads.
    let coefficients = vec![SfaCostCoefficients { a: 0.0, b: 0.0 }; 2];
    let params = MarketParams {
        required_energy: 40.0,
        grid_price: 50.0,
        total_unit_price: 40.0,
        price_min: 10.0,
        price_max: 38.0,
        lambda: 1000.0,
        exponent: 1,
    };
    let instance = MarketInstance { users, coefficients, params };

    let build = |label: &str, prices: Vec<f64>, quantities: Vec<f64>| -> ReplayCase {
        let pv = PriceVector::new(prices.clone()).expect("fixed prices are valid");
        let ev = EnergyVector::new(quantities.clone()).expect("fixed quantities are valid");
        let cost = model::sfa_cost(&ev, &pv, &instance).expect("aligned by construction");
        let revenues = quantities.iter().zip(&prices).map(|(e, c)| e * c).collect();
        ReplayCase { label: label.to_string(), prices, quantities, revenues, total_cost: cost.total }
    };
    let uniform = build("uniform", vec![20.0, 20.0], vec![35.0, 5.0]);
    let discriminate = build("discriminate", vec![18.0, 22.0], vec![32.0, 8.0]);

    let revenue_change_pct: Vec<f64> = uniform
        .revenues
        .iter()
        .zip(&discriminate.revenues)
        .map(|(from, to)| percent_change(*from, *to))
        .collect();
    let total_change_pct = percent_change(uniform.total_cost, discriminate.total_cost);
    let revenue_change_printed = revenue_change_pct.iter().map(|p| p.trunc() as i64).collect();
    let total_change_printed = total_change_pct.trunc() as i64;
    ReplayReport {
        cases: vec![uniform, discriminate],
        revenue_change_pct,
        total_change_pct,
        revenue_change_printed,
        total_change_printed,
    }
}

/// Relative change from `from` to `to`, in percent.
pub fn percent_change(from: f64, to: f64) -> f64 {
    100.0 * (to - from) / from
}

/// A named scenario with everything needed to run it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// One of `table1`, `fig5`, `casemix`.
    pub id: String,
    pub params: MarketParams,
    /// Benchmark case number, required by `casemix`.
    pub case: Option<u8>,
    /// RNG seed; required by any scenario that samples users (none of
    /// the named ones do).
    pub seed: Option<u64>,
    pub sweep_axis: Option<SweepAxis>,
    pub sweep_values: Option<Vec<f64>>,
}

impl ScenarioConfig {
    /// The fixed-quantity worked example.
    pub fn table1() -> Self {
        ScenarioConfig {
            id: "table1".to_string(),
            params: MarketParams::default(),
            case: None,
            seed: None,
            sweep_axis: None,
            sweep_values: None,
        }
    }

    /// Stage-1 price across the inconvenience ladder 1, 1.5, ..., 3 at
    /// 150 kWh available energy.
    pub fn fig5() -> Self {
        ScenarioConfig {
            id: "fig5".to_string(),
            params: MarketParams::default(),
            case: None,
            seed: None,
            sweep_axis: Some(SweepAxis::Alpha),
            sweep_values: Some(vec![1.0, 1.5, 2.0, 2.5, 3.0]),
        }
    }

    /// Benchmark population `case` compared against EDS.
    pub fn casemix(case: u8) -> Self {
        ScenarioConfig {
            id: "casemix".to_string(),
            params: MarketParams::default(),
            case: Some(case),
            seed: None,
            sweep_axis: None,
            sweep_values: None,
        }
    }
}

/// What a scenario produced, ready for the report writers.
#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioOutput {
    Replay(ReplayReport),
    Sweep(Vec<SweepRow>),
    Comparison(ComparisonReport),
}

/// Runs a named scenario.
pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioOutput> {
    match config.id.as_str() {
        "table1" => Ok(ScenarioOutput::Replay(table1_replay())),
        "fig5" => {
            let template = EnergyUser::new("template", 150.0, 2.0);
            let values = config
                .sweep_values
                .clone()
                .unwrap_or_else(|| vec![1.0, 1.5, 2.0, 2.5, 3.0]);
            let axis = config.sweep_axis.unwrap_or(SweepAxis::Alpha);
            let rows = sweep_prices(
                axis,
                &values,
                &template,
                &SfaCostCoefficients::default(),
                &config.params,
            )?;
            Ok(ScenarioOutput::Sweep(rows))
        }
        "casemix" => {
            let case = config
                .case
                .ok_or_else(|| Error::Config("casemix needs --case 1..=6".to_string()))?;
            let mix = CaseMix::study_case(case)?;
            let instance = build_case_mix(&mix, &config.params)?;
            let report = run_comparison(&instance, ResponseMode::Paper, &case.to_string())?;
            Ok(ScenarioOutput::Comparison(report))
        }
        other => Err(Error::Config(format!(
            "unknown scenario '{other}' (expected table1, fig5 or casemix)"
        ))),
    }
}
