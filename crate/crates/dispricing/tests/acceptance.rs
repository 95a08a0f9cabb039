//! Acceptance suite: the eight release criteria for the pricing solver.
//!
//! Each test covers one numbered criterion and prints a single
//! `criterion N: PASS` line when it holds (visible with `--nocapture`);
//! a failed assertion names the criterion in its panic message. Criteria
//! 2 and 3 share one 1000-trial oracle run through a `OnceLock` so the
//! expensive scan happens once per test-suite invocation.

use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use dispricing::oracle::{finite_difference, stage1_objective, verify_trials, VerifyReport};
use dispricing::scenarios::{build_case_mix, run_comparison, table1_replay, CaseMix};
use dispricing::{
    best_response, solve_spe, stage1_price_unclamped, utility, ClampFlag, EnergyUser,
    MarketParams, ResponseMode, SfaCostCoefficients,
};

/// Fixed seed for the shared verification run; any value works, this one is
/// pinned so reruns exercise the identical instance set.
const VERIFY_SEED: u64 = 7;

fn shared_verification() -> &'static (VerifyReport, Duration) {
    static RUN: OnceLock<(VerifyReport, Duration)> = OnceLock::new();
    RUN.get_or_init(|| {
        let start = Instant::now();
        let report = verify_trials(1000, VERIFY_SEED).expect("verification run completes");
        (report, start.elapsed())
    })
}

/// Criterion 1: the two-user worked example replays exactly — uniform
/// pricing books 700 revenue / 800 total cost in cents, discriminatory
/// pricing books 576 / 752, and the printed percentage deltas truncate
/// to -17%, +76%, and -6% — in under a second.
#[test]
fn criterion_1_worked_example_replay() {
    let start = Instant::now();
    let report = table1_replay();

    let uniform = &report.cases[0];
    let discr = &report.cases[1];
    assert_eq!(
        uniform.revenues,
        vec![700.0, 100.0],
        "criterion 1: uniform per-user revenues"
    );
    assert_eq!(
        uniform.revenues.iter().sum::<f64>(),
        800.0,
        "criterion 1: uniform revenue total"
    );
    assert_eq!(
        discr.revenues,
        vec![576.0, 176.0],
        "criterion 1: discriminatory per-user revenues"
    );
    assert_eq!(
        discr.revenues.iter().sum::<f64>(),
        752.0,
        "criterion 1: discriminatory revenue total"
    );
    assert_eq!(
        report.revenue_change_printed,
        vec![-17, 76],
        "criterion 1: printed per-user deltas"
    );
    assert_eq!(report.total_change_printed, -6, "criterion 1: printed total delta");

    let elapsed = start.elapsed();
    assert!(
        elapsed < Duration::from_secs(1),
        "criterion 1: replay took {elapsed:?}, budget is 1s"
    );
    println!("criterion 1: PASS (replay exact, {elapsed:?})");
}

/// Criterion 2: across 1000 seeded random instances the closed-form
/// stage-1 price agrees with an exhaustive scan to 1e-4 and the
/// closed-form best response agrees with its scan to 1e-3, inside a
/// 60-second budget.
#[test]
fn criterion_2_closed_form_matches_scan() {
    let (report, elapsed) = shared_verification();

    assert_eq!(report.trials, 1000, "criterion 2: trial count");
    assert!(
        report.max_price_deviation <= 1e-4,
        "criterion 2: price deviation {} exceeds 1e-4",
        report.max_price_deviation
    );
    assert!(
        report.max_best_response_deviation <= 1e-3,
        "criterion 2: best-response deviation {} exceeds 1e-3",
        report.max_best_response_deviation
    );
    // The draw should exercise both clamp edges as well as the interior;
    // a degenerate sample would make the agreement check vacuous.
    assert!(report.interior > 0, "criterion 2: no interior solutions sampled");
    assert!(report.lower_clamps > 0, "criterion 2: no lower clamps sampled");
    assert!(report.upper_clamps > 0, "criterion 2: no upper clamps sampled");
    assert!(
        *elapsed < Duration::from_secs(60),
        "criterion 2: verification took {elapsed:?}, budget is 60s"
    );
    println!(
        "criterion 2: PASS (max price dev {:.2e}, max response dev {:.2e}, {elapsed:?})",
        report.max_price_deviation, report.max_best_response_deviation
    );
}

/// Criterion 3: at every unclamped stage-1 root from the criterion-2 run
/// the stationarity polynomial evaluates to at most 1e-6.
#[test]
fn criterion_3_stationarity_residual() {
    let (report, _) = shared_verification();
    assert!(
        report.max_quadratic_residual <= 1e-6,
        "criterion 3: stationarity residual {} exceeds 1e-6",
        report.max_quadratic_residual
    );
    println!(
        "criterion 3: PASS (max residual {:.2e})",
        report.max_quadratic_residual
    );
}

/// Criterion 4: comparative statics hold with zero violations on dense
/// 1000-point sweeps — the unclamped price rises strictly with the
/// inconvenience coefficient, falls strictly with the energy requirement,
/// and the best response falls strictly with the inconvenience
/// coefficient.
#[test]
fn criterion_4_monotonicity_sweeps() {
    let params = MarketParams::default();
    let coeff = SfaCostCoefficients::default();
    const POINTS: usize = 1000;

    let mut violations = 0usize;

    // Price rises with alpha at fixed energy.
    let mut previous = f64::NEG_INFINITY;
    for step in 0..POINTS {
        let alpha = 0.5 + 2.5 * step as f64 / (POINTS - 1) as f64;
        let user = EnergyUser::new("sweep", 150.0, alpha);
        let price = stage1_price_unclamped(&user, &coeff, &params)
            .expect("criterion 4: alpha sweep root");
        if price <= previous {
            violations += 1;
        }
        previous = price;
    }

    // Price falls with the energy requirement at fixed alpha.
    previous = f64::INFINITY;
    for step in 0..POINTS {
        let energy = 50.0 + 200.0 * step as f64 / (POINTS - 1) as f64;
        let user = EnergyUser::new("sweep", energy, 2.0);
        let price = stage1_price_unclamped(&user, &coeff, &params)
            .expect("criterion 4: energy sweep root");
        if price >= previous {
            violations += 1;
        }
        previous = price;
    }

    // Best response falls with alpha at a fixed posted price.
    previous = f64::INFINITY;
    for step in 0..POINTS {
        let alpha = 0.5 + 2.5 * step as f64 / (POINTS - 1) as f64;
        let user = EnergyUser::new("sweep", 150.0, alpha);
        let response = best_response(12.0, &user, ResponseMode::Paper)
            .expect("criterion 4: response sweep");
        if response >= previous {
            violations += 1;
        }
        previous = response;
    }

    assert_eq!(violations, 0, "criterion 4: {violations} monotonicity violations");
    println!("criterion 4: PASS (3 sweeps x {POINTS} points, 0 violations)");
}

/// Criterion 5: across the six benchmark case mixes under default
/// parameters, total proposed cost and grid purchase cost are
/// nondecreasing from case 1 to case 6, and the proposed scheme never
/// costs more than the equal-distribution baseline.
#[test]
fn criterion_5_case_mix_trends() {
    let params = MarketParams::default();
    let mut previous_total = f64::NEG_INFINITY;
    let mut previous_grid = f64::NEG_INFINITY;

    for case in 1..=6u8 {
        let mix = CaseMix::study_case(case).expect("criterion 5: case mix");
        let instance = build_case_mix(&mix, &params).expect("criterion 5: instance");
        let report = run_comparison(&instance, ResponseMode::Paper, &format!("case {case}"))
            .expect("criterion 5: comparison");

        assert!(
            report.total_proposed_dollars >= previous_total - 1e-9,
            "criterion 5: case {case} total {} fell below previous total {}",
            report.total_proposed_dollars,
            previous_total
        );
        assert!(
            report.grid_cost_dollars >= previous_grid - 1e-9,
            "criterion 5: case {case} grid cost {} fell below previous grid cost {}",
            report.grid_cost_dollars,
            previous_grid
        );
        assert!(
            report.total_proposed_dollars <= report.total_eds_dollars + 1e-9,
            "criterion 5: case {case} proposed {} exceeds baseline {}",
            report.total_proposed_dollars,
            report.total_eds_dollars
        );
        previous_total = report.total_proposed_dollars;
        previous_grid = report.grid_cost_dollars;
    }
    println!(
        "criterion 5: PASS (6 cases: totals and grid purchases nondecreasing, proposed <= baseline)"
    );
}

/// Criterion 6: with the tight budget multiplier (lambda = 3000) the
/// all-high-inconvenience mix saturates — every price clamps to the cap,
/// which equals the per-user budget share, and the reported saving over
/// the equal-distribution baseline is 0.00 within half a cent of a
/// percent.
#[test]
fn criterion_6_saturated_case_parity() {
    let params = MarketParams { lambda: 3000.0, ..MarketParams::default() };
    let mix = CaseMix::study_case(6).expect("criterion 6: case mix");
    let instance = build_case_mix(&mix, &params).expect("criterion 6: instance");

    let outcome = solve_spe(&instance, ResponseMode::Paper).expect("criterion 6: solve");
    let share = params.total_unit_price / instance.n() as f64;
    assert_eq!(share, params.price_max, "criterion 6: cap equals budget share");
    for (price, flag) in outcome.prices.iter().zip(outcome.clamp_flags.iter()) {
        assert_eq!(*price, params.price_max, "criterion 6: price clamps to cap");
        assert_eq!(*flag, ClampFlag::Upper, "criterion 6: clamp flag");
    }

    let report =
        run_comparison(&instance, ResponseMode::Paper, "case 6").expect("criterion 6: comparison");
    assert!(
        report.percent_reduction.abs() <= 0.005,
        "criterion 6: reduction {} is not 0.00 within half a cent",
        report.percent_reduction
    );
    println!(
        "criterion 6: PASS (all prices at cap, reduction {:+.4}%)",
        report.percent_reduction
    );
}

/// Criterion 7: finite-difference certificates at 100 sampled points —
/// the user's utility has second derivative -2*alpha within 1e-3, and the
/// authority's stage-1 objective has strictly positive curvature
/// everywhere inside the price box.
#[test]
fn criterion_7_curvature_certificates() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(VERIFY_SEED);
    let coeff = SfaCostCoefficients::default();

    for sample in 0..100 {
        let energy = rng.gen_range(50.0..=250.0);
        let alpha = rng.gen_range(0.5..=3.0);
        let lambda = rng.gen_range(500.0..=5000.0);
        let params = MarketParams { lambda, ..MarketParams::default() };
        let user = EnergyUser::new("probe", energy, alpha);

        // Follower side: utility curvature is exactly -2*alpha.
        let price = rng.gen_range(params.price_min..=params.price_max);
        let supply = rng.gen_range(1.0..=2.0 * energy);
        let (_, utility_curvature) = finite_difference(
            |quantity| utility(quantity, price, &user).expect("utility evaluates"),
            supply,
            1e-3,
        );
        assert!(
            (utility_curvature + 2.0 * alpha).abs() <= 1e-3,
            "criterion 7: sample {sample} utility curvature {} vs expected {}",
            utility_curvature,
            -2.0 * alpha
        );

        // Leader side: the stage-1 objective is strictly convex in price.
        let probe_price = rng.gen_range(params.price_min..=params.price_max);
        let (_, objective_curvature) = finite_difference(
            |candidate| stage1_objective(candidate, &user, &coeff, &params),
            probe_price,
            1e-2,
        );
        assert!(
            objective_curvature > 0.0,
            "criterion 7: sample {sample} objective curvature {} is not positive",
            objective_curvature
        );
    }
    println!("criterion 7: PASS (100 utility + 100 objective curvature certificates)");
}

/// Criterion 8: the case-3 comparison scenario is fully deterministic —
/// two separate binary invocations write byte-identical CSV.
#[test]
fn criterion_8_deterministic_csv() {
    let dir = tempfile::tempdir().expect("criterion 8: tempdir");
    let first = dir.path().join("first.csv");
    let second = dir.path().join("second.csv");

    for out in [&first, &second] {
        let status = Command::new(env!("CARGO_BIN_EXE_dispricing"))
            .args(["scenario", "--name", "casemix", "--case", "3", "--out"])
            .arg(out)
            .stdout(std::process::Stdio::null())
            .status()
            .expect("criterion 8: run binary");
        assert!(status.success(), "criterion 8: scenario run failed");
    }

    let first_bytes = std::fs::read(&first).expect("criterion 8: read first");
    let second_bytes = std::fs::read(&second).expect("criterion 8: read second");
    assert!(!first_bytes.is_empty(), "criterion 8: output empty");
    assert_eq!(first_bytes, second_bytes, "criterion 8: outputs differ between runs");

    let text = String::from_utf8(first_bytes).expect("criterion 8: utf-8");
    assert!(
        text.starts_with(
            "case,class_alpha,class_cost_dollars,grid_cost_dollars,total_proposed_dollars,total_eds_dollars,percent_reduction"
        ),
        "criterion 8: unexpected CSV header"
    );
    println!("criterion 8: PASS (byte-identical CSV across two runs)");
}

/// The six-case composition used by criteria 5 and 6 is itself part of
/// the contract: each mix totals ten users and shifts weight toward the
/// high-inconvenience class.
#[test]
fn case_mix_composition_is_fixed() {
    let expected: [&[(f64, usize)]; 6] = [
        &[(1.0, 6), (2.0, 2), (3.0, 2)],
        &[(1.0, 4), (2.0, 3), (3.0, 3)],
        &[(1.0, 2), (2.0, 4), (3.0, 4)],
        &[(1.0, 2), (2.0, 2), (3.0, 6)],
        &[(1.0, 1), (2.0, 1), (3.0, 8)],
        &[(3.0, 10)],
    ];
    for (case, classes) in (1..=6u8).zip(expected) {
        let mix = CaseMix::study_case(case).expect("case builds");
        assert_eq!(mix.classes(), classes, "case {case} composition");
        assert_eq!(mix.total_users(), 10, "case {case} population");
    }
    let custom = CaseMix::new(vec![(2.0, 3)], 150.0).expect("custom mix");
    assert_eq!(custom.total_users(), 3);
}
