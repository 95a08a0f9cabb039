//! Report rendering and emission: CSV for tabular exports, JSON for
//! machine-readable reports, plain text for the terminal.
//!
//! All money stays in cents inside the library; dollars appear only in
//! the comparison export, which is shaped like the case-study cost
//! table. Numbers are written with a `.` decimal separator, four decimal
//! places for ordinary columns and two for dollar and percent columns.
//! Rounding (half away from zero) happens here, at the formatting
//! boundary, and nowhere upstream.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::equilibrium::{EquilibriumOutcome, ResponseMode};
use crate::error::{Error, Result};
use crate::model;
use crate::scenarios::{ComparisonReport, ReplayReport, ScenarioOutput, SweepRow};

/// On-disk report format, inferred from the output path's extension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    /// `.csv` and `.json` (any case) are recognized.
    pub fn from_path(path: &Path) -> Result<Format> {
        let extension = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        match extension.as_deref() {
            Some("csv") => Ok(Format::Csv),
            Some("json") => Ok(Format::Json),
            _ => Err(Error::Config(format!(
                "cannot infer a report format from '{}': use a .csv or .json path",
                path.display()
            ))),
        }
    }
}

/// Rounds to `decimals` places, ties away from zero, and normalizes a
/// result of zero to +0 so reports never print `-0.00`.
pub fn round_half_away(value: f64, decimals: u32) -> f64 {
    let scale = 10f64.powi(decimals as i32);
    let rounded = (value * scale).round() / scale;
    if rounded == 0.0 {
        0.0
    } else {
        rounded
    }
}

/// Fixed-point decimal string, rounded half away from zero.
fn fixed(value: f64, decimals: u32) -> String {
    format!("{:.*}", decimals as usize, round_half_away(value, decimals))
}

/// A solved market plus the multiplier that produced it, in emission
/// shape: user ids ride along so rows can be labeled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    /// Multiplier the equilibrium was solved with.
    pub lambda: f64,
    /// Whether `lambda` came out of the budget-tuning loop rather than
    /// the configuration.
    pub tuned: bool,
    /// User ids aligned with the outcome's per-user vectors.
    pub user_ids: Vec<String>,
    pub outcome: EquilibriumOutcome,
}

/// Anything the CLI can write to a file.
#[derive(Debug, Clone, PartialEq)]
pub enum Report {
    Solve(SolveReport),
    Comparison(ComparisonReport),
    Sweep(Vec<SweepRow>),
    Replay(ReplayReport),
}

impl From<ScenarioOutput> for Report {
    fn from(output: ScenarioOutput) -> Report {
        match output {
            ScenarioOutput::Replay(report) => Report::Replay(report),
            ScenarioOutput::Sweep(rows) => Report::Sweep(rows),
            ScenarioOutput::Comparison(report) => Report::Comparison(report),
        }
    }
}

fn mode_name(mode: ResponseMode) -> &'static str {
    match mode {
        ResponseMode::Paper => "paper",
        ResponseMode::Physical => "physical",
    }
}

/// Comparison export: one row per inconvenience class, case-level
/// columns repeated so every row is self-contained.
fn comparison_csv(report: &ComparisonReport) -> String {
    let mut out = String::from(
        "case,class_alpha,class_cost_dollars,grid_cost_dollars,total_proposed_dollars,\
         total_eds_dollars,percent_reduction\n",
    );
    for class in &report.classes {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            report.case,
            fixed(class.inconvenience, 4),
            fixed(class.cost_dollars, 2),
            fixed(report.grid_cost_dollars, 2),
            fixed(report.total_proposed_dollars, 2),
            fixed(report.total_eds_dollars, 2),
            fixed(report.percent_reduction, 2),
        ));
    }
    out
}

fn comparison_text(report: &ComparisonReport) -> String {
    let mut out = format!(
        "case {}: equilibrium pricing vs equal distribution (dollars)\n",
        report.case
    );
    for class in &report.classes {
        out.push_str(&format!(
            "  class alpha {:<6} {:>10}\n",
            class.inconvenience,
            fixed(class.cost_dollars, 2)
        ));
    }
    out.push_str(&format!(
        "  grid bill    {:>17}\n",
        fixed(report.grid_cost_dollars, 2)
    ));
    out.push_str(&format!(
        "  total proposed {:>15}\n",
        fixed(report.total_proposed_dollars, 2)
    ));
    out.push_str(&format!(
        "  total equal-distribution {:>5}\n",
        fixed(report.total_eds_dollars, 2)
    ));
    out.push_str(&format!(
        "  reduction    {:>16}%\n",
        fixed(report.percent_reduction, 2)
    ));
    for warning in &report.warnings {
        out.push_str(&format!("  warning: {warning}\n"));
    }
    out
}

fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("axis_value,price_cents_per_kwh,clamp_flag\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{}\n",
            fixed(row.axis_value, 4),
            fixed(row.price_cents_per_kwh, 4),
            row.clamp_flag
        ));
    }
    out
}

fn sweep_text(rows: &[SweepRow]) -> String {
    let mut out = String::from("axis_value  price_cents_per_kwh  clamp_flag\n");
    for row in rows {
        out.push_str(&format!(
            "{:>10}  {:>19}  {}\n",
            fixed(row.axis_value, 4),
            fixed(row.price_cents_per_kwh, 4),
            row.clamp_flag
        ));
    }
    out
}

fn replay_csv(report: &ReplayReport) -> String {
    let mut out =
        String::from("case,user,quantity_kwh,price_cents_per_kwh,revenue_cents,change_pct\n");
    for (case_index, case) in report.cases.iter().enumerate() {
        let n = case.quantities.len();
        for i in 0..n {
            let change = if case_index == 0 {
                String::new()
            } else {
                fixed(report.revenue_change_pct[i], 4)
            };
            out.push_str(&format!(
                "{},{},{},{},{},{change}\n",
                case.label,
                model::default_user_id(i, n),
                fixed(case.quantities[i], 4),
                fixed(case.prices[i], 4),
                fixed(case.revenues[i], 4),
            ));
        }
        let change = if case_index == 0 {
            String::new()
        } else {
            fixed(report.total_change_pct, 4)
        };
        out.push_str(&format!(
            "{},total,{},,{},{change}\n",
            case.label,
            fixed(case.quantities.iter().sum::<f64>(), 4),
            fixed(case.total_cost, 4),
        ));
    }
    out
}

fn replay_text(report: &ReplayReport) -> String {
    let mut out = String::from(
        "fixed-quantity worked example\n\
         case          user   quantity_kwh  price  revenue_cents\n",
    );
    for (case_index, case) in report.cases.iter().enumerate() {
        let n = case.quantities.len();
        for i in 0..n {
            let delta = if case_index == 0 {
                String::new()
            } else {
                format!(" ({:+}%)", report.revenue_change_printed[i])
            };
            out.push_str(&format!(
                "{:<13} {:<6} {:>12}  {:>5}  {:>13}{delta}\n",
                case.label,
                model::default_user_id(i, n),
                fixed(case.quantities[i], 2),
                fixed(case.prices[i], 2),
                fixed(case.revenues[i], 2),
            ));
        }
        let delta = if case_index == 0 {
            String::new()
        } else {
            format!(" ({:+}%)", report.total_change_printed)
        };
        out.push_str(&format!(
            "{:<13} {:<6} {:>12}  {:>5}  {:>13}{delta}\n",
            case.label,
            "total",
            fixed(case.quantities.iter().sum::<f64>(), 2),
            "",
            fixed(case.total_cost, 2),
        ));
    }
    out
}

fn solve_csv(report: &SolveReport) -> String {
    let mut out = String::from(
        "user,price_cents_per_kwh,clamp_flag,quantity_kwh,utility_cents,cost_cents\n",
    );
    let outcome = &report.outcome;
    for (i, id) in report.user_ids.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            id,
            fixed(outcome.prices[i], 4),
            outcome.clamp_flags[i],
            fixed(outcome.quantities[i], 4),
            fixed(outcome.utilities[i], 4),
            fixed(outcome.per_user_costs[i], 4),
        ));
    }
    out
}

fn solve_text(report: &SolveReport) -> String {
    let outcome = &report.outcome;
    let tuned = if report.tuned { " (tuned)" } else { "" };
    let mut out = format!(
        "{}-user market, {} responses, lambda {}{}\n\
         user     price  clamp     quantity     utility        cost\n",
        report.user_ids.len(),
        mode_name(outcome.response_mode),
        report.lambda,
        tuned
    );
    for (i, id) in report.user_ids.iter().enumerate() {
        out.push_str(&format!(
            "{:<6} {:>8}  {:<8} {:>9} {:>11} {:>11}\n",
            id,
            fixed(outcome.prices[i], 4),
            outcome.clamp_flags[i].to_string(),
            fixed(outcome.quantities[i], 2),
            fixed(outcome.utilities[i], 2),
            fixed(outcome.per_user_costs[i], 2),
        ));
    }
    out.push_str(&format!(
        "price sum {} cents/kWh\n",
        fixed(outcome.budget_used, 4)
    ));
    out.push_str(&format!(
        "grid purchase {} kWh costing {} cents\n",
        fixed(outcome.grid_purchase, 4),
        fixed(outcome.grid_cost, 2)
    ));
    out.push_str(&format!("total cost {} cents\n", fixed(outcome.total_cost, 2)));
    for warning in &outcome.warnings {
        out.push_str(&format!("warning: {warning}\n"));
    }
    out
}

/// Newline-terminated pretty JSON for any serializable report body.
pub fn to_json<T: serde::Serialize>(value: &T) -> Result<String> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|err| Error::Config(format!("report serialization: {err}")))?;
    Ok(format!("{text}\n"))
}

/// Renders a report in the requested on-disk format.
pub fn render(report: &Report, format: Format) -> Result<String> {
    Ok(match (report, format) {
        (Report::Solve(r), Format::Csv) => solve_csv(r),
        (Report::Solve(r), Format::Json) => to_json(r)?,
        (Report::Comparison(r), Format::Csv) => comparison_csv(r),
        (Report::Comparison(r), Format::Json) => to_json(r)?,
        (Report::Sweep(rows), Format::Csv) => sweep_csv(rows),
        (Report::Sweep(rows), Format::Json) => to_json(rows)?,
        (Report::Replay(r), Format::Csv) => replay_csv(r),
        (Report::Replay(r), Format::Json) => to_json(r)?,
    })
}

/// Renders the human-oriented terminal form.
pub fn render_text(report: &Report) -> String {
    match report {
        Report::Solve(r) => solve_text(r),
        Report::Comparison(r) => comparison_text(r),
        Report::Sweep(rows) => sweep_text(rows),
        Report::Replay(r) => replay_text(r),
    }
}

/// Writes a rendered report, creating parent directories as needed.
/// Identical reports render to identical bytes.
pub fn emit_report(report: &Report, format: Format, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, render(report, format)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::ClampFlag;
    use crate::model::{MarketParams, SfaCostCoefficients};
    use crate::scenarios::{table1_replay, ClassCost};

    #[test]
    fn format_comes_from_the_extension() {
        assert_eq!(Format::from_path(Path::new("a/b.csv")).unwrap(), Format::Csv);
        assert_eq!(Format::from_path(Path::new("b.JSON")).unwrap(), Format::Json);
        assert!(Format::from_path(Path::new("plain")).is_err());
        assert!(Format::from_path(Path::new("graph.svg")).is_err());
    }

    #[test]
    fn rounding_is_half_away_from_zero() {
        assert_eq!(round_half_away(0.125, 2), 0.13);
        assert_eq!(round_half_away(-0.125, 2), -0.13);
        assert_eq!(round_half_away(2.5, 0), 3.0);
        assert_eq!(round_half_away(-2.5, 0), -3.0);
        assert_eq!(round_half_away(1.0049, 2), 1.0);
        // A hair below zero must not print as -0.00.
        assert_eq!(fixed(-1e-13, 2), "0.00");
        assert!(round_half_away(-1e-13, 2).is_sign_positive());
    }

    fn sample_comparison() -> ComparisonReport {
        ComparisonReport {
            case: "3".to_string(),
            classes: vec![
                ClassCost { inconvenience: 1.0, cost_dollars: 155.125 },
                ClassCost { inconvenience: 2.0, cost_dollars: 160.5 },
            ],
            grid_cost_dollars: 168.3333,
            total_proposed_dollars: 483.9583,
            total_eds_dollars: 500.0,
            percent_reduction: 3.20834,
            params: MarketParams::default(),
            coefficients: vec![SfaCostCoefficients::default(); 2],
            warnings: vec![],
        }
    }

    #[test]
    fn comparison_csv_has_one_self_contained_row_per_class() {
        let csv = comparison_csv(&sample_comparison());
        let expected = "case,class_alpha,class_cost_dollars,grid_cost_dollars,\
                        total_proposed_dollars,total_eds_dollars,percent_reduction\n\
                        3,1.0000,155.13,168.33,483.96,500.00,3.21\n\
                        3,2.0000,160.50,168.33,483.96,500.00,3.21\n";
        assert_eq!(csv, expected);
    }

    #[test]
    fn empty_sweep_is_header_only() {
        assert_eq!(sweep_csv(&[]), "axis_value,price_cents_per_kwh,clamp_flag\n");
    }

    #[test]
    fn sweep_csv_formats_to_four_decimals() {
        let rows = vec![
            SweepRow { axis_value: 1.0, price_cents_per_kwh: 10.0, clamp_flag: ClampFlag::Lower },
            SweepRow {
                axis_value: 2.0,
                price_cents_per_kwh: 12.03762,
                clamp_flag: ClampFlag::Interior,
            },
        ];
        let csv = sweep_csv(&rows);
        assert_eq!(
            csv,
            "axis_value,price_cents_per_kwh,clamp_flag\n\
             1.0000,10.0000,lower\n\
             2.0000,12.0376,interior\n"
        );
    }

    #[test]
    fn json_round_trips_the_report() {
        let report = sample_comparison();
        let rendered = render(&Report::Comparison(report.clone()), Format::Json).unwrap();
        let reparsed: ComparisonReport = serde_json::from_str(&rendered).unwrap();
        assert_eq!(reparsed, report);
        assert!(rendered.ends_with('\n'));
    }

    #[test]
    fn replay_text_prints_the_truncated_deltas() {
        let text = replay_text(&table1_replay());
        for needle in [
            "700.00", "100.00", "800.00", "576.00", "176.00", "752.00", "(-17%)", "(+76%)",
            "(-6%)",
        ] {
            assert!(text.contains(needle), "missing {needle} in:\n{text}");
        }
    }

    #[test]
    fn replay_csv_keeps_exact_changes() {
        let csv = replay_csv(&table1_replay());
        assert!(csv.contains("discriminate,eu-01,32.0000,18.0000,576.0000,-17.7143"));
        assert!(csv.contains("discriminate,total,40.0000,,752.0000,-6.0000"));
        assert!(csv.contains("uniform,total,40.0000,,800.0000,\n"));
    }

    #[test]
    fn emit_writes_identical_bytes_twice() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/dir/report.csv");
        let report = Report::Comparison(sample_comparison());
        emit_report(&report, Format::Csv, &path).unwrap();
        let first = std::fs::read(&path).unwrap();
        emit_report(&report, Format::Csv, &path).unwrap();
        let second = std::fs::read(&path).unwrap();
        assert_eq!(first, second);
        assert!(!first.is_empty());
    }
}
