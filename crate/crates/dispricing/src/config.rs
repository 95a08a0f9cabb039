//! JSON configuration documents: one file describes a market and how to
//! run it.
//!
//! A config names its users either explicitly (`users`) or by a sampling
//! spec (`sample`, seed required), optionally overrides any market
//! parameter, and carries the run flags the CLI would otherwise take on
//! the command line. Absent fields fall back to the benchmark defaults,
//! so the smallest useful file is just
//! `{"users": [{"E": 150, "alpha": 2}]}`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::equilibrium::ResponseMode;
use crate::error::{Error, Result};
use crate::model::{self, EnergyUser, MarketInstance, MarketParams, SfaCostCoefficients};
use crate::scenarios;

/// Partial mirror of [`MarketParams`]: every field optional, absent ones
/// resolved to the benchmark defaults.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamsSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub required_energy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_price: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total_unit_price: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub price_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub price_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exponent: Option<u32>,
}

impl ParamsSection {
    /// Fills the gaps with the benchmark defaults.
    pub fn resolve(&self) -> MarketParams {
        let d = MarketParams::default();
        MarketParams {
            required_energy: self.required_energy.unwrap_or(d.required_energy),
            grid_price: self.grid_price.unwrap_or(d.grid_price),
            total_unit_price: self.total_unit_price.unwrap_or(d.total_unit_price),
            price_min: self.price_min.unwrap_or(d.price_min),
            price_max: self.price_max.unwrap_or(d.price_max),
            lambda: self.lambda.unwrap_or(d.lambda),
            exponent: self.exponent.unwrap_or(d.exponent),
        }
    }
}

/// One user as written in a config file: available energy `E` (kWh) and
/// inconvenience `alpha`; the id is optional and defaulted positionally.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigUser {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(rename = "E")]
    pub energy: f64,
    pub alpha: f64,
}

/// Draw the population instead of listing it. The seed is mandatory so
/// a config alone pins the run down.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleSpec {
    pub n: usize,
    pub seed: u64,
    /// Inclusive kWh bounds; benchmark default `[50, 250]`.
    #[serde(default = "default_energy_range")]
    pub energy_range: (f64, f64),
    /// Inclusive inconvenience bounds; benchmark default `[1, 3]`.
    #[serde(default = "default_alpha_range")]
    pub alpha_range: (f64, f64),
}

fn default_energy_range() -> (f64, f64) {
    (50.0, 250.0)
}

fn default_alpha_range() -> (f64, f64) {
    (1.0, 3.0)
}

/// A parsed configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConfigDocument {
    pub params: ParamsSection,
    /// Explicit population; mutually exclusive with `sample`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub users: Option<Vec<ConfigUser>>,
    /// Sampled population; mutually exclusive with `users`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample: Option<SampleSpec>,
    /// Per-user cost coefficients, aligned with the population; defaults
    /// to `a = b = 1` for everyone.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Vec<SfaCostCoefficients>>,
    pub response_mode: ResponseMode,
    /// Tighten the multiplier until the price sum meets the budget
    /// target (same effect as the CLI `--tune-lambda` flag).
    pub tune_lambda: bool,
    /// Budget target for the tuning loop; defaults to the price-sum cap
    /// `total_unit_price`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_budget: Option<f64>,
    /// Default output path, overridden by the CLI `--out` flag.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl Default for ConfigDocument {
    fn default() -> Self {
        ConfigDocument {
            params: ParamsSection::default(),
            users: None,
            sample: None,
            coefficients: None,
            response_mode: ResponseMode::Paper,
            tune_lambda: false,
            target_budget: None,
            out: None,
        }
    }
}

impl ConfigDocument {
    /// Materializes the document into a validated instance: the
    /// population is listed or sampled, ids are defaulted positionally,
    /// coefficients are aligned, and every model invariant is checked.
    ///
    /// # Errors
    /// `Config` when the document is self-contradictory (both or neither
    /// of `users`/`sample`, misaligned coefficients); `Validation` with
    /// one entry per violated model invariant.
    pub fn to_instance(&self) -> Result<MarketInstance> {
        let params = self.params.resolve();
        let users: Vec<EnergyUser> = match (&self.users, &self.sample) {
            (Some(list), None) => {
                if list.is_empty() {
                    return Err(Error::Config("users list is empty".to_string()));
                }
                list.iter()
                    .enumerate()
                    .map(|(i, u)| {
                        let id = u
                            .id
                            .clone()
                            .unwrap_or_else(|| model::default_user_id(i, list.len()));
                        EnergyUser::new(id, u.energy, u.alpha)
                    })
                    .collect()
            }
            (None, Some(spec)) => scenarios::sample_users(
                spec.n,
                spec.energy_range,
                spec.alpha_range,
                spec.seed,
            )?,
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "give either users or sample, not both".to_string(),
                ))
            }
            (None, None) => {
                return Err(Error::Config(
                    "config needs a population: either users or sample".to_string(),
                ))
            }
        };
        let instance = match &self.coefficients {
            Some(coefficients) => {
                MarketInstance::new(users, coefficients.clone(), params)?
            }
            None => MarketInstance::with_default_coefficients(users, params),
        };
        let violations = model::validate(&instance);
        if !violations.is_empty() {
            return Err(Error::Validation(violations));
        }
        Ok(instance)
    }

    /// Budget target for the tuning loop: explicit override or the
    /// price-sum cap.
    pub fn budget_target(&self) -> f64 {
        self.target_budget
            .unwrap_or_else(|| self.params.resolve().total_unit_price)
    }
}

/// Parses a document from a string. Parse errors carry serde's location
/// (line and column) and field diagnostics.
pub fn parse_config(text: &str) -> Result<ConfigDocument> {
    serde_json::from_str(text).map_err(|err| Error::Config(format!("config parse: {err}")))
}

/// Loads and parses a configuration file.
pub fn load_config(path: &Path) -> Result<ConfigDocument> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text).map_err(|err| match err {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}
