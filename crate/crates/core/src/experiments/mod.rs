//! Experiment driver behind the `hypervol` binary.
//!
//! Every command takes a [`RunConfig`], produces a CSV table (JSON for
//! `hull-volume`) and a list of named checks. Output depends only on the
//! config: per-task seeds are derived from the config seed, parallel work is
//! collected in task order, and Monte Carlo sums reduce in fixed chunk order.

pub mod cone_table;
pub mod extremal;
mod families;
pub mod mass;
pub mod theorem1;
pub mod theorem2;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{HypError, Result};
use crate::volume::{Budget, VolumeMethod};

pub use families::{generate_family, Family};

/// Experiment selected on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Theorem1Sweep,
    Theorem2Check,
    ConeTable,
    ExtremalSearch,
    MassNearVertices,
    HullVolume,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::Theorem1Sweep,
        Command::Theorem2Check,
        Command::ConeTable,
        Command::ExtremalSearch,
        Command::MassNearVertices,
        Command::HullVolume,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Theorem1Sweep => "theorem1-sweep",
            Command::Theorem2Check => "theorem2-check",
            Command::ConeTable => "cone-table",
            Command::ExtremalSearch => "extremal-search",
            Command::MassNearVertices => "mass-near-vertices",
            Command::HullVolume => "hull-volume",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = HypError;
    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| HypError::InvalidArgument(format!("unknown command `{s}`")))
    }
}

/// Simulated-annealing settings for `extremal-search`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnealingConfig {
    pub steps: usize,
    pub initial_temperature: f64,
    /// Multiplicative temperature decay per step.
    pub cooling: f64,
    /// Standard deviation of the tangent kick applied to one point per step.
    pub move_scale: f64,
}

impl Default for AnnealingConfig {
    fn default() -> Self {
        AnnealingConfig { steps: 2000, initial_temperature: 0.5, cooling: 0.998, move_scale: 0.3 }
    }
}

/// Experiment configuration. Unset fields take per-command defaults (see the
/// README); a saved config reproduces the same output bit for bit.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub dimensions: Option<Vec<usize>>,
    /// Point counts for `theorem1-sweep`.
    pub sizes: Option<Vec<usize>>,
    pub replicates: Option<usize>,
    pub family: Option<Family>,
    /// Hyperbolic radius of the ball used by the `uniform-ball` and `clustered` families.
    pub ball_radius: Option<f64>,
    pub epsilon: Option<f64>,
    /// Two-point separations for `theorem2-check`.
    pub separations: Option<Vec<f64>>,
    /// Random clusters per dimension for `theorem2-check`.
    pub clusters: Option<usize>,
    pub cluster_size: Option<usize>,
    /// Directions at which `theorem2-check` places support points of the hull.
    pub support_directions: Option<usize>,
    /// Origin angles for `cone-table`.
    pub angles: Option<Vec<f64>>,
    /// Point count for `extremal-search`.
    pub points: Option<usize>,
    pub annealing: Option<AnnealingConfig>,
    /// Pairwise vertex distances for `mass-near-vertices`.
    pub radii: Option<Vec<f64>>,
    /// Distance thresholds as multiples of the vertex distance.
    pub thresholds: Option<Vec<f64>>,
    /// Point-cloud CSV for `hull-volume`.
    pub input: Option<PathBuf>,
    pub method: Option<VolumeMethod>,
    pub budget: Option<Budget>,
    pub seed: u64,
    pub output: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    fn budget_or(&self, default: Budget) -> Budget {
        self.budget.unwrap_or(default)
    }
}

/// A named pass/fail assertion produced by a command.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check { name: name.into(), passed, detail: detail.into() }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

/// Result of running a command.
#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutput {
    /// CSV table, or JSON for `hull-volume`.
    pub body: String,
    pub checks: Vec<Check>,
    /// Extra named outputs (file suffix, contents), written next to the main output.
    pub attachments: Vec<(String, String)>,
}

impl CommandOutput {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Runs `command` with `config`. A command recorded in the config must match.
pub fn run(command: Command, config: &RunConfig) -> Result<CommandOutput> {
    if let Some(c) = config.command {
        if c != command {
            return Err(HypError::InvalidArgument(format!("config is for `{c}`, not `{command}`")));
        }
    }
    match command {
        Command::Theorem1Sweep => theorem1::run(config),
        Command::Theorem2Check => theorem2::run(config),
        Command::ConeTable => cone_table::run(config),
        Command::ExtremalSearch => extremal::run(config),
        Command::MassNearVertices => mass::run(config),
        Command::HullVolume => hull_volume(config),
    }
}

fn hull_volume(config: &RunConfig) -> Result<CommandOutput> {
    let path = config.input.as_ref().ok_or_else(|| HypError::InvalidArgument("hull-volume needs `input`".into()))?;
    let points = crate::klein::read_point_cloud(path)?;
    let method = config.method.unwrap_or_default();
    let est = crate::volume::hull_volume(&points, method, &config.budget_or(Budget::default()), config.seed)?;
    let checks = vec![Check::new(
        "volume_confident",
        !est.low_confidence,
        format!("value {} ± {} ({:?})", est.value, est.uncertainty(), est.method),
    )];
    Ok(CommandOutput { body: est.to_json() + "\n", checks, attachments: Vec::new() })
}

pub(crate) fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| HypError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| HypError::Io(e.to_string()))
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let k = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Median of a nonempty slice.
pub(crate) fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_names_round_trip() {
        for c in Command::ALL {
            assert_eq!(c.name().parse::<Command>().unwrap(), c);
            assert_eq!(serde_json::to_string(&c).unwrap(), format!("\"{}\"", c.name()));
        }
        assert!("nope".parse::<Command>().is_err());
    }

    #[test]
    fn config_round_trips_and_rejects_unknown_fields() {
        let cfg = RunConfig {
            command: Some(Command::ConeTable),
            dimensions: Some(vec![2, 3]),
            budget: Some(Budget::with_rel_tol(1e-6)),
            seed: 7,
            ..RunConfig::default()
        };
        assert_eq!(RunConfig::from_json(&cfg.to_json()).unwrap(), cfg);
        assert!(RunConfig::from_json(r#"{"sead": 1}"#).is_err());
        let partial = RunConfig::from_json(r#"{"budget": {"samples": 10}}"#).unwrap();
        assert_eq!(partial.budget.unwrap().samples, 10);
        assert_eq!(partial.budget.unwrap().rel_tol, Budget::default().rel_tol);
    }

    #[test]
    fn mismatched_command_is_rejected() {
        let cfg = RunConfig { command: Some(Command::ConeTable), ..RunConfig::default() };
        assert!(run(Command::Theorem1Sweep, &cfg).is_err());
    }

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [8.0, 16.0, 32.0f64].iter().map(|&x| (x, 3.0 * x.powf(1.5))).collect();
        assert!((log_log_slope(&pts) - 1.5).abs() < 1e-12);
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
