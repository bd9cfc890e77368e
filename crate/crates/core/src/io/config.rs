//! `key = value` scenario files.
//!
//! One setting per line; `#` starts a comment; blank lines are ignored.
//! Table paths are relative to the directory holding the config file.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::energy::{days_in_horizon, DEFAULT_VOLL};
use crate::error::{invalid, Error, Result};
use crate::model::DEFAULT_FULL_OUTPUT_HOURS;
use crate::strategic::{CompareConfig, JointOptions};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub generators: PathBuf,
    pub lines: PathBuf,
    pub loads: PathBuf,
    pub capacity_factors: PathBuf,
    /// $/MWh.
    pub voll: f64,
    pub f_excess: f64,
    pub reserve_margin: f64,
    pub translation_factor: f64,
    pub demand_scale: f64,
    pub congestion_scale: f64,
    pub leader: Option<String>,
    /// Energy-market capacity grid for joint strategies, steps per `p_max`.
    pub grid_steps: usize,
    /// Capacity-market price grid for the brute-force oracle, $/MW-day.
    pub cm_grid_step: f64,
    pub kkt_tol: f64,
    pub equivalence_tol: f64,
    /// Days covered by the horizon; `hours / 24` when absent.
    pub days_in_horizon: Option<f64>,
    pub full_output_hours: f64,
    pub allow_price_bid: bool,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            generators: "generators.csv".into(),
            lines: "lines.csv".into(),
            loads: "loads.csv".into(),
            capacity_factors: "capacity_factors.csv".into(),
            voll: DEFAULT_VOLL,
            f_excess: 0.18,
            reserve_margin: 0.2070,
            translation_factor: 0.0856,
            demand_scale: 1.0,
            congestion_scale: 1.0,
            leader: None,
            grid_steps: 50,
            cm_grid_step: 0.01,
            kkt_tol: 1e-6,
            equivalence_tol: 1e-9,
            days_in_horizon: None,
            full_output_hours: DEFAULT_FULL_OUTPUT_HOURS,
            allow_price_bid: false,
            seed: 0,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str, line: usize) -> Result<T> {
    value.parse().map_err(|_| Error::Data {
        file: "config".into(),
        row: line,
        column: key.into(),
        message: format!("cannot parse `{value}`"),
    })
}

impl ScenarioConfig {
    /// Parses config text. Absent keys keep their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = ScenarioConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let Some((key, value)) = body.split_once('=') else {
                return Err(Error::Data {
                    file: "config".into(),
                    row: line,
                    column: body.into(),
                    message: "expected `key = value`".into(),
                });
            };
            let (key, value) = (key.trim(), value.trim());
            match key {
                "generators" => c.generators = value.into(),
                "lines" => c.lines = value.into(),
                "loads" => c.loads = value.into(),
                "capacity_factors" => c.capacity_factors = value.into(),
                "voll" => c.voll = parse_value(key, value, line)?,
                "f_excess" => c.f_excess = parse_value(key, value, line)?,
                "reserve_margin" => c.reserve_margin = parse_value(key, value, line)?,
                "translation_factor" => c.translation_factor = parse_value(key, value, line)?,
                "demand_scale" => c.demand_scale = parse_value(key, value, line)?,
                "congestion_scale" => c.congestion_scale = parse_value(key, value, line)?,
                "leader" => c.leader = (!value.is_empty()).then(|| value.to_string()),
                "grid_steps" => c.grid_steps = parse_value(key, value, line)?,
                "cm_grid_step" => c.cm_grid_step = parse_value(key, value, line)?,
                "kkt_tol" => c.kkt_tol = parse_value(key, value, line)?,
                "equivalence_tol" => c.equivalence_tol = parse_value(key, value, line)?,
                "days_in_horizon" => {
                    c.days_in_horizon = if value.is_empty() {
                        None
                    } else {
                        Some(parse_value(key, value, line)?)
                    }
                }
                "full_output_hours" => c.full_output_hours = parse_value(key, value, line)?,
                "allow_price_bid" => c.allow_price_bid = parse_value(key, value, line)?,
                "seed" => c.seed = parse_value(key, value, line)?,
                _ => {
                    return Err(Error::Data {
                        file: "config".into(),
                        row: line,
                        column: key.into(),
                        message: "unknown key".into(),
                    })
                }
            }
        }
        c.validate()?;
        Ok(c)
    }

    /// Text form accepted by [`ScenarioConfig::parse`]. Every key is written.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let path = |p: &Path| p.to_string_lossy().into_owned();
        let _ = writeln!(s, "generators = {}", path(&self.generators));
        let _ = writeln!(s, "lines = {}", path(&self.lines));
        let _ = writeln!(s, "loads = {}", path(&self.loads));
        let _ = writeln!(s, "capacity_factors = {}", path(&self.capacity_factors));
        let _ = writeln!(s, "voll = {}", self.voll);
        let _ = writeln!(s, "f_excess = {}", self.f_excess);
        let _ = writeln!(s, "reserve_margin = {}", self.reserve_margin);
        let _ = writeln!(s, "translation_factor = {}", self.translation_factor);
        let _ = writeln!(s, "demand_scale = {}", self.demand_scale);
        let _ = writeln!(s, "congestion_scale = {}", self.congestion_scale);
        let _ = writeln!(s, "leader = {}", self.leader.as_deref().unwrap_or(""));
        let _ = writeln!(s, "grid_steps = {}", self.grid_steps);
        let _ = writeln!(s, "cm_grid_step = {}", self.cm_grid_step);
        let _ = writeln!(s, "kkt_tol = {}", self.kkt_tol);
        let _ = writeln!(s, "equivalence_tol = {}", self.equivalence_tol);
        let days = self.days_in_horizon.map(|d| d.to_string()).unwrap_or_default();
        let _ = writeln!(s, "days_in_horizon = {days}");
        let _ = writeln!(s, "full_output_hours = {}", self.full_output_hours);
        let _ = writeln!(s, "allow_price_bid = {}", self.allow_price_bid);
        let _ = writeln!(s, "seed = {}", self.seed);
        s.lines().map(|l| format!("{}\n", l.trim_end())).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("voll", self.voll),
            ("f_excess", self.f_excess),
            ("demand_scale", self.demand_scale),
            ("congestion_scale", self.congestion_scale),
            ("cm_grid_step", self.cm_grid_step),
            ("kkt_tol", self.kkt_tol),
            ("equivalence_tol", self.equivalence_tol),
            ("full_output_hours", self.full_output_hours),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return invalid(format!("{name} must be positive, got {v}"));
            }
        }
        for (name, v) in [
            ("f_excess", self.f_excess),
            ("reserve_margin", self.reserve_margin),
            ("translation_factor", self.translation_factor),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return invalid(format!("{name} must lie in (0, 1), got {v}"));
            }
        }
        if self.full_output_hours > 24.0 {
            return invalid("full_output_hours cannot exceed 24");
        }
        if self.grid_steps == 0 {
            return invalid("grid_steps must be at least 1");
        }
        if let Some(d) = self.days_in_horizon {
            if !(d > 0.0 && d.is_finite()) {
                return invalid(format!("days_in_horizon must be positive, got {d}"));
            }
        }
        Ok(())
    }

    /// Horizon length in days for `hours` hours.
    pub fn days(&self, hours: usize) -> f64 {
        self.days_in_horizon.unwrap_or_else(|| days_in_horizon(hours))
    }

    /// Strategic-study settings carried by this config.
    pub fn compare_config(&self) -> CompareConfig {
        CompareConfig {
            joint: JointOptions {
                voll: self.voll,
                grid_steps: self.grid_steps,
                allow_price_bid: self.allow_price_bid,
                ..JointOptions::default()
            },
            reserve_margin: self.reserve_margin,
            translation_factor: self.translation_factor,
            f_excess: self.f_excess,
            full_output_hours: self.full_output_hours,
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        ScenarioConfig::parse(&text).map_err(|e| match e {
            Error::Data {
                row, column, message, ..
            } => Error::Data {
                file: path.display().to_string(),
                row,
                column,
                message,
            },
            other => other,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}
