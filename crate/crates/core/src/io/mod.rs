//! Scenario files, the bundled fixture and report output.

pub mod config;
pub mod fixture;
pub mod report;
pub mod tables;

use std::path::Path;

pub use config::ScenarioConfig;
pub use report::{emit_report, read_lmp_csv, Format, RunReport};

use crate::error::Result;
use crate::model::{SystemNetwork, TimeSeries};

/// Reads a config file and the four tables it names. Table paths resolve
/// against the config file's directory. Scales in the config are not
/// applied to the returned network and series.
pub fn load_scenario(path: &Path) -> Result<(ScenarioConfig, SystemNetwork, TimeSeries)> {
    let cfg = ScenarioConfig::read(path)?;
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let (net, ts) = tables::read_network(
        &dir.join(&cfg.generators),
        &dir.join(&cfg.lines),
        &dir.join(&cfg.loads),
        &dir.join(&cfg.capacity_factors),
    )?;
    log::info!(
        "loaded {}: {} buses, {} lines, {} generators, {} hours",
        path.display(),
        net.buses.len(),
        net.lines.len(),
        net.generators.len(),
        ts.num_hours()
    );
    Ok((cfg, net, ts))
}
