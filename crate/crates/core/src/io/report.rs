//! Run reports as CSV and JSON tables.
//!
//! Each non-empty section becomes `<section>.csv` and/or `<section>.json`
//! in the output directory. `scenario.cfg` echoes the config and
//! `manifest.txt` lists written files and omitted sections.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::auction::ClearingResult;
use crate::energy::{EnergyMarketResult, NetCone};
use crate::error::{invalid, Error, Result};
use crate::io::config::ScenarioConfig;
use crate::model::{SystemNetwork, TimeSeries};
use crate::strategic::{CompareRow, StrategyOutcome};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClearingRow {
    pub path: String,
    pub cleared: bool,
    pub price: f64,
    pub quantity: f64,
    pub marginal: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RevenueRow {
    pub generator: String,
    pub fuel: String,
    pub zone: String,
    pub cm_sold_mw: f64,
    pub cm_revenue: f64,
    pub energy_profit: f64,
    pub total: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LmpRow {
    pub hour: usize,
    pub bus: String,
    pub lmp: f64,
    pub unmet_mw: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DispatchRow {
    pub hour: usize,
    pub generator: String,
    pub bus: String,
    pub production_mw: f64,
    pub capacity_mw: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetConeRow {
    pub generator: String,
    pub fuel: String,
    pub invest_cost: f64,
    pub energy_profit: f64,
    pub net_cone: f64,
    pub peaker: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategicCmRow {
    pub leader: String,
    pub method: String,
    pub offer_price: f64,
    pub offer_qty: f64,
    pub clearing_price: f64,
    pub sold_mw: f64,
    pub revenue: f64,
    pub profit: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareCsvRow {
    pub leader: String,
    pub fuel: String,
    pub demand_scale: f64,
    pub congestion_scale: f64,
    pub em_both: f64,
    pub em_no_cm: f64,
    pub em_truthful: f64,
    pub both_vs_no_cm: f64,
    pub both_vs_truthful: f64,
    pub no_cm_vs_truthful: f64,
    pub cm_offer_qty: f64,
    pub cm_sold: f64,
    pub em_extra: f64,
    pub gain: f64,
    pub loss: f64,
    pub identity_applies: bool,
}

impl From<&CompareRow> for CompareCsvRow {
    fn from(r: &CompareRow) -> Self {
        CompareCsvRow {
            leader: r.leader.clone(),
            fuel: r.fuel.clone(),
            demand_scale: r.demand_scale,
            congestion_scale: r.congestion_scale,
            em_both: r.em_both,
            em_no_cm: r.em_no_cm,
            em_truthful: r.em_truthful,
            both_vs_no_cm: r.both_vs_no_cm,
            both_vs_truthful: r.both_vs_truthful,
            no_cm_vs_truthful: r.no_cm_vs_truthful,
            cm_offer_qty: r.both.cm_offer_qty,
            cm_sold: r.both.cm_sold,
            em_extra: r.both.em_extra,
            gain: r.report.gain,
            loss: r.report.loss,
            identity_applies: r.report.identity_applies,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: ScenarioConfig,
    pub clearing: Vec<ClearingRow>,
    pub revenue: Vec<RevenueRow>,
    pub lmp: Vec<LmpRow>,
    pub dispatch: Vec<DispatchRow>,
    pub net_cone: Vec<NetConeRow>,
    pub strategic_cm: Vec<StrategicCmRow>,
    pub compare: Vec<CompareCsvRow>,
}

impl RunReport {
    pub fn new(scenario: ScenarioConfig) -> Self {
        RunReport {
            scenario,
            ..RunReport::default()
        }
    }

    pub fn add_clearing(&mut self, path: &str, result: &ClearingResult) {
        self.clearing.push(ClearingRow {
            path: path.into(),
            cleared: result.cleared,
            price: result.price,
            quantity: result.quantity,
            marginal: result.marginal.clone().unwrap_or_default(),
        });
    }

    pub fn set_dispatch(&mut self, em: &EnergyMarketResult, net: &SystemNetwork, ts: &TimeSeries) {
        self.lmp.clear();
        self.dispatch.clear();
        for (k, h) in em.hours.iter().enumerate() {
            let hour = ts.horizon[k];
            for (b, bus) in net.buses.iter().enumerate() {
                self.lmp.push(LmpRow {
                    hour,
                    bus: bus.clone(),
                    lmp: h.lmp[b],
                    unmet_mw: h.unmet[b],
                });
            }
            for (g, gen) in net.generators.iter().enumerate() {
                self.dispatch.push(DispatchRow {
                    hour,
                    generator: gen.id.clone(),
                    bus: gen.zone.clone(),
                    production_mw: h.production[g],
                    capacity_mw: h.capacity[g],
                });
            }
        }
    }

    /// Per-generator revenue table. Missing capacity-market or energy
    /// figures count as zero.
    pub fn set_revenue(
        &mut self,
        net: &SystemNetwork,
        clearing: Option<&ClearingResult>,
        energy_profit: Option<&BTreeMap<String, f64>>,
    ) {
        self.revenue = net
            .generators
            .iter()
            .map(|g| {
                let sold = clearing.map(|c| c.sold_of(&g.id)).unwrap_or(0.0);
                let cm = clearing.map(|c| c.revenue_of(&g.id)).unwrap_or(0.0);
                let em = energy_profit.and_then(|m| m.get(&g.id)).copied().unwrap_or(0.0);
                RevenueRow {
                    generator: g.id.clone(),
                    fuel: g.fuel.clone(),
                    zone: g.zone.clone(),
                    cm_sold_mw: sold,
                    cm_revenue: cm,
                    energy_profit: em,
                    total: cm + em,
                }
            })
            .collect();
    }

    pub fn set_net_cone(&mut self, nc: &NetCone, net: &SystemNetwork) {
        self.net_cone = net
            .generators
            .iter()
            .map(|g| NetConeRow {
                generator: g.id.clone(),
                fuel: g.fuel.clone(),
                invest_cost: g.invest_cost,
                energy_profit: nc.energy_profit.get(&g.id).copied().unwrap_or(0.0),
                net_cone: nc.net_cone.get(&g.id).copied().unwrap_or(0.0),
                peaker: g.id == nc.peaker,
            })
            .collect();
    }

    pub fn add_strategic_cm(&mut self, method: &str, outcome: &StrategyOutcome) {
        let s = &outcome.strategy;
        self.strategic_cm.push(StrategicCmRow {
            leader: s.leader_id.clone(),
            method: method.into(),
            offer_price: s.offer_price,
            offer_qty: s.offer_qty,
            clearing_price: outcome.clearing.price,
            sold_mw: outcome.clearing.sold_of(&s.leader_id),
            revenue: outcome.leader_revenue,
            profit: outcome.leader_profit,
        });
    }

    pub fn add_compare(&mut self, row: &CompareRow) {
        self.compare.push(row.into());
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn check_finite<T: Serialize>(section: &str, rows: &[T]) -> Result<()> {
    fn walk(v: &serde_json::Value) -> bool {
        match v {
            serde_json::Value::Null => false,
            serde_json::Value::Array(a) => a.iter().all(walk),
            serde_json::Value::Object(o) => o.values().all(walk),
            _ => true,
        }
    }
    for (k, r) in rows.iter().enumerate() {
        // serde_json writes non-finite floats as null; no field is optional.
        if !walk(&serde_json::to_value(r)?) {
            return invalid(format!("{section} row {k}: non-finite value"));
        }
    }
    Ok(())
}

fn write_section<T: Serialize>(
    dir: &Path,
    name: &str,
    rows: &[T],
    formats: &[Format],
    written: &mut Vec<PathBuf>,
    manifest: &mut String,
) -> Result<()> {
    if rows.is_empty() {
        manifest.push_str(&format!("omitted {name}: empty\n"));
        return Ok(());
    }
    check_finite(name, rows)?;
    if formats.contains(&Format::Csv) {
        let path = dir.join(format!("{name}.csv"));
        let wrap = |source| Error::Csv {
            path: path.clone(),
            source,
        };
        let mut w = csv::Writer::from_path(&path).map_err(wrap)?;
        for r in rows {
            w.serialize(r).map_err(wrap)?;
        }
        w.flush().map_err(io_err(&path))?;
        manifest.push_str(&format!("wrote {name}.csv ({} rows)\n", rows.len()));
        written.push(path);
    }
    if formats.contains(&Format::Json) {
        let path = dir.join(format!("{name}.json"));
        let mut text = serde_json::to_string_pretty(rows)?;
        text.push('\n');
        std::fs::write(&path, text).map_err(io_err(&path))?;
        manifest.push_str(&format!("wrote {name}.json ({} rows)\n", rows.len()));
        written.push(path);
    }
    Ok(())
}

/// Writes the report into `dir` (created if needed) and returns the paths
/// written, manifest last. Output is byte-identical for identical reports.
pub fn emit_report(report: &RunReport, dir: &Path, formats: &[Format]) -> Result<Vec<PathBuf>> {
    if formats.is_empty() {
        return invalid("no output format requested");
    }
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    let mut manifest = String::new();

    let cfg = dir.join("scenario.cfg");
    report.scenario.write(&cfg)?;
    manifest.push_str("wrote scenario.cfg\n");
    written.push(cfg);

    write_section(dir, "clearing", &report.clearing, formats, &mut written, &mut manifest)?;
    write_section(dir, "revenue", &report.revenue, formats, &mut written, &mut manifest)?;
    write_section(dir, "lmp", &report.lmp, formats, &mut written, &mut manifest)?;
    write_section(dir, "dispatch", &report.dispatch, formats, &mut written, &mut manifest)?;
    write_section(dir, "net_cone", &report.net_cone, formats, &mut written, &mut manifest)?;
    write_section(
        dir,
        "strategic_cm",
        &report.strategic_cm,
        formats,
        &mut written,
        &mut manifest,
    )?;
    write_section(dir, "compare", &report.compare, formats, &mut written, &mut manifest)?;

    let path = dir.join("manifest.txt");
    std::fs::write(&path, &manifest).map_err(io_err(&path))?;
    log::info!("report written to {}", dir.display());
    written.push(path);
    Ok(written)
}

/// Reads an `lmp.csv` written by [`emit_report`].
pub fn read_lmp_csv(path: &Path) -> Result<Vec<LmpRow>> {
    let wrap = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(wrap)?;
    r.deserialize().map(|row| row.map_err(wrap)).collect()
}
