//! CSV tables for generators, lines, loads and capacity factors.
//!
//! Headers are required and matched by name, so column order is free.
//! Row numbers in errors are file line numbers (the header is line 1).

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{Generator, Line, SystemNetwork, TimeSeries, WIND_UNFORCED_PCT};

struct Table {
    file: String,
    columns: HashMap<String, usize>,
    rows: Vec<(usize, csv::StringRecord)>,
}

impl Table {
    fn read(path: &Path, required: &[&str]) -> Result<Table> {
        let file = path.display().to_string();
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|source| Error::Csv {
                path: path.to_path_buf(),
                source,
            })?;
        let headers = reader
            .headers()
            .map_err(|source| Error::Csv {
                path: path.to_path_buf(),
                source,
            })?
            .clone();
        let columns: HashMap<String, usize> = headers
            .iter()
            .enumerate()
            .map(|(i, h)| (h.trim_start_matches('\u{feff}').to_string(), i))
            .collect();
        for &col in required {
            if !columns.contains_key(col) {
                return Err(Error::Data {
                    file,
                    row: 1,
                    column: col.into(),
                    message: "missing column".into(),
                });
            }
        }
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|source| Error::Csv {
                path: path.to_path_buf(),
                source,
            })?;
            let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
            rows.push((line, rec));
        }
        log::debug!("read {} rows from {file}", rows.len());
        Ok(Table { file, columns, rows })
    }

    fn error(&self, row: usize, column: &str, message: impl Into<String>) -> Error {
        Error::Data {
            file: self.file.clone(),
            row,
            column: column.into(),
            message: message.into(),
        }
    }

    /// Cell text; empty when the column is absent.
    fn cell<'a>(&self, rec: &'a csv::StringRecord, column: &str) -> &'a str {
        self.columns.get(column).and_then(|&i| rec.get(i)).unwrap_or("")
    }

    fn text(&self, row: usize, rec: &csv::StringRecord, column: &str) -> Result<String> {
        let v = self.cell(rec, column);
        if v.is_empty() {
            return Err(self.error(row, column, "empty cell"));
        }
        Ok(v.to_string())
    }

    fn number(&self, row: usize, rec: &csv::StringRecord, column: &str) -> Result<f64> {
        let v = self.cell(rec, column);
        match v.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(x),
            _ => Err(self.error(row, column, format!("not a finite number: `{v}`"))),
        }
    }

    fn hour(&self, row: usize, rec: &csv::StringRecord, column: &str) -> Result<usize> {
        let v = self.cell(rec, column);
        v.parse::<usize>()
            .map_err(|_| self.error(row, column, format!("not a non-negative integer: `{v}`")))
    }
}

fn is_wind(fuel: &str) -> bool {
    fuel.eq_ignore_ascii_case("wind")
}

fn parse_bool(v: &str) -> Option<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" => Some(true),
        "false" | "0" | "no" => Some(false),
        _ => None,
    }
}

/// `id,zone,fuel,p_max_mw,var_cost_usd_per_mwh,invest_cost_usd_per_mw_day,unforced_pct,dispatchable`.
/// `unforced_pct` may be empty or absent: 0.24 for wind, 1 otherwise.
/// `dispatchable` may be empty or absent: false for wind, true otherwise.
pub fn read_generators(path: &Path) -> Result<Vec<Generator>> {
    let t = Table::read(
        path,
        &[
            "id",
            "zone",
            "fuel",
            "p_max_mw",
            "var_cost_usd_per_mwh",
            "invest_cost_usd_per_mw_day",
        ],
    )?;
    let mut seen = HashMap::new();
    let mut out = Vec::with_capacity(t.rows.len());
    for (row, rec) in &t.rows {
        let row = *row;
        let id = t.text(row, rec, "id")?;
        if let Some(first) = seen.insert(id.clone(), row) {
            return Err(t.error(row, "id", format!("duplicate id `{id}` (first on row {first})")));
        }
        let fuel = t.text(row, rec, "fuel")?;
        let unforced_pct = match t.cell(rec, "unforced_pct") {
            "" if is_wind(&fuel) => WIND_UNFORCED_PCT,
            "" => 1.0,
            _ => t.number(row, rec, "unforced_pct")?,
        };
        let dispatchable = match t.cell(rec, "dispatchable") {
            "" => !is_wind(&fuel),
            v => parse_bool(v).ok_or_else(|| t.error(row, "dispatchable", format!("not a boolean: `{v}`")))?,
        };
        let g = Generator {
            id,
            zone: t.text(row, rec, "zone")?,
            fuel,
            p_max: t.number(row, rec, "p_max_mw")?,
            var_cost: t.number(row, rec, "var_cost_usd_per_mwh")?,
            invest_cost: t.number(row, rec, "invest_cost_usd_per_mw_day")?,
            unforced_pct,
            dispatchable,
        };
        g.validate().map_err(|e| t.error(row, "id", e.to_string()))?;
        out.push(g);
    }
    Ok(out)
}

/// `from,to,susceptance,f_min_mw,f_max_mw`.
pub fn read_lines(path: &Path) -> Result<Vec<Line>> {
    let t = Table::read(path, &["from", "to", "susceptance", "f_min_mw", "f_max_mw"])?;
    t.rows
        .iter()
        .map(|(row, rec)| {
            let row = *row;
            Ok(Line {
                from: t.text(row, rec, "from")?,
                to: t.text(row, rec, "to")?,
                susceptance: t.number(row, rec, "susceptance")?,
                f_min: t.number(row, rec, "f_min_mw")?,
                f_max: t.number(row, rec, "f_max_mw")?,
            })
        })
        .collect()
}

/// `zone,hour,mw`. Returns buses in order of first appearance, the sorted
/// hour labels, and `loads[bus][t]`. Every zone needs every hour exactly once.
pub fn read_loads(path: &Path) -> Result<(Vec<String>, Vec<usize>, Vec<Vec<f64>>)> {
    let t = Table::read(path, &["zone", "hour", "mw"])?;
    let mut buses: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut cells: Vec<BTreeMap<usize, f64>> = Vec::new();
    for (row, rec) in &t.rows {
        let row = *row;
        let zone = t.text(row, rec, "zone")?;
        let hour = t.hour(row, rec, "hour")?;
        let mw = t.number(row, rec, "mw")?;
        if mw < 0.0 {
            return Err(t.error(row, "mw", "negative load"));
        }
        let b = *index.entry(zone.clone()).or_insert_with(|| {
            buses.push(zone.clone());
            cells.push(BTreeMap::new());
            buses.len() - 1
        });
        if cells[b].insert(hour, mw).is_some() {
            return Err(t.error(row, "hour", format!("duplicate hour {hour} for zone {zone}")));
        }
    }
    let hours: Vec<usize> = cells
        .iter()
        .flat_map(|m| m.keys().copied())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut loads = Vec::with_capacity(buses.len());
    for (b, m) in cells.iter().enumerate() {
        if let Some(h) = hours.iter().find(|h| !m.contains_key(h)) {
            return Err(t.error(0, "hour", format!("zone {} has no load for hour {h}", buses[b])));
        }
        loads.push(m.values().copied().collect());
    }
    Ok((buses, hours, loads))
}

/// `generator,hour,cf`. Hours must match `hours`.
pub fn read_capacity_factors(path: &Path, net: &SystemNetwork, hours: &[usize]) -> Result<BTreeMap<String, Vec<f64>>> {
    let t = Table::read(path, &["generator", "hour", "cf"])?;
    let slot: HashMap<usize, usize> = hours.iter().enumerate().map(|(k, &h)| (h, k)).collect();
    let mut out: BTreeMap<String, Vec<Option<f64>>> = BTreeMap::new();
    for (row, rec) in &t.rows {
        let row = *row;
        let id = t.text(row, rec, "generator")?;
        let g = net
            .generator(&id)
            .map_err(|_| t.error(row, "generator", format!("unknown generator `{id}`")))?;
        if g.dispatchable {
            return Err(t.error(row, "generator", format!("`{id}` is dispatchable")));
        }
        let hour = t.hour(row, rec, "hour")?;
        let k = *slot
            .get(&hour)
            .ok_or_else(|| t.error(row, "hour", format!("hour {hour} not in the load horizon")))?;
        let cf = t.number(row, rec, "cf")?;
        if !(0.0..=1.0).contains(&cf) {
            return Err(t.error(row, "cf", format!("{cf} outside [0, 1]")));
        }
        let series = out.entry(id.clone()).or_insert_with(|| vec![None; hours.len()]);
        if series[k].replace(cf).is_some() {
            return Err(t.error(row, "hour", format!("duplicate hour {hour} for {id}")));
        }
    }
    out.into_iter()
        .map(|(id, series)| {
            let full: Option<Vec<f64>> = series.iter().copied().collect();
            full.map(|s| (id.clone(), s))
                .ok_or_else(|| t.error(0, "hour", format!("{id} is missing hours")))
        })
        .collect()
}

/// Reads the four tables and checks every cross-reference.
pub fn read_network(
    generators: &Path,
    lines: &Path,
    loads: &Path,
    capacity_factors: &Path,
) -> Result<(SystemNetwork, TimeSeries)> {
    let gens = read_generators(generators)?;
    let lns = read_lines(lines)?;
    let (buses, hours, load_rows) = read_loads(loads)?;
    let known: HashMap<&str, ()> = buses.iter().map(|b| (b.as_str(), ())).collect();
    let gen_file = generators.display().to_string();
    for (k, g) in gens.iter().enumerate() {
        if !known.contains_key(g.zone.as_str()) {
            return Err(Error::Data {
                file: gen_file,
                row: k + 2,
                column: "zone".into(),
                message: format!("zone `{}` has no rows in the load table", g.zone),
            });
        }
    }
    for (k, l) in lns.iter().enumerate() {
        for (col, bus) in [("from", &l.from), ("to", &l.to)] {
            if !known.contains_key(bus.as_str()) {
                return Err(Error::Data {
                    file: lines.display().to_string(),
                    row: k + 2,
                    column: col.into(),
                    message: format!("zone `{bus}` has no rows in the load table"),
                });
            }
        }
    }
    let net = SystemNetwork::new(buses, lns, gens)?;
    let capacity_factors = read_capacity_factors(capacity_factors, &net, &hours)?;
    let ts = TimeSeries {
        horizon: hours,
        loads: load_rows,
        capacity_factors,
    };
    ts.validate(&net)?;
    Ok((net, ts))
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })
}

fn write_rows(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let wrap = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = writer(path)?;
    w.write_record(header).map_err(wrap)?;
    for r in rows {
        w.write_record(&r).map_err(wrap)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_generators(path: &Path, generators: &[Generator]) -> Result<()> {
    write_rows(
        path,
        &[
            "id",
            "zone",
            "fuel",
            "p_max_mw",
            "var_cost_usd_per_mwh",
            "invest_cost_usd_per_mw_day",
            "unforced_pct",
            "dispatchable",
        ],
        generators.iter().map(|g| {
            vec![
                g.id.clone(),
                g.zone.clone(),
                g.fuel.clone(),
                g.p_max.to_string(),
                g.var_cost.to_string(),
                g.invest_cost.to_string(),
                g.unforced_pct.to_string(),
                g.dispatchable.to_string(),
            ]
        }),
    )
}

pub fn write_lines(path: &Path, lines: &[Line]) -> Result<()> {
    write_rows(
        path,
        &["from", "to", "susceptance", "f_min_mw", "f_max_mw"],
        lines.iter().map(|l| {
            vec![
                l.from.clone(),
                l.to.clone(),
                l.susceptance.to_string(),
                l.f_min.to_string(),
                l.f_max.to_string(),
            ]
        }),
    )
}

pub fn write_loads(path: &Path, net: &SystemNetwork, ts: &TimeSeries) -> Result<()> {
    write_rows(
        path,
        &["zone", "hour", "mw"],
        net.buses.iter().enumerate().flat_map(|(b, bus)| {
            ts.horizon
                .iter()
                .enumerate()
                .map(move |(k, h)| vec![bus.clone(), h.to_string(), ts.loads[b][k].to_string()])
        }),
    )
}

pub fn write_capacity_factors(path: &Path, ts: &TimeSeries) -> Result<()> {
    write_rows(
        path,
        &["generator", "hour", "cf"],
        ts.capacity_factors.iter().flat_map(|(id, series)| {
            ts.horizon
                .iter()
                .zip(series)
                .map(move |(h, cf)| vec![id.clone(), h.to_string(), cf.to_string()])
        }),
    )
}

/// `generator,offer_price,offer_qty` capacity-market offers.
pub fn read_bids(path: &Path) -> Result<Vec<crate::auction::CapacityBid>> {
    let t = Table::read(path, &["generator", "offer_price", "offer_qty"])?;
    t.rows
        .iter()
        .map(|(row, rec)| {
            let row = *row;
            Ok(crate::auction::CapacityBid::new(
                t.text(row, rec, "generator")?,
                t.number(row, rec, "offer_price")?,
                t.number(row, rec, "offer_qty")?,
            ))
        })
        .collect()
}
