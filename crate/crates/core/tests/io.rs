use std::fs;
use std::path::Path;

use capmkt::energy::{dispatch, truthful_offers, DEFAULT_VOLL};
use capmkt::io::fixture::{bundled_fixture_dir, synthetic_fixture, write_fixture, FIXTURE_SEED};
use capmkt::io::{emit_report, load_scenario, read_lmp_csv, Format, RunReport, ScenarioConfig};
use capmkt::Error;
use proptest::prelude::*;

const GEN_HEADER: &str =
    "id,zone,fuel,p_max_mw,var_cost_usd_per_mwh,invest_cost_usd_per_mw_day,unforced_pct,dispatchable\n";

fn write_case(dir: &Path, generators: &str, lines: &str, loads: &str, cf: &str) -> std::path::PathBuf {
    fs::write(dir.join("generators.csv"), generators).unwrap();
    fs::write(dir.join("lines.csv"), lines).unwrap();
    fs::write(dir.join("loads.csv"), loads).unwrap();
    fs::write(dir.join("capacity_factors.csv"), cf).unwrap();
    let cfg = dir.join("scenario.cfg");
    fs::write(&cfg, "# two zones\nvoll = 1000\n").unwrap();
    cfg
}

const LINES: &str = "from,to,susceptance,f_min_mw,f_max_mw\nA,B,10,-100,100\n";
const LOADS: &str = "zone,hour,mw\nA,1,50\nA,2,60\nB,1,30\nB,2,40\n";
const CF: &str = "generator,hour,cf\nw1,1,0.5\nw1,2,0.25\n";

fn data_error(e: Error) -> (String, usize, String) {
    match e {
        Error::Data { file, row, column, .. } => (file, row, column),
        other => panic!("expected a data error, got {other}"),
    }
}

#[test]
fn bundled_fixture_loads() {
    let (cfg, net, ts) = load_scenario(&bundled_fixture_dir().join("scenario.cfg")).unwrap();
    assert_eq!(net.buses.len(), 12);
    assert_eq!(net.lines.len(), 13);
    assert_eq!(ts.num_hours(), 24);
    assert_eq!(cfg.seed, FIXTURE_SEED);
    assert_eq!(cfg.voll, 1000.0);
    assert_eq!(cfg.f_excess, 0.18);
    assert_eq!(cfg.reserve_margin, 0.2070);
    assert_eq!(cfg.translation_factor, 0.0856);
}

#[test]
fn bundled_fixture_matches_generator() {
    let (_, net, ts) = load_scenario(&bundled_fixture_dir().join("scenario.cfg")).unwrap();
    let (gnet, gts) = synthetic_fixture(FIXTURE_SEED).unwrap();
    assert_eq!(net.buses, gnet.buses);
    assert_eq!(net.lines, gnet.lines);
    assert_eq!(ts, gts);
    assert_eq!(net.generators.len(), gnet.generators.len());
    for (a, b) in net.generators.iter().zip(&gnet.generators) {
        assert_eq!((&a.id, &a.zone, &a.fuel), (&b.id, &b.zone, &b.fuel));
        assert_eq!(
            (a.p_max, a.var_cost, a.unforced_pct),
            (b.p_max, b.var_cost, b.unforced_pct)
        );
        assert!(
            (a.invest_cost - b.invest_cost).abs() <= 1e-9 * b.invest_cost.max(1.0),
            "{}",
            a.id
        );
    }
}

#[test]
fn fixture_round_trips_through_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_fixture(dir.path(), 7).unwrap();
    let (_, net, ts) = load_scenario(&cfg).unwrap();
    let (gnet, gts) = synthetic_fixture(7).unwrap();
    assert_eq!(net, gnet);
    assert_eq!(ts, gts);
}

#[test]
fn wind_defaults_unforced_pct() {
    let dir = tempfile::tempdir().unwrap();
    let gens = format!("{GEN_HEADER}g1,A,NG,100,20,300,1,true\nw1,B,Wind,80,0,50,,\n");
    let cfg = write_case(dir.path(), &gens, LINES, LOADS, CF);
    let (_, net, ts) = load_scenario(&cfg).unwrap();
    let w = net.generator("w1").unwrap();
    assert_eq!(w.unforced_pct, 0.24);
    assert!(!w.dispatchable);
    assert_eq!(ts.capacity_factors["w1"], vec![0.5, 0.25]);
}

#[test]
fn wind_defaults_without_optional_columns() {
    let dir = tempfile::tempdir().unwrap();
    let gens = "id,zone,fuel,p_max_mw,var_cost_usd_per_mwh,invest_cost_usd_per_mw_day\n\
                g1,A,NG,100,20,300\nw1,B,Wind,80,0,50\n";
    let cfg = write_case(dir.path(), gens, LINES, LOADS, CF);
    let (_, net, _) = load_scenario(&cfg).unwrap();
    assert_eq!(net.generator("w1").unwrap().unforced_pct, 0.24);
    assert_eq!(net.generator("g1").unwrap().unforced_pct, 1.0);
}

#[test]
fn unforced_pct_above_one_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let gens = format!("{GEN_HEADER}g1,A,NG,100,20,300,1.5,true\n");
    let cfg = write_case(dir.path(), &gens, LINES, LOADS, "generator,hour,cf\n");
    let (file, row, _) = data_error(load_scenario(&cfg).unwrap_err());
    assert!(file.ends_with("generators.csv"));
    assert_eq!(row, 2);
}

#[test]
fn non_numeric_cell_names_file_row_column() {
    let dir = tempfile::tempdir().unwrap();
    let gens = format!("{GEN_HEADER}g1,A,NG,100,20,300,1,true\ng2,B,NG,abc,20,300,1,true\n");
    let cfg = write_case(dir.path(), &gens, LINES, LOADS, "generator,hour,cf\n");
    let err = load_scenario(&cfg).unwrap_err();
    let msg = err.to_string();
    let (file, row, column) = data_error(err);
    assert!(file.ends_with("generators.csv"));
    assert_eq!((row, column.as_str()), (3, "p_max_mw"));
    assert!(msg.contains("abc"));
}

#[test]
fn missing_column_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let gens = format!("{GEN_HEADER}g1,A,NG,100,20,300,1,true\n");
    let lines = "from,to,f_min_mw,f_max_mw\nA,B,-100,100\n";
    let cfg = write_case(dir.path(), &gens, lines, LOADS, "generator,hour,cf\n");
    let (file, row, column) = data_error(load_scenario(&cfg).unwrap_err());
    assert!(file.ends_with("lines.csv"));
    assert_eq!((row, column.as_str()), (1, "susceptance"));
}

#[test]
fn dangling_references_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let gens = format!("{GEN_HEADER}g1,Z,NG,100,20,300,1,true\n");
    let cfg = write_case(dir.path(), &gens, LINES, LOADS, "generator,hour,cf\n");
    let (file, _, column) = data_error(load_scenario(&cfg).unwrap_err());
    assert!(file.ends_with("generators.csv"));
    assert_eq!(column, "zone");

    let gens = format!("{GEN_HEADER}g1,A,NG,100,20,300,1,true\n");
    let cfg = write_case(dir.path(), &gens, LINES, LOADS, "generator,hour,cf\nnope,1,0.5\n");
    let (file, row, column) = data_error(load_scenario(&cfg).unwrap_err());
    assert!(file.ends_with("capacity_factors.csv"));
    assert_eq!((row, column.as_str()), (2, "generator"));

    let cfg = write_case(
        dir.path(),
        &format!("{GEN_HEADER}w1,B,Wind,80,0,50,,\n"),
        LINES,
        LOADS,
        "generator,hour,cf\nw1,1,0.5\nw1,3,0.5\n",
    );
    let (_, row, column) = data_error(load_scenario(&cfg).unwrap_err());
    assert_eq!((row, column.as_str()), (3, "hour"));
}

#[test]
fn missing_table_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scenario.cfg");
    fs::write(&cfg, "generators = nowhere.csv\n").unwrap();
    let err = load_scenario(&cfg).unwrap_err();
    assert!(err.to_string().contains("nowhere.csv"));
}

#[test]
fn config_errors_carry_line_numbers() {
    let err = ScenarioConfig::parse("voll = 1000\n\nf_excess = lots\n").unwrap_err();
    let (_, row, column) = data_error(err);
    assert_eq!((row, column.as_str()), (3, "f_excess"));
    let (_, row, column) = data_error(ScenarioConfig::parse("colour = red\n").unwrap_err());
    assert_eq!((row, column.as_str()), (1, "colour"));
    assert!(ScenarioConfig::parse("demand_scale = 0\n").is_err());
    assert!(ScenarioConfig::parse("congestion_scale = -1\n").is_err());
    assert!(ScenarioConfig::parse("translation_factor = 1\n").is_err());
}

#[test]
fn config_defaults() {
    let c = ScenarioConfig::parse("").unwrap();
    assert_eq!(c, ScenarioConfig::default());
    assert_eq!(c.days(24), 1.0);
    assert_eq!(c.days(48), 2.0);
    let c = ScenarioConfig::parse("days_in_horizon = 30\nleader = L_NG\n").unwrap();
    assert_eq!(c.days(24), 30.0);
    assert_eq!(c.leader.as_deref(), Some("L_NG"));
}

prop_compose! {
    fn arb_config()(
        voll in 1.0..1e5f64,
        f_excess in 0.01..0.99f64,
        reserve_margin in 0.01..0.99f64,
        translation_factor in 0.01..0.99f64,
        demand_scale in 0.1..3.0f64,
        congestion_scale in 0.1..3.0f64,
        leader in proptest::option::of("[A-Z][A-Z_0-9]{0,8}"),
        grid_steps in 1usize..500,
        cm_grid_step in 1e-4..10.0f64,
        kkt_tol in 1e-12..1e-3f64,
        days in proptest::option::of(0.01..400.0f64),
        full_output_hours in 0.5..24.0f64,
        allow_price_bid: bool,
        seed: u64,
        name in "[a-z_]{1,10}",
    ) -> ScenarioConfig {
        ScenarioConfig {
            generators: format!("{name}.csv").into(),
            lines: "net/lines.csv".into(),
            voll, f_excess, reserve_margin, translation_factor, demand_scale, congestion_scale,
            leader, grid_steps, cm_grid_step, kkt_tol,
            days_in_horizon: days,
            full_output_hours, allow_price_bid, seed,
            ..ScenarioConfig::default()
        }
    }
}

proptest! {
    #[test]
    fn config_round_trips(c in arb_config()) {
        let text = c.to_text();
        let back = ScenarioConfig::parse(&text).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(back.to_text(), text);
    }
}

fn fixture_report() -> RunReport {
    let (net, ts) = synthetic_fixture(FIXTURE_SEED).unwrap();
    let em = dispatch(&net, &ts, &truthful_offers(&net, None), DEFAULT_VOLL).unwrap();
    let mut report = RunReport::new(ScenarioConfig::default());
    report.set_dispatch(&em, &net, &ts);
    report.set_revenue(&net, None, Some(&em.profit));
    report
}

#[test]
fn report_is_deterministic_and_omits_empty_sections() {
    let report = fixture_report();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let wa = emit_report(&report, a.path(), &[Format::Csv, Format::Json]).unwrap();
    let wb = emit_report(&report, b.path(), &[Format::Csv, Format::Json]).unwrap();
    assert_eq!(wa.len(), wb.len());
    for (pa, pb) in wa.iter().zip(&wb) {
        assert_eq!(pa.file_name(), pb.file_name());
        assert_eq!(fs::read(pa).unwrap(), fs::read(pb).unwrap(), "{}", pa.display());
    }
    assert!(!a.path().join("compare.csv").exists());
    assert!(!a.path().join("strategic_cm.json").exists());
    let manifest = fs::read_to_string(a.path().join("manifest.txt")).unwrap();
    assert!(manifest.contains("omitted compare: empty"));
    assert!(manifest.contains("omitted strategic_cm: empty"));
    assert!(manifest.contains("wrote lmp.csv (288 rows)"));
}

#[test]
fn json_mirrors_csv() {
    let report = fixture_report();
    let dir = tempfile::tempdir().unwrap();
    emit_report(&report, dir.path(), &[Format::Csv, Format::Json]).unwrap();
    let json: Vec<capmkt::io::report::LmpRow> =
        serde_json::from_str(&fs::read_to_string(dir.path().join("lmp.json")).unwrap()).unwrap();
    let csv = read_lmp_csv(&dir.path().join("lmp.csv")).unwrap();
    assert_eq!(json, csv);
}

#[test]
fn lmp_csv_round_trips() {
    let report = fixture_report();
    let dir = tempfile::tempdir().unwrap();
    emit_report(&report, dir.path(), &[Format::Csv]).unwrap();
    let back = read_lmp_csv(&dir.path().join("lmp.csv")).unwrap();
    assert_eq!(back.len(), report.lmp.len());
    for (a, b) in back.iter().zip(&report.lmp) {
        assert_eq!((a.hour, &a.bus), (b.hour, &b.bus));
        assert!((a.lmp - b.lmp).abs() <= 1e-12);
        assert!((a.unmet_mw - b.unmet_mw).abs() <= 1e-12);
    }
    let cfg = ScenarioConfig::read(&dir.path().join("scenario.cfg")).unwrap();
    assert_eq!(cfg, report.scenario);
}

#[test]
fn non_finite_values_are_rejected() {
    let mut report = fixture_report();
    report.lmp[0].lmp = f64::NAN;
    let dir = tempfile::tempdir().unwrap();
    assert!(emit_report(&report, dir.path(), &[Format::Csv]).is_err());
}
