use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use capmkt::auction::{
    clear_greedy, clear_mip, clear_qc, excess_capacity_ratio, qc_certificate, CapacityBid, ClearingResult,
};
use capmkt::energy::{
    build_hourly_lp, compute_net_cone, dispatch, equilibrium_violation, generator_energy_profit, hour_congested,
    market_kkt, net_cone_from, split_invariance_gap, truthful_offers, uniform_lmp_check, EnergyMarketResult,
    EnergyOffer,
};
use capmkt::io::fixture::{bundled_fixture_dir, LEADERS};
use capmkt::io::{emit_report, load_scenario, Format, RunReport, ScenarioConfig};
use capmkt::lp::write_lp_format;
use capmkt::model::{DemandCurve, SystemNetwork, TimeSeries};
use capmkt::strategic::{
    best_cm_bid, best_joint_strategy, capacity_market, cm_bid_oracle, compare_settings, market_power_impact,
    oracle_slack,
};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "capmkt", version, about = "Capacity and energy market simulator")]
struct Cli {
    /// Scenario config file. Defaults to the bundled synthetic fixture.
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    /// Directory for report files. Nothing is written without it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "both")]
    format: OutFormat,
    /// Overrides `demand_scale` from the config.
    #[arg(long, global = true)]
    demand_scale: Option<f64>,
    /// Overrides `congestion_scale` from the config.
    #[arg(long, global = true)]
    congestion_scale: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
    Both,
}

impl OutFormat {
    fn formats(self) -> Vec<Format> {
        match self {
            OutFormat::Csv => vec![Format::Csv],
            OutFormat::Json => vec![Format::Json],
            OutFormat::Both => vec![Format::Csv, Format::Json],
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Clear the capacity auction with all three methods and compare them.
    Clear {
        /// Offers CSV (`generator,offer_price,offer_qty`). Without it the
        /// scenario's truthful net CONE offers are used.
        #[arg(long, requires_all = ["slope", "intercept"])]
        bids: Option<PathBuf>,
        /// Demand curve slope A, $/MW-day per MW.
        #[arg(long, requires = "bids")]
        slope: Option<f64>,
        /// Demand curve intercept, $/MW-day.
        #[arg(long, requires = "bids")]
        intercept: Option<f64>,
    },
    /// Hourly DC optimal power flow with truthful offers.
    Dispatch {
        /// Also write each hour's LP as `hour_<h>.lp` (CPLEX LP text) here.
        #[arg(long)]
        lp_dir: Option<PathBuf>,
    },
    /// Net CONE of every unit and the resulting demand curve.
    Netcone,
    /// Best capacity-market price for one leader, checked against a grid search.
    StrategicCm {
        #[arg(long)]
        leader: Option<String>,
        /// Price grid of the brute-force search, $/MW-day.
        #[arg(long)]
        step: Option<f64>,
    },
    /// Best joint capacity and energy strategy for one leader.
    StrategicJoint {
        #[arg(long)]
        leader: Option<String>,
        /// Let the leader bid above its variable cost in the energy market.
        #[arg(long)]
        allow_price_bid: bool,
    },
    /// Energy profit of strategic leaders with and without the capacity market.
    Compare {
        /// Demand range `lo..hi`.
        #[arg(long, default_value = "0.6..1.2")]
        demand: String,
        #[arg(long, default_value_t = 0.1)]
        step: f64,
        /// Congestion scales, comma separated. Defaults to the config value.
        #[arg(long, value_delimiter = ',')]
        congestion: Vec<f64>,
        /// Leader ids, comma separated.
        #[arg(long, value_delimiter = ',')]
        leaders: Vec<String>,
    },
    /// Run the invariant checks on the scenario.
    Validate,
}

enum Failure {
    Usage(String),
    Check(String),
    Run(capmkt::Error),
}

impl From<capmkt::Error> for Failure {
    fn from(e: capmkt::Error) -> Self {
        Failure::Run(e)
    }
}

type Outcome = Result<(), Failure>;

struct Scenario {
    cfg: ScenarioConfig,
    /// As loaded.
    base_net: SystemNetwork,
    base_ts: TimeSeries,
    /// With demand and congestion scales applied.
    net: SystemNetwork,
    ts: TimeSeries,
}

impl Scenario {
    fn load(cli: &Cli) -> Result<Scenario, Failure> {
        let path = cli
            .scenario
            .clone()
            .unwrap_or_else(|| bundled_fixture_dir().join("scenario.cfg"));
        let (mut cfg, base_net, base_ts) = load_scenario(&path)?;
        if let Some(d) = cli.demand_scale {
            cfg.demand_scale = d;
        }
        if let Some(c) = cli.congestion_scale {
            cfg.congestion_scale = c;
        }
        cfg.validate()?;
        let net = base_net.with_line_scale(cfg.congestion_scale);
        let ts = base_ts.with_load_scale(cfg.demand_scale);
        Ok(Scenario {
            cfg,
            base_net,
            base_ts,
            net,
            ts,
        })
    }

    fn days(&self) -> f64 {
        self.cfg.days(self.ts.num_hours())
    }

    fn leader(&self, arg: &Option<String>) -> Result<String, Failure> {
        let id = arg
            .clone()
            .or_else(|| self.cfg.leader.clone())
            .ok_or_else(|| Failure::Usage("no leader: pass --leader or set `leader` in the config".into()))?;
        self.net.generator(&id)?;
        Ok(id)
    }

    /// Truthful offers and demand curve for the scaled scenario.
    fn capacity_market(&self) -> Result<(Vec<CapacityBid>, DemandCurve), Failure> {
        let nc = compute_net_cone(&self.net, &self.ts, self.cfg.voll, self.days())?;
        Ok(capacity_market(&self.net, &self.ts, &nc, &self.cfg.compare_config())?)
    }
}

fn num(x: f64) -> String {
    let r = (x * 1e6).round() / 1e6;
    format!("{}", if r == 0.0 { 0.0 } else { r })
}

fn yes(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn write_report(cli: &Cli, report: &RunReport) -> Outcome {
    if let Some(dir) = &cli.out {
        for path in emit_report(report, dir, &cli.format.formats())? {
            log::info!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn print_clearing(name: &str, r: &ClearingResult) {
    if r.cleared {
        println!(
            "{name:6} price {} quantity {} marginal {}",
            num(r.price),
            num(r.quantity),
            r.marginal.as_deref().unwrap_or("-")
        );
    } else {
        println!("{name:6} not cleared");
    }
}

/// Runs the three clearing methods; returns them with the agreement verdict.
fn clear_all(bids: &[CapacityBid], curve: &DemandCurve, tol: f64) -> Result<([ClearingResult; 3], bool), Failure> {
    let results = [
        clear_greedy(bids, curve)?,
        clear_qc(bids, curve)?,
        clear_mip(bids, curve)?,
    ];
    let scale = curve.pi_max.max(curve.q_zero).max(1.0);
    let agree = results[1..]
        .iter()
        .all(|r| results[0].max_deviation(r).is_some_and(|d| d <= tol * scale));
    Ok((results, agree))
}

fn run_clear(cli: &Cli, bids: &Option<PathBuf>, slope: Option<f64>, intercept: Option<f64>) -> Outcome {
    let (cfg, bids, curve) = match bids {
        Some(path) => {
            let cfg = match &cli.scenario {
                Some(p) => ScenarioConfig::read(p)?,
                None => ScenarioConfig::default(),
            };
            let curve = DemandCurve::from_slope_intercept(slope.unwrap_or(0.0), intercept.unwrap_or(0.0))?;
            (cfg, capmkt::io::tables::read_bids(path)?, curve)
        }
        None => {
            let s = Scenario::load(cli)?;
            let (bids, curve) = s.capacity_market()?;
            (s.cfg, bids, curve)
        }
    };
    let (results, agree) = clear_all(&bids, &curve, cfg.equivalence_tol)?;
    let mut report = RunReport::new(cfg);
    for (name, r) in ["greedy", "qc", "mip"].iter().zip(&results) {
        print_clearing(name, r);
        report.add_clearing(name, r);
    }
    let best = results.iter().find(|r| r.cleared).unwrap_or(&results[1]);
    println!("π*={}, r*={}", num(best.price), num(best.quantity));
    println!("paths agree: {}", yes(agree));
    write_report(cli, &report)?;
    if agree {
        Ok(())
    } else {
        Err(Failure::Check("clearing methods disagree".into()))
    }
}

fn dump_lps(s: &Scenario, offers: &[EnergyOffer], dir: &Path) -> Outcome {
    let io = |e| {
        Failure::Run(capmkt::Error::Io {
            path: dir.to_path_buf(),
            source: e,
        })
    };
    fs::create_dir_all(dir).map_err(io)?;
    for (t, hour) in s.ts.horizon.iter().enumerate() {
        let lp = build_hourly_lp(&s.net, &s.ts, offers, t, s.cfg.voll)?;
        let path = dir.join(format!("hour_{hour:02}.lp"));
        fs::write(&path, write_lp_format(&lp)).map_err(|e| Failure::Run(capmkt::Error::Io { path, source: e }))?;
    }
    Ok(())
}

fn run_dispatch(cli: &Cli, lp_dir: Option<&Path>) -> Outcome {
    let s = Scenario::load(cli)?;
    let offers = truthful_offers(&s.net, None);
    if let Some(dir) = lp_dir {
        dump_lps(&s, &offers, dir)?;
    }
    let em = dispatch(&s.net, &s.ts, &offers, s.cfg.voll)?;
    println!("hour  load_mw  lmp_min  lmp_max  shed_mw  congested  kkt");
    let mut failed = 0;
    for (k, h) in em.hours.iter().enumerate() {
        let kkt = market_kkt(h, &s.net, s.cfg.voll, s.cfg.kkt_tol);
        failed += usize::from(!kkt.pass);
        let lo = h.lmp.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = h.lmp.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        println!(
            "{:4}  {:7.1}  {:7.2}  {:7.2}  {:7.1}  {:9}  {}",
            s.ts.horizon[k],
            s.ts.system_load(k),
            lo,
            hi,
            h.shed(),
            yes(hour_congested(h, &s.net)),
            if kkt.pass { "pass" } else { "FAIL" }
        );
    }
    println!("total cost {} shed {} MWh", num(em.total_cost), num(em.total_shed()));
    let mut report = RunReport::new(s.cfg.clone());
    report.set_dispatch(&em, &s.net, &s.ts);
    report.set_revenue(&s.net, None, Some(&em.profit));
    write_report(cli, &report)?;
    if failed == 0 {
        Ok(())
    } else {
        Err(Failure::Check(format!("{failed} hours fail the KKT check")))
    }
}

/// Units whose output never reaches their offered capacity.
fn never_full(em: &EnergyMarketResult, net: &SystemNetwork) -> Vec<bool> {
    (0..net.generators.len())
        .map(|g| {
            em.hours
                .iter()
                .all(|h| h.production[g] < h.capacity[g] - 1e-6 * h.capacity[g].max(1.0))
        })
        .collect()
}

fn run_netcone(cli: &Cli) -> Outcome {
    let s = Scenario::load(cli)?;
    let em = dispatch(&s.net, &s.ts, &truthful_offers(&s.net, None), s.cfg.voll)?;
    let nc = net_cone_from(&em, &s.net, s.days())?;
    let idle = never_full(&em, &s.net);
    println!("generator  fuel  invest_cost  energy_profit  net_cone  never_full");
    for (g, gen) in s.net.generators.iter().enumerate() {
        println!(
            "{}  {}  {}  {}  {}  {}",
            gen.id,
            gen.fuel,
            num(gen.invest_cost),
            num(nc.energy_profit[&gen.id]),
            num(nc.net_cone[&gen.id]),
            yes(idle[g])
        );
    }
    let (_, curve) = capacity_market(&s.net, &s.ts, &nc, &s.cfg.compare_config())?;
    println!("peaker {} c_cone {}", nc.peaker, num(nc.c_cone));
    println!(
        "demand curve: slope {} intercept {} q_cap {} q_zero {}",
        num(curve.a_slope),
        num(curve.pi_max),
        num(curve.q_cap),
        num(curve.q_zero)
    );
    let mut report = RunReport::new(s.cfg.clone());
    report.set_net_cone(&nc, &s.net);
    write_report(cli, &report)
}

fn run_strategic_cm(cli: &Cli, leader: &Option<String>, step: Option<f64>) -> Outcome {
    let s = Scenario::load(cli)?;
    let leader = s.leader(leader)?;
    let step = step.unwrap_or(s.cfg.cm_grid_step);
    let (bids, curve) = s.capacity_market()?;
    let truthful = clear_qc(&bids, &curve)?;
    let best = best_cm_bid(&leader, &bids, &curve)?;
    let oracle = cm_bid_oracle(&leader, &bids, &curve, step)?;
    let impact = market_power_impact(&bids, &curve, &best)?;
    let h1 = bids
        .iter()
        .find(|b| b.generator_id == leader)
        .map_or(0.0, |b| b.offer_qty);
    let slack = oracle_slack(h1, &curve, step);
    let ok = best.leader_revenue >= oracle.leader_revenue - slack
        && (best.leader_revenue - oracle.leader_revenue).abs() <= slack;
    println!(
        "truthful: price {} leader revenue {}",
        num(truthful.price),
        num(truthful.revenue_of(&leader))
    );
    println!(
        "best:     offer {} ({:?}) price {} leader revenue {}",
        num(best.strategy.offer_price),
        best.strategy.kind,
        num(best.clearing.price),
        num(best.leader_revenue)
    );
    println!(
        "oracle:   offer {} price {} leader revenue {}",
        num(oracle.strategy.offer_price),
        num(oracle.clearing.price),
        num(oracle.leader_revenue)
    );
    println!(
        "impact:   price {} consumer surplus {} rivals move with price: {}",
        num(impact.price_delta),
        num(impact.consumer_surplus_delta),
        yes(impact.comonotone)
    );
    println!("oracle agrees: {}", yes(ok));
    let mut report = RunReport::new(s.cfg.clone());
    report.add_clearing("truthful", &truthful);
    report.add_clearing("strategic", &best.clearing);
    report.add_strategic_cm("enumeration", &best);
    report.add_strategic_cm("grid", &oracle);
    write_report(cli, &report)?;
    if ok {
        Ok(())
    } else {
        Err(Failure::Check("enumeration and grid search disagree".into()))
    }
}

fn run_strategic_joint(cli: &Cli, leader: &Option<String>, allow_price_bid: bool) -> Outcome {
    let s = Scenario::load(cli)?;
    let leader = s.leader(leader)?;
    let (bids, curve) = s.capacity_market()?;
    let mut opts = s.cfg.compare_config().joint;
    opts.allow_price_bid |= allow_price_bid;
    let out = best_joint_strategy(&leader, &s.net, &s.ts, &bids, &curve, &opts)?;
    let st = &out.strategy;
    println!(
        "strategy: cm offer {} MW sold {} at {}; energy extra {} MW at {} $/MWh",
        num(st.cm_offer_qty),
        num(st.cm_sold),
        num(st.cm_price),
        num(st.em_extra),
        num(st.em_bid_price)
    );
    println!(
        "profit {} (capacity {} energy {}); truthful {}",
        num(out.profit),
        num(out.cm_revenue),
        num(out.em_profit),
        num(out.truthful_profit)
    );
    let r = &out.report;
    println!(
        "gain {} loss {} identity applies: {} residual {}",
        num(r.gain),
        num(r.loss),
        yes(r.identity_applies),
        num(r.identity_residual)
    );
    if let Some(dir) = &cli.out {
        std::fs::create_dir_all(dir).map_err(|source| capmkt::Error::Io {
            path: dir.clone(),
            source,
        })?;
        let path = dir.join("joint.json");
        let mut text = serde_json_string(&out)?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|source| capmkt::Error::Io { path, source })?;
    }
    Ok(())
}

fn serde_json_string<T: serde::Serialize>(v: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(v).map_err(|e| Failure::Run(e.into()))
}

fn demand_levels(range: &str, step: f64) -> Result<Vec<f64>, Failure> {
    let bad = || Failure::Usage(format!("--demand expects `lo..hi`, got `{range}`"));
    let (lo, hi) = range.split_once("..").ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    if !(lo > 0.0 && hi >= lo && step > 0.0) {
        return Err(Failure::Usage("--demand needs 0 < lo <= hi and --step > 0".into()));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| ((lo + k as f64 * step) * 1e9).round() / 1e9).collect())
}

fn default_leaders(s: &Scenario) -> Vec<String> {
    if let Some(l) = &s.cfg.leader {
        return vec![l.clone()];
    }
    LEADERS
        .iter()
        .filter_map(|l| s.net.generator(l.0).ok())
        .filter(|g| g.dispatchable)
        .map(|g| g.id.clone())
        .collect()
}

fn run_compare(cli: &Cli, demand: &str, step: f64, congestion: &[f64], leaders: &[String]) -> Outcome {
    let s = Scenario::load(cli)?;
    let levels = demand_levels(demand, step)?;
    let congestion = if congestion.is_empty() {
        vec![s.cfg.congestion_scale]
    } else {
        congestion.to_vec()
    };
    if congestion.iter().any(|c| !(*c > 0.0)) {
        return Err(Failure::Usage("congestion scales must be positive".into()));
    }
    let leaders = if leaders.is_empty() {
        default_leaders(&s)
    } else {
        leaders.to_vec()
    };
    if leaders.is_empty() {
        return Err(Failure::Usage(
            "no leaders: pass --leaders or set `leader` in the config".into(),
        ));
    }
    let base = compute_net_cone(&s.base_net, &s.base_ts, s.cfg.voll, s.cfg.days(s.base_ts.num_hours()))?;
    let ccfg = s.cfg.compare_config();
    let mut report = RunReport::new(s.cfg.clone());
    let mut violations = 0;
    println!("leader  fuel  demand  congestion  both  no_cm  truthful  both_vs_no_cm  both_vs_truthful");
    for &cs in &congestion {
        let mut nonzero = 0;
        for leader in &leaders {
            for &ds in &levels {
                let row = compare_settings(leader, &s.base_net, &s.base_ts, &base, ds, cs, &ccfg)?;
                let tol = 1e-6 * row.em_truthful.abs().max(1.0);
                if row.both_vs_no_cm > tol || row.both_vs_truthful < -tol {
                    violations += 1;
                }
                if row.no_cm_vs_truthful.abs() > tol {
                    nonzero += 1;
                }
                println!(
                    "{}  {}  {}  {}  {}  {}  {}  {}  {}",
                    row.leader,
                    row.fuel,
                    num(ds),
                    num(cs),
                    num(row.em_both),
                    num(row.em_no_cm),
                    num(row.em_truthful),
                    num(row.both_vs_no_cm),
                    num(row.both_vs_truthful)
                );
                report.add_compare(&row);
            }
        }
        println!(
            "congestion {}: {nonzero} cells where withholding pays without a capacity market",
            num(cs)
        );
    }
    println!("sign pattern holds: {}", yes(violations == 0));
    write_report(cli, &report)?;
    if violations == 0 {
        Ok(())
    } else {
        Err(Failure::Check(format!("{violations} cells break the sign pattern")))
    }
}

struct Checks {
    failed: usize,
}

impl Checks {
    fn record(&mut self, name: &str, pass: bool, detail: String) {
        self.failed += usize::from(!pass);
        println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    }
}

fn run_validate(cli: &Cli) -> Outcome {
    let s = Scenario::load(cli)?;
    let mut c = Checks { failed: 0 };
    let voll = s.cfg.voll;
    c.record(
        "scenario",
        true,
        format!(
            "{} buses, {} lines, {} generators, {} hours",
            s.net.buses.len(),
            s.net.lines.len(),
            s.net.generators.len(),
            s.ts.num_hours()
        ),
    );

    let em = dispatch(&s.net, &s.ts, &truthful_offers(&s.net, None), voll)?;
    let worst_kkt = em
        .hours
        .iter()
        .map(|h| market_kkt(h, &s.net, voll, s.cfg.kkt_tol))
        .fold((true, 0.0f64), |(p, r), k| (p && k.pass, r.max(k.max_residual())));
    c.record("dispatch kkt", worst_kkt.0, format!("max residual {:e}", worst_kkt.1));
    let eq = em
        .hours
        .iter()
        .map(|h| equilibrium_violation(h, &s.net, 1e-4))
        .fold(0.0, f64::max);
    c.record("price-taking dispatch", eq <= 1e-6, format!("max violation {eq:e} MW"));
    let uni = uniform_lmp_check(&em, &s.net, 1e-7);
    let uncongested = uni.iter().filter(|u| !u.congested).count();
    let spread = uni
        .iter()
        .filter(|u| !u.congested)
        .map(|u| u.spread)
        .fold(0.0, f64::max);
    c.record(
        "uniform price when uncongested",
        uni.iter().all(|u| u.pass),
        format!("{uncongested} uncongested hours, max spread {spread:e}"),
    );

    let nc = net_cone_from(&em, &s.net, s.days())?;
    let mut nc_gap: f64 = 0.0;
    for g in &s.net.generators {
        let profit = generator_energy_profit(&em, &s.net, &s.ts, &g.id)?;
        let w = (g.invest_cost - profit / (g.p_max * s.days())).max(0.0);
        nc_gap = nc_gap.max((w - nc.net_cone[&g.id]).abs());
    }
    c.record("net cone closed form", nc_gap <= 1e-6, format!("max gap {nc_gap:e}"));

    let (bids, curve) = capacity_market(&s.net, &s.ts, &nc, &s.cfg.compare_config())?;
    let (results, agree) = clear_all(&bids, &curve, s.cfg.equivalence_tol)?;
    c.record(
        "clearing methods agree",
        agree,
        format!("price {} quantity {}", num(results[1].price), num(results[1].quantity)),
    );
    let cert = qc_certificate(&results[1], &bids, &curve);
    c.record(
        "clearing optimality",
        cert.max_residual() <= 1e-9,
        format!("max residual {:e}", cert.max_residual()),
    );
    if results[1].cleared && results[1].marginal.is_some() {
        let ex = excess_capacity_ratio(&results[1], &curve)?;
        c.record(
            "excess capacity identity",
            ex.residual() <= 1e-9 && ex.ratio >= -1e-12,
            format!("ratio {} residual {:e}", num(ex.ratio), ex.residual()),
        );
    }

    let committed: BTreeMap<String, f64> = s
        .net
        .generators
        .iter()
        .map(|g| (g.id.clone(), results[1].sold_of(&g.id) / g.unforced_pct))
        .collect();
    let gap = split_invariance_gap(&s.net, &s.ts, &committed, voll)?;
    let tol = 1e-9 * em.total_cost.abs().max(1.0);
    c.record(
        "dispatch ignores capacity commitments",
        gap <= tol,
        format!("cost gap {gap:e}"),
    );

    if let Some(leader) = &s.cfg.leader {
        let best = best_cm_bid(leader, &bids, &curve)?;
        let oracle = cm_bid_oracle(leader, &bids, &curve, s.cfg.cm_grid_step)?;
        let h1 = bids
            .iter()
            .find(|b| &b.generator_id == leader)
            .map_or(0.0, |b| b.offer_qty);
        let slack = oracle_slack(h1, &curve, s.cfg.cm_grid_step);
        let diff = best.leader_revenue - oracle.leader_revenue;
        c.record(
            "strategic bid vs grid search",
            diff.abs() <= slack,
            format!("revenue gap {}", num(diff)),
        );
    }

    if c.failed == 0 {
        println!("all checks passed");
        Ok(())
    } else {
        Err(Failure::Check(format!("{} checks failed", c.failed)))
    }
}

fn run(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Clear { bids, slope, intercept } => run_clear(cli, bids, *slope, *intercept),
        Command::Dispatch { lp_dir } => run_dispatch(cli, lp_dir.as_deref()),
        Command::Netcone => run_netcone(cli),
        Command::StrategicCm { leader, step } => run_strategic_cm(cli, leader, *step),
        Command::StrategicJoint {
            leader,
            allow_price_bid,
        } => run_strategic_joint(cli, leader, *allow_price_bid),
        Command::Compare {
            demand,
            step,
            congestion,
            leaders,
        } => run_compare(cli, demand, *step, congestion, leaders),
        Command::Validate => run_validate(cli),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CAPMKT_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("validation failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\nRun `capmkt --help` for usage.");
            ExitCode::from(2)
        }
    }
}
