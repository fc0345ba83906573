//! The five experiment commands.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use modsim_core::bayesopt::{bo_loop, grid_search, random_search, BoConfig, Evaluation, SearchResult};
use modsim_core::budget::Budget;
use modsim_core::choice::{calibrate_transit_asc, draw_mode, Mode, ModeShareVector};
use modsim_core::economics::{profit_breakdown, EconomicsSummary};
use modsim_core::equilibrium::{
    run_to_equilibrium, AttributeStore, EquilibriumConfig, EquilibriumContext, EquilibriumResult, SupplyParams,
};
use modsim_core::fleetsim::{run_period, SimStats, Tier, TripRequest};
use modsim_core::netgraph::{build_combined_network, cluster_nodes, Clustering, CombinedGraph, RoadGraph};
use modsim_core::rng::{stream, tags};
use modsim_core::synthetic::{random_demand, GridCity, ProfitSurface};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Method, Objective, OptimizeConfig, RunConfig};
use crate::error::CliError;
use crate::io::{load_demand, load_road, load_transit, num, Reporter};

/// Network, zones and demand shared by every run of a command.
pub struct Instance {
    pub road: RoadGraph,
    pub combined: CombinedGraph,
    pub clustering: Clustering,
    pub ctx: EquilibriumContext,
}

pub fn build_instance(cfg: &RunConfig) -> Result<Instance, CliError> {
    let d = &cfg.data;
    let s = &cfg.synthetic;
    let city = GridCity {
        rows: s.rows,
        cols: s.cols,
        spacing_m: s.spacing_m,
        speed_mps: s.speed_mps,
        transit_rows: [s.rows / 4, 3 * s.rows / 4],
        transit_cols: [s.cols / 4, 3 * s.cols / 4],
        ..GridCity::default()
    };
    let road = match (&d.nodes, &d.edges) {
        (Some(n), Some(e)) => load_road(n, e)?,
        _ => city.road()?,
    };
    let transit = match (&d.stations, &d.lines, &d.line_stops) {
        (Some(st), Some(l), Some(ls)) => load_transit(st, l, ls)?,
        _ => city.transit()?,
    };
    let travelers = match &d.demand {
        Some(p) => load_demand(p, &road)?,
        None => random_demand(road.node_count(), s.requests, s.horizon_s, cfg.demand_seed()),
    };
    let mut demand_nodes: Vec<usize> = travelers.iter().flat_map(|t| [t.origin, t.destination]).collect();
    demand_nodes.sort_unstable();
    demand_nodes.dedup();
    road.validate_demand_connectivity(&demand_nodes)?;
    let combined = build_combined_network(&road, &transit, cfg.network.transit)?;
    let clustering = cluster_nodes(&road, cfg.network.walk_radius_mi, cfg.network.area_sq_mi, cfg.seed)?;
    let ctx = EquilibriumContext::new(&road, &combined, clustering.assignment.clone(), travelers)?;
    Ok(Instance { road, combined, clustering, ctx })
}

/// Stops searches once a wall-clock deadline passes.
pub struct Deadline(Option<Instant>);

impl Deadline {
    pub fn after(seconds: Option<f64>) -> Self {
        Deadline(seconds.map(|s| Instant::now() + Duration::from_secs_f64(s)))
    }
}

impl Budget for Deadline {
    fn exhausted(&mut self) -> bool {
        self.0.is_some_and(|d| Instant::now() >= d)
    }
}

fn tier_name(t: Tier) -> String {
    t.to_string()
}

fn cell_rows(stats: &SimStats) -> Vec<Vec<String>> {
    stats
        .cells
        .iter()
        .map(|(&(i, j, t), c)| {
            vec![
                i.to_string(),
                j.to_string(),
                tier_name(t),
                num(c.mean_wait),
                num(c.mean_ivtt),
                num(c.service_rate()),
                c.requested.to_string(),
            ]
        })
        .collect()
}

const CELL_HEADER: [&str; 7] = ["cluster_i", "cluster_j", "tier", "wait_s", "ivtt_s", "service_rate", "count"];

#[derive(Serialize)]
struct TierSummary {
    fleet_size: usize,
    requested: usize,
    served: usize,
    unserved: usize,
    vmt_miles: f64,
    rebalance_miles: f64,
    pmt_miles: f64,
    pmt_per_vmt: f64,
    revenue: f64,
}

#[derive(Serialize)]
struct SimSummary {
    requests: usize,
    tiers: BTreeMap<String, TierSummary>,
    violations: usize,
    unresolved: usize,
    suboptimal_epochs: usize,
    truncated_epochs: usize,
}

fn sim_summary(stats: &SimStats, requests: usize) -> SimSummary {
    let tiers = Tier::ALL
        .iter()
        .map(|&t| {
            let s = stats.tier(t);
            (
                tier_name(t),
                TierSummary {
                    fleet_size: s.fleet_size,
                    requested: s.requested,
                    served: s.served,
                    unserved: s.unserved,
                    vmt_miles: s.vmt_miles,
                    rebalance_miles: s.rebalance_miles,
                    pmt_miles: s.pmt_miles,
                    pmt_per_vmt: s.pmt_per_vmt(),
                    revenue: s.revenue,
                },
            )
        })
        .collect();
    SimSummary {
        requests,
        tiers,
        violations: stats.violations.total(),
        unresolved: stats.unresolved,
        suboptimal_epochs: stats.suboptimal_epochs,
        truncated_epochs: stats.truncated_epochs,
    }
}

fn shares_from(counts: &[usize; 4]) -> ModeShareVector {
    ModeShareVector::from_counts(&Mode::ALL.iter().zip(counts).map(|(&m, &c)| (m, c)).collect())
}

/// One simulation with modes drawn from the configured fixed shares.
pub fn simulate(cfg: &RunConfig, inst: &Instance, rep: &Reporter) -> Result<Vec<PathBuf>, CliError> {
    let total: f64 = cfg.simulate.shares.values().sum();
    let probs = ModeShareVector { share: Mode::ALL.iter().map(|m| (*m, cfg.simulate.shares.get(m).copied().unwrap_or(0.0) / total)).collect() };
    let mut rng = stream(cfg.seed, tags::CHOICE_BASE);
    let mut chosen = [0usize; 4];
    let mut requests = Vec::new();
    for t in &inst.ctx.travelers {
        let m = draw_mode(&probs, &mut rng);
        chosen[Mode::ALL.iter().position(|x| *x == m).expect("mode")] += 1;
        if let Some(tier) = Tier::from_mode(m) {
            let direct = inst.ctx.times.time(t.origin, t.destination);
            requests.push(TripRequest {
                id: t.id,
                origin: t.origin,
                destination: t.destination,
                request_time: t.request_time,
                tier,
                earliest_arrival: t.request_time + direct,
            });
        }
    }
    let eq = &cfg.equilibrium;
    let mut budget = Deadline::after(cfg.optimize.eval_time_limit_s);
    let stats = run_period(&requests, &cfg.supply.fleets(), &inst.ctx.times, &inst.ctx.clusters, &eq.sim, cfg.seed, &mut budget)?;
    let mut realized = chosen;
    realized[3] = chosen[3];
    for (i, t) in Tier::ALL.iter().enumerate() {
        let s = stats.tier(*t);
        realized[i] = s.served;
        realized[3] += s.requested - s.served;
    }
    let breakdown = profit_breakdown(&stats, cfg.supply.fleet_sizes(), &eq.cost, &eq.tax)?;
    let econ = EconomicsSummary::new(breakdown, shares_from(&chosen), shares_from(&realized), realized[3], eq.transit_fare, None);
    Ok(vec![
        rep.csv("sim_cells.csv", &CELL_HEADER, &cell_rows(&stats))?,
        rep.json("sim_summary.json", &sim_summary(&stats, inst.ctx.travelers.len()))?,
        rep.json("economics.json", &econ)?,
    ])
}

fn equilibrium_run(
    cfg: &RunConfig,
    eq: &EquilibriumConfig,
    ctx: &EquilibriumContext,
    params: &SupplyParams,
    warm: Option<&AttributeStore>,
) -> Result<EquilibriumResult, CliError> {
    let mut budget = Deadline::after(cfg.optimize.eval_time_limit_s);
    Ok(run_to_equilibrium(params, ctx, eq, cfg.seed, warm, &mut budget)?)
}

fn trace_rows(r: &EquilibriumResult) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for rec in &r.trace {
        for m in Mode::ALL {
            rows.push(vec![
                rec.iteration.to_string(),
                m.name().to_string(),
                num(rec.chosen.get(m)),
                num(rec.realized.get(m)),
                rec.z.map(num).unwrap_or_default(),
            ]);
        }
    }
    rows
}

fn store_rows(s: &AttributeStore) -> Vec<Vec<String>> {
    s.entries
        .iter()
        .map(|(&(i, j, t), e)| vec![i.to_string(), j.to_string(), tier_name(t), num(e.ivtt), num(e.wait), num(e.service_rate)])
        .collect()
}

#[derive(Serialize)]
struct EquilibriumSummary<'a> {
    params: &'a SupplyParams,
    converged: bool,
    iterations: usize,
    last_z: Option<f64>,
    threshold: f64,
    clusters: usize,
    requests: usize,
}

/// The full choice and simulation loop at the configured supply.
pub fn equilibrium(cfg: &RunConfig, inst: &Instance, rep: &Reporter) -> Result<Vec<PathBuf>, CliError> {
    let r = equilibrium_run(cfg, &cfg.equilibrium, &inst.ctx, &cfg.supply, None)?;
    let summary = EquilibriumSummary {
        params: &r.params,
        converged: r.converged,
        iterations: r.iterations,
        last_z: r.last_z(),
        threshold: cfg.equilibrium.threshold,
        clusters: inst.clustering.k,
        requests: inst.ctx.travelers.len(),
    };
    Ok(vec![
        rep.csv("trace.csv", &["iteration", "mode", "chosen_share", "realized_share", "Z"], &trace_rows(&r))?,
        rep.csv("sim_cells.csv", &CELL_HEADER, &cell_rows(&r.stats))?,
        rep.csv("store.csv", &["cluster_i", "cluster_j", "tier", "ivtt_s", "wait_s", "service_rate"], &store_rows(&r.store))?,
        rep.json("sim_summary.json", &sim_summary(&r.stats, inst.ctx.travelers.len()))?,
        rep.json("economics.json", &r.economics)?,
        rep.json("summary.json", &summary)?,
    ])
}

/// Decision variables of the outer loop.
struct Space {
    names: Vec<&'static str>,
    bounds: Vec<(f64, f64)>,
    gamma: Option<[f64; 2]>,
}

impl Space {
    fn new(o: &OptimizeConfig, gamma: Option<[f64; 2]>) -> Self {
        let mut names = vec!["n1", "n4", "n10"];
        let mut bounds: Vec<(f64, f64)> = (0..3).map(|i| (o.fleet_min[i] as f64, o.fleet_max[i] as f64)).collect();
        if gamma.is_none() {
            names.extend(["gamma4", "gamma10"]);
            bounds.extend([(0.0, 1.0), (0.0, 1.0)]);
        }
        Self { names, bounds, gamma }
    }

    fn params(&self, x: &[f64]) -> SupplyParams {
        let n = |v: f64| v.round().max(0.0) as usize;
        let (g4, g10) = match self.gamma {
            Some([a, b]) => (a, b),
            None => (x[3], x[4]),
        };
        SupplyParams { n1: n(x[0]), n4: n(x[1]), n10: n(x[2]), gamma4: g4, gamma10: g10 }
    }
}

/// Result of one objective evaluation.
#[derive(Debug, Clone)]
struct EvalOutcome {
    params: SupplyParams,
    economics: Option<EconomicsSummary>,
    converged: Option<bool>,
}

struct Evaluator<'a> {
    cfg: &'a RunConfig,
    eq: EquilibriumConfig,
    ctx: &'a EquilibriumContext,
    space: Space,
    objective: Objective,
}

impl Evaluator<'_> {
    fn eval(&self, x: &[f64], warm: Option<&AttributeStore>) -> Result<(f64, EvalOutcome, Option<AttributeStore>), String> {
        let params = self.space.params(x);
        match self.objective {
            Objective::Synthetic => {
                let v = ProfitSurface::default().eval([params.n1 as f64, params.n4 as f64, params.n10 as f64]);
                Ok((v, EvalOutcome { params, economics: None, converged: None }, None))
            }
            Objective::Equilibrium => {
                let r = equilibrium_run(self.cfg, &self.eq, self.ctx, &params, warm).map_err(|e| e.to_string())?;
                let out = EvalOutcome { params, economics: Some(r.economics.clone()), converged: Some(r.converged) };
                Ok((r.profit(), out, Some(r.store)))
            }
        }
    }
}

struct OptimizeOutcome {
    result: SearchResult<String>,
    outcomes: Vec<Option<EvalOutcome>>,
    names: Vec<&'static str>,
}

impl OptimizeOutcome {
    fn best(&self) -> Option<(&Evaluation, &EvalOutcome)> {
        let e = self.result.best()?;
        self.outcomes[e.index].as_ref().map(|o| (e, o))
    }
}

/// Evaluates a fixed point list concurrently, keeping input order.
fn evaluate_all(ev: &Evaluator<'_>, points: &[Vec<f64>]) -> Vec<Result<(f64, EvalOutcome), String>> {
    points.par_iter().map(|x| ev.eval(x, None).map(|(y, o, _)| (y, o))).collect()
}

/// Replays a search whose points do not depend on earlier values: first
/// collects the points, then evaluates them in parallel, then feeds the
/// values back through the same search so its bookkeeping is unchanged.
fn replay<F>(ev: &Evaluator<'_>, search: F) -> Result<OptimizeOutcome, CliError>
where
    F: Fn(&mut dyn FnMut(&[f64]) -> Result<f64, String>) -> Result<SearchResult<String>, CliError>,
{
    let mut points = Vec::new();
    search(&mut |x: &[f64]| {
        points.push(x.to_vec());
        Ok(0.0)
    })?;
    let values = evaluate_all(ev, &points);
    let mut next = 0;
    let result = search(&mut |_: &[f64]| {
        let v = values[next].as_ref().map(|(y, _)| *y).map_err(Clone::clone);
        next += 1;
        v
    })?;
    let outcomes = values.into_iter().map(|v| v.ok().map(|(_, o)| o)).collect();
    Ok(OptimizeOutcome { result, outcomes, names: ev.space.names.clone() })
}

fn run_optimize(cfg: &RunConfig, eq: EquilibriumConfig, ctx: &EquilibriumContext) -> Result<OptimizeOutcome, CliError> {
    let o = &cfg.optimize;
    let gamma = match (o.method, o.objective) {
        (Method::Grid, _) | (_, Objective::Synthetic) => Some(o.fixed_gamma.unwrap_or([0.1, 0.2])),
        _ => o.fixed_gamma,
    };
    let ev = Evaluator { cfg, eq, ctx, space: Space::new(o, gamma), objective: o.objective };
    match o.method {
        Method::Bo => {
            let bo = BoConfig {
                bounds: ev.space.bounds.clone(),
                budget: o.budget,
                n_init: o.n_init,
                acquisition: o.acquisition,
                kappa: o.kappa,
                delta: o.delta,
                kernel: o.kernel,
                refit_lengthscale: o.refit_lengthscale,
                noise: o.noise,
                search: o.search,
                seed: cfg.seed,
            };
            let mut outcomes = Vec::new();
            let mut warm: Option<AttributeStore> = None;
            let result = bo_loop(
                |x: &[f64]| {
                    let store = if cfg.equilibrium.warm_start { warm.as_ref() } else { None };
                    match ev.eval(x, store) {
                        Ok((y, out, s)) => {
                            outcomes.push(Some(out));
                            warm = s.or(warm.take());
                            Ok(y)
                        }
                        Err(e) => {
                            outcomes.push(None);
                            Err(e)
                        }
                    }
                },
                &bo,
            )?;
            Ok(OptimizeOutcome { result, outcomes, names: ev.space.names.clone() })
        }
        Method::Random => {
            let bounds = ev.space.bounds.clone();
            replay(&ev, |f| Ok(random_search(f, &bounds, o.budget, cfg.seed)?))
        }
        Method::Grid => {
            let axes: Vec<Vec<f64>> = (0..3)
                .map(|i| (o.fleet_min[i]..=o.fleet_max[i]).step_by(o.grid_step).map(|v| v as f64).collect())
                .collect();
            replay(&ev, |f| Ok(grid_search(f, &axes)?))
        }
    }
}

fn opt_or_empty(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn write_optimize(out: &OptimizeOutcome, rep: &Reporter, prefix: &str, method: Method) -> Result<Vec<PathBuf>, CliError> {
    let mut header: Vec<String> = vec!["eval_index".into()];
    header.extend(out.names.iter().map(|n| format!("{n}_raw")));
    header.extend(out.names.iter().map(|n| format!("{n}_norm")));
    header.extend(["y", "kappa", "acquisition", "source"].map(String::from));
    let rows: Vec<Vec<String>> = out
        .result
        .history
        .iter()
        .map(|e| {
            let mut r = vec![e.index.to_string()];
            r.extend(e.x_raw.iter().map(|&v| num(v)));
            r.extend(e.x_norm.iter().map(|&v| num(v)));
            r.push(opt_or_empty(e.y));
            r.push(opt_or_empty(e.kappa));
            r.push(opt_or_empty(e.acquisition));
            r.push(format!("{:?}", e.source).to_lowercase());
            r
        })
        .collect();
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut files = vec![rep.csv(&format!("{prefix}history.csv"), &header_refs, &rows)?];

    let curve: Vec<Vec<String>> =
        out.result.best_so_far().iter().enumerate().map(|(i, b)| vec![i.to_string(), opt_or_empty(*b)]).collect();
    files.push(rep.csv(&format!("{prefix}best_so_far.csv"), &["eval_index", "best_y"], &curve)?);

    // Parallel-coordinates view: every variable over its maximum, with the
    // top fifth of successful evaluations flagged.
    let mut ys: Vec<f64> = out.result.history.iter().filter_map(|e| e.y).collect();
    ys.sort_by(|a, b| b.total_cmp(a));
    let cut = ys.get(ys.len().div_ceil(5).saturating_sub(1)).copied();
    let maxima: Vec<f64> = (0..out.names.len())
        .map(|i| out.result.history.iter().map(|e| e.x_raw[i].abs()).fold(0.0, f64::max))
        .collect();
    let mut pc_header: Vec<&str> = out.names.clone();
    pc_header.extend(["y", "top20"]);
    let pc: Vec<Vec<String>> = out
        .result
        .history
        .iter()
        .filter(|e| e.y.is_some())
        .map(|e| {
            let mut r: Vec<String> =
                e.x_raw.iter().zip(&maxima).map(|(&v, &m)| num(if m > 0.0 { v / m } else { 0.0 })).collect();
            r.push(opt_or_empty(e.y));
            r.push(u8::from(cut.is_some_and(|c| e.y.unwrap_or(f64::NEG_INFINITY) >= c)).to_string());
            r
        })
        .collect();
    files.push(rep.csv(&format!("{prefix}parallel.csv"), &pc_header, &pc)?);

    if method == Method::Grid {
        let mut sorted: Vec<&Vec<String>> = rows.iter().collect();
        let y_col = 1 + 2 * out.names.len();
        let y = |r: &Vec<String>| r[y_col].parse::<f64>().unwrap_or(f64::NEG_INFINITY);
        sorted.sort_by(|a, b| y(b).total_cmp(&y(a)).then(a[0].parse::<usize>().unwrap_or(0).cmp(&b[0].parse().unwrap_or(0))));
        let sorted: Vec<Vec<String>> = sorted.into_iter().cloned().collect();
        files.push(rep.csv(&format!("{prefix}grid.csv"), &header_refs, &sorted)?);
    }

    #[derive(Serialize)]
    struct Best<'a> {
        evaluations: usize,
        failures: usize,
        best_index: Option<usize>,
        best_y: Option<f64>,
        params: Option<&'a SupplyParams>,
        converged: Option<bool>,
        economics: Option<&'a EconomicsSummary>,
    }
    let best = out.best();
    let body = Best {
        evaluations: out.result.history.len(),
        failures: out.result.failures.len(),
        best_index: best.map(|(e, _)| e.index),
        best_y: best.and_then(|(e, _)| e.y),
        params: best.map(|(_, o)| &o.params),
        converged: best.and_then(|(_, o)| o.converged),
        economics: best.and_then(|(_, o)| o.economics.as_ref()),
    };
    files.push(rep.json(&format!("{prefix}best.json"), &body)?);
    Ok(files)
}

/// Outer-loop search over supply parameters.
pub fn optimize(cfg: &RunConfig, inst: &Instance, rep: &Reporter) -> Result<Vec<PathBuf>, CliError> {
    let out = run_optimize(cfg, cfg.equilibrium.clone(), &inst.ctx)?;
    write_optimize(&out, rep, "", cfg.optimize.method)
}

/// Transit constant sweep with a single large ride-hailing fleet.
pub fn calibrate_asc(cfg: &RunConfig, inst: &Instance, rep: &Reporter) -> Result<Vec<PathBuf>, CliError> {
    let c = &cfg.calibration;
    let params = SupplyParams { n1: c.fleet, n4: 0, n10: 0, gamma4: 0.0, gamma10: 0.0 };
    let runs: Vec<Result<(f64, f64), CliError>> = c
        .asc_grid
        .par_iter()
        .map(|&asc| {
            let mut eq = cfg.equilibrium.clone();
            eq.coefficients.asc.insert(Mode::Transit, asc);
            let r = equilibrium_run(cfg, &eq, &inst.ctx, &params, None)?;
            Ok((r.realized_share.get(Mode::Transit), r.chosen_share.get(Mode::Transit)))
        })
        .collect();
    let runs = runs.into_iter().collect::<Result<Vec<_>, _>>()?;
    let mut next = 0;
    let cal = calibrate_transit_asc((c.target[0], c.target[1]), &c.asc_grid, |_| {
        next += 1;
        Ok::<_, CliError>(runs[next - 1].0)
    })
    .map_err(|e| CliError::Config(e.to_string()))?;
    let rows: Vec<Vec<String>> = cal
        .table
        .iter()
        .zip(&runs)
        .map(|(&(asc, share), &(_, chosen))| {
            let hit = (c.target[0]..=c.target[1]).contains(&share);
            vec![num(asc), num(share), num(chosen), u8::from(hit).to_string()]
        })
        .collect();
    #[derive(Serialize)]
    struct Cal {
        asc: f64,
        within_target: bool,
        target: [f64; 2],
        fleet: usize,
    }
    Ok(vec![
        rep.csv("asc_table.csv", &["asc", "transit_share", "chosen_transit_share", "within_target"], &rows)?,
        rep.json("calibration.json", &Cal { asc: cal.asc, within_target: cal.within_target, target: c.target, fleet: c.fleet })?,
    ])
}

fn scenario_config(base: &EquilibriumConfig, scenario: u8, tax: f64) -> Result<EquilibriumConfig, CliError> {
    let mut eq = if scenario == 0 {
        EquilibriumConfig { discount_functions: BTreeMap::new(), ..base.clone() }
    } else {
        base.clone().with_scenario(scenario)?
    };
    if tax > 0.0 {
        eq.tax.per_ride.insert(Tier::One, tax);
    } else {
        eq.tax.per_ride.remove(&Tier::One);
    }
    Ok(eq)
}

fn economics_fields(e: Option<&EconomicsSummary>) -> Vec<String> {
    let Some(e) = e else { return vec![String::new(); 10] };
    let mut r = vec![num(e.profit), num(e.revenue), num(e.tax_collected), num(e.vmt_miles), num(e.pmt_per_vmt)];
    r.extend(Mode::ALL.iter().map(|&m| num(e.realized_share.get(m))));
    r.push(num(e.transit_revenue));
    r
}

const ECON_HEADER: [&str; 11] = [
    "profit",
    "revenue",
    "tax_collected",
    "vmt_miles",
    "pmt_per_vmt",
    "share_ride_hailing",
    "share_ridepooling",
    "share_micro_transit",
    "share_transit",
    "transit_revenue",
    "converged",
];

/// Discount-function scenarios and ride-hailing levies, optimized and/or
/// swept over discount multipliers at the configured fleets.
pub fn scenario(cfg: &RunConfig, inst: &Instance, rep: &Reporter) -> Result<Vec<PathBuf>, CliError> {
    let sc = &cfg.scenario;
    let mut files = Vec::new();
    let mut header = vec!["scenario", "tax", "n1", "n4", "n10", "gamma4", "gamma10"];
    header.extend(ECON_HEADER);
    if sc.optimize {
        let mut rows = Vec::new();
        for &s in &sc.scenarios {
            for &tax in &sc.taxes {
                let eq = scenario_config(&cfg.equilibrium, s, tax)?;
                let out = run_optimize(cfg, eq, &inst.ctx)?;
                files.extend(write_optimize(&out, rep, &format!("scenario{s}_tax{}_", num(tax)), cfg.optimize.method)?);
                let best = out.best();
                let mut r = vec![s.to_string(), num(tax)];
                match best {
                    Some((_, o)) => {
                        let p = o.params;
                        r.extend([p.n1.to_string(), p.n4.to_string(), p.n10.to_string(), num(p.gamma4), num(p.gamma10)]);
                    }
                    None => r.extend(vec![String::new(); 5]),
                }
                let econ = best.and_then(|(_, o)| o.economics.as_ref());
                r.extend(economics_fields(econ));
                r.push(best.and_then(|(_, o)| o.converged).map(|c| c.to_string()).unwrap_or_default());
                rows.push(r);
            }
        }
        files.push(rep.csv("scenario_comparison.csv", &header, &rows)?);
    }
    if !sc.multipliers.is_empty() {
        let mut header = vec!["scenario", "multiplier", "n1", "n4", "n10", "gamma4", "gamma10"];
        header.extend(ECON_HEADER);
        let jobs: Vec<(u8, f64)> =
            sc.scenarios.iter().flat_map(|&s| sc.multipliers.iter().map(move |&m| (s, m))).collect();
        let rows: Vec<Result<Vec<String>, CliError>> = jobs
            .par_iter()
            .map(|&(s, m)| {
                let eq = scenario_config(&cfg.equilibrium, s, 0.0)?;
                let p = SupplyParams {
                    gamma4: (cfg.supply.gamma4 * m).min(1.0),
                    gamma10: (cfg.supply.gamma10 * m).min(1.0),
                    ..cfg.supply
                };
                let r = equilibrium_run(cfg, &eq, &inst.ctx, &p, None)?;
                let mut row = vec![s.to_string(), num(m), p.n1.to_string(), p.n4.to_string(), p.n10.to_string(), num(p.gamma4), num(p.gamma10)];
                row.extend(economics_fields(Some(&r.economics)));
                row.push(r.converged.to_string());
                Ok(row)
            })
            .collect();
        let rows = rows.into_iter().collect::<Result<Vec<_>, _>>()?;
        files.push(rep.csv("multiplier_sweep.csv", &header, &rows)?);
    }
    Ok(files)
}
