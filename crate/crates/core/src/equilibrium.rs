//! Day-to-day loop between mode choice and fleet simulation.
//!
//! Each iteration travelers choose modes from remembered level-of-service
//! attributes, the chosen MoD requests are simulated, and the remembered
//! attributes move toward what the simulation produced. The loop stops when
//! mode shares stop moving.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::Rng;
use thiserror::Error;

use crate::budget::Budget;
use crate::choice::{
    blended_utility, choice_probabilities, discount_penalty, draw_mode_at, utility, ChoiceCoefficients, ChoiceError,
    DiscountFunctionParams, Mode, ModeAttributes, ModeShareVector,
};
use crate::economics::{consumer_surplus, profit_breakdown, CostModel, EconomicsError, EconomicsSummary, TaxPolicy};
use crate::fleetsim::{fare, run_period, FleetSpec, SimConfig, SimStats, Tier, TripRequest};
use crate::netgraph::{
    transit_tree, CombinedGraph, GraphError, NodeIx, RoadGraph, TransitAttributes, TravelTimeTable, METERS_PER_MILE,
};
use crate::rng::{stream, tags};
use crate::solver::SolverError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EquilibriumError {
    #[error("no road path for demand pair {origin}->{destination}")]
    MissingOD { origin: NodeIx, destination: NodeIx },
    #[error("no transit itinerary for demand pair {origin}->{destination}")]
    NoTransitPath { origin: NodeIx, destination: NodeIx },
    #[error("share vectors cover different modes")]
    ModeSetMismatch,
    #[error("invalid supply parameters: {0}")]
    InvalidParams(&'static str),
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
    #[error(transparent)]
    Choice(#[from] ChoiceError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Economics(#[from] EconomicsError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// The operator's decision variables.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SupplyParams {
    pub n1: usize,
    pub n4: usize,
    pub n10: usize,
    pub gamma4: f64,
    pub gamma10: f64,
}

/// A small mixed fleet sized for the default synthetic city.
impl Default for SupplyParams {
    fn default() -> Self {
        Self { n1: 60, n4: 30, n10: 15, gamma4: 0.2, gamma10: 0.4 }
    }
}

impl SupplyParams {
    pub fn validate(&self) -> Result<(), EquilibriumError> {
        if !(0.0..=1.0).contains(&self.gamma4) || !(0.0..=1.0).contains(&self.gamma10) {
            return Err(EquilibriumError::InvalidParams("discounts must be in [0, 1]"));
        }
        Ok(())
    }

    pub fn fleet_sizes(&self) -> [usize; 3] {
        [self.n1, self.n4, self.n10]
    }

    /// Fare discount of a tier; ride-hailing is never discounted.
    pub fn gamma(&self, tier: Tier) -> f64 {
        match tier {
            Tier::One => 0.0,
            Tier::Four => self.gamma4,
            Tier::Ten => self.gamma10,
        }
    }

    pub fn fleets(&self) -> Vec<FleetSpec> {
        Tier::ALL
            .iter()
            .map(|&tier| FleetSpec { tier, size: self.fleet_sizes()[tier.index()], discount: self.gamma(tier) })
            .collect()
    }
}

/// Remembered level of service of one (origin zone, destination zone, tier).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CellAttributes {
    /// Seconds.
    pub ivtt: f64,
    /// Seconds.
    pub wait: f64,
    pub service_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AttributeStore {
    pub entries: BTreeMap<(usize, usize, Tier), CellAttributes>,
    /// Updates applied so far.
    pub iteration: usize,
}

impl AttributeStore {
    pub fn get(&self, from: usize, to: usize, tier: Tier) -> Option<&CellAttributes> {
        self.entries.get(&(from, to, tier))
    }
}

const IVTT_FACTOR: [f64; 3] = [1.0, 1.2, 1.5];
const WAIT_FACTOR: [f64; 3] = [0.3, 0.36, 0.45];

fn initial_entry(direct_s: f64, max_wait: f64, tier: Tier) -> CellAttributes {
    CellAttributes {
        ivtt: IVTT_FACTOR[tier.index()] * direct_s,
        wait: WAIT_FACTOR[tier.index()] * max_wait,
        service_rate: 1.0,
    }
}

/// Starting attributes: in-vehicle time a fixed multiple of the direct time
/// (1, 1.2, 1.5 by tier) averaged over the cell's demand pairs, waits a fixed
/// fraction of Ω (0.3, 0.36, 0.45), full service.
pub fn init_attributes(
    ods: &[(NodeIx, NodeIx)],
    clusters: &[usize],
    max_wait: f64,
    times: &TravelTimeTable,
) -> Result<AttributeStore, EquilibriumError> {
    let mut sums: BTreeMap<(usize, usize), (f64, usize)> = BTreeMap::new();
    for &(o, d) in ods {
        let t = times.get(o, d).filter(|t| t.is_finite() && o != d);
        let (Some(t), Some(&ci), Some(&cj)) = (t, clusters.get(o), clusters.get(d)) else {
            return Err(EquilibriumError::MissingOD { origin: o, destination: d });
        };
        let e = sums.entry((ci, cj)).or_default();
        e.0 += t;
        e.1 += 1;
    }
    let mut entries = BTreeMap::new();
    for ((ci, cj), (sum, n)) in sums {
        for tier in Tier::ALL {
            entries.insert((ci, cj, tier), initial_entry(sum / n as f64, max_wait, tier));
        }
    }
    Ok(AttributeStore { entries, iteration: 0 })
}

/// `β·H + (1 − β)·I`, componentwise.
pub fn update_attributes(h: &CellAttributes, i: &CellAttributes, beta: f64) -> CellAttributes {
    let mix = |a: f64, b: f64| beta * a + (1.0 - beta) * b;
    CellAttributes {
        ivtt: mix(h.ivtt, i.ivtt),
        wait: mix(h.wait, i.wait),
        service_rate: mix(h.service_rate, i.service_rate),
    }
}

/// Mean absolute share change over the modes.
pub fn stopping_metric(shares: &ModeShareVector, prev: &ModeShareVector) -> Result<f64, EquilibriumError> {
    if shares.share.len() != prev.share.len() || shares.modes().zip(prev.modes()).any(|(a, b)| a != b) {
        return Err(EquilibriumError::ModeSetMismatch);
    }
    if shares.share.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = shares.share.iter().map(|(m, s)| (s - prev.get(*m)).abs()).sum();
    Ok(sum / shares.share.len() as f64)
}

/// How the uniforms behind each traveler's mode draw are generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum DrawScheme {
    /// Fresh uniforms every iteration.
    Independent,
    /// The same uniform for a traveler in every iteration, so shares only
    /// move when probabilities do. With fresh uniforms the sampling noise of
    /// a few hundred travelers alone keeps Z near 0.02.
    #[default]
    Common,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct EquilibriumConfig {
    pub coefficients: ChoiceCoefficients,
    /// Extra disutility of discounted shared tiers; absent tiers get none.
    pub discount_functions: BTreeMap<Tier, DiscountFunctionParams>,
    /// c_m, weight of the transit fallback for unserved requests.
    pub penalty_multiplier: f64,
    /// β, weight of the remembered attributes in each update.
    pub memory: f64,
    pub threshold: f64,
    pub max_iterations: usize,
    /// Whether the transit utility mixed into MoD utilities keeps its constant.
    pub blend_includes_asc: bool,
    pub draw_scheme: DrawScheme,
    /// Reuse the previous evaluation's attributes when the caller has them.
    pub warm_start: bool,
    pub sim: SimConfig,
    pub cost: CostModel,
    pub tax: TaxPolicy,
    /// Per transit rider, for the agency revenue figure.
    pub transit_fare: f64,
}

impl Default for EquilibriumConfig {
    fn default() -> Self {
        Self {
            coefficients: ChoiceCoefficients::default(),
            discount_functions: BTreeMap::new(),
            penalty_multiplier: 2.0,
            memory: 0.5,
            threshold: 0.01,
            max_iterations: 20,
            blend_includes_asc: true,
            draw_scheme: DrawScheme::default(),
            warm_start: false,
            sim: SimConfig::default(),
            cost: CostModel::default(),
            tax: TaxPolicy::default(),
            transit_fare: 2.75,
        }
    }
}

impl EquilibriumConfig {
    /// Uses the (ridepooling, micro-transit) discount functions of a
    /// numbered scenario.
    pub fn with_scenario(mut self, n: u8) -> Result<Self, EquilibriumError> {
        let (pool, micro) = DiscountFunctionParams::scenario(n).ok_or(EquilibriumError::InvalidConfig("unknown scenario"))?;
        self.discount_functions = BTreeMap::from([(Tier::Four, pool), (Tier::Ten, micro)]);
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), EquilibriumError> {
        self.coefficients.validate()?;
        self.cost.validate()?;
        self.tax.validate()?;
        if !(0.0..=1.0).contains(&self.memory) {
            return Err(EquilibriumError::InvalidConfig("memory must be in [0, 1]"));
        }
        if !(self.threshold >= 0.0) || self.max_iterations == 0 {
            return Err(EquilibriumError::InvalidConfig("threshold must be >= 0 and max_iterations > 0"));
        }
        if !(self.penalty_multiplier >= 0.0 && self.penalty_multiplier.is_finite()) {
            return Err(EquilibriumError::InvalidConfig("penalty multiplier must be >= 0"));
        }
        if !(self.sim.epoch > 0.0) {
            return Err(EquilibriumError::InvalidConfig("epoch must be positive"));
        }
        Ok(())
    }
}

/// One traveler of the fixed daily demand.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Traveler {
    pub id: u64,
    pub origin: NodeIx,
    pub destination: NodeIx,
    pub request_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct TravelerInfo {
    cell: (usize, usize),
    direct_s: f64,
    direct_mi: f64,
    transit: TransitAttributes,
}

/// Everything about the network and demand that stays fixed across
/// iterations and evaluations.
#[derive(Debug, Clone)]
pub struct EquilibriumContext {
    pub times: TravelTimeTable,
    pub clusters: Vec<usize>,
    pub travelers: Vec<Traveler>,
    info: Vec<TravelerInfo>,
}

impl EquilibriumContext {
    /// Computes road travel times and transit itineraries for the demand.
    pub fn new(
        road: &RoadGraph,
        combined: &CombinedGraph,
        clusters: Vec<usize>,
        travelers: Vec<Traveler>,
    ) -> Result<Self, EquilibriumError> {
        let times = TravelTimeTable::full(road);
        let mut trees: BTreeMap<NodeIx, Vec<Option<TransitAttributes>>> = BTreeMap::new();
        for t in &travelers {
            if let alloc::collections::btree_map::Entry::Vacant(e) = trees.entry(t.origin) {
                e.insert(transit_tree(combined, t.origin)?);
            }
        }
        let transit = travelers
            .iter()
            .map(|t| {
                trees[&t.origin]
                    .get(t.destination)
                    .copied()
                    .flatten()
                    .ok_or(EquilibriumError::NoTransitPath { origin: t.origin, destination: t.destination })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_parts(times, clusters, travelers, transit)
    }

    /// Uses precomputed transit attributes, one per traveler.
    pub fn from_parts(
        times: TravelTimeTable,
        clusters: Vec<usize>,
        travelers: Vec<Traveler>,
        transit: Vec<TransitAttributes>,
    ) -> Result<Self, EquilibriumError> {
        if transit.len() != travelers.len() {
            return Err(EquilibriumError::InvalidConfig("one transit itinerary per traveler is required"));
        }
        let mut info = Vec::with_capacity(travelers.len());
        for (t, tr) in travelers.iter().zip(transit) {
            let missing = EquilibriumError::MissingOD { origin: t.origin, destination: t.destination };
            let direct_s = times.get(t.origin, t.destination).filter(|x| x.is_finite() && t.origin != t.destination);
            let (Some(direct_s), Some(&ci), Some(&cj)) = (direct_s, clusters.get(t.origin), clusters.get(t.destination))
            else {
                return Err(missing);
            };
            let direct_mi = times.length(t.origin, t.destination) / METERS_PER_MILE;
            info.push(TravelerInfo { cell: (ci, cj), direct_s, direct_mi, transit: tr });
        }
        Ok(Self { times, clusters, travelers, info })
    }

    pub fn ods(&self) -> Vec<(NodeIx, NodeIx)> {
        self.travelers.iter().map(|t| (t.origin, t.destination)).collect()
    }

    pub fn initial_store(&self, cfg: &EquilibriumConfig) -> Result<AttributeStore, EquilibriumError> {
        init_attributes(&self.ods(), &self.clusters, cfg.sim.constraints.max_wait, &self.times)
    }
}

/// Outcome of one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct DayResult {
    /// Shares of the modes drawn.
    pub chosen: ModeShareVector,
    /// Shares after unserved MoD requests moved to transit.
    pub realized: ModeShareVector,
    pub stats: SimStats,
    pub transit_riders: usize,
    pub consumer_surplus: f64,
}

fn share_vector(counts: &[usize; 4]) -> ModeShareVector {
    let map: BTreeMap<Mode, usize> = Mode::ALL.iter().zip(counts).map(|(&m, &c)| (m, c)).collect();
    ModeShareVector::from_counts(&map)
}

fn mode_index(m: Mode) -> usize {
    Mode::ALL.iter().position(|&x| x == m).expect("known mode")
}

/// One choice, simulate, update round. `iteration` picks the random stream
/// of the draws.
pub fn iterate_day(
    store: &AttributeStore,
    params: &SupplyParams,
    ctx: &EquilibriumContext,
    cfg: &EquilibriumConfig,
    seed: u64,
    iteration: usize,
    budget: &mut dyn Budget,
) -> Result<(DayResult, AttributeStore), EquilibriumError> {
    params.validate()?;
    let coef = &cfg.coefficients;
    let asc_transit = coef.asc(Mode::Transit)?;
    let max_wait = cfg.sim.constraints.max_wait;
    let mut draws = match cfg.draw_scheme {
        DrawScheme::Independent => stream(seed, tags::CHOICE_BASE + iteration as u64),
        DrawScheme::Common => stream(seed, tags::COMMON_DRAWS),
    };

    let mut chosen = [0usize; 4];
    let mut requests = Vec::new();
    let mut surplus_utils: Vec<[f64; 4]> = Vec::with_capacity(ctx.travelers.len());
    let mut utilities = BTreeMap::new();
    for (t, info) in ctx.travelers.iter().zip(&ctx.info) {
        let tr = &info.transit;
        let transit_attrs =
            ModeAttributes { ovtt: tr.ovtt / 60.0, ivtt: tr.ivtt / 60.0, cost: tr.fare, ..Default::default() };
        let u_transit = utility(&transit_attrs, coef, Mode::Transit, 0.0)?;
        let u_fallback = if cfg.blend_includes_asc { u_transit } else { u_transit - asc_transit };
        utilities.clear();
        for tier in Tier::ALL {
            let (ci, cj) = info.cell;
            let h = store.get(ci, cj, tier).copied().unwrap_or_else(|| initial_entry(info.direct_s, max_wait, tier));
            let gamma = params.gamma(tier);
            let attrs = ModeAttributes {
                ovtt: h.wait / 60.0,
                ivtt: h.ivtt / 60.0,
                cost: fare(info.direct_s, info.direct_mi, &cfg.sim.fares, gamma) + cfg.tax.surcharge(tier),
                ..Default::default()
            };
            let penalty = cfg.discount_functions.get(&tier).map_or(0.0, |p| discount_penalty(gamma, p));
            let u = utility(&attrs, coef, tier.mode(), penalty)?;
            utilities.insert(tier.mode(), blended_utility(u, u_fallback, h.service_rate, cfg.penalty_multiplier));
        }
        utilities.insert(Mode::Transit, u_transit);
        let probs = choice_probabilities(&utilities)?;
        let mut row = [0.0; 4];
        for (i, m) in Mode::ALL.iter().enumerate() {
            row[i] = utilities[m];
        }
        surplus_utils.push(row);
        let mode = draw_mode_at(&probs, draws.gen::<f64>());
        chosen[mode_index(mode)] += 1;
        if let Some(tier) = Tier::from_mode(mode) {
            requests.push(TripRequest {
                id: t.id,
                origin: t.origin,
                destination: t.destination,
                request_time: t.request_time,
                tier,
                earliest_arrival: t.request_time + info.direct_s,
            });
        }
    }

    let stats = run_period(&requests, &params.fleets(), &ctx.times, &ctx.clusters, &cfg.sim, seed, budget)?;

    let mut realized = [0usize; 4];
    realized[mode_index(Mode::Transit)] = chosen[mode_index(Mode::Transit)];
    for o in &stats.outcomes {
        let m = if o.served { o.tier.mode() } else { Mode::Transit };
        realized[mode_index(m)] += 1;
    }

    let mut next = store.clone();
    next.iteration += 1;
    for (&(ci, cj, tier), h) in next.entries.iter_mut() {
        let observed = match stats.cells.get(&(ci, cj, tier)) {
            Some(c) if c.served > 0 => CellAttributes { ivtt: c.mean_ivtt, wait: c.mean_wait, service_rate: c.service_rate() },
            Some(c) => CellAttributes { service_rate: c.service_rate(), ..*h },
            None => CellAttributes { service_rate: 1.0, ..*h },
        };
        *h = update_attributes(h, &observed, cfg.memory);
    }

    let day = DayResult {
        chosen: share_vector(&chosen),
        realized: share_vector(&realized),
        transit_riders: realized[mode_index(Mode::Transit)],
        consumer_surplus: consumer_surplus(surplus_utils.iter().map(|r| &r[..]), coef.beta_cost),
        stats,
    };
    Ok((day, next))
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IterationRecord {
    /// 1-based.
    pub iteration: usize,
    pub chosen: ModeShareVector,
    pub realized: ModeShareVector,
    /// Absent for the first iteration.
    pub z: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumResult {
    pub params: SupplyParams,
    pub chosen_share: ModeShareVector,
    pub realized_share: ModeShareVector,
    pub trace: Vec<IterationRecord>,
    pub iterations: usize,
    pub converged: bool,
    pub stats: SimStats,
    pub economics: EconomicsSummary,
    pub store: AttributeStore,
}

impl EquilibriumResult {
    pub fn last_z(&self) -> Option<f64> {
        self.trace.last().and_then(|r| r.z)
    }

    pub fn profit(&self) -> f64 {
        self.economics.profit
    }
}

/// Iterates until the share change falls below the threshold or the
/// iteration cap is hit. `warm` replaces the initial attributes when
/// `cfg.warm_start` is set.
pub fn run_to_equilibrium(
    params: &SupplyParams,
    ctx: &EquilibriumContext,
    cfg: &EquilibriumConfig,
    seed: u64,
    warm: Option<&AttributeStore>,
    budget: &mut dyn Budget,
) -> Result<EquilibriumResult, EquilibriumError> {
    cfg.validate()?;
    params.validate()?;
    let mut store = match warm {
        Some(s) if cfg.warm_start => s.clone(),
        _ => ctx.initial_store(cfg)?,
    };
    let mut trace: Vec<IterationRecord> = Vec::new();
    let mut converged = false;
    let mut last = None;
    for n in 0..cfg.max_iterations {
        let (day, next) = iterate_day(&store, params, ctx, cfg, seed, n, budget)?;
        store = next;
        let z = match trace.last() {
            Some(prev) => Some(stopping_metric(&day.chosen, &prev.chosen)?),
            None => None,
        };
        trace.push(IterationRecord { iteration: n + 1, chosen: day.chosen.clone(), realized: day.realized.clone(), z });
        last = Some(day);
        if z.is_some_and(|z| z < cfg.threshold) {
            converged = true;
            break;
        }
    }
    let day = last.expect("at least one iteration");
    let breakdown = profit_breakdown(&day.stats, params.fleet_sizes(), &cfg.cost, &cfg.tax)?;
    let economics = EconomicsSummary::new(
        breakdown,
        day.chosen.clone(),
        day.realized.clone(),
        day.transit_riders,
        cfg.transit_fare,
        Some(day.consumer_surplus),
    );
    Ok(EquilibriumResult {
        params: *params,
        chosen_share: day.chosen,
        realized_share: day.realized,
        iterations: trace.len(),
        trace,
        converged,
        stats: day.stats,
        economics,
        store,
    })
}
