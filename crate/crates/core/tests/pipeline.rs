//! End to end through the public API: synthetic city, zones, transit
//! itineraries, the choice/simulation loop and the operator's books.

use modsim_core::budget::Unlimited;
use modsim_core::choice::Mode;
use modsim_core::equilibrium::{
    iterate_day, run_to_equilibrium, EquilibriumConfig, EquilibriumContext, EquilibriumResult, SupplyParams,
};
use modsim_core::fleetsim::Tier;
use modsim_core::netgraph::{build_combined_network, cluster_nodes, TransitAccessConfig};
use modsim_core::synthetic::{random_demand, GridCity};

fn context(requests: usize, seed: u64) -> EquilibriumContext {
    let city = GridCity { rows: 6, cols: 6, transit_rows: [1, 4], transit_cols: [1, 4], ..GridCity::default() };
    let road = city.road().unwrap();
    let combined = build_combined_network(&road, &city.transit().unwrap(), TransitAccessConfig::default()).unwrap();
    let clusters = cluster_nodes(&road, 0.5, None, seed).unwrap().assignment;
    EquilibriumContext::new(&road, &combined, clusters, random_demand(road.node_count(), requests, 1200.0, seed)).unwrap()
}

fn run(ctx: &EquilibriumContext, params: &SupplyParams, cfg: &EquilibriumConfig, seed: u64) -> EquilibriumResult {
    run_to_equilibrium(params, ctx, cfg, seed, None, &mut Unlimited).unwrap()
}

const FLEET: SupplyParams = SupplyParams { n1: 12, n4: 6, n10: 3, gamma4: 0.2, gamma10: 0.4 };

#[test]
fn books_and_shares_reconcile() {
    let ctx = context(150, 3);
    let r = run(&ctx, &FLEET, &EquilibriumConfig::default(), 3);
    assert!((r.chosen_share.total() - 1.0).abs() < 1e-12);
    assert!((r.realized_share.total() - 1.0).abs() < 1e-12);
    assert_eq!(r.trace.len(), r.iterations);
    assert!(r.trace[0].z.is_none() && r.trace[1..].iter().all(|t| t.z.is_some()));

    let e = &r.economics;
    let by_tier: f64 = e.breakdown.tiers.values().map(|t| t.profit()).sum();
    assert!((e.profit - by_tier).abs() < 1e-9);
    assert!((e.profit - r.profit()).abs() < 1e-12);
    let mut served = 0;
    for t in Tier::ALL {
        let s = r.stats.tier(t);
        assert_eq!(s.served + s.unserved, s.requested);
        assert_eq!(e.breakdown.tiers[&t].served, s.served);
        served += s.served;
    }
    // Every traveler either rode an MoD vehicle or ended up on transit.
    assert_eq!(served + e.transit_riders, 150);
    assert!((e.share(Mode::Transit) - e.transit_riders as f64 / 150.0).abs() < 1e-12);
    assert_eq!(r.stats.violations.total(), 0);
    assert!(e.consumer_surplus.is_some_and(f64::is_finite));
}

#[test]
fn reruns_are_identical() {
    let ctx = context(120, 8);
    let cfg = EquilibriumConfig::default();
    let a = run(&ctx, &FLEET, &cfg, 8);
    let b = run(&ctx, &FLEET, &cfg, 8);
    assert_eq!(a.trace, b.trace);
    assert_eq!(a.store, b.store);
    assert_eq!(a.economics, b.economics);
}

#[test]
fn no_fleet_means_everyone_rides_transit_at_no_cost() {
    let ctx = context(80, 2);
    let none = SupplyParams { n1: 0, n4: 0, n10: 0, gamma4: 0.0, gamma10: 0.0 };
    let r = run(&ctx, &none, &EquilibriumConfig::default(), 2);
    assert_eq!(r.realized_share.get(Mode::Transit), 1.0);
    assert_eq!(r.profit(), 0.0);
    assert_eq!(r.economics.transit_riders, 80);
}

#[test]
fn first_day_matches_iterating_by_hand() {
    let ctx = context(100, 5);
    let cfg = EquilibriumConfig::default();
    let store = ctx.initial_store(&cfg).unwrap();
    let (day, next) = iterate_day(&store, &FLEET, &ctx, &cfg, 5, 0, &mut Unlimited).unwrap();
    let r = run(&ctx, &FLEET, &cfg, 5);
    assert_eq!(r.trace[0].chosen, day.chosen);
    assert_eq!(r.trace[0].realized, day.realized);
    assert_eq!(next.iteration, store.iteration + 1);
}

#[test]
fn warm_start_is_opt_in() {
    let ctx = context(100, 6);
    let cold = EquilibriumConfig::default();
    let first = run(&ctx, &FLEET, &cold, 6);
    // Without the flag a supplied store is ignored.
    let ignored = run_to_equilibrium(&FLEET, &ctx, &cold, 6, Some(&first.store), &mut Unlimited).unwrap();
    assert_eq!(ignored.trace, first.trace);
    let warm = EquilibriumConfig { warm_start: true, ..cold };
    let started = run_to_equilibrium(&FLEET, &ctx, &warm, 6, Some(&first.store), &mut Unlimited).unwrap();
    assert!(started.iterations >= 2);
    assert!(started.trace[0].chosen.total() > 0.0);
}

#[test]
fn a_ride_hailing_levy_only_moves_money_when_absorbed() {
    let ctx = context(120, 4);
    let base = EquilibriumConfig::default();
    let mut taxed = base.clone();
    taxed.tax.per_ride.insert(Tier::One, 2.0);
    let a = run(&ctx, &FLEET, &base, 4);
    let b = run(&ctx, &FLEET, &taxed, 4);
    let served = a.stats.tier(Tier::One).served as f64;
    assert_eq!(a.trace, b.trace);
    assert!((a.profit() - b.profit() - 2.0 * served).abs() < 1e-9);
    assert!((b.economics.tax_collected - 2.0 * served).abs() < 1e-12);
}
