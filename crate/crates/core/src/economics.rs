//! Operator profit, traveler surplus and policy levers.

use alloc::collections::BTreeMap;

use thiserror::Error;

use crate::choice::{Mode, ModeShareVector};
use crate::fleetsim::{SimStats, Tier};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EconomicsError {
    #[error("no statistics for tier {0}")]
    MissingTierStats(Tier),
    #[error("no cost entry for tier {0}")]
    MissingTierCost(Tier),
    #[error("invalid economics input: {0}")]
    Invalid(&'static str),
}

/// Daily and per-mile costs of one tier's vehicles.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct TierCost {
    /// Per vehicle per day.
    pub leasing_per_day: f64,
    /// Per vehicle per hour of the period.
    pub salary_per_hour: f64,
    pub operating_per_mile: f64,
}

/// Operator costs. Leasing is scaled to the period by the fraction of daily
/// demand it carries; salary is paid for `period_hours`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct CostModel {
    pub tiers: BTreeMap<Tier, TierCost>,
    pub demand_fraction: f64,
    pub period_hours: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        let sedan = TierCost { leasing_per_day: 11.97, salary_per_hour: 17.0, operating_per_mile: 0.1473 };
        let van = TierCost { leasing_per_day: 19.32, ..sedan };
        Self {
            tiers: BTreeMap::from([(Tier::One, sedan), (Tier::Four, sedan), (Tier::Ten, van)]),
            demand_fraction: 0.0594,
            period_hours: 1.0,
        }
    }
}

impl CostModel {
    pub fn validate(&self) -> Result<(), EconomicsError> {
        let ok = |x: f64| x.is_finite() && x >= 0.0;
        if !ok(self.demand_fraction) || !ok(self.period_hours) {
            return Err(EconomicsError::Invalid("period normalization must be non-negative"));
        }
        for c in self.tiers.values() {
            if !(ok(c.leasing_per_day) && ok(c.salary_per_hour) && ok(c.operating_per_mile)) {
                return Err(EconomicsError::Invalid("costs must be non-negative"));
            }
        }
        Ok(())
    }

    fn tier(&self, tier: Tier) -> Result<&TierCost, EconomicsError> {
        self.tiers.get(&tier).ok_or(EconomicsError::MissingTierCost(tier))
    }

    pub fn period_leasing(&self, tier: Tier) -> Result<f64, EconomicsError> {
        Ok(self.tier(tier)?.leasing_per_day * self.demand_fraction)
    }

    pub fn period_salary(&self, tier: Tier) -> Result<f64, EconomicsError> {
        Ok(self.tier(tier)?.salary_per_hour * self.period_hours)
    }
}

/// Per-ride levy on served MoD trips. `pass_through` is the fraction the
/// traveler pays on top of the fare; the rest is absorbed by the operator.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct TaxPolicy {
    pub per_ride: BTreeMap<Tier, f64>,
    pub pass_through: f64,
}

impl TaxPolicy {
    pub fn levy(&self, tier: Tier) -> f64 {
        self.per_ride.get(&tier).copied().unwrap_or(0.0)
    }

    /// Amount added to the traveler's fare.
    pub fn surcharge(&self, tier: Tier) -> f64 {
        self.pass_through * self.levy(tier)
    }

    pub fn validate(&self) -> Result<(), EconomicsError> {
        if !(0.0..=1.0).contains(&self.pass_through) {
            return Err(EconomicsError::Invalid("pass-through must be in [0, 1]"));
        }
        if self.per_ride.values().any(|&x| !(x.is_finite() && x >= 0.0)) {
            return Err(EconomicsError::Invalid("levies must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TierProfit {
    pub fleet_size: usize,
    pub served: usize,
    /// Fares plus any passed-through levy.
    pub revenue: f64,
    pub leasing: f64,
    pub salary: f64,
    pub operating: f64,
    pub tax: f64,
    pub vmt_miles: f64,
    pub pmt_miles: f64,
}

impl TierProfit {
    pub fn profit(&self) -> f64 {
        self.revenue - self.leasing - self.salary - self.operating - self.tax
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProfitBreakdown {
    pub tiers: BTreeMap<Tier, TierProfit>,
    pub profit: f64,
}

impl ProfitBreakdown {
    pub fn revenue(&self) -> f64 {
        self.tiers.values().map(|t| t.revenue).sum()
    }

    pub fn tax(&self) -> f64 {
        self.tiers.values().map(|t| t.tax).sum()
    }

    pub fn vmt_miles(&self) -> f64 {
        self.tiers.values().map(|t| t.vmt_miles).sum()
    }

    pub fn pmt_miles(&self) -> f64 {
        self.tiers.values().map(|t| t.pmt_miles).sum()
    }
}

/// Fares collected minus fleet, operating and tax costs, per tier and total.
/// `fleet_sizes` is indexed by [`Tier::index`].
pub fn profit_breakdown(
    stats: &SimStats,
    fleet_sizes: [usize; 3],
    cost: &CostModel,
    tax: &TaxPolicy,
) -> Result<ProfitBreakdown, EconomicsError> {
    let mut out = ProfitBreakdown::default();
    for tier in Tier::ALL {
        let n = fleet_sizes[tier.index()];
        let st = match stats.tiers.get(&tier) {
            Some(s) => *s,
            None if n == 0 => Default::default(),
            None => return Err(EconomicsError::MissingTierStats(tier)),
        };
        let levy = tax.levy(tier);
        let t = TierProfit {
            fleet_size: n,
            served: st.served,
            revenue: st.revenue + tax.surcharge(tier) * st.served as f64,
            leasing: cost.period_leasing(tier)? * n as f64,
            salary: cost.period_salary(tier)? * n as f64,
            operating: cost.tier(tier)?.operating_per_mile * st.vmt_miles,
            tax: levy * st.served as f64,
            vmt_miles: st.vmt_miles,
            pmt_miles: st.pmt_miles,
        };
        out.profit += t.profit();
        out.tiers.insert(tier, t);
    }
    Ok(out)
}

pub fn profit(stats: &SimStats, fleet_sizes: [usize; 3], cost: &CostModel, tax: &TaxPolicy) -> Result<f64, EconomicsError> {
    profit_breakdown(stats, fleet_sizes, cost, tax).map(|b| b.profit)
}

/// `ln Σ exp(u)` without overflow; `-inf` for an empty set.
pub fn logsum<I: IntoIterator<Item = f64>>(utilities: I) -> f64 {
    let us: alloc::vec::Vec<f64> = utilities.into_iter().collect();
    let max = us.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + libm::log(us.iter().map(|u| libm::exp(u - max)).sum::<f64>())
}

/// Expected maximum utility of each traveler, summed and converted to
/// currency with the cost coefficient.
pub fn consumer_surplus<'a, I>(per_traveler: I, beta_cost: f64) -> f64
where
    I: IntoIterator<Item = &'a [f64]>,
{
    per_traveler.into_iter().map(|u| logsum(u.iter().copied())).sum::<f64>() / beta_cost.abs()
}

/// The headline numbers of one equilibrium.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EconomicsSummary {
    pub profit: f64,
    pub revenue: f64,
    pub tax_collected: f64,
    pub vmt_miles: f64,
    pub pmt_per_vmt: f64,
    pub breakdown: ProfitBreakdown,
    pub chosen_share: ModeShareVector,
    pub realized_share: ModeShareVector,
    pub transit_riders: usize,
    /// Riders times the configured transit fare.
    pub transit_revenue: f64,
    /// Absent when modes were not chosen from utilities.
    pub consumer_surplus: Option<f64>,
}

impl EconomicsSummary {
    pub fn new(
        breakdown: ProfitBreakdown,
        chosen_share: ModeShareVector,
        realized_share: ModeShareVector,
        transit_riders: usize,
        transit_fare: f64,
        consumer_surplus: Option<f64>,
    ) -> Self {
        let vmt = breakdown.vmt_miles();
        Self {
            profit: breakdown.profit,
            revenue: breakdown.revenue(),
            tax_collected: breakdown.tax(),
            vmt_miles: vmt,
            pmt_per_vmt: if vmt > 0.0 { breakdown.pmt_miles() / vmt } else { 0.0 },
            breakdown,
            chosen_share,
            realized_share,
            transit_riders,
            transit_revenue: transit_riders as f64 * transit_fare,
            consumer_surplus,
        }
    }

    pub fn share(&self, mode: Mode) -> f64 {
        self.realized_share.get(mode)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fleetsim::TierStats;

    fn one_vehicle_stats() -> SimStats {
        let mut s = SimStats::default();
        s.tiers.insert(
            Tier::One,
            TierStats { fleet_size: 1, requested: 1, served: 1, vmt_miles: 10.0, pmt_miles: 2.0, revenue: 9.55, ..Default::default() },
        );
        s
    }

    #[test]
    fn single_vehicle_profit() {
        let cost = CostModel::default();
        assert!((cost.period_leasing(Tier::One).unwrap() - 0.711018).abs() < 1e-9);
        let p = profit(&one_vehicle_stats(), [1, 0, 0], &cost, &TaxPolicy::default()).unwrap();
        let oracle = 9.55 - (11.97 * 0.0594 + 17.0) - 10.0 * 0.1473;
        assert!((p - oracle).abs() < 1e-12);
        assert!((p - -9.634).abs() < 1e-3);
    }

    #[test]
    fn levy_is_additive() {
        let tax = TaxPolicy { per_ride: BTreeMap::from([(Tier::One, 2.0)]), pass_through: 0.0 };
        let cost = CostModel::default();
        let base = profit(&one_vehicle_stats(), [1, 0, 0], &cost, &TaxPolicy::default()).unwrap();
        let taxed = profit(&one_vehicle_stats(), [1, 0, 0], &cost, &tax).unwrap();
        assert!((base - taxed - 2.0).abs() < 1e-12);
        assert!((taxed - -11.634).abs() < 1e-3);
        let passed = TaxPolicy { pass_through: 1.0, ..tax };
        let p = profit(&one_vehicle_stats(), [1, 0, 0], &cost, &passed).unwrap();
        assert!((p - base).abs() < 1e-12);
    }

    #[test]
    fn empty_system_is_zero() {
        let p = profit(&SimStats::default(), [0, 0, 0], &CostModel::default(), &TaxPolicy::default()).unwrap();
        assert_eq!(p, 0.0);
    }

    #[test]
    fn missing_stats_for_fleet() {
        let e = profit(&SimStats::default(), [0, 3, 0], &CostModel::default(), &TaxPolicy::default());
        assert_eq!(e, Err(EconomicsError::MissingTierStats(Tier::Four)));
    }

    #[test]
    fn breakdown_reconciles_and_is_monotone() {
        let stats = one_vehicle_stats();
        let cost = CostModel::default();
        let b = profit_breakdown(&stats, [1, 0, 0], &cost, &TaxPolicy::default()).unwrap();
        let t = b.tiers[&Tier::One];
        assert!((t.revenue - t.leasing - t.salary - t.operating - t.tax - b.profit).abs() < 1e-9);
        let mut dearer = cost.clone();
        dearer.tiers.get_mut(&Tier::One).unwrap().operating_per_mile += 0.1;
        assert!(profit(&stats, [1, 0, 0], &dearer, &TaxPolicy::default()).unwrap() <= b.profit);
    }

    #[test]
    fn surplus_closed_forms() {
        let b = -0.074;
        let one: [f64; 1] = [-1.5];
        assert!((consumer_surplus([&one[..]], b) - -1.5 / 0.074).abs() < 1e-12);
        let two = [-1.5, -1.5];
        let gain = consumer_surplus([&two[..]], b) - consumer_surplus([&one[..]], b);
        assert!((gain - core::f64::consts::LN_2 / 0.074).abs() < 1e-9);
        let dominated = [-1.5, -40.0];
        assert!(consumer_surplus([&dominated[..]], b) >= consumer_surplus([&one[..]], b));
    }
}
