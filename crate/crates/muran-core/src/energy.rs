//! Sector-level power accounting.
//!
//! Power of one mesh configuration is the sum over small cells of
//! `n_on * p_on + n_off * p_off`; daily energy aggregates the hourly
//! configurations and reports each policy's reduction against always-on.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::mesh::{MeshState, OnOffConfig, Policy};
use crate::scenario::SiteId;

/// Per-sector power constants in watts.
///
/// Defaults anchor a 20 W three-sector node: 6.67 W per active sector,
/// 0.67 W standby.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PowerModel {
    pub p_on_w: f64,
    pub p_off_w: f64,
}

impl Default for PowerModel {
    fn default() -> Self {
        Self {
            p_on_w: 6.67,
            p_off_w: 0.67,
        }
    }
}

impl PowerModel {
    pub fn new(p_on_w: f64, p_off_w: f64) -> Result<Self> {
        let m = Self { p_on_w, p_off_w };
        m.validate()?;
        Ok(m)
    }

    /// Skips the `p_on > p_off >= 0` check; for test harnesses that
    /// need degenerate models.
    pub fn new_unchecked(p_on_w: f64, p_off_w: f64) -> Self {
        Self { p_on_w, p_off_w }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p_off_w >= 0.0) || !(self.p_on_w > self.p_off_w) {
            return Err(SimError::InvalidParameter {
                name: "power",
                reason: format!(
                    "need p_on_w > p_off_w >= 0, got p_on_w = {}, p_off_w = {}",
                    self.p_on_w, self.p_off_w
                ),
            });
        }
        Ok(())
    }
}

/// Power draw of one ON/OFF configuration in watts:
/// `N_on * p_on + N_off * p_off` summed over all small-cell sectors.
/// The config must cover every sector of every small cell exactly.
pub fn config_power(
    onoff: &OnOffConfig,
    n_sectors: &BTreeMap<SiteId, u8>,
    model: &PowerModel,
) -> Result<f64> {
    let expected: usize = n_sectors.values().map(|n| *n as usize).sum();
    if onoff.n_sectors_total() != expected {
        return Err(SimError::SectorCountMismatch {
            expected,
            got: onoff.n_sectors_total(),
        });
    }
    for (sector, _) in onoff.iter() {
        let n = n_sectors.get(&sector.site).copied().unwrap_or(0);
        if sector.sector >= n {
            return Err(SimError::SectorCountMismatch {
                expected,
                got: onoff.n_sectors_total(),
            });
        }
    }
    let n_on = onoff.n_sectors_on();
    let n_off = expected - n_on;
    Ok(n_on as f64 * model.p_on_w + n_off as f64 * model.p_off_w)
}

/// One row of the hourly energy table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HourRow {
    pub hour: u8,
    pub policy: Policy,
    pub active_sectors: usize,
    pub watts: f64,
    pub satisfied_fraction: f64,
}

/// Daily aggregate per policy, plus the power model it was computed
/// with for transparency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub power_model: PowerModel,
    pub rows: Vec<HourRow>,
    pub daily_wh: BTreeMap<Policy, f64>,
    /// `1 - daily_wh(policy) / daily_wh(always_on)`; present only when
    /// the always-on baseline is part of the report.
    pub reduction_vs_always_on: BTreeMap<Policy, f64>,
}

/// Aggregate 24 hourly states per policy into an energy report.
/// Requires exactly one state per hour for every policy present.
pub fn daily_energy(
    states: &[MeshState],
    n_sectors: &BTreeMap<SiteId, u8>,
    model: &PowerModel,
) -> Result<EnergyReport> {
    let mut by_policy: BTreeMap<Policy, BTreeMap<u8, &MeshState>> = BTreeMap::new();
    for state in states {
        by_policy
            .entry(state.policy)
            .or_default()
            .insert(state.hour, state);
    }
    for (policy, hours) in &by_policy {
        for h in 0..24u8 {
            if !hours.contains_key(&h) {
                return Err(SimError::MissingHour {
                    policy: policy.label().to_string(),
                    hour: h,
                });
            }
        }
    }

    let mut rows = Vec::new();
    let mut daily_wh = BTreeMap::new();
    for (policy, hours) in &by_policy {
        let mut wh = 0.0;
        for (hour, state) in hours {
            let watts = config_power(&state.onoff, n_sectors, model)?;
            wh += watts; // 1 h per state
            rows.push(HourRow {
                hour: *hour,
                policy: *policy,
                active_sectors: state.onoff.n_sectors_on(),
                watts,
                satisfied_fraction: state.satisfied_fraction,
            });
        }
        daily_wh.insert(*policy, wh);
    }
    rows.sort_by_key(|r| (r.hour, r.policy));

    let mut reduction = BTreeMap::new();
    if let Some(always_on) = daily_wh.get(&Policy::AlwaysOn).copied() {
        for (policy, wh) in &daily_wh {
            reduction.insert(*policy, 1.0 - wh / always_on);
        }
    }
    Ok(EnergyReport {
        power_model: *model,
        rows,
        daily_wh,
        reduction_vs_always_on: reduction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::SectorRef;
    use crate::scenario::{generate_scenario, ScenarioConfig};
    use rand::Rng;

    fn scenario_90() -> crate::scenario::Scenario {
        generate_scenario(&ScenarioConfig::default(), 1).unwrap()
    }

    fn sector_map(sc: &crate::scenario::Scenario) -> BTreeMap<SiteId, u8> {
        sc.sc_sites().map(|s| (s.id, s.n_sectors)).collect()
    }

    #[test]
    fn all_off_matches_hand_value() {
        let sc = scenario_90();
        let onoff = OnOffConfig::all_off(&sc);
        let model = PowerModel::default();
        let w = config_power(&onoff, &sector_map(&sc), &model).unwrap();
        assert_eq!(w, 270.0 * 0.67);
        assert!((w - 180.9).abs() < 1e-9);
    }

    #[test]
    fn all_on_matches_hand_value() {
        let sc = scenario_90();
        let onoff = OnOffConfig::all_on(&sc);
        let model = PowerModel::default();
        let w = config_power(&onoff, &sector_map(&sc), &model).unwrap();
        assert_eq!(w, 270.0 * 6.67);
        assert!((w - 1800.9).abs() < 1e-9);
    }

    #[test]
    fn degenerate_equal_powers_collapse() {
        // p_on == p_off is rejected by the validated constructor but
        // allowed through the unchecked one for this identity.
        let sc = scenario_90();
        assert!(PowerModel::new(2.0, 2.0).is_err());
        let model = PowerModel::new_unchecked(2.0, 2.0);
        let mut onoff = OnOffConfig::all_off(&sc);
        onoff.set_on(SectorRef { site: SiteId(5), sector: 1 });
        let w = config_power(&onoff, &sector_map(&sc), &model).unwrap();
        assert_eq!(w, 270.0 * 2.0);
    }

    #[test]
    fn mixed_configs_match_counting_oracle() {
        let sc = scenario_90();
        let sectors = sector_map(&sc);
        let model = PowerModel::default();
        let mut rng = crate::seed::rng_for(3, "energy-fuzz", &[]);
        for _ in 0..10 {
            let mut onoff = OnOffConfig::all_off(&sc);
            let mut n_on = 0usize;
            for (sector, _) in onoff.clone().iter() {
                if rng.gen_bool(0.5) {
                    onoff.set_on(sector);
                    n_on += 1;
                }
            }
            let expected = n_on as f64 * model.p_on_w + (270 - n_on) as f64 * model.p_off_w;
            assert_eq!(config_power(&onoff, &sectors, &model).unwrap(), expected);
        }
    }

    #[test]
    fn sector_count_mismatch_rejected() {
        let sc = scenario_90();
        let onoff = OnOffConfig::all_on(&sc);
        let mut sectors = sector_map(&sc);
        sectors.remove(&SiteId(1));
        assert!(matches!(
            config_power(&onoff, &sectors, &PowerModel::default()),
            Err(SimError::SectorCountMismatch { .. })
        ));
    }

    fn state_for(
        sc: &crate::scenario::Scenario,
        policy: Policy,
        hour: u8,
        onoff: OnOffConfig,
    ) -> crate::mesh::MeshState {
        crate::mesh::MeshState {
            policy,
            hour,
            onoff,
            graph: crate::mesh::BackhaulGraph {
                nodes: vec![sc.gateway().id],
                links: Vec::new(),
                origin_bps: Default::default(),
                routed_bps: Default::default(),
                isolated: Default::default(),
            },
            assignment: crate::mesh::Assignment {
                serving: Default::default(),
                served_bps: Default::default(),
                site_admitted_bps: Default::default(),
            },
            offered_bps: 0,
            served_bps: 0,
            satisfied_fraction: 1.0,
        }
    }

    #[test]
    fn constant_always_on_daily_energy() {
        let sc = scenario_90();
        let sectors = sector_map(&sc);
        let model = PowerModel::default();
        let mut states = Vec::new();
        for h in 0..24u8 {
            states.push(state_for(&sc, Policy::AlwaysOn, h, OnOffConfig::all_on(&sc)));
            states.push(state_for(&sc, Policy::NetworkCentric, h, OnOffConfig::all_off(&sc)));
        }
        let report = daily_energy(&states, &sectors, &model).unwrap();
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b.abs();
        assert!(close(report.daily_wh[&Policy::AlwaysOn], 24.0 * (270.0 * 6.67)));
        assert!(close(report.daily_wh[&Policy::NetworkCentric], 24.0 * (270.0 * 0.67)));
        let red = report.reduction_vs_always_on[&Policy::NetworkCentric];
        assert!((red - (1.0 - 0.67 / 6.67)).abs() < 1e-12);
        assert_eq!(report.reduction_vs_always_on[&Policy::AlwaysOn], 0.0);
        assert_eq!(report.rows.len(), 48);

        // Doubling both power constants doubles energies, reductions fixed.
        let doubled = PowerModel::new_unchecked(2.0 * model.p_on_w, 2.0 * model.p_off_w);
        let report2 = daily_energy(&states, &sectors, &doubled).unwrap();
        for (policy, wh) in &report.daily_wh {
            assert_eq!(report2.daily_wh[policy], 2.0 * wh);
            assert_eq!(
                report2.reduction_vs_always_on[policy],
                report.reduction_vs_always_on[policy]
            );
        }
        // Daily energy is the exact sum of the hourly rows.
        for policy in [Policy::AlwaysOn, Policy::NetworkCentric] {
            let sum: f64 = report
                .rows
                .iter()
                .filter(|r| r.policy == policy)
                .map(|r| r.watts)
                .sum();
            assert_eq!(sum, report.daily_wh[&policy]);
        }
    }

    #[test]
    fn missing_hour_is_rejected() {
        let sc = scenario_90();
        let sectors = sector_map(&sc);
        let states: Vec<_> = (0..23u8)
            .map(|h| state_for(&sc, Policy::AlwaysOn, h, OnOffConfig::all_on(&sc)))
            .collect();
        match daily_energy(&states, &sectors, &PowerModel::default()) {
            Err(SimError::MissingHour { hour, .. }) => assert_eq!(hour, 23),
            other => panic!("expected missing hour, got {other:?}"),
        }
    }

    #[test]
    fn power_is_linear_and_bounded() {
        let sc = scenario_90();
        let sectors = sector_map(&sc);
        let model = PowerModel::default();
        let mut rng = crate::seed::rng_for(4, "energy-fuzz", &[]);
        for _ in 0..200 {
            let mut onoff = OnOffConfig::all_off(&sc);
            let p: f64 = rng.gen();
            for (sector, _) in onoff.clone().iter() {
                if rng.gen_bool(p) {
                    onoff.set_on(sector);
                }
            }
            let w = config_power(&onoff, &sectors, &model).unwrap();
            // Power-of-two scaling is exact in floating point.
            let scaled = PowerModel::new_unchecked(model.p_on_w * 4.0, model.p_off_w * 4.0);
            assert_eq!(config_power(&onoff, &sectors, &scaled).unwrap(), 4.0 * w);
            assert!(w >= 270.0 * model.p_off_w - 1e-12);
            assert!(w <= 270.0 * model.p_on_w + 1e-12);
        }
    }
}
