//! World generation and spatio-temporal traffic demand.
//!
//! A scenario is one evaluation cell: a square area, one macro BS at the
//! center that doubles as the mmWave mesh gateway, a configured number of
//! small-cell BSs inside the cell disc, and a static user population.
//! Traffic demand is sampled per hour from a diurnal multiplier curve and
//! a spatial hotspot mixture, with log-normal per-user jitter.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::geometry::Point2;
use crate::seed::rng_for;

/// Square simulation region with the macro inter-site distance that
/// defines the evaluation cell (a disc of radius `macro_isd_m / 2`
/// centered in the area).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Area {
    pub side_m: f64,
    pub macro_isd_m: f64,
}

impl Area {
    pub fn center(&self) -> Point2 {
        Point2::new(self.side_m / 2.0, self.side_m / 2.0)
    }

    pub fn cell_radius_m(&self) -> f64 {
        self.macro_isd_m / 2.0
    }

    pub fn contains(&self, p: &Point2) -> bool {
        p.x_m >= 0.0 && p.x_m <= self.side_m && p.y_m >= 0.0 && p.y_m <= self.side_m
    }
}

impl Default for Area {
    fn default() -> Self {
        Self {
            side_m: 2000.0,
            macro_isd_m: 500.0,
        }
    }
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct SiteId(pub u32);

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct UserId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SiteKind {
    MacroBs,
    ScBs,
}

/// A base-station site. The macro BS is the single gateway; small cells
/// carry 3 or 4 integrated access/backhaul sectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Site {
    pub id: SiteId,
    pub kind: SiteKind,
    pub position: Point2,
    pub height_m: f64,
    pub n_sectors: u8,
    pub is_gateway: bool,
}

impl Site {
    /// Index of the sector whose wedge covers the given azimuth.
    /// Sector k points at `k * 360/n` degrees; wedges are half-open.
    pub fn sector_toward(&self, azimuth_deg: f64) -> u8 {
        let n = self.n_sectors as f64;
        let step = 360.0 / n;
        let k = (azimuth_deg / step).round() as i64;
        (k.rem_euclid(self.n_sectors as i64)) as u8
    }

    /// Boresight azimuth of sector `k`.
    pub fn sector_boresight_deg(&self, k: u8) -> f64 {
        k as f64 * 360.0 / self.n_sectors as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct User {
    pub id: UserId,
    pub position: Point2,
    pub mean_demand_bps: f64,
}

/// Spatial traffic cluster with Gaussian radial falloff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hotspot {
    pub center: Point2,
    pub radius_m: f64,
    pub weight: f64,
}

/// Diurnal and spatial shape of the offered traffic.
///
/// `hourly_multiplier` is normalized to a max of 1.0; hotspot weights sum
/// to <= 1 with the remainder spread uniformly over users. The expected
/// total demand at the peak hour is `scale_factor * base_peak_total_bps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficProfile {
    pub hourly_multiplier: [f64; 24],
    pub hotspots: Vec<Hotspot>,
    pub scale_factor: f64,
    pub base_peak_total_bps: f64,
    /// Sigma of the log-normal per-user jitter (mean held at 1).
    pub jitter_sigma: f64,
}

/// Built-in 24-point diurnal curve: deep night trough at hour 3, crest
/// 1.0 at hour 15. The trough is low enough that the whole cell's night
/// demand fits into the macro's LTE capacity, which is what lets the
/// network-centric policy switch nearly everything off at night.
pub const DEFAULT_HOURLY_MULTIPLIER: [f64; 24] = [
    0.005, 0.003, 0.002, 0.0015, 0.002, 0.004, 0.01, 0.03, 0.10, 0.22, 0.38, 0.55, 0.68,
    0.80, 0.92, 1.0, 0.97, 0.93, 0.88, 0.80, 0.66, 0.45, 0.20, 0.04,
];

impl TrafficProfile {
    /// Default profile for a given area: the built-in diurnal curve and
    /// three hotspot clusters carrying 60% of the traffic (the largest in
    /// the upper-left of the cell), 40% uniform background.
    pub fn default_for_area(area: &Area) -> Self {
        let c = area.center();
        let r = area.cell_radius_m();
        Self {
            hourly_multiplier: DEFAULT_HOURLY_MULTIPLIER,
            hotspots: vec![
                Hotspot {
                    center: Point2::new(c.x_m - 0.55 * r, c.y_m + 0.55 * r),
                    radius_m: 0.24 * r,
                    weight: 0.30,
                },
                Hotspot {
                    center: Point2::new(c.x_m + 0.50 * r, c.y_m + 0.30 * r),
                    radius_m: 0.32 * r,
                    weight: 0.15,
                },
                Hotspot {
                    center: Point2::new(c.x_m - 0.10 * r, c.y_m - 0.60 * r),
                    radius_m: 0.28 * r,
                    weight: 0.15,
                },
            ],
            scale_factor: 1000.0,
            base_peak_total_bps: 44e6,
            jitter_sigma: 0.5,
        }
    }

    /// Uniform spatial profile (no hotspots) with the same diurnal curve.
    pub fn uniform(&self) -> Self {
        let mut p = self.clone();
        p.hotspots.clear();
        p
    }

    pub fn validate(&self) -> Result<()> {
        if self.hourly_multiplier.iter().any(|m| !(*m >= 0.0)) {
            return Err(SimError::InvalidParameter {
                name: "hourly_multiplier",
                reason: "entries must be nonnegative".into(),
            });
        }
        let max = self
            .hourly_multiplier
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        if (max - 1.0).abs() > 1e-9 {
            return Err(SimError::InvalidParameter {
                name: "hourly_multiplier",
                reason: format!("max entry must be normalized to 1.0, got {max}"),
            });
        }
        let wsum: f64 = self.hotspots.iter().map(|h| h.weight).sum();
        if wsum > 1.0 + 1e-12 || self.hotspots.iter().any(|h| h.weight < 0.0) {
            return Err(SimError::InvalidParameter {
                name: "hotspots",
                reason: format!("weights must be nonnegative and sum to <= 1, got {wsum}"),
            });
        }
        if self.hotspots.iter().any(|h| h.radius_m <= 0.0) {
            return Err(SimError::InvalidParameter {
                name: "hotspots",
                reason: "radius_m must be positive".into(),
            });
        }
        if !(self.scale_factor > 0.0) || !(self.base_peak_total_bps >= 0.0) {
            return Err(SimError::InvalidParameter {
                name: "scale_factor",
                reason: "scale_factor must be > 0 and base_peak_total_bps >= 0".into(),
            });
        }
        if !(self.jitter_sigma >= 0.0) {
            return Err(SimError::InvalidParameter {
                name: "jitter_sigma",
                reason: "must be nonnegative".into(),
            });
        }
        Ok(())
    }
}

/// The built-in default traffic profile (for the default area).
pub fn diurnal_default() -> TrafficProfile {
    TrafficProfile::default_for_area(&Area::default())
}

/// Offered demand per user at one simulated hour, in bps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficSnapshot {
    pub hour: u8,
    pub demands: BTreeMap<UserId, f64>,
}

impl TrafficSnapshot {
    pub fn total_bps(&self) -> f64 {
        self.demands.values().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    UniformRandom,
    Grid,
}

/// Generation parameters for one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub area_side_m: f64,
    pub macro_isd_m: f64,
    pub n_sc_bs: usize,
    pub n_users: usize,
    pub sc_n_sectors: u8,
    pub placement: Placement,
    pub min_separation_m: f64,
    pub mean_user_demand_bps: f64,
    pub macro_height_m: f64,
    pub sc_height_m: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            area_side_m: 2000.0,
            macro_isd_m: 500.0,
            n_sc_bs: 90,
            n_users: 300,
            sc_n_sectors: 3,
            placement: Placement::UniformRandom,
            min_separation_m: 20.0,
            mean_user_demand_bps: 62_000.0,
            macro_height_m: 25.0,
            sc_height_m: 4.0,
        }
    }
}

impl ScenarioConfig {
    pub fn area(&self) -> Area {
        Area {
            side_m: self.area_side_m,
            macro_isd_m: self.macro_isd_m,
        }
    }
}

/// Immutable world: geometry, sites, users.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub area: Area,
    pub sites: Vec<Site>,
    pub users: Vec<User>,
}

impl Scenario {
    pub fn gateway(&self) -> &Site {
        self.sites
            .iter()
            .find(|s| s.is_gateway)
            .expect("scenario always has a gateway")
    }

    pub fn sc_sites(&self) -> impl Iterator<Item = &Site> {
        self.sites.iter().filter(|s| s.kind == SiteKind::ScBs)
    }

    pub fn site(&self, id: SiteId) -> &Site {
        &self.sites[id.0 as usize]
    }

    pub fn total_sc_sectors(&self) -> usize {
        self.sc_sites().map(|s| s.n_sectors as usize).sum()
    }
}

fn sample_in_disc<R: Rng>(rng: &mut R, center: &Point2, radius: f64) -> Point2 {
    let r = radius * rng.gen::<f64>().sqrt();
    let theta = rng.gen::<f64>() * std::f64::consts::TAU;
    Point2::new(center.x_m + r * theta.cos(), center.y_m + r * theta.sin())
}

/// Generate the world for a config and seed. One macro BS (gateway) at
/// the area center plus `n_sc_bs` small cells inside the evaluation
/// cell, all pairwise separated by at least `min_separation_m`.
pub fn generate_scenario(config: &ScenarioConfig, seed: u64) -> Result<Scenario> {
    let area = config.area();
    if !(area.side_m > 0.0) || !(area.macro_isd_m > 0.0) {
        return Err(SimError::InvalidParameter {
            name: "area",
            reason: "side_m and macro_isd_m must be positive".into(),
        });
    }
    if area.macro_isd_m > area.side_m {
        return Err(SimError::InvalidParameter {
            name: "area",
            reason: "evaluation cell must fit inside the area".into(),
        });
    }
    if config.sc_n_sectors != 3 && config.sc_n_sectors != 4 {
        return Err(SimError::InvalidParameter {
            name: "sc_n_sectors",
            reason: format!("small cells carry 3 or 4 sectors, got {}", config.sc_n_sectors),
        });
    }

    let center = area.center();
    let radius = area.cell_radius_m();
    let mut sites = Vec::with_capacity(config.n_sc_bs + 1);
    sites.push(Site {
        id: SiteId(0),
        kind: SiteKind::MacroBs,
        position: center,
        height_m: config.macro_height_m,
        n_sectors: 3,
        is_gateway: true,
    });

    let positions = match config.placement {
        Placement::UniformRandom => {
            place_uniform(config, &center, radius, seed)?
        }
        Placement::Grid => place_grid(config, &center, radius)?,
    };
    for (i, pos) in positions.into_iter().enumerate() {
        sites.push(Site {
            id: SiteId(i as u32 + 1),
            kind: SiteKind::ScBs,
            position: pos,
            height_m: config.sc_height_m,
            n_sectors: config.sc_n_sectors,
            is_gateway: false,
        });
    }

    let mut rng = rng_for(seed, "scenario-users", &[]);
    let users = (0..config.n_users)
        .map(|i| User {
            id: UserId(i as u32),
            position: sample_in_disc(&mut rng, &center, radius),
            mean_demand_bps: config.mean_user_demand_bps,
        })
        .collect();

    Ok(Scenario { area, sites, users })
}

fn place_uniform(
    config: &ScenarioConfig,
    center: &Point2,
    radius: f64,
    seed: u64,
) -> Result<Vec<Point2>> {
    let mut rng = rng_for(seed, "scenario-placement", &[]);
    let mut placed: Vec<Point2> = Vec::with_capacity(config.n_sc_bs);
    let min_sep = config.min_separation_m;
    const MAX_ATTEMPTS: usize = 20_000;
    for _ in 0..config.n_sc_bs {
        let mut ok = None;
        for _ in 0..MAX_ATTEMPTS {
            let cand = sample_in_disc(&mut rng, center, radius);
            let clear = cand.distance_to(center) >= min_sep
                && placed.iter().all(|p| p.distance_to(&cand) >= min_sep);
            if clear {
                ok = Some(cand);
                break;
            }
        }
        match ok {
            Some(p) => placed.push(p),
            None => {
                return Err(SimError::PlacementFailed {
                    requested: config.n_sc_bs,
                    placed: placed.len(),
                    min_separation_m: min_sep,
                })
            }
        }
    }
    Ok(placed)
}

fn place_grid(config: &ScenarioConfig, center: &Point2, radius: f64) -> Result<Vec<Point2>> {
    if config.n_sc_bs == 0 {
        return Ok(Vec::new());
    }
    // Square lattice, offset by half a step so no point collides with
    // the macro; shrink the spacing until enough candidates fit, but
    // never below the minimum separation.
    let mut spacing = (std::f64::consts::PI * radius * radius / config.n_sc_bs as f64).sqrt();
    loop {
        if spacing < config.min_separation_m {
            return Err(SimError::PlacementFailed {
                requested: config.n_sc_bs,
                placed: 0,
                min_separation_m: config.min_separation_m,
            });
        }
        let half = (radius / spacing).ceil() as i64 + 1;
        let mut candidates: Vec<Point2> = Vec::new();
        for ix in -half..=half {
            for iy in -half..=half {
                let p = Point2::new(
                    center.x_m + (ix as f64 + 0.5) * spacing,
                    center.y_m + (iy as f64 + 0.5) * spacing,
                );
                if p.distance_to(center) <= radius
                    && p.distance_to(center) >= config.min_separation_m
                {
                    candidates.push(p);
                }
            }
        }
        if candidates.len() >= config.n_sc_bs {
            candidates.sort_by(|a, b| {
                let da = a.distance_to(center);
                let db = b.distance_to(center);
                da.partial_cmp(&db)
                    .unwrap()
                    .then(a.x_m.partial_cmp(&b.x_m).unwrap())
                    .then(a.y_m.partial_cmp(&b.y_m).unwrap())
            });
            candidates.truncate(config.n_sc_bs);
            return Ok(candidates);
        }
        spacing *= 0.95;
    }
}

/// Per-user spatial traffic share; sums to exactly 1 over users.
fn spatial_weights(scenario: &Scenario, profile: &TrafficProfile) -> Vec<f64> {
    let n = scenario.users.len();
    if n == 0 {
        return Vec::new();
    }
    let hotspot_mass: f64 = profile.hotspots.iter().map(|h| h.weight).sum();
    let uniform_share = (1.0 - hotspot_mass) / n as f64;
    let mut w = vec![uniform_share; n];
    for h in &profile.hotspots {
        let g: Vec<f64> = scenario
            .users
            .iter()
            .map(|u| {
                let d = u.position.distance_to(&h.center);
                (-d * d / (2.0 * h.radius_m * h.radius_m)).exp()
            })
            .collect();
        let total: f64 = g.iter().sum();
        if total > 0.0 {
            for (wi, gi) in w.iter_mut().zip(&g) {
                *wi += h.weight * gi / total;
            }
        } else {
            // No user sees this hotspot; spread its mass uniformly.
            for wi in w.iter_mut() {
                *wi += h.weight / n as f64;
            }
        }
    }
    w
}

/// Sample per-user offered demand for one hour.
///
/// Demand for user u is `scale * base_peak * multiplier[hour] * w_u *
/// jitter_u`, where the combined spatial/demand weight `w_u` is
/// normalized so the expected total at the peak hour equals
/// `scale_factor * base_peak_total_bps` exactly.
pub fn sample_traffic(
    scenario: &Scenario,
    profile: &TrafficProfile,
    hour: u8,
    seed: u64,
) -> Result<TrafficSnapshot> {
    if hour > 23 {
        return Err(SimError::HourOutOfRange(hour as u32));
    }
    profile.validate()?;
    let mult = profile.hourly_multiplier[hour as usize];
    let spatial = spatial_weights(scenario, profile);
    let combined: Vec<f64> = scenario
        .users
        .iter()
        .zip(&spatial)
        .map(|(u, w)| w * u.mean_demand_bps)
        .collect();
    let norm: f64 = combined.iter().sum();

    let mut rng = rng_for(seed, "traffic", &[hour as u64]);
    let jitter = if profile.jitter_sigma > 0.0 {
        Some(
            LogNormal::new(
                -profile.jitter_sigma * profile.jitter_sigma / 2.0,
                profile.jitter_sigma,
            )
            .expect("valid log-normal"),
        )
    } else {
        None
    };

    let mut demands = BTreeMap::new();
    for (u, c) in scenario.users.iter().zip(&combined) {
        let j = match &jitter {
            Some(d) => d.sample(&mut rng),
            None => 1.0,
        };
        let share = if norm > 0.0 { c / norm } else { 0.0 };
        let unscaled = profile.base_peak_total_bps * mult * share * j;
        demands.insert(u.id, profile.scale_factor * unscaled);
    }
    Ok(TrafficSnapshot { hour, demands })
}
