//! Link budgets, antenna patterns, and rate mapping for the two air
//! interfaces: the LTE macro access link and 60 GHz mmWave links (which
//! serve both small-cell access and mesh backhaul).
//!
//! All constants default to the simulation parameter set but are
//! overridable through the `radio` section of the experiment config.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::geometry::slant_distance_m;
use crate::scenario::{Site, User};

/// Which link model applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LinkKind {
    LteAccess,
    MmwLink,
}

/// One entry of the stepwise mmWave rate table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McsStep {
    pub snr_threshold_db: f64,
    pub se_bps_hz: f64,
}

/// Stepwise modulation-and-coding table for mmWave links: the highest
/// step whose SNR threshold is met determines spectral efficiency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McsTable {
    steps: Vec<McsStep>,
}

impl McsTable {
    /// Default 12-step table: thresholds -1..21 dB spaced 2 dB,
    /// spectral efficiency 0.38..4.62 bps/Hz spaced evenly.
    pub fn default_mmw() -> Self {
        let n = 12usize;
        let se_step = (4.62 - 0.38) / (n as f64 - 1.0);
        let steps = (0..n)
            .map(|i| McsStep {
                snr_threshold_db: -1.0 + 2.0 * i as f64,
                se_bps_hz: 0.38 + se_step * i as f64,
            })
            .collect();
        Self { steps }
    }

    pub fn new(steps: Vec<McsStep>) -> Result<Self> {
        let t = Self { steps };
        t.validate()?;
        Ok(t)
    }

    pub fn steps(&self) -> &[McsStep] {
        &self.steps
    }

    pub fn top_se_bps_hz(&self) -> f64 {
        self.steps.last().map(|s| s.se_bps_hz).unwrap_or(0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps.is_empty() {
            return Err(SimError::McsTable("table is empty".into()));
        }
        for w in self.steps.windows(2) {
            if w[1].snr_threshold_db <= w[0].snr_threshold_db {
                return Err(SimError::McsTable(format!(
                    "thresholds not strictly increasing at {} dB",
                    w[1].snr_threshold_db
                )));
            }
            if w[1].se_bps_hz < w[0].se_bps_hz {
                return Err(SimError::McsTable(format!(
                    "spectral efficiency decreases at {} dB",
                    w[1].snr_threshold_db
                )));
            }
        }
        if self.steps.iter().any(|s| s.se_bps_hz < 0.0) {
            return Err(SimError::McsTable("negative spectral efficiency".into()));
        }
        Ok(())
    }

    /// Spectral efficiency for an SNR; 0 below the first threshold.
    pub fn se_for_snr(&self, snr_db: f64) -> f64 {
        let mut se = 0.0;
        for step in &self.steps {
            if snr_db >= step.snr_threshold_db {
                se = step.se_bps_hz;
            } else {
                break;
            }
        }
        se
    }

    /// Parse from CSV text with columns `snr_threshold_db,se_bps_hz`.
    /// A header row is accepted and skipped.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut steps = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != 2 {
                return Err(SimError::McsTable(format!(
                    "line {}: expected 2 columns, got {}",
                    lineno + 1,
                    cols.len()
                )));
            }
            if lineno == 0 && cols[0].parse::<f64>().is_err() {
                continue; // header
            }
            let parse = |s: &str| -> Result<f64> {
                s.parse::<f64>().map_err(|_| {
                    SimError::McsTable(format!("line {}: bad number {:?}", lineno + 1, s))
                })
            };
            steps.push(McsStep {
                snr_threshold_db: parse(cols[0])?,
                se_bps_hz: parse(cols[1])?,
            });
        }
        Self::new(steps)
    }
}

/// Antenna pattern family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PatternKind {
    /// Parabolic sector pattern used for the LTE macro.
    ThreeGppSector,
    /// Steerable pencil beam used on mmWave nodes.
    MmwBeam,
}

/// Azimuth-cut antenna pattern with a parabolic main lobe and a
/// front-to-back floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AntennaPattern {
    pub kind: PatternKind,
    pub peak_gain_dbi: f64,
    pub beamwidth_deg: f64,
    pub front_to_back_db: f64,
}

/// Gain at an angular offset from boresight. Peak at 0 deg, -3 dB at
/// half the beamwidth, floored at `peak - front_to_back`.
pub fn antenna_gain(pattern: &AntennaPattern, offset_deg: f64) -> f64 {
    let ratio = offset_deg.abs() / pattern.beamwidth_deg;
    let rolloff = 12.0 * ratio * ratio;
    pattern.peak_gain_dbi - rolloff.min(pattern.front_to_back_db)
}

/// Radio-layer constants.
///
/// LTE column / mmWave column defaults: 10 MHz vs 2x2.16 GHz bandwidth,
/// 2 GHz vs 60 GHz carrier, 17 vs 26 dBi gain, 46 vs 10 dBm transmit
/// power, noise density -174 dBm/Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RadioParams {
    pub lte_bandwidth_hz: f64,
    pub lte_carrier_hz: f64,
    pub lte_antenna_gain_dbi: f64,
    pub lte_tx_power_dbm: f64,
    /// Shannon-capacity cap for LTE, in bps/Hz.
    pub lte_se_cap_bps_hz: f64,
    pub lte_beamwidth_deg: f64,
    pub lte_front_to_back_db: f64,
    /// Log-distance intercept at 1 km, dB.
    pub lte_pl_intercept_db: f64,
    /// Log-distance slope, dB per decade of km.
    pub lte_pl_slope_db_per_decade: f64,

    /// Bandwidth of one mmWave channel.
    pub mmw_channel_bandwidth_hz: f64,
    /// Number of aggregated mmWave channels per link.
    pub mmw_n_channels: u32,
    pub mmw_carrier_hz: f64,
    pub mmw_antenna_gain_dbi: f64,
    pub mmw_tx_power_dbm: f64,
    pub mmw_beamwidth_deg: f64,
    pub mmw_front_to_back_db: f64,
    /// Free-space propagation up to this distance, then the log-distance
    /// exponent takes over.
    pub mmw_breakpoint_m: f64,
    pub mmw_pl_exponent: f64,
    /// Oxygen absorption at 60 GHz.
    pub mmw_absorption_db_per_km: f64,

    pub noise_density_dbm_hz: f64,
    /// Terminal antenna gain on access links.
    pub ue_antenna_gain_dbi: f64,
    /// Terminal antenna height for access links.
    pub user_height_m: f64,

    pub mcs: McsTable,
}

impl Default for RadioParams {
    fn default() -> Self {
        Self {
            lte_bandwidth_hz: 10e6,
            lte_carrier_hz: 2.0e9,
            lte_antenna_gain_dbi: 17.0,
            lte_tx_power_dbm: 46.0,
            lte_se_cap_bps_hz: 6.0,
            lte_beamwidth_deg: 65.0,
            lte_front_to_back_db: 20.0,
            lte_pl_intercept_db: 128.1,
            lte_pl_slope_db_per_decade: 37.6,
            mmw_channel_bandwidth_hz: 2.16e9,
            mmw_n_channels: 2,
            mmw_carrier_hz: 60e9,
            mmw_antenna_gain_dbi: 26.0,
            mmw_tx_power_dbm: 10.0,
            mmw_beamwidth_deg: 6.0,
            mmw_front_to_back_db: 30.0,
            mmw_breakpoint_m: 5.0,
            mmw_pl_exponent: 2.36,
            mmw_absorption_db_per_km: 15.0,
            noise_density_dbm_hz: -174.0,
            ue_antenna_gain_dbi: 0.0,
            user_height_m: 1.5,
            mcs: McsTable::default_mmw(),
        }
    }
}

impl RadioParams {
    pub fn lte_pattern(&self) -> AntennaPattern {
        AntennaPattern {
            kind: PatternKind::ThreeGppSector,
            peak_gain_dbi: self.lte_antenna_gain_dbi,
            beamwidth_deg: self.lte_beamwidth_deg,
            front_to_back_db: self.lte_front_to_back_db,
        }
    }

    pub fn mmw_pattern(&self) -> AntennaPattern {
        AntennaPattern {
            kind: PatternKind::MmwBeam,
            peak_gain_dbi: self.mmw_antenna_gain_dbi,
            beamwidth_deg: self.mmw_beamwidth_deg,
            front_to_back_db: self.mmw_front_to_back_db,
        }
    }

    /// Thermal noise floor over `bandwidth_hz`, dBm.
    pub fn noise_floor_dbm(&self, bandwidth_hz: f64) -> f64 {
        self.noise_density_dbm_hz + 10.0 * bandwidth_hz.log10()
    }

    fn bandwidth_for(&self, kind: LinkKind) -> f64 {
        match kind {
            LinkKind::LteAccess => self.lte_bandwidth_hz,
            // Noise is per channel; aggregate rate scales with channel count.
            LinkKind::MmwLink => self.mmw_channel_bandwidth_hz,
        }
    }

    fn tx_power_dbm(&self, kind: LinkKind) -> f64 {
        match kind {
            LinkKind::LteAccess => self.lte_tx_power_dbm,
            LinkKind::MmwLink => self.mmw_tx_power_dbm,
        }
    }

    fn site_gain_dbi(&self, kind: LinkKind) -> f64 {
        match kind {
            LinkKind::LteAccess => self.lte_antenna_gain_dbi,
            LinkKind::MmwLink => self.mmw_antenna_gain_dbi,
        }
    }
}

/// Path loss in dB for a link of `kind` over `distance_m`.
///
/// LTE: log-distance `intercept + slope*log10(d_km)`.
/// mmWave: free space at the carrier up to the breakpoint, then the
/// configured exponent, plus linear atmospheric absorption.
pub fn path_loss(params: &RadioParams, kind: LinkKind, distance_m: f64) -> Result<f64> {
    if distance_m <= 0.0 {
        return Err(SimError::NonpositiveDistance(distance_m));
    }
    match kind {
        LinkKind::LteAccess => Ok(params.lte_pl_intercept_db
            + params.lte_pl_slope_db_per_decade * (distance_m / 1000.0).log10()),
        LinkKind::MmwLink => {
            let bp = params.mmw_breakpoint_m;
            let fspl = |d: f64| {
                20.0 * d.log10() + 20.0 * params.mmw_carrier_hz.log10() - 147.55221677811664
            };
            let spreading = if distance_m <= bp {
                fspl(distance_m)
            } else {
                fspl(bp) + 10.0 * params.mmw_pl_exponent * (distance_m / bp).log10()
            };
            Ok(spreading + params.mmw_absorption_db_per_km * distance_m / 1000.0)
        }
    }
}

/// SNR between two sites at boresight alignment, dB.
pub fn link_snr(tx: &Site, rx: &Site, params: &RadioParams, kind: LinkKind) -> Result<f64> {
    let d = slant_distance_m(&tx.position, tx.height_m, &rx.position, rx.height_m);
    if d == 0.0 {
        return Err(SimError::CoLocatedSites(tx.id.0, rx.id.0));
    }
    let gain = params.site_gain_dbi(kind);
    snr_from_budget(params, kind, d, gain, gain)
}

/// SNR from a site down to a terminal, dB. Site-side gain follows the
/// link kind; terminal gain is `ue_antenna_gain_dbi`.
pub fn access_snr(site: &Site, user: &User, params: &RadioParams, kind: LinkKind) -> Result<f64> {
    let d = slant_distance_m(
        &site.position,
        site.height_m,
        &user.position,
        params.user_height_m,
    );
    snr_from_budget(
        params,
        kind,
        d,
        params.site_gain_dbi(kind),
        params.ue_antenna_gain_dbi,
    )
}

fn snr_from_budget(
    params: &RadioParams,
    kind: LinkKind,
    distance_m: f64,
    tx_gain_dbi: f64,
    rx_gain_dbi: f64,
) -> Result<f64> {
    let pl = path_loss(params, kind, distance_m)?;
    Ok(params.tx_power_dbm(kind) + tx_gain_dbi + rx_gain_dbi
        - pl
        - params.noise_floor_dbm(params.bandwidth_for(kind)))
}

/// Achievable rate in bps for an SNR on a link of `kind`.
///
/// LTE: Shannon capacity capped at `lte_se_cap_bps_hz`.
/// mmWave: stepwise MCS spectral efficiency per channel times the
/// aggregated channel count; zero below the first threshold.
pub fn link_rate(snr_db: f64, kind: LinkKind, params: &RadioParams) -> u64 {
    if !snr_db.is_finite() && snr_db < 0.0 {
        return 0;
    }
    match kind {
        LinkKind::LteAccess => {
            let snr_lin = 10f64.powf(snr_db / 10.0);
            let se = (1.0 + snr_lin).log2().min(params.lte_se_cap_bps_hz);
            (params.lte_bandwidth_hz * se) as u64
        }
        LinkKind::MmwLink => {
            let se = params.mcs.se_for_snr(snr_db);
            (params.mmw_channel_bandwidth_hz * se * params.mmw_n_channels as f64) as u64
        }
    }
}

/// A computed point-to-point budget between two sites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub tx_site: u32,
    pub rx_site: u32,
    pub distance_m: f64,
    pub path_loss_db: f64,
    pub tx_gain_dbi: f64,
    pub rx_gain_dbi: f64,
    pub snr_db: f64,
    pub rate_bps: u64,
}

impl LinkBudget {
    pub fn between(tx: &Site, rx: &Site, params: &RadioParams, kind: LinkKind) -> Result<Self> {
        let d = slant_distance_m(&tx.position, tx.height_m, &rx.position, rx.height_m);
        if d == 0.0 {
            return Err(SimError::CoLocatedSites(tx.id.0, rx.id.0));
        }
        let gain = params.site_gain_dbi(kind);
        let pl = path_loss(params, kind, d)?;
        let snr = params.tx_power_dbm(kind) + 2.0 * gain
            - pl
            - params.noise_floor_dbm(params.bandwidth_for(kind));
        Ok(Self {
            tx_site: tx.id.0,
            rx_site: rx.id.0,
            distance_m: d,
            path_loss_db: pl,
            tx_gain_dbi: gain,
            rx_gain_dbi: gain,
            snr_db: snr,
            rate_bps: link_rate(snr, kind, params),
        })
    }

    /// Recompute SNR from the stored components (for consistency checks).
    pub fn recomputed_snr_db(&self, params: &RadioParams, kind: LinkKind) -> f64 {
        params.tx_power_dbm(kind) + self.tx_gain_dbi + self.rx_gain_dbi
            - self.path_loss_db
            - params.noise_floor_dbm(params.bandwidth_for(kind))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point2;
    use crate::scenario::{Site, SiteId, SiteKind, User, UserId};

    fn site(id: u32, x: f64, y: f64, h: f64) -> Site {
        Site {
            id: SiteId(id),
            kind: SiteKind::ScBs,
            position: Point2::new(x, y),
            height_m: h,
            n_sectors: 3,
            is_gateway: false,
        }
    }

    #[test]
    fn lte_path_loss_at_one_km() {
        let p = RadioParams::default();
        let pl = path_loss(&p, LinkKind::LteAccess, 1000.0).unwrap();
        assert!((pl - 128.1).abs() < 1e-9, "pl = {pl}");
    }

    #[test]
    fn mmw_log_distance_doubling_identity() {
        // The pure log-distance identity holds with absorption disabled.
        let mut p = RadioParams::default();
        p.mmw_absorption_db_per_km = 0.0;
        let l1 = path_loss(&p, LinkKind::MmwLink, 50.0).unwrap();
        let l2 = path_loss(&p, LinkKind::MmwLink, 100.0).unwrap();
        let expected = 10.0 * p.mmw_pl_exponent * 2f64.log10();
        assert!((l2 - l1 - expected).abs() < 1e-9);
    }

    #[test]
    fn path_loss_rejects_nonpositive_distance() {
        let p = RadioParams::default();
        assert!(path_loss(&p, LinkKind::MmwLink, 0.0).is_err());
        assert!(path_loss(&p, LinkKind::LteAccess, -3.0).is_err());
    }

    #[test]
    fn path_loss_monotone_and_continuous_at_breakpoint() {
        let p = RadioParams::default();
        let mut prev = 0.0;
        for i in 1..=2000 {
            let d = i as f64 * 0.5;
            let pl = path_loss(&p, LinkKind::MmwLink, d).unwrap();
            assert!(pl >= prev, "loss decreased at {} m", d);
            prev = pl;
        }
        let below = path_loss(&p, LinkKind::MmwLink, p.mmw_breakpoint_m - 1e-9).unwrap();
        let above = path_loss(&p, LinkKind::MmwLink, p.mmw_breakpoint_m + 1e-9).unwrap();
        assert!((above - below).abs() < 1e-6);
    }

    #[test]
    fn mmw_200m_supports_two_gbps() {
        // Full beam gain at 200 m must still leave headroom above 2 Gbps.
        let p = RadioParams::default();
        let a = site(0, 0.0, 0.0, 4.0);
        let b = site(1, 200.0, 0.0, 4.0);
        let snr = link_snr(&a, &b, &p, LinkKind::MmwLink).unwrap();
        let rate = link_rate(snr, LinkKind::MmwLink, &p);
        assert!(rate >= 2_000_000_000, "rate = {rate} bps at snr {snr} dB");
    }

    #[test]
    fn antenna_gain_peak_halfpower_floor() {
        let p = RadioParams::default();
        let beam = p.mmw_pattern();
        assert!((antenna_gain(&beam, 0.0) - 26.0).abs() < 1e-12);
        assert!((antenna_gain(&beam, 3.0) - 23.0).abs() < 1e-12);
        assert!((antenna_gain(&beam, -3.0) - 23.0).abs() < 1e-12);
        assert!((antenna_gain(&beam, 180.0) - (26.0 - 30.0)).abs() < 1e-12);
        let sector = p.lte_pattern();
        assert!((antenna_gain(&sector, 32.5) - 14.0).abs() < 1e-12);
    }

    #[test]
    fn noise_floor_mmw_channel() {
        let p = RadioParams::default();
        let nf = p.noise_floor_dbm(2.16e9);
        assert!((nf - (-80.6555)).abs() < 1e-3, "nf = {nf}");
    }

    #[test]
    fn doubling_bandwidth_costs_3db() {
        let p = RadioParams::default();
        let d = p.noise_floor_dbm(2.0 * 10e6) - p.noise_floor_dbm(10e6);
        assert!((d - 10.0 * 2f64.log10()).abs() < 1e-12);
    }

    #[test]
    fn lte_cell_edge_positive_snr() {
        let p = RadioParams::default();
        let macro_site = Site {
            id: SiteId(0),
            kind: SiteKind::MacroBs,
            position: Point2::new(0.0, 0.0),
            height_m: 25.0,
            n_sectors: 3,
            is_gateway: true,
        };
        let user = User {
            id: UserId(0),
            position: Point2::new(250.0, 0.0),
            mean_demand_bps: 62_000.0,
        };
        let snr = access_snr(&macro_site, &user, &p, LinkKind::LteAccess).unwrap();
        // Budget-chain oracle: 46 + 17 + 0 - (128.1 + 37.6 log10(d_km)) - (-104).
        let d = ((250.0f64).powi(2) + (25.0f64 - 1.5).powi(2)).sqrt();
        let expected = 46.0 + 17.0 - (128.1 + 37.6 * (d / 1000.0).log10()) + 104.0;
        assert!(snr > 0.0);
        assert!((snr - expected).abs() < 1e-9);
    }

    #[test]
    fn link_rate_lte_cap_binds() {
        let p = RadioParams::default();
        let rate = link_rate(200.0, LinkKind::LteAccess, &p);
        assert_eq!(rate, 60_000_000);
    }

    #[test]
    fn link_rate_below_sensitivity_is_zero() {
        let p = RadioParams::default();
        assert_eq!(link_rate(f64::NEG_INFINITY, LinkKind::MmwLink, &p), 0);
        assert_eq!(link_rate(-5.0, LinkKind::MmwLink, &p), 0);
        assert_eq!(link_rate(f64::NEG_INFINITY, LinkKind::LteAccess, &p), 0);
    }

    #[test]
    fn link_rate_top_mcs_uses_both_channels() {
        let p = RadioParams::default();
        let top = p.mcs.top_se_bps_hz();
        let rate = link_rate(100.0, LinkKind::MmwLink, &p);
        assert_eq!(rate, (2.16e9 * top * 2.0) as u64);
    }

    #[test]
    fn link_rate_nondecreasing_in_snr() {
        let p = RadioParams::default();
        for kind in [LinkKind::LteAccess, LinkKind::MmwLink] {
            let mut prev = 0u64;
            for i in -40..200 {
                let r = link_rate(i as f64 * 0.25, kind, &p);
                assert!(r >= prev);
                prev = r;
            }
        }
    }

    #[test]
    fn snr_symmetry_for_identical_ends() {
        let p = RadioParams::default();
        let a = site(0, 10.0, 20.0, 4.0);
        let b = site(1, 150.0, -40.0, 4.0);
        let ab = link_snr(&a, &b, &p, LinkKind::MmwLink).unwrap();
        let ba = link_snr(&b, &a, &p, LinkKind::MmwLink).unwrap();
        assert!((ab - ba).abs() < 1e-12);
    }

    #[test]
    fn link_snr_rejects_colocated() {
        let p = RadioParams::default();
        let a = site(0, 10.0, 10.0, 4.0);
        let b = site(1, 10.0, 10.0, 4.0);
        assert!(link_snr(&a, &b, &p, LinkKind::MmwLink).is_err());
    }

    #[test]
    fn budget_snr_recomputable() {
        let p = RadioParams::default();
        let a = site(0, 0.0, 0.0, 4.0);
        let b = site(1, 120.0, 35.0, 4.0);
        let budget = LinkBudget::between(&a, &b, &p, LinkKind::MmwLink).unwrap();
        let again = budget.recomputed_snr_db(&p, LinkKind::MmwLink);
        assert!((budget.snr_db - again).abs() < 1e-9);
    }

    #[test]
    fn pattern_integration_sanity() {
        // The azimuth-integrated linear gain should match the
        // isotropic-equivalent implied by peak gain x beamwidth fraction
        // to within 3 dB.
        let p = RadioParams::default();
        for pat in [p.mmw_pattern(), p.lte_pattern()] {
            let n = 36000;
            let mean_linear: f64 = (0..n)
                .map(|i| {
                    let theta = -180.0 + 360.0 * (i as f64 + 0.5) / n as f64;
                    10f64.powf(antenna_gain(&pat, theta) / 10.0)
                })
                .sum::<f64>()
                / n as f64;
            let implied =
                10f64.powf(pat.peak_gain_dbi / 10.0) * (pat.beamwidth_deg / 360.0);
            let diff_db = (10.0 * (mean_linear / implied).log10()).abs();
            assert!(diff_db <= 3.0, "pattern {:?}: {} dB", pat.kind, diff_db);
        }
    }

    #[test]
    fn mcs_csv_roundtrip_and_validation() {
        let table = McsTable::from_csv_str(
            "snr_threshold_db,se_bps_hz\n-1.0,0.38\n1.0,0.77\n3.0,1.15\n",
        )
        .unwrap();
        assert_eq!(table.steps().len(), 3);
        assert!((table.se_for_snr(2.0) - 0.77).abs() < 1e-12);
        assert_eq!(table.se_for_snr(-2.0), 0.0);
        assert!(McsTable::from_csv_str("0.0,1.0\n-1.0,2.0\n").is_err());
        assert!(McsTable::from_csv_str("0.0,2.0\n1.0,1.0\n").is_err());
        assert!(McsTable::from_csv_str("").is_err());
    }
}
