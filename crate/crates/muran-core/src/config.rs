//! Experiment configuration: JSON schema, defaults, and validation
//! diagnostics.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::energy::PowerModel;
use crate::error::{Result, SimError};
use crate::linklevel::LinkLevelParams;
use crate::mesh::Policy;
use crate::radio::{McsTable, RadioParams};
use crate::scenario::{ScenarioConfig, TrafficProfile};

/// Link-level sweep settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinkLevelConfig {
    pub enabled: bool,
    pub params: LinkLevelParams,
    pub snr_start_db: f64,
    pub snr_stop_db: f64,
    pub snr_step_db: f64,
    pub n_draws: u32,
}

impl Default for LinkLevelConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            params: LinkLevelParams::default(),
            snr_start_db: 0.0,
            snr_stop_db: 40.0,
            snr_step_db: 2.0,
            n_draws: 10_000,
        }
    }
}

/// Top-level experiment configuration (JSON document).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub scenario: ScenarioConfig,
    /// Traffic profile; defaults to the built-in diurnal/hotspot profile
    /// fitted to the scenario area.
    pub traffic: Option<TrafficProfile>,
    pub radio: RadioParams,
    /// Optional CSV overriding the mmWave MCS table
    /// (columns: snr_threshold_db, se_bps_hz), relative to the config file.
    pub mcs_table_csv: Option<String>,
    pub power: PowerModel,
    pub linklevel: LinkLevelConfig,
    pub policies: Vec<Policy>,
    pub hours: Vec<u8>,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioConfig::default(),
            traffic: None,
            radio: RadioParams::default(),
            mcs_table_csv: None,
            power: PowerModel::default(),
            linklevel: LinkLevelConfig::default(),
            policies: Policy::ALL.to_vec(),
            hours: (0..24).collect(),
            seed: 1,
        }
    }
}

/// A validation finding: the config key path plus a message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub key: String,
    pub message: String,
}

impl Diagnostic {
    fn new(key: &str, message: impl Into<String>) -> Self {
        Self {
            key: key.to_string(),
            message: message.into(),
        }
    }
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.key, self.message)
    }
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| SimError::Config(e.to_string()))
    }

    /// Load from a JSON file, resolving an MCS CSV override relative to
    /// the config file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let mut cfg = Self::from_json_str(&text)?;
        if let Some(csv_rel) = &cfg.mcs_table_csv {
            let csv_path = match path.parent() {
                Some(dir) if !Path::new(csv_rel).is_absolute() => dir.join(csv_rel),
                _ => Path::new(csv_rel).to_path_buf(),
            };
            let csv_text = std::fs::read_to_string(&csv_path).map_err(|e| SimError::Io {
                path: csv_path.display().to_string(),
                source: e,
            })?;
            cfg.radio.mcs = McsTable::from_csv_str(&csv_text)?;
        }
        Ok(cfg)
    }

    /// Structural validation. An empty list means the config is runnable.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let sc = &self.scenario;
        if !(sc.area_side_m > 0.0) {
            out.push(Diagnostic::new("scenario.area_side_m", "must be positive"));
        }
        if !(sc.macro_isd_m > 0.0) {
            out.push(Diagnostic::new("scenario.macro_isd_m", "must be positive"));
        } else if sc.macro_isd_m > sc.area_side_m {
            out.push(Diagnostic::new(
                "scenario.macro_isd_m",
                "evaluation cell must fit inside the area",
            ));
        }
        if sc.sc_n_sectors != 3 && sc.sc_n_sectors != 4 {
            out.push(Diagnostic::new(
                "scenario.sc_n_sectors",
                "small cells carry 3 or 4 sectors",
            ));
        }
        if !(sc.min_separation_m >= 0.0) {
            out.push(Diagnostic::new(
                "scenario.min_separation_m",
                "must be nonnegative",
            ));
        }
        if !(sc.mean_user_demand_bps >= 0.0) {
            out.push(Diagnostic::new(
                "scenario.mean_user_demand_bps",
                "must be nonnegative",
            ));
        }
        if !(sc.macro_height_m > 0.0) || !(sc.sc_height_m > 0.0) {
            out.push(Diagnostic::new(
                "scenario.macro_height_m",
                "antenna heights must be positive",
            ));
        }

        if let Some(profile) = &self.traffic {
            if let Err(SimError::InvalidParameter { name, reason }) = profile.validate() {
                out.push(Diagnostic::new(&format!("traffic.{name}"), reason));
            }
        }

        let r = &self.radio;
        if !(r.lte_bandwidth_hz > 0.0) {
            out.push(Diagnostic::new("radio.lte_bandwidth_hz", "must be positive"));
        }
        if !(r.mmw_channel_bandwidth_hz > 0.0) {
            out.push(Diagnostic::new(
                "radio.mmw_channel_bandwidth_hz",
                "must be positive",
            ));
        }
        if r.mmw_n_channels == 0 {
            out.push(Diagnostic::new("radio.mmw_n_channels", "need at least one channel"));
        }
        if !(r.lte_carrier_hz > 0.0) || !(r.mmw_carrier_hz > 0.0) {
            out.push(Diagnostic::new("radio.mmw_carrier_hz", "carriers must be positive"));
        }
        for (key, v) in [
            ("radio.lte_tx_power_dbm", r.lte_tx_power_dbm),
            ("radio.mmw_tx_power_dbm", r.mmw_tx_power_dbm),
            ("radio.noise_density_dbm_hz", r.noise_density_dbm_hz),
            ("radio.lte_antenna_gain_dbi", r.lte_antenna_gain_dbi),
            ("radio.mmw_antenna_gain_dbi", r.mmw_antenna_gain_dbi),
            ("radio.ue_antenna_gain_dbi", r.ue_antenna_gain_dbi),
        ] {
            if !v.is_finite() {
                out.push(Diagnostic::new(key, "must be finite"));
            }
        }
        if !(r.lte_beamwidth_deg > 0.0) || !(r.mmw_beamwidth_deg > 0.0) {
            out.push(Diagnostic::new("radio.mmw_beamwidth_deg", "beamwidths must be positive"));
        }
        if !(r.mmw_breakpoint_m > 0.0) {
            out.push(Diagnostic::new("radio.mmw_breakpoint_m", "must be positive"));
        }
        if !(r.mmw_pl_exponent > 0.0) {
            out.push(Diagnostic::new("radio.mmw_pl_exponent", "must be positive"));
        }
        if !(r.mmw_absorption_db_per_km >= 0.0) {
            out.push(Diagnostic::new(
                "radio.mmw_absorption_db_per_km",
                "must be nonnegative",
            ));
        }
        if !(r.lte_se_cap_bps_hz > 0.0) {
            out.push(Diagnostic::new("radio.lte_se_cap_bps_hz", "must be positive"));
        }
        if !(r.user_height_m > 0.0) {
            out.push(Diagnostic::new("radio.user_height_m", "must be positive"));
        }
        if let Err(e) = r.mcs.validate() {
            out.push(Diagnostic::new("radio.mcs", e.to_string()));
        }

        if let Err(SimError::InvalidParameter { reason, .. }) = self.power.validate() {
            out.push(Diagnostic::new("power.p_off_w", reason));
        }

        let ll = &self.linklevel;
        if let Err(SimError::InvalidParameter { name, reason }) = ll.params.validate() {
            out.push(Diagnostic::new(&format!("linklevel.{name}"), reason));
        }
        if ll.n_draws == 0 {
            out.push(Diagnostic::new("linklevel.n_draws", "need at least one draw"));
        }
        if !(ll.snr_step_db > 0.0) {
            out.push(Diagnostic::new("linklevel.snr_step_db", "must be positive"));
        }
        if ll.snr_stop_db < ll.snr_start_db {
            out.push(Diagnostic::new(
                "linklevel.snr_stop_db",
                "sweep stop must not precede start",
            ));
        }

        if self.policies.is_empty() {
            out.push(Diagnostic::new("policies", "need at least one policy"));
        }
        if self.hours.is_empty() {
            out.push(Diagnostic::new("hours", "need at least one hour"));
        }
        for h in &self.hours {
            if *h > 23 {
                out.push(Diagnostic::new("hours", format!("hour {h} out of range 0..=23")));
                break;
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        if self.hours.iter().any(|h| !seen.insert(*h)) {
            out.push(Diagnostic::new("hours", "hours must be unique"));
        }
        out
    }
}

/// Validate a config file. Parse failures become a single diagnostic;
/// an unreadable file is an error.
pub fn validate_config_file(path: &Path) -> Result<Vec<Diagnostic>> {
    match ExperimentConfig::load(path) {
        Ok(cfg) => Ok(cfg.validate()),
        Err(SimError::Config(msg)) => Ok(vec![Diagnostic::new("$", msg)]),
        Err(SimError::McsTable(msg)) => Ok(vec![Diagnostic::new("mcs_table_csv", msg)]),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_clean() {
        let cfg = ExperimentConfig::default();
        let diags = cfg.validate();
        assert!(diags.is_empty(), "{diags:?}");
    }

    #[test]
    fn default_roundtrips_through_json() {
        let cfg = ExperimentConfig::default();
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        let back = ExperimentConfig::from_json_str(&text).unwrap();
        assert_eq!(cfg, back);
        // An empty document is also a valid (all-default) config.
        let empty = ExperimentConfig::from_json_str("{}").unwrap();
        assert_eq!(empty, cfg);
    }

    #[test]
    fn inverted_power_model_is_flagged() {
        let mut cfg = ExperimentConfig::default();
        cfg.power = PowerModel::new_unchecked(0.5, 6.0);
        let diags = cfg.validate();
        assert_eq!(diags.len(), 1);
        assert!(diags[0].key.contains("power.p_off"), "{:?}", diags[0]);
    }

    #[test]
    fn nine_carriers_are_flagged_with_the_cap() {
        let mut cfg = ExperimentConfig::default();
        cfg.linklevel.params.n_cc = 9;
        let diags = cfg.validate();
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].key, "linklevel.n_cc");
        assert!(diags[0].message.contains("8"), "{:?}", diags[0]);
    }

    #[test]
    fn bad_hours_and_policies_flagged() {
        let mut cfg = ExperimentConfig::default();
        cfg.policies.clear();
        cfg.hours = vec![3, 3, 25];
        let keys: Vec<String> = cfg.validate().into_iter().map(|d| d.key).collect();
        assert!(keys.contains(&"policies".to_string()));
        assert!(keys.iter().filter(|k| *k == "hours").count() >= 2);
    }

    #[test]
    fn malformed_json_yields_config_error() {
        assert!(matches!(
            ExperimentConfig::from_json_str("{ not json"),
            Err(SimError::Config(_))
        ));
    }

    #[test]
    fn validate_never_panics_on_fuzzed_values() {
        // Hostile numeric corners must produce diagnostics, not panics.
        for v in [f64::NAN, f64::INFINITY, f64::NEG_INFINITY, -1.0, 0.0] {
            let mut cfg = ExperimentConfig::default();
            cfg.scenario.area_side_m = v;
            cfg.scenario.mean_user_demand_bps = v;
            cfg.radio.mmw_channel_bandwidth_hz = v;
            cfg.radio.lte_tx_power_dbm = v;
            cfg.power = PowerModel::new_unchecked(v, v);
            cfg.linklevel.params.code_rate = v;
            cfg.linklevel.snr_step_db = v;
            let diags = cfg.validate();
            assert!(!diags.is_empty());
        }
    }
}
