//! Experiment orchestration: runs the hour x policy matrix, the optional
//! link-level sweep, and writes all artifacts (CSV/JSON) atomically.
//!
//! Output layout under the chosen directory:
//! - `energy.csv`        one row per simulated hour and policy
//! - `summary.csv`       daily watt-hours and reduction ratios (full-day runs)
//! - `topology/hHH_<policy>.json`  mesh snapshot per hour and policy
//! - `linklevel.csv`     SNR sweep (when enabled)
//! - `scenario.json`     the generated world
//! - `manifest.json`     config hash, artifact checksums, timings
//!
//! Everything except the manifest's wall-clock timing is a pure function
//! of (config, seed); serial and parallel execution write identical bytes.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::energy::daily_energy;
use crate::energy::config_power;
use crate::error::{Result, SimError};
use crate::linklevel::{snr_grid, sweep_snr};
use crate::mesh::{run_policy, MeshState, Policy};
use crate::scenario::{
    generate_scenario, sample_traffic, Scenario, SiteId, SiteKind, TrafficProfile,
};
use crate::seed::child_seed;

/// Execution options that do not affect results.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub parallel: bool,
}

/// Provenance record for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_sha256: String,
    pub tool_version: String,
    /// Artifact file name -> SHA-256 of its bytes.
    pub outputs: BTreeMap<String, String>,
    /// Wall-clock duration; the only non-reproducible field.
    pub wall_ms: u64,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn write_atomic(out_dir: &Path, rel_name: &str, bytes: &[u8]) -> Result<()> {
    let target = out_dir.join(rel_name);
    if let Some(parent) = target.parent() {
        std::fs::create_dir_all(parent).map_err(|e| SimError::Io {
            path: parent.display().to_string(),
            source: e,
        })?;
    }
    let tmp = out_dir.join(format!("{rel_name}.tmp"));
    std::fs::write(&tmp, bytes).map_err(|e| SimError::Io {
        path: tmp.display().to_string(),
        source: e,
    })?;
    std::fs::rename(&tmp, &target).map_err(|e| SimError::Io {
        path: target.display().to_string(),
        source: e,
    })
}

#[derive(Serialize)]
struct TopologyNode {
    site: u32,
    x_m: f64,
    y_m: f64,
    kind: &'static str,
    active: bool,
    origin_bps: u64,
    routed_bps: u64,
}

#[derive(Serialize)]
struct TopologySector {
    site: u32,
    sector: u8,
    on: bool,
}

#[derive(Serialize)]
struct TopologyLink {
    from: u32,
    to: u32,
    capacity_bps: u64,
    flow_bps: u64,
}

/// Plot-ready snapshot of one mesh state.
#[derive(Serialize)]
struct TopologyDoc {
    hour: u8,
    policy: Policy,
    offered_bps: u64,
    served_bps: u64,
    satisfied_fraction: f64,
    nodes: Vec<TopologyNode>,
    sectors: Vec<TopologySector>,
    links: Vec<TopologyLink>,
    isolated: Vec<u32>,
}

fn topology_doc(scenario: &Scenario, state: &MeshState) -> TopologyDoc {
    let active = state.onoff.active_sites();
    let nodes = scenario
        .sites
        .iter()
        .map(|s| TopologyNode {
            site: s.id.0,
            x_m: s.position.x_m,
            y_m: s.position.y_m,
            kind: match s.kind {
                SiteKind::MacroBs => "macro_gw",
                SiteKind::ScBs => "sc_bs",
            },
            active: s.is_gateway || active.contains(&s.id),
            origin_bps: state.graph.origin_bps.get(&s.id).copied().unwrap_or(0),
            routed_bps: state.graph.routed_bps.get(&s.id).copied().unwrap_or(0),
        })
        .collect();
    let sectors = state
        .onoff
        .iter()
        .map(|(sector, on)| TopologySector {
            site: sector.site.0,
            sector: sector.sector,
            on,
        })
        .collect();
    let links = state
        .graph
        .links
        .iter()
        .map(|l| TopologyLink {
            from: l.from.0,
            to: l.to.0,
            capacity_bps: l.capacity_bps,
            flow_bps: l.flow_bps,
        })
        .collect();
    TopologyDoc {
        hour: state.hour,
        policy: state.policy,
        offered_bps: state.offered_bps,
        served_bps: state.served_bps,
        satisfied_fraction: state.satisfied_fraction,
        nodes,
        sectors,
        links,
        isolated: state.graph.isolated.iter().map(|s| s.0).collect(),
    }
}

/// Simulate the configured hour x policy matrix. States come back
/// sorted by (hour, policy) regardless of execution order.
pub fn simulate_matrix(
    cfg: &ExperimentConfig,
    scenario: &Scenario,
    profile: &TrafficProfile,
    parallel: bool,
) -> Result<Vec<MeshState>> {
    let mut hours = cfg.hours.clone();
    hours.sort_unstable();
    hours.dedup();
    let mut policies = cfg.policies.clone();
    policies.sort_unstable();
    policies.dedup();

    let mut snapshots = BTreeMap::new();
    for &h in &hours {
        snapshots.insert(h, sample_traffic(scenario, profile, h, cfg.seed)?);
    }
    let cells: Vec<(u8, Policy)> = hours
        .iter()
        .flat_map(|h| policies.iter().map(move |p| (*h, *p)))
        .collect();

    let run_cell = |(hour, policy): &(u8, Policy)| -> MeshState {
        run_policy(*policy, scenario, &snapshots[hour], &cfg.radio)
    };
    let mut states: Vec<MeshState> = if parallel {
        cells.par_iter().map(run_cell).collect()
    } else {
        cells.iter().map(run_cell).collect()
    };
    states.sort_by_key(|s| (s.hour, s.policy));
    Ok(states)
}

fn energy_csv(
    states: &[MeshState],
    sectors: &BTreeMap<SiteId, u8>,
    cfg: &ExperimentConfig,
) -> Result<String> {
    let mut out = String::from("hour,policy,active_sectors,watts,satisfied_fraction\r\n");
    for state in states {
        let watts = config_power(&state.onoff, sectors, &cfg.power)?;
        out.push_str(&format!(
            "{},{},{},{:.6},{:.6}\r\n",
            state.hour,
            state.policy,
            state.onoff.n_sectors_on(),
            watts,
            state.satisfied_fraction
        ));
    }
    Ok(out)
}

fn summary_csv(
    states: &[MeshState],
    sectors: &BTreeMap<SiteId, u8>,
    cfg: &ExperimentConfig,
) -> Result<String> {
    let report = daily_energy(states, sectors, &cfg.power)?;
    let mut out = String::from("policy,daily_wh,reduction_vs_always_on\r\n");
    for (policy, wh) in &report.daily_wh {
        let reduction = report
            .reduction_vs_always_on
            .get(policy)
            .map(|r| format!("{r:.6}"))
            .unwrap_or_default();
        out.push_str(&format!("{},{:.6},{}\r\n", policy, wh, reduction));
    }
    Ok(out)
}

fn linklevel_csv(cfg: &ExperimentConfig) -> Result<String> {
    let ll = &cfg.linklevel;
    let grid = snr_grid(ll.snr_start_db, ll.snr_stop_db, ll.snr_step_db);
    let result = sweep_snr(
        &ll.params,
        &grid,
        ll.n_draws,
        child_seed(cfg.seed, "linklevel", &[]),
    )?;
    let mut out = String::from("snr_db,mean_se,ci95\r\n");
    for i in 0..result.snr_grid_db.len() {
        out.push_str(&format!(
            "{:.3},{:.6},{:.6}\r\n",
            result.snr_grid_db[i], result.mean_se_bps_hz[i], result.ci95[i]
        ));
    }
    Ok(out)
}

/// Run the full experiment and write all artifacts into `opts.out_dir`.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunManifest> {
    let start = Instant::now();
    let diags = cfg.validate();
    if !diags.is_empty() {
        let joined = diags
            .iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join("; ");
        return Err(SimError::Config(joined));
    }
    std::fs::create_dir_all(&opts.out_dir).map_err(|e| SimError::Io {
        path: opts.out_dir.display().to_string(),
        source: e,
    })?;

    let scenario = generate_scenario(&cfg.scenario, child_seed(cfg.seed, "scenario", &[]))?;
    let profile = cfg
        .traffic
        .clone()
        .unwrap_or_else(|| TrafficProfile::default_for_area(&scenario.area));
    profile.validate()?;

    let states = simulate_matrix(cfg, &scenario, &profile, opts.parallel)?;
    let sectors: BTreeMap<SiteId, u8> =
        scenario.sc_sites().map(|s| (s.id, s.n_sectors)).collect();

    let mut outputs = BTreeMap::new();
    let mut emit = |name: &str, bytes: &[u8]| -> Result<()> {
        write_atomic(&opts.out_dir, name, bytes)?;
        outputs.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    };

    emit("energy.csv", energy_csv(&states, &sectors, cfg)?.as_bytes())?;

    let full_day = {
        let mut hours = cfg.hours.clone();
        hours.sort_unstable();
        hours.dedup();
        hours == (0..24).collect::<Vec<u8>>()
    };
    if full_day {
        emit("summary.csv", summary_csv(&states, &sectors, cfg)?.as_bytes())?;
    } else {
        log::info!("partial-day run: skipping summary.csv");
    }

    for state in &states {
        let doc = topology_doc(&scenario, state);
        let name = format!("topology/h{:02}_{}.json", state.hour, state.policy);
        emit(&name, serde_json::to_string_pretty(&doc)?.as_bytes())?;
    }

    if cfg.linklevel.enabled {
        emit("linklevel.csv", linklevel_csv(cfg)?.as_bytes())?;
    }

    emit(
        "scenario.json",
        serde_json::to_string_pretty(&scenario)?.as_bytes(),
    )?;

    let manifest = RunManifest {
        config_sha256: sha256_hex(&serde_json::to_vec(cfg)?),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        outputs,
        wall_ms: start.elapsed().as_millis() as u64,
    };
    write_atomic(
        &opts.out_dir,
        "manifest.json",
        serde_json::to_string_pretty(&manifest)?.as_bytes(),
    )?;
    Ok(manifest)
}
