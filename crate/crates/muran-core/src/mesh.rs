//! Sector ON/OFF management and backhaul path formation.
//!
//! The network-centric policy runs the three-step algorithm:
//! (i) offload users to LTE while resource blocks last and switch every
//! small-cell sector without assigned demand off; (ii) route the
//! remaining per-cell demand to the gateway over links between active
//! nodes, preferring paths that switch on the fewest additional sectors
//! and splitting flows when a link saturates; (iii) reactivate switched-
//! off cells as relays until every isolated cell has a feasible route,
//! reactivating as few nodes as the greedy search manages.
//!
//! The baselines: user-centric switches on every small cell covering at
//! least one user regardless of demand; always-on keeps every sector on.
//! Both then form backhaul paths the same way.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use serde::{Deserialize, Serialize};

use crate::radio::{access_snr, link_rate, LinkBudget, LinkKind, RadioParams};
use crate::scenario::{Scenario, SiteId, SiteKind, TrafficSnapshot, UserId};

/// Small-cell activation policy.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    NetworkCentric,
    UserCentric,
    AlwaysOn,
}

impl Policy {
    pub const ALL: [Policy; 3] = [Policy::NetworkCentric, Policy::UserCentric, Policy::AlwaysOn];

    pub fn label(&self) -> &'static str {
        match self {
            Policy::NetworkCentric => "network_centric",
            Policy::UserCentric => "user_centric",
            Policy::AlwaysOn => "always_on",
        }
    }
}

impl std::fmt::Display for Policy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Policy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "network_centric" => Ok(Policy::NetworkCentric),
            "user_centric" => Ok(Policy::UserCentric),
            "always_on" => Ok(Policy::AlwaysOn),
            other => Err(format!(
                "unknown policy {other:?} (expected network_centric, user_centric or always_on)"
            )),
        }
    }
}

/// One small-cell sector.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct SectorRef {
    pub site: SiteId,
    pub sector: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct SectorEntry {
    site: SiteId,
    sector: u8,
    on: bool,
}

/// ON/OFF status of every small-cell sector. The macro BS (gateway) is
/// always on and is not represented here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<SectorEntry>", into = "Vec<SectorEntry>")]
pub struct OnOffConfig {
    status: BTreeMap<SectorRef, bool>,
}

impl From<Vec<SectorEntry>> for OnOffConfig {
    fn from(v: Vec<SectorEntry>) -> Self {
        Self {
            status: v
                .into_iter()
                .map(|e| (SectorRef { site: e.site, sector: e.sector }, e.on))
                .collect(),
        }
    }
}

impl From<OnOffConfig> for Vec<SectorEntry> {
    fn from(c: OnOffConfig) -> Self {
        c.status
            .into_iter()
            .map(|(k, on)| SectorEntry { site: k.site, sector: k.sector, on })
            .collect()
    }
}

impl OnOffConfig {
    pub fn all_off(scenario: &Scenario) -> Self {
        Self::with_state(scenario, false)
    }

    pub fn all_on(scenario: &Scenario) -> Self {
        Self::with_state(scenario, true)
    }

    fn with_state(scenario: &Scenario, on: bool) -> Self {
        let mut status = BTreeMap::new();
        for site in scenario.sc_sites() {
            for k in 0..site.n_sectors {
                status.insert(SectorRef { site: site.id, sector: k }, on);
            }
        }
        Self { status }
    }

    pub fn set_on(&mut self, sector: SectorRef) {
        if let Some(v) = self.status.get_mut(&sector) {
            *v = true;
        }
    }

    pub fn is_on(&self, sector: SectorRef) -> bool {
        self.status.get(&sector).copied().unwrap_or(false)
    }

    pub fn site_active(&self, site: SiteId) -> bool {
        self.status
            .range(
                SectorRef { site, sector: 0 }..=SectorRef { site, sector: u8::MAX },
            )
            .any(|(_, on)| *on)
    }

    pub fn n_sectors_on(&self) -> usize {
        self.status.values().filter(|on| **on).count()
    }

    pub fn n_sectors_total(&self) -> usize {
        self.status.len()
    }

    /// Small cells with at least one sector on.
    pub fn active_sites(&self) -> BTreeSet<SiteId> {
        self.status
            .iter()
            .filter(|(_, on)| **on)
            .map(|(k, _)| k.site)
            .collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (SectorRef, bool)> + '_ {
        self.status.iter().map(|(k, v)| (*k, *v))
    }
}

/// Where a user is served.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ServingChoice {
    Lte,
    ScBs(SectorRef),
    Unserved,
}

/// Per-user access assignment and the per-site admitted access rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub serving: BTreeMap<UserId, ServingChoice>,
    /// Access-served rate per user, bps.
    pub served_bps: BTreeMap<UserId, u64>,
    /// Admitted access rate per site (macro carries the LTE total).
    pub site_admitted_bps: BTreeMap<SiteId, u64>,
}

impl Assignment {
    fn empty() -> Self {
        Self {
            serving: BTreeMap::new(),
            served_bps: BTreeMap::new(),
            site_admitted_bps: BTreeMap::new(),
        }
    }

    pub fn lte_served_bps(&self) -> u64 {
        self.serving
            .iter()
            .filter(|(_, c)| matches!(c, ServingChoice::Lte))
            .map(|(u, _)| self.served_bps.get(u).copied().unwrap_or(0))
            .sum()
    }
}

/// Directed backhaul link, oriented from the gateway side toward the
/// serving small cell (the direction traffic is delivered).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BhLink {
    pub from: SiteId,
    pub to: SiteId,
    pub capacity_bps: u64,
    pub flow_bps: u64,
}

/// Backhaul mesh: gateway plus active small cells, flow-carrying links,
/// and per-cell hauled demand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackhaulGraph {
    pub nodes: Vec<SiteId>,
    pub links: Vec<BhLink>,
    /// Access-served demand each small cell needs hauled, bps.
    pub origin_bps: BTreeMap<SiteId, u64>,
    /// Demand actually routed to the gateway per small cell, bps.
    pub routed_bps: BTreeMap<SiteId, u64>,
    /// Active cells with demand but no feasible route at all.
    pub isolated: BTreeSet<SiteId>,
}

impl BackhaulGraph {
    pub fn total_routed_bps(&self) -> u64 {
        self.routed_bps.values().sum()
    }
}

/// Full state of the mesh for one policy at one hour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshState {
    pub policy: Policy,
    pub hour: u8,
    pub onoff: OnOffConfig,
    pub graph: BackhaulGraph,
    pub assignment: Assignment,
    pub offered_bps: u64,
    pub served_bps: u64,
    pub satisfied_fraction: f64,
}

impl MeshState {
    pub fn active_sc_count(&self) -> usize {
        self.onoff.active_sites().len()
    }
}

fn demand_map(snapshot: &TrafficSnapshot) -> BTreeMap<UserId, u64> {
    snapshot
        .demands
        .iter()
        .map(|(u, d)| (*u, d.round() as u64))
        .collect()
}

/// Best small-cell sector for a user by access SNR; ties go to the
/// lower site id. None if no small cell can reach the user at all.
fn best_sc_sector(
    scenario: &Scenario,
    user_id: UserId,
    params: &RadioParams,
) -> Option<(SectorRef, u64)> {
    let user = &scenario.users[user_id.0 as usize];
    let mut best: Option<(f64, SectorRef, u64)> = None;
    for site in scenario.sc_sites() {
        let snr = match access_snr(site, user, params, LinkKind::MmwLink) {
            Ok(s) => s,
            Err(_) => continue,
        };
        let rate = link_rate(snr, LinkKind::MmwLink, params);
        if rate == 0 {
            continue;
        }
        let better = match &best {
            None => true,
            Some((best_snr, _, _)) => snr > *best_snr,
        };
        if better {
            let az = site.position.azimuth_deg_to(&user.position);
            let sector = SectorRef { site: site.id, sector: site.sector_toward(az) };
            best = Some((snr, sector, rate));
        }
    }
    best.map(|(_, sector, rate)| (sector, rate))
}

/// Shared per-sector airtime admission: users already mapped to their
/// sector are admitted in ascending-demand order while the sector's
/// airtime budget lasts; the marginal user may be served partially.
fn admit_mmwave(
    demands: &BTreeMap<UserId, u64>,
    picks: &BTreeMap<UserId, (SectorRef, u64)>,
    assignment: &mut Assignment,
) {
    let mut by_sector: BTreeMap<SectorRef, Vec<UserId>> = BTreeMap::new();
    for (user, (sector, _)) in picks {
        by_sector.entry(*sector).or_default().push(*user);
    }
    for (sector, mut users) in by_sector {
        users.sort_by_key(|u| (demands[u], *u));
        let mut budget = 1.0f64;
        for user in users {
            let demand = demands[&user];
            let rate = picks[&user].1;
            if demand == 0 {
                assignment.serving.insert(user, ServingChoice::ScBs(sector));
                assignment.served_bps.insert(user, 0);
                continue;
            }
            let need = demand as f64 / rate as f64;
            let served = if need <= budget {
                budget -= need;
                demand
            } else {
                let partial = (budget * rate as f64).floor() as u64;
                budget = 0.0;
                partial.min(demand)
            };
            if served > 0 {
                assignment.serving.insert(user, ServingChoice::ScBs(sector));
                assignment.served_bps.insert(user, served);
                *assignment.site_admitted_bps.entry(sector.site).or_insert(0) += served;
            } else {
                assignment.serving.insert(user, ServingChoice::Unserved);
                assignment.served_bps.insert(user, 0);
            }
        }
    }
}

/// Step (i): LTE offload in ascending-demand order within the macro's
/// resource-block budget; everyone else activates their best small-cell
/// sector. Sectors with zero served demand stay off.
pub fn step_initial_onoff(
    scenario: &Scenario,
    snapshot: &TrafficSnapshot,
    params: &RadioParams,
) -> (OnOffConfig, Assignment) {
    let demands = demand_map(snapshot);
    let mut assignment = Assignment::empty();
    let gateway = scenario.gateway();

    let mut order: Vec<UserId> = scenario.users.iter().map(|u| u.id).collect();
    order.sort_by_key(|u| (demands[u], *u));

    // Resource-block budget: each admitted user consumes the fraction
    // demand/rate of the shared carrier, with per-user SINR-capped rates.
    let mut lte_budget = 1.0f64;
    let mut lte_users: BTreeSet<UserId> = BTreeSet::new();
    for user_id in &order {
        let demand = demands[user_id];
        if demand == 0 {
            lte_users.insert(*user_id);
            continue;
        }
        let user = &scenario.users[user_id.0 as usize];
        let snr = match access_snr(gateway, user, params, LinkKind::LteAccess) {
            Ok(s) => s,
            Err(_) => continue,
        };
        let rate = link_rate(snr, LinkKind::LteAccess, params);
        if rate == 0 {
            continue;
        }
        let need = demand as f64 / rate as f64;
        if need <= lte_budget {
            lte_budget -= need;
            lte_users.insert(*user_id);
        }
    }

    let mut lte_total = 0u64;
    for user_id in &lte_users {
        assignment.serving.insert(*user_id, ServingChoice::Lte);
        assignment.served_bps.insert(*user_id, demands[user_id]);
        lte_total += demands[user_id];
    }
    if lte_total > 0 {
        assignment.site_admitted_bps.insert(gateway.id, lte_total);
    }

    // Remaining users activate their best-SINR small-cell sector.
    let mut picks: BTreeMap<UserId, (SectorRef, u64)> = BTreeMap::new();
    for user in &scenario.users {
        if lte_users.contains(&user.id) {
            continue;
        }
        match best_sc_sector(scenario, user.id, params) {
            Some(pick) => {
                picks.insert(user.id, pick);
            }
            None => {
                assignment.serving.insert(user.id, ServingChoice::Unserved);
                assignment.served_bps.insert(user.id, 0);
            }
        }
    }
    admit_mmwave(&demands, &picks, &mut assignment);

    let mut onoff = OnOffConfig::all_off(scenario);
    for (user, choice) in assignment.serving.clone() {
        if let ServingChoice::ScBs(sector) = choice {
            if assignment.served_bps.get(&user).copied().unwrap_or(0) > 0 {
                onoff.set_on(sector);
            }
        }
    }
    (onoff, assignment)
}

/// User-centric baseline activation: every small cell with at least one
/// user in its best-SINR coverage is switched on (the covering sector),
/// regardless of demand; users are then admitted on those sectors.
fn user_centric_onoff(
    scenario: &Scenario,
    snapshot: &TrafficSnapshot,
    params: &RadioParams,
) -> (OnOffConfig, Assignment) {
    let demands = demand_map(snapshot);
    let mut assignment = Assignment::empty();
    let mut onoff = OnOffConfig::all_off(scenario);
    let mut picks: BTreeMap<UserId, (SectorRef, u64)> = BTreeMap::new();
    for user in &scenario.users {
        match best_sc_sector(scenario, user.id, params) {
            Some((sector, rate)) => {
                onoff.set_on(sector);
                picks.insert(user.id, (sector, rate));
            }
            None => {
                assignment.serving.insert(user.id, ServingChoice::Unserved);
                assignment.served_bps.insert(user.id, 0);
            }
        }
    }
    admit_mmwave(&demands, &picks, &mut assignment);
    (onoff, assignment)
}

/// mmWave-only association used by the always-on baseline.
fn mmwave_association(
    scenario: &Scenario,
    snapshot: &TrafficSnapshot,
    params: &RadioParams,
) -> Assignment {
    let demands = demand_map(snapshot);
    let mut assignment = Assignment::empty();
    let mut picks: BTreeMap<UserId, (SectorRef, u64)> = BTreeMap::new();
    for user in &scenario.users {
        match best_sc_sector(scenario, user.id, params) {
            Some(pick) => {
                picks.insert(user.id, pick);
            }
            None => {
                assignment.serving.insert(user.id, ServingChoice::Unserved);
                assignment.served_bps.insert(user.id, 0);
            }
        }
    }
    admit_mmwave(&demands, &picks, &mut assignment);
    assignment
}

/// Additive lexicographic path cost: newly activated sectors first, then
/// reactivated (off) nodes entered, then hops, then distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default)]
struct Cost {
    off_nodes: u32,
    sectors: u32,
    hops: u32,
    dist_mm: u64,
}

impl Cost {
    fn add(self, other: Cost) -> Cost {
        Cost {
            off_nodes: self.off_nodes + other.off_nodes,
            sectors: self.sectors + other.sectors,
            hops: self.hops + other.hops,
            dist_mm: self.dist_mm + other.dist_mm,
        }
    }
}

/// Precomputed mesh geometry: pairwise link capacities among the
/// gateway and every small cell, plus the sector each node uses toward
/// each neighbor. Site ids index `scenario.sites` directly.
struct MeshNet<'a> {
    scenario: &'a Scenario,
    gw: usize,
    cap: Vec<Vec<u64>>,
    sector_toward: Vec<Vec<u8>>,
    dist_mm: Vec<Vec<u64>>,
}

impl<'a> MeshNet<'a> {
    fn build(scenario: &'a Scenario, params: &RadioParams) -> Self {
        let n = scenario.sites.len();
        debug_assert!(scenario
            .sites
            .iter()
            .enumerate()
            .all(|(i, s)| s.id.0 as usize == i));
        let gw = scenario
            .sites
            .iter()
            .position(|s| s.is_gateway)
            .expect("scenario has a gateway");
        let mut cap = vec![vec![0u64; n]; n];
        let mut sector_toward = vec![vec![0u8; n]; n];
        let mut dist_mm = vec![vec![0u64; n]; n];
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let a = &scenario.sites[i];
                let b = &scenario.sites[j];
                sector_toward[i][j] = a.sector_toward(a.position.azimuth_deg_to(&b.position));
                dist_mm[i][j] = (a.position.distance_to(&b.position) * 1000.0) as u64;
                if let Ok(budget) = LinkBudget::between(a, b, params, LinkKind::MmwLink) {
                    cap[i][j] = budget.rate_bps;
                }
            }
        }
        Self { scenario, gw, cap, sector_toward, dist_mm }
    }

    fn sector_ref(&self, node: usize, toward: usize) -> SectorRef {
        SectorRef {
            site: self.scenario.sites[node].id,
            sector: self.sector_toward[node][toward],
        }
    }

    /// Cost of sending over edge i -> j given current sector states.
    fn edge_cost(&self, i: usize, j: usize, onoff: &OnOffConfig, usable: &[bool]) -> Cost {
        let mut sectors = 0;
        if i != self.gw && !onoff.is_on(self.sector_ref(i, j)) {
            sectors += 1;
        }
        if j != self.gw && !onoff.is_on(self.sector_ref(j, i)) {
            sectors += 1;
        }
        Cost {
            off_nodes: if usable[j] { 0 } else { 1 },
            sectors,
            hops: 1,
            dist_mm: self.dist_mm[i][j],
        }
    }

    /// Deterministic Dijkstra from `src` to the gateway over edges with
    /// positive residual capacity. Relay nodes must be usable unless
    /// `allow_off` is set, in which case entering a non-usable node is
    /// permitted but counted first in the cost.
    fn shortest_path(
        &self,
        flow: &[Vec<u64>],
        onoff: &OnOffConfig,
        usable: &[bool],
        allow_off: bool,
        src: usize,
    ) -> Option<(Vec<usize>, Cost)> {
        let n = self.cap.len();
        let mut best: Vec<Option<Cost>> = vec![None; n];
        let mut prev: Vec<usize> = vec![usize::MAX; n];
        let mut heap = BinaryHeap::new();
        best[src] = Some(Cost::default());
        heap.push(Reverse((Cost::default(), src)));
        while let Some(Reverse((cost, node))) = heap.pop() {
            if best[node] != Some(cost) {
                continue;
            }
            if node == self.gw {
                let mut path = vec![node];
                let mut cur = node;
                while cur != src {
                    cur = prev[cur];
                    path.push(cur);
                }
                path.reverse();
                return Some((path, cost));
            }
            for next in 0..n {
                if next == node || next == src {
                    continue;
                }
                if self.cap[node][next] <= flow[node][next] {
                    continue;
                }
                if !usable[next] && !(allow_off && self.scenario.sites[next].kind == SiteKind::ScBs)
                {
                    continue;
                }
                let cand = cost.add(self.edge_cost(node, next, onoff, usable));
                if best[next].map_or(true, |b| cand < b) {
                    best[next] = Some(cand);
                    prev[next] = node;
                    heap.push(Reverse((cand, next)));
                }
            }
        }
        None
    }
}

/// Mutable routing state shared by steps (ii) and (iii).
struct RouteState {
    usable: Vec<bool>,
    flow_up: Vec<Vec<u64>>,
    onoff: OnOffConfig,
    origin: BTreeMap<SiteId, u64>,
    routed: BTreeMap<SiteId, u64>,
}

impl RouteState {
    fn remaining(&self, site: SiteId) -> u64 {
        self.origin.get(&site).copied().unwrap_or(0)
            - self.routed.get(&site).copied().unwrap_or(0)
    }

    /// Push as much of `site`'s remaining demand as possible along
    /// successive cheapest paths. Returns the amount newly routed.
    fn route(&mut self, net: &MeshNet, site: SiteId) -> u64 {
        let src = site.0 as usize;
        let mut moved = 0u64;
        loop {
            let remaining = self.remaining(site);
            if remaining == 0 {
                break;
            }
            let Some((path, _)) = net.shortest_path(
                &self.flow_up,
                &self.onoff,
                &self.usable,
                false,
                src,
            ) else {
                break;
            };
            let mut bottleneck = u64::MAX;
            for w in path.windows(2) {
                bottleneck = bottleneck.min(net.cap[w[0]][w[1]] - self.flow_up[w[0]][w[1]]);
            }
            let amount = remaining.min(bottleneck);
            debug_assert!(amount > 0);
            for w in path.windows(2) {
                self.flow_up[w[0]][w[1]] += amount;
                if w[0] != net.gw {
                    self.onoff.set_on(net.sector_ref(w[0], w[1]));
                }
                if w[1] != net.gw {
                    self.onoff.set_on(net.sector_ref(w[1], w[0]));
                }
            }
            *self.routed.entry(site).or_insert(0) += amount;
            moved += amount;
        }
        moved
    }

    fn build_graph(&self, net: &MeshNet) -> BackhaulGraph {
        let mut nodes: Vec<SiteId> = vec![net.scenario.sites[net.gw].id];
        for (i, u) in self.usable.iter().enumerate() {
            if *u && i != net.gw {
                nodes.push(net.scenario.sites[i].id);
            }
        }
        let mut links = Vec::new();
        let n = net.cap.len();
        for i in 0..n {
            for j in 0..n {
                let f = self.flow_up[i][j];
                if f > 0 {
                    // Emit in delivery orientation: gateway side first.
                    links.push(BhLink {
                        from: net.scenario.sites[j].id,
                        to: net.scenario.sites[i].id,
                        capacity_bps: net.cap[j][i],
                        flow_bps: f,
                    });
                }
            }
        }
        links.sort_by_key(|l| (l.from, l.to));
        let isolated = self
            .origin
            .iter()
            .filter(|(site, d)| {
                **d > 0 && self.routed.get(site).copied().unwrap_or(0) == 0
            })
            .map(|(site, _)| *site)
            .collect();
        BackhaulGraph {
            nodes,
            links,
            origin_bps: self.origin.clone(),
            routed_bps: self.routed.clone(),
            isolated,
        }
    }

    /// Rebuild internal state from a previously returned graph.
    fn from_graph(net: &MeshNet, graph: &BackhaulGraph, onoff: &OnOffConfig) -> Self {
        let n = net.cap.len();
        let mut usable = vec![false; n];
        usable[net.gw] = true;
        for node in &graph.nodes {
            usable[node.0 as usize] = true;
        }
        let mut flow_up = vec![vec![0u64; n]; n];
        for link in &graph.links {
            // Links are stored in delivery orientation; uplink is reversed.
            flow_up[link.to.0 as usize][link.from.0 as usize] = link.flow_bps;
        }
        Self {
            usable,
            flow_up,
            onoff: onoff.clone(),
            origin: graph.origin_bps.clone(),
            routed: graph.routed_bps.clone(),
        }
    }
}

/// Deterministic source order: heaviest remaining demand first.
fn source_order(state: &RouteState) -> Vec<SiteId> {
    let mut sources: Vec<SiteId> = state
        .origin
        .iter()
        .filter(|(_, d)| **d > 0)
        .map(|(s, _)| *s)
        .collect();
    sources.sort_by_key(|s| (Reverse(state.origin[s]), *s));
    sources
}

/// Step (ii): route every active cell's admitted demand to the gateway
/// over links between active nodes only. Path cost prefers switching on
/// the fewest new sectors, then fewer hops, then shorter distance;
/// demand splits across successive paths when a link saturates.
/// Cells with no feasible route at all are marked isolated.
pub fn step_path_creation(
    scenario: &Scenario,
    onoff: &OnOffConfig,
    assignment: &Assignment,
    params: &RadioParams,
) -> (BackhaulGraph, OnOffConfig) {
    let net = MeshNet::build(scenario, params);
    let n = scenario.sites.len();
    let mut usable = vec![false; n];
    usable[net.gw] = true;
    for site in onoff.active_sites() {
        usable[site.0 as usize] = true;
    }
    let origin: BTreeMap<SiteId, u64> = scenario
        .sc_sites()
        .filter_map(|s| {
            assignment
                .site_admitted_bps
                .get(&s.id)
                .copied()
                .filter(|d| *d > 0)
                .map(|d| (s.id, d))
        })
        .collect();
    let mut state = RouteState {
        usable,
        flow_up: vec![vec![0u64; n]; n],
        onoff: onoff.clone(),
        origin,
        routed: BTreeMap::new(),
    };
    for site in source_order(&state) {
        state.route(&net, site);
    }
    let graph = state.build_graph(&net);
    (graph, state.onoff)
}

/// Step (iii): reactivate switched-off cells as relays until every
/// isolated cell gains a feasible route. Greedy: prefer the single off
/// node reconnecting the most isolated cells (ties: fewer sectors
/// switched on, then lower id); when no single node helps, activate the
/// whole relay set on the cheapest multi-relay path. Cells that cannot
/// be connected even with every node active stay isolated.
pub fn step_reactivation(
    scenario: &Scenario,
    graph: &BackhaulGraph,
    onoff: &OnOffConfig,
    params: &RadioParams,
) -> (OnOffConfig, BackhaulGraph) {
    if graph.isolated.is_empty() {
        return (onoff.clone(), graph.clone());
    }
    let net = MeshNet::build(scenario, params);
    let mut state = RouteState::from_graph(&net, graph, onoff);

    loop {
        let isolated: Vec<SiteId> = state
            .origin
            .keys()
            .filter(|s| state.remaining(**s) > 0 && state.routed.get(*s).copied().unwrap_or(0) == 0)
            .copied()
            .collect();
        if isolated.is_empty() {
            break;
        }

        // Score single off-node candidates by how many isolated cells a
        // sole reactivation would reconnect.
        let candidates: Vec<usize> = scenario
            .sc_sites()
            .map(|s| s.id.0 as usize)
            .filter(|i| !state.usable[*i])
            .collect();
        let mut best: Option<(usize, usize, usize)> = None; // (count, sectors, node)
        for &cand in &candidates {
            let mut usable = state.usable.clone();
            usable[cand] = true;
            let mut count = 0usize;
            let mut sectors_used: BTreeSet<SectorRef> = BTreeSet::new();
            for site in &isolated {
                if let Some((path, _)) = net.shortest_path(
                    &state.flow_up,
                    &state.onoff,
                    &usable,
                    false,
                    site.0 as usize,
                ) {
                    count += 1;
                    for w in path.windows(2) {
                        for (a, b) in [(w[0], w[1]), (w[1], w[0])] {
                            if a == cand && !state.onoff.is_on(net.sector_ref(a, b)) {
                                sectors_used.insert(net.sector_ref(a, b));
                            }
                        }
                    }
                }
            }
            if count > 0 {
                let entry = (count, sectors_used.len(), cand);
                let better = match best {
                    None => true,
                    Some((bc, bs, bn)) => {
                        (Reverse(count), sectors_used.len(), cand)
                            < (Reverse(bc), bs, bn)
                    }
                };
                if better {
                    best = Some(entry);
                }
            }
        }

        if let Some((_, _, node)) = best {
            state.usable[node] = true;
            let mut order: Vec<SiteId> = isolated.clone();
            order.sort_by_key(|s| (Reverse(state.remaining(*s)), *s));
            for site in order {
                state.route(&net, site);
            }
            continue;
        }

        // No single reactivation reconnects anything; fall back to the
        // cheapest multi-relay path over all off nodes.
        let mut pick: Option<(Cost, SiteId, Vec<usize>)> = None;
        for site in &isolated {
            if let Some((path, cost)) = net.shortest_path(
                &state.flow_up,
                &state.onoff,
                &state.usable,
                true,
                site.0 as usize,
            ) {
                let better = match &pick {
                    None => true,
                    Some((c, s, _)) => (cost, *site) < (*c, *s),
                };
                if better {
                    pick = Some((cost, *site, path));
                }
            }
        }
        match pick {
            Some((_, site, path)) => {
                for node in &path {
                    state.usable[*node] = true;
                }
                state.route(&net, site);
                // Routing must succeed now that the path nodes are usable.
                debug_assert!(state.routed.get(&site).copied().unwrap_or(0) > 0);
            }
            None => break, // nothing reachable even with every node on
        }
    }

    let graph = state.build_graph(&net);
    (state.onoff, graph)
}

/// Run one policy on one traffic snapshot.
pub fn run_policy(
    policy: Policy,
    scenario: &Scenario,
    snapshot: &TrafficSnapshot,
    params: &RadioParams,
) -> MeshState {
    let (onoff, assignment, reactivate) = match policy {
        Policy::NetworkCentric => {
            let (onoff, assignment) = step_initial_onoff(scenario, snapshot, params);
            (onoff, assignment, true)
        }
        Policy::UserCentric => {
            let (onoff, assignment) = user_centric_onoff(scenario, snapshot, params);
            (onoff, assignment, true)
        }
        Policy::AlwaysOn => {
            let assignment = mmwave_association(scenario, snapshot, params);
            (OnOffConfig::all_on(scenario), assignment, false)
        }
    };

    let (graph, onoff) = step_path_creation(scenario, &onoff, &assignment, params);
    let (onoff, graph) = if reactivate {
        step_reactivation(scenario, &graph, &onoff, params)
    } else {
        (onoff, graph)
    };

    let demands = demand_map(snapshot);
    let offered: u64 = demands.values().sum();
    let served = assignment.lte_served_bps() + graph.total_routed_bps();
    let satisfied_fraction = if offered == 0 {
        1.0
    } else {
        served as f64 / offered as f64
    };
    MeshState {
        policy,
        hour: snapshot.hour,
        onoff,
        graph,
        assignment,
        offered_bps: offered,
        served_bps: served,
        satisfied_fraction,
    }
}
