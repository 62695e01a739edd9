//! Tiered relay hierarchy, hop-limited tier-by-tier routing, and per-tier
//! throughput under MIMO spatial multiplexing or beamforming.
//!
//! Tier 1 holds the data nodes. Tier `l` thins the node count to
//! `n / l^k`, widens its band to `W_1 l^psi`, carries `M_1 l^upsilon`
//! antennas per node, and spaces cells `d_1 (l)^(k/2)` apart. A flow
//! transits a tier when its in-tier hop distance fits within the tier's
//! hop limit `D_l = ceil((1 + 1/l)^(k/2))`; otherwise it climbs to the
//! nearest node of the next tier, and descends symmetrically on the
//! destination side. The top tier always absorbs whatever reaches it.

use crate::error::{Error, Result};
use crate::lattice::{build_lattice, covering_rings, Lattice, Placement};
use crate::radio::{required_power, PathLossModel};
use crate::single_tier::{worst_case_sinr, Router};
use crate::traffic::{completion_probability, derive_seed, hop_distribution, SdPairs};

/// Per-tier growth/decay orders for node count, bandwidth, and antennas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingOrders {
    /// Node-count decay order; tier l holds `n / l^k` nodes.
    pub k: f64,
    /// Bandwidth growth order; tier l uses `W_1 l^psi`.
    pub psi: f64,
    /// Antenna growth order; tier l nodes carry `M_1 l^upsilon` antennas.
    pub upsilon: f64,
}

impl ScalingOrders {
    pub fn new(k: f64, psi: f64, upsilon: f64) -> Result<Self> {
        let orders = ScalingOrders { k, psi, upsilon };
        orders.validate()?;
        Ok(orders)
    }

    /// The node count per tier must shrink at least quadratically for the
    /// total to stay finite; bandwidth and antennas must not shrink.
    pub fn validate(&self) -> Result<()> {
        if self.k.is_nan() || self.k < 2.0 {
            return Err(Error::InvalidOrders(format!(
                "node decay order k = {} must be >= 2",
                self.k
            )));
        }
        if self.psi.is_nan() || self.psi < 1.0 {
            return Err(Error::InvalidOrders(format!(
                "bandwidth order psi = {} must be >= 1",
                self.psi
            )));
        }
        if self.upsilon.is_nan() || self.upsilon < 1.0 {
            return Err(Error::InvalidOrders(format!(
                "antenna order upsilon = {} must be >= 1",
                self.upsilon
            )));
        }
        Ok(())
    }
}

/// Tier-1 anchor parameters from which the hierarchy scales.
#[derive(Debug, Clone, Copy)]
pub struct TierBaseline {
    /// Neighbor spacing of the data tier, meters.
    pub spacing_m: f64,
    /// Data-tier bandwidth, Hz.
    pub bandwidth_hz: f64,
    /// Antennas per data node.
    pub antennas: u32,
    /// Path-loss exponent, shared by all tiers.
    pub alpha: f64,
    /// Effective gain constant, linear scale, shared by all tiers.
    pub gain: f64,
    /// Receive threshold, linear milliwatts, shared by all tiers.
    pub threshold_mw: f64,
    /// Node placement rule for every tier lattice.
    pub placement: Placement,
    /// Base seed for perturbed placements (tier index is mixed in).
    pub seed: u64,
}

/// One tier of the hierarchy.
#[derive(Debug, Clone)]
pub struct TierSpec {
    /// Tier index, 1-based.
    pub index: u32,
    /// Table-driven node count `round(n / l^k)`, floored at 1.
    pub n_target: u64,
    pub bandwidth_hz: f64,
    pub antennas: u32,
    /// Transmit power meeting the threshold at the tier spacing, mW.
    pub power_mw: f64,
    pub alpha: f64,
    pub gain: f64,
    pub threshold_mw: f64,
    /// Same-tier hop limit `D_l`.
    pub hop_limit: u32,
    /// Neighbor spacing `d_l`, meters.
    pub spacing_m: f64,
    /// Smallest hexagonal lattice covering `n_target` nodes. Its actual
    /// node count (a full ring closure) is what the simulator uses. All
    /// tier lattices share one center, like the concentric cell tilings
    /// of the hierarchy.
    pub lattice: Lattice,
}

impl TierSpec {
    /// Realized node count of the fitted lattice.
    pub fn n_actual(&self) -> u32 {
        self.lattice.len()
    }

    pub fn model(&self) -> PathLossModel {
        PathLossModel::new(self.alpha, self.gain)
    }

    /// Node position in the shared plane.
    pub fn position(&self, id: u32) -> Result<[f64; 2]> {
        self.lattice.position(id)
    }

    /// Node of this tier nearest to a point of the shared plane.
    pub fn nearest_node(&self, point: [f64; 2]) -> u32 {
        self.lattice.nearest_node(point)
    }
}

/// Number of tiers: the largest `l` with `n / l^k >= 1`.
pub fn tier_count(n: u64, k: f64) -> u32 {
    let mut l = 1u32;
    while (n as f64) / ((l + 1) as f64).powf(k) >= 1.0 {
        l += 1;
    }
    l
}

/// Average number of tier-l cells covered by one tier-(l+1) cell,
/// `(1 + 1/l)^k`.
pub fn coverage_ratio(l: u32, k: f64) -> f64 {
    (1.0 + 1.0 / l as f64).powf(k)
}

/// Same-tier hop limit `D_l = ceil((1 + 1/l)^(k/2))`.
pub fn hop_limit(l: u32, k: f64) -> u32 {
    let v = (1.0 + 1.0 / l as f64).powf(k / 2.0);
    (v - 1e-9).ceil().max(1.0) as u32
}

/// Builds every tier of the hierarchy for `n` data nodes.
pub fn build_tiers(n: u64, orders: &ScalingOrders, base: &TierBaseline) -> Result<Vec<TierSpec>> {
    orders.validate()?;
    if n < 1 {
        return Err(Error::InvalidTier("need at least one data node".into()));
    }
    let levels = tier_count(n, orders.k);
    let mut tiers = Vec::with_capacity(levels as usize);
    let mut spacing = base.spacing_m;
    for l in 1..=levels {
        if l > 1 {
            spacing *= (1.0 + 1.0 / (l as f64 - 1.0)).powf(orders.k / 2.0);
        }
        let n_target = ((n as f64 / (l as f64).powf(orders.k)).round() as u64).max(1);
        let rings = covering_rings(n_target);
        let side = spacing / 3f64.sqrt();
        let lattice = build_lattice(
            rings,
            side,
            base.placement,
            derive_seed(base.seed, l as u64),
        )?;
        let antennas =
            ((base.antennas as f64 * (l as f64).powf(orders.upsilon)).round() as u32).max(1);
        tiers.push(TierSpec {
            index: l,
            n_target,
            bandwidth_hz: base.bandwidth_hz * (l as f64).powf(orders.psi),
            antennas,
            power_mw: base.threshold_mw * spacing.powf(base.alpha) / base.gain,
            alpha: base.alpha,
            gain: base.gain,
            threshold_mw: base.threshold_mw,
            hop_limit: hop_limit(l, orders.k),
            spacing_m: spacing,
            lattice,
        })
    }
    Ok(tiers)
}

/// Maps every node of `lower` to its Euclidean-nearest node of `upper`,
/// ties broken by the lowest upper id.
pub fn associate_upward(lower: &TierSpec, upper: &TierSpec) -> Result<Vec<u32>> {
    if upper.lattice.is_empty() {
        return Err(Error::InvalidTier(format!(
            "tier {} has no nodes to associate upward to",
            upper.index
        )));
    }
    let mut map = Vec::with_capacity(lower.n_actual() as usize);
    for id in 0..lower.n_actual() {
        map.push(upper.nearest_node(lower.position(id)?));
    }
    Ok(map)
}

/// For every node of `upper`, the nearest node of `lower` (the cell an
/// inter-tier handoff lands in).
pub fn nearest_downward(lower: &TierSpec, upper: &TierSpec) -> Result<Vec<u32>> {
    let mut map = Vec::with_capacity(upper.n_actual() as usize);
    for id in 0..upper.n_actual() {
        map.push(lower.nearest_node(upper.position(id)?));
    }
    Ok(map)
}

/// MIMO usage mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MimoMode {
    /// All antennas carry independent streams; link rate scales with the
    /// antenna count.
    SpatialMultiplexing,
    /// All antennas form one beam; the power gain `M^2` stretches the
    /// transmission range by `M^(2/alpha)`.
    Beamforming,
}

impl MimoMode {
    pub fn label(self) -> &'static str {
        match self {
            MimoMode::SpatialMultiplexing => "sm",
            MimoMode::Beamforming => "bf",
        }
    }
}

/// One MIMO link between antenna arrays.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MimoLink {
    pub tx_antennas: u32,
    pub rx_antennas: u32,
    pub mode: MimoMode,
}

impl MimoLink {
    /// Independent spatial streams under spatial multiplexing:
    /// `min(N_t, N_r)`.
    pub fn dof_gain(&self) -> u32 {
        self.tx_antennas.min(self.rx_antennas)
    }

    /// SNR multiplier under beamforming: `N_t * N_r`.
    pub fn power_gain(&self) -> f64 {
        self.tx_antennas as f64 * self.rx_antennas as f64
    }
}

/// Range multiplier from beamforming's `M^2` power gain: `M^(2/alpha)`.
pub fn beamforming_range_multiplier(antennas: u32, alpha: f64) -> f64 {
    (antennas as f64).powf(2.0 / alpha)
}

/// Rings one transmission may cross at tier `tier` under `mode`.
pub fn tier_reach(tier: &TierSpec, mode: MimoMode) -> u32 {
    match mode {
        MimoMode::SpatialMultiplexing => 1,
        MimoMode::Beamforming => {
            (beamforming_range_multiplier(tier.antennas, tier.alpha).floor() as u32).max(1)
        }
    }
}

/// Kind of one same-tier route segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentKind {
    /// Walk toward the next-tier parent; ends with a handoff transmission
    /// to the parent, counted at this tier.
    Ascent,
    /// Same-tier delivery at the apex tier.
    Transit,
    /// Walk from the handoff landing cell to the tier destination.
    Descent,
}

/// One same-tier stretch of a flow's route. `nodes` lists the visited
/// nodes of that tier in order.
#[derive(Debug, Clone)]
pub struct RouteSegment {
    /// Tier index, 1-based.
    pub tier: u32,
    pub kind: SegmentKind,
    pub nodes: Vec<u32>,
}

impl RouteSegment {
    /// Band slots this segment charges to the tier's nodes. Every in-tier
    /// hop charges its transmitter; the ascent handoff charges the
    /// transmitting tier node, and the descent handoff charges the
    /// receiving landing node, so the two inter-tier legs count
    /// symmetrically.
    pub fn tier_slots(&self) -> u32 {
        match self.kind {
            SegmentKind::Ascent | SegmentKind::Descent => self.nodes.len() as u32,
            SegmentKind::Transit => self.nodes.len() as u32 - 1,
        }
    }
}

/// Complete route of one flow: up the hierarchy, across the apex tier,
/// and back down.
#[derive(Debug, Clone)]
pub struct FlowRoute {
    pub flow: u32,
    /// Apex tier index, 1-based.
    pub apex: u32,
    pub segments: Vec<RouteSegment>,
    /// Downstream handoffs `(band tier, transmitting upper node)`: the
    /// tier-(l+1) node beams the flow into the tier-l band.
    pub down_handoffs: Vec<(u32, u32)>,
}

impl FlowRoute {
    /// Tier sequence rises to the apex and falls back symmetrically.
    pub fn is_unimodal(&self) -> bool {
        let tiers: Vec<u32> = self.segments.iter().map(|s| s.tier).collect();
        let peak = match tiers.iter().position(|&t| t == self.apex) {
            Some(p) => p,
            None => return false,
        };
        tiers[..=peak].windows(2).all(|w| w[0] < w[1])
            && tiers[peak..].windows(2).all(|w| w[0] > w[1])
    }
}

/// The assembled hierarchy: tiers plus inter-tier nearest-node maps.
#[derive(Debug, Clone)]
pub struct MultiTierNetwork {
    pub tiers: Vec<TierSpec>,
    /// `parents[t][i]`: nearest tier-(t+2) node for tier-(t+1) node `i`.
    parents: Vec<Vec<u32>>,
    /// `landings[t][p]`: nearest tier-(t+1) node under tier-(t+2) node `p`.
    landings: Vec<Vec<u32>>,
}

impl MultiTierNetwork {
    pub fn build(n: u64, orders: &ScalingOrders, base: &TierBaseline) -> Result<Self> {
        let tiers = build_tiers(n, orders, base)?;
        let mut parents = Vec::new();
        let mut landings = Vec::new();
        for w in tiers.windows(2) {
            parents.push(associate_upward(&w[0], &w[1])?);
            landings.push(nearest_downward(&w[0], &w[1])?);
        }
        Ok(MultiTierNetwork {
            tiers,
            parents,
            landings,
        })
    }

    pub fn tier_count(&self) -> u32 {
        self.tiers.len() as u32
    }

    /// Data-tier node count actually realized.
    pub fn data_nodes(&self) -> u32 {
        self.tiers[0].n_actual()
    }

    pub fn parent_map(&self, lower_tier: u32) -> &[u32] {
        &self.parents[lower_tier as usize - 1]
    }

    /// Routes one source-destination pair under the hop-limited policy.
    pub fn route_flow(&self, flow: u32, src: u32, dst: u32, mode: MimoMode) -> FlowRoute {
        let routers: Vec<Router<'_>> = self.tiers.iter().map(|t| Router::new(&t.lattice)).collect();
        self.route_flow_with(&routers, flow, src, dst, mode)
    }

    fn route_flow_with(
        &self,
        routers: &[Router<'_>],
        flow: u32,
        src: u32,
        dst: u32,
        mode: MimoMode,
    ) -> FlowRoute {
        let levels = self.tiers.len();
        // Climb while the same-tier distance exceeds the tier's hop limit.
        let mut chain: Vec<(u32, u32)> = vec![(src, dst)];
        let mut t = 0usize;
        while t + 1 < levels {
            let (s, d) = chain[t];
            let hop = self.tiers[t].lattice.hop_distance(s, d).expect("valid ids");
            if hop <= self.tiers[t].hop_limit {
                break;
            }
            chain.push((self.parents[t][s as usize], self.parents[t][d as usize]));
            t += 1;
        }
        let apex = t;

        let mut segments = Vec::with_capacity(2 * apex + 1);
        let mut down_handoffs = Vec::with_capacity(apex);
        for l in 0..apex {
            let s = chain[l].0;
            let parent = chain[l + 1].0;
            let up_cell = self.landings[l][parent as usize];
            segments.push(RouteSegment {
                tier: l as u32 + 1,
                kind: SegmentKind::Ascent,
                nodes: tier_path(&routers[l], &self.tiers[l], s, up_cell, mode),
            });
        }
        segments.push(RouteSegment {
            tier: apex as u32 + 1,
            kind: SegmentKind::Transit,
            nodes: tier_path(
                &routers[apex],
                &self.tiers[apex],
                chain[apex].0,
                chain[apex].1,
                mode,
            ),
        });
        for l in (0..apex).rev() {
            let upper_dst = chain[l + 1].1;
            let landing = self.landings[l][upper_dst as usize];
            down_handoffs.push((l as u32 + 1, upper_dst));
            segments.push(RouteSegment {
                tier: l as u32 + 1,
                kind: SegmentKind::Descent,
                nodes: tier_path(&routers[l], &self.tiers[l], landing, chain[l].1, mode),
            });
        }

        FlowRoute {
            flow,
            apex: apex as u32 + 1,
            segments,
            down_handoffs,
        }
    }

    /// Routes every pair; routers are built once and reused.
    pub fn route_flows(&self, pairs: &SdPairs, mode: MimoMode) -> Vec<FlowRoute> {
        let routers: Vec<Router<'_>> = self.tiers.iter().map(|t| Router::new(&t.lattice)).collect();
        pairs
            .pairs
            .iter()
            .enumerate()
            .map(|(i, &(s, d))| self.route_flow_with(&routers, i as u32, s, d, mode))
            .collect()
    }

    /// Analytic crossing probabilities from the per-tier hop-distance
    /// distributions: `Q_1 = 1`, `Q_{l+1} = (1 - xi_l) Q_l`.
    pub fn analytic_crossing(&self) -> Result<Vec<f64>> {
        let mut q = vec![1.0f64];
        for t in 0..self.tiers.len() - 1 {
            let xi = self.analytic_completion(t as u32 + 1)?;
            q.push(q[t] * (1.0 - xi));
        }
        Ok(q)
    }

    /// Analytic same-tier completion probability `xi_l` for tier `l`
    /// (1-based). A single-node tier completes everything.
    pub fn analytic_completion(&self, l: u32) -> Result<f64> {
        let tier = &self.tiers[l as usize - 1];
        if tier.n_actual() < 2 {
            return Ok(1.0);
        }
        let dist = hop_distribution(&tier.lattice)?;
        Ok(completion_probability(&dist, tier.hop_limit))
    }
}

/// Same-tier path between two nodes. Spatial multiplexing walks the
/// neighbor-hop geodesic; beamforming rides the same corridor but covers
/// `floor(M^(2/alpha))` cells per transmission, so its relay set is a
/// subset of the spatial-multiplexing one.
fn tier_path(router: &Router<'_>, tier: &TierSpec, from: u32, to: u32, mode: MimoMode) -> Vec<u32> {
    router.path(from, to, tier_reach(tier, mode))
}

/// Per-tier flow accounting for one routed traffic set.
#[derive(Debug, Clone)]
pub struct TierFlowStats {
    /// Tier index, 1-based.
    pub tier: u32,
    /// Flows whose route touches this tier.
    pub crossing_flows: u64,
    /// Fraction of all flows crossing this tier.
    pub crossing_fraction: f64,
    /// Fraction of crossing flows that completed here (empirical xi).
    pub completion_fraction: f64,
    /// Transmissions at this tier per crossing flow.
    pub flow_hops: Vec<u32>,
    /// Transmissions per node of this tier.
    pub relay_loads: Vec<u32>,
    /// Band-share demand at each next-tier parent: inter-tier handoffs it
    /// serves in this tier's band, divided by the MU-MIMO concurrency
    /// `M_{l+1} / M_l`. Empty at the top tier.
    pub parent_band_demand: Vec<f64>,
    /// Measured mean ascent+descent transmissions per pass-through flow,
    /// relative to `sqrt((1 + 1/l)^k)`.
    pub zeta_up: f64,
    /// Measured mean transit transmissions per completing flow, relative
    /// to the hop limit `D_l`.
    pub zeta_same: f64,
}

impl TierFlowStats {
    pub fn relay_mean(&self) -> f64 {
        if self.relay_loads.is_empty() {
            return 0.0;
        }
        self.relay_loads.iter().map(|&z| z as f64).sum::<f64>() / self.relay_loads.len() as f64
    }

    pub fn relay_max(&self) -> u32 {
        self.relay_loads.iter().copied().max().unwrap_or(0)
    }

    pub fn total_hops(&self) -> u64 {
        self.flow_hops.iter().map(|&h| h as u64).sum()
    }
}

/// Aggregates routed flows into per-tier statistics.
pub fn tier_flow_stats(
    net: &MultiTierNetwork,
    routes: &[FlowRoute],
    orders: &ScalingOrders,
) -> Vec<TierFlowStats> {
    let levels = net.tiers.len();
    let total_flows = routes.len() as f64;
    let mut stats: Vec<TierFlowStats> = net
        .tiers
        .iter()
        .map(|t| TierFlowStats {
            tier: t.index,
            crossing_flows: 0,
            crossing_fraction: 0.0,
            completion_fraction: 0.0,
            flow_hops: Vec::new(),
            relay_loads: vec![0; t.n_actual() as usize],
            parent_band_demand: if (t.index as usize) < levels {
                vec![0.0; net.tiers[t.index as usize].n_actual() as usize]
            } else {
                Vec::new()
            },
            zeta_up: 0.0,
            zeta_same: 0.0,
        })
        .collect();

    let mut up_hop_sums = vec![0u64; levels];
    let mut up_flow_counts = vec![0u64; levels];
    let mut same_hop_sums = vec![0u64; levels];
    let mut same_flow_counts = vec![0u64; levels];

    for route in routes {
        let apex = route.apex as usize;
        let mut per_tier_tx = vec![0u32; apex];
        for seg in &route.segments {
            let t = seg.tier as usize - 1;
            per_tier_tx[t] += seg.tier_slots();
            let loads = &mut stats[t].relay_loads;
            match seg.kind {
                SegmentKind::Ascent => {
                    // Path transmitters plus the handoff to the parent.
                    for &node in &seg.nodes {
                        loads[node as usize] += 1;
                    }
                }
                SegmentKind::Transit => {
                    for &node in &seg.nodes[..seg.nodes.len() - 1] {
                        loads[node as usize] += 1;
                    }
                }
                SegmentKind::Descent => {
                    // The landing node is charged for receiving the
                    // inter-tier handoff, then every path hop charges its
                    // transmitter.
                    loads[seg.nodes[0] as usize] += 1;
                    for &node in &seg.nodes[..seg.nodes.len() - 1] {
                        loads[node as usize] += 1;
                    }
                }
            }
        }
        for (t, &tx) in per_tier_tx.iter().enumerate() {
            stats[t].crossing_flows += 1;
            stats[t].flow_hops.push(tx);
            if t + 1 == apex {
                // Forced completions at the top tier may exceed the hop
                // limit; only genuine in-limit transits feed zeta_same.
                let in_limit = if apex < levels {
                    true
                } else {
                    route
                        .segments
                        .iter()
                        .find(|s| s.tier as usize == apex && s.kind == SegmentKind::Transit)
                        .map(|s| {
                            let first = *s.nodes.first().unwrap();
                            let last = *s.nodes.last().unwrap();
                            net.tiers[t]
                                .lattice
                                .hop_distance(first, last)
                                .expect("valid ids")
                                <= net.tiers[t].hop_limit
                        })
                        .unwrap_or(false)
                };
                if in_limit {
                    same_hop_sums[t] += tx as u64;
                    same_flow_counts[t] += 1;
                }
            } else {
                up_hop_sums[t] += tx as u64;
                up_flow_counts[t] += 1;
            }
        }
        // Upstream receptions at each parent on the way up.
        for seg in &route.segments {
            if seg.kind != SegmentKind::Ascent {
                continue;
            }
            let t = seg.tier as usize - 1;
            let parent = net.parents[t][seg.nodes[0] as usize];
            // The handoff receiver is the parent of the segment's source.
            stats[t].parent_band_demand[parent as usize] += 1.0;
        }
        for &(band_tier, parent) in &route.down_handoffs {
            stats[band_tier as usize - 1].parent_band_demand[parent as usize] += 1.0;
        }
    }

    for t in 0..levels {
        stats[t].crossing_fraction = stats[t].crossing_flows as f64 / total_flows;
        if stats[t].crossing_flows > 0 {
            let next_crossing = if t + 1 < levels {
                stats[t + 1].crossing_flows
            } else {
                0
            };
            stats[t].completion_fraction =
                (stats[t].crossing_flows - next_crossing) as f64 / stats[t].crossing_flows as f64;
        }
        if up_flow_counts[t] > 0 {
            let mean = up_hop_sums[t] as f64 / up_flow_counts[t] as f64;
            stats[t].zeta_up = mean / coverage_ratio(t as u32 + 1, orders.k).sqrt();
        }
        if same_flow_counts[t] > 0 {
            let mean = same_hop_sums[t] as f64 / same_flow_counts[t] as f64;
            stats[t].zeta_same = mean / net.tiers[t].hop_limit as f64;
        }
        if t + 1 < levels {
            let mu = net.tiers[t + 1].antennas as f64 / net.tiers[t].antennas as f64;
            for d in &mut stats[t].parent_band_demand {
                *d /= mu;
            }
        }
    }
    stats
}

/// Interfering cells silenced per slot in the multi-tier schedule: the
/// five other neighbor cells plus the intra-cell handoff case.
pub const TIER_INTERFERING_CELLS: u64 = 6;

/// Spatial-multiplexing link rate `eta * M_l * W_l` (DoF gain on the full
/// tier band).
pub fn sm_link_rate(tier: &TierSpec, eta: f64) -> f64 {
    let link = MimoLink {
        tx_antennas: tier.antennas,
        rx_antennas: tier.antennas,
        mode: MimoMode::SpatialMultiplexing,
    };
    eta * link.dof_gain() as f64 * tier.bandwidth_hz
}

/// Beamforming link rate `W_l log2(C M^2 P d^-alpha / P0)` with the
/// receive threshold as the SNR reference; `interference_floor` adds a
/// constant residual-interference multiple of the threshold.
///
/// Returns the rate and a flag set when the SNR argument fell to or below
/// 1 (rate floored at zero).
pub fn bf_link_rate(tier: &TierSpec, interference_floor: f64) -> (f64, bool) {
    let link = MimoLink {
        tx_antennas: tier.antennas,
        rx_antennas: tier.antennas,
        mode: MimoMode::Beamforming,
    };
    let snr = tier.gain * link.power_gain() * tier.power_mw * tier.spacing_m.powf(-tier.alpha)
        / (tier.threshold_mw * (1.0 + interference_floor));
    if snr <= 1.0 {
        (0.0, true)
    } else {
        (tier.bandwidth_hz * snr.log2(), false)
    }
}

/// Default spatial-multiplexing spectral efficiency: `log2(1 + gamma)`
/// with gamma the worst-case neighbor-hop SINR on this tier's lattice
/// under the silencing schedule.
pub fn default_eta(tier: &TierSpec) -> Result<f64> {
    let model = tier.model();
    let power = required_power(model, tier.threshold_mw, 1, tier.lattice.side())?;
    let sinr = worst_case_sinr(&tier.lattice, model, tier.threshold_mw, power, 1)?;
    Ok((1.0 + sinr).log2())
}

/// End-to-end rate of one tier: link rate over the TDMA slot share and
/// the measured worst relay load. `None` marks an untrafficked tier.
pub fn tier_rate(
    tier: &TierSpec,
    stats: &TierFlowStats,
    mode: MimoMode,
    eta: f64,
    bf_interference_floor: f64,
) -> Option<f64> {
    let z_upper = stats.relay_max();
    if z_upper == 0 {
        return None;
    }
    let link = match mode {
        MimoMode::SpatialMultiplexing => sm_link_rate(tier, eta),
        MimoMode::Beamforming => bf_link_rate(tier, bf_interference_floor).0,
    };
    Some(link / ((1.0 + TIER_INTERFERING_CELLS as f64) * z_upper as f64))
}

/// Network throughput: the minimum over trafficked tiers.
pub fn network_throughput(tier_rates: &[Option<f64>]) -> Result<f64> {
    tier_rates
        .iter()
        .flatten()
        .copied()
        .fold(None, |acc: Option<f64>, r| {
            Some(acc.map_or(r, |a| a.min(r)))
        })
        .ok_or(Error::NoTraffickedTier)
}

/// Closed-form order exponent of the spatial-multiplexing tier rate:
/// `psi + upsilon - k`.
pub fn sm_rate_exponent(orders: &ScalingOrders) -> f64 {
    orders.psi + orders.upsilon - orders.k
}

/// Closed-form order exponent of the beamforming tier rate:
/// `psi + 2 upsilon / alpha - k`.
pub fn bf_rate_exponent(orders: &ScalingOrders, alpha: f64) -> f64 {
    orders.psi + 2.0 * orders.upsilon / alpha - orders.k
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::traffic::draw_sd_pairs;

    fn base_50m() -> TierBaseline {
        TierBaseline {
            spacing_m: 50.0,
            bandwidth_hz: 1e7,
            antennas: 1,
            alpha: 3.0,
            gain: 1.0,
            threshold_mw: 10f64.powf(-7.8),
            placement: Placement::Regular,
            seed: 0,
        }
    }

    #[test]
    fn case_study_tier_table() {
        let orders = ScalingOrders::new(8.0, 4.0, 4.0).unwrap();
        let tiers = build_tiers(10_000, &orders, &base_50m()).unwrap();
        assert_eq!(tiers.len(), 3);
        assert_eq!(
            tiers.iter().map(|t| t.n_target).collect::<Vec<_>>(),
            vec![10_000, 39, 2]
        );
        let w: Vec<f64> = tiers.iter().map(|t| t.bandwidth_hz).collect();
        assert!((w[0] - 1e7).abs() < 1.0);
        assert!((w[1] - 1.6e8).abs() < 1.0);
        assert!((w[2] - 8.1e8).abs() < 1.0);
        assert_eq!(
            tiers.iter().map(|t| t.antennas).collect::<Vec<_>>(),
            vec![1, 16, 81]
        );
        let d: Vec<f64> = tiers.iter().map(|t| t.spacing_m).collect();
        assert!((d[0] - 50.0).abs() < 1e-9);
        assert!((d[1] - 800.0).abs() < 1e-9);
        assert!((d[2] - 4050.0).abs() < 1e-9);
        assert_eq!(
            tiers.iter().map(|t| t.hop_limit).collect::<Vec<_>>(),
            vec![16, 6, 4]
        );
    }

    #[test]
    fn tier_count_examples() {
        assert_eq!(tier_count(10_000, 8.0), 3);
        assert_eq!(tier_count(4096, 2.0), 64);
        assert_eq!(tier_count(1, 2.0), 1);
    }

    #[test]
    fn orders_validated() {
        assert!(ScalingOrders::new(1.5, 1.0, 1.0).is_err());
        assert!(ScalingOrders::new(2.0, 0.5, 1.0).is_err());
        assert!(ScalingOrders::new(2.0, 1.0, 0.0).is_err());
        assert!(ScalingOrders::new(2.0, 1.0, 1.0).is_ok());
    }

    #[test]
    fn association_covers_lower_tier() {
        let orders = ScalingOrders::new(2.0, 1.0, 1.0).unwrap();
        let net = MultiTierNetwork::build(256, &orders, &base_50m()).unwrap();
        let parents = net.parent_map(1);
        assert_eq!(parents.len(), net.tiers[0].n_actual() as usize);
        let upper = net.tiers[1].n_actual();
        assert!(parents.iter().all(|&p| p < upper));
    }

    #[test]
    fn single_upper_node_absorbs_all() {
        let orders = ScalingOrders::new(8.0, 4.0, 4.0).unwrap();
        let tiers = build_tiers(300, &orders, &base_50m()).unwrap();
        // 300 / 2^8 rounds to 1: the second tier is a single node.
        assert_eq!(tiers[1].n_actual(), 1);
        let map = associate_upward(&tiers[0], &tiers[1]).unwrap();
        assert!(map.iter().all(|&p| p == 0));
    }

    #[test]
    fn adjacent_pair_stays_in_tier_one() {
        let orders = ScalingOrders::new(2.0, 1.0, 1.0).unwrap();
        let net = MultiTierNetwork::build(256, &orders, &base_50m()).unwrap();
        let lat = &net.tiers[0].lattice;
        let a = lat.id_at((0, 0)).unwrap();
        let b = lat.id_at((1, 0)).unwrap();
        let route = net.route_flow(0, a, b, MimoMode::SpatialMultiplexing);
        assert_eq!(route.apex, 1);
        assert_eq!(route.segments.len(), 1);
        assert_eq!(route.segments[0].kind, SegmentKind::Transit);
        assert_eq!(route.segments[0].tier_slots(), 1);
        assert!(route.is_unimodal());
    }

    #[test]
    fn over_limit_pair_ascends() {
        let orders = ScalingOrders::new(2.0, 1.0, 1.0).unwrap();
        let net = MultiTierNetwork::build(256, &orders, &base_50m()).unwrap();
        assert_eq!(net.tiers[0].hop_limit, 2);
        let lat = &net.tiers[0].lattice;
        let a = lat.id_at((0, 0)).unwrap();
        let b = lat.id_at((3, 0)).unwrap(); // hop distance 3 = D_1 + 1
        let route = net.route_flow(0, a, b, MimoMode::SpatialMultiplexing);
        assert!(route.apex >= 2);
        assert_eq!(route.segments[0].kind, SegmentKind::Ascent);
        assert!(route.is_unimodal());
        assert_eq!(route.down_handoffs.len(), route.apex as usize - 1);
    }

    #[test]
    fn conservation_and_unimodality() {
        let orders = ScalingOrders::new(2.0, 1.0, 1.0).unwrap();
        let net = MultiTierNetwork::build(400, &orders, &base_50m()).unwrap();
        for seed in 0..3 {
            let pairs = draw_sd_pairs(&net.tiers[0].lattice, seed).unwrap();
            let routes = net.route_flows(&pairs, MimoMode::SpatialMultiplexing);
            assert!(routes.iter().all(|r| r.is_unimodal()));
            let stats = tier_flow_stats(&net, &routes, &orders);
            for s in &stats {
                let z: u64 = s.relay_loads.iter().map(|&v| v as u64).sum();
                assert_eq!(z, s.total_hops(), "tier {}", s.tier);
            }
            // Crossing counts are monotone down the hierarchy.
            for w in stats.windows(2) {
                assert!(w[1].crossing_flows <= w[0].crossing_flows);
            }
            assert_eq!(stats[0].crossing_flows, routes.len() as u64);
        }
    }

    #[test]
    fn untrafficked_tier_reports_zero_and_no_rate() {
        let orders = ScalingOrders::new(2.0, 1.0, 1.0).unwrap();
        let net = MultiTierNetwork::build(256, &orders, &base_50m()).unwrap();
        // A single short flow never leaves tier 1.
        let lat = &net.tiers[0].lattice;
        let route = net.route_flow(
            0,
            lat.id_at((0, 0)).unwrap(),
            lat.id_at((1, 0)).unwrap(),
            MimoMode::SpatialMultiplexing,
        );
        let stats = tier_flow_stats(&net, &[route], &orders);
        assert_eq!(stats[1].crossing_flows, 0);
        assert_eq!(stats[1].relay_max(), 0);
        assert!(tier_rate(
            &net.tiers[1],
            &stats[1],
            MimoMode::SpatialMultiplexing,
            1.0,
            0.0
        )
        .is_none());
    }

    #[test]
    fn sm_link_rate_examples() {
        let orders = ScalingOrders::new(8.0, 4.0, 4.0).unwrap();
        let tiers = build_tiers(10_000, &orders, &base_50m()).unwrap();
        assert!((sm_link_rate(&tiers[0], 1.0) - 1e7).abs() < 1.0);
        assert!((sm_link_rate(&tiers[1], 1.0) - 16.0 * 1.6e8).abs() < 1.0);
        // Rate over l^(psi + upsilon) is constant across tiers.
        let r1 = sm_link_rate(&tiers[0], 0.5) / 1f64.powf(8.0);
        let r2 = sm_link_rate(&tiers[1], 0.5) / 2f64.powf(8.0);
        let r3 = sm_link_rate(&tiers[2], 0.5) / 3f64.powf(8.0);
        assert!((r1 / r2 - 1.0).abs() < 1e-9);
        assert!((r2 / r3 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn bf_link_rate_examples() {
        let orders = ScalingOrders::new(8.0, 4.0, 4.0).unwrap();
        let tiers = build_tiers(10_000, &orders, &base_50m()).unwrap();
        // Tier 2: threshold-exact power, M = 16 -> W log2(256).
        let (rate, floored) = bf_link_rate(&tiers[1], 0.0);
        assert!(!floored);
        assert!((rate - 1.6e8 * 8.0).abs() < 1.0);
        // A single antenna at threshold power has nothing above the floor.
        let (rate, floored) = bf_link_rate(&tiers[0], 0.0);
        assert!(floored);
        assert_eq!(rate, 0.0);
    }

    #[test]
    fn bf_rate_growth_order() {
        // W_l log2(M_l^2) against upsilon * l^psi * log l stays within
        // fixed bounds across tiers.
        let orders = ScalingOrders::new(2.0, 1.0, 1.0).unwrap();
        let base = TierBaseline {
            antennas: 2,
            ..base_50m()
        };
        let tiers = build_tiers(4096, &orders, &base).unwrap();
        let mut ratios = Vec::new();
        for l in 2..=8u32 {
            let (rate, floored) = bf_link_rate(&tiers[l as usize - 1], 0.0);
            assert!(!floored);
            let order = orders.upsilon * (l as f64).powf(orders.psi) * (l as f64).ln();
            ratios.push(rate / order);
        }
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().cloned().fold(0.0, f64::max);
        assert!(hi / lo < 8.0, "ratio spread {lo}..{hi}");
    }

    #[test]
    fn range_multiplier_examples() {
        assert!((beamforming_range_multiplier(1, 3.0) - 1.0).abs() < 1e-12);
        assert!((beamforming_range_multiplier(8, 3.0) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn mimo_link_gains() {
        let link = MimoLink {
            tx_antennas: 4,
            rx_antennas: 16,
            mode: MimoMode::SpatialMultiplexing,
        };
        assert_eq!(link.dof_gain(), 4);
        let link = MimoLink {
            tx_antennas: 4,
            rx_antennas: 16,
            mode: MimoMode::Beamforming,
        };
        assert_eq!(link.power_gain(), 64.0);
    }

    #[test]
    fn transit_segments_respect_hop_limits_below_apex_tier() {
        let orders = ScalingOrders::new(2.0, 1.0, 1.0).unwrap();
        let net = MultiTierNetwork::build(400, &orders, &base_50m()).unwrap();
        let pairs = crate::traffic::draw_sd_pairs(&net.tiers[0].lattice, 8).unwrap();
        let top = net.tier_count();
        for route in net.route_flows(&pairs, MimoMode::SpatialMultiplexing) {
            for seg in &route.segments {
                if seg.kind != SegmentKind::Transit || seg.tier == top {
                    continue;
                }
                let first = *seg.nodes.first().unwrap();
                let last = *seg.nodes.last().unwrap();
                let tier = &net.tiers[seg.tier as usize - 1];
                assert!(
                    tier.lattice.hop_distance(first, last).unwrap() <= tier.hop_limit,
                    "tier {} transit exceeds its hop limit",
                    seg.tier
                );
            }
        }
    }

    #[test]
    fn network_minimum() {
        let rates = vec![Some(3.0), Some(2.0), Some(5.0)];
        assert_eq!(network_throughput(&rates).unwrap(), 2.0);
        let rates = vec![Some(4.0), None];
        assert_eq!(network_throughput(&rates).unwrap(), 4.0);
        assert!(network_throughput(&[None, None]).is_err());
        assert_eq!(network_throughput(&[Some(7.0)]).unwrap(), 7.0);
    }

    #[test]
    fn exponent_helpers() {
        let orders = ScalingOrders::new(8.0, 4.0, 4.0).unwrap();
        assert_eq!(sm_rate_exponent(&orders), 0.0);
        assert!((bf_rate_exponent(&orders, 3.0) + 4.0 / 3.0).abs() < 1e-12);
        let flat = ScalingOrders::new(2.0, 1.0, 1.0).unwrap();
        assert_eq!(sm_rate_exponent(&flat), 0.0);
    }
}
