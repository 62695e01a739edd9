//! Single-tier transmission schemes and throughput measurement.
//!
//! Two schemes are modeled. Short-hop (SH) restricts every transmission to
//! a neighboring cell; long-hop (LH) allows hops as far as the lattice
//! radius. Flows follow shortest hop paths with deterministic
//! tie-breaking, per-node relay loads are measured, and the achievable
//! per-node throughput composes the link rate, the TDMA slot share, and
//! the relay-load cap:
//!
//! `R = R_link / ((1 + delta_c) * Z_upper)`

use crate::error::{Error, Result};
use crate::lattice::{axial_distance, ring_distance_bounds, Lattice, DIRECTIONS};
use crate::radio::{interference_sum, received_power, required_power, shannon_rate, PathLossModel};
use crate::traffic::SdPairs;

/// Transmission scheme selecting the ring reach of one hop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Neighbor-cell transmissions only (reach 1).
    ShortHop,
    /// Reach equal to the lattice ring count.
    LongHop,
}

impl Scheme {
    pub fn reach(self, rings: u32) -> u32 {
        match self {
            Scheme::ShortHop => 1,
            Scheme::LongHop => rings.max(1),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Scheme::ShortHop => "sh",
            Scheme::LongHop => "lh",
        }
    }
}

/// Radio and bandwidth parameters for a single-tier run.
#[derive(Debug, Clone, Copy)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    pub bandwidth_hz: f64,
    pub model: PathLossModel,
    pub threshold_mw: f64,
    /// Transmit power; `None` uses the minimum power that closes the link
    /// at the scheme's worst-case reach distance.
    pub power_mw: Option<f64>,
}

/// Measured outcome of one single-tier experiment.
#[derive(Debug, Clone)]
pub struct SingleTierReport {
    pub n: u32,
    pub scheme: Scheme,
    pub reach: u32,
    /// Worst-case SINR seen by a center receiver under the TDMA schedule.
    pub sinr: f64,
    /// Lower-bound link rate, bits/s.
    pub link_rate_bps: f64,
    /// Interfering cells silenced per active slot.
    pub interfering_cells: u64,
    /// Relay-load cap used in the throughput composition.
    pub relay_cap: f64,
    /// Measured per-node relay loads (transmissions per node).
    pub relay_loads: Vec<u32>,
    pub relay_mean: f64,
    pub relay_max: u32,
    /// Whether the cap dominated the realized maximum load.
    pub cap_dominates: bool,
    /// Achievable per-node throughput, bits/s.
    pub throughput_bps: f64,
}

/// Number of interfering cells when transmissions reach ring `r`: all
/// cells within the r-th ring around the receiver minus the transmitter,
/// `3r(r+1) - 1`.
pub fn interfering_cell_count(r: u32) -> Result<u64> {
    if r < 1 {
        return Err(Error::RingOutOfRange {
            ring: r,
            reason: "interfering cell count needs r >= 1",
        });
    }
    Ok(3 * r as u64 * (r as u64 + 1) - 1)
}

/// Precomputed adjacency and positions for fast path walking.
pub struct Router<'a> {
    lattice: &'a Lattice,
    coords: Vec<(i32, i32)>,
    positions: Vec<[f64; 2]>,
    neighbors: Vec<[i32; 6]>,
}

impl<'a> Router<'a> {
    pub fn new(lattice: &'a Lattice) -> Self {
        let n = lattice.len() as usize;
        let mut coords = Vec::with_capacity(n);
        let mut positions = Vec::with_capacity(n);
        for id in 0..lattice.len() {
            let site = lattice.site(id).expect("id in range");
            coords.push((site.q, site.r));
            positions.push(lattice.position(id).expect("id in range"));
        }
        let mut neighbors = vec![[-1i32; 6]; n];
        for id in 0..n {
            let (q, r) = coords[id];
            for (slot, dir) in DIRECTIONS.iter().enumerate() {
                if let Some(nb) = lattice.id_at((q + dir.0, r + dir.1)) {
                    neighbors[id][slot] = nb as i32;
                }
            }
        }
        Router {
            lattice,
            coords,
            positions,
            neighbors,
        }
    }

    pub fn lattice(&self) -> &Lattice {
        self.lattice
    }

    fn hop(&self, i: u32, j: u32) -> u32 {
        axial_distance(self.coords[i as usize], self.coords[j as usize])
    }

    fn dist2_to(&self, id: u32, target: [f64; 2]) -> f64 {
        let p = self.positions[id as usize];
        (p[0] - target[0]).powi(2) + (p[1] - target[1]).powi(2)
    }

    /// Neighbor of `cur` one hop closer to `dst`: the closest (Euclidean)
    /// to the destination among the distance-reducing neighbors, ties
    /// broken by the lowest id.
    fn next_hop(&self, cur: u32, dst: u32) -> u32 {
        let h = self.hop(cur, dst);
        debug_assert!(h > 0);
        if h == 1 {
            return dst;
        }
        let dst_pos = self.positions[dst as usize];
        let mut best: Option<u32> = None;
        let mut best_d2 = f64::INFINITY;
        for &nb in &self.neighbors[cur as usize] {
            if nb < 0 {
                continue;
            }
            let nb = nb as u32;
            if self.hop(nb, dst) != h - 1 {
                continue;
            }
            let d2 = self.dist2_to(nb, dst_pos);
            let better = match best {
                None => true,
                Some(b) => d2 < best_d2 || (d2 == best_d2 && nb < b),
            };
            if better {
                best = Some(nb);
                best_d2 = d2;
            }
        }
        best.expect("hex disks are geodesically convex")
    }

    /// Shortest cell-by-cell walk from `src` to `dst`, endpoints included.
    pub fn geodesic(&self, src: u32, dst: u32) -> Vec<u32> {
        let mut nodes = vec![src];
        let mut cur = src;
        while cur != dst {
            let next = self.next_hop(cur, dst);
            debug_assert!(self.hop(next, dst) < self.hop(cur, dst));
            nodes.push(next);
            cur = next;
        }
        nodes
    }

    /// Node sequence from `src` to `dst` with transmissions spanning up to
    /// `reach` rings: the shortest hop path, strided so that any residual
    /// short hop comes first and every later transmission spans the full
    /// reach. The step count is the minimal `ceil(hop / reach)`.
    ///
    /// Anchoring the full-reach strides at the destination end matters for
    /// load: shortest-path lanes converge toward a destination, so relays
    /// placed a full reach from the source land on converged lanes and
    /// pile up, while the residue-first placement keeps them in the
    /// spread-out region near the source.
    pub fn path(&self, src: u32, dst: u32, reach: u32) -> Vec<u32> {
        let base = self.geodesic(src, dst);
        let reach = reach.max(1) as usize;
        if reach == 1 || base.len() <= 2 {
            return base;
        }
        let hops = base.len() - 1;
        let steps = hops.div_ceil(reach);
        let first = hops - (steps - 1) * reach;
        let mut nodes = Vec::with_capacity(steps + 1);
        nodes.push(base[0]);
        let mut i = first;
        while i <= hops {
            nodes.push(base[i]);
            i += reach;
        }
        nodes
    }
}

/// Per-node relay loads after routing every flow.
#[derive(Debug, Clone)]
pub struct FlowLoads {
    /// Transmissions per node (source and relay hops both count).
    pub loads: Vec<u32>,
    /// Hop count per flow, in pair order.
    pub flow_hops: Vec<u32>,
    /// Total hops over all flows; equals the sum of `loads`.
    pub total_hops: u64,
}

/// Routes every pair along a shortest hop path with steps of at most
/// `reach` rings and counts the transmissions each node performs.
pub fn route_all_flows(lattice: &Lattice, pairs: &SdPairs, reach: u32) -> FlowLoads {
    let router = Router::new(lattice);
    route_all_flows_with(&router, pairs, reach)
}

/// Same as [`route_all_flows`] but reusing a prebuilt [`Router`].
pub fn route_all_flows_with(router: &Router<'_>, pairs: &SdPairs, reach: u32) -> FlowLoads {
    let mut loads = vec![0u32; router.lattice.len() as usize];
    let mut flow_hops = Vec::with_capacity(pairs.pairs.len());
    let mut total = 0u64;
    for &(src, dst) in &pairs.pairs {
        let nodes = router.path(src, dst, reach);
        let hops = nodes.len() as u32 - 1;
        for &tx in &nodes[..nodes.len() - 1] {
            loads[tx as usize] += 1;
        }
        flow_hops.push(hops);
        total += hops as u64;
    }
    FlowLoads {
        loads,
        flow_hops,
        total_hops: total,
    }
}

/// `R_link / ((1 + delta_c) * z_upper)`.
pub fn compose_throughput(link_rate_bps: f64, interfering_cells: u64, relay_cap: f64) -> f64 {
    link_rate_bps / ((1.0 + interfering_cells as f64) * relay_cap)
}

/// Worst-case SINR for a center receiver when every cell outside the
/// silenced ring transmits concurrently. The receive threshold serves as
/// the noise reference, so a threshold-exact link with no interference
/// sees an SINR of 1.
pub fn worst_case_sinr(
    lattice: &Lattice,
    model: PathLossModel,
    threshold_mw: f64,
    power_mw: f64,
    reach: u32,
) -> Result<f64> {
    let (_, d_max) = ring_distance_bounds(reach, lattice.side())?;
    let signal = received_power(model, power_mw, d_max)?;
    let mut active = Vec::new();
    for id in 1..lattice.len() {
        if lattice.hop_distance(0, id)? > reach {
            active.push(id);
        }
    }
    let interference = interference_sum(lattice, model, power_mw, 0, &active)?;
    Ok(signal / (threshold_mw + interference))
}

/// Runs one single-tier experiment: route all flows, derive the
/// relay-load cap, and compose the per-node throughput.
pub fn per_node_throughput(
    cfg: &SchemeConfig,
    lattice: &Lattice,
    pairs: &SdPairs,
) -> Result<SingleTierReport> {
    let n = lattice.len();
    if n < 2 {
        return Err(Error::TooFewNodes(n));
    }
    let reach = cfg.scheme.reach(lattice.rings());
    let flows = route_all_flows(lattice, pairs, reach);

    let power = match cfg.power_mw {
        Some(p) => p,
        None => required_power(cfg.model, cfg.threshold_mw, reach, lattice.side())?,
    };
    let sinr = worst_case_sinr(lattice, cfg.model, cfg.threshold_mw, power, reach)?;
    let link_rate = shannon_rate(cfg.bandwidth_hz, sinr);
    let interfering = interfering_cell_count(reach)?;

    let relay_mean = flows.total_hops as f64 / n as f64;
    let relay_max = flows.loads.iter().copied().max().unwrap_or(0);
    let relay_cap = match cfg.scheme {
        Scheme::ShortHop => {
            // Tail-bound construction: cap at (1 + delta) E[Z] with
            // delta = sqrt(6 ln n / E[Z]).
            let delta = (6.0 * (n as f64).ln() / relay_mean).sqrt();
            (1.0 + delta) * relay_mean
        }
        Scheme::LongHop => relay_max as f64,
    };
    let throughput = compose_throughput(link_rate, interfering, relay_cap);

    Ok(SingleTierReport {
        n,
        scheme: cfg.scheme,
        reach,
        sinr,
        link_rate_bps: link_rate,
        interfering_cells: interfering,
        relay_cap,
        relay_loads: flows.loads,
        relay_mean,
        relay_max,
        cap_dominates: relay_cap >= relay_max as f64,
        throughput_bps: throughput,
    })
}

/// Ordinary least squares fit of `log(value)` against `log(n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Fits the scaling exponent of `value ~ n^slope` from `(n, value)` points.
pub fn fit_scaling_exponent(points: &[(f64, f64)]) -> Result<PowerFit> {
    if points.len() < 3 {
        return Err(Error::InvalidFitInput("need at least 3 points"));
    }
    if points.iter().any(|&(x, y)| x <= 0.0 || y <= 0.0) {
        return Err(Error::InvalidFitInput("all coordinates must be positive"));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mean_x = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for &(x, y) in &logs {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
    }
    if sxx == 0.0 {
        return Err(Error::InvalidFitInput("all n values identical"));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for &(x, y) in &logs {
        ss_res += (y - (intercept + slope * x)).powi(2);
        ss_tot += (y - mean_y).powi(2);
    }
    let r_squared = if ss_tot <= f64::EPSILON {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok(PowerFit {
        slope,
        intercept,
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_lattice, Placement};
    use crate::traffic::draw_sd_pairs;

    #[test]
    fn interfering_cells_formula() {
        assert_eq!(interfering_cell_count(1).unwrap(), 5);
        assert_eq!(interfering_cell_count(2).unwrap(), 17);
        assert!(interfering_cell_count(0).is_err());
        // Quadratic growth with a bounded ratio.
        for r in 1..=100u32 {
            let ratio = interfering_cell_count(r).unwrap() as f64 / (r as f64 * r as f64);
            assert!((2.0..=5.0).contains(&ratio), "r={r} ratio={ratio}");
        }
    }

    #[test]
    fn interfering_cells_by_scheme_order() {
        // Short-hop: constant in n. Long-hop: a fixed fraction of n.
        for rings in [4u32, 8, 16, 32] {
            let n = crate::lattice::site_count(rings) as f64;
            assert_eq!(
                interfering_cell_count(Scheme::ShortHop.reach(rings)).unwrap(),
                5
            );
            let lh = interfering_cell_count(Scheme::LongHop.reach(rings)).unwrap() as f64;
            assert!((0.85..1.0).contains(&(lh / n)), "rings {rings}: {}", lh / n);
        }
    }

    #[test]
    fn short_hop_path_through_center() {
        // Opposite ring-1 nodes of the 7-cell lattice route via the center.
        let lat = build_lattice(1, 1.0, Placement::Regular, 0).unwrap();
        let router = Router::new(&lat);
        let a = lat.id_at((1, 0)).unwrap();
        let b = lat.id_at((-1, 0)).unwrap();
        let path = router.path(a, b, 1);
        assert_eq!(path.len(), 3);
        assert_eq!(path[1], 0);
    }

    #[test]
    fn long_hop_uses_at_most_two_hops() {
        let lat = build_lattice(4, 1.0, Placement::Regular, 3).unwrap();
        let router = Router::new(&lat);
        let reach = lat.rings();
        for i in 0..lat.len() {
            for j in 0..lat.len() {
                if i == j {
                    continue;
                }
                let path = router.path(i, j, reach);
                let expect = lat.hop_distance(i, j).unwrap().div_ceil(reach);
                assert_eq!(path.len() as u32 - 1, expect);
            }
        }
    }

    #[test]
    fn flow_conservation() {
        let lat = build_lattice(6, 1.0, Placement::Regular, 11).unwrap();
        let pairs = draw_sd_pairs(&lat, 5).unwrap();
        for scheme in [Scheme::ShortHop, Scheme::LongHop] {
            let flows = route_all_flows(&lat, &pairs, scheme.reach(lat.rings()));
            let load_sum: u64 = flows.loads.iter().map(|&z| z as u64).sum();
            let hop_sum: u64 = flows.flow_hops.iter().map(|&h| h as u64).sum();
            assert_eq!(load_sum, flows.total_hops);
            assert_eq!(hop_sum, flows.total_hops);
        }
    }

    #[test]
    fn short_hop_counts_match_hop_distance() {
        let lat = build_lattice(5, 1.0, Placement::Regular, 2).unwrap();
        let pairs = draw_sd_pairs(&lat, 9).unwrap();
        let flows = route_all_flows(&lat, &pairs, 1);
        for (k, &(s, d)) in pairs.pairs.iter().enumerate() {
            assert_eq!(flows.flow_hops[k], lat.hop_distance(s, d).unwrap());
        }
    }

    #[test]
    fn throughput_composition_arithmetic() {
        assert!((compose_throughput(1.0, 5, 4.0) - 1.0 / 24.0).abs() < 1e-15);
        assert!((compose_throughput(24.0, 5, 4.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn report_is_exact_composition_of_factors() {
        let lat = build_lattice(8, 1.0, Placement::Regular, 1).unwrap();
        let pairs = draw_sd_pairs(&lat, 1).unwrap();
        let cfg = SchemeConfig {
            scheme: Scheme::ShortHop,
            bandwidth_hz: 1e7,
            model: PathLossModel::new(3.0, 1.0),
            threshold_mw: 1e-7,
            power_mw: None,
        };
        let report = per_node_throughput(&cfg, &lat, &pairs).unwrap();
        let recomposed = compose_throughput(
            report.link_rate_bps,
            report.interfering_cells,
            report.relay_cap,
        );
        assert_eq!(report.throughput_bps, recomposed);
        assert_eq!(report.interfering_cells, 5);
        assert!(report.sinr > 0.0 && report.sinr < 1.0);
    }

    #[test]
    fn long_hop_link_rate_hits_full_bandwidth() {
        // With the whole lattice silenced, the threshold-exact link sees
        // SINR exactly 1 and the rate equals W.
        let lat = build_lattice(4, 1.0, Placement::Regular, 1).unwrap();
        let pairs = draw_sd_pairs(&lat, 2).unwrap();
        let cfg = SchemeConfig {
            scheme: Scheme::LongHop,
            bandwidth_hz: 1e6,
            model: PathLossModel::new(3.0, 1.0),
            threshold_mw: 1e-7,
            power_mw: None,
        };
        let report = per_node_throughput(&cfg, &lat, &pairs).unwrap();
        assert!((report.sinr - 1.0).abs() < 1e-9);
        assert!((report.link_rate_bps - 1e6).abs() < 1.0);
        assert_eq!(report.reach, 4);
        assert_eq!(report.interfering_cells, 3 * 4 * 5 - 1);
        assert!(report.cap_dominates);
    }

    #[test]
    fn fit_recovers_synthetic_exponents() {
        let pts: Vec<(f64, f64)> = [10.0, 100.0, 1000.0, 10000.0]
            .iter()
            .map(|&x: &f64| (x, x.powf(-0.5)))
            .collect();
        let fit = fit_scaling_exponent(&pts).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);

        let pts: Vec<(f64, f64)> = [10.0, 50.0, 250.0].iter().map(|&x| (x, 7.0)).collect();
        let fit = fit_scaling_exponent(&pts).unwrap();
        assert!(fit.slope.abs() < 1e-12);

        // 1% multiplicative noise moves the recovered exponent by < 0.02.
        let noise = [1.01, 0.99, 1.008, 0.994, 1.002];
        let pts: Vec<(f64, f64)> = [10.0, 100.0, 1000.0, 10000.0, 100000.0]
            .iter()
            .zip(noise)
            .map(|(&x, eps): (&f64, f64)| (x, x.powf(-1.0) * eps))
            .collect();
        let fit = fit_scaling_exponent(&pts).unwrap();
        assert!((fit.slope + 1.0).abs() < 0.02, "slope {}", fit.slope);
    }

    #[test]
    fn fit_rejects_bad_input() {
        assert!(fit_scaling_exponent(&[(1.0, 1.0), (2.0, 2.0)]).is_err());
        assert!(fit_scaling_exponent(&[(1.0, 1.0), (2.0, -2.0), (3.0, 1.0)]).is_err());
        assert!(fit_scaling_exponent(&[(1.0, 1.0), (1.0, 2.0), (1.0, 3.0)]).is_err());
    }
}
