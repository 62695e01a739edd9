//! Seeded Monte Carlo checks of the scaling behavior the simulator is
//! built to measure. Heavier sweeps live in the acceptance suite; these
//! runs are sized for the regular test cycle.

use hexmesh_core::lattice::{build_lattice, Placement};
use hexmesh_core::multi_tier::{
    default_eta, tier_flow_stats, tier_rate, MimoMode, MultiTierNetwork, ScalingOrders,
    TierBaseline,
};
use hexmesh_core::radio::PathLossModel;
use hexmesh_core::single_tier::{
    fit_scaling_exponent, per_node_throughput, route_all_flows, Scheme, SchemeConfig,
};
use hexmesh_core::traffic::{derive_seed, draw_sd_pairs};

fn baseline(placement: Placement, seed: u64) -> TierBaseline {
    TierBaseline {
        spacing_m: 50.0,
        bandwidth_hz: 1e7,
        antennas: 1,
        alpha: 3.0,
        gain: 1.0,
        threshold_mw: 10f64.powf(-7.8),
        placement,
        seed,
    }
}

#[test]
fn short_hop_mean_relay_load_grows_like_sqrt_n() {
    let mut pts = Vec::new();
    for rings in [8u32, 16, 32] {
        let lat = build_lattice(rings, 1.0, Placement::Regular, 0).unwrap();
        let mut mean = 0.0;
        for s in 0..5u64 {
            let pairs = draw_sd_pairs(&lat, derive_seed(11, s)).unwrap();
            let flows = route_all_flows(&lat, &pairs, 1);
            mean += flows.total_hops as f64 / lat.len() as f64 / 5.0;
        }
        pts.push((lat.len() as f64, mean));
    }
    let fit = fit_scaling_exponent(&pts).unwrap();
    assert!(
        (fit.slope - 0.5).abs() <= 0.15,
        "mean relay-load exponent {} outside 0.5 +/- 0.15",
        fit.slope
    );
}

#[test]
fn long_hop_relay_load_stays_constant_order() {
    // The worst per-node load under long-hop routing neither grows nor
    // shrinks with n in any material way.
    let mut pts = Vec::new();
    for rings in [8u32, 16, 32] {
        let lat = build_lattice(rings, 1.0, Placement::Regular, 0).unwrap();
        let mut mean_max = 0.0;
        for s in 0..5u64 {
            let pairs = draw_sd_pairs(&lat, derive_seed(13, s)).unwrap();
            let flows = route_all_flows(&lat, &pairs, lat.rings());
            let max = flows.loads.iter().copied().max().unwrap();
            assert!(max <= 12, "rings {rings} seed {s}: max load {max}");
            mean_max += max as f64 / 5.0;
        }
        pts.push((lat.len() as f64, mean_max));
    }
    let fit = fit_scaling_exponent(&pts).unwrap();
    assert!(
        fit.slope.abs() <= 0.2,
        "long-hop max-load exponent {} not constant-order",
        fit.slope
    );
}

#[test]
fn long_hop_throughput_decays_inversely() {
    let model = PathLossModel::new(3.0, 1.0);
    let mut pts = Vec::new();
    for rings in [8u32, 16, 32] {
        let lat = build_lattice(rings, 1.0, Placement::Regular, 0).unwrap();
        let mut tp = 0.0;
        for s in 0..5u64 {
            let pairs = draw_sd_pairs(&lat, derive_seed(17, s)).unwrap();
            let cfg = SchemeConfig {
                scheme: Scheme::LongHop,
                bandwidth_hz: 1e7,
                model,
                threshold_mw: 1e-7,
                power_mw: None,
            };
            tp += per_node_throughput(&cfg, &lat, &pairs)
                .unwrap()
                .throughput_bps
                / 5.0;
        }
        pts.push((lat.len() as f64, tp));
    }
    let fit = fit_scaling_exponent(&pts).unwrap();
    assert!(
        (-1.25..=-0.8).contains(&fit.slope),
        "long-hop throughput slope {}",
        fit.slope
    );
}

#[test]
fn parent_access_hops_track_coverage_ratio() {
    // Mean hops from a tier node to its parent, against sqrt((1+1/l)^k):
    // the ratios stay within a factor of two of each other across tiers.
    let orders = ScalingOrders::new(2.0, 1.0, 1.0).unwrap();
    let net = MultiTierNetwork::build(4096, &orders, &baseline(Placement::Regular, 0)).unwrap();
    let mut ratios = Vec::new();
    for t in 0..6usize {
        let lower = &net.tiers[t];
        let parents = net.parent_map(t as u32 + 1);
        let mut total = 0u64;
        for id in 0..lower.n_actual() {
            let p = net.tiers[t + 1].position(parents[id as usize]).unwrap();
            let landing = lower.nearest_node(p);
            total += lower.lattice.hop_distance(id, landing).unwrap() as u64 + 1;
        }
        let mean = total as f64 / lower.n_actual() as f64;
        let root = (1.0 + 1.0 / (t as f64 + 1.0)).powf(orders.k / 2.0);
        ratios.push(mean / root);
    }
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().cloned().fold(0.0f64, f64::max);
    assert!(hi / lo <= 2.0, "access-hop ratios spread {lo}..{hi}");
}

#[test]
fn tier_relay_loads_grow_with_tier_decay_order() {
    // Mean per-node load across the constant-crossing tiers fits l^k
    // within +/- 0.3 of k.
    let orders = ScalingOrders::new(2.0, 1.0, 1.0).unwrap();
    let net = MultiTierNetwork::build(4096, &orders, &baseline(Placement::Regular, 0)).unwrap();
    let seeds = 10u64;
    let mut mean_z = [0.0; 4];
    for s in 0..seeds {
        let pairs = draw_sd_pairs(&net.tiers[0].lattice, derive_seed(900, s)).unwrap();
        let routes = net.route_flows(&pairs, MimoMode::SpatialMultiplexing);
        let stats = tier_flow_stats(&net, &routes, &orders);
        for t in 0..4 {
            mean_z[t] += stats[t].relay_mean() / seeds as f64;
        }
    }
    let pts: Vec<(f64, f64)> = mean_z
        .iter()
        .enumerate()
        .map(|(t, &z)| ((t + 1) as f64, z))
        .collect();
    let fit = fit_scaling_exponent(&pts).unwrap();
    assert!(
        (fit.slope - orders.k).abs() <= 0.3,
        "tier relay-load exponent {} vs k = {}",
        fit.slope,
        orders.k
    );
}

#[test]
fn tier_rates_stay_constant_order_at_zero_margin() {
    // k = psi + upsilon: per-tier rates across the constant-crossing
    // tiers stay within [1/4, 4] of the data tier's rate.
    let orders = ScalingOrders::new(2.0, 1.0, 1.0).unwrap();
    let net = MultiTierNetwork::build(4096, &orders, &baseline(Placement::Regular, 0)).unwrap();
    let etas: Vec<f64> = net.tiers.iter().map(|t| default_eta(t).unwrap()).collect();
    let seeds = 10u64;
    let mut rates = [0.0; 6];
    for s in 0..seeds {
        let pairs = draw_sd_pairs(&net.tiers[0].lattice, derive_seed(901, s)).unwrap();
        let routes = net.route_flows(&pairs, MimoMode::SpatialMultiplexing);
        let stats = tier_flow_stats(&net, &routes, &orders);
        for t in 0..6 {
            rates[t] += tier_rate(
                &net.tiers[t],
                &stats[t],
                MimoMode::SpatialMultiplexing,
                etas[t],
                0.0,
            )
            .expect("tier carries traffic")
                / seeds as f64;
        }
    }
    for (t, &r) in rates.iter().enumerate() {
        let ratio = r / rates[0];
        assert!(
            (0.25..=4.0).contains(&ratio),
            "tier {} rate ratio {ratio}",
            t + 1
        );
    }
}

#[test]
fn beamforming_never_loads_a_node_more_than_spatial_multiplexing() {
    for upsilon in [1.0, 2.0] {
        let orders = ScalingOrders::new(2.0, 1.0, upsilon).unwrap();
        for s in 0..3u64 {
            let net = MultiTierNetwork::build(
                1024,
                &orders,
                &baseline(Placement::Perturbed(0.25), derive_seed(70, s)),
            )
            .unwrap();
            let pairs = draw_sd_pairs(&net.tiers[0].lattice, derive_seed(71, s)).unwrap();
            let sm = tier_flow_stats(
                &net,
                &net.route_flows(&pairs, MimoMode::SpatialMultiplexing),
                &orders,
            );
            let bf = tier_flow_stats(
                &net,
                &net.route_flows(&pairs, MimoMode::Beamforming),
                &orders,
            );
            for (a, b) in sm.iter().zip(&bf) {
                assert_eq!(a.crossing_flows, b.crossing_flows);
                for (i, (&za, &zb)) in a.relay_loads.iter().zip(&b.relay_loads).enumerate() {
                    assert!(
                        zb <= za,
                        "tier {} node {i}: beamforming load {zb} > {za}",
                        a.tier
                    );
                }
            }
        }
    }
}
