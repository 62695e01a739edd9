//! Experiment orchestration: expands a config into independent cells,
//! dispatches them to a worker pool, and renders deterministic CSV.
//!
//! Rows come out in canonical (size, seed, scheme) order regardless of the
//! worker count, and every numeric column carries a unit suffix. Output
//! files are written atomically (temp file + rename).

use crate::config::{
    BoundsConfig, CheckConfig, ExperimentConfig, MultiTierConfig, PlanConfig, SingleTierConfig,
    Violation,
};
use hexmesh_core::lattice::{build_lattice, Placement};
use hexmesh_core::multi_tier::{
    default_eta, network_throughput, tier_flow_stats, tier_rate, MultiTierNetwork, TierBaseline,
};
use hexmesh_core::planner::{check_scalability, plan_deployment, resource_totals, DeploymentPlan};
use hexmesh_core::radio::{
    db_to_linear, dbm_to_mw, interference_bound_perturbed, interference_bound_regular,
    interference_sum, PathLossModel,
};
use hexmesh_core::single_tier::{per_node_throughput, SchemeConfig};
use hexmesh_core::traffic::{derive_seed, draw_sd_pairs};
use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

/// Failure modes of a run, mapped to process exit codes by the binary.
#[derive(Debug)]
pub enum RunError {
    /// Invalid configuration (exit 2).
    Config(Vec<Violation>),
    /// One or more cells failed; partial results were produced (exit 3).
    Cells {
        failures: Vec<String>,
        partial: RunOutput,
    },
    /// Output could not be written (exit 4).
    Io(String),
}

/// Rendered results of a run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    /// Main CSV (one row per experiment cell).
    pub csv: String,
    /// Per-tier long-format CSV, for the multi-tier command.
    pub tier_csv: Option<String>,
    /// Human-readable table, for the plan command.
    pub table: Option<String>,
    pub rows: usize,
}

/// FNV-1a hash of the config text, pinned into the CSV metadata.
pub fn config_hash(text: &str) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for b in text.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn metadata_header(command: &str, hash: u64, seed_note: &str) -> String {
    let now = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let mut s = String::new();
    s.push_str(&format!("# hexmesh {}\n", env!("CARGO_PKG_VERSION")));
    s.push_str(&format!("# command = {command}\n"));
    s.push_str(&format!("# config_hash = {hash:016x}\n"));
    s.push_str(&format!("# {seed_note}\n"));
    s.push_str(&format!("# generated_at_unix = {now}\n"));
    s
}

/// Runs `count` independent cells on `parallel` workers (0 = available
/// parallelism). Results land in cell order no matter the worker count;
/// a panicking cell becomes a failure message instead of tearing down the
/// pool.
fn run_cells<T, F>(count: usize, parallel: usize, job: F) -> Vec<Result<T, String>>
where
    T: Send,
    F: Fn(usize) -> Result<T, String> + Sync + std::panic::RefUnwindSafe,
{
    let workers = if parallel == 0 {
        std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
    } else {
        parallel
    }
    .min(count.max(1));

    let results: Mutex<Vec<Option<Result<T, String>>>> =
        Mutex::new((0..count).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::Relaxed);
                if idx >= count {
                    break;
                }
                let out = match std::panic::catch_unwind(|| job(idx)) {
                    Ok(r) => r,
                    Err(payload) => {
                        let msg = payload
                            .downcast_ref::<&str>()
                            .map(|s| s.to_string())
                            .or_else(|| payload.downcast_ref::<String>().cloned())
                            .unwrap_or_else(|| "panic".to_string());
                        Err(format!("cell {idx} panicked: {msg}"))
                    }
                };
                results.lock().unwrap()[idx] = Some(out);
            });
        }
    });
    results
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("every cell ran"))
        .collect()
}

/// Executes a parsed config. `parallel_override` takes precedence over the
/// config's `run.parallel`; `seed_override` replaces the seed sweep with a
/// single seed.
pub fn execute(
    config: &ExperimentConfig,
    raw_text: &str,
    parallel_override: Option<usize>,
    seed_override: Option<u64>,
) -> Result<RunOutput, RunError> {
    let hash = config_hash(raw_text);
    match config {
        ExperimentConfig::SingleTier(c) => {
            run_single_tier(c, hash, parallel_override, seed_override)
        }
        ExperimentConfig::MultiTier(c) => run_multi_tier(c, hash, parallel_override, seed_override),
        ExperimentConfig::Check(c) => run_check(c, hash),
        ExperimentConfig::Plan(c) => run_plan(c, hash),
        ExperimentConfig::Bounds(c) => run_bounds(c, hash, parallel_override, seed_override),
    }
}

fn seed_values(seeds: u64, base_seed: u64, seed_override: Option<u64>) -> Vec<u64> {
    match seed_override {
        Some(s) => vec![s],
        None => (0..seeds).map(|i| derive_seed(base_seed, i)).collect(),
    }
}

fn seed_note(base_seed: u64, seeds: &[u64]) -> String {
    let list = seeds
        .iter()
        .take(64)
        .map(|s| s.to_string())
        .collect::<Vec<_>>()
        .join(",");
    let suffix = if seeds.len() > 64 { ",..." } else { "" };
    format!(
        "base_seed = {base_seed}, seeds = {}, seed_values = {list}{suffix}",
        seeds.len()
    )
}

fn finish(
    command: &str,
    hash: u64,
    seed_note: String,
    header: &str,
    rows: Vec<Result<Vec<String>, String>>,
    tier_rows: Option<(String, Vec<String>)>,
    table: Option<String>,
) -> Result<RunOutput, RunError> {
    let mut failures = Vec::new();
    let mut body = String::new();
    let mut count = 0;
    for row in &rows {
        match row {
            Ok(lines) => {
                for line in lines {
                    body.push_str(line);
                    body.push('\n');
                    count += 1;
                }
            }
            Err(e) => failures.push(e.clone()),
        }
    }
    let mut csv = metadata_header(command, hash, &seed_note);
    if !failures.is_empty() {
        csv.push_str("# partial = true\n");
    }
    csv.push_str(header);
    csv.push('\n');
    csv.push_str(&body);

    let tier_csv = tier_rows.map(|(theader, tlines)| {
        let mut t = metadata_header(command, hash, &seed_note);
        t.push_str(&theader);
        t.push('\n');
        for line in tlines {
            t.push_str(&line);
            t.push('\n');
        }
        t
    });

    let output = RunOutput {
        csv,
        tier_csv,
        table,
        rows: count,
    };
    if failures.is_empty() {
        Ok(output)
    } else {
        Err(RunError::Cells {
            failures,
            partial: output,
        })
    }
}

fn run_single_tier(
    c: &SingleTierConfig,
    hash: u64,
    parallel_override: Option<usize>,
    seed_override: Option<u64>,
) -> Result<RunOutput, RunError> {
    let seeds = seed_values(c.seeds, c.base_seed, seed_override);
    let mut cells = Vec::new();
    for &rings in &c.rings {
        for (seed_idx, &seed) in seeds.iter().enumerate() {
            for &scheme in &c.schemes {
                cells.push((rings, seed_idx, seed, scheme));
            }
        }
    }
    let model = PathLossModel::new(c.alpha, db_to_linear(c.gain_db));
    let threshold_mw = dbm_to_mw(c.threshold_dbm);
    let parallel = parallel_override.unwrap_or(c.parallel);

    let rows = run_cells(cells.len(), parallel, |idx| {
        let (rings, seed_idx, seed, scheme) = cells[idx];
        let lattice = build_lattice(rings, c.side_m, c.placement, derive_seed(seed, 1))
            .map_err(|e| format!("cell {idx}: {e}"))?;
        let pairs = draw_sd_pairs(&lattice, derive_seed(seed, 2))
            .map_err(|e| format!("cell {idx}: {e}"))?;
        let cfg = SchemeConfig {
            scheme,
            bandwidth_hz: c.bandwidth_hz,
            model,
            threshold_mw,
            power_mw: c.power_mw,
        };
        let rep =
            per_node_throughput(&cfg, &lattice, &pairs).map_err(|e| format!("cell {idx}: {e}"))?;
        let power_source = if c.power_mw.is_some() {
            "override"
        } else {
            "threshold"
        };
        Ok(vec![format!(
            "st-{rings}-s{seed_idx}-{},{},{rings},{},{seed},{},{},{},{},{},{},{},{},{},{power_source}",
            scheme.label(),
            scheme.label(),
            rep.n,
            rep.reach,
            rep.sinr,
            rep.link_rate_bps,
            rep.interfering_cells,
            rep.relay_mean,
            rep.relay_max,
            rep.relay_cap,
            rep.cap_dominates,
            rep.throughput_bps
        )])
    });

    finish(
        "single-tier",
        hash,
        seed_note(c.base_seed, &seeds),
        "experiment_id,scheme,rings,n_nodes,seed,reach_rings,sinr_linear,link_rate_bps,interfering_cells,relay_mean_flows,relay_max_flows,relay_cap_flows,cap_dominates,throughput_bps,power_source",
        rows,
        None,
        None,
    )
}

fn run_multi_tier(
    c: &MultiTierConfig,
    hash: u64,
    parallel_override: Option<usize>,
    seed_override: Option<u64>,
) -> Result<RunOutput, RunError> {
    let seeds = seed_values(c.seeds, c.base_seed, seed_override);
    let mut cells = Vec::new();
    for &nodes in &c.nodes {
        for (seed_idx, &seed) in seeds.iter().enumerate() {
            for &mode in &c.modes {
                cells.push((nodes, seed_idx, seed, mode));
            }
        }
    }
    let parallel = parallel_override.unwrap_or(c.parallel);

    type CellRows = (Vec<String>, Vec<String>);
    let results: Vec<Result<CellRows, String>> = run_cells(cells.len(), parallel, |idx| {
        let (nodes, seed_idx, seed, mode) = cells[idx];
        let base = TierBaseline {
            spacing_m: c.spacing_m,
            bandwidth_hz: c.bandwidth_hz,
            antennas: c.antennas,
            alpha: c.alpha,
            gain: db_to_linear(c.gain_db),
            threshold_mw: dbm_to_mw(c.threshold_dbm),
            placement: c.placement,
            seed: derive_seed(seed, 1),
        };
        let net = MultiTierNetwork::build(nodes, &c.orders, &base)
            .map_err(|e| format!("cell {idx}: {e}"))?;
        let pairs = draw_sd_pairs(&net.tiers[0].lattice, derive_seed(seed, 2))
            .map_err(|e| format!("cell {idx}: {e}"))?;
        let routes = net.route_flows(&pairs, mode);
        let stats = tier_flow_stats(&net, &routes, &c.orders);
        let analytic = net
            .analytic_crossing()
            .map_err(|e| format!("cell {idx}: {e}"))?;
        let mut etas = Vec::with_capacity(net.tiers.len());
        for tier in &net.tiers {
            etas.push(match c.eta {
                Some(v) => v,
                None => default_eta(tier).map_err(|e| format!("cell {idx}: {e}"))?,
            });
        }
        let rates: Vec<Option<f64>> = net
            .tiers
            .iter()
            .zip(&stats)
            .zip(&etas)
            .map(|((tier, st), &eta)| tier_rate(tier, st, mode, eta, c.bf_floor))
            .collect();
        let throughput = network_throughput(&rates).map_err(|e| format!("cell {idx}: {e}"))?;
        let bottleneck = rates
            .iter()
            .position(|r| r.is_some_and(|v| v == throughput))
            .map(|t| t + 1)
            .unwrap_or(0);
        let id = format!("mt-{nodes}-s{seed_idx}-{}", mode.label());
        let eta_source = if c.eta.is_some() { "fixed" } else { "auto" };
        let net_row = format!(
            "{id},{},{nodes},{},{seed},{},{},{eta_source},{throughput},{bottleneck}",
            mode.label(),
            net.data_nodes(),
            net.tier_count(),
            etas[0],
        );
        let mut tier_lines = Vec::with_capacity(net.tiers.len());
        for (t, tier) in net.tiers.iter().enumerate() {
            let st = &stats[t];
            let parent_max = st.parent_band_demand.iter().cloned().fold(0.0f64, f64::max);
            let fields: Vec<String> = vec![
                id.clone(),
                mode.label().to_string(),
                nodes.to_string(),
                seed.to_string(),
                tier.index.to_string(),
                tier.n_target.to_string(),
                tier.n_actual().to_string(),
                tier.bandwidth_hz.to_string(),
                tier.antennas.to_string(),
                tier.power_mw.to_string(),
                tier.hop_limit.to_string(),
                tier.spacing_m.to_string(),
                st.crossing_fraction.to_string(),
                st.completion_fraction.to_string(),
                analytic[t].to_string(),
                st.relay_mean().to_string(),
                st.relay_max().to_string(),
                parent_max.to_string(),
                st.zeta_up.to_string(),
                st.zeta_same.to_string(),
                rates[t]
                    .map(|r| r.to_string())
                    .unwrap_or_else(|| "untrafficked".into()),
                etas[t].to_string(),
            ];
            tier_lines.push(fields.join(","));
        }
        Ok((vec![net_row], tier_lines))
    });

    let mut rows = Vec::with_capacity(results.len());
    let mut tier_lines = Vec::new();
    for r in results {
        match r {
            Ok((net_rows, tiers)) => {
                rows.push(Ok(net_rows));
                tier_lines.extend(tiers);
            }
            Err(e) => rows.push(Err(e)),
        }
    }

    finish(
        "multi-tier",
        hash,
        seed_note(c.base_seed, &seeds),
        "experiment_id,mode,n_target,n_data_actual,seed,tiers,eta_tier1,eta_source,throughput_bps,bottleneck_tier",
        rows,
        Some((
            "experiment_id,mode,n_target,seed,tier,n_tier_target,n_tier_actual,bandwidth_hz,antennas,power_mw,hop_limit,spacing_m,crossing_fraction,completion_fraction,analytic_crossing,relay_mean_slots,relay_max_slots,parent_demand_max_slots,zeta_up,zeta_same,tier_rate_bps,eta".to_string(),
            tier_lines,
        )),
        None,
    )
}

fn run_check(c: &CheckConfig, hash: u64) -> Result<RunOutput, RunError> {
    let mut rows = Vec::new();
    for &mode in &c.modes {
        let v = check_scalability(&c.orders, c.alpha, mode).map_err(|e| {
            RunError::Config(vec![Violation {
                line: 0,
                key: "scaling".into(),
                message: e.to_string(),
            }])
        })?;
        let totals = resource_totals(&c.orders, 10u64.pow(9), 1.0, 1).map_err(|e| {
            RunError::Config(vec![Violation {
                line: 0,
                key: "scaling".into(),
                message: e.to_string(),
            }])
        })?;
        let _ = totals;
        rows.push(Ok(vec![format!(
            "{},{},{},{},{},{},{},{},{},{}",
            mode.label(),
            c.orders.k,
            c.orders.psi,
            c.orders.upsilon,
            c.alpha,
            v.holds,
            v.margin,
            v.bandwidth_total_exponent,
            v.antenna_max_exponent,
            v.power_top_exponent
        )]));
    }
    finish(
        "check",
        hash,
        "base_seed = n/a, seeds = 0".to_string(),
        "mode,k,psi,upsilon,alpha,holds,margin,bandwidth_total_exponent,antenna_max_exponent,power_top_exponent",
        rows,
        None,
        None,
    )
}

/// Aligned per-tier table mirroring the deployment summary layout.
pub fn plan_table(plan: &DeploymentPlan) -> String {
    let tiers = &plan.tiers;
    let mut cols: Vec<Vec<String>> = vec![vec!["Tier index".into()]];
    cols[0].extend([
        "Number of nodes".into(),
        "Antenna gain (dB)".into(),
        "Transmit power".into(),
        "Bandwidth".into(),
        "Antenna number".into(),
        "Transmission range".into(),
        "Hop limit".into(),
    ]);
    for t in tiers {
        let power = if t.power_mw >= 1000.0 {
            format!(
                "{} W{}",
                round3(t.power_mw / 1000.0),
                if t.deviates_from_reference {
                    " (!)"
                } else {
                    ""
                }
            )
        } else {
            format!(
                "{} mW{}",
                round3(t.power_mw),
                if t.deviates_from_reference {
                    " (!)"
                } else {
                    ""
                }
            )
        };
        let bw = if t.bandwidth_hz >= 1e6 {
            format!("{} MHz", round3(t.bandwidth_hz / 1e6))
        } else {
            format!("{} Hz", round3(t.bandwidth_hz))
        };
        let range = if t.range_m >= 1000.0 {
            format!("{} km", round3(t.range_m / 1000.0))
        } else {
            format!("{} m", round3(t.range_m))
        };
        cols.push(vec![
            t.tier.to_string(),
            t.nodes.to_string(),
            round3(t.gain_db).to_string(),
            power,
            bw,
            t.antennas.to_string(),
            range,
            t.hop_limit.to_string(),
        ]);
    }
    let widths: Vec<usize> = cols
        .iter()
        .map(|c| c.iter().map(|s| s.len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in 0..cols[0].len() {
        for (c, col) in cols.iter().enumerate() {
            if c == 0 {
                out.push_str(&format!("{:<w$}", col[row], w = widths[c] + 2));
            } else {
                out.push_str(&format!("{:>w$}", col[row], w = widths[c] + 2));
            }
        }
        out.push('\n');
    }
    out.push_str(&format!(
        "calibrated propagation constant (linear): {:.3e}\n",
        plan.calibration
    ));
    if tiers.iter().any(|t| t.deviates_from_reference) {
        out.push_str("(!) computed power deviates from the supplied reference by more than 1.5x\n");
    }
    out
}

fn round3(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let mag = x.abs().log10().floor();
    let scale = 10f64.powf(2.0 - mag);
    (x * scale).round() / scale
}

fn run_plan(c: &PlanConfig, hash: u64) -> Result<RunOutput, RunError> {
    let plan = plan_deployment(&c.orders, &c.anchor).map_err(|e| {
        RunError::Config(vec![Violation {
            line: 0,
            key: "plan".into(),
            message: e.to_string(),
        }])
    })?;
    let rows = plan
        .tiers
        .iter()
        .map(|t| {
            Ok(vec![format!(
                "{},{},{},{},{},{},{},{},{},{}",
                t.tier,
                t.nodes,
                t.gain_db,
                t.effective_gain,
                t.power_mw,
                t.bandwidth_hz,
                t.antennas,
                t.range_m,
                t.hop_limit,
                t.deviates_from_reference
            )])
        })
        .collect();
    let table = plan_table(&plan);
    finish(
        "plan",
        hash,
        "base_seed = n/a, seeds = 0".to_string(),
        "tier,nodes,gain_db,effective_gain_linear,power_mw,bandwidth_hz,antennas,range_m,hop_limit,deviates_from_reference",
        rows,
        None,
        Some(table),
    )
}

fn run_bounds(
    c: &BoundsConfig,
    hash: u64,
    parallel_override: Option<usize>,
    seed_override: Option<u64>,
) -> Result<RunOutput, RunError> {
    // Regular grid cells plus seeded perturbed trials.
    enum Cell {
        Regular { rings: u32, alpha: f64 },
        Perturbed { trial: u64 },
    }
    let mut cells = Vec::new();
    for rings in 1..=c.rings_max {
        for &alpha in &c.alphas {
            cells.push(Cell::Regular { rings, alpha });
        }
    }
    for trial in 0..c.trials {
        cells.push(Cell::Perturbed { trial });
    }
    let base = seed_override.unwrap_or(c.base_seed);
    let parallel = parallel_override.unwrap_or(c.parallel);

    let rows = run_cells(cells.len(), parallel, |idx| match cells[idx] {
        Cell::Regular { rings, alpha } => {
            let model = PathLossModel::new(alpha, 1.0);
            let lat = build_lattice(rings, 1.0, Placement::Regular, 0)
                .map_err(|e| format!("cell {idx}: {e}"))?;
            let active: Vec<u32> = (1..lat.len()).collect();
            let sum = interference_sum(&lat, model, 1.0, 0, &active)
                .map_err(|e| format!("cell {idx}: {e}"))?;
            let bound = interference_bound_regular(model, 1.0, 1.0)
                .map_err(|e| format!("cell {idx}: {e}"))?;
            Ok(vec![format!(
                "regular,{rings},{alpha},0,0,{sum},{bound},{}",
                sum <= bound
            )])
        }
        Cell::Perturbed { trial } => {
            let model = PathLossModel::new(c.alpha_perturbed, 1.0);
            let seed = derive_seed(base, trial);
            let lat = build_lattice(
                c.rings_perturbed,
                1.0,
                Placement::Perturbed(c.epsilon),
                seed,
            )
            .map_err(|e| format!("cell {idx}: {e}"))?;
            let active: Vec<u32> = (1..lat.len()).collect();
            let sum = interference_sum(&lat, model, 1.0, 0, &active)
                .map_err(|e| format!("cell {idx}: {e}"))?;
            let bound = interference_bound_perturbed(model, 1.0, 1.0, c.epsilon)
                .map_err(|e| format!("cell {idx}: {e}"))?;
            Ok(vec![format!(
                "perturbed,{},{},{},{seed},{sum},{bound},{}",
                c.rings_perturbed,
                c.alpha_perturbed,
                c.epsilon,
                sum <= bound
            )])
        }
    });

    finish(
        "bounds",
        hash,
        format!("base_seed = {base}, trials = {}", c.trials),
        "kind,rings,alpha,epsilon,seed,interference_mw,bound_mw,within_bound",
        rows,
        None,
        None,
    )
}

/// Writes bytes atomically: temp file in the target directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let tmp = match dir {
        Some(d) => d.join(format!(
            ".{}.tmp",
            path.file_name().unwrap_or_default().to_string_lossy()
        )),
        None => std::path::PathBuf::from(format!(
            ".{}.tmp",
            path.file_name().unwrap_or_default().to_string_lossy()
        )),
    };
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)
}
