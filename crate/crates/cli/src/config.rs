//! Experiment configuration: a flat `key = value` format with bracketed
//! sections. Parsing validates every line and reports all violations at
//! once, with the offending line numbers.

use hexmesh_core::lattice::{Placement, DEFAULT_EPSILON, EPSILON_LIMIT};
use hexmesh_core::multi_tier::{MimoMode, ScalingOrders};
use hexmesh_core::planner::DeploymentAnchor;
use hexmesh_core::single_tier::Scheme;

/// Which subcommand a config drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    SingleTier,
    MultiTier,
    Check,
    Plan,
    Bounds,
}

impl CommandKind {
    pub fn label(self) -> &'static str {
        match self {
            CommandKind::SingleTier => "single-tier",
            CommandKind::MultiTier => "multi-tier",
            CommandKind::Check => "check",
            CommandKind::Plan => "plan",
            CommandKind::Bounds => "bounds",
        }
    }
}

/// One rejected config line or missing requirement.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    /// 1-based line number; 0 for whole-file problems.
    pub line: usize,
    pub key: String,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.line == 0 {
            write!(f, "{}: {}", self.key, self.message)
        } else {
            write!(f, "line {}: {}: {}", self.line, self.key, self.message)
        }
    }
}

/// Documented key registry; drives validation and the `keys` reference.
pub struct KeyDoc {
    pub section: &'static str,
    pub key: &'static str,
    pub commands: &'static [CommandKind],
    pub constraint: &'static str,
    pub description: &'static str,
}

use CommandKind::*;

#[rustfmt::skip]
pub const KEY_DOCS: &[KeyDoc] = &[
    KeyDoc { section: "network", key: "rings", commands: &[SingleTier], constraint: "comma list, each >= 1", description: "lattice ring counts to sweep (n = 3L(L+1)+1)" },
    KeyDoc { section: "network", key: "nodes", commands: &[MultiTier], constraint: "comma list, each >= 2", description: "data-node counts to sweep" },
    KeyDoc { section: "network", key: "placement", commands: &[SingleTier, MultiTier], constraint: "regular | perturbed", description: "node placement within cells (default regular)" },
    KeyDoc { section: "network", key: "epsilon", commands: &[SingleTier, MultiTier], constraint: "0 <= eps < 3/4", description: "perturbation radius in cell-side units (default 0.25)" },
    KeyDoc { section: "network", key: "side_m", commands: &[SingleTier], constraint: "> 0", description: "hexagonal cell side length, meters (default 1)" },
    KeyDoc { section: "network", key: "spacing_m", commands: &[MultiTier], constraint: "> 0", description: "tier-1 neighbor spacing, meters (default 50)" },
    KeyDoc { section: "radio", key: "alpha", commands: &[SingleTier, MultiTier, Check], constraint: "2 < alpha <= 6", description: "path-loss exponent (default 3)" },
    KeyDoc { section: "radio", key: "gain_db", commands: &[SingleTier, MultiTier], constraint: "finite", description: "effective gain constant, dB (default 0)" },
    KeyDoc { section: "radio", key: "threshold_dbm", commands: &[SingleTier, MultiTier], constraint: "finite", description: "receive threshold, dBm (default -78)" },
    KeyDoc { section: "radio", key: "bandwidth_hz", commands: &[SingleTier, MultiTier], constraint: "> 0", description: "tier-1 bandwidth, Hz (default 1e7)" },
    KeyDoc { section: "radio", key: "power_mw", commands: &[SingleTier], constraint: "> 0", description: "transmit power override, mW (default: threshold-exact)" },
    KeyDoc { section: "run", key: "seeds", commands: &[SingleTier, MultiTier, Bounds], constraint: ">= 1", description: "number of seeded repetitions (default 20)" },
    KeyDoc { section: "run", key: "base_seed", commands: &[SingleTier, MultiTier, Bounds], constraint: "u64", description: "base seed; repetition seeds derive from it (default 0)" },
    KeyDoc { section: "run", key: "parallel", commands: &[SingleTier, MultiTier, Bounds], constraint: ">= 0", description: "worker threads; 0 = available parallelism (default 0)" },
    KeyDoc { section: "run", key: "scheme", commands: &[SingleTier], constraint: "sh | lh | both", description: "transmission scheme selection (default both)" },
    KeyDoc { section: "run", key: "mode", commands: &[MultiTier, Check], constraint: "sm | bf | both", description: "MIMO scheme selection (default sm)" },
    KeyDoc { section: "scaling", key: "k", commands: &[MultiTier, Check, Plan], constraint: "k >= 2", description: "tier node-count decay order" },
    KeyDoc { section: "scaling", key: "psi", commands: &[MultiTier, Check, Plan], constraint: "psi >= 1", description: "tier bandwidth growth order" },
    KeyDoc { section: "scaling", key: "upsilon", commands: &[MultiTier, Check, Plan], constraint: "upsilon >= 1", description: "tier antenna growth order" },
    KeyDoc { section: "multi_tier", key: "antennas", commands: &[MultiTier], constraint: ">= 1", description: "tier-1 antennas per node (default 1)" },
    KeyDoc { section: "multi_tier", key: "eta", commands: &[MultiTier], constraint: "auto | > 0", description: "spectral efficiency for the DoF rate (default auto)" },
    KeyDoc { section: "multi_tier", key: "bf_floor", commands: &[MultiTier], constraint: ">= 0", description: "beamforming residual interference, multiples of the threshold (default 0)" },
    KeyDoc { section: "plan", key: "nodes", commands: &[Plan], constraint: ">= 1", description: "data nodes to plan for" },
    KeyDoc { section: "plan", key: "power_mw", commands: &[Plan], constraint: "> 0", description: "tier-1 transmit power, mW" },
    KeyDoc { section: "plan", key: "range_m", commands: &[Plan], constraint: "> 0", description: "tier-1 transmission range, meters" },
    KeyDoc { section: "plan", key: "threshold_dbm", commands: &[Plan], constraint: "finite", description: "receive threshold, dBm" },
    KeyDoc { section: "plan", key: "gains_db", commands: &[Plan], constraint: "comma list, one per tier", description: "per-tier antenna gains, dB" },
    KeyDoc { section: "plan", key: "alphas", commands: &[Plan], constraint: "comma list, each > 2", description: "per-tier path-loss exponents" },
    KeyDoc { section: "plan", key: "bandwidth_hz", commands: &[Plan], constraint: "> 0", description: "tier-1 bandwidth, Hz" },
    KeyDoc { section: "plan", key: "antennas", commands: &[Plan], constraint: ">= 1", description: "tier-1 antennas per node" },
    KeyDoc { section: "plan", key: "reference_power_mw", commands: &[Plan], constraint: "comma list, one per tier", description: "published per-tier powers to cross-check, mW (optional)" },
    KeyDoc { section: "bounds", key: "rings_max", commands: &[Bounds], constraint: ">= 1", description: "largest regular lattice ring count to check (default 32)" },
    KeyDoc { section: "bounds", key: "alphas", commands: &[Bounds], constraint: "comma list, each > 2", description: "path-loss exponents for the regular grid (default 2.5,3,3.5,4)" },
    KeyDoc { section: "bounds", key: "trials", commands: &[Bounds], constraint: ">= 1", description: "seeded perturbed lattices to check (default 1000)" },
    KeyDoc { section: "bounds", key: "epsilon", commands: &[Bounds], constraint: "0 <= eps < 3/4", description: "perturbation radius for the trials (default 0.25)" },
    KeyDoc { section: "bounds", key: "rings_perturbed", commands: &[Bounds], constraint: ">= 1", description: "ring count for the perturbed trials (default 16)" },
    KeyDoc { section: "bounds", key: "alpha_perturbed", commands: &[Bounds], constraint: "> 2", description: "path-loss exponent for the perturbed trials (default 3)" },
];

/// Render the generated key reference page.
pub fn key_reference() -> String {
    let mut out =
        String::from("Configuration keys (section.key  [commands]  constraint  description)\n");
    for doc in KEY_DOCS {
        let cmds: Vec<&str> = doc.commands.iter().map(|c| c.label()).collect();
        out.push_str(&format!(
            "  {}.{:<20} [{}]  {}  --  {}\n",
            doc.section,
            doc.key,
            cmds.join(","),
            doc.constraint,
            doc.description
        ));
    }
    out
}

#[derive(Debug, Clone)]
pub struct SingleTierConfig {
    pub rings: Vec<u32>,
    pub placement: Placement,
    pub side_m: f64,
    pub alpha: f64,
    pub gain_db: f64,
    pub threshold_dbm: f64,
    pub bandwidth_hz: f64,
    pub power_mw: Option<f64>,
    pub schemes: Vec<Scheme>,
    pub seeds: u64,
    pub base_seed: u64,
    pub parallel: usize,
}

#[derive(Debug, Clone)]
pub struct MultiTierConfig {
    pub nodes: Vec<u64>,
    pub placement: Placement,
    pub spacing_m: f64,
    pub alpha: f64,
    pub gain_db: f64,
    pub threshold_dbm: f64,
    pub bandwidth_hz: f64,
    pub antennas: u32,
    pub orders: ScalingOrders,
    pub modes: Vec<MimoMode>,
    pub eta: Option<f64>,
    pub bf_floor: f64,
    pub seeds: u64,
    pub base_seed: u64,
    pub parallel: usize,
}

#[derive(Debug, Clone)]
pub struct CheckConfig {
    pub orders: ScalingOrders,
    pub alpha: f64,
    pub modes: Vec<MimoMode>,
}

#[derive(Debug, Clone)]
pub struct PlanConfig {
    pub orders: ScalingOrders,
    pub anchor: DeploymentAnchor,
}

#[derive(Debug, Clone)]
pub struct BoundsConfig {
    pub rings_max: u32,
    pub alphas: Vec<f64>,
    pub trials: u64,
    pub epsilon: f64,
    pub rings_perturbed: u32,
    pub alpha_perturbed: f64,
    pub seeds: u64,
    pub base_seed: u64,
    pub parallel: usize,
}

#[derive(Debug, Clone)]
pub enum ExperimentConfig {
    SingleTier(SingleTierConfig),
    MultiTier(MultiTierConfig),
    Check(CheckConfig),
    Plan(PlanConfig),
    Bounds(BoundsConfig),
}

impl ExperimentConfig {
    pub fn kind(&self) -> CommandKind {
        match self {
            ExperimentConfig::SingleTier(_) => CommandKind::SingleTier,
            ExperimentConfig::MultiTier(_) => CommandKind::MultiTier,
            ExperimentConfig::Check(_) => CommandKind::Check,
            ExperimentConfig::Plan(_) => CommandKind::Plan,
            ExperimentConfig::Bounds(_) => CommandKind::Bounds,
        }
    }
}

struct Entry {
    line: usize,
    section: String,
    key: String,
    value: String,
    used: bool,
}

/// Accumulates typed lookups over the raw entries, recording violations.
struct Reader {
    entries: Vec<Entry>,
    violations: Vec<Violation>,
}

impl Reader {
    fn take(&mut self, section: &str, key: &str) -> Option<(usize, String)> {
        for e in &mut self.entries {
            if e.section == section && e.key == key && !e.used {
                e.used = true;
                return Some((e.line, e.value.clone()));
            }
        }
        None
    }

    fn reject(&mut self, line: usize, key: &str, message: String) {
        self.violations.push(Violation {
            line,
            key: key.to_string(),
            message,
        });
    }

    fn f64(&mut self, section: &str, key: &str, default: f64) -> f64 {
        match self.take(section, key) {
            None => default,
            Some((line, v)) => match v.parse::<f64>() {
                Ok(x) if x.is_finite() => x,
                _ => {
                    self.reject(line, key, format!("expected a number, got `{v}`"));
                    default
                }
            },
        }
    }

    fn f64_opt(&mut self, section: &str, key: &str) -> Option<f64> {
        match self.take(section, key) {
            None => None,
            Some((line, v)) => match v.parse::<f64>() {
                Ok(x) if x.is_finite() => Some(x),
                _ => {
                    self.reject(line, key, format!("expected a number, got `{v}`"));
                    None
                }
            },
        }
    }

    fn u64(&mut self, section: &str, key: &str, default: u64) -> u64 {
        match self.take(section, key) {
            None => default,
            Some((line, v)) => match v.parse::<u64>() {
                Ok(x) => x,
                _ => {
                    self.reject(
                        line,
                        key,
                        format!("expected a nonnegative integer, got `{v}`"),
                    );
                    default
                }
            },
        }
    }

    fn list_f64(&mut self, section: &str, key: &str) -> Option<(usize, Vec<f64>)> {
        let (line, v) = self.take(section, key)?;
        let mut out = Vec::new();
        for part in v.split(',') {
            match part.trim().parse::<f64>() {
                Ok(x) if x.is_finite() => out.push(x),
                _ => {
                    self.reject(
                        line,
                        key,
                        format!("expected comma-separated numbers, got `{v}`"),
                    );
                    return None;
                }
            }
        }
        Some((line, out))
    }

    fn finish_unknown_keys(&mut self, kind: CommandKind) {
        let mut unknown = Vec::new();
        for e in &self.entries {
            if e.used {
                continue;
            }
            let doc = KEY_DOCS
                .iter()
                .find(|d| d.section == e.section && d.key == e.key);
            let message = match doc {
                None => format!("unknown key `{}` in section [{}]", e.key, e.section),
                Some(d) => format!(
                    "key `{}.{}` does not apply to the {} command (valid for: {})",
                    e.section,
                    e.key,
                    kind.label(),
                    d.commands
                        .iter()
                        .map(|c| c.label())
                        .collect::<Vec<_>>()
                        .join(", ")
                ),
            };
            unknown.push(Violation {
                line: e.line,
                key: format!("{}.{}", e.section, e.key),
                message,
            });
        }
        self.violations.extend(unknown);
    }
}

fn parse_entries(text: &str) -> (Vec<Entry>, Vec<Violation>) {
    let mut entries = Vec::new();
    let mut violations = Vec::new();
    let mut section = String::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with(';') {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('[') {
            match rest.strip_suffix(']') {
                Some(name) => section = name.trim().to_string(),
                None => violations.push(Violation {
                    line,
                    key: trimmed.to_string(),
                    message: "malformed section header".to_string(),
                }),
            }
            continue;
        }
        match trimmed.split_once('=') {
            Some((k, v)) => entries.push(Entry {
                line,
                section: section.clone(),
                key: k.trim().to_string(),
                value: v.trim().to_string(),
                used: false,
            }),
            None => violations.push(Violation {
                line,
                key: trimmed.to_string(),
                message: "expected `key = value`".to_string(),
            }),
        }
    }
    (entries, violations)
}

fn placement(r: &mut Reader) -> Placement {
    let eps = r.f64_opt("network", "epsilon");
    match r.take("network", "placement") {
        // An epsilon without an explicit placement implies perturbed.
        None => match eps {
            Some(e) => checked_eps(r, 0, e),
            None => Placement::Regular,
        },
        Some((line, v)) => match v.as_str() {
            "regular" => Placement::Regular,
            "perturbed" => checked_eps(r, line, eps.unwrap_or(DEFAULT_EPSILON)),
            other => {
                r.reject(
                    line,
                    "placement",
                    format!("expected regular | perturbed, got `{other}`"),
                );
                Placement::Regular
            }
        },
    }
}

fn checked_eps(r: &mut Reader, line: usize, eps: f64) -> Placement {
    if !(0.0..EPSILON_LIMIT).contains(&eps) {
        r.reject(
            line,
            "epsilon",
            format!(
                "epsilon = {eps} rejected: the perturbed interference bound requires eps < 3/4"
            ),
        );
        Placement::Perturbed(DEFAULT_EPSILON)
    } else {
        Placement::Perturbed(eps)
    }
}

fn orders(r: &mut Reader) -> ScalingOrders {
    let (kl, k) = r
        .take("scaling", "k")
        .map(|(l, v)| (l, v.parse::<f64>().unwrap_or(f64::NAN)))
        .unwrap_or((0, f64::NAN));
    let (pl, psi) = r
        .take("scaling", "psi")
        .map(|(l, v)| (l, v.parse::<f64>().unwrap_or(f64::NAN)))
        .unwrap_or((0, f64::NAN));
    let (ul, upsilon) = r
        .take("scaling", "upsilon")
        .map(|(l, v)| (l, v.parse::<f64>().unwrap_or(f64::NAN)))
        .unwrap_or((0, f64::NAN));
    if !k.is_finite() {
        r.reject(
            kl,
            "scaling.k",
            "missing or non-numeric; node counts decay as n/l^k with k >= 2".into(),
        );
    } else if k < 2.0 {
        r.reject(
            kl,
            "scaling.k",
            format!(
                "k = {k} rejected: the tier node count must decay at least quadratically (k >= 2)"
            ),
        );
    }
    if !psi.is_finite() {
        r.reject(
            pl,
            "scaling.psi",
            "missing or non-numeric; bandwidth grows as W_1 l^psi with psi >= 1".into(),
        );
    } else if psi < 1.0 {
        r.reject(
            pl,
            "scaling.psi",
            format!("psi = {psi} rejected: bandwidth growth order must satisfy psi >= 1"),
        );
    }
    if !upsilon.is_finite() {
        r.reject(
            ul,
            "scaling.upsilon",
            "missing or non-numeric; antennas grow as M_1 l^upsilon with upsilon >= 1".into(),
        );
    } else if upsilon < 1.0 {
        r.reject(
            ul,
            "scaling.upsilon",
            format!("upsilon = {upsilon} rejected: antenna growth order must satisfy upsilon >= 1"),
        );
    }
    ScalingOrders {
        k: if k.is_finite() { k.max(2.0) } else { 2.0 },
        psi: if psi.is_finite() { psi.max(1.0) } else { 1.0 },
        upsilon: if upsilon.is_finite() {
            upsilon.max(1.0)
        } else {
            1.0
        },
    }
}

fn run_common(r: &mut Reader) -> (u64, u64, usize) {
    let seeds = r.u64("run", "seeds", 20);
    if seeds == 0 {
        r.reject(0, "run.seeds", "need at least one seed".into());
    }
    let base_seed = r.u64("run", "base_seed", 0);
    let parallel = r.u64("run", "parallel", 0) as usize;
    (seeds.max(1), base_seed, parallel)
}

/// Parses and validates a config for `kind`, reporting every violation.
pub fn parse_config(kind: CommandKind, text: &str) -> Result<ExperimentConfig, Vec<Violation>> {
    let (entries, syntax_violations) = parse_entries(text);
    let mut r = Reader {
        entries,
        violations: syntax_violations,
    };

    let config = match kind {
        CommandKind::SingleTier => {
            let rings = match r.list_f64("network", "rings") {
                None => {
                    r.reject(
                        0,
                        "network.rings",
                        "required: lattice ring counts to sweep".into(),
                    );
                    vec![]
                }
                Some((line, xs)) => {
                    let mut rings = Vec::new();
                    for x in xs {
                        if x < 1.0 || x.fract() != 0.0 {
                            r.reject(
                                line,
                                "network.rings",
                                format!("ring count {x} must be an integer >= 1"),
                            );
                        } else {
                            rings.push(x as u32);
                        }
                    }
                    rings
                }
            };
            let placement = placement(&mut r);
            let side_m = r.f64("network", "side_m", 1.0);
            let alpha = r.f64("radio", "alpha", 3.0);
            if alpha <= 2.0 {
                r.reject(
                    0,
                    "radio.alpha",
                    format!("alpha = {alpha} rejected: interference bounds require alpha > 2"),
                );
            }
            let schemes = match r.take("run", "scheme") {
                None => vec![Scheme::ShortHop, Scheme::LongHop],
                Some((line, v)) => match v.as_str() {
                    "sh" => vec![Scheme::ShortHop],
                    "lh" => vec![Scheme::LongHop],
                    "both" => vec![Scheme::ShortHop, Scheme::LongHop],
                    other => {
                        r.reject(
                            line,
                            "run.scheme",
                            format!("expected sh | lh | both, got `{other}`"),
                        );
                        vec![]
                    }
                },
            };
            let power_mw = r.f64_opt("radio", "power_mw");
            if let Some(p) = power_mw {
                if p <= 0.0 {
                    r.reject(0, "radio.power_mw", format!("power {p} must be positive"));
                }
            }
            let (seeds, base_seed, parallel) = run_common(&mut r);
            ExperimentConfig::SingleTier(SingleTierConfig {
                rings,
                placement,
                side_m,
                alpha,
                gain_db: r.f64("radio", "gain_db", 0.0),
                threshold_dbm: r.f64("radio", "threshold_dbm", -78.0),
                bandwidth_hz: r.f64("radio", "bandwidth_hz", 1e7),
                power_mw,
                schemes,
                seeds,
                base_seed,
                parallel,
            })
        }
        CommandKind::MultiTier => {
            let nodes = match r.list_f64("network", "nodes") {
                None => {
                    r.reject(
                        0,
                        "network.nodes",
                        "required: data-node counts to sweep".into(),
                    );
                    vec![]
                }
                Some((line, xs)) => {
                    let mut nodes = Vec::new();
                    for x in xs {
                        if x < 2.0 || x.fract() != 0.0 {
                            r.reject(
                                line,
                                "network.nodes",
                                format!("node count {x} must be an integer >= 2"),
                            );
                        } else {
                            nodes.push(x as u64);
                        }
                    }
                    nodes
                }
            };
            let placement = placement(&mut r);
            let orders = orders(&mut r);
            let alpha = r.f64("radio", "alpha", 3.0);
            if alpha <= 2.0 {
                r.reject(
                    0,
                    "radio.alpha",
                    format!("alpha = {alpha} rejected: interference bounds require alpha > 2"),
                );
            }
            let modes = match r.take("run", "mode") {
                None => vec![MimoMode::SpatialMultiplexing],
                Some((line, v)) => match v.as_str() {
                    "sm" => vec![MimoMode::SpatialMultiplexing],
                    "bf" => vec![MimoMode::Beamforming],
                    "both" => vec![MimoMode::SpatialMultiplexing, MimoMode::Beamforming],
                    other => {
                        r.reject(
                            line,
                            "run.mode",
                            format!("expected sm | bf | both, got `{other}`"),
                        );
                        vec![]
                    }
                },
            };
            let eta = match r.take("multi_tier", "eta") {
                None => None,
                Some((_, v)) if v == "auto" => None,
                Some((line, v)) => match v.parse::<f64>() {
                    Ok(x) if x > 0.0 => Some(x),
                    _ => {
                        r.reject(
                            line,
                            "multi_tier.eta",
                            format!("expected auto or a positive number, got `{v}`"),
                        );
                        None
                    }
                },
            };
            let antennas = r.u64("multi_tier", "antennas", 1);
            if antennas == 0 {
                r.reject(0, "multi_tier.antennas", "need at least one antenna".into());
            }
            let bf_floor = r.f64("multi_tier", "bf_floor", 0.0);
            if bf_floor < 0.0 {
                r.reject(
                    0,
                    "multi_tier.bf_floor",
                    "residual interference cannot be negative".into(),
                );
            }
            let (seeds, base_seed, parallel) = run_common(&mut r);
            ExperimentConfig::MultiTier(MultiTierConfig {
                nodes,
                placement,
                spacing_m: r.f64("network", "spacing_m", 50.0),
                alpha,
                gain_db: r.f64("radio", "gain_db", 0.0),
                threshold_dbm: r.f64("radio", "threshold_dbm", -78.0),
                bandwidth_hz: r.f64("radio", "bandwidth_hz", 1e7),
                antennas: antennas.max(1) as u32,
                orders,
                modes,
                eta,
                bf_floor: bf_floor.max(0.0),
                seeds,
                base_seed,
                parallel,
            })
        }
        CommandKind::Check => {
            let orders = orders(&mut r);
            let alpha = r.f64("radio", "alpha", 3.0);
            if alpha <= 2.0 {
                r.reject(
                    0,
                    "radio.alpha",
                    format!(
                        "alpha = {alpha} rejected: the beamforming condition divides by alpha > 2"
                    ),
                );
            }
            let modes = match r.take("run", "mode") {
                None => vec![MimoMode::SpatialMultiplexing, MimoMode::Beamforming],
                Some((line, v)) => match v.as_str() {
                    "sm" => vec![MimoMode::SpatialMultiplexing],
                    "bf" => vec![MimoMode::Beamforming],
                    "both" => vec![MimoMode::SpatialMultiplexing, MimoMode::Beamforming],
                    other => {
                        r.reject(
                            line,
                            "run.mode",
                            format!("expected sm | bf | both, got `{other}`"),
                        );
                        vec![]
                    }
                },
            };
            ExperimentConfig::Check(CheckConfig {
                orders,
                alpha,
                modes,
            })
        }
        CommandKind::Plan => {
            let orders = orders(&mut r);
            let nodes = r.u64("plan", "nodes", 0);
            if nodes == 0 {
                r.reject(0, "plan.nodes", "required: data nodes to plan for".into());
            }
            let power_mw = r.f64("plan", "power_mw", 1.0);
            let range_m = r.f64("plan", "range_m", 50.0);
            if power_mw <= 0.0 {
                r.reject(0, "plan.power_mw", "transmit power must be positive".into());
            }
            if range_m <= 0.0 {
                r.reject(0, "plan.range_m", "range must be positive".into());
            }
            let gains_db = match r.list_f64("plan", "gains_db") {
                None => {
                    r.reject(
                        0,
                        "plan.gains_db",
                        "required: per-tier antenna gains".into(),
                    );
                    vec![]
                }
                Some((_, xs)) => xs,
            };
            let alphas = match r.list_f64("plan", "alphas") {
                None => {
                    r.reject(
                        0,
                        "plan.alphas",
                        "required: per-tier path-loss exponents".into(),
                    );
                    vec![]
                }
                Some((line, xs)) => {
                    for &a in &xs {
                        if a <= 2.0 {
                            r.reject(
                                line,
                                "plan.alphas",
                                format!("alpha = {a} rejected: must exceed 2"),
                            );
                        }
                    }
                    xs
                }
            };
            let reference_power_mw = r.list_f64("plan", "reference_power_mw").map(|(_, xs)| xs);
            let antennas = r.u64("plan", "antennas", 1).max(1) as u32;
            ExperimentConfig::Plan(PlanConfig {
                orders,
                anchor: DeploymentAnchor {
                    nodes: nodes.max(1),
                    power_mw,
                    range_m,
                    threshold_dbm: r.f64("plan", "threshold_dbm", -78.0),
                    gains_db,
                    alphas,
                    bandwidth_hz: r.f64("plan", "bandwidth_hz", 1e7),
                    antennas,
                    reference_power_mw,
                },
            })
        }
        CommandKind::Bounds => {
            let rings_max = r.u64("bounds", "rings_max", 32);
            let alphas = match r.list_f64("bounds", "alphas") {
                None => vec![2.5, 3.0, 3.5, 4.0],
                Some((line, xs)) => {
                    for &a in &xs {
                        if a <= 2.0 {
                            r.reject(line, "bounds.alphas", format!("alpha = {a} rejected: the closed-form bound diverges at alpha <= 2"));
                        }
                    }
                    xs
                }
            };
            let epsilon = r.f64("bounds", "epsilon", DEFAULT_EPSILON);
            if !(0.0..EPSILON_LIMIT).contains(&epsilon) {
                r.reject(
                    0,
                    "bounds.epsilon",
                    format!("epsilon = {epsilon} rejected: the perturbed bound requires eps < 3/4"),
                );
            }
            let alpha_perturbed = r.f64("bounds", "alpha_perturbed", 3.0);
            if alpha_perturbed <= 2.0 {
                r.reject(
                    0,
                    "bounds.alpha_perturbed",
                    format!("alpha = {alpha_perturbed} rejected: must exceed 2"),
                );
            }
            let trials = r.u64("bounds", "trials", 1000).max(1);
            let (seeds, base_seed, parallel) = run_common(&mut r);
            let _ = seeds;
            ExperimentConfig::Bounds(BoundsConfig {
                rings_max: rings_max.max(1) as u32,
                alphas,
                trials,
                epsilon,
                rings_perturbed: r.u64("bounds", "rings_perturbed", 16).max(1) as u32,
                alpha_perturbed,
                seeds: 1,
                base_seed,
                parallel,
            })
        }
    };

    r.finish_unknown_keys(kind);
    if r.violations.is_empty() {
        Ok(config)
    } else {
        Err(r.violations)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_single_tier_config_is_valid() {
        let cfg = parse_config(
            CommandKind::SingleTier,
            "[network]\nrings = 8,16\n[run]\nscheme = sh\nseeds = 2\n",
        )
        .unwrap();
        match cfg {
            ExperimentConfig::SingleTier(c) => {
                assert_eq!(c.rings, vec![8, 16]);
                assert_eq!(c.schemes, vec![Scheme::ShortHop]);
                assert_eq!(c.seeds, 2);
                assert_eq!(c.placement, Placement::Regular);
            }
            _ => panic!("wrong variant"),
        }
    }

    #[test]
    fn low_k_rejected_with_range() {
        let err = parse_config(
            CommandKind::Check,
            "[scaling]\nk = 1.5\npsi = 1\nupsilon = 1\n",
        )
        .unwrap_err();
        assert!(err
            .iter()
            .any(|v| v.key == "scaling.k" && v.message.contains("k >= 2")));
    }

    #[test]
    fn big_epsilon_rejected_with_premise() {
        let err = parse_config(
            CommandKind::SingleTier,
            "[network]\nrings = 4\nplacement = perturbed\nepsilon = 0.8\n",
        )
        .unwrap_err();
        assert!(err
            .iter()
            .any(|v| v.key == "epsilon" && v.message.contains("3/4")));
    }

    #[test]
    fn unknown_keys_reported_with_line() {
        let err = parse_config(
            CommandKind::SingleTier,
            "[network]\nrings = 4\nbogus = 1\n[radio]\nmode = sm\n",
        )
        .unwrap_err();
        assert_eq!(err.len(), 2);
        assert_eq!(err[0].line, 3);
        assert!(err[0].message.contains("unknown key"));
        // `mode` exists but belongs to other commands/sections.
        assert_eq!(err[1].line, 5);
    }

    #[test]
    fn all_violations_reported_at_once() {
        let err = parse_config(
            CommandKind::MultiTier,
            "[network]\nnodes = 1\n[scaling]\nk = 1\npsi = 0\nupsilon = 0.5\n",
        )
        .unwrap_err();
        assert!(err.len() >= 4, "got {err:?}");
    }

    #[test]
    fn key_reference_lists_every_key() {
        let text = key_reference();
        for doc in KEY_DOCS {
            assert!(text.contains(doc.key));
        }
    }
}
