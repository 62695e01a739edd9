//! Scalability condition checks, resource totals, and deployment tables.
//!
//! The planner answers two questions. First, do the chosen scaling orders
//! keep every tier's rate non-decreasing (the throughput-scalability
//! condition)? Second, what concrete per-tier parameters does a given
//! anchor deployment imply? The anchor's threshold equation calibrates an
//! effective propagation constant, which the quoted per-tier antenna
//! gains then offset relatively.

use crate::error::{Error, Result};
use crate::multi_tier::{
    bf_rate_exponent, hop_limit, sm_rate_exponent, tier_count, MimoMode, ScalingOrders,
};
use crate::radio::db_to_linear;

/// Outcome of a scalability check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalabilityVerdict {
    pub mode: MimoMode,
    /// True when the per-tier rate exponent is nonnegative.
    pub holds: bool,
    /// The signed exponent: `psi + upsilon - k` (spatial multiplexing) or
    /// `psi + 2 upsilon / alpha - k` (beamforming).
    pub margin: f64,
    /// Growth exponent of the total bandwidth, `(psi + 1) / k`.
    pub bandwidth_total_exponent: f64,
    /// Growth exponent of the top-tier antenna count, `upsilon / k`.
    pub antenna_max_exponent: f64,
    /// Growth exponent of the top-tier transmit power, `alpha / 2`.
    pub power_top_exponent: f64,
}

/// Checks whether the scaling orders sustain a non-decreasing per-tier
/// rate under `mode`.
pub fn check_scalability(
    orders: &ScalingOrders,
    alpha: f64,
    mode: MimoMode,
) -> Result<ScalabilityVerdict> {
    orders.validate()?;
    if alpha <= 2.0 {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    let margin = match mode {
        MimoMode::SpatialMultiplexing => sm_rate_exponent(orders),
        MimoMode::Beamforming => bf_rate_exponent(orders, alpha),
    };
    Ok(ScalabilityVerdict {
        mode,
        holds: margin >= -1e-12,
        margin,
        bandwidth_total_exponent: (orders.psi + 1.0) / orders.k,
        antenna_max_exponent: orders.upsilon / orders.k,
        power_top_exponent: alpha / 2.0,
    })
}

/// Anchor parameters pinning tier 1 of a deployment.
#[derive(Debug, Clone)]
pub struct DeploymentAnchor {
    /// Data nodes to serve.
    pub nodes: u64,
    /// Tier-1 transmit power, mW.
    pub power_mw: f64,
    /// Tier-1 transmission range, meters.
    pub range_m: f64,
    /// Receive threshold, dBm, shared by all tiers.
    pub threshold_dbm: f64,
    /// Quoted antenna gain per tier, dB. Must cover every tier.
    pub gains_db: Vec<f64>,
    /// Path-loss exponent per tier. Must cover every tier.
    pub alphas: Vec<f64>,
    /// Tier-1 bandwidth, Hz.
    pub bandwidth_hz: f64,
    /// Tier-1 antenna count.
    pub antennas: u32,
    /// Optional published per-tier powers (mW) to cross-check against.
    pub reference_power_mw: Option<Vec<f64>>,
}

/// Computed deployment parameters for one tier.
#[derive(Debug, Clone)]
pub struct TierPlan {
    pub tier: u32,
    pub nodes: u64,
    pub gain_db: f64,
    /// Effective propagation constant (linear) used in the threshold
    /// equation for this tier.
    pub effective_gain: f64,
    pub power_mw: f64,
    pub bandwidth_hz: f64,
    pub antennas: u32,
    pub range_m: f64,
    pub hop_limit: u32,
    /// Set when a reference power was supplied and the computed power
    /// deviates from it by more than 1.5x either way.
    pub deviates_from_reference: bool,
}

/// A per-tier deployment table plus the calibration it rests on.
#[derive(Debug, Clone)]
pub struct DeploymentPlan {
    pub tiers: Vec<TierPlan>,
    /// Effective tier-1 propagation constant implied by the anchor,
    /// `P0 * d_1^alpha / P_1`, linear scale.
    pub calibration: f64,
    pub threshold_dbm: f64,
    pub orders: ScalingOrders,
}

/// Deviation factor beyond which a computed power is flagged against its
/// reference value.
pub const REFERENCE_DEVIATION_FACTOR: f64 = 1.5;

/// Derives the full per-tier parameter table from a tier-1 anchor.
///
/// The anchor defines the calibration: whatever constant makes the tier-1
/// threshold equation exact is carried to upper tiers, offset by the
/// quoted per-tier gains relative to tier 1.
pub fn plan_deployment(
    orders: &ScalingOrders,
    anchor: &DeploymentAnchor,
) -> Result<DeploymentPlan> {
    orders.validate()?;
    let levels = tier_count(anchor.nodes, orders.k);
    if anchor.gains_db.len() < levels as usize || anchor.alphas.len() < levels as usize {
        return Err(Error::InvalidTier(format!(
            "need gains and alphas for {levels} tiers (got {} and {})",
            anchor.gains_db.len(),
            anchor.alphas.len()
        )));
    }
    if let Some(refs) = &anchor.reference_power_mw {
        if refs.len() < levels as usize {
            return Err(Error::InvalidTier(format!(
                "need reference powers for {levels} tiers (got {})",
                refs.len()
            )));
        }
    }
    let threshold_mw = db_to_linear(anchor.threshold_dbm);
    let calibration = threshold_mw * anchor.range_m.powf(anchor.alphas[0]) / anchor.power_mw;

    let mut tiers = Vec::with_capacity(levels as usize);
    let mut range = anchor.range_m;
    for l in 1..=levels {
        if l > 1 {
            range *= (1.0 + 1.0 / (l as f64 - 1.0)).powf(orders.k / 2.0);
        }
        let alpha = anchor.alphas[l as usize - 1];
        let gain_db = anchor.gains_db[l as usize - 1];
        let effective_gain = calibration * db_to_linear(gain_db - anchor.gains_db[0]);
        let power_mw = threshold_mw * range.powf(alpha) / effective_gain;
        let deviates = anchor
            .reference_power_mw
            .as_ref()
            .map(|refs| {
                let r = refs[l as usize - 1];
                power_mw > r * REFERENCE_DEVIATION_FACTOR
                    || power_mw < r / REFERENCE_DEVIATION_FACTOR
            })
            .unwrap_or(false);
        tiers.push(TierPlan {
            tier: l,
            nodes: ((anchor.nodes as f64 / (l as f64).powf(orders.k)).round() as u64).max(1),
            gain_db,
            effective_gain,
            power_mw,
            bandwidth_hz: anchor.bandwidth_hz * (l as f64).powf(orders.psi),
            antennas: ((anchor.antennas as f64 * (l as f64).powf(orders.upsilon)).round() as u32)
                .max(1),
            range_m: range,
            hop_limit: hop_limit(l, orders.k),
            deviates_from_reference: deviates,
        });
    }
    Ok(DeploymentPlan {
        tiers,
        calibration,
        threshold_dbm: anchor.threshold_dbm,
        orders: *orders,
    })
}

impl DeploymentPlan {
    /// Residual of the threshold equation for tier `l` (0-based index into
    /// `tiers`), relative: `C_eff P d^-alpha / P0 - 1`.
    pub fn threshold_residual(&self, idx: usize, alphas: &[f64]) -> f64 {
        let t = &self.tiers[idx];
        let threshold_mw = db_to_linear(self.threshold_dbm);
        t.effective_gain * t.power_mw * t.range_m.powf(-alphas[idx]) / threshold_mw - 1.0
    }
}

/// Exact and asymptotic resource totals for a hierarchy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResourceTotals {
    pub tiers: u32,
    /// Sum of the per-tier bandwidths, Hz.
    pub bandwidth_total_hz: f64,
    /// Largest per-node antenna count.
    pub antenna_max: u32,
    pub bandwidth_total_exponent: f64,
    pub antenna_max_exponent: f64,
}

/// Sums per-tier bandwidth and takes the antenna maximum for `n` nodes.
pub fn resource_totals(
    orders: &ScalingOrders,
    n: u64,
    bandwidth_hz: f64,
    antennas: u32,
) -> Result<ResourceTotals> {
    orders.validate()?;
    let levels = tier_count(n, orders.k);
    let mut w_tot = 0.0;
    let mut m_max = 0u32;
    for l in 1..=levels {
        w_tot += bandwidth_hz * (l as f64).powf(orders.psi);
        let m = ((antennas as f64 * (l as f64).powf(orders.upsilon)).round() as u32).max(1);
        m_max = m_max.max(m);
    }
    Ok(ResourceTotals {
        tiers: levels,
        bandwidth_total_hz: w_tot,
        antenna_max: m_max,
        bandwidth_total_exponent: (orders.psi + 1.0) / orders.k,
        antenna_max_exponent: orders.upsilon / orders.k,
    })
}
