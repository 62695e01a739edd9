//! Path loss, power budgets, Shannon rates, and interference bounds.
//!
//! All powers are linear milliwatts; dB values are converted at the
//! interface boundary. The receive threshold `p0` doubles as the noise
//! reference: a link operating exactly at threshold with no interference
//! sees an SNR of 1 and therefore a feasible rate of `W` bits/s.

use crate::error::{Error, Result};
use crate::lattice::{ring_distance_bounds, Lattice};

/// Distance-power law `received = C * P * d^-alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLossModel {
    /// Path-loss exponent; outdoor environments fall in [2, 4].
    pub alpha: f64,
    /// Effective gain constant, linear scale.
    pub gain: f64,
}

impl PathLossModel {
    pub fn new(alpha: f64, gain: f64) -> Self {
        assert!(gain > 0.0, "gain must be positive");
        PathLossModel { alpha, gain }
    }
}

/// Transmit power and receive threshold, both in linear milliwatts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerBudget {
    pub power_mw: f64,
    pub threshold_mw: f64,
}

impl PowerBudget {
    pub fn new(power_mw: f64, threshold_mw: f64) -> Self {
        assert!(power_mw > 0.0 && threshold_mw > 0.0);
        PowerBudget {
            power_mw,
            threshold_mw,
        }
    }
}

/// Convert decibels to a linear power ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Convert a linear power ratio to decibels.
pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// dBm to linear milliwatts.
pub fn dbm_to_mw(dbm: f64) -> f64 {
    db_to_linear(dbm)
}

/// Received power at distance `d` for transmit power `p_mw`.
pub fn received_power(model: PathLossModel, p_mw: f64, d: f64) -> Result<f64> {
    if d <= 0.0 {
        return Err(Error::NonPositiveDistance(d));
    }
    Ok(model.gain * p_mw * d.powf(-model.alpha))
}

/// Maximum distance at which the received power still meets the threshold,
/// `(C P / P0)^(1/alpha)`.
pub fn max_range(model: PathLossModel, budget: PowerBudget) -> f64 {
    (model.gain * budget.power_mw / budget.threshold_mw).powf(1.0 / model.alpha)
}

/// Transmit power needed to reach the farthest cell of ring `r` at exactly
/// the threshold, `P0 * d_{r,max}^alpha / C`.
pub fn required_power(model: PathLossModel, threshold_mw: f64, r: u32, side: f64) -> Result<f64> {
    let (_, d_max) = ring_distance_bounds(r, side)?;
    Ok(threshold_mw * d_max.powf(model.alpha) / model.gain)
}

/// Shannon rate `W * log2(1 + gamma)` in bits/s.
pub fn shannon_rate(bandwidth_hz: f64, sinr: f64) -> f64 {
    bandwidth_hz * (1.0 + sinr).log2()
}

/// Total received power at `receiver` when every node in `active`
/// transmits at `p_mw` simultaneously. Distances use the actual
/// (possibly perturbed) node positions.
pub fn interference_sum(
    lattice: &Lattice,
    model: PathLossModel,
    p_mw: f64,
    receiver: u32,
    active: &[u32],
) -> Result<f64> {
    let rx = lattice.position(receiver)?;
    let mut total = 0.0;
    for &tx in active {
        if tx == receiver {
            return Err(Error::ReceiverIsActive(receiver));
        }
        let pos = lattice.position(tx)?;
        let d = ((pos[0] - rx[0]).powi(2) + (pos[1] - rx[1]).powi(2)).sqrt();
        total += received_power(model, p_mw, d)?;
    }
    Ok(total)
}

/// Closed-form bound on the all-nodes-active interference at the center of
/// a regular lattice: `(6 * 2^alpha * C * P / (3a)^alpha) * (alpha-1)/(alpha-2)`.
///
/// Independent of the lattice extent; requires `alpha > 2`.
pub fn interference_bound_regular(model: PathLossModel, p_mw: f64, side: f64) -> Result<f64> {
    if model.alpha <= 2.0 {
        return Err(Error::AlphaOutOfRange(model.alpha));
    }
    let a = model.alpha;
    Ok(6.0 * 2f64.powf(a) * model.gain * p_mw / (3.0 * side).powf(a) * (a - 1.0) / (a - 2.0))
}

/// Closed-form interference bound for a perturbed lattice with
/// perturbation radius `eps < 3/4`:
/// `(6 * 2^alpha * C * P / a^alpha) * (1/(3-4e) + 1/((alpha-2)(3-4e)^(alpha-2)))`.
pub fn interference_bound_perturbed(
    model: PathLossModel,
    p_mw: f64,
    side: f64,
    eps: f64,
) -> Result<f64> {
    if model.alpha <= 2.0 {
        return Err(Error::AlphaOutOfRange(model.alpha));
    }
    if !(0.0..0.75).contains(&eps) {
        return Err(Error::EpsilonOutOfRange(eps));
    }
    let a = model.alpha;
    let shrink = 3.0 - 4.0 * eps;
    Ok(6.0 * 2f64.powf(a) * model.gain * p_mw / side.powf(a)
        * (1.0 / shrink + 1.0 / ((a - 2.0) * shrink.powf(a - 2.0))))
}
