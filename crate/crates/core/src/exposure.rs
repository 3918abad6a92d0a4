//! Exposure index, transmit power rules and downlink power density.
//!
//! Uplink exposure is the SAR-weighted sum of user transmit powers.
//! Downlink exposure sums, over every resident and every transmitting gNB,
//! the received power density times the downlink SAR reference. Received
//! power `P / L` is turned into a power density through the isotropic
//! effective aperture `A_eff = lambda^2 / (4 pi)`, which keeps the
//! fading-averaged loss consistent with a W/m² density in free space.
//!
//! For a user served in downlink by gNB `j`, the density comes from its own
//! link power (the per-user term of the gNB budget). Everyone else, users of
//! other gNBs and non-users alike, sees the total power of `j`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::channel::{path_loss, required_power};
use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::params::{SimParams, User};

/// Slack on the rate check, bps.
pub const RATE_SLACK: f64 = 1.0;

/// How user transmit power is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode")]
pub enum PowerPolicy {
    /// Just enough power for the rate target, capped at `p_max`.
    PrimalRateTarget,
    /// As much power as the per-user SAR cap and `p_max` allow.
    DualSarCap { sar_limit: f64 },
}

impl PowerPolicy {
    pub fn dual(sar_limit: f64) -> Result<Self> {
        if !(sar_limit.is_finite() && sar_limit > 0.0) {
            return Err(Error::param("sar_limit", "must be finite and > 0"));
        }
        Ok(PowerPolicy::DualSarCap { sar_limit })
    }

    pub fn sar_limit(&self) -> Option<f64> {
        match self {
            PowerPolicy::PrimalRateTarget => None,
            PowerPolicy::DualSarCap { sar_limit } => Some(*sar_limit),
        }
    }
}

pub fn allocate_power(user: &User, loss: f64, policy: &PowerPolicy, params: &SimParams) -> f64 {
    match policy {
        PowerPolicy::PrimalRateTarget => {
            required_power(user.rate_req_ul, loss, params).min(params.p_max)
        }
        PowerPolicy::DualSarCap { sar_limit } => sar_capped_power(*sar_limit, user.sar_ul).min(params.p_max),
    }
}

/// Largest power whose exposure `sar * p` does not exceed `limit` in
/// floating point.
fn sar_capped_power(limit: f64, sar: f64) -> f64 {
    let mut p = limit / sar;
    while sar * p > limit {
        p = p.next_down();
    }
    p
}

/// `sum_k SAR_k * P_k` over the given users.
pub fn exposure_index_ul(users: &[User], powers: &[f64]) -> f64 {
    debug_assert_eq!(users.len(), powers.len());
    users.iter().zip(powers).map(|(u, p)| u.sar_ul * p).sum()
}

/// Isotropic effective aperture `c^2 / (4 pi fc^2)`, m².
pub fn effective_aperture(params: &SimParams) -> f64 {
    params.c * params.c / (4.0 * PI * params.fc * params.fc)
}

/// Downlink transmit budget: power per served link and total per gNB.
#[derive(Debug, Clone, PartialEq)]
pub struct DownlinkPower {
    pub per_link: Vec<f64>,
    pub per_gnb: Vec<f64>,
}

/// Downlink power each gNB spends to meet the users' downlink rates.
pub fn downlink_power(
    users: &[User],
    dl_serving: &[usize],
    gnb_positions: &[Point3],
    params: &SimParams,
) -> Result<DownlinkPower> {
    let mut per_gnb = vec![0.0; gnb_positions.len()];
    let mut per_link = Vec::with_capacity(users.len());
    for (u, &j) in users.iter().zip(dl_serving) {
        let loss = path_loss(&u.position, &gnb_positions[j], params)?;
        let p = required_power(u.rate_req_dl, loss, params);
        per_link.push(p);
        per_gnb[j] += p;
    }
    Ok(DownlinkPower { per_link, per_gnb })
}

/// Downlink exposure index over all residents.
///
/// `users` and `dl_serving` describe the active users; `residents` is the
/// full population (active users included, matched by `id`).
pub fn exposure_index_dl(
    residents: &[User],
    users: &[User],
    dl_serving: &[usize],
    gnb_positions: &[Point3],
    params: &SimParams,
) -> Result<f64> {
    let budget = downlink_power(users, dl_serving, gnb_positions, params)?;
    let served: std::collections::HashMap<usize, (usize, f64)> = users
        .iter()
        .zip(dl_serving)
        .zip(&budget.per_link)
        .map(|((u, &j), &p)| (u.id, (j, p)))
        .collect();
    let aperture = effective_aperture(params);
    let mut total = 0.0;
    for r in residents {
        for (j, (&p_gnb, pos)) in budget.per_gnb.iter().zip(gnb_positions).enumerate() {
            if p_gnb <= 0.0 {
                continue;
            }
            let p = match served.get(&r.id) {
                Some(&(sj, link)) if sj == j => link,
                _ => p_gnb,
            };
            let loss = path_loss(&r.position, pos, params)?;
            total += params.sar_dl * p / loss / aperture;
        }
    }
    Ok(total)
}

/// Fraction of users whose achieved rate meets the requirement, within
/// [`RATE_SLACK`].
pub fn satisfied_ratio(achieved: &[f64], required: &[f64]) -> Result<f64> {
    if achieved.is_empty() {
        return Err(Error::EmptyRatio);
    }
    debug_assert_eq!(achieved.len(), required.len());
    let ok = achieved
        .iter()
        .zip(required)
        .filter(|(a, r)| **a >= **r - RATE_SLACK)
        .count();
    Ok(ok as f64 / achieved.len() as f64)
}
