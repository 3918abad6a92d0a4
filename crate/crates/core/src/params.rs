//! Physical and algorithmic constants, shared records and unit helpers.
//!
//! Everything here is a plain value type. Units follow SI throughout: metres,
//! hertz, watts, bits per second, radians. dB and dBm only appear at the
//! edges (config and CLI) through the conversion helpers below.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point3, TuavPlacement};

/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Stand-in downlink SAR reference, W/kg per W/m². Output metadata flags runs
/// that rely on it.
pub const SAR_DL_PLACEHOLDER: f64 = 0.005;

/// All constants of the system model plus solver tolerances.
///
/// Field names double as config keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimParams {
    pub area_x: f64,
    pub area_y: f64,
    /// Carrier frequency, Hz.
    pub fc: f64,
    /// Speed of light, m/s.
    pub c: f64,
    /// Bandwidth of one resource block, Hz.
    #[serde(rename = "bandwidth_B")]
    pub bandwidth_b: f64,
    pub a_env: f64,
    pub b_env: f64,
    pub eta_los_db: f64,
    pub eta_nlos_db: f64,
    pub alpha_los: f64,
    pub alpha_nlos: f64,
    /// Maximum UE transmit power, W.
    pub p_max: f64,
    /// Maximum tether length, m.
    pub t_max: f64,
    /// Minimum tether elevation, rad.
    pub theta_min: f64,
    pub h_bs: f64,
    pub h_gs: f64,
    /// Resource blocks per tUAV.
    pub w_tuav_max: usize,
    /// Resource blocks at the BS; `None` means one per resident.
    pub w_bs_max: Option<usize>,
    pub sar_voice: f64,
    pub sar_data: f64,
    pub sar_dl: f64,
    /// Receiver noise temperature, K.
    pub noise_temp: f64,
    pub tol_delta: f64,
    pub i_max: usize,
    pub sr_candidates_2d: usize,
    pub sr_radius_init: f64,
    pub sr_radius_min: f64,
    pub sr_candidates_3d: usize,
    pub sr3d_radius_init: f64,
    pub sr3d_radius_min: f64,
    pub h_min: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            area_x: 1000.0,
            area_y: 1000.0,
            fc: 3.5e9,
            c: 3e8,
            bandwidth_b: 10e6,
            a_env: 9.61,
            b_env: 0.16,
            eta_los_db: 1.6,
            eta_nlos_db: 23.0,
            alpha_los: 2.0,
            alpha_nlos: 2.0,
            p_max: dbm_to_watts(26.0),
            t_max: 100.0,
            theta_min: 31f64.to_radians(),
            h_bs: 25.0,
            h_gs: 30.0,
            w_tuav_max: 6,
            w_bs_max: None,
            sar_voice: 0.0047,
            sar_data: 0.0037,
            sar_dl: SAR_DL_PLACEHOLDER,
            noise_temp: 290.0,
            tol_delta: 1.0,
            i_max: 50,
            sr_candidates_2d: 8,
            sr_radius_init: 250.0,
            sr_radius_min: 2.0,
            sr_candidates_3d: 14,
            sr3d_radius_init: 50.0,
            sr3d_radius_min: 0.5,
            h_min: 1.0,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("area_x", self.area_x),
            ("area_y", self.area_y),
            ("fc", self.fc),
            ("c", self.c),
            ("bandwidth_B", self.bandwidth_b),
            ("a_env", self.a_env),
            ("b_env", self.b_env),
            ("alpha_los", self.alpha_los),
            ("alpha_nlos", self.alpha_nlos),
            ("p_max", self.p_max),
            ("t_max", self.t_max),
            ("h_bs", self.h_bs),
            ("h_gs", self.h_gs),
            ("sar_voice", self.sar_voice),
            ("sar_data", self.sar_data),
            ("sar_dl", self.sar_dl),
            ("noise_temp", self.noise_temp),
            ("tol_delta", self.tol_delta),
            ("sr_radius_init", self.sr_radius_init),
            ("sr_radius_min", self.sr_radius_min),
            ("sr3d_radius_init", self.sr3d_radius_init),
            ("sr3d_radius_min", self.sr3d_radius_min),
            ("h_min", self.h_min),
        ];
        for (key, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::param(key, format!("must be finite and > 0, got {value}")));
            }
        }
        for (key, value) in [("eta_los_db", self.eta_los_db), ("eta_nlos_db", self.eta_nlos_db)] {
            if !value.is_finite() {
                return Err(Error::param(key, "must be finite"));
            }
        }
        if !(self.theta_min > 0.0 && self.theta_min < FRAC_PI_2) {
            return Err(Error::param("theta_min", "must lie in (0, pi/2) radians"));
        }
        for (key, value) in [
            ("w_tuav_max", self.w_tuav_max),
            ("i_max", self.i_max),
            ("sr_candidates_2d", self.sr_candidates_2d),
            ("sr_candidates_3d", self.sr_candidates_3d),
        ] {
            if value == 0 {
                return Err(Error::param(key, "must be >= 1"));
            }
        }
        if self.sr_candidates_3d > 14 {
            return Err(Error::param(
                "sr_candidates_3d",
                "at most 14 probe directions (6 axes and 8 diagonals) are defined",
            ));
        }
        Ok(())
    }

    /// Thermal noise power over one resource block, W.
    pub fn noise_power(&self) -> f64 {
        noise_power(self)
    }

    pub fn eta_los(&self) -> f64 {
        db_to_linear(self.eta_los_db)
    }

    pub fn eta_nlos(&self) -> f64 {
        db_to_linear(self.eta_nlos_db)
    }

    pub fn sar_for(&self, usage: Usage) -> f64 {
        match usage {
            Usage::Voice => self.sar_voice,
            Usage::Data => self.sar_data,
        }
    }

    /// Default tUAV altitude: vertical tether at half length.
    pub fn tuav_default_height(&self) -> f64 {
        self.h_gs + self.t_max / 2.0
    }

    pub fn sar_dl_is_placeholder(&self) -> bool {
        self.sar_dl == SAR_DL_PLACEHOLDER
    }
}

/// `k_B * T * B`.
pub fn noise_power(params: &SimParams) -> f64 {
    BOLTZMANN * params.noise_temp * params.bandwidth_b
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    linear_to_db(w) + 30.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Usage {
    Voice,
    Data,
}

/// A resident of the area. Only `active` residents request service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct User {
    pub id: usize,
    pub position: Point3,
    pub usage: Usage,
    pub active: bool,
    /// Required uplink rate, bps.
    pub rate_req_ul: f64,
    /// Required downlink rate, bps.
    pub rate_req_dl: f64,
    /// Whole-body SAR per watt transmitted.
    pub sar_ul: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GnbKind {
    BaseStation,
    Tuav,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gnb {
    pub id: usize,
    pub kind: GnbKind,
    pub position: Point3,
    /// Users this gNB can hold, i.e. its resource block budget divided by
    /// the blocks each user occupies.
    pub capacity: usize,
}

/// Network architecture variants compared in the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Architecture {
    /// Macro BS only.
    BsOnly,
    /// Receive-only small cells on a fixed even grid.
    FixedSc,
    /// Receive-only tUAVs: uplink densification.
    GreenTuav,
    /// Full-duplex tUAVs: every served user takes one UL and one DL block.
    RegularTuav,
    /// Transmit-only tUAVs: downlink densification, uplink through the BS.
    SpecialTuav,
}

impl Architecture {
    pub const ALL: [Architecture; 5] = [
        Architecture::BsOnly,
        Architecture::FixedSc,
        Architecture::GreenTuav,
        Architecture::RegularTuav,
        Architecture::SpecialTuav,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Architecture::BsOnly => "BsOnly",
            Architecture::FixedSc => "FixedSc",
            Architecture::GreenTuav => "GreenTuav",
            Architecture::RegularTuav => "RegularTuav",
            Architecture::SpecialTuav => "SpecialTuav",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let key: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect();
        Self::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(&key))
    }

    /// Whether the architecture has aerial (tethered) cells.
    pub fn has_tuavs(self) -> bool {
        matches!(
            self,
            Architecture::GreenTuav | Architecture::RegularTuav | Architecture::SpecialTuav
        )
    }

    /// Whether the non-BS cells exist at all.
    pub fn has_small_cells(self) -> bool {
        self != Architecture::BsOnly
    }

    /// Per-cell user capacity of the non-BS cells.
    pub fn cell_capacity(self, params: &SimParams) -> usize {
        match self {
            Architecture::BsOnly => 0,
            Architecture::RegularTuav => params.w_tuav_max / 2,
            _ => params.w_tuav_max,
        }
    }

    /// Non-BS cells serve the uplink.
    pub fn cells_serve_ul(self) -> bool {
        matches!(
            self,
            Architecture::FixedSc | Architecture::GreenTuav | Architecture::RegularTuav
        )
    }

    /// Non-BS cells serve the downlink.
    pub fn cells_serve_dl(self) -> bool {
        matches!(self, Architecture::RegularTuav | Architecture::SpecialTuav)
    }
}

impl std::fmt::Display for Architecture {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One random snapshot of the network: residents, gNBs and ground stations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub params: SimParams,
    pub residents: Vec<User>,
    /// `gnbs[0]` is the BS; the rest are tUAVs or fixed small cells at
    /// their nominal positions.
    pub gnbs: Vec<Gnb>,
    pub ground_stations: Vec<Point3>,
    pub architecture: Architecture,
    pub seed: u64,
}

impl Scenario {
    pub fn active_users(&self) -> Vec<User> {
        self.residents.iter().filter(|u| u.active).cloned().collect()
    }

    pub fn bs(&self) -> &Gnb {
        &self.gnbs[0]
    }

    /// Number of non-BS cells.
    pub fn cell_count(&self) -> usize {
        self.gnbs.len() - 1
    }

    pub fn capacities(&self) -> Vec<usize> {
        self.gnbs.iter().map(|g| g.capacity).collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let bs_count = self
            .gnbs
            .iter()
            .filter(|g| g.kind == GnbKind::BaseStation)
            .count();
        if bs_count != 1 || self.gnbs.first().map(|g| g.kind) != Some(GnbKind::BaseStation) {
            return Err(Error::Infeasible(
                "exactly one base station is required and it must be gNB 0".into(),
            ));
        }
        if self.architecture.has_tuavs() && self.cell_count() > self.ground_stations.len() {
            return Err(Error::Infeasible(format!(
                "{} tUAVs need distinct ground stations but only {} exist",
                self.cell_count(),
                self.ground_stations.len()
            )));
        }
        for u in &self.residents {
            if u.rate_req_ul < 0.0 || u.rate_req_dl < 0.0 {
                return Err(Error::Infeasible(format!("user {} has a negative rate", u.id)));
            }
        }
        Ok(())
    }
}

/// Outcome of one pipeline run, in linear units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    /// Uplink exposure index, W/kg.
    pub ei_ul: f64,
    /// Downlink exposure index, W/kg.
    pub ei_dl: f64,
    /// Per active user, in active-user order.
    pub per_user_power: Vec<f64>,
    pub per_user_rate: Vec<f64>,
    pub per_user_required: Vec<f64>,
    pub satisfied_ratio: f64,
    pub sum_rate_ul: f64,
    /// Uplink serving gNB per active user.
    pub ul_serving: Vec<usize>,
    /// Downlink serving gNB per active user.
    pub dl_serving: Vec<usize>,
    /// Final gNB positions, BS first.
    pub gnb_positions: Vec<Point3>,
    /// User capacity of each gNB, BS first.
    pub capacities: Vec<usize>,
    /// Final tether placements (empty unless the cells are tUAVs).
    pub placements: Vec<TuavPlacement>,
}

impl EvaluationReport {
    pub fn ei_total(&self) -> f64 {
        self.ei_ul + self.ei_dl
    }

    pub fn mean_rate_ul(&self) -> f64 {
        if self.per_user_rate.is_empty() {
            0.0
        } else {
            self.sum_rate_ul / self.per_user_rate.len() as f64
        }
    }

    pub fn mean_power_ul(&self) -> f64 {
        if self.per_user_power.is_empty() {
            0.0
        } else {
            self.per_user_power.iter().sum::<f64>() / self.per_user_power.len() as f64
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noise_power_matches_ktb() {
        let p = SimParams::default();
        let n = noise_power(&p);
        assert!((n - 4.003_882_1e-14).abs() / n < 1e-6, "{n}");
        assert!((watts_to_dbm(n) + 103.976).abs() < 1e-2);
    }

    #[test]
    fn noise_power_zero_bandwidth() {
        let p = SimParams {
            bandwidth_b: 0.0,
            ..SimParams::default()
        };
        assert_eq!(noise_power(&p), 0.0);
    }

    #[test]
    fn noise_power_linear_in_bandwidth() {
        let p = SimParams::default();
        let q = SimParams {
            bandwidth_b: 2.0 * p.bandwidth_b,
            ..p.clone()
        };
        assert!((noise_power(&q) - 2.0 * noise_power(&p)).abs() < 1e-28);
    }

    #[test]
    fn p_max_default_is_26_dbm() {
        let p = SimParams::default();
        assert!((p.p_max - 0.398_107).abs() < 1e-5);
        assert!((watts_to_dbm(p.p_max) - 26.0).abs() < 1e-12);
    }

    #[test]
    fn default_params_validate() {
        SimParams::default().validate().unwrap();
    }

    #[test]
    fn validation_names_offending_key() {
        let p = SimParams {
            fc: -1.0,
            ..SimParams::default()
        };
        let err = p.validate().unwrap_err().to_string();
        assert!(err.contains("`fc`"), "{err}");

        let p = SimParams {
            theta_min: 2.0,
            ..SimParams::default()
        };
        assert!(p.validate().unwrap_err().to_string().contains("theta_min"));

        let p = SimParams {
            w_tuav_max: 0,
            ..SimParams::default()
        };
        assert!(p.validate().unwrap_err().to_string().contains("w_tuav_max"));
    }

    #[test]
    fn architecture_capacities() {
        let p = SimParams::default();
        assert_eq!(Architecture::GreenTuav.cell_capacity(&p), 6);
        assert_eq!(Architecture::RegularTuav.cell_capacity(&p), 3);
        assert_eq!(Architecture::SpecialTuav.cell_capacity(&p), 6);
        assert_eq!(Architecture::parse("green-tuav"), Some(Architecture::GreenTuav));
        assert_eq!(Architecture::parse("bsonly"), Some(Architecture::BsOnly));
        assert_eq!(Architecture::parse("nope"), None);
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn db_round_trip(x in 1e-20f64..1e20) {
                let back = db_to_linear(linear_to_db(x));
                prop_assert!(((back - x) / x).abs() < 1e-12);
            }

            #[test]
            fn dbm_round_trip(dbm in -150f64..60.0) {
                let back = watts_to_dbm(dbm_to_watts(dbm));
                prop_assert!((back - dbm).abs() < 1e-9);
            }
        }
    }
}
