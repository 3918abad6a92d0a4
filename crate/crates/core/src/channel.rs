//! Probabilistic line-of-sight air-to-ground channel, fading-averaged path
//! loss and the Shannon rate/power relations on one resource block.
//!
//! Rates are in bits per second (base-2 logarithm).

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::params::SimParams;

/// 3D distance `r` and horizontal distance `d` of one user-gNB link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGeometry {
    pub r: f64,
    pub d: f64,
}

impl LinkGeometry {
    pub fn between(user: &Point3, gnb: &Point3) -> Self {
        let d = user.horizontal_distance(gnb);
        let r = d.hypot(gnb.z - user.z);
        Self { r, d }
    }

    /// Elevation angle seen from the user, degrees. 90 when `d == 0`.
    pub fn elevation_deg(&self) -> f64 {
        let h = (self.r * self.r - self.d * self.d).max(0.0).sqrt();
        h.atan2(self.d).to_degrees()
    }
}

pub fn los_probability(link: &LinkGeometry, params: &SimParams) -> f64 {
    los_probability_at(link.elevation_deg(), params)
}

/// LoS probability as a function of the elevation angle in degrees.
pub fn los_probability_at(elevation_deg: f64, params: &SimParams) -> f64 {
    let (a, b) = (params.a_env, params.b_env);
    1.0 / (1.0 + a * (-b * (elevation_deg - a)).exp())
}

/// `(4 pi fc / c)^2`.
pub fn free_space_prefactor(params: &SimParams) -> f64 {
    (4.0 * PI * params.fc / params.c).powi(2)
}

/// Fading-averaged path loss as a linear factor.
pub fn avg_path_loss(link: &LinkGeometry, params: &SimParams) -> Result<f64> {
    if link.r <= 0.0 {
        return Err(Error::DegenerateLink);
    }
    let p_los = los_probability(link, params);
    let los = params.eta_los() * link.r.powf(params.alpha_los);
    let nlos = params.eta_nlos() * link.r.powf(params.alpha_nlos);
    Ok(free_space_prefactor(params) * (los * p_los + nlos * (1.0 - p_los)))
}

/// Path loss between two positions.
pub fn path_loss(user: &Point3, gnb: &Point3, params: &SimParams) -> Result<f64> {
    avg_path_loss(&LinkGeometry::between(user, gnb), params)
}

/// Achievable uplink rate for transmit power `p_tx` over loss `loss`.
pub fn ul_rate(p_tx: f64, loss: f64, params: &SimParams) -> f64 {
    params.bandwidth_b * (p_tx / (params.noise_power() * loss)).ln_1p() / std::f64::consts::LN_2
}

/// Transmit power that achieves exactly `rate_req` over loss `loss`.
pub fn required_power(rate_req: f64, loss: f64, params: &SimParams) -> f64 {
    params.noise_power() * loss * (rate_req / params.bandwidth_b * std::f64::consts::LN_2).exp_m1()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> SimParams {
        SimParams::default()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    /// Link whose elevation angle is `deg` at horizontal distance 100 m.
    fn link_at(deg: f64) -> LinkGeometry {
        let d = 100.0;
        let h = d * deg.to_radians().tan();
        LinkGeometry { r: d.hypot(h), d }
    }

    #[test]
    fn los_at_elevation_a_is_one_over_one_plus_a() {
        let p = params();
        let got = los_probability_at(p.a_env, &p);
        assert!(rel(got, 1.0 / (1.0 + p.a_env)) < 1e-12);
        assert!(rel(got, 1.0 / 10.61) < 1e-12);
        assert!(rel(los_probability(&link_at(p.a_env), &p), 1.0 / 10.61) < 1e-9);
    }

    #[test]
    fn los_at_45_degrees() {
        let p = params();
        let got = los_probability(&link_at(45.0), &p);
        let expected = 1.0 / (1.0 + 9.61 * (-0.16f64 * (45.0 - 9.61)).exp());
        assert!(rel(got, expected) < 1e-9);
        assert!((got - 0.9677).abs() < 5e-5, "{got}");
    }

    #[test]
    fn los_at_zero_elevation() {
        let p = params();
        let got = los_probability(&LinkGeometry { r: 100.0, d: 100.0 }, &p);
        let expected = 1.0 / (1.0 + 9.61 * (9.61f64 * 0.16).exp());
        assert!(rel(got, expected) < 1e-12);
        assert!((got - 0.02187).abs() < 5e-6, "{got}");
    }

    #[test]
    fn los_directly_overhead_is_ninety_degrees() {
        let p = params();
        let l = LinkGeometry { r: 50.0, d: 0.0 };
        assert_eq!(l.elevation_deg(), 90.0);
        assert!(rel(los_probability(&l, &p), los_probability_at(90.0, &p)) < 1e-15);
    }

    #[test]
    fn free_space_prefactor_value() {
        let f = free_space_prefactor(&params());
        assert!((f - 2.1494e4).abs() < 1.0, "{f}");
    }

    #[test]
    fn path_loss_at_grazing_100m() {
        let p = params();
        let l = avg_path_loss(&LinkGeometry { r: 100.0, d: 100.0 }, &p).unwrap();
        let p_los = 1.0 / (1.0 + 9.61 * (9.61f64 * 0.16).exp());
        let eta_l = 10f64.powf(0.16);
        let eta_n = 10f64.powf(2.3);
        let expected =
            (4.0 * PI * 3.5e9 / 3e8).powi(2) * 1e4 * (eta_l * p_los + eta_n * (1.0 - p_los));
        assert!(rel(l, expected) < 1e-12);
        assert!(rel(l, 4.19e10) < 2e-3, "{l:e}");
        assert!((10.0 * l.log10() - 106.2).abs() < 0.05);
    }

    #[test]
    fn path_loss_collapses_to_los_overhead() {
        let p = SimParams {
            a_env: 1e-9,
            ..params()
        };
        let l = avg_path_loss(&LinkGeometry { r: 80.0, d: 0.0 }, &p).unwrap();
        let expected = free_space_prefactor(&p) * p.eta_los() * 80f64.powi(2);
        assert!(rel(l, expected) < 1e-9);
    }

    #[test]
    fn zero_distance_is_degenerate() {
        assert!(matches!(
            avg_path_loss(&LinkGeometry { r: 0.0, d: 0.0 }, &params()),
            Err(Error::DegenerateLink)
        ));
    }

    #[test]
    fn rate_at_unit_snr_is_bandwidth() {
        let p = params();
        let loss = 1e10;
        let tx = p.noise_power() * loss;
        assert!(rel(ul_rate(tx, loss, &p), 10e6) < 1e-12);
        assert_eq!(ul_rate(0.0, loss, &p), 0.0);
        assert!(rel(ul_rate(31.0 * tx, loss, &p), 50e6) < 1e-12);
    }

    #[test]
    fn required_power_values() {
        let p = params();
        let loss = 1e10;
        assert!(rel(required_power(10e6, loss, &p), p.noise_power() * loss) < 1e-12);
        assert_eq!(required_power(0.0, loss, &p), 0.0);
        let w = required_power(50e6, loss, &p);
        assert!(rel(w, 31.0 * p.noise_power() * loss) < 1e-12);
        assert!(rel(w, 1.241e-2) < 1e-3, "{w}");
        assert!((10.0 * (w * 1e3).log10() - 10.9).abs() < 0.05);
    }

    #[test]
    fn los_probability_increases_with_elevation() {
        let p = params();
        let mut prev = los_probability_at(0.0, &p);
        for i in 1..=900 {
            let cur = los_probability_at(i as f64 * 0.1, &p);
            assert!(cur > prev);
            prev = cur;
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn rate_power_inverse(rate in 0.0f64..2e8, log_loss in 5.0f64..14.0) {
                let p = params();
                let loss = 10f64.powf(log_loss);
                let back = ul_rate(required_power(rate, loss, &p), loss, &p);
                if rate == 0.0 {
                    prop_assert_eq!(back, 0.0);
                } else {
                    prop_assert!(((back - rate) / rate).abs() < 1e-9);
                }
            }

            #[test]
            fn loss_between_pure_los_and_nlos(d in 1.0f64..1000.0, h in 0.0f64..200.0) {
                let p = params();
                let link = LinkGeometry { r: d.hypot(h), d };
                let l = avg_path_loss(&link, &p).unwrap();
                let base = free_space_prefactor(&p) * link.r.powi(2);
                prop_assert!(l >= base * p.eta_los() * (1.0 - 1e-12));
                prop_assert!(l <= base * p.eta_nlos() * (1.0 + 1e-12));
            }
        }
    }
}
