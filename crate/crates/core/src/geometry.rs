//! Tether geometry.
//!
//! A tUAV hangs from its ground station (GS) on a tether of length `T`,
//! elevation `theta` and azimuth `phi`. The hovering area is the set of
//! positions with `T <= t_max` and `theta_min <= theta <= pi/2`: an
//! upright solid cone of half-angle `pi/2 - theta_min`, capped by the sphere
//! of radius `t_max` around the GS. The set is convex, so nearest-point
//! projections onto it are unique.

use std::f64::consts::{FRAC_PI_2, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::SimParams;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn distance(&self, other: &Point3) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2) + (self.z - other.z).powi(2))
            .sqrt()
    }

    pub fn horizontal_distance(&self, other: &Point3) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn with_z(self, z: f64) -> Self {
        Self { z, ..self }
    }
}

/// Tether state of one tUAV relative to its ground station.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuavPlacement {
    pub gs_index: usize,
    /// Tether length, m.
    pub tether: f64,
    /// Elevation above the horizontal, rad.
    pub elevation: f64,
    /// Azimuth from the +x axis, rad in `[0, 2pi)`.
    pub azimuth: f64,
}

impl TuavPlacement {
    /// Vertical tether at half length, the centre of the hovering area.
    pub fn centered(gs_index: usize, params: &SimParams) -> Self {
        Self {
            gs_index,
            tether: params.t_max / 2.0,
            elevation: FRAC_PI_2,
            azimuth: 0.0,
        }
    }

    /// True when the placement respects the tether length and angle limits.
    pub fn is_feasible(&self, params: &SimParams) -> bool {
        self.tether >= 0.0
            && self.tether <= params.t_max
            && self.elevation >= params.theta_min
            && self.elevation <= FRAC_PI_2
            && self.azimuth >= 0.0
            && self.azimuth < TAU
    }
}

/// Spherical coordinates `(T, theta, phi)` of a point relative to a GS.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spherical {
    pub tether: f64,
    pub elevation: f64,
    pub azimuth: f64,
}

impl Spherical {
    pub fn into_placement(self, gs_index: usize) -> TuavPlacement {
        TuavPlacement {
            gs_index,
            tether: self.tether,
            elevation: self.elevation,
            azimuth: self.azimuth,
        }
    }
}

pub fn from_spherical(gs: Point3, placement: &TuavPlacement) -> Point3 {
    let (t, th, ph) = (placement.tether, placement.elevation, placement.azimuth);
    Point3 {
        x: gs.x + t * th.cos() * ph.cos(),
        y: gs.y + t * th.cos() * ph.sin(),
        z: gs.z + t * th.sin(),
    }
}

/// Inverse of [`from_spherical`]. On the vertical axis (including the GS
/// itself) the elevation is `pi/2` and the azimuth 0.
pub fn to_spherical(gs: Point3, p: Point3) -> Result<Spherical> {
    let (dx, dy, dz) = (p.x - gs.x, p.y - gs.y, p.z - gs.z);
    if dz < 0.0 {
        return Err(Error::InfeasibleGeometry(format!(
            "point at z = {} lies below its ground station at z = {}",
            p.z, gs.z
        )));
    }
    let rho = dx.hypot(dy);
    let tether = rho.hypot(dz);
    if rho == 0.0 {
        return Ok(Spherical {
            tether,
            elevation: FRAC_PI_2,
            azimuth: 0.0,
        });
    }
    let mut azimuth = dy.atan2(dx);
    if azimuth < 0.0 {
        azimuth += TAU;
    }
    if azimuth >= TAU {
        azimuth = 0.0;
    }
    Ok(Spherical {
        tether,
        elevation: dz.atan2(rho),
        azimuth,
    })
}

/// Whether `p` is inside the hovering area of `gs`.
pub fn in_hover(gs: Point3, p: Point3, params: &SimParams) -> bool {
    match to_spherical(gs, p) {
        Ok(s) => s.tether <= params.t_max && s.elevation >= params.theta_min,
        Err(_) => false,
    }
}

/// Euclidean-nearest point of the hovering area to `p`.
///
/// Projects in the vertical half-plane through `p`, where the hovering area
/// is a circular sector between the `theta_min` ray and the vertical axis:
/// above the ray the point is pulled radially onto the cap, below it the
/// point lands on the ray segment.
pub fn clamp_to_hover(gs: Point3, p: Point3, params: &SimParams) -> Point3 {
    if in_hover(gs, p, params) {
        return p;
    }
    let (dx, dy, dz) = (p.x - gs.x, p.y - gs.y, p.z - gs.z);
    let rho = dx.hypot(dy);
    let (u, z) = project_sector(rho, dz, params.theta_min, params.t_max);
    let q = if rho > 0.0 {
        Point3::new(gs.x + u * dx / rho, gs.y + u * dy / rho, gs.z + z)
    } else {
        Point3::new(gs.x, gs.y, gs.z + z)
    };
    settle(gs, q, params)
}

/// Nearest point to `(xy, height)` within the horizontal slice of the
/// hovering area at `height`. Heights outside `[h_gs, h_gs + t_max]` are
/// first clamped into that range.
pub fn clamp_to_slice(gs: Point3, xy: (f64, f64), height: f64, params: &SimParams) -> Point3 {
    let dz = (height - gs.z).clamp(0.0, params.t_max);
    let max_rho = slice_radius(dz, params);
    let (dx, dy) = (xy.0 - gs.x, xy.1 - gs.y);
    let rho = dx.hypot(dy);
    let q = if rho <= max_rho {
        Point3::new(xy.0, xy.1, gs.z + dz)
    } else {
        let s = max_rho / rho;
        Point3::new(gs.x + dx * s, gs.y + dy * s, gs.z + dz)
    };
    settle(gs, q, params)
}

/// Radius of the hovering-area slice `dz` metres above the GS.
pub fn slice_radius(dz: f64, params: &SimParams) -> f64 {
    if dz <= 0.0 {
        return 0.0;
    }
    let cone = dz / params.theta_min.tan();
    let cap = (params.t_max * params.t_max - dz * dz).max(0.0).sqrt();
    cone.min(cap)
}

fn project_sector(u: f64, z: f64, theta_min: f64, radius: f64) -> (f64, f64) {
    // u >= 0, so the only reachable edge of the sector is the theta_min ray.
    let psi = z.atan2(u);
    if psi >= theta_min {
        let s = u.hypot(z);
        if s <= radius {
            return (u, z);
        }
        return (u * radius / s, z * radius / s);
    }
    let (dir_u, dir_z) = (theta_min.cos(), theta_min.sin());
    let t = (u * dir_u + z * dir_z).clamp(0.0, radius);
    (t * dir_u, t * dir_z)
}

/// Nudges a point that sits on the boundary up to rounding so that the
/// constraints hold exactly when re-checked through [`to_spherical`].
fn settle(gs: Point3, mut q: Point3, params: &SimParams) -> Point3 {
    // The step doubles each round so it eventually exceeds the rounding of
    // coordinates far from the origin.
    let mut step = 4.0 * f64::EPSILON;
    for _ in 0..64 {
        let s = match to_spherical(gs, q) {
            Ok(s) => s,
            Err(_) => {
                q.z = gs.z;
                continue;
            }
        };
        let long = s.tether > params.t_max;
        let low = s.elevation < params.theta_min;
        if !long && !low {
            return q;
        }
        let k = 1.0 - step;
        if long {
            q = Point3::new(
                gs.x + (q.x - gs.x) * k,
                gs.y + (q.y - gs.y) * k,
                gs.z + (q.z - gs.z) * k,
            );
        }
        if low {
            q.x = gs.x + (q.x - gs.x) * k;
            q.y = gs.y + (q.y - gs.y) * k;
        }
        step *= 2.0;
    }
    q
}
