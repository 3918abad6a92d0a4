//! Fine placement of one tUAV inside its hovering area with the set of
//! served users held fixed.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::association::CostModel;
use crate::error::{Error, Result};
use crate::geometry::{
    clamp_to_hover, clamp_to_slice, from_spherical, in_hover, slice_radius, to_spherical, Point3,
    TuavPlacement,
};
use crate::params::{SimParams, User};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PositioningStrategy {
    /// Keep the centred default placement.
    Center,
    Golden,
    ShrinkRealign,
    /// Uniform random point of the hovering area.
    Random,
    /// Exhaustive lattice search.
    Grid,
}

/// One tUAV, its ground station and the users it serves.
#[derive(Debug, Clone)]
pub struct HoverProblem<'a> {
    pub gs: Point3,
    pub gs_index: usize,
    /// Current position, used as the fallback.
    pub start: Point3,
    pub users: Vec<User>,
    pub model: CostModel,
    pub params: &'a SimParams,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoverSolution {
    pub placement: TuavPlacement,
    pub position: Point3,
    pub cost: f64,
}

impl<'a> HoverProblem<'a> {
    /// Summed link cost of the served users with the tUAV at `p`.
    pub fn cost(&self, p: &Point3) -> Result<f64> {
        self.users
            .iter()
            .map(|u| self.model.link_cost(u, p, self.params))
            .sum()
    }

    fn solution(&self, p: Point3, cost: f64) -> Result<HoverSolution> {
        Ok(HoverSolution {
            placement: to_spherical(self.gs, p)?.into_placement(self.gs_index),
            position: p,
            cost,
        })
    }

    fn centered(&self) -> Result<HoverSolution> {
        let placement = TuavPlacement::centered(self.gs_index, self.params);
        let position = from_spherical(self.gs, &placement);
        Ok(HoverSolution {
            placement,
            position,
            cost: self.cost(&position)?,
        })
    }

    /// Keeps `p` unless it is worse than the start point.
    fn at_least_start(&self, p: Point3, cost: f64) -> Result<HoverSolution> {
        let start_cost = self.cost(&self.start)?;
        if cost <= start_cost {
            self.solution(p, cost)
        } else {
            self.solution(self.start, start_cost)
        }
    }

    /// Cost-weighted centroid of the users, weights taken at `probe`.
    fn weighted_centroid(&self, probe: &Point3) -> Result<(f64, f64)> {
        let (mut sx, mut sy, mut sw) = (0.0, 0.0, 0.0);
        for u in &self.users {
            let w = self.model.link_cost(u, probe, self.params)?.abs();
            sx += w * u.position.x;
            sy += w * u.position.y;
            sw += w;
        }
        if sw > 0.0 {
            return Ok((sx / sw, sy / sw));
        }
        let n = self.users.len() as f64;
        Ok((
            self.users.iter().map(|u| u.position.x).sum::<f64>() / n,
            self.users.iter().map(|u| u.position.y).sum::<f64>() / n,
        ))
    }
}

/// Golden ratio conjugate `(sqrt 5 - 1) / 2`.
pub const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Golden-section search over altitude.
///
/// At each probed height the tUAV sits at the weighted centroid of its
/// users, pulled into the hovering slice at that height.
pub fn position_golden(problem: &HoverProblem) -> Result<HoverSolution> {
    if problem.users.is_empty() {
        return problem.centered();
    }
    let params = problem.params;
    let (x0, y0) = (problem.start.x, problem.start.y);
    let point_at = |h: f64| -> Result<Point3> {
        let xy = problem.weighted_centroid(&Point3::new(x0, y0, h))?;
        Ok(clamp_to_slice(problem.gs, xy, h, params))
    };
    let f = |h: f64| -> Result<f64> { problem.cost(&point_at(h)?) };

    let (mut lo, mut hi) = (problem.gs.z, problem.gs.z + params.t_max);
    let mut h1 = hi - GOLDEN * (hi - lo);
    let mut h2 = lo + GOLDEN * (hi - lo);
    let (mut f1, mut f2) = (f(h1)?, f(h2)?);
    while hi - lo > params.h_min {
        if f1 < f2 {
            hi = h2;
            h2 = h1;
            f2 = f1;
            h1 = hi - GOLDEN * (hi - lo);
            f1 = f(h1)?;
        } else {
            lo = h1;
            h1 = h2;
            f1 = f2;
            h2 = lo + GOLDEN * (hi - lo);
            f2 = f(h2)?;
        }
    }
    let p = point_at(0.5 * (lo + hi))?;
    let cost = problem.cost(&p)?;
    problem.at_least_start(p, cost)
}

/// Number of interval reductions the golden search performs.
pub fn golden_iterations(params: &SimParams) -> usize {
    let mut width = params.t_max;
    let mut n = 0;
    while width > params.h_min {
        width *= GOLDEN;
        n += 1;
    }
    n
}

/// Unit probe directions: the six axes, then the eight cube diagonals.
pub fn probe_directions(count: usize) -> Vec<[f64; 3]> {
    let d = 1.0 / 3f64.sqrt();
    let mut dirs = vec![
        [1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, -1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0],
    ];
    for sx in [1.0, -1.0] {
        for sy in [1.0, -1.0] {
            for sz in [1.0, -1.0] {
                dirs.push([sx * d, sy * d, sz * d]);
            }
        }
    }
    dirs.truncate(count);
    dirs
}

/// 3D shrink-and-realign from the start point.
pub fn position_sr3d(problem: &HoverProblem) -> Result<HoverSolution> {
    if problem.users.is_empty() {
        return problem.centered();
    }
    let params = problem.params;
    let dirs = probe_directions(params.sr_candidates_3d);
    let mut here = clamp_to_hover(problem.gs, problem.start, params);
    let mut cost = problem.cost(&here)?;
    let mut radius = params.sr3d_radius_init;
    while radius >= params.sr3d_radius_min {
        let mut best: Option<(f64, Point3)> = None;
        for d in &dirs {
            let cand = clamp_to_hover(
                problem.gs,
                Point3::new(
                    here.x + radius * d[0],
                    here.y + radius * d[1],
                    here.z + radius * d[2],
                ),
                params,
            );
            let c = problem.cost(&cand)?;
            if best.is_none_or(|(b, _)| c < b) {
                best = Some((c, cand));
            }
        }
        if let Some((c, cand)) = best {
            if c < cost {
                cost = c;
                here = cand;
            }
        }
        radius /= 2.0;
    }
    problem.solution(here, cost)
}

/// Lattice points of the hovering area, spaced `resolution` apart and
/// anchored at the ground station.
pub fn hover_lattice(gs: Point3, resolution: f64, params: &SimParams) -> Vec<Point3> {
    let reach = params.t_max * params.theta_min.cos();
    let nh = (reach / resolution).floor() as i64;
    let nz = (params.t_max / resolution).floor() as i64;
    let mut out = Vec::new();
    for k in 0..=nz {
        let dz = k as f64 * resolution;
        let r = slice_radius(dz, params);
        for i in -nh..=nh {
            for j in -nh..=nh {
                let (dx, dy) = (i as f64 * resolution, j as f64 * resolution);
                if dx.hypot(dy) > r {
                    continue;
                }
                let p = Point3::new(gs.x + dx, gs.y + dy, gs.z + dz);
                if in_hover(gs, p, params) {
                    out.push(p);
                }
            }
        }
    }
    out
}

/// Upper bound on the number of lattice points visited.
pub fn lattice_size(resolution: f64, params: &SimParams) -> f64 {
    let nh = (params.t_max * params.theta_min.cos() / resolution).floor();
    let nz = (params.t_max / resolution).floor();
    (2.0 * nh + 1.0).powi(2) * (nz + 1.0)
}

/// Exhaustive search over [`hover_lattice`].
pub fn position_grid_oracle(
    problem: &HoverProblem,
    resolution: f64,
    budget: f64,
) -> Result<HoverSolution> {
    if !(resolution.is_finite() && resolution > 0.0) {
        return Err(Error::param("grid_resolution", "must be finite and > 0"));
    }
    let size = lattice_size(resolution, problem.params);
    if size > budget {
        return Err(Error::BudgetExceeded { size, budget });
    }
    if problem.users.is_empty() {
        return problem.centered();
    }
    let mut best: Option<(f64, Point3)> = None;
    for p in hover_lattice(problem.gs, resolution, problem.params) {
        let c = problem.cost(&p)?;
        if best.is_none_or(|(b, _)| c < b) {
            best = Some((c, p));
        }
    }
    let (c, p) = best.expect("the ground station itself is a lattice point");
    problem.solution(p, c)
}

/// Uniformly random point of the hovering area.
pub fn position_random<R: Rng + ?Sized>(problem: &HoverProblem, rng: &mut R) -> Result<HoverSolution> {
    let params = problem.params;
    let reach = params.t_max * params.theta_min.cos();
    loop {
        let p = Point3::new(
            problem.gs.x + rng.random_range(-reach..=reach),
            problem.gs.y + rng.random_range(-reach..=reach),
            problem.gs.z + rng.random_range(0.0..=params.t_max),
        );
        if in_hover(problem.gs, p, params) {
            let c = problem.cost(&p)?;
            return problem.solution(p, c);
        }
    }
}

pub fn position<R: Rng + ?Sized>(
    strategy: PositioningStrategy,
    problem: &HoverProblem,
    grid_resolution: f64,
    budget: f64,
    rng: &mut R,
) -> Result<HoverSolution> {
    match strategy {
        PositioningStrategy::Center => {
            let c = problem.cost(&problem.start)?;
            problem.solution(problem.start, c)
        }
        PositioningStrategy::Golden => position_golden(problem),
        PositioningStrategy::ShrinkRealign => position_sr3d(problem),
        PositioningStrategy::Random => position_random(problem, rng),
        PositioningStrategy::Grid => position_grid_oracle(problem, grid_resolution, budget),
    }
}
