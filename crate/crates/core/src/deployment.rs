//! Choosing which ground stations host the tUAVs.
//!
//! Both heuristics search over free 2D tUAV positions at the default hover
//! altitude, then snap each tUAV to the nearest free ground station. The
//! final association is recomputed with every tUAV centred above its GS.

use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::association::{Association, AssociationProblem};
use crate::error::{Error, Result};
use crate::geometry::{from_spherical, Point3, TuavPlacement};
use crate::params::SimParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DeploymentStrategy {
    KMeans,
    ShrinkRealign,
    RandomGs,
    /// Fixed cells on an even grid, no ground stations involved.
    UniformGrid,
    BruteForce,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineMode {
    RandomGs,
    UniformGrid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeploymentResult {
    /// Hosting GS per tUAV; `None` for fixed grid cells.
    pub gs_assignment: Option<Vec<usize>>,
    /// Last 2D search position per tUAV.
    pub tuav_xy: Vec<(f64, f64)>,
    /// Final 3D cell positions.
    pub positions: Vec<Point3>,
    pub assoc: Association,
    /// Objective after each accepted iteration or radius round.
    pub trace: Vec<f64>,
}

/// Altitude used while searching in 2D.
pub fn search_height(params: &SimParams) -> f64 {
    params.tuav_default_height()
}

/// Centred hover position above a ground station.
pub fn default_position(gs: Point3, params: &SimParams) -> Point3 {
    from_spherical(gs, &TuavPlacement::centered(0, params))
}

fn clip_to_area(xy: (f64, f64), params: &SimParams) -> (f64, f64) {
    (xy.0.clamp(0.0, params.area_x), xy.1.clamp(0.0, params.area_y))
}

fn lift(xy: &[(f64, f64)], params: &SimParams) -> Vec<Point3> {
    let z = search_height(params);
    xy.iter().map(|&(x, y)| Point3::new(x, y, z)).collect()
}

/// `rows x cols = count` with `rows` the largest divisor not above the root.
pub fn grid_shape(count: usize) -> (usize, usize) {
    if count == 0 {
        return (0, 0);
    }
    let mut rows = (count as f64).sqrt().floor() as usize;
    while count % rows != 0 {
        rows -= 1;
    }
    (rows, count / rows)
}

/// Centroids of an even `rows x cols` partition of the area, row by row.
pub fn even_grid(params: &SimParams, count: usize, z: f64) -> Vec<Point3> {
    let (rows, cols) = grid_shape(count);
    let mut out = Vec::with_capacity(count);
    for r in 0..rows {
        for c in 0..cols {
            out.push(Point3::new(
                (c as f64 + 0.5) * params.area_x / cols as f64,
                (r as f64 + 0.5) * params.area_y / rows as f64,
                z,
            ));
        }
    }
    out
}

fn check_counts(cells: usize, ground_stations: usize) -> Result<()> {
    if cells > ground_stations {
        return Err(Error::Infeasible(format!(
            "{cells} tUAVs need distinct ground stations but only {ground_stations} exist"
        )));
    }
    Ok(())
}

fn random_scatter<R: Rng + ?Sized>(count: usize, params: &SimParams, rng: &mut R) -> Vec<(f64, f64)> {
    (0..count)
        .map(|_| {
            (
                rng.random_range(0.0..=params.area_x),
                rng.random_range(0.0..=params.area_y),
            )
        })
        .collect()
}

/// Greedy in tUAV order: each tUAV takes the nearest still-free GS.
pub fn attach_nearest_gs(tuav_xy: &[(f64, f64)], ground_stations: &[Point3]) -> Result<Vec<usize>> {
    check_counts(tuav_xy.len(), ground_stations.len())?;
    let mut taken = vec![false; ground_stations.len()];
    let mut out = Vec::with_capacity(tuav_xy.len());
    for &(x, y) in tuav_xy {
        let mut best: Option<(f64, usize)> = None;
        for (n, gs) in ground_stations.iter().enumerate() {
            if taken[n] {
                continue;
            }
            let d = (gs.x - x).hypot(gs.y - y);
            if best.is_none_or(|(b, _)| d < b) {
                best = Some((d, n));
            }
        }
        let (_, n) = best.expect("a free ground station remains");
        taken[n] = true;
        out.push(n);
    }
    Ok(out)
}

fn finish(
    problem: &AssociationProblem,
    ground_stations: &[Point3],
    gs_assignment: Vec<usize>,
    tuav_xy: Vec<(f64, f64)>,
    mut trace: Vec<f64>,
) -> Result<DeploymentResult> {
    let positions: Vec<Point3> = gs_assignment
        .iter()
        .map(|&n| default_position(ground_stations[n], problem.params))
        .collect();
    let assoc = problem.associate(&positions)?;
    trace.push(assoc.objective());
    Ok(DeploymentResult {
        gs_assignment: Some(gs_assignment),
        tuav_xy,
        positions,
        assoc,
        trace,
    })
}

fn no_cells(problem: &AssociationProblem) -> Result<DeploymentResult> {
    let assoc = problem.associate(&[])?;
    let obj = assoc.objective();
    Ok(DeploymentResult {
        gs_assignment: Some(Vec::new()),
        tuav_xy: Vec::new(),
        positions: Vec::new(),
        assoc,
        trace: vec![obj],
    })
}

/// Users whose cheapest cell (ignoring the BS) is `cell`.
fn nearest_cell_users(assoc: &Association, cell: usize) -> Vec<usize> {
    (0..assoc.costs.users())
        .filter(|&k| {
            let row = &assoc.costs.row(k)[1..];
            let mut best = 0;
            for j in 1..row.len() {
                if row[j] < row[best] {
                    best = j;
                }
            }
            best + 1 == cell
        })
        .collect()
}

/// Cost-weighted centroid of each cell's users. A cell that serves nobody
/// is pulled towards the users for which it is the cheapest cell.
fn barycenters(problem: &AssociationProblem, assoc: &Association, xy: &[(f64, f64)]) -> Vec<(f64, f64)> {
    xy.iter()
        .enumerate()
        .map(|(m, &here)| {
            let mut members = assoc.users_of(m + 1);
            if members.is_empty() {
                members = nearest_cell_users(assoc, m + 1);
            }
            if members.is_empty() {
                return here;
            }
            let weights: Vec<f64> = members.iter().map(|&k| assoc.costs.get(k, m + 1).abs()).collect();
            let total: f64 = weights.iter().sum();
            let (mut sx, mut sy, mut sw) = (0.0, 0.0, 0.0);
            for (&k, &w) in members.iter().zip(&weights) {
                let w = if total > 0.0 { w } else { 1.0 };
                let p = problem.users[k].position;
                sx += w * p.x;
                sy += w * p.y;
                sw += w;
            }
            (sx / sw, sy / sw)
        })
        .collect()
}

/// Cost-weighted K-means over free 2D positions.
///
/// Each round moves a tUAV to its barycenter only if that raises its own
/// gain over the BS. A round that would raise the total objective is
/// rejected and ends the search.
pub fn deploy_kmeans<R: Rng + ?Sized>(
    problem: &AssociationProblem,
    ground_stations: &[Point3],
    rng: &mut R,
) -> Result<DeploymentResult> {
    let params = problem.params;
    let m = problem.cells();
    check_counts(m, ground_stations.len())?;
    if m == 0 {
        return no_cells(problem);
    }
    let mut xy = random_scatter(m, params, rng);
    let mut assoc = problem.associate(&lift(&xy, params))?;
    let mut trace = vec![assoc.objective()];
    for _ in 0..params.i_max {
        let bary = barycenters(problem, &assoc, &xy);
        let at_bary = problem.associate(&lift(&bary, params))?;
        let next: Vec<(f64, f64)> = (0..m)
            .map(|i| {
                if at_bary.tuav_gain[i] > assoc.tuav_gain[i] {
                    bary[i]
                } else {
                    xy[i]
                }
            })
            .collect();
        let at_next = problem.associate(&lift(&next, params))?;
        if at_next.objective() > assoc.objective() {
            break;
        }
        let shift = xy
            .iter()
            .zip(&next)
            .map(|(a, b)| (a.0 - b.0).hypot(a.1 - b.1))
            .fold(0.0, f64::max);
        xy = next;
        assoc = at_next;
        trace.push(assoc.objective());
        if shift < params.tol_delta {
            break;
        }
    }
    let gs = attach_nearest_gs(&xy, ground_stations)?;
    finish(problem, ground_stations, gs, xy, trace)
}

/// 2D shrink-and-realign: probe points on a circle around each tUAV, keep
/// the best one if it lowers the total objective, halve the radius.
pub fn deploy_sr2d<R: Rng + ?Sized>(
    problem: &AssociationProblem,
    ground_stations: &[Point3],
    rng: &mut R,
) -> Result<DeploymentResult> {
    let params = problem.params;
    let m = problem.cells();
    check_counts(m, ground_stations.len())?;
    if m == 0 {
        return no_cells(problem);
    }
    let z = search_height(params);
    let mut xy = random_scatter(m, params, rng);
    let mut columns = vec![problem.bs_column()?];
    for &(x, y) in &xy {
        columns.push(problem.column(&Point3::new(x, y, z))?);
    }
    let mut current = problem.assign_columns(&columns)?.objective();
    let mut trace = vec![current];
    let n = params.sr_candidates_2d;
    let mut radius = params.sr_radius_init;
    while radius >= params.sr_radius_min {
        for i in 0..m {
            let mut best: Option<(f64, (f64, f64), Vec<f64>)> = None;
            for c in 0..n {
                let angle = TAU * c as f64 / n as f64;
                let cand = clip_to_area(
                    (xy[i].0 + radius * angle.cos(), xy[i].1 + radius * angle.sin()),
                    params,
                );
                let col = problem.column(&Point3::new(cand.0, cand.1, z))?;
                let saved = std::mem::replace(&mut columns[i + 1], col);
                let obj = problem.assign_columns(&columns)?.objective();
                let col = std::mem::replace(&mut columns[i + 1], saved);
                if best.as_ref().is_none_or(|(b, _, _)| obj < *b) {
                    best = Some((obj, cand, col));
                }
            }
            if let Some((obj, cand, col)) = best {
                if obj < current {
                    current = obj;
                    xy[i] = cand;
                    columns[i + 1] = col;
                }
            }
        }
        trace.push(current);
        radius /= 2.0;
    }
    let gs = attach_nearest_gs(&xy, ground_stations)?;
    finish(problem, ground_stations, gs, xy, trace)
}

pub fn deploy_baseline<R: Rng + ?Sized>(
    problem: &AssociationProblem,
    ground_stations: &[Point3],
    mode: BaselineMode,
    rng: &mut R,
) -> Result<DeploymentResult> {
    let params = problem.params;
    let m = problem.cells();
    match mode {
        BaselineMode::RandomGs => {
            check_counts(m, ground_stations.len())?;
            let gs = rand::seq::index::sample(rng, ground_stations.len(), m).into_vec();
            let xy = gs.iter().map(|&n| (ground_stations[n].x, ground_stations[n].y)).collect();
            finish(problem, ground_stations, gs, xy, Vec::new())
        }
        BaselineMode::UniformGrid => {
            let positions = even_grid(params, m, search_height(params));
            let assoc = problem.associate(&positions)?;
            Ok(DeploymentResult {
                gs_assignment: None,
                tuav_xy: positions.iter().map(|p| (p.x, p.y)).collect(),
                trace: vec![assoc.objective()],
                positions,
                assoc,
            })
        }
    }
}

/// Number of ordered ways to put `m` tUAVs on `n` ground stations.
pub fn deployment_count(n: usize, m: usize) -> f64 {
    (0..m).map(|i| (n - i) as f64).product()
}

/// Exhaustive search over ordered GS choices with centred tUAVs.
pub fn brute_force_deploy(
    problem: &AssociationProblem,
    ground_stations: &[Point3],
    budget: f64,
) -> Result<DeploymentResult> {
    let params = problem.params;
    let (n, m) = (ground_stations.len(), problem.cells());
    check_counts(m, n)?;
    let size = deployment_count(n, m);
    if size > budget {
        return Err(Error::BudgetExceeded { size, budget });
    }
    if m == 0 {
        return no_cells(problem);
    }
    let bs = problem.bs_column()?;
    let gs_columns = ground_stations
        .iter()
        .map(|&g| problem.column(&default_position(g, params)))
        .collect::<Result<Vec<_>>>()?;

    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut chosen = Vec::with_capacity(m);
    let mut used = vec![false; n];
    let mut columns = Vec::with_capacity(m + 1);
    enumerate(m, &mut chosen, &mut used, &mut |pick| {
        columns.clear();
        columns.push(bs.clone());
        columns.extend(pick.iter().map(|&g| gs_columns[g].clone()));
        let obj = problem.assign_columns(&columns)?.objective();
        if best.as_ref().is_none_or(|(b, _)| obj < *b) {
            best = Some((obj, pick.to_vec()));
        }
        Ok(())
    })?;
    let (_, gs) = best.expect("at least one deployment");
    let xy = gs.iter().map(|&g| (ground_stations[g].x, ground_stations[g].y)).collect();
    finish(problem, ground_stations, gs, xy, Vec::new())
}

fn enumerate(
    m: usize,
    chosen: &mut Vec<usize>,
    used: &mut [bool],
    visit: &mut dyn FnMut(&[usize]) -> Result<()>,
) -> Result<()> {
    if chosen.len() == m {
        return visit(chosen);
    }
    for g in 0..used.len() {
        if used[g] {
            continue;
        }
        used[g] = true;
        chosen.push(g);
        enumerate(m, chosen, used, visit)?;
        chosen.pop();
        used[g] = false;
    }
    Ok(())
}

pub fn deploy<R: Rng + ?Sized>(
    strategy: DeploymentStrategy,
    problem: &AssociationProblem,
    ground_stations: &[Point3],
    budget: f64,
    rng: &mut R,
) -> Result<DeploymentResult> {
    match strategy {
        DeploymentStrategy::KMeans => deploy_kmeans(problem, ground_stations, rng),
        DeploymentStrategy::ShrinkRealign => deploy_sr2d(problem, ground_stations, rng),
        DeploymentStrategy::RandomGs => {
            deploy_baseline(problem, ground_stations, BaselineMode::RandomGs, rng)
        }
        DeploymentStrategy::UniformGrid => {
            deploy_baseline(problem, ground_stations, BaselineMode::UniformGrid, rng)
        }
        DeploymentStrategy::BruteForce => brute_force_deploy(problem, ground_stations, budget),
    }
}
