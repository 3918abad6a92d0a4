//! Random network snapshots.
//!
//! Residents are a uniform Poisson field plus a handful of circular
//! hotspots. A subset of them is switched on as active users, split into
//! voice and data usage. Ground stations sit on an even grid and the BS
//! sits in the middle of the area.

use std::f64::consts::TAU;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::deployment::{default_position, even_grid, search_height};
use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::params::{Architecture, Gnb, GnbKind, Scenario, SimParams, Usage, User};

/// Scenario controls that are not physical constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Mean resident count.
    pub mean_residents: f64,
    /// Exact number of active users. Takes precedence over `active_fraction`.
    pub active_users: Option<usize>,
    pub active_fraction: f64,
    pub voice_fraction: f64,
    pub ground_stations: usize,
    /// Number of tUAVs or fixed small cells.
    pub cells: usize,
    pub architecture: Architecture,
    /// Use the mean counts exactly instead of drawing them.
    pub fixed_counts: bool,
    pub mean_clusters: f64,
    pub cluster_radius: f64,
    pub voice_rate_ul: f64,
    pub voice_rate_dl: f64,
    pub data_rate_ul: f64,
    pub data_rate_dl: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            mean_residents: 120.0,
            active_users: Some(24),
            active_fraction: 0.2,
            voice_fraction: 0.2,
            ground_stations: 25,
            cells: 4,
            architecture: Architecture::GreenTuav,
            fixed_counts: false,
            mean_clusters: 4.0,
            cluster_radius: 100.0,
            voice_rate_ul: 5e6,
            voice_rate_dl: 5e6,
            data_rate_ul: 50e6,
            data_rate_dl: 100e6,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("mean_residents", self.mean_residents),
            ("mean_clusters", self.mean_clusters),
            ("voice_rate_ul", self.voice_rate_ul),
            ("voice_rate_dl", self.voice_rate_dl),
            ("data_rate_ul", self.data_rate_ul),
            ("data_rate_dl", self.data_rate_dl),
        ];
        for (key, v) in nonneg {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::param(key, format!("must be finite and >= 0, got {v}")));
            }
        }
        if !(self.cluster_radius.is_finite() && self.cluster_radius > 0.0) {
            return Err(Error::param("cluster_radius", "must be finite and > 0"));
        }
        for (key, v) in [
            ("active_fraction", self.active_fraction),
            ("voice_fraction", self.voice_fraction),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::param(key, format!("must lie in [0, 1], got {v}")));
            }
        }
        if self.architecture.has_tuavs() && self.cells > self.ground_stations {
            return Err(Error::param(
                "cells",
                format!(
                    "{} tUAVs need distinct ground stations but only {} exist",
                    self.cells, self.ground_stations
                ),
            ));
        }
        Ok(())
    }
}

/// Stream of the scenario seed that drives resident placement.
pub const RESIDENT_STREAM: u64 = 0;
/// Stream of the scenario seed reserved for the optimisation pipeline.
pub const PIPELINE_STREAM: u64 = 1;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive finite mean").sample(rng) as usize
}

fn count<R: Rng + ?Sized>(mean: f64, fixed: bool, rng: &mut R) -> usize {
    if fixed {
        mean.round() as usize
    } else {
        poisson(mean, rng)
    }
}

/// Resident positions on the ground plane.
pub fn sample_residents<R: Rng + ?Sized>(
    params: &SimParams,
    config: &ScenarioConfig,
    rng: &mut R,
) -> Vec<(f64, f64)> {
    let (ax, ay) = (params.area_x, params.area_y);
    let mut pts = Vec::new();
    let uniform_count = count(config.mean_residents / 3.0, config.fixed_counts, rng);
    for _ in 0..uniform_count {
        pts.push((rng.random_range(0.0..ax), rng.random_range(0.0..ay)));
    }
    let clusters = count(config.mean_clusters, config.fixed_counts, rng);
    let per_cluster = config.mean_residents / 6.0;
    for _ in 0..clusters {
        let centre = (rng.random_range(0.0..ax), rng.random_range(0.0..ay));
        let n = count(per_cluster, config.fixed_counts, rng);
        for _ in 0..n {
            loop {
                // Uniform in the disc.
                let r = config.cluster_radius * rng.random::<f64>().sqrt();
                let a = rng.random_range(0.0..TAU);
                let (x, y) = (centre.0 + r * a.cos(), centre.1 + r * a.sin());
                if (0.0..=ax).contains(&x) && (0.0..=ay).contains(&y) {
                    pts.push((x, y));
                    break;
                }
            }
        }
    }
    pts
}

fn cell_gnbs(params: &SimParams, config: &ScenarioConfig, ground_stations: &[Point3]) -> Vec<Gnb> {
    let arch = config.architecture;
    let capacity = arch.cell_capacity(params);
    let positions: Vec<Point3> = match arch {
        Architecture::BsOnly => Vec::new(),
        Architecture::FixedSc => even_grid(params, config.cells, search_height(params)),
        _ => ground_stations
            .iter()
            .take(config.cells)
            .map(|&g| default_position(g, params))
            .collect(),
    };
    positions
        .into_iter()
        .enumerate()
        .map(|(i, position)| Gnb {
            id: i + 1,
            kind: GnbKind::Tuav,
            position,
            capacity,
        })
        .collect()
}

/// Draws one scenario. The residents depend only on `seed`, `params` and
/// the population settings, so every architecture sees the same people.
pub fn generate_scenario(params: &SimParams, config: &ScenarioConfig, seed: u64) -> Result<Scenario> {
    params.validate()?;
    config.validate()?;
    let mut rng = stream_rng(seed, RESIDENT_STREAM);
    let positions = sample_residents(params, config, &mut rng);
    let n = positions.len();
    let k = config
        .active_users
        .unwrap_or_else(|| (config.active_fraction * n as f64).round() as usize)
        .min(n);
    let active: Vec<usize> = sample(&mut rng, n, k).into_vec();
    let voice_count = (config.voice_fraction * k as f64).round() as usize;
    let voice_slots: Vec<usize> = sample(&mut rng, k, voice_count).into_vec();
    let mut is_active = vec![false; n];
    let mut is_voice = vec![false; n];
    for &i in &active {
        is_active[i] = true;
    }
    for &slot in &voice_slots {
        is_voice[active[slot]] = true;
    }
    let residents: Vec<User> = positions
        .iter()
        .enumerate()
        .map(|(id, &(x, y))| {
            let usage = if is_voice[id] { Usage::Voice } else { Usage::Data };
            let (ul, dl) = match usage {
                Usage::Voice => (config.voice_rate_ul, config.voice_rate_dl),
                Usage::Data => (config.data_rate_ul, config.data_rate_dl),
            };
            User {
                id,
                position: Point3::new(x, y, 0.0),
                usage,
                active: is_active[id],
                rate_req_ul: ul,
                rate_req_dl: dl,
                sar_ul: params.sar_for(usage),
            }
        })
        .collect();

    let ground_stations = even_grid(params, config.ground_stations, params.h_gs);
    let bs = Gnb {
        id: 0,
        kind: GnbKind::BaseStation,
        position: Point3::new(params.area_x / 2.0, params.area_y / 2.0, params.h_bs),
        capacity: params.w_bs_max.unwrap_or(n),
    };
    let mut gnbs = vec![bs];
    gnbs.extend(cell_gnbs(params, config, &ground_stations));
    let scenario = Scenario {
        params: params.clone(),
        residents,
        gnbs,
        ground_stations,
        architecture: config.architecture,
        seed,
    };
    scenario.validate()?;
    Ok(scenario)
}

pub fn scenario_to_json(scenario: &Scenario) -> String {
    serde_json::to_string_pretty(scenario).expect("scenarios serialise")
}

pub fn scenario_from_json(text: &str) -> Result<Scenario> {
    let s: Scenario = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    s.validate()?;
    Ok(s)
}
