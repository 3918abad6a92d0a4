//! Pipeline orchestration and Monte Carlo experiments.
//!
//! A single run deploys the cells, fine-tunes each tUAV inside its hovering
//! area, re-associates the users and then evaluates exposure and rates. The
//! Monte Carlo layer repeats that over independently seeded scenarios and
//! reduces the reports in a fixed order so results are bitwise stable
//! regardless of the worker count.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::association::{
    random_assign, Association, AssociationProblem, CostModel, Objective, ENUMERATION_BUDGET,
};
use crate::channel::{path_loss, ul_rate};
use crate::deployment::{deploy, DeploymentStrategy};
use crate::error::{Error, Result};
use crate::exposure::{
    allocate_power, exposure_index_dl, exposure_index_ul, satisfied_ratio, PowerPolicy,
};
use crate::geometry::{from_spherical, in_hover, Point3, TuavPlacement};
use crate::params::{dbm_to_watts, Architecture, EvaluationReport, Scenario, SimParams, User};
use crate::positioning::{position, HoverProblem, PositioningStrategy};
use crate::scenario::{generate_scenario, stream_rng, ScenarioConfig, PIPELINE_STREAM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AssociationStrategy {
    Greedy,
    BruteForce,
    Random,
}

/// Solver choice for each pipeline stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Strategy {
    pub association: AssociationStrategy,
    pub deployment: DeploymentStrategy,
    pub positioning: PositioningStrategy,
}

impl Default for Strategy {
    fn default() -> Self {
        Self {
            association: AssociationStrategy::Greedy,
            deployment: DeploymentStrategy::KMeans,
            positioning: PositioningStrategy::ShrinkRealign,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub strategy: Strategy,
    pub objective: Objective,
    pub policy: PowerPolicy,
    /// Cap on exhaustive searches, candidates.
    pub enumeration_budget: f64,
    /// Lattice spacing of the hover grid oracle, m.
    pub grid_resolution: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::default(),
            objective: Objective::MinExposure,
            policy: PowerPolicy::PrimalRateTarget,
            enumeration_budget: ENUMERATION_BUDGET,
            grid_resolution: 5.0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.enumeration_budget >= 1.0) {
            return Err(Error::param("enumeration_budget", "must be at least 1"));
        }
        if !(self.grid_resolution.is_finite() && self.grid_resolution > 0.0) {
            return Err(Error::param("grid_resolution", "must be finite and > 0"));
        }
        if let Some(limit) = self.policy.sar_limit() {
            PowerPolicy::dual(limit)?;
        }
        Ok(())
    }
}

/// Everything needed to reproduce an experiment.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub params: SimParams,
    pub scenario: ScenarioConfig,
    pub pipeline: PipelineConfig,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.scenario.validate()?;
        self.pipeline.validate()
    }
}

/// Which gNB serves each link, and where the gNBs are.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkPlan {
    pub ul_serving: Vec<usize>,
    pub dl_serving: Vec<usize>,
    /// BS first.
    pub gnb_positions: Vec<Point3>,
    pub capacities: Vec<usize>,
    pub placements: Vec<TuavPlacement>,
}

struct CellLayout {
    positions: Vec<Point3>,
    placements: Vec<TuavPlacement>,
    assoc: Association,
}

pub fn run_pipeline(scenario: &Scenario, options: &PipelineConfig) -> Result<EvaluationReport> {
    let plan = plan_links(scenario, options)?;
    evaluate(scenario, &plan, &options.policy)
}

/// Runs deployment, positioning and association without evaluating.
pub fn plan_links(scenario: &Scenario, options: &PipelineConfig) -> Result<LinkPlan> {
    scenario.validate()?;
    options.validate()?;
    let users = scenario.active_users();
    let k = users.len();
    let bs = scenario.bs().position;
    let capacities = scenario.capacities();
    let mut rng = stream_rng(scenario.seed, PIPELINE_STREAM);
    let uplink = CostModel::uplink(options.objective, options.policy);

    let (ul_serving, dl_serving, cells) = match scenario.architecture {
        Architecture::BsOnly => (vec![0; k], vec![0; k], None),
        Architecture::SpecialTuav => {
            let cells = optimise_cells(scenario, &users, CostModel::downlink(), options, &mut rng)?;
            (vec![0; k], cells.assoc.serving.clone(), Some(cells))
        }
        arch => {
            let cells = optimise_cells(scenario, &users, uplink, options, &mut rng)?;
            let ul = cells.assoc.serving.clone();
            let dl = if arch.cells_serve_dl() { ul.clone() } else { vec![0; k] };
            (ul, dl, Some(cells))
        }
    };

    let (gnb_positions, placements) = match cells {
        Some(c) => {
            let mut all = vec![bs];
            all.extend(c.positions);
            (all, c.placements)
        }
        None => (vec![bs], Vec::new()),
    };
    let capacities = if gnb_positions.len() == 1 {
        capacities[..1].to_vec()
    } else {
        capacities
    };
    Ok(LinkPlan {
        ul_serving,
        dl_serving,
        gnb_positions,
        capacities,
        placements,
    })
}

fn optimise_cells(
    scenario: &Scenario,
    users: &[User],
    model: CostModel,
    options: &PipelineConfig,
    rng: &mut ChaCha8Rng,
) -> Result<CellLayout> {
    let params = &scenario.params;
    let strategy = options.strategy;
    let budget = options.enumeration_budget;
    let problem = AssociationProblem {
        users,
        bs: scenario.bs().position,
        capacity: scenario.capacities(),
        model,
        params,
    };

    if scenario.architecture == Architecture::FixedSc {
        let positions: Vec<Point3> = scenario.gnbs[1..].iter().map(|g| g.position).collect();
        let assoc = final_association(&problem, &positions, None, strategy, budget, rng)?;
        return Ok(CellLayout {
            positions,
            placements: Vec::new(),
            assoc,
        });
    }

    let deployment = deploy(
        strategy.deployment,
        &problem,
        &scenario.ground_stations,
        budget,
        rng,
    )?;
    let mut positions = deployment.positions.clone();
    let mut placements = Vec::new();
    if let Some(gs_assignment) = &deployment.gs_assignment {
        for (m, &gs_index) in gs_assignment.iter().enumerate() {
            let hover = HoverProblem {
                gs: scenario.ground_stations[gs_index],
                gs_index,
                start: deployment.positions[m],
                users: deployment
                    .assoc
                    .users_of(m + 1)
                    .into_iter()
                    .map(|i| users[i].clone())
                    .collect(),
                model,
                params,
            };
            let sol = position(
                strategy.positioning,
                &hover,
                options.grid_resolution,
                budget,
                rng,
            )?;
            positions[m] = sol.position;
            placements.push(sol.placement);
        }
    }
    let assoc = final_association(
        &problem,
        &positions,
        Some(&deployment.assoc.serving),
        strategy,
        budget,
        rng,
    )?;
    Ok(CellLayout {
        positions,
        placements,
        assoc,
    })
}

/// Associates users with the final cell positions. A fresh greedy pass is
/// kept only when it does not lose against the association it replaces.
fn final_association(
    problem: &AssociationProblem,
    cells: &[Point3],
    previous: Option<&[usize]>,
    strategy: Strategy,
    budget: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Association> {
    match strategy.association {
        AssociationStrategy::Greedy => {
            let fresh = problem.associate(cells)?;
            let Some(previous) = previous else {
                return Ok(fresh);
            };
            let frozen = Association::from_serving(
                previous.to_vec(),
                &problem.capacity,
                fresh.costs.clone(),
            );
            Ok(if fresh.objective() <= frozen.objective() {
                fresh
            } else {
                frozen
            })
        }
        AssociationStrategy::BruteForce => problem.brute_force(cells, budget),
        AssociationStrategy::Random => {
            let mut all = vec![problem.bs];
            all.extend_from_slice(cells);
            let costs = problem.model.matrix(problem.users, &all, problem.params)?;
            random_assign(costs, &problem.capacity, rng)
        }
    }
}

/// Allocates power and computes exposure and rates for a given plan.
pub fn evaluate(
    scenario: &Scenario,
    plan: &LinkPlan,
    policy: &PowerPolicy,
) -> Result<EvaluationReport> {
    let params = &scenario.params;
    let users = scenario.active_users();
    let mut powers = Vec::with_capacity(users.len());
    let mut rates = Vec::with_capacity(users.len());
    for (u, &j) in users.iter().zip(&plan.ul_serving) {
        let loss = path_loss(&u.position, &plan.gnb_positions[j], params)?;
        let p = allocate_power(u, loss, policy, params);
        rates.push(ul_rate(p, loss, params));
        powers.push(p);
    }
    let required: Vec<f64> = users.iter().map(|u| u.rate_req_ul).collect();
    let satisfied = if users.is_empty() {
        1.0
    } else {
        satisfied_ratio(&rates, &required)?
    };
    Ok(EvaluationReport {
        ei_ul: exposure_index_ul(&users, &powers),
        ei_dl: exposure_index_dl(
            &scenario.residents,
            &users,
            &plan.dl_serving,
            &plan.gnb_positions,
            params,
        )?,
        sum_rate_ul: rates.iter().sum(),
        per_user_power: powers,
        per_user_rate: rates,
        per_user_required: required,
        satisfied_ratio: satisfied,
        ul_serving: plan.ul_serving.clone(),
        dl_serving: plan.dl_serving.clone(),
        gnb_positions: plan.gnb_positions.clone(),
        capacities: plan.capacities.clone(),
        placements: plan.placements.clone(),
    })
}

/// Lists every hard-constraint violation in a report.
pub fn check_constraints(
    scenario: &Scenario,
    report: &EvaluationReport,
    policy: &PowerPolicy,
) -> Vec<String> {
    let params = &scenario.params;
    let users = scenario.active_users();
    let mut out = Vec::new();
    let gnbs = report.gnb_positions.len();
    for (name, serving) in [("UL", &report.ul_serving), ("DL", &report.dl_serving)] {
        if serving.len() != users.len() {
            out.push(format!("{name}: {} servers for {} users", serving.len(), users.len()));
            continue;
        }
        let mut load = vec![0usize; gnbs];
        for (k, &j) in serving.iter().enumerate() {
            match load.get_mut(j) {
                Some(l) => *l += 1,
                None => out.push(format!("{name}: user {k} served by missing gNB {j}")),
            }
        }
        for (j, &l) in load.iter().enumerate() {
            let cap = report.capacities.get(j).copied().unwrap_or(0);
            if l > cap {
                out.push(format!("{name}: gNB {j} carries {l} users, capacity {cap}"));
            }
        }
    }
    if report.capacities.len() != gnbs {
        out.push(format!("{} capacities for {gnbs} gNBs", report.capacities.len()));
    }
    if !report.placements.is_empty() && report.placements.len() + 1 != gnbs {
        out.push(format!("{} placements for {} cells", report.placements.len(), gnbs - 1));
    }
    for (m, placement) in report.placements.iter().enumerate() {
        let Some(&gs) = scenario.ground_stations.get(placement.gs_index) else {
            out.push(format!("tUAV {m} tethered to missing GS {}", placement.gs_index));
            continue;
        };
        let p = report.gnb_positions[m + 1];
        if !placement.is_feasible(params) || !in_hover(gs, p, params) {
            out.push(format!("tUAV {m} at {p:?} is outside its hovering area"));
        }
        let q = from_spherical(gs, placement);
        if q.distance(&p) > 1e-6 {
            out.push(format!("tUAV {m} position disagrees with its tether placement"));
        }
    }
    let mut used = vec![false; scenario.ground_stations.len()];
    for placement in &report.placements {
        if let Some(u) = used.get_mut(placement.gs_index) {
            if *u {
                out.push(format!("GS {} hosts two tUAVs", placement.gs_index));
            }
            *u = true;
        }
    }
    for (k, (u, &p)) in users.iter().zip(&report.per_user_power).enumerate() {
        if !(0.0..=params.p_max).contains(&p) {
            out.push(format!("user {k} transmits {p} W outside [0, p_max]"));
        }
        if let Some(limit) = policy.sar_limit() {
            if u.sar_ul * p > limit {
                out.push(format!("user {k} exposure {} exceeds {limit}", u.sar_ul * p));
            }
        }
    }
    out
}

/// Scalar quantities aggregated across Monte Carlo iterations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    EiUl,
    EiDl,
    EiTotal,
    SatisfiedRatio,
    SumRateUl,
    MeanRateUl,
    MeanPowerUl,
}

impl Metric {
    pub const ALL: [Metric; 7] = [
        Metric::EiUl,
        Metric::EiDl,
        Metric::EiTotal,
        Metric::SatisfiedRatio,
        Metric::SumRateUl,
        Metric::MeanRateUl,
        Metric::MeanPowerUl,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::EiUl => "ei_ul",
            Metric::EiDl => "ei_dl",
            Metric::EiTotal => "ei_total",
            Metric::SatisfiedRatio => "satisfied_ratio",
            Metric::SumRateUl => "sum_rate_ul",
            Metric::MeanRateUl => "mean_rate_ul",
            Metric::MeanPowerUl => "mean_power_ul",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == s)
    }

    pub fn value(self, report: &EvaluationReport) -> f64 {
        match self {
            Metric::EiUl => report.ei_ul,
            Metric::EiDl => report.ei_dl,
            Metric::EiTotal => report.ei_total(),
            Metric::SatisfiedRatio => report.satisfied_ratio,
            Metric::SumRateUl => report.sum_rate_ul,
            Metric::MeanRateUl => report.mean_rate_ul(),
            Metric::MeanPowerUl => report.mean_power_ul(),
        }
    }
}

/// Summary statistics of one metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    /// Sample standard deviation; zero for a single sample.
    pub std: f64,
    pub p05: f64,
    pub p95: f64,
    pub n: usize,
}

/// Percentile by linear interpolation between order statistics.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn aggregate(samples: &[f64]) -> Aggregate {
    let n = samples.len();
    assert!(n > 0, "aggregate needs at least one sample");
    let mean = samples.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        let ss: f64 = samples.iter().map(|x| (x - mean).powi(2)).sum();
        (ss / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    Aggregate {
        mean,
        std,
        p05: percentile(&sorted, 0.05),
        p95: percentile(&sorted, 0.95),
        n,
    }
}

/// Seed of iteration `i`: the first output of stream `i` of a generator
/// keyed by the master seed.
pub fn iteration_seed(master: u64, i: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(i);
    rng.next_u64()
}

pub fn iteration_seeds(master: u64, n: usize) -> Vec<u64> {
    (0..n as u64).map(|i| iteration_seed(master, i)).collect()
}

#[derive(Debug, Clone)]
pub struct MonteCarloRun {
    pub seeds: Vec<u64>,
    /// One report per seed, in seed order.
    pub reports: Vec<EvaluationReport>,
}

impl MonteCarloRun {
    pub fn samples(&self, metric: Metric) -> Vec<f64> {
        self.reports.iter().map(|r| metric.value(r)).collect()
    }

    pub fn aggregate(&self, metric: Metric) -> Aggregate {
        aggregate(&self.samples(metric))
    }
}

pub fn monte_carlo(config: &ExperimentConfig, n_iters: usize, master_seed: u64) -> Result<MonteCarloRun> {
    if n_iters == 0 {
        return Err(Error::param("iters", "must be at least 1"));
    }
    config.validate()?;
    let seeds = iteration_seeds(master_seed, n_iters);
    let reports = seeds
        .par_iter()
        .map(|&seed| {
            let scenario = generate_scenario(&config.params, &config.scenario, seed)?;
            run_pipeline(&scenario, &config.pipeline)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MonteCarloRun { seeds, reports })
}

/// Quantity varied along a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SweepKind {
    /// No variation; the single value is ignored.
    None,
    ActiveUsers,
    /// Uplink rate requirement of every user, bps.
    RateReq,
    /// Per-user SAR cap of the dual policy, W/kg.
    SarLimit,
    /// Maximum user transmit power, dBm.
    PMaxDbm,
    GroundStations,
}

impl SweepKind {
    pub const ALL: [SweepKind; 6] = [
        SweepKind::None,
        SweepKind::ActiveUsers,
        SweepKind::RateReq,
        SweepKind::SarLimit,
        SweepKind::PMaxDbm,
        SweepKind::GroundStations,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepKind::None => "none",
            SweepKind::ActiveUsers => "K",
            SweepKind::RateReq => "rate_req",
            SweepKind::SarLimit => "sar_limit",
            SweepKind::PMaxDbm => "p_max_dbm",
            SweepKind::GroundStations => "N",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name().eq_ignore_ascii_case(s))
    }

    pub fn apply(self, config: &mut ExperimentConfig, value: f64) -> Result<()> {
        let count = |key: &str| {
            if value.is_finite() && value >= 0.0 && value.fract() == 0.0 {
                Ok(value as usize)
            } else {
                Err(Error::param(key, format!("{value} is not a count")))
            }
        };
        match self {
            SweepKind::None => {}
            SweepKind::ActiveUsers => config.scenario.active_users = Some(count("active_users")?),
            SweepKind::RateReq => {
                config.scenario.voice_rate_ul = value;
                config.scenario.data_rate_ul = value;
            }
            SweepKind::SarLimit => config.pipeline.policy = PowerPolicy::dual(value)?,
            SweepKind::PMaxDbm => config.params.p_max = dbm_to_watts(value),
            SweepKind::GroundStations => config.scenario.ground_stations = count("ground_stations")?,
        }
        config.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub kind: SweepKind,
    pub values: Vec<f64>,
}

impl Sweep {
    pub fn none() -> Self {
        Self {
            kind: SweepKind::None,
            values: vec![0.0],
        }
    }
}

/// One line of a result table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    /// Architecture or variant label.
    pub architecture: String,
    pub sweep_name: String,
    pub sweep_value: f64,
    pub metric: String,
    pub mean: f64,
    pub std: f64,
    pub p05: f64,
    pub p95: f64,
    pub n_iters: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn find(&self, label: &str, sweep_value: f64, metric: Metric) -> Option<&ResultRow> {
        self.rows.iter().find(|r| {
            r.architecture == label && r.sweep_value == sweep_value && r.metric == metric.name()
        })
    }

    /// Means of one metric along the sweep, in table order.
    pub fn series(&self, label: &str, metric: Metric) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .filter(|r| r.architecture == label && r.metric == metric.name())
            .map(|r| (r.sweep_value, r.mean))
            .collect()
    }
}

/// A labelled configuration taking part in a comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct Variant {
    pub label: String,
    pub config: ExperimentConfig,
}

pub fn rows_for(label: &str, sweep: SweepKind, value: f64, run: &MonteCarloRun) -> Vec<ResultRow> {
    Metric::ALL
        .into_iter()
        .map(|metric| {
            let a = run.aggregate(metric);
            ResultRow {
                architecture: label.to_string(),
                sweep_name: sweep.name().to_string(),
                sweep_value: value,
                metric: metric.name().to_string(),
                mean: a.mean,
                std: a.std,
                p05: a.p05,
                p95: a.p95,
                n_iters: a.n,
            }
        })
        .collect()
}

/// Monte Carlo grid over variants and sweep values, sharing seeds so every
/// variant sees the same residents at a given sweep point.
pub fn compare_variants(
    variants: &[Variant],
    sweep: &Sweep,
    n_iters: usize,
    master_seed: u64,
) -> Result<ResultTable> {
    let mut table = ResultTable::default();
    for variant in variants {
        for &value in &sweep.values {
            let mut config = variant.config.clone();
            sweep.kind.apply(&mut config, value)?;
            let run = monte_carlo(&config, n_iters, master_seed)?;
            table.rows.extend(rows_for(&variant.label, sweep.kind, value, &run));
        }
    }
    Ok(table)
}

pub fn compare_architectures(
    config: &ExperimentConfig,
    architectures: &[Architecture],
    sweep: &Sweep,
    n_iters: usize,
    master_seed: u64,
) -> Result<ResultTable> {
    let variants: Vec<Variant> = architectures
        .iter()
        .map(|&arch| {
            let mut c = config.clone();
            c.scenario.architecture = arch;
            Variant {
                label: arch.name().to_string(),
                config: c,
            }
        })
        .collect();
    compare_variants(&variants, sweep, n_iters, master_seed)
}
