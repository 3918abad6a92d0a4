//! Command-line front end.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::association::Objective;
use crate::error::{Error, Result};
use crate::figures::{figure, FigureSpec};
use crate::harness::{
    compare_architectures, evaluate, plan_links, rows_for, ExperimentConfig, Metric,
    MonteCarloRun, ResultTable, Sweep, SweepKind,
};
use crate::io::{emit_results, load_config, write_text, Sidecar};
use crate::params::Architecture;
use crate::scenario::{generate_scenario, scenario_from_json, scenario_to_json};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "EMFNET_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "emfnet",
    version,
    about = "Plan tethered-UAV small cells that minimise uplink EMF exposure"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ObjectiveArg {
    /// Minimise exposure.
    Emf,
    /// Maximise uplink rate.
    Rate,
}

impl From<ObjectiveArg> for Objective {
    fn from(o: ObjectiveArg) -> Self {
        match o {
            ObjectiveArg::Emf => Objective::MinExposure,
            ObjectiveArg::Rate => Objective::MaxRate,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML file with [params], [scenario] and [pipeline] sections.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Monte Carlo iterations per point.
    #[arg(long, value_name = "N")]
    pub iters: Option<usize>,
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    #[arg(long, value_enum)]
    pub objective: Option<ObjectiveArg>,
    /// Comma-separated architectures, e.g. BsOnly,GreenTuav.
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    pub arch: Option<Vec<String>>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the pipeline once per architecture, or on a saved scenario.
    Run {
        #[command(flatten)]
        common: Common,
        /// Scenario JSON written by `gen`.
        #[arg(long, value_name = "PATH")]
        scenario: Option<PathBuf>,
    },
    /// Compare architectures along one swept quantity.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// One of K, rate_req, sar_limit, p_max_dbm, N.
        #[arg(long, value_name = "KIND")]
        sweep: String,
        /// Comma-separated sweep values.
        #[arg(long, value_name = "LIST", value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// Compare the heuristics with exhaustive searches on small instances.
    OracleCheck {
        #[command(flatten)]
        common: Common,
    },
    /// Write a scenario file.
    Gen {
        #[command(flatten)]
        common: Common,
    },
    /// Emit plot-ready data for a figure.
    Figure {
        /// fig3 to fig10, fig-users or fig-gs.
        name: String,
        #[command(flatten)]
        common: Common,
    },
}

fn parse_archs(list: &[String]) -> Result<Vec<Architecture>> {
    list.iter()
        .map(|s| {
            Architecture::parse(s).ok_or_else(|| {
                let known: Vec<&str> = Architecture::ALL.iter().map(|a| a.name()).collect();
                Error::param("arch", format!("unknown architecture `{s}`; expected {}", known.join(", ")))
            })
        })
        .collect()
}

struct Setup {
    config: ExperimentConfig,
    archs: Option<Vec<Architecture>>,
}

fn setup(common: &Common) -> Result<Setup> {
    let mut config = match &common.config {
        Some(path) => load_config(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(o) = common.objective {
        config.pipeline.objective = o.into();
    }
    let archs = common.arch.as_deref().map(parse_archs).transpose()?;
    Ok(Setup { config, archs })
}

fn iters(common: &Common, default: usize) -> Result<usize> {
    match common.iters.unwrap_or(default) {
        0 => Err(Error::param("iters", "must be at least 1")),
        n => Ok(n),
    }
}

/// Worker count requested through [`THREADS_ENV`], if any.
pub fn parse_threads(raw: &str) -> Result<usize> {
    raw.trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::param(THREADS_ENV, format!("`{raw}` is not a positive integer")))
}

/// Sets up the global thread pool from [`THREADS_ENV`].
pub fn init_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n = parse_threads(&raw)?;
    // A pool that already exists (e.g. in tests) is kept.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn report_written(csv: &Path, json: &Path) {
    println!("wrote {} and {}", csv.display(), json.display());
}

pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { common, scenario } => run(&common, scenario.as_deref()),
        Command::Sweep {
            common,
            sweep,
            values,
        } => {
            let s = setup(&common)?;
            let kind = SweepKind::parse(&sweep).ok_or_else(|| {
                let known: Vec<&str> = SweepKind::ALL.iter().map(|k| k.name()).collect();
                Error::param("sweep", format!("unknown sweep `{sweep}`; expected {}", known.join(", ")))
            })?;
            let archs = s.archs.unwrap_or_else(|| vec![s.config.scenario.architecture]);
            let n = iters(&common, 100)?;
            let sweep = Sweep { kind, values };
            let table = compare_architectures(&s.config, &archs, &sweep, n, common.seed)?;
            let labels = archs.iter().map(|a| a.name().to_string()).collect();
            let sidecar = Sidecar::new("sweep", &s.config, labels, sweep, n, common.seed);
            let (c, j) = emit_results(&table, &sidecar, &common.out, "sweep")?;
            report_written(&c, &j);
            Ok(())
        }
        Command::OracleCheck { common } => oracle_check(&common),
        Command::Gen { common } => {
            let s = setup(&common)?;
            let mut config = s.config;
            if let Some(archs) = &s.archs {
                let [arch] = archs.as_slice() else {
                    return Err(Error::param("arch", "gen takes exactly one architecture"));
                };
                config.scenario.architecture = *arch;
            }
            let scenario = generate_scenario(&config.params, &config.scenario, common.seed)?;
            let path = common.out.join(format!("scenario_{}.json", common.seed));
            write_text(&path, &(scenario_to_json(&scenario) + "\n"))?;
            println!("wrote {}", path.display());
            Ok(())
        }
        Command::Figure { name, common } => {
            let s = setup(&common)?;
            let mut spec = figure(&name, &s.config)?;
            if let Some(archs) = &s.archs {
                spec.restrict(archs);
            }
            let n = iters(&common, 100)?;
            let table = spec.run(n, common.seed)?;
            emit_figure(&spec, &s.config, &table, &common, n, &name)
        }
    }
}

fn emit_figure(
    spec: &FigureSpec,
    config: &ExperimentConfig,
    table: &ResultTable,
    common: &Common,
    n: usize,
    stem: &str,
) -> Result<()> {
    let sweep = spec
        .curves
        .first()
        .map(|c| c.sweep.clone())
        .unwrap_or_else(Sweep::none);
    let command = format!("figure {}: {}", spec.name, spec.description);
    let sidecar = Sidecar::new(&command, config, spec.labels(), sweep, n, common.seed);
    let (c, j) = emit_results(table, &sidecar, &common.out, stem)?;
    report_written(&c, &j);
    Ok(())
}

fn run(common: &Common, scenario_path: Option<&Path>) -> Result<()> {
    let s = setup(common)?;
    if let Some(path) = scenario_path {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut scenario = scenario_from_json(&text)?;
        if let Some(archs) = &s.archs {
            let [arch] = archs.as_slice() else {
                return Err(Error::param("arch", "a saved scenario runs one architecture"));
            };
            scenario.architecture = *arch;
        }
        let plan = plan_links(&scenario, &s.config.pipeline)?;
        let report = evaluate(&scenario, &plan, &s.config.pipeline.policy)?;
        let label = scenario.architecture.name();
        let run = MonteCarloRun {
            seeds: vec![scenario.seed],
            reports: vec![report],
        };
        let table = ResultTable {
            rows: rows_for(label, SweepKind::None, 0.0, &run),
        };
        let mut config = s.config.clone();
        config.scenario.architecture = scenario.architecture;
        let sidecar = Sidecar::new("run", &config, vec![label.into()], Sweep::none(), 1, scenario.seed);
        let (c, j) = emit_results(&table, &sidecar, &common.out, "run")?;
        let report_path = common.out.join("report.json");
        let json = serde_json::to_string_pretty(&run.reports[0]).expect("reports serialise");
        write_text(&report_path, &(json + "\n"))?;
        report_written(&c, &j);
        println!("ei_ul = {:.8e} W/kg", run.reports[0].ei_ul);
        return Ok(());
    }
    let archs = s.archs.unwrap_or_else(|| vec![s.config.scenario.architecture]);
    let n = iters(common, 1)?;
    let table = compare_architectures(&s.config, &archs, &Sweep::none(), n, common.seed)?;
    for arch in &archs {
        if let Some(r) = table.find(arch.name(), 0.0, Metric::EiUl) {
            println!("{:<12} ei_ul mean {:.8e} W/kg over {} runs", arch.name(), r.mean, r.n_iters);
        }
    }
    let labels = archs.iter().map(|a| a.name().to_string()).collect();
    let sidecar = Sidecar::new("run", &s.config, labels, Sweep::none(), n, common.seed);
    let (c, j) = emit_results(&table, &sidecar, &common.out, "run")?;
    report_written(&c, &j);
    Ok(())
}

/// Ratio of each heuristic's mean metric to the exhaustive reference.
fn oracle_check(common: &Common) -> Result<()> {
    let s = setup(common)?;
    let n = iters(common, 50)?;
    let mut table = ResultTable::default();
    let mut labels = Vec::new();
    let checks = [
        ("fig3", "BruteForce", &["Greedy", "Random"][..]),
        ("fig4", "BruteForce", &["KMeans", "ShrinkRealign", "RandomGs"][..]),
        ("fig5", "Grid", &["ShrinkRealign", "Golden", "Center", "Random"][..]),
    ];
    for (name, reference, heuristics) in checks {
        let mut spec = figure(name, &s.config)?;
        spec.curves.retain(|c| c.variant.label != "BsOnly");
        for curve in &mut spec.curves {
            curve.sweep.values = vec![4.0, 6.0, 8.0];
            curve.variant.label = format!("{name}/{}", curve.variant.label);
        }
        labels.extend(spec.labels());
        let part = spec.run(n, common.seed)?;
        let mean = |label: &str| -> f64 {
            let series = part.series(&format!("{name}/{label}"), Metric::EiUl);
            series.iter().map(|(_, m)| m).sum::<f64>() / series.len() as f64
        };
        let base = mean(reference);
        for h in heuristics {
            let gap = (mean(h) - base) / base;
            println!("{name}: {h:<14} {:+.2}% vs {reference}", 100.0 * gap);
        }
        table.rows.extend(part.rows);
    }
    let sweep = Sweep {
        kind: SweepKind::ActiveUsers,
        values: vec![4.0, 6.0, 8.0],
    };
    let sidecar = Sidecar::new("oracle-check", &s.config, labels, sweep, n, common.seed);
    let (c, j) = emit_results(&table, &sidecar, &common.out, "oracle")?;
    report_written(&c, &j);
    Ok(())
}
