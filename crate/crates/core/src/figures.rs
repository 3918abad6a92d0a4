//! Preset experiments that produce the data tables behind each plot.
//!
//! Every preset starts from a caller-supplied base configuration and only
//! overrides the knobs the plot varies or pins, so physical constants from a
//! config file carry through.

use crate::association::Objective;
use crate::deployment::DeploymentStrategy;
use crate::error::{Error, Result};
use crate::exposure::PowerPolicy;
use crate::harness::{
    compare_variants, AssociationStrategy, ExperimentConfig, ResultTable, Sweep, SweepKind, Variant,
};
use crate::params::Architecture;
use crate::positioning::PositioningStrategy;

pub const FIGURES: [&str; 10] = [
    "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9", "fig10", "fig-users", "fig-gs",
];

/// One curve: a labelled configuration and the sweep points it covers.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub variant: Variant,
    pub sweep: Sweep,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FigureSpec {
    pub name: String,
    pub description: &'static str,
    pub curves: Vec<Curve>,
}

impl FigureSpec {
    pub fn labels(&self) -> Vec<String> {
        self.curves.iter().map(|c| c.variant.label.clone()).collect()
    }

    /// Keeps only curves whose architecture is listed.
    pub fn restrict(&mut self, architectures: &[Architecture]) {
        self.curves
            .retain(|c| architectures.contains(&c.variant.config.scenario.architecture));
    }

    pub fn run(&self, n_iters: usize, master_seed: u64) -> Result<ResultTable> {
        let mut table = ResultTable::default();
        for curve in &self.curves {
            let part = compare_variants(
                std::slice::from_ref(&curve.variant),
                &curve.sweep,
                n_iters,
                master_seed,
            )?;
            table.rows.extend(part.rows);
        }
        Ok(table)
    }
}

fn sweep(kind: SweepKind, values: impl IntoIterator<Item = f64>) -> Sweep {
    Sweep {
        kind,
        values: values.into_iter().collect(),
    }
}

fn steps(from: usize, to: usize, by: usize) -> Vec<f64> {
    (from..=to).step_by(by).map(|v| v as f64).collect()
}

fn variant(label: impl Into<String>, config: ExperimentConfig) -> Variant {
    Variant {
        label: label.into(),
        config,
    }
}

fn with_arch(base: &ExperimentConfig, arch: Architecture) -> ExperimentConfig {
    let mut c = base.clone();
    c.scenario.architecture = arch;
    c
}

/// Two tUAVs holding two users each over nine ground stations.
pub fn small_scale(base: &ExperimentConfig) -> ExperimentConfig {
    let mut c = with_arch(base, Architecture::GreenTuav);
    c.scenario.cells = 2;
    c.scenario.ground_stations = 9;
    c.params.w_tuav_max = 2;
    c
}

/// Four cells over 36 ground stations, 240 residents and 60 active users.
pub fn dense_scale(base: &ExperimentConfig) -> ExperimentConfig {
    let mut c = base.clone();
    c.scenario.cells = 4;
    c.scenario.ground_stations = 36;
    c.scenario.mean_residents = 240.0;
    c.scenario.active_users = Some(60);
    c
}

/// Data-only users with a swept uplink rate.
pub fn rate_scale(base: &ExperimentConfig) -> ExperimentConfig {
    let mut c = dense_scale(base);
    c.scenario.voice_fraction = 0.0;
    c
}

/// Rate-maximising configuration under a per-user SAR cap.
pub fn dual_scale(base: &ExperimentConfig, sar_limit: f64) -> Result<ExperimentConfig> {
    let mut c = dense_scale(base);
    c.pipeline.objective = Objective::MaxRate;
    c.pipeline.policy = PowerPolicy::dual(sar_limit)?;
    Ok(c)
}

/// Sweep points spanning 2e-8 to 2e-1 W/kg in a 1-2-5 progression.
pub fn sar_limit_points() -> Vec<f64> {
    let mut v = Vec::new();
    for e in -8..=-1 {
        for m in [1.0, 2.0, 5.0] {
            let x: f64 = format!("{m}e{e}").parse().expect("literal");
            if (2e-8..=2e-1).contains(&x) {
                v.push(x);
            }
        }
    }
    v
}

const COMPARED: [Architecture; 3] = [
    Architecture::BsOnly,
    Architecture::FixedSc,
    Architecture::GreenTuav,
];

pub fn figure(name: &str, base: &ExperimentConfig) -> Result<FigureSpec> {
    let mut curves = Vec::new();
    let description = match name {
        "fig3" => {
            let small = small_scale(base);
            let k = sweep(SweepKind::ActiveUsers, steps(4, 12, 2));
            curves.push(Curve {
                variant: variant("BsOnly", with_arch(&small, Architecture::BsOnly)),
                sweep: k.clone(),
            });
            for (label, a) in [
                ("Random", AssociationStrategy::Random),
                ("Greedy", AssociationStrategy::Greedy),
                ("BruteForce", AssociationStrategy::BruteForce),
            ] {
                let mut c = small.clone();
                c.pipeline.strategy.association = a;
                curves.push(Curve { variant: variant(label, c), sweep: k.clone() });
            }
            "uplink exposure vs active users for association strategies"
        }
        "fig4" => {
            let small = small_scale(base);
            let k = sweep(SweepKind::ActiveUsers, steps(4, 20, 4));
            curves.push(Curve {
                variant: variant("BsOnly", with_arch(&small, Architecture::BsOnly)),
                sweep: k.clone(),
            });
            for (label, d) in [
                ("RandomGs", DeploymentStrategy::RandomGs),
                ("KMeans", DeploymentStrategy::KMeans),
                ("ShrinkRealign", DeploymentStrategy::ShrinkRealign),
                ("BruteForce", DeploymentStrategy::BruteForce),
            ] {
                let mut c = small.clone();
                c.pipeline.strategy.deployment = d;
                c.pipeline.strategy.positioning = PositioningStrategy::Center;
                curves.push(Curve { variant: variant(label, c), sweep: k.clone() });
            }
            "uplink exposure vs active users for tUAV-to-GS deployment strategies"
        }
        "fig5" => {
            let small = small_scale(base);
            let k = sweep(SweepKind::ActiveUsers, steps(4, 20, 4));
            curves.push(Curve {
                variant: variant("BsOnly", with_arch(&small, Architecture::BsOnly)),
                sweep: k.clone(),
            });
            for (label, p) in [
                ("Random", PositioningStrategy::Random),
                ("Center", PositioningStrategy::Center),
                ("Golden", PositioningStrategy::Golden),
                ("ShrinkRealign", PositioningStrategy::ShrinkRealign),
                ("Grid", PositioningStrategy::Grid),
            ] {
                let mut c = small.clone();
                c.pipeline.strategy.positioning = p;
                curves.push(Curve { variant: variant(label, c), sweep: k.clone() });
            }
            "uplink exposure vs active users for hover positioning strategies"
        }
        "fig6" => {
            let mut c = base.clone();
            c.scenario.cells = 4;
            c.scenario.ground_stations = 25;
            c.scenario.mean_residents = 120.0;
            let k = sweep(SweepKind::ActiveUsers, steps(6, 48, 6));
            for arch in Architecture::ALL {
                curves.push(Curve {
                    variant: variant(arch.name(), with_arch(&c, arch)),
                    sweep: k.clone(),
                });
            }
            "uplink and downlink exposure vs active users per architecture"
        }
        "fig7" | "fig8" => {
            let c = rate_scale(base);
            let r = sweep(SweepKind::RateReq, steps(10, 180, 10).into_iter().map(|v| v * 1e6));
            for arch in COMPARED {
                curves.push(Curve {
                    variant: variant(arch.name(), with_arch(&c, arch)),
                    sweep: r.clone(),
                });
            }
            if name == "fig7" {
                "satisfied-users ratio vs required uplink rate"
            } else {
                "uplink exposure vs required uplink rate"
            }
        }
        "fig9" => {
            let s = sweep(SweepKind::SarLimit, sar_limit_points());
            for alpha in [2.0, 3.5] {
                let mut c = dual_scale(base, 0.08)?;
                c.params.alpha_nlos = alpha;
                for arch in COMPARED {
                    curves.push(Curve {
                        variant: variant(format!("{}/alpha_nlos={alpha}", arch.name()), with_arch(&c, arch)),
                        sweep: s.clone(),
                    });
                }
            }
            "average uplink rate vs per-user SAR limit"
        }
        "fig10" => {
            let p = sweep(SweepKind::PMaxDbm, steps(20, 36, 2));
            for limit in [0.08, 0.0016] {
                let c = dual_scale(base, limit)?;
                for arch in COMPARED {
                    curves.push(Curve {
                        variant: variant(format!("{}/sar_limit={limit}", arch.name()), with_arch(&c, arch)),
                        sweep: p.clone(),
                    });
                }
            }
            "average uplink rate vs maximum transmit power"
        }
        "fig-users" => {
            let c = dense_scale(base);
            let k = sweep(SweepKind::ActiveUsers, steps(5, 90, 5));
            for arch in COMPARED {
                curves.push(Curve {
                    variant: variant(arch.name(), with_arch(&c, arch)),
                    sweep: k.clone(),
                });
            }
            "uplink exposure vs active users at 36 ground stations"
        }
        "fig-gs" => {
            let mut c = dense_scale(base);
            c.scenario.active_users = None;
            c.scenario.active_fraction = 0.4;
            let all_n = [2usize, 4, 8, 16, 32, 64, 128];
            for m in [2usize, 4, 8] {
                let mut cm = c.clone();
                cm.scenario.cells = m;
                let n = all_n.iter().filter(|&&n| n >= m).map(|&n| n as f64);
                curves.push(Curve {
                    variant: variant(format!("GreenTuav/M={m}"), with_arch(&cm, Architecture::GreenTuav)),
                    sweep: sweep(SweepKind::GroundStations, n),
                });
                curves.push(Curve {
                    variant: variant(format!("FixedSc/M={m}"), with_arch(&cm, Architecture::FixedSc)),
                    sweep: sweep(SweepKind::GroundStations, all_n.iter().map(|&n| n as f64)),
                });
            }
            "uplink exposure vs number of ground stations"
        }
        other => {
            return Err(Error::param(
                "figure",
                format!("unknown figure `{other}`; expected one of {}", FIGURES.join(", ")),
            ))
        }
    };
    Ok(FigureSpec {
        name: name.to_string(),
        description,
        curves,
    })
}
