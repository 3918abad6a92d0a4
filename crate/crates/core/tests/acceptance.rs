//! End-to-end acceptance checks. Each test prints one PASS/FAIL line on
//! stdout (bypassing the test harness capture) and then asserts.

use std::io::Write;
use std::process::Command;
use std::time::{Duration, Instant};

use emfnet::association::Objective;
use emfnet::channel::{free_space_prefactor, los_probability_at, required_power, ul_rate};
use emfnet::deployment::DeploymentStrategy;
use emfnet::exposure::{allocate_power, PowerPolicy};
use emfnet::figures::{dense_scale, figure, rate_scale, small_scale};
use emfnet::geometry::Point3;
use emfnet::harness::{
    check_constraints, evaluate, iteration_seeds, monte_carlo, plan_links, run_pipeline,
    AssociationStrategy, ExperimentConfig, Metric, SweepKind,
};
use emfnet::params::{dbm_to_watts, Architecture, SimParams, Usage, User};
use emfnet::positioning::PositioningStrategy;
use emfnet::scenario::generate_scenario;

const MASTER: u64 = 2024;

fn verdict(criterion: u32, ok: bool, detail: &str) {
    let line = format!(
        "criterion {criterion:>2}: {} | {detail}\n",
        if ok { "PASS" } else { "FAIL" }
    );
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Mean uplink EI over the small-scale family: 40 instances for each
/// K in 4..=8, giving 200 instances.
fn small_family_mean(config: &ExperimentConfig) -> f64 {
    let mut all = Vec::new();
    for k in 4..=8u64 {
        let mut c = config.clone();
        SweepKind::ActiveUsers.apply(&mut c, k as f64).unwrap();
        all.extend(monte_carlo(&c, 40, MASTER + k).unwrap().samples(Metric::EiUl));
    }
    assert_eq!(all.len(), 200);
    mean(&all)
}

fn rel_gap(a: f64, reference: f64) -> f64 {
    (a - reference) / reference
}

#[test]
fn criterion_01_greedy_association_matches_brute_force() {
    let start = Instant::now();
    let base = small_scale(&ExperimentConfig::default());
    let mut greedy = base.clone();
    greedy.pipeline.strategy.association = AssociationStrategy::Greedy;
    let mut exact = base.clone();
    exact.pipeline.strategy.association = AssociationStrategy::BruteForce;
    let g = small_family_mean(&greedy);
    let b = small_family_mean(&exact);
    let elapsed = start.elapsed();
    let gap = rel_gap(g, b);
    let ok = gap.abs() <= 0.02 && elapsed < Duration::from_secs(60);
    verdict(
        1,
        ok,
        &format!("greedy {g:.5e} vs brute force {b:.5e} W/kg, gap {:+.3}%, {elapsed:.1?}", 100.0 * gap),
    );
    assert!(ok);
}

#[test]
fn criterion_02_deployment_heuristics_beat_random_and_track_brute_force() {
    let start = Instant::now();
    let base = small_scale(&ExperimentConfig::default());
    let run = |d: DeploymentStrategy| {
        let mut c = base.clone();
        c.pipeline.strategy.deployment = d;
        c.pipeline.strategy.positioning = PositioningStrategy::Center;
        small_family_mean(&c)
    };
    let km = run(DeploymentStrategy::KMeans);
    let sr = run(DeploymentStrategy::ShrinkRealign);
    let rnd = run(DeploymentStrategy::RandomGs);
    let bf = run(DeploymentStrategy::BruteForce);
    let elapsed = start.elapsed();
    let km_gain = -rel_gap(km, rnd);
    let sr_gain = -rel_gap(sr, rnd);
    let km_sr = (km - sr).abs() / km.min(sr);
    let km_bf = rel_gap(km, bf);
    let sr_bf = rel_gap(sr, bf);
    let ok = km_gain >= 0.10
        && sr_gain >= 0.10
        && km_sr <= 0.10
        && km_bf.abs() <= 0.10
        && sr_bf.abs() <= 0.10
        && elapsed < Duration::from_secs(300);
    verdict(
        2,
        ok,
        &format!(
            "gain vs random: kmeans {:.1}%, sr2d {:.1}%; kmeans~sr2d {:.1}%; vs brute force: kmeans {:+.1}%, sr2d {:+.1}%; {elapsed:.1?}",
            100.0 * km_gain,
            100.0 * sr_gain,
            100.0 * km_sr,
            100.0 * km_bf,
            100.0 * sr_bf
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_03_positioning_ordering() {
    let base = small_scale(&ExperimentConfig::default());
    let run = |p: PositioningStrategy| {
        let mut c = base.clone();
        c.pipeline.strategy.positioning = p;
        small_family_mean(&c)
    };
    let sr = run(PositioningStrategy::ShrinkRealign);
    let golden = run(PositioningStrategy::Golden);
    let center = run(PositioningStrategy::Center);
    let ok = sr <= golden && golden <= center;
    verdict(
        3,
        ok,
        &format!(
            "sr3d {sr:.5e} <= golden {golden:.5e} ({:+.3}%) <= center {center:.5e} ({:+.2}%)",
            100.0 * rel_gap(golden, sr),
            100.0 * rel_gap(center, golden)
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_04_uplink_dominates_downlink() {
    let base = ExperimentConfig::default();
    assert!(base.params.sar_dl_is_placeholder());
    let spec = figure("fig6", &base).unwrap();
    let table = spec.run(200, MASTER).unwrap();
    let mut worst = (f64::INFINITY, String::new());
    let mut best = (0.0f64, String::new());
    for label in spec.labels() {
        let ul = table.series(&label, Metric::EiUl);
        let dl = table.series(&label, Metric::EiDl);
        for ((k, u), (_, d)) in ul.iter().zip(&dl) {
            let ratio = u / d;
            if ratio < worst.0 {
                worst = (ratio, format!("{label} K={k}"));
            }
            if ratio > best.0 {
                best = (ratio, format!("{label} K={k}"));
            }
        }
    }
    let ok = worst.0 >= 1e4 && best.0 <= 1e8;
    verdict(
        4,
        ok,
        &format!(
            "EI_UL/EI_DL spans {:.3e} ({}) to {:.3e} ({}); required within [1e4, 1e8]",
            worst.0, worst.1, best.0, best.1
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_05_architecture_ordering() {
    let mut c = dense_scale(&ExperimentConfig::default());
    c.scenario.active_users = Some(50);
    let ei = |arch: Architecture| {
        let mut a = c.clone();
        a.scenario.architecture = arch;
        monte_carlo(&a, 500, MASTER).unwrap().aggregate(Metric::EiUl).mean
    };
    let green = ei(Architecture::GreenTuav);
    let fixed = ei(Architecture::FixedSc);
    let bs = ei(Architecture::BsOnly);
    let vs_fixed = -rel_gap(green, fixed);
    let vs_bs = -rel_gap(green, bs);
    let ok = green < fixed && fixed < bs && vs_fixed >= 0.15 && vs_bs >= 0.40;
    verdict(
        5,
        ok,
        &format!(
            "green {green:.4e} < fixed {fixed:.4e} < bs {bs:.4e}; green below fixed by {:.1}%, below bs by {:.1}%",
            100.0 * vs_fixed,
            100.0 * vs_bs
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_06_satisfied_ratio_gain() {
    let mut c = rate_scale(&ExperimentConfig::default());
    SweepKind::RateReq.apply(&mut c, 100e6).unwrap();
    let ratio = |arch: Architecture| {
        let mut a = c.clone();
        a.scenario.architecture = arch;
        monte_carlo(&a, 500, MASTER)
            .unwrap()
            .aggregate(Metric::SatisfiedRatio)
            .mean
    };
    let green = ratio(Architecture::GreenTuav);
    let bs = ratio(Architecture::BsOnly);
    let ok = green >= 2.5 * bs;
    verdict(
        6,
        ok,
        &format!("satisfied ratio green {green:.4} vs bs {bs:.4} ({:.1}x)", green / bs),
    );
    assert!(ok);
}

#[test]
fn criterion_07_exposure_saturates_in_rate() {
    let base = ExperimentConfig::default();
    let spec = figure("fig8", &base).unwrap();

    // Exact per-seed monotonicity with topology and association frozen.
    let mut per_seed_violations = 0;
    for curve in &spec.curves {
        let mut c = curve.variant.config.clone();
        SweepKind::RateReq.apply(&mut c, 50e6).unwrap();
        for seed in iteration_seeds(MASTER, 30) {
            let scenario = generate_scenario(&c.params, &c.scenario, seed).unwrap();
            let plan = plan_links(&scenario, &c.pipeline).unwrap();
            let mut last = 0.0;
            for &r in &curve.sweep.values {
                let mut s = scenario.clone();
                for u in s.residents.iter_mut() {
                    u.rate_req_ul = r;
                }
                let ei = evaluate(&s, &plan, &c.pipeline.policy).unwrap().ei_ul;
                if ei < last {
                    per_seed_violations += 1;
                }
                last = ei;
            }
        }
    }

    let table = spec.run(200, MASTER).unwrap();
    let mut detail = Vec::new();
    let mut ok = per_seed_violations == 0;
    for label in spec.labels() {
        let s: Vec<f64> = table.series(&label, Metric::EiUl).iter().map(|p| p.1).collect();
        let monotone = s.windows(2).all(|w| w[1] >= w[0]);
        let tail = &s[s.len() - 3..];
        let lo = tail.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = tail.iter().copied().fold(0.0, f64::max);
        let spread = (hi - lo) / lo;
        ok &= monotone && spread < 0.02;
        detail.push(format!("{label}: monotone={monotone} tail spread {:.3}%", 100.0 * spread));
    }
    verdict(
        7,
        ok,
        &format!("per-seed violations {per_seed_violations}; {}", detail.join("; ")),
    );
    assert!(ok);
}

#[test]
fn criterion_08_dual_rate_saturates_in_sar_limit() {
    let spec = figure("fig9", &ExperimentConfig::default()).unwrap();
    let table = spec.run(100, MASTER).unwrap();
    let mut ok = true;
    let mut detail = Vec::new();
    for label in spec.labels() {
        let s = table.series(&label, Metric::MeanRateUl);
        let monotone = s.windows(2).all(|w| w[1].1 >= w[0].1);
        let flat: Vec<f64> = s.iter().filter(|p| p.0 >= 4e-3).map(|p| p.1).collect();
        let lo = flat.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = flat.iter().copied().fold(0.0, f64::max);
        let change = (hi - lo) / lo;
        ok &= monotone && change < 0.01;
        detail.push(format!("{label}: monotone={monotone} change {:.4}%", 100.0 * change));
    }
    verdict(8, ok, &detail.join("; "));
    assert!(ok);
}

#[test]
fn criterion_09_hard_constraints_hold() {
    let mut runs = 0;
    let mut violations = Vec::new();
    let policies = [
        PowerPolicy::PrimalRateTarget,
        PowerPolicy::dual(0.0016).unwrap(),
        PowerPolicy::dual(0.08).unwrap(),
        PowerPolicy::dual(2e-7).unwrap(),
    ];
    let strategies = [
        (DeploymentStrategy::KMeans, PositioningStrategy::ShrinkRealign),
        (DeploymentStrategy::ShrinkRealign, PositioningStrategy::Golden),
        (DeploymentStrategy::RandomGs, PositioningStrategy::Random),
        (DeploymentStrategy::UniformGrid, PositioningStrategy::Center),
    ];
    for arch in Architecture::ALL {
        for objective in [Objective::MinExposure, Objective::MaxRate] {
            for (i, policy) in policies.iter().enumerate() {
                let mut c = dense_scale(&ExperimentConfig::default());
                c.scenario.architecture = arch;
                c.pipeline.objective = objective;
                c.pipeline.policy = *policy;
                let (d, p) = strategies[i % strategies.len()];
                c.pipeline.strategy.deployment = d;
                c.pipeline.strategy.positioning = p;
                for seed in iteration_seeds(MASTER + i as u64, 20) {
                    let s = generate_scenario(&c.params, &c.scenario, seed).unwrap();
                    let r = run_pipeline(&s, &c.pipeline).unwrap();
                    runs += 1;
                    for v in check_constraints(&s, &r, policy) {
                        violations.push(format!("{arch}/{objective:?}/{policy:?}/{seed}: {v}"));
                    }
                }
            }
        }
    }
    let ok = violations.is_empty();
    verdict(
        9,
        ok,
        &format!(
            "{runs} runs, {} violations{}",
            violations.len(),
            violations.first().map(|v| format!(", first: {v}")).unwrap_or_default()
        ),
    );
    assert!(ok);
}

fn cli_output(args: &[&str], threads: &str) -> Vec<(String, Vec<u8>)> {
    let dir = tempfile::tempdir().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_emfnet"))
        .args(args)
        .arg("--out")
        .arg(dir.path())
        .env("EMFNET_THREADS", threads)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn criterion_10_repeated_commands_are_byte_identical() {
    let commands: [&[&str]; 4] = [
        &["figure", "fig3", "--iters", "4", "--seed", "9"],
        &["sweep", "--sweep", "K", "--values", "6,18", "--arch", "BsOnly,GreenTuav", "--iters", "5", "--seed", "3"],
        &["run", "--arch", "RegularTuav,SpecialTuav", "--iters", "3", "--seed", "5"],
        &["gen", "--seed", "7"],
    ];
    let mut mismatches = Vec::new();
    let mut compared = 0;
    for args in commands {
        let a = cli_output(args, "1");
        let b = cli_output(args, "4");
        let c = cli_output(args, "4");
        compared += a.len();
        if a != b || b != c {
            mismatches.push(args.join(" "));
        }
    }
    let ok = mismatches.is_empty() && compared >= 7;
    verdict(
        10,
        ok,
        &format!("{compared} files compared across 1 and 4 threads; mismatches: {mismatches:?}"),
    );
    assert!(ok);
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

#[test]
fn criterion_11_channel_and_exposure_numerics() {
    let p = SimParams::default();
    let mut checks: Vec<(&str, f64)> = Vec::new();

    checks.push(("p_LoS at elevation a", rel(los_probability_at(p.a_env, &p), 1.0 / (1.0 + p.a_env))));
    let oracle_plos = |deg: f64| 1.0 / (1.0 + 9.61 * (-0.16 * (deg - 9.61)).exp());
    checks.push(("p_LoS at 45 deg", rel(los_probability_at(45.0, &p), oracle_plos(45.0))));
    checks.push(("p_LoS at 0 deg", rel(los_probability_at(0.0, &p), oracle_plos(0.0))));
    let lambda_ratio = 4.0 * std::f64::consts::PI * 3.5e9 / 3e8;
    checks.push(("free-space prefactor", rel(free_space_prefactor(&p), lambda_ratio * lambda_ratio)));

    let noise = 1.380_649e-23 * 290.0 * 10e6;
    for (rate, loss) in [(10e6, 1e9), (50e6, 1e10), (5e6, 3.3e11), (100e6, 4.19e10)] {
        let need = noise * loss * (2f64.powf(rate / 10e6) - 1.0);
        checks.push(("required power", rel(required_power(rate, loss, &p), need)));
        checks.push(("rate of required power", rel(ul_rate(need, loss, &p), rate)));
    }
    checks.push(("31x noise gives 50 Mbps", rel(ul_rate(31.0 * noise * 1e10, 1e10, &p), 50e6)));

    let user = |usage: Usage, rate: f64| User {
        id: 0,
        position: Point3::new(0.0, 0.0, 0.0),
        usage,
        active: true,
        rate_req_ul: rate,
        rate_req_dl: 0.0,
        sar_ul: p.sar_for(usage),
    };
    let p_max = dbm_to_watts(26.0);
    let primal = PowerPolicy::PrimalRateTarget;
    let u50 = user(Usage::Data, 50e6);
    checks.push(("primal below cap", rel(allocate_power(&u50, 1e10, &primal, &p), 31.0 * noise * 1e10)));
    checks.push(("primal clamp", rel(allocate_power(&u50, 1e14, &primal, &p), p_max)));
    let dual = PowerPolicy::dual(0.0016).unwrap();
    checks.push(("dual data clamp", rel(allocate_power(&u50, 1e10, &dual, &p), p_max)));
    checks.push((
        "dual voice cap",
        rel(allocate_power(&user(Usage::Voice, 5e6), 1e10, &dual, &p), 0.0016 / 0.0047),
    ));

    let worst = checks.iter().cloned().fold(("", 0.0), |a, b| if b.1 > a.1 { b } else { a });
    let ok = checks.iter().all(|c| c.1 <= 1e-9);
    verdict(
        11,
        ok,
        &format!("{} checks, worst relative error {:.2e} ({})", checks.len(), worst.1, worst.0),
    );
    assert!(ok);
}
