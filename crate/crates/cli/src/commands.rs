use std::fs;
use std::path::{Path, PathBuf};

use dkf::analysis::{asymptotic_covariance, empirical_covariance, performance_ratios, CovarianceReport, EmpiricalReport};
use dkf::consensus::check_condition;
use dkf::decomposition::design_decomposition;
use dkf::kalman::design_kalman;
use dkf::pipeline::{design_all, Designs};
use dkf::plant::split_model;
use dkf::scenario::{builtin, Scenario, ScenarioConfig};
use dkf::simulator::{run_monte_carlo, write_mse_csv, write_trace_csv, MonteCarloStats, Simulator, TrialConfig};
use dkf::{Error, Result};

use crate::output;
use crate::RunArgs;

fn load(args: &RunArgs) -> Result<ScenarioConfig> {
    let mut cfg = match &args.config {
        Some(p) => ScenarioConfig::load(p)?,
        None => return Err(Error::Config("--config is required".into())),
    };
    apply_overrides(&mut cfg, args)?;
    Ok(cfg)
}

fn apply_overrides(cfg: &mut ScenarioConfig, args: &RunArgs) -> Result<()> {
    if let Some(t) = args.trials {
        cfg.sim.trials = t;
    }
    if let Some(s) = args.seed {
        cfg.sim.seed = s;
    }
    if let Some(r) = args.rounds {
        cfg.sim.rounds_per_sample = r;
    }
    if let Some(p) = args.drop {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::Config(format!("--drop {p} is not in [0, 1)")));
        }
        cfg.sim.drop_prob = p;
    }
    if let Some(v) = &args.variant {
        cfg.design.variant = v.clone();
    }
    if let Some(s) = &args.strategy {
        cfg.sim.strategy = Some(s.clone());
    }
    Ok(())
}

fn out_dir(args: &RunArgs) -> Result<Option<PathBuf>> {
    match &args.out {
        Some(d) => {
            fs::create_dir_all(d)?;
            Ok(Some(d.clone()))
        }
        None => Ok(None),
    }
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    fs::write(dir.join(name), text)?;
    Ok(())
}

fn designs_for(scenario: &Scenario) -> Result<Designs> {
    design_all(&scenario.model, &scenario.graph, &scenario.config.design_options())
}

pub fn check(args: &RunArgs) -> Result<()> {
    let cfg = load(args)?;
    let sc = cfg.instantiate()?;
    let kf = design_kalman(&sc.model)?;
    println!("kalman: ok (tr P = {:.6})", kf.Ppost.trace());
    let split = split_model(&sc.model)?;
    let bundle = design_decomposition(&sc.model, &kf, &split, &cfg.design_options().decomposition)?;
    println!("decomposition: ok (F via {}, G via {})", bundle.f_route, bundle.g_route);
    let cond = check_condition(&bundle.S, &sc.graph)?;
    println!("{}", output::condition_line(&cond));
    let d = designs_for(&sc)?;
    println!("{}", output::consensus_line(&d));
    Ok(())
}

pub fn design(args: &RunArgs) -> Result<()> {
    let cfg = load(args)?;
    let sc = cfg.instantiate()?;
    let d = designs_for(&sc)?;
    let cond = check_condition(&d.bundle.S, &d.graph)?;
    println!("{}", output::condition_line(&cond));
    println!("{}", output::consensus_line(&d));
    if let Some(dir) = out_dir(args)? {
        write(&dir, "design.json", &output::design_json(&sc, &d, &cond)?)?;
    }
    Ok(())
}

struct RunResult {
    trial: TrialConfig,
    report: CovarianceReport,
    stats: MonteCarloStats,
    empirical: Option<EmpiricalReport>,
}

fn run(sc: &Scenario, d: &Designs, route: &str) -> Result<RunResult> {
    let trial = sc.config.trial_config()?;
    let sim = Simulator::new(d, &trial)?;
    let report = asymptotic_covariance(d, &sim.realization, trial.rounds, route)?;
    let trials = sc.config.sim.trials.max(1);
    let stats = run_monte_carlo(&sim, trials, sc.config.window())?;
    let empirical = if trials >= 2 { Some(empirical_covariance(&stats)?) } else { None };
    Ok(RunResult { trial, report, stats, empirical })
}

fn write_outputs(dir: &Path, sc: &Scenario, d: &Designs, res: &RunResult) -> Result<()> {
    let sim = Simulator::new(d, &res.trial)?;
    let mut trace = Vec::new();
    write_trace_csv(&sim.run_trial(0), &mut trace)?;
    fs::write(dir.join("trace.csv"), trace)?;
    let mut mse = Vec::new();
    write_mse_csv(&res.stats, &mut mse)?;
    fs::write(dir.join("mse.csv"), mse)?;
    let ratios = performance_ratios(&res.report, d)?;
    write(dir, "covariance.json", &output::covariance_json(&res.report, res.empirical.as_ref(), &ratios)?)?;
    let cond = check_condition(&d.bundle.S, &d.graph)?;
    write(dir, "design.json", &output::design_json(sc, d, &cond)?)?;
    Ok(())
}

pub fn simulate(args: &RunArgs) -> Result<()> {
    let cfg = load(args)?;
    let sc = cfg.instantiate()?;
    let d = designs_for(&sc)?;
    let res = run(&sc, &d, &args.route)?;
    print!("{}", output::node_table(&res.report, res.empirical.as_ref()));
    let dir = out_dir(args)?.unwrap_or_else(|| PathBuf::from("."));
    write_outputs(&dir, &sc, &d, &res)
}

pub fn reproduce(example: &str, args: &RunArgs) -> Result<()> {
    let mut cfg = builtin(example)?;
    apply_overrides(&mut cfg, args)?;
    let sc = cfg.instantiate()?;
    let d = designs_for(&sc)?;
    println!("{example}: n = {}, m = {}", d.n(), d.m());
    println!("{}", output::condition_line(&check_condition(&d.bundle.S, &d.graph)?));
    println!("{}", output::consensus_line(&d));
    let res = run(&sc, &d, &args.route)?;
    println!(
        "variant {} ({} rounds), covariance route {}, augmented dimension {}, {} trials",
        res.report.variant, res.report.rounds, res.report.route, res.report.augmented_dim, res.stats.trials
    );
    print!("{}", output::node_table(&res.report, res.empirical.as_ref()));
    if example == "example2" {
        let ratios = performance_ratios(&res.report, &d)?;
        print!("{}", output::ratio_table(&ratios, res.empirical.as_ref(), res.report.ppost_trace));
    }
    if let Some(dir) = out_dir(args)? {
        write_outputs(&dir, &sc, &d, &res)?;
    }
    Ok(())
}
