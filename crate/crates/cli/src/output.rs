use std::fmt::Write;

use dkf::analysis::{CovarianceReport, EmpiricalReport, SensorRatios};
use dkf::consensus::ConditionCheck;
use dkf::pipeline::Designs;
use dkf::scenario::Scenario;
use dkf::{Error, Result};
use serde_json::{json, Value};

fn value<T: serde::Serialize>(x: &T) -> Result<Value> {
    serde_json::to_value(x).map_err(|e| Error::Io(e.to_string()))
}

fn pretty(v: &Value) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| Error::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn condition_line(c: &ConditionCheck) -> String {
    format!(
        "condition: mahler = {:.6}, bound = {:.6}, {}",
        c.mahler,
        c.bound,
        if c.feasible { "feasible" } else { "infeasible" }
    )
}

pub fn consensus_line(d: &Designs) -> String {
    let radii: Vec<String> = d.consensus.spectral_radii.iter().map(|r| format!("{r:.4}")).collect();
    format!("consensus: zeta = {:.6}, spectral radii [{}]", d.consensus.zeta, radii.join(", "))
}

pub fn design_json(sc: &Scenario, d: &Designs, cond: &ConditionCheck) -> Result<String> {
    let v = json!({
        "scenario": sc.config.name,
        "n": d.n(),
        "m": d.m(),
        "sensor_positions": sc.sensor_positions,
        "laplacian_eigenvalues": d.graph.mu,
        "feasibility": {
            "mahler": cond.mahler,
            "bound": cond.bound,
            "feasible": cond.feasible,
            "spectral_radii": d.consensus.spectral_radii,
        },
        "kalman": value(&d.kalman)?,
        "decomposition": value(&d.bundle)?,
        "reduced": match &d.reduced {
            Some(r) => value(r)?,
            None => Value::Null,
        },
        "consensus": value(&d.consensus)?,
    });
    pretty(&v)
}

pub fn covariance_json(report: &CovarianceReport, empirical: Option<&EmpiricalReport>, ratios: &[SensorRatios]) -> Result<String> {
    let v = json!({
        "analytic": value(report)?,
        "empirical": match empirical {
            Some(e) => value(e)?,
            None => Value::Null,
        },
        "ratios": value(&ratios)?,
    });
    pretty(&v)
}

pub fn node_table(report: &CovarianceReport, empirical: Option<&EmpiricalReport>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:>6} {:>14} {:>14} {:>10}", "node", "tr W_ii", "empirical", "std err");
    for (i, tr) in report.per_node_trace.iter().enumerate() {
        match empirical {
            Some(e) => {
                let _ = writeln!(s, "{:>6} {:>14.6} {:>14.6} {:>10.6}", i + 1, tr, e.nodes[i].mse.mean, e.nodes[i].mse.se);
            }
            None => {
                let _ = writeln!(s, "{:>6} {:>14.6} {:>14} {:>10}", i + 1, tr, "-", "-");
            }
        }
    }
    let kf = empirical.map(|e| format!("{:.6}", e.kf_mse.mean)).unwrap_or_else(|| "-".into());
    let _ = writeln!(s, "{:>6} {:>14.6} {:>14}", "kf", report.ppost_trace, kf);
    s
}

pub fn ratio_table(ratios: &[SensorRatios], empirical: Option<&EmpiricalReport>, ppost_trace: f64) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:>6} {:>8} {:>8} {:>10} {:>8}", "sensor", "rho_1", "rho_2", "rho_2 emp", "gain");
    let mut total = 0.0;
    let mut count = 0;
    for r in ratios {
        let emp = empirical
            .map(|e| format!("{:.3}", e.nodes[r.sensor].mse.mean / ppost_trace))
            .unwrap_or_else(|| "-".into());
        let (local, gain) = match r.rho_local {
            Some(l) => {
                total += l - r.rho_distributed;
                count += 1;
                (format!("{l:.3}"), format!("{:.3}", l - r.rho_distributed))
            }
            None => ("inf".into(), "-".into()),
        };
        let _ = writeln!(s, "{:>6} {:>8} {:>8.3} {:>10} {:>8}", r.sensor + 1, local, r.rho_distributed, emp, gain);
    }
    if count > 0 {
        let _ = writeln!(s, "mean improvement {:.3}", total / count as f64);
    }
    s
}
