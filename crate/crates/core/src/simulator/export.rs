use std::io::Write;

use super::{MonteCarloStats, SimulationTrace};
use crate::error::Result;

/// Columns `k, x_1..x_n, xhat_1..xhat_n, node<i>_xbreve_1..n` for every node.
pub fn write_trace_csv<W: Write>(trace: &SimulationTrace, mut out: W) -> Result<()> {
    let n = trace.x.first().map_or(0, |x| x.len());
    let m = trace.xbreve.first().map_or(0, |v| v.len());
    let mut header = vec!["k".to_string()];
    header.extend((1..=n).map(|c| format!("x_{c}")));
    header.extend((1..=n).map(|c| format!("xhat_{c}")));
    for i in 1..=m {
        header.extend((1..=n).map(|c| format!("node{i}_xbreve_{c}")));
    }
    writeln!(out, "{}", header.join(","))?;
    for k in 0..trace.len() {
        let mut row = vec![k.to_string()];
        row.extend(trace.x[k].iter().map(|v| format!("{v:e}")));
        row.extend(trace.xhat[k].iter().map(|v| format!("{v:e}")));
        for xb in &trace.xbreve[k] {
            row.extend(xb.iter().map(|v| format!("{v:e}")));
        }
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Columns `k, kf, node1..node<m>`: mean squared error summed over state components.
pub fn write_mse_csv<W: Write>(stats: &MonteCarloStats, mut out: W) -> Result<()> {
    let m = stats.m;
    let mut header = vec!["k".to_string(), "kf".to_string()];
    header.extend((1..=m).map(|i| format!("node{i}")));
    writeln!(out, "{}", header.join(","))?;
    for k in 0..=stats.horizon {
        let mut row = vec![k.to_string(), format!("{:e}", stats.mse_kf_total(k))];
        row.extend((0..m).map(|i| format!("{:e}", stats.mse_node_total(k, i))));
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}
