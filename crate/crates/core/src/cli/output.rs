//! CSV and JSON writers for result rows.

use std::io::Write;

use serde::Serialize;

use crate::error::Result;
use crate::simulation::{AgentStat, ResultRow};

pub const CSV_HEADER: &str =
    "n,mechanism,penalty,welfare_mean,welfare_se,utilization_mean,utilization_se,revenue_mean,revenue_se";
pub const AGENT_CSV_HEADER: &str = "agent_index,beta,betahat,mechanism,welfare_mean,usage_mean";

/// Rounds to 9 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.8e}").parse().unwrap_or(x)
}

/// Shortest form of `x` rounded to 9 significant digits; exponent
/// notation outside `[1e-6, 1e15)`.
pub fn fmt_num(x: f64) -> String {
    let r = round_sig(x);
    if r == 0.0 {
        "0".to_string()
    } else if r.abs() < 1e-6 || r.abs() >= 1e15 {
        format!("{r:e}")
    } else {
        format!("{r}")
    }
}

/// Mechanism label with the FCFS penalty attached, e.g. `FCFS(2.5)`.
pub fn row_label(row: &ResultRow) -> String {
    match row.penalty {
        Some(z) => format!("{}({})", row.mechanism, fmt_num(z)),
        None => row.mechanism.clone(),
    }
}

pub fn write_csv<W: Write>(rows: &[ResultRow], mut out: W) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.n,
            r.mechanism,
            r.penalty.map(fmt_num).unwrap_or_default(),
            fmt_num(r.welfare_mean),
            fmt_num(r.welfare_se),
            fmt_num(r.utilization_mean),
            fmt_num(r.utilization_se),
            fmt_num(r.revenue_mean),
            fmt_num(r.revenue_se),
        )?;
    }
    Ok(())
}

/// Per-agent table for the rows with agent count `n`.
pub fn write_agents_csv<W: Write>(rows: &[ResultRow], n: usize, mut out: W) -> Result<()> {
    writeln!(out, "{AGENT_CSV_HEADER}")?;
    for r in rows.iter().filter(|r| r.n == n) {
        let label = row_label(r);
        for s in r.per_agent.iter().flatten() {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                s.agent_index,
                fmt_num(s.beta),
                fmt_num(s.betahat),
                label,
                fmt_num(s.welfare_mean),
                fmt_num(s.usage_mean)
            )?;
        }
    }
    Ok(())
}

fn rounded(r: &ResultRow) -> ResultRow {
    ResultRow {
        n: r.n,
        mechanism: r.mechanism.clone(),
        penalty: r.penalty.map(round_sig),
        welfare_mean: round_sig(r.welfare_mean),
        welfare_se: round_sig(r.welfare_se),
        utilization_mean: round_sig(r.utilization_mean),
        utilization_se: round_sig(r.utilization_se),
        revenue_mean: round_sig(r.revenue_mean),
        revenue_se: round_sig(r.revenue_se),
        per_agent: r.per_agent.as_ref().map(|v| {
            v.iter()
                .map(|s| AgentStat {
                    agent_index: s.agent_index,
                    beta: round_sig(s.beta),
                    betahat: round_sig(s.betahat),
                    welfare_mean: round_sig(s.welfare_mean),
                    usage_mean: round_sig(s.usage_mean),
                })
                .collect()
        }),
    }
}

#[derive(Serialize)]
struct Document {
    rows: Vec<ResultRow>,
}

/// One JSON document `{"rows": [...]}` mirroring the row fields.
pub fn write_json<W: Write>(rows: &[ResultRow], mut out: W) -> Result<()> {
    let doc = Document { rows: rows.iter().map(rounded).collect() };
    serde_json::to_writer_pretty(&mut out, &doc).map_err(|e| crate::error::Error::Io(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row() -> ResultRow {
        ResultRow {
            n: 3,
            mechanism: "FCFS".into(),
            penalty: Some(2.5),
            welfare_mean: 1.0 / 3.0,
            welfare_se: 0.0,
            utilization_mean: 123456789.123,
            utilization_se: 1e-20,
            revenue_mean: -0.0,
            revenue_se: 2.0,
            per_agent: None,
        }
    }

    #[test]
    fn nine_significant_digits() {
        assert_eq!(fmt_num(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt_num(123456789.123), "123456789");
        assert_eq!(fmt_num(2.0), "2");
        assert_eq!(fmt_num(-0.0), "0");
        assert_eq!(fmt_num(-2.73996749123e-17), "-2.73996749e-17");
        assert_eq!(fmt_num(1.0 / 3.0).parse::<f64>().unwrap(), round_sig(1.0 / 3.0));
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        write_csv(&[row()], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert_eq!(lines.next(), Some("3,FCFS,2.5,0.333333333,0,123456789,1e-20,0,2"));
    }

    #[test]
    fn json_mirrors_rows() {
        let mut buf = Vec::new();
        write_json(&[row()], &mut buf).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        let r = &v["rows"][0];
        assert_eq!(r["mechanism"], "FCFS");
        assert_eq!(r["welfare_mean"].as_f64(), Some(0.333333333));
        assert!(r["per_agent"].is_null());
    }
}
