use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use super::ConvergenceReport;
use crate::error::{Error, Result};

pub const REPORT_CSV: &str = "report.csv";
pub const REPORT_JSON: &str = "report.json";

/// Version of the JSON summary layout.
pub const REPORT_SCHEMA: u32 = 1;

pub fn write_report_csv<W: Write>(report: &ConvergenceReport, w: &mut W) -> Result<()> {
    writeln!(w, "n,hausdorff,err_lp,err_grad_lp,iters,residual")?;
    for r in &report.rows {
        writeln!(
            w,
            "{},{:.16e},{:.16e},{:.16e},{},{:.16e}",
            r.n, r.hausdorff, r.err_lp, r.err_grad_lp, r.iters, r.residual
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct Summary<'a> {
    schema: u32,
    #[serde(flatten)]
    report: &'a ConvergenceReport,
}

/// JSON summary with sorted keys, two-space indentation and every float
/// written with 17 significant digits (`null` when not finite).
pub fn write_report_json<W: Write>(report: &ConvergenceReport, w: &mut W) -> Result<()> {
    let s = to_json_string(&Summary {
        schema: REPORT_SCHEMA,
        report,
    })?;
    w.write_all(s.as_bytes())?;
    Ok(())
}

/// Renders any serializable value in the report's JSON style, with a
/// trailing newline.
pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let value = serde_json::to_value(value).map_err(|e| Error::Parse(e.to_string()))?;
    let mut s = String::new();
    render(&value, 0, &mut s);
    s.push('\n');
    Ok(s)
}

fn render(v: &Value, depth: usize, out: &mut String) {
    let pad = |out: &mut String, d: usize| {
        for _ in 0..d {
            out.push_str("  ");
        }
    };
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap();
            let _ = write!(out, "{x:.16e}");
        }
        Value::Array(items) if !items.is_empty() => {
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                pad(out, depth + 1);
                render(item, depth + 1, out);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(out, depth);
            out.push(']');
        }
        Value::Object(map) if !map.is_empty() => {
            out.push_str("{\n");
            for (i, (k, item)) in map.iter().enumerate() {
                pad(out, depth + 1);
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                render(item, depth + 1, out);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            pad(out, depth);
            out.push('}');
        }
        other => out.push_str(&other.to_string()),
    }
}

/// Writes `report.csv` and `report.json` into `dir`, creating it if needed.
pub fn emit_report(report: &ConvergenceReport, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir)?;
    let csv = dir.join(REPORT_CSV);
    let json = dir.join(REPORT_JSON);
    let mut buf = Vec::new();
    write_report_csv(report, &mut buf)?;
    std::fs::write(&csv, &buf)?;
    buf.clear();
    write_report_json(report, &mut buf)?;
    std::fs::write(&json, &buf)?;
    Ok((csv, json))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{decide, LimitRecord, ReportRow};
    use crate::geometry::FamilyKind;
    use crate::solver::{Method, SolveDiagnostics};

    fn sample(errors: &[f64]) -> ConvergenceReport {
        let rows = errors
            .iter()
            .enumerate()
            .map(|(i, &e)| ReportRow {
                n: 4 << i,
                hausdorff: 0.25 / (1 << i) as f64,
                err_lp: e,
                err_grad_lp: 2.0 * e,
                iters: 10 + i,
                residual: 1e-11,
            })
            .collect();
        let (verdict, rule) = decide(errors, 0.5);
        ConvergenceReport {
            family: FamilyKind::Example1,
            p: 2.0,
            h: 1.0 / 32.0,
            dim: 3,
            rows,
            verdict,
            rule,
            limit: LimitRecord {
                nodes: 10,
                elements: 12,
                components: 2,
                max_snap_displacement: 0.0,
                diagnostics: SolveDiagnostics {
                    method: Method::ConjugateGradient,
                    p: 2.0,
                    iterations: 3,
                    residual: 1e-12,
                    energy: -0.25,
                },
                norm_lp: f64::NAN,
            },
        }
    }

    #[test]
    fn csv_has_header_plus_rows() {
        let mut out = Vec::new();
        write_report_csv(&sample(&[0.4, 0.3, 0.2, 0.1]), &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert!(text.starts_with("n,hausdorff,err_lp,err_grad_lp,iters,residual\n4,2.5000000000000000e-1,"));
    }

    #[test]
    fn emitting_twice_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let r = sample(&[0.4, 0.3, 0.2, 0.1]);
        let (c, j) = emit_report(&r, dir.path()).unwrap();
        let first = (std::fs::read(&c).unwrap(), std::fs::read(&j).unwrap());
        emit_report(&r, dir.path()).unwrap();
        assert_eq!(first, (std::fs::read(&c).unwrap(), std::fs::read(&j).unwrap()));
    }

    #[test]
    fn json_carries_verdict_and_rule() {
        let mut out = Vec::new();
        write_report_json(&sample(&[0.4, 0.35, 0.3]), &mut out).unwrap();
        let v: Value = serde_json::from_slice(&out).unwrap();
        assert_eq!(v["verdict"], "inconclusive");
        assert_eq!(v["rule"]["count"], 3);
        assert_eq!(v["rule"]["threshold"], 0.5);
        assert_eq!(v["limit"]["norm_lp"], Value::Null);
        assert_eq!(v["schema"], 1);
        let text = String::from_utf8(out).unwrap();
        assert!(text.contains("\"ratio\": 7.4999999999999989e-1"));
    }
}
