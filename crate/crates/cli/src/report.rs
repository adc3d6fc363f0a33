//! Report writers: markdown summary, machine-readable JSON, and CSV
//! tables. Numbers are formatted with fixed precision so identical runs
//! produce byte-identical files.

use crate::runner::Report;
use std::io::Write;
use std::path::Path;

fn g(x: f64) -> String {
    format!("{x:.12e}")
}

pub fn render_markdown(report: &Report) -> String {
    let mut out = String::new();
    out.push_str(&format!("# stratcheck report: {}\n\n", report.set_name));
    out.push_str("| check | outcome | expected | detail |\n");
    out.push_str("|---|---|---|---|\n");
    for c in &report.checks {
        let expected = match (&c.expected, c.matched) {
            (Some(e), Some(true)) => format!("{e} ✓"),
            (Some(e), Some(false)) => format!("{e} ✗"),
            _ => "-".into(),
        };
        out.push_str(&format!(
            "| {} | {} | {} | {} |\n",
            c.name,
            c.outcome,
            expected,
            c.detail.replace('|', "/")
        ));
    }
    if !report.density_rows.is_empty() {
        out.push_str("\n## densities\n\n| stratum | x0 | theta | stderr | method |\n|---|---|---|---|---|\n");
        for d in &report.density_rows {
            let theta = d.theta.map(|t| format!("{t:.6}")).unwrap_or_else(|| "-".into());
            out.push_str(&format!(
                "| {} | {} | {} | {:.6} | {} |\n",
                d.stratum, d.base_param, theta, d.stderr, d.method
            ));
        }
    }
    if report.expected_total > 0 {
        out.push_str(&format!(
            "\nexpectations: {}/{} met\n",
            report.expected_matched, report.expected_total
        ));
    }
    if !report.notes.is_empty() {
        out.push_str("\n## notes\n\n");
        for n in &report.notes {
            out.push_str(&format!("- {n}\n"));
        }
    }
    out
}

pub fn render_json(report: &Report) -> String {
    // hand-assembled with ordered vectors for deterministic output
    let checks: Vec<serde_json::Value> = report
        .checks
        .iter()
        .map(|c| {
            serde_json::json!({
                "name": c.name,
                "outcome": c.outcome,
                "expected": c.expected,
                "matched": c.matched,
                "detail": c.detail,
            })
        })
        .collect();
    let densities: Vec<serde_json::Value> = report
        .density_rows
        .iter()
        .map(|d| {
            serde_json::json!({
                "stratum": d.stratum,
                "x0": d.base_param,
                "theta": d.theta,
                "stderr": d.stderr,
                "method": d.method,
                "per_u": d.per_u.iter().map(|(u, v)| serde_json::json!([u, v])).collect::<Vec<_>>(),
            })
        })
        .collect();
    let doc = serde_json::json!({
        "set": report.set_name,
        "checks": checks,
        "densities": densities,
        "expectations": {
            "total": report.expected_total,
            "matched": report.expected_matched,
        },
        "notes": report.notes,
    });
    serde_json::to_string_pretty(&doc).expect("json serializes")
}

pub fn render_limits_csv(report: &Report) -> String {
    let mut out = String::from("pair,condition,curve,classification,limit,samples\n");
    for r in &report.curve_rows {
        out.push_str(&format!(
            "\"{}\",{},\"{}\",\"{}\",{},{}\n",
            r.pair,
            r.condition,
            r.curve,
            r.classification,
            g(r.limit),
            r.samples
        ));
    }
    out
}

pub fn render_cone_csv(report: &Report) -> String {
    let mut out = String::from("pair,x0,curve,dir_value_axis,dir_fiber_axis,classification\n");
    for r in &report.cone_rows {
        out.push_str(&format!(
            "\"{}\",{},\"{}\",{},{},\"{}\"\n",
            r.pair,
            g(r.base_param),
            r.curve,
            g(r.dir_value_axis),
            g(r.dir_fiber_axis),
            r.classification
        ));
    }
    out
}

pub fn render_density_csv(report: &Report) -> String {
    let mut out = String::new();
    let max_u = report.density_rows.iter().map(|d| d.per_u.len()).max().unwrap_or(0);
    out.push_str("stratum,x0,theta,stderr,method");
    if let Some(first) = report.density_rows.first() {
        for (u, _) in &first.per_u {
            out.push_str(&format!(",v(u={u})"));
        }
    }
    out.push('\n');
    for d in &report.density_rows {
        out.push_str(&format!(
            "{},{},{},{},{}",
            d.stratum,
            g(d.base_param),
            d.theta.map(g).unwrap_or_default(),
            g(d.stderr),
            d.method
        ));
        for i in 0..max_u {
            match d.per_u.get(i) {
                Some((_, v)) => out.push_str(&format!(",{}", g(*v))),
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Md,
    Json,
    Csv,
}

pub fn write_all(
    report: &Report,
    out_dir: &Path,
    formats: &[Format],
) -> std::io::Result<Vec<std::path::PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    let mut emit = |name: &str, content: String| -> std::io::Result<()> {
        let path = out_dir.join(name);
        let mut f = std::fs::File::create(&path)?;
        f.write_all(content.as_bytes())?;
        written.push(path);
        Ok(())
    };
    if formats.contains(&Format::Md) {
        emit("report.md", render_markdown(report))?;
    }
    if formats.contains(&Format::Json) {
        emit("summary.json", render_json(report))?;
    }
    if formats.contains(&Format::Csv) {
        emit("limits.csv", render_limits_csv(report))?;
        emit("cone_directions.csv", render_cone_csv(report))?;
        emit("density.csv", render_density_csv(report))?;
    }
    Ok(written)
}
