//! Form screening report: two CSV tables plus a plain-text ranking.

use std::fmt::Write as _;
use std::path::Path;

use j2lambert_core::stats::ScreeningReport;

use crate::dataset::fmt_f64;
use crate::error::{Error, Result};

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// `form,role,variable,mean,std,rho,n`; `rho` is empty for all-zero columns.
pub fn column_stats_csv(report: &ScreeningReport) -> String {
    let mut out = String::from("form,role,variable,mean,std,rho,n\n");
    for f in &report.forms {
        let c = &f.correlation;
        let rows = [
            ("input", &c.input_names, &f.input_stats),
            ("output", &c.output_names, &f.output_stats),
        ];
        for (role, names, stats) in rows {
            for (name, s) in names.iter().zip(stats.iter()) {
                let _ = writeln!(
                    out,
                    "{},{role},{name},{},{},{},{}",
                    c.form,
                    fmt_f64(s.mean),
                    fmt_f64(s.std),
                    opt(s.rho),
                    s.n
                );
            }
        }
    }
    out
}

/// `form,output,input,r`; `r` is empty where a column has zero variance.
pub fn correlation_csv(report: &ScreeningReport) -> String {
    let mut out = String::from("form,output,input,r\n");
    for f in &report.forms {
        let c = &f.correlation;
        for (oname, row) in c.output_names.iter().zip(&c.matrix) {
            for (iname, r) in c.input_names.iter().zip(row) {
                let _ = writeln!(out, "{},{oname},{iname},{}", c.form, opt(*r));
            }
        }
    }
    out
}

pub fn ranking_text(report: &ScreeningReport) -> String {
    let mut out = String::from("rank  form     weak_rows  dominance  total_dominance\n");
    for (rank, &i) in report.ranking.iter().enumerate() {
        let c = &report.forms[i].correlation;
        let dom = c
            .dominance()
            .map_or_else(|| "-".to_string(), |d| format!("{d:.4}"));
        let _ = writeln!(
            out,
            "{:<5} {:<8} {:<10} {:<10} {:.4}",
            rank + 1,
            c.form.to_string(),
            c.weak_count(),
            dom,
            c.total_dominance()
        );
    }
    if let Some(&best) = report.ranking.first() {
        let _ = writeln!(out, "selected: {}", report.forms[best].correlation.form);
    }
    out
}

/// Writes `column_stats.csv`, `correlation.csv` and `ranking.txt` into `dir`,
/// creating it if needed.
pub fn save_screening(dir: &Path, report: &ScreeningReport) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (name, text) in [
        ("column_stats.csv", column_stats_csv(report)),
        ("correlation.csv", correlation_csv(report)),
        ("ranking.txt", ranking_text(report)),
    ] {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}
