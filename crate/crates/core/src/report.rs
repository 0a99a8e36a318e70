//! Markdown summaries of calibration and robustness runs.

use std::fmt::Write;

use crate::bootstrap::BootstrapReport;
use crate::calibrate::{format_percent, summary_row, CalibrationResult, SUMMARY_HEADER};
use crate::stat_tests::SensitivityReport;

/// Everything a report may include; only the bootstrap part is required.
#[derive(Debug, Clone, Copy)]
pub struct ReportInput<'a> {
    pub label: &'a str,
    pub calibration: Option<&'a CalibrationResult>,
    pub bootstrap: &'a BootstrapReport,
    pub sensitivity: Option<&'a SensitivityReport>,
}

fn table(out: &mut String, header: &[&str], rows: &[Vec<String>]) {
    let _ = writeln!(out, "| {} |", header.join(" | "));
    let _ = writeln!(out, "|{}", "---|".repeat(header.len()));
    for r in rows {
        let _ = writeln!(out, "| {} |", r.join(" | "));
    }
    out.push('\n');
}

pub fn render_report(input: &ReportInput<'_>) -> String {
    let b = input.bootstrap;
    let mut out = String::new();
    let _ = writeln!(out, "# Robustness report: {}\n", input.label);

    if let Some(cal) = input.calibration {
        let _ = writeln!(out, "## Calibration\n");
        table(&mut out, &SUMMARY_HEADER, &[summary_row(input.label, cal).to_vec()]);
    }

    let _ = writeln!(out, "## Bootstrap robustness\n");
    let _ = writeln!(out, "{} bootcalibrations ({} failed).\n", b.sample_count, b.failed);
    table(
        &mut out,
        &["day", "boot-ARE Range", "boot-ARE IQR", "boot-ARE Std", "Rel IQR Avg", "Rel IQR Max"],
        &[vec![
            input.label.to_string(),
            format_percent(b.boot_are_summary.range, 2),
            format_percent(b.boot_are_summary.iqr, 2),
            format_percent(b.boot_are_summary.std, 2),
            format_percent(b.iqr_summary.average, 2),
            format_percent(b.iqr_summary.max, 2),
        ]],
    );

    let rows: Vec<Vec<String>> = b
        .iqr_summary
        .per_parameter
        .iter()
        .zip(b.overall_theta.to_array())
        .zip(b.theta_hat.to_array())
        .map(|((p, overall), hat)| {
            vec![
                p.name.clone(),
                format!("{overall:.4}"),
                format!("{hat:.4}"),
                format!("{:.4}", p.iqr),
                p.relative_iqr.map_or("n/a".to_string(), |r| format_percent(r, 2)),
                if p.free { "free" } else { "fixed" }.to_string(),
            ]
        })
        .collect();
    let _ = writeln!(out, "### Parameters\n");
    table(&mut out, &["parameter", "overall", "bootstrap mean", "IQR", "Rel IQR", "status"], &rows);

    let max_bre = b.bre.iter().copied().fold(0.0, f64::max);
    let mean_bre = b.bre.iter().sum::<f64>() / b.bre.len().max(1) as f64;
    let _ = writeln!(
        out,
        "Bootstrap relative error: mean {}, max {}.\n",
        format_percent(mean_bre, 2),
        format_percent(max_bre, 2)
    );

    if let Some(s) = input.sensitivity {
        let _ = writeln!(out, "## Sensitivity (KS, best vs worst ARFV octiles)\n");
        let rows: Vec<Vec<String>> = s
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.parameter.clone(),
                    format!("{:.4}", r.ks.statistic),
                    format!("{:.4}", r.ks.p_value),
                    if r.reject { "yes" } else { "no" }.to_string(),
                ]
            })
            .collect();
        let level = format_percent(s.alpha_level, 0);
        table(&mut out, &["parameter", "D", "p", &format!("reject @ {level}")], &rows);
    }
    out
}
