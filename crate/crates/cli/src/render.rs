//! Table, JSON and CSV renderings.
//!
//! JSON and CSV are canonical: fixed field order, shortest round-trip floats,
//! LF line endings. Re-parsing and re-rendering gives the same bytes.

use std::fmt::Write as _;

use posthoc_core::{
    Cell, ClosedFormReport, DiscrepancyRow, Estimate, ExpectedRatio, SimulationReport, Verdict,
};
use serde::Serialize;

use crate::commands::{CompareReport, ExactOutput, SimulateOutput, SweepRow, ORACLE_Z_LIMIT};
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Table,
    Json,
    Csv,
}

pub fn json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut out = serde_json::to_string_pretty(value)?;
    out.push('\n');
    Ok(out)
}

/// Shortest round-trip representation; `inf` for infinities.
pub fn num(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:?}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// At most 12 significant digits, trailing zeros trimmed.
pub fn sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return num(x);
    }
    let magnitude = x.abs().log10().floor() as i32;
    if !(-5..=15).contains(&magnitude) {
        return format!("{x:.11e}");
    }
    let decimals = (11 - magnitude).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn sig_opt(x: Option<f64>) -> String {
    x.map(sig).unwrap_or_else(|| "-".into())
}

const CSV_HEADER: [&str; 13] = [
    "arm", "section", "a", "lo", "hi", "n", "n_rejected", "value", "std_error", "ci95_low",
    "ci95_high", "d_a", "r_a",
];

/// One line of the long-format CSV shared by `exact`, `simulate` and `compare`.
#[derive(Debug, Default, Clone)]
struct CsvLine {
    arm: String,
    section: String,
    a: Option<f64>,
    lo: Option<f64>,
    hi: Option<f64>,
    n: Option<u64>,
    n_rejected: Option<u64>,
    value: String,
    std_error: Option<f64>,
    ci95_low: Option<f64>,
    ci95_high: Option<f64>,
    d_a: Option<f64>,
    r_a: Option<f64>,
}

impl CsvLine {
    fn section(arm: &str, section: &str) -> Self {
        Self {
            arm: arm.into(),
            section: section.into(),
            ..Default::default()
        }
    }

    fn estimate(arm: &str, section: &str, est: &Estimate) -> Self {
        Self {
            n: Some(est.n),
            value: num(est.mean),
            std_error: Some(est.std_error),
            ci95_low: Some(est.ci95_low),
            ci95_high: Some(est.ci95_high),
            ..Self::section(arm, section)
        }
    }

    fn with_cell(mut self, cell: &Cell) -> Self {
        match *cell {
            Cell::Point { a } => self.a = Some(a.value()),
            Cell::Bin { lo, hi } => {
                self.a = Some(cell.representative());
                self.lo = Some(lo);
                self.hi = Some(hi);
            }
        }
        self
    }

    fn record(&self) -> Vec<String> {
        let count = |x: Option<u64>| x.map(|v| v.to_string()).unwrap_or_default();
        vec![
            self.arm.clone(),
            self.section.clone(),
            opt(self.a),
            opt(self.lo),
            opt(self.hi),
            count(self.n),
            count(self.n_rejected),
            self.value.clone(),
            opt(self.std_error),
            opt(self.ci95_low),
            opt(self.ci95_high),
            opt(self.d_a),
            opt(self.r_a),
        ]
    }
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn finish(writer: csv::Writer<Vec<u8>>) -> Result<String, CliError> {
    let bytes = writer.into_inner().map_err(|e| CliError::Serialize(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Serialize(e.to_string()))
}

fn write_lines(lines: &[CsvLine]) -> Result<String, CliError> {
    let mut writer = csv_writer();
    writer.write_record(CSV_HEADER)?;
    for line in lines {
        writer.write_record(line.record())?;
    }
    finish(writer)
}

fn closed_form_lines(arm: &str, report: &ClosedFormReport) -> Vec<CsvLine> {
    let mut lines = vec![CsvLine {
        value: match report.expected_ratio {
            ExpectedRatio::Finite { value } => num(value),
            ExpectedRatio::Diverges => "inf".into(),
        },
        ..CsvLine::section(arm, "expected_ratio")
    }];
    lines.extend(report.rates.iter().map(|rate| {
        let line = CsvLine {
            value: num(rate.cond_rate),
            d_a: rate.d_a,
            r_a: rate.r_a,
            ..CsvLine::section(arm, "cell")
        };
        match rate.cell {
            // interval cells carry their bounds only; r_a = 1/a varies across them
            Cell::Bin { lo, hi } => CsvLine { lo: Some(lo), hi: Some(hi), ..line },
            Cell::Point { .. } => line.with_cell(&rate.cell),
        }
    }));
    lines
}

fn row_line(arm: &str, row: &DiscrepancyRow) -> CsvLine {
    CsvLine {
        n: Some(row.n_conditional),
        n_rejected: Some(row.n_rejected),
        value: opt(row.cond_rate),
        d_a: row.d_a,
        r_a: row.r_a,
        ..CsvLine::section(arm, "cell")
    }
    .with_cell(&row.cell)
}

fn report_lines(arm: &str, report: &SimulationReport) -> Vec<CsvLine> {
    let mut lines = vec![
        CsvLine::estimate(arm, "expected_ratio", &report.expected_ratio),
        CsvLine::estimate(arm, "rejection_rate", &report.overall_rejection_rate),
    ];
    if let Some(e) = &report.e_value_mean {
        lines.push(CsvLine::estimate(arm, "e_value_mean", e));
    }
    if let Some(exact) = report
        .analytic_reference
        .as_ref()
        .and_then(|r| r.expected_ratio.finite())
    {
        lines.push(CsvLine {
            value: num(exact),
            ..CsvLine::section(arm, "closed_form_expected_ratio")
        });
    }
    lines.extend(report.rows.iter().map(|row| row_line(arm, row)));
    lines
}

fn verdict_lines(arm: &str, verdict: &Verdict) -> Vec<CsvLine> {
    match verdict {
        Verdict::Valid => vec![CsvLine {
            value: "valid".into(),
            ..CsvLine::section(arm, "verdict")
        }],
        Verdict::Violated { margin } => vec![
            CsvLine {
                value: "violated".into(),
                ..CsvLine::section(arm, "verdict")
            },
            CsvLine {
                value: num(*margin),
                ..CsvLine::section(arm, "violation_margin")
            },
        ],
    }
}

pub fn exact_csv(out: &ExactOutput) -> Result<String, CliError> {
    write_lines(&closed_form_lines("exact", &out.report))
}

pub fn report_csv(report: &SimulationReport) -> Result<String, CliError> {
    write_lines(&report_lines("simulated", report))
}

pub fn compare_csv(cmp: &CompareReport) -> Result<String, CliError> {
    let mut lines = report_lines("raw", &cmp.raw);
    lines.extend(verdict_lines("raw", &cmp.raw_verdict));
    lines.extend(report_lines("calibrated", &cmp.calibrated));
    lines.extend(verdict_lines("calibrated", &cmp.calibrated_verdict));
    write_lines(&lines)
}

pub fn sweep_csv(rows: &[SweepRow]) -> Result<String, CliError> {
    let mut writer = csv_writer();
    writer.write_record([
        "axis", "value", "n", "mean", "std_error", "ci95_low", "ci95_high", "closed_form",
        "z_vs_closed_form", "valid",
    ])?;
    for r in rows {
        writer.write_record([
            r.axis.name().to_string(),
            num(r.value),
            r.n.to_string(),
            num(r.mean),
            num(r.std_error),
            num(r.ci95_low),
            num(r.ci95_high),
            opt(r.closed_form),
            opt(r.z_vs_closed_form),
            r.valid.to_string(),
        ])?;
    }
    finish(writer)
}

fn cell_label(cell: &Cell) -> String {
    match *cell {
        Cell::Point { a } => format!("a = {}", sig(a.value())),
        Cell::Bin { lo, hi } => format!("({}, {}]", sig(lo), sig(hi)),
    }
}

pub fn exact_table(out: &ExactOutput) -> String {
    let report = &out.report;
    let mut s = String::new();
    let _ = writeln!(s, "strategy    {}", out.strategy);
    let _ = writeln!(s, "derivation  {}", serde_json::to_value(report.derivation).unwrap().as_str().unwrap_or(""));
    let _ = writeln!(s);
    let _ = writeln!(s, "{:<30} {:>18} {:>18} {:>18}", "alpha", "P(reject | alpha)", "d_a", "r_a");
    for rate in &report.rates {
        let (label, d, r) = match rate.cell {
            Cell::Bin { lo, hi } => (
                format!("({}, {})", sig(lo), sig(hi)),
                "1 - a".to_string(),
                "1/a".to_string(),
            ),
            Cell::Point { .. } => (cell_label(&rate.cell), sig_opt(rate.d_a), sig_opt(rate.r_a)),
        };
        let _ = writeln!(s, "{:<30} {:>18} {:>18} {:>18}", label, sig(rate.cond_rate), d, r);
    }
    let _ = writeln!(s);
    match report.expected_ratio {
        ExpectedRatio::Finite { value } => {
            let _ = writeln!(s, "E r_alpha = {}", sig(value));
        }
        ExpectedRatio::Diverges => {
            let _ = writeln!(s, "E r_alpha = DIVERGES (∞)");
            let _ = writeln!(s, "  truncated at eps: E r_alpha = 1 + ln(C / eps), unbounded as eps -> 0");
        }
    }
    s
}

fn estimate_text(est: &Estimate) -> String {
    format!(
        "{} ± {} (95% CI {} .. {})",
        sig(est.mean),
        sig(est.std_error),
        sig(est.ci95_low),
        sig(est.ci95_high)
    )
}

fn report_table(report: &SimulationReport, s: &mut String) {
    let cfg = &report.config;
    let _ = writeln!(s, "strategy    {}", cfg.strategy);
    let _ = writeln!(s, "evidence    {}", serde_json::to_string(&cfg.evidence).unwrap_or_default());
    let _ = writeln!(s, "trials      {}    seed {}", cfg.n_trials, cfg.seed);
    let _ = writeln!(s);
    let _ = writeln!(s, "E r_alpha        {}", estimate_text(&report.expected_ratio));
    if let Some(exact) = report.analytic_reference.as_ref().and_then(|r| r.expected_ratio.finite()) {
        let _ = writeln!(s, "closed form      {}", sig(exact));
    }
    let _ = writeln!(s, "rejection rate   {}", estimate_text(&report.overall_rejection_rate));
    if let Some(e) = &report.e_value_mean {
        let _ = writeln!(s, "mean e-value     {}", estimate_text(e));
    }
    if report.tail_warning {
        let _ = writeln!(
            s,
            "warning: a single trial contributes up to {} to the sum; the normal CI is unreliable",
            sig(report.max_ratio_term)
        );
    }
    let _ = writeln!(s);
    if report.binned_rows {
        let _ = writeln!(s, "bins are reported at their geometric midpoint a");
    }
    let _ = writeln!(
        s,
        "{:<40} {:>10} {:>10} {:>16} {:>16} {:>16}",
        "alpha", "n_cond", "n_rej", "P(reject|alpha)", "d_a", "r_a"
    );
    for row in &report.rows {
        let _ = writeln!(
            s,
            "{:<40} {:>10} {:>10} {:>16} {:>16} {:>16}",
            cell_label(&row.cell),
            row.n_conditional,
            row.n_rejected,
            sig_opt(row.cond_rate),
            sig_opt(row.d_a),
            sig_opt(row.r_a)
        );
    }
}

pub fn agreement_line(oracle_z: Option<f64>) -> Option<String> {
    oracle_z.map(|z| {
        format!(
            "oracle agreement: |estimate - closed form| = {} SE ({})",
            sig(z),
            if z > ORACLE_Z_LIMIT { "FAIL, limit 6" } else { "ok, limit 6" }
        )
    })
}

pub fn simulate_table(out: &SimulateOutput) -> String {
    let mut s = String::new();
    report_table(&out.report, &mut s);
    if let Some(line) = agreement_line(out.oracle_z) {
        let _ = writeln!(s);
        let _ = writeln!(s, "{line}");
    }
    s
}

fn verdict_text(v: &Verdict) -> String {
    match v {
        Verdict::Valid => "valid".into(),
        Verdict::Violated { margin } => format!("violated (E r_alpha exceeds 1 by {})", sig(*margin)),
    }
}

pub fn compare_table(cmp: &CompareReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "== raw p-values (one-sided z-test) ==");
    report_table(&cmp.raw, &mut s);
    let _ = writeln!(s);
    let _ = writeln!(s, "== calibrated p* = min(1, 1/e) ==");
    report_table(&cmp.calibrated, &mut s);
    let _ = writeln!(s);
    let _ = writeln!(s, "post-hoc validity (E r_alpha <= 1 + {} SE)", sig(cmp.z_slack));
    let _ = writeln!(s, "  raw p:  {}", verdict_text(&cmp.raw_verdict));
    let _ = writeln!(s, "  p*:     {}", verdict_text(&cmp.calibrated_verdict));
    s
}

pub fn sweep_table(rows: &[SweepRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<8} {:>14} {:>14} {:>14} {:>14} {:>10} {:>6}",
        "axis", "value", "E r_alpha", "SE", "closed form", "|z|", "valid"
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{:<8} {:>14} {:>14} {:>14} {:>14} {:>10} {:>6}",
            r.axis.name(),
            sig(r.value),
            sig(r.mean),
            sig(r.std_error),
            sig_opt(r.closed_form),
            sig_opt(r.z_vs_closed_form),
            r.valid
        );
    }
    s
}
