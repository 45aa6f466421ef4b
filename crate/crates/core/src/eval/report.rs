use std::fmt::Write;

use super::{InstanceRow, MetricReport};

pub const CSV_HEADER: &str = "id,step,inst,tool,arg,summ,error,ans,ans_i";

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:6.1}")).unwrap_or_else(|| "     -".into())
}

pub fn render_text(report: &MetricReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "instances {:>6}   steps {:>6}", report.instances, report.steps);
    let _ = writeln!(out, "{:<10}{:>8}", "metric", "value");
    for (name, v) in [
        ("inst", report.inst_acc),
        ("tool", report.tool_acc),
        ("arg", report.arg_acc),
        ("summ", report.summ_acc),
        ("ans", report.ans_acc),
        ("ans_i", report.ans_acc_i),
    ] {
        let _ = writeln!(out, "{name:<10}{:>8}", cell(v));
    }
    if let Some(e) = &report.error_rates {
        let _ = writeln!(out, "{:<10}{:>8}", "err_fmt", cell(Some(e.format_pct)));
        let _ = writeln!(out, "{:<10}{:>8}", "err_arg", cell(Some(e.arg_pct)));
        let _ = writeln!(out, "{:<10}{:>8}", "err_na", cell(Some(e.na_pct)));
    }
    out
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

fn row_fields(row: &InstanceRow) -> [String; 9] {
    let step = row.step.map(|s| s.to_string()).unwrap_or_default();
    let (inst, tool, arg, summ, error) = match &row.score {
        Some(s) => (
            flag(s.inst).to_string(),
            flag(s.tool).to_string(),
            flag(s.arg).to_string(),
            flag(s.summ).to_string(),
            s.error.map(|e| e.as_str().to_string()).unwrap_or_default(),
        ),
        None => Default::default(),
    };
    let (ans, ans_i) = match &row.e2e {
        Some(e) => (flag(e.ans).to_string(), flag(e.ans_i).to_string()),
        None => Default::default(),
    };
    [row.id.clone(), step, inst, tool, arg, summ, error, ans, ans_i]
}

pub fn render_csv(report: &MetricReport) -> String {
    let mut w =
        csv::WriterBuilder::new().has_headers(false).terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let _ = w.write_record(CSV_HEADER.split(','));
    for row in &report.rows {
        let _ = w.write_record(row_fields(row));
    }
    String::from_utf8(w.into_inner().unwrap_or_default()).unwrap_or_default()
}
