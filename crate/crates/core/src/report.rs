//! Output rendering. Every artifact carries the format version and the full
//! run configuration, and contains no timestamps, so identical runs produce
//! identical bytes.

use std::fmt::Write as _;

use serde::Serialize;

use crate::config::RunConfig;
use crate::evaluation::{ComparisonTable, EvaluationReport};
use crate::FORMAT_VERSION;

#[derive(Debug, Clone, Serialize)]
pub struct Document<'a, T: Serialize> {
    pub format_version: &'static str,
    pub kind: &'a str,
    pub config: &'a RunConfig,
    pub body: &'a T,
}

/// Pretty JSON envelope around `body`.
pub fn json_document<T: Serialize>(kind: &str, config: &RunConfig, body: &T) -> String {
    let doc = Document {
        format_version: FORMAT_VERSION,
        kind,
        config,
        body,
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
    s.push('\n');
    s
}

/// Prefixes CSV text with `#` comment lines naming the format version and config.
pub fn csv_document(kind: &str, config: &RunConfig, csv: &str) -> String {
    let cfg = serde_json::to_string(config).expect("config serializes");
    format!("# {FORMAT_VERSION} {kind}\n# config: {cfg}\n{csv}")
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_else(|| "n/a".into())
}

pub fn comparison_csv(table: &ComparisonTable) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "dataset",
        "protocol",
        "projects",
        "reference_projects",
        "mmre_percent",
        "reference_mmre_percent",
        "mmre_delta",
        "dataset_mean_mmre_percent",
        "actual_avg_effort",
        "reference_actual_avg_effort",
        "actual_avg_delta",
        "estimated_avg_effort",
        "reference_estimated_avg_effort",
        "estimated_avg_delta",
    ])
    .expect("in-memory write");
    for r in &table.rows {
        w.write_record([
            r.dataset.clone(),
            r.protocol.clone(),
            r.projects.to_string(),
            r.reference_projects
                .map(|n| n.to_string())
                .unwrap_or_else(|| "n/a".into()),
            format!("{:.6}", r.mmre_percent),
            opt(r.reference_mmre_percent),
            opt(r.mmre_delta),
            opt(r.dataset_mean_mmre_percent),
            format!("{:.6}", r.actual_avg_effort),
            opt(r.reference_actual_avg_effort),
            opt(r.actual_avg_delta),
            format!("{:.6}", r.estimated_avg_effort),
            opt(r.reference_estimated_avg_effort),
            opt(r.estimated_avg_delta),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

/// Per-dataset summary lines for a terminal.
pub fn evaluation_text(reports: &[EvaluationReport]) -> String {
    let mut out = String::new();
    for r in reports {
        let _ = writeln!(
            out,
            "{}: {} projects, {}, MMRE {:.2}% ({} failed), mean actual {:.3}, mean estimate {:.3}",
            r.dataset,
            r.project_count,
            r.protocol,
            r.mmre_percent,
            r.failures,
            r.actual_mean_effort,
            r.estimated_mean_effort
        );
        for b in &r.baselines {
            let _ = writeln!(out, "  baseline {}: MMRE {:.2}%", b.method, b.mmre_percent);
        }
    }
    out
}

/// One bar series in a grouped chart.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    /// One value per group; `None` leaves a gap.
    pub values: Vec<Option<f64>>,
}

const PALETTE: [&str; 6] = ["#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#edc948"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn nice_ceiling(v: f64) -> f64 {
    if !(v > 0.0) {
        return 1.0;
    }
    let mag = 10f64.powf(v.log10().floor());
    for step in [1.0, 2.0, 2.5, 5.0, 10.0] {
        if step * mag >= v {
            return step * mag;
        }
    }
    10.0 * mag
}

/// Grouped vertical bar chart as standalone SVG.
pub fn grouped_bar_svg(title: &str, y_label: &str, groups: &[String], series: &[Series]) -> String {
    let (width, height) = (720.0, 420.0);
    let (left, right, top, bottom) = (70.0, 200.0, 50.0, 60.0);
    let plot_w = width - left - right;
    let plot_h = height - top - bottom;
    let max = series
        .iter()
        .flat_map(|s| s.values.iter().flatten())
        .fold(0.0f64, |m, v| m.max(*v));
    let y_max = nice_ceiling(max);
    let y = |v: f64| top + plot_h - plot_h * (v / y_max);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="28" text-anchor="middle" font-size="15">{}</text>"#,
        left + plot_w / 2.0,
        escape(title)
    );
    for i in 0..=5 {
        let v = y_max * i as f64 / 5.0;
        let yy = y(v);
        let _ = writeln!(
            s,
            r##"<line x1="{left}" y1="{yy:.1}" x2="{:.1}" y2="{yy:.1}" stroke="#dddddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"##,
            left + plot_w,
            left - 6.0,
            yy + 4.0,
            trim_number(v)
        );
    }
    let _ = writeln!(
        s,
        r#"<text transform="translate(18 {:.1}) rotate(-90)" text-anchor="middle">{}</text>"#,
        top + plot_h / 2.0,
        escape(y_label)
    );

    let group_w = plot_w / groups.len().max(1) as f64;
    let bar_w = group_w * 0.8 / series.len().max(1) as f64;
    for (g, name) in groups.iter().enumerate() {
        let gx = left + group_w * g as f64 + group_w * 0.1;
        for (k, ser) in series.iter().enumerate() {
            let Some(v) = ser.values.get(g).copied().flatten() else {
                continue;
            };
            let x = gx + bar_w * k as f64;
            let _ = writeln!(
                s,
                r#"<rect x="{x:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="{}"><title>{}: {}</title></rect>"#,
                y(v),
                bar_w,
                top + plot_h - y(v),
                PALETTE[k % PALETTE.len()],
                escape(&ser.label),
                trim_number(v)
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="9">{}</text>"#,
                x + bar_w / 2.0,
                y(v) - 3.0,
                trim_number(v)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            left + group_w * (g as f64 + 0.5),
            top + plot_h + 20.0,
            escape(name)
        );
    }
    let _ = writeln!(
        s,
        r#"<line x1="{left}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="black"/>"#,
        top + plot_h,
        left + plot_w,
        top + plot_h
    );
    for (k, ser) in series.iter().enumerate() {
        let ly = top + 10.0 + 20.0 * k as f64;
        let lx = left + plot_w + 15.0;
        let _ = writeln!(
            s,
            r#"<rect x="{lx:.1}" y="{:.1}" width="12" height="12" fill="{}"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            ly - 10.0,
            PALETTE[k % PALETTE.len()],
            lx + 18.0,
            ly,
            escape(&ser.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn trim_number(v: f64) -> String {
    let s = format!("{v:.2}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// MMRE chart: measured values next to the reference methods, one group per dataset.
pub fn comparison_svg(table: &ComparisonTable, config: &RunConfig) -> String {
    let groups: Vec<String> = table.rows.iter().map(|r| r.dataset.clone()).collect();
    let mut series = vec![Series {
        label: format!("This run ({})", config.estimation.mode),
        values: table.rows.iter().map(|r| Some(r.mmre_percent)).collect(),
    }];
    for m in &table.references.methods {
        series.push(Series {
            label: m.method.to_string(),
            values: table
                .rows
                .iter()
                .map(|r| crate::dataset::Preset::detect(&r.dataset).map(|p| m.mmre(p)))
                .collect(),
        });
    }
    let svg = grouped_bar_svg("MMRE by dataset", "MMRE (%)", &groups, &series);
    let cfg = serde_json::to_string(config)
        .expect("config serializes")
        .replace("--", "- -");
    svg.replacen("<rect", &format!("<!-- {FORMAT_VERSION} config: {cfg} -->\n<rect"), 1)
}
