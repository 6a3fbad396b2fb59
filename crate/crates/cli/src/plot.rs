//! Static plots from an experiment results CSV.
//!
//! One SVG per scenario present in the file:
//! - `nested`: risk ratio against n on a log x-axis, one line per method;
//! - `allsubset`: risk ratio against p, one line per method, plus the
//!   dashed `2 log p` reference path;
//! - `pcr`: mean risk as bars, one per (method, n).
//!
//! An empty results file yields a single empty-axes `empty.svg`.

use std::collections::BTreeMap;

use anyhow::{bail, Context};

use crate::svg::Svg;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_L: f64 = 64.0;
const MARGIN_R: f64 = 24.0;
const MARGIN_T: f64 = 28.0;
const MARGIN_B: f64 = 48.0;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

#[derive(Debug, Clone)]
pub struct PlotRow {
    pub scenario: String,
    pub method: String,
    pub n: usize,
    pub p: usize,
    pub risk_ratio: f64,
    pub ref_two_log_p: Option<f64>,
}

/// Parse the results CSV produced by the simulate command.
pub fn parse_results(text: &str) -> anyhow::Result<Vec<PlotRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(text.as_bytes());
    let headers = reader.headers().context("results CSV has no header")?.clone();
    let col = |name: &str| -> anyhow::Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| anyhow::anyhow!("results CSV is missing column '{name}'"))
    };
    let (c_scn, c_mth, c_n, c_p, c_ratio, c_ref) = (
        col("scenario")?,
        col("method")?,
        col("n")?,
        col("p")?,
        col("risk_ratio")?,
        col("ref_2logp")?,
    );
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("results CSV row {}", i + 2))?;
        let field = |c: usize| record.get(c).unwrap_or("").trim().to_string();
        let parse_f = |c: usize, name: &str| -> anyhow::Result<f64> {
            field(c)
                .parse::<f64>()
                .with_context(|| format!("row {}: bad {name} '{}'", i + 2, field(c)))
        };
        let parse_u = |c: usize, name: &str| -> anyhow::Result<usize> {
            field(c)
                .parse::<usize>()
                .with_context(|| format!("row {}: bad {name} '{}'", i + 2, field(c)))
        };
        rows.push(PlotRow {
            scenario: field(c_scn),
            method: field(c_mth),
            n: parse_u(c_n, "n")?,
            p: parse_u(c_p, "p")?,
            risk_ratio: parse_f(c_ratio, "risk_ratio")?,
            ref_two_log_p: if field(c_ref).is_empty() {
                None
            } else {
                Some(parse_f(c_ref, "ref_2logp")?)
            },
        });
    }
    Ok(rows)
}

fn axes(svg: &mut Svg, x_label: &str, y_label: &str) {
    svg.line(MARGIN_L, HEIGHT - MARGIN_B, WIDTH - MARGIN_R, HEIGHT - MARGIN_B, "#000", false);
    svg.line(MARGIN_L, MARGIN_T, MARGIN_L, HEIGHT - MARGIN_B, "#000", false);
    svg.text(WIDTH / 2.0, HEIGHT - 12.0, "middle", 12.0, x_label);
    svg.text(16.0, MARGIN_T - 8.0, "start", 12.0, y_label);
}

struct Scale {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Scale {
    fn x(&self, v: f64) -> f64 {
        let span = (self.x_max - self.x_min).max(1e-12);
        MARGIN_L + (v - self.x_min) / span * (WIDTH - MARGIN_L - MARGIN_R)
    }

    fn y(&self, v: f64) -> f64 {
        let span = (self.y_max - self.y_min).max(1e-12);
        HEIGHT - MARGIN_B - (v - self.y_min) / span * (HEIGHT - MARGIN_T - MARGIN_B)
    }
}

fn legend(svg: &mut Svg, methods: &[String]) {
    for (k, method) in methods.iter().enumerate() {
        let y = MARGIN_T + 14.0 * k as f64;
        let x = WIDTH - MARGIN_R - 110.0;
        svg.line(x, y, x + 18.0, y, PALETTE[k % PALETTE.len()], false);
        svg.text(x + 24.0, y + 4.0, "start", 10.0, method);
    }
}

/// Line chart of risk ratio against a numeric x value (n or p), optionally
/// log-scaled, optionally with a dashed reference path.
fn line_chart(
    rows: &[&PlotRow],
    x_of: impl Fn(&PlotRow) -> f64,
    log_x: bool,
    x_label: &str,
    reference: Option<Vec<(f64, f64)>>,
) -> String {
    let mut svg = Svg::new(WIDTH, HEIGHT);
    axes(&mut svg, x_label, "risk ratio");

    let xs: Vec<f64> = rows
        .iter()
        .map(|r| if log_x { x_of(r).ln() } else { x_of(r) })
        .collect();
    let mut ys: Vec<f64> = rows.iter().map(|r| r.risk_ratio).collect();
    if let Some(reference) = &reference {
        ys.extend(reference.iter().map(|&(_, y)| y));
    }
    let scale = Scale {
        x_min: xs.iter().cloned().fold(f64::INFINITY, f64::min),
        x_max: xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        y_min: 0.0f64.min(ys.iter().cloned().fold(f64::INFINITY, f64::min)),
        y_max: ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max) * 1.08,
    };

    // x ticks at the observed values.
    let mut tick_vals: Vec<f64> = rows.iter().map(|r| x_of(r)).collect();
    tick_vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    tick_vals.dedup();
    for v in &tick_vals {
        let x = scale.x(if log_x { v.ln() } else { *v });
        svg.line(x, HEIGHT - MARGIN_B, x, HEIGHT - MARGIN_B + 4.0, "#000", false);
        svg.text(x, HEIGHT - MARGIN_B + 16.0, "middle", 10.0, &format!("{v}"));
    }
    // y ticks: min, 1.0, max.
    for v in [scale.y_min, 1.0, scale.y_max / 1.08] {
        if v >= scale.y_min && v <= scale.y_max {
            let y = scale.y(v);
            svg.line(MARGIN_L - 4.0, y, MARGIN_L, y, "#000", false);
            svg.text(MARGIN_L - 8.0, y + 3.0, "end", 10.0, &format!("{v:.2}"));
        }
    }

    if let Some(reference) = reference {
        let pts: Vec<(f64, f64)> = reference
            .iter()
            .map(|&(x, y)| (scale.x(if log_x { x.ln() } else { x }), scale.y(y)))
            .collect();
        svg.polyline(&pts, "#d62728", true);
    }

    let mut methods: Vec<String> = rows.iter().map(|r| r.method.clone()).collect();
    methods.sort();
    methods.dedup();
    for (k, method) in methods.iter().enumerate() {
        let mut pts: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| &r.method == method)
            .map(|r| (x_of(r), r.risk_ratio))
            .collect();
        pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let scaled: Vec<(f64, f64)> = pts
            .iter()
            .map(|&(x, y)| (scale.x(if log_x { x.ln() } else { x }), scale.y(y)))
            .collect();
        let color = PALETTE[k % PALETTE.len()];
        svg.polyline(&scaled, color, false);
        for &(x, y) in &scaled {
            svg.circle(x, y, 2.5, color);
        }
    }
    legend(&mut svg, &methods);
    svg.into_string()
}

/// Bar chart of mean risk per (method, n) for the pcr scenario.
fn bar_chart(rows: &[&PlotRow]) -> String {
    let mut svg = Svg::new(WIDTH, HEIGHT);
    axes(&mut svg, "method", "mean risk");
    let y_max = rows.iter().map(|r| r.risk_ratio).fold(0.0f64, f64::max) * 1.1;
    let scale = Scale { x_min: 0.0, x_max: 1.0, y_min: 0.0, y_max };

    let mut labels: Vec<(String, f64)> = rows
        .iter()
        .map(|r| (format!("{}@n={}", r.method, r.n), r.risk_ratio))
        .collect();
    labels.sort_by(|a, b| a.0.cmp(&b.0));

    let count = labels.len() as f64;
    let band = (WIDTH - MARGIN_L - MARGIN_R) / count;
    for (k, (label, value)) in labels.iter().enumerate() {
        let x0 = MARGIN_L + band * k as f64 + band * 0.15;
        let y = scale.y(*value);
        svg.rect(x0, y, band * 0.7, (HEIGHT - MARGIN_B) - y, PALETTE[k % PALETTE.len()]);
        svg.text(x0 + band * 0.35, HEIGHT - MARGIN_B + 16.0, "middle", 9.0, label);
        svg.text(x0 + band * 0.35, y - 4.0, "middle", 9.0, &format!("{value:.4}"));
    }
    // y ticks.
    for frac in [0.0, 0.5, 1.0] {
        let v = y_max * frac;
        let y = scale.y(v);
        svg.line(MARGIN_L - 4.0, y, MARGIN_L, y, "#000", false);
        svg.text(MARGIN_L - 8.0, y + 3.0, "end", 10.0, &format!("{v:.4}"));
    }
    svg.into_string()
}

/// Build `(file name, svg bytes)` pairs for every scenario in the rows. An
/// empty row set yields a single empty-axes plot.
pub fn render_all(rows: &[PlotRow]) -> anyhow::Result<Vec<(String, String)>> {
    if rows.is_empty() {
        let mut svg = Svg::new(WIDTH, HEIGHT);
        axes(&mut svg, "", "");
        return Ok(vec![("empty.svg".to_string(), svg.into_string())]);
    }
    let mut by_scenario: BTreeMap<&str, Vec<&PlotRow>> = BTreeMap::new();
    for row in rows {
        by_scenario.entry(row.scenario.as_str()).or_default().push(row);
    }
    let mut out = Vec::new();
    for (scenario, rows) in by_scenario {
        let svg = match scenario {
            "nested" => line_chart(&rows, |r| r.n as f64, true, "n (log scale)", None),
            "allsubset" => {
                let mut reference: Vec<(f64, f64)> = rows
                    .iter()
                    .filter_map(|r| r.ref_two_log_p.map(|v| (r.p as f64, v)))
                    .collect();
                reference.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
                reference.dedup_by(|a, b| a.0 == b.0);
                let reference = if reference.is_empty() { None } else { Some(reference) };
                line_chart(&rows, |r| r.p as f64, false, "p", reference)
            }
            "pcr" => bar_chart(&rows),
            other => bail!("unknown scenario '{other}' in results CSV"),
        };
        out.push((format!("{scenario}.svg"), svg));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "scenario,method,n,p,reps,mean_loss,denominator,risk_ratio,mc_se,risk_ratio_no_offset,ref_2logp\n\
nested,mma_group,100,100,3,0.05,0.04,1.25,0.001,,\n\
nested,mma_group,400,400,3,0.02,0.018,1.11,0.0005,,\n";

    #[test]
    fn parses_and_renders_nested() {
        let rows = parse_results(SAMPLE).unwrap();
        assert_eq!(rows.len(), 2);
        let files = render_all(&rows).unwrap();
        assert_eq!(files.len(), 1);
        assert_eq!(files[0].0, "nested.svg");
        assert!(files[0].1.contains("<polyline"));
    }

    #[test]
    fn empty_csv_gives_empty_axes() {
        let rows = parse_results(
            "scenario,method,n,p,reps,mean_loss,denominator,risk_ratio,mc_se,risk_ratio_no_offset,ref_2logp\n",
        )
        .unwrap();
        assert!(rows.is_empty());
        let files = render_all(&rows).unwrap();
        assert_eq!(files[0].0, "empty.svg");
        assert!(files[0].1.contains("<line"));
    }

    #[test]
    fn allsubset_has_dashed_reference() {
        let csv = "scenario,method,n,p,reps,mean_loss,denominator,risk_ratio,mc_se,risk_ratio_no_offset,ref_2logp\n\
allsubset,adap,2500,50,3,0.02,0.006,3.3,0.001,3.5,7.824046010856292\n\
allsubset,adap,2500,80,3,0.03,0.007,4.2,0.001,4.4,8.76405327109479\n";
        let rows = parse_results(csv).unwrap();
        let files = render_all(&rows).unwrap();
        assert!(files[0].1.contains("stroke-dasharray"));
    }
}
