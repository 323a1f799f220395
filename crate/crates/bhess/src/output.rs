//! Files written after an experiment: median CSVs, a summary, the manifest
//! and SVG plots.

use std::fs;
use std::path::{Path, PathBuf};

use bhess_core::solvers::StepRule;
use plotters::coord::Shift;
use plotters::prelude::*;

use crate::error::{BenchError, Result};
use crate::harness::{step_rule_tag, AggregateResult, SolverAggregate};
use crate::io::{fmt_real, save_trace_csv, write_manifest};

pub const MANIFEST_FILE: &str = "manifest.txt";
pub const SUMMARY_FILE: &str = "summary.csv";

pub fn median_csv_name(entry: &SolverAggregate) -> String {
    format!("median_{}_{}.csv", entry.name, step_rule_tag(entry.step_rule))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))
}

fn check_nonempty(result: &AggregateResult) -> Result<()> {
    if result.entries.is_empty() {
        return Err(BenchError::Spec("the result has no solver entries".into()));
    }
    Ok(())
}

/// One median CSV per (solver, step rule) plus `summary.csv`.
pub fn emit_csv(result: &AggregateResult, dir: &Path) -> Result<Vec<PathBuf>> {
    check_nonempty(result)?;
    ensure_dir(dir)?;
    let spec = &result.spec;
    let mut written = Vec::new();
    for e in &result.entries {
        let ok = e.runs.len() - e.failures();
        let comments = vec![
            format!("solver={} step_rule={}", e.name, step_rule_tag(e.step_rule)),
            format!(
                "medians over {ok} of {} realizations; shorter traces are padded with their final value",
                spec.realizations
            ),
            "alpha and beta are medians over runs still iterating; restart counts runs that restarted".into(),
            format!(
                "median iterations to reach f - f_ref <= {} (f_0 - f_ref): {}",
                spec.tolerance,
                fmt_iters(e.median_iters_to_tol)
            ),
        ];
        let path = dir.join(median_csv_name(e));
        save_trace_csv(&path, &e.median_rows(spec.record_timing), &comments)?;
        written.push(path);
    }
    let path = dir.join(SUMMARY_FILE);
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record([
        "solver",
        "step_rule",
        "successes",
        "median_iters_to_tol",
        "restarts",
        "final_median_f",
        "total_seconds",
    ])?;
    for e in &result.entries {
        w.write_record([
            e.name.clone(),
            step_rule_tag(e.step_rule).to_owned(),
            (e.runs.len() - e.failures()).to_string(),
            fmt_iters(e.median_iters_to_tol),
            e.total_restarts().to_string(),
            fmt_real(*e.median_f.last().unwrap_or(&f64::NAN)),
            if spec.record_timing { fmt_real(e.total_seconds) } else { String::new() },
        ])?;
    }
    w.flush().map_err(|e| BenchError::io(&path, e))?;
    written.push(path);
    Ok(written)
}

fn fmt_iters(k: f64) -> String {
    if k.is_finite() {
        format!("{k}")
    } else {
        String::new()
    }
}

pub fn emit_manifest(result: &AggregateResult, dir: &Path) -> Result<PathBuf> {
    ensure_dir(dir)?;
    let path = dir.join(MANIFEST_FILE);
    write_manifest(&path, &result.spec.manifest())?;
    Ok(path)
}

const COLORS: [RGBColor; 8] = [
    RGBColor(0, 0, 0),
    RGBColor(214, 39, 40),
    RGBColor(31, 119, 180),
    RGBColor(255, 127, 14),
    RGBColor(44, 160, 44),
    RGBColor(148, 103, 189),
    RGBColor(140, 86, 75),
    RGBColor(227, 119, 194),
];

fn plot_err<E: std::fmt::Display>(e: E) -> BenchError {
    BenchError::Plot(e.to_string())
}

fn log_gap(g: f64) -> f64 {
    g.max(1e-300).log10()
}

struct Series<'a> {
    label: String,
    color: RGBColor,
    faded: bool,
    entry: &'a SolverAggregate,
}

fn bounds(points: impl Iterator<Item = (f64, f64)>) -> (f64, f64, f64, f64) {
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (x, y) in points.filter(|(x, y)| x.is_finite() && y.is_finite()) {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        return (0.0, 1.0, 0.0, 1.0);
    }
    let pad = |a: f64, b: f64| if b > a { (b - a) * 0.03 } else { 0.5 };
    let (px, py) = (pad(x0, x1), pad(y0, y1));
    (x0 - px, x1 + px, y0 - py, y1 + py)
}

fn draw_panel(
    area: &DrawingArea<SVGBackend<'_>, Shift>,
    caption: &str,
    x_label: &str,
    series: &[Series<'_>],
    x_of: &dyn Fn(&SolverAggregate, usize) -> f64,
) -> Result<()> {
    let pts = |s: &Series<'_>| -> Vec<(f64, f64)> {
        (0..s.entry.median_gap.len())
            .map(|k| (x_of(s.entry, k), log_gap(s.entry.median_gap[k])))
            .collect()
    };
    let all: Vec<Vec<(f64, f64)>> = series.iter().map(pts).collect();
    let (x0, x1, y0, y1) = bounds(all.iter().flatten().copied());
    let mut chart = ChartBuilder::on(area)
        .caption(caption, ("sans-serif", 18))
        .margin(10)
        .x_label_area_size(35)
        .y_label_area_size(55)
        .build_cartesian_2d(x0..x1, y0..y1)
        .map_err(plot_err)?;
    chart
        .configure_mesh()
        .x_desc(x_label)
        .y_desc("log10 median (f - f_sat)")
        .draw()
        .map_err(plot_err)?;
    for (s, p) in series.iter().zip(all) {
        let color = if s.faded { s.color.mix(0.45) } else { s.color.mix(1.0) };
        let width = if s.faded { 1 } else { 2 };
        chart
            .draw_series(LineSeries::new(p, color.stroke_width(width)))
            .map_err(plot_err)?
            .label(s.label.clone())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], color.stroke_width(2)));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.85))
        .border_style(BLACK)
        .position(SeriesLabelPosition::UpperRight)
        .draw()
        .map_err(plot_err)?;
    Ok(())
}

fn convergence_plot(path: &Path, title: &str, series: &[Series<'_>]) -> Result<()> {
    let root = SVGBackend::new(path, (900, 900)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let (top, bottom) = root.split_vertically(450);
    draw_panel(&top, &format!("{title}: objective vs iteration"), "iteration", series, &|_, k| k as f64)?;
    draw_panel(&bottom, &format!("{title}: objective vs time"), "median seconds", series, &|e, k| {
        e.median_seconds[k]
    })?;
    root.present().map_err(plot_err)?;
    Ok(())
}

fn overlay_plot(path: &Path, result: &AggregateResult) -> Result<()> {
    let root = SVGBackend::new(path, (1200, 420)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let panels = root.split_evenly((1, result.overlay.len().max(1)));
    for (curve, area) in result.overlay.iter().zip(&panels) {
        let xs: Vec<f64> = curve.t.iter().map(|t| t / curve.alpha).collect();
        let (x0, x1, y0, y1) = bounds(
            xs.iter()
                .zip(&curve.exact)
                .chain(xs.iter().zip(&curve.model))
                .map(|(x, y)| (*x, *y)),
        );
        let mut chart = ChartBuilder::on(area)
            .caption(
                format!("BH-GD iteration {} (gap {:.2}%)", curve.iter, 100.0 * curve.max_rel_gap),
                ("sans-serif", 16),
            )
            .margin(10)
            .x_label_area_size(35)
            .y_label_area_size(70)
            .build_cartesian_2d(x0..x1, y0..y1)
            .map_err(plot_err)?;
        chart
            .configure_mesh()
            .x_desc("t / alpha")
            .y_desc("objective")
            .draw()
            .map_err(plot_err)?;
        let exact: Vec<(f64, f64)> = xs.iter().copied().zip(curve.exact.iter().copied()).collect();
        let model: Vec<(f64, f64)> = xs.iter().copied().zip(curve.model.iter().copied()).collect();
        chart
            .draw_series(LineSeries::new(exact, BLACK.stroke_width(2)))
            .map_err(plot_err)?
            .label("f(x + t s)")
            .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], BLACK.stroke_width(2)));
        chart
            .draw_series(LineSeries::new(model, COLORS[1].stroke_width(1)))
            .map_err(plot_err)?
            .label("quadratic model")
            .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], COLORS[1].stroke_width(2)));
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.85))
            .border_style(BLACK)
            .draw()
            .map_err(plot_err)?;
    }
    root.present().map_err(plot_err)?;
    Ok(())
}

/// Convergence plots per step rule, an overlay of all rules and, when the
/// result carries it, the step-size illustration.
pub fn emit_plots(result: &AggregateResult, dir: &Path) -> Result<Vec<PathBuf>> {
    check_nonempty(result)?;
    ensure_dir(dir)?;
    let mut names: Vec<&str> = Vec::new();
    for e in &result.entries {
        if !names.contains(&e.name.as_str()) {
            names.push(&e.name);
        }
    }
    let color_of = |name: &str| COLORS[names.iter().position(|n| *n == name).unwrap_or(0) % COLORS.len()];
    let rules: Vec<StepRule> = result.spec.step_rules.clone();
    let mut written = Vec::new();
    for &rule in &rules {
        let series: Vec<Series<'_>> = result
            .entries
            .iter()
            .filter(|e| e.step_rule == rule)
            .map(|e| Series {
                label: e.name.clone(),
                color: color_of(&e.name),
                faded: false,
                entry: e,
            })
            .collect();
        let path = dir.join(format!("convergence_{}.svg", step_rule_tag(rule)));
        convergence_plot(&path, step_rule_tag(rule), &series)?;
        written.push(path);
    }
    if rules.len() > 1 {
        let series: Vec<Series<'_>> = result
            .entries
            .iter()
            .map(|e| Series {
                label: format!("{} ({})", e.name, step_rule_tag(e.step_rule)),
                color: color_of(&e.name),
                faded: e.step_rule != rules[0],
                entry: e,
            })
            .collect();
        let path = dir.join("convergence_overlay.svg");
        convergence_plot(&path, "all step rules", &series)?;
        written.push(path);
    }
    if !result.overlay.is_empty() {
        let path = dir.join("step_overlay.svg");
        overlay_plot(&path, result)?;
        written.push(path);
    }
    Ok(written)
}
