use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{EmitFlags, ExperimentConfig, History, RunReport};
use crate::error::{FlexError, Result};

pub const CSV_HEADER: &str = "iteration,method,eta_or_mode,error_A_norm,reduction_factor,bound,precond_inner_iters";

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

/// 17 significant digits in scientific notation.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

/// One CSV table for one history, rows `0..=K`.
pub fn render_csv(h: &History) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for (i, e) in h.error_a_norms.iter().enumerate() {
        let reduction = if i == 0 { String::new() } else { format_real(e / h.error_a_norms[i - 1]) };
        let bound = h.bound_at(i).map(format_real).unwrap_or_default();
        let inner = match i.checked_sub(1).and_then(|k| h.inner_iterations.get(k).copied().flatten()) {
            Some(n) => n.to_string(),
            None => String::new(),
        };
        let _ = writeln!(out, "{i},{},{},{},{reduction},{bound},{inner}", h.method, h.variant, format_real(*e));
    }
    out
}

fn csv_name(config: &ExperimentConfig, h: &History) -> String {
    let variant = match h.variant.as_str() {
        "" => String::new(),
        v if v.parse::<f64>().is_ok() => format!("_eta{v}"),
        v => format!("_{v}"),
    };
    format!("{}_{}{variant}.csv", config.experiment, h.method)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Log-scale line chart of `‖e_k‖_A` against `k`, one polyline per history.
pub fn render_svg(report: &RunReport) -> String {
    let (w, h) = (800.0, 500.0);
    let (left, right, top, bottom) = (80.0, 200.0, 40.0, 60.0);
    let plot_w = w - left - right;
    let plot_h = h - top - bottom;

    let positive = || report.histories.iter().flat_map(|h| h.error_a_norms.iter().copied()).filter(|&e| e > 0.0 && e.is_finite());
    let lo = positive().fold(f64::INFINITY, f64::min);
    let hi = positive().fold(f64::NEG_INFINITY, f64::max);
    let (mut y0, mut y1) = if lo.is_finite() { (lo.log10().floor(), hi.log10().ceil()) } else { (0.0, 1.0) };
    if y1 <= y0 {
        y0 -= 1.0;
        y1 += 1.0;
    }
    let k_max = report.histories.iter().map(History::iterations).max().unwrap_or(0).max(1) as f64;
    let px = |k: f64| left + plot_w * k / k_max;
    let py = |e: f64| top + plot_h * (y1 - e.log10().clamp(y0, y1)) / (y1 - y0);

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{} (n = {})</text>"#,
        left + plot_w / 2.0,
        report.config.experiment,
        report.config.n
    );
    let _ = writeln!(s, r#"<rect x="{left}" y="{top}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#);

    let step = ((y1 - y0) / 10.0).ceil().max(1.0);
    let mut d = y0;
    while d <= y1 {
        let y = top + plot_h * (y1 - d) / (y1 - y0);
        let _ = writeln!(s, r##"<line x1="{left}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##, left + plot_w);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="end">1e{d}</text>"#,
            left - 6.0,
            y + 4.0
        );
        d += step;
    }
    let x_step = (k_max / 10.0).ceil().max(1.0);
    let mut k = 0.0;
    while k <= k_max {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="middle">{k}</text>"#,
            px(k),
            top + plot_h + 16.0
        );
        k += x_step;
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="13" text-anchor="middle">iteration</text>"#,
        left + plot_w / 2.0,
        h - 16.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 18 {:.2})">A-norm error</text>"#,
        top + plot_h / 2.0,
        top + plot_h / 2.0
    );

    for (i, hist) in report.histories.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let dash = if hist.method == "bound" { r#" stroke-dasharray="6 4""# } else { "" };
        let points: Vec<String> = hist
            .error_a_norms
            .iter()
            .enumerate()
            .filter(|(_, e)| e.is_finite() && **e > 0.0)
            .map(|(k, &e)| format!("{:.2},{:.2}", px(k as f64), py(e)))
            .collect();
        let label = escape(&hist.label());
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5"{dash} points="{}"><title>{label}</title></polyline>"#,
            points.join(" ")
        );
        let ly = top + 10.0 + 18.0 * i as f64;
        let lx = left + plot_w + 12.0;
        let _ = writeln!(s, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{colour}" stroke-width="2"{dash}/>"#, lx + 24.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12">{label}</text>"#, lx + 30.0, ly + 4.0);
    }
    s.push_str("</svg>\n");
    s
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".into(), |v| format!("{v:.6e}"))
}

/// Plain-text summary: per-history convergence figures and audit outcomes.
pub fn render_audit(report: &RunReport) -> String {
    let c = &report.config;
    let mut s = String::new();
    let _ = writeln!(s, "experiment {} n={} kappa_max={} seed={} iterations={}", c.experiment, c.n, c.kappa_max, c.seed, c.iterations);
    for h in &report.histories {
        let _ = writeln!(s);
        let _ = writeln!(s, "[{}] {}", h.label(), h.preconditioner);
        let _ = writeln!(s, "  iterations        {}", h.iterations());
        let _ = writeln!(s, "  final error       {}", opt(h.error_a_norms.last().copied()));
        let _ = writeln!(s, "  mean reduction    {}", opt(h.mean_reduction()));
        let _ = writeln!(s, "  iters to 1e-8     {}", h.iterations_to(1e-8).map_or("-".into(), |k| k.to_string()));
        if let Some(q) = h.bound_factor {
            let _ = writeln!(s, "  bound factor      {q:.6e}");
        }
        let inner: usize = h.inner_iterations.iter().flatten().sum();
        if inner > 0 {
            let _ = writeln!(s, "  inner iterations  {inner}");
        }
        if let Some(t) = &h.termination {
            let _ = writeln!(s, "  termination       {t:?}");
        }
        if let Some(f) = &h.failure {
            let _ = writeln!(s, "  FAILED            {f}");
        }
        for a in &h.audits {
            let verdict = if a.passed() { "ok" } else { "FLAGGED" };
            let _ = writeln!(s, "  audit {:<20} {:.3e} <= {:.0e}  {verdict}", a.name, a.value, a.threshold);
        }
    }
    let flagged = report.histories.iter().flat_map(|h| &h.audits).filter(|a| !a.passed()).count();
    let failed = report.failures().count();
    let _ = writeln!(s);
    let _ = writeln!(s, "summary: {failed} failed runs, {flagged} flagged audits");
    s
}

fn write(path: PathBuf, text: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    fs::write(&path, text).map_err(|source| FlexError::Io { path: path.clone(), source })?;
    written.push(path);
    Ok(())
}

/// Writes the requested artefacts into `dir` and returns their paths.
pub fn emit_report(report: &RunReport, flags: EmitFlags, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|source| FlexError::Io { path: dir.to_path_buf(), source })?;
    let mut written = Vec::new();
    if flags.csv {
        for h in report.histories.iter().filter(|h| !h.error_a_norms.is_empty()) {
            write(dir.join(csv_name(&report.config, h)), &render_csv(h), &mut written)?;
        }
    }
    if flags.svg {
        write(dir.join(format!("{}.svg", report.config.experiment)), &render_svg(report), &mut written)?;
    }
    if flags.audit {
        write(dir.join("audit.txt"), &render_audit(report), &mut written)?;
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::super::{run_experiment, ExperimentId};
    use super::*;

    fn small_fig1() -> ExperimentConfig {
        let mut c = ExperimentConfig::defaults(ExperimentId::Fig1);
        c.n = 40;
        c.iterations = 12;
        c
    }

    #[test]
    fn csv_layout() {
        let r = run_experiment(&small_fig1()).unwrap();
        let text = render_csv(&r.histories[1]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 14);
        assert!(!text.contains('\r'));
        let row0: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(row0.len(), 7);
        assert_eq!(&row0[..3], ["0", "alg1-modified", ""]);
        assert_eq!(row0[4], "");
        assert_eq!(row0[3], row0[5]);
        let row1: Vec<&str> = lines[2].split(',').collect();
        let q: f64 = row1[4].parse().unwrap();
        assert!((q - 1.0 / 3.0).abs() < 1e-10);
        let mantissa = row1[3].split('e').next().unwrap();
        assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17);
    }

    #[test]
    fn emits_expected_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = small_fig1();
        c.emit = EmitFlags { csv: true, svg: true, audit: true };
        c.out_dir = Some(dir.path().to_path_buf());
        let r = run_experiment(&c).unwrap();
        let files = emit_report(&r, c.emit, dir.path()).unwrap();
        let names: Vec<String> = files.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
        assert_eq!(
            names,
            ["fig1_full.csv", "fig1_alg1-modified.csv", "fig1_alg1-standard.csv", "fig1_bound.csv", "fig1.svg", "audit.txt"]
        );
        let audit = fs::read_to_string(dir.path().join("audit.txt")).unwrap();
        assert!(audit.contains("audit error-transition"));
    }

    #[test]
    fn svg_is_well_formed_with_one_polyline_per_history() {
        let mut c = ExperimentConfig::defaults(ExperimentId::Fig2);
        c.n = 200;
        c.iterations = 15;
        let r = run_experiment(&c).unwrap();
        let svg = render_svg(&r);
        let doc = roxmltree::Document::parse(&svg).unwrap();
        let polylines: Vec<_> = doc.descendants().filter(|n| n.has_tag_name("polyline")).collect();
        assert_eq!(polylines.len(), r.histories.len());
        for (p, h) in polylines.iter().zip(&r.histories) {
            let title = p.children().find(|n| n.has_tag_name("title")).unwrap();
            assert_eq!(title.text(), Some(h.label().as_str()));
            assert_eq!(p.attribute("points").unwrap().split(' ').count(), h.error_a_norms.len());
        }
    }

    #[test]
    fn csv_bytes_repeat() {
        let mut c = ExperimentConfig::defaults(ExperimentId::Fig2);
        c.n = 300;
        c.iterations = 20;
        let a = run_experiment(&c).unwrap();
        let b = run_experiment(&c).unwrap();
        for (x, y) in a.histories.iter().zip(&b.histories) {
            assert_eq!(render_csv(x), render_csv(y));
        }
    }
}
