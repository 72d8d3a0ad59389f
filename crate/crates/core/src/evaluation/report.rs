use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::benchmark::{BenchmarkReport, CurveRow, TimingRow};
use crate::error::{Error, Result};
use crate::trial::write_trials;

pub const CURVE_HEADER: [&str; 4] = ["method", "split", "t", "value"];
pub const TIMING_HEADER: [&str; 3] = ["method", "mean_seconds", "n_suggestions"];

pub const ADTM_CSV: &str = "adtm.csv";
pub const RANK_CSV: &str = "rank.csv";
pub const TIMING_CSV: &str = "timing.csv";
pub const TRIALS_CSV: &str = "trials.csv";
pub const ADTM_SVG: &str = "adtm.svg";
pub const RANK_SVG: &str = "rank.svg";

fn create(path: &Path) -> Result<fs::File> {
    fs::File::create(path).map_err(|e| Error::io(path, e))
}

fn write_curves(path: &Path, rows: &[CurveRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(CURVE_HEADER)?;
    for r in rows {
        w.write_record([r.method.clone(), r.split.to_string(), r.t.to_string(), r.value.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_timing(path: &Path, rows: &[TimingRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(TIMING_HEADER)?;
    for r in rows {
        w.write_record([r.method.clone(), r.mean_seconds.to_string(), r.n_suggestions.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes the CSV tables and, when there is data, the two line plots.
pub fn emit_report(report: &BenchmarkReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_curves(&dir.join(ADTM_CSV), &report.adtm)?;
    write_curves(&dir.join(RANK_CSV), &report.rank)?;
    write_timing(&dir.join(TIMING_CSV), &report.timing)?;
    let trials = dir.join(TRIALS_CSV);
    write_trials(create(&trials)?, &report.records)?;
    write_plots(&report.adtm, &report.rank, dir)
}

/// Parses an `adtm.csv` or `rank.csv` table.
pub fn read_curves(path: &Path) -> Result<Vec<CurveRow>> {
    let file = path.display().to_string();
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(f);
    let header = r.headers()?.clone();
    if header.iter().ne(CURVE_HEADER) {
        return Err(Error::SchemaMismatch {
            file,
            detail: format!("expected columns {}, found {}", CURVE_HEADER.join(","), header.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::parse(&file, line, e.to_string()))?;
        if rec.len() != 4 {
            return Err(Error::parse(&file, line, format!("expected 4 fields, got {}", rec.len())));
        }
        let num = |k: usize| -> Result<&str> { Ok(&rec[k]) };
        let split = num(1)?.parse().map_err(|_| Error::parse(&file, line, format!("bad split {:?}", &rec[1])))?;
        let t = num(2)?.parse().map_err(|_| Error::parse(&file, line, format!("bad t {:?}", &rec[2])))?;
        let value: f64 = num(3)?.parse().map_err(|_| Error::parse(&file, line, format!("bad value {:?}", &rec[3])))?;
        rows.push(CurveRow { method: rec[0].to_string(), split, t, value });
    }
    Ok(rows)
}

/// Regenerates both plots from the CSV tables in `report_dir`.
pub fn plot_from_csv(report_dir: &Path, out_dir: &Path) -> Result<()> {
    let adtm = read_curves(&report_dir.join(ADTM_CSV))?;
    let rank = read_curves(&report_dir.join(RANK_CSV))?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    write_plots(&adtm, &rank, out_dir)
}

fn write_plots(adtm: &[CurveRow], rank: &[CurveRow], dir: &Path) -> Result<()> {
    for (rows, name, label) in [(adtm, ADTM_SVG, "ADTM"), (rank, RANK_SVG, "average rank")] {
        if rows.is_empty() {
            log::warn!("no rows for {label}; skipping {name}");
            continue;
        }
        let path = dir.join(name);
        fs::write(&path, render_svg(label, &split_means(rows))).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

/// Split-averaged curve per method, methods in first-appearance order.
fn split_means(rows: &[CurveRow]) -> Vec<(String, Vec<(usize, f64)>)> {
    let mut methods: Vec<String> = Vec::new();
    for r in rows {
        if !methods.contains(&r.method) {
            methods.push(r.method.clone());
        }
    }
    methods
        .into_iter()
        .map(|m| {
            let curve = BenchmarkReport::mean_curve(rows, &m);
            (m, curve)
        })
        .collect()
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// Line plot over trial index with one `<path>` per series; axes and
/// ticks are drawn with `<line>`.
pub fn render_svg(y_label: &str, series: &[(String, Vec<(usize, f64)>)]) -> String {
    let (w, h, left, right, top, bottom) = (640.0, 400.0, 60.0, 150.0, 20.0, 50.0);
    let pts = series.iter().flat_map(|(_, c)| c.iter());
    let (mut t_max, mut y_min, mut y_max) = (1usize, f64::INFINITY, f64::NEG_INFINITY);
    for &(t, v) in pts {
        t_max = t_max.max(t);
        y_min = y_min.min(v);
        y_max = y_max.max(v);
    }
    if !(y_max > y_min) {
        y_min -= 0.5;
        y_max += 0.5;
    }
    let pw = w - left - right;
    let ph = h - top - bottom;
    let sx = |t: usize| left + if t_max > 1 { (t - 1) as f64 / (t_max - 1) as f64 * pw } else { pw / 2.0 };
    let sy = |v: f64| top + (y_max - v) / (y_max - y_min) * ph;

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<line x1="{left}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#, top + ph, left + pw, top + ph);
    let _ = writeln!(s, r#"<line x1="{left}" y1="{top}" x2="{left}" y2="{}" stroke="black"/>"#, top + ph);
    for k in 0..=4 {
        let v = y_min + (y_max - y_min) * k as f64 / 4.0;
        let y = sy(v);
        let _ = writeln!(s, r#"<line x1="{}" y1="{y:.2}" x2="{left}" y2="{y:.2}" stroke="black"/>"#, left - 4.0);
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}" font-size="11" text-anchor="end">{v:.3}</text>"#, left - 6.0, y + 4.0);
    }
    let step = (t_max / 10).max(1);
    for t in (1..=t_max).filter(|t| (t - 1) % step == 0 || *t == t_max) {
        let x = sx(t);
        let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="black"/>"#, top + ph, top + ph + 4.0);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{}" font-size="11" text-anchor="middle">{t}</text>"#, top + ph + 16.0);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">trials</text>"#, left + pw / 2.0, h - 10.0);
    let _ = writeln!(
        s,
        r#"<text x="14" y="{0}" font-size="12" text-anchor="middle" transform="rotate(-90 14 {0})">{y_label}</text>"#,
        top + ph / 2.0
    );
    for (i, (name, curve)) in series.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let d: Vec<String> = curve
            .iter()
            .enumerate()
            .map(|(k, &(t, v))| format!("{}{:.2},{:.2}", if k == 0 { 'M' } else { 'L' }, sx(t), sy(v)))
            .collect();
        let _ = writeln!(s, r#"<path d="{}" fill="none" stroke="{colour}" stroke-width="2"/>"#, d.join(" "));
        let ly = top + 14.0 + 18.0 * i as f64;
        let lx = left + pw + 12.0;
        let _ = writeln!(s, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{colour}" stroke-width="2"/>"#, lx + 20.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="12">{}</text>"#, lx + 26.0, ly + 4.0, escape(name));
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
