//! Analysis pipeline and report directory output.

use std::fmt::Write as _;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::fit::{fit_statistics, reliability, FitReport, ReliabilityReport, FIT_WINDOW};
use super::jmle::{fit_jmle, JmleOptions, RaschEstimate};
use super::matrix::ResponseMatrix;
use super::targeting::{estimate_curves, logit_grid, wright_map, CategoryCurves, WrightMap};
use super::RaschError;

pub const ITEMS_CSV: &str = "items.csv";
pub const PERSONS_CSV: &str = "persons.csv";
pub const RELIABILITY_CSV: &str = "reliability.csv";
pub const WRIGHT_MAP_CSV: &str = "wright_map.csv";
pub const CATEGORY_CURVES_CSV: &str = "category_curves.csv";
pub const WRIGHT_MAP_SVG: &str = "wright_map.svg";
pub const CATEGORY_CURVES_SVG: &str = "category_curves.svg";
pub const SUMMARY_JSON: &str = "summary.json";

pub const ITEM_COLUMNS: [&str; 5] = ["item", "difficulty_logit", "infit_msq", "outfit_msq", "rmsr"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisOptions {
    pub jmle: JmleOptions,
    pub bin_width: f64,
    /// Range and resolution of the category-curve grid.
    pub curve_range: (f64, f64),
    pub curve_points: usize,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            jmle: JmleOptions::default(),
            bin_width: super::targeting::DEFAULT_BIN_WIDTH,
            curve_range: (-6.0, 6.0),
            curve_points: 241,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub item_names: Vec<String>,
    pub person_ids: Vec<String>,
    pub raw_scores: Vec<Option<u32>>,
    pub estimate: RaschEstimate,
    pub fit: FitReport,
    pub reliability: ReliabilityReport,
    pub wright: WrightMap,
    pub curves: CategoryCurves,
}

#[derive(Debug, Serialize)]
struct Summary<'a> {
    persons: usize,
    items: usize,
    categories: usize,
    converged: bool,
    iterations: usize,
    log_likelihood: f64,
    thresholds: &'a [f64],
    crossovers: &'a [f64],
    modal_sequence: &'a [usize],
    never_modal_categories: &'a [usize],
    thresholds_ordered: bool,
    misfitting_items: Vec<&'a str>,
    zero_variance_cells: usize,
}

pub fn analyze(matrix: &ResponseMatrix, opts: &AnalysisOptions) -> Result<Analysis, RaschError> {
    let estimate = fit_jmle(matrix, &opts.jmle)?;
    let fit = fit_statistics(matrix, &estimate);
    let reliability = reliability(&estimate);
    let wright = wright_map(&estimate, matrix.item_names(), opts.bin_width);
    let grid = logit_grid(opts.curve_range.0, opts.curve_range.1, opts.curve_points);
    let curves = estimate_curves(&estimate, &grid);
    let raw_scores = (0..matrix.persons())
        .map(|v| {
            let row = matrix.row(v);
            row.iter()
                .any(Option::is_some)
                .then(|| row.iter().flatten().map(|&x| x as u32).sum())
        })
        .collect();
    Ok(Analysis {
        item_names: matrix.item_names().to_vec(),
        person_ids: matrix.person_ids().to_vec(),
        raw_scores,
        estimate,
        fit,
        reliability,
        wright,
        curves,
    })
}

impl Analysis {
    pub fn misfitting_items(&self) -> Vec<&str> {
        self.fit
            .items
            .iter()
            .zip(&self.item_names)
            .filter(|(f, _)| f.cells > 0 && !f.within(FIT_WINDOW))
            .map(|(_, n)| n.as_str())
            .collect()
    }

    /// Writes every report artifact into `dir`, creating it if needed.
    pub fn write_report(&self, dir: &Path) -> Result<Vec<PathBuf>, RaschError> {
        std::fs::create_dir_all(dir)?;
        let path = |name: &str| dir.join(name);
        let create = |name: &str| -> Result<BufWriter<File>, RaschError> {
            Ok(BufWriter::new(File::create(path(name))?))
        };

        let est = &self.estimate;
        let mut items = csv::Writer::from_writer(create(ITEMS_CSV)?);
        items.write_record(ITEM_COLUMNS)?;
        for (i, name) in self.item_names.iter().enumerate() {
            let f = &self.fit.items[i];
            items.write_record([
                name.clone(),
                est.item_difficulty[i].to_string(),
                f.infit_msq.to_string(),
                f.outfit_msq.to_string(),
                f.rmsr.to_string(),
            ])?;
        }
        items.flush()?;

        let mut persons = csv::Writer::from_writer(create(PERSONS_CSV)?);
        persons.write_record([
            "person",
            "raw_score",
            "ability_logit",
            "se",
            "status",
            "infit_msq",
            "outfit_msq",
        ])?;
        for (v, id) in self.person_ids.iter().enumerate() {
            let f = &self.fit.persons[v];
            persons.write_record([
                id.clone(),
                self.raw_scores[v].map(|s| s.to_string()).unwrap_or_default(),
                est.person_ability[v].to_string(),
                est.person_se[v].to_string(),
                est.person_status[v].name().to_string(),
                f.infit_msq.to_string(),
                f.outfit_msq.to_string(),
            ])?;
        }
        persons.flush()?;

        let r = &self.reliability;
        let mut rel = csv::Writer::from_writer(create(RELIABILITY_CSV)?);
        rel.write_record(["facet", "separation_reliability", "separation_ratio"])?;
        rel.write_record([
            "persons".to_string(),
            r.person_separation_reliability.to_string(),
            r.person_separation_ratio.to_string(),
        ])?;
        rel.write_record([
            "items".to_string(),
            r.item_separation_reliability.to_string(),
            r.item_separation_ratio.to_string(),
        ])?;
        rel.flush()?;

        self.wright.write_csv(create(WRIGHT_MAP_CSV)?)?;
        self.curves.write_csv(create(CATEGORY_CURVES_CSV)?)?;
        std::fs::write(path(WRIGHT_MAP_SVG), wright_svg(&self.wright))?;
        std::fs::write(path(CATEGORY_CURVES_SVG), curves_svg(&self.curves))?;

        let summary = Summary {
            persons: self.person_ids.len(),
            items: self.item_names.len(),
            categories: est.thresholds.len() + 1,
            converged: est.converged,
            iterations: est.iterations_used,
            log_likelihood: est.log_likelihood,
            thresholds: &est.thresholds,
            crossovers: &self.curves.crossovers,
            modal_sequence: &self.curves.modal_sequence,
            never_modal_categories: &self.curves.never_modal,
            thresholds_ordered: self.curves.ordered(),
            misfitting_items: self.misfitting_items(),
            zero_variance_cells: self.fit.zero_variance_cells,
        };
        let json = serde_json::to_string_pretty(&summary).map_err(std::io::Error::other)?;
        std::fs::write(path(SUMMARY_JSON), json + "\n")?;

        Ok([
            ITEMS_CSV,
            PERSONS_CSV,
            RELIABILITY_CSV,
            WRIGHT_MAP_CSV,
            CATEGORY_CURVES_CSV,
            WRIGHT_MAP_SVG,
            CATEGORY_CURVES_SVG,
            SUMMARY_JSON,
        ]
        .iter()
        .map(|n| path(n))
        .collect())
    }
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

/// Persons as left-hand bars, items as labels on the right, logit axis vertical.
pub fn wright_svg(map: &WrightMap) -> String {
    let row_h = 18.0;
    let (width, top, mid) = (640.0, 30.0, 320.0);
    let height = top * 2.0 + row_h * map.rows.len() as f64;
    let max_count = map.rows.iter().map(|r| r.person_count).max().unwrap_or(0).max(1) as f64;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<text x="{}" y="18" font-size="13">persons | items (logits)</text>"#, mid - 70.0);
    let _ = writeln!(
        s,
        r##"<line x1="{mid}" y1="{top}" x2="{mid}" y2="{}" stroke="#000"/>"##,
        height - top
    );
    // highest bin at the top
    for (n, row) in map.rows.iter().rev().enumerate() {
        let y = top + n as f64 * row_h;
        let bar = (mid - 70.0) * row.person_count as f64 / max_count;
        let _ = writeln!(
            s,
            r#"<text x="4" y="{}">{:.2}</text>"#,
            y + row_h * 0.7,
            row.bin_lower
        );
        if row.person_count > 0 {
            let _ = writeln!(
                s,
                r##"<rect x="{}" y="{}" width="{bar}" height="{}" fill="#4c72b0"/>"##,
                mid - bar,
                y + 2.0,
                row_h - 4.0
            );
        }
        if !row.items.is_empty() {
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}">{}</text>"#,
                mid + 8.0,
                y + row_h * 0.7,
                escape(&row.items.join(" "))
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

pub fn curves_svg(curves: &CategoryCurves) -> String {
    let (w, h, pad) = (640.0, 360.0, 40.0);
    let (lo, hi) = match (curves.grid.first(), curves.grid.last()) {
        (Some(a), Some(b)) if b > a => (*a, *b),
        _ => (-1.0, 1.0),
    };
    let sx = |x: f64| pad + (x - lo) / (hi - lo) * (w - 2.0 * pad);
    let sy = |p: f64| h - pad - p * (h - 2.0 * pad);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        s,
        r##"<rect x="{pad}" y="{pad}" width="{}" height="{}" fill="none" stroke="#000"/>"##,
        w - 2.0 * pad,
        h - 2.0 * pad
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}">theta - delta (logits)</text>"#, w / 2.0 - 50.0, h - 8.0);
    for (k, trace) in curves.probs.iter().enumerate() {
        let pts: Vec<String> = curves
            .grid
            .iter()
            .zip(trace)
            .map(|(x, p)| format!("{:.2},{:.2}", sx(*x), sy(*p)))
            .collect();
        let color = PALETTE[k % PALETTE.len()];
        let dash = if curves.never_modal.contains(&k) {
            r#" stroke-dasharray="4 3""#
        } else {
            ""
        };
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#,
            pts.join(" ")
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" fill="{color}">{k}</text>"#,
            w - pad + 6.0,
            pad + 14.0 * (k as f64 + 1.0)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
