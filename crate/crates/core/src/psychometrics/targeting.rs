//! Person/item maps and category probability curves.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::jmle::RaschEstimate;
use super::rsm::rsm_category_prob;
use super::RaschError;

pub const DEFAULT_BIN_WIDTH: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WrightRow {
    pub bin_lower: f64,
    pub bin_upper: f64,
    pub person_count: usize,
    /// Items whose difficulty falls in this bin, `;`-separated on disk.
    pub items: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WrightMap {
    pub bin_width: f64,
    pub rows: Vec<WrightRow>,
    pub item_positions: Vec<(String, f64)>,
}

impl WrightMap {
    pub fn axis(&self) -> (f64, f64) {
        match (self.rows.first(), self.rows.last()) {
            (Some(a), Some(b)) => (a.bin_lower, b.bin_upper),
            _ => (0.0, 0.0),
        }
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), RaschError> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["bin_lower", "bin_upper", "person_count", "items"])?;
        for r in &self.rows {
            wtr.write_record([
                r.bin_lower.to_string(),
                r.bin_upper.to_string(),
                r.person_count.to_string(),
                r.items.join(";"),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Vec<WrightRow>, RaschError> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut rows = Vec::new();
        for (n, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let parse_err = |message: String| RaschError::Parse { line: n + 2, message };
            let num = |k: usize| {
                rec.get(k)
                    .unwrap_or_default()
                    .parse::<f64>()
                    .map_err(|e| parse_err(e.to_string()))
            };
            let items = rec.get(3).unwrap_or_default();
            rows.push(WrightRow {
                bin_lower: num(0)?,
                bin_upper: num(1)?,
                person_count: rec
                    .get(2)
                    .unwrap_or_default()
                    .parse()
                    .map_err(|e: std::num::ParseIntError| parse_err(e.to_string()))?,
                items: if items.is_empty() {
                    Vec::new()
                } else {
                    items.split(';').map(str::to_string).collect()
                },
            });
        }
        Ok(rows)
    }
}

/// Histogram of estimated abilities against item difficulties on one axis.
pub fn wright_map(est: &RaschEstimate, item_names: &[String], bin_width: f64) -> WrightMap {
    let persons: Vec<f64> = est.estimated_persons().map(|v| est.person_ability[v]).collect();
    let items: Vec<(String, f64)> = est
        .estimated_items()
        .map(|i| {
            let name = item_names.get(i).cloned().unwrap_or_else(|| format!("item_{}", i + 1));
            (name, est.item_difficulty[i])
        })
        .collect();
    wright_map_from(&persons, &items, bin_width)
}

pub fn wright_map_from(persons: &[f64], items: &[(String, f64)], bin_width: f64) -> WrightMap {
    let all = persons.iter().copied().chain(items.iter().map(|(_, d)| *d));
    let (lo, hi) = all
        .filter(|x| x.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if !lo.is_finite() {
        return WrightMap {
            bin_width,
            rows: Vec::new(),
            item_positions: Vec::new(),
        };
    }
    let first = (lo / bin_width).floor() as i64;
    let mut last = (hi / bin_width).ceil() as i64;
    if last <= first {
        last = first + 1;
    }
    let bins = (last - first) as usize;
    let bin_of = |x: f64| (((x / bin_width).floor() as i64 - first).max(0) as usize).min(bins - 1);
    let mut rows: Vec<WrightRow> = (0..bins)
        .map(|b| WrightRow {
            bin_lower: (first + b as i64) as f64 * bin_width,
            bin_upper: (first + b as i64 + 1) as f64 * bin_width,
            person_count: 0,
            items: Vec::new(),
        })
        .collect();
    for &p in persons.iter().filter(|x| x.is_finite()) {
        rows[bin_of(p)].person_count += 1;
    }
    for (name, d) in items.iter().filter(|(_, d)| d.is_finite()) {
        rows[bin_of(*d)].items.push(name.clone());
    }
    WrightMap {
        bin_width,
        rows,
        item_positions: items.to_vec(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CategoryCurves {
    /// Locations `theta - delta` at which the curves are evaluated.
    pub grid: Vec<f64>,
    /// `probs[k][g]` is P(category k) at `grid[g]`.
    pub probs: Vec<Vec<f64>>,
    /// Location where categories `k - 1` and `k` are equally probable, `tau_k`.
    pub crossovers: Vec<f64>,
    /// Modal categories in the order they appear along the grid.
    pub modal_sequence: Vec<usize>,
    /// Categories that are never the most probable anywhere on the grid.
    pub never_modal: Vec<usize>,
}

impl CategoryCurves {
    /// Each category is modal somewhere and modes appear in ascending order.
    pub fn ordered(&self) -> bool {
        self.never_modal.is_empty() && self.modal_sequence.windows(2).all(|w| w[1] > w[0])
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), RaschError> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header = vec!["eta".to_string()];
        header.extend((0..self.probs.len()).map(|k| format!("p{k}")));
        wtr.write_record(&header)?;
        for (g, eta) in self.grid.iter().enumerate() {
            let mut rec = vec![eta.to_string()];
            rec.extend(self.probs.iter().map(|p| p[g].to_string()));
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Evenly spaced locations from `lo` to `hi` inclusive.
pub fn logit_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let n = points.max(2);
    (0..n).map(|g| lo + (hi - lo) * g as f64 / (n - 1) as f64).collect()
}

pub fn category_curves(thresholds: &[f64], grid: &[f64]) -> CategoryCurves {
    let cats = thresholds.len() + 1;
    let mut probs = vec![Vec::with_capacity(grid.len()); cats];
    let mut modal_sequence: Vec<usize> = Vec::new();
    for &eta in grid {
        let p = rsm_category_prob(eta, 0.0, thresholds);
        for (k, pk) in p.iter().enumerate() {
            probs[k].push(*pk);
        }
        let mode = p
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, _)| k)
            .unwrap_or(0);
        if modal_sequence.last() != Some(&mode) {
            modal_sequence.push(mode);
        }
    }
    let never_modal = (0..cats).filter(|k| !modal_sequence.contains(k)).collect();
    CategoryCurves {
        grid: grid.to_vec(),
        probs,
        crossovers: thresholds.to_vec(),
        modal_sequence,
        never_modal,
    }
}

pub fn estimate_curves(est: &RaschEstimate, grid: &[f64]) -> CategoryCurves {
    category_curves(&est.thresholds, grid)
}
