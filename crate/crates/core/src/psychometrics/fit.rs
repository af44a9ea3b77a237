//! Residual-based fit statistics and separation reliability.

use serde::{Deserialize, Serialize};

use super::jmle::RaschEstimate;
use super::matrix::ResponseMatrix;
use super::rsm::expected_and_variance;

/// Cells whose model variance falls below this are skipped.
pub const MIN_VARIANCE: f64 = 1e-12;

/// Well-fitting mean-square window.
pub const FIT_WINDOW: (f64, f64) = (0.6, 1.5);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ItemFit {
    /// Information-weighted mean square, `sum(y^2) / sum(W)`.
    pub infit_msq: f64,
    /// Unweighted mean of the squared standardized residuals.
    pub outfit_msq: f64,
    /// Root mean square of the raw residuals.
    pub rmsr: f64,
    pub cells: usize,
    /// Cells skipped because their model variance vanished.
    pub zero_variance: usize,
}

impl ItemFit {
    pub fn within(&self, window: (f64, f64)) -> bool {
        let ok = |x: f64| x > window.0 && x < window.1;
        ok(self.infit_msq) && ok(self.outfit_msq)
    }
}

#[derive(Debug, Default, Clone, Copy)]
struct Accum {
    y2: f64,
    w: f64,
    z2: f64,
    cells: usize,
    skipped: usize,
}

impl Accum {
    fn add(&mut self, y: f64, w: f64) {
        if w < MIN_VARIANCE {
            self.skipped += 1;
            return;
        }
        self.y2 += y * y;
        self.w += w;
        self.z2 += y * y / w;
        self.cells += 1;
    }

    fn finish(&self) -> ItemFit {
        let n = self.cells as f64;
        ItemFit {
            infit_msq: if self.w > 0.0 { self.y2 / self.w } else { f64::NAN },
            outfit_msq: if self.cells > 0 { self.z2 / n } else { f64::NAN },
            rmsr: if self.cells > 0 { (self.y2 / n).sqrt() } else { f64::NAN },
            cells: self.cells,
            zero_variance: self.skipped,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub items: Vec<ItemFit>,
    pub persons: Vec<ItemFit>,
    pub zero_variance_cells: usize,
}

/// Fit statistics over cells where both the person and the item were
/// estimated; extreme rows and columns yield `NaN` statistics.
pub fn fit_statistics(matrix: &ResponseMatrix, est: &RaschEstimate) -> FitReport {
    let mut items = vec![Accum::default(); matrix.items()];
    let mut persons = vec![Accum::default(); matrix.persons()];
    let mut probs = vec![0.0; est.thresholds.len() + 1];
    for v in est.estimated_persons() {
        for i in est.estimated_items() {
            let Some(x) = matrix.get(v, i) else { continue };
            let (e, w) = expected_and_variance(
                est.person_ability[v] - est.item_difficulty[i],
                &est.thresholds,
                &mut probs,
            );
            let y = x as f64 - e;
            items[i].add(y, w);
            persons[v].add(y, w);
        }
    }
    FitReport {
        zero_variance_cells: items.iter().map(|a| a.skipped).sum(),
        items: items.iter().map(Accum::finish).collect(),
        persons: persons.iter().map(Accum::finish).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Separation {
    pub reliability: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityReport {
    pub person_separation_reliability: f64,
    pub item_separation_reliability: f64,
    pub person_separation_ratio: f64,
    pub item_separation_ratio: f64,
}

/// `G = sqrt(R / (1 - R))`.
pub fn separation_ratio(reliability: f64) -> f64 {
    (reliability / (1.0 - reliability)).sqrt()
}

/// Share of observed measure variance not attributable to measurement error,
/// clamped to `[0, 1]`.
pub fn separation(measures: &[f64], standard_errors: &[f64]) -> Separation {
    let n = measures.len() as f64;
    if measures.is_empty() {
        return Separation {
            reliability: 0.0,
            ratio: 0.0,
        };
    }
    let mean = measures.iter().sum::<f64>() / n;
    let var = measures.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / n;
    let mse = standard_errors.iter().map(|s| s * s).sum::<f64>() / standard_errors.len().max(1) as f64;
    let reliability = if var > 0.0 {
        ((var - mse) / var).clamp(0.0, 1.0)
    } else {
        0.0
    };
    Separation {
        reliability,
        ratio: separation_ratio(reliability),
    }
}

pub fn reliability(est: &RaschEstimate) -> ReliabilityReport {
    let persons: Vec<usize> = est.estimated_persons().collect();
    let items: Vec<usize> = est.estimated_items().collect();
    let p = separation(
        &persons.iter().map(|&v| est.person_ability[v]).collect::<Vec<_>>(),
        &persons.iter().map(|&v| est.person_se[v]).collect::<Vec<_>>(),
    );
    let i = separation(
        &items.iter().map(|&i| est.item_difficulty[i]).collect::<Vec<_>>(),
        &items.iter().map(|&i| est.item_se[i]).collect::<Vec<_>>(),
    );
    ReliabilityReport {
        person_separation_reliability: p.reliability,
        item_separation_reliability: i.reliability,
        person_separation_ratio: p.ratio,
        item_separation_ratio: i.ratio,
    }
}
