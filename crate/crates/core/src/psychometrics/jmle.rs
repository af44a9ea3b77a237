//! Joint maximum likelihood estimation for the rating scale model.
//!
//! Each sweep takes a damped Newton step for every person ability, then every
//! item difficulty, then the shared thresholds. Every block step is halved
//! until the joint log-likelihood does not decrease, so the objective is
//! monotone across sweeps. Difficulties and thresholds are re-centered after
//! each block with a compensating shift of the abilities, which leaves the
//! likelihood unchanged.
//!
//! Persons or items with extreme raw scores (all minimum or all maximum) have
//! no finite estimate. They are removed iteratively before estimation and
//! reported with a sentinel one logit beyond the most extreme interior measure.
//! No small-sample bias correction is applied.

use serde::{Deserialize, Serialize};

use super::matrix::ResponseMatrix;
use super::rsm::{category_prob_into, log_prob};
use super::RaschError;

pub const DEFAULT_TOL: f64 = 1e-4;
pub const DEFAULT_MAX_ITER: usize = 500;
/// Largest parameter change allowed in one Newton step, logits.
const MAX_STEP: f64 = 1.0;
const MAX_HALVINGS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JmleOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for JmleOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureStatus {
    Estimated,
    /// Every response in the top category.
    ExtremeMaximum,
    /// Every response in the bottom category.
    ExtremeMinimum,
    /// No responses at all.
    NoData,
}

impl MeasureStatus {
    pub fn is_estimated(self) -> bool {
        self == MeasureStatus::Estimated
    }

    pub fn name(self) -> &'static str {
        match self {
            MeasureStatus::Estimated => "estimated",
            MeasureStatus::ExtremeMaximum => "extreme_max",
            MeasureStatus::ExtremeMinimum => "extreme_min",
            MeasureStatus::NoData => "no_data",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RaschEstimate {
    pub person_ability: Vec<f64>,
    pub person_se: Vec<f64>,
    pub person_status: Vec<MeasureStatus>,
    pub item_difficulty: Vec<f64>,
    pub item_se: Vec<f64>,
    pub item_status: Vec<MeasureStatus>,
    /// `tau_1..tau_m`, summing to zero.
    pub thresholds: Vec<f64>,
    pub converged: bool,
    pub iterations_used: usize,
    /// Joint log-likelihood over estimated persons and items.
    pub log_likelihood: f64,
    /// Log-likelihood after each sweep (index 0 is the starting point).
    pub trace: Vec<f64>,
}

impl RaschEstimate {
    pub fn require_converged(&self) -> Result<&Self, RaschError> {
        if self.converged {
            Ok(self)
        } else {
            Err(RaschError::NoConvergence {
                iterations: self.iterations_used,
            })
        }
    }

    pub fn estimated_persons(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.person_ability.len()).filter(|&v| self.person_status[v].is_estimated())
    }

    pub fn estimated_items(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.item_difficulty.len()).filter(|&i| self.item_status[i].is_estimated())
    }

    /// Same measures shifted by `c` on the logit axis.
    pub fn shifted(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.person_ability.iter_mut().for_each(|t| *t += c);
        out.item_difficulty.iter_mut().for_each(|d| *d += c);
        out
    }
}

/// Working set after removing extreme rows and columns.
struct Active {
    persons: Vec<usize>,
    items: Vec<usize>,
    person_status: Vec<MeasureStatus>,
    item_status: Vec<MeasureStatus>,
}

fn find_active(m: &ResponseMatrix) -> Active {
    let top = m.max_category();
    let mut person_on = vec![true; m.persons()];
    let mut item_on = vec![true; m.items()];
    let mut person_status = vec![MeasureStatus::Estimated; m.persons()];
    let mut item_status = vec![MeasureStatus::Estimated; m.items()];
    let classify = |cells: &mut dyn Iterator<Item = u8>| {
        let (mut n, mut lo, mut hi) = (0usize, 0usize, 0usize);
        for x in cells {
            n += 1;
            lo += usize::from(x == 0);
            hi += usize::from(x == top);
        }
        if n == 0 {
            MeasureStatus::NoData
        } else if hi == n {
            MeasureStatus::ExtremeMaximum
        } else if lo == n {
            MeasureStatus::ExtremeMinimum
        } else {
            MeasureStatus::Estimated
        }
    };
    loop {
        let mut changed = false;
        for v in 0..m.persons() {
            if !person_on[v] {
                continue;
            }
            let mut cells = (0..m.items()).filter(|&i| item_on[i]).filter_map(|i| m.get(v, i));
            let s = classify(&mut cells);
            if !s.is_estimated() {
                person_on[v] = false;
                person_status[v] = s;
                changed = true;
            }
        }
        for i in 0..m.items() {
            if !item_on[i] {
                continue;
            }
            let mut cells = (0..m.persons()).filter(|&v| person_on[v]).filter_map(|v| m.get(v, i));
            let s = classify(&mut cells);
            if !s.is_estimated() {
                item_on[i] = false;
                item_status[i] = s;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    Active {
        persons: (0..m.persons()).filter(|&v| person_on[v]).collect(),
        items: (0..m.items()).filter(|&i| item_on[i]).collect(),
        person_status,
        item_status,
    }
}

struct Model<'a> {
    m: &'a ResponseMatrix,
    persons: &'a [usize],
    items: &'a [usize],
    theta: Vec<f64>,
    delta: Vec<f64>,
    tau: Vec<f64>,
    probs: Vec<f64>,
}

impl Model<'_> {
    fn cell_ll(&self, theta: f64, delta: f64, tau: &[f64], x: u8) -> f64 {
        log_prob(theta - delta, tau, x as usize)
    }

    fn person_ll(&self, v: usize, theta: f64) -> f64 {
        self.items
            .iter()
            .filter_map(|&i| self.m.get(v, i).map(|x| self.cell_ll(theta, self.delta[i], &self.tau, x)))
            .sum()
    }

    fn item_ll(&self, i: usize, delta: f64) -> f64 {
        self.persons
            .iter()
            .filter_map(|&v| self.m.get(v, i).map(|x| self.cell_ll(self.theta[v], delta, &self.tau, x)))
            .sum()
    }

    fn total_ll_with(&self, tau: &[f64]) -> f64 {
        self.persons
            .iter()
            .flat_map(|&v| self.items.iter().map(move |&i| (v, i)))
            .filter_map(|(v, i)| self.m.get(v, i).map(|x| self.cell_ll(self.theta[v], self.delta[i], tau, x)))
            .sum()
    }

    fn total_ll(&self) -> f64 {
        self.total_ll_with(&self.tau)
    }

    /// Expected score and variance at a cell.
    fn moments(&mut self, eta: f64) -> (f64, f64) {
        let tau = std::mem::take(&mut self.tau);
        category_prob_into(eta, &tau, &mut self.probs);
        self.tau = tau;
        let (mut mean, mut second) = (0.0, 0.0);
        for (x, p) in self.probs.iter().enumerate() {
            mean += x as f64 * p;
            second += (x * x) as f64 * p;
        }
        (mean, (second - mean * mean).max(0.0))
    }

    fn step_persons(&mut self) -> f64 {
        let mut max_change: f64 = 0.0;
        for idx in 0..self.persons.len() {
            let v = self.persons[idx];
            let (mut g, mut h) = (0.0, 0.0);
            for idx_i in 0..self.items.len() {
                let i = self.items[idx_i];
                if let Some(x) = self.m.get(v, i) {
                    let (e, w) = self.moments(self.theta[v] - self.delta[i]);
                    g += x as f64 - e;
                    h += w;
                }
            }
            let step = newton_step(g, h);
            let before = self.person_ll(v, self.theta[v]);
            let old = self.theta[v];
            let new = damped(step, |s| self.person_ll(v, old + s) >= before);
            self.theta[v] = old + new;
            max_change = max_change.max(new.abs());
        }
        max_change
    }

    fn step_items(&mut self) -> f64 {
        let mut max_change: f64 = 0.0;
        for idx in 0..self.items.len() {
            let i = self.items[idx];
            let (mut g, mut h) = (0.0, 0.0);
            for idx_v in 0..self.persons.len() {
                let v = self.persons[idx_v];
                if let Some(x) = self.m.get(v, i) {
                    let (e, w) = self.moments(self.theta[v] - self.delta[i]);
                    g -= x as f64 - e;
                    h += w;
                }
            }
            let step = newton_step(g, h);
            let before = self.item_ll(i, self.delta[i]);
            let old = self.delta[i];
            let new = damped(step, |s| self.item_ll(i, old + s) >= before);
            self.delta[i] = old + new;
            max_change = max_change.max(new.abs());
        }
        self.center_items();
        max_change
    }

    /// Diagonal Newton step on the thresholds using the cumulative indicators
    /// `1[x >= k]`, whose counts are the sufficient statistics for `tau_k`.
    fn step_thresholds(&mut self) -> f64 {
        let mcat = self.tau.len();
        if mcat < 2 {
            // a single threshold is pinned at zero by centering
            return 0.0;
        }
        let mut observed = vec![0.0; mcat];
        let mut expected = vec![0.0; mcat];
        let mut info = vec![0.0; mcat];
        for idx_v in 0..self.persons.len() {
            let v = self.persons[idx_v];
            for idx_i in 0..self.items.len() {
                let i = self.items[idx_i];
                let Some(x) = self.m.get(v, i) else { continue };
                self.moments(self.theta[v] - self.delta[i]);
                let mut tail = 0.0;
                for k in (1..=mcat).rev() {
                    tail += self.probs[k];
                    expected[k - 1] += tail;
                    info[k - 1] += tail * (1.0 - tail);
                    if x as usize >= k {
                        observed[k - 1] += 1.0;
                    }
                }
            }
        }
        let step: Vec<f64> = (0..mcat)
            .map(|k| newton_step(expected[k] - observed[k], info[k]))
            .collect();
        let before = self.total_ll();
        let old = self.tau.clone();
        let scale = damped(1.0, |s| {
            let trial: Vec<f64> = old.iter().zip(&step).map(|(t, d)| t + s * d).collect();
            self.total_ll_with(&trial) >= before
        });
        for (t, d) in self.tau.iter_mut().zip(&step) {
            *t += scale * d;
        }
        self.center_thresholds();
        step.iter().map(|d| (scale * d).abs()).fold(0.0, f64::max)
    }

    fn center_items(&mut self) {
        let mean = self.items.iter().map(|&i| self.delta[i]).sum::<f64>() / self.items.len() as f64;
        for &i in self.items {
            self.delta[i] -= mean;
        }
        for &v in self.persons {
            self.theta[v] -= mean;
        }
    }

    /// Subtracting `c` from every threshold is absorbed by moving every
    /// ability down by `c`.
    fn center_thresholds(&mut self) {
        let c = self.tau.iter().sum::<f64>() / self.tau.len() as f64;
        for t in &mut self.tau {
            *t -= c;
        }
        for &v in self.persons {
            self.theta[v] -= c;
        }
    }
}

fn newton_step(gradient: f64, information: f64) -> f64 {
    if information <= 0.0 {
        return 0.0;
    }
    (gradient / information).clamp(-MAX_STEP, MAX_STEP)
}

/// Largest of `step, step/2, ...` accepted by `ok`; zero when none is.
fn damped(step: f64, mut ok: impl FnMut(f64) -> bool) -> f64 {
    let mut s = step;
    for _ in 0..MAX_HALVINGS {
        if ok(s) {
            return s;
        }
        s *= 0.5;
    }
    0.0
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

pub fn fit_jmle(matrix: &ResponseMatrix, opts: &JmleOptions) -> Result<RaschEstimate, RaschError> {
    let present: Vec<u8> = (0..matrix.persons())
        .flat_map(|v| matrix.row(v).iter().flatten().copied())
        .collect();
    if present.is_empty() {
        return Err(RaschError::DegenerateData("no responses".into()));
    }
    if present.iter().all(|&x| x == present[0]) {
        return Err(RaschError::DegenerateData(format!(
            "every response is category {}",
            present[0]
        )));
    }
    let active = find_active(matrix);
    if active.persons.is_empty() || active.items.is_empty() {
        return Err(RaschError::DegenerateData(
            "no non-extreme persons and items remain".into(),
        ));
    }
    let mcat = matrix.max_category() as usize;
    let top = mcat as f64;

    let mut counts = vec![0usize; mcat + 1];
    for &v in &active.persons {
        for &i in &active.items {
            if let Some(x) = matrix.get(v, i) {
                counts[x as usize] += 1;
            }
        }
    }
    if let Some(k) = counts.iter().position(|&c| c == 0) {
        return Err(RaschError::DegenerateData(format!(
            "category {k} is never observed among non-extreme responses"
        )));
    }

    // starting values from smoothed raw-score logits
    let mut theta = vec![0.0; matrix.persons()];
    let mut delta = vec![0.0; matrix.items()];
    for &v in &active.persons {
        let cells: Vec<f64> = active.items.iter().filter_map(|&i| matrix.get(v, i)).map(f64::from).collect();
        let p = (cells.iter().sum::<f64>() + 0.5) / (cells.len() as f64 * top + 1.0);
        theta[v] = logit(p);
    }
    for &i in &active.items {
        let cells: Vec<f64> = active.persons.iter().filter_map(|&v| matrix.get(v, i)).map(f64::from).collect();
        let p = (cells.iter().sum::<f64>() + 0.5) / (cells.len() as f64 * top + 1.0);
        delta[i] = -logit(p);
    }
    let tau: Vec<f64> = (1..=mcat)
        .map(|k| (counts[k - 1] as f64 / counts[k] as f64).ln())
        .collect();

    let mut model = Model {
        m: matrix,
        persons: &active.persons,
        items: &active.items,
        theta,
        delta,
        tau,
        probs: vec![0.0; mcat + 1],
    };
    model.center_items();
    model.center_thresholds();

    let mut trace = vec![model.total_ll()];
    let mut converged = false;
    let mut iterations_used = 0;
    for iter in 1..=opts.max_iter.max(1) {
        iterations_used = iter;
        let a = model.step_persons();
        let b = model.step_items();
        let c = model.step_thresholds();
        trace.push(model.total_ll());
        if a.max(b).max(c) < opts.tol {
            converged = true;
            break;
        }
    }

    let log_likelihood = model.total_ll();
    let Model {
        mut theta,
        mut delta,
        tau,
        ..
    } = model;

    // standard errors from the observed information
    let mut person_se = vec![f64::NAN; matrix.persons()];
    let mut item_se = vec![f64::NAN; matrix.items()];
    let mut probs = vec![0.0; mcat + 1];
    let mut item_info = vec![0.0; matrix.items()];
    for &v in &active.persons {
        let mut info = 0.0;
        for &i in &active.items {
            if matrix.get(v, i).is_some() {
                let w = super::rsm::expected_and_variance(theta[v] - delta[i], &tau, &mut probs).1;
                info += w;
                item_info[i] += w;
            }
        }
        person_se[v] = 1.0 / info.sqrt();
    }
    for &i in &active.items {
        item_se[i] = 1.0 / item_info[i].sqrt();
    }

    let (tmin, tmax) = min_max(active.persons.iter().map(|&v| theta[v]));
    let (dmin, dmax) = min_max(active.items.iter().map(|&i| delta[i]));
    for (v, status) in active.person_status.iter().enumerate() {
        match status {
            MeasureStatus::ExtremeMaximum => theta[v] = tmax + 1.0,
            MeasureStatus::ExtremeMinimum => theta[v] = tmin - 1.0,
            MeasureStatus::NoData => theta[v] = f64::NAN,
            MeasureStatus::Estimated => {}
        }
    }
    for (i, status) in active.item_status.iter().enumerate() {
        match status {
            // everyone endorsed the top category: easier than any interior item
            MeasureStatus::ExtremeMaximum => delta[i] = dmin - 1.0,
            MeasureStatus::ExtremeMinimum => delta[i] = dmax + 1.0,
            MeasureStatus::NoData => delta[i] = f64::NAN,
            MeasureStatus::Estimated => {}
        }
    }

    Ok(RaschEstimate {
        person_ability: theta,
        person_se,
        person_status: active.person_status,
        item_difficulty: delta,
        item_se,
        item_status: active.item_status,
        thresholds: tau,
        converged,
        iterations_used,
        log_likelihood,
        trace,
    })
}

fn min_max(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
}

/// Joint log-likelihood of `matrix` under arbitrary parameters, over every
/// present cell.
pub fn joint_log_likelihood(
    matrix: &ResponseMatrix,
    abilities: &[f64],
    difficulties: &[f64],
    thresholds: &[f64],
) -> f64 {
    let mut ll = 0.0;
    for (v, theta) in abilities.iter().enumerate() {
        for (i, delta) in difficulties.iter().enumerate() {
            if let Some(x) = matrix.get(v, i) {
                ll += log_prob(theta - delta, thresholds, x as usize);
            }
        }
    }
    ll
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::psychometrics::matrix::simulate_responses;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn all_zero_matrix_is_degenerate() {
        let m = ResponseMatrix::from_rows(&vec![vec![0; 4]; 6], 4).unwrap();
        assert!(matches!(
            fit_jmle(&m, &JmleOptions::default()),
            Err(RaschError::DegenerateData(_))
        ));
    }

    #[test]
    fn all_extreme_is_degenerate() {
        let m = ResponseMatrix::from_rows(&[vec![0, 0], vec![1, 1]], 1).unwrap();
        assert!(matches!(
            fit_jmle(&m, &JmleOptions::default()),
            Err(RaschError::DegenerateData(_))
        ));
    }

    #[test]
    fn dichotomous_closed_form() {
        // every person scores 1 of 2, item 1 is endorsed twice: the maximum
        // sits at theta = 0, delta = -+ln 2
        let m = ResponseMatrix::from_rows(&[vec![1, 0], vec![0, 1], vec![1, 0]], 1).unwrap();
        let est = fit_jmle(&m, &JmleOptions { tol: 1e-10, max_iter: 1000 }).unwrap();
        assert!(est.converged);
        let ln2 = 2f64.ln();
        assert!((est.item_difficulty[0] + ln2).abs() < 1e-8);
        assert!((est.item_difficulty[1] - ln2).abs() < 1e-8);
        for t in &est.person_ability {
            assert!(t.abs() < 1e-8);
        }
        assert_eq!(est.thresholds, vec![0.0]);
    }

    #[test]
    fn extreme_persons_get_sentinels() {
        let mut rows = vec![vec![4; 5], vec![0; 5]];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sim = simulate_responses(
            &Normal::new(0.0, 1.0).unwrap().sample_iter(&mut rng).take(200).collect::<Vec<_>>(),
            &[-1.0, -0.5, 0.0, 0.5, 1.0],
            &[-1.5, -0.5, 0.5, 1.5],
            &mut ChaCha8Rng::seed_from_u64(4),
        );
        for v in 0..sim.persons() {
            rows.push(sim.row(v).iter().map(|c| c.unwrap()).collect());
        }
        let m = ResponseMatrix::from_rows(&rows, 4).unwrap();
        let est = fit_jmle(&m, &JmleOptions::default()).unwrap();
        assert_eq!(est.person_status[0], MeasureStatus::ExtremeMaximum);
        assert_eq!(est.person_status[1], MeasureStatus::ExtremeMinimum);
        let interior: Vec<f64> = est.estimated_persons().map(|v| est.person_ability[v]).collect();
        let hi = interior.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = interior.iter().copied().fold(f64::INFINITY, f64::min);
        assert_eq!(est.person_ability[0], hi + 1.0);
        assert_eq!(est.person_ability[1], lo - 1.0);
        let sum: f64 = est.estimated_items().map(|i| est.item_difficulty[i]).sum();
        assert!(sum.abs() < 1e-10);
        assert!((est.thresholds.iter().sum::<f64>()).abs() < 1e-10);
    }

    #[test]
    fn objective_never_decreases() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let theta: Vec<f64> = Normal::new(0.3, 1.2).unwrap().sample_iter(&mut rng).take(120).collect();
        let m = simulate_responses(&theta, &[-1.2, -0.4, 0.0, 0.6, 1.0, 1.3], &[-2.0, -0.3, 0.4, 1.9], &mut rng);
        let est = fit_jmle(&m, &JmleOptions::default()).unwrap();
        assert!(est.converged);
        for w in est.trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-9 * w[0].abs(), "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let theta: Vec<f64> = Normal::new(0.0, 1.0).unwrap().sample_iter(&mut rng).take(60).collect();
        let m = simulate_responses(&theta, &[-1.0, 0.0, 1.0], &[-1.0, 0.0, 1.0], &mut rng);
        let est = fit_jmle(&m, &JmleOptions { tol: 1e-12, max_iter: 2 }).unwrap();
        assert!(!est.converged);
        assert_eq!(est.iterations_used, 2);
        assert!(matches!(est.require_converged(), Err(RaschError::NoConvergence { iterations: 2 })));
    }

    #[test]
    fn missing_cells_are_skipped() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let theta: Vec<f64> = Normal::new(0.0, 1.0).unwrap().sample_iter(&mut rng).take(400).collect();
        let deltas = [-1.0, -0.6, -0.3, 0.0, 0.2, 0.6, 1.1];
        let full = simulate_responses(&theta, &deltas, &[-1.0, 0.0, 1.0], &mut rng);
        let mut data = Vec::new();
        for v in 0..full.persons() {
            for i in 0..full.items() {
                data.push(if (v + i) % 7 == 0 { None } else { full.get(v, i) });
            }
        }
        let holey = ResponseMatrix::new(full.persons(), full.items(), 3, data).unwrap();
        let a = fit_jmle(&full, &JmleOptions::default()).unwrap();
        let b = fit_jmle(&holey, &JmleOptions::default()).unwrap();
        assert!(b.converged);
        for (x, y) in a.item_difficulty.iter().zip(&b.item_difficulty) {
            assert!((x - y).abs() < 0.15, "{x} vs {y}");
        }
    }

    #[test]
    fn unobserved_category_is_rejected() {
        let m = ResponseMatrix::from_rows(&[vec![0, 2], vec![2, 0], vec![0, 2]], 2).unwrap();
        assert!(matches!(
            fit_jmle(&m, &JmleOptions::default()),
            Err(RaschError::DegenerateData(_))
        ));
    }
}
