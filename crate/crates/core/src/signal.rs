//! Time-series conditioning: linear resampling onto a constant interval and
//! centered moving-average smoothing.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default output rate, matching the 30 fps tracking streams.
pub const DEFAULT_RATE_HZ: f64 = 30.0;
pub const DEFAULT_WINDOW: usize = 5;
/// Relative tolerance on sample spacing when checking uniformity.
const UNIFORM_RTOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum SignalError {
    #[error("series needs at least {needed} samples, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("timestamps must be finite and strictly increasing (index {0})")]
    NotIncreasing(usize),
    #[error("series is not uniformly sampled (index {0})")]
    NotUniform(usize),
    #[error("sampling rate must be positive, got {0}")]
    InvalidRate(f64),
    #[error("smoothing window must be odd and at least 1, got {0}")]
    InvalidWindow(usize),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub v: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    samples: Vec<Sample>,
}

impl TimeSeries {
    pub fn new(samples: Vec<Sample>) -> Result<Self, SignalError> {
        if samples.is_empty() {
            return Err(SignalError::TooShort { needed: 1, got: 0 });
        }
        for (i, s) in samples.iter().enumerate() {
            if !s.t.is_finite() || (i > 0 && s.t <= samples[i - 1].t) {
                return Err(SignalError::NotIncreasing(i));
            }
        }
        Ok(Self { samples })
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (f64, f64)>) -> Result<Self, SignalError> {
        Self::new(pairs.into_iter().map(|(t, v)| Sample { t, v }).collect())
    }

    /// Uniform series starting at `t0`.
    pub fn uniform(t0: f64, rate_hz: f64, values: &[f64]) -> Result<Self, SignalError> {
        Self::from_pairs(values.iter().enumerate().map(|(i, &v)| (t0 + i as f64 / rate_hz, v)))
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn values(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.v).collect()
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Index of the first spacing that deviates from the first one, if any.
    pub fn first_nonuniform(&self) -> Option<usize> {
        if self.samples.len() < 3 {
            return None;
        }
        let dt = self.samples[1].t - self.samples[0].t;
        self.samples
            .windows(2)
            .position(|w| ((w[1].t - w[0].t) - dt).abs() > UNIFORM_RTOL * dt)
            .map(|i| i + 1)
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self, SignalError> {
        let mut rdr = csv::Reader::from_reader(reader);
        let samples = rdr.deserialize().collect::<Result<Vec<Sample>, _>>()?;
        Self::new(samples)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), SignalError> {
        let mut wtr = csv::Writer::from_writer(writer);
        for s in &self.samples {
            wtr.serialize(s)?;
        }
        wtr.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Linear interpolation onto `t0, t0 + 1/rate, ...` up to the last timestamp.
pub fn resample_uniform(ts: &TimeSeries, rate_hz: f64) -> Result<TimeSeries, SignalError> {
    if !(rate_hz > 0.0 && rate_hz.is_finite()) {
        return Err(SignalError::InvalidRate(rate_hz));
    }
    let s = ts.samples();
    if s.len() < 2 {
        return Err(SignalError::TooShort {
            needed: 2,
            got: s.len(),
        });
    }
    let t0 = s[0].t;
    let t_end = s[s.len() - 1].t;
    let span = t_end - t0;
    // grid times are t0 + k/rate; tolerate rounding at the final knot
    let steps = (span * rate_hz * (1.0 + 1e-12)).floor() as usize;
    let mut out = Vec::with_capacity(steps + 1);
    let mut seg = 0;
    for k in 0..=steps {
        let t = t0 + k as f64 / rate_hz;
        while seg + 2 < s.len() && s[seg + 1].t <= t {
            seg += 1;
        }
        let (a, b) = (s[seg], s[seg + 1]);
        let v = if t == a.t {
            a.v
        } else if t >= b.t {
            b.v
        } else {
            let w = (t - a.t) / (b.t - a.t);
            a.v + w * (b.v - a.v)
        };
        out.push(Sample { t, v });
    }
    TimeSeries::new(out)
}

/// Centered moving average; the window shrinks symmetrically at the edges.
pub fn smooth(ts: &TimeSeries, window: usize) -> Result<TimeSeries, SignalError> {
    if window == 0 || window.is_multiple_of(2) {
        return Err(SignalError::InvalidWindow(window));
    }
    if let Some(i) = ts.first_nonuniform() {
        return Err(SignalError::NotUniform(i));
    }
    let values = ts.values();
    let n = values.len();
    let half = window / 2;
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for v in &values {
        prefix.push(prefix.last().unwrap() + v);
    }
    let smoothed = ts
        .samples()
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let h = half.min(i).min(n - 1 - i);
            let (lo, hi) = (i - h, i + h);
            let v = if h == 0 {
                values[i]
            } else if h < 8 {
                values[lo..=hi].iter().sum::<f64>() / (2 * h + 1) as f64
            } else {
                (prefix[hi + 1] - prefix[lo]) / (2 * h + 1) as f64
            };
            Sample { t: s.t, v }
        })
        .collect();
    TimeSeries::new(smoothed)
}
