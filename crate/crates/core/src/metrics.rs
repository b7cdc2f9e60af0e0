//! Stability and detection-quality metrics.
//!
//! TDEV over a uniformly sampled time-error series x_0..x_{N-1} at averaging
//! factor n (tau = n*tau0):
//!
//! ```text
//! TDEV^2 = 1/(6 n^2 (N-3n+1)) * sum_{j=0}^{N-3n} [ sum_{i=j}^{n+j-1} (x_{i+2n} - 2x_{i+n} + x_i) ]^2
//! ```
//!
//! MTIE at window factor n:
//!
//! ```text
//! MTIE = max_{i=0..N-n-1} max_{k=1..n} |x_{i+k} - x_i|
//! ```
//!
//! which equals the maximum of (window max - window min) over all windows of
//! n+1 consecutive samples.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Uniformly sampled post-correction time-error series.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeErrorSeries {
    /// Samples x_i, seconds.
    pub samples: Vec<f64>,
    /// Sample spacing tau0, seconds, > 0.
    pub tau0: f64,
}

impl TimeErrorSeries {
    pub fn new(samples: Vec<f64>, tau0: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidInput("series must have at least 1 sample".into()));
        }
        ensure_finite("tau0", tau0)?;
        if tau0 <= 0.0 {
            return Err(Error::InvalidInput(format!("tau0 must be > 0, got {tau0}")));
        }
        for (i, &x) in samples.iter().enumerate() {
            if !x.is_finite() {
                return Err(Error::InvalidInput(format!("sample {i} is not finite: {x}")));
            }
        }
        Ok(Self { samples, tau0 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StabilityMetric {
    Tdev,
    Mtie,
}

/// Metric values versus averaging time.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityCurve {
    /// (tau seconds, metric value seconds), taus strictly increasing.
    pub points: Vec<(f64, f64)>,
}

/// Per-epoch confusion counts for attack detection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionTally {
    pub true_positives: u64,
    pub false_positives: u64,
    pub false_negatives: u64,
    pub true_negatives: u64,
    /// TP/(TP+FP); None when no epoch was flagged (reported as "/").
    pub precision: Option<f64>,
    /// TP/(TP+FN); None when no attack actually occurred.
    pub recall: Option<f64>,
}

/// Time deviation at averaging factor n. Requires N >= 3n.
pub fn tdev(series: &TimeErrorSeries, n: usize) -> Result<f64> {
    let x = &series.samples;
    let big_n = x.len();
    let max_n = big_n / 3;
    if n < 1 || n > max_n || big_n < 3 * n {
        return Err(Error::TauOutOfRange { n, max_n });
    }
    // d_i = x_{i+2n} - 2 x_{i+n} + x_i for i = 0..N-2n-1; the inner sum is a
    // length-n sliding window over d, taken as prefix-sum differences.
    let d_len = big_n - 2 * n;
    let mut prefix = Vec::with_capacity(d_len + 1);
    prefix.push(0.0f64);
    let mut acc = 0.0f64;
    for i in 0..d_len {
        acc += x[i + 2 * n] - 2.0 * x[i + n] + x[i];
        prefix.push(acc);
    }
    let terms = big_n - 3 * n + 1;
    let mut sum_sq = 0.0f64;
    for j in 0..terms {
        let inner = prefix[j + n] - prefix[j];
        sum_sq += inner * inner;
    }
    let n_f = n as f64;
    Ok((sum_sq / (6.0 * n_f * n_f * terms as f64)).sqrt())
}

/// Literal triple-loop evaluation of the TDEV formula; oracle for `tdev`.
pub fn tdev_literal(series: &TimeErrorSeries, n: usize) -> Result<f64> {
    let x = &series.samples;
    let big_n = x.len();
    let max_n = big_n / 3;
    if n < 1 || big_n < 3 * n {
        return Err(Error::TauOutOfRange { n, max_n });
    }
    let mut sum_sq = 0.0f64;
    for j in 0..=(big_n - 3 * n) {
        let mut inner = 0.0f64;
        for i in j..(n + j) {
            inner += x[i + 2 * n] - 2.0 * x[i + n] + x[i];
        }
        sum_sq += inner * inner;
    }
    let n_f = n as f64;
    let terms = (big_n - 3 * n + 1) as f64;
    Ok((sum_sq / (6.0 * n_f * n_f * terms)).sqrt())
}

/// Maximum time interval error at window factor n. Requires n <= N-1.
///
/// The formula anchors every difference at the window's first sample, so the
/// value per anchor i is max(max(W) - x_i, x_i - min(W)) with
/// W = x_{i+1}..x_{i+n}. Monotonic deques give the sliding window max/min in
/// O(N); agreement with the literal double loop is verified by tests.
pub fn mtie(series: &TimeErrorSeries, n: usize) -> Result<f64> {
    let x = &series.samples;
    let big_n = x.len();
    let max_n = big_n.saturating_sub(1);
    if n < 1 || n > max_n {
        return Err(Error::TauOutOfRange { n, max_n });
    }
    let mut max_dq: std::collections::VecDeque<usize> = Default::default();
    let mut min_dq: std::collections::VecDeque<usize> = Default::default();
    let mut best = 0.0f64;
    for j in 1..big_n {
        while max_dq.back().is_some_and(|&k| x[k] <= x[j]) {
            max_dq.pop_back();
        }
        max_dq.push_back(j);
        while min_dq.back().is_some_and(|&k| x[k] >= x[j]) {
            min_dq.pop_back();
        }
        min_dq.push_back(j);
        if j >= n {
            // window x[j-n+1 ..= j] is complete; its anchor is i = j-n
            let lo = j - n + 1;
            if *max_dq.front().unwrap() < lo {
                max_dq.pop_front();
            }
            if *min_dq.front().unwrap() < lo {
                min_dq.pop_front();
            }
            let anchor = x[j - n];
            let span = (x[*max_dq.front().unwrap()] - anchor).max(anchor - x[*min_dq.front().unwrap()]);
            if span > best {
                best = span;
            }
        }
    }
    Ok(best)
}

/// Literal double-max evaluation of the MTIE formula; oracle for `mtie`.
pub fn mtie_literal(series: &TimeErrorSeries, n: usize) -> Result<f64> {
    let x = &series.samples;
    let big_n = x.len();
    let max_n = big_n.saturating_sub(1);
    if n < 1 || n > max_n {
        return Err(Error::TauOutOfRange { n, max_n });
    }
    let mut best = 0.0f64;
    for i in 0..(big_n - n) {
        for k in 1..=n {
            let v = (x[i + k] - x[i]).abs();
            if v > best {
                best = v;
            }
        }
    }
    Ok(best)
}

/// Evaluates one metric at each averaging factor in `taus` (in samples).
pub fn stability_curve(
    series: &TimeErrorSeries,
    metric: StabilityMetric,
    taus: &[usize],
) -> Result<StabilityCurve> {
    let mut last = 0usize;
    for &n in taus {
        if n <= last {
            return Err(Error::InvalidInput(
                "averaging factors must be strictly increasing".into(),
            ));
        }
        last = n;
    }
    let mut points = Vec::with_capacity(taus.len());
    for &n in taus {
        let v = match metric {
            StabilityMetric::Tdev => tdev(series, n)?,
            StabilityMetric::Mtie => mtie(series, n)?,
        };
        points.push((n as f64 * series.tau0, v));
    }
    Ok(StabilityCurve { points })
}

/// Epoch-aligned confusion counts from ground-truth and detector verdicts.
pub fn precision_recall(actual: &[bool], detected: &[bool]) -> Result<DetectionTally> {
    if actual.len() != detected.len() {
        return Err(Error::LengthMismatch {
            actual: actual.len(),
            detected: detected.len(),
        });
    }
    let (mut tp, mut fp, mut fne, mut tn) = (0u64, 0u64, 0u64, 0u64);
    for (&a, &d) in actual.iter().zip(detected) {
        match (a, d) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (true, false) => fne += 1,
            (false, false) => tn += 1,
        }
    }
    let precision = (tp + fp > 0).then(|| tp as f64 / (tp + fp) as f64);
    let recall = (tp + fne > 0).then(|| tp as f64 / (tp + fne) as f64);
    Ok(DetectionTally {
        true_positives: tp,
        false_positives: fp,
        false_negatives: fne,
        true_negatives: tn,
        precision,
        recall,
    })
}
