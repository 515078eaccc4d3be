//! Change detection on a binary ACK sequence with the Schwarz information
//! criterion.
//!
//! The sequence is cut into windows of length `W` shifted by `F`, and the
//! per-window success counts `x_d` are treated as binomial draws. The
//! no-change model (one success probability for all windows) is compared
//! against the best single-split model; a change is reported when
//!
//! ```text
//! SIC(D) - min_j SIC(j) > theta
//! ```
//!
//! Natural logarithms throughout, with `0 * ln 0 = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary ACK observations plus the windowing parameters used to summarize them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AckHistory {
    bits: Vec<bool>,
    window: usize,
    shift: usize,
}

impl AckHistory {
    pub fn new(window: usize, shift: usize) -> Result<Self> {
        if window < 1 {
            return Err(Error::Config("window length must be >= 1".into()));
        }
        if shift < 1 || shift > window {
            return Err(Error::Config(format!(
                "shift {shift} must lie in [1, {window}]"
            )));
        }
        Ok(Self {
            bits: Vec::new(),
            window,
            shift,
        })
    }

    pub fn from_bits(
        bits: impl IntoIterator<Item = bool>,
        window: usize,
        shift: usize,
    ) -> Result<Self> {
        let mut h = Self::new(window, shift)?;
        h.bits.extend(bits);
        Ok(h)
    }

    pub fn push(&mut self, ack: bool) {
        self.bits.push(ack);
    }

    pub fn clear(&mut self) {
        self.bits.clear();
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn shift(&self) -> usize {
        self.shift
    }

    pub fn successes(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// Per-window success counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowStats {
    successes: Vec<u32>,
    window: u32,
}

impl WindowStats {
    pub fn new(successes: Vec<u32>, window: u32) -> Result<Self> {
        if window < 1 {
            return Err(Error::Domain("window length must be >= 1".into()));
        }
        if successes.is_empty() {
            return Err(Error::Domain("at least one window is required".into()));
        }
        if let Some(x) = successes.iter().find(|&&x| x > window) {
            return Err(Error::Domain(format!(
                "window count {x} exceeds window length {window}"
            )));
        }
        Ok(Self { successes, window })
    }

    pub fn successes(&self) -> &[u32] {
        &self.successes
    }

    pub fn window(&self) -> u32 {
        self.window
    }

    pub fn window_count(&self) -> usize {
        self.successes.len()
    }

    /// `X`
    pub fn total_successes(&self) -> u64 {
        self.successes.iter().map(|&x| u64::from(x)).sum()
    }

    /// `Y = D * W`
    pub fn total_attempts(&self) -> u64 {
        self.successes.len() as u64 * u64::from(self.window)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SicResult {
    pub sic_h0: f64,
    pub sic_h1_min: f64,
    pub best_split: usize,
    pub statistic: f64,
    pub detected: bool,
    pub window_count: usize,
}

impl SicResult {
    fn not_evaluated(window_count: usize) -> Self {
        Self {
            sic_h0: f64::NAN,
            sic_h1_min: f64::NAN,
            best_split: 0,
            statistic: f64::NAN,
            detected: false,
            window_count,
        }
    }
}

/// Splits the sequence into whole windows. Trailing samples that do not
/// complete a window are ignored here but stay in the history.
pub fn windowize(history: &AckHistory) -> Result<WindowStats> {
    let (w, f) = (history.window, history.shift);
    let l = history.len();
    if l < w {
        return Err(Error::InsufficientData { needed: w, have: l });
    }
    let count = (l - w) / f + 1;
    let mut prefix = Vec::with_capacity(l + 1);
    prefix.push(0u32);
    for &b in &history.bits {
        prefix.push(prefix.last().unwrap() + u32::from(b));
    }
    let successes = (0..count)
        .map(|d| prefix[d * f + w] - prefix[d * f])
        .collect();
    WindowStats::new(successes, w as u32)
}

/// `a * ln(a / b)` with `0 * ln 0 = 0`.
fn xlogx(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a * (a / b).ln()
    }
}

/// Twice the maximized binomial log-likelihood kernel of one segment, negated.
fn segment_term(successes: f64, attempts: f64) -> f64 {
    -2.0 * xlogx(attempts - successes, attempts) - 2.0 * xlogx(successes, attempts)
}

fn ln_binomial(n: u32, k: u32) -> f64 {
    let (n, k) = (f64::from(n), f64::from(k));
    libm::lgamma(n + 1.0) - libm::lgamma(k + 1.0) - libm::lgamma(n - k + 1.0)
}

fn binomial_sum(stats: &WindowStats) -> f64 {
    let table: Vec<f64> = (0..=stats.window)
        .map(|k| ln_binomial(stats.window, k))
        .collect();
    stats.successes.iter().map(|&x| table[x as usize]).sum()
}

pub fn sic_h0(stats: &WindowStats) -> f64 {
    let d = stats.window_count() as f64;
    let x = stats.total_successes() as f64;
    let y = stats.total_attempts() as f64;
    d.ln() - 2.0 * binomial_sum(stats) + segment_term(x, y)
}

/// SIC of the model with a change after window `j` (1-based, `1 <= j < D`).
pub fn sic_h1(stats: &WindowStats, j: usize) -> Result<f64> {
    let d = stats.window_count();
    if j < 1 || j >= d {
        return Err(Error::Domain(format!(
            "split {j} outside [1, {}]",
            d.saturating_sub(1)
        )));
    }
    let head: u64 = stats.successes[..j].iter().map(|&x| u64::from(x)).sum();
    Ok(sic_h1_from_totals(stats, j, head, binomial_sum(stats)))
}

fn sic_h1_from_totals(stats: &WindowStats, j: usize, head_successes: u64, binom: f64) -> f64 {
    let d = stats.window_count() as f64;
    let w = f64::from(stats.window);
    let x = stats.total_successes() as f64;
    let y = stats.total_attempts() as f64;
    let xj = head_successes as f64;
    let yj = j as f64 * w;
    2.0 * d.ln() - 2.0 * binom + segment_term(xj, yj) + segment_term(x - xj, y - yj)
}

/// Scans every split point. Returns the smallest `SIC(j)` and its split,
/// lowest `j` on ties. Requires `D >= 2`.
fn best_split(stats: &WindowStats, binom: f64) -> (usize, f64) {
    let mut best = (1, f64::INFINITY);
    let mut head = 0u64;
    for j in 1..stats.window_count() {
        head += u64::from(stats.successes[j - 1]);
        let v = sic_h1_from_totals(stats, j, head, binom);
        if v < best.1 {
            best = (j, v);
        }
    }
    best
}

/// Evaluates the change criterion on already windowed counts.
pub fn detect_windows(stats: &WindowStats, theta: f64) -> SicResult {
    let d = stats.window_count();
    if d < 2 {
        return SicResult::not_evaluated(d);
    }
    let binom = binomial_sum(stats);
    let h0 = {
        let x = stats.total_successes() as f64;
        let y = stats.total_attempts() as f64;
        (d as f64).ln() - 2.0 * binom + segment_term(x, y)
    };
    let (split, h1) = best_split(stats, binom);
    let statistic = h0 - h1;
    SicResult {
        sic_h0: h0,
        sic_h1_min: h1,
        best_split: split,
        statistic,
        detected: statistic > theta,
        window_count: d,
    }
}

/// Runs the detector on a history. Too little data for two windows yields
/// `detected = false` with NaN statistics.
pub fn detect(history: &AckHistory, theta: f64) -> SicResult {
    match windowize(history) {
        Ok(stats) => detect_windows(&stats, theta),
        Err(_) => SicResult::not_evaluated(0),
    }
}

/// Parses a detector input file: `0`/`1` characters, whitespace ignored.
pub fn parse_bits(text: &str) -> Result<Vec<bool>> {
    text.chars()
        .filter(|c| !c.is_whitespace())
        .enumerate()
        .map(|(i, c)| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(Error::Parse(format!(
                "unexpected character {other:?} at bit {i}"
            ))),
        })
        .collect()
}
