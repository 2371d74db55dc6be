//! Detection thresholds: fold signed strengths to magnitudes, enforce
//! monotonicity with weighted pool-adjacent-violators, then interpolate.

use serde::{Deserialize, Serialize};

use super::MetricError;

pub const DETECTION_LEVEL: f64 = 0.95;

/// Observed detection fraction at one strength; `n` weights pooling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionRate {
    pub alpha: f64,
    pub rate: f64,
    pub n: usize,
}

/// Merges signed strengths of equal magnitude (weighted by `n`) and drops alpha = 0.
/// Result is ascending in magnitude.
pub fn fold_magnitudes(rates: &[DetectionRate]) -> Vec<DetectionRate> {
    let mut sorted: Vec<DetectionRate> = rates
        .iter()
        .filter(|r| r.alpha.abs() > 1e-12 && r.n > 0)
        .map(|r| DetectionRate {
            alpha: r.alpha.abs(),
            ..*r
        })
        .collect();
    sorted.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));
    let mut out: Vec<DetectionRate> = Vec::new();
    for r in sorted {
        match out.last_mut() {
            Some(last) if (last.alpha - r.alpha).abs() < 1e-9 => {
                let n = last.n + r.n;
                last.rate = (last.rate * last.n as f64 + r.rate * r.n as f64) / n as f64;
                last.n = n;
            }
            _ => out.push(r),
        }
    }
    out
}

/// Weighted isotonic (non-decreasing) regression of the rates.
fn pava(points: &[DetectionRate]) -> Vec<DetectionRate> {
    // Blocks of (weighted mean, total weight, member count).
    let mut blocks: Vec<(f64, f64, usize)> = Vec::new();
    for p in points {
        blocks.push((p.rate, p.n as f64, 1));
        while blocks.len() > 1 && blocks[blocks.len() - 2].0 > blocks[blocks.len() - 1].0 {
            let (m2, w2, c2) = blocks.pop().unwrap();
            let (m1, w1, c1) = blocks.pop().unwrap();
            blocks.push(((m1 * w1 + m2 * w2) / (w1 + w2), w1 + w2, c1 + c2));
        }
    }
    let mut out = Vec::with_capacity(points.len());
    let mut i = 0;
    for (mean, _, count) in blocks {
        for p in &points[i..i + count] {
            out.push(DetectionRate { rate: mean, ..*p });
        }
        i += count;
    }
    out
}

pub(super) fn first_crossing(points: &[DetectionRate], level: f64) -> Option<f64> {
    let first = points.first()?;
    if first.rate >= level {
        return Some(first.alpha);
    }
    points.windows(2).find_map(|w| {
        let (a, b) = (w[0], w[1]);
        (a.rate < level && b.rate >= level)
            .then(|| a.alpha + (level - a.rate) / (b.rate - a.rate) * (b.alpha - a.alpha))
    })
}

/// Smallest magnitude whose monotone, interpolated detection rate reaches 95%.
pub fn human_threshold(rates: &[DetectionRate]) -> Result<Option<f64>, MetricError> {
    let folded = fold_magnitudes(rates);
    if folded.len() < 3 {
        return Err(MetricError::InsufficientData(folded.len()));
    }
    if let Some(bad) = folded.iter().find(|r| !(0.0..=1.0).contains(&r.rate)) {
        return Err(MetricError::OutOfRange(bad.rate));
    }
    Ok(first_crossing(&pava(&folded), DETECTION_LEVEL))
}
