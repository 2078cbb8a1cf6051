use serde::Serialize;

use super::DynamicsError;
use crate::geometry::Point3;

/// Per-sample Euclidean deviation (mm) with summary statistics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Deviation {
    pub series: Vec<f64>,
    pub max: f64,
    pub min: f64,
    pub mean: f64,
}

/// `|commanded_i - simulated_i|` for every sample.
///
/// When the series differ in length the simulated one is linearly
/// resampled onto the commanded grid, assuming both cover the same time span.
pub fn trajectory_deviation(commanded: &[Point3], simulated: &[Point3]) -> Result<Deviation, DynamicsError> {
    if commanded.is_empty() || simulated.is_empty() {
        return Err(DynamicsError::EmptyInput);
    }
    let sim: Vec<Point3> = if simulated.len() == commanded.len() {
        simulated.to_vec()
    } else {
        resample_points(simulated, commanded.len())
    };
    let series: Vec<f64> = commanded.iter().zip(&sim).map(|(a, b)| (a - b).norm()).collect();
    let max = series.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = series.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = series.iter().sum::<f64>() / series.len() as f64;
    Ok(Deviation { series, max, min, mean })
}

/// Linear resampling of a uniformly spaced series to `len` samples.
pub fn resample_points(src: &[Point3], len: usize) -> Vec<Point3> {
    if len == 0 || src.is_empty() {
        return Vec::new();
    }
    if src.len() == 1 || len == 1 {
        return vec![src[0]; len];
    }
    let scale = (src.len() - 1) as f64 / (len - 1) as f64;
    (0..len)
        .map(|i| {
            let x = i as f64 * scale;
            let j = (x.floor() as usize).min(src.len() - 2);
            let f = x - j as f64;
            src[j] + (src[j + 1] - src[j]) * f
        })
        .collect()
}

/// Vibration amplitude of one layer, one entry per axis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerAmplitude {
    pub rms: Vec<f64>,
    pub peak: Vec<f64>,
    /// `sqrt(sum of squared per-axis RMS)`.
    pub combined_rms: f64,
}

/// Per-layer RMS and peak of acceleration signals sampled every `dt`.
///
/// `boundaries` holds `n_layers + 1` increasing times; layer `j` covers
/// `[b_j, b_{j+1})`, the last one closed. Layers without samples are `None`.
pub fn layered_amplitude(axes: &[Vec<f64>], dt: f64, boundaries: &[f64]) -> Vec<Option<LayerAmplitude>> {
    let len = axes.iter().map(Vec::len).min().unwrap_or(0);
    let layers = boundaries.len().saturating_sub(1);
    (0..layers)
        .map(|j| {
            let (t0, t1) = (boundaries[j], boundaries[j + 1]);
            let last = j + 1 == layers;
            let idx: Vec<usize> = (0..len)
                .filter(|&i| {
                    let t = i as f64 * dt;
                    t >= t0 && (t < t1 || (last && t <= t1))
                })
                .collect();
            if idx.is_empty() {
                return None;
            }
            let mut rms = Vec::with_capacity(axes.len());
            let mut peak = Vec::with_capacity(axes.len());
            for a in axes {
                let ss: f64 = idx.iter().map(|&i| a[i] * a[i]).sum();
                rms.push((ss / idx.len() as f64).sqrt());
                peak.push(idx.iter().map(|&i| a[i].abs()).fold(0.0, f64::max));
            }
            let combined_rms = rms.iter().map(|r| r * r).sum::<f64>().sqrt();
            Some(LayerAmplitude { rms, peak, combined_rms })
        })
        .collect()
}

/// `(after - before) / before` per layer on the combined RMS.
///
/// Two identical layers give 0 even when both are silent; otherwise a
/// silent or missing `before` layer yields `None`.
pub fn relative_rates(before: &[Option<LayerAmplitude>], after: &[Option<LayerAmplitude>]) -> Vec<Option<f64>> {
    let n = before.len().max(after.len());
    (0..n)
        .map(|j| match (before.get(j).and_then(Option::as_ref), after.get(j).and_then(Option::as_ref)) {
            (Some(b), Some(a)) if a.combined_rms == b.combined_rms => Some(0.0),
            (Some(b), Some(a)) if b.combined_rms > 0.0 => Some((a.combined_rms - b.combined_rms) / b.combined_rms),
            _ => None,
        })
        .collect()
}
