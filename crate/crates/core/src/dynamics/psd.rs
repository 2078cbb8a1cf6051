use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use super::DynamicsError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    /// Periodic Hamming, `0.54 - 0.46 cos(2 pi n / N)`.
    Hamming,
    Rectangular,
}

impl Window {
    fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; n],
            Window::Hamming => {
                (0..n).map(|i| 0.54 - 0.46 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos()).collect()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WelchSettings {
    pub segment: usize,
    pub overlap: f64,
    pub window: Window,
    /// Subtract each segment's mean before windowing.
    pub detrend: bool,
    /// Number of spectral peaks to report.
    pub peaks: usize,
}

impl Default for WelchSettings {
    fn default() -> Self {
        Self { segment: 512, overlap: 0.5, window: Window::Hamming, detrend: false, peaks: 3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Peak {
    pub frequency: f64,
    pub power: f64,
}

/// One-sided power spectral density.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsdSpectrum {
    pub frequencies: Vec<f64>,
    /// Units of signal^2 / Hz.
    pub power: Vec<f64>,
    pub window: Window,
    pub segment: usize,
    pub overlap: f64,
    pub segments_averaged: usize,
    pub peaks: Vec<Peak>,
}

impl PsdSpectrum {
    pub fn bin_width(&self) -> f64 {
        if self.frequencies.len() > 1 {
            self.frequencies[1] - self.frequencies[0]
        } else {
            0.0
        }
    }

    /// Rectangle-rule integral of the density.
    pub fn total_power(&self) -> f64 {
        self.power.iter().sum::<f64>() * self.bin_width()
    }
}

/// Welch-averaged periodogram of `signal` sampled at `fs` Hz.
pub fn welch_psd(signal: &[f64], fs: f64, settings: &WelchSettings) -> Result<PsdSpectrum, DynamicsError> {
    let nseg = settings.segment;
    if nseg < 2 {
        return Err(DynamicsError::InvalidParameter("segment must hold at least 2 samples".into()));
    }
    if !(fs > 0.0) || !(0.0..1.0).contains(&settings.overlap) {
        return Err(DynamicsError::InvalidParameter("need fs > 0 and overlap in [0, 1)".into()));
    }
    if signal.len() < nseg {
        return Err(DynamicsError::SignalTooShort { got: signal.len(), needed: nseg });
    }
    let window = settings.window.coefficients(nseg);
    let wss: f64 = window.iter().map(|w| w * w).sum();
    let hop = (nseg - (settings.overlap * nseg as f64).round() as usize).max(1);
    let count = (signal.len() - nseg) / hop + 1;
    let fft = FftPlanner::<f64>::new().plan_fft_forward(nseg);
    let nbins = nseg / 2 + 1;
    let mut acc = vec![0.0; nbins];
    let mut buf = vec![Complex::new(0.0, 0.0); nseg];
    for s in 0..count {
        let seg = &signal[s * hop..s * hop + nseg];
        let mean = if settings.detrend { seg.iter().sum::<f64>() / nseg as f64 } else { 0.0 };
        for (b, (x, w)) in buf.iter_mut().zip(seg.iter().zip(&window)) {
            *b = Complex::new((x - mean) * w, 0.0);
        }
        fft.process(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
    }
    let scale = 1.0 / (fs * wss * count as f64);
    let power: Vec<f64> = acc
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let edge = k == 0 || (nseg.is_multiple_of(2) && k == nseg / 2);
            p * scale * if edge { 1.0 } else { 2.0 }
        })
        .collect();
    let frequencies: Vec<f64> = (0..nbins).map(|k| k as f64 * fs / nseg as f64).collect();
    let peaks = top_peaks(&frequencies, &power, settings.peaks);
    Ok(PsdSpectrum {
        frequencies,
        power,
        window: settings.window,
        segment: nseg,
        overlap: settings.overlap,
        segments_averaged: count,
        peaks,
    })
}

/// Local maxima sorted by decreasing power.
fn top_peaks(freq: &[f64], power: &[f64], k: usize) -> Vec<Peak> {
    let n = power.len();
    let mut peaks: Vec<Peak> = (0..n)
        .filter(|&i| {
            let left = i == 0 || power[i] > power[i - 1];
            let right = i + 1 == n || power[i] >= power[i + 1];
            left && right && power[i] > 0.0
        })
        .map(|i| Peak { frequency: freq[i], power: power[i] })
        .collect();
    peaks.sort_by(|a, b| b.power.total_cmp(&a.power).then(a.frequency.total_cmp(&b.frequency)));
    peaks.truncate(k);
    peaks
}

/// Linear resampling of a uniformly sampled signal to a new rate.
pub fn resample_uniform(signal: &[f64], fs_in: f64, fs_out: f64) -> Vec<f64> {
    if signal.is_empty() {
        return Vec::new();
    }
    let duration = (signal.len() - 1) as f64 / fs_in;
    let n = (duration * fs_out).floor() as usize + 1;
    (0..n)
        .map(|i| {
            let x = i as f64 / fs_out * fs_in;
            let j = x.floor() as usize;
            if j + 1 >= signal.len() {
                signal[signal.len() - 1]
            } else {
                let f = x - j as f64;
                signal[j] + f * (signal[j + 1] - signal[j])
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sine_peak_lands_on_its_bin() {
        let fs = 200.0;
        let sig: Vec<f64> = (0..2000).map(|i| (2.0 * std::f64::consts::PI * 25.0 * i as f64 / fs).sin()).collect();
        let psd = welch_psd(&sig, fs, &WelchSettings::default()).unwrap();
        assert!((psd.peaks[0].frequency - 25.0).abs() <= psd.bin_width());
        assert_eq!(psd.frequencies.len(), 257);
        assert_eq!(*psd.frequencies.last().unwrap(), 100.0);
    }

    #[test]
    fn constant_signal_with_rectangular_window() {
        let settings = WelchSettings { window: Window::Rectangular, ..WelchSettings::default() };
        let psd = welch_psd(&vec![3.0; 1024], 200.0, &settings).unwrap();
        assert!(psd.power[0] > 0.0);
        assert!(psd.power[1..].iter().all(|p| *p < 1e-20 * psd.power[0]));
    }

    #[test]
    fn constant_signal_with_hamming_window() {
        let psd = welch_psd(&vec![3.0; 1024], 200.0, &WelchSettings::default()).unwrap();
        // the window's main lobe spills into bin 1 only
        assert!(psd.power[0] > psd.power[1]);
        assert!(psd.power[2..].iter().all(|p| *p < 1e-20 * psd.power[0]));
        assert_eq!(psd.peaks[0].frequency, 0.0);
    }

    #[test]
    fn short_signal_is_rejected() {
        let err = welch_psd(&[1.0; 100], 200.0, &WelchSettings::default()).unwrap_err();
        assert!(matches!(err, DynamicsError::SignalTooShort { got: 100, needed: 512 }));
    }

    #[test]
    fn resampling_keeps_endpoints() {
        let s: Vec<f64> = (0..1001).map(|i| i as f64).collect();
        let r = resample_uniform(&s, 1000.0, 200.0);
        assert_eq!(r.len(), 201);
        assert_eq!(r[200], 1000.0);
        assert_eq!(r[1], 5.0);
    }
}
