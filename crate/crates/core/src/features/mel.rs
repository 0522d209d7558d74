use ndarray::Array2;
use rustfft::{num_complex::Complex, FftPlanner};

use crate::data::{Waveform, TARGET_LEN, TARGET_RATE};
use crate::error::{Error, Result};

/// 25 ms at 16 kHz.
pub const N_FFT: usize = 400;
/// 10 ms at 16 kHz.
pub const HOP_LENGTH: usize = 160;
pub const N_MELS: usize = 80;
/// 30 s / 10 ms.
pub const N_FRAMES: usize = TARGET_LEN / HOP_LENGTH;
/// Power floor applied before the logarithm.
pub const LOG_FLOOR: f64 = 1e-10;

/// `N_MELS x N_FRAMES` base-10 log Mel power.
#[derive(Debug, Clone, PartialEq)]
pub struct MelSpectrogram {
    pub values: Array2<f32>,
}

fn hz_to_mel(hz: f64) -> f64 {
    const F_SP: f64 = 200.0 / 3.0;
    const MIN_LOG_HZ: f64 = 1000.0;
    let min_log_mel = MIN_LOG_HZ / F_SP;
    let logstep = 6.4f64.ln() / 27.0;
    if hz >= MIN_LOG_HZ {
        min_log_mel + (hz / MIN_LOG_HZ).ln() / logstep
    } else {
        hz / F_SP
    }
}

fn mel_to_hz(mel: f64) -> f64 {
    const F_SP: f64 = 200.0 / 3.0;
    const MIN_LOG_HZ: f64 = 1000.0;
    let min_log_mel = MIN_LOG_HZ / F_SP;
    let logstep = 6.4f64.ln() / 27.0;
    if mel >= min_log_mel {
        MIN_LOG_HZ * (logstep * (mel - min_log_mel)).exp()
    } else {
        F_SP * mel
    }
}

/// Slaney-style triangular filterbank, area-normalised, `n_mels x (n_fft/2 + 1)`.
pub fn mel_filterbank(sample_rate: u32, n_fft: usize, n_mels: usize) -> Array2<f64> {
    let n_bins = n_fft / 2 + 1;
    let fmax = sample_rate as f64 / 2.0;
    let mel_max = hz_to_mel(fmax);
    let edges: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(mel_max * i as f64 / (n_mels + 1) as f64))
        .collect();
    let mut fb = Array2::zeros((n_mels, n_bins));
    for m in 0..n_mels {
        let (lo, mid, hi) = (edges[m], edges[m + 1], edges[m + 2]);
        let norm = 2.0 / (hi - lo);
        for k in 0..n_bins {
            let f = k as f64 * sample_rate as f64 / n_fft as f64;
            let rising = (f - lo) / (mid - lo);
            let falling = (hi - f) / (hi - mid);
            fb[[m, k]] = rising.min(falling).max(0.0) * norm;
        }
    }
    fb
}

/// Log Mel spectrogram of a prepared waveform: periodic Hann window, centred
/// frames with reflection padding, power spectrum, last frame dropped.
pub fn log_mel(waveform: &Waveform) -> Result<MelSpectrogram> {
    if !waveform.is_prepared() {
        return Err(Error::Precondition(format!(
            "log_mel needs {TARGET_LEN} samples at {TARGET_RATE} Hz, got {} at {} Hz",
            waveform.samples.len(),
            waveform.sample_rate
        )));
    }
    let x = &waveform.samples;
    let pad = N_FFT / 2;
    let padded: Vec<f64> = (0..x.len() + 2 * pad)
        .map(|i| {
            let j = i as isize - pad as isize;
            let n = x.len() as isize;
            let k = if j < 0 {
                -j
            } else if j >= n {
                2 * (n - 1) - j
            } else {
                j
            };
            x[k as usize] as f64
        })
        .collect();
    let window: Vec<f64> = (0..N_FFT)
        .map(|n| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * n as f64 / N_FFT as f64).cos())
        .collect();
    let fb = mel_filterbank(TARGET_RATE, N_FFT, N_MELS);
    let fft = FftPlanner::new().plan_fft_forward(N_FFT);
    let n_bins = N_FFT / 2 + 1;

    let mut values = Array2::<f32>::zeros((N_MELS, N_FRAMES));
    let mut buf = vec![Complex::new(0.0, 0.0); N_FFT];
    let mut power = vec![0.0f64; n_bins];
    for t in 0..N_FRAMES {
        let start = t * HOP_LENGTH;
        for (b, (&s, &w)) in buf.iter_mut().zip(padded[start..start + N_FFT].iter().zip(&window)) {
            *b = Complex::new(s * w, 0.0);
        }
        fft.process(&mut buf);
        for (p, c) in power.iter_mut().zip(&buf[..n_bins]) {
            *p = c.norm_sqr();
        }
        for m in 0..N_MELS {
            let e: f64 = fb.row(m).iter().zip(&power).map(|(w, p)| w * p).sum();
            values[[m, t]] = e.max(LOG_FLOOR).log10() as f32;
        }
    }
    Ok(MelSpectrogram { values })
}

/// Dynamic-range compression used by the ASR encoder input: clamp to 8 decades
/// below the maximum, then map to roughly [-1, 1].
pub fn normalize_log_mel(mel: &MelSpectrogram) -> MelSpectrogram {
    let max = mel.values.iter().copied().fold(f32::NEG_INFINITY, f32::max);
    MelSpectrogram {
        values: mel.values.mapv(|v| (v.max(max - 8.0) + 4.0) / 4.0),
    }
}
