//! Resamples a tone to 16 kHz, pads to 30 s and computes the normalised
//! log-Mel input of the ASR encoder.

use si_predict::data::{prepare_samples, Channel};
use si_predict::features::{log_mel, normalize_log_mel, N_FRAMES, N_MELS};

fn main() -> anyhow::Result<()> {
    let rate = 44_100;
    let tone: Vec<f32> = (0..rate)
        .map(|i| 0.5 * (2.0 * std::f32::consts::PI * 1000.0 * i as f32 / rate as f32).sin())
        .collect();
    let wave = prepare_samples(&tone, rate, Channel::Left);
    println!("{} samples at {} Hz", wave.samples.len(), wave.sample_rate);

    let mel = normalize_log_mel(&log_mel(&wave)?);
    assert_eq!(mel.values.dim(), (N_MELS, N_FRAMES));
    let frame: Vec<f32> = mel.values.column(50).to_vec();
    let peak = frame
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or_default();
    println!("mel {:?}, loudest band in frame 50: {peak}", mel.values.dim());
    println!("silent tail frame max: {:.3}", mel.values.column(N_FRAMES - 1).fold(f32::MIN, |a, &b| a.max(b)));
    Ok(())
}
