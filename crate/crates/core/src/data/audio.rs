use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::SignalRecord;
use crate::error::{Error, Result};

/// Sample rate expected by the ASR front end.
pub const TARGET_RATE: u32 = 16_000;
/// 30 s at [`TARGET_RATE`].
pub const TARGET_LEN: usize = 480_000;

/// Zero crossings of the interpolation kernel on each side.
const KERNEL_ZEROS: usize = 24;
/// Passband edge as a fraction of the output Nyquist frequency.
const ROLLOFF: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Left,
    Right,
}

impl Channel {
    pub const BOTH: [Channel; 2] = [Channel::Left, Channel::Right];

    pub fn as_str(self) -> &'static str {
        match self {
            Channel::Left => "left",
            Channel::Right => "right",
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "left" | "l" => Ok(Channel::Left),
            "right" | "r" => Ok(Channel::Right),
            other => Err(Error::InvalidArgument(format!("unknown channel `{other}`"))),
        }
    }
}

/// A single-channel signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub samples: Vec<f32>,
    pub sample_rate: u32,
    pub channel: Channel,
}

impl Waveform {
    /// True once the signal is at 16 kHz and exactly 30 s long.
    pub fn is_prepared(&self) -> bool {
        self.sample_rate == TARGET_RATE && self.samples.len() == TARGET_LEN
    }
}

/// Reads a 2-channel RIFF/WAVE file into `(left, right, sample_rate)`.
/// Integer PCM is scaled to [-1, 1).
pub fn read_stereo_wav(path: impl AsRef<Path>) -> Result<(Vec<f32>, Vec<f32>, u32)> {
    let path = path.as_ref();
    let audio_err = |e: hound::Error| match e {
        hound::Error::IoError(io) => Error::io(path, io),
        other => Error::Audio {
            path: path.to_path_buf(),
            message: other.to_string(),
        },
    };
    let mut reader = hound::WavReader::open(path).map_err(audio_err)?;
    let spec = reader.spec();
    if spec.channels != 2 {
        return Err(Error::Channel {
            path: path.to_path_buf(),
            channels: spec.channels,
        });
    }
    let interleaved: Vec<f32> = match spec.sample_format {
        hound::SampleFormat::Float => reader
            .samples::<f32>()
            .collect::<std::result::Result<_, _>>()
            .map_err(audio_err)?,
        hound::SampleFormat::Int => {
            let scale = 1.0 / (1u64 << (spec.bits_per_sample - 1)) as f32;
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| v as f32 * scale))
                .collect::<std::result::Result<_, _>>()
                .map_err(audio_err)?
        }
    };
    let left = interleaved.iter().step_by(2).copied().collect();
    let right = interleaved.iter().skip(1).step_by(2).copied().collect();
    Ok((left, right, spec.sample_rate))
}

/// Writes a 32-bit float stereo WAV file.
pub fn write_stereo_wav(
    path: impl AsRef<Path>,
    left: &[f32],
    right: &[f32],
    sample_rate: u32,
) -> Result<()> {
    let path = path.as_ref();
    if left.len() != right.len() {
        return Err(Error::InvalidArgument(format!(
            "channel lengths differ: {} vs {}",
            left.len(),
            right.len()
        )));
    }
    let spec = hound::WavSpec {
        channels: 2,
        sample_rate,
        bits_per_sample: 32,
        sample_format: hound::SampleFormat::Float,
    };
    let wav_err = |e: hound::Error| Error::Audio {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(wav_err)?;
    for (&l, &r) in left.iter().zip(right) {
        writer.write_sample(l).map_err(wav_err)?;
        writer.write_sample(r).map_err(wav_err)?;
    }
    writer.finalize().map_err(wav_err)
}

/// Loads one channel of the record's audio and prepares it for the front end.
pub fn prepare_waveform(record: &SignalRecord, channel: Channel) -> Result<Waveform> {
    let (left, right, rate) = read_stereo_wav(&record.audio_path)?;
    let samples = match channel {
        Channel::Left => left,
        Channel::Right => right,
    };
    Ok(prepare_samples(&samples, rate, channel))
}

/// Resamples to 16 kHz, then zero-pads or truncates at the end to 30 s.
pub fn prepare_samples(samples: &[f32], sample_rate: u32, channel: Channel) -> Waveform {
    let mut samples = if sample_rate == TARGET_RATE {
        samples.to_vec()
    } else {
        resample(samples, sample_rate, TARGET_RATE)
    };
    samples.resize(TARGET_LEN, 0.0);
    Waveform {
        samples,
        sample_rate: TARGET_RATE,
        channel,
    }
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

fn blackman(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        return 0.0;
    }
    let pu = std::f64::consts::PI * u;
    0.42 + 0.5 * pu.cos() + 0.08 * (2.0 * pu).cos()
}

/// Rational-ratio polyphase resampler with a Blackman-windowed sinc kernel.
///
/// Each phase of the kernel is normalised to unit DC gain. Samples outside
/// the input are treated as zero. Output length is `ceil(len * to / from)`.
pub fn resample(input: &[f32], from: u32, to: u32) -> Vec<f32> {
    assert!(from > 0 && to > 0, "sample rates must be positive");
    if from == to {
        return input.to_vec();
    }
    let g = gcd(from, to);
    let up = (to / g) as usize;
    let down = (from / g) as usize;

    // Cutoff in cycles per input sample.
    let cutoff = 0.5 * (to as f64 / from as f64).min(1.0) * ROLLOFF;
    let half = (KERNEL_ZEROS as f64 / (2.0 * cutoff)).ceil() as isize;
    let taps = (2 * half) as usize;

    let table: Vec<Vec<f64>> = (0..up)
        .map(|phase| {
            let frac = phase as f64 / up as f64;
            let mut row: Vec<f64> = (0..taps)
                .map(|i| {
                    let j = i as isize - half + 1;
                    let tau = frac - j as f64;
                    2.0 * cutoff * sinc(2.0 * cutoff * tau) * blackman(tau / half as f64)
                })
                .collect();
            let sum: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= sum);
            row
        })
        .collect();

    let out_len = (input.len() * up).div_ceil(down);
    let n_in = input.len() as isize;
    (0..out_len)
        .map(|n| {
            let pos = n * down;
            let base = (pos / up) as isize;
            let row = &table[pos % up];
            let mut acc = 0.0f64;
            for (i, &w) in row.iter().enumerate() {
                let k = base + i as isize - half + 1;
                if k >= 0 && k < n_in {
                    acc += w * input[k as usize] as f64;
                }
            }
            acc as f32
        })
        .collect()
}
