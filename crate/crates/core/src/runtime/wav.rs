use std::io::Cursor;
use std::path::Path;

use crate::error::Result;
use crate::spectral::Waveform;

/// Clamps to [-1, 1], scales by 32767 and rounds half away from zero.
pub fn to_pcm16(x: f32) -> i16 {
    let x = if x.is_nan() { 0.0 } else { x.clamp(-1.0, 1.0) };
    (x * 32767.0).round() as i16
}

fn spec(w: &Waveform) -> hound::WavSpec {
    hound::WavSpec {
        channels: 1,
        sample_rate: w.sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    }
}

/// 16-bit PCM mono WAV bytes.
pub fn encode_wav(w: &Waveform) -> Result<Vec<u8>> {
    let mut buf = Cursor::new(Vec::with_capacity(44 + 2 * w.len()));
    let mut writer = hound::WavWriter::new(&mut buf, spec(w))?;
    for &s in &w.samples {
        writer.write_sample(to_pcm16(s))?;
    }
    writer.finalize()?;
    Ok(buf.into_inner())
}

pub fn write_wav(path: &Path, w: &Waveform) -> Result<()> {
    std::fs::write(path, encode_wav(w)?)?;
    Ok(())
}
