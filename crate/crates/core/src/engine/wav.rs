use std::path::Path;

use hound::{SampleFormat, WavSpec, WavWriter};

use super::EngineError;

/// Reads a mono WAV (16/24/32-bit PCM or 32-bit float) as samples in [-1, 1].
pub fn read_wav_mono(path: &Path) -> Result<(Vec<f64>, u32), EngineError> {
    let wav_err = |source| EngineError::Wav {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = hound::WavReader::open(path).map_err(wav_err)?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(EngineError::NotMono {
            path: path.to_path_buf(),
            channels: spec.channels,
        });
    }
    let samples = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<Result<Vec<_>, _>>()
            .map_err(wav_err)?,
        (SampleFormat::Int, bits @ (8 | 16 | 24 | 32)) => {
            let scale = 1.0 / f64::from(1u32 << (bits - 1));
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| f64::from(v) * scale))
                .collect::<Result<Vec<_>, _>>()
                .map_err(wav_err)?
        }
        (format, bits) => {
            return Err(EngineError::UnsupportedFormat {
                path: path.to_path_buf(),
                bits,
                format: if format == SampleFormat::Float { "float" } else { "int" },
            })
        }
    };
    Ok((samples, spec.sample_rate))
}

/// Writes mono 32-bit float. The file is written beside the target and
/// renamed into place once complete.
pub fn write_wav_f32(path: &Path, samples: &[f64], sample_rate: u32) -> Result<(), EngineError> {
    let spec = WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: 32,
        sample_format: SampleFormat::Float,
    };
    let partial = partial_path(path);
    let wav_err = |source| EngineError::Wav {
        path: path.to_path_buf(),
        source,
    };
    let mut writer = WavWriter::create(&partial, spec).map_err(wav_err)?;
    for &s in samples {
        writer.write_sample(s as f32).map_err(wav_err)?;
    }
    writer.finalize().map_err(wav_err)?;
    std::fs::rename(&partial, path).map_err(|source| EngineError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn partial_path(path: &Path) -> std::path::PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".partial");
    path.with_file_name(name)
}
