//! Minimal RIFF/WAVE codec: PCM16 and IEEE float32, any channel count.

use std::fs;
use std::path::Path;

use super::Waveform;
use crate::error::{Error, Result};

const FORMAT_PCM: u16 = 1;
const FORMAT_FLOAT: u16 = 3;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleFormat {
    Pcm16,
    Float32,
}

/// Header facts, available without decoding the samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WavInfo {
    pub format_tag: u16,
    pub channels: u16,
    pub sample_rate_hz: u32,
    pub bits_per_sample: u16,
    pub block_align: u16,
    pub frames: usize,
}

impl WavInfo {
    pub fn duration_s(&self) -> f64 {
        self.frames as f64 / self.sample_rate_hz as f64
    }

    fn sample_format(&self) -> Result<SampleFormat> {
        match (self.format_tag, self.bits_per_sample) {
            (FORMAT_PCM, 16) => Ok(SampleFormat::Pcm16),
            (FORMAT_FLOAT, 32) => Ok(SampleFormat::Float32),
            (tag, bits) => Err(Error::UnsupportedEncoding(format!(
                "format tag {tag} with {bits} bits per sample"
            ))),
        }
    }
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

/// Walks the chunk list; returns the header and the byte range of the data chunk.
fn parse_header(bytes: &[u8]) -> Result<(WavInfo, std::ops::Range<usize>)> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(Error::format("missing RIFF/WAVE signature"));
    }
    let mut fmt: Option<(u16, u16, u32, u16, u16)> = None;
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32_at(bytes, pos + 4) as usize;
        let body = pos + 8;
        match id {
            b"fmt " => {
                if size < 16 || body + 16 > bytes.len() {
                    return Err(Error::format("truncated fmt chunk"));
                }
                let mut tag = u16_at(bytes, body);
                let channels = u16_at(bytes, body + 2);
                let rate = u32_at(bytes, body + 4);
                let block_align = u16_at(bytes, body + 12);
                let bits = u16_at(bytes, body + 14);
                if tag == FORMAT_EXTENSIBLE {
                    // sub-format GUID starts at offset 24; its first two bytes are the tag
                    if size < 40 || body + 26 > bytes.len() {
                        return Err(Error::format("truncated extensible fmt chunk"));
                    }
                    tag = u16_at(bytes, body + 24);
                }
                fmt = Some((tag, channels, rate, block_align, bits));
            }
            b"data" => {
                let (tag, channels, rate, block_align, bits) =
                    fmt.ok_or_else(|| Error::format("data chunk before fmt chunk"))?;
                if channels == 0 || rate == 0 || block_align == 0 {
                    return Err(Error::format("zero channels, rate or block alignment"));
                }
                // tolerate a declared size that overruns the file
                let end = body.saturating_add(size).min(bytes.len());
                let frames = (end - body) / block_align as usize;
                let info = WavInfo {
                    format_tag: tag,
                    channels,
                    sample_rate_hz: rate,
                    bits_per_sample: bits,
                    block_align,
                    frames,
                };
                return Ok((info, body..body + frames * block_align as usize));
            }
            _ => {}
        }
        pos = body.saturating_add(size).saturating_add(size & 1);
    }
    Err(Error::format(if fmt.is_some() {
        "no data chunk"
    } else {
        "no fmt chunk"
    }))
}

/// Decodes a WAV byte buffer to mono by channel averaging.
pub fn decode_wav(bytes: &[u8]) -> Result<Waveform> {
    let (info, data) = parse_header(bytes)?;
    let format = info.sample_format()?;
    let ch = info.channels as usize;
    let width = match format {
        SampleFormat::Pcm16 => 2,
        SampleFormat::Float32 => 4,
    };
    let block = info.block_align as usize;
    if block < width * ch {
        return Err(Error::format("block alignment smaller than one frame"));
    }
    let data = &bytes[data];
    let mut samples = Vec::with_capacity(info.frames);
    for f in 0..info.frames {
        let frame = &data[f * block..];
        let mut acc = 0.0;
        for c in 0..ch {
            acc += match format {
                SampleFormat::Pcm16 => {
                    i16::from_le_bytes([frame[2 * c], frame[2 * c + 1]]) as f64 / 32768.0
                }
                SampleFormat::Float32 => f32::from_le_bytes([
                    frame[4 * c],
                    frame[4 * c + 1],
                    frame[4 * c + 2],
                    frame[4 * c + 3],
                ]) as f64,
            };
        }
        samples.push(acc / ch as f64);
    }
    Waveform::new(samples, info.sample_rate_hz).map_err(|e| Error::format(e.to_string()))
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<Waveform> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io_at(path, e))?;
    decode_wav(&bytes)
}

/// Reads only as much as is needed to report the header; any PCM/float width is accepted.
pub fn read_wav_info(path: impl AsRef<Path>) -> Result<WavInfo> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io_at(path, e))?;
    Ok(parse_header(&bytes)?.0)
}

/// Encodes interleaved samples. PCM16 clips to `[-1, 1)` and rounds.
pub fn encode_wav(interleaved: &[f64], channels: u16, sample_rate_hz: u32, format: SampleFormat) -> Vec<u8> {
    let (tag, width) = match format {
        SampleFormat::Pcm16 => (FORMAT_PCM, 2u16),
        SampleFormat::Float32 => (FORMAT_FLOAT, 4u16),
    };
    let block_align = width * channels;
    let data_len = interleaved.len() * width as usize;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&tag.to_le_bytes());
    out.extend_from_slice(&channels.to_le_bytes());
    out.extend_from_slice(&sample_rate_hz.to_le_bytes());
    out.extend_from_slice(&(sample_rate_hz * block_align as u32).to_le_bytes());
    out.extend_from_slice(&block_align.to_le_bytes());
    out.extend_from_slice(&(width * 8).to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for &s in interleaved {
        match format {
            SampleFormat::Pcm16 => {
                let v = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
                out.extend_from_slice(&v.to_le_bytes());
            }
            SampleFormat::Float32 => out.extend_from_slice(&(s as f32).to_le_bytes()),
        }
    }
    out
}

pub fn write_wav(path: impl AsRef<Path>, w: &Waveform, format: SampleFormat) -> Result<()> {
    let bytes = encode_wav(w.samples(), 1, w.sample_rate_hz(), format);
    crate::io_util::write_atomic(path.as_ref(), &bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pcm16(values: &[i16], channels: u16, rate: u32) -> Vec<u8> {
        let as_f: Vec<f64> = values.iter().map(|&v| v as f64 / 32768.0).collect();
        encode_wav(&as_f, channels, rate, SampleFormat::Pcm16)
    }

    #[test]
    fn pcm16_scaling() {
        let w = decode_wav(&pcm16(&[0, 16384, -32768], 1, 8000)).unwrap();
        assert_eq!(w.samples(), &[0.0, 0.5, -1.0]);
        assert_eq!(w.sample_rate_hz(), 8000);
    }

    #[test]
    fn empty_data_chunk() {
        let w = decode_wav(&pcm16(&[], 1, 4000)).unwrap();
        assert!(w.is_empty());
    }

    #[test]
    fn stereo_is_averaged() {
        let bytes = encode_wav(&[1.0, 0.0, 1.0, 0.0], 2, 4000, SampleFormat::Float32);
        let w = decode_wav(&bytes).unwrap();
        assert_eq!(w.samples(), &[0.5, 0.5]);
    }

    #[test]
    fn float32_roundtrip() {
        let bytes = encode_wav(&[0.25, -0.75], 1, 44100, SampleFormat::Float32);
        assert_eq!(decode_wav(&bytes).unwrap().samples(), &[0.25, -0.75]);
    }

    #[test]
    fn malformed_header() {
        assert!(matches!(decode_wav(b"RIFX0000WAVE"), Err(Error::Format(_))));
        assert!(matches!(decode_wav(b"RIFF"), Err(Error::Format(_))));
        let mut bytes = pcm16(&[1, 2], 1, 8000);
        bytes.truncate(30);
        assert!(matches!(decode_wav(&bytes), Err(Error::Format(_))));
    }

    #[test]
    fn unsupported_codec() {
        let mut bytes = pcm16(&[1, 2], 1, 8000);
        // 8-bit PCM
        bytes[34] = 8;
        assert!(matches!(decode_wav(&bytes), Err(Error::UnsupportedEncoding(_))));
        let mut bytes = pcm16(&[1, 2], 1, 8000);
        bytes[20] = 6; // A-law
        assert!(matches!(decode_wav(&bytes), Err(Error::UnsupportedEncoding(_))));
    }

    #[test]
    fn skips_unknown_chunks() {
        let base = pcm16(&[100, -100], 1, 8000);
        let mut bytes = base[..12].to_vec();
        bytes.extend_from_slice(b"LIST");
        bytes.extend_from_slice(&3u32.to_le_bytes());
        bytes.extend_from_slice(&[1, 2, 3, 0]); // odd size plus pad byte
        bytes.extend_from_slice(&base[12..]);
        let w = decode_wav(&bytes).unwrap();
        assert_eq!(w.len(), 2);
    }

    #[test]
    fn header_only_probe_accepts_24_bit() {
        let dir = tempfile::tempdir().unwrap();
        let mut bytes = pcm16(&[0; 6], 1, 4000);
        bytes[34] = 24;
        bytes[32] = 3; // block align
        let path = dir.path().join("a.wav");
        std::fs::write(&path, &bytes).unwrap();
        let info = read_wav_info(&path).unwrap();
        assert_eq!(info.frames, 4);
        assert!(matches!(read_wav(&path), Err(Error::UnsupportedEncoding(_))));
    }
}
