//! Decoding of uncompressed video: YUV4MPEG2 streams and directories of
//! binary portable pixmaps.

use std::fs;
use std::path::{Path, PathBuf};

use super::frame::{Frame, FrameSequence};
use crate::error::{Error, Result};

/// Frame rate assumed for pixmap directories, which carry no timing.
pub const PNM_DEFAULT_FRAME_RATE: f64 = 25.0;

/// Decodes either a `.y4m` file or a directory of `.ppm`/`.pgm` frames.
///
/// The video id is the file stem (or directory name).
pub fn decode_video(path: &Path) -> Result<FrameSequence> {
    let meta = fs::metadata(path).map_err(|e| Error::io(path, e))?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    if meta.is_dir() {
        decode_pnm_dir(path, id)
    } else {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        decode_y4m(&bytes, id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Chroma {
    C420,
    C444,
    Mono,
}

/// Decodes a complete YUV4MPEG2 byte stream.
pub fn decode_y4m(bytes: &[u8], video_id: impl Into<String>) -> Result<FrameSequence> {
    let header_end = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Format("y4m: missing header line".into()))?;
    let header = std::str::from_utf8(&bytes[..header_end])
        .map_err(|_| Error::Format("y4m: header is not ASCII".into()))?;
    let mut tokens = header.split(' ').filter(|t| !t.is_empty());
    if tokens.next() != Some("YUV4MPEG2") {
        return Err(Error::Format("y4m: bad magic".into()));
    }
    let (mut width, mut height) = (0usize, 0usize);
    let mut frame_rate = 25.0;
    let mut chroma = Chroma::C420;
    for tok in tokens {
        let (tag, val) = tok.split_at(1);
        match tag {
            "W" => width = parse_dim(val, "W")?,
            "H" => height = parse_dim(val, "H")?,
            "F" => {
                if let Some((n, d)) = val.split_once(':') {
                    let n: f64 = n.parse().map_err(|_| bad_y4m("F", val))?;
                    let d: f64 = d.parse().map_err(|_| bad_y4m("F", val))?;
                    if d > 0.0 {
                        frame_rate = n / d;
                    }
                }
            }
            "C" => {
                chroma = match val {
                    "420" | "420jpeg" | "420paldv" | "420mpeg2" => Chroma::C420,
                    "444" => Chroma::C444,
                    "mono" => Chroma::Mono,
                    other => {
                        return Err(Error::Format(format!(
                            "y4m: unsupported colorspace C{other}"
                        )))
                    }
                }
            }
            _ => {}
        }
    }
    if width == 0 || height == 0 {
        return Err(Error::Format("y4m: missing W/H".into()));
    }
    let (cw, ch) = match chroma {
        Chroma::C420 => (width.div_ceil(2), height.div_ceil(2)),
        Chroma::C444 => (width, height),
        Chroma::Mono => (0, 0),
    };
    let frame_bytes = width * height + 2 * cw * ch;

    let mut frames = Vec::new();
    let mut pos = header_end + 1;
    while pos < bytes.len() {
        let line_end = bytes[pos..]
            .iter()
            .position(|&b| b == b'\n')
            .map(|p| pos + p)
            .ok_or_else(|| Error::Format(format!("y4m: truncated frame header {}", frames.len())))?;
        if !bytes[pos..line_end].starts_with(b"FRAME") {
            return Err(Error::Format(format!(
                "y4m: expected FRAME marker for frame {}",
                frames.len()
            )));
        }
        let data = line_end + 1;
        if bytes.len() < data + frame_bytes {
            return Err(Error::Format(format!(
                "y4m: frame {} truncated ({} of {frame_bytes} bytes)",
                frames.len(),
                bytes.len() - data
            )));
        }
        let y = &bytes[data..data + width * height];
        let u = &bytes[data + width * height..data + width * height + cw * ch];
        let v = &bytes[data + width * height + cw * ch..data + frame_bytes];
        let mut rgb = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                let luma = y[row * width + col];
                let (cb, cr) = match chroma {
                    Chroma::C420 => {
                        let i = (row / 2) * cw + col / 2;
                        (u[i], v[i])
                    }
                    Chroma::C444 => (u[row * width + col], v[row * width + col]),
                    Chroma::Mono => (128, 128),
                };
                rgb.push(ycbcr_to_rgb(luma, cb, cr));
            }
        }
        frames.push(Frame::from_rgb(width, height, rgb)?);
        pos = data + frame_bytes;
    }
    FrameSequence::new(video_id, frame_rate, frames)
}

fn parse_dim(val: &str, tag: &str) -> Result<usize> {
    val.parse().map_err(|_| bad_y4m(tag, val))
}

fn bad_y4m(tag: &str, val: &str) -> Error {
    Error::Format(format!("y4m: bad {tag} parameter `{val}`"))
}

/// Studio-swing BT.601 Y'CbCr to 8-bit R'G'B'.
pub fn ycbcr_to_rgb(y: u8, cb: u8, cr: u8) -> [u8; 3] {
    const KR: f64 = 0.299;
    const KB: f64 = 0.114;
    const KG: f64 = 1.0 - KR - KB;
    let yy = (y as f64 - 16.0) * 255.0 / 219.0;
    let pb = (cb as f64 - 128.0) * 255.0 / 224.0;
    let pr = (cr as f64 - 128.0) * 255.0 / 224.0;
    let r = yy + 2.0 * (1.0 - KR) * pr;
    let b = yy + 2.0 * (1.0 - KB) * pb;
    let g = yy - (2.0 * KB * (1.0 - KB) * pb + 2.0 * KR * (1.0 - KR) * pr) / KG;
    let q = |c: f64| c.round().clamp(0.0, 255.0) as u8;
    [q(r), q(g), q(b)]
}

fn decode_pnm_dir(dir: &Path, video_id: String) -> Result<FrameSequence> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| e.eq_ignore_ascii_case("ppm") || e.eq_ignore_ascii_case("pgm"))
        })
        .collect();
    files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    if files.is_empty() {
        return Err(Error::Format(format!(
            "{}: directory holds zero .ppm/.pgm frames",
            dir.display()
        )));
    }
    let mut frames = Vec::with_capacity(files.len());
    for f in &files {
        let bytes = fs::read(f).map_err(|e| Error::io(f, e))?;
        frames.push(
            decode_pnm(&bytes)
                .map_err(|e| Error::Format(format!("{}: {e}", f.display())))?,
        );
    }
    FrameSequence::new(video_id, PNM_DEFAULT_FRAME_RATE, frames)
}

/// Decodes one binary P6 (RGB) or P5 (gray) image.
pub fn decode_pnm(bytes: &[u8]) -> Result<Frame> {
    let mut pos = 0usize;
    let magic = next_token(bytes, &mut pos)?;
    let color = match magic.as_slice() {
        b"P6" => true,
        b"P5" => false,
        _ => return Err(Error::Format("pnm: only binary P5/P6 are supported".into())),
    };
    let width = parse_pnm_num(&next_token(bytes, &mut pos)?)?;
    let height = parse_pnm_num(&next_token(bytes, &mut pos)?)?;
    let maxval = parse_pnm_num(&next_token(bytes, &mut pos)?)?;
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Format(format!("pnm: bad maxval {maxval}")));
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let channels = if color { 3 } else { 1 };
    let sample_bytes = if maxval < 256 { 1 } else { 2 };
    let need = width * height * channels * sample_bytes;
    if bytes.len() < pos + need {
        return Err(Error::Format(format!(
            "pnm: raster truncated ({} of {need} bytes)",
            bytes.len().saturating_sub(pos)
        )));
    }
    let raster = &bytes[pos..pos + need];
    let sample = |i: usize| -> u8 {
        let v = if sample_bytes == 1 {
            raster[i] as u32
        } else {
            u32::from(raster[2 * i]) << 8 | u32::from(raster[2 * i + 1])
        };
        if maxval == 255 {
            v as u8
        } else {
            ((v.min(maxval as u32) as f64) * 255.0 / maxval as f64).round() as u8
        }
    };
    let rgb = (0..width * height)
        .map(|p| {
            if color {
                [sample(3 * p), sample(3 * p + 1), sample(3 * p + 2)]
            } else {
                let g = sample(p);
                [g, g, g]
            }
        })
        .collect();
    Frame::from_rgb(width, height, rgb)
}

fn next_token(bytes: &[u8], pos: &mut usize) -> Result<Vec<u8>> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
        } else {
            break;
        }
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::Format("pnm: truncated header".into()));
    }
    Ok(bytes[start..*pos].to_vec())
}

fn parse_pnm_num(tok: &[u8]) -> Result<usize> {
    std::str::from_utf8(tok)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Format("pnm: bad header number".into()))
}

/// Serializes a frame as binary P6.
pub fn encode_ppm(frame: &Frame) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", frame.width(), frame.height()).into_bytes();
    out.reserve(frame.rgb().len() * 3);
    for px in frame.rgb() {
        out.extend_from_slice(px);
    }
    out
}

/// Writes a sequence as a pixmap directory (`frame_00000.ppm`, ...).
pub fn write_pnm_dir(video: &FrameSequence, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (i, frame) in video.frames().iter().enumerate() {
        let path = dir.join(format!("frame_{i:05}.ppm"));
        fs::write(&path, encode_ppm(frame)).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}
