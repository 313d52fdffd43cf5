//! Portable float map (`.pfm`) and Radiance RGBE (`.hdr`) codecs.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::HdrImage;
use crate::math::Rgb;

pub fn read_image(path: impl AsRef<Path>) -> Result<HdrImage> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
    match ext.as_str() {
        "pfm" => decode_pfm(&bytes),
        "hdr" | "rgbe" | "pic" => decode_rgbe(&bytes),
        _ if bytes.starts_with(b"PF") => decode_pfm(&bytes),
        _ if bytes.starts_with(b"#?") => decode_rgbe(&bytes),
        _ => Err(Error::Format(format!("{}: unsupported image format", path.display()))),
    }
}

pub fn write_pfm(path: impl AsRef<Path>, img: &HdrImage) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_pfm(img)).map_err(|e| Error::io(path, e))
}

pub fn write_rgbe(path: impl AsRef<Path>, img: &HdrImage) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_rgbe(img)).map_err(|e| Error::io(path, e))
}

/// Little-endian colour PFM. Rows are stored bottom to top.
pub fn encode_pfm(img: &HdrImage) -> Vec<u8> {
    let (w, h) = (img.width(), img.height());
    let mut out = format!("PF\n{w} {h}\n-1.0\n").into_bytes();
    out.reserve(w as usize * h as usize * 12);
    for y in (0..h).rev() {
        for x in 0..w {
            let p = img.get(x, y);
            for c in [p.r, p.g, p.b] {
                out.extend_from_slice(&c.to_le_bytes());
            }
        }
    }
    out
}

/// Splits off `count` whitespace-separated header tokens, returning them
/// and the offset just past the single whitespace byte that ends the last.
fn header_tokens(bytes: &[u8], count: usize) -> Result<(Vec<String>, usize)> {
    let mut tokens = Vec::with_capacity(count);
    let mut i = 0;
    while tokens.len() < count {
        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        let start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if start == i {
            return Err(Error::Format("truncated image header".into()));
        }
        tokens.push(String::from_utf8_lossy(&bytes[start..i]).into_owned());
    }
    if i >= bytes.len() {
        return Err(Error::Format("image header is not followed by data".into()));
    }
    Ok((tokens, i + 1))
}

pub fn decode_pfm(bytes: &[u8]) -> Result<HdrImage> {
    let (tok, data_start) = header_tokens(bytes, 4)?;
    let channels = match tok[0].as_str() {
        "PF" => 3,
        "Pf" => 1,
        other => return Err(Error::Format(format!("not a PFM file (magic '{other}')"))),
    };
    let dim = |s: &str| -> Result<u32> {
        s.parse::<u32>()
            .ok()
            .filter(|&d| d > 0)
            .ok_or_else(|| Error::Format(format!("invalid PFM dimension '{s}'")))
    };
    let (w, h) = (dim(&tok[1])?, dim(&tok[2])?);
    let scale: f32 = tok[3]
        .parse()
        .ok()
        .filter(|s: &f32| s.is_finite() && *s != 0.0)
        .ok_or_else(|| Error::Format(format!("invalid PFM scale '{}'", tok[3])))?;
    let little = scale < 0.0;
    let need = w as usize * h as usize * channels * 4;
    let data = &bytes[data_start..];
    if data.len() < need {
        return Err(Error::Format(format!("PFM data is {} bytes, expected {need}", data.len())));
    }
    let read = |i: usize| {
        let b: [u8; 4] = data[4 * i..4 * i + 4].try_into().unwrap();
        if little {
            f32::from_le_bytes(b)
        } else {
            f32::from_be_bytes(b)
        }
    };
    let mut pixels = vec![Rgb::BLACK; w as usize * h as usize];
    for row in 0..h as usize {
        let y = h as usize - 1 - row;
        for x in 0..w as usize {
            let i = (row * w as usize + x) * channels;
            pixels[y * w as usize + x] = if channels == 3 {
                Rgb::new(read(i), read(i + 1), read(i + 2))
            } else {
                Rgb::splat(read(i))
            };
        }
    }
    HdrImage::from_pixels(w, h, pixels)
}

fn float_to_rgbe(p: Rgb) -> [u8; 4] {
    let v = p.max_component();
    if !(v >= 1e-32) {
        return [0; 4];
    }
    // v = m * 2^e with m in [0.5, 1)
    let e = v.log2().floor() as i32 + 1;
    let mut e = e;
    let mut scale = 2f32.powi(8 - e);
    if v * scale >= 256.0 {
        e += 1;
        scale *= 0.5;
    } else if v * scale < 128.0 {
        e -= 1;
        scale *= 2.0;
    }
    let q = |c: f32| (c.max(0.0) * scale) as u8;
    [q(p.r), q(p.g), q(p.b), (e + 128).clamp(0, 255) as u8]
}

fn rgbe_to_float(b: [u8; 4]) -> Rgb {
    if b[3] == 0 {
        return Rgb::BLACK;
    }
    let f = 2f32.powi(b[3] as i32 - 136);
    Rgb::new(b[0] as f32 * f, b[1] as f32 * f, b[2] as f32 * f)
}

/// Uncompressed Radiance file with a `-Y h +X w` resolution line.
pub fn encode_rgbe(img: &HdrImage) -> Vec<u8> {
    let (w, h) = (img.width(), img.height());
    let mut out = Vec::with_capacity(64 + 4 * w as usize * h as usize);
    write!(out, "#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y {h} +X {w}\n").unwrap();
    for p in img.pixels() {
        out.extend_from_slice(&float_to_rgbe(*p));
    }
    out
}

/// Reads flat and new-style run-length encoded scanlines.
pub fn decode_rgbe(bytes: &[u8]) -> Result<HdrImage> {
    if !bytes.starts_with(b"#?") {
        return Err(Error::Format("not a Radiance file (missing '#?')".into()));
    }
    let mut pos = 0;
    let next_line = |pos: &mut usize| -> Result<String> {
        let rest = &bytes[*pos..];
        let end = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::Format("truncated Radiance header".into()))?;
        *pos += end + 1;
        Ok(String::from_utf8_lossy(&rest[..end]).trim_end_matches('\r').to_string())
    };
    loop {
        let line = next_line(&mut pos)?;
        if line.is_empty() {
            break;
        }
        if let Some(fmt) = line.strip_prefix("FORMAT=") {
            if fmt != "32-bit_rle_rgbe" {
                return Err(Error::Format(format!("unsupported Radiance pixel format '{fmt}'")));
            }
        }
    }
    let res = next_line(&mut pos)?;
    let f: Vec<&str> = res.split_whitespace().collect();
    let (h, w) = match f.as_slice() {
        ["-Y", h, "+X", w] => (h.parse::<u32>(), w.parse::<u32>()),
        _ => return Err(Error::Format(format!("unsupported Radiance orientation '{res}'"))),
    };
    let (h, w) = match (h, w) {
        (Ok(h), Ok(w)) if h > 0 && w > 0 => (h, w),
        _ => return Err(Error::Format(format!("invalid Radiance resolution '{res}'"))),
    };
    let data = &bytes[pos..];
    let mut at = 0usize;
    let truncated = || Error::Format("Radiance pixel data is truncated".into());
    let mut pixels = Vec::with_capacity(w as usize * h as usize);
    let mut scan = vec![[0u8; 4]; w as usize];
    for _ in 0..h {
        let head = data.get(at..at + 4).ok_or_else(truncated)?;
        let rle = (8..0x8000).contains(&w) && head[0] == 2 && head[1] == 2 && head[2] & 0x80 == 0;
        if rle {
            if ((head[2] as u32) << 8 | head[3] as u32) != w {
                return Err(Error::Format("Radiance scanline width mismatch".into()));
            }
            at += 4;
            for ch in 0..4 {
                let mut x = 0usize;
                while x < w as usize {
                    let count = *data.get(at).ok_or_else(truncated)? as usize;
                    at += 1;
                    if count > 128 {
                        let run = count - 128;
                        let val = *data.get(at).ok_or_else(truncated)?;
                        at += 1;
                        if x + run > w as usize {
                            return Err(Error::Format("Radiance run overflows scanline".into()));
                        }
                        for s in &mut scan[x..x + run] {
                            s[ch] = val;
                        }
                        x += run;
                    } else {
                        if count == 0 || x + count > w as usize {
                            return Err(Error::Format("bad Radiance literal run".into()));
                        }
                        let lit = data.get(at..at + count).ok_or_else(truncated)?;
                        for (s, &v) in scan[x..x + count].iter_mut().zip(lit) {
                            s[ch] = v;
                        }
                        at += count;
                        x += count;
                    }
                }
            }
        } else {
            for s in scan.iter_mut() {
                let px = data.get(at..at + 4).ok_or_else(truncated)?;
                if px[0] == 1 && px[1] == 1 && px[2] == 1 {
                    return Err(Error::Format("old-style Radiance run-length encoding is not supported".into()));
                }
                s.copy_from_slice(px);
                at += 4;
            }
        }
        pixels.extend(scan.iter().map(|&b| rgbe_to_float(b)));
    }
    HdrImage::from_pixels(w, h, pixels)
}
