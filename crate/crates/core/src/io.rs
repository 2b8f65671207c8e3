//! Image and matrix file formats.
//!
//! Reads binary PGM (P5, 8-bit) and PNG; writes binary PGM and a plain-text
//! matrix format (one row per line, space separated).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::{to_u8, GrayImage};

const LUMA: [f64; 3] = [0.299, 0.587, 0.114];

pub fn load_gray(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(b"P5") {
        decode_pgm(&bytes).map_err(|reason| Error::format(path, reason))
    } else if bytes.starts_with(b"\x89PNG") {
        decode_png(&bytes).map_err(|reason| Error::format(path, reason))
    } else {
        Err(Error::format(path, "expected binary PGM (P5) or PNG"))
    }
}

fn decode_pgm(bytes: &[u8]) -> std::result::Result<GrayImage, String> {
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in &mut fields {
        // whitespace and '#' comments between header fields
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while !matches!(bytes.get(pos), None | Some(b'\n')) {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or("truncated PGM header")?;
    }
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(format!("only 8-bit PGM is supported (maxval {maxval})"));
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err("malformed PGM header".into());
    }
    pos += 1;
    let n = width * height;
    let raster = bytes
        .get(pos..pos + n)
        .ok_or_else(|| format!("expected {n} pixel bytes"))?;
    GrayImage::new(height, width, raster.iter().map(|&b| b as f64 / 255.0).collect()).map_err(|e| e.to_string())
}

fn decode_png(bytes: &[u8]) -> std::result::Result<GrayImage, String> {
    let decoded = image::load_from_memory_with_format(bytes, image::ImageFormat::Png).map_err(|e| e.to_string())?;
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    let data: Vec<f64> = if decoded.color().has_color() {
        decoded
            .to_rgb8()
            .pixels()
            .map(|p| {
                let [r, g, b] = p.0;
                ((LUMA[0] * r as f64 + LUMA[1] * g as f64 + LUMA[2] * b as f64) / 255.0).min(1.0)
            })
            .collect()
    } else {
        decoded.to_luma8().pixels().map(|p| p.0[0] as f64 / 255.0).collect()
    };
    GrayImage::new(h, w, data).map_err(|e| e.to_string())
}

/// Encodes as binary PGM: `P5\n<w> <h>\n255\n` followed by `round(v·255)` bytes.
pub fn encode_pgm(image: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    out.extend(image.data().iter().map(|&v| to_u8(v)));
    out
}

pub fn write_pgm(path: impl AsRef<Path>, image: &GrayImage) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pgm(image)).map_err(|e| Error::io(path, e))
}

/// Real matrix as text, 6 fractional digits.
pub fn format_matrix(width: usize, values: &[f64]) -> String {
    let mut out = String::with_capacity(values.len() * 9);
    for row in values.chunks(width) {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{v:.6}");
        }
        out.push('\n');
    }
    out
}

pub fn format_int_matrix(width: usize, values: &[u32]) -> String {
    let mut out = String::new();
    for row in values.chunks(width) {
        let line: Vec<String> = row.iter().map(u32::to_string).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

/// Parses the text matrix format back into an image. Rows must have equal length.
pub fn parse_matrix(text: &str) -> Result<GrayImage> {
    let mut width = None;
    let mut data = Vec::new();
    let mut height = 0;
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let before = data.len();
        for tok in line.split_whitespace() {
            let v: f64 = tok.parse().map_err(|_| Error::Parse {
                line: idx + 1,
                reason: format!("not a number: {tok:?}"),
            })?;
            data.push(v);
        }
        let n = data.len() - before;
        match width {
            None => width = Some(n),
            Some(w) if w != n => {
                return Err(Error::Parse {
                    line: idx + 1,
                    reason: format!("row has {n} values, expected {w}"),
                })
            }
            _ => {}
        }
        height += 1;
    }
    GrayImage::new(height, width.unwrap_or(0), data)
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_matrix(&text)
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn png_bytes(color: image::ColorType, w: u32, h: u32, raw: &[u8]) -> Vec<u8> {
        use image::ImageEncoder;
        let mut buf = Vec::new();
        image::codecs::png::PngEncoder::new(&mut buf)
            .write_image(raw, w, h, color.into())
            .unwrap();
        buf
    }

    #[test]
    fn pgm_bytes_normalize_by_255() {
        let img = decode_pgm(b"P5\n2 2\n255\n\x00\xff\x80\x80").unwrap();
        assert_eq!(img.height(), 2);
        let want = [0.0, 1.0, 128.0 / 255.0, 128.0 / 255.0];
        for (a, b) in img.data().iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((img.data()[2] - 0.50196).abs() < 1e-5);
    }

    #[test]
    fn pgm_header_with_comment() {
        let img = decode_pgm(b"P5 # made by hand\n3 1 255\n\x00\x01\x02").unwrap();
        assert_eq!((img.height(), img.width()), (1, 3));
    }

    #[test]
    fn pgm_rejects_truncated_and_16bit() {
        assert!(decode_pgm(b"P5\n2 2\n255\n\x00").is_err());
        assert!(decode_pgm(b"P5\n1 1\n65535\n\x00\x00").is_err());
        assert!(decode_pgm(b"P5\n2").is_err());
    }

    #[test]
    fn pgm_encoding_is_exact() {
        let img = GrayImage::new(1, 3, vec![0.0, 0.5, 1.0]).unwrap();
        assert_eq!(encode_pgm(&img), b"P5\n3 1\n255\n\x00\x80\xff".to_vec());
        let back = decode_pgm(&encode_pgm(&img)).unwrap();
        assert_eq!(back.data()[2], 1.0);
    }

    #[test]
    fn png_rgb_uses_luma() {
        let white = decode_png(&png_bytes(image::ColorType::Rgb8, 1, 1, &[255, 255, 255])).unwrap();
        assert!((white.data()[0] - 1.0).abs() < 1e-12);
        let red = decode_png(&png_bytes(image::ColorType::Rgb8, 1, 1, &[255, 0, 0])).unwrap();
        assert!((red.data()[0] - 0.299).abs() < 1e-12);
    }

    #[test]
    fn png_gray_is_direct() {
        let img = decode_png(&png_bytes(image::ColorType::L8, 2, 1, &[0, 51])).unwrap();
        assert_eq!(img.data(), &[0.0, 0.2]);
    }

    #[test]
    fn load_reports_missing_and_unknown() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("nope.pgm");
        assert!(matches!(load_gray(&missing), Err(Error::Io { .. })));
        let junk = dir.path().join("junk.bin");
        fs::write(&junk, b"GIF89a").unwrap();
        assert!(matches!(load_gray(&junk), Err(Error::Format { .. })));
    }

    #[test]
    fn matrix_text_round_trip() {
        let text = format_matrix(2, &[0.0, 0.25, 1.0, 0.123_456_7]);
        assert_eq!(text, "0.000000 0.250000\n1.000000 0.123457\n");
        let img = parse_matrix(&text).unwrap();
        assert_eq!((img.height(), img.width()), (2, 2));
        assert!(matches!(parse_matrix("1 2\n3\n"), Err(Error::Parse { line: 2, .. })));
        assert_eq!(format_int_matrix(3, &[1, 0, 12]), "1 0 12\n");
    }
}
