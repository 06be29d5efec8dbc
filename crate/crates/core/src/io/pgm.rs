//! Binary PGM (P5) reading and 16-bit writing.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::photometric::ImageStack;
use crate::raster::Raster;

/// Header plus raw samples of a P5 file.
#[derive(Debug, Clone, PartialEq)]
pub struct Pgm {
    pub width: usize,
    pub height: usize,
    pub maxval: u32,
    pub samples: Vec<u16>,
}

impl Pgm {
    /// Intensities linearized to `[0, 1]` by dividing by maxval.
    pub fn to_unit_raster(&self) -> Raster<f64> {
        let maxval = self.maxval as f64;
        let data = self.samples.iter().map(|s| *s as f64 / maxval).collect();
        Raster::from_vec(self.width, self.height, data).expect("sample count checked on decode")
    }
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u64> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::MalformedHeader(format!("missing or invalid {what}")))
    }
}

pub fn decode_pgm(bytes: &[u8]) -> Result<Pgm> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(Error::MalformedHeader("expected P5 magic".into()));
    }
    let mut h = Header { bytes, pos: 2 };
    if !h
        .bytes
        .get(2)
        .is_some_and(|b| b.is_ascii_whitespace() || *b == b'#')
    {
        return Err(Error::MalformedHeader(
            "expected whitespace after magic".into(),
        ));
    }
    let width = h.number("width")? as usize;
    let height = h.number("height")? as usize;
    let maxval = h.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::MalformedHeader(format!(
            "zero dimension {width}x{height}"
        )));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::UnsupportedMaxval(maxval.min(u32::MAX as u64) as u32));
    }
    let maxval = maxval as u32;
    // exactly one whitespace byte separates the header from the raster
    if !h.bytes.get(h.pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(Error::MalformedHeader(
            "expected whitespace after maxval".into(),
        ));
    }
    let data = &bytes[h.pos + 1..];
    let bytes_per_sample = if maxval < 256 { 1 } else { 2 };
    let expected = width * height * bytes_per_sample;
    if data.len() < expected {
        return Err(Error::TruncatedPayload {
            expected,
            found: data.len(),
        });
    }
    let samples: Vec<u16> = if bytes_per_sample == 1 {
        data[..expected].iter().map(|b| *b as u16).collect()
    } else {
        data[..expected]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect()
    };
    if let Some(s) = samples.iter().find(|s| **s as u32 > maxval) {
        return Err(Error::MalformedHeader(format!(
            "sample {s} exceeds maxval {maxval}"
        )));
    }
    Ok(Pgm {
        width,
        height,
        maxval,
        samples,
    })
}

/// 16-bit P5 with maxval 65535; intensities are clamped to `[0, 1]`.
pub fn encode_pgm16(raster: &Raster<f64>) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n65535\n", raster.width(), raster.height()).into_bytes();
    out.reserve(raster.len() * 2);
    for v in raster.as_slice() {
        let s = (v.clamp(0.0, 1.0) * 65535.0).round() as u16;
        out.extend_from_slice(&s.to_be_bytes());
    }
    out
}

pub fn read_pgm(path: &Path) -> Result<Pgm> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pgm(&bytes).map_err(|e| match e {
        Error::MalformedHeader(m) => Error::MalformedHeader(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Loads co-registered frames, one per light, in the given order.
pub fn load_image_stack<P: AsRef<Path>>(paths: &[P], pixel_pitch: f64) -> Result<ImageStack> {
    if paths.len() < 3 {
        return Err(Error::TooFewImages { got: paths.len() });
    }
    let mut frames = Vec::with_capacity(paths.len());
    let mut dims = None;
    for path in paths {
        let path = path.as_ref();
        let pgm = read_pgm(path)?;
        match dims {
            None => dims = Some((pgm.width, pgm.height)),
            Some((w, h)) if (w, h) != (pgm.width, pgm.height) => {
                return Err(Error::DimensionMismatch {
                    path: PathBuf::from(path),
                    want_w: w,
                    want_h: h,
                    got_w: pgm.width,
                    got_h: pgm.height,
                });
            }
            Some(_) => {}
        }
        frames.push(pgm.to_unit_raster());
    }
    ImageStack::new(frames, pixel_pitch)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_bit_fixture_scales_by_maxval() {
        // 2x2, maxval 1023, samples 0, 1023, 512, 1 big-endian
        let mut bytes = b"P5\n# ten-bit\n2 2\n1023\n".to_vec();
        bytes.extend_from_slice(&[0x00, 0x00, 0x03, 0xff, 0x02, 0x00, 0x00, 0x01]);
        let pgm = decode_pgm(&bytes).unwrap();
        assert_eq!(pgm.samples, vec![0, 1023, 512, 1]);
        let r = pgm.to_unit_raster();
        assert_eq!(r.as_slice(), &[0.0, 1.0, 512.0 / 1023.0, 1.0 / 1023.0]);
    }

    #[test]
    fn eight_bit_scales_by_255() {
        let mut bytes = b"P5 3 1 255 ".to_vec();
        bytes.extend_from_slice(&[0, 51, 255]);
        let r = decode_pgm(&bytes).unwrap().to_unit_raster();
        assert_eq!(r.as_slice(), &[0.0, 0.2, 1.0]);
    }

    #[test]
    fn sixteen_bit_roundtrip() {
        let r = Raster::from_fn(3, 2, |x, y| (x + 3 * y) as f64 / 5.0);
        let back = decode_pgm(&encode_pgm16(&r)).unwrap().to_unit_raster();
        assert!(back.max_abs_diff(&r) <= 0.5 / 65535.0);
    }

    #[test]
    fn malformed_inputs() {
        assert!(matches!(
            decode_pgm(b"P2\n1 1\n255\n0"),
            Err(Error::MalformedHeader(_))
        ));
        assert!(matches!(
            decode_pgm(b"P5\n1 x\n255\n0"),
            Err(Error::MalformedHeader(_))
        ));
        assert!(matches!(
            decode_pgm(b"P5\n1 1\n0\n\0"),
            Err(Error::UnsupportedMaxval(0))
        ));
        assert!(matches!(
            decode_pgm(b"P5\n1 1\n70000\n\0\0"),
            Err(Error::UnsupportedMaxval(70000))
        ));
        assert!(matches!(
            decode_pgm(b"P5\n2 2\n65535\n\0\0\0"),
            Err(Error::TruncatedPayload {
                expected: 8,
                found: 3
            })
        ));
    }
}
