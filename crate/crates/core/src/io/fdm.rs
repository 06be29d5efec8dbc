//! FDM1 float depth maps.
//!
//! ```text
//! FDM1\n
//! width <int>\n
//! height <int>\n
//! pitch_um <decimal>\n
//! <width * height little-endian f32, row-major, y down>
//! ```

use std::path::Path;

use crate::error::{Error, Result};
use crate::integration::DepthMap;
use crate::raster::Raster;

const MAGIC: &str = "FDM1";

pub fn encode_fdm(map: &DepthMap) -> Vec<u8> {
    let mut out = format!(
        "{MAGIC}\nwidth {}\nheight {}\npitch_um {}\n",
        map.width(),
        map.height(),
        map.pixel_pitch
    )
    .into_bytes();
    out.reserve(map.z.len() * 4);
    for v in map.z.as_slice() {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    out
}

fn header_line<'a>(bytes: &'a [u8], pos: &mut usize) -> Option<&'a str> {
    let rest = &bytes[*pos..];
    let end = rest.iter().position(|b| *b == b'\n')?;
    *pos += end + 1;
    std::str::from_utf8(&rest[..end]).ok()
}

fn field<T: std::str::FromStr>(line: Option<&str>, key: &str) -> Result<T> {
    line.and_then(|l| l.strip_prefix(key))
        .and_then(|v| v.strip_prefix(' '))
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::MalformedHeader(format!("expected `{key} <value>` line")))
}

pub fn decode_fdm(bytes: &[u8]) -> Result<DepthMap> {
    let mut pos = 0;
    if header_line(bytes, &mut pos) != Some(MAGIC) {
        return Err(Error::BadMagic);
    }
    let width: usize = field(header_line(bytes, &mut pos), "width")?;
    let height: usize = field(header_line(bytes, &mut pos), "height")?;
    let pitch: f64 = field(header_line(bytes, &mut pos), "pitch_um")?;
    if width == 0 || height == 0 {
        return Err(Error::MalformedHeader(format!(
            "zero dimension {width}x{height}"
        )));
    }
    let payload = &bytes[pos..];
    let expected = width * height * 4;
    if payload.len() < expected {
        return Err(Error::TruncatedPayload {
            expected,
            found: payload.len(),
        });
    }
    if payload.len() > expected {
        return Err(Error::MalformedHeader(format!(
            "{} trailing bytes after payload",
            payload.len() - expected
        )));
    }
    let data = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    DepthMap::new(Raster::from_vec(width, height, data)?, pitch)
}

pub fn save_depth_map(path: &Path, map: &DepthMap) -> Result<()> {
    std::fs::write(path, encode_fdm(map)).map_err(|e| Error::io(path, e))
}

pub fn load_depth_map(path: &Path) -> Result<DepthMap> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_fdm(&bytes)
}
