//! File formats.
//!
//! * PGM, `P2` (ASCII) or `P5` (binary), maxval 255 or 65535. 16-bit samples are
//!   big-endian. `#` comments may appear between header tokens.
//! * LBL label maps: ASCII header `LBL <width> <height>\n` followed by
//!   `width * height` little-endian `u32` labels in row-major order.
//! * UCMs are written as 16-bit P5 with sample `round_half_up(s * 65535)`.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::raster::{LabelMap, Raster, SaliencyGrid};

/// How PGM samples are interpreted on load.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RasterKind {
    /// Raw intensities.
    Image,
    /// Probabilities: samples are divided by maxval.
    Prior,
}

/// A decoded PGM: raw integer samples and the declared maxval.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pgm {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub samples: Vec<u16>,
}

pub fn load_raster(path: impl AsRef<Path>, kind: RasterKind) -> Result<Raster> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let pgm = decode_pgm(&bytes)?;
    Ok(pgm_to_raster(&pgm, kind))
}

pub fn pgm_to_raster(pgm: &Pgm, kind: RasterKind) -> Raster {
    let scale = match kind {
        RasterKind::Image => 1.0,
        RasterKind::Prior => f64::from(pgm.maxval),
    };
    let values = pgm.samples.iter().map(|&s| f64::from(s) / scale).collect();
    Raster::new(pgm.width, pgm.height, values).expect("decoder checked dimensions")
}

/// Writes raw intensities as a binary PGM. Values are rounded and must fit `maxval`.
pub fn save_raster(raster: &Raster, path: impl AsRef<Path>, maxval: u16) -> Result<()> {
    if maxval != 255 && maxval != 65535 {
        return Err(Error::InvalidArgument(format!(
            "unsupported maxval {maxval}"
        )));
    }
    let mut samples = Vec::with_capacity(raster.values().len());
    for &v in raster.values() {
        let r = v.round();
        if !(0.0..=f64::from(maxval)).contains(&r) {
            return Err(Error::Validation(format!(
                "value {v} does not fit maxval {maxval}"
            )));
        }
        samples.push(r as u16);
    }
    let pgm = Pgm {
        width: raster.width(),
        height: raster.height(),
        maxval,
        samples,
    };
    write_file(path.as_ref(), &encode_pgm(&pgm))
}

pub fn decode_pgm(bytes: &[u8]) -> Result<Pgm> {
    let mut cur = Cursor { bytes, pos: 0 };
    let binary = match bytes.get(..2) {
        Some(b"P5") => true,
        Some(b"P2") => false,
        _ => return Err(Error::format(0, "expected magic P2 or P5")),
    };
    cur.pos = 2;
    let (width, _) = cur.header_number("width")?;
    let (height, _) = cur.header_number("height")?;
    let (maxval, maxval_at) = cur.header_number("maxval")?;
    if maxval != 255 && maxval != 65535 {
        return Err(Error::format(
            maxval_at,
            format!("unsupported maxval {maxval} (expected 255 or 65535)"),
        ));
    }
    if width == 0 || height == 0 {
        return Err(Error::format(2, format!("empty image {width}x{height}")));
    }
    let count = width
        .checked_mul(height)
        .ok_or_else(|| Error::format(2, "image dimensions overflow"))?;
    let maxval = maxval as u16;

    let samples = if binary {
        // exactly one whitespace byte separates the header from the payload
        match bytes.get(cur.pos) {
            Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
            _ => return Err(Error::format(cur.pos, "expected whitespace after maxval")),
        }
        let bps = if maxval > 255 { 2 } else { 1 };
        let payload = &bytes[cur.pos..];
        let needed = count * bps;
        if payload.len() < needed {
            return Err(Error::format(
                bytes.len(),
                format!(
                    "truncated payload: expected {needed} bytes, found {}",
                    payload.len()
                ),
            ));
        }
        if bps == 1 {
            payload[..needed].iter().map(|&b| u16::from(b)).collect()
        } else {
            payload[..needed]
                .chunks_exact(2)
                .map(|c| u16::from_be_bytes([c[0], c[1]]))
                .collect()
        }
    } else {
        let mut samples = Vec::with_capacity(count);
        for _ in 0..count {
            let at = cur.pos;
            let v = cur
                .ascii_number()
                .map_err(|_| Error::format(at, "truncated or malformed ASCII payload"))?;
            if v > usize::from(maxval) {
                return Err(Error::format(
                    at,
                    format!("sample {v} exceeds maxval {maxval}"),
                ));
            }
            samples.push(v as u16);
        }
        samples
    };
    Ok(Pgm {
        width,
        height,
        maxval,
        samples,
    })
}

pub fn encode_pgm(pgm: &Pgm) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n{}\n", pgm.width, pgm.height, pgm.maxval).into_bytes();
    if pgm.maxval > 255 {
        for &s in &pgm.samples {
            out.extend_from_slice(&s.to_be_bytes());
        }
    } else {
        out.extend(pgm.samples.iter().map(|&s| s as u8));
    }
    out
}

pub fn load_label_map(path: impl AsRef<Path>) -> Result<LabelMap> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_label_map(&bytes)
}

pub fn save_label_map(labels: &LabelMap, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &encode_label_map(labels))
}

pub fn decode_label_map(bytes: &[u8]) -> Result<LabelMap> {
    if !bytes.starts_with(b"LBL ") {
        return Err(Error::format(0, "expected 'LBL ' header"));
    }
    let end = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::format(bytes.len(), "unterminated LBL header"))?;
    let header = std::str::from_utf8(&bytes[4..end])
        .map_err(|_| Error::format(4, "LBL header is not ASCII"))?;
    let mut fields = header.split(' ');
    let mut dim = |name: &str| -> Result<usize> {
        fields
            .next()
            .and_then(|s| s.parse::<usize>().ok())
            .ok_or_else(|| Error::format(4, format!("malformed LBL {name}")))
    };
    let width = dim("width")?;
    let height = dim("height")?;
    if fields.next().is_some() {
        return Err(Error::format(4, "trailing fields in LBL header"));
    }
    let needed = width
        .checked_mul(height)
        .and_then(|c| c.checked_mul(4))
        .ok_or_else(|| Error::format(4, "LBL dimensions overflow"))?;
    let payload = &bytes[end + 1..];
    if payload.len() < needed {
        return Err(Error::format(
            bytes.len(),
            format!(
                "truncated LBL payload: expected {needed} bytes, found {}",
                payload.len()
            ),
        ));
    }
    let raw = payload[..needed]
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    LabelMap::from_labels(width, height, raw)
}

pub fn encode_label_map(labels: &LabelMap) -> Vec<u8> {
    let mut out = format!("LBL {} {}\n", labels.width(), labels.height()).into_bytes();
    out.reserve(labels.labels().len() * 4);
    for &l in labels.labels() {
        out.extend_from_slice(&l.to_le_bytes());
    }
    out
}

/// 16-bit sample for a saliency in `[0, 1]`, rounding halves up.
pub fn quantize_saliency(s: f64) -> u16 {
    (s * 65535.0 + 0.5).floor() as u16
}

pub fn save_ucm(ucm: &SaliencyGrid, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &encode_ucm(ucm)?)
}

pub fn encode_ucm(ucm: &SaliencyGrid) -> Result<Vec<u8>> {
    if let Some(v) = ucm.values().iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::Validation(format!("saliency {v} is outside [0, 1]")));
    }
    Ok(encode_pgm(&Pgm {
        width: ucm.width(),
        height: ucm.height(),
        maxval: 65535,
        samples: ucm.values().iter().map(|&s| quantize_saliency(s)).collect(),
    }))
}

pub fn load_ucm(path: impl AsRef<Path>) -> Result<SaliencyGrid> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let raster = pgm_to_raster(&decode_pgm(&bytes)?, RasterKind::Prior);
    SaliencyGrid::from_values(raster.width(), raster.height(), raster.values().to_vec())
}

/// Edge list dump: `u,v,weight,boundary_length`.
pub fn rag_csv(rag: &crate::graph::Rag) -> String {
    let mut out = String::from("u,v,weight,boundary_length\n");
    for e in rag.edges() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            e.u, e.v, e.weight, e.boundary_length
        ));
    }
    out
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' {
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

    /// Returns the parsed value and its byte offset.
    fn header_number(&mut self, what: &str) -> Result<(usize, usize)> {
        let before = self.pos;
        self.skip_space_and_comments();
        if self.pos == before {
            return Err(Error::format(
                self.pos,
                format!("expected whitespace before {what}"),
            ));
        }
        let at = self.pos;
        self.digits()
            .map(|v| (v, at))
            .ok_or_else(|| Error::format(at, format!("malformed {what}")))
    }

    fn ascii_number(&mut self) -> std::result::Result<usize, ()> {
        self.skip_space_and_comments();
        self.digits().ok_or(())
    }

    fn digits(&mut self) -> Option<usize> {
        let start = self.pos;
        let mut value: usize = 0;
        while let Some(&b) = self.bytes.get(self.pos) {
            if !b.is_ascii_digit() {
                break;
            }
            value = value.checked_mul(10)?.checked_add(usize::from(b - b'0'))?;
            self.pos += 1;
        }
        (self.pos > start).then_some(value)
    }
}
