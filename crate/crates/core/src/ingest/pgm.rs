//! Binary portable graymap (`P5`) reader and writer.
//!
//! Samples are one byte when `maxval < 256`, otherwise two bytes in
//! big-endian order. Masks are written with `maxval = 65535`.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: u32,
    pub height: u32,
    pub data: Vec<u16>,
}

impl GrayImage {
    pub fn new(width: u32, height: u32) -> Self {
        GrayImage {
            width,
            height,
            data: vec![0; width as usize * height as usize],
        }
    }

    pub fn get(&self, x: u32, y: u32) -> u16 {
        self.data[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, v: u16) {
        self.data[y as usize * self.width as usize + x as usize] = v;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PgmError {
    #[error("not a binary graymap (expected magic `P5`)")]
    BadMagic,
    #[error("truncated header")]
    TruncatedHeader,
    #[error("invalid header field `{0}`")]
    BadField(String),
    #[error("maxval {0} outside 1..=65535")]
    BadMaxval(u32),
    #[error("raster holds {actual} bytes, expected {expected}")]
    TruncatedRaster { expected: usize, actual: usize },
    #[error("sample {value} exceeds maxval {maxval}")]
    SampleTooLarge { value: u16, maxval: u32 },
}

struct Header<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.buf.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.buf.get(self.pos) {
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

    fn number(&mut self) -> Result<u32, PgmError> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.buf.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return match self.buf.get(self.pos) {
                None => Err(PgmError::TruncatedHeader),
                Some(_) => Err(PgmError::BadField(
                    String::from_utf8_lossy(&self.buf[start..(start + 8).min(self.buf.len())]).into_owned(),
                )),
            };
        }
        let text = std::str::from_utf8(&self.buf[start..self.pos]).expect("ascii digits");
        text.parse().map_err(|_| PgmError::BadField(text.to_owned()))
    }
}

pub fn decode(bytes: &[u8]) -> Result<GrayImage, PgmError> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(PgmError::BadMagic);
    }
    let mut h = Header { buf: bytes, pos: 2 };
    let width = h.number()?;
    let height = h.number()?;
    let maxval = h.number()?;
    if width == 0 || height == 0 {
        return Err(PgmError::BadField(format!("{width}x{height}")));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(PgmError::BadMaxval(maxval));
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(h.pos) {
        Some(b) if b.is_ascii_whitespace() => h.pos += 1,
        _ => return Err(PgmError::TruncatedHeader),
    }
    let raster = &bytes[h.pos..];
    let n = width as usize * height as usize;
    let wide = maxval > 255;
    let expected = if wide { 2 * n } else { n };
    if raster.len() < expected {
        return Err(PgmError::TruncatedRaster {
            expected,
            actual: raster.len(),
        });
    }
    let data: Vec<u16> = if wide {
        raster[..expected]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect()
    } else {
        raster[..expected].iter().map(|&b| u16::from(b)).collect()
    };
    if let Some(&value) = data.iter().find(|&&v| u32::from(v) > maxval) {
        return Err(PgmError::SampleTooLarge { value, maxval });
    }
    Ok(GrayImage {
        width,
        height,
        data,
    })
}

/// 16-bit `P5` with `maxval = 65535`.
pub fn encode16(img: &GrayImage) -> Vec<u8> {
    let header = format!("P5\n{} {}\n65535\n", img.width, img.height);
    let mut out = Vec::with_capacity(header.len() + 2 * img.data.len());
    out.extend_from_slice(header.as_bytes());
    for v in &img.data {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decodes_hand_written_16_bit() {
        let mut bytes = b"P5\n# instance ids\n2 1\n65535\n".to_vec();
        bytes.extend_from_slice(&24001u16.to_be_bytes());
        bytes.extend_from_slice(&7u16.to_be_bytes());
        let img = decode(&bytes).unwrap();
        assert_eq!((img.width, img.height), (2, 1));
        assert_eq!(img.data, vec![24001, 7]);
    }

    #[test]
    fn decodes_8_bit() {
        let mut bytes = b"P5 3 1 255\n".to_vec();
        bytes.extend_from_slice(&[0, 24, 255]);
        assert_eq!(decode(&bytes).unwrap().data, vec![0, 24, 255]);
    }

    #[test]
    fn round_trip() {
        let mut img = GrayImage::new(3, 2);
        img.set(2, 1, 65535);
        img.set(0, 1, 26000);
        assert_eq!(decode(&encode16(&img)).unwrap(), img);
    }

    #[test]
    fn errors() {
        assert_eq!(decode(b"P2 1 1 255\n0"), Err(PgmError::BadMagic));
        assert_eq!(decode(b"P5 1 1"), Err(PgmError::TruncatedHeader));
        assert_eq!(decode(b"P5 1 1 70000\n\0\0"), Err(PgmError::BadMaxval(70000)));
        assert!(matches!(
            decode(b"P5 2 2 65535\n\0\0"),
            Err(PgmError::TruncatedRaster { expected: 8, .. })
        ));
        assert!(matches!(
            decode(b"P5 1 1 10\n\x0b"),
            Err(PgmError::SampleTooLarge { value: 11, .. })
        ));
    }
}
