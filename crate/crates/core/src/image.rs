//! Netpbm grayscale (PGM) and bitmap (PBM) images.

use std::path::Path;

use crate::error::{Error, Result};

/// A row-major grid of samples in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridImage {
    pub width: usize,
    pub height: usize,
    pub samples: Vec<f64>,
}

impl GridImage {
    pub fn new(width: usize, height: usize, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != width * height {
            return Err(Error::input(format!(
                "{} samples for a {width}x{height} image",
                samples.len()
            )));
        }
        if samples.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::input("samples must lie in [0, 1]"));
        }
        Ok(GridImage {
            width,
            height,
            samples,
        })
    }

    pub fn from_labels(width: usize, height: usize, labels: &[usize]) -> Result<Self> {
        Self::new(width, height, labels.iter().map(|&l| if l > 0 { 1.0 } else { 0.0 }).collect())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.samples[r * self.width + c]
    }

    /// Foreground mask: samples at or above `threshold`.
    pub fn to_mask(&self, threshold: f64) -> Vec<bool> {
        self.samples.iter().map(|&v| v >= threshold).collect()
    }

    pub fn to_labels(&self, threshold: f64) -> Vec<usize> {
        self.samples.iter().map(|&v| usize::from(v >= threshold)).collect()
    }

    pub fn is_binary(&self) -> bool {
        self.samples.iter().all(|&v| v == 0.0 || v == 1.0)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path)?;
        Self::decode(&bytes, path)
    }

    /// Parses P1, P2, P4 or P5. `path` is only used for error messages.
    pub fn decode(bytes: &[u8], path: &Path) -> Result<Self> {
        let mut p = Parser { bytes, pos: 0, path };
        if bytes.len() < 2 || bytes[0] != b'P' {
            return Err(p.err("missing netpbm magic number"));
        }
        let kind = bytes[1];
        if !matches!(kind, b'1' | b'2' | b'4' | b'5') {
            return Err(p.err(format!("unsupported netpbm type P{}", kind as char)));
        }
        p.pos = 2;
        let width = p.header_int()?;
        let height = p.header_int()?;
        if width == 0 || height == 0 {
            return Err(p.err("image dimensions must be positive"));
        }
        let maxval = if matches!(kind, b'2' | b'5') {
            let m = p.header_int()?;
            if m == 0 || m > 65535 {
                return Err(p.err(format!("maxval {m} outside 1..=65535")));
            }
            m
        } else {
            1
        };
        let n = width.checked_mul(height).ok_or_else(|| p.err("image too large"))?;
        let mut samples = Vec::with_capacity(n);
        match kind {
            b'1' => {
                for _ in 0..n {
                    p.skip_space();
                    match p.bytes.get(p.pos) {
                        Some(b'0') => samples.push(0.0),
                        Some(b'1') => samples.push(1.0),
                        Some(_) => return Err(p.err("expected 0 or 1")),
                        None => return Err(p.err("truncated pixel data")),
                    }
                    p.pos += 1;
                }
            }
            b'2' => {
                for _ in 0..n {
                    let v = p.header_int()?;
                    if v > maxval {
                        return Err(p.err(format!("sample {v} exceeds maxval {maxval}")));
                    }
                    samples.push(v as f64 / maxval as f64);
                }
            }
            b'4' => {
                p.single_space()?;
                let stride = width.div_ceil(8);
                let data = p.take(stride * height)?;
                for r in 0..height {
                    for c in 0..width {
                        let byte = data[r * stride + c / 8];
                        samples.push(f64::from(byte >> (7 - c % 8) & 1));
                    }
                }
            }
            _ => {
                p.single_space()?;
                let wide = maxval > 255;
                let start = p.pos;
                let data = p.take(n * if wide { 2 } else { 1 })?;
                for k in 0..n {
                    let v = if wide {
                        u16::from_be_bytes([data[2 * k], data[2 * k + 1]]) as usize
                    } else {
                        data[k] as usize
                    };
                    if v > maxval {
                        return Err(Error::Format {
                            path: path.to_path_buf(),
                            offset: start + k * if wide { 2 } else { 1 },
                            msg: format!("sample {v} exceeds maxval {maxval}"),
                        });
                    }
                    samples.push(v as f64 / maxval as f64);
                }
            }
        }
        Ok(GridImage {
            width,
            height,
            samples,
        })
    }

    fn quantize(&self, maxval: u16) -> impl Iterator<Item = u16> + '_ {
        self.samples
            .iter()
            .map(move |&v| (v.clamp(0.0, 1.0) * f64::from(maxval)).round() as u16)
    }

    /// PGM bytes: binary P5 or ASCII P2.
    pub fn encode_pgm(&self, maxval: u16, ascii: bool) -> Vec<u8> {
        let maxval = maxval.max(1);
        let mut out = format!(
            "{}\n{} {}\n{}\n",
            if ascii { "P2" } else { "P5" },
            self.width,
            self.height,
            maxval
        )
        .into_bytes();
        if ascii {
            let vals: Vec<u16> = self.quantize(maxval).collect();
            for row in vals.chunks(self.width) {
                let line: Vec<String> = row.iter().map(u16::to_string).collect();
                out.extend_from_slice(line.join(" ").as_bytes());
                out.push(b'\n');
            }
        } else if maxval > 255 {
            for v in self.quantize(maxval) {
                out.extend_from_slice(&v.to_be_bytes());
            }
        } else {
            out.extend(self.quantize(maxval).map(|v| v as u8));
        }
        out
    }

    /// PBM bytes; samples at or above 0.5 become bit 1.
    pub fn encode_pbm(&self, ascii: bool) -> Vec<u8> {
        let mut out = format!("{}\n{} {}\n", if ascii { "P1" } else { "P4" }, self.width, self.height).into_bytes();
        let mask = self.to_mask(0.5);
        for row in mask.chunks(self.width) {
            if ascii {
                let line: Vec<&str> = row.iter().map(|&b| if b { "1" } else { "0" }).collect();
                out.extend_from_slice(line.join(" ").as_bytes());
                out.push(b'\n');
            } else {
                for chunk in row.chunks(8) {
                    let byte = chunk
                        .iter()
                        .enumerate()
                        .fold(0u8, |acc, (i, &b)| acc | (u8::from(b) << (7 - i)));
                    out.push(byte);
                }
            }
        }
        out
    }

    pub fn write_pgm(&self, path: impl AsRef<Path>, maxval: u16) -> Result<()> {
        std::fs::write(path, self.encode_pgm(maxval, false))?;
        Ok(())
    }

    pub fn write_pbm(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.encode_pbm(false))?;
        Ok(())
    }
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl Parser<'_> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Format {
            path: self.path.to_path_buf(),
            offset: self.pos,
            msg: msg.into(),
        }
    }

    fn skip_space(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.bytes.get(self.pos).is_some_and(|&b| b != b'\n') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn header_int(&mut self) -> Result<usize> {
        self.skip_space();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(if self.pos >= self.bytes.len() {
                self.err("unexpected end of file")
            } else {
                self.err("expected a decimal integer")
            });
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .expect("ascii digits")
            .parse()
            .map_err(|_| Error::Format {
                path: self.path.to_path_buf(),
                offset: start,
                msg: "integer out of range".into(),
            })
    }

    fn single_space(&mut self) -> Result<()> {
        match self.bytes.get(self.pos) {
            Some(b) if b.is_ascii_whitespace() => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.err("expected whitespace before raster")),
        }
    }

    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            self.pos = self.bytes.len();
            return Err(self.err(format!("truncated raster: need {n} bytes")));
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }
}
