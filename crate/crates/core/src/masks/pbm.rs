use std::path::Path;

use crate::error::{Error, Result};

use super::{from_bitmap, PhaseMask};

/// Reads a plain (`P1`) or raw (`P4`) portable bitmap as a phase object.
pub fn read_pbm(path: &Path) -> Result<PhaseMask> {
    let bytes = std::fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let rows = parse_pbm(&bytes)?;
    let mut mask = from_bitmap(&rows)?;
    mask.label = format!("bitmap({})", path.display());
    Ok(mask)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
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

    fn token(&mut self) -> Option<&'a [u8]> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self
            .bytes
            .get(self.pos)
            .is_some_and(|b| !b.is_ascii_whitespace() && *b != b'#')
        {
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.bytes[start..self.pos])
    }

    fn dimension(&mut self, what: &str) -> Result<usize> {
        let tok = self
            .token()
            .ok_or_else(|| Error::Bitmap(format!("missing {what}")))?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse::<usize>().ok())
            .filter(|&v| v > 0)
            .ok_or_else(|| Error::Bitmap(format!("bad {what} {:?}", String::from_utf8_lossy(tok))))
    }
}

/// Decodes PBM bytes into rows of 0/1 cells.
pub fn parse_pbm(bytes: &[u8]) -> Result<Vec<Vec<u8>>> {
    let mut cur = Cursor { bytes, pos: 0 };
    let magic = cur
        .token()
        .ok_or_else(|| Error::Bitmap("missing magic number".into()))?;
    let raw = match magic {
        b"P1" => false,
        b"P4" => true,
        other => {
            return Err(Error::Bitmap(format!(
                "unsupported magic {:?}",
                String::from_utf8_lossy(other)
            )))
        }
    };
    let width = cur.dimension("width")?;
    let height = cur.dimension("height")?;

    if raw {
        // exactly one whitespace byte separates the header from the raster
        if !cur.bytes.get(cur.pos).is_some_and(u8::is_ascii_whitespace) {
            return Err(Error::Bitmap("missing raster separator".into()));
        }
        cur.pos += 1;
        let stride = width.div_ceil(8);
        let data = &bytes[cur.pos..];
        if data.len() < stride * height {
            return Err(Error::Bitmap(format!(
                "raster truncated: {} of {} bytes",
                data.len(),
                stride * height
            )));
        }
        Ok((0..height)
            .map(|y| {
                let row = &data[y * stride..(y + 1) * stride];
                (0..width).map(|x| (row[x / 8] >> (7 - x % 8)) & 1).collect()
            })
            .collect())
    } else {
        let mut cells = Vec::with_capacity(width * height);
        while cells.len() < width * height {
            cur.skip_space_and_comments();
            match cur.bytes.get(cur.pos) {
                Some(b'0') => cells.push(0),
                Some(b'1') => cells.push(1),
                Some(&b) => return Err(Error::Bitmap(format!("unexpected byte {b:#04x} in raster"))),
                None => {
                    return Err(Error::Bitmap(format!(
                        "raster truncated: {} of {} cells",
                        cells.len(),
                        width * height
                    )))
                }
            }
            cur.pos += 1;
        }
        Ok(cells.chunks(width).map(<[u8]>::to_vec).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_with_comments_and_packed_digits() {
        let src = b"P1\n# ghost\n3 2\n1 0 1\n010\n";
        assert_eq!(parse_pbm(src).unwrap(), vec![vec![1, 0, 1], vec![0, 1, 0]]);
    }

    #[test]
    fn raw_rows_are_byte_padded() {
        let mut src = b"P4\n10 2\n".to_vec();
        src.extend_from_slice(&[0b1000_0000, 0b0100_0000, 0b0000_0001, 0b1100_0000]);
        let rows = parse_pbm(&src).unwrap();
        assert_eq!(rows[0], vec![1, 0, 0, 0, 0, 0, 0, 0, 0, 1]);
        assert_eq!(rows[1], vec![0, 0, 0, 0, 0, 0, 0, 1, 1, 1]);
    }

    #[test]
    fn plain_and_raw_agree() {
        let plain = b"P1 9 1 1 1 0 0 1 0 1 1 1";
        let raw = [b"P4 9 1 ".as_slice(), &[0b1100_1011, 0b1000_0000]].concat();
        assert_eq!(parse_pbm(plain).unwrap(), parse_pbm(&raw).unwrap());
    }

    #[test]
    fn rejects_malformed() {
        assert!(parse_pbm(b"P2 1 1 0").is_err());
        assert!(parse_pbm(b"P1 2 2 1 0 1").is_err());
        assert!(parse_pbm(b"P1 0 2").is_err());
        assert!(parse_pbm(b"P4 16 2\n\xff").is_err());
        assert!(parse_pbm(b"P1 2 1 1 2").is_err());
    }

    #[test]
    fn reads_file_into_phase_object() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("obj.pbm");
        std::fs::write(&path, b"P1\n2 2\n0 1\n1 0\n").unwrap();
        let mask = read_pbm(&path).unwrap();
        assert_eq!(mask.phases(), &[0.0, std::f64::consts::PI, std::f64::consts::PI, 0.0]);
        assert!(read_pbm(&dir.path().join("missing.pbm")).is_err());
    }
}
