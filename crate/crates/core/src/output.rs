//! Artifact encoders and the atomic single-writer file sink.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::scan::ScanImage;

/// A named output file held in memory until the run commits it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn new(name: impl Into<String>, bytes: Vec<u8>) -> Self {
        Self {
            name: name.into(),
            bytes,
        }
    }
}

/// Binary 16-bit PGM (`P5`, maxval 65535, big-endian samples) of values in `[0, 1]`.
pub fn encode_pgm16(width: usize, height: usize, values: &[f64]) -> Vec<u8> {
    assert_eq!(values.len(), width * height, "pixel count mismatch");
    let mut out = format!("P5\n{width} {height}\n65535\n").into_bytes();
    out.reserve(values.len() * 2);
    for &v in values {
        let sample = (v.clamp(0.0, 1.0) * 65535.0).round() as u16;
        out.extend_from_slice(&sample.to_be_bytes());
    }
    out
}

/// CSV with a header row and CRLF record terminators.
pub fn encode_csv<I, R>(header: &[&str], rows: I) -> Vec<u8>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .flexible(false)
        .from_writer(Vec::new());
    // writes into a Vec cannot fail; a ragged row is a caller bug
    w.write_record(header).expect("csv header");
    for row in rows {
        w.write_record(row.into_iter().collect::<Vec<_>>()).expect("csv row width matches header");
    }
    w.into_inner().expect("in-memory csv flush")
}

/// Shortest decimal form that parses back to the same `f64`.
pub fn num(v: f64) -> String {
    format!("{v}")
}

/// `offset_x, offset_y, delta_g2, stderr` rows in row-major offset order.
pub fn scan_csv(img: &ScanImage) -> Vec<u8> {
    let rows = (0..img.height).flat_map(|j| {
        (0..img.width).map(move |i| {
            let o = img.offsets.offset(i, j);
            vec![
                o.dx.to_string(),
                o.dy.to_string(),
                num(img.value(i, j)),
                num(img.stderr_at(i, j)),
            ]
        })
    });
    encode_csv(&["offset_x", "offset_y", "delta_g2", "stderr"], rows)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes each artifact to `<dir>/<name>` through a temp file and rename.
pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::with_capacity(artifacts.len());
    for a in artifacts {
        let dest = dir.join(&a.name);
        let tmp = dir.join(format!(".{}.tmp", a.name));
        let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
        f.write_all(&a.bytes).map_err(io_err(&tmp))?;
        f.sync_all().map_err(io_err(&tmp))?;
        drop(f);
        fs::rename(&tmp, &dest).map_err(io_err(&dest))?;
        written.push(dest);
    }
    Ok(written)
}
