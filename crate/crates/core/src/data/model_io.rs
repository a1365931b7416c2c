//! Versioned text persistence for trained models.
//!
//! UTF-8, LF line endings. Header lines carry `format_version`, `mode`,
//! `D`, `Dt`, `m`, `K`, and `bias`, followed by K `label` lines, m `V`
//! generator rows (D values), m `B` coefficient rows (Dt values), and K
//! `T` classifier rows (D values). Floats print with shortest
//! round-trip formatting, so loading reproduces every matrix exactly.
//! The generator Gram matrix is not stored; it is recomputed on load.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::types::{HyperplaneSet, LowRankTransform, MmdtModel, RegularizerMode};

/// Current model format version.
pub const MODEL_FORMAT_VERSION: u32 = 1;

fn mode_name(mode: RegularizerMode) -> &'static str {
    match mode {
        RegularizerMode::Pure => "pure",
        RegularizerMode::IdentityPlus => "identity_plus",
    }
}

fn parse_mode(name: &str) -> Result<RegularizerMode> {
    match name {
        "pure" => Ok(RegularizerMode::Pure),
        "identity_plus" => Ok(RegularizerMode::IdentityPlus),
        other => Err(Error::ModelFormat(format!("unknown mode {other:?}"))),
    }
}

/// Writes a model to a text file.
pub fn save_model(model: &MmdtModel, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path.as_ref())?);
    let t = model.transform();
    writeln!(out, "format_version {MODEL_FORMAT_VERSION}")?;
    writeln!(out, "mode {}", mode_name(t.mode()))?;
    writeln!(out, "D {}", t.source_dim())?;
    writeln!(out, "Dt {}", t.target_dim())?;
    writeln!(out, "m {}", t.generator_count())?;
    writeln!(out, "K {}", model.category_count())?;
    writeln!(out, "bias {}", u8::from(model.augment_bias()))?;
    for name in model.categories() {
        writeln!(out, "label {name}")?;
    }
    let write_row = |out: &mut BufWriter<File>, tag: &str, row: &[f64]| -> Result<()> {
        write!(out, "{tag}")?;
        for v in row {
            write!(out, " {v}")?;
        }
        writeln!(out)?;
        Ok(())
    };
    for row in t.generators().planes() {
        write_row(&mut out, "V", row)?;
    }
    for row in t.betas() {
        write_row(&mut out, "B", row)?;
    }
    for row in model.classifiers().planes() {
        write_row(&mut out, "T", row)?;
    }
    out.flush()?;
    Ok(())
}

struct Lines<R> {
    reader: R,
    buf: String,
    line_no: usize,
}

impl<R: BufRead> Lines<R> {
    fn next_line(&mut self) -> Result<&str> {
        self.buf.clear();
        let n = self.reader.read_line(&mut self.buf)?;
        if n == 0 {
            return Err(Error::ModelFormat(format!(
                "truncated file at line {}",
                self.line_no + 1
            )));
        }
        self.line_no += 1;
        Ok(self.buf.trim_end_matches(['\n', '\r']))
    }

    fn expect_field(&mut self, key: &str) -> Result<String> {
        let line_no = self.line_no + 1;
        let line = self.next_line()?;
        let (k, v) = line.split_once(' ').ok_or_else(|| {
            Error::ModelFormat(format!("line {line_no}: expected `{key} <value>`"))
        })?;
        if k != key {
            return Err(Error::ModelFormat(format!(
                "line {line_no}: expected key {key:?}, found {k:?}"
            )));
        }
        Ok(v.to_string())
    }

    fn expect_usize(&mut self, key: &str) -> Result<usize> {
        let v = self.expect_field(key)?;
        v.parse()
            .map_err(|_| Error::ModelFormat(format!("bad {key} value {v:?}")))
    }

    fn expect_row(&mut self, tag: &str, len: usize) -> Result<Vec<f64>> {
        let line_no = self.line_no + 1;
        let line = self.next_line()?;
        let mut parts = line.split(' ');
        let found = parts.next().unwrap_or("");
        if found != tag {
            return Err(Error::ModelFormat(format!(
                "line {line_no}: expected a {tag} row, found {found:?}"
            )));
        }
        let row: Vec<f64> = parts
            .map(|tok| {
                tok.parse::<f64>()
                    .map_err(|_| Error::ModelFormat(format!("line {line_no}: bad value {tok:?}")))
            })
            .collect::<Result<_>>()?;
        if row.len() != len {
            return Err(Error::ModelFormat(format!(
                "line {line_no}: {tag} row has {} values, expected {len}",
                row.len()
            )));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::ModelFormat(format!(
                "line {line_no}: non-finite value in {tag} row"
            )));
        }
        Ok(row)
    }
}

/// Loads a model saved by [`save_model`].
pub fn load_model(path: impl AsRef<Path>) -> Result<MmdtModel> {
    let mut lines = Lines {
        reader: BufReader::new(File::open(path.as_ref())?),
        buf: String::new(),
        line_no: 0,
    };

    let version = lines.expect_usize("format_version")?;
    if version != MODEL_FORMAT_VERSION as usize {
        return Err(Error::ModelFormat(format!(
            "unsupported format_version {version} (expected {MODEL_FORMAT_VERSION})"
        )));
    }
    let mode = parse_mode(&lines.expect_field("mode")?)?;
    let d = lines.expect_usize("D")?;
    let dt = lines.expect_usize("Dt")?;
    let m = lines.expect_usize("m")?;
    let k = lines.expect_usize("K")?;
    let bias = match lines.expect_field("bias")?.as_str() {
        "0" => false,
        "1" => true,
        other => return Err(Error::ModelFormat(format!("bad bias flag {other:?}"))),
    };
    if d == 0 || dt == 0 || m == 0 || k == 0 {
        return Err(Error::ModelFormat(
            "dimensions and counts must be positive".into(),
        ));
    }
    if mode == RegularizerMode::IdentityPlus && d != dt {
        return Err(Error::ModelFormat(format!(
            "identity_plus mode with D {d} != Dt {dt}"
        )));
    }

    let mut categories = Vec::with_capacity(k);
    for _ in 0..k {
        categories.push(lines.expect_field("label")?);
    }
    let mut generators = Vec::with_capacity(m);
    for _ in 0..m {
        generators.push(lines.expect_row("V", d)?);
    }
    let mut betas = Vec::with_capacity(m);
    for _ in 0..m {
        betas.push(lines.expect_row("B", dt)?);
    }
    let mut planes = Vec::with_capacity(k);
    for _ in 0..k {
        planes.push(lines.expect_row("T", d)?);
    }

    let transform = LowRankTransform::new(HyperplaneSet::new(generators)?, betas, mode, dt)
        .map_err(|e| Error::ModelFormat(e.to_string()))?;
    let classifiers = HyperplaneSet::new(planes)?;
    MmdtModel::new(transform, classifiers, categories, bias)
        .map_err(|e| Error::ModelFormat(e.to_string()))
}
