//! Sparse `label index:value` text format.
//!
//! One example per line: a label token followed by 1-based `index:value`
//! pairs with strictly increasing indices. Blank lines are skipped and
//! `#` starts a comment. A `# dim=N` comment before any example declares
//! the dimension explicitly; otherwise it is the largest index seen.
//!
//! ```text
//! # dim=4
//! cat 1:0.5 3:-2
//! dog 2:1
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::types::{Dataset, DomainTag, FeatureVector};

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

/// Reads a dataset in sparse text format. Labels map to dense category
/// ids in order of first appearance.
pub fn read_sparse_dataset(path: impl AsRef<Path>, domain: DomainTag) -> Result<Dataset> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path)?);

    let mut categories: Vec<String> = Vec::new();
    let mut rows: Vec<(Vec<(usize, f64)>, usize)> = Vec::new();
    let mut declared_dim: Option<usize> = None;
    let mut max_index = 0usize;

    for (line_no, line) in reader.lines().enumerate() {
        let line_no = line_no + 1;
        let line = line.map_err(|e| parse_error(path, line_no, e.to_string()))?;
        let content = match line.find('#') {
            Some(pos) => {
                if rows.is_empty() && declared_dim.is_none() {
                    let comment = line[pos + 1..].trim();
                    if let Some(rest) = comment.strip_prefix("dim=") {
                        let dim: usize = rest.trim().parse().map_err(|_| {
                            parse_error(path, line_no, format!("bad dimension declaration {rest:?}"))
                        })?;
                        if dim == 0 {
                            return Err(parse_error(path, line_no, "declared dimension is zero"));
                        }
                        declared_dim = Some(dim);
                    }
                }
                &line[..pos]
            }
            None => line.as_str(),
        };
        let content = content.trim();
        if content.is_empty() {
            continue;
        }

        let mut tokens = content.split_whitespace();
        let label = tokens.next().expect("non-empty line has a first token");
        let category = match categories.iter().position(|c| c == label) {
            Some(id) => id,
            None => {
                categories.push(label.to_string());
                categories.len() - 1
            }
        };

        let mut entries: Vec<(usize, f64)> = Vec::new();
        for tok in tokens {
            let (idx_str, val_str) = tok.split_once(':').ok_or_else(|| {
                parse_error(path, line_no, format!("expected index:value, got {tok:?}"))
            })?;
            let idx: usize = idx_str.parse().map_err(|_| {
                parse_error(path, line_no, format!("bad feature index {idx_str:?}"))
            })?;
            if idx == 0 {
                return Err(parse_error(path, line_no, "feature indices are 1-based"));
            }
            let val: f64 = val_str.parse().map_err(|_| {
                parse_error(path, line_no, format!("bad feature value {val_str:?}"))
            })?;
            if !val.is_finite() {
                return Err(parse_error(path, line_no, format!("non-finite value {val}")));
            }
            let zero_based = idx - 1;
            if let Some((last, _)) = entries.last() {
                if zero_based <= *last {
                    return Err(parse_error(
                        path,
                        line_no,
                        format!("indices must be strictly increasing, got {idx}"),
                    ));
                }
            }
            max_index = max_index.max(idx);
            entries.push((zero_based, val));
        }
        rows.push((entries, category));
    }

    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let dimension = match declared_dim {
        Some(d) => {
            if max_index > d {
                return Err(Error::InvalidConfig(format!(
                    "feature index {max_index} exceeds declared dimension {d}"
                )));
            }
            d
        }
        None => max_index.max(1),
    };

    let examples = rows
        .into_iter()
        .map(|(entries, cat)| Ok((FeatureVector::sparse(dimension, entries)?, cat)))
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(examples, dimension, categories, domain)
}

/// Writes a dataset in sparse text format with a `# dim=` header. Values
/// print with shortest round-trip formatting, so reading the file back
/// reproduces them exactly.
pub fn write_sparse_dataset(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path.as_ref())?);
    writeln!(out, "# dim={}", data.dimension())?;
    for (fv, cat) in data.examples() {
        write!(out, "{}", data.categories()[*cat])?;
        for (idx, val) in fv.iter_entries() {
            if val != 0.0 {
                write!(out, " {}:{}", idx + 1, val)?;
            }
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}
