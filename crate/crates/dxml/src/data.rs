//! Reading and writing the extreme-classification repository text format.
//!
//! The first line is a header `n d_x d_y`. Each of the following `n` lines
//! describes one instance as `l1,l2,...,lk f1:v1 f2:v2 ...` with 0-based
//! label and feature indices. The label list may be empty, in which case the
//! line starts with a space (or consists only of `idx:val` tokens).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::sparse::{Dataset, SparseMatrix, SparseVec};

/// Declared dataset shape from the header line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct XmlcHeader {
    pub n: usize,
    pub d_x: usize,
    pub d_y: usize,
}

impl XmlcHeader {
    fn parse(line: &str) -> Result<Self> {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: 1,
                message: format!(
                    "malformed header: expected `n d_x d_y`, found {} fields",
                    fields.len()
                ),
            });
        }
        let parse = |s: &str, what: &str| -> Result<usize> {
            s.parse::<usize>().map_err(|_| Error::Parse {
                line: 1,
                message: format!("malformed header: {} `{}` is not a number", what, s),
            })
        };
        let header = XmlcHeader {
            n: parse(fields[0], "instance count")?,
            d_x: parse(fields[1], "feature dimension")?,
            d_y: parse(fields[2], "label dimension")?,
        };
        if header.n == 0 || header.d_x == 0 || header.d_y == 0 {
            return Err(Error::Parse {
                line: 1,
                message: "malformed header: all three fields must be positive".to_string(),
            });
        }
        Ok(header)
    }
}

fn parse_instance_line(
    line: &str,
    line_no: usize,
    header: &XmlcHeader,
) -> Result<(SparseVec, SparseVec)> {
    let line = line.trim_end_matches(['\r', '\n']);
    let has_labels = match line.chars().next() {
        None => false,
        Some(c) if c.is_whitespace() => false,
        _ => !line.split_whitespace().next().unwrap_or("").contains(':'),
    };

    let mut tokens = line.split_whitespace();
    let mut label_cols: Vec<u32> = Vec::new();
    if has_labels {
        let list = tokens.next().unwrap();
        for part in list.split(',') {
            let idx: usize = part.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("label index `{}` is not a number", part),
            })?;
            if idx >= header.d_y {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!(
                        "label index {} out of range (label dimension {})",
                        idx, header.d_y
                    ),
                });
            }
            label_cols.push(idx as u32);
        }
    }
    label_cols.sort_unstable();
    label_cols.dedup();
    let labels = SparseVec::new(header.d_y, label_cols.iter().map(|&c| (c, 1.0)).collect())
        .expect("sorted deduplicated label entries");

    let mut feature_entries: Vec<(u32, f64)> = Vec::new();
    for token in tokens {
        let (idx_str, val_str) = token.split_once(':').ok_or_else(|| Error::Parse {
            line: line_no,
            message: format!("feature token `{}` is not of the form idx:val", token),
        })?;
        let idx: usize = idx_str.parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("feature index `{}` is not a number", idx_str),
        })?;
        if idx >= header.d_x {
            return Err(Error::Parse {
                line: line_no,
                message: format!(
                    "feature index {} out of range (feature dimension {})",
                    idx, header.d_x
                ),
            });
        }
        let val: f64 = val_str.parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("feature value `{}` is not a number", val_str),
        })?;
        feature_entries.push((idx as u32, val));
    }
    let features = SparseVec::collect(header.d_x, feature_entries).map_err(|e| Error::Parse {
        line: line_no,
        message: e.to_string(),
    })?;
    Ok((features, labels))
}

/// Parse a dataset from the XMLC text format.
pub fn parse_xmlc<R: BufRead>(reader: R) -> Result<Dataset> {
    let mut lines = reader.lines();
    let header_line = match lines.next() {
        Some(l) => l?,
        None => {
            return Err(Error::Parse {
                line: 1,
                message: "empty input: missing header line".to_string(),
            })
        }
    };
    let header = XmlcHeader::parse(&header_line)?;

    let mut feature_rows = Vec::with_capacity(header.n);
    let mut label_rows = Vec::with_capacity(header.n);
    for i in 0..header.n {
        let line_no = i + 2;
        let line = match lines.next() {
            Some(l) => l?,
            None => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected {} data lines, found {}", header.n, i),
                })
            }
        };
        let (features, labels) = parse_instance_line(&line, line_no, &header)?;
        feature_rows.push(features);
        label_rows.push(labels);
    }
    for (extra, line) in lines.enumerate() {
        let line = line?;
        if !line.trim().is_empty() {
            return Err(Error::Parse {
                line: header.n + 2 + extra,
                message: format!("trailing content beyond {} declared instances", header.n),
            });
        }
    }

    let features = SparseMatrix::new(header.d_x, feature_rows)?;
    let labels = SparseMatrix::new(header.d_y, label_rows)?;
    Dataset::new(features, labels)
}

/// Write a dataset in the XMLC text format; `parse_xmlc` round-trips it.
pub fn write_xmlc<W: Write>(dataset: &Dataset, mut writer: W) -> Result<()> {
    writeln!(
        writer,
        "{} {} {}",
        dataset.n(),
        dataset.d_x(),
        dataset.d_y()
    )?;
    for i in 0..dataset.n() {
        let labels: Vec<String> = dataset
            .labels
            .row(i)
            .iter()
            .map(|(c, _)| c.to_string())
            .collect();
        write!(writer, "{}", labels.join(","))?;
        for (col, val) in dataset.features.row(i).iter() {
            write!(writer, " {}:{}", col, val)?;
        }
        writeln!(writer)?;
    }
    Ok(())
}

/// Parse a dataset file, attaching the path to any I/O error.
pub fn read_xmlc_file<P: AsRef<Path>>(path: P) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })?;
    parse_xmlc(BufReader::new(file))
}

/// Write a dataset file, attaching the path to any I/O error.
pub fn write_xmlc_file<P: AsRef<Path>>(dataset: &Dataset, path: P) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })?;
    write_xmlc(dataset, BufWriter::new(file))
}
