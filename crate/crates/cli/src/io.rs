//! Input parsing and output writers.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use identset_core::flow::{parse_rational, rational_to_f64};
use identset_core::{OutcomeSpace, ProbabilityVector};
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Reads an `outcome,mass` CSV; masses may be decimals or fractions `a/b`.
/// Outcomes not listed get mass zero.
pub fn read_probability(path: &Path, space: &OutcomeSpace) -> Result<ProbabilityVector> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let headers = reader.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "outcome" || &headers[1] != "mass" {
        bail!("{}: expected header `outcome,mass`", path.display());
    }
    let mut map = BTreeMap::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let label = record[0].to_string();
        let mass = rational_to_f64(&parse_rational(&record[1]).with_context(|| format!("row {}", line + 2))?);
        if map.insert(label.clone(), mass).is_some() {
            bail!("{}: outcome `{label}` listed twice", path.display());
        }
    }
    Ok(ProbabilityVector::from_label_map(space, &map)?)
}

/// A record sink writing JSON lines or CSV rows.
pub struct Output {
    format: Format,
    writer: Box<dyn Write>,
    header_written: bool,
    rows: usize,
}

impl Output {
    pub fn open(out: Option<&PathBuf>, format: Format) -> Result<Self> {
        let writer: Box<dyn Write> = match out {
            Some(path) => Box::new(BufWriter::new(
                File::create(path).with_context(|| format!("creating {}", path.display()))?,
            )),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        };
        Ok(Self {
            format,
            writer,
            header_written: false,
            rows: 0,
        })
    }

    /// Writes one record. `row` supplies the CSV header and fields; JSON
    /// output serializes `value` directly.
    pub fn write<T: Serialize>(&mut self, value: &T, row: impl FnOnce() -> (Vec<String>, Vec<String>)) -> Result<()> {
        match self.format {
            Format::Json => {
                serde_json::to_writer(&mut self.writer, value)?;
                self.writer.write_all(b"\n")?;
            }
            Format::Csv => {
                let (header, fields) = row();
                if !self.header_written {
                    writeln!(self.writer, "{}", csv_line(&header))?;
                    self.header_written = true;
                }
                writeln!(self.writer, "{}", csv_line(&fields))?;
            }
        }
        self.rows += 1;
        if self.rows % 256 == 0 {
            self.writer.flush()?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.writer.flush()?;
        Ok(())
    }
}

fn csv_line(fields: &[String]) -> String {
    fields
        .iter()
        .map(|f| {
            if f.contains([',', '"', '\n']) {
                format!("\"{}\"", f.replace('"', "\"\""))
            } else {
                f.clone()
            }
        })
        .collect::<Vec<_>>()
        .join(",")
}

/// Shortest round-tripping decimal form.
pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn labelled(space: &OutcomeSpace, values: &[f64]) -> BTreeMap<String, f64> {
    space.labels().iter().cloned().zip(values.iter().copied()).collect()
}
