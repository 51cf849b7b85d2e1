use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::Deserialize;

use super::{Dataset, Record};
use crate::error::{Error, Result};

const REQUIRED: [&str; 2] = ["job_description", "soc_code"];
pub(crate) const COLUMNS: [&str; 5] = [
    "job_title",
    "job_description",
    "company_name",
    "soc_code",
    "soc_occupation",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    Csv,
    Jsonl,
}

impl DataFormat {
    /// Guesses the format from a file extension, defaulting to CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("ndjson") => DataFormat::Jsonl,
            _ => DataFormat::Csv,
        }
    }
}

impl FromStr for DataFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(DataFormat::Csv),
            "jsonl" => Ok(DataFormat::Jsonl),
            other => Err(format!(
                "unknown data format `{other}` (expected csv or jsonl)"
            )),
        }
    }
}

/// A loaded dataset plus the number of rows dropped for an empty
/// description or label.
#[derive(Debug, Clone)]
pub struct LoadOutcome {
    pub dataset: Dataset,
    pub dropped: usize,
}

pub fn load_dataset(path: &Path, format: DataFormat) -> Result<LoadOutcome> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let (records, dropped) = match format {
        DataFormat::Csv => read_csv(BufReader::new(file))?,
        DataFormat::Jsonl => read_jsonl(BufReader::new(file), path)?,
    };
    if dropped > 0 {
        log::warn!(
            "{}: dropped {dropped} rows with empty description or soc_code",
            path.display()
        );
    }
    Ok(LoadOutcome {
        dataset: Dataset::new(records)?,
        dropped,
    })
}

fn finish(mut record: Record, kept: &mut Vec<Record>, dropped: &mut usize) {
    record.soc_code = record.soc_code.trim().to_string();
    if record.is_valid() {
        kept.push(record);
    } else {
        *dropped += 1;
    }
}

fn read_csv<R: std::io::Read>(reader: R) -> Result<(Vec<Record>, usize)> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let headers = csv.headers()?.clone();
    let position = |name: &str| headers.iter().position(|h| h.trim() == name);
    for required in REQUIRED {
        if position(required).is_none() {
            return Err(Error::MissingColumn(required.to_string()));
        }
    }
    let columns: Vec<Option<usize>> = COLUMNS.iter().map(|c| position(c)).collect();

    let mut kept = Vec::new();
    let mut dropped = 0;
    for (i, row) in csv.records().enumerate() {
        let row_number = i + 1;
        let row = row.map_err(|e| Error::MalformedRow {
            row: row_number,
            message: e.to_string(),
        })?;
        let field = |slot: usize| {
            columns[slot]
                .and_then(|c| row.get(c))
                .unwrap_or_default()
                .to_string()
        };
        let record = Record {
            job_title: field(0),
            job_description: field(1),
            company_name: field(2),
            soc_code: field(3),
            soc_occupation: field(4),
        };
        finish(record, &mut kept, &mut dropped);
    }
    Ok((kept, dropped))
}

#[derive(Deserialize)]
struct JsonRow {
    #[serde(default)]
    job_title: Option<String>,
    job_description: Option<String>,
    #[serde(default)]
    company_name: Option<String>,
    soc_code: Option<String>,
    #[serde(default)]
    soc_occupation: Option<String>,
}

fn read_jsonl<R: BufRead>(reader: R, path: &Path) -> Result<(Vec<Record>, usize)> {
    let mut kept = Vec::new();
    let mut dropped = 0;
    for (i, line) in reader.lines().enumerate() {
        let row_number = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: JsonRow = serde_json::from_str(&line).map_err(|e| Error::MalformedRow {
            row: row_number,
            message: e.to_string(),
        })?;
        let job_description = row
            .job_description
            .ok_or_else(|| Error::MissingColumn("job_description".into()))?;
        let soc_code = row
            .soc_code
            .ok_or_else(|| Error::MissingColumn("soc_code".into()))?;
        let record = Record {
            job_title: row.job_title.unwrap_or_default(),
            job_description,
            company_name: row.company_name.unwrap_or_default(),
            soc_code,
            soc_occupation: row.soc_occupation.unwrap_or_default(),
        };
        finish(record, &mut kept, &mut dropped);
    }
    Ok((kept, dropped))
}

/// Writes all five columns, in header order, as CSV or JSON lines.
pub fn write_dataset(dataset: &Dataset, path: &Path, format: DataFormat) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    match format {
        DataFormat::Csv => {
            let mut csv = csv::Writer::from_writer(out);
            csv.write_record(COLUMNS)?;
            for r in dataset.records() {
                csv.write_record([
                    &r.job_title,
                    &r.job_description,
                    &r.company_name,
                    &r.soc_code,
                    &r.soc_occupation,
                ])?;
            }
            csv.flush().map_err(|e| Error::io(path, e))?;
        }
        DataFormat::Jsonl => {
            for r in dataset.records() {
                serde_json::to_writer(&mut out, r)?;
                out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
            }
            out.flush().map_err(|e| Error::io(path, e))?;
        }
    }
    Ok(())
}
