use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use super::{Label, Likert, VttResponse, VttStudy};
use crate::error::{Error, Result};

pub const RESPONSE_CSV_HEADER: [&str; 6] = [
    "participant_id",
    "image_id",
    "ground_truth",
    "guess",
    "likert",
    "timestamp_utc_iso8601",
];

fn row_error(source: &str, line: usize, reason: impl Into<String>) -> Error {
    Error::Row {
        source_name: source.to_string(),
        line,
        reason: reason.into(),
    }
}

fn parse_record(record: &csv::StringRecord, source: &str, line: usize) -> Result<VttResponse> {
    if record.len() != RESPONSE_CSV_HEADER.len() {
        return Err(row_error(
            source,
            line,
            format!("expected {} fields, found {}", RESPONSE_CSV_HEADER.len(), record.len()),
        ));
    }
    let field = |i: usize| record.get(i).unwrap_or("").trim();
    let nonempty = |i: usize| -> Result<String> {
        let v = field(i);
        if v.is_empty() {
            Err(row_error(source, line, format!("{} is empty", RESPONSE_CSV_HEADER[i])))
        } else {
            Ok(v.to_string())
        }
    };
    let label = |i: usize| -> Result<Label> {
        field(i).parse().map_err(|_| {
            row_error(
                source,
                line,
                format!(
                    "{} must be \"real\" or \"generated\", got {:?}",
                    RESPONSE_CSV_HEADER[i],
                    field(i)
                ),
            )
        })
    };
    let likert = field(4)
        .parse::<u8>()
        .ok()
        .and_then(|v| Likert::new(v).ok())
        .ok_or_else(|| {
            row_error(source, line, format!("likert must be 1, 2 or 3, got {:?}", field(4)))
        })?;
    Ok(VttResponse {
        participant: nonempty(0)?,
        image: nonempty(1)?,
        truth: label(2)?,
        guess: label(3)?,
        likert,
        timestamp: field(5).to_string(),
    })
}

/// Reads one study's response CSV. Errors carry the 1-based line number,
/// counting the header as line 1.
pub fn read_study_csv<R: Read>(study_id: &str, reader: R, source_name: &str) -> Result<VttStudy> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| row_error(source_name, 1, e.to_string()))?
        .clone();
    let names: Vec<&str> = headers.iter().map(str::trim).collect();
    if names != RESPONSE_CSV_HEADER {
        return Err(row_error(
            source_name,
            1,
            format!(
                "header must be {}, got {}",
                RESPONSE_CSV_HEADER.join(","),
                names.join(",")
            ),
        ));
    }

    let mut responses = Vec::new();
    let mut first_line: BTreeMap<(String, String), usize> = BTreeMap::new();
    let mut truth_of: BTreeMap<String, (Label, usize)> = BTreeMap::new();
    for (i, record) in rdr.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| row_error(source_name, line, e.to_string()))?;
        let r = parse_record(&record, source_name, line)?;
        if let Some(prev) = first_line.insert((r.participant.clone(), r.image.clone()), line) {
            return Err(row_error(
                source_name,
                line,
                format!(
                    "participant {} already answered image {} on line {prev}",
                    r.participant, r.image
                ),
            ));
        }
        match truth_of.get(&r.image) {
            Some((t, prev)) if *t != r.truth => {
                return Err(row_error(
                    source_name,
                    line,
                    format!("image {} was labelled {t} on line {prev}", r.image),
                ));
            }
            Some(_) => {}
            None => {
                truth_of.insert(r.image.clone(), (r.truth, line));
            }
        }
        responses.push(r);
    }
    VttStudy::new(study_id, responses)
}

pub fn read_study_file(study_id: &str, path: &Path) -> Result<VttStudy> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_study_csv(study_id, std::io::BufReader::new(file), &path.display().to_string())
}

/// Writes the rows in the given order, header first.
pub fn write_study_csv<W: Write>(responses: &[VttResponse], writer: W, header: bool) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    let csv_err = |e: csv::Error| Error::InvalidInput(format!("csv write failed: {e}"));
    if header {
        w.write_record(RESPONSE_CSV_HEADER).map_err(csv_err)?;
    }
    for r in responses {
        let likert = r.likert.get().to_string();
        w.write_record([
            r.participant.as_str(),
            r.image.as_str(),
            r.truth.as_str(),
            r.guess.as_str(),
            likert.as_str(),
            r.timestamp.as_str(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()
        .map_err(|e| Error::InvalidInput(format!("csv write failed: {e}")))?;
    Ok(())
}
