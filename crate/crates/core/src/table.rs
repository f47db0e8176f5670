//! CSV tables keyed by report id with one column per observation: labels,
//! gold annotations, policy targets and masks all share this layout.

use std::io::{Read, Write};

use crate::aggregate::{LabelVector, ObservationLabel};
use crate::observation::Observation;

#[derive(Debug, thiserror::Error)]
pub enum TableError {
    #[error("line {line}: {reason}")]
    Invalid { line: u64, reason: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// `report_id` followed by the 14 observation names.
pub fn header() -> Vec<&'static str> {
    std::iter::once("report_id")
        .chain(Observation::ALL.iter().map(|o| o.name()))
        .collect()
}

/// A report id with one label per observation, as read from a labels CSV.
/// Unlike [`LabelVector`] it places no constraint on `No Finding`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelRow {
    pub report_id: String,
    pub labels: [ObservationLabel; Observation::COUNT],
}

impl LabelRow {
    pub fn get(&self, obs: Observation) -> ObservationLabel {
        self.labels[obs.index()]
    }
}

impl From<&LabelVector> for LabelRow {
    fn from(v: &LabelVector) -> Self {
        LabelRow {
            report_id: v.report_id().to_string(),
            labels: *v.labels(),
        }
    }
}

/// `(line, report_id, cells)`.
pub type RawRow = (u64, String, Vec<String>);

/// Reads rows of string cells after checking the header. Yields
/// `(line, report_id, cells)` with the 14 observation cells in order.
pub fn read_rows<R: Read>(reader: R) -> Result<impl Iterator<Item = Result<RawRow, TableError>>, TableError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let found: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let expected = header();
    if found != expected {
        return Err(TableError::Invalid {
            line: 1,
            reason: format!("header must be `{}`, found `{}`", expected.join(","), found.join(",")),
        });
    }
    Ok(rdr.into_records().map(|rec| {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let mut fields = rec.iter().map(str::to_string);
        let report_id = fields.next().unwrap_or_default();
        Ok((line, report_id, fields.collect()))
    }))
}

/// Reads a labels CSV (`1.0`, `0.0`, `-1.0` or empty cells).
pub fn read_label_rows<R: Read>(reader: R) -> Result<Vec<LabelRow>, TableError> {
    read_rows(reader)?
        .map(|row| {
            let (line, report_id, cells) = row?;
            let mut labels = [ObservationLabel::Blank; Observation::COUNT];
            for (i, cell) in cells.iter().enumerate() {
                labels[i] = ObservationLabel::from_cell(cell).ok_or_else(|| TableError::Invalid {
                    line,
                    reason: format!("report {report_id:?}, {}: invalid label {cell:?}", Observation::ALL[i]),
                })?;
            }
            Ok(LabelRow { report_id, labels })
        })
        .collect()
}

/// Writes the shared header, then one row per call.
pub struct TableWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> TableWriter<W> {
    pub fn new(writer: W) -> Result<Self, TableError> {
        let mut inner = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
        inner.write_record(header())?;
        Ok(TableWriter { inner })
    }

    pub fn write_cells<S: AsRef<str>>(&mut self, report_id: &str, cells: &[S]) -> Result<(), TableError> {
        debug_assert_eq!(cells.len(), Observation::COUNT);
        self.inner
            .write_record(std::iter::once(report_id).chain(cells.iter().map(AsRef::as_ref)))?;
        Ok(())
    }

    pub fn write_labels(&mut self, report_id: &str, labels: &[ObservationLabel; Observation::COUNT]) -> Result<(), TableError> {
        let cells: Vec<&str> = labels.iter().map(|l| l.as_cell()).collect();
        self.write_cells(report_id, &cells)
    }

    pub fn flush(&mut self) -> Result<(), TableError> {
        self.inner.flush().map_err(|e| TableError::Csv(e.into()))
    }

    pub fn into_inner(self) -> Result<W, TableError> {
        self.inner
            .into_inner()
            .map_err(|e| TableError::Csv(e.into_error().into()))
    }
}
