//! CSV reading and writing. Values use `.` decimals and `,` separators; a first row that
//! does not parse as numbers is taken as a header.

use std::path::Path;

use nalgebra::DVector;

use crate::CliError;

/// Reads rows of exactly `cols` numbers.
pub fn read_rows(path: &Path, cols: usize) -> Result<Vec<DVector<f64>>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 1;
        let record = record.map_err(|e| CliError::Input(format!("{}: row {line}: {e}", path.display())))?;
        let parsed: Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        let values = match parsed {
            Ok(v) => v,
            Err(_) if i == 0 => continue,
            Err(_) => {
                return Err(CliError::Input(format!(
                    "{}: row {line}: non-numeric value in {:?}",
                    path.display(),
                    record.iter().collect::<Vec<_>>()
                )))
            }
        };
        if values.len() != cols {
            return Err(CliError::Input(format!(
                "{}: row {line}: {} values, expected {cols}",
                path.display(),
                values.len()
            )));
        }
        rows.push(DVector::from_vec(values));
    }
    Ok(rows)
}

/// 17 significant digits, enough to round-trip any double.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes a header `<prefix>1, <prefix>2, ...` followed by one row per vector.
pub fn write_rows(path: &Path, prefix: &str, rows: &[DVector<f64>]) -> Result<(), CliError> {
    let io_err = |e: csv::Error| CliError::Io(format!("cannot write {}: {e}", path.display()));
    let mut writer = csv::Writer::from_path(path).map_err(io_err)?;
    let cols = rows.first().map_or(0, |r| r.len());
    writer.write_record((1..=cols).map(|j| format!("{prefix}{j}"))).map_err(io_err)?;
    for r in rows {
        writer.write_record(r.iter().map(|&v| format_value(v))).map_err(io_err)?;
    }
    writer.flush().map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}
