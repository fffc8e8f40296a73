use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::extraction::RainfallSeries;

pub const HEADER: [&str; 2] = ["date", "depth_mm"];

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedSeries {
    pub series: RainfallSeries,
    /// Calendar days absent from the file, inserted as missing.
    pub filled_days: usize,
}

fn data(line: usize, message: impl Into<String>) -> Error {
    Error::Data {
        line,
        message: message.into(),
    }
}

/// Reads `date,depth_mm` CSV text. Depth `NA` or an empty field is missing.
pub fn parse_series_reader<R: Read>(reader: R) -> Result<ParsedSeries> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| data(1, e.to_string()))?.clone();
    if headers.len() != 2 || headers.iter().zip(HEADER).any(|(h, want)| h != want) {
        return Err(data(1, format!("expected header `date,depth_mm`, found `{}`", headers.iter().collect::<Vec<_>>().join(","))));
    }
    let mut records = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| data(line, e.to_string()))?;
        if row.len() != 2 {
            return Err(data(line, format!("expected 2 fields, found {}", row.len())));
        }
        let date = NaiveDate::parse_from_str(&row[0], "%Y-%m-%d")
            .map_err(|e| data(line, format!("bad date `{}`: {e}", &row[0])))?;
        let depth = match &row[1] {
            "" | "NA" => None,
            text => {
                let v: f64 = text.parse().map_err(|_| data(line, format!("bad depth `{text}`")))?;
                if !(v.is_finite() && v >= 0.0) {
                    return Err(data(line, format!("depth must be non-negative, got {v}")));
                }
                Some(v)
            }
        };
        if let Some(&(prev, _)) = records.last() {
            if date <= prev {
                return Err(data(line, format!("date {date} does not follow {prev}")));
            }
        }
        records.push((date, depth));
    }
    if records.is_empty() {
        return Err(data(1, "no data rows"));
    }
    let (series, filled_days) = RainfallSeries::from_records(&records)?;
    Ok(ParsedSeries { series, filled_days })
}

pub fn parse_series_str(text: &str) -> Result<ParsedSeries> {
    parse_series_reader(text.as_bytes())
}

pub fn parse_series(path: &Path) -> Result<ParsedSeries> {
    let file = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_series_reader(std::io::BufReader::new(file))
}

/// Serialises every day of `series`, missing days as `NA`.
pub fn write_series_csv(series: &RainfallSeries) -> String {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(HEADER).expect("in-memory write");
    for (i, d) in series.depths().iter().enumerate() {
        let depth = d.map_or_else(|| "NA".to_string(), |v| v.to_string());
        wtr.write_record([series.date(i).format("%Y-%m-%d").to_string(), depth])
            .expect("in-memory write");
    }
    String::from_utf8(wtr.into_inner().expect("in-memory flush")).expect("utf-8 output")
}
