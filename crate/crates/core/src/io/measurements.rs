use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::fitting::MeasurementRecord;
use crate::io::io_error;
use crate::phasor::SplitPhasor;

const REQUIRED: [&str; 4] = ["v_re", "v_im", "i_re", "i_im"];
const HEADER: [&str; 6] = ["time", "v_re", "v_im", "i_re", "i_im", "tag"];

/// Read records from CSV. Row numbers in errors count the header as line 1.
pub fn read_measurements<R: Read>(reader: R) -> Result<Vec<MeasurementRecord<f64>>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::format("line 1", e.to_string()))?.clone();
    let column = |name: &str| headers.iter().position(|h| h == name);
    for h in headers.iter() {
        if !HEADER.contains(&h) {
            return Err(Error::format("line 1", format!("unknown column '{h}'")));
        }
    }
    let mut idx = [0usize; 4];
    for (slot, name) in idx.iter_mut().zip(REQUIRED) {
        *slot = column(name).ok_or_else(|| Error::format("line 1", format!("missing required column '{name}'")))?;
    }
    let (time_col, tag_col) = (column("time"), column("tag"));

    let mut out = Vec::new();
    for (k, row) in rdr.records().enumerate() {
        let line = k + 2;
        let row = row.map_err(|e| Error::format(format!("line {line}"), e.to_string()))?;
        let field = |col: usize, name: &str| -> Result<Option<f64>> {
            let raw = row.get(col).unwrap_or("");
            if raw.is_empty() {
                return Ok(None);
            }
            raw.parse::<f64>()
                .map(Some)
                .map_err(|_| Error::format(format!("line {line}, column {name}"), format!("'{raw}' is not a number")))
        };
        let mut vals = [0.0; 4];
        for ((v, &col), name) in vals.iter_mut().zip(&idx).zip(REQUIRED) {
            *v = field(col, name)?.ok_or_else(|| Error::format(format!("line {line}, column {name}"), "value is required"))?;
        }
        let time = time_col.map(|c| field(c, "time")).transpose()?.flatten();
        let tag = tag_col.map(|c| field(c, "tag")).transpose()?.flatten();
        let record = MeasurementRecord::new(SplitPhasor::new(vals[0], vals[1]), SplitPhasor::new(vals[2], vals[3]))
            .map_err(|e| Error::format(format!("line {line}"), e.to_string()))?
            .with_time(time)
            .with_tag(tag);
        out.push(record);
    }
    Ok(out)
}

/// Write records with the full header. Floats use the shortest
/// representation that parses back to the same value.
pub fn write_measurements<W: Write>(records: &[MeasurementRecord<f64>], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let fail = |e: csv::Error| Error::format("csv output", e.to_string());
    w.write_record(HEADER).map_err(fail)?;
    let opt = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_default();
    for r in records {
        w.write_record([
            opt(r.time),
            format!("{:?}", r.v.re),
            format!("{:?}", r.v.im),
            format!("{:?}", r.i.re),
            format!("{:?}", r.i.im),
            opt(r.tag),
        ])
        .map_err(fail)?;
    }
    w.flush().map_err(|e| Error::format("csv output", e.to_string()))
}

pub fn load_measurements(path: &Path) -> Result<Vec<MeasurementRecord<f64>>> {
    let file = std::fs::File::open(path).map_err(|e| io_error(path, e))?;
    read_measurements(file)
}

pub fn save_measurements(records: &[MeasurementRecord<f64>], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| io_error(path, e))?;
    write_measurements(records, std::io::BufWriter::new(file))
}
