use std::io::Write;

use crate::circuit::{NodeId, SplitSystem};
use crate::error::{Error, Result};
use crate::fitting::ValidationReport;
use crate::network::NetworkCase;
use crate::solver::{device_current, AuxLayout, IterationRecord, SolveResult};

fn csv_error(e: impl std::fmt::Display) -> Error {
    Error::format("csv output", e.to_string())
}

fn num(x: f64) -> String {
    format!("{x:?}")
}

/// One row per bus: voltage, device current and the power the device absorbs (per unit).
pub fn write_solve_results<W: Write>(case: &NetworkCase<f64>, result: &SolveResult<f64>, writer: W) -> Result<()> {
    let layout = AuxLayout::new(case);
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["bus", "type", "v_re", "v_im", "v_mag", "v_angle_deg", "i_re", "i_im", "p", "q"]).map_err(csv_error)?;
    for (k, bus) in case.buses.iter().enumerate() {
        let v = result.state.voltages[k];
        let i = device_current(case, &layout, &result.state, NodeId(k))?;
        let (p, q) = v.power(i);
        let tag = bus.device.as_ref().map_or("none", |d| d.type_tag());
        w.write_record([
            bus.id.to_string(),
            tag.to_string(),
            num(v.re),
            num(v.im),
            num(v.magnitude()),
            num(v.angle().to_degrees()),
            num(i.re),
            num(i.im),
            num(p),
            num(q),
        ])
        .map_err(csv_error)?;
    }
    w.flush().map_err(csv_error)
}

pub fn write_history<W: Write>(history: &[IterationRecord<f64>], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["iteration", "step", "residual", "damping"]).map_err(csv_error)?;
    for (k, h) in history.iter().enumerate() {
        w.write_record([(k + 1).to_string(), num(h.step), num(h.residual), num(h.damping)]).map_err(csv_error)?;
    }
    w.flush().map_err(csv_error)
}

/// Plot-ready predicted-versus-measured table.
pub fn write_validation<W: Write>(report: &ValidationReport<f64>, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "index",
        "time",
        "tag",
        "in_re",
        "in_im",
        "measured_re",
        "measured_im",
        "predicted_re",
        "predicted_im",
        "residual_re",
        "residual_im",
        "extrapolated",
    ])
    .map_err(csv_error)?;
    let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
    for (k, row) in report.rows.iter().enumerate() {
        let res = row.residual();
        w.write_record([
            k.to_string(),
            opt(row.record.time),
            opt(row.record.tag),
            num(row.input.re),
            num(row.input.im),
            num(row.measured.re),
            num(row.measured.im),
            num(row.predicted.re),
            num(row.predicted.im),
            num(res.re),
            num(res.im),
            row.extrapolated.to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush().map_err(csv_error)
}

/// Sparse dump of assembled systems: matrix entries as `A` rows, right-hand
/// side entries as `b` rows (column left blank).
pub fn write_stamps<W: Write>(systems: &[(usize, SplitSystem<f64>)], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["iteration", "kind", "row", "col", "row_label", "col_label", "value"]).map_err(csv_error)?;
    for (iteration, sys) in systems {
        for (r, c, v) in sys.matrix().iter_nonzero() {
            w.write_record([
                iteration.to_string(),
                "A".into(),
                r.to_string(),
                c.to_string(),
                sys.row_label(r),
                sys.row_label(c),
                num(v),
            ])
            .map_err(csv_error)?;
        }
        for (r, &v) in sys.rhs().iter().enumerate() {
            w.write_record([
                iteration.to_string(),
                "b".into(),
                r.to_string(),
                String::new(),
                sys.row_label(r),
                String::new(),
                num(v),
            ])
            .map_err(csv_error)?;
        }
    }
    w.flush().map_err(csv_error)
}
