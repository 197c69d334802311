use crate::fitting::records::MeasurementRecord;
use crate::glass::GlassTemplate;
use crate::phasor::SplitPhasor;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationRow<T> {
    pub record: MeasurementRecord<T>,
    /// Independent variable fed to the template.
    pub input: SplitPhasor<T>,
    pub measured: SplitPhasor<T>,
    pub predicted: SplitPhasor<T>,
    /// Outside the template's fitted domain.
    pub extrapolated: bool,
}

impl<T: Scalar> ValidationRow<T> {
    pub fn residual(&self) -> SplitPhasor<T> {
        self.predicted - self.measured
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport<T> {
    pub rows: Vec<ValidationRow<T>>,
    pub rmse_r: T,
    pub rmse_i: T,
    pub max_abs_residual: T,
    pub extrapolated_fraction: T,
}

/// Compare template predictions with measurements, record by record.
pub fn validate<T: Scalar>(template: &GlassTemplate<T>, records: &[MeasurementRecord<T>]) -> ValidationReport<T> {
    let rows: Vec<ValidationRow<T>> = records
        .iter()
        .map(|r| {
            let (input, measured) = r.split(template.kind());
            ValidationRow {
                record: *r,
                input,
                measured,
                predicted: template.evaluate(input),
                extrapolated: template.domain().is_some_and(|d| !d.contains(input)),
            }
        })
        .collect();
    if rows.is_empty() {
        return ValidationReport {
            rows,
            rmse_r: T::zero(),
            rmse_i: T::zero(),
            max_abs_residual: T::zero(),
            extrapolated_fraction: T::zero(),
        };
    }
    let n = T::from_count(rows.len());
    let (mut ss_r, mut ss_i, mut worst) = (T::zero(), T::zero(), T::zero());
    let mut extrapolated = 0;
    for row in &rows {
        let e = row.residual();
        ss_r += e.re * e.re;
        ss_i += e.im * e.im;
        worst = worst.max(e.re.abs()).max(e.im.abs());
        extrapolated += usize::from(row.extrapolated);
    }
    ValidationReport {
        rmse_r: (ss_r / n).sqrt(),
        rmse_i: (ss_i / n).sqrt(),
        max_abs_residual: worst,
        extrapolated_fraction: T::from_count(extrapolated) / n,
        rows,
    }
}
