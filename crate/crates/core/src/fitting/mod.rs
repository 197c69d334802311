//! Least-squares estimation of template coefficients from measurements,
//! synthetic measurement generation from physics models, and validation.

mod fit;
mod records;
mod synth;
mod validate;

pub use fit::{build_design_matrix, fit, fit_per_tag, CenterPolicy, DesignMatrix, FitConfig, FitReport};
pub use records::MeasurementRecord;
pub use synth::{synthesize, NoiseSpec, PhysicsModel, SkippedPoint, SweepSpec, SynthReport};
pub use validate::{validate, ValidationReport, ValidationRow};
