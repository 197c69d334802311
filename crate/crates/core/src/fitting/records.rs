use crate::error::{Error, Result};
use crate::glass::GlassKind;
use crate::phasor::SplitPhasor;
use crate::scalar::Scalar;

/// One measured `(V, I)` sample, optionally tagged with an exogenous
/// quantity (e.g. load torque) and a timestamp in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementRecord<T> {
    pub v: SplitPhasor<T>,
    pub i: SplitPhasor<T>,
    pub tag: Option<T>,
    pub time: Option<T>,
}

impl<T: Scalar> MeasurementRecord<T> {
    pub fn new(v: SplitPhasor<T>, i: SplitPhasor<T>) -> Result<Self> {
        let r = Self { v, i, tag: None, time: None };
        r.check()?;
        Ok(r)
    }

    pub fn with_tag(mut self, tag: Option<T>) -> Self {
        self.tag = tag;
        self
    }

    pub fn with_time(mut self, time: Option<T>) -> Self {
        self.time = time;
        self
    }

    pub fn check(&self) -> Result<()> {
        if !(self.v.is_finite() && self.i.is_finite()) {
            return Err(Error::NonFinite { what: "measurement record".into() });
        }
        Ok(())
    }

    /// `(independent, dependent)` pair for a template of `kind`.
    pub fn split(&self, kind: GlassKind) -> (SplitPhasor<T>, SplitPhasor<T>) {
        match kind {
            GlassKind::VoltageDependent => (self.v, self.i),
            GlassKind::CurrentDependent => (self.i, self.v),
        }
    }
}
