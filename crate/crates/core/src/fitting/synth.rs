use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::devices::{im_currents, ExpLoad, IMParams, InductionMotor, OnePort, PQLoad, ZIPLoad};
use crate::error::{Error, Result};
use crate::fitting::records::MeasurementRecord;
use crate::glass::{GlassKind, GlassTemplate};
use crate::phasor::SplitPhasor;
use crate::scalar::Scalar;

/// Steady-state response of a device to an applied voltage, optionally
/// parameterized by an exogenous tag.
pub trait PhysicsModel<T: Scalar> {
    fn response(&self, v: SplitPhasor<T>, tag: Option<T>) -> Result<SplitPhasor<T>>;
}

impl<T: Scalar> PhysicsModel<T> for PQLoad<T> {
    fn response(&self, v: SplitPhasor<T>, _tag: Option<T>) -> Result<SplitPhasor<T>> {
        self.current(v)
    }
}

impl<T: Scalar> PhysicsModel<T> for ZIPLoad<T> {
    fn response(&self, v: SplitPhasor<T>, _tag: Option<T>) -> Result<SplitPhasor<T>> {
        self.current(v)
    }
}

impl<T: Scalar> PhysicsModel<T> for ExpLoad<T> {
    fn response(&self, v: SplitPhasor<T>, _tag: Option<T>) -> Result<SplitPhasor<T>> {
        self.current(v)
    }
}

/// The tag is the load torque.
impl<T: Scalar> PhysicsModel<T> for IMParams<T> {
    fn response(&self, v: SplitPhasor<T>, tag: Option<T>) -> Result<SplitPhasor<T>> {
        let torque = tag.ok_or_else(|| Error::InvalidParameter("induction motor sweep needs a torque tag".into()))?;
        im_currents(self, torque, v)
    }
}

/// A present tag overrides the motor's own torque.
impl<T: Scalar> PhysicsModel<T> for InductionMotor<T> {
    fn response(&self, v: SplitPhasor<T>, tag: Option<T>) -> Result<SplitPhasor<T>> {
        im_currents(&self.params, tag.unwrap_or(self.torque), v)
    }
}

impl<T: Scalar> PhysicsModel<T> for GlassTemplate<T> {
    fn response(&self, v: SplitPhasor<T>, _tag: Option<T>) -> Result<SplitPhasor<T>> {
        match self.kind() {
            GlassKind::VoltageDependent => Ok(self.evaluate(v)),
            GlassKind::CurrentDependent => {
                Err(Error::InvalidParameter("current-dependent templates cannot be driven by a voltage sweep".into()))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec<T> {
    /// Standard deviation of additive Gaussian noise on each current component.
    pub sigma: T,
    pub seed: u64,
}

/// Voltage grid crossed with exogenous tag values.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec<T> {
    pub voltages: Vec<SplitPhasor<T>>,
    /// Empty means a single untagged pass.
    pub tags: Vec<T>,
    pub noise: Option<NoiseSpec<T>>,
    /// When set, record `k` is stamped with time `k · time_step`.
    pub time_step: Option<T>,
}

impl<T: Scalar> SweepSpec<T> {
    pub fn new(voltages: Vec<SplitPhasor<T>>) -> Self {
        Self { voltages, tags: Vec::new(), noise: None, time_step: None }
    }

    pub fn with_tags(mut self, tags: Vec<T>) -> Self {
        self.tags = tags;
        self
    }

    pub fn with_noise(mut self, sigma: T, seed: u64) -> Self {
        self.noise = Some(NoiseSpec { sigma, seed });
        self
    }

    /// `points` evenly spaced real-axis voltages from `from` to `to` inclusive.
    pub fn real_axis_range(from: T, to: T, points: usize) -> Self {
        let pts = (0..points)
            .map(|k| {
                let f = if points < 2 { T::zero() } else { T::from_count(k) / T::from_count(points - 1) };
                SplitPhasor::new(from + (to - from) * f, T::zero())
            })
            .collect();
        Self::new(pts)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkippedPoint<T> {
    pub v: SplitPhasor<T>,
    pub tag: Option<T>,
    pub error: Error,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthReport<T> {
    pub records: Vec<MeasurementRecord<T>>,
    pub skipped: Vec<SkippedPoint<T>>,
}

impl<T: Scalar> SynthReport<T> {
    pub fn success_fraction(&self) -> f64 {
        let total = self.records.len() + self.skipped.len();
        if total == 0 {
            0.0
        } else {
            self.records.len() as f64 / total as f64
        }
    }
}

/// Evaluate `model` over the sweep; failing points are skipped and reported.
pub fn synthesize<T: Scalar>(model: &dyn PhysicsModel<T>, sweep: &SweepSpec<T>) -> Result<SynthReport<T>> {
    let tags: Vec<Option<T>> = if sweep.tags.is_empty() { vec![None] } else { sweep.tags.iter().copied().map(Some).collect() };
    let mut noise = match sweep.noise {
        Some(n) if n.sigma > T::zero() => {
            let dist = Normal::new(0.0, n.sigma.to_f64_lossy()).map_err(|e| Error::InvalidParameter(format!("noise: {e}")))?;
            Some((dist, ChaCha8Rng::seed_from_u64(n.seed)))
        }
        Some(n) if n.sigma < T::zero() || !n.sigma.is_finite() => {
            return Err(Error::InvalidParameter(format!("noise sigma must be >= 0, got {}", n.sigma)));
        }
        _ => None,
    };
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for &tag in &tags {
        for &v in &sweep.voltages {
            match model.response(v, tag) {
                Ok(mut i) => {
                    if let Some((dist, rng)) = noise.as_mut() {
                        i.re += T::lit(dist.sample(rng));
                        i.im += T::lit(dist.sample(rng));
                    }
                    let k = records.len();
                    let time = sweep.time_step.map(|dt| dt * T::from_count(k));
                    records.push(MeasurementRecord { v, i, tag, time });
                }
                Err(error) => skipped.push(SkippedPoint { v, tag, error }),
            }
        }
    }
    Ok(SynthReport { records, skipped })
}
