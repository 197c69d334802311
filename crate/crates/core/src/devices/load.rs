use crate::circuit::{Jacobian2, LinearizedStamp, NodeId};
use crate::devices::OnePort;
use crate::error::{Error, Result};
use crate::phasor::SplitPhasor;
use crate::scalar::Scalar;

/// Per-unit voltage magnitude at or below which power-type loads refuse to
/// evaluate.
pub const VOLTAGE_FLOOR: f64 = 1e-4;

const MIXTURE_TOLERANCE: f64 = 1e-9;

/// Constant-power load.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PQLoad<T> {
    pub p: T,
    pub q: T,
}

/// Polynomial (constant impedance / current / power) load.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZIPLoad<T> {
    pub p0: T,
    pub q0: T,
    pub a_p: T,
    pub b_p: T,
    pub c_p: T,
    pub a_q: T,
    pub b_q: T,
    pub c_q: T,
}

/// Exponential load `P0 V^p_v`, `Q0 V^q_v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpLoad<T> {
    pub p0: T,
    pub q0: T,
    pub p_v: T,
    pub q_v: T,
}

impl<T: Scalar> PQLoad<T> {
    pub fn new(p: T, q: T) -> Result<Self> {
        if !(p.is_finite() && q.is_finite()) {
            return Err(Error::NonFinite { what: "PQ load power".into() });
        }
        Ok(Self { p, q })
    }
}

impl<T: Scalar> ZIPLoad<T> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(p0: T, q0: T, a_p: T, b_p: T, c_p: T, a_q: T, b_q: T, c_q: T) -> Result<Self> {
        let all = [p0, q0, a_p, b_p, c_p, a_q, b_q, c_q];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "ZIP load parameter".into() });
        }
        let tol = T::lit(MIXTURE_TOLERANCE);
        for (name, sum) in [("a_p + b_p + c_p", a_p + b_p + c_p), ("a_q + b_q + c_q", a_q + b_q + c_q)] {
            if (sum - T::one()).abs() > tol {
                return Err(Error::InvalidParameter(format!("ZIP mixture {name} = {sum}, expected 1")));
            }
        }
        Ok(Self { p0, q0, a_p, b_p, c_p, a_q, b_q, c_q })
    }

    /// Constant-power special case.
    pub fn constant_power(p0: T, q0: T) -> Self {
        let (z, o) = (T::zero(), T::one());
        Self { p0, q0, a_p: z, b_p: z, c_p: o, a_q: z, b_q: z, c_q: o }
    }
}

impl<T: Scalar> ExpLoad<T> {
    pub fn new(p0: T, q0: T, p_v: T, q_v: T) -> Result<Self> {
        if [p0, q0, p_v, q_v].iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "exponential load parameter".into() });
        }
        Ok(Self { p0, q0, p_v, q_v })
    }
}

/// `(P, Q)` of a ZIP load at voltage magnitude `v_mag`.
pub fn zip_power<T: Scalar>(load: &ZIPLoad<T>, v_mag: T) -> Result<(T, T)> {
    if v_mag < T::zero() || !v_mag.is_finite() {
        return Err(Error::Domain(format!("ZIP load needs |V| >= 0, got {v_mag}")));
    }
    let p = load.p0 * (load.a_p * v_mag * v_mag + load.b_p * v_mag + load.c_p);
    let q = load.q0 * (load.a_q * v_mag * v_mag + load.b_q * v_mag + load.c_q);
    Ok((p, q))
}

fn zip_power_slope<T: Scalar>(load: &ZIPLoad<T>, v_mag: T) -> (T, T) {
    let two = T::lit(2.0);
    (load.p0 * (two * load.a_p * v_mag + load.b_p), load.q0 * (two * load.a_q * v_mag + load.b_q))
}

/// `(P, Q)` of an exponential load at voltage magnitude `v_mag`.
pub fn exp_power<T: Scalar>(load: &ExpLoad<T>, v_mag: T) -> Result<(T, T)> {
    if v_mag < T::zero() || !v_mag.is_finite() {
        return Err(Error::Domain(format!("exponential load needs |V| >= 0, got {v_mag}")));
    }
    if v_mag == T::zero() && (load.p_v < T::zero() || load.q_v < T::zero()) {
        return Err(Error::Domain("exponential load with negative exponent at |V| = 0".into()));
    }
    Ok((load.p0 * v_mag.powf(load.p_v), load.q0 * v_mag.powf(load.q_v)))
}

fn exp_power_slope<T: Scalar>(load: &ExpLoad<T>, v_mag: T) -> (T, T) {
    let one = T::one();
    (load.p0 * load.p_v * v_mag.powf(load.p_v - one), load.q0 * load.q_v * v_mag.powf(load.q_v - one))
}

fn check_floor<T: Scalar>(v: SplitPhasor<T>) -> Result<T> {
    v.check_finite("device voltage")?;
    let m = v.magnitude();
    if m <= T::lit(VOLTAGE_FLOOR) {
        return Err(Error::VoltageCollapse { magnitude: m.to_f64_lossy(), floor: VOLTAGE_FLOOR });
    }
    Ok(m)
}

fn power_to_current<T: Scalar>(p: T, q: T, v: SplitPhasor<T>) -> SplitPhasor<T> {
    let w = v.norm_sqr();
    SplitPhasor::new((p * v.re + q * v.im) / w, (p * v.im - q * v.re) / w)
}

/// Jacobian of `I = (P(|V|) - jQ(|V|)) / conj(V)` given the power slopes
/// `dP/d|V|`, `dQ/d|V|` (both zero for a constant-power load).
fn power_load_jacobian<T: Scalar>(p: T, q: T, dp: T, dq: T, v: SplitPhasor<T>, m: T) -> Jacobian2<T> {
    let two = T::lit(2.0);
    let (vr, vi) = (v.re, v.im);
    let w = v.norm_sqr();
    let w2 = w * w;
    let (dmr, dmi) = (vr / m, vi / m);
    let nr = p * vr + q * vi;
    let ni = p * vi - q * vr;
    [
        [
            (p + dp * dmr * vr + dq * dmr * vi) / w - nr * two * vr / w2,
            (q + dp * dmi * vr + dq * dmi * vi) / w - nr * two * vi / w2,
        ],
        [
            (-q + dp * dmr * vi - dq * dmr * vr) / w - ni * two * vr / w2,
            (p + dp * dmi * vi - dq * dmi * vr) / w - ni * two * vi / w2,
        ],
    ]
}

/// Split current of a constant-power load.
pub fn pq_currents<T: Scalar>(load: &PQLoad<T>, v: SplitPhasor<T>) -> Result<SplitPhasor<T>> {
    check_floor(v)?;
    Ok(power_to_current(load.p, load.q, v))
}

/// Linearized constant-power load about `v_prev`.
pub fn pq_stamp<T: Scalar>(load: &PQLoad<T>, node: NodeId, v_prev: SplitPhasor<T>) -> Result<LinearizedStamp<T>> {
    load.stamp(node, v_prev)
}

impl<T: Scalar> OnePort<T> for PQLoad<T> {
    fn current(&self, v: SplitPhasor<T>) -> Result<SplitPhasor<T>> {
        pq_currents(self, v)
    }

    fn jacobian(&self, v: SplitPhasor<T>) -> Result<Jacobian2<T>> {
        let m = check_floor(v)?;
        Ok(power_load_jacobian(self.p, self.q, T::zero(), T::zero(), v, m))
    }
}

impl<T: Scalar> OnePort<T> for ZIPLoad<T> {
    fn current(&self, v: SplitPhasor<T>) -> Result<SplitPhasor<T>> {
        let m = check_floor(v)?;
        let (p, q) = zip_power(self, m)?;
        Ok(power_to_current(p, q, v))
    }

    fn jacobian(&self, v: SplitPhasor<T>) -> Result<Jacobian2<T>> {
        let m = check_floor(v)?;
        let (p, q) = zip_power(self, m)?;
        let (dp, dq) = zip_power_slope(self, m);
        Ok(power_load_jacobian(p, q, dp, dq, v, m))
    }
}

impl<T: Scalar> OnePort<T> for ExpLoad<T> {
    fn current(&self, v: SplitPhasor<T>) -> Result<SplitPhasor<T>> {
        let m = check_floor(v)?;
        let (p, q) = exp_power(self, m)?;
        Ok(power_to_current(p, q, v))
    }

    fn jacobian(&self, v: SplitPhasor<T>) -> Result<Jacobian2<T>> {
        let m = check_floor(v)?;
        let (p, q) = exp_power(self, m)?;
        let (dp, dq) = exp_power_slope(self, m);
        Ok(power_load_jacobian(p, q, dp, dq, v, m))
    }
}
