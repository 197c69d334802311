//! Steady-state induction motor reduced to a voltage-dependent admittance.
//!
//! Ladder: stator `R_s + jX_s` in series with magnetizing `jX_m` in parallel
//! with the rotor resistance `R_r / s`. Torque balance on this ladder gives
//! the slip quadratic `γ1 s² + γ2(|V|²) s + γ3 = 0`.

use num_complex::Complex;

use crate::circuit::Jacobian2;
use crate::devices::OnePort;
use crate::error::{Error, Result};
use crate::phasor::SplitPhasor;
use crate::scalar::Scalar;

/// Machine constants (ohms, poles, rad/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IMParams<T> {
    pub r_s: T,
    pub x_s: T,
    pub x_m: T,
    pub r_r: T,
    pub poles: u32,
    pub omega_s: T,
}

impl<T: Scalar> IMParams<T> {
    pub fn new(r_s: T, x_s: T, x_m: T, r_r: T, poles: u32, omega_s: T) -> Result<Self> {
        let p = Self { r_s, x_s, x_m, r_r, poles, omega_s };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("r_s", self.r_s), ("x_s", self.x_s), ("x_m", self.x_m), ("r_r", self.r_r), ("omega_s", self.omega_s)] {
            if !(v.is_finite() && v > T::zero()) {
                return Err(Error::InvalidParameter(format!("induction motor {name} must be positive, got {v}")));
            }
        }
        if self.poles < 2 || !self.poles.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!("induction motor pole count must be even and >= 2, got {}", self.poles)));
        }
        Ok(())
    }

    /// `3p / (2 ω_s)`: air-gap power to torque factor.
    fn torque_factor(&self) -> T {
        T::lit(3.0) * T::from_count(self.poles as usize) / (T::lit(2.0) * self.omega_s)
    }

    fn stator(&self) -> Complex<T> {
        Complex::new(self.r_s, self.x_s)
    }

    fn parallel_rotor(&self, slip: T) -> Complex<T> {
        let a = Complex::new(self.r_r / slip, T::zero());
        let jm = Complex::new(T::zero(), self.x_m);
        jm * a / (a + jm)
    }
}

/// Solved steady state at one terminal voltage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IMOperatingPoint<T> {
    pub torque: T,
    pub slip: T,
    /// Input admittance `u + jv`.
    pub admittance: (T, T),
}

/// Coefficients `(γ1, γ2, γ3)` of the slip quadratic.
pub fn slip_gammas<T: Scalar>(params: &IMParams<T>, torque: T, v_sq: T) -> (T, T, T) {
    let IMParams { r_s, x_s, x_m, r_r, .. } = *params;
    let two = T::lit(2.0);
    let xm2 = x_m * x_m;
    let g1 = xm2 * (r_s * r_s + x_s * x_s);
    let g2 = xm2 * (two * r_s * r_r - params.torque_factor() * r_r / torque * v_sq);
    let g3 = r_r * r_r * (r_s * r_s + x_s * x_s + two * x_s * x_m + xm2);
    (g1, g2, g3)
}

/// Maximum torque at `v_mag`, where the slip quadratic has a double root.
pub fn breakdown_torque<T: Scalar>(params: &IMParams<T>, v_mag: T) -> T {
    let IMParams { r_s, x_s, x_m, r_r, .. } = *params;
    let two = T::lit(2.0);
    let xm2 = x_m * x_m;
    let g1 = xm2 * (r_s * r_s + x_s * x_s);
    let g3 = r_r * r_r * (r_s * r_s + x_s * x_s + two * x_s * x_m + xm2);
    params.torque_factor() * r_r * v_mag * v_mag * xm2 / (two * r_s * r_r * xm2 + two * (g1 * g3).sqrt())
}

/// Stable (smaller) motoring slip in `(0, 1]` for electric torque `torque`.
pub fn im_slip<T: Scalar>(params: &IMParams<T>, torque: T, v: SplitPhasor<T>) -> Result<T> {
    if !(torque > T::zero() && torque.is_finite()) {
        return Err(Error::Domain(format!("induction motor torque must be positive, got {torque}")));
    }
    v.check_finite("motor voltage")?;
    let v_sq = v.norm_sqr();
    if v_sq <= T::zero() {
        return Err(Error::Domain("induction motor needs a nonzero terminal voltage".into()));
    }
    let (g1, g2, g3) = slip_gammas(params, torque, v_sq);
    let disc = g2 * g2 - T::lit(4.0) * g1 * g3;
    let exceeds = || Error::TorqueExceedsCapability {
        torque: torque.to_f64_lossy(),
        voltage: v_sq.sqrt().to_f64_lossy(),
        breakdown: breakdown_torque(params, v_sq.sqrt()).to_f64_lossy(),
    };
    if disc < T::zero() || g2 >= T::zero() {
        return Err(exceeds());
    }
    // Smaller root in the cancellation-free form 2γ3 / (-γ2 + √disc).
    let s = T::lit(2.0) * g3 / (-g2 + disc.sqrt());
    if !(s > T::zero() && s <= T::one()) {
        return Err(exceeds());
    }
    Ok(s)
}

/// Input admittance `(u, v)` of the ladder at slip `s`.
pub fn im_admittance<T: Scalar>(params: &IMParams<T>, slip: T) -> Result<(T, T)> {
    if !(slip > T::zero() && slip <= T::one()) {
        return Err(Error::Domain(format!("slip must lie in (0, 1], got {slip}")));
    }
    let y = Complex::new(T::one(), T::zero()) / (params.stator() + params.parallel_rotor(slip));
    Ok((y.re, y.im))
}

/// Electric torque developed at slip `s` with terminal voltage magnitude `v_mag`.
pub fn torque_at_slip<T: Scalar>(params: &IMParams<T>, v_mag: T, slip: T) -> T {
    let jm = Complex::new(T::zero(), params.x_m);
    let a = Complex::new(params.r_r / slip, T::zero());
    let i_s = Complex::new(v_mag, T::zero()) / (params.stator() + jm * a / (a + jm));
    let i_r = i_s * jm / (a + jm);
    params.torque_factor() * i_r.norm_sqr() * params.r_r / slip
}

/// Split current drawn by the motor: slip, then admittance, then `I = V Y`.
pub fn im_currents<T: Scalar>(params: &IMParams<T>, torque: T, v: SplitPhasor<T>) -> Result<SplitPhasor<T>> {
    let s = im_slip(params, torque, v)?;
    let (u, b) = im_admittance(params, s)?;
    Ok(SplitPhasor::new(v.re * u - v.im * b, v.im * u + v.re * b))
}

/// Motor at a fixed load torque, usable as a network device. Quantities are
/// SI (volts, amperes).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InductionMotor<T> {
    pub params: IMParams<T>,
    pub torque: T,
}

impl<T: Scalar> InductionMotor<T> {
    pub fn new(params: IMParams<T>, torque: T) -> Result<Self> {
        params.validate()?;
        if !(torque > T::zero() && torque.is_finite()) {
            return Err(Error::InvalidParameter(format!("motor torque must be positive, got {torque}")));
        }
        Ok(Self { params, torque })
    }

    pub fn operating_point(&self, v: SplitPhasor<T>) -> Result<IMOperatingPoint<T>> {
        let slip = im_slip(&self.params, self.torque, v)?;
        Ok(IMOperatingPoint { torque: self.torque, slip, admittance: im_admittance(&self.params, slip)? })
    }
}

impl<T: Scalar> OnePort<T> for InductionMotor<T> {
    fn current(&self, v: SplitPhasor<T>) -> Result<SplitPhasor<T>> {
        im_currents(&self.params, self.torque, v)
    }

    /// `I = V Y(s(w))`, `w = V_R² + V_I²`; the slip sensitivity follows
    /// from implicit differentiation of the slip quadratic.
    fn jacobian(&self, v: SplitPhasor<T>) -> Result<Jacobian2<T>> {
        let p = &self.params;
        let s = im_slip(p, self.torque, v)?;
        let two = T::lit(2.0);
        let (g1, g2, _) = slip_gammas(p, self.torque, v.norm_sqr());
        let dg2_dw = -(p.x_m * p.x_m) * p.torque_factor() * p.r_r / self.torque;
        let ds_dw = -(dg2_dw * s) / (two * g1 * s + g2);

        let z = p.stator() + p.parallel_rotor(s);
        let y = Complex::new(T::one(), T::zero()) / z;
        let a = Complex::new(p.r_r / s, T::zero());
        let jm = Complex::new(T::zero(), p.x_m);
        let dzp_da = -Complex::new(p.x_m * p.x_m, T::zero()) / ((a + jm) * (a + jm));
        let da_ds = -p.r_r / (s * s);
        let dy_ds = -(y * y) * dzp_da * da_ds;
        let di_dw = v.to_complex() * dy_ds * ds_dw;

        let d_re = y + di_dw * (two * v.re);
        let d_im = Complex::new(T::zero(), T::one()) * y + di_dw * (two * v.im);
        Ok([[d_re.re, d_im.re], [d_re.im, d_im.im]])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn machine() -> IMParams<f64> {
        IMParams::new(0.1, 0.5, 20.0, 0.1, 4, 377.0).unwrap()
    }

    #[test]
    fn slip_is_a_root_of_the_quadratic() {
        let p = machine();
        let v = SplitPhasor::new(375.59, 0.0);
        let s = im_slip(&p, 10.0, v).unwrap();
        let (g1, g2, g3) = slip_gammas(&p, 10.0, v.norm_sqr());
        assert!((g1 * s * s + g2 * s + g3).abs() <= 1e-9 * g3);
        assert!(s > 0.0 && s <= 1.0);
    }

    #[test]
    fn torque_identity_holds() {
        let p = machine();
        for (t, vm) in [(10.0, 375.59), (20.0, 338.03), (55.0, 300.0)] {
            let s = im_slip(&p, t, SplitPhasor::new(vm, 0.0)).unwrap();
            let back = torque_at_slip(&p, vm, s);
            assert!(((back - t) / t).abs() < 1e-9, "{back} vs {t}");
        }
    }

    #[test]
    fn exceeding_breakdown_reports_capability() {
        let p = machine();
        let vm = 100.0;
        let tb = breakdown_torque(&p, vm);
        assert!(im_slip(&p, 0.99 * tb, SplitPhasor::new(vm, 0.0)).is_ok());
        match im_slip(&p, 1.01 * tb, SplitPhasor::new(vm, 0.0)) {
            Err(Error::TorqueExceedsCapability { breakdown, .. }) => assert!((breakdown - tb).abs() < 1e-9 * tb),
            other => panic!("expected capability error, got {other:?}"),
        }
    }

    #[test]
    fn open_rotor_limit() {
        let p = machine();
        let (u, b) = im_admittance(&p, 1e-6).unwrap();
        let lim = Complex::new(1.0, 0.0) / Complex::new(p.r_s, p.x_s + p.x_m);
        let rel = (Complex::new(u, b) - lim).norm() / lim.norm();
        assert!(rel < 0.01, "rel {rel}");
        assert!(u > 0.0);
    }

    #[test]
    fn real_axis_current_is_v_times_admittance() {
        let p = machine();
        let v = SplitPhasor::new(356.81, 0.0);
        let i = im_currents(&p, 10.0, v).unwrap();
        let (u, b) = im_admittance(&p, im_slip(&p, 10.0, v).unwrap()).unwrap();
        assert_eq!(i.re, 356.81 * u);
        assert_eq!(i.im, 356.81 * b);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(IMParams::new(0.1, 0.5, 20.0, 0.1, 3, 377.0).is_err());
        assert!(IMParams::new(0.0, 0.5, 20.0, 0.1, 4, 377.0).is_err());
        assert!(im_admittance(&machine(), 0.0).is_err());
    }
}
