//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use splitgrid::circuit::Jacobian2;
use splitgrid::devices::{IMParams, OnePort};
use splitgrid::fitting::{fit_per_tag, synthesize, FitConfig, FitReport, SweepSpec};
use splitgrid::glass::GlassTemplate;
use splitgrid::network::{Device, NetworkCase, PowerBase, UnitScale};
use splitgrid::{InductionMotor, PQLoad, SlackSource, SplitPhasor};

pub type P = SplitPhasor<f64>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(v: P) -> Complex64 {
    Complex64::new(v.re, v.im)
}

pub fn nominal_motor() -> IMParams<f64> {
    IMParams::new(0.1, 0.5, 20.0, 0.1, 4, 2.0 * std::f64::consts::PI * 60.0).unwrap()
}

/// Central-difference `dF/dV` of a split function.
pub fn fd_jacobian(f: impl Fn(P) -> P, v: P, h: f64) -> Jacobian2<f64> {
    let dr = {
        let (a, b) = (f(P::new(v.re + h, v.im)), f(P::new(v.re - h, v.im)));
        ((a.re - b.re) / (2.0 * h), (a.im - b.im) / (2.0 * h))
    };
    let di = {
        let (a, b) = (f(P::new(v.re, v.im + h)), f(P::new(v.re, v.im - h)));
        ((a.re - b.re) / (2.0 * h), (a.im - b.im) / (2.0 * h))
    };
    [[dr.0, di.0], [dr.1, di.1]]
}

/// Largest entry-wise deviation relative to the largest reference entry.
pub fn jacobian_rel_error(analytic: &Jacobian2<f64>, reference: &Jacobian2<f64>) -> f64 {
    let scale = reference.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
    let dev = analytic.iter().flatten().zip(reference.iter().flatten()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    dev / scale
}

/// Stator current of the ladder `R_s + jX_s` in series with `jX_m ∥ R_r/s`,
/// evaluated directly with complex arithmetic.
pub fn ladder_current(m: &IMParams<f64>, v: Complex64, slip: f64) -> Complex64 {
    let z_m = Complex64::new(0.0, m.x_m);
    let z_r = Complex64::new(m.r_r / slip, 0.0);
    let z_par = z_m * z_r / (z_m + z_r);
    v / (Complex64::new(m.r_s, m.x_s) + z_par)
}

/// Electromagnetic torque from air-gap power: `3 (p/2) P_ag / ω_s`.
pub fn ladder_torque(m: &IMParams<f64>, v_mag: f64, slip: f64) -> f64 {
    let v = Complex64::new(v_mag, 0.0);
    let i = ladder_current(m, v, slip);
    let z_m = Complex64::new(0.0, m.x_m);
    let z_r = Complex64::new(m.r_r / slip, 0.0);
    let v_gap = i * (z_m * z_r / (z_m + z_r));
    let p_gap = v_gap.norm_sqr() / (m.r_r / slip);
    3.0 * f64::from(m.poles) / (2.0 * m.omega_s) * p_gap
}

/// Smallest slip balancing `torque`, found by scanning `s = k·step` upward
/// and interpolating linearly inside the first bracketing interval.
pub fn scan_slip(m: &IMParams<f64>, torque: f64, v_mag: f64, step: f64) -> Option<f64> {
    let mut prev_s = 0.0;
    let mut prev_t = 0.0;
    let n = (1.0 / step).round() as usize;
    for k in 1..=n {
        let s = k as f64 * step;
        let t = ladder_torque(m, v_mag, s);
        if t >= torque {
            return Some(prev_s + (s - prev_s) * (torque - prev_t) / (t - prev_t));
        }
        prev_s = s;
        prev_t = t;
    }
    None
}

pub fn uniform(r: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    r.random_range(lo..hi)
}

/// Slack at `(v_slack, 0)` feeding `device` through a series branch.
pub fn two_bus(base: PowerBase<f64>, v_slack: P, r: f64, x: f64, device: Device<f64>) -> NetworkCase<f64> {
    let mut case = NetworkCase::new(base);
    let s = case.add_bus(1, Some(Device::Slack(SlackSource::new(v_slack).unwrap())));
    let l = case.add_bus(2, Some(device));
    case.add_branch(s, l, r, x, 0.0).unwrap();
    case
}

/// The purely resistive slack–conductance–PQ case with `g = 1/r`.
pub fn resistive_pq(p: f64, g: f64) -> NetworkCase<f64> {
    two_bus(PowerBase::default(), P::new(1.0, 0.0), 1.0 / g, 0.0, Device::Pq(PQLoad::new(p, 0.0).unwrap()))
}

pub fn motor_device(m: &IMParams<f64>, torque: f64, base: &PowerBase<f64>) -> Device<f64> {
    Device::InductionMotor { motor: InductionMotor::new(*m, torque).unwrap(), scale: UnitScale::from_base(base) }
}

/// Synthesize and fit one order-`order` template per torque.
pub fn fit_motor_templates(m: &IMParams<f64>, voltages: Vec<P>, torques: &[f64], order: u32) -> Vec<(f64, FitReport<f64>)> {
    let sweep = SweepSpec::new(voltages).with_tags(torques.to_vec());
    let data = synthesize(m, &sweep).unwrap();
    assert!(data.skipped.is_empty(), "infeasible training points: {:?}", data.skipped);
    fit_per_tag(&data.records, &FitConfig::new(order)).unwrap().into_iter().map(|(t, r)| (t.expect("tagged"), r)).collect()
}

/// Max deviation of `template` from the motor current over `points`.
pub fn motor_template_error(m: &IMParams<f64>, torque: f64, template: &GlassTemplate<f64>, points: &[P]) -> f64 {
    let motor = InductionMotor::new(*m, torque).unwrap();
    points
        .iter()
        .map(|&v| {
            let exact = motor.current(v).unwrap();
            let approx = template.evaluate(v);
            (c(exact) - c(approx)).norm() / c(exact).norm()
        })
        .fold(0.0, f64::max)
}

/// `|a - b|` is within half a unit in the third significant digit of `b`.
pub fn three_sig_digits(a: f64, b: f64) -> bool {
    if b == 0.0 {
        return a.abs() < 5e-3;
    }
    let unit = 10f64.powf(b.abs().log10().floor() - 2.0);
    (a - b).abs() <= 0.5 * unit
}
