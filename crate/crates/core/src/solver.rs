//! Newton-Raphson power flow on the split circuit.
//!
//! Each iteration linearizes every device at the current iterate, assembles
//! the split system, solves it for the next iterate and applies a damped
//! update. Termination needs both a small exact (nonlinear) residual and a
//! small voltage correction; the correction is certified with one extra
//! linear solve at the accepted state, which is not counted as an iteration.

use crate::circuit::{NodeId, SplitSystem};
use crate::devices::{OnePort, VOLTAGE_FLOOR};
use crate::error::{Error, Result};
use crate::glass::{GlassKind, GlassStamp};
use crate::network::{Device, NetworkCase};
use crate::phasor::SplitPhasor;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub enum InitialState<T> {
    /// `V = (1, 0)` per unit at every bus (slack and PV buses start at their set-points).
    Flat,
    Warm(SolveState<T>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions<T> {
    pub tol_v: T,
    pub tol_kcl: T,
    pub max_iter: usize,
    /// Base damping factor in `(0, 1]`.
    pub damping: T,
    /// Halvings allowed when a step increases the residual.
    pub max_halvings: u32,
    pub init: InitialState<T>,
}

impl<T: Scalar> Default for SolverOptions<T> {
    fn default() -> Self {
        Self {
            tol_v: T::lit(1e-8),
            tol_kcl: T::lit(1e-8),
            max_iter: 50,
            damping: T::one(),
            max_halvings: 4,
            init: InitialState::Flat,
        }
    }
}

impl<T: Scalar> SolverOptions<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_v > T::zero() && self.tol_kcl > T::zero()) {
            return Err(Error::InvalidParameter("solver tolerances must be positive".into()));
        }
        if self.max_iter < 1 {
            return Err(Error::InvalidParameter("max_iter must be at least 1".into()));
        }
        if !(self.damping > T::zero() && self.damping <= T::one()) {
            return Err(Error::InvalidParameter(format!("damping must lie in (0, 1], got {}", self.damping)));
        }
        Ok(())
    }
}

/// Per-bus voltages plus the auxiliary unknowns (source currents, PV
/// reactive powers, current-dependent device currents).
#[derive(Debug, Clone, PartialEq)]
pub struct SolveState<T> {
    pub voltages: Vec<SplitPhasor<T>>,
    pub aux: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord<T> {
    /// `‖ΔV‖∞` of the applied update.
    pub step: T,
    /// Exact residual `‖F‖∞` (KCL and constraint rows) after the update.
    pub residual: T,
    /// Damping factor actually applied.
    pub damping: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult<T> {
    pub state: SolveState<T>,
    pub iterations: usize,
    pub residual_history: Vec<IterationRecord<T>>,
    pub converged: bool,
    /// `‖ΔV‖∞` of the certifying Newton correction at the returned state
    /// (present whenever the residual test passed).
    pub final_correction: Option<T>,
    /// Device error that stopped the iteration early (for example a motor
    /// driven past breakdown). Singular systems are returned as errors instead.
    pub failure: Option<Error>,
}

impl<T: Scalar> SolveResult<T> {
    pub fn voltage(&self, node: NodeId) -> SplitPhasor<T> {
        self.state.voltages[node.0]
    }
}

/// Where each bus's auxiliary unknowns live.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxLayout {
    offsets: Vec<Option<usize>>,
    total: usize,
}

impl AuxLayout {
    pub fn new<T: Scalar>(case: &NetworkCase<T>) -> Self {
        let mut total = 0;
        let offsets = case
            .buses
            .iter()
            .map(|b| {
                let width = match &b.device {
                    Some(Device::Slack(_)) => 2,
                    Some(Device::Pv(_)) => 1,
                    Some(Device::Glass { template, .. }) if template.kind() == GlassKind::CurrentDependent => 2,
                    _ => 0,
                };
                if width == 0 {
                    None
                } else {
                    total += width;
                    Some(total - width)
                }
            })
            .collect();
        Self { offsets, total }
    }

    pub fn offset(&self, node: NodeId) -> Option<usize> {
        self.offsets[node.0]
    }

    pub fn total(&self) -> usize {
        self.total
    }
}

/// Exact residual split into bus KCL pairs and constraint-row mismatches.
#[derive(Debug, Clone, PartialEq)]
pub struct Residual<T> {
    pub kcl: Vec<SplitPhasor<T>>,
    pub constraints: Vec<T>,
}

impl<T: Scalar> Residual<T> {
    pub fn norm_inf(&self) -> T {
        let k = self.kcl.iter().fold(T::zero(), |m, p| m.max(p.re.abs()).max(p.im.abs()));
        self.constraints.iter().fold(k, |m, c| m.max(c.abs()))
    }
}

pub fn initial_state<T: Scalar>(case: &NetworkCase<T>, layout: &AuxLayout) -> SolveState<T> {
    let voltages = case
        .buses
        .iter()
        .map(|b| match &b.device {
            Some(Device::Slack(s)) => s.v_set,
            Some(Device::Pv(pv)) => SplitPhasor::new(pv.v_mag, T::zero()),
            _ => SplitPhasor::new(T::one(), T::zero()),
        })
        .collect();
    SolveState { voltages, aux: vec![T::zero(); layout.total()] }
}

fn aux_pair<T: Scalar>(state: &SolveState<T>, k: usize) -> SplitPhasor<T> {
    SplitPhasor::new(state.aux[k], state.aux[k + 1])
}

/// Current drawn by the device at `node` (per unit, out of the bus).
pub fn device_current<T: Scalar>(
    case: &NetworkCase<T>,
    layout: &AuxLayout,
    state: &SolveState<T>,
    node: NodeId,
) -> Result<SplitPhasor<T>> {
    let v = state.voltages[node.0];
    let aux = layout.offset(node);
    Ok(match &case.buses[node.0].device {
        None => SplitPhasor::zero(),
        Some(Device::Slack(_)) => aux_pair(state, aux.expect("slack aux")),
        Some(Device::Pq(d)) => d.current(v)?,
        Some(Device::Zip(d)) => d.current(v)?,
        Some(Device::Exp(d)) => d.current(v)?,
        Some(Device::Pv(pv)) => pv.current(v, state.aux[aux.expect("pv aux")])?,
        Some(Device::Glass { template, scale }) => match template.kind() {
            GlassKind::VoltageDependent => scale.current_to_pu(template.evaluate(scale.voltage_to_device(v))),
            GlassKind::CurrentDependent => aux_pair(state, aux.expect("glass aux")),
        },
        Some(Device::InductionMotor { motor, scale }) => scale.current_to_pu(motor.current(scale.voltage_to_device(v))?),
    })
}

/// Exact residual of the nonlinear network equations at `state`.
pub fn residual<T: Scalar>(case: &NetworkCase<T>, layout: &AuxLayout, state: &SolveState<T>) -> Result<Residual<T>> {
    let n = case.bus_count();
    let mut kcl = vec![SplitPhasor::zero(); n];
    let mut constraints = vec![T::zero(); layout.total()];
    for br in &case.branches {
        let (i_from, i_to) = br.terminal_currents(state.voltages[br.from.0], state.voltages[br.to.0]);
        kcl[br.from.0] = kcl[br.from.0] + i_from;
        kcl[br.to.0] = kcl[br.to.0] + i_to;
    }
    for k in 0..n {
        let node = NodeId(k);
        kcl[k] = kcl[k] + device_current(case, layout, state, node)?;
        let v = state.voltages[k];
        match &case.buses[k].device {
            Some(Device::Slack(s)) => {
                let a = layout.offset(node).expect("slack aux");
                constraints[a] = v.re - s.v_set.re;
                constraints[a + 1] = v.im - s.v_set.im;
            }
            Some(Device::Pv(pv)) => {
                constraints[layout.offset(node).expect("pv aux")] = pv.constraint_mismatch(v);
            }
            Some(Device::Glass { template, scale }) if template.kind() == GlassKind::CurrentDependent => {
                let a = layout.offset(node).expect("glass aux");
                let i = aux_pair(state, a);
                let v_model = scale.voltage_to_pu(template.evaluate(scale.current_to_device(i)));
                constraints[a] = v.re - v_model.re;
                constraints[a + 1] = v.im - v_model.im;
            }
            _ => {}
        }
    }
    Ok(Residual { kcl, constraints })
}

/// Per-bus KCL residual (sum of exact device and branch currents).
pub fn kcl_residual<T: Scalar>(case: &NetworkCase<T>, state: &SolveState<T>) -> Result<Vec<SplitPhasor<T>>> {
    let layout = AuxLayout::new(case);
    Ok(residual(case, &layout, state)?.kcl)
}

/// Build the linear system for one Newton iteration at `state`.
pub fn assemble<T: Scalar>(case: &NetworkCase<T>, layout: &AuxLayout, state: &SolveState<T>) -> Result<SplitSystem<T>> {
    let n = case.bus_count();
    let mut sys = SplitSystem::new(n, layout.total());
    for br in &case.branches {
        br.stamp(&mut sys)?;
    }
    for k in 0..n {
        let node = NodeId(k);
        let v = state.voltages[k];
        let Some(device) = &case.buses[k].device else { continue };
        let aux = layout.offset(node);
        match device {
            Device::Slack(s) => {
                let a = aux.expect("slack aux");
                sys.set_aux_label(a, format!("I_R[slack {}]", case.buses[k].id));
                sys.set_aux_label(a + 1, format!("I_I[slack {}]", case.buses[k].id));
                s.stamp(&mut sys, node, a)?;
            }
            Device::Pq(d) => sys.stamp_device(&d.stamp(node, v)?)?,
            Device::Zip(d) => sys.stamp_device(&d.stamp(node, v)?)?,
            Device::Exp(d) => sys.stamp_device(&d.stamp(node, v)?)?,
            Device::InductionMotor { motor, scale } => {
                let vd = scale.voltage_to_device(v);
                let mut st = motor.stamp(node, vd)?;
                st.jac = scale.admittance_to_pu(st.jac);
                st.hist = scale.current_to_pu(st.hist);
                sys.stamp_device(&st)?;
            }
            Device::Pv(pv) => {
                let a = aux.expect("pv aux");
                sys.set_aux_label(a, format!("Q[pv {}]", case.buses[k].id));
                let st = pv.stamp(node, v, state.aux[a])?;
                sys.stamp_device(&st.stamp)?;
                let (rr, ri, ra) = (sys.re_row(node), sys.im_row(node), sys.aux_row(a));
                sys.add(rr, ra, st.dq.re);
                sys.add(ri, ra, st.dq.im);
                sys.add(ra, rr, st.constraint[0]);
                sys.add(ra, ri, st.constraint[1]);
                sys.add_rhs(ra, st.constraint_rhs);
            }
            Device::Glass { template, scale } => match template.kind() {
                GlassKind::VoltageDependent => {
                    let GlassStamp::Voltage(mut st) = template.stamp(node, scale.voltage_to_device(v)) else {
                        unreachable!("voltage-dependent template yields a current stamp")
                    };
                    st.jac = scale.admittance_to_pu(st.jac);
                    st.hist = scale.current_to_pu(st.hist);
                    sys.stamp_device(&st)?;
                }
                GlassKind::CurrentDependent => {
                    let a = aux.expect("glass aux");
                    sys.set_aux_label(a, format!("I_R[glass {}]", case.buses[k].id));
                    sys.set_aux_label(a + 1, format!("I_I[glass {}]", case.buses[k].id));
                    let i_prev = scale.current_to_device(aux_pair(state, a));
                    let GlassStamp::Current(st) = template.stamp(node, i_prev) else {
                        unreachable!("current-dependent template yields a voltage stamp")
                    };
                    let r = scale.impedance_to_pu(st.resistance);
                    let hist = scale.voltage_to_pu(st.hist);
                    let rows = [sys.re_row(node), sys.im_row(node)];
                    let cols = [sys.aux_row(a), sys.aux_row(a + 1)];
                    for c in 0..2 {
                        // KCL: the branch current leaves the bus.
                        sys.add(rows[c], cols[c], T::one());
                        // Constraint: V_c - Σ r[c][j] I_j = hist_c.
                        sys.add(cols[c], rows[c], T::one());
                        for j in 0..2 {
                            sys.add(cols[c], cols[j], -r[c][j]);
                        }
                    }
                    sys.add_rhs(cols[0], hist.re);
                    sys.add_rhs(cols[1], hist.im);
                }
            },
        }
    }
    Ok(sys)
}

fn unpack<T: Scalar>(x: &[T], n: usize) -> SolveState<T> {
    SolveState { voltages: (0..n).map(|k| SplitPhasor::new(x[k], x[n + k])).collect(), aux: x[2 * n..].to_vec() }
}

fn blend<T: Scalar>(from: &SolveState<T>, to: &SolveState<T>, alpha: T) -> SolveState<T> {
    SolveState {
        voltages: from.voltages.iter().zip(&to.voltages).map(|(a, b)| *a + (*b - *a).scale(alpha)).collect(),
        aux: from.aux.iter().zip(&to.aux).map(|(a, b)| *a + (*b - *a) * alpha).collect(),
    }
}

fn voltage_step<T: Scalar>(a: &SolveState<T>, b: &SolveState<T>) -> T {
    a.voltages.iter().zip(&b.voltages).fold(T::zero(), |m, (x, y)| m.max((x.re - y.re).abs()).max((x.im - y.im).abs()))
}

fn safe_residual<T: Scalar>(case: &NetworkCase<T>, layout: &AuxLayout, state: &SolveState<T>) -> T {
    residual(case, layout, state).map(|r| r.norm_inf()).unwrap_or(T::infinity())
}

pub fn solve_power_flow<T: Scalar>(case: &NetworkCase<T>, opts: &SolverOptions<T>) -> Result<SolveResult<T>> {
    solve_power_flow_observed(case, opts, |_, _| {})
}

/// As [`solve_power_flow`], calling `observer(iteration, system)` with every
/// assembled system (iteration 0 is the initial state).
pub fn solve_power_flow_observed<T: Scalar>(
    case: &NetworkCase<T>,
    opts: &SolverOptions<T>,
    mut observer: impl FnMut(usize, &SplitSystem<T>),
) -> Result<SolveResult<T>> {
    opts.validate()?;
    case.validate()?;
    let n = case.bus_count();
    let layout = AuxLayout::new(case);
    let mut state = match &opts.init {
        InitialState::Flat => initial_state(case, &layout),
        InitialState::Warm(s) => {
            if s.voltages.len() != n || s.aux.len() != layout.total() {
                return Err(Error::InvalidParameter("warm start does not match the case layout".into()));
            }
            s.clone()
        }
    };
    let floor = T::lit(10.0 * VOLTAGE_FLOOR);
    let mut history = Vec::new();
    let mut current_residual = match residual(case, &layout, &state) {
        Ok(r) => r.norm_inf(),
        Err(e) => return Ok(stopped(state, 0, history, e)),
    };
    let mut pending: Option<SolveState<T>> = None;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        let target = match pending.take() {
            Some(t) => t,
            None => {
                let sys = match assemble(case, &layout, &state) {
                    Ok(sys) => sys,
                    Err(e) => return Ok(stopped(state, iterations, history, e)),
                };
                observer(iterations, &sys);
                unpack(&sys.solve()?, n)
            }
        };
        iterations += 1;

        let mut alpha = opts.damping;
        let mut candidate = blend(&state, &target, alpha);
        for _ in 0..30 {
            if candidate.voltages.iter().all(|v| v.magnitude() > floor) {
                break;
            }
            alpha /= T::lit(2.0);
            candidate = blend(&state, &target, alpha);
        }
        let mut cand_residual = safe_residual(case, &layout, &candidate);
        if current_residual > opts.tol_kcl {
            for _ in 0..opts.max_halvings {
                if cand_residual <= current_residual {
                    break;
                }
                alpha /= T::lit(2.0);
                candidate = blend(&state, &target, alpha);
                cand_residual = safe_residual(case, &layout, &candidate);
            }
        }

        let step = voltage_step(&state, &candidate);
        history.push(IterationRecord { step, residual: cand_residual, damping: alpha });
        state = candidate;
        current_residual = cand_residual;
        if !current_residual.is_finite() {
            let e = match residual(case, &layout, &state) {
                Err(e) => e,
                Ok(_) => Error::NonFinite { what: "power-flow residual".into() },
            };
            return Ok(stopped(state, iterations, history, e));
        }

        if current_residual <= opts.tol_kcl {
            let sys = match assemble(case, &layout, &state) {
                Ok(sys) => sys,
                Err(e) => return Ok(stopped(state, iterations, history, e)),
            };
            observer(iterations, &sys);
            let next = unpack(&sys.solve()?, n);
            let correction = voltage_step(&state, &next);
            if correction <= opts.tol_v {
                return Ok(SolveResult {
                    state,
                    iterations,
                    residual_history: history,
                    converged: true,
                    final_correction: Some(correction),
                    failure: None,
                });
            }
            pending = Some(next);
        }
    }

    Ok(SolveResult { state, iterations, residual_history: history, converged: false, final_correction: None, failure: None })
}

fn stopped<T: Scalar>(state: SolveState<T>, iterations: usize, history: Vec<IterationRecord<T>>, e: Error) -> SolveResult<T> {
    SolveResult { state, iterations, residual_history: history, converged: false, final_correction: None, failure: Some(e) }
}
