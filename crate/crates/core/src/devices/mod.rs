//! Physics-based and classical empirical device models.
//!
//! Every one-port exposes its exact split current injection and the
//! first-order stamp used by the Newton loop.

mod induction;
mod load;
mod network;

pub use induction::{
    breakdown_torque, im_admittance, im_currents, im_slip, slip_gammas, torque_at_slip, IMOperatingPoint, IMParams,
    InductionMotor,
};
pub use load::{exp_power, pq_currents, pq_stamp, zip_power, ExpLoad, PQLoad, ZIPLoad, VOLTAGE_FLOOR};
pub use network::{Branch, PVBus, PvStamp, SlackSource};

use crate::circuit::{Jacobian2, LinearizedStamp, NodeId};
use crate::error::Result;
use crate::phasor::SplitPhasor;
use crate::scalar::Scalar;

/// A shunt device whose current is a function of its terminal voltage.
pub trait OnePort<T: Scalar> {
    /// Exact current drawn from the bus at `v`.
    fn current(&self, v: SplitPhasor<T>) -> Result<SplitPhasor<T>>;

    /// Analytic `dI/dV` at `v`.
    fn jacobian(&self, v: SplitPhasor<T>) -> Result<Jacobian2<T>>;

    /// First-order expansion about `v_prev`.
    fn stamp(&self, node: NodeId, v_prev: SplitPhasor<T>) -> Result<LinearizedStamp<T>> {
        let i0 = self.current(v_prev)?;
        let jac = self.jacobian(v_prev)?;
        Ok(LinearizedStamp::from_expansion(node, v_prev, i0, jac))
    }
}
