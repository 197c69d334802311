//! In-memory network case: buses, branches and the device attached to each bus.

use crate::circuit::{Jacobian2, NodeId};
use crate::devices::{Branch, ExpLoad, InductionMotor, PQLoad, PVBus, SlackSource, ZIPLoad};
use crate::error::{Error, Result};
use crate::glass::GlassTemplate;
use crate::phasor::SplitPhasor;
use crate::scalar::Scalar;

/// Converts between the per-unit network and a device modeled in physical
/// units: `V_device = v_base · V_pu`, `I_pu = I_device / i_base`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitScale<T> {
    pub v_base: T,
    pub i_base: T,
}

impl<T: Scalar> UnitScale<T> {
    pub fn identity() -> Self {
        Self { v_base: T::one(), i_base: T::one() }
    }

    /// Single-phase bases from apparent power and voltage: `I_b = S_b / V_b`.
    pub fn from_base(base: &PowerBase<T>) -> Self {
        Self { v_base: base.v_base, i_base: base.s_base / base.v_base }
    }

    pub fn voltage_to_device(&self, v: SplitPhasor<T>) -> SplitPhasor<T> {
        v.scale(self.v_base)
    }

    pub fn voltage_to_pu(&self, v: SplitPhasor<T>) -> SplitPhasor<T> {
        v.scale(T::one() / self.v_base)
    }

    pub fn current_to_device(&self, i: SplitPhasor<T>) -> SplitPhasor<T> {
        i.scale(self.i_base)
    }

    pub fn current_to_pu(&self, i: SplitPhasor<T>) -> SplitPhasor<T> {
        i.scale(T::one() / self.i_base)
    }

    /// Per-unit form of a device `dI/dV` block.
    pub fn admittance_to_pu(&self, j: Jacobian2<T>) -> Jacobian2<T> {
        let k = self.v_base / self.i_base;
        [[j[0][0] * k, j[0][1] * k], [j[1][0] * k, j[1][1] * k]]
    }

    /// Per-unit form of a device `dV/dI` block.
    pub fn impedance_to_pu(&self, j: Jacobian2<T>) -> Jacobian2<T> {
        let k = self.i_base / self.v_base;
        [[j[0][0] * k, j[0][1] * k], [j[1][0] * k, j[1][1] * k]]
    }
}

/// Declared per-unit bases: apparent power (VA) and voltage (V).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerBase<T> {
    pub s_base: T,
    pub v_base: T,
}

impl<T: Scalar> PowerBase<T> {
    pub fn z_base(&self) -> T {
        self.v_base * self.v_base / self.s_base
    }
}

impl<T: Scalar> Default for PowerBase<T> {
    fn default() -> Self {
        Self { s_base: T::one(), v_base: T::one() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Device<T> {
    Slack(SlackSource<T>),
    Pq(PQLoad<T>),
    Pv(PVBus<T>),
    Zip(ZIPLoad<T>),
    Exp(ExpLoad<T>),
    Glass { template: GlassTemplate<T>, scale: UnitScale<T> },
    InductionMotor { motor: InductionMotor<T>, scale: UnitScale<T> },
}

impl<T: Scalar> Device<T> {
    pub fn type_tag(&self) -> &'static str {
        match self {
            Device::Slack(_) => "slack",
            Device::Pq(_) => "pq",
            Device::Pv(_) => "pv",
            Device::Zip(_) => "zip",
            Device::Exp(_) => "exp",
            Device::Glass { .. } => "glass",
            Device::InductionMotor { .. } => "im",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bus<T> {
    /// External identifier from the case file.
    pub id: i64,
    pub device: Option<Device<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkCase<T> {
    pub base: PowerBase<T>,
    pub buses: Vec<Bus<T>>,
    pub branches: Vec<Branch<T>>,
}

impl<T: Scalar> NetworkCase<T> {
    pub fn new(base: PowerBase<T>) -> Self {
        Self { base, buses: Vec::new(), branches: Vec::new() }
    }

    /// Append a bus; returns its dense index.
    pub fn add_bus(&mut self, id: i64, device: Option<Device<T>>) -> NodeId {
        self.buses.push(Bus { id, device });
        NodeId(self.buses.len() - 1)
    }

    pub fn add_branch(&mut self, from: NodeId, to: NodeId, r: T, x: T, b_sh: T) -> Result<()> {
        self.branches.push(Branch::new(from, to, r, x, b_sh)?);
        Ok(())
    }

    pub fn bus_count(&self) -> usize {
        self.buses.len()
    }

    pub fn node_of(&self, id: i64) -> Option<NodeId> {
        self.buses.iter().position(|b| b.id == id).map(NodeId)
    }

    pub fn slack_buses(&self) -> Vec<NodeId> {
        self.buses
            .iter()
            .enumerate()
            .filter(|(_, b)| matches!(b.device, Some(Device::Slack(_))))
            .map(|(k, _)| NodeId(k))
            .collect()
    }

    /// Structural checks needed before a solve.
    pub fn validate(&self) -> Result<()> {
        let slacks = self.slack_buses().len();
        if slacks != 1 {
            return Err(Error::SlackCount { found: slacks });
        }
        for (k, br) in self.branches.iter().enumerate() {
            for end in [br.from, br.to] {
                if end.0 >= self.buses.len() {
                    return Err(Error::format(format!("branch[{k}]"), format!("endpoint {} does not exist", end.0)));
                }
            }
        }
        Ok(())
    }
}
