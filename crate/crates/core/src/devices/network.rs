use crate::circuit::{Jacobian2, LinearizedStamp, NodeId, SplitSystem};
use crate::error::{Error, Result};
use crate::phasor::SplitPhasor;
use crate::scalar::Scalar;

/// π-model line: series `r + jx`, total shunt susceptance `b_sh` split
/// evenly between the ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branch<T> {
    pub from: NodeId,
    pub to: NodeId,
    pub r: T,
    pub x: T,
    pub b_sh: T,
}

impl<T: Scalar> Branch<T> {
    pub fn new(from: NodeId, to: NodeId, r: T, x: T, b_sh: T) -> Result<Self> {
        if ![r, x, b_sh].iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite { what: "branch parameter".into() });
        }
        if r < T::zero() {
            return Err(Error::InvalidParameter(format!("branch resistance must be >= 0, got {r}")));
        }
        if r == T::zero() && x == T::zero() {
            return Err(Error::InvalidParameter("branch impedance r + jx must be nonzero".into()));
        }
        if from == to {
            return Err(Error::InvalidParameter(format!("branch connects bus {} to itself", from.0)));
        }
        Ok(Self { from, to, r, x, b_sh })
    }

    /// Series admittance `(g, b)` with `g + jb = 1 / (r + jx)`.
    pub fn series_admittance(&self) -> (T, T) {
        let d = self.r * self.r + self.x * self.x;
        (self.r / d, -self.x / d)
    }

    /// Real series admittance in the two sub-circuits, imaginary part as the
    /// cross-coupling controlled sources.
    pub fn series_block(&self) -> Jacobian2<T> {
        let (g, b) = self.series_admittance();
        [[g, -b], [b, g]]
    }

    fn shunt_block(&self) -> Jacobian2<T> {
        let h = self.b_sh / T::lit(2.0);
        [[T::zero(), -h], [h, T::zero()]]
    }

    pub fn stamp(&self, sys: &mut SplitSystem<T>) -> Result<()> {
        sys.stamp_branch_block(self.from, Some(self.to), self.series_block())?;
        if self.b_sh != T::zero() {
            sys.stamp_branch_block(self.from, None, self.shunt_block())?;
            sys.stamp_branch_block(self.to, None, self.shunt_block())?;
        }
        Ok(())
    }

    /// Currents leaving `from` and leaving `to` into the branch.
    pub fn terminal_currents(&self, v_from: SplitPhasor<T>, v_to: SplitPhasor<T>) -> (SplitPhasor<T>, SplitPhasor<T>) {
        let apply = |m: Jacobian2<T>, v: SplitPhasor<T>| {
            SplitPhasor::new(m[0][0] * v.re + m[0][1] * v.im, m[1][0] * v.re + m[1][1] * v.im)
        };
        let series = apply(self.series_block(), v_from - v_to);
        let sh = self.shunt_block();
        (series + apply(sh, v_from), -series + apply(sh, v_to))
    }
}

/// Reference bus with a fixed complex voltage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlackSource<T> {
    pub v_set: SplitPhasor<T>,
}

impl<T: Scalar> SlackSource<T> {
    pub fn new(v_set: SplitPhasor<T>) -> Result<Self> {
        v_set.check_finite("slack voltage")?;
        if !(v_set.magnitude() > T::zero()) {
            return Err(Error::InvalidParameter("slack voltage magnitude must be positive".into()));
        }
        Ok(Self { v_set })
    }

    /// Pin both voltage components; auxiliary unknowns `aux`, `aux + 1` carry
    /// the source current.
    pub fn stamp(&self, sys: &mut SplitSystem<T>, node: NodeId, aux: usize) -> Result<()> {
        sys.stamp_voltage_source(node, aux, self.v_set)
    }
}

/// Constant-|V| bus with fixed active power generation `p` (positive =
/// injected into the network). The reactive power the device absorbs is a
/// free auxiliary unknown chosen so that `|V| = v_mag`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PVBus<T> {
    pub p: T,
    pub v_mag: T,
}

/// Linearization of a PV bus: `I ≈ stamp.jac · V + dq · q + stamp.hist`
/// together with the constraint row `coeffs · V = rhs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PvStamp<T> {
    pub stamp: LinearizedStamp<T>,
    pub dq: SplitPhasor<T>,
    pub constraint: [T; 2],
    pub constraint_rhs: T,
}

impl<T: Scalar> PVBus<T> {
    pub fn new(p: T, v_mag: T) -> Result<Self> {
        if !p.is_finite() {
            return Err(Error::NonFinite { what: "PV active power".into() });
        }
        if !(v_mag > T::zero() && v_mag.is_finite()) {
            return Err(Error::InvalidParameter(format!("PV voltage set-point must be positive, got {v_mag}")));
        }
        Ok(Self { p, v_mag })
    }

    /// Current drawn at `v` with absorbed reactive power `q`.
    pub fn current(&self, v: SplitPhasor<T>, q: T) -> Result<SplitPhasor<T>> {
        let load = crate::devices::PQLoad { p: -self.p, q };
        crate::devices::pq_currents(&load, v)
    }

    /// `|V|² - v_mag²`.
    pub fn constraint_mismatch(&self, v: SplitPhasor<T>) -> T {
        v.norm_sqr() - self.v_mag * self.v_mag
    }

    pub fn stamp(&self, node: NodeId, v_prev: SplitPhasor<T>, q_prev: T) -> Result<PvStamp<T>> {
        use crate::devices::OnePort;
        let load = crate::devices::PQLoad { p: -self.p, q: q_prev };
        let i0 = load.current(v_prev)?;
        let jac = load.jacobian(v_prev)?;
        let w = v_prev.norm_sqr();
        let dq = SplitPhasor::new(v_prev.im / w, -v_prev.re / w);
        let mut stamp = LinearizedStamp::from_expansion(node, v_prev, i0, jac);
        stamp.hist.re -= dq.re * q_prev;
        stamp.hist.im -= dq.im * q_prev;
        let two = T::lit(2.0);
        Ok(PvStamp { stamp, dq, constraint: [two * v_prev.re, two * v_prev.im], constraint_rhs: self.v_mag * self.v_mag + w })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resistive_branch_has_no_cross_terms() {
        let b = Branch::new(NodeId(0), NodeId(1), 1.0, 0.0, 0.0).unwrap();
        assert_eq!(b.series_block(), [[1.0, 0.0], [0.0, 1.0]]);
        let mut s = SplitSystem::<f64>::new(2, 0);
        b.stamp(&mut s).unwrap();
        let mut g = SplitSystem::<f64>::new(2, 0);
        g.stamp_conductance(NodeId(0), Some(NodeId(1)), 1.0).unwrap();
        assert_eq!(s.matrix(), g.matrix());
    }

    #[test]
    fn branch_rejects_degenerate_impedance() {
        assert!(Branch::new(NodeId(0), NodeId(1), 0.0, 0.0, 0.0).is_err());
        assert!(Branch::new(NodeId(0), NodeId(1), -0.1, 0.2, 0.0).is_err());
    }

    #[test]
    fn branch_terminal_currents_match_complex_law() {
        use num_complex::Complex;
        let b = Branch::new(NodeId(0), NodeId(1), 0.02, 0.1, 0.04).unwrap();
        let (v0, v1) = (SplitPhasor::new(1.0, 0.05), SplitPhasor::new(0.95, -0.08));
        let (i0, i1) = b.terminal_currents(v0, v1);
        let y = Complex::new(1.0, 0.0) / Complex::new(0.02, 0.1);
        let ysh = Complex::new(0.0, 0.02);
        let e0 = y * (v0.to_complex() - v1.to_complex()) + ysh * v0.to_complex();
        let e1 = y * (v1.to_complex() - v0.to_complex()) + ysh * v1.to_complex();
        assert!((i0.to_complex() - e0).norm() < 1e-12);
        assert!((i1.to_complex() - e1).norm() < 1e-12);
    }

    #[test]
    fn pv_stamp_reproduces_current_at_expansion_point() {
        let pv = PVBus::new(0.6, 1.02).unwrap();
        let v = SplitPhasor::new(1.0, 0.12);
        let q = -0.3;
        let st = pv.stamp(NodeId(0), v, q).unwrap();
        let lin = st.stamp.current_at(v) + st.dq.scale(q);
        let exact = pv.current(v, q).unwrap();
        assert!((lin - exact).magnitude() < 1e-14);
    }

    #[test]
    fn slack_requires_nonzero_voltage() {
        assert!(SlackSource::new(SplitPhasor::new(0.0, 0.0)).is_err());
    }
}
