//! The split equivalent circuit: a real sub-circuit and an imaginary
//! sub-circuit coupled by controlled sources, assembled as one real
//! linear system per Newton iteration.
//!
//! Unknown ordering: `V_R` of every bus (`0..n`), then `V_I` of every bus
//! (`n..2n`), then auxiliary unknowns (source currents, reactive set-points)
//! from `2n` on.
//!
//! Sign convention: a device current is positive when it flows out of the
//! bus into the device. Each bus row states KCL as
//! `sum(device currents) = 0`; a linearized device `I = J V + h` therefore
//! adds `J` to the matrix and `-h` to the right-hand side.

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, LuFactorization};
use crate::phasor::SplitPhasor;
use crate::scalar::Scalar;

/// Dense index of a bus. Ground is implicit and has no index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// 2x2 real block `[[dI_R/dV_R, dI_R/dV_I], [dI_I/dV_R, dI_I/dV_I]]`.
pub type Jacobian2<T> = [[T; 2]; 2];

pub(crate) fn jac_is_finite<T: Scalar>(j: &Jacobian2<T>) -> bool {
    j.iter().flatten().all(|v| v.is_finite())
}

/// One device's contribution to a Newton iteration: `I ≈ jac · V + hist`.
///
/// Diagonal entries of `jac` are conductances within a sub-circuit,
/// off-diagonal entries are the voltage-controlled current sources coupling
/// the two sub-circuits, and `hist` is the independent current source that
/// collects all terms known from the previous iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearizedStamp<T> {
    pub node: NodeId,
    pub jac: Jacobian2<T>,
    pub hist: SplitPhasor<T>,
}

impl<T: Scalar> LinearizedStamp<T> {
    /// Stamp from a first-order expansion about `v0`, where the device
    /// draws `i0` and has Jacobian `jac`.
    pub fn from_expansion(node: NodeId, v0: SplitPhasor<T>, i0: SplitPhasor<T>, jac: Jacobian2<T>) -> Self {
        let hist = SplitPhasor::new(i0.re - jac[0][0] * v0.re - jac[0][1] * v0.im, i0.im - jac[1][0] * v0.re - jac[1][1] * v0.im);
        Self { node, jac, hist }
    }

    /// The linearized current at `v`.
    pub fn current_at(&self, v: SplitPhasor<T>) -> SplitPhasor<T> {
        SplitPhasor::new(
            self.jac[0][0] * v.re + self.jac[0][1] * v.im + self.hist.re,
            self.jac[1][0] * v.re + self.jac[1][1] * v.im + self.hist.im,
        )
    }

    pub fn is_finite(&self) -> bool {
        jac_is_finite(&self.jac) && self.hist.is_finite()
    }
}

/// The assembled per-iteration linear system.
#[derive(Debug, Clone)]
pub struct SplitSystem<T> {
    buses: usize,
    aux_labels: Vec<String>,
    matrix: DenseMatrix<T>,
    rhs: Vec<T>,
}

impl<T: Scalar> SplitSystem<T> {
    pub fn new(buses: usize, aux: usize) -> Self {
        let dim = 2 * buses + aux;
        Self {
            buses,
            aux_labels: (0..aux).map(|k| format!("aux[{k}]")).collect(),
            matrix: DenseMatrix::zeros(dim, dim),
            rhs: vec![T::zero(); dim],
        }
    }

    pub fn buses(&self) -> usize {
        self.buses
    }

    pub fn aux_count(&self) -> usize {
        self.aux_labels.len()
    }

    pub fn dimension(&self) -> usize {
        self.rhs.len()
    }

    pub fn matrix(&self) -> &DenseMatrix<T> {
        &self.matrix
    }

    pub fn rhs(&self) -> &[T] {
        &self.rhs
    }

    pub fn re_row(&self, node: NodeId) -> usize {
        node.0
    }

    pub fn im_row(&self, node: NodeId) -> usize {
        self.buses + node.0
    }

    pub fn aux_row(&self, k: usize) -> usize {
        2 * self.buses + k
    }

    pub fn set_aux_label(&mut self, k: usize, label: impl Into<String>) {
        self.aux_labels[k] = label.into();
    }

    /// Human-readable name of an unknown / equation row.
    pub fn row_label(&self, row: usize) -> String {
        let n = self.buses;
        if row < n {
            format!("V_R[{row}]")
        } else if row < 2 * n {
            format!("V_I[{}]", row - n)
        } else {
            self.aux_labels.get(row - 2 * n).cloned().unwrap_or_else(|| format!("row {row}"))
        }
    }

    fn check_node(&self, node: NodeId) -> Result<()> {
        if node.0 < self.buses {
            Ok(())
        } else {
            Err(Error::InvalidNode { node: node.0, buses: self.buses })
        }
    }

    pub fn add(&mut self, row: usize, col: usize, value: T) {
        self.matrix[(row, col)] += value;
    }

    pub fn add_rhs(&mut self, row: usize, value: T) {
        self.rhs[row] += value;
    }

    /// Two-terminal conductance, identical in both sub-circuits.
    pub fn stamp_conductance(&mut self, a: NodeId, b: Option<NodeId>, g: T) -> Result<()> {
        if !g.is_finite() {
            return Err(Error::NonFinite { what: "conductance".into() });
        }
        let z = T::zero();
        self.stamp_branch_block(a, b, [[g, z], [z, g]])
    }

    /// Two-terminal element whose current from `a` to `b` is
    /// `block · (V_a - V_b)`. A complex admittance `g + jb` has
    /// `block = [[g, -b], [b, g]]`.
    pub fn stamp_branch_block(&mut self, a: NodeId, b: Option<NodeId>, block: Jacobian2<T>) -> Result<()> {
        self.check_node(a)?;
        if let Some(b) = b {
            self.check_node(b)?;
            if a == b {
                return Err(Error::SameTerminal { node: a.0 });
            }
        }
        if !jac_is_finite(&block) {
            return Err(Error::NonFinite { what: "branch admittance".into() });
        }
        let ra = [self.re_row(a), self.im_row(a)];
        for r in 0..2 {
            for c in 0..2 {
                self.add(ra[r], ra[c], block[r][c]);
            }
        }
        if let Some(b) = b {
            let rb = [self.re_row(b), self.im_row(b)];
            for r in 0..2 {
                for c in 0..2 {
                    self.add(rb[r], rb[c], block[r][c]);
                    self.add(ra[r], rb[c], -block[r][c]);
                    self.add(rb[r], ra[c], -block[r][c]);
                }
            }
        }
        Ok(())
    }

    /// Add a linearized one-port device between `s.node` and ground.
    pub fn stamp_device(&mut self, s: &LinearizedStamp<T>) -> Result<()> {
        self.check_node(s.node)?;
        if !s.is_finite() {
            return Err(Error::NonFinite { what: "device stamp".into() });
        }
        let rows = [self.re_row(s.node), self.im_row(s.node)];
        for r in 0..2 {
            for c in 0..2 {
                self.add(rows[r], rows[c], s.jac[r][c]);
            }
        }
        self.rhs[rows[0]] -= s.hist.re;
        self.rhs[rows[1]] -= s.hist.im;
        Ok(())
    }

    /// Ideal voltage source pinning `node` to `v_set`, with its two branch
    /// currents (flowing out of the bus into the source) as the auxiliary
    /// unknowns `aux` and `aux + 1`.
    pub fn stamp_voltage_source(&mut self, node: NodeId, aux: usize, v_set: SplitPhasor<T>) -> Result<()> {
        self.check_node(node)?;
        let one = T::one();
        let (rr, ri) = (self.re_row(node), self.im_row(node));
        let (ar, ai) = (self.aux_row(aux), self.aux_row(aux + 1));
        self.add(rr, ar, one);
        self.add(ri, ai, one);
        self.add(ar, rr, one);
        self.add(ai, ri, one);
        self.rhs[ar] += v_set.re;
        self.rhs[ai] += v_set.im;
        Ok(())
    }

    /// `‖A x - b‖∞`.
    pub fn residual_inf(&self, x: &[T]) -> T {
        self.matrix.mul_vec(x).iter().zip(&self.rhs).fold(T::zero(), |m, (ax, b)| m.max((*ax - *b).abs()))
    }

    /// Indices of rows with no nonzero entry.
    pub fn empty_rows(&self) -> Vec<usize> {
        (0..self.dimension()).filter(|&r| self.matrix.row(r).iter().all(|v| *v == T::zero())).collect()
    }

    pub fn solve(&self) -> Result<Vec<T>> {
        solve_linear(self)
    }
}

/// Dense LU solve of an assembled system.
pub fn solve_linear<T: Scalar>(sys: &SplitSystem<T>) -> Result<Vec<T>> {
    if sys.rhs.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { what: "right-hand side".into() });
    }
    let lu = LuFactorization::factor(&sys.matrix).map_err(|p| Error::SingularSystem {
        row: p.row,
        label: sys.row_label(p.row),
        pivot: p.pivot,
        threshold: p.threshold,
    })?;
    Ok(lu.solve(&sys.rhs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(i: usize) -> NodeId {
        NodeId(i)
    }

    #[test]
    fn zero_conductance_is_a_no_op() {
        let mut s = SplitSystem::<f64>::new(2, 0);
        s.stamp_conductance(n(0), Some(n(1)), 0.0).unwrap();
        assert!(s.matrix().iter_nonzero().next().is_none());
    }

    #[test]
    fn grounded_conductance_hits_both_subcircuits() {
        let mut s = SplitSystem::<f64>::new(2, 0);
        s.stamp_conductance(n(1), None, 10.0).unwrap();
        let m = s.matrix();
        assert_eq!(m[(1, 1)], 10.0);
        assert_eq!(m[(3, 3)], 10.0);
        assert_eq!(m.iter_nonzero().count(), 2);
    }

    #[test]
    fn conductances_superpose() {
        let mut a = SplitSystem::<f64>::new(2, 0);
        a.stamp_conductance(n(0), Some(n(1)), 3.0).unwrap();
        a.stamp_conductance(n(0), Some(n(1)), 7.0).unwrap();
        let mut b = SplitSystem::<f64>::new(2, 0);
        b.stamp_conductance(n(0), Some(n(1)), 10.0).unwrap();
        assert_eq!(a.matrix(), b.matrix());
        assert_eq!(b.matrix()[(0, 1)], -10.0);
        assert_eq!(b.matrix()[(2, 3)], -10.0);
    }

    #[test]
    fn rejects_bad_conductance_stamps() {
        let mut s = SplitSystem::<f64>::new(2, 0);
        assert!(matches!(s.stamp_conductance(n(0), None, f64::INFINITY), Err(Error::NonFinite { .. })));
        assert!(matches!(s.stamp_conductance(n(0), Some(n(0)), 1.0), Err(Error::SameTerminal { .. })));
        assert!(matches!(s.stamp_conductance(n(5), None, 1.0), Err(Error::InvalidNode { .. })));
    }

    #[test]
    fn diagonal_device_equals_grounded_conductance() {
        let mut a = SplitSystem::<f64>::new(1, 0);
        a.stamp_device(&LinearizedStamp { node: n(0), jac: [[4.0, 0.0], [0.0, 4.0]], hist: SplitPhasor::zero() }).unwrap();
        let mut b = SplitSystem::<f64>::new(1, 0);
        b.stamp_conductance(n(0), None, 4.0).unwrap();
        assert_eq!(a.matrix(), b.matrix());
        assert_eq!(a.rhs(), b.rhs());
    }

    #[test]
    fn constant_current_device_only_touches_rhs() {
        let mut s = SplitSystem::<f64>::new(1, 0);
        s.stamp_device(&LinearizedStamp { node: n(0), jac: [[0.0; 2]; 2], hist: SplitPhasor::new(0.3, -0.2) }).unwrap();
        assert!(s.matrix().iter_nonzero().next().is_none());
        assert_eq!(s.rhs(), &[-0.3, 0.2]);
        assert!(s.stamp_device(&LinearizedStamp { node: n(3), jac: [[0.0; 2]; 2], hist: SplitPhasor::zero() }).is_err());
    }

    #[test]
    fn identity_system_returns_rhs() {
        let mut s = SplitSystem::<f64>::new(1, 1);
        for r in 0..3 {
            s.add(r, r, 1.0);
        }
        s.add_rhs(0, 1.5);
        s.add_rhs(1, -2.0);
        s.add_rhs(2, 0.25);
        assert_eq!(s.solve().unwrap(), vec![1.5, -2.0, 0.25]);
    }

    #[test]
    fn two_bus_conductance_network_matches_hand_elimination() {
        // Source of 1 + 0.5j at bus 0, g01 = 2 S, g1 = 3 S to ground.
        // Bus 1: 2 (V1 - V0) + 3 V1 = 0  =>  V1 = 0.4 V0.
        let mut s = SplitSystem::<f64>::new(2, 2);
        s.stamp_voltage_source(n(0), 0, SplitPhasor::new(1.0, 0.5)).unwrap();
        s.stamp_conductance(n(0), Some(n(1)), 2.0).unwrap();
        s.stamp_conductance(n(1), None, 3.0).unwrap();
        let x = s.solve().unwrap();
        assert!((x[1] - 0.4).abs() < 1e-14);
        assert!((x[3] - 0.2).abs() < 1e-14);
        // Source current flows out of bus 0 into the source: -(2 (V0 - V1)).
        assert!((x[4] + 1.2).abs() < 1e-14);
        assert!((x[5] + 0.6).abs() < 1e-14);
        assert!(s.residual_inf(&x) <= 1e-9);
    }

    #[test]
    fn floating_node_is_singular() {
        let mut s = SplitSystem::<f64>::new(2, 2);
        s.stamp_voltage_source(n(0), 0, SplitPhasor::new(1.0, 0.0)).unwrap();
        s.stamp_conductance(n(0), None, 1.0).unwrap();
        assert_eq!(s.empty_rows(), vec![1, 3]);
        match s.solve() {
            Err(Error::SingularSystem { row, label, .. }) => {
                assert!(row == 1 || row == 3, "row {row}");
                assert!(label.starts_with("V_"));
            }
            other => panic!("expected singular system, got {other:?}"),
        }
    }
}
