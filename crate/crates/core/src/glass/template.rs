use crate::circuit::{Jacobian2, LinearizedStamp, NodeId};
use crate::error::{Error, Result};
use crate::glass::basis::MonomialBasis;
use crate::phasor::SplitPhasor;
use crate::scalar::{binomial, factorial, powu, Scalar};

/// Which pair of state variables is the dependent one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GlassKind {
    /// Currents as polynomials of the bus voltage.
    VoltageDependent,
    /// Voltages as polynomials of the device current.
    CurrentDependent,
}

impl GlassKind {
    pub fn as_str(self) -> &'static str {
        match self {
            GlassKind::VoltageDependent => "voltage-dependent",
            GlassKind::CurrentDependent => "current-dependent",
        }
    }
}

/// Axis-aligned box of the independent variables seen during fitting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain<T> {
    pub re: (T, T),
    pub im: (T, T),
}

impl<T: Scalar> Domain<T> {
    pub fn from_points(points: impl IntoIterator<Item = SplitPhasor<T>>) -> Option<Self> {
        let mut it = points.into_iter();
        let first = it.next()?;
        let init = Self { re: (first.re, first.re), im: (first.im, first.im) };
        Some(it.fold(init, |d, p| Self { re: (d.re.0.min(p.re), d.re.1.max(p.re)), im: (d.im.0.min(p.im), d.im.1.max(p.im)) }))
    }

    /// Membership with a small relative slack on each side.
    pub fn contains(&self, b: SplitPhasor<T>) -> bool {
        let inside = |x: T, (lo, hi): (T, T)| {
            let slack = T::lit(1e-9) * (T::one() + lo.abs().max(hi.abs()));
            x >= lo - slack && x <= hi + slack
        };
        inside(b.re, self.re) && inside(b.im, self.im)
    }
}

/// Polynomial template `A_C = Σ g_k^C m_k(B)` for `C ∈ {R, I}`.
///
/// Coefficients are stored for the absolute basis (monomials of `B`
/// itself); `center` records the expansion point used when the template was
/// built and is the default point for Taylor-derivative views.
#[derive(Debug, Clone, PartialEq)]
pub struct GlassTemplate<T> {
    kind: GlassKind,
    basis: MonomialBasis,
    center: SplitPhasor<T>,
    coeffs_r: Vec<T>,
    coeffs_i: Vec<T>,
    domain: Option<Domain<T>>,
}

/// Linearization of a current-dependent template: `V ≈ resistance · I + hist`.
///
/// Diagonal entries of `resistance` are resistors, off-diagonal entries are
/// current-controlled voltage sources and `hist` the independent voltage
/// source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurrentDependentStamp<T> {
    pub node: NodeId,
    pub resistance: Jacobian2<T>,
    pub hist: SplitPhasor<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GlassStamp<T> {
    Voltage(LinearizedStamp<T>),
    Current(CurrentDependentStamp<T>),
}

/// Re-express a polynomial given in monomials of `(B - from)` as monomials
/// of `(B - to)`.
fn shift<T: Scalar>(basis: &MonomialBasis, coeffs: &[T], from: SplitPhasor<T>, to: SplitPhasor<T>) -> Vec<T> {
    // (B - from) = (B - to) + d with d = to - from.
    let d = to - from;
    let mut out = vec![T::zero(); coeffs.len()];
    for (k, &(er, ei)) in basis.exponents().iter().enumerate() {
        let c = coeffs[k];
        if c == T::zero() {
            continue;
        }
        for a in 0..=er {
            for b in 0..=ei {
                let idx = basis.index_of(a, b).expect("sub-monomial present in basis");
                out[idx] += c * binomial::<T>(er, a) * binomial::<T>(ei, b) * powu(d.re, er - a) * powu(d.im, ei - b);
            }
        }
    }
    out
}

impl<T: Scalar> GlassTemplate<T> {
    pub fn new(kind: GlassKind, order: u32, center: SplitPhasor<T>, coeffs_r: Vec<T>, coeffs_i: Vec<T>) -> Result<Self> {
        let basis = MonomialBasis::new(order)?;
        for (name, c) in [("real", &coeffs_r), ("imaginary", &coeffs_i)] {
            if c.len() != basis.len() {
                return Err(Error::InvalidParameter(format!(
                    "{name} coefficient vector has {} entries, order {order} needs {}",
                    c.len(),
                    basis.len()
                )));
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { what: format!("{name} template coefficient") });
            }
        }
        center.check_finite("template center")?;
        Ok(Self { kind, basis, center, coeffs_r, coeffs_i, domain: None })
    }

    /// Build from coefficients of monomials in `(B - center)`.
    pub fn from_centered(
        kind: GlassKind,
        order: u32,
        center: SplitPhasor<T>,
        centered_r: Vec<T>,
        centered_i: Vec<T>,
    ) -> Result<Self> {
        let c = Self::new(kind, order, center, centered_r, centered_i)?;
        let cr = shift(&c.basis, &c.coeffs_r, center, SplitPhasor::zero());
        let ci = shift(&c.basis, &c.coeffs_i, center, SplitPhasor::zero());
        Self::new(kind, order, center, cr, ci)
    }

    /// Build from the partial-derivative tensor `∂^n A / ∂B_R^{n-k} ∂B_I^k`
    /// at `center`, listed in canonical monomial order.
    pub fn from_taylor_derivatives(
        kind: GlassKind,
        order: u32,
        center: SplitPhasor<T>,
        deriv_r: Vec<T>,
        deriv_i: Vec<T>,
    ) -> Result<Self> {
        let basis = MonomialBasis::new(order)?;
        let scale: Vec<T> = basis.exponents().iter().map(|&(er, ei)| factorial::<T>(er) * factorial::<T>(ei)).collect();
        if deriv_r.len() != scale.len() || deriv_i.len() != scale.len() {
            return Err(Error::InvalidParameter("derivative tensor length does not match order".into()));
        }
        let cr = deriv_r.iter().zip(&scale).map(|(d, s)| *d / *s).collect();
        let ci = deriv_i.iter().zip(&scale).map(|(d, s)| *d / *s).collect();
        Self::from_centered(kind, order, center, cr, ci)
    }

    pub fn with_domain(mut self, domain: Option<Domain<T>>) -> Self {
        self.domain = domain;
        self
    }

    pub fn with_center(mut self, center: SplitPhasor<T>) -> Self {
        self.center = center;
        self
    }

    pub fn kind(&self) -> GlassKind {
        self.kind
    }

    pub fn order(&self) -> u32 {
        self.basis.order()
    }

    pub fn basis(&self) -> &MonomialBasis {
        &self.basis
    }

    pub fn center(&self) -> SplitPhasor<T> {
        self.center
    }

    pub fn coeffs_r(&self) -> &[T] {
        &self.coeffs_r
    }

    pub fn coeffs_i(&self) -> &[T] {
        &self.coeffs_i
    }

    pub fn domain(&self) -> Option<&Domain<T>> {
        self.domain.as_ref()
    }

    pub fn is_degenerate(&self) -> bool {
        self.coeffs_r.iter().chain(&self.coeffs_i).all(|c| *c == T::zero())
    }

    /// Dependent pair `A` at independent pair `b`.
    pub fn evaluate(&self, b: SplitPhasor<T>) -> SplitPhasor<T> {
        let m = self.basis.evaluate(b, SplitPhasor::zero());
        let dot = |c: &[T]| c.iter().zip(&m).map(|(x, y)| *x * *y).sum::<T>();
        SplitPhasor::new(dot(&self.coeffs_r), dot(&self.coeffs_i))
    }

    /// `[[∂A_R/∂B_R, ∂A_R/∂B_I], [∂A_I/∂B_R, ∂A_I/∂B_I]]` by the
    /// exponent-shift rule.
    pub fn jacobian(&self, b: SplitPhasor<T>) -> Jacobian2<T> {
        let mut j = [[T::zero(); 2]; 2];
        for (k, &(er, ei)) in self.basis.exponents().iter().enumerate() {
            let d_r = if er == 0 { T::zero() } else { T::from_count(er as usize) * powu(b.re, er - 1) * powu(b.im, ei) };
            let d_i = if ei == 0 { T::zero() } else { T::from_count(ei as usize) * powu(b.re, er) * powu(b.im, ei - 1) };
            j[0][0] += self.coeffs_r[k] * d_r;
            j[0][1] += self.coeffs_r[k] * d_i;
            j[1][0] += self.coeffs_i[k] * d_r;
            j[1][1] += self.coeffs_i[k] * d_i;
        }
        j
    }

    /// Coefficients of monomials in `(B - at)`.
    pub fn centered_coefficients(&self, at: SplitPhasor<T>) -> (Vec<T>, Vec<T>) {
        (shift(&self.basis, &self.coeffs_r, SplitPhasor::zero(), at), shift(&self.basis, &self.coeffs_i, SplitPhasor::zero(), at))
    }

    /// Derivative tensor `∇A_C^{n,k}` at `at`, in canonical monomial order.
    pub fn taylor_derivatives(&self, at: SplitPhasor<T>) -> (Vec<T>, Vec<T>) {
        let (cr, ci) = self.centered_coefficients(at);
        let scale = |c: Vec<T>| {
            c.into_iter().zip(self.basis.exponents()).map(|(v, &(er, ei))| v * factorial::<T>(er) * factorial::<T>(ei)).collect()
        };
        (scale(cr), scale(ci))
    }

    /// Evaluate through the full two-dimensional Taylor sum
    /// `Σ_n 1/n! Σ_k C(n,k) ∇^{n,k} ΔR^{n-k} ΔI^k` about the stored center.
    pub fn evaluate_taylor(&self, b: SplitPhasor<T>) -> SplitPhasor<T> {
        let (dr, di) = self.taylor_derivatives(self.center);
        let (x, y) = (b.re - self.center.re, b.im - self.center.im);
        let mut out = SplitPhasor::zero();
        for n in 0..=self.order() {
            let inv_n = T::one() / factorial::<T>(n);
            for k in 0..=n {
                let idx = self.basis.index_of(n - k, k).expect("monomial in basis");
                let w = inv_n * binomial::<T>(n, k) * powu(x, n - k) * powu(y, k);
                out.re += w * dr[idx];
                out.im += w * di[idx];
            }
        }
        out
    }

    /// Same polynomial, expansion point moved to `center`.
    pub fn recentered(&self, center: SplitPhasor<T>) -> Self {
        let (cr, ci) = self.centered_coefficients(center);
        let mut t = Self::from_centered(self.kind, self.order(), center, cr, ci).expect("shape preserved by re-centering");
        t.domain = self.domain;
        t
    }

    /// First-order split-circuit model about `prev`, the previous iterate of
    /// the independent pair.
    pub fn stamp(&self, node: NodeId, prev: SplitPhasor<T>) -> GlassStamp<T> {
        let a0 = self.evaluate(prev);
        let jac = self.jacobian(prev);
        let lin = LinearizedStamp::from_expansion(node, prev, a0, jac);
        match self.kind {
            GlassKind::VoltageDependent => GlassStamp::Voltage(lin),
            GlassKind::CurrentDependent => {
                GlassStamp::Current(CurrentDependentStamp { node, resistance: lin.jac, hist: lin.hist })
            }
        }
    }
}
