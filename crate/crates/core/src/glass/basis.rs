use crate::error::{Error, Result};
use crate::phasor::SplitPhasor;
use crate::scalar::{powu, Scalar};

/// Highest supported Taylor order.
pub const MAX_ORDER: u32 = 6;

/// Number of monomials of total degree `<= order` in two variables.
pub fn monomial_count(order: u32) -> usize {
    let n = order as usize;
    (n + 1) * (n + 2) / 2
}

/// Exponent pairs `(e_R, e_I)` in canonical order.
///
/// Degrees 0..=2 read `1, B_R, B_I, B_R B_I, B_R², B_I²`. Each higher degree
/// `d` appends the pure powers `B_R^d, B_I^d` first and then the mixed terms
/// `B_R^{d-1} B_I, ..., B_R B_I^{d-1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonomialBasis {
    order: u32,
    exponents: Vec<(u32, u32)>,
}

impl MonomialBasis {
    pub fn new(order: u32) -> Result<Self> {
        if order > MAX_ORDER {
            return Err(Error::OrderTooHigh { order, max: MAX_ORDER });
        }
        let head = [(0, 0), (1, 0), (0, 1), (1, 1), (2, 0), (0, 2)];
        let mut exponents: Vec<(u32, u32)> = head[..monomial_count(order.min(2))].to_vec();
        for d in 3..=order {
            exponents.push((d, 0));
            exponents.push((0, d));
            exponents.extend((1..d).rev().map(|r| (r, d - r)));
        }
        Ok(Self { order, exponents })
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    pub fn exponents(&self) -> &[(u32, u32)] {
        &self.exponents
    }

    pub fn index_of(&self, e_r: u32, e_i: u32) -> Option<usize> {
        self.exponents.iter().position(|&e| e == (e_r, e_i))
    }

    /// Monomials of `b - center`.
    pub fn evaluate<T: Scalar>(&self, b: SplitPhasor<T>, center: SplitPhasor<T>) -> Vec<T> {
        let (dr, di) = (b.re - center.re, b.im - center.im);
        self.exponents.iter().map(|&(er, ei)| powu(dr, er) * powu(di, ei)).collect()
    }
}

/// Row of the polynomial design: `(B_R - B_R0)^e_R (B_I - B_I0)^e_I` per
/// canonical monomial.
pub fn basis_vector<T: Scalar>(order: u32, b: SplitPhasor<T>, center: SplitPhasor<T>) -> Result<Vec<T>> {
    Ok(MonomialBasis::new(order)?.evaluate(b, center))
}

/// Readable name for a monomial, e.g. `B_R^2*B_I`.
pub fn monomial_label(e_r: u32, e_i: u32) -> String {
    let part = |name: &str, e: u32| match e {
        0 => None,
        1 => Some(name.to_string()),
        _ => Some(format!("{name}^{e}")),
    };
    let parts: Vec<String> = [part("B_R", e_r), part("B_I", e_i)].into_iter().flatten().collect();
    if parts.is_empty() {
        "1".into()
    } else {
        parts.join("*")
    }
}
