use crate::error::{Error, Result};
use crate::fitting::records::MeasurementRecord;
use crate::fitting::validate::validate;
use crate::glass::{monomial_count, Domain, GlassKind, GlassTemplate, MonomialBasis};
use crate::linalg::{singular_values, DenseMatrix, QrFactorization};
use crate::phasor::SplitPhasor;
use crate::scalar::Scalar;

/// Columns whose largest entry is below this fraction of the largest design
/// entry carry no excitation.
const ZERO_COLUMN_RELATIVE: f64 = 1e-13;
/// Relative `|R_kk|` (unit-norm columns) below which the design is rank deficient.
const RANK_RELATIVE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CenterPolicy {
    Zero,
    DataMean,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig<T> {
    pub kind: GlassKind,
    pub order: u32,
    pub center_policy: CenterPolicy,
    /// Ridge strength `λ ≥ 0`, i.e. `min ‖A g - y‖² + λ ‖g‖²`.
    pub ridge: T,
    pub min_records: usize,
}

impl<T: Scalar> FitConfig<T> {
    /// Voltage-dependent, data-mean centered, no ridge, `min_records = M(N)`.
    pub fn new(order: u32) -> Self {
        Self {
            kind: GlassKind::VoltageDependent,
            order,
            center_policy: CenterPolicy::DataMean,
            ridge: T::zero(),
            min_records: monomial_count(order),
        }
    }

    pub fn validate(&self) -> Result<()> {
        MonomialBasis::new(self.order)?;
        let m = monomial_count(self.order);
        if self.min_records < m {
            return Err(Error::InvalidParameter(format!(
                "min_records {} is below the {m} coefficients of an order-{} template",
                self.min_records, self.order
            )));
        }
        if !(self.ridge >= T::zero() && self.ridge.is_finite()) {
            return Err(Error::InvalidParameter(format!("ridge must be finite and >= 0, got {}", self.ridge)));
        }
        Ok(())
    }
}

/// Polynomial design: one row per record, plus the two target columns.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix<T> {
    pub basis: MonomialBasis,
    pub center: SplitPhasor<T>,
    pub matrix: DenseMatrix<T>,
    pub target_r: Vec<T>,
    pub target_i: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport<T> {
    pub template: GlassTemplate<T>,
    pub rmse_r: T,
    pub rmse_i: T,
    pub max_abs_residual: T,
    /// 2-norm condition number of the centered design matrix over the
    /// identifiable columns.
    pub condition_number: T,
    pub n_records: usize,
    /// Monomials with no excitation in the data; their coefficients are
    /// unconstrained and set to zero.
    pub unidentifiable: Vec<(u32, u32)>,
}

fn center_of<T: Scalar>(points: &[SplitPhasor<T>], policy: CenterPolicy) -> SplitPhasor<T> {
    match policy {
        CenterPolicy::Zero => SplitPhasor::zero(),
        CenterPolicy::DataMean => {
            let n = T::from_count(points.len().max(1));
            let sum = points.iter().fold(SplitPhasor::zero(), |a, p| a + *p);
            sum.scale(T::one() / n)
        }
    }
}

pub fn build_design_matrix<T: Scalar>(records: &[MeasurementRecord<T>], config: &FitConfig<T>) -> Result<DesignMatrix<T>> {
    config.validate()?;
    if records.len() < config.min_records {
        return Err(Error::InsufficientRecords { found: records.len(), required: config.min_records });
    }
    for r in records {
        r.check()?;
    }
    let basis = MonomialBasis::new(config.order)?;
    let pairs: Vec<_> = records.iter().map(|r| r.split(config.kind)).collect();
    let b: Vec<_> = pairs.iter().map(|p| p.0).collect();
    let center = center_of(&b, config.center_policy);
    let rows: Vec<Vec<T>> = b.iter().map(|p| basis.evaluate(*p, center)).collect();
    Ok(DesignMatrix {
        matrix: DenseMatrix::from_rows(&rows),
        target_r: pairs.iter().map(|p| p.1.re).collect(),
        target_i: pairs.iter().map(|p| p.1.im).collect(),
        basis,
        center,
    })
}

/// Two independent linear least-squares problems (real and imaginary
/// dependent parts) over one shared design, solved by Householder QR on
/// unit-norm columns.
pub fn fit<T: Scalar>(records: &[MeasurementRecord<T>], config: &FitConfig<T>) -> Result<FitReport<T>> {
    let dm = build_design_matrix(records, config)?;
    let m = dm.basis.len();
    let scale_all = dm.matrix.max_abs().max(T::one());

    let mut active = Vec::new();
    let mut unidentifiable = Vec::new();
    for j in 0..m {
        let col_max = dm.matrix.column(j).iter().fold(T::zero(), |a, v| a.max(v.abs()));
        if col_max <= T::lit(ZERO_COLUMN_RELATIVE) * scale_all {
            unidentifiable.push(dm.basis.exponents()[j]);
        } else {
            active.push(j);
        }
    }

    let a = dm.matrix.select_columns(&active);
    let norms: Vec<T> = (0..active.len()).map(|j| a.column(j).iter().map(|v| *v * *v).sum::<T>().sqrt()).collect();
    let rows = a.rows();
    let extra = if config.ridge > T::zero() { active.len() } else { 0 };
    let mut scaled = DenseMatrix::zeros(rows + extra, active.len());
    for i in 0..rows {
        for j in 0..active.len() {
            scaled[(i, j)] = a[(i, j)] / norms[j];
        }
    }
    let sqrt_ridge = config.ridge.sqrt();
    for j in 0..extra {
        scaled[(rows + j, j)] = sqrt_ridge / norms[j];
    }

    let qr = QrFactorization::factor(&scaled);
    let rdiag = qr.r_diagonal();
    let rmax = rdiag.iter().fold(T::zero(), |x, v| x.max(*v));
    let weak: Vec<(u32, u32)> = rdiag
        .iter()
        .zip(&active)
        .filter(|(r, _)| **r <= T::lit(RANK_RELATIVE) * rmax)
        .map(|(_, &j)| dm.basis.exponents()[j])
        .collect();
    if !weak.is_empty() {
        return Err(Error::DegenerateExcitation { monomials: weak });
    }

    let mut rhs_r = dm.target_r.clone();
    let mut rhs_i = dm.target_i.clone();
    rhs_r.resize(rows + extra, T::zero());
    rhs_i.resize(rows + extra, T::zero());
    let sol_r = qr.solve_least_squares(&rhs_r);
    let sol_i = qr.solve_least_squares(&rhs_i);

    let mut centered_r = vec![T::zero(); m];
    let mut centered_i = vec![T::zero(); m];
    for (k, &j) in active.iter().enumerate() {
        centered_r[j] = sol_r[k] / norms[k];
        centered_i[j] = sol_i[k] / norms[k];
    }

    // Condition number of the unscaled design: singular values of R D.
    let mut r = qr.r();
    if extra == 0 {
        for i in 0..r.rows() {
            for j in 0..r.cols() {
                r[(i, j)] *= norms[j];
            }
        }
    } else {
        r = a.clone();
    }
    let sv = singular_values(&r);
    let condition_number = match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if lo > T::zero() => (hi / lo).max(T::one()),
        (Some(_), Some(_)) => T::infinity(),
        _ => T::one(),
    };

    let domain = Domain::from_points(records.iter().map(|r| r.split(config.kind).0));
    let template =
        GlassTemplate::from_centered(config.kind, config.order, dm.center, centered_r, centered_i)?.with_domain(domain);
    let report = validate(&template, records);
    Ok(FitReport {
        template,
        rmse_r: report.rmse_r,
        rmse_i: report.rmse_i,
        max_abs_residual: report.max_abs_residual,
        condition_number,
        n_records: records.len(),
        unidentifiable,
    })
}

/// One fit per distinct tag value (untagged records form their own group),
/// in order of first appearance.
pub fn fit_per_tag<T: Scalar>(records: &[MeasurementRecord<T>], config: &FitConfig<T>) -> Result<Vec<(Option<T>, FitReport<T>)>> {
    let mut tags: Vec<Option<T>> = Vec::new();
    for r in records {
        if !tags.contains(&r.tag) {
            tags.push(r.tag);
        }
    }
    tags.into_iter()
        .map(|t| {
            let group: Vec<_> = records.iter().filter(|r| r.tag == t).copied().collect();
            Ok((t, fit(&group, config)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(vr: f64, vi: f64, ir: f64, ii: f64) -> MeasurementRecord<f64> {
        MeasurementRecord::new(SplitPhasor::new(vr, vi), SplitPhasor::new(ir, ii)).unwrap()
    }

    fn zero_center(order: u32) -> FitConfig<f64> {
        FitConfig { center_policy: CenterPolicy::Zero, ..FitConfig::new(order) }
    }

    #[test]
    fn order_zero_design_is_all_ones() {
        let recs = [rec(1.0, 2.0, 0.0, 0.0), rec(-3.0, 0.5, 1.0, 1.0)];
        let dm = build_design_matrix(&recs, &zero_center(0)).unwrap();
        assert_eq!(dm.matrix, DenseMatrix::from_rows(&[vec![1.0], vec![1.0]]));
    }

    #[test]
    fn order_one_rows() {
        let recs = [rec(1.0, 0.0, 0.0, 0.0), rec(0.0, 1.0, 0.0, 0.0), rec(1.0, 1.0, 0.0, 0.0)];
        let dm = build_design_matrix(&recs, &zero_center(1)).unwrap();
        assert_eq!(dm.matrix.row(0), &[1.0, 1.0, 0.0]);
        assert_eq!(dm.matrix.row(1), &[1.0, 0.0, 1.0]);
    }

    #[test]
    fn duplicates_are_kept() {
        let recs = [rec(1.0, 0.0, 0.0, 0.0), rec(1.0, 0.0, 0.0, 0.0), rec(0.0, 1.0, 0.0, 0.0)];
        let dm = build_design_matrix(&recs, &zero_center(1)).unwrap();
        assert_eq!(dm.matrix.rows(), 3);
        assert_eq!(dm.matrix.row(0), dm.matrix.row(1));
    }

    #[test]
    fn too_few_records() {
        let recs = [rec(1.0, 0.0, 0.0, 0.0)];
        assert_eq!(
            build_design_matrix(&recs, &zero_center(1)).unwrap_err(),
            Error::InsufficientRecords { found: 1, required: 3 }
        );
    }

    #[test]
    fn collinear_excitation_is_degenerate() {
        // V_R == V_I on every record.
        let recs: Vec<_> = (0..6).map(|k| rec(k as f64, k as f64, 1.0, 0.0)).collect();
        match fit(&recs, &zero_center(1)) {
            Err(Error::DegenerateExcitation { monomials }) => assert!(!monomials.is_empty()),
            other => panic!("expected degenerate excitation, got {other:?}"),
        }
        // Ridge regularizes it.
        let cfg = FitConfig { ridge: 1e-3, ..zero_center(1) };
        assert!(fit(&recs, &cfg).is_ok());
    }

    #[test]
    fn per_tag_groups() {
        let mut recs = Vec::new();
        for (tag, slope) in [(10.0, 2.0), (20.0, 3.0)] {
            for k in 0..5 {
                let v = 1.0 + k as f64 * 0.1;
                recs.push(rec(v, 0.0, slope * v, -v).with_tag(Some(tag)));
            }
        }
        let fits = fit_per_tag(&recs, &FitConfig::new(1)).unwrap();
        assert_eq!(fits.len(), 2);
        assert!((fits[1].1.template.coeffs_r()[1] - 3.0).abs() < 1e-10);
        assert_eq!(fits[1].1.unidentifiable, vec![(0, 1)]);
    }
}
