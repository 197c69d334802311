//! Small dense factorizations: LU with partial pivoting for the Newton
//! systems, Householder QR for least squares, and one-sided Jacobi for
//! singular values.

use crate::scalar::Scalar;

/// Relative pivot threshold below which a matrix is declared singular.
pub const PIVOT_RELATIVE_THRESHOLD: f64 = 1e-12;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut m = Self::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            m.data[i * c..(i + 1) * c].copy_from_slice(row);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| self.row(i).iter().zip(x).map(|(&a, &b)| a * b).sum()).collect()
    }

    /// Keep only the listed columns, in order.
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let mut m = Self::zeros(self.rows, cols.len());
        for i in 0..self.rows {
            for (jj, &j) in cols.iter().enumerate() {
                m[(i, jj)] = self[(i, j)];
            }
        }
        m
    }

    pub fn iter_nonzero(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        self.data.iter().enumerate().filter(|(_, v)| **v != T::zero()).map(move |(k, v)| (k / self.cols, k % self.cols, *v))
    }
}

impl<T> std::ops::Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for DenseMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Pivot failure during LU: the column that could not be eliminated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularPivot {
    pub row: usize,
    pub pivot: f64,
    pub threshold: f64,
}

/// `P A = L U` with row partial pivoting, `L` unit lower triangular.
#[derive(Debug, Clone)]
pub struct LuFactorization<T> {
    lu: DenseMatrix<T>,
    perm: Vec<usize>,
}

impl<T: Scalar> LuFactorization<T> {
    pub fn factor(a: &DenseMatrix<T>) -> Result<Self, SingularPivot> {
        assert_eq!(a.rows, a.cols, "LU needs a square matrix");
        let n = a.rows;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let threshold = a.max_abs() * T::lit(PIVOT_RELATIVE_THRESHOLD);

        for k in 0..n {
            let (p, pmax) =
                (k..n).map(|i| (i, lu[(i, k)].abs())).fold((k, -T::one()), |best, c| if c.1 > best.1 { c } else { best });
            if !(pmax > threshold) {
                return Err(SingularPivot { row: perm[p], pivot: pmax.to_f64_lossy(), threshold: threshold.to_f64_lossy() });
            }
            if p != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = lu[(k, k)];
            for i in (k + 1)..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                if f != T::zero() {
                    for j in (k + 1)..n {
                        let u = lu[(k, j)];
                        lu[(i, j)] -= f * u;
                    }
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.perm.len();
        assert_eq!(b.len(), n);
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in (i + 1)..n {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s / self.lu[(i, i)];
        }
        x
    }
}

/// Householder QR of a tall matrix (`rows >= cols`), kept in compact form.
#[derive(Debug, Clone)]
pub struct QrFactorization<T> {
    qr: DenseMatrix<T>,
    /// Householder scalars `beta_k` with `H_k = I - beta_k v_k v_k^T`.
    betas: Vec<T>,
    /// Diagonal of R.
    diag: Vec<T>,
}

impl<T: Scalar> QrFactorization<T> {
    pub fn factor(a: &DenseMatrix<T>) -> Self {
        let (m, n) = (a.rows, a.cols);
        assert!(m >= n, "QR least squares needs rows >= cols");
        let mut qr = a.clone();
        let mut betas = vec![T::zero(); n];
        let mut diag = vec![T::zero(); n];
        for k in 0..n {
            let norm = (k..m).map(|i| qr[(i, k)] * qr[(i, k)]).sum::<T>().sqrt();
            if norm == T::zero() {
                continue;
            }
            let alpha = if qr[(k, k)] > T::zero() { -norm } else { norm };
            // v = x - alpha e1, stored in place; v_k kept in qr[(k,k)].
            qr[(k, k)] -= alpha;
            let vtv: T = (k..m).map(|i| qr[(i, k)] * qr[(i, k)]).sum();
            let beta = if vtv == T::zero() { T::zero() } else { T::lit(2.0) / vtv };
            for j in (k + 1)..n {
                let dot: T = (k..m).map(|i| qr[(i, k)] * qr[(i, j)]).sum();
                let f = beta * dot;
                for i in k..m {
                    let v = qr[(i, k)];
                    qr[(i, j)] -= f * v;
                }
            }
            betas[k] = beta;
            diag[k] = alpha;
        }
        Self { qr, betas, diag }
    }

    /// |R_kk| for each column.
    pub fn r_diagonal(&self) -> Vec<T> {
        self.diag.iter().map(|d| d.abs()).collect()
    }

    /// The upper-triangular factor as an `n x n` matrix.
    pub fn r(&self) -> DenseMatrix<T> {
        let n = self.qr.cols;
        let mut r = DenseMatrix::zeros(n, n);
        for i in 0..n {
            r[(i, i)] = self.diag[i];
            for j in (i + 1)..n {
                r[(i, j)] = self.qr[(i, j)];
            }
        }
        r
    }

    /// Minimizer of `||A x - b||_2`. Assumes full column rank.
    pub fn solve_least_squares(&self, b: &[T]) -> Vec<T> {
        let (m, n) = (self.qr.rows, self.qr.cols);
        assert_eq!(b.len(), m);
        let mut y = b.to_vec();
        for k in 0..n {
            let dot: T = (k..m).map(|i| self.qr[(i, k)] * y[i]).sum();
            let f = self.betas[k] * dot;
            for (i, yi) in y.iter_mut().enumerate().skip(k) {
                *yi -= f * self.qr[(i, k)];
            }
        }
        let mut x = vec![T::zero(); n];
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in (i + 1)..n {
                s -= self.qr[(i, j)] * x[j];
            }
            x[i] = s / self.diag[i];
        }
        x
    }
}

/// Singular values of a small matrix by one-sided Jacobi rotations, sorted descending.
pub fn singular_values<T: Scalar>(a: &DenseMatrix<T>) -> Vec<T> {
    let (m, n) = (a.rows, a.cols);
    let mut cols: Vec<Vec<T>> = (0..n).map(|j| a.column(j)).collect();
    let eps = T::epsilon();
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha: T = cols[p].iter().map(|x| *x * *x).sum();
                let beta: T = cols[q].iter().map(|x| *x * *x).sum();
                let gamma: T = cols[p].iter().zip(&cols[q]).map(|(x, y)| *x * *y).sum();
                if gamma == T::zero() || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let xp = cols[p][i];
                    let xq = cols[q][i];
                    cols[p][i] = c * xp - s * xq;
                    cols[q][i] = s * xp + c * xq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<T> = cols.iter().map(|c| c.iter().map(|x| *x * *x).sum::<T>().sqrt()).collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    sv
}
