use nalgebra::DMatrix;

use super::{LinalgError, Matrix, Scalar};

/// Reduced row-echelon form together with rank and pivot columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Rref<T> {
    pub reduced: Matrix<T>,
    pub rank: usize,
    pub pivot_cols: Vec<usize>,
}

/// Gauss-Jordan elimination. Pivot search scans columns left to right and
/// takes the lowest-index nonzero row, so the output is deterministic; over an
/// exact field it is the unique RREF.
pub fn rref<T: Scalar>(m: &Matrix<T>) -> Rref<T> {
    let mut a = m.clone();
    let (rows, cols) = a.shape();
    let mut pivot_cols = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !a[(i, c)].is_zero()) else {
            continue;
        };
        swap_rows(&mut a, r, p);
        let inv = T::one() / a[(r, c)].clone();
        for x in a.row_mut(r).iter_mut().skip(c) {
            if !x.is_zero() {
                *x = x.clone() * inv.clone();
            }
        }
        let pivot_row = a.row(r).to_vec();
        for i in (0..rows).filter(|&i| i != r) {
            let f = a[(i, c)].clone();
            if f.is_zero() {
                continue;
            }
            for (x, p) in a.row_mut(i).iter_mut().zip(&pivot_row).skip(c) {
                if !p.is_zero() {
                    *x = x.clone() - f.clone() * p.clone();
                }
            }
        }
        pivot_cols.push(c);
        r += 1;
    }
    Rref { reduced: a, rank: r, pivot_cols }
}

fn swap_rows<T: Scalar>(a: &mut Matrix<T>, i: usize, j: usize) {
    if i == j {
        return;
    }
    for c in 0..a.cols() {
        let tmp = a[(i, c)].clone();
        a[(i, c)] = a[(j, c)].clone();
        a[(j, c)] = tmp;
    }
}

pub fn rank<T: Scalar>(m: &Matrix<T>) -> usize {
    RowBasis::from_matrix(m).rank()
}

/// Exact test `rank([m; v]) == rank(m)`.
pub fn rowspace_contains<T: Scalar>(m: &Matrix<T>, v: &[T]) -> Result<bool, LinalgError> {
    if v.len() != m.cols() {
        return Err(LinalgError::DimensionMismatch {
            op: "rowspace_contains",
            left: m.shape(),
            right: (1, v.len()),
        });
    }
    Ok(RowBasis::from_matrix(m).contains(v))
}

/// Basis of `{x : m x = 0}`, one vector per free column, in column order.
pub fn nullspace<T: Scalar>(m: &Matrix<T>) -> Vec<Vec<T>> {
    let Rref { reduced, pivot_cols, .. } = rref(m);
    let cols = m.cols();
    let free = (0..cols).filter(|c| !pivot_cols.contains(c));
    free.map(|f| {
        let mut v = vec![T::zero(); cols];
        v[f] = T::one();
        for (r, &p) in pivot_cols.iter().enumerate() {
            v[p] = -reduced[(r, f)].clone();
        }
        v
    })
    .collect()
}

/// The left eigenvector for eigenvalue 1, scaled to sum to one.
///
/// Fails unless the left unit eigenspace is exactly one-dimensional.
pub fn left_eigenvector_unit<T: Scalar>(a: &Matrix<T>) -> Result<Vec<T>, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare(a.rows(), a.cols()));
    }
    let mut shifted = a.transpose();
    for i in 0..a.rows() {
        shifted[(i, i)] = shifted[(i, i)].clone() - T::one();
    }
    let mut basis = nullspace(&shifted);
    match basis.len() {
        0 => Err(LinalgError::NoUnitEigenvalue),
        1 => {
            let v = basis.pop().expect("one basis vector");
            let total = v.iter().fold(T::zero(), |acc, x| acc + x.clone());
            if total.is_zero() {
                return Err(LinalgError::ZeroSumEigenvector);
            }
            Ok(v.into_iter().map(|x| x / total.clone()).collect())
        }
        k => Err(LinalgError::UnitEigenvalueNotSimple(k)),
    }
}

/// Eigenvalue magnitudes in descending order, computed in double precision.
pub fn eigen_magnitudes<T: Scalar>(a: &Matrix<T>) -> Vec<f64> {
    assert!(a.is_square(), "eigen_magnitudes needs a square matrix");
    let n = a.rows();
    let f = a.to_f64();
    let m = DMatrix::from_row_slice(n, n, f.data());
    let mut mags: Vec<f64> = m.complex_eigenvalues().iter().map(|z| z.norm()).collect();
    mags.sort_by(|x, y| y.total_cmp(x));
    mags
}

/// Incrementally maintained basis of a row space, kept fully reduced:
/// each basis row has a leading one at its pivot and zeros at every other pivot.
#[derive(Debug, Clone)]
pub struct RowBasis<T> {
    cols: usize,
    rows: Vec<Vec<T>>,
    pivots: Vec<usize>,
}

impl<T: Scalar> RowBasis<T> {
    pub fn new(cols: usize) -> Self {
        Self { cols, rows: Vec::new(), pivots: Vec::new() }
    }

    pub fn from_matrix(m: &Matrix<T>) -> Self {
        let mut b = Self::new(m.cols());
        for r in 0..m.rows() {
            b.insert(m.row(r));
        }
        b
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn is_full(&self) -> bool {
        self.rows.len() == self.cols
    }

    /// Residual of `v` after eliminating every basis pivot.
    pub fn reduce(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.cols, "row length mismatch");
        let mut v = v.to_vec();
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            let f = v[p].clone();
            if f.is_zero() {
                continue;
            }
            for (x, b) in v.iter_mut().zip(row) {
                if !b.is_zero() {
                    *x = x.clone() - f.clone() * b.clone();
                }
            }
        }
        v
    }

    pub fn contains(&self, v: &[T]) -> bool {
        self.is_full() || self.reduce(v).iter().all(|x| x.is_zero())
    }

    /// Adds `v` to the span. Returns whether the rank grew.
    pub fn insert(&mut self, v: &[T]) -> bool {
        if self.is_full() {
            return false;
        }
        let mut r = self.reduce(v);
        let Some(p) = r.iter().position(|x| !x.is_zero()) else {
            return false;
        };
        let inv = T::one() / r[p].clone();
        for x in r.iter_mut().filter(|x| !x.is_zero()) {
            *x = x.clone() * inv.clone();
        }
        for row in &mut self.rows {
            let f = row[p].clone();
            if f.is_zero() {
                continue;
            }
            for (x, b) in row.iter_mut().zip(&r) {
                if !b.is_zero() {
                    *x = x.clone() - f.clone() * b.clone();
                }
            }
        }
        self.rows.push(r);
        self.pivots.push(p);
        true
    }

    pub fn basis_rows(&self) -> &[Vec<T>] {
        &self.rows
    }

    /// The basis sorted by pivot: the nonzero rows of the RREF.
    pub fn to_rref_rows(&self) -> Vec<Vec<T>> {
        let mut idx: Vec<usize> = (0..self.rows.len()).collect();
        idx.sort_by_key(|&i| self.pivots[i]);
        idx.into_iter().map(|i| self.rows[i].clone()).collect()
    }

    pub fn same_span(&self, other: &Self) -> bool {
        self.cols == other.cols
            && self.rank() == other.rank()
            && other.rows.iter().all(|r| self.contains(r))
    }
}
