//! Dense matrices over an exact or floating scalar, with row reduction.
//!
//! Every rank and membership decision in the crate is made over [`Rational`];
//! the float instantiation exists for simulation and diagnostics only.

mod rational;
mod reduce;

use std::fmt;
use std::ops::{Index, IndexMut};

use num_traits::{Num, Signed, ToPrimitive};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use rational::{
    best_approximation, format_rational, int, is_canonical, parse_decimal, parse_lenient,
    parse_rational, ratio, rationalize, serde_rational, serde_rational_vec,
    serde_rational_vec_opt, to_f64, Fmt, ParseRationalError, ParsedRational, Rational,
};
pub use reduce::{
    eigen_magnitudes, left_eigenvector_unit, nullspace, rank, rowspace_contains, rref, RowBasis,
    Rref,
};

/// Field-like scalar the linear algebra runs over.
pub trait Scalar:
    Clone + fmt::Debug + PartialOrd + Num + Signed + ToPrimitive + Send + Sync + 'static
{
}

impl<T> Scalar for T where
    T: Clone + fmt::Debug + PartialOrd + Num + Signed + ToPrimitive + Send + Sync + 'static
{
}

pub type RationalMatrix = Matrix<Rational>;
pub type RationalVector = Vec<Rational>;
pub type FloatMatrix = Matrix<f64>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LinalgError {
    #[error("matrix must have at least one row and one column")]
    Empty,
    #[error("expected {expected} entries, got {got}")]
    DataLength { expected: usize, got: usize },
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    DimensionMismatch { op: &'static str, left: (usize, usize), right: (usize, usize) },
    #[error("matrix is not square ({0}x{1})")]
    NotSquare(usize, usize),
    #[error("no unit eigenvalue")]
    NoUnitEigenvalue,
    #[error("eigenvalue 1 not simple for left eigenspace (dimension {0})")]
    UnitEigenvalueNotSimple(usize),
    #[error("unit left eigenvector sums to zero and cannot be normalized")]
    ZeroSumEigenvector,
}

/// Row-major dense matrix. `data.len() == rows * cols` always.
#[derive(Clone, PartialEq, Eq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self, LinalgError> {
        if rows == 0 || cols == 0 {
            return Err(LinalgError::Empty);
        }
        if data.len() != rows * cols {
            return Err(LinalgError::DataLength { expected: rows * cols, got: data.len() });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self, LinalgError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|row| row.len() != c) {
            return Err(LinalgError::DataLength { expected: c, got: bad.len() });
        }
        Self::new(r, c, rows.into_iter().flatten().collect())
    }

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

    /// Row selector: row r has a single one in column `idx[r]`.
    pub fn selector(idx: &[usize], cols: usize) -> Self {
        let mut m = Self::zeros(idx.len(), cols);
        for (r, &c) in idx.iter().enumerate() {
            m[(r, c)] = T::one();
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn col(&self, c: usize) -> Vec<T> {
        (0..self.rows).map(|r| self[(r, c)].clone()).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t[(c, r)] = self[(r, c)].clone();
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Result<Self, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch {
                op: "matmul",
                left: self.shape(),
                right: other.shape(),
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(r, k)];
                if a.is_zero() {
                    continue;
                }
                for c in 0..other.cols {
                    let b = &other[(k, c)];
                    if !b.is_zero() {
                        out[(r, c)] = out[(r, c)].clone() + a.clone() * b.clone();
                    }
                }
            }
        }
        Ok(out)
    }

    /// `self * x` for a column vector.
    pub fn mul_vec(&self, x: &[T]) -> Result<Vec<T>, LinalgError> {
        if x.len() != self.cols {
            return Err(LinalgError::DimensionMismatch {
                op: "mul_vec",
                left: self.shape(),
                right: (x.len(), 1),
            });
        }
        Ok((0..self.rows).map(|r| dot(self.row(r), x)).collect())
    }

    /// `vᵀ * self` for a row vector.
    pub fn vec_mul(&self, v: &[T]) -> Result<Vec<T>, LinalgError> {
        if v.len() != self.rows {
            return Err(LinalgError::DimensionMismatch {
                op: "vec_mul",
                left: (1, v.len()),
                right: self.shape(),
            });
        }
        let mut out = vec![T::zero(); self.cols];
        for (r, vr) in v.iter().enumerate() {
            if vr.is_zero() {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(r)) {
                if !a.is_zero() {
                    *o = o.clone() + vr.clone() * a.clone();
                }
            }
        }
        Ok(out)
    }

    pub fn vstack(&self, other: &Self) -> Result<Self, LinalgError> {
        if self.cols != other.cols {
            return Err(LinalgError::DimensionMismatch {
                op: "vstack",
                left: self.shape(),
                right: other.shape(),
            });
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Self { rows: self.rows + other.rows, cols: self.cols, data })
    }

    pub fn push_row(&mut self, row: &[T]) -> Result<(), LinalgError> {
        if row.len() != self.cols {
            return Err(LinalgError::DimensionMismatch {
                op: "push_row",
                left: self.shape(),
                right: (1, row.len()),
            });
        }
        self.data.extend_from_slice(row);
        self.rows += 1;
        Ok(())
    }

    pub fn submatrix(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Self {
        let mut m = Self::zeros(rows.len(), cols.len());
        for (i, r) in rows.clone().enumerate() {
            for (j, c) in cols.clone().enumerate() {
                m[(i, j)] = self[(r, c)].clone();
            }
        }
        m
    }

    pub fn row_sums(&self) -> Vec<T> {
        (0..self.rows)
            .map(|r| self.row(r).iter().fold(T::zero(), |acc, x| if x.is_zero() { acc } else { acc + x.clone() }))
            .collect()
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Matrix<U> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    pub fn to_f64(&self) -> Matrix<f64> {
        self.map(|x| x.to_f64().unwrap_or(f64::NAN))
    }

    /// Divides each row by its sum; rows summing to zero are left untouched.
    pub fn normalize_rows(&self) -> Self {
        let mut out = self.clone();
        for (r, s) in self.row_sums().into_iter().enumerate() {
            if s.is_zero() {
                continue;
            }
            for x in out.row_mut(r) {
                if !x.is_zero() {
                    *x = x.clone() / s.clone();
                }
            }
        }
        out
    }

    pub fn nonzero(&self, r: usize, c: usize) -> bool {
        !self[(r, c)].is_zero()
    }
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| {
        if x.is_zero() || y.is_zero() {
            acc
        } else {
            acc + x.clone() * y.clone()
        }
    })
}

/// Canonical basis vector `e_j` of length `n`.
pub fn unit_vector<T: Scalar>(n: usize, j: usize) -> Vec<T> {
    let mut v = vec![T::zero(); n];
    v[j] = T::one();
    v
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (r, c): (usize, usize)) -> &T {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut T {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

impl<T: fmt::Debug> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", &self.data[r * self.cols..(r + 1) * self.cols])?;
        }
        write!(f, "]")
    }
}

impl fmt::Display for Matrix<Rational> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows {
            let cells: Vec<String> = self.row(r).iter().map(format_rational).collect();
            writeln!(f, "[{}]", cells.join(", "))?;
        }
        Ok(())
    }
}

// Rational matrices serialize as a list of rows of "p/q" strings.
impl Serialize for Matrix<Rational> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<String>> =
            (0..self.rows).map(|r| self.row(r).iter().map(format_rational).collect()).collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Matrix<Rational> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = Vec::<Vec<String>>::deserialize(d)?;
        let rows = raw
            .iter()
            .map(|row| row.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(serde::de::Error::custom)?;
        Matrix::from_rows(rows).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(rows: &[&[(i64, i64)]]) -> RationalMatrix {
        Matrix::from_rows(rows.iter().map(|r| r.iter().map(|&(n, d)| ratio(n, d)).collect()).collect())
            .unwrap()
    }

    #[test]
    fn construction_rejects_empty_and_ragged() {
        assert_eq!(Matrix::<f64>::new(0, 3, vec![]), Err(LinalgError::Empty));
        assert!(matches!(Matrix::<f64>::new(2, 2, vec![1.0; 3]), Err(LinalgError::DataLength { .. })));
        assert!(Matrix::from_rows(vec![vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn matmul_and_vector_products_agree() {
        let a = q(&[&[(1, 2), (1, 3)], &[(0, 1), (2, 1)]]);
        let x = vec![ratio(3, 1), ratio(-1, 1)];
        let col = Matrix::new(2, 1, x.clone()).unwrap();
        let ax = a.matmul(&col).unwrap();
        assert_eq!(ax.col(0), a.mul_vec(&x).unwrap());
        assert_eq!(a.mul_vec(&x).unwrap(), vec![ratio(7, 6), ratio(-2, 1)]);
        assert_eq!(a.vec_mul(&x).unwrap(), a.transpose().mul_vec(&x).unwrap());
        assert!(a.matmul(&Matrix::zeros(3, 1)).is_err());
    }

    #[test]
    fn normalize_rows_yields_unit_sums() {
        let a = q(&[&[(1, 1), (2, 1), (1, 1)], &[(0, 1), (0, 1), (0, 1)], &[(1, 3), (0, 1), (1, 3)]]);
        let n = a.normalize_rows();
        assert_eq!(n.row_sums(), vec![int(1), int(0), int(1)]);
        assert_eq!(n[(0, 1)], ratio(1, 2));
    }

    #[test]
    fn json_round_trip() {
        let a = q(&[&[(1, 5), (2, 5)], &[(-1, 1), (0, 1)]]);
        let s = serde_json::to_string(&a).unwrap();
        assert_eq!(s, r#"[["1/5","2/5"],["-1","0"]]"#);
        let b: RationalMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn generic_over_float_and_rational() {
        let f: Matrix<f32> = Matrix::identity(3);
        assert_eq!(f.mul_vec(&[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);
        let r: RationalMatrix = Matrix::identity(2);
        assert_eq!(r.to_f64(), Matrix::<f64>::identity(2));
    }
}
