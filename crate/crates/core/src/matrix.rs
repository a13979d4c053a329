//! Dense matrices of variables or reals, matrix products built from
//! single-node dot products, and the log absolute determinant.

use crate::arena::Region;
use crate::error::{AdError, Result};
use crate::reductions::precomputed;
use crate::tape::{Rule, Tape};
use crate::var::{ValueOf, Var};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T> Matrix<T> {
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(AdError::EmptyInput { op: "matrix" });
        }
        if data.len() != rows * cols {
            return Err(AdError::Dimension {
                op: "matrix",
                lhs: rows * cols,
                rhs: data.len(),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }
}

impl<T: Clone> Matrix<T> {
    pub fn transpose(&self) -> Matrix<T> {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }
}

impl<T: ValueOf> Matrix<T> {
    pub fn values(&self) -> Matrix<f64> {
        self.map(|x| x.value_of())
    }
}

impl Matrix<f64> {
    pub fn identity(n: usize) -> Self {
        Matrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }
}

fn check_inner(op: &'static str, a_cols: usize, b_rows: usize) -> Result<()> {
    if a_cols != b_rows {
        return Err(AdError::Dimension {
            op,
            lhs: a_cols,
            rhs: b_rows,
        });
    }
    Ok(())
}

fn tape_of<'t>(m: &Matrix<Var<'t>>) -> &'t Tape {
    let first = m.data[0];
    for v in &m.data[1..] {
        first.check_tape(*v);
    }
    first.tape()
}

/// Plain-value matrix product.
pub fn multiply_values(a: &Matrix<f64>, b: &Matrix<f64>) -> Result<Matrix<f64>> {
    check_inner("multiply", a.cols, b.rows)?;
    Ok(Matrix::from_fn(a.rows, b.cols, |i, j| {
        (0..a.cols).map(|k| a.get(i, k) * b.get(k, j)).sum()
    }))
}

/// Product of two variable matrices; one dot-product node per entry.
///
/// The operand arrays for each row of `a` and each column of `b` are
/// written to the arena once and shared by every entry that uses them.
pub fn multiply<'t>(a: &Matrix<Var<'t>>, b: &Matrix<Var<'t>>) -> Result<Matrix<Var<'t>>> {
    check_inner("multiply", a.cols, b.rows)?;
    let tape = tape_of(a);
    tape_of(b).check_same(tape);
    let av = a.values();
    let bv = b.values();
    let mut inner = tape.inner_mut();
    let row_regions: Vec<Region> = (0..a.rows)
        .map(|i| inner.alloc_ids(a.cols, a.row(i).iter().map(|x| x.id().index())))
        .collect();
    let col_regions: Vec<Region> = (0..b.cols)
        .map(|j| inner.alloc_ids(b.rows, (0..b.rows).map(|k| b.get(k, j).id().index())))
        .collect();
    let mut ids = Vec::with_capacity(a.rows * b.cols);
    for (i, &row) in row_regions.iter().enumerate() {
        for (j, &col) in col_regions.iter().enumerate() {
            let value = (0..a.cols).map(|k| av.get(i, k) * bv.get(k, j)).sum();
            ids.push(inner.push_regions(value, Rule::Dot, row, col));
        }
    }
    drop(inner);
    Ok(Matrix {
        rows: a.rows,
        cols: b.cols,
        data: ids.into_iter().map(|id| tape.var(id)).collect(),
    })
}

/// Product of a variable matrix and a constant matrix.
pub fn multiply_vd<'t>(a: &Matrix<Var<'t>>, b: &Matrix<f64>) -> Result<Matrix<Var<'t>>> {
    check_inner("multiply_vd", a.cols, b.rows)?;
    let tape = tape_of(a);
    let av = a.values();
    let mut inner = tape.inner_mut();
    let row_regions: Vec<Region> = (0..a.rows)
        .map(|i| inner.alloc_ids(a.cols, a.row(i).iter().map(|x| x.id().index())))
        .collect();
    let col_regions: Vec<Region> = (0..b.cols)
        .map(|j| inner.alloc_reals(b.rows, (0..b.rows).map(|k| *b.get(k, j))))
        .collect();
    let mut ids = Vec::with_capacity(a.rows * b.cols);
    for (i, &row) in row_regions.iter().enumerate() {
        for (j, &col) in col_regions.iter().enumerate() {
            let value = (0..a.cols).map(|k| av.get(i, k) * b.get(k, j)).sum();
            ids.push(inner.push_regions(value, Rule::DotScalar, row, col));
        }
    }
    drop(inner);
    Ok(Matrix {
        rows: a.rows,
        cols: b.cols,
        data: ids.into_iter().map(|id| tape.var(id)).collect(),
    })
}

/// Product of a constant matrix and a variable matrix.
pub fn multiply_dv<'t>(a: &Matrix<f64>, b: &Matrix<Var<'t>>) -> Result<Matrix<Var<'t>>> {
    check_inner("multiply_dv", a.cols, b.rows)?;
    let tape = tape_of(b);
    let bv = b.values();
    let mut inner = tape.inner_mut();
    let row_regions: Vec<Region> = (0..a.rows)
        .map(|i| inner.alloc_reals(a.cols, a.row(i).iter().copied()))
        .collect();
    let col_regions: Vec<Region> = (0..b.cols)
        .map(|j| inner.alloc_ids(b.rows, (0..b.rows).map(|k| b.get(k, j).id().index())))
        .collect();
    let mut ids = Vec::with_capacity(a.rows * b.cols);
    for (i, &row) in row_regions.iter().enumerate() {
        for (j, &col) in col_regions.iter().enumerate() {
            let value = (0..a.cols).map(|k| a.get(i, k) * bv.get(k, j)).sum();
            ids.push(inner.push_regions(value, Rule::DotScalar, col, row));
        }
    }
    drop(inner);
    Ok(Matrix {
        rows: a.rows,
        cols: b.cols,
        data: ids.into_iter().map(|id| tape.var(id)).collect(),
    })
}

/// `a·aᵀ`, sharing one operand array per row of `a` for both factors.
pub fn multiply_self_transpose<'t>(a: &Matrix<Var<'t>>) -> Matrix<Var<'t>> {
    let tape = tape_of(a);
    let av = a.values();
    let mut inner = tape.inner_mut();
    let row_regions: Vec<Region> = (0..a.rows)
        .map(|i| inner.alloc_ids(a.cols, a.row(i).iter().map(|x| x.id().index())))
        .collect();
    let mut ids = Vec::with_capacity(a.rows * a.rows);
    for i in 0..a.rows {
        for j in 0..a.rows {
            let value = av.row(i).iter().zip(av.row(j)).map(|(x, y)| x * y).sum();
            ids.push(inner.push_regions(value, Rule::Dot, row_regions[i], row_regions[j]));
        }
    }
    drop(inner);
    Matrix {
        rows: a.rows,
        cols: a.rows,
        data: ids.into_iter().map(|id| tape.var(id)).collect(),
    }
}

trait SameTape {
    fn check_same(&self, other: &Tape);
}

impl SameTape for Tape {
    fn check_same(&self, other: &Tape) {
        assert!(
            std::ptr::eq(self, other),
            "operands belong to different tapes"
        );
    }
}

/// Householder QR with column pivoting of a square value matrix,
/// `A·P = Q·R`.
#[derive(Debug, Clone)]
pub struct ColPivQr {
    n: usize,
    // R in the upper triangle; reflectors are kept separately
    r: Vec<f64>,
    reflectors: Vec<(Vec<f64>, f64)>,
    perm: Vec<usize>,
}

impl ColPivQr {
    pub fn new(m: &Matrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(AdError::Dimension {
                op: "qr",
                lhs: m.rows,
                rhs: m.cols,
            });
        }
        let n = m.rows;
        let mut a = m.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut reflectors = Vec::with_capacity(n);
        for k in 0..n {
            let col_norm =
                |a: &[f64], j: usize| (k..n).map(|i| a[i * n + j] * a[i * n + j]).sum::<f64>();
            let pivot = (k..n)
                .max_by(|&x, &y| col_norm(&a, x).total_cmp(&col_norm(&a, y)))
                .unwrap_or(k);
            if pivot != k {
                for i in 0..n {
                    a.swap(i * n + k, i * n + pivot);
                }
                perm.swap(k, pivot);
            }
            let mut v: Vec<f64> = (k..n).map(|i| a[i * n + k]).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                reflectors.push((v, 0.0));
                continue;
            }
            let alpha = if v[0] > 0.0 { -norm } else { norm };
            v[0] -= alpha;
            let vtv: f64 = v.iter().map(|x| x * x).sum();
            let beta = if vtv == 0.0 { 0.0 } else { 2.0 / vtv };
            for j in k..n {
                let dot: f64 = v
                    .iter()
                    .enumerate()
                    .map(|(t, vt)| vt * a[(k + t) * n + j])
                    .sum();
                let s = beta * dot;
                for (t, vt) in v.iter().enumerate() {
                    a[(k + t) * n + j] -= s * vt;
                }
            }
            a[k * n + k] = alpha;
            for i in k + 1..n {
                a[i * n + k] = 0.0;
            }
            reflectors.push((v, beta));
        }
        Ok(ColPivQr {
            n,
            r: a,
            reflectors,
            perm,
        })
    }

    pub fn log_abs_determinant(&self) -> f64 {
        (0..self.n).map(|k| self.r[k * self.n + k].abs().ln()).sum()
    }

    fn apply_qt(&self, b: &mut [f64]) {
        for (k, (v, beta)) in self.reflectors.iter().enumerate() {
            let dot: f64 = v.iter().enumerate().map(|(t, vt)| vt * b[k + t]).sum();
            let s = beta * dot;
            for (t, vt) in v.iter().enumerate() {
                b[k + t] -= s * vt;
            }
        }
    }

    /// Solves `A·x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut z = b.to_vec();
        self.apply_qt(&mut z);
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.r[i * n + j] * z[j]).sum();
            z[i] = (z[i] - s) / self.r[i * n + i];
        }
        let mut x = vec![0.0; n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = z[i];
        }
        x
    }

    pub fn inverse(&self) -> Matrix<f64> {
        let n = self.n;
        let mut inv = vec![0.0; n * n];
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|x| *x = 0.0);
            e[j] = 1.0;
            for (i, x) in self.solve(&e).into_iter().enumerate() {
                inv[i * n + j] = x;
            }
        }
        Matrix {
            rows: n,
            cols: n,
            data: inv,
        }
    }
}

/// `log|det m|` as one precomputed node whose partials are the entries of
/// `(m⁻¹)ᵀ`, in the same row-major order as `m`.
pub fn log_determinant<'t>(m: &Matrix<Var<'t>>) -> Result<Var<'t>> {
    if !m.is_square() {
        return Err(AdError::Dimension {
            op: "log_determinant",
            lhs: m.rows,
            rhs: m.cols,
        });
    }
    let tape = tape_of(m);
    let qr = ColPivQr::new(&m.values())?;
    let value = qr.log_abs_determinant();
    let inv_t = qr.inverse().transpose();
    precomputed(tape, value, &m.data, &inv_t.data)
}
