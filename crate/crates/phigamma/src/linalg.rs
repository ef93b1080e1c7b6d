//! Dense matrices over a ring, with exact/precision-aware row reduction over scalar fields.

use std::fmt;

use crate::coefficients::{CoeffElement, CoeffRing, PivotQuality, Ring, Scalar};
use crate::error::{Error, Result};

/// A dense row-major matrix whose entries carry their own ring context.
#[derive(Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
    zero: T,
}

impl<T: Ring> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{}", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        Ok(())
    }
}

impl<T: Scalar> Matrix<T> {
    /// The zero matrix over a scalar field.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, T::zero())
    }

    /// The identity over a scalar field.
    pub fn identity(n: usize) -> Self {
        Self::identity_like(n, &T::zero())
    }

    /// Reduced row echelon form, returning the pivot columns.
    ///
    /// Pivots are chosen by minimal p-adic valuation (smallest size on the
    /// exact path); entries known to be zero are skipped and candidates with
    /// too little precision abort with [`Error::PivotAmbiguity`].
    pub fn rref(&mut self, p: u32) -> Result<Vec<usize>> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let mut best: Option<(usize, i64, bool)> = None;
            for i in r..self.rows {
                if let PivotQuality::Pivot { score, ambiguous } = self.get(i, c).pivot_quality(p) {
                    let better = match best {
                        None => true,
                        Some((_, s, amb)) => (amb && !ambiguous) || (amb == ambiguous && score < s),
                    };
                    if better {
                        best = Some((i, score, ambiguous));
                    }
                }
            }
            let Some((i, _, ambiguous)) = best else {
                continue;
            };
            if ambiguous {
                let digits = self.get(i, c).to_padic(p, 0).rel_precision().unwrap_or(0) as i64;
                return Err(Error::PivotAmbiguity {
                    relative_digits: digits,
                });
            }
            self.swap_rows(i, r);
            let inv = self.get(r, c).try_inverse()?;
            for j in 0..self.cols {
                let v = self.get(r, j).clone() * inv.clone();
                self.set(r, j, v);
            }
            self.set(r, c, T::one());
            for i2 in 0..self.rows {
                if i2 == r {
                    continue;
                }
                let f = self.get(i2, c).clone();
                if f.is_zero_elem() {
                    continue;
                }
                for j in 0..self.cols {
                    let v = self.get(i2, j).clone() - f.clone() * self.get(r, j).clone();
                    self.set(i2, j, v);
                }
                self.set(i2, c, T::zero());
            }
            pivots.push(c);
            r += 1;
        }
        Ok(pivots)
    }

    /// Rank.
    pub fn rank(&self, p: u32) -> Result<usize> {
        let mut m = self.clone();
        Ok(m.rref(p)?.len())
    }

    /// A basis of the right kernel `{x : self · x = 0}`.
    pub fn kernel(&self, p: u32) -> Result<Vec<Vec<T>>> {
        let mut m = self.clone();
        let pivots = m.rref(p)?;
        let mut basis = Vec::new();
        let mut is_pivot = vec![None; self.cols];
        for (r, &c) in pivots.iter().enumerate() {
            is_pivot[c] = Some(r);
        }
        for free in 0..self.cols {
            if is_pivot[free].is_some() {
                continue;
            }
            let mut v = vec![T::zero(); self.cols];
            v[free] = T::one();
            for (r, &c) in pivots.iter().enumerate() {
                v[c] = -m.get(r, free).clone();
            }
            basis.push(v);
        }
        Ok(basis)
    }

    /// A solution of `self · x = b`, or `None` when inconsistent.
    pub fn solve(&self, b: &[T], p: u32) -> Result<Option<Vec<T>>> {
        if b.len() != self.rows {
            return Err(Error::DimensionMismatch("right-hand side length".into()));
        }
        let mut aug = Matrix::zeros(self.rows, self.cols + 1);
        for i in 0..self.rows {
            for j in 0..self.cols {
                aug.set(i, j, self.get(i, j).clone());
            }
            aug.set(i, self.cols, b[i].clone());
        }
        let pivots = aug.rref(p)?;
        if pivots.last() == Some(&self.cols) {
            return Ok(None);
        }
        let mut x = vec![T::zero(); self.cols];
        for (r, &c) in pivots.iter().enumerate() {
            x[c] = aug.get(r, self.cols).clone();
        }
        Ok(Some(x))
    }

    /// Indices of a maximal set of linearly independent columns (earliest first).
    pub fn independent_columns(&self, p: u32) -> Result<Vec<usize>> {
        let mut m = self.clone();
        m.rref(p)
    }

    /// Matrix whose columns are the given vectors (`n` rows).
    pub fn from_columns(n: usize, cols: &[Vec<T>]) -> Self {
        let mut m = Matrix::zeros(n, cols.len());
        for (j, c) in cols.iter().enumerate() {
            for i in 0..n {
                m.set(i, j, c[i].clone());
            }
        }
        m
    }
}

impl<T: Ring> Matrix<T> {
    /// A matrix filled with `zero` (which also serves as the ring template).
    pub fn filled(rows: usize, cols: usize, zero: T) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![zero.clone(); rows * cols],
            zero,
        }
    }

    /// Identity matrix over the ring of `template`.
    pub fn identity_like(n: usize, template: &T) -> Self {
        let mut m = Self::filled(n, n, template.zero_like());
        for i in 0..n {
            m.set(i, i, template.one_like());
        }
        m
    }

    /// Matrix from rows (all of equal length); `template` fixes the ring.
    pub fn from_rows(rows: Vec<Vec<T>>, template: &T) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let data: Vec<T> = rows.into_iter().flatten().collect();
        assert_eq!(data.len(), r * c, "ragged rows");
        Matrix {
            rows: r,
            cols: c,
            data,
            zero: template.zero_like(),
        }
    }

    /// Diagonal matrix.
    pub fn diagonal(d: &[T], template: &T) -> Self {
        let mut m = Self::filled(d.len(), d.len(), template.zero_like());
        for (i, x) in d.iter().enumerate() {
            m.set(i, i, x.clone());
        }
        m
    }

    /// Number of rows.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of columns.
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// The zero element of the entry ring.
    pub fn zero_entry(&self) -> &T {
        &self.zero
    }

    /// Entry accessor.
    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[i * self.cols + j]
    }

    /// Entry mutator.
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    /// Row `i` as a vector.
    pub fn row(&self, i: usize) -> Vec<T> {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    /// Column `j` as a vector.
    pub fn col(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    /// Apply `f` entrywise (the result ring is given by `f(zero)`).
    pub fn map<U: Ring>(&self, f: impl Fn(&T) -> U) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(&f).collect(),
            zero: f(&self.zero),
        }
    }

    /// Matrix product.
    pub fn mul(&self, other: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.cols, other.rows, "matrix product shape mismatch");
        let mut out = Self::filled(self.rows, other.cols, self.zero.clone());
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero_elem() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if b.is_zero_elem() {
                        continue;
                    }
                    let v = out.get(i, j).clone() + a.clone() * b.clone();
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len(), "matrix-vector shape mismatch");
        (0..self.rows)
            .map(|i| {
                let mut acc = self.zero.clone();
                for (j, x) in v.iter().enumerate() {
                    let a = self.get(i, j);
                    if !a.is_zero_elem() && !x.is_zero_elem() {
                        acc = acc + a.clone() * x.clone();
                    }
                }
                acc
            })
            .collect()
    }

    /// Sum.
    pub fn add(&self, other: &Matrix<T>) -> Matrix<T> {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "matrix sum shape mismatch");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a.clone() + b.clone())
                .collect(),
            zero: self.zero.clone(),
        }
    }

    /// Difference.
    pub fn sub(&self, other: &Matrix<T>) -> Matrix<T> {
        self.add(&other.neg())
    }

    /// Negation.
    pub fn neg(&self) -> Matrix<T> {
        self.map(|a| -a.clone())
    }

    /// Multiply every entry by `s` (on the left).
    pub fn scale(&self, s: &T) -> Matrix<T> {
        self.map(|a| s.clone() * a.clone())
    }

    /// Non-negative power of a square matrix.
    pub fn pow(&self, e: u32) -> Matrix<T> {
        let mut acc = Self::identity_like(self.rows, &self.zero);
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// Whether every entry is known to be zero.
    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|a| a.is_zero_elem())
    }

    /// Transpose.
    pub fn transpose(&self) -> Matrix<T> {
        let mut out = Self::filled(self.cols, self.rows, self.zero.clone());
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j).clone());
            }
        }
        out
    }

    /// Horizontal concatenation.
    pub fn hstack(blocks: &[&Matrix<T>]) -> Matrix<T> {
        let rows = blocks[0].rows;
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut out = Self::filled(rows, cols, blocks[0].zero.clone());
        let mut off = 0;
        for b in blocks {
            assert_eq!(b.rows, rows, "hstack row mismatch");
            for i in 0..rows {
                for j in 0..b.cols {
                    out.set(i, off + j, b.get(i, j).clone());
                }
            }
            off += b.cols;
        }
        out
    }

    /// Vertical concatenation.
    pub fn vstack(blocks: &[&Matrix<T>]) -> Matrix<T> {
        let cols = blocks[0].cols;
        let rows = blocks.iter().map(|b| b.rows).sum();
        let mut out = Self::filled(rows, cols, blocks[0].zero.clone());
        let mut off = 0;
        for b in blocks {
            assert_eq!(b.cols, cols, "vstack column mismatch");
            for i in 0..b.rows {
                for j in 0..cols {
                    out.set(off + i, j, b.get(i, j).clone());
                }
            }
            off += b.rows;
        }
        out
    }

    /// Block matrix from a grid of blocks (`None` = zero block of the implied size).
    pub fn block(grid: &[Vec<Option<&Matrix<T>>>], row_sizes: &[usize], col_sizes: &[usize], template: &T) -> Matrix<T> {
        let rows = row_sizes.iter().sum();
        let cols = col_sizes.iter().sum();
        let mut out = Self::filled(rows, cols, template.zero_like());
        let mut ro = 0;
        for (bi, rs) in row_sizes.iter().enumerate() {
            let mut co = 0;
            for (bj, cs) in col_sizes.iter().enumerate() {
                if let Some(b) = grid[bi][bj] {
                    assert_eq!((b.rows, b.cols), (*rs, *cs), "block size mismatch");
                    for i in 0..*rs {
                        for j in 0..*cs {
                            out.set(ro + i, co + j, b.get(i, j).clone());
                        }
                    }
                }
                co += cs;
            }
            ro += rs;
        }
        out
    }

    /// Block-diagonal matrix.
    pub fn block_diag(blocks: &[&Matrix<T>]) -> Matrix<T> {
        let rs: Vec<usize> = blocks.iter().map(|b| b.rows).collect();
        let cs: Vec<usize> = blocks.iter().map(|b| b.cols).collect();
        let grid: Vec<Vec<Option<&Matrix<T>>>> = (0..blocks.len())
            .map(|i| (0..blocks.len()).map(|j| if i == j { Some(blocks[i]) } else { None }).collect())
            .collect();
        Self::block(&grid, &rs, &cs, &blocks[0].zero)
    }

    /// Minimum valuation of the entries (used to measure defects).
    pub fn min_valuation(&self, p: u32) -> crate::coefficients::Val {
        self.data
            .iter()
            .map(|a| a.valuation(p))
            .min()
            .unwrap_or(crate::coefficients::Val::Inf)
    }
}

/// The `K`-linear map underlying a matrix over a coefficient ring `A`.
///
/// Each entry is replaced by its multiplication matrix in the canonical
/// `K`-basis of `A`, so an `r × c` matrix over `A` becomes an
/// `r·dim(A) × c·dim(A)` matrix over `K`.  Vectors are flattened accordingly
/// by [`realify_vec`].
pub fn realify<K: Scalar>(m: &Matrix<CoeffElement<K>>) -> Matrix<K> {
    let d = m.zero_entry().ring().dim();
    let mut out = Matrix::zeros(m.rows() * d, m.cols() * d);
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            let e = m.get(i, j);
            if e.is_zero_elem() {
                continue;
            }
            let b = e.mul_matrix();
            for r in 0..d {
                for c in 0..d {
                    out.set(i * d + r, j * d + c, b.get(r, c).clone());
                }
            }
        }
    }
    out
}

/// Flatten a vector over `A` into its `K`-coordinates (see [`realify`]).
pub fn realify_vec<K: Scalar>(v: &[CoeffElement<K>]) -> Vec<K> {
    v.iter().flat_map(|e| e.coords().iter().cloned()).collect()
}

/// Rebuild a vector over `A` from its flattened `K`-coordinates.
pub fn unrealify_vec<K: Scalar>(v: &[K], ring: &std::sync::Arc<CoeffRing<K>>) -> Result<Vec<CoeffElement<K>>> {
    let d = ring.dim();
    if v.len() % d != 0 {
        return Err(Error::DimensionMismatch("flattened vector length".into()));
    }
    v.chunks(d).map(|c| ring.element(c.to_vec())).collect()
}
