//! Exact sparse linear algebra over a [`Field`].
//!
//! Elimination is row-incremental: rows are inserted one at a time into an
//! echelon structure whose pivot rows are normalised to a leading one. Rows are
//! fed shortest-first, which keeps fill-in low on the monomial-shift matrices
//! produced elsewhere in the crate.
//!
//! Every matrix handled here has entries in a subfield of ℂ (the rationals or a
//! prime field). Over ℚ, ranks and kernel dimensions are therefore the same as
//! over ℂ, so dimensions computed here are dimensions of complex vector spaces.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::field::Field;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LinAlgError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("index {index} out of range for dimension {dim}")]
    OutOfRange { index: usize, dim: usize },
}

/// Sparse vector with strictly increasing indices and no stored zeros.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SparseVec<F> {
    entries: Vec<(usize, F)>,
}

impl<F: Field> Default for SparseVec<F> {
    fn default() -> Self {
        Self::new()
    }
}

impl<F: Field> SparseVec<F> {
    pub fn new() -> Self {
        SparseVec { entries: Vec::new() }
    }

    /// Builds from arbitrary (index, value) pairs, summing duplicates and dropping zeros.
    pub fn from_pairs(mut pairs: Vec<(usize, F)>) -> Self {
        pairs.sort_by_key(|p| p.0);
        let mut entries: Vec<(usize, F)> = Vec::with_capacity(pairs.len());
        for (i, v) in pairs {
            match entries.last_mut() {
                Some((j, w)) if *j == i => {
                    let cur = std::mem::replace(w, F::zero());
                    *w = cur + v;
                }
                _ => entries.push((i, v)),
            }
        }
        entries.retain(|(_, v)| !v.is_zero());
        SparseVec { entries }
    }

    pub fn from_dense(values: &[F]) -> Self {
        SparseVec {
            entries: values
                .iter()
                .enumerate()
                .filter(|(_, v)| !v.is_zero())
                .map(|(i, v)| (i, v.clone()))
                .collect(),
        }
    }

    pub fn unit(index: usize) -> Self {
        SparseVec { entries: vec![(index, F::one())] }
    }

    pub fn to_dense(&self, dim: usize) -> Vec<F> {
        let mut out = vec![F::zero(); dim];
        for (i, v) in &self.entries {
            out[*i] = v.clone();
        }
        out
    }

    pub fn get(&self, index: usize) -> F {
        match self.entries.binary_search_by_key(&index, |p| p.0) {
            Ok(pos) => self.entries[pos].1.clone(),
            Err(_) => F::zero(),
        }
    }

    pub fn entries(&self) -> &[(usize, F)] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<(usize, F)> {
        self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn leading(&self) -> Option<usize> {
        self.entries.first().map(|p| p.0)
    }

    pub fn max_index(&self) -> Option<usize> {
        self.entries.last().map(|p| p.0)
    }

    pub fn scale(&self, s: &F) -> Self {
        if s.is_zero() {
            return Self::new();
        }
        SparseVec {
            entries: self.entries.iter().map(|(i, v)| (*i, v.mul_ref(s))).collect(),
        }
    }

    /// `self + s * other`
    pub fn add_scaled(&self, s: &F, other: &Self) -> Self {
        let mut out = Vec::with_capacity(self.entries.len() + other.entries.len());
        let (mut a, mut b) = (self.entries.iter().peekable(), other.entries.iter().peekable());
        loop {
            match (a.peek(), b.peek()) {
                (Some((i, x)), Some((j, y))) => {
                    if i < j {
                        out.push((*i, x.clone()));
                        a.next();
                    } else if j < i {
                        out.push((*j, s.mul_ref(y)));
                        b.next();
                    } else {
                        let mut v = x.clone();
                        v.add_mul_assign(s, y);
                        if !v.is_zero() {
                            out.push((*i, v));
                        }
                        a.next();
                        b.next();
                    }
                }
                (Some((i, x)), None) => {
                    out.push((*i, x.clone()));
                    a.next();
                }
                (None, Some((j, y))) => {
                    out.push((*j, s.mul_ref(y)));
                    b.next();
                }
                (None, None) => break,
            }
        }
        out.retain(|(_, v)| !v.is_zero());
        SparseVec { entries: out }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add_scaled(&-F::one(), other)
    }

    pub fn dot(&self, other: &Self) -> F {
        let mut acc = F::zero();
        let (mut a, mut b) = (0, 0);
        while a < self.entries.len() && b < other.entries.len() {
            let (i, x) = &self.entries[a];
            let (j, y) = &other.entries[b];
            if i < j {
                a += 1;
            } else if j < i {
                b += 1;
            } else {
                acc.add_mul_assign(x, y);
                a += 1;
                b += 1;
            }
        }
        acc
    }

    /// Re-indexes every entry through `map`; `None` drops the entry.
    pub fn reindex(&self, map: impl Fn(usize) -> Option<usize>) -> Self {
        Self::from_pairs(
            self.entries.iter().filter_map(|(i, v)| map(*i).map(|j| (j, v.clone()))).collect(),
        )
    }
}

/// Row-major sparse matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseMatrix<F> {
    nrows: usize,
    ncols: usize,
    rows: Vec<SparseVec<F>>,
}

impl<F: Field> SparseMatrix<F> {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        SparseMatrix { nrows, ncols, rows: vec![SparseVec::new(); nrows] }
    }

    /// Entries outside the declared shape are a caller bug and panic.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: Vec<(usize, usize, F)>) -> Self {
        let mut buckets: Vec<Vec<(usize, F)>> = vec![Vec::new(); nrows];
        for (r, c, v) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r},{c}) outside {nrows}x{ncols}");
            buckets[r].push((c, v));
        }
        SparseMatrix { nrows, ncols, rows: buckets.into_iter().map(SparseVec::from_pairs).collect() }
    }

    pub fn from_rows(ncols: usize, rows: Vec<SparseVec<F>>) -> Self {
        for r in &rows {
            if let Some(m) = r.max_index() {
                assert!(m < ncols, "row entry {m} outside {ncols} columns");
            }
        }
        SparseMatrix { nrows: rows.len(), ncols, rows }
    }

    /// Builds from columns given as sparse vectors of length `nrows`.
    pub fn from_columns(nrows: usize, cols: &[SparseVec<F>]) -> Self {
        let mut trip = Vec::new();
        for (c, col) in cols.iter().enumerate() {
            for (r, v) in col.entries() {
                trip.push((*r, c, v.clone()));
            }
        }
        Self::from_triplets(nrows, cols.len(), trip)
    }

    pub fn from_dense(rows: &[Vec<F>]) -> Self {
        let ncols = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == ncols), "ragged dense matrix");
        SparseMatrix { nrows: rows.len(), ncols, rows: rows.iter().map(|r| SparseVec::from_dense(r)).collect() }
    }

    pub fn from_dense_rows(ncols: usize, rows: &[Vec<F>]) -> Self {
        assert!(rows.iter().all(|r| r.len() == ncols), "ragged dense matrix");
        SparseMatrix { nrows: rows.len(), ncols, rows: rows.iter().map(|r| SparseVec::from_dense(r)).collect() }
    }

    pub fn from_i64(rows: &[Vec<i64>]) -> Self {
        let conv: Vec<Vec<F>> = rows.iter().map(|r| r.iter().map(|&v| F::from_i64(v)).collect()).collect();
        Self::from_dense(&conv)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn rows(&self) -> &[SparseVec<F>] {
        &self.rows
    }

    pub fn row(&self, r: usize) -> &SparseVec<F> {
        &self.rows[r]
    }

    pub fn get(&self, r: usize, c: usize) -> F {
        self.rows[r].get(c)
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(|r| r.nnz()).sum()
    }

    pub fn transpose(&self) -> Self {
        let mut buckets: Vec<Vec<(usize, F)>> = vec![Vec::new(); self.ncols];
        for (r, row) in self.rows.iter().enumerate() {
            for (c, v) in row.entries() {
                buckets[*c].push((r, v.clone()));
            }
        }
        SparseMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            rows: buckets.into_iter().map(|entries| SparseVec { entries }).collect(),
        }
    }

    pub fn mul_vec(&self, v: &SparseVec<F>) -> SparseVec<F> {
        let pairs = self
            .rows
            .iter()
            .enumerate()
            .map(|(r, row)| (r, row.dot(v)))
            .filter(|(_, x)| !x.is_zero())
            .collect();
        SparseVec { entries: pairs }
    }

    pub fn mul(&self, other: &SparseMatrix<F>) -> Result<SparseMatrix<F>, LinAlgError> {
        if self.ncols != other.nrows {
            return Err(LinAlgError::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.nrows, self.ncols, other.nrows, other.ncols
            )));
        }
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let mut acc = SparseVec::new();
                for (k, a) in row.entries() {
                    acc = acc.add_scaled(a, &other.rows[*k]);
                }
                acc
            })
            .collect();
        Ok(SparseMatrix { nrows: self.nrows, ncols: other.ncols, rows })
    }

    pub fn vstack(blocks: &[&SparseMatrix<F>]) -> Result<SparseMatrix<F>, LinAlgError> {
        let ncols = blocks.first().map_or(0, |b| b.ncols);
        if let Some(b) = blocks.iter().find(|b| b.ncols != ncols) {
            return Err(LinAlgError::DimensionMismatch(format!(
                "cannot stack {} columns onto {}",
                b.ncols, ncols
            )));
        }
        let rows: Vec<SparseVec<F>> = blocks.iter().flat_map(|b| b.rows.iter().cloned()).collect();
        Ok(SparseMatrix { nrows: rows.len(), ncols, rows })
    }
}

/// Incremental row echelon form. Each stored row has a leading one at its pivot column.
#[derive(Debug, Clone)]
pub struct Echelon<F> {
    ncols: usize,
    pivot_row: Vec<Option<u32>>,
    rows: Vec<SparseVec<F>>,
    acc: Vec<F>,
    touched: Vec<bool>,
    heap: BinaryHeap<Reverse<usize>>,
}

impl<F: Field> Echelon<F> {
    pub fn new(ncols: usize) -> Self {
        Echelon {
            ncols,
            pivot_row: vec![None; ncols],
            rows: Vec::new(),
            acc: vec![F::zero(); ncols],
            touched: vec![false; ncols],
            heap: BinaryHeap::new(),
        }
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[SparseVec<F>] {
        &self.rows
    }

    pub fn pivot_columns(&self) -> Vec<usize> {
        (0..self.ncols).filter(|&c| self.pivot_row[c].is_some()).collect()
    }

    fn load(&mut self, v: &SparseVec<F>) {
        for (c, x) in v.entries() {
            debug_assert!(*c < self.ncols);
            self.acc[*c] = x.clone();
            self.touched[*c] = true;
            self.heap.push(Reverse(*c));
        }
    }

    /// Reduces the loaded accumulator until the first non-pivot column carrying a
    /// nonzero value. Returns that remainder (empty if the vector reduced to zero).
    fn run_reduction(&mut self) -> SparseVec<F> {
        while let Some(Reverse(c)) = self.heap.pop() {
            self.touched[c] = false;
            let x = std::mem::replace(&mut self.acc[c], F::zero());
            if x.is_zero() {
                continue;
            }
            match self.pivot_row[c] {
                Some(p) => {
                    let row = &self.rows[p as usize];
                    for (cc, y) in row.entries().iter().skip(1) {
                        if self.touched[*cc] {
                            self.acc[*cc].sub_mul_assign(&x, y);
                        } else {
                            self.touched[*cc] = true;
                            self.acc[*cc] = -x.mul_ref(y);
                            self.heap.push(Reverse(*cc));
                        }
                    }
                }
                None => {
                    let mut out = vec![(c, x)];
                    while let Some(Reverse(cc)) = self.heap.pop() {
                        self.touched[cc] = false;
                        let v = std::mem::replace(&mut self.acc[cc], F::zero());
                        if !v.is_zero() {
                            out.push((cc, v));
                        }
                    }
                    return SparseVec { entries: out };
                }
            }
        }
        SparseVec::new()
    }

    /// Reduces `v` against the stored rows; the result is zero iff `v` lies in their span.
    pub fn reduce(&mut self, v: &SparseVec<F>) -> SparseVec<F> {
        self.load(v);
        self.run_reduction()
    }

    pub fn contains(&mut self, v: &SparseVec<F>) -> bool {
        self.reduce(v).is_zero()
    }

    /// Inserts `v`; returns the new pivot column if `v` was independent.
    pub fn insert(&mut self, v: &SparseVec<F>) -> Option<usize> {
        let rem = self.reduce(v);
        let lead = rem.leading()?;
        let inv = rem.entries[0].1.inv().expect("nonzero leading entry");
        let normalised = rem.scale(&inv);
        self.pivot_row[lead] = Some(self.rows.len() as u32);
        self.rows.push(normalised);
        Some(lead)
    }

    /// Inserts all rows of `m`, shortest rows first.
    pub fn insert_matrix(&mut self, m: &SparseMatrix<F>) -> Result<usize, LinAlgError> {
        if m.ncols() != self.ncols {
            return Err(LinAlgError::DimensionMismatch(format!(
                "matrix has {} columns, echelon has {}",
                m.ncols(),
                self.ncols
            )));
        }
        let mut order: Vec<usize> = (0..m.nrows()).collect();
        order.sort_by_key(|&r| m.rows[r].nnz());
        let before = self.rank();
        for r in order {
            if !m.rows[r].is_zero() {
                self.insert(&m.rows[r]);
            }
        }
        Ok(self.rank() - before)
    }

    /// Basis of the null space of the stored rows, one vector per free column.
    pub fn kernel_vectors(&self) -> Vec<SparseVec<F>> {
        let free: Vec<usize> = (0..self.ncols).filter(|&c| self.pivot_row[c].is_none()).collect();
        if free.is_empty() {
            return Vec::new();
        }
        let mut pivots: Vec<(usize, usize)> = (0..self.ncols)
            .filter_map(|c| self.pivot_row[c].map(|r| (c, r as usize)))
            .collect();
        pivots.sort_unstable();
        let mut x = vec![F::zero(); self.ncols];
        let mut out = Vec::with_capacity(free.len());
        for &f in &free {
            x[f] = F::one();
            let mut support = vec![f];
            // Pivot rows with pivot column above f cannot see f or anything it feeds.
            let upto = pivots.partition_point(|&(c, _)| c < f);
            for &(c, r) in pivots[..upto].iter().rev() {
                let mut s = F::zero();
                for (cc, y) in self.rows[r].entries().iter().skip(1) {
                    if !x[*cc].is_zero() {
                        s.add_mul_assign(y, &x[*cc]);
                    }
                }
                if !s.is_zero() {
                    x[c] = -s;
                    support.push(c);
                }
            }
            support.sort_unstable();
            let v = SparseVec {
                entries: support.iter().map(|&c| (c, std::mem::replace(&mut x[c], F::zero()))).collect(),
            };
            out.push(v);
        }
        out
    }

    /// Converts to reduced row echelon form, rows ordered by pivot column.
    pub fn into_rref(self) -> Vec<SparseVec<F>> {
        let mut pivots: Vec<(usize, usize)> = (0..self.ncols)
            .filter_map(|c| self.pivot_row[c].map(|r| (c, r as usize)))
            .collect();
        pivots.sort_unstable();
        let mut reduced: Vec<Option<SparseVec<F>>> = vec![None; self.rows.len()];
        let pivot_row = &self.pivot_row;
        for &(_, r) in pivots.iter().rev() {
            let mut row = self.rows[r].clone();
            loop {
                let target = row.entries().iter().skip(1).find_map(|(c, y)| {
                    pivot_row[*c].map(|pr| (pr as usize, y.clone()))
                });
                match target {
                    Some((pr, y)) => {
                        let other = reduced[pr].as_ref().expect("later pivots already reduced");
                        row = row.add_scaled(&-y, other);
                    }
                    None => break,
                }
            }
            reduced[r] = Some(row);
        }
        pivots.into_iter().map(|(_, r)| reduced[r].take().expect("row present")).collect()
    }
}

/// Linear subspace of `F^ambient_dim`, stored as a reduced echelon basis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubspaceBasis<F> {
    ambient_dim: usize,
    vectors: Vec<SparseVec<F>>,
}

impl<F: Field> SubspaceBasis<F> {
    pub fn zero(ambient_dim: usize) -> Self {
        SubspaceBasis { ambient_dim, vectors: Vec::new() }
    }

    pub fn full(ambient_dim: usize) -> Self {
        SubspaceBasis { ambient_dim, vectors: (0..ambient_dim).map(SparseVec::unit).collect() }
    }

    /// Span of `vectors`, canonicalised to reduced echelon form.
    pub fn span(ambient_dim: usize, vectors: &[SparseVec<F>]) -> Result<Self, LinAlgError> {
        let mut ech = Echelon::new(ambient_dim);
        for v in vectors {
            if let Some(m) = v.max_index() {
                if m >= ambient_dim {
                    return Err(LinAlgError::OutOfRange { index: m, dim: ambient_dim });
                }
            }
            ech.insert(v);
        }
        Ok(SubspaceBasis { ambient_dim, vectors: ech.into_rref() })
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[SparseVec<F>] {
        &self.vectors
    }

    pub fn contains(&self, v: &SparseVec<F>) -> bool {
        let mut ech = Echelon::new(self.ambient_dim);
        for b in &self.vectors {
            ech.insert(b);
        }
        ech.contains(v)
    }

    pub fn is_subspace_of(&self, other: &SubspaceBasis<F>) -> bool {
        if self.ambient_dim != other.ambient_dim {
            return false;
        }
        let mut ech = Echelon::new(other.ambient_dim);
        for b in &other.vectors {
            ech.insert(b);
        }
        self.vectors.iter().all(|v| ech.contains(v))
    }

    pub fn same_as(&self, other: &SubspaceBasis<F>) -> bool {
        self.dim() == other.dim() && self.is_subspace_of(other)
    }

    pub fn sum(&self, other: &SubspaceBasis<F>) -> Result<SubspaceBasis<F>, LinAlgError> {
        check_ambient(self, other)?;
        let all: Vec<SparseVec<F>> = self.vectors.iter().chain(other.vectors.iter()).cloned().collect();
        Self::span(self.ambient_dim, &all)
    }

    /// Image of the subspace under `m`.
    pub fn map(&self, m: &SparseMatrix<F>) -> Result<SubspaceBasis<F>, LinAlgError> {
        if m.ncols() != self.ambient_dim {
            return Err(LinAlgError::DimensionMismatch(format!(
                "map with {} columns applied to ambient {}",
                m.ncols(),
                self.ambient_dim
            )));
        }
        let imgs: Vec<SparseVec<F>> = self.vectors.iter().map(|v| m.mul_vec(v)).collect();
        Self::span(m.nrows(), &imgs)
    }

    /// Basis vectors as the columns of an `ambient × dim` matrix.
    pub fn as_columns(&self) -> SparseMatrix<F> {
        SparseMatrix::from_columns(self.ambient_dim, &self.vectors)
    }
}

fn check_ambient<F: Field>(u: &SubspaceBasis<F>, v: &SubspaceBasis<F>) -> Result<(), LinAlgError> {
    if u.ambient_dim != v.ambient_dim {
        return Err(LinAlgError::DimensionMismatch(format!(
            "ambient dimensions {} and {}",
            u.ambient_dim, v.ambient_dim
        )));
    }
    Ok(())
}

pub fn rank<F: Field>(m: &SparseMatrix<F>) -> usize {
    let mut ech = Echelon::new(m.ncols());
    ech.insert_matrix(m).expect("shape matches");
    ech.rank()
}

pub fn kernel_basis<F: Field>(m: &SparseMatrix<F>) -> SubspaceBasis<F> {
    kernel_of_stack(&[m]).expect("single block")
}

/// Common kernel of several matrices sharing a column space, in block order.
pub fn kernel_of_stack<F: Field>(blocks: &[&SparseMatrix<F>]) -> Result<SubspaceBasis<F>, LinAlgError> {
    let ncols = match blocks.first() {
        Some(b) => b.ncols(),
        None => return Err(LinAlgError::DimensionMismatch("no blocks".into())),
    };
    let mut ech = Echelon::new(ncols);
    for b in blocks {
        ech.insert_matrix(b)?;
    }
    Ok(kernel_from_echelon(&ech))
}

pub fn kernel_from_echelon<F: Field>(ech: &Echelon<F>) -> SubspaceBasis<F> {
    let kv = ech.kernel_vectors();
    SubspaceBasis::span(ech.ncols(), &kv).expect("kernel vectors within ambient")
}

/// Column space of `m`.
pub fn image_basis<F: Field>(m: &SparseMatrix<F>) -> SubspaceBasis<F> {
    let t = m.transpose();
    SubspaceBasis::span(m.nrows(), t.rows()).expect("columns within ambient")
}

/// `U ∩ V`, from the kernel of the coincidence system `[U | -V]`.
pub fn intersect_subspaces<F: Field>(
    u: &SubspaceBasis<F>,
    v: &SubspaceBasis<F>,
) -> Result<SubspaceBasis<F>, LinAlgError> {
    check_ambient(u, v)?;
    let r = u.dim();
    let mut cols: Vec<SparseVec<F>> = u.vectors.clone();
    cols.extend(v.vectors.iter().map(|x| x.scale(&-F::one())));
    let system = SparseMatrix::from_columns(u.ambient_dim, &cols);
    let ker = kernel_basis(&system);
    let mut out = Vec::with_capacity(ker.dim());
    for k in ker.vectors() {
        let mut acc = SparseVec::new();
        for (i, coeff) in k.entries() {
            if *i < r {
                acc = acc.add_scaled(coeff, &u.vectors[*i]);
            }
        }
        out.push(acc);
    }
    SubspaceBasis::span(u.ambient_dim, &out)
}

/// Whether `target` lies in the column span of `m`.
pub fn in_column_span<F: Field>(m: &SparseMatrix<F>, target: &SparseVec<F>) -> bool {
    let t = m.transpose();
    let mut ech = Echelon::new(m.nrows());
    ech.insert_matrix(&t).expect("shape matches");
    ech.contains(target)
}

/// Determinant of a small dense square matrix by Gaussian elimination.
pub fn determinant<F: Field>(m: &[Vec<F>]) -> F {
    let n = m.len();
    assert!(m.iter().all(|r| r.len() == n), "determinant of a non-square matrix");
    let mut a: Vec<Vec<F>> = m.to_vec();
    let mut det = F::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&r| !a[r][c].is_zero()) else { return F::zero() };
        if p != c {
            a.swap(p, c);
            det = -det;
        }
        det = det.mul_ref(&a[c][c]);
        let inv = a[c][c].inv().expect("nonzero pivot");
        for r in c + 1..n {
            if a[r][c].is_zero() {
                continue;
            }
            let f = a[r][c].mul_ref(&inv);
            for cc in c..n {
                let t = a[c][cc].clone();
                a[r][cc].sub_mul_assign(&f, &t);
            }
        }
    }
    det
}

/// Rank of a small dense matrix.
pub fn dense_rank<F: Field>(m: &[Vec<F>]) -> usize {
    let ncols = m.first().map_or(0, |r| r.len());
    rank(&SparseMatrix::from_dense_rows(ncols, m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Fp;
    use num_rational::BigRational;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type Q = BigRational;
    type F = Fp<1_000_000_007>;

    #[test]
    fn small_determinants() {
        let m: Vec<Vec<Q>> = vec![vec![Q::from_i64(0), Q::from_i64(1)], vec![Q::from_i64(1), Q::from_i64(0)]];
        assert_eq!(determinant(&m), Q::from_i64(-1));
        let v: Vec<Vec<Q>> = (1i64..=3).map(|x| (0u32..3).map(|k| Q::from_i64(x.pow(k))).collect()).collect();
        assert_eq!(determinant(&v), Q::from_i64(2));
        assert_eq!(dense_rank(&v), 3);
    }

    #[test]
    fn rank_of_dependent_rows() {
        let m = SparseMatrix::<Q>::from_i64(&[vec![1, 2], vec![2, 4]]);
        assert_eq!(rank(&m), 1);
    }

    #[test]
    fn kernel_of_small_matrix() {
        let m = SparseMatrix::<Q>::from_i64(&[vec![1, 1, 0], vec![0, 0, 1]]);
        let k = kernel_basis(&m);
        assert_eq!(k.dim(), 1);
        let expected = SparseVec::from_dense(&[Q::from_i64(1), Q::from_i64(-1), Q::from_i64(0)]);
        assert!(k.contains(&expected));
        assert_eq!(k.vectors()[0], expected);
    }

    #[test]
    fn coordinate_planes_meet_in_a_line() {
        let u = SubspaceBasis::<Q>::span(3, &[SparseVec::unit(0), SparseVec::unit(1)]).unwrap();
        let v = SubspaceBasis::<Q>::span(3, &[SparseVec::unit(1), SparseVec::unit(2)]).unwrap();
        let w = intersect_subspaces(&u, &v).unwrap();
        assert_eq!(w.dim(), 1);
        assert_eq!(w.vectors()[0], SparseVec::unit(1));
    }

    #[test]
    fn ambient_mismatch_is_an_error() {
        let u = SubspaceBasis::<Q>::full(3);
        let v = SubspaceBasis::<Q>::full(4);
        assert!(matches!(intersect_subspaces(&u, &v), Err(LinAlgError::DimensionMismatch(_))));
    }

    #[test]
    fn rref_is_canonical() {
        let a = SparseVec::from_dense(&[Q::from_i64(2), Q::from_i64(4), Q::from_i64(6)]);
        let b = SparseVec::from_dense(&[Q::from_i64(1), Q::from_i64(1), Q::from_i64(1)]);
        let s1 = SubspaceBasis::span(3, &[a.clone(), b.clone()]).unwrap();
        let s2 = SubspaceBasis::span(3, &[b.add_scaled(&Q::from_i64(3), &a), a]).unwrap();
        assert_eq!(s1, s2);
    }

    #[test]
    fn grassmann_formula_in_dimension_five() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let gen = |rng: &mut ChaCha8Rng| -> Vec<SparseVec<Q>> {
                (0..3)
                    .map(|_| SparseVec::from_dense(&(0..5).map(|_| Q::from_i64(rng.gen_range(-3..=3))).collect::<Vec<_>>()))
                    .collect()
            };
            let u = SubspaceBasis::span(5, &gen(&mut rng)).unwrap();
            let v = SubspaceBasis::span(5, &gen(&mut rng)).unwrap();
            let w = intersect_subspaces(&u, &v).unwrap();
            let s = u.sum(&v).unwrap();
            assert_eq!(w.dim() + s.dim(), u.dim() + v.dim());
            assert!(w.is_subspace_of(&u) && w.is_subspace_of(&v));
        }
    }

    fn random_sparse<Fl: Field>(rng: &mut ChaCha8Rng, nrows: usize, ncols: usize, density: f64) -> SparseMatrix<Fl> {
        let mut trip = Vec::new();
        for r in 0..nrows {
            for c in 0..ncols {
                if rng.gen_bool(density) {
                    trip.push((r, c, Fl::from_i64(rng.gen_range(-5..=5))));
                }
            }
        }
        SparseMatrix::from_triplets(nrows, ncols, trip)
    }

    /// Reference rank by dense Gaussian elimination.
    fn reference_rank<Fl: Field>(m: &SparseMatrix<Fl>) -> usize {
        let mut a: Vec<Vec<Fl>> = m.rows().iter().map(|r| r.to_dense(m.ncols())).collect();
        let mut rank = 0;
        for c in 0..m.ncols() {
            let Some(p) = (rank..a.len()).find(|&r| !a[r][c].is_zero()) else { continue };
            a.swap(rank, p);
            let inv = a[rank][c].inv().unwrap();
            for r in 0..a.len() {
                if r != rank && !a[r][c].is_zero() {
                    let f = a[r][c].mul_ref(&inv);
                    for cc in 0..m.ncols() {
                        let t = a[rank][cc].clone();
                        a[r][cc].sub_mul_assign(&f, &t);
                    }
                }
            }
            rank += 1;
        }
        rank
    }

    #[test]
    fn sparse_rank_matches_dense_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..30 {
            let (r, c) = (rng.gen_range(1..15), rng.gen_range(1..15));
            let m: SparseMatrix<Q> = random_sparse(&mut rng, r, c, 0.3);
            assert_eq!(rank(&m), reference_rank(&m));
        }
    }

    fn check_rank_nullity<Fl: Field>(m: &SparseMatrix<Fl>) {
        let k = kernel_basis(m);
        assert_eq!(rank(m) + k.dim(), m.ncols());
        for v in k.vectors() {
            assert!(m.mul_vec(v).is_zero());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn rank_nullity_over_rationals(seed in any::<u64>(), r in 1usize..200, c in 1usize..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m: SparseMatrix<Q> = random_sparse(&mut rng, r, c, 3.0 / c as f64);
            check_rank_nullity(&m);
        }

        #[test]
        fn rank_nullity_over_prime_field(seed in any::<u64>(), r in 1usize..200, c in 1usize..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m: SparseMatrix<Fp<31>> = random_sparse(&mut rng, r, c, 3.0 / c as f64);
            check_rank_nullity(&m);
        }

        #[test]
        fn rational_and_large_prime_ranks_agree(seed in any::<u64>(), r in 1usize..40, c in 1usize..60) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut trip_q = Vec::new();
            let mut trip_p = Vec::new();
            for i in 0..r {
                for j in 0..c {
                    if rng.gen_bool(0.2) {
                        let v = rng.gen_range(-5i64..=5);
                        trip_q.push((i, j, Q::from_i64(v)));
                        trip_p.push((i, j, F::from_i64(v)));
                    }
                }
            }
            let mq = SparseMatrix::from_triplets(r, c, trip_q);
            let mp = SparseMatrix::from_triplets(r, c, trip_p);
            prop_assert_eq!(rank(&mq), rank(&mp));
        }

        #[test]
        fn intersection_is_commutative_and_associative(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(3..9);
            let sub = |rng: &mut ChaCha8Rng| {
                let k = rng.gen_range(0..=n);
                let vs: Vec<SparseVec<Q>> = (0..k)
                    .map(|_| SparseVec::from_dense(&(0..n).map(|_| Q::from_i64(rng.gen_range(-2..=2))).collect::<Vec<_>>()))
                    .collect();
                SubspaceBasis::span(n, &vs).unwrap()
            };
            let (a, b, c) = (sub(&mut rng), sub(&mut rng), sub(&mut rng));
            let ab = intersect_subspaces(&a, &b).unwrap();
            let ba = intersect_subspaces(&b, &a).unwrap();
            prop_assert!(ab.same_as(&ba));
            let left = intersect_subspaces(&ab, &c).unwrap();
            let right = intersect_subspaces(&a, &intersect_subspaces(&b, &c).unwrap()).unwrap();
            prop_assert!(left.same_as(&right));
        }
    }
}
