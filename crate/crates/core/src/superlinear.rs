//! Graded matrices over the Grassmann algebra, the orthosymplectic metric,
//! supertrace and superdeterminant.
//!
//! Rows and columns carry a grading: the first `k1` indices are bosonic, the
//! following `2 k2` fermionic. Rectangular matrices (projection matrices
//! between levels) have independent row and column gradings.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grassmann::GrassmannElement as G;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SuperMatrixJson", into = "SuperMatrixJson")]
pub struct SuperMatrix {
    k1: usize,
    k2: usize,
    col_k1: usize,
    col_k2: usize,
    generators: usize,
    entries: Vec<G>,
}

/// The 2×2 matrices τ^(0..3) in the convention of the construction
/// (τ^(1) is the symplectic unit, not the physics Pauli σ_x).
pub fn pauli(index: usize) -> Result<[[C64; 2]; 2]> {
    let z = C64::new(0.0, 0.0);
    let o = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    Ok(match index {
        0 => [[o, z], [z, o]],
        1 => [[z, o], [-o, z]],
        2 => [[z, -i], [-i, z]],
        3 => [[i, z], [z, -i]],
        _ => return Err(Error::OutOfRange(format!("pauli index {index}"))),
    })
}

impl SuperMatrix {
    pub fn zeros_rect(k1: usize, k2: usize, col_k1: usize, col_k2: usize, generators: usize) -> Self {
        let len = (k1 + 2 * k2) * (col_k1 + 2 * col_k2);
        Self { k1, k2, col_k1, col_k2, generators, entries: vec![G::zero(generators); len] }
    }

    pub fn zeros(k1: usize, k2: usize, generators: usize) -> Self {
        Self::zeros_rect(k1, k2, k1, k2, generators)
    }

    pub fn identity(k1: usize, k2: usize, generators: usize) -> Self {
        let mut m = Self::zeros(k1, k2, generators);
        for i in 0..m.nrows() {
            m.set(i, i, G::one(generators));
        }
        m
    }

    /// Builds a matrix from row vectors; shape checked against the gradings.
    pub fn from_rows(k1: usize, k2: usize, col_k1: usize, col_k2: usize, rows: Vec<Vec<G>>) -> Result<Self> {
        let (nr, nc) = (k1 + 2 * k2, col_k1 + 2 * col_k2);
        if rows.len() != nr || rows.iter().any(|r| r.len() != nc) {
            return Err(Error::Dimension(format!("expected {nr}x{nc} entries")));
        }
        let generators = rows.iter().flatten().next().map_or(0, |g| g.num_generators());
        if rows.iter().flatten().any(|g| g.num_generators() != generators) {
            return Err(Error::Dimension("entries disagree on generator count".into()));
        }
        Ok(Self { k1, k2, col_k1, col_k2, generators, entries: rows.into_iter().flatten().collect() })
    }

    /// Ordinary complex matrix embedded with zero souls.
    pub fn from_complex(k1: usize, k2: usize, generators: usize, m: &[Vec<C64>]) -> Result<Self> {
        let rows = m.iter().map(|r| r.iter().map(|&c| G::scalar(generators, c)).collect()).collect();
        let mut out = Self::from_rows(k1, k2, k1, k2, rows)?;
        out.generators = generators;
        Ok(out)
    }

    pub fn k1(&self) -> usize {
        self.k1
    }
    pub fn k2(&self) -> usize {
        self.k2
    }
    pub fn col_k1(&self) -> usize {
        self.col_k1
    }
    pub fn col_k2(&self) -> usize {
        self.col_k2
    }
    pub fn generators(&self) -> usize {
        self.generators
    }
    pub fn nrows(&self) -> usize {
        self.k1 + 2 * self.k2
    }
    pub fn ncols(&self) -> usize {
        self.col_k1 + 2 * self.col_k2
    }
    pub fn is_square(&self) -> bool {
        self.k1 == self.col_k1 && self.k2 == self.col_k2
    }

    pub fn get(&self, i: usize, j: usize) -> &G {
        &self.entries[i * self.ncols() + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: G) {
        let nc = self.ncols();
        self.entries[i * nc + j] = v;
    }

    pub fn column(&self, j: usize) -> Vec<G> {
        (0..self.nrows()).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn map(&self, f: impl Fn(usize, usize, &G) -> G) -> Self {
        let nc = self.ncols();
        let entries = self.entries.iter().enumerate().map(|(k, g)| f(k / nc, k % nc, g)).collect();
        Self { k1: self.k1, k2: self.k2, col_k1: self.col_k1, col_k2: self.col_k2, generators: self.generators, entries }
    }

    /// Block-odd entries (bosonic row with fermionic column or vice versa).
    fn odd_position(&self, i: usize, j: usize) -> bool {
        (i < self.k1) != (j < self.col_k1)
    }

    /// Boson-boson and fermion-fermion entries even, mixed entries odd.
    pub fn grading_consistent(&self) -> bool {
        let nc = self.ncols();
        self.entries.iter().enumerate().all(|(k, g)| {
            if self.odd_position(k / nc, k % nc) {
                g.is_odd()
            } else {
                g.is_even()
            }
        })
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.col_k1 != other.k1 || self.col_k2 != other.k2 || self.generators != other.generators {
            return Err(Error::Dimension(format!(
                "({}/{})x({}/{}) times ({}/{})x({}/{})",
                self.k1, self.k2, self.col_k1, self.col_k2, other.k1, other.k2, other.col_k1, other.col_k2
            )));
        }
        let mut out = Self::zeros_rect(self.k1, self.k2, other.col_k1, other.col_k2, self.generators);
        let inner = self.ncols();
        for i in 0..self.nrows() {
            for j in 0..other.ncols() {
                let mut acc = G::zero(self.generators);
                for l in 0..inner {
                    let (a, b) = (self.get(i, l), other.get(l, j));
                    if !a.is_zero() && !b.is_zero() {
                        acc += &a.multiply(b)?;
                    }
                }
                out.set(i, j, acc);
            }
        }
        Ok(out)
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        let mut out = self.clone();
        for (a, b) in out.entries.iter_mut().zip(&other.entries) {
            *a += b;
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        let mut out = self.clone();
        for (a, b) in out.entries.iter_mut().zip(&other.entries) {
            *a -= b;
        }
        Ok(out)
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if (self.k1, self.k2, self.col_k1, self.col_k2, self.generators)
            != (other.k1, other.k2, other.col_k1, other.col_k2, other.generators)
        {
            return Err(Error::Dimension("shape mismatch".into()));
        }
        Ok(())
    }

    fn transposed_with(&self, f: impl Fn(usize, usize, &G) -> G) -> Self {
        let mut out = Self::zeros_rect(self.col_k1, self.col_k2, self.k1, self.k2, self.generators);
        for i in 0..self.nrows() {
            for j in 0..self.ncols() {
                out.set(j, i, f(i, j, self.get(i, j)));
            }
        }
        out
    }

    /// Transpose with entrywise (order-reversing) conjugation.
    pub fn dagger(&self) -> Self {
        self.transposed_with(|_, _, g| g.conjugate())
    }

    /// `[[A,B],[C,D]] -> [[Aᵀ,Cᵀ],[-Bᵀ,Dᵀ]]`.
    pub fn supertranspose(&self) -> Self {
        self.transposed_with(|i, j, g| if i < self.k1 && j >= self.col_k1 { -g } else { g.clone() })
    }

    /// Supertranspose composed with the graded conjugation; the adjoint
    /// under which UOSp elements are unitary.
    pub fn superadjoint(&self) -> Self {
        self.transposed_with(|i, j, g| {
            let c = g.conjugate_graded();
            if i < self.k1 && j >= self.col_k1 {
                -c
            } else {
                c
            }
        })
    }

    pub fn body(&self) -> Vec<Vec<C64>> {
        (0..self.nrows()).map(|i| (0..self.ncols()).map(|j| self.get(i, j).body()).collect()).collect()
    }

    /// Largest coefficient of any entry of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.same_shape(other)?;
        Ok(self.entries.iter().zip(&other.entries).map(|(a, b)| (a - b).max_abs()).fold(0.0, f64::max))
    }

    /// Copy of the block `[r0, r1) x [c0, c1)` as plain entry rows.
    pub fn block(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> Vec<Vec<G>> {
        (r0..r1).map(|i| (c0..c1).map(|j| self.get(i, j).clone()).collect()).collect()
    }

    /// Direct sum `1_offset ⊕ self` with `offset` extra bosonic indices in
    /// front.
    pub fn embed_after_bosons(&self, offset: usize) -> Self {
        let mut out = Self::zeros_rect(self.k1 + offset, self.k2, self.col_k1 + offset, self.col_k2, self.generators);
        for i in 0..offset {
            out.set(i, i, G::one(self.generators));
        }
        for i in 0..self.nrows() {
            for j in 0..self.ncols() {
                out.set(i + offset, j + offset, self.get(i, j).clone());
            }
        }
        out
    }

    pub fn supertrace(&self) -> Result<G> {
        if !self.is_square() {
            return Err(Error::Dimension("supertrace of a rectangular matrix".into()));
        }
        let mut acc = G::zero(self.generators);
        for i in 0..self.nrows() {
            if i < self.k1 {
                acc += self.get(i, i);
            } else {
                acc -= self.get(i, i);
            }
        }
        Ok(acc)
    }

    /// Berezinian `det(A - B D⁻¹ C) / det(D)`.
    pub fn superdeterminant(&self) -> Result<G> {
        if !self.is_square() {
            return Err(Error::Dimension("superdeterminant of a rectangular matrix".into()));
        }
        let n = self.generators;
        let (k1, nf) = (self.k1, 2 * self.k2);
        let nt = k1 + nf;
        let a = self.block(0, k1, 0, k1);
        let b = self.block(0, k1, k1, nt);
        let c = self.block(k1, nt, 0, k1);
        let d = self.block(k1, nt, k1, nt);
        let dinv = invert_even(&d, n)?;
        let ddet = det_even(&d, n)?;
        let mut schur = a;
        for i in 0..k1 {
            for j in 0..k1 {
                let mut acc = G::zero(n);
                for p in 0..nf {
                    for q in 0..nf {
                        acc += &(&(&b[i][p] * &dinv[p][q]) * &c[q][j]);
                    }
                }
                schur[i][j] -= &acc;
            }
        }
        let sdet = det_even(&schur, n)?;
        sdet.multiply(&ddet.invert()?)
    }
}

/// Determinant of a square matrix with mutually commuting (even) entries,
/// by elimination with body-magnitude pivoting.
pub fn det_even(m: &[Vec<G>], generators: usize) -> Result<G> {
    let k = m.len();
    let mut a: Vec<Vec<G>> = m.to_vec();
    let mut det = G::one(generators);
    for col in 0..k {
        let piv = (col..k)
            .max_by(|&x, &y| a[x][col].body().norm().total_cmp(&a[y][col].body().norm()))
            .expect("non-empty range");
        if a[piv][col].body().norm() == 0.0 {
            return Ok(G::zero(generators));
        }
        if piv != col {
            a.swap(piv, col);
            det = -det;
        }
        let inv = a[col][col].invert()?;
        det = &det * &a[col][col];
        for r in col + 1..k {
            let f = &a[r][col] * &inv;
            if f.is_zero() {
                continue;
            }
            for c in col..k {
                let t = &f * &a[col][c];
                a[r][c] -= &t;
            }
        }
    }
    Ok(det)
}

/// Inverse of a square matrix with even entries by Gauss-Jordan.
pub fn invert_even(m: &[Vec<G>], generators: usize) -> Result<Vec<Vec<G>>> {
    let k = m.len();
    let mut a: Vec<Vec<G>> = m.to_vec();
    let mut inv: Vec<Vec<G>> =
        (0..k).map(|i| (0..k).map(|j| if i == j { G::one(generators) } else { G::zero(generators) }).collect()).collect();
    for col in 0..k {
        let piv = (col..k)
            .max_by(|&x, &y| a[x][col].body().norm().total_cmp(&a[y][col].body().norm()))
            .expect("non-empty range");
        if a[piv][col].body().norm() == 0.0 {
            return Err(Error::NotInvertible);
        }
        a.swap(piv, col);
        inv.swap(piv, col);
        let p = a[col][col].invert()?;
        for c in 0..k {
            a[col][c] = &a[col][c] * &p;
            inv[col][c] = &inv[col][c] * &p;
        }
        for r in 0..k {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col].clone();
            for c in 0..k {
                let t = &f * &a[col][c];
                a[r][c] -= &t;
                let t = &f * &inv[col][c];
                inv[r][c] -= &t;
            }
        }
    }
    Ok(inv)
}

/// Orthosymplectic metric `diag(1_{k1}, 1_{k2} ⊗ τ^(1))`.
pub fn metric(k1: usize, k2: usize, generators: usize) -> SuperMatrix {
    let mut l = SuperMatrix::identity(k1, k2, generators);
    for q in 0..k2 {
        let a = k1 + 2 * q;
        l.set(a, a, G::zero(generators));
        l.set(a + 1, a + 1, G::zero(generators));
        l.set(a, a + 1, G::one(generators));
        l.set(a + 1, a, G::scalar(generators, -1.0));
    }
    l
}

#[derive(Serialize, Deserialize)]
struct SuperMatrixJson {
    k1: usize,
    k2: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    col_k1: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    col_k2: Option<usize>,
    rows: Vec<Vec<G>>,
}

impl From<SuperMatrix> for SuperMatrixJson {
    fn from(m: SuperMatrix) -> Self {
        let rows = m.block(0, m.nrows(), 0, m.ncols());
        let rect = !m.is_square();
        Self {
            k1: m.k1,
            k2: m.k2,
            col_k1: rect.then_some(m.col_k1),
            col_k2: rect.then_some(m.col_k2),
            rows,
        }
    }
}

impl TryFrom<SuperMatrixJson> for SuperMatrix {
    type Error = Error;
    fn try_from(j: SuperMatrixJson) -> Result<Self> {
        SuperMatrix::from_rows(j.k1, j.k2, j.col_k1.unwrap_or(j.k1), j.col_k2.unwrap_or(j.k2), j.rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mm2(a: [[C64; 2]; 2], b: [[C64; 2]; 2]) -> [[C64; 2]; 2] {
        let mut c = [[C64::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        c
    }

    #[test]
    fn pauli_examples() {
        let t1 = pauli(1).unwrap();
        assert_eq!(t1[0][1], C64::new(1.0, 0.0));
        assert_eq!(t1[1][0], C64::new(-1.0, 0.0));
        let sq = mm2(t1, t1);
        assert_eq!(sq, [[C64::new(-1.0, 0.0), C64::new(0.0, 0.0)], [C64::new(0.0, 0.0), C64::new(-1.0, 0.0)]]);
        assert_eq!(pauli(0).unwrap(), [[C64::new(1.0, 0.0), C64::new(0.0, 0.0)], [C64::new(0.0, 0.0), C64::new(1.0, 0.0)]]);
        assert!(pauli(4).is_err());
    }

    #[test]
    fn metric_examples() {
        let l = metric(2, 1, 0);
        assert_eq!(l.get(2, 3).body(), C64::new(1.0, 0.0));
        assert_eq!(l.get(3, 2).body(), C64::new(-1.0, 0.0));
        let l2 = l.matmul(&l).unwrap();
        let want: Vec<f64> = vec![1.0, 1.0, -1.0, -1.0];
        for i in 0..4 {
            for j in 0..4 {
                let w = if i == j { want[i] } else { 0.0 };
                assert_eq!(l2.get(i, j).body(), C64::new(w, 0.0));
            }
        }
        assert_eq!(metric(3, 0, 0), SuperMatrix::identity(3, 0, 0));
    }

    #[test]
    fn sdet_examples() {
        assert_eq!(SuperMatrix::identity(2, 1, 2).superdeterminant().unwrap(), G::one(2));
        let mut d = SuperMatrix::identity(2, 1, 0);
        for i in 0..4 {
            d.set(i, i, G::scalar(0, 2.0));
        }
        assert_eq!(d.superdeterminant().unwrap(), G::one(0));
    }

    #[test]
    fn json_roundtrip() {
        let l = metric(1, 1, 2);
        let s = serde_json::to_string(&l).unwrap();
        assert!(s.starts_with("{\"k1\":1,\"k2\":1,\"rows\""));
        let back: SuperMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, l);
    }
}
