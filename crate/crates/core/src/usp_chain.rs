//! USp(2k2) ≅ U(k2; H) tail in quaternionic Gelfand-Tzetlin coordinates.
//!
//! Chain level m = 1..k2 acts on a quaternionic space of dimension
//! K = k2 - m + 1. It consumes K old eigenvalues, K - 1 new ones and K
//! unimodular quaternions (angle triples). Eigenvalues are scalars; Kramers
//! pairing is structural.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::DEGENERACY_TOL;

/// Quaternion as the complex 2×2 matrix `[[a, -b*], [b, a*]]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quaternion {
    pub a: C64,
    pub b: C64,
}

impl Quaternion {
    pub const ZERO: Self = Self { a: C64::new(0.0, 0.0), b: C64::new(0.0, 0.0) };
    pub const ONE: Self = Self { a: C64::new(1.0, 0.0), b: C64::new(0.0, 0.0) };

    pub fn real(x: f64) -> Self {
        Self { a: C64::new(x, 0.0), b: C64::new(0.0, 0.0) }
    }

    pub fn to_matrix(self) -> [[C64; 2]; 2] {
        [[self.a, -self.b.conj()], [self.b, self.a.conj()]]
    }

    pub fn mul(self, o: Self) -> Self {
        // [[a,-b*],[b,a*]] [[c,-d*],[d,c*]]
        Self { a: self.a * o.a - self.b.conj() * o.b, b: self.b * o.a + self.a.conj() * o.b }
    }

    pub fn add(self, o: Self) -> Self {
        Self { a: self.a + o.a, b: self.b + o.b }
    }

    pub fn scale(self, x: f64) -> Self {
        Self { a: self.a * x, b: self.b * x }
    }

    /// Quaternionic conjugate, equal to the matrix adjoint.
    pub fn conj(self) -> Self {
        Self { a: self.a.conj(), b: -self.b }
    }

    /// `|q|² = |a|² + |b|²`, so that `q† q = |q|² 1₂`.
    pub fn norm_sqr(self) -> f64 {
        self.a.norm_sqr() + self.b.norm_sqr()
    }

    /// `Tr(q† q) = 2 |q|²`.
    pub fn trace_norm(self) -> f64 {
        2.0 * self.norm_sqr()
    }
}

/// `[[cos ψ e^{-iγ1}, -sin ψ e^{iγ2}], [sin ψ e^{-iγ2}, cos ψ e^{iγ1}]]`.
pub fn unimodular_quaternion(psi: f64, gamma1: f64, gamma2: f64) -> Quaternion {
    Quaternion {
        a: C64::from_polar(psi.cos(), -gamma1),
        b: C64::from_polar(psi.sin(), -gamma2),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct USpChart {
    pub k2: usize,
    /// Chain spectra, level m = 0..=k2 holding k2 - m decreasing values.
    pub spectra: Vec<Vec<f64>>,
    /// Angles per chain level m = 1..=k2, each with k2 - m + 1 entries.
    pub psi: Vec<Vec<f64>>,
    pub gamma1: Vec<Vec<f64>>,
    pub gamma2: Vec<Vec<f64>>,
}

impl USpChart {
    pub fn new(
        k2: usize,
        spectra: Vec<Vec<f64>>,
        psi: Vec<Vec<f64>>,
        gamma1: Vec<Vec<f64>>,
        gamma2: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let c = Self { k2, spectra, psi, gamma1, gamma2 };
        c.validate()?;
        Ok(c)
    }

    /// All angles zero over the given chain spectra.
    pub fn with_zero_angles(k2: usize, spectra: Vec<Vec<f64>>) -> Result<Self> {
        let zeros: Vec<Vec<f64>> = (1..=k2).map(|m| vec![0.0; k2 - m + 1]).collect();
        Self::new(k2, spectra, zeros.clone(), zeros.clone(), zeros)
    }

    pub fn validate(&self) -> Result<()> {
        let k2 = self.k2;
        if self.spectra.len() != k2 + 1 {
            return Err(Error::Malformed(format!("usp spectra: expected {} levels", k2 + 1)));
        }
        for (m, s) in self.spectra.iter().enumerate() {
            if s.len() != k2 - m {
                return Err(Error::Malformed(format!("usp spectra level {m}: expected {} values", k2 - m)));
            }
            if s.iter().any(|x| !x.is_finite()) {
                return Err(Error::Malformed(format!("usp spectra level {m}: non-finite value")));
            }
            for w in s.windows(2) {
                if w[0] - w[1] < DEGENERACY_TOL {
                    return Err(Error::Degenerate(format!("usp level {m}: {} and {} not strictly decreasing", w[0], w[1])));
                }
            }
        }
        for m in 1..=k2 {
            let (old, new) = (&self.spectra[m - 1], &self.spectra[m]);
            for (q, &t) in new.iter().enumerate() {
                if t > old[q] || t < old[q + 1] {
                    return Err(Error::Interlacing(format!("usp level {m}: value {t} outside [{}, {}]", old[q + 1], old[q])));
                }
            }
        }
        for (name, a) in [("psi", &self.psi), ("gamma1", &self.gamma1), ("gamma2", &self.gamma2)] {
            if a.len() != k2 || a.iter().enumerate().any(|(i, v)| v.len() != k2 - i) {
                return Err(Error::Malformed(format!("usp {name}: wrong shape")));
            }
        }
        Ok(())
    }

    /// Real coordinates: new eigenvalues plus three angles per quaternion.
    pub fn coordinate_count(&self) -> usize {
        (1..=self.k2).map(|m| 4 * (self.k2 - m + 1) - 1).sum()
    }
}

/// `|U_{p m}|²` for p = 1..K at chain level m (1-based).
pub fn usp_moduli(chart: &USpChart, m: usize) -> Result<Vec<f64>> {
    if m == 0 || m > chart.k2 {
        return Err(Error::OutOfRange(format!("usp chain level {m}")));
    }
    let (t, tn) = (&chart.spectra[m - 1], &chart.spectra[m]);
    let mut out = Vec::with_capacity(t.len());
    for (p, &tp) in t.iter().enumerate() {
        let mut num = 1.0;
        for &y in tn {
            num *= tp - y;
        }
        let mut den = 1.0;
        for (q, &tq) in t.iter().enumerate() {
            if q != p {
                den *= tp - tq;
            }
        }
        out.push(num / den);
    }
    Ok(out)
}

/// Quaternionic K×K unitary for chain level m: first column from the moduli
/// and angles, remaining columns the eigenvectors of the compression.
pub fn level_matrix(chart: &USpChart, m: usize) -> Result<Vec<Vec<Quaternion>>> {
    let rho = usp_moduli(chart, m)?;
    let (t, tn) = (&chart.spectra[m - 1], &chart.spectra[m]);
    let k = t.len();
    let c: Vec<Quaternion> = (0..k)
        .map(|i| {
            unimodular_quaternion(chart.psi[m - 1][i], chart.gamma1[m - 1][i], chart.gamma2[m - 1][i])
                .scale(rho[i].max(0.0).sqrt())
        })
        .collect();
    let mut q = vec![vec![Quaternion::ZERO; k]; k];
    for i in 0..k {
        q[i][0] = c[i];
    }
    for (p, &lam) in tn.iter().enumerate() {
        // an eigenvalue sitting exactly on an old one with vanishing modulus
        // pins the eigenvector to that axis
        if let Some(i) = (0..k).find(|&i| (t[i] - lam).abs() < DEGENERACY_TOL) {
            if rho[i].abs() > DEGENERACY_TOL {
                return Err(Error::Degenerate(format!("usp level {m}: eigenvalue {lam} hits {} with non-zero modulus", t[i])));
            }
            let phase = unimodular_quaternion(chart.psi[m - 1][i], chart.gamma1[m - 1][i], chart.gamma2[m - 1][i]);
            q[i][p + 1] = phase;
            continue;
        }
        let norm: f64 = (0..k).map(|i| rho[i] / (t[i] - lam).powi(2)).sum();
        let b = 1.0 / norm.sqrt();
        for i in 0..k {
            q[i][p + 1] = c[i].scale(b / (t[i] - lam));
        }
    }
    Ok(q)
}

fn quaternion_to_complex(q: &[Vec<Quaternion>]) -> Vec<Vec<C64>> {
    let k = q.len();
    let mut out = vec![vec![C64::new(0.0, 0.0); 2 * k]; 2 * k];
    for i in 0..k {
        for j in 0..k {
            let m = q[i][j].to_matrix();
            for a in 0..2 {
                for b in 0..2 {
                    out[2 * i + a][2 * j + b] = m[a][b];
                }
            }
        }
    }
    out
}

/// Quaternionic element of U(k2; H), product over chain levels.
pub fn usp_assemble_quaternionic(chart: &USpChart) -> Result<Vec<Vec<Quaternion>>> {
    chart.validate()?;
    let k2 = chart.k2;
    let mut u: Vec<Vec<Quaternion>> =
        (0..k2).map(|i| (0..k2).map(|j| if i == j { Quaternion::ONE } else { Quaternion::ZERO }).collect()).collect();
    for m in 1..=k2 {
        let q = level_matrix(chart, m)?;
        let off = m - 1;
        let mut next = u.clone();
        for i in 0..k2 {
            for j in 0..q.len() {
                let mut acc = Quaternion::ZERO;
                for l in 0..q.len() {
                    acc = acc.add(u[i][off + l].mul(q[l][j]));
                }
                next[i][off + j] = acc;
            }
        }
        u = next;
    }
    Ok(u)
}

/// 2k2×2k2 complex USp element with `U†U = 1` and `UᵀJU = J`,
/// `J = 1_{k2} ⊗ τ^(1)`.
pub fn usp_assemble(chart: &USpChart) -> Result<Vec<Vec<C64>>> {
    Ok(quaternion_to_complex(&usp_assemble_quaternionic(chart)?))
}

/// `J = 1_{k2} ⊗ τ^(1)` as a complex matrix.
pub fn symplectic_unit(k2: usize) -> Vec<Vec<C64>> {
    let mut j = vec![vec![C64::new(0.0, 0.0); 2 * k2]; 2 * k2];
    for q in 0..k2 {
        j[2 * q][2 * q + 1] = C64::new(1.0, 0.0);
        j[2 * q + 1][2 * q] = C64::new(-1.0, 0.0);
    }
    j
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn matmul(a: &[Vec<C64>], b: &[Vec<C64>]) -> Vec<Vec<C64>> {
        let (r, k, c) = (a.len(), b.len(), b[0].len());
        (0..r).map(|i| (0..c).map(|j| (0..k).map(|l| a[i][l] * b[l][j]).sum()).collect()).collect()
    }

    fn adjoint(a: &[Vec<C64>]) -> Vec<Vec<C64>> {
        (0..a[0].len()).map(|j| (0..a.len()).map(|i| a[i][j].conj()).collect()).collect()
    }

    fn transpose(a: &[Vec<C64>]) -> Vec<Vec<C64>> {
        (0..a[0].len()).map(|j| (0..a.len()).map(|i| a[i][j]).collect()).collect()
    }

    fn max_diff(a: &[Vec<C64>], b: &[Vec<C64>]) -> f64 {
        a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    fn eye(n: usize) -> Vec<Vec<C64>> {
        (0..n).map(|i| (0..n).map(|j| C64::new(if i == j { 1.0 } else { 0.0 }, 0.0)).collect()).collect()
    }

    fn chart2() -> USpChart {
        USpChart::new(
            2,
            vec![vec![3.0, 1.0], vec![2.0], vec![]],
            vec![vec![0.3, 1.1], vec![0.7]],
            vec![vec![0.2, -0.4], vec![2.0]],
            vec![vec![1.3, 0.5], vec![-1.0]],
        )
        .unwrap()
    }

    #[test]
    fn moduli_examples() {
        let c1 = USpChart::with_zero_angles(1, vec![vec![2.0], vec![]]).unwrap();
        assert_eq!(usp_moduli(&c1, 1).unwrap(), vec![1.0]);
        let c = chart2();
        let r = usp_moduli(&c, 1).unwrap();
        assert!((r[0] - 0.5).abs() < 1e-15 && (r[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn unimodular_examples() {
        let q = unimodular_quaternion(0.0, 0.0, 0.0);
        assert_eq!(q, Quaternion::ONE);
        let q = unimodular_quaternion(0.4, 1.2, -2.1);
        let m = q.to_matrix();
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        assert!((det - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((q.conj().mul(q).a - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(q.conj().mul(q).b.norm() < 1e-15);
    }

    #[test]
    fn assembled_is_unitary_symplectic() {
        let u = usp_assemble(&chart2()).unwrap();
        assert!(max_diff(&matmul(&adjoint(&u), &u), &eye(4)) < 1e-12);
        let j = symplectic_unit(2);
        assert!(max_diff(&matmul(&transpose(&u), &matmul(&j, &u)), &j) < 1e-12);
    }

    #[test]
    fn k2_one_is_su2() {
        let c = USpChart::new(1, vec![vec![2.0], vec![]], vec![vec![0.9]], vec![vec![0.1]], vec![vec![2.2]]).unwrap();
        let u = usp_assemble(&c).unwrap();
        let det = u[0][0] * u[1][1] - u[0][1] * u[1][0];
        assert!((det - C64::new(1.0, 0.0)).norm() < 1e-14);
        assert!(max_diff(&matmul(&adjoint(&u), &u), &eye(2)) < 1e-14);
    }

    #[test]
    fn identity_chart() {
        let c = USpChart::with_zero_angles(3, vec![vec![3.0, 2.0, 1.0], vec![2.0, 1.0], vec![1.0], vec![]]).unwrap();
        let u = usp_assemble(&c).unwrap();
        assert!(max_diff(&u, &eye(6)) < 1e-15);
    }

    #[test]
    fn interlacing_enforced() {
        let bad = USpChart::with_zero_angles(2, vec![vec![3.0, 1.0], vec![4.0], vec![]]);
        assert!(matches!(bad, Err(Error::Interlacing(_))));
        assert_eq!(chart2().coordinate_count(), 10);
    }
}
