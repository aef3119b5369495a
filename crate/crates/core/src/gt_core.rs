//! Level-by-level coset construction of UOSp(k1/2k2) elements.
//!
//! Level n (1..=k1) maps the level-(n-1) model space of bosonic dimension
//! D = k1 - n + 1 plus 2k2 fermionic directions onto its first column (the
//! group column u_n) and the eigenbasis of the compressed Cartan operator.
//! The level is *even* when D is even. An odd level carries an extra zero
//! bosonic eigenvalue, which is how all odd-level formulas are obtained from
//! the even-level ones.
//!
//! Conventions (primed basis):
//! - bosonic pair i carries Cartan entries (-σ_i, +σ_i), σ_i = s_i;
//! - the odd-level leftover boson carries 0;
//! - fermion pair p carries (+μ_p, -μ_p), μ_p = sqrt(F_p), F_p = (is_p)².

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grassmann::GrassmannElement as G;
use crate::superlinear::SuperMatrix;
use crate::usp_chain::{usp_assemble, USpChart};
use crate::DEGENERACY_TOL;

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[derive(Clone, Debug, PartialEq)]
pub struct CartanSpectrum {
    pub level: usize,
    pub bosonic: Vec<f64>,
    pub fermionic_sq: Vec<G>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartSpectra {
    /// s_{p1}^{(n)} for n = 0..=k1, each strictly decreasing and positive.
    pub bosonic: Vec<Vec<f64>>,
    /// s_{p2} (bodies of the fermionic eigenvalues), strictly decreasing.
    pub fermionic: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GtChart {
    pub k1: usize,
    pub k2: usize,
    pub spectra: ChartSpectra,
    /// ϑ_p^{(n)} for n = 1..=k1, one per bosonic pair of level n-1.
    pub theta: Vec<Vec<f64>>,
    /// r^{(n)} for n = 1..=k1; only odd levels use it, and the last level's
    /// bit is fixed by det = +1.
    pub r: Vec<u8>,
    /// Complex coefficient c with ξ_p^{(n)} = c·θ_{2(k2(n-1)+p-1)}.
    pub xi_coefficients: Vec<Vec<C64>>,
    pub usp: USpChart,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LevelModuli {
    pub v_sq: Vec<G>,
    /// Odd levels: |v|² of the isolated entry.
    pub v0_sq: Option<G>,
    pub alpha_sq: Vec<G>,
    /// |α_p|² = alpha_reduced_p · |ξ_p|².
    pub alpha_reduced: Vec<G>,
    pub w_sq: Vec<G>,
    /// Even levels: |w|² of the zero-eigenvalue vector.
    pub w0_sq: Option<G>,
    pub beta_sq: Vec<G>,
    /// |β_p|² = beta_reduced_p · |ξ_p|².
    pub beta_reduced: Vec<G>,
}

/// Ingredients of one level in squared variables.
#[derive(Clone, Debug)]
pub struct LevelInput {
    pub generators: usize,
    pub odd: bool,
    /// Old bosonic squares x (without the odd-level zero).
    pub x: Vec<f64>,
    /// New bosonic squares y.
    pub y: Vec<f64>,
    pub f0: Vec<G>,
    pub f1: Vec<G>,
    pub xi: Vec<G>,
    pub xi_sq: Vec<G>,
}

/// Per-level construction in both bases.
#[derive(Clone, Debug)]
pub struct LevelFrame {
    /// Bosonic dimension D of the old model space.
    pub kb: usize,
    /// Primed Cartan diagonal of the old level.
    pub cartan: Vec<G>,
    /// Primed new-level eigenvalues in column order.
    pub eigenvalues: Vec<G>,
    /// [c | eigenvectors] in the primed bases.
    pub q_primed: SuperMatrix,
    /// Same map in the unrotated bases.
    pub q: SuperMatrix,
}

impl GtChart {
    pub fn generators(&self) -> usize {
        2 * self.k1 * self.k2
    }

    /// Generator index of ξ_p^{(n)} (both 1-based); its conjugate is +1.
    pub fn generator_index(&self, n: usize, p: usize) -> usize {
        2 * (self.k2 * (n - 1) + (p - 1))
    }

    /// Number of bosonic Cartan values at level n.
    pub fn bosonic_count(k1: usize, n: usize) -> usize {
        (k1 - n) / 2
    }

    pub fn is_even_level(&self, n: usize) -> bool {
        (self.k1 - n + 1) % 2 == 0
    }

    pub fn validate(&self) -> Result<()> {
        let (k1, k2) = (self.k1, self.k2);
        if k1 == 0 {
            return Err(Error::Malformed("k1 must be at least 1".into()));
        }
        if 2 * k1 * k2 > crate::grassmann::MAX_GENERATORS {
            return Err(Error::Infeasible(format!("{} generators exceed the supported {}", 2 * k1 * k2, crate::grassmann::MAX_GENERATORS)));
        }
        let b = &self.spectra.bosonic;
        if b.len() != k1 + 1 {
            return Err(Error::Malformed(format!("expected {} bosonic spectrum levels", k1 + 1)));
        }
        for (n, s) in b.iter().enumerate() {
            if s.len() != Self::bosonic_count(k1, n) {
                return Err(Error::Malformed(format!("level {n}: expected {} bosonic values", Self::bosonic_count(k1, n))));
            }
            if s.iter().any(|&v| !v.is_finite() || v < DEGENERACY_TOL) {
                return Err(Error::Degenerate(format!("level {n}: bosonic values must be positive")));
            }
            for w in s.windows(2) {
                if w[0] - w[1] < DEGENERACY_TOL {
                    return Err(Error::Degenerate(format!("level {n}: {} and {} not strictly decreasing", w[0], w[1])));
                }
            }
        }
        for n in 1..=k1 {
            let (old, new) = (&b[n - 1], &b[n]);
            for (i, &s) in new.iter().enumerate() {
                let lo = old.get(i + 1).copied().unwrap_or(0.0);
                if s > old[i] || s < lo {
                    return Err(Error::Interlacing(format!("level {n}: s_{} = {s} outside [{lo}, {}]", i + 1, old[i])));
                }
            }
        }
        let f = &self.spectra.fermionic;
        if f.len() != k2 {
            return Err(Error::Malformed(format!("expected {k2} fermionic values")));
        }
        for w in f.windows(2) {
            if w[0] - w[1] < DEGENERACY_TOL {
                return Err(Error::Degenerate(format!("fermionic values {} and {} not strictly decreasing", w[0], w[1])));
            }
        }
        if let (Some(&fmin), Some(&smax)) = (f.last(), b[0].first()) {
            if fmin - smax < DEGENERACY_TOL {
                return Err(Error::Inadmissible(format!(
                    "fermionic value {fmin} must lie above every bosonic value (largest {smax})"
                )));
            }
        }
        if f.iter().any(|&v| !v.is_finite() || v < DEGENERACY_TOL) {
            return Err(Error::Degenerate("fermionic values must be positive".into()));
        }
        if self.theta.len() != k1 || self.theta.iter().enumerate().any(|(i, t)| t.len() != (k1 - i) / 2) {
            return Err(Error::Malformed("theta: one angle per bosonic pair of the previous level".into()));
        }
        if self.r.len() != k1 || self.r.iter().any(|&r| r > 1) {
            return Err(Error::Malformed("r: one bit per level".into()));
        }
        if self.xi_coefficients.len() != k1 || self.xi_coefficients.iter().any(|x| x.len() != k2) {
            return Err(Error::Malformed("xi_coefficients: k2 per level".into()));
        }
        if self.usp.k2 != k2 {
            return Err(Error::Malformed("usp chart has the wrong k2".into()));
        }
        self.usp.validate()?;
        debug_assert_eq!(self.bosonic_coordinate_count(), k1 * (k1 - 1) / 2);
        Ok(())
    }

    /// New eigenvalues plus angles over all levels.
    pub fn bosonic_coordinate_count(&self) -> usize {
        (1..=self.k1).map(|n| self.spectra.bosonic[n].len() + self.theta[n - 1].len()).sum()
    }

    pub fn xi(&self, n: usize, p: usize) -> G {
        let g = G::make_generator(self.generator_index(n, p), self.generators()).expect("generator in range");
        g.scale(self.xi_coefficients[n - 1][p - 1])
    }

    /// |ξ_p^{(n)}|² = conj(ξ)·ξ.
    pub fn xi_modulus(&self, n: usize, p: usize) -> G {
        let x = self.xi(n, p);
        &x.conjugate_graded() * &x
    }

    /// (is_p^{(n)})² = s_p² + Σ_{l ≤ n} |ξ_p^{(l)}|².
    pub fn fermionic_sq(&self, n: usize) -> Vec<G> {
        let gens = self.generators();
        (1..=self.k2)
            .map(|p| {
                let mut f = G::scalar(gens, self.spectra.fermionic[p - 1].powi(2));
                for l in 1..=n {
                    f += &self.xi_modulus(l, p);
                }
                f
            })
            .collect()
    }

    pub fn cartan_spectrum(&self, n: usize) -> CartanSpectrum {
        CartanSpectrum { level: n, bosonic: self.spectra.bosonic[n].clone(), fermionic_sq: self.fermionic_sq(n) }
    }

    pub fn level_input(&self, n: usize) -> Result<LevelInput> {
        if n == 0 || n > self.k1 {
            return Err(Error::OutOfRange(format!("level {n}")));
        }
        let sq = |v: &Vec<f64>| v.iter().map(|s| s * s).collect::<Vec<_>>();
        Ok(LevelInput {
            generators: self.generators(),
            odd: !self.is_even_level(n),
            x: sq(&self.spectra.bosonic[n - 1]),
            y: sq(&self.spectra.bosonic[n]),
            f0: self.fermionic_sq(n - 1),
            f1: self.fermionic_sq(n),
            xi: (1..=self.k2).map(|p| self.xi(n, p)).collect(),
            xi_sq: (1..=self.k2).map(|p| self.xi_modulus(n, p)).collect(),
        })
    }

    /// Same chart with every ξ set to zero.
    pub fn without_fermions(&self) -> Self {
        let mut c = self.clone();
        for row in &mut c.xi_coefficients {
            for x in row {
                *x = C64::new(0.0, 0.0);
            }
        }
        c
    }
}

// Spectra are separated by validation; products of squared gaps can still
// be far below that scale, so only an exact zero is rejected here.
fn check_body(g: &G, what: &str) -> Result<()> {
    let b = g.body().norm();
    if b == 0.0 || !b.is_finite() {
        return Err(Error::Degenerate(format!("vanishing denominator in {what}")));
    }
    Ok(())
}

fn product(gens: usize, factors: impl IntoIterator<Item = G>) -> G {
    factors.into_iter().fold(G::one(gens), |acc, f| &acc * &f)
}

fn ratio(num: G, den: G, what: &str) -> Result<G> {
    check_body(&den, what)?;
    num.multiply(&den.invert()?)
}

impl LevelInput {
    fn sc(&self, x: f64) -> G {
        G::scalar(self.generators, x)
    }

    /// Old bosonic squares with the odd-level zero adjoined.
    pub fn x_all(&self) -> Vec<f64> {
        let mut x = self.x.clone();
        if self.odd {
            x.push(0.0);
        }
        x
    }
}

/// |v|² and |α|² of the level's group column.
pub fn coset_moduli(inp: &LevelInput) -> Result<(Vec<G>, Option<G>, Vec<G>, Vec<G>)> {
    let gens = inp.generators;
    let xa = inp.x_all();
    let mut v = Vec::new();
    for (p, &xp) in xa.iter().enumerate() {
        let num = product(
            gens,
            inp.y.iter().map(|&y| inp.sc(xp - y)).chain(inp.f0.iter().map(|f| &inp.sc(xp) - f)),
        );
        let den = product(
            gens,
            xa.iter()
                .enumerate()
                .filter(|&(q, _)| q != p)
                .map(|(_, &xq)| inp.sc(xp - xq))
                .chain(inp.f1.iter().map(|f| &inp.sc(xp) - f)),
        );
        v.push(ratio(num, den, "|v|²")?);
    }
    let v0 = if inp.odd { v.pop() } else { None };
    let mut reduced = Vec::new();
    for (p, fp) in inp.f0.iter().enumerate() {
        let num = product(
            gens,
            inp.y
                .iter()
                .map(|&y| fp - &inp.sc(y))
                .chain(inp.f0.iter().enumerate().filter(|&(q, _)| q != p).map(|(_, fq)| fp - fq)),
        );
        let den = product(
            gens,
            xa.iter()
                .map(|&x| fp - &inp.sc(x))
                .chain(inp.f1.iter().enumerate().filter(|&(q, _)| q != p).map(|(_, fq)| fp - fq)),
        );
        reduced.push(ratio(num, den, "|α|²")?);
    }
    let alpha = reduced.iter().zip(&inp.xi_sq).map(|(r, x)| r * x).collect();
    Ok((v, v0, alpha, reduced))
}

/// |w|² and |β|² normalizing the level's new basis vectors.
pub fn projection_norms(inp: &LevelInput) -> Result<(Vec<G>, Option<G>, Vec<G>, Vec<G>)> {
    let gens = inp.generators;
    let xa = inp.x_all();
    let mut w = Vec::new();
    for (p, &yp) in inp.y.iter().enumerate() {
        let num = product(
            gens,
            xa.iter().map(|&x| inp.sc(yp - x)).chain(inp.f1.iter().map(|f| &inp.sc(yp) - f)),
        );
        let den = product(
            gens,
            std::iter::once(inp.sc(2.0 * yp))
                .chain(inp.y.iter().enumerate().filter(|&(q, _)| q != p).map(|(_, &yq)| inp.sc(yp - yq)))
                .chain(inp.f0.iter().map(|f| &inp.sc(yp) - f)),
        );
        w.push(-ratio(num, den, "|w|²")?);
    }
    let w0 = if inp.odd {
        None
    } else {
        let num = product(gens, inp.x.iter().map(|&x| inp.sc(x)).chain(inp.f1.iter().cloned()));
        let den = product(gens, inp.y.iter().map(|&y| inp.sc(y)).chain(inp.f0.iter().cloned()));
        Some(ratio(num, den, "|w₀|²")?)
    };
    let mut reduced = Vec::new();
    for (p, fp) in inp.f1.iter().enumerate() {
        let num = product(
            gens,
            inp.f1
                .iter()
                .enumerate()
                .filter(|&(q, _)| q != p)
                .map(|(_, fq)| fp - fq)
                .chain(xa.iter().map(|&x| fp - &inp.sc(x))),
        );
        let den = product(
            gens,
            std::iter::once(fp.scale(2.0))
                .chain(inp.y.iter().map(|&y| fp - &inp.sc(y)))
                .chain(inp.f0.iter().enumerate().filter(|&(q, _)| q != p).map(|(_, fq)| fp - fq)),
        );
        reduced.push(ratio(num, den, "|β|²")?);
    }
    let beta = reduced.iter().zip(&inp.xi_sq).map(|(r, x)| r * x).collect();
    Ok((w, w0, beta, reduced))
}

fn empty_moduli() -> LevelModuli {
    LevelModuli {
        v_sq: vec![],
        v0_sq: None,
        alpha_sq: vec![],
        alpha_reduced: vec![],
        w_sq: vec![],
        w0_sq: None,
        beta_sq: vec![],
        beta_reduced: vec![],
    }
}

/// |v|², |α|² (and the odd-level isolated |v|²) at level n.
pub fn solve_coset_moduli(chart: &GtChart, n: usize) -> Result<LevelModuli> {
    let (v_sq, v0_sq, alpha_sq, alpha_reduced) = coset_moduli(&chart.level_input(n)?)?;
    Ok(LevelModuli { v_sq, v0_sq, alpha_sq, alpha_reduced, ..empty_moduli() })
}

/// |w|², |β|² (and the even-level zero-eigenvalue |w|²) at level n.
pub fn solve_projection_norms(chart: &GtChart, n: usize) -> Result<LevelModuli> {
    let (w_sq, w0_sq, beta_sq, beta_reduced) = projection_norms(&chart.level_input(n)?)?;
    Ok(LevelModuli { w_sq, w0_sq, beta_sq, beta_reduced, ..empty_moduli() })
}

/// All moduli of level n.
pub fn level_moduli(chart: &GtChart, n: usize) -> Result<LevelModuli> {
    let inp = chart.level_input(n)?;
    let (v_sq, v0_sq, alpha_sq, alpha_reduced) = coset_moduli(&inp)?;
    let (w_sq, w0_sq, beta_sq, beta_reduced) = projection_norms(&inp)?;
    Ok(LevelModuli { v_sq, v0_sq, alpha_sq, alpha_reduced, w_sq, w0_sq, beta_sq, beta_reduced })
}

/// |ξ_p^{(n)}|² (1-based n, p).
pub fn xi_modulus(chart: &GtChart, n: usize, p: usize) -> Result<G> {
    if n == 0 || n > chart.k1 || p == 0 || p > chart.k2 {
        return Err(Error::OutOfRange(format!("ξ index (n={n}, p={p})")));
    }
    Ok(chart.xi_modulus(n, p))
}

/// Columns are the primed basis vectors in unprimed coordinates:
/// e'_1 = (e_1 + i e_2)/√2, e'_2 = (i e_1 + e_2)/√2 on each bosonic pair;
/// a leftover boson and all fermions are untouched.
pub fn primed_basis(kb: usize, k2: usize, generators: usize) -> SuperMatrix {
    let mut r = SuperMatrix::identity(kb, k2, generators);
    let s = G::scalar(generators, FRAC_1_SQRT_2);
    let is = G::scalar(generators, C64::new(0.0, FRAC_1_SQRT_2));
    for i in 0..kb / 2 {
        let (a, b) = (2 * i, 2 * i + 1);
        r.set(a, a, s.clone());
        r.set(b, b, s.clone());
        r.set(a, b, is.clone());
        r.set(b, a, is.clone());
    }
    r
}

/// Builds the level map. `r` is the sign bit applied to the isolated entry
/// at odd levels.
pub fn level_frame(chart: &GtChart, n: usize, r: u8) -> Result<LevelFrame> {
    let inp = chart.level_input(n)?;
    let gens = inp.generators;
    let k2 = chart.k2;
    let (v, v0, _alpha, alpha_red) = coset_moduli(&inp)?;
    let (w, w0, _beta, beta_red) = projection_norms(&inp)?;
    let m = inp.x.len();
    let kb = 2 * m + usize::from(inp.odd);
    let nn = kb + 2 * k2;
    let re = |x: f64| G::scalar(gens, x);

    let mut cartan = Vec::with_capacity(nn);
    let mut c = Vec::with_capacity(nn);
    for i in 0..m {
        let sigma = inp.x[i].sqrt();
        cartan.push(re(-sigma));
        cartan.push(re(sigma));
        let av = v[i].sqrt()?;
        let th = chart.theta[n - 1][i];
        c.push(av.scale(C64::from_polar(FRAC_1_SQRT_2, -th)));
        c.push(av.scale(C64::new(0.0, -1.0) * C64::from_polar(FRAC_1_SQRT_2, th)));
    }
    if inp.odd {
        cartan.push(G::zero(gens));
        let sign = if r == 1 { -1.0 } else { 1.0 };
        c.push(v0.as_ref().expect("odd level").sqrt()?.scale(sign));
    }
    let mu0: Vec<G> = inp.f0.iter().map(|f| f.sqrt()).collect::<Result<_>>()?;
    let mu1: Vec<G> = inp.f1.iter().map(|f| f.sqrt()).collect::<Result<_>>()?;
    let mut a = Vec::with_capacity(k2);
    for p in 0..k2 {
        let ap = alpha_red[p].sqrt()?;
        let alpha = &ap * &inp.xi[p];
        cartan.push(mu0[p].clone());
        cartan.push(-&mu0[p]);
        c.push(alpha.scale(FRAC_1_SQRT_2));
        c.push(alpha.conjugate_graded().scale(-FRAC_1_SQRT_2));
        a.push(ap);
    }

    // eigenvector (D - λ)^{-1} c, component by component
    let resolvent = |lam: &G, skip: Option<usize>| -> Result<Vec<G>> {
        (0..nn)
            .map(|i| {
                if Some(i) == skip {
                    return Ok(G::zero(gens));
                }
                let d = &cartan[i] - lam;
                check_body(&d, "resolvent")?;
                c[i].multiply(&d.invert()?)
            })
            .collect()
    };

    let mut eigenvalues = Vec::with_capacity(nn - 1);
    let mut cols: Vec<Vec<G>> = Vec::with_capacity(nn - 1);
    for (j, &yj) in inp.y.iter().enumerate() {
        let lam = yj.sqrt();
        let bw = w[j].sqrt()?;
        for (val, phase) in [(-lam, C64::new(-1.0, 0.0)), (lam, C64::new(0.0, 1.0))] {
            let l = re(val);
            let h = resolvent(&l, None)?;
            let b = bw.scale(phase);
            cols.push(h.iter().map(|x| x * &b).collect());
            eigenvalues.push(l);
        }
    }
    if !inp.odd {
        let l = G::zero(gens);
        let h = resolvent(&l, None)?;
        let b = w0.as_ref().expect("even level").sqrt()?.scale(C64::new(0.0, 1.0));
        cols.push(h.iter().map(|x| x * &b).collect());
        eigenvalues.push(l);
    }
    for p in 0..k2 {
        let b = beta_red[p].sqrt()?;
        let i0 = kb + 2 * p;
        let singular = (&a[p] * &(&mu0[p] + &mu1[p])).scale(FRAC_1_SQRT_2);
        for plus in [true, false] {
            let (lam, beta, hit) = if plus {
                (mu1[p].clone(), inp.xi[p].conjugate_graded(), i0)
            } else {
                (-&mu1[p], -&inp.xi[p], i0 + 1)
            };
            // the component on the same pair is a 0/0 resolved by
            // (μ0 - μ1)(μ0 + μ1) = -|ξ|²; its partner vanishes by ξ² = 0
            let skip_other = if plus { i0 + 1 } else { i0 };
            let mut h = Vec::with_capacity(nn);
            for i in 0..nn {
                if i == hit {
                    h.push(singular.clone());
                } else if i == skip_other {
                    h.push(G::zero(gens));
                } else {
                    let d = &cartan[i] - &lam;
                    check_body(&d, "fermionic resolvent")?;
                    h.push((&c[i] * &beta).multiply(&d.invert()?)?);
                }
            }
            cols.push(h.iter().map(|x| x * &b).collect());
            eigenvalues.push(lam);
        }
    }

    let mut q_primed = SuperMatrix::zeros(kb, k2, gens);
    for i in 0..nn {
        q_primed.set(i, 0, c[i].clone());
        for (j, col) in cols.iter().enumerate() {
            q_primed.set(i, j + 1, col[i].clone());
        }
    }
    let r_old = primed_basis(kb, k2, gens);
    let r_new = primed_basis(kb - 1, k2, gens).embed_after_bosons(1);
    let q = r_old.matmul(&q_primed)?.matmul(&r_new.superadjoint())?;
    Ok(LevelFrame { kb, cartan, eigenvalues, q_primed, q })
}

fn det_real(m: &[Vec<f64>]) -> f64 {
    let k = m.len();
    let mut a = m.to_vec();
    let mut det = 1.0;
    for col in 0..k {
        let piv = (col..k).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs())).expect("non-empty");
        if a[piv][col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            a.swap(piv, col);
            det = -det;
        }
        det *= a[col][col];
        for r in col + 1..k {
            let f = a[r][col] / a[col][col];
            for c in col..k {
                a[r][c] -= f * a[col][c];
            }
        }
    }
    det
}

fn bosonic_body_det(q: &SuperMatrix) -> f64 {
    let kb = q.k1();
    let m: Vec<Vec<f64>> = (0..kb).map(|i| (0..kb).map(|j| q.get(i, j).body().re).collect()).collect();
    det_real(&m)
}

/// All level maps with the last sign bit chosen so that the bosonic body has
/// determinant +1.
pub fn level_frames(chart: &GtChart) -> Result<Vec<LevelFrame>> {
    chart.validate()?;
    let k1 = chart.k1;
    let mut frames = Vec::with_capacity(k1);
    let mut det = 1.0;
    for n in 1..k1 {
        let f = level_frame(chart, n, chart.r[n - 1])?;
        det *= bosonic_body_det(&f.q);
        frames.push(f);
    }
    let mut last = level_frame(chart, k1, 0)?;
    if det * bosonic_body_det(&last.q) < 0.0 {
        last = level_frame(chart, k1, 1)?;
    }
    frames.push(last);
    Ok(frames)
}

/// Sign bit of the last level implied by det = +1 (cheap: bosonic bodies
/// only).
pub fn derived_last_sign(chart: &GtChart) -> Result<u8> {
    let bare = chart.without_fermions();
    let plain = GtChart { k2: 0, spectra: ChartSpectra { fermionic: vec![], ..bare.spectra.clone() }, xi_coefficients: vec![vec![]; chart.k1], usp: USpChart::with_zero_angles(0, vec![vec![]])?, ..bare };
    let frames = level_frames(&plain)?;
    let last = frames.last().expect("k1 >= 1");
    let body = last.q.get(0, 0).body().re;
    Ok(u8::from(body < 0.0))
}

/// USp block as a (0/k2) supermatrix over the chart's generators.
pub fn usp_block(chart: &GtChart) -> Result<SuperMatrix> {
    let u = usp_assemble(&chart.usp)?;
    SuperMatrix::from_complex(0, chart.k2, chart.generators(), &u)
}

/// The group element u = Q_1 (1 ⊕ Q_2) ⋯ (1_{k1} ⊕ U_USp).
pub fn assemble_element(chart: &GtChart) -> Result<SuperMatrix> {
    let frames = level_frames(chart)?;
    let mut t = usp_block(chart)?;
    for f in frames.iter().rev() {
        t = f.q.matmul(&t.embed_after_bosons(1))?;
    }
    Ok(t)
}

/// Column p (0-based) of the assembled element.
pub fn assemble_column(chart: &GtChart, p: usize) -> Result<Vec<G>> {
    let u = assemble_element(chart)?;
    if p >= u.ncols() {
        return Err(Error::OutOfRange(format!("column {p}")));
    }
    Ok(u.column(p))
}

/// Basis of level n's new model space as columns in the old level's
/// unrotated coordinates.
pub fn projection_basis(chart: &GtChart, n: usize) -> Result<SuperMatrix> {
    let frames = level_frames(chart)?;
    let q = &frames[n - 1].q;
    let rows = q.block(0, q.nrows(), 1, q.ncols());
    SuperMatrix::from_rows(q.k1(), q.k2(), q.k1() - 1, q.k2(), rows)
}

/// b̂^{(n)}: rows are the level-n basis vectors (superadjoint of
/// [`projection_basis`]), so that `b̂ · basis = 1`.
pub fn projection_matrix(chart: &GtChart, n: usize) -> Result<SuperMatrix> {
    Ok(projection_basis(chart, n)?.superadjoint())
}

/// Body of the boson-boson block as a real matrix.
pub fn bosonic_restrict(u: &SuperMatrix) -> Vec<Vec<f64>> {
    (0..u.k1()).map(|i| (0..u.k1()).map(|j| u.get(i, j).body().re).collect()).collect()
}

pub fn determinant(m: &[Vec<f64>]) -> f64 {
    det_real(m)
}
