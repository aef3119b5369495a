//! Residual checkers tying closed forms back to their defining equations.
//! The oracles here rebuild the equations term by term; they share only the
//! Grassmann kernel with the code under test.

mod identities;
mod haar;

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grassmann::GrassmannElement as G;
use crate::gt_core::{level_frames, level_moduli, GtChart, LevelFrame, LevelInput, LevelModuli};
use crate::superlinear::{metric, SuperMatrix};

pub use identities::verify_appendix_a;
pub use haar::{haar_moment_test, sample_haar_chart, HaarReport, MomentStat};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectorResidual {
    pub mask: u32,
    pub residual: f64,
}

/// {"check", "max_residual", "per_coefficient"}: the largest residual and
/// its breakdown by Grassmann monomial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub check: String,
    pub max_residual: f64,
    pub per_coefficient: Vec<SectorResidual>,
}

/// Accumulates per-monomial maxima.
#[derive(Default)]
pub(crate) struct Tally {
    sectors: BTreeMap<u32, f64>,
    max: f64,
}

impl Tally {
    pub(crate) fn add(&mut self, g: &G) {
        for &(mask, c) in g.terms() {
            let e = self.sectors.entry(mask).or_insert(0.0);
            *e = e.max(c.norm());
            self.max = self.max.max(c.norm());
        }
    }

    pub(crate) fn add_scalar(&mut self, r: f64) {
        let e = self.sectors.entry(0).or_insert(0.0);
        *e = e.max(r.abs());
        self.max = self.max.max(r.abs());
    }

    pub(crate) fn report(self, check: impl Into<String>) -> Report {
        Report {
            check: check.into(),
            max_residual: self.max,
            per_coefficient: self.sectors.into_iter().map(|(mask, residual)| SectorResidual { mask, residual }).collect(),
        }
    }
}

fn matrix_tally(m: &SuperMatrix) -> Tally {
    let mut t = Tally::default();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            t.add(m.get(i, j));
        }
    }
    t
}

fn diff_report(a: &SuperMatrix, b: &SuperMatrix, check: &str) -> Report {
    match a.try_sub(b) {
        Ok(d) => matrix_tally(&d).report(check),
        Err(_) => Report { check: check.into(), max_residual: f64::INFINITY, per_coefficient: vec![] },
    }
}

/// Residuals of u‡u − 1 and u^{st} L u − L.
pub fn check_defining_properties(u: &SuperMatrix) -> Vec<Report> {
    let gens = u.generators();
    let one = SuperMatrix::identity(u.k1(), u.k2(), gens);
    let l = metric(u.k1(), u.k2(), gens);
    let unit = u.superadjoint().matmul(u);
    let osp = u.supertranspose().matmul(&l).and_then(|m| m.matmul(u));
    let fail = |check: &str| Report { check: check.into(), max_residual: f64::INFINITY, per_coefficient: vec![] };
    vec![
        unit.map(|m| diff_report(&m, &one, "unitarity")).unwrap_or_else(|_| fail("unitarity")),
        osp.map(|m| diff_report(&m, &l, "orthosymplectic")).unwrap_or_else(|_| fail("orthosymplectic")),
    ]
}

fn inv(g: &G) -> Result<G> {
    g.invert()
}

/// Residuals of the level equations for given moduli. Fermionic equations
/// are checked through the finite factor left after removing the pole.
pub fn gt_residuals_with(inp: &LevelInput, m: &LevelModuli) -> Result<Vec<Report>> {
    let gens = inp.generators;
    let sc = |x: f64| G::scalar(gens, x);
    let xa = inp.x_all();
    let mut v = m.v_sq.clone();
    if let Some(v0) = &m.v0_sq {
        v.push(v0.clone());
    }
    let one = sc(1.0);

    let mut t = Tally::default();
    let mut r = one.clone();
    for x in v.iter().chain(&m.alpha_sq) {
        r -= x;
    }
    t.add(&r);
    let mut out = vec![t.report("normalization")];

    // Σ |v|²/(x − y) + Σ |α|²/(F0 − y) = 0 at every new bosonic value
    let mut t = Tally::default();
    for &y in &inp.y {
        let mut s = G::zero(gens);
        for (vm, &xm) in v.iter().zip(&xa) {
            s += &vm.scale(1.0 / (xm - y));
        }
        for (a, f) in m.alpha_sq.iter().zip(&inp.f0) {
            s += &(a * &inv(&(f - &sc(y)))?);
        }
        t.add(&s);
    }
    out.push(t.report("bosonic_secular"));

    // The secular function has poles at the new fermionic values and zeros
    // at the old ones. At F0_p the same-pair term |α_p|²/(F1_p − F0_p) is a
    // 0/0 worth R_p, fixed only up to the annihilator of |ξ_p|², so the
    // finite factor is checked after multiplying through by |ξ_p|².
    let mut t = Tally::default();
    for (p, f0p) in inp.f0.iter().enumerate() {
        let mut s = G::zero(gens);
        for (vm, &xm) in v.iter().zip(&xa) {
            s += &(vm * &inv(&(&sc(xm) - f0p))?);
        }
        for (q, (a, f0)) in m.alpha_sq.iter().zip(&inp.f0).enumerate() {
            if q != p {
                s += &(a * &inv(&(f0 - f0p))?);
            }
        }
        t.add(&(&(&inp.xi_sq[p] * &s) + &m.alpha_sq[p]));
    }
    out.push(t.report("fermionic_bracket"));

    // full partial-fraction form at generic points off the spectrum
    let mut t = Tally::default();
    for j in 0..3 {
        let lam = sc(-1.0 - 0.75 * j as f64);
        let mut lhs = G::zero(gens);
        for (vm, &xm) in v.iter().zip(&xa) {
            lhs += &(vm * &inv(&(&sc(xm) - &lam))?);
        }
        for (a, f0) in m.alpha_sq.iter().zip(&inp.f0) {
            lhs += &(a * &inv(&(f0 - &lam))?);
        }
        let mut rhs = sc(1.0);
        for &y in &inp.y {
            rhs = &rhs * &(&sc(y) - &lam);
        }
        for f in &inp.f0 {
            rhs = &rhs * &(f - &lam);
        }
        for &x in &xa {
            rhs = &rhs * &inv(&(&sc(x) - &lam))?;
        }
        for f in &inp.f1 {
            rhs = &rhs * &inv(&(f - &lam))?;
        }
        t.add(&(&lhs - &rhs));
    }
    out.push(t.report("secular_function"));

    let norm_bracket = |lam: &G, skip: Option<usize>| -> Result<G> {
        let mut s = G::zero(gens);
        for (vm, &xm) in v.iter().zip(&xa) {
            let d = &sc(xm) - lam;
            s += &(&(vm * &(&sc(xm) + lam)) * &inv(&(&d * &d))?);
        }
        for (q, (a, f0)) in m.alpha_sq.iter().zip(&inp.f0).enumerate() {
            if Some(q) != skip {
                let d = f0 - lam;
                s += &(&(a * &(f0 + lam)) * &inv(&(&d * &d))?);
            }
        }
        Ok(s)
    };

    let mut t = Tally::default();
    for (w, &y) in m.w_sq.iter().zip(&inp.y) {
        t.add(&(&one - &(w * &norm_bracket(&sc(y), None)?)));
    }
    out.push(t.report("w_norm"));

    let mut t = Tally::default();
    if let Some(w0) = &m.w0_sq {
        let mut s = G::zero(gens);
        for (vm, &xm) in v.iter().zip(&xa) {
            s += &vm.scale(1.0 / xm);
        }
        for (a, f0) in m.alpha_sq.iter().zip(&inp.f0) {
            s += &(a * &inv(f0)?);
        }
        t.add(&(&one - &(w0 * &s)));
    }
    out.push(t.report("w0_norm"));

    // 1 = |β̃_p|² T_p with the same-pair 0/0 resolved through
    // (μ0 − μ1)(μ0 + μ1) = −|ξ_p|²
    let mut t = Tally::default();
    for p in 0..inp.f1.len() {
        let mu0 = inp.f0[p].sqrt()?;
        let mu1 = inp.f1[p].sqrt()?;
        let sum = &mu0 + &mu1;
        let singular = (&m.alpha_reduced[p] * &(&sum * &sum)).scale(0.5);
        let tp = &singular - &(&inp.xi_sq[p] * &norm_bracket(&inp.f1[p], Some(p))?);
        t.add(&(&one - &(&m.beta_reduced[p] * &tp)));
    }
    out.push(t.report("beta_norm"));
    Ok(out)
}

/// All level-equation residuals at level n.
pub fn check_gt_residuals(chart: &GtChart, n: usize) -> Result<Vec<Report>> {
    gt_residuals_with(&chart.level_input(n)?, &level_moduli(chart, n)?)
}

/// Prescribed Cartan element of chart level l in unrotated coordinates:
/// [[0, iσ], [−iσ, 0]] per bosonic value, a 0 for a leftover boson, and
/// diag(μ, −μ) per fermionic value.
pub fn cartan_matrix(chart: &GtChart, l: usize) -> Result<SuperMatrix> {
    let gens = chart.generators();
    let kb = chart.k1 - l;
    let mut s = SuperMatrix::zeros(kb, chart.k2, gens);
    for (i, &sigma) in chart.spectra.bosonic[l].iter().enumerate() {
        s.set(2 * i, 2 * i + 1, G::scalar(gens, C64::new(0.0, sigma)));
        s.set(2 * i + 1, 2 * i, G::scalar(gens, C64::new(0.0, -sigma)));
    }
    for (p, f) in chart.fermionic_sq(l).iter().enumerate() {
        let mu = f.sqrt()?;
        s.set(kb + 2 * p, kb + 2 * p, mu.clone());
        s.set(kb + 2 * p + 1, kb + 2 * p + 1, -mu);
    }
    Ok(s)
}

fn split_frame(f: &LevelFrame) -> Result<(SuperMatrix, SuperMatrix)> {
    let q = &f.q;
    let u = SuperMatrix::from_rows(q.k1(), q.k2(), 1, 0, q.block(0, q.nrows(), 0, 1))?;
    let b = SuperMatrix::from_rows(q.k1(), q.k2(), q.k1() - 1, q.k2(), q.block(0, q.nrows(), 1, q.ncols()))?;
    Ok((u, b))
}

fn projected(chart: &GtChart, f: &LevelFrame, n: usize) -> Result<(SuperMatrix, SuperMatrix)> {
    let (u, b) = split_frame(f)?;
    let s = cartan_matrix(chart, n - 1)?;
    let gens = chart.generators();
    let p = SuperMatrix::identity(s.k1(), s.k2(), gens).try_sub(&u.matmul(&u.superadjoint())?)?;
    let psp = p.matmul(&s)?.matmul(&p)?;
    let m = b.superadjoint().matmul(&psp)?.matmul(&b)?;
    Ok((psp, m))
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

fn recursion_reports(chart: &GtChart, frames: &[LevelFrame], n: usize) -> Result<Vec<Report>> {
    let f = &frames[n - 1];
    let (psp, m) = projected(chart, f, n)?;
    let mut out = vec![diff_report(&m, &cartan_matrix(chart, n)?, "recursion_cartan")];
    if n == chart.k1 {
        // the hand-off to the USp chain: no bosonic block may survive
        let mut t = Tally::default();
        t.add_scalar((m.k1() as f64) * 1.0);
        out.push(t.report("fermion_handoff"));
    }
    if chart.k2 == 0 {
        let k = psp.nrows();
        let body = DMatrix::from_fn(k, k, |i, j| psp.get(i, j).body());
        let eig = sorted(body.symmetric_eigen().eigenvalues.iter().copied().collect());
        let mut expect: Vec<f64> = chart.spectra.bosonic[n].iter().flat_map(|&s| [s, -s]).collect();
        expect.push(0.0);
        if (chart.k1 - n) % 2 == 1 {
            expect.push(0.0);
        }
        let mut t = Tally::default();
        for (a, b) in eig.iter().zip(sorted(expect)) {
            t.add_scalar(a - b);
        }
        out.push(t.report("recursion_eigensolver"));
    }
    Ok(out)
}

/// Projected level-(n−1) Cartan element seen in the level-n basis, against
/// the prescribed level-n Cartan element; an eigensolver cross-check when
/// k2 = 0.
pub fn check_recursion_spectrum(chart: &GtChart, n: usize) -> Result<Vec<Report>> {
    recursion_reports(chart, &level_frames(chart)?, n)
}

/// b̂ b̂‡ = 1, real bodies of b̂, and the reality condition on the bosonic
/// columns of the assembled element.
pub fn check_projection(chart: &GtChart, n: usize) -> Result<Vec<Report>> {
    let b = crate::gt_core::projection_matrix(chart, n)?;
    let gens = chart.generators();
    let one = SuperMatrix::identity(b.k1(), b.k2(), gens);
    let mut out = vec![diff_report(&b.matmul(&b.superadjoint())?, &one, "completeness")];
    let mut t = Tally::default();
    for i in 0..b.nrows() {
        for j in 0..b.ncols() {
            t.add_scalar(b.get(i, j).body().im);
        }
    }
    out.push(t.report("projection_imaginary_body"));
    Ok(out)
}

/// Bosonic columns: bosonic rows self-conjugate, fermion rows paired as
/// u_{2j} = −conj(u_{2j−1}) under the graded conjugation.
pub fn check_reality(u: &SuperMatrix) -> Report {
    let mut t = Tally::default();
    let k1 = u.k1();
    for i in 0..k1 {
        for j in 0..k1 {
            let x = u.get(j, i);
            t.add(&(&x.conjugate_graded() - x));
        }
        for p in 0..u.k2() {
            let (a, b) = (u.get(k1 + 2 * p, i), u.get(k1 + 2 * p + 1, i));
            t.add(&(b + &a.conjugate_graded()));
        }
    }
    t.report("reality")
}

/// Every check on every level of a chart.
pub fn check_all(chart: &GtChart) -> Result<Vec<Report>> {
    let frames = level_frames(chart)?;
    let u = crate::gt_core::assemble_element(chart)?;
    let mut out = check_defining_properties(&u);
    out.push(check_reality(&u));
    for n in 1..=chart.k1 {
        out.extend(check_gt_residuals(chart, n)?);
        out.extend(recursion_reports(chart, &frames, n)?);
        out.extend(check_projection(chart, n)?);
        if chart.is_even_level(n) && chart.k2 <= 3 {
            out.extend(verify_appendix_a(chart, n)?);
        }
    }
    Ok(out)
}

/// Largest residual over a set of reports.
pub fn worst(reports: &[Report]) -> f64 {
    reports.iter().map(|r| r.max_residual).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::{sample_interlacing_spectra, TopSpectrum};

    const SHAPES: [(usize, usize); 9] = [(2, 0), (3, 0), (4, 0), (5, 0), (2, 1), (3, 1), (4, 1), (2, 2), (3, 2)];

    fn chart(k1: usize, k2: usize, seed: u64) -> GtChart {
        sample_interlacing_spectra(k1, k2, &TopSpectrum::default_for(k1, k2), seed).unwrap()
    }

    #[test]
    fn identity_has_zero_residual() {
        let u = SuperMatrix::identity(3, 1, 4);
        assert!(worst(&check_defining_properties(&u)) == 0.0);
    }

    #[test]
    fn perturbation_is_detected() {
        let c = chart(3, 1, 5);
        let mut u = crate::gt_core::assemble_element(&c).unwrap();
        let x = u.get(1, 2) + &G::scalar(u.generators(), 1e-3);
        u.set(1, 2, x);
        let w = worst(&check_defining_properties(&u));
        assert!(w > 5e-4 && w < 3e-3, "{w}");

        let inp = c.level_input(1).unwrap();
        let mut m = level_moduli(&c, 1).unwrap();
        m.v_sq[0] += &G::scalar(inp.generators, 1e-4);
        let norm = &gt_residuals_with(&inp, &m).unwrap()[0];
        assert!((norm.max_residual - 1e-4).abs() < 1e-12);
    }

    #[test]
    fn all_checks_pass_on_every_shape() {
        for (k1, k2) in SHAPES {
            let c = chart(k1, k2, 11);
            for r in check_all(&c).unwrap() {
                assert!(r.max_residual < 1e-9, "({k1},{k2}) {}: {}", r.check, r.max_residual);
            }
        }
    }

    #[test]
    fn product_identities_reject_odd_levels() {
        let c = chart(3, 1, 2);
        assert!(verify_appendix_a(&c, 1).is_err());
        assert!(verify_appendix_a(&c, 2).is_ok());
    }

    #[test]
    fn haar_small_run() {
        let r = haar_moment_test(2, 2000, 3).unwrap();
        assert!((r.e_u11_sq - 0.5).abs() < 0.05);
        let r = haar_moment_test(3, 2000, 3).unwrap();
        assert!((r.e_u11_sq - 1.0 / 3.0).abs() < 0.05, "{}", r.e_u11_sq);
    }
}

