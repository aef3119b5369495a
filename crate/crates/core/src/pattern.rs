//! Gelfand patterns, betweenness conditions, integer-pattern enumeration and
//! seeded sampling of admissible charts.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gt_core::{derived_last_sign, ChartSpectra, GtChart};
use crate::usp_chain::USpChart;

/// Refuse to enumerate beyond this many patterns.
pub const ENUMERATION_LIMIT: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PatternKind {
    Unitary,
    Orthogonal,
    Uosp,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GelfandPattern {
    pub kind: PatternKind,
    /// Orthogonal kind: N of SO(N). Uosp kind: k1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    pub rows: Vec<Vec<f64>>,
    /// Uosp kind: k1×k2 rectangle of |ξ|² markers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi_block: Option<Vec<Vec<f64>>>,
    /// Uosp kind: the USp chain triangle.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub usp_triangle: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Validation {
    pub valid: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub violation: Option<String>,
}

impl Validation {
    fn ok() -> Self {
        Self { valid: true, violation: None }
    }
    fn fail(msg: String) -> Self {
        Self { valid: false, violation: Some(msg) }
    }
}

/// Allowed interval for each entry of the row below `prev`, for a row of
/// `count` entries. Entries interlace; a missing lower neighbour is 0.
fn interlacing_bounds(prev: &[f64], count: usize) -> Vec<(f64, f64)> {
    (0..count).map(|i| (prev.get(i + 1).copied().unwrap_or(0.0), prev[i])).collect()
}

/// Bounds for the SO(d-1) row below an SO(d) row.
fn orthogonal_bounds(prev: &[f64], d: usize) -> Vec<(f64, f64)> {
    let m = prev.len();
    if d % 2 == 1 {
        // SO(2m+1) -> SO(2m): λ_i ≥ μ_i ≥ λ_{i+1}, λ_m ≥ |μ_m|
        (0..m).map(|i| if i + 1 < m { (prev[i + 1], prev[i]) } else { (-prev[i], prev[i]) }).collect()
    } else {
        // SO(2m) -> SO(2m-1): λ_i ≥ μ_i ≥ λ_{i+1}, last lower bound |λ_m|
        (0..m.saturating_sub(1)).map(|i| (if i + 2 == m { prev[i + 1].abs() } else { prev[i + 1] }, prev[i])).collect()
    }
}

fn check_rows(rows: &[Vec<f64>], bounds: impl Fn(usize, &[f64]) -> Vec<(f64, f64)>, lengths: &[usize], name: &str) -> Result<Validation> {
    if rows.len() != lengths.len() {
        return Err(Error::Malformed(format!("{name}: expected {} rows, got {}", lengths.len(), rows.len())));
    }
    for (j, (row, &len)) in rows.iter().zip(lengths).enumerate() {
        if row.len() != len {
            return Err(Error::Malformed(format!("{name}: row {j} must have {len} entries")));
        }
    }
    for j in 1..rows.len() {
        for (i, ((lo, hi), &x)) in bounds(j, &rows[j - 1]).into_iter().zip(&rows[j]).enumerate() {
            if x < lo || x > hi {
                return Ok(Validation::fail(format!("{name}: {lo} ≤ x_{}^({j}) = {x} ≤ {hi} violated", i + 1)));
            }
        }
    }
    Ok(Validation::ok())
}

fn top_ordered(top: &[f64], strict: bool) -> bool {
    top.windows(2).all(|w| if strict { w[0] > w[1] } else { w[0] >= w[1] })
}

impl GelfandPattern {
    pub fn unitary(rows: Vec<Vec<f64>>) -> Self {
        Self { kind: PatternKind::Unitary, dim: None, rows, xi_block: None, usp_triangle: None }
    }

    pub fn orthogonal(dim: usize, rows: Vec<Vec<f64>>) -> Self {
        Self { kind: PatternKind::Orthogonal, dim: Some(dim), rows, xi_block: None, usp_triangle: None }
    }

    /// Pattern induced by a chart: bosonic triangle, |ξ|² rectangle and
    /// USp triangle.
    pub fn from_chart(chart: &GtChart) -> Self {
        Self {
            kind: PatternKind::Uosp,
            dim: Some(chart.k1),
            rows: chart.spectra.bosonic.clone(),
            xi_block: Some(chart.xi_coefficients.iter().map(|r| r.iter().map(|c| c.norm_sqr()).collect()).collect()),
            usp_triangle: Some(chart.usp.spectra.clone()),
        }
    }

    /// Checks every betweenness inequality of the kind; reports the first
    /// violation. Malformed shapes are errors.
    pub fn validate(&self) -> Result<Validation> {
        match self.kind {
            PatternKind::Unitary => {
                let k = self.rows.first().map_or(0, Vec::len);
                let lengths: Vec<usize> = (0..k).map(|j| k - j).collect();
                if self.rows.first().is_some_and(|top| !top_ordered(top, false)) {
                    return Ok(Validation::fail("unitary: top row not ordered".into()));
                }
                check_rows(&self.rows, |_, prev| interlacing_bounds(prev, prev.len() - 1), &lengths, "unitary")
            }
            PatternKind::Orthogonal => {
                let n = self.dim.ok_or_else(|| Error::Malformed("orthogonal pattern needs dim".into()))?;
                if n < 2 {
                    return Err(Error::Malformed("orthogonal dim must be at least 2".into()));
                }
                let lengths: Vec<usize> = (0..n - 1).map(|j| (n - j) / 2).collect();
                let top = &self.rows.first().ok_or_else(|| Error::Malformed("empty pattern".into()))?;
                let nonneg = if n % 2 == 0 { &top[..top.len().saturating_sub(1)] } else { &top[..] };
                if !top_ordered(top, false) || nonneg.iter().any(|&x| x < 0.0) {
                    return Ok(Validation::fail("orthogonal: top row not a dominant weight".into()));
                }
                check_rows(&self.rows, |j, prev| orthogonal_bounds(prev, n - j + 1), &lengths, "orthogonal")
            }
            PatternKind::Uosp => self.validate_uosp(),
        }
    }

    fn validate_uosp(&self) -> Result<Validation> {
        let k1 = self.dim.ok_or_else(|| Error::Malformed("uosp pattern needs dim = k1".into()))?;
        let tri = self.usp_triangle.as_ref().ok_or_else(|| Error::Malformed("uosp pattern needs usp_triangle".into()))?;
        let k2 = tri.first().map_or(0, Vec::len);
        let xi = self.xi_block.as_ref().ok_or_else(|| Error::Malformed("uosp pattern needs xi_block".into()))?;
        if xi.len() != k1 || xi.iter().any(|r| r.len() != k2) {
            return Err(Error::Malformed(format!("xi_block must be {k1}x{k2}")));
        }
        if xi.iter().flatten().any(|&x| x < 0.0) {
            return Err(Error::Malformed("xi_block markers must be non-negative".into()));
        }
        let lengths: Vec<usize> = (0..=k1).map(|n| (k1 - n) / 2).collect();
        if self.rows.first().is_some_and(|top| !top_ordered(top, true)) {
            return Ok(Validation::fail("uosp: bosonic top row not strictly ordered".into()));
        }
        let v = check_rows(&self.rows, |_, prev| interlacing_bounds(prev, prev.len()), &lengths, "uosp bosonic")?;
        if !v.valid {
            return Ok(v);
        }
        let lengths: Vec<usize> = (0..=k2).map(|m| k2 - m).collect();
        if tri.first().is_some_and(|top| !top_ordered(top, true)) {
            return Ok(Validation::fail("uosp: usp top row not strictly ordered".into()));
        }
        check_rows(tri, |_, prev| interlacing_bounds(prev, prev.len() - 1), &lengths, "uosp usp")
    }
}

fn integer_steps(lo: f64, hi: f64) -> impl Iterator<Item = f64> {
    let count = if hi >= lo { ((hi - lo) + 1e-9).floor() as usize + 1 } else { 0 };
    (0..count).map(move |k| lo + k as f64)
}

fn enumerate_rows(
    rows: &mut Vec<Vec<f64>>,
    depth: usize,
    bounds: &dyn Fn(usize, &[f64]) -> Vec<(f64, f64)>,
    out: &mut Vec<Vec<Vec<f64>>>,
) -> Result<()> {
    if depth == 0 {
        if out.len() >= ENUMERATION_LIMIT {
            return Err(Error::Infeasible(format!("more than {ENUMERATION_LIMIT} patterns")));
        }
        out.push(rows.clone());
        return Ok(());
    }
    let j = rows.len();
    let b = bounds(j, &rows[j - 1]);
    let mut current = vec![0.0; b.len()];
    fill_row(rows, depth, bounds, out, &b, 0, &mut current)
}

fn fill_row(
    rows: &mut Vec<Vec<f64>>,
    depth: usize,
    bounds: &dyn Fn(usize, &[f64]) -> Vec<(f64, f64)>,
    out: &mut Vec<Vec<Vec<f64>>>,
    b: &[(f64, f64)],
    i: usize,
    current: &mut Vec<f64>,
) -> Result<()> {
    if i == b.len() {
        rows.push(current.clone());
        let r = enumerate_rows(rows, depth - 1, bounds, out);
        rows.pop();
        return r;
    }
    for x in integer_steps(b[i].0, b[i].1) {
        current[i] = x;
        fill_row(rows, depth, bounds, out, b, i + 1, current)?;
    }
    Ok(())
}

/// All patterns with integer steps below `top`; the count equals the
/// dimension of the irreducible representation with highest weight `top`.
/// `dim` is required for the orthogonal kind (SO(dim)).
pub fn enumerate_integer_patterns(kind: PatternKind, top: &[f64], dim: Option<usize>) -> Result<Vec<GelfandPattern>> {
    let twice: Vec<f64> = top.iter().map(|x| 2.0 * x).collect();
    if twice.iter().any(|x| (x - x.round()).abs() > 1e-9) {
        return Err(Error::Malformed("top entries must be integers or half-integers".into()));
    }
    let mut out = Vec::new();
    match kind {
        PatternKind::Unitary => {
            if !top_ordered(top, false) {
                return Err(Error::Malformed("unitary top row must be non-increasing".into()));
            }
            let k = top.len();
            let bounds = |_: usize, prev: &[f64]| interlacing_bounds(prev, prev.len() - 1);
            enumerate_rows(&mut vec![top.to_vec()], k.saturating_sub(1), &bounds, &mut out)?;
            Ok(out.into_iter().map(GelfandPattern::unitary).collect())
        }
        PatternKind::Orthogonal => {
            let n = dim.ok_or_else(|| Error::Malformed("orthogonal enumeration needs dim".into()))?;
            if n < 2 || top.len() != n / 2 {
                return Err(Error::Malformed(format!("SO({n}) top row needs {} entries", n / 2)));
            }
            let p = GelfandPattern::orthogonal(n, vec![top.to_vec()]);
            let nonneg = if n % 2 == 0 { &top[..top.len() - 1] } else { top };
            if !top_ordered(top, false) || nonneg.iter().any(|&x| x < 0.0) || (n % 2 == 0 && top.len() > 1 && top[top.len() - 2] < top[top.len() - 1].abs()) {
                return Err(Error::Malformed(format!("{:?} is not a dominant SO({n}) weight", p.rows[0])));
            }
            let bounds = move |j: usize, prev: &[f64]| orthogonal_bounds(prev, n - j + 1);
            enumerate_rows(&mut vec![top.to_vec()], n - 2, &bounds, &mut out)?;
            Ok(out.into_iter().map(|rows| GelfandPattern::orthogonal(n, rows)).collect())
        }
        PatternKind::Uosp => Err(Error::Infeasible(
            "uosp patterns carry a continuous ξ-rectangle; integer enumeration is undefined".into(),
        )),
    }
}

/// Weyl dimension of the U(k) irrep with highest weight `top`.
pub fn weyl_dimension_unitary(top: &[f64]) -> f64 {
    let k = top.len();
    let mut d = 1.0;
    for i in 0..k {
        for j in i + 1..k {
            d *= (top[i] - top[j] + (j - i) as f64) / (j - i) as f64;
        }
    }
    d
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopSpectrum {
    pub bosonic: Vec<f64>,
    pub fermionic: Vec<f64>,
}

impl TopSpectrum {
    /// Evenly spaced default: bosonic (m, ..., 1), fermionic above.
    pub fn default_for(k1: usize, k2: usize) -> Self {
        let m = k1 / 2;
        Self {
            bosonic: (0..m).map(|i| (m - i) as f64).collect(),
            fermionic: (0..k2).map(|q| (m + 1 + k2 - q) as f64).collect(),
        }
    }
}

/// One interlacing chain below `top`, uniform on the polytope: each level
/// is drawn uniformly in its box and the whole chain is accepted with
/// probability proportional to the product of later box volumes.
fn sample_chain(rng: &mut ChaCha8Rng, top: &[f64], counts: &[usize]) -> Result<Vec<Vec<f64>>> {
    let scale = top.first().copied().unwrap_or(0.0);
    for _ in 0..100_000 {
        let mut levels = vec![top.to_vec()];
        let mut accept = 1.0;
        for (lvl, &count) in counts.iter().enumerate() {
            let b = interlacing_bounds(levels.last().expect("top present"), count);
            if lvl > 0 && count > 0 {
                let vol: f64 = b.iter().map(|(lo, hi)| hi - lo).product();
                let bound = (scale / count as f64).powi(count as i32);
                accept *= vol / bound;
            }
            levels.push(b.iter().map(|&(lo, hi)| rng.random_range(lo..=hi)).collect());
        }
        if rng.random::<f64>() < accept {
            return Ok(levels);
        }
    }
    Err(Error::Sampler("interlacing chain acceptance too low".into()))
}

fn complex_normal(rng: &mut ChaCha8Rng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Random admissible chart: bosonic and USp chains uniform in their
/// interlacing polytopes, angles uniform, odd-level sign bits fair (the last
/// one fixed by det = +1), ξ coefficients standard complex normal.
pub fn sample_interlacing_spectra(k1: usize, k2: usize, top: &TopSpectrum, seed: u64) -> Result<GtChart> {
    let m = k1 / 2;
    if k1 == 0 {
        return Err(Error::Infeasible("k1 must be at least 1".into()));
    }
    if top.bosonic.len() != m || top.fermionic.len() != k2 {
        return Err(Error::Infeasible(format!("top spectrum needs {m} bosonic and {k2} fermionic values")));
    }
    let ordered = |v: &[f64]| v.iter().all(|x| x.is_finite() && *x > 0.0) && top_ordered(v, true);
    if !ordered(&top.bosonic) || !ordered(&top.fermionic) {
        return Err(Error::Infeasible("top spectrum must be positive and strictly decreasing".into()));
    }
    if let (Some(f), Some(b)) = (top.fermionic.last(), top.bosonic.first()) {
        if f <= b {
            return Err(Error::Infeasible("fermionic top values must exceed every bosonic value".into()));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let counts: Vec<usize> = (1..=k1).map(|n| (k1 - n) / 2).collect();
    let bosonic = sample_chain(&mut rng, &top.bosonic, &counts)?;
    let theta = (1..=k1)
        .map(|n| (0..(k1 - n + 1) / 2).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect())
        .collect();
    let r = (1..=k1).map(|n| if (k1 - n + 1) % 2 == 1 { rng.random_range(0..=1u8) } else { 0 }).collect();
    let xi_coefficients = (0..k1).map(|_| (0..k2).map(|_| complex_normal(&mut rng)).collect()).collect();
    let usp_counts: Vec<usize> = (1..=k2).map(|mm| k2 - mm).collect();
    let usp_spectra = sample_chain(&mut rng, &top.fermionic, &usp_counts)?;
    let angles = |rng: &mut ChaCha8Rng, f: &dyn Fn(&mut ChaCha8Rng) -> f64| -> Vec<Vec<f64>> {
        (1..=k2).map(|mm| (0..k2 - mm + 1).map(|_| f(rng)).collect()).collect()
    };
    let psi = angles(&mut rng, &|r| r.random::<f64>().acos());
    let gamma1 = angles(&mut rng, &|r| r.random_range(0.0..std::f64::consts::TAU));
    let gamma2 = angles(&mut rng, &|r| r.random_range(0.0..std::f64::consts::TAU));
    let usp = USpChart::new(k2, usp_spectra, psi, gamma1, gamma2)?;
    let mut chart = GtChart {
        k1,
        k2,
        spectra: ChartSpectra { bosonic, fermionic: top.fermionic.clone() },
        theta,
        r,
        xi_coefficients,
        usp,
    };
    chart.validate()?;
    chart.r[k1 - 1] = derived_last_sign(&chart)?;
    Ok(chart)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unitary_validation_examples() {
        let ok = GelfandPattern::unitary(vec![vec![2.0, 1.0, 0.0], vec![2.0, 0.0], vec![1.0]]);
        assert!(ok.validate().unwrap().valid);
        let bad = GelfandPattern::unitary(vec![vec![2.0, 1.0, 0.0], vec![3.0, 0.0], vec![1.0]]);
        let v = bad.validate().unwrap();
        assert!(!v.valid);
        assert!(v.violation.unwrap().contains("x_1^(1)"));
        let malformed = GelfandPattern::unitary(vec![vec![2.0, 1.0, 0.0], vec![2.0]]);
        assert!(malformed.validate().is_err());
    }

    #[test]
    fn orthogonal_negative_entry() {
        // SO(3) -> SO(2): |μ| ≤ λ
        let p = GelfandPattern::orthogonal(3, vec![vec![1.0], vec![-1.0]]);
        assert!(p.validate().unwrap().valid);
        let p = GelfandPattern::orthogonal(3, vec![vec![1.0], vec![-2.0]]);
        assert!(!p.validate().unwrap().valid);
    }

    #[test]
    fn enumeration_examples() {
        assert_eq!(enumerate_integer_patterns(PatternKind::Unitary, &[1.0, 0.0], None).unwrap().len(), 2);
        assert_eq!(enumerate_integer_patterns(PatternKind::Unitary, &[2.0, 1.0, 0.0], None).unwrap().len(), 8);
        assert_eq!(enumerate_integer_patterns(PatternKind::Unitary, &[0.0; 4], None).unwrap().len(), 1);
        assert!(enumerate_integer_patterns(PatternKind::Uosp, &[1.0], None).is_err());
    }

    #[test]
    fn orthogonal_counts() {
        let count = |n: usize, top: &[f64]| enumerate_integer_patterns(PatternKind::Orthogonal, top, Some(n)).unwrap().len();
        assert_eq!(count(3, &[1.0]), 3);
        assert_eq!(count(3, &[2.0]), 5);
        // SO(4) (a, b): (a+b+1)(a-b+1)
        assert_eq!(count(4, &[1.0, 0.0]), 4);
        assert_eq!(count(4, &[2.0, -1.0]), 8);
        assert_eq!(count(4, &[0.5, 0.5]), 2);
        // SO(5) (a, b): (2a+3)(2b+1)(a-b+1)(a+b+2)/6
        assert_eq!(count(5, &[1.0, 0.0]), 5);
        assert_eq!(count(5, &[1.0, 1.0]), 10);
        assert_eq!(count(5, &[0.5, 0.5]), 4);
        assert_eq!(count(6, &[1.0, 0.0, 0.0]), 6);
    }

    #[test]
    fn sampler_is_deterministic_and_valid() {
        let top = TopSpectrum::default_for(4, 2);
        let a = sample_interlacing_spectra(4, 2, &top, 7).unwrap();
        let b = sample_interlacing_spectra(4, 2, &top, 7).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert!(GelfandPattern::from_chart(&a).validate().unwrap().valid);
        let bad = TopSpectrum { bosonic: vec![1.0, 2.0], fermionic: vec![] };
        assert!(sample_interlacing_spectra(4, 0, &bad, 1).is_err());
    }
}
