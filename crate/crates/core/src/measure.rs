//! Invariant-measure densities relative to the flat measure
//! d[s]d[ϑ]d[ξ] (and d[cos ψ]d[γ] on the USp chain).
//!
//! Vandermonde factors inside densities are evaluated on ascending values,
//! which keeps every bosonic factor positive. Even levels carry an extra
//! (−1)^{k2} from the mixed boson-fermion denominator; it is absorbed into
//! the orientation of d[ξ] so that density bodies are positive.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grassmann::GrassmannElement as G;
use crate::gt_core::GtChart;
use crate::usp_chain::USpChart;

/// A Grassmann-even density prefactor; a plain scalar when k2 = 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityValue {
    pub value: G,
}

impl DensityValue {
    pub fn body(&self) -> f64 {
        self.value.body().re
    }
}

/// ∏_{p>q}(x_p − x_q), literally in the given order.
pub fn vandermonde(values: &[f64]) -> f64 {
    let mut d = 1.0;
    for p in 0..values.len() {
        for q in 0..p {
            d *= values[p] - values[q];
        }
    }
    d
}

fn vandermonde_g(values: &[G], generators: usize) -> G {
    let mut d = G::one(generators);
    for p in 0..values.len() {
        for q in 0..p {
            d = &d * &(&values[p] - &values[q]);
        }
    }
    d
}

/// B = Δ(s₁)Δ(is₂)/∏_{p,q}(s_{p1} − is_{q2}), literally in the given order.
pub fn super_vandermonde_b(bosonic: &[f64], fermionic: &[G], generators: usize) -> Result<G> {
    let mut den = G::one(generators);
    for &s in bosonic {
        for f in fermionic {
            let diff = &G::scalar(generators, s) - f;
            if diff.body().norm() < crate::DEGENERACY_TOL {
                return Err(Error::Degenerate(format!("bosonic value {s} meets a fermionic body")));
            }
            den = &den * &diff;
        }
    }
    let num = vandermonde_g(fermionic, generators) * vandermonde(bosonic);
    Ok(&num * &den.invert()?)
}

fn ascending(v: &[f64]) -> Vec<f64> {
    let mut a = v.to_vec();
    a.sort_by(f64::total_cmp);
    a
}

fn ascending_g(v: &[G]) -> Vec<G> {
    let mut a = v.to_vec();
    a.sort_by(|x, y| x.body().re.total_cmp(&y.body().re));
    a
}

/// B on squared spectra at chart level n, in density orientation.
fn level_b(chart: &GtChart, n: usize) -> Result<G> {
    let x: Vec<f64> = chart.spectra.bosonic[n].iter().map(|s| s * s).collect();
    if vandermonde(&ascending(&x)) <= 0.0 && x.len() > 1 {
        return Err(Error::Degenerate(format!("bosonic spectrum at level {n}")));
    }
    let f = ascending_g(&chart.fermionic_sq(n));
    if vandermonde_g(&f, chart.generators()).body().re <= 0.0 && f.len() > 1 {
        return Err(Error::Degenerate(format!("fermionic spectrum at level {n}")));
    }
    super_vandermonde_b(&ascending(&x), &f, chart.generators())
}

fn mu(chart: &GtChart, n: usize) -> Result<Vec<G>> {
    chart.fermionic_sq(n).iter().map(G::sqrt).collect()
}

fn product(gens: usize, items: impl IntoIterator<Item = G>) -> G {
    items.into_iter().fold(G::one(gens), |acc, x| &acc * &x)
}

fn check_level(chart: &GtChart, n: usize) -> Result<()> {
    if n == 0 || n > chart.k1 {
        return Err(Error::OutOfRange(format!("level {n} outside 1..={}", chart.k1)));
    }
    Ok(())
}

/// Density of the level-n coset.
pub fn coset_density(chart: &GtChart, n: usize) -> Result<DensityValue> {
    check_level(chart, n)?;
    let gens = chart.generators();
    let k2 = chart.k2 as i32;
    let ratio = &level_b(chart, n)? * &level_b(chart, n - 1)?.invert()?;
    let value = if chart.is_even_level(n) {
        let s: f64 = chart.spectra.bosonic[n].iter().product();
        ratio * (2f64.powi(k2) * s * (-1f64).powi(k2))
    } else {
        let s: f64 = chart.spectra.bosonic[n - 1].iter().product();
        let m = product(gens, mu(chart, n)?.into_iter().chain(mu(chart, n - 1)?));
        &m * &ratio * (2f64.powi(k2) / s)
    };
    Ok(DensityValue { value })
}

/// Product of all coset densities, level by level.
pub fn coset_density_product(chart: &GtChart) -> Result<DensityValue> {
    let mut acc = G::one(chart.generators());
    for n in 1..=chart.k1 {
        acc = &acc * &coset_density(chart, n)?.value;
    }
    Ok(DensityValue { value: acc })
}

/// Closed telescoped prefactor of the orthosymplectic part. For odd k1 the
/// first level leaves 1/∏s^{(0)} and the μ-product starts at level 0.
pub fn super_prefactor(chart: &GtChart) -> Result<DensityValue> {
    let (k1, k2) = (chart.k1, chart.k2);
    let gens = chart.generators();
    let top_f = ascending_g(&chart.fermionic_sq(k1));
    let mut value = &vandermonde_g(&top_f, gens) * &level_b(chart, 0)?.invert()?;
    let first = if k1 % 2 == 0 { 1 } else { 0 };
    for i in first..=k1 {
        value = &value * &product(gens, mu(chart, i)?);
    }
    let even_levels = (k1 / 2) as i32;
    let mut scale = 2f64.powi((k1 * k2) as i32) * (-1f64).powi(k2 as i32 * even_levels);
    if k1 % 2 == 1 {
        scale /= chart.spectra.bosonic[0].iter().product::<f64>();
    }
    Ok(DensityValue { value: value * scale })
}

/// Full density: orthosymplectic prefactor times the USp chain factor.
pub fn super_density(chart: &GtChart) -> Result<DensityValue> {
    let pre = super_prefactor(chart)?;
    Ok(DensityValue { value: pre.value * usp_density(&chart.usp)? })
}

/// |∏_{p,q}(t_p − t'_q)|
fn mixed(t: &[f64], t_new: &[f64]) -> f64 {
    t.iter().flat_map(|a| t_new.iter().map(move |b| (a - b).abs())).product()
}

fn chain_vandermonde(t: &[f64]) -> Result<f64> {
    let d = vandermonde(&ascending(t));
    if t.len() > 1 && d <= 0.0 {
        return Err(Error::Degenerate(format!("chain spectrum {t:?}")));
    }
    Ok(d)
}

/// Density of chain level m (1..=k2), with K = k2 − m + 1 old eigenvalues,
/// K − 1 new ones.
pub fn usp_level_density(usp: &USpChart, m: usize) -> Result<f64> {
    if m == 0 || m > usp.k2 {
        return Err(Error::OutOfRange(format!("chain level {m} outside 1..={}", usp.k2)));
    }
    let k = usp.k2 - m + 1;
    let (old, new) = (&usp.spectra[m - 1], &usp.spectra[m]);
    Ok(chain_vandermonde(new)? * mixed(old, new) / (2f64.powi(k as i32 - 1) * chain_vandermonde(old)?.powi(3)))
}

/// Product of the chain-level densities.
pub fn usp_density(usp: &USpChart) -> Result<f64> {
    (1..=usp.k2).try_fold(1.0, |acc, m| Ok(acc * usp_level_density(usp, m)?))
}

/// Closed telescoped chain density.
pub fn usp_density_closed(usp: &USpChart) -> Result<f64> {
    let k2 = usp.k2;
    if k2 == 0 {
        return Ok(1.0);
    }
    let mut d = 1.0 / (2f64.powi((k2 * (k2 - 1) / 2) as i32) * chain_vandermonde(&usp.spectra[0])?.powi(3));
    for m in 1..=k2 {
        d *= mixed(&usp.spectra[m - 1], &usp.spectra[m]) / chain_vandermonde(&usp.spectra[m])?.powi(2);
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::{sample_interlacing_spectra, TopSpectrum};

    #[test]
    fn vandermonde_examples() {
        assert_eq!(vandermonde(&[3.0, 1.0]), -2.0);
        assert_eq!(vandermonde(&[5.0]), 1.0);
        assert_eq!(vandermonde(&[2.0, 7.0, 2.0]), 0.0);
    }

    #[test]
    fn b_examples() {
        let b = super_vandermonde_b(&[2.0], &[G::scalar(0, 1.0)], 0).unwrap();
        assert!((b.body().re - 1.0).abs() < 1e-15);
        let b = super_vandermonde_b(&[3.0, 1.0], &[], 0).unwrap();
        assert_eq!(b.body().re, -2.0);
        // 1/(1 − θθ*) = 1 + θθ*
        let th = G::make_generator(0, 2).unwrap();
        let soul = &th * &G::make_generator(1, 2).unwrap();
        let f = &G::scalar(2, 1.0) + &soul;
        let b = super_vandermonde_b(&[2.0], &[f], 2).unwrap();
        let expect = &G::scalar(2, 1.0) + &soul;
        assert!((&b - &expect).max_abs() < 1e-15);
        assert!(super_vandermonde_b(&[2.0], &[G::scalar(0, 2.0)], 0).is_err());
    }

    #[test]
    fn so2_density_is_one() {
        let c = sample_interlacing_spectra(2, 0, &TopSpectrum::default_for(2, 0), 1).unwrap();
        assert!((coset_density(&c, 1).unwrap().body() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn telescoping_and_positivity() {
        for (k1, k2) in [(2, 0), (3, 0), (4, 0), (5, 0), (2, 1), (3, 1), (4, 1), (2, 2), (3, 2), (2, 3)] {
            for seed in 0..3 {
                let c = sample_interlacing_spectra(k1, k2, &TopSpectrum::default_for(k1, k2), seed).unwrap();
                for n in 1..=k1 {
                    assert!(coset_density(&c, n).unwrap().body() > 0.0, "({k1},{k2}) level {n}");
                }
                let prod = coset_density_product(&c).unwrap().value;
                let closed = super_prefactor(&c).unwrap().value;
                let rel = (&prod - &closed).max_abs() / closed.max_abs();
                assert!(rel < 1e-10, "({k1},{k2}) seed {seed}: {rel}");
                let (a, b) = (usp_density(&c.usp).unwrap(), usp_density_closed(&c.usp).unwrap());
                assert!((a - b).abs() <= 1e-10 * b.abs() && b > 0.0);
            }
        }
    }
}
