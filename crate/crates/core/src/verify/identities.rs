use crate::error::{Error, Result};
use crate::grassmann::GrassmannElement as G;
use crate::gt_core::{level_moduli, GtChart};

use super::{Report, Tally};

fn subsets(k: usize, r: usize) -> Vec<Vec<usize>> {
    (0u32..1 << k).filter(|m| m.count_ones() as usize == r).map(|m| (0..k).filter(|&i| m >> i & 1 == 1).collect()).collect()
}

/// 1/|w_p|² at an even level three ways: the level equation with the
/// closed-form moduli substituted term by term, the closed prefactor times
/// ∏(1 + |ξ_q|²/(y_p − F0_q)), and rank by rank in |ξ^{(n)}|² through the
/// partial-fraction form. Also 1/|β̃_p|² (by inversion) against the
/// regularized finite factor.
pub fn verify_appendix_a(chart: &GtChart, n: usize) -> Result<Vec<Report>> {
    if n == 0 || n > chart.k1 || !chart.is_even_level(n) {
        return Err(Error::Infeasible(format!("product identities need an even level, got {n}")));
    }
    let inp = chart.level_input(n)?;
    let m = level_moduli(chart, n)?;
    let gens = inp.generators;
    let k2 = chart.k2;
    let sc = |x: f64| G::scalar(gens, x);
    let level_mask: u32 = (1..=k2).map(|p| 0b11u32 << chart.generator_index(n, p)).sum();
    let rank = |mask: u32| (mask & level_mask).count_ones() as usize / 2;

    let (mut t_prod, mut t_w, mut t_sec) = (Tally::default(), Tally::default(), Tally::default());
    for (p, &yp) in inp.y.iter().enumerate() {
        let mut direct = G::zero(gens);
        for (v, &x) in m.v_sq.iter().zip(&inp.x) {
            direct += &v.scale((x + yp) / (x - yp).powi(2));
        }
        for (a, f0) in m.alpha_sq.iter().zip(&inp.f0) {
            let d = f0 - &sc(yp);
            direct += &(&(a * &(f0 + &sc(yp))) * &(&d * &d).invert()?);
        }

        let mut pre = -2.0 * yp;
        for (q, &yq) in inp.y.iter().enumerate() {
            if q != p {
                pre *= yp - yq;
            }
        }
        for &x in &inp.x {
            pre /= x - yp;
        }
        let mut product = sc(pre);
        for (xi, f0) in inp.xi_sq.iter().zip(&inp.f0) {
            let factor = &sc(1.0) + &(xi * &(&sc(yp) - f0).invert()?);
            product = &product * &factor;
        }
        t_prod.add(&(&direct - &product));
        t_w.add(&(&product - &m.w_sq[p].invert()?));

        for r in 0..=k2 {
            let mut sector = G::zero(gens);
            for set in subsets(k2, r) {
                // Σ_i 1/((y − F_i)∏_{j≠i}(F_i − F_j)), which is 1 for the empty set
                let mut pf = if set.is_empty() { sc(1.0) } else { G::zero(gens) };
                for &i in &set {
                    let mut den = &sc(yp) - &inp.f0[i];
                    for &j in &set {
                        if j != i {
                            den = &den * &(&inp.f0[i] - &inp.f0[j]);
                        }
                    }
                    pf += &den.invert()?;
                }
                let xis = set.iter().fold(sc(pre), |acc, &j| &acc * &inp.xi_sq[j]);
                sector += &(&xis * &pf);
            }
            let direct_r = direct.filter(|mask| rank(mask) == r);
            t_sec.add(&(&direct_r - &sector.filter(|mask| rank(mask) == r)));
        }
    }

    let mut t_beta = Tally::default();
    for p in 0..k2 {
        let mu0 = inp.f0[p].sqrt()?;
        let mu1 = inp.f1[p].sqrt()?;
        let sum = &mu0 + &mu1;
        let mut finite = (&m.alpha_reduced[p] * &(&sum * &sum)).scale(0.5);
        let f1 = &inp.f1[p];
        let mut bracket = G::zero(gens);
        for (v, &x) in m.v_sq.iter().zip(&inp.x) {
            let d = &sc(x) - f1;
            bracket += &(v * &(&(&sc(x) + f1) * &(&d * &d).invert()?));
        }
        for (q, (a, f0)) in m.alpha_sq.iter().zip(&inp.f0).enumerate() {
            if q != p {
                let d = f0 - f1;
                bracket += &(&(a * &(f0 + f1)) * &(&d * &d).invert()?);
            }
        }
        finite -= &(&inp.xi_sq[p] * &bracket);
        t_beta.add(&(&m.beta_reduced[p].invert()? - &finite));
    }

    Ok(vec![
        t_prod.report("appendix_a_product"),
        t_w.report("appendix_a_closed_w"),
        t_sec.report("appendix_a_rank_sectors"),
        t_beta.report("appendix_a_beta"),
    ])
}
