//! One PASS/FAIL line per acceptance criterion. Exits nonzero if any fails.

mod common;

use std::collections::BTreeMap;
use std::time::Instant;

use uosp::gt_core::GtChart;
use uosp::measure::{coset_density_product, super_prefactor, usp_density, usp_density_closed};
use uosp::pattern::{enumerate_integer_patterns, sample_interlacing_spectra, PatternKind, TopSpectrum};
use uosp::verify::{check_all, haar_moment_test, verify_appendix_a};

const SHAPES: [(usize, usize); 9] = [(2, 0), (3, 0), (4, 0), (5, 0), (2, 1), (3, 1), (4, 1), (2, 2), (3, 2)];
const CHARTS: u64 = 100;

fn chart(k1: usize, k2: usize, seed: u64) -> GtChart {
    sample_interlacing_spectra(k1, k2, &TopSpectrum::default_for(k1, k2), seed).expect("chart sampling")
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn line(n: usize, o: &Outcome) -> bool {
    println!("criterion {n} {}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    o.pass
}

/// Worst residual per check name over the grid, plus the eigensolver count.
fn grid_residuals() -> (BTreeMap<String, f64>, usize, f64) {
    let start = Instant::now();
    let mut worst: BTreeMap<String, f64> = BTreeMap::new();
    let mut eig_runs = 0;
    for (k1, k2) in SHAPES {
        for seed in 0..CHARTS {
            let c = chart(k1, k2, seed);
            for r in check_all(&c).expect("checks run") {
                if r.check == "recursion_eigensolver" {
                    eig_runs += 1;
                }
                let e = worst.entry(r.check).or_insert(0.0);
                *e = e.max(r.max_residual);
            }
        }
    }
    (worst, eig_runs, start.elapsed().as_secs_f64())
}

fn bucket(worst: &BTreeMap<String, f64>, names: &[&str], tol: f64) -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for name in names {
        match worst.get(*name) {
            Some(&v) => {
                pass &= v < tol;
                parts.push(format!("{name}={v:.1e}"));
            }
            None if *name == "w0_norm" || *name == "fermion_handoff" || *name == "beta_norm" => {}
            None => {
                pass = false;
                parts.push(format!("{name}=missing"));
            }
        }
    }
    Outcome { pass, detail: format!("{} (tol {tol:.0e})", parts.join(" ")) }
}

fn product_identities() -> Outcome {
    let mut worst = 0.0f64;
    let mut levels = 0;
    for (k1, k2) in [(4, 1), (4, 2), (2, 3)] {
        for seed in 0..20 {
            let c = chart(k1, k2, 1000 + seed);
            for n in (1..=k1).filter(|&n| c.is_even_level(n)) {
                for r in verify_appendix_a(&c, n).expect("product identities") {
                    worst = worst.max(r.max_residual);
                }
                levels += 1;
            }
        }
    }
    Outcome { pass: worst < 1e-10 && levels > 0, detail: format!("max residual {worst:.1e} over {levels} even levels, k2 in 1..=3") }
}

fn telescoping() -> Outcome {
    let mut worst = 0.0f64;
    let mut count = 0;
    for (k1, k2) in SHAPES.iter().copied().chain([(2, 3), (3, 3)]) {
        for seed in 0..20 {
            let c = chart(k1, k2, 2000 + seed);
            let prod = coset_density_product(&c).expect("density").value;
            let closed = super_prefactor(&c).expect("prefactor").value;
            worst = worst.max((&prod - &closed).max_abs() / closed.max_abs());
            let (a, b) = (usp_density(&c.usp).expect("chain"), usp_density_closed(&c.usp).expect("chain"));
            worst = worst.max((a - b).abs() / b.abs());
            count += 1;
        }
    }
    Outcome { pass: worst < 1e-10, detail: format!("max relative deviation {worst:.1e} over {count} charts") }
}

fn haar() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for k in 2..=4 {
        let start = Instant::now();
        let r = haar_moment_test(k, 1_000_000, 7).expect("haar run");
        let secs = start.elapsed().as_secs_f64();
        let dev = (r.e_u11_sq - r.analytic_u11_sq).abs();
        let ok = r.max_abs_z < 4.0 && dev < 0.005 / k as f64 && secs < 300.0;
        pass &= ok;
        parts.push(format!("k={k} max|z|={:.2} E[u11^2]={:.5} ({secs:.0}s)", r.max_abs_z, r.e_u11_sq));
    }
    Outcome { pass, detail: parts.join("; ") }
}

/// Dimension by the hook-content formula: ∏ over boxes (k + content) / hook.
fn hook_content(top: &[i64]) -> u64 {
    let k = top.len() as i64;
    let shift = *top.last().expect("nonempty");
    let shape: Vec<i64> = top.iter().map(|t| t - shift).collect();
    let (mut num, mut den) = (1u64, 1u64);
    for (i, &len) in shape.iter().enumerate() {
        for j in 0..len {
            let arm = len - j - 1;
            let leg = shape[i + 1..].iter().filter(|&&l| l > j).count() as i64;
            num *= (k + j - i as i64) as u64;
            den *= (arm + leg + 1) as u64;
        }
    }
    num / den
}

fn tops(k: usize, max: i64) -> Vec<Vec<i64>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for first in 0..=max {
        for rest in tops(k - 1, first) {
            let mut t = vec![first];
            t.extend(rest);
            out.push(t);
        }
    }
    out
}

fn patterns() -> Outcome {
    let mut checked = 0;
    let mut bad = Vec::new();
    for k in 1..=4 {
        for top in tops(k, 3) {
            let topf: Vec<f64> = top.iter().map(|&t| t as f64).collect();
            let count = enumerate_integer_patterns(PatternKind::Unitary, &topf, None).expect("enumeration").len() as u64;
            let expect = hook_content(&top);
            checked += 1;
            if count != expect {
                bad.push(format!("{top:?}: {count} vs {expect}"));
            }
        }
    }
    Outcome { pass: bad.is_empty(), detail: format!("{checked} highest weights, mismatches: {bad:?}") }
}

fn kernel() -> Outcome {
    let (n_ex, bad_ex) = common::exhaustive(4);
    let (n_rand, bad_rand) = common::randomized(11, 2000, 8);
    let fails = bad_ex.len() + bad_rand.len();
    let mut detail = format!("{n_ex} exhaustive and {n_rand} randomized checks, {fails} failures");
    if let Some(f) = bad_ex.iter().chain(&bad_rand).next() {
        detail.push_str(&format!(", first: {f}"));
    }
    Outcome { pass: fails == 0, detail }
}

fn main() {
    let (worst, eig_runs, secs) = grid_residuals();
    let mut c1 = bucket(&worst, &["unitarity", "orthosymplectic"], 1e-10);
    c1.pass &= secs < 120.0;
    c1.detail.push_str(&format!(", {} charts in {secs:.1}s", SHAPES.len() as u64 * CHARTS));
    let c2 = bucket(
        &worst,
        &["normalization", "bosonic_secular", "fermionic_bracket", "secular_function", "w_norm", "w0_norm", "beta_norm"],
        1e-10,
    );
    let mut c4 = bucket(&worst, &["completeness", "reality"], 1e-10);
    let imag = bucket(&worst, &["projection_imaginary_body"], 1e-12);
    c4.pass &= imag.pass;
    c4.detail = format!("{}; {}", c4.detail, imag.detail);
    let mut c5 = bucket(&worst, &["recursion_cartan", "fermion_handoff", "recursion_eigensolver"], 1e-9);
    c5.pass &= eig_runs > 0;
    c5.detail.push_str(&format!(", {eig_runs} eigensolver cross-checks"));

    let results = [
        line(1, &c1),
        line(2, &c2),
        line(3, &product_identities()),
        line(4, &c4),
        line(5, &c5),
        line(6, &telescoping()),
        line(7, &haar()),
        line(8, &patterns()),
        line(9, &kernel()),
    ];
    if results.iter().any(|ok| !ok) {
        std::process::exit(1);
    }
}
