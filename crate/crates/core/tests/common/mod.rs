//! Grassmann kernel invariants shared by the property tests and the
//! acceptance run.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uosp::{GrassmannElement as G, C64};

const TOL: f64 = 1e-12;

pub fn monomials(n: usize) -> Vec<G> {
    (0u32..1 << n).map(|m| G::from_terms(n, [(m, C64::new(1.0, 0.0))]).unwrap()).collect()
}

fn close(a: &G, b: &G) -> bool {
    (a - b).max_abs() <= TOL * (1.0 + a.max_abs().max(b.max_abs()))
}

fn degree(a: &G) -> u32 {
    a.terms().first().map_or(0, |t| t.0.count_ones())
}

/// Failures of each invariant for the given elements; `a`, `b`, `c` are
/// assumed homogeneous when `homogeneous` is set.
pub fn failures(a: &G, b: &G, c: &G, homogeneous: bool) -> Vec<&'static str> {
    let mut out = vec![];
    if !close(&(&(a * b) * c), &(a * &(b * c))) {
        out.push("associativity");
    }
    if homogeneous {
        let sign = if degree(a) % 2 == 1 && degree(b) % 2 == 1 { -1.0 } else { 1.0 };
        if !close(&(a * b), &((b * a) * sign)) {
            out.push("graded commutativity");
        }
    }
    if !close(&a.conjugate().conjugate(), a) {
        out.push("conjugation involution");
    }
    let twice = a.conjugate_graded().conjugate_graded();
    if (a.is_even() && !close(&twice, a)) || (a.is_odd() && !close(&twice, &-a)) {
        out.push("graded conjugation involution");
    }
    let n = a.num_generators();
    let one = G::one(n);
    let x = &G::scalar(n, C64::new(1.5, 0.5)) + a;
    match x.invert() {
        Ok(xi) if close(&(&x * &xi), &one) && close(&(&xi * &x), &one) => {}
        _ => out.push("invert round-trip"),
    }
    let e = a.filter(|m| m.count_ones() % 2 == 0 && m != 0);
    let y = &G::scalar(n, 2.0) + &e;
    match y.sqrt() {
        Ok(r) if close(&(&r * &r), &y) => {}
        _ => out.push("sqrt round-trip"),
    }
    out
}

/// Every triple of basis monomials for each even generator count up to
/// max_n (generators come in conjugate pairs).
pub fn exhaustive(max_n: usize) -> (usize, Vec<String>) {
    let mut checked = 0;
    let mut bad = vec![];
    for n in (0..=max_n).step_by(2) {
        let mono = monomials(n);
        for a in &mono {
            for b in &mono {
                for c in &mono {
                    checked += 1;
                    for f in failures(a, b, c, true) {
                        bad.push(format!("n={n} {a:?} {b:?} {c:?}: {f}"));
                    }
                }
            }
        }
    }
    (checked, bad)
}

pub fn random_element(rng: &mut ChaCha8Rng, n: usize, density: f64) -> G {
    let mut terms = vec![];
    for m in 0u32..1 << n {
        if rng.random::<f64>() < density {
            terms.push((m, C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))));
        }
    }
    G::from_terms(n, terms).unwrap()
}

/// Random dense elements with 6..=max_n paired generators, plus random homogeneous
/// ones for graded commutativity.
pub fn randomized(seed: u64, count: usize, max_n: usize) -> (usize, Vec<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = vec![];
    for i in 0..count {
        let n = 2 * rng.random_range(3..=max_n / 2);
        let (a, b, c) = (random_element(&mut rng, n, 0.3), random_element(&mut rng, n, 0.3), random_element(&mut rng, n, 0.3));
        for f in failures(&a, &b, &c, false) {
            bad.push(format!("sample {i} (n={n}): {f}"));
        }
        let (da, db) = (rng.random_range(0..=n as u32), rng.random_range(0..=n as u32));
        let (ha, hb) = (a.grade(da), b.grade(db));
        for f in failures(&ha, &hb, &c, true) {
            bad.push(format!("sample {i} (n={n}, grades {da},{db}): {f}"));
        }
    }
    (count, bad)
}
