use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use uosp::gt_core::assemble_element;
use uosp::measure::super_density;
use uosp::pattern::{sample_interlacing_spectra, TopSpectrum};
use uosp::{GrassmannElement, C64};

// dense-ish element: every monomial up to degree 4 with a deterministic coefficient
fn element(n: usize) -> GrassmannElement {
    let terms = (0u32..1 << n)
        .filter(|m| m.count_ones() <= 4)
        .map(|m| (m, C64::new(((m * 37) % 11) as f64 / 11.0, ((m * 53) % 7) as f64 / 7.0)));
    GrassmannElement::from_terms(n, terms).expect("valid masks")
}

fn grassmann(c: &mut Criterion) {
    let mut group = c.benchmark_group("grassmann_multiply");
    for n in [8, 12, 16] {
        let (a, b) = (element(n), element(n));
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |bch, _| bch.iter(|| black_box(&a).multiply(black_box(&b))));
    }
    group.finish();
}

fn assembly(c: &mut Criterion) {
    let mut group = c.benchmark_group("assemble_element");
    group.sample_size(20);
    for (k1, k2) in [(4, 0), (3, 1), (4, 1), (3, 2)] {
        let chart = sample_interlacing_spectra(k1, k2, &TopSpectrum::default_for(k1, k2), 1).expect("chart");
        group.bench_function(format!("{k1}_{k2}"), |bch| bch.iter(|| assemble_element(black_box(&chart))));
    }
    group.finish();
}

fn density(c: &mut Criterion) {
    let chart = sample_interlacing_spectra(4, 1, &TopSpectrum::default_for(4, 1), 1).expect("chart");
    c.bench_function("super_density_4_1", |bch| bch.iter(|| super_density(black_box(&chart))));
}

criterion_group!(benches, grassmann, assembly, density);
criterion_main!(benches);
