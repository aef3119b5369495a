//! Moment comparison of GT-coordinate sampling of SO(k) against Gaussian
//! orthogonalization.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gt_core::{assemble_element, ChartSpectra, GtChart};
use crate::measure::coset_density;
use crate::usp_chain::USpChart;

const MAX_TRIES: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentStat {
    pub row: usize,
    pub col: usize,
    pub order: u32,
    pub gt: f64,
    pub oracle: f64,
    pub z: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HaarReport {
    pub k: usize,
    pub samples: usize,
    pub acceptance_rate: f64,
    /// E[u₁₁²] from the GT sampler and its exact value 1/k.
    pub e_u11_sq: f64,
    pub analytic_u11_sq: f64,
    pub max_abs_z: f64,
    pub moments: Vec<MomentStat>,
}

fn empty_chart(k: usize) -> Result<GtChart> {
    let m = k / 2;
    Ok(GtChart {
        k1: k,
        k2: 0,
        spectra: ChartSpectra {
            bosonic: (0..=k).map(|n| (0..(k - n) / 2).map(|i| (m - i) as f64).collect()).collect(),
            fermionic: vec![],
        },
        theta: (1..=k).map(|n| vec![0.0; (k - n + 1) / 2]).collect(),
        r: vec![0; k],
        xi_coefficients: vec![vec![]; k],
        usp: USpChart::with_zero_angles(0, vec![vec![]])?,
    })
}

/// Upper bound of the k2 = 0 coset density over the box of level n.
fn density_bound(chart: &GtChart, n: usize, bx: &[(f64, f64)]) -> f64 {
    let prev = &chart.spectra.bosonic[n - 1];
    let xs: Vec<f64> = prev.iter().map(|s| s * s).collect();
    let mut dx = 1.0;
    for p in 0..xs.len() {
        for q in 0..p {
            dx *= (xs[p] - xs[q]).abs();
        }
    }
    let mut dy = 1.0;
    for i in 0..bx.len() {
        for j in 0..i {
            let (a, b) = (bx[i], bx[j]);
            dy *= (a.1 * a.1 - b.0 * b.0).abs().max((b.1 * b.1 - a.0 * a.0).abs());
        }
    }
    if chart.is_even_level(n) {
        bx.iter().map(|b| b.1).product::<f64>() * dy / dx
    } else {
        dy / (dx * prev.iter().product::<f64>())
    }
}

/// One chart of SO(k) distributed by the Haar measure: each level's
/// spectrum by rejection against the coset density inside its interlacing
/// box, angles uniform, sign bits fair (the last one fixed by det = +1).
/// Returns the chart and the number of proposals used.
pub fn sample_haar_chart(k: usize, rng: &mut ChaCha8Rng) -> Result<(GtChart, usize)> {
    let mut chart = empty_chart(k)?;
    let mut proposals = 0;
    for n in 1..=k {
        let count = (k - n) / 2;
        let prev = chart.spectra.bosonic[n - 1].clone();
        let bx: Vec<(f64, f64)> = (0..count).map(|i| (prev.get(i + 1).copied().unwrap_or(0.0), prev[i])).collect();
        let bound = density_bound(&chart, n, &bx);
        let mut tries = 0;
        loop {
            tries += 1;
            if tries > MAX_TRIES {
                return Err(Error::Sampler(format!("rejection rate above 99.9% at level {n}")));
            }
            chart.spectra.bosonic[n] = bx.iter().map(|&(lo, hi)| rng.random_range(lo..=hi)).collect();
            let d = match coset_density(&chart, n) {
                Ok(d) => d.body(),
                Err(_) => continue,
            };
            if d > bound * (1.0 + 1e-12) {
                return Err(Error::Sampler(format!("density {d} exceeds bound {bound} at level {n}")));
            }
            if rng.random::<f64>() * bound < d {
                break;
            }
        }
        proposals += tries;
        chart.theta[n - 1] = (0..(k - n + 1) / 2).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
        chart.r[n - 1] = if n < k && (k - n + 1) % 2 == 1 { rng.random_range(0..=1u8) } else { 0 };
    }
    Ok((chart, proposals))
}

fn gt_sample(k: usize, rng: &mut ChaCha8Rng) -> Result<(Vec<f64>, usize)> {
    let (chart, tries) = sample_haar_chart(k, rng)?;
    let u = assemble_element(&chart)?;
    Ok(((0..k * k).map(|i| u.get(i / k, i % k).body().re).collect(), tries))
}

/// Gaussian matrix, QR with positive diagonal of R, first column flipped
/// if needed so that det = +1.
fn oracle_sample(k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let g = DMatrix::<f64>::from_fn(k, k, |_, _| rng.sample(StandardNormal));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..k {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    if q.determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    (0..k * k).map(|i| q[(i / k, i % k)]).collect()
}

#[derive(Clone, Default)]
struct Sums {
    n: usize,
    tries: usize,
    /// per entry: Σu², Σu⁴, Σu⁸
    s: Vec<[f64; 3]>,
}

impl Sums {
    fn new(k: usize) -> Self {
        Self { n: 0, tries: 0, s: vec![[0.0; 3]; k * k] }
    }
    fn push(&mut self, u: &[f64]) {
        self.n += 1;
        for (acc, &x) in self.s.iter_mut().zip(u) {
            let x2 = x * x;
            acc[0] += x2;
            acc[1] += x2 * x2;
            acc[2] += x2 * x2 * x2 * x2;
        }
    }
    fn merge(&mut self, o: &Sums) {
        self.n += o.n;
        self.tries += o.tries;
        for (a, b) in self.s.iter_mut().zip(&o.s) {
            for t in 0..3 {
                a[t] += b[t];
            }
        }
    }
    /// (mean, variance of the sample mean) for order 2 or 4
    fn stat(&self, e: usize, order: u32) -> (f64, f64) {
        let n = self.n as f64;
        let [s2, s4, s8] = self.s[e];
        let (m, sq) = if order == 2 { (s2 / n, s4 / n) } else { (s4 / n, s8 / n) };
        (m, (sq - m * m).max(0.0) / n)
    }
}

fn shard(k: usize, samples: usize, seed: u64) -> Result<(Sums, Sums)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut gt, mut or) = (Sums::new(k), Sums::new(k));
    for _ in 0..samples {
        let (u, tries) = gt_sample(k, &mut rng)?;
        gt.push(&u);
        gt.tries += tries;
        or.push(&oracle_sample(k, &mut rng));
    }
    Ok((gt, or))
}

/// Second and fourth moments of every entry, GT sampler vs oracle, with
/// two-sample z-scores. Work is sharded by seed across available threads.
pub fn haar_moment_test(k: usize, num_samples: usize, seed: u64) -> Result<HaarReport> {
    if !(2..=6).contains(&k) {
        return Err(Error::OutOfRange(format!("haar test needs 2 ≤ k ≤ 6, got {k}")));
    }
    if num_samples < 2 {
        return Err(Error::OutOfRange("need at least two samples".into()));
    }
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(num_samples);
    let results: Vec<Result<(Sums, Sums)>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let count = num_samples / workers + usize::from(w < num_samples % workers);
                let shard_seed = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(w as u64);
                s.spawn(move || shard(k, count, shard_seed))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("shard panicked")).collect()
    });
    let (mut gt, mut or) = (Sums::new(k), Sums::new(k));
    for r in results {
        let (g, o) = r?;
        gt.merge(&g);
        or.merge(&o);
    }
    let mut moments = Vec::new();
    for e in 0..k * k {
        for order in [2, 4] {
            let (a, va) = gt.stat(e, order);
            let (b, vb) = or.stat(e, order);
            let z = if va + vb > 0.0 { (a - b) / (va + vb).sqrt() } else { 0.0 };
            moments.push(MomentStat { row: e / k, col: e % k, order, gt: a, oracle: b, z });
        }
    }
    Ok(HaarReport {
        k,
        samples: gt.n,
        acceptance_rate: gt.n as f64 / gt.tries.max(1) as f64,
        e_u11_sq: gt.stat(0, 2).0,
        analytic_u11_sq: 1.0 / k as f64,
        max_abs_z: moments.iter().map(|m| m.z.abs()).fold(0.0, f64::max),
        moments,
    })
}
