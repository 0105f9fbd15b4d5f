//! Closed-form bin probabilities against quadrature of the u-densities,
//! and the densities against Monte Carlo push-forwards of the posterior.

mod common;

use bayesbin::homodyne::{pair_samples, SamplePair};
use bayesbin::{HomodyneModel64, HomodyneStats64, ToaConfig64, ToaModel64, ToaStats64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

const CELLS: usize = 512;
const BIN_COUNTS: [usize; 3] = [4, 16, 128];
const MEASUREMENTS: usize = 50;

fn cell_edges() -> Vec<f64> {
    (0..=CELLS).map(|i| i as f64 / CELLS as f64).collect()
}

/// Sums consecutive groups of cell integrals into `n` bins.
fn coarsen(cells: &[f64], n: usize) -> Vec<f64> {
    cells.chunks(CELLS / n).map(|c| c.iter().sum()).collect()
}

fn toa_density(n: usize, s: f64, delta: f64) -> impl Fn(f64) -> f64 {
    let r = s / delta;
    let ln_fact = common::ln_gamma_half_integer(n as f64 + 1.0);
    move |u: f64| {
        if u <= 0.0 || u >= 1.0 {
            return 0.0;
        }
        let l = -(-u).ln_1p();
        ((n as f64 + 1.0) * r.ln() + n as f64 * l.ln() + (r - 1.0) * (-u).ln_1p() - ln_fact).exp()
    }
}

fn radius_density(n: usize, x: f64, s: f64) -> impl Fn(f64) -> f64 {
    let k = (n as f64 - 1.0) / 2.0;
    let r = x / s;
    let ln_gk = common::ln_gamma_half_integer(k);
    move |u: f64| {
        if u <= 0.0 || u >= 1.0 {
            return 0.0;
        }
        (k * r.ln() + (k - 1.0) * (-u.ln()).ln() + (r - 1.0) * u.ln() - ln_gk).exp()
    }
}

struct Case<P> {
    n: usize,
    probe: P,
    cells: Vec<f64>,
}

fn check_against_cells(label: &str, cases: &[Case<impl Copy>], probs: impl Fn(usize, usize) -> Vec<f64>) {
    for (idx, case) in cases.iter().enumerate() {
        let total: f64 = case.cells.iter().sum();
        assert!((total - 1.0).abs() < 1e-8, "{label} case {idx}: density integrates to {total}");
        for bins in BIN_COUNTS {
            let want = coarsen(&case.cells, bins);
            let got = probs(idx, bins);
            assert_eq!(got.len(), bins);
            let sum: f64 = got.iter().sum();
            assert!((sum - 1.0).abs() <= 1e-9, "{label} case {idx}, N = {bins}: sum {sum}");
            for (j, (g, w)) in got.iter().zip(&want).enumerate() {
                assert!(
                    (g - w).abs() <= 1e-8,
                    "{label} case {idx} (n = {}), N = {bins}, bin {j}: {g:e} vs {w:e}",
                    case.n
                );
            }
        }
    }
}

#[test]
fn toa_bin_probabilities_match_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let edges = cell_edges();
    let mut setups = Vec::new();
    let mut cases = Vec::new();
    for m in 0..MEASUREMENTS {
        let n = rng.random_range(2..=2000);
        let tau_a = rng.random_range(0.0..1e-7);
        let theta = rng.random_range(1e5..1e7);
        let model = ToaModel64::new(ToaConfig64::new(tau_a, 0.0).unwrap());
        let record = model.simulate(n, theta, 300 + m as u64).unwrap();
        let stats = ToaStats64::from_offsets(record.iter().map(|t| t - tau_a));
        let tau_i = record[rng.random_range(0..n)];
        let density = toa_density(n, stats.offset_sum(), tau_i - tau_a);
        cases.push(Case {
            n,
            probe: tau_i,
            cells: common::integrate_cells(&density, &edges, 1e-14),
        });
        setups.push((model, stats));
    }
    check_against_cells("toa", &cases, |idx, bins| {
        let (model, stats) = &setups[idx];
        model.bin_probabilities(cases[idx].probe, bins, stats).unwrap()
    });

    // CDF at the edges equals the cumulative bin mass.
    for (case, (model, stats)) in cases.iter().zip(&setups) {
        let probs = model.bin_probabilities(case.probe, 16, stats).unwrap();
        let mut acc = 0.0;
        for (j, p) in probs.iter().enumerate() {
            acc += p;
            let c = (j + 1) as f64 / 16.0;
            let cdf = if j + 1 == 16 { 1.0 } else { model.g_u_cdf(c, case.probe, stats).unwrap() };
            assert!((cdf - acc).abs() <= 1e-8, "cdf({c}) = {cdf}, cumulative {acc}");
        }
    }
}

#[test]
fn homodyne_bin_probabilities_match_quadrature() {
    let model = HomodyneModel64::new();
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let edges = cell_edges();
    let mut stats_list = Vec::new();
    let mut cases: Vec<Case<SamplePair<f64>>> = Vec::new();
    while cases.len() < MEASUREMENTS {
        let n = rng.random_range(3..=2000);
        let sigma = rng.random_range(0.2..5.0);
        let record = model.simulate(n, sigma, 0.1 * sigma, 400 + cases.len() as u64).unwrap();
        let stats = HomodyneStats64::from_samples(&record);
        let (pairs, _) = pair_samples(&record);
        let pair = pairs[rng.random_range(0..pairs.len())];
        if pair.is_degenerate() {
            continue;
        }
        let density = radius_density(n, stats.sum_sq(), pair.s());
        cases.push(Case {
            n,
            probe: pair,
            cells: common::integrate_cells(&density, &edges, 1e-14),
        });
        stats_list.push(stats);
    }
    check_against_cells("homodyne", &cases, |idx, bins| {
        model
            .bin_probabilities_u1(&cases[idx].probe, bins, &stats_list[idx])
            .unwrap()
    });
}

#[test]
fn library_densities_match_oracle_densities() {
    let toa = ToaModel64::new(ToaConfig64::new(0.0, 0.0).unwrap());
    let stats = ToaStats64::from_offsets([0.4, 1.1, 0.25, 2.0]);
    let f = toa_density(4, stats.offset_sum(), 0.9);
    for u in [0.05, 0.3, 0.5, 0.8, 0.99] {
        let got = toa.g_u(u, 0.9, &stats).unwrap();
        assert!((got - f(u)).abs() <= 1e-12 * f(u).max(1.0), "u = {u}");
    }
    let hom = HomodyneModel64::new();
    let data = [0.3, -1.2, 0.8, 0.05, -0.6];
    let hs = HomodyneStats64::from_samples(&data);
    let pair = SamplePair::new(0.3, -1.2);
    let f = radius_density(5, hs.sum_sq(), pair.s());
    for u in [0.05, 0.3, 0.5, 0.8, 0.99] {
        let got = hom.g_u1(u, &pair, &hs).unwrap();
        assert!((got - f(u)).abs() <= 1e-12 * f(u).max(1.0), "u = {u}");
    }
}

/// Empirical CDF of `draws` against the cumulative cell integrals, on the
/// cell edges.
fn grid_ks(mut draws: Vec<f64>, cells: &[f64]) -> f64 {
    draws.sort_by(f64::total_cmp);
    let n = draws.len() as f64;
    let mut cdf = 0.0;
    let mut worst: f64 = 0.0;
    for (i, c) in cells.iter().enumerate() {
        cdf += c;
        let edge = (i + 1) as f64 / CELLS as f64;
        let below = draws.partition_point(|&u| u <= edge) as f64 / n;
        worst = worst.max((below - cdf).abs());
    }
    worst
}

#[test]
fn toa_density_is_posterior_push_forward() {
    let model = ToaModel64::new(ToaConfig64::new(0.0, 0.0).unwrap());
    let edges = cell_edges();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for (n, seed) in [(1usize, 1u64), (12, 2), (300, 3)] {
        let record = model.simulate(n, 2.0, seed).unwrap();
        let stats = ToaStats64::from_offsets(record.iter().copied());
        let tau_i = record[0];
        let post = Gamma::new(n as f64 + 1.0, 1.0 / stats.offset_sum()).unwrap();
        let draws: Vec<f64> = (0..100_000)
            .map(|_| -(-post.sample(&mut rng) * tau_i).exp_m1())
            .collect();
        let cells = common::integrate_cells(toa_density(n, stats.offset_sum(), tau_i), &edges, 1e-14);
        let d = grid_ks(draws.clone(), &cells);
        assert!(d <= 0.01, "n = {n}: KS distance {d}");
        let lib = common::ks_statistic(draws, |c| {
            if c <= 0.0 {
                0.0
            } else {
                model.g_u_cdf(c, tau_i, &stats).unwrap()
            }
        });
        assert!(lib <= 0.01, "n = {n}: library CDF KS distance {lib}");
    }
}

#[test]
fn radius_density_is_posterior_push_forward() {
    let model = HomodyneModel64::new();
    let edges = cell_edges();
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    for (n, seed) in [(3usize, 1u64), (9, 2), (400, 3)] {
        let record = model.simulate(n, 1.5, 0.0, seed).unwrap();
        let stats = HomodyneStats64::from_samples(&record);
        let pair = SamplePair::new(record[0], record[1]);
        let x = stats.sum_sq();
        // X / (2σ²) ~ Gamma((n-1)/2, 1) under the flat-prior posterior.
        let y = Gamma::new((n as f64 - 1.0) / 2.0, 1.0).unwrap();
        let draws: Vec<f64> = (0..100_000)
            .map(|_| (-pair.s() * y.sample(&mut rng) / x).exp())
            .collect();
        let cells = common::integrate_cells(radius_density(n, x, pair.s()), &edges, 1e-14);
        let d = grid_ks(draws, &cells);
        assert!(d <= 0.01, "n = {n}: KS distance {d}");
    }
}
