//! Distribution estimation and comparison: Gaussian KDE with Silverman
//! bandwidth, histograms, Jensen-Shannon divergence (log base 2), the
//! two-sample Cramér-von Mises criterion, seeded percentile bootstrap, and
//! Pearson/Spearman correlation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_indexed, Parallelism};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EstimateKind {
    Histogram,
    Kde,
}

/// A probability mass vector on a fixed grid. For histograms the grid holds
/// bin centers; for KDEs it holds the evaluation points. Mass sums to 1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistributionEstimate {
    pub kind: EstimateKind,
    pub grid: Vec<f64>,
    pub mass: Vec<f64>,
}

impl DistributionEstimate {
    pub fn validate(&self) -> Result<()> {
        if self.grid.len() != self.mass.len() || self.grid.is_empty() {
            return Err(Error::InvalidDensity("grid/mass length mismatch".into()));
        }
        if !self.grid.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::InvalidDensity("grid is not strictly increasing".into()));
        }
        if self.mass.iter().any(|&m| !(m >= 0.0)) {
            return Err(Error::InvalidDensity("negative or NaN mass".into()));
        }
        let total: f64 = self.mass.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDensity(format!(
                "mass sums to {total}, expected 1"
            )));
        }
        Ok(())
    }
}

/// Evenly spaced grid from `lo` to `hi` inclusive.
pub fn uniform_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|k| lo + k as f64 * step).collect()
}

/// Unbiased sample standard deviation.
fn sample_std(samples: &[f64]) -> f64 {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    var.sqrt()
}

/// Silverman's rule of thumb: 1.06 * sigma * n^(-1/5).
pub fn silverman_bandwidth(samples: &[f64]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::DegenerateSample(
            "KDE needs at least 2 samples".into(),
        ));
    }
    let sd = sample_std(samples);
    if !(sd > 0.0) {
        return Err(Error::DegenerateSample("zero variance sample".into()));
    }
    Ok(1.06 * sd * (samples.len() as f64).powf(-0.2))
}

/// Gaussian KDE evaluated on `grid` and renormalized to sum to 1 over it.
/// Kernel contributions beyond 8 bandwidths are dropped (relative error below
/// 1e-14).
pub fn kde(samples: &[f64], grid: &[f64]) -> Result<DistributionEstimate> {
    let h = silverman_bandwidth(samples)?;
    if grid.is_empty() {
        return Err(Error::Input("empty KDE grid".into()));
    }
    let mut density = vec![0.0f64; grid.len()];
    let cutoff = 8.0 * h;
    let inv2h2 = 1.0 / (2.0 * h * h);
    for &x in samples {
        let lo = grid.partition_point(|&g| g < x - cutoff);
        let hi = grid.partition_point(|&g| g <= x + cutoff);
        for k in lo..hi {
            let d = grid[k] - x;
            density[k] += (-d * d * inv2h2).exp();
        }
    }
    let total: f64 = density.iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateSample(
            "all samples fall outside the grid".into(),
        ));
    }
    for v in &mut density {
        *v /= total;
    }
    Ok(DistributionEstimate {
        kind: EstimateKind::Kde,
        grid: grid.to_vec(),
        mass: density,
    })
}

/// Histogram over the given edges, normalized to sum 1 over the included
/// bins. Samples outside the edge range are dropped (the note-distribution
/// convention truncates the octave boundaries). Grid holds bin centers.
pub fn histogram(samples: &[f64], edges: &[f64]) -> Result<DistributionEstimate> {
    if edges.len() < 2 || !edges.windows(2).all(|w| w[1] > w[0]) {
        return Err(Error::Input("histogram edges must be increasing".into()));
    }
    let bins = edges.len() - 1;
    let mut counts = vec![0.0f64; bins];
    let mut kept = 0u64;
    for &x in samples {
        if x < edges[0] || x > edges[bins] {
            continue;
        }
        let mut k = edges.partition_point(|&e| e <= x);
        // x on the last edge belongs to the last bin.
        if k > bins {
            k = bins;
        }
        if k == 0 {
            continue;
        }
        counts[k - 1] += 1.0;
        kept += 1;
    }
    if kept == 0 {
        return Err(Error::DegenerateSample(
            "no samples inside the histogram range".into(),
        ));
    }
    for c in &mut counts {
        *c /= kept as f64;
    }
    let centers = edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    Ok(DistributionEstimate {
        kind: EstimateKind::Histogram,
        grid: centers,
        mass: counts,
    })
}

fn grids_match(p: &DistributionEstimate, q: &DistributionEstimate) -> bool {
    p.grid.len() == q.grid.len()
        && p.grid
            .iter()
            .zip(&q.grid)
            .all(|(a, b)| (a - b).abs() <= 1e-9)
}

/// Jensen-Shannon divergence with log base 2; 0 for identical distributions,
/// 1 for disjoint supports. Zero-mass bins contribute nothing.
pub fn jsd(p: &DistributionEstimate, q: &DistributionEstimate) -> Result<f64> {
    if !grids_match(p, q) {
        return Err(Error::GridMismatch(
            "JSD operands live on different grids".into(),
        ));
    }
    Ok(jsd_mass(&p.mass, &q.mass))
}

/// JSD on raw mass vectors of equal length.
pub fn jsd_mass(p: &[f64], q: &[f64]) -> f64 {
    debug_assert_eq!(p.len(), q.len());
    // The two KL halves accumulate separately so the result is exactly
    // symmetric in (p, q).
    let mut kl_p = 0.0;
    let mut kl_q = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        let m = 0.5 * (a + b);
        if a > 0.0 {
            kl_p += a * (a / m).log2();
        }
        if b > 0.0 {
            kl_q += b * (b / m).log2();
        }
    }
    let acc = 0.5 * kl_p + 0.5 * kl_q;
    // Clamp away float dust so identical inputs give exactly 0.
    if acc < 0.0 {
        0.0
    } else {
        acc
    }
}

/// Two-sample Cramér-von Mises criterion:
/// T = nm/(n+m)^2 * [sum_i (F(x_i)-G(x_i))^2 + sum_j (F(y_j)-G(y_j))^2]
/// with right-continuous empirical CDFs, which handles ties exactly.
pub fn cvm_two_sample(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::Input("cvm needs two nonempty samples".into()));
    }
    let mut xs = x.to_vec();
    let mut ys = y.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let m = ys.len() as f64;
    let ecdf = |sorted: &[f64], z: f64| sorted.partition_point(|&v| v <= z) as f64;

    let mut t = 0.0;
    for &z in xs.iter().chain(ys.iter()) {
        let d = ecdf(&xs, z) / n - ecdf(&ys, z) / m;
        t += d * d;
    }
    Ok(n * m / ((n + m) * (n + m)) * t)
}

/// Percentile bootstrap of `stat` with `n_resamples` seeded resamples.
/// Resample `r` draws from substream `r`, so the interval is reproducible and
/// resamples can run in parallel. Returns (lo, hi, mean of resample stats).
pub fn bootstrap_ci<F>(
    samples: &[f64],
    stat: F,
    n_resamples: usize,
    level: f64,
    seed: u64,
) -> Result<(f64, f64, f64)>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    bootstrap_ci_with(samples, stat, n_resamples, level, seed, Parallelism::auto())
}

pub fn bootstrap_ci_with<F>(
    samples: &[f64],
    stat: F,
    n_resamples: usize,
    level: f64,
    seed: u64,
    mode: Parallelism,
) -> Result<(f64, f64, f64)>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if samples.is_empty() {
        return Err(Error::Input("bootstrap needs a nonempty sample".into()));
    }
    if !(0.0 < level && level < 1.0) {
        return Err(Error::Input("bootstrap level must be in (0, 1)".into()));
    }
    let n = samples.len();
    let mut stats = map_indexed(mode, n_resamples, |r| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(r as u64);
        let resample: Vec<f64> = (0..n)
            .map(|_| samples[rng.random_range(0..n)])
            .collect();
        stat(&resample)
    });
    let mean = stats.iter().sum::<f64>() / stats.len() as f64;
    stats.sort_by(f64::total_cmp);
    let alpha = 1.0 - level;
    Ok((
        percentile_sorted(&stats, alpha / 2.0),
        percentile_sorted(&stats, 1.0 - alpha / 2.0),
        mean,
    ))
}

/// Linear-interpolation percentile of a sorted slice, p in [0, 1].
pub fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = p * (n - 1) as f64;
    let k = pos.floor() as usize;
    let frac = pos - k as f64;
    if k + 1 < n {
        sorted[k] * (1.0 - frac) + sorted[k + 1] * frac
    } else {
        sorted[n - 1]
    }
}

/// Pearson correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(Error::Input(
            "correlation needs equal-length samples of size >= 3".into(),
        ));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::DegenerateSample(
            "zero variance in correlation input".into(),
        ));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Average ranks (1-based), ties share the mean rank.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation: Pearson on average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    pearson(&average_ranks(x), &average_ranks(y))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn silverman_formula_value() {
        // n = 10^4 and sigma = 100 give 1.06 * 100 * 10^(-0.8) = 16.80 cents.
        let mut samples = Vec::with_capacity(10_000);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10_000 {
            samples.push(600.0 + 100.0 * gaussian(&mut rng));
        }
        let sd = sample_std(&samples);
        let h = silverman_bandwidth(&samples).unwrap();
        let expect = 1.06 * sd * 10_000f64.powf(-0.2);
        assert!((h - expect).abs() < 1e-12);
        assert!((h - 16.8).abs() < 1.0, "h {h}");
    }

    fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
        // Box-Muller; good enough for test fixtures.
        let u1: f64 = rng.random::<f64>().max(1e-12);
        let u2: f64 = rng.random();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    #[test]
    fn kde_peaks_at_sample_location() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let samples: Vec<f64> = (0..500).map(|_| 600.0 + 0.5 * gaussian(&mut rng)).collect();
        let grid = uniform_grid(0.0, 1200.0, 1.0);
        let est = kde(&samples, &grid).unwrap();
        est.validate().unwrap();
        let argmax = est
            .mass
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert!((est.grid[argmax] - 600.0).abs() <= 1.0);
    }

    #[test]
    fn kde_bimodal_for_separated_clusters() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut samples = Vec::new();
        for _ in 0..400 {
            samples.push(200.0 + 5.0 * gaussian(&mut rng));
            samples.push(1000.0 + 5.0 * gaussian(&mut rng));
        }
        let grid = uniform_grid(0.0, 1200.0, 1.0);
        let est = kde(&samples, &grid).unwrap();
        let peak = |lo: usize, hi: usize| {
            est.mass[lo..hi]
                .iter()
                .cloned()
                .fold(f64::MIN, f64::max)
        };
        let left = peak(100, 300);
        let valley = peak(550, 650);
        let right = peak(900, 1100);
        assert!(left > 10.0 * valley && right > 10.0 * valley);
    }

    #[test]
    fn kde_invariant_under_shuffle() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let samples: Vec<f64> = (0..200).map(|_| 400.0 + 30.0 * gaussian(&mut rng)).collect();
        let mut shuffled = samples.clone();
        shuffled.reverse();
        shuffled.swap(0, 100);
        let grid = uniform_grid(0.0, 1200.0, 2.0);
        let a = kde(&samples, &grid).unwrap();
        let b = kde(&shuffled, &grid).unwrap();
        for (x, y) in a.mass.iter().zip(&b.mass) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn kde_rejects_degenerate_input() {
        let grid = uniform_grid(0.0, 10.0, 1.0);
        assert!(matches!(
            kde(&[1.0], &grid),
            Err(Error::DegenerateSample(_))
        ));
        assert!(matches!(
            kde(&[3.0; 50], &grid),
            Err(Error::DegenerateSample(_))
        ));
    }

    #[test]
    fn histogram_truncates_and_normalizes() {
        let edges = uniform_grid(15.0, 1185.0, 30.0);
        assert_eq!(edges.len(), 40);
        let est = histogram(&[5.0, 16.0, 30.0, 700.0, 1190.0], &edges).unwrap();
        est.validate().unwrap();
        // 5.0 and 1190.0 fall outside [15, 1185].
        let total: f64 = est.mass.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(est.grid[0], 30.0);
        assert!((est.mass[0] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn jsd_identical_and_disjoint() {
        let grid = vec![0.0, 1.0, 2.0, 3.0];
        let p = DistributionEstimate {
            kind: EstimateKind::Histogram,
            grid: grid.clone(),
            mass: vec![0.25; 4],
        };
        assert_eq!(jsd(&p, &p).unwrap(), 0.0);
        let q = DistributionEstimate {
            kind: EstimateKind::Histogram,
            grid,
            mass: vec![0.0, 0.0, 0.5, 0.5],
        };
        let r = DistributionEstimate {
            kind: EstimateKind::Histogram,
            grid: vec![0.0, 1.0, 2.0, 3.0],
            mass: vec![0.5, 0.5, 0.0, 0.0],
        };
        assert!((jsd(&q, &r).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn jsd_two_bin_pinned() {
        // P = [1/2, 1/2], Q = [1, 0]: closed form 0.31127812445913283.
        let v = jsd_mass(&[0.5, 0.5], &[1.0, 0.0]);
        assert!((v - 0.311_278_124_459_132_83).abs() < 1e-12);
    }

    #[test]
    fn jsd_symmetry_and_grid_mismatch() {
        let p = DistributionEstimate {
            kind: EstimateKind::Histogram,
            grid: vec![0.0, 1.0, 2.0],
            mass: vec![0.2, 0.3, 0.5],
        };
        let q = DistributionEstimate {
            kind: EstimateKind::Histogram,
            grid: vec![0.0, 1.0, 2.0],
            mass: vec![0.6, 0.1, 0.3],
        };
        assert_eq!(jsd(&p, &q).unwrap(), jsd(&q, &p).unwrap());

        let r = DistributionEstimate {
            kind: EstimateKind::Histogram,
            grid: vec![0.0, 1.0, 2.5],
            mass: vec![0.6, 0.1, 0.3],
        };
        assert!(matches!(jsd(&p, &r), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn cvm_pinned_small_vectors() {
        // Frozen from the direct EDF summation oracle.
        let t = cvm_two_sample(&[1.0, 2.0, 3.0, 4.0, 5.0], &[1.5, 2.5, 3.5, 4.5]).unwrap();
        assert!((t - 1.0 / 27.0).abs() < 1e-12, "t {t}");
    }

    #[test]
    fn cvm_identical_multisets_attain_minimum() {
        let t = cvm_two_sample(&[1.0, 2.0], &[1.0, 2.0]).unwrap();
        assert_eq!(t, 0.0);
        let t = cvm_two_sample(&[2.0, 1.0], &[2.0, 1.0]).unwrap();
        assert_eq!(t, 0.0);
    }

    #[test]
    fn cvm_order_invariant(){
        let a = cvm_two_sample(&[1.0, 2.0, 9.0], &[1.5, 3.0]).unwrap();
        let b = cvm_two_sample(&[9.0, 1.0, 2.0], &[3.0, 1.5]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn cvm_monotone_transform_invariant() {
        let x = [0.3, 1.4, 2.2, 5.5, 2.9];
        let y = [0.1, 1.9, 3.3];
        let t1 = cvm_two_sample(&x, &y).unwrap();
        let f = |v: f64| (v * 2.0).exp();
        let xt: Vec<f64> = x.iter().map(|&v| f(v)).collect();
        let yt: Vec<f64> = y.iter().map(|&v| f(v)).collect();
        let t2 = cvm_two_sample(&xt, &yt).unwrap();
        assert!((t1 - t2).abs() < 1e-12);
    }

    #[test]
    fn bootstrap_constant_sample() {
        let (lo, hi, mean) = bootstrap_ci(&[4.0; 20], |s| s.iter().sum::<f64>(), 200, 0.95, 1).unwrap();
        assert_eq!(lo, 80.0);
        assert_eq!(hi, 80.0);
        assert_eq!(mean, 80.0);
    }

    #[test]
    fn bootstrap_deterministic_and_mode_independent() {
        let samples: Vec<f64> = (0..50).map(|i| (i as f64 * 0.7).sin()).collect();
        let stat = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
        let a = bootstrap_ci(&samples, stat, 300, 0.95, 42).unwrap();
        let b = bootstrap_ci(&samples, stat, 300, 0.95, 42).unwrap();
        assert_eq!(a, b);
        let c = bootstrap_ci_with(&samples, stat, 300, 0.95, 42, Parallelism::Sequential).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn bootstrap_ci_converged_in_resample_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let samples: Vec<f64> = (0..400).map(|_| gaussian(&mut rng)).collect();
        let stat = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
        let (lo1, hi1, _) = bootstrap_ci(&samples, stat, 1000, 0.95, 5).unwrap();
        let (lo2, hi2, _) = bootstrap_ci(&samples, stat, 2000, 0.95, 5).unwrap();
        // Doubling the resamples moves the interval by much less than its
        // own width.
        let width = hi1 - lo1;
        assert!((lo1 - lo2).abs() < 0.1 * width, "{lo1} vs {lo2}");
        assert!((hi1 - hi2).abs() < 0.1 * width, "{hi1} vs {hi2}");
    }

    #[test]
    fn bootstrap_mean_ci_matches_clt() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let samples: Vec<f64> = (0..10_000).map(|_| gaussian(&mut rng)).collect();
        let stat = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
        let (lo, hi, _) = bootstrap_ci(&samples, stat, 1000, 0.95, 3).unwrap();
        // CLT: half-width about 1.96/sqrt(10^4) = 0.0196.
        let half = (hi - lo) / 2.0;
        assert!((half - 0.0196).abs() < 0.004, "half {half}");
    }

    #[test]
    fn pearson_exact_lines() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        assert!((pearson(&x, &y).unwrap() - 1.0).abs() < 1e-12);
        let z: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&x, &z).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn correlation_pinned_five_points() {
        // Frozen from the direct formula oracle.
        let x = [1.0, 2.0, 4.0, 5.0, 8.0];
        let y = [2.0, 1.0, 5.0, 9.0, 7.0];
        assert!((pearson(&x, &y).unwrap() - 0.791_039_852_105_472_3).abs() < 1e-12);
        assert!((spearman(&x, &y).unwrap() - 0.8).abs() < 1e-12);
        let y_tied = [2.0, 2.0, 5.0, 9.0, 7.0];
        assert!((spearman(&x, &y_tied).unwrap() - 0.872_081_599_272_380_9).abs() < 1e-12);
    }

    #[test]
    fn degenerate_correlation_errors() {
        assert!(matches!(
            pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Error::DegenerateSample(_))
        ));
        assert!(pearson(&[1.0, 2.0], &[1.0, 2.0]).is_err());
    }
}
