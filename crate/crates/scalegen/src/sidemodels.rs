//! Appendix sub-models: the vocal-mistuning transmission channel, weighted
//! counting of prominent harmonic-series intervals, and analytic
//! acceptance/selectivity curves for the cost-function family.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{jsd_mass, DistributionEstimate};

/// Gaussian production/perception channel with interval categories spaced
/// `spacing` cents apart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub sigma_prod: f64,
    pub sigma_per: f64,
    pub spacing: f64,
    /// Categories on each side of the intended one. Contributions beyond
    /// 5 spacings are below 1e-12 for every tested sigma.
    pub n_flank: usize,
}

impl ChannelParams {
    pub fn new(sigma_prod: f64, sigma_per: f64, spacing: f64) -> Result<Self> {
        let p = ChannelParams {
            sigma_prod,
            sigma_per,
            spacing,
            n_flank: 5,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_prod > 0.0 && self.sigma_per > 0.0) {
            return Err(Error::Input("channel sigmas must be > 0".into()));
        }
        if !(self.spacing > 0.0) {
            return Err(Error::Input("category spacing must be > 0".into()));
        }
        Ok(())
    }
}

/// Probability that an interval sung `offset` cents away from the centre of
/// category A is perceived as category A: a softmax of Gaussian likelihoods
/// over the 2*n_flank+1 category means. Computed with the max-shifted
/// exponent so that vanishing perception noise stays finite.
pub fn category_prob(offset: f64, params: &ChannelParams) -> f64 {
    let inv2s2 = 1.0 / (2.0 * params.sigma_per * params.sigma_per);
    let flank = params.n_flank as i64;
    let mut exps = Vec::with_capacity((2 * flank + 1) as usize);
    let mut max = f64::MIN;
    for k in -flank..=flank {
        let d = offset - k as f64 * params.spacing;
        let e = -d * d * inv2s2;
        exps.push((k, e));
        if e > max {
            max = e;
        }
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (k, e) in exps {
        let w = (e - max).exp();
        den += w;
        if k == 0 {
            num += w;
        }
    }
    num / den
}

/// Fraction of intervals perceived as intended: the production Gaussian
/// integrated against `category_prob` over +-6 sigma with 512-node
/// Gauss-Legendre panels.
///
/// The integrand turns over sharply at the midpoints between categories when
/// the perception noise is small, so the range is split there and each panel
/// integrated separately; node density is highest at panel ends, exactly
/// where the transitions sit.
pub fn transmission_accuracy(params: &ChannelParams) -> f64 {
    let lo = -6.0 * params.sigma_prod;
    let hi = 6.0 * params.sigma_prod;
    // Panel boundaries at odd multiples of spacing/2 inside the range.
    let mut cuts = vec![lo];
    let mut k = 0i64;
    loop {
        let c = (2 * k + 1) as f64 * params.spacing / 2.0;
        if c >= hi {
            break;
        }
        if c > lo {
            cuts.push(c);
        }
        if -c > lo && -c < hi {
            cuts.push(-c);
        }
        k += 1;
    }
    cuts.push(hi);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let (nodes, weights) = gauss_legendre_512();
    let norm = 1.0 / (params.sigma_prod * (2.0 * std::f64::consts::PI).sqrt());
    let inv2s2 = 1.0 / (2.0 * params.sigma_prod * params.sigma_prod);
    let mut acc = 0.0;
    for pair in cuts.windows(2) {
        let halfspan = 0.5 * (pair[1] - pair[0]);
        let mid = 0.5 * (pair[0] + pair[1]);
        for (&x, &w) in nodes.iter().zip(weights.iter()) {
            let t = mid + halfspan * x;
            let pdf = norm * (-t * t * inv2s2).exp();
            acc += w * halfspan * pdf * category_prob(t, params);
        }
    }
    acc
}

/// Smallest category spacing at which `transmission_accuracy` reaches
/// `target`, found by bisection on [1, 1200] cents. Accuracy is monotone
/// increasing in the spacing.
pub fn min_interval_size(sigma_prod: f64, sigma_per: f64, target: f64) -> Result<f64> {
    if !(0.0 < target && target < 1.0) {
        return Err(Error::Input("target accuracy must be in (0, 1)".into()));
    }
    let acc_at = |spacing: f64| -> Result<f64> {
        let p = ChannelParams::new(sigma_prod, sigma_per, spacing)?;
        Ok(transmission_accuracy(&p))
    };
    let mut lo = 1.0;
    let mut hi = 1200.0;
    if acc_at(lo)? >= target {
        return Ok(lo);
    }
    if acc_at(hi)? < target {
        return Err(Error::NoSolution(format!(
            "accuracy stays below {target} for spacings up to 1200 cents"
        )));
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if acc_at(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Query for weighted counting of intervals in a single harmonic series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProminenceQuery {
    /// Intervals are formed against the first `n1` harmonics...
    pub n1: u32,
    /// ...paired with harmonics up to `n2`.
    pub n2: u32,
    /// Attenuation rate: harmonic k carries weight (1-a)^(k-1).
    pub attenuation: f64,
}

impl ProminenceQuery {
    pub fn validate(&self) -> Result<()> {
        if self.n1 < 1 || self.n2 < self.n1 {
            return Err(Error::Input("need 1 <= n1 <= n2".into()));
        }
        if !(0.0..1.0).contains(&self.attenuation) {
            return Err(Error::Input("attenuation must be in [0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProminenceEntry {
    pub numerator: u32,
    pub denominator: u32,
    pub weight: f64,
}

/// Weighted counts of the intervals between harmonics i in 1..=n1 and
/// j in i..=n2, each unordered pair counted once with weight
/// (1-a)^(i-1) * (1-a)^(j-1). Ratios j/i are octave-reduced into (1, 2]
/// (so 2, 4, 8 all land on 2/1) and the unison stays 1/1. Sorted by
/// descending weight, ties to the simpler ratio.
pub fn prominence_counts(query: &ProminenceQuery) -> Result<Vec<ProminenceEntry>> {
    query.validate()?;
    let decay = 1.0 - query.attenuation;
    let mut acc: std::collections::HashMap<(u32, u32), f64> = std::collections::HashMap::new();
    for i in 1..=query.n1 {
        for j in i..=query.n2 {
            let (num, den) = reduce_to_octave(j, i);
            let weight = decay.powi(i as i32 - 1) * decay.powi(j as i32 - 1);
            *acc.entry((num, den)).or_insert(0.0) += weight;
        }
    }
    let mut out: Vec<ProminenceEntry> = acc
        .into_iter()
        .map(|((num, den), weight)| ProminenceEntry {
            numerator: num,
            denominator: den,
            weight,
        })
        .collect();
    out.sort_by(|a, b| {
        b.weight
            .total_cmp(&a.weight)
            .then((a.numerator as u64 * a.denominator as u64).cmp(&(b.numerator as u64 * b.denominator as u64)))
            .then(a.numerator.cmp(&b.numerator))
    });
    Ok(out)
}

/// Reduce num/den by powers of two into (1, 2]; 1/1 maps to itself.
fn reduce_to_octave(mut num: u32, mut den: u32) -> (u32, u32) {
    let g = gcd(num, den);
    num /= g;
    den /= g;
    while num > 2 * den {
        den *= 2;
    }
    let g = gcd(num, den);
    (num / g, den / g)
}

fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Round to one significant figure, the precision of the published
/// prominence tables.
pub fn round_one_sig_fig(v: f64) -> f64 {
    if v == 0.0 {
        return 0.0;
    }
    let exp = v.abs().log10().floor();
    let scale = 10f64.powf(exp);
    (v / scale).round() * scale
}

#[derive(Debug, Clone)]
pub struct AnalyticAcceptance {
    /// Total mass surviving the Boltzmann reweighting.
    pub acceptance: f64,
    /// JSD between the input distribution and the renormalized accepted one.
    pub selectivity: f64,
    pub accepted: DistributionEstimate,
}

/// Reweights a harmonicity-score distribution by min{1, exp(-beta * cost(h))}.
/// This is the analytic counterpart of running the generator with the same
/// cost at the same bias strength.
pub fn analytic_acceptance(
    h_dist: &DistributionEstimate,
    cost: impl Fn(f64) -> f64,
    beta: f64,
) -> Result<AnalyticAcceptance> {
    h_dist.validate()?;
    if !(beta >= 0.0) {
        return Err(Error::Input("beta must be >= 0".into()));
    }
    let mut accepted_mass: Vec<f64> = Vec::with_capacity(h_dist.mass.len());
    let mut total = 0.0;
    for (&h, &p) in h_dist.grid.iter().zip(&h_dist.mass) {
        let w = crate::generator::acceptance_probability(cost(h), beta);
        let m = p * w;
        accepted_mass.push(m);
        total += m;
    }
    if !(total > 0.0) {
        return Err(Error::AbortTooSelective {
            projected: 0.0,
            floor: f64::MIN_POSITIVE,
            probed: 0,
        });
    }
    for m in &mut accepted_mass {
        *m /= total;
    }
    let selectivity = jsd_mass(&h_dist.mass, &accepted_mass);
    Ok(AnalyticAcceptance {
        acceptance: total,
        selectivity,
        accepted: DistributionEstimate {
            kind: h_dist.kind,
            grid: h_dist.grid.clone(),
            mass: accepted_mass,
        },
    })
}

/// Bias strength at which the analytic selectivity reaches `target_jsd`.
/// Selectivity grows monotonically with beta for the cost families studied;
/// if it saturates below the target there is no solution.
pub fn beta_for_selectivity(
    h_dist: &DistributionEstimate,
    cost: impl Fn(f64) -> f64,
    target_jsd: f64,
) -> Result<f64> {
    if target_jsd <= 0.0 {
        return Ok(0.0);
    }
    let sel = |beta: f64| -> Result<f64> { Ok(analytic_acceptance(h_dist, &cost, beta)?.selectivity) };
    let mut hi = 1.0;
    let mut sel_hi = sel(hi)?;
    let mut prev = -1.0;
    while sel_hi < target_jsd {
        if hi > 1e15 || (sel_hi - prev).abs() < 1e-12 {
            return Err(Error::NoSolution(format!(
                "selectivity saturates at {sel_hi:.4} below target {target_jsd}"
            )));
        }
        prev = sel_hi;
        hi *= 4.0;
        sel_hi = sel(hi)?;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if sel(mid)? < target_jsd {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Nodes and weights for 512-point Gauss-Legendre quadrature on [-1, 1],
/// computed once by Newton iteration on the Legendre recurrence.
pub fn gauss_legendre_512() -> (&'static [f64], &'static [f64]) {
    static CACHE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    let (n, w) = CACHE.get_or_init(|| gauss_legendre(512));
    (n, w)
}

/// Gauss-Legendre nodes/weights for arbitrary order.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::EstimateKind;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (nodes, weights) = gauss_legendre(8);
        // Exact for degree <= 15; check x^10 on [-1, 1] = 2/11.
        let got: f64 = nodes
            .iter()
            .zip(&weights)
            .map(|(&x, &w)| w * x.powi(10))
            .sum();
        assert!((got - 2.0 / 11.0).abs() < 1e-12);
        let total: f64 = weights.iter().sum();
        assert!((total - 2.0).abs() < 1e-12);
    }

    #[test]
    fn category_prob_pinned_three_category_case() {
        // mu = [50, 100, 150], sigma = 20, I = 100: direct softmax value.
        let p = ChannelParams {
            sigma_prod: 20.0,
            sigma_per: 20.0,
            spacing: 50.0,
            n_flank: 1,
        };
        let v = category_prob(0.0, &p);
        assert!((v - 0.919_224_213_493_421_3).abs() < 1e-12, "v {v}");
    }

    #[test]
    fn category_prob_midpoint_two_category_limit() {
        let p = ChannelParams {
            sigma_prod: 10.0,
            sigma_per: 10.0,
            spacing: 100.0,
            n_flank: 1,
        };
        // Halfway between two categories with the third far away.
        let v = category_prob(50.0, &p);
        assert!((v - 0.5).abs() < 1e-5, "v {v}");
    }

    #[test]
    fn category_prob_maximal_at_center() {
        let p = ChannelParams::new(10.0, 15.0, 60.0).unwrap();
        let at_center = category_prob(0.0, &p);
        for off in [-30.0, -10.0, 5.0, 20.0, 29.0] {
            assert!(category_prob(off, &p) <= at_center);
        }
    }

    #[test]
    fn accuracy_saturates_with_spacing() {
        let wide = ChannelParams::new(10.0, 10.0, 600.0).unwrap();
        assert!(transmission_accuracy(&wide) > 0.999_999);
        // Monotone over a spacing grid.
        let mut prev = 0.0;
        for spacing in [10.0, 25.0, 50.0, 75.0, 100.0, 150.0] {
            let acc = transmission_accuracy(&ChannelParams::new(10.0, 10.0, spacing).unwrap());
            assert!(acc > prev, "accuracy not monotone at {spacing}");
            prev = acc;
        }
    }

    #[test]
    fn vanishing_production_noise_is_category_prob_at_center() {
        // With sigma_prod -> 0 the production integral collapses to the
        // category probability of a perfectly sung interval.
        let p = ChannelParams {
            sigma_prod: 1e-3,
            sigma_per: 20.0,
            spacing: 50.0,
            n_flank: 5,
        };
        let acc = transmission_accuracy(&p);
        let direct = category_prob(0.0, &p);
        // The +-6 sigma truncation drops 2e-9 of the production mass.
        assert!((acc - direct).abs() < 1e-8, "{acc} vs {direct}");
    }

    #[test]
    fn expert_sigma_gives_published_minimum_interval() {
        let i_min = min_interval_size(10.0, 10.0, 0.99).unwrap();
        assert!((i_min - 54.0).abs() <= 3.0, "i_min {i_min}");
        let acc = transmission_accuracy(&ChannelParams::new(10.0, 10.0, 54.0).unwrap());
        assert!((acc - 0.99).abs() < 0.005, "acc {acc}");
    }

    #[test]
    fn vanishing_perception_noise_matches_closed_form() {
        // With sigma_per -> 0 only production errors matter:
        // I_min = 2 * sigma_prod * z(0.995).
        let i_min = min_interval_size(10.0, 1e-6, 0.99).unwrap();
        let closed = 2.0 * 10.0 * 2.575_829_303_548_900_4;
        assert!((i_min - closed).abs() < 0.5, "i_min {i_min} vs {closed}");
    }

    #[test]
    fn halving_sigmas_roughly_halves_result() {
        let a = min_interval_size(10.0, 10.0, 0.99).unwrap();
        let b = min_interval_size(5.0, 5.0, 0.99).unwrap();
        assert!((a / b - 2.0).abs() < 0.05, "ratio {}", a / b);
    }

    #[test]
    fn prominence_fundamental_block() {
        let q = ProminenceQuery {
            n1: 1,
            n2: 10,
            attenuation: 0.0,
        };
        let rows = prominence_counts(&q).unwrap();
        let weight_of = |num: u32, den: u32| {
            rows.iter()
                .find(|e| e.numerator == num && e.denominator == den)
                .map(|e| e.weight)
                .unwrap_or(0.0)
        };
        assert_eq!(weight_of(2, 1), 3.0);
        assert_eq!(weight_of(5, 4), 2.0);
        assert_eq!(weight_of(3, 2), 2.0);
        assert_eq!(weight_of(7, 4), 1.0);
        assert_eq!(weight_of(1, 1), 1.0);
        assert_eq!(weight_of(9, 8), 1.0);
        let total: f64 = rows.iter().map(|e| e.weight).sum();
        assert_eq!(total, 10.0);
    }

    #[test]
    fn prominence_weights_decrease_with_attenuation() {
        let base = prominence_counts(&ProminenceQuery {
            n1: 10,
            n2: 10,
            attenuation: 0.0,
        })
        .unwrap();
        let damped = prominence_counts(&ProminenceQuery {
            n1: 10,
            n2: 10,
            attenuation: 0.3,
        })
        .unwrap();
        for e in &damped {
            let b = base
                .iter()
                .find(|x| x.numerator == e.numerator && x.denominator == e.denominator)
                .unwrap();
            assert!(e.weight <= b.weight + 1e-12);
        }
    }

    #[test]
    fn octave_reduction_convention() {
        assert_eq!(reduce_to_octave(1, 1), (1, 1));
        assert_eq!(reduce_to_octave(2, 1), (2, 1));
        assert_eq!(reduce_to_octave(4, 1), (2, 1));
        assert_eq!(reduce_to_octave(8, 1), (2, 1));
        assert_eq!(reduce_to_octave(10, 2), (5, 4));
        assert_eq!(reduce_to_octave(8, 3), (4, 3));
    }

    #[test]
    fn one_sig_fig_rounding() {
        assert_eq!(round_one_sig_fig(1.1253), 1.0);
        assert_eq!(round_one_sig_fig(1.643), 2.0);
        assert_eq!(round_one_sig_fig(0.0576), 0.06);
        assert_eq!(round_one_sig_fig(0.000655), 0.0007);
        assert_eq!(round_one_sig_fig(10.0), 10.0);
        assert_eq!(round_one_sig_fig(0.0), 0.0);
    }

    fn toy_h_dist() -> DistributionEstimate {
        // Coarse positively skewed distribution resembling a MIN Hbar sample.
        let grid: Vec<f64> = (0..60).map(|k| 10.0 + 0.5 * k as f64).collect();
        let mut mass: Vec<f64> = grid
            .iter()
            .map(|&h| (-(h - 18.0) * (h - 18.0) / 18.0).exp() + 0.2 * (-(h - 26.0) * (h - 26.0) / 60.0).exp())
            .collect();
        let total: f64 = mass.iter().sum();
        for m in &mut mass {
            *m /= total;
        }
        DistributionEstimate {
            kind: EstimateKind::Histogram,
            grid,
            mass,
        }
    }

    #[test]
    fn analytic_acceptance_beta_zero_is_identity() {
        let dist = toy_h_dist();
        let res = analytic_acceptance(&dist, |h| 1.0 - h / 40.0, 0.0).unwrap();
        assert_eq!(res.acceptance, 1.0);
        assert_eq!(res.selectivity, 0.0);
        for (a, b) in res.accepted.mass.iter().zip(&dist.mass) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn acceptance_decreases_with_beta() {
        let dist = toy_h_dist();
        let cost = |h: f64| 1.0 - h / 40.0;
        let mut prev = 1.0 + 1e-12;
        for beta in [0.5, 1.0, 2.0, 5.0, 10.0] {
            let r = analytic_acceptance(&dist, cost, beta).unwrap();
            assert!(r.acceptance < prev);
            prev = r.acceptance;
        }
    }

    #[test]
    fn c3_matches_c1_at_m_one() {
        let dist = toy_h_dist();
        for beta in [0.5, 2.0, 8.0] {
            let a = analytic_acceptance(&dist, |h| 1.0 - h / 40.0, beta).unwrap();
            let b = analytic_acceptance(&dist, |h| 1.0 - (h / 40.0f64).powf(1.0), beta).unwrap();
            assert!((a.acceptance - b.acceptance).abs() < 1e-12);
            assert!((a.selectivity - b.selectivity).abs() < 1e-12);
        }
    }

    #[test]
    fn beta_for_selectivity_round_trip() {
        let dist = toy_h_dist();
        let cost = |h: f64| 1.0 - h / 40.0;
        assert_eq!(beta_for_selectivity(&dist, cost, 0.0).unwrap(), 0.0);
        let beta = beta_for_selectivity(&dist, cost, 0.5).unwrap();
        let sel = analytic_acceptance(&dist, cost, beta).unwrap().selectivity;
        assert!((sel - 0.5).abs() < 1e-3, "sel {sel}");
    }
}
