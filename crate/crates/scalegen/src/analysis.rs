//! Model-vs-database evaluation: fraction of database scales found,
//! prediction probabilities, the not-found taxonomy, tritone statistics,
//! interval-mixing analysis, hierarchical clustering, and the
//! harmonicity-prevalence correlation.

use std::collections::{BTreeMap, HashMap, HashSet};

use kodama::{linkage, Method};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::costs::HarmonicityTemplate;
use crate::error::{Error, Result};
use crate::exec::{map_indexed, Parallelism};
use crate::generator::{acceptance_probability, Model, ModelConfig};
use crate::scale::{
    circular_intervals, notes_from_positive_intervals, scales_similar, GeneratedScale,
    ScaleRecord, SimilarityTolerance, OCTAVE_CENTS,
};
use crate::stats::pearson;

/// Tritone window: 600 +- 20 cents.
pub const TRITONE_CENTS: f64 = 600.0;
pub const TRITONE_HALF_WIDTH: f64 = 20.0;

/// Generated populations grouped by scale size, stored as note vectors for
/// fast similarity checks.
#[derive(Debug, Clone, Default)]
pub struct PopulationSet {
    pub by_n: BTreeMap<usize, Vec<Vec<f64>>>,
}

impl PopulationSet {
    pub fn from_scales<'a, I>(scales: I) -> Self
    where
        I: IntoIterator<Item = &'a GeneratedScale>,
    {
        let mut by_n: BTreeMap<usize, Vec<Vec<f64>>> = BTreeMap::new();
        for s in scales {
            by_n
                .entry(s.n())
                .or_default()
                .push(notes_from_positive_intervals(&s.adjacent_intervals));
        }
        PopulationSet { by_n }
    }

    pub fn insert_population(&mut self, scales: &[GeneratedScale]) {
        for s in scales {
            self.by_n
                .entry(s.n())
                .or_default()
                .push(notes_from_positive_intervals(&s.adjacent_intervals));
        }
    }
}

/// Whether each database scale is matched by any generated scale of equal
/// size, within the note tolerance.
pub fn found_flags(
    db: &[ScaleRecord],
    pop: &PopulationSet,
    tol: SimilarityTolerance,
    mode: Parallelism,
) -> Vec<bool> {
    map_indexed(mode, db.len(), |k| {
        let rec = &db[k];
        match pop.by_n.get(&rec.n()) {
            None => false,
            Some(cands) => cands
                .iter()
                .any(|cand| scales_similar(&rec.notes, cand, tol)),
        }
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FractionFound {
    pub found: usize,
    pub total: usize,
    pub fraction: f64,
}

/// f_D per scale size: the fraction of database scales of each N matched by
/// the population.
pub fn fraction_found(
    db: &[ScaleRecord],
    pop: &PopulationSet,
    tol: SimilarityTolerance,
) -> BTreeMap<usize, FractionFound> {
    let flags = found_flags(db, pop, tol, Parallelism::auto());
    let mut out: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for (rec, &f) in db.iter().zip(&flags) {
        let e = out.entry(rec.n()).or_insert((0, 0));
        e.1 += 1;
        if f {
            e.0 += 1;
        }
    }
    out.into_iter()
        .map(|(n, (found, total))| {
            (
                n,
                FractionFound {
                    found,
                    total,
                    fraction: found as f64 / total as f64,
                },
            )
        })
        .collect()
}

/// Marginal distribution of one adjacent interval under the MIN model at
/// 1-cent resolution, estimated from seeded draws. Used as the factor density
/// in scale-prediction probabilities.
#[derive(Debug, Clone)]
pub struct IntervalDensity {
    /// Mass per 1-cent bin [k, k+1) for k = 0..1199. Sums to 1.
    pub bins: Vec<f64>,
    pub n: usize,
    pub i_min: f64,
}

impl IntervalDensity {
    /// Builds the density from `scales` accepted MIN draws.
    pub fn from_min_model(n: usize, i_min: f64, scales: usize, seed: u64) -> Result<Self> {
        let mut cfg = ModelConfig::new(Model::Min, n, seed);
        cfg.i_min = i_min;
        cfg.target_accepted = scales;
        let draws = crate::generator::Generator::new(cfg)?.run_adjacent_intervals()?;
        let mut bins = vec![0.0f64; OCTAVE_CENTS as usize];
        let mut total = 0u64;
        for ia in &draws {
            for &i in ia {
                let k = i.floor() as usize;
                if k < bins.len() {
                    bins[k] += 1.0;
                    total += 1;
                }
            }
        }
        for b in &mut bins {
            *b /= total as f64;
        }
        Ok(IntervalDensity { bins, n, i_min })
    }

    pub fn validate(&self) -> Result<()> {
        let total: f64 = self.bins.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDensity(format!(
                "interval density sums to {total}"
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn mass(&self, interval: f64) -> f64 {
        if interval < 0.0 {
            return 0.0;
        }
        let k = interval.floor() as usize;
        if k < self.bins.len() {
            self.bins[k]
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PMin {
    pub value: f64,
    /// Standard error of the Monte-Carlo estimate; absent for exact sums.
    pub std_err: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PMinMethod {
    /// Exact for N <= 7, Monte-Carlo above.
    Auto,
    Exact,
    MonteCarlo { draws: u64, seed: u64 },
}

/// Probability that the MIN model generates a scale similar to `notes`:
/// the sum over all integer offset vectors in {-e..e}^(N-1) applied to the
/// interior notes of the product of per-interval densities, with adjacent
/// intervals recomputed per offset vector.
///
/// The octave note of a generated scale is always 1200, so scales whose own
/// octave deviates from 1200 by more than `e` have probability 0.
pub fn p_min(
    notes: &[f64],
    density: &IntervalDensity,
    tol: SimilarityTolerance,
    method: PMinMethod,
) -> Result<PMin> {
    density.validate()?;
    let n = notes.len() - 1;
    if n < 2 {
        return Err(Error::Input("p_min needs scales with at least 2 intervals".into()));
    }
    let e = tol.e.round() as i64;
    if (notes[n] - OCTAVE_CENTS).abs() > tol.e {
        return Ok(PMin {
            value: 0.0,
            std_err: None,
        });
    }
    match method {
        PMinMethod::Auto => {
            if n <= 7 {
                Ok(p_min_exact(notes, density, e))
            } else {
                p_min_monte_carlo(notes, density, e, 1_000_000, 0x5eed)
            }
        }
        PMinMethod::Exact => Ok(p_min_exact(notes, density, e)),
        PMinMethod::MonteCarlo { draws, seed } => p_min_monte_carlo(notes, density, e, draws, seed),
    }
}

/// Exact enumeration of the offset sum, factored over the chain of interior
/// notes: offsets only couple consecutive notes, so the 21^(N-1) terms reduce
/// to N-1 passes over a 21-vector.
fn p_min_exact(notes: &[f64], density: &IntervalDensity, e: i64) -> PMin {
    let n = notes.len() - 1;
    let width = (2 * e + 1) as usize;
    // state[d] = sum over offset prefixes with the latest interior note
    // shifted by d - e.
    let mut state = vec![0.0f64; width];
    for (d, s) in state.iter_mut().enumerate() {
        let delta = (d as i64 - e) as f64;
        *s = density.mass(notes[1] + delta - notes[0]);
    }
    for k in 2..n {
        let base = notes[k] - notes[k - 1];
        let mut next = vec![0.0f64; width];
        for (d, nx) in next.iter_mut().enumerate() {
            let dk = (d as i64 - e) as f64;
            let mut acc = 0.0;
            for (dp, sp) in state.iter().enumerate() {
                if *sp == 0.0 {
                    continue;
                }
                let dprev = (dp as i64 - e) as f64;
                acc += sp * density.mass(base + dk - dprev);
            }
            *nx = acc;
        }
        state = next;
    }
    // Closing interval runs to the fixed 1200-cent octave.
    let base = OCTAVE_CENTS - notes[n - 1];
    let mut total = 0.0;
    for (dp, sp) in state.iter().enumerate() {
        let dprev = (dp as i64 - e) as f64;
        total += sp * density.mass(base - dprev);
    }
    PMin {
        value: total,
        std_err: None,
    }
}

/// Stratified Monte-Carlo estimate: strata fix the first interior offset, the
/// remaining offsets are drawn uniformly. Each stratum owns an RNG substream.
fn p_min_monte_carlo(
    notes: &[f64],
    density: &IntervalDensity,
    e: i64,
    draws: u64,
    seed: u64,
) -> Result<PMin> {
    let n = notes.len() - 1;
    let width = 2 * e + 1;
    let strata = width as u64;
    let per_stratum = (draws / strata).max(2);
    let interior = n - 1;

    let results = map_indexed(Parallelism::auto(), strata as usize, |s| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(s as u64);
        let d1 = s as i64 - e;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        let mut offsets = vec![0i64; interior];
        for _ in 0..per_stratum {
            offsets[0] = d1;
            for o in offsets.iter_mut().skip(1) {
                *o = rng.random_range(-e..=e);
            }
            let mut prod = density.mass(notes[1] + offsets[0] as f64 - notes[0]);
            for k in 2..n {
                if prod == 0.0 {
                    break;
                }
                let base = notes[k] - notes[k - 1];
                prod *= density.mass(base + (offsets[k - 1] - offsets[k - 2]) as f64);
            }
            if prod != 0.0 {
                prod *= density.mass(OCTAVE_CENTS - notes[n - 1] - offsets[interior - 1] as f64);
            }
            sum += prod;
            sum_sq += prod * prod;
        }
        (sum, sum_sq)
    });

    let m = per_stratum as f64;
    let scale = (width as f64).powi(interior as i32) / width as f64;
    let mut est = 0.0;
    let mut var = 0.0;
    for (sum, sum_sq) in results {
        let mean = sum / m;
        let v = (sum_sq / m - mean * mean).max(0.0) / m;
        est += mean;
        var += v;
    }
    Ok(PMin {
        value: scale * est,
        std_err: Some(scale * var.sqrt()),
    })
}

/// Probability that any of the biased models finds the scale:
/// P_MIN * sum over models of min{1, exp(-beta * C)}, capped at 1.
pub fn p_any(p_min_value: f64, model_costs: &[(f64, f64)]) -> f64 {
    let s: f64 = model_costs
        .iter()
        .map(|&(beta, cost)| acceptance_probability(cost, beta))
        .sum();
    (p_min_value * s).min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Category {
    Found,
    /// Impossible under the hard constraints: an interval below 70 cents or
    /// an octave more than 10 cents away from 1200.
    Prohibited,
    /// Possible but improbable under the I_min constraint alone.
    UnlikelyConstraint,
    /// Likely enough that a larger sample would find it.
    Undersampled,
    /// Unlikely under every model bias.
    UnlikelyBias,
}

#[derive(Debug, Clone, Serialize)]
pub struct FoundEntry {
    pub scale_id: String,
    pub n: usize,
    pub found_by_trans: bool,
    pub found_by_har: bool,
    pub found_by_fif: bool,
    pub p_min: f64,
    pub p_any: f64,
    pub category: Category,
}

#[derive(Debug, Clone, Serialize)]
pub struct FoundReport {
    pub entries: Vec<FoundEntry>,
    pub threshold_p_min: f64,
    pub threshold_p_any: f64,
    pub counts: CategoryCounts,
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct CategoryCounts {
    pub found: usize,
    pub prohibited: usize,
    pub unlikely_constraint: usize,
    pub undersampled: usize,
    pub unlikely_bias: usize,
}

/// Splits the database into found scales and the four not-found categories.
///
/// Thresholds follow the published procedure: the 10th percentile of P_MIN
/// (and of P_ANY) among found scales; not-found scales below the P_MIN
/// threshold are "unlikely due to constraints", the rest split into
/// "undersampled" (P_ANY above its threshold) and "unlikely due to biases".
pub fn classify_not_found(
    db: &[ScaleRecord],
    found_trans: &[bool],
    found_har: &[bool],
    found_fif: &[bool],
    p_mins: &[f64],
    p_anys: &[f64],
) -> Result<FoundReport> {
    let n = db.len();
    if [found_trans.len(), found_har.len(), found_fif.len(), p_mins.len(), p_anys.len()]
        .iter()
        .any(|&l| l != n)
    {
        return Err(Error::Input("classify_not_found: length mismatch".into()));
    }

    let found: Vec<bool> = (0..n)
        .map(|k| found_trans[k] || found_har[k] || found_fif[k])
        .collect();

    let decile = |values: &[f64]| -> f64 {
        let mut v: Vec<f64> = values.to_vec();
        v.sort_by(f64::total_cmp);
        if v.is_empty() {
            return 0.0;
        }
        // Nearest-rank 10th percentile.
        let idx = ((v.len() as f64 * 0.1).ceil() as usize).max(1) - 1;
        v[idx]
    };
    let found_pmin: Vec<f64> = (0..n).filter(|&k| found[k]).map(|k| p_mins[k]).collect();
    let found_pany: Vec<f64> = (0..n).filter(|&k| found[k]).map(|k| p_anys[k]).collect();
    let t_pmin = decile(&found_pmin);
    let t_pany = decile(&found_pany);

    let mut counts = CategoryCounts::default();
    let mut entries = Vec::with_capacity(n);
    for (k, rec) in db.iter().enumerate() {
        let category = if found[k] {
            counts.found += 1;
            Category::Found
        } else if is_prohibited(rec) {
            counts.prohibited += 1;
            Category::Prohibited
        } else if p_mins[k] < t_pmin {
            counts.unlikely_constraint += 1;
            Category::UnlikelyConstraint
        } else if p_anys[k] > t_pany {
            counts.undersampled += 1;
            Category::Undersampled
        } else {
            counts.unlikely_bias += 1;
            Category::UnlikelyBias
        };
        entries.push(FoundEntry {
            scale_id: rec.id.clone(),
            n: rec.n(),
            found_by_trans: found_trans[k],
            found_by_har: found_har[k],
            found_by_fif: found_fif[k],
            p_min: p_mins[k],
            p_any: p_anys[k],
            category,
        });
    }
    Ok(FoundReport {
        entries,
        threshold_p_min: t_pmin,
        threshold_p_any: t_pany,
        counts,
    })
}

pub fn is_prohibited(rec: &ScaleRecord) -> bool {
    let min = rec
        .adjacent_intervals
        .iter()
        .cloned()
        .fold(f64::MAX, f64::min);
    min < 70.0 || (rec.octave() - OCTAVE_CENTS).abs() > 10.0
}

/// Fraction of circular intervals within 20 cents of the 600-cent tritone,
/// over a group of same-size scales.
pub fn tritone_fraction(adjacent_lists: &[Vec<f64>]) -> f64 {
    if adjacent_lists.is_empty() {
        return 0.0;
    }
    let n = adjacent_lists[0].len();
    let mut hits = 0u64;
    for ia in adjacent_lists {
        debug_assert_eq!(ia.len(), n);
        for i in circular_intervals(ia) {
            if (i - TRITONE_CENTS).abs() <= TRITONE_HALF_WIDTH {
                hits += 1;
            }
        }
    }
    hits as f64 / (n * (n - 1) * adjacent_lists.len()) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SizeClass {
    Small,
    Medium,
    Large,
}

/// Relative size classes: small below (1-x) * 1200/N, large above
/// (1+x) * 1200/N, medium in between (inclusive).
pub fn size_categories(adjacent: &[f64], x: f64) -> Vec<SizeClass> {
    let n = adjacent.len() as f64;
    let lo = (1.0 - x) * OCTAVE_CENTS / n;
    let hi = (1.0 + x) * OCTAVE_CENTS / n;
    adjacent
        .iter()
        .map(|&i| {
            if i < lo {
                SizeClass::Small
            } else if i > hi {
                SizeClass::Large
            } else {
                SizeClass::Medium
            }
        })
        .collect()
}

/// Probabilities that interval size classes sit next to each other, against
/// the random-pairing baseline from the class marginals. Pairs are unordered
/// circular neighbours: M-M, M-X (X = extreme), X-E (equal extremes),
/// X-O (opposite extremes).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AdjacencyProfile {
    pub mm: f64,
    pub mx: f64,
    pub xe: f64,
    pub xo: f64,
    pub baseline_mm: f64,
    pub baseline_mx: f64,
    pub baseline_xe: f64,
    pub baseline_xo: f64,
    pub pairs: u64,
}

pub fn adjacency_profile(adjacent_lists: &[Vec<f64>], x: f64) -> Result<AdjacencyProfile> {
    if adjacent_lists.is_empty() {
        return Err(Error::Input("adjacency profile needs scales".into()));
    }
    let mut class_counts = [0u64; 3];
    let mut pair_counts = [0u64; 4]; // mm, mx, xe, xo
    let mut pairs = 0u64;
    for ia in adjacent_lists {
        let classes = size_categories(ia, x);
        for c in &classes {
            class_counts[*c as usize] += 1;
        }
        let n = classes.len();
        for i in 0..n {
            let a = classes[i];
            let b = classes[(i + 1) % n];
            pairs += 1;
            use SizeClass::*;
            let idx = match (a, b) {
                (Medium, Medium) => 0,
                (Medium, _) | (_, Medium) => 1,
                (Small, Small) | (Large, Large) => 2,
                (Small, Large) | (Large, Small) => 3,
            };
            pair_counts[idx] += 1;
        }
    }
    let total_classes: u64 = class_counts.iter().sum();
    let ps = class_counts[SizeClass::Small as usize] as f64 / total_classes as f64;
    let pm = class_counts[SizeClass::Medium as usize] as f64 / total_classes as f64;
    let pl = class_counts[SizeClass::Large as usize] as f64 / total_classes as f64;
    Ok(AdjacencyProfile {
        mm: pair_counts[0] as f64 / pairs as f64,
        mx: pair_counts[1] as f64 / pairs as f64,
        xe: pair_counts[2] as f64 / pairs as f64,
        xo: pair_counts[3] as f64 / pairs as f64,
        baseline_mm: pm * pm,
        baseline_mx: 2.0 * pm * (ps + pl),
        baseline_xe: ps * ps + pl * pl,
        baseline_xo: 2.0 * ps * pl,
        pairs,
    })
}

/// Mixing cost of one circular ordering: the root mean square deviation of
/// consecutive-pair sums from the equidistant pair sum 2400/N.
pub fn mixing_cost(adjacent: &[f64]) -> f64 {
    let n = adjacent.len();
    let target = 2.0 * OCTAVE_CENTS / n as f64;
    let mut acc = 0.0;
    for i in 0..n {
        let d = adjacent[i] + adjacent[(i + 1) % n] - target;
        acc += d * d;
    }
    (acc / n as f64).sqrt()
}

/// Rearranges a scale's intervals with a bias towards well-mixed orderings:
/// enumerates the unique circular orderings of the interval multiset,
/// normalizes their mixing costs by the maximum, and samples ordering j with
/// weight exp(1/C~_j). Weights are formed in log space, so orderings with
/// C~ = 0 take all the mass instead of overflowing.
pub fn mix_rearrange<R: Rng + ?Sized>(adjacent: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    if adjacent.len() < 3 {
        return Err(Error::Input("mix_rearrange needs N >= 3".into()));
    }
    let orderings = unique_circular_orderings(adjacent);
    if orderings.len() == 1 {
        return Ok(adjacent.to_vec());
    }
    let costs: Vec<f64> = orderings.iter().map(|o| mixing_cost(o)).collect();
    let max_cost = costs.iter().cloned().fold(0.0f64, f64::max);
    if max_cost == 0.0 {
        return Ok(adjacent.to_vec());
    }
    // log weight = 1/C~ with C~ floored at 1e-12.
    let log_w: Vec<f64> = costs
        .iter()
        .map(|&c| 1.0 / (c / max_cost).max(1e-12))
        .collect();
    let log_max = log_w.iter().cloned().fold(f64::MIN, f64::max);
    let weights: Vec<f64> = log_w.iter().map(|&l| (l - log_max).exp()).collect();
    let total: f64 = weights.iter().sum();
    let mut draw = rng.random::<f64>() * total;
    for (o, &w) in orderings.iter().zip(&weights) {
        draw -= w;
        if draw <= 0.0 {
            return Ok(o.clone());
        }
    }
    Ok(orderings.last().expect("nonempty").clone())
}

/// All distinct permutations of the multiset, deduplicated under rotation.
/// Each class is represented by its lexicographically smallest rotation.
fn unique_circular_orderings(values: &[f64]) -> Vec<Vec<f64>> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    let mut out = Vec::new();
    loop {
        let canon = canonical_rotation(&sorted);
        let key: Vec<u64> = canon.iter().map(|v| v.to_bits()).collect();
        if seen.insert(key) {
            out.push(canon);
        }
        if !next_permutation(&mut sorted) {
            break;
        }
    }
    out
}

fn canonical_rotation(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let mut best: Option<Vec<f64>> = None;
    for s in 0..n {
        let rot: Vec<f64> = (0..n).map(|k| v[(s + k) % n]).collect();
        let better = match &best {
            None => true,
            Some(b) => lex_less(&rot, b),
        };
        if better {
            best = Some(rot);
        }
    }
    best.expect("nonempty")
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Less => return true,
            std::cmp::Ordering::Greater => return false,
            std::cmp::Ordering::Equal => {}
        }
    }
    false
}

/// Lexicographic next permutation with exact f64 comparisons; equal elements
/// collapse duplicate permutations automatically.
fn next_permutation(v: &mut [f64]) -> bool {
    let n = v.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

#[derive(Debug, Clone, Serialize)]
pub struct ClusterAssignment {
    /// Scale id to cluster label (1..=k), sorted by scale id.
    pub labels: Vec<(String, usize)>,
    pub k: usize,
    /// Merge steps as (cluster a, cluster b, distance, new size), leaves are
    /// 0..n-1 and merge i creates cluster n+i.
    pub merges: Vec<(usize, usize, f64, usize)>,
}

/// Asymmetric interval-set distance: the sum over intervals of A of the
/// distance to the nearest interval of B. The signless form is the only
/// reading that yields a usable premetric.
pub fn interval_set_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .map(|&x| {
            b.iter()
                .map(|&y| (x - y).abs())
                .fold(f64::MAX, f64::min)
        })
        .sum()
}

/// Ward hierarchical clustering of database scales on the symmetrized
/// interval-set distance sqrt(d_AB * d_BA), cut at `k` clusters. Input order
/// does not matter: records are sorted by id before the distance matrix is
/// built.
pub fn cluster_scales(db: &[ScaleRecord], k: usize) -> Result<ClusterAssignment> {
    let n = db.len();
    if n < k || k == 0 {
        return Err(Error::Input(format!(
            "cannot cut {n} scales into {k} clusters"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| db[a].id.cmp(&db[b].id));

    let mut condensed = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        let a = &db[order[i]].adjacent_intervals;
        for j in (i + 1)..n {
            let b = &db[order[j]].adjacent_intervals;
            let d = (interval_set_distance(a, b) * interval_set_distance(b, a)).sqrt();
            condensed.push(d);
        }
    }
    let dendrogram = linkage(&mut condensed, n, Method::Ward);

    // Cut: apply the first n-k merges.
    let mut parent: Vec<usize> = (0..2 * n - 1).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut merges = Vec::with_capacity(n - 1);
    for (step, s) in dendrogram.steps().iter().enumerate() {
        merges.push((s.cluster1, s.cluster2, s.dissimilarity, s.size));
        if step < n - k {
            let new = n + step;
            let r1 = find(&mut parent, s.cluster1);
            let r2 = find(&mut parent, s.cluster2);
            parent[r1] = new;
            parent[r2] = new;
        }
    }

    // Stable labels: clusters numbered by their smallest member, in id order.
    let mut root_to_label: HashMap<usize, usize> = HashMap::new();
    let mut labels = Vec::with_capacity(n);
    for (pos, &rec_idx) in order.iter().enumerate() {
        let root = find(&mut parent, pos);
        let next = root_to_label.len() + 1;
        let label = *root_to_label.entry(root).or_insert(next);
        labels.push((db[rec_idx].id.clone(), label));
    }
    debug_assert_eq!(root_to_label.len(), k);
    Ok(ClusterAssignment {
        labels,
        k,
        merges,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PrevalenceReport {
    /// Per template window: ratio, harmonicity score, interval frequency.
    pub windows: Vec<PrevalenceWindow>,
    pub r: f64,
    pub intervals: u64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PrevalenceWindow {
    pub numerator: u32,
    pub denominator: u32,
    pub score: f64,
    pub frequency: f64,
}

/// Bins the circular intervals of same-size database scales into the template
/// windows and correlates per-window frequency with harmonicity score.
pub fn prevalence_vs_harmonicity(
    db: &[&ScaleRecord],
    template: &HarmonicityTemplate,
) -> Result<PrevalenceReport> {
    if db.is_empty() {
        return Err(Error::Input("no scales to analyse".into()));
    }
    let mut counts = vec![0u64; template.windows().len()];
    let mut total = 0u64;
    for rec in db {
        for i in circular_intervals(&rec.adjacent_intervals) {
            total += 1;
            if let Some(w) = template.window_index(i) {
                counts[w] += 1;
            }
        }
    }
    let freqs: Vec<f64> = counts.iter().map(|&c| c as f64 / total as f64).collect();
    let scores: Vec<f64> = template.windows().iter().map(|w| w.score).collect();
    let r = pearson(&freqs, &scores)?;
    let windows = template
        .windows()
        .iter()
        .zip(&freqs)
        .map(|(w, &frequency)| PrevalenceWindow {
            numerator: w.numerator,
            denominator: w.denominator,
            score: w.score,
            frequency,
        })
        .collect();
    Ok(PrevalenceReport {
        windows,
        r,
        intervals: total,
    })
}
