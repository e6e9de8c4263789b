//! Seeded Monte-Carlo engine producing scale populations: uniform proposals,
//! minimum-interval rejection, and Boltzmann acceptance against a model cost.
//!
//! Proposals are partitioned into fixed-size batches. Batch `b` draws from an
//! independent counter-based substream (ChaCha8, stream id = b) of the run
//! seed, and accepted scales are merged in batch order. Output is therefore
//! bit-identical for any thread count, and for the sequential backend.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::costs::{
    self, cost_har, CostFamily, HarmonicityTemplate, Rounding, TransCost,
};
use crate::error::{Error, Result};
use crate::exec::{map_indexed, Parallelism};
use crate::params;
use crate::scale::{CostRecord, GeneratedScale, OCTAVE_CENTS};

/// Proposals per RNG substream batch. Fixed so that populations are
/// reproducible across machines; do not tune at runtime.
const BATCH_PROPOSALS: u64 = 16_384;

/// Batches in the probe round, before the feasibility check.
const PROBE_BATCHES: u64 = 8;

/// Abort threshold for the projected acceptance rate.
const MIN_PROJECTED_ACCEPTANCE: f64 = 1e-10;

const MAX_BATCHES_PER_ROUND: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Ran,
    Min,
    Har,
    Fif,
    Trans,
}

impl Model {
    pub fn is_biased(self) -> bool {
        matches!(self, Model::Har | Model::Fif | Model::Trans)
    }
}

impl std::fmt::Display for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Model::Ran => "ran",
            Model::Min => "min",
            Model::Har => "har",
            Model::Fif => "fif",
            Model::Trans => "trans",
        };
        f.write_str(s)
    }
}

/// Which cost feeds the FIF model's Boltzmann stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FifCostVariant {
    /// 1/(1 + Fbar), the headline form.
    #[default]
    Reciprocal,
    /// 1 - (N*Fbar)^2. The published bias strengths for the FIF model pair
    /// with this form; the reciprocal cost never drops below 1/2, so at those
    /// strengths its acceptance underflows to zero.
    AltQuadratic,
}

/// Which cost feeds the HAR model's Boltzmann stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum HarCostVariant {
    /// 1 - (Hbar - Hmin)/(Hmax - Hmin) with per-(N, I_min) constants.
    #[default]
    Normalized,
    /// One of the analytic family forms applied to Hbar.
    Family(CostFamily),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelConfig {
    pub model: Model,
    pub n_notes: usize,
    pub i_min: f64,
    /// Window width for the HAR template and the fifths count.
    pub w: f64,
    /// Compressibility exponent.
    pub trans_n: u32,
    /// Harmonicity exponent.
    pub m: f64,
    pub beta: f64,
    /// Accepted scales to produce.
    pub target_accepted: usize,
    pub seed: u64,
    #[serde(default)]
    pub fif_cost: FifCostVariant,
    #[serde(default)]
    pub har_cost: HarCostVariant,
    /// HAR normalization constants (Hmin, Hmax). When absent they are taken
    /// from the published parameter table, or derived from a MIN pilot run
    /// for parameter combinations outside it.
    #[serde(default)]
    pub har_norm: Option<(f64, f64)>,
    #[serde(default)]
    pub trans_rounding: Rounding,
    #[serde(default)]
    pub parallelism: Parallelism,
}

impl ModelConfig {
    pub fn new(model: Model, n_notes: usize, seed: u64) -> Self {
        ModelConfig {
            model,
            n_notes,
            i_min: if model == Model::Ran { 0.0 } else { 80.0 },
            w: 20.0,
            trans_n: 2,
            m: 1.0,
            beta: 0.0,
            target_accepted: 10_000,
            seed,
            fif_cost: FifCostVariant::default(),
            har_cost: HarCostVariant::default(),
            har_norm: None,
            trans_rounding: Rounding::Ceiling,
            parallelism: Parallelism::auto(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=12).contains(&self.n_notes) {
            return Err(Error::Input(format!(
                "n_notes must be in [2, 12], got {}",
                self.n_notes
            )));
        }
        if !(self.i_min >= 0.0) {
            return Err(Error::Input("i_min must be >= 0".into()));
        }
        if !(self.beta >= 0.0) {
            return Err(Error::Input("beta must be >= 0".into()));
        }
        match self.model {
            Model::Ran => {
                if self.i_min != 0.0 {
                    return Err(Error::Input("the ran model requires i_min = 0".into()));
                }
                if self.beta != 0.0 {
                    return Err(Error::Input("the ran model requires beta = 0".into()));
                }
            }
            Model::Min => {
                if self.beta != 0.0 {
                    return Err(Error::Input("the min model requires beta = 0".into()));
                }
            }
            Model::Har | Model::Fif => {
                if !(self.w > 0.0) {
                    return Err(Error::Input("har/fif models require w > 0".into()));
                }
            }
            Model::Trans => {
                if self.trans_n < 1 {
                    return Err(Error::Input("trans model requires n >= 1".into()));
                }
            }
        }
        if self.n_notes as f64 * self.i_min >= OCTAVE_CENTS {
            return Err(Error::Input(format!(
                "infeasible constraint: {} intervals of at least {} cents exceed the octave",
                self.n_notes, self.i_min
            )));
        }
        if let Some((hmin, hmax)) = self.har_norm {
            if hmax <= hmin {
                return Err(Error::Input("har_norm requires Hmax > Hmin".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenerationReport {
    pub accepted: Vec<GeneratedScale>,
    /// Raw proposals drawn.
    pub attempts: u64,
    /// Proposals that passed the minimum-interval constraint.
    pub imin_passes: u64,
    /// Accepted count before truncation to the target size.
    pub accepted_total: u64,
    /// Acceptance fraction in the published convention: biased models are
    /// conditioned on I_min survival, MIN and RAN count raw proposals.
    pub q: f64,
    /// Accepted / raw proposals, for every model.
    pub q_total: f64,
    /// HAR normalization constants in effect, when the model used them.
    pub har_norm_used: Option<(f64, f64)>,
}

/// Acceptance measurement over a fixed number of proposals.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QReport {
    pub attempts: u64,
    pub imin_passes: u64,
    pub accepted: u64,
    pub q: f64,
    pub q_total: f64,
}

/// Draws `n` adjacent intervals from a uniform distribution on
/// [lo, 1200) and rescales them to sum to exactly 1200 cents.
///
/// The lower bound is the model's minimum interval size. Proposals are
/// rejected afterwards if rescaling pushed any interval back below it; with
/// lo = 0 this is the unconstrained uniform proposal.
pub fn sample_raw_scale<R: Rng + ?Sized>(n: usize, lo: f64, rng: &mut R) -> Vec<f64> {
    let mut out = vec![0.0; n];
    sample_raw_scale_into(lo, rng, &mut out);
    out
}

#[inline]
fn sample_raw_scale_into<R: Rng + ?Sized>(lo: f64, rng: &mut R, out: &mut [f64]) {
    let span = OCTAVE_CENTS - lo;
    let mut sum = 0.0;
    for v in out.iter_mut() {
        let u: f64 = rng.random();
        *v = lo + u * span;
        sum += *v;
    }
    let k = OCTAVE_CENTS / sum;
    for v in out.iter_mut() {
        *v *= k;
    }
}

/// Boltzmann acceptance: accept with probability min{1, exp(-beta * cost)}.
pub fn boltzmann_accept<R: Rng + ?Sized>(cost: f64, beta: f64, rng: &mut R) -> bool {
    debug_assert!(beta >= 0.0);
    let w = acceptance_probability(cost, beta);
    if w >= 1.0 {
        true
    } else {
        rng.random::<f64>() < w
    }
}

#[inline]
pub fn acceptance_probability(cost: f64, beta: f64) -> f64 {
    if beta == 0.0 || cost <= 0.0 {
        1.0
    } else {
        (-beta * cost).exp().min(1.0)
    }
}

/// Everything a worker needs to score one proposal.
struct CostEngine {
    model: Model,
    template: Option<HarmonicityTemplate>,
    hmin: f64,
    hmax: f64,
    m: f64,
    w: f64,
    trans_n: u32,
    trans_rounding: Rounding,
    fif_cost: FifCostVariant,
    har_cost: HarCostVariant,
    n_notes: usize,
}

impl CostEngine {
    /// Model cost of a proposal that already passed the I_min constraint.
    /// `notes` is scratch space of length n+1.
    #[inline]
    fn cost(&self, intervals: &[f64], notes: &mut [f64], ci: &mut Vec<f64>) -> f64 {
        match self.model {
            Model::Ran | Model::Min => 0.0,
            Model::Har => {
                let hbar = self.hbar(intervals, notes, ci);
                match self.har_cost {
                    HarCostVariant::Normalized => cost_har(hbar, self.hmin, self.hmax),
                    HarCostVariant::Family(fam) => fam.cost(hbar).unwrap_or(f64::INFINITY),
                }
            }
            Model::Fif => {
                self.fill_circular(intervals, notes, ci);
                let fbar = costs::fifths_fraction_of_intervals(ci, self.w);
                match self.fif_cost {
                    FifCostVariant::Reciprocal => costs::cost_fif(fbar),
                    FifCostVariant::AltQuadratic => costs::cost_fif_alt(fbar, self.n_notes),
                }
            }
            Model::Trans => {
                costs::cost_trans(intervals, self.trans_n, self.trans_rounding)
                    .map(|t| t.cost)
                    .unwrap_or(f64::INFINITY)
            }
        }
    }

    #[inline]
    fn fill_circular(&self, intervals: &[f64], notes: &mut [f64], ci: &mut Vec<f64>) {
        notes[0] = 0.0;
        let mut acc = 0.0;
        for (k, &i) in intervals.iter().enumerate() {
            acc += i;
            notes[k + 1] = acc;
        }
        ci.clear();
        crate::scale::circular_intervals_into(notes, ci);
    }

    #[inline]
    fn hbar(&self, intervals: &[f64], notes: &mut [f64], ci: &mut Vec<f64>) -> f64 {
        self.fill_circular(intervals, notes, ci);
        let tpl = self.template.as_ref().expect("har model builds a template");
        costs::mean_harmonicity_of_intervals(ci, tpl, self.m)
    }
}

struct BatchOutcome {
    accepted: Vec<Vec<f64>>,
    attempts: u64,
    imin_passes: u64,
    /// Sum of acceptance probabilities of surviving proposals; estimates the
    /// projected acceptance rate without waiting for rare accepts.
    weight_sum: f64,
}

/// Accepted interval lists per batch, plus (attempts, imin passes, weight sum).
type BatchTotals = (Vec<Vec<Vec<f64>>>, u64, u64, f64);

enum Target {
    Accepted(usize),
    Proposals(u64),
}

pub struct Generator {
    config: ModelConfig,
    engine: CostEngine,
    har_norm_used: Option<(f64, f64)>,
}

impl Generator {
    pub fn new(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let needs_template = config.model == Model::Har;
        let template = if needs_template {
            Some(HarmonicityTemplate::build(config.w)?)
        } else {
            None
        };
        let mut har_norm_used = None;
        let (hmin, hmax) = if config.model == Model::Har
            && matches!(config.har_cost, HarCostVariant::Normalized)
        {
            let norm = match config.har_norm {
                Some(pair) => pair,
                None => resolve_har_norm(&config)?,
            };
            har_norm_used = Some(norm);
            norm
        } else {
            (0.0, 1.0)
        };
        Ok(Generator {
            engine: CostEngine {
                model: config.model,
                template,
                hmin,
                hmax,
                m: config.m,
                w: config.w,
                trans_n: config.trans_n,
                trans_rounding: config.trans_rounding,
                fif_cost: config.fif_cost,
                har_cost: config.har_cost,
                n_notes: config.n_notes,
            },
            config,
            har_norm_used,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    /// Runs until the configured number of scales is accepted, then attaches
    /// cost records to the returned population.
    pub fn run(&self) -> Result<GenerationReport> {
        let (batches, attempts, passes, weight_sum) =
            self.run_batches(Target::Accepted(self.config.target_accepted))?;

        let mut accepted_total = 0u64;
        for b in &batches {
            accepted_total += b.len() as u64;
        }
        let mut accepted = Vec::with_capacity(self.config.target_accepted);
        'merge: for batch in batches {
            for ia in batch {
                if accepted.len() >= self.config.target_accepted {
                    break 'merge;
                }
                accepted.push(GeneratedScale::new(ia));
            }
        }
        let _ = weight_sum;

        let mut report = GenerationReport {
            accepted,
            attempts,
            imin_passes: passes,
            accepted_total,
            q: convention_q(self.config.model, accepted_total, passes, attempts),
            q_total: ratio(accepted_total, attempts),
            har_norm_used: self.har_norm_used,
        };
        self.attach_cost_records(&mut report)?;
        Ok(report)
    }

    /// Accepted adjacent-interval lists only, skipping cost records. For
    /// internal consumers that need bulk draws (density estimation).
    pub(crate) fn run_adjacent_intervals(&self) -> Result<Vec<Vec<f64>>> {
        let (batches, ..) = self.run_batches(Target::Accepted(self.config.target_accepted))?;
        let mut out = Vec::with_capacity(self.config.target_accepted);
        'merge: for batch in batches {
            for ia in batch {
                if out.len() >= self.config.target_accepted {
                    break 'merge;
                }
                out.push(ia);
            }
        }
        Ok(out)
    }

    /// Measures acceptance over a fixed number of raw proposals.
    pub fn measure_q(&self, proposals: u64) -> Result<QReport> {
        let (batches, attempts, passes, _) = self.run_batches(Target::Proposals(proposals))?;
        let accepted: u64 = batches.iter().map(|b| b.len() as u64).sum();
        Ok(QReport {
            attempts,
            imin_passes: passes,
            accepted,
            q: convention_q(self.config.model, accepted, passes, attempts),
            q_total: ratio(accepted, attempts),
        })
    }

    fn run_batches(&self, target: Target) -> Result<BatchTotals> {
        let mut out: Vec<Vec<Vec<f64>>> = Vec::new();
        let mut attempts = 0u64;
        let mut passes = 0u64;
        let mut weight_sum = 0.0f64;
        let mut accepted = 0u64;
        let mut next_batch = 0u64;
        let mut probed = false;

        loop {
            let remaining_budget = match target {
                Target::Accepted(_) => u64::MAX,
                Target::Proposals(p) => p.saturating_sub(attempts),
            };
            if remaining_budget == 0 {
                break;
            }

            let round = self.plan_round(&target, next_batch, accepted, attempts, weight_sum);
            if round == 0 {
                break;
            }
            let first = next_batch;
            let results = map_indexed(self.config.parallelism, round as usize, |k| {
                let batch = first + k as u64;
                let budget_before = (batch - first) * BATCH_PROPOSALS;
                let len = BATCH_PROPOSALS.min(remaining_budget.saturating_sub(budget_before));
                self.run_batch(batch, len)
            });
            next_batch += round;

            for r in results {
                attempts += r.attempts;
                passes += r.imin_passes;
                weight_sum += r.weight_sum;
                accepted += r.accepted.len() as u64;
                out.push(r.accepted);
            }

            if !probed && attempts >= PROBE_BATCHES * BATCH_PROPOSALS {
                probed = true;
                let projected = weight_sum / attempts as f64;
                if projected < MIN_PROJECTED_ACCEPTANCE {
                    return Err(Error::AbortTooSelective {
                        projected,
                        floor: MIN_PROJECTED_ACCEPTANCE,
                        probed: attempts,
                    });
                }
            }

            match target {
                Target::Accepted(s) => {
                    if accepted >= s as u64 {
                        break;
                    }
                }
                Target::Proposals(p) => {
                    if attempts >= p {
                        break;
                    }
                }
            }
        }
        Ok((out, attempts, passes, weight_sum))
    }

    /// Number of batches for the next round. Derived only from deterministic
    /// counters, so the batch schedule never depends on timing or threads.
    fn plan_round(
        &self,
        target: &Target,
        next_batch: u64,
        accepted: u64,
        attempts: u64,
        weight_sum: f64,
    ) -> u64 {
        match target {
            Target::Proposals(p) => {
                let remaining = p.saturating_sub(attempts);
                remaining.div_ceil(BATCH_PROPOSALS).min(MAX_BATCHES_PER_ROUND)
            }
            Target::Accepted(s) => {
                if next_batch == 0 {
                    return PROBE_BATCHES;
                }
                let remaining = (*s as u64).saturating_sub(accepted);
                if remaining == 0 {
                    return 0;
                }
                let q_hat = if accepted > 0 {
                    accepted as f64 / attempts as f64
                } else {
                    (weight_sum / attempts as f64).max(MIN_PROJECTED_ACCEPTANCE)
                };
                let projected = (remaining as f64 / q_hat * 1.15).ceil();
                let batches = (projected / BATCH_PROPOSALS as f64).ceil() as u64;
                batches.clamp(1, MAX_BATCHES_PER_ROUND)
            }
        }
    }

    fn run_batch(&self, batch: u64, len: u64) -> BatchOutcome {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(batch);

        let n = self.config.n_notes;
        let i_min = self.config.i_min;
        let beta = self.config.beta;
        let mut intervals = vec![0.0; n];
        let mut notes = vec![0.0; n + 1];
        let mut ci: Vec<f64> = Vec::with_capacity(n * (n - 1));

        let mut outcome = BatchOutcome {
            accepted: Vec::new(),
            attempts: 0,
            imin_passes: 0,
            weight_sum: 0.0,
        };

        for _ in 0..len {
            outcome.attempts += 1;
            sample_raw_scale_into(i_min, &mut rng, &mut intervals);
            let min = intervals.iter().cloned().fold(f64::MAX, f64::min);
            if min < i_min {
                continue;
            }
            outcome.imin_passes += 1;

            let accept = if beta == 0.0 {
                outcome.weight_sum += 1.0;
                true
            } else {
                let cost = self.engine.cost(&intervals, &mut notes, &mut ci);
                let w = acceptance_probability(cost, beta);
                outcome.weight_sum += w;
                if w >= 1.0 {
                    true
                } else {
                    rng.random::<f64>() < w
                }
            };
            if accept {
                outcome.accepted.push(intervals.clone());
            }
        }
        outcome
    }

    /// Computes the full cost record for every accepted scale. Models that do
    /// not define a window width score the record at the default w = 20; the
    /// HAR cost column uses this run's normalization constants when the model
    /// derived them, else the published ones for this scale size.
    fn attach_cost_records(&self, report: &mut GenerationReport) -> Result<()> {
        let record_w = if self.config.w > 0.0 { self.config.w } else { 20.0 };
        let tpl = match &self.engine.template {
            Some(t) if record_w == t.w() => t.clone(),
            _ => HarmonicityTemplate::build(record_w)?,
        };
        let (hmin, hmax) = self
            .har_norm_used
            .or_else(|| {
                params::paper_params(Model::Har, self.config.n_notes).map(|r| (r.hmin, r.hmax))
            })
            .unwrap_or((f64::NAN, f64::NAN));
        let trans_n = self.config.trans_n.max(1);
        let m = self.config.m;
        let n = self.config.n_notes;
        let rounding = self.config.trans_rounding;

        let records = map_indexed(
            self.config.parallelism,
            report.accepted.len(),
            |k| -> CostRecord {
                let ia = &report.accepted[k].adjacent_intervals;
                let ci = crate::scale::circular_intervals(ia);
                let hbar = costs::mean_harmonicity_of_intervals(&ci, &tpl, m);
                let fbar = costs::fifths_fraction_of_intervals(&ci, record_w);
                let TransCost { cost: trans, .. } = costs::cost_trans(ia, trans_n, rounding)
                    .unwrap_or(TransCost {
                        cost: f64::NAN,
                        gamma: f64::NAN,
                    });
                CostRecord {
                    trans,
                    hbar,
                    fbar,
                    har: if hmax > hmin {
                        cost_har(hbar, hmin, hmax)
                    } else {
                        f64::NAN
                    },
                    fif: match self.config.fif_cost {
                        FifCostVariant::Reciprocal => costs::cost_fif(fbar),
                        FifCostVariant::AltQuadratic => costs::cost_fif_alt(fbar, n),
                    },
                }
            },
        );
        for (s, r) in report.accepted.iter_mut().zip(records) {
            s.costs = Some(r);
        }
        Ok(())
    }
}

fn convention_q(model: Model, accepted: u64, passes: u64, attempts: u64) -> f64 {
    if model.is_biased() {
        ratio(accepted, passes)
    } else {
        ratio(accepted, attempts)
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Convenience wrapper: build a generator and run it.
pub fn generate_population(config: ModelConfig) -> Result<GenerationReport> {
    Generator::new(config)?.run()
}

/// Convenience wrapper around `Generator::measure_q`.
pub fn measure_q(config: ModelConfig, proposals: u64) -> Result<QReport> {
    Generator::new(config)?.measure_q(proposals)
}

/// HAR normalization constants for (N, I_min, w): the published table where
/// available, otherwise the sample range of Hbar over a MIN pilot run, which
/// is how the published constants were obtained.
pub fn resolve_har_norm(config: &ModelConfig) -> Result<(f64, f64)> {
    if let Some(row) = params::paper_params(Model::Har, config.n_notes) {
        if row.i_min == config.i_min && row.w == config.w {
            return Ok((row.hmin, row.hmax));
        }
    }
    min_pilot_har_norm(config.n_notes, config.i_min, config.w, config.m, config.seed)
}

/// Range of Hbar over a 10^4-scale MIN pilot.
pub fn min_pilot_har_norm(n: usize, i_min: f64, w: f64, m: f64, seed: u64) -> Result<(f64, f64)> {
    let mut pilot = ModelConfig::new(Model::Min, n, seed ^ 0x9e37_79b9_7f4a_7c15);
    pilot.i_min = i_min;
    pilot.target_accepted = 10_000;
    let tpl = HarmonicityTemplate::build(w)?;
    let report = Generator::new(pilot)?.run()?;
    let mut lo = f64::MAX;
    let mut hi = f64::MIN;
    for s in &report.accepted {
        let h = costs::scale_harmonicity(&s.adjacent_intervals, &tpl, m);
        lo = lo.min(h);
        hi = hi.max(h);
    }
    if !(hi > lo) {
        return Err(Error::DegenerateSample(
            "MIN pilot produced a degenerate Hbar range".into(),
        ));
    }
    Ok((lo, hi))
}
