//! Cost functions for the generative models: harmonicity template and score,
//! imperfect-fifths fraction, compressibility, and the analytic cost-function
//! family used by the acceptance studies.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scale::{circular_intervals, OCTAVE_CENTS};

/// Perfect-fifth reference used by the fifths window, in cents.
pub const FIFTH_CENTS: f64 = 702.0;

/// Largest denominator enumerated when building the harmonicity template.
/// Scores decay as 1/(x*y), so ratios beyond this never win a window against
/// established low-integer ratios at any window width w <= 100.
pub const TEMPLATE_MAX_DENOMINATOR: u32 = 64;

/// Harmonic similarity score of a reduced fraction x/y: (x + y - 1)/(x*y) * 100.
pub fn harmonic_score(x: u32, y: u32) -> Result<f64> {
    if y < 1 || x < y {
        return Err(Error::InvalidRatio {
            x,
            y,
            reason: "need x >= y >= 1",
        });
    }
    if gcd(x, y) != 1 {
        return Err(Error::InvalidRatio {
            x,
            y,
            reason: "not coprime",
        });
    }
    Ok((x as f64 + y as f64 - 1.0) / (x as f64 * y as f64) * 100.0)
}

fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// One window of attraction: any interval inside `[lo, hi]` is allocated to
/// this ratio and receives its score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioWindow {
    pub numerator: u32,
    pub denominator: u32,
    pub center: f64,
    pub score: f64,
    pub lo: f64,
    pub hi: f64,
}

/// Harmonicity template: a grid of non-overlapping windows of maximum width
/// `w`, centred on the ratios with the largest harmonic scores. An interval is
/// allocated to the highest-scoring ratio within w/2 cents; regions claimed by
/// no window score 0.
#[derive(Debug, Clone)]
pub struct HarmonicityTemplate {
    w: f64,
    windows: Vec<RatioWindow>,
    /// Candidate ratios sorted by cents; used for exact boundary queries.
    centers: Vec<RatioEntry>,
    /// Step-function form of the template for fast lookup. `seg_score[k]` is
    /// the score on `(breaks[k], breaks[k+1])`; values exactly at
    /// breakpoints fall back to the direct rule.
    breaks: Vec<f64>,
    seg_score: Vec<f64>,
    seg_window: Vec<i32>,
}

#[derive(Debug, Clone, Copy)]
struct RatioEntry {
    cents: f64,
    score: f64,
    xy: u64,
    x: u32,
    y: u32,
}

impl HarmonicityTemplate {
    pub fn build(w: f64) -> Result<Self> {
        if !(w > 0.0 && w <= 100.0) {
            return Err(Error::Input(format!(
                "template window width must be in (0, 100], got {w}"
            )));
        }

        // All coprime x/y with 1 <= x/y <= 2 and y <= 64 (includes 1/1 and 2/1).
        let mut ratios = Vec::new();
        for y in 1..=TEMPLATE_MAX_DENOMINATOR {
            for x in y..=(2 * y) {
                if gcd(x, y) != 1 {
                    continue;
                }
                ratios.push(RatioEntry {
                    cents: OCTAVE_CENTS * (x as f64 / y as f64).log2(),
                    score: (x as f64 + y as f64 - 1.0) / (x as f64 * y as f64) * 100.0,
                    xy: x as u64 * y as u64,
                    x,
                    y,
                });
            }
        }
        // Greedy placement order: descending score, ties to the simpler ratio,
        // then to the lower cents value.
        let mut by_priority = ratios.clone();
        by_priority.sort_by(|a, b| {
            b.score
                .total_cmp(&a.score)
                .then(a.xy.cmp(&b.xy))
                .then(a.cents.total_cmp(&b.cents))
        });

        // Each ratio claims [c - w/2, c + w/2] truncated by every
        // higher-priority range. Subtracted ranges are full width w, so the
        // remaining claim is a single (possibly empty) interval.
        let half = w / 2.0;
        let mut windows = Vec::new();
        for (k, r) in by_priority.iter().enumerate() {
            let mut lo = r.cents - half;
            let mut hi = r.cents + half;
            for p in &by_priority[..k] {
                if p.cents < r.cents {
                    lo = lo.max(p.cents + half);
                } else {
                    hi = hi.min(p.cents - half);
                }
            }
            if lo <= hi {
                windows.push(RatioWindow {
                    numerator: r.x,
                    denominator: r.y,
                    center: r.cents,
                    score: r.score,
                    lo,
                    hi,
                });
            }
        }
        windows.sort_by(|a, b| a.center.total_cmp(&b.center));

        let mut centers = ratios;
        centers.sort_by(|a, b| a.cents.total_cmp(&b.cents));

        let mut tpl = HarmonicityTemplate {
            w,
            windows,
            centers,
            breaks: Vec::new(),
            seg_score: Vec::new(),
            seg_window: Vec::new(),
        };
        tpl.build_step_function();
        Ok(tpl)
    }

    fn build_step_function(&mut self) {
        let mut breaks: Vec<f64> = vec![0.0, OCTAVE_CENTS];
        for win in &self.windows {
            if win.lo > 0.0 && win.lo < OCTAVE_CENTS {
                breaks.push(win.lo);
            }
            if win.hi > 0.0 && win.hi < OCTAVE_CENTS {
                breaks.push(win.hi);
            }
        }
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();

        let mut seg_score = Vec::with_capacity(breaks.len().saturating_sub(1));
        let mut seg_window = Vec::with_capacity(breaks.len().saturating_sub(1));
        for pair in breaks.windows(2) {
            let mid = 0.5 * (pair[0] + pair[1]);
            match self.allocate(mid) {
                Some(i) => {
                    seg_score.push(self.windows[i].score);
                    seg_window.push(i as i32);
                }
                None => {
                    seg_score.push(0.0);
                    seg_window.push(-1);
                }
            }
        }
        self.breaks = breaks;
        self.seg_score = seg_score;
        self.seg_window = seg_window;
    }

    /// Direct allocation rule: the highest-scoring ratio within w/2 cents.
    /// Returns an index into `windows`, or None when no ratio is in reach.
    fn allocate(&self, cents: f64) -> Option<usize> {
        let half = self.w / 2.0;
        let lo = self
            .centers
            .partition_point(|r| r.cents < cents - half);
        let hi = self
            .centers
            .partition_point(|r| r.cents <= cents + half);
        let mut best: Option<RatioEntry> = None;
        for r in &self.centers[lo..hi] {
            let better = match &best {
                None => true,
                Some(b) => {
                    r.score > b.score
                        || (r.score == b.score
                            && (r.xy < b.xy || (r.xy == b.xy && r.cents < b.cents)))
                }
            };
            if better {
                best = Some(*r);
            }
        }
        let b = best?;
        self.windows
            .iter()
            .position(|w| w.numerator == b.x && w.denominator == b.y)
    }

    /// Score of an interval in cents. Zero for intervals outside every window
    /// (including anything outside [0, 1200]).
    #[inline]
    pub fn score(&self, cents: f64) -> f64 {
        if !(0.0..=OCTAVE_CENTS).contains(&cents) {
            return 0.0;
        }
        let k = self.breaks.partition_point(|&b| b < cents);
        // cents exactly on a breakpoint: resolve by the direct rule.
        if k < self.breaks.len() && self.breaks[k] == cents {
            return match self.allocate(cents) {
                Some(i) => self.windows[i].score,
                None => 0.0,
            };
        }
        debug_assert!(k > 0);
        self.seg_score[k - 1]
    }

    /// Which window an interval is allocated to, if any.
    pub fn window_index(&self, cents: f64) -> Option<usize> {
        if !(0.0..=OCTAVE_CENTS).contains(&cents) {
            return None;
        }
        let k = self.breaks.partition_point(|&b| b < cents);
        if k < self.breaks.len() && self.breaks[k] == cents {
            return self.allocate(cents);
        }
        match self.seg_window[k - 1] {
            -1 => None,
            i => Some(i as usize),
        }
    }

    pub fn windows(&self) -> &[RatioWindow] {
        &self.windows
    }

    pub fn w(&self) -> f64 {
        self.w
    }
}

/// Average harmonicity score over all N(N-1) circular intervals:
/// sum of H(I)^m / 100^(m-1), divided by N(N-1). With m = 1 this is the plain
/// mean of the template scores; larger m sharpens the template towards its
/// top windows.
pub fn scale_harmonicity(adjacent: &[f64], template: &HarmonicityTemplate, m: f64) -> f64 {
    let ci = circular_intervals(adjacent);
    mean_harmonicity_of_intervals(&ci, template, m)
}

/// As `scale_harmonicity` but over a precomputed circular-interval list.
pub fn mean_harmonicity_of_intervals(
    intervals: &[f64],
    template: &HarmonicityTemplate,
    m: f64,
) -> f64 {
    if intervals.is_empty() {
        return 0.0;
    }
    let mut sum = 0.0;
    if m == 1.0 {
        for &i in intervals {
            sum += template.score(i);
        }
    } else {
        let norm = 100f64.powf(m - 1.0);
        for &i in intervals {
            sum += template.score(i).powf(m) / norm;
        }
    }
    sum / intervals.len() as f64
}

/// HAR cost: 1 - (Hbar - Hmin)/(Hmax - Hmin). Deliberately not clamped;
/// negative costs simply saturate the Boltzmann acceptance at 1.
pub fn cost_har(hbar: f64, hmin: f64, hmax: f64) -> f64 {
    debug_assert!(hmax > hmin);
    1.0 - (hbar - hmin) / (hmax - hmin)
}

/// Fraction of circular intervals within w/2 cents of a 702-cent fifth.
pub fn fifths_fraction(adjacent: &[f64], w: f64) -> f64 {
    let ci = circular_intervals(adjacent);
    fifths_fraction_of_intervals(&ci, w)
}

pub fn fifths_fraction_of_intervals(intervals: &[f64], w: f64) -> f64 {
    if intervals.is_empty() {
        return 0.0;
    }
    let half = w / 2.0;
    let hits = intervals
        .iter()
        .filter(|&&i| (i - FIFTH_CENTS).abs() <= half)
        .count();
    hits as f64 / intervals.len() as f64
}

/// FIF cost of the main model: 1/(1 + Fbar).
pub fn cost_fif(fbar: f64) -> f64 {
    1.0 / (1.0 + fbar)
}

/// Alternative FIF cost, normalized so 0 <= C <= 1 at Fbar = 1/N:
/// 1 - (N * Fbar)^2.
pub fn cost_fif_alt(fbar: f64, n: usize) -> f64 {
    let x = n as f64 * fbar;
    1.0 - x * x
}

/// How deviations from the compressible template are rounded in Eq-style
/// compressibility. `Ceiling` is the verbatim form; `Nearest` rounds to the
/// closest integer multiple instead.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Rounding {
    #[default]
    Ceiling,
    Nearest,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransCost {
    pub cost: f64,
    pub gamma: f64,
}

/// Compressibility cost: minimize over gamma in [min(I)/2, 3*min(I)/2] the
/// mean n-th power deviation of I_i/gamma from its rounded integer.
///
/// In ceiling mode the objective is piecewise increasing in gamma between the
/// integer crossings gamma = I_i/k, so the global minimum is attained at one
/// of those crossings or at the lower range bound. We evaluate exactly that
/// candidate set. Ties prefer the larger gamma (the coarser template).
pub fn cost_trans(adjacent: &[f64], n: u32, rounding: Rounding) -> Result<TransCost> {
    if adjacent.is_empty() {
        return Err(Error::InvalidScale("empty interval list".into()));
    }
    if n < 1 {
        return Err(Error::Input("compressibility exponent must be >= 1".into()));
    }
    let min = adjacent.iter().cloned().fold(f64::MAX, f64::min);
    if !(min > 0.0) {
        return Err(Error::InvalidScale(format!(
            "intervals must be positive, min is {min}"
        )));
    }
    let lo = min / 2.0;
    let hi = 1.5 * min;
    match rounding {
        Rounding::Ceiling => {
            let mut best = TransCost {
                cost: f64::MAX,
                gamma: lo,
            };
            let mut consider = |gamma: f64| {
                let c = trans_objective(adjacent, gamma, n, rounding);
                if c < best.cost - 1e-12 || (c < best.cost + 1e-12 && gamma > best.gamma) {
                    best = TransCost { cost: c, gamma };
                }
            };
            consider(lo);
            consider(hi);
            for &i in adjacent {
                let k_lo = (i / hi).ceil().max(1.0) as u64;
                let k_hi = (i / lo).floor() as u64;
                for k in k_lo..=k_hi {
                    let gamma = i / k as f64;
                    if gamma >= lo && gamma <= hi {
                        consider(gamma);
                    }
                }
            }
            Ok(best)
        }
        Rounding::Nearest => {
            // Interior minima are possible here; grid scan plus golden-section
            // refinement of the best bracket.
            let step = 0.02f64.min((hi - lo) / 64.0);
            let mut best_g = lo;
            let mut best_c = f64::MAX;
            let mut g = lo;
            while g <= hi {
                let c = trans_objective(adjacent, g, n, rounding);
                if c < best_c {
                    best_c = c;
                    best_g = g;
                }
                g += step;
            }
            let (a, b) = ((best_g - step).max(lo), (best_g + step).min(hi));
            let g = golden_section(a, b, 1e-10, |g| trans_objective(adjacent, g, n, rounding));
            let c = trans_objective(adjacent, g, n, rounding);
            if c <= best_c {
                Ok(TransCost { cost: c, gamma: g })
            } else {
                Ok(TransCost {
                    cost: best_c,
                    gamma: best_g,
                })
            }
        }
    }
}

fn trans_objective(adjacent: &[f64], gamma: f64, n: u32, rounding: Rounding) -> f64 {
    let mut sum = 0.0;
    for &i in adjacent {
        let r = i / gamma;
        let dev = match rounding {
            Rounding::Ceiling => (r.ceil() - r).abs(),
            Rounding::Nearest => (r.round() - r).abs(),
        };
        sum += dev.powi(n as i32);
    }
    sum / adjacent.len() as f64
}

fn golden_section(mut a: f64, mut b: f64, tol: f64, f: impl Fn(f64) -> f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - (b - a) * INV_PHI;
    let mut d = a + (b - a) * INV_PHI;
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - (b - a) * INV_PHI;
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (b - a) * INV_PHI;
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// The analytic cost-function family for acceptance/selectivity studies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CostFamily {
    /// 1 - Hbar/A
    C1 { a: f64 },
    /// 1/(A + Hbar)
    C2 { a: f64 },
    /// 1 - (Hbar/A)^m
    C3 { a: f64, m: f64 },
    /// 1/(A + Hbar)^m
    C4 { a: f64, m: f64 },
}

impl CostFamily {
    pub fn cost(&self, hbar: f64) -> Result<f64> {
        match *self {
            CostFamily::C1 { a } => Ok(1.0 - hbar / a),
            CostFamily::C2 { a } => {
                if a + hbar == 0.0 {
                    Err(Error::DivisionByZero("C2 with A + Hbar = 0".into()))
                } else {
                    Ok(1.0 / (a + hbar))
                }
            }
            CostFamily::C3 { a, m } => Ok(1.0 - (hbar / a).powf(m)),
            CostFamily::C4 { a, m } => {
                if a + hbar == 0.0 {
                    Err(Error::DivisionByZero("C4 with A + Hbar = 0".into()))
                } else {
                    Ok(1.0 / (a + hbar).powf(m))
                }
            }
        }
    }
}

/// Parameters shared by the cost functions of one model configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    pub w: f64,
    pub n: u32,
    pub m: f64,
    pub hmin: f64,
    pub hmax: f64,
    pub family: Option<CostFamily>,
}

impl CostParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.w > 0.0) {
            return Err(Error::Input(format!("w must be > 0, got {}", self.w)));
        }
        if self.hmax <= self.hmin {
            return Err(Error::Input(format!(
                "need Hmax > Hmin, got {} <= {}",
                self.hmax, self.hmin
            )));
        }
        Ok(())
    }
}
