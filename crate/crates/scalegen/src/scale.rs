//! Scale representation, cents arithmetic, circular interval expansion and
//! scale-similarity matching.
//!
//! A scale is a partition of the 1200-cent octave into `N` adjacent intervals.
//! Notes are measured in cents from the first note, so a scale with adjacent
//! intervals `[i_1, ..., i_N]` has notes `[0, i_1, i_1+i_2, ..., sum]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const OCTAVE_CENTS: f64 = 1200.0;

/// Default similarity tolerance in cents.
pub const SIMILARITY_TOLERANCE_CENTS: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SourceKind {
    Theory,
    Measured,
}

/// One empirical scale from the database.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScaleRecord {
    pub id: String,
    pub name: String,
    pub culture: String,
    pub region: String,
    pub source_kind: SourceKind,
    /// Steps between consecutive notes, in cents. All positive.
    pub adjacent_intervals: Vec<f64>,
    /// Cumulative sums prefixed by 0; `notes.len() == adjacent_intervals.len() + 1`.
    /// The last note is the scale's octave and may deviate from 1200 cents
    /// for measured scales.
    pub notes: Vec<f64>,
}

impl ScaleRecord {
    /// Number of adjacent intervals.
    pub fn n(&self) -> usize {
        self.adjacent_intervals.len()
    }

    pub fn octave(&self) -> f64 {
        *self.notes.last().expect("scales are nonempty")
    }
}

/// Per-scale cost values cached when a population is generated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostRecord {
    pub trans: f64,
    pub hbar: f64,
    pub fbar: f64,
    pub har: f64,
    pub fif: f64,
}

/// A model-generated scale. Adjacent intervals sum to 1200 cents.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratedScale {
    pub adjacent_intervals: Vec<f64>,
    pub costs: Option<CostRecord>,
}

impl GeneratedScale {
    pub fn new(adjacent_intervals: Vec<f64>) -> Self {
        GeneratedScale {
            adjacent_intervals,
            costs: None,
        }
    }

    pub fn n(&self) -> usize {
        self.adjacent_intervals.len()
    }

    pub fn notes(&self) -> Vec<f64> {
        notes_from_positive_intervals(&self.adjacent_intervals)
    }
}

/// Tolerance `e` for note-by-note scale comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityTolerance {
    pub e: f64,
}

impl Default for SimilarityTolerance {
    fn default() -> Self {
        SimilarityTolerance {
            e: SIMILARITY_TOLERANCE_CENTS,
        }
    }
}

impl SimilarityTolerance {
    pub fn new(e: f64) -> Result<Self> {
        if !(e >= 0.0) {
            return Err(Error::Input(format!("similarity tolerance must be >= 0, got {e}")));
        }
        Ok(SimilarityTolerance { e })
    }
}

/// Cumulative sums prefixed by 0. Errors on non-positive intervals.
pub fn notes_from_intervals(intervals: &[f64]) -> Result<Vec<f64>> {
    if intervals.is_empty() {
        return Err(Error::InvalidScale("empty interval list".into()));
    }
    for (k, &i) in intervals.iter().enumerate() {
        if !(i > 0.0) {
            return Err(Error::InvalidScale(format!(
                "interval {k} is {i}, expected > 0"
            )));
        }
    }
    Ok(notes_from_positive_intervals(intervals))
}

/// As `notes_from_intervals` but skips validation; for callers that already
/// hold a checked scale.
pub fn notes_from_positive_intervals(intervals: &[f64]) -> Vec<f64> {
    let mut notes = Vec::with_capacity(intervals.len() + 1);
    let mut acc = 0.0;
    notes.push(0.0);
    for &i in intervals {
        acc += i;
        notes.push(acc);
    }
    notes
}

/// Differences of consecutive notes; inverse of `notes_from_intervals`.
pub fn intervals_from_notes(notes: &[f64]) -> Vec<f64> {
    notes.windows(2).map(|w| w[1] - w[0]).collect()
}

/// All N(N-1) directed intervals between distinct scale degrees, wrapping past
/// the octave at 1200 cents. Flat list in (i, j) lexicographic order for
/// i = 0..N-1, j = i+1..i+N-1; unison and octave pairings are excluded.
pub fn circular_intervals(adjacent: &[f64]) -> Vec<f64> {
    let n = adjacent.len();
    let mut out = Vec::with_capacity(n.saturating_sub(1) * n);
    let notes = notes_from_positive_intervals(adjacent);
    circular_intervals_into(&notes, &mut out);
    out
}

/// Low-allocation variant: `notes` must be the cumulative-sum form
/// (length N+1, starting at 0). Appends to `out`.
pub fn circular_intervals_into(notes: &[f64], out: &mut Vec<f64>) {
    let n = notes.len() - 1;
    for i in 0..n {
        for j in (i + 1)..(i + n) {
            let nj = if j <= n {
                notes[j]
            } else {
                notes[j - n] + OCTAVE_CENTS
            };
            out.push(nj - notes[i]);
        }
    }
}

/// Note-by-note comparison with tolerance `e`; scales of different length are
/// never similar. Both slices are full note vectors and include the octave
/// note, so a database scale whose octave deviates from 1200 cents by more
/// than `e` can never match a generated scale.
pub fn scales_similar(a: &[f64], b: &[f64], tol: SimilarityTolerance) -> bool {
    if a.len() != b.len() {
        return false;
    }
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol.e)
}
