//! Database ingestion and export.
//!
//! The canonical database format is a UTF-8, comma-delimited CSV with a
//! header row:
//!
//! ```text
//! id,name,culture,region,source_kind,tuning,value_kind,values,flags,excluded_reason
//! ```
//!
//! `value_kind` is one of `cents_intervals`, `cents_notes`, `frequency_ratios`;
//! `values` is a semicolon-separated list (frequency ratios may be written as
//! fractions, e.g. `3/2`); `flags` is a semicolon-separated subset of
//! `infer_tonic` and `append_octave`. Rows with a nonempty `excluded_reason`
//! are dropped by the loader.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scale::{
    notes_from_positive_intervals, GeneratedScale, ScaleRecord, SourceKind, OCTAVE_CENTS,
};
use crate::stats::DistributionEstimate;

/// Notes above `octave + this` are treated as reaching beyond the octave and
/// dropped. Matches the 50-cent octave tolerance of the tonic inference rule,
/// and keeps measured scales whose final note misses 1200 by a few cents.
pub const OCTAVE_SLACK_CENTS: f64 = 50.0;

/// Scales outside this note-count range are rejected at ingestion.
pub const MIN_NOTES: usize = 4;
pub const MAX_NOTES: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueKind {
    CentsIntervals,
    CentsNotes,
    FrequencyRatios,
}

impl ValueKind {
    fn parse(s: &str) -> Option<ValueKind> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cents_intervals" | "intervals" => Some(ValueKind::CentsIntervals),
            "cents_notes" | "notes" => Some(ValueKind::CentsNotes),
            "frequency_ratios" | "ratios" => Some(ValueKind::FrequencyRatios),
            _ => None,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            ValueKind::CentsIntervals => "cents_intervals",
            ValueKind::CentsNotes => "cents_notes",
            ValueKind::FrequencyRatios => "frequency_ratios",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RowFlags {
    pub infer_tonic: bool,
    pub append_octave: bool,
}

#[derive(Debug, Clone)]
pub struct RawScaleRow {
    pub id: String,
    pub name: String,
    pub culture: String,
    pub region: String,
    pub source_kind: SourceKind,
    pub tuning: String,
    pub value_kind: ValueKind,
    pub values: Vec<f64>,
    pub flags: RowFlags,
    pub excluded_reason: Option<String>,
    pub line: usize,
}

#[derive(Debug, Clone)]
pub struct ParseIssue {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Default)]
pub struct ParseReport {
    pub rows: Vec<RawScaleRow>,
    pub errors: Vec<ParseIssue>,
}

/// Parses the canonical CSV. In lenient mode malformed rows are collected
/// into the error report and skipped; in strict mode the first malformed row
/// aborts the parse.
pub fn parse_database(path: &Path, strict: bool) -> Result<ParseReport> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let required = [
        "id",
        "name",
        "culture",
        "region",
        "source_kind",
        "tuning",
        "value_kind",
        "values",
    ];
    let mut cols = Vec::new();
    for name in required {
        match col(name) {
            Some(i) => cols.push(i),
            None => {
                return Err(Error::Parse {
                    line: 1,
                    message: format!("missing required column `{name}`"),
                })
            }
        }
    }
    let flags_col = col("flags");
    let excluded_col = col("excluded_reason");

    let mut report = ParseReport::default();
    for (k, record) in reader.records().enumerate() {
        let line = k + 2; // header is line 1
        let parsed = record
            .map_err(|e| Error::Parse {
                line,
                message: e.to_string(),
            })
            .and_then(|rec| parse_row(&rec, &cols, flags_col, excluded_col, line));
        match parsed {
            Ok(row) => report.rows.push(row),
            Err(e) => {
                if strict {
                    return Err(e);
                }
                report.errors.push(ParseIssue {
                    line,
                    message: e.to_string(),
                });
            }
        }
    }
    Ok(report)
}

fn parse_row(
    rec: &csv::StringRecord,
    cols: &[usize],
    flags_col: Option<usize>,
    excluded_col: Option<usize>,
    line: usize,
) -> Result<RawScaleRow> {
    let get = |i: usize| rec.get(cols[i]).unwrap_or("").to_string();
    let source_kind = match get(4).to_ascii_lowercase().as_str() {
        "theory" => SourceKind::Theory,
        "measured" => SourceKind::Measured,
        other => {
            return Err(Error::Parse {
                line,
                message: format!("unknown source_kind `{other}`"),
            })
        }
    };
    let value_kind = ValueKind::parse(&get(6)).ok_or_else(|| Error::Parse {
        line,
        message: format!("unknown value_kind `{}`", get(6)),
    })?;
    let mut values = Vec::new();
    for token in get(7).split(';') {
        let token = token.trim();
        if token.is_empty() {
            continue;
        }
        values.push(parse_value(token).ok_or_else(|| Error::Parse {
            line,
            message: format!("cannot parse value `{token}`"),
        })?);
    }
    if values.is_empty() {
        return Err(Error::Parse {
            line,
            message: "empty values list".into(),
        });
    }
    let mut flags = RowFlags::default();
    if let Some(fc) = flags_col {
        for token in rec.get(fc).unwrap_or("").split(';') {
            match token.trim() {
                "" => {}
                "infer_tonic" => flags.infer_tonic = true,
                "append_octave" => flags.append_octave = true,
                other => {
                    return Err(Error::Parse {
                        line,
                        message: format!("unknown flag `{other}`"),
                    })
                }
            }
        }
    }
    let excluded_reason = excluded_col
        .and_then(|c| rec.get(c))
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from);
    Ok(RawScaleRow {
        id: get(0),
        name: get(1),
        culture: get(2),
        region: get(3),
        source_kind,
        tuning: get(5),
        value_kind,
        values,
        flags,
        excluded_reason,
        line,
    })
}

/// Numeric token, or a fraction like `9/8`.
fn parse_value(token: &str) -> Option<f64> {
    if let Some((num, den)) = token.split_once('/') {
        let n: f64 = num.trim().parse().ok()?;
        let d: f64 = den.trim().parse().ok()?;
        if d == 0.0 {
            return None;
        }
        return Some(n / d);
    }
    token.parse().ok()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum RejectReason {
    TooFewNotes,
    TooManyNotes,
    NoValidTonic,
    NonPositiveInterval,
    Excluded(String),
}

#[derive(Debug, Clone, Serialize)]
pub struct Rejection {
    pub id: String,
    pub line: usize,
    pub reason: RejectReason,
}

/// Normalizes a parsed row into a `ScaleRecord`, applying the inclusion
/// criteria: conversion to cents notes, tonic inference, truncation above the
/// octave, octave completion, and the 4..=9 note-count filter.
pub fn normalize(row: &RawScaleRow) -> std::result::Result<ScaleRecord, Rejection> {
    let reject = |reason| {
        Err(Rejection {
            id: row.id.clone(),
            line: row.line,
            reason,
        })
    };
    if let Some(r) = &row.excluded_reason {
        return reject(RejectReason::Excluded(r.clone()));
    }

    // To cents notes anchored at 0.
    let mut notes: Vec<f64> = match row.value_kind {
        ValueKind::CentsIntervals => {
            if row.values.iter().any(|&v| !(v > 0.0)) {
                return reject(RejectReason::NonPositiveInterval);
            }
            notes_from_positive_intervals(&row.values)
        }
        ValueKind::CentsNotes => {
            let first = row.values[0];
            row.values.iter().map(|v| v - first).collect()
        }
        ValueKind::FrequencyRatios => {
            let first = row.values[0];
            if !(first > 0.0) || row.values.iter().any(|&v| !(v > 0.0)) {
                return reject(RejectReason::NonPositiveInterval);
            }
            row.values
                .iter()
                .map(|v| OCTAVE_CENTS * (v / first).log2())
                .collect()
        }
    };

    if row.flags.infer_tonic {
        notes = match infer_tonic(&notes) {
            Some(n) => n,
            None => return reject(RejectReason::NoValidTonic),
        };
    }

    // Drop notes reaching beyond the octave.
    notes.retain(|&n| n <= OCTAVE_CENTS + OCTAVE_SLACK_CENTS);

    if row.flags.append_octave {
        if let Some(&last) = notes.last() {
            if last < OCTAVE_CENTS {
                notes.push(OCTAVE_CENTS);
            }
        }
    }

    if notes.windows(2).any(|w| !(w[1] > w[0])) {
        return reject(RejectReason::NonPositiveInterval);
    }
    let n = notes.len().saturating_sub(1);
    if n < MIN_NOTES {
        return reject(RejectReason::TooFewNotes);
    }
    if n > MAX_NOTES {
        return reject(RejectReason::TooManyNotes);
    }

    let adjacent: Vec<f64> = notes.windows(2).map(|w| w[1] - w[0]).collect();
    Ok(ScaleRecord {
        id: row.id.clone(),
        name: row.name.clone(),
        culture: row.culture.clone(),
        region: row.region.clone(),
        source_kind: row.source_kind,
        adjacent_intervals: adjacent,
        notes,
    })
}

/// Tonic inference: the first note from which some consecutive run of
/// intervals sums to within 50 cents of an octave. The scale becomes that
/// run, rebased to start at 0; the earliest qualifying start index wins, and
/// for it the shortest qualifying run.
fn infer_tonic(notes: &[f64]) -> Option<Vec<f64>> {
    for s in 0..notes.len().saturating_sub(1) {
        for t in (s + 1)..notes.len() {
            let span = notes[t] - notes[s];
            if (span - OCTAVE_CENTS).abs() <= OCTAVE_SLACK_CENTS {
                return Some(notes[s..=t].iter().map(|n| n - notes[s]).collect());
            }
            if span > OCTAVE_CENTS + OCTAVE_SLACK_CENTS {
                break;
            }
        }
    }
    None
}

/// Within each culture, scales whose notes all match an earlier record within
/// `tol` cents are dropped; the first occurrence in file order is kept.
pub fn dedupe(records: Vec<ScaleRecord>, tol: f64) -> Vec<ScaleRecord> {
    let mut kept: Vec<ScaleRecord> = Vec::with_capacity(records.len());
    for rec in records {
        let dup = kept.iter().any(|k| {
            k.culture == rec.culture
                && k.notes.len() == rec.notes.len()
                && k.notes
                    .iter()
                    .zip(&rec.notes)
                    .all(|(a, b)| (a - b).abs() <= tol)
        });
        if !dup {
            kept.push(rec);
        }
    }
    kept
}

#[derive(Debug, Default, Serialize)]
pub struct IngestSummary {
    pub parsed: usize,
    pub parse_errors: usize,
    pub rejected: usize,
    pub deduplicated: usize,
    pub loaded: usize,
}

#[derive(Debug, Default)]
pub struct IngestReport {
    pub summary: IngestSummary,
    pub parse_errors: Vec<ParseIssue>,
    pub rejections: Vec<Rejection>,
}

/// Full ingestion pipeline: parse, normalize, dedupe at 1 cent.
pub fn load_database(path: &Path) -> Result<(Vec<ScaleRecord>, IngestReport)> {
    let parsed = parse_database(path, false)?;
    let mut report = IngestReport {
        summary: IngestSummary {
            parsed: parsed.rows.len(),
            parse_errors: parsed.errors.len(),
            ..Default::default()
        },
        parse_errors: parsed.errors,
        rejections: Vec::new(),
    };
    let mut records = Vec::with_capacity(parsed.rows.len());
    for row in &parsed.rows {
        match normalize(row) {
            Ok(rec) => records.push(rec),
            Err(rej) => report.rejections.push(rej),
        }
    }
    report.summary.rejected = report.rejections.len();
    let before = records.len();
    let records = dedupe(records, 1.0);
    report.summary.deduplicated = before - records.len();
    report.summary.loaded = records.len();
    Ok((records, report))
}

// ---------------------------------------------------------------------------
// Writers. All CSV output uses a deterministic column order and LF endings;
// cents values carry 3 decimals.

fn writer(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

pub fn write_database_csv(records: &[ScaleRecord], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    writeln!(
        w,
        "id,name,culture,region,source_kind,tuning,value_kind,values,flags,excluded_reason"
    )?;
    for r in records {
        let values = r
            .adjacent_intervals
            .iter()
            .map(|v| format!("{v:.3}"))
            .collect::<Vec<_>>()
            .join(";");
        let kind = match r.source_kind {
            SourceKind::Theory => "theory",
            SourceKind::Measured => "measured",
        };
        writeln!(
            w,
            "{},{},{},{},{},,{},{},,",
            csv_field(&r.id),
            csv_field(&r.name),
            csv_field(&r.culture),
            csv_field(&r.region),
            kind,
            ValueKind::CentsIntervals.as_str(),
            values
        )?;
    }
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn write_population_csv(scales: &[GeneratedScale], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    writeln!(w, "n,intervals,cost_trans,hbar,fbar,cost_har,cost_fif")?;
    for s in scales {
        let intervals = s
            .adjacent_intervals
            .iter()
            .map(|v| format!("{v:.3}"))
            .collect::<Vec<_>>()
            .join(";");
        match &s.costs {
            Some(c) => writeln!(
                w,
                "{},{},{:.9},{:.6},{:.6},{:.6},{:.6}",
                s.n(),
                intervals,
                c.trans,
                c.hbar,
                c.fbar,
                c.har,
                c.fif
            )?,
            None => writeln!(w, "{},{},,,,,", s.n(), intervals)?,
        }
    }
    Ok(())
}

/// Reads a population CSV back; cost columns are optional.
pub fn read_population_csv(path: &Path) -> Result<Vec<GeneratedScale>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut out = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let line = k + 2;
        let rec = record?;
        let intervals_field = rec.get(1).unwrap_or("");
        let mut intervals = Vec::new();
        for token in intervals_field.split(';') {
            let v: f64 = token.trim().parse().map_err(|_| Error::Parse {
                line,
                message: format!("bad interval `{token}`"),
            })?;
            intervals.push(v);
        }
        let n: usize = rec
            .get(0)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Parse {
                line,
                message: "bad scale size".into(),
            })?;
        if intervals.len() != n {
            return Err(Error::Parse {
                line,
                message: format!("row says n={n} but lists {} intervals", intervals.len()),
            });
        }
        let mut scale = GeneratedScale::new(intervals);
        let costs: Vec<Option<f64>> = (2..7)
            .map(|i| rec.get(i).and_then(|s| s.parse().ok()))
            .collect();
        if let [Some(trans), Some(hbar), Some(fbar), Some(har), Some(fif)] = costs[..] {
            scale.costs = Some(crate::scale::CostRecord {
                trans,
                hbar,
                fbar,
                har,
                fif,
            });
        }
        out.push(scale);
    }
    Ok(out)
}

pub fn write_template_csv(tpl: &crate::costs::HarmonicityTemplate, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    writeln!(w, "ratio_x,ratio_y,center_cents,score,lo_cents,hi_cents")?;
    for win in tpl.windows() {
        writeln!(
            w,
            "{},{},{:.6},{:.6},{:.6},{:.6}",
            win.numerator, win.denominator, win.center, win.score, win.lo, win.hi
        )?;
    }
    Ok(())
}

pub fn write_distribution_csv(est: &DistributionEstimate, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    writeln!(w, "grid_cents,mass")?;
    for (g, m) in est.grid.iter().zip(&est.mass) {
        writeln!(w, "{g:.6},{m:.12}")?;
    }
    Ok(())
}

pub fn write_rows_csv(header: &str, rows: &[String], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    writeln!(w, "{header}")?;
    for r in rows {
        writeln!(w, "{r}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(kind: ValueKind, values: Vec<f64>, flags: RowFlags) -> RawScaleRow {
        RawScaleRow {
            id: "t1".into(),
            name: "test".into(),
            culture: "c".into(),
            region: "r".into(),
            source_kind: SourceKind::Theory,
            tuning: String::new(),
            value_kind: kind,
            values,
            flags,
            excluded_reason: None,
            line: 2,
        }
    }

    #[test]
    fn frequency_ratios_to_cents() {
        let ji = row(
            ValueKind::FrequencyRatios,
            vec![1.0, 9.0 / 8.0, 5.0 / 4.0, 4.0 / 3.0, 3.0 / 2.0, 5.0 / 3.0, 15.0 / 8.0, 2.0],
            RowFlags::default(),
        );
        let rec = normalize(&ji).unwrap();
        assert_eq!(rec.n(), 7);
        assert!((rec.notes[1] - 203.910).abs() < 1e-3);
        assert!((rec.octave() - 1200.0).abs() < 1e-9);
    }

    #[test]
    fn too_few_notes_rejected() {
        let r = row(
            ValueKind::CentsIntervals,
            vec![400.0, 400.0, 400.0],
            RowFlags::default(),
        );
        let rej = normalize(&r).unwrap_err();
        assert_eq!(rej.reason, RejectReason::TooFewNotes);
    }

    #[test]
    fn notes_beyond_octave_dropped_before_count() {
        // 9 intervals, but two notes reach beyond 1250 and are dropped,
        // leaving a 7-note scale.
        let notes: Vec<f64> = vec![0.0, 200.0, 400.0, 500.0, 700.0, 900.0, 1100.0, 1200.0, 1300.0, 1400.0];
        let r = row(ValueKind::CentsNotes, notes, RowFlags::default());
        let rec = normalize(&r).unwrap();
        assert_eq!(rec.n(), 7);
        assert_eq!(rec.octave(), 1200.0);
    }

    #[test]
    fn octave_deviation_within_slack_kept() {
        let notes: Vec<f64> = vec![0.0, 200.0, 400.0, 500.0, 700.0, 900.0, 1100.0, 1215.0];
        let r = row(ValueKind::CentsNotes, notes, RowFlags::default());
        let rec = normalize(&r).unwrap();
        assert_eq!(rec.octave(), 1215.0);
    }

    #[test]
    fn append_octave_completes_scale() {
        let r = row(
            ValueKind::CentsIntervals,
            vec![300.0, 290.0, 280.0, 290.0],
            RowFlags {
                append_octave: true,
                ..Default::default()
            },
        );
        let rec = normalize(&r).unwrap();
        assert_eq!(rec.n(), 5);
        let last = rec.adjacent_intervals.last().unwrap();
        assert!((last - 40.0).abs() < 1e-9);
        assert_eq!(rec.octave(), 1200.0);
    }

    #[test]
    fn tonic_inference_picks_earliest_window() {
        // Notes: junk prefix, then a clean octave starting at index 1.
        let notes = vec![0.0, 150.0, 450.0, 750.0, 1050.0, 1150.0, 1360.0, 1500.0];
        let r = row(
            ValueKind::CentsNotes,
            notes,
            RowFlags {
                infer_tonic: true,
                ..Default::default()
            },
        );
        let rec = normalize(&r).unwrap();
        // Earliest start is index 0: 0 -> 1150 is within 50 of the octave.
        assert_eq!(rec.notes[0], 0.0);
        assert_eq!(rec.octave(), 1150.0);
        assert_eq!(rec.n(), 5);
    }

    #[test]
    fn no_tonic_rejected() {
        let notes = vec![0.0, 100.0, 200.0, 300.0];
        let r = row(
            ValueKind::CentsNotes,
            notes,
            RowFlags {
                infer_tonic: true,
                ..Default::default()
            },
        );
        assert_eq!(normalize(&r).unwrap_err().reason, RejectReason::NoValidTonic);
    }

    #[test]
    fn normalize_is_idempotent() {
        let r = row(
            ValueKind::CentsIntervals,
            vec![200.0, 200.0, 100.0, 200.0, 200.0, 200.0, 100.0],
            RowFlags::default(),
        );
        let rec1 = normalize(&r).unwrap();
        let again = row(
            ValueKind::CentsIntervals,
            rec1.adjacent_intervals.clone(),
            RowFlags::default(),
        );
        let rec2 = normalize(&again).unwrap();
        assert_eq!(rec1.adjacent_intervals, rec2.adjacent_intervals);
        assert_eq!(rec1.notes, rec2.notes);
    }

    #[test]
    fn dedupe_scopes_to_culture() {
        let mk = |id: &str, culture: &str, first: f64| ScaleRecord {
            id: id.into(),
            name: id.into(),
            culture: culture.into(),
            region: "r".into(),
            source_kind: SourceKind::Theory,
            adjacent_intervals: vec![first, 300.0, 300.0, 600.0 - first],
            notes: notes_from_positive_intervals(&[first, 300.0, 300.0, 600.0 - first]),
        };
        let records = vec![
            mk("a", "x", 300.0),
            mk("b", "x", 300.0),      // identical, same culture: dropped
            mk("c", "y", 300.0),      // identical, other culture: kept
            mk("d", "x", 301.5),      // 1.5 cents off: kept
        ];
        let out = dedupe(records, 1.0);
        let ids: Vec<&str> = out.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, vec!["a", "c", "d"]);
    }

    #[test]
    fn parse_and_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("db.csv");
        std::fs::write(
            &path,
            "id,name,culture,region,source_kind,tuning,value_kind,values,flags,excluded_reason\n\
             s1,Major,Western,Europe,theory,12-tet,cents_intervals,200;200;100;200;200;200;100,,\n\
             s2,JI,Western,Europe,theory,just,frequency_ratios,1;9/8;5/4;4/3;3/2;5/3;15/8;2,,\n\
             s3,Bad,Western,Europe,theory,,cents_intervals,200;abc;100,,\n\
             s4,Skip,Western,Europe,theory,,cents_intervals,200;200;100;200;200;200;100,,typo in source\n",
        )
        .unwrap();
        let parsed = parse_database(&path, false).unwrap();
        assert_eq!(parsed.rows.len(), 3);
        assert_eq!(parsed.errors.len(), 1);
        assert_eq!(parsed.errors[0].line, 4);
        assert!(parse_database(&path, true).is_err());

        let (records, report) = load_database(&path).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(report.summary.rejected, 1); // the excluded row

        // Round-trip at the documented precision.
        let out = dir.path().join("out.csv");
        write_database_csv(&records, &out).unwrap();
        let (back, _) = load_database(&out).unwrap();
        assert_eq!(back.len(), records.len());
        for (a, b) in records.iter().zip(&back) {
            assert_eq!(a.id, b.id);
            for (x, y) in a.notes.iter().zip(&b.notes) {
                assert!((x - y).abs() <= 1e-3 * a.notes.len() as f64);
            }
        }
    }
}
