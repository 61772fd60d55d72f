//! Fixed-precision digit codec and prompt format.
//!
//! Numbers are scaled by a per-field precision, rounded half away from zero,
//! and written as bare digit strings with no decimal point, so a tokenizer
//! that splits numbers into single digits sees one token per digit
//! (`40.12340` becomes `4012340`). Latitude and longitude are emitted as
//! unsigned magnitudes; the hemisphere is dataset metadata applied again on
//! decode. Prompts are a fixed instruction, one encoded tuple per line, a
//! dash separator, and a trailing completion cue.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{normalize_track_deg, GeoPoint};
use crate::sim::StateSample;

/// Instruction prepended to every input sequence.
pub const INTRO_PROMPT: &str = "Determine the curved flight trajectory using these estimated \
parameters (time, latitude, longitude, altitude, true airspeed, vertical speed, and track \
angle). Please summarize the precise trajectory considering these inputs:";

/// Line separating the data rows from the completion cue.
pub const ROW_SEPARATOR: &str = "- - - - - - -";

/// Completion cue terminating every prompt.
pub const SUMMARY_PROMPT: &str = "Summary:";

#[derive(Debug, Error, PartialEq)]
pub enum CodecError {
    #[error("empty input")]
    EmptyInput,
    #[error("malformed number {0:?}")]
    MalformedNumber(String),
    #[error("no parseable rows in completion text")]
    NoParseableRows,
}

/// Fixed decimal step for one encoded field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSpec {
    pub name: &'static str,
    pub precision: f64,
    /// Whether a leading '-' may be emitted. Only vertical speed carries its
    /// own sign; latitude/longitude signs live in the hemisphere convention.
    pub signed: bool,
}

pub const TIME_SPEC: FieldSpec = FieldSpec { name: "time", precision: 0.01, signed: false };
pub const LAT_SPEC: FieldSpec = FieldSpec { name: "lat", precision: 1e-5, signed: false };
pub const LON_SPEC: FieldSpec = FieldSpec { name: "lon", precision: 1e-5, signed: false };
pub const ALT_SPEC: FieldSpec = FieldSpec { name: "alt", precision: 1.0, signed: false };
pub const TAS_SPEC: FieldSpec = FieldSpec { name: "tas", precision: 1.0, signed: false };
pub const VS_SPEC: FieldSpec = FieldSpec { name: "vs", precision: 0.1, signed: true };
pub const TRACK_SPEC: FieldSpec = FieldSpec { name: "track", precision: 1.0, signed: false };

/// Row field order: (time, lat, lon, alt, tas, vs, track).
pub const ROW_SPECS: [FieldSpec; 7] = [
    TIME_SPEC, LAT_SPEC, LON_SPEC, ALT_SPEC, TAS_SPEC, VS_SPEC, TRACK_SPEC,
];

/// Signs applied to decoded latitude/longitude magnitudes. Fixed per dataset;
/// the default covers the northern/western quadrant of the bundled airports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hemisphere {
    pub north_lat: bool,
    pub east_lon: bool,
}

impl Default for Hemisphere {
    fn default() -> Self {
        Self { north_lat: true, east_lon: false }
    }
}

impl Hemisphere {
    fn lat_sign(self) -> f64 {
        if self.north_lat { 1.0 } else { -1.0 }
    }
    fn lon_sign(self) -> f64 {
        if self.east_lon { 1.0 } else { -1.0 }
    }
}

/// Round `v` to the spec's precision grid (half away from zero). This is the
/// exact value [`decode_value`] recovers after [`encode_value`].
pub fn quantize(v: f64, spec: FieldSpec) -> f64 {
    (v / spec.precision).round() * spec.precision
}

/// Scaled-integer digit string: no decimal point, no leading zeros, leading
/// '-' only for signed fields.
pub fn encode_value(v: f64, spec: FieldSpec) -> String {
    let scaled = (v / spec.precision).round();
    let magnitude = scaled.abs() as i64;
    if spec.signed && scaled < 0.0 && magnitude != 0 {
        format!("-{magnitude}")
    } else {
        magnitude.to_string()
    }
}

/// Parse a digit string back to the field's precision.
pub fn decode_value(s: &str, spec: FieldSpec) -> Result<f64, CodecError> {
    let t = s.trim();
    if t.is_empty() {
        return Err(CodecError::MalformedNumber(s.to_string()));
    }
    let n: i64 = t
        .parse()
        .map_err(|_| CodecError::MalformedNumber(s.to_string()))?;
    Ok(n as f64 * spec.precision)
}

/// One sample as a prompt tuple, e.g. `(967, 4140614, 8692362, 4863, 81, 0, 308)`.
pub fn encode_row(sample: &StateSample, hemi: Hemisphere) -> String {
    debug_assert!(
        sample.pos.lat_deg == 0.0 || (sample.pos.lat_deg > 0.0) == hemi.north_lat,
        "latitude sign disagrees with the hemisphere convention"
    );
    debug_assert!(
        sample.pos.lon_deg == 0.0 || (sample.pos.lon_deg > 0.0) == hemi.east_lon,
        "longitude sign disagrees with the hemisphere convention"
    );
    format!(
        "({}, {}, {}, {}, {}, {}, {})",
        encode_value(sample.time_s, TIME_SPEC),
        encode_value(sample.pos.lat_deg.abs(), LAT_SPEC),
        encode_value(sample.pos.lon_deg.abs(), LON_SPEC),
        encode_value(sample.alt_ft, ALT_SPEC),
        encode_value(sample.tas_kt, TAS_SPEC),
        encode_value(sample.vs_fpm, VS_SPEC),
        encode_value(sample.track_deg, TRACK_SPEC),
    )
}

fn sample_from_fields(fields: [f64; 7], hemi: Hemisphere) -> StateSample {
    StateSample {
        time_s: fields[0],
        pos: GeoPoint {
            lat_deg: fields[1] * hemi.lat_sign(),
            lon_deg: fields[2] * hemi.lon_sign(),
        },
        alt_ft: fields[3],
        tas_kt: fields[4],
        vs_fpm: fields[5],
        track_deg: normalize_track_deg(fields[6]),
    }
}

/// Parse one tuple produced by [`encode_row`].
pub fn parse_row(s: &str, hemi: Hemisphere) -> Result<StateSample, CodecError> {
    let inner = s
        .trim()
        .strip_prefix('(')
        .and_then(|x| x.strip_suffix(')'))
        .ok_or_else(|| CodecError::MalformedNumber(s.to_string()))?;
    let parts: Vec<&str> = inner.split(',').collect();
    if parts.len() != 7 {
        return Err(CodecError::MalformedNumber(s.to_string()));
    }
    let mut fields = [0.0; 7];
    for (i, (part, spec)) in parts.iter().zip(ROW_SPECS.iter()).enumerate() {
        fields[i] = decode_value(part, *spec)?;
    }
    Ok(sample_from_fields(fields, hemi))
}

fn row_block(points: &[StateSample], hemi: Hemisphere) -> String {
    let mut s = String::new();
    for (i, p) in points.iter().enumerate() {
        s.push_str(&encode_row(p, hemi));
        if i + 1 < points.len() {
            s.push(',');
            s.push('\n');
        }
    }
    s
}

/// Full model input: instruction, encoded rows (comma-terminated except the
/// last), separator line, completion cue. Byte-stable for identical input.
pub fn build_prompt(points: &[StateSample], hemi: Hemisphere) -> Result<String, CodecError> {
    if points.is_empty() {
        return Err(CodecError::EmptyInput);
    }
    Ok(format!(
        "{INTRO_PROMPT}\n{}\n{ROW_SEPARATOR}\n{SUMMARY_PROMPT}",
        row_block(points, hemi)
    ))
}

/// Training/eval completion text: the same row syntax as the prompt body.
pub fn build_target(samples: &[StateSample], hemi: Hemisphere) -> Result<String, CodecError> {
    if samples.is_empty() {
        return Err(CodecError::EmptyInput);
    }
    Ok(row_block(samples, hemi))
}

/// A serialized prompt/target pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptRecord {
    pub flight_id: String,
    pub window_start_s: u64,
    pub prompt: String,
    pub target: String,
}

/// Samples recovered from completion text plus what had to be discarded.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryParse {
    pub samples: Vec<StateSample>,
    /// Well-formed tuples rejected for being outside the window or breaking
    /// time monotonicity (e.g. a model echoing its input over and over).
    pub dropped: usize,
    /// Tuple-like fragments that never formed a full seven-field row.
    pub malformed: usize,
}

fn row_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"\(\s*(-?\d+)\s*,\s*(-?\d+)\s*,\s*(-?\d+)\s*,\s*(-?\d+)\s*,\s*(-?\d+)\s*,\s*(-?\d+)\s*,\s*(-?\d+)\s*\)",
        )
        .expect("static regex")
    })
}

fn row_start_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\(\s*-?\d").expect("static regex"))
}

/// Extract every seven-field tuple from completion text, decode it, and keep
/// the ones whose timestamps fall inside `window` and advance monotonically.
pub fn parse_summary(
    text: &str,
    window: (f64, f64),
    hemi: Hemisphere,
) -> Result<SummaryParse, CodecError> {
    let mut samples = Vec::new();
    let mut dropped = 0usize;
    let mut matches = 0usize;
    let mut last_t = f64::NEG_INFINITY;
    for cap in row_regex().captures_iter(text) {
        matches += 1;
        let mut fields = [0.0; 7];
        for i in 0..7 {
            // the regex guarantees sign+digits; decode cannot fail here
            fields[i] = decode_value(&cap[i + 1], ROW_SPECS[i])?;
        }
        let t = fields[0];
        if t < window.0 - 1e-9 || t > window.1 + 1e-9 || t <= last_t {
            dropped += 1;
            continue;
        }
        last_t = t;
        samples.push(sample_from_fields(fields, hemi));
    }
    if matches == 0 {
        return Err(CodecError::NoParseableRows);
    }
    let starts = row_start_regex().find_iter(text).count();
    Ok(SummaryParse {
        samples,
        dropped,
        malformed: starts.saturating_sub(matches),
    })
}

/// Upper-bound token count: one token per digit, one per punctuation or sign
/// character, one per whitespace-delimited word of the instruction text.
pub fn estimate_tokens(s: &str) -> usize {
    let mut tokens = 0usize;
    let mut in_word = false;
    for c in s.chars() {
        if c.is_whitespace() {
            in_word = false;
        } else if c.is_ascii_digit() {
            tokens += 1;
            in_word = false;
        } else if c.is_alphabetic() {
            if !in_word {
                tokens += 1;
                in_word = true;
            }
        } else {
            tokens += 1;
            in_word = false;
        }
    }
    tokens
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(
        time_s: f64,
        lat: f64,
        lon: f64,
        alt: f64,
        tas: f64,
        vs: f64,
        track: f64,
    ) -> StateSample {
        StateSample {
            time_s,
            pos: GeoPoint { lat_deg: lat, lon_deg: lon },
            alt_ft: alt,
            tas_kt: tas,
            vs_fpm: vs,
            track_deg: track,
        }
    }

    /// First data row of the reference prompt.
    fn reference_sample() -> StateSample {
        sample(9.67, 41.40614, -86.92362, 4863.0, 81.0, 0.0, 308.0)
    }

    #[test]
    fn encode_strips_decimal_point() {
        assert_eq!(encode_value(40.12340, LAT_SPEC), "4012340");
    }

    #[test]
    fn encode_zero_and_signed() {
        assert_eq!(encode_value(0.0, ALT_SPEC), "0");
        assert_eq!(encode_value(-0.0, VS_SPEC), "0");
        assert_eq!(encode_value(-250.0, VS_SPEC), "-2500");
        assert_eq!(encode_value(250.0, VS_SPEC), "2500");
    }

    #[test]
    fn decode_restores_precision() {
        assert_eq!(decode_value("4140614", LAT_SPEC).unwrap(), 41.40614);
        assert_eq!(decode_value("967", TIME_SPEC).unwrap(), 9.67);
        assert_eq!(decode_value("0", ALT_SPEC).unwrap(), 0.0);
        assert_eq!(decode_value("-2500", VS_SPEC).unwrap(), -250.0);
        assert!(matches!(
            decode_value("", TIME_SPEC),
            Err(CodecError::MalformedNumber(_))
        ));
        assert!(matches!(
            decode_value("12a4", TIME_SPEC),
            Err(CodecError::MalformedNumber(_))
        ));
    }

    #[test]
    fn encode_row_matches_reference_layout() {
        let row = encode_row(&reference_sample(), Hemisphere::default());
        assert_eq!(row, "(967, 4140614, 8692362, 4863, 81, 0, 308)");
    }

    #[test]
    fn encode_row_all_zero() {
        let row = encode_row(&sample(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0), Hemisphere::default());
        assert_eq!(row, "(0, 0, 0, 0, 0, 0, 0)");
    }

    #[test]
    fn parse_row_round_trip() {
        let hemi = Hemisphere::default();
        let s = reference_sample();
        let row = encode_row(&s, hemi);
        let parsed = parse_row(&row, hemi).unwrap();
        // the parse lands on the codec grid and re-encodes identically
        assert_eq!(encode_row(&parsed, hemi), row);
        assert!((parsed.time_s - s.time_s).abs() <= TIME_SPEC.precision / 2.0);
        assert!((parsed.pos.lat_deg - s.pos.lat_deg).abs() <= LAT_SPEC.precision / 2.0);
        assert!((parsed.pos.lon_deg - s.pos.lon_deg).abs() <= LON_SPEC.precision / 2.0);
        assert_eq!(parsed.alt_ft, s.alt_ft);
        assert_eq!(parsed.vs_fpm, s.vs_fpm);
        assert_eq!(parsed.track_deg, s.track_deg);
    }

    #[test]
    fn prompt_layout_single_point() {
        let p = build_prompt(&[reference_sample()], Hemisphere::default()).unwrap();
        assert!(p.starts_with(INTRO_PROMPT));
        assert!(p.ends_with(SUMMARY_PROMPT));
        assert!(p.contains("(967, 4140614, 8692362, 4863, 81, 0, 308)\n- - - - - - -\n"));
        // single row carries no trailing comma
        assert!(!p.contains("308),"));
        assert!(matches!(
            build_prompt(&[], Hemisphere::default()),
            Err(CodecError::EmptyInput)
        ));
    }

    #[test]
    fn prompt_is_byte_stable() {
        let pts = vec![
            reference_sample(),
            sample(11.58, 41.40473, -86.92565, 4895.0, 81.0, 0.0, 308.0),
        ];
        let a = build_prompt(&pts, Hemisphere::default()).unwrap();
        let b = build_prompt(&pts, Hemisphere::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn summary_parses_well_formed_rows() {
        let hemi = Hemisphere::default();
        let targets: Vec<StateSample> = (0..12)
            .map(|i| sample(5.0 * i as f64, 41.4, -86.9, 4800.0, 81.0, 0.0, 300.0))
            .collect();
        let text = build_target(&targets, hemi).unwrap();
        let parsed = parse_summary(&text, (0.0, 60.0), hemi).unwrap();
        assert_eq!(parsed.samples.len(), 12);
        assert_eq!(parsed.dropped, 0);
        assert_eq!(parsed.malformed, 0);
    }

    #[test]
    fn summary_drops_truncated_tuple() {
        let text = "(0, 4140614, 8692362, 4863, 81, 0, 308),\n(500, 4140473, 8692";
        let parsed = parse_summary(text, (0.0, 60.0), Hemisphere::default()).unwrap();
        assert_eq!(parsed.samples.len(), 1);
        assert_eq!(parsed.malformed, 1);
    }

    #[test]
    fn summary_drops_echoed_repeats_and_out_of_window_rows() {
        let hemi = Hemisphere::default();
        let rows: Vec<StateSample> = (0..5)
            .map(|i| sample(10.0 * i as f64, 41.4, -86.9, 4800.0, 81.0, 0.0, 300.0))
            .collect();
        let block = build_target(&rows, hemi).unwrap();
        // a base model echoing its input repeats the block; repeats break
        // monotonicity and get dropped
        let echoed = format!("{block},\n{block},\n{block}");
        let parsed = parse_summary(&echoed, (0.0, 60.0), hemi).unwrap();
        assert_eq!(parsed.samples.len(), 5);
        assert_eq!(parsed.dropped, 10);

        // rows outside the window get dropped as well
        let late = build_target(&[sample(95.0, 41.4, -86.9, 4800.0, 81.0, 0.0, 300.0)], hemi)
            .unwrap();
        let text = format!("{block},\n{late}");
        let parsed = parse_summary(&text, (0.0, 60.0), hemi).unwrap();
        assert_eq!(parsed.samples.len(), 5);
        assert_eq!(parsed.dropped, 1);
    }

    #[test]
    fn summary_without_rows_is_an_error() {
        assert_eq!(
            parse_summary("no numbers here", (0.0, 60.0), Hemisphere::default()),
            Err(CodecError::NoParseableRows)
        );
    }

    #[test]
    fn token_estimate_cases() {
        assert_eq!(estimate_tokens(""), 0);
        assert_eq!(estimate_tokens("4012340"), 7);
        // word + colon
        assert_eq!(estimate_tokens("Summary:"), 2);
        // tuple: 7 digits of "boundary" cases counted individually
        assert_eq!(estimate_tokens("(1, 2)"), 5); // ( 1 , 2 )
        assert_eq!(estimate_tokens("-25"), 3);
    }

    proptest! {
        #[test]
        fn decode_encode_is_quantization(v in -400_000.0..400_000.0f64, idx in 0usize..7) {
            let spec = ROW_SPECS[idx];
            let decoded = decode_value(&encode_value(v, spec), spec).unwrap();
            let expect = if spec.signed { quantize(v, spec) } else { quantize(v.abs(), spec) };
            prop_assert_eq!(decoded, expect);
        }

        #[test]
        fn token_estimate_monotone(a in ".{0,40}", b in ".{0,40}") {
            let joined = format!("{a}{b}");
            prop_assert!(estimate_tokens(&joined) >= estimate_tokens(&a));
        }

        #[test]
        fn target_round_trip(n in 1usize..14) {
            let hemi = Hemisphere::default();
            let samples: Vec<StateSample> = (0..n)
                .map(|i| sample(
                    5.0 * i as f64,
                    quantize(41.0 + 0.001 * i as f64, LAT_SPEC),
                    -quantize(86.9 + 0.001 * i as f64, LON_SPEC),
                    4800.0 + i as f64,
                    81.0,
                    quantize(-100.0 + 3.7 * i as f64, VS_SPEC),
                    (300 + i) as f64 % 360.0,
                ))
                .collect();
            let text = build_target(&samples, hemi).unwrap();
            let parsed = parse_summary(&text, (0.0, 100.0), hemi).unwrap();
            prop_assert_eq!(parsed.samples, samples);
            prop_assert_eq!(parsed.dropped, 0);
        }
    }
}
