//! File formats: pulse and ensemble JSON, sublevel profiles, momentum CSV,
//! result tables and run metadata. Every write goes to a temporary file in
//! the destination directory and is renamed into place.
//!
//! Frequencies are stored in Hz and converted to rad/s on load.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ensemble::{Ensemble, EnsembleMember};
use crate::error::{Error, Result};
use crate::grape::OptimizationConfigFile;
use crate::pulse::{PulseSegment, PulseWaveform};
use crate::raman::{normalize_momentum, MomentumSample, Sublevel, SublevelSet};

const TAU: f64 = std::f64::consts::TAU;

fn parse_error(e: serde_json::Error) -> Error {
    Error::Parse {
        line: e.line(),
        message: e.to_string(),
    }
}

/// Hz value whose product with 2π is exactly `rad_per_s`, when one exists
/// within a few ulps of the quotient.
fn hz_preimage(rad_per_s: f64) -> f64 {
    let guess = rad_per_s / TAU;
    let mut up = guess;
    let mut down = guess;
    for _ in 0..8 {
        if up * TAU == rad_per_s {
            return up;
        }
        if down * TAU == rad_per_s {
            return down;
        }
        up = up.next_up();
        down = down.next_down();
    }
    guess
}

/// 17 significant digits, enough to round-trip any double.
fn number(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PulseFile {
    nominal_rabi_hz: f64,
    segments: Vec<SegmentFile>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SegmentFile {
    duration_s: f64,
    rabi_hz: f64,
    phase_rad: f64,
}

pub fn pulse_to_json(pulse: &PulseWaveform) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{{");
    let _ = writeln!(out, "  \"nominal_rabi_hz\": {},", number(hz_preimage(pulse.nominal_rabi())));
    let _ = writeln!(out, "  \"segments\": [");
    let last = pulse.len() - 1;
    for (i, s) in pulse.segments().iter().enumerate() {
        let _ = writeln!(
            out,
            "    {{\"duration_s\": {}, \"rabi_hz\": {}, \"phase_rad\": {}}}{}",
            number(s.duration),
            number(hz_preimage(s.rabi)),
            number(s.phase),
            if i == last { "" } else { "," }
        );
    }
    let _ = writeln!(out, "  ]");
    let _ = writeln!(out, "}}");
    out
}

pub fn pulse_from_json(text: &str) -> Result<PulseWaveform> {
    let file: PulseFile = serde_json::from_str(text).map_err(parse_error)?;
    let segments = file
        .segments
        .iter()
        .map(|s| PulseSegment {
            duration: s.duration_s,
            rabi: s.rabi_hz * TAU,
            phase: s.phase_rad,
        })
        .collect();
    PulseWaveform::new(segments, file.nominal_rabi_hz * TAU)
}

pub fn save_pulse(pulse: &PulseWaveform, path: &Path) -> Result<()> {
    write_atomic(path, pulse_to_json(pulse).as_bytes())
}

pub fn load_pulse(path: &Path) -> Result<PulseWaveform> {
    pulse_from_json(&read(path)?)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EnsembleFile {
    members: Vec<MemberFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MemberFile {
    detuning_hz: f64,
    coupling_scale: f64,
    weight: f64,
}

pub fn ensemble_to_json(ensemble: &Ensemble) -> String {
    let file = EnsembleFile {
        members: ensemble
            .members()
            .iter()
            .map(|m| MemberFile {
                detuning_hz: hz_preimage(m.detuning_offset),
                coupling_scale: m.coupling_scale,
                weight: m.weight,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("plain data serializes") + "\n"
}

/// Weights must sum to one within [`Ensemble::WEIGHT_TOLERANCE`].
pub fn ensemble_from_json(text: &str) -> Result<Ensemble> {
    let file: EnsembleFile = serde_json::from_str(text).map_err(parse_error)?;
    Ensemble::new(
        file.members
            .iter()
            .map(|m| EnsembleMember {
                detuning_offset: m.detuning_hz * TAU,
                coupling_scale: m.coupling_scale,
                weight: m.weight,
            })
            .collect(),
    )
}

pub fn save_ensemble(ensemble: &Ensemble, path: &Path) -> Result<()> {
    write_atomic(path, ensemble_to_json(ensemble).as_bytes())
}

pub fn load_ensemble(path: &Path) -> Result<Ensemble> {
    ensemble_from_json(&read(path)?)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SublevelFile {
    m_f: i32,
    coupling_factor: f64,
    stark_shift_hz: f64,
    weight: f64,
}

pub fn sublevels_to_json(set: &SublevelSet) -> String {
    let levels: Vec<SublevelFile> = set
        .levels()
        .iter()
        .map(|l| SublevelFile {
            m_f: l.m_f,
            coupling_factor: l.coupling_factor,
            stark_shift_hz: hz_preimage(l.stark_shift),
            weight: l.weight,
        })
        .collect();
    serde_json::to_string_pretty(&levels).expect("plain data serializes") + "\n"
}

pub fn sublevels_from_json(text: &str) -> Result<SublevelSet> {
    let levels: Vec<SublevelFile> = serde_json::from_str(text).map_err(parse_error)?;
    SublevelSet::new(
        levels
            .iter()
            .map(|l| Sublevel {
                m_f: l.m_f,
                coupling_factor: l.coupling_factor,
                stark_shift: l.stark_shift_hz * TAU,
                weight: l.weight,
            })
            .collect(),
    )
}

pub fn load_sublevels(path: &Path) -> Result<SublevelSet> {
    sublevels_from_json(&read(path)?)
}

#[derive(Serialize, Deserialize)]
struct MomentumRow {
    detuning_hz: f64,
    weight: f64,
}

pub fn load_optimization_config(path: &Path) -> Result<OptimizationConfigFile> {
    serde_json::from_str(&read(path)?).map_err(parse_error)
}

/// Reads `detuning_hz,weight` rows; weights are rescaled to sum to one.
pub fn momentum_from_csv(text: &str) -> Result<Vec<MomentumSample>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut samples = Vec::new();
    for row in reader.deserialize::<MomentumRow>() {
        let row = row.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        samples.push(MomentumSample {
            detuning: row.detuning_hz * TAU,
            weight: row.weight,
        });
    }
    normalize_momentum(samples)
}

pub fn momentum_to_csv(samples: &[MomentumSample]) -> Result<String> {
    csv_string(
        &["detuning_hz", "weight"],
        samples
            .iter()
            .map(|s| vec![hz_preimage(s.detuning).to_string(), s.weight.to_string()]),
    )
}

pub fn load_momentum(path: &Path) -> Result<Vec<MomentumSample>> {
    momentum_from_csv(&read(path)?)
}

/// RFC 4180 table with a header row.
pub fn csv_string<I>(header: &[&str], rows: I) -> Result<String>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(header)?;
    for row in rows {
        writer.write_record(&row)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    write_atomic(path, csv_string(header, rows)?.as_bytes())
}

/// Writes `contents` to a temporary sibling of `path`, then renames it.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::NotFound(path.display().to_string()),
        _ => Error::Io(e),
    })
}

/// Provenance record written next to every output as `<out>.meta.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunMetadata {
    pub command_line: Vec<String>,
    pub versions: BTreeMap<String, String>,
    pub wall_time_s: f64,
    /// Command-specific facts, such as contour levels or a located peak.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, serde_json::Value>,
}

impl RunMetadata {
    pub fn new(command_line: Vec<String>, wall_time_s: f64) -> Self {
        let mut versions = BTreeMap::new();
        versions.insert(env!("CARGO_PKG_NAME").to_string(), env!("CARGO_PKG_VERSION").to_string());
        Self {
            command_line,
            versions,
            wall_time_s,
            extra: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Serialize) -> Self {
        let value = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.extra.insert(key.to_string(), value);
        self
    }
}

pub fn meta_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

pub fn write_metadata(output: &Path, meta: &RunMetadata) -> Result<()> {
    write_json(&meta_path(output), meta)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Numerical(e.to_string()))?;
    write_atomic(path, (text + "\n").as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{build_ensemble, EnsembleGrid};
    use crate::pulse::composite;

    const OMEGA: f64 = TAU * 200e3;

    #[test]
    fn pulse_round_trip_is_bit_exact() {
        for pulse in [
            PulseWaveform::random_phase(OMEGA, 20e-6, 100e-9, 42).unwrap(),
            composite("bb1", OMEGA).unwrap(),
        ] {
            let back = pulse_from_json(&pulse_to_json(&pulse)).unwrap();
            assert_eq!(back, pulse);
        }
    }

    #[test]
    fn pulse_file_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.json");
        let pulse = composite("knill", OMEGA).unwrap();
        save_pulse(&pulse, &path).unwrap();
        assert_eq!(load_pulse(&path).unwrap(), pulse);
        let leftovers = std::fs::read_dir(dir.path()).unwrap().count();
        assert_eq!(leftovers, 1);
    }

    #[test]
    fn malformed_pulse_reports_line() {
        let text = "{\n  \"nominal_rabi_hz\": 200000,\n  \"segments\": [\n    {\"duration_s\": 1e-6, \"rabi_hz\": }\n  ]\n}";
        match pulse_from_json(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn invalid_pulses_are_validation_errors() {
        let negative = r#"{"nominal_rabi_hz": 2e5, "segments": [{"duration_s": -1e-6, "rabi_hz": 2e5, "phase_rad": 0}]}"#;
        assert!(matches!(pulse_from_json(negative), Err(Error::Validation(_))));
        let empty = r#"{"nominal_rabi_hz": 2e5, "segments": []}"#;
        assert!(matches!(pulse_from_json(empty), Err(Error::Validation(_))));
    }

    #[test]
    fn missing_file_is_not_found() {
        assert!(matches!(load_pulse(Path::new("/nonexistent/p.json")), Err(Error::NotFound(_))));
    }

    #[test]
    fn preimage_round_trips_through_two_pi() {
        for rad in [OMEGA, 1.0, 123456.789, 2.5e6] {
            let hz = hz_preimage(rad);
            assert!((hz * TAU - rad).abs() <= rad * f64::EPSILON);
        }
        assert_eq!(hz_preimage(OMEGA), 200e3);
    }

    #[test]
    fn ensemble_round_trip() {
        let ensemble = build_ensemble(&EnsembleGrid::mirror_design(), OMEGA).unwrap();
        let back = ensemble_from_json(&ensemble_to_json(&ensemble)).unwrap();
        assert_eq!(back.len(), ensemble.len());
        for (a, b) in back.members().iter().zip(ensemble.members()) {
            assert!((a.detuning_offset - b.detuning_offset).abs() <= 1e-9 * OMEGA);
            assert_eq!((a.coupling_scale, a.weight), (b.coupling_scale, b.weight));
        }
        let bad = r#"{"members": [{"detuning_hz": 0, "coupling_scale": 1, "weight": 0.5}]}"#;
        assert!(matches!(ensemble_from_json(bad), Err(Error::Validation(_))));
    }

    #[test]
    fn sublevels_and_momentum() {
        let set = SublevelSet::default_profile(TAU * 360e3);
        let back = sublevels_from_json(&sublevels_to_json(&set)).unwrap();
        for (a, b) in back.levels().iter().zip(set.levels()) {
            assert_eq!(a.m_f, b.m_f);
            assert!((a.stark_shift - b.stark_shift).abs() < 1e-6);
        }
        let m = momentum_from_csv("detuning_hz,weight\n-1000,1\n0,2\n1000,1\n").unwrap();
        assert_eq!(m.len(), 3);
        assert_eq!(m[1].weight, 0.5);
        assert!((m[2].detuning - TAU * 1000.0).abs() < 1e-9);
        assert!(matches!(momentum_from_csv("detuning_hz,weight\n1,x\n"), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn metadata_path_and_content() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("curve.csv");
        write_csv(&out, &["a", "b"], vec![vec!["1".into(), "x,y".into()]]).unwrap();
        assert_eq!(std::fs::read_to_string(&out).unwrap(), "a,b\n1,\"x,y\"\n");
        write_metadata(&out, &RunMetadata::new(vec!["prog".into()], 0.5)).unwrap();
        let meta: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("curve.csv.meta.json")).unwrap()).unwrap();
        assert_eq!(meta["wall_time_s"], 0.5);
        assert_eq!(meta["versions"]["mirror-grape"], env!("CARGO_PKG_VERSION"));
    }
}
