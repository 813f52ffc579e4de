//! Profile CSV, JSON reports and the penalty table. Every file is written to
//! a temporary sibling and renamed into place.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::analysis::{Status, Verdict};
use crate::error::{Error, Result};
use crate::kinematics::{det_value, extrapolate_origin, z_value, RadialProfile};
use crate::ode::{strong_residual, subsolution_quantity, zdot_closed_form};
use crate::penalty::PenaltySpec;

pub const PROFILE_HEADER: [&str; 5] = ["R", "r", "rdot", "d", "z"];
pub const DIAGNOSTIC_HEADER: [&str; 3] = ["residual", "zdot", "subsol"];
pub const RHO_HEADER: [&str; 5] = ["s", "rho", "rho_prime", "rho_second", "f"];

/// Shortest decimal that parses back to the same bits.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.display().to_string(), source }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(path))?;
    tmp.write_all(bytes).map_err(io_err(path))?;
    tmp.as_file().sync_all().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| io_err(path)(e.error))?;
    Ok(())
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, to_json(value)?.as_bytes())
}

fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let wrap = |e: csv::Error| Error::InvalidArgument(format!("csv encoding: {e}"));
    w.write_record(header).map_err(wrap)?;
    for row in rows {
        w.write_record(&row).map_err(wrap)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(format!("csv encoding: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is ascii"))
}

/// `d` and `z` at every node; at `R = 0` the limits from the three smallest
/// positive radii.
pub fn derived_columns(spec: &PenaltySpec, profile: &RadialProfile) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = profile.m;
    let d_at = |i: usize| det_value(m, profile.mesh[i], profile.r[i], profile.rdot[i]);
    let z_at = |i: usize| z_value(spec, m, profile.mesh[i], profile.r[i], profile.rdot[i]);
    let mut d = Vec::with_capacity(profile.len());
    let mut z = Vec::with_capacity(profile.len());
    for i in 0..profile.len() {
        if profile.mesh[i] > 0.0 {
            d.push(d_at(i));
            z.push(z_at(i));
        } else {
            d.push(extrapolate_origin(profile, d_at)?);
            z.push(extrapolate_origin(profile, z_at)?);
        }
    }
    Ok((d, z))
}

pub fn profile_csv(spec: &PenaltySpec, profile: &RadialProfile, diagnostics: bool) -> Result<String> {
    let (d, z) = derived_columns(spec, profile)?;
    let mut header = PROFILE_HEADER.to_vec();
    let mut extra: Vec<[String; 3]> = Vec::new();
    if diagnostics {
        header.extend(DIAGNOSTIC_HEADER);
        let residual = strong_residual(spec, profile);
        let zdot = |i: usize| zdot_closed_form(profile.m, &profile.state(i)).value;
        for i in 0..profile.len() {
            let zd = if profile.mesh[i] > 0.0 {
                zdot(i)
            } else {
                extrapolate_origin(profile, zdot)?
            };
            // undefined at the ends and for M = 1
            let sub = subsolution_quantity(spec, profile, i).map(|s| fmt_f64(s.value)).unwrap_or_default();
            extra.push([fmt_f64(residual[i]), fmt_f64(zd), sub]);
        }
    }
    let rows = (0..profile.len()).map(|i| {
        let mut row: Vec<String> =
            [profile.mesh[i], profile.r[i], profile.rdot[i], d[i], z[i]].into_iter().map(fmt_f64).collect();
        if let Some(e) = extra.get(i) {
            row.extend(e.iter().cloned());
        }
        row
    });
    csv_text(&header, rows)
}

pub fn write_profile(path: &Path, spec: &PenaltySpec, profile: &RadialProfile, diagnostics: bool) -> Result<()> {
    write_atomic(path, profile_csv(spec, profile, diagnostics)?.as_bytes())
}

/// A profile read back from CSV, with the stored `d` and `z` columns.
#[derive(Clone, Debug, PartialEq)]
pub struct ProfileTable {
    pub profile: RadialProfile,
    pub d: Vec<f64>,
    pub z: Vec<f64>,
}

pub fn parse_profile(text: &str, m: u32, source: &str) -> Result<ProfileTable> {
    let csv_err = |line: u64, message: String| Error::Csv { path: source.to_string(), line: line as usize, message };
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| csv_err(1, e.to_string()))?.clone();
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    let full: Vec<&str> = PROFILE_HEADER.iter().chain(&DIAGNOSTIC_HEADER).copied().collect();
    if names != PROFILE_HEADER && names != full {
        let message = format!("expected header {} or {}, got {}", PROFILE_HEADER.join(","), full.join(","), names.join(","));
        return Err(csv_err(1, message));
    }
    let mut cols: [Vec<f64>; 5] = Default::default();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            csv_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != names.len() {
            return Err(csv_err(line, format!("expected {} columns, found {}", names.len(), record.len())));
        }
        for (k, col) in cols.iter_mut().enumerate() {
            let field = record[k].trim();
            let v: f64 = field
                .parse()
                .map_err(|_| csv_err(line, format!("column {}: cannot parse {field:?}", PROFILE_HEADER[k])))?;
            col.push(v);
        }
    }
    let [mesh, r, rdot, d, z] = cols;
    let profile = RadialProfile::new(m, mesh, r, rdot)?;
    Ok(ProfileTable { profile, d, z })
}

pub fn read_profile(path: &Path, m: u32) -> Result<ProfileTable> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    parse_profile(&text, m, &path.display().to_string())
}

/// Compare the stored `d` and `z` columns with values recomputed from
/// `R, r, ṙ`. A mismatch means the file was edited or written for another
/// spec or `M`.
pub fn check_columns(spec: &PenaltySpec, table: &ProfileTable, tol: f64) -> Result<Verdict> {
    let (d, z) = derived_columns(spec, &table.profile)?;
    let mut worst: Option<(f64, f64)> = None;
    let mut note = String::new();
    for i in 0..d.len() {
        for (name, stored, fresh) in [("d", table.d[i], d[i]), ("z", table.z[i], z[i])] {
            let err = (stored - fresh).abs() / fresh.abs().max(1.0);
            let err = if err.is_nan() { f64::INFINITY } else { err };
            if worst.map_or(true, |w| err > w.1) {
                worst = Some((table.profile.mesh[i], err));
            }
            if err > tol && note.is_empty() {
                note = format!("{name} column differs at R = {:e}: stored {stored:e}, recomputed {fresh:e}", table.profile.mesh[i]);
            }
        }
    }
    let status = if note.is_empty() { Status::Pass } else { Status::Fail };
    Ok(Verdict::new(status, worst).with_note(note))
}

/// `N + 1` equally spaced samples of the penalty over `[−s0, 2 s0]`
/// (over `[−1, 2]` when `s0 = 0`).
pub fn rho_table(spec: &PenaltySpec, samples: usize) -> Result<Vec<[f64; 5]>> {
    spec.validate()?;
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample interval".into()));
    }
    let span = if spec.s0 > 0.0 { spec.s0 } else { 1.0 };
    Ok((0..=samples)
        .map(|k| {
            let s = -span + 3.0 * span * k as f64 / samples as f64;
            [s, spec.rho(s), spec.rho_prime(s), spec.rho_second(s), spec.f_of_d(s)]
        })
        .collect())
}

pub fn rho_table_csv(spec: &PenaltySpec, samples: usize) -> Result<String> {
    let rows = rho_table(spec, samples)?;
    csv_text(&RHO_HEADER, rows.into_iter().map(|row| row.into_iter().map(fmt_f64).collect()))
}
