//! Post-hoc checks on a solved profile: lift-off classification, the sign
//! and monotonicity properties every solution must have, the maximum
//! principle for `z`, and the behavior at the origin.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{det_value, extrapolate_origin, radial_energy, EnergyBreakdown, RadialProfile};
use crate::mesh::first_derivative;
use crate::ode::{c_m, residual_sup, strong_residual, subsolution_quantity, window_roots, zdot_closed_form};
use crate::penalty::{PenaltyKind, PenaltySpec};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Classification {
    Delayed { delta: f64 },
    Immediate { a: f64, exponent: f64, d_m_estimate: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// Holds only with equality, or trivially (e.g. on `r ≡ 0`).
    Degenerate,
    NotApplicable,
}

impl Status {
    pub fn failed(self) -> bool {
        self == Status::Fail
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: Status,
    #[serde(rename = "worst_R")]
    pub worst_r: Option<f64>,
    pub worst_value: Option<f64>,
    #[serde(skip_serializing_if = "String::is_empty", default)]
    pub note: String,
}

impl Verdict {
    pub fn new(status: Status, worst: Option<(f64, f64)>) -> Self {
        Self { status, worst_r: worst.map(|w| w.0), worst_value: worst.map(|w| w.1), note: String::new() }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    fn not_applicable(why: &str) -> Self {
        Self::new(Status::NotApplicable, None).with_note(why)
    }
}

/// Tolerances and probe radii. Every check reads its tolerance from here.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub classify_tol: f64,
    pub delta_probe: f64,
    pub probe_floor: f64,
    pub r_tol: f64,
    pub rdot_tol: f64,
    pub det_tol: f64,
    pub ddot_tol: f64,
    pub origin_det_tol: f64,
    pub origin_rdot_tol: f64,
    /// Relative to the largest `|r̈|` on the smallest decade.
    pub rddot_tol: f64,
    pub window_tol: f64,
    /// Relative to the local scale `|z̈| + |ż/R| + c_M ρ'' |ż|`.
    pub subsolution_tol: f64,
    pub boundary_tol: f64,
    pub residual_tol: f64,
    pub alpha: f64,
    /// Relative slack on the necessary-condition window.
    pub necessary_tol: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            classify_tol: 0.0,
            delta_probe: 0.01,
            probe_floor: 1e-3,
            r_tol: 1e-12,
            rdot_tol: 1e-10,
            det_tol: 1e-10,
            ddot_tol: 1e-8,
            origin_det_tol: 1e-6,
            origin_rdot_tol: 1e-4,
            rddot_tol: 1e-6,
            window_tol: 1e-6,
            subsolution_tol: 1e-6,
            boundary_tol: 1e-9,
            residual_tol: 1e-6,
            alpha: 0.5,
            necessary_tol: 1e-6,
        }
    }
}

/// Indices of nodes with `R > 0` in `[R₀, 10 R₀]`, `R₀` the first of them
/// where `r > 0`.
fn first_decade(profile: &RadialProfile) -> Vec<usize> {
    let Some(start) = (profile.first_positive()..profile.len()).find(|&i| profile.r[i] > 0.0) else {
        return Vec::new();
    };
    let limit = 10.0 * profile.mesh[start];
    (start..profile.len()).take_while(|&i| profile.mesh[i] <= limit * (1.0 + 1e-12)).collect()
}

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (my - slope * mx, slope)
}

/// Delayed if `r ≤ tol` on an initial run of nodes reaching at least ten
/// times the first positive radius; immediate otherwise, with `r ≈ a R^p`
/// fitted on the first decade.
pub fn classify_liftoff(profile: &RadialProfile, tol: f64) -> Result<Classification> {
    let k0 = profile.first_positive();
    if profile.len() < k0 + 3 {
        return Err(Error::Unresolved("fewer than 3 nodes with R > 0".into()));
    }
    let flat = (k0..profile.len()).take_while(|&i| profile.r[i] <= tol).last();
    if let Some(j) = flat {
        let delta = profile.mesh[j];
        if delta >= 10.0 * profile.mesh[k0] {
            return Ok(Classification::Delayed { delta });
        }
    }
    let idx: Vec<usize> = first_decade(profile).into_iter().filter(|&i| profile.r[i] > tol).collect();
    if idx.len() < 3 {
        return Err(Error::Unresolved(format!(
            "{} usable nodes in the first decade, need 3",
            idx.len()
        )));
    }
    let lx: Vec<f64> = idx.iter().map(|&i| profile.mesh[i].ln()).collect();
    let ly: Vec<f64> = idx.iter().map(|&i| profile.r[i].ln()).collect();
    let (intercept, exponent) = least_squares(&lx, &ly);
    let d_m_estimate = estimate_dm_unchecked(profile)?;
    Ok(Classification::Immediate { a: intercept.exp(), exponent, d_m_estimate })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreThresholdFit {
    /// Last node with `0 < d ≤ s̃`.
    pub delta: f64,
    pub a: f64,
    /// Free-exponent fit of `log r` against `log R`, for comparison.
    pub exponent: f64,
    /// `max |r − a (R/δ)^M| / r` over the segment.
    pub relative_residual: f64,
    pub nodes: usize,
}

/// Fit `a (R/δ)^M` on the segment of positive `r` where the penalty has not
/// yet switched on.
pub fn fit_pre_threshold(spec: &PenaltySpec, profile: &RadialProfile) -> Result<PreThresholdFit> {
    let PenaltyKind::DelayedSmoothStep { delay } = spec.kind else {
        return Err(Error::InvalidArgument("pre-threshold fit needs a delayed penalty".into()));
    };
    let m = profile.m;
    let idx: Vec<usize> = (profile.first_positive()..profile.len())
        .skip_while(|&i| profile.r[i] <= 0.0)
        .take_while(|&i| {
            profile.r[i] > 0.0 && det_value(m, profile.mesh[i], profile.r[i], profile.rdot[i]) <= delay
        })
        .collect();
    if idx.len() < 3 {
        return Err(Error::Unresolved(format!("{} pre-threshold nodes, need 3", idx.len())));
    }
    let delta = profile.mesh[*idx.last().unwrap()];
    let mf = profile.m_f64();
    let basis = |i: usize| (profile.mesh[i] / delta).powf(mf);
    // least squares for a single coefficient, weighted relative to r
    let (num, den) = idx.iter().fold((0.0, 0.0), |(n, d), &i| {
        let b = basis(i) / profile.r[i];
        (n + b, d + b * b)
    });
    let a = num / den;
    let relative_residual = idx
        .iter()
        .map(|&i| ((profile.r[i] - a * basis(i)) / profile.r[i]).abs())
        .fold(0.0, f64::max);
    let lx: Vec<f64> = idx.iter().map(|&i| profile.mesh[i].ln()).collect();
    let ly: Vec<f64> = idx.iter().map(|&i| profile.r[i].ln()).collect();
    let (_, exponent) = least_squares(&lx, &ly);
    Ok(PreThresholdFit { delta, a, exponent, relative_residual, nodes: idx.len() })
}

fn estimate_dm_unchecked(profile: &RadialProfile) -> Result<f64> {
    let idx: Vec<usize> = first_decade(profile).into_iter().filter(|&i| profile.r[i] > 0.0).collect();
    if idx.len() < 3 {
        return Err(Error::Unresolved("fewer than 3 nodes in the first decade".into()));
    }
    let xs: Vec<f64> = idx.iter().map(|&i| profile.mesh[i]).collect();
    let ys: Vec<f64> = idx.iter().map(|&i| profile.mesh[i] * profile.rdot[i] / profile.r[i]).collect();
    // linear extrapolation of the ratio to R = 0
    Ok(least_squares(&xs, &ys).0)
}

/// Limit of `R ṙ / r` at the origin, extrapolated over the first decade.
pub fn estimate_dm(profile: &RadialProfile) -> Result<f64> {
    match classify_liftoff(profile, 0.0)? {
        Classification::Delayed { delta } => Err(Error::InvalidArgument(format!(
            "D_M is undefined for a delayed profile (delta = {delta})"
        ))),
        Classification::Immediate { d_m_estimate, .. } => Ok(d_m_estimate),
    }
}

/// Track the most negative margin.
struct Worst(Option<(f64, f64)>);

impl Worst {
    fn see(&mut self, radius: f64, value: f64) {
        if self.0.map_or(true, |(_, v)| value < v) {
            self.0 = Some((radius, value));
        }
    }
}

/// `r ≥ 0`, `ṙ ≥ 0`, `d ≥ 0`, `ḋ ≥ 0` up to tolerance; `ḋ` from differenced `d`.
pub fn check_signs(profile: &RadialProfile, cfg: &AnalysisConfig) -> Verdict {
    let k0 = profile.first_positive();
    let xs = &profile.mesh[k0..];
    let d: Vec<f64> =
        (k0..profile.len()).map(|i| det_value(profile.m, profile.mesh[i], profile.r[i], profile.rdot[i])).collect();
    let ddot = if xs.len() >= 3 { first_derivative(xs, &d) } else { vec![0.0; xs.len()] };
    let mut worst = Worst(None);
    let mut failed = None;
    for i in 0..profile.len() {
        let x = profile.mesh[i];
        let mut margins = vec![(profile.r[i], cfg.r_tol, "r"), (profile.rdot[i], cfg.rdot_tol, "rdot")];
        if i >= k0 {
            margins.push((d[i - k0], cfg.det_tol, "d"));
            // ḋ carries r̈; below the probe floor differencing noise dominates
            if x >= cfg.probe_floor {
                margins.push((ddot[i - k0], cfg.ddot_tol, "ddot"));
            }
        }
        for (value, tol, name) in margins {
            worst.see(x, value);
            if value < -tol && failed.is_none() {
                failed = Some(format!("{name} = {value:e} at R = {x:e}"));
            }
        }
    }
    match failed {
        Some(note) => Verdict::new(Status::Fail, worst.0).with_note(note),
        None => Verdict::new(Status::Pass, worst.0),
    }
}

/// Sign pattern of `ż` near the origin against the ratio window, and at
/// most one sign change of `ż` on `(0, 1]`.
pub fn check_monotonic_window(profile: &RadialProfile, cfg: &AnalysisConfig) -> Verdict {
    if profile.m < 2 {
        return Verdict::not_applicable("needs M >= 2");
    }
    let (lo, hi) = window_roots(profile.m);
    let k0 = profile.first_positive();
    let mut near = Vec::new();
    let mut signs = Vec::new();
    let mut degenerate = true;
    for i in k0..profile.len() {
        let st = profile.state(i);
        let zd = zdot_closed_form(profile.m, &st);
        if !zd.degenerate {
            degenerate = false;
        }
        let scale = profile.m_f64().powi(2) * (st.r / st.radius).powi(2) / st.radius
            + st.rdot * st.rdot / st.radius;
        if zd.value.abs() > cfg.window_tol * scale {
            signs.push(zd.value.signum());
        }
        if st.radius < cfg.delta_probe && st.r > 0.0 {
            near.push((st.radius, st.radius * st.rdot / st.r, zd.value, scale));
        }
    }
    let changes = signs.windows(2).filter(|w| w[0] != w[1]).count();
    if degenerate || near.is_empty() {
        return Verdict::new(Status::Degenerate, None).with_note("r vanishes on the probe interval");
    }
    let tol = cfg.window_tol;
    let nonneg = near.iter().all(|&(_, _, z, s)| z >= -tol * s);
    let nonpos = near.iter().all(|&(_, _, z, s)| z <= tol * s);
    let mut worst = Worst(None);
    let (ok, case) = if nonneg {
        // distance inside the window [λ−, λ+]
        for &(x, ratio, _, _) in &near {
            worst.see(x, (ratio - lo).min(hi - ratio));
        }
        (near.iter().all(|&(_, ratio, _, _)| ratio >= lo - tol && ratio <= hi + tol), "zdot >= 0")
    } else if nonpos {
        let below = near.iter().all(|&(_, ratio, _, _)| ratio <= lo + tol);
        let above = near.iter().all(|&(_, ratio, _, _)| ratio >= hi - tol);
        for &(x, ratio, _, _) in &near {
            worst.see(x, if above { ratio - hi } else { lo - ratio });
        }
        (below || above, if above { "zdot <= 0, (r/R)' > 0" } else { "zdot <= 0, (r/R)' < 0" })
    } else {
        for &(x, _, z, _) in &near {
            worst.see(x, z);
        }
        (false, "z not monotone near the origin")
    };
    let note = format!("{case}; {changes} sign change(s) of zdot on (0, 1]");
    let status = if ok && changes <= 1 { Status::Pass } else { Status::Fail };
    Verdict::new(status, worst.0).with_note(note)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SubsolutionSummary {
    pub verdict_status: Status,
    pub worst: Option<(f64, f64)>,
    pub worst_squared: Option<(f64, f64)>,
}

/// Both forms of the `z` inequality, scaled by the local magnitude, on interior
/// nodes with `R ≥ probe_floor`.
fn subsolution_scan(spec: &PenaltySpec, profile: &RadialProfile, cfg: &AnalysisConfig) -> Result<SubsolutionSummary> {
    let cm = c_m(profile.m)?;
    let mut worst = Worst(None);
    let mut worst_sq = Worst(None);
    let mut failed = false;
    let mut any = false;
    let lo = profile.first_positive() + 1;
    for i in lo..profile.len().saturating_sub(1) {
        let x = profile.mesh[i];
        if x < cfg.probe_floor {
            continue;
        }
        let q = subsolution_quantity(spec, profile, i)?;
        let scale = q.zddot.abs() + (q.laplacian - q.zddot).abs() + cm * q.curvature * q.zdot.abs();
        if scale == 0.0 {
            continue;
        }
        any = true;
        let rel = q.value / scale;
        worst.see(x, rel);
        if rel < -cfg.subsolution_tol {
            failed = true;
        }
        let sq_scale = scale + cm * q.curvature * q.zdot * q.zdot;
        worst_sq.see(x, q.squared_variant / sq_scale);
    }
    let status = if failed {
        Status::Fail
    } else if any {
        Status::Pass
    } else {
        Status::Degenerate
    };
    Ok(SubsolutionSummary { verdict_status: status, worst: worst.0, worst_squared: worst_sq.0 })
}

pub fn check_subsolution(spec: &PenaltySpec, profile: &RadialProfile, cfg: &AnalysisConfig) -> Verdict {
    if profile.m < 2 {
        return Verdict::not_applicable("c_M needs M >= 2");
    }
    match subsolution_scan(spec, profile, cfg) {
        Ok(s) => Verdict::new(s.verdict_status, s.worst),
        Err(e) => Verdict::new(Status::Fail, None).with_note(e.to_string()),
    }
}

/// `liminf r̈ ≥ 0` on the first decade and `|r̈ R|` at the innermost node.
pub fn check_rddot_origin(profile: &RadialProfile, cfg: &AnalysisConfig) -> Verdict {
    let k0 = profile.first_positive();
    if profile.len() < k0 + 3 {
        return Verdict::new(Status::Fail, None).with_note("fewer than 3 nodes with R > 0");
    }
    let xs = &profile.mesh[k0..];
    let rddot = first_derivative(xs, &profile.rdot[k0..]);
    let decade: Vec<usize> = (0..xs.len()).take_while(|&i| xs[i] <= 10.0 * xs[0] * (1.0 + 1e-12)).collect();
    let big = decade.iter().fold(0.0f64, |a, &i| a.max(rddot[i].abs()));
    let mut worst = Worst(None);
    let mut notes = Vec::new();
    for &i in &decade {
        worst.see(xs[i], rddot[i]);
        if rddot[i] < -cfg.rddot_tol * big.max(1.0) && notes.is_empty() {
            notes.push(format!("rddot = {:e} at R = {:e}", rddot[i], xs[i]));
        }
    }
    let tail = (rddot[0] * xs[0]).abs();
    if tail > cfg.rddot_tol {
        notes.push(format!("|rddot R| = {tail:e} at the innermost node"));
    }
    if notes.is_empty() {
        Verdict::new(Status::Pass, worst.0)
    } else {
        Verdict::new(Status::Fail, worst.0).with_note(notes.join("; "))
    }
}

/// `d(0) = 0` and `ṙ(0) = 0`, extrapolated from the three smallest positive
/// radii. Both are statements about `M ≥ 2`; for `M = 1` the identity has
/// `d ≡ 1`.
pub fn check_origin(profile: &RadialProfile, cfg: &AnalysisConfig) -> Verdict {
    if profile.m < 2 {
        return Verdict::not_applicable("needs M >= 2");
    }
    let m = profile.m;
    let d0 = extrapolate_origin(profile, |i| det_value(m, profile.mesh[i], profile.r[i], profile.rdot[i]));
    let v0 = extrapolate_origin(profile, |i| profile.rdot[i]);
    let (d0, v0) = match (d0, v0) {
        (Ok(d0), Ok(v0)) => (d0, v0),
        (Err(e), _) | (_, Err(e)) => return Verdict::new(Status::Fail, None).with_note(e.to_string()),
    };
    let mut notes = Vec::new();
    if !(d0.abs() <= cfg.origin_det_tol) {
        notes.push(format!("d(0) = {d0:e}"));
    }
    if !(v0.abs() <= cfg.origin_rdot_tol) {
        notes.push(format!("rdot(0) = {v0:e}"));
    }
    let worst = Some((0.0, d0.abs().max(v0.abs())));
    if notes.is_empty() {
        Verdict::new(Status::Pass, worst).with_note(format!("d(0) = {d0:e}, rdot(0) = {v0:e}"))
    } else {
        Verdict::new(Status::Fail, worst).with_note(notes.join("; "))
    }
}

pub fn check_boundary(profile: &RadialProfile, cfg: &AnalysisConfig) -> Verdict {
    let miss = profile.boundary_value() - 1.0;
    let status = if miss.abs() <= cfg.boundary_tol { Status::Pass } else { Status::Fail };
    Verdict::new(status, Some((1.0, miss)))
}

pub fn check_residual(spec: &PenaltySpec, profile: &RadialProfile, cfg: &AnalysisConfig) -> (Verdict, f64) {
    let res = strong_residual(spec, profile);
    let sup = residual_sup(&res);
    let mut at = None;
    for i in 1..res.len().saturating_sub(1) {
        if res[i] == sup {
            at = Some((profile.mesh[i], sup));
            break;
        }
    }
    let status = if sup <= cfg.residual_tol { Status::Pass } else { Status::Fail };
    (Verdict::new(status, at), sup)
}

/// `M² − C ρ''(d) R^{2α} ≤ R ṙ/r + R² r̈/r < M²` on `(0, δ_probe)`, with
/// `c_α = max |r̈| R^{1−α}` and `C = M² c_α² / α²`.
pub fn check_necessary_condition(
    spec: &PenaltySpec,
    profile: &RadialProfile,
    alpha: f64,
    cfg: &AnalysisConfig,
) -> Result<Verdict> {
    if let Classification::Delayed { delta } = classify_liftoff(profile, cfg.classify_tol)? {
        return Err(Error::InvalidArgument(format!(
            "the necessary condition applies to immediate lift-off only (delta = {delta})"
        )));
    }
    if profile.m < 2 {
        return Err(Error::InvalidArgument("the necessary condition needs M >= 2".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let k0 = profile.first_positive();
    let xs = &profile.mesh[k0..];
    let rddot = first_derivative(xs, &profile.rdot[k0..]);
    let c_alpha = xs.iter().zip(&rddot).fold(0.0f64, |a, (x, v)| a.max(v.abs() * x.powf(1.0 - alpha)));
    let m2 = profile.m_f64().powi(2);
    let big_c = m2 * c_alpha * c_alpha / (alpha * alpha);
    let slack = cfg.necessary_tol * m2;
    let mut worst = Worst(None);
    let (mut inside, mut equal, mut outside, mut probed) = (0, 0, 0, 0);
    for (k, &x) in xs.iter().enumerate() {
        let i = k0 + k;
        let r = profile.r[i];
        if x >= cfg.delta_probe || r <= 0.0 {
            continue;
        }
        probed += 1;
        let mid = x * profile.rdot[i] / r + x * x * rddot[k] / r;
        let curv = spec.rho_second(det_value(profile.m, x, r, profile.rdot[i]));
        let lower = m2 - big_c * curv * x.powf(2.0 * alpha);
        let margin = (mid - lower).min(m2 - mid);
        worst.see(x, margin);
        if (mid - m2).abs() <= slack && curv == 0.0 {
            equal += 1;
        } else if mid >= lower - slack && mid < m2 + slack {
            inside += 1;
        } else {
            outside += 1;
        }
    }
    let note = format!("C = {big_c:e}; {inside} inside, {equal} at equality, {outside} outside of {probed}");
    let status = if probed == 0 {
        Status::NotApplicable
    } else if outside > 0 {
        Status::Fail
    } else if equal > 0 && inside == 0 {
        Status::Degenerate
    } else {
        Status::Pass
    };
    Ok(Verdict::new(status, worst.0).with_note(note))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub spec: PenaltySpec,
    #[serde(rename = "M")]
    pub m: u32,
    pub nodes: usize,
    pub solver: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub parameter: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionReport {
    pub classification: Classification,
    pub checks: BTreeMap<String, Verdict>,
    /// Quantities logged but never asserted.
    pub informative: BTreeMap<String, f64>,
    pub residual_sup: f64,
    pub energy: EnergyBreakdown,
    pub metadata: Metadata,
}

/// Checks whose failure makes a profile unacceptable.
/// `consistency` is only present on reports of profiles read from disk.
pub const HARD_CHECKS: [&str; 6] = ["signs", "window", "subsolution", "origin", "boundary", "consistency"];

impl SolutionReport {
    pub fn hard_failures(&self) -> Vec<&str> {
        HARD_CHECKS
            .iter()
            .copied()
            .filter(|name| self.checks.get(*name).is_some_and(|v| v.status.failed()))
            .collect()
    }

    pub fn failures(&self) -> Vec<&str> {
        self.checks.iter().filter(|(_, v)| v.status.failed()).map(|(k, _)| k.as_str()).collect()
    }

    pub fn d_m_estimate(&self) -> Option<f64> {
        match self.classification {
            Classification::Immediate { d_m_estimate, .. } => Some(d_m_estimate),
            Classification::Delayed { .. } => None,
        }
    }
}

pub fn full_report(
    spec: &PenaltySpec,
    profile: &RadialProfile,
    solver: &str,
    parameter: Option<f64>,
    cfg: &AnalysisConfig,
) -> Result<SolutionReport> {
    let classification = classify_liftoff(profile, cfg.classify_tol)?;
    let energy = radial_energy(spec, profile)?;
    let mut checks = BTreeMap::new();
    let mut informative = BTreeMap::new();
    checks.insert("signs".to_string(), check_signs(profile, cfg));
    checks.insert("window".to_string(), check_monotonic_window(profile, cfg));
    checks.insert("subsolution".to_string(), check_subsolution(spec, profile, cfg));
    checks.insert("origin".to_string(), check_origin(profile, cfg));
    checks.insert("rddot_origin".to_string(), check_rddot_origin(profile, cfg));
    checks.insert("boundary".to_string(), check_boundary(profile, cfg));
    let (residual, residual_sup) = check_residual(spec, profile, cfg);
    checks.insert("residual".to_string(), residual);
    if let Classification::Immediate { d_m_estimate, exponent, .. } = classification {
        let m = profile.m_f64();
        informative.insert("d_m_relative_deviation".to_string(), (d_m_estimate - m) / m);
        informative.insert("fitted_exponent".to_string(), exponent);
        if profile.m >= 2 {
            checks.insert(
                "necessary_condition".to_string(),
                check_necessary_condition(spec, profile, cfg.alpha, cfg)?,
            );
        }
    }
    if profile.m >= 2 {
        if let Ok(s) = subsolution_scan(spec, profile, cfg) {
            if let Some((_, v)) = s.worst_squared {
                informative.insert("subsolution_squared_worst".to_string(), v);
            }
        }
    }
    Ok(SolutionReport {
        classification,
        checks,
        informative,
        residual_sup,
        energy,
        metadata: Metadata { spec: *spec, m: profile.m, nodes: profile.len(), solver: solver.to_string(), parameter },
    })
}
