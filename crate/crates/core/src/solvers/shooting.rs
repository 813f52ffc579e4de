//! Shooting on the explicit system `(r, ṙ)' = (ṙ, r̈(R, r, ṙ))`.
//!
//! Immediate branch: seed `r = a ε₀^M`, `ṙ = M a ε₀^{M−1}` and search `a`.
//! Delayed branch: start at `R = δ` with `r = 0`, `ṙ = η` and search `δ`,
//! then shrink the kick `η` and demand that `δ` does not move.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, SolveError};
use crate::integrator::{integrate, IntegratorOptions};
use crate::kinematics::RadialProfile;
use crate::mesh::{graded_mesh, DEFAULT_EPS0, DEFAULT_RATIO};
use crate::ode::{rddot_explicit, OdeState};
use crate::penalty::{PenaltyKind, PenaltySpec};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "branch", rename_all = "snake_case")]
pub enum Branch {
    Immediate { a_bracket: (f64, f64) },
    Delayed { delta_bracket: (f64, f64) },
}

impl Branch {
    pub fn immediate() -> Self {
        Branch::Immediate { a_bracket: (1e-4, 1e4) }
    }

    pub fn delayed() -> Self {
        Branch::Delayed { delta_bracket: (1e-3, 1.0 - 1e-3) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShootingConfig {
    pub m: u32,
    pub branch: Branch,
    pub eps0: f64,
    pub nodes: usize,
    pub grading: f64,
    pub atol: f64,
    pub rtol: f64,
    pub max_iterations: usize,
    /// Accepted `|r(1) − 1|`.
    pub boundary_tol: f64,
    /// Where `ρ''` vanishes identically near the start (delayed penalty),
    /// use the exact local solution there instead of integrating.
    pub exact_pre_threshold: bool,
    /// Initial delayed-branch kick `ṙ(δ) = η`.
    pub kick: f64,
    /// Number of tenfold kick reductions for the robustness test.
    pub kick_reductions: usize,
    /// Allowed change of `δ` between successive kicks.
    pub kick_tol: f64,
}

impl ShootingConfig {
    pub fn immediate(m: u32) -> Self {
        Self::with_branch(m, Branch::immediate())
    }

    pub fn delayed(m: u32) -> Self {
        Self::with_branch(m, Branch::delayed())
    }

    pub fn with_branch(m: u32, branch: Branch) -> Self {
        Self {
            m,
            branch,
            eps0: DEFAULT_EPS0,
            nodes: 2048,
            grading: DEFAULT_RATIO,
            atol: 1e-10,
            rtol: 1e-10,
            max_iterations: 200,
            boundary_tol: 1e-9,
            exact_pre_threshold: true,
            kick: 1e-3,
            kick_reductions: 2,
            kick_tol: 1e-6,
        }
    }

    pub fn validate(&self) -> std::result::Result<(), SolveError> {
        let bad = |msg: String| Err(SolveError::Config(msg));
        if self.m == 0 {
            return bad("M must be >= 1".into());
        }
        let (lo, hi) = match self.branch {
            Branch::Immediate { a_bracket } => a_bracket,
            Branch::Delayed { delta_bracket } => delta_bracket,
        };
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return bad(format!("bracket ({lo}, {hi}) is not ordered"));
        }
        if let Branch::Delayed { .. } = self.branch {
            if self.m < 2 {
                return bad("the delayed branch needs M >= 2".into());
            }
            if !(lo > 0.0 && hi < 1.0) {
                return bad(format!("delta bracket ({lo}, {hi}) must lie inside (0, 1)"));
            }
            if !(self.kick > 0.0 && self.kick_tol > 0.0) {
                return bad("kick and kick tolerance must be > 0".into());
            }
        }
        if !(self.eps0 > 0.0 && self.eps0 < 1.0) {
            return bad(format!("eps0 must lie in (0, 1), got {}", self.eps0));
        }
        if !(self.atol > 0.0 && self.rtol > 0.0 && self.boundary_tol > 0.0) {
            return bad("tolerances must be > 0".into());
        }
        if self.nodes < 16 {
            return bad(format!("need at least 16 nodes, got {}", self.nodes));
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be >= 1".into());
        }
        Ok(())
    }

    fn mesh(&self) -> Result<Vec<f64>> {
        graded_mesh(self.nodes, self.eps0, self.grading)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShootingSolution {
    pub profile: RadialProfile,
    /// `a` on the immediate branch, `δ` on the delayed one.
    pub parameter: f64,
    pub miss: f64,
    pub iterations: usize,
    /// Every `(parameter, miss)` evaluated, sorted by parameter.
    pub samples: Vec<(f64, f64)>,
    /// Whether the sampled misses increase with the parameter (immediate) or
    /// decrease with it (delayed). A `false` here means the root may not be
    /// unique and is surfaced rather than resolved.
    pub monotone: bool,
    /// Radius up to which the exact local form was used, if any.
    pub threshold: Option<f64>,
    /// Kick used for the returned delayed profile.
    pub kick: Option<f64>,
}

/// Radius where `d = M² a² R^{2M−2}` of `a R^M` reaches `level`.
fn power_threshold(m: u32, a: f64, level: f64) -> Option<f64> {
    if m < 2 || a <= 0.0 {
        return None;
    }
    let mf = f64::from(m);
    Some((level / (mf * mf * a * a)).powf(1.0 / (2.0 * mf - 2.0)))
}

fn integrate_from(
    spec: &PenaltySpec,
    cfg: &ShootingConfig,
    start: f64,
    seed: [f64; 2],
    outputs: &[f64],
    parameter: f64,
) -> std::result::Result<Vec<[f64; 2]>, SolveError> {
    // Absolute error weights follow the seed; a fixed atol would let errors
    // of that size excite the growing mode long before r reaches it.
    let scale_r = seed[0].abs().max(seed[1].abs() * start);
    let scale_v = seed[1].abs().max(seed[0].abs() / start);
    let atol = [cfg.atol * scale_r.max(f64::MIN_POSITIVE), cfg.atol * scale_v.max(f64::MIN_POSITIVE)];
    let opts = IntegratorOptions::new(cfg.rtol, atol);
    let m = cfg.m;
    let rhs = |x: f64, y: &[f64; 2]| {
        [y[1], rddot_explicit(spec, m, &OdeState { radius: x, r: y[0], rdot: y[1] })]
    };
    integrate(rhs, start, seed, outputs, &opts)
        .map(|(ys, _)| ys)
        .map_err(|e| SolveError::BlowUp { parameter, reason: e.to_string() })
}

/// Trajectory of the immediate branch for a given `a`.
pub fn immediate_trajectory(
    spec: &PenaltySpec,
    cfg: &ShootingConfig,
    a: f64,
) -> Result<(RadialProfile, Option<f64>)> {
    let mesh = cfg.mesh()?;
    let (m, mf) = (cfg.m, f64::from(cfg.m));
    let mi = m as i32;
    let exact = |x: f64| (a * x.powi(mi), a * mf * x.powi(mi - 1));
    if a == 0.0 {
        let n = mesh.len();
        return Ok((RadialProfile::new(m, mesh, vec![0.0; n], vec![0.0; n])?, None));
    }
    let mut start = cfg.eps0;
    let mut threshold = None;
    if cfg.exact_pre_threshold {
        if let PenaltyKind::DelayedSmoothStep { delay } = spec.kind {
            if let Some(t) = power_threshold(m, a.abs(), delay) {
                if t > cfg.eps0 {
                    start = t.min(1.0);
                    threshold = Some(start);
                }
            }
        }
    }
    let split = mesh.partition_point(|&x| x <= start);
    let mut r = Vec::with_capacity(mesh.len());
    let mut rdot = Vec::with_capacity(mesh.len());
    for &x in &mesh[..split] {
        let (a0, a1) = exact(x);
        r.push(a0);
        rdot.push(a1);
    }
    if split < mesh.len() {
        let (r0, v0) = exact(start);
        let ys = integrate_from(spec, cfg, start, [r0, v0], &mesh[split..], a)?;
        for y in ys {
            r.push(y[0]);
            rdot.push(y[1]);
        }
    }
    let profile = RadialProfile::new(m, mesh, r, rdot)
        .map_err(|e| SolveError::BlowUp { parameter: a, reason: e.to_string() })?;
    Ok((profile, threshold))
}

/// `r(1; a) − 1`.
pub fn miss_immediate(spec: &PenaltySpec, cfg: &ShootingConfig, a: f64) -> Result<f64> {
    Ok(immediate_trajectory(spec, cfg, a)?.0.boundary_value() - 1.0)
}

/// Closed-form start of the delayed branch where `ρ'' = 0`:
/// `r = A (R^M − δ^{2M} R^{−M})`, `A = η / (2 M δ^{M−1})`.
fn kernel_from_zero(m: u32, delta: f64, kick: f64, x: f64) -> (f64, f64) {
    let mf = f64::from(m);
    let mi = m as i32;
    let amp = kick / (2.0 * mf * delta.powi(mi - 1));
    let d2m = delta.powi(2 * mi);
    (
        amp * (x.powi(mi) - d2m * x.powi(-mi)),
        amp * mf * (x.powi(mi - 1) + d2m * x.powi(-mi - 1)),
    )
}

/// First radius in `(δ, 1]` where the closed-form start reaches `d = level`.
fn kernel_threshold(m: u32, delta: f64, kick: f64, level: f64) -> Option<f64> {
    let det = |x: f64| {
        let (r, v) = kernel_from_zero(m, delta, kick, x);
        f64::from(m) * r * v / x
    };
    if det(1.0) <= level {
        return Some(1.0);
    }
    let (mut lo, mut hi) = (delta, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if det(mid) <= level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo > delta).then_some(lo)
}

/// Trajectory of the delayed branch: `r ≡ 0` below `δ`, kicked start at `δ`.
pub fn delayed_trajectory(
    spec: &PenaltySpec,
    cfg: &ShootingConfig,
    delta: f64,
    kick: f64,
) -> Result<(RadialProfile, Option<f64>)> {
    let mesh = cfg.mesh()?;
    let m = cfg.m;
    let mut start = delta;
    let mut seed = [0.0, kick];
    let mut threshold = None;
    let mut closed_form_until = delta;
    if cfg.exact_pre_threshold {
        if let PenaltyKind::DelayedSmoothStep { delay } = spec.kind {
            if let Some(t) = kernel_threshold(m, delta, kick, delay) {
                let (r0, v0) = kernel_from_zero(m, delta, kick, t);
                start = t;
                seed = [r0, v0];
                threshold = Some(t);
                closed_form_until = t;
            }
        }
    }
    let split = mesh.partition_point(|&x| x <= start);
    let mut r = Vec::with_capacity(mesh.len());
    let mut rdot = Vec::with_capacity(mesh.len());
    for &x in &mesh[..split] {
        if x <= delta {
            r.push(0.0);
            rdot.push(0.0);
        } else {
            debug_assert!(x <= closed_form_until);
            let (a0, a1) = kernel_from_zero(m, delta, kick, x);
            r.push(a0);
            rdot.push(a1);
        }
    }
    if split < mesh.len() {
        let ys = integrate_from(spec, cfg, start, seed, &mesh[split..], delta)?;
        for y in ys {
            r.push(y[0]);
            rdot.push(y[1]);
        }
    }
    let profile = RadialProfile::new(m, mesh, r, rdot)
        .map_err(|e| SolveError::BlowUp { parameter: delta, reason: e.to_string() })?;
    Ok((profile, threshold))
}

struct Root {
    parameter: f64,
    miss: f64,
    iterations: usize,
    samples: Vec<(f64, f64)>,
}

/// Illinois-accelerated false position on a bracketed sign change, in
/// `log` of the parameter when the bracket is positive.
fn find_root(
    mut miss: impl FnMut(f64) -> Result<f64>,
    lo: f64,
    hi: f64,
    tol: f64,
    max_iterations: usize,
) -> Result<Root> {
    let logscale = lo > 0.0;
    let to_param = |u: f64| if logscale { u.exp() } else { u };
    let (mut ulo, mut uhi) = if logscale { (lo.ln(), hi.ln()) } else { (lo, hi) };
    let mut samples = Vec::new();
    let mut flo = miss(lo)?;
    let mut fhi = miss(hi)?;
    samples.push((lo, flo));
    samples.push((hi, fhi));
    if flo == 0.0 || fhi == 0.0 {
        let (p, f) = if flo == 0.0 { (lo, flo) } else { (hi, fhi) };
        return Ok(Root { parameter: p, miss: f, iterations: 0, samples });
    }
    if flo.signum() == fhi.signum() {
        return Err(SolveError::BracketNotStraddled { lo, hi, miss_lo: flo, miss_hi: fhi }.into());
    }
    let mut best = if flo.abs() < fhi.abs() { (lo, flo) } else { (hi, fhi) };
    let mut side = 0i8;
    for it in 1..=max_iterations {
        let mut u = (ulo * fhi - uhi * flo) / (fhi - flo);
        if !(u > ulo && u < uhi) {
            u = 0.5 * (ulo + uhi);
        }
        let p = to_param(u);
        let f = miss(p)?;
        samples.push((p, f));
        if f.abs() < best.1.abs() {
            best = (p, f);
        }
        if f.abs() <= tol {
            return Ok(Root { parameter: p, miss: f, iterations: it, samples });
        }
        if f.signum() == flo.signum() {
            ulo = u;
            flo = f;
            if side == -1 {
                fhi *= 0.5;
            }
            side = -1;
        } else {
            uhi = u;
            fhi = f;
            if side == 1 {
                flo *= 0.5;
            }
            side = 1;
        }
        if uhi - ulo <= 4.0 * f64::EPSILON * ulo.abs().max(uhi.abs()).max(1.0) {
            break;
        }
    }
    Err(SolveError::NoConvergence { iterations: samples.len() - 2, miss: best.1 }.into())
}

fn monotone(samples: &mut [(f64, f64)], increasing: bool) -> bool {
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    samples.windows(2).all(|w| if increasing { w[1].1 >= w[0].1 } else { w[1].1 <= w[0].1 })
}

pub fn shoot_immediate(spec: &PenaltySpec, cfg: &ShootingConfig) -> Result<ShootingSolution> {
    spec.validate()?;
    cfg.validate()?;
    let Branch::Immediate { a_bracket: (lo, hi) } = cfg.branch else {
        return Err(SolveError::Config("shoot_immediate needs the immediate branch".into()).into());
    };
    let root = find_root(|a| miss_immediate(spec, cfg, a), lo, hi, cfg.boundary_tol, cfg.max_iterations)?;
    let (profile, threshold) = immediate_trajectory(spec, cfg, root.parameter)?;
    let mut samples = root.samples;
    let mono = monotone(&mut samples, true);
    Ok(ShootingSolution {
        profile,
        parameter: root.parameter,
        miss: root.miss,
        iterations: root.iterations,
        samples,
        monotone: mono,
        threshold,
        kick: None,
    })
}

pub fn shoot_delayed(spec: &PenaltySpec, cfg: &ShootingConfig) -> Result<ShootingSolution> {
    spec.validate()?;
    cfg.validate()?;
    let Branch::Delayed { delta_bracket: (lo, hi) } = cfg.branch else {
        return Err(SolveError::Config("shoot_delayed needs the delayed branch".into()).into());
    };
    let mut previous: Option<f64> = None;
    let mut kick = cfg.kick;
    let mut last = None;
    for _ in 0..=cfg.kick_reductions {
        let miss = |delta: f64| -> Result<f64> {
            Ok(delayed_trajectory(spec, cfg, delta, kick)?.0.boundary_value() - 1.0)
        };
        let root = match find_root(miss, lo, hi, cfg.boundary_tol, cfg.max_iterations) {
            Ok(root) => root,
            Err(Error::Solve(SolveError::BracketNotStraddled { .. })) => {
                return Err(SolveError::NoDelayedSolution { lo, hi, kick }.into());
            }
            Err(e) => return Err(e),
        };
        if let Some(prev) = previous {
            let change = (root.parameter - prev).abs();
            if change > cfg.kick_tol {
                return Err(SolveError::DelayedNotRobust { kick, change }.into());
            }
        }
        previous = Some(root.parameter);
        last = Some((root, kick));
        kick *= 0.1;
    }
    let (root, kick) = last.expect("at least one kick level");
    let (profile, threshold) = delayed_trajectory(spec, cfg, root.parameter, kick)?;
    let mut samples = root.samples;
    let mono = monotone(&mut samples, false);
    Ok(ShootingSolution {
        profile,
        parameter: root.parameter,
        miss: root.miss,
        iterations: root.iterations,
        samples,
        monotone: mono,
        threshold,
        kick: Some(kick),
    })
}
