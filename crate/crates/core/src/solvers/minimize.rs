//! Direct minimization of the discretized radial energy.
//!
//! The unknowns are `r` at the nodes of a mesh containing the origin, with
//! `r(0) = 0` and `r(1) = 1` pinned. On each cell `[Rᵢ, Rᵢ₊₁]` the energy
//! density is evaluated at the midpoint with the forward difference for `ṙ`:
//!
//! ```text
//! e = 2π h R_m [½(ṙ² + M² r_m²/R_m²) + ρ(M r_m ṙ / R_m)]
//! ```
//!
//! so the gradient below is exact for the discrete energy. Steps are Newton
//! steps on the tridiagonal Hessian when it is positive definite, otherwise
//! gradient steps preconditioned by the Dirichlet part of the Hessian.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SolveError};
use crate::kinematics::RadialProfile;
use crate::mesh::{first_derivative, graded_mesh_with_origin, interpolate_linear, DEFAULT_EPS0, DEFAULT_RATIO};
use crate::penalty::PenaltySpec;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimizeConfig {
    pub m: u32,
    pub nodes: usize,
    pub eps0: f64,
    pub grading: f64,
    /// Stop when the sup-norm of the projected gradient falls below this.
    pub grad_tol: f64,
    pub max_iterations: usize,
    /// Sufficient-decrease constant of the Armijo rule.
    pub armijo: f64,
    pub backtrack: f64,
    pub max_backtracks: usize,
    pub self_test_tol: f64,
}

impl MinimizeConfig {
    pub fn new(m: u32, nodes: usize) -> Self {
        Self {
            m,
            nodes,
            eps0: DEFAULT_EPS0,
            grading: DEFAULT_RATIO,
            grad_tol: 1e-10,
            max_iterations: 20_000,
            armijo: 1e-4,
            backtrack: 0.5,
            max_backtracks: 60,
            self_test_tol: 1e-6,
        }
    }

    pub fn validate(&self) -> std::result::Result<(), SolveError> {
        let bad = |msg: String| Err(SolveError::Config(msg));
        if self.m == 0 {
            return bad("M must be >= 1".into());
        }
        if self.nodes < 16 {
            return bad(format!("need at least 16 nodes, got {}", self.nodes));
        }
        if !(self.grad_tol > 0.0 && self.self_test_tol > 0.0) {
            return bad("tolerances must be > 0".into());
        }
        if !(self.armijo > 0.0 && self.armijo < 1.0 && self.backtrack > 0.0 && self.backtrack < 1.0) {
            return bad("line-search constants must lie in (0, 1)".into());
        }
        Ok(())
    }

    pub fn mesh(&self) -> Result<Vec<f64>> {
        graded_mesh_with_origin(self.nodes, self.eps0, self.grading)
    }
}

/// The discrete energy on a fixed mesh.
#[derive(Clone, Copy, Debug)]
pub struct DiscreteEnergy<'a> {
    pub spec: &'a PenaltySpec,
    pub m: u32,
    pub mesh: &'a [f64],
}

struct CellDerivatives {
    grad: [f64; 2],
    hess: [[f64; 2]; 2],
    dirichlet: [[f64; 2]; 2],
}

impl DiscreteEnergy<'_> {
    pub fn cell(&self, c: usize, left: f64, right: f64) -> f64 {
        let (h, rm) = self.geometry(c);
        let mf = f64::from(self.m);
        let v = (right - left) / h;
        let mid = 0.5 * (left + right);
        let ratio = mid / rm;
        let d = mf * ratio * v;
        2.0 * PI * h * rm * (0.5 * (v * v + mf * mf * ratio * ratio) + self.spec.rho(d))
    }

    fn geometry(&self, c: usize) -> (f64, f64) {
        let h = self.mesh[c + 1] - self.mesh[c];
        (h, 0.5 * (self.mesh[c] + self.mesh[c + 1]))
    }

    pub fn energy(&self, r: &[f64]) -> f64 {
        (0..self.mesh.len() - 1).map(|c| self.cell(c, r[c], r[c + 1])).sum()
    }

    /// `E(r + step) − E(r)` as a sum of per-cell differences, which keeps the
    /// roundoff at the level of the individual cells.
    pub fn energy_change(&self, r: &[f64], trial: &[f64]) -> f64 {
        (0..self.mesh.len() - 1)
            .map(|c| self.cell(c, trial[c], trial[c + 1]) - self.cell(c, r[c], r[c + 1]))
            .sum()
    }

    fn derivatives(&self, c: usize, left: f64, right: f64) -> CellDerivatives {
        let (h, rm) = self.geometry(c);
        let mf = f64::from(self.m);
        let w = 2.0 * PI * h * rm;
        let v = (right - left) / h;
        let mid = 0.5 * (left + right);
        let dv = mf * mid / rm; // ∂d/∂ṙ
        let dm = mf * v / rm; // ∂d/∂r_m
        let d = dv * v;
        let slope = self.spec.rho_prime(d);
        let curv = self.spec.rho_second(d);
        let e_v = w * (v + slope * dv);
        let e_m = w * (mf * mf * mid / (rm * rm) + slope * dm);
        let e_vv = w * (1.0 + curv * dv * dv);
        let e_mm = w * (mf * mf / (rm * rm) + curv * dm * dm);
        let e_vm = w * (curv * dv * dm + slope * mf / rm);
        // (ṙ, r_m) = J (left, right), J = [[-1/h, 1/h], [1/2, 1/2]]
        let j = [[-1.0 / h, 1.0 / h], [0.5, 0.5]];
        let grad = [j[0][0] * e_v + j[1][0] * e_m, j[0][1] * e_v + j[1][1] * e_m];
        let pull = |a: [[f64; 2]; 2]| {
            let mut out = [[0.0; 2]; 2];
            for p in 0..2 {
                for q in 0..2 {
                    out[p][q] = j[0][p] * (a[0][0] * j[0][q] + a[0][1] * j[1][q])
                        + j[1][p] * (a[1][0] * j[0][q] + a[1][1] * j[1][q]);
                }
            }
            out
        };
        CellDerivatives {
            grad,
            hess: pull([[e_vv, e_vm], [e_vm, e_mm]]),
            dirichlet: pull([[w, 0.0], [0.0, w * mf * mf / (rm * rm)]]),
        }
    }

    /// Full gradient, including the two pinned end nodes.
    pub fn gradient(&self, r: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; r.len()];
        for c in 0..r.len() - 1 {
            let cd = self.derivatives(c, r[c], r[c + 1]);
            g[c] += cd.grad[0];
            g[c + 1] += cd.grad[1];
        }
        g
    }

    /// Tridiagonal Hessian (and its Dirichlet part) as `(diag, off)` pairs.
    fn hessians(&self, r: &[f64]) -> (Tridiagonal, Tridiagonal) {
        let n = r.len();
        let mut full = Tridiagonal::zeros(n);
        let mut dir = Tridiagonal::zeros(n);
        for c in 0..n - 1 {
            let cd = self.derivatives(c, r[c], r[c + 1]);
            full.add_cell(c, &cd.hess);
            dir.add_cell(c, &cd.dirichlet);
        }
        (full, dir)
    }
}

struct Tridiagonal {
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl Tridiagonal {
    fn zeros(n: usize) -> Self {
        Self { diag: vec![0.0; n], off: vec![0.0; n - 1] }
    }

    fn add_cell(&mut self, c: usize, h: &[[f64; 2]; 2]) {
        self.diag[c] += h[0][0];
        self.diag[c + 1] += h[1][1];
        self.off[c] += h[0][1];
    }

    /// Solve `A x = b` on the interior block `1..n-1` by `LDLᵀ`. `None` if a
    /// pivot is not positive, i.e. the block is not positive definite.
    fn solve_interior(&self, b: &[f64]) -> Option<Vec<f64>> {
        let n = self.diag.len();
        let (lo, hi) = (1, n - 1);
        let mut piv = vec![0.0; n];
        let mut y = vec![0.0; n];
        for i in lo..hi {
            let (mut p, mut rhs) = (self.diag[i], b[i]);
            if i > lo {
                let l = self.off[i - 1] / piv[i - 1];
                p -= l * self.off[i - 1];
                rhs -= l * y[i - 1];
            }
            if !(p > 1e-14 * self.diag[i].abs()) || !p.is_finite() {
                return None;
            }
            piv[i] = p;
            y[i] = rhs;
        }
        let mut x = vec![0.0; n];
        for i in (lo..hi).rev() {
            let mut v = y[i];
            if i + 1 < hi {
                v -= self.off[i] * x[i + 1];
            }
            x[i] = v / piv[i];
        }
        Some(x)
    }
}

/// Norm-wise error between the analytic gradient and central differences,
/// relative to the size of the per-cell gradient contributions. Each component is differenced over the two cells that depend
/// on it, so roundoff is relative to those cells rather than the whole sum.
pub fn gradient_self_test(spec: &PenaltySpec, m: u32, mesh: &[f64], r: &[f64]) -> f64 {
    let energy = DiscreteEnergy { spec, m, mesh };
    let g = energy.gradient(r);
    let n = r.len();
    // Size of the gradient before the two cell contributions cancel; at a
    // stationary profile `g` itself is pure roundoff.
    let mut size = vec![0.0; n];
    for c in 0..n - 1 {
        let cd = energy.derivatives(c, r[c], r[c + 1]);
        size[c] += cd.grad[0].abs();
        size[c + 1] += cd.grad[1].abs();
    }
    let local = |i: usize, value: f64| {
        let mut e = 0.0;
        if i > 0 {
            e += energy.cell(i - 1, r[i - 1], value);
        }
        if i + 1 < n {
            e += energy.cell(i, value, r[i + 1]);
        }
        e
    };
    let (mut diff, mut norm) = (0.0, 0.0);
    for i in 1..n - 1 {
        // Richardson-extrapolated central difference: fourth order, so the
        // step can be large enough to keep cancellation harmless.
        // The cell energies vary on the scale of the local increment of r,
        // which near a uniform stretch is much smaller than r itself.
        let h = (mesh[i] - mesh[i - 1]).min(mesh[i + 1] - mesh[i]);
        let rise = (r[i] - r[i - 1]).abs().max((r[i + 1] - r[i]).abs());
        let natural = (h / mesh[i + 1] * r[i].abs()).max(rise).max(f64::MIN_POSITIVE.sqrt());
        let step = 1e-3 * natural;
        let central = |s: f64| (local(i, r[i] + s) - local(i, r[i] - s)) / (2.0 * s);
        let fd = (4.0 * central(step) - central(2.0 * step)) / 3.0;
        diff += (fd - g[i]).powi(2);
        norm += size[i] * size[i];
    }
    if norm == 0.0 {
        diff.sqrt()
    } else {
        (diff / norm).sqrt()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MinimizeOutcome {
    pub profile: RadialProfile,
    /// Discrete (midpoint-rule) energy of the returned profile.
    pub energy: f64,
    pub iterations: usize,
    pub gradient_sup: f64,
    pub self_test_error: f64,
    pub newton_steps: usize,
    pub preconditioned_steps: usize,
}

fn sup_interior(g: &[f64]) -> f64 {
    g[1..g.len() - 1].iter().fold(0.0, |a, &b| a.max(b.abs()))
}

fn norm2_interior(g: &[f64]) -> f64 {
    g[1..g.len() - 1].iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Minimize on the mesh of `cfg`, starting from `initial` interpolated onto it.
pub fn minimize(
    spec: &PenaltySpec,
    cfg: &MinimizeConfig,
    initial: &RadialProfile,
) -> Result<MinimizeOutcome> {
    spec.validate()?;
    cfg.validate()?;
    let end = initial.boundary_value();
    if (end - 1.0).abs() > 1e-12 || *initial.mesh.last().unwrap() != 1.0 {
        return Err(SolveError::Config(format!("initial profile must satisfy r(1) = 1, got {end}")).into());
    }
    let mesh = cfg.mesh()?;
    let mut r: Vec<f64> = mesh.iter().map(|&x| interpolate_linear(&initial.mesh, &initial.r, x)).collect();
    let n = r.len();
    r[0] = 0.0;
    r[n - 1] = 1.0;
    let energy = DiscreteEnergy { spec, m: cfg.m, mesh: &mesh };

    let self_test_error = gradient_self_test(spec, cfg.m, &mesh, &r);
    if !(self_test_error <= cfg.self_test_tol) {
        return Err(SolveError::GradientSelfTest { error: self_test_error, tolerance: cfg.self_test_tol }.into());
    }
    let mut value = energy.energy(&r);
    if !value.is_finite() {
        return Err(SolveError::NonFiniteEnergy { iteration: 0 }.into());
    }

    let mut grad = energy.gradient(&r);
    let (mut newton_steps, mut preconditioned_steps) = (0, 0);
    let mut iterations = 0;
    loop {
        let gsup = sup_interior(&grad);
        if gsup <= cfg.grad_tol {
            break;
        }
        if iterations >= cfg.max_iterations {
            return Err(SolveError::MaxIterations { iterations, gradient: gsup }.into());
        }
        iterations += 1;
        let rhs: Vec<f64> = grad.iter().map(|g| -g).collect();
        let (full, dirichlet) = energy.hessians(&r);
        let slope_of = |p: &[f64]| (1..n - 1).map(|i| grad[i] * p[i]).sum::<f64>();
        let mut direction = full.solve_interior(&rhs).filter(|p| slope_of(p) < 0.0);
        if direction.is_some() {
            newton_steps += 1;
        } else {
            direction = dirichlet.solve_interior(&rhs);
            preconditioned_steps += 1;
        }
        let Some(p) = direction else {
            return Err(SolveError::LineSearch { iteration: iterations, gradient: gsup }.into());
        };
        let slope = slope_of(&p);

        let trial_at = |alpha: f64| -> Vec<f64> {
            let mut t = r.clone();
            for i in 1..n - 1 {
                t[i] += alpha * p[i];
            }
            t
        };
        let mut accepted = None;
        let mut alpha = 1.0;
        for _ in 0..cfg.max_backtracks {
            let trial = trial_at(alpha);
            let change = energy.energy_change(&r, &trial);
            if change.is_finite() && change <= cfg.armijo * alpha * slope {
                accepted = Some(trial);
                break;
            }
            alpha *= cfg.backtrack;
        }
        if accepted.is_none() {
            // Near the minimum the predicted decrease drops below the
            // resolution of the energy; fall back to decreasing the gradient.
            let current = norm2_interior(&grad);
            let mut alpha = 1.0;
            for _ in 0..cfg.max_backtracks {
                let trial = trial_at(alpha);
                if norm2_interior(&energy.gradient(&trial)) < current {
                    accepted = Some(trial);
                    break;
                }
                alpha *= cfg.backtrack;
            }
        }
        let Some(next) = accepted else {
            return Err(SolveError::LineSearch { iteration: iterations, gradient: gsup }.into());
        };
        r = next;
        value = energy.energy(&r);
        if !value.is_finite() {
            return Err(SolveError::NonFiniteEnergy { iteration: iterations }.into());
        }
        grad = energy.gradient(&r);
    }

    let mut rdot = first_derivative(&mesh, &r);
    // The one-sided quadratic stencil spans the first cell, which is far
    // wider than its neighbour; the piecewise-linear slope is used instead.
    rdot[0] = (r[1] - r[0]) / (mesh[1] - mesh[0]);
    let profile = RadialProfile::new(cfg.m, mesh, r, rdot)?;
    Ok(MinimizeOutcome {
        profile,
        energy: value,
        iterations,
        gradient_sup: sup_interior(&grad),
        self_test_error,
        newton_steps,
        preconditioned_steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(m: u32) -> RadialProfile {
        RadialProfile::new(m, vec![0.0, 1.0], vec![0.0, 1.0], vec![1.0, 1.0]).unwrap()
    }

    #[test]
    fn identity_is_discretely_stationary() {
        let spec = PenaltySpec::smooth_step(1.0, 1.0).unwrap();
        let mesh = graded_mesh_with_origin(64, 1e-6, 1.1).unwrap();
        let e = DiscreteEnergy { spec: &spec, m: 1, mesh: &mesh };
        let g = e.gradient(&mesh);
        assert!(sup_interior(&g) < 1e-14, "{}", sup_interior(&g));
    }

    #[test]
    fn self_test_passes_on_smooth_profile() {
        let spec = PenaltySpec::smooth_step(5.0, 0.5).unwrap();
        let mesh = graded_mesh_with_origin(200, 1e-6, 1.1).unwrap();
        let r: Vec<f64> = mesh.iter().map(|x| x * x * (2.0 - x)).collect();
        assert!(gradient_self_test(&spec, 2, &mesh, &r) < 1e-6);
    }

    #[test]
    fn dirichlet_limit_gives_harmonic_covering() {
        let cfg = MinimizeConfig::new(2, 400);
        let out = minimize(&PenaltySpec::zero(), &cfg, &line(2)).unwrap();
        let err = out
            .profile
            .mesh
            .iter()
            .zip(&out.profile.r)
            .fold(0.0f64, |a, (x, r)| a.max((r - x * x).abs()));
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn m_one_recovers_identity() {
        let spec = PenaltySpec::smooth_step(1.0, 1.0).unwrap();
        let start = RadialProfile::power(1, vec![0.0, 0.25, 0.5, 0.75, 1.0], 1.0).unwrap();
        let start = RadialProfile { r: start.mesh.iter().map(|x| x * x).collect(), ..start };
        let out = minimize(&spec, &MinimizeConfig::new(1, 200), &start).unwrap();
        for (x, r) in out.profile.mesh.iter().zip(&out.profile.r) {
            assert!((r - x).abs() < 1e-8);
        }
    }

    #[test]
    fn rejects_wrong_boundary_value() {
        let bad = RadialProfile::new(2, vec![0.0, 1.0], vec![0.0, 0.5], vec![0.5, 0.5]).unwrap();
        assert!(minimize(&PenaltySpec::zero(), &MinimizeConfig::new(2, 64), &bad).is_err());
    }
}
