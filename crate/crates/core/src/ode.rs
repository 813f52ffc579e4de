//! Right-hand side and diagnostics of the Euler–Lagrange ODE
//!
//! ```text
//! M² r/R − ṙ − R r̈ = M ρ''(d) ḋ r,   d = M r ṙ / R.
//! ```
//!
//! `ḋ` depends on `r̈`, but eliminating `r̈` gives the closed form
//! `ḋ = M[(Rṙ − r)² + (M² − 1) r²] / (R³ + M² ρ''(d) r² R)`, after which `r̈`
//! is explicit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{det_value, z_value, RadialProfile};
use crate::mesh::{first_derivative_at, second_derivative_at};
use crate::penalty::PenaltySpec;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OdeState {
    pub radius: f64,
    pub r: f64,
    pub rdot: f64,
}

impl OdeState {
    pub fn new(radius: f64, r: f64, rdot: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite() && r.is_finite() && rdot.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "state needs R > 0 and finite values, got R = {radius}, r = {r}, rdot = {rdot}"
            )));
        }
        Ok(Self { radius, r, rdot })
    }

    pub fn det(&self, m: u32) -> f64 {
        det_value(m, self.radius, self.r, self.rdot)
    }
}

pub fn ddot_closed_form(spec: &PenaltySpec, m: u32, s: &OdeState) -> f64 {
    let mf = f64::from(m);
    let (x, r, v) = (s.radius, s.r, s.rdot);
    let curv = spec.rho_second(s.det(m));
    let lead = x * v - r;
    let num = mf * (lead * lead + (mf * mf - 1.0) * r * r);
    num / (x * x * x + mf * mf * curv * r * r * x)
}

pub fn rddot_explicit(spec: &PenaltySpec, m: u32, s: &OdeState) -> f64 {
    let mf = f64::from(m);
    let (x, r, v) = (s.radius, s.r, s.rdot);
    let curv = spec.rho_second(s.det(m));
    let forcing = if curv == 0.0 { 0.0 } else { mf * curv * ddot_closed_form(spec, m, s) * r };
    (mf * mf * r / x - v - forcing) / x
}

/// `|M² r/R − ṙ − R r̈ − M ρ''(d) ḋ r|` per node, `r̈` from three-point
/// differences of the `ṙ` column and `ḋ` in closed form. The origin node, if
/// present, reports 0.
pub fn strong_residual(spec: &PenaltySpec, profile: &RadialProfile) -> Vec<f64> {
    let mf = profile.m_f64();
    let mut out = Vec::with_capacity(profile.len());
    for i in 0..profile.len() {
        let x = profile.mesh[i];
        if x <= 0.0 {
            out.push(0.0);
            continue;
        }
        let s = profile.state(i);
        let rddot = first_derivative_at(&profile.mesh, &profile.rdot, i);
        let curv = spec.rho_second(s.det(profile.m));
        let forcing =
            if curv == 0.0 { 0.0 } else { mf * curv * ddot_closed_form(spec, profile.m, &s) * s.r };
        out.push((mf * mf * s.r / x - s.rdot - x * rddot - forcing).abs());
    }
    out
}

/// Supremum of the residual over interior nodes. The one-sided stencils at
/// the two ends are a order less accurate and are left out.
pub fn residual_sup(residual: &[f64]) -> f64 {
    if residual.len() < 3 {
        return 0.0;
    }
    residual[1..residual.len() - 1].iter().fold(0.0, |a, &b| a.max(b))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZDot {
    pub value: f64,
    /// Set when `r = 0`: the ratio form is undefined there and the value comes
    /// from the expanded polynomial, which is its continuous extension.
    pub degenerate: bool,
}

/// `ż = −(r²/R³)[(Rṙ/r)² − 2M²(Rṙ/r) + M²]`, evaluated in expanded form.
pub fn zdot_closed_form(m: u32, s: &OdeState) -> ZDot {
    let m2 = f64::from(m * m);
    let (x, r, v) = (s.radius, s.r, s.rdot);
    let value = -(m2 * r * r - 2.0 * m2 * x * r * v + x * x * v * v) / (x * x * x);
    ZDot { value: if value == 0.0 { 0.0 } else { value }, degenerate: r == 0.0 }
}

/// Roots `λ± = M² ± M √(M² − 1)` of the ż-polynomial in the ratio `Rṙ/r`.
pub fn window_roots(m: u32) -> (f64, f64) {
    let mf = f64::from(m);
    let m2 = mf * mf;
    let w = mf * (m2 - 1.0).sqrt();
    (m2 - w, m2 + w)
}

/// `c_M = M / (2(M − 1))`.
pub fn c_m(m: u32) -> Result<f64> {
    if m < 2 {
        return Err(Error::InvalidArgument("c_M needs M >= 2".into()));
    }
    let mf = f64::from(m);
    Ok(mf / (2.0 * (mf - 1.0)))
}

/// `q(w, a, b) = b w + M ρ'(M w a / b) a`.
pub fn q_function(spec: &PenaltySpec, m: u32, w: f64, a: f64, b: f64) -> Result<f64> {
    if !(b > 0.0) {
        return Err(Error::InvalidArgument(format!("q needs b > 0, got {b}")));
    }
    let mf = f64::from(m);
    Ok(b * w + mf * spec.rho_prime(mf * w * a / b) * a)
}

/// `s = (M r − R ṙ)² + M³ r² + M R² ṙ²`.
pub fn s_quantity(m: u32, st: &OdeState) -> f64 {
    let mf = f64::from(m);
    let (x, r, v) = (st.radius, st.r, st.rdot);
    let lead = mf * r - x * v;
    lead * lead + mf * mf * mf * r * r + mf * x * x * v * v
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Subsolution {
    /// `Δz + c_M ρ''(d) ż`.
    pub value: f64,
    /// `Δz + c_M ρ''(d) ż²`, reported alongside.
    pub squared_variant: f64,
    pub laplacian: f64,
    pub zdot: f64,
    pub zddot: f64,
    pub curvature: f64,
}

/// Discrete `Δz = z̈ + ż/R` from three-point differences of `z`, plus the
/// drift term with the closed-form `ż`.
pub fn subsolution_quantity(
    spec: &PenaltySpec,
    profile: &RadialProfile,
    i: usize,
) -> Result<Subsolution> {
    let cm = c_m(profile.m)?;
    let lo = profile.first_positive();
    if i <= lo || i + 1 >= profile.len() {
        return Err(Error::InvalidArgument(format!(
            "node {i} is not an interior node with R > 0"
        )));
    }
    let xs = &profile.mesh[i - 1..=i + 1];
    let zs: Vec<f64> = (i - 1..=i + 1)
        .map(|k| z_value(spec, profile.m, profile.mesh[k], profile.r[k], profile.rdot[k]))
        .collect();
    let zdot_fd = first_derivative_at(xs, &zs, 1);
    let zddot = second_derivative_at(xs, &zs, 1);
    let x = profile.mesh[i];
    let laplacian = zddot + zdot_fd / x;
    let s = profile.state(i);
    let curvature = spec.rho_second(s.det(profile.m));
    let zdot = zdot_closed_form(profile.m, &s).value;
    Ok(Subsolution {
        value: laplacian + cm * curvature * zdot,
        squared_variant: laplacian + cm * curvature * zdot * zdot,
        laplacian,
        zdot,
        zddot,
        curvature,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::graded_mesh;

    fn st(x: f64, r: f64, v: f64) -> OdeState {
        OdeState::new(x, r, v).unwrap()
    }

    #[test]
    fn power_law_kernel() {
        let zero = PenaltySpec::zero();
        for m in 2..=5u32 {
            let mf = f64::from(m);
            for x in [0.1, 0.5, 0.9] {
                let s = st(x, x.powi(m as i32), mf * x.powi(m as i32 - 1));
                let dd = 2.0 * mf * mf * (mf - 1.0) * x.powi(2 * m as i32 - 3);
                assert!((ddot_closed_form(&zero, m, &s) - dd).abs() <= 1e-12 * dd);
                let rdd = mf * (mf - 1.0) * x.powi(m as i32 - 2);
                assert!((rddot_explicit(&zero, m, &s) - rdd).abs() <= 1e-12 * rdd);
            }
        }
        let id = st(0.4, 0.4, 1.0);
        let spec = PenaltySpec::smooth_step(1.0, 1.0).unwrap();
        assert_eq!(ddot_closed_form(&spec, 1, &id), 0.0);
        assert!(rddot_explicit(&spec, 1, &id).abs() < 1e-15);
    }

    #[test]
    fn zdot_examples() {
        let id = st(0.3, 0.3, 1.0);
        assert_eq!(zdot_closed_form(1, &id).value, 0.0);
        for m in 2..=4u32 {
            let mf = f64::from(m);
            let (x, r) = (0.5, 0.2);
            let s = st(x, r, mf * r / x);
            let expected = r * r / x.powi(3) * 2.0 * mf * mf * (mf - 1.0);
            assert!((zdot_closed_form(m, &s).value - expected).abs() < 1e-12 * expected);
            let (lo, hi) = window_roots(m);
            for lam in [lo, hi] {
                let s = st(x, r, lam * r / x);
                assert!(zdot_closed_form(m, &s).value.abs() < 1e-12);
            }
        }
        let (lo, hi) = window_roots(2);
        assert!((lo - (4.0 - 2.0 * 3f64.sqrt())).abs() < 1e-15);
        assert!((hi - 7.464101615137754).abs() < 1e-14);
        let flat = zdot_closed_form(2, &st(0.3, 0.0, 0.0));
        assert!(flat.degenerate);
        assert_eq!(flat.value, 0.0);
    }

    #[test]
    fn q_function_examples() {
        let spec = PenaltySpec::smooth_step(5.0, 0.5).unwrap();
        assert_eq!(q_function(&spec, 2, 0.7, 0.0, 0.5).unwrap(), 0.35);
        assert_eq!(q_function(&spec, 2, 0.0, 0.4, 0.5).unwrap(), 0.0);
        assert!(q_function(&spec, 2, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn c_m_values() {
        assert_eq!(c_m(2).unwrap(), 1.0);
        assert_eq!(c_m(3).unwrap(), 0.75);
        assert!(c_m(1).is_err());
    }

    #[test]
    fn residual_vanishes_on_kernel() {
        let mesh = graded_mesh(2000, 1e-6, 1.05).unwrap();
        for m in 2..=4 {
            let p = RadialProfile::power(m, mesh.clone(), 1.0).unwrap();
            let res = strong_residual(&PenaltySpec::zero(), &p);
            let sup = residual_sup(&res);
            assert!(sup <= 1e-9 || m > 2 && sup <= 1e-5, "M = {m}: {sup}");
        }
        let p = RadialProfile::power(2, mesh, 0.0).unwrap();
        assert_eq!(residual_sup(&strong_residual(&PenaltySpec::smooth_step(1.0, 1.0).unwrap(), &p)), 0.0);
    }

    #[test]
    fn subsolution_on_power_law() {
        // r = R^M, ρ'' = 0: z = M² R^{2M−2}, Δz = 4 M² (M−1)² R^{2M−4}.
        let mesh: Vec<f64> = (1..=400).map(|k| k as f64 / 400.0).collect();
        for m in [2u32, 3] {
            let mf = f64::from(m);
            let p = RadialProfile::power(m, mesh.clone(), 1.0).unwrap();
            for i in [50, 200, 350] {
                let x = mesh[i];
                let q = subsolution_quantity(&PenaltySpec::zero(), &p, i).unwrap();
                let exact = 4.0 * mf * mf * (mf - 1.0).powi(2) * x.powi(2 * m as i32 - 4);
                assert!((q.value - exact).abs() < 1e-3 * exact.max(1.0), "{} vs {exact}", q.value);
            }
        }
        let c = RadialProfile::from_fn(2, mesh, |_| (0.0, 0.0)).unwrap();
        assert_eq!(subsolution_quantity(&PenaltySpec::zero(), &c, 10).unwrap().value, 0.0);
        assert!(subsolution_quantity(&PenaltySpec::zero(), &c, 0).is_err());
    }
}
