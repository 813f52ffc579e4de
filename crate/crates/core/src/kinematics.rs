//! Geometry of the radial map `u(x) = r(R) e_R(Mθ)`: determinant, the
//! auxiliary quantity `z`, the reduced energy and the full 2×2 gradient.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{check_mesh, extrapolate_to_zero, trapezoid};
use crate::ode::OdeState;
use crate::penalty::PenaltySpec;

pub type Mat2 = [[f64; 2]; 2];

/// Samples of `r` and `ṙ` on a strictly increasing mesh of `[ε₀, 1]` (`ε₀ ≥ 0`).
#[derive(Clone, Debug, PartialEq)]
pub struct RadialProfile {
    pub m: u32,
    pub mesh: Vec<f64>,
    pub r: Vec<f64>,
    pub rdot: Vec<f64>,
}

impl RadialProfile {
    pub fn new(m: u32, mesh: Vec<f64>, r: Vec<f64>, rdot: Vec<f64>) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidProfile("covering degree M must be >= 1".into()));
        }
        check_mesh(&mesh)?;
        if r.len() != mesh.len() || rdot.len() != mesh.len() {
            return Err(Error::InvalidProfile(format!(
                "length mismatch: mesh {}, r {}, rdot {}",
                mesh.len(),
                r.len(),
                rdot.len()
            )));
        }
        if let Some(i) = (0..r.len()).find(|&i| !r[i].is_finite() || !rdot[i].is_finite()) {
            return Err(Error::InvalidProfile(format!("non-finite value at R = {}", mesh[i])));
        }
        Ok(Self { m, mesh, r, rdot })
    }

    /// Profile sampled from `f(R) = (r, ṙ)`.
    pub fn from_fn(m: u32, mesh: Vec<f64>, f: impl Fn(f64) -> (f64, f64)) -> Result<Self> {
        let (r, rdot) = mesh.iter().map(|&x| f(x)).unzip();
        Self::new(m, mesh, r, rdot)
    }

    /// `r = c R^M`.
    pub fn power(m: u32, mesh: Vec<f64>, c: f64) -> Result<Self> {
        let mf = f64::from(m);
        Self::from_fn(m, mesh, |x| (c * x.powi(m as i32), c * mf * pow_or_one(x, m as i32 - 1)))
    }

    pub fn len(&self) -> usize {
        self.mesh.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mesh.is_empty()
    }

    pub fn m_f64(&self) -> f64 {
        f64::from(self.m)
    }

    pub fn state(&self, i: usize) -> OdeState {
        OdeState { radius: self.mesh[i], r: self.r[i], rdot: self.rdot[i] }
    }

    /// Index of the first node with `R > 0`.
    pub fn first_positive(&self) -> usize {
        usize::from(self.mesh[0] == 0.0)
    }

    pub fn boundary_value(&self) -> f64 {
        *self.r.last().expect("non-empty profile")
    }
}

/// `x^k` with `0^0 = 1`.
fn pow_or_one(x: f64, k: i32) -> f64 {
    if k == 0 {
        1.0
    } else {
        x.powi(k)
    }
}

pub fn det_value(m: u32, radius: f64, r: f64, rdot: f64) -> f64 {
    f64::from(m) * r * rdot / radius
}

pub fn z_value(spec: &PenaltySpec, m: u32, radius: f64, r: f64, rdot: f64) -> f64 {
    let mf = f64::from(m);
    let ratio = r / radius;
    0.5 * rdot * rdot + 0.5 * mf * mf * ratio * ratio + spec.f_of_d(det_value(m, radius, r, rdot))
}

/// `d = M r ṙ / R` at node `i`.
pub fn det_of(profile: &RadialProfile, i: usize) -> Result<f64> {
    let radius = profile.mesh[i];
    if radius <= 0.0 {
        return Err(Error::AtOrigin("the determinant"));
    }
    Ok(det_value(profile.m, radius, profile.r[i], profile.rdot[i]))
}

/// Three positive radii closest to the origin.
fn origin_nodes(profile: &RadialProfile) -> Result<[usize; 3]> {
    let k = profile.first_positive();
    if profile.len() < k + 3 {
        return Err(Error::Unresolved(format!(
            "{} nodes with R > 0, need 3",
            profile.len() - k
        )));
    }
    Ok([k, k + 1, k + 2])
}

/// Quadratic extrapolation to `R = 0` of a per-node quantity.
pub fn extrapolate_origin(
    profile: &RadialProfile,
    value: impl Fn(usize) -> f64,
) -> Result<f64> {
    let idx = origin_nodes(profile)?;
    Ok(extrapolate_to_zero(idx.map(|i| profile.mesh[i]), idx.map(value)))
}

/// Limit of `d` at the origin from the three smallest positive radii.
pub fn det_at_origin(profile: &RadialProfile) -> Result<f64> {
    extrapolate_origin(profile, |i| {
        det_value(profile.m, profile.mesh[i], profile.r[i], profile.rdot[i])
    })
}

pub fn z_of(spec: &PenaltySpec, profile: &RadialProfile, i: usize) -> Result<f64> {
    let radius = profile.mesh[i];
    if radius <= 0.0 {
        return Err(Error::AtOrigin("z"));
    }
    Ok(z_value(spec, profile.m, radius, profile.r[i], profile.rdot[i]))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub dirichlet: f64,
    pub penalty: f64,
    pub total: f64,
}

/// `I = 2π ∫₀¹ [½(ṙ² + M² r²/R²) + ρ(M r ṙ/R)] R dR` by the trapezoid rule.
///
/// The integrand carries a factor `R` and is bounded for admissible profiles,
/// so it vanishes at the origin. A mesh starting at `ε₀ > 0` gets the extra
/// cell `[0, ε₀]` with that zero value at its left end.
pub fn radial_energy(spec: &PenaltySpec, profile: &RadialProfile) -> Result<EnergyBreakdown> {
    let mf = profile.m_f64();
    let n = profile.len();
    let mut xs = Vec::with_capacity(n + 1);
    let mut dir = Vec::with_capacity(n + 1);
    let mut pen = Vec::with_capacity(n + 1);
    if profile.mesh[0] > 0.0 {
        xs.push(0.0);
        dir.push(0.0);
        pen.push(0.0);
    }
    for i in 0..n {
        let radius = profile.mesh[i];
        xs.push(radius);
        if radius == 0.0 {
            dir.push(0.0);
            pen.push(0.0);
            continue;
        }
        let (r, rdot) = (profile.r[i], profile.rdot[i]);
        let ratio = r / radius;
        dir.push(0.5 * (rdot * rdot + mf * mf * ratio * ratio) * radius);
        pen.push(spec.rho(det_value(profile.m, radius, r, rdot)) * radius);
    }
    let dirichlet = 2.0 * PI * trapezoid(&xs, &dir);
    let penalty = 2.0 * PI * trapezoid(&xs, &pen);
    if !(dirichlet.is_finite() && penalty.is_finite()) {
        return Err(Error::InvalidProfile("non-finite energy".into()));
    }
    Ok(EnergyBreakdown { dirichlet, penalty, total: dirichlet + penalty })
}

fn outer(a: [f64; 2], b: [f64; 2]) -> Mat2 {
    [[a[0] * b[0], a[0] * b[1]], [a[1] * b[0], a[1] * b[1]]]
}

fn add(a: Mat2, b: Mat2) -> Mat2 {
    [[a[0][0] + b[0][0], a[0][1] + b[0][1]], [a[1][0] + b[1][0], a[1][1] + b[1][1]]]
}

fn scale(c: f64, a: Mat2) -> Mat2 {
    [[c * a[0][0], c * a[0][1]], [c * a[1][0], c * a[1][1]]]
}

pub fn det2(a: &Mat2) -> f64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

/// Frobenius product `A · B`.
pub fn frobenius(a: &Mat2, b: &Mat2) -> f64 {
    a[0][0] * b[0][0] + a[0][1] * b[0][1] + a[1][0] * b[1][0] + a[1][1] * b[1][1]
}

pub fn cofactor(a: &Mat2) -> Mat2 {
    [[a[1][1], -a[1][0]], [-a[0][1], a[0][0]]]
}

fn e_radial(angle: f64) -> [f64; 2] {
    [angle.cos(), angle.sin()]
}

fn e_angular(angle: f64) -> [f64; 2] {
    [-angle.sin(), angle.cos()]
}

/// Gradient of `g(R) e_R(kθ)` given `g` and `ġ`.
fn radial_gradient(k: f64, radius: f64, g: f64, gdot: f64, theta: f64) -> Mat2 {
    add(
        scale(gdot, outer(e_radial(k * theta), e_radial(theta))),
        scale(k * g / radius, outer(e_angular(k * theta), e_angular(theta))),
    )
}

/// `∇u = ṙ e_{MR} ⊗ e_R + (M r / R) e_{Mθ} ⊗ e_θ` at node `i`.
pub fn gradient_map_at(profile: &RadialProfile, i: usize, theta: f64) -> Result<Mat2> {
    let radius = profile.mesh[i];
    if radius <= 0.0 {
        return Err(Error::AtOrigin("the gradient"));
    }
    Ok(radial_gradient(profile.m_f64(), radius, profile.r[i], profile.rdot[i], theta))
}

pub fn cofactor_at(profile: &RadialProfile, i: usize, theta: f64) -> Result<Mat2> {
    Ok(cofactor(&gradient_map_at(profile, i, theta)?))
}

/// Weak-form pairing of the profile with the test field `g(R) e_R(Nθ)`,
/// `g = sin²(πR)`, for `N ≠ M`:
///
/// ```text
/// ∫₀¹ ∫₀^{2π} (∇u + ρ'(d) cof ∇u) · ∇φ dθ R dR
/// ```
///
/// evaluated with the matrices themselves, so the angular orthogonality is
/// checked rather than assumed. The θ-rule is the periodic trapezoid, exact
/// for the trigonometric degree that occurs here.
pub fn null_lagrangian_check(
    spec: &PenaltySpec,
    n: u32,
    profile: &RadialProfile,
) -> Result<f64> {
    if n == profile.m {
        return Err(Error::InvalidArgument(format!(
            "N must differ from M = {}; for N = M the pairing is the radial weak form",
            profile.m
        )));
    }
    let nf = f64::from(n);
    let angles = 4 * (profile.m + n) as usize + 8;
    let dtheta = 2.0 * PI / angles as f64;
    let mut xs = Vec::with_capacity(profile.len());
    let mut vals = Vec::with_capacity(profile.len());
    for i in 0..profile.len() {
        let radius = profile.mesh[i];
        xs.push(radius);
        if radius == 0.0 {
            vals.push(0.0);
            continue;
        }
        let g = (PI * radius).sin().powi(2);
        let gdot = PI * (2.0 * PI * radius).sin();
        let slope = spec.rho_prime(det_of(profile, i)?);
        let mut ring = 0.0;
        for k in 0..angles {
            let theta = k as f64 * dtheta;
            let du = gradient_map_at(profile, i, theta)?;
            let dphi = radial_gradient(nf, radius, g, gdot, theta);
            ring += frobenius(&du, &dphi) + slope * frobenius(&cofactor(&du), &dphi);
        }
        vals.push(ring * dtheta * radius);
    }
    Ok(trapezoid(&xs, &vals))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::graded_mesh;

    fn uniform(n: usize) -> Vec<f64> {
        (1..=n).map(|k| k as f64 / n as f64).collect()
    }

    #[test]
    fn determinant_examples() {
        let id = RadialProfile::power(1, uniform(10), 1.0).unwrap();
        for i in 0..id.len() {
            assert_eq!(det_of(&id, i).unwrap(), 1.0);
        }
        let p = RadialProfile::new(2, vec![0.25, 0.5, 1.0], vec![0.0, 0.1, 1.0], vec![0.0, 0.4, 2.0])
            .unwrap();
        assert!((det_of(&p, 1).unwrap() - 0.16).abs() < 1e-15);
        let sq = RadialProfile::power(3, uniform(8), 1.0).unwrap();
        for i in 0..sq.len() {
            let x = sq.mesh[i];
            assert!((det_of(&sq, i).unwrap() - 9.0 * x.powi(4)).abs() < 1e-14);
        }
    }

    #[test]
    fn origin_is_rejected_for_pointwise_quantities() {
        let p = RadialProfile::power(2, vec![0.0, 0.5, 1.0], 1.0).unwrap();
        assert!(matches!(det_of(&p, 0), Err(Error::AtOrigin(_))));
        assert!(z_of(&PenaltySpec::zero(), &p, 0).is_err());
        assert!(gradient_map_at(&p, 0, 0.3).is_err());
    }

    #[test]
    fn det_at_origin_examples() {
        let mesh = graded_mesh(200, 1e-6, 1.1).unwrap();
        let sq = RadialProfile::power(2, mesh.clone(), 1.0).unwrap();
        assert!(det_at_origin(&sq).unwrap().abs() < 1e-10);
        let id = RadialProfile::power(1, mesh.clone(), 1.0).unwrap();
        assert!((det_at_origin(&id).unwrap() - 1.0).abs() < 1e-12);
        let delayed = RadialProfile::from_fn(2, mesh, |x| {
            if x < 0.3 {
                (0.0, 0.0)
            } else {
                ((x - 0.3).powi(3), 3.0 * (x - 0.3).powi(2))
            }
        })
        .unwrap();
        assert_eq!(det_at_origin(&delayed).unwrap(), 0.0);
        let short = RadialProfile::power(2, vec![0.0, 0.5, 1.0], 1.0).unwrap();
        assert!(matches!(det_at_origin(&short), Err(Error::Unresolved(_))));
    }

    #[test]
    fn z_examples() {
        let spec = PenaltySpec::smooth_step(2.0, 1.5).unwrap();
        let sq = RadialProfile::power(2, vec![0.25, 0.5, 1.0], 1.0).unwrap();
        // d = 2·0.25·1/0.5 = 1 at R = 0.5
        let expected = 0.5 + 4.0 * 0.0625 / 0.25 * 0.5 + spec.f_of_d(1.0);
        assert!((z_of(&spec, &sq, 1).unwrap() - expected).abs() < 1e-14);
        let zero = RadialProfile::power(2, vec![0.25, 0.5, 1.0], 0.0).unwrap();
        assert_eq!(z_of(&spec, &zero, 2).unwrap(), 0.0);
    }

    #[test]
    fn identity_energy() {
        let spec = PenaltySpec::smooth_step(1.0, 1.0).unwrap();
        let mut mesh = vec![0.0];
        mesh.extend(graded_mesh(4095, 1e-8, 1.05).unwrap());
        let id = RadialProfile::power(1, mesh, 1.0).unwrap();
        let e = radial_energy(&spec, &id).unwrap();
        assert!((e.total - 1.5 * PI).abs() < 1e-12);
        assert_eq!(e.total, e.dirichlet + e.penalty);
    }

    #[test]
    fn harmonic_covering_energy() {
        let mesh = graded_mesh(4000, 1e-8, 1.05).unwrap();
        let sq = RadialProfile::power(2, mesh, 1.0).unwrap();
        let e = radial_energy(&PenaltySpec::zero(), &sq).unwrap();
        assert!((e.dirichlet - 2.0 * PI).abs() < 1e-5, "{}", e.dirichlet);
        assert_eq!(e.penalty, 0.0);
        let zero = RadialProfile::power(2, uniform(20), 0.0).unwrap();
        let e0 = radial_energy(&PenaltySpec::smooth_step(1.0, 1.0).unwrap(), &zero).unwrap();
        assert_eq!((e0.dirichlet, e0.penalty), (0.0, 0.0));
    }

    #[test]
    fn identity_gradient() {
        let id = RadialProfile::power(1, uniform(5), 1.0).unwrap();
        for theta in [0.0, 0.7, 2.0, 5.5] {
            let a = gradient_map_at(&id, 2, theta).unwrap();
            assert!((a[0][0] - 1.0).abs() < 1e-15 && (a[1][1] - 1.0).abs() < 1e-15);
            assert!(a[0][1].abs() < 1e-15 && a[1][0].abs() < 1e-15);
        }
    }

    #[test]
    fn cofactor_layout() {
        let a = [[1.0, 2.0], [3.0, 4.0]];
        assert_eq!(cofactor(&a), [[4.0, -3.0], [-2.0, 1.0]]);
    }

    #[test]
    fn determinant_and_cofactor_identities() {
        let p = RadialProfile::new(3, vec![0.2, 0.6, 1.0], vec![0.1, 0.3, 1.0], vec![0.4, 1.1, 2.5])
            .unwrap();
        for i in 0..3 {
            for theta in [0.1, 1.3, 4.0] {
                let a = gradient_map_at(&p, i, theta).unwrap();
                let d = det_of(&p, i).unwrap();
                assert!((det2(&a) - d).abs() <= 1e-12 * d.abs());
                let half = 0.5 * frobenius(&a, &cofactor_at(&p, i, theta).unwrap());
                assert!((half - d).abs() <= 1e-12 * d.abs());
            }
        }
    }

    #[test]
    fn angular_orthogonality() {
        let spec = PenaltySpec::smooth_step(5.0, 0.5).unwrap();
        let mesh = graded_mesh(300, 1e-6, 1.1).unwrap();
        let p = RadialProfile::from_fn(2, mesh, |x| (x * x * (1.0 + x) / 2.0, (2.0 * x + 3.0 * x * x) / 2.0))
            .unwrap();
        assert!(null_lagrangian_check(&spec, 3, &p).unwrap().abs() <= 1e-12);
        assert!(null_lagrangian_check(&spec, 1, &p).unwrap().abs() <= 1e-12);
        assert!(null_lagrangian_check(&spec, 2, &p).is_err());
    }
}
