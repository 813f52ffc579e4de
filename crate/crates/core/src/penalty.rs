//! The convex penalty `ρ` acting on the Jacobian determinant.
//!
//! `ρ` vanishes for `s ≤ t₀`, is affine `γ s + κ` for `s ≥ s₀`, and in between
//! it is the primitive of `γ φ((s - t₀) / (s₀ - t₀))` where `φ` is the
//! exponential smooth step
//!
//! ```text
//! φ(t) = e^{-1/t} / (e^{-1/t} + e^{-1/(1-t)}),   0 < t < 1,
//! ```
//!
//! extended by `0` on the left and `1` on the right. The result is `C∞` on the
//! whole line and convex since `ρ' = γ φ(·)` is nondecreasing. `t₀ = 0` gives an
//! immediately lifting-off penalty, `t₀ = s̃ > 0` a delayed one. The constant
//! `κ` is derived from the construction rather than supplied.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::gauss_legendre;

/// Shape of the transition region of `ρ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PenaltyKind {
    /// `ρ > 0` for every `s > 0`.
    SmoothStep,
    /// `ρ ≡ 0` on `(-∞, delay]`, positive afterwards.
    DelayedSmoothStep { delay: f64 },
    /// `ρ ≡ 0`; the Dirichlet-energy limit `γ → 0`. Used as the kernel oracle.
    Zero,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PenaltySpec {
    pub gamma: f64,
    pub s0: f64,
    pub kind: PenaltyKind,
}

impl PenaltySpec {
    pub fn smooth_step(gamma: f64, s0: f64) -> Result<Self> {
        Self::new(gamma, s0, PenaltyKind::SmoothStep)
    }

    pub fn delayed(gamma: f64, s0: f64, delay: f64) -> Result<Self> {
        Self::new(gamma, s0, PenaltyKind::DelayedSmoothStep { delay })
    }

    /// `ρ ≡ 0`. `gamma` and `s0` are kept for reporting only.
    pub fn zero() -> Self {
        Self { gamma: 0.0, s0: 0.0, kind: PenaltyKind::Zero }
    }

    pub fn new(gamma: f64, s0: f64, kind: PenaltyKind) -> Result<Self> {
        let spec = Self { gamma, s0, kind };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(Error::InvalidPenalty(msg));
        match self.kind {
            PenaltyKind::Zero => Ok(()),
            PenaltyKind::SmoothStep | PenaltyKind::DelayedSmoothStep { .. } => {
                if !(self.gamma.is_finite() && self.gamma > 0.0) {
                    return invalid(format!("gamma must be finite and > 0, got {}", self.gamma));
                }
                if !(self.s0.is_finite() && self.s0 > 0.0) {
                    // s0 = 0 leaves no room for a smooth transition.
                    return invalid(format!("s0 must be finite and > 0, got {}", self.s0));
                }
                if let PenaltyKind::DelayedSmoothStep { delay } = self.kind {
                    if !(delay.is_finite() && delay > 0.0 && delay < self.s0) {
                        return invalid(format!("delay must satisfy 0 < delay < s0, got {delay}"));
                    }
                }
                Ok(())
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, PenaltyKind::Zero)
    }

    /// Start `t₀` of the transition region.
    pub fn onset(&self) -> f64 {
        match self.kind {
            PenaltyKind::DelayedSmoothStep { delay } => delay,
            _ => 0.0,
        }
    }

    fn width(&self) -> f64 {
        self.s0 - self.onset()
    }

    /// Intercept of the affine tail, `κ = -γ (s₀ + t₀) / 2`.
    pub fn kappa(&self) -> f64 {
        if self.is_zero() {
            0.0
        } else {
            -0.5 * self.gamma * (self.s0 + self.onset())
        }
    }

    pub fn rho(&self, s: f64) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let t0 = self.onset();
        if s <= t0 {
            0.0
        } else if s >= self.s0 {
            self.gamma * s + self.kappa()
        } else {
            let w = self.width();
            self.gamma * w * smooth_step_integral((s - t0) / w)
        }
    }

    pub fn rho_prime(&self, s: f64) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        self.gamma * smooth_step((s - self.onset()) / self.width())
    }

    pub fn rho_second(&self, s: f64) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let w = self.width();
        self.gamma / w * smooth_step_derivative((s - self.onset()) / w)
    }

    /// `f(d) = d ρ'(d) - ρ(d)`.
    pub fn f_of_d(&self, d: f64) -> f64 {
        if d <= self.onset() {
            return 0.0;
        }
        d * self.rho_prime(d) - self.rho(d)
    }
}

/// Exponential smooth step; exactly 0 for `t ≤ 0` and exactly 1 for `t ≥ 1`.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let g = 1.0 / t - 1.0 / (1.0 - t);
    if g > 0.0 {
        let w = (-g).exp();
        w / (1.0 + w)
    } else {
        1.0 / (1.0 + g.exp())
    }
}

pub fn smooth_step_derivative(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    let g = 1.0 / t - 1.0 / (1.0 - t);
    let w = (-g.abs()).exp();
    if w == 0.0 {
        return 0.0;
    }
    let dg = 1.0 / (t * t) + 1.0 / ((1.0 - t) * (1.0 - t));
    dg * w / ((1.0 + w) * (1.0 + w))
}

/// `Φ(x) = ∫₀ˣ φ(t) dt` for `x ∈ [0, 1]`.
///
/// Only `[0, 1/2]` is integrated numerically; the symmetry `φ(1 - t) = 1 - φ(t)`
/// gives `Φ(x) = x - 1/2 + Φ(1 - x)` on the other half.
pub fn smooth_step_integral(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return x - 0.5;
    }
    if x > 0.5 {
        return x - 0.5 + left_half_integral(1.0 - x);
    }
    left_half_integral(x)
}

const PANELS: usize = 8;

fn left_half_integral(x: f64) -> f64 {
    let rule = gauss_legendre(20);
    let h = x / PANELS as f64;
    let mut total = 0.0;
    for p in 0..PANELS {
        let a = p as f64 * h;
        let mid = a + 0.5 * h;
        let mut panel = 0.0;
        for (node, weight) in rule.nodes.iter().zip(&rule.weights) {
            panel += weight * smooth_step(mid + 0.5 * h * node);
        }
        total += 0.5 * h * panel;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> PenaltySpec {
        PenaltySpec::smooth_step(1.0, 1.0).unwrap()
    }

    #[test]
    fn vanishes_left_of_origin() {
        let spec = unit();
        assert_eq!(spec.rho(-1.0), 0.0);
        assert_eq!(spec.rho_prime(-0.3), 0.0);
        assert_eq!(spec.rho_second(-0.5), 0.0);
        assert_eq!(spec.f_of_d(-2.0), 0.0);
        assert_eq!(spec.f_of_d(0.0), 0.0);
    }

    #[test]
    fn value_at_s0_is_half_slope_times_s0() {
        let spec = PenaltySpec::smooth_step(3.0, 0.7).unwrap();
        assert!((spec.rho(0.7) - 3.0 * 0.7 / 2.0).abs() < 1e-15);
        // Just inside the transition region the quadrature must agree too.
        assert!((spec.rho(0.7 - 1e-12) - 3.0 * 0.7 / 2.0).abs() < 1e-11);
    }

    #[test]
    fn affine_tail() {
        let spec = unit();
        assert!((spec.rho(2.0) - 1.5).abs() < 1e-15);
        assert_eq!(spec.rho_prime(1.0), 1.0);
        assert_eq!(spec.rho_second(2.0), 0.0);
        assert!((spec.f_of_d(4.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn midpoint_slope_is_half_gamma() {
        let spec = PenaltySpec::smooth_step(4.0, 2.0).unwrap();
        assert!((spec.rho_prime(1.0) - 2.0).abs() < 1e-15);
        let delayed = PenaltySpec::delayed(4.0, 2.0, 0.5).unwrap();
        assert!((delayed.rho_prime(1.25) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn delayed_kind_is_flat_up_to_delay() {
        let spec = PenaltySpec::delayed(2.0, 1.0, 0.4).unwrap();
        assert_eq!(spec.rho(0.4), 0.0);
        assert_eq!(spec.rho_prime(0.39), 0.0);
        assert_eq!(spec.rho_second(0.4), 0.0);
        assert!(spec.rho(0.41) > 0.0);
        assert!((spec.kappa() + 1.4).abs() < 1e-15);
        assert!((spec.rho(3.0) - (6.0 - 1.4)).abs() < 1e-14);
        // Continuity of the glued tail.
        assert!((spec.rho(1.0 - 1e-12) - spec.rho(1.0)).abs() < 1e-10);
    }

    #[test]
    fn kappa_is_admissible() {
        for (g, s0, delay) in [(1.0, 1.0, 0.0), (5.0, 0.5, 0.0), (2.0, 3.0, 2.9)] {
            let spec = if delay > 0.0 {
                PenaltySpec::delayed(g, s0, delay).unwrap()
            } else {
                PenaltySpec::smooth_step(g, s0).unwrap()
            };
            assert!(spec.kappa() >= -g * s0);
        }
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(PenaltySpec::smooth_step(0.0, 1.0).is_err());
        assert!(PenaltySpec::smooth_step(-1.0, 1.0).is_err());
        assert!(PenaltySpec::smooth_step(1.0, 0.0).is_err());
        assert!(PenaltySpec::smooth_step(f64::NAN, 1.0).is_err());
        assert!(PenaltySpec::delayed(1.0, 1.0, 1.0).is_err());
        assert!(PenaltySpec::delayed(1.0, 1.0, 0.0).is_err());
        assert!(PenaltySpec::delayed(1.0, 1.0, 0.5).is_ok());
    }

    #[test]
    fn second_derivative_matches_central_difference() {
        let spec = PenaltySpec::smooth_step(5.0, 0.5).unwrap();
        let s = 0.25;
        let h = 1e-5;
        let fd = (spec.rho_prime(s + h) - spec.rho_prime(s - h)) / (2.0 * h);
        let exact = spec.rho_second(s);
        assert!(((fd - exact) / exact).abs() < 1e-6, "{fd} vs {exact}");
    }

    #[test]
    fn smooth_step_is_symmetric() {
        for k in 1..100 {
            let t = k as f64 / 100.0;
            assert!((smooth_step(t) + smooth_step(1.0 - t) - 1.0).abs() < 1e-15);
        }
        assert_eq!(smooth_step(0.5), 0.5);
        assert!((smooth_step_integral(1.0) - 0.5).abs() < 1e-15);
        assert!((smooth_step_integral(1.0 - 1e-13) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn zero_penalty_is_identically_zero() {
        let spec = PenaltySpec::zero();
        for s in [-1.0, 0.0, 0.3, 10.0] {
            assert_eq!(spec.rho(s), 0.0);
            assert_eq!(spec.rho_prime(s), 0.0);
            assert_eq!(spec.rho_second(s), 0.0);
            assert_eq!(spec.f_of_d(s), 0.0);
        }
    }
}
