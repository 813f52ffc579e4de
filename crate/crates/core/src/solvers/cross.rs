//! Run both solution routes on one spec and compare them.

use serde::{Deserialize, Serialize};

use crate::analysis::{full_report, AnalysisConfig, SolutionReport};
use crate::error::{Error, Result};
use crate::kinematics::RadialProfile;
use crate::mesh::interpolate_linear;
use crate::penalty::PenaltySpec;
use crate::solvers::minimize::{minimize, DiscreteEnergy, MinimizeConfig};
use crate::solvers::shooting::{shoot_immediate, ShootingConfig};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossConfig {
    pub shooting: ShootingConfig,
    pub minimize: MinimizeConfig,
    pub analysis: AnalysisConfig,
}

impl CrossConfig {
    /// Shooting on the minimizer mesh without its origin node, so the two
    /// profiles share every node with `R > 0`.
    pub fn new(m: u32, nodes: usize) -> Self {
        let minimize = MinimizeConfig::new(m, nodes);
        let shooting = ShootingConfig {
            nodes: nodes - 1,
            eps0: minimize.eps0,
            grading: minimize.grading,
            ..ShootingConfig::immediate(m)
        };
        Self { shooting, minimize, analysis: AnalysisConfig::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossValidation {
    pub shooting: SolutionReport,
    pub minimizer: SolutionReport,
    /// `max |r_shoot − r_min|` over the shooting nodes.
    pub sup_discrepancy: f64,
    /// Discrete energy of the shooting profile minus that of the minimizer.
    pub energy_gap: f64,
    pub shooting_residual: f64,
    pub minimizer_residual: f64,
    pub shooting_parameter: f64,
}

pub struct CrossProfiles {
    pub shooting: RadialProfile,
    pub minimizer: RadialProfile,
    pub report: CrossValidation,
}

pub fn cross_validate(spec: &PenaltySpec, cfg: &CrossConfig) -> Result<CrossProfiles> {
    if cfg.shooting.m != cfg.minimize.m {
        return Err(Error::InvalidArgument("shooting and minimization disagree on M".into()));
    }
    let m = cfg.shooting.m;
    let shot = shoot_immediate(spec, &cfg.shooting)?;
    let initial = RadialProfile::power(m, vec![0.0, 0.25, 0.5, 0.75, 1.0], 1.0)?;
    let min = minimize(spec, &cfg.minimize, &initial)?;

    let sp = &shot.profile;
    let mp = &min.profile;
    let sup_discrepancy = sp
        .mesh
        .iter()
        .zip(&sp.r)
        .map(|(&x, &r)| (r - interpolate_linear(&mp.mesh, &mp.r, x)).abs())
        .fold(0.0, f64::max);

    // the shooting profile as a competitor in the minimizer's discrete class
    let competitor: Vec<f64> = mp
        .mesh
        .iter()
        .enumerate()
        .map(|(i, &x)| match i {
            0 => 0.0,
            _ if i + 1 == mp.len() => 1.0,
            _ => interpolate_linear(&sp.mesh, &sp.r, x),
        })
        .collect();
    let energy = DiscreteEnergy { spec, m, mesh: &mp.mesh };
    let energy_gap = energy.energy(&competitor) - min.energy;

    let shooting = full_report(spec, sp, "shoot-immediate", Some(shot.parameter), &cfg.analysis)?;
    let minimizer = full_report(spec, mp, "minimize", None, &cfg.analysis)?;
    let report = CrossValidation {
        sup_discrepancy,
        energy_gap,
        shooting_residual: shooting.residual_sup,
        minimizer_residual: minimizer.residual_sup,
        shooting_parameter: shot.parameter,
        shooting,
        minimizer,
    };
    Ok(CrossProfiles { shooting: shot.profile, minimizer: min.profile, report })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_agrees() {
        let spec = PenaltySpec::smooth_step(1.0, 1.0).unwrap();
        let out = cross_validate(&spec, &CrossConfig::new(1, 256)).unwrap();
        assert!(out.report.sup_discrepancy <= 1e-6, "{}", out.report.sup_discrepancy);
    }

    #[test]
    fn kernel_agrees() {
        let out = cross_validate(&PenaltySpec::zero(), &CrossConfig::new(2, 1024)).unwrap();
        // the midpoint-rule minimizer is second order; 1024 nodes resolve R² well
        assert!(out.report.sup_discrepancy <= 1e-6, "{}", out.report.sup_discrepancy);
        assert!(out.report.energy_gap >= -1e-8);
    }
}
