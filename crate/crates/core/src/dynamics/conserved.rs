use serde::Serialize;

use super::Trajectory;
use crate::equilibrium::equilibrium_positions;
use crate::{ChainConfig, Error, Result};

/// Residuals of the two conservation laws of the released linear chain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConservedSeries {
    /// `x_cm(t) - x_cm(0) + g t²/2` (cm).
    pub center_of_mass_residual: Vec<f64>,
    /// Mechanical energy at `t` minus energy at release (erg).
    pub energy_residual: Vec<f64>,
    /// `Σ k_j e_j² / 2` at release, the natural scale for `energy_residual`.
    pub initial_elastic_energy: f64,
}

impl ConservedSeries {
    pub fn max_center_of_mass_residual(&self) -> f64 {
        self.center_of_mass_residual
            .iter()
            .fold(0.0f64, |a, r| a.max(r.abs()))
    }

    pub fn max_relative_energy_residual(&self) -> f64 {
        self.energy_residual
            .iter()
            .fold(0.0f64, |a, r| a.max(r.abs()))
            / self.initial_elastic_energy
    }
}

/// Evaluates both residuals on every sample of a linear-model trajectory.
///
/// Energy is kinetic plus elastic plus gravitational, with the elastic part
/// measured relative to the hanging equilibrium: `k d (2e + d) / 2` for a
/// spring of equilibrium stretch `e` whose ends have separated by `d` more.
pub fn conserved_quantities(traj: &Trajectory, config: &ChainConfig) -> Result<ConservedSeries> {
    let masses = config.effective_masses()?;
    if masses.len() != traj.n() {
        return Err(Error::InvalidArgument(format!(
            "trajectory has {} masses, config has {}",
            traj.n(),
            masses.len()
        )));
    }
    let k = config.spring_constants();
    let e = equilibrium_positions(config)?.extensions;
    let g = config.g();
    let total: f64 = masses.iter().sum();
    let n = masses.len();

    let mut com = Vec::with_capacity(traj.len());
    let mut energy = Vec::with_capacity(traj.len());
    for (i, &t) in traj.times.iter().enumerate() {
        let z = |j: usize| traj.positions[j][i];
        let v = |j: usize| traj.velocities[j][i];
        let moment: f64 = (0..n).map(|j| masses[j] * z(j)).sum();
        com.push(moment / total + 0.5 * g * t * t);
        let kinetic: f64 = (0..n).map(|j| 0.5 * masses[j] * v(j) * v(j)).sum();
        let elastic: f64 = (0..n - 1)
            .map(|s| {
                let d = z(s) - z(s + 1);
                0.5 * k[s] * d * (2.0 * e[s] + d)
            })
            .sum();
        energy.push(kinetic + elastic + g * moment);
    }
    let initial_elastic_energy = (0..n - 1).map(|s| 0.5 * k[s] * e[s] * e[s]).sum();
    Ok(ConservedSeries {
        center_of_mass_residual: com,
        energy_residual: energy,
        initial_elastic_energy,
    })
}
