use crate::equilibrium::equilibrium_positions;
use crate::{ChainConfig, Result};

/// Right-hand side of the released chain in local coordinates.
///
/// With every spring engaged this is the linear system
///
/// ```text
/// m1 z1'' = k1 (z2 - z1) - Σm g
/// mj zj'' = k_{j-1} (z_{j-1} - zj) + kj (z_{j+1} - zj)
/// mn zn'' = k_{n-1} (z_{n-1} - zn)
/// ```
///
/// A disengaged spring has its full tension `k_j ℓ_j` removed, where
/// `ℓ_j = e_j + z_j - z_{j+1}` is its stretch.
#[derive(Debug, Clone)]
pub struct ChainModel {
    pub masses: Vec<f64>,
    pub springs: Vec<f64>,
    pub extensions: Vec<f64>,
    pub g: f64,
    total_weight: f64,
}

impl ChainModel {
    pub fn new(config: &ChainConfig) -> Result<Self> {
        let masses = config.effective_masses()?;
        let extensions = equilibrium_positions(config)?.extensions;
        let total_weight = masses.iter().sum::<f64>() * config.g();
        Ok(Self {
            masses,
            springs: config.spring_constants().to_vec(),
            extensions,
            g: config.g(),
            total_weight,
        })
    }

    pub fn n(&self) -> usize {
        self.masses.len()
    }

    /// Current stretch of spring `s` (0-based).
    pub fn spring_length(&self, s: usize, z: &[f64]) -> f64 {
        self.extensions[s] + z[s] - z[s + 1]
    }

    pub fn accelerations(&self, z: &[f64], engaged: Option<&[bool]>, out: &mut [f64]) {
        let n = self.n();
        let (m, k) = (&self.masses, &self.springs);
        out[0] = (k[0] * (z[1] - z[0]) - self.total_weight) / m[0];
        for j in 1..n - 1 {
            out[j] = (k[j - 1] * (z[j - 1] - z[j]) + k[j] * (z[j + 1] - z[j])) / m[j];
        }
        out[n - 1] = k[n - 2] * (z[n - 2] - z[n - 1]) / m[n - 1];

        if let Some(engaged) = engaged {
            for (s, _) in engaged.iter().enumerate().filter(|(_, on)| !**on) {
                let tension = k[s] * self.spring_length(s, z);
                out[s] += tension / m[s];
                out[s + 1] -= tension / m[s + 1];
            }
        }
    }

    /// `y = [z.., v..]`, `dy = [v.., a..]`.
    pub fn derivative(&self, y: &[f64], engaged: Option<&[bool]>, dy: &mut [f64]) {
        let n = self.n();
        dy[..n].copy_from_slice(&y[n..]);
        self.accelerations(&y[..n], engaged, &mut dy[n..]);
    }
}
