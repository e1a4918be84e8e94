//! Static hanging geometry before release.
//!
//! Natural lengths drop out of the dynamics, so positions are reported in
//! the gauge where every spring's rest length is zero and `x1(0) = 0`.
//! Spring `j` then stretches by exactly the weight it carries divided by
//! `k_j`.

use serde::Serialize;

use crate::{ChainConfig, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumState {
    /// `x_j(0)` in cm; `positions[0] == 0`.
    pub positions: Vec<f64>,
    /// Extension of each spring in cm.
    pub extensions: Vec<f64>,
}

/// Back-substitutes the force balance `k_j e_j = g Σ_{i>j} m_i` from the
/// bottom of the chain.
pub fn equilibrium_positions(config: &ChainConfig) -> Result<EquilibriumState> {
    let masses = config.effective_masses()?;
    let g = config.g();
    let n = masses.len();

    let mut extensions = vec![0.0; n - 1];
    let mut load = 0.0;
    for j in (0..n - 1).rev() {
        load += masses[j + 1] * g;
        extensions[j] = load / config.spring_constants()[j];
    }

    let mut positions = Vec::with_capacity(n);
    positions.push(0.0);
    for e in &extensions {
        let above = *positions.last().unwrap();
        positions.push(above - e);
    }
    Ok(EquilibriumState {
        positions,
        extensions,
    })
}

/// Singular stiffness matrix of the hanging chain, rows `(k1, -k1, ..)`,
/// `(-k_{j-1}, k_{j-1} + k_j, -k_j)`, `(.., -k_{n-1}, k_{n-1})`.
pub fn stiffness_matrix(spring_constants: &[f64]) -> Vec<Vec<f64>> {
    let n = spring_constants.len() + 1;
    let mut a = vec![vec![0.0; n]; n];
    for (j, &k) in spring_constants.iter().enumerate() {
        a[j][j] += k;
        a[j][j + 1] -= k;
        a[j + 1][j] -= k;
        a[j + 1][j + 1] += k;
    }
    a
}

/// Right-hand side balanced by the stiffness matrix acting on upward-positive
/// positions: the top row is the support minus the top weight (everything
/// below it), the others are the downward weights. The entries sum to zero,
/// as they must for a matrix whose null space is uniform translation.
pub fn equilibrium_loads(masses: &[f64], g: f64) -> Vec<f64> {
    let mut loads: Vec<f64> = masses.iter().map(|m| -m * g).collect();
    loads[0] = masses[1..].iter().sum::<f64>() * g;
    loads
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::trial_one;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn trial_one_bottom_extension() {
        let eq = equilibrium_positions(&trial_one()).unwrap();
        assert_relative_eq!(
            eq.extensions[2],
            107.28 * 981.0 / 15723.0,
            max_relative = 1e-14
        );
        assert!((eq.extensions[2] - 6.693).abs() < 1e-3);
        assert_eq!(eq.positions[0], 0.0);
    }

    #[test]
    fn two_masses_single_balance() {
        let config = ChainConfig::from_point_masses(vec![3.0, 5.0], vec![200.0], 981.0).unwrap();
        let eq = equilibrium_positions(&config).unwrap();
        assert_relative_eq!(eq.extensions[0], 5.0 * 981.0 / 200.0, max_relative = 1e-15);
        assert_relative_eq!(eq.positions[1], -5.0 * 981.0 / 200.0, max_relative = 1e-15);
    }

    #[test]
    fn unloaded_spring_has_zero_extension() {
        // A spring only carries what hangs below it; with equal springs the
        // bottom spring carries the least.
        let config =
            ChainConfig::from_point_masses(vec![1.0, 1.0, 1e-300], vec![10.0, 10.0], 981.0)
                .unwrap();
        let eq = equilibrium_positions(&config).unwrap();
        assert!(eq.extensions[1] < 1e-295);
    }

    fn residual(config: &ChainConfig, positions: &[f64]) -> f64 {
        let masses = config.effective_masses().unwrap();
        let a = stiffness_matrix(config.spring_constants());
        let b = equilibrium_loads(&masses, config.g());
        let scale = b.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        a.iter()
            .zip(&b)
            .map(|(row, rhs)| {
                let lhs: f64 = row.iter().zip(positions).map(|(a, x)| a * x).sum();
                (lhs - rhs).abs() / scale
            })
            .fold(0.0, f64::max)
    }

    proptest! {
        #[test]
        fn force_balance_and_residual(
            masses in prop::collection::vec(0.5f64..200.0, 2..10),
            springs in prop::collection::vec(100.0f64..5e4, 9),
            shift in -100.0f64..100.0,
        ) {
            let n = masses.len();
            let config = ChainConfig::from_point_masses(masses.clone(), springs[..n - 1].to_vec(), 981.0).unwrap();
            let eq = equilibrium_positions(&config).unwrap();
            for j in 0..n - 1 {
                let load: f64 = masses[j + 1..].iter().sum::<f64>() * 981.0;
                prop_assert!((eq.extensions[j] * springs[j] - load).abs() <= 1e-12 * load);
                prop_assert!(eq.positions[j + 1] < eq.positions[j]);
            }
            prop_assert!(residual(&config, &eq.positions) < 1e-12);

            // gauge: shifting every position leaves the residual and the
            // extensions unchanged
            let shifted: Vec<f64> = eq.positions.iter().map(|x| x + shift).collect();
            prop_assert!(residual(&config, &shifted) < 1e-12);
            for j in 0..n - 1 {
                let e = shifted[j] - shifted[j + 1];
                prop_assert!((e - eq.extensions[j]).abs() <= 1e-12 * (1.0 + shift.abs()));
            }
        }

        #[test]
        fn equal_springs_stretch_less_further_down(
            masses in prop::collection::vec(0.5f64..200.0, 2..10),
            k in 100.0f64..5e4,
        ) {
            let n = masses.len();
            let config = ChainConfig::from_point_masses(masses, vec![k; n - 1], 981.0).unwrap();
            let eq = equilibrium_positions(&config).unwrap();
            prop_assert!(eq.extensions.windows(2).all(|w| w[1] <= w[0]));
        }
    }
}
