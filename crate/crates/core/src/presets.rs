//! Chains used throughout the tests and the CLI examples.

use crate::chain::{ChainConfig, LumpingPolicy, DEFAULT_GRAVITY};

/// Four-mass experiment with no explicit top mass: the top spring's 4.44 g
/// is the whole of `m1` after lumping.
pub fn trial_one() -> ChainConfig {
    ChainConfig::new(
        vec![0.0, 107.5, 106.56, 107.28],
        vec![13761.0, 15112.0, 15723.0],
        vec![4.44; 3],
        LumpingPolicy::AddAbove,
        DEFAULT_GRAVITY,
    )
    .expect("trial one is valid")
}

/// Same springs and lower masses as [`trial_one`], with a 107.7 g mass
/// attached above the top spring.
pub fn trial_two() -> ChainConfig {
    ChainConfig::new(
        vec![107.7, 107.5, 106.56, 107.28],
        vec![13761.0, 15112.0, 15723.0],
        vec![4.44; 3],
        LumpingPolicy::AddAbove,
        DEFAULT_GRAVITY,
    )
    .expect("trial two is valid")
}

/// `n` equal point masses `m` joined by equal springs `k`.
pub fn equal_chain(n: usize, m: f64, k: f64, g: f64) -> ChainConfig {
    ChainConfig::from_point_masses(vec![m; n], vec![k; n.saturating_sub(1)], g)
        .expect("equal chain parameters must be positive with n >= 2")
}
