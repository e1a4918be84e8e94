//! Laplace-domain system matrix and its characteristic polynomial.
//!
//! Transforming the nondimensional chain gives `A(s) ŷ = (-1/s, 0, .., 0)ᵀ`
//! with the tridiagonal
//!
//! ```text
//!       | s²+1   -1                               |
//!       | -α2   s²+α2+β2   -β2                    |
//! A  =  |          ..        ..        ..         |
//!       |              -α(n-1)  s²+α(n-1)+β(n-1)  -β(n-1) |
//!       |                           -αn      s²+αn |
//! ```
//!
//! `A` depends on `s` only through `u = s²`, so `det A = D(u)` is kept as a
//! degree-`n` polynomial in `u`.

use std::ops::Neg;

use num_complex::Complex64;
use num_traits::Num;
use serde::Serialize;

use crate::{Error, NondimSystem, Result};

/// Largest matrix the cofactor oracle accepts.
pub const MAX_BRUTE_FORCE_N: usize = 8;

/// `D(u) = Σ c_k u^k`, so that `P_{2n}(s) = D(s²)` and `a_{2k} = c_k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvenPolynomial {
    pub coeffs: Vec<f64>,
}

impl EvenPolynomial {
    pub fn constant(c: f64) -> Self {
        Self { coeffs: vec![c] }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Coefficient of `s^power`; zero for odd powers.
    pub fn s_coefficient(&self, power: usize) -> f64 {
        if power % 2 == 1 {
            return 0.0;
        }
        self.coeffs.get(power / 2).copied().unwrap_or(0.0)
    }

    /// Horner evaluation in `u`.
    pub fn eval_u(&self, u: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * u + c)
    }

    pub fn eval_s(&self, s: f64) -> f64 {
        self.eval_u(s * s)
    }

    pub fn eval_s_complex(&self, s: Complex64) -> Complex64 {
        let u = s * s;
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, c| acc * u + c)
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// `(u + shift) · self`
    fn times_linear(&self, shift: f64) -> Self {
        let mut out = vec![0.0; self.coeffs.len() + 1];
        for (k, c) in self.coeffs.iter().enumerate() {
            out[k] += shift * c;
            out[k + 1] += c;
        }
        Self { coeffs: out }
    }

    fn sub_scaled(mut self, other: &Self, scale: f64) -> Self {
        if other.coeffs.len() > self.coeffs.len() {
            self.coeffs.resize(other.coeffs.len(), 0.0);
        }
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a -= scale * b;
        }
        self
    }

    fn scaled(mut self, scale: f64) -> Self {
        self.coeffs.iter_mut().for_each(|c| *c *= scale);
        self
    }
}

/// Determinant of the principal block of rows/columns `first..=last`
/// (1-based) of `A`, by the three-term recurrence.
fn block_determinant(sys: &NondimSystem, first: usize, last: usize) -> EvenPolynomial {
    let mut prev = EvenPolynomial::constant(0.0);
    let mut cur = EvenPolynomial::constant(1.0);
    for j in first..=last {
        let diagonal = cur.times_linear(sys.diagonal_at_rest(j));
        let next = if j == first {
            diagonal
        } else {
            // sub-diagonal (-α_j) times super-diagonal (-β_{j-1})
            diagonal.sub_scaled(&prev, sys.alpha(j) * sys.beta(j - 1))
        };
        prev = cur;
        cur = next;
    }
    cur
}

/// `det A(s)` as a monic polynomial in `u = s²`.
pub fn char_poly(sys: &NondimSystem) -> EvenPolynomial {
    block_determinant(sys, 1, sys.n())
}

/// Leading constant of the Cramer numerator for mass `j`: replacing column
/// `j` of `A` by the driver gives `det B̃_j ~ value / s` at large `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NumeratorConstant {
    pub j: usize,
    pub value: f64,
}

pub fn numerator_constant(sys: &NondimSystem, j: usize) -> Result<NumeratorConstant> {
    check_index(sys, j)?;
    Ok(NumeratorConstant {
        j,
        value: -sys.alpha_product(j),
    })
}

/// Full Cramer numerator for mass `j` multiplied by `s`:
/// `s · det B̃_j = -(Π_{i=2..j} α_i) · det A_{j+1..n}`.
///
/// `ŷ_j(s) = N_j(s²) / (s D(s²))`.
pub fn cramer_numerator(sys: &NondimSystem, j: usize) -> Result<EvenPolynomial> {
    check_index(sys, j)?;
    let tail = if j == sys.n() {
        EvenPolynomial::constant(1.0)
    } else {
        block_determinant(sys, j + 1, sys.n())
    };
    Ok(tail.scaled(-sys.alpha_product(j)))
}

/// Sum of the first `j` diagonal entries of `A(0)`. The two-term short-time
/// series of mass `j` is `1 - tr_j τ² / ((2j+2)(2j+1))`; for `j = n` this is
/// `a_{2n-2}`.
pub fn leading_block_trace(sys: &NondimSystem, j: usize) -> Result<f64> {
    check_index(sys, j)?;
    Ok((1..=j).map(|i| sys.diagonal_at_rest(i)).sum())
}

fn check_index(sys: &NondimSystem, j: usize) -> Result<()> {
    if j == 0 || j > sys.n() {
        return Err(Error::IndexOutOfRange {
            index: j,
            n: sys.n(),
        });
    }
    Ok(())
}

/// Low and high coefficients of `P_{2n}` next to their closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoefficientChecks {
    pub a0: f64,
    pub a2: f64,
    pub a_top: f64,
    /// `(Π α_j) Σm / m1`
    pub a2_ref: f64,
    /// Trace of `A(0)`.
    pub a_top_ref: f64,
}

pub fn poly_coefficient_checks(sys: &NondimSystem) -> CoefficientChecks {
    let poly = char_poly(sys);
    let n = sys.n();
    CoefficientChecks {
        a0: poly.coeffs[0],
        a2: poly.coeffs[1],
        a_top: poly.coeffs[n - 1],
        a2_ref: sys.alpha_product(n) * sys.total_mass_ratio(),
        a_top_ref: (1..=n).map(|j| sys.diagonal_at_rest(j)).sum(),
    }
}

/// Dense `A(s)` for any scalar that can be built from `f64`.
pub fn laplace_matrix<T>(sys: &NondimSystem, s: T) -> Vec<Vec<T>>
where
    T: Copy + Num + Neg<Output = T> + From<f64>,
{
    let n = sys.n();
    let s2 = s * s;
    let mut a = vec![vec![T::zero(); n]; n];
    for j in 1..=n {
        a[j - 1][j - 1] = s2 + T::from(sys.diagonal_at_rest(j));
        if j < n {
            a[j - 1][j] = -T::from(sys.beta(j));
            a[j][j - 1] = -T::from(sys.alpha(j + 1));
        }
    }
    a
}

/// Laplace expansion along the first row. Exponential cost; test oracle only.
pub fn cofactor_determinant<T>(matrix: &[Vec<T>]) -> T
where
    T: Copy + Num + Neg<Output = T>,
{
    let n = matrix.len();
    match n {
        0 => T::one(),
        1 => matrix[0][0],
        _ => {
            let mut det = T::zero();
            for col in 0..n {
                let entry = matrix[0][col];
                if entry.is_zero() {
                    continue;
                }
                let minor: Vec<Vec<T>> = matrix[1..]
                    .iter()
                    .map(|row| {
                        row.iter()
                            .enumerate()
                            .filter(|(c, _)| *c != col)
                            .map(|(_, v)| *v)
                            .collect()
                    })
                    .collect();
                let term = entry * cofactor_determinant(&minor);
                det = if col % 2 == 0 { det + term } else { det - term };
            }
            det
        }
    }
}

/// `det A(s)` by cofactor expansion of the assembled matrix.
pub fn brute_force_det(sys: &NondimSystem, s: f64) -> Result<f64> {
    guard_size(sys)?;
    Ok(cofactor_determinant(&laplace_matrix(sys, s)))
}

pub fn brute_force_det_complex(sys: &NondimSystem, s: Complex64) -> Result<Complex64> {
    guard_size(sys)?;
    Ok(cofactor_determinant(&laplace_matrix(sys, s)))
}

fn guard_size(sys: &NondimSystem) -> Result<()> {
    if sys.n() > MAX_BRUTE_FORCE_N {
        return Err(Error::MatrixTooLarge {
            n: sys.n(),
            max: MAX_BRUTE_FORCE_N,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::trial_one;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn two_mass(alpha: f64) -> NondimSystem {
        NondimSystem::from_coefficients(vec![alpha], vec![]).unwrap()
    }

    #[test]
    fn two_mass_unit_coupling() {
        // det [[s²+1, -1], [-1, s²+1]] = s⁴ + 2s²
        let p = char_poly(&two_mass(1.0));
        assert_eq!(p.coeffs, vec![0.0, 2.0, 1.0]);
        assert_eq!(p.eval_s(1.0), 3.0);
        assert_eq!(brute_force_det(&two_mass(1.0), 1.0).unwrap(), 3.0);
    }

    #[test]
    fn two_mass_general_coupling() {
        for alpha in [0.1, 0.5, 3.0, 42.0] {
            let p = char_poly(&two_mass(alpha));
            assert_eq!(p.degree(), 2);
            assert_eq!(p.coeffs[2], 1.0);
            assert_relative_eq!(p.coeffs[1], 1.0 + alpha, max_relative = 1e-15);
            assert!(p.coeffs[0].abs() < 1e-15);
        }
    }

    #[test]
    fn singular_at_rest() {
        let sys = trial_one().nondimensionalize().unwrap();
        assert!(brute_force_det(&sys, 0.0).unwrap().abs() < 1e-15);
        let checks = poly_coefficient_checks(&sys);
        assert!(checks.a0.abs() < 1e-10 * char_poly(&sys).max_abs_coefficient());
    }

    #[test]
    fn equal_three_chain_trace() {
        let sys = NondimSystem::from_coefficients(vec![1.0, 1.0], vec![1.0]).unwrap();
        let checks = poly_coefficient_checks(&sys);
        assert_eq!(checks.a_top_ref, 4.0);
        assert_relative_eq!(checks.a_top, 4.0, max_relative = 1e-15);
        assert_relative_eq!(checks.a2, checks.a2_ref, max_relative = 1e-14);
    }

    #[test]
    fn two_mass_a2_matches_mass_ratio() {
        // α2 = m1/m2 with equal k; a2 = 1 + α2 = (m1 + m2)/m2
        let (m1, m2) = (3.0, 7.0);
        let sys = two_mass(m1 / m2);
        let checks = poly_coefficient_checks(&sys);
        assert_relative_eq!(checks.a2, (m1 + m2) / m2, max_relative = 1e-15);
        assert_relative_eq!(checks.a2_ref, (m1 + m2) / m2, max_relative = 1e-15);
    }

    #[test]
    fn numerator_constants() {
        assert_eq!(numerator_constant(&two_mass(1.0), 1).unwrap().value, -1.0);
        assert_eq!(numerator_constant(&two_mass(1.0), 2).unwrap().value, -1.0);
        let sys = trial_one().nondimensionalize().unwrap();
        let v = numerator_constant(&sys, 4).unwrap().value;
        assert_relative_eq!(
            v,
            -sys.alpha(2) * sys.alpha(3) * sys.alpha(4),
            max_relative = 1e-15
        );
        assert!(matches!(
            numerator_constant(&sys, 0),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            numerator_constant(&sys, 5),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn numerator_magnitude_decreases_for_small_couplings() {
        let sys = trial_one().nondimensionalize().unwrap();
        let values: Vec<f64> = (1..=4)
            .map(|j| numerator_constant(&sys, j).unwrap().value)
            .collect();
        assert!(values.iter().all(|v| *v < 0.0));
        assert!(values.windows(2).all(|w| w[1].abs() < w[0].abs()));
    }

    #[test]
    fn brute_force_refuses_large_chains() {
        let sys = NondimSystem::from_coefficients(vec![1.0; 8], vec![1.0; 7]).unwrap();
        assert!(matches!(
            brute_force_det(&sys, 1.0),
            Err(Error::MatrixTooLarge { n: 9, .. })
        ));
    }

    #[test]
    fn complex_evaluation_agrees() {
        let sys = trial_one().nondimensionalize().unwrap();
        let p = char_poly(&sys);
        for s in [
            Complex64::new(0.3, 1.7),
            Complex64::new(-2.0, 0.5),
            Complex64::new(0.0, 3.0),
        ] {
            let direct = brute_force_det_complex(&sys, s).unwrap();
            let poly = p.eval_s_complex(s);
            assert!((direct - poly).norm() <= 1e-12 * direct.norm().max(1.0));
        }
    }

    /// Driver column `(-1/s, 0, .., 0)` substituted into column `j`.
    fn cramer_matrix(sys: &NondimSystem, s: f64, j: usize) -> Vec<Vec<f64>> {
        let mut b = laplace_matrix(sys, s);
        for (row, line) in b.iter_mut().enumerate() {
            line[j - 1] = if row == 0 { -1.0 / s } else { 0.0 };
        }
        b
    }

    fn coupling_strategy() -> impl Strategy<Value = NondimSystem> {
        (2usize..=5).prop_flat_map(|n| {
            (
                prop::collection::vec(0.05f64..5.0, n - 1),
                prop::collection::vec(0.05f64..5.0, n - 2),
            )
                .prop_map(|(a, b)| NondimSystem::from_coefficients(a, b).unwrap())
        })
    }

    proptest! {
        #[test]
        fn cramer_numerator_against_full_b(sys in coupling_strategy(), s in 0.1f64..10.0) {
            for j in 1..=sys.n() {
                let direct = s * cofactor_determinant(&cramer_matrix(&sys, s, j));
                let closed = cramer_numerator(&sys, j).unwrap().eval_s(s);
                prop_assert!((direct - closed).abs() <= 1e-10 * direct.abs().max(1e-300),
                              "j={} direct={} closed={}", j, direct, closed);
            }
            // bottom mass: s det B = -Π α exactly
            let n = sys.n();
            let bottom = s * cofactor_determinant(&cramer_matrix(&sys, s, n));
            let expected = numerator_constant(&sys, n).unwrap().value;
            prop_assert!((bottom - expected).abs() <= 1e-10 * expected.abs());
        }

        #[test]
        fn monic_and_trace(sys in coupling_strategy()) {
            let p = char_poly(&sys);
            prop_assert_eq!(p.coeffs[sys.n()], 1.0);
            let checks = poly_coefficient_checks(&sys);
            prop_assert!((checks.a_top - checks.a_top_ref).abs() <= 1e-12 * checks.a_top_ref);
            prop_assert_eq!(leading_block_trace(&sys, sys.n()).unwrap(), checks.a_top_ref);
        }
    }
}
