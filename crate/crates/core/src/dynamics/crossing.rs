use super::Trajectory;
use crate::{Error, Result};

/// Earliest time with `|z| >= threshold`.
///
/// The first bracketing pair of samples is refined by bisection on a cubic
/// Hermite interpolant when velocities are given, otherwise on the straight
/// line between the samples.
pub fn first_crossing(times: &[f64], z: &[f64], v: Option<&[f64]>, threshold: f64) -> Option<f64> {
    let i = z.iter().position(|x| x.abs() >= threshold)?;
    if i == 0 {
        return Some(times[0]);
    }
    let (t0, t1) = (times[i - 1], times[i]);
    let h = t1 - t0;
    let interp = |t: f64| -> f64 {
        let s = (t - t0) / h;
        match v {
            Some(v) => {
                let (h00, h10) = (
                    2.0 * s.powi(3) - 3.0 * s * s + 1.0,
                    s.powi(3) - 2.0 * s * s + s,
                );
                let (h01, h11) = (-2.0 * s.powi(3) + 3.0 * s * s, s.powi(3) - s * s);
                h00 * z[i - 1] + h10 * h * v[i - 1] + h01 * z[i] + h11 * h * v[i]
            }
            None => z[i - 1] + s * (z[i] - z[i - 1]),
        }
    };
    let (mut lo, mut hi) = (t0, t1);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if interp(mid).abs() >= threshold {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// First time mass `j` (1-based) has moved `lp` from its rest position.
pub fn detect_threshold_crossing(traj: &Trajectory, j: usize, lp: f64) -> Result<Option<f64>> {
    if !(lp.is_finite() && lp > 0.0) {
        return Err(Error::InvalidArgument(format!("L_p = {lp} must be > 0")));
    }
    traj.check_mass(j)?;
    Ok(first_crossing(
        &traj.times,
        &traj.positions[j - 1],
        Some(&traj.velocities[j - 1]),
        lp,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic(c: f64, dt: f64, steps: usize) -> Trajectory {
        let times: Vec<f64> = (0..=steps).map(|i| i as f64 * dt).collect();
        let z = times.iter().map(|t| -c * t * t).collect();
        let v = times.iter().map(|t| -2.0 * c * t).collect();
        Trajectory::from_samples(times, vec![z], vec![v]).unwrap()
    }

    #[test]
    fn closed_form_quadratic() {
        let traj = quadratic(3.0, 0.01, 100);
        for lp in [0.01, 0.5, 2.9] {
            let t = detect_threshold_crossing(&traj, 1, lp).unwrap().unwrap();
            assert!((t - (lp / 3.0f64).sqrt()).abs() < 1e-12, "lp={lp}");
        }
    }

    #[test]
    fn linear_fallback_is_bracketed() {
        let times: Vec<f64> = (0..=10).map(|i| i as f64 * 0.1).collect();
        let z: Vec<f64> = times.iter().map(|t| -t * t).collect();
        let t = first_crossing(&times, &z, None, 0.3).unwrap();
        assert!(t > 0.5 && t <= 0.6);
    }

    #[test]
    fn never_crossed() {
        let traj = quadratic(1.0, 0.1, 10);
        assert_eq!(detect_threshold_crossing(&traj, 1, 1.5).unwrap(), None);
    }

    #[test]
    fn bad_arguments() {
        let traj = quadratic(1.0, 0.1, 10);
        assert!(detect_threshold_crossing(&traj, 2, 0.1).is_err());
        assert!(detect_threshold_crossing(&traj, 0, 0.1).is_err());
        assert!(detect_threshold_crossing(&traj, 1, 0.0).is_err());
    }
}
