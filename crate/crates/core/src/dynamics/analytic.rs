use serde::Serialize;

use crate::{Error, Result};

/// State of the two-mass cut-off benchmark at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoMassState {
    /// Top mass position (cm), `x(0) = 0`.
    pub x: f64,
    /// Bottom mass position (cm), `y(0) = -mg/k`.
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    /// Time the spring goes slack; `None` when it never does.
    pub cutoff_time: Option<f64>,
}

/// Piecewise solution for two equal masses `m` on one spring `k` that stops
/// pulling once the separation `x - y` drops below `cutoff_length`.
///
/// While the spring pulls, adding the two equations gives
/// `x + y = -g t² - mg/k`, and the top mass follows
/// `x(t) = -mg/(2k) - g t²/2 + (mg/(2k)) cos(√(2k/m) t)`. From the first
/// time `x - y = L_s` both masses fall freely.
pub fn two_mass_analytic(
    m: f64,
    k: f64,
    g: f64,
    cutoff_length: f64,
    t: f64,
) -> Result<TwoMassState> {
    if [m, k, g, cutoff_length]
        .iter()
        .any(|p| !(p.is_finite() && *p > 0.0))
    {
        return Err(Error::InvalidArgument("m, k, g and L_s must be > 0".into()));
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidArgument(format!("t = {t} must be >= 0")));
    }
    let cutoff_time = cutoff_root(m, k, g, cutoff_length);
    let state = match cutoff_time {
        Some(t_star) if t >= t_star => {
            let s = engaged_state(m, k, g, t_star);
            let dt = t - t_star;
            TwoMassState {
                x: s.x + s.vx * dt - 0.5 * g * dt * dt,
                y: s.y + s.vy * dt - 0.5 * g * dt * dt,
                vx: s.vx - g * dt,
                vy: s.vy - g * dt,
                cutoff_time,
            }
        }
        _ => TwoMassState {
            cutoff_time,
            ..engaged_state(m, k, g, t)
        },
    };
    Ok(state)
}

fn engaged_state(m: f64, k: f64, g: f64, t: f64) -> TwoMassState {
    let omega = (2.0 * k / m).sqrt();
    let a = m * g / (2.0 * k);
    let x = -a - 0.5 * g * t * t + a * (omega * t).cos();
    let vx = -g * t - a * omega * (omega * t).sin();
    TwoMassState {
        x,
        y: -g * t * t - 2.0 * a - x,
        vx,
        vy: -2.0 * g * t - vx,
        cutoff_time: None,
    }
}

/// First root of `x(t) - y(t) - L_s` by bisection over the first half
/// period, during which the separation `(mg/k) cos(ωt)` decreases
/// monotonically from `mg/k` to `-mg/k`.
fn cutoff_root(m: f64, k: f64, g: f64, cutoff_length: f64) -> Option<f64> {
    let omega = (2.0 * k / m).sqrt();
    let separation = |t: f64| {
        let s = engaged_state(m, k, g, t);
        s.x - s.y - cutoff_length
    };
    if separation(0.0) < 0.0 {
        return Some(0.0);
    }
    let (mut lo, mut hi) = (0.0, std::f64::consts::PI / omega);
    if separation(hi) >= 0.0 {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if separation(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn initial_state() {
        let (m, k, g) = (2.0, 30.0, 981.0);
        let s = two_mass_analytic(m, k, g, 1.0, 0.0).unwrap();
        assert_eq!(s.x, 0.0);
        assert!((s.y + m * g / k).abs() < 1e-12);
        assert_eq!((s.vx, s.vy), (0.0, 0.0));
    }

    #[test]
    fn short_time_law_nondimensional() {
        for t in [0.01f64, 0.05, 0.1] {
            let s = two_mass_analytic(1.0, 1.0, 1.0, 0.5, t).unwrap();
            let law = -1.0 - t.powi(4) / 12.0;
            assert!(
                ((s.y + 1.0) / (law + 1.0) - 1.0).abs() < 0.5 * t * t,
                "t={t}"
            );
        }
    }

    #[test]
    fn cutoff_time_matches_arccos() {
        // separation cos(√2 t) = L_s in units m = k = g = 1
        let s = two_mass_analytic(1.0, 1.0, 1.0, 0.5, 0.0).unwrap();
        let expected = (0.5f64).acos() / 2f64.sqrt();
        assert!((s.cutoff_time.unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn free_fall_after_cutoff() {
        let t_star = two_mass_analytic(1.0, 1.0, 1.0, 0.5, 0.0)
            .unwrap()
            .cutoff_time
            .unwrap();
        let h = 1e-3;
        let at = |t| two_mass_analytic(1.0, 1.0, 1.0, 0.5, t).unwrap();
        let t = t_star + 0.01;
        let ax = (at(t + h).x - 2.0 * at(t).x + at(t - h).x) / (h * h);
        let ay = (at(t + h).y - 2.0 * at(t).y + at(t - h).y) / (h * h);
        assert!(
            (ax + 1.0).abs() < 1e-6 && (ay + 1.0).abs() < 1e-6,
            "{ax} {ay}"
        );
        // continuity at t*
        let before = at(t_star * (1.0 - 1e-12));
        let after = at(t_star);
        assert!((before.x - after.x).abs() < 1e-10 && (before.vy - after.vy).abs() < 1e-10);
    }

    #[test]
    fn slack_from_release_when_threshold_exceeds_stretch() {
        let s = two_mass_analytic(1.0, 1.0, 1.0, 2.0, 0.5).unwrap();
        assert_eq!(s.cutoff_time, Some(0.0));
        assert!((s.x + 0.125).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(two_mass_analytic(0.0, 1.0, 1.0, 0.5, 0.1).is_err());
        assert!(two_mass_analytic(1.0, 1.0, 1.0, 0.5, -0.1).is_err());
    }
}
