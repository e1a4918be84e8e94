use log::warn;
use serde::Serialize;

use super::integrator::Rk4;
use super::model::ChainModel;
use super::{SwitchEvent, Trajectory};
use crate::equilibrium::equilibrium_positions;
use crate::{ChainConfig, Error, Result};

/// Bisection tolerance for spring switching times, in seconds.
pub const DEFAULT_EVENT_TOLERANCE: f64 = 1e-9;

/// Whether a spring that has gone slack may pull again.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReengageMode {
    /// Once below its threshold a spring stays off.
    #[default]
    OneShot,
    /// The Heaviside factor is applied literally in both directions.
    Reengaging,
}

/// Thresholds for the spring cut-off model.
///
/// Spring `j` pulls only while its stretch `e_j + z_j - z_{j+1}` (the mass
/// separation in the zero-rest-length gauge of the equilibrium solution) is
/// at least `natural_lengths[j]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutoffSpec {
    pub natural_lengths: Vec<f64>,
    pub equilibrium_extensions: Vec<f64>,
    pub mode: ReengageMode,
    pub event_tolerance: f64,
}

impl CutoffSpec {
    pub fn new(
        config: &ChainConfig,
        natural_lengths: Vec<f64>,
        mode: ReengageMode,
    ) -> Result<Self> {
        if natural_lengths.len() != config.n() - 1 {
            return Err(Error::InvalidArgument(format!(
                "{} cut-off lengths for {} springs",
                natural_lengths.len(),
                config.n() - 1
            )));
        }
        if natural_lengths.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(Error::InvalidArgument("cut-off lengths must be > 0".into()));
        }
        Ok(Self {
            natural_lengths,
            equilibrium_extensions: equilibrium_positions(config)?.extensions,
            mode,
            event_tolerance: DEFAULT_EVENT_TOLERANCE,
        })
    }

    /// Uses the config's `natural_lengths_cm`.
    pub fn from_config(config: &ChainConfig, mode: ReengageMode) -> Result<Self> {
        let lengths = config.natural_lengths().ok_or_else(|| {
            Error::InvalidConfig("cut-off model needs `natural_lengths_cm`".into())
        })?;
        Self::new(config, lengths.to_vec(), mode)
    }
}

/// Largest accepted step, `T / 50` with `T = sqrt(m1/k1)`.
pub fn step_limit(config: &ChainConfig) -> Result<f64> {
    Ok(config.nondimensionalize()?.time_scale / 50.0)
}

/// Smallest of `sqrt(m1/k1)` and every `sqrt(m_j / (k_{j-1} + k_j))`.
pub fn fastest_time_scale(config: &ChainConfig) -> Result<f64> {
    let m = config.effective_masses()?;
    let k = config.spring_constants();
    Ok((0..m.len())
        .map(|j| {
            let stiffness = if j == 0 {
                k[0]
            } else {
                k[j - 1] + k.get(j).copied().unwrap_or(0.0)
            };
            (m[j] / stiffness).sqrt()
        })
        .fold(f64::INFINITY, f64::min))
}

fn check_steps(config: &ChainConfig, t_end: f64, dt: f64) -> Result<usize> {
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "t_end = {t_end} must be >= 0"
        )));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt = {dt} must be > 0")));
    }
    let limit = step_limit(config)?;
    if dt > limit {
        return Err(Error::StepTooLarge { dt, limit });
    }
    if dt > limit / 4.0 {
        warn!("dt = {dt:e} s is above T/200; accuracy may be marginal");
    }
    let fastest = fastest_time_scale(config)?;
    if dt > fastest / 50.0 {
        warn!("dt = {dt:e} s is above a fiftieth of the fastest local period scale {fastest:e} s");
    }
    let ratio = t_end / dt;
    let nearest = ratio.round();
    let steps = if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest
    } else {
        ratio.floor()
    };
    Ok(steps as usize)
}

/// Integrates the linear released chain on the grid `t_i = i dt`.
pub fn simulate_linear(config: &ChainConfig, t_end: f64, dt: f64) -> Result<Trajectory> {
    let steps = check_steps(config, t_end, dt)?;
    let model = ChainModel::new(config)?;
    let mut traj = integrate(&model, None, steps, dt)?;
    let half = integrate(&model, None, 2 * steps, dt / 2.0)?;
    traj.error_estimate = Some(richardson(&traj, &half));
    traj.fingerprint = config.fingerprint();
    Ok(traj)
}

/// Integrates the chain with Heaviside spring cut-offs. Switching times are
/// bracketed by sign changes of `ℓ_j - L_s` and refined by bisection; the
/// integrator restarts at each event. In one-shot mode the motion after the
/// last spring goes slack is exact free fall.
pub fn simulate_cutoff(
    config: &ChainConfig,
    cutoff: &CutoffSpec,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory> {
    if cutoff.natural_lengths.len() != config.n() - 1 {
        return Err(Error::InvalidArgument(
            "cut-off spec does not match the chain".into(),
        ));
    }
    let steps = check_steps(config, t_end, dt)?;
    let model = ChainModel::new(config)?;
    let mut traj = integrate(&model, Some(cutoff), steps, dt)?;
    let half = integrate(&model, Some(cutoff), 2 * steps, dt / 2.0)?;
    traj.error_estimate = Some(richardson(&traj, &half));
    traj.fingerprint = config.fingerprint();
    Ok(traj)
}

/// `max |z_dt - z_{dt/2}| / 15` over the shared samples.
fn richardson(coarse: &Trajectory, fine: &Trajectory) -> f64 {
    coarse
        .positions
        .iter()
        .zip(&fine.positions)
        .flat_map(|(c, f)| {
            c.iter()
                .zip(f.iter().step_by(2))
                .map(|(a, b)| (a - b).abs())
        })
        .fold(0.0, f64::max)
        / 15.0
}

struct Switching<'a> {
    spec: &'a CutoffSpec,
    engaged: Vec<bool>,
}

impl Switching<'_> {
    /// Springs whose engagement would change in state `y`.
    fn flips(&self, model: &ChainModel, y: &[f64]) -> Vec<usize> {
        (0..self.engaged.len())
            .filter(|&s| {
                let slack = model.spring_length(s, y) < self.spec.natural_lengths[s];
                match (self.engaged[s], self.spec.mode) {
                    (true, _) => slack,
                    (false, ReengageMode::Reengaging) => !slack,
                    (false, ReengageMode::OneShot) => false,
                }
            })
            .collect()
    }

    fn all_slack_for_good(&self) -> bool {
        self.spec.mode == ReengageMode::OneShot && self.engaged.iter().all(|on| !on)
    }
}

fn free_fall_state(start: &[f64], elapsed: f64, g: f64) -> Vec<f64> {
    let n = start.len() / 2;
    let mut state = vec![0.0; 2 * n];
    for j in 0..n {
        state[j] = start[j] + start[n + j] * elapsed - 0.5 * g * elapsed * elapsed;
        state[n + j] = start[n + j] - g * elapsed;
    }
    state
}

fn integrate(
    model: &ChainModel,
    cutoff: Option<&CutoffSpec>,
    steps: usize,
    dt: f64,
) -> Result<Trajectory> {
    let n = model.n();
    let mut switching = cutoff.map(|spec| {
        let engaged = (0..n - 1)
            .map(|s| model.spring_length(s, &vec![0.0; n]) >= spec.natural_lengths[s])
            .collect::<Vec<_>>();
        if engaged.iter().any(|on| !on) {
            warn!("some springs start below their cut-off length and are slack at release");
        }
        Switching { spec, engaged }
    });

    let mut times = Vec::with_capacity(steps + 1);
    let mut positions = vec![Vec::with_capacity(steps + 1); n];
    let mut velocities = vec![Vec::with_capacity(steps + 1); n];
    let mut events = Vec::new();
    let mut record = |t: f64, y: &[f64]| {
        times.push(t);
        for j in 0..n {
            positions[j].push(y[j]);
            velocities[j].push(y[n + j]);
        }
    };

    let mut rk = Rk4::new(2 * n);
    let mut y = vec![0.0; 2 * n];
    let mut trial = vec![0.0; 2 * n];
    let mut t = 0.0;
    record(0.0, &y);

    // (time, state) once every spring is permanently slack
    let mut free_fall: Option<(f64, Vec<f64>)> = None;

    for i in 1..=steps {
        let target = i as f64 * dt;

        if let Some((t0, y0)) = &free_fall {
            record(target, &free_fall_state(y0, target - t0, model.g));
            continue;
        }

        while t < target {
            let h = target - t;
            let engaged = switching.as_ref().map(|s| s.engaged.clone());
            let rhs = |s: &[f64], d: &mut [f64]| model.derivative(s, engaged.as_deref(), d);
            rk.step(&y, h, &mut trial, rhs);

            let Some(sw) = switching.as_mut() else {
                std::mem::swap(&mut y, &mut trial);
                t = target;
                break;
            };
            if sw.flips(model, &trial).is_empty() {
                std::mem::swap(&mut y, &mut trial);
                t = target;
                continue;
            }

            let (mut lo, mut hi) = (0.0, h);
            while hi - lo > sw.spec.event_tolerance {
                let mid = 0.5 * (lo + hi);
                rk.step(&y, mid, &mut trial, rhs);
                if sw.flips(model, &trial).is_empty() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            rk.step(&y, hi, &mut trial, rhs);
            std::mem::swap(&mut y, &mut trial);
            t = if hi == h { target } else { t + hi };
            for s in sw.flips(model, &y) {
                sw.engaged[s] = !sw.engaged[s];
                events.push(SwitchEvent {
                    time: t,
                    spring: s + 1,
                    engaged: sw.engaged[s],
                });
            }
            if sw.all_slack_for_good() {
                free_fall = Some((t, y.clone()));
                break;
            }
        }

        if let Some((t0, y0)) = &free_fall {
            t = target;
            record(target, &free_fall_state(y0, target - t0, model.g));
            continue;
        }

        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { t });
        }
        record(target, &y);
    }

    let mut traj = Trajectory::from_samples(times, positions, velocities)?;
    traj.dt = dt;
    traj.events = events;
    Ok(traj)
}
