//! Time-domain integration of the released chain.
//!
//! All trajectories are in local coordinates: `z_j` is the displacement of
//! mass `j` from its hanging equilibrium, so every `z_j` and `v_j` starts at
//! zero.

mod analytic;
mod conserved;
mod crossing;
mod integrator;
mod model;
mod simulate;

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::{Error, Result};

pub use analytic::{two_mass_analytic, TwoMassState};
pub use conserved::{conserved_quantities, ConservedSeries};
pub use crossing::{detect_threshold_crossing, first_crossing};
pub use integrator::Rk4;
pub use model::ChainModel;
pub use simulate::{
    fastest_time_scale, simulate_cutoff, simulate_linear, step_limit, CutoffSpec, ReengageMode,
    DEFAULT_EVENT_TOLERANCE,
};

/// A spring switching on or off during a cut-off simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SwitchEvent {
    pub time: f64,
    /// 1-based spring index (spring `j` joins masses `j` and `j + 1`).
    pub spring: usize,
    pub engaged: bool,
}

/// Uniformly sampled positions and velocities of every mass.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// `positions[j][i]` is `z_{j+1}` at `times[i]`, in cm.
    pub positions: Vec<Vec<f64>>,
    /// Same layout as `positions`, in cm/s.
    pub velocities: Vec<Vec<f64>>,
    pub dt: f64,
    /// Fingerprint of the config that produced the trajectory, empty when
    /// unknown.
    pub fingerprint: String,
    /// Richardson estimate of the largest position error, from a rerun at
    /// half the step.
    pub error_estimate: Option<f64>,
    pub events: Vec<SwitchEvent>,
}

impl Trajectory {
    /// Builds a trajectory from raw samples. Times must be strictly
    /// increasing and every series must match their length.
    pub fn from_samples(
        times: Vec<f64>,
        positions: Vec<Vec<f64>>,
        velocities: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::InvalidArgument("trajectory has no samples".into()));
        }
        if positions.is_empty() || positions.len() != velocities.len() {
            return Err(Error::InvalidArgument(format!(
                "{} position series and {} velocity series",
                positions.len(),
                velocities.len()
            )));
        }
        if positions
            .iter()
            .chain(&velocities)
            .any(|s| s.len() != times.len())
        {
            return Err(Error::InvalidArgument(
                "series length differs from time axis".into(),
            ));
        }
        if times
            .windows(2)
            .any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater))
        {
            return Err(Error::InvalidArgument(
                "times must be strictly increasing".into(),
            ));
        }
        let dt = if times.len() > 1 {
            times[1] - times[0]
        } else {
            0.0
        };
        Ok(Self {
            times,
            positions,
            velocities,
            dt,
            fingerprint: String::new(),
            error_estimate: None,
            events: Vec::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.positions.len()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Positions of mass `j` (1-based).
    pub fn mass(&self, j: usize) -> Result<&[f64]> {
        self.check_mass(j)?;
        Ok(&self.positions[j - 1])
    }

    pub(crate) fn check_mass(&self, j: usize) -> Result<()> {
        if j == 0 || j > self.n() {
            return Err(Error::IndexOutOfRange {
                index: j,
                n: self.n(),
            });
        }
        Ok(())
    }

    /// Linear interpolation of `z_j` at `t`. Before the first sample the
    /// chain is still hanging at rest, so the result is zero; after the last
    /// sample there is no model and `None` is returned.
    pub fn interpolate(&self, j: usize, t: f64) -> Result<Option<f64>> {
        let z = self.mass(j)?;
        if t < self.times[0] {
            return Ok(Some(0.0));
        }
        if t > self.t_end() {
            return Ok(None);
        }
        let i = self.times.partition_point(|&s| s <= t);
        if i == self.times.len() {
            return Ok(Some(z[i - 1]));
        }
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let frac = (t - t0) / (t1 - t0);
        Ok(Some(z[i - 1] + frac * (z[i] - z[i - 1])))
    }

    fn header(&self) -> String {
        let n = self.n();
        let mut h = String::from("t");
        for j in 1..=n {
            write!(h, ",z{j}").unwrap();
        }
        for j in 1..=n {
            write!(h, ",v{j}").unwrap();
        }
        h
    }

    /// CSV with header `t,z1..zn,v1..vn` and 17 significant digits.
    pub fn to_csv_string(&self) -> String {
        let mut out = self.header();
        out.push('\n');
        for i in 0..self.len() {
            write!(out, "{:.16e}", self.times[i]).unwrap();
            for series in self.positions.iter().chain(&self.velocities) {
                write!(out, ",{:.16e}", series[i]).unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let label = path.display().to_string();
        let csv_err = |row: usize, message: String| Error::Csv {
            path: label.clone(),
            row,
            message,
        };
        let mut reader = csv::Reader::from_path(path).map_err(|e| csv_err(0, e.to_string()))?;
        let headers = reader
            .headers()
            .map_err(|e| csv_err(1, e.to_string()))?
            .clone();
        let cols = headers.len();
        if cols < 5 || cols % 2 == 0 {
            return Err(csv_err(
                1,
                format!("expected header t,z1..zn,v1..vn, got {cols} columns"),
            ));
        }
        let n = (cols - 1) / 2;
        let expected: Vec<String> = std::iter::once("t".to_string())
            .chain((1..=n).map(|j| format!("z{j}")))
            .chain((1..=n).map(|j| format!("v{j}")))
            .collect();
        if headers.iter().zip(&expected).any(|(a, b)| a.trim() != b) {
            return Err(csv_err(
                1,
                format!("expected header {}", expected.join(",")),
            ));
        }
        let mut times = Vec::new();
        let mut positions = vec![Vec::new(); n];
        let mut velocities = vec![Vec::new(); n];
        for (idx, record) in reader.records().enumerate() {
            let row = idx + 2;
            let record = record.map_err(|e| csv_err(row, e.to_string()))?;
            let values = record
                .iter()
                .map(|cell| {
                    cell.trim()
                        .parse::<f64>()
                        .map_err(|_| csv_err(row, format!("not a number: `{cell}`")))
                })
                .collect::<Result<Vec<f64>>>()?;
            times.push(values[0]);
            for j in 0..n {
                positions[j].push(values[1 + j]);
                velocities[j].push(values[1 + n + j]);
            }
        }
        Self::from_samples(times, positions, velocities).map_err(|e| csv_err(0, e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Trajectory {
        Trajectory::from_samples(
            vec![0.0, 0.1, 0.2],
            vec![
                vec![0.0, -0.1, -0.4],
                vec![0.0, 1e-17, -std::f64::consts::PI],
            ],
            vec![vec![0.0, -2.0, -4.0], vec![0.0, 0.5, 1.0 / 3.0]],
        )
        .unwrap()
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("traj.csv");
        let traj = sample();
        traj.write_csv(&path).unwrap();
        let back = Trajectory::read_csv(&path).unwrap();
        assert_eq!(back.times, traj.times);
        assert_eq!(back.positions, traj.positions);
        assert_eq!(back.velocities, traj.velocities);
        assert!(traj.to_csv_string().starts_with("t,z1,z2,v1,v2\n"));
    }

    #[test]
    fn rejects_bad_samples() {
        assert!(
            Trajectory::from_samples(vec![0.0, 0.0], vec![vec![0.0; 2]], vec![vec![0.0; 2]])
                .is_err()
        );
        assert!(
            Trajectory::from_samples(vec![0.0, 1.0], vec![vec![0.0; 3]], vec![vec![0.0; 2]])
                .is_err()
        );
        assert!(Trajectory::from_samples(vec![], vec![], vec![]).is_err());
    }

    #[test]
    fn interpolation() {
        let traj = sample();
        assert_eq!(traj.interpolate(1, -1.0).unwrap(), Some(0.0));
        assert_eq!(traj.interpolate(1, 0.1).unwrap(), Some(-0.1));
        assert!((traj.interpolate(1, 0.15).unwrap().unwrap() + 0.25).abs() < 1e-15);
        assert_eq!(traj.interpolate(1, 0.2).unwrap(), Some(-0.4));
        assert_eq!(traj.interpolate(1, 0.3).unwrap(), None);
        assert!(traj.interpolate(3, 0.1).is_err());
    }

    #[test]
    fn bad_csv_reports_row() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "t,z1,z2,v1,v2\n0,0,0,0,0\n0.1,x,0,0,0\n").unwrap();
        let err = Trajectory::read_csv(&path).unwrap_err().to_string();
        assert!(err.contains("row 3"), "{err}");
    }
}
