//! Spring calibration and comparison against tracked trajectories.

use std::path::Path;

use serde::Serialize;

use crate::dynamics::{first_crossing, Trajectory};
use crate::{Error, Result};

/// Straight-line fit of force against displacement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpringFit {
    /// Slope, dyn/cm.
    pub k: f64,
    /// dyn.
    pub intercept: f64,
    pub r_squared: f64,
    /// `force - (k x + intercept)` per point, dyn.
    pub residuals: Vec<f64>,
}

/// Ordinary least squares of `forces` on `displacements`.
pub fn fit_spring_constant(displacements: &[f64], forces: &[f64]) -> Result<SpringFit> {
    if displacements.len() != forces.len() {
        return Err(Error::InvalidArgument(format!(
            "{} displacements but {} forces",
            displacements.len(),
            forces.len()
        )));
    }
    if displacements.iter().chain(forces).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "calibration data must be finite".into(),
        ));
    }
    let n = displacements.len() as f64;
    if displacements.len() < 2 {
        return Err(Error::DegenerateData("need at least two points".into()));
    }
    let mean_x = displacements.iter().sum::<f64>() / n;
    let mean_f = forces.iter().sum::<f64>() / n;
    let sxx: f64 = displacements.iter().map(|x| (x - mean_x).powi(2)).sum();
    if sxx <= f64::EPSILON * displacements.iter().map(|x| x * x).sum::<f64>() {
        return Err(Error::DegenerateData(
            "all displacements are identical".into(),
        ));
    }
    let sxf: f64 = displacements
        .iter()
        .zip(forces)
        .map(|(x, f)| (x - mean_x) * (f - mean_f))
        .sum();
    let k = sxf / sxx;
    let intercept = mean_f - k * mean_x;
    let residuals: Vec<f64> = displacements
        .iter()
        .zip(forces)
        .map(|(x, f)| f - (k * x + intercept))
        .collect();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    let ss_tot: f64 = forces.iter().map(|f| (f - mean_f).powi(2)).sum();
    let r_squared = if ss_tot == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Ok(SpringFit {
        k,
        intercept,
        r_squared,
        residuals,
    })
}

/// `|z| ≈ prefactor · t^exponent` fitted on a log-log scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub samples: usize,
    pub t_min: f64,
    pub t_max: f64,
}

/// Least-squares line through `(ln t, ln |z|)` over the samples with `t > 0`
/// and `lo <= |z| <= hi`.
pub fn fit_power_law(times: &[f64], z: &[f64], lo: f64, hi: f64) -> Result<PowerLawFit> {
    if times.len() != z.len() {
        return Err(Error::InvalidArgument(
            "times and values differ in length".into(),
        ));
    }
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidArgument(format!("bad window [{lo}, {hi}]")));
    }
    let (ts, zs): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(z)
        .filter(|(t, z)| **t > 0.0 && (lo..=hi).contains(&z.abs()))
        .map(|(t, z)| (*t, z.abs()))
        .unzip();
    let log_t: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let log_z: Vec<f64> = zs.iter().map(|z| z.ln()).collect();
    let line = fit_spring_constant(&log_t, &log_z)?;
    Ok(PowerLawFit {
        exponent: line.k,
        prefactor: line.intercept.exp(),
        samples: ts.len(),
        t_min: ts[0],
        t_max: ts[ts.len() - 1],
    })
}

fn csv_error(path: &Path, row: usize, message: impl Into<String>) -> Error {
    Error::Csv {
        path: path.display().to_string(),
        row,
        message: message.into(),
    }
}

/// Reads a two-column CSV with the given header, returning the columns.
fn read_two_columns(path: &Path, header: [&str; 2]) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, 0, e.to_string()))?;
    let found = reader
        .headers()
        .map_err(|e| csv_error(path, 1, e.to_string()))?;
    if found.len() != 2 || found.iter().zip(header).any(|(a, b)| a.trim() != b) {
        return Err(csv_error(
            path,
            1,
            format!("expected header `{}`", header.join(",")),
        ));
    }
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for (idx, record) in reader.records().enumerate() {
        let row = idx + 2;
        let record = record.map_err(|e| csv_error(path, row, e.to_string()))?;
        let parse = |cell: &str| {
            cell.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| csv_error(path, row, format!("not a number: `{cell}`")))
        };
        a.push(parse(&record[0])?);
        b.push(parse(&record[1])?);
    }
    Ok((a, b))
}

/// Loads `displacement_cm,force_dyn` calibration data.
pub fn load_calibration_csv(path: impl AsRef<Path>) -> Result<(Vec<f64>, Vec<f64>)> {
    read_two_columns(path.as_ref(), ["displacement_cm", "force_dyn"])
}

/// Measured displacement of one mass against time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Track {
    pub times: Vec<f64>,
    /// cm, relative to the hanging rest position.
    pub heights: Vec<f64>,
    pub label: String,
}

impl Track {
    pub fn new(times: Vec<f64>, heights: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if times.len() != heights.len() {
            return Err(Error::InvalidArgument(
                "times and heights differ in length".into(),
            ));
        }
        if times.is_empty() {
            return Err(Error::InvalidArgument("track has no samples".into()));
        }
        if let Some(i) = times
            .windows(2)
            .position(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater))
        {
            return Err(Error::InvalidArgument(format!(
                "track times not strictly increasing at sample {}",
                i + 2
            )));
        }
        Ok(Self {
            times,
            heights,
            label: label.into(),
        })
    }

    /// Samples mass `j` of a trajectory as a track.
    pub fn from_trajectory(traj: &Trajectory, j: usize) -> Result<Self> {
        Self::new(traj.times.clone(), traj.mass(j)?.to_vec(), format!("z{j}"))
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Median spacing between samples.
    pub fn frame_interval(&self) -> f64 {
        let mut gaps: Vec<f64> = self.times.windows(2).map(|w| w[1] - w[0]).collect();
        if gaps.is_empty() {
            return 0.0;
        }
        gaps.sort_by(f64::total_cmp);
        gaps[gaps.len() / 2]
    }
}

/// Loads a `t,z` track. Times must be strictly increasing.
pub fn load_track_csv(path: impl AsRef<Path>) -> Result<Track> {
    let path = path.as_ref();
    let (times, heights) = read_two_columns(path, ["t", "z"])?;
    if let Some(i) = times
        .windows(2)
        .position(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater))
    {
        return Err(csv_error(path, i + 3, "times must be strictly increasing"));
    }
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Track::new(times, heights, label)
}

/// How track time zero is matched to the model's release.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Alignment {
    /// Track time 0 is the release.
    ReleaseTime,
    /// Search shifts in `[-window, window]` s for the smallest rms.
    BestShift { window: f64 },
}

impl Alignment {
    pub const DEFAULT_WINDOW: f64 = 0.05;

    pub fn best_shift() -> Self {
        Alignment::BestShift {
            window: Self::DEFAULT_WINDOW,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub rms: f64,
    pub max_abs: f64,
    /// Release time on the track clock, s.
    pub shift: f64,
    /// Number of track samples compared.
    pub samples: usize,
    /// Observed hang-time, on the model clock.
    pub hang_time_obs: Option<f64>,
    pub hang_time_model: Option<f64>,
}

fn residual_stats(
    track: &Track,
    traj: &Trajectory,
    j: usize,
    shift: f64,
) -> Result<Option<(f64, f64, usize)>> {
    let (mut sum_sq, mut max_abs, mut count) = (0.0, 0.0f64, 0usize);
    for (&t, &h) in track.times.iter().zip(&track.heights) {
        let t_model = t - shift;
        if t_model < traj.times[0] {
            continue;
        }
        if let Some(z) = traj.interpolate(j, t_model)? {
            let r = h - z;
            sum_sq += r * r;
            max_abs = max_abs.max(r.abs());
            count += 1;
        }
    }
    Ok((count > 0).then(|| ((sum_sq / count as f64).sqrt(), max_abs, count)))
}

/// Compares a track with mass `j` of a model trajectory.
///
/// The model is interpolated linearly onto the aligned track times; only
/// samples inside the model's time range are used. Hang-times use the same
/// threshold rule as [`crate::dynamics::detect_threshold_crossing`], with
/// the track's own samples; `lp = None` skips them.
pub fn compare_track(
    track: &Track,
    traj: &Trajectory,
    j: usize,
    alignment: Alignment,
    lp: Option<f64>,
) -> Result<Comparison> {
    traj.check_mass(j)?;
    if let Some(lp) = lp {
        if !(lp.is_finite() && lp > 0.0) {
            return Err(Error::InvalidArgument(format!("L_p = {lp} must be > 0")));
        }
    }
    if track.len() > 1 && traj.len() > 1 && traj.dt > track.frame_interval() * (1.0 + 1e-9) {
        log::warn!("model is sampled more coarsely than the track");
    }
    let (shift, (rms, max_abs, samples)) = match alignment {
        Alignment::ReleaseTime => (
            0.0,
            residual_stats(track, traj, j, 0.0)?.ok_or(Error::NoOverlap)?,
        ),
        Alignment::BestShift { window } => {
            if !(window.is_finite() && window >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "shift window {window} must be >= 0"
                )));
            }
            best_shift(track, traj, j, window)?
        }
    };
    let hang_time_obs =
        lp.and_then(|lp| first_crossing(&track.times, &track.heights, None, lp).map(|t| t - shift));
    let hang_time_model = match lp {
        Some(lp) => crate::dynamics::detect_threshold_crossing(traj, j, lp)?,
        None => None,
    };
    Ok(Comparison {
        rms,
        max_abs,
        shift,
        samples,
        hang_time_obs,
        hang_time_model,
    })
}

/// Scans 201 shifts across the window, then refines by golden-section
/// search between the neighbours of the best grid point.
fn best_shift(
    track: &Track,
    traj: &Trajectory,
    j: usize,
    window: f64,
) -> Result<(f64, (f64, f64, usize))> {
    const HALF_GRID: i64 = 100;
    let step = window / HALF_GRID as f64;
    let mut best: Option<(f64, (f64, f64, usize))> = None;
    let consider = |shift: f64, best: &mut Option<(f64, (f64, f64, usize))>| -> Result<()> {
        if let Some(stats) = residual_stats(track, traj, j, shift)? {
            if best.as_ref().is_none_or(|(_, b)| stats.0 < b.0) {
                *best = Some((shift, stats));
            }
        }
        Ok(())
    };
    let count = if step > 0.0 { HALF_GRID } else { 0 };
    for i in -count..=count {
        consider(i as f64 * step, &mut best)?;
    }
    let (grid_shift, _) = best.ok_or(Error::NoOverlap)?;
    let rms_at =
        |s: f64| residual_stats(track, traj, j, s).map(|r| r.map_or(f64::INFINITY, |r| r.0));
    let (mut a, mut b) = (
        (grid_shift - step).max(-window),
        (grid_shift + step).min(window),
    );
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..60 {
        if b - a < 1e-12 {
            break;
        }
        let c = b - phi * (b - a);
        let d = a + phi * (b - a);
        if rms_at(c)? <= rms_at(d)? {
            b = d;
        } else {
            a = c;
        }
    }
    consider(0.5 * (a + b), &mut best)?;
    Ok(best.expect("grid search found an overlap"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn exact_line() {
        let fit = fit_spring_constant(&[1.0, 2.0], &[15000.0, 30000.0]).unwrap();
        assert!((fit.k - 15000.0).abs() < 1e-9);
        assert!(fit.intercept.abs() < 1e-9);
        assert_eq!(fit.r_squared, 1.0);
    }

    #[test]
    fn degenerate_data() {
        let err = fit_spring_constant(&[1.5, 1.5, 1.5], &[1.0, 2.0, 3.0]).unwrap_err();
        assert!(err.to_string().contains("degenerate data"), "{err}");
        assert!(fit_spring_constant(&[1.0], &[1.0]).is_err());
        assert!(fit_spring_constant(&[1.0, 2.0], &[1.0]).is_err());
    }

    fn synthetic(seed: u64, k: f64) -> (Vec<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 0.01).unwrap();
        let x: Vec<f64> = (1..=8).map(|i| 0.5 * i as f64).collect();
        let f = x
            .iter()
            .map(|x| k * x * (1.0 + noise.sample(&mut rng)))
            .collect();
        (x, f)
    }

    #[test]
    fn seeded_noisy_calibration() {
        let (x, f) = synthetic(42, 15000.0);
        let fit = fit_spring_constant(&x, &f).unwrap();
        assert!((fit.k / 15000.0 - 1.0).abs() < 0.01, "k = {}", fit.k);
        assert!(fit.r_squared > 0.99);
    }

    #[test]
    fn power_law_recovers_exponent() {
        let t: Vec<f64> = (0..=1000).map(|i| i as f64 * 1e-3).collect();
        let z: Vec<f64> = t.iter().map(|t| -3.0 * t.powi(6)).collect();
        let fit = fit_power_law(&t, &z, 1e-8, 1e-2).unwrap();
        assert!((fit.exponent - 6.0).abs() < 1e-10);
        assert!((fit.prefactor / 3.0 - 1.0).abs() < 1e-9);
        assert!(fit.t_min > 0.0 && 3.0 * fit.t_max.powi(6) <= 1e-2);
        assert!(fit_power_law(&t, &z, 10.0, 20.0).is_err());
    }

    #[test]
    fn track_csv() {
        let dir = tempfile::tempdir().unwrap();
        let ok = dir.path().join("ok.csv");
        std::fs::write(&ok, "t,z\n0,0\n0.001,-0.5\n").unwrap();
        assert_eq!(load_track_csv(&ok).unwrap().len(), 2);

        let dup = dir.path().join("dup.csv");
        std::fs::write(&dup, "t,z\n0,0\n0,-0.5\n").unwrap();
        assert!(load_track_csv(&dup).is_err());

        let bad = dir.path().join("bad.csv");
        std::fs::write(&bad, "t,z\n0,0\n0.001,abc\n").unwrap();
        let err = load_track_csv(&bad).unwrap_err().to_string();
        assert!(err.contains("row 3"), "{err}");

        let header = dir.path().join("header.csv");
        std::fs::write(&header, "time,z\n0,0\n").unwrap();
        assert!(load_track_csv(&header).is_err());
    }

    fn model() -> Trajectory {
        let times: Vec<f64> = (0..=400).map(|i| i as f64 * 1e-3).collect();
        let z = times.iter().map(|t| -490.5 * t * t).collect();
        let v = times.iter().map(|t| -981.0 * t).collect();
        Trajectory::from_samples(times, vec![z], vec![v]).unwrap()
    }

    #[test]
    fn self_comparison_is_exact() {
        let traj = model();
        let track = Track::from_trajectory(&traj, 1).unwrap();
        let c = compare_track(&track, &traj, 1, Alignment::ReleaseTime, Some(0.05)).unwrap();
        assert_eq!(c.rms, 0.0);
        assert_eq!(c.max_abs, 0.0);
        let (obs, model) = (c.hang_time_obs.unwrap(), c.hang_time_model.unwrap());
        assert!((obs - model).abs() <= track.frame_interval());
    }

    #[test]
    fn constant_offset() {
        let traj = model();
        let mut track = Track::from_trajectory(&traj, 1).unwrap();
        track.heights.iter_mut().for_each(|h| *h += 0.3);
        let c = compare_track(&track, &traj, 1, Alignment::ReleaseTime, None).unwrap();
        assert!((c.rms - 0.3).abs() < 1e-12);
    }

    #[test]
    fn shifted_track_is_recovered() {
        let traj = model();
        let frame = 1e-3;
        let times: Vec<f64> = (0..300).map(|i| i as f64 * frame).collect();
        let heights = times
            .iter()
            .map(|&t| {
                if t < 0.01 {
                    0.0
                } else {
                    -490.5 * (t - 0.01).powi(2)
                }
            })
            .collect();
        let track = Track::new(times, heights, "shifted").unwrap();
        let c = compare_track(&track, &traj, 1, Alignment::best_shift(), None).unwrap();
        assert!((c.shift - 0.01).abs() <= frame, "shift = {}", c.shift);
    }

    #[test]
    fn no_overlap() {
        let traj = model();
        let track = Track::new(vec![5.0, 6.0], vec![0.0, 0.0], "late").unwrap();
        assert!(matches!(
            compare_track(&track, &traj, 1, Alignment::ReleaseTime, None),
            Err(Error::NoOverlap)
        ));
    }

    proptest! {
        #[test]
        fn affine_equivariance(
            k in 100.0f64..1e5,
            c in 0.1f64..10.0,
            offset in -1e4f64..1e4,
            seed in 0u64..1000,
        ) {
            let (x, f) = synthetic(seed, k);
            let base = fit_spring_constant(&x, &f).unwrap();
            let scaled: Vec<f64> = f.iter().map(|v| v * c).collect();
            let fit = fit_spring_constant(&x, &scaled).unwrap();
            prop_assert!((fit.k / (base.k * c) - 1.0).abs() < 1e-12);
            let shifted: Vec<f64> = f.iter().map(|v| v + offset).collect();
            let fit = fit_spring_constant(&x, &shifted).unwrap();
            prop_assert!((fit.k / base.k - 1.0).abs() < 1e-9);
            prop_assert!((fit.intercept - base.intercept - offset).abs() < 1e-9 * (1.0 + offset.abs() + base.intercept.abs()));
        }

        #[test]
        fn seeded_monte_carlo_recovers_k(seed in 0u64..10_000) {
            // 1% noise on 8 points: slope error is ~0.5% at one sigma
            let (x, f) = synthetic(seed, 15000.0);
            let fit = fit_spring_constant(&x, &f).unwrap();
            prop_assert!((fit.k / 15000.0 - 1.0).abs() < 0.03);
        }

        #[test]
        fn rms_zero_iff_track_equals_model(i in 0usize..301, delta in prop_oneof![Just(0.0), 1e-6f64..1.0]) {
            let traj = model();
            let mut track = Track::from_trajectory(&traj, 1).unwrap();
            track.heights[i] += delta;
            let c = compare_track(&track, &traj, 1, Alignment::ReleaseTime, None).unwrap();
            prop_assert_eq!(c.rms == 0.0, delta == 0.0);
        }
    }
}
