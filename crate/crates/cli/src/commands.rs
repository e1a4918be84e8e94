use std::io::Write as _;
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use coyote_core::asymptotics::{
    boulder_limit, factorial, hang_time, short_time_series, HangTimeReport, SeriesOrder,
};
use coyote_core::chain::load_config;
use coyote_core::dynamics::{
    detect_threshold_crossing, fastest_time_scale, simulate_cutoff, simulate_linear,
    two_mass_analytic, CutoffSpec, ReengageMode, Trajectory,
};
use coyote_core::fitting::{
    compare_track, fit_spring_constant, load_calibration_csv, load_track_csv, Alignment, Track,
};
use coyote_core::ChainConfig;

use crate::manifest::{RunManifest, SCHEMA_VERSION};
use crate::plot::{render_plot, PlotStyle, Series};
use crate::{AlignmentArg, Command, ConfigArgs, ModeArg, PlotArgs, SweepParam};

pub(crate) fn dispatch(command: Command, argv: &[String]) -> Result<()> {
    let start = Instant::now();
    let mut manifest = RunManifest::new(name(&command), argv);
    match command {
        Command::Simulate {
            config,
            t_end,
            dt,
            out,
            plot,
        } => {
            let config = load_chain(&config, &mut manifest)?;
            let traj = simulate_linear(&config, t_end, dt)?;
            write_trajectory(&traj, &out, &plot, "released chain", &mut manifest)?;
        }
        Command::SimulateCutoff {
            config,
            t_end,
            dt,
            ls,
            mode,
            out,
            plot,
        } => {
            let config = load_chain(&config, &mut manifest)?;
            let mode = match mode {
                ModeArg::OneShot => ReengageMode::OneShot,
                ModeArg::Reengaging => ReengageMode::Reengaging,
            };
            let spec = match ls {
                Some(ls) => {
                    manifest.overrides.insert("ls".into(), json!(ls));
                    CutoffSpec::new(&config, ls, mode)?
                }
                None => CutoffSpec::from_config(&config, mode)?,
            };
            let traj = simulate_cutoff(&config, &spec, t_end, dt)?;
            write_trajectory(&traj, &out, &plot, "cut-off chain", &mut manifest)?;
        }
        Command::Hangtime { config, lp, out } => {
            let config = load_chain(&config, &mut manifest)?;
            let results = lp
                .iter()
                .map(|&lp| hang_time(&config, lp))
                .collect::<Result<Vec<HangTimeReport>, _>>()?;
            let report = json!({
                "schema_version": SCHEMA_VERSION,
                "command": "hangtime",
                "config_fingerprint": config.fingerprint(),
                "n": config.n(),
                "prefactor": results[0].prefactor,
                "results": results,
            });
            emit_json(&report, out.as_deref(), &mut manifest)?;
        }
        Command::Asympt { config, out } => {
            let config = load_chain(&config, &mut manifest)?;
            let report = asympt_report(&config)?;
            emit_json(&report, out.as_deref(), &mut manifest)?;
        }
        Command::FitSprings { data, out } => {
            let (x, f) = load_calibration_csv(&data)?;
            let fit = fit_spring_constant(&x, &f)?;
            let report = json!({
                "schema_version": SCHEMA_VERSION,
                "command": "fit-springs",
                "data": data,
                "points": x.len(),
                "fit": fit,
            });
            emit_json(&report, out.as_deref(), &mut manifest)?;
        }
        Command::Compare {
            track,
            track_mass,
            traj,
            mass,
            alignment,
            window,
            lp,
            out,
            plot,
        } => {
            let model = Trajectory::read_csv(&traj)?;
            let observed = match track_mass {
                Some(j) => Track::from_trajectory(&Trajectory::read_csv(&track)?, j)?,
                None => load_track_csv(&track)?,
            };
            let alignment = match alignment {
                AlignmentArg::ReleaseTime => Alignment::ReleaseTime,
                AlignmentArg::BestShift => Alignment::BestShift { window },
            };
            let comparison = compare_track(&observed, &model, mass, alignment, lp)?;
            let report = json!({
                "schema_version": SCHEMA_VERSION,
                "command": "compare",
                "track": track,
                "trajectory": traj,
                "mass": mass,
                "alignment": alignment,
                "detection_threshold": lp,
                "comparison": comparison,
            });
            if let Some(path) = &plot.plot {
                let shifted = observed
                    .times
                    .iter()
                    .map(|t| t - comparison.shift)
                    .zip(observed.heights.iter().copied());
                let series = [
                    Series::new(format!("track {}", observed.label), shifted.collect()),
                    Series::new(
                        format!("model z{mass}"),
                        model
                            .times
                            .iter()
                            .copied()
                            .zip(model.mass(mass)?.iter().copied())
                            .collect(),
                    ),
                ];
                write_plot(&series, path, &plot, "track against model", &mut manifest)?;
            }
            emit_json(&report, out.as_deref(), &mut manifest)?;
        }
        Command::Sweep {
            config,
            param,
            values,
            geom,
            lp,
            simulate,
            dt,
            out,
            plot,
        } => {
            let config = load_chain(&config, &mut manifest)?;
            let grid = grid(values, geom)?;
            let table = sweep(&config, param, &grid, lp, simulate, dt)?;
            write_file(&out, &table.to_csv(), &mut manifest)?;
            if let Some(path) = &plot.plot {
                write_plot(
                    &table.series(),
                    path,
                    &plot,
                    "hang-time sweep",
                    &mut manifest,
                )?;
            }
            print_json(&json!({
                "schema_version": SCHEMA_VERSION,
                "command": "sweep",
                "points": grid.len(),
                "out": out,
            }))?;
        }
        Command::DemoTwoMass {
            ls,
            t_end,
            dt,
            out,
            plot,
        } => demo_two_mass(ls, t_end, dt, out.as_deref(), &plot, &mut manifest)?,
    }
    manifest.elapsed_seconds = start.elapsed().as_secs_f64();
    manifest.write()
}

fn name(command: &Command) -> &'static str {
    match command {
        Command::Simulate { .. } => "simulate",
        Command::SimulateCutoff { .. } => "simulate-cutoff",
        Command::Hangtime { .. } => "hangtime",
        Command::Asympt { .. } => "asympt",
        Command::FitSprings { .. } => "fit-springs",
        Command::Compare { .. } => "compare",
        Command::Sweep { .. } => "sweep",
        Command::DemoTwoMass { .. } => "demo-two-mass",
    }
}

fn load_chain(args: &ConfigArgs, manifest: &mut RunManifest) -> Result<ChainConfig> {
    let mut config = load_config(&args.config).with_context(|| {
        if args.config.trim_start().starts_with('{') {
            "invalid inline config".to_string()
        } else {
            format!("cannot load config {}", args.config)
        }
    })?;
    manifest.config = serde_json::from_str(&config.to_json_string())?;
    if let Some(g) = args.g {
        config = config.with_gravity(g)?;
        manifest.overrides.insert("g".into(), json!(g));
    }
    if let Some(m1) = args.m1 {
        config = config.with_top_mass(m1)?;
        manifest.overrides.insert("m1".into(), json!(m1));
    }
    manifest.config_fingerprint = Some(config.fingerprint());
    Ok(config)
}

fn write_file(path: &Path, contents: &str, manifest: &mut RunManifest) -> Result<()> {
    std::fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))?;
    manifest.outputs.push(path.to_path_buf());
    Ok(())
}

/// Prints pretty JSON to stdout. A closed pipe is not an error.
fn print_json(value: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}

fn emit_json(report: &Value, out: Option<&Path>, manifest: &mut RunManifest) -> Result<()> {
    match out {
        Some(path) => write_file(
            path,
            &(serde_json::to_string_pretty(report)? + "\n"),
            manifest,
        ),
        None => print_json(report),
    }
}

fn write_plot(
    series: &[Series],
    path: &Path,
    args: &PlotArgs,
    title: &str,
    manifest: &mut RunManifest,
) -> Result<()> {
    let style = PlotStyle {
        title: title.into(),
        log_log: args.log_log,
        ..PlotStyle::default()
    };
    let svg = render_plot(series, &style)?;
    write_file(path, &svg, manifest)
}

fn write_trajectory(
    traj: &Trajectory,
    out: &Path,
    plot: &PlotArgs,
    title: &str,
    manifest: &mut RunManifest,
) -> Result<()> {
    traj.write_csv(out)
        .with_context(|| format!("cannot write {}", out.display()))?;
    manifest.outputs.push(out.to_path_buf());
    if let Some(path) = &plot.plot {
        let series: Vec<Series> = traj
            .positions
            .iter()
            .enumerate()
            .map(|(j, z)| {
                Series::new(
                    format!("z{}", j + 1),
                    traj.times.iter().copied().zip(z.iter().copied()).collect(),
                )
            })
            .collect();
        write_plot(&series, path, plot, title, manifest)?;
    }
    let summary = json!({
        "schema_version": SCHEMA_VERSION,
        "command": manifest.subcommand,
        "out": out,
        "rows": traj.len(),
        "dt": traj.dt,
        "error_estimate": traj.error_estimate,
        "events": traj.events,
        "config_fingerprint": traj.fingerprint,
    });
    print_json(&summary)
}

#[derive(Serialize)]
struct MassAsymptotics {
    j: usize,
    power: u32,
    prefactor: f64,
    leading_coefficient: f64,
    correction_coeff: f64,
    validity_hint: f64,
    bracket_root: f64,
}

fn asympt_report(config: &ChainConfig) -> Result<Value> {
    let sys = config.nondimensionalize()?;
    let masses = (1..=config.n())
        .map(|j| {
            let law = short_time_series(config, j, SeriesOrder::TwoTerm)?;
            let p = law.prediction;
            Ok(MassAsymptotics {
                j,
                power: p.power,
                prefactor: p.prefactor,
                leading_coefficient: p.prefactor / factorial(p.power),
                correction_coeff: p.correction_coeff,
                validity_hint: p.validity_hint,
                bracket_root: law.bracket_root(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(json!({
        "schema_version": SCHEMA_VERSION,
        "command": "asympt",
        "config_fingerprint": config.fingerprint(),
        "time_scale": sys.time_scale,
        "length_scale": sys.length_scale,
        "masses": masses,
    }))
}

fn grid(values: Option<Vec<f64>>, geom: Option<Vec<f64>>) -> Result<Vec<f64>> {
    let grid = match (values, geom) {
        (Some(v), None) => v,
        (None, Some(g)) => {
            ensure!(g.len() == 3, "--geom takes start,end,count");
            let (a, b, count) = (g[0], g[1], g[2]);
            ensure!(a > 0.0 && b > 0.0, "--geom bounds must be > 0");
            ensure!(
                count >= 2.0 && count.fract() == 0.0,
                "--geom count must be an integer >= 2"
            );
            let count = count as usize;
            let ratio = (b / a).ln() / (count - 1) as f64;
            (0..count)
                .map(|i| {
                    if i == count - 1 {
                        b
                    } else {
                        a * (ratio * i as f64).exp()
                    }
                })
                .collect()
        }
        _ => bail!("give the grid with exactly one of --values or --geom"),
    };
    ensure!(!grid.is_empty(), "empty sweep grid");
    ensure!(
        grid.iter().all(|v| v.is_finite() && *v > 0.0),
        "sweep values must be > 0"
    );
    Ok(grid)
}

struct SweepTable {
    param: SweepParam,
    rows: Vec<SweepRow>,
}

struct SweepRow {
    value: f64,
    prefactor: f64,
    hang_time: f64,
    simulated: Option<Option<f64>>,
}

impl SweepTable {
    fn to_csv(&self) -> String {
        let first = match self.param {
            SweepParam::M1 => "m1_g",
            SweepParam::Lp => "lp_cm",
        };
        let simulated = self.rows.iter().any(|r| r.simulated.is_some());
        let mut out = format!("{first},prefactor,hang_time_s");
        if simulated {
            out.push_str(",simulated_hang_time_s");
        }
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e}",
                r.value, r.prefactor, r.hang_time
            ));
            if simulated {
                match r.simulated.flatten() {
                    Some(t) => out.push_str(&format!(",{t:.16e}")),
                    None => out.push(','),
                }
            }
            out.push('\n');
        }
        out
    }

    fn series(&self) -> Vec<Series> {
        let mut series = vec![Series::new(
            "formula",
            self.rows.iter().map(|r| (r.value, r.hang_time)).collect(),
        )];
        let simulated: Vec<(f64, f64)> = self
            .rows
            .iter()
            .filter_map(|r| r.simulated.flatten().map(|t| (r.value, t)))
            .collect();
        if !simulated.is_empty() {
            series.push(Series::new("simulated", simulated));
        }
        series
    }
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("COYOTE_THREADS") {
        let threads: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|t| *t > 0)
            .with_context(|| format!("COYOTE_THREADS = `{v}` is not a positive integer"))?;
        builder = builder.num_threads(threads);
    }
    Ok(builder.build()?)
}

/// A two-hundredth of the fastest time scale unless given.
fn default_step(config: &ChainConfig, dt: Option<f64>) -> Result<f64> {
    Ok(match dt {
        Some(dt) => dt,
        None => fastest_time_scale(config)? / 200.0,
    })
}

/// Simulated crossing of the bottom mass, integrating to three predicted
/// hang-times.
fn simulated_hang_time(
    config: &ChainConfig,
    lp: f64,
    predicted: f64,
    dt: Option<f64>,
) -> Result<Option<f64>> {
    let dt = default_step(config, dt)?;
    let traj = simulate_linear(config, 3.0 * predicted, dt)?;
    Ok(detect_threshold_crossing(&traj, config.n(), lp)?)
}

fn sweep(
    config: &ChainConfig,
    param: SweepParam,
    grid: &[f64],
    lp: f64,
    simulate: bool,
    dt: Option<f64>,
) -> Result<SweepTable> {
    let pool = thread_pool()?;
    let rows = match param {
        SweepParam::M1 => {
            let prefactors = boulder_limit(config, grid)?;
            pool.install(|| {
                prefactors
                    .samples
                    .par_iter()
                    .map(|&(m1, q)| {
                        let chain = config.with_top_mass(m1)?;
                        let predicted = hang_time(&chain, lp)?.hang_time;
                        let simulated = if simulate {
                            Some(simulated_hang_time(&chain, lp, predicted, dt)?)
                        } else {
                            None
                        };
                        Ok(SweepRow {
                            value: m1,
                            prefactor: q,
                            hang_time: predicted,
                            simulated,
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })?
        }
        SweepParam::Lp => {
            let reports = grid
                .iter()
                .map(|&lp| hang_time(config, lp))
                .collect::<Result<Vec<_>, _>>()?;
            let traj = if simulate {
                let longest = reports.iter().map(|r| r.hang_time).fold(0.0, f64::max);
                let dt = default_step(config, dt)?;
                Some(simulate_linear(config, 3.0 * longest, dt)?)
            } else {
                None
            };
            reports
                .iter()
                .map(|r| {
                    let simulated = match &traj {
                        Some(traj) => Some(detect_threshold_crossing(
                            traj,
                            config.n(),
                            r.detection_threshold,
                        )?),
                        None => None,
                    };
                    Ok(SweepRow {
                        value: r.detection_threshold,
                        prefactor: r.prefactor,
                        hang_time: r.hang_time,
                        simulated,
                    })
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    Ok(SweepTable { param, rows })
}

fn demo_two_mass(
    ls: f64,
    t_end: Option<f64>,
    dt: f64,
    out: Option<&Path>,
    plot: &PlotArgs,
    manifest: &mut RunManifest,
) -> Result<()> {
    let config = ChainConfig::from_point_masses(vec![1.0, 1.0], vec![1.0], 1.0)?
        .with_natural_lengths(vec![ls])?;
    manifest.config = serde_json::from_str(&config.to_json_string())?;
    manifest.config_fingerprint = Some(config.fingerprint());
    let t_star = two_mass_analytic(1.0, 1.0, 1.0, ls, 0.0)?.cutoff_time;
    let t_end = t_end.unwrap_or(match t_star {
        Some(t) if t > 0.0 => 2.0 * t,
        _ => 2.0,
    });
    let spec = CutoffSpec::from_config(&config, ReengageMode::OneShot)?;
    let traj = simulate_cutoff(&config, &spec, t_end, dt)?;

    let mut csv = String::from("t,x,y,x_exact,y_exact\n");
    let mut max_error = 0.0f64;
    let mut exact_y = Vec::with_capacity(traj.len());
    for (i, &t) in traj.times.iter().enumerate() {
        let exact = two_mass_analytic(1.0, 1.0, 1.0, ls, t)?;
        // y hangs one unit below x at rest
        let (x, y) = (traj.positions[0][i], traj.positions[1][i] - 1.0);
        max_error = max_error.max((x - exact.x).abs()).max((y - exact.y).abs());
        csv.push_str(&format!(
            "{t:.16e},{x:.16e},{y:.16e},{:.16e},{:.16e}\n",
            exact.x, exact.y
        ));
        exact_y.push((t, exact.y));
    }
    let probe = 0.3f64.min(traj.t_end());
    let y_probe = traj
        .interpolate(2, probe)?
        .context("probe time outside the run")?
        - 1.0;
    let law = -1.0 - probe.powi(4) / 12.0;
    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "command": "demo-two-mass",
        "ls": ls,
        "dt": dt,
        "t_end": traj.t_end(),
        "cutoff_time_exact": t_star,
        "cutoff_time_simulated": traj.events.first().map(|e| e.time),
        "max_abs_error": max_error,
        "small_time_law": {
            "t": probe,
            "y": y_probe,
            "law": law,
            "relative_displacement_error": ((y_probe + 1.0) / (law + 1.0) - 1.0).abs(),
        },
        "out": out,
    });
    if let Some(path) = out {
        write_file(path, &csv, manifest)?;
    }
    if let Some(path) = &plot.plot {
        let series = [
            Series::new(
                "x",
                traj.times
                    .iter()
                    .copied()
                    .zip(traj.positions[0].iter().copied())
                    .collect(),
            ),
            Series::new(
                "y",
                traj.times
                    .iter()
                    .zip(&traj.positions[1])
                    .map(|(t, z)| (*t, z - 1.0))
                    .collect(),
            ),
            Series::new("y exact", exact_y),
        ];
        write_plot(&series, path, plot, "two-mass cut-off", manifest)?;
    }
    print_json(&report)
}
