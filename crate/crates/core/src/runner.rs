//! Command back end: scenario runners, parameter sweeps, spectrum reports,
//! and channel-bound tables, all emitting CSV data files paired with JSON
//! manifests.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::liouville::{classify_noise, spectrum, steady_report, NoiseTag};
use crate::models::{initial_ghz_state, initial_product_state, SpinModel};
use crate::qfi::{
    channel_qfi_upper_bound, default_fd_step, dstate_fd, qfi_by_method, qfi_dephasing_analytic,
    ParamTag, QfiMethod, QfiRecord,
};
use crate::state::DensityMatrix;

const FLOAT_PRECISION: usize = 12;

fn fmt(x: f64) -> String {
    format!("{:.1$e}", x, FLOAT_PRECISION)
}

/// Map library errors onto process exit codes: 2 for configuration problems,
/// 3 for numerical failures.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::InvalidParameter(_)
        | Error::NegativeRate(_)
        | Error::Io(_) => 2,
        _ => 3,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    Product,
    Ghz,
}

impl Default for InitialKind {
    fn default() -> Self {
        InitialKind::Product
    }
}

fn initial_state(kind: InitialKind, n: usize, beta: f64) -> Result<DensityMatrix> {
    match kind {
        InitialKind::Product => Ok(initial_product_state(n, beta)),
        InitialKind::Ghz => initial_ghz_state(n),
    }
}

/// QFI of the evolved state with respect to one estimated parameter, via the
/// full finite-difference pipeline.
pub fn qfi_point(
    model: &SpinModel,
    initial: InitialKind,
    beta: f64,
    param: ParamTag,
    t: f64,
    method: QfiMethod,
) -> Result<f64> {
    if param == ParamTag::Beta && initial == InitialKind::Ghz {
        return Err(Error::InvalidParameter(
            "beta is not a parameter of the GHZ initial state".into(),
        ));
    }
    let m = *model;
    let family = move |theta: f64| -> Result<DensityMatrix> {
        let (mm, b) = match param {
            ParamTag::B => (
                SpinModel {
                    b: theta,
                    ..m
                },
                beta,
            ),
            ParamTag::Vartheta => (
                SpinModel {
                    vartheta: theta,
                    ..m
                },
                beta,
            ),
            ParamTag::Beta => (m, theta),
        };
        mm.validate()?;
        mm.evolve(&initial_state(initial, mm.n, b)?, t)
    };
    let theta0 = match param {
        ParamTag::B => model.b,
        ParamTag::Vartheta => model.vartheta,
        ParamTag::Beta => beta,
    };
    let d = dstate_fd(&family, theta0, default_fd_step(theta0))?;
    let rho = family(theta0)?;
    let f = qfi_by_method(&rho, &d.d_rho, method)?;
    Ok(QfiRecord::new(param, t, f, method)?.value)
}

fn linspace(start: f64, stop: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![start];
    }
    (0..points)
        .map(|k| start + (stop - start) * k as f64 / (points - 1) as f64)
        .collect()
}

fn write_csv(path: &Path, header: &str, rows: &[String]) -> Result<()> {
    let mut out = String::with_capacity(rows.len() * 64 + header.len() + 2);
    out.push_str(header);
    out.push('\n');
    for r in rows {
        out.push_str(r);
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

fn unix_now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn write_manifest(
    data_path: &Path,
    command: &str,
    config_echo: &serde_json::Value,
    axes: serde_json::Value,
    warnings: &[String],
) -> Result<PathBuf> {
    let manifest = json!({
        "command": command,
        "data_file": data_path.file_name().and_then(|s| s.to_str()),
        "config": config_echo,
        "version": env!("CARGO_PKG_VERSION"),
        "generated_unix": unix_now(),
        "axes": axes,
        "warnings": warnings,
    });
    let mut mpath = data_path.to_path_buf();
    let stem = mpath
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("output")
        .to_string();
    mpath.set_file_name(format!("{stem}.manifest.json"));
    fs::write(&mpath, serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(mpath)
}

fn parse_config<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<(T, serde_json::Value)> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let echo: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("invalid JSON in {}: {e}", path.display())))?;
    let cfg: T = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("bad config {}: {e}", path.display())))?;
    Ok((cfg, echo))
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    if threads == 0 {
        f()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        pool.install(f)
    }
}

// ---------------------------------------------------------------------------
// scenario

fn default_b() -> f64 {
    0.1
}
fn default_t_points() -> usize {
    400
}
fn default_gamma_list() -> Vec<f64> {
    vec![0.02, 0.05, 0.1, 0.2]
}
fn default_alpha_points() -> usize {
    79
}
fn default_grid_t_points() -> usize {
    60
}
fn default_surface_points() -> usize {
    21
}
fn default_surface_t_points() -> usize {
    120
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub id: u8,
    #[serde(rename = "B", default = "default_b")]
    pub b: f64,
    /// Initial-state angle; default pi/2 for scenario 1, pi (ground state)
    /// for scenario 2, pi/3 for scenario 3.
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub vartheta: Option<f64>,
    #[serde(default)]
    pub gamma: Option<f64>,
    /// Time grid stop; default 10/B.
    #[serde(default)]
    pub t_max: Option<f64>,
    #[serde(default = "default_t_points")]
    pub t_points: usize,
    /// Scenario-2 curve set; artifact choice, echoed in the manifest.
    #[serde(default = "default_gamma_list")]
    pub gamma_list: Vec<f64>,
    #[serde(default = "default_alpha_points")]
    pub alpha_points: usize,
    #[serde(default = "default_grid_t_points")]
    pub grid_t_points: usize,
    #[serde(default = "default_surface_points")]
    pub surface_points: usize,
    #[serde(default = "default_surface_t_points")]
    pub surface_t_points: usize,
}

pub fn run_scenario(config: &Path, out: &Path, threads: usize) -> Result<Vec<PathBuf>> {
    let (cfg, echo) = parse_config::<ScenarioConfig>(config)?;
    fs::create_dir_all(out)?;
    in_pool(threads, || match cfg.id {
        1 => scenario1(&cfg, &echo, out),
        2 => scenario2(&cfg, &echo, out),
        3 => scenario3(&cfg, &echo, out),
        other => Err(Error::Config(format!("unknown scenario id {other}"))),
    })
}

/// Scenario 1: transverse dephasing, analytic vs numeric F_beta and F_B.
fn scenario1(cfg: &ScenarioConfig, echo: &serde_json::Value, out: &Path) -> Result<Vec<PathBuf>> {
    let b = cfg.b;
    let beta = cfg.beta.unwrap_or(std::f64::consts::FRAC_PI_2);
    let gamma = cfg.gamma.unwrap_or(0.1);
    let ts = linspace(0.0, cfg.t_max.unwrap_or(10.0 / b), cfg.t_points);
    // field along z, jump sz: alpha = vartheta = pi/2
    let model = SpinModel::new(1, b, std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2, gamma)?;
    let rows: Vec<String> = ts
        .par_iter()
        .map(|&t| -> Result<String> {
            let (fb_a, fbb_a) = qfi_dephasing_analytic(beta, gamma, t);
            let fb_n = qfi_point(
                &model,
                InitialKind::Product,
                beta,
                ParamTag::Beta,
                t,
                QfiMethod::QubitClosed,
            )?;
            let fbb_n = qfi_point(
                &model,
                InitialKind::Product,
                beta,
                ParamTag::B,
                t,
                QfiMethod::QubitClosed,
            )?;
            Ok(format!(
                "{},{},{},{},{}",
                fmt(t),
                fmt(fb_a),
                fmt(fb_n),
                fmt(fbb_a),
                fmt(fbb_n)
            ))
        })
        .collect::<Result<_>>()?;
    let path = out.join("scenario1.csv");
    write_csv(
        &path,
        "t,f_beta_analytic,f_beta_numeric,f_b_analytic,f_b_numeric",
        &rows,
    )?;
    let m = write_manifest(
        &path,
        "scenario",
        echo,
        json!({"t": {"start": 0.0, "stop": ts.last().copied().unwrap_or(0.0), "points": ts.len()}}),
        &[],
    )?;
    Ok(vec![path, m])
}

/// Scenario 2: ground state in a transverse field with tilted noise;
/// F_B time series per gamma and the alpha x (gamma t) surface.
fn scenario2(cfg: &ScenarioConfig, echo: &serde_json::Value, out: &Path) -> Result<Vec<PathBuf>> {
    let b = cfg.b;
    let beta = cfg.beta.unwrap_or(std::f64::consts::PI); // ground state
    let alpha = cfg.alpha.unwrap_or(std::f64::consts::FRAC_PI_4);
    let vartheta = cfg.vartheta.unwrap_or(std::f64::consts::FRAC_PI_2);
    let ts = linspace(0.0, cfg.t_max.unwrap_or(10.0 / b), cfg.t_points);

    let mut jobs = Vec::new();
    for &g in &cfg.gamma_list {
        for &t in &ts {
            jobs.push((g, t));
        }
    }
    let rows: Vec<String> = jobs
        .par_iter()
        .map(|&(g, t)| -> Result<String> {
            let model = SpinModel::new(1, b, vartheta, alpha, g)?;
            let f = qfi_point(
                &model,
                InitialKind::Product,
                beta,
                ParamTag::B,
                t,
                QfiMethod::Sld,
            )?;
            Ok(format!("{},{},{}", fmt(g), fmt(t), fmt(f)))
        })
        .collect::<Result<_>>()?;
    let series_path = out.join("scenario2_timeseries.csv");
    write_csv(&series_path, "gamma,t,qfi_b", &rows)?;
    let warn = vec![
        "gamma_list values are an artifact choice, not printed in the source figures".to_string(),
    ];
    let m1 = write_manifest(
        &series_path,
        "scenario",
        echo,
        json!({
            "gamma": cfg.gamma_list,
            "t": {"start": 0.0, "stop": ts.last().copied().unwrap_or(0.0), "points": ts.len()},
        }),
        &warn,
    )?;

    // alpha x (gamma t) surface at fixed gamma
    let g = cfg.gamma.unwrap_or(0.1);
    let alphas = linspace(0.0, std::f64::consts::PI, cfg.alpha_points);
    let gts = linspace(0.04, 2.0, cfg.grid_t_points);
    let mut grid_jobs = Vec::new();
    for &a in &alphas {
        for &gt in &gts {
            grid_jobs.push((a, gt));
        }
    }
    let grid_rows: Vec<String> = grid_jobs
        .par_iter()
        .map(|&(a, gt)| -> Result<String> {
            let model = SpinModel::new(1, b, vartheta, a, g)?;
            let f = qfi_point(
                &model,
                InitialKind::Product,
                beta,
                ParamTag::B,
                gt / g,
                QfiMethod::Sld,
            )?;
            Ok(format!("{},{},{}", fmt(a), fmt(gt), fmt(f)))
        })
        .collect::<Result<_>>()?;
    let grid_path = out.join("scenario2_grid.csv");
    write_csv(&grid_path, "alpha,gamma_t,qfi_b", &grid_rows)?;
    let m2 = write_manifest(
        &grid_path,
        "scenario",
        echo,
        json!({
            "alpha": {"start": 0.0, "stop": std::f64::consts::PI, "points": alphas.len()},
            "gamma_t": {"start": 0.04, "stop": 2.0, "points": gts.len()},
            "gamma": g,
        }),
        &[],
    )?;
    Ok(vec![series_path, m1, grid_path, m2])
}

/// Scenario 3: field-angle estimation; F_vartheta time series against the
/// noiseless ceiling, plus the max-over-time surface in (alpha, beta).
fn scenario3(cfg: &ScenarioConfig, echo: &serde_json::Value, out: &Path) -> Result<Vec<PathBuf>> {
    let b = cfg.b;
    let beta = cfg.beta.unwrap_or(std::f64::consts::PI / 3.0);
    let alpha = cfg.alpha.unwrap_or(std::f64::consts::FRAC_PI_4);
    let vartheta = cfg.vartheta.unwrap_or(std::f64::consts::PI / 3.0);
    let gamma = cfg.gamma.unwrap_or(0.03);
    let ts = linspace(0.0, cfg.t_max.unwrap_or(10.0 / b), cfg.t_points);

    let model = SpinModel::new(1, b, vartheta, alpha, gamma)?;
    let rows: Vec<String> = ts
        .par_iter()
        .map(|&t| -> Result<String> {
            let f = qfi_point(
                &model,
                InitialKind::Product,
                beta,
                ParamTag::Vartheta,
                t,
                QfiMethod::Sld,
            )?;
            Ok(format!("{},{},{}", fmt(t), fmt(f), fmt(4.0)))
        })
        .collect::<Result<_>>()?;
    let series_path = out.join("scenario3_timeseries.csv");
    write_csv(&series_path, "t,qfi_vartheta,noiseless_max", &rows)?;
    let m1 = write_manifest(
        &series_path,
        "scenario",
        echo,
        json!({"t": {"start": 0.0, "stop": ts.last().copied().unwrap_or(0.0), "points": ts.len()}}),
        &[],
    )?;

    // Max over t of F_vartheta on an (alpha, beta) grid
    let alphas = linspace(0.0, std::f64::consts::PI, cfg.surface_points);
    let betas = linspace(0.0, std::f64::consts::PI, cfg.surface_points);
    let t_scan = linspace(0.0, cfg.t_max.unwrap_or(10.0 / b), cfg.surface_t_points);
    let mut jobs = Vec::new();
    for &a in &alphas {
        for &be in &betas {
            jobs.push((a, be));
        }
    }
    let surf_rows: Vec<String> = jobs
        .par_iter()
        .map(|&(a, be)| -> Result<String> {
            let m = SpinModel::new(1, b, vartheta, a, gamma)?;
            let mut best = 0.0f64;
            for &t in &t_scan {
                let f = qfi_point(
                    &m,
                    InitialKind::Product,
                    be,
                    ParamTag::Vartheta,
                    t,
                    QfiMethod::Sld,
                )?;
                best = best.max(f);
            }
            Ok(format!("{},{},{}", fmt(a), fmt(be), fmt(best)))
        })
        .collect::<Result<_>>()?;
    let surf_path = out.join("scenario3_surface.csv");
    write_csv(&surf_path, "alpha,beta,max_qfi_vartheta", &surf_rows)?;
    let m2 = write_manifest(
        &surf_path,
        "scenario",
        echo,
        json!({
            "alpha": {"start": 0.0, "stop": std::f64::consts::PI, "points": alphas.len()},
            "beta": {"start": 0.0, "stop": std::f64::consts::PI, "points": betas.len()},
            "t_scan": {"start": 0.0, "stop": t_scan.last().copied().unwrap_or(0.0), "points": t_scan.len()},
        }),
        &[],
    )?;
    Ok(vec![series_path, m1, surf_path, m2])
}

// ---------------------------------------------------------------------------
// sweep

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Alpha,
    Beta,
    Gamma,
    T,
    Vartheta,
    N,
}

impl SweepAxis {
    fn name(self) -> &'static str {
        match self {
            SweepAxis::Alpha => "alpha",
            SweepAxis::Beta => "beta",
            SweepAxis::Gamma => "gamma",
            SweepAxis::T => "t",
            SweepAxis::Vartheta => "vartheta",
            SweepAxis::N => "N",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub axis: SweepAxis,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub model: SpinModel,
    #[serde(default = "default_beta_half_pi")]
    pub beta: f64,
    #[serde(default)]
    pub initial: InitialKind,
    /// Evaluation time when `t` is not a swept axis.
    #[serde(default)]
    pub time: f64,
    pub vary: Vec<AxisSpec>,
    pub parameter: ParamTag,
    #[serde(default = "default_method")]
    pub method: QfiMethod,
    #[serde(default = "default_sweep_output")]
    pub output: String,
}

fn default_beta_half_pi() -> f64 {
    std::f64::consts::FRAC_PI_2
}
fn default_method() -> QfiMethod {
    QfiMethod::Sld
}
fn default_sweep_output() -> String {
    "sweep.csv".to_string()
}

pub fn run_sweep(config: &Path, out: &Path, threads: usize) -> Result<Vec<PathBuf>> {
    let (cfg, echo) = parse_config::<SweepConfig>(config)?;
    fs::create_dir_all(out)?;
    if cfg.vary.is_empty() {
        return Err(Error::Config("sweep needs at least one axis".into()));
    }
    let mut total = 1usize;
    for a in &cfg.vary {
        if a.points == 0 {
            return Err(Error::Config(format!("axis {} has zero points", a.axis.name())));
        }
        total = total.saturating_mul(a.points);
    }
    if total > 1_000_000 {
        return Err(Error::Config(format!("sweep grid {total} exceeds 1e6 points")));
    }
    // fixed column order regardless of how axes are listed
    let mut axes = cfg.vary.clone();
    axes.sort_by_key(|a| a.axis);
    for w in axes.windows(2) {
        if w[0].axis == w[1].axis {
            return Err(Error::Config(format!("duplicate sweep axis {}", w[0].axis.name())));
        }
    }
    let grids: Vec<Vec<f64>> = axes
        .iter()
        .map(|a| linspace(a.start, a.stop, a.points))
        .collect();

    // lexicographic index order in the sorted-axis basis
    let mut points: Vec<Vec<f64>> = vec![Vec::new()];
    for g in &grids {
        let mut next = Vec::with_capacity(points.len() * g.len());
        for p in &points {
            for &v in g {
                let mut q = p.clone();
                q.push(v);
                next.push(q);
            }
        }
        points = next;
    }

    let rows: Vec<String> = in_pool(threads, || {
        points
            .par_iter()
            .map(|p| -> Result<String> {
                let mut model = cfg.model;
                let mut beta = cfg.beta;
                let mut time = cfg.time;
                for (a, &v) in axes.iter().zip(p.iter()) {
                    match a.axis {
                        SweepAxis::Alpha => model.alpha = v,
                        SweepAxis::Beta => beta = v,
                        SweepAxis::Gamma => model.gamma = v,
                        SweepAxis::T => time = v,
                        SweepAxis::Vartheta => model.vartheta = v,
                        SweepAxis::N => {
                            if (v - v.round()).abs() > 1e-9 {
                                return Err(Error::Config(format!(
                                    "N axis value {v} is not an integer"
                                )));
                            }
                            model.n = v.round() as usize;
                        }
                    }
                }
                model.validate()?;
                let f = qfi_point(&model, cfg.initial, beta, cfg.parameter, time, cfg.method)?;
                let mut cols: Vec<String> = p.iter().map(|&v| fmt(v)).collect();
                cols.push(cfg.parameter.to_string());
                cols.push(fmt(time));
                cols.push(fmt(f));
                cols.push(cfg.method.to_string());
                Ok(cols.join(","))
            })
            .collect::<Result<_>>()
    })?;

    let mut header: Vec<String> = axes.iter().map(|a| a.axis.name().to_string()).collect();
    header.extend(["parameter", "time", "qfi", "method"].map(String::from));
    let path = out.join(&cfg.output);
    write_csv(&path, &header.join(","), &rows)?;
    let axes_json: Vec<_> = axes
        .iter()
        .map(|a| json!({"axis": a.axis.name(), "start": a.start, "stop": a.stop, "points": a.points}))
        .collect();
    let m = write_manifest(&path, "sweep", &echo, json!(axes_json), &[])?;
    Ok(vec![path, m])
}

// ---------------------------------------------------------------------------
// spectrum

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    pub model: SpinModel,
}

pub fn run_spectrum(config: &Path, out: &Path, _threads: usize) -> Result<Vec<PathBuf>> {
    let (cfg, echo) = parse_config::<SpectrumConfig>(config)?;
    fs::create_dir_all(out)?;
    cfg.model.validate()?;
    let total = cfg.model.liouvillian()?;
    let es = spectrum(&total)?;
    let rows: Vec<String> = es
        .values
        .iter()
        .enumerate()
        .map(|(i, z)| format!("{i},{},{}", fmt(z.re), fmt(z.im)))
        .collect();
    let path = out.join("spectrum.csv");
    write_csv(&path, "index,re,im", &rows)?;

    let report = steady_report(&total)?;
    let class = classify_noise(&cfg.model.hamiltonian(), &cfg.model.dissipative_part()?)?;
    let states: Vec<serde_json::Value> = report
        .steady_states
        .iter()
        .map(|s| matrix_json(s.matrix()))
        .collect();
    let raw: Vec<serde_json::Value> = report.raw_kernel.iter().map(matrix_json).collect();
    let report_json = json!({
        "noise_class": match class.tag {
            NoiseTag::PhaseCovariant => "phase_covariant",
            NoiseTag::NonPhaseCovariant => "non_phase_covariant",
        },
        "commutator_norm": class.commutator_norm,
        "zero_eigenvalue_count": report.zero_eigenvalue_count,
        "relaxation_rate": report.relaxation_rate,
        "t_sts": report.t_sts,
        "steady_states": states,
        "raw_kernel_flag": report.raw_kernel_flag,
        "raw_kernel": raw,
    });
    let report_path = out.join("spectrum_report.json");
    fs::write(&report_path, serde_json::to_string_pretty(&report_json)? + "\n")?;
    let m = write_manifest(
        &path,
        "spectrum",
        &echo,
        json!({"dimension": total.dim}),
        &[],
    )?;
    Ok(vec![path, report_path, m])
}

fn matrix_json(m: &CMat) -> serde_json::Value {
    let rows: Vec<Vec<[f64; 2]>> = (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect();
    json!(rows)
}

// ---------------------------------------------------------------------------
// bound

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundConfig {
    pub model: SpinModel,
    pub parameter: ParamTag,
    pub t_start: f64,
    pub t_stop: f64,
    pub t_points: usize,
    #[serde(default = "default_bound_states")]
    pub state_samples: usize,
}

fn default_bound_states() -> usize {
    64
}

/// Fibonacci sphere grid of pure initial states.
fn sphere_states(n: usize) -> Vec<DensityMatrix> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|k| {
            let z = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * k as f64;
            DensityMatrix::from_bloch_vector([r * phi.cos(), r * phi.sin(), z])
                .expect("unit Bloch vector")
        })
        .collect()
}

fn qfi_from_state(
    model: &SpinModel,
    rho0: &DensityMatrix,
    param: ParamTag,
    t: f64,
) -> Result<f64> {
    let m = *model;
    let r0 = rho0.clone();
    let family = move |theta: f64| -> Result<DensityMatrix> {
        let mm = match param {
            ParamTag::B => SpinModel { b: theta, ..m },
            ParamTag::Vartheta => SpinModel {
                vartheta: theta,
                ..m
            },
            ParamTag::Beta => {
                return Err(Error::InvalidParameter(
                    "bound sampling varies model parameters, not the state".into(),
                ))
            }
        };
        mm.validate()?;
        mm.evolve(&r0, t)
    };
    let theta0 = match param {
        ParamTag::B => model.b,
        ParamTag::Vartheta => model.vartheta,
        ParamTag::Beta => unreachable!(),
    };
    let d = dstate_fd(&family, theta0, default_fd_step(theta0))?;
    let rho = family(theta0)?;
    let f = qfi_by_method(&rho, &d.d_rho, QfiMethod::Sld)?;
    Ok(QfiRecord::new(param, t, f, QfiMethod::Sld)?.value)
}

/// Numerical dH/d(lambda); the model Hamiltonian is time-independent, so the
/// integrand of the bound is constant in s.
fn hamiltonian_derivative(model: &SpinModel, param: ParamTag) -> Result<CMat> {
    let h = |theta: f64| -> Result<CMat> {
        let mm = match param {
            ParamTag::B => SpinModel { b: theta, ..*model },
            ParamTag::Vartheta => SpinModel {
                vartheta: theta,
                ..*model
            },
            ParamTag::Beta => {
                return Err(Error::InvalidParameter(
                    "beta does not enter the Hamiltonian".into(),
                ))
            }
        };
        Ok(mm.hamiltonian())
    };
    let theta0 = match param {
        ParamTag::B => model.b,
        ParamTag::Vartheta => model.vartheta,
        ParamTag::Beta => unreachable!(),
    };
    let hh = default_fd_step(theta0);
    let coarse = (&h(theta0 + hh)? - &h(theta0 - hh)?).mapv(|z| z / (2.0 * hh));
    let fine = (&h(theta0 + hh / 2.0)? - &h(theta0 - hh / 2.0)?).mapv(|z| z / hh);
    Ok((&fine.mapv(|z| z * 4.0) - &coarse).mapv(|z| z / 3.0))
}

pub fn run_bound(config: &Path, out: &Path, threads: usize) -> Result<Vec<PathBuf>> {
    let (cfg, echo) = parse_config::<BoundConfig>(config)?;
    fs::create_dir_all(out)?;
    cfg.model.validate()?;
    if cfg.parameter == ParamTag::Beta {
        return Err(Error::Config(
            "channel bound applies to Hamiltonian parameters (B, vartheta)".into(),
        ));
    }
    if cfg.state_samples < 62 {
        return Err(Error::Config(
            "state_samples must cover at least 62 pure states".into(),
        ));
    }
    if cfg.model.n != 1 {
        return Err(Error::Config(
            "bound sampling over the Bloch sphere is defined for N = 1".into(),
        ));
    }
    let ts = linspace(cfg.t_start, cfg.t_stop, cfg.t_points);
    let states = sphere_states(cfg.state_samples);
    let dh = hamiltonian_derivative(&cfg.model, cfg.parameter)?;
    let noiseless = SpinModel {
        gamma: 0.0,
        ..cfg.model
    };

    let rows: Vec<String> = in_pool(threads, || {
        ts.par_iter()
            .map(|&t| -> Result<String> {
                let bound = channel_qfi_upper_bound(&|_| dh.clone(), t)?;
                let mut best_free = 0.0f64;
                let mut best_noisy = 0.0f64;
                for s in &states {
                    best_free = best_free.max(qfi_from_state(&noiseless, s, cfg.parameter, t)?);
                    if cfg.model.gamma > 0.0 {
                        best_noisy =
                            best_noisy.max(qfi_from_state(&cfg.model, s, cfg.parameter, t)?);
                    }
                }
                if cfg.model.gamma == 0.0 {
                    best_noisy = best_free;
                }
                let exceeds = best_noisy > best_free + 1e-9;
                Ok(format!(
                    "{},{},{},{},{}",
                    fmt(t),
                    fmt(bound),
                    fmt(best_free),
                    fmt(best_noisy),
                    exceeds as u8
                ))
            })
            .collect::<Result<_>>()
    })?;
    let path = out.join("bound.csv");
    write_csv(
        &path,
        "t,channel_bound,best_noiseless_qfi,best_noisy_qfi,noisy_exceeds_noiseless",
        &rows,
    )?;
    let m = write_manifest(
        &path,
        "bound",
        &echo,
        json!({
            "t": {"start": cfg.t_start, "stop": cfg.t_stop, "points": cfg.t_points},
            "state_samples": cfg.state_samples,
        }),
        &[],
    )?;
    Ok(vec![path, m])
}
