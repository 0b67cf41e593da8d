//! Subcommand drivers. Each returns the files it wrote, in a fixed order.

use std::collections::BTreeMap;
use std::path::PathBuf;

use exciton_fcs::lds::{scan_point, theta_derivatives, ACTIVITY_FLOOR};
use exciton_fcs::model::PRESET_NAMES;
use exciton_fcs::trajectories::{Simulator, TrajectoryRecord};
use exciton_fcs::units::{rate_cm1_to_ps1, time_cm_to_ps, time_ps_to_cm};
use exciton_fcs::{
    diagonalize, empirical_rate_function, find_crossover, preset, rate_function, ChannelSelector,
    CrossoverReport, ExcitonBasis, JumpChannel, LocalMax, ScanPoint, TiltedGenerator,
    TrajectoryConfig,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Format, RunConfig, TARGET_JUMPS};
use crate::error::{config, CliError};
use crate::output::{
    channel_slug, ensure_dir, json, number, svg, temperature_slug, write_file, Panel, Table,
};

/// Trajectory side fails the oracle check beyond this many standard errors.
pub const Z_THRESHOLD: f64 = 3.0;

fn pool(cfg: &RunConfig) -> Result<rayon::ThreadPool, CliError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.threads {
        b = b.num_threads(n);
    }
    b.build().map_err(|e| config(format!("thread pool: {e}")))
}

fn work_items(cfg: &RunConfig) -> Vec<(f64, ChannelSelector)> {
    cfg.temperatures
        .iter()
        .flat_map(|&t| cfg.channels.iter().map(move |&c| (t, c)))
        .collect()
}

fn generator(
    cfg: &RunConfig,
    basis: &ExcitonBasis,
    t: f64,
    sel: ChannelSelector,
) -> Result<TiltedGenerator, CliError> {
    Ok(TiltedGenerator::new(basis, &cfg.bath(t)?, &[sel])?)
}

fn require_formats(cfg: &RunConfig, allowed: &[Format], command: &str) -> Result<(), CliError> {
    match cfg.formats.iter().find(|f| !allowed.contains(f)) {
        Some(f) => Err(config(format!("{command} cannot write {f} output"))),
        None => Ok(()),
    }
}

fn stem(command: &str, t: f64, sel: &ChannelSelector) -> String {
    format!("{command}_{}_{}", temperature_slug(t), channel_slug(sel))
}

fn meta(table: &mut Table, command: &str, cfg: &RunConfig, t: f64, sel: &ChannelSelector) {
    table.meta("command", command);
    table.meta("model", cfg.model_name());
    table.meta("temperature_K", t);
    table.meta("channel", sel);
    table.meta("reorg_energy_cm1", cfg.reorg_energy);
    table.meta("cutoff_cm1", cfg.cutoff);
}

/// Scan of `θ(s)`, activity and `Q(s)` for one temperature and channel.
#[derive(Debug, Clone, Serialize)]
pub struct ThetaScan {
    /// Temperature, K.
    #[serde(rename = "temperature_K")]
    pub temperature_k: f64,
    /// Counted channel selector.
    pub channel: String,
    /// Scan rows.
    pub points: Vec<ScanPoint>,
}

/// Computes every (temperature, channel) scan, fanning the grid out over the pool.
pub fn theta_scans(cfg: &RunConfig) -> Result<Vec<ThetaScan>, CliError> {
    let basis = diagonalize(&cfg.model)?;
    let grid = cfg.grid.values();
    pool(cfg)?.install(|| {
        work_items(cfg)
            .into_par_iter()
            .map(|(t, sel)| {
                let g = generator(cfg, &basis, t, sel)?;
                let points = grid
                    .par_iter()
                    .map(|&s| scan_point(&g, s))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(ThetaScan {
                    temperature_k: t,
                    channel: sel.to_string(),
                    points,
                })
            })
            .collect()
    })
}

/// `theta-scan`: one CSV/JSON/SVG per (temperature, channel).
pub fn run_theta_scan(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    require_formats(cfg, &[Format::Csv, Format::Json, Format::Svg], "theta-scan")?;
    let scans = theta_scans(cfg)?;
    ensure_dir(&cfg.out)?;
    let mut files = Vec::new();
    for ((t, sel), scan) in work_items(cfg).into_iter().zip(&scans) {
        let name = stem("theta_scan", t, &sel);
        if cfg.formats.contains(&Format::Csv) {
            let mut table = Table::new(vec![
                "s",
                "theta_cm1",
                "activity_cm1",
                "activity_ps1",
                "mandel",
            ]);
            meta(&mut table, "theta-scan", cfg, t, &sel);
            let mut omitted = 0;
            for p in &scan.points {
                match p.mandel {
                    Some(q) => {
                        table.row(&[p.s, p.theta, p.activity, rate_cm1_to_ps1(p.activity), q])?
                    }
                    None => omitted += 1,
                }
            }
            table.footer(format!("omitted_rows_undefined_mandel={omitted}"));
            files.push(write_file(
                &cfg.out,
                &format!("{name}.csv"),
                &table.render(),
            )?);
        }
        if cfg.formats.contains(&Format::Json) {
            files.push(write_file(&cfg.out, &format!("{name}.json"), &json(scan))?);
        }
        if cfg.formats.contains(&Format::Svg) {
            let title = format!("{} T={t} K {sel}", cfg.model_name());
            let plot = svg(&[
                Panel {
                    title: title.clone(),
                    x_label: "s",
                    y_label: "θ(s) [cm⁻¹]",
                    points: scan.points.iter().map(|p| (p.s, p.theta)).collect(),
                },
                Panel {
                    title,
                    x_label: "s",
                    y_label: "Q(s)",
                    points: scan
                        .points
                        .iter()
                        .filter_map(|p| p.mandel.map(|q| (p.s, q)))
                        .collect(),
                },
            ]);
            files.push(write_file(&cfg.out, &format!("{name}.svg"), &plot)?);
        }
    }
    Ok(files)
}

/// A counted channel with its intensity factor and rate.
#[derive(Debug, Clone, Serialize)]
pub struct ChannelInfo {
    /// Directed label, e.g. `down:a3->a2`.
    pub label: String,
    /// Exciton gap `ε_to − ε_from`, cm⁻¹.
    pub omega_cm1: f64,
    /// Intensity factor `I(from, to)`.
    pub intensity: f64,
    /// Bath factor `γ(ω)`, cm⁻¹.
    pub bath_factor_cm1: f64,
    /// Rate, cm⁻¹.
    pub rate_cm1: f64,
}

impl From<&JumpChannel> for ChannelInfo {
    fn from(c: &JumpChannel) -> Self {
        Self {
            label: c.label(),
            omega_cm1: c.omega,
            intensity: c.intensity,
            bath_factor_cm1: c.bath_factor,
            rate_cm1: c.rate,
        }
    }
}

/// Crossover analysis of one (temperature, channel).
#[derive(Debug, Clone, Serialize)]
pub struct CrossoverRow {
    /// Temperature, K.
    #[serde(rename = "temperature_K")]
    pub temperature_k: f64,
    /// Selector.
    pub channel: String,
    /// Counted channels it resolves to.
    pub counted_channels: Vec<ChannelInfo>,
    /// First sign change of `Q(s)`.
    pub s_star: Option<f64>,
    /// `Q(0)`.
    pub q_at_zero: Option<f64>,
    /// Highest interior local maximum of `Q(s)`.
    pub local_max: Option<LocalMax>,
}

/// Document written by `crossover-map`.
#[derive(Debug, Clone, Serialize)]
pub struct CrossoverMap {
    /// Model name.
    pub model: String,
    /// Scan range `[min, max]` and point count.
    pub s_grid: exciton_fcs::SGrid,
    /// One row per (temperature, channel), temperature-major.
    pub reports: Vec<CrossoverRow>,
}

/// Crossover reports for every (temperature, channel).
pub fn crossover_map(cfg: &RunConfig) -> Result<CrossoverMap, CliError> {
    if cfg.temperatures.len() < 2 {
        return Err(config("crossover-map needs at least two temperatures"));
    }
    let basis = diagonalize(&cfg.model)?;
    let reports = pool(cfg)?.install(|| {
        work_items(cfg)
            .into_par_iter()
            .map(|(t, sel)| {
                let g = generator(cfg, &basis, t, sel)?;
                let CrossoverReport {
                    s_star,
                    q_at_zero,
                    local_max,
                } = find_crossover(&g, &cfg.grid)?;
                Ok(CrossoverRow {
                    temperature_k: t,
                    channel: sel.to_string(),
                    counted_channels: g.counted_channels().map(ChannelInfo::from).collect(),
                    s_star,
                    q_at_zero,
                    local_max,
                })
            })
            .collect::<Result<Vec<_>, CliError>>()
    })?;
    Ok(CrossoverMap {
        model: cfg.model_name(),
        s_grid: cfg.grid,
        reports,
    })
}

/// `crossover-map`: a single JSON table.
pub fn run_crossover_map(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    require_formats(cfg, &[Format::Json], "crossover-map")?;
    let map = crossover_map(cfg)?;
    ensure_dir(&cfg.out)?;
    Ok(vec![write_file(
        &cfg.out,
        "crossover_map.json",
        &json(&map),
    )?])
}

/// Spectral side of an oracle check.
#[derive(Debug, Clone, Serialize)]
pub struct SpectralReference {
    /// `−θ'(0)`, cm⁻¹.
    pub mean_rate: f64,
    /// `Q(0)`.
    pub mandel: Option<f64>,
}

/// Trajectory side of an oracle check.
#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryEstimate {
    /// `⟨K⟩/t`, cm⁻¹.
    pub mean_rate: f64,
    /// Its standard error.
    pub se_mean: f64,
    /// Estimated `Q`.
    pub mandel: Option<f64>,
    /// Its standard error.
    pub se_mandel: Option<f64>,
    /// Trajectories per counted-jump number.
    pub histogram: BTreeMap<u64, u64>,
}

/// Side-by-side comparison for one (temperature, channel).
#[derive(Debug, Clone, Serialize)]
pub struct OracleRow {
    /// Temperature, K.
    #[serde(rename = "temperature_K")]
    pub temperature_k: f64,
    /// Selector.
    pub channel: String,
    /// Observation time, cm.
    pub t_max_cm: f64,
    /// Observation time, ps.
    pub t_max_ps: f64,
    /// Ensemble size.
    pub n_trajectories: usize,
    /// Seed.
    pub seed: u64,
    /// Spectral values.
    pub spectral: SpectralReference,
    /// Trajectory values.
    pub trajectory: TrajectoryEstimate,
    /// z-score of the mean rate.
    pub z_mean: f64,
    /// z-score of `Q`; zero when both sides leave it undefined.
    pub z_mandel: Option<f64>,
    /// `|z| < 3` for both.
    pub pass: bool,
    /// Simulator diagnostics.
    pub warnings: Vec<String>,
}

/// Document written by `oracle-check`.
#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    /// Model name.
    pub model: String,
    /// One row per (temperature, channel).
    pub reports: Vec<OracleRow>,
    /// All rows pass.
    pub pass: bool,
}

fn check_channel_sets(cfg: &RunConfig) -> Result<(), CliError> {
    let Some(traj) = &cfg.trajectory_channels else {
        return Ok(());
    };
    let norm = |v: &[ChannelSelector]| {
        let mut s: Vec<String> = v.iter().map(ToString::to_string).collect();
        s.sort();
        s
    };
    if norm(traj) != norm(&cfg.channels) {
        return Err(config(format!(
            "trajectory channels [{}] differ from spectral channels [{}]",
            norm(traj).join(", "),
            norm(&cfg.channels).join(", ")
        )));
    }
    Ok(())
}

/// Runs both pipelines at `s = 0` for every (temperature, channel).
pub fn oracle_check(cfg: &RunConfig) -> Result<OracleReport, CliError> {
    check_channel_sets(cfg)?;
    let basis = diagonalize(&cfg.model)?;
    let pool = pool(cfg)?;
    let mut reports = Vec::new();
    for (t, sel) in work_items(cfg) {
        let g = generator(cfg, &basis, t, sel)?;
        let d = theta_derivatives(&g, 0.0)?;
        let spectral = SpectralReference {
            mean_rate: -d.first,
            mandel: d.mandel,
        };
        let t_max = match cfg.t_max_ps {
            Some(ps) => time_ps_to_cm(ps),
            None if spectral.mean_rate > ACTIVITY_FLOOR => TARGET_JUMPS / spectral.mean_rate,
            None => time_ps_to_cm(1.0),
        };
        let channels: Vec<JumpChannel> = g
            .channels()
            .iter()
            .filter(|c| !c.is_dephasing())
            .cloned()
            .collect();
        let tc = TrajectoryConfig::stationary(t_max, cfg.trajectories, cfg.seed);
        let sim = Simulator::new(&channels, &tc)?;
        let records: Vec<TrajectoryRecord> = pool.install(|| {
            (0..sim.n_trajectories())
                .into_par_iter()
                .map(|i| sim.run(i))
                .collect()
        });
        let stats = sim.collect(&records);

        let z_mean = stats.mean_rate.z_score(spectral.mean_rate);
        let z_mandel = match (stats.mandel, spectral.mandel) {
            (Some(e), Some(q)) => Some(e.z_score(q)),
            (None, None) => Some(0.0),
            _ => None,
        };
        let pass = z_mean.abs() < Z_THRESHOLD && z_mandel.is_some_and(|z| z.abs() < Z_THRESHOLD);
        reports.push(OracleRow {
            temperature_k: t,
            channel: sel.to_string(),
            t_max_cm: t_max,
            t_max_ps: time_cm_to_ps(t_max),
            n_trajectories: cfg.trajectories,
            seed: cfg.seed,
            spectral,
            trajectory: TrajectoryEstimate {
                mean_rate: stats.mean_rate.value,
                se_mean: stats.mean_rate.se,
                mandel: stats.mandel.map(|m| m.value),
                se_mandel: stats.mandel.map(|m| m.se),
                histogram: stats.histogram,
            },
            z_mean: finite_or_large(z_mean),
            z_mandel: z_mandel.map(finite_or_large),
            pass,
            warnings: stats.warnings,
        });
    }
    let pass = reports.iter().all(|r| r.pass);
    Ok(OracleReport {
        model: cfg.model_name(),
        reports,
        pass,
    })
}

// JSON cannot carry infinities; a zero-variance mismatch is reported as ±1e300
fn finite_or_large(z: f64) -> f64 {
    if z.is_finite() {
        z
    } else {
        1e300f64.copysign(z)
    }
}

/// `oracle-check`: one JSON document.
pub fn run_oracle_check(cfg: &RunConfig) -> Result<(Vec<PathBuf>, bool), CliError> {
    require_formats(cfg, &[Format::Json], "oracle-check")?;
    check_channel_sets(cfg)?;
    let report = oracle_check(cfg)?;
    ensure_dir(&cfg.out)?;
    let path = write_file(&cfg.out, "oracle_check.json", &json(&report))?;
    Ok((vec![path], report.pass))
}

/// `rate-function`: spectral `φ(k)` per (temperature, channel), optionally
/// with the empirical estimate from trajectories.
pub fn run_rate_function(cfg: &RunConfig, empirical: bool) -> Result<Vec<PathBuf>, CliError> {
    require_formats(
        cfg,
        &[Format::Csv, Format::Json, Format::Svg],
        "rate-function",
    )?;
    let scans = theta_scans(cfg)?;
    let basis = diagonalize(&cfg.model)?;
    let pool = pool(cfg)?;
    ensure_dir(&cfg.out)?;
    let mut files = Vec::new();
    for ((t, sel), scan) in work_items(cfg).into_iter().zip(&scans) {
        let rf = rate_function(&scan.points)?;
        let name = stem("rate_function", t, &sel);
        let emp = if empirical {
            let g = generator(cfg, &basis, t, sel)?;
            let activity = -theta_derivatives(&g, 0.0)?.first;
            let t_max = match cfg.t_max_ps {
                Some(ps) => time_ps_to_cm(ps),
                None if activity > ACTIVITY_FLOOR => TARGET_JUMPS / activity,
                None => time_ps_to_cm(1.0),
            };
            let channels: Vec<JumpChannel> = g
                .channels()
                .iter()
                .filter(|c| !c.is_dephasing())
                .cloned()
                .collect();
            let sim = Simulator::new(
                &channels,
                &TrajectoryConfig::stationary(t_max, cfg.trajectories, cfg.seed),
            )?;
            let records: Vec<TrajectoryRecord> = pool.install(|| {
                (0..sim.n_trajectories())
                    .into_par_iter()
                    .map(|i| sim.run(i))
                    .collect()
            });
            Some((
                t_max,
                empirical_rate_function(&sim.collect(&records), t_max),
            ))
        } else {
            None
        };
        if cfg.formats.contains(&Format::Csv) {
            let mut table = Table::new(vec!["s", "k_cm1", "k_ps1", "phi_cm1"]);
            meta(&mut table, "rate-function", cfg, t, &sel);
            table.meta("convex", rf.convex);
            table.meta(
                "max_discrepancy_cm1",
                number(rf.max_discrepancy).unwrap_or_default(),
            );
            for (p, r) in scan.points.iter().zip(&rf.points) {
                table.row(&[p.s, r.k, rate_cm1_to_ps1(r.k), r.phi])?;
            }
            files.push(write_file(
                &cfg.out,
                &format!("{name}.csv"),
                &table.render(),
            )?);
            if let Some((t_max, pts)) = &emp {
                let mut table = Table::new(vec!["k_cm1", "k_ps1", "phi_cm1"]);
                meta(&mut table, "rate-function-empirical", cfg, t, &sel);
                table.meta("t_max_cm", number(*t_max).unwrap_or_default());
                table.meta("n_trajectories", cfg.trajectories);
                table.meta("seed", cfg.seed);
                for r in pts {
                    table.row(&[r.k, rate_cm1_to_ps1(r.k), r.phi])?;
                }
                files.push(write_file(
                    &cfg.out,
                    &format!("{name}_empirical.csv"),
                    &table.render(),
                )?);
            }
        }
        if cfg.formats.contains(&Format::Json) {
            #[derive(Serialize)]
            struct Doc<'a> {
                #[serde(rename = "temperature_K")]
                temperature_k: f64,
                channel: String,
                convex: bool,
                max_discrepancy_cm1: f64,
                points: &'a [exciton_fcs::RateFunctionPoint],
                empirical: Option<&'a [exciton_fcs::RateFunctionPoint]>,
            }
            let doc = Doc {
                temperature_k: t,
                channel: sel.to_string(),
                convex: rf.convex,
                max_discrepancy_cm1: rf.max_discrepancy,
                points: &rf.points,
                empirical: emp.as_ref().map(|(_, p)| p.as_slice()),
            };
            files.push(write_file(&cfg.out, &format!("{name}.json"), &json(&doc))?);
        }
        if cfg.formats.contains(&Format::Svg) {
            let plot = svg(&[Panel {
                title: format!("{} T={t} K {sel}", cfg.model_name()),
                x_label: "k [cm⁻¹]",
                y_label: "φ(k) [cm⁻¹]",
                points: rf.points.iter().map(|p| (p.k, p.phi)).collect(),
            }]);
            files.push(write_file(&cfg.out, &format!("{name}.svg"), &plot)?);
        }
    }
    Ok(files)
}

/// Summary of one preset for `presets`.
#[derive(Debug, Clone, Serialize)]
pub struct PresetSummary {
    /// Name.
    pub name: &'static str,
    /// Site energies, cm⁻¹.
    pub site_energies_cm1: Vec<f64>,
    /// Couplings, cm⁻¹.
    pub couplings_cm1: Vec<Vec<f64>>,
    /// Exciton energies in ascending order, cm⁻¹.
    pub exciton_energies_cm1: Vec<f64>,
    /// One-based dominant site of each exciton.
    pub dominant_site: Vec<usize>,
}

/// All built-in presets.
pub fn presets() -> Result<Vec<PresetSummary>, CliError> {
    PRESET_NAMES
        .iter()
        .map(|&name| {
            let model = preset(name)?;
            let basis = diagonalize(&model)?;
            Ok(PresetSummary {
                name,
                site_energies_cm1: model.energies().to_vec(),
                couplings_cm1: exciton_fcs::model::couplings_to_rows(&model),
                exciton_energies_cm1: basis.energies().to_vec(),
                dominant_site: (0..basis.n_excitons())
                    .map(|a| basis.dominant_site(a) + 1)
                    .collect(),
            })
        })
        .collect()
}

/// Plain-text rendering of [`presets`].
pub fn presets_text(list: &[PresetSummary]) -> String {
    let mut out = String::new();
    for p in list {
        out.push_str(&format!(
            "{} ({} sites)\n",
            p.name,
            p.site_energies_cm1.len()
        ));
        for (a, (e, m)) in p
            .exciton_energies_cm1
            .iter()
            .zip(&p.dominant_site)
            .enumerate()
        {
            out.push_str(&format!(
                "  a{}  {:>10.3} cm-1  mostly site {m}\n",
                a + 1,
                e
            ));
        }
    }
    out
}
