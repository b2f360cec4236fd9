//! The four subcommands as library functions.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use torus_mhd::diagnostics::{
    basic_energy_residual, decay_fit as fit_series, hidden_dissipation_audit, read_csv, CsvRowWriter,
    Diagnostics, DiagnosticsConfig, DiagnosticsRecord,
};
use torus_mhd::diophantine::{certify as certify_lattice, BackgroundField};
use torus_mhd::integrate::{
    make_initial, read_snapshot, run as integrate, snapshot_path, write_snapshot, ConservationSummary, InitialSpec,
    Preset, SnapshotMeta, StabilityLimits, Stepper, StepperConfig,
};
use torus_mhd::spectral::Grid;
use torus_mhd::MhdError;

use crate::config::{ConfigError, Origin, RunConfig, TimeStep};
use crate::error::CliError;

fn config_error(key: &str, e: impl std::fmt::Display) -> CliError {
    CliError::Config(ConfigError {
        origin: Origin::Validation,
        key: key.into(),
        message: e.to_string(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CertifyReport {
    pub n: [f64; 3],
    pub r: f64,
    pub lattice_radius: i64,
    pub c_empirical: f64,
    pub resonant_k: [i64; 3],
    /// `C` of `‖f‖_{H³} ≤ C‖n·∇f‖_{H^{3+r}}` on the scanned ball, when `c > 0`.
    pub poincare_constant_h3: Option<f64>,
}

fn background(cfg: &RunConfig) -> Result<BackgroundField, CliError> {
    certify_lattice(cfg.n, cfg.r, cfg.lattice_radius()).map_err(|e| match e {
        MhdError::InvalidExponent(_) => config_error("r", e),
        MhdError::ZeroVector => config_error("n", e),
        MhdError::InvalidLatticeRadius(_) => config_error("lattice_radius", e),
        other => CliError::from(other),
    })
}

pub fn certify(cfg: &RunConfig) -> Result<CertifyReport, CliError> {
    cfg.validate()?;
    let bg = background(cfg)?;
    let poincare = if bg.c_empirical > 0.0 {
        Some(bg.poincare_constant(3.0)?)
    } else {
        None
    };
    Ok(CertifyReport {
        n: bg.n,
        r: bg.r,
        lattice_radius: bg.lattice_radius,
        c_empirical: bg.c_empirical,
        resonant_k: bg.resonant_k,
        poincare_constant_h3: poincare,
    })
}

/// End-of-run figures printed on the last line of `run`.
#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub steps: u64,
    pub dt: f64,
    pub t_end: f64,
    pub max_rho_drift: f64,
    pub max_momentum: f64,
    pub max_b_mean: f64,
    pub max_divb_post: f64,
    /// Decay exponent of `‖(a,u,B)‖_{H^{r+4}}` over the fit window.
    pub alpha_norm: Option<f64>,
    /// Decay exponent of the Lyapunov functional over the fit window.
    pub alpha_lyapunov: Option<f64>,
    pub energy_residual: Option<f64>,
}

impl RunSummary {
    pub fn line(&self) -> String {
        let opt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.4}"));
        format!(
            "summary: steps={} dt={:.6e} t_end={} max|∫ρ-1|={:.2e} max|∫ρu|={:.2e} max|∫B|={:.2e} max|divB|={:.2e} \
             alpha_H(r+4)={} alpha_E={} energy_residual={}",
            self.steps,
            self.dt,
            self.t_end,
            self.max_rho_drift,
            self.max_momentum,
            self.max_b_mean,
            self.max_divb_post,
            opt(self.alpha_norm),
            opt(self.alpha_lyapunov),
            self.energy_residual.map_or("n/a".to_string(), |x| format!("{x:.2e}")),
        )
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub records: Vec<DiagnosticsRecord>,
    pub csv_path: PathBuf,
    pub snapshot_paths: Vec<PathBuf>,
    pub summary: RunSummary,
}

/// Presets whose decay relies on the Diophantine mechanism.
fn needs_diophantine(p: Preset) -> bool {
    matches!(p, Preset::Random | Preset::Alfven)
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| {
        CliError::Other(MhdError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// The series `(t, column)` of `records`, by column name.
pub fn series(orders: &[f64], records: &[DiagnosticsRecord], column: &str) -> Option<Vec<(f64, f64)>> {
    let i = DiagnosticsRecord::header(orders).iter().position(|h| h == column)?;
    Some(records.iter().map(|r| (r.t, r.values()[i])).collect())
}

pub fn run(cfg: &RunConfig) -> Result<RunOutcome, CliError> {
    let params = cfg.validate()?;
    let grid = Grid::new(cfg.grid_size);

    let certified = if cfg.n.iter().any(|&c| c != 0.0) {
        Some(background(cfg)?)
    } else {
        None
    };
    let diophantine = certified.as_ref().is_some_and(|bg| bg.c_empirical > 0.0);
    if needs_diophantine(cfg.preset) && !diophantine {
        let detail = certified.map_or("n = 0".to_string(), |bg| format!("n·k = 0 at k = {:?}", bg.resonant_k));
        return Err(config_error(
            "n",
            format!("preset '{}' needs a Diophantine background ({detail})", cfg.preset.name()),
        ));
    }
    let poincare_h3 = match &certified {
        Some(bg) if diophantine => bg.poincare_constant_on_grid(&grid, 3.0).unwrap_or(f64::NAN),
        _ => f64::NAN,
    };

    let spec = InitialSpec {
        preset: cfg.preset,
        epsilon: cfg.epsilon,
        seed: cfg.seed,
        band: cfg.band,
    };
    let initial = make_initial(&spec, &grid, &params).map_err(|e| match e {
        MhdError::InvalidParameter(m) => config_error("preset", m),
        other => CliError::from(other),
    })?;

    let mut scfg = StepperConfig {
        scheme: cfg.scheme,
        dt: 1.0,
        cfl_advective: cfg.cfl_advective,
        cfl_viscous: cfg.cfl_viscous,
        t_end: cfg.t_end,
        project_b_every: cfg.project_b_every,
        snapshot_every: cfg.snapshot_every,
    };
    scfg.dt = match cfg.dt {
        TimeStep::Fixed(dt) => dt,
        TimeStep::Auto { safety } => {
            let mut probe = Stepper::new(&grid, params, StepperConfig { dt: 1e-12, ..scfg }, cfg.r)?;
            let stats = probe.grid_stats(&initial)?;
            let limit = safety * StabilityLimits::compute(&grid, &params, &scfg, &stats).max_dt(cfg.scheme);
            if cfg.t_end > 0.0 {
                cfg.t_end / (cfg.t_end / limit).ceil()
            } else {
                limit
            }
        }
    };
    let mut stepper = Stepper::new(&grid, params, scfg, cfg.r)?;
    let dcfg = DiagnosticsConfig {
        r: cfg.r,
        gamma: cfg.gamma,
        norm_orders: cfg.norm_orders(),
        poincare_h3,
    };
    let orders = dcfg.norm_orders.clone();
    let mut diagnostics = Diagnostics::new(&grid, params, dcfg.clone());

    std::fs::create_dir_all(&cfg.out_dir).map_err(io_error(&cfg.out_dir))?;
    let conf_path = cfg.out_dir.join("run.conf");
    std::fs::write(&conf_path, cfg.to_text()).map_err(io_error(&conf_path))?;
    let csv_path = cfg.out_dir.join(&cfg.csv_name);
    let mut csv = CsvRowWriter::create(&csv_path, &DiagnosticsRecord::header(&orders))?;
    let mut snapshot_paths = Vec::new();
    let (_, traj) = integrate(
        initial,
        &mut stepper,
        &mut diagnostics,
        &mut |rec| csv.write_row(&rec.values()),
        &mut |state, ctx| {
            if !cfg.snapshots {
                return Ok(());
            }
            let path = snapshot_path(&cfg.out_dir, ctx.step);
            let meta = SnapshotMeta {
                params,
                diagnostics: dcfg.clone(),
                ctx: *ctx,
            };
            write_snapshot(&path, state, &meta)?;
            snapshot_paths.push(path);
            Ok(())
        },
    )?;

    let records = traj.records;
    let cons = ConservationSummary::from_records(&records);
    let window = cfg.fit_window();
    let alpha = |column: &str| {
        let s = series(&orders, &records, column)?;
        fit_series(&s, window).ok().map(|f| f.alpha)
    };
    let norm_column = format!("norm_h{}", cfg.r + 4.0);
    let summary = RunSummary {
        steps: scfg.step_count(),
        dt: scfg.dt,
        t_end: cfg.t_end,
        max_rho_drift: cons.max_rho_drift,
        max_momentum: cons.max_momentum,
        max_b_mean: cons.max_b_mean,
        max_divb_post: cons.max_divb_post,
        alpha_norm: alpha(&norm_column),
        alpha_lyapunov: alpha("lyap_e"),
        energy_residual: basic_energy_residual(&records).ok().map(|r| r.normalized),
    };
    Ok(RunOutcome {
        records,
        csv_path,
        snapshot_paths,
        summary,
    })
}

#[derive(Clone, Debug)]
pub struct AuditOptions {
    /// Defaults to `diagnostics.csv` in the snapshot directory.
    pub csv: Option<PathBuf>,
    /// Recompute with a different Lyapunov weight and compare through the
    /// affine dependence of `E` and `D` on `γ`.
    pub gamma: Option<f64>,
    pub threads: usize,
    pub tolerance: f64,
}

impl Default for AuditOptions {
    fn default() -> Self {
        Self {
            csv: None,
            gamma: None,
            threads: 1,
            tolerance: 1e-10,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Mismatch {
    pub step: u64,
    pub column: String,
    pub csv: f64,
    pub recomputed: f64,
    pub relative: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct HiddenSummary {
    pub c_hat: Option<f64>,
    pub cumulative: f64,
    pub final_fraction: f64,
    pub plateau: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct AuditReport {
    pub snapshots: usize,
    pub rows_compared: usize,
    pub columns: usize,
    pub tolerance: f64,
    pub gamma: Option<f64>,
    pub mismatch_count: usize,
    /// The first mismatches, at most 50.
    pub mismatches: Vec<Mismatch>,
    /// Snapshot steps without a CSV row; each counts as a mismatch.
    pub missing_rows: Vec<u64>,
    pub max_relative_deviation: f64,
    pub energy_residual: Option<f64>,
    pub hidden_dissipation: Option<HiddenSummary>,
}

fn relative(x: f64, y: f64) -> f64 {
    if x == y || (x.is_nan() && y.is_nan()) {
        return 0.0;
    }
    let d = (x - y).abs() / x.abs().max(y.abs());
    if d.is_nan() {
        f64::INFINITY
    } else {
        d
    }
}

fn snapshot_files(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io_error(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("snap_") && n.ends_with(".bin"))
        })
        .collect();
    files.sort();
    Ok(files)
}

/// Rewrites the `γ`-dependent columns of a CSV row for weight `to`, using
/// `E = γQ − X` and `D = γR + ‖n·∇B‖²`.
fn reweight(header: &[String], row: &mut [f64], from: f64, to: f64) {
    let col = |name: &str| header.iter().position(|h| h == name);
    let (Some(ie), Some(id), Some(im), Some(ix), Some(inb)) =
        (col("lyap_e"), col("lyap_d"), col("lyap_margin"), col("cross_term"), col("nb_hr3"))
    else {
        return;
    };
    let (e, d, x, nb2) = (row[ie], row[id], row[ix], row[inb] * row[inb]);
    let e_new = to * (e + x) / from - x;
    row[im] += e_new - e;
    row[ie] = e_new;
    row[id] = to * (d - nb2) / from + nb2;
}

/// Recomputes every snapshot's record and compares it with the CSV.
pub fn audit(dir: &Path, opts: &AuditOptions) -> Result<AuditReport, CliError> {
    let files = snapshot_files(dir)?;
    if files.is_empty() {
        return Err(CliError::Other(MhdError::Format {
            path: dir.to_path_buf(),
            message: "no snapshot files (snap_*.bin)".into(),
        }));
    }
    let csv_path = opts.csv.clone().unwrap_or_else(|| dir.join("diagnostics.csv"));
    let table = read_csv(&csv_path)?;

    let first = read_snapshot(&files[0], None)?;
    let grid: Arc<Grid> = Arc::clone(first.state.grid());
    let recompute = |path: &PathBuf| -> Result<(DiagnosticsRecord, f64, Vec<f64>), MhdError> {
        let snap = read_snapshot(path, Some(&grid))?;
        let mut dcfg = snap.meta.diagnostics.clone();
        let stored_gamma = dcfg.gamma;
        if let Some(g) = opts.gamma {
            dcfg.gamma = g;
        }
        let orders = dcfg.norm_orders.clone();
        let snap_grid = Arc::clone(snap.state.grid());
        let mut diag = Diagnostics::new(&snap_grid, snap.meta.params, dcfg);
        Ok((diag.record(&snap.state, &snap.meta.ctx)?, stored_gamma, orders))
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads.max(1))
        .build()
        .map_err(|e| config_error("threads", e))?;
    let results: Vec<(DiagnosticsRecord, f64, Vec<f64>)> =
        pool.install(|| files.par_iter().map(recompute).collect::<Result<Vec<_>, MhdError>>())?;

    let step_col = table.column_index("step").ok_or_else(|| {
        CliError::Other(MhdError::Format {
            path: csv_path.clone(),
            message: "missing 'step' column".into(),
        })
    })?;
    let mut report = AuditReport {
        snapshots: files.len(),
        rows_compared: 0,
        columns: table.header.len(),
        tolerance: opts.tolerance,
        gamma: opts.gamma,
        mismatch_count: 0,
        mismatches: Vec::new(),
        missing_rows: Vec::new(),
        max_relative_deviation: 0.0,
        energy_residual: None,
        hidden_dissipation: None,
    };
    for (rec, stored_gamma, orders) in &results {
        let header = DiagnosticsRecord::header(orders);
        if header != table.header {
            return Err(CliError::Other(MhdError::Format {
                path: csv_path.clone(),
                message: "CSV header does not match the snapshot's diagnostics configuration".into(),
            }));
        }
        let Some(row) = table.rows.iter().find(|r| r[step_col] as u64 == rec.step) else {
            report.missing_rows.push(rec.step);
            report.mismatch_count += 1;
            continue;
        };
        let mut expected = row.clone();
        if let Some(g) = opts.gamma {
            reweight(&table.header, &mut expected, *stored_gamma, g);
        }
        report.rows_compared += 1;
        for ((name, &want), got) in table.header.iter().zip(&expected).zip(rec.values()) {
            let rel = relative(want, got);
            report.max_relative_deviation = report.max_relative_deviation.max(rel);
            if rel > opts.tolerance {
                report.mismatch_count += 1;
                if report.mismatches.len() < 50 {
                    report.mismatches.push(Mismatch {
                        step: rec.step,
                        column: name.clone(),
                        csv: want,
                        recomputed: got,
                        relative: rel,
                    });
                }
            }
        }
    }
    let records: Vec<DiagnosticsRecord> = results.into_iter().map(|(r, _, _)| r).collect();
    report.energy_residual = basic_energy_residual(&records).ok().map(|r| r.normalized);
    report.hidden_dissipation = hidden_dissipation_audit(&records).ok().map(|h| HiddenSummary {
        c_hat: h.c_hat,
        cumulative: h.cumulative,
        final_fraction: h.final_fraction,
        plateau: h.plateau,
    });
    Ok(report)
}

#[derive(Clone, Debug, Serialize)]
pub struct FitReport {
    pub column: String,
    pub t0: f64,
    pub t1: f64,
    pub alpha: f64,
    pub prefactor: f64,
    pub residual: f64,
    pub samples: usize,
}

/// Fits `C(1+t)^{−α}` to one column of a diagnostics CSV.
pub fn decay_fit(csv: &Path, column: &str, window: (Option<f64>, Option<f64>)) -> Result<FitReport, CliError> {
    let table = read_csv(csv)?;
    let s = table.series(column).ok_or_else(|| {
        config_error(
            "column",
            format!("no column '{column}' (or no 't' column) in {}", csv.display()),
        )
    })?;
    let t_last = s.last().map_or(0.0, |p| p.0);
    let (t0, t1) = (window.0.unwrap_or(5.0), window.1.unwrap_or(t_last));
    let fit = fit_series(&s, (t0, t1))?;
    Ok(FitReport {
        column: column.to_string(),
        t0,
        t1,
        alpha: fit.alpha,
        prefactor: fit.prefactor,
        residual: fit.residual,
        samples: fit.samples,
    })
}
