//! Command-line front end: `solve`, `compare`, `fit`, `oracle`, `sweep`.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical blow-up,
//! 4 I/O or snapshot-format error. Failures print a single
//! `error: <message>` line to stderr.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::analysis::{field_diff_norms, hopf_break_time, power_law_fit};
use crate::config::{parse_config, Config};
use crate::error::{Error, Result};
use crate::grid::RealField;
use crate::initial_data::InitSpec;
use crate::integrator::{evolve, evolve_ds};
use crate::linear::exact_linear_evolve;
use crate::models::{DsState, ModelKind};
use crate::snapshot::{
    fmt_f64, read_pairs_csv, read_snapshot_file, write_diagnostics_csv, write_snapshot_file,
    SnapshotMeta,
};

#[derive(Parser)]
#[command(
    name = "kpsuite",
    version,
    about = "Pseudospectral KP/DS solver suite",
    disable_help_subcommand = true
)]
struct Cli {
    /// Worker threads for transforms and sweep fan-out (0 = automatic).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Reserved.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate the configured model; write snapshots and a diagnostics
    /// CSV.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Override the configured output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Delta_2/Delta_inf between two snapshot files, or between two
    /// directories of snapshots paired in sorted order.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit a power law to (eps, delta) pairs from a CSV file.
    Fit { csv: PathBuf },
    /// Exact-solution utilities.
    Oracle {
        #[command(subcommand)]
        which: OracleCmd,
    },
    /// Expand the config over its [sweep] lists and run the solves
    /// concurrently.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum OracleCmd {
    /// Propagate the configured initial data under the exact linear flow to
    /// time t and write the result as a snapshot.
    Linear {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Break time of the dispersionless flow for the configured initial
    /// data's y = 0 slice.
    BreakTime {
        #[arg(long)]
        config: PathBuf,
    },
}

/// Entry point taking a full argv (program name first); returns the process
/// exit code.
pub fn run_command<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // help/version print and exit 0; real parse errors are config
            // errors
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if cli.threads > 0 {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global();
    }
    let result = match cli.cmd {
        Cmd::Solve { config, out } => cmd_solve(&config, out),
        Cmd::Compare { a, b, out } => cmd_compare(&a, &b, out),
        Cmd::Fit { csv } => cmd_fit(&csv),
        Cmd::Oracle { which } => match which {
            OracleCmd::Linear { config, t, out } => cmd_oracle_linear(&config, t, out),
            OracleCmd::BreakTime { config } => cmd_oracle_break_time(&config),
        },
        Cmd::Sweep { config, out } => cmd_sweep(&config, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. }
        | Error::InvalidInput(_)
        | Error::InvalidGrid(_)
        | Error::UnsupportedDsRegime => 2,
        Error::Blowup { .. } => 3,
        Error::SnapshotFormat(_) | Error::Io(_) => 4,
    }
}

fn load_config(path: &Path, out_override: Option<PathBuf>) -> Result<Config> {
    let text = fs::read_to_string(path)?;
    let mut cfg = parse_config(&text)?;
    if let Some(dir) = out_override {
        cfg.output.directory = dir;
    }
    Ok(cfg)
}

fn meta_for(cfg: &Config, t: f64) -> SnapshotMeta {
    SnapshotMeta {
        t,
        epsilon: cfg.model.epsilon,
        lambda: cfg.model.lambda as i8,
        kind: cfg.model.kind,
    }
}

/// One finished solve, as reported on stdout and in sweep aggregates.
struct SolveSummary {
    prefix: String,
    final_time: f64,
    max_abs_err: f64,
}

fn run_solve(cfg: &Config) -> Result<SolveSummary> {
    fs::create_dir_all(&cfg.output.directory)?;
    let grid = cfg.grid.build()?;
    let u0 = cfg.init.build(&grid)?;
    let dir = &cfg.output.directory;
    let prefix = &cfg.output.prefix;

    let diagnostics;
    let final_time;
    if cfg.model.kind == ModelKind::Ds {
        let psi0 = DsState::from_real_envelope(&u0);
        let result = evolve_ds(&psi0, cfg.model.eta, &cfg.run)?;
        for (i, (t, state)) in result.snapshots.iter().enumerate() {
            write_ds_snapshot(dir, &format!("{prefix}_{i:04}"), cfg, *t, state)?;
        }
        write_ds_snapshot(
            dir,
            &format!("{prefix}_final"),
            cfg,
            result.final_time,
            &result.final_state,
        )?;
        diagnostics = result.diagnostics;
        final_time = result.final_time;
    } else {
        let result = evolve(&u0, &cfg.model, &cfg.run)?;
        for (i, (t, field)) in result.snapshots.iter().enumerate() {
            let path = dir.join(format!("{prefix}_{i:04}.snap"));
            write_snapshot_file(&path, field, &meta_for(cfg, *t))?;
        }
        write_snapshot_file(
            &dir.join(format!("{prefix}_final.snap")),
            &result.final_field,
            &meta_for(cfg, result.final_time),
        )?;
        diagnostics = result.diagnostics;
        final_time = result.final_time;
    }

    let mut csv = fs::File::create(dir.join(format!("{prefix}_diagnostics.csv")))?;
    write_diagnostics_csv(&mut csv, &diagnostics)?;
    let max_abs_err = diagnostics.err.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    Ok(SolveSummary {
        prefix: prefix.clone(),
        final_time,
        max_abs_err,
    })
}

fn write_ds_snapshot(
    dir: &Path,
    stem: &str,
    cfg: &Config,
    t: f64,
    state: &DsState,
) -> Result<()> {
    let grid = state.grid();
    let psi = state.psi();
    let re = RealField::from_values(grid, psi.iter().map(|c| c.re).collect())?;
    let im = RealField::from_values(grid, psi.iter().map(|c| c.im).collect())?;
    write_snapshot_file(&dir.join(format!("{stem}_re.snap")), &re, &meta_for(cfg, t))?;
    write_snapshot_file(&dir.join(format!("{stem}_im.snap")), &im, &meta_for(cfg, t))?;
    Ok(())
}

fn cmd_solve(config_path: &Path, out: Option<PathBuf>) -> Result<i32> {
    let cfg = load_config(config_path, out)?;
    let summary = run_solve(&cfg)?;
    println!(
        "solve prefix={} t_end={} max_err={} dir={}",
        summary.prefix,
        fmt_f64(summary.final_time),
        fmt_f64(summary.max_abs_err),
        cfg.output.directory.display()
    );
    Ok(0)
}

fn snapshot_list(path: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(path)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().map(|e| e == "snap").unwrap_or(false))
        .collect();
    files.sort();
    Ok(files)
}

fn cmd_compare(a: &Path, b: &Path, out: Option<PathBuf>) -> Result<i32> {
    let pairs: Vec<(PathBuf, PathBuf)> = if a.is_dir() && b.is_dir() {
        let fa = snapshot_list(a)?;
        let fb = snapshot_list(b)?;
        if fa.len() != fb.len() {
            return Err(Error::InvalidInput(format!(
                "snapshot series differ in length: {} vs {}",
                fa.len(),
                fb.len()
            )));
        }
        if fa.is_empty() {
            return Err(Error::InvalidInput("no snapshots to compare".into()));
        }
        fa.into_iter().zip(fb).collect()
    } else {
        vec![(a.to_path_buf(), b.to_path_buf())]
    };

    let mut rows = String::from("t,delta2,deltainf\n");
    for (pa, pb) in pairs {
        let (fa, ma) = read_snapshot_file(&pa)?;
        let (fb, mb) = read_snapshot_file(&pb)?;
        if (ma.t - mb.t).abs() > 1e-9 * ma.t.abs().max(1.0) {
            log::warn!(
                "comparing snapshots at different times: {} vs {}",
                ma.t,
                mb.t
            );
        }
        let (d2, dinf) = field_diff_norms(&fa, &fb)?;
        rows.push_str(&format!(
            "{},{},{}\n",
            fmt_f64(ma.t),
            fmt_f64(d2),
            fmt_f64(dinf)
        ));
    }
    match out {
        Some(path) => {
            let mut f = fs::File::create(&path)?;
            f.write_all(rows.as_bytes())?;
            println!("compare wrote {}", path.display());
        }
        None => print!("{rows}"),
    }
    Ok(0)
}

fn cmd_fit(csv: &Path) -> Result<i32> {
    let mut f = fs::File::open(csv)?;
    let pairs = read_pairs_csv(&mut f)?;
    let (eps, deltas): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let fit = power_law_fit(&eps, &deltas)?;
    println!(
        "a={:.6} b={:.6} r={:.6} sigma_a={:.6}",
        fit.a, fit.b, fit.r, fit.sigma_a
    );
    Ok(0)
}

fn cmd_oracle_linear(config_path: &Path, t: f64, out: Option<PathBuf>) -> Result<i32> {
    let cfg = load_config(config_path, out)?;
    if cfg.model.kind == ModelKind::Ds {
        return Err(Error::InvalidInput(
            "the linear oracle applies to the KP family, not DS".into(),
        ));
    }
    fs::create_dir_all(&cfg.output.directory)?;
    let grid = cfg.grid.build()?;
    let u0 = cfg.init.build(&grid)?;
    let ut = exact_linear_evolve(&u0, t, cfg.model.lambda, cfg.model.epsilon);
    let path = cfg
        .output
        .directory
        .join(format!("{}_oracle.snap", cfg.output.prefix));
    write_snapshot_file(&path, &ut, &meta_for(&cfg, t))?;
    println!("oracle wrote {}", path.display());
    Ok(0)
}

fn cmd_oracle_break_time(config_path: &Path) -> Result<i32> {
    let cfg = load_config(config_path, None)?;
    let grid = cfg.grid.build()?;
    let u0 = cfg.init.build(&grid)?;
    let iy = grid.ny() / 2; // the y = 0 row
    let slice: Vec<f64> = (0..grid.nx()).map(|ix| u0.at(iy, ix)).collect();
    match hopf_break_time(&slice, grid.hx()) {
        Some(tc) => println!("t_c={}", fmt_f64(tc)),
        None => println!("t_c=none"),
    }
    Ok(0)
}

fn cmd_sweep(config_path: &Path, out: Option<PathBuf>) -> Result<i32> {
    let base = load_config(config_path, out)?;
    let sweep = base.sweep.clone().ok_or_else(|| Error::InvalidInput(
        "sweep requires a [sweep] section in the config".into(),
    ))?;
    if !matches!(base.model.kind, ModelKind::Kp | ModelKind::Kdv) {
        return Err(Error::InvalidInput(
            "sweeping over epsilon requires a dispersive model (kp or kdv)".into(),
        ));
    }

    // expand the template into one config per epsilon
    let mut runs = Vec::new();
    for (i, &eps) in sweep.epsilon.iter().enumerate() {
        let mut cfg = base.clone();
        cfg.sweep = None;
        cfg.model.epsilon = eps;
        if let InitSpec::ModulatedPacket { epsilon } = &mut cfg.init {
            *epsilon = eps;
        }
        if let Some(nx) = &sweep.nx {
            cfg.grid.nx = nx[i];
        }
        if let Some(ny) = &sweep.ny {
            cfg.grid.ny = ny[i];
        }
        if let Some(lx) = &sweep.lx {
            cfg.grid.lx = lx[i];
        }
        if let Some(ly) = &sweep.ly {
            cfg.grid.ly = ly[i];
        }
        if let Some(dt) = &sweep.dt {
            cfg.run.dt = dt[i];
        }
        cfg.output.prefix = format!("{}_eps{i}", base.output.prefix);
        cfg.model.validate()?;
        runs.push(cfg);
    }

    // independent solves, no shared mutable state; each writes its own files
    let results: Vec<(f64, std::result::Result<SolveSummary, Error>)> =
        std::thread::scope(|scope| {
            let handles: Vec<_> = runs
                .iter()
                .map(|cfg| {
                    let eps = cfg.model.epsilon;
                    let handle = scope.spawn(move || run_solve(cfg));
                    (eps, handle)
                })
                .collect();
            handles
                .into_iter()
                .map(|(eps, h)| (eps, h.join().expect("solve thread")))
                .collect()
        });

    fs::create_dir_all(&base.output.directory)?;
    let agg_path = base
        .output
        .directory
        .join(format!("{}_sweep.csv", base.output.prefix));
    let mut agg = String::from("index,eps,status,t_end,max_err,prefix\n");
    let mut first_failure: Option<i32> = None;
    for (i, (eps, res)) in results.iter().enumerate() {
        match res {
            Ok(s) => {
                agg.push_str(&format!(
                    "{i},{},ok,{},{},{}\n",
                    fmt_f64(*eps),
                    fmt_f64(s.final_time),
                    fmt_f64(s.max_abs_err),
                    s.prefix
                ));
            }
            Err(e) => {
                first_failure.get_or_insert(exit_code(e));
                let msg = e.to_string().replace(',', ";");
                agg.push_str(&format!("{i},{},{msg},,,\n", fmt_f64(*eps)));
            }
        }
    }
    fs::write(&agg_path, agg)?;
    println!("sweep wrote {}", agg_path.display());
    match first_failure {
        None => Ok(0),
        Some(code) => {
            eprintln!("error: one or more sweep runs failed (partial results kept)");
            Ok(code)
        }
    }
}
