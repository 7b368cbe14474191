//! The `solve` and `verify` verbs.

use std::path::Path;
use std::time::Instant;

use jdisc::solver::{DiscSolution, DiscSolver};
use jdisc::verify::{run_operator_suite, CheckResult};
use jdisc::Error;
use log::{error, info, warn};
use serde_json::{Map, Value};

use crate::config::{ConfigError, RunConfig};
use crate::output::{self, flat_record};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_INVALID: i32 = 3;
pub const EXIT_IO: i32 = 4;

fn load(path: &Path) -> Result<RunConfig, i32> {
    let config = RunConfig::load(path).map_err(|e| {
        error!("{e}");
        match e {
            ConfigError::Io(_) => EXIT_IO,
            ConfigError::Invalid(_) => EXIT_INVALID,
        }
    })?;
    if let Some(threads) = config.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            warn!("could not configure {threads} worker threads: {e}");
        }
    }
    Ok(config)
}

fn create_dir(config: &RunConfig) -> Result<(), i32> {
    std::fs::create_dir_all(&config.output.dir).map_err(|e| {
        error!(
            "cannot create output directory {}: {e}",
            config.output.dir.display()
        );
        EXIT_IO
    })
}

/// Solve the configured problem and write the artifacts.
pub fn run_solve(path: &Path) -> i32 {
    let config = match load(path) {
        Ok(c) => c,
        Err(code) => return code,
    };
    match solve(&config) {
        Ok(code) | Err(code) => code,
    }
}

fn solve(config: &RunConfig) -> Result<i32, i32> {
    let field = config.field().map_err(|e| {
        error!("{e}");
        EXIT_INVALID
    })?;
    let t_setup = Instant::now();
    let solver = DiscSolver::new(
        &field,
        config.grid.n,
        config.boundary.m,
        config.solver.clone(),
    )
    .map_err(|e| {
        error!("{e}");
        exit_code_for(&e)
    })?;
    let setup = t_setup.elapsed().as_secs_f64();
    info!(
        "validated structure, sampled ‖A‖₂ = {:.4}",
        solver.a_measured()
    );
    create_dir(config)?;

    let t_solve = Instant::now();
    let (solution, code, status) = match solver.solve(config.target.z0, &config.w0()) {
        Ok(sol) => (sol, EXIT_OK, "converged"),
        Err(Error::NonConvergence {
            iterations,
            last_change,
            best,
        }) => {
            warn!("no fixed point found after {iterations} outer steps (smallest change {last_change:.3e}); writing the best iterate");
            (*best, EXIT_NOT_CONVERGED, "not_converged")
        }
        Err(e) => {
            error!("{e}");
            let code = exit_code_for(&e);
            if config.output.emit_diagnostics {
                let mut map = Map::new();
                map.insert("status".into(), Value::from("failed"));
                map.insert("error".into(), Value::from(e.to_string()));
                map.insert("exit_code".into(), Value::from(code));
                map.extend(flat_record("config", config));
                write(&config.output.dir.join(output::DIAGNOSTICS), |p| {
                    output::write_json(p, &map)
                })?;
            }
            return Err(code);
        }
    };
    let solve_time = t_solve.elapsed().as_secs_f64();
    write_artifacts(config, &solution, status, code, setup, solve_time)?;
    Ok(code)
}

fn write(path: &Path, f: impl FnOnce(&Path) -> std::io::Result<()>) -> Result<(), i32> {
    f(path).map_err(|e| {
        error!("cannot write {}: {e}", path.display());
        EXIT_IO
    })
}

fn write_artifacts(
    config: &RunConfig,
    sol: &DiscSolution,
    status: &str,
    code: i32,
    setup: f64,
    solve_time: f64,
) -> Result<(), i32> {
    let dir = &config.output.dir;
    let t_write = Instant::now();
    if config.output.emit_disc_samples {
        write(&dir.join(output::DISC_SAMPLES), |p| {
            output::write_disc_samples(p, sol)
        })?;
    }
    if config.output.emit_plot_data {
        write(&dir.join(output::PLOT_BOUNDARY), |p| {
            output::write_plot_boundary(p, sol)
        })?;
    }
    if config.output.emit_diagnostics {
        let mut map = Map::new();
        map.insert("status".into(), Value::from(status));
        map.insert("exit_code".into(), Value::from(code));
        if let Some(d) = &sol.diagnostics {
            map.extend(flat_record("", d));
        }
        map.extend(flat_record("config", config));
        if config.output.emit_timings {
            map.insert("time.setup_s".into(), Value::from(setup));
            map.insert("time.solve_s".into(), Value::from(solve_time));
            map.insert(
                "time.write_s".into(),
                Value::from(t_write.elapsed().as_secs_f64()),
            );
        }
        write(&dir.join(output::DIAGNOSTICS), |p| {
            output::write_json(p, &map)
        })?;
    }
    Ok(())
}

/// Exit code of a solver error.
pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_)
        | Error::InvalidStructure(_)
        | Error::InconsistentStructure(_) => EXIT_INVALID,
        _ => EXIT_NOT_CONVERGED,
    }
}

/// Run the operator battery at the configured resolution.
pub fn run_verify(path: &Path) -> i32 {
    let config = match load(path) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let checks = match run_operator_suite(config.grid.n, config.boundary.m, config.seed) {
        Ok(c) => c,
        Err(e) => {
            error!("{e}");
            return exit_code_for(&e);
        }
    };
    for c in &checks {
        println!("{}", format_check(c));
    }
    if let Err(code) = create_dir(&config) {
        return code;
    }
    if let Err(code) = write(&config.output.dir.join(output::VERIFY_REPORT), |p| {
        write_report(p, &checks)
    }) {
        return code;
    }
    let failed = checks.iter().filter(|c| c.counts_as_failure()).count();
    println!("{} checks, {failed} failed", checks.len());
    if failed == 0 {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    }
}

fn status(c: &CheckResult) -> &str {
    match (&c.note, c.passed) {
        (_, true) => "pass",
        (Some(note), false) => note.as_str(),
        (None, false) => "FAIL",
    }
}

pub fn format_check(c: &CheckResult) -> String {
    format!(
        "{:<30} {:>12.4e} <= {:<9.1e} {}",
        c.name,
        c.value,
        c.threshold,
        status(c)
    )
}

fn write_report(path: &Path, checks: &[CheckResult]) -> std::io::Result<()> {
    let mut wtr = csv::Writer::from_path(path)?;
    wtr.write_record(["check", "value", "threshold", "status"])?;
    for c in checks {
        wtr.write_record([
            c.name.as_str(),
            &c.value.to_string(),
            &c.threshold.to_string(),
            status(c),
        ])?;
    }
    wtr.flush()
}
