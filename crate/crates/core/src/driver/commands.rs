use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{Assembled, RunConfig, TaylorDirection};
use super::optimize::{descent_direction, run_optimization};
use super::output::{RunDir, RunStatus};
use crate::discretize::{assemble_matrix_stiffness, assemble_weighted_mass, Field, MatField};
use crate::error::{Error, Result};
use crate::shapegrad::{shape_derivative, taylor_test};
use crate::state::{acoustic_pressure, energy_trace, snapshot_energy};
use crate::verify::run_checks;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Solve,
    Adjoint,
    Gradient,
    TaylorTest,
    Optimize,
    Check,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Adjoint => "adjoint",
            Command::Gradient => "gradient",
            Command::TaylorTest => "taylor-test",
            Command::Optimize => "optimize",
            Command::Check => "check",
        }
    }
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// What a finished pipeline reports: human-readable lines plus the fields
/// of the status file.
#[derive(Debug, Clone, Default)]
pub struct CommandReport {
    pub lines: Vec<String>,
    pub iterations: usize,
    pub final_j: Option<f64>,
}

/// Runs one command end to end and returns the process exit code. Result
/// lines go to `out`, error lines to `err`. The run directory gets the
/// config echo, version stamp and status file whatever happens.
pub fn execute(
    command: Command,
    config: Option<&Path>,
    out_dir: &Path,
    seed: Option<u64>,
    out: &mut dyn std::io::Write,
    err: &mut dyn std::io::Write,
) -> i32 {
    let dir = match RunDir::create(out_dir) {
        Ok(d) => d,
        Err(e) => {
            let _ = writeln!(err, "{}: {e}", e.class());
            return EXIT_ERROR;
        }
    };
    let loaded = match config {
        Some(path) => {
            let text = std::fs::read_to_string(path).unwrap_or_default();
            let _ = dir.write_preamble(&text);
            Some(RunConfig::load(path))
        }
        None => {
            let _ = dir.write_preamble("");
            None
        }
    };
    let cfg = match loaded {
        Some(Ok(cfg)) => Some(cfg),
        Some(Err(e)) => {
            let _ = writeln!(err, "{}: {e}", e.class());
            let _ = dir.write_status(&RunStatus::failed("config_error", e.class(), e.to_string()));
            return EXIT_CONFIG;
        }
        None if command == Command::Check => None,
        None => {
            let e = Error::Config(format!("`{}` needs --config", command.name()));
            let _ = writeln!(err, "{}: {e}", e.class());
            let _ = dir.write_status(&RunStatus::failed("config_error", e.class(), e.to_string()));
            return EXIT_CONFIG;
        }
    };
    let seed = seed.or(cfg.as_ref().map(|c| c.seed)).unwrap_or(0);
    let result = match (command, &cfg) {
        (Command::Check, _) => check(&dir, seed),
        (_, Some(cfg)) => run_command(command, cfg, &dir),
        (_, None) => unreachable!("config presence checked above"),
    };
    match result {
        Ok(report) => {
            for line in &report.lines {
                let _ = writeln!(out, "{line}");
            }
            match dir.write_status(&RunStatus::ok(report.iterations, report.final_j)) {
                Ok(()) => EXIT_OK,
                Err(e) => {
                    let _ = writeln!(err, "{}: {e}", e.class());
                    EXIT_ERROR
                }
            }
        }
        Err((e, report)) => {
            for line in &report.lines {
                let _ = writeln!(out, "{line}");
            }
            let _ = writeln!(err, "{}: {e}", e.class());
            let mut status = RunStatus::failed("error", e.class(), e.to_string());
            status.iterations = report.iterations;
            status.final_j = report.final_j;
            let _ = dir.write_status(&status);
            EXIT_ERROR
        }
    }
}

type Outcome = std::result::Result<CommandReport, (Error, CommandReport)>;

fn plain(r: Result<CommandReport>) -> Outcome {
    r.map_err(|e| (e, CommandReport::default()))
}

fn check(dir: &RunDir, seed: u64) -> Outcome {
    let items = run_checks(seed);
    let mut report = CommandReport::default();
    let write = || -> Result<()> {
        let mut w = csv::Writer::from_path(dir.path("checks.csv"))?;
        w.write_record(["item", "passed", "detail"])?;
        for it in &items {
            w.write_record([it.name, if it.passed { "true" } else { "false" }, &it.detail])?;
        }
        w.flush()?;
        Ok(())
    };
    if let Err(e) = write() {
        return Err((e, report));
    }
    for it in &items {
        let tag = if it.passed { "PASS" } else { "FAIL" };
        report.lines.push(format!("{tag} {}: {}", it.name, it.detail));
    }
    let failed: Vec<&str> = items.iter().filter(|i| !i.passed).map(|i| i.name).collect();
    if failed.is_empty() {
        Ok(report)
    } else {
        Err((Error::CheckFailed(failed.join(", ")), report))
    }
}

/// Runs a config-driven pipeline, writing its tables into `dir`.
pub fn run_command(command: Command, cfg: &RunConfig, dir: &RunDir) -> Outcome {
    let assembled = match cfg.assemble() {
        Ok(a) => a,
        Err(e) => return Err((e, CommandReport::default())),
    };
    match command {
        Command::Solve => plain(solve(cfg, &assembled, dir)),
        Command::Adjoint => plain(adjoint(cfg, &assembled, dir)),
        Command::Gradient => plain(gradient(cfg, &assembled, dir)),
        Command::TaylorTest => plain(taylor(cfg, &assembled, dir)),
        Command::Optimize => optimize(cfg, &assembled, dir),
        Command::Check => unreachable!("check does not need a problem"),
    }
}

fn margins(k: f64, dpsi: &[Vec<f64>]) -> Vec<f64> {
    dpsi.iter()
        .map(|v| v.iter().fold(f64::INFINITY, |m, &x| m.min(1.0 - 2.0 * k * x)))
        .collect()
}

fn solve(cfg: &RunConfig, a: &Assembled, dir: &RunDir) -> Result<CommandReport> {
    let p = &a.problem;
    let sol = p.solve(None)?;
    let j = p.cost_of(&sol, None)?;
    let energy = energy_trace(&p.space, &sol, &p.params)?;
    let margin = margins(p.params.k, &sol.dpsi);
    dir.write_trajectory(
        "trajectory.csv",
        &sol.times(),
        &energy,
        Some(&margin),
        &sol.psi,
        &a.probes,
    )?;
    let pressure = acoustic_pressure(&sol, &p.params);
    dir.write_snapshots(
        "state",
        p.mesh(),
        cfg.output.snapshot_every,
        &[("psi", &sol.psi), ("pressure", &pressure)],
    )?;
    Ok(CommandReport {
        lines: vec![format!(
            "solve: J={j:.6e} min_margin={:.6} final_energy={:.6e} steps={}",
            sol.degeneracy_margin,
            energy.last().copied().unwrap_or(0.0),
            p.grid.steps
        )],
        iterations: 0,
        final_j: Some(j),
    })
}

fn adjoint(cfg: &RunConfig, a: &Assembled, dir: &RunDir) -> Result<CommandReport> {
    let p = &a.problem;
    let sol = p.solve(None)?;
    let j = p.cost_of(&sol, None)?;
    let adj = p.adjoint(&sol)?;
    let mass = assemble_weighted_mass(&p.space, &Field::Const(1.0))?;
    let stiff = assemble_matrix_stiffness(&p.space, &MatField::Identity)?;
    let energy: Vec<f64> = adj
        .p
        .iter()
        .zip(&adj.dp)
        .map(|(u, v)| snapshot_energy(&mass, &stiff, p.params.c, u, v))
        .collect();
    dir.write_trajectory("trajectory_adjoint.csv", &sol.times(), &energy, None, &adj.p, &a.probes)?;
    dir.write_snapshots(
        "adjoint",
        p.mesh(),
        cfg.output.snapshot_every,
        &[("p", &adj.p), ("p_t", &adj.dp)],
    )?;
    Ok(CommandReport {
        lines: vec![format!(
            "adjoint: J={j:.6e} initial_adjoint_energy={:.6e}",
            energy.first().copied().unwrap_or(0.0)
        )],
        iterations: 0,
        final_j: Some(j),
    })
}

fn gradient(cfg: &RunConfig, a: &Assembled, dir: &RunDir) -> Result<CommandReport> {
    let p = &a.problem;
    let ev = p.evaluate_gradient(cfg.gradient.rule)?;
    dir.write_gradient(p.mesh(), &ev.boundary, &ev.gradient)?;
    let slope = descent_direction(p, &ev, &cfg.gradient)?.map_or(0.0, |(_, s)| s);
    let peak = ev.gradient.density.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    Ok(CommandReport {
        lines: vec![format!(
            "gradient: J={:.6e} max|density|={peak:.6e} dJ[descent]={slope:.6e}",
            ev.j
        )],
        iterations: 0,
        final_j: Some(ev.j),
    })
}

fn taylor(cfg: &RunConfig, a: &Assembled, dir: &RunDir) -> Result<CommandReport> {
    let p = &a.problem;
    let ev = p.evaluate_gradient(cfg.gradient.rule)?;
    let h = match &cfg.taylor.direction {
        TaylorDirection::Descent => descent_direction(p, &ev, &cfg.gradient)?
            .map(|(h, _)| h)
            .ok_or_else(|| Error::InvalidInput("gradient vanishes; no descent direction for the Taylor test".into()))?,
        TaylorDirection::Bump(b) => b.field(p.mesh())?,
    };
    let dj = shape_derivative(&ev.gradient, &ev.boundary, &h, &p.cost.excluded)?;
    let report = taylor_test(p, ev.j, dj, &h, &cfg.taylor.d_values)?;
    report.save_csv(&dir.path("taylor.csv"))?;
    let line = report.summary_line();
    std::fs::write(dir.path("taylor.txt"), format!("{line}\n"))?;
    Ok(CommandReport {
        lines: vec![line],
        iterations: 0,
        final_j: Some(ev.j),
    })
}

fn optimize(cfg: &RunConfig, a: &Assembled, dir: &RunDir) -> Outcome {
    let history = match run_optimization(&a.problem, &cfg.gradient, &cfg.optimization) {
        Ok(h) => h,
        Err(e) => return Err((e, CommandReport::default())),
    };
    let mut report = CommandReport {
        lines: history
            .records
            .iter()
            .map(|r| {
                format!(
                    "iter {:>3}: J={:.6e} |dJ|={:.3e} step={:.3e}",
                    r.iteration, r.j, r.dj, r.step
                )
            })
            .collect(),
        iterations: history.accepted_steps(),
        final_j: Some(history.final_j()),
    };
    let j0 = history.records[0].j;
    report.lines.push(format!(
        "optimize: stop={:?} accepted={} J0={j0:.6e} J={:.6e} reduction={:.2}%",
        history.stop,
        history.accepted_steps(),
        history.final_j(),
        if j0 > 0.0 {
            100.0 * (1.0 - history.final_j() / j0)
        } else {
            0.0
        }
    ));
    if let Err(e) = dir.write_history(&history) {
        return Err((e, report));
    }
    if let Some(angle) = history.rejected_min_angle {
        let e = Error::MeshQuality {
            min_angle_deg: angle,
            threshold_deg: cfg.optimization.min_angle_deg,
        };
        return Err((e, report));
    }
    Ok(report)
}
