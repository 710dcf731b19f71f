use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::DeformationField;
use crate::problem::ShapeProblem;

pub const DEFAULT_TAYLOR_STEPS: [f64; 4] = [1e-1, 5e-2, 2.5e-2, 1.25e-2];

/// Differences `|J(Omega_d) - J0|` below this multiple of the solver
/// tolerance (relative to `|J0|`) are treated as noise.
pub const NOISE_FACTOR: f64 = 1e3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaylorRow {
    pub d: f64,
    pub j_d: f64,
    /// `|J(Omega_d) - J0 - d dJ|`
    pub remainder: f64,
    /// `(J(Omega_d) - J0) / d`
    pub quotient: f64,
    /// Log-slope of the remainder against the previous usable row.
    pub order: Option<f64>,
    pub usable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaylorReport {
    pub j0: f64,
    pub dj: f64,
    pub rows: Vec<TaylorRow>,
    /// Least-squares log-log slope over the last three usable rows.
    pub order: Option<f64>,
    /// `|quotient - dJ| / |dJ|` at the smallest usable d.
    pub gap: Option<f64>,
}

impl TaylorReport {
    pub fn summary_line(&self) -> String {
        let fmt = |x: Option<f64>, p: usize| x.map_or("n/a".to_string(), |v| format!("{v:.p$e}"));
        format!(
            "taylor: J0={:.6e} dJ={:.6e} gap={} order={}",
            self.j0,
            self.dj,
            fmt(self.gap, 3),
            self.order.map_or("n/a".to_string(), |v| format!("{v:.3}")),
        )
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["d", "J_d", "remainder", "quotient", "order", "usable"])?;
        for r in &self.rows {
            w.write_record([
                format!("{:e}", r.d),
                format!("{:.17e}", r.j_d),
                format!("{:.17e}", r.remainder),
                format!("{:.17e}", r.quotient),
                r.order.map_or(String::new(), |o| format!("{o:.6}")),
                r.usable.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

fn log_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let (mx, my) = points
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x.ln() / n, b + y.ln() / n));
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in points {
        let (dx, dy) = (x.ln() - mx, y.ln() - my);
        sxy += dx * dy;
        sxx += dx * dx;
    }
    Some(sxy / sxx)
}

/// Compares `dJ` with `J((id + d h)(Omega))` for a decreasing sequence of
/// step sizes; the perturbed objectives are evaluated in parallel.
pub fn taylor_test(
    problem: &ShapeProblem,
    j0: f64,
    dj: f64,
    h: &DeformationField,
    d_values: &[f64],
) -> Result<TaylorReport> {
    if d_values.len() < 4 || d_values.iter().any(|d| !(*d > 0.0)) || d_values.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput(
            "taylor test needs at least 4 positive, strictly decreasing step sizes".into(),
        ));
    }
    h.check_vanishes_on(&problem.cost.excluded)?;
    let values: Vec<f64> = d_values
        .par_iter()
        .map(|&d| problem.perturbed_objective(h, d))
        .collect::<Result<_>>()?;

    let tol = if problem.params.is_linear() {
        problem.settings.linear_tol
    } else {
        problem.settings.picard_tol
    };
    let floor = NOISE_FACTOR * tol * j0.abs();
    let mut rows: Vec<TaylorRow> = d_values
        .iter()
        .zip(&values)
        .map(|(&d, &j_d)| TaylorRow {
            d,
            j_d,
            remainder: (j_d - j0 - d * dj).abs(),
            quotient: (j_d - j0) / d,
            order: None,
            usable: (j_d - j0).abs() >= floor && (j_d - j0).abs() > 0.0,
        })
        .collect();
    let mut last: Option<usize> = None;
    for i in 0..rows.len() {
        if !rows[i].usable {
            continue;
        }
        if let Some(p) = last {
            let (a, b) = (&rows[p], &rows[i]);
            if a.remainder > 0.0 && b.remainder > 0.0 {
                rows[i].order = Some((a.remainder / b.remainder).ln() / (a.d / b.d).ln());
            }
        }
        last = Some(i);
    }
    let usable: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.usable && r.remainder > 0.0)
        .map(|r| (r.d, r.remainder))
        .collect();
    let order = log_slope(&usable[usable.len().saturating_sub(3)..]);
    let gap = rows
        .iter()
        .rev()
        .find(|r| r.usable)
        .map(|r| (r.quotient - dj).abs() / dj.abs());
    Ok(TaylorReport {
        j0,
        dj,
        rows,
        order,
        gap,
    })
}
