use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::Probe;
use super::optimize::OptimizationHistory;
use crate::error::Result;
use crate::geometry::io::{save_mesh, write_vtk};
use crate::geometry::{BoundaryGeometry, Mesh};
use crate::shapegrad::ShapeGradient;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunStatus {
    /// `ok`, `error` or `config_error`.
    pub status: String,
    pub iterations: usize,
    #[serde(rename = "final_J")]
    pub final_j: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_class: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl RunStatus {
    pub fn ok(iterations: usize, final_j: Option<f64>) -> Self {
        Self {
            status: "ok".into(),
            iterations,
            final_j,
            error_class: None,
            message: None,
        }
    }

    pub fn failed(status: &str, class: &str, message: String) -> Self {
        Self {
            status: status.into(),
            iterations: 0,
            final_j: None,
            error_class: Some(class.into()),
            message: Some(message),
        }
    }
}

/// Output directory of one command invocation.
#[derive(Debug, Clone)]
pub struct RunDir {
    root: PathBuf,
}

impl RunDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Config echo and version stamp.
    pub fn write_preamble(&self, config_text: &str) -> Result<()> {
        fs::write(self.path("config.toml"), config_text)?;
        fs::write(self.path("VERSION"), format!("acoustic-shape {VERSION}\n"))?;
        Ok(())
    }

    pub fn write_status(&self, status: &RunStatus) -> Result<()> {
        let mut text = serde_json::to_string_pretty(status)?;
        text.push('\n');
        fs::write(self.path("status.json"), text)?;
        Ok(())
    }

    /// Per-step table: time, energy, degeneracy margin and probe values.
    pub fn write_trajectory(
        &self,
        name: &str,
        times: &[f64],
        energy: &[f64],
        margin: Option<&[f64]>,
        fields: &[Vec<f64>],
        probes: &[Probe],
    ) -> Result<()> {
        let mut w = csv::Writer::from_path(self.path(name))?;
        let mut header = vec!["time".to_string(), "energy".to_string()];
        if margin.is_some() {
            header.push("margin".into());
        }
        header.extend((0..probes.len()).map(|i| format!("probe{i}")));
        w.write_record(&header)?;
        for (n, t) in times.iter().enumerate() {
            let mut row = vec![format!("{t:e}"), format!("{:e}", energy[n])];
            if let Some(m) = margin {
                row.push(format!("{:e}", m[n]));
            }
            row.extend(probes.iter().map(|p| format!("{:e}", p.sample(&fields[n]))));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// VTK files `{prefix}_{step:05}.vtk` every `every` steps plus the last.
    pub fn write_snapshots(
        &self,
        prefix: &str,
        mesh: &Mesh,
        every: usize,
        fields: &[(&str, &[Vec<f64>])],
    ) -> Result<()> {
        if every == 0 || fields.is_empty() {
            return Ok(());
        }
        let last = fields[0].1.len() - 1;
        for n in (0..=last).filter(|n| n % every == 0 || *n == last) {
            let data: Vec<(&str, &[f64])> = fields.iter().map(|(k, v)| (*k, v[n].as_slice())).collect();
            write_vtk(
                &self.path(&format!("{prefix}_{n:05}.vtk")),
                mesh,
                &format!("{prefix} step {n}"),
                &data,
            )?;
        }
        Ok(())
    }

    pub fn write_gradient(&self, mesh: &Mesh, bg: &BoundaryGeometry, grad: &ShapeGradient) -> Result<()> {
        let mut w = csv::Writer::from_path(self.path("gradient.csv"))?;
        w.write_record(["slot", "vertex", "x", "y", "nx", "ny", "curvature", "density", "corner"])?;
        for s in 0..bg.len() {
            let v = bg.vertex[s];
            let (x, n) = (mesh.vertices[v], bg.outward_normal[s]);
            w.write_record([
                s.to_string(),
                v.to_string(),
                format!("{:e}", x.x),
                format!("{:e}", x.y),
                format!("{:e}", n.x),
                format!("{:e}", n.y),
                format!("{:e}", bg.curvature[s]),
                format!("{:e}", grad.density[s]),
                bg.corner[s].to_string(),
            ])?;
        }
        w.flush()?;
        write_vtk(
            &self.path("gradient.vtk"),
            mesh,
            "shape gradient density",
            &[("density", &grad.nodal(mesh))],
        )
    }

    pub fn write_history(&self, history: &OptimizationHistory) -> Result<()> {
        let mut w = csv::Writer::from_path(self.path("history.csv"))?;
        for r in &history.records {
            w.serialize(r)?;
        }
        w.flush()?;
        save_mesh(&history.final_mesh, &self.path("final_mesh.txt"))?;
        write_vtk(&self.path("final_mesh.vtk"), &history.final_mesh, "final mesh", &[])
    }
}
