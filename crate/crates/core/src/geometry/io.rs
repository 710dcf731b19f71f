//! Plain-text mesh format and VTK legacy export.
//!
//! ```text
//! acoustic-mesh v1
//! <nv>
//! <nt>
//! <nb>
//! x y            (nv lines)
//! i j k          (nt lines)
//! a b triangle   (nb lines)
//! hold_all xmin ymin xmax ymax   (optional)
//! ```

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use super::builders::default_hold_all;
use super::mesh::{BoundaryEdge, BoundingBox, Mesh};
use crate::error::{Error, Result};
use crate::Vec2;

pub const MESH_HEADER: &str = "acoustic-mesh v1";

pub fn write_mesh<W: Write>(mesh: &Mesh, mut w: W) -> Result<()> {
    writeln!(w, "{MESH_HEADER}")?;
    writeln!(w, "{}", mesh.num_vertices())?;
    writeln!(w, "{}", mesh.num_triangles())?;
    writeln!(w, "{}", mesh.boundary_edges.len())?;
    for v in &mesh.vertices {
        writeln!(w, "{:e} {:e}", v.x, v.y)?;
    }
    for t in &mesh.triangles {
        writeln!(w, "{} {} {}", t[0], t[1], t[2])?;
    }
    for e in &mesh.boundary_edges {
        writeln!(w, "{} {} {}", e.a, e.b, e.triangle)?;
    }
    let b = mesh.hold_all;
    writeln!(
        w,
        "hold_all {:e} {:e} {:e} {:e}",
        b.min[0], b.min[1], b.max[0], b.max[1]
    )?;
    Ok(())
}

pub fn read_mesh<R: BufRead>(r: R) -> Result<Mesh> {
    let mut lines = r
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty()));
    let mut next = |what: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some((n, Ok(s))) => Ok((n, s)),
            Some((_, Err(e))) => Err(e.into()),
            None => Err(Error::MeshParse {
                line: 0,
                message: format!("unexpected end of file, expected {what}"),
            }),
        }
    };
    let bad = |line: usize, message: String| Error::MeshParse { line, message };

    let (n, header) = next("header")?;
    if header.trim() != MESH_HEADER {
        return Err(bad(n, format!("expected `{MESH_HEADER}`")));
    }
    let mut count = |what: &str| -> Result<usize> {
        let (n, s) = next(what)?;
        s.trim().parse().map_err(|_| bad(n, format!("bad {what}: `{s}`")))
    };
    let nv = count("vertex count")?;
    let nt = count("triangle count")?;
    let nb = count("boundary edge count")?;

    fn fields<T: std::str::FromStr>(n: usize, s: &str, k: usize) -> Result<Vec<T>> {
        let out: Vec<T> = s
            .split_whitespace()
            .map(|t| t.parse::<T>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::MeshParse {
                line: n,
                message: format!("cannot parse `{s}`"),
            })?;
        if out.len() != k {
            return Err(Error::MeshParse {
                line: n,
                message: format!("expected {k} fields, got {}", out.len()),
            });
        }
        Ok(out)
    }

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (n, s) = next("vertex")?;
        let f: Vec<f64> = fields(n, &s, 2)?;
        vertices.push(Vec2::new(f[0], f[1]));
    }
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (n, s) = next("triangle")?;
        let f: Vec<usize> = fields(n, &s, 3)?;
        triangles.push([f[0], f[1], f[2]]);
    }
    let mut edges = Vec::with_capacity(nb);
    for _ in 0..nb {
        let (n, s) = next("boundary edge")?;
        let f: Vec<usize> = fields(n, &s, 3)?;
        edges.push(BoundaryEdge {
            a: f[0],
            b: f[1],
            triangle: f[2],
        });
    }
    let hold_all = match lines.next() {
        Some((n, Ok(s))) => {
            let rest = s
                .trim()
                .strip_prefix("hold_all")
                .ok_or_else(|| bad(n, format!("unexpected trailing line `{s}`")))?;
            let f: Vec<f64> = fields(n, rest, 4)?;
            BoundingBox::new([f[0], f[1]], [f[2], f[3]])
        }
        Some((_, Err(e))) => return Err(e.into()),
        None => default_hold_all(&vertices),
    };
    Mesh::new(vertices, triangles, edges, hold_all)
}

pub fn save_mesh(mesh: &Mesh, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_mesh(mesh, std::io::BufWriter::new(f))
}

pub fn load_mesh(path: &Path) -> Result<Mesh> {
    let f = std::fs::File::open(path)?;
    read_mesh(std::io::BufReader::new(f))
}

/// Legacy ASCII VTK unstructured grid with optional nodal point data.
pub fn vtk_string(mesh: &Mesh, title: &str, point_data: &[(&str, &[f64])]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0");
    let _ = writeln!(s, "{}", title.lines().next().unwrap_or(""));
    let _ = writeln!(s, "ASCII");
    let _ = writeln!(s, "DATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {} double", mesh.num_vertices());
    for v in &mesh.vertices {
        let _ = writeln!(s, "{:e} {:e} 0", v.x, v.y);
    }
    let nt = mesh.num_triangles();
    let _ = writeln!(s, "CELLS {} {}", nt, 4 * nt);
    for t in &mesh.triangles {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {nt}");
    for _ in 0..nt {
        let _ = writeln!(s, "5");
    }
    if !point_data.is_empty() {
        let _ = writeln!(s, "POINT_DATA {}", mesh.num_vertices());
        for (name, values) in point_data {
            assert_eq!(
                values.len(),
                mesh.num_vertices(),
                "point data `{name}` has wrong length"
            );
            let _ = writeln!(s, "SCALARS {name} double 1");
            let _ = writeln!(s, "LOOKUP_TABLE default");
            for v in *values {
                let _ = writeln!(s, "{v:e}");
            }
        }
    }
    s
}

pub fn write_vtk(path: &Path, mesh: &Mesh, title: &str, point_data: &[(&str, &[f64])]) -> Result<()> {
    std::fs::write(path, vtk_string(mesh, title, point_data))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::builders::{build_structured_mesh, MeshShape};

    #[test]
    fn round_trip_is_exact() {
        let m = build_structured_mesh(MeshShape::Disk { radius: 1.3 }, 4).unwrap();
        let mut buf = Vec::new();
        write_mesh(&m, &mut buf).unwrap();
        let back = read_mesh(buf.as_slice()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn missing_hold_all_line_gets_default_box() {
        let text = "acoustic-mesh v1\n3\n1\n3\n0 0\n1 0\n0 1\n0 1 2\n0 1 0\n1 2 0\n2 0 0\n";
        let m = read_mesh(text.as_bytes()).unwrap();
        assert_eq!(m.num_triangles(), 1);
        assert!(m.hold_all.contains_strictly(Vec2::new(1.0, 0.0)));
    }

    #[test]
    fn bad_header_reports_line() {
        let err = read_mesh("mesh v0\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::MeshParse { line: 1, .. }));
    }

    #[test]
    fn vtk_has_cells_and_data() {
        let m = build_structured_mesh(MeshShape::UnitSquare, 2).unwrap();
        let data = vec![1.0; 9];
        let s = vtk_string(&m, "t", &[("psi", &data)]);
        assert!(s.contains("CELLS 8 32"));
        assert!(s.contains("SCALARS psi double 1"));
        assert_eq!(s.lines().filter(|l| *l == "5").count(), 8);
    }
}
