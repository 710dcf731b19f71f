use crate::discretize::{assemble_matrix_stiffness, FeSpace, MatField};
use crate::error::{Error, Result};
use crate::geometry::{BoundaryGeometry, DeformationField};
use crate::linalg::{pcg, CsrMatrix, SolverOptions};
use crate::Vec2;

use super::ShapeGradient;

pub const DEFAULT_SMOOTHING_PASSES: usize = 3;

/// Averages slot values with their two loop neighbours, `passes` times.
pub fn smooth_along_boundary(bg: &BoundaryGeometry, values: &[f64], passes: usize) -> Vec<f64> {
    let mut cur = values.to_vec();
    for _ in 0..passes {
        cur = (0..bg.len())
            .map(|s| (cur[bg.prev[s]] + cur[s] + cur[bg.next[s]]) / 3.0)
            .collect();
    }
    cur
}

/// Descent field `h = -smooth(density) n` on the boundary, extended into the
/// domain by a discrete harmonic extension that is zero on `fixed`.
pub fn lift_density(
    space: &FeSpace,
    bg: &BoundaryGeometry,
    grad: &ShapeGradient,
    fixed: &[usize],
    passes: usize,
) -> Result<DeformationField> {
    let mesh = space.mesh();
    let nv = mesh.num_vertices();
    if fixed.iter().any(|&v| mesh.is_boundary(v)) {
        return Err(Error::InvalidInput("fixed vertices must lie in the interior".into()));
    }
    let smoothed = smooth_along_boundary(bg, &grad.density, passes);
    let mut dirichlet: Vec<Option<Vec2>> = vec![None; nv];
    for s in 0..bg.len() {
        dirichlet[bg.vertex[s]] = Some(-smoothed[s] * bg.outward_normal[s]);
    }
    for &v in fixed {
        dirichlet[v] = Some(Vec2::zeros());
    }
    let values = harmonic_extension(space, &dirichlet)?;
    DeformationField::from_nodal(values)
}

/// Component-wise discrete harmonic extension of the given vertex values.
pub fn harmonic_extension(space: &FeSpace, dirichlet: &[Option<Vec2>]) -> Result<Vec<Vec2>> {
    let k = assemble_matrix_stiffness(space, &MatField::Identity)?;
    let nv = dirichlet.len();
    let mut index = vec![usize::MAX; nv];
    let mut free = 0;
    for v in 0..nv {
        if dirichlet[v].is_none() {
            index[v] = free;
            free += 1;
        }
    }
    let mut out: Vec<Vec2> = dirichlet.iter().map(|d| d.unwrap_or_else(Vec2::zeros)).collect();
    if free == 0 {
        return Ok(out);
    }
    let mut trip = Vec::new();
    let mut rhs = [vec![0.0; free], vec![0.0; free]];
    for i in 0..nv {
        if index[i] == usize::MAX {
            continue;
        }
        for slot in k.row_ptr()[i]..k.row_ptr()[i + 1] {
            let (j, val) = (k.col_idx()[slot], k.values()[slot]);
            match dirichlet[j] {
                None => trip.push((index[i], index[j], val)),
                Some(d) => {
                    rhs[0][index[i]] -= val * d.x;
                    rhs[1][index[i]] -= val * d.y;
                }
            }
        }
    }
    let reduced = CsrMatrix::from_triplets(free, free, &trip);
    let opts = SolverOptions {
        rel_tol: 1e-12,
        ..SolverOptions::default()
    };
    for (c, b) in rhs.iter().enumerate() {
        let mut x = vec![0.0; free];
        pcg(&reduced, b, &mut x, &opts)?;
        for v in 0..nv {
            if index[v] != usize::MAX {
                out[v][c] = x[index[v]];
            }
        }
    }
    Ok(out)
}
