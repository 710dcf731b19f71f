use serde::{Deserialize, Serialize};

use super::mesh::Mesh;
use crate::error::{Error, Result};
use crate::{Mat2, Vec2};

/// Analytic description of a deformation field, kept next to the nodal
/// samples so that transform coefficients can use exact gradients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldRecipe {
    /// `amplitude * (1 - (r/radius)^2)^3` inside the ball.
    Bump {
        center: [f64; 2],
        radius: f64,
        amplitude: [f64; 2],
    },
    /// Tangential swirl around `center` supported on the ring
    /// `|r - r_mid| < half_width`; `h . (x - center) = 0` everywhere.
    RingSwirl {
        center: [f64; 2],
        r_mid: f64,
        half_width: f64,
        amplitude: f64,
    },
    /// `h(x) = a x + c`. Not compactly supported; used for transform checks.
    Affine {
        a: [[f64; 2]; 2],
        c: [f64; 2],
    },
    Sum(Vec<(f64, FieldRecipe)>),
    /// Only nodal values are known (e.g. a lifted gradient density).
    Nodal,
}

fn bump_profile(s2: f64) -> (f64, f64) {
    // value and derivative with respect to s2 = (r/R)^2
    if s2 >= 1.0 {
        (0.0, 0.0)
    } else {
        let q = 1.0 - s2;
        (q * q * q, -3.0 * q * q)
    }
}

impl FieldRecipe {
    /// Value and Jacobian `J_ij = d h_i / d x_j`, if analytic.
    pub fn eval(&self, x: Vec2) -> Option<(Vec2, Mat2)> {
        match self {
            FieldRecipe::Bump {
                center,
                radius,
                amplitude,
            } => {
                let dx = x - Vec2::new(center[0], center[1]);
                let s2 = dx.norm_squared() / (radius * radius);
                let (p, dp) = bump_profile(s2);
                let amp = Vec2::new(amplitude[0], amplitude[1]);
                let grad = dx * (2.0 * dp / (radius * radius));
                Some((amp * p, amp * grad.transpose()))
            }
            FieldRecipe::RingSwirl {
                center,
                r_mid,
                half_width,
                amplitude,
            } => {
                let dx = x - Vec2::new(center[0], center[1]);
                let r = dx.norm();
                let s = (r - r_mid) / half_width;
                if s.abs() >= 1.0 || r == 0.0 {
                    return Some((Vec2::zeros(), Mat2::zeros()));
                }
                let (p, dp_ds2) = bump_profile(s * s);
                // h = amplitude * p(s) * (-dy, dx) / r
                let rot = Vec2::new(-dx.y, dx.x);
                let f = amplitude * p / r;
                let df_dr = amplitude * (dp_ds2 * 2.0 * s / half_width / r - p / (r * r));
                let grad_f = dx * (df_dr / r);
                let jrot = Mat2::new(0.0, -1.0, 1.0, 0.0);
                Some((rot * f, rot * grad_f.transpose() + jrot * f))
            }
            FieldRecipe::Affine { a, c } => {
                let am = Mat2::new(a[0][0], a[0][1], a[1][0], a[1][1]);
                Some((am * x + Vec2::new(c[0], c[1]), am))
            }
            FieldRecipe::Sum(terms) => {
                let mut v = Vec2::zeros();
                let mut j = Mat2::zeros();
                for (w, r) in terms {
                    let (vi, ji) = r.eval(x)?;
                    v += vi * *w;
                    j += ji * *w;
                }
                Some((v, j))
            }
            FieldRecipe::Nodal => None,
        }
    }

    /// Whether the field is guaranteed to vanish on and outside the box.
    fn support_inside(&self, mesh: &Mesh) -> Result<()> {
        let bbox = mesh.hold_all;
        match self {
            FieldRecipe::Bump { center, radius, .. } => {
                let c = Vec2::new(center[0], center[1]);
                if !(bbox.contains_strictly(c) && bbox.distance_to_boundary(c) > *radius) {
                    return Err(Error::SupportViolation(format!(
                        "bump ball around ({}, {}) with radius {radius} reaches the hold-all boundary",
                        center[0], center[1]
                    )));
                }
                Ok(())
            }
            FieldRecipe::RingSwirl {
                center,
                r_mid,
                half_width,
                ..
            } => {
                let c = Vec2::new(center[0], center[1]);
                if !(bbox.contains_strictly(c) && bbox.distance_to_boundary(c) > r_mid + half_width) {
                    return Err(Error::SupportViolation(
                        "swirl ring reaches the hold-all boundary".into(),
                    ));
                }
                if half_width >= r_mid {
                    return Err(Error::InvalidInput("swirl ring must not cover its center".into()));
                }
                Ok(())
            }
            FieldRecipe::Sum(terms) => terms.iter().try_for_each(|(_, r)| r.support_inside(mesh)),
            FieldRecipe::Affine { .. } | FieldRecipe::Nodal => Ok(()),
        }
    }
}

/// A vector field h sampled at the mesh vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct DeformationField {
    pub values: Vec<Vec2>,
    pub recipe: FieldRecipe,
}

impl DeformationField {
    pub fn zero(mesh: &Mesh) -> Self {
        Self {
            values: vec![Vec2::zeros(); mesh.num_vertices()],
            recipe: FieldRecipe::Sum(Vec::new()),
        }
    }

    pub fn from_recipe(mesh: &Mesh, recipe: FieldRecipe) -> Result<Self> {
        recipe.support_inside(mesh)?;
        let values = mesh
            .vertices
            .iter()
            .map(|&x| recipe.eval(x).map(|(v, _)| v))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::InvalidInput("recipe has no analytic values".into()))?;
        let field = Self { values, recipe };
        field.check_finite()?;
        Ok(field)
    }

    pub fn from_nodal(values: Vec<Vec2>) -> Result<Self> {
        let field = Self {
            values,
            recipe: FieldRecipe::Nodal,
        };
        field.check_finite()?;
        Ok(field)
    }

    fn check_finite(&self) -> Result<()> {
        if self.values.iter().all(|v| v.x.is_finite() && v.y.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite("deformation field"))
        }
    }

    pub fn is_analytic(&self) -> bool {
        !matches!(self.recipe, FieldRecipe::Nodal)
    }

    /// Value and Jacobian at `x`: analytic when possible, otherwise from the
    /// P1 interpolant on the containing triangle.
    pub fn eval_at(&self, mesh: &Mesh, x: Vec2) -> Result<(Vec2, Mat2)> {
        if let Some(r) = self.recipe.eval(x) {
            return Ok(r);
        }
        let (t, bary) = mesh
            .locate(x)
            .ok_or_else(|| Error::InvalidInput(format!("point ({}, {}) outside mesh", x.x, x.y)))?;
        let tri = mesh.triangles[t];
        let v = self.values[tri[0]] * bary[0] + self.values[tri[1]] * bary[1] + self.values[tri[2]] * bary[2];
        Ok((v, mesh.element_jacobian(t, &self.values)))
    }

    pub fn max_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * alpha).collect(),
            recipe: match &self.recipe {
                FieldRecipe::Nodal => FieldRecipe::Nodal,
                r => FieldRecipe::Sum(vec![(alpha, r.clone())]),
            },
        }
    }

    /// `alpha * self + beta * other`.
    pub fn combine(&self, alpha: f64, other: &DeformationField, beta: f64) -> Self {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * alpha + b * beta)
            .collect();
        let recipe = if self.is_analytic() && other.is_analytic() {
            FieldRecipe::Sum(vec![(alpha, self.recipe.clone()), (beta, other.recipe.clone())])
        } else {
            FieldRecipe::Nodal
        };
        Self { values, recipe }
    }

    /// Checks that h vanishes at every listed vertex.
    pub fn check_vanishes_on(&self, vertices: &[usize]) -> Result<()> {
        for &v in vertices {
            if self.values[v] != Vec2::zeros() {
                return Err(Error::SupportViolation(format!(
                    "deformation is nonzero at excluded vertex {v}"
                )));
            }
        }
        Ok(())
    }
}

pub fn make_bump_field(center: Vec2, radius: f64, amplitude: Vec2, mesh: &Mesh) -> Result<DeformationField> {
    if !(radius > 0.0) {
        return Err(Error::InvalidInput(format!("bump radius {radius} must be positive")));
    }
    DeformationField::from_recipe(
        mesh,
        FieldRecipe::Bump {
            center: [center.x, center.y],
            radius,
            amplitude: [amplitude.x, amplitude.y],
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::builders::{build_structured_mesh, MeshShape};
    use approx::assert_abs_diff_eq;

    fn disk() -> Mesh {
        build_structured_mesh(MeshShape::Disk { radius: 1.0 }, 6).unwrap()
    }

    #[test]
    fn zero_amplitude_bump_is_zero() {
        let m = disk();
        let h = make_bump_field(Vec2::new(0.5, 0.0), 0.3, Vec2::zeros(), &m).unwrap();
        assert_eq!(h.max_norm(), 0.0);
    }

    #[test]
    fn bump_peak_and_max_norm() {
        let m = disk();
        let v = m.boundary_vertices[3];
        let amp = Vec2::new(0.03, -0.04);
        let h = make_bump_field(m.vertices[v], 0.2, amp, &m).unwrap();
        assert_eq!(h.values[v], amp);
        assert_abs_diff_eq!(h.max_norm(), amp.norm(), epsilon = 1e-15);
    }

    #[test]
    fn bump_exactly_zero_outside() {
        let m = disk();
        let c = Vec2::new(0.2, 0.1);
        let h = make_bump_field(c, 0.4, Vec2::new(1.0, 1.0), &m).unwrap();
        for (x, v) in m.vertices.iter().zip(&h.values) {
            if (x - c).norm() >= 0.4 {
                assert_eq!(*v, Vec2::zeros());
            }
        }
    }

    #[test]
    fn bump_touching_hold_all_is_rejected() {
        let m = disk();
        let err = make_bump_field(Vec2::new(1.0, 0.0), 1.0, Vec2::new(1.0, 0.0), &m).unwrap_err();
        assert!(matches!(err, Error::SupportViolation(_)));
    }

    #[test]
    fn analytic_jacobians_match_finite_differences() {
        let recipes = [
            FieldRecipe::Bump {
                center: [0.1, -0.2],
                radius: 0.7,
                amplitude: [0.3, -0.5],
            },
            FieldRecipe::RingSwirl {
                center: [0.0, 0.0],
                r_mid: 0.8,
                half_width: 0.4,
                amplitude: 0.2,
            },
        ];
        let eps = 1e-6;
        for r in &recipes {
            for x in [Vec2::new(0.3, 0.2), Vec2::new(-0.5, 0.6), Vec2::new(0.7, -0.3)] {
                let (_, j) = r.eval(x).unwrap();
                for c in 0..2 {
                    let mut e = Vec2::zeros();
                    e[c] = eps;
                    let fd = (r.eval(x + e).unwrap().0 - r.eval(x - e).unwrap().0) / (2.0 * eps);
                    for i in 0..2 {
                        assert_abs_diff_eq!(j[(i, c)], fd[i], epsilon = 1e-8);
                    }
                }
            }
        }
    }

    #[test]
    fn swirl_is_tangential() {
        let r = FieldRecipe::RingSwirl {
            center: [0.0, 0.0],
            r_mid: 0.9,
            half_width: 0.5,
            amplitude: 1.0,
        };
        for x in [Vec2::new(1.0, 0.0), Vec2::new(0.6, 0.8), Vec2::new(-0.5, 0.4)] {
            let (v, _) = r.eval(x).unwrap();
            assert!(v.dot(&x).abs() < 1e-15);
        }
    }
}
