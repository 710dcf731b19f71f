use acoustic_shape::adjoint::{
    adjoint_data, reverse_trajectory, solve_adjoint, CostFunctionalSpec, CostVariant, Target,
};
use acoustic_shape::discretize::FeSpace;
use acoustic_shape::driver::{OptimizationSettings, RunConfig};
use acoustic_shape::geometry::io::{read_mesh, write_mesh};
use acoustic_shape::geometry::{build_structured_mesh, compute_boundary_geometry, make_bump_field, MeshShape};
use acoustic_shape::problems::{reference_disk_problem, ReferenceModel};
use acoustic_shape::shapegrad::{shape_derivative, smooth_along_boundary, NormalDerivativeRule};
use acoustic_shape::state::{StateSettings, TimeGrid};
use acoustic_shape::transform::{DomainMap, GradientSource};
use acoustic_shape::{Mat2, Vec2};
use proptest::prelude::*;

fn max_abs_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn max_abs(a: &[Vec<f64>]) -> f64 {
    a.iter().flatten().fold(0.0, |m, x| m.max(x.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn reversal_is_an_involution(traj in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 3), 1..20)) {
        let back = reverse_trajectory(&reverse_trajectory(&traj));
        prop_assert_eq!(back, traj.clone());
        prop_assert_eq!(reverse_trajectory(&traj)[0].clone(), traj[traj.len() - 1].clone());
    }

    #[test]
    fn transform_is_identity_at_zero(cx in -0.9f64..0.9, cy in -0.9f64..0.9, r in 0.2f64..0.5,
                                     ax in -1.0f64..1.0, ay in -1.0f64..1.0) {
        let mesh = build_structured_mesh(MeshShape::Disk { radius: 1.0 }, 4).unwrap();
        let h = make_bump_field(Vec2::new(cx, cy), r, Vec2::new(ax, ay), &mesh).unwrap();
        let space = FeSpace::new(mesh);
        for source in [GradientSource::Analytic, GradientSource::Element] {
            let map = DomainMap::new(&space, &h, 0.0, source).unwrap();
            prop_assert!(map.det.iter().all(|&d| d == 1.0));
            prop_assert!(map.w.iter().all(|&w| (w - 1.0).abs() < 1e-15));
            prop_assert!(map.m.iter().all(|m| (m - Mat2::identity()).abs().max() < 1e-15));
            prop_assert_eq!(&map.positions, &space.mesh().vertices);
        }
    }

    #[test]
    fn smoothing_preserves_constants(c in -10.0f64..10.0, passes in 0usize..6) {
        let mesh = build_structured_mesh(MeshShape::Disk { radius: 1.0 }, 5).unwrap();
        let bg = compute_boundary_geometry(&mesh).unwrap();
        let s = smooth_along_boundary(&bg, &vec![c; bg.len()], passes);
        prop_assert!(s.iter().all(|v| (v - c).abs() <= 1e-14 * c.abs().max(1.0)));
    }

    #[test]
    fn mesh_text_round_trip(res in 2usize..8, shape in 0usize..3) {
        let shape = [MeshShape::UnitSquare, MeshShape::Disk { radius: 1.3 },
                     MeshShape::AnnularSector { r_inner: 0.5, r_outer: 1.0, angle: 1.5 }][shape];
        let mesh = build_structured_mesh(shape, res).unwrap();
        let mut buf = Vec::new();
        write_mesh(&mesh, &mut buf).unwrap();
        let back = read_mesh(buf.as_slice()).unwrap();
        prop_assert_eq!(back.checksum(), mesh.checksum());
        prop_assert_eq!(back.vertices, mesh.vertices);
    }

    #[test]
    fn optimization_settings_round_trip(max_iters in 0usize..50, step0 in 1e-4f64..1.0, backtrack in 0.1f64..0.9) {
        let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/toy_focusing.toml")).unwrap();
        let mut cfg = RunConfig::from_toml(&text).unwrap();
        cfg.optimization = OptimizationSettings { max_iters, step0, backtrack, ..Default::default() };
        prop_assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    /// The adjoint is linear in its data for every model.
    #[test]
    fn adjoint_is_linear_in_its_data(alpha in -3.0f64..3.0, beta in -3.0f64..3.0, model in 0usize..3) {
        let model = [ReferenceModel::Linear, ReferenceModel::Westervelt, ReferenceModel::Kuznetsov][model];
        let mut p = reference_disk_problem(model, 6, 30).unwrap();
        p.grid = TimeGrid::new(2.0, 30).unwrap();
        let sol = p.solve(None).unwrap();
        let other = CostFunctionalSpec::new(
            p.mesh(),
            CostVariant::PressureTracking,
            p.cost.focal,
            (0.5, 2.0),
            Target::Constant(0.01),
            true,
        )
        .unwrap();
        let d1 = adjoint_data(&p.space, &p.cost, &sol, &p.params).unwrap();
        let d2 = adjoint_data(&p.space, &other, &sol, &p.params).unwrap();
        let settings = StateSettings::default();
        let a1 = solve_adjoint(&p.space, &p.params, &sol, &d1, &settings).unwrap();
        let a2 = solve_adjoint(&p.space, &p.params, &sol, &d2, &settings).unwrap();
        let ac = solve_adjoint(&p.space, &p.params, &sol, &d1.combine(alpha, &d2, beta).unwrap(), &settings).unwrap();
        let lin: Vec<Vec<f64>> = a1.p.iter().zip(&a2.p)
            .map(|(x, y)| x.iter().zip(y).map(|(a, b)| alpha * a + beta * b).collect())
            .collect();
        let scale = alpha.abs() * max_abs(&a1.p) + beta.abs() * max_abs(&a2.p);
        prop_assert!(max_abs_diff(&ac.p, &lin) <= 1e-10 * scale.max(1e-300));
    }

    /// `dJ[alpha h1 + beta h2] = alpha dJ[h1] + beta dJ[h2]`.
    #[test]
    fn density_pairing_is_linear(alpha in -2.0f64..2.0, beta in -2.0f64..2.0,
                                 t1 in 0.0f64..std::f64::consts::TAU, t2 in 0.0f64..std::f64::consts::TAU) {
        let p = reference_disk_problem(ReferenceModel::Linear, 6, 30).unwrap();
        let ev = p.evaluate_gradient(NormalDerivativeRule::OneSided).unwrap();
        let h1 = make_bump_field(Vec2::new(t1.cos(), t1.sin()) * 0.9, 0.4, Vec2::new(0.2, -0.1), p.mesh()).unwrap();
        let h2 = make_bump_field(Vec2::new(t2.cos(), t2.sin()) * 0.9, 0.4, Vec2::new(-0.1, 0.3), p.mesh()).unwrap();
        let excl = &p.cost.excluded;
        // a bump may reach the focal region for some angles; such fields are rejected
        let (Ok(d1), Ok(d2)) = (
            shape_derivative(&ev.gradient, &ev.boundary, &h1, excl),
            shape_derivative(&ev.gradient, &ev.boundary, &h2, excl),
        ) else {
            return Ok(());
        };
        let dc = shape_derivative(&ev.gradient, &ev.boundary, &h1.combine(alpha, &h2, beta), excl).unwrap();
        let scale = alpha.abs() * d1.abs() + beta.abs() * d2.abs();
        prop_assert!((dc - alpha * d1 - beta * d2).abs() <= 1e-12 * scale.max(1e-300));
    }
}
