use proptest::prelude::*;

use interlock_core::energy::{stress_density_split, total_energy};
use interlock_core::{
    constraint_value, project_to_constraint, stress_density, ProblemParams, Profile,
};

prop_compose! {
    fn params()(a in 0.5..2.0_f64, gamma in 0.01..1.0_f64, area in -1.0..1.0_f64) -> ProblemParams {
        ProblemParams::new(a, gamma, area * a * a).unwrap()
    }
}

prop_compose! {
    /// Admissible profile with random interior DOFs.
    fn profile()(p in params(), n in 4usize..24)
        (dofs in prop::collection::vec(-0.5..0.5_f64, 2 * (n - 1)), p in Just(p), n in Just(n))
        -> Profile
    {
        let flat = Profile::flat(p, n).unwrap();
        let scaled: Vec<f64> = dofs
            .iter()
            .enumerate()
            .map(|(i, v)| if i % 2 == 0 { v * p.a } else { 2.0 * v })
            .collect();
        flat.with_free_dofs(&scaled)
    }
}

prop_compose! {
    /// Hermite interpolant of `(1 - t²)² Σ c_k cos(kπt/2)` on a resolved mesh.
    fn smooth_profile()(p in params(), n in 64usize..128, c in prop::collection::vec(-0.15..0.15_f64, 3))
        -> Profile
    {
        let a = p.a;
        Profile::interpolate(p, n, move |x| {
            let t = x / a;
            let w = (1.0 - t * t).powi(2);
            let dw = -4.0 * t * (1.0 - t * t) / a;
            let (mut s, mut ds) = (0.0, 0.0);
            for (k, ck) in c.iter().enumerate() {
                let w_k = (k as f64 + 1.0) * std::f64::consts::FRAC_PI_2 / a;
                s += ck * (w_k * x).cos();
                ds -= ck * w_k * (w_k * x).sin();
            }
            (a * w * s, a * (dw * s + w * ds))
        })
        .unwrap()
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tangent_angle_identity(p in profile(), t in 0.0..1.0_f64) {
        let a = p.params().a;
        let x = -a + 2.0 * a * t;
        let fp = p.evaluate(x).unwrap().fp;
        let theta = p.tangent_angle(x).unwrap();
        prop_assert!((theta.cos() * (1.0 + fp * fp).sqrt() - 1.0).abs() < 1e-14);
        prop_assert!(theta.abs() < std::f64::consts::FRAC_PI_2);
    }

    #[test]
    fn energy_is_bounded_below_by_chord(p in profile()) {
        let e = total_energy(&p);
        let two_a = 2.0 * p.params().a;
        prop_assert!(e.arc_term >= two_a * (1.0 - 1e-14));
        prop_assert!(e.curv_term >= 0.0);
        prop_assert!(e.total >= two_a * (1.0 - 1e-14));
        prop_assert!(rel(e.arc_term + e.curv_term, e.total) < 1e-12);
        prop_assert!(rel(p.arc_length(), e.arc_term) < 1e-12);
    }

    #[test]
    fn reflection_invariance(p in profile()) {
        let m = p.mirrored();
        prop_assert!(rel(total_energy(&m).total, total_energy(&p).total) < 1e-13);
        prop_assert!(rel(m.area(), p.area()) < 1e-12 || p.area().abs() < 1e-14);
    }

    #[test]
    fn refinement_is_neutral(p in profile(), factor in 1usize..4, ts in prop::collection::vec(0.0..1.0_f64, 100)) {
        let r = p.refine(factor).unwrap();
        prop_assert!((r.area() - p.area()).abs() <= 1e-12 * p.params().a.powi(2));
        let a = p.params().a;
        for t in ts {
            let x = -a + 2.0 * a * t;
            let (u, v) = (p.evaluate(x).unwrap(), r.evaluate(x).unwrap());
            prop_assert!((u.f - v.f).abs() <= 1e-12 * (1.0 + u.f.abs()));
            prop_assert!((u.fp - v.fp).abs() <= 1e-11 * (1.0 + u.fp.abs()));
        }
    }

    #[test]
    fn refinement_is_energy_neutral_once_resolved(p in smooth_profile(), factor in 1usize..4) {
        let r = p.refine(factor).unwrap();
        let d = rel(total_energy(&r).total, total_energy(&p).total);
        prop_assert!(d < 1e-12, "rel {d:e} n {} a {} g {}", p.n_elements(), p.params().a, p.params().gamma);
    }

    #[test]
    fn scaling_law(p in profile(), s in 0.1..10.0_f64) {
        let scaled = p.scaled(s).unwrap();
        prop_assert!(rel(total_energy(&scaled).total, s * total_energy(&p).total) < 1e-10);
    }

    #[test]
    fn area_is_linear(p in profile(), alpha in -3.0..3.0_f64) {
        let dofs: Vec<f64> = p.free_dofs().iter().map(|v| alpha * v).collect();
        let q = p.with_free_dofs(&dofs);
        prop_assert!((q.area() - alpha * p.area()).abs() <= 1e-13 * (1.0 + p.area().abs()));
    }

    #[test]
    fn projection_is_idempotent(p in profile()) {
        let once = project_to_constraint(&p).unwrap();
        let a2 = p.params().a.powi(2);
        prop_assert!(constraint_value(&once).abs() <= 1e-12 * a2.max(p.params().target_area.abs()));
        prop_assert_eq!(once.boundary_dofs(), p.boundary_dofs());
        let twice = project_to_constraint(&once).unwrap();
        for (u, v) in once.free_dofs().iter().zip(twice.free_dofs()) {
            prop_assert!((u - v).abs() <= 1e-14 * (1.0 + u.abs()));
        }
    }

    #[test]
    fn density_forms_agree(fp in -5.0..5.0_f64, fpp in -50.0..50.0_f64, gamma in 0.0..2.0_f64) {
        let a = stress_density(fp, fpp, gamma);
        prop_assert!(rel(stress_density_split(fp, fpp, gamma), a) < 1e-13);
    }
}
