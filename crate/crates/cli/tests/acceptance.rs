//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero if any fails.
//!
//! Default instance: a = 1, gamma = 0.1, A0 = 0.5 on 64, 128 and 256 elements.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use interlock_core::baselines::{circle_residual_gap, loglog_slope, DEFAULT_H_SEQUENCE};
use interlock_core::energy::energy_difference;
use interlock_core::{
    circle_cap_profile, energy_gradient, graph_el_residual, minimize, mollified_polygon_profile,
    natural_bc_check, nonoptimality_report, recover_lambda, total_energy, CircleCap,
    MollifiedPolygon, OptimizationConfig, OptimizationResult, ProblemParams, Profile,
};

const MESHES: [usize; 3] = [64, 128, 256];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn default_params() -> ProblemParams {
    ProblemParams::new(1.0, 0.1, 0.5).unwrap()
}

fn solve(params: &ProblemParams, n: usize) -> OptimizationResult {
    minimize(params, n, &OptimizationConfig::default()).unwrap()
}

/// Smooth clamped shape plus small nodal noise.
fn random_profile(rng: &mut ChaCha8Rng, n: usize) -> Profile {
    let params = default_params();
    let c: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let smooth = Profile::interpolate(params, n, |x| {
        let u = 1.0 - x * x;
        let (mut s, mut ds) = (0.0, 0.0);
        for (k, ck) in c.iter().enumerate() {
            let w = (k + 1) as f64 * std::f64::consts::FRAC_PI_2;
            s += ck * (w * x).cos();
            ds -= ck * w * (w * x).sin();
        }
        (u * u * s, -4.0 * x * u * s + u * u * ds)
    })
    .unwrap();
    let dofs: Vec<f64> = smooth
        .free_dofs()
        .iter()
        .enumerate()
        .map(|(i, v)| v + if i % 2 == 0 { 1e-3 } else { 1e-2 } * rng.gen_range(-1.0..1.0))
        .collect();
    smooth.with_free_dofs(&dofs)
}

/// Central differences with steps of 1e-6 in each DOF's own unit: the element
/// width for values, 1 for slopes. `J(x + h) - J(x - h)` is evaluated without
/// cancellation.
fn c1_gradient() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20_241_015);
    let mut worst = 0.0_f64;
    for _ in 0..10 {
        let p = random_profile(&mut rng, 64);
        let w = p.element_width();
        let g = energy_gradient(&p).into_inner();
        let floor = 1e-6 * g.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let x = p.free_dofs();
        for i in 0..x.len() {
            let unit = if i % 2 == 0 { w } else { 1.0 };
            let h = 1e-6 * unit * (1.0 + x[i].abs());
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[i] += h;
            xm[i] -= h;
            let fd = energy_difference(&p.with_free_dofs(&xm), &p.with_free_dofs(&xp)) / (2.0 * h);
            worst = worst.max((fd - g[i]).abs() / g[i].abs().max(floor));
        }
    }
    outcome(
        worst <= 1e-6,
        format!("10 random profiles, max relative error {worst:.3e} (tol 1e-6)"),
    )
}

fn c2_flat() -> Outcome {
    let p = ProblemParams::new(1.0, 0.1, 0.0).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for n in MESHES {
        let r = solve(&p, n);
        let dj = (r.energy.total - 2.0).abs();
        pass &= r.converged && dj <= 1e-10 && r.lambda.abs() <= 1e-8;
        parts.push(format!(
            "n={n}: |J-2a|={dj:.1e}, |lambda|={:.1e}",
            r.lambda.abs()
        ));
    }
    outcome(pass, parts.join("; "))
}

fn c3_circle_order() -> Outcome {
    let p = default_params();
    let cap = CircleCap::from_area(p.a, p.target_area).unwrap();
    let exact = cap.closed_form_energy(p.gamma);
    let errs: Vec<f64> = MESHES
        .iter()
        .map(|&n| (total_energy(&circle_cap_profile(&p, n).unwrap().0).total - exact).abs())
        .collect();
    let hs: Vec<f64> = MESHES.iter().map(|&n| 2.0 * p.a / n as f64).collect();
    let order = loglog_slope(&hs, &errs).unwrap();
    outcome(
        (1.8..=2.2).contains(&order),
        format!(
            "errors {:.3e}, {:.3e}, {:.3e}; observed order {order:.3} (required [1.8, 2.2])",
            errs[0], errs[1], errs[2]
        ),
    )
}

fn c4_descent() -> Outcome {
    let p = default_params();
    let mut pass = true;
    let mut parts = Vec::new();
    for n in MESHES {
        let r = solve(&p, n);
        let monotone = r.history.windows(2).all(|w| w[1].0 <= w[0].0);
        let gnorm = r.final_gradient_norm();
        pass &= r.converged && gnorm <= 1e-8 && monotone && r.iterations <= 10_000;
        parts.push(format!(
            "n={n}: {} its, |pg|={gnorm:.2e}, monotone={monotone}",
            r.iterations
        ));
    }
    outcome(pass, parts.join("; "))
}

fn c5_el_residual() -> Outcome {
    let p = default_params();
    let norms: Vec<f64> = MESHES
        .iter()
        .map(|&n| {
            let r = solve(&p, n);
            let lambda = recover_lambda(&r.profile).lambda;
            graph_el_residual(&r.profile, lambda, 128).unwrap().l2_norm
        })
        .collect();
    let ratios = [norms[0] / norms[1], norms[1] / norms[2]];
    let pass = norms[2] <= 1e-2 && ratios.iter().all(|r| *r >= 2.0);
    outcome(
        pass,
        format!(
            "l2 {:.3e}, {:.3e}, {:.3e} (tol 1e-2 at 256); shrink {:.2}x, {:.2}x (need 2x)",
            norms[0], norms[1], norms[2], ratios[0], ratios[1]
        ),
    )
}

fn max_curvature(profile: &Profile) -> f64 {
    let n = profile.n_elements();
    (0..n)
        .flat_map(|e| (0..=8).map(move |k| (e, k as f64 / 8.0)))
        .map(|(e, t)| {
            let v = profile.element_eval(e, t);
            interlock_core::geometry::curvature_of(v.fp, v.fpp).abs()
        })
        .fold(0.0, f64::max)
}

fn c6_natural_bc() -> Outcome {
    let p = default_params();
    let mut ends = Vec::new();
    let mut final_ratio = f64::NAN;
    for n in MESHES {
        let r = solve(&p, n);
        let (kl, kr) = natural_bc_check(&r.profile);
        let end = kl.abs().max(kr.abs());
        final_ratio = end / max_curvature(&r.profile);
        ends.push(end);
    }
    let decreasing = ends.windows(2).all(|w| w[1] < w[0]);
    outcome(
        decreasing && final_ratio <= 1e-2,
        format!(
            "|kappa(±a)| = {:.4}, {:.4}, {:.4}; decreasing={decreasing}; final/max|kappa| = {final_ratio:.3} (tol 1e-2)",
            ends[0], ends[1], ends[2]
        ),
    )
}

fn c7_circle_stationarity() -> Outcome {
    let a = 1.0;
    let mut pass = true;
    let mut min_excess = f64::INFINITY;
    for radius in [1.2, 2.0, 5.0] {
        for lambda in [-2.0, 0.5, 3.0] {
            for gamma in [0.01, 0.1, 1.0] {
                let cap = CircleCap::from_half_angle(a, (a / radius).asin());
                let (sup, bound) = circle_residual_gap(&cap, lambda, gamma);
                pass &= bound > 0.0 && sup > bound;
                min_excess = min_excess.min(sup - bound);
            }
        }
    }
    outcome(
        pass,
        format!("27 (R, lambda, gamma) combinations; min sup - bound = {min_excess:.3e}"),
    )
}

fn c8_polygon() -> Outcome {
    let p = default_params();
    let curv: Vec<f64> = DEFAULT_H_SEQUENCE
        .iter()
        .map(|&h| {
            let n = 64.max(MollifiedPolygon::for_area(&p, h).unwrap().min_elements());
            total_energy(&mollified_polygon_profile(&p, h, n).unwrap()).curv_term
        })
        .collect();
    let slope = loglog_slope(&DEFAULT_H_SEQUENCE, &curv).unwrap();
    outcome(
        slope <= -0.9,
        format!("curvature energy {curv:.4?} over h {DEFAULT_H_SEQUENCE:?}; slope {slope:.4} (need <= -0.9)"),
    )
}

fn c9_nonoptimality() -> Outcome {
    let p = default_params();
    let report =
        nonoptimality_report(&p, 64, &DEFAULT_H_SEQUENCE, &OptimizationConfig::default()).unwrap();
    let circle = report.circle_margin.unwrap_or(f64::INFINITY);
    let polygon = report.polygon_margin.unwrap_or(f64::INFINITY);
    outcome(
        circle > 1e-3 && polygon > 1e-3,
        format!(
            "relative margin vs circle {circle:.4e}, vs polygons {polygon:.4e} (need > 1e-3 for both)"
        ),
    )
}

fn c10_multiplier() -> Outcome {
    let mut pass = true;
    let mut smallest = f64::INFINITY;
    for area in [-0.5, 0.05, 0.25, 0.5, 1.0] {
        let p = default_params().with_area(area);
        let r = solve(&p, 64);
        let lambda = recover_lambda(&r.profile).lambda;
        pass &= lambda.abs() > 1e-4;
        smallest = smallest.min(lambda.abs());
    }
    outcome(
        pass,
        format!("A0 in {{-0.5, 0.05, 0.25, 0.5, 1}}: min |lambda| = {smallest:.4e} (need > 1e-4)"),
    )
}

fn c11_scaling() -> Outcome {
    let p = default_params();
    let base = solve(&p, 64).profile;
    let j = total_energy(&base).total;
    let mut worst = 0.0_f64;
    for s in [0.5, 2.0, 10.0] {
        let scaled = base.scaled(s).unwrap();
        let js = total_energy(&scaled).total;
        worst = worst.max((js - s * j).abs() / (s * j));
    }
    outcome(
        worst <= 1e-10,
        format!("s in {{0.5, 2, 10}}: max relative deviation {worst:.2e} (tol 1e-10)"),
    )
}

fn run_cli(out: &Path, args: &[&str]) -> (bool, Vec<u8>) {
    let output = Command::new(env!("CARGO_BIN_EXE_interlock"))
        .args(args)
        .env("INTERLOCK_OUT_DIR", out)
        .output()
        .expect("run interlock");
    (output.status.success(), output.stdout)
}

fn dir_contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().into_string().unwrap(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

fn c12_determinism() -> Outcome {
    let root = tempfile::tempdir().unwrap();
    let (ok, _) = run_cli(
        &root.path().join("src"),
        &["minimize", "--a", "1", "--gamma", "0.1", "--area", "0.5"],
    );
    assert!(ok, "minimize failed");
    let profile = root.path().join("src").join("profile.csv");
    let profile = profile.to_str().unwrap();
    let commands: Vec<(&str, Vec<&str>)> = vec![
        (
            "minimize",
            vec!["minimize", "--a", "1", "--gamma", "0.1", "--area", "0.5"],
        ),
        (
            "residual",
            vec!["residual", "--profile", profile, "--recover"],
        ),
        (
            "compare",
            vec!["compare", "--a", "1", "--gamma", "0.1", "--area", "0.5"],
        ),
        (
            "sweep",
            vec![
                "sweep", "--param", "gamma", "--from", "0.01", "--to", "1", "--steps", "5",
            ],
        ),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, args) in commands {
        let first = root.path().join(format!("{name}-1"));
        let second = root.path().join(format!("{name}-2"));
        let (ok1, out1) = run_cli(&first, &args);
        let (ok2, out2) = run_cli(&second, &args);
        let files1 = dir_contents(&first);
        let same =
            ok1 && ok2 && out1 == out2 && !files1.is_empty() && files1 == dir_contents(&second);
        pass &= same;
        parts.push(format!(
            "{name}: {} files {}",
            files1.len(),
            if same { "identical" } else { "DIFFER" }
        ));
    }
    outcome(pass, parts.join("; "))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 12] = [
        ("gradient correctness", c1_gradient),
        ("flat optimality", c2_flat),
        ("circle-cap quadrature order", c3_circle_order),
        ("existence and descent", c4_descent),
        ("Euler-Lagrange stationarity", c5_el_residual),
        ("natural boundary condition", c6_natural_bc),
        ("circle non-stationarity", c7_circle_stationarity),
        ("polygon divergence", c8_polygon),
        ("non-optimality of classical shapes", c9_nonoptimality),
        ("nonzero multiplier", c10_multiplier),
        ("scaling law", c11_scaling),
        ("CLI determinism", c12_determinism),
    ];
    let mut passed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        let secs = start.elapsed().as_secs_f64();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("{tag} {:>2} {name}: {} [{secs:.2}s]", i + 1, o.detail);
        passed += usize::from(o.pass);
    }
    println!("acceptance: {passed}/{} criteria passed", criteria.len());
    if passed != criteria.len() {
        std::process::exit(1);
    }
}
