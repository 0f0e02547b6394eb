use std::io::Write;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;

use interlock_core::baselines::{CircleRow, MollifiedPolygon};
use interlock_core::io::{
    format_float, profile_csv_string, read_profile_csv_path, to_json_string, write_residual_csv,
    CompareDocument, LambdaSource, ResidualDocument, ResultDocument, SCHEMA_VERSION,
};
use interlock_core::{
    graph_el_residual, nonoptimality_report, optimizer, recover_lambda, CircleCap,
    OptimizationConfig, OptimizationResult, ProblemParams, Profile,
};

use crate::output::OutputDir;
use crate::svg::{Plot, Series};
use crate::{
    CompareArgs, Format, MinimizeArgs, OutputArgs, ResidualArgs, SolverArgs, SweepArgs, SweepParam,
};

/// `println!` that ignores a closed stdout.
macro_rules! say {
    ($($t:tt)*) => {{
        let _ = writeln!(std::io::stdout().lock(), $($t)*);
    }};
}

/// Exit code for a minimization that stopped without converging.
const NOT_CONVERGED: u8 = 2;

/// Plot samples per element.
const PLOT_SUBDIVISIONS: usize = 8;

impl SolverArgs {
    fn config(&self) -> Result<OptimizationConfig> {
        let config = OptimizationConfig {
            grad_tol: self.tol,
            max_iters: self.max_iters,
            lbfgs_memory: self.lbfgs,
            ..OptimizationConfig::default()
        };
        config.validate()?;
        Ok(config)
    }

    fn run(&self, params: &ProblemParams, multistart: bool) -> Result<OptimizationResult> {
        let config = self.config()?;
        let n = self.elements as usize;
        let result = if multistart {
            optimizer::minimize_multistart(params, n, &config)?
        } else {
            optimizer::minimize(params, n, &config)?
        };
        Ok(result)
    }
}

/// Files selected by `--format`, in a fixed order.
struct Files<'a> {
    formats: &'a [Format],
    files: Vec<(String, String)>,
}

impl<'a> Files<'a> {
    fn new(args: &'a OutputArgs) -> Self {
        Self {
            formats: &args.format,
            files: Vec::new(),
        }
    }

    fn add(&mut self, format: Format, name: &str, contents: impl FnOnce() -> String) {
        if self.formats.contains(&format) {
            self.files.push((name.to_string(), contents()));
        }
    }

    fn write(self, args: &OutputArgs) -> Result<()> {
        OutputDir::resolve(args.out.as_deref())?.write_all(&self.files)
    }
}

fn profile_curve(profile: &Profile) -> Vec<(f64, f64)> {
    let n = profile.n_elements();
    let mut pts = Vec::with_capacity(n * PLOT_SUBDIVISIONS + 1);
    for e in 0..n {
        for k in 0..PLOT_SUBDIVISIONS {
            let t = k as f64 / PLOT_SUBDIVISIONS as f64;
            let x = profile.node(e) + t * profile.element_width();
            pts.push((x, profile.element_eval(e, t).f));
        }
    }
    pts.push((profile.node(n), profile.values()[n]));
    pts
}

pub fn minimize(args: &MinimizeArgs) -> Result<u8> {
    let params = ProblemParams::new(args.a, args.gamma, args.area)?;
    let config = args.solver.config()?;
    let result = args.solver.run(&params, args.multistart)?;

    let mut files = Files::new(&args.output);
    files.add(Format::Json, "result.json", || {
        to_json_string(&ResultDocument::new(&result, &config, "profile.csv"))
    });
    files.add(Format::Csv, "profile.csv", || {
        profile_csv_string(&result.profile)
    });
    files.add(Format::Svg, "profile.svg", || {
        let nodes = result
            .profile
            .nodes()
            .into_iter()
            .zip(result.profile.values().iter().copied())
            .collect();
        Plot {
            title: format!(
                "minimizer: a = {}, gamma = {}, area = {}",
                params.a, params.gamma, params.target_area
            ),
            x_label: "x".into(),
            y_label: "f(x)".into(),
            series: vec![
                Series::line("profile", profile_curve(&result.profile)),
                Series::points("nodes", nodes),
            ],
        }
        .render()
    });
    files.write(&args.output)?;

    say!("converged: {}", result.converged);
    say!("iterations: {}", result.iterations);
    say!("J = {}", format_float(result.energy.total));
    say!("lambda = {}", format_float(result.lambda));
    say!(
        "projected gradient norm = {}",
        format_float(result.final_gradient_norm())
    );
    if let Some(d) = &result.diagnostic {
        eprintln!("warning: {d}");
    }
    Ok(if result.converged { 0 } else { NOT_CONVERGED })
}

pub fn residual(args: &ResidualArgs) -> Result<u8> {
    let profile = read_profile_csv_path(&args.profile, args.gamma)
        .with_context(|| format!("reading {}", args.profile.display()))?;
    let admissible = profile.is_admissible();
    if !admissible {
        let [v0, s0, v1, s1] = profile.boundary_dofs();
        eprintln!(
            "warning: profile is not clamped (f(-a) = {v0}, f'(-a) = {s0}, f(a) = {v1}, f'(a) = {s1}); analysis proceeds"
        );
    }
    let (lambda, estimate, source) = match (args.lambda, args.recover) {
        (Some(l), false) => (l, None, LambdaSource::Given),
        (None, true) => {
            let est = recover_lambda(&profile);
            (est.lambda, Some(est), LambdaSource::Recovered)
        }
        _ => bail!("give exactly one of --lambda and --recover"),
    };
    let report = graph_el_residual(&profile, lambda, args.samples as usize)?;

    let mut files = Files::new(&args.output);
    files.add(Format::Json, "residual.json", || {
        to_json_string(&ResidualDocument {
            schema_version: SCHEMA_VERSION,
            profile: args.profile.display().to_string(),
            gamma: args.gamma,
            n_elements: profile.n_elements(),
            admissible,
            lambda_source: source,
            lambda_estimate: estimate,
            report: report.clone(),
        })
    });
    files.add(Format::Csv, "residual.csv", || {
        let mut buf = Vec::new();
        write_residual_csv(&report, &mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii")
    });
    files.add(Format::Svg, "residual.svg", || {
        let pts = report
            .sample_points
            .iter()
            .copied()
            .zip(report.graph_residuals.iter().copied())
            .collect();
        Plot {
            title: format!("Euler-Lagrange residual, lambda = {lambda:.6}"),
            x_label: "x".into(),
            y_label: "residual".into(),
            series: vec![Series::line("residual", pts).with_markers()],
        }
        .render()
    });
    files.write(&args.output)?;

    say!("lambda = {}", format_float(lambda));
    say!("l2_norm = {}", format_float(report.l2_norm));
    say!("max_abs = {}", format_float(report.max_abs));
    let (kl, kr) = report.endpoint_curvatures;
    say!(
        "endpoint curvatures = {}, {}",
        format_float(kl),
        format_float(kr)
    );
    Ok(0)
}

pub fn compare(args: &CompareArgs) -> Result<u8> {
    let params = ProblemParams::new(args.a, args.gamma, args.area)?;
    let config = args.solver.config()?;
    let n = args.solver.elements as usize;
    if args.h_sequence.is_empty() {
        bail!("--h-sequence is empty");
    }
    let report = nonoptimality_report(&params, n, &args.h_sequence, &config)?;

    let mut files = Files::new(&args.output);
    files.add(Format::Json, "compare.json", || {
        to_json_string(&CompareDocument::new(report.clone()))
    });
    files.add(Format::Csv, "compare.csv", || {
        let mut s = String::from("shape,h,n_elements,J,curv_term\n");
        let m = &report.minimizer;
        s += &format!(
            "minimizer,,{},{},{}\n",
            m.n_elements,
            format_float(m.energy.total),
            format_float(m.energy.curv_term)
        );
        if let CircleRow::Feasible { energy, .. } = &report.circle {
            s += &format!(
                "circle,,{n},{},{}\n",
                format_float(energy.total),
                format_float(energy.curv_term)
            );
        }
        for row in &report.polygons {
            s += &format!(
                "polygon,{},{},{},{}\n",
                format_float(row.h),
                row.n_elements,
                format_float(row.energy.total),
                format_float(row.energy.curv_term)
            );
        }
        s
    });
    if args.output.format.contains(&Format::Svg) {
        let minimizer = optimizer::minimize(&params, n, &config)?;
        let mut series = vec![Series::line("minimizer", profile_curve(&minimizer.profile))];
        if matches!(report.circle, CircleRow::Feasible { .. }) {
            let cap = CircleCap::from_area(params.a, params.target_area)?;
            let pts = (0..=400)
                .map(|i| {
                    let x = -params.a + 2.0 * params.a * i as f64 / 400.0;
                    (x, cap.evaluate(x).f)
                })
                .collect();
            series.push(Series::line("circle cap", pts));
        }
        for row in &report.polygons {
            let shape = MollifiedPolygon::for_area(&params, row.h)?;
            let profile = shape.profile(&params, row.n_elements)?;
            series.push(Series::line(
                format!("polygon h={}", row.h),
                profile_curve(&profile),
            ));
        }
        let plot = Plot {
            title: format!(
                "a = {}, gamma = {}, area = {}",
                params.a, params.gamma, params.target_area
            ),
            x_label: "x".into(),
            y_label: "f(x)".into(),
            series,
        };
        files.add(Format::Svg, "compare.svg", || plot.render());
    }
    files.write(&args.output)?;

    say!("{report}");
    Ok(if report.minimizer.converged {
        0
    } else {
        NOT_CONVERGED
    })
}

pub fn sweep(args: &SweepArgs) -> Result<u8> {
    if args.steps < 2 {
        bail!("--steps must be at least 2");
    }
    let base = ProblemParams::new(args.a, args.gamma, args.area)?;
    let steps = args.steps as usize;
    let values: Vec<f64> = (0..steps)
        .map(|i| {
            if i == steps - 1 {
                args.to
            } else {
                args.from + (args.to - args.from) * i as f64 / (steps - 1) as f64
            }
        })
        .collect();
    let runs: Vec<Result<OptimizationResult>> = values
        .par_iter()
        .map(|&v| {
            let params = match args.param {
                SweepParam::Gamma => base.with_gamma(v),
                SweepParam::Area => base.with_area(v),
            };
            params.validate()?;
            args.solver.run(&params, args.multistart)
        })
        .collect();
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;

    let name = match args.param {
        SweepParam::Gamma => "gamma",
        SweepParam::Area => "area",
    };
    let mut files = Files::new(&args.output);
    files.add(Format::Csv, "sweep.csv", || {
        let mut s = String::from("param_value,J,lambda,iterations\n");
        for (v, r) in values.iter().zip(&runs) {
            s += &format!(
                "{},{},{},{}\n",
                format_float(*v),
                format_float(r.energy.total),
                format_float(r.lambda),
                r.iterations
            );
        }
        s
    });
    files.add(Format::Json, "sweep.json", || {
        let rows: Vec<_> = values
            .iter()
            .zip(&runs)
            .map(|(v, r)| {
                serde_json::json!({
                    "param_value": v,
                    "J": r.energy.total,
                    "lambda": r.lambda,
                    "iterations": r.iterations,
                    "converged": r.converged,
                })
            })
            .collect();
        to_json_string(&serde_json::json!({
            "schema_version": SCHEMA_VERSION,
            "param": name,
            "params": base,
            "n_elements": args.solver.elements,
            "rows": rows,
        }))
    });
    files.add(Format::Svg, "sweep.svg", || {
        let pts = values
            .iter()
            .zip(&runs)
            .map(|(v, r)| (*v, r.energy.total))
            .collect();
        Plot {
            title: format!("minimum J against {name}"),
            x_label: name.into(),
            y_label: "J".into(),
            series: vec![Series::line("J", pts).with_markers()],
        }
        .render()
    });
    files.write(&args.output)?;

    say!(
        "{name:>24} {:>24} {:>24} {:>10}",
        "J",
        "lambda",
        "iterations"
    );
    for (v, r) in values.iter().zip(&runs) {
        say!(
            "{:>24} {:>24} {:>24} {:>10}",
            format_float(*v),
            format_float(r.energy.total),
            format_float(r.lambda),
            r.iterations
        );
    }
    let all_converged = runs.iter().all(|r| r.converged);
    Ok(if all_converged { 0 } else { NOT_CONVERGED })
}
