//! Classical interlock shapes scored against the minimizer.
//!
//! Two families are built at the prescribed area:
//!
//! * a circular cap through `(±a, 0)`, whose endpoint slopes are nonzero so it
//!   is not clamped;
//! * the symmetric triangle `H (1 - |x|/a)` with its apex and both base corners
//!   replaced by quintic blends of width `h`. The curvature energy of the blend
//!   grows like `1/h`.

use std::f64::consts::FRAC_PI_2;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::energy::{total_energy, EnergyBreakdown};
use crate::error::{Error, Result};
use crate::euler_lagrange::arclength_el_residual;
use crate::geometry::{PointValues, ProblemParams, Profile};
use crate::optimizer::{minimize, project_to_constraint, OptimizationConfig};

/// Minimum elements across one blend.
pub const ELEMENTS_PER_BLEND: f64 = 8.0;

/// Widths used when the caller does not choose any.
pub const DEFAULT_H_SEQUENCE: [f64; 4] = [0.2, 0.1, 0.05, 0.025];

/// Arc points sampled for the circle residual gap.
const CIRCLE_SAMPLES: usize = 257;

/// `(2φ - sin 2φ) / 2`, the normalized segment area, without cancellation
/// for small `φ`.
fn segment_factor(phi: f64) -> f64 {
    let x = 2.0 * phi;
    if x < 1e-2 {
        let x2 = x * x;
        0.5 * x * x2 * (1.0 / 6.0 - x2 * (1.0 / 120.0 - x2 / 5040.0))
    } else {
        0.5 * (x - x.sin())
    }
}

/// Circular arc of radius `R` through `(±a, 0)`, center below the axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircleCap {
    pub a: f64,
    pub radius: f64,
    /// Half the subtended angle; `sin φ = a / R`.
    pub half_angle: f64,
    /// Depth of the center below the axis, `sqrt(R² - a²)`.
    pub offset: f64,
    pub area: f64,
    pub arc_length: f64,
}

impl CircleCap {
    /// Largest area any cap over `[-a, a]` can enclose (the half disk).
    pub fn max_area(a: f64) -> f64 {
        FRAC_PI_2 * a * a
    }

    pub fn from_half_angle(a: f64, half_angle: f64) -> Self {
        let (s, c) = half_angle.sin_cos();
        let radius = a / s;
        Self {
            a,
            radius,
            half_angle,
            offset: radius * c,
            area: radius * radius * segment_factor(half_angle),
            arc_length: 2.0 * radius * half_angle,
        }
    }

    /// Cap with `R² arcsin(a/R) - a sqrt(R² - a²) = area`, by bisection on the
    /// half angle.
    pub fn from_area(a: f64, area: f64) -> Result<Self> {
        let max = Self::max_area(a);
        if !(area > 0.0 && area <= max) {
            return Err(Error::CapInfeasible { area, max });
        }
        let area_at = |phi: f64| a * a * segment_factor(phi) / phi.sin().powi(2);
        let (mut lo, mut hi) = (0.0_f64, FRAC_PI_2);
        if area >= area_at(hi) {
            return Ok(Self::from_half_angle(a, hi));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if area_at(mid) < area {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(Self::from_half_angle(a, 0.5 * (lo + hi)))
    }

    /// `(1 + γ/R²) · 2R · arcsin(a/R)`.
    pub fn closed_form_energy(&self, gamma: f64) -> f64 {
        (1.0 + gamma / (self.radius * self.radius)) * self.arc_length
    }

    /// Signed curvature (concave down, so negative).
    pub fn curvature(&self) -> f64 {
        -1.0 / self.radius
    }

    /// `|f'(±a)| = a / sqrt(R² - a²)`; infinite for the half disk.
    pub fn endpoint_slope(&self) -> f64 {
        self.a / self.offset
    }

    pub fn evaluate(&self, x: f64) -> PointValues {
        let r2 = self.radius * self.radius;
        let root = (r2 - x * x).sqrt();
        PointValues {
            f: (self.a * self.a - x * x) / (root + self.offset),
            fp: -x / root,
            fpp: -r2 / (root * root * root),
        }
    }
}

/// Boundary-condition record of an interpolated cap.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapFlags {
    /// Slope DOF at `-a`.
    pub slope_left: f64,
    /// Slope DOF at `+a`.
    pub slope_right: f64,
    /// `f(±a) = 0` holds exactly.
    pub values_clamped: bool,
    /// `f'(±a) = 0` holds; false for every cap.
    pub slopes_clamped: bool,
}

/// Hermite interpolant of the area-matched cap.
///
/// The half disk (`A0 = π a²/2`) has vertical end tangents and cannot be
/// interpolated; it is rejected here although [`CircleCap::from_area`]
/// accepts it.
pub fn circle_cap_profile(
    params: &ProblemParams,
    n_elements: usize,
) -> Result<(Profile, CapFlags)> {
    params.validate()?;
    let cap = CircleCap::from_area(params.a, params.target_area)?;
    if !cap.endpoint_slope().is_finite() || cap.offset <= 0.0 {
        return Err(Error::InvalidProfile(
            "half-disk cap has vertical end tangents".into(),
        ));
    }
    let profile = Profile::interpolate(*params, n_elements, |x| {
        let p = cap.evaluate(x);
        (p.f, p.fp)
    })?;
    let [v0, s0, v1, s1] = profile.boundary_dofs();
    let flags = CapFlags {
        slope_left: s0,
        slope_right: s1,
        values_clamped: v0 == 0.0 && v1 == 0.0,
        slopes_clamped: s0 == 0.0 && s1 == 0.0,
    };
    Ok((profile, flags))
}

/// Corner of the underlying triangle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Corner {
    pub x: f64,
    /// Jump of the tangent angle across the corner.
    pub angle: f64,
}

/// Triangle `H (1 - |x|/a)` with quintic blends of width `h` at the apex and
/// one-sided blends at the base corners.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MollifiedPolygon {
    pub a: f64,
    pub apex_height: f64,
    pub h: f64,
}

impl MollifiedPolygon {
    pub fn new(a: f64, apex_height: f64, h: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "half-width a must be positive, got {a}"
            )));
        }
        if !(h > 0.0 && h < 0.25 * a) {
            return Err(Error::InvalidMollification(format!(
                "width h = {h} must lie in (0, a/4) = (0, {})",
                0.25 * a
            )));
        }
        if !apex_height.is_finite() {
            return Err(Error::InvalidMollification(
                "apex height must be finite".into(),
            ));
        }
        Ok(Self { a, apex_height, h })
    }

    /// Apex height giving the blended shape area `A0`.
    pub fn for_area(params: &ProblemParams, h: f64) -> Result<Self> {
        params.validate()?;
        let a = params.a;
        let unit = a - 0.4 * h * h / a;
        Self::new(a, params.target_area / unit, h)
    }

    /// Exact area `H (a - 2h²/(5a))` of the blended shape.
    pub fn area(&self) -> f64 {
        self.apex_height * (self.a - 0.4 * self.h * self.h / self.a)
    }

    pub fn corners(&self) -> [Corner; 3] {
        let theta = (self.apex_height / self.a).atan();
        [
            Corner {
                x: -self.a,
                angle: theta,
            },
            Corner {
                x: 0.0,
                angle: -2.0 * theta,
            },
            Corner {
                x: self.a,
                angle: theta,
            },
        ]
    }

    /// Elements needed to put [`ELEMENTS_PER_BLEND`] elements across a blend.
    pub fn min_elements(&self) -> usize {
        (ELEMENTS_PER_BLEND * 2.0 * self.a / self.h - 1e-9).ceil() as usize
    }

    pub fn evaluate(&self, x: f64) -> PointValues {
        let (a, h) = (self.a, self.h);
        let m = self.apex_height / a;
        let sign = if x < 0.0 { -1.0 } else { 1.0 };
        let ax = x.abs();
        if ax <= h {
            // Even quartic standing in for |x|.
            let q = 3.0 * h / 8.0 + 0.75 * ax * ax / h - ax.powi(4) / (8.0 * h.powi(3));
            let q1 = 1.5 * x / h - 0.5 * x.powi(3) / h.powi(3);
            let q2 = 1.5 / h - 1.5 * x * x / h.powi(3);
            PointValues {
                f: self.apex_height - m * q,
                fp: -m * q1,
                fpp: -m * q2,
            }
        } else if ax >= a - h {
            let t = ((a - ax) / h).max(0.0);
            let g = t.powi(3) * (6.0 - 8.0 * t + 3.0 * t * t);
            let g1 = t * t * (18.0 - 32.0 * t + 15.0 * t * t);
            let g2 = t * (36.0 - 96.0 * t + 60.0 * t * t);
            PointValues {
                f: m * h * g,
                fp: -sign * m * g1,
                fpp: m * g2 / h,
            }
        } else {
            PointValues {
                f: m * (a - ax),
                fp: -sign * m,
                fpp: 0.0,
            }
        }
    }

    /// Hermite interpolant projected onto the area constraint.
    pub fn profile(&self, params: &ProblemParams, n_elements: usize) -> Result<Profile> {
        let need = self.min_elements();
        if n_elements < need {
            return Err(Error::InvalidMollification(format!(
                "{n_elements} elements under-resolve blends of width {}; need at least {need}",
                self.h
            )));
        }
        let raw = Profile::interpolate(*params, n_elements, |x| {
            let p = self.evaluate(x);
            (p.f, p.fp)
        })?;
        project_to_constraint(&raw)
    }
}

/// Blended triangle of width `h` at area `A0`, interpolated on `n_elements`.
pub fn mollified_polygon_profile(
    params: &ProblemParams,
    h: f64,
    n_elements: usize,
) -> Result<Profile> {
    MollifiedPolygon::for_area(params, h)?.profile(params, n_elements)
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Arc-length residual of the constant-curvature state along the cap,
/// sampled uniformly in the tangent angle: `(sup |r|, |λ| (1 - cos φ) / 2)`.
pub fn circle_residual_gap(cap: &CircleCap, lambda: f64, gamma: f64) -> (f64, f64) {
    let phi = cap.half_angle;
    let kappa = cap.curvature();
    let sup = (0..CIRCLE_SAMPLES)
        .map(|i| {
            let theta = -phi + 2.0 * phi * i as f64 / (CIRCLE_SAMPLES - 1) as f64;
            arclength_el_residual(kappa, 0.0, theta, lambda, gamma).abs()
        })
        .fold(0.0, f64::max);
    (sup, 0.5 * lambda.abs() * (1.0 - phi.cos()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimizerRow {
    pub n_elements: usize,
    pub energy: EnergyBreakdown,
    pub lambda: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CircleRow {
    Feasible {
        radius: f64,
        half_angle: f64,
        /// Energy of the interpolated cap on the comparison mesh.
        energy: EnergyBreakdown,
        closed_form_energy: f64,
        endpoint_slope: f64,
        flags: CapFlags,
        /// `sup |r|` of the arc-length residual with the minimizer's `λ`.
        el_sup: f64,
        /// Lower bound `|λ| (1 - cos θ_max) / 2`.
        el_gap_bound: f64,
    },
    Infeasible {
        reason: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolygonRow {
    pub h: f64,
    pub n_elements: usize,
    pub apex_height: f64,
    pub energy: EnergyBreakdown,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonoptimalityReport {
    pub params: ProblemParams,
    pub minimizer: MinimizerRow,
    pub circle: CircleRow,
    pub polygons: Vec<PolygonRow>,
    /// Slope of `log curv_term` against `log h`.
    pub polygon_growth_exponent: Option<f64>,
    /// `(J_circle - J_min) / J_min`, when the cap exists.
    pub circle_margin: Option<f64>,
    /// Smallest `(J_polygon - J_min) / J_min` over the widths.
    pub polygon_margin: Option<f64>,
    pub note: String,
}

impl NonoptimalityReport {
    /// True when the minimizer beats every feasible competitor.
    pub fn minimizer_dominates(&self) -> bool {
        self.circle_margin.is_none_or(|m| m > 0.0) && self.polygon_margin.is_none_or(|m| m > 0.0)
    }
}

/// Minimizer, area-matched cap and blended triangles at equal `(a, γ, A0)`.
///
/// Polygons use `max(n_elements, min_elements(h))` elements so every blend is
/// resolved. An infeasible cap is reported, not raised.
pub fn nonoptimality_report(
    params: &ProblemParams,
    n_elements: usize,
    h_sequence: &[f64],
    config: &OptimizationConfig,
) -> Result<NonoptimalityReport> {
    let run = minimize(params, n_elements, config)?;
    let j_min = run.energy.total;
    let minimizer = MinimizerRow {
        n_elements,
        energy: run.energy,
        lambda: run.lambda,
        iterations: run.iterations,
        converged: run.converged,
    };

    let circle = match circle_cap_profile(params, n_elements) {
        Ok((profile, flags)) => {
            let cap = CircleCap::from_area(params.a, params.target_area)?;
            let (el_sup, el_gap_bound) = circle_residual_gap(&cap, run.lambda, params.gamma);
            CircleRow::Feasible {
                radius: cap.radius,
                half_angle: cap.half_angle,
                energy: total_energy(&profile),
                closed_form_energy: cap.closed_form_energy(params.gamma),
                endpoint_slope: cap.endpoint_slope(),
                flags,
                el_sup,
                el_gap_bound,
            }
        }
        Err(e @ (Error::CapInfeasible { .. } | Error::InvalidProfile(_))) => {
            CircleRow::Infeasible {
                reason: e.to_string(),
            }
        }
        Err(e) => return Err(e),
    };

    let mut polygons = Vec::with_capacity(h_sequence.len());
    for &h in h_sequence {
        let shape = MollifiedPolygon::for_area(params, h)?;
        let n = n_elements.max(shape.min_elements());
        let profile = shape.profile(params, n)?;
        polygons.push(PolygonRow {
            h,
            n_elements: n,
            apex_height: shape.apex_height,
            energy: total_energy(&profile),
        });
    }

    let hs: Vec<f64> = polygons.iter().map(|p| p.h).collect();
    let curv: Vec<f64> = polygons.iter().map(|p| p.energy.curv_term).collect();
    let circle_margin = match &circle {
        CircleRow::Feasible { energy, .. } => Some((energy.total - j_min) / j_min),
        CircleRow::Infeasible { .. } => None,
    };
    let polygon_margin = polygons
        .iter()
        .map(|p| (p.energy.total - j_min) / j_min)
        .reduce(f64::min);

    Ok(NonoptimalityReport {
        params: *params,
        minimizer,
        circle,
        polygons,
        polygon_growth_exponent: loglog_slope(&hs, &curv),
        circle_margin,
        polygon_margin,
        note: "circle: arc through (-a, 0) and (a, 0) with radius chosen to match the area; \
               its end slopes are nonzero, so it violates the clamped conditions. \
               polygon: symmetric triangle, corners blended by quintics of width h."
            .into(),
    })
}

impl fmt::Display for NonoptimalityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = &self.params;
        writeln!(
            f,
            "a = {}, gamma = {}, area = {}",
            p.a, p.gamma, p.target_area
        )?;
        writeln!(
            f,
            "{:<22} {:>8} {:>18} {:>18} {:>12}",
            "shape", "elements", "J", "curv_term", "margin"
        )?;
        let m = &self.minimizer;
        writeln!(
            f,
            "{:<22} {:>8} {:>18.12} {:>18.12} {:>12}",
            "minimizer", m.n_elements, m.energy.total, m.energy.curv_term, "-"
        )?;
        match &self.circle {
            CircleRow::Feasible { radius, energy, .. } => writeln!(
                f,
                "{:<22} {:>8} {:>18.12} {:>18.12} {:>12.4e}",
                format!("circle R={radius:.6}"),
                m.n_elements,
                energy.total,
                energy.curv_term,
                self.circle_margin.unwrap_or(f64::NAN)
            )?,
            CircleRow::Infeasible { .. } => writeln!(
                f,
                "{:<22} {:>8} {:>18} {:>18} {:>12}",
                "circle", "-", "infeasible", "-", "-"
            )?,
        }
        for row in &self.polygons {
            writeln!(
                f,
                "{:<22} {:>8} {:>18.12} {:>18.12} {:>12.4e}",
                format!("polygon h={}", row.h),
                row.n_elements,
                row.energy.total,
                row.energy.curv_term,
                (row.energy.total - m.energy.total) / m.energy.total
            )?;
        }
        writeln!(f, "lambda = {:.12}", m.lambda)?;
        if let CircleRow::Feasible {
            el_sup,
            el_gap_bound,
            endpoint_slope,
            ..
        } = &self.circle
        {
            writeln!(f, "circle |f'(±a)| = {endpoint_slope:.6e} (not clamped)")?;
            writeln!(
                f,
                "circle residual sup = {el_sup:.6e}, bound = {el_gap_bound:.6e}"
            )?;
        }
        match self.polygon_growth_exponent {
            Some(s) => writeln!(f, "polygon growth exponent = {s:.4}")?,
            None => writeln!(f, "polygon growth exponent = n/a")?,
        }
        let verdict = if self.minimizer_dominates() {
            "yes"
        } else {
            "no"
        };
        write!(f, "minimizer strictly lowest: {verdict}")
    }
}
