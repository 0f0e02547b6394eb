//! A posteriori checks of the necessary optimality conditions.
//!
//! The graph form of the Euler–Lagrange equation is evaluated in nested form,
//!
//! ```text
//! d²/dx² [ M ] - d/dx [ N ] + λ = 0,
//! M = 2γ f'' / (1+f'²)^{5/2},
//! N = f' / sqrt(1+f'²) - 5γ f''² f' / (1+f'²)^{7/2},
//! ```
//!
//! with the outer derivatives taken by fourth-order central differences of
//! the analytically evaluated `M` and `N` (step: element width / 16).
//!
//! A cubic Hermite profile has `f'''' ≡ 0` inside each element and a jump in
//! `f''` at every node, so the strong residual of the raw piecewise cubic does
//! not converge under refinement. Residuals are therefore evaluated on a local
//! degree-7 interpolant of the nodal values at the eight nodes nearest to the
//! sample's element. Nodal slopes are not used: their discretization error is
//! not the derivative of the value error, and interpolating both amplifies
//! the mismatch in the fourth derivative. The endpoint curvature check uses
//! the raw profile.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{curvature_of, Profile};
use crate::linalg::solve_dense;
use crate::quadrature::gauss_legendre;

/// Nodes (and polynomial degree + 1) of the local reconstruction.
const RECON_NODES: usize = 8;

/// Minimum number of residual samples.
pub const MIN_SAMPLES: usize = 16;

/// Finite-difference step as a fraction of the element width.
const FD_FRACTION: f64 = 1.0 / 16.0;

/// Samples closer than this (in element units) to a node are moved inward so
/// the ±2-step stencil stays inside one element.
const EDGE_MARGIN: f64 = 2.0 * FD_FRACTION;

/// `∂ρ/∂f''`: the coefficient of `φ''` in the first variation.
#[inline]
pub fn bending_moment(fp: f64, fpp: f64, gamma: f64) -> f64 {
    2.0 * gamma * fpp / (1.0 + fp * fp).powf(2.5)
}

/// `∂ρ/∂f'`: the coefficient of `φ'` in the first variation.
#[inline]
pub fn axial_flux(fp: f64, fpp: f64, gamma: f64) -> f64 {
    let s = 1.0 + fp * fp;
    fp / s.sqrt() - 5.0 * gamma * fpp * fpp * fp / s.powf(3.5)
}

/// Arc-length form `γ (2 κ_ss + κ³) - κ + λ cos θ`.
#[inline]
pub fn arclength_el_residual(
    kappa: f64,
    d2kappa_ds2: f64,
    theta: f64,
    lambda: f64,
    gamma: f64,
) -> f64 {
    gamma * (2.0 * d2kappa_ds2 + kappa.powi(3)) - kappa + lambda * theta.cos()
}

/// Sampled residual of the graph-form equation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ELResidualReport {
    pub sample_points: Vec<f64>,
    /// Quadrature weights attached to the samples; `l2_norm² = Σ w r²`.
    pub sample_weights: Vec<f64>,
    pub graph_residuals: Vec<f64>,
    pub l2_norm: f64,
    pub max_abs: f64,
    /// `(κ(-a), κ(a))` of the raw profile.
    pub endpoint_curvatures: (f64, f64),
    pub lambda_used: f64,
    /// Indices of samples moved away from element edges.
    pub relocated: Vec<usize>,
}

/// Local degree-7 polynomial in `u = (x - center) / width`.
#[derive(Clone, Debug)]
struct Reconstruction {
    center: f64,
    width: f64,
    coeffs: [f64; RECON_NODES],
}

impl Reconstruction {
    fn around_element(profile: &Profile, element: usize) -> Result<Self> {
        let n = profile.n_elements();
        let first = element.saturating_sub(3).min(n + 1 - RECON_NODES);
        let width = profile.element_width();
        let center = 0.5 * (profile.node(first) + profile.node(first + RECON_NODES - 1));
        let mut rows = [[0.0; RECON_NODES]; RECON_NODES];
        let mut rhs = [0.0; RECON_NODES];
        for j in 0..RECON_NODES {
            let u = j as f64 - 0.5 * (RECON_NODES - 1) as f64;
            for k in 0..RECON_NODES {
                rows[j][k] = u.powi(k as i32);
            }
            rhs[j] = profile.values()[first + j];
        }
        let coeffs = solve_dense(rows, rhs)?;
        Ok(Self {
            center,
            width,
            coeffs,
        })
    }

    /// `(f', f'')` at `x`.
    fn slope_and_second(&self, x: f64) -> (f64, f64) {
        let u = (x - self.center) / self.width;
        let mut d1 = 0.0;
        let mut d2 = 0.0;
        for k in (1..RECON_NODES).rev() {
            d1 = d1 * u + k as f64 * self.coeffs[k];
        }
        for k in (2..RECON_NODES).rev() {
            d2 = d2 * u + (k * (k - 1)) as f64 * self.coeffs[k];
        }
        (d1 / self.width, d2 / (self.width * self.width))
    }
}

fn d1_central(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
}

fn d2_central(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 16.0 * f(x + h) - 30.0 * f(x) + 16.0 * f(x - h) - f(x - 2.0 * h))
        / (12.0 * h * h)
}

/// Sample layout shared by both residual forms: Gauss–Legendre nodes on
/// `[-a, a]`, nudged off element edges.
struct Samples {
    points: Vec<f64>,
    weights: Vec<f64>,
    elements: Vec<usize>,
    relocated: Vec<usize>,
}

fn layout_samples(profile: &Profile, sample_count: usize) -> Result<Samples> {
    if sample_count < MIN_SAMPLES {
        return Err(Error::InvalidProfile(format!(
            "at least {MIN_SAMPLES} residual samples required, got {sample_count}"
        )));
    }
    if profile.n_elements() + 1 < RECON_NODES {
        return Err(Error::InvalidProfile(format!(
            "residual reconstruction needs at least {} elements",
            RECON_NODES - 1
        )));
    }
    let a = profile.params().a;
    let w = profile.element_width();
    let (nodes, weights) = gauss_legendre(sample_count);
    let mut samples = Samples {
        points: Vec::with_capacity(sample_count),
        weights: weights.iter().map(|v| v * a).collect(),
        elements: Vec::with_capacity(sample_count),
        relocated: Vec::new(),
    };
    for (i, xi) in nodes.iter().enumerate() {
        let (e, t) = profile.locate(a * xi)?;
        let t_safe = t.clamp(EDGE_MARGIN, 1.0 - EDGE_MARGIN);
        if t_safe != t {
            samples.relocated.push(i);
        }
        samples.points.push(profile.node(e) + t_safe * w);
        samples.elements.push(e);
    }
    Ok(samples)
}

fn reconstructions(profile: &Profile, elements: &[usize]) -> Result<Vec<Option<Reconstruction>>> {
    let mut cache: Vec<Option<Reconstruction>> = vec![None; profile.n_elements()];
    for &e in elements {
        if cache[e].is_none() {
            cache[e] = Some(Reconstruction::around_element(profile, e)?);
        }
    }
    Ok(cache)
}

/// Graph-form residual at `sample_count` Gauss–Legendre points.
pub fn graph_el_residual(
    profile: &Profile,
    lambda: f64,
    sample_count: usize,
) -> Result<ELResidualReport> {
    let gamma = profile.params().gamma;
    let h = FD_FRACTION * profile.element_width();
    let samples = layout_samples(profile, sample_count)?;
    let cache = reconstructions(profile, &samples.elements)?;

    let residuals: Vec<f64> = samples
        .points
        .iter()
        .zip(&samples.elements)
        .map(|(&x, &e)| {
            let rec = cache[e].as_ref().expect("reconstruction cached");
            let moment = |y: f64| {
                let (fp, fpp) = rec.slope_and_second(y);
                bending_moment(fp, fpp, gamma)
            };
            let flux = |y: f64| {
                let (fp, fpp) = rec.slope_and_second(y);
                axial_flux(fp, fpp, gamma)
            };
            d2_central(moment, x, h) - d1_central(flux, x, h) + lambda
        })
        .collect();

    let l2_norm = samples
        .weights
        .iter()
        .zip(&residuals)
        .map(|(w, r)| w * r * r)
        .sum::<f64>()
        .sqrt();
    let max_abs = residuals.iter().fold(0.0_f64, |m, r| m.max(r.abs()));
    Ok(ELResidualReport {
        sample_points: samples.points,
        sample_weights: samples.weights,
        graph_residuals: residuals,
        l2_norm,
        max_abs,
        endpoint_curvatures: natural_bc_check(profile),
        lambda_used: lambda,
        relocated: samples.relocated,
    })
}

/// Arc-length quantities at one sample of a discrete profile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArcLengthSample {
    pub x: f64,
    pub kappa: f64,
    pub d2kappa_ds2: f64,
    pub theta: f64,
    pub residual: f64,
}

/// Evaluates the arc-length form on a discrete profile at the same samples as
/// [`graph_el_residual`]. `κ_ss = κ_xx / s - κ_x f' f'' / s²` with
/// `s = 1 + f'²`, derivatives of `κ` by the same in-element differences.
pub fn arclength_el_samples(
    profile: &Profile,
    lambda: f64,
    sample_count: usize,
) -> Result<Vec<ArcLengthSample>> {
    let gamma = profile.params().gamma;
    let h = FD_FRACTION * profile.element_width();
    let samples = layout_samples(profile, sample_count)?;
    let cache = reconstructions(profile, &samples.elements)?;
    Ok(samples
        .points
        .iter()
        .zip(&samples.elements)
        .map(|(&x, &e)| {
            let rec = cache[e].as_ref().expect("reconstruction cached");
            let kappa_at = |y: f64| {
                let (fp, fpp) = rec.slope_and_second(y);
                curvature_of(fp, fpp)
            };
            let (fp, fpp) = rec.slope_and_second(x);
            let s = 1.0 + fp * fp;
            let kx = d1_central(kappa_at, x, h);
            let kxx = d2_central(kappa_at, x, h);
            let kss = kxx / s - kx * fp * fpp / (s * s);
            let kappa = curvature_of(fp, fpp);
            let theta = fp.atan();
            ArcLengthSample {
                x,
                kappa,
                d2kappa_ds2: kss,
                theta,
                residual: arclength_el_residual(kappa, kss, theta, lambda, gamma),
            }
        })
        .collect())
}

/// `(κ(-a), κ(a))`, evaluated just inside the boundary elements.
pub fn natural_bc_check(profile: &Profile) -> (f64, f64) {
    let a = profile.params().a;
    let inset = a - 1e-9 * a;
    let k = |x: f64| profile.curvature(x).expect("point inside the domain");
    (k(-inset), k(inset))
}
