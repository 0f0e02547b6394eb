//! The curvature-penalized stress functional
//!
//! ```text
//! J[f] = ∫ (1 + γ κ²) sqrt(1 + f'²) dx
//!      = ∫ sqrt(1 + f'²) dx + γ ∫ f''² / (1 + f'²)^{5/2} dx
//! ```
//!
//! and the area constraint `G[f] = ∫ f dx - A0`, together with their exact
//! gradients with respect to the free nodal DOFs of a [`Profile`].
//!
//! Gradients differentiate the discrete quadrature sum itself, so they are
//! exact for the objective the optimizer actually sees.

use serde::{Deserialize, Serialize};

use crate::geometry::{HermiteShape, Profile};
use crate::quadrature::{CompensatedSum, GAUSS5_POINTS, GAUSS5_WEIGHTS};

/// Stress amplification `(1 + γ κ²)` times the arc-length factor `ds/dx`.
#[inline]
pub fn stress_density(fp: f64, fpp: f64, gamma: f64) -> f64 {
    let s = 1.0 + fp * fp;
    let kappa = fpp / s.powf(1.5);
    (1.0 + gamma * kappa * kappa) * s.sqrt()
}

/// The same density in split form `sqrt(1+f'²) + γ f''² (1+f'²)^{-5/2}`.
#[inline]
pub fn stress_density_split(fp: f64, fpp: f64, gamma: f64) -> f64 {
    let (arc, curv) = density_terms(fp, fpp, gamma);
    arc + curv
}

#[inline]
fn density_terms(fp: f64, fpp: f64, gamma: f64) -> (f64, f64) {
    let s = 1.0 + fp * fp;
    let r = s.sqrt();
    (r, gamma * fpp * fpp / (s * s * r))
}

/// Partial derivatives `(∂ρ/∂f', ∂ρ/∂f'')` of the density.
#[inline]
pub fn density_partials(fp: f64, fpp: f64, gamma: f64) -> (f64, f64) {
    let s = 1.0 + fp * fp;
    let r = s.sqrt();
    let s52 = s * s * r;
    let d_fp = fp / r - 5.0 * gamma * fpp * fpp * fp / (s52 * s);
    let d_fpp = 2.0 * gamma * fpp / s52;
    (d_fp, d_fpp)
}

/// Arc-length and curvature contributions to `J`, plus the enclosed area.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub arc_term: f64,
    pub curv_term: f64,
    pub total: f64,
    pub area: f64,
}

/// Gradient of a scalar functional with respect to the free DOFs, ordered
/// like [`Profile::free_dofs`].
#[derive(Clone, Debug, PartialEq)]
pub struct DofGradient(pub Vec<f64>);

impl DofGradient {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        self.0.iter().zip(other).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(&self.0).sqrt()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Evaluates `J` and its breakdown by 5-point Gauss–Legendre per element.
/// Admissibility is not required.
pub fn total_energy(profile: &Profile) -> EnergyBreakdown {
    let gamma = profile.params().gamma;
    let w = profile.element_width();
    let mut arc = CompensatedSum::new();
    let mut curv = CompensatedSum::new();
    for e in 0..profile.n_elements() {
        for (t, wq) in GAUSS5_POINTS.iter().zip(GAUSS5_WEIGHTS) {
            let p = profile.element_eval(e, *t);
            let (ra, rc) = density_terms(p.fp, p.fpp, gamma);
            arc.add(wq * w * ra);
            curv.add(wq * w * rc);
        }
    }
    let arc_term = arc.value();
    let curv_term = curv.value();
    EnergyBreakdown {
        arc_term,
        curv_term,
        total: arc_term + curv_term,
        area: profile.area(),
    }
}

/// `J[to] - J[from]` for two profiles on the same mesh, computed from the DOF
/// differences so that the rounding error is relative to the change itself
/// rather than to `J`.
pub fn energy_difference(from: &Profile, to: &Profile) -> f64 {
    debug_assert_eq!(from.n_elements(), to.n_elements());
    let gamma = from.params().gamma;
    let w = from.element_width();
    let mut acc = CompensatedSum::new();
    for e in 0..from.n_elements() {
        let d0 = from.element_dofs(e);
        let d1 = to.element_dofs(e);
        let delta = [d1[0] - d0[0], d1[1] - d0[1], d1[2] - d0[2], d1[3] - d0[3]];
        if delta.iter().all(|&d| d == 0.0) {
            continue;
        }
        for (t, wq) in GAUSS5_POINTS.iter().zip(GAUSS5_WEIGHTS) {
            let shape = HermiteShape::at(*t, w);
            let p = shape.combine(&d0);
            let dp = shape.combine(&delta);
            acc.add(wq * w * density_change(p.fp, p.fpp, dp.fp, dp.fpp, gamma));
        }
    }
    acc.value()
}

/// `ρ(fp + dfp, fpp + dfpp) - ρ(fp, fpp)` without subtracting nearly equal
/// quantities.
fn density_change(fp: f64, fpp: f64, dfp: f64, dfpp: f64, gamma: f64) -> f64 {
    let s0 = 1.0 + fp * fp;
    let s1 = 1.0 + (fp + dfp) * (fp + dfp);
    let ds = dfp * (2.0 * fp + dfp);
    let (r0, r1) = (s0.sqrt(), s1.sqrt());
    let dr = ds / (r0 + r1);
    let arc = dr;
    // r1⁵ - r0⁵ = (r1 - r0)(r1⁴ + r1³r0 + r1²r0² + r1r0³ + r0⁴)
    let r05 = s0 * s0 * r0;
    let r15 = s1 * s1 * r1;
    let d5 = dr * (s1 * s1 + s1 * r1 * r0 + s1 * s0 + r1 * r0 * s0 + s0 * s0);
    let dfpp2 = dfpp * (2.0 * fpp + dfpp);
    let curv = gamma * (dfpp2 / r15 - fpp * fpp * d5 / (r05 * r15));
    arc + curv
}

/// Exact gradient of the quadrature-evaluated `J` with respect to the free DOFs.
pub fn energy_gradient(profile: &Profile) -> DofGradient {
    let gamma = profile.params().gamma;
    let w = profile.element_width();
    let mut grad = vec![0.0; profile.n_free()];
    for e in 0..profile.n_elements() {
        let dofs = profile.element_dofs(e);
        let mut local = [0.0; 4];
        for (t, wq) in GAUSS5_POINTS.iter().zip(GAUSS5_WEIGHTS) {
            let shape = HermiteShape::at(*t, w);
            let p = shape.combine(&dofs);
            let (d_fp, d_fpp) = density_partials(p.fp, p.fpp, gamma);
            for k in 0..4 {
                local[k] += wq * w * (d_fp * shape.d1[k] + d_fpp * shape.d2[k]);
            }
        }
        for (k, value) in local.iter().enumerate() {
            if let Some(i) = profile.free_index(e, k) {
                grad[i] += value;
            }
        }
    }
    DofGradient(grad)
}

/// `G[f] = ∫ f dx - A0`.
pub fn constraint_value(profile: &Profile) -> f64 {
    profile.area() - profile.params().target_area
}

/// Gradient of `G`: the integrals of the free Hermite basis functions. It does
/// not depend on the nodal data. Interior slope entries vanish because the
/// left and right element contributions `±w²/12` cancel.
pub fn constraint_gradient(profile: &Profile) -> DofGradient {
    let w = profile.element_width();
    let mut grad = vec![0.0; profile.n_free()];
    let local = [0.5 * w, w * w / 12.0, 0.5 * w, -w * w / 12.0];
    for e in 0..profile.n_elements() {
        for (k, value) in local.iter().enumerate() {
            if let Some(i) = profile.free_index(e, k) {
                grad[i] += value;
            }
        }
    }
    DofGradient(grad)
}
