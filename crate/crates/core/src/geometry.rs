//! Graph profiles `y = f(x)` on `[-a, a]` discretized by cubic Hermite
//! elements on a uniform grid.
//!
//! Each node carries a value and a slope. Inside an element the profile is the
//! cubic matching both endpoint pairs, so `f` is globally C¹ and `f''` is
//! piecewise linear. The clamped conditions `f(±a) = f'(±a) = 0` are the four
//! boundary degrees of freedom; the remaining `2 (n - 1)` interior values and
//! slopes are the free variables seen by the energy and the optimizer.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{CompensatedSum, GAUSS5_POINTS, GAUSS5_WEIGHTS};

/// Relative tolerance for accepting coordinates just outside `[-a, a]`.
const DOMAIN_TOL: f64 = 1e-12;

/// The triple `(a, gamma, A0)` defining one problem instance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    /// Half-width of the interface domain.
    pub a: f64,
    /// Curvature-penalty weight (length²).
    pub gamma: f64,
    /// Prescribed enclosed area `∫ f dx`.
    #[serde(rename = "area")]
    pub target_area: f64,
}

impl ProblemParams {
    pub fn new(a: f64, gamma: f64, target_area: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::InvalidParams(format!(
                "half-width a must be positive, got {a}"
            )));
        }
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::InvalidParams(format!(
                "gamma must be positive, got {gamma}"
            )));
        }
        if !target_area.is_finite() {
            return Err(Error::InvalidParams(format!(
                "area must be finite, got {target_area}"
            )));
        }
        Ok(Self {
            a,
            gamma,
            target_area,
        })
    }

    pub fn validate(&self) -> Result<()> {
        Self::new(self.a, self.gamma, self.target_area).map(|_| ())
    }

    /// Parameters of the geometrically similar problem scaled by `s`:
    /// `a -> s a`, `gamma -> s² gamma`, `A0 -> s² A0`.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            a: s * self.a,
            gamma: s * s * self.gamma,
            target_area: s * s * self.target_area,
        }
    }

    pub fn with_area(&self, target_area: f64) -> Self {
        Self {
            target_area,
            ..*self
        }
    }

    pub fn with_gamma(&self, gamma: f64) -> Self {
        Self { gamma, ..*self }
    }
}

/// `f`, `f'` and `f''` at one point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PointValues {
    pub f: f64,
    pub fp: f64,
    pub fpp: f64,
}

/// Shape functions of one element and their x-derivatives at local `t`,
/// ordered as the local DOFs `[v0, d0, v1, d1]`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct HermiteShape {
    pub n: [f64; 4],
    pub d1: [f64; 4],
    pub d2: [f64; 4],
}

impl HermiteShape {
    pub fn at(t: f64, width: f64) -> Self {
        let t2 = t * t;
        let t3 = t2 * t;
        let w = width;
        Self {
            n: [
                2.0 * t3 - 3.0 * t2 + 1.0,
                w * (t3 - 2.0 * t2 + t),
                -2.0 * t3 + 3.0 * t2,
                w * (t3 - t2),
            ],
            d1: [
                (6.0 * t2 - 6.0 * t) / w,
                3.0 * t2 - 4.0 * t + 1.0,
                (-6.0 * t2 + 6.0 * t) / w,
                3.0 * t2 - 2.0 * t,
            ],
            d2: [
                (12.0 * t - 6.0) / (w * w),
                (6.0 * t - 4.0) / w,
                (-12.0 * t + 6.0) / (w * w),
                (6.0 * t - 2.0) / w,
            ],
        }
    }

    pub fn combine(&self, dofs: &[f64; 4]) -> PointValues {
        let dot = |b: &[f64; 4]| b.iter().zip(dofs).map(|(x, y)| x * y).sum::<f64>();
        PointValues {
            f: dot(&self.n),
            fp: dot(&self.d1),
            fpp: dot(&self.d2),
        }
    }
}

/// A cubic Hermite graph profile on a uniform mesh of `[-a, a]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Profile {
    params: ProblemParams,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl Profile {
    /// Builds a profile from per-node values and slopes (`n_elements + 1` each).
    pub fn new(params: ProblemParams, values: Vec<f64>, slopes: Vec<f64>) -> Result<Self> {
        params.validate()?;
        if values.len() < 2 || values.len() != slopes.len() {
            return Err(Error::InvalidProfile(format!(
                "need matching value/slope arrays with at least 2 nodes, got {} and {}",
                values.len(),
                slopes.len()
            )));
        }
        if values.iter().chain(&slopes).any(|v| !v.is_finite()) {
            return Err(Error::InvalidProfile("non-finite nodal data".into()));
        }
        Ok(Self {
            params,
            values,
            slopes,
        })
    }

    /// The zero profile, `f ≡ 0`.
    pub fn flat(params: ProblemParams, n_elements: usize) -> Result<Self> {
        check_elements(n_elements)?;
        Self::new(params, vec![0.0; n_elements + 1], vec![0.0; n_elements + 1])
    }

    /// Hermite interpolant of a function given as `x -> (f(x), f'(x))`.
    pub fn interpolate<F>(params: ProblemParams, n_elements: usize, f: F) -> Result<Self>
    where
        F: Fn(f64) -> (f64, f64),
    {
        check_elements(n_elements)?;
        params.validate()?;
        let (values, slopes) = (0..=n_elements)
            .map(|i| f(node_coordinate(params.a, n_elements, i)))
            .unzip();
        Self::new(params, values, slopes)
    }

    pub fn params(&self) -> &ProblemParams {
        &self.params
    }

    pub fn n_elements(&self) -> usize {
        self.values.len() - 1
    }

    pub fn n_nodes(&self) -> usize {
        self.values.len()
    }

    pub fn element_width(&self) -> f64 {
        2.0 * self.params.a / self.n_elements() as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        node_coordinate(self.params.a, self.n_elements(), i)
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_nodes()).map(|i| self.node(i)).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    /// Same nodal data under different parameters (same `a` required).
    pub fn with_params(&self, params: ProblemParams) -> Result<Self> {
        params.validate()?;
        if params.a != self.params.a {
            return Err(Error::InvalidParams(
                "half-width must match the existing mesh".into(),
            ));
        }
        Ok(Self {
            params,
            ..self.clone()
        })
    }

    /// Boundary DOFs `[f(-a), f'(-a), f(a), f'(a)]`.
    pub fn boundary_dofs(&self) -> [f64; 4] {
        let n = self.n_elements();
        [
            self.values[0],
            self.slopes[0],
            self.values[n],
            self.slopes[n],
        ]
    }

    /// True when all four clamped boundary DOFs are exactly zero.
    pub fn is_admissible(&self) -> bool {
        self.boundary_dofs().iter().all(|&v| v == 0.0)
    }

    pub fn n_free(&self) -> usize {
        2 * (self.n_elements() - 1)
    }

    /// Interior DOFs ordered `[v1, d1, v2, d2, ...]`.
    pub fn free_dofs(&self) -> Vec<f64> {
        (1..self.n_elements())
            .flat_map(|i| [self.values[i], self.slopes[i]])
            .collect()
    }

    pub fn set_free_dofs(&mut self, dofs: &[f64]) {
        assert_eq!(
            dofs.len(),
            self.n_free(),
            "free DOF vector has wrong length"
        );
        for (k, pair) in dofs.chunks_exact(2).enumerate() {
            self.values[k + 1] = pair[0];
            self.slopes[k + 1] = pair[1];
        }
    }

    pub fn with_free_dofs(&self, dofs: &[f64]) -> Self {
        let mut p = self.clone();
        p.set_free_dofs(dofs);
        p
    }

    /// Local DOFs `[v_e, d_e, v_{e+1}, d_{e+1}]` of element `e`.
    pub(crate) fn element_dofs(&self, e: usize) -> [f64; 4] {
        [
            self.values[e],
            self.slopes[e],
            self.values[e + 1],
            self.slopes[e + 1],
        ]
    }

    /// Free-DOF index of local DOF `k` of element `e`, if it is free.
    pub(crate) fn free_index(&self, e: usize, k: usize) -> Option<usize> {
        let node = e + k / 2;
        if node == 0 || node == self.n_elements() {
            None
        } else {
            Some(2 * (node - 1) + k % 2)
        }
    }

    /// Evaluates inside element `e` at local coordinate `t ∈ [0, 1]`.
    pub fn element_eval(&self, e: usize, t: f64) -> PointValues {
        HermiteShape::at(t, self.element_width()).combine(&self.element_dofs(e))
    }

    /// Element index and local coordinate of `x`.
    pub fn locate(&self, x: f64) -> Result<(usize, f64)> {
        let a = self.params.a;
        if !x.is_finite() || x.abs() > a * (1.0 + DOMAIN_TOL) {
            return Err(Error::OutOfDomain { x, a });
        }
        let x = x.clamp(-a, a);
        let n = self.n_elements();
        let u = (x + a) / self.element_width();
        let e = (u.floor() as usize).min(n - 1);
        Ok((e, (u - e as f64).clamp(0.0, 1.0)))
    }

    /// `(f, f', f'')` at `x`. At a node, the element to the right is used
    /// (the left one at `x = a`); `f''` may jump across nodes.
    pub fn evaluate(&self, x: f64) -> Result<PointValues> {
        let (e, t) = self.locate(x)?;
        Ok(self.element_eval(e, t))
    }

    /// Signed curvature `f'' / (1 + f'^2)^{3/2}`; concave-up is positive.
    pub fn curvature(&self, x: f64) -> Result<f64> {
        let p = self.evaluate(x)?;
        Ok(curvature_of(p.fp, p.fpp))
    }

    /// Tangent angle `arctan f'`, in `(-π/2, π/2)`.
    pub fn tangent_angle(&self, x: f64) -> Result<f64> {
        Ok(self.evaluate(x)?.fp.atan())
    }

    /// `∫ sqrt(1 + f'^2) dx` by 5-point Gauss–Legendre per element.
    pub fn arc_length(&self) -> f64 {
        let w = self.element_width();
        let mut acc = CompensatedSum::new();
        for e in 0..self.n_elements() {
            for (t, wq) in GAUSS5_POINTS.iter().zip(GAUSS5_WEIGHTS) {
                let p = self.element_eval(e, *t);
                acc.add(wq * w * (1.0 + p.fp * p.fp).sqrt());
            }
        }
        acc.value()
    }

    /// `∫ f dx`, exact for the piecewise cubic.
    pub fn area(&self) -> f64 {
        let w = self.element_width();
        (0..self.n_elements())
            .map(|e| {
                let [v0, d0, v1, d1] = self.element_dofs(e);
                0.5 * w * (v0 + v1) + w * w * (d0 - d1) / 12.0
            })
            .collect::<CompensatedSum>()
            .value()
    }

    /// Splits every element into `factor` equal pieces. The refined profile
    /// is the same piecewise cubic, so energy and area are unchanged.
    pub fn refine(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::InvalidProfile(
                "refinement factor must be >= 1".into(),
            ));
        }
        let n = self.n_elements();
        let mut values = Vec::with_capacity(n * factor + 1);
        let mut slopes = Vec::with_capacity(n * factor + 1);
        for e in 0..n {
            for j in 0..factor {
                if j == 0 {
                    values.push(self.values[e]);
                    slopes.push(self.slopes[e]);
                } else {
                    let p = self.element_eval(e, j as f64 / factor as f64);
                    values.push(p.f);
                    slopes.push(p.fp);
                }
            }
        }
        values.push(self.values[n]);
        slopes.push(self.slopes[n]);
        Self::new(self.params, values, slopes)
    }

    /// The reflection `x -> -x`.
    pub fn mirrored(&self) -> Self {
        let values = self.values.iter().rev().copied().collect();
        let slopes = self.slopes.iter().rev().map(|s| -s).collect();
        Self {
            params: self.params,
            values,
            slopes,
        }
    }

    /// `f -> s f(x / s)` on the scaled problem (see [`ProblemParams::scaled`]).
    pub fn scaled(&self, s: f64) -> Result<Self> {
        let params = self.params.scaled(s);
        Self::new(
            params,
            self.values.iter().map(|v| s * v).collect(),
            self.slopes.clone(),
        )
    }
}

/// Signed curvature from slope and second derivative.
#[inline]
pub fn curvature_of(fp: f64, fpp: f64) -> f64 {
    fpp / (1.0 + fp * fp).powf(1.5)
}

fn node_coordinate(a: f64, n_elements: usize, i: usize) -> f64 {
    if i == n_elements {
        a
    } else {
        -a + 2.0 * a * i as f64 / n_elements as f64
    }
}

fn check_elements(n_elements: usize) -> Result<()> {
    if n_elements == 0 {
        Err(Error::InvalidProfile(
            "element count must be positive".into(),
        ))
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ProblemParams {
        ProblemParams::new(1.0, 0.1, 0.5).unwrap()
    }

    /// Circle of radius `r` through `(±a, 0)`, concave down.
    fn cap(a: f64, r: f64) -> impl Fn(f64) -> (f64, f64) {
        let yc = -(r * r - a * a).sqrt();
        move |x| {
            let s = (r * r - x * x).sqrt();
            (yc + s, -x / s)
        }
    }

    #[test]
    fn flat_profile_is_identically_zero() {
        let p = Profile::flat(params(), 8).unwrap();
        for x in [-1.0, -0.3, 0.0, 0.77, 1.0] {
            assert_eq!(p.evaluate(x).unwrap(), PointValues::default());
            assert_eq!(p.curvature(x).unwrap(), 0.0);
            assert_eq!(p.tangent_angle(x).unwrap(), 0.0);
        }
        assert!((p.arc_length() - 2.0).abs() < 1e-12);
        assert_eq!(p.area(), 0.0);
        assert!(p.is_admissible());
    }

    #[test]
    fn single_element_reproduces_cubics() {
        let a = 1.3;
        let k = 0.7;
        let pr = ProblemParams::new(a, 0.1, 0.0).unwrap();
        let p = |x: f64| k * (x + a).powi(2) * (x - a);
        let dp = |x: f64| k * (2.0 * (x + a) * (x - a) + (x + a).powi(2));
        let ddp = |x: f64| k * (2.0 * (x - a) + 4.0 * (x + a));
        let prof = Profile::interpolate(pr, 1, |x| (p(x), dp(x))).unwrap();
        for i in 0..=20 {
            let x = -a + 2.0 * a * i as f64 / 20.0;
            let v = prof.evaluate(x).unwrap();
            let scale = 1.0 + p(x).abs();
            assert!((v.f - p(x)).abs() <= 1e-12 * scale);
            assert!((v.fp - dp(x)).abs() <= 1e-12 * (1.0 + dp(x).abs()));
            assert!((v.fpp - ddp(x)).abs() <= 1e-12 * (1.0 + ddp(x).abs()));
        }
    }

    #[test]
    fn out_of_domain_is_rejected() {
        let p = Profile::flat(params(), 4).unwrap();
        assert!(matches!(p.evaluate(1.01), Err(Error::OutOfDomain { .. })));
        assert!(p.evaluate(1.0 + 1e-14).is_ok());
        assert!(p.evaluate(f64::NAN).is_err());
    }

    #[test]
    fn tangent_angle_of_unit_slope() {
        let pr = ProblemParams::new(1.0, 0.1, 0.0).unwrap();
        let line = Profile::interpolate(pr, 4, |x| (x, 1.0)).unwrap();
        let th = line.tangent_angle(0.3).unwrap();
        assert!((th - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
    }

    #[test]
    fn sloped_line_arc_length() {
        let m = 0.37;
        let a = 1.5;
        let pr = ProblemParams::new(a, 0.1, 0.0).unwrap();
        let line = Profile::interpolate(pr, 7, |x| (m * x, m)).unwrap();
        assert!(!line.is_admissible());
        let exact = 2.0 * a * (1.0 + m * m).sqrt();
        assert!((line.arc_length() - exact).abs() < 1e-12);
    }

    #[test]
    fn circle_curvature_at_apex_converges_second_order() {
        let a = 1.0;
        let r = 2.0 * a;
        let pr = ProblemParams::new(a, 0.1, 0.0).unwrap();
        let errs: Vec<f64> = [16, 32, 64]
            .iter()
            .map(|&n| {
                let p = Profile::interpolate(pr, n, cap(a, r)).unwrap();
                (p.curvature(0.0).unwrap() + 1.0 / r).abs() * r
            })
            .collect();
        for w in errs.windows(2) {
            let rate = (w[0] / w[1]).log2();
            assert!((1.8..2.3).contains(&rate), "rate {rate}, errs {errs:?}");
        }
    }

    #[test]
    fn circle_arc_length_converges() {
        let a = 1.0;
        let pr = ProblemParams::new(a, 0.1, 0.0).unwrap();
        let exact = 4.0 * a * std::f64::consts::FRAC_PI_6;
        let p = Profile::interpolate(pr, 128, cap(a, 2.0 * a)).unwrap();
        assert!((p.arc_length() - exact).abs() < 1e-9);
    }

    #[test]
    fn small_bump_curvature_matches_second_derivative() {
        let a = 1.0;
        let eps = 1e-4;
        let k = std::f64::consts::PI / (2.0 * a);
        let pr = ProblemParams::new(a, 0.1, 0.0).unwrap();
        let p = Profile::interpolate(pr, 64, |x| (eps * (k * x).cos(), -eps * k * (k * x).sin()))
            .unwrap();
        let fpp0 = -eps * k * k;
        let kappa = p.curvature(0.0).unwrap();
        assert!((kappa - fpp0).abs() < 1e-3 * fpp0.abs());
    }

    #[test]
    fn area_closed_form_of_quartic_bump() {
        // ∫ c (a² - x²)² dx = 16 c a⁵ / 15; the Hermite interpolant is off by O(h⁴).
        let a = 1.0;
        let c = 0.9375;
        let pr = ProblemParams::new(a, 0.1, 1.0).unwrap();
        let p = Profile::interpolate(pr, 64, |x| {
            (c * (a * a - x * x).powi(2), -4.0 * c * x * (a * a - x * x))
        })
        .unwrap();
        assert!((p.area() - 1.0).abs() < 1e-6);
        let doubled = Profile::new(
            pr,
            p.values().iter().map(|v| 2.0 * v).collect(),
            p.slopes().iter().map(|v| 2.0 * v).collect(),
        )
        .unwrap();
        assert!((doubled.area() - 2.0 * p.area()).abs() < 1e-15);
    }

    #[test]
    fn refine_factor_one_is_identity() {
        let p = Profile::interpolate(params(), 6, |x| (x.sin(), x.cos())).unwrap();
        assert_eq!(p.refine(1).unwrap(), p);
        assert!(p.refine(0).is_err());
    }

    #[test]
    fn free_dof_roundtrip_and_indexing() {
        let p = Profile::interpolate(params(), 5, |x| (x * x, 2.0 * x)).unwrap();
        let dofs = p.free_dofs();
        assert_eq!(dofs.len(), 8);
        assert_eq!(p.with_free_dofs(&dofs), p);
        assert_eq!(p.free_index(0, 0), None);
        assert_eq!(p.free_index(0, 2), Some(0));
        assert_eq!(p.free_index(0, 3), Some(1));
        assert_eq!(p.free_index(4, 2), None);
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(ProblemParams::new(0.0, 0.1, 1.0).is_err());
        assert!(ProblemParams::new(1.0, -0.1, 1.0).is_err());
        assert!(ProblemParams::new(1.0, 0.1, f64::INFINITY).is_err());
        assert!(ProblemParams::new(1.0, 0.1, -3.0).is_ok());
    }
}
