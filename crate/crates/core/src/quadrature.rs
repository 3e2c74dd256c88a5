//! Tensor-product Gauss-Legendre integration over the observation square.
//!
//! Each axis is split into equal panels in a parameter `t`, and a fixed-order
//! Gauss-Legendre rule is applied per panel. The parameter is either the
//! coordinate itself or, for integrands that peak sharply at the foot of the
//! source, `t = asinh((y - c) / s)`. The second map spreads a peak of width `s`
//! over many panels without local adaptivity, so refinement stays a uniform
//! doubling of panels and results are reproducible bit for bit.
//!
//! Panel rows are evaluated in parallel and reduced in fixed order.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{CrbError, Result};

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// `n`-point rule, exact for polynomials of degree `2n - 1`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Tricomi initial guess, then Newton on P_n
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d.is_finite() {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Node counts, panel layout and stopping rule for [`integrate_region`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    /// Gauss-Legendre order per panel and axis.
    pub nodes_per_panel: usize,
    /// Initial number of panels per axis.
    pub panels_per_axis: usize,
    /// Stop once two successive estimates agree to this relative tolerance.
    pub target_rel_tol: f64,
    /// Maximum number of panel doublings.
    pub max_refinements: usize,
    /// Use the sinh-graded map toward the source foot point where the caller
    /// supplies one (field-based integrals do).
    pub graded: bool,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            nodes_per_panel: 16,
            panels_per_axis: 4,
            target_rel_tol: 1e-10,
            max_refinements: 8,
            graded: true,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nodes_per_panel < 2 {
            return Err(CrbError::InvalidConfig(format!(
                "nodes_per_panel must be at least 2, got {}",
                self.nodes_per_panel
            )));
        }
        if self.panels_per_axis < 1 {
            return Err(CrbError::InvalidConfig(
                "panels_per_axis must be at least 1".into(),
            ));
        }
        if !(self.target_rel_tol > 0.0) {
            return Err(CrbError::InvalidConfig(format!(
                "target_rel_tol must be positive, got {}",
                self.target_rel_tol
            )));
        }
        if self.max_refinements < 1 {
            return Err(CrbError::InvalidConfig(
                "max_refinements must be at least 1 to estimate the error".into(),
            ));
        }
        Ok(())
    }
}

/// Integral value with its refinement diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegralResult<T> {
    pub value: T,
    /// `|last - previous| / |last|` between the final two panel layouts.
    pub est_rel_error: f64,
    /// Panels per axis used for the final estimate.
    pub panels_used: usize,
    pub converged: bool,
    /// Relative change after each doubling, oldest first.
    pub error_history: Vec<f64>,
}

impl<T> IntegralResult<T> {
    pub fn map<U>(self, f: impl FnOnce(T) -> U) -> IntegralResult<U> {
        IntegralResult {
            value: f(self.value),
            est_rel_error: self.est_rel_error,
            panels_used: self.panels_used,
            converged: self.converged,
            error_history: self.error_history,
        }
    }
}

/// Map from the panel parameter to one coordinate axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AxisMap {
    /// `y = t` on `[lo, hi]`.
    Linear { lo: f64, hi: f64 },
    /// `y = center + scale · sinh(t)` on `[asinh((lo - c)/s), asinh((hi - c)/s)]`.
    Sinh { center: f64, scale: f64, lo: f64, hi: f64 },
}

impl AxisMap {
    pub fn linear(lo: f64, hi: f64) -> Self {
        AxisMap::Linear { lo, hi }
    }

    pub fn sinh(lo: f64, hi: f64, center: f64, scale: f64) -> Self {
        AxisMap::Sinh {
            center,
            scale,
            lo,
            hi,
        }
    }

    fn param_range(&self) -> (f64, f64) {
        match *self {
            AxisMap::Linear { lo, hi } => (lo, hi),
            AxisMap::Sinh {
                center,
                scale,
                lo,
                hi,
            } => (((lo - center) / scale).asinh(), ((hi - center) / scale).asinh()),
        }
    }

    /// Coordinate and `dy/dt` at parameter `t`.
    #[inline]
    fn map(&self, t: f64) -> (f64, f64) {
        match *self {
            AxisMap::Linear { .. } => (t, 1.0),
            AxisMap::Sinh { center, scale, .. } => (center + scale * t.sinh(), scale * t.cosh()),
        }
    }

    /// Mapped nodes and weights, grouped by panel.
    fn panel_nodes(&self, panels: usize, rule: &GaussLegendre) -> Vec<Vec<(f64, f64)>> {
        let (a, b) = self.param_range();
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|p| {
                let lo = a + p as f64 * h;
                let mid = lo + 0.5 * h;
                rule.nodes()
                    .iter()
                    .zip(rule.weights())
                    .map(|(&x, &w)| {
                        let (y, jac) = self.map(mid + 0.5 * h * x);
                        (y, 0.5 * h * w * jac)
                    })
                    .collect()
            })
            .collect()
    }
}

/// Rectangular integration domain described by one map per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub y: AxisMap,
    pub z: AxisMap,
}

impl Region {
    /// `[-h, h]²` with linear maps.
    pub fn square(half_side: f64) -> Self {
        Self {
            y: AxisMap::linear(-half_side, half_side),
            z: AxisMap::linear(-half_side, half_side),
        }
    }

    /// `[-h, h]²` with both axes sinh-graded around `focus` at length `scale`.
    pub fn square_focused(half_side: f64, focus: (f64, f64), scale: f64) -> Self {
        Self {
            y: AxisMap::sinh(-half_side, half_side, focus.0, scale),
            z: AxisMap::sinh(-half_side, half_side, focus.1, scale),
        }
    }
}

/// Integrates a vector-valued function over `region`, doubling the number of
/// panels until successive estimates agree within `cfg.target_rel_tol`
/// (measured in the max norm of the vector) or `cfg.max_refinements` is hit.
pub fn integrate_region<const N: usize, F>(
    f: F,
    region: &Region,
    cfg: &QuadratureConfig,
) -> Result<IntegralResult<[f64; N]>>
where
    F: Fn(f64, f64) -> [f64; N] + Sync,
{
    cfg.validate()?;
    let rule = GaussLegendre::new(cfg.nodes_per_panel);
    let mut panels = cfg.panels_per_axis;
    let mut prev = tensor_sum(&f, region, panels, &rule)?;
    let mut history = Vec::new();
    for _ in 0..cfg.max_refinements {
        panels *= 2;
        let cur = tensor_sum(&f, region, panels, &rule)?;
        let err = rel_change(&cur, &prev);
        history.push(err);
        if err <= cfg.target_rel_tol {
            return Ok(IntegralResult {
                value: cur,
                est_rel_error: err,
                panels_used: panels,
                converged: true,
                error_history: history,
            });
        }
        prev = cur;
    }
    let err = *history.last().unwrap_or(&f64::INFINITY);
    log::warn!(
        "quadrature did not reach {:.1e} after {} refinements (estimate {err:.2e})",
        cfg.target_rel_tol,
        cfg.max_refinements
    );
    Ok(IntegralResult {
        value: prev,
        est_rel_error: err,
        panels_used: panels,
        converged: false,
        error_history: history,
    })
}

/// Integrates `f` over `[-h, h]²` with linear maps.
pub fn integrate_2d<F>(f: F, half_side: f64, cfg: &QuadratureConfig) -> Result<IntegralResult<f64>>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    integrate_region(|y, z| [f(y, z)], &Region::square(half_side), cfg).map(|r| r.map(|v| v[0]))
}

/// Complex integrand, integrated componentwise.
pub fn integrate_2d_complex<F>(
    f: F,
    half_side: f64,
    cfg: &QuadratureConfig,
) -> Result<IntegralResult<Complex64>>
where
    F: Fn(f64, f64) -> Complex64 + Sync,
{
    integrate_region(
        |y, z| {
            let v = f(y, z);
            [v.re, v.im]
        },
        &Region::square(half_side),
        cfg,
    )
    .map(|r| r.map(|v| Complex64::new(v[0], v[1])))
}

fn tensor_sum<const N: usize, F>(
    f: &F,
    region: &Region,
    panels: usize,
    rule: &GaussLegendre,
) -> Result<[f64; N]>
where
    F: Fn(f64, f64) -> [f64; N] + Sync,
{
    let y_panels = region.y.panel_nodes(panels, rule);
    let z_nodes: Vec<(f64, f64)> = region
        .z
        .panel_nodes(panels, rule)
        .into_iter()
        .flatten()
        .collect();
    let rows: Vec<Result<[f64; N]>> = y_panels
        .par_iter()
        .map(|ys| {
            let mut acc = [0.0; N];
            for &(y, wy) in ys {
                let mut row = [0.0; N];
                for &(z, wz) in &z_nodes {
                    let v = f(y, z);
                    if v.iter().any(|x| !x.is_finite()) {
                        return Err(CrbError::NonFinite { y, z });
                    }
                    for (r, x) in row.iter_mut().zip(v) {
                        *r += wz * x;
                    }
                }
                for (a, r) in acc.iter_mut().zip(row) {
                    *a += wy * r;
                }
            }
            Ok(acc)
        })
        .collect();
    let mut total = [0.0; N];
    for row in rows {
        for (t, x) in total.iter_mut().zip(row?) {
            *t += x;
        }
    }
    Ok(total)
}

fn rel_change<const N: usize>(cur: &[f64; N], prev: &[f64; N]) -> f64 {
    let diff = cur
        .iter()
        .zip(prev)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let scale = cur.iter().map(|a| a.abs()).fold(0.0, f64::max);
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn single_panel(n: usize) -> QuadratureConfig {
        QuadratureConfig {
            nodes_per_panel: n,
            panels_per_axis: 1,
            target_rel_tol: 1e-12,
            max_refinements: 1,
            graded: false,
        }
    }

    #[test]
    fn gauss_legendre_weights_sum_to_two() {
        for n in [2, 3, 5, 8, 16, 31] {
            let r = GaussLegendre::new(n);
            let s: f64 = r.weights().iter().sum();
            assert!((s - 2.0).abs() < 1e-14, "n = {n}: {s}");
            assert!(r.nodes().windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn gauss_legendre_known_nodes() {
        let r = GaussLegendre::new(2);
        assert!((r.nodes()[1] - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        let r = GaussLegendre::new(3);
        assert!((r.nodes()[2] - 0.6f64.sqrt()).abs() < 1e-15);
        assert!((r.weights()[1] - 8.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn constant_over_square() {
        for cfg in [QuadratureConfig::default(), single_panel(2), single_panel(7)] {
            let r = integrate_2d(|_, _| 1.0, 1.5, &cfg).unwrap();
            assert!((r.value - 9.0).abs() < 1e-13, "{}", r.value);
            assert!(r.converged);
        }
    }

    #[test]
    fn quadratic_over_unit_square() {
        let r = integrate_2d(|y, _| y * y, 0.5, &single_panel(2)).unwrap();
        assert!((r.value - 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn exact_for_degree_two_n_minus_one() {
        for n in [2usize, 4, 6, 9] {
            let d = (2 * n - 1) as i32;
            // y^d z^0 + y^(d-1) z + y^(d-1) (even part) on [-1, 1]²
            let f = |y: f64, z: f64| y.powi(d - 1) + y.powi(d - 1) * z.powi(1) + z.powi(d);
            let exact = 2.0 * 2.0 / d as f64;
            let r = integrate_2d(f, 1.0, &single_panel(n)).unwrap();
            assert!((r.value - exact).abs() < 1e-13, "n = {n}: {} vs {exact}", r.value);
        }
    }

    #[test]
    fn sinh_map_integrates_peaked_function() {
        // ∫∫ a / (a² + y² + z²)^{3/2} over the plane is 2π
        let a = 0.01;
        let f = |y: f64, z: f64| [a / (a * a + y * y + z * z).powf(1.5)];
        let h = 1e4;
        let region = Region::square_focused(h, (0.0, 0.0), a);
        let r = integrate_region(f, &region, &QuadratureConfig::default()).unwrap();
        // tail outside the square is about 2π · 4a / (π h)·... bounded by 1e-5 here
        assert!((r.value[0] - 2.0 * std::f64::consts::PI).abs() < 1e-5);
        assert!(r.converged);
    }

    #[test]
    fn non_finite_sample_reports_point() {
        let err = integrate_2d(|y, _| 1.0 / y, 1.0, &single_panel(3)).unwrap_err();
        match err {
            CrbError::NonFinite { y, .. } => assert_eq!(y, 0.0),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn non_convergence_is_flagged() {
        let cfg = QuadratureConfig {
            nodes_per_panel: 2,
            panels_per_axis: 1,
            target_rel_tol: 1e-15,
            max_refinements: 2,
            graded: false,
        };
        let r = integrate_2d(|y, z| (30.0 * y).sin().powi(2) + z, 1.0, &cfg).unwrap();
        assert!(!r.converged);
        assert!(r.est_rel_error > cfg.target_rel_tol);
        assert_eq!(r.error_history.len(), 2);
    }

    #[test]
    fn invalid_configs_rejected() {
        let base = QuadratureConfig::default();
        for bad in [
            QuadratureConfig { nodes_per_panel: 1, ..base },
            QuadratureConfig { panels_per_axis: 0, ..base },
            QuadratureConfig { target_rel_tol: 0.0, ..base },
            QuadratureConfig { max_refinements: 0, ..base },
        ] {
            assert!(integrate_2d(|_, _| 1.0, 1.0, &bad).is_err());
        }
    }

    #[test]
    fn error_shrinks_under_doubling() {
        let cfg = QuadratureConfig {
            nodes_per_panel: 4,
            panels_per_axis: 1,
            target_rel_tol: 1e-13,
            max_refinements: 5,
            graded: false,
        };
        let r = integrate_2d(|y, z| 1.0 / (0.3 + y * y + z * z), 1.0, &cfg).unwrap();
        let h = &r.error_history;
        assert!(h.len() >= 3);
        assert!(h.windows(2).all(|w| w[1] < w[0]), "{h:?}");
    }

    #[test]
    fn complex_integrand() {
        let cfg = QuadratureConfig::default();
        let r = integrate_2d_complex(|y, z| Complex64::new(y * y, z * z + 1.0), 0.5, &cfg).unwrap();
        assert!((r.value.re - 1.0 / 12.0).abs() < 1e-14);
        assert!((r.value.im - 1.0 / 12.0 - 1.0).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn linearity(a in -3.0f64..3.0, b in -3.0f64..3.0, c in 0.1f64..2.0) {
            let cfg = QuadratureConfig::default();
            let f = move |y: f64, z: f64| (c * y).cos() * (1.0 + z * z);
            let g = move |y: f64, z: f64| (y * z).exp();
            let fi = integrate_2d(f, 1.0, &cfg).unwrap().value;
            let gi = integrate_2d(g, 1.0, &cfg).unwrap().value;
            let hi = integrate_2d(move |y, z| a * f(y, z) + b * g(y, z), 1.0, &cfg).unwrap().value;
            let expected = a * fi + b * gi;
            prop_assert!((hi - expected).abs() <= 1e-12 * (a.abs() * fi.abs() + b.abs() * gi.abs()).max(1e-300));
        }
    }
}
