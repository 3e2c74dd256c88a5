//! Oracle checks run by the `validate` command.
//!
//! Each check compares two independent computations of the same quantity and
//! reports the measured discrepancy next to its tolerance.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::closedform::{i1_closed, i3_bounds, i5_bounds, i6_closed, IntegralBounds, RhoGeometry};
use crate::error::Result;
use crate::fieldmodel::{
    dipole_field, dipole_radiation_vector, field_from_radiation, spherical_from_cartesian,
    DipoleScenario, SurfacePoint, FREE_SPACE_IMPEDANCE,
};
use crate::fim::{
    cpl_integrals, crb_cpl, crb_from_fim, field_jacobian_analytic, field_jacobian_fd,
    fim_vector_field,
};
use crate::quadrature::QuadratureConfig;

/// Aperture ratios at which closed forms are checked.
pub const RHO_GRID: [f64; 7] = [0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 50.0];

pub const CLOSED_FORM_TOL: f64 = 1e-8;
pub const SANDWICH_SLACK: f64 = 1e-12;
pub const JACOBIAN_TOL: f64 = 1e-6;
pub const DIAGONALITY_TOL: f64 = 1e-10;
pub const PATH_EQUIVALENCE_TOL: f64 = 1e-8;
/// Phases of order `k r ≈ 10³` rad lose about `k r ε` to rounding.
pub const FIELD_PATHS_TOL: f64 = 1e-10;

/// The closed forms under test. Swapping one out lets a caller confirm that
/// the suite notices a wrong formula.
#[derive(Clone, Copy)]
pub struct ClosedForms {
    pub i1: fn(&RhoGeometry) -> f64,
    pub i3: fn(&RhoGeometry) -> IntegralBounds,
    pub i5: fn(&RhoGeometry) -> IntegralBounds,
    pub i6: fn(&RhoGeometry) -> f64,
}

impl Default for ClosedForms {
    fn default() -> Self {
        ClosedForms {
            i1: i1_closed,
            i3: i3_bounds,
            i5: i5_bounds,
            i6: i6_closed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    /// Worst discrepancy observed. Bracket checks report the largest signed
    /// distance outside the bracket relative to its upper end, and pass only
    /// when it is negative.
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn push_max(&mut self, name: &str, measured: f64, tolerance: f64) {
        self.checks.push(CheckResult {
            name: name.to_string(),
            measured,
            tolerance,
            passed: measured <= tolerance,
        });
    }

    fn push_strict(&mut self, name: &str, measured: f64) {
        self.checks.push(CheckResult {
            name: name.to_string(),
            measured,
            tolerance: 0.0,
            passed: measured < 0.0,
        });
    }
}

fn reference(rho: f64) -> Result<DipoleScenario> {
    DipoleScenario::new(0.01, Complex64::new(1.0, 0.0), [6.0, 0.0, 0.0], rho * 6.0, 10.0)
}

/// CPL scenarios used by the matrix checks.
pub fn cpl_scenarios() -> Result<Vec<DipoleScenario>> {
    [
        (0.01, 6.0, 3.0, 10.0),
        (0.01, 2.0, 3.0, 10.0),
        (0.001, 1.0, 3.0, 1.0),
        (0.05, 0.5, 5.0, 0.3),
        (0.01, 10.0, 100.0, 10.0),
    ]
    .into_iter()
    .map(|(l, x, side, s2)| DipoleScenario::new(l, Complex64::new(1.0, 0.0), [x, 0.0, 0.0], side, s2))
    .collect()
}

/// Runs every check with the library's own closed forms.
pub fn run_validation(quad: &QuadratureConfig) -> Result<ValidationReport> {
    run_validation_with(&ClosedForms::default(), quad)
}

pub fn run_validation_with(forms: &ClosedForms, quad: &QuadratureConfig) -> Result<ValidationReport> {
    let mut report = ValidationReport::default();

    let (mut e1, mut e6, mut v3, mut v5) = (0.0f64, 0.0f64, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for rho in RHO_GRID {
        let s = reference(rho)?;
        let g = RhoGeometry::from_scenario(&s);
        let q = cpl_integrals(&s, quad)?.value;
        e1 = e1.max((q.i1 / (forms.i1)(&g) - 1.0).abs());
        e6 = e6.max((q.i6 / (forms.i6)(&g) - 1.0).abs());
        for (v, b, value) in [(&mut v3, (forms.i3)(&g), q.i3), (&mut v5, (forms.i5)(&g), q.i5)] {
            // relative distance outside the bracket; negative inside
            let scale = b.upper.abs();
            *v = v.max((b.lower - value).max(value - b.upper - SANDWICH_SLACK) / scale);
        }
    }
    report.push_max("closed_form_i1", e1, CLOSED_FORM_TOL);
    report.push_max("closed_form_i6", e6, CLOSED_FORM_TOL);
    report.push_strict("sandwich_i3", v3);
    report.push_strict("sandwich_i5", v5);

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let s = reference(0.5)?.with_source([2.0, 0.3, -0.4])?;
    let h = 1e-6 * s.wavelength();
    let mut jac = 0.0f64;
    for _ in 0..100 {
        let p = SurfacePoint::new(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5));
        let a = field_jacobian_analytic(p, &s)?;
        jac = jac.max(a.max_rel_diff(&field_jacobian_fd(p, &s, h)?));
    }
    report.push_max("jacobian_fd", jac, JACOBIAN_TOL);

    let (mut diag, mut path) = (0.0f64, 0.0f64);
    for s in cpl_scenarios()? {
        let f = fim_vector_field(&s, quad)?.value;
        diag = diag.max(f.max_off_diagonal() / f.max_diagonal());
        path = path.max(crb_from_fim(&f)?.max_rel_diff(&crb_cpl(&s, quad)?));
    }
    report.push_max("cpl_diagonality", diag, DIAGONALITY_TOL);
    report.push_max("lemma1_path_equivalence", path, PATH_EQUIVALENCE_TOL);

    let (i_in, l_s) = (0.8, 0.004);
    let s = DipoleScenario::from_current(0.01, FREE_SPACE_IMPEDANCE, i_in, l_s, [4.0, 0.3, -0.5], 3.0, 1.0)?;
    let mut fields = 0.0f64;
    for _ in 0..50 {
        let p = SurfacePoint::new(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5));
        let direct = dipole_field(p, &s)?;
        let sc = spherical_from_cartesian(p, s.source())?;
        let (rt, rp) = dipole_radiation_vector(sc.theta, l_s, i_in);
        let via = field_from_radiation(sc, rt, rp, s.wavenumber(), FREE_SPACE_IMPEDANCE)?;
        let diff = direct
            .as_array()
            .iter()
            .zip(via.as_array())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        fields = fields.max(diff / direct.norm());
    }
    report.push_max("field_paths", fields, FIELD_PATHS_TOL);

    Ok(report)
}
