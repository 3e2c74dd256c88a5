//! Fisher information for the source position and the resulting bounds.
//!
//! For observations `ξ(p) = e(p) + n(p)` with white noise of level `σ²`, the
//! information about `u = (x_C, y_C, z_C)` is
//!
//! ```text
//! F_mn = (1/σ²) ∫∫ Re Σ_u ∂e_u/∂u_m · conj(∂e_u/∂u_n) dy dz
//! ```
//!
//! over the observation square. Writing `e_u = j χ e^{-jkr} a_u` with real
//! amplitudes `a_u`, each derivative splits into an amplitude part `∂a_u` and a
//! phase part `-j k (∂r) a_u`. In the central-perpendicular-line (CPL)
//! configuration the two parts give the integrals `ℐ2, ℐ4, ℐ6` and
//! `ℐ1, ℐ3, ℐ5` respectively, and the matrix is diagonal.

use std::fmt;

use num_complex::Complex64;

use crate::error::{CrbError, Result};
use crate::fieldmodel::{
    dipole_amplitudes, dipole_field, far_field_check, offsets, scalar_poynting_field,
    DipoleScenario, SurfacePoint, DEFAULT_FAR_FIELD_FACTOR,
};
use crate::quadrature::{integrate_region, IntegralResult, QuadratureConfig, Region};

/// Names of the three position parameters, in matrix order.
pub const PARAMETER_NAMES: [&str; 3] = ["x_C", "y_C", "z_C"];

/// Largest eigenvalue ratio accepted by [`crb_from_fim`].
pub const DEFAULT_MAX_CONDITION: f64 = 1e12;

const J: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// `∂e_u/∂u_m`, indexed `[component][parameter]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldJacobian(pub [[Complex64; 3]; 3]);

impl FieldJacobian {
    pub fn entry(&self, component: usize, parameter: usize) -> Complex64 {
        self.0[component][parameter]
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    /// Largest entrywise difference, relative to the largest entry of `self`.
    pub fn max_rel_diff(&self, other: &FieldJacobian) -> f64 {
        let diff = self
            .0
            .iter()
            .flatten()
            .zip(other.0.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        diff / self.max_abs()
    }

    /// `Re Σ_u J_um conj(J_un)` as the upper triangle `[00, 01, 02, 11, 12, 22]`.
    #[inline]
    fn gram_upper(&self) -> [f64; 6] {
        let mut g = [0.0; 6];
        let mut idx = 0;
        for m in 0..3 {
            for n in m..3 {
                g[idx] = (0..3)
                    .map(|u| (self.0[u][m] * self.0[u][n].conj()).re)
                    .sum();
                idx += 1;
            }
        }
        g
    }
}

/// Partial derivatives `∂r/∂(x_C, y_C, z_C)`.
#[inline]
fn distance_gradient(x: f64, dy: f64, dz: f64, r: f64) -> [f64; 3] {
    [x / r, -dy / r, -dz / r]
}

/// Closed-form field Jacobian of the dipole model.
pub fn field_jacobian_analytic(p: SurfacePoint, scenario: &DipoleScenario) -> Result<FieldJacobian> {
    let (x, dy, dz, r) = offsets(p, scenario.source())?;
    let k = scenario.wavenumber();
    let a = dipole_amplitudes(x, dy, dz, r);
    let dr = distance_gradient(x, dy, dz, r);

    let r2 = r * r;
    let r3 = r2 * r;
    let r5 = r3 * r2;
    // ∂a_u/∂u_m
    let da = [
        [
            dz / r3 - 3.0 * x * x * dz / r5,
            3.0 * x * dy * dz / r5,
            -x / r3 + 3.0 * x * dz * dz / r5,
        ],
        [
            3.0 * x * dy * dz / r5,
            dz / r3 - 3.0 * dy * dy * dz / r5,
            dy / r3 - 3.0 * dy * dz * dz / r5,
        ],
        [
            -x / r3 + 3.0 * x * dz * dz / r5,
            dy / r3 - 3.0 * dy * dz * dz / r5,
            3.0 * dz / r3 - 3.0 * dz * dz * dz / r5,
        ],
    ];
    let carrier = J * scenario.chi() * Complex64::cis(-k * r);
    let mut jac = [[Complex64::new(0.0, 0.0); 3]; 3];
    for u in 0..3 {
        for m in 0..3 {
            jac[u][m] = carrier * Complex64::new(da[u][m], -k * dr[m] * a[u]);
        }
    }
    Ok(FieldJacobian(jac))
}

/// Central finite-difference Jacobian with step `h` on each source coordinate.
pub fn field_jacobian_fd(
    p: SurfacePoint,
    scenario: &DipoleScenario,
    h: f64,
) -> Result<FieldJacobian> {
    if !(h > 0.0) {
        return Err(CrbError::Domain(format!(
            "finite-difference step must be positive, got {h}"
        )));
    }
    let mut jac = [[Complex64::new(0.0, 0.0); 3]; 3];
    for m in 0..3 {
        let shifted = |sign: f64| -> Result<[Complex64; 3]> {
            let mut src = scenario.source();
            src[m] += sign * h;
            let s = scenario.with_source(src).map_err(|_| {
                CrbError::Domain(format!(
                    "finite-difference step {h} moves the source onto or behind the surface"
                ))
            })?;
            Ok(dipole_field(p, &s)?.as_array())
        };
        let plus = shifted(1.0)?;
        let minus = shifted(-1.0)?;
        for u in 0..3 {
            jac[u][m] = (plus[u] - minus[u]) / (2.0 * h);
        }
    }
    Ok(FieldJacobian(jac))
}

/// Gradient of the scalar power-flux field `E` with respect to the source
/// position.
pub fn scalar_field_gradient(p: SurfacePoint, scenario: &DipoleScenario) -> Result<[Complex64; 3]> {
    let (x, dy, _, r) = offsets(p, scenario.source())?;
    let k = scenario.wavenumber();
    let dr = distance_gradient(x, dy, p.z - scenario.source()[2], r);
    let q = x * (x * x + dy * dy);
    let sq = q.sqrt();
    let r52 = r.powf(2.5);
    let g = sq / r52;
    let dq = [3.0 * x * x + dy * dy, -2.0 * x * dy, 0.0];
    let carrier = scenario.chi() * Complex64::cis(-k * r);
    let mut grad = [Complex64::new(0.0, 0.0); 3];
    for m in 0..3 {
        let dg = dq[m] / (2.0 * sq * r52) - 2.5 * g * dr[m] / r;
        grad[m] = carrier * Complex64::new(dg, -k * dr[m] * g);
    }
    Ok(grad)
}

/// Central finite-difference gradient of the scalar field.
pub fn scalar_field_gradient_fd(
    p: SurfacePoint,
    scenario: &DipoleScenario,
    h: f64,
) -> Result<[Complex64; 3]> {
    let mut grad = [Complex64::new(0.0, 0.0); 3];
    for (m, g) in grad.iter_mut().enumerate() {
        let mut hi = scenario.source();
        let mut lo = scenario.source();
        hi[m] += h;
        lo[m] -= h;
        let fp = scalar_poynting_field(p, &scenario.with_source(hi)?)?;
        let fm = scalar_poynting_field(p, &scenario.with_source(lo)?)?;
        *g = (fp - fm) / (2.0 * h);
    }
    Ok(grad)
}

/// Real symmetric 3×3 Fisher information matrix over `(x_C, y_C, z_C)`, m⁻².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FisherMatrix(pub [[f64; 3]; 3]);

impl FisherMatrix {
    pub fn diagonal(a: f64, b: f64, c: f64) -> Self {
        FisherMatrix([[a, 0.0, 0.0], [0.0, b, 0.0], [0.0, 0.0, c]])
    }

    fn from_upper(u: [f64; 6]) -> Self {
        FisherMatrix([[u[0], u[1], u[2]], [u[1], u[3], u[4]], [u[2], u[4], u[5]]])
    }

    pub fn entry(&self, m: usize, n: usize) -> f64 {
        self.0[m][n]
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    pub fn max_diagonal(&self) -> f64 {
        self.0[0][0].max(self.0[1][1]).max(self.0[2][2])
    }

    pub fn max_off_diagonal(&self) -> f64 {
        let m = &self.0;
        [m[0][1], m[0][2], m[1][2], m[1][0], m[2][0], m[2][1]]
            .iter()
            .map(|v| v.abs())
            .fold(0.0, f64::max)
    }

    /// Largest asymmetry `|F_mn - F_nm|`.
    pub fn asymmetry(&self) -> f64 {
        let m = &self.0;
        (m[0][1] - m[1][0])
            .abs()
            .max((m[0][2] - m[2][0]).abs())
            .max((m[1][2] - m[2][1]).abs())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.0;
        out.iter_mut().flatten().for_each(|v| *v *= factor);
        FisherMatrix(out)
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Inverse by cofactors. Returns `None` when the determinant vanishes.
    pub fn inverse(&self) -> Option<[[f64; 3]; 3]> {
        let m = &self.0;
        let det = self.determinant();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let c = |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
        // adjugate = transpose of the cofactor matrix
        let adj = [
            [c(1, 2, 1, 2), -c(0, 2, 1, 2), c(0, 1, 1, 2)],
            [-c(1, 2, 0, 2), c(0, 2, 0, 2), -c(0, 1, 0, 2)],
            [c(1, 2, 0, 1), -c(0, 2, 0, 1), c(0, 1, 0, 1)],
        ];
        let mut inv = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                inv[i][j] = adj[i][j] / det;
            }
        }
        Some(inv)
    }

    /// Eigenvalues (ascending) and unit eigenvectors (as rows) of the
    /// symmetric part, by cyclic Jacobi rotations.
    pub fn symmetric_eigen(&self) -> ([f64; 3], [[f64; 3]; 3]) {
        let mut a = self.0;
        for i in 0..3 {
            for j in (i + 1)..3 {
                let s = 0.5 * (a[i][j] + a[j][i]);
                a[i][j] = s;
                a[j][i] = s;
            }
        }
        let mut v = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        for _ in 0..64 {
            let off = a[0][1].abs() + a[0][2].abs() + a[1][2].abs();
            let scale = a[0][0].abs() + a[1][1].abs() + a[2][2].abs();
            if off <= f64::EPSILON * 1e-3 * scale || off == 0.0 {
                break;
            }
            for (p, q) in [(0, 1), (0, 2), (1, 2)] {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..3 {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..3 {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vp = row[p];
                    let vq = row[q];
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
        let mut order = [0usize, 1, 2];
        order.sort_by(|&i, &j| a[i][i].total_cmp(&a[j][j]));
        let values = order.map(|i| a[i][i]);
        let vectors = order.map(|i| [v[0][i], v[1][i], v[2][i]]);
        (values, vectors)
    }
}

impl fmt::Display for FisherMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in &self.0 {
            writeln!(f, "[{:>14.6e} {:>14.6e} {:>14.6e}]", row[0], row[1], row[2])?;
        }
        Ok(())
    }
}

/// Per-coordinate Cramér-Rao bounds, m².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrbTriple {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl CrbTriple {
    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    /// Root bounds (standard deviations), metres.
    pub fn rms(&self) -> [f64; 3] {
        self.as_array().map(f64::sqrt)
    }

    /// Largest relative difference between matching coordinates.
    pub fn max_rel_diff(&self, other: &CrbTriple) -> f64 {
        self.as_array()
            .iter()
            .zip(other.as_array())
            .map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()))
            .fold(0.0, f64::max)
    }
}

impl From<[f64; 3]> for CrbTriple {
    fn from(a: [f64; 3]) -> Self {
        CrbTriple {
            x: a[0],
            y: a[1],
            z: a[2],
        }
    }
}

/// `CRB(u_i) = [F⁻¹]_ii`, rejecting matrices with condition number above
/// [`DEFAULT_MAX_CONDITION`].
pub fn crb_from_fim(fim: &FisherMatrix) -> Result<CrbTriple> {
    crb_from_fim_with_limit(fim, DEFAULT_MAX_CONDITION)
}

pub fn crb_from_fim_with_limit(fim: &FisherMatrix, max_condition: f64) -> Result<CrbTriple> {
    let (values, vectors) = fim.symmetric_eigen();
    let condition = if values[0] > 0.0 {
        values[2] / values[0]
    } else {
        f64::INFINITY
    };
    if !(condition <= max_condition) {
        return Err(CrbError::Singular {
            condition,
            direction: describe_direction(&vectors[0]),
        });
    }
    let inv = fim.inverse().ok_or_else(|| CrbError::Singular {
        condition,
        direction: describe_direction(&vectors[0]),
    })?;
    Ok(CrbTriple {
        x: inv[0][0],
        y: inv[1][1],
        z: inv[2][2],
    })
}

fn describe_direction(v: &[f64; 3]) -> String {
    let sign = if v.iter().fold(0.0f64, |m, c| if c.abs() > m.abs() { *c } else { m }) < 0.0 {
        -1.0
    } else {
        1.0
    };
    let terms: Vec<String> = v
        .iter()
        .zip(PARAMETER_NAMES)
        .filter(|(c, _)| c.abs() >= 0.05)
        .map(|(c, name)| format!("{:+.2}·{name}", sign * c))
        .collect();
    terms.join(" ")
}

fn integration_region(scenario: &DipoleScenario, cfg: &QuadratureConfig) -> Region {
    let h = scenario.half_side();
    let [x, yc, zc] = scenario.source();
    if cfg.graded {
        Region::square_focused(h, (yc, zc), x)
    } else {
        Region::square(h)
    }
}

fn warn_far_field(scenario: &DipoleScenario) {
    let report = far_field_check(scenario, DEFAULT_FAR_FIELD_FACTOR);
    if !report.valid {
        log::warn!(
            "source is outside the Fraunhofer region of the dipole \
             (size margin {:.3}, Fraunhofer margin {:.3}); the field model is approximate",
            report.size_margin,
            report.fraunhofer_margin
        );
    }
}

/// Fisher information of the vector-field observation.
pub fn fim_vector_field(
    scenario: &DipoleScenario,
    cfg: &QuadratureConfig,
) -> Result<IntegralResult<FisherMatrix>> {
    warn_far_field(scenario);
    let inv_s2 = 1.0 / scenario.noise_sigma2();
    let integrand = |y: f64, z: f64| match field_jacobian_analytic(SurfacePoint::new(y, z), scenario) {
        Ok(j) => j.gram_upper().map(|v| v * inv_s2),
        Err(_) => [f64::NAN; 6],
    };
    let res = integrate_region(integrand, &integration_region(scenario, cfg), cfg)?;
    Ok(res.map(FisherMatrix::from_upper))
}

/// Fisher information of the scalar power-flux observation.
pub fn fim_scalar_field(
    scenario: &DipoleScenario,
    cfg: &QuadratureConfig,
) -> Result<IntegralResult<FisherMatrix>> {
    warn_far_field(scenario);
    let inv_s2 = 1.0 / scenario.noise_sigma2();
    let integrand = |y: f64, z: f64| match scalar_field_gradient(SurfacePoint::new(y, z), scenario) {
        Ok(g) => {
            let mut out = [0.0; 6];
            let mut idx = 0;
            for m in 0..3 {
                for n in m..3 {
                    out[idx] = (g[m] * g[n].conj()).re * inv_s2;
                    idx += 1;
                }
            }
            out
        }
        Err(_) => [f64::NAN; 6],
    };
    let res = integrate_region(integrand, &integration_region(scenario, cfg), cfg)?;
    Ok(res.map(FisherMatrix::from_upper))
}

/// The six CPL integrals `ℐ1 … ℐ6`.
///
/// `ℐ1, ℐ3, ℐ5` carry the factor `k²` (phase terms, dimensionless·k²);
/// `ℐ2, ℐ4, ℐ6` are in m⁻² (amplitude terms).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CplIntegrals {
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    pub i4: f64,
    pub i5: f64,
    pub i6: f64,
}

impl CplIntegrals {
    pub fn as_array(&self) -> [f64; 6] {
        [self.i1, self.i2, self.i3, self.i4, self.i5, self.i6]
    }

    /// `CRB = SNR⁻¹ / (ℐ_odd + ℐ_even)` per coordinate.
    pub fn crb(&self, snr: f64) -> CrbTriple {
        CrbTriple {
            x: 1.0 / (snr * (self.i1 + self.i2)),
            y: 1.0 / (snr * (self.i3 + self.i4)),
            z: 1.0 / (snr * (self.i5 + self.i6)),
        }
    }
}

/// Integrands of `ℐ1 … ℐ6` at `(y, z)` for a source at distance `x`, with the
/// `k²` factor omitted from the phase terms.
#[inline]
pub fn cpl_integrands(x: f64, y: f64, z: f64) -> [f64; 6] {
    let (x2, y2, z2) = (x * x, y * y, z * z);
    let r2 = x2 + y2 + z2;
    let r6 = r2 * r2 * r2;
    let r8 = r6 * r2;
    [
        x2 * (x2 + y2) / r6,
        (x2 * x2 + x2 * y2 - x2 * z2 + y2 * z2 + z2 * z2) / r8,
        y2 * (x2 + y2) / r6,
        (y2 * y2 + x2 * y2 - y2 * z2 + x2 * z2 + z2 * z2) / r8,
        z2 * (x2 + y2) / r6,
        (x2 + y2) * (x2 + y2 + 4.0 * z2) / r8,
    ]
}

fn require_cpl(scenario: &DipoleScenario) -> Result<()> {
    if scenario.is_cpl() {
        Ok(())
    } else {
        let [_, y_c, z_c] = scenario.source();
        Err(CrbError::NotCpl { y_c, z_c })
    }
}

/// Quadrature values of `ℐ1 … ℐ6` for a CPL scenario.
pub fn cpl_integrals(
    scenario: &DipoleScenario,
    cfg: &QuadratureConfig,
) -> Result<IntegralResult<CplIntegrals>> {
    require_cpl(scenario)?;
    let x = scenario.source()[0];
    let k2 = scenario.wavenumber().powi(2);
    let res = integrate_region(
        |y, z| cpl_integrands(x, y, z),
        &integration_region(scenario, cfg),
        cfg,
    )?;
    Ok(res.map(|v| CplIntegrals {
        i1: k2 * v[0],
        i2: v[1],
        i3: k2 * v[2],
        i4: v[3],
        i5: k2 * v[4],
        i6: v[5],
    }))
}

/// CPL bounds `SNR⁻¹ / (ℐ1 + ℐ2)`, `SNR⁻¹ / (ℐ3 + ℐ4)`, `SNR⁻¹ / (ℐ5 + ℐ6)`.
pub fn crb_cpl(scenario: &DipoleScenario, cfg: &QuadratureConfig) -> Result<CrbTriple> {
    warn_far_field(scenario);
    Ok(cpl_integrals(scenario, cfg)?.value.crb(scenario.snr()))
}
