//! Closed forms for the CPL integrals and the bounds built on them.
//!
//! All expressions depend on the geometry only through `ρ = L/x_C`. The
//! integrals run over `|y|, |z| ≤ L/2`, so the forms below are evaluated at the
//! half-aperture ratio `t = ρ/2 = (L/2)/x_C`; substituting `ρ` directly would
//! describe a surface twice as wide.

use std::f64::consts::PI;

use crate::error::{CrbError, Result};
use crate::fieldmodel::DipoleScenario;

/// Default validity gate for the large-distance approximation, in wavelengths.
pub const DEFAULT_LARGE_XC_WAVELENGTHS: f64 = 100.0;

/// Aperture geometry `ρ = L/x_C` together with `k` and `x_C`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoGeometry {
    pub rho: f64,
    pub k: f64,
    pub x_c: f64,
}

impl RhoGeometry {
    pub fn new(rho: f64, k: f64, x_c: f64) -> Result<Self> {
        for (name, v) in [("rho", rho), ("k", k), ("x_c", x_c)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CrbError::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(RhoGeometry { rho, k, x_c })
    }

    pub fn from_scenario(s: &DipoleScenario) -> Self {
        RhoGeometry {
            rho: s.aperture_ratio(),
            k: s.wavenumber(),
            x_c: s.source()[0],
        }
    }

    /// `(L/2)/x_C`, the argument of every closed form in this module.
    pub fn half_aperture_ratio(&self) -> f64 {
        0.5 * self.rho
    }

    pub fn surface_side(&self) -> f64 {
        self.rho * self.x_c
    }
}

/// A two-sided bracket `lower < value ≤ upper`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralBounds {
    pub lower: f64,
    pub upper: f64,
}

impl IntegralBounds {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    /// `lower < value ≤ upper + slack`.
    pub fn contains(&self, value: f64, slack: f64) -> bool {
        self.lower < value && value <= self.upper + slack
    }
}

/// `ℐ1`, the phase term of the `x_C` information.
pub fn i1_closed(g: &RhoGeometry) -> f64 {
    let t = g.half_aperture_ratio();
    let t2 = t * t;
    let s = (1.0 + t2).sqrt();
    g.k * g.k * t / (2.0 * (1.0 + t2))
        * ((7.0 + 6.0 * t2) / s * (t / s).atan() + t / (1.0 + 2.0 * t2))
}

/// Bracket on `ℐ3`, the phase term of the `y_C` information.
pub fn i3_bounds(g: &RhoGeometry) -> IntegralBounds {
    let t2 = g.half_aperture_ratio().powi(2);
    let k2 = g.k * g.k;
    let a = 1.0 + t2;
    let b = 1.0 + 2.0 * t2;
    IntegralBounds {
        lower: k2 * (3.0 * PI / 8.0 * a.ln() - PI / 16.0 * t2 * (5.0 * t2 + 6.0) / (a * a)),
        upper: k2 * (3.0 * PI / 8.0 * b.ln() - PI / 4.0 * t2 * (5.0 * t2 + 3.0) / (b * b)),
    }
}

/// Bracket on `ℐ5`, the phase term of the `z_C` information.
pub fn i5_bounds(g: &RhoGeometry) -> IntegralBounds {
    let t2 = g.half_aperture_ratio().powi(2);
    let k2 = g.k * g.k;
    let a = 1.0 + t2;
    let b = 1.0 + 2.0 * t2;
    IntegralBounds {
        lower: k2 * (PI / 8.0 * a.ln() + PI / 16.0 * t2 * (t2 - 2.0) / (a * a)),
        upper: k2 * (PI / 8.0 * b.ln() + PI / 4.0 * t2 * (t2 - 1.0) / (b * b)),
    }
}

/// `ℐ6`, the amplitude term of the `z_C` information, m⁻².
pub fn i6_closed(g: &RhoGeometry) -> f64 {
    let t = g.half_aperture_ratio();
    let t2 = t * t;
    let a = 1.0 + t2;
    let b = 1.0 + 2.0 * t2;
    let scaled = t * (18.0 * t2 * t2 + 38.0 * t2 + 17.0) / (4.0 * a.powf(2.5)) * (t / a.sqrt()).atan()
        + t2 * (6.0 * t2 * t2 + 2.0 * t2 - 1.0) / (4.0 * a * a * b * b);
    scaled / (g.x_c * g.x_c)
}

/// Bounds for `x_C ≫ λ`, where the amplitude terms `ℐ2, ℐ4` are dropped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LargeDistanceApprox {
    /// `SNR⁻¹ / ℐ1`.
    pub crb_x: f64,
    /// `SNR⁻¹` over the midpoint of the `ℐ3` bracket.
    pub crb_y: f64,
    /// Range of `SNR⁻¹/ℐ3` implied by the `ℐ3` bracket.
    pub crb_y_range: IntegralBounds,
    /// `x_C ≥ gate·λ` held.
    pub valid: bool,
}

impl LargeDistanceApprox {
    pub fn crb_y_width(&self) -> f64 {
        self.crb_y_range.width()
    }
}

/// Large-distance approximations of the `x_C` and `y_C` bounds, gated at
/// `x_C ≥ gate_wavelengths·λ`. A failed gate is reported in `valid` and logged.
pub fn crb_approx_large_xc(scenario: &DipoleScenario, gate_wavelengths: f64) -> LargeDistanceApprox {
    let g = RhoGeometry::from_scenario(scenario);
    let snr = scenario.snr();
    let valid = g.x_c >= gate_wavelengths * scenario.wavelength();
    if !valid {
        log::warn!(
            "x_C = {} m is below {} wavelengths; large-distance approximation is unreliable",
            g.x_c,
            gate_wavelengths
        );
    }
    let b3 = i3_bounds(&g);
    LargeDistanceApprox {
        crb_x: 1.0 / (snr * i1_closed(&g)),
        crb_y: 1.0 / (snr * b3.midpoint()),
        crb_y_range: IntegralBounds {
            lower: 1.0 / (snr * b3.upper),
            upper: 1.0 / (snr * b3.lower),
        },
        valid,
    }
}

/// Limits of the bounds as the surface grows without bound.
///
/// `CRB(x_C) → limit_x`, while `CRB(y_C)` and `CRB(z_C)` decay like
/// `coeff / ln ρ`, with the logarithm taken of the half-aperture ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticLimits {
    pub limit_x: f64,
    pub coeff_y: f64,
    pub coeff_z: f64,
}

impl AsymptoticLimits {
    /// Asymptotic `CRB(y_C)` at aperture ratio `rho`.
    pub fn crb_y_at(&self, rho: f64) -> f64 {
        self.coeff_y / (0.5 * rho).ln()
    }

    /// Asymptotic `CRB(z_C)` at aperture ratio `rho`.
    pub fn crb_z_at(&self, rho: f64) -> f64 {
        self.coeff_z / (0.5 * rho).ln()
    }
}

pub fn asymptotic_limits(wavelength: f64, snr: f64) -> Result<AsymptoticLimits> {
    if !(snr > 0.0) || !(wavelength > 0.0) {
        return Err(CrbError::Domain(format!(
            "wavelength and SNR must be positive, got {wavelength} and {snr}"
        )));
    }
    let base = wavelength * wavelength / (snr * PI.powi(3));
    Ok(AsymptoticLimits {
        limit_x: base / 3.0,
        coeff_y: base / 3.0,
        coeff_z: base,
    })
}
