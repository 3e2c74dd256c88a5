//! Electric field of a z-oriented dipole observed on the surface `x = 0`.
//!
//! Two observation models are provided: the full vector field `(e_x, e_y, e_z)`
//! and a scalar field built from the power flux through the surface. Both are
//! pure functions of the observation point and a [`DipoleScenario`].
//!
//! Spherical coordinates are taken about the source centre `C`, with the polar
//! axis along `z` and the azimuth measured from `+x`. Because the surface lies
//! on the `-x` side of the source, the azimuth of every surface point is in
//! `(π/2, 3π/2)` and satisfies `tan φ = -(y - y_C) / x_C`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{CrbError, Result};

/// Characteristic impedance of free space, ohms.
pub const FREE_SPACE_IMPEDANCE: f64 = 376.730313668;

/// Default factor used to turn the far-field conditions `r_o >> l_s` and
/// `r_o >> 2 l_s² / λ` into inequalities.
pub const DEFAULT_FAR_FIELD_FACTOR: f64 = 10.0;

/// Relative tolerance (w.r.t. `x_C`) below which `y_C` and `z_C` count as zero
/// for the central-perpendicular-line configuration.
pub const CPL_TOLERANCE: f64 = 1e-12;

const J: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Point on the observation plane, in metres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint {
    pub y: f64,
    pub z: f64,
}

impl SurfacePoint {
    pub fn new(y: f64, z: f64) -> Self {
        Self { y, z }
    }

    /// Whether the point lies on the square `|y|, |z| <= half_side`.
    pub fn is_on_surface(&self, half_side: f64) -> bool {
        self.y.abs() <= half_side && self.z.abs() <= half_side
    }
}

/// Complete problem instance: source, surface and noise level.
///
/// The wavenumber is always derived from the wavelength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DipoleScenario {
    wavelength: f64,
    chi: Complex64,
    source: [f64; 3],
    surface_side: f64,
    noise_sigma2: f64,
    dipole_length: f64,
}

impl DipoleScenario {
    /// Builds a scenario from the source amplitude `chi` (volts) directly.
    ///
    /// The dipole length defaults to zero (an ideal dipole); it only enters
    /// [`far_field_check`].
    pub fn new(
        wavelength: f64,
        chi: Complex64,
        source: [f64; 3],
        surface_side: f64,
        noise_sigma2: f64,
    ) -> Result<Self> {
        let s = Self {
            wavelength,
            chi,
            source,
            surface_side,
            noise_sigma2,
            dipole_length: 0.0,
        };
        s.validate()?;
        Ok(s)
    }

    /// Builds a scenario from the impedance of the medium, the dipole current
    /// and its length, using `chi = eta * i_in * l_s / (2 λ)`.
    pub fn from_current(
        wavelength: f64,
        eta: f64,
        i_in: f64,
        dipole_length: f64,
        source: [f64; 3],
        surface_side: f64,
        noise_sigma2: f64,
    ) -> Result<Self> {
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(CrbError::InvalidScenario(format!(
                "impedance must be positive, got {eta}"
            )));
        }
        let chi = Complex64::new(eta * i_in * dipole_length / (2.0 * wavelength), 0.0);
        Self::new(wavelength, chi, source, surface_side, noise_sigma2)?
            .with_dipole_length(dipole_length)
    }

    fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| {
            Err(CrbError::InvalidScenario(format!(
                "{what} must be positive and finite, got {v}"
            )))
        };
        if !(self.wavelength > 0.0) || !self.wavelength.is_finite() {
            return bad("wavelength", self.wavelength);
        }
        if !(self.surface_side > 0.0) || !self.surface_side.is_finite() {
            return bad("surface side", self.surface_side);
        }
        if !(self.noise_sigma2 > 0.0) || !self.noise_sigma2.is_finite() {
            return bad("noise level sigma^2", self.noise_sigma2);
        }
        if !(self.source[0] > 0.0) || !self.source[0].is_finite() {
            return bad("source distance x_C", self.source[0]);
        }
        if !self.source[1].is_finite() || !self.source[2].is_finite() {
            return Err(CrbError::InvalidScenario(
                "source coordinates must be finite".into(),
            ));
        }
        if !self.chi.re.is_finite() || !self.chi.im.is_finite() {
            return Err(CrbError::InvalidScenario(
                "source amplitude chi must be finite".into(),
            ));
        }
        if !(self.dipole_length >= 0.0) || !self.dipole_length.is_finite() {
            return Err(CrbError::InvalidScenario(format!(
                "dipole length must be non-negative, got {}",
                self.dipole_length
            )));
        }
        Ok(())
    }

    pub fn with_wavelength(mut self, wavelength: f64) -> Result<Self> {
        self.wavelength = wavelength;
        self.validate().map(|_| self)
    }

    pub fn with_chi(mut self, chi: Complex64) -> Result<Self> {
        self.chi = chi;
        self.validate().map(|_| self)
    }

    pub fn with_source(mut self, source: [f64; 3]) -> Result<Self> {
        self.source = source;
        self.validate().map(|_| self)
    }

    pub fn with_surface_side(mut self, surface_side: f64) -> Result<Self> {
        self.surface_side = surface_side;
        self.validate().map(|_| self)
    }

    pub fn with_noise_sigma2(mut self, noise_sigma2: f64) -> Result<Self> {
        self.noise_sigma2 = noise_sigma2;
        self.validate().map(|_| self)
    }

    pub fn with_dipole_length(mut self, dipole_length: f64) -> Result<Self> {
        self.dipole_length = dipole_length;
        self.validate().map(|_| self)
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    /// `k = 2π / λ`.
    pub fn wavenumber(&self) -> f64 {
        TAU / self.wavelength
    }

    pub fn chi(&self) -> Complex64 {
        self.chi
    }

    /// Source centre `(x_C, y_C, z_C)`.
    pub fn source(&self) -> [f64; 3] {
        self.source
    }

    pub fn surface_side(&self) -> f64 {
        self.surface_side
    }

    pub fn half_side(&self) -> f64 {
        0.5 * self.surface_side
    }

    pub fn noise_sigma2(&self) -> f64 {
        self.noise_sigma2
    }

    pub fn dipole_length(&self) -> f64 {
        self.dipole_length
    }

    /// `|chi|² / σ²`.
    pub fn snr(&self) -> f64 {
        self.chi.norm_sqr() / self.noise_sigma2
    }

    /// Aperture ratio `L / x_C`.
    pub fn aperture_ratio(&self) -> f64 {
        self.surface_side / self.source[0]
    }

    /// Whether the source sits on the line through the surface centre,
    /// perpendicular to the surface.
    pub fn is_cpl(&self) -> bool {
        let tol = CPL_TOLERANCE * self.source[0];
        self.source[1].abs() <= tol && self.source[2].abs() <= tol
    }
}

/// Spherical coordinates of a surface point about the source centre.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalCoords {
    /// Distance from the source centre, metres.
    pub r: f64,
    /// Polar angle from `+z`, radians in `[0, π]`.
    pub theta: f64,
    /// Azimuth from `+x`, radians in `[0, 2π)`.
    pub phi: f64,
}

impl SphericalCoords {
    /// Offset `p - C` in Cartesian coordinates.
    pub fn to_offset(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [self.r * st * cp, self.r * st * sp, self.r * ct]
    }

    /// Reconstructs the surface point whose coordinates about `source` these are.
    pub fn to_surface_point(&self, source: [f64; 3]) -> SurfacePoint {
        let d = self.to_offset();
        SurfacePoint::new(source[1] + d[1], source[2] + d[2])
    }
}

/// Spherical coordinates of the surface point `p` about `source`.
///
/// `r = √(x_C² + (y - y_C)² + (z - z_C)²)`, `cos θ = (z - z_C) / r` and
/// `tan φ = -(y - y_C) / x_C`.
pub fn spherical_from_cartesian(p: SurfacePoint, source: [f64; 3]) -> Result<SphericalCoords> {
    let dx = -source[0];
    let dy = p.y - source[1];
    let dz = p.z - source[2];
    let rho = dx.hypot(dy);
    let r = rho.hypot(dz);
    if !(r > 0.0) || !r.is_finite() {
        return Err(CrbError::DegenerateGeometry);
    }
    let theta = rho.atan2(dz);
    let mut phi = dy.atan2(dx);
    if phi < 0.0 {
        phi += TAU;
    }
    Ok(SphericalCoords { r, theta, phi })
}

/// Scalar Green's function `-j k η exp(-j k r) / (4π r)`.
pub fn green_scalar(r: f64, k: f64, eta: f64) -> Result<Complex64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(CrbError::Domain(format!(
            "Green's function needs r > 0, got {r}"
        )));
    }
    Ok(-J * (k * eta / (4.0 * PI * r)) * Complex64::cis(-k * r))
}

/// Radiation vector components `(R_θ, R_φ)` of a z-oriented dipole of length
/// `l_s` carrying the uniform current `i_in`.
pub fn dipole_radiation_vector(theta: f64, l_s: f64, i_in: f64) -> (Complex64, Complex64) {
    (
        Complex64::new(l_s * i_in * theta.sin(), 0.0),
        Complex64::new(0.0, 0.0),
    )
}

/// One quadrature sample of a source current distribution: the position and
/// the current density already multiplied by its quadrature weight (A·m).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurrentSample {
    pub position: [f64; 3],
    pub weighted_current: [Complex64; 3],
}

/// Midpoint samples of a thin z-directed line current of the given length,
/// centred on the origin. `current` is the signed current along `+z`.
///
/// A current of `-I` along `+z` reproduces the sign convention of
/// [`dipole_radiation_vector`].
pub fn uniform_line_current(length: f64, current: f64, samples: usize) -> Vec<CurrentSample> {
    let n = samples.max(1);
    let ds = length / n as f64;
    (0..n)
        .map(|i| CurrentSample {
            position: [0.0, 0.0, -0.5 * length + (i as f64 + 0.5) * ds],
            weighted_current: [
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(current * ds, 0.0),
            ],
        })
        .collect()
}

/// Radiation vector `∫ j(s) exp(j k r̂·s) ds` as a Cartesian complex vector,
/// evaluated from weighted current samples.
pub fn radiation_vector_numeric(
    samples: &[CurrentSample],
    theta: f64,
    phi: f64,
    k: f64,
) -> Result<[Complex64; 3]> {
    if samples.is_empty() {
        return Err(CrbError::Domain(
            "radiation vector needs at least one current sample".into(),
        ));
    }
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    let rhat = [st * cp, st * sp, ct];
    let mut out = [Complex64::new(0.0, 0.0); 3];
    for s in samples {
        let phase = Complex64::cis(k * dot(&rhat, &s.position));
        for (acc, j) in out.iter_mut().zip(&s.weighted_current) {
            *acc += j * phase;
        }
    }
    Ok(out)
}

/// Projects a Cartesian radiation vector onto `θ̂` and `φ̂`.
pub fn project_spherical(r: [Complex64; 3], theta: f64, phi: f64) -> (Complex64, Complex64) {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    let r_theta = r[0] * (ct * cp) + r[1] * (ct * sp) - r[2] * st;
    let r_phi = -r[0] * sp + r[1] * cp;
    (r_theta, r_phi)
}

/// Complex electric field phasor, V/m per component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldVector {
    pub ex: Complex64,
    pub ey: Complex64,
    pub ez: Complex64,
}

impl FieldVector {
    pub fn zero() -> Self {
        let z = Complex64::new(0.0, 0.0);
        Self { ex: z, ey: z, ez: z }
    }

    pub fn as_array(&self) -> [Complex64; 3] {
        [self.ex, self.ey, self.ez]
    }

    /// `‖e‖²`.
    pub fn norm_sqr(&self) -> f64 {
        self.ex.norm_sqr() + self.ey.norm_sqr() + self.ez.norm_sqr()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }
}

impl From<[Complex64; 3]> for FieldVector {
    fn from(a: [Complex64; 3]) -> Self {
        Self {
            ex: a[0],
            ey: a[1],
            ez: a[2],
        }
    }
}

/// Far-zone field from the radiation vector components.
pub fn field_from_radiation(
    sc: SphericalCoords,
    r_theta: Complex64,
    r_phi: Complex64,
    k: f64,
    eta: f64,
) -> Result<FieldVector> {
    let g = green_scalar(sc.r, k, eta)?;
    let (st, ct) = sc.theta.sin_cos();
    let (sp, cp) = sc.phi.sin_cos();
    Ok(FieldVector {
        ex: g * (r_theta * (ct * cp) - r_phi * sp),
        ey: g * (r_theta * (ct * sp) + r_phi * cp),
        ez: -g * r_theta * st,
    })
}

/// Offsets `(x_C, y - y_C, z - z_C)` and the distance `r`.
#[inline]
pub(crate) fn offsets(p: SurfacePoint, source: [f64; 3]) -> Result<(f64, f64, f64, f64)> {
    let x = source[0];
    let dy = p.y - source[1];
    let dz = p.z - source[2];
    let r = (x * x + dy * dy + dz * dz).sqrt();
    if !(r > 0.0) || !r.is_finite() {
        return Err(CrbError::DegenerateGeometry);
    }
    Ok((x, dy, dz, r))
}

/// Dipole field in closed Cartesian form:
///
/// ```text
/// e_x =  j χ e^{-jkr} x_C (z - z_C) / r³
/// e_y = -j χ e^{-jkr} (y - y_C)(z - z_C) / r³
/// e_z =  j χ e^{-jkr} / r · [1 - (z - z_C)² / r²]
/// ```
pub fn dipole_field(p: SurfacePoint, scenario: &DipoleScenario) -> Result<FieldVector> {
    let (x, dy, dz, r) = offsets(p, scenario.source)?;
    let amp = dipole_amplitudes(x, dy, dz, r);
    let carrier = J * scenario.chi * Complex64::cis(-scenario.wavenumber() * r);
    Ok(FieldVector {
        ex: carrier * amp[0],
        ey: carrier * amp[1],
        ez: carrier * amp[2],
    })
}

/// Real amplitude factors `a_u` with `e_u = j χ e^{-jkr} a_u`.
#[inline]
pub(crate) fn dipole_amplitudes(x: f64, dy: f64, dz: f64, r: f64) -> [f64; 3] {
    let r2 = r * r;
    let r3 = r2 * r;
    [x * dz / r3, -dy * dz / r3, (1.0 - dz * dz / r2) / r]
}

/// Scalar power-flux field of the dipole,
/// `E = χ e^{-jkr} r^{-5/2} √(x_C [x_C² + (y - y_C)²])`.
pub fn scalar_poynting_field(p: SurfacePoint, scenario: &DipoleScenario) -> Result<Complex64> {
    let (x, dy, _, r) = offsets(p, scenario.source)?;
    let radicand = x * (x * x + dy * dy);
    if radicand < 0.0 {
        return Err(CrbError::Domain(format!(
            "negative power-flux radicand {radicand}"
        )));
    }
    Ok(scenario.chi * Complex64::cis(-scenario.wavenumber() * r) * radicand.sqrt()
        / r.powf(2.5))
}

/// Scalar power-flux field for an arbitrary radiation vector:
/// `E = e^{-jkr} √(‖e‖² n)`, where `n = -sin θ cos φ = x_C / r` is the
/// direction cosine of the propagation direction with the surface normal.
pub fn scalar_field_from_radiation(
    sc: SphericalCoords,
    r_theta: Complex64,
    r_phi: Complex64,
    k: f64,
    eta: f64,
) -> Result<Complex64> {
    let g = green_scalar(sc.r, k, eta)?;
    let power = g.norm_sqr() * (r_theta.norm_sqr() + r_phi.norm_sqr());
    let normal = -sc.theta.sin() * sc.phi.cos();
    let radicand = power * normal;
    if radicand < 0.0 {
        return Err(CrbError::Domain(format!(
            "negative power-flux radicand {radicand}: the surface does not face the source"
        )));
    }
    Ok(Complex64::cis(-k * sc.r) * radicand.sqrt())
}

/// Outcome of the far-field validity check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FarFieldReport {
    /// Distance from the source centre to the nearest surface point, metres.
    pub nearest_distance: f64,
    /// `r_o / (factor · l_s)`; at least 1 when the size condition holds.
    pub size_margin: f64,
    /// `r_o / (factor · 2 l_s² / λ)`; at least 1 when the Fraunhofer condition holds.
    pub fraunhofer_margin: f64,
    pub valid: bool,
}

/// Checks `r_o >= factor · l_s` and `r_o >= factor · 2 l_s² / λ`.
pub fn far_field_check(scenario: &DipoleScenario, strict_factor: f64) -> FarFieldReport {
    let h = scenario.half_side();
    let [x, yc, zc] = scenario.source;
    let dy = yc - yc.clamp(-h, h);
    let dz = zc - zc.clamp(-h, h);
    let r_o = (x * x + dy * dy + dz * dz).sqrt();
    let ls = scenario.dipole_length;
    let margin = |scale: f64| {
        if scale > 0.0 {
            r_o / scale
        } else {
            f64::INFINITY
        }
    };
    let size_margin = margin(strict_factor * ls);
    let fraunhofer_margin = margin(strict_factor * 2.0 * ls * ls / scenario.wavelength);
    FarFieldReport {
        nearest_distance: r_o,
        size_margin,
        fraunhofer_margin,
        valid: size_margin >= 1.0 && fraunhofer_margin >= 1.0,
    }
}

#[inline]
fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fig3() -> DipoleScenario {
        DipoleScenario::new(0.01, Complex64::new(1.0, 0.0), [6.0, 0.0, 0.0], 3.0, 10.0).unwrap()
    }

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / a.norm().max(b.norm()).max(f64::MIN_POSITIVE)
    }

    #[test]
    fn scenario_rejects_bad_values() {
        let c = Complex64::new(1.0, 0.0);
        assert!(DipoleScenario::new(0.0, c, [6.0, 0.0, 0.0], 3.0, 1.0).is_err());
        assert!(DipoleScenario::new(0.01, c, [0.0, 0.0, 0.0], 3.0, 1.0).is_err());
        assert!(DipoleScenario::new(0.01, c, [-1.0, 0.0, 0.0], 3.0, 1.0).is_err());
        assert!(DipoleScenario::new(0.01, c, [6.0, 0.0, 0.0], -3.0, 1.0).is_err());
        assert!(DipoleScenario::new(0.01, c, [6.0, 0.0, 0.0], 3.0, 0.0).is_err());
        assert!(DipoleScenario::new(0.01, c, [6.0, f64::NAN, 0.0], 3.0, 1.0).is_err());
        assert!(fig3().with_dipole_length(-1.0).is_err());
    }

    #[test]
    fn wavenumber_is_derived() {
        let s = fig3();
        assert!((s.wavenumber() - 2.0 * PI / 0.01).abs() < 1e-9);
        let s2 = s.with_wavelength(0.001).unwrap();
        assert!((s2.wavenumber() - 2.0 * PI / 0.001).abs() < 1e-9);
        assert!((s.snr() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn from_current_sets_chi() {
        let s = DipoleScenario::from_current(
            0.01,
            FREE_SPACE_IMPEDANCE,
            2.0,
            0.005,
            [6.0, 0.0, 0.0],
            3.0,
            1.0,
        )
        .unwrap();
        let expected = FREE_SPACE_IMPEDANCE * 2.0 * 0.005 / 0.02;
        assert!((s.chi().re - expected).abs() < 1e-12 * expected);
        assert_eq!(s.dipole_length(), 0.005);
    }

    #[test]
    fn spherical_on_axis() {
        let sc = spherical_from_cartesian(SurfacePoint::new(0.0, 0.0), [6.0, 0.0, 0.0]).unwrap();
        assert!((sc.r - 6.0).abs() < 1e-15);
        assert!((sc.theta - PI / 2.0).abs() < 1e-15);
        // azimuth of -x̂
        assert!((sc.phi - PI).abs() < 1e-15);
    }

    #[test]
    fn spherical_vertical_offset() {
        let sc = spherical_from_cartesian(SurfacePoint::new(0.0, 3.0), [6.0, 0.0, 0.0]).unwrap();
        assert!((sc.r - 45f64.sqrt()).abs() < 1e-14);
        assert!((sc.theta.cos() - 3.0 / 45f64.sqrt()).abs() < 1e-15);
        assert!((sc.phi - PI).abs() < 1e-15);
    }

    #[test]
    fn spherical_horizontal_offset_tan_phi() {
        let sc = spherical_from_cartesian(SurfacePoint::new(3.0, 0.0), [6.0, 0.0, 0.0]).unwrap();
        assert!((sc.phi.tan() + 0.5).abs() < 1e-14);
        assert!(sc.phi > PI / 2.0 && sc.phi < 1.5 * PI);
    }

    #[test]
    fn spherical_degenerate_is_error() {
        // x_C = 0 with the point at the foot of the source
        let err = spherical_from_cartesian(SurfacePoint::new(1.0, 2.0), [0.0, 1.0, 2.0]);
        assert_eq!(err, Err(CrbError::DegenerateGeometry));
    }

    #[test]
    fn green_envelope_and_period() {
        let k = 2.0 * PI / 0.01;
        let g1 = green_scalar(1.0, k, FREE_SPACE_IMPEDANCE).unwrap();
        assert!((g1.norm() - 1.8836515683e4).abs() < 1e-4);
        for r in [0.5, 2.0, 7.3] {
            let g = green_scalar(r, k, FREE_SPACE_IMPEDANCE).unwrap();
            assert!((g.norm() * r - g1.norm()).abs() < 1e-9 * g1.norm());
            let g_next = green_scalar(r + 0.01, k, FREE_SPACE_IMPEDANCE).unwrap();
            let ratio = g_next / g;
            assert!(ratio.arg().abs() < 1e-9, "phase {}", ratio.arg());
        }
        assert!(green_scalar(0.0, k, 1.0).is_err());
        assert!(green_scalar(-1.0, k, 1.0).is_err());
    }

    #[test]
    fn dipole_radiation_vector_values() {
        let (rt, rp) = dipole_radiation_vector(0.0, 0.005, 1.0);
        assert_eq!(rt.norm(), 0.0);
        assert_eq!(rp.norm(), 0.0);
        let (rt, rp) = dipole_radiation_vector(PI / 2.0, 0.005, 1.0);
        assert!((rt.re - 0.005).abs() < 1e-18);
        assert_eq!(rp.norm(), 0.0);
        for i in 0..20 {
            let (_, rp) = dipole_radiation_vector(i as f64 * 0.16, 0.3, 2.0);
            assert_eq!(rp, Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn numeric_radiation_vector_zero_and_point() {
        assert!(radiation_vector_numeric(&[], 0.3, 0.2, 10.0).is_err());
        let zero = [CurrentSample {
            position: [0.1, 0.0, 0.0],
            weighted_current: [Complex64::new(0.0, 0.0); 3],
        }];
        let r = radiation_vector_numeric(&zero, 0.7, 1.1, 100.0).unwrap();
        assert!(r.iter().all(|c| c.norm() == 0.0));

        // point current I l ẑ at the origin
        let (l, i) = (0.005, 1.5);
        let point = uniform_line_current(0.0, 0.0, 1)
            .into_iter()
            .map(|mut s| {
                s.weighted_current[2] = Complex64::new(-i * l, 0.0);
                s
            })
            .collect::<Vec<_>>();
        for theta in [0.2, 0.9, PI / 2.0, 2.5] {
            let r = radiation_vector_numeric(&point, theta, 0.4, 628.0).unwrap();
            let (rt, rp) = project_spherical(r, theta, 0.4);
            assert!((rt.re - l * i * theta.sin()).abs() < 1e-15);
            assert!(rp.norm() < 1e-18);
        }
    }

    #[test]
    fn short_dipole_matches_closed_form() {
        let lambda = 0.01;
        let k = 2.0 * PI / lambda;
        let l = lambda / 100.0;
        let samples = uniform_line_current(l, -1.0, 64);
        // deviation from the ideal dipole is (k l cos θ)² / 24
        for theta in [PI / 4.0, PI / 3.0, 0.4 * PI, PI / 2.0] {
            let r = radiation_vector_numeric(&samples, theta, 1.0, k).unwrap();
            let (rt, rp) = project_spherical(r, theta, 1.0);
            let (ideal, _) = dipole_radiation_vector(theta, l, 1.0);
            assert!(rel(rt, ideal) < 1e-4, "theta {theta}: {}", rel(rt, ideal));
            assert!(rp.norm() < 1e-15);
        }
    }

    #[test]
    fn line_current_discretisation_is_second_order() {
        let lambda = 0.01;
        let k = 2.0 * PI / lambda;
        let l = 0.3 * lambda;
        let theta: f64 = 0.6;
        let u = k * theta.cos() * l / 2.0;
        let exact = -l * u.sin() / u * -theta.sin();
        let err = |n| {
            let r = radiation_vector_numeric(&uniform_line_current(l, -1.0, n), theta, 0.0, k)
                .unwrap();
            (project_spherical(r, theta, 0.0).0.re - exact).abs()
        };
        let (e1, e2, e3) = (err(4), err(8), err(16));
        let order1 = (e1 / e2).log2();
        let order2 = (e2 / e3).log2();
        assert!(order1 >= 1.9 && order2 >= 1.9, "orders {order1} {order2}");
    }

    #[test]
    fn field_from_radiation_trivial_cases() {
        let sc = spherical_from_cartesian(SurfacePoint::new(0.3, -0.2), [6.0, 0.0, 0.0]).unwrap();
        let z = Complex64::new(0.0, 0.0);
        let f = field_from_radiation(sc, z, z, 628.0, FREE_SPACE_IMPEDANCE).unwrap();
        assert_eq!(f.norm_sqr(), 0.0);

        let sc = spherical_from_cartesian(SurfacePoint::new(0.7, 0.0), [6.0, 0.0, 0.0]).unwrap();
        let rt = Complex64::new(0.01, 0.0);
        let f = field_from_radiation(sc, rt, z, 628.0, FREE_SPACE_IMPEDANCE).unwrap();
        let g = green_scalar(sc.r, 628.0, FREE_SPACE_IMPEDANCE).unwrap();
        assert!(f.ex.norm() < 1e-12 * g.norm());
        assert!(f.ey.norm() < 1e-12 * g.norm());
        assert!(rel(f.ez, -g * rt) < 1e-14);
    }

    #[test]
    fn two_field_paths_agree() {
        let (eta, i_in, l) = (FREE_SPACE_IMPEDANCE, 0.8, 0.004);
        let s = DipoleScenario::from_current(0.01, eta, i_in, l, [4.0, 0.3, -0.5], 3.0, 1.0)
            .unwrap();
        let k = s.wavenumber();
        let pts = [
            (0.0, 0.0),
            (1.2, -0.4),
            (-1.5, 1.5),
            (0.3, -0.5),
            (-0.9, 0.2),
            (1.4, 1.1),
            (-0.1, -1.3),
            (0.8, 0.9),
            (-1.1, -0.7),
            (0.25, 1.45),
        ];
        for (y, z) in pts {
            let p = SurfacePoint::new(y, z);
            let direct = dipole_field(p, &s).unwrap();
            let sc = spherical_from_cartesian(p, s.source()).unwrap();
            let (rt, rp) = dipole_radiation_vector(sc.theta, l, i_in);
            let via = field_from_radiation(sc, rt, rp, k, eta).unwrap();
            let scale = direct.norm();
            for (a, b) in direct.as_array().iter().zip(via.as_array()) {
                assert!((a - b).norm() <= 1e-12 * scale, "{p:?}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn dipole_field_zero_sets_and_axis() {
        let s = fig3().with_source([6.0, 0.4, -0.3]).unwrap();
        let f = dipole_field(SurfacePoint::new(1.1, -0.3), &s).unwrap();
        assert_eq!(f.ex.norm(), 0.0);
        assert_eq!(f.ey.norm(), 0.0);
        let f = dipole_field(SurfacePoint::new(0.4, 1.2), &s).unwrap();
        assert_eq!(f.ey.norm(), 0.0);
        assert!(f.ex.norm() > 0.0);

        let f = dipole_field(SurfacePoint::new(0.4, -0.3), &s).unwrap();
        let k = s.wavenumber();
        let expected = J * s.chi() * Complex64::cis(-k * 6.0) / 6.0;
        assert!(rel(f.ez, expected) < 1e-14);
    }

    #[test]
    fn on_axis_field_decays_as_inverse_distance() {
        let s = fig3();
        let near = dipole_field(SurfacePoint::new(0.0, 0.0), &s).unwrap().norm();
        let s2 = s.with_source([12.0, 0.0, 0.0]).unwrap();
        let far = dipole_field(SurfacePoint::new(0.0, 0.0), &s2).unwrap().norm();
        assert!((far / near - 0.5).abs() < 1e-10);
    }

    #[test]
    fn scalar_field_properties() {
        let s = fig3();
        let e = scalar_poynting_field(SurfacePoint::new(0.0, 0.0), &s).unwrap();
        assert!((e.norm_sqr() - 1.0 / 36.0).abs() < 1e-15);

        let s3 = s.with_chi(Complex64::new(3.0, 0.0)).unwrap();
        let p = SurfacePoint::new(0.7, -1.2);
        let e1 = scalar_poynting_field(p, &s).unwrap();
        let e3 = scalar_poynting_field(p, &s3).unwrap();
        assert!(rel(e3, 3.0 * e1) < 1e-14);

        // E and e_z carry the same propagation phase up to the constant j
        for (y, z) in [(0.0, 0.0), (0.9, -1.3), (-1.4, 0.2), (0.5, 0.5)] {
            let p = SurfacePoint::new(y, z);
            let e = scalar_poynting_field(p, &s).unwrap();
            let ez = dipole_field(p, &s).unwrap().ez;
            let offset = (ez / e).arg();
            assert!((offset - PI / 2.0).abs() < 1e-9, "offset {offset}");
        }
    }

    #[test]
    fn scalar_general_form_matches_dipole_form() {
        let (eta, i_in, l) = (FREE_SPACE_IMPEDANCE, 1.0, 0.005);
        let s = DipoleScenario::from_current(0.01, eta, i_in, l, [5.0, 0.2, 0.1], 3.0, 1.0)
            .unwrap();
        for (y, z) in [(0.0, 0.0), (1.2, -0.4), (-1.5, 1.5)] {
            let p = SurfacePoint::new(y, z);
            let sc = spherical_from_cartesian(p, s.source()).unwrap();
            let (rt, rp) = dipole_radiation_vector(sc.theta, l, i_in);
            let general = scalar_field_from_radiation(sc, rt, rp, s.wavenumber(), eta).unwrap();
            let dipole = scalar_poynting_field(p, &s).unwrap();
            assert!(rel(general, dipole) < 1e-12);
        }
    }

    #[test]
    fn far_field_examples() {
        let s = fig3().with_dipole_length(0.005).unwrap();
        let rep = far_field_check(&s, DEFAULT_FAR_FIELD_FACTOR);
        assert!(rep.valid);
        assert!((rep.nearest_distance - 6.0).abs() < 1e-15);
        assert!((rep.size_margin - 120.0).abs() < 1e-9);
        assert!((rep.fraunhofer_margin - 120.0).abs() < 1e-9);

        let ideal = fig3();
        assert!(far_field_check(&ideal, 1e6).valid);

        let long = fig3().with_dipole_length(1.0).unwrap();
        let rep = far_field_check(&long, 10.0);
        assert!(!rep.valid);
        assert!(rep.fraunhofer_margin < 1.0);
    }

    #[test]
    fn far_field_uses_nearest_surface_point() {
        let s = fig3().with_source([4.0, 3.5, 0.0]).unwrap();
        let rep = far_field_check(&s, 10.0);
        assert!((rep.nearest_distance - (16.0f64 + 4.0).sqrt()).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn spherical_round_trip(
            y in -5.0f64..5.0, z in -5.0f64..5.0,
            xc in 0.01f64..20.0, yc in -3.0f64..3.0, zc in -3.0f64..3.0,
        ) {
            let src = [xc, yc, zc];
            let sc = spherical_from_cartesian(SurfacePoint::new(y, z), src).unwrap();
            let back = sc.to_surface_point(src);
            let scale = sc.r;
            prop_assert!((back.y - y).abs() <= 1e-12 * scale);
            prop_assert!((back.z - z).abs() <= 1e-12 * scale);
            prop_assert!((sc.to_offset()[0] + xc).abs() <= 1e-12 * scale);
            prop_assert!((sc.phi.tan() + (y - yc) / xc).abs() <= 1e-9 * (1.0 + sc.phi.tan().abs()));
        }
    }
}
