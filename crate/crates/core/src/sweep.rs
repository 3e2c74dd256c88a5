//! Bounds along a one-parameter family of CPL scenarios.

use rayon::prelude::*;

use crate::closedform::{i1_closed, i3_bounds, i5_bounds, i6_closed, RhoGeometry};
use crate::error::{CrbError, Result};
use crate::fieldmodel::DipoleScenario;
use crate::fim::{crb_cpl, crb_from_fim, fim_scalar_field, CrbTriple};
use crate::quadrature::QuadratureConfig;

/// Points of a sweep, evenly spaced on a linear or logarithmic scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepGrid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
    pub log: bool,
}

impl SweepGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite()) || self.min > self.max {
            return Err(CrbError::InvalidConfig(format!(
                "sweep range [{}, {}] is empty",
                self.min, self.max
            )));
        }
        if self.points == 0 || (self.points == 1 && self.min != self.max) {
            return Err(CrbError::InvalidConfig(
                "a sweep over a range needs at least two points".into(),
            ));
        }
        if self.log && !(self.min > 0.0) {
            return Err(CrbError::InvalidConfig(
                "a logarithmic sweep needs a positive minimum".into(),
            ));
        }
        Ok(())
    }

    /// Grid values in increasing order.
    pub fn values(&self) -> Result<Vec<f64>> {
        self.validate()?;
        if self.points == 1 {
            return Ok(vec![self.min]);
        }
        let n = (self.points - 1) as f64;
        Ok((0..self.points)
            .map(|i| {
                let t = i as f64 / n;
                if i == self.points - 1 {
                    self.max
                } else if self.log {
                    self.min * (self.max / self.min).powf(t)
                } else {
                    self.min + t * (self.max - self.min)
                }
            })
            .collect())
    }
}

/// Which optional columns a sweep computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SweepOptions {
    /// Bounds for the scalar power-flux observation.
    pub scalar: bool,
    /// Closed-form bounds.
    pub closed_form: bool,
}

/// Closed-form columns of a sweep row, all in m².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormColumns {
    /// `SNR⁻¹/ℐ1`, the large-distance value of `CRB(x_C)`.
    pub crb_x_approx: f64,
    /// `CRB(y_C)` without `ℐ4`, bracketed by the `ℐ3` bounds.
    pub crb_y_lower: f64,
    pub crb_y_upper: f64,
    /// `CRB(z_C)` with closed-form `ℐ6`, bracketed by the `ℐ5` bounds.
    pub crb_z_lower: f64,
    pub crb_z_upper: f64,
}

impl ClosedFormColumns {
    pub fn for_scenario(s: &DipoleScenario) -> Self {
        let g = RhoGeometry::from_scenario(s);
        let snr = s.snr();
        let b3 = i3_bounds(&g);
        let b5 = i5_bounds(&g);
        let i6 = i6_closed(&g);
        ClosedFormColumns {
            crb_x_approx: 1.0 / (snr * i1_closed(&g)),
            crb_y_lower: 1.0 / (snr * b3.upper),
            crb_y_upper: 1.0 / (snr * b3.lower),
            crb_z_lower: 1.0 / (snr * (b5.upper + i6)),
            crb_z_upper: 1.0 / (snr * (b5.lower + i6)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    /// Swept value: `L²` in m² or `x_C` in m.
    pub value: f64,
    pub crb: CrbTriple,
    pub scalar: Option<CrbTriple>,
    pub closed_form: Option<ClosedFormColumns>,
}

fn row(value: f64, s: &DipoleScenario, opts: SweepOptions, quad: &QuadratureConfig) -> Result<SweepRow> {
    let scalar = if opts.scalar {
        Some(crb_from_fim(&fim_scalar_field(s, quad)?.value)?)
    } else {
        None
    };
    Ok(SweepRow {
        value,
        crb: crb_cpl(s, quad)?,
        scalar,
        closed_form: opts.closed_form.then(|| ClosedFormColumns::for_scenario(s)),
    })
}

fn run<F>(base: &DipoleScenario, values: &[f64], opts: SweepOptions, quad: &QuadratureConfig, make: F) -> Result<Vec<SweepRow>>
where
    F: Fn(f64) -> Result<DipoleScenario> + Sync,
{
    if !base.is_cpl() {
        let [_, y_c, z_c] = base.source();
        return Err(CrbError::NotCpl { y_c, z_c });
    }
    quad.validate()?;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted
        .par_iter()
        .map(|&v| row(v, &make(v)?, opts, quad))
        .collect()
}

/// Bounds as a function of the surface area `L²`.
pub fn sweep_area(
    base: &DipoleScenario,
    areas: &[f64],
    opts: SweepOptions,
    quad: &QuadratureConfig,
) -> Result<Vec<SweepRow>> {
    run(base, areas, opts, quad, |a| base.with_surface_side(a.sqrt()))
}

/// Bounds as a function of the source distance `x_C`.
pub fn sweep_distance(
    base: &DipoleScenario,
    distances: &[f64],
    opts: SweepOptions,
    quad: &QuadratureConfig,
) -> Result<Vec<SweepRow>> {
    run(base, distances, opts, quad, |x| base.with_source([x, 0.0, 0.0]))
}

/// Whether `ys` is strictly increasing (`increasing`) or strictly decreasing.
pub fn is_monotone(ys: &[f64], increasing: bool) -> bool {
    ys.windows(2)
        .all(|w| if increasing { w[1] > w[0] } else { w[1] < w[0] })
}

/// First abscissa at which the log-log slope of `ys(xs)` reaches `target`,
/// interpolated linearly in `ln x` between the midpoints of adjacent intervals.
pub fn log_slope_crossing(xs: &[f64], ys: &[f64], target: f64) -> Option<f64> {
    let slopes: Vec<(f64, f64)> = xs
        .windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| {
            let lx = 0.5 * (x[0].ln() + x[1].ln());
            (lx, (y[1] / y[0]).ln() / (x[1] / x[0]).ln())
        })
        .collect();
    if let Some(&(lx, s)) = slopes.first() {
        if s >= target {
            return Some(lx.exp());
        }
    }
    slopes.windows(2).find_map(|w| {
        let ((l0, s0), (l1, s1)) = (w[0], w[1]);
        (s0 < target && s1 >= target).then(|| (l0 + (target - s0) / (s1 - s0) * (l1 - l0)).exp())
    })
}
