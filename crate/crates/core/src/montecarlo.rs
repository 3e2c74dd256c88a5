//! Monte Carlo check of the bounds with a maximum-likelihood estimator.
//!
//! The continuous observation is discretised on an `n × n` grid of cell centres.
//! White noise of level `σ²` averaged over a cell of area `ΔA` has real and
//! imaginary parts that are each `N(0, σ²/ΔA)`, independently per component and
//! cell. The log-likelihood is then
//!
//! ```text
//! ℓ(c) = -(ΔA / 2σ²) Σ_cells ‖ξ − e(c)‖²
//! ```
//!
//! whose expected curvature at the truth is the Riemann sum
//! `(ΔA/σ²) Σ Re ∂eᴴ∂e` of the continuous Fisher information, so the discrete
//! experiment carries the same information as the integral it approximates.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{CrbError, Result};
use crate::fieldmodel::{dipole_field, scalar_poynting_field, DipoleScenario, SurfacePoint};
use crate::fim::{
    crb_cpl, crb_from_fim, fim_scalar_field, fim_vector_field, field_jacobian_analytic,
    scalar_field_gradient, CrbTriple, FisherMatrix,
};
use crate::quadrature::QuadratureConfig;

/// Smallest accepted grid resolution.
pub const MIN_GRID_POINTS: usize = 8;
/// Smallest accepted campaign size.
pub const MIN_TRIALS: usize = 100;
/// Fraction of failed trials above which a report is flagged unreliable.
pub const UNRELIABLE_FAILURE_FRACTION: f64 = 0.1;

/// Which field is observed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObservationModel {
    /// The three Cartesian components of the electric field.
    Vector,
    /// The scalar power-flux field.
    Scalar,
}

impl ObservationModel {
    pub fn components(self) -> usize {
        match self {
            ObservationModel::Vector => 3,
            ObservationModel::Scalar => 1,
        }
    }
}

/// Cell-centred sampling grid over the observation square.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceGrid {
    n_per_axis: usize,
    side: f64,
}

impl SurfaceGrid {
    pub fn new(n_per_axis: usize, side: f64) -> Result<Self> {
        if n_per_axis < MIN_GRID_POINTS {
            return Err(CrbError::InvalidConfig(format!(
                "grid needs at least {MIN_GRID_POINTS} points per axis, got {n_per_axis}"
            )));
        }
        if !(side > 0.0 && side.is_finite()) {
            return Err(CrbError::InvalidConfig(format!(
                "surface side must be positive, got {side}"
            )));
        }
        Ok(SurfaceGrid { n_per_axis, side })
    }

    pub fn for_scenario(scenario: &DipoleScenario, n_per_axis: usize) -> Result<Self> {
        Self::new(n_per_axis, scenario.surface_side())
    }

    pub fn n_per_axis(&self) -> usize {
        self.n_per_axis
    }

    pub fn len(&self) -> usize {
        self.n_per_axis * self.n_per_axis
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.side / self.n_per_axis as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.spacing().powi(2)
    }

    /// Cell centres, row-major in `y` then `z`.
    pub fn points(&self) -> impl Iterator<Item = SurfacePoint> + '_ {
        let d = self.spacing();
        let lo = -0.5 * self.side + 0.5 * d;
        (0..self.n_per_axis).flat_map(move |i| {
            (0..self.n_per_axis)
                .map(move |j| SurfacePoint::new(lo + i as f64 * d, lo + j as f64 * d))
        })
    }
}

/// One noisy realisation of the discretised observation.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisyObservation {
    pub model: ObservationModel,
    /// `components()` values per grid point, in grid order.
    pub samples: Vec<Complex64>,
    pub seed: u64,
    pub stream: u64,
}

/// Noise-free field of `model` for a source at `scenario.source()`, flattened
/// in grid order.
pub fn model_field(
    scenario: &DipoleScenario,
    grid: &SurfaceGrid,
    model: ObservationModel,
) -> Result<Vec<Complex64>> {
    let mut out = Vec::with_capacity(grid.len() * model.components());
    for p in grid.points() {
        match model {
            ObservationModel::Vector => out.extend(dipole_field(p, scenario)?.as_array()),
            ObservationModel::Scalar => out.push(scalar_poynting_field(p, scenario)?),
        }
    }
    Ok(out)
}

/// Per-trial generator: `seed` selects the campaign, `stream` the trial.
pub fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws `ξ = e + n` on the grid.
pub fn sample_observation(
    scenario: &DipoleScenario,
    grid: &SurfaceGrid,
    model: ObservationModel,
    seed: u64,
    stream: u64,
) -> Result<NoisyObservation> {
    let mut samples = model_field(scenario, grid, model)?;
    let std = (scenario.noise_sigma2() / grid.cell_area()).sqrt();
    let mut rng = trial_rng(seed, stream);
    for s in samples.iter_mut() {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *s += Complex64::new(re, im) * std;
    }
    Ok(NoisyObservation {
        model,
        samples,
        seed,
        stream,
    })
}

fn sum_sq_residual(
    reference: &[Complex64],
    candidate: [f64; 3],
    scenario: &DipoleScenario,
    grid: &SurfaceGrid,
    model: ObservationModel,
) -> Result<f64> {
    if !(candidate[0] > 0.0) {
        return Err(CrbError::Domain(format!(
            "candidate x_C must be positive, got {}",
            candidate[0]
        )));
    }
    let s = scenario.with_source(candidate)?;
    let c = model.components();
    let mut acc = 0.0;
    for (p, obs) in grid.points().zip(reference.chunks_exact(c)) {
        match model {
            ObservationModel::Vector => {
                let e = dipole_field(p, &s)?.as_array();
                acc += (obs[0] - e[0]).norm_sqr() + (obs[1] - e[1]).norm_sqr() + (obs[2] - e[2]).norm_sqr();
            }
            ObservationModel::Scalar => acc += (obs[0] - scalar_poynting_field(p, &s)?).norm_sqr(),
        }
    }
    Ok(acc)
}

/// `ℓ(candidate) = -(ΔA/2σ²) Σ ‖ξ − e(candidate)‖²`.
pub fn loglikelihood(
    obs: &NoisyObservation,
    candidate: [f64; 3],
    scenario: &DipoleScenario,
    grid: &SurfaceGrid,
) -> Result<f64> {
    let ss = sum_sq_residual(&obs.samples, candidate, scenario, grid, obs.model)?;
    Ok(-grid.cell_area() / (2.0 * scenario.noise_sigma2()) * ss)
}

/// Negative Hessian of the expected log-likelihood at the true source, by
/// central differences with step `h`.
pub fn expected_loglik_hessian(
    scenario: &DipoleScenario,
    grid: &SurfaceGrid,
    model: ObservationModel,
    h: f64,
) -> Result<FisherMatrix> {
    // E ℓ(c) = -(ΔA/2σ²) Σ ‖e(truth) − e(c)‖² + const
    let truth = scenario.source();
    let reference = model_field(scenario, grid, model)?;
    let d = |dm: [f64; 3]| {
        let c = [truth[0] + dm[0], truth[1] + dm[1], truth[2] + dm[2]];
        sum_sq_residual(&reference, c, scenario, grid, model)
    };
    let scale = grid.cell_area() / (2.0 * scenario.noise_sigma2());
    let unit = |m: usize, v: f64| {
        let mut e = [0.0; 3];
        e[m] = v;
        e
    };
    let mut out = [[0.0; 3]; 3];
    for m in 0..3 {
        out[m][m] = scale * (d(unit(m, h))? + d(unit(m, -h))?) / (h * h);
        for n in (m + 1)..3 {
            let at = |a: f64, b: f64| {
                let mut e = unit(m, a);
                e[n] = b;
                d(e)
            };
            let v = scale * (at(h, h)? - at(h, -h)? - at(-h, h)? + at(-h, -h)?) / (4.0 * h * h);
            out[m][n] = v;
            out[n][m] = v;
        }
    }
    Ok(FisherMatrix(out))
}

/// Riemann-sum Fisher information `(ΔA/σ²) Σ Re ∂eᴴ∂e` on the grid.
pub fn discrete_fim(
    scenario: &DipoleScenario,
    grid: &SurfaceGrid,
    model: ObservationModel,
) -> Result<FisherMatrix> {
    let mut f = [[0.0; 3]; 3];
    for p in grid.points() {
        let rows: Vec<[Complex64; 3]> = match model {
            ObservationModel::Vector => field_jacobian_analytic(p, scenario)?.0.to_vec(),
            ObservationModel::Scalar => vec![scalar_field_gradient(p, scenario)?],
        };
        for row in &rows {
            for m in 0..3 {
                for n in 0..3 {
                    f[m][n] += (row[m] * row[n].conj()).re;
                }
            }
        }
    }
    Ok(FisherMatrix(f).scaled(grid.cell_area() / scenario.noise_sigma2()))
}

/// Search settings for [`mle_estimate`]. The box is centred on the true source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    /// Half-widths of the coarse box per axis, metres.
    pub half_width: [f64; 3],
    /// Coarse grid points per axis.
    pub coarse_points: [usize; 3],
    /// Best coarse points refined locally.
    pub candidates: usize,
    /// Simplex diameter at which refinement stops, metres.
    pub tolerance: f64,
    /// Refinement iterations per candidate before giving up.
    pub max_iterations: usize,
}

impl SearchConfig {
    /// Box of `±1.5λ` in `x_C` and `±4λ` in `y_C, z_C`.
    ///
    /// The carrier phase makes the likelihood oscillate with period `λ` along
    /// `x_C`, so the coarse spacing stays at `λ/4` there.
    pub fn for_scenario(scenario: &DipoleScenario) -> Self {
        let l = scenario.wavelength();
        SearchConfig {
            half_width: [1.5 * l, 4.0 * l, 4.0 * l],
            coarse_points: [13, 9, 9],
            candidates: 3,
            tolerance: 1e-6,
            max_iterations: 2000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.half_width.iter().any(|w| !(*w > 0.0)) {
            return Err(CrbError::InvalidConfig("search half-widths must be positive".into()));
        }
        if self.coarse_points.iter().any(|n| *n < 2) {
            return Err(CrbError::InvalidConfig("coarse grid needs at least 2 points per axis".into()));
        }
        if self.candidates == 0 || !(self.tolerance > 0.0) || self.max_iterations == 0 {
            return Err(CrbError::InvalidConfig(
                "candidates, tolerance and max_iterations must be positive".into(),
            ));
        }
        Ok(())
    }

    fn spacing(&self) -> [f64; 3] {
        [0, 1, 2].map(|i| 2.0 * self.half_width[i] / (self.coarse_points[i] - 1) as f64)
    }
}

/// Outcome of one maximum-likelihood search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MleResult {
    pub estimate: [f64; 3],
    pub loglik: f64,
    pub converged: bool,
    pub evaluations: usize,
}

/// Coarse grid search over the box followed by Nelder-Mead refinement of the
/// best few grid points.
pub fn mle_estimate(
    obs: &NoisyObservation,
    scenario: &DipoleScenario,
    grid: &SurfaceGrid,
    search: &SearchConfig,
) -> Result<MleResult> {
    search.validate()?;
    let center = scenario.source();
    let spacing = search.spacing();
    let mut evaluations = 0usize;
    let mut objective = |c: [f64; 3]| -> f64 {
        evaluations += 1;
        sum_sq_residual(&obs.samples, c, scenario, grid, obs.model).unwrap_or(f64::INFINITY)
    };

    let [nx, ny, nz] = search.coarse_points;
    let mut coarse = Vec::with_capacity(nx * ny * nz);
    for i in 0..nx {
        for j in 0..ny {
            for l in 0..nz {
                let c = [
                    center[0] - search.half_width[0] + i as f64 * spacing[0],
                    center[1] - search.half_width[1] + j as f64 * spacing[1],
                    center[2] - search.half_width[2] + l as f64 * spacing[2],
                ];
                coarse.push((objective(c), c));
            }
        }
    }
    coarse.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut best: Option<(f64, [f64; 3], bool)> = None;
    for &(_, start) in coarse.iter().take(search.candidates) {
        let (value, point, converged) = nelder_mead(
            &mut objective,
            start,
            spacing.map(|s| 0.5 * s),
            search.tolerance,
            search.max_iterations,
        );
        if best.is_none_or(|b| value < b.0) {
            best = Some((value, point, converged));
        }
    }
    let (value, estimate, converged) = best.expect("at least one candidate");
    Ok(MleResult {
        estimate,
        loglik: -grid.cell_area() / (2.0 * scenario.noise_sigma2()) * value,
        converged,
        evaluations,
    })
}

/// Minimises `f` from `start` with an initial simplex of per-axis size `step`.
/// Stops once every vertex lies within `tol` of the best one.
fn nelder_mead(
    f: &mut impl FnMut([f64; 3]) -> f64,
    start: [f64; 3],
    step: [f64; 3],
    tol: f64,
    max_iter: usize,
) -> (f64, [f64; 3], bool) {
    let mut simplex: Vec<([f64; 3], f64)> = Vec::with_capacity(4);
    simplex.push((start, f(start)));
    for i in 0..3 {
        let mut v = start;
        v[i] += step[i];
        simplex.push((v, f(v)));
    }
    let lerp = |a: [f64; 3], b: [f64; 3], t: f64| [0, 1, 2].map(|i| a[i] + t * (b[i] - a[i]));

    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].0;
        let diameter = simplex[1..]
            .iter()
            .map(|(v, _)| {
                (0..3)
                    .map(|i| (v[i] - best[i]).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max);
        if diameter < tol {
            return (simplex[0].1, best, true);
        }
        let centroid = [0, 1, 2].map(|i| simplex[..3].iter().map(|(v, _)| v[i]).sum::<f64>() / 3.0);
        let (worst, f_worst) = simplex[3];
        let reflected = lerp(centroid, worst, -1.0);
        let f_r = f(reflected);
        if f_r < simplex[0].1 {
            let expanded = lerp(centroid, worst, -2.0);
            let f_e = f(expanded);
            simplex[3] = if f_e < f_r { (expanded, f_e) } else { (reflected, f_r) };
        } else if f_r < simplex[2].1 {
            simplex[3] = (reflected, f_r);
        } else {
            let (contracted, f_c) = if f_r < f_worst {
                let c = lerp(centroid, reflected, 0.5);
                (c, f(c))
            } else {
                let c = lerp(centroid, worst, 0.5);
                (c, f(c))
            };
            if f_c < f_worst.min(f_r) {
                simplex[3] = (contracted, f_c);
            } else {
                for k in 1..4 {
                    let v = lerp(best, simplex[k].0, 0.5);
                    simplex[k] = (v, f(v));
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    (simplex[0].1, simplex[0].0, false)
}

/// Per-coordinate summary of a campaign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoordinateStats {
    /// Mean squared error over converged trials, m².
    pub mse: f64,
    /// Mean error, m.
    pub bias: f64,
    /// Standard error of `mse`, m².
    pub mse_std_error: f64,
    /// Bound used for comparison, m².
    pub crb: f64,
    /// `mse / crb`.
    pub efficiency: f64,
}

/// One trial of a campaign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialRecord {
    pub index: u64,
    pub estimate: [f64; 3],
    pub error: [f64; 3],
    pub loglik: f64,
    pub converged: bool,
}

/// Where the reference bound came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrbSource {
    /// Closed-form-free CPL integrals.
    Cpl,
    /// Inverse of the full quadrature Fisher matrix.
    Fim,
}

impl CrbSource {
    pub fn label(self) -> &'static str {
        match self {
            CrbSource::Cpl => "cpl",
            CrbSource::Fim => "fim",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McReport {
    pub n_trials: usize,
    pub failures: usize,
    /// More than 10% of trials failed to converge.
    pub unreliable: bool,
    pub seed: u64,
    pub model: ObservationModel,
    pub crb: CrbTriple,
    pub crb_source: CrbSource,
    /// `|χ|²/σ²`.
    pub snr: f64,
    /// Mean per-cell, per-component signal power over the per-component noise
    /// variance `2σ²/ΔA` of the discretised observation.
    pub effective_snr: f64,
    pub coordinates: [CoordinateStats; 3],
    pub trials: Vec<TrialRecord>,
}

/// Campaign settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CampaignConfig {
    pub model: ObservationModel,
    pub n_trials: usize,
    pub seed: u64,
    pub search: SearchConfig,
}

/// Runs `n_trials` independent trials and compares the empirical errors with
/// the bound.
pub fn run_campaign(
    scenario: &DipoleScenario,
    grid: &SurfaceGrid,
    cfg: &CampaignConfig,
    quad: &QuadratureConfig,
) -> Result<McReport> {
    if cfg.n_trials < MIN_TRIALS {
        return Err(CrbError::InvalidConfig(format!(
            "a campaign needs at least {MIN_TRIALS} trials, got {}",
            cfg.n_trials
        )));
    }
    cfg.search.validate()?;
    let (crb, crb_source) = match cfg.model {
        ObservationModel::Vector if scenario.is_cpl() => (crb_cpl(scenario, quad)?, CrbSource::Cpl),
        ObservationModel::Vector => (crb_from_fim(&fim_vector_field(scenario, quad)?.value)?, CrbSource::Fim),
        ObservationModel::Scalar => (crb_from_fim(&fim_scalar_field(scenario, quad)?.value)?, CrbSource::Fim),
    };

    let truth = scenario.source();
    let trials = (0..cfg.n_trials as u64)
        .into_par_iter()
        .map(|index| -> Result<TrialRecord> {
            let obs = sample_observation(scenario, grid, cfg.model, cfg.seed, index)?;
            let res = mle_estimate(&obs, scenario, grid, &cfg.search)?;
            Ok(TrialRecord {
                index,
                estimate: res.estimate,
                error: [0, 1, 2].map(|i| res.estimate[i] - truth[i]),
                loglik: res.loglik,
                converged: res.converged,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let ok: Vec<&TrialRecord> = trials.iter().filter(|t| t.converged).collect();
    let failures = trials.len() - ok.len();
    let crb_arr = crb.as_array();
    let coordinates = [0, 1, 2].map(|i| {
        let n = ok.len() as f64;
        let sq: Vec<f64> = ok.iter().map(|t| t.error[i].powi(2)).collect();
        let mse = sq.iter().sum::<f64>() / n;
        let bias = ok.iter().map(|t| t.error[i]).sum::<f64>() / n;
        let var_sq = sq.iter().map(|v| (v - mse).powi(2)).sum::<f64>() / (n - 1.0);
        CoordinateStats {
            mse,
            bias,
            mse_std_error: (var_sq / n).sqrt(),
            crb: crb_arr[i],
            efficiency: mse / crb_arr[i],
        }
    });

    let clean = model_field(scenario, grid, cfg.model)?;
    let signal = clean.iter().map(|c| c.norm_sqr()).sum::<f64>() / clean.len() as f64;
    let effective_snr = signal / (2.0 * scenario.noise_sigma2() / grid.cell_area());

    Ok(McReport {
        n_trials: cfg.n_trials,
        failures,
        unreliable: failures as f64 > UNRELIABLE_FAILURE_FRACTION * cfg.n_trials as f64,
        seed: cfg.seed,
        model: cfg.model,
        crb,
        crb_source,
        snr: scenario.snr(),
        effective_snr,
        coordinates,
        trials,
    })
}
