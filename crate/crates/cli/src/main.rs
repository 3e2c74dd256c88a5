//! `nfcrb`: bounds on locating a dipole from its field over a square surface.

mod config;
mod output;
mod plot;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use nearfield_crb::closedform::asymptotic_limits;
use nearfield_crb::fieldmodel::DipoleScenario;
use nearfield_crb::montecarlo::{run_campaign, CampaignConfig, ObservationModel, SurfaceGrid};
use nearfield_crb::quadrature::QuadratureConfig;
use nearfield_crb::sweep::{sweep_area, sweep_distance, SweepGrid, SweepOptions, SweepRow};
use nearfield_crb::validation::run_validation;

use config::{Loaded, SweepVariable};
use output::{num, Csv};
use plot::{Series, GREY, PALETTE};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = "nfcrb", version, about = "Cramér-Rao bounds for near-field dipole localisation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bounds as a function of the surface area L².
    SweepArea(SweepArgs),
    /// Bounds as a function of the source distance x_C.
    SweepDistance(SweepArgs),
    /// Run the oracle checks; exits nonzero if any fails.
    Validate {
        /// Also write the report as CSV into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Maximum-likelihood Monte Carlo campaign against the bound.
    Montecarlo {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Overrides `montecarlo.trials`.
        #[arg(long)]
        trials: Option<usize>,
        /// Overrides `montecarlo.seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Add bounds for the scalar power-flux observation.
    #[arg(long)]
    compare_scalar: bool,
    /// Add closed-form bound columns.
    #[arg(long)]
    closed_form: bool,
}

fn metadata(command: &str, loaded: &Loaded, extra: &[(&'static str, String)]) -> Vec<(&'static str, String)> {
    let s = &loaded.scenario;
    let mut m = vec![
        ("tool", format!("nfcrb {VERSION}")),
        ("command", command.to_string()),
        ("config_sha256", loaded.hash.clone()),
        ("wavelength_m", num(s.wavelength())),
        ("x_c_m", num(s.source()[0])),
        ("side_m", num(s.surface_side())),
        ("chi_abs_v", num(s.chi().norm())),
        ("sigma2_v2", num(s.noise_sigma2())),
        ("snr", num(s.snr())),
        ("snr_db", format!("{:.4}", 10.0 * s.snr().log10())),
    ];
    m.extend_from_slice(extra);
    m
}

fn sweep_header(first: &[&'static str], opts: SweepOptions) -> Vec<&'static str> {
    let mut h = first.to_vec();
    h.extend(["crb_x_m2", "crb_y_m2", "crb_z_m2"]);
    if opts.scalar {
        h.extend(["scalar_crb_x_m2", "scalar_crb_y_m2", "scalar_crb_z_m2"]);
    }
    if opts.closed_form {
        h.extend([
            "cf_crb_x_m2",
            "cf_crb_y_lower_m2",
            "cf_crb_y_upper_m2",
            "cf_crb_z_lower_m2",
            "cf_crb_z_upper_m2",
        ]);
    }
    h
}

fn sweep_fields(r: &SweepRow) -> Vec<String> {
    let mut f: Vec<String> = r.crb.as_array().iter().map(|v| num(*v)).collect();
    if let Some(s) = r.scalar {
        f.extend(s.as_array().iter().map(|v| num(*v)));
    }
    if let Some(c) = r.closed_form {
        f.extend(
            [c.crb_x_approx, c.crb_y_lower, c.crb_y_upper, c.crb_z_lower, c.crb_z_upper]
                .iter()
                .map(|v| num(*v)),
        );
    }
    f
}

fn grid_from(loaded: &Loaded, want: SweepVariable, default: SweepGrid, other_command: &str) -> Result<SweepGrid> {
    match (&loaded.file.sweep, loaded.sweep_grid()) {
        (Some(s), Some(g)) if s.variable == want => Ok(g),
        (Some(_), _) => bail!("the scenario's [sweep] section sweeps another variable; use `{other_command}`"),
        _ => Ok(default),
    }
}

fn prepare_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

fn options(args: &SweepArgs) -> SweepOptions {
    SweepOptions {
        scalar: args.compare_scalar,
        closed_form: args.closed_form,
    }
}

const COORDS: [&str; 3] = ["x_C", "y_C", "z_C"];

fn cmd_sweep_area(args: &SweepArgs) -> Result<()> {
    let loaded = config::load(&args.scenario)?;
    let grid = grid_from(
        &loaded,
        SweepVariable::SurfaceArea,
        SweepGrid { min: 1.0, max: 25.0, points: 25, log: false },
        "sweep-distance",
    )?;
    let opts = options(args);
    let s = &loaded.scenario;
    let rows = sweep_area(s, &grid.values()?, opts, &loaded.quadrature)?;
    let limit = asymptotic_limits(s.wavelength(), s.snr())?.limit_x;

    prepare_out(&args.out)?;
    let mut header = sweep_header(&["area_m2", "side_m", "rho"], opts);
    header.push("asymptote_x_m2");
    let meta = metadata(
        "sweep-area",
        &loaded,
        &[("grid", format!("{} to {} m^2, {} points, log {}", grid.min, grid.max, grid.points, grid.log))],
    );
    let mut csv = Csv::new(&meta, &header);
    for r in &rows {
        let side = r.value.sqrt();
        let mut f = vec![num(r.value), num(side), num(side / s.source()[0])];
        f.extend(sweep_fields(r));
        f.push(num(limit));
        csv.row(&f);
    }
    let csv_path = args.out.join("sweep_area.csv");
    csv.write(&csv_path)?;

    let mut series = Vec::new();
    for (i, name) in COORDS.iter().enumerate() {
        series.push(Series {
            label: format!("CRB({name})"),
            points: rows.iter().map(|r| (r.value, r.crb.as_array()[i])).collect(),
            color: PALETTE[i],
            dashed: false,
        });
        if opts.scalar {
            series.push(Series {
                label: format!("CRB({name}), scalar model"),
                points: rows.iter().map(|r| (r.value, r.scalar.unwrap().as_array()[i])).collect(),
                color: PALETTE[i],
                dashed: true,
            });
        }
    }
    series.push(Series {
        label: "x_C limit".into(),
        points: vec![(grid.min, limit), (grid.max, limit)],
        color: GREY,
        dashed: true,
    });
    let svg_path = args.out.join("sweep_area.svg");
    plot::line_plot(&svg_path, "CRB vs surface area", "L^2 [m^2]", "CRB [m^2]", true, &series)?;
    println!("wrote {} and {}", csv_path.display(), svg_path.display());
    Ok(())
}

fn cmd_sweep_distance(args: &SweepArgs) -> Result<()> {
    let loaded = config::load(&args.scenario)?;
    let grid = grid_from(
        &loaded,
        SweepVariable::Distance,
        SweepGrid { min: 0.1, max: 20.0, points: 41, log: true },
        "sweep-area",
    )?;
    let opts = options(args);
    let base = &loaded.scenario;
    let wavelengths = loaded
        .file
        .sweep
        .as_ref()
        .and_then(|s| s.wavelengths.clone())
        .unwrap_or_else(|| vec![base.wavelength()]);
    let xs = grid.values()?;
    prepare_out(&args.out)?;

    let mut series = Vec::new();
    let mut written = Vec::new();
    for (li, &lambda) in wavelengths.iter().enumerate() {
        let s: DipoleScenario = base.with_wavelength(lambda)?;
        let rows = sweep_distance(&s, &xs, opts, &loaded.quadrature)?;
        let meta = metadata(
            "sweep-distance",
            &loaded,
            &[
                ("sweep_wavelength_m", num(lambda)),
                ("grid", format!("{} to {} m, {} points, log {}", grid.min, grid.max, grid.points, grid.log)),
            ],
        );
        let mut csv = Csv::new(&meta, &sweep_header(&["x_c_m", "rho"], opts));
        for r in &rows {
            let mut f = vec![num(r.value), num(s.surface_side() / r.value)];
            f.extend(sweep_fields(r));
            csv.row(&f);
        }
        let path = args.out.join(format!("sweep_distance_lambda_{lambda}.csv"));
        csv.write(&path)?;
        written.push(path);
        for (i, name) in COORDS.iter().enumerate() {
            series.push(Series {
                label: format!("CRB({name}), lambda = {lambda} m"),
                points: rows.iter().map(|r| (r.value, r.crb.as_array()[i])).collect(),
                color: PALETTE[i],
                dashed: li > 0,
            });
        }
    }
    let svg_path = args.out.join("sweep_distance.svg");
    plot::line_plot(&svg_path, "CRB vs distance", "x_C [m]", "CRB [m^2]", grid.log, &series)?;
    for p in written {
        println!("wrote {}", p.display());
    }
    println!("wrote {}", svg_path.display());
    Ok(())
}

fn cmd_validate(out: Option<&Path>) -> Result<bool> {
    let report = run_validation(&QuadratureConfig::default())?;
    println!("check,status,measured,tolerance");
    let mut csv = Csv::new(&[("tool", format!("nfcrb {VERSION}"))], &["check", "status", "measured", "tolerance"]);
    for c in &report.checks {
        let fields = [
            c.name.clone(),
            if c.passed { "pass" } else { "fail" }.to_string(),
            num(c.measured),
            num(c.tolerance),
        ];
        println!("{}", fields.join(","));
        csv.row(&fields);
    }
    if let Some(dir) = out {
        prepare_out(dir)?;
        csv.write(&dir.join("validation.csv"))?;
    }
    let failed = report.checks.iter().filter(|c| !c.passed).count();
    println!("{} checks, {failed} failed", report.checks.len());
    Ok(report.passed())
}

fn cmd_montecarlo(scenario: &Path, out: &Path, trials: Option<usize>, seed: Option<u64>) -> Result<()> {
    let loaded = config::load(scenario)?;
    let mc = loaded.montecarlo();
    let s = &loaded.scenario;
    let grid = SurfaceGrid::for_scenario(s, mc.grid)?;
    let cfg = CampaignConfig {
        model: ObservationModel::from(mc.model),
        n_trials: trials.unwrap_or(mc.trials),
        seed: seed.unwrap_or(mc.seed),
        search: loaded.search(mc.tolerance),
    };
    let r = run_campaign(s, &grid, &cfg, &loaded.quadrature)?;
    if r.unreliable {
        log::warn!("{} of {} trials did not converge; the report is unreliable", r.failures, r.n_trials);
    }

    prepare_out(out)?;
    let model = match cfg.model {
        ObservationModel::Vector => "vector",
        ObservationModel::Scalar => "scalar",
    };
    let meta = metadata(
        "montecarlo",
        &loaded,
        &[
            ("model", model.into()),
            ("trials", r.n_trials.to_string()),
            ("seed", r.seed.to_string()),
            ("grid_per_axis", grid.n_per_axis().to_string()),
            ("crb_source", r.crb_source.label().into()),
            ("effective_snr", num(r.effective_snr)),
            ("failures", r.failures.to_string()),
            ("unreliable", r.unreliable.to_string()),
        ],
    );
    let mut trials_csv = Csv::new(
        &meta,
        &["trial", "converged", "est_x_m", "est_y_m", "est_z_m", "err_x_m", "err_y_m", "err_z_m", "loglik"],
    );
    for t in &r.trials {
        let mut f = vec![t.index.to_string(), t.converged.to_string()];
        f.extend(t.estimate.iter().chain(&t.error).map(|v| num(*v)));
        f.push(num(t.loglik));
        trials_csv.row(&f);
    }
    let mut summary = Csv::new(
        &meta,
        &["coordinate", "crb_m2", "mse_m2", "mse_std_error_m2", "bias_m", "efficiency"],
    );
    println!(
        "{} trials, {} failed, bound from {} (SNR {:.4e}, effective per-sample SNR {:.4e})",
        r.n_trials,
        r.failures,
        r.crb_source.label(),
        r.snr,
        r.effective_snr
    );
    println!("{:<6} {:>14} {:>14} {:>14} {:>14} {:>10}", "coord", "CRB", "MSE", "SE(MSE)", "bias", "MSE/CRB");
    for (name, c) in COORDS.iter().zip(&r.coordinates) {
        summary.row(&[
            name.to_string(),
            num(c.crb),
            num(c.mse),
            num(c.mse_std_error),
            num(c.bias),
            num(c.efficiency),
        ]);
        println!(
            "{:<6} {:>14.6e} {:>14.6e} {:>14.6e} {:>14.6e} {:>10.3}",
            name, c.crb, c.mse, c.mse_std_error, c.bias, c.efficiency
        );
    }
    let tp = out.join("montecarlo_trials.csv");
    let sp = out.join("montecarlo_summary.csv");
    trials_csv.write(&tp)?;
    summary.write(&sp)?;
    println!("wrote {} and {}", tp.display(), sp.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::SweepArea(a) => cmd_sweep_area(a).map(|_| true),
        Command::SweepDistance(a) => cmd_sweep_distance(a).map(|_| true),
        Command::Validate { out } => cmd_validate(out.as_deref()),
        Command::Montecarlo { scenario, out, trials, seed } => {
            cmd_montecarlo(scenario, out, *trials, *seed).map(|_| true)
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
