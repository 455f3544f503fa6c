//! `ssqw` — drive the split-step quantum-walk toolkit from a JSON config:
//! validate model invariants, certify the spectral picture (gap zeros,
//! dense-truncation cross-checks, walk eigenvalues), run evolutions, and dump
//! gap-function profiles, all as flat-file artifacts.
//!
//! Exit codes: 0 success, 1 check/criteria failure, 2 usage/config error.

mod config;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ssqw_core::analysis::{criteria_check, find_zero, GapSide, ZeroReport};
use ssqw_core::discriminant::{oracle_point_spectrum, OracleOptions};
use ssqw_core::error::Error as CoreError;
use ssqw_core::evolution::evolve_walk;
use ssqw_core::lattice::{BoundaryPolicy, LatticeBox, LatticeState};
use ssqw_core::model::{
    bilinear_sigma1, check_assumption_ap0, check_assumption_ratio, check_in_dl, check_neq_pm1,
    derived_scalars, validate_params, CoinScheme, ShiftParams, ValidationItem, ValidationReport,
    TOL_IDENTITY,
};
use ssqw_core::spectral::{
    assemble_report, g_plus, verify_on_truncation, ContinuousArcs, TruncationCheck,
};
use ssqw_core::C64;

use config::{ExperimentConfig, ResolvedNumerics};
use report::{EvolutionSummary, RunReport};

#[derive(Parser)]
#[command(
    name = "ssqw",
    version,
    about = "Split-step quantum walk with a one-defect coin: spectral analysis and evolution"
)]
struct Cli {
    /// Experiment configuration (JSON).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory for reports and CSVs (overrides outputs.dir).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Override the config seed for randomized starts.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Thread budget hint, recorded in the report. The numerical kernels in
    /// this build are deterministic and run on one thread regardless.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the model invariants and print the validation report.
    Validate,
    /// Full pipeline: criteria, gap zeros, dense oracle, walk-eigenvalue
    /// checks; writes report.json and CSV profiles.
    Certify,
    /// Release a walker at the defect and record the return probability.
    Evolve,
    /// Dump 𝔣 and 𝔣′ over a λ grid in both gaps.
    FProfile,
    /// Truncated dense eigensolve of the discriminant only.
    Oracle,
}

/// Failure modes mapped to exit codes: `Config` → 2, the rest → 1.
enum Failure {
    Config(anyhow::Error),
    Check(String),
    Run(String),
}

impl Failure {
    fn run(stage: &str, err: CoreError) -> Self {
        Failure::Run(format!("{stage}: {err}"))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = u8::try_from(e.exit_code()).unwrap_or(2);
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Check(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

/// Everything a subcommand needs, resolved once.
struct Context {
    params: ShiftParams,
    scheme: CoinScheme,
    p0: Option<Vec<f64>>,
    numerics: ResolvedNumerics,
    outputs: config::OutputsBlock,
    out_dir: PathBuf,
}

fn run(cli: Cli) -> Result<(), Failure> {
    let config_path = cli
        .config
        .ok_or_else(|| Failure::Config(anyhow::anyhow!("--config PATH is required")))?;
    let config = ExperimentConfig::load(&config_path).map_err(Failure::Config)?;
    let (params, scheme) = config.build_model().map_err(Failure::Config)?;
    let numerics = config
        .resolve_numerics(cli.seed, cli.threads)
        .map_err(Failure::Config)?;
    let out_dir = cli
        .out
        .or_else(|| config.outputs.dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    let ctx = Context {
        params,
        scheme,
        p0: config.model.p0.clone(),
        numerics,
        outputs: config.outputs,
        out_dir,
    };
    match cli.command {
        Command::Validate => cmd_validate(&ctx),
        Command::Certify => cmd_certify(&ctx),
        Command::Evolve => cmd_evolve(&ctx),
        Command::FProfile => cmd_f_profile(&ctx),
        Command::Oracle => cmd_oracle(&ctx),
    }
}

fn ensure_out_dir(ctx: &Context) -> Result<&Path, Failure> {
    std::fs::create_dir_all(&ctx.out_dir).map_err(|e| {
        Failure::Config(anyhow::anyhow!(
            "cannot create output directory {}: {e}",
            ctx.out_dir.display()
        ))
    })?;
    Ok(&ctx.out_dir)
}

/// The required structural checks plus the informational assumption checks.
/// Boolean (non-residual) items are encoded as residual 0/1 against tol 0.5.
fn full_validation(ctx: &Context) -> Result<ValidationReport, Failure> {
    let mut report =
        validate_params(&ctx.params, &ctx.scheme).map_err(|e| Failure::run("validate", e))?;
    let mut info = |name: String, residual: f64, tol: f64| {
        report.items.push(ValidationItem {
            name,
            residual,
            tol,
            pass: residual < tol,
            required: false,
        });
    };
    let ratio = check_assumption_ratio(&ctx.scheme);
    for j in 0..ctx.scheme.dim() {
        let residual = bilinear_sigma1(ctx.scheme.phi_block(j), ctx.scheme.omega_block(j)).norm();
        info(
            format!("coin_compatibility_axis_{j}"),
            residual,
            TOL_IDENTITY,
        );
    }
    let mut coupled = false;
    for &l in &ratio.valid_l {
        if check_in_dl(&ctx.params, l).map_err(|e| Failure::run("validate", e))? {
            coupled = true;
        }
    }
    info(
        "coupled_axis_with_admissible_shift".into(),
        if coupled { 0.0 } else { 1.0 },
        0.5,
    );
    let ds = derived_scalars(&ctx.params, &ctx.scheme);
    info(
        "onsite_values_away_from_pm1".into(),
        if check_neq_pm1(&ds) { 0.0 } else { 1.0 },
        0.5,
    );
    if let Some(p0) = &ctx.p0 {
        let separated =
            check_assumption_ap0(&ctx.scheme, p0).map_err(|e| Failure::run("validate", e))?;
        info(
            "onsite_separation_at_p0".into(),
            if separated { 0.0 } else { 1.0 },
            0.5,
        );
    }
    Ok(report)
}

fn require_valid(report: &ValidationReport) -> Result<(), Failure> {
    if report.all_required_pass {
        return Ok(());
    }
    let failed: Vec<String> = report
        .items
        .iter()
        .filter(|item| item.required && !item.pass)
        .map(|item| {
            format!(
                "{} (residual {:.3e} > tol {:.0e})",
                item.name, item.residual, item.tol
            )
        })
        .collect();
    Err(Failure::Check(format!(
        "validation failed: {}",
        failed.join(", ")
    )))
}

fn cmd_validate(ctx: &Context) -> Result<(), Failure> {
    let report = full_validation(ctx)?;
    let rendered = serde_json::to_string_pretty(&report)
        .map_err(|e| Failure::Run(format!("validate: cannot render report: {e}")))?;
    println!("{rendered}");
    require_valid(&report)
}

fn cmd_certify(ctx: &Context) -> Result<(), Failure> {
    let validation = full_validation(ctx)?;
    require_valid(&validation)?;
    let out = ensure_out_dir(ctx)?;
    let quad = &ctx.numerics.quadrature;

    let criteria = criteria_check(&ctx.params, &ctx.scheme, ctx.p0.as_deref())
        .map_err(|e| Failure::run("criteria", e))?;

    let mut zeros: Vec<ZeroReport> = Vec::new();
    for side in [GapSide::Lower, GapSide::Upper] {
        match find_zero(&ctx.params, &ctx.scheme, side, quad) {
            Ok(Some(hit)) => zeros.push(hit),
            Ok(None) => {}
            Err(CoreError::GapTooNarrow { .. }) => {}
            Err(e) => return Err(Failure::run("find_zero", e)),
        }
    }

    let oracle = oracle_point_spectrum(
        &ctx.params,
        &ctx.scheme,
        ctx.numerics.oracle_radius,
        &OracleOptions {
            seed: ctx.numerics.seed,
            ..OracleOptions::default()
        },
    )
    .map_err(|e| Failure::run("oracle", e))?;

    // dense walk checks: both lifts of every located zero, plus the two arc
    // merge points (the only places new eigenvalues can be born)
    let mut candidates: Vec<C64> = Vec::new();
    for hit in &zeros {
        let g = g_plus(hit.lambda).map_err(|e| Failure::run("spectral map", e))?;
        candidates.push(g);
        if g.im != 0.0 {
            candidates.push(g.conj());
        }
    }
    candidates.push(C64::new(1.0, 0.0));
    candidates.push(C64::new(-1.0, 0.0));
    let mut checks: Vec<TruncationCheck> = Vec::new();
    for g in candidates {
        let check = verify_on_truncation(
            &ctx.params,
            &ctx.scheme,
            g,
            ctx.numerics.truncation_radius,
            ctx.numerics.seed,
        )
        .map_err(|e| Failure::run("truncation check", e))?;
        checks.push(check);
    }

    let spectral = assemble_report(
        &ctx.params,
        &ctx.scheme,
        &criteria,
        &zeros,
        Some(&oracle),
        &checks,
    )
    .map_err(|e| Failure::run("report assembly", e))?;

    let mut run_report = RunReport::new(
        "certify",
        &ctx.numerics,
        validation,
        &ctx.params,
        &ctx.scheme,
    );
    run_report.oracle = Some(oracle);

    let summary = {
        let s = &spectral;
        let lambdas: Vec<f64> = s.t_point_spectrum.iter().map(|t| t.lambda).collect();
        format!(
            "certified: {}; discriminant eigenvalues: {:?}; walk eigenvalues: {}; unconfirmed zeros: {:?}",
            s.certified,
            lambdas,
            s.u_point_spectrum.len(),
            s.unconfirmed_zeros
        )
    };
    run_report.spectral = Some(spectral);
    report::write_json(&out.join("report.json"), &run_report)
        .map_err(|e| Failure::Run(format!("certify: {e:#}")))?;

    if ctx.outputs.write_f_profile {
        let rows =
            report::f_profile_rows(&ctx.params, &ctx.scheme, quad, ctx.outputs.f_profile_points)
                .map_err(|e| Failure::Run(format!("f-profile: {e:#}")))?;
        report::write_f_profile(&out.join("f_profile.csv"), &rows)
            .map_err(|e| Failure::Run(format!("f-profile: {e:#}")))?;
    }
    if ctx.outputs.write_band {
        write_band(ctx, out)?;
    }
    println!("{summary}");
    println!("wrote {}", out.join("report.json").display());
    Ok(())
}

fn write_band(ctx: &Context, out: &Path) -> Result<(), Failure> {
    let ds = derived_scalars(&ctx.params, &ctx.scheme);
    let (lo, hi) = ssqw_core::discriminant::band(&ds);
    let arcs = ContinuousArcs::from_band(lo, hi);
    report::write_band_csv(&out.join("band.csv"), arcs.theta_min, arcs.theta_max, 181)
        .map_err(|e| Failure::Run(format!("band: {e:#}")))
}

fn cmd_evolve(ctx: &Context) -> Result<(), Failure> {
    let validation = full_validation(ctx)?;
    require_valid(&validation)?;
    let out = ensure_out_dir(ctx)?;
    let steps = ctx.numerics.evolve_steps;
    let policy: BoundaryPolicy = ctx.numerics.boundary.into();

    let lattice = LatticeBox::new(ctx.params.dim(), ctx.numerics.box_radius)
        .map_err(|e| Failure::run("evolve", e))?;
    let origin = vec![0i64; ctx.params.dim()];
    // release the walker in the defect coin direction
    let start = LatticeState::delta(lattice, &origin, &ctx.scheme.omega)
        .map_err(|e| Failure::run("evolve", e))?;
    let initial_origin_mass = start.site_mass(start.lattice.origin_index());
    let output = evolve_walk(&start, &ctx.params, &ctx.scheme, steps, policy)
        .map_err(|e| Failure::run("evolve", e))?;

    let summary = EvolutionSummary {
        steps,
        box_radius: ctx.numerics.box_radius,
        boundary: ctx.numerics.boundary,
        initial_origin_mass,
        mean_return_probability: output.mean_return_probability(),
        final_return_probability: *output.return_series.last().unwrap(),
        final_norm: output.state.norm(),
    };
    println!(
        "evolved {steps} steps: mean return probability {:.6}, final {:.6}",
        summary.mean_return_probability, summary.final_return_probability
    );

    let mut run_report = RunReport::new(
        "evolve",
        &ctx.numerics,
        validation,
        &ctx.params,
        &ctx.scheme,
    );
    run_report.evolution = Some(summary);
    report::write_json(&out.join("report.json"), &run_report)
        .map_err(|e| Failure::Run(format!("evolve: {e:#}")))?;

    if ctx.outputs.write_return_series {
        report::write_return_series(&out.join("return_series.csv"), &output.return_series)
            .map_err(|e| Failure::Run(format!("evolve: {e:#}")))?;
    }
    if ctx.outputs.write_probability_snapshot {
        let name = format!("prob_t{steps}.csv");
        report::write_prob_snapshot(&out.join(name), &output.state)
            .map_err(|e| Failure::Run(format!("evolve: {e:#}")))?;
    }
    Ok(())
}

fn cmd_f_profile(ctx: &Context) -> Result<(), Failure> {
    let validation = full_validation(ctx)?;
    require_valid(&validation)?;
    let out = ensure_out_dir(ctx)?;
    let rows = report::f_profile_rows(
        &ctx.params,
        &ctx.scheme,
        &ctx.numerics.quadrature,
        ctx.outputs.f_profile_points,
    )
    .map_err(|e| Failure::Run(format!("f-profile: {e:#}")))?;
    report::write_f_profile(&out.join("f_profile.csv"), &rows)
        .map_err(|e| Failure::Run(format!("f-profile: {e:#}")))?;
    if ctx.outputs.write_band {
        write_band(ctx, out)?;
    }
    println!(
        "wrote {} ({} samples)",
        out.join("f_profile.csv").display(),
        rows.len()
    );
    Ok(())
}

fn cmd_oracle(ctx: &Context) -> Result<(), Failure> {
    let validation = full_validation(ctx)?;
    require_valid(&validation)?;
    let out = ensure_out_dir(ctx)?;
    let oracle = oracle_point_spectrum(
        &ctx.params,
        &ctx.scheme,
        ctx.numerics.oracle_radius,
        &OracleOptions {
            seed: ctx.numerics.seed,
            ..OracleOptions::default()
        },
    )
    .map_err(|e| Failure::run("oracle", e))?;
    let side = (2 * ctx.numerics.oracle_radius + 1) as usize;
    println!(
        "dense order {}: kept gap eigenvalues {:?}",
        side.pow(ctx.params.dim() as u32),
        oracle.kept_values()
    );
    let mut run_report = RunReport::new(
        "oracle",
        &ctx.numerics,
        validation,
        &ctx.params,
        &ctx.scheme,
    );
    run_report.oracle = Some(oracle);
    report::write_json(&out.join("report.json"), &run_report)
        .map_err(|e| Failure::Run(format!("oracle: {e:#}")))
}
