//! Report assembly and flat-file artifact writers. Everything written here
//! is deterministic for a fixed config: no clocks, no unpinned randomness.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::Context;
use serde::Serialize;

use ssqw_core::analysis::{f_of_lambda, f_prime, QuadratureSpec};
use ssqw_core::discriminant::{band, OracleReport};
use ssqw_core::lattice::LatticeState;
use ssqw_core::model::{
    derived_scalars, CoinScheme, DerivedScalars, ShiftParams, ValidationReport,
};
use ssqw_core::spectral::SpectralReport;

use crate::config::{BoundaryKind, ResolvedNumerics, SCHEMA_VERSION};

/// The single JSON report every command emits (fields it did not compute are
/// omitted).
#[derive(Debug, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub numerics: ResolvedNumerics,
    pub validation: ValidationReport,
    pub scalars: DerivedScalars,
    pub band: (f64, f64),
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectral: Option<SpectralReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evolution: Option<EvolutionSummary>,
}

impl RunReport {
    pub fn new(
        command: &'static str,
        numerics: &ResolvedNumerics,
        validation: ValidationReport,
        params: &ShiftParams,
        scheme: &CoinScheme,
    ) -> Self {
        let scalars = derived_scalars(params, scheme);
        let band = band(&scalars);
        Self {
            schema_version: SCHEMA_VERSION,
            command,
            numerics: numerics.clone(),
            validation,
            scalars,
            band,
            oracle: None,
            spectral: None,
            evolution: None,
        }
    }
}

/// Evolution run summary for the report.
#[derive(Debug, Serialize)]
pub struct EvolutionSummary {
    pub steps: usize,
    pub box_radius: i64,
    pub boundary: BoundaryKind,
    pub initial_origin_mass: f64,
    pub mean_return_probability: f64,
    pub final_return_probability: f64,
    pub final_norm: f64,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    let mut writer = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut writer, value)?;
    writer.write_all(b"\n")?;
    Ok(())
}

fn csv_writer(path: &Path) -> anyhow::Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(file))
}

/// One gap-function sample row.
pub struct ProfileRow {
    pub lambda: f64,
    pub f: f64,
    pub f_prime: f64,
    pub error: f64,
}

/// Sample `𝔣` and `𝔣′` on `points` λ values per gap, skipping gaps narrower
/// than the edge padding.
pub fn f_profile_rows(
    params: &ShiftParams,
    scheme: &CoinScheme,
    quad: &QuadratureSpec,
    points: usize,
) -> anyhow::Result<Vec<ProfileRow>> {
    let ds = derived_scalars(params, scheme);
    let (lo, hi) = band(&ds);
    let pad = (2.0 * quad.edge_guard).max(1e-4);
    let mut rows = Vec::new();
    let mut sample_range = |a: f64, b: f64| -> anyhow::Result<()> {
        if b - a < pad {
            return Ok(());
        }
        for i in 0..points {
            let lambda = a + (b - a) * i as f64 / (points - 1).max(1) as f64;
            let (f, ef) = f_of_lambda(params, scheme, lambda, quad)?;
            let (fp, ep) = f_prime(params, scheme, lambda, quad)?;
            rows.push(ProfileRow {
                lambda,
                f,
                f_prime: fp,
                error: ef.max(ep),
            });
        }
        Ok(())
    };
    sample_range(-1.0, lo - pad)?;
    sample_range(hi + pad, 1.0)?;
    Ok(rows)
}

pub fn write_f_profile(path: &Path, rows: &[ProfileRow]) -> anyhow::Result<()> {
    let mut w = csv_writer(path)?;
    writeln!(w, "lambda,f,f_prime,error")?;
    for row in rows {
        writeln!(w, "{},{},{},{}", row.lambda, row.f, row.f_prime, row.error)?;
    }
    Ok(())
}

/// Discretize the two continuous-spectrum arcs: rows of
/// `(arc, theta, lambda = cos theta)`.
pub fn write_band_csv(
    path: &Path,
    theta_min: f64,
    theta_max: f64,
    samples: usize,
) -> anyhow::Result<()> {
    let mut w = csv_writer(path)?;
    writeln!(w, "arc,theta,lambda")?;
    for (name, sign) in [("plus", 1.0), ("minus", -1.0)] {
        for i in 0..samples {
            let theta = theta_min + (theta_max - theta_min) * i as f64 / (samples - 1) as f64;
            writeln!(w, "{},{},{}", name, sign * theta, theta.cos())?;
        }
    }
    Ok(())
}

pub fn write_return_series(path: &Path, series: &[f64]) -> anyhow::Result<()> {
    let mut w = csv_writer(path)?;
    writeln!(w, "t,return_probability")?;
    for (t, p) in series.iter().enumerate() {
        writeln!(w, "{t},{p}")?;
    }
    Ok(())
}

/// Site-resolved probability snapshot: `x1,…,xd,probability` per lattice
/// site (fiber mass summed).
pub fn write_prob_snapshot(path: &Path, state: &LatticeState) -> anyhow::Result<()> {
    let mut w = csv_writer(path)?;
    let d = state.lattice.dim();
    for j in 1..=d {
        write!(w, "x{j},")?;
    }
    writeln!(w, "probability")?;
    let mut failure = None;
    state.lattice.for_each_site(|idx, coords| {
        if failure.is_some() {
            return;
        }
        let mut line = String::new();
        for c in coords {
            line.push_str(&c.to_string());
            line.push(',');
        }
        line.push_str(&state.site_mass(idx).to_string());
        if let Err(e) = writeln!(w, "{line}") {
            failure = Some(e);
        }
    });
    match failure {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}
