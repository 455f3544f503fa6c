//! Experiment configuration: a versioned JSON file describing the model
//! (shift parameters and coin pair), the numerical budgets, and which
//! artifacts to write. Complex numbers are `[re, im]` pairs.

use std::path::PathBuf;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use ssqw_core::analysis::QuadratureSpec;
use ssqw_core::lattice::BoundaryPolicy;
use ssqw_core::model::{CoinScheme, ShiftParams};
use ssqw_core::C64;

/// The schema this build reads and writes.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub model: ModelBlock,
    #[serde(default)]
    pub numerics: NumericsBlock,
    #[serde(default)]
    pub outputs: OutputsBlock,
}

/// Model data: per-axis shift weights `p`, `q` and the two coin vectors,
/// each a `2·dim`-component complex vector (`[re, im]` entries).
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    pub dim: usize,
    pub p: Vec<f64>,
    pub q: Vec<[f64; 2]>,
    pub phi: Vec<[f64; 2]>,
    pub omega: Vec<[f64; 2]>,
    /// Optional corner point (entries ±1) at which defect/bulk on-site
    /// separation is certified.
    #[serde(default)]
    pub p0: Option<Vec<f64>>,
}

/// Numerical budgets; every field optional, defaults depend on `dim`.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericsBlock {
    /// Trapezoid nodes per axis at the coarsest level.
    pub quadrature_nodes: Option<usize>,
    /// Grid doublings on top of the coarsest level.
    pub quadrature_refinements: Option<usize>,
    /// Half-width of the box for the dense discriminant eigensolve.
    pub oracle_radius: Option<i64>,
    /// Half-width of the box for dense walk-eigenvalue checks.
    pub truncation_radius: Option<i64>,
    /// Number of walk steps for `evolve`.
    pub evolve_steps: Option<usize>,
    /// Half-width of the evolution box (default: `evolve_steps + 1`).
    pub box_radius: Option<i64>,
    pub boundary: Option<BoundaryKind>,
    /// Seed for every randomized start (inverse iteration); recorded in the
    /// report so runs are reproducible.
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    TruncateZero,
    Periodic,
}

impl From<BoundaryKind> for BoundaryPolicy {
    fn from(kind: BoundaryKind) -> Self {
        match kind {
            BoundaryKind::TruncateZero => BoundaryPolicy::TruncateZero,
            BoundaryKind::Periodic => BoundaryPolicy::Periodic,
        }
    }
}

/// Which artifacts to write. `dir` may be overridden by `--out`.
#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputsBlock {
    pub dir: Option<PathBuf>,
    /// λ samples per gap in `f_profile.csv`.
    pub f_profile_points: usize,
    pub write_f_profile: bool,
    pub write_band: bool,
    pub write_probability_snapshot: bool,
    pub write_return_series: bool,
}

impl Default for OutputsBlock {
    fn default() -> Self {
        Self {
            dir: None,
            f_profile_points: 100,
            write_f_profile: true,
            write_band: true,
            write_probability_snapshot: true,
            write_return_series: true,
        }
    }
}

/// Numerics after filling in defaults and command-line overrides; echoed
/// verbatim into every report for reproducibility.
#[derive(Debug, Clone, Serialize)]
pub struct ResolvedNumerics {
    pub quadrature: QuadratureSpec,
    pub oracle_radius: i64,
    pub truncation_radius: i64,
    pub evolve_steps: usize,
    pub box_radius: i64,
    pub boundary: BoundaryKind,
    pub seed: u64,
    pub threads: usize,
}

impl ExperimentConfig {
    /// Parse and sanity-check a config file.
    pub fn load(path: &std::path::Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let config: ExperimentConfig = serde_json::from_str(&text)
            .with_context(|| format!("cannot parse config {}", path.display()))?;
        if config.schema_version != SCHEMA_VERSION {
            bail!(
                "unsupported schema_version {} (this build reads {})",
                config.schema_version,
                SCHEMA_VERSION
            );
        }
        config.check_shape()?;
        Ok(config)
    }

    fn check_shape(&self) -> anyhow::Result<()> {
        let d = self.model.dim;
        if d == 0 {
            bail!("model.dim must be at least 1");
        }
        let expect = |name: &str, got: usize, want: usize| -> anyhow::Result<()> {
            if got != want {
                bail!("model.{name} must have {want} entries for dim = {d}, got {got}");
            }
            Ok(())
        };
        expect("p", self.model.p.len(), d)?;
        expect("q", self.model.q.len(), d)?;
        expect("phi", self.model.phi.len(), 2 * d)?;
        expect("omega", self.model.omega.len(), 2 * d)?;
        if let Some(p0) = &self.model.p0 {
            expect("p0", p0.len(), d)?;
            if p0.iter().any(|&v| v != 1.0 && v != -1.0) {
                bail!("model.p0 entries must be exactly +1 or -1");
            }
        }
        Ok(())
    }

    /// Build the core model objects.
    pub fn build_model(&self) -> anyhow::Result<(ShiftParams, CoinScheme)> {
        let c = |v: &[f64; 2]| C64::new(v[0], v[1]);
        let params = ShiftParams::new(self.model.p.clone(), self.model.q.iter().map(c).collect())
            .context("model.p/q rejected")?;
        let scheme = CoinScheme::new(
            self.model.phi.iter().map(c).collect(),
            self.model.omega.iter().map(c).collect(),
        )
        .context("model.phi/omega rejected")?;
        Ok((params, scheme))
    }

    /// Fill in numerics defaults, then apply command-line overrides.
    pub fn resolve_numerics(
        &self,
        seed_override: Option<u64>,
        threads: Option<usize>,
    ) -> anyhow::Result<ResolvedNumerics> {
        let d = self.model.dim;
        let mut quadrature = QuadratureSpec::for_dim(d);
        if let Some(n) = self.numerics.quadrature_nodes {
            quadrature.n_per_axis = n;
        }
        if let Some(r) = self.numerics.quadrature_refinements {
            quadrature.refinements = r;
        }
        let evolve_steps = self.numerics.evolve_steps.unwrap_or(100);
        let box_radius = self.numerics.box_radius.unwrap_or(evolve_steps as i64 + 1);
        let threads = threads.unwrap_or(1);
        if threads == 0 {
            bail!("--threads must be at least 1");
        }
        Ok(ResolvedNumerics {
            quadrature,
            oracle_radius: self.numerics.oracle_radius.unwrap_or(15),
            truncation_radius: self.numerics.truncation_radius.unwrap_or(12),
            evolve_steps,
            box_radius,
            boundary: self.numerics.boundary.unwrap_or(BoundaryKind::TruncateZero),
            seed: seed_override.or(self.numerics.seed).unwrap_or(0x5eed),
            threads,
        })
    }
}
