//! Model parameters: shift coefficients, coin schemes, derived scalars, and
//! the admissibility checks that gate the certification pipeline.
//!
//! A model is a pair `(ShiftParams, CoinScheme)`. The shift is parameterized
//! by a point of `D = {(p, q) : p_j² + |q_j|² = 1}`; the coin is determined by
//! two unit vectors in `C^{2d}`: the bulk vector `Φ` used at every site except
//! the origin and the defect vector `Ω` used at the origin. All downstream
//! spectral quantities reduce to a handful of scalars derived here:
//! `a_Φ(p)`, `a_Ω(p)`, the hop amplitudes `α_j = q_j·conj(φ_{j,1})·φ_{j,2}`,
//! their phases `θ_j`, the band half-width `λ(q) = 2Σ_j|α_j|`, and `‖φ_q‖²`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::C64;

/// Tolerance for exact-identity checks (normalization, `p² + |q|² = 1`,
/// self-adjointness residuals): 10⁴ × double epsilon, absorbing accumulation.
pub const TOL_IDENTITY: f64 = 1e-12;

// ─────────────────────────────────────────────────────────────────────────────
// Parameter and scheme containers
// ─────────────────────────────────────────────────────────────────────────────

/// Per-axis shift coefficients `(p_j, q_j)`, one pair per lattice axis.
///
/// Membership in the set `D` (`p_j² + |q_j|² = 1`) is a *numerical* invariant
/// reported by [`validate_params`], not enforced at construction, so that
/// invalid inputs can be constructed and then diagnosed.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftParams {
    pub p: Vec<f64>,
    pub q: Vec<C64>,
}

impl ShiftParams {
    /// Build from per-axis vectors. Errors if the lengths differ or are zero.
    pub fn new(p: Vec<f64>, q: Vec<C64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidValue {
                what: "ShiftParams.p",
                detail: "at least one axis required".into(),
            });
        }
        if p.len() != q.len() {
            return Err(Error::DimensionMismatch {
                what: "ShiftParams.q",
                expected: p.len(),
                got: q.len(),
            });
        }
        Ok(Self { p, q })
    }

    /// Number of lattice axes `d`.
    pub fn dim(&self) -> usize {
        self.p.len()
    }
}

/// The two coin eigenvectors: `phi` (bulk) and `omega` (defect), each a unit
/// vector in `C^{2d}` viewed as `d` two-component blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct CoinScheme {
    pub phi: Vec<C64>,
    pub omega: Vec<C64>,
}

impl CoinScheme {
    /// Build from the two `2d`-component vectors. Errors on length mismatch
    /// or odd/zero length.
    pub fn new(phi: Vec<C64>, omega: Vec<C64>) -> Result<Self> {
        if phi.is_empty() || !phi.len().is_multiple_of(2) {
            return Err(Error::InvalidValue {
                what: "CoinScheme.phi",
                detail: format!("length must be a positive even number, got {}", phi.len()),
            });
        }
        if omega.len() != phi.len() {
            return Err(Error::DimensionMismatch {
                what: "CoinScheme.omega",
                expected: phi.len(),
                got: omega.len(),
            });
        }
        Ok(Self { phi, omega })
    }

    /// Number of lattice axes `d` (half the component count).
    pub fn dim(&self) -> usize {
        self.phi.len() / 2
    }

    /// Block `j` of the bulk vector: `Φ_j = (φ_{j,1}, φ_{j,2})`.
    pub fn phi_block(&self, j: usize) -> [C64; 2] {
        [self.phi[2 * j], self.phi[2 * j + 1]]
    }

    /// Block `j` of the defect vector: `Ω_j = (ω_{j,1}, ω_{j,2})`.
    pub fn omega_block(&self, j: usize) -> [C64; 2] {
        [self.omega[2 * j], self.omega[2 * j + 1]]
    }

    /// The coin eigenvector in effect at a site: `Ω` at the defect, `Φ` elsewhere.
    pub fn chi(&self, at_defect: bool) -> &[C64] {
        if at_defect {
            &self.omega
        } else {
            &self.phi
        }
    }
}

/// The fixed 2×2 matrices the per-block forms are written with.
#[derive(Debug, Clone)]
pub struct PauliConstants {
    pub sigma1: [[C64; 2]; 2],
    pub sigma3: [[C64; 2]; 2],
    pub sigma_plus: [[C64; 2]; 2],
    pub sigma_minus: [[C64; 2]; 2],
}

impl PauliConstants {
    pub fn standard() -> Self {
        let zero = C64::new(0.0, 0.0);
        let one = C64::new(1.0, 0.0);
        Self {
            sigma1: [[zero, one], [one, zero]],
            sigma3: [[one, zero], [zero, -one]],
            sigma_plus: [[zero, one], [zero, zero]],
            sigma_minus: [[zero, zero], [one, zero]],
        }
    }
}

// ─────────────────────────────────────────────────────────────────────────────
// Small C² forms used throughout
// ─────────────────────────────────────────────────────────────────────────────

/// Sesquilinear inner product on C², conjugate-linear in the first slot.
pub fn inner2(a: [C64; 2], b: [C64; 2]) -> C64 {
    a[0].conj() * b[0] + a[1].conj() * b[1]
}

/// `⟨a, σ₃ b⟩ = conj(a₁)b₁ − conj(a₂)b₂`.
pub fn inner2_sigma3(a: [C64; 2], b: [C64; 2]) -> C64 {
    a[0].conj() * b[0] - a[1].conj() * b[1]
}

/// `⟨a, σ₊ b⟩ = conj(a₁)·b₂`.
pub fn inner2_sigma_plus(a: [C64; 2], b: [C64; 2]) -> C64 {
    a[0].conj() * b[1]
}

/// `⟨a, σ₋ b⟩ = conj(a₂)·b₁`.
pub fn inner2_sigma_minus(a: [C64; 2], b: [C64; 2]) -> C64 {
    a[1].conj() * b[0]
}

/// Bilinear (no conjugation) pairing `a · (σ₁ b) = a₁b₂ + a₂b₁`.
pub fn bilinear_sigma1(a: [C64; 2], b: [C64; 2]) -> C64 {
    a[0] * b[1] + a[1] * b[0]
}

fn norm_sq(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

// ─────────────────────────────────────────────────────────────────────────────
// Validation
// ─────────────────────────────────────────────────────────────────────────────

/// One named invariant check with its residual.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationItem {
    pub name: String,
    pub residual: f64,
    pub tol: f64,
    pub pass: bool,
    /// Required items gate the pipeline; informational ones (the assumption
    /// checks) are reported but do not by themselves invalidate a model.
    pub required: bool,
}

/// Outcome of [`validate_params`]: every invariant listed with pass/fail and
/// residual magnitude.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub items: Vec<ValidationItem>,
    pub all_required_pass: bool,
}

impl ValidationReport {
    fn push(&mut self, name: String, residual: f64, tol: f64, required: bool) {
        let pass = residual < tol;
        self.items.push(ValidationItem {
            name,
            residual,
            tol,
            pass,
            required,
        });
        if required && !pass {
            self.all_required_pass = false;
        }
    }
}

/// Check the defining invariants: `p_j² + |q_j|² = 1` per axis and
/// `‖Φ‖ = ‖Ω‖ = 1`, all within [`TOL_IDENTITY`].
///
/// Hard-errors on dimension mismatch between the two inputs; numerical
/// violations are reported, not raised.
pub fn validate_params(params: &ShiftParams, scheme: &CoinScheme) -> Result<ValidationReport> {
    if params.dim() != scheme.dim() {
        return Err(Error::DimensionMismatch {
            what: "CoinScheme vs ShiftParams",
            expected: params.dim(),
            got: scheme.dim(),
        });
    }
    let mut report = ValidationReport {
        items: Vec::new(),
        all_required_pass: true,
    };
    for j in 0..params.dim() {
        let r = (params.p[j] * params.p[j] + params.q[j].norm_sqr() - 1.0).abs();
        report.push(format!("set_D_axis_{j}"), r, TOL_IDENTITY, true);
    }
    report.push(
        "phi_normalized".into(),
        (norm_sq(&scheme.phi) - 1.0).abs(),
        TOL_IDENTITY,
        true,
    );
    report.push(
        "omega_normalized".into(),
        (norm_sq(&scheme.omega) - 1.0).abs(),
        TOL_IDENTITY,
        true,
    );
    Ok(report)
}

// ─────────────────────────────────────────────────────────────────────────────
// Derived scalars
// ─────────────────────────────────────────────────────────────────────────────

/// The scalar data every spectral computation reduces to.
#[derive(Debug, Clone, Serialize)]
pub struct DerivedScalars {
    /// `a_Φ(p) = Σ_j p_j (|φ_{j,1}|² − |φ_{j,2}|²)` — bulk on-site value of `T`.
    pub a_phi: f64,
    /// `a_Ω(p) = Σ_j p_j (|ω_{j,1}|² − |ω_{j,2}|²)` — defect on-site value of `T`.
    pub a_omega: f64,
    /// Bulk hop amplitudes `α_j = q_j·conj(φ_{j,1})·φ_{j,2}`.
    #[serde(skip)]
    pub alpha: Vec<C64>,
    /// Phases `θ_j = arg α_j`, with the convention `θ_j = 0` when `α_j = 0`.
    pub theta: Vec<f64>,
    /// Band half-width `λ(q) = 2 Σ_j |α_j|` (always in `[0, 1]`).
    pub lambda_q: f64,
    /// Squared norm of the defect coupling vector `φ_q`.
    pub phi_q_norm_sq: f64,
}

/// Compute [`DerivedScalars`] from validated inputs.
pub fn derived_scalars(params: &ShiftParams, scheme: &CoinScheme) -> DerivedScalars {
    let d = params.dim();
    let mut a_phi = 0.0;
    let mut a_omega = 0.0;
    let mut alpha = Vec::with_capacity(d);
    let mut theta = Vec::with_capacity(d);
    let mut lambda_q = 0.0;
    let mut phi_q_norm_sq = 0.0;
    for j in 0..d {
        let phi = scheme.phi_block(j);
        let om = scheme.omega_block(j);
        a_phi += params.p[j] * inner2_sigma3(phi, phi).re;
        a_omega += params.p[j] * inner2_sigma3(om, om).re;
        let a_j = params.q[j] * phi[0].conj() * phi[1];
        lambda_q += 2.0 * a_j.norm();
        theta.push(if a_j == C64::new(0.0, 0.0) {
            0.0
        } else {
            a_j.arg()
        });
        alpha.push(a_j);
        // |φ_q(−e_j)|² + |φ_q(+e_j)|², from the two defect-coupling forms.
        let minus = params.q[j] * inner2_sigma_plus(phi, om);
        let plus = params.q[j].conj() * inner2_sigma_minus(phi, om);
        phi_q_norm_sq += minus.norm_sqr() + plus.norm_sqr();
    }
    DerivedScalars {
        a_phi,
        a_omega,
        alpha,
        theta,
        lambda_q,
        phi_q_norm_sq,
    }
}

// ─────────────────────────────────────────────────────────────────────────────
// Coin matrix
// ─────────────────────────────────────────────────────────────────────────────

/// The `2d×2d` coin matrix `2|χ⟩⟨χ| − 1` (row-major), with `χ = Ω` at the
/// defect and `χ = Φ` in the bulk. Unitary, Hermitian, `+1` simple.
pub fn coin_matrix(scheme: &CoinScheme, at_defect: bool) -> Vec<C64> {
    let chi = scheme.chi(at_defect);
    let n = chi.len();
    let mut m = vec![C64::new(0.0, 0.0); n * n];
    for r in 0..n {
        for c in 0..n {
            let mut v = 2.0 * chi[r] * chi[c].conj();
            if r == c {
                v -= 1.0;
            }
            m[r * n + c] = v;
        }
    }
    m
}

// ─────────────────────────────────────────────────────────────────────────────
// Admissibility checks
// ─────────────────────────────────────────────────────────────────────────────

/// Outcome of the two-part coin-compatibility check.
#[derive(Debug, Clone, Serialize)]
pub struct AssumptionRatio {
    /// `condition_a[j]` ⇔ the bilinear form `Φ_j · (σ₁ Ω_j)` vanishes.
    pub condition_a: Vec<bool>,
    /// Axes `l` (0-based) where the coupling `⟨Φ_l, σ₊Ω_l⟩` is nonzero.
    pub valid_l: Vec<usize>,
}

impl AssumptionRatio {
    /// Part (a) holds on every axis.
    pub fn all_a(&self) -> bool {
        self.condition_a.iter().all(|&b| b)
    }
}

/// Check the coin-compatibility conditions: (a) per axis, the *bilinear*
/// pairing `Φ_j · (σ₁ Ω_j) = φ_{j,1}ω_{j,2} + φ_{j,2}ω_{j,1}` vanishes;
/// (b) collect the axes where the sesquilinear coupling `⟨Φ_l, σ₊Ω_l⟩` is
/// nonzero. Axes are 0-based.
pub fn check_assumption_ratio(scheme: &CoinScheme) -> AssumptionRatio {
    let d = scheme.dim();
    let mut condition_a = Vec::with_capacity(d);
    let mut valid_l = Vec::new();
    for j in 0..d {
        let phi = scheme.phi_block(j);
        let om = scheme.omega_block(j);
        condition_a.push(bilinear_sigma1(phi, om).norm() < TOL_IDENTITY);
        if inner2_sigma_plus(phi, om).norm() > TOL_IDENTITY {
            valid_l.push(j);
        }
    }
    AssumptionRatio {
        condition_a,
        valid_l,
    }
}

/// `(p, q) ∈ D_l`: both `p_l` and `q_l` nonzero. Zero is representable
/// exactly, so no tolerance is applied. `l` is 0-based.
pub fn check_in_dl(params: &ShiftParams, l: usize) -> Result<bool> {
    if l >= params.dim() {
        return Err(Error::InvalidValue {
            what: "axis index l",
            detail: format!("l = {l} out of range for dim {}", params.dim()),
        });
    }
    Ok(params.p[l] != 0.0 && params.q[l].norm_sqr() > 0.0)
}

/// Defect-vs-bulk on-site separation at a corner point `p0 ∈ {−1, 1}^d`:
/// true iff `a_Ω(p0) ≠ a_Φ(p0)` beyond [`TOL_IDENTITY`].
pub fn check_assumption_ap0(scheme: &CoinScheme, p0: &[f64]) -> Result<bool> {
    if p0.len() != scheme.dim() {
        return Err(Error::DimensionMismatch {
            what: "p0",
            expected: scheme.dim(),
            got: p0.len(),
        });
    }
    if p0.iter().any(|&v| v != 1.0 && v != -1.0) {
        return Err(Error::InvalidValue {
            what: "p0",
            detail: "every entry must be exactly +1 or -1".into(),
        });
    }
    let mut a_omega = 0.0;
    let mut a_phi = 0.0;
    for (j, sign) in p0.iter().enumerate() {
        a_omega += sign * inner2_sigma3(scheme.omega_block(j), scheme.omega_block(j)).re;
        a_phi += sign * inner2_sigma3(scheme.phi_block(j), scheme.phi_block(j)).re;
    }
    Ok((a_omega - a_phi).abs() > TOL_IDENTITY)
}

/// True iff neither on-site scalar sits at `±1`:
/// `min(|a_Φ ∓ 1|, |a_Ω ∓ 1|) > tol` for all four combinations.
pub fn check_neq_pm1(ds: &DerivedScalars) -> bool {
    [ds.a_phi, ds.a_omega]
        .iter()
        .all(|a| (a - 1.0).abs() > TOL_IDENTITY && (a + 1.0).abs() > TOL_IDENTITY)
}

// ─────────────────────────────────────────────────────────────────────────────
// Tests
// ─────────────────────────────────────────────────────────────────────────────
