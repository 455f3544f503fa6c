//! The gap function `𝔣` and everything built on it: quadrature evaluation,
//! derivative, bound-state profiles, zero-finding in the spectral gaps,
//! closed-form existence criteria, and the Feshbach-identity residual.
//!
//! For `λ` outside the band of the free discriminant, define
//!
//! ```text
//! 𝔣(λ) = λ − a_Ω + (2π)^{-d} ∫_{[0,2π)^d} |φ̂_q(k)|² / (T̂₀(k) − λ) dk .
//! ```
//!
//! `𝔣` is strictly increasing on each gap (`𝔣′ > 1`) and its zeros are in
//! one-to-one correspondence with the point spectrum of the discriminant in
//! that gap; through the spectral map they give the localized states of the
//! walk itself. The integrand is smooth and periodic, so the trapezoid rule
//! on a uniform grid converges exponentially in the number of nodes per axis
//! — the error estimate returned alongside every value is the difference of
//! the last two refinement levels.

use serde::Serialize;

use crate::discriminant::{apply_free_discriminant, band, DefectCoupling};
use crate::error::{Error, Result};
use crate::lattice::{BoundaryPolicy, LatticeBox, LatticeState};
use crate::linalg::{pairwise_sum_c64, pairwise_sum_f64};
use crate::model::{
    check_assumption_ap0, check_assumption_ratio, check_in_dl, check_neq_pm1, derived_scalars,
    CoinScheme, DerivedScalars, ShiftParams,
};
use crate::C64;

// ─────────────────────────────────────────────────────────────────────────────
// Quadrature settings
// ─────────────────────────────────────────────────────────────────────────────

/// Trapezoid-grid parameters for the gap-function integrals.
#[derive(Debug, Clone, Serialize)]
pub struct QuadratureSpec {
    /// Nodes per axis at the coarsest level. Must be even and ≥ 32.
    pub n_per_axis: usize,
    /// Number of grid doublings; the reported value comes from the finest
    /// level and the error estimate from the last doubling.
    pub refinements: usize,
    /// Apply Aitken Δ² extrapolation over the last three levels (needs
    /// `refinements ≥ 2`). The error estimate stays the raw level difference.
    pub use_acceleration: bool,
    /// Half-width of the exclusion collar around the band: evaluation inside
    /// `(band_lo − edge_guard, band_hi + edge_guard)` is refused.
    pub edge_guard: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            n_per_axis: 128,
            refinements: 1,
            use_acceleration: false,
            edge_guard: 1e-6,
        }
    }
}

impl QuadratureSpec {
    /// Defaults adapted to the lattice dimension: three-dimensional grids
    /// get fewer nodes per axis to keep the point count in check.
    pub fn for_dim(dim: usize) -> Self {
        Self {
            n_per_axis: if dim >= 3 { 48 } else { 128 },
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_per_axis < 32 || !self.n_per_axis.is_multiple_of(2) {
            return Err(Error::InvalidValue {
                what: "QuadratureSpec.n_per_axis",
                detail: format!("must be even and ≥ 32, got {}", self.n_per_axis),
            });
        }
        if self.refinements > 6 {
            return Err(Error::InvalidValue {
                what: "QuadratureSpec.refinements",
                detail: format!(
                    "more than 6 doublings is never useful, got {}",
                    self.refinements
                ),
            });
        }
        if self.edge_guard <= 0.0 || self.edge_guard.is_nan() {
            return Err(Error::InvalidValue {
                what: "QuadratureSpec.edge_guard",
                detail: format!("must be positive, got {}", self.edge_guard),
            });
        }
        Ok(())
    }

    /// Finest grid size per axis.
    pub fn finest(&self) -> usize {
        self.n_per_axis << self.refinements
    }
}

fn guard_outside_band(ds: &DerivedScalars, lambda: f64, edge_guard: f64) -> Result<()> {
    let (lo, hi) = band(ds);
    if lambda > lo - edge_guard && lambda < hi + edge_guard {
        return Err(Error::InsideBand {
            lambda,
            band_lo: lo,
            band_hi: hi,
            edge_guard,
        });
    }
    Ok(())
}

// ─────────────────────────────────────────────────────────────────────────────
// Grid evaluation
// ─────────────────────────────────────────────────────────────────────────────

/// Per-axis tables on an `n`-node grid: the coupling-symbol contribution
/// `φ_q(e_j)e^{−ik} + φ_q(−e_j)e^{ik}` and the symbol increment
/// `2|α_j|cos(k + θ_j)` for each node `k = 2πm/n`.
fn axis_tables(ds: &DerivedScalars, coupling: &DefectCoupling, n: usize) -> (Vec<C64>, Vec<f64>) {
    let d = coupling.dim();
    let mut contrib = vec![C64::new(0.0, 0.0); d * n];
    let mut symb = vec![0.0f64; d * n];
    for j in 0..d {
        let twoa = 2.0 * ds.alpha[j].norm();
        for m in 0..n {
            let k = 2.0 * std::f64::consts::PI * m as f64 / n as f64;
            let phase = C64::from_polar(1.0, k);
            contrib[j * n + m] = coupling.plus[j] * phase.conj() + coupling.minus[j] * phase;
            symb[j * n + m] = twoa * (k + ds.theta[j]).cos();
        }
    }
    (contrib, symb)
}

/// `(2π)^{-d} ∫ |φ̂_q|² / (T̂₀ − λ)^power dk` by the trapezoid rule with `n`
/// nodes per axis, summed over a fixed pairwise tree.
fn grid_integral(
    ds: &DerivedScalars,
    coupling: &DefectCoupling,
    lambda: f64,
    n: usize,
    power: u32,
) -> f64 {
    let d = coupling.dim();
    let (contrib, symb) = axis_tables(ds, coupling, n);
    let points = n.pow(d as u32);
    let base = ds.a_phi - lambda;
    let sum = pairwise_sum_f64(points, |flat| {
        let mut rest = flat;
        let mut phi_hat = C64::new(0.0, 0.0);
        let mut denom = base;
        for j in (0..d).rev() {
            let m = rest % n;
            rest /= n;
            phi_hat += contrib[j * n + m];
            denom += symb[j * n + m];
        }
        phi_hat.norm_sqr() / denom.powi(power as i32)
    });
    sum / points as f64
}

/// Run the refinement ladder for a grid functional, returning
/// `(value, error_estimate)`.
fn refine(quad: &QuadratureSpec, eval: impl Fn(usize) -> f64) -> (f64, f64) {
    let r = quad.refinements;
    let mut levels = Vec::with_capacity(r + 2);
    if r == 0 {
        // still need two levels for the error estimate
        levels.push(eval(quad.n_per_axis / 2));
    }
    for step in 0..=r {
        levels.push(eval(quad.n_per_axis << step));
    }
    let last = levels[levels.len() - 1];
    let prev = levels[levels.len() - 2];
    let err = (last - prev).abs();
    let mut value = last;
    if quad.use_acceleration && levels.len() >= 3 {
        let x0 = levels[levels.len() - 3];
        let d1 = prev - x0;
        let d2 = last - prev;
        let dd = d2 - d1;
        if dd.abs() > 1e3 * f64::EPSILON * last.abs().max(1.0) {
            value = last - d2 * d2 / dd;
        }
    }
    (value, err)
}

// ─────────────────────────────────────────────────────────────────────────────
// The gap function and its derivative
// ─────────────────────────────────────────────────────────────────────────────

/// Evaluate `𝔣(λ)`, returning `(value, error_estimate)`.
///
/// Refused for `λ` inside the band inflated by the edge guard: the integrand
/// has a non-integrable singularity there.
pub fn f_of_lambda(
    params: &ShiftParams,
    scheme: &CoinScheme,
    lambda: f64,
    quad: &QuadratureSpec,
) -> Result<(f64, f64)> {
    quad.validate()?;
    let ds = derived_scalars(params, scheme);
    guard_outside_band(&ds, lambda, quad.edge_guard)?;
    let coupling = DefectCoupling::new(params, scheme);
    let (integral, err) = refine(quad, |n| grid_integral(&ds, &coupling, lambda, n, 1));
    Ok((lambda - ds.a_omega + integral, err))
}

/// Evaluate `𝔣′(λ) = 1 + (2π)^{-d} ∫ |φ̂_q|²/(T̂₀ − λ)² dk` — always > 1,
/// which is what makes the zero in each gap unique.
pub fn f_prime(
    params: &ShiftParams,
    scheme: &CoinScheme,
    lambda: f64,
    quad: &QuadratureSpec,
) -> Result<(f64, f64)> {
    quad.validate()?;
    let ds = derived_scalars(params, scheme);
    guard_outside_band(&ds, lambda, quad.edge_guard)?;
    let coupling = DefectCoupling::new(params, scheme);
    let (integral, err) = refine(quad, |n| grid_integral(&ds, &coupling, lambda, n, 2));
    Ok((1.0 + integral, err))
}

// ─────────────────────────────────────────────────────────────────────────────
// Bound-state profile
// ─────────────────────────────────────────────────────────────────────────────

/// Sample the candidate bound state
/// `ψ_λ(x) = (2π)^{-d} ∫ e^{ik·x} φ̂_q(k)/(T̂₀(k) − λ) dk`
/// on a finite box (not normalized). At a zero of `𝔣` this is the localized
/// eigenstate of the discriminant, up to the origin component.
pub fn psi_lambda_box(
    params: &ShiftParams,
    scheme: &CoinScheme,
    lambda: f64,
    lattice: &LatticeBox,
    quad: &QuadratureSpec,
) -> Result<LatticeState> {
    quad.validate()?;
    if lattice.dim() != params.dim() {
        return Err(Error::DimensionMismatch {
            what: "bound state lattice",
            expected: params.dim(),
            got: lattice.dim(),
        });
    }
    let ds = derived_scalars(params, scheme);
    guard_outside_band(&ds, lambda, quad.edge_guard)?;
    let coupling = DefectCoupling::new(params, scheme);
    let d = params.dim();
    let n = quad.finest();

    // integrand on the full grid (flat odometer order, last axis fastest)
    let points = n.pow(d as u32);
    let mut g = vec![C64::new(0.0, 0.0); points];
    let (contrib, symb) = axis_tables(&ds, &coupling, n);
    for (flat, slot) in g.iter_mut().enumerate() {
        let mut rest = flat;
        let mut phi_hat = C64::new(0.0, 0.0);
        let mut denom = ds.a_phi - lambda;
        for j in (0..d).rev() {
            let m = rest % n;
            rest /= n;
            phi_hat += contrib[j * n + m];
            denom += symb[j * n + m];
        }
        *slot = phi_hat / denom;
    }

    // roots of unity for the phases e^{i 2π (m·x)/n}
    let roots: Vec<C64> = (0..n)
        .map(|t| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * t as f64 / n as f64))
        .collect();
    let mut out = LatticeState::zero(lattice.clone(), 1);
    let n_i = n as i64;
    lattice.for_each_site(|idx, x| {
        let value = pairwise_sum_c64(points, |flat| {
            let mut rest = flat;
            let mut t_total = 0i64;
            // phase index Σ_j m_j x_j mod n, axes peeled last-first
            for j in (0..d).rev() {
                let m = (rest % n) as i64;
                rest /= n;
                t_total += m * x[j];
            }
            g[flat] * roots[t_total.rem_euclid(n_i) as usize]
        });
        out.data[idx] = value / points as f64;
    });
    Ok(out)
}

/// `ψ_λ` at a single lattice point.
///
/// Same integral as [`psi_lambda_box`], evaluated for one `x`; use the box
/// variant when many sites are needed (it shares the integrand grid).
pub fn psi_lambda_at(
    x: &[i64],
    params: &ShiftParams,
    scheme: &CoinScheme,
    lambda: f64,
    quad: &QuadratureSpec,
) -> Result<C64> {
    quad.validate()?;
    if x.len() != params.dim() {
        return Err(Error::DimensionMismatch {
            what: "psi_lambda_at point",
            expected: params.dim(),
            got: x.len(),
        });
    }
    let ds = derived_scalars(params, scheme);
    guard_outside_band(&ds, lambda, quad.edge_guard)?;
    let coupling = DefectCoupling::new(params, scheme);
    let d = params.dim();
    let n = quad.finest();
    let (contrib, symb) = axis_tables(&ds, &coupling, n);
    let roots: Vec<C64> = (0..n)
        .map(|t| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * t as f64 / n as f64))
        .collect();
    let n_i = n as i64;
    let points = n.pow(d as u32);
    let value = pairwise_sum_c64(points, |flat| {
        let mut rest = flat;
        let mut phi_hat = C64::new(0.0, 0.0);
        let mut denom = ds.a_phi - lambda;
        let mut t_total = 0i64;
        for j in (0..d).rev() {
            let m = rest % n;
            rest /= n;
            phi_hat += contrib[j * n + m];
            denom += symb[j * n + m];
            t_total += m as i64 * x[j];
        }
        phi_hat / denom * roots[t_total.rem_euclid(n_i) as usize]
    });
    Ok(value / points as f64)
}

// ─────────────────────────────────────────────────────────────────────────────
// Zero-finding
// ─────────────────────────────────────────────────────────────────────────────

/// Which spectral gap to search: below the band (down to −1) or above it
/// (up to +1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GapSide {
    Lower,
    Upper,
}

/// A located zero of the gap function.
#[derive(Debug, Clone, Serialize)]
pub struct ZeroReport {
    pub lambda: f64,
    /// `𝔣` at the reported point (should be ≈ 0).
    pub f_value: f64,
    /// Quadrature error estimate at the reported point.
    pub error_estimate: f64,
    pub iterations: usize,
    /// Final bisection bracket.
    pub bracket: (f64, f64),
}

/// Absolute tolerance on `𝔣` at an accepted zero.
const ZERO_FTOL: f64 = 1e-10;
/// Bracket width below which bisection stops regardless.
const ZERO_XTOL: f64 = 1e-12;
/// `|𝔣|` beyond this is treated as divergence toward the band edge.
const DIVERGENCE: f64 = 1e6;
/// Distances from the band edge probed to establish the edge-limit sign.
const EDGE_LADDER: [f64; 5] = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6];

/// Locate the unique zero of `𝔣` in the chosen gap, if there is one.
///
/// The search first checks the sign at the outer endpoint (±1), then walks
/// the edge ladder toward the band until the sign of the near-edge limit
/// stabilizes (two consecutive agreeing signs, or a divergent magnitude).
/// Opposite signs bracket the zero and bisection finishes the job; agreeing
/// signs mean no zero, and `Ok(None)` is returned. Monotonicity of `𝔣` makes
/// this exhaustive: a zero can only be missed if it lies within the edge
/// guard of the band, where no quadrature statement is possible anyway.
pub fn find_zero(
    params: &ShiftParams,
    scheme: &CoinScheme,
    side: GapSide,
    quad: &QuadratureSpec,
) -> Result<Option<ZeroReport>> {
    quad.validate()?;
    if params.dim() < 2 {
        return Err(Error::InvalidValue {
            what: "find_zero",
            detail: "gap search requires at least two lattice axes".into(),
        });
    }
    let ds = derived_scalars(params, scheme);
    let (lo, hi) = band(&ds);
    let (outer, edge, gap_len) = match side {
        GapSide::Upper => (1.0, hi, 1.0 - hi),
        GapSide::Lower => (-1.0, lo, lo + 1.0),
    };
    if gap_len < 2.0 * quad.edge_guard {
        return Err(Error::GapTooNarrow {
            gap: match side {
                GapSide::Upper => "above the band",
                GapSide::Lower => "below the band",
            },
            width: gap_len,
            min_width: 2.0 * quad.edge_guard,
        });
    }

    let eval = |lambda: f64| f_of_lambda(params, scheme, lambda, quad);
    let (f_outer, _) = eval(outer)?;
    // Sign conditions at the outer endpoint: a zero needs 𝔣(1) ≥ 0 above,
    // 𝔣(−1) ≤ 0 below (𝔣 is increasing).
    match side {
        GapSide::Upper if f_outer < 0.0 => return Ok(None),
        GapSide::Lower if f_outer > 0.0 => return Ok(None),
        _ => {}
    }

    // establish the near-edge sign
    let mut near: Option<f64> = None; // the probe offset where the sign settled
    let mut last_sign: Option<bool> = None; // true = positive
    for &eps in EDGE_LADDER.iter().filter(|&&e| e < gap_len / 2.0) {
        let lambda = match side {
            GapSide::Upper => edge + eps,
            GapSide::Lower => edge - eps,
        };
        let (f_edge, _) = eval(lambda)?;
        let sign = f_edge > 0.0;
        if f_edge.abs() > DIVERGENCE {
            near = Some(eps);
            last_sign = Some(sign);
            break;
        }
        if last_sign == Some(sign) {
            near = Some(eps);
            break;
        }
        last_sign = Some(sign);
    }
    let (Some(eps), Some(edge_positive)) = (near, last_sign) else {
        return Ok(None); // sign never stabilized: nothing trustworthy to report
    };
    // a zero requires the edge-side sign opposite to the outer endpoint
    let crossing = match side {
        GapSide::Upper => !edge_positive,
        GapSide::Lower => edge_positive,
    };
    if !crossing {
        return Ok(None);
    }

    // bracket [negative side, positive side] in 𝔣, oriented by λ
    let (mut a, mut b) = match side {
        GapSide::Upper => (edge + eps, outer),
        GapSide::Lower => (outer, edge - eps),
    };
    let mut iterations = 0usize;
    loop {
        let mid = 0.5 * (a + b);
        let (fm, em) = eval(mid)?;
        iterations += 1;
        let width = b - a;
        if fm.abs() < ZERO_FTOL || width < ZERO_XTOL {
            return Ok(Some(ZeroReport {
                lambda: mid,
                f_value: fm,
                error_estimate: em,
                iterations,
                bracket: (a, b),
            }));
        }
        if em > ZERO_FTOL && fm.abs() <= em {
            return Err(Error::QuadratureTooCoarse {
                lambda: mid,
                error_estimate: em,
                needed: ZERO_FTOL,
            });
        }
        if fm < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
        if iterations > 200 {
            return Err(Error::NoConvergence {
                what: "gap-function bisection",
                iterations,
            });
        }
    }
}

// ─────────────────────────────────────────────────────────────────────────────
// Existence criteria
// ─────────────────────────────────────────────────────────────────────────────

/// Outcome of the closed-form existence criteria.
#[derive(Debug, Clone, Serialize)]
pub struct CriteriaReport {
    /// Guarantees a zero of `𝔣` below the band (a state split off downward).
    pub up: bool,
    /// Guarantees a zero of `𝔣` above the band (a state split off upward).
    pub down: bool,
    /// All structural preconditions of the localization statement verified
    /// (coin compatibility, a coupling axis inside `D_l`, on-site values away
    /// from ±1, and — when `p0` is supplied — defect/bulk separation there).
    pub mthm_applicable: bool,
    /// Set when `‖φ_q‖²` sits within machine precision of a criterion
    /// boundary, where the strict/non-strict distinction is meaningless.
    pub tie_warning: bool,
}

/// Evaluate the sufficient conditions for a gap zero on each side, plus the
/// structural preconditions. `p0` is the corner point (entries ±1) at which
/// defect/bulk separation is certified; without it `mthm_applicable` is
/// reported `false` because the precondition set is incomplete.
pub fn criteria_check(
    params: &ShiftParams,
    scheme: &CoinScheme,
    p0: Option<&[f64]>,
) -> Result<CriteriaReport> {
    if params.dim() < 2 {
        return Err(Error::InvalidValue {
            what: "criteria_check",
            detail: "criteria require at least two lattice axes".into(),
        });
    }
    if params.dim() != scheme.dim() {
        return Err(Error::DimensionMismatch {
            what: "criteria_check scheme",
            expected: params.dim(),
            got: scheme.dim(),
        });
    }
    let ds = derived_scalars(params, scheme);
    let lq = ds.lambda_q;
    let cpl = ds.phi_q_norm_sq;
    let (a_o, a_p) = (ds.a_omega, ds.a_phi);

    let mut tie = false;
    let mut near_boundary = |bound: f64| {
        if (cpl - bound).abs() < 1e-12 * bound.abs().max(1.0) {
            tie = true;
        }
    };

    // below the band: strict lower bound, non-strict upper bound
    let up = if (1.0 + a_p).abs() < 1e-15 {
        false
    } else {
        let left = lq * (lq + a_o - a_p);
        let right = (1.0 + a_o) * ((1.0 + a_p) * (1.0 + a_p) - lq * lq) / (1.0 + a_p);
        near_boundary(left);
        near_boundary(right);
        left < cpl && cpl <= right
    };
    // above the band
    let down = if (1.0 - a_p).abs() < 1e-15 {
        false
    } else {
        let left = lq * (lq - a_o + a_p);
        let right = (1.0 - a_o) * ((1.0 - a_p) * (1.0 - a_p) - lq * lq) / (1.0 - a_p);
        near_boundary(left);
        near_boundary(right);
        left < cpl && cpl <= right
    };

    let ratio = check_assumption_ratio(scheme);
    let mut coupled_axis_ok = false;
    for &l in &ratio.valid_l {
        if check_in_dl(params, l)? {
            coupled_axis_ok = true;
        }
    }
    let separation = match p0 {
        Some(p) => check_assumption_ap0(scheme, p)?,
        None => false,
    };
    let mthm_applicable = ratio.all_a() && coupled_axis_ok && check_neq_pm1(&ds) && separation;

    Ok(CriteriaReport {
        up,
        down,
        mthm_applicable,
        tie_warning: tie,
    })
}

/// Single-pole envelope `λ − a_Ω + ‖φ_q‖²/(a_Φ − λ)`: the gap function with
/// the band collapsed to its center. Below the band it under-estimates `𝔣`,
/// above it over-estimates.
pub fn envelope_flat(ds: &DerivedScalars, lambda: f64) -> f64 {
    lambda - ds.a_omega + ds.phi_q_norm_sq / (ds.a_phi - lambda)
}

/// Band-aware envelope `λ − a_Ω + (a_Φ − λ)‖φ_q‖²/((a_Φ − λ)² − λ(q)²)`:
/// the complementary bound (over-estimate below the band, under-estimate
/// above).
pub fn envelope_banded(ds: &DerivedScalars, lambda: f64) -> f64 {
    let am = ds.a_phi - lambda;
    lambda - ds.a_omega + am * ds.phi_q_norm_sq / (am * am - ds.lambda_q * ds.lambda_q)
}

// ─────────────────────────────────────────────────────────────────────────────
// Closed-form reference for single-axis coupling
// ─────────────────────────────────────────────────────────────────────────────

/// Exact gap function for schemes whose hopping and defect coupling live on a
/// single axis, by residue summation of the lattice Green function:
/// with `A = a_Φ − λ`, `b = 2|α_l|`, `r = √(A² − b²)`, `s = sign(A)` and
/// `ρ = (s·r − A)/b`, the moments `(2π)^{-1}∫ e^{inu}/(A + b·cos u) du`
/// equal `(s/r)ρ^{|n|}`, and
///
/// ```text
/// 𝔣(λ) = λ − a_Ω + (s/r)·[ |c₊|² + |c₋|² + Re(2·conj(c₊)c₋e^{−2iθ_l})·ρ² ] .
/// ```
///
/// Errors if more than one axis is active or if `λ` is inside the band.
pub fn single_axis_reference(
    params: &ShiftParams,
    scheme: &CoinScheme,
    lambda: f64,
) -> Result<f64> {
    let ds = derived_scalars(params, scheme);
    let coupling = DefectCoupling::new(params, scheme);
    let mut active: Option<usize> = None;
    for j in 0..params.dim() {
        let busy = ds.alpha[j].norm() > 1e-15
            || coupling.plus[j].norm() > 1e-15
            || coupling.minus[j].norm() > 1e-15;
        if busy {
            if active.is_some() {
                return Err(Error::InvalidValue {
                    what: "single_axis_reference",
                    detail: "more than one axis carries hopping or coupling".into(),
                });
            }
            active = Some(j);
        }
    }
    let Some(l) = active else {
        // fully decoupled defect: pure diagonal shift
        return Ok(lambda - ds.a_omega);
    };
    let a = ds.a_phi - lambda;
    let b = 2.0 * ds.alpha[l].norm();
    if a.abs() <= b {
        let (lo, hi) = band(&ds);
        return Err(Error::InsideBand {
            lambda,
            band_lo: lo,
            band_hi: hi,
            edge_guard: 0.0,
        });
    }
    let c_plus = coupling.plus[l];
    let c_minus = coupling.minus[l];
    let r0 = c_plus.norm_sqr() + c_minus.norm_sqr();
    let integral = if b < 1e-300 {
        r0 / a
    } else {
        let s = if a >= 0.0 { 1.0 } else { -1.0 };
        let r = (a * a - b * b).sqrt();
        let rho = (s * r - a) / b;
        let w = 2.0 * c_plus.conj() * c_minus * C64::from_polar(1.0, -2.0 * ds.theta[l]);
        (s / r) * (r0 + w.re * rho * rho)
    };
    Ok(lambda - ds.a_omega + integral)
}

// ─────────────────────────────────────────────────────────────────────────────
// Feshbach residual
// ─────────────────────────────────────────────────────────────────────────────

/// Numerical check of the Feshbach identity at `λ`.
#[derive(Debug, Clone, Serialize)]
pub struct FeshbachResidual {
    /// `‖F(λ)ψ_λ‖` on the inner box. Proportional to `|𝔣(λ)|` with constant
    /// `‖φ_q‖/|a_Ω − λ|`; in particular it vanishes (to quadrature accuracy)
    /// exactly when `𝔣(λ) = 0`, i.e. when `ψ_λ` is an eigenstate of the
    /// Feshbach operator.
    pub residual: f64,
    /// `‖F(λ)ψ_λ + (𝔣(λ)/(a_Ω − λ))·φ_q‖` on the inner box — the identity
    /// defect, which should sit at quadrature accuracy for compatible coins.
    pub identity_residual: f64,
    /// `|ψ_λ(0)|` — vanishes under coin compatibility; a large value here
    /// explains a large identity residual.
    pub origin_amplitude: f64,
    /// The gap function value used.
    pub f_value: f64,
}

/// Apply the Feshbach operator
/// `F(λ) = Π⊥ (T₀ − λ − (a_Ω − λ)^{-1} |φ_q⟩⟨φ_q|) Π⊥`
/// to the sampled bound state and compare with `−(𝔣(λ)/(a_Ω − λ))·φ_q`.
///
/// The state is sampled on a box of radius `inner_radius + 1` and the stencil
/// is evaluated on the inner box only, so no truncation error enters — the
/// residual reflects quadrature accuracy alone. `λ = a_Ω` is excluded (the
/// defect projection is not invertible there).
pub fn feshbach_residual(
    params: &ShiftParams,
    scheme: &CoinScheme,
    lambda: f64,
    inner_radius: i64,
    quad: &QuadratureSpec,
) -> Result<FeshbachResidual> {
    let ds = derived_scalars(params, scheme);
    if (lambda - ds.a_omega).abs() <= 1e-12 {
        return Err(Error::ExcludedPoint {
            lambda,
            why: "coincides with the defect on-site value a_Ω",
        });
    }
    let (f_value, _) = f_of_lambda(params, scheme, lambda, quad)?;
    let outer_box = LatticeBox::new(params.dim(), inner_radius + 1)?;
    let mut psi = psi_lambda_box(params, scheme, lambda, &outer_box, quad)?;
    let origin = outer_box.origin_index();
    let origin_amplitude = psi.data[origin].norm();
    psi.data[origin] = C64::new(0.0, 0.0);

    let coupling = DefectCoupling::new(params, scheme);
    // ⟨φ_q, ψ⟩ over the unit shell
    let mut overlap = C64::new(0.0, 0.0);
    for j in 0..params.dim() {
        let up = outer_box
            .neighbor(origin, j, 1, BoundaryPolicy::TruncateZero)
            .unwrap();
        let down = outer_box
            .neighbor(origin, j, -1, BoundaryPolicy::TruncateZero)
            .unwrap();
        overlap += coupling.plus[j].conj() * psi.data[up];
        overlap += coupling.minus[j].conj() * psi.data[down];
    }
    let defect_weight = overlap / (ds.a_omega - lambda);
    let phi_state = coupling.as_state(&outer_box)?;
    let expected_weight = -f_value / (ds.a_omega - lambda);

    let mut t0_psi = apply_free_discriminant(&psi, params, scheme, BoundaryPolicy::TruncateZero)?;
    // F ψ = Π⊥[T₀ψ − λψ − defect_weight·φ_q]; compare with expected_weight·φ_q
    t0_psi.axpy(C64::new(-lambda, 0.0), &psi);
    t0_psi.axpy(-defect_weight, &phi_state);
    t0_psi.data[origin] = C64::new(0.0, 0.0);

    let mut identity_sq = 0.0f64;
    let mut residual_sq = 0.0f64;
    outer_box.for_each_site(|idx, x| {
        if x.iter().any(|&c| c.abs() > inner_radius) || idx == origin {
            return;
        }
        let f_psi = t0_psi.data[idx];
        residual_sq += f_psi.norm_sqr();
        identity_sq += (f_psi - expected_weight * phi_state.data[idx]).norm_sqr();
    });
    Ok(FeshbachResidual {
        residual: residual_sq.sqrt(),
        identity_residual: identity_sq.sqrt(),
        origin_amplitude,
        f_value,
    })
}

// ─────────────────────────────────────────────────────────────────────────────
// Envelope property
// ─────────────────────────────────────────────────────────────────────────────

/// Check that the computed `𝔣(λ)` lies strictly between the two envelopes,
/// with the orientation appropriate to the gap side: below the band
/// `flat < 𝔣 < banded`, above it `banded < 𝔣 < flat`.
pub fn bounds_check(
    params: &ShiftParams,
    scheme: &CoinScheme,
    lambda: f64,
    quad: &QuadratureSpec,
) -> Result<bool> {
    let ds = derived_scalars(params, scheme);
    let (value, _) = f_of_lambda(params, scheme, lambda, quad)?;
    let flat = envelope_flat(&ds, lambda);
    let banded = envelope_banded(&ds, lambda);
    let (lo, _) = band(&ds);
    Ok(if lambda < lo {
        flat < value && value < banded
    } else {
        banded < value && value < flat
    })
}

// ─────────────────────────────────────────────────────────────────────────────
// Tests
// ─────────────────────────────────────────────────────────────────────────────

#[cfg(test)]
mod tests {
    use super::*;

    fn cr(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn example_scheme() -> CoinScheme {
        let s = 1.0 / 2f64.sqrt();
        CoinScheme::new(
            vec![cr(s), cr(s), cr(0.0), cr(0.0)],
            vec![cr(0.5), cr(-0.5), cr(2f64.sqrt() / 2.0), cr(0.0)],
        )
        .unwrap()
    }

    fn params_at(p1: f64, p2: f64) -> ShiftParams {
        ShiftParams::new(
            vec![p1, p2],
            vec![cr((1.0 - p1 * p1).sqrt()), cr((1.0 - p2 * p2).sqrt())],
        )
        .unwrap()
    }

    /// Flagship closed form: hopping only on axis 1 with b = |q₁|, so
    /// 𝔣(λ) = λ − a_Ω + sign·(√(λ² − |q₁|²) − |λ|·sign)… spelled per gap:
    /// above the band I = (r − λ)/2, below I = (−λ − r)/2, r = √(λ² − q₁²).
    fn flagship_f(lambda: f64, a_omega: f64, q1_sq: f64) -> f64 {
        let r = (lambda * lambda - q1_sq).sqrt();
        let integral = if lambda > 0.0 {
            (r - lambda) / 2.0
        } else {
            (-lambda - r) / 2.0
        };
        lambda - a_omega + integral
    }

    #[test]
    fn quadrature_spec_validation() {
        let quad = QuadratureSpec {
            n_per_axis: 30,
            ..Default::default()
        };
        assert!(matches!(
            f_of_lambda(&params_at(0.9, 0.9), &example_scheme(), 0.8, &quad),
            Err(Error::InvalidValue { .. })
        ));
        let quad = QuadratureSpec {
            n_per_axis: 33,
            ..Default::default()
        };
        assert!(f_of_lambda(&params_at(0.9, 0.9), &example_scheme(), 0.8, &quad).is_err());
        assert_eq!(QuadratureSpec::for_dim(3).n_per_axis, 48);
        assert_eq!(QuadratureSpec::default().finest(), 256);
    }

    #[test]
    fn gap_function_matches_the_closed_form() {
        let params = params_at(0.9, 0.9);
        let scheme = example_scheme();
        let quad = QuadratureSpec::default();
        for &lambda in &[
            0.45f64, 0.5, 0.555, 0.6, 0.7, 0.85, 1.0, -0.45, -0.5, -0.7, -0.97, -1.0,
        ] {
            let (value, err) = f_of_lambda(&params, &scheme, lambda, &quad).unwrap();
            let reference = flagship_f(lambda, 0.45, 0.19);
            assert!(
                (value - reference).abs() < 1e-11,
                "λ = {lambda}: quadrature {value} vs closed form {reference}"
            );
            assert!(err < 1e-10, "λ = {lambda}: error estimate {err}");
            let residue = single_axis_reference(&params, &scheme, lambda).unwrap();
            assert!(
                (residue - reference).abs() < 1e-13,
                "λ = {lambda}: residue form {residue} vs {reference}"
            );
        }
    }

    #[test]
    fn endpoint_values_of_the_flagship() {
        let params = params_at(0.9, 0.9);
        let scheme = example_scheme();
        let quad = QuadratureSpec::default();
        let (f_hi, _) = f_of_lambda(&params, &scheme, 1.0, &quad).unwrap();
        let (f_lo, _) = f_of_lambda(&params, &scheme, -1.0, &quad).unwrap();
        assert!((f_hi - 0.5).abs() < 1e-12, "𝔣(1) = {f_hi}");
        assert!((f_lo + 1.4).abs() < 1e-12, "𝔣(−1) = {f_lo}");
    }

    #[test]
    fn band_guard_rejects_interior_points() {
        let params = params_at(0.9, 0.9);
        let scheme = example_scheme();
        let quad = QuadratureSpec::default();
        let hi = 0.19f64.sqrt();
        assert!(matches!(
            f_of_lambda(&params, &scheme, 0.2, &quad),
            Err(Error::InsideBand { .. })
        ));
        assert!(matches!(
            f_of_lambda(&params, &scheme, -hi, &quad),
            Err(Error::InsideBand { .. })
        ));
        // exactly at the guard boundary is allowed
        assert!(f_of_lambda(&params, &scheme, hi + 1e-6, &quad).is_ok());
        assert!(f_of_lambda(&params, &scheme, hi + 0.9e-6, &quad).is_err());
    }

    #[test]
    fn derivative_exceeds_one_and_matches_finite_differences() {
        let params = params_at(0.9, 0.9);
        let scheme = example_scheme();
        let quad = QuadratureSpec::default();
        for &lambda in &[0.5f64, 0.62, 0.9, -0.6, -0.95] {
            let (fp, err) = f_prime(&params, &scheme, lambda, &quad).unwrap();
            assert!(fp > 1.0, "𝔣′({lambda}) = {fp}");
            let h = 1e-6;
            let (f_plus, _) = f_of_lambda(&params, &scheme, lambda + h, &quad).unwrap();
            let (f_minus, _) = f_of_lambda(&params, &scheme, lambda - h, &quad).unwrap();
            let fd = (f_plus - f_minus) / (2.0 * h);
            assert!(
                (fp - fd).abs() < 1e-6 + 10.0 * err,
                "λ = {lambda}: 𝔣′ {fp} vs centered difference {fd}"
            );
        }
    }

    #[test]
    fn acceleration_does_not_change_converged_values() {
        let params = params_at(0.9, 0.9);
        let scheme = example_scheme();
        let plain = QuadratureSpec {
            refinements: 2,
            ..Default::default()
        };
        let accel = QuadratureSpec {
            refinements: 2,
            use_acceleration: true,
            ..Default::default()
        };
        let (v0, _) = f_of_lambda(&params, &scheme, 0.7, &plain).unwrap();
        let (v1, _) = f_of_lambda(&params, &scheme, 0.7, &accel).unwrap();
        assert!(
            (v0 - v1).abs() < 1e-12,
            "Δ² changed a converged value: {v0} vs {v1}"
        );
    }

    #[test]
    fn zero_of_the_flagship_upper_gap() {
        let params = params_at(0.9, 0.9);
        let scheme = example_scheme();
        let quad = QuadratureSpec::default();
        let hit = find_zero(&params, &scheme, GapSide::Upper, &quad)
            .unwrap()
            .expect("the flagship has an upper-gap zero");
        assert!(
            (hit.lambda - 5.0 / 9.0).abs() < 1e-10,
            "λ★ = {} vs 5/9",
            hit.lambda
        );
        assert!(hit.f_value.abs() < 1e-10);
        assert!(hit.iterations < 100);
        let miss = find_zero(&params, &scheme, GapSide::Lower, &quad).unwrap();
        assert!(miss.is_none(), "no zero below the band: {miss:?}");
    }

    #[test]
    fn no_zero_when_criteria_fail() {
        // p = (0.6, 0.6): 𝔣 stays positive above and negative below.
        let params = params_at(0.6, 0.6);
        let scheme = example_scheme();
        let quad = QuadratureSpec::default();
        assert!(find_zero(&params, &scheme, GapSide::Upper, &quad)
            .unwrap()
            .is_none());
        assert!(find_zero(&params, &scheme, GapSide::Lower, &quad)
            .unwrap()
            .is_none());
    }

    #[test]
    fn one_dimensional_search_is_refused() {
        let scheme = CoinScheme::new(vec![cr(1.0), cr(0.0)], vec![cr(0.0), cr(1.0)]).unwrap();
        let params = ShiftParams::new(vec![0.8], vec![cr(0.6)]).unwrap();
        assert!(matches!(
            find_zero(&params, &scheme, GapSide::Upper, &QuadratureSpec::default()),
            Err(Error::InvalidValue { .. })
        ));
        assert!(matches!(
            criteria_check(&params, &scheme, None),
            Err(Error::InvalidValue { .. })
        ));
    }

    #[test]
    fn narrow_gap_is_refused() {
        // p → 0 drives the band to fill [−1, 1].
        let params = params_at(0.0005, 0.0005);
        let scheme = example_scheme();
        assert!(matches!(
            find_zero(&params, &scheme, GapSide::Upper, &QuadratureSpec::default()),
            Err(Error::GapTooNarrow { .. })
        ));
    }

    #[test]
    fn coarse_grids_near_a_zero_are_detected() {
        // a_Ω = 0.28 places the zero ~0.014 above the band edge: a 32-node
        // grid cannot certify 𝔣 there, and the search must say so rather
        // than return garbage.
        let scheme = CoinScheme::new(
            example_scheme().phi,
            vec![cr(0.5), cr(-0.5), cr(2f64.sqrt() / 2.0), cr(0.0)],
        )
        .unwrap();
        let p2 = 0.56; // a_Ω = p₂/2 = 0.28
        let params = params_at(0.9, p2);
        let coarse = QuadratureSpec {
            n_per_axis: 32,
            refinements: 1,
            ..Default::default()
        };
        let result = find_zero(&params, &scheme, GapSide::Upper, &coarse);
        assert!(
            matches!(result, Err(Error::QuadratureTooCoarse { .. })),
            "expected a coarseness error, got {result:?}"
        );
        // the default grid resolves the same zero cleanly
        let fine = QuadratureSpec::default();
        let hit = find_zero(&params, &scheme, GapSide::Upper, &fine)
            .unwrap()
            .expect("zero exists");
        let reference = flagship_f(hit.lambda, 0.28, 0.19);
        assert!(reference.abs() < 1e-9, "𝔣(λ★) = {reference}");
    }

    #[test]
    fn criteria_on_the_flagship_family() {
        let scheme = example_scheme();
        // p = (0.9, 0.9): upward split-off only.
        let report = criteria_check(&params_at(0.9, 0.9), &scheme, Some(&[1.0, 1.0])).unwrap();
        assert!(!report.up);
        assert!(report.down);
        assert!(report.mthm_applicable);
        assert!(!report.tie_warning);
        // p = (0.6, 0.6): neither side.
        let report = criteria_check(&params_at(0.6, 0.6), &scheme, Some(&[1.0, 1.0])).unwrap();
        assert!(!report.up && !report.down);
        assert!(
            report.mthm_applicable,
            "preconditions hold even with no zero"
        );
        // no corner point supplied → preconditions incomplete
        let report = criteria_check(&params_at(0.9, 0.9), &scheme, None).unwrap();
        assert!(!report.mthm_applicable);
        // Ω = Φ → compatibility fails
        let phi = example_scheme().phi;
        let same = CoinScheme::new(phi.clone(), phi).unwrap();
        let report = criteria_check(&params_at(0.9, 0.9), &same, Some(&[1.0, 1.0])).unwrap();
        assert!(!report.mthm_applicable);
    }

    #[test]
    fn envelopes_bracket_the_gap_function() {
        let params = params_at(0.9, 0.9);
        let scheme = example_scheme();
        let ds = derived_scalars(&params, &scheme);
        // frozen reference values at λ = 0.7 (above the band: banded < 𝔣 < flat)
        let flat = envelope_flat(&ds, 0.7);
        let banded = envelope_banded(&ds, 0.7);
        let f = flagship_f(0.7, 0.45, 0.19);
        assert!((flat - 0.182142857142857).abs() < 1e-12, "flat = {flat}");
        assert!(
            (banded - 0.139166666666667).abs() < 1e-12,
            "banded = {banded}"
        );
        assert!((f - 0.173861278752583).abs() < 1e-12, "𝔣 = {f}");
        assert!(banded < f && f < flat);
        // below the band the order reverses
        let quad = QuadratureSpec::default();
        for &lambda in &[-0.6f64, -0.8, -0.95] {
            let (f, _) = f_of_lambda(&params, &scheme, lambda, &quad).unwrap();
            assert!(
                envelope_flat(&ds, lambda) < f && f < envelope_banded(&ds, lambda),
                "λ = {lambda}: {} < {f} < {} violated",
                envelope_flat(&ds, lambda),
                envelope_banded(&ds, lambda)
            );
        }
    }

    #[test]
    fn bound_state_vanishes_at_the_origin_for_compatible_coins() {
        let params = params_at(0.9, 0.9);
        let scheme = example_scheme();
        let quad = QuadratureSpec::default();
        let lattice = LatticeBox::new(2, 1).unwrap();
        for &lambda in &[0.5f64, 5.0 / 9.0, 0.8, -0.6, -0.99] {
            let psi = psi_lambda_box(&params, &scheme, lambda, &lattice, &quad).unwrap();
            let amp = psi.data[lattice.origin_index()].norm();
            assert!(amp < 1e-10, "ψ_{lambda}(0) = {amp}");
        }
    }

    #[test]
    fn bound_state_origin_need_not_vanish_for_incompatible_coins() {
        // Ω = Φ violates compatibility; the origin amplitude is genuinely
        // nonzero there.
        let params = params_at(0.9, 0.9);
        let phi = example_scheme().phi;
        let same = CoinScheme::new(phi.clone(), phi).unwrap();
        let quad = QuadratureSpec::default();
        let lattice = LatticeBox::new(2, 1).unwrap();
        let psi = psi_lambda_box(&params, &same, 0.6, &lattice, &quad).unwrap();
        assert!(
            psi.data[lattice.origin_index()].norm() > 1e-3,
            "compatibility failure should show up at the origin"
        );
    }

    #[test]
    fn bound_state_decays_away_from_the_defect() {
        let params = params_at(0.9, 0.9);
        let scheme = example_scheme();
        let quad = QuadratureSpec::default();
        let lattice = LatticeBox::new(2, 6).unwrap();
        let psi = psi_lambda_box(&params, &scheme, 5.0 / 9.0, &lattice, &quad).unwrap();
        let at = |x: i64, y: i64| psi.data[lattice.index(&[x, y]).unwrap()].norm();
        assert!(at(1, 0) > 1e-2);
        assert!(
            at(5, 0) < at(1, 0) * 0.1,
            "no decay along the coupling axis"
        );
        // the flagship coupling lives on axis 1 alone: nothing on axis 2
        assert!(at(0, 3) < 1e-12);
    }

    #[test]
    fn feshbach_identity_holds_at_quadrature_accuracy() {
        let params = params_at(0.9, 0.9);
        let scheme = example_scheme();
        let quad = QuadratureSpec::default();
        for &lambda in &[0.5f64, 0.7, -0.6, -0.9] {
            let res = feshbach_residual(&params, &scheme, lambda, 8, &quad).unwrap();
            assert!(
                res.identity_residual < 1e-9,
                "λ = {lambda}: identity residual {}",
                res.identity_residual
            );
            assert!(res.origin_amplitude < 1e-10);
        }
    }

    #[test]
    fn feshbach_residual_tracks_the_gap_function() {
        let params = params_at(0.9, 0.9);
        let scheme = example_scheme();
        let quad = QuadratureSpec::default();
        let ds = derived_scalars(&params, &scheme);
        let coupling_norm = ds.phi_q_norm_sq.sqrt();
        // at the zero the bound state is a Feshbach eigenstate
        let at_zero = feshbach_residual(&params, &scheme, 5.0 / 9.0, 8, &quad).unwrap();
        assert!(
            at_zero.residual < 1e-6 * coupling_norm,
            "residual {} at the zero",
            at_zero.residual
        );
        // away from it, ‖Fψ_λ‖ = |𝔣(λ)|·‖φ_q‖/|a_Ω − λ| up to quadrature
        for &lambda in &[0.7f64, 0.9, -0.6, -0.95] {
            let probe = feshbach_residual(&params, &scheme, lambda, 8, &quad).unwrap();
            let predicted = probe.f_value.abs() * coupling_norm / (ds.a_omega - lambda).abs();
            assert!(
                (probe.residual - predicted).abs() < 1e-6 * predicted,
                "λ = {lambda}: ‖Fψ‖ = {} vs predicted {}",
                probe.residual,
                predicted
            );
        }
    }

    #[test]
    fn feshbach_excludes_the_defect_value() {
        let params = params_at(0.9, 0.9);
        let scheme = example_scheme();
        // a_Ω = 0.45 lies inside the upper gap for this fixture
        assert!(matches!(
            feshbach_residual(&params, &scheme, 0.45, 6, &QuadratureSpec::default()),
            Err(Error::ExcludedPoint { .. })
        ));
        // the gap function itself is fine there, and nonzero
        let (f, _) = f_of_lambda(&params, &scheme, 0.45, &QuadratureSpec::default()).unwrap();
        assert!(f.abs() > 0.1, "𝔣(a_Ω) = {f} should be away from zero");
    }

    #[test]
    fn pointwise_sampler_agrees_with_the_box_sampler() {
        let params = params_at(0.9, 0.9);
        let scheme = example_scheme();
        let quad = QuadratureSpec::default();
        let lattice = LatticeBox::new(2, 3).unwrap();
        let psi = psi_lambda_box(&params, &scheme, 0.6, &lattice, &quad).unwrap();
        for x in [[0i64, 0], [1, 0], [-2, 1], [3, -3]] {
            let single = psi_lambda_at(&x, &params, &scheme, 0.6, &quad).unwrap();
            let boxed = psi.data[lattice.index(&x).unwrap()];
            assert!(
                (single - boxed).norm() < 1e-14,
                "x = {x:?}: {single} vs {boxed}"
            );
        }
    }

    #[test]
    fn overlap_from_position_samples_matches_the_integral() {
        // ⟨φ_q, ψ_λ⟩ from the unit-shell samples must equal the integral
        // term of 𝔣, i.e. 𝔣(λ) − λ + a_Ω.
        let params = params_at(0.9, 0.9);
        let scheme = example_scheme();
        let quad = QuadratureSpec::default();
        let coupling = DefectCoupling::new(&params, &scheme);
        let ds = derived_scalars(&params, &scheme);
        for &lambda in &[0.5f64, 0.7, -0.8] {
            let mut overlap = C64::new(0.0, 0.0);
            for j in 0..2 {
                let mut plus_site = [0i64; 2];
                plus_site[j] = 1;
                let mut minus_site = [0i64; 2];
                minus_site[j] = -1;
                overlap += coupling.plus[j].conj()
                    * psi_lambda_at(&plus_site, &params, &scheme, lambda, &quad).unwrap();
                overlap += coupling.minus[j].conj()
                    * psi_lambda_at(&minus_site, &params, &scheme, lambda, &quad).unwrap();
            }
            let (f, _) = f_of_lambda(&params, &scheme, lambda, &quad).unwrap();
            let integral_term = f - lambda + ds.a_omega;
            assert!(
                (overlap.re - integral_term).abs() < 1e-8 && overlap.im.abs() < 1e-10,
                "λ = {lambda}: shell overlap {overlap} vs integral term {integral_term}"
            );
        }
    }

    #[test]
    fn decay_steepens_away_from_the_band() {
        // |ψ_λ(x)| ~ ρ(λ)^|x| along the coupling axis, with ρ shrinking as λ
        // retreats from the band edge.
        let params = params_at(0.9, 0.9);
        let scheme = example_scheme();
        let quad = QuadratureSpec::default();
        let slope_at = |lambda: f64| -> f64 {
            let near = psi_lambda_at(&[3, 0], &params, &scheme, lambda, &quad)
                .unwrap()
                .norm();
            let far = psi_lambda_at(&[6, 0], &params, &scheme, lambda, &quad)
                .unwrap()
                .norm();
            (far / near).ln() / 3.0
        };
        let s1 = slope_at(0.47);
        let s2 = slope_at(0.6);
        let s3 = slope_at(0.9);
        assert!(
            s1 > s2 && s2 > s3,
            "log-slopes must steepen: {s1} ≥ {s2} ≥ {s3}"
        );
        assert!(s1 < 0.0, "profiles must decay, slope {s1}");
    }

    #[test]
    fn bounds_check_over_both_gaps() {
        let params = params_at(0.9, 0.9);
        let scheme = example_scheme();
        let quad = QuadratureSpec::default();
        let hi = 0.19f64.sqrt();
        for i in 0..20 {
            let frac = 0.02 + 0.96 * i as f64 / 19.0;
            let upper = hi + frac * (1.0 - hi);
            let lower = -1.0 + frac * (1.0 - hi);
            assert!(
                bounds_check(&params, &scheme, upper, &quad).unwrap(),
                "envelope violated at λ = {upper}"
            );
            assert!(
                bounds_check(&params, &scheme, lower, &quad).unwrap(),
                "envelope violated at λ = {lower}"
            );
        }
    }

    #[test]
    fn weak_coupling_collapses_everything_to_the_diagonal() {
        // q → 0: 𝔣 → λ − a_Ω, 𝔣′ → 1, and both envelopes pinch together.
        let scheme = example_scheme();
        let quad = QuadratureSpec::default();
        let lambda = 0.7;
        let mut previous = f64::INFINITY;
        for &p in &[0.99f64, 0.9999, 0.999999] {
            let params = params_at(p, p);
            let ds = derived_scalars(&params, &scheme);
            let (f, _) = f_of_lambda(&params, &scheme, lambda, &quad).unwrap();
            let deviation = (f - (lambda - ds.a_omega)).abs();
            assert!(
                deviation < previous,
                "deviation should shrink with q: {deviation} vs {previous}"
            );
            previous = deviation;
            let (fp, _) = f_prime(&params, &scheme, lambda, &quad).unwrap();
            assert!(fp - 1.0 < 10.0 * (1.0 - p * p) + 1e-12);
            let pinch = (envelope_flat(&ds, lambda) - envelope_banded(&ds, lambda)).abs();
            assert!(pinch < 10.0 * (1.0 - p * p));
            assert!(bounds_check(&params, &scheme, lambda, &quad).unwrap());
        }
        assert!(previous < 1e-6);
    }
}
