//! From discriminant spectrum to walk spectrum.
//!
//! The walk operator `U` and its discriminant `T` are tied together by the
//! spectral map `λ ↦ e^{±i·arccos λ}`: the band of the free discriminant
//! sweeps out two symmetric arcs of continuous spectrum on the unit circle,
//! and every gap eigenvalue `λ★` of `T` lifts to the eigenvalue pair
//! `g±(λ★)` of `U`, each carrying a state exponentially localized at the
//! defect. This module implements the map, assembles the resulting spectral
//! picture, and cross-checks claimed eigenvalues against a dense truncation
//! of `U` itself.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analysis::{
    criteria_check, find_zero, CriteriaReport, GapSide, QuadratureSpec, ZeroReport,
};
use crate::discriminant::{band, OracleReport};
use crate::error::{Error, Result};
use crate::evolution::walk_step;
use crate::lattice::{BoundaryPolicy, LatticeBox, LatticeState};
use crate::linalg::{lu_factor, norm_sq_slice, DENSE_BUDGET};
use crate::model::{check_assumption_ratio, check_in_dl, derived_scalars, CoinScheme, ShiftParams};
use crate::C64;

// ─────────────────────────────────────────────────────────────────────────────
// The spectral map
// ─────────────────────────────────────────────────────────────────────────────

/// Upper branch `g₊(λ) = e^{i·arccos λ} = λ + i√(1 − λ²)`.
///
/// Built directly from `λ` so that `Re g₊(λ) = λ` holds exactly in floating
/// point, not just up to the round trip through `arccos`.
pub fn g_plus(lambda: f64) -> Result<C64> {
    if !(-1.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidValue {
            what: "spectral map argument",
            detail: format!("|λ| ≤ 1 required, got {lambda}"),
        });
    }
    Ok(C64::new(lambda, (1.0 - lambda * lambda).sqrt()))
}

/// Lower branch `g₋(λ) = e^{−i·arccos λ} = conj(g₊(λ))`.
pub fn g_minus(lambda: f64) -> Result<C64> {
    Ok(g_plus(lambda)?.conj())
}

/// The two arcs `{e^{±iθ} : θ ∈ [theta_min, theta_max]}` swept out by the
/// band of the free discriminant under the spectral map.
#[derive(Debug, Clone, Serialize)]
pub struct ContinuousArcs {
    /// `arccos(band_hi)` — the arc endpoint closest to +1.
    pub theta_min: f64,
    /// `arccos(band_lo)` — the arc endpoint closest to −1.
    pub theta_max: f64,
}

impl ContinuousArcs {
    /// Arcs for a given discriminant band, clamped to `[−1, 1]`.
    pub fn from_band(band_lo: f64, band_hi: f64) -> Self {
        Self {
            theta_min: band_hi.clamp(-1.0, 1.0).acos(),
            theta_max: band_lo.clamp(-1.0, 1.0).acos(),
        }
    }

    /// Whether a unimodular `z` lies on either arc, up to an angular slack.
    pub fn contains(&self, z: C64, tol: f64) -> bool {
        let theta = z.arg().abs();
        theta >= self.theta_min - tol && theta <= self.theta_max + tol
    }
}

// ─────────────────────────────────────────────────────────────────────────────
// Spectral report
// ─────────────────────────────────────────────────────────────────────────────

/// A gap eigenvalue of the discriminant, labeled by the gap it sits in.
#[derive(Debug, Clone, Serialize)]
pub struct TEigenvalue {
    pub gap: GapSide,
    pub lambda: f64,
}

/// The assembled spectral picture of the walk for one parameter set.
#[derive(Debug, Clone, Serialize)]
pub struct SpectralReport {
    /// Band of the free discriminant.
    pub band: (f64, f64),
    /// Continuous spectrum of the walk (two mirror arcs).
    pub arcs: ContinuousArcs,
    /// Closed-form existence verdicts for each gap.
    pub criteria: CriteriaReport,
    /// Gap eigenvalues of the discriminant, certified by the compatibility
    /// conditions (sorted ascending).
    pub t_point_spectrum: Vec<TEigenvalue>,
    /// Walk eigenvalues `g±(λ★)` for each certified `λ★`; a real `λ★ = ±1`
    /// contributes a single point.
    pub u_point_spectrum: Vec<C64>,
    /// Gap-function zeros located numerically while the compatibility
    /// certificate does not hold: reported, but not claimed as spectrum.
    pub unconfirmed_zeros: Vec<f64>,
    /// Whether the compatibility conditions (zero bilinear on every axis,
    /// a coupled axis with admissible shift) were verified.
    pub certified: bool,
    /// For each certified `λ★`, in order, its distance to the nearest kept
    /// eigenvalue of the truncated-matrix diagonalization. Empty when no
    /// diagonalization was supplied.
    pub oracle_residuals: Vec<f64>,
    /// Dense-truncation checks of individual walk eigenvalues, as supplied.
    pub truncation_checks: Vec<TruncationCheck>,
    /// A truncation check at `g = +1` converged with a small residual: the
    /// walk has an eigenvalue at the merge point of the two arcs. Purely
    /// numerical flag, no multiplicity claim.
    pub birth_at_plus_one: bool,
    /// Same at −1.
    pub birth_at_minus_one: bool,
}

/// Residual below which a converged truncation check at `g = ±1` raises the
/// corresponding birth flag.
const BIRTH_RESIDUAL_TOL: f64 = 1e-3;

/// Combine finished analysis and diagonalization results into one report.
///
/// `zeros` are the located gap-function zeros (any order, both gaps mixed);
/// they enter the point spectrum only when the compatibility certificate
/// holds — otherwise they are listed as unconfirmed, since without it a zero
/// of `𝔣` need not correspond to an eigenvalue. `oracle` contributes
/// per-eigenvalue residuals against the truncated discriminant, and
/// `truncation` records dense walk-operator checks; entries at `g = ±1` with
/// a small converged residual set the birth flags.
pub fn assemble_report(
    params: &ShiftParams,
    scheme: &CoinScheme,
    criteria: &CriteriaReport,
    zeros: &[ZeroReport],
    oracle: Option<&OracleReport>,
    truncation: &[TruncationCheck],
) -> Result<SpectralReport> {
    let ds = derived_scalars(params, scheme);
    let (lo, hi) = band(&ds);
    let arcs = ContinuousArcs::from_band(lo, hi);

    let mut sorted: Vec<&ZeroReport> = zeros.iter().collect();
    sorted.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));

    let ratio = check_assumption_ratio(scheme);
    let mut coupled_axis_ok = false;
    for &l in &ratio.valid_l {
        if check_in_dl(params, l)? {
            coupled_axis_ok = true;
        }
    }
    let certified = ratio.all_a() && coupled_axis_ok;

    let kept = oracle.map(|report| report.kept_values());
    let mut t_point_spectrum = Vec::new();
    let mut u_point_spectrum = Vec::new();
    let mut oracle_residuals = Vec::new();
    let mut unconfirmed_zeros = Vec::new();
    for hit in &sorted {
        if !certified {
            unconfirmed_zeros.push(hit.lambda);
            continue;
        }
        let gap = if hit.lambda < lo {
            GapSide::Lower
        } else {
            GapSide::Upper
        };
        t_point_spectrum.push(TEigenvalue {
            gap,
            lambda: hit.lambda,
        });
        let up = g_plus(hit.lambda)?;
        u_point_spectrum.push(up);
        if up.im != 0.0 {
            u_point_spectrum.push(up.conj());
        }
        if let Some(values) = &kept {
            let nearest = values
                .iter()
                .map(|v| (v - hit.lambda).abs())
                .fold(f64::INFINITY, f64::min);
            oracle_residuals.push(nearest);
        }
    }

    let birth_at = |point: f64| {
        truncation.iter().any(|check| {
            (check.g - C64::new(point, 0.0)).norm() <= 1e-9
                && check.converged
                && check.residual < BIRTH_RESIDUAL_TOL
        })
    };
    let birth_at_plus_one = birth_at(1.0);
    let birth_at_minus_one = birth_at(-1.0);

    Ok(SpectralReport {
        band: (lo, hi),
        arcs,
        criteria: criteria.clone(),
        t_point_spectrum,
        u_point_spectrum,
        unconfirmed_zeros,
        certified,
        oracle_residuals,
        truncation_checks: truncation.to_vec(),
        birth_at_plus_one,
        birth_at_minus_one,
    })
}

/// Locate all gap zeros and map them to walk eigenvalues.
///
/// Convenience driver over [`assemble_report`]: runs the existence criteria
/// and the zero search on both gaps, then assembles the picture without any
/// truncated-matrix evidence. A gap too narrow to search (band hugging ±1)
/// is skipped rather than treated as an error.
pub fn spectral_report(
    params: &ShiftParams,
    scheme: &CoinScheme,
    quad: &QuadratureSpec,
) -> Result<SpectralReport> {
    let criteria = criteria_check(params, scheme, None)?;
    let mut zeros: Vec<ZeroReport> = Vec::new();
    for side in [GapSide::Lower, GapSide::Upper] {
        match find_zero(params, scheme, side, quad) {
            Ok(Some(hit)) => zeros.push(hit),
            Ok(None) => {}
            Err(Error::GapTooNarrow { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    assemble_report(params, scheme, &criteria, &zeros, None, &[])
}

// ─────────────────────────────────────────────────────────────────────────────
// Dense truncation cross-check
// ─────────────────────────────────────────────────────────────────────────────

/// Outcome of checking a claimed walk eigenvalue against a dense truncation.
#[derive(Debug, Clone, Serialize)]
pub struct TruncationCheck {
    /// The tested point on the unit circle.
    pub g: C64,
    /// `‖U v − g v‖` for the inverse-iteration vector `v` (unit norm),
    /// with the *claimed* `g`, not a Rayleigh quotient.
    pub residual: f64,
    /// Mass of `v` on the defect site, summed over the fiber.
    pub origin_mass: f64,
    /// Whether successive phase-aligned iterates settled below 1e-12.
    pub converged: bool,
    pub iterations: usize,
}

/// Maximum inverse-iteration sweeps.
const INVIT_MAX: usize = 500;

/// Build the walk operator on a periodic box of the given radius and run
/// inverse iteration at the claimed eigenvalue `g`.
///
/// Periodic closure keeps the truncation exactly unitary, so a genuinely
/// localized eigenstate reproduces `g` up to a boundary-tail error that
/// shrinks exponentially with the radius, while a point that is *not* in the
/// spectrum is pushed to the nearest true eigenvalue and shows up as a large
/// residual. The residual is always computed from the final iterate.
pub fn verify_on_truncation(
    params: &ShiftParams,
    scheme: &CoinScheme,
    g: C64,
    radius: i64,
    seed: u64,
) -> Result<TruncationCheck> {
    truncated_eigenvector(params, scheme, g, radius, seed).map(|(_, check)| check)
}

/// [`verify_on_truncation`], but also returning the final inverse-iteration
/// state (unit norm) so it can be fed back into the walk — e.g. to watch a
/// localized eigenstate refuse to spread.
pub fn truncated_eigenvector(
    params: &ShiftParams,
    scheme: &CoinScheme,
    g: C64,
    radius: i64,
    seed: u64,
) -> Result<(LatticeState, TruncationCheck)> {
    if (g.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidValue {
            what: "claimed walk eigenvalue",
            detail: format!("must lie on the unit circle, got |g| = {}", g.norm()),
        });
    }
    let d = params.dim();
    if scheme.dim() != d {
        return Err(Error::DimensionMismatch {
            what: "truncation check scheme",
            expected: d,
            got: scheme.dim(),
        });
    }
    let lattice = LatticeBox::new(d, radius)?;
    let m = 2 * d;
    let n = lattice.n_sites() * m;
    if n > DENSE_BUDGET {
        return Err(Error::BudgetExceeded {
            order: n,
            budget: DENSE_BUDGET,
        });
    }

    // dense U − gI, column by column
    let mut a = vec![C64::new(0.0, 0.0); n * n];
    let mut basis = LatticeState::zero(lattice.clone(), m);
    for col in 0..n {
        basis.data[col] = C64::new(1.0, 0.0);
        let image = walk_step(&basis, params, scheme, BoundaryPolicy::Periodic)?;
        basis.data[col] = C64::new(0.0, 0.0);
        for row in 0..n {
            a[row * n + col] = image.data[row];
        }
        a[col * n + col] -= g;
    }
    let lu = lu_factor(a, n, 1e-14);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<C64> = (0..n)
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let scale = norm_sq_slice(&v).sqrt();
    v.iter_mut().for_each(|z| *z /= scale);

    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=INVIT_MAX {
        iterations = it;
        let mut next = lu.solve(&v);
        let norm = norm_sq_slice(&next).sqrt();
        next.iter_mut().for_each(|z| *z /= norm);
        // align the arbitrary phase before measuring the step
        let mut overlap = C64::new(0.0, 0.0);
        for (new, old) in next.iter().zip(v.iter()) {
            overlap += new.conj() * old;
        }
        if overlap.norm() > 0.0 {
            let phase = overlap / overlap.norm();
            next.iter_mut().for_each(|z| *z *= phase);
        }
        let step: f64 = next
            .iter()
            .zip(v.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        v = next;
        if step < 1e-12 {
            converged = true;
            break;
        }
    }

    let mut state = LatticeState::zero(lattice.clone(), m);
    state.data.copy_from_slice(&v);
    let image = walk_step(&state, params, scheme, BoundaryPolicy::Periodic)?;
    let residual = pair_residual(&image.data, &v, g);
    let origin_mass = state.site_mass(lattice.origin_index());

    Ok((
        state,
        TruncationCheck {
            g,
            residual,
            origin_mass,
            converged,
            iterations,
        },
    ))
}

fn pair_residual(image: &[C64], v: &[C64], g: C64) -> f64 {
    image
        .iter()
        .zip(v.iter())
        .map(|(u, x)| (u - g * x).norm_sqr())
        .sum::<f64>()
        .sqrt()
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

    #[test]
    fn spectral_map_basics() {
        for &lambda in &[-1.0f64, -0.3, 0.0, 5.0 / 9.0, 1.0] {
            let g = g_plus(lambda).unwrap();
            assert_eq!(g.re, lambda, "real part must be λ exactly");
            assert!(
                (g.norm() - 1.0).abs() < 1e-15,
                "|g({lambda})| = {}",
                g.norm()
            );
            assert_eq!(g_minus(lambda).unwrap(), g.conj());
        }
        assert_eq!(g_plus(1.0).unwrap(), C64::new(1.0, 0.0));
        assert_eq!(g_plus(-1.0).unwrap(), C64::new(-1.0, 0.0));
        assert!(g_plus(1.0 + 1e-12).is_err());
        assert!(g_plus(-1.1).is_err());
    }

    #[test]
    fn arcs_cover_exactly_the_band_image() {
        let hi = 0.19f64.sqrt();
        let arcs = ContinuousArcs::from_band(-hi, hi);
        assert!((arcs.theta_min - hi.acos()).abs() < 1e-15);
        assert!((arcs.theta_max - (-hi).acos()).abs() < 1e-15);
        // the image of a band point is on the arc, both branches
        let inside = g_plus(0.2).unwrap();
        assert!(arcs.contains(inside, 0.0));
        assert!(arcs.contains(inside.conj(), 0.0));
        // gap images are off the arc
        assert!(!arcs.contains(g_plus(5.0 / 9.0).unwrap(), 1e-9));
        assert!(!arcs.contains(C64::new(1.0, 0.0), 1e-9));
        assert!(!arcs.contains(C64::new(-1.0, 0.0), 1e-9));
    }

    #[test]
    fn flagship_report_has_one_certified_pair() {
        let params = params_at(0.9, 0.9);
        let scheme = example_scheme();
        let report = spectral_report(&params, &scheme, &QuadratureSpec::default()).unwrap();
        assert!(report.certified);
        assert_eq!(report.t_point_spectrum.len(), 1);
        let hit = &report.t_point_spectrum[0];
        assert!(
            (hit.lambda - 5.0 / 9.0).abs() < 1e-10,
            "λ★ = {}",
            hit.lambda
        );
        assert_eq!(hit.gap, GapSide::Upper);
        assert!(
            report.criteria.down,
            "the upper-gap criterion must fire here"
        );
        assert_eq!(report.u_point_spectrum.len(), 2);
        let expect = C64::new(5.0 / 9.0, 0.8314794192830981);
        assert!((report.u_point_spectrum[0] - expect).norm() < 1e-10);
        assert!((report.u_point_spectrum[1] - expect.conj()).norm() < 1e-10);
        assert!(report.unconfirmed_zeros.is_empty());
        assert!(report.oracle_residuals.is_empty() && report.truncation_checks.is_empty());
        assert!(!report.birth_at_plus_one && !report.birth_at_minus_one);
        let hi = 0.19f64.sqrt();
        assert!((report.band.1 - hi).abs() < 1e-15);
        assert!((report.arcs.theta_min - hi.acos()).abs() < 1e-15);
    }

    #[test]
    fn assembly_attaches_oracle_and_truncation_evidence() {
        let params = params_at(0.9, 0.9);
        let scheme = example_scheme();
        let quad = QuadratureSpec::default();
        let criteria = criteria_check(&params, &scheme, None).unwrap();
        let zero = find_zero(&params, &scheme, GapSide::Upper, &quad)
            .unwrap()
            .expect("flagship zero");
        let oracle = crate::discriminant::oracle_point_spectrum(
            &params,
            &scheme,
            8,
            &crate::discriminant::OracleOptions::default(),
        )
        .unwrap();
        let fake_birth = TruncationCheck {
            g: C64::new(1.0, 0.0),
            residual: 5e-4,
            origin_mass: 0.2,
            converged: true,
            iterations: 3,
        };
        let report = assemble_report(
            &params,
            &scheme,
            &criteria,
            std::slice::from_ref(&zero),
            Some(&oracle),
            &[fake_birth],
        )
        .unwrap();
        assert_eq!(report.oracle_residuals.len(), 1);
        assert!(
            report.oracle_residuals[0] < 1e-2,
            "radius-8 diagonalization should land near λ★, got {}",
            report.oracle_residuals[0]
        );
        assert_eq!(report.truncation_checks.len(), 1);
        assert!(
            report.birth_at_plus_one,
            "converged small-residual check at +1"
        );
        assert!(!report.birth_at_minus_one);
    }

    #[test]
    fn defect_free_coin_reports_empty_point_spectrum() {
        // With Ω = Φ the walk is translation invariant and T = T₀ has pure
        // band spectrum — yet the integral formula for 𝔣 still has a zero in
        // the lower gap (the compatibility condition is exactly what makes
        // zeros mean eigenvalues). It must be reported as unconfirmed, never
        // as point spectrum.
        let params = params_at(0.9, 0.9);
        let phi = example_scheme().phi;
        let same = CoinScheme::new(phi.clone(), phi).unwrap();
        let report = spectral_report(&params, &same, &QuadratureSpec::default()).unwrap();
        assert!(!report.certified, "Ω = Φ is not a compatible defect");
        assert!(report.t_point_spectrum.is_empty());
        assert!(report.u_point_spectrum.is_empty());
        assert!(report.oracle_residuals.is_empty());
        // 𝔣 is odd for this coin (a_Φ = a_Ω = 0, real symmetric coupling):
        // one mirror pair of uncertified zeros
        assert_eq!(report.unconfirmed_zeros.len(), 2);
        assert!(
            (report.unconfirmed_zeros[0] + 0.5033222956847166).abs() < 1e-9
                && (report.unconfirmed_zeros[1] - 0.5033222956847166).abs() < 1e-9,
            "uncertified zeros at {:?}",
            report.unconfirmed_zeros
        );
    }

    #[test]
    fn truncation_confirms_the_flagship_eigenvalue() {
        let params = params_at(0.9, 0.9);
        let scheme = example_scheme();
        let lambda = 5.0 / 9.0;
        let g = g_plus(lambda).unwrap();
        // radius 8 keeps the dense solve quick; the boundary tail limits the
        // residual to ~e^{−ηL} with η = arccosh(λ★/λ(q)) ≈ 0.72
        let check = verify_on_truncation(&params, &scheme, g, 8, 0x5eed).unwrap();
        assert!(check.converged, "inverse iteration did not settle");
        assert!(
            check.residual < 2e-2,
            "residual {} too large for an eigenvalue",
            check.residual
        );
        assert!(
            check.origin_mass > 0.05,
            "defect state should carry origin mass, got {}",
            check.origin_mass
        );
    }

    #[test]
    fn truncation_rejects_a_non_eigenvalue() {
        let params = params_at(0.9, 0.9);
        let scheme = example_scheme();
        // halfway between the defect eigenvalue and +1: far from everything
        let theta = (5.0f64 / 9.0).acos() / 2.0;
        let g = C64::from_polar(1.0, theta);
        let check = verify_on_truncation(&params, &scheme, g, 8, 0x5eed).unwrap();
        assert!(
            check.residual > 1e-1,
            "residual {} should expose the impostor",
            check.residual
        );
    }

    #[test]
    fn truncation_guards_inputs() {
        let params = params_at(0.9, 0.9);
        let scheme = example_scheme();
        assert!(matches!(
            verify_on_truncation(&params, &scheme, C64::new(0.5, 0.0), 6, 0),
            Err(Error::InvalidValue { .. })
        ));
        assert!(matches!(
            verify_on_truncation(&params, &scheme, C64::new(1.0, 0.0), 40, 0),
            Err(Error::BudgetExceeded { .. })
        ));
    }
}
