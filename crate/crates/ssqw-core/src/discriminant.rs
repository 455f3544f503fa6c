//! The discriminant operator `T = d S d*` and its truncated-matrix oracle.
//!
//! `d` maps a walk state to the scalar lattice by projecting each fiber onto
//! the local coin eigenvector (`Ω` at the origin, `Φ` elsewhere); its adjoint
//! embeds a scalar function back along the same vectors. Sandwiching the
//! shift gives a Hermitian nearest-neighbor operator on `ℓ²(Z^d)`:
//!
//! ```text
//! (T f)(x) = a(x) f(x) + Σ_j [ hop⁺_j(x) f(x + e_j) + hop⁻_j(x) f(x − e_j) ]
//! hop⁺_j(x) = q_j · conj(χ_{j,1}(x)) · χ_{j,2}(x + e_j)
//! hop⁻_j(x) = conj(q_j) · conj(χ_{j,2}(x)) · χ_{j,1}(x − e_j)
//! ```
//!
//! with `a(x)` the on-site scalar (`a_Ω` at the origin, `a_Φ` in the bulk).
//! The defect-free version `T₀` diagonalizes in Fourier space with symbol
//! `a_Φ + 2Σ_j |α_j| cos(k_j + θ_j)`; its spectrum is the band
//! `[a_Φ − λ(q), a_Φ + λ(q)]`. Everything the defect adds is captured by the
//! coupling vector `φ_q = T δ₀ − a_Ω δ₀`, supported on the 2d unit-shell
//! sites — the quantity the gap-function analysis is built from.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{BoundaryPolicy, LatticeBox, LatticeState};
use crate::linalg::{self, HermitianEigenSolver};
use crate::model::{
    derived_scalars, inner2_sigma_minus, inner2_sigma_plus, CoinScheme, DerivedScalars, ShiftParams,
};
use crate::C64;

// ─────────────────────────────────────────────────────────────────────────────
// Coisometry
// ─────────────────────────────────────────────────────────────────────────────

/// `(d Ψ)(x) = ⟨χ(x), Ψ(x)⟩` — project each fiber onto its coin eigenvector.
pub fn coisometry_apply(state: &LatticeState, scheme: &CoinScheme) -> Result<LatticeState> {
    if state.ncomp != 2 * scheme.dim() || state.lattice.dim() != scheme.dim() {
        return Err(Error::DimensionMismatch {
            what: "coisometry input",
            expected: 2 * scheme.dim(),
            got: state.ncomp,
        });
    }
    let origin = state.lattice.origin_index();
    let mut out = LatticeState::zero(state.lattice.clone(), 1);
    for idx in 0..state.lattice.n_sites() {
        let chi = scheme.chi(idx == origin);
        let fiber = state.site(idx);
        let mut acc = C64::new(0.0, 0.0);
        for k in 0..fiber.len() {
            acc += chi[k].conj() * fiber[k];
        }
        out.data[idx] = acc;
    }
    Ok(out)
}

/// `(d* f)(x) = χ(x) f(x)` — embed a scalar function along the coin vectors.
pub fn coisometry_adjoint_apply(f: &LatticeState, scheme: &CoinScheme) -> Result<LatticeState> {
    if f.ncomp != 1 {
        return Err(Error::DimensionMismatch {
            what: "coisometry adjoint input",
            expected: 1,
            got: f.ncomp,
        });
    }
    if f.lattice.dim() != scheme.dim() {
        return Err(Error::DimensionMismatch {
            what: "coisometry adjoint lattice",
            expected: scheme.dim(),
            got: f.lattice.dim(),
        });
    }
    let origin = f.lattice.origin_index();
    let m = 2 * scheme.dim();
    let mut out = LatticeState::zero(f.lattice.clone(), m);
    for idx in 0..f.lattice.n_sites() {
        let chi = scheme.chi(idx == origin);
        let v = f.data[idx];
        let fiber = out.site_mut(idx);
        for k in 0..m {
            fiber[k] = chi[k] * v;
        }
    }
    Ok(out)
}

// ─────────────────────────────────────────────────────────────────────────────
// Stencil application
// ─────────────────────────────────────────────────────────────────────────────

fn check_scalar_input(f: &LatticeState, dim: usize) -> Result<()> {
    if f.ncomp != 1 {
        return Err(Error::DimensionMismatch {
            what: "discriminant input fiber",
            expected: 1,
            got: f.ncomp,
        });
    }
    if f.lattice.dim() != dim {
        return Err(Error::DimensionMismatch {
            what: "discriminant input lattice",
            expected: dim,
            got: f.lattice.dim(),
        });
    }
    Ok(())
}

/// Hop coefficient along `axis` from a site whose coin vector is `from_chi`
/// to its `+e_j` neighbor with coin vector `to_chi`.
fn hop_plus(
    params: &ShiftParams,
    scheme: &CoinScheme,
    axis: usize,
    from_defect: bool,
    to_defect: bool,
) -> C64 {
    let from = scheme.chi(from_defect);
    let to = scheme.chi(to_defect);
    params.q[axis] * from[2 * axis].conj() * to[2 * axis + 1]
}

fn hop_minus(
    params: &ShiftParams,
    scheme: &CoinScheme,
    axis: usize,
    from_defect: bool,
    to_defect: bool,
) -> C64 {
    let from = scheme.chi(from_defect);
    let to = scheme.chi(to_defect);
    params.q[axis].conj() * from[2 * axis + 1].conj() * to[2 * axis]
}

fn apply_t_impl(
    f: &LatticeState,
    params: &ShiftParams,
    scheme: &CoinScheme,
    policy: BoundaryPolicy,
    with_defect: bool,
) -> Result<LatticeState> {
    check_scalar_input(f, params.dim())?;
    if params.dim() != scheme.dim() {
        return Err(Error::DimensionMismatch {
            what: "discriminant scheme",
            expected: params.dim(),
            got: scheme.dim(),
        });
    }
    let d = params.dim();
    let lat = f.lattice.clone();
    let origin = lat.origin_index();
    let ds = derived_scalars(params, scheme);
    let a_bulk = ds.a_phi;
    let a_def = if with_defect { ds.a_omega } else { ds.a_phi };
    let mut out = LatticeState::zero(lat.clone(), 1);
    for idx in 0..lat.n_sites() {
        let here_defect = with_defect && idx == origin;
        let mut acc = if here_defect { a_def } else { a_bulk } * f.data[idx];
        for j in 0..d {
            if let Some(up) = lat.neighbor(idx, j, 1, policy) {
                let up_defect = with_defect && up == origin;
                acc += hop_plus(params, scheme, j, here_defect, up_defect) * f.data[up];
            }
            if let Some(down) = lat.neighbor(idx, j, -1, policy) {
                let down_defect = with_defect && down == origin;
                acc += hop_minus(params, scheme, j, here_defect, down_defect) * f.data[down];
            }
        }
        out.data[idx] = acc;
    }
    Ok(out)
}

/// Apply the discriminant `T = d S d*` (defect at the origin).
pub fn apply_discriminant(
    f: &LatticeState,
    params: &ShiftParams,
    scheme: &CoinScheme,
    policy: BoundaryPolicy,
) -> Result<LatticeState> {
    apply_t_impl(f, params, scheme, policy, true)
}

/// Apply the defect-free discriminant `T₀` (bulk coin everywhere).
pub fn apply_free_discriminant(
    f: &LatticeState,
    params: &ShiftParams,
    scheme: &CoinScheme,
    policy: BoundaryPolicy,
) -> Result<LatticeState> {
    apply_t_impl(f, params, scheme, policy, false)
}

// ─────────────────────────────────────────────────────────────────────────────
// Symbol, band, defect coupling
// ─────────────────────────────────────────────────────────────────────────────

/// Fourier symbol of `T₀` at quasi-momentum `k`:
/// `a_Φ + Σ_j 2|α_j| cos(k_j + θ_j)` (convention `f̂(k) = Σ_x e^{−ik·x} f(x)`).
pub fn free_symbol(ds: &DerivedScalars, k: &[f64]) -> f64 {
    assert_eq!(k.len(), ds.alpha.len(), "quasi-momentum dimension");
    let mut v = ds.a_phi;
    for ((kj, alpha), theta) in k.iter().zip(&ds.alpha).zip(&ds.theta) {
        v += 2.0 * alpha.norm() * (kj + theta).cos();
    }
    v
}

/// The essential band `[a_Φ − λ(q), a_Φ + λ(q)]`.
pub fn band(ds: &DerivedScalars) -> (f64, f64) {
    (ds.a_phi - ds.lambda_q, ds.a_phi + ds.lambda_q)
}

/// The defect coupling vector `φ_q = T δ₀ − a_Ω δ₀`, supported on the unit
/// shell `{±e_j}`.
#[derive(Debug, Clone)]
pub struct DefectCoupling {
    /// `φ_q(+e_j) = conj(q_j)·conj(φ_{j,2})·ω_{j,1}` per axis.
    pub plus: Vec<C64>,
    /// `φ_q(−e_j) = q_j·conj(φ_{j,1})·ω_{j,2}` per axis.
    pub minus: Vec<C64>,
}

impl DefectCoupling {
    pub fn new(params: &ShiftParams, scheme: &CoinScheme) -> Self {
        let d = params.dim();
        let mut plus = Vec::with_capacity(d);
        let mut minus = Vec::with_capacity(d);
        for j in 0..d {
            let phi = scheme.phi_block(j);
            let om = scheme.omega_block(j);
            minus.push(params.q[j] * inner2_sigma_plus(phi, om));
            plus.push(params.q[j].conj() * inner2_sigma_minus(phi, om));
        }
        Self { plus, minus }
    }

    pub fn dim(&self) -> usize {
        self.plus.len()
    }

    /// `‖φ_q‖²`.
    pub fn norm_sq(&self) -> f64 {
        self.plus
            .iter()
            .chain(self.minus.iter())
            .map(|z| z.norm_sqr())
            .sum()
    }

    /// Fourier transform `φ̂_q(k) = Σ_j [φ_q(e_j) e^{−ik_j} + φ_q(−e_j) e^{ik_j}]`.
    pub fn phi_q_hat(&self, k: &[f64]) -> C64 {
        assert_eq!(k.len(), self.dim(), "quasi-momentum dimension");
        let mut acc = C64::new(0.0, 0.0);
        for ((kj, plus), minus) in k.iter().zip(&self.plus).zip(&self.minus) {
            let phase = C64::from_polar(1.0, *kj);
            acc += plus * phase.conj() + minus * phase;
        }
        acc
    }

    /// Embed `φ_q` as a scalar state on a box (radius ≥ 1).
    pub fn as_state(&self, lattice: &LatticeBox) -> Result<LatticeState> {
        if lattice.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                what: "defect coupling lattice",
                expected: self.dim(),
                got: lattice.dim(),
            });
        }
        if lattice.radius() < 1 {
            return Err(Error::InvalidValue {
                what: "defect coupling lattice",
                detail: "radius must be at least 1 to hold the unit shell".into(),
            });
        }
        let mut st = LatticeState::zero(lattice.clone(), 1);
        let origin = lattice.origin_index();
        for j in 0..self.dim() {
            let up = lattice
                .neighbor(origin, j, 1, BoundaryPolicy::TruncateZero)
                .unwrap();
            let down = lattice
                .neighbor(origin, j, -1, BoundaryPolicy::TruncateZero)
                .unwrap();
            st.data[up] = self.plus[j];
            st.data[down] = self.minus[j];
        }
        Ok(st)
    }
}

// ─────────────────────────────────────────────────────────────────────────────
// Dense truncation and oracle
// ─────────────────────────────────────────────────────────────────────────────

/// Dense matrix of the truncated discriminant on a box (row-major,
/// order `n_sites`). Refused beyond [`linalg::DENSE_BUDGET`].
pub fn truncated_matrix(
    params: &ShiftParams,
    scheme: &CoinScheme,
    lattice: &LatticeBox,
    policy: BoundaryPolicy,
    with_defect: bool,
) -> Result<Vec<C64>> {
    if lattice.dim() != params.dim() || params.dim() != scheme.dim() {
        return Err(Error::DimensionMismatch {
            what: "truncated matrix inputs",
            expected: lattice.dim(),
            got: params.dim(),
        });
    }
    let n = lattice.n_sites();
    if n > linalg::DENSE_BUDGET {
        return Err(Error::BudgetExceeded {
            order: n,
            budget: linalg::DENSE_BUDGET,
        });
    }
    let d = params.dim();
    let origin = lattice.origin_index();
    let ds = derived_scalars(params, scheme);
    let mut m = vec![C64::new(0.0, 0.0); n * n];
    for row in 0..n {
        let here_defect = with_defect && row == origin;
        m[row * n + row] = C64::new(if here_defect { ds.a_omega } else { ds.a_phi }, 0.0);
        for j in 0..d {
            if let Some(up) = lattice.neighbor(row, j, 1, policy) {
                let up_defect = with_defect && up == origin;
                m[row * n + up] += hop_plus(params, scheme, j, here_defect, up_defect);
            }
            if let Some(down) = lattice.neighbor(row, j, -1, policy) {
                let down_defect = with_defect && down == origin;
                m[row * n + down] += hop_minus(params, scheme, j, here_defect, down_defect);
            }
        }
    }
    Ok(m)
}

/// Options for [`oracle_point_spectrum`].
#[derive(Debug, Clone)]
pub struct OracleOptions {
    /// Band inflation: eigenvalues within `delta_band` of the band are
    /// treated as discretization spillover, not defect candidates.
    pub delta_band: f64,
    /// A candidate is kept when the relative mass of its eigenvector in the
    /// outer shell `‖x‖_∞ > L/2` stays below this threshold.
    pub shell_threshold: f64,
    /// Seed for the inverse-iteration start vectors.
    pub seed: u64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            delta_band: 5e-3,
            shell_threshold: 0.01,
            seed: 0x5eed,
        }
    }
}

/// One eigenvalue outside the inflated band, with its localization evidence.
#[derive(Debug, Clone, Serialize)]
pub struct OracleEigenvalue {
    pub value: f64,
    /// Relative eigenvector mass in the outer shell `‖x‖_∞ > L/2`; small
    /// means genuinely localized, large means truncation artifact.
    pub decay_score: f64,
    pub kept: bool,
}

/// Point-spectrum estimate from dense diagonalization of the truncated
/// discriminant. Serializes to `{L, band, eigenvalues}`.
#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    #[serde(rename = "L")]
    pub radius: i64,
    pub band: [f64; 2],
    pub eigenvalues: Vec<OracleEigenvalue>,
}

impl OracleReport {
    /// Values that pass the decay filter.
    pub fn kept_values(&self) -> Vec<f64> {
        self.eigenvalues
            .iter()
            .filter(|e| e.kept)
            .map(|e| e.value)
            .collect()
    }
}

/// Diagonalize the discriminant truncated to `[−L, L]^d` (zero boundary) and
/// report every eigenvalue outside the inflated band together with a decay
/// score separating genuine localized states from truncation artifacts.
pub fn oracle_point_spectrum(
    params: &ShiftParams,
    scheme: &CoinScheme,
    radius: i64,
    opts: &OracleOptions,
) -> Result<OracleReport> {
    let lattice = LatticeBox::new(params.dim(), radius)?;
    let matrix = truncated_matrix(params, scheme, &lattice, BoundaryPolicy::TruncateZero, true)?;
    let n = lattice.n_sites();
    let solver = HermitianEigenSolver::new(&matrix, n)?;
    let ds = derived_scalars(params, scheme);
    let (lo, hi) = band(&ds);
    let shell = radius as f64 / 2.0;
    let mut eigenvalues = Vec::new();
    for (index, &value) in solver.eigenvalues().iter().enumerate() {
        if value >= lo - opts.delta_band && value <= hi + opts.delta_band {
            continue;
        }
        let v = solver.eigenvector(index, opts.seed)?;
        let outer = linalg::pairwise_sum_f64(n, |i| {
            if (lattice.inf_norm(i) as f64) > shell {
                v[i].norm_sqr()
            } else {
                0.0
            }
        });
        let decay_score = outer; // eigenvectors are unit norm
        eigenvalues.push(OracleEigenvalue {
            value,
            decay_score,
            kept: decay_score < opts.shell_threshold,
        });
    }
    Ok(OracleReport {
        radius,
        band: [lo, hi],
        eigenvalues,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

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

    fn example_params() -> ShiftParams {
        let q = (1.0f64 - 0.81).sqrt();
        ShiftParams::new(vec![0.9, 0.9], vec![cr(q), cr(q)]).unwrap()
    }

    /// A deliberately complex-valued scheme satisfying nothing in particular,
    /// for exercising the generic (non-real) code paths.
    fn complex_scheme() -> (ShiftParams, CoinScheme) {
        let params = ShiftParams::new(
            vec![0.6, 0.3],
            vec![
                C64::from_polar(0.8, 0.7),
                C64::from_polar((1.0f64 - 0.09).sqrt(), -1.1),
            ],
        )
        .unwrap();
        let raw = [
            C64::new(0.4, 0.1),
            C64::new(-0.3, 0.5),
            C64::new(0.2, -0.6),
            C64::new(0.1, 0.2),
        ];
        let n: f64 = raw.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let phi: Vec<C64> = raw.iter().map(|z| z / n).collect();
        let raw2 = [
            C64::new(-0.2, 0.3),
            C64::new(0.7, 0.1),
            C64::new(0.3, 0.3),
            C64::new(-0.1, -0.4),
        ];
        let n2: f64 = raw2.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let omega: Vec<C64> = raw2.iter().map(|z| z / n2).collect();
        (params, CoinScheme::new(phi, omega).unwrap())
    }

    fn random_scalar(lat: &LatticeBox, seed: u64) -> LatticeState {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut st = LatticeState::zero(lat.clone(), 1);
        for z in st.data.iter_mut() {
            *z = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        let n = st.norm();
        st.scale(cr(1.0 / n));
        st
    }

    #[test]
    fn coisometry_composition_is_identity() {
        // d d* = 1 on scalar states, for both schemes.
        for (params, scheme) in [(example_params(), example_scheme()), complex_scheme()] {
            let _ = params;
            let lat = LatticeBox::new(2, 3).unwrap();
            let f = random_scalar(&lat, 1);
            let up = coisometry_adjoint_apply(&f, &scheme).unwrap();
            let back = coisometry_apply(&up, &scheme).unwrap();
            let mut diff = back;
            diff.axpy(cr(-1.0), &f);
            assert!(diff.norm() < 1e-12, "‖(dd* − 1)f‖ = {}", diff.norm());
        }
    }

    #[test]
    fn coin_equals_twice_projection_minus_identity() {
        // C = 2 d*d − 1 on walk states.
        let scheme = example_scheme();
        let lat = LatticeBox::new(2, 2).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let mut psi = LatticeState::zero(lat, 4);
        for z in psi.data.iter_mut() {
            *z = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        let mut via_coin = psi.clone();
        crate::evolution::apply_coin(&mut via_coin, &scheme).unwrap();
        let projected =
            coisometry_adjoint_apply(&coisometry_apply(&psi, &scheme).unwrap(), &scheme).unwrap();
        let mut expect = projected;
        expect.scale(cr(2.0));
        expect.axpy(cr(-1.0), &psi);
        expect.axpy(cr(-1.0), &via_coin);
        assert!(
            expect.norm() < 1e-12,
            "‖(2d*d − 1 − C)ψ‖ = {}",
            expect.norm()
        );
    }

    #[test]
    fn discriminant_factorizes_through_the_walk() {
        // T f = d S d* f, on both policies and both schemes.
        for (params, scheme) in [(example_params(), example_scheme()), complex_scheme()] {
            for policy in [BoundaryPolicy::TruncateZero, BoundaryPolicy::Periodic] {
                let lat = LatticeBox::new(2, 3).unwrap();
                let f = random_scalar(&lat, 4);
                let direct = apply_discriminant(&f, &params, &scheme, policy).unwrap();
                let embedded = coisometry_adjoint_apply(&f, &scheme).unwrap();
                let shifted = crate::evolution::apply_shift(&embedded, &params, policy).unwrap();
                let via_walk = coisometry_apply(&shifted, &scheme).unwrap();
                let mut diff = direct;
                diff.axpy(cr(-1.0), &via_walk);
                assert!(
                    diff.norm() < 1e-12,
                    "‖(T − dSd*)f‖ = {} under {policy:?}",
                    diff.norm()
                );
            }
        }
    }

    #[test]
    fn discriminant_column_at_origin_is_the_coupling_vector() {
        // T δ₀ = a_Ω δ₀ + φ_q: ties the stencil to the coupling vector the
        // gap analysis is built from.
        for (params, scheme) in [(example_params(), example_scheme()), complex_scheme()] {
            let lat = LatticeBox::new(2, 2).unwrap();
            let delta = LatticeState::delta(lat.clone(), &[0, 0], &[cr(1.0)]).unwrap();
            let col =
                apply_discriminant(&delta, &params, &scheme, BoundaryPolicy::TruncateZero).unwrap();
            let ds = derived_scalars(&params, &scheme);
            let coupling = DefectCoupling::new(&params, &scheme);
            let mut expect = coupling.as_state(&lat).unwrap();
            expect.data[lat.origin_index()] = cr(ds.a_omega);
            let mut diff = col;
            diff.axpy(cr(-1.0), &expect);
            assert!(
                diff.norm() < 1e-14,
                "‖Tδ₀ − (a_Ω δ₀ + φ_q)‖ = {}",
                diff.norm()
            );
            // and ‖φ_q‖² matches the scalar pipeline
            assert!((coupling.norm_sq() - ds.phi_q_norm_sq).abs() < 1e-14);
        }
    }

    #[test]
    fn example_coupling_values() {
        // φ_q(±e₁) = ∓q₁/(2√2) · (conj for +), φ_q(±e₂) = 0.
        let params = example_params();
        let q1 = params.q[0];
        let c = DefectCoupling::new(&params, &example_scheme());
        let r8 = 2.0 * 2f64.sqrt();
        assert!((c.minus[0] - (-q1 / r8)).norm() < 1e-15);
        assert!((c.plus[0] - q1.conj() / r8).norm() < 1e-15);
        assert_eq!(c.minus[1], cr(0.0));
        assert_eq!(c.plus[1], cr(0.0));
        assert!((c.norm_sq() - q1.norm_sqr() / 4.0).abs() < 1e-15);
    }

    #[test]
    fn coupling_symbol_satisfies_parseval() {
        // grid mean of |φ̂_q(k)|² = ‖φ_q‖², and φ̂_q(0) is the plain sum.
        for (params, scheme) in [(example_params(), example_scheme()), complex_scheme()] {
            let c = DefectCoupling::new(&params, &scheme);
            let n = 64usize;
            let mut mean = 0.0;
            for m1 in 0..n {
                for m2 in 0..n {
                    let k = [
                        2.0 * std::f64::consts::PI * m1 as f64 / n as f64,
                        2.0 * std::f64::consts::PI * m2 as f64 / n as f64,
                    ];
                    mean += c.phi_q_hat(&k).norm_sqr();
                }
            }
            mean /= (n * n) as f64;
            assert!(
                (mean - c.norm_sq()).abs() < 1e-13,
                "Parseval violated: {mean} vs {}",
                c.norm_sq()
            );
            let at_zero = c.phi_q_hat(&[0.0, 0.0]);
            let plain_sum: C64 = c.plus.iter().chain(c.minus.iter()).sum();
            assert!((at_zero - plain_sum).norm() < 1e-15);
        }
    }

    #[test]
    fn free_discriminant_is_defectless() {
        // With Ω = Φ the defect disappears: T = T₀.
        let params = example_params();
        let phi = example_scheme().phi;
        let same = CoinScheme::new(phi.clone(), phi).unwrap();
        let lat = LatticeBox::new(2, 3).unwrap();
        let f = random_scalar(&lat, 12);
        let t = apply_discriminant(&f, &params, &same, BoundaryPolicy::Periodic).unwrap();
        let t0 = apply_free_discriminant(&f, &params, &same, BoundaryPolicy::Periodic).unwrap();
        let mut diff = t;
        diff.axpy(cr(-1.0), &t0);
        assert!(diff.norm() < 1e-15);
    }

    #[test]
    fn plane_waves_diagonalize_the_free_discriminant() {
        // On a periodic box, f(x) = e^{ik·x} with grid momenta is an exact
        // eigenvector of T₀ with eigenvalue the symbol — a direct check of
        // the Fourier convention, including the sign of θ_j.
        for (params, scheme) in [(example_params(), example_scheme()), complex_scheme()] {
            let lat = LatticeBox::new(2, 3).unwrap();
            let side = lat.side() as f64;
            let ds = derived_scalars(&params, &scheme);
            for (m1, m2) in [(0i64, 0i64), (1, 0), (3, 2), (6, 5)] {
                let k = [
                    2.0 * std::f64::consts::PI * m1 as f64 / side,
                    2.0 * std::f64::consts::PI * m2 as f64 / side,
                ];
                let mut f = LatticeState::zero(lat.clone(), 1);
                lat.for_each_site(|idx, x| {
                    let phase = k[0] * x[0] as f64 + k[1] * x[1] as f64;
                    f.data[idx] = C64::from_polar(1.0, phase);
                });
                let tf = apply_free_discriminant(&f, &params, &scheme, BoundaryPolicy::Periodic)
                    .unwrap();
                let expect = free_symbol(&ds, &k);
                let mut max_err = 0.0f64;
                for idx in 0..lat.n_sites() {
                    max_err = max_err.max((tf.data[idx] - expect * f.data[idx]).norm());
                }
                assert!(
                    max_err < 1e-12,
                    "plane wave k = {k:?} not an eigenvector: err {max_err}"
                );
            }
        }
    }

    #[test]
    fn symbol_range_matches_the_band() {
        let (params, scheme) = complex_scheme();
        let ds = derived_scalars(&params, &scheme);
        let (lo, hi) = band(&ds);
        let n = 64;
        let mut min_v = f64::INFINITY;
        let mut max_v = f64::NEG_INFINITY;
        for i in 0..n {
            for j in 0..n {
                let k = [
                    2.0 * std::f64::consts::PI * i as f64 / n as f64,
                    2.0 * std::f64::consts::PI * j as f64 / n as f64,
                ];
                let v = free_symbol(&ds, &k);
                min_v = min_v.min(v);
                max_v = max_v.max(v);
                assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
            }
        }
        // the extrema are attained at k_j = −θ_j (max) and π − θ_j (min),
        // sampled only approximately by the grid
        assert!(max_v > hi - 1e-2 && min_v < lo + 1e-2);
    }

    #[test]
    fn truncated_matrix_is_hermitian_and_matches_the_stencil() {
        for policy in [BoundaryPolicy::TruncateZero, BoundaryPolicy::Periodic] {
            let (params, scheme) = complex_scheme();
            let lat = LatticeBox::new(2, 2).unwrap();
            let n = lat.n_sites();
            let m = truncated_matrix(&params, &scheme, &lat, policy, true).unwrap();
            let mut herm = 0.0f64;
            for r in 0..n {
                for c in 0..n {
                    herm = herm.max((m[r * n + c] - m[c * n + r].conj()).norm());
                }
            }
            assert!(herm < 1e-14, "Hermiticity residual {herm} under {policy:?}");

            let f = random_scalar(&lat, 21);
            let via_matrix = linalg::matvec(&m, n, &f.data);
            let via_stencil = apply_discriminant(&f, &params, &scheme, policy).unwrap();
            let mut max_err = 0.0f64;
            for (a, b) in via_matrix.iter().zip(&via_stencil.data) {
                max_err = max_err.max((a - b).norm());
            }
            assert!(
                max_err < 1e-13,
                "matrix vs stencil {max_err} under {policy:?}"
            );
        }
    }

    #[test]
    fn oracle_finds_the_localized_state_of_the_flagship_fixture() {
        // p = (0.9, 0.9): a single defect level above the band near 0.5556,
        // already well converged at L = 8 (the state decays fast).
        let report = oracle_point_spectrum(
            &example_params(),
            &example_scheme(),
            8,
            &OracleOptions::default(),
        )
        .unwrap();
        assert!((report.band[0] + 0.19f64.sqrt()).abs() < 1e-12);
        assert!((report.band[1] - 0.19f64.sqrt()).abs() < 1e-12);
        let kept = report.kept_values();
        assert_eq!(kept.len(), 1, "report: {report:?}");
        assert!(
            (kept[0] - 5.0 / 9.0).abs() < 1e-4,
            "defect level {} vs 5/9",
            kept[0]
        );
        for e in &report.eigenvalues {
            if e.kept {
                assert!(e.decay_score < 5e-3, "decay score {}", e.decay_score);
            }
        }
    }

    #[test]
    fn oracle_reports_nothing_without_a_defect() {
        let phi = example_scheme().phi;
        let same = CoinScheme::new(phi.clone(), phi).unwrap();
        let report =
            oracle_point_spectrum(&example_params(), &same, 8, &OracleOptions::default()).unwrap();
        assert!(
            report.kept_values().is_empty(),
            "spurious point spectrum: {report:?}"
        );
    }

    #[test]
    fn oracle_respects_the_dense_budget() {
        let err = oracle_point_spectrum(
            &example_params(),
            &example_scheme(),
            40,
            &OracleOptions::default(),
        );
        assert!(matches!(err, Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn one_dimensional_three_site_chain_by_hand() {
        // d = 1, L = 1: T is the 3×3 matrix
        //   [ a_Φ      φq(−e)   0    ]
        //   [ φq(−e)*  a_Ω      φq(e)* ]   — wait, rows are sites −1, 0, 1:
        // row −1: a_Φ f(−1) + hop⁺(−1) f(0);  hop⁺(−1) = φ_q(−e)
        // row 0:  a_Ω f(0) + φ_q... no: hop⁺(0) f(1) + hop⁻(0) f(−1) with
        //         hop⁺(0) = q conj(ω₁) φ₂, hop⁻(0) = conj(q) conj(ω₂) φ₁
        // row 1:  a_Φ f(1) + hop⁻(1) f(0);  hop⁻(1) = φ_q(+e)
        let phi = vec![cr(1.0 / 2f64.sqrt()), cr(1.0 / 2f64.sqrt())];
        let omega = vec![cr(0.6), cr(0.8)];
        let scheme = CoinScheme::new(phi, omega).unwrap();
        let params = ShiftParams::new(vec![0.8], vec![cr(0.6)]).unwrap();
        let lat = LatticeBox::new(1, 1).unwrap();
        let m =
            truncated_matrix(&params, &scheme, &lat, BoundaryPolicy::TruncateZero, true).unwrap();
        let s = 1.0 / 2f64.sqrt();
        let a_phi = 0.0;
        let a_omega = 0.8 * (0.36 - 0.64);
        let c = DefectCoupling::new(&params, &scheme);
        assert!((c.minus[0] - cr(0.6 * s * 0.8)).norm() < 1e-15);
        assert!((c.plus[0] - cr(0.6 * s * 0.6)).norm() < 1e-15);
        let expect = [
            cr(a_phi),
            c.minus[0],
            cr(0.0),
            cr(0.6 * 0.8 * s),
            cr(a_omega),
            cr(0.6 * 0.6 * s),
            cr(0.0),
            c.plus[0],
            cr(a_phi),
        ];
        for (i, (&got, &want)) in m.iter().zip(expect.iter()).enumerate() {
            assert!((got - want).norm() < 1e-14, "entry {i}: {got} vs {want}");
        }
    }
}
