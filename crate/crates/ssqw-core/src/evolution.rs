//! One time step of the walk and multi-step evolution.
//!
//! A step is `U = S·C`: the coin `C` acts first, reflecting each site's fiber
//! about its coin eigenvector (`Ω` at the origin, `Φ` elsewhere), then the
//! shift `S` mixes each two-component block with its neighbors along that
//! block's axis:
//!
//! ```text
//! (S ψ)_j,1(x) = p_j ψ_j,1(x) + q_j ψ_j,2(x + e_j)
//! (S ψ)_j,2(x) = conj(q_j) ψ_j,1(x − e_j) − p_j ψ_j,2(x)
//! ```
//!
//! `S` is unitary and self-adjoint whenever `p_j² + |q_j|² = 1`; on a finite
//! box this holds exactly under the periodic policy and up to wall effects
//! under truncation.

use crate::error::{Error, Result};
use crate::lattice::{BoundaryPolicy, LatticeState};
use crate::model::{CoinScheme, ShiftParams};
use crate::C64;

fn check_walk_shapes(state: &LatticeState, dim: usize) -> Result<()> {
    if state.lattice.dim() != dim {
        return Err(Error::DimensionMismatch {
            what: "walk state lattice dim",
            expected: dim,
            got: state.lattice.dim(),
        });
    }
    if state.ncomp != 2 * dim {
        return Err(Error::DimensionMismatch {
            what: "walk state fiber",
            expected: 2 * dim,
            got: state.ncomp,
        });
    }
    Ok(())
}

/// Apply the shift `S` out of place.
pub fn apply_shift(
    state: &LatticeState,
    params: &ShiftParams,
    policy: BoundaryPolicy,
) -> Result<LatticeState> {
    check_walk_shapes(state, params.dim())?;
    let d = params.dim();
    let m = 2 * d;
    let lat = state.lattice.clone();
    let mut out = LatticeState::zero(lat.clone(), m);
    let zero = C64::new(0.0, 0.0);
    lat.for_each_site(|idx, _| {
        let base = idx * m;
        for j in 0..d {
            let up = lat.neighbor(idx, j, 1, policy);
            let down = lat.neighbor(idx, j, -1, policy);
            let a_up = up.map_or(zero, |n| state.data[n * m + 2 * j + 1]);
            let a_down = down.map_or(zero, |n| state.data[n * m + 2 * j]);
            out.data[base + 2 * j] = params.p[j] * state.data[base + 2 * j] + params.q[j] * a_up;
            out.data[base + 2 * j + 1] =
                params.q[j].conj() * a_down - params.p[j] * state.data[base + 2 * j + 1];
        }
    });
    Ok(out)
}

/// Apply the coin `C = 2|χ⟩⟨χ| − 1` in place (`χ = Ω` at the origin, `Φ`
/// elsewhere).
pub fn apply_coin(state: &mut LatticeState, scheme: &CoinScheme) -> Result<()> {
    check_walk_shapes(state, scheme.dim())?;
    let m = state.ncomp;
    let origin = state.lattice.origin_index();
    for idx in 0..state.lattice.n_sites() {
        let chi = scheme.chi(idx == origin);
        let fiber = state.site_mut(idx);
        let mut overlap = C64::new(0.0, 0.0);
        for k in 0..m {
            overlap += chi[k].conj() * fiber[k];
        }
        for k in 0..m {
            fiber[k] = 2.0 * overlap * chi[k] - fiber[k];
        }
    }
    Ok(())
}

/// One walk step `U = S·C`.
pub fn walk_step(
    state: &LatticeState,
    params: &ShiftParams,
    scheme: &CoinScheme,
    policy: BoundaryPolicy,
) -> Result<LatticeState> {
    let mut coined = state.clone();
    apply_coin(&mut coined, scheme)?;
    apply_shift(&coined, params, policy)
}

/// Result of a multi-step run: the final state and the origin-site mass
/// `P_0(t)` recorded at every time `t = 0, …, steps`.
#[derive(Debug, Clone)]
pub struct EvolveOutput {
    pub state: LatticeState,
    pub return_series: Vec<f64>,
}

impl EvolveOutput {
    /// Time average `(1/T) Σ_{t=1}^{T} P_0(t)` of the return series.
    pub fn mean_return_probability(&self) -> f64 {
        let t = self.return_series.len() - 1;
        if t == 0 {
            return self.return_series[0];
        }
        self.return_series[1..].iter().sum::<f64>() / t as f64
    }
}

/// Evolve `steps` walk steps from `state`.
///
/// Under [`BoundaryPolicy::TruncateZero`] the run is refused when
/// `steps > radius − 1`: within that horizon a state initially supported at
/// the origin cannot feel the wall, so the finite box reproduces the infinite
/// lattice exactly. (For states with wall-reaching tails the bound is only a
/// heuristic — the tail mass is truncated from step one.)
pub fn evolve_walk(
    state: &LatticeState,
    params: &ShiftParams,
    scheme: &CoinScheme,
    steps: usize,
    policy: BoundaryPolicy,
) -> Result<EvolveOutput> {
    check_walk_shapes(state, params.dim())?;
    if policy == BoundaryPolicy::TruncateZero {
        let max_t = (state.lattice.radius() - 1).max(0) as usize;
        if steps > max_t {
            return Err(Error::LightCone { t: steps, max_t });
        }
    }
    let origin = state.lattice.origin_index();
    let mut series = Vec::with_capacity(steps + 1);
    series.push(state.site_mass(origin));
    let mut current = state.clone();
    for _ in 0..steps {
        apply_coin(&mut current, scheme)?;
        current = apply_shift(&current, params, policy)?;
        series.push(current.site_mass(origin));
    }
    Ok(EvolveOutput {
        state: current,
        return_series: series,
    })
}
