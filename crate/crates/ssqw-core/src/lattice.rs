//! Finite lattice boxes `[−L, L]^d`, boundary policies, and state vectors.
//!
//! Sites are enumerated in odometer order with the *last* axis fastest, so
//! axis `j` carries stride `side^(d−1−j)`. States are stored site-major,
//! block-minor: the `C^m` fiber of site `i` occupies `data[i·m .. (i+1)·m]`.
//! For walk states `m = 2d` (two spin components per axis); the discriminant
//! acts on scalar states with `m = 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::C64;

/// What happens to couplings that cross the wall of the box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryPolicy {
    /// Amplitudes outside the box read as zero; couplings leaving the box are
    /// dropped. Exact for compactly supported states until they reach the
    /// wall, but not norm-preserving afterwards.
    #[default]
    TruncateZero,
    /// Opposite walls are identified. Evolution stays exactly unitary, at the
    /// price of wrap-around artifacts once a state crosses the wall.
    Periodic,
}

/// The box `[−L, L]^d` with precomputed indexing strides.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeBox {
    dim: usize,
    radius: i64,
    side: usize,
    strides: Vec<usize>,
    n_sites: usize,
}

impl LatticeBox {
    /// Build a box of the given dimension and radius. Errors if `dim = 0`,
    /// `radius < 0`, or the site count overflows `usize`.
    pub fn new(dim: usize, radius: i64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidValue {
                what: "LatticeBox.dim",
                detail: "dimension must be at least 1".into(),
            });
        }
        if radius < 0 {
            return Err(Error::InvalidValue {
                what: "LatticeBox.radius",
                detail: format!("radius must be nonnegative, got {radius}"),
            });
        }
        let side = 2 * radius as usize + 1;
        let mut n_sites: usize = 1;
        for _ in 0..dim {
            n_sites = n_sites.checked_mul(side).ok_or(Error::InvalidValue {
                what: "LatticeBox",
                detail: format!("side^dim overflows usize (side = {side}, dim = {dim})"),
            })?;
        }
        // last axis fastest: stride_j = side^(d−1−j)
        let mut strides = vec![1usize; dim];
        for j in (0..dim.saturating_sub(1)).rev() {
            strides[j] = strides[j + 1] * side;
        }
        Ok(Self {
            dim,
            radius,
            side,
            strides,
            n_sites,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> i64 {
        self.radius
    }

    /// Sites per axis, `2L + 1`.
    pub fn side(&self) -> usize {
        self.side
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// Linear index of a coordinate vector, or `None` if outside the box.
    pub fn index(&self, x: &[i64]) -> Option<usize> {
        assert_eq!(x.len(), self.dim, "coordinate dimension mismatch");
        let mut idx = 0usize;
        for (j, &xj) in x.iter().enumerate() {
            if xj.abs() > self.radius {
                return None;
            }
            idx += (xj + self.radius) as usize * self.strides[j];
        }
        Some(idx)
    }

    /// Coordinates of a linear index (odometer decode).
    pub fn site(&self, idx: usize) -> Vec<i64> {
        debug_assert!(idx < self.n_sites);
        let mut x = vec![0i64; self.dim];
        for (xj, stride) in x.iter_mut().zip(&self.strides) {
            *xj = ((idx / stride) % self.side) as i64 - self.radius;
        }
        x
    }

    /// Index of the origin (center of the box).
    pub fn origin_index(&self) -> usize {
        self.strides.iter().map(|s| s * self.radius as usize).sum()
    }

    /// `‖x‖_∞` of the site at `idx`.
    pub fn inf_norm(&self, idx: usize) -> i64 {
        (0..self.dim)
            .map(|j| (((idx / self.strides[j]) % self.side) as i64 - self.radius).abs())
            .max()
            .unwrap()
    }

    /// Index of the neighbor one step along `axis` in direction `dir` (±1),
    /// resolved under the boundary policy. `None` means the coupling is
    /// dropped (truncation at the wall).
    pub fn neighbor(
        &self,
        idx: usize,
        axis: usize,
        dir: i8,
        policy: BoundaryPolicy,
    ) -> Option<usize> {
        debug_assert!(axis < self.dim && (dir == 1 || dir == -1));
        let stride = self.strides[axis];
        let pos = (idx / stride) % self.side;
        if dir == 1 {
            if pos + 1 < self.side {
                Some(idx + stride)
            } else {
                match policy {
                    BoundaryPolicy::TruncateZero => None,
                    BoundaryPolicy::Periodic => Some(idx - (self.side - 1) * stride),
                }
            }
        } else if pos > 0 {
            Some(idx - stride)
        } else {
            match policy {
                BoundaryPolicy::TruncateZero => None,
                BoundaryPolicy::Periodic => Some(idx + (self.side - 1) * stride),
            }
        }
    }

    /// Visit every site in index order, passing `(index, coordinates)`.
    pub fn for_each_site(&self, mut f: impl FnMut(usize, &[i64])) {
        let mut x = vec![-self.radius; self.dim];
        for idx in 0..self.n_sites {
            f(idx, &x);
            // odometer increment, last axis fastest
            for j in (0..self.dim).rev() {
                if x[j] < self.radius {
                    x[j] += 1;
                    break;
                }
                x[j] = -self.radius;
            }
        }
    }
}

/// A state over a [`LatticeBox`] with an `m`-component fiber per site,
/// stored site-major, block-minor.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeState {
    pub lattice: LatticeBox,
    pub ncomp: usize,
    pub data: Vec<C64>,
}

impl LatticeState {
    pub fn zero(lattice: LatticeBox, ncomp: usize) -> Self {
        let n = lattice.n_sites() * ncomp;
        Self {
            lattice,
            ncomp,
            data: vec![C64::new(0.0, 0.0); n],
        }
    }

    /// A point mass: `fiber` placed at `coords`, zero elsewhere.
    pub fn delta(lattice: LatticeBox, coords: &[i64], fiber: &[C64]) -> Result<Self> {
        if fiber.is_empty() {
            return Err(Error::InvalidValue {
                what: "LatticeState.fiber",
                detail: "fiber must have at least one component".into(),
            });
        }
        let idx = lattice.index(coords).ok_or(Error::InvalidValue {
            what: "LatticeState.delta",
            detail: format!(
                "coordinates {coords:?} outside box of radius {}",
                lattice.radius()
            ),
        })?;
        let mut st = Self::zero(lattice, fiber.len());
        st.site_mut(idx).copy_from_slice(fiber);
        Ok(st)
    }

    /// The `C^m` fiber at a site.
    pub fn site(&self, idx: usize) -> &[C64] {
        &self.data[idx * self.ncomp..(idx + 1) * self.ncomp]
    }

    pub fn site_mut(&mut self, idx: usize) -> &mut [C64] {
        &mut self.data[idx * self.ncomp..(idx + 1) * self.ncomp]
    }

    /// `Σ_m |ψ_m(x)|²` — the probability mass carried by one site.
    pub fn site_mass(&self, idx: usize) -> f64 {
        self.site(idx).iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        linalg::norm_sq_slice(&self.data)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `⟨self, other⟩`, conjugate-linear in `self`.
    pub fn inner(&self, other: &Self) -> C64 {
        assert_eq!(self.ncomp, other.ncomp, "fiber dimension mismatch");
        assert_eq!(self.lattice, other.lattice, "lattice mismatch");
        linalg::inner_slice(&self.data, &other.data)
    }

    pub fn scale(&mut self, s: C64) {
        for z in self.data.iter_mut() {
            *z *= s;
        }
    }

    /// `self += a · x`.
    pub fn axpy(&mut self, a: C64, x: &Self) {
        assert_eq!(self.data.len(), x.data.len(), "state length mismatch");
        for (z, &w) in self.data.iter_mut().zip(x.data.iter()) {
            *z += a * w;
        }
    }
}
