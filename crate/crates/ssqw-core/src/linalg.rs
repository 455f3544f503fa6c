//! Dense linear algebra and deterministic reductions.
//!
//! Two workhorses live here:
//!
//! * a Hermitian eigensolver (Householder tridiagonalization → Sturm-count
//!   bisection → inverse iteration), used by the truncated-matrix oracle.
//!   Complex Hermitian input is embedded as the real symmetric matrix
//!   `[[Re A, −Im A], [Im A, Re A]]`, whose spectrum is that of `A` doubled;
//!   eigenvalues are deduplicated by adjacent pairing and a real eigenvector
//!   `[x; y]` maps back to the complex eigenvector `x + iy`.
//! * an LU factorization with partial pivoting for general complex matrices,
//!   used for shifted inverse iteration on the (non-Hermitian) walk operator.
//!
//! Everything is written for reproducibility first: reductions use a fixed
//! pairwise tree (never a data- or thread-dependent order), so repeated runs
//! produce bit-identical results.

use crate::error::{Error, Result};
use crate::C64;

/// Below this length a plain left-to-right loop is used; above it, the range
/// splits in half. 64 keeps the recursion shallow while staying well inside
/// the regime where linear accumulation error is negligible.
const PAIRWISE_BASE: usize = 64;

/// Dense solves beyond this order are refused: cubic cost and quadratic
/// memory make them impractical here, and a sparse shift-invert path would be
/// the right tool instead.
pub const DENSE_BUDGET: usize = 5000;

fn pairwise_f64_rec(offset: usize, n: usize, f: &dyn Fn(usize) -> f64) -> f64 {
    if n <= PAIRWISE_BASE {
        let mut acc = 0.0;
        for i in offset..offset + n {
            acc += f(i);
        }
        acc
    } else {
        let half = n / 2;
        pairwise_f64_rec(offset, half, f) + pairwise_f64_rec(offset + half, n - half, f)
    }
}

fn pairwise_c64_rec(offset: usize, n: usize, f: &dyn Fn(usize) -> C64) -> C64 {
    if n <= PAIRWISE_BASE {
        let mut acc = C64::new(0.0, 0.0);
        for i in offset..offset + n {
            acc += f(i);
        }
        acc
    } else {
        let half = n / 2;
        pairwise_c64_rec(offset, half, f) + pairwise_c64_rec(offset + half, n - half, f)
    }
}

/// Sum `f(0) + … + f(n−1)` with a fixed balanced reduction tree.
pub fn pairwise_sum_f64(n: usize, f: impl Fn(usize) -> f64) -> f64 {
    pairwise_f64_rec(0, n, &f)
}

/// Complex counterpart of [`pairwise_sum_f64`].
pub fn pairwise_sum_c64(n: usize, f: impl Fn(usize) -> C64) -> C64 {
    pairwise_c64_rec(0, n, &f)
}

/// `Σ |v_i|²` via the pairwise tree.
pub fn norm_sq_slice(v: &[C64]) -> f64 {
    pairwise_sum_f64(v.len(), |i| v[i].norm_sqr())
}

/// `⟨a, b⟩ = Σ conj(a_i)·b_i` via the pairwise tree.
pub fn inner_slice(a: &[C64], b: &[C64]) -> C64 {
    assert_eq!(a.len(), b.len(), "inner product of mismatched lengths");
    pairwise_sum_c64(a.len(), |i| a[i].conj() * b[i])
}

/// Dense row-major complex matrix–vector product.
pub fn matvec(a: &[C64], n: usize, x: &[C64]) -> Vec<C64> {
    assert_eq!(a.len(), n * n);
    assert_eq!(x.len(), n);
    (0..n)
        .map(|r| {
            let row = &a[r * n..(r + 1) * n];
            let mut acc = C64::new(0.0, 0.0);
            for (m, v) in row.iter().zip(x.iter()) {
                acc += m * v;
            }
            acc
        })
        .collect()
}

// ─────────────────────────────────────────────────────────────────────────────
// Real symmetric tridiagonalization
// ─────────────────────────────────────────────────────────────────────────────

/// Symmetric tridiagonal matrix: diagonal `d` and subdiagonal `e` (`len n−1`).
#[derive(Debug, Clone)]
pub struct SymTridiag {
    pub d: Vec<f64>,
    pub e: Vec<f64>,
}

/// Householder tridiagonalization of a real symmetric matrix (row-major,
/// both halves populated). On return `a` holds the Householder vectors in its
/// subdiagonal columns and `tau2[k] = 2/‖v_k‖²`; the returned `(d, e)` is the
/// similar tridiagonal matrix.
fn sym_tridiagonalize(a: &mut [f64], n: usize) -> (SymTridiag, Vec<f64>) {
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n.saturating_sub(1)];
    let mut tau2 = vec![0.0; n.saturating_sub(2)];
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];

    for k in 0..n.saturating_sub(2) {
        // Householder vector zeroing column k below row k+1:
        // v = x + sign(x₀)‖x‖ e₁ over rows k+1..n.
        let mut xnorm_sq = 0.0;
        for i in k + 1..n {
            xnorm_sq += a[i * n + k] * a[i * n + k];
        }
        let xnorm = xnorm_sq.sqrt();
        let x0 = a[(k + 1) * n + k];
        if xnorm == 0.0 {
            e[k] = 0.0;
            continue;
        }
        let sign = if x0 >= 0.0 { 1.0 } else { -1.0 };
        e[k] = -sign * xnorm;
        // store v in column k (kept there for the back-transform)
        a[(k + 1) * n + k] = x0 + sign * xnorm;
        for i in k + 1..n {
            v[i] = a[i * n + k];
        }
        let vnorm_sq = 2.0 * xnorm * (xnorm + x0.abs());
        let t2 = 2.0 / vnorm_sq;
        tau2[k] = t2;

        // p = τ₂ · A v on the trailing block (k+1..n)
        for i in k + 1..n {
            let row = &a[i * n..(i + 1) * n];
            let mut acc = 0.0;
            for j in k + 1..n {
                acc += row[j] * v[j];
            }
            p[i] = t2 * acc;
        }
        // q = p − (τ₂/2 · vᵀp) v
        let mut vtp = 0.0;
        for i in k + 1..n {
            vtp += v[i] * p[i];
        }
        let c = 0.5 * t2 * vtp;
        for i in k + 1..n {
            q[i] = p[i] - c * v[i];
        }
        // A ← A − v qᵀ − q vᵀ on the trailing block (both halves)
        for i in k + 1..n {
            let vi = v[i];
            let qi = q[i];
            let row = &mut a[i * n..(i + 1) * n];
            for j in k + 1..n {
                row[j] -= vi * q[j] + qi * v[j];
            }
        }
    }
    if n >= 2 {
        e[n - 2] = a[(n - 1) * n + n - 2];
    }
    for i in 0..n {
        d[i] = a[i * n + i];
    }
    (SymTridiag { d, e }, tau2)
}

/// Apply the accumulated transform `Q = H_0 H_1 ⋯` to a vector of the
/// tridiagonal problem, recovering an eigenvector of the original matrix.
fn back_transform(a: &[f64], n: usize, tau2: &[f64], z: &mut [f64]) {
    for k in (0..n.saturating_sub(2)).rev() {
        if tau2[k] == 0.0 {
            continue;
        }
        let mut dot = 0.0;
        for i in k + 1..n {
            dot += a[i * n + k] * z[i];
        }
        let s = tau2[k] * dot;
        for i in k + 1..n {
            z[i] -= s * a[i * n + k];
        }
    }
}

// ─────────────────────────────────────────────────────────────────────────────
// Sturm-count bisection
// ─────────────────────────────────────────────────────────────────────────────

/// Number of eigenvalues of the tridiagonal matrix at or below `x`, counted
/// as the nonpositive signs in the LDLᵀ pivot sequence. A vanishing pivot is
/// treated as negative (and replaced by `−pivmin` before the next division),
/// which makes the count the right-continuous choice.
fn sturm_count(t: &SymTridiag, x: f64, pivmin: f64) -> usize {
    let n = t.d.len();
    let mut count = 0usize;
    let mut q = t.d[0] - x;
    if q <= 0.0 {
        count += 1;
    }
    for i in 1..n {
        if q.abs() < pivmin {
            q = -pivmin;
        }
        q = t.d[i] - x - t.e[i - 1] * t.e[i - 1] / q;
        if q <= 0.0 {
            count += 1;
        }
    }
    count
}

/// All eigenvalues of a symmetric tridiagonal matrix, ascending, by bisection
/// on the Sturm count. Deterministic and embarrassingly robust.
pub fn tridiag_eigenvalues(t: &SymTridiag) -> Vec<f64> {
    let n = t.d.len();
    if n == 0 {
        return Vec::new();
    }
    // Gershgorin bounds
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let mut r = 0.0;
        if i > 0 {
            r += t.e[i - 1].abs();
        }
        if i + 1 < n {
            r += t.e[i].abs();
        }
        lo = lo.min(t.d[i] - r);
        hi = hi.max(t.d[i] + r);
    }
    let scale = hi.abs().max(lo.abs()).max(1e-300);
    let pivmin = f64::EPSILON * f64::EPSILON * scale;
    let lo = lo - 2.0 * f64::EPSILON * scale - pivmin;
    let hi = hi + 2.0 * f64::EPSILON * scale + pivmin;

    (0..n)
        .map(|i| {
            // i-th smallest: bisect until the bracket collapses
            let (mut a, mut b) = (lo, hi);
            for _ in 0..128 {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b {
                    break;
                }
                if sturm_count(t, mid, pivmin) <= i {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            0.5 * (a + b)
        })
        .collect()
}

// ─────────────────────────────────────────────────────────────────────────────
// Tridiagonal inverse iteration
// ─────────────────────────────────────────────────────────────────────────────

/// Solve `(T − λ) z = b` by Gaussian elimination with partial pivoting
/// (fill-in limited to two superdiagonals). Near-zero pivots are replaced by
/// `±pivmin` so that a numerically singular shift still yields the dominant
/// null direction.
fn shifted_tridiag_solve(t: &SymTridiag, lambda: f64, b: &[f64], pivmin: f64) -> Vec<f64> {
    let n = t.d.len();
    let mut diag: Vec<f64> = t.d.iter().map(|&v| v - lambda).collect();
    let mut sup1 = vec![0.0; n];
    let mut sup2 = vec![0.0; n];
    let mut sub: Vec<f64> = t.e.clone();
    sup1[..n - 1].copy_from_slice(&t.e[..n - 1]);
    let mut rhs = b.to_vec();
    for i in 0..n - 1 {
        if sub[i].abs() > diag[i].abs() {
            // swap rows i, i+1
            rhs.swap(i, i + 1);
            std::mem::swap(&mut diag[i], &mut sub[i]);
            // row i gains what was row i+1's diagonal/superdiagonal
            std::mem::swap(&mut sup1[i], &mut diag[i + 1]);
            if i + 2 < n {
                std::mem::swap(&mut sup2[i], &mut sup1[i + 1]);
            }
        }
        let piv = if diag[i].abs() < pivmin {
            if diag[i] < 0.0 {
                -pivmin
            } else {
                pivmin
            }
        } else {
            diag[i]
        };
        diag[i] = piv;
        let m = sub[i] / piv;
        diag[i + 1] -= m * sup1[i];
        if i + 2 < n {
            sup1[i + 1] -= m * sup2[i];
        }
        rhs[i + 1] -= m * rhs[i];
    }
    if diag[n - 1].abs() < pivmin {
        diag[n - 1] = if diag[n - 1] < 0.0 { -pivmin } else { pivmin };
    }
    // back substitution
    let mut z = vec![0.0; n];
    z[n - 1] = rhs[n - 1] / diag[n - 1];
    if n >= 2 {
        z[n - 2] = (rhs[n - 2] - sup1[n - 2] * z[n - 1]) / diag[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        z[i] = (rhs[i] - sup1[i] * z[i + 1] - sup2[i] * z[i + 2]) / diag[i];
    }
    z
}

/// Inverse iteration for the eigenvector of a symmetric tridiagonal matrix at
/// (approximately) eigenvalue `lambda`.
fn tridiag_eigenvector(t: &SymTridiag, lambda: f64, seed: u64) -> Result<Vec<f64>> {
    use rand::{Rng, SeedableRng};
    let n = t.d.len();
    let scale =
        t.d.iter()
            .chain(t.e.iter())
            .fold(0.0f64, |m, &v| m.max(v.abs()))
            .max(1e-300);
    let pivmin = f64::EPSILON * scale * 1e-3;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in v.iter_mut() {
        *x /= nv;
    }
    let max_iter = 500;
    for _ in 0..max_iter {
        let z = shifted_tridiag_solve(t, lambda, &v, pivmin);
        let nz = z.iter().map(|x| x * x).sum::<f64>().sqrt();
        for (vi, zi) in v.iter_mut().zip(z.iter()) {
            *vi = zi / nz;
        }
        // residual ‖(T − λ)v‖
        let mut res = 0.0;
        for i in 0..n {
            let mut r = (t.d[i] - lambda) * v[i];
            if i > 0 {
                r += t.e[i - 1] * v[i - 1];
            }
            if i + 1 < n {
                r += t.e[i] * v[i + 1];
            }
            res += r * r;
        }
        if res.sqrt() <= 1e-13 * scale.max(1.0) {
            return Ok(v);
        }
    }
    Err(Error::NoConvergence {
        what: "tridiagonal inverse iteration",
        iterations: max_iter,
    })
}

// ─────────────────────────────────────────────────────────────────────────────
// Hermitian eigensolver (complex, via real doubling)
// ─────────────────────────────────────────────────────────────────────────────

/// Eigensolver for a complex Hermitian matrix.
///
/// Construction performs the expensive tridiagonalization once; eigenvalues
/// come out immediately and eigenvectors are computed on demand. A matrix
/// whose imaginary part vanishes identically takes the direct real symmetric
/// path; otherwise it is embedded at doubled order, which costs ~8× as much —
/// worth knowing when choosing truncation radii.
pub struct HermitianEigenSolver {
    n: usize,
    m: usize,
    doubled: bool,
    reflect: Vec<f64>,
    tau2: Vec<f64>,
    tri: SymTridiag,
    values: Vec<f64>,
    /// Largest split observed between the two embedded copies of an
    /// eigenvalue — a cheap internal consistency diagnostic. Zero on the
    /// real path.
    pub pair_split: f64,
}

impl HermitianEigenSolver {
    /// Factor the matrix (row-major, order `n`). The input is trusted to be
    /// Hermitian; only its lower triangle would be needed, but both halves
    /// are read.
    pub fn new(a: &[C64], n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidValue {
                what: "HermitianEigenSolver",
                detail: "empty matrix".into(),
            });
        }
        if n > DENSE_BUDGET {
            return Err(Error::BudgetExceeded {
                order: n,
                budget: DENSE_BUDGET,
            });
        }
        assert_eq!(a.len(), n * n, "matrix shape");
        let is_real = a.iter().all(|z| z.im == 0.0);
        if is_real {
            let mut big: Vec<f64> = a.iter().map(|z| z.re).collect();
            let (tri, tau2) = sym_tridiagonalize(&mut big, n);
            let values = tridiag_eigenvalues(&tri);
            return Ok(Self {
                n,
                m: n,
                doubled: false,
                reflect: big,
                tau2,
                tri,
                values,
                pair_split: 0.0,
            });
        }
        // Real symmetric embedding [[Re, −Im], [Im, Re]], order m = 2n.
        let m = 2 * n;
        let mut big = vec![0.0f64; m * m];
        for r in 0..n {
            for c in 0..n {
                let z = a[r * n + c];
                big[r * m + c] = z.re;
                big[r * m + n + c] = -z.im;
                big[(n + r) * m + c] = z.im;
                big[(n + r) * m + n + c] = z.re;
            }
        }
        let (tri, tau2) = sym_tridiagonalize(&mut big, m);
        let embedded = tridiag_eigenvalues(&tri);
        // every eigenvalue of the embedding comes in an exact pair
        let mut values = Vec::with_capacity(n);
        let mut pair_split = 0.0f64;
        for i in 0..n {
            let (lo, hi) = (embedded[2 * i], embedded[2 * i + 1]);
            pair_split = pair_split.max(hi - lo);
            values.push(0.5 * (lo + hi));
        }
        Ok(Self {
            n,
            m,
            doubled: true,
            reflect: big,
            tau2,
            tri,
            values,
            pair_split,
        })
    }

    /// Eigenvalues, ascending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.values
    }

    /// Eigenvector for `eigenvalues()[index]`, unit norm. The phase is an
    /// artifact of the iteration seed and carries no meaning.
    pub fn eigenvector(&self, index: usize, seed: u64) -> Result<Vec<C64>> {
        let lambda = self.values[index];
        let mut z = tridiag_eigenvector(&self.tri, lambda, seed)?;
        back_transform(&self.reflect, self.m, &self.tau2, &mut z);
        let mut v: Vec<C64> = if self.doubled {
            (0..self.n).map(|i| C64::new(z[i], z[self.n + i])).collect()
        } else {
            z.iter().map(|&x| C64::new(x, 0.0)).collect()
        };
        let nv = norm_sq_slice(&v).sqrt();
        for x in v.iter_mut() {
            *x /= nv;
        }
        Ok(v)
    }
}

// ─────────────────────────────────────────────────────────────────────────────
// Complex LU with partial pivoting
// ─────────────────────────────────────────────────────────────────────────────

/// LU factorization of a complex matrix, `P A = L U`, row-major in place.
///
/// Pivots smaller than `tiny` in magnitude are replaced by `tiny` (keeping
/// their phase) instead of failing: for shifted inverse iteration a singular
/// shift is the *goal*, and the replacement steers the solve toward the null
/// direction exactly as wanted.
pub struct LuFactors {
    pub lu: Vec<C64>,
    pub n: usize,
    pub perm: Vec<usize>,
    /// Number of pivots that needed the `tiny` replacement.
    pub rescued_pivots: usize,
}

pub fn lu_factor(mut a: Vec<C64>, n: usize, tiny: f64) -> LuFactors {
    assert_eq!(a.len(), n * n, "matrix shape");
    let mut perm: Vec<usize> = (0..n).collect();
    let mut rescued = 0usize;
    for k in 0..n {
        // pivot search in column k
        let mut best = k;
        let mut best_mag = a[k * n + k].norm_sqr();
        for r in k + 1..n {
            let mag = a[r * n + k].norm_sqr();
            if mag > best_mag {
                best = r;
                best_mag = mag;
            }
        }
        if best != k {
            perm.swap(k, best);
            for c in 0..n {
                a.swap(k * n + c, best * n + c);
            }
        }
        let mut piv = a[k * n + k];
        if piv.norm() < tiny {
            piv = if piv.norm() == 0.0 {
                C64::new(tiny, 0.0)
            } else {
                piv * (tiny / piv.norm())
            };
            a[k * n + k] = piv;
            rescued += 1;
        }
        let inv = C64::new(1.0, 0.0) / piv;
        for r in k + 1..n {
            let factor = a[r * n + k] * inv;
            a[r * n + k] = factor;
            if factor != C64::new(0.0, 0.0) {
                let (top, bottom) = a.split_at_mut(r * n);
                let krow = &top[k * n + k + 1..k * n + n];
                let rrow = &mut bottom[k + 1..n];
                for (rr, kk) in rrow.iter_mut().zip(krow.iter()) {
                    *rr -= factor * kk;
                }
            }
        }
    }
    LuFactors {
        lu: a,
        n,
        perm,
        rescued_pivots: rescued,
    }
}

impl LuFactors {
    /// Solve `A x = b` from the factors.
    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut x: Vec<C64> = self.perm.iter().map(|&p| b[p]).collect();
        // forward: L y = Pb (unit diagonal)
        for r in 1..n {
            let dot: C64 = self.lu[r * n..r * n + r]
                .iter()
                .zip(&x[..r])
                .map(|(l, v)| l * v)
                .sum();
            x[r] -= dot;
        }
        // backward: U x = y
        for r in (0..n).rev() {
            let dot: C64 = self.lu[r * n + r + 1..(r + 1) * n]
                .iter()
                .zip(&x[r + 1..])
                .map(|(u, v)| u * v)
                .sum();
            x[r] = (x[r] - dot) / self.lu[r * n + r];
        }
        x
    }
}
