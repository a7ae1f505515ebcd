//! Subgradient optimality certificates for the penalized objectives.
//!
//! A point is optimal when zero lies in the subdifferential of the
//! objective. For the chain penalties used here (coordinate-wise `l1` plus
//! `l1` on adjacent differences) the admissible subgradients form intervals,
//! so feasibility can be decided exactly by propagating an interval along
//! the chain. The residual reported is the smallest per-coordinate slack
//! that makes the stationarity system feasible.

use nalgebra::DVector;

use crate::design::{DifferenceOperator, StackedDesign};
use crate::Real;

/// Whether the chain stationarity system is feasible with per-coordinate slack `eps`.
///
/// Coordinate `k` must satisfy `g_k + λ_s s_k + U_k − U_{k+1} ∈ [−ε, ε]` with
/// `s_k ∈ ∂|z_k|`, `U_k ∈ λ_f ∂|z_k − z_{k−1}|` and `U_1 = U_{T+1} = 0`.
fn chain_feasible<T: Real>(grad: &[T], z: &[T], lam_sparse: T, lam_fuse: T, tie_tol: T, eps: T) -> bool {
    let n = z.len();
    let (mut lo, mut hi) = (T::zero(), T::zero());
    for k in 0..n {
        let (smin, smax) = if z[k].abs() > tie_tol {
            let s = z[k].signum();
            (s, s)
        } else {
            (-T::one(), T::one())
        };
        let next_lo = lo + grad[k] + lam_sparse * smin - eps;
        let next_hi = hi + grad[k] + lam_sparse * smax + eps;
        let (wlo, whi) = if k + 1 == n {
            (T::zero(), T::zero())
        } else {
            let d = z[k + 1] - z[k];
            if d.abs() > tie_tol {
                let w = lam_fuse * d.signum();
                (w, w)
            } else {
                (-lam_fuse, lam_fuse)
            }
        };
        lo = next_lo.max(wlo);
        hi = next_hi.min(whi);
        if lo > hi {
            return false;
        }
    }
    true
}

/// Smallest slack under which `z` is stationary for
/// `f(z) + λ_s Σ|z_k| + λ_f Σ|z_k − z_{k−1}|`, given `grad = ∇f(z)`.
///
/// Values within `tie_tol` of zero (or of their neighbour) are treated as
/// exact zeros (ties).
pub fn chain_subgradient_residual<T: Real>(grad: &[T], z: &[T], lam_sparse: T, lam_fuse: T, tie_tol: T) -> T {
    assert_eq!(grad.len(), z.len());
    if chain_feasible(grad, z, lam_sparse, lam_fuse, tie_tol, T::zero()) {
        return T::zero();
    }
    let mut hi = grad.iter().fold(T::one(), |acc, g| acc + g.abs()) + (lam_sparse + lam_fuse * T::of(2.0)) * T::of_usize(z.len());
    let mut lo = T::zero();
    for _ in 0..200 {
        let mid = (lo + hi) * T::of(0.5);
        if chain_feasible(grad, z, lam_sparse, lam_fuse, tie_tol, mid) {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= T::default_epsilon() * (T::one() + hi) {
            break;
        }
    }
    hi
}

/// Largest violation of `g_j + λ s_j = 0`, `s_j ∈ ∂|z_j|`, over coordinates.
pub fn lasso_subgradient_residual<T: Real>(grad: &DVector<T>, z: &DVector<T>, lambda1: T) -> T {
    grad.iter()
        .zip(z.iter())
        .map(|(&g, &v)| if v != T::zero() { (g + lambda1 * v.signum()).abs() } else { (g.abs() - lambda1).max(T::zero()) })
        .fold(T::zero(), |m, v| m.max(v))
}

/// `1 + ‖(2/n) X̃ᵀY‖_∞`, the normalization used by the certificates.
pub fn kkt_scale<T: Real>(design: &StackedDesign<T>) -> T {
    T::one() + design.lambda_max()
}

/// GEN: `(1/n)‖Y − Xθ‖² + λ1‖θ‖₁ + λ2‖Dθ‖²` at time-major flat `theta`.
pub fn gen_objective<T: Real>(design: &StackedDesign<T>, theta: &DVector<T>, lambda1: T, lambda2: T) -> T {
    let d = DifferenceOperator::new(design.num_times(), design.num_pairs());
    design.loss(theta) + lambda1 * theta.lp_norm(1) + lambda2 * d.apply(theta).norm_squared()
}

/// GFL: `(1/n)‖Y − Xθ‖² + λ1‖θ‖₁ + λ2‖Dθ‖₁`.
pub fn gfl_objective<T: Real>(design: &StackedDesign<T>, theta: &DVector<T>, lambda1: T, lambda2: T) -> T {
    let d = DifferenceOperator::new(design.num_times(), design.num_pairs());
    design.loss(theta) + lambda1 * theta.lp_norm(1) + lambda2 * d.apply(theta).lp_norm(1)
}

/// Unnormalized GEN stationarity residual.
pub fn gen_kkt_residual<T: Real>(design: &StackedDesign<T>, theta: &DVector<T>, lambda1: T, lambda2: T) -> T {
    let d = DifferenceOperator::new(design.num_times(), design.num_pairs());
    let grad = design.loss_gradient(theta) + d.gram_apply(theta) * (T::of(2.0) * lambda2);
    lasso_subgradient_residual(&grad, theta, lambda1)
}

/// Unnormalized GFL stationarity residual, maximized over pair trajectories.
pub fn gfl_kkt_residual<T: Real>(design: &StackedDesign<T>, theta: &DVector<T>, lambda1: T, lambda2: T) -> T {
    let (times, b) = (design.num_times(), design.num_pairs());
    let grad = design.loss_gradient(theta);
    let mut worst = T::zero();
    for pair in 0..b {
        let g: Vec<T> = (0..times).map(|k| grad[k * b + pair]).collect();
        let z: Vec<T> = (0..times).map(|k| theta[k * b + pair]).collect();
        worst = worst.max(chain_subgradient_residual(&g, &z, lambda1, lambda2, T::zero()));
    }
    worst
}
