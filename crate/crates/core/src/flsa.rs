//! One-dimensional fused lasso signal approximator.
//!
//! Minimizes
//!
//! ```text
//! ½ Σ_k (z_k − y_k)² + λ_s Σ_k |z_k| + λ_f Σ_{k≥2} |z_k − z_{k−1}|
//! ```
//!
//! exactly. The fusion-only problem is solved with the linear-time dynamic
//! programme of Johnson (2013), which tracks the derivative of the running
//! message as a piecewise-linear function; the sparsity term is then applied
//! by soft-thresholding, which commutes with the fusion solve for this
//! one-dimensional chain. Back-pointers reproduce ties exactly, so fused
//! groups come out bit-identical.

use crate::Real;

/// One fused-lasso subproblem: target trajectory and the two penalty weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Flsa1dProblem<T: Real> {
    pub y: Vec<T>,
    pub lam_sparse: T,
    pub lam_fuse: T,
}

/// `sign(v)·max(|v| − κ, 0)`.
#[inline]
pub fn soft_threshold_scalar<T: Real>(v: T, kappa: T) -> T {
    if v > kappa {
        v - kappa
    } else if v < -kappa {
        v + kappa
    } else {
        T::zero()
    }
}

/// Exact minimizer of the fused lasso signal approximator.
pub fn flsa_1d<T: Real>(prob: &Flsa1dProblem<T>) -> Vec<T> {
    let mut z = tv_denoise_1d(&prob.y, prob.lam_fuse);
    for v in z.iter_mut() {
        *v = soft_threshold_scalar(*v, prob.lam_sparse);
    }
    z
}

/// Total-variation denoising `argmin ½‖z − y‖² + λ Σ|z_k − z_{k−1}|`.
pub fn tv_denoise_1d<T: Real>(y: &[T], lam: T) -> Vec<T> {
    let n = y.len();
    if n <= 1 || lam <= T::zero() {
        return y.to_vec();
    }
    let zero = T::zero();
    let one = T::one();

    // knots x with slope/intercept increments (a, b) of the message derivative
    let mut x = vec![zero; 2 * n];
    let mut a = vec![zero; 2 * n];
    let mut b = vec![zero; 2 * n];
    let mut tm = vec![zero; n - 1];
    let mut tp = vec![zero; n - 1];

    tm[0] = -lam + y[0];
    tp[0] = lam + y[0];
    let mut l = n - 1;
    let mut r = n;
    x[l] = tm[0];
    x[r] = tp[0];
    a[l] = one;
    b[l] = -y[0] + lam;
    a[r] = -one;
    b[r] = y[0] + lam;
    let mut afirst = one;
    let mut bfirst = -lam - y[1];
    let mut alast = -one;
    let mut blast = -lam + y[1];

    for k in 1..n - 1 {
        // lowest knot where the derivative exceeds -lam
        let mut alo = afirst;
        let mut blo = bfirst;
        let mut lo = l;
        while lo <= r {
            if alo * x[lo] + blo > -lam {
                break;
            }
            alo += a[lo];
            blo += b[lo];
            lo += 1;
        }
        tm[k] = (-lam - blo) / alo;
        l = lo - 1;
        x[l] = tm[k];

        // highest knot where the derivative is below lam
        let mut ahi = alast;
        let mut bhi = blast;
        let mut hi = r as isize;
        while hi >= l as isize {
            let h = hi as usize;
            if -ahi * x[h] - bhi < lam {
                break;
            }
            ahi += a[h];
            bhi += b[h];
            hi -= 1;
        }
        tp[k] = (lam + bhi) / (-ahi);
        r = (hi + 1) as usize;
        x[r] = tp[k];

        a[l] = alo;
        b[l] = blo + lam;
        a[r] = ahi;
        b[r] = bhi + lam;
        afirst = one;
        bfirst = -lam - y[k + 1];
        alast = -one;
        blast = -lam + y[k + 1];
    }

    // last coefficient: zero of the final derivative
    let mut alo = afirst;
    let mut blo = bfirst;
    let mut lo = l;
    while lo <= r {
        if alo * x[lo] + blo > zero {
            break;
        }
        alo += a[lo];
        blo += b[lo];
        lo += 1;
    }
    let mut z = vec![zero; n];
    z[n - 1] = -blo / alo;
    for k in (0..n - 1).rev() {
        z[k] = if z[k + 1] > tp[k] {
            tp[k]
        } else if z[k + 1] < tm[k] {
            tm[k]
        } else {
            z[k + 1]
        };
    }
    z
}

/// Number of maximal runs of equal consecutive values.
pub fn count_runs<T: Real>(z: &[T]) -> usize {
    if z.is_empty() {
        return 0;
    }
    1 + z.windows(2).filter(|w| w[0] != w[1]).count()
}
