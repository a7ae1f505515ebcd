//! GFL: `(1/n)‖𝒴 − 𝒳θ‖² + λ1‖θ‖₁ + λ2‖Dθ‖₁`.
//!
//! The θ-step decouples over time points into `((2/n)𝒳ᵀ𝒳_k + aI) θ_k = rhs_k`,
//! each factorized once per solve. The z-step decouples over pairs into
//! one-dimensional fused-lasso problems with weights `λ1/a` and `λ2/a`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::gen::scaled_xty;
use super::{AdmmConfig, AdmmSolution, AdmmState};
use crate::design::{PartialCorrField, StackedDesign};
use crate::flsa::{flsa_1d, Flsa1dProblem};
use crate::{Error, Real, Result};

/// Cached per-time factors of `(2/n)𝒳ᵀ𝒳_k + aI`.
#[derive(Debug, Clone)]
pub struct GflThetaStep<T: Real> {
    factors: Vec<Cholesky<T, Dyn>>,
    base: DVector<T>,
    pairs: usize,
    a: T,
}

impl<T: Real> GflThetaStep<T> {
    pub fn new(design: &StackedDesign<T>, a: T) -> Result<Self> {
        let b = design.num_pairs();
        let scale = T::of(2.0) / T::of_usize(design.n());
        let factors = (0..design.num_times())
            .map(|k| {
                let m = design.xtx(k) * scale + DMatrix::identity(b, b) * a;
                Cholesky::new(m).ok_or(Error::SingularBlock(k))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { factors, base: scaled_xty(design), pairs: b, a })
    }

    /// `θ` minimizing the augmented Lagrangian for fixed `z`, `u`.
    pub fn apply(&self, z: &DVector<T>, u: &DVector<T>) -> DVector<T> {
        let b = self.pairs;
        let mut rhs = &self.base + (z - u) * self.a;
        for (k, f) in self.factors.iter().enumerate() {
            let mut seg = rhs.rows_mut(k * b, b);
            f.solve_mut(&mut seg);
        }
        rhs
    }
}

/// Closed-form θ-step.
pub fn gfl_theta_update<T: Real>(step: &GflThetaStep<T>, z: &DVector<T>, u: &DVector<T>) -> DVector<T> {
    step.apply(z, u)
}

/// Pairwise fused-lasso proximal map applied to `w = θ + u`.
fn fused_prox<T: Real>(w: &DVector<T>, times: usize, pairs: usize, lam_sparse: T, lam_fuse: T) -> DVector<T> {
    let mut out = DVector::zeros(w.len());
    for pair in 0..pairs {
        let y: Vec<T> = (0..times).map(|k| w[k * pairs + pair]).collect();
        let z = flsa_1d(&Flsa1dProblem { y, lam_sparse, lam_fuse });
        for (k, v) in z.into_iter().enumerate() {
            out[k * pairs + pair] = v;
        }
    }
    out
}

/// Minimizes the GFL objective for fixed `σ`. `lambda2 == 0` is the per-time lasso.
pub fn solve_gfl<T: Real>(
    design: &StackedDesign<T>,
    lambda1: T,
    lambda2: T,
    cfg: &AdmmConfig<T>,
    warm: Option<&DVector<T>>,
) -> Result<AdmmSolution<T>> {
    cfg.validate()?;
    if lambda1 < T::zero() || lambda2 < T::zero() {
        return Err(Error::InvalidArgument("penalties must be non-negative".into()));
    }
    let (times, b) = (design.num_times(), design.num_pairs());
    let step = GflThetaStep::new(design, cfg.a)?;
    let (ls, lf) = (lambda1 / cfg.a, lambda2 / cfg.a);
    let mut state = AdmmState::new(times * b, warm);
    let diagnostics = state.run(cfg, |z, u| Ok(step.apply(z, u)), |w| fused_prox(w, times, b, ls, lf))?;
    Ok(AdmmSolution { theta: PartialCorrField::from_flat(times, design.p(), &state.z)?, diagnostics })
}
