//! ADMM solvers for the GEN and GFL objectives at fixed precision diagonals.
//!
//! Both use the scaled-dual iteration on the split `θ = z`:
//!
//! ```text
//! θ ← argmin_θ L_a(θ, z, u)      (quadratic, closed form)
//! z ← argmin_z L_a(θ, z, u)      (proximal step)
//! u ← u + θ − z
//! ```
//!
//! GEN keeps the squared-difference penalty in the θ-step, GFL moves the
//! absolute-difference penalty into the z-step. The returned estimate is
//! `z`, which carries exact zeros (and, for GFL, exact ties).

pub mod gen;
pub mod gfl;

use nalgebra::DVector;

use crate::design::PartialCorrField;
use crate::{Error, Real, Result};

pub use gen::{gen_system, gen_theta_update, solve_gen};
pub use gfl::{gfl_theta_update, solve_gfl, GflThetaStep};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmmConfig<T: Real> {
    /// Augmented-Lagrangian penalty `a > 0`.
    pub a: T,
    pub max_iter: usize,
    pub eps_abs: T,
    pub eps_rel: T,
}

impl<T: Real> Default for AdmmConfig<T> {
    fn default() -> Self {
        Self { a: T::one(), max_iter: 2000, eps_abs: T::of(1e-6), eps_rel: T::of(1e-4) }
    }
}

impl<T: Real> AdmmConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.a > T::zero()) {
            return Err(Error::InvalidArgument("ADMM penalty a must be positive".into()));
        }
        if !(self.eps_abs > T::zero()) || !(self.eps_rel > T::zero()) {
            return Err(Error::InvalidArgument("ADMM tolerances must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmmDiagnostics<T: Real> {
    pub iterations: usize,
    /// `‖θ − z‖` at exit.
    pub primal_residual: T,
    /// `a‖z − z_prev‖` at exit.
    pub dual_residual: T,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct AdmmSolution<T: Real> {
    pub theta: PartialCorrField<T>,
    pub diagnostics: AdmmDiagnostics<T>,
}

/// Elementwise `sign(v)·max(|v| − κ, 0)`.
pub fn soft_threshold<T: Real>(v: &DVector<T>, kappa: T) -> DVector<T> {
    v.map(|x| crate::flsa::soft_threshold_scalar(x, kappa))
}

/// Mutable ADMM iterate.
#[derive(Debug, Clone)]
pub struct AdmmState<T: Real> {
    pub theta: DVector<T>,
    pub z: DVector<T>,
    pub u: DVector<T>,
    pub iterations: usize,
    pub primal_residual: T,
    pub dual_residual: T,
}

impl<T: Real> AdmmState<T> {
    /// `θ = z = start` (zeros by default), `u = 0`.
    pub fn new(len: usize, start: Option<&DVector<T>>) -> Self {
        let z = start.cloned().unwrap_or_else(|| DVector::zeros(len));
        Self { theta: z.clone(), z, u: DVector::zeros(len), iterations: 0, primal_residual: T::zero(), dual_residual: T::zero() }
    }

    /// Runs `theta_step` / `z_step` / dual ascent until the combined
    /// absolute-plus-relative residual test passes.
    pub(crate) fn run(
        &mut self,
        cfg: &AdmmConfig<T>,
        mut theta_step: impl FnMut(&DVector<T>, &DVector<T>) -> Result<DVector<T>>,
        mut z_step: impl FnMut(&DVector<T>) -> DVector<T>,
    ) -> Result<AdmmDiagnostics<T>> {
        let sqrt_n = T::of_usize(self.z.len()).sqrt();
        let mut converged = false;
        for _ in 0..cfg.max_iter {
            self.theta = theta_step(&self.z, &self.u)?;
            let w = &self.theta + &self.u;
            let z_new = z_step(&w);
            self.dual_residual = (&z_new - &self.z).norm() * cfg.a;
            self.z = z_new;
            let r = &self.theta - &self.z;
            self.u += &r;
            self.primal_residual = r.norm();
            self.iterations += 1;

            let eps_pri = sqrt_n * cfg.eps_abs + cfg.eps_rel * self.theta.norm().max(self.z.norm());
            let eps_dual = sqrt_n * cfg.eps_abs + cfg.eps_rel * self.u.norm() * cfg.a;
            if self.primal_residual <= eps_pri && self.dual_residual <= eps_dual {
                converged = true;
                break;
            }
        }
        if !converged {
            log::warn!("ADMM stopped after {} iterations (primal {}, dual {})", self.iterations, self.primal_residual, self.dual_residual);
        }
        Ok(AdmmDiagnostics {
            iterations: self.iterations,
            primal_residual: self.primal_residual,
            dual_residual: self.dual_residual,
            converged,
        })
    }
}
