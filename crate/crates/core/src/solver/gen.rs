//! GEN: `(1/n)‖𝒴 − 𝒳θ‖² + λ1‖θ‖₁ + λ2‖Dθ‖²`.
//!
//! The θ-step solves `((2/n)𝒳ᵀ𝒳 + 2λ2 DᵀD + aI) θ = (2/n)𝒳ᵀ𝒴 + a(z − u)`.
//! The matrix is fixed for a given design, so it is factorized once per
//! solve and every iteration costs two block sweeps.

use nalgebra::{DMatrix, DVector};

use super::{gfl, soft_threshold, AdmmConfig, AdmmSolution, AdmmState};
use crate::design::{DifferenceOperator, PartialCorrField, StackedDesign};
use crate::linalg::{block_tridiag_factorize, BlockTridiagFactorization, BlockTridiagSystem};
use crate::{Error, Real, Result};

/// `2λ2 · [A_k; −I]` with `A_k = 𝒳ᵀ𝒳(t_k)/(nλ2) + (deg_k + a/(2λ2)) I`, where
/// `deg_k` is the number of temporal neighbours of `t_k`.
pub fn gen_system<T: Real>(design: &StackedDesign<T>, lambda2: T, a: T) -> Result<BlockTridiagSystem<T>> {
    if !(lambda2 > T::zero()) {
        return Err(Error::InvalidArgument("GEN block system needs lambda2 > 0".into()));
    }
    let (times, b) = (design.num_times(), design.num_pairs());
    let d = DifferenceOperator::new(times, b);
    let n_lam = T::of_usize(design.n()) * lambda2;
    let shift = a / (T::of(2.0) * lambda2);
    let blocks = (0..times)
        .map(|k| {
            let diag = T::of_usize(d.degree(k)) + shift;
            design.xtx(k) / n_lam + DMatrix::identity(b, b) * diag
        })
        .collect();
    BlockTridiagSystem::new(blocks, T::of(2.0) * lambda2)
}

/// `(2/n) 𝒳ᵀ𝒴` flattened time-major.
pub(crate) fn scaled_xty<T: Real>(design: &StackedDesign<T>) -> DVector<T> {
    let b = design.num_pairs();
    let scale = T::of(2.0) / T::of_usize(design.n());
    let mut out = DVector::zeros(design.num_times() * b);
    for k in 0..design.num_times() {
        out.rows_mut(k * b, b).copy_from(&(design.xty(k) * scale));
    }
    out
}

/// Closed-form θ-step.
pub fn gen_theta_update<T: Real>(
    design: &StackedDesign<T>,
    z: &DVector<T>,
    u: &DVector<T>,
    a: T,
    fact: &BlockTridiagFactorization<T>,
) -> Result<DVector<T>> {
    let rhs = scaled_xty(design) + (z - u) * a;
    fact.solve(&rhs)
}

/// Minimizes the GEN objective for fixed `σ`.
///
/// `lambda2 == 0` is delegated to the GFL solver, where the problem reduces
/// to the per-time lasso. `warm` seeds `z` (and `θ`); the dual starts at zero.
pub fn solve_gen<T: Real>(
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
    if lambda2 == T::zero() {
        return gfl::solve_gfl(design, lambda1, T::zero(), cfg, warm);
    }
    let (times, b) = (design.num_times(), design.num_pairs());
    let fact = block_tridiag_factorize(&gen_system(design, lambda2, cfg.a)?)?;
    let base = scaled_xty(design);
    let kappa = lambda1 / cfg.a;
    let mut state = AdmmState::new(times * b, warm);
    let diagnostics = state.run(cfg, |z, u| fact.solve(&(&base + (z - u) * cfg.a)), |w| soft_threshold(w, kappa))?;
    Ok(AdmmSolution { theta: PartialCorrField::from_flat(times, design.p(), &state.z)?, diagnostics })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kkt::{gen_kkt_residual, gen_objective, kkt_scale};
    use crate::linalg::sym_solve_vec;
    use crate::testutil::{random_design, tight_admm};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dense_gen_matrix(design: &StackedDesign<f64>, lambda2: f64, a: f64) -> DMatrix<f64> {
        let (t, b) = (design.num_times(), design.num_pairs());
        let d: DMatrix<f64> = DifferenceOperator::new(t, b).dense();
        let mut m = d.transpose() * d * (2.0 * lambda2) + DMatrix::identity(t * b, t * b) * a;
        for k in 0..t {
            let mut blk = m.view_mut((k * b, k * b), (b, b));
            blk += design.xtx(k) * (2.0 / design.n() as f64);
        }
        m
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let design = random_design(1, 3, 10, 3);
        let fact = block_tridiag_factorize(&gen_system(&design, 0.5, 1.0).unwrap()).unwrap();
        let zero = DVector::zeros(9);
        // with z = u = 0 the rhs is (2/n)Xᵀy; zero it by using the homogeneous system
        let rhs = DVector::zeros(9);
        assert_eq!(fact.solve(&rhs).unwrap(), zero);
    }

    #[test]
    fn single_time_point_matches_dense() {
        let design = random_design(2, 1, 12, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let z = DVector::from_fn(6, |_, _| rng.random_range(-0.5..0.5));
        let u = DVector::from_fn(6, |_, _| rng.random_range(-0.5..0.5));
        let a = 1.3;
        let fact = block_tridiag_factorize(&gen_system(&design, 0.2, a).unwrap()).unwrap();
        let theta = gen_theta_update(&design, &z, &u, a, &fact).unwrap();
        let m = design.xtx(0) * (2.0 / 12.0) + DMatrix::identity(6, 6) * a;
        let rhs = design.xty(0) * (2.0 / 12.0) + (&z - &u) * a;
        let oracle = sym_solve_vec(&m, &rhs, None).unwrap();
        assert!((&theta - &oracle).norm() <= 1e-8 * oracle.norm());
    }

    #[test]
    fn three_time_points_match_dense_assembly() {
        let design = random_design(4, 3, 15, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let z = DVector::from_fn(9, |_, _| rng.random_range(-0.5..0.5));
        let u = DVector::from_fn(9, |_, _| rng.random_range(-0.5..0.5));
        let (lambda2, a) = (0.7, 0.9);
        let fact = block_tridiag_factorize(&gen_system(&design, lambda2, a).unwrap()).unwrap();
        let theta = gen_theta_update(&design, &z, &u, a, &fact).unwrap();
        let m = dense_gen_matrix(&design, lambda2, a);
        let rhs = scaled_xty(&design) + (&z - &u) * a;
        let oracle = sym_solve_vec(&m, &rhs, None).unwrap();
        assert!((&theta - &oracle).norm() <= 1e-8 * oracle.norm());
        assert!((&m * &theta - &rhs).norm() <= 1e-8 * rhs.norm());
    }

    #[test]
    fn huge_lambda1_shrinks_everything() {
        let design = random_design(6, 3, 20, 4);
        let lam = 2.0 * design.lambda_max() + 1.0;
        let sol = solve_gen(&design, lam, 0.5, &AdmmConfig::default(), None).unwrap();
        assert_eq!(sol.theta.count_nonzero(0.0), 0);
        assert!(sol.diagnostics.converged);
    }

    #[test]
    fn no_penalty_single_time_is_least_squares() {
        let design = random_design(7, 1, 30, 3);
        let sol = solve_gen(&design, 0.0, 1e-3, &tight_admm(), None).unwrap();
        let ls = sym_solve_vec(design.xtx(0), design.xty(0), None).unwrap();
        assert!((sol.theta.at_time(0) - &ls).amax() < 1e-6, "{} vs {}", sol.theta.at_time(0), ls);
    }

    #[test]
    fn random_instance_beats_random_probes() {
        let design = random_design(8, 3, 20, 3);
        let (l1, l2) = (0.05, 0.3);
        let sol = solve_gen(&design, l1, l2, &AdmmConfig::default(), None).unwrap();
        let theta = sol.theta.to_flat();
        let best = gen_objective(&design, &theta, l1, l2);
        let resid = gen_kkt_residual(&design, &theta, l1, l2);
        assert!(resid <= 1e-4 * kkt_scale(&design), "kkt residual {resid}");

        let lasso = gfl::solve_gfl(&design, l1, 0.0, &AdmmConfig::default(), None).unwrap();
        assert!(best <= gen_objective(&design, &lasso.theta.to_flat(), l1, l2) + 1e-9);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let probe = DVector::from_fn(theta.len(), |_, _| rng.random_range(-1.0..1.0));
            assert!(best <= gen_objective(&design, &probe, l1, l2));
            let nearby = &theta + DVector::from_fn(theta.len(), |_, _| rng.random_range(-1e-3..1e-3));
            assert!(best <= gen_objective(&design, &nearby, l1, l2) + 1e-9);
        }
    }

    #[test]
    fn zero_lambda2_routes_to_lasso() {
        let design = random_design(10, 3, 20, 3);
        let a = solve_gen(&design, 0.1, 0.0, &AdmmConfig::default(), None).unwrap();
        let b = gfl::solve_gfl(&design, 0.1, 0.0, &AdmmConfig::default(), None).unwrap();
        assert_eq!(a.theta, b.theta);
    }

    #[test]
    fn relabeling_variables_permutes_the_estimate() {
        use crate::design::build_design;
        use crate::fit::init_sigma;
        use crate::testutil::random_dataset;
        let ds = random_dataset(12, 3, 20, 4);
        let perm = [2, 0, 3, 1];
        let pds = ds.permute_variables(&perm).unwrap();
        let solve = |d: &crate::TemporalDataset<f64>| {
            let design = build_design(d, &init_sigma(d).unwrap()).unwrap();
            solve_gen(&design, 0.05, 0.3, &tight_admm(), None).unwrap().theta
        };
        let (a, b) = (solve(&ds), solve(&pds));
        for k in 0..3 {
            for i in 0..4 {
                for j in 0..4 {
                    if i != j {
                        assert!((b.rho(k, i, j) - a.rho(k, perm[i], perm[j])).abs() < 1e-7);
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_negative_penalties() {
        let design = random_design(11, 2, 10, 3);
        assert!(solve_gen(&design, -0.1, 0.5, &AdmmConfig::default(), None).is_err());
    }
}
