//! Dense symmetric helpers and the block-tridiagonal solver used by the GEN
//! quadratic step.
//!
//! The GEN system `(2/n)XᵀX + 2λ2 DᵀD + aI` is symmetric block tridiagonal
//! with constant off-diagonal blocks `-2λ2 I`. Writing it as
//! `scale · [A_1 -I; -I A_2 -I; …; -I A_T]`, block forward elimination
//! produces the pivot inverses
//!
//! ```text
//! B_1 = A_1⁻¹,   B_k = (A_k − B_{k−1})⁻¹
//! ```
//!
//! which depend only on the system and can be reused for every right-hand
//! side. A solve is then one forward sweep and one back substitution.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Real, Result};

/// Pivots whose condition number exceeds this are rejected.
pub const MAX_PIVOT_CONDITION: f64 = 1e12;

/// `(M + Mᵀ)/2`.
pub fn symmetrize<T: Real>(m: &DMatrix<T>) -> DMatrix<T> {
    (m + m.transpose()) * T::of(0.5)
}

/// Symmetric block-tridiagonal system `scale · [A_k on the diagonal, -I off it]`.
#[derive(Debug, Clone)]
pub struct BlockTridiagSystem<T: Real> {
    blocks: Vec<DMatrix<T>>,
    scale: T,
}

impl<T: Real> BlockTridiagSystem<T> {
    pub fn new(blocks: Vec<DMatrix<T>>, scale: T) -> Result<Self> {
        let Some(first) = blocks.first() else {
            return Err(Error::InvalidArgument("block-tridiagonal system needs T >= 1".into()));
        };
        let b = first.nrows();
        if b == 0 {
            return Err(Error::InvalidArgument("block dimension must be >= 1".into()));
        }
        if scale <= T::zero() {
            return Err(Error::InvalidArgument("scale must be positive".into()));
        }
        for (k, blk) in blocks.iter().enumerate() {
            if blk.nrows() != b || blk.ncols() != b {
                return Err(Error::DimensionMismatch(format!("block {k} is {}x{}, expected {b}x{b}", blk.nrows(), blk.ncols())));
            }
        }
        let blocks = blocks.iter().map(symmetrize).collect();
        Ok(Self { blocks, scale })
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_dim(&self) -> usize {
        self.blocks[0].nrows()
    }

    pub fn scale(&self) -> T {
        self.scale
    }

    pub fn blocks(&self) -> &[DMatrix<T>] {
        &self.blocks
    }

    /// Materializes the full `Tb × Tb` matrix.
    pub fn to_dense(&self) -> DMatrix<T> {
        let (t, b) = (self.num_blocks(), self.block_dim());
        let mut h = DMatrix::zeros(t * b, t * b);
        for (k, blk) in self.blocks.iter().enumerate() {
            h.view_mut((k * b, k * b), (b, b)).copy_from(&(blk * self.scale));
            if k + 1 < t {
                for d in 0..b {
                    h[(k * b + d, (k + 1) * b + d)] = -self.scale;
                    h[((k + 1) * b + d, k * b + d)] = -self.scale;
                }
            }
        }
        h
    }

    /// `H x` without materializing `H`.
    pub fn apply(&self, x: &DVector<T>) -> Result<DVector<T>> {
        let (t, b) = (self.num_blocks(), self.block_dim());
        if x.len() != t * b {
            return Err(Error::DimensionMismatch(format!("vector length {} != {}", x.len(), t * b)));
        }
        let mut out = DVector::zeros(t * b);
        for k in 0..t {
            let mut seg = &self.blocks[k] * x.rows(k * b, b);
            if k > 0 {
                seg -= x.rows((k - 1) * b, b);
            }
            if k + 1 < t {
                seg -= x.rows((k + 1) * b, b);
            }
            out.rows_mut(k * b, b).copy_from(&(seg * self.scale));
        }
        Ok(out)
    }
}

/// Pivot inverses `B_k` of a [`BlockTridiagSystem`].
#[derive(Debug, Clone)]
pub struct BlockTridiagFactorization<T: Real> {
    pivots: Vec<DMatrix<T>>,
    scale: T,
}

impl<T: Real> BlockTridiagFactorization<T> {
    pub fn num_blocks(&self) -> usize {
        self.pivots.len()
    }

    pub fn block_dim(&self) -> usize {
        self.pivots[0].nrows()
    }

    /// The `B_k` sequence.
    pub fn pivot_inverses(&self) -> &[DMatrix<T>] {
        &self.pivots
    }

    pub fn solve(&self, rhs: &DVector<T>) -> Result<DVector<T>> {
        block_tridiag_solve(self, rhs)
    }
}

/// Inverts a symmetric block through its eigendecomposition, rejecting
/// near-singular pivots.
fn invert_pivot<T: Real>(m: &DMatrix<T>, index: usize) -> Result<DMatrix<T>> {
    let eig = m.clone().symmetric_eigen();
    let mut max_abs = T::zero();
    let mut min_abs = T::max_value().unwrap_or_else(|| T::of(f64::MAX));
    for &lam in eig.eigenvalues.iter() {
        let a = lam.abs();
        if !a.is_finite() {
            return Err(Error::SingularBlock(index));
        }
        max_abs = max_abs.max(a);
        min_abs = min_abs.min(a);
    }
    if min_abs <= T::zero() || max_abs > T::of(MAX_PIVOT_CONDITION) * min_abs {
        return Err(Error::SingularBlock(index));
    }
    let inv_vals = eig.eigenvalues.map(|l| T::one() / l);
    let v = &eig.eigenvectors;
    let inv = v * DMatrix::from_diagonal(&inv_vals) * v.transpose();
    Ok(symmetrize(&inv))
}

/// Computes `B_1 = A_1⁻¹`, `B_k = (A_k − B_{k−1})⁻¹`.
pub fn block_tridiag_factorize<T: Real>(system: &BlockTridiagSystem<T>) -> Result<BlockTridiagFactorization<T>> {
    let mut pivots: Vec<DMatrix<T>> = Vec::with_capacity(system.num_blocks());
    for (k, a) in system.blocks.iter().enumerate() {
        let pivot = match pivots.last() {
            None => a.clone(),
            Some(prev) => a - prev,
        };
        pivots.push(invert_pivot(&pivot, k)?);
    }
    Ok(BlockTridiagFactorization { pivots, scale: system.scale })
}

/// Solves `H x = rhs` by block forward elimination and back substitution.
pub fn block_tridiag_solve<T: Real>(fact: &BlockTridiagFactorization<T>, rhs: &DVector<T>) -> Result<DVector<T>> {
    let (t, b) = (fact.num_blocks(), fact.block_dim());
    if rhs.len() != t * b {
        return Err(Error::DimensionMismatch(format!("rhs length {} does not match {t} blocks of size {b}", rhs.len())));
    }
    let inv_scale = T::one() / fact.scale;
    // forward: y_1 = r_1, y_k = r_k + B_{k-1} y_{k-1}
    let mut y = rhs * inv_scale;
    for k in 1..t {
        let carry = &fact.pivots[k - 1] * y.rows((k - 1) * b, b);
        let mut seg = y.rows_mut(k * b, b);
        seg += carry;
    }
    // back: x_T = B_T y_T, x_k = B_k (y_k + x_{k+1})
    let mut x = DVector::zeros(t * b);
    for k in (0..t).rev() {
        let mut seg: DVector<T> = y.rows(k * b, b).into_owned();
        if k + 1 < t {
            seg += x.rows((k + 1) * b, b);
        }
        x.rows_mut(k * b, b).copy_from(&(&fact.pivots[k] * seg));
    }
    Ok(x)
}

/// Solves `M x = rhs` for symmetric `M`.
///
/// Cholesky is tried first, then LU. When both fail and `ridge` is given the
/// solve is retried on `M + ridge·I`.
pub fn sym_solve<T: Real>(m: &DMatrix<T>, rhs: &DMatrix<T>, ridge: Option<T>) -> Result<DMatrix<T>> {
    if !m.is_square() || m.nrows() != rhs.nrows() {
        return Err(Error::DimensionMismatch(format!("matrix {}x{} against rhs with {} rows", m.nrows(), m.ncols(), rhs.nrows())));
    }
    let sym = symmetrize(m);
    if let Some(x) = try_solve(&sym, rhs) {
        return Ok(x);
    }
    if let Some(eta) = ridge.filter(|e| *e > T::zero()) {
        let ridged = &sym + DMatrix::identity(sym.nrows(), sym.ncols()) * eta;
        if let Some(x) = try_solve(&ridged, rhs) {
            return Ok(x);
        }
    }
    Err(Error::Singular)
}

fn try_solve<T: Real>(m: &DMatrix<T>, rhs: &DMatrix<T>) -> Option<DMatrix<T>> {
    if let Some(chol) = m.clone().cholesky() {
        return Some(chol.solve(rhs));
    }
    let lu = m.clone().lu();
    let x = lu.solve(rhs)?;
    // LU happily returns garbage for numerically singular input
    let resid = (m * &x - rhs).norm();
    let tol = T::of(1e-8) * (T::one() + rhs.norm());
    (x.iter().all(|v| v.is_finite()) && resid <= tol).then_some(x)
}

/// Vector convenience wrapper around [`sym_solve`].
pub fn sym_solve_vec<T: Real>(m: &DMatrix<T>, rhs: &DVector<T>, ridge: Option<T>) -> Result<DVector<T>> {
    let rhs_m = DMatrix::from_column_slice(rhs.len(), 1, rhs.as_slice());
    let x = sym_solve(m, &rhs_m, ridge)?;
    Ok(x.column(0).into_owned())
}

/// `log det M` for symmetric positive-definite `M`.
pub fn log_det_pd<T: Real>(m: &DMatrix<T>) -> Result<T> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!("{}x{} is not square", m.nrows(), m.ncols())));
    }
    let chol = symmetrize(m).cholesky().ok_or(Error::NotPositiveDefinite)?;
    let l = chol.l_dirty();
    let mut acc = T::zero();
    for i in 0..m.nrows() {
        let d = l[(i, i)];
        if !(d > T::zero()) || !d.is_finite() {
            return Err(Error::NotPositiveDefinite);
        }
        acc += d.ln();
    }
    Ok(acc * T::of(2.0))
}

/// Inverse of a symmetric positive-definite matrix.
pub fn spd_inverse<T: Real>(m: &DMatrix<T>) -> Result<DMatrix<T>> {
    let chol = symmetrize(m).cholesky().ok_or(Error::NotPositiveDefinite)?;
    Ok(symmetrize(&chol.inverse()))
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue<T: Real>(m: &DMatrix<T>) -> T {
    symmetrize(m).symmetric_eigenvalues().iter().copied().fold(T::max_value().unwrap_or_else(|| T::of(f64::MAX)), |acc, v| acc.min(v))
}

/// Diagonal blocks of `M⁻¹` for a symmetric positive-definite block-tridiagonal
/// `M` with arbitrary (possibly empty) block sizes.
///
/// `diag[k]` is `M_kk` (`m_k × m_k`) and `upper[k]` is `M_{k,k+1}`
/// (`m_k × m_{k+1}`). Uses left and right Schur complements:
/// `(M⁻¹)_kk = (M_kk − C_{k−1}ᵀ L_{k−1}⁻¹ C_{k−1} − C_k R_{k+1}⁻¹ C_kᵀ)⁻¹`.
pub fn block_tridiag_inverse_diagonal<T: Real>(diag: &[DMatrix<T>], upper: &[DMatrix<T>]) -> Result<Vec<DMatrix<T>>> {
    let t = diag.len();
    if t == 0 {
        return Ok(Vec::new());
    }
    if upper.len() + 1 != t {
        return Err(Error::DimensionMismatch(format!("{} diagonal blocks need {} coupling blocks, got {}", t, t - 1, upper.len())));
    }
    for k in 0..t - 1 {
        if upper[k].nrows() != diag[k].nrows() || upper[k].ncols() != diag[k + 1].nrows() {
            return Err(Error::DimensionMismatch(format!("coupling block {k} has the wrong shape")));
        }
    }
    let empty = |m: &DMatrix<T>| m.nrows() == 0;

    // left[k]: contribution C_{k-1}ᵀ L_{k-1}⁻¹ C_{k-1} entering block k
    let mut left_inv: Vec<DMatrix<T>> = Vec::with_capacity(t);
    let mut from_left: Vec<DMatrix<T>> = Vec::with_capacity(t);
    for k in 0..t {
        let m = diag[k].nrows();
        let corr = if k == 0 || empty(&diag[k]) || empty(&diag[k - 1]) {
            DMatrix::zeros(m, m)
        } else {
            let c = &upper[k - 1];
            c.transpose() * &left_inv[k - 1] * c
        };
        let schur = &diag[k] - &corr;
        let inv = if m == 0 { DMatrix::zeros(0, 0) } else { spd_inverse(&schur)? };
        left_inv.push(inv);
        from_left.push(corr);
    }

    let mut right_inv: Vec<DMatrix<T>> = vec![DMatrix::zeros(0, 0); t];
    let mut from_right: Vec<DMatrix<T>> = vec![DMatrix::zeros(0, 0); t];
    for k in (0..t).rev() {
        let m = diag[k].nrows();
        let corr = if k + 1 == t || empty(&diag[k]) || empty(&diag[k + 1]) {
            DMatrix::zeros(m, m)
        } else {
            let c = &upper[k];
            c * &right_inv[k + 1] * c.transpose()
        };
        let schur = &diag[k] - &corr;
        right_inv[k] = if m == 0 { DMatrix::zeros(0, 0) } else { spd_inverse(&schur)? };
        from_right[k] = corr;
    }

    (0..t)
        .map(|k| if empty(&diag[k]) { Ok(DMatrix::zeros(0, 0)) } else { spd_inverse(&(&diag[k] - &from_left[k] - &from_right[k])) })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(rng: &mut impl Rng, b: usize, min_eig: f64) -> DMatrix<f64> {
        let g = DMatrix::from_fn(b, b, |_, _| rng.random_range(-1.0..1.0));
        &g * g.transpose() + DMatrix::identity(b, b) * min_eig
    }

    fn dense_solve(h: &DMatrix<f64>, rhs: &DVector<f64>) -> DVector<f64> {
        h.clone().lu().solve(rhs).expect("dense oracle solve")
    }

    #[test]
    fn single_block_inverse() {
        let sys = BlockTridiagSystem::new(vec![DMatrix::identity(2, 2) * 2.0], 1.0).unwrap();
        let fact = block_tridiag_factorize(&sys).unwrap();
        assert_relative_eq!(fact.pivot_inverses()[0], DMatrix::identity(2, 2) * 0.5, epsilon = 1e-15);
    }

    #[test]
    fn scalar_recursion() {
        let blocks = vec![DMatrix::from_element(1, 1, 2.0), DMatrix::from_element(1, 1, 2.0)];
        let fact = block_tridiag_factorize(&BlockTridiagSystem::new(blocks, 1.0).unwrap()).unwrap();
        assert_relative_eq!(fact.pivot_inverses()[0][(0, 0)], 0.5, epsilon = 1e-15);
        assert_relative_eq!(fact.pivot_inverses()[1][(0, 0)], 2.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn identity_system_returns_rhs() {
        // scale 2 with A_1 = I/2 and no coupling (T = 1)
        let sys = BlockTridiagSystem::new(vec![DMatrix::identity(3, 3) * 0.5], 2.0).unwrap();
        let fact = block_tridiag_factorize(&sys).unwrap();
        let rhs = DVector::from_vec(vec![1.5, -2.0, 0.25]);
        assert_relative_eq!(fact.solve(&rhs).unwrap(), rhs, epsilon = 1e-15);
    }

    #[test]
    fn tridiagonal_scalar_case_matches_dense() {
        let blocks = [2.0, 3.0, 2.0].iter().map(|&v| DMatrix::from_element(1, 1, v)).collect();
        let sys = BlockTridiagSystem::new(blocks, 1.0).unwrap();
        let fact = block_tridiag_factorize(&sys).unwrap();
        let rhs = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let x = fact.solve(&rhs).unwrap();
        // [[2,-1,0],[-1,3,-1],[0,-1,2]]⁻¹ e_1 = (5, 2, 1)/8
        assert_relative_eq!(x, DVector::from_vec(vec![5.0 / 8.0, 2.0 / 8.0, 1.0 / 8.0]), epsilon = 1e-14);
        assert_relative_eq!(x, dense_solve(&sys.to_dense(), &rhs), epsilon = 1e-14);
    }

    #[test]
    fn four_random_spd_blocks_match_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let blocks: Vec<_> = (0..4).map(|_| random_spd(&mut rng, 5, 2.0)).collect();
        let sys = BlockTridiagSystem::new(blocks, 1.5).unwrap();
        let fact = block_tridiag_factorize(&sys).unwrap();
        for b in fact.pivot_inverses() {
            assert_relative_eq!(b, &b.transpose(), max_relative = 1e-10);
        }
        let dense = sys.to_dense();
        for j in 0..20 {
            let mut e = DVector::zeros(20);
            e[j] = 1.0;
            let x = fact.solve(&e).unwrap();
            let oracle = dense_solve(&dense, &e);
            assert!((&x - &oracle).norm() <= 1e-8 * oracle.norm());
        }
    }

    #[test]
    fn all_ones_image_is_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let blocks: Vec<_> = (0..6).map(|_| random_spd(&mut rng, 3, 2.5)).collect();
        let sys = BlockTridiagSystem::new(blocks, 0.7).unwrap();
        let ones = DVector::from_element(18, 1.0);
        let rhs = sys.apply(&ones).unwrap();
        let x = block_tridiag_factorize(&sys).unwrap().solve(&rhs).unwrap();
        assert_relative_eq!(x, ones, epsilon = 1e-10);
    }

    #[test]
    fn singular_pivot_is_reported() {
        // A_1 = 1, A_2 = 1  ->  pivot A_2 - 1 = 0
        let blocks = vec![DMatrix::from_element(1, 1, 1.0), DMatrix::from_element(1, 1, 1.0)];
        let err = block_tridiag_factorize(&BlockTridiagSystem::new(blocks, 1.0).unwrap()).unwrap_err();
        assert_eq!(err, Error::SingularBlock(1));
    }

    #[test]
    fn solve_rejects_wrong_length() {
        let sys = BlockTridiagSystem::new(vec![DMatrix::identity(2, 2) * 3.0; 2], 1.0).unwrap();
        let fact = block_tridiag_factorize(&sys).unwrap();
        assert!(matches!(fact.solve(&DVector::zeros(3)), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn repeated_solves_are_bitwise_identical() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let blocks: Vec<_> = (0..5).map(|_| random_spd(&mut rng, 4, 2.0)).collect();
        let fact = block_tridiag_factorize(&BlockTridiagSystem::new(blocks, 2.0).unwrap()).unwrap();
        let rhs = DVector::from_fn(20, |i, _| (i as f64).sin());
        let first = fact.solve(&rhs).unwrap();
        for _ in 0..100 {
            assert_eq!(fact.solve(&rhs).unwrap(), first);
        }
    }

    #[test]
    fn sym_solve_examples() {
        let v = DVector::from_vec(vec![1.0, -3.0, 2.0]);
        assert_relative_eq!(sym_solve_vec(&DMatrix::identity(3, 3), &v, None).unwrap(), v);
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 4.0]));
        let x = sym_solve_vec(&m, &DVector::from_vec(vec![2.0, 4.0]), None).unwrap();
        assert_relative_eq!(x, DVector::from_vec(vec![1.0, 1.0]), epsilon = 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_spd(&mut rng, 10, 0.5);
        let rhs = DVector::from_fn(10, |_, _| rng.random_range(-1.0..1.0));
        let x = sym_solve_vec(&m, &rhs, None).unwrap();
        assert!((&m * x - &rhs).norm() < 1e-8 * rhs.norm());
    }

    #[test]
    fn sym_solve_singular_and_ridge() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let rhs = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        assert_eq!(sym_solve(&m, &rhs, None).unwrap_err(), Error::Singular);
        let x = sym_solve(&m, &rhs, Some(1e-3)).unwrap();
        let ridged = &m + DMatrix::identity(2, 2) * 1e-3;
        assert!((ridged * x - rhs).norm() < 1e-8);
    }

    #[test]
    fn log_det_examples() {
        assert_eq!(log_det_pd(&DMatrix::<f64>::identity(4, 4)).unwrap(), 0.0);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 3.0]));
        assert_relative_eq!(log_det_pd(&d).unwrap(), 6f64.ln(), epsilon = 1e-14);
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        assert_relative_eq!(log_det_pd(&m).unwrap(), 3f64.ln(), epsilon = 1e-14);
        let indefinite = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert_eq!(log_det_pd(&indefinite).unwrap_err(), Error::NotPositiveDefinite);
    }

    #[test]
    fn log_det_works_in_single_precision() {
        let m = DMatrix::<f32>::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        assert!((log_det_pd(&m).unwrap() - 3f32.ln()).abs() < 1e-6);
    }

    #[test]
    fn inverse_diagonal_blocks_match_dense_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let sizes = [2usize, 0, 3, 1, 2];
        let offsets: Vec<usize> = sizes
            .iter()
            .scan(0, |acc, &s| {
                let o = *acc;
                *acc += s;
                Some(o)
            })
            .collect();
        let total: usize = sizes.iter().sum();
        let diag: Vec<DMatrix<f64>> = sizes.iter().map(|&m| random_spd(&mut rng, m, 3.0)).collect();
        let upper: Vec<DMatrix<f64>> =
            (0..sizes.len() - 1).map(|k| DMatrix::from_fn(sizes[k], sizes[k + 1], |_, _| rng.random_range(-0.5..0.5))).collect();
        let mut dense = DMatrix::zeros(total, total);
        for k in 0..sizes.len() {
            dense.view_mut((offsets[k], offsets[k]), (sizes[k], sizes[k])).copy_from(&diag[k]);
            if k + 1 < sizes.len() {
                dense.view_mut((offsets[k], offsets[k + 1]), (sizes[k], sizes[k + 1])).copy_from(&upper[k]);
                dense.view_mut((offsets[k + 1], offsets[k]), (sizes[k + 1], sizes[k])).copy_from(&upper[k].transpose());
            }
        }
        let inv = dense.clone().try_inverse().unwrap();
        let blocks = block_tridiag_inverse_diagonal(&diag, &upper).unwrap();
        for k in 0..sizes.len() {
            let expected = inv.view((offsets[k], offsets[k]), (sizes[k], sizes[k])).into_owned();
            assert_relative_eq!(blocks[k], expected, epsilon = 1e-10);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn block_solve_matches_dense(t in 1usize..=8, b in 1usize..=10, seed in any::<u64>(), scale in 0.1f64..5.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let blocks: Vec<_> = (0..t).map(|_| random_spd(&mut rng, b, 2.0)).collect();
            let sys = BlockTridiagSystem::new(blocks, scale).unwrap();
            let fact = block_tridiag_factorize(&sys).unwrap();
            let rhs = DVector::from_fn(t * b, |_, _| rng.random_range(-1.0..1.0));
            let x = fact.solve(&rhs).unwrap();
            let oracle = dense_solve(&sys.to_dense(), &rhs);
            prop_assert!((&x - &oracle).norm() <= 1e-8 * oracle.norm().max(1e-300));
            let resid = sys.apply(&x).unwrap() - &rhs;
            prop_assert!(resid.norm() <= 1e-8 * rhs.norm());
        }

        #[test]
        fn log_det_of_inverse_cancels(b in 1usize..=8, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_spd(&mut rng, b, 0.5);
            let inv = spd_inverse(&m).unwrap();
            prop_assert!((log_det_pd(&m).unwrap() + log_det_pd(&inv).unwrap()).abs() < 1e-8);
        }
    }
}
