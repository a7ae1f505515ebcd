//! Scenario 1: spline mixtures of block-structured covariances.
//!
//! Each component `Σ_s` pairs variable `i` with `i + p/2` only, and all four
//! `p/2 × p/2` sub-blocks are diagonal. Any nonnegative combination keeps that
//! structure, so the precision of `Σ(t) = Σ_s B_s(t)² Σ_s` is supported on the
//! diagonal plus the `p/2` cross pairs, and each pair's partial correlation is
//! the correlation of its own `2 × 2` block.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::bspline::{bspline_basis, clamped_knots};
use crate::design::{equidistant_grid, num_pairs, pair_offset};
use crate::linalg::min_eigenvalue;
use crate::{Error, Result};

const MAX_ATTEMPTS: usize = 100;
const MIN_EIGENVALUE: f64 = 0.1;
const MIN_PEAK_RHO: f64 = 0.2;
const WINDOW_MIN: usize = 8;
const WINDOW_MAX: usize = 12;
const CROSS_CORR_MIN: f64 = 0.25;
const CROSS_CORR_MAX: f64 = 0.5;

/// One mixture component: diagonals of the four sub-blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockPairCovariance {
    /// Variances of variables `1..=p/2`.
    pub first: Vec<f64>,
    /// Variances of variables `p/2+1..=p`.
    pub second: Vec<f64>,
    /// Covariance of variable `i` with `i + p/2`.
    pub cross: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario1Spec {
    pub p: usize,
    pub times: usize,
    pub degree: usize,
    pub knots: Vec<f64>,
    /// 1-based `(i, i + p/2)`.
    pub edges: Vec<(usize, usize)>,
    pub covariances: Vec<BlockPairCovariance>,
}

impl Scenario1Spec {
    /// `p = 10`, `T = 30`, 13 cubic bases, random components from `seed`.
    pub fn generate(seed: u64) -> Result<Self> {
        Self::generate_with(10, 30, 13, seed)
    }

    pub fn generate_with(p: usize, times: usize, bases: usize, seed: u64) -> Result<Self> {
        if p < 2 || !p.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!("scenario 1 needs an even p >= 2, got {p}")));
        }
        let half = p / 2;
        let degree = 3;
        let knots = clamped_knots(bases, degree)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..MAX_ATTEMPTS {
            let mut covariances: Vec<BlockPairCovariance> = (0..bases)
                .map(|_| BlockPairCovariance {
                    first: (0..half).map(|_| rng.random_range(0.5..=1.5)).collect(),
                    second: (0..half).map(|_| rng.random_range(0.5..=1.5)).collect(),
                    cross: vec![0.0; half],
                })
                .collect();
            // one contiguous window per edge with a fixed within-block correlation
            for e in 0..half {
                let width = rng.random_range(WINDOW_MIN..=WINDOW_MAX).min(bases);
                let start = rng.random_range(0..=bases - width);
                let r = if rng.random_bool(0.5) { 1.0 } else { -1.0 } * rng.random_range(CROSS_CORR_MIN..=CROSS_CORR_MAX);
                for c in &mut covariances[start..start + width] {
                    c.cross[e] = r * (c.first[e] * c.second[e]).sqrt();
                }
            }
            let spec = Self { p, times, degree, knots: knots.clone(), edges: Self::edges_of(half), covariances };
            if spec.is_admissible()? {
                return Ok(spec);
            }
        }
        Err(Error::ConstructionFailed(format!("no admissible scenario-1 draw in {MAX_ATTEMPTS} attempts")))
    }

    fn edges_of(half: usize) -> Vec<(usize, usize)> {
        (1..=half).map(|i| (i, i + half)).collect()
    }

    fn is_admissible(&self) -> Result<bool> {
        if self.covariances.iter().any(|c| min_eigenvalue(&self.matrix(c)) < MIN_EIGENVALUE) {
            return Ok(false);
        }
        let rho = self.true_rho_on_grid()?;
        let p = self.p;
        Ok(self.edges.iter().all(|&(i, j)| {
            let idx = pair_offset(i - 1, j - 1, p);
            rho.iter().any(|row| row[idx].abs() >= MIN_PEAK_RHO)
        }))
    }

    /// Dense `p × p` form of a component.
    pub fn matrix(&self, c: &BlockPairCovariance) -> DMatrix<f64> {
        let half = self.p / 2;
        let mut m = DMatrix::zeros(self.p, self.p);
        for i in 0..half {
            m[(i, i)] = c.first[i];
            m[(i + half, i + half)] = c.second[i];
            m[(i, i + half)] = c.cross[i];
            m[(i + half, i)] = c.cross[i];
        }
        m
    }

    /// `B_s(t_k)`, `T × S`.
    pub fn basis(&self) -> Result<DMatrix<f64>> {
        bspline_basis(&equidistant_grid(self.times), &self.knots, self.degree)
    }

    /// `Σ(t_k) = Σ_s B_s(t_k)² Σ_s`.
    pub fn covariances_on_grid(&self) -> Result<Vec<DMatrix<f64>>> {
        let basis = self.basis()?;
        if basis.ncols() != self.covariances.len() {
            return Err(Error::InvalidKnots(format!("{} bases but {} components", basis.ncols(), self.covariances.len())));
        }
        Ok((0..self.times)
            .map(|k| {
                self.covariances.iter().enumerate().fold(DMatrix::zeros(self.p, self.p), |acc, (s, c)| {
                    let w = basis[(k, s)];
                    if w == 0.0 {
                        acc
                    } else {
                        acc + self.matrix(c) * (w * w)
                    }
                })
            })
            .collect())
    }

    /// `ρ_{i,i+p/2}(t_k) = c(t_k)/√(a(t_k) b(t_k))`, zero for every other pair.
    pub fn true_rho_on_grid(&self) -> Result<Vec<Vec<f64>>> {
        let half = self.p / 2;
        let covs = self.covariances_on_grid()?;
        Ok(covs
            .iter()
            .map(|m| {
                let mut row = vec![0.0; num_pairs(self.p)];
                for i in 0..half {
                    let c = m[(i, i + half)];
                    if c != 0.0 {
                        row[pair_offset(i, i + half, self.p)] = c / (m[(i, i)] * m[(i + half, i + half)]).sqrt();
                    }
                }
                row
            })
            .collect())
    }
}
