//! Degrees of freedom, BIC and grid search over `(λ1, λ2)`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::design::{
    build_design, pairs, sample_covariance, DifferenceOperator, PartialCorrField, PrecisionDiagonals, StackedDesign, TemporalDataset,
};
use crate::fit::{fit, init_sigma, FitConfig, FitResult, Method};
use crate::linalg::{block_tridiag_inverse_diagonal, log_det_pd, min_eigenvalue};
use crate::{Error, Real, Result};

/// Largest ridge tried by [`df_gen`] before giving up.
const MAX_ETA: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DfConfig<T: Real> {
    /// Ridge added to the active Gram matrix.
    pub eta: T,
    /// `|θ̂| > active_tol` defines the active set; also the fusion tie tolerance.
    pub active_tol: T,
}

impl<T: Real> Default for DfConfig<T> {
    fn default() -> Self {
        Self { eta: T::of(1e-5), active_tol: T::of(1e-8) }
    }
}

impl<T: Real> DfConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > T::zero()) || !(self.active_tol >= T::zero()) {
            return Err(Error::InvalidArgument("eta must be positive and active_tol non-negative".into()));
        }
        Ok(())
    }
}

/// Active pair indices at each time.
fn active_sets<T: Real>(theta: &PartialCorrField<T>, tol: T) -> Vec<Vec<usize>> {
    (0..theta.num_times()).map(|k| (0..theta.num_pairs()).filter(|&c| theta.get(k, c).abs() > tol).collect()).collect()
}

/// `tr[M⁻¹ (G + ηI)]` with `G = 𝒳_𝒜ᵀ𝒳_𝒜` and `M = G + ηI + nλ2 (DᵀD)_𝒜𝒜`, for one `η`.
fn df_gen_at<T: Real>(design: &StackedDesign<T>, active: &[Vec<usize>], lambda2: T, eta: T) -> Result<T> {
    let times = design.num_times();
    let d = DifferenceOperator::new(times, design.num_pairs());
    let coupling = T::of_usize(design.n()) * lambda2;

    let grams: Vec<DMatrix<T>> = (0..times)
        .map(|k| {
            let a = &active[k];
            let xtx = design.xtx(k);
            DMatrix::from_fn(a.len(), a.len(), |r, c| xtx[(a[r], a[c])]) + DMatrix::identity(a.len(), a.len()) * eta
        })
        .collect();
    let diag: Vec<DMatrix<T>> = grams
        .iter()
        .enumerate()
        .map(|(k, g)| g + DMatrix::identity(g.nrows(), g.nrows()) * (coupling * T::of_usize(d.degree(k))))
        .collect();
    let upper: Vec<DMatrix<T>> = (0..times.saturating_sub(1))
        .map(|k| {
            let (a, b) = (&active[k], &active[k + 1]);
            DMatrix::from_fn(a.len(), b.len(), |r, c| if a[r] == b[c] { -coupling } else { T::zero() })
        })
        .collect();
    let inv = block_tridiag_inverse_diagonal(&diag, &upper)?;
    Ok(inv.iter().zip(&grams).fold(T::zero(), |acc, (m, g)| acc + (m * g).trace()))
}

/// GEN degrees of freedom over the active set of `theta`.
///
/// The ridge `η` is raised tenfold on numerical failure, up to `1e-2`.
pub fn df_gen<T: Real>(design: &StackedDesign<T>, theta: &PartialCorrField<T>, lambda2: T, cfg: &DfConfig<T>) -> Result<T> {
    let active = active_sets(theta, cfg.active_tol);
    if active.iter().all(|a| a.is_empty()) {
        return Ok(T::zero());
    }
    let mut eta = cfg.eta;
    loop {
        match df_gen_at(design, &active, lambda2, eta) {
            Ok(v) if v.is_finite() => return Ok(v),
            Ok(_) | Err(_) if eta * T::of(10.0) <= T::of(MAX_ETA) * T::of(1.0 + 1e-9) => {
                log::warn!("df: ridge {eta} insufficient, retrying with {}", eta * T::of(10.0));
                eta *= T::of(10.0);
            }
            Ok(_) => return Err(Error::Singular),
            Err(e) => return Err(e),
        }
    }
}

/// Per pair, the number of maximal runs of equal (within `tol`) nonzero values.
pub fn fused_groups_per_pair<T: Real>(theta: &PartialCorrField<T>, tol: T) -> Vec<usize> {
    (0..theta.num_pairs())
        .map(|c| {
            let tr = theta.trajectory(c);
            tr.iter().enumerate().filter(|&(k, v)| v.abs() > tol && (k == 0 || (*v - tr[k - 1]).abs() > tol)).count()
        })
        .collect()
}

/// Number of nonzero fused groups summed over pairs.
pub fn df_gfl<T: Real>(theta: &PartialCorrField<T>, tol: T) -> usize {
    fused_groups_per_pair(theta, tol).into_iter().sum()
}

/// Number of active coefficients.
pub fn df_lasso<T: Real>(theta: &PartialCorrField<T>, tol: T) -> usize {
    theta.count_nonzero(tol)
}

/// Method-appropriate degrees of freedom at the final `σ`.
pub fn df_for<T: Real>(
    method: Method,
    dataset: &TemporalDataset<T>,
    theta: &PartialCorrField<T>,
    sigma: &PrecisionDiagonals<T>,
    lambda2: T,
    cfg: &DfConfig<T>,
) -> Result<T> {
    match method {
        Method::Gen => df_gen(&build_design(dataset, sigma)?, theta, lambda2, cfg),
        Method::Gfl => Ok(T::of_usize(df_gfl(theta, cfg.active_tol))),
        Method::Lasso => Ok(T::of_usize(df_lasso(theta, cfg.active_tol))),
    }
}

/// Precision matrix with diagonal `σ^ii` and off-diagonals `−ρ_ij √(σ^ii σ^jj)`.
pub fn precision_from_fit<T: Real>(theta_k: &DVector<T>, sigma_k: &DVector<T>) -> DMatrix<T> {
    let p = sigma_k.len();
    let mut omega = DMatrix::from_diagonal(sigma_k);
    for (idx, (i, j)) in pairs(p).into_iter().enumerate() {
        let v = -theta_k[idx] * (sigma_k[i] * sigma_k[j]).sqrt();
        omega[(i, j)] = v;
        omega[(j, i)] = v;
    }
    omega
}

/// `−log|Ω| + tr(Ω S)`, repairing a non-PD `Ω` with a ridge; `None` if unrepairable.
fn neg_loglik_term<T: Real>(omega: &DMatrix<T>, s: &DMatrix<T>) -> Option<T> {
    let p = omega.nrows();
    let (omega, logdet) = match log_det_pd(omega) {
        Ok(v) => (omega.clone(), v),
        Err(_) => {
            let ridge = min_eigenvalue(omega).abs() + T::of(1e-6);
            let repaired = omega + DMatrix::identity(p, p) * ridge;
            let v = log_det_pd(&repaired).ok()?;
            (repaired, v)
        }
    };
    Some(-logdet + (omega * s).trace())
}

/// `n Σ_k [−log|Ω̂_k| + tr(Ω̂_k S_k)] + log(n)·df`, or `+∞` if some `Ω̂_k` cannot be made PD.
pub fn bic<T: Real>(dataset: &TemporalDataset<T>, fit: &FitResult<T>) -> Result<T> {
    let times = dataset.num_times();
    if fit.theta.num_times() != times || fit.theta.p() != dataset.p() || fit.sigma.num_times() != times {
        return Err(Error::DimensionMismatch("fit does not match dataset".into()));
    }
    let n = T::of_usize(dataset.n());
    let mut total = T::zero();
    for k in 0..times {
        let omega = precision_from_fit(&fit.theta.at_time(k), &fit.sigma.at_time(k));
        match neg_loglik_term(&omega, &sample_covariance(dataset, k)) {
            Some(v) => total += v,
            None => return Ok(T::of(f64::INFINITY)),
        }
    }
    Ok(n * total + n.ln() * fit.df)
}

/// `count` values log-spaced from `hi` down to `lo`.
pub fn log_grid<T: Real>(hi: T, lo: T, count: usize) -> Vec<T> {
    match count {
        0 => Vec::new(),
        1 => vec![hi],
        _ => {
            let (lh, ll) = (hi.ln(), lo.ln());
            (0..count).map(|i| (lh + (ll - lh) * T::of_usize(i) / T::of_usize(count - 1)).exp()).collect()
        }
    }
}

/// `‖(2/n)𝒳ᵀ𝒴‖∞` at the initial `σ`, the smallest `λ1` zeroing the first inner solve.
pub fn lambda1_max<T: Real>(dataset: &TemporalDataset<T>) -> Result<T> {
    Ok(build_design(dataset, &init_sigma(dataset)?)?.lambda_max())
}

/// Default grids: `λ1` and `λ2` from `λ1_max` down to `λ1_max/100` (the `λ2` grid scaled by `T`
/// for GEN, whose squared differences are small). LASSO gets `λ2 = 0`. The top `λ1` is the
/// null-model edge of the path.
pub fn default_grids<T: Real>(dataset: &TemporalDataset<T>, method: Method, count: usize) -> Result<(Vec<T>, Vec<T>)> {
    let lmax = lambda1_max(dataset)?;
    let g1 = log_grid(lmax, lmax * T::of(0.01), count);
    let g2 = match method {
        Method::Lasso => vec![T::zero()],
        Method::Gfl => log_grid(lmax, lmax * T::of(0.01), count),
        Method::Gen => {
            let scale = lmax * T::of_usize(dataset.num_times().max(1));
            log_grid(scale, scale * T::of(0.01), count)
        }
    };
    Ok((g1, g2))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BicCell<T: Real> {
    pub lambda1: T,
    pub lambda2: T,
    /// `+∞` for failed cells.
    pub bic: T,
    pub df: T,
    pub converged: bool,
    pub failed: bool,
}

/// All cells in `λ1`-major order plus the selected index.
#[derive(Debug, Clone, PartialEq)]
pub struct BicSurface<T: Real> {
    pub lambda1: Vec<T>,
    pub lambda2: Vec<T>,
    pub cells: Vec<BicCell<T>>,
    pub best: usize,
}

impl<T: Real> BicSurface<T> {
    pub fn cell(&self, i1: usize, i2: usize) -> &BicCell<T> {
        &self.cells[i1 * self.lambda2.len() + i2]
    }

    pub fn best_cell(&self) -> &BicCell<T> {
        &self.cells[self.best]
    }
}

/// Index of the minimal finite BIC; ties go to the larger `λ1`, then the larger `λ2`.
pub fn argmin_bic<T: Real>(cells: &[BicCell<T>]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (idx, c) in cells.iter().enumerate() {
        if c.failed || !c.bic.is_finite() {
            continue;
        }
        best = match best {
            None => Some(idx),
            Some(b) => {
                let o = &cells[b];
                let better =
                    c.bic < o.bic || (c.bic == o.bic && (c.lambda1 > o.lambda1 || (c.lambda1 == o.lambda1 && c.lambda2 > o.lambda2)));
                Some(if better { idx } else { b })
            }
        };
    }
    best
}

/// Fits every grid cell (in parallel) and returns the surface and the selected fit.
pub fn grid_search<T: Real>(
    dataset: &TemporalDataset<T>,
    lambda1_grid: &[T],
    lambda2_grid: &[T],
    cfg: &FitConfig<T>,
) -> Result<(BicSurface<T>, FitResult<T>)> {
    let (fits, surface) = grid_fits(dataset, lambda1_grid, lambda2_grid, cfg)?;
    let best = fits.into_iter().nth(surface.best).flatten().ok_or(Error::AllCellsFailed)?;
    Ok((surface, best))
}

/// Every cell's fit in `λ1`-major order (`None` for failures) plus the surface.
pub type GridFits<T> = (Vec<Option<FitResult<T>>>, BicSurface<T>);

/// Like [`grid_search`] but keeps every cell's fit.
pub fn grid_fits<T: Real>(dataset: &TemporalDataset<T>, lambda1_grid: &[T], lambda2_grid: &[T], cfg: &FitConfig<T>) -> Result<GridFits<T>> {
    if lambda1_grid.is_empty() || lambda2_grid.is_empty() {
        return Err(Error::InvalidArgument("grids must be nonempty".into()));
    }
    if cfg.outer.method == Method::Gen && lambda2_grid.iter().any(|v| !(*v > T::zero())) {
        return Err(Error::InvalidArgument("GEN needs a strictly positive lambda2 grid".into()));
    }
    let coords: Vec<(T, T)> = lambda1_grid.iter().flat_map(|&l1| lambda2_grid.iter().map(move |&l2| (l1, l2))).collect();
    let fits: Vec<Option<FitResult<T>>> = coords
        .par_iter()
        .map(|&(l1, l2)| match fit(dataset, l1, l2, cfg) {
            Ok(f) => Some(f),
            Err(e) => {
                log::warn!("cell ({l1}, {l2}) failed: {e}");
                None
            }
        })
        .collect();
    let cells: Vec<BicCell<T>> = coords
        .iter()
        .zip(&fits)
        .map(|(&(l1, l2), f)| match f {
            Some(f) => BicCell { lambda1: l1, lambda2: l2, bic: f.bic, df: f.df, converged: f.converged, failed: false },
            None => BicCell { lambda1: l1, lambda2: l2, bic: T::of(f64::INFINITY), df: T::of(f64::NAN), converged: false, failed: true },
        })
        .collect();
    let best = argmin_bic(&cells).ok_or(Error::AllCellsFailed)?;
    Ok((fits, BicSurface { lambda1: lambda1_grid.to_vec(), lambda2: lambda2_grid.to_vec(), cells, best }))
}
