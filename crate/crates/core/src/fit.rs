//! Alternating estimation of partial correlations and precision diagonals.
//!
//! Starting from `σ^ii = 1/var(X_i)`, each sweep fits `θ` for the current
//! `σ`, then refreshes `σ` from the regression residuals. The loop stops
//! once both relative changes `‖Δ‖/(1 + ‖·‖)` fall below tolerance.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::design::{build_design, pairs, sample_covariance, PartialCorrField, PrecisionDiagonals, TemporalDataset};
use crate::linalg::{spd_inverse, sym_solve};
use crate::select::{bic, df_for, DfConfig};
use crate::solver::{solve_gen, solve_gfl, AdmmConfig, AdmmDiagnostics, AdmmSolution};
use crate::{Error, Real, Result};

/// Residual floor in the `σ` update.
pub const SIGMA_RESIDUAL_FLOOR: f64 = 1e-10;

/// Condition number above which the sample covariance is ridged.
const SAMPLE_CONDITION_LIMIT: f64 = 1e10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Squared temporal differences.
    Gen,
    /// Absolute temporal differences.
    Gfl,
    /// No temporal penalty.
    Lasso,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Gen => "gen",
            Method::Gfl => "gfl",
            Method::Lasso => "lasso",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gen" => Ok(Method::Gen),
            "gfl" => Ok(Method::Gfl),
            "lasso" => Ok(Method::Lasso),
            other => Err(Error::InvalidArgument(format!("unknown method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuterConfig<T: Real> {
    pub method: Method,
    pub tol_sigma: T,
    pub tol_theta: T,
    pub max_outer: usize,
}

impl<T: Real> OuterConfig<T> {
    pub fn new(method: Method) -> Self {
        Self { method, tol_sigma: T::of(1e-4), tol_theta: T::of(1e-4), max_outer: 50 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol_sigma > T::zero()) || !(self.tol_theta > T::zero()) {
            return Err(Error::InvalidArgument("outer tolerances must be positive".into()));
        }
        if self.max_outer == 0 {
            return Err(Error::InvalidArgument("max_outer must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig<T: Real> {
    pub outer: OuterConfig<T>,
    pub admm: AdmmConfig<T>,
    pub df: DfConfig<T>,
}

impl<T: Real> FitConfig<T> {
    pub fn new(method: Method) -> Self {
        Self { outer: OuterConfig::new(method), admm: AdmmConfig::default(), df: DfConfig::default() }
    }
}

#[derive(Debug, Clone)]
pub struct FitResult<T: Real> {
    /// `None` for the unpenalized sample estimate.
    pub method: Option<Method>,
    pub theta: PartialCorrField<T>,
    pub sigma: PrecisionDiagonals<T>,
    pub lambda1: T,
    pub lambda2: T,
    pub df: T,
    /// `+∞` when a reconstructed precision could not be repaired.
    pub bic: T,
    pub outer_iters: usize,
    /// Outer tolerances met and the last inner solve converged.
    pub converged: bool,
    /// One entry per inner solve.
    pub diagnostics: Vec<AdmmDiagnostics<T>>,
}

impl<T: Real> FitResult<T> {
    /// Largest `|ρ̂|` exceeds the plausibility bound `1.05`.
    pub fn out_of_range(&self) -> bool {
        self.theta.max_abs() > T::of(1.05)
    }
}

/// `σ^ii(t_k) = 1 / S_ii(t_k)` with the `n − 1` denominator.
pub fn init_sigma<T: Real>(dataset: &TemporalDataset<T>) -> Result<PrecisionDiagonals<T>> {
    let (times, p) = (dataset.num_times(), dataset.p());
    let denom = T::of_usize(dataset.n() - 1);
    let mut values = DMatrix::zeros(times, p);
    for k in 0..times {
        let x = dataset.panel(k);
        for i in 0..p {
            let var = x.column(i).norm_squared() / denom;
            if !(var > T::zero()) {
                return Err(Error::DegenerateColumn { time: k, variable: i });
            }
            values[(k, i)] = T::one() / var;
        }
    }
    PrecisionDiagonals::new(values)
}

/// `1/σ^ii = n⁻¹ ‖X_i − Σ_j β_ij X_j‖²` with `β_ij = ρ_ij √(σ^jj/σ^ii)` from `prev`.
pub fn update_sigma<T: Real>(
    dataset: &TemporalDataset<T>,
    theta: &PartialCorrField<T>,
    prev: &PrecisionDiagonals<T>,
) -> Result<PrecisionDiagonals<T>> {
    let (times, p) = (dataset.num_times(), dataset.p());
    if theta.num_times() != times || theta.p() != p || prev.num_times() != times || prev.p() != p {
        return Err(Error::DimensionMismatch("theta/sigma do not match the dataset".into()));
    }
    let n = T::of_usize(dataset.n());
    let floor = T::of(SIGMA_RESIDUAL_FLOOR);
    let pair_list = pairs(p);
    let mut values = DMatrix::zeros(times, p);
    for k in 0..times {
        // coef[(j, i)] = β_ij, so column i of X·coef is the fitted X_i
        let mut coef = DMatrix::zeros(p, p);
        for (idx, &(i, j)) in pair_list.iter().enumerate() {
            let rho = theta.get(k, idx);
            if rho == T::zero() {
                continue;
            }
            let (si, sj) = (prev.get(k, i), prev.get(k, j));
            coef[(j, i)] = rho * (sj / si).sqrt();
            coef[(i, j)] = rho * (si / sj).sqrt();
        }
        let x = dataset.panel(k);
        let resid = x - x * coef;
        for i in 0..p {
            let mse = (resid.column(i).norm_squared() / n).max(floor);
            values[(k, i)] = T::one() / mse;
        }
    }
    PrecisionDiagonals::new(values)
}

fn inner_solve<T: Real>(
    dataset: &TemporalDataset<T>,
    sigma: &PrecisionDiagonals<T>,
    lambda1: T,
    lambda2: T,
    cfg: &FitConfig<T>,
    warm: Option<&DVector<T>>,
) -> Result<AdmmSolution<T>> {
    let design = build_design(dataset, sigma)?;
    match cfg.outer.method {
        Method::Gen => solve_gen(&design, lambda1, lambda2, &cfg.admm, warm),
        Method::Gfl => solve_gfl(&design, lambda1, lambda2, &cfg.admm, warm),
        Method::Lasso => solve_gfl(&design, lambda1, T::zero(), &cfg.admm, warm),
    }
}

fn relative_change<T: Real>(new: T, old_norm: T) -> T {
    new / (T::one() + old_norm)
}

/// Fits one `(λ1, λ2)` and scores it.
pub fn fit<T: Real>(dataset: &TemporalDataset<T>, lambda1: T, lambda2: T, cfg: &FitConfig<T>) -> Result<FitResult<T>> {
    cfg.outer.validate()?;
    cfg.admm.validate()?;
    cfg.df.validate()?;
    if lambda1 < T::zero() || lambda2 < T::zero() {
        return Err(Error::InvalidArgument("penalties must be non-negative".into()));
    }
    let lambda2 = if cfg.outer.method == Method::Lasso { T::zero() } else { lambda2 };

    let mut sigma = init_sigma(dataset)?;
    let mut theta = PartialCorrField::zeros(dataset.num_times(), dataset.p());
    let mut diagnostics = Vec::new();
    let mut converged = false;
    for outer in 0..cfg.outer.max_outer {
        let warm = (outer > 0).then(|| theta.to_flat());
        let sol = inner_solve(dataset, &sigma, lambda1, lambda2, cfg, warm.as_ref())?;
        let next_sigma = update_sigma(dataset, &sol.theta, &sigma)?;
        let d_sigma = relative_change(next_sigma.distance(&sigma), sigma.norm());
        let d_theta = relative_change(sol.theta.distance(&theta), theta.norm());
        log::debug!("outer {outer}: dsigma {d_sigma}, dtheta {d_theta}");
        let inner_ok = sol.diagnostics.converged;
        diagnostics.push(sol.diagnostics);
        sigma = next_sigma;
        theta = sol.theta;
        if d_sigma < cfg.outer.tol_sigma && d_theta < cfg.outer.tol_theta {
            converged = inner_ok;
            break;
        }
    }
    if !converged {
        log::warn!("fit did not converge within {} outer iterations", cfg.outer.max_outer);
    }

    let df = df_for(cfg.outer.method, dataset, &theta, &sigma, lambda2, &cfg.df)?;
    let mut result = FitResult {
        method: Some(cfg.outer.method),
        theta,
        sigma,
        lambda1,
        lambda2,
        df,
        bic: T::zero(),
        outer_iters: diagnostics.len(),
        converged,
        diagnostics,
    };
    result.bic = bic(dataset, &result)?;
    if result.out_of_range() {
        log::warn!("fitted partial correlations exceed 1.05 in magnitude");
    }
    Ok(result)
}

/// `S(t_k)⁻¹`, ridged by `1e-6·tr(S)/p` when badly conditioned.
pub fn sample_precision<T: Real>(dataset: &TemporalDataset<T>, k: usize) -> Result<DMatrix<T>> {
    let mut s = sample_covariance(dataset, k);
    let p = s.nrows();
    let eig = s.clone().symmetric_eigenvalues();
    let (lo, hi) = (eig.min(), eig.max());
    if !(lo > T::zero()) || hi / lo > T::of(SAMPLE_CONDITION_LIMIT) {
        let ridge = T::of(1e-6) * s.trace() / T::of_usize(p);
        for i in 0..p {
            s[(i, i)] += ridge;
        }
    }
    spd_inverse(&s).or_else(|_| sym_solve(&s, &DMatrix::identity(p, p), None))
}

/// `ρ_ij = −ω_ij / √(ω_ii ω_jj)` for a precision matrix `ω`.
pub fn partial_correlations_from_precision<T: Real>(omega: &DMatrix<T>) -> DVector<T> {
    let p = omega.nrows();
    let pair_list = pairs(p);
    DVector::from_fn(pair_list.len(), |idx, _| {
        let (i, j) = pair_list[idx];
        -omega[(i, j)] / (omega[(i, i)] * omega[(j, j)]).sqrt()
    })
}

/// Unpenalized per-time partial correlations from the inverted sample covariance.
pub fn sample_partial_correlations<T: Real>(dataset: &TemporalDataset<T>) -> Result<PartialCorrField<T>> {
    let (times, p) = (dataset.num_times(), dataset.p());
    let mut field = PartialCorrField::zeros(times, p);
    for k in 0..times {
        let rho = partial_correlations_from_precision(&sample_precision(dataset, k)?);
        for (idx, v) in rho.iter().enumerate() {
            field.set(k, idx, *v);
        }
    }
    Ok(field)
}

/// The sample estimate packaged as a fit: `σ` is the diagonal of `S⁻¹`,
/// `df` the number of nonzero coefficients.
pub fn fit_sample<T: Real>(dataset: &TemporalDataset<T>) -> Result<FitResult<T>> {
    let (times, p) = (dataset.num_times(), dataset.p());
    let mut sigma = DMatrix::zeros(times, p);
    let mut theta = PartialCorrField::zeros(times, p);
    for k in 0..times {
        let omega = sample_precision(dataset, k)?;
        for i in 0..p {
            sigma[(k, i)] = omega[(i, i)];
        }
        for (idx, v) in partial_correlations_from_precision(&omega).iter().enumerate() {
            theta.set(k, idx, *v);
        }
    }
    let df = T::of_usize(theta.count_nonzero(T::zero()));
    let mut result = FitResult {
        method: None,
        theta,
        sigma: PrecisionDiagonals::new(sigma)?,
        lambda1: T::zero(),
        lambda2: T::zero(),
        df,
        bic: T::zero(),
        outer_iters: 0,
        converged: true,
        diagnostics: Vec::new(),
    };
    result.bic = bic(dataset, &result)?;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::pair_offset;
    use crate::testutil::random_dataset;
    use approx::assert_relative_eq;

    #[test]
    fn init_sigma_examples() {
        let x = DMatrix::from_row_slice(3, 2, &[-1.0, 2.0, 0.0, 0.0, 1.0, -2.0]);
        let ds = TemporalDataset::new(vec![x]).unwrap();
        let s = init_sigma(&ds).unwrap();
        assert_relative_eq!(s.get(0, 0), 1.0, epsilon = 1e-15);
        assert_relative_eq!(s.get(0, 1), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn init_sigma_matches_direct_formula() {
        let ds = random_dataset(30, 3, 9, 4);
        let s = init_sigma(&ds).unwrap();
        for k in 0..3 {
            for i in 0..4 {
                let col = ds.panel(k).column(i);
                let mean = col.mean();
                let var: f64 = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 8.0;
                assert_relative_eq!(s.get(k, i), 1.0 / var, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn zero_theta_update_is_rescaled_init() {
        let ds = random_dataset(31, 2, 7, 3);
        let init = init_sigma(&ds).unwrap();
        let next = update_sigma(&ds, &PartialCorrField::zeros(2, 3), &init).unwrap();
        for k in 0..2 {
            for i in 0..3 {
                assert_relative_eq!(1.0 / next.get(k, i), (6.0 / 7.0) / init.get(k, i), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn sigma_update_matches_literal_regression() {
        let ds = random_dataset(32, 1, 10, 3);
        let prev = init_sigma(&ds).unwrap();
        let mut theta = PartialCorrField::zeros(1, 3);
        theta.set(0, 0, 0.3);
        theta.set(0, 1, -0.2);
        theta.set(0, 2, 0.1);
        let next = update_sigma(&ds, &theta, &prev).unwrap();
        let x = ds.panel(0);
        for i in 0..3 {
            let mut r = x.column(i).clone_owned();
            for j in 0..3 {
                if j == i {
                    continue;
                }
                let rho = theta.get(0, pair_offset(i.min(j), i.max(j), 3));
                r -= x.column(j) * (rho * (prev.get(0, j) / prev.get(0, i)).sqrt());
            }
            assert_relative_eq!(1.0 / next.get(0, i), r.norm_squared() / 10.0, max_relative = 1e-10);
        }
    }

    #[test]
    fn perfect_fit_hits_the_floor() {
        let x = DMatrix::from_row_slice(3, 2, &[-1.0, -1.0, 0.0, 0.0, 1.0, 1.0]);
        let ds = TemporalDataset::new(vec![x]).unwrap();
        let prev = init_sigma(&ds).unwrap();
        let mut theta = PartialCorrField::zeros(1, 2);
        theta.set(0, 0, 1.0);
        let next = update_sigma(&ds, &theta, &prev).unwrap();
        assert_relative_eq!(next.get(0, 0), 1.0 / SIGMA_RESIDUAL_FLOOR);
    }

    #[test]
    fn huge_lambda1_is_null_model() {
        let ds = random_dataset(33, 3, 15, 4);
        let cfg = FitConfig::new(Method::Gen);
        let res = fit(&ds, 1e6, 0.5, &cfg).unwrap();
        assert_eq!(res.theta.count_nonzero(0.0), 0);
        assert!(res.converged);
        assert_eq!(res.df, 0.0);
        let init = init_sigma(&ds).unwrap();
        for k in 0..3 {
            for i in 0..4 {
                assert_relative_eq!(res.sigma.get(k, i), init.get(k, i) * 15.0 / 14.0, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn lasso_equals_gfl_without_fusion() {
        let ds = random_dataset(34, 3, 20, 4);
        let a = fit(&ds, 0.1, 0.7, &FitConfig::new(Method::Lasso)).unwrap();
        let b = fit(&ds, 0.1, 0.0, &FitConfig::new(Method::Gfl)).unwrap();
        assert!((a.theta.as_matrix() - b.theta.as_matrix()).amax() <= 1e-6);
        assert_eq!(a.lambda2, 0.0);
    }

    #[test]
    fn fit_is_deterministic() {
        let ds = random_dataset(35, 4, 20, 4);
        let cfg = FitConfig::new(Method::Gfl);
        let a = fit(&ds, 0.05, 0.05, &cfg).unwrap();
        let b = fit(&ds, 0.05, 0.05, &cfg).unwrap();
        assert_eq!(a.theta, b.theta);
        assert_eq!(a.sigma, b.sigma);
        assert_eq!(a.bic.to_bits(), b.bic.to_bits());
    }

    #[test]
    fn sample_baseline_identities() {
        // p = 2: partial correlation equals the marginal one
        let x = DMatrix::<f64>::from_row_slice(4, 2, &[1.0, 2.0, -1.0, -1.0, 2.0, 1.0, -2.0, -2.0]);
        let ds = TemporalDataset::new(vec![x]).unwrap();
        let s = sample_covariance(&ds, 0);
        let r = s[(0, 1)] / (s[(0, 0)] * s[(1, 1)]).sqrt();
        let rho = sample_partial_correlations(&ds).unwrap();
        assert_relative_eq!(rho.get(0, 0), r, max_relative = 1e-10);

        let omega = DMatrix::from_row_slice(3, 3, &[2.0, -0.5, 0.3, -0.5, 1.5, 0.0, 0.3, 0.0, 1.0]);
        let rho = partial_correlations_from_precision(&omega);
        assert_relative_eq!(rho[0], 0.5 / 3.0f64.sqrt(), max_relative = 1e-12);
        assert_relative_eq!(rho[1], -0.3 / 2.0f64.sqrt(), max_relative = 1e-12);
        assert_eq!(rho[2], 0.0);
        let id = partial_correlations_from_precision(&DMatrix::<f64>::identity(4, 4));
        assert!(id.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn method_parsing() {
        assert_eq!("GEN".parse::<Method>().unwrap(), Method::Gen);
        assert!("sample".parse::<Method>().is_err());
        assert_eq!(Method::Lasso.to_string(), "lasso");
    }
}
