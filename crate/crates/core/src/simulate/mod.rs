//! Synthetic time-varying networks with known truth.
//!
//! Observations are `x(t) = μ(t)·1 + e(t)` with `μ(t) = t + sin t` on the grid
//! `t_k = k/(T−1)`. Scenario 1 builds `Cov e(t) = Σ_s B_s(t)² Σ_s` from smooth
//! spline weights; scenario 2 prescribes the precision matrix directly.

pub mod bspline;
pub mod scenario1;
pub mod scenario2;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::design::{equidistant_grid, PartialCorrField, TemporalDataset};
use crate::fit::partial_correlations_from_precision;
use crate::linalg::spd_inverse;
use crate::{Error, Result};

pub use bspline::{bspline_basis, clamped_knots};
pub use scenario1::Scenario1Spec;
pub use scenario2::{EdgeShape, Scenario2Edge, Scenario2Spec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scenario", rename_all = "lowercase")]
pub enum ScenarioSpec {
    #[serde(rename = "1")]
    One(Scenario1Spec),
    #[serde(rename = "2")]
    Two(Scenario2Spec),
}

impl ScenarioSpec {
    /// Default spec for scenario `1` or `2`, drawn from `seed`.
    pub fn from_seed(scenario: u8, seed: u64) -> Result<Self> {
        match scenario {
            1 => Ok(Self::One(Scenario1Spec::generate(seed)?)),
            2 => Ok(Self::Two(Scenario2Spec::generate(seed)?)),
            other => Err(Error::InvalidArgument(format!("unknown scenario {other}"))),
        }
    }

    pub fn p(&self) -> usize {
        match self {
            Self::One(s) => s.p,
            Self::Two(s) => s.p,
        }
    }

    pub fn times(&self) -> usize {
        match self {
            Self::One(s) => s.times,
            Self::Two(s) => s.times,
        }
    }

    pub fn time_grid(&self) -> Vec<f64> {
        equidistant_grid(self.times())
    }

    /// 1-based edges that may be active.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        match self {
            Self::One(s) => s.edges.clone(),
            Self::Two(s) => s.edges.iter().map(|e| (e.i, e.j)).collect(),
        }
    }

    /// Noise covariance at every grid point.
    pub fn covariances(&self) -> Result<Vec<DMatrix<f64>>> {
        match self {
            Self::One(s) => s.covariances_on_grid(),
            Self::Two(s) => self.time_grid().iter().map(|&t| s.precision(t).map(|(_, sig)| sig)).collect(),
        }
    }

    /// True partial correlations and support at every grid point.
    pub fn truth(&self) -> Result<SimulationTruth> {
        let times = self.times();
        let mut theta = PartialCorrField::zeros(times, self.p());
        match self {
            Self::One(s) => {
                for (k, row) in s.true_rho_on_grid()?.into_iter().enumerate() {
                    for (c, v) in row.iter().enumerate() {
                        theta.set(k, c, *v);
                    }
                }
            }
            Self::Two(s) => {
                for (k, &t) in self.time_grid().iter().enumerate() {
                    for (c, v) in s.true_rho(t).iter().enumerate() {
                        theta.set(k, c, *v);
                    }
                }
            }
        }
        Ok(SimulationTruth::new(theta, self.time_grid()))
    }
}

/// Ground truth for one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationTruth {
    pub time_grid: Vec<f64>,
    /// `theta[k][pair]`, lexicographic pairs.
    pub theta: Vec<Vec<f64>>,
    pub support: Vec<Vec<bool>>,
    pub p: usize,
}

impl SimulationTruth {
    pub fn new(theta: PartialCorrField<f64>, time_grid: Vec<f64>) -> Self {
        let rows: Vec<Vec<f64>> = (0..theta.num_times()).map(|k| theta.at_time(k).iter().copied().collect()).collect();
        let support = rows.iter().map(|r| r.iter().map(|v| *v != 0.0).collect()).collect();
        Self { time_grid, theta: rows, support, p: theta.p() }
    }

    pub fn field(&self) -> Result<PartialCorrField<f64>> {
        let times = self.theta.len();
        let flat = DVector::from_iterator(times * crate::design::num_pairs(self.p), self.theta.iter().flatten().copied());
        PartialCorrField::from_flat(times, self.p, &flat)
    }
}

/// `μ(t) = t + sin t`.
pub fn mean_curve(t: f64) -> f64 {
    t + t.sin()
}

/// `ρ_ij = −ω_ij/√(ω_ii ω_jj)` with `ω = Σ⁻¹`.
pub fn true_partial_correlations(sigma: &DMatrix<f64>) -> Result<DVector<f64>> {
    let omega = spd_inverse(sigma).map_err(|_| Error::NotPd(f64::NAN))?;
    Ok(partial_correlations_from_precision(&omega))
}

fn standard_normal(rng: &mut ChaCha8Rng, len: usize) -> DVector<f64> {
    DVector::from_fn(len, |_, _| StandardNormal.sample(rng))
}

fn lower_factor(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    m.clone().cholesky().map(|c| c.l()).ok_or(Error::NotPd(f64::NAN))
}

/// Draws `n` subjects and returns the centered dataset with its truth.
pub fn generate(spec: &ScenarioSpec, n: usize, seed: u64) -> Result<(TemporalDataset<f64>, SimulationTruth)> {
    if n < 2 {
        return Err(Error::InvalidArgument("need at least 2 subjects".into()));
    }
    let (p, times) = (spec.p(), spec.times());
    let grid = spec.time_grid();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut panels: Vec<DMatrix<f64>> = grid.iter().map(|&t| DMatrix::from_element(n, p, mean_curve(t))).collect();
    match spec {
        ScenarioSpec::One(s) => {
            let basis = s.basis()?;
            let factors = s.covariances.iter().map(|c| lower_factor(&s.matrix(c))).collect::<Result<Vec<_>>>()?;
            for subj in 0..n {
                let xi: Vec<DVector<f64>> = factors.iter().map(|l| l * standard_normal(&mut rng, p)).collect();
                for (k, panel) in panels.iter_mut().enumerate() {
                    let mut row = panel.row_mut(subj);
                    for (b, x) in xi.iter().enumerate() {
                        let w = basis[(k, b)];
                        if w != 0.0 {
                            row += x.transpose() * w;
                        }
                    }
                }
            }
        }
        ScenarioSpec::Two(_) => {
            let covs = spec.covariances()?;
            for (k, panel) in panels.iter_mut().enumerate() {
                let l = lower_factor(&covs[k])?;
                for subj in 0..n {
                    let e = &l * standard_normal(&mut rng, p);
                    let mut row = panel.row_mut(subj);
                    row += e.transpose();
                }
            }
        }
    }
    debug_assert_eq!(panels.len(), times);
    let dataset = TemporalDataset::new(panels)?.with_time_grid(grid)?;
    Ok((dataset, spec.truth()?))
}

/// Offset separating the data stream from the structure stream of one seed.
const DATA_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;

/// One replicate: scenario structure drawn from `seed`, data from an independent stream.
pub fn replicate(scenario: u8, n: usize, seed: u64) -> Result<(ScenarioSpec, TemporalDataset<f64>, SimulationTruth)> {
    let spec = ScenarioSpec::from_seed(scenario, seed)?;
    let (dataset, truth) = generate(&spec, n, seed ^ DATA_STREAM)?;
    Ok((spec, dataset, truth))
}
