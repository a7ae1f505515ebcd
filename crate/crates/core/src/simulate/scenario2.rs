//! Scenario 2: precision matrices with bumps on fixed active intervals.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::design::{equidistant_grid, num_pairs, pair_offset};
use crate::linalg::{min_eigenvalue, spd_inverse};
use crate::{Error, Result};

const MAX_ATTEMPTS: usize = 100;
const DEFAULT_EDGES: [(usize, usize); 6] = [(1, 5), (1, 8), (2, 4), (2, 6), (3, 9), (7, 10)];
const INTERVAL_LENGTH: f64 = 0.4;
const INTERVAL_STRIDE: f64 = 0.12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeShape {
    /// `½[0.1 + 0.8 sin(πu)]`, a hump.
    F,
    /// `½[0.1 + 0.8 u]`, a ramp.
    G,
}

impl EdgeShape {
    /// Value at relative position `u ∈ [0, 1]` of the active interval.
    pub fn at(self, u: f64) -> f64 {
        match self {
            EdgeShape::F => 0.5 * (0.1 + 0.8 * (u * std::f64::consts::PI).sin()),
            EdgeShape::G => 0.5 * (0.1 + 0.8 * u),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario2Edge {
    /// 1-based, `i < j`.
    pub i: usize,
    pub j: usize,
    pub start: f64,
    pub end: f64,
    pub shape: EdgeShape,
    /// `±1`.
    pub sign: f64,
}

impl Scenario2Edge {
    /// Precision entry at `t`; zero outside `[start, end]`.
    pub fn value(&self, t: f64) -> f64 {
        if t < self.start || t > self.end {
            return 0.0;
        }
        self.sign * self.shape.at((t - self.start) / (self.end - self.start))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario2Spec {
    pub p: usize,
    pub times: usize,
    pub edges: Vec<Scenario2Edge>,
}

impl Scenario2Spec {
    /// Six edges on staggered intervals `[0.12 m, 0.12 m + 0.4]`, shapes and signs from `seed`.
    pub fn generate(seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..MAX_ATTEMPTS {
            let edges = DEFAULT_EDGES
                .iter()
                .enumerate()
                .map(|(m, &(i, j))| {
                    let start = INTERVAL_STRIDE * m as f64;
                    Scenario2Edge {
                        i,
                        j,
                        start,
                        end: start + INTERVAL_LENGTH,
                        shape: if rng.random_bool(0.5) { EdgeShape::F } else { EdgeShape::G },
                        sign: if rng.random_bool(0.5) { 1.0 } else { -1.0 },
                    }
                })
                .collect();
            let spec = Self { p: 10, times: 30, edges };
            if spec.validate().is_ok() {
                return Ok(spec);
            }
        }
        Err(Error::ConstructionFailed(format!("no positive-definite scenario-2 draw in {MAX_ATTEMPTS} attempts")))
    }

    /// Every grid precision is positive definite.
    pub fn validate(&self) -> Result<()> {
        for e in &self.edges {
            if e.i == 0 || e.i >= e.j || e.j > self.p {
                return Err(Error::InvalidPair { i: e.i, j: e.j, p: self.p });
            }
        }
        for t in equidistant_grid::<f64>(self.times) {
            if min_eigenvalue(&self.omega(t)) <= 1e-8 {
                return Err(Error::NotPd(t));
            }
        }
        Ok(())
    }

    /// Unit-diagonal `Ω(t)`, symmetrized by averaging with its transpose.
    pub fn omega(&self, t: f64) -> DMatrix<f64> {
        let mut raw = DMatrix::identity(self.p, self.p);
        for e in &self.edges {
            let v = e.value(t);
            raw[(e.i - 1, e.j - 1)] = v;
            raw[(e.j - 1, e.i - 1)] = v;
        }
        (&raw + raw.transpose()) * 0.5
    }

    /// `(Ω(t), Σ(t))` with `Σ` the correlation matrix of `Ω⁻¹`.
    pub fn precision(&self, t: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let omega = self.omega(t);
        let inv = spd_inverse(&omega).map_err(|_| Error::NotPd(t))?;
        let d = DVector::from_fn(self.p, |i, _| inv[(i, i)].sqrt());
        let sigma = DMatrix::from_fn(self.p, self.p, |i, j| inv[(i, j)] / (d[i] * d[j]));
        Ok((omega, sigma))
    }

    /// `ρ_ij(t) = −Ω_ij(t)`, since `Ω` has unit diagonal and rescaling leaves partial correlations unchanged.
    pub fn true_rho(&self, t: f64) -> Vec<f64> {
        let omega = self.omega(t);
        let mut row = vec![0.0; num_pairs(self.p)];
        for e in &self.edges {
            row[pair_offset(e.i - 1, e.j - 1, self.p)] = -omega[(e.i - 1, e.j - 1)];
        }
        row
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::true_partial_correlations;

    #[test]
    fn shape_values() {
        assert!((EdgeShape::F.at(0.5) - 0.45).abs() < 1e-15);
        assert!((EdgeShape::F.at(0.0) - 0.05).abs() < 1e-15);
        assert!((EdgeShape::G.at(0.0) - 0.05).abs() < 1e-15);
        assert!((EdgeShape::G.at(1.0) - 0.45).abs() < 1e-15);
        let e = Scenario2Edge { i: 1, j: 5, start: 0.2, end: 0.6, shape: EdgeShape::F, sign: -1.0 };
        assert!((e.value(0.4) + 0.45).abs() < 1e-15);
        assert_eq!(e.value(0.1), 0.0);
        assert_eq!(e.value(0.7), 0.0);
    }

    #[test]
    fn truth_is_supported_on_active_intervals() {
        let spec = Scenario2Spec::generate(8).unwrap();
        assert_eq!(spec.edges.len(), 6);
        for t in equidistant_grid::<f64>(30) {
            let rho = spec.true_rho(t);
            let (_, sigma) = spec.precision(t).unwrap();
            let numeric = true_partial_correlations(&sigma).unwrap();
            for (a, b) in numeric.iter().zip(&rho) {
                assert!((a - b).abs() < 1e-10);
            }
            for (idx, v) in rho.iter().enumerate() {
                let edge = spec.edges.iter().find(|e| pair_offset(e.i - 1, e.j - 1, 10) == idx);
                match edge {
                    Some(e) if t >= e.start && t <= e.end => assert!(*v != 0.0),
                    _ => assert_eq!(*v, 0.0),
                }
            }
            assert!((sigma.diagonal().add_scalar(-1.0)).amax() < 1e-12);
        }
    }

    #[test]
    fn seeds_vary_shapes() {
        let shapes: std::collections::HashSet<String> = (0..20)
            .map(|s| format!("{:?}", Scenario2Spec::generate(s).unwrap().edges.iter().map(|e| (e.shape, e.sign as i8)).collect::<Vec<_>>()))
            .collect();
        assert!(shapes.len() > 10);
    }
}
