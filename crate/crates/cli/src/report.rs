//! JSON fit reports and the aggregation tables derived from them.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use tvnet::design::{pair_from_index, pairs};
use tvnet::select::fused_groups_per_pair;
use tvnet::{FitResult, PartialCorrField};

use crate::error::{CliError, CliResult};

/// Estimator recorded in a report; `sample` is the unpenalized baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MethodName {
    Gen,
    Gfl,
    Lasso,
    Sample,
}

impl MethodName {
    pub fn penalized(self) -> Option<tvnet::Method> {
        match self {
            Self::Gen => Some(tvnet::Method::Gen),
            Self::Gfl => Some(tvnet::Method::Gfl),
            Self::Lasso => Some(tvnet::Method::Lasso),
            Self::Sample => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitReport {
    pub method: MethodName,
    pub lambda1: f64,
    pub lambda2: f64,
    pub df: f64,
    /// `null` when the criterion is not finite.
    pub bic: Option<f64>,
    pub converged: bool,
    pub outer_iterations: usize,
    pub variables: Vec<String>,
    pub time_grid: Vec<f64>,
    /// `"a--b"` labels in the column order of `theta`.
    pub pairs: Vec<String>,
    /// `T × pairs` partial correlations.
    pub theta: Vec<Vec<f64>>,
    /// `T × p` precision diagonals.
    pub sigma: Vec<Vec<f64>>,
    /// Per time point, labels of pairs with `|ρ̂| > active_tol`.
    pub edges: Vec<Vec<String>>,
    /// Per pair, maximal runs of equal nonzero values over time.
    pub fused_groups: Vec<usize>,
    pub active_tol: f64,
}

pub fn pair_labels(variables: &[String]) -> Vec<String> {
    pairs(variables.len()).into_iter().map(|(i, j)| format!("{}--{}", variables[i], variables[j])).collect()
}

impl FitReport {
    pub fn from_fit(fit: &FitResult<f64>, variables: &[String], time_grid: &[f64], active_tol: f64) -> Self {
        let theta = &fit.theta;
        let labels = pair_labels(variables);
        let rows: Vec<Vec<f64>> = (0..theta.num_times()).map(|k| theta.at_time(k).iter().copied().collect()).collect();
        let sigma = fit.sigma.as_matrix();
        let edges =
            rows.iter().map(|r| r.iter().zip(&labels).filter(|(v, _)| v.abs() > active_tol).map(|(_, l)| l.clone()).collect()).collect();
        let method = match fit.method {
            Some(tvnet::Method::Gen) => MethodName::Gen,
            Some(tvnet::Method::Gfl) => MethodName::Gfl,
            Some(tvnet::Method::Lasso) => MethodName::Lasso,
            None => MethodName::Sample,
        };
        Self {
            method,
            lambda1: fit.lambda1,
            lambda2: fit.lambda2,
            df: fit.df,
            bic: fit.bic.is_finite().then_some(fit.bic),
            converged: fit.converged,
            outer_iterations: fit.outer_iters,
            variables: variables.to_vec(),
            time_grid: time_grid.to_vec(),
            pairs: labels,
            theta: rows,
            sigma: (0..sigma.nrows()).map(|k| sigma.row(k).iter().copied().collect()).collect(),
            edges,
            fused_groups: fused_groups_per_pair(theta, active_tol),
            active_tol,
        }
    }

    pub fn num_times(&self) -> usize {
        self.theta.len()
    }

    pub fn p(&self) -> usize {
        self.variables.len()
    }

    /// Checks the internal shape invariants.
    pub fn validate(&self) -> CliResult<()> {
        let (t, p) = (self.num_times(), self.p());
        let b = p * p.saturating_sub(1) / 2;
        let bad = |what: &str| Err(CliError::input(format!("fit report: {what}")));
        if p < 2 || t == 0 {
            return bad("needs at least two variables and one time point");
        }
        if self.pairs != pair_labels(&self.variables) {
            return bad("pair labels do not match the variable order");
        }
        if self.theta.iter().any(|r| r.len() != b) {
            return bad("theta rows must have one entry per pair");
        }
        if self.sigma.len() != t || self.sigma.iter().any(|r| r.len() != p) {
            return bad("sigma must be T × p");
        }
        if self.time_grid.len() != t || self.edges.len() != t || self.fused_groups.len() != b {
            return bad("time grid, edge lists and fused-group counts disagree with theta");
        }
        Ok(())
    }

    pub fn field(&self) -> CliResult<PartialCorrField<f64>> {
        let (t, b) = (self.num_times(), self.pairs.len());
        let m = DMatrix::from_fn(t, b, |k, c| self.theta[k][c]);
        Ok(PartialCorrField::from_matrix(self.p(), m)?)
    }

    pub fn read_path(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let report: Self =
            serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: invalid fit report: {e}", path.display())))?;
        report.validate()?;
        Ok(report)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports contain only finite numbers");
        s.push('\n');
        s
    }
}

/// Per-pair occurrence counts plus the split into first `⌈T/2⌉` and last `⌊T/2⌋` time points.
#[derive(Debug, Clone, PartialEq)]
pub struct PairCounts {
    pub label: String,
    /// 1-based variable indices.
    pub i: usize,
    pub j: usize,
    pub total: usize,
    pub first_half: usize,
    pub second_half: usize,
}

pub fn pair_counts(report: &FitReport) -> Vec<PairCounts> {
    let t = report.num_times();
    let split = t.div_ceil(2);
    let tol = report.active_tol;
    report
        .pairs
        .iter()
        .enumerate()
        .map(|(c, label)| {
            let active: Vec<bool> = report.theta.iter().map(|row| row[c].abs() > tol).collect();
            let first_half = active[..split].iter().filter(|a| **a).count();
            let second_half = active[split..].iter().filter(|a| **a).count();
            let (i, j) = pair_from_index(c, report.p()).expect("validated pair index");
            PairCounts { label: label.clone(), i, j, total: first_half + second_half, first_half, second_half }
        })
        .collect()
}
