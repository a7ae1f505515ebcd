//! JSON overrides for solver defaults.
//!
//! Every key is optional; unknown keys are rejected so that typos surface as
//! input errors instead of silently running with defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};
use tvnet::{FitConfig, Method};

use crate::error::{CliError, CliResult};

/// Grid points per axis when no explicit grid is given.
pub const DEFAULT_GRID_SIZE: usize = 5;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Overrides {
    /// ADMM augmented-Lagrangian penalty.
    pub a: Option<f64>,
    pub max_iter: Option<usize>,
    pub eps_abs: Option<f64>,
    pub eps_rel: Option<f64>,
    pub tol_sigma: Option<f64>,
    pub tol_theta: Option<f64>,
    pub max_outer: Option<usize>,
    /// Ridge in the GEN degrees of freedom.
    pub eta: Option<f64>,
    pub active_tol: Option<f64>,
    pub grid_size: Option<usize>,
}

impl Overrides {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: invalid config: {e}", path.display())))
    }

    /// Defaults for `method` with every present key applied, validated.
    pub fn fit_config(&self, method: Method) -> CliResult<FitConfig<f64>> {
        let mut cfg = FitConfig::new(method);
        let set = |dst: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *dst = v;
            }
        };
        set(&mut cfg.admm.a, self.a);
        set(&mut cfg.admm.eps_abs, self.eps_abs);
        set(&mut cfg.admm.eps_rel, self.eps_rel);
        set(&mut cfg.outer.tol_sigma, self.tol_sigma);
        set(&mut cfg.outer.tol_theta, self.tol_theta);
        set(&mut cfg.df.eta, self.eta);
        set(&mut cfg.df.active_tol, self.active_tol);
        if let Some(v) = self.max_iter {
            cfg.admm.max_iter = v;
        }
        if let Some(v) = self.max_outer {
            cfg.outer.max_outer = v;
        }
        cfg.admm.validate()?;
        cfg.outer.validate()?;
        cfg.df.validate()?;
        Ok(cfg)
    }

    pub fn grid_size(&self) -> CliResult<usize> {
        match self.grid_size.unwrap_or(DEFAULT_GRID_SIZE) {
            0 => Err(CliError::input("grid_size must be positive")),
            g => Ok(g),
        }
    }

    /// Tolerance deciding which `|ρ̂|` count as zero in reports.
    pub fn active_tol(&self) -> f64 {
        self.active_tol.unwrap_or_else(|| tvnet::DfConfig::<f64>::default().active_tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_keeps_defaults() {
        let o: Overrides = serde_json::from_str("{}").unwrap();
        let cfg = o.fit_config(Method::Gfl).unwrap();
        let def = FitConfig::<f64>::new(Method::Gfl);
        assert_eq!(cfg.admm, def.admm);
        assert_eq!(cfg.df, def.df);
        assert_eq!(cfg.outer.max_outer, def.outer.max_outer);
    }

    #[test]
    fn keys_override_and_validate() {
        let o: Overrides = serde_json::from_str(r#"{"a": 2.5, "max_iter": 7, "eta": 1e-4, "max_outer": 3}"#).unwrap();
        let cfg = o.fit_config(Method::Gen).unwrap();
        assert_eq!((cfg.admm.a, cfg.admm.max_iter, cfg.df.eta, cfg.outer.max_outer), (2.5, 7, 1e-4, 3));
        let bad: Overrides = serde_json::from_str(r#"{"a": -1}"#).unwrap();
        assert!(matches!(bad.fit_config(Method::Gen), Err(CliError::Input(_))));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<Overrides>(r#"{"alpha": 1}"#).is_err());
    }
}
