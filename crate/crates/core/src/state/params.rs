use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficients of `(1 - 2k psi_t) psi_tt - c^2 lap psi - b lap psi_t
/// - 2 sigma grad psi_t . grad psi = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Sound speed (m/s).
    pub c: f64,
    /// Sound diffusivity (m^2/s).
    pub b: f64,
    pub k: f64,
    pub sigma: f64,
    pub beta_a: Option<f64>,
    /// Mass density (kg/m^3).
    pub rho: f64,
}

impl ModelParams {
    pub fn westervelt(c: f64, b: f64, beta_a: f64, rho: f64) -> Self {
        Self {
            c,
            b,
            k: beta_a / (c * c),
            sigma: 0.0,
            beta_a: Some(beta_a),
            rho,
        }
    }

    pub fn kuznetsov(c: f64, b: f64, beta_a: f64, rho: f64) -> Self {
        Self {
            c,
            b,
            k: (beta_a - 1.0) / (c * c),
            sigma: 1.0,
            beta_a: Some(beta_a),
            rho,
        }
    }

    pub fn linear(c: f64, b: f64, rho: f64) -> Self {
        Self {
            c,
            b,
            k: 0.0,
            sigma: 0.0,
            beta_a: None,
            rho,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.c, self.b, self.k, self.sigma, self.rho];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("model parameters must be finite".into()));
        }
        if !(self.c > 0.0 && self.b > 0.0 && self.rho > 0.0) {
            return Err(Error::InvalidInput(format!(
                "need c > 0, b > 0, rho > 0 (got c={}, b={}, rho={})",
                self.c, self.b, self.rho
            )));
        }
        Ok(())
    }

    pub fn is_linear(&self) -> bool {
        self.k == 0.0 && self.sigma == 0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets() {
        let w = ModelParams::westervelt(2.0, 0.1, 6.0, 1000.0);
        assert_eq!((w.k, w.sigma), (1.5, 0.0));
        let k = ModelParams::kuznetsov(2.0, 0.1, 6.0, 1000.0);
        assert_eq!((k.k, k.sigma), (1.25, 1.0));
        let l = ModelParams::linear(2.0, 0.1, 1000.0);
        assert!(l.is_linear());
    }

    #[test]
    fn rejects_nonpositive_diffusivity() {
        let mut p = ModelParams::linear(1.0, 0.1, 1.0);
        p.b = 0.0;
        assert!(p.validate().is_err());
    }
}
