//! Model and Trotter parameters shared by every module.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ParamError {
    #[error("Trotter number must be even and >= 2, got {0}")]
    BadTrotter(usize),
    #[error("inverse temperature must be positive, got {0}")]
    BadBeta(f64),
}

/// Coupling `J`, inverse temperature `beta`, Trotter number `N` and the
/// derived Trotter parameter `u = -J beta / N`.
///
/// `u` is never stored: it is recomputed from the other three fields, so the
/// defining relation can not drift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    j: f64,
    beta: f64,
    n: usize,
}

impl ModelParams {
    /// Thermal constructor: requires `beta > 0`.
    pub fn new(j: f64, beta: f64, n: usize) -> Result<Self, ParamError> {
        if n < 2 || n % 2 != 0 {
            return Err(ParamError::BadTrotter(n));
        }
        if !(beta > 0.0) {
            return Err(ParamError::BadBeta(beta));
        }
        Ok(Self { j, beta, n })
    }

    /// Spectral constructor: fixes `u` directly. `J` is set to `-sign(u)`
    /// (antiferromagnetic for `u > 0`) and `beta = |u| N`, so that
    /// `u = -J beta / N` holds exactly. `u = 0` is allowed here; it is only
    /// meaningful for the finite-`N` spectral functions, not for the TBA.
    pub fn with_u(n: usize, u: f64) -> Result<Self, ParamError> {
        if n < 2 || n % 2 != 0 {
            return Err(ParamError::BadTrotter(n));
        }
        let j = if u > 0.0 {
            -1.0
        } else if u < 0.0 {
            1.0
        } else {
            -1.0
        };
        Ok(Self {
            j,
            beta: u.abs() * n as f64,
            n,
        })
    }

    pub fn coupling(&self) -> f64 {
        self.j
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Trotter number `N` (even).
    pub fn trotter(&self) -> usize {
        self.n
    }

    /// `u = -J beta / N`.
    pub fn u(&self) -> f64 {
        -self.j * self.beta / self.n as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn u_is_derived() {
        let p = ModelParams::new(-1.0, 0.6, 12).unwrap();
        assert!((p.u() - 0.05).abs() < 1e-15);
        let q = ModelParams::with_u(12, 0.05).unwrap();
        assert!((q.u() - 0.05).abs() < 1e-15);
        assert!((q.beta() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn rejects_odd_or_small_n() {
        assert!(ModelParams::new(-1.0, 1.0, 5).is_err());
        assert!(ModelParams::new(-1.0, 1.0, 0).is_err());
        assert!(ModelParams::new(-1.0, -1.0, 4).is_err());
    }
}
