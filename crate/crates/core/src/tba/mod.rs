//! Truncated TBA hierarchy on grid functions: fixed-point iteration for the
//! largest-eigenvalue `Y`-functions, free energy, the excited-state system
//! and the correlation length.

pub mod excited;
pub mod grid;
pub mod kernel;

use crate::fusion::y_plateau_k1;
use crate::C64;
pub use grid::GridFunction;
pub use kernel::{k_cumulative, k_tail_shifted, kernel, kernel_mass, Convolver, KernelKind};
use std::f64::consts::PI;
use thiserror::Error;

pub use excited::{second_eigenvalue_log, solve_excited, solve_excited_with, ExcitedOptions};

#[derive(Debug, Error)]
pub enum TbaError {
    #[error("invalid TBA configuration: {0}")]
    Config(String),
    #[error("fixed point did not converge: change {change:.3e} after {iterations} iterations")]
    NonConvergence { iterations: usize, change: f64 },
    #[error("non-finite Y update at level {m} (bad grid)")]
    BadUpdate { m: usize },
    #[error("operation requires a converged solution")]
    Unconverged,
    #[error("operation requires rank {want}, solution has rank {got}")]
    WrongRank { want: usize, got: usize },
    #[error("solutions were produced at different (beta, J)")]
    MismatchedThermodynamics,
    #[error("non-positive inverse correlation length {0:.3e} (eigenvalue mis-ordering)")]
    EigenvalueOrder(f64),
    #[error(transparent)]
    Grid(#[from] grid::GridError),
    #[error("excited-state seeding failed: {0}")]
    Seeding(String),
    #[error("branch tracking failed: {0}")]
    BranchTracking(String),
}

/// Discretisation and iteration controls.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct TbaConfig {
    /// Truncation level of the Y hierarchy.
    pub m_max: usize,
    /// Grid half-width `V`.
    pub half_width: f64,
    /// Grid step `h`.
    pub step: f64,
    /// Sup-norm fixed-point tolerance.
    pub tol: f64,
    pub max_iter: usize,
    /// Fixed-point damping in `(0, 1]`.
    pub damping: f64,
}

impl Default for TbaConfig {
    fn default() -> Self {
        Self {
            m_max: 10,
            half_width: 30.0,
            step: 0.05,
            tol: 1e-10,
            max_iter: 5000,
            damping: 0.5,
        }
    }
}

impl TbaConfig {
    pub fn validate(&self) -> Result<(), TbaError> {
        if self.m_max < 2 {
            return Err(TbaError::Config(format!("m_max must be >= 2, got {}", self.m_max)));
        }
        if self.half_width < 10.0 {
            return Err(TbaError::Config(format!(
                "half-width must be >= 10, got {}",
                self.half_width
            )));
        }
        if self.step > 0.1 {
            return Err(TbaError::Config(format!("step must be <= 0.1, got {}", self.step)));
        }
        if !(self.tol > 0.0) {
            return Err(TbaError::Config("tolerance must be positive".into()));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(TbaError::Config("damping must be in (0, 1]".into()));
        }
        Ok(())
    }
}

/// Driving term used in the first equation of the hierarchy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Driving {
    /// Trotter limit `pi beta J / cosh(pi v)`.
    TrotterLimit,
    /// Finite Trotter number `N` with `u = -J beta / N`.
    FiniteN(usize),
}

/// `pi beta J / cosh(pi v)`.
pub fn trotter_limit_driving(v: f64, beta: f64, j: f64) -> f64 {
    let x = (PI * v).abs();
    let e = (-x).exp();
    PI * beta * j * 2.0 * e / (1.0 + e * e)
}

/// Finite-`N` driving term
/// `∓(N/2) ln{ tanh(π/2)(v + i(1/2 ± u)) · tanh(π/2)(v - i(1/2 ± u)) }`,
/// upper signs for `J > 0`, lower for `J < 0`; real for real `v`.
pub fn finite_n_driving(v: f64, n: usize, u: f64, j: f64) -> f64 {
    let (sign, shift) = if j > 0.0 { (-1.0, 0.5 + u) } else { (1.0, 0.5 - u) };
    let t = (C64::new(v, shift) * (0.5 * PI)).tanh();
    // tanh at the conjugate point is the conjugate, so the product is |t|^2
    sign * n as f64 * t.norm().ln()
}

/// Converged (or best-effort) family of Y-functions.
#[derive(Debug, Clone)]
pub struct TbaSolution {
    /// Eigenvalue rank: 1 (largest) or 2.
    pub k: usize,
    /// `Y_m` on the grid for `m = 1..=m_max` (real-valued on the axis).
    pub y: Vec<GridFunction>,
    /// Real auxiliary zeros `x_m` (rank 2 only; empty for rank 1).
    pub x: Vec<f64>,
    pub beta: f64,
    pub coupling: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Sup-norm change per sweep.
    pub history: Vec<f64>,
    /// `ln |lambda_2|` from the second-eigenvalue integral (rank 2 only).
    pub log_lambda2_abs: Option<f64>,
    /// Recorded phase integral of the second-eigenvalue integrand.
    pub residual_phase: Option<f64>,
}

/// Numerically stable `ln(1 + e^x)`.
pub(crate) fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Solve the rank-1 hierarchy with the Trotter-limit driving.
pub fn solve_tba(config: &TbaConfig, beta: f64, j: f64) -> Result<TbaSolution, TbaError> {
    solve_tba_with_driving(config, beta, j, Driving::TrotterLimit)
}

/// Fixed point of
/// `ln Y_1 = d(v) + K*ln(1+Y_2) - K*ln(1+1/Y_1)`,
/// `ln Y_m = K*ln(1+Y_{m+1}) + K*ln(1+Y_{m-1}) - K*ln(1+1/Y_m)`,
/// closed by freezing `Y_{m_max+1}` at its constant plateau.
pub fn solve_tba_with_driving(
    config: &TbaConfig,
    beta: f64,
    j: f64,
    driving: Driving,
) -> Result<TbaSolution, TbaError> {
    config.validate()?;
    if !(beta > 0.0) {
        return Err(TbaError::Config(format!("beta must be positive, got {beta}")));
    }
    let m_max = config.m_max;
    let conv = Convolver::new(config.half_width, config.step);
    let len = GridFunction::len_for(config.half_width, config.step);
    let vs: Vec<f64> = (0..len)
        .map(|i| -config.half_width + config.step * i as f64)
        .collect();
    let drive: Vec<f64> = match driving {
        Driving::TrotterLimit => vs.iter().map(|&v| trotter_limit_driving(v, beta, j)).collect(),
        Driving::FiniteN(n) => {
            let u = -j * beta / n as f64;
            vs.iter().map(|&v| finite_n_driving(v, n, u, j)).collect()
        }
    };
    // state: ln Y_m, initialised at the plateaus
    let plateau_log: Vec<f64> = (1..=m_max + 1).map(|m| y_plateau_k1(m).ln()).collect();
    let mut ln_y: Vec<Vec<f64>> = (0..m_max).map(|mi| vec![plateau_log[mi]; len]).collect();
    let closure_l = softplus(plateau_log[m_max]); // ln(1 + Y_{m_max+1})
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    for iter in 0..config.max_iter {
        iterations = iter + 1;
        // ln(1+Y_m) and ln(1+1/Y_m) from the previous sweep
        let l: Vec<Vec<f64>> = ln_y
            .iter()
            .map(|row| row.iter().map(|&x| softplus(x)).collect())
            .collect();
        let lbar: Vec<Vec<f64>> = ln_y
            .iter()
            .map(|row| row.iter().map(|&x| softplus(-x)).collect())
            .collect();
        let l_inf: Vec<f64> = (0..m_max).map(|mi| softplus(plateau_log[mi])).collect();
        let lbar_inf: Vec<f64> = (0..m_max).map(|mi| softplus(-plateau_log[mi])).collect();
        let conv_l: Vec<Vec<f64>> = (0..m_max)
            .map(|mi| conv.convolve_real(KernelKind::K, &l[mi], l_inf[mi]))
            .collect();
        let conv_lbar: Vec<Vec<f64>> = (0..m_max)
            .map(|mi| conv.convolve_real(KernelKind::K, &lbar[mi], lbar_inf[mi]))
            .collect();
        let mut change: f64 = 0.0;
        for mi in 0..m_max {
            for i in 0..len {
                let above = if mi + 1 < m_max {
                    conv_l[mi + 1][i]
                } else {
                    0.5 * closure_l
                };
                let below = if mi == 0 { drive[i] } else { conv_l[mi - 1][i] };
                let new = above + below - conv_lbar[mi][i];
                if !new.is_finite() {
                    return Err(TbaError::BadUpdate { m: mi + 1 });
                }
                change = change.max((new - ln_y[mi][i]).abs());
                ln_y[mi][i] += config.damping * (new - ln_y[mi][i]);
            }
        }
        history.push(change);
        if change < config.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(TbaError::NonConvergence {
            iterations,
            change: *history.last().unwrap_or(&f64::NAN),
        });
    }
    let y = (0..m_max)
        .map(|mi| GridFunction {
            half_width: config.half_width,
            step: config.step,
            samples: ln_y[mi].iter().map(|&x| C64::new(x.exp(), 0.0)).collect(),
            c_inf: C64::new(y_plateau_k1(mi + 1), 0.0),
        })
        .collect();
    Ok(TbaSolution {
        k: 1,
        y,
        x: Vec::new(),
        beta,
        coupling: j,
        converged,
        iterations,
        history,
        log_lambda2_abs: None,
        residual_phase: None,
    })
}

/// `4π/(3√3) - 1`, the ground-state constant of the free energy.
pub fn free_energy_constant() -> f64 {
    4.0 * PI / (3.0 * 3.0_f64.sqrt()) - 1.0
}

/// Free energy per site from a converged rank-1 solution:
/// `f = J (4π/(3√3) - 1) - (1/β) ∫ G(v) ln(1 + Y_1(v)) dv`,
/// trapezoidal on the grid plus the analytic plateau tail.
pub fn free_energy(sol: &TbaSolution, beta: f64, j: f64) -> Result<f64, TbaError> {
    if sol.k != 1 {
        return Err(TbaError::WrongRank { want: 1, got: sol.k });
    }
    if !sol.converged {
        return Err(TbaError::Unconverged);
    }
    let y1 = &sol.y[0];
    let h = y1.step;
    let mut integral = 0.0;
    for (i, (&s, v)) in y1.samples.iter().zip(y1.points()).enumerate() {
        let w = if i == 0 || i == y1.len() - 1 { 0.5 } else { 1.0 };
        integral += w * h * kernel(KernelKind::G, v) * s.re.ln_1p();
    }
    // analytic tail: ln(1+Y_1) ~ its plateau, G ~ (2/√3) e^{-2πv/3}
    let v0 = y1.half_width;
    let tail_mass = 2.0 * (2.0 / 3.0_f64.sqrt()) * (3.0 / (2.0 * PI)) * (-2.0 * PI * v0 / 3.0).exp();
    integral += tail_mass * (y1.c_inf.re).ln_1p();
    Ok(j * free_energy_constant() - integral / beta)
}

/// Correlation length `ξ` from the two converged solutions at the same
/// `(beta, J)`: `1/ξ = ln λ_1 - ln |λ_2|` with `ln λ_1 = -β f`.
pub fn correlation_length(
    sol1: &TbaSolution,
    sol2: &TbaSolution,
    beta: f64,
    j: f64,
) -> Result<f64, TbaError> {
    if sol1.k != 1 {
        return Err(TbaError::WrongRank { want: 1, got: sol1.k });
    }
    if sol2.k != 2 {
        return Err(TbaError::WrongRank { want: 2, got: sol2.k });
    }
    if (sol1.beta - beta).abs() > 1e-12
        || (sol2.beta - beta).abs() > 1e-12
        || (sol1.coupling - j).abs() > 1e-12
        || (sol2.coupling - j).abs() > 1e-12
    {
        return Err(TbaError::MismatchedThermodynamics);
    }
    let f = free_energy(sol1, beta, j)?;
    let ln_l1 = -beta * f;
    let ln_l2 = sol2.log_lambda2_abs.ok_or(TbaError::Unconverged)?;
    let inv_xi = ln_l1 - ln_l2;
    if inv_xi <= 0.0 {
        return Err(TbaError::EigenvalueOrder(inv_xi));
    }
    Ok(1.0 / inv_xi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn config_validation() {
        let mut c = TbaConfig::default();
        assert!(c.validate().is_ok());
        c.m_max = 1;
        assert!(c.validate().is_err());
        c = TbaConfig { half_width: 5.0, ..TbaConfig::default() };
        assert!(c.validate().is_err());
        c = TbaConfig { step: 0.2, ..TbaConfig::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn driving_limit_value_at_origin() {
        assert_relative_eq!(trotter_limit_driving(0.0, 1.0, -1.0), -PI, max_relative = 1e-14);
    }

    #[test]
    fn finite_n_driving_is_even_and_converges() {
        let beta = 1.0;
        let j = -1.0;
        for &v in &[0.0, 0.3, 1.7] {
            let mut prev_err = f64::INFINITY;
            for &n in &[64usize, 256, 1024] {
                let u = -j * beta / n as f64;
                let d = finite_n_driving(v, n, u, j);
                let err = (d - trotter_limit_driving(v, beta, j)).abs();
                assert!(err < prev_err, "error not decreasing at N={n}, v={v}");
                prev_err = err;
            }
            let u = -j * beta / 64.0;
            assert_relative_eq!(
                finite_n_driving(v, 64, u, j),
                finite_n_driving(-v, 64, u, j),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn high_temperature_plateau_fixed_point() {
        // the driving vanishes with beta, so every Y_m flattens onto its
        // plateau; the deviation scales like pi beta |J|
        let beta = 1e-4;
        let cfg = TbaConfig { m_max: 6, half_width: 15.0, step: 0.1, ..TbaConfig::default() };
        let sol = solve_tba(&cfg, beta, -1.0).unwrap();
        for (mi, y) in sol.y.iter().enumerate() {
            let plateau = y_plateau_k1(mi + 1);
            for (i, v) in y.points().enumerate() {
                if v.abs() <= cfg.half_width / 2.0 {
                    assert!(
                        (y.samples[i].re - plateau).abs() < 1e-3,
                        "m={} v={v}: {} vs {plateau}",
                        mi + 1,
                        y.samples[i].re
                    );
                }
            }
        }
        let f = free_energy(&sol, beta, -1.0).unwrap();
        assert!((-beta * f - 3.0_f64.ln()).abs() < 1e-3);
    }

    #[test]
    fn free_energy_constant_value() {
        assert_relative_eq!(free_energy_constant(), 1.4183991523122903, epsilon = 1e-12);
    }

    #[test]
    fn unconverged_input_rejected() {
        let cfg = TbaConfig { max_iter: 1, m_max: 4, half_width: 12.0, step: 0.1, ..TbaConfig::default() };
        match solve_tba(&cfg, 1.0, -1.0) {
            Err(TbaError::NonConvergence { .. }) => {}
            other => panic!("expected NonConvergence, got {other:?}"),
        }
    }
}
