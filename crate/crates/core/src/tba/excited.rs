//! Excited-state TBA: the second QTM eigenvalue's Y-functions carry extra
//! `tanh` driving terms from the real zeros `x_m` inside the physical strip,
//! and alternating negative plateaus.
//!
//! On the real axis every `Y_m` is real, so the equations split: the real
//! parts close among `ln|Y_m|` with structurally known signs (flips at
//! `±x_{m-1}, ±x_m, ±x_{m+1}`), while the imaginary parts are
//! piecewise-constant multiples of `pi` whose convolutions have closed
//! forms. The zeros `x_m` are fixed by `Y_m(x_m ± i/2) = -1`, evaluated at
//! the shift `i(1/2 - delta)` and extrapolated to `delta -> 0`.

use super::grid::GridFunction;
use super::kernel::{k_tail_shifted, kernel, Convolver, KernelKind};
use super::{
    free_energy_constant, softplus, trotter_limit_driving, TbaConfig, TbaError, TbaSolution,
};
use crate::bae::solve_k;
use crate::fusion::y_plateau_k2;
use crate::fusion::zeros::real_axis_zeros;
use crate::params::ModelParams;
use crate::C64;
use std::f64::consts::PI;

#[derive(Debug, Clone)]
pub struct ExcitedOptions {
    /// Seed values for the real zeros `x_m`; when absent they are read off
    /// the real zeros of the finite-`N` fusion eigenvalues.
    pub x_seed: Option<Vec<f64>>,
    /// Trotter number of the seeding computation.
    pub seed_trotter: usize,
    /// Kernel-pole shifts for the `x` condition, extrapolated to zero.
    pub deltas: [f64; 3],
    pub x_tol: f64,
    pub x_damping: f64,
    pub outer_max: usize,
}

impl Default for ExcitedOptions {
    fn default() -> Self {
        Self {
            x_seed: None,
            seed_trotter: 8,
            deltas: [1e-2, 5e-3, 2.5e-3],
            x_tol: 1e-4,
            x_damping: 0.7,
            outer_max: 60,
        }
    }
}

/// `ln |tanh(pi (v - x)/2) tanh(pi (v + x)/2)|`.
fn ln_th_abs(v: f64, x: f64) -> f64 {
    let a = (0.5 * PI * (v - x)).tanh().abs().max(1e-300);
    let b = (0.5 * PI * (v + x)).tanh().abs().max(1e-300);
    a.ln() + b.ln()
}

/// Principal `ln tanh(pi(z-x)/2) + ln tanh(pi(z+x)/2)` for `Im z` inside
/// the strip; continuous in `Re z` there.
fn ln_th_complex(z: C64, x: f64) -> C64 {
    let a = ((z - x) * (0.5 * PI)).tanh();
    let b = ((z + x) * (0.5 * PI)).tanh();
    a.ln() + b.ln()
}

/// Piecewise-constant phase (in units of `pi`): `anchor` at `+inf`, plus
/// `inc` for every step position greater than `v`.
#[derive(Debug, Clone, Default)]
struct StepField {
    anchor: f64,
    steps: Vec<(f64, f64)>,
}

impl StepField {
    fn add_scaled(&mut self, other: &StepField, c: f64) {
        self.anchor += c * other.anchor;
        for &(p, inc) in &other.steps {
            self.steps.push((p, c * inc));
        }
    }

    /// `∫ K(z - w) * pi * field(w) dw` via the closed-form shifted tails.
    fn shifted_convolution(&self, z: C64) -> C64 {
        let mut acc = C64::new(self.anchor * 0.5, 0.0);
        for &(p, inc) in &self.steps {
            acc += k_tail_shifted(z.re - p, z.im) * inc;
        }
        acc * PI
    }
}

/// Phase anchor (units of pi) of `ln(1 + Y_m)` at `v -> +inf`, approaching
/// the axis from above; read off the finite-N fusion eigenvalues, which give
/// `-pi` for every odd level.
fn anchor_one_plus_y(m: usize) -> f64 {
    if m % 2 == 0 {
        0.0
    } else {
        -1.0
    }
}

/// Phase anchor of `ln Y_m` at `+inf` from above.
fn anchor_y(m: usize) -> f64 {
    if m % 2 == 0 {
        0.0
    } else {
        -1.0
    }
}

fn plateau(m: usize) -> f64 {
    y_plateau_k2(m)
}

/// Structural sign of `Y_m` on the axis: the plateau sign with one flip at
/// each of `±x_{m-1}, ±x_m, ±x_{m+1}` (only `x_m, x_{m+1}` for `m = 1`).
fn structural_sign(m: usize, v: f64, x_ext: &[f64]) -> f64 {
    let s_inf = plateau(m).signum();
    let mut flips = 0usize;
    let lo = if m == 1 { 1 } else { m - 1 };
    for idx in lo..=(m + 1) {
        if x_ext[idx] > v.abs() {
            flips += 1;
        }
    }
    if flips % 2 == 0 {
        s_inf
    } else {
        -s_inf
    }
}

struct Workspace {
    len: usize,
    vs: Vec<f64>,
    conv: Convolver,
    drive: Vec<f64>,
}

/// Solve with default options.
pub fn solve_excited(config: &TbaConfig, beta: f64, j: f64) -> Result<TbaSolution, TbaError> {
    solve_excited_with(config, beta, j, &ExcitedOptions::default())
}

fn seed_x(beta: f64, j: f64, m_max: usize, seed_trotter: usize) -> Result<Vec<f64>, TbaError> {
    let params = ModelParams::new(j, beta, seed_trotter)
        .map_err(|e| TbaError::Seeding(format!("{e}")))?;
    let rep = solve_k(2, &params, 1e-11, 400).map_err(|e| TbaError::Seeding(format!("{e}")))?;
    let mut xs = Vec::with_capacity(m_max);
    for m in 1..=m_max {
        let zeros = real_axis_zeros(m, &rep.state, &params, 10.0);
        match zeros.first() {
            Some(&z) => xs.push(z),
            None => {
                // extrapolate along the same-parity series (the zeros
                // interleave between even and odd levels)
                let l = xs.len();
                let guess = if l >= 4 {
                    2.0 * xs[l - 2] - xs[l - 4]
                } else if l >= 2 {
                    xs[l - 2] + 0.55
                } else if l == 1 {
                    xs[0] + 0.55
                } else {
                    return Err(TbaError::Seeding(format!(
                        "no real zero found for level {m} at N = {seed_trotter}"
                    )));
                };
                xs.push(guess.max(0.1));
            }
        }
    }
    Ok(xs)
}

pub fn solve_excited_with(
    config: &TbaConfig,
    beta: f64,
    j: f64,
    opts: &ExcitedOptions,
) -> Result<TbaSolution, TbaError> {
    config.validate()?;
    if !(beta > 0.0) {
        return Err(TbaError::Config(format!("beta must be positive, got {beta}")));
    }
    if j >= 0.0 {
        return Err(TbaError::Config(
            "excited-state solve requires the antiferromagnetic regime (J < 0)".into(),
        ));
    }
    let m_max = config.m_max;
    let len = GridFunction::len_for(config.half_width, config.step);
    let vs: Vec<f64> = (0..len)
        .map(|i| -config.half_width + config.step * i as f64)
        .collect();
    let ws = Workspace {
        len,
        conv: Convolver::new(config.half_width, config.step),
        drive: vs.iter().map(|&v| trotter_limit_driving(v, beta, j)).collect(),
        vs,
    };
    let mut x: Vec<f64> = match &opts.x_seed {
        Some(s) if s.len() >= m_max => s[..m_max].to_vec(),
        Some(s) => {
            let mut xs = s.clone();
            while xs.len() < m_max {
                let l = xs.len();
                let next = if l >= 2 { 2.0 * xs[l - 1] - xs[l - 2] } else { xs[l - 1] };
                xs.push(next.max(0.25 * xs[l - 1]));
            }
            xs
        }
        None => seed_x(beta, j, m_max, opts.seed_trotter)?,
    };
    // ln |Y_m| initialised from the plateau magnitudes
    let mut lam: Vec<Vec<f64>> = (1..=m_max)
        .map(|m| vec![plateau(m).abs().max(1e-12).ln(); ws.len])
        .collect();
    let mut history: Vec<f64> = Vec::new();
    let mut iterations = 0usize;
    let mut last_x_change = f64::INFINITY;
    let mut converged = false;
    for outer in 0..opts.outer_max {
        // inner sweeps at fixed x
        let inner_tol = if last_x_change < opts.x_tol {
            config.tol
        } else {
            (0.02 * last_x_change).clamp(config.tol, 1e-5)
        };
        let mut inner_done = false;
        for _ in 0..config.max_iter {
            iterations += 1;
            let change = sweep(config, &ws, &mut lam, &x)?;
            history.push(change);
            if change < inner_tol {
                inner_done = true;
                break;
            }
        }
        if !inner_done {
            return Err(TbaError::NonConvergence {
                iterations,
                change: *history.last().unwrap_or(&f64::NAN),
            });
        }
        // x update. Levels near the truncation are closure-dominated and
        // feed back unstably through their own conditions, so only the
        // lower levels are solved; the rest continue the parity series with
        // spacings taken from the solved part (a bounded linear map of the
        // solved zeros, so no feedback amplification).
        let solved_top = m_max.min((m_max.saturating_sub(4)).max(4));
        let mut x_change: f64 = 0.0;
        let mut x_new = x.clone();
        for m in 1..=solved_top {
            let target = solve_x_condition(config, &ws, &lam, &x, m, beta, j, opts)?;
            x_change = x_change.max((target - x[m - 1]).abs());
            x_new[m - 1] = x[m - 1] + opts.x_damping * (target - x[m - 1]);
        }
        if solved_top < m_max && solved_top >= 4 {
            let s_hi = x_new[solved_top - 1] - x_new[solved_top - 3];
            let s_lo = x_new[solved_top - 2] - x_new[solved_top - 4];
            for m in (solved_top + 1)..=m_max {
                let s = if (m - solved_top) % 2 == 1 { s_lo } else { s_hi };
                x_new[m - 1] = x_new[m - 3] + s.max(0.1);
            }
        }
        if std::env::var("OSPCHAIN_TBA_TRACE").is_ok() {
            eprintln!(
                "outer {outer}: x_change {x_change:.3e}, x -> {:?}",
                x_new.iter().map(|v| (v * 1e4).round() / 1e4).collect::<Vec<_>>()
            );
        }
        x = x_new;
        last_x_change = x_change;
        if x_change < opts.x_tol && outer > 0 {
            // final polish of the Y's at the converged x
            for _ in 0..config.max_iter {
                iterations += 1;
                let change = sweep(config, &ws, &mut lam, &x)?;
                history.push(change);
                if change < config.tol {
                    converged = true;
                    break;
                }
            }
            break;
        }
    }
    if !converged {
        return Err(TbaError::NonConvergence {
            iterations,
            change: *history.last().unwrap_or(&f64::NAN),
        });
    }
    let x_ext = extend_x(&x);
    let y: Vec<GridFunction> = (1..=m_max)
        .map(|m| GridFunction {
            half_width: config.half_width,
            step: config.step,
            samples: (0..ws.len)
                .map(|i| {
                    C64::new(
                        structural_sign(m, ws.vs[i], &x_ext) * lam[m - 1][i].exp(),
                        0.0,
                    )
                })
                .collect(),
            c_inf: C64::new(plateau(m), 0.0),
        })
        .collect();
    let mut sol = TbaSolution {
        k: 2,
        y,
        x,
        beta,
        coupling: j,
        converged,
        iterations,
        history,
        log_lambda2_abs: None,
        residual_phase: None,
    };
    let (ll2, phase) = second_eigenvalue_log(&sol, beta, j)?;
    sol.log_lambda2_abs = Some(ll2);
    sol.residual_phase = Some(phase);
    Ok(sol)
}

/// Padded x-list: index m in 1..=m_max valid, plus the extrapolated
/// `x_{m_max+1}` used by the last equation; index 0 unused.
///
/// The zeros interleave (`x_{m+1} < x_m` for odd `m`, above for even), so
/// the phantom level is extrapolated along its own parity series.
fn extend_x(x: &[f64]) -> Vec<f64> {
    let m_max = x.len();
    let mut ext = Vec::with_capacity(m_max + 2);
    ext.push(f64::NAN);
    ext.extend_from_slice(x);
    let next = if m_max >= 4 {
        2.0 * x[m_max - 2] - x[m_max - 4]
    } else if m_max >= 2 {
        x[m_max - 2] + 0.55
    } else {
        x[m_max - 1] + 0.55
    };
    ext.push(next.max(0.25 * x[m_max - 1]));
    ext
}

/// One damped Jacobi sweep over all levels; returns the sup-norm change.
fn sweep(
    config: &TbaConfig,
    ws: &Workspace,
    lam: &mut [Vec<f64>],
    x: &[f64],
) -> Result<f64, TbaError> {
    let m_max = config.m_max;
    let x_ext = extend_x(x);
    // ln|1 + Y_m| and ln|1 + 1/Y_m| with structural signs
    let mut ell: Vec<Vec<f64>> = Vec::with_capacity(m_max);
    let mut ellbar: Vec<Vec<f64>> = Vec::with_capacity(m_max);
    for m in 1..=m_max {
        let mut e = Vec::with_capacity(ws.len);
        let mut eb = Vec::with_capacity(ws.len);
        for i in 0..ws.len {
            let s = structural_sign(m, ws.vs[i], &x_ext);
            let l = lam[m - 1][i];
            // ln|1 + s e^l|, stable at both ends
            let le = if s > 0.0 {
                softplus(l)
            } else {
                // |1 - e^l| = e^max(l,0) |1 - e^{-|l|}|
                l.max(0.0) + (-l.abs()).exp_m1().abs().max(1e-300).ln()
            };
            e.push(le);
            eb.push(le - l);
        }
        ell.push(e);
        ellbar.push(eb);
    }
    let ell_inf: Vec<f64> = (1..=m_max + 1)
        .map(|m| (1.0 + plateau(m)).abs().max(1e-300).ln())
        .collect();
    let ellbar_inf: Vec<f64> = (1..=m_max)
        .map(|m| (1.0 + 1.0 / plateau(m)).abs().max(1e-300).ln())
        .collect();
    let conv_l: Vec<Vec<f64>> = (0..m_max)
        .map(|mi| ws.conv.convolve_real(KernelKind::K, &ell[mi], ell_inf[mi]))
        .collect();
    let conv_lbar: Vec<Vec<f64>> = (0..m_max)
        .map(|mi| ws.conv.convolve_real(KernelKind::K, &ellbar[mi], ellbar_inf[mi]))
        .collect();
    let mut change: f64 = 0.0;
    for m in 1..=m_max {
        let mi = m - 1;
        for i in 0..ws.len {
            let v = ws.vs[i];
            let above = if m < m_max {
                conv_l[mi + 1][i]
            } else {
                0.5 * ell_inf[m_max]
            };
            let below = if m == 1 { ws.drive[i] } else { conv_l[mi - 1][i] };
            let mut new = above + below - conv_lbar[mi][i];
            new -= ln_th_abs(v, x_ext[m]);
            new += ln_th_abs(v, x_ext[m + 1]);
            if m >= 2 {
                new += ln_th_abs(v, x_ext[m - 1]);
            }
            if !new.is_finite() {
                return Err(TbaError::BadUpdate { m });
            }
            let new = new.clamp(-60.0, 60.0);
            change = change.max((new - lam[mi][i]).abs());
            lam[mi][i] += config.damping * (new - lam[mi][i]);
        }
    }
    Ok(change)
}

/// Zero crossings of the samples, linearly interpolated.
fn crossings(vs: &[f64], d: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 1..d.len() {
        if d[i - 1].signum() != d[i].signum() && d[i - 1].is_finite() && d[i].is_finite() {
            let t = d[i - 1] / (d[i - 1] - d[i]);
            out.push(vs[i - 1] + t * (vs[i] - vs[i - 1]));
        }
    }
    out
}

/// Phase field of `ln(1 + Y_m)` along the axis, continued from above.
/// `1 + Y_m` changes sign through its poles at `±x_m` (`-pi` counted from
/// the right); any genuine real zero elsewhere contributes `+pi`.
fn phase_one_plus_y(
    m: usize,
    ws: &Workspace,
    lam: &[Vec<f64>],
    x_ext: &[f64],
) -> Result<StepField, TbaError> {
    let mut steps = vec![(x_ext[m], -1.0), (-x_ext[m], -1.0)];
    let d: Vec<f64> = (0..ws.len)
        .map(|i| 1.0 + structural_sign(m, ws.vs[i], x_ext) * lam[m - 1][i].exp())
        .collect();
    let h3 = 3.0 * (ws.vs[1] - ws.vs[0]);
    let cr = crossings(&ws.vs, &d);
    let genuine: Vec<f64> = cr
        .into_iter()
        .filter(|p| (p.abs() - x_ext[m]).abs() > h3)
        .collect();
    if genuine.len() > 12 {
        return Err(TbaError::BranchTracking(format!(
            "1 + Y_{m} crosses zero {} times on the axis",
            genuine.len()
        )));
    }
    steps.extend(genuine.into_iter().map(|p| (p, 1.0)));
    Ok(StepField { anchor: anchor_one_plus_y(m), steps })
}

/// Phase field of `ln Y_m`: anchor plus `+1` steps at its zeros
/// (`±x_{m-1}, ±x_{m+1}`) and `-1` steps at its poles (`±x_m`).
fn phase_y(m: usize, x_ext: &[f64]) -> StepField {
    let mut steps = Vec::new();
    let mut add = |x: f64, inc: f64| {
        steps.push((x, inc));
        steps.push((-x, inc));
    };
    if m >= 2 {
        add(x_ext[m - 1], 1.0);
    }
    add(x_ext[m + 1], 1.0);
    add(x_ext[m], -1.0);
    StepField { anchor: anchor_y(m), steps }
}

/// `ln Y_m` at the complex point `z` (inside the strip, approached from
/// above), rebuilding the right-hand side of the excited equations with
/// complex kernels: numeric fine-grid convolution of the log-modulus parts
/// plus closed-form convolution of the piecewise phases.
#[allow(clippy::too_many_arguments)]
fn eval_ln_y_complex(
    config: &TbaConfig,
    ws: &Workspace,
    lam: &[Vec<f64>],
    x: &[f64],
    m: usize,
    z: C64,
    beta: f64,
    j: f64,
) -> Result<C64, TbaError> {
    let m_max = config.m_max;
    let x_ext = extend_x(x);
    // combined log-modulus integrand and phase field of the m-th equation
    let term = |p: usize| -> Vec<f64> {
        (0..ws.len)
            .map(|i| {
                let s = structural_sign(p, ws.vs[i], &x_ext);
                let l = lam[p - 1][i];
                if s > 0.0 {
                    softplus(l)
                } else {
                    l.max(0.0) + (-l.abs()).exp_m1().abs().max(1e-300).ln()
                }
            })
            .collect()
    };
    let mut f_re = vec![0.0; ws.len];
    let mut f_inf = 0.0;
    let mut phases = StepField::default();
    // + ln(1+Y_{m+1})
    if m < m_max {
        let t = term(m + 1);
        for i in 0..ws.len {
            f_re[i] += t[i];
        }
        f_inf += (1.0 + plateau(m + 1)).abs().ln();
        phases.add_scaled(&phase_one_plus_y(m + 1, ws, lam, &x_ext)?, 1.0);
    } else {
        let c = (1.0 + plateau(m_max + 1)).abs().ln();
        for slot in f_re.iter_mut() {
            *slot += c;
        }
        f_inf += c;
        phases.add_scaled(
            &StepField { anchor: anchor_one_plus_y(m_max + 1), steps: vec![] },
            1.0,
        );
    }
    // + ln(1+Y_{m-1}) for m >= 2
    if m >= 2 {
        let t = term(m - 1);
        for i in 0..ws.len {
            f_re[i] += t[i];
        }
        f_inf += (1.0 + plateau(m - 1)).abs().ln();
        phases.add_scaled(&phase_one_plus_y(m - 1, ws, lam, &x_ext)?, 1.0);
    }
    // - ln(1+Y_m^{-1}) = -(ln(1+Y_m) - ln Y_m)
    let t = term(m);
    for i in 0..ws.len {
        f_re[i] -= t[i] - lam[m - 1][i];
    }
    f_inf -= (1.0 + 1.0 / plateau(m)).abs().ln();
    phases.add_scaled(&phase_one_plus_y(m, ws, lam, &x_ext)?, -1.0);
    phases.add_scaled(&phase_y(m, &x_ext), 1.0);
    // fine-grid convolution of the real part against the complex kernel
    let coarse = GridFunction {
        half_width: config.half_width,
        step: config.step,
        samples: f_re.iter().map(|&r| C64::new(r, 0.0)).collect(),
        c_inf: C64::new(f_inf, 0.0),
    };
    let fine_h = (config.step / 2.0).min(z.im.min(0.5 - z.im).abs().max(1e-4) / 3.0);
    let window = 16.0;
    let lo = (z.re - window).max(-config.half_width);
    let hi = (z.re + window).min(config.half_width);
    let n_fine = ((hi - lo) / fine_h).ceil() as usize;
    let mut conv = C64::new(0.0, 0.0);
    for i in 0..=n_fine {
        let w = lo + (hi - lo) * i as f64 / n_fine as f64;
        let t = z - w;
        let kz = 1.0 / ((t * PI).cosh() * 2.0);
        let trap = if i == 0 || i == n_fine { 0.5 } else { 1.0 };
        conv += kz * ((coarse.interpolate(w) - coarse.c_inf) * trap);
    }
    conv *= (hi - lo) / n_fine as f64;
    conv += C64::new(f_inf * 0.5, 0.0);
    conv += C64::new(0.0, 1.0) * phases.shifted_convolution(z);
    // assemble the full right-hand side
    let mut out = conv;
    if m == 1 {
        out += PI * beta * j / (z * PI).cosh();
    }
    out -= ln_th_complex(z, x_ext[m]);
    out += ln_th_complex(z, x_ext[m + 1]);
    if m >= 2 {
        out += ln_th_complex(z, x_ext[m - 1]);
    }
    // The alternating i pi constants of the equations assume phase anchors
    // that drift one sheet per level; with the bounded from-above anchors
    // used here the constant is i pi at every level (equal mod 2 pi, which
    // is all that survives the exponential).
    out += C64::new(0.0, PI);
    Ok(out)
}

/// `Y_m(x + i/2) = -1` solved for `x`: Gauss-Newton on `|1 + Y_m|^2` with
/// the delta-shifted kernel extrapolated to the pole.
#[allow(clippy::too_many_arguments)]
fn solve_x_condition(
    config: &TbaConfig,
    ws: &Workspace,
    lam: &[Vec<f64>],
    x: &[f64],
    m: usize,
    beta: f64,
    j: f64,
    opts: &ExcitedOptions,
) -> Result<f64, TbaError> {
    let eval = |xx: f64| -> Result<C64, TbaError> {
        // Richardson extrapolation in the shift delta (linear model)
        let d1 = opts.deltas[1];
        let d2 = opts.deltas[2];
        let f1 = eval_ln_y_complex(config, ws, lam, x, m, C64::new(xx, 0.5 - d1), beta, j)?;
        let f2 = eval_ln_y_complex(config, ws, lam, x, m, C64::new(xx, 0.5 - d2), beta, j)?;
        let ln_y = f2 + (f2 - f1) * (d2 / (d1 - d2));
        Ok(1.0 + ln_y.exp())
    };
    let x0 = x[m - 1];
    let mut best_x = x0;
    let mut best = eval(x0)?;
    // short bracket scan for safety
    for &c in &[0.75, 0.9, 1.1, 1.3] {
        let xx = (x0 * c).max(1e-3);
        let g = eval(xx)?;
        if g.norm() < best.norm() {
            best = g;
            best_x = xx;
        }
    }
    // Gauss-Newton through a finite-difference derivative
    let mut cur_x = best_x;
    let mut cur = best;
    for _ in 0..12 {
        let h = 1e-4 * (1.0 + cur_x.abs());
        let gp = eval(cur_x + h)?;
        let dg = (gp - cur) / h;
        if dg.norm() < 1e-14 {
            break;
        }
        let step = -(cur.re * dg.re + cur.im * dg.im) / dg.norm_sqr();
        let next_x = (cur_x + step.clamp(-0.5, 0.5)).max(1e-3);
        let next = eval(next_x)?;
        if next.norm() < cur.norm() {
            cur_x = next_x;
            cur = next;
        } else {
            break;
        }
        if step.abs() < 0.2 * opts.x_tol {
            break;
        }
    }
    Ok(cur_x)
}

/// `ln |lambda_2|` from the converged rank-2 solution:
/// the ground-state constant, the `2 ln tanh(pi x_1 / 2)` term and the
/// `G`-convolved integral of `ln |(1 + Y_1) tanh tanh|`; also returns the
/// recorded residual phase integral.
pub fn second_eigenvalue_log(
    sol: &TbaSolution,
    beta: f64,
    j: f64,
) -> Result<(f64, f64), TbaError> {
    if sol.k != 2 {
        return Err(TbaError::WrongRank { want: 2, got: sol.k });
    }
    let x1 = *sol.x.first().ok_or(TbaError::Unconverged)?;
    let y1 = &sol.y[0];
    let h = y1.step;
    let mut integral = 0.0;
    let mut phase = 0.0;
    for (i, v) in y1.points().enumerate() {
        let w = if i == 0 || i == y1.len() - 1 { 0.5 } else { 1.0 };
        let yv = y1.samples[i].re;
        let th = (0.5 * PI * (v - x1)).tanh() * (0.5 * PI * (v + x1)).tanh();
        let val = (1.0 + yv) * th;
        integral += w * h * kernel(KernelKind::G, v) * val.abs().max(1e-300).ln();
        if val < 0.0 {
            phase += w * h * kernel(KernelKind::G, v) * PI;
        }
    }
    let ll2 = -beta * j * free_energy_constant()
        + 2.0 * (0.5 * PI * x1).tanh().ln()
        + integral;
    Ok((ll2, phase))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn structural_sign_counts_flips() {
        // m = 2: flips at x_1, x_2, x_3
        let x_ext = [f64::NAN, 1.0, 0.6, 0.3, 0.15];
        let s_inf = plateau(2).signum(); // +1
        assert_eq!(structural_sign(2, 2.0, &x_ext), s_inf);
        assert_eq!(structural_sign(2, 0.8, &x_ext), -s_inf); // past x_1
        assert_eq!(structural_sign(2, 0.45, &x_ext), s_inf); // past x_2 as well
        assert_eq!(structural_sign(2, 0.2, &x_ext), -s_inf); // past all three
        // even in v
        assert_eq!(structural_sign(2, -0.8, &x_ext), structural_sign(2, 0.8, &x_ext));
    }

    #[test]
    fn step_field_convolution_matches_quadrature() {
        let f = StepField { anchor: 1.0, steps: vec![(0.3, 1.0), (-0.8, -2.0)] };
        let z = C64::new(0.1, 0.45);
        let got = f.shifted_convolution(z);
        // piecewise Simpson between the jump points (the integrand is
        // smooth inside each piece)
        let breaks = [-40.0, -0.8, 0.3, 40.0];
        let field_at = |w: f64| {
            let mut v = f.anchor;
            for &(p, inc) in &f.steps {
                if p > w {
                    v += inc;
                }
            }
            v
        };
        let mut acc = C64::new(0.0, 0.0);
        for seg in breaks.windows(2) {
            let (a, b) = (seg[0] + 1e-12, seg[1] - 1e-12);
            let field = field_at(0.5 * (a + b));
            let n = 200_000;
            let hq = (b - a) / n as f64;
            let kern = |w: f64| 1.0 / (((z - w) * PI).cosh() * 2.0);
            let mut s = kern(a) + kern(b);
            for i in 1..n {
                let w = a + i as f64 * hq;
                s += kern(w) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            acc += s * (hq / 3.0) * (PI * field);
        }
        assert!((got - acc).norm() < 1e-7, "{got} vs {acc}");
    }

    #[test]
    fn crossing_detector_interpolates() {
        let vs: Vec<f64> = (0..100).map(|i| -5.0 + 0.1 * i as f64).collect();
        let d: Vec<f64> = vs.iter().map(|&v| v * v - 2.0).collect();
        let cr = crossings(&vs, &d);
        assert_eq!(cr.len(), 2);
        assert!((cr[0] + 2.0_f64.sqrt()).abs() < 0.01);
        assert!((cr[1] - 2.0_f64.sqrt()).abs() < 0.01);
    }

    #[test]
    fn ln_th_matches_on_axis() {
        for &(v, x) in &[(0.7, 0.4), (-1.3, 0.9), (0.2, 1.5)] {
            let direct = ln_th_abs(v, x);
            let complex = ln_th_complex(C64::new(v, 0.0), x);
            assert!((complex.re - direct).abs() < 1e-12);
        }
    }
}
