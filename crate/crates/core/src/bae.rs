//! Newton solver for the Bethe ansatz equations, in the sectors carrying the
//! largest (`k = 1`, `n = N`) and second-largest (`k = 2`, `n = N - 1`) QTM
//! eigenvalues.
//!
//! Seeds are string patterns read off the root distributions: `N/2`
//! two-strings for `k = 1`; for `k = 2` either a three-string (`N` in `4Z`)
//! or a one-string (`N` in `4Z + 2`) on the imaginary axis plus two-strings.
//! Roots are kept exactly mirror-symmetric about the imaginary axis by
//! projection after every Newton step.

use crate::params::ModelParams;
use crate::spectral::{phi_scaled, q_scaled, BetheState, PhiSign};
use crate::util::Scaled;
use crate::C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Error)]
pub enum BaeError {
    #[error("root index {k} out of range for sector n = {n}")]
    IndexOutOfRange { k: usize, n: usize },
    #[error("unsupported seed: k = {k} with N = {n}")]
    UnsupportedSeed { k: usize, n: usize },
    #[error("k = 2 seeds require the antiferromagnetic regime (J < 0)")]
    FerromagneticExcited,
    #[error("Newton did not converge: residual {residual:.3e} after {iterations} iterations")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        /// best iterate reached
        roots: Vec<C64>,
    },
    #[error("singular Jacobian (degenerate seed)")]
    SingularJacobian,
    #[error("converged onto a degenerate configuration (coincident roots or an exact string), which solves the cleared residual but not the Bethe equations")]
    DegenerateSolution,
    #[error(transparent)]
    Spectral(#[from] crate::spectral::SpectralError),
    #[error("continuation in u stalled at u = {0}")]
    ContinuationStall(f64),
}

/// String content of a seed: cluster centers and the imaginary offsets of
/// each cluster relative to the symmetry line `Im v = 3/4`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedPattern {
    pub kind: StringKind,
    pub centers: Vec<f64>,
    pub offsets: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StringKind {
    OneString,
    TwoString,
    ThreeString,
}

/// Cleared-denominator BAE residual for root `k` (0-based):
///
/// `F_k = phi_-(v_k + i/2) phi_+(v_k - i) Q(v_k + i/2) Q(v_k - i)
///      + (-1)^(N-n) phi_-(v_k - i/2) phi_+(v_k - 2i) Q(v_k - i/2) Q(v_k + i)`
///
/// which vanishes exactly when the Bethe equations hold.
pub fn bae_residual(state: &BetheState, k: usize, params: &ModelParams) -> Result<C64, BaeError> {
    let (num, _) = residual_parts(state, k, params)?;
    Ok(num.to_c64())
}

/// Residual together with the natural scale `|A_k| + |B_k|` of its two terms.
pub fn bae_residual_scaled(
    state: &BetheState,
    k: usize,
    params: &ModelParams,
) -> Result<(C64, f64), BaeError> {
    let (num, scale) = residual_parts(state, k, params)?;
    Ok((num.to_c64(), scale))
}

fn residual_parts(
    state: &BetheState,
    k: usize,
    params: &ModelParams,
) -> Result<(Scaled, f64), BaeError> {
    let n = state.n();
    if k >= n {
        return Err(BaeError::IndexOutOfRange { k, n });
    }
    let v = state.roots()[k];
    let a = phi_scaled(v + 0.5 * I, PhiSign::Minus, params)
        .mul(phi_scaled(v - I, PhiSign::Plus, params))
        .mul(q_scaled(state, v + 0.5 * I))
        .mul(q_scaled(state, v - I));
    let b = phi_scaled(v - 0.5 * I, PhiSign::Minus, params)
        .mul(phi_scaled(v - 2.0 * I, PhiSign::Plus, params))
        .mul(q_scaled(state, v - 0.5 * I))
        .mul(q_scaled(state, v + I))
        .mul_c(C64::new(state.sigma(), 0.0));
    let scale = a.to_c64().norm() + b.to_c64().norm();
    Ok((a.add(b), scale.max(f64::MIN_POSITIVE)))
}

/// Max over roots of `|F_k| / scale_k`.
pub fn max_relative_residual(state: &BetheState, params: &ModelParams) -> f64 {
    (0..state.n())
        .map(|k| {
            let (f, s) = bae_residual_scaled(state, k, params).expect("k in range");
            f.norm() / s
        })
        .fold(0.0, f64::max)
}

fn two_string(center: f64) -> [C64; 2] {
    [C64::new(center, 0.5), C64::new(center, 1.0)]
}

// Real string centers in units of u, read off converged solutions at small
// u (the centers scale linearly with u and the ratios barely move up to
// u ~ 0.1). A zero entry is a string sitting on the imaginary axis; positive
// entries come in mirror pairs.
fn k1_center_table(n: usize) -> Vec<f64> {
    match n {
        2 => vec![0.0],
        4 => vec![0.91],
        6 => vec![0.0, 1.56],
        8 => vec![0.41, 2.14],
        10 => vec![0.0, 0.71, 2.67],
        12 => vec![0.27, 0.99, 3.54],
        14 => vec![0.0, 0.48, 1.25, 4.16],
        _ => {
            // extend the N = 14 pattern outward; the continuation fallback
            // corrects whatever this misses
            let m = n / 2;
            let mut c = Vec::new();
            if m % 2 == 1 {
                c.push(0.0);
            }
            let mut next = if m % 2 == 1 { 0.48 } else { 0.27 };
            while c.len() < m.div_ceil(2) {
                c.push(next);
                next = next * 1.9 + 0.3;
            }
            c
        }
    }
}

fn k2_center_table(n: usize) -> Vec<f64> {
    match n {
        4 => vec![],
        6 => vec![0.56],
        8 => vec![0.98],
        10 => vec![0.40, 1.20],
        12 => vec![0.56, 1.66],
        14 => vec![0.23, 0.78, 1.96],
        _ => {
            let pairs = if n % 4 == 0 { n / 2 - 2 } else { n / 2 - 1 } / 2;
            let mut c = Vec::new();
            let mut next = 0.25;
            while c.len() < pairs {
                c.push(next);
                next = next * 2.2 + 0.2;
            }
            c
        }
    }
}

fn centers_to_roots(centers: &[f64], u: f64, roots: &mut Vec<C64>) {
    let scale = if u.abs() < 1e-6 { 1e-6 } else { u.abs() };
    for &g in centers {
        if g == 0.0 {
            roots.extend_from_slice(&two_string(0.0));
        } else {
            roots.extend_from_slice(&two_string(g * scale));
            roots.extend_from_slice(&two_string(-g * scale));
        }
    }
}

/// Static string-pattern seed for eigenvalue rank `k` in `{1, 2}`:
/// two-strings at `Im v = 3/4 ± 1/4`; for `k = 2` an extra three-string
/// (`N` in `4Z`) or one-string (`N` in `4Z + 2`) on the imaginary axis.
pub fn seed_state(k: usize, params: &ModelParams) -> Result<BetheState, BaeError> {
    let n = params.trotter();
    let u = params.u();
    let mut roots: Vec<C64> = Vec::new();
    match k {
        1 => centers_to_roots(&k1_center_table(n), u, &mut roots),
        2 => {
            if params.coupling() >= 0.0 {
                return Err(BaeError::FerromagneticExcited);
            }
            centers_to_roots(&k2_center_table(n), u, &mut roots);
            if n % 4 == 0 {
                // three-string about Im v = 3/4; the offset is kept away
                // from 1/4 exactly, where the cleared residual has a
                // spurious stationary manifold
                roots.push(C64::new(0.0, 0.75 - 0.24));
                roots.push(C64::new(0.0, 0.75));
                roots.push(C64::new(0.0, 0.75 + 0.24));
            } else {
                roots.push(C64::new(0.0, 0.75));
            }
        }
        _ => return Err(BaeError::UnsupportedSeed { k, n }),
    }
    Ok(BetheState::new(roots, params)?)
}

/// Project a root multiset to exact mirror symmetry about the imaginary
/// axis (`v -> -conj(v)`), greedily pairing each root with its reflection.
pub fn symmetrize(roots: &mut [C64]) {
    let n = roots.len();
    let mut used = vec![false; n];
    for j in 0..n {
        if used[j] {
            continue;
        }
        let target = -roots[j].conj();
        let mut best = j;
        let mut best_d = (roots[j] - target).norm();
        for (l, &r) in roots.iter().enumerate().skip(j + 1) {
            if used[l] {
                continue;
            }
            let d = (r - target).norm();
            if d < best_d {
                best_d = d;
                best = l;
            }
        }
        used[j] = true;
        if best == j {
            // self-paired: sits on the imaginary axis
            roots[j] = C64::new(0.0, roots[j].im);
        } else {
            used[best] = true;
            let w = 0.5 * (roots[j] - roots[best].conj());
            roots[j] = w;
            roots[best] = -w.conj();
        }
    }
}

/// Outcome of a Newton solve.
#[derive(Debug, Clone)]
pub struct NewtonReport {
    pub state: BetheState,
    pub iterations: usize,
    pub max_residual: f64,
}

/// The cleared residual vanishes identically on configurations where two
/// roots coincide or sit at exactly `i/2` spacing (every product term
/// contains a vanishing `Q` factor). Those are not Bethe solutions.
fn is_degenerate(roots: &[C64]) -> bool {
    let n = roots.len();
    for i in 0..n {
        for j in (i + 1)..n {
            let d = roots[i] - roots[j];
            if d.norm() < 1e-7 {
                return true;
            }
            if (d - 0.5 * I).norm() < 1e-9 || (d + 0.5 * I).norm() < 1e-9 {
                return true;
            }
        }
    }
    false
}

fn residual_vector(roots: &[C64], params: &ModelParams) -> Result<(Vec<C64>, f64), BaeError> {
    let state = BetheState::new(roots.to_vec(), params)?;
    let mut f = Vec::with_capacity(roots.len());
    let mut worst: f64 = 0.0;
    for k in 0..roots.len() {
        let (num, scale) = residual_parts(&state, k, params)?;
        let val = num.to_c64();
        f.push(val / scale);
        worst = worst.max(val.norm() / scale);
    }
    Ok((f, worst))
}

/// Solve `J dz = -f` by Gaussian elimination with partial pivoting.
fn solve_linear(mut a: Vec<Vec<C64>>, mut b: Vec<C64>) -> Option<Vec<C64>> {
    let n = b.len();
    for col in 0..n {
        let mut piv = col;
        let mut best = a[col][col].norm();
        for (r, row) in a.iter().enumerate().skip(col + 1) {
            if row[col].norm() > best {
                best = row[col].norm();
                piv = r;
            }
        }
        if best < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in (col + 1)..n {
            let m = a[r][col] / a[col][col];
            for c in col..n {
                let v = a[col][c];
                a[r][c] -= m * v;
            }
            let bc = b[col];
            b[r] -= m * bc;
        }
    }
    let mut x = vec![C64::new(0.0, 0.0); n];
    for r in (0..n).rev() {
        let mut s = b[r];
        for c in (r + 1)..n {
            s -= a[r][c] * x[c];
        }
        x[r] = s / a[r][r];
    }
    Some(x)
}

/// Damped Newton iteration on the scaled residuals, with mirror-symmetry
/// projection after every step. Deterministic: fixed iteration order, no
/// randomness.
pub fn solve_newton(
    seed: &BetheState,
    params: &ModelParams,
    tol: f64,
    max_iter: usize,
) -> Result<NewtonReport, BaeError> {
    let n = seed.n();
    let mut roots = seed.roots().to_vec();
    symmetrize(&mut roots);
    let (mut f, mut worst) = residual_vector(&roots, params)?;
    for iter in 0..max_iter {
        if worst < tol {
            if is_degenerate(&roots) {
                return Err(BaeError::DegenerateSolution);
            }
            return Ok(NewtonReport {
                state: BetheState::new(roots, params)?,
                iterations: iter,
                max_residual: worst,
            });
        }
        // Jacobian by central differences, column by column
        let mut jac = vec![vec![C64::new(0.0, 0.0); n]; n];
        for col in 0..n {
            let h = 1e-7 * roots[col].norm().max(1.0);
            let mut plus = roots.clone();
            plus[col] += C64::new(h, 0.0);
            let (fp, _) = residual_vector(&plus, params)?;
            let mut minus = roots.clone();
            minus[col] -= C64::new(h, 0.0);
            let (fm, _) = residual_vector(&minus, params)?;
            for row in 0..n {
                jac[row][col] = (fp[row] - fm[row]) / (2.0 * h);
            }
        }
        let rhs: Vec<C64> = f.iter().map(|&z| -z).collect();
        let dz = solve_linear(jac, rhs).ok_or(BaeError::SingularJacobian)?;
        // step halving until the residual norm decreases
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..20 {
            let mut trial: Vec<C64> = roots
                .iter()
                .zip(&dz)
                .map(|(&r, &d)| r + lambda * d)
                .collect();
            symmetrize(&mut trial);
            match residual_vector(&trial, params) {
                Ok((ft, wt)) if wt < worst => {
                    roots = trial;
                    f = ft;
                    worst = wt;
                    accepted = true;
                    break;
                }
                _ => lambda *= 0.5,
            }
        }
        if !accepted {
            return Err(BaeError::NonConvergence {
                iterations: iter + 1,
                residual: worst,
                roots,
            });
        }
    }
    if worst < tol {
        if is_degenerate(&roots) {
            return Err(BaeError::DegenerateSolution);
        }
        return Ok(NewtonReport {
            state: BetheState::new(roots, params)?,
            iterations: max_iter,
            max_residual: worst,
        });
    }
    Err(BaeError::NonConvergence {
        iterations: max_iter,
        residual: worst,
        roots,
    })
}

/// Solve for rank `k` at the target parameters, falling back to continuation
/// in `u` (from small `u` upward, reusing each converged root set as the next
/// seed) when Newton from the static seed diverges.
pub fn solve_k(k: usize, params: &ModelParams, tol: f64, max_iter: usize) -> Result<NewtonReport, BaeError> {
    let seed = seed_state(k, params)?;
    if let Ok(rep) = solve_newton(&seed, params, tol, max_iter) {
        return Ok(rep);
    }
    solve_by_continuation(k, params, tol, max_iter, 24)
}

/// Continuation in `u`: geometric ladder from a small `u` (where the string
/// seeds are reliable) to the target, reusing each converged root set as the
/// next seed and doubling the rung count on failure.
pub fn solve_by_continuation(
    k: usize,
    params: &ModelParams,
    tol: f64,
    max_iter: usize,
    max_rungs: usize,
) -> Result<NewtonReport, BaeError> {
    let n = params.trotter();
    let u_target = params.u();
    let u0 = u_target.signum() * u_target.abs().min(2e-3);
    let mut rungs = 8usize;
    'outer: while rungs <= max_rungs {
        let p0 = ModelParams::with_u(n, u0).map_err(|_| BaeError::UnsupportedSeed { k, n })?;
        let seed = seed_state(k, &p0)?;
        let mut current = match solve_newton(&seed, &p0, tol, max_iter) {
            Ok(r) => r,
            Err(_) => {
                rungs *= 2;
                continue 'outer;
            }
        };
        if (u_target - u0).abs() < 1e-15 {
            return Ok(current);
        }
        for step in 1..=rungs {
            let frac = step as f64 / rungs as f64;
            let u = u0 * (u_target / u0).powf(frac);
            let p = ModelParams::with_u(n, u).map_err(|_| BaeError::UnsupportedSeed { k, n })?;
            let seed = BetheState::new(current.state.roots().to_vec(), &p)?;
            match solve_newton(&seed, &p, tol, max_iter) {
                Ok(r) => current = r,
                Err(_) => {
                    rungs *= 2;
                    continue 'outer;
                }
            }
        }
        return Ok(current);
    }
    Err(BaeError::ContinuationStall(u_target))
}

/// Deviation of a root multiset from mirror symmetry about the imaginary
/// axis and reflection symmetry about the line `Im v = 3/4`.
pub fn symmetry_residual(state: &BetheState) -> f64 {
    let roots = state.roots();
    let mirror: f64 = roots
        .iter()
        .map(|&r| {
            let t = -r.conj();
            roots.iter().map(|&s| (s - t).norm()).fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    let line: f64 = roots
        .iter()
        .map(|&r| {
            let t = C64::new(r.re, 1.5 - r.im);
            roots.iter().map(|&s| (s - t).norm()).fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    mirror.max(line)
}

/// Group roots into string clusters by common real center.
pub fn classify_strings(state: &BetheState, center_tol: f64) -> Vec<(StringKind, f64)> {
    let mut idx: Vec<usize> = (0..state.n()).collect();
    idx.sort_by(|&a, &b| {
        state.roots()[a]
            .re
            .partial_cmp(&state.roots()[b].re)
            .unwrap()
    });
    let mut out: Vec<(StringKind, f64)> = Vec::new();
    let mut cluster: Vec<usize> = Vec::new();
    let flush = |cluster: &mut Vec<usize>, out: &mut Vec<(StringKind, f64)>| {
        if cluster.is_empty() {
            return;
        }
        let c = cluster
            .iter()
            .map(|&i| state.roots()[i].re)
            .sum::<f64>()
            / cluster.len() as f64;
        let kind = match cluster.len() {
            1 => StringKind::OneString,
            2 => StringKind::TwoString,
            3 => StringKind::ThreeString,
            l => panic!("unexpected string length {l}"),
        };
        out.push((kind, c));
        cluster.clear();
    };
    for &i in &idx {
        if let Some(&last) = cluster.last() {
            if (state.roots()[i].re - state.roots()[last].re).abs() > center_tol {
                flush(&mut cluster, &mut out);
            }
        }
        cluster.push(i);
    }
    flush(&mut cluster, &mut out);
    out
}

/// Serialisable root set, the wire format consumed by the fusion and CLI
/// layers: `{N, u, n, k, roots: [[re, im], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RootsDocument {
    #[serde(rename = "N")]
    pub trotter: usize,
    pub u: f64,
    pub n: usize,
    pub k: usize,
    pub roots: Vec<[f64; 2]>,
}

impl RootsDocument {
    pub fn from_state(state: &BetheState, params: &ModelParams, k: usize) -> Self {
        Self {
            trotter: params.trotter(),
            u: params.u(),
            n: state.n(),
            k,
            roots: state.roots().iter().map(|r| [r.re, r.im]).collect(),
        }
    }

    pub fn to_state(&self, params: &ModelParams) -> Result<BetheState, BaeError> {
        let roots = self.roots.iter().map(|r| C64::new(r[0], r[1])).collect();
        Ok(BetheState::new(roots, params)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sector_sign_enters_residual() {
        // n = N: sigma = +1, so the residual is A + B
        let p = ModelParams::with_u(2, 0.1).unwrap();
        let s = BetheState::new(vec![C64::new(0.0, 0.2), C64::new(0.0, 1.3)], &p).unwrap();
        assert_eq!(s.sigma(), 1.0);
        assert!(bae_residual(&s, 0, &p).is_ok());
        assert!(matches!(
            bae_residual(&s, 2, &p),
            Err(BaeError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn symmetrize_projects_exactly() {
        let mut roots = vec![
            C64::new(0.50001, 0.25),
            C64::new(-0.49999, 0.2501),
            C64::new(1e-9, 0.75),
        ];
        symmetrize(&mut roots);
        assert_eq!(roots[0], -roots[1].conj());
        assert_eq!(roots[2].re, 0.0);
    }

    #[test]
    fn seed_counts_match_patterns() {
        let p12 = ModelParams::with_u(12, 0.05).unwrap();
        let s = seed_state(1, &p12).unwrap();
        assert_eq!(s.n(), 12);
        let cl = classify_strings(&s, 0.005);
        assert_eq!(cl.len(), 6);
        assert!(cl.iter().all(|(k, _)| *k == StringKind::TwoString));

        let s2 = seed_state(2, &p12).unwrap();
        assert_eq!(s2.n(), 11);
        let cl2 = classify_strings(&s2, 0.005);
        let threes = cl2.iter().filter(|(k, _)| *k == StringKind::ThreeString).count();
        let twos = cl2.iter().filter(|(k, _)| *k == StringKind::TwoString).count();
        assert_eq!((twos, threes), (4, 1));

        let p14 = ModelParams::with_u(14, 0.05).unwrap();
        let s3 = seed_state(2, &p14).unwrap();
        assert_eq!(s3.n(), 13);
        let cl3 = classify_strings(&s3, 0.005);
        let ones = cl3.iter().filter(|(k, _)| *k == StringKind::OneString).count();
        let twos = cl3.iter().filter(|(k, _)| *k == StringKind::TwoString).count();
        assert_eq!((twos, ones), (6, 1));
    }

    #[test]
    fn ferromagnetic_excited_seed_rejected() {
        let p = ModelParams::new(1.0, 0.5, 12).unwrap(); // J > 0
        assert!(matches!(
            seed_state(2, &p),
            Err(BaeError::FerromagneticExcited)
        ));
    }

    #[test]
    fn newton_converges_and_is_idempotent_n4() {
        let p = ModelParams::with_u(4, 0.05).unwrap();
        let rep = solve_k(1, &p, 1e-12, 200).unwrap();
        assert!(rep.max_residual < 1e-12);
        assert_eq!(rep.state.n(), 4);
        // running the solver on its own output returns the same roots
        let again = solve_newton(&rep.state, &p, 1e-12, 50).unwrap();
        for (a, b) in rep.state.roots().iter().zip(again.state.roots()) {
            assert!((a - b).norm() < 1e-12);
        }
        assert_eq!(again.iterations, 0);
    }

    #[test]
    fn n2_roots_match_grid_search_oracle() {
        // Exhaustive scan over the two-string ansatz {3/4 - t, 3/4 + t} on
        // the imaginary axis (the center is 0 by mirror symmetry at N = 2),
        // polishing every local residual minimum. Two genuine solutions
        // exist; the one carrying the larger T_1(0) is the k = 1 state.
        let p = ModelParams::with_u(2, 0.1).unwrap();
        let rep = solve_k(1, &p, 1e-13, 200).unwrap();
        let res_at = |t: f64| {
            let s = BetheState::new(
                vec![C64::new(0.0, 0.75 - t), C64::new(0.0, 0.75 + t)],
                &p,
            )
            .unwrap();
            max_relative_residual(&s, &p)
        };
        let ts: Vec<f64> = (1..800).map(|i| 1e-3 + 0.85 * i as f64 / 800.0).collect();
        let rs: Vec<f64> = ts.iter().map(|&t| res_at(t)).collect();
        let mut candidates: Vec<(f64, f64)> = Vec::new(); // (t1_value, t)
        for i in 1..ts.len() - 1 {
            if rs[i] < rs[i - 1] && rs[i] < rs[i + 1] {
                let seed = BetheState::new(
                    vec![C64::new(0.0, 0.75 - ts[i]), C64::new(0.0, 0.75 + ts[i])],
                    &p,
                )
                .unwrap();
                if let Ok(pol) = solve_newton(&seed, &p, 1e-13, 100) {
                    let t1 =
                        crate::spectral::t1_eval(C64::new(0.0, 0.0), &pol.state, &p);
                    candidates.push((t1.re, pol.state.roots()[0].im));
                }
            }
        }
        assert!(!candidates.is_empty(), "grid scan found no solutions");
        candidates.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        // the largest-eigenvalue candidate matches solve_k's roots
        let want_im = candidates[0].1;
        let got_ims: Vec<f64> = rep.state.roots().iter().map(|r| r.im).collect();
        assert!(
            got_ims.iter().any(|g| (g - want_im).abs() < 1e-9),
            "grid-search oracle disagrees: {want_im} not among {got_ims:?}"
        );
    }

    #[test]
    fn continuation_oracle_n4() {
        let p = ModelParams::with_u(4, 0.1).unwrap();
        let direct = solve_k(1, &p, 1e-12, 200).unwrap();
        let cont = solve_by_continuation(1, &p, 1e-12, 200, 64).unwrap();
        let mut a: Vec<C64> = direct.state.roots().to_vec();
        let mut b: Vec<C64> = cont.state.roots().to_vec();
        let key = |z: &C64| (z.re * 1e6 + z.im, z.im);
        a.sort_by(|x, y| key(x).partial_cmp(&key(y)).unwrap());
        b.sort_by(|x, y| key(x).partial_cmp(&key(y)).unwrap());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() < 1e-10);
        }
    }

    #[test]
    fn roots_document_roundtrip() {
        let p = ModelParams::with_u(4, 0.05).unwrap();
        let rep = solve_k(1, &p, 1e-12, 200).unwrap();
        let doc = RootsDocument::from_state(&rep.state, &p, 1);
        let json = serde_json::to_string(&doc).unwrap();
        assert!(json.contains("\"N\":4"));
        let back: RootsDocument = serde_json::from_str(&json).unwrap();
        let state = back.to_state(&p).unwrap();
        for (a, b) in state.roots().iter().zip(rep.state.roots()) {
            assert_eq!(a, b);
        }
    }
}
