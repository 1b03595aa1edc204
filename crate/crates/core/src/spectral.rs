//! Building blocks of the analytic Bethe ansatz: the half-chain powers
//! `phi`, the root polynomial `Q`, the vacuum parts and the three box
//! functions whose sum is the QTM eigenvalue.

use crate::params::ModelParams;
use crate::util::{powi_scaled, Scaled};
use crate::C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default pole-proximity threshold, in units of the local root spacing.
pub const DEFAULT_POLE_EPS: f64 = 1e-8;

const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("coincident Bethe roots (spacing {0:.3e})")]
    CoincidentRoots(f64),
    #[error("root count {n} exceeds Trotter number {cap}")]
    TooManyRoots { n: usize, cap: usize },
    #[error("evaluation point within {dist:.3e} of a pole of box {letter:?}")]
    PoleProximity { letter: Letter, dist: f64 },
}

/// The three local states, in the total order `1 ≺ 0 ≺ 1̄`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Letter {
    One,
    Zero,
    OneBar,
}

impl Letter {
    pub const ALL: [Letter; 3] = [Letter::One, Letter::Zero, Letter::OneBar];
}

impl std::fmt::Display for Letter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Letter::One => write!(f, "1"),
            Letter::Zero => write!(f, "0"),
            Letter::OneBar => write!(f, "1b"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhiSign {
    Plus,
    Minus,
}

/// `phi_±(v) = (v ± i u)^(N/2)`, by repeated squaring of the binomial.
pub fn phi(v: C64, sign: PhiSign, params: &ModelParams) -> C64 {
    phi_scaled(v, sign, params).to_c64()
}

pub(crate) fn phi_scaled(v: C64, sign: PhiSign, params: &ModelParams) -> Scaled {
    let u = params.u();
    let base = match sign {
        PhiSign::Plus => v + I * u,
        PhiSign::Minus => v - I * u,
    };
    powi_scaled(base, (params.trotter() / 2) as u32)
}

/// A Bethe root configuration in the sector with `n` roots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetheState {
    roots: Vec<C64>,
    /// `(-1)^(N-n)`.
    sigma: f64,
}

impl BetheState {
    pub fn new(roots: Vec<C64>, params: &ModelParams) -> Result<Self, SpectralError> {
        let n = roots.len();
        let cap = params.trotter();
        if n > cap {
            return Err(SpectralError::TooManyRoots { n, cap });
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if (roots[i] - roots[j]).norm() == 0.0 {
                    return Err(SpectralError::CoincidentRoots(0.0));
                }
            }
        }
        let sigma = if (cap - n) % 2 == 0 { 1.0 } else { -1.0 };
        Ok(Self { roots, sigma })
    }

    pub fn n(&self) -> usize {
        self.roots.len()
    }

    pub fn roots(&self) -> &[C64] {
        &self.roots
    }

    /// `(-1)^(N-n)` as `±1.0`.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Minimal pairwise root distance; 1 when fewer than two roots.
    pub fn root_spacing(&self) -> f64 {
        let n = self.roots.len();
        let mut best = f64::INFINITY;
        for i in 0..n {
            for j in (i + 1)..n {
                best = best.min((self.roots[i] - self.roots[j]).norm());
            }
        }
        if best.is_finite() {
            best
        } else {
            1.0
        }
    }
}

/// `Q(v) = prod_j (v - v_j)`; the empty product is 1.
pub fn q_eval(state: &BetheState, v: C64) -> C64 {
    q_scaled(state, v).to_c64()
}

pub(crate) fn q_scaled(state: &BetheState, v: C64) -> Scaled {
    let mut acc = Scaled::one();
    for &r in state.roots() {
        acc = acc.mul_c(v - r);
    }
    acc
}

/// Vacuum part `psi_a(v)`, including the `(-1)^(N-n)` sign for the two
/// fermionic letters.
pub fn vacuum_part(a: Letter, v: C64, state: &BetheState, params: &ModelParams) -> C64 {
    use PhiSign::{Minus, Plus};
    let s = state.sigma();
    match a {
        Letter::One => {
            let num = phi_scaled(v, Plus, params)
                .mul(phi_scaled(v + I, Minus, params))
                .mul(phi_scaled(v - 0.5 * I, Plus, params));
            num.div(phi_scaled(v - 1.5 * I, Plus, params)).to_c64() * s
        }
        Letter::Zero => phi_scaled(v, Plus, params).mul(phi_scaled(v, Minus, params)).to_c64(),
        Letter::OneBar => {
            let num = phi_scaled(v, Minus, params)
                .mul(phi_scaled(v - I, Plus, params))
                .mul(phi_scaled(v + 0.5 * I, Minus, params));
            num.div(phi_scaled(v + 1.5 * I, Minus, params)).to_c64() * s
        }
    }
}

/// Numerator/denominator split of one box function at argument `w`.
///
/// `num/den` is the box value; `den` collects the `Q` denominators and the
/// vacuum-part `phi` denominator, so fusion sums can be accumulated over a
/// common denominator with no large-float cancellation.
#[derive(Debug, Clone, Copy)]
pub(crate) struct BoxParts {
    pub num: Scaled,
    pub den: Scaled,
}

pub(crate) fn box_parts(a: Letter, w: C64, state: &BetheState, params: &ModelParams) -> BoxParts {
    use PhiSign::{Minus, Plus};
    let s = state.sigma();
    match a {
        Letter::One => BoxParts {
            num: phi_scaled(w, Plus, params)
                .mul(phi_scaled(w + I, Minus, params))
                .mul(phi_scaled(w - 0.5 * I, Plus, params))
                .mul(q_scaled(state, w - 0.5 * I))
                .mul_c(C64::new(s, 0.0)),
            den: phi_scaled(w - 1.5 * I, Plus, params).mul(q_scaled(state, w + 0.5 * I)),
        },
        Letter::Zero => BoxParts {
            num: phi_scaled(w, Plus, params)
                .mul(phi_scaled(w, Minus, params))
                .mul(q_scaled(state, w))
                .mul(q_scaled(state, w + 1.5 * I)),
            den: q_scaled(state, w + 0.5 * I).mul(q_scaled(state, w + I)),
        },
        Letter::OneBar => BoxParts {
            num: phi_scaled(w, Minus, params)
                .mul(phi_scaled(w - I, Plus, params))
                .mul(phi_scaled(w + 0.5 * I, Minus, params))
                .mul(q_scaled(state, w + 2.0 * I))
                .mul_c(C64::new(s, 0.0)),
            den: phi_scaled(w + 1.5 * I, Minus, params).mul(q_scaled(state, w + I)),
        },
    }
}

/// Distance from `w` to the nearest pole of box `a` (shifted `Q` roots and
/// the shifted `phi` root).
fn pole_distance(a: Letter, w: C64, state: &BetheState, params: &ModelParams) -> f64 {
    let u = params.u();
    let mut d = f64::INFINITY;
    let mut q_dist = |shift: C64| {
        for &r in state.roots() {
            d = d.min((w + shift - r).norm());
        }
    };
    match a {
        Letter::One => {
            q_dist(0.5 * I);
            d = d.min((w - I * (1.5 - u)).norm());
        }
        Letter::Zero => {
            q_dist(0.5 * I);
            q_dist(I);
        }
        Letter::OneBar => {
            q_dist(I);
            d = d.min((w + I * (1.5 - u)).norm());
        }
    }
    d
}

/// One box function, with the default pole-proximity threshold.
pub fn box_eval(
    a: Letter,
    v: C64,
    state: &BetheState,
    params: &ModelParams,
) -> Result<C64, SpectralError> {
    box_eval_with_eps(a, v, state, params, DEFAULT_POLE_EPS)
}

/// One box function; errors when `v` is within `eps * root_spacing` of a
/// pole, signalling that the caller must use residue-aware evaluation.
pub fn box_eval_with_eps(
    a: Letter,
    v: C64,
    state: &BetheState,
    params: &ModelParams,
    eps: f64,
) -> Result<C64, SpectralError> {
    let scale = state.root_spacing();
    let dist = pole_distance(a, v, state, params);
    if dist < eps * scale {
        return Err(SpectralError::PoleProximity { letter: a, dist });
    }
    let p = box_parts(a, v, state, params);
    Ok(p.num.ratio(p.den))
}

/// QTM eigenvalue `T_1(v)`: sum of the three boxes, evaluated over a single
/// common denominator so that BAE-induced pole cancellations are exact.
pub fn t1_eval(v: C64, state: &BetheState, params: &ModelParams) -> C64 {
    let (num, den) = t1_parts(v, state, params);
    num.ratio(den)
}

/// Common-denominator form of `T_1`: returns `(num, den)` with
/// `T_1 = num / den` and `den = Q(v+i/2) Q(v+i) phi_+(v-3i/2) phi_-(v+3i/2)`.
pub(crate) fn t1_parts(v: C64, state: &BetheState, params: &ModelParams) -> (Scaled, Scaled) {
    let b1 = box_parts(Letter::One, v, state, params);
    let b0 = box_parts(Letter::Zero, v, state, params);
    let bb = box_parts(Letter::OneBar, v, state, params);
    // den(1) = phi_+(v-3i/2) Q(v+i/2); den(0) = Q(v+i/2) Q(v+i);
    // den(1b) = phi_-(v+3i/2) Q(v+i); common = Q(v+i/2) Q(v+i) phi_+ phi_-
    let q_half = q_scaled(state, v + 0.5 * I);
    let q_one = q_scaled(state, v + I);
    let phi_p = phi_scaled(v - 1.5 * I, PhiSign::Plus, params);
    let phi_m = phi_scaled(v + 1.5 * I, PhiSign::Minus, params);
    let num = b1
        .num
        .mul(q_one)
        .mul(phi_m)
        .add(b0.num.mul(phi_p).mul(phi_m))
        .add(bb.num.mul(q_half).mul(phi_p));
    let den = q_half.mul(q_one).mul(phi_p).mul(phi_m);
    (num, den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn close(a: C64, b: C64, tol: f64) {
        let scale = a.norm().max(b.norm()).max(1e-300);
        assert!(
            (a - b).norm() <= tol * scale,
            "{a} vs {b} (rel {})",
            (a - b).norm() / scale
        );
    }

    #[test]
    fn phi_at_its_root_vanishes() {
        let p = ModelParams::with_u(4, 0.1).unwrap();
        let v = C64::new(0.0, -0.1);
        assert_eq!(phi(v, PhiSign::Plus, &p), C64::new(0.0, 0.0));
    }

    #[test]
    fn phi_direct_substitution() {
        let p = ModelParams::with_u(2, 0.1).unwrap();
        let got = phi(C64::new(0.0, 0.0), PhiSign::Plus, &p);
        close(got, C64::new(0.0, 0.1), 1e-15);
    }

    #[test]
    fn phi_conjugate_pair_is_positive_real() {
        let p = ModelParams::with_u(6, 0.37).unwrap();
        for &v in &[0.2, -1.4, 3.0] {
            let v = C64::new(v, 0.0);
            let prod = phi(v, PhiSign::Plus, &p) * phi(v, PhiSign::Minus, &p);
            let expect = (v.re * v.re + 0.37 * 0.37).powi(3);
            close(prod, C64::new(expect, 0.0), 1e-13);
            assert!(prod.re > 0.0);
        }
    }

    #[test]
    fn q_empty_product_is_one() {
        let p = ModelParams::with_u(4, 0.1).unwrap();
        let s = BetheState::new(vec![], &p).unwrap();
        assert_eq!(q_eval(&s, C64::new(2.3, -1.0)), C64::new(1.0, 0.0));
    }

    #[test]
    fn q_vanishes_at_roots_and_matches_small_case() {
        let p = ModelParams::with_u(4, 0.1).unwrap();
        let s = BetheState::new(vec![C64::new(0.0, 1.0), C64::new(0.0, -1.0)], &p).unwrap();
        assert_eq!(q_eval(&s, C64::new(0.0, 1.0)), C64::new(0.0, 0.0));
        close(q_eval(&s, C64::new(1.0, 0.0)), C64::new(2.0, 0.0), 1e-15);
    }

    #[test]
    fn coincident_roots_rejected() {
        let p = ModelParams::with_u(4, 0.1).unwrap();
        let r = C64::new(0.5, 0.25);
        assert!(BetheState::new(vec![r, r], &p).is_err());
    }

    #[test]
    fn empty_sector_box_reduces_to_vacuum_part() {
        let p = ModelParams::with_u(4, 0.08).unwrap();
        let s = BetheState::new(vec![], &p).unwrap();
        let v = C64::new(0.7, 0.2);
        for a in Letter::ALL {
            let b = box_eval(a, v, &s, &p).unwrap();
            close(b, vacuum_part(a, v, &s, &p), 1e-13);
        }
    }

    // Independent transcription of the box definitions, built from `powc`
    // instead of repeated squaring and with no common-denominator tricks.
    fn box_oracle(a: Letter, v: C64, state: &BetheState, params: &ModelParams) -> C64 {
        let u = params.u();
        let half_n = (params.trotter() / 2) as f64;
        let fp = |x: C64| (x + I * u).powc(C64::new(half_n, 0.0));
        let fm = |x: C64| (x - I * u).powc(C64::new(half_n, 0.0));
        let q = |x: C64| {
            state
                .roots()
                .iter()
                .fold(C64::new(1.0, 0.0), |acc, &r| acc * (x - r))
        };
        let s = state.sigma();
        match a {
            Letter::One => {
                s * fp(v) * fm(v + I) * fp(v - 0.5 * I) / fp(v - 1.5 * I) * q(v - 0.5 * I)
                    / q(v + 0.5 * I)
            }
            Letter::Zero => {
                fp(v) * fm(v) * q(v) * q(v + 1.5 * I) / (q(v + 0.5 * I) * q(v + I))
            }
            Letter::OneBar => {
                s * fm(v) * fp(v - I) * fm(v + 0.5 * I) / fm(v + 1.5 * I) * q(v + 2.0 * I)
                    / q(v + I)
            }
        }
    }

    #[test]
    fn boxes_match_independent_transcription() {
        let p = ModelParams::with_u(6, 0.05).unwrap();
        let s = BetheState::new(
            vec![
                C64::new(0.4, 1.25),
                C64::new(0.4, 0.25),
                C64::new(-0.4, 1.25),
                C64::new(-0.4, 0.25),
                C64::new(0.0, 0.75),
            ],
            &p,
        )
        .unwrap();
        for &(re, im) in &[(0.3, 0.0), (-1.1, 0.4), (2.0, -0.6), (0.05, 1.9)] {
            let v = C64::new(re, im);
            for a in Letter::ALL {
                let got = box_eval(a, v, &s, &p).unwrap();
                close(got, box_oracle(a, v, &s, &p), 1e-12);
            }
            let t = t1_eval(v, &s, &p);
            let want = Letter::ALL
                .iter()
                .map(|&a| box_oracle(a, v, &s, &p))
                .sum::<C64>();
            close(t, want, 1e-12);
        }
    }

    #[test]
    fn box_near_pole_errors() {
        let p = ModelParams::with_u(4, 0.1).unwrap();
        let root = C64::new(0.3, 0.8);
        let s = BetheState::new(vec![root, C64::new(-0.3, 0.8)], &p).unwrap();
        // v + i/2 = root is a pole of box(1)
        let v = root - 0.5 * I + C64::new(1e-12, 0.0);
        assert!(matches!(
            box_eval(Letter::One, v, &s, &p),
            Err(SpectralError::PoleProximity { .. })
        ));
        // but t1_eval still returns a finite value there
        assert!(t1_eval(v, &s, &p).is_finite());
    }

    // Conjugating v swaps phi_+ with phi_- and so maps box(1) into box(1b)
    // with reflected Q shifts; the box sum is conjugation-symmetric in the
    // vacuum sector, where the Q ratios drop out.
    #[test]
    fn t1_conjugation_symmetry_vacuum_sector() {
        let p = ModelParams::with_u(4, 0.12).unwrap();
        let s = BetheState::new(vec![], &p).unwrap();
        for &(re, im) in &[(0.25, 0.15), (-1.0, 0.6), (1.7, -0.8)] {
            let v = C64::new(re, im);
            let a = t1_eval(v.conj(), &s, &p);
            let b = t1_eval(v, &s, &p).conj();
            close(a, b, 1e-12);
        }
    }

    #[test]
    fn sigma_sign_convention() {
        let p = ModelParams::with_u(4, 0.1).unwrap();
        let full = BetheState::new(
            vec![
                C64::new(0.1, 0.0),
                C64::new(0.9, 0.0),
                C64::new(-0.1, 0.3),
                C64::new(0.4, 0.6),
            ],
            &p,
        )
        .unwrap();
        assert_relative_eq!(full.sigma(), 1.0);
        let odd = BetheState::new(vec![C64::new(0.1, 0.0)], &p).unwrap();
        assert_relative_eq!(odd.sigma(), -1.0);
    }
}
