//! Fusion hierarchy of the QTM: `T_m` as tableau sums over the box
//! functions, the scalar factors `T_m^(0)` and `N_m`, the `Y`-functions,
//! and verification of the T- and Y-systems.

pub mod zeros;

use crate::params::ModelParams;
use crate::spectral::{box_parts, phi_scaled, q_scaled, BetheState, Letter, PhiSign};
use crate::util::Scaled;
use crate::C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use zeros::{classify_zeros, find_zeros, Rect, Zero, ZeroClass, ZerosDocument};

const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Error)]
pub enum FusionError {
    #[error("fusion level must be >= 1, got {0}")]
    BadLevel(usize),
    #[error("pole of T_m^(0) at v = {0}")]
    T0Pole(C64),
    #[error("pole encountered evaluating Y_{m} at v = {v}")]
    YPole { m: usize, v: C64 },
    #[error("winding-number inconsistency over {0:?} (non-integer {1:.3})")]
    WindingInconsistent(zeros::Rect, f64),
    #[error("zero search exceeded subdivision budget")]
    SubdivisionBudget,
}

/// Fusion level `m >= 0` and eigenvalue rank `k` in `{1, 2}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FusionIndex {
    pub m: usize,
    pub k: usize,
}

/// A one-column tableau: weakly increasing letters in the order
/// `1 ≺ 0 ≺ 1̄`, repetitions allowed for all three symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tableau {
    pub entries: Vec<Letter>,
}

/// All admissible `m`-box tableaux in lexicographic order;
/// there are `(m+1)(m+2)/2` of them.
pub fn enumerate_tableaux(m: usize) -> Result<Vec<Tableau>, FusionError> {
    if m < 1 {
        return Err(FusionError::BadLevel(m));
    }
    let mut out = Vec::with_capacity((m + 1) * (m + 2) / 2);
    let mut entries = Vec::with_capacity(m);
    fn rec(m: usize, min: Letter, entries: &mut Vec<Letter>, out: &mut Vec<Tableau>) {
        if entries.len() == m {
            out.push(Tableau { entries: entries.clone() });
            return;
        }
        for &l in Letter::ALL.iter().filter(|&&l| l >= min) {
            entries.push(l);
            rec(m, l, entries, out);
            entries.pop();
        }
    }
    rec(m, Letter::One, &mut entries, &mut out);
    Ok(out)
}

/// `T_0^(1)(v)` for `m = 0`; the four-over-two `phi` ratio `T_m^(0)(v)` for
/// `m >= 1`.
pub fn t0_eval(m: usize, v: C64, params: &ModelParams) -> Result<C64, FusionError> {
    Ok(t0_scaled(m, v, params)?.to_c64())
}

pub(crate) fn t0_scaled(m: usize, v: C64, params: &ModelParams) -> Result<Scaled, FusionError> {
    use PhiSign::{Minus, Plus};
    if m == 0 {
        return Ok(phi_scaled(v + 0.5 * I, Minus, params).mul(phi_scaled(v - 0.5 * I, Plus, params)));
    }
    let mf = m as f64;
    let u = params.u();
    // denominator roots: v = ±(iu - (m+1)i/2)
    let pole_dist = (v - I * (u - 0.5 * (mf + 1.0)))
        .norm()
        .min((v + I * (u - 0.5 * (mf + 1.0))).norm());
    if pole_dist < 1e-9 * (1.0 + v.norm()) {
        return Err(FusionError::T0Pole(v));
    }
    let den = phi_scaled(v + 0.5 * (mf + 1.0) * I, Minus, params)
        .mul(phi_scaled(v - 0.5 * (mf + 1.0) * I, Plus, params));
    let num = phi_scaled(v + 0.5 * (mf + 2.0) * I, Minus, params)
        .mul(phi_scaled(v - 0.5 * (mf + 2.0) * I, Plus, params))
        .mul(phi_scaled(v - 0.5 * mf * I, Minus, params))
        .mul(phi_scaled(v + 0.5 * mf * I, Plus, params));
    Ok(num.div(den))
}

/// Common-denominator pieces of the tableau sum for `T_m`:
/// `T_m = num / (den_reduced * c_outer)` and the cleared polynomial of
/// degree `2N` is `num / den_reduced`.
pub(crate) struct DvfParts {
    pub num: Scaled,
    pub den_reduced: Scaled,
    pub c_outer: Scaled,
}

pub(crate) fn dvf_parts(m: usize, v: C64, state: &BetheState, params: &ModelParams) -> DvfParts {
    use PhiSign::{Minus, Plus};
    assert!(m >= 1);
    // per-position numerators over the common position denominator
    // D_k = Q(w+i/2) Q(w+i) phi_+(w-3i/2) phi_-(w+3i/2)
    let mut g = vec![[Scaled::zero(); 3]; m];
    let mut den_reduced = Scaled::one();
    let mut c_outer = Scaled::one();
    for (k0, gk) in g.iter_mut().enumerate() {
        let w = v - 0.5 * I * (m as f64 - 1.0 - 2.0 * k0 as f64);
        let b1 = box_parts(Letter::One, w, state, params);
        let b0 = box_parts(Letter::Zero, w, state, params);
        let bb = box_parts(Letter::OneBar, w, state, params);
        let q_half = q_scaled(state, w + 0.5 * I);
        let q_one = q_scaled(state, w + I);
        let phi_p = phi_scaled(w - 1.5 * I, Plus, params);
        let phi_m = phi_scaled(w + 1.5 * I, Minus, params);
        gk[0] = b1.num.mul(q_one).mul(phi_m);
        gk[1] = b0.num.mul(phi_p).mul(phi_m);
        gk[2] = bb.num.mul(q_half).mul(phi_p);
        // the outermost vacuum factors stay uncancelled: phi_+ of the top
        // position and phi_- of the bottom one form the true denominator
        let mut d = q_half.mul(q_one);
        if k0 == 0 {
            c_outer = c_outer.mul(phi_p);
        } else {
            d = d.mul(phi_p);
        }
        if k0 == m - 1 {
            c_outer = c_outer.mul(phi_m);
        } else {
            d = d.mul(phi_m);
        }
        den_reduced = den_reduced.mul(d);
    }
    // normalisation N_m(v)
    for j0 in 0..m.saturating_sub(1) {
        let off = 0.5 * (m as f64 - 1.0 - 2.0 * j0 as f64);
        den_reduced = den_reduced
            .mul(phi_scaled(v + off * I, Minus, params))
            .mul(phi_scaled(v - off * I, Plus, params));
    }
    // tableau sum: all weakly increasing letter sequences
    let mut num = Scaled::zero();
    let mut stack: Vec<(usize, usize, Scaled)> = vec![(0, 0, Scaled::one()); 0];
    for first in 0..3 {
        stack.push((0, first, g[0][first]));
    }
    while let Some((k0, letter, acc)) = stack.pop() {
        if k0 == m - 1 {
            num = num.add(acc);
            continue;
        }
        for next in letter..3 {
            stack.push((k0 + 1, next, acc.mul(g[k0 + 1][next])));
        }
    }
    DvfParts { num, den_reduced, c_outer }
}

/// Fusion eigenvalue `T_m(v)` on a Bethe state (the physical, rational
/// value; `m = 0` is the closed-form `T_0`).
pub fn dvf_eval(
    index: FusionIndex,
    v: C64,
    state: &BetheState,
    params: &ModelParams,
) -> Result<C64, FusionError> {
    Ok(dvf_scaled(index.m, v, state, params)?.to_c64())
}

pub(crate) fn dvf_scaled(
    m: usize,
    v: C64,
    state: &BetheState,
    params: &ModelParams,
) -> Result<Scaled, FusionError> {
    if m == 0 {
        return t0_scaled(0, v, params);
    }
    let parts = dvf_parts(m, v, state, params);
    let den = parts.den_reduced.mul(parts.c_outer);
    if den.is_zero() {
        return Err(FusionError::YPole { m, v });
    }
    Ok(parts.num.div(den))
}

/// The cleared form `P_m(v) = T_m(v) * phi_+(v - (m+2)i/2) phi_-(v + (m+2)i/2)`:
/// a polynomial of degree `2N` whose zeros are the zeros of `T_m`.
pub fn dvf_cleared(m: usize, v: C64, state: &BetheState, params: &ModelParams) -> Scaled {
    assert!(m >= 1);
    let parts = dvf_parts(m, v, state, params);
    parts.num.div(parts.den_reduced)
}

/// Asymptotic leading coefficient of the cleared `P_m / v^{2N}`:
/// the signed tableau count `sum over tableaux of sigma^(#1 + #1̄)`.
pub fn leading_coefficient(m: usize, sigma: f64) -> f64 {
    if sigma > 0.0 {
        ((m + 1) * (m + 2)) as f64 / 2.0
    } else {
        // alternating sum: tableaux with l zeros contribute (-1)^(m-l)(m-l+1)
        let m = m as i64;
        (((-1f64).powi(m as i32)) * (2 * m + 3) as f64 + 1.0) / 4.0
    }
}

/// Plateau of `Y_m` for the largest-eigenvalue sector: `m(m+3)/2`.
pub fn y_plateau_k1(m: usize) -> f64 {
    (m * (m + 3)) as f64 / 2.0
}

/// Plateau of `Y_m` for the second-eigenvalue sector:
/// `((-1)^m (2m+3) - 3)/4`.
pub fn y_plateau_k2(m: usize) -> f64 {
    ((-1f64).powi(m as i32) * (2 * m + 3) as f64 - 3.0) / 4.0
}

/// `Y_m(v) = T_{m-1}(v) T_{m+1}(v) / (T_m^(0)(v) T_m(v))`; `m = 0` gives 0.
pub fn y_eval(
    index: FusionIndex,
    v: C64,
    state: &BetheState,
    params: &ModelParams,
) -> Result<C64, FusionError> {
    if index.m == 0 {
        return Ok(C64::new(0.0, 0.0));
    }
    let m = index.m;
    let num = dvf_scaled(m - 1, v, state, params)?.mul(dvf_scaled(m + 1, v, state, params)?);
    let den = t0_scaled(m, v, params)?.mul(dvf_scaled(m, v, state, params)?);
    if den.is_zero() {
        return Err(FusionError::YPole { m, v });
    }
    Ok(num.div(den).to_c64())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelationKind {
    TSystem,
    YSystem,
}

/// Relative residual `|LHS - RHS| / (|LHS| + |RHS|)` of the requested
/// functional relation at `v`.
pub fn verify_functional_relation(
    kind: RelationKind,
    m: usize,
    v: C64,
    state: &BetheState,
    params: &ModelParams,
) -> Result<f64, FusionError> {
    if m < 1 {
        return Err(FusionError::BadLevel(m));
    }
    let h = 0.5 * I;
    match kind {
        RelationKind::TSystem => {
            let lhs = dvf_scaled(m, v - h, state, params)?.mul(dvf_scaled(m, v + h, state, params)?);
            let a = dvf_scaled(m - 1, v, state, params)?.mul(dvf_scaled(m + 1, v, state, params)?);
            let b = t0_scaled(m, v, params)?.mul(dvf_scaled(m, v, state, params)?);
            let rhs = a.add(b);
            Ok(relative_residual(lhs, rhs))
        }
        RelationKind::YSystem => {
            let y = |mm: usize, vv: C64| -> Result<C64, FusionError> {
                y_eval(FusionIndex { m: mm, k: 0 }, vv, state, params)
            };
            let lhs = y(m, v - h)? * y(m, v + h)?;
            let ym = y(m, v)?;
            let rhs = (1.0 + y(m - 1, v)?) * (1.0 + y(m + 1, v)?) / (1.0 + 1.0 / ym);
            let denom = lhs.norm() + rhs.norm();
            Ok((lhs - rhs).norm() / denom.max(f64::MIN_POSITIVE))
        }
    }
}

fn relative_residual(lhs: Scaled, rhs: Scaled) -> f64 {
    let diff = lhs.add(rhs.neg());
    let scale = lhs.log2_abs().max(rhs.log2_abs());
    if !scale.is_finite() {
        return 0.0;
    }
    // |lhs - rhs| / (|lhs| + |rhs|) computed through log2 magnitudes
    let d = diff.log2_abs();
    if !d.is_finite() {
        return 0.0;
    }
    f64::exp2(d - scale) / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bae::solve_k;
    use approx::assert_relative_eq;

    #[test]
    fn tableau_counts_and_order() {
        let t1 = enumerate_tableaux(1).unwrap();
        assert_eq!(t1.len(), 3);
        assert_eq!(t1[0].entries, vec![Letter::One]);
        assert_eq!(t1[1].entries, vec![Letter::Zero]);
        assert_eq!(t1[2].entries, vec![Letter::OneBar]);
        assert_eq!(enumerate_tableaux(2).unwrap().len(), 6);
        assert_eq!(enumerate_tableaux(3).unwrap().len(), 10);
        for m in 1..=12 {
            assert_eq!(
                enumerate_tableaux(m).unwrap().len(),
                (m + 1) * (m + 2) / 2,
                "count at m={m}"
            );
        }
        assert!(enumerate_tableaux(0).is_err());
    }

    // brute-force oracle: generate all 3^m sequences and keep the weakly
    // increasing ones
    #[test]
    fn tableau_enumeration_matches_filter_oracle() {
        for m in 1..=6 {
            let mut brute: Vec<Vec<Letter>> = Vec::new();
            for code in 0..3usize.pow(m as u32) {
                let mut c = code;
                let seq: Vec<Letter> = (0..m)
                    .map(|_| {
                        let l = Letter::ALL[c % 3];
                        c /= 3;
                        l
                    })
                    .collect();
                if seq.windows(2).all(|w| w[0] <= w[1]) {
                    brute.push(seq);
                }
            }
            brute.sort();
            let got: Vec<Vec<Letter>> = enumerate_tableaux(m)
                .unwrap()
                .into_iter()
                .map(|t| t.entries)
                .collect();
            assert_eq!(got, brute);
        }
    }

    #[test]
    fn t0_direct_value() {
        // phi_-(i/2) phi_+(-i/2) at N = 2, u = 0.1:
        // (i/2 - 0.1i)(-i/2 + 0.1i) = (0.4i)(-0.4i) = 0.16
        let p = ModelParams::with_u(2, 0.1).unwrap();
        let t = t0_eval(0, C64::new(0.0, 0.0), &p).unwrap();
        assert_relative_eq!(t.re, 0.16, epsilon = 1e-14);
        assert_relative_eq!(t.im, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn t0_pole_detected() {
        let p = ModelParams::with_u(4, 0.1).unwrap();
        let m = 2;
        // phi_+(v - (m+1)i/2) vanishes at v = -iu + (m+1)i/2
        let v = C64::new(0.0, -0.1 + 1.5);
        assert!(matches!(t0_eval(m, v, &p), Err(FusionError::T0Pole(_))));
    }

    #[test]
    fn t0_factor_by_factor_oracle() {
        let p = ModelParams::with_u(4, 0.05).unwrap();
        let u = 0.05;
        let v = C64::new(0.7, 0.0);
        let m = 2.0_f64;
        let fp = |x: C64| (x + I * u).powc(C64::new(2.0, 0.0));
        let fm = |x: C64| (x - I * u).powc(C64::new(2.0, 0.0));
        let want = fm(v + 0.5 * (m + 2.0) * I) * fp(v - 0.5 * (m + 2.0) * I)
            * fm(v - 0.5 * m * I)
            * fp(v + 0.5 * m * I)
            / (fm(v + 0.5 * (m + 1.0) * I) * fp(v - 0.5 * (m + 1.0) * I));
        let got = t0_eval(2, v, &p).unwrap();
        assert!((got - want).norm() <= 1e-14 * want.norm());
    }

    #[test]
    fn dvf_m1_reduces_to_t1() {
        let p = ModelParams::with_u(4, 0.05).unwrap();
        let rep = solve_k(1, &p, 1e-12, 200).unwrap();
        for &(re, im) in &[(0.0, 0.0), (0.4, 0.1), (-1.3, -0.2)] {
            let v = C64::new(re, im);
            let a = dvf_eval(FusionIndex { m: 1, k: 1 }, v, &rep.state, &p).unwrap();
            let b = crate::spectral::t1_eval(v, &rep.state, &p);
            assert!((a - b).norm() <= 1e-12 * b.norm(), "{a} vs {b}");
        }
    }

    #[test]
    fn y_at_level_zero_is_zero() {
        let p = ModelParams::with_u(4, 0.05).unwrap();
        let rep = solve_k(1, &p, 1e-12, 200).unwrap();
        let y = y_eval(FusionIndex { m: 0, k: 1 }, C64::new(0.3, 0.0), &rep.state, &p).unwrap();
        assert_eq!(y, C64::new(0.0, 0.0));
    }

    #[test]
    fn constant_y_system_fixed_point() {
        // the plateau values satisfy the constant Y-system exactly
        for m in 1..=10 {
            let y = |mm: i64| -> f64 {
                if mm <= 0 {
                    0.0
                } else {
                    y_plateau_k1(mm as usize)
                }
            };
            let m = m as i64;
            let lhs = y(m) * y(m);
            let rhs = (1.0 + y(m - 1)) * (1.0 + y(m + 1)) / (1.0 + 1.0 / y(m));
            assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
        }
        // m = 1 arithmetic identity: 2^2 = (1+0)(1+5)/(1+1/2)
        assert_relative_eq!(
            y_plateau_k1(1) * y_plateau_k1(1),
            (1.0 + 0.0) * (1.0 + y_plateau_k1(2)) / (1.0 + 1.0 / y_plateau_k1(1)),
            max_relative = 1e-14
        );
    }

    #[test]
    fn k2_plateaus_satisfy_y_system_too() {
        for m in 1..=8 {
            let y = |mm: i64| -> f64 {
                if mm <= 0 {
                    0.0
                } else {
                    y_plateau_k2(mm as usize)
                }
            };
            let m = m as i64;
            let lhs = y(m) * y(m);
            let rhs = (1.0 + y(m - 1)) * (1.0 + y(m + 1)) / (1.0 + 1.0 / y(m));
            assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
        }
        assert_relative_eq!(y_plateau_k2(1), -2.0);
        assert_relative_eq!(y_plateau_k2(2), 1.0);
        assert_relative_eq!(y_plateau_k2(3), -3.0);
    }

    #[test]
    fn plateau_consistency_with_leading_coefficients() {
        // the Y plateau equals A_{m-1} A_{m+1} / A_m in each sector
        for m in 1..=6 {
            let a = |mm: usize, s: f64| leading_coefficient(mm, s);
            let y1 = a(m - 1, 1.0) * a(m + 1, 1.0) / a(m, 1.0);
            assert_relative_eq!(y1, y_plateau_k1(m), max_relative = 1e-12);
            let y2 = a(m - 1, -1.0) * a(m + 1, -1.0) / a(m, -1.0);
            assert_relative_eq!(y2, y_plateau_k2(m), max_relative = 1e-12);
        }
        assert_relative_eq!(leading_coefficient(0, 1.0), 1.0);
        assert_relative_eq!(leading_coefficient(0, -1.0), 1.0);
    }
}
