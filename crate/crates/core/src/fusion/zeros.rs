//! Zero location for the cleared fusion eigenvalues `P_m = T_m * C_m` by
//! argument-principle counting on nested rectangles, with Newton polish.

use super::{dvf_cleared, FusionError, FusionIndex};
use crate::params::ModelParams;
use crate::spectral::BetheState;
use crate::util::Scaled;
use crate::C64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Rect {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Rect {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Self {
        Self { re_min, re_max, im_min, im_max }
    }

    fn corners(&self) -> [C64; 4] {
        [
            C64::new(self.re_min, self.im_min),
            C64::new(self.re_max, self.im_min),
            C64::new(self.re_max, self.im_max),
            C64::new(self.re_min, self.im_max),
        ]
    }

    fn max_side(&self) -> f64 {
        (self.re_max - self.re_min).max(self.im_max - self.im_min)
    }

    fn center(&self) -> C64 {
        C64::new(
            0.5 * (self.re_min + self.re_max),
            0.5 * (self.im_min + self.im_max),
        )
    }

    fn contains(&self, z: C64, margin: f64) -> bool {
        z.re >= self.re_min - margin
            && z.re <= self.re_max + margin
            && z.im >= self.im_min - margin
            && z.im <= self.im_max + margin
    }
}

/// A located zero with its winding multiplicity.
#[derive(Debug, Clone, Copy)]
pub struct Zero {
    pub position: C64,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZeroClass {
    /// On the real axis (the `±x_m` pair of the second eigenvalue).
    RealAxis,
    /// On the imaginary axis (near `±(2m+3)/4` for the second eigenvalue).
    ImagAxis,
    /// Near the curve `Im v = ±(m+1)/2`.
    InnerCurve,
    /// Near the curve `Im v = ±(m/2+1)`.
    OuterCurve,
}

fn wrap_angle(d: f64) -> f64 {
    let mut d = d;
    while d > std::f64::consts::PI {
        d -= 2.0 * std::f64::consts::PI;
    }
    while d < -std::f64::consts::PI {
        d += 2.0 * std::f64::consts::PI;
    }
    d
}

struct Walker<'a> {
    f: &'a dyn Fn(C64) -> Scaled,
    evals: usize,
}

#[derive(Clone, Copy)]
struct Probe {
    arg: f64,
    log2: f64,
}

impl<'a> Walker<'a> {
    fn probe(&mut self, z: C64) -> Probe {
        let v = (self.f)(z);
        self.evals += 1;
        Probe { arg: v.arg(), log2: v.log2_abs() }
    }

    /// Trust radius at `z`: the Newton step `|f / f'|`, a scale below which
    /// the phase of `f` cannot complete a hidden full turn. A row of nearby
    /// zeros makes uniformly sampled phases alias consistently (a strobed
    /// rotation), so neither endpoint agreement nor magnitude checks are
    /// sufficient on their own.
    fn trust_radius(&mut self, z: C64, fz: &Probe) -> f64 {
        let h = 1e-5;
        let fp = (self.f)(z + C64::new(h, 0.0));
        let fm = (self.f)(z - C64::new(h, 0.0));
        self.evals += 2;
        let df_log2 = fp.add(fm.neg()).log2_abs() - (2.0 * h).log2();
        f64::exp2(fz.log2 - df_log2)
    }

    /// Total phase change along the segment, bisecting until each step is
    /// short compared to the local trust radius and the endpoint difference
    /// is reproduced by its two halves.
    fn segment_delta(&mut self, a: C64, fa: Probe, b: C64, fb: Probe, depth: usize) -> f64 {
        let mid = 0.5 * (a + b);
        let fm = self.probe(mid);
        let direct = wrap_angle(fb.arg - fa.arg);
        let halves = wrap_angle(fm.arg - fa.arg) + wrap_angle(fb.arg - fm.arg);
        if depth == 0 {
            return halves;
        }
        let len = (b - a).norm();
        if (halves - direct).abs() < 1e-9
            && direct.abs() < std::f64::consts::FRAC_PI_2
            && len < 0.4
            && len < self.trust_radius(mid, &fm)
        {
            return halves;
        }
        self.segment_delta(a, fa, mid, fm, depth - 1)
            + self.segment_delta(mid, fm, b, fb, depth - 1)
    }

    fn winding(&mut self, rect: &Rect) -> f64 {
        let corners = rect.corners();
        let mut total = 0.0;
        for i in 0..4 {
            let a = corners[i];
            let b = corners[(i + 1) % 4];
            let fa = self.probe(a);
            let fb = self.probe(b);
            total += self.segment_delta(a, fa, b, fb, 44);
        }
        total / (2.0 * std::f64::consts::PI)
    }
}

fn integer_winding(f: &dyn Fn(C64) -> Scaled, rect: &Rect, resolution: f64) -> Result<i64, FusionError> {
    let mut rect = *rect;
    for attempt in 0..3 {
        let mut w = Walker { f, evals: 0 };
        let raw = w.winding(&rect);
        let rounded = raw.round();
        if (raw - rounded).abs() < 0.25 && rounded >= -0.1 {
            return Ok(rounded as i64);
        }
        if attempt == 2 {
            return Err(FusionError::WindingInconsistent(rect, raw));
        }
        // a zero probably sits on the boundary; nudge deterministically
        let eps = resolution * 0.137 * (attempt + 1) as f64;
        rect = Rect::new(rect.re_min - eps, rect.re_max + eps, rect.im_min - eps * 1.3, rect.im_max + eps * 0.7);
    }
    unreachable!()
}

fn newton_polish(f: &dyn Fn(C64) -> Scaled, start: C64) -> C64 {
    let mut z = start;
    for _ in 0..40 {
        let h = 1e-6 * (1.0 + z.norm());
        let fp = f(z + C64::new(h, 0.0));
        let fm = f(z - C64::new(h, 0.0));
        let df = fp.add(fm.neg());
        let val = f(z);
        if df.is_zero() {
            break;
        }
        let step = val.div(df).to_c64() * (2.0 * h);
        if !step.is_finite() {
            break;
        }
        z -= step;
        if step.norm() < 1e-13 * (1.0 + z.norm()) {
            break;
        }
    }
    z
}

/// Locate zeros of the cleared fusion eigenvalue `P_m` inside `rect` by
/// recursive winding-number subdivision down to `resolution`, followed by
/// Newton polish. The boundary is auto-nudged when it grazes a zero.
pub fn find_zeros(
    index: FusionIndex,
    state: &BetheState,
    params: &ModelParams,
    rect: Rect,
    resolution: f64,
) -> Result<Vec<Zero>, FusionError> {
    let m = index.m;
    if m < 1 {
        return Err(FusionError::BadLevel(m));
    }
    let f = move |z: C64| dvf_cleared(m, z, state, params);
    let mut out: Vec<Zero> = Vec::new();
    let mut budget = 200_000usize;
    subdivide(&f, rect, resolution, &mut out, &mut budget)?;
    // dedupe only genuine double-reports across shared cell boundaries;
    // polished positions of the same zero agree to ~1e-12, while distinct
    // zeros of the fusion eigenvalues stay much further apart
    let merge_radius = 1e-6_f64.min(0.1 * resolution);
    let mut unique: Vec<Zero> = Vec::new();
    for z in out {
        if let Some(existing) = unique
            .iter_mut()
            .find(|u| (u.position - z.position).norm() < merge_radius)
        {
            existing.multiplicity = existing.multiplicity.max(z.multiplicity);
        } else {
            unique.push(z);
        }
    }
    unique.sort_by(|a, b| {
        (a.position.re, a.position.im)
            .partial_cmp(&(b.position.re, b.position.im))
            .unwrap()
    });
    Ok(unique)
}

fn subdivide(
    f: &dyn Fn(C64) -> Scaled,
    rect: Rect,
    resolution: f64,
    out: &mut Vec<Zero>,
    budget: &mut usize,
) -> Result<(), FusionError> {
    if *budget == 0 {
        return Err(FusionError::SubdivisionBudget);
    }
    *budget -= 1;
    let w = integer_winding(f, &rect, resolution)?;
    if w == 0 {
        return Ok(());
    }
    if w == 1 || rect.max_side() < resolution {
        let z = newton_polish(f, rect.center());
        // accept only a polished zero that stayed in this cell (up to
        // boundary roundoff); a hop into a neighbouring basin would be
        // deduplicated away and silently lose this cell's zero
        if rect.contains(z, 1e-9 * (1.0 + z.norm())) {
            out.push(Zero { position: z, multiplicity: w.max(1) as usize });
            return Ok(());
        }
        if rect.max_side() < 1e-3 * resolution {
            // unpolishable cluster; report the cell center with its count
            out.push(Zero { position: rect.center(), multiplicity: w.max(1) as usize });
            return Ok(());
        }
        // Newton escaped the cell: shrink further before polishing
    }
    // split the longest side slightly off-centre to avoid symmetric zeros
    let (a, b) = if rect.re_max - rect.re_min >= rect.im_max - rect.im_min {
        let mid = rect.re_min + 0.503 * (rect.re_max - rect.re_min);
        (
            Rect::new(rect.re_min, mid, rect.im_min, rect.im_max),
            Rect::new(mid, rect.re_max, rect.im_min, rect.im_max),
        )
    } else {
        let mid = rect.im_min + 0.503 * (rect.im_max - rect.im_min);
        (
            Rect::new(rect.re_min, rect.re_max, rect.im_min, mid),
            Rect::new(rect.re_min, rect.re_max, mid, rect.im_max),
        )
    };
    subdivide(f, a, resolution, out, budget)?;
    subdivide(f, b, resolution, out, budget)
}

/// Zeros of `P_m` on the positive real axis, located by a sign-change scan
/// plus bisection. Used to seed the excited-state TBA.
pub fn real_axis_zeros(
    m: usize,
    state: &BetheState,
    params: &ModelParams,
    window: f64,
) -> Vec<f64> {
    let f = |x: f64| {
        let s = dvf_cleared(m, C64::new(x, 0.0), state, params);
        let z = s.to_c64();
        // P is real on the axis for conjugation-symmetric zero sets; follow
        // the real part for the sign scan
        (z.re, z.norm())
    };
    let steps = (window / 0.01) as usize;
    let mut zeros = Vec::new();
    let mut prev = f(1e-4);
    for i in 1..=steps {
        let x = 1e-4 + window * i as f64 / steps as f64;
        let cur = f(x);
        if prev.0.signum() != cur.0.signum() {
            // bisect
            let (mut lo, mut hi) = (1e-4 + window * (i - 1) as f64 / steps as f64, x);
            let mut flo = prev.0;
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                let fm = f(mid).0;
                if fm.signum() == flo.signum() {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            zeros.push(0.5 * (lo + hi));
        }
        prev = cur;
    }
    zeros
}

/// Classify a zero against the expected pattern at fusion level `m`.
/// The curve families sit near `Im v = ±(m+1)/2` and `±(m/2+1)` (with real
/// spreads that shrink with `u`, so closeness to the imaginary axis alone
/// does not identify the special pair); the second-eigenvalue extras are
/// the two real zeros and the axis pair near `±(2m+3)/4`, exactly halfway
/// between the curves.
pub fn classify_zeros(m: usize, zeros: &[Zero], axis_tol: f64) -> Vec<(Zero, ZeroClass)> {
    let inner = (m as f64 + 1.0) / 2.0;
    let outer = m as f64 / 2.0 + 1.0;
    let special = (2.0 * m as f64 + 3.0) / 4.0;
    zeros
        .iter()
        .map(|&z| {
            let im = z.position.im.abs();
            let class = if im < axis_tol {
                ZeroClass::RealAxis
            } else if z.position.re.abs() < axis_tol
                && (im - special).abs() < (im - inner).abs()
                && (im - special).abs() < (im - outer).abs()
            {
                ZeroClass::ImagAxis
            } else if (im - inner).abs() <= (im - outer).abs() {
                ZeroClass::InnerCurve
            } else {
                ZeroClass::OuterCurve
            };
            (z, class)
        })
        .collect()
}

/// Wire format for zero sets: `{m, k, N, u, zeros: [[re, im], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZerosDocument {
    pub m: usize,
    pub k: usize,
    #[serde(rename = "N")]
    pub trotter: usize,
    pub u: f64,
    pub zeros: Vec<[f64; 2]>,
}

impl ZerosDocument {
    pub fn new(index: FusionIndex, params: &ModelParams, zeros: &[Zero]) -> Self {
        Self {
            m: index.m,
            k: index.k,
            trotter: params.trotter(),
            u: params.u(),
            zeros: zeros.iter().map(|z| [z.position.re, z.position.im]).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::Scaled;

    #[test]
    fn winding_counts_polynomial_zeros() {
        // (z - 1)(z + 1)(z - i/2): three zeros, two in the right window
        let f = |z: C64| {
            Scaled::from_c64((z - 1.0) * (z + 1.0) * (z - C64::new(0.0, 0.5)))
        };
        let w = integer_winding(&f, &Rect::new(-1.6, 1.7, -0.9, 1.1), 0.01).unwrap();
        assert_eq!(w, 3);
        let w2 = integer_winding(&f, &Rect::new(-0.4, 1.7, -0.3, 1.1), 0.01).unwrap();
        assert_eq!(w2, 2);
    }

    #[test]
    fn subdivision_isolates_and_polishes() {
        let f = |z: C64| {
            Scaled::from_c64((z - C64::new(0.3, 0.4)) * (z + C64::new(0.3, 0.4)) * (z - 2.0))
        };
        let mut out = Vec::new();
        let mut budget = 100_000;
        subdivide(&f, Rect::new(-2.55, 2.61, -1.52, 1.57), 0.05, &mut out, &mut budget).unwrap();
        assert_eq!(out.len(), 3);
        let mut found: Vec<C64> = out.iter().map(|z| z.position).collect();
        found.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        assert!((found[0] - C64::new(-0.3, -0.4)).norm() < 1e-9);
        assert!((found[1] - C64::new(0.3, 0.4)).norm() < 1e-9);
        assert!((found[2] - C64::new(2.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn double_zero_reported_with_multiplicity() {
        let f = |z: C64| Scaled::from_c64((z - 0.5) * (z - 0.5));
        let mut out = Vec::new();
        let mut budget = 100_000;
        subdivide(&f, Rect::new(-0.1, 1.13, -0.52, 0.57), 1e-4, &mut out, &mut budget).unwrap();
        let total: usize = out.iter().map(|z| z.multiplicity).sum();
        assert_eq!(total, 2);
    }
}


