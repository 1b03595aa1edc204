//! Small numeric helpers: exponent-tracked complex products and polynomial
//! interpolation from circle samples.

use crate::C64;

/// Complex number stored as `m * 2^e` with `|m|` kept near 1.
///
/// Products over many box functions reach magnitudes like `|v|^(2 N m)`,
/// which overflows `f64` well before the final ratio is formed. All fusion
/// sums are accumulated in this representation and collapsed at the end.
#[derive(Debug, Clone, Copy)]
pub struct Scaled {
    m: C64,
    e: i64,
}

impl Scaled {
    pub fn one() -> Self {
        Self { m: C64::new(1.0, 0.0), e: 0 }
    }

    pub fn zero() -> Self {
        Self { m: C64::new(0.0, 0.0), e: 0 }
    }

    pub fn from_c64(z: C64) -> Self {
        Self { m: z, e: 0 }.renorm()
    }

    fn renorm(mut self) -> Self {
        let n2 = self.m.norm_sqr();
        if n2 == 0.0 || !n2.is_finite() {
            self.e = 0;
            return self;
        }
        // shift so that |m|^2 lands in [2^-64, 2^64)
        let k = (n2.log2() / 2.0).round() as i64;
        if k.abs() >= 32 {
            let s = (-(k as i32)).max(-1000).min(1000);
            self.m = C64::new(libm_scale(self.m.re, s), libm_scale(self.m.im, s));
            self.e += k;
        }
        self
    }

    pub fn mul_c(self, z: C64) -> Self {
        Self { m: self.m * z, e: self.e }.renorm()
    }

    pub fn mul(self, o: Self) -> Self {
        Self { m: self.m * o.m, e: self.e + o.e }.renorm()
    }

    pub fn div(self, o: Self) -> Self {
        Self { m: self.m / o.m, e: self.e - o.e }.renorm()
    }

    pub fn neg(self) -> Self {
        Self { m: -self.m, e: self.e }
    }

    pub fn add(self, o: Self) -> Self {
        // align to the larger exponent; the smaller summand may flush to zero
        let (hi, lo) = if self.e >= o.e { (self, o) } else { (o, self) };
        let shift = lo.e - hi.e; // <= 0
        let lo_m = if shift < -2000 {
            C64::new(0.0, 0.0)
        } else {
            C64::new(libm_scale(lo.m.re, shift as i32), libm_scale(lo.m.im, shift as i32))
        };
        Self { m: hi.m + lo_m, e: hi.e }.renorm()
    }

    pub fn is_zero(&self) -> bool {
        self.m.norm_sqr() == 0.0
    }

    /// Collapse to a plain complex number (may overflow to inf for huge e).
    pub fn to_c64(self) -> C64 {
        let s = self.e.max(-4000).min(4000) as i32;
        C64::new(libm_scale(self.m.re, s), libm_scale(self.m.im, s))
    }

    /// `log2 |self|`.
    pub fn log2_abs(&self) -> f64 {
        0.5 * self.m.norm_sqr().log2() + self.e as f64
    }

    pub fn arg(&self) -> f64 {
        self.m.arg()
    }

    /// Ratio collapsed to `C64`; safe when the true ratio is moderate.
    pub fn ratio(self, den: Self) -> C64 {
        self.div(den).to_c64()
    }
}

fn libm_scale(x: f64, e: i32) -> f64 {
    // f64::powi(2.0, e) loses precision for large |e|; exp2 of an integer is exact
    x * f64::exp2(e as f64)
}

/// Integer power by repeated squaring; avoids `ln`/`exp` branch-cut noise.
pub fn powi_c(z: C64, mut k: u32) -> C64 {
    let mut base = z;
    let mut acc = C64::new(1.0, 0.0);
    while k > 0 {
        if k & 1 == 1 {
            acc *= base;
        }
        base *= base;
        k >>= 1;
    }
    acc
}

/// Same, exponent-tracked.
pub fn powi_scaled(z: C64, mut k: u32) -> Scaled {
    let mut base = Scaled::from_c64(z);
    let mut acc = Scaled::one();
    while k > 0 {
        if k & 1 == 1 {
            acc = acc.mul(base);
        }
        base = base.mul(base);
        k >>= 1;
    }
    acc
}

/// Coefficients `c_0..c_deg` of the polynomial interpolating `f` through
/// `deg+1` samples on the circle of radius `r`: an inverse DFT. Only valid
/// if `f` really is a polynomial of degree `<= deg`.
pub fn interpolate_on_circle<F: Fn(C64) -> C64>(f: F, deg: usize, r: f64) -> Vec<C64> {
    let n = deg + 1;
    let samples: Vec<C64> = (0..n)
        .map(|j| {
            let th = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
            f(C64::new(r * th.cos(), r * th.sin()))
        })
        .collect();
    (0..n)
        .map(|k| {
            let mut acc = C64::new(0.0, 0.0);
            for (j, s) in samples.iter().enumerate() {
                let th = -2.0 * std::f64::consts::PI * (j * k % n) as f64 / n as f64;
                acc += s * C64::new(th.cos(), th.sin());
            }
            acc / (n as f64 * r.powi(k as i32))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn scaled_products_survive_huge_magnitudes() {
        let z = C64::new(3.0e100, -1.0e100);
        let mut acc = Scaled::one();
        for _ in 0..10 {
            acc = acc.mul_c(z); // |acc| ~ 1e1005, far past f64 range
        }
        let back = acc.div(powi_scaled(z, 9)).to_c64();
        assert_relative_eq!(back.re, z.re, max_relative = 1e-12);
        assert_relative_eq!(back.im, z.im, max_relative = 1e-12);
    }

    #[test]
    fn scaled_add_aligns_exponents() {
        let a = Scaled::from_c64(C64::new(1.0, 0.0)).mul_c(C64::new(1e200, 0.0));
        let b = Scaled::from_c64(C64::new(7.0, 0.0));
        let s = a.add(b).to_c64();
        assert_relative_eq!(s.re, 1e200, max_relative = 1e-12);
    }

    #[test]
    fn powi_matches_naive() {
        let z = C64::new(0.3, -1.2);
        let mut naive = C64::new(1.0, 0.0);
        for _ in 0..7 {
            naive *= z;
        }
        let fast = powi_c(z, 7);
        assert_relative_eq!(fast.re, naive.re, max_relative = 1e-14);
        assert_relative_eq!(fast.im, naive.im, max_relative = 1e-14);
    }

    #[test]
    fn circle_interpolation_recovers_coefficients() {
        let f = |v: C64| 2.0 - v + C64::new(0.0, 3.0) * v * v;
        let c = interpolate_on_circle(f, 2, 1.7);
        assert_relative_eq!(c[0].re, 2.0, epsilon = 1e-12);
        assert_relative_eq!(c[1].re, -1.0, epsilon = 1e-12);
        assert_relative_eq!(c[2].im, 3.0, epsilon = 1e-12);
    }
}
