//! The two TBA kernels and fast convolution against grid functions.

use super::grid::{GridError, GridFunction};
use crate::C64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    /// `K(v) = 1 / (2 cosh pi v)`
    K,
    /// `G(v) = (2/sqrt 3) sinh(4 pi v / 3) / sinh(2 pi v)`
    G,
}

/// Kernel value at real `v`; the removable singularity of `G` at 0 is
/// filled with its limit `4/(3 sqrt 3)`.
pub fn kernel(kind: KernelKind, v: f64) -> f64 {
    match kind {
        KernelKind::K => {
            let x = PI * v.abs();
            let e = (-x).exp();
            e / (1.0 + e * e)
        }
        KernelKind::G => {
            let a = v.abs();
            if a < 1e-8 {
                return 4.0 / (3.0 * 3.0_f64.sqrt()) * (1.0 + 0.0 * a);
            }
            // (2/sqrt3) (e^{4πa/3} - e^{-4πa/3}) / (e^{2πa} - e^{-2πa}),
            // written overflow-free in terms of decaying exponentials
            let num = 1.0 - (-8.0 * PI * a / 3.0).exp();
            let den = 1.0 - (-4.0 * PI * a).exp();
            2.0 / 3.0_f64.sqrt() * (-2.0 * PI * a / 3.0).exp() * num / den
        }
    }
}

/// Total integral of the kernel over the real line: `1/2` for `K`, `1` for
/// `G` (from `∫ sinh(av)/sinh(bv) dv = (π/b) tan(aπ/2b)` at `a/b = 2/3`).
pub fn kernel_mass(kind: KernelKind) -> f64 {
    match kind {
        KernelKind::K => 0.5,
        KernelKind::G => 1.0,
    }
}

/// `∫_{-∞}^{x} K(t) dt = 1/4 + (1/π) arctan(tanh(π x / 2))`.
pub fn k_cumulative(x: f64) -> f64 {
    0.25 + (0.5 * PI * x).tanh().atan() / PI
}

/// `∫_{y}^{∞} K(t + i c) dt` for `|c| < 1/2`, by the same antiderivative
/// continued into the strip (the integration path stays inside the unit
/// disk where the principal `atan` is analytic).
pub fn k_tail_shifted(y: f64, c: f64) -> C64 {
    let z = C64::new(y, c);
    let w = (z * (0.5 * PI)).tanh();
    C64::new(0.25, 0.0) - w.atan() / PI
}

/// FFT-accelerated convolution `kind * f` for grid functions with constant
/// tails: the asymptote is subtracted, convolved discretely with zero
/// padding, and added back as `c_inf` times the exact kernel mass.
pub struct Convolver {
    half_width: f64,
    step: f64,
    len: usize,
    fft_len: usize,
    k_hat: Vec<C64>,
    g_hat: Vec<C64>,
    fwd: std::sync::Arc<dyn rustfft::Fft<f64>>,
    inv: std::sync::Arc<dyn rustfft::Fft<f64>>,
}

impl Convolver {
    pub fn new(half_width: f64, step: f64) -> Self {
        let len = GridFunction::len_for(half_width, step);
        let fft_len = (3 * len - 2).next_power_of_two();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(fft_len);
        let inv = planner.plan_fft_inverse(fft_len);
        let mk = |kind: KernelKind| {
            let mut buf = vec![C64::new(0.0, 0.0); fft_len];
            for (i, slot) in buf.iter_mut().enumerate().take(2 * len - 1) {
                let t = (i as f64 - (len - 1) as f64) * step;
                *slot = C64::new(kernel(kind, t), 0.0);
            }
            fwd.process(&mut buf);
            buf
        };
        let k_hat = mk(KernelKind::K);
        let g_hat = mk(KernelKind::G);
        Self { half_width, step, len, fft_len, k_hat, g_hat, fwd, inv }
    }

    pub fn matches(&self, f: &GridFunction) -> bool {
        f.len() == self.len
            && (f.half_width - self.half_width).abs() < 1e-12
            && (f.step - self.step).abs() < 1e-12
    }

    pub fn convolve(&self, kind: KernelKind, f: &GridFunction) -> Result<GridFunction, GridError> {
        if !self.matches(f) {
            return Err(GridError::Mismatch(format!(
                "expected {} points at h = {}, got {} at h = {}",
                self.len, self.step, f.len(), f.step
            )));
        }
        let mut buf = vec![C64::new(0.0, 0.0); self.fft_len];
        for (slot, &s) in buf.iter_mut().zip(&f.samples) {
            *slot = s - f.c_inf;
        }
        self.fwd.process(&mut buf);
        let hat = match kind {
            KernelKind::K => &self.k_hat,
            KernelKind::G => &self.g_hat,
        };
        for (b, h) in buf.iter_mut().zip(hat) {
            *b *= h;
        }
        self.inv.process(&mut buf);
        let norm = self.step / self.fft_len as f64;
        let mass = kernel_mass(kind);
        let offset = self.len - 1;
        let samples: Vec<C64> = (0..self.len)
            .map(|i| buf[i + offset] * norm + f.c_inf * mass)
            .collect();
        Ok(GridFunction {
            half_width: self.half_width,
            step: self.step,
            samples,
            c_inf: f.c_inf * mass,
        })
    }

    /// Real-array convenience used by the solvers.
    pub fn convolve_real(&self, kind: KernelKind, samples: &[f64], c_inf: f64) -> Vec<f64> {
        let f = GridFunction {
            half_width: self.half_width,
            step: self.step,
            samples: samples.iter().map(|&x| C64::new(x, 0.0)).collect(),
            c_inf: C64::new(c_inf, 0.0),
        };
        self.convolve(kind, &f)
            .expect("grid built by this convolver")
            .samples
            .iter()
            .map(|z| z.re)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn kernel_values_at_zero() {
        assert_relative_eq!(kernel(KernelKind::K, 0.0), 0.5);
        assert_relative_eq!(
            kernel(KernelKind::G, 0.0),
            4.0 / (3.0 * 3.0_f64.sqrt()),
            max_relative = 1e-12
        );
        // ~0.76980
        assert!((kernel(KernelKind::G, 0.0) - 0.76980).abs() < 1e-5);
    }

    #[test]
    fn kernel_masses_match_quadrature() {
        // Simpson on [-40, 40]
        for (kind, want) in [(KernelKind::K, 0.5), (KernelKind::G, 1.0)] {
            let n = 160_000;
            let (a, b) = (-40.0, 40.0);
            let h = (b - a) / n as f64;
            let mut s = kernel(kind, a) + kernel(kind, b);
            for i in 1..n {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                s += w * kernel(kind, a + i as f64 * h);
            }
            s *= h / 3.0;
            assert_relative_eq!(s, want, epsilon = 1e-10);
            assert_relative_eq!(kernel_mass(kind), want);
        }
    }

    #[test]
    fn cumulative_matches_quadrature() {
        let n = 400_000;
        let (a, b) = (-20.0, 0.7);
        let h = (b - a) / n as f64;
        let mut acc = 0.5 * (kernel(KernelKind::K, a) + kernel(KernelKind::K, b));
        for i in 1..n {
            acc += kernel(KernelKind::K, a + i as f64 * h);
        }
        acc *= h;
        assert_relative_eq!(acc, k_cumulative(0.7), epsilon = 1e-8);
        // shifted tail at c = 0 agrees with the real cumulative
        let t = k_tail_shifted(0.7, 0.0);
        assert_relative_eq!(t.re, 0.5 - k_cumulative(0.7), epsilon = 1e-12);
        assert_relative_eq!(t.im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn shifted_tail_matches_quadrature() {
        let c = 0.45;
        let y = -0.3;
        // integrate K(t + ic) from y to y + 60 by Simpson
        let n = 600_000;
        let h = 60.0 / n as f64;
        let kc = |t: f64| {
            let z = C64::new(t, c) * PI;
            1.0 / (2.0 * z.cosh())
        };
        let mut s = kc(y) + kc(y + 60.0);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * kc(y + i as f64 * h);
        }
        s *= h / 3.0;
        let want = k_tail_shifted(y, c);
        assert!((s - want).norm() < 1e-9, "{s} vs {want}");
    }

    #[test]
    fn convolve_constant_gives_half() {
        let conv = Convolver::new(20.0, 0.1);
        let c = C64::new(3.0, -1.0);
        let f = GridFunction::constant(20.0, 0.1, c);
        let g = conv.convolve(KernelKind::K, &f).unwrap();
        for &s in &g.samples {
            assert!((s - c * 0.5).norm() < 1e-12);
        }
        assert!((g.c_inf - c * 0.5).norm() < 1e-14);
    }

    #[test]
    fn convolve_is_linear() {
        let conv = Convolver::new(15.0, 0.05);
        let f = GridFunction::from_fn(15.0, 0.05, C64::new(1.0, 0.0), |x| {
            C64::new(1.0 + (-x * x).exp(), 0.2 * (-x.abs()).exp())
        });
        let g = GridFunction::from_fn(15.0, 0.05, C64::new(-0.5, 0.3), |x| {
            C64::new(-0.5 + x.sin() * (-x.abs() / 2.0).exp(), 0.3)
        });
        let (a, b) = (C64::new(1.3, 0.0), C64::new(-0.4, 0.9));
        let combo = GridFunction {
            half_width: 15.0,
            step: 0.05,
            samples: f
                .samples
                .iter()
                .zip(&g.samples)
                .map(|(&x, &y)| a * x + b * y)
                .collect(),
            c_inf: a * f.c_inf + b * g.c_inf,
        };
        combo.check_shape().unwrap();
        let lhs = conv.convolve(KernelKind::K, &combo).unwrap();
        let cf = conv.convolve(KernelKind::K, &f).unwrap();
        let cg = conv.convolve(KernelKind::K, &g).unwrap();
        for i in 0..lhs.len() {
            let want = a * cf.samples[i] + b * cg.samples[i];
            assert!((lhs.samples[i] - want).norm() < 1e-12);
        }
    }

    #[test]
    fn narrow_gaussian_approximates_kernel_translate() {
        // unit-mass Gaussian of width w at v0; K * delta ≈ K(v - v0)
        let conv = Convolver::new(20.0, 0.02);
        let w = 0.1;
        let v0 = 1.3;
        let f = GridFunction::from_fn(20.0, 0.02, C64::new(0.0, 0.0), |x| {
            C64::new(
                (-((x - v0) / w).powi(2) / 2.0).exp() / (w * (2.0 * PI).sqrt()),
                0.0,
            )
        });
        let g = conv.convolve(KernelKind::K, &f).unwrap();
        // quadrature oracle at a few points
        for &v in &[0.0, 1.0, 1.3, 2.5] {
            let idx = ((v + 20.0_f64) / 0.02).round() as usize;
            let want = kernel(KernelKind::K, v - v0);
            let got = g.samples[idx].re;
            assert!(
                (got - want).abs() < 3.0 * w * w,
                "at {v}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn grid_mismatch_rejected() {
        let conv = Convolver::new(20.0, 0.1);
        let f = GridFunction::constant(10.0, 0.1, C64::new(1.0, 0.0));
        assert!(conv.convolve(KernelKind::K, &f).is_err());
    }
}
