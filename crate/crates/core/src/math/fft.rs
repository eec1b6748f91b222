use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Sub};

use super::{cos, sin, PI};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl Complex {
    pub const ZERO: Complex = Complex { re: 0.0, im: 0.0 };

    pub fn new(re: f64, im: f64) -> Self {
        Complex { re, im }
    }

    pub fn scale(self, k: f64) -> Self {
        Complex::new(self.re * k, self.im * k)
    }
}

impl Add for Complex {
    type Output = Complex;
    fn add(self, o: Complex) -> Complex {
        Complex::new(self.re + o.re, self.im + o.im)
    }
}

impl Sub for Complex {
    type Output = Complex;
    fn sub(self, o: Complex) -> Complex {
        Complex::new(self.re - o.re, self.im - o.im)
    }
}

impl Mul for Complex {
    type Output = Complex;
    fn mul(self, o: Complex) -> Complex {
        Complex::new(
            self.re * o.re - self.im * o.im,
            self.re * o.im + self.im * o.re,
        )
    }
}

/// Iterative radix-2 FFT plan for a fixed power-of-two length.
#[derive(Debug, Clone)]
pub struct Fft {
    n: usize,
    twiddles: Vec<Complex>,
    rev: Vec<usize>,
}

impl Fft {
    /// Panics unless `n` is a power of two.
    pub fn new(n: usize) -> Self {
        assert!(n.is_power_of_two(), "FFT length {n} is not a power of two");
        let bits = n.trailing_zeros();
        let rev = (0..n)
            .map(|i| {
                if bits == 0 {
                    0
                } else {
                    i.reverse_bits() >> (usize::BITS - bits)
                }
            })
            .collect();
        let twiddles = (0..n / 2)
            .map(|k| {
                let a = -2.0 * PI * k as f64 / n as f64;
                Complex::new(cos(a), sin(a))
            })
            .collect();
        Fft { n, twiddles, rev }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn run(&self, data: &mut [Complex], inverse: bool) {
        let n = self.n;
        assert_eq!(data.len(), n);
        for i in 0..n {
            let j = self.rev[i];
            if i < j {
                data.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let step = n / len;
            for start in (0..n).step_by(len) {
                for k in 0..len / 2 {
                    let mut w = self.twiddles[k * step];
                    if inverse {
                        w.im = -w.im;
                    }
                    let a = data[start + k];
                    let b = data[start + k + len / 2] * w;
                    data[start + k] = a + b;
                    data[start + k + len / 2] = a - b;
                }
            }
            len <<= 1;
        }
        if inverse {
            let inv = 1.0 / n as f64;
            for z in data.iter_mut() {
                *z = z.scale(inv);
            }
        }
    }

    pub fn forward(&self, data: &mut [Complex]) {
        self.run(data, false);
    }

    /// Inverse transform, normalized so that `inverse(forward(x)) == x`.
    pub fn inverse(&self, data: &mut [Complex]) {
        self.run(data, true);
    }

    pub fn forward_real(&self, data: &[f64]) -> Vec<Complex> {
        let mut buf: Vec<Complex> = data.iter().map(|&x| Complex::new(x, 0.0)).collect();
        buf.resize(self.n, Complex::ZERO);
        self.forward(&mut buf);
        buf
    }

    pub fn inverse_real(&self, mut spec: Vec<Complex>) -> Vec<f64> {
        self.inverse(&mut spec);
        spec.into_iter().map(|z| z.re).collect()
    }

    /// Angular wavenumbers `2π k / period` in FFT order (zero, positive,
    /// then negative). The Nyquist mode gets `+n/2`.
    pub fn wavenumbers(&self, period: f64) -> Vec<f64> {
        let n = self.n as i64;
        (0..n)
            .map(|k| {
                let m = if k <= n / 2 { k } else { k - n };
                2.0 * PI * m as f64 / period
            })
            .collect()
    }
}

/// Linear (non-circular) banded Toeplitz product evaluated through an FFT.
///
/// Given coefficients `c_k` for `|k| <= half_width`, computes
/// `out_j = Σ_k c_k e_{j+k}` for `j = 0..n_out`, where `e` is an extended
/// array of length `n_out + 2 half_width` whose index `m` corresponds to
/// output offset `m - half_width`.
#[derive(Debug, Clone)]
pub struct ToeplitzConv {
    n_out: usize,
    half_width: usize,
    fft: Fft,
    kernel_hat: Vec<Complex>,
}

impl ToeplitzConv {
    /// `coeff(k)` is queried for `k in -half_width..=half_width`.
    pub fn new(n_out: usize, half_width: usize, coeff: impl Fn(i64) -> f64) -> Self {
        let m = (n_out + 2 * half_width + 1).next_power_of_two();
        let fft = Fft::new(m);
        let mut ker = vec![Complex::ZERO; m];
        let hw = half_width as i64;
        for k in -hw..=hw {
            let idx = (-k).rem_euclid(m as i64) as usize;
            ker[idx] = Complex::new(coeff(k), 0.0);
        }
        fft.forward(&mut ker);
        ToeplitzConv {
            n_out,
            half_width,
            fft,
            kernel_hat: ker,
        }
    }

    pub fn extended_len(&self) -> usize {
        self.n_out + 2 * self.half_width
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn apply(&self, extended: &[f64]) -> Vec<f64> {
        assert_eq!(extended.len(), self.extended_len());
        let mut buf = self.fft.forward_real(extended);
        for (z, k) in buf.iter_mut().zip(&self.kernel_hat) {
            *z = *z * *k;
        }
        let full = self.fft.inverse_real(buf);
        full[self.half_width..self.half_width + self.n_out].to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fft_roundtrip_and_single_mode() {
        let n = 16;
        let plan = Fft::new(n);
        let data: Vec<f64> = (0..n)
            .map(|j| cos(2.0 * PI * 3.0 * j as f64 / n as f64))
            .collect();
        let spec = plan.forward_real(&data);
        assert!((spec[3].re - 8.0).abs() < 1e-12);
        assert!((spec[13].re - 8.0).abs() < 1e-12);
        assert!(spec[4].re.abs() < 1e-12);
        let back = plan.inverse_real(spec);
        for (a, b) in back.iter().zip(&data) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn toeplitz_matches_direct_sum() {
        let n = 7;
        let hw = 3;
        let c = |k: i64| 1.0 / (1.0 + (k * k) as f64) + 0.1 * k as f64;
        let conv = ToeplitzConv::new(n, hw, c);
        let e: Vec<f64> = (0..conv.extended_len())
            .map(|m| (m as f64 * 0.7).sin())
            .collect();
        let out = conv.apply(&e);
        for j in 0..n {
            let mut direct = 0.0;
            for k in -(hw as i64)..=(hw as i64) {
                direct += c(k) * e[(j as i64 + hw as i64 + k) as usize];
            }
            assert!((out[j] - direct).abs() < 1e-12, "j={j}");
        }
    }
}
