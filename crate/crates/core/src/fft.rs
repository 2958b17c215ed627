//! Radix-3 Cooley-Tukey FFT for lengths `3^p`, plus a row-column driver for
//! dense d-dimensional arrays.
//!
//! The forward transform is `X[k] = sum_p x[p] exp(-2 pi i k p / n)`,
//! unnormalized.

use num_complex::Complex;

use crate::{Error, Result, Scalar};

/// Precomputed twiddles and digit-reversal permutation for one length.
#[derive(Clone, Debug)]
pub struct Radix3Plan<T> {
    len: usize,
    digit_reversal: Vec<usize>,
    /// `exp(-2 pi i q / len)` for `q = 0..len`.
    twiddles: Vec<Complex<T>>,
}

impl<T: Scalar> Radix3Plan<T> {
    pub fn new(len: usize) -> Result<Self> {
        let mut digits = 0u32;
        let mut n = 1usize;
        while n < len {
            n *= 3;
            digits += 1;
        }
        if n != len || len == 0 {
            return Err(Error::InvalidArgument(format!(
                "radix-3 transform needs a power-of-three length, got {len}"
            )));
        }
        let digit_reversal = (0..len)
            .map(|mut p| {
                let mut r = 0;
                for _ in 0..digits {
                    r = r * 3 + p % 3;
                    p /= 3;
                }
                r
            })
            .collect();
        let step = T::TAU() / T::of_usize(len);
        let twiddles = (0..len)
            .map(|q| {
                let (s, c) = (step * T::of_usize(q)).sin_cos();
                Complex::new(c, -s)
            })
            .collect();
        Ok(Radix3Plan {
            len,
            digit_reversal,
            twiddles,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// In-place forward transform of `buf` (length must equal the plan).
    pub fn forward(&self, buf: &mut [Complex<T>]) {
        assert_eq!(buf.len(), self.len, "buffer length does not match plan");
        let n = self.len;
        for p in 0..n {
            let r = self.digit_reversal[p];
            if r > p {
                buf.swap(p, r);
            }
        }
        // exp(-2 pi i / 3) and its square
        let half = T::of(0.5);
        let s3 = T::of(3.0).sqrt() * half;
        let w1 = Complex::new(-half, -s3);
        let w2 = Complex::new(-half, s3);

        let mut size = 3;
        while size <= n {
            let third = size / 3;
            let stride = n / size;
            for start in (0..n).step_by(size) {
                for k in 0..third {
                    let t1 = self.twiddles[k * stride];
                    let t2 = self.twiddles[2 * k * stride];
                    let a = buf[start + k];
                    let b = buf[start + k + third] * t1;
                    let c = buf[start + k + 2 * third] * t2;
                    buf[start + k] = a + b + c;
                    buf[start + k + third] = a + b * w1 + c * w2;
                    buf[start + k + 2 * third] = a + b * w2 + c * w1;
                }
            }
            size *= 3;
        }
    }
}

/// Forward transform of a dense row-major array with the given shape, one
/// dimension at a time. Every extent must be a power of three.
pub fn forward_nd<T: Scalar>(data: &mut [Complex<T>], shape: &[usize]) -> Result<()> {
    let total: usize = shape.iter().product();
    if total != data.len() {
        return Err(Error::InvalidArgument(format!(
            "array of {} values does not match shape {shape:?}",
            data.len()
        )));
    }
    let mut line = Vec::new();
    for (axis, &extent) in shape.iter().enumerate() {
        if extent == 1 {
            continue;
        }
        let plan = Radix3Plan::new(extent)?;
        let inner: usize = shape[axis + 1..].iter().product();
        let outer = total / (extent * inner);
        line.resize(extent, Complex::new(T::zero(), T::zero()));
        for o in 0..outer {
            for i in 0..inner {
                let base = o * extent * inner + i;
                for (q, slot) in line.iter_mut().enumerate() {
                    *slot = data[base + q * inner];
                }
                plan.forward(&mut line);
                for (q, v) in line.iter().enumerate() {
                    data[base + q * inner] = *v;
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct(x: &[Complex<f64>]) -> Vec<Complex<f64>> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .map(|(p, v)| {
                        let ang = -2.0 * std::f64::consts::PI * ((k * p) % n) as f64 / n as f64;
                        v * Complex::new(ang.cos(), ang.sin())
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn rejects_non_power_of_three() {
        assert!(Radix3Plan::<f64>::new(0).is_err());
        assert!(Radix3Plan::<f64>::new(6).is_err());
        assert!(Radix3Plan::<f64>::new(2).is_err());
    }

    #[test]
    fn matches_direct_sum_small() {
        for len in [1usize, 3, 9, 27] {
            let x: Vec<Complex<f64>> = (0..len)
                .map(|p| Complex::new((p as f64 * 0.7).sin(), (p as f64 * 1.3).cos()))
                .collect();
            let mut y = x.clone();
            Radix3Plan::new(len).unwrap().forward(&mut y);
            for (a, b) in y.iter().zip(direct(&x)) {
                assert!((a - b).norm() < 1e-12, "len {len}");
            }
        }
    }

    #[test]
    fn impulse_gives_flat_spectrum() {
        let mut x = vec![Complex::new(0.0f32, 0.0); 81];
        x[0] = Complex::new(1.0, 0.0);
        Radix3Plan::new(81).unwrap().forward(&mut x);
        assert!(x.iter().all(|v| (v.re - 1.0).abs() < 1e-6 && v.im.abs() < 1e-6));
    }
}
