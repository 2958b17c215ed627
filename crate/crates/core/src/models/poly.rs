//! Periodic polynomials of prescribed smoothness on `[-1, 1]`.
//!
//! `g_1(x) = x^3 - x` and each `g_{k+1}` is an antiderivative of `g_k` with
//! the constant chosen so the periodic extension stays continuous. `g_k` has
//! `k` periodic derivatives; the `(k+1)`-th jumps across the boundary.

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, One, Signed, ToPrimitive, Zero};

use crate::{Error, Result};

/// Field the polynomials can be evaluated in: floats, or exact rationals.
pub trait Coefficient: Num + Clone {
    fn ratio(numer: i64, denom: i64) -> Self;
}

impl Coefficient for f64 {
    fn ratio(numer: i64, denom: i64) -> Self {
        numer as f64 / denom as f64
    }
}

impl Coefficient for f32 {
    fn ratio(numer: i64, denom: i64) -> Self {
        (numer as f64 / denom as f64) as f32
    }
}

impl Coefficient for BigRational {
    fn ratio(numer: i64, denom: i64) -> Self {
        BigRational::new(BigInt::from(numer), BigInt::from(denom))
    }
}

/// `(power, numerator, denominator)` terms of `g_1 .. g_5`.
const TERMS: [&[(u32, i64, i64)]; 5] = [
    &[(3, 1, 1), (1, -1, 1)],
    &[(4, 1, 4), (2, -1, 2)],
    &[(5, 1, 20), (3, -1, 6), (1, 7, 60)],
    &[(6, 1, 120), (4, -1, 24), (2, 7, 120)],
    &[(7, 1, 840), (5, -1, 120), (3, 7, 360), (1, -31, 2520)],
];

fn check_order(k: u8) -> Result<()> {
    if (1..=5).contains(&k) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "polynomial order must be in 1..=5, got {k}"
        )))
    }
}

fn eval_terms<T: Coefficient>(k: u8, x: &T) -> T {
    TERMS[usize::from(k) - 1].iter().fold(T::zero(), |acc, &(p, n, d)| {
        let mut xp = T::one();
        for _ in 0..p {
            xp = xp * x.clone();
        }
        acc + T::ratio(n, d) * xp
    })
}

/// `g_k(x)` for `k` in `1..=5`.
pub fn g_k<T: Coefficient>(k: u8, x: T) -> Result<T> {
    check_order(k)?;
    Ok(eval_terms(k, &x))
}

/// `max_{[-1,1]} |g_k|`. Closed form for `k = 1`, dense sampling otherwise.
pub fn sup_norm(k: u8) -> Result<f64> {
    static NORMS: OnceLock<[f64; 5]> = OnceLock::new();
    check_order(k)?;
    let norms = NORMS.get_or_init(|| {
        let mut out = [2.0 / (3.0 * 3f64.sqrt()), 0.0, 0.0, 0.0, 0.0];
        const SAMPLES: usize = 1_000_000;
        for (slot, k) in out.iter_mut().zip(1u8..).skip(1) {
            *slot = (0..=SAMPLES)
                .map(|s| eval_terms::<f64>(k, &(-1.0 + 2.0 * s as f64 / SAMPLES as f64)).abs())
                .fold(0.0, f64::max);
        }
        out
    });
    Ok(norms[usize::from(k) - 1])
}

fn h(k: u8, x: f64) -> f64 {
    eval_terms::<f64>(k, &x) / sup_norm(k).expect("order already validated")
}

/// `h_k = g_k / ||g_k||_inf`.
pub fn h_k(k: u8, x: f64) -> Result<f64> {
    check_order(k)?;
    Ok(h(k, x))
}

/// `prod_k h_{orders_k}(x_k)`; orders must lie in `1..=5`.
pub fn product_model(orders: &[u8], x: &[f64]) -> f64 {
    orders.iter().zip(x).map(|(&k, &xk)| h(k, xk)).product()
}

/// `h1(x1) h5(x4) + h2(x2) h5(x5) + h3(x3) h5(x6)`.
pub fn anisotropic_6d(x: &[f64]) -> f64 {
    h(1, x[0]) * h(5, x[3]) + h(2, x[1]) * h(5, x[4]) + h(3, x[2]) * h(5, x[5])
}

/// `|D^m g_k(1) - D^m g_k(-1)|` with `D^m` the `m`-th order central
/// difference of step `step`, evaluated in exact rational arithmetic so the
/// only error left is the `O(step^2)` truncation of the stencil.
pub fn boundary_derivative_mismatch(k: u8, order: u32, step: &BigRational) -> Result<f64> {
    check_order(k)?;
    let derivative = |x: BigRational| -> BigRational {
        let half = BigRational::ratio(i64::from(order), 2);
        let mut acc = BigRational::zero();
        let mut binom = BigInt::from(1);
        for i in 0..=order {
            let offset = (half.clone() - BigRational::from_integer(BigInt::from(i))) * step.clone();
            let term = BigRational::from_integer(binom.clone()) * eval_terms(k, &(x.clone() + offset));
            acc = if i % 2 == 0 { acc + term } else { acc - term };
            binom = binom * BigInt::from(order - i) / BigInt::from(i + 1);
        }
        acc / num_traits::pow(step.clone(), order as usize)
    };
    let one = BigRational::one();
    let jump = derivative(one.clone()) - derivative(-one);
    Ok(jump.abs().to_f64().unwrap_or(f64::INFINITY))
}
