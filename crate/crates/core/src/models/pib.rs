//! Perturbed two-dimensional particle in a box, state `(2, 2)`, with
//! first-order wavefunction corrections.
//!
//! Unperturbed states are `psi_n(u) = sqrt(2) sin(n pi u)` with energies
//! `E_n = n^2 pi^2 / 2`. The x direction is perturbed by a step of height 15
//! on `[0,1/4] u [3/4,1]`, the y direction by `60 (y - 1/2)^2`. The
//! correction coefficient of `psi_n` is
//! `<psi_n | f | psi_2> / (E_2 - E_n)`, and the matrix elements are
//! evaluated in closed form.

use std::f64::consts::{PI, SQRT_2};

pub const DEFAULT_TRUNCATION: u32 = 10_000;

pub const STEP_HEIGHT: f64 = 15.0;
pub const WELL_CURVATURE: f64 = 60.0;

pub fn energy(n: u32) -> f64 {
    0.5 * f64::from(n) * f64::from(n) * PI * PI
}

/// `int_{[0,1/4] u [3/4,1]} cos(k pi u) du`.
fn step_cosine_integral(k: i64) -> f64 {
    let k = k.abs();
    if k == 0 {
        return 0.5;
    }
    if k % 2 == 1 {
        return 0.0;
    }
    let m = k / 2;
    if m % 2 == 0 {
        return 0.0;
    }
    let sign = if (m - 1) / 2 % 2 == 0 { 1.0 } else { -1.0 };
    sign / (m as f64 * PI)
}

/// `int_0^1 (u - 1/2)^2 cos(k pi u) du`.
fn well_cosine_integral(k: i64) -> f64 {
    let k = k.abs();
    if k == 0 {
        return 1.0 / 12.0;
    }
    if k % 2 == 1 {
        return 0.0;
    }
    2.0 / ((k * k) as f64 * PI * PI)
}

/// `int_0^1 psi_n(u) f_1(u) psi_2(u) du` for the step perturbation.
pub fn step_matrix_element(n: u32) -> f64 {
    let n = i64::from(n);
    STEP_HEIGHT * (step_cosine_integral(n - 2) - step_cosine_integral(n + 2))
}

/// `int_0^1 psi_n(u) f_2(u) psi_2(u) du` for the quadratic well.
pub fn well_matrix_element(n: u32) -> f64 {
    let n = i64::from(n);
    WELL_CURVATURE * (well_cosine_integral(n - 2) - well_cosine_integral(n + 2))
}

/// Nonzero first-order correction coefficients `(n, c_n)` for `n <= truncation`.
fn corrections(truncation: u32, element: impl Fn(u32) -> f64) -> Vec<(u32, f64)> {
    let e2 = energy(2);
    (1..=truncation)
        .filter(|&n| n != 2)
        .map(|n| (n, element(n) / (e2 - energy(n))))
        .filter(|(_, c)| *c != 0.0)
        .collect()
}

#[derive(Clone, Debug)]
pub struct PibTarget {
    x_corrections: Vec<(u32, f64)>,
    y_corrections: Vec<(u32, f64)>,
}

impl PibTarget {
    pub fn new(truncation: u32) -> Self {
        PibTarget {
            x_corrections: corrections(truncation, step_matrix_element),
            y_corrections: corrections(truncation, well_matrix_element),
        }
    }

    pub fn x_corrections(&self) -> &[(u32, f64)] {
        &self.x_corrections
    }

    pub fn y_corrections(&self) -> &[(u32, f64)] {
        &self.y_corrections
    }

    fn factor(corrections: &[(u32, f64)], u: f64) -> f64 {
        let base = SQRT_2 * (2.0 * PI * u).sin();
        base + corrections
            .iter()
            .map(|&(n, c)| c * SQRT_2 * (f64::from(n) * PI * u).sin())
            .sum::<f64>()
    }

    /// `Psi_{2,2}(x, y)` with both first-order corrections, not renormalized.
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        Self::factor(&self.x_corrections, x) * Self::factor(&self.y_corrections, y)
    }

    /// The unperturbed `psi_2(x) psi_2(y)`.
    pub fn unperturbed(x: f64, y: f64) -> f64 {
        2.0 * (2.0 * PI * x).sin() * (2.0 * PI * y).sin()
    }
}
