//! Decay-rate estimation from sparse weights.
//!
//! Fourier coefficients of a target with anisotropic smoothness decay like
//! `|c_j| ~ C prod_k (1 + |sigma(j_k)|)^{-alpha_k}`. Taking logarithms gives a
//! linear model in `v = (cbar, alpha_1, ..., alpha_d)`:
//!
//! ```text
//! -log|w_j| = cbar + sum_k alpha_k log(1 + |sigma(j_k)|)     (hyperbolic)
//! -log|w_j| = cbar + sum_k alpha_k |sigma(j_k)|              (total degree)
//! ```
//!
//! which is solved in the least-squares sense with a Householder QR
//! factorization.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::trig_basis::sigma;
use crate::{Error, MultiIndex, Result, Scalar, Space, SparseGrid};

/// Decay rates `alpha` and the intercept `cbar` of the log-linear fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnisotropyVector<T> {
    pub alpha: Vec<T>,
    pub cbar: T,
}

impl<T: Scalar> AnisotropyVector<T> {
    pub fn new(alpha: Vec<T>, cbar: T) -> Self {
        AnisotropyVector { alpha, cbar }
    }

    pub fn isotropic(dim: usize) -> Self {
        AnisotropyVector {
            alpha: vec![T::one(); dim],
            cbar: T::zero(),
        }
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    /// `alpha_1 / alpha_2`, the figure of merit for two-dimensional targets.
    pub fn ratio(&self, a: usize, b: usize) -> T {
        self.alpha[a] / self.alpha[b]
    }

    /// Replaces non-positive rates by the smallest positive one (or falls
    /// back to isotropic rates when none is positive) and scales the result
    /// so that its minimum is exactly 1.
    pub fn stabilize(&self) -> Self {
        stabilize(self)
    }
}

/// See [`AnisotropyVector::stabilize`].
pub fn stabilize<T: Scalar>(v: &AnisotropyVector<T>) -> AnisotropyVector<T> {
    let smallest_positive = v
        .alpha
        .iter()
        .copied()
        .filter(|a| *a > T::zero() && a.is_finite())
        .fold(None, |m: Option<T>, a| Some(m.map_or(a, |m| m.min(a))));
    let Some(floor) = smallest_positive else {
        return AnisotropyVector::isotropic(v.dim()).with_cbar(v.cbar);
    };
    let alpha = v
        .alpha
        .iter()
        .map(|&a| {
            if a > T::zero() && a.is_finite() {
                a / floor
            } else {
                T::one()
            }
        })
        .collect();
    AnisotropyVector { alpha, cbar: v.cbar }
}

impl<T> AnisotropyVector<T> {
    fn with_cbar(mut self, cbar: T) -> Self {
        self.cbar = cbar;
        self
    }
}

/// Regression rows `[1, r(j_1), ..., r(j_d)]` with responses `-log|w_j|`.
#[derive(Clone, Debug)]
pub struct FitSystem<T> {
    pub space: Space,
    pub dim: usize,
    pub rows: Vec<Vec<T>>,
    pub responses: Vec<T>,
    /// Weights left out because they are (numerically) zero.
    pub excluded_count: usize,
}

impl<T: Scalar> FitSystem<T> {
    /// Builds the system from `(basis label, weight)` pairs. Weights with
    /// `|w| < sqrt(eps) max |w|` are excluded and counted.
    pub fn build<'a, I>(dim: usize, weights: I, space: Space) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a MultiIndex, &'a Complex<T>)>,
    {
        let weights: Vec<(&MultiIndex, T)> = weights.into_iter().map(|(j, w)| (j, w.norm())).collect();
        if let Some((j, _)) = weights.iter().find(|(j, _)| j.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: j.dim(),
            });
        }
        let largest = weights.iter().map(|(_, a)| *a).fold(T::zero(), T::max);
        let floor = T::epsilon().sqrt() * largest;
        let mut rows = Vec::new();
        let mut responses = Vec::new();
        let mut excluded_count = 0;
        for (j, magnitude) in weights {
            if !(magnitude >= floor) || magnitude <= T::zero() {
                excluded_count += 1;
                continue;
            }
            let mut row = Vec::with_capacity(dim + 1);
            row.push(T::one());
            row.extend(j.as_slice().iter().map(|&nu| regressor::<T>(space, nu)));
            rows.push(row);
            responses.push(-magnitude.ln());
        }
        if rows.len() < dim + 1 {
            return Err(Error::Underdetermined {
                rows: rows.len(),
                needed: dim + 1,
            });
        }
        Ok(FitSystem {
            space,
            dim,
            rows,
            responses,
            excluded_count,
        })
    }

    /// Builds the system from the current weights of a grid.
    pub fn from_grid(grid: &SparseGrid<T>, space: Space) -> Result<Self> {
        Self::build(grid.dim(), grid.nodes().iter().zip(grid.weights()), space)
    }

    /// Least-squares solution; see [`solve_fit`].
    pub fn solve(&self) -> Result<AnisotropyVector<T>> {
        solve_fit(self)
    }
}

/// Per-dimension regressor of basis label `nu`.
pub fn regressor<T: Scalar>(space: Space, nu: u32) -> T {
    let k = T::of(sigma(nu).unsigned_abs() as f64);
    match space {
        Space::Hyperbolic => (k + T::one()).ln(),
        Space::TotalDegree => k,
    }
}

/// Minimizes `||A v - b||_2` by Householder QR. Column `k + 1` of `A`
/// belongs to dimension `k`; a numerically dependent column is reported as
/// rank deficiency in that dimension.
pub fn solve_fit<T: Scalar>(system: &FitSystem<T>) -> Result<AnisotropyVector<T>> {
    let cols = system.dim + 1;
    let needed = cols;
    if system.rows.len() < needed {
        return Err(Error::Underdetermined {
            rows: system.rows.len(),
            needed,
        });
    }
    let solution = least_squares(&system.rows, &system.responses).map_err(|column| Error::RankDeficient {
        dimension: column.saturating_sub(1),
    })?;
    Ok(AnisotropyVector {
        cbar: solution[0],
        alpha: solution[1..].to_vec(),
    })
}

/// Dense least squares `min ||A x - b||` for a tall matrix given by rows.
/// Returns the index of the first dependent column on rank deficiency.
pub fn least_squares<T: Scalar>(rows: &[Vec<T>], rhs: &[T]) -> std::result::Result<Vec<T>, usize> {
    let n = rows.len();
    let p = rows.first().map_or(0, Vec::len);
    assert_eq!(rhs.len(), n, "right-hand side length");
    assert!(n >= p, "system must not be underdetermined");
    // column-major copy
    let mut a: Vec<Vec<T>> = (0..p).map(|c| rows.iter().map(|r| r[c]).collect()).collect();
    let mut b = rhs.to_vec();
    let column_norms: Vec<T> = a.iter().map(|c| norm(c)).collect();
    let scale = column_norms.iter().copied().fold(T::zero(), T::max);
    let tolerance = T::epsilon() * T::of_usize(100 * n.max(p)) * scale;

    for k in 0..p {
        let x_norm = norm(&a[k][k..]);
        if x_norm <= tolerance || x_norm <= T::of(1e3) * T::epsilon() * column_norms[k] {
            return Err(k);
        }
        let alpha = if a[k][k] >= T::zero() { -x_norm } else { x_norm };
        // Householder vector v = x - alpha e_1
        let mut v: Vec<T> = a[k][k..].to_vec();
        v[0] -= alpha;
        let v_norm_sq: T = v.iter().map(|&x| x * x).sum();
        if v_norm_sq > T::zero() {
            let reflect = |col: &mut [T]| {
                let dot: T = v.iter().zip(col.iter()).map(|(&vi, &ci)| vi * ci).sum();
                let f = (dot + dot) / v_norm_sq;
                for (c, &vi) in col.iter_mut().zip(&v) {
                    *c -= f * vi;
                }
            };
            for col in a.iter_mut().skip(k + 1) {
                reflect(&mut col[k..]);
            }
            reflect(&mut b[k..]);
        }
        a[k][k] = alpha;
        for x in a[k][k + 1..].iter_mut() {
            *x = T::zero();
        }
    }

    let mut x = vec![T::zero(); p];
    for k in (0..p).rev() {
        let tail: T = ((k + 1)..p).map(|c| a[c][k] * x[c]).sum();
        x[k] = (b[k] - tail) / a[k][k];
    }
    Ok(x)
}

fn norm<T: Scalar>(v: &[T]) -> T {
    let big = v.iter().map(|x| x.abs()).fold(T::zero(), T::max);
    if big == T::zero() {
        return T::zero();
    }
    big * v.iter().map(|&x| (x / big) * (x / big)).sum::<T>().sqrt()
}

/// Summary of one fit as reported by the command-line tool.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnisotropyReport {
    pub alpha_raw: Vec<f64>,
    pub alpha_stabilized: Vec<f64>,
    pub cbar: f64,
    pub excluded_count: usize,
    pub mode: Space,
}

/// Fits, stabilizes and summarizes the weights of `grid`.
pub fn report<T: Scalar>(grid: &SparseGrid<T>, space: Space) -> Result<AnisotropyReport> {
    let system = FitSystem::from_grid(grid, space)?;
    let raw = system.solve()?;
    let stable = raw.stabilize();
    Ok(AnisotropyReport {
        alpha_raw: raw.alpha.iter().map(|a| a.as_f64()).collect(),
        alpha_stabilized: stable.alpha.iter().map(|a| a.as_f64()).collect(),
        cbar: raw.cbar.as_f64(),
        excluded_count: system.excluded_count,
        mode: space,
    })
}
