//! Full-tensor trigonometric interpolation on one anisotropic grid of
//! `3^{i_1} x ... x 3^{i_d}` equispaced nodes.
//!
//! Coefficients come from a normalized d-dimensional DFT. The transform
//! output is permuted from natural frequency order into basis-label order
//! (`nu` with frequency `sigma(nu)`) before leaving this module.

use std::collections::HashMap;

use num_complex::Complex;

use crate::fft::forward_nd;
use crate::trig_basis::{basis_table, points_at_level, sigma};
use crate::{Error, MultiIndex, Result, Scalar};

/// Shape information for the tensor of level multi-index `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TensorGrid {
    level: MultiIndex,
    points_per_dim: Vec<usize>,
}

impl TensorGrid {
    pub fn new(level: MultiIndex) -> Self {
        let points_per_dim = level.as_slice().iter().map(|&l| points_at_level(l)).collect();
        TensorGrid { level, points_per_dim }
    }

    pub fn level(&self) -> &MultiIndex {
        &self.level
    }

    pub fn points_per_dim(&self) -> &[usize] {
        &self.points_per_dim
    }

    pub fn node_count(&self) -> usize {
        self.points_per_dim.iter().product()
    }

    /// Multi-index of the `flat`-th entry in lexicographic (row-major) order.
    pub fn unflatten(&self, mut flat: usize) -> Vec<u32> {
        let mut out = vec![0u32; self.points_per_dim.len()];
        for (slot, &m) in out.iter_mut().zip(&self.points_per_dim).rev() {
            *slot = (flat % m) as u32;
            flat /= m;
        }
        out
    }

    pub fn flatten(&self, index: &[u32]) -> usize {
        index
            .iter()
            .zip(&self.points_per_dim)
            .fold(0, |acc, (&j, &m)| acc * m + j as usize)
    }
}

/// Cartesian product of the 1D node sets, lexicographic in the canonical
/// node index `j`.
pub fn tensor_nodes<T: Scalar>(level: &MultiIndex) -> Vec<Vec<T>> {
    let grid = TensorGrid::new(level.clone());
    (0..grid.node_count())
        .map(|flat| {
            grid.unflatten(flat)
                .iter()
                .zip(grid.points_per_dim())
                .map(|(&j, &m)| T::of_usize(j as usize) / T::of_usize(m))
                .collect()
        })
        .collect()
}

/// Interpolation coefficients of one tensor, indexed by basis label.
#[derive(Clone, Debug)]
pub struct TensorCoefficients<T> {
    grid: TensorGrid,
    values: Vec<Complex<T>>,
}

impl<T: Scalar> TensorCoefficients<T> {
    pub fn level(&self) -> &MultiIndex {
        self.grid.level()
    }

    pub fn grid(&self) -> &TensorGrid {
        &self.grid
    }

    /// Coefficient of basis function `nu` (each `nu_k < 3^{i_k}`).
    pub fn get(&self, nu: &[u32]) -> Complex<T> {
        self.values[self.grid.flatten(nu)]
    }

    /// `(basis label, coefficient)` pairs in lexicographic basis order.
    pub fn iter(&self) -> impl Iterator<Item = (Vec<u32>, Complex<T>)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(|(flat, v)| (self.grid.unflatten(flat), *v))
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    /// Full complex value of the tensor interpolant at `x`.
    pub fn eval_complex(&self, x: &[T]) -> Complex<T> {
        let tables: Vec<Vec<Complex<T>>> = x
            .iter()
            .zip(self.grid.points_per_dim())
            .map(|(&xk, &m)| {
                let mut t = vec![Complex::new(T::zero(), T::zero()); m];
                basis_table(xk, &mut t);
                t
            })
            .collect();
        let mut acc = Complex::new(T::zero(), T::zero());
        for (flat, w) in self.values.iter().enumerate() {
            let nu = self.grid.unflatten(flat);
            let phi = nu
                .iter()
                .zip(&tables)
                .fold(Complex::new(T::one(), T::zero()), |p, (&n, t)| p * t[n as usize]);
            acc += w * phi;
        }
        acc
    }
}

/// DFT coefficients from samples listed in canonical lexicographic node
/// order (`samples.len()` must equal the tensor's node count).
pub fn dft_coefficients<T: Scalar>(level: &MultiIndex, samples: &[T]) -> Result<TensorCoefficients<T>> {
    let grid = TensorGrid::new(level.clone());
    let count = grid.node_count();
    if samples.len() != count {
        let missing = grid.unflatten(samples.len().min(count.saturating_sub(1)));
        return Err(Error::MissingSample(missing));
    }
    let mut data: Vec<Complex<T>> = samples.iter().map(|&s| Complex::new(s, T::zero())).collect();
    forward_nd(&mut data, grid.points_per_dim())?;

    let scale = T::one() / T::of_usize(count);
    let values = (0..count)
        .map(|flat| {
            let nu = grid.unflatten(flat);
            let src: Vec<u32> = nu
                .iter()
                .zip(grid.points_per_dim())
                .map(|(&n, &m)| sigma(n).rem_euclid(m as i64) as u32)
                .collect();
            data[grid.flatten(&src)] * scale
        })
        .collect();
    Ok(TensorCoefficients { grid, values })
}

/// Same as [`dft_coefficients`], with samples keyed by canonical node index.
pub fn dft_coefficients_from_map<T: Scalar>(
    level: &MultiIndex,
    samples: &HashMap<MultiIndex, T>,
) -> Result<TensorCoefficients<T>> {
    let grid = TensorGrid::new(level.clone());
    let dense = (0..grid.node_count())
        .map(|flat| {
            let j = grid.unflatten(flat);
            samples.get(j.as_slice()).copied().ok_or(Error::MissingSample(j))
        })
        .collect::<Result<Vec<T>>>()?;
    dft_coefficients(level, &dense)
}

/// Real part of the tensor interpolant at `x`.
pub fn tensor_eval<T: Scalar>(coeffs: &TensorCoefficients<T>, x: &[T]) -> T {
    coeffs.eval_complex(x).re
}
