//! One-dimensional building blocks: the signed-frequency re-indexing, the
//! equispaced `3^l`-point nested node family, and the complex exponential
//! basis.
//!
//! Two index spaces live side by side here. A *basis label* `nu` selects the
//! frequency `sigma(nu)`; a *nested node index* `p` enumerates the union of
//! all node levels so that the first `3^l` indices are exactly the nodes of
//! level `l`. Inside a single level, nodes are also addressed canonically as
//! `j / 3^l`, `j = 0..3^l`; the conversion functions map between the two.

use num_complex::Complex;

use crate::{Error, Result, Scalar};

/// Signed frequency of basis label `nu`: 0, 1, -1, 2, -2, ...
pub fn sigma(nu: u32) -> i64 {
    let nu = i64::from(nu);
    if nu % 2 == 0 {
        -nu / 2
    } else {
        (nu + 1) / 2
    }
}

/// Number of points on level `l`, `m(l) = 3^l`.
pub fn points_at_level(level: u32) -> usize {
    3usize.pow(level)
}

/// Nodes of the `m`-point rule in canonical order `j / m`.
pub fn nodes_1d<T: Scalar>(m: usize) -> Result<Vec<T>> {
    if m == 0 || m.is_multiple_of(2) {
        return Err(Error::EvenRule(m));
    }
    let denom = T::of_usize(m);
    Ok((0..m).map(|j| T::of_usize(j) / denom).collect())
}

/// `exp(2 pi i sigma(nu) x)`.
pub fn basis_eval<T: Scalar>(nu: u32, x: T) -> Complex<T> {
    let theta = T::TAU() * T::of(sigma(nu) as f64) * x;
    let (s, c) = theta.sin_cos();
    Complex::new(c, s)
}

/// Fills `out[nu] = basis_eval(nu, x)` for `nu < out.len()`.
pub fn basis_table<T: Scalar>(x: T, out: &mut [Complex<T>]) {
    for (nu, slot) in out.iter_mut().enumerate() {
        *slot = basis_eval(nu as u32, x);
    }
}

/// Level on which nested node `p` first appears, with its reduced numerator:
/// the node sits at `numerator / 3^level`.
pub fn nested_node(p: u32) -> (u32, u64) {
    if p == 0 {
        return (0, 0);
    }
    let mut level = 1;
    let mut first = 1u64;
    while u64::from(p) >= first * 3 {
        first *= 3;
        level += 1;
    }
    let q = u64::from(p) - first;
    (level, 3 * (q / 2) + 1 + q % 2)
}

/// Coordinate in `[0,1)` of nested node `p`.
pub fn nested_coordinate<T: Scalar>(p: u32) -> T {
    let (level, numerator) = nested_node(p);
    T::of(numerator as f64) / T::of_usize(points_at_level(level))
}

/// Nested index of canonical node `j` on `level` (node `j / 3^level`).
pub fn canonical_to_nested(j: usize, level: u32) -> u32 {
    debug_assert!(j < points_at_level(level));
    if j == 0 {
        return 0;
    }
    let (mut j, mut level) = (j, level);
    while j % 3 == 0 {
        j /= 3;
        level -= 1;
    }
    let q = 2 * (j / 3) + (j % 3 - 1);
    (points_at_level(level - 1) + q) as u32
}

/// Canonical index on `level` of nested node `p`; `None` if the node does not
/// belong to that level.
pub fn nested_to_canonical(p: u32, level: u32) -> Option<usize> {
    let (own, numerator) = nested_node(p);
    (own <= level).then(|| numerator as usize * points_at_level(level - own))
}

/// Table of `canonical_to_nested(j, level)` for all `j` on the level.
pub fn nested_order_table(level: u32) -> Vec<u32> {
    (0..points_at_level(level))
        .map(|j| canonical_to_nested(j, level))
        .collect()
}
