//! Sparse trigonometric interpolation by the combination technique.
//!
//! A grid is described by a lower set `theta` of tensor levels. Each tensor
//! `i` interpolates on `3^{i_1} x ... x 3^{i_d}` nodes; the sparse interpolant
//! is `sum_i t_i I_i` with integer combination coefficients `t_i`, collapsed
//! into one weight per basis function:
//!
//! ```text
//! I[f](x) = sum_{j in nodes} w_j phi_j(x),    w_j = sum_i t_i c^i_j
//! ```
//!
//! Because the node family is nested, the node multi-indices (in nested
//! numbering, see [`crate::trig_basis`]) and the basis labels of the
//! interpolant form the same lower set. Samples and weights are therefore
//! stored side by side in one sorted array.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::index_sets::is_lower;
use crate::models::OracleError;
use crate::tensor_rule::{dft_coefficients, TensorCoefficients, TensorGrid};
use crate::trig_basis::{basis_table, nested_coordinate, nested_order_table, points_at_level};
use crate::{Error, LowerSet, MultiIndex, Oracle, Result, Scalar};

pub const GRID_FORMAT: u32 = 1;

/// Smallest frequency magnitude `|sigma|` that needs level `l` in one
/// dimension: `(m(l-1) + 1) / 2` with `m(-1) = 0`, i.e. 0, 1, 2, 5, 14, 41, ...
pub fn level_threshold(level: u32) -> u32 {
    if level == 0 {
        0
    } else {
        (points_at_level(level - 1) as u32).div_ceil(2)
    }
}

/// Smallest tensor set whose interpolant contains every basis function of
/// `lambda`: `{ i : (level_threshold(i_1), ..., level_threshold(i_d)) in lambda }`.
///
/// Members of `lambda` are frequency magnitudes: `k` stands for the two
/// basis functions of frequency `+-k` in that dimension.
pub fn optimal_tensors(lambda: &LowerSet) -> LowerSet {
    fn recurse(lambda: &LowerSet, probe: &mut Vec<u32>, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        let k = prefix.len();
        if k == probe.len() {
            out.push(MultiIndex::new(prefix.clone()));
            return;
        }
        let mut level = 0;
        loop {
            probe[k] = level_threshold(level);
            if !lambda.contains(probe) {
                break;
            }
            prefix.push(level);
            recurse(lambda, probe, prefix, out);
            prefix.pop();
            level += 1;
        }
        probe[k] = 0;
    }

    let dim = lambda.dim();
    let mut out = Vec::new();
    if !lambda.is_empty() {
        recurse(lambda, &mut vec![0; dim], &mut Vec::with_capacity(dim), &mut out);
    }
    LowerSet::new(dim, out).expect("threshold map preserves lowerness")
}

/// Combination coefficients `t_i` for every `i` in `theta`, the unique
/// integers with `sum_{i in theta, i >= j} t_i = 1` for all `j in theta`.
///
/// For a lower set the solution has the closed form
/// `t_i = sum_{e in {0,1}^d} (-1)^{|e|} [i + e in theta]`.
pub fn combination_coefficients(theta: &LowerSet) -> BTreeMap<MultiIndex, i64> {
    let dim = theta.dim();
    let mut probe = vec![0u32; dim];
    theta
        .iter()
        .map(|i| {
            let mut t = 0i64;
            for mask in 0u32..(1 << dim) {
                for (k, slot) in probe.iter_mut().enumerate() {
                    *slot = i.as_slice()[k] + (mask >> k & 1);
                }
                if theta.contains(&probe) {
                    t += if mask.count_ones() % 2 == 0 { 1 } else { -1 };
                }
            }
            (i.clone(), t)
        })
        .collect()
}

/// Range of nested node numbers that first appear on level `l`.
fn new_nodes_on_level(level: u32) -> std::ops::Range<u32> {
    if level == 0 {
        0..1
    } else {
        points_at_level(level - 1) as u32..points_at_level(level) as u32
    }
}

/// Number of nodes that are new in tensor `i`, i.e. belong to no tensor
/// below it.
pub fn new_node_count(level: &[u32]) -> usize {
    level.iter().map(|&l| new_nodes_on_level(l).len()).product()
}

/// Appends the nodes that are new in tensor `level` to `out`.
fn push_new_nodes(level: &[u32], out: &mut Vec<MultiIndex>) {
    let ranges: Vec<_> = level.iter().map(|&l| new_nodes_on_level(l)).collect();
    let mut current: Vec<u32> = ranges.iter().map(|r| r.start).collect();
    loop {
        out.push(MultiIndex::new(current.clone()));
        let mut k = current.len();
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            current[k] += 1;
            if current[k] < ranges[k].end {
                break;
            }
            current[k] = ranges[k].start;
        }
    }
}

/// Node multi-indices of the grid, `union_{i in theta} { j : j <= m(i) - 1 }`.
pub fn node_set(theta: &LowerSet) -> LowerSet {
    let mut nodes = Vec::new();
    for i in theta.iter() {
        push_new_nodes(i.as_slice(), &mut nodes);
    }
    LowerSet::new(theta.dim(), nodes).expect("union of boxes is lower")
}

/// Number of nodes of `node_set(theta)` without materializing it.
pub fn node_count(theta: &LowerSet) -> usize {
    theta.iter().map(|i| new_node_count(i.as_slice())).sum()
}

/// Sparse weights `w_j = sum_i t_i c^i_j` over all nodes of `theta`.
pub fn assemble_weights<T: Scalar>(
    theta: &LowerSet,
    t: &BTreeMap<MultiIndex, i64>,
    per_tensor: &HashMap<MultiIndex, TensorCoefficients<T>>,
) -> Result<BTreeMap<MultiIndex, Complex<T>>> {
    let mut weights: BTreeMap<MultiIndex, Complex<T>> = node_set(theta)
        .iter()
        .map(|j| (j.clone(), Complex::new(T::zero(), T::zero())))
        .collect();
    for i in theta.iter() {
        let ti = t.get(i).copied().unwrap_or(0);
        if ti == 0 {
            continue;
        }
        let coeffs = per_tensor
            .get(i)
            .ok_or_else(|| Error::MissingTensor(i.as_slice().to_vec()))?;
        let scale = T::of(ti as f64);
        for (nu, c) in coeffs.iter() {
            *weights.get_mut(nu.as_slice()).expect("tensor labels lie in node set") += c * scale;
        }
    }
    Ok(weights)
}

/// Sparse trigonometric interpolant with its samples.
#[derive(Clone, Debug)]
pub struct SparseGrid<T> {
    dim: usize,
    theta: LowerSet,
    t_coeffs: BTreeMap<MultiIndex, i64>,
    /// Sorted node (and basis label) multi-indices.
    nodes: Vec<MultiIndex>,
    position: HashMap<MultiIndex, usize>,
    samples: Vec<T>,
    weights: Vec<Complex<T>>,
    /// Largest basis label per dimension, for sizing evaluation tables.
    max_label: Vec<u32>,
    cache: HashMap<MultiIndex, TensorCoefficients<T>>,
}

impl<T: Scalar> SparseGrid<T> {
    /// Grid with no tensors; evaluates to zero everywhere.
    pub fn empty(dim: usize) -> Self {
        SparseGrid {
            dim,
            theta: LowerSet::empty(dim),
            t_coeffs: BTreeMap::new(),
            nodes: Vec::new(),
            position: HashMap::new(),
            samples: Vec::new(),
            weights: Vec::new(),
            max_label: vec![0; dim],
            cache: HashMap::new(),
        }
    }

    /// Samples `oracle` on the nodes of `theta` and assembles the interpolant.
    pub fn build<O: Oracle + ?Sized>(theta: &LowerSet, oracle: &O) -> Result<Self> {
        let mut grid = Self::empty(theta.dim());
        grid.refine(theta, oracle)?;
        Ok(grid)
    }

    /// Like [`SparseGrid::build`] for a function evaluated directly in `T`.
    pub fn from_fn(theta: &LowerSet, f: impl Fn(&[T]) -> T) -> Result<Self> {
        let mut grid = Self::empty(theta.dim());
        grid.refine_with(theta, |points| {
            Ok(points
                .iter()
                .map(|p| f(&p.iter().map(|&x| T::of(x)).collect::<Vec<T>>()).as_f64())
                .collect())
        })?;
        Ok(grid)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn theta(&self) -> &LowerSet {
        &self.theta
    }

    pub fn t_coeffs(&self) -> &BTreeMap<MultiIndex, i64> {
        &self.t_coeffs
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Node multi-indices in sorted order; they double as basis labels.
    pub fn nodes(&self) -> &[MultiIndex] {
        &self.nodes
    }

    pub fn node_indices(&self) -> LowerSet {
        LowerSet::new(self.dim, self.nodes.iter().cloned()).expect("node set is lower")
    }

    /// Samples aligned with [`SparseGrid::nodes`].
    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn sample(&self, node: &[u32]) -> Option<T> {
        self.position.get(node).map(|&p| self.samples[p])
    }

    /// Weights aligned with [`SparseGrid::nodes`].
    pub fn weights(&self) -> &[Complex<T>] {
        &self.weights
    }

    pub fn weight(&self, label: &[u32]) -> Option<Complex<T>> {
        self.position.get(label).map(|&p| self.weights[p])
    }

    /// `(basis label, weight)` pairs in sorted label order.
    pub fn weight_map(&self) -> BTreeMap<MultiIndex, Complex<T>> {
        self.nodes.iter().cloned().zip(self.weights.iter().copied()).collect()
    }

    /// Coordinates in `[0,1)^d` of the node with nested multi-index `node`.
    pub fn node_coordinate(node: &[u32]) -> Vec<T> {
        node.iter().map(|&p| nested_coordinate(p)).collect()
    }

    pub fn node_coordinates(&self) -> Vec<Vec<T>> {
        self.nodes.iter().map(|j| Self::node_coordinate(j.as_slice())).collect()
    }

    /// Size of the node set after a refinement to `theta ∪ new_theta`.
    pub fn projected_node_count(&self, new_theta: &LowerSet) -> usize {
        self.node_count()
            + new_theta
                .iter()
                .filter(|i| !self.theta.contains(i.as_slice()))
                .map(|i| new_node_count(i.as_slice()))
                .sum::<usize>()
    }

    /// Extends the grid to `theta ∪ new_theta`, sampling only nodes that are
    /// not yet known. Returns the number of new samples. On oracle failure
    /// the grid is left unchanged.
    pub fn refine<O: Oracle + ?Sized>(&mut self, new_theta: &LowerSet, oracle: &O) -> Result<usize> {
        if oracle.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: oracle.dim(),
            });
        }
        self.refine_with(new_theta, |points| oracle.evaluate(points))
    }

    /// [`SparseGrid::refine`] with a batch evaluator on unit-cube points.
    pub fn refine_with(
        &mut self,
        new_theta: &LowerSet,
        evaluate: impl FnOnce(&[Vec<f64>]) -> Result<Vec<f64>, OracleError>,
    ) -> Result<usize> {
        if new_theta.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: new_theta.dim(),
            });
        }
        let added: Vec<&MultiIndex> = new_theta
            .iter()
            .filter(|i| !self.theta.contains(i.as_slice()))
            .collect();
        if added.is_empty() {
            return Ok(0);
        }
        let theta = self.theta.union(new_theta)?;
        if !is_lower(theta.indices()) {
            return Err(Error::NotLower(format!("{theta:?}")));
        }

        let mut fresh = Vec::new();
        for i in &added {
            push_new_nodes(i.as_slice(), &mut fresh);
        }
        let points: Vec<Vec<f64>> = fresh
            .iter()
            .map(|j| SparseGrid::<f64>::node_coordinate(j.as_slice()))
            .collect();
        let values = evaluate(&points)?;
        if values.len() != points.len() {
            return Err(OracleError::new(format!(
                "oracle returned {} values for {} points",
                values.len(),
                points.len()
            ))
            .into());
        }
        if let Some((p, v)) = points.iter().zip(&values).find(|(_, v)| !v.is_finite()) {
            return Err(OracleError::new(format!("non-finite value {v}")).at(p).into());
        }

        let mut merged: Vec<(MultiIndex, T)> = self
            .nodes
            .drain(..)
            .zip(self.samples.drain(..))
            .chain(fresh.into_iter().zip(values.into_iter().map(T::of)))
            .collect();
        merged.sort_by(|a, b| a.0.cmp(&b.0));
        let (nodes, samples) = merged.into_iter().unzip();
        self.nodes = nodes;
        self.samples = samples;
        self.theta = theta;
        self.reindex();
        self.assemble();
        Ok(added.iter().map(|i| new_node_count(i.as_slice())).sum())
    }

    fn reindex(&mut self) {
        self.position = self.nodes.iter().enumerate().map(|(p, j)| (j.clone(), p)).collect();
        self.max_label = self
            .theta
            .max_components()
            .iter()
            .map(|&l| points_at_level(l) as u32 - 1)
            .collect();
    }

    /// Samples of tensor `level` in canonical lexicographic node order.
    fn tensor_samples(&self, level: &MultiIndex) -> Vec<T> {
        let grid = TensorGrid::new(level.clone());
        let tables: Vec<Vec<u32>> = level.as_slice().iter().map(|&l| nested_order_table(l)).collect();
        let mut key = vec![0u32; self.dim];
        (0..grid.node_count())
            .map(|flat| {
                for ((slot, j), table) in key.iter_mut().zip(grid.unflatten(flat)).zip(&tables) {
                    *slot = table[j as usize];
                }
                self.samples[self.position[key.as_slice()]]
            })
            .collect()
    }

    /// Recomputes combination coefficients and weights; tensor DFTs are
    /// cached since a tensor's samples never change.
    fn assemble(&mut self) {
        self.t_coeffs = combination_coefficients(&self.theta);
        let active: Vec<&MultiIndex> = self.t_coeffs.iter().filter(|(_, &t)| t != 0).map(|(i, _)| i).collect();
        let missing: Vec<&MultiIndex> = active
            .iter()
            .copied()
            .filter(|i| !self.cache.contains_key(i.as_slice()))
            .collect();
        let computed: Vec<(MultiIndex, TensorCoefficients<T>)> = missing
            .par_iter()
            .map(|i| {
                let samples = self.tensor_samples(i);
                let c = dft_coefficients(i, &samples).expect("tensor samples are complete");
                ((*i).clone(), c)
            })
            .collect();
        self.cache.extend(computed);
        let t_coeffs = &self.t_coeffs;
        self.cache.retain(|i, _| t_coeffs.get(i).is_some_and(|&t| t != 0));

        let mut weights = vec![Complex::new(T::zero(), T::zero()); self.nodes.len()];
        let mut key = vec![0u32; self.dim];
        for (i, &t) in &self.t_coeffs {
            if t == 0 {
                continue;
            }
            let coeffs = &self.cache[i];
            let scale = T::of(t as f64);
            let grid = coeffs.grid();
            for (flat, c) in coeffs.values().iter().enumerate() {
                for (slot, nu) in key.iter_mut().zip(grid.unflatten(flat)) {
                    *slot = nu;
                }
                weights[self.position[key.as_slice()]] += c * scale;
            }
        }
        self.weights = weights;
    }

    fn tables(&self, x: &[T]) -> Vec<Vec<Complex<T>>> {
        x.iter()
            .zip(&self.max_label)
            .map(|(&xk, &m)| {
                let mut t = vec![Complex::new(T::zero(), T::zero()); m as usize + 1];
                basis_table(xk, &mut t);
                t
            })
            .collect()
    }

    /// Complex value `sum_j w_j phi_j(x)`; `x` in unit-cube coordinates.
    pub fn eval_complex(&self, x: &[T]) -> Complex<T> {
        assert_eq!(x.len(), self.dim, "point dimension");
        let tables = self.tables(x);
        let mut acc = Complex::new(T::zero(), T::zero());
        for (j, w) in self.nodes.iter().zip(&self.weights) {
            let phi = j
                .as_slice()
                .iter()
                .zip(&tables)
                .fold(Complex::new(T::one(), T::zero()), |p, (&nu, t)| p * t[nu as usize]);
            acc += w * phi;
        }
        acc
    }

    /// Real part of the interpolant at `x` in unit-cube coordinates.
    pub fn eval(&self, x: &[T]) -> T {
        self.eval_complex(x).re
    }

    /// Evaluates many points in parallel.
    pub fn eval_batch(&self, points: &[Vec<T>]) -> Vec<T> {
        points.par_iter().map(|x| self.eval(x)).collect()
    }

    /// Serializable snapshot, carrying caller-defined `metadata`.
    pub fn to_file(&self, metadata: serde_json::Value) -> GridFile {
        GridFile {
            format: GRID_FORMAT,
            dim: self.dim,
            theta: self.theta.to_vecs(),
            t_coeffs: self.t_coeffs.iter().map(|(i, &t)| (i.as_slice().to_vec(), t)).collect(),
            node_indices: self.nodes.iter().map(|j| j.as_slice().to_vec()).collect(),
            samples: self.samples.iter().map(|s| s.as_f64()).collect(),
            weights: self.weights.iter().map(|w| [w.re.as_f64(), w.im.as_f64()]).collect(),
            metadata,
        }
    }

    /// Rebuilds a grid from a snapshot, checking its internal consistency.
    pub fn from_file(file: &GridFile) -> Result<Self> {
        let bad = |msg: String| Error::GridFile(msg);
        if file.format != GRID_FORMAT {
            return Err(bad(format!(
                "unsupported format {}, expected {GRID_FORMAT}",
                file.format
            )));
        }
        let dim = file.dim;
        let theta = LowerSet::new(dim, file.theta.iter().map(|v| MultiIndex::new(v.clone())))
            .map_err(|e| bad(format!("theta: {e}")))?;
        let t_coeffs = combination_coefficients(&theta);
        let stored: BTreeMap<MultiIndex, i64> = file
            .t_coeffs
            .iter()
            .map(|(i, t)| (MultiIndex::new(i.clone()), *t))
            .collect();
        if stored != t_coeffs {
            return Err(bad("combination coefficients do not match theta".into()));
        }
        let nodes: Vec<MultiIndex> = file.node_indices.iter().map(|v| MultiIndex::new(v.clone())).collect();
        let expected = node_set(&theta);
        if nodes.len() != expected.len() || !nodes.iter().eq(expected.iter()) {
            return Err(bad(format!(
                "node indices ({}) do not match the node set of theta ({})",
                nodes.len(),
                expected.len()
            )));
        }
        if file.samples.len() != nodes.len() || file.weights.len() != nodes.len() {
            return Err(bad(format!(
                "{} nodes but {} samples and {} weights",
                nodes.len(),
                file.samples.len(),
                file.weights.len()
            )));
        }
        let mut grid = SparseGrid {
            dim,
            theta,
            t_coeffs,
            nodes,
            position: HashMap::new(),
            samples: file.samples.iter().map(|&s| T::of(s)).collect(),
            weights: file
                .weights
                .iter()
                .map(|w| Complex::new(T::of(w[0]), T::of(w[1])))
                .collect(),
            max_label: Vec::new(),
            cache: HashMap::new(),
        };
        grid.reindex();
        Ok(grid)
    }

    /// Writes the grid atomically (temporary file, then rename).
    pub fn save(&self, path: &Path, metadata: serde_json::Value) -> Result<()> {
        write_atomic(path, &serde_json::to_vec(&self.to_file(metadata))?)
    }

    /// Loads a grid and returns it together with the stored metadata.
    pub fn load(path: &Path) -> Result<(Self, serde_json::Value)> {
        let text = fs::read(path).map_err(|e| Error::GridFile(format!("{}: {e}", path.display())))?;
        let file: GridFile =
            serde_json::from_slice(&text).map_err(|e| Error::GridFile(format!("{}: {e}", path.display())))?;
        let grid = Self::from_file(&file)?;
        Ok((grid, file.metadata))
    }
}

/// On-disk grid layout. Weights are `[re, im]` pairs aligned with
/// `node_indices`, as are the samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridFile {
    pub format: u32,
    pub dim: usize,
    pub theta: Vec<Vec<u32>>,
    pub t_coeffs: Vec<(Vec<u32>, i64)>,
    pub node_indices: Vec<Vec<u32>>,
    pub samples: Vec<f64>,
    pub weights: Vec<[f64; 2]>,
    #[serde(default)]
    pub metadata: serde_json::Value,
}

/// Replaces `path` with `bytes` so that readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("grid");
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    fs::write(&tmp, bytes)?;
    fs::File::open(&tmp)?.sync_all()?;
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}
