//! Multi-indices, lower (downward-closed) sets and the quasi-optimal set
//! constructors.
//!
//! A lower set `S` has the property that `nu in S` and `i <= nu`
//! (componentwise) imply `i in S`. Sets are kept sorted lexicographically so
//! equality, iteration order and serialization are deterministic.

use std::borrow::Borrow;
use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize, Serializer};

use crate::{Error, Result, Scalar};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(components: Vec<u32>) -> Self {
        MultiIndex(components)
    }

    pub fn zero(dim: usize) -> Self {
        MultiIndex(vec![0; dim])
    }

    pub fn unit(dim: usize, k: usize) -> Self {
        let mut v = vec![0; dim];
        v[k] = 1;
        MultiIndex(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<u32> {
        self.0
    }

    /// Componentwise `self <= other`.
    pub fn le(&self, other: &[u32]) -> bool {
        self.0.iter().zip(other).all(|(a, b)| a <= b)
    }

    pub fn incremented(&self, k: usize) -> Self {
        let mut v = self.0.clone();
        v[k] += 1;
        MultiIndex(v)
    }

    /// `self - e_k`, or `None` when component `k` is zero.
    pub fn decremented(&self, k: usize) -> Option<Self> {
        if self.0[k] == 0 {
            return None;
        }
        let mut v = self.0.clone();
        v[k] -= 1;
        Some(MultiIndex(v))
    }
}

impl Borrow<[u32]> for MultiIndex {
    fn borrow(&self) -> &[u32] {
        &self.0
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        MultiIndex(v)
    }
}

impl From<&[u32]> for MultiIndex {
    fn from(v: &[u32]) -> Self {
        MultiIndex(v.to_vec())
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// Which quasi-optimal family drives the index sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Space {
    /// `prod_k (i_k + 1)^alpha_k <= L`, suited to finite-smoothness targets.
    Hyperbolic,
    /// `sum_k alpha_k i_k <= L`, suited to analytic targets.
    TotalDegree,
}

impl Space {
    /// Value compared against [`Space::threshold`]: `sum alpha_k ln(i_k+1)`
    /// for the hyperbolic family, `sum alpha_k i_k` for total degree.
    pub fn index_weight<T: Scalar>(self, alpha: &[T], index: &[u32]) -> T {
        alpha.iter().zip(index).map(|(&a, &i)| a * self.component(i)).sum()
    }

    fn component<T: Scalar>(self, i: u32) -> T {
        match self {
            Space::Hyperbolic => T::of(f64::from(i) + 1.0).ln(),
            Space::TotalDegree => T::of(f64::from(i)),
        }
    }

    pub fn threshold<T: Scalar>(self, level: T) -> T {
        match self {
            Space::Hyperbolic => level.ln(),
            Space::TotalDegree => level,
        }
    }

    /// Inverse of [`Space::threshold`].
    pub fn level_of<T: Scalar>(self, weight: T) -> T {
        match self {
            Space::Hyperbolic => weight.exp(),
            Space::TotalDegree => weight,
        }
    }

    pub fn index_set<T: Scalar>(self, alpha: &[T], level: T) -> Result<LowerSet> {
        match self {
            Space::Hyperbolic => hyperbolic_set(alpha, level),
            Space::TotalDegree => total_degree_set(alpha, level),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Space::Hyperbolic => "hyperbolic",
            Space::TotalDegree => "total-degree",
        }
    }
}

impl std::str::FromStr for Space {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hyperbolic" | "hyp" => Ok(Space::Hyperbolic),
            "total-degree" | "total_degree" | "td" => Ok(Space::TotalDegree),
            other => Err(Error::InvalidArgument(format!("unknown space {other:?}"))),
        }
    }
}

/// Slack allowed when comparing an index weight against a threshold, so that
/// indices sitting exactly on the boundary survive rounding.
pub(crate) fn boundary_slack<T: Scalar>(threshold: T) -> T {
    T::epsilon() * T::of(64.0) * threshold.abs().max(T::one())
}

#[derive(Clone, PartialEq, Eq)]
pub struct LowerSet {
    dim: usize,
    indices: BTreeSet<MultiIndex>,
}

impl LowerSet {
    pub fn empty(dim: usize) -> Self {
        LowerSet {
            dim,
            indices: BTreeSet::new(),
        }
    }

    /// Builds a set and checks that it is lower.
    pub fn new(dim: usize, indices: impl IntoIterator<Item = MultiIndex>) -> Result<Self> {
        let set = Self::from_indices_unchecked(dim, indices)?;
        if !is_lower(&set.indices) {
            return Err(Error::NotLower(format!("{:?}", set.indices)));
        }
        Ok(set)
    }

    /// Builds a set without checking lowerness; dimensions are still checked.
    pub(crate) fn from_indices_unchecked(dim: usize, indices: impl IntoIterator<Item = MultiIndex>) -> Result<Self> {
        let indices: BTreeSet<MultiIndex> = indices.into_iter().collect();
        if let Some(bad) = indices.iter().find(|i| i.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: bad.dim(),
            });
        }
        Ok(LowerSet { dim, indices })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, index: &[u32]) -> bool {
        self.indices.contains(index)
    }

    pub fn iter(&self) -> impl DoubleEndedIterator<Item = &MultiIndex> + ExactSizeIterator {
        self.indices.iter()
    }

    pub fn indices(&self) -> &BTreeSet<MultiIndex> {
        &self.indices
    }

    pub fn is_subset(&self, other: &LowerSet) -> bool {
        self.indices.is_subset(&other.indices)
    }

    /// Largest value of each component over the set (zeros when empty).
    pub fn max_components(&self) -> Vec<u32> {
        let mut out = vec![0; self.dim];
        for i in &self.indices {
            for (o, &c) in out.iter_mut().zip(i.as_slice()) {
                *o = (*o).max(c);
            }
        }
        out
    }

    /// Members with no successor `i + e_k` in the set.
    pub fn maximal_elements(&self) -> Vec<&MultiIndex> {
        self.indices
            .iter()
            .filter(|i| (0..self.dim).all(|k| !self.indices.contains(&i.incremented(k))))
            .collect()
    }

    /// Indices outside the set whose every immediate predecessor is inside,
    /// i.e. the indices that can be added one at a time keeping the set lower.
    pub fn frontier(&self) -> BTreeSet<MultiIndex> {
        if self.indices.is_empty() {
            return std::iter::once(MultiIndex::zero(self.dim)).collect();
        }
        let mut out = BTreeSet::new();
        for i in &self.indices {
            for k in 0..self.dim {
                let cand = i.incremented(k);
                if self.indices.contains(&cand) || out.contains(&cand) {
                    continue;
                }
                let admissible = (0..self.dim)
                    .filter_map(|q| cand.decremented(q))
                    .all(|p| self.indices.contains(&p));
                if admissible {
                    out.insert(cand);
                }
            }
        }
        out
    }

    pub fn union(&self, other: &LowerSet) -> Result<LowerSet> {
        union_lower(self, other)
    }

    pub fn to_vecs(&self) -> Vec<Vec<u32>> {
        self.indices.iter().map(|i| i.as_slice().to_vec()).collect()
    }
}

impl fmt::Debug for LowerSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.indices.iter()).finish()
    }
}

/// Serialized as a JSON array of integer arrays.
impl Serialize for LowerSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_seq(self.indices.iter())
    }
}

fn check_alpha<T: Scalar>(alpha: &[T]) -> Result<()> {
    if alpha.is_empty() {
        return Err(Error::InvalidArgument("anisotropy vector is empty".into()));
    }
    if let Some((k, a)) = alpha.iter().enumerate().find(|(_, a)| !(**a > T::zero())) {
        return Err(Error::InvalidArgument(format!(
            "anisotropy component {k} must be positive, got {a}"
        )));
    }
    Ok(())
}

/// Depth-first enumeration of `{ i : sum_k weight_k(i_k) <= budget }` where
/// each per-dimension weight is nondecreasing in `i_k` and zero at `i_k = 0`.
fn enumerate_below<T: Scalar>(alpha: &[T], space: Space, budget: T) -> BTreeSet<MultiIndex> {
    fn recurse<T: Scalar>(
        alpha: &[T],
        space: Space,
        remaining: T,
        slack: T,
        prefix: &mut Vec<u32>,
        out: &mut BTreeSet<MultiIndex>,
    ) {
        let k = prefix.len();
        if k == alpha.len() {
            out.insert(MultiIndex(prefix.clone()));
            return;
        }
        let mut i = 0u32;
        loop {
            let w = alpha[k] * space.component::<T>(i);
            if w > remaining + slack {
                break;
            }
            prefix.push(i);
            recurse(alpha, space, remaining - w, slack, prefix, out);
            prefix.pop();
            i += 1;
        }
    }

    let mut out = BTreeSet::new();
    if budget + boundary_slack(budget) < T::zero() {
        return out;
    }
    recurse(
        alpha,
        space,
        budget,
        boundary_slack(budget),
        &mut Vec::with_capacity(alpha.len()),
        &mut out,
    );
    out
}

/// `{ i in N^d : prod_k (i_k + 1)^alpha_k <= level }`.
pub fn hyperbolic_set<T: Scalar>(alpha: &[T], level: T) -> Result<LowerSet> {
    check_alpha(alpha)?;
    if !(level >= T::one()) {
        return Err(Error::InvalidArgument(format!(
            "hyperbolic level must be at least 1, got {level}"
        )));
    }
    let indices = enumerate_below(alpha, Space::Hyperbolic, level.ln());
    Ok(LowerSet {
        dim: alpha.len(),
        indices,
    })
}

/// `{ i in N^d : sum_k alpha_k i_k <= level }`.
pub fn total_degree_set<T: Scalar>(alpha: &[T], level: T) -> Result<LowerSet> {
    check_alpha(alpha)?;
    if !(level >= T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "total-degree level must be nonnegative, got {level}"
        )));
    }
    let indices = enumerate_below(alpha, Space::TotalDegree, level);
    Ok(LowerSet {
        dim: alpha.len(),
        indices,
    })
}

/// True iff every immediate predecessor of every member is a member.
pub fn is_lower<'a, I>(set: I) -> bool
where
    I: IntoIterator<Item = &'a MultiIndex> + Copy,
    I::IntoIter: 'a,
{
    let members: BTreeSet<&[u32]> = set.into_iter().map(|i| i.as_slice()).collect();
    set.into_iter().all(|i| {
        (0..i.dim())
            .filter_map(|k| i.decremented(k))
            .all(|p| members.contains(p.as_slice()))
    })
}

/// Smallest lower superset of `indices`.
pub fn lower_completion(dim: usize, indices: impl IntoIterator<Item = MultiIndex>) -> Result<LowerSet> {
    let mut out = LowerSet::empty(dim);
    let mut stack: Vec<MultiIndex> = Vec::new();
    for i in indices {
        if i.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: i.dim(),
            });
        }
        stack.push(i);
    }
    while let Some(i) = stack.pop() {
        if out.indices.contains(&i) {
            continue;
        }
        stack.extend((0..dim).filter_map(|k| i.decremented(k)));
        out.indices.insert(i);
    }
    Ok(out)
}

pub fn union_lower(a: &LowerSet, b: &LowerSet) -> Result<LowerSet> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch {
            expected: a.dim,
            actual: b.dim,
        });
    }
    let out = LowerSet {
        dim: a.dim,
        indices: a.indices.union(&b.indices).cloned().collect(),
    };
    debug_assert!(is_lower(&out.indices));
    Ok(out)
}
