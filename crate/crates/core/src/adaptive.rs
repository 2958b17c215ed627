//! Dimensionally adaptive refinement.
//!
//! Starting from an isotropic basis set `Lambda^1(L0)`, each iteration
//!
//! 1. estimates decay rates from the current weights (or uses fixed ones),
//! 2. finds the smallest level `L` whose set `Lambda^alpha(L)` is not yet
//!    contained in the basis set,
//! 3. adds that set, samples the new nodes and reassembles the interpolant,
//!
//! until the next step would exceed the node budget.
//!
//! The basis set holds frequency magnitudes; the tensor set is always
//! `optimal_tensors(lambda)`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::anisotropy::FitSystem;
use crate::index_sets::boundary_slack;
use crate::sparse_grid::{node_count, optimal_tensors};
use crate::{AnisotropyVector, Error, LowerSet, MultiIndex, Oracle, Result, Scalar, Space, SparseGrid};

/// How decay rates are chosen in each iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "alpha", rename_all = "kebab-case")]
pub enum RefineMode {
    /// Fit rates to the current weights.
    Adaptive,
    /// Use known rates every iteration.
    Analytic(Vec<f64>),
    /// Rates all equal to one; refinement only raises `L`.
    Isotropic,
}

impl RefineMode {
    pub fn name(&self) -> &'static str {
        match self {
            RefineMode::Adaptive => "adaptive",
            RefineMode::Analytic(_) => "analytic",
            RefineMode::Isotropic => "isotropic",
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if let RefineMode::Analytic(alpha) = self {
            if alpha.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: alpha.len(),
                });
            }
            if alpha.iter().any(|a| !(*a > 0.0) || !a.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "analytic rates must be positive, got {alpha:?}"
                )));
            }
        }
        Ok(())
    }
}

/// One line of the refinement history.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub node_count: usize,
    pub new_nodes: usize,
    /// Level `L` reached by the basis set (product form for the hyperbolic
    /// space), measured with `alpha_used`.
    pub level: f64,
    /// Fitted rates before stabilization, when a fit was made.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_raw: Option<Vec<f64>>,
    pub alpha_used: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cbar: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub excluded_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_error: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rmse: Option<f64>,
}

/// Result of a single refinement step.
#[derive(Clone, Debug, PartialEq)]
pub enum StepOutcome {
    Refined {
        new_nodes: usize,
    },
    /// The next step would need `projected` nodes; nothing was changed.
    BudgetStop {
        projected: usize,
        budget: usize,
    },
}

/// Persistent part of the state that is not stored in the grid itself.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateMetadata {
    pub space: Space,
    pub lambda: Vec<Vec<u32>>,
    pub budget: usize,
    pub min_new_nodes: usize,
    pub level: f64,
    pub iteration: usize,
}

/// Grid, basis set and bookkeeping of an adaptive run.
#[derive(Clone, Debug)]
pub struct RefinementState<T> {
    pub grid: SparseGrid<T>,
    pub lambda: LowerSet,
    pub space: Space,
    pub budget: usize,
    /// Keep raising `L` until at least this many new nodes accumulate.
    pub min_new_nodes: usize,
    pub level: f64,
    pub iteration: usize,
    pub history: Vec<IterationRecord>,
}

/// Default starting level.
pub const DEFAULT_L0: f64 = 3.0;

/// Smallest `L` whose set adds something to `lambda`, and the indices added.
///
/// The candidates are the frontier indices of `lambda`; the new level is the
/// smallest index weight among them and every frontier index attaining it
/// (up to rounding) joins in the same step.
pub fn next_level<T: Scalar>(lambda: &LowerSet, alpha: &[T], space: Space) -> (T, BTreeSet<MultiIndex>) {
    let mut ladder = Ladder::new(lambda, alpha, space);
    let (weight, layer) = ladder.step();
    (space.level_of(weight), layer.into_iter().collect())
}

fn lowest_layer<T: Scalar>(candidates: Vec<(MultiIndex, T)>) -> (T, Vec<MultiIndex>) {
    let min = candidates.iter().map(|(_, w)| *w).fold(T::infinity(), T::min);
    let slack = boundary_slack(min);
    let layer = candidates
        .into_iter()
        .filter(|(_, w)| *w <= min + slack)
        .map(|(i, _)| i)
        .collect();
    (min, layer)
}

/// Frontier of a lower set, maintained incrementally as indices are added.
struct Ladder<'a, T> {
    lambda: BTreeSet<MultiIndex>,
    frontier: BTreeSet<MultiIndex>,
    alpha: &'a [T],
    space: Space,
    dim: usize,
}

impl<'a, T: Scalar> Ladder<'a, T> {
    fn new(lambda: &LowerSet, alpha: &'a [T], space: Space) -> Self {
        Ladder {
            lambda: lambda.indices().clone(),
            frontier: lambda.frontier(),
            alpha,
            space,
            dim: lambda.dim(),
        }
    }

    /// Adds the lowest frontier layer; returns its weight.
    fn step(&mut self) -> (T, Vec<MultiIndex>) {
        let candidates = self
            .frontier
            .iter()
            .map(|i| (i.clone(), self.space.index_weight(self.alpha, i.as_slice())))
            .collect();
        let (weight, layer) = lowest_layer(candidates);
        for i in &layer {
            self.frontier.remove(i);
            self.lambda.insert(i.clone());
        }
        for i in &layer {
            for k in 0..self.dim {
                let next = i.incremented(k);
                let admissible = (0..self.dim)
                    .filter_map(|q| next.decremented(q))
                    .all(|p| self.lambda.contains(&p));
                if admissible && !self.lambda.contains(&next) {
                    self.frontier.insert(next);
                }
            }
        }
        (weight, layer)
    }

    fn lambda(&self) -> LowerSet {
        LowerSet::new(self.dim, self.lambda.iter().cloned()).expect("ladder keeps lambda lower")
    }
}

impl<T: Scalar> RefinementState<T> {
    /// Samples the grid of the isotropic basis set `Lambda^1(l0)`.
    pub fn init_isotropic<O: Oracle + ?Sized>(
        dim: usize,
        l0: f64,
        oracle: &O,
        space: Space,
        budget: usize,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        if !(l0 >= 2.0) {
            return Err(Error::InvalidArgument(format!("L0 must be at least 2, got {l0}")));
        }
        if oracle.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: oracle.dim(),
            });
        }
        let lambda = space.index_set(&vec![T::one(); dim], T::of(l0))?;
        let theta = optimal_tensors(&lambda);
        let initial = node_count(&theta);
        if initial > budget {
            return Err(Error::BudgetExhaustedAtInit { budget, initial });
        }
        let grid = SparseGrid::build(&theta, oracle)?;
        let record = IterationRecord {
            iteration: 0,
            node_count: grid.node_count(),
            new_nodes: grid.node_count(),
            level: l0,
            alpha_raw: None,
            alpha_used: vec![1.0; dim],
            cbar: None,
            excluded_count: None,
            warning: None,
            max_error: None,
            rmse: None,
        };
        Ok(RefinementState {
            grid,
            lambda,
            space,
            budget,
            min_new_nodes: 1,
            level: l0,
            iteration: 0,
            history: vec![record],
        })
    }

    /// Initial node count of [`RefinementState::init_isotropic`] without
    /// sampling anything.
    pub fn initial_node_count(dim: usize, l0: f64, space: Space) -> Result<usize> {
        let lambda = space.index_set(&vec![T::one(); dim], T::of(l0))?;
        Ok(node_count(&optimal_tensors(&lambda)))
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn node_count(&self) -> usize {
        self.grid.node_count()
    }

    /// Rates for the next step together with the partially filled record.
    fn choose_alpha(&self, mode: &RefineMode) -> Result<(Vec<T>, IterationRecord)> {
        let dim = self.dim();
        let mut record = IterationRecord {
            iteration: self.iteration + 1,
            node_count: self.node_count(),
            new_nodes: 0,
            level: self.level,
            alpha_raw: None,
            alpha_used: Vec::new(),
            cbar: None,
            excluded_count: None,
            warning: None,
            max_error: None,
            rmse: None,
        };
        let alpha = match mode {
            RefineMode::Isotropic => AnisotropyVector::isotropic(dim),
            RefineMode::Analytic(a) => {
                mode.validate(dim)?;
                AnisotropyVector::new(a.iter().map(|&x| T::of(x)).collect(), T::zero()).stabilize()
            }
            RefineMode::Adaptive => match FitSystem::from_grid(&self.grid, self.space) {
                Ok(system) => {
                    record.excluded_count = Some(system.excluded_count);
                    match system.solve() {
                        Ok(raw) => {
                            record.alpha_raw = Some(raw.alpha.iter().map(|a| a.as_f64()).collect());
                            record.cbar = Some(raw.cbar.as_f64());
                            raw.stabilize()
                        }
                        Err(e) => {
                            record.warning = Some(format!("{e}; using isotropic rates"));
                            AnisotropyVector::isotropic(dim)
                        }
                    }
                }
                Err(e) => {
                    record.warning = Some(format!("{e}; using isotropic rates"));
                    AnisotropyVector::isotropic(dim)
                }
            },
        };
        record.alpha_used = alpha.alpha.iter().map(|a| a.as_f64()).collect();
        Ok((alpha.alpha, record))
    }

    /// One iteration. On a budget stop or an error the state is unchanged.
    pub fn refine_once<O: Oracle + ?Sized>(&mut self, mode: &RefineMode, oracle: &O) -> Result<StepOutcome> {
        self.refine_once_with(mode, oracle, |_, _| Ok(()))
    }

    fn refine_once_with<O, H>(&mut self, mode: &RefineMode, oracle: &O, mut hook: H) -> Result<StepOutcome>
    where
        O: Oracle + ?Sized,
        H: FnMut(&SparseGrid<T>, &mut IterationRecord) -> Result<()>,
    {
        if self.node_count() >= self.budget {
            return Ok(StepOutcome::BudgetStop {
                projected: self.node_count(),
                budget: self.budget,
            });
        }
        let (alpha, mut record) = self.choose_alpha(mode)?;
        let current = self.node_count();
        let want = self.min_new_nodes.max(1);

        let mut ladder = Ladder::new(&self.lambda, &alpha, self.space);
        // best candidate within budget that adds at least one node
        let mut accepted: Option<(LowerSet, LowerSet, usize, T)> = None;
        let outcome = loop {
            let (weight, _) = ladder.step();
            let lambda = ladder.lambda();
            let theta = optimal_tensors(&lambda);
            let projected = self.grid.projected_node_count(&theta);
            if projected > self.budget {
                break match accepted.take() {
                    Some(candidate) => Ok(candidate),
                    None => Err(projected),
                };
            }
            if projected > current {
                accepted = Some((lambda, theta, projected, weight));
                if projected - current >= want {
                    break Ok(accepted.take().expect("just set"));
                }
            }
        };
        let (lambda, theta, _, weight) = match outcome {
            Ok(candidate) => candidate,
            Err(projected) => {
                return Ok(StepOutcome::BudgetStop {
                    projected,
                    budget: self.budget,
                })
            }
        };

        let new_nodes = self.grid.refine(&theta, oracle)?;
        self.lambda = lambda;
        self.iteration += 1;
        self.level = self.space.level_of(weight).as_f64();
        record.node_count = self.node_count();
        record.new_nodes = new_nodes;
        record.level = self.level;
        hook(&self.grid, &mut record)?;
        self.history.push(record);
        Ok(StepOutcome::Refined { new_nodes })
    }

    /// Refines until the budget stops further growth.
    pub fn run<O: Oracle + ?Sized>(&mut self, mode: &RefineMode, oracle: &O) -> Result<usize> {
        self.run_with(mode, oracle, |_, _| Ok(()))
    }

    /// [`RefinementState::run`] calling `hook` after every completed
    /// iteration, before its record is appended to the history. The hook can
    /// fill in error metrics; an error from the hook ends the run.
    pub fn run_with<O, H>(&mut self, mode: &RefineMode, oracle: &O, mut hook: H) -> Result<usize>
    where
        O: Oracle + ?Sized,
        H: FnMut(&SparseGrid<T>, &mut IterationRecord) -> Result<()>,
    {
        mode.validate(self.dim())?;
        let mut steps = 0;
        while let StepOutcome::Refined { .. } = self.refine_once_with(mode, oracle, &mut hook)? {
            steps += 1;
        }
        Ok(steps)
    }

    pub fn metadata(&self) -> StateMetadata {
        StateMetadata {
            space: self.space,
            lambda: self.lambda.to_vecs(),
            budget: self.budget,
            min_new_nodes: self.min_new_nodes,
            level: self.level,
            iteration: self.iteration,
        }
    }

    /// Reassembles a state from a stored grid and its metadata.
    pub fn from_parts(grid: SparseGrid<T>, meta: StateMetadata, history: Vec<IterationRecord>) -> Result<Self> {
        let lambda = LowerSet::new(grid.dim(), meta.lambda.into_iter().map(MultiIndex::new))?;
        if &optimal_tensors(&lambda) != grid.theta() {
            return Err(Error::GridFile(
                "stored basis set does not match the grid's tensor set".into(),
            ));
        }
        Ok(RefinementState {
            grid,
            lambda,
            space: meta.space,
            budget: meta.budget,
            min_new_nodes: meta.min_new_nodes,
            level: meta.level,
            iteration: meta.iteration,
            history,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index_sets::{hyperbolic_set, is_lower};
    use crate::models::{BuiltinModel, CountingOracle, OracleError};
    use crate::sparse_grid::node_set;

    fn set(dim: usize, v: &[&[u32]]) -> LowerSet {
        LowerSet::new(dim, v.iter().map(|i| MultiIndex::from(*i))).unwrap()
    }

    fn product(orders: &[u8]) -> crate::models::ModelOracle {
        BuiltinModel::Product {
            orders: orders.to_vec(),
        }
        .oracle()
    }

    #[test]
    fn init_examples() {
        let s = RefinementState::<f64>::init_isotropic(1, 3.0, &product(&[1]), Space::Hyperbolic, 1000).unwrap();
        assert_eq!(s.lambda, set(1, &[&[0], &[1], &[2]]));
        assert_eq!(s.grid.theta(), &set(1, &[&[0], &[1], &[2]]));
        assert_eq!(s.node_count(), 9);

        let s = RefinementState::<f64>::init_isotropic(2, 3.0, &product(&[1, 1]), Space::Hyperbolic, 1000).unwrap();
        assert_eq!(s.lambda.len(), 5);
        assert_eq!(s.node_count(), 17);

        let s = RefinementState::<f64>::init_isotropic(3, 2.0, &product(&[1, 1, 1]), Space::Hyperbolic, 1000).unwrap();
        assert_eq!(s.lambda.len(), 4);
        assert_eq!(s.node_count(), 7);
        assert_eq!(
            RefinementState::<f64>::initial_node_count(3, 2.0, Space::Hyperbolic).unwrap(),
            7
        );
    }

    #[test]
    fn init_checks_budget_before_sampling() {
        let oracle = CountingOracle::new(product(&[1, 1]));
        let err = RefinementState::<f64>::init_isotropic(2, 3.0, &oracle, Space::Hyperbolic, 10).unwrap_err();
        assert!(matches!(
            err,
            Error::BudgetExhaustedAtInit {
                budget: 10,
                initial: 17
            }
        ));
        assert_eq!(oracle.points(), 0);
        assert!(RefinementState::<f64>::init_isotropic(2, 1.5, &oracle, Space::Hyperbolic, 100).is_err());
    }

    #[test]
    fn next_level_examples() {
        let (l, delta) = next_level(&set(1, &[&[0]]), &[1.0], Space::Hyperbolic);
        assert_eq!(l, 2.0);
        assert_eq!(delta, [MultiIndex::new(vec![1])].into_iter().collect());

        // dimension 1 has the smaller rate and grows first
        let lambda = hyperbolic_set(&[1.0, 1.0], 3.0).unwrap();
        let (l, delta) = next_level(&lambda, &[1.0, 2.0], Space::Hyperbolic);
        assert!((l - 4.0f64).abs() < 1e-12);
        assert_eq!(delta, [MultiIndex::new(vec![3, 0])].into_iter().collect());

        // ties join the same step
        let (l, delta) = next_level(&lambda, &[1.0, 1.0], Space::Hyperbolic);
        assert!((l - 4.0f64).abs() < 1e-12);
        assert_eq!(delta.len(), 3);

        let (l, delta) = next_level(&set(2, &[&[0, 0]]), &[1.0, 1.5], Space::TotalDegree);
        assert_eq!(l, 1.0);
        assert_eq!(delta, [MultiIndex::new(vec![1, 0])].into_iter().collect());
    }

    #[test]
    fn state_at_budget_stops() {
        let oracle = CountingOracle::new(product(&[1, 2]));
        let mut s = RefinementState::<f64>::init_isotropic(2, 3.0, &oracle, Space::Hyperbolic, 17).unwrap();
        let before = oracle.points();
        assert!(matches!(
            s.refine_once(&RefineMode::Adaptive, &oracle).unwrap(),
            StepOutcome::BudgetStop { .. }
        ));
        assert_eq!(oracle.points(), before);
        assert_eq!(s.run(&RefineMode::Adaptive, &oracle).unwrap(), 0);
        assert_eq!(s.history.len(), 1);
    }

    #[test]
    fn one_dimensional_alpha_is_one() {
        let oracle = product(&[2]);
        let mut s = RefinementState::<f64>::init_isotropic(1, 3.0, &oracle, Space::Hyperbolic, 300).unwrap();
        s.run(&RefineMode::Adaptive, &oracle).unwrap();
        assert!(s.history.len() > 1);
        for r in &s.history[1..] {
            assert_eq!(r.alpha_used, vec![1.0]);
            assert!(r.alpha_raw.as_ref().unwrap()[0] > 1.0);
        }
        // 1D ladder: 9 -> 27 -> 81 -> 243
        let counts: Vec<usize> = s.history.iter().map(|r| r.node_count).collect();
        assert_eq!(counts, vec![9, 27, 81, 243]);
    }

    #[test]
    fn rougher_dimension_gets_smaller_rate() {
        let oracle = product(&[1, 5]);
        let mut s = RefinementState::<f64>::init_isotropic(2, 3.0, &oracle, Space::Hyperbolic, 2000).unwrap();
        s.run(&RefineMode::Adaptive, &oracle).unwrap();
        // both factors have zero mean, so the initial cross sees only roundoff
        assert!(s.history[1].warning.is_some());
        let raw = s.history.last().unwrap().alpha_raw.clone().unwrap();
        assert!(raw[0] / raw[1] < 1.0, "{raw:?}");
    }

    #[test]
    fn budget_and_monotonicity() {
        let oracle = CountingOracle::new(product(&[1, 3, 2]));
        let mut s = RefinementState::<f64>::init_isotropic(3, 3.0, &oracle, Space::Hyperbolic, 1500).unwrap();
        let mut last_lambda = s.lambda.clone();
        let mut last_count = s.node_count();
        while let StepOutcome::Refined { new_nodes } = s.refine_once(&RefineMode::Adaptive, &oracle).unwrap() {
            assert!(new_nodes > 0);
            assert!(s.node_count() > last_count);
            assert!(last_lambda.is_subset(&s.lambda));
            assert!(is_lower(s.lambda.indices()));
            assert_eq!(s.grid.theta(), &optimal_tensors(&s.lambda));
            last_lambda = s.lambda.clone();
            last_count = s.node_count();
        }
        assert!(s.node_count() <= 1500);
        assert_eq!(oracle.points(), s.node_count());
    }

    #[test]
    fn analytic_one_equals_isotropic() {
        let oracle = product(&[2, 3]);
        let mut a = RefinementState::<f64>::init_isotropic(2, 3.0, &oracle, Space::Hyperbolic, 2000).unwrap();
        let mut b = a.clone();
        a.run(&RefineMode::Analytic(vec![1.0, 1.0]), &oracle).unwrap();
        b.run(&RefineMode::Isotropic, &oracle).unwrap();
        assert_eq!(a.history, b.history);
        assert!(b.history.iter().all(|r| r.alpha_used == vec![1.0, 1.0]));
    }

    #[test]
    fn analytic_incremental_matches_batch() {
        let oracle = product(&[1, 2]);
        let alpha = [3.0, 4.0];
        for space in [Space::Hyperbolic, Space::TotalDegree] {
            let mut s = RefinementState::<f64>::init_isotropic(2, 3.0, &oracle, space, 3000).unwrap();
            let lambda0 = s.lambda.clone();
            let mut levels = Vec::new();
            while let StepOutcome::Refined { .. } =
                s.refine_once(&RefineMode::Analytic(alpha.to_vec()), &oracle).unwrap()
            {
                levels.push(s.level);
                let normalized = [1.0, 4.0 / 3.0];
                let batch = space.index_set(&normalized, s.level).unwrap().union(&lambda0).unwrap();
                assert_eq!(s.lambda, batch, "{space:?} L={}", s.level);
                assert_eq!(s.grid.node_indices(), node_set(&optimal_tensors(&batch)));
            }
            assert!(levels.windows(2).all(|w| w[0] < w[1]), "{levels:?}");
        }
    }

    #[test]
    fn oracle_failure_leaves_state() {
        struct Failing;
        impl Oracle for Failing {
            fn dim(&self) -> usize {
                2
            }
            fn evaluate(&self, points: &[Vec<f64>]) -> std::result::Result<Vec<f64>, OracleError> {
                Err(OracleError::new("down").at(&points[0]))
            }
        }
        let mut s = RefinementState::<f64>::init_isotropic(2, 3.0, &product(&[1, 1]), Space::Hyperbolic, 500).unwrap();
        let before = (s.lambda.clone(), s.node_count(), s.history.len());
        let err = s.refine_once(&RefineMode::Adaptive, &Failing).unwrap_err();
        assert!(matches!(err, Error::Oracle(ref e) if e.point.is_some()));
        assert_eq!((s.lambda.clone(), s.node_count(), s.history.len()), before);
    }

    #[test]
    fn underdetermined_fit_falls_back() {
        // a constant target has a single nonzero weight
        let oracle = BuiltinModel::Constant { dim: 2, value: 1.0 }.oracle();
        let mut s = RefinementState::<f64>::init_isotropic(2, 3.0, &oracle, Space::Hyperbolic, 200).unwrap();
        s.refine_once(&RefineMode::Adaptive, &oracle).unwrap();
        let r = &s.history[1];
        assert!(r.warning.as_deref().unwrap().contains("underdetermined"), "{r:?}");
        assert_eq!(r.alpha_used, vec![1.0, 1.0]);
    }

    #[test]
    fn min_new_nodes_groups_steps() {
        let oracle = product(&[1, 2]);
        let mut a = RefinementState::<f64>::init_isotropic(2, 3.0, &oracle, Space::Hyperbolic, 5000).unwrap();
        a.min_new_nodes = 200;
        a.refine_once(&RefineMode::Isotropic, &oracle).unwrap();
        assert!(a.history[1].new_nodes >= 200);
    }

    #[test]
    fn metadata_round_trip() {
        let oracle = product(&[1, 2]);
        let mut s = RefinementState::<f64>::init_isotropic(2, 3.0, &oracle, Space::Hyperbolic, 300).unwrap();
        s.run(&RefineMode::Adaptive, &oracle).unwrap();
        let meta: StateMetadata = serde_json::from_value(serde_json::to_value(s.metadata()).unwrap()).unwrap();
        let back = RefinementState::from_parts(s.grid.clone(), meta, s.history.clone()).unwrap();
        assert_eq!(back.lambda, s.lambda);
        assert_eq!(back.level, s.level);
        let json = serde_json::to_string(&RefineMode::Analytic(vec![3.0, 5.0])).unwrap();
        assert_eq!(json, r#"{"kind":"analytic","alpha":[3.0,5.0]}"#);
    }
}
