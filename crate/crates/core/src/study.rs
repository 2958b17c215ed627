//! Convergence studies: refinement runs with error tracking, and the
//! full-tensor baseline.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::adaptive::{IterationRecord, RefineMode, RefinementState};
use crate::index_sets::lower_completion;
use crate::metrics::{errors, ValidationSet};
use crate::sparse_grid::node_count;
use crate::{Error, MultiIndex, Oracle, Result, Space, SparseGrid};

/// One strategy in a side-by-side comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "kebab-case")]
pub enum Arm {
    Refinement {
        space: Space,
        mode: RefineMode,
    },
    /// Single tensors `(l, ..., l)` for `l = 0, 1, 2, ...`.
    FullTensor,
}

impl Arm {
    pub fn label(&self) -> String {
        match self {
            Arm::Refinement { space, mode } => format!("{}-{}", space.name(), mode.name()),
            Arm::FullTensor => "full-tensor".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub l0: f64,
    pub budget: usize,
    pub min_new_nodes: usize,
    /// Errors are measured after an iteration only once the node count has
    /// grown by this factor since the last measurement (1 = every
    /// iteration). The final grid is always measured.
    pub error_growth: f64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            l0: crate::adaptive::DEFAULT_L0,
            budget: 10_000,
            min_new_nodes: 1,
            error_growth: 1.0,
        }
    }
}

/// One measured point of a convergence curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub iteration: usize,
    pub nodes: usize,
    pub max_error: f64,
    pub rmse: f64,
    pub alpha: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct StudyOutcome {
    pub label: String,
    pub rows: Vec<StudyRow>,
    /// Full refinement history (empty for the full-tensor ladder).
    pub history: Vec<IterationRecord>,
}

impl StudyOutcome {
    pub fn last(&self) -> Option<&StudyRow> {
        self.rows.last()
    }

    /// Last fitted (unstabilized) rates, if any fit was made.
    pub fn final_alpha_raw(&self) -> Option<&[f64]> {
        self.history.iter().rev().find_map(|r| r.alpha_raw.as_deref())
    }

    /// Error of the last row with at most `nodes` nodes.
    pub fn max_error_at(&self, nodes: usize) -> Option<f64> {
        self.rows.iter().rev().find(|r| r.nodes <= nodes).map(|r| r.max_error)
    }

    /// `(nodes, max_error)` pairs for slope fits.
    pub fn curve(&self) -> Vec<(usize, f64)> {
        self.rows.iter().map(|r| (r.nodes, r.max_error)).collect()
    }
}

/// Runs one arm up to the configured budget.
pub fn run_arm<O: Oracle + ?Sized>(
    oracle: &O,
    arm: &Arm,
    config: &StudyConfig,
    validation: &ValidationSet,
) -> Result<StudyOutcome> {
    let dim = oracle.dim();
    match arm {
        Arm::FullTensor => full_tensor_ladder(oracle, config.budget, validation),
        Arm::Refinement { space, mode } => {
            let mut state = RefinementState::<f64>::init_isotropic(dim, config.l0, oracle, *space, config.budget)?;
            state.min_new_nodes = config.min_new_nodes;
            let first = errors(&state.grid, oracle, validation)?;
            let mut rows = vec![StudyRow {
                iteration: 0,
                nodes: state.node_count(),
                max_error: first.max_error,
                rmse: first.rmse,
                alpha: vec![1.0; dim],
            }];
            if let Some(r) = state.history.first_mut() {
                r.max_error = Some(first.max_error);
                r.rmse = Some(first.rmse);
            }
            let mut measured_at = state.node_count();
            state.run_with(mode, oracle, |grid, record| {
                if (grid.node_count() as f64) >= config.error_growth * measured_at as f64 {
                    let e = errors(grid, oracle, validation)?;
                    record.max_error = Some(e.max_error);
                    record.rmse = Some(e.rmse);
                    measured_at = grid.node_count();
                }
                Ok(())
            })?;
            // always measure the final grid
            let last = state.history.last_mut().expect("history starts with the initial grid");
            if last.max_error.is_none() {
                let e = errors(&state.grid, oracle, validation)?;
                last.max_error = Some(e.max_error);
                last.rmse = Some(e.rmse);
            }
            rows.extend(state.history.iter().skip(1).filter_map(|r| {
                Some(StudyRow {
                    iteration: r.iteration,
                    nodes: r.node_count,
                    max_error: r.max_error?,
                    rmse: r.rmse?,
                    alpha: r.alpha_raw.clone().unwrap_or_else(|| r.alpha_used.clone()),
                })
            }));
            Ok(StudyOutcome {
                label: arm.label(),
                rows,
                history: state.history,
            })
        }
    }
}

/// Full tensors `(l, ..., l)` while their node count fits the budget.
pub fn full_tensor_ladder<O: Oracle + ?Sized>(
    oracle: &O,
    budget: usize,
    validation: &ValidationSet,
) -> Result<StudyOutcome> {
    let dim = oracle.dim();
    let mut grid = SparseGrid::<f64>::empty(dim);
    let mut rows = Vec::new();
    for level in 0u32.. {
        let theta = lower_completion(dim, [MultiIndex::new(vec![level; dim])])?;
        if node_count(&theta) > budget {
            break;
        }
        grid.refine(&theta, oracle)?;
        let e = errors(&grid, oracle, validation)?;
        rows.push(StudyRow {
            iteration: level as usize,
            nodes: grid.node_count(),
            max_error: e.max_error,
            rmse: e.rmse,
            alpha: vec![1.0; dim],
        });
    }
    if rows.is_empty() {
        return Err(Error::BudgetExhaustedAtInit { budget, initial: 1 });
    }
    Ok(StudyOutcome {
        label: Arm::FullTensor.label(),
        rows,
        history: Vec::new(),
    })
}

/// Headered CSV: `iteration,nodes,max_error,rmse,alpha_1,...,alpha_d`.
pub fn write_csv<W: Write>(out: &mut W, rows: &[StudyRow], dim: usize) -> std::io::Result<()> {
    write!(out, "iteration,nodes,max_error,rmse")?;
    for k in 1..=dim {
        write!(out, ",alpha_{k}")?;
    }
    writeln!(out)?;
    for r in rows {
        write!(out, "{},{},{:.17e},{:.17e}", r.iteration, r.nodes, r.max_error, r.rmse)?;
        for a in &r.alpha {
            write!(out, ",{a:.17e}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}
