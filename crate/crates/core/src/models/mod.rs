//! Target functions and the oracle boundary.
//!
//! The interpolation core only ever sees [`Oracle`]s, which evaluate batches
//! of points in the unit cube. [`ModelOracle`] maps those points affinely onto
//! a model's own domain before evaluation.

pub mod external;
pub mod pib;
pub mod poly;

use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};

use rand_pcg::rand_core::{Rng, SeedableRng};
use rand_pcg::Pcg64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{Error, Result};

pub use external::{ExternalModel, ExternalModelSpec};
pub use pib::PibTarget;

/// Failure to evaluate the target; carries the offending point when known.
#[derive(Debug, Clone, Error)]
pub struct OracleError {
    pub message: String,
    pub point: Option<Vec<f64>>,
}

impl OracleError {
    pub fn new(message: impl Into<String>) -> Self {
        OracleError {
            message: message.into(),
            point: None,
        }
    }

    pub fn at(mut self, point: &[f64]) -> Self {
        self.point = Some(point.to_vec());
        self
    }
}

impl fmt::Display for OracleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "oracle failure: {}", self.message)?;
        if let Some(p) = &self.point {
            write!(f, " at point {p:?}")?;
        }
        Ok(())
    }
}

/// Batched evaluator on the unit cube `[0,1]^d`. Results are returned in
/// request order.
pub trait Oracle: Send + Sync {
    fn dim(&self) -> usize;

    fn evaluate(&self, points: &[Vec<f64>]) -> Result<Vec<f64>, OracleError>;
}

/// Batched evaluator on the model's own domain coordinates.
pub trait Model: Send + Sync {
    fn dim(&self) -> usize;

    fn evaluate_batch(&self, points: &[Vec<f64>]) -> Result<Vec<f64>, OracleError>;
}

impl<M: Model + ?Sized> Model for std::sync::Arc<M> {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn evaluate_batch(&self, points: &[Vec<f64>]) -> Result<Vec<f64>, OracleError> {
        (**self).evaluate_batch(points)
    }
}

/// Axis-aligned box `[a_1,b_1] x ... x [a_d,b_d]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub bounds: Vec<(f64, f64)>,
}

impl Domain {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::InvalidArgument("domain needs at least one dimension".into()));
        }
        if let Some((k, b)) = bounds.iter().enumerate().find(|(_, (a, b))| !(a < b)) {
            return Err(Error::InvalidArgument(format!("domain interval {k} is empty: {b:?}")));
        }
        Ok(Domain { bounds })
    }

    pub fn unit(dim: usize) -> Self {
        Domain {
            bounds: vec![(0.0, 1.0); dim],
        }
    }

    pub fn symmetric(dim: usize) -> Self {
        Domain {
            bounds: vec![(-1.0, 1.0); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn to_domain(&self, unit: &[f64]) -> Vec<f64> {
        unit.iter()
            .zip(&self.bounds)
            .map(|(u, (a, b))| a + (b - a) * u)
            .collect()
    }

    pub fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.bounds)
            .map(|(x, (a, b))| (x - a) / (b - a))
            .collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(&self.bounds).all(|(x, (a, b))| a <= x && x <= b)
    }
}

/// Pointwise model from a closure, evaluated in parallel.
pub struct FnModel<F> {
    dim: usize,
    f: F,
}

impl<F> FnModel<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        FnModel { dim, f }
    }
}

impl<F> Model for FnModel<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn evaluate_batch(&self, points: &[Vec<f64>]) -> Result<Vec<f64>, OracleError> {
        points
            .par_iter()
            .map(|p| {
                if p.len() != self.dim {
                    return Err(OracleError::new(format!("expected {} coordinates, got {}", self.dim, p.len())).at(p));
                }
                Ok((self.f)(p))
            })
            .collect()
    }
}

/// A model together with the domain the unit cube is mapped onto.
pub struct ModelOracle {
    domain: Domain,
    model: Box<dyn Model>,
}

impl ModelOracle {
    pub fn new(domain: Domain, model: Box<dyn Model>) -> Result<Self> {
        if domain.dim() != model.dim() {
            return Err(Error::DimensionMismatch {
                expected: model.dim(),
                actual: domain.dim(),
            });
        }
        Ok(ModelOracle { domain, model })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }
}

impl Oracle for ModelOracle {
    fn dim(&self) -> usize {
        self.domain.dim()
    }

    fn evaluate(&self, points: &[Vec<f64>]) -> Result<Vec<f64>, OracleError> {
        let mapped: Vec<Vec<f64>> = points.iter().map(|u| self.domain.to_domain(u)).collect();
        self.model.evaluate_batch(&mapped)
    }
}

/// Counts every point passed through to the wrapped oracle.
pub struct CountingOracle<O> {
    inner: O,
    points: AtomicUsize,
    batches: AtomicUsize,
}

impl<O: Oracle> CountingOracle<O> {
    pub fn new(inner: O) -> Self {
        CountingOracle {
            inner,
            points: AtomicUsize::new(0),
            batches: AtomicUsize::new(0),
        }
    }

    pub fn points(&self) -> usize {
        self.points.load(Ordering::SeqCst)
    }

    pub fn batches(&self) -> usize {
        self.batches.load(Ordering::SeqCst)
    }

    pub fn inner(&self) -> &O {
        &self.inner
    }
}

impl<O: Oracle> Oracle for CountingOracle<O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn evaluate(&self, points: &[Vec<f64>]) -> Result<Vec<f64>, OracleError> {
        self.points.fetch_add(points.len(), Ordering::SeqCst);
        self.batches.fetch_add(1, Ordering::SeqCst);
        self.inner.evaluate(points)
    }
}

impl<O: Oracle + ?Sized> Oracle for Box<O> {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn evaluate(&self, points: &[Vec<f64>]) -> Result<Vec<f64>, OracleError> {
        (**self).evaluate(points)
    }
}

impl<O: Oracle + ?Sized> Oracle for &O {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn evaluate(&self, points: &[Vec<f64>]) -> Result<Vec<f64>, OracleError> {
        (**self).evaluate(points)
    }
}

/// Adds uniform noise in `[-amplitude, amplitude]` to another oracle. The
/// noise is a deterministic function of the seed and the point, so repeated
/// requests for one point agree.
pub struct NoisyOracle<O> {
    inner: O,
    amplitude: f64,
    seed: u64,
}

impl<O: Oracle> NoisyOracle<O> {
    pub fn new(inner: O, amplitude: f64, seed: u64) -> Self {
        NoisyOracle { inner, amplitude, seed }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl<O: Oracle> Oracle for NoisyOracle<O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn evaluate(&self, points: &[Vec<f64>]) -> Result<Vec<f64>, OracleError> {
        let clean = self.inner.evaluate(points)?;
        Ok(clean
            .into_iter()
            .zip(points)
            .map(|(v, p)| {
                let key = p.iter().fold(splitmix64(self.seed), |h, x| splitmix64(h ^ x.to_bits()));
                let mut rng = Pcg64::seed_from_u64(key);
                let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
                v + self.amplitude * (2.0 * u - 1.0)
            })
            .collect())
    }
}

/// The built-in target functions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BuiltinModel {
    /// `prod_k h_{orders_k}(x_k)` on `[-1,1]^d`.
    Product { orders: Vec<u8> },
    /// `h1(x1) h5(x4) + h2(x2) h5(x5) + h3(x3) h5(x6)` on `[-1,1]^6`.
    Anisotropic6d,
    /// Perturbed particle-in-a-box wavefunction on `[0,1]^2`.
    Pib,
    /// Constant function on `[0,1]^dim`.
    Constant { dim: usize, value: f64 },
}

impl BuiltinModel {
    /// Parses `product:1,2`, `anisotropic6d`, `pib`, `constant:<c>` or
    /// `zero`; `dim` is required only by the constant models.
    pub fn parse(name: &str, dim: Option<usize>) -> Result<Self> {
        let (head, arg) = name.split_once(':').unwrap_or((name, ""));
        let model = match head {
            "product" => {
                let orders = arg
                    .split(',')
                    .map(|s| s.trim().parse::<u8>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| Error::InvalidArgument(format!("bad product orders {arg:?}")))?;
                if orders.is_empty() || orders.iter().any(|o| !(1..=5).contains(o)) {
                    return Err(Error::InvalidArgument(format!(
                        "product orders must be in 1..=5, got {arg:?}"
                    )));
                }
                BuiltinModel::Product { orders }
            }
            "anisotropic6d" | "aniso6d" => BuiltinModel::Anisotropic6d,
            "pib" => BuiltinModel::Pib,
            "constant" | "zero" => {
                let value = if head == "zero" {
                    0.0
                } else {
                    arg.parse()
                        .map_err(|_| Error::InvalidArgument(format!("bad constant {arg:?}")))?
                };
                let dim =
                    dim.ok_or_else(|| Error::InvalidArgument(format!("model {name:?} needs an explicit dimension")))?;
                BuiltinModel::Constant { dim, value }
            }
            _ => return Err(Error::InvalidArgument(format!("unknown model {name:?}"))),
        };
        if let Some(d) = dim {
            if d != model.dim() {
                return Err(Error::DimensionMismatch {
                    expected: model.dim(),
                    actual: d,
                });
            }
        }
        Ok(model)
    }

    pub fn dim(&self) -> usize {
        match self {
            BuiltinModel::Product { orders } => orders.len(),
            BuiltinModel::Anisotropic6d => 6,
            BuiltinModel::Pib => 2,
            BuiltinModel::Constant { dim, .. } => *dim,
        }
    }

    pub fn domain(&self) -> Domain {
        match self {
            BuiltinModel::Product { .. } | BuiltinModel::Anisotropic6d => Domain::symmetric(self.dim()),
            BuiltinModel::Pib | BuiltinModel::Constant { .. } => Domain::unit(self.dim()),
        }
    }

    /// Decay rates implied by the smoothness of the target, when known.
    pub fn true_alpha(&self) -> Option<Vec<f64>> {
        match self {
            BuiltinModel::Product { orders } => Some(orders.iter().map(|&o| f64::from(o) + 2.0).collect()),
            BuiltinModel::Anisotropic6d => Some(vec![3.0, 4.0, 5.0, 7.0, 7.0, 7.0]),
            BuiltinModel::Pib => Some(vec![3.0, 5.0]),
            BuiltinModel::Constant { .. } => None,
        }
    }

    pub fn model(&self) -> Box<dyn Model> {
        match self.clone() {
            BuiltinModel::Product { orders } => {
                Box::new(FnModel::new(orders.len(), move |x| poly::product_model(&orders, x)))
            }
            BuiltinModel::Anisotropic6d => Box::new(FnModel::new(6, poly::anisotropic_6d)),
            BuiltinModel::Pib => {
                let target = PibTarget::new(pib::DEFAULT_TRUNCATION);
                Box::new(FnModel::new(2, move |x| target.eval(x[0], x[1])))
            }
            BuiltinModel::Constant { dim, value } => Box::new(FnModel::new(dim, move |_| value)),
        }
    }

    pub fn oracle(&self) -> ModelOracle {
        ModelOracle {
            domain: self.domain(),
            model: self.model(),
        }
    }
}

/// Serializable description of the target, recorded in run manifests.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum ModelSpec {
    Builtin {
        model: BuiltinModel,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        noise: Option<NoiseSpec>,
    },
    External(ExternalModelSpec),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub amplitude: f64,
    pub seed: u64,
}

impl ModelSpec {
    pub fn dim(&self) -> usize {
        match self {
            ModelSpec::Builtin { model, .. } => model.dim(),
            ModelSpec::External(spec) => spec.domain.dim(),
        }
    }

    pub fn domain(&self) -> Domain {
        match self {
            ModelSpec::Builtin { model, .. } => model.domain(),
            ModelSpec::External(spec) => spec.domain.clone(),
        }
    }

    pub fn oracle(&self) -> Result<Box<dyn Oracle>> {
        Ok(match self {
            ModelSpec::Builtin { model, noise: None } => Box::new(model.oracle()),
            ModelSpec::Builtin { model, noise: Some(n) } => {
                Box::new(NoisyOracle::new(model.oracle(), n.amplitude, n.seed))
            }
            ModelSpec::External(spec) => Box::new(ModelOracle::new(
                spec.domain.clone(),
                Box::new(ExternalModel::new(spec.clone())?),
            )?),
        })
    }
}
