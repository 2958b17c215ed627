//! Validation errors and convergence rates.

use rand_pcg::rand_core::{Rng, SeedableRng};
use rand_pcg::Pcg64;
use serde::{Deserialize, Serialize};

use crate::anisotropy::least_squares;
use crate::{Error, Oracle, Result, Scalar, SparseGrid};

/// Default number of validation points.
pub const VALIDATION_POINTS: usize = 2000;

/// Default validation seed.
pub const DEFAULT_SEED: u64 = 0;

/// Finest node lattice that validation points keep away from. Every grid
/// reachable in practice has its nodes on `{ j / 3^16 }^d`.
const AVOID_LEVEL: i32 = 16;
const AVOID_DISTANCE: f64 = 1e-12;

/// Uniform draw from `(0, 1)`: 53 random bits, resampled when zero.
pub fn uniform_open(rng: &mut Pcg64) -> f64 {
    loop {
        let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        if u > 0.0 {
            return u;
        }
    }
}

/// Uniform random points in the unit cube, reproducible from a seed, with
/// precomputed reference values once [`ValidationSet::with_reference`] ran.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationSet {
    pub seed: u64,
    pub points: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<Vec<f64>>,
}

fn on_node_lattice(x: &[f64]) -> bool {
    let scale = 3f64.powi(AVOID_LEVEL);
    x.iter().all(|&u| {
        let s = u * scale;
        (s - s.round()).abs() <= AVOID_DISTANCE * scale
    })
}

impl ValidationSet {
    /// `count` points drawn with PCG64 seeded by `seed`; coordinates are
    /// generated point by point, dimension by dimension.
    pub fn new(dim: usize, count: usize, seed: u64) -> Self {
        let mut rng = Pcg64::seed_from_u64(seed);
        let mut points = Vec::with_capacity(count);
        while points.len() < count {
            let p: Vec<f64> = (0..dim).map(|_| uniform_open(&mut rng)).collect();
            if !on_node_lattice(&p) {
                points.push(p);
            }
        }
        ValidationSet {
            seed,
            points,
            reference: None,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Evaluates the target once at every point.
    pub fn with_reference<O: Oracle + ?Sized>(mut self, oracle: &O) -> Result<Self> {
        self.reference = Some(oracle.evaluate(&self.points)?);
        Ok(self)
    }

    fn reference<O: Oracle + ?Sized>(&self, oracle: &O) -> Result<std::borrow::Cow<'_, [f64]>> {
        Ok(match &self.reference {
            Some(r) => std::borrow::Cow::Borrowed(r.as_slice()),
            None => std::borrow::Cow::Owned(oracle.evaluate(&self.points)?),
        })
    }
}

/// Maximum and root-mean-square deviation over a validation set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorMetrics {
    pub max_error: f64,
    pub rmse: f64,
}

/// Both error measures with a single pass over the points.
pub fn errors<T: Scalar, O: Oracle + ?Sized>(
    grid: &SparseGrid<T>,
    oracle: &O,
    validation: &ValidationSet,
) -> Result<ErrorMetrics> {
    let reference = validation.reference(oracle)?;
    let points: Vec<Vec<T>> = validation
        .points
        .iter()
        .map(|p| p.iter().map(|&x| T::of(x)).collect())
        .collect();
    let values = grid.eval_batch(&points);
    let (max, sum_sq) = values
        .iter()
        .zip(reference.iter())
        .map(|(v, r)| (v.as_f64() - r).abs())
        .fold((0.0f64, 0.0f64), |(m, s), e| (m.max(e), s + e * e));
    let n = values.len().max(1) as f64;
    Ok(ErrorMetrics {
        max_error: max,
        rmse: (sum_sq / n).sqrt(),
    })
}

/// `max_j |f(x_j) - I[f](x_j)|`.
pub fn max_error<T: Scalar, O: Oracle + ?Sized>(
    grid: &SparseGrid<T>,
    oracle: &O,
    validation: &ValidationSet,
) -> Result<f64> {
    errors(grid, oracle, validation).map(|e| e.max_error)
}

/// `sqrt(mean_j (f(x_j) - I[f](x_j))^2)`.
pub fn rmse<T: Scalar, O: Oracle + ?Sized>(
    grid: &SparseGrid<T>,
    oracle: &O,
    validation: &ValidationSet,
) -> Result<f64> {
    errors(grid, oracle, validation).map(|e| e.rmse)
}

/// Least-squares slope of `log(error)` against `log(N)`. With
/// `log_correction` the errors are divided by `log(N)^2` first. Entries with
/// non-positive error (or `N <= 1` when correcting) are skipped.
pub fn convergence_slope(history: &[(usize, f64)], log_correction: bool) -> Result<f64> {
    let usable: Vec<(f64, f64)> = history
        .iter()
        .filter(|(n, e)| *e > 0.0 && e.is_finite() && *n >= 1 && (!log_correction || *n > 1))
        .map(|&(n, e)| {
            let ln = (n as f64).ln();
            let y = if log_correction { e.ln() - 2.0 * ln.ln() } else { e.ln() };
            (ln, y)
        })
        .collect();
    if usable.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "convergence slope needs at least 3 usable points, got {}",
            usable.len()
        )));
    }
    let rows: Vec<Vec<f64>> = usable.iter().map(|(x, _)| vec![1.0, *x]).collect();
    let rhs: Vec<f64> = usable.iter().map(|(_, y)| *y).collect();
    let fit = least_squares(&rows, &rhs)
        .map_err(|_| Error::InvalidArgument("convergence slope needs distinct node counts".into()))?;
    Ok(fit[1])
}
