//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::f64::consts::TAU;
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use rand_pcg::rand_core::{Rng, SeedableRng};
use rand_pcg::Pcg64;

use sparsetrig::anisotropy::FitSystem;
use sparsetrig::index_sets::lower_completion;
use sparsetrig::metrics::{convergence_slope, uniform_open, ValidationSet, DEFAULT_SEED, VALIDATION_POINTS};
use sparsetrig::models::external::{ExternalModel, ExternalModelSpec};
use sparsetrig::models::poly::{boundary_derivative_mismatch, g_k, sup_norm};
use sparsetrig::models::{BuiltinModel, Domain, ModelOracle, NoisyOracle};
use sparsetrig::sparse_grid::{combination_coefficients, node_set, optimal_tensors};
use sparsetrig::study::{run_arm, Arm, StudyConfig, StudyOutcome};
use sparsetrig::tensor_rule::{dft_coefficients, tensor_nodes};
use sparsetrig::trig_basis::sigma;
use sparsetrig::{Complex, LowerSet, MultiIndex, RefineMode, RefinementState, Space, SparseGrid};

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome {
            pass,
            detail: detail.into(),
        }
    }
}

fn run(id: u32, name: &str, limit: Duration, check: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = check();
    let elapsed = start.elapsed();
    let in_time = elapsed <= limit;
    let pass = outcome.pass && in_time;
    let timing = if in_time {
        format!("{:.1}s", elapsed.as_secs_f64())
    } else {
        format!("{:.1}s, over the {}s limit", elapsed.as_secs_f64(), limit.as_secs())
    };
    println!(
        "criterion {id:>2} [{}] {name}: {} ({timing})",
        if pass { "PASS" } else { "FAIL" },
        outcome.detail
    );
    pass
}

/// Random lower set of exactly `size` indices, grown one frontier element at
/// a time.
fn random_lower_set(rng: &mut Pcg64, dim: usize, size: usize) -> LowerSet {
    let mut set = lower_completion(dim, [MultiIndex::zero(dim)]).unwrap();
    while set.len() < size {
        let frontier: Vec<MultiIndex> = set.frontier().into_iter().collect();
        let pick = frontier[(rng.next_u64() % frontier.len() as u64) as usize].clone();
        set = LowerSet::new(dim, set.iter().cloned().chain([pick])).unwrap();
    }
    set
}

fn random_point(rng: &mut Pcg64, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| uniform_open(rng)).collect()
}

fn lower_set_cases(max_dim: usize, max_size: usize) -> impl Strategy<Value = (usize, usize, u64)> {
    (1..=max_dim, 1..=max_size, any::<u64>())
}

fn property(
    cases: u32,
    max_dim: usize,
    max_size: usize,
    test: impl Fn(usize, usize, u64) -> Result<(), TestCaseError>,
) -> Outcome {
    let mut runner = TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    });
    match runner.run(&lower_set_cases(max_dim, max_size), |(d, n, seed)| test(d, n, seed)) {
        Ok(()) => Outcome::new(true, format!("{cases} random lower sets")),
        Err(e) => Outcome::new(false, e.to_string()),
    }
}

fn exactness() -> Outcome {
    property(200, 3, 20, |dim, size, seed| {
        let mut rng = Pcg64::seed_from_u64(seed);
        let lambda = random_lower_set(&mut rng, dim, size);
        let theta = optimal_tensors(&lambda);
        let points: Vec<Vec<f64>> = (0..20).map(|_| random_point(&mut rng, dim)).collect();
        for label in node_set(&theta).iter() {
            let freq: Vec<f64> = label.as_slice().iter().map(|&j| sigma(j) as f64).collect();
            let phase = |x: &[f64]| TAU * freq.iter().zip(x).map(|(f, x)| f * x).sum::<f64>();
            for part in [f64::cos, f64::sin] {
                let grid = SparseGrid::<f64>::from_fn(&theta, |x| part(phase(x))).unwrap();
                for x in &points {
                    let err = (grid.eval(x) - part(phase(x))).abs();
                    prop_assert!(err <= 1e-9, "label {:?} at {:?}: error {:e}", label.as_slice(), x, err);
                }
            }
        }
        Ok(())
    })
}

fn combination_identity() -> Outcome {
    property(500, 5, 40, |dim, size, seed| {
        let mut rng = Pcg64::seed_from_u64(seed);
        let theta = random_lower_set(&mut rng, dim, size);
        let t = combination_coefficients(&theta);
        for j in theta.iter() {
            let sum: i64 = t.iter().filter(|(i, _)| j.le(i.as_slice())).map(|(_, c)| c).sum();
            prop_assert_eq!(sum, 1, "at {:?}", j.as_slice());
        }
        Ok(())
    })
}

fn anisotropy_recovery() -> Outcome {
    let mut rng = Pcg64::seed_from_u64(DEFAULT_SEED);
    let mut worst = 0.0f64;
    for draw in 0..50 {
        let dim = 1 + (rng.next_u64() % 4) as usize;
        let c = [0.1, 1.0, 10.0][(rng.next_u64() % 3) as usize];
        let alpha: Vec<f64> = (0..dim).map(|_| 1.0 + 7.0 * uniform_open(&mut rng)).collect();
        let box_set = lower_completion(dim, [MultiIndex::new(vec![6; dim])]).unwrap();
        let weights: Vec<(MultiIndex, Complex<f64>)> = box_set
            .iter()
            .map(|j| {
                let magnitude = c * j
                    .as_slice()
                    .iter()
                    .zip(&alpha)
                    .map(|(&n, a)| (sigma(n).unsigned_abs() as f64 + 1.0).powf(-a))
                    .product::<f64>();
                (j.clone(), Complex::from_polar(magnitude, TAU * uniform_open(&mut rng)))
            })
            .collect();
        let fit = FitSystem::build(dim, weights.iter().map(|(j, w)| (j, w)), Space::Hyperbolic).and_then(|s| s.solve());
        let fit = match fit {
            Ok(f) => f,
            Err(e) => return Outcome::new(false, format!("draw {draw}: {e}")),
        };
        for (got, want) in fit.alpha.iter().zip(&alpha) {
            worst = worst.max((got - want).abs() / want);
        }
        worst = worst.max((fit.cbar + c.ln()).abs());
    }
    Outcome::new(worst <= 1e-6, format!("50 draws, worst relative error {worst:.2e}"))
}

fn adaptive_hyperbolic() -> Arm {
    Arm::Refinement {
        space: Space::Hyperbolic,
        mode: RefineMode::Adaptive,
    }
}

fn study(model: &BuiltinModel, arm: &Arm, budget: usize) -> (StudyOutcome, Duration) {
    let start = Instant::now();
    let oracle = model.oracle();
    let validation = ValidationSet::new(model.dim(), VALIDATION_POINTS, DEFAULT_SEED)
        .with_reference(&oracle)
        .unwrap();
    let config = StudyConfig {
        budget,
        ..StudyConfig::default()
    };
    let out = run_arm(&oracle, arm, &config, &validation).unwrap();
    (out, start.elapsed())
}

fn table_ratios() -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for (orders, expected) in [([1u8, 2], 0.72), ([1, 4], 0.49), ([2, 5], 0.62)] {
        let (out, elapsed) = study(
            &BuiltinModel::Product {
                orders: orders.to_vec(),
            },
            &adaptive_hyperbolic(),
            10_000,
        );
        let ratio = out.final_alpha_raw().map(|a| a[0] / a[1]).unwrap_or(f64::NAN);
        let ok = (ratio - expected).abs() <= 0.10 && elapsed <= Duration::from_secs(300);
        pass &= ok;
        detail.push(format!(
            "f{orders:?} ratio {ratio:.3} vs {expected} at {} nodes{}",
            out.last().unwrap().nodes,
            if ok { "" } else { " (out of band)" }
        ));
    }
    Outcome::new(pass, detail.join("; "))
}

fn isotropic_rate() -> Outcome {
    let arm = Arm::Refinement {
        space: Space::Hyperbolic,
        mode: RefineMode::Isotropic,
    };
    let (out, _) = study(&BuiltinModel::Product { orders: vec![1, 1, 1] }, &arm, 100_000);
    let slope = convergence_slope(&out.curve(), true).unwrap_or(f64::NAN);
    Outcome::new(
        slope <= -1.6,
        format!(
            "slope {slope:.3} (needs <= -1.6) over {} iterations up to {} nodes",
            out.rows.len(),
            out.last().unwrap().nodes
        ),
    )
}

fn adaptive_matches_analytic() -> Outcome {
    let model = BuiltinModel::Anisotropic6d;
    let (adaptive, _) = study(&model, &adaptive_hyperbolic(), 20_000);
    let analytic_arm = Arm::Refinement {
        space: Space::Hyperbolic,
        mode: RefineMode::Analytic(model.true_alpha().unwrap()),
    };
    let (analytic, _) = study(&model, &analytic_arm, 20_000);
    let (ea, eb) = (adaptive.last().unwrap().max_error, analytic.last().unwrap().max_error);
    let factor = ea.max(eb) / ea.min(eb);
    let expected = [3.00, 3.53, 4.35, 5.58, 5.70, 5.73];
    let raw = adaptive.final_alpha_raw().unwrap_or(&[]);
    let scaled: Vec<f64> = raw.iter().map(|a| 3.0 * a / raw[0]).collect();
    let alpha_ok = scaled.len() == 6 && scaled.iter().zip(expected).all(|(a, p)| (a - p).abs() <= 0.8);
    let shown: Vec<String> = scaled.iter().map(|a| format!("{a:.2}")).collect();
    Outcome::new(
        factor <= 3.0 && alpha_ok,
        format!(
            "errors {ea:.3e} (adaptive, {} nodes) vs {eb:.3e} (analytic, {} nodes), factor {factor:.2}; scaled alpha ({}) vs {expected:?} +-0.8{}",
            adaptive.last().unwrap().nodes,
            analytic.last().unwrap().nodes,
            shown.join(", "),
            if alpha_ok { "" } else { " (out of band)" }
        ),
    )
}

fn pib() -> Outcome {
    let model = BuiltinModel::Pib;
    let (adaptive, _) = study(&model, &adaptive_hyperbolic(), 5_000);
    let analytic_arm = Arm::Refinement {
        space: Space::Hyperbolic,
        mode: RefineMode::Analytic(model.true_alpha().unwrap()),
    };
    let (analytic, _) = study(&model, &analytic_arm, 5_000);
    let isotropic_arm = Arm::Refinement {
        space: Space::Hyperbolic,
        mode: RefineMode::Isotropic,
    };
    let (isotropic, _) = study(&model, &isotropic_arm, 5_000);
    let ratio = adaptive.final_alpha_raw().map(|a| a[0] / a[1]).unwrap_or(f64::NAN);
    let ratio_ok = (0.5..=0.72).contains(&ratio);
    let gain = |arm: &StudyOutcome| {
        let last = arm.last().unwrap();
        isotropic.max_error_at(last.nodes).unwrap_or(f64::NAN) / last.max_error
    };
    let (ga, gn) = (gain(&adaptive), gain(&analytic));
    Outcome::new(
        ratio_ok && ga >= 5.0 && gn >= 5.0,
        format!(
            "ratio {ratio:.3} (needs [0.5, 0.72]); isotropic/adaptive {ga:.2}, isotropic/analytic {gn:.2} (need >= 5) at {} / {} / {} nodes",
            adaptive.last().unwrap().nodes,
            analytic.last().unwrap().nodes,
            isotropic.last().unwrap().nodes
        ),
    )
}

fn periodicity() -> Outcome {
    let step = BigRational::new(BigInt::from(1), BigInt::from(10_000));
    let mut detail = Vec::new();
    let mut pass = true;
    for k in 1u8..=5 {
        let one = BigRational::from_integer(BigInt::from(1));
        let exact = g_k(k, one.clone()).unwrap() == g_k(k, -one).unwrap();
        let norm = sup_norm(k).unwrap();
        let matched = (0..=u32::from(k))
            .map(|m| boundary_derivative_mismatch(k, m, &step).unwrap() / norm)
            .fold(0.0, f64::max);
        let jump = boundary_derivative_mismatch(k, u32::from(k) + 1, &step).unwrap() / norm;
        let ok = exact && matched <= 1e-5 && jump > 1e-2;
        pass &= ok;
        detail.push(format!("h{k}: match {matched:.1e}, jump {jump:.1e}"));
    }
    Outcome::new(pass, detail.join("; "))
}

fn direct_dft(level: &MultiIndex, samples: &[f64]) -> Vec<(Vec<u32>, Complex<f64>)> {
    let nodes = tensor_nodes::<f64>(level);
    let n = nodes.len() as f64;
    let coeffs = dft_coefficients(level, samples).unwrap();
    coeffs
        .iter()
        .map(|(nu, _)| {
            let sum: Complex<f64> = nodes
                .iter()
                .zip(samples)
                .map(|(x, &f)| {
                    let phase: f64 = nu.iter().zip(x).map(|(&j, &x)| sigma(j) as f64 * x).sum();
                    Complex::from_polar(f, -TAU * phase)
                })
                .sum();
            (nu, sum / n)
        })
        .collect()
}

fn dft_equivalence() -> Outcome {
    let mut rng = Pcg64::seed_from_u64(DEFAULT_SEED);
    let mut levels: Vec<MultiIndex> = (0..=5).map(|l| MultiIndex::new(vec![l])).collect();
    for _ in 0..10 {
        levels.push(MultiIndex::new((0..2).map(|_| (rng.next_u64() % 4) as u32).collect()));
        levels.push(MultiIndex::new((0..3).map(|_| (rng.next_u64() % 3) as u32).collect()));
    }
    let mut worst = 0.0f64;
    for level in &levels {
        let count: usize = level.as_slice().iter().map(|&l| 3usize.pow(l)).product();
        let samples: Vec<f64> = (0..count).map(|_| 2.0 * uniform_open(&mut rng) - 1.0).collect();
        let fast = dft_coefficients(level, &samples).unwrap();
        let direct = direct_dft(level, &samples);
        let scale = direct.iter().map(|(_, c)| c.norm()).fold(0.0, f64::max);
        for (nu, c) in &direct {
            worst = worst.max((fast.get(nu) - c).norm() / scale);
        }
    }
    Outcome::new(
        worst <= 1e-11,
        format!(
            "{} tensors (1D m = 1..243, random 2D/3D), worst relative deviation {worst:.2e}",
            levels.len()
        ),
    )
}

fn sample_reuse() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("echo.sh");
    let log = dir.path().join("requests.log");
    std::fs::write(
        &script,
        format!(
            "#!/bin/sh\ncat \"$1\" >> '{}'\ncut -d, -f1 \"$1\" > \"$2\"\n",
            log.display()
        ),
    )
    .unwrap();
    let domain = Domain::symmetric(2);
    let spec = ExternalModelSpec::command(
        vec!["sh".into(), script.display().to_string()],
        domain.clone(),
        dir.path().join("work"),
    );
    let model = Arc::new(ExternalModel::new(spec).unwrap());
    let oracle = ModelOracle::new(domain, Box::new(model.clone())).unwrap();

    let mut state = RefinementState::<f64>::init_isotropic(2, 3.0, &oracle, Space::Hyperbolic, 400).unwrap();
    state.refine_once(&RefineMode::Adaptive, &oracle).unwrap();
    state.refine_once(&RefineMode::Adaptive, &oracle).unwrap();
    state.run(&RefineMode::Analytic(vec![1.0, 2.0]), &oracle).unwrap();
    let path = dir.path().join("grid.json");
    state.grid.save(&path, serde_json::json!({})).unwrap();
    let (grid, _) = SparseGrid::<f64>::load(&path).unwrap();
    let mut resumed = RefinementState::from_parts(grid, state.metadata(), state.history.clone()).unwrap();
    resumed.budget = 1500;
    resumed.run(&RefineMode::Isotropic, &oracle).unwrap();
    resumed.space = Space::TotalDegree;
    resumed.budget = 2500;
    resumed.run(&RefineMode::Adaptive, &oracle).unwrap();

    let final_nodes = resumed.grid.node_count();
    let requested = model.rows_requested();
    let logged = std::fs::read_to_string(&log).unwrap().lines().count();
    let echo_ok = resumed
        .grid
        .node_coordinates()
        .iter()
        .zip(resumed.grid.samples())
        .all(|(u, &v)| (v - (2.0 * u[0] - 1.0)).abs() <= 1e-15);
    Outcome::new(
        requested == final_nodes && logged == final_nodes && echo_ok,
        format!("{requested} rows requested, {logged} rows seen by the backend, final node count {final_nodes}"),
    )
}

fn noisy_rmse_smoke() -> Outcome {
    let amplitude = 1e-3;
    let model = BuiltinModel::Product { orders: vec![1, 1] };
    let oracle = NoisyOracle::new(model.oracle(), amplitude, 7);
    let validation = ValidationSet::new(2, VALIDATION_POINTS, DEFAULT_SEED);
    let arm = Arm::Refinement {
        space: Space::Hyperbolic,
        mode: RefineMode::Isotropic,
    };
    let config = StudyConfig {
        budget: 20_000,
        ..StudyConfig::default()
    };
    let out = run_arm(&oracle, &arm, &config, &validation).unwrap();
    // uniform noise on [-a, a] has standard deviation a / sqrt(3)
    let floor = amplitude / 3f64.sqrt();
    let last = out.last().unwrap().rmse;
    let tail: Vec<f64> = out.rows.iter().rev().take(3).map(|r| r.rmse).collect();
    let flat = tail.iter().fold(0.0f64, |m, &r| m.max(r)) <= 2.0 * tail.iter().fold(f64::INFINITY, |m, &r| m.min(r));
    Outcome::new(
        last >= floor && last <= 3.0 * floor && flat,
        format!(
            "final rmse {last:.3e}, noise floor {floor:.3e}, last three {}",
            tail.iter().map(|r| format!("{r:.3e}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

fn main() {
    let minutes = |m: u64| Duration::from_secs(60 * m);
    let secs = Duration::from_secs;
    let results = [
        run(1, "exactness on random lower sets", secs(60), exactness),
        run(2, "combination-coefficient identity", secs(10), combination_identity),
        run(
            3,
            "anisotropy recovery on power-law weights",
            secs(5),
            anisotropy_recovery,
        ),
        run(4, "anisotropy ratios of 2D products", minutes(15), table_ratios),
        run(5, "isotropic convergence rate of f(1,1,1)", minutes(10), isotropic_rate),
        run(
            6,
            "adaptive vs analytic on the 6D target",
            minutes(15),
            adaptive_matches_analytic,
        ),
        run(7, "particle-in-a-box anisotropy", minutes(10), pib),
        run(8, "periodicity class of h_k", secs(5), periodicity),
        run(9, "fast vs direct DFT", secs(30), dft_equivalence),
        run(10, "sample reuse with the echo backend", secs(30), sample_reuse),
    ];
    let smoke = noisy_rmse_smoke();
    println!(
        "smoke        [{}] noisy f(1,1) rmse stays at the noise floor: {}",
        if smoke.pass { "PASS" } else { "FAIL" },
        smoke.detail
    );
    let failed = results.iter().filter(|&&ok| !ok).count() + usize::from(!smoke.pass);
    println!(
        "{} of {} criteria passed",
        results.iter().filter(|&&ok| ok).count(),
        results.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
