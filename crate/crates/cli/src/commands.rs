use std::fs;
use std::io::{self, Read, Write};

use serde::Serialize;
use sparsetrig::adaptive::RefineMode;
use sparsetrig::metrics::ValidationSet;
use sparsetrig::models::external::read_points;
use sparsetrig::models::{ModelSpec, NoiseSpec};
use sparsetrig::study::{self, Arm, StudyConfig};
use sparsetrig::{Oracle, RefinementStateF64, Space, SparseGridF64, StepOutcome};

use crate::args::{parse_list, parse_mode, BuildArgs, EvalArgs, RefineArgs, ReportArgs, StudyArgs};
use crate::error::{CliError, CliResult};
use crate::run::{self, GridMetadata, Manifest};

pub fn build(args: &BuildArgs) -> CliResult<()> {
    let spec = args.model.to_spec(run::io_dir(&args.out))?;
    let dim = spec.dim();
    // fail on the budget before any sampling
    let initial = RefinementStateF64::initial_node_count(dim, args.l0, args.space)?;
    if initial > args.budget {
        return Err(sparsetrig::Error::BudgetExhaustedAtInit {
            budget: args.budget,
            initial,
        }
        .into());
    }
    let oracle = spec.oracle()?;
    let mut state = RefinementStateF64::init_isotropic(dim, args.l0, &*oracle, args.space, args.budget)?;
    state.min_new_nodes = args.min_new_nodes;
    let meta = GridMetadata {
        model: spec.clone(),
        state: state.metadata(),
        seed: args.seed,
        l0: args.l0,
    };
    run::save_state(&args.out, &state, &meta)?;
    let history = run::history_path(&args.out);
    if history.exists() {
        fs::remove_file(&history).map_err(CliError::io(format!("cannot replace {}", history.display())))?;
    }
    run::append_history(&history, &state.history)?;
    run::write_json(
        &run::manifest_path(&args.out),
        &Manifest {
            tool_version: env!("CARGO_PKG_VERSION"),
            command: "build",
            grid: &args.out,
            history: &history,
            model: &spec,
            space: args.space,
            l0: args.l0,
            budget: args.budget,
            seed: args.seed,
            min_new_nodes: args.min_new_nodes,
            initial_nodes: state.node_count(),
        },
    )?;
    println!("{}: {} nodes", args.out.display(), state.node_count());
    Ok(())
}

pub fn refine(args: &RefineArgs) -> CliResult<()> {
    let (mut state, meta) = run::load_state(&args.grid)?;
    let mode = parse_mode(&args.mode, args.alpha.as_deref())?;
    if let RefineMode::Analytic(alpha) = &mode {
        if alpha.len() != state.dim() {
            return Err(CliError::input(format!(
                "--alpha has {} values for a {}-dimensional grid",
                alpha.len(),
                state.dim()
            )));
        }
        if alpha.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return Err(CliError::input("--alpha values must be positive"));
        }
    }
    if let Some(budget) = args.budget {
        state.budget = budget;
    }
    if let Some(space) = args.space {
        state.space = space;
    }
    if let Some(n) = args.min_new_nodes {
        state.min_new_nodes = n;
    }
    // per-invocation transport settings are not persisted
    let mut spec = meta.model.clone();
    if let ModelSpec::External(ext) = &mut spec {
        ext.keep_io |= args.keep_io;
        if let Some(jobs) = args.jobs {
            ext.jobs = jobs;
        }
    }
    let oracle = spec.oracle()?;
    let history = run::history_path(&args.grid);
    // persist overrides even when no iteration follows
    run::save_state(&args.grid, &state, &meta)?;
    let mut iterations = 0;
    loop {
        match state.refine_once(&mode, &*oracle)? {
            StepOutcome::Refined { .. } => {
                iterations += 1;
                let record = state.history.last().expect("refinement appends a record");
                if let Some(w) = &record.warning {
                    eprintln!("iteration {}: warning: {w}", record.iteration);
                }
                run::save_state(&args.grid, &state, &meta)?;
                run::append_history(&history, std::slice::from_ref(record))?;
            }
            StepOutcome::BudgetStop { projected, budget } => {
                println!(
                    "{}: {iterations} iterations, {} nodes (next step needs {projected} > budget {budget})",
                    args.grid.display(),
                    state.node_count()
                );
                return Ok(());
            }
        }
    }
}

pub fn eval(args: &EvalArgs) -> CliResult<()> {
    let (grid, value) = SparseGridF64::load(&args.grid)?;
    let domain = match serde_json::from_value::<GridMetadata>(value) {
        Ok(meta) => meta.model.domain(),
        Err(_) => sparsetrig::models::Domain::unit(grid.dim()),
    };
    let text = if args.points.as_os_str() == "-" {
        let mut text = String::new();
        io::stdin()
            .read_to_string(&mut text)
            .map_err(CliError::io("cannot read points from stdin"))?;
        text
    } else {
        fs::read_to_string(&args.points).map_err(CliError::io(format!("cannot read {}", args.points.display())))?
    };
    let points = read_points(&text, grid.dim()).map_err(|e| CliError::input(format!("points: {}", e.message)))?;
    // row numbers refer to non-blank input lines
    let rows: Vec<usize> = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, _)| i + 1)
        .collect();
    let mut unit = Vec::with_capacity(points.len());
    for (x, row) in points.iter().zip(&rows) {
        let x = if domain.contains(x) {
            x.clone()
        } else if args.clamp {
            x.iter()
                .zip(&domain.bounds)
                .map(|(v, (a, b))| v.clamp(*a, *b))
                .collect()
        } else {
            return Err(CliError::input(format!(
                "points: row {row}: {x:?} lies outside the domain {:?} (use --clamp)",
                domain.bounds
            )));
        };
        unit.push(domain.to_unit(&x));
    }
    let values = grid.eval_batch(&unit);
    let mut out = String::with_capacity(values.len() * 24);
    for v in values {
        out.push_str(&format!("{v:.16e}\n"));
    }
    match &args.out {
        Some(path) => fs::write(path, out).map_err(CliError::io(format!("cannot write {}", path.display()))),
        None => io::stdout()
            .lock()
            .write_all(out.as_bytes())
            .map_err(CliError::io("cannot write to stdout")),
    }
}

fn parse_arm(text: &str, analytic: Option<&[f64]>) -> CliResult<Arm> {
    let text = text.trim();
    if text == "full-tensor" {
        return Ok(Arm::FullTensor);
    }
    let (space, mode) = text
        .rsplit_once('-')
        .ok_or_else(|| CliError::input(format!("bad strategy {text:?}: expected <space>-<mode> or full-tensor")))?;
    let space: Space = space
        .parse()
        .map_err(|_| CliError::input(format!("bad strategy {text:?}: unknown space {space:?}")))?;
    let mode = match mode {
        "analytic" => RefineMode::Analytic(
            analytic
                .ok_or_else(|| CliError::input(format!("strategy {text:?} needs --alpha")))?
                .to_vec(),
        ),
        other => parse_mode(other, None)?,
    };
    Ok(Arm::Refinement { space, mode })
}

#[derive(Serialize)]
struct StudyManifest<'a> {
    tool_version: &'static str,
    command: &'static str,
    model: &'a ModelSpec,
    config: &'a StudyConfig,
    seed: u64,
    validation_points: usize,
    arms: Vec<ArmSummary>,
}

#[derive(Serialize)]
struct ArmSummary {
    label: String,
    arm: Arm,
    csv: String,
    final_nodes: usize,
    final_max_error: f64,
    final_rmse: f64,
    final_alpha: Vec<f64>,
}

pub fn study(args: &StudyArgs) -> CliResult<()> {
    let spec = args.model.to_spec(args.out.join("io"))?;
    let (model, noise) = match &spec {
        ModelSpec::Builtin { model, noise } => (model.clone(), *noise),
        ModelSpec::External(_) => {
            return Err(CliError::input(
                "study needs a built-in model for exact reference values",
            ))
        }
    };
    let dim = model.dim();
    let analytic = match &args.alpha {
        Some(text) => Some(parse_list(text, "alpha")?),
        None => model.true_alpha(),
    };
    if let Some(alpha) = &analytic {
        if alpha.len() != dim {
            return Err(CliError::input(format!(
                "--alpha has {} values for a {dim}-dimensional model",
                alpha.len()
            )));
        }
    }
    let arms = args
        .arms
        .iter()
        .filter(|a| !a.trim().is_empty())
        .map(|a| parse_arm(a, analytic.as_deref()))
        .collect::<CliResult<Vec<_>>>()?;
    if arms.is_empty() {
        return Err(CliError::input("--arms lists no strategy"));
    }
    if !(args.error_growth >= 1.0) {
        return Err(CliError::input(format!(
            "--error-growth must be at least 1, got {}",
            args.error_growth
        )));
    }
    let config = StudyConfig {
        l0: args.l0,
        budget: args.budget,
        min_new_nodes: args.min_new_nodes,
        error_growth: args.error_growth,
    };
    if arms.iter().any(|a| matches!(a, Arm::Refinement { .. })) {
        for space in arms.iter().filter_map(|a| match a {
            Arm::Refinement { space, .. } => Some(*space),
            Arm::FullTensor => None,
        }) {
            let initial = RefinementStateF64::initial_node_count(dim, args.l0, space)?;
            if initial > args.budget {
                return Err(sparsetrig::Error::BudgetExhaustedAtInit {
                    budget: args.budget,
                    initial,
                }
                .into());
            }
        }
    }
    fs::create_dir_all(&args.out).map_err(CliError::io(format!("cannot create {}", args.out.display())))?;

    let clean = model.oracle();
    let validation = ValidationSet::new(dim, args.validation_points, args.seed).with_reference(&clean)?;
    let noisy = noise
        .map(|NoiseSpec { amplitude, seed }| sparsetrig::models::NoisyOracle::new(model.oracle(), amplitude, seed));
    let oracle: &dyn Oracle = match &noisy {
        Some(n) => n,
        None => &clean,
    };

    let mut summaries = Vec::new();
    for arm in &arms {
        let outcome = study::run_arm(oracle, arm, &config, &validation)?;
        let csv_name = format!("{}.csv", outcome.label);
        let csv_path = args.out.join(&csv_name);
        let mut buf = Vec::new();
        study::write_csv(&mut buf, &outcome.rows, dim).map_err(CliError::io("cannot format study CSV"))?;
        fs::write(&csv_path, buf).map_err(CliError::io(format!("cannot write {}", csv_path.display())))?;
        for r in &outcome.history {
            if let Some(w) = &r.warning {
                eprintln!("{} iteration {}: warning: {w}", outcome.label, r.iteration);
            }
        }
        let last = outcome.last().expect("every arm measures at least one grid");
        println!(
            "{:<28} nodes {:>8}  max_error {:.3e}  rmse {:.3e}  alpha {}",
            outcome.label,
            last.nodes,
            last.max_error,
            last.rmse,
            last.alpha
                .iter()
                .map(|a| format!("{a:.3}"))
                .collect::<Vec<_>>()
                .join(",")
        );
        summaries.push(ArmSummary {
            label: outcome.label.clone(),
            arm: arm.clone(),
            csv: csv_name,
            final_nodes: last.nodes,
            final_max_error: last.max_error,
            final_rmse: last.rmse,
            final_alpha: last.alpha.clone(),
        });
    }
    run::write_json(
        &args.out.join("manifest.json"),
        &StudyManifest {
            tool_version: env!("CARGO_PKG_VERSION"),
            command: "study",
            model: &spec,
            config: &config,
            seed: args.seed,
            validation_points: args.validation_points,
            arms: summaries,
        },
    )
}

pub fn report_anisotropy(args: &ReportArgs) -> CliResult<()> {
    let (grid, value) = SparseGridF64::load(&args.grid)?;
    let stored = serde_json::from_value::<GridMetadata>(value)
        .ok()
        .map(|m| m.state.space);
    let space = args.space.or(stored).unwrap_or(Space::Hyperbolic);
    let report = sparsetrig::anisotropy::report(&grid, space)?;
    let text = serde_json::to_string_pretty(&report).map_err(sparsetrig::Error::from)?;
    println!("{text}");
    Ok(())
}
