use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use steplearn::datagen::split_seed;
use steplearn::ista::{iterate, regularization_path, Diagonal, IterationRecord, StopRule};
use steplearn::learn::{learn_direct, learn_discrete, resolution_sweep, Route};
use steplearn::mra::learn_joint;
use steplearn::paramlearn::learn_lambdas;
use steplearn::shrink::{denoise_diagonal, denoise_identity, Regularizer};
use steplearn::stepreg::denoise_with_step;
use steplearn::{validate_problem, CoefficientVector, MultiPenalty, TrainingSet};

use crate::config::{streams, ExperimentConfig, OperatorConfig, OperatorKind, RouteName};
use crate::corpus::{generate_corpus, load_split, read_manifest, to_training_set};
use crate::error::CliError;
use crate::formats::{
    describe_transform, forward, inverse, num, read_model, read_samples, render_filter_file, render_lambda_model,
    render_model, render_samples, render_step_model, write_text, LambdaModel, Model, Samples, StepModel,
    TransformSpec,
};

/// Resolved settings shared by all commands.
#[derive(Debug, Clone)]
pub struct Context {
    pub cfg: ExperimentConfig,
    /// Directory relative paths in the config are resolved against.
    pub base: PathBuf,
    pub out: PathBuf,
    pub seed: u64,
    pub route: RouteName,
    pub force: bool,
}

impl Context {
    pub fn corpus_dir(&self) -> PathBuf {
        self.out.join("corpus")
    }

    pub fn model_dir(&self) -> PathBuf {
        self.out.join("model")
    }

    fn stop_rule(&self) -> StopRule {
        StopRule {
            max_iters: self.cfg.solver.ista_max_iters,
            step_tol: self.cfg.solver.ista_step_tol,
        }
    }
}

/// How a command finished when it did not fail.
#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    Done,
    /// A solver stopped before its convergence test passed; artifacts were written.
    NotConverged(String),
}

impl Status {
    pub fn exit_code(&self) -> i32 {
        match self {
            Status::Done => 0,
            Status::NotConverged(_) => 3,
        }
    }
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))?;
    Ok(())
}

fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn cmd_gen(ctx: &Context) -> Result<Status, CliError> {
    let c = ctx.cfg.corpus()?;
    let m = generate_corpus(c, ctx.seed, &ctx.corpus_dir(), ctx.force)?;
    let n: usize = m.splits.iter().map(|s| s.pairs.len()).sum();
    println!("wrote {n} pairs to {}", ctx.corpus_dir().display());
    Ok(Status::Done)
}

/// Transform-domain training set.
pub fn transform_pairs(t: Option<&TransformSpec>, pairs: &[(Vec<f64>, Vec<f64>)]) -> Result<TrainingSet, CliError> {
    let out = pairs
        .iter()
        .map(|(f, g)| Ok((forward(t, f)?, forward(t, g)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    to_training_set(out)
}

fn check_on_grid(ts: &TrainingSet, grid: &steplearn::GridSpec) -> Result<(), CliError> {
    let v = validate_problem(ts, grid);
    if v.is_empty() {
        return Ok(());
    }
    let mut msg = format!("{} training values lie outside the grid {grid}:", v.len());
    for x in v.iter().take(20) {
        msg.push_str(&format!("\n  {x}"));
    }
    if v.len() > 20 {
        msg.push_str(&format!("\n  ... and {} more", v.len() - 20));
    }
    Err(CliError::Validation(msg))
}

pub fn cmd_train(ctx: &Context) -> Result<Status, CliError> {
    let dir = ctx.corpus_dir();
    let manifest = read_manifest(&dir)?;
    let samples = load_split(&dir, &manifest, "train")?;
    let model_dir = ctx.model_dir();
    let mut status = Status::Done;
    match ctx.route {
        RouteName::Discrete | RouteName::Direct => {
            let transform = ctx.cfg.transform.spec(&ctx.base)?;
            let ts = transform_pairs(transform.as_ref(), &samples)?;
            let grid = ctx.cfg.grid()?;
            check_on_grid(&ts, &grid)?;
            let out = if ctx.route == RouteName::Discrete {
                learn_discrete(&ts, &grid, &ctx.cfg.solver.discrete())?
            } else {
                learn_direct(&ts, &grid, &ctx.cfg.solver.direct(ctx.seed))?
            };
            let model = StepModel {
                reg: out.reg.clone(),
                transform,
            };
            write_text(&model_dir.join("regularizer.txt"), &render_step_model(&model))?;
            let rows: Vec<Vec<String>> = out
                .reports
                .iter()
                .map(|r| {
                    vec![
                        r.coord.to_string(),
                        r.objective.to_string(),
                        r.kn.to_string(),
                        r.checked.to_string(),
                        r.capped.to_string(),
                        r.active.to_string(),
                    ]
                })
                .collect();
            write_csv(
                &model_dir.join("diagnostics.csv"),
                &["coord", "objective", "kn", "checked", "capped", "active"],
                &rows,
            )?;
            write_csv(
                &model_dir.join("trajectory.csv"),
                &["step", "objective"],
                &[vec!["0".into(), out.objective().to_string()]],
            )?;
            println!("objective {}", num(out.objective()));
            if out.capped_coordinates() > 0 {
                log::warn!("{} coordinates fell back to the data bins", out.capped_coordinates());
                status = Status::NotConverged(format!(
                    "{} coordinates hit the search budget",
                    out.capped_coordinates()
                ));
            }
        }
        RouteName::Params => {
            let transform = ctx.cfg.transform.spec(&ctx.base)?;
            let ts = transform_pairs(transform.as_ref(), &samples)?;
            let pen = ctx
                .cfg
                .penalty
                .as_ref()
                .ok_or_else(|| CliError::Validation("route params needs a [penalty] table".into()))?
                .penalty(ts.dim())?;
            let out = learn_lambdas(&ts, &pen, &ctx.cfg.solver.lambda())?;
            let model = LambdaModel {
                pen: pen.with_lambdas(&out.lambdas)?,
                transform,
            };
            write_text(&model_dir.join("lambda.txt"), &render_lambda_model(&model))?;
            let rows: Vec<Vec<String>> = out
                .trajectory
                .iter()
                .enumerate()
                .map(|(i, v)| vec![i.to_string(), v.to_string()])
                .collect();
            write_csv(&model_dir.join("trajectory.csv"), &["step", "objective"], &rows)?;
            let rows: Vec<Vec<String>> = model
                .pen
                .terms()
                .iter()
                .enumerate()
                .map(|(k, t)| vec![k.to_string(), t.p.to_string(), t.lambda.to_string()])
                .collect();
            write_csv(&model_dir.join("diagnostics.csv"), &["term", "p", "lambda"], &rows)?;
            println!("objective {}", num(out.objective));
            for l in &out.lambdas {
                println!("lambda {}", num(*l));
            }
            if !out.converged {
                status = Status::NotConverged(if out.stalled {
                    "line search stalled".into()
                } else {
                    "iteration limit reached".into()
                });
            }
        }
        RouteName::Joint => {
            let ts = to_training_set(samples)?;
            let grid = ctx.cfg.grid()?;
            let (space, tol) = ctx.cfg.transform.search_space(&ctx.base)?;
            let levels = ctx.cfg.transform.levels;
            let out = learn_joint(&ts, &space, levels, &grid, &ctx.cfg.solver.discrete(), tol)?;
            let model = StepModel {
                reg: out.reg.clone(),
                transform: Some(TransformSpec {
                    filter: out.filter.clone(),
                    levels,
                }),
            };
            write_text(&model_dir.join("regularizer.txt"), &render_step_model(&model))?;
            write_text(&model_dir.join("filter.txt"), &render_filter_file(&out.filter))?;
            for (i, s) in out.scores.iter().enumerate() {
                if let Some(why) = &s.skipped {
                    log::warn!("filter {i} skipped: {why}");
                }
            }
            let rows: Vec<Vec<String>> = out
                .scores
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    let taps: Vec<String> = s.filter.taps().iter().map(|t| t.to_string()).collect();
                    vec![
                        i.to_string(),
                        taps.join(" "),
                        s.objective.map(|v| v.to_string()).unwrap_or_default(),
                        s.skipped.clone().unwrap_or_default(),
                    ]
                })
                .collect();
            write_csv(&model_dir.join("scores.csv"), &["index", "taps", "objective", "skipped"], &rows)?;
            println!("objective {}", num(out.objective));
            println!("filter {}", out.index);
        }
    }
    Ok(status)
}

/// Result of denoising one signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Denoised {
    pub values: Vec<f64>,
    /// Monitor history when the iterative solver ran.
    pub history: Option<Vec<IterationRecord>>,
    pub converged: bool,
}

/// Transform, per-coordinate minimization (or thresholded Landweber for a
/// diagonal operator with a penalty model), inverse transform.
pub fn denoise_samples(model: &Model, samples: &[f64], op: &OperatorConfig, stop: &StopRule) -> Result<Denoised, CliError> {
    let t = model.transform();
    let incompatible = |why: String| {
        CliError::Validation(format!(
            "input of length {} is incompatible with the model ({why}); model transform: {}; model dimension: {}",
            samples.len(),
            describe_transform(t),
            model.dim()
        ))
    };
    let coeffs = forward(t, samples).map_err(|e| incompatible(e.to_string()))?;
    if coeffs.len() != model.dim() {
        return Err(incompatible("dimension mismatch".into()));
    }
    let g = CoefficientVector::from_values(coeffs);
    let mut history = None;
    let mut converged = true;
    let out = match (model, op.kind) {
        (Model::Step(m), OperatorKind::Identity) => denoise_with_step(&g, &m.reg).map_err(|e| match e {
            steplearn::Error::OutOfGrid { .. } => incompatible(format!("{e}; model grid {}", m.reg.grid())),
            e => e.into(),
        })?,
        (Model::Step(m), OperatorKind::Diagonal) => {
            let k = op.diagonal(g.len())?;
            denoise_diagonal(&g, &k, Regularizer::Step(&m.reg))?
        }
        (Model::Lambda(m), OperatorKind::Identity) => denoise_identity(&g, &m.pen)?,
        (Model::Lambda(m), OperatorKind::Diagonal) => {
            let k = Diagonal::new(op.diagonal(g.len())?);
            let state = iterate(&vec![0.0; g.len()], g.values(), &k, &m.pen, stop)?;
            converged = state.converged;
            history = Some(state.history);
            g.with_values(state.f)?
        }
    };
    Ok(Denoised {
        values: inverse(t, out.values())?,
        history,
        converged,
    })
}

fn psnr(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        -10.0 * mse.log10()
    }
}

pub fn cmd_denoise(
    ctx: &Context,
    model_path: &Path,
    input: &Path,
    reference: Option<&Path>,
    output: Option<&Path>,
) -> Result<Status, CliError> {
    let model = read_model(model_path)?;
    let samples = read_samples(input)?;
    let d = denoise_samples(&model, samples.values(), &ctx.cfg.operator, &ctx.stop_rule())?;
    let out_path = output
        .map(Path::to_path_buf)
        .unwrap_or_else(|| ctx.out.join("denoised.txt"));
    let result = samples.with_values(d.values.clone());
    write_text(&out_path, &render_samples(&result))?;
    if let Samples::Image { side, data } = &result {
        let pgm = out_path.with_extension("pgm");
        std::fs::write(&pgm, crate::formats::encode_pgm(*side, data)).map_err(|e| CliError::io(&pgm, e))?;
    }
    let n = samples.values().len().max(1) as f64;
    let mut header = vec!["l2_change"];
    let mut row = vec![dist_sq(&d.values, samples.values()).sqrt().to_string()];
    if let Some(r) = reference {
        let clean = read_samples(r)?;
        if clean.values().len() != samples.values().len() {
            return Err(CliError::Validation(format!(
                "reference has {} samples, input has {}",
                clean.values().len(),
                samples.values().len()
            )));
        }
        let err = dist_sq(&d.values, clean.values());
        let noisy = dist_sq(samples.values(), clean.values());
        header.extend(["l2_error", "l2_noisy_error", "psnr", "psnr_noisy"]);
        row.extend([
            err.sqrt().to_string(),
            noisy.sqrt().to_string(),
            psnr(err / n).to_string(),
            psnr(noisy / n).to_string(),
        ]);
        println!("l2_error {} noisy {}", num(err.sqrt()), num(noisy.sqrt()));
    }
    let stats = out_path.with_extension("csv");
    write_csv(&stats, &header, &[row])?;
    if let Some(h) = &d.history {
        let rows: Vec<Vec<String>> = h
            .iter()
            .map(|r| {
                vec![
                    r.iter.to_string(),
                    r.step_norm.to_string(),
                    r.objective.to_string(),
                    r.surrogate.to_string(),
                ]
            })
            .collect();
        let hist = out_path.with_file_name(format!(
            "{}_history.csv",
            out_path.file_stem().and_then(|s| s.to_str()).unwrap_or("denoised")
        ));
        write_csv(&hist, &["iter", "step_norm", "objective", "surrogate"], &rows)?;
        println!("iterations {}", h.len());
    }
    Ok(if d.converged {
        Status::Done
    } else {
        Status::NotConverged("iterative solver reached its iteration limit".into())
    })
}

/// Per-method totals of [`cmd_eval`].
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub method: String,
    pub train_objective: f64,
    pub heldout_objective: f64,
    pub heldout_noisy: f64,
}

fn evaluate(
    model: &Model,
    pairs: &[(Vec<f64>, Vec<f64>)],
    op: &OperatorConfig,
    stop: &StopRule,
) -> Result<Vec<f64>, CliError> {
    pairs
        .iter()
        .map(|(f, g)| Ok(dist_sq(&denoise_samples(model, g, op, stop)?.values, f)))
        .collect()
}

pub fn cmd_eval(ctx: &Context, model_paths: &[PathBuf]) -> Result<(Status, Vec<EvalRow>), CliError> {
    let dir = ctx.corpus_dir();
    let manifest = read_manifest(&dir)?;
    let train = load_split(&dir, &manifest, "train")?;
    let heldout = load_split(&dir, &manifest, "heldout")?;
    let mut methods: Vec<(String, Model)> = Vec::new();
    let mut seen = BTreeSet::new();
    for p in model_paths {
        if seen.insert(p.clone()) {
            methods.push((p.display().to_string(), read_model(p)?));
        }
    }
    let transform = ctx.cfg.transform.spec(&ctx.base)?;
    if ctx.cfg.eval.baseline {
        let ts = transform_pairs(transform.as_ref(), &train)?;
        let pen = MultiPenalty::uniform(0.0, 2.0, ts.dim())?;
        let out = learn_lambdas(&ts, &pen, &ctx.cfg.solver.lambda())?;
        let model = Model::Lambda(LambdaModel {
            pen: pen.with_lambdas(&out.lambdas)?,
            transform: transform.clone(),
        });
        write_text(&ctx.out.join("eval").join("baseline_lambda.txt"), &render_model(&model))?;
        methods.push(("baseline-l2".into(), model));
    }
    let stop = ctx.stop_rule();
    let op = &ctx.cfg.operator;
    let mut table = Vec::new();
    let mut pair_rows = Vec::new();
    for (name, model) in &methods {
        let tr = evaluate(model, &train, op, &stop)?;
        let ho = evaluate(model, &heldout, op, &stop)?;
        for (i, ((f, g), e)) in heldout.iter().zip(&ho).enumerate() {
            pair_rows.push(vec![name.clone(), i.to_string(), e.to_string(), dist_sq(g, f).to_string()]);
        }
        table.push(EvalRow {
            method: name.clone(),
            train_objective: tr.iter().sum(),
            heldout_objective: ho.iter().sum(),
            heldout_noisy: heldout.iter().map(|(f, g)| dist_sq(g, f)).sum(),
        });
    }
    let eval_dir = ctx.out.join("eval");
    write_csv(&eval_dir.join("pairs.csv"), &["method", "pair", "error", "noisy_error"], &pair_rows)?;
    let rows: Vec<Vec<String>> = table
        .iter()
        .map(|r| {
            vec![
                r.method.clone(),
                r.train_objective.to_string(),
                r.heldout_objective.to_string(),
                r.heldout_noisy.to_string(),
            ]
        })
        .collect();
    write_csv(
        &eval_dir.join("summary.csv"),
        &["method", "train_objective", "heldout_objective", "heldout_noisy"],
        &rows,
    )?;
    println!("{:<40} {:>14} {:>14} {:>14}", "method", "train", "heldout", "noisy");
    for r in &table {
        println!(
            "{:<40} {:>14.6e} {:>14.6e} {:>14.6e}",
            r.method, r.train_objective, r.heldout_objective, r.heldout_noisy
        );
    }
    if !ctx.cfg.eval.sweep_levels.is_empty() {
        let ts = transform_pairs(transform.as_ref(), &train)?;
        let grid = ctx.cfg.grid()?;
        let sweep = resolution_sweep(
            &ts,
            &grid,
            ctx.cfg.eval.sweep_levels.iter().copied(),
            &Route::Discrete(ctx.cfg.solver.discrete()),
        )?;
        let rows: Vec<Vec<String>> = sweep.iter().map(|(n, v)| vec![n.to_string(), v.to_string()]).collect();
        write_csv(&eval_dir.join("sweep.csv"), &["n", "objective"], &rows)?;
    }
    Ok((Status::Done, table))
}

pub fn cmd_path(ctx: &Context) -> Result<Status, CliError> {
    use rand::{Rng, SeedableRng};
    let pc = ctx.cfg.path.clone().unwrap_or_default();
    let rule = pc.rule()?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(split_seed(ctx.seed, streams::PATH));
    let f_true: Vec<f64> = (0..pc.dim).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let k = Diagonal::new(pc.diagonal());
    let pen = MultiPenalty::uniform(pc.weight, pc.p, pc.dim)?;
    let report = regularization_path(&f_true, &k, &pen, &pc.eps, rule, &ctx.stop_rule(), rng.random())?;
    let rows: Vec<Vec<String>> = report
        .points
        .iter()
        .map(|p| {
            vec![
                p.eps.to_string(),
                p.alpha.to_string(),
                p.error.to_string(),
                p.iterations.to_string(),
                p.converged.to_string(),
            ]
        })
        .collect();
    write_csv(
        &ctx.out.join("path").join("path.csv"),
        &["eps", "alpha", "error", "iterations", "converged"],
        &rows,
    )?;
    for p in &report.points {
        println!("eps {} error {}", num(p.eps), num(p.error));
    }
    Ok(if report.points.iter().all(|p| p.converged) {
        Status::Done
    } else {
        Status::NotConverged("a path point reached the iteration limit".into())
    })
}

/// Reads back every model written by [`cmd_train`].
pub fn trained_models(ctx: &Context) -> Vec<PathBuf> {
    ["regularizer.txt", "lambda.txt"]
        .iter()
        .map(|f| ctx.model_dir().join(f))
        .filter(|p| p.exists())
        .collect()
}
