//! Acceptance suite. Runs every criterion, prints one line each and exits
//! non-zero if any failed.

use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use steplearn::datagen::{gen_training_set, Layout, MonotoneMap, NoiseKind, NoiseSpec, SceneSpec};
use steplearn::ista::{iterate, objective, regularization_path, AlphaRule, Diagonal, StopRule};
use steplearn::learn::{build_kn, learn_discrete, resolution_sweep, DiscreteConfig, QuasiconvexConstraintSystem, Route, SearchConfig};
use steplearn::mra::{
    check_qmf, decompose, learn_joint, reconstruct, transform_training_set, FilterSearchSpace, Pyramid, ScalingFilter,
};
use steplearn::paramlearn::{gradient_i_lambda, learn_lambdas, objective_i_lambda, LambdaConfig};
use steplearn::shrink::{denoise_diagonal, denoise_identity, shrink_multi, shrink_single, Regularizer, WeightedTerm};
use steplearn::stepreg::{is_quasiconvex, objective_i};
use steplearn::{CoefficientVector, GridSpec, MultiPenalty, TrainingSet};
use steplearn_cli::formats::parse_samples;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

// ---------------------------------------------------------------- 1

fn brute_argmin(b: f64, terms: &[(f64, f64)]) -> f64 {
    let h = 1e-4;
    let reach = (b.abs() / h).ceil() as i64 + 1;
    let phi = |x: f64| x * x - 2.0 * b * x + terms.iter().map(|&(c, p)| c * x.abs().powf(p)).sum::<f64>();
    let mut best = (f64::INFINITY, 0.0);
    for k in -reach..=reach {
        let x = k as f64 * h;
        let v = phi(x);
        if v < best.0 {
            best = (v, x);
        }
    }
    best.1
}

fn shrink_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut single, mut multi) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let b = rng.random_range(-3.0..3.0);
        let c = rng.random_range(0.01..3.0);
        let p = if rng.random_bool(0.1) { 1.0 } else { rng.random_range(1.0..=2.0) };
        single = single.max((shrink_single(b, c, p) - brute_argmin(b, &[(c, p)])).abs());
    }
    for _ in 0..1000 {
        let b = rng.random_range(-3.0..3.0);
        let n = rng.random_range(1..=3);
        let terms: Vec<(f64, f64)> = (0..n)
            .map(|_| (rng.random_range(0.01..1.5), if rng.random_bool(0.2) { 1.0 } else { rng.random_range(1.0..=2.0) }))
            .collect();
        multi = multi.max((shrink_multi(b, &terms).unwrap() - brute_argmin(b, &terms)).abs());
    }
    outcome(
        single <= 2e-4 && multi <= 2e-4,
        format!("max deviation single {single:.2e}, multi {multi:.2e} (tol 2e-4)"),
    )
}

// ---------------------------------------------------------------- 2

fn identity_minimality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let dim = 32;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..50 {
        let g: Vec<f64> = (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect();
        let weights: Vec<f64> = (0..dim).map(|_| rng.random_range(0.05..1.5)).collect();
        let exps: Vec<f64> = (0..dim).map(|_| [1.0, 1.25, 1.5, 1.75, 2.0][rng.random_range(0..5)]).collect();
        let pen = MultiPenalty::per_coordinate(&weights, &exps).unwrap();
        let value = |f: &[f64]| f.iter().zip(&g).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() + pen.value(f);
        let f = denoise_identity(&CoefficientVector::from_values(g.clone()), &pen).unwrap().into_values();
        let base = value(&f);
        for k in 0..100 {
            let scale = 10f64.powi(-(k % 6));
            let pert: Vec<f64> = f.iter().map(|x| x + scale * rng.random_range(-1.0..1.0)).collect();
            worst = worst.max(base - value(&pert));
        }
    }
    outcome(worst <= 1e-12, format!("largest improvement by a perturbation {worst:.2e}"))
}

// ---------------------------------------------------------------- 3

fn triples_quasiconvex(a: &[f64]) -> bool {
    let n = a.len();
    for r in 0..n {
        for s in r + 1..n {
            for t in s + 1..n {
                if a[s] > a[r].max(a[t]) {
                    return false;
                }
            }
        }
    }
    true
}

fn scanner_equivalence() -> Outcome {
    let mut checked = 0usize;
    let mut mismatches = 0usize;
    for len in 0..=7u32 {
        for code in 0..3usize.pow(len) {
            let mut c = code;
            let a: Vec<f64> = (0..len)
                .map(|_| {
                    let v = (c % 3) as f64;
                    c /= 3;
                    v
                })
                .collect();
            checked += 1;
            mismatches += usize::from(is_quasiconvex(&a) != triples_quasiconvex(&a));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for i in 0..10_000 {
        let len = rng.random_range(0..=16);
        let a: Vec<f64> = if i % 2 == 0 {
            (0..len).map(|_| rng.random_range(0..4) as f64).collect()
        } else {
            (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
        };
        checked += 1;
        mismatches += usize::from(is_quasiconvex(&a) != triples_quasiconvex(&a));
    }
    outcome(mismatches == 0, format!("{checked} arrays, {mismatches} disagreements"))
}

// ---------------------------------------------------------------- 4

/// Difference-constraint feasibility by Floyd-Warshall: `cons` holds `(a, b, w)`
/// meaning `x_b - x_a <= w`.
fn fw_feasible(n: usize, cons: &[(usize, usize, f64)]) -> bool {
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for &(a, b, w) in cons {
        d[a][b] = d[a][b].min(w);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    (0..n).all(|i| d[i][i] >= -1e-12)
}

/// Best training error of a quasiconvex step over all `B^m` bin assignments.
fn bilevel_oracle(slice: &[(f64, f64)], m1: f64, width: f64, eps: f64, b: usize) -> f64 {
    let delta = 1e-9;
    let data: Vec<(f64, usize, Vec<f64>)> = slice
        .iter()
        .map(|&(f, g)| {
            let home = ((g - m1) / width).ceil() as usize;
            let cands = (1..=b)
                .map(|u| {
                    if u < home {
                        m1 + u as f64 * width
                    } else if u == home {
                        g
                    } else {
                        m1 + (u - 1) as f64 * width + eps
                    }
                })
                .collect();
            (f, home, cands)
        })
        .collect();
    let m = slice.len();
    let mut best = f64::INFINITY;
    for code in 0..b.pow(m as u32) {
        let mut c = code;
        let assign: Vec<usize> = (0..m)
            .map(|_| {
                let r = c % b + 1;
                c /= b;
                r
            })
            .collect();
        let score: f64 = data.iter().zip(&assign).map(|((f, _, x), &r)| (f - x[r - 1]).powi(2)).sum();
        if score >= best {
            continue;
        }
        let mut cons = Vec::new();
        for ((_, home, x), &r) in data.iter().zip(&assign) {
            let g = x[*home - 1];
            let q = |u: usize| (x[u - 1] - g).powi(2);
            for u in 1..=b {
                if u == r {
                    continue;
                }
                let prefers = u == *home || (r != *home && u < r);
                cons.push((u - 1, r - 1, q(u) - q(r) - if prefers { delta } else { 0.0 }));
            }
        }
        let feasible = (0..b).any(|p| {
            let mut all = cons.clone();
            for j in 0..b - 1 {
                if j < p {
                    all.push((j, j + 1, 0.0));
                } else {
                    all.push((j + 1, j, 0.0));
                }
            }
            fw_feasible(b, &all)
        });
        if feasible {
            best = score;
        }
    }
    best
}

fn bilevel_match() -> Outcome {
    const LATTICE: [f64; 5] = [0.2, 0.6, 1.0, 1.4, 1.8];
    let cfg = DiscreteConfig {
        search: SearchConfig::exhaustive(),
        ..DiscreteConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    let mut count = 0usize;
    let mut slices: Vec<Vec<(f64, f64)>> = Vec::new();
    for a in 0..25 {
        slices.push(vec![(LATTICE[a / 5], LATTICE[a % 5])]);
        for c in 0..25 {
            slices.push(vec![(LATTICE[a / 5], LATTICE[a % 5]), (LATTICE[c / 5], LATTICE[c % 5])]);
        }
    }
    for _ in 0..400 {
        slices.push(
            (0..3)
                .map(|_| (LATTICE[rng.random_range(0..5)], LATTICE[rng.random_range(0..5)]))
                .collect(),
        );
    }
    for n in [1u32, 2] {
        let grid = GridSpec::with_default_eps(0, 2, n).unwrap();
        let width = grid.width();
        for s in &slices {
            let ts = TrainingSet::from_arrays(s.iter().map(|&(f, g)| (vec![f], vec![g])).collect()).unwrap();
            let out = learn_discrete(&ts, &grid, &cfg).unwrap();
            let oracle = bilevel_oracle(s, 0.0, width, grid.eps(), grid.bins());
            let realized = objective_i(&out.reg, &ts).unwrap();
            worst = worst.max((out.objective() - oracle).abs()).max((realized - oracle).abs());
            count += 1;
        }
        // two coordinates learned jointly
        for _ in 0..100 {
            let m = rng.random_range(1..=3);
            let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..m)
                .map(|_| {
                    let f = vec![LATTICE[rng.random_range(0..5)], LATTICE[rng.random_range(0..5)]];
                    let g = vec![LATTICE[rng.random_range(0..5)], LATTICE[rng.random_range(0..5)]];
                    (f, g)
                })
                .collect();
            let ts = TrainingSet::from_arrays(pairs).unwrap();
            let out = learn_discrete(&ts, &grid, &cfg).unwrap();
            let oracle: f64 = (0..2).map(|j| bilevel_oracle(&ts.slice(j), 0.0, width, grid.eps(), grid.bins())).sum();
            worst = worst.max((out.objective() - oracle).abs());
            count += 1;
        }
    }
    outcome(worst <= 1e-9, format!("{count} instances, max objective gap {worst:.2e} (tol 1e-9)"))
}

// ---------------------------------------------------------------- 5

fn resolution_sweep_check() -> Outcome {
    let scene = SceneSpec::medium_squares(16, 55);
    let noise = NoiseSpec {
        kind: NoiseKind::MonotoneMap(MonotoneMap::Shift(0.1)),
        seed: 56,
    };
    let ts = gen_training_set(&scene, &noise, 8, Layout::Row).unwrap();
    let grid = GridSpec::with_default_eps(-1, 2, 1).unwrap();
    let sweep = resolution_sweep(&ts, &grid, 1..=5, &Route::Discrete(DiscreteConfig::default())).unwrap();
    let (m, dim) = (ts.len() as f64, ts.dim() as f64);
    let mut ok = true;
    for w in sweep.windows(2) {
        ok &= w[1].1 <= w[0].1 + 1e-9;
    }
    for &(n, v) in &sweep {
        ok &= v <= m * dim * (-2.0 * n as f64).exp2();
    }
    let vals: Vec<String> = sweep.iter().map(|(n, v)| format!("n={n}:{v:.3e}")).collect();
    outcome(ok, format!("objectives {}", vals.join(" ")))
}

// ---------------------------------------------------------------- 6

fn worked_example() -> Outcome {
    let triples = QuasiconvexConstraintSystem::new(4).triples();
    let printed = [(1, 2, 3), (1, 2, 4), (1, 3, 4), (2, 3, 4)];
    let shift = usize::from(triples.iter().any(|&(r, _, _)| r == 0));
    let mut got: Vec<(usize, usize, usize)> = triples.iter().map(|&(r, s, t)| (r + shift, s + shift, t + shift)).collect();
    got.sort();
    let constraints_ok = got == printed;

    let grid = GridSpec::new(1, 3, 1, 0.5).unwrap();
    let k1 = build_kn(&[(2.0, 1.3), (2.8, 2.1)], &grid).unwrap();
    let k2 = build_kn(&[(1.7, 2.5), (1.1, 2.9)], &grid).unwrap();
    // closed forms with 1-based x[1..=4]; bins (1,1.5], (1.5,2], (2,2.5], (2.5,3]
    let closed1 = |x: &[f64; 5]| {
        let a = (2..=4)
            .map(|t| (t as f64 / 2.0 - 0.3).powi(2) + x[t] - x[2] - 0.49)
            .fold(x[1] - x[2] - 0.49, f64::min);
        let b = (1..=2)
            .map(|t| (t as f64 / 2.0 - 1.1).powi(2) + x[t] - x[4] - 0.49)
            .fold((x[3] - x[4] - 0.49).min(0.81 - 0.49), f64::min);
        a * a + b * b
    };
    let closed2 = |x: &[f64; 5]| {
        let a = (1..=4)
            .map(|t| (t as f64 / 2.0 - 1.5).powi(2) + x[t] - x[2] - 0.64)
            .fold(f64::INFINITY, f64::min);
        let b = (1..=3)
            .map(|t| (t as f64 / 2.0 - 1.9).powi(2) + x[t] - x[1] - 3.24)
            .fold(x[4] - x[1] - 3.24, f64::min);
        a * a + b * b
    };
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let x: Vec<f64> = (0..4).map(|_| rng.random_range(-3.0..3.0)).collect();
        let padded = [0.0, x[0], x[1], x[2], x[3]];
        worst = worst
            .max((k1.value(&x) - closed1(&padded)).abs())
            .max((k2.value(&x) - closed2(&padded)).abs());
    }
    outcome(
        constraints_ok && worst <= 1e-12,
        format!("constraint triples {got:?}, max |K - closed form| {worst:.2e}"),
    )
}

// ---------------------------------------------------------------- 7

fn qmf_and_reconstruction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut qmf_ok = true;
    let (mut rt, mut parseval) = (0.0f64, 0.0f64);
    for filter in [ScalingFilter::haar(), ScalingFilter::db4()] {
        qmf_ok &= check_qmf(&filter, 1e-12).ok();
        for levels in 1..=4 {
            for _ in 0..10 {
                let x: Vec<f64> = (0..64).map(|_| rng.random_range(-1.0..1.0)).collect();
                let tree: Pyramid = decompose(&x, &filter, levels).unwrap();
                let back = reconstruct(&tree, &filter).unwrap();
                rt = rt.max(x.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
                let e: f64 = x.iter().map(|v| v * v).sum();
                parseval = parseval.max((tree.flatten().norm_sq() - e).abs());
            }
        }
    }
    outcome(
        qmf_ok && rt <= 1e-10 && parseval <= 1e-10,
        format!("qmf {}, roundtrip {rt:.2e}, parseval {parseval:.2e}", if qmf_ok { "ok" } else { "failed" }),
    )
}

// ---------------------------------------------------------------- 8

fn joint_selection() -> Outcome {
    let space = FilterSearchSpace::lattice_uniform(16);
    let filters = space.filters();
    let truth = 3;
    let levels = 2;
    let len = 16;
    let grid = GridSpec::with_default_eps(-6, 6, 3).unwrap();
    // clean coefficients sit on candidate points: right bin endpoints above zero,
    // left endpoint plus eps below, so the true filter can denoise them exactly
    let lattice = |k: i32| {
        if k >= 0 {
            k as f64 * grid.width()
        } else {
            k as f64 * grid.width() + grid.eps()
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..8)
        .map(|_| {
            let c: Vec<f64> = (0..len).map(|_| lattice(rng.random_range(-8..=8))).collect();
            let noisy: Vec<f64> = c.iter().map(|v| v + 0.25 * v * v * v).collect();
            let to_samples = |v: &[f64]| reconstruct(&Pyramid::from_flat(v, levels).unwrap(), &filters[truth]).unwrap();
            (to_samples(&c), to_samples(&noisy))
        })
        .collect();
    let ts = TrainingSet::from_arrays(pairs).unwrap();
    let cfg = DiscreteConfig::default();
    let out = learn_joint(&ts, &space, levels, &grid, &cfg, 1e-10).unwrap();
    let mut best = (f64::INFINITY, usize::MAX);
    let mut scored = 0;
    for (i, f) in filters.iter().enumerate() {
        if !check_qmf(f, 1e-10).ok() {
            continue;
        }
        let t = transform_training_set(&ts, f, levels).unwrap();
        if !steplearn::validate_problem(&t, &grid).is_empty() {
            continue;
        }
        scored += 1;
        let v = learn_discrete(&t, &grid, &cfg).unwrap().objective();
        if v < best.0 {
            best = (v, i);
        }
    }
    let runner_up = out
        .scores
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != out.index)
        .filter_map(|(_, s)| s.objective)
        .fold(f64::INFINITY, f64::min);
    outcome(
        out.index == truth && best.1 == truth && (out.objective - best.0).abs() <= 1e-12,
        format!(
            "selected {} of {} ({scored} scored), objective {:.3e}, space min {:.3e}, runner-up {:.3e}",
            out.index,
            filters.len(),
            out.objective,
            best.0,
            runner_up
        ),
    )
}

// ---------------------------------------------------------------- 9

fn ista_convergence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let dim = 64;
    let (mut dist, mut rises, mut last_step) = (0.0f64, 0usize, 0.0f64);
    let mut all_converged = true;
    for _ in 0..5 {
        let k = Diagonal::new(vec![0.5; dim]);
        let g: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let weights: Vec<f64> = (0..dim).map(|_| rng.random_range(0.01..0.3)).collect();
        let exps: Vec<f64> = (0..dim).map(|_| [1.0, 1.3, 1.6, 2.0][rng.random_range(0..4)]).collect();
        let pen = MultiPenalty::per_coordinate(&weights, &exps).unwrap();
        let state = iterate(&vec![0.0; dim], &g, &k, &pen, &StopRule::default()).unwrap();
        let exact = denoise_diagonal(&CoefficientVector::from_values(g.clone()), &k.k, Regularizer::Penalty(&pen))
            .unwrap()
            .into_values();
        dist = dist.max(state.f.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        let mut prev = objective(&vec![0.0; dim], &g, &k, &pen);
        for r in &state.history {
            rises += usize::from(r.objective > prev + 1e-12 * prev.abs().max(1.0));
            prev = r.objective;
        }
        last_step = last_step.max(state.history.last().map_or(0.0, |r| r.step_norm));
        all_converged &= state.converged;
    }
    outcome(
        all_converged && dist <= 1e-8 && rises == 0 && last_step <= 1e-10,
        format!("distance to closed form {dist:.2e}, objective rises {rises}, final step {last_step:.2e}"),
    )
}

// ---------------------------------------------------------------- 10

fn regularization_path_check() -> Outcome {
    let dim = 16;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let f_true: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let k = Diagonal::new((0..dim).map(|i| 0.5 + 0.4 * i as f64 / (dim - 1) as f64).collect());
    let pen = MultiPenalty::per_coordinate(&vec![0.1; dim], &vec![1.5; dim]).unwrap();
    let report = regularization_path(&f_true, &k, &pen, &[1e-1, 1e-2, 1e-3], AlphaRule::linear(), &StopRule::default(), 10)
        .unwrap();
    let errs: Vec<f64> = report.points.iter().map(|p| p.error).collect();
    let decreasing = errs.windows(2).all(|w| w[1] < w[0]);
    let last = *errs.last().unwrap();
    outcome(
        decreasing && last <= 1e-2,
        format!("errors {:?}", errs.iter().map(|e| format!("{e:.3e}")).collect::<Vec<_>>()),
    )
}

// ---------------------------------------------------------------- 11

fn lambda_learning() -> Outcome {
    let ts = TrainingSet::from_arrays(vec![(vec![1.0], vec![2.0])]).unwrap();
    let pen = MultiPenalty::uniform(1.0, 2.0, 1).unwrap();
    let lam = learn_lambdas(&ts, &pen, &LambdaConfig::default()).unwrap().lambdas[0];

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let dim = 3;
        let m = rng.random_range(1..=3);
        let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..m)
            .map(|_| {
                (
                    (0..dim).map(|_| rng.random_range(0.2..2.0)).collect(),
                    (0..dim).map(|_| rng.random_range(0.2..2.0)).collect(),
                )
            })
            .collect();
        let ts = TrainingSet::from_arrays(pairs).unwrap();
        let terms = (0..2)
            .map(|_| WeightedTerm {
                lambda: 1.0,
                weights: (0..dim).map(|_| rng.random_range(0.5..1.5)).collect(),
                p: rng.random_range(1.2..=2.0),
            })
            .collect();
        let pen = MultiPenalty::new(terms, None).unwrap();
        let lams: Vec<f64> = (0..2).map(|_| rng.random_range(0.05..1.0)).collect();
        let (_, grad, _) = gradient_i_lambda(&lams, &ts, &pen).unwrap();
        for i in 0..2 {
            let h = 1e-6;
            let mut up = lams.clone();
            up[i] += h;
            let mut dn = lams.clone();
            dn[i] -= h;
            let fd = (objective_i_lambda(&up, &ts, &pen).unwrap() - objective_i_lambda(&dn, &ts, &pen).unwrap()) / (2.0 * h);
            worst = worst.max((fd - grad[i]).abs() / fd.abs().max(1e-3));
        }
    }
    outcome(
        (lam - 1.0).abs() <= 1e-6 && worst <= 1e-5,
        format!("scalar lambda {lam:.10}, worst gradient relative error {worst:.2e}"),
    )
}

// ---------------------------------------------------------------- 12

fn cli(cfg: &Path, out: &Path, args: &[&str]) -> i32 {
    let mut v = vec![
        "steplearn".to_string(),
        "--config".into(),
        cfg.display().to_string(),
        "--out".into(),
        out.display().to_string(),
    ];
    v.extend(args.iter().map(|s| s.to_string()));
    steplearn_cli::run(v)
}

fn end_to_end() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("experiment.toml");
    fs::write(
        &cfg,
        r#"
seed = 11
route = "discrete"
[grid]
m1 = -1
m2 = 2
n = 4
[corpus]
side = 16
layout = "row"
train = 8
heldout = 4
[corpus.noise]
kind = "monotone-map"
shift = 0.1
"#,
    )
    .unwrap();
    let out = dir.path().join("run");
    for step in [&["gen"][..], &["train"][..]] {
        let code = cli(&cfg, &out, step);
        if code != 0 {
            return outcome(false, format!("`{}` exited with {code}", step[0]));
        }
    }
    let model = out.join("model/regularizer.txt");
    let mut lines = Vec::new();
    let mut ok = true;
    for i in 0..4 {
        let pair = out.join(format!("corpus/heldout/{i:03}"));
        let res = dir.path().join(format!("res_{i}.txt"));
        let input = pair.join("noisy_row.txt");
        let args = [
            "denoise",
            "--model",
            model.to_str().unwrap(),
            "--input",
            input.to_str().unwrap(),
            "--output",
            res.to_str().unwrap(),
        ];
        let code = cli(&cfg, &out, &args);
        if code != 0 {
            return outcome(false, format!("denoise of pair {i} exited with {code}"));
        }
        let read = |p: &Path| parse_samples(p, &fs::read_to_string(p).unwrap()).unwrap().values().to_vec();
        let clean = read(&pair.join("clean_row.txt"));
        let noisy = read(&pair.join("noisy_row.txt"));
        let denoised = read(&res);
        let l2 = |a: &[f64]| a.iter().zip(&clean).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
        let (e, e0) = (l2(&denoised), l2(&noisy));
        ok &= e < e0;
        lines.push(format!("{e:.3e}<{e0:.3e}"));
    }
    outcome(ok, format!("held-out errors {}", lines.join(" ")))
}

type Criterion = (&'static str, Duration, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 12] = [
        ("shrinkage oracle", Duration::from_secs(10), shrink_oracle),
        ("identity-denoise minimality", Duration::from_secs(5), identity_minimality),
        ("quasiconvexity scanner equivalence", Duration::from_secs(5), scanner_equivalence),
        ("small-instance bilevel oracle", Duration::from_secs(120), bilevel_match),
        ("resolution sweep", Duration::from_secs(300), resolution_sweep_check),
        ("worked example", Duration::from_secs(1), worked_example),
        ("orthonormality and perfect reconstruction", Duration::from_secs(5), qmf_and_reconstruction),
        ("joint filter selection", Duration::from_secs(600), joint_selection),
        ("thresholded Landweber convergence", Duration::from_secs(30), ista_convergence),
        ("regularization path", Duration::from_secs(60), regularization_path_check),
        ("penalty weight learning", Duration::from_secs(30), lambda_learning),
        ("end to end", Duration::from_secs(600), end_to_end),
    ];
    let mut failed = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let res = run();
        let took = start.elapsed();
        let pass = res.pass && took <= *budget;
        failed += usize::from(!pass);
        println!(
            "[{}] criterion {:>2} {name}: {} ({:.2}s of {}s)",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            res.detail,
            took.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
