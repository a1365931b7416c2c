//! Command implementations.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use mmdt_core::data::{
    load_model, make_shifted_pair, read_sparse_dataset, save_model, write_sparse_dataset,
    ShiftKind, SynthConfig,
};
use mmdt_core::transform::solve_transform;
use mmdt_core::{
    mmdt, Dataset, DomainTag, Error, FeatureVector, HyperplaneSet, Loss, RegularizerMode,
    SolverConfig,
};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{BenchArgs, CliError, EvalArgs, LossArg, ModeArg, PredictArgs, PresetArg, SynthArgs, TrainArgs};

fn data_err(e: Error) -> CliError {
    CliError::Data(e.to_string())
}

fn usage_err(e: Error) -> CliError {
    CliError::Usage(e.to_string())
}

impl From<LossArg> for Loss {
    fn from(a: LossArg) -> Loss {
        match a {
            LossArg::L1 => Loss::L1,
            LossArg::L2 => Loss::L2,
        }
    }
}

impl From<ModeArg> for RegularizerMode {
    fn from(a: ModeArg) -> RegularizerMode {
        match a {
            ModeArg::Pure => RegularizerMode::Pure,
            ModeArg::Identity => RegularizerMode::IdentityPlus,
        }
    }
}

pub fn train(args: &TrainArgs) -> Result<(), CliError> {
    let config = SolverConfig {
        c_source: args.c_src,
        c_target: args.c_tgt,
        loss: args.loss.into(),
        epsilon: args.epsilon,
        max_passes: args.max_passes,
        regularizer: args.mode.into(),
        outer_iterations: args.outer_iters,
        rng_seed: args.seed,
        augment_bias: !args.no_bias,
        final_refresh: args.final_refresh,
        shrinking: true,
    };
    config.validate().map_err(usage_err)?;

    let source = read_sparse_dataset(&args.source, DomainTag::Source).map_err(data_err)?;
    let target = read_sparse_dataset(&args.target, DomainTag::Target).map_err(data_err)?;
    config
        .validate_dims(source.dimension(), target.dimension())
        .map_err(usage_err)?;

    let (model, report) = mmdt::fit(&source, &target, &config).map_err(|e| match e {
        Error::DimensionMismatch { .. }
        | Error::EmptyDataset
        | Error::TooFewCategories(_)
        | Error::UnknownCategory(_)
        | Error::InvalidConfig(_) => data_err(e),
        other => CliError::Solver(other.to_string()),
    })?;

    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for step in &report.steps {
        writeln!(
            out,
            "{}\t{}\t{}\t{:.3}",
            step.iteration,
            step.stage.as_str(),
            step.joint_objective,
            step.elapsed.as_secs_f64() * 1000.0
        )
        .map_err(|e| data_err(e.into()))?;
    }
    for diag in &report.transform_diagnostics {
        if !diag.converged {
            eprintln!(
                "warning: transform solve hit the pass limit (gap {:.3e} after {} passes)",
                diag.pg_gap, diag.passes
            );
        }
    }
    save_model(&model, &args.out).map_err(data_err)?;
    eprintln!("wrote model to {}", args.out);
    Ok(())
}

pub fn predict(args: &PredictArgs) -> Result<(), CliError> {
    let model = load_model(&args.model).map_err(data_err)?;
    let data = read_sparse_dataset(&args.data, DomainTag::Target).map_err(data_err)?;
    let predictor = model.predictor().map_err(data_err)?;

    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for (x, _) in data.examples() {
        let (category, scores) = predictor.predict(x).map_err(data_err)?;
        write!(out, "{}", model.categories()[category]).map_err(|e| data_err(e.into()))?;
        if args.scores {
            for s in &scores {
                write!(out, "\t{s}").map_err(|e| data_err(e.into()))?;
            }
        }
        writeln!(out).map_err(|e| data_err(e.into()))?;
    }
    Ok(())
}

pub fn eval(args: &EvalArgs) -> Result<(), CliError> {
    let model = load_model(&args.model).map_err(data_err)?;
    let data = read_sparse_dataset(&args.data, DomainTag::Target).map_err(data_err)?;
    let evaluation = mmdt::evaluate(&model, &data).map_err(data_err)?;

    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    writeln!(out, "accuracy\t{}", evaluation.accuracy()).map_err(|e| data_err(e.into()))?;
    for class in &evaluation.per_class {
        if class.total > 0 {
            writeln!(
                out,
                "class\t{}\t{}\t{}\t{}",
                class.name,
                class.correct,
                class.total,
                class.accuracy()
            )
            .map_err(|e| data_err(e.into()))?;
        }
    }
    Ok(())
}

pub fn synth(args: &SynthArgs) -> Result<(), CliError> {
    let target_dim = args.target_dim.unwrap_or(args.dim);
    if args.heldout >= args.classes {
        return Err(CliError::Usage(format!(
            "cannot hold out {} of {} classes",
            args.heldout, args.classes
        )));
    }
    let heldout: BTreeSet<usize> = (args.classes - args.heldout..args.classes).collect();
    let cfg = SynthConfig {
        source_per_class: args.source_per_class,
        target_per_class: args.target_per_class,
        test_per_class: args.test_per_class,
        source_dim: args.dim,
        target_dim,
        categories: args.classes,
        center_spread: args.spread,
        noise: args.noise,
        shift: match args.preset {
            PresetArg::Rotation => ShiftKind::Rotation,
            PresetArg::Linear => ShiftKind::RandomLinear,
            PresetArg::Bias => ShiftKind::LinearPlusBias,
            PresetArg::Dimchange => ShiftKind::DimensionChange,
        },
        heldout,
        rng_seed: args.seed,
    };
    let out = make_shifted_pair(&cfg).map_err(usage_err)?;

    let dir = Path::new(&args.out_dir);
    std::fs::create_dir_all(dir).map_err(|e| CliError::Data(e.to_string()))?;
    let write = |name: &str, data: &Dataset| -> Result<(), CliError> {
        let path = dir.join(name);
        write_sparse_dataset(data, &path).map_err(data_err)?;
        eprintln!("wrote {}", path.display());
        Ok(())
    };
    write("source_train.svm", &out.source_train)?;
    write("source_test.svm", &out.source_test)?;
    write("target_train.svm", &out.target_train)?;
    write("target_test.svm", &out.target_test)?;
    if let Some(held) = &out.heldout_source {
        write("heldout_source.svm", held)?;
    }
    if let Some(held) = &out.heldout_target_test {
        write("heldout_target_test.svm", held)?;
    }
    Ok(())
}

struct GridPoint {
    n: usize,
    nt: usize,
    d: usize,
    dt: usize,
    k: usize,
}

fn parse_grid(specs: &[String]) -> Result<Vec<GridPoint>, CliError> {
    let mut n = vec![200usize];
    let mut nt = vec![500usize];
    let mut d = vec![100usize];
    let mut dt = vec![100usize];
    let mut k = vec![5usize];
    for spec in specs {
        let (key, values) = spec.split_once('=').ok_or_else(|| {
            CliError::Usage(format!("grid spec {spec:?} is not of the form key=v1,v2"))
        })?;
        let parsed: Result<Vec<usize>, _> = values.split(',').map(|v| v.trim().parse()).collect();
        let parsed = parsed
            .map_err(|_| CliError::Usage(format!("bad values in grid spec {spec:?}")))?;
        if parsed.is_empty() || parsed.contains(&0) {
            return Err(CliError::Usage(format!(
                "grid values must be positive in {spec:?}"
            )));
        }
        match key {
            "n" => n = parsed,
            "nt" => nt = parsed,
            "D" => d = parsed,
            "Dt" => dt = parsed,
            "K" => k = parsed,
            other => {
                return Err(CliError::Usage(format!(
                    "unknown grid key {other:?} (expected n, nt, D, Dt, K)"
                )))
            }
        }
    }
    let mut points = Vec::new();
    for &nv in &n {
        for &ntv in &nt {
            for &dv in &d {
                for &dtv in &dt {
                    for &kv in &k {
                        points.push(GridPoint {
                            n: nv,
                            nt: ntv,
                            d: dv,
                            dt: dtv,
                            k: kv,
                        });
                    }
                }
            }
        }
    }
    Ok(points)
}

fn bench_instance(point: &GridPoint, seed: u64) -> (Dataset, HyperplaneSet) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cats = (0..point.k).map(|c| format!("c{c}")).collect();
    let examples = (0..point.nt)
        .map(|_| {
            let v: Vec<f64> = (0..point.dt).map(|_| rng.gen_range(-1.0..1.0)).collect();
            (FeatureVector::Dense(v), rng.gen_range(0..point.k))
        })
        .collect();
    let targets = Dataset::new(examples, point.dt, cats, DomainTag::Target)
        .expect("bench instance is valid");
    let planes = (0..point.k)
        .map(|_| (0..point.d).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    (targets, HyperplaneSet::new(planes).expect("bench planes are valid"))
}

/// Wall time of one full sweep over the constraints, isolated by running
/// the solver for one pass and for `passes + 1` passes and differencing,
/// so that setup cost cancels.
fn time_passes(
    targets: &Dataset,
    planes: &HyperplaneSet,
    passes: usize,
    seed: u64,
) -> f64 {
    let config = |max_passes: usize| SolverConfig {
        c_target: 1.0,
        epsilon: 1e-300,
        max_passes,
        rng_seed: seed,
        shrinking: false,
        ..SolverConfig::default()
    };
    let start = Instant::now();
    let short = solve_transform(targets, planes, &config(1)).expect("bench solve");
    let t1 = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let long = solve_transform(targets, planes, &config(passes + 1)).expect("bench solve");
    let t2 = start.elapsed().as_secs_f64();
    let extra = long.diagnostics.passes.saturating_sub(short.diagnostics.passes);
    if extra == 0 {
        return 0.0;
    }
    ((t2 - t1).max(0.0) / extra as f64) * 1000.0
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    values[values.len() / 2]
}

pub fn bench(args: &BenchArgs) -> Result<(), CliError> {
    if args.repeats == 0 || args.passes == 0 {
        return Err(CliError::Usage(
            "repeats and passes must be positive".into(),
        ));
    }
    let points = parse_grid(&args.grid)?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    writeln!(out, "n,nt,D,Dt,K,pass_ms,per_constraint_ns")
        .map_err(|e| CliError::Data(e.to_string()))?;
    for (idx, point) in points.iter().enumerate() {
        let (targets, planes) = bench_instance(point, args.seed.wrapping_add(idx as u64));
        let mut samples: Vec<f64> = (0..args.repeats)
            .map(|_| time_passes(&targets, &planes, args.passes, args.seed))
            .collect();
        let pass_ms = median(&mut samples);
        let per_constraint_ns = pass_ms * 1e6 / (point.k * point.nt) as f64;
        writeln!(
            out,
            "{},{},{},{},{},{:.6},{:.1}",
            point.n, point.nt, point.d, point.dt, point.k, pass_ms, per_constraint_ns
        )
        .map_err(|e| CliError::Data(e.to_string()))?;
    }
    Ok(())
}
