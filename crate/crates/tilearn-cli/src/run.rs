//! Command implementations: input resolution, space construction from
//! config descriptors, and output writing.

use std::path::{Path, PathBuf};

use tilearn_core::domain::{read_sample_file, sample_to_text, ErrorMatrix, ErrorSource};
use tilearn_core::experiment::{
    aggregate, gnuplot_files, invariance_identity_check, records_to_csv, run_experiment,
    summary_to_csv, ExperimentConfig, RunRecord, TargetFunction, TargetKind,
};
use tilearn_core::game::{
    coverage_on_matrix, error_matrix_for, minmax_on_matrix, mw_erm_reduction,
    mw_regret_bound_check, mw_regret_reduction, realizable_inflation, regret_on_matrix, ErmMode,
    GameReport, MwParams, DEFAULT_ROUND_CAP,
};
use tilearn_core::hypothesis::{
    FiniteTableSpace, HalfspaceQuerySpace, NetSpace, NetTrainConfig, ThresholdSpace,
};
use tilearn_core::lowerbound::LowerBoundConstruction;
use tilearn_core::net::NetParams;
use tilearn_core::rng::SeedStream;
use tilearn_core::transform::read_linear_maps_file;
use tilearn_core::vc::{
    behaviors, boolean_composition_check, complexity_report, compose_family, linear_closure_check,
    sauer_bound_check, vc_dimension, SampleShape, SearchBudget, VcValue,
};
use tilearn_core::{HypothesisSpace64, Sample64, TransformSpace64};

use crate::config::Config;
use crate::{Cli, CliError, Command, GameKind, VcKind};

pub struct Context {
    config: Config,
    seed: Option<u64>,
    out: PathBuf,
    force: bool,
}

impl Context {
    fn comments(&self, command: &str) -> Vec<String> {
        vec![
            format!("command = {command}"),
            format!("config_digest = {}", self.config.digest()),
            format!(
                "seed = {}",
                self.seed
                    .map(|s| s.to_string())
                    .unwrap_or_else(|| "none".into())
            ),
        ]
    }

    fn require_seed(&self) -> Result<u64, CliError> {
        self.seed
            .ok_or_else(|| CliError::Config("this command is stochastic; pass --seed".into()))
    }

    /// Write an output file, refusing to overwrite without --force.
    fn write(&self, name: &str, content: &str) -> Result<PathBuf, CliError> {
        let path = self.out.join(name);
        if path.exists() && !self.force {
            return Err(CliError::Precondition(format!(
                "output {} exists; pass --force to overwrite",
                path.display()
            )));
        }
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| {
                CliError::Precondition(format!("cannot create {}: {e}", parent.display()))
            })?;
        }
        std::fs::write(&path, content)
            .map_err(|e| CliError::Precondition(format!("cannot write {}: {e}", path.display())))?;
        println!("wrote {}", path.display());
        Ok(path)
    }
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(path) => Config::read_file(path)?,
        None => return Err(CliError::Config("pass --config <file>".into())),
    };
    let ctx = Context {
        config,
        seed: cli.seed,
        out: cli.out,
        force: cli.force,
    };
    match cli.command {
        Command::Game { kind } => cmd_game(&ctx, kind),
        Command::Vc { kind } => cmd_vc(&ctx, kind),
        Command::Exp => cmd_exp(&ctx),
    }
}

fn load_dataset(ctx: &Context, key: &str) -> Result<Option<Sample64>, CliError> {
    match ctx.config.get(key) {
        None => Ok(None),
        Some(path) => Ok(Some(read_sample_file::<f64>(Path::new(path))?)),
    }
}

fn require_dataset(ctx: &Context, key: &str) -> Result<Sample64, CliError> {
    load_dataset(ctx, key)?
        .ok_or_else(|| CliError::Config(format!("missing config key '{key}' (dataset path)")))
}

/// Build a hypothesis space from the `[hspace]` section. Data-dependent
/// kinds (halfspace query sets, grids from data) use the dataset.
fn build_hspace(ctx: &Context, data: Option<&Sample64>) -> Result<HypothesisSpace64, CliError> {
    let kind = ctx.config.require("hspace.kind")?;
    let dim_from = |data: Option<&Sample64>| -> Result<usize, CliError> {
        match ctx.config.get_parsed::<usize>("hspace.d")? {
            Some(d) => Ok(d),
            None => data
                .and_then(|s| s.dim())
                .ok_or_else(|| CliError::Config("set hspace.d or provide a dataset".into())),
        }
    };
    Ok(match kind {
        "constant" => HypothesisSpace64::FiniteTable(FiniteTableSpace::single_constant()),
        "constants" => HypothesisSpace64::FiniteTable(FiniteTableSpace::constants()),
        "dictators" => {
            HypothesisSpace64::FiniteTable(FiniteTableSpace::dictators(dim_from(data)?))
        }
        "threshold-1d" => {
            let grid = match ctx.config.get_f64_list("hspace.grid")? {
                Some(g) => g,
                None => {
                    let data = data.ok_or_else(|| {
                        CliError::Config("threshold-1d needs hspace.grid or a dataset".into())
                    })?;
                    data.iter()
                        .map(|(p, _)| p.as_coords().map(|c| c[0]))
                        .collect::<Result<Vec<f64>, _>>()?
                }
            };
            HypothesisSpace64::Threshold1d(ThresholdSpace::new(grid)?)
        }
        "halfspace" => {
            let data = data.ok_or_else(|| {
                CliError::Config("halfspace enumeration needs a dataset query set".into())
            })?;
            let query = data.iter().map(|(p, _)| p.clone()).collect();
            HypothesisSpace64::Halfspace(HalfspaceQuerySpace::new(query)?)
        }
        "finite-table" => {
            // One predictor per line: comma-separated ±1 labels over the
            // dataset's points, in dataset order.
            let data = data.ok_or_else(|| {
                CliError::Config("finite-table needs a dataset to define its points".into())
            })?;
            let path = ctx.config.require("hspace.tables")?;
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::Precondition(format!("cannot read {path}: {e}"))
            })?;
            let mut tables = Vec::new();
            for (lineno, raw) in text.lines().enumerate() {
                let line = raw.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let row: Result<Vec<tilearn_core::domain::Label>, CliError> = line
                    .split(',')
                    .map(|cell| {
                        tilearn_core::domain::Label::parse(cell).ok_or_else(|| {
                            CliError::Config(format!(
                                "{path}:{}: bad label {cell:?}",
                                lineno + 1
                            ))
                        })
                    })
                    .collect();
                tables.push(row?);
            }
            let points = data.iter().map(|(p, _)| p.clone()).collect();
            HypothesisSpace64::FiniteTable(FiniteTableSpace::from_truth_tables(points, tables)?)
        }
        "lowerbound-h" => {
            let k = ctx.config.require_parsed::<usize>("hspace.k")?;
            HypothesisSpace64::LowerBound(LowerBoundConstruction::new(k)?)
        }
        "net" => {
            let dim = dim_from(data)?;
            let width = ctx.config.get_or("hspace.width", 512usize)?;
            let steps = ctx.config.get_or("hspace.steps", 10_000usize)?;
            let lr = ctx.config.get_or("hspace.lr", 0.01f64)?;
            HypothesisSpace64::TwoLayerNet(NetSpace::new(NetTrainConfig::new(
                dim, width, steps, lr,
            )))
        }
        other => {
            return Err(CliError::Config(format!(
                "unknown hspace.kind '{other}' (constant | constants | dictators | threshold-1d | halfspace | finite-table | lowerbound-h | net)"
            )))
        }
    })
}

/// Build a transform space from the `[tspace]` section.
fn build_tspace(ctx: &Context, dim_hint: Option<usize>) -> Result<TransformSpace64, CliError> {
    let kind = ctx.config.get("tspace.kind").unwrap_or("identity");
    let dim = |label: &str| -> Result<usize, CliError> {
        match ctx.config.get_parsed::<usize>("tspace.d")? {
            Some(d) => Ok(d),
            None => dim_hint.ok_or_else(|| {
                CliError::Config(format!("{label} needs tspace.d or a dataset dimension"))
            }),
        }
    };
    let space = match kind {
        "identity" => TransformSpace64::identity_only(),
        "permutations-all" => TransformSpace64::permutations_all(dim("permutations-all")?)?,
        "permutations-block" => TransformSpace64::permutations_block(dim("permutations-block")?)?,
        "boolean-bitmap" => {
            let d = dim("boolean-bitmap")?;
            match ctx.config.get_u64_list("tspace.masks")? {
                Some(masks) => TransformSpace64::boolean_bitmap(d, masks)?,
                None => TransformSpace64::boolean_bitmap_full(d)?,
            }
        }
        "linear" => {
            let path = ctx.config.require("tspace.matrices")?;
            let maps = read_linear_maps_file::<f64>(Path::new(path))?;
            TransformSpace64::from_linear_maps(maps)?
        }
        "lowerbound-t" => {
            let k = ctx.config.require_parsed::<usize>("tspace.k")?;
            TransformSpace64::LowerBound(LowerBoundConstruction::new(k)?)
        }
        other => {
            return Err(CliError::Config(format!(
                "unknown tspace.kind '{other}' (identity | permutations-all | permutations-block | boolean-bitmap | linear | lowerbound-t)"
            )))
        }
    };
    match ctx.config.get_f64_list("tspace.weights")? {
        Some(w) => Ok(space.with_weights(w)?),
        None => Ok(space),
    }
}

fn search_budget(ctx: &Context) -> Result<SearchBudget, CliError> {
    let default = SearchBudget::default();
    Ok(SearchBudget {
        max_set_size: ctx.config.get_or("vc.budget-size", default.max_set_size)?,
        max_candidates: ctx
            .config
            .get_or("vc.budget-candidates", default.max_candidates)?,
    })
}

fn selection_matrix(ctx: &Context) -> Result<ErrorMatrix<f64>, CliError> {
    if let Some(path) = ctx.config.get("game.matrix") {
        return Ok(ErrorMatrix::read_file(Path::new(path))?);
    }
    // Population-level matrix when a finite-support distribution file is
    // given, empirical otherwise.
    if let Some(path) = ctx.config.get("game.distribution") {
        let dist = tilearn_core::domain::read_distribution_file::<f64>(Path::new(path))?;
        let sample_hint = dist
            .support()
            .iter()
            .map(|(p, y)| (p.clone(), *y))
            .collect::<Vec<_>>();
        let hint = tilearn_core::domain::LabeledSample::new(sample_hint)?;
        let hspace = build_hspace(ctx, Some(&hint))?;
        let tspace = build_tspace(ctx, dist.dim())?;
        return Ok(error_matrix_for(
            &hspace,
            &tspace,
            ErrorSource::Distribution(&dist),
        )?);
    }
    let data = require_dataset(ctx, "game.dataset")?;
    let hspace = build_hspace(ctx, Some(&data))?;
    let tspace = build_tspace(ctx, data.dim())?;
    Ok(error_matrix_for(
        &hspace,
        &tspace,
        ErrorSource::Sample(&data),
    )?)
}

fn write_report(
    ctx: &Context,
    name: &str,
    command: &str,
    report: &GameReport<f64>,
) -> Result<(), CliError> {
    ctx.write(name, &report.to_kv(&ctx.comments(command)))?;
    Ok(())
}

fn cmd_game(ctx: &Context, kind: GameKind) -> Result<(), CliError> {
    match kind {
        GameKind::Minmax => {
            let matrix = selection_matrix(ctx)?;
            let report = minmax_on_matrix(&matrix);
            write_report(ctx, "report_minmax.txt", "game minmax", &report)
        }
        GameKind::Coverage => {
            let matrix = selection_matrix(ctx)?;
            let eps = ctx.config.require_parsed::<f64>("game.eps")?;
            let weights = ctx.config.get_f64_list("game.weights")?;
            let report = coverage_on_matrix(&matrix, eps, weights.as_deref())?;
            write_report(ctx, "report_coverage.txt", "game coverage", &report)
        }
        GameKind::Regret => {
            let matrix = selection_matrix(ctx)?;
            let report = regret_on_matrix(&matrix);
            write_report(ctx, "report_regret.txt", "game regret", &report)
        }
        GameKind::MwErm | GameKind::MwRegret => {
            let seed = ctx.require_seed()?;
            let data = require_dataset(ctx, "game.dataset")?;
            let hspace = build_hspace(ctx, Some(&data))?;
            let tspace = build_tspace(ctx, data.dim())?;
            let eps = ctx.config.require_parsed::<f64>("game.eps")?;
            let mode = match ctx.config.get("game.mode").unwrap_or("exact") {
                "exact" => ErmMode::Exact,
                "sampled" => ErmMode::Sampled {
                    m_erm: ctx.config.require_parsed::<usize>("game.m_erm")?,
                },
                other => {
                    return Err(CliError::Config(format!(
                        "game.mode must be exact or sampled, got {other:?}"
                    )))
                }
            };
            let params = MwParams {
                eps,
                mode,
                round_cap: ctx.config.get_or("game.r_cap", DEFAULT_ROUND_CAP)?,
            };
            let mut stream = SeedStream::new(seed);
            let (name, command, trace) = match kind {
                GameKind::MwErm => (
                    "trace_mw_erm.txt",
                    "game mw-erm",
                    mw_erm_reduction(&hspace, &tspace, &data, &params, &mut stream)?,
                ),
                _ => (
                    "trace_mw_regret.txt",
                    "game mw-regret",
                    mw_regret_reduction(&hspace, &tspace, &data, &params, &mut stream)?,
                ),
            };
            if trace.capped {
                eprintln!(
                    "warning: round budget capped at {} (wanted ceil(8 ln|T|/eps^2))",
                    trace.n_rounds()
                );
            }
            // The MW bound is a theorem; check it on every produced trace.
            let check = mw_regret_bound_check(&trace)?;
            let mut comments = ctx.comments(command);
            comments.push(format!(
                "mw_bound_lhs = {} mw_bound_rhs = {} slack = {}",
                check.lhs, check.rhs, check.slack
            ));
            ctx.write(name, &trace.to_text(&comments))?;
            Ok(())
        }
        GameKind::Inflate => {
            let data = require_dataset(ctx, "game.dataset")?;
            let tspace = build_tspace(ctx, data.dim())?;
            let inflated = tspace.inflate(&data)?;
            let text = sample_to_text(&inflated, &ctx.comments("game inflate"))?;
            ctx.write("inflated.data", &text)?;
            // Also run the single ERM call when a hypothesis space is
            // configured, reporting the realizability flag.
            if ctx.config.get("hspace.kind").is_some() {
                let hspace = build_hspace(ctx, Some(&data))?;
                let mut stream = SeedStream::new(ctx.seed.unwrap_or(0));
                let outcome = realizable_inflation(&hspace, &tspace, &data, &mut stream)?;
                let mut out = String::new();
                for c in ctx.comments("game inflate") {
                    out.push_str(&format!("# {c}\n"));
                }
                out.push_str(&format!("selected = {}\n", outcome.predictor.tag()));
                out.push_str(&format!("realizable = {}\n", outcome.realizable));
                out.push_str(&format!("heuristic = {}\n", outcome.heuristic));
                out.push_str(&format!(
                    "per_transform_error = {}\n",
                    outcome
                        .per_transform_error
                        .iter()
                        .map(|e| e.to_string())
                        .collect::<Vec<_>>()
                        .join(",")
                ));
                ctx.write("report_inflate.txt", &out)?;
            }
            Ok(())
        }
    }
}

fn cmd_vc(ctx: &Context, kind: VcKind) -> Result<(), CliError> {
    let budget = search_budget(ctx)?;
    match kind {
        VcKind::Shatter => {
            let data = load_dataset(ctx, "vc.points")?;
            let hspace = build_hspace(ctx, data.as_ref())?;
            let functions = hspace.enumerate()?;
            let universe = match &data {
                Some(s) => s.iter().map(|(p, _)| p.clone()).collect(),
                None => hspace.universe()?,
            };
            let report = vc_dimension(hspace.kind(), &functions, &universe, &budget)?;
            ctx.write(
                "report_shatter.txt",
                &report.to_kv(&ctx.comments("vc shatter")),
            )?;
            Ok(())
        }
        VcKind::Sauer => {
            let data = require_dataset(ctx, "vc.points")?;
            let points: Vec<_> = data.iter().map(|(p, _)| p.clone()).collect();
            let hspace = build_hspace(ctx, Some(&data))?;
            let tspace = build_tspace(ctx, data.dim())?;
            let report =
                sauer_bound_check(&hspace.enumerate()?, &tspace.enumerate()?, &points, &budget)?;
            ctx.write("report_sauer.txt", &report.to_kv(&ctx.comments("vc sauer")))?;
            Ok(())
        }
        VcKind::LinearClosure => {
            let data = require_dataset(ctx, "vc.points")?;
            let points: Vec<_> = data.iter().map(|(p, _)| p.clone()).collect();
            let space = HalfspaceQuerySpace::new(points.clone())?;
            let maps_path = ctx.config.require("vc.matrices")?;
            let maps = read_linear_maps_file::<f64>(Path::new(maps_path))?;
            let report = linear_closure_check(&space.predictors()?, &maps, &points)?;
            ctx.write(
                "report_linear_closure.txt",
                &report.to_kv(&ctx.comments("vc linear-closure")),
            )?;
            Ok(())
        }
        VcKind::Boolean => {
            let d = ctx.config.require_parsed::<usize>("vc.d")?;
            let hspace = if ctx.config.get("hspace.kind").is_some() {
                build_hspace(ctx, None)?
            } else {
                HypothesisSpace64::FiniteTable(FiniteTableSpace::dictators(d))
            };
            let tspace = if ctx.config.get("tspace.kind").is_some() {
                build_tspace(ctx, Some(d))?
            } else {
                TransformSpace64::boolean_bitmap_full(d)?
            };
            let report =
                boolean_composition_check(&hspace.enumerate()?, &tspace.enumerate()?, d, &budget)?;
            ctx.write(
                "report_boolean.txt",
                &report.to_kv(&ctx.comments("vc boolean")),
            )?;
            Ok(())
        }
        VcKind::Lowerbound => {
            let k = ctx.config.require_parsed::<usize>("vc.k")?;
            let construction = LowerBoundConstruction::new(k)?;
            let hs = construction.hypotheses::<f64>();
            let universe = construction.universe::<f64>();
            let vc_h = vc_dimension("lowerbound-h", &hs, &universe, &budget)?;
            // The composition shatters the first k base points; verify by
            // enumerating all labelings through the constructive subsets.
            let base = construction.base_points::<f64>();
            let composed = compose_family(&hs, &construction.transforms::<f64>());
            let shattered = behaviors(&composed, &base[..k])?;
            if !shattered.is_shattering() {
                return Err(CliError::Internal(
                    "lower-bound construction failed to shatter its witness".into(),
                ));
            }
            let mut out = String::new();
            for c in ctx.comments("vc lowerbound") {
                out.push_str(&format!("# {c}\n"));
            }
            out.push_str(&format!("k = {k}\n"));
            out.push_str(&format!("family_size = {}\n", construction.family_size()));
            match vc_h.value {
                VcValue::Exact(v) => out.push_str(&format!("vc_h = {v}\n")),
                VcValue::AtLeast(v) => out.push_str(&format!("vc_h_lower_bound = {v}\n")),
            }
            out.push_str(&format!("vc_composed_lower_bound = {k}\n"));
            out.push_str(&format!(
                "witness = {}\n",
                (0..k).map(|i| i.to_string()).collect::<Vec<_>>().join(",")
            ));
            ctx.write("report_lowerbound.txt", &out)?;
            Ok(())
        }
        VcKind::SampleSize => {
            let shape = match ctx.config.require("vc.shape")? {
                "thm1" | "thm5" | "agnostic" => SampleShape::Agnostic,
                "thm6" | "optimistic" => SampleShape::Optimistic,
                other => {
                    return Err(CliError::Config(format!(
                        "vc.shape must be thm1 | thm5 | thm6, got {other:?}"
                    )))
                }
            };
            let vc = ctx.config.require_parsed::<usize>("vc.vc")?;
            let eps = ctx.config.require_parsed::<f64>("vc.eps")?;
            let delta = ctx.config.require_parsed::<f64>("vc.delta")?;
            let c = ctx.config.get_or("vc.c", 1.0f64)?;
            let m = ctx.config.get_parsed::<usize>("vc.m")?;
            let report = complexity_report(shape, vc, eps, delta, c, m)?;
            ctx.write(
                "report_sample_size.txt",
                &report.to_kv(&ctx.comments("vc sample-size")),
            )?;
            Ok(())
        }
    }
}

fn experiment_config(ctx: &Context) -> Result<ExperimentConfig, CliError> {
    let target = match ctx.config.get("exp.target") {
        None => TargetKind::ParityFull,
        Some(t) => TargetKind::parse(t)
            .ok_or_else(|| CliError::Config(format!("unknown exp.target {t:?}")))?,
    };
    let mut cfg = if ctx.config.get_bool("exp.paper-scale", false)? {
        ExperimentConfig::paper_scale(target)
    } else {
        let mut c = ExperimentConfig::desk_default();
        c.target = target;
        c
    };
    cfg.d = ctx.config.get_or("exp.d", cfg.d)?;
    cfg.train_size = ctx.config.get_or("exp.train", cfg.train_size)?;
    cfg.test_size = ctx.config.get_or("exp.test", cfg.test_size)?;
    cfg.steps = ctx.config.get_or("exp.steps", cfg.steps)?;
    cfg.lr = ctx.config.get_or("exp.lr", cfg.lr)?;
    cfg.batch_size = ctx.config.get_or("exp.batch", cfg.batch_size)?;
    cfg.width = ctx.config.get_or("exp.width", cfg.width)?;
    cfg.n_seeds = ctx.config.get_or("exp.seeds", cfg.n_seeds)?;
    cfg.eval_interval = ctx.config.get_or("exp.interval", cfg.eval_interval)?;
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_exp(ctx: &Context) -> Result<(), CliError> {
    let master = ctx.require_seed()?;
    let cfg = experiment_config(ctx)?;
    let mut comments = ctx.comments("exp");
    comments.push(format!(
        "cfg d={} target={} train={} test={} steps={} lr={} batch={} width={} seeds={} interval={}",
        cfg.d,
        cfg.target.as_str(),
        cfg.train_size,
        cfg.test_size,
        cfg.steps,
        cfg.lr,
        cfg.batch_size,
        cfg.width,
        cfg.n_seeds,
        cfg.eval_interval
    ));
    let base = SeedStream::new(master);
    let mut all: Vec<RunRecord<f64>> = Vec::new();
    for i in 0..cfg.n_seeds {
        let run_seed = base.fork(100 + i as u64).seed();
        let run = run_experiment::<f64>(&cfg, run_seed)?;
        if run.baseline_diverged || run.augmented_diverged {
            comments.push(format!(
                "diverged seed={run_seed} baseline={} augmented={}",
                run.baseline_diverged, run.augmented_diverged
            ));
        }
        all.extend(run.records);
    }
    ctx.write("records.csv", &records_to_csv(&all, &comments))?;
    let table = aggregate(&all)?;
    ctx.write("summary.csv", &summary_to_csv(&table, &comments))?;
    let (dat, gp) = gnuplot_files(&table, "summary.dat", &comments);
    ctx.write("summary.dat", &dat)?;
    ctx.write("plot.gp", &gp)?;

    // Population-level invariance identity at small d: a seeded probe
    // network has identical error on the cube and on every transformed
    // cube.
    if cfg.d <= 8 {
        let target = TargetFunction::new(cfg.target, cfg.d)?;
        let tspace_size_ok = target.invariance_space::<f64>()?.is_enumerable();
        if tspace_size_ok {
            let mut probe_stream = SeedStream::new(master).fork(999);
            let probe = NetParams::<f64>::init(cfg.d, 16, &mut probe_stream)
                .predictor(tilearn_core::domain::PredictorTag::Digest("probe".into()));
            let report = invariance_identity_check(&probe, &target)?;
            let mut out = String::new();
            for c in ctx.comments("exp") {
                out.push_str(&format!("# {c}\n"));
            }
            out.push_str(&format!("base_error = {}\n", report.base_error));
            out.push_str(&format!(
                "max_abs_deviation = {}\n",
                report.max_abs_deviation
            ));
            out.push_str(&format!("transforms = {}\n", report.n_transforms));
            ctx.write("invariance_check.txt", &out)?;
        }
    }
    Ok(())
}
