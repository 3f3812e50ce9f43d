//! SGD on Boolean-hypercube targets, with and without
//! invariance-respecting augmentation.
//!
//! Two targets are supported: the full parity of all coordinates, and the
//! majority vote over three block parities. Each comes with a
//! transformation group under which it is invariant (all coordinate
//! permutations, respectively block-respecting permutations). The
//! augmented trainer replaces a correctly classified example with a
//! random transform of it before each SGD update; the baseline trains on
//! the raw example.
//!
//! For one seed, the baseline and augmented arms share the identical
//! initial network and consume disjoint random streams, so the baseline
//! is bit-reproducible regardless of what the augmented arm does.

use thiserror::Error;

use crate::domain::{DomainError, Label, LabeledSample, Point};
use crate::hypothesis::{full_hypercube, LearnError};
use crate::net::{NetError, NetParams};
use crate::rng::SeedStream;
use crate::transform::{TransformError, TransformSpace};
use crate::Real;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid config: {0}")]
    BadConfig(String),
    #[error("sampled transform altered the target label; this is an implementation bug")]
    LabelNotPreserved,
    #[error("step grids differ across seeds")]
    RaggedGrids,
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Learn(#[from] LearnError),
}

/// The target function family of the experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetKind {
    /// Product of all coordinates.
    ParityFull,
    /// Sign of the sum of the three block parities (3 | d, so the sum is
    /// odd and never zero).
    MajoritySubparities,
}

impl TargetKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TargetKind::ParityFull => "parity",
            TargetKind::MajoritySubparities => "majority-of-subparities",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        match text {
            "parity" | "parity-full" => Some(TargetKind::ParityFull),
            "majority" | "majority-of-subparities" => Some(TargetKind::MajoritySubparities),
            _ => None,
        }
    }
}

/// A concrete target on `{±1}^d`.
#[derive(Debug, Clone, Copy)]
pub struct TargetFunction {
    kind: TargetKind,
    d: usize,
}

impl TargetFunction {
    pub fn new(kind: TargetKind, d: usize) -> Result<Self, ExperimentError> {
        if d == 0 {
            return Err(ExperimentError::BadConfig("d must be positive".into()));
        }
        if kind == TargetKind::MajoritySubparities && !d.is_multiple_of(3) {
            return Err(ExperimentError::BadConfig(format!(
                "majority-of-subparities needs 3 | d, got d={d}"
            )));
        }
        Ok(TargetFunction { kind, d })
    }

    pub fn kind(&self) -> TargetKind {
        self.kind
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn eval<S: Real>(&self, x: &Point<S>) -> Result<Label, DomainError> {
        let c = x.expect_hypercube(self.d)?;
        match self.kind {
            TargetKind::ParityFull => {
                let mut neg = false;
                for &v in c {
                    if v < S::zero() {
                        neg = !neg;
                    }
                }
                Ok(if neg { Label::Minus } else { Label::Plus })
            }
            TargetKind::MajoritySubparities => {
                let b = self.d / 3;
                let mut sum = 0i32;
                for j in 0..3 {
                    let mut neg = false;
                    for &v in &c[j * b..(j + 1) * b] {
                        if v < S::zero() {
                            neg = !neg;
                        }
                    }
                    sum += if neg { -1 } else { 1 };
                }
                Ok(if sum > 0 { Label::Plus } else { Label::Minus })
            }
        }
    }

    /// The transformation group under which the target is invariant.
    pub fn invariance_space<S: Real>(&self) -> Result<TransformSpace<S>, ExperimentError> {
        Ok(match self.kind {
            TargetKind::ParityFull => TransformSpace::permutations_all(self.d)?,
            TargetKind::MajoritySubparities => TransformSpace::permutations_block(self.d)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Method {
    Baseline,
    Augmented,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Baseline => "baseline",
            Method::Augmented => "augmented",
        }
    }

    pub fn parse(text: &str) -> Option<Method> {
        match text {
            "baseline" => Some(Method::Baseline),
            "augmented" => Some(Method::Augmented),
            _ => None,
        }
    }
}

/// Experiment configuration. Defaults mirror the usual setup: squared
/// loss, mini-batch size 1, learning rate 0.01, 512 hidden units, 5
/// seeds.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub d: usize,
    pub target: TargetKind,
    pub train_size: usize,
    pub test_size: usize,
    pub steps: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub width: usize,
    pub n_seeds: usize,
    pub eval_interval: usize,
}

impl ExperimentConfig {
    /// Desk-scale default: full parity in dimension 10.
    pub fn desk_default() -> Self {
        ExperimentConfig {
            d: 10,
            target: TargetKind::ParityFull,
            train_size: 2000,
            test_size: 1000,
            steps: 30_000,
            lr: 0.01,
            batch_size: 1,
            width: 512,
            n_seeds: 5,
            eval_interval: 3000,
        }
    }

    /// The larger configurations: parity in dimension 18 with 7000
    /// training points, or majority-of-subparities in dimension 21 with
    /// 5000.
    pub fn paper_scale(target: TargetKind) -> Self {
        let (d, train_size) = match target {
            TargetKind::ParityFull => (18, 7000),
            TargetKind::MajoritySubparities => (21, 5000),
        };
        ExperimentConfig {
            d,
            target,
            train_size,
            test_size: 1000,
            steps: 30_000,
            lr: 0.01,
            batch_size: 1,
            width: 512,
            n_seeds: 5,
            eval_interval: 3000,
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        TargetFunction::new(self.target, self.d)?;
        let positives = [
            ("train_size", self.train_size),
            ("test_size", self.test_size),
            ("batch_size", self.batch_size),
            ("width", self.width),
            ("n_seeds", self.n_seeds),
            ("eval_interval", self.eval_interval),
        ];
        for (name, v) in positives {
            if v == 0 {
                return Err(ExperimentError::BadConfig(format!(
                    "{name} must be positive"
                )));
            }
        }
        if !(self.lr.is_finite() && self.lr >= 0.0) {
            return Err(ExperimentError::BadConfig(format!(
                "learning rate must be finite and non-negative, got {}",
                self.lr
            )));
        }
        Ok(())
    }
}

/// One evaluation row.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord<S> {
    pub seed: u64,
    pub method: Method,
    pub step: usize,
    pub train_err: S,
    pub test_err: S,
}

/// All records of one seed, with per-arm divergence flags (a diverged arm
/// keeps its partial records).
#[derive(Debug, Clone)]
pub struct SeedRun<S> {
    pub records: Vec<RunRecord<S>>,
    pub baseline_diverged: bool,
    pub augmented_diverged: bool,
}

fn uniform_cube_sample<S: Real>(
    target: &TargetFunction,
    n: usize,
    stream: &mut SeedStream,
) -> Result<LabeledSample<S>, ExperimentError> {
    let mut items = Vec::with_capacity(n);
    for _ in 0..n {
        let coords: Vec<S> = (0..target.d())
            .map(|_| if stream.bool() { S::one() } else { -S::one() })
            .collect();
        let p = Point::coords(coords);
        let y = target.eval(&p)?;
        items.push((p, y));
    }
    Ok(LabeledSample::new(items)?)
}

fn error_on_set<S: Real>(
    params: &NetParams<S>,
    set: &LabeledSample<S>,
) -> Result<S, ExperimentError> {
    let mut wrong = 0usize;
    for (x, y) in set.iter() {
        if params.classify(x)? != *y {
            wrong += 1;
        }
    }
    Ok(S::from_usize(wrong).unwrap() / S::from_usize(set.len()).unwrap())
}

struct Arm<'a, S: Real> {
    cfg: &'a ExperimentConfig,
    target: &'a TargetFunction,
    tspace: &'a TransformSpace<S>,
    train: &'a LabeledSample<S>,
    test: &'a LabeledSample<S>,
}

impl<'a, S: Real> Arm<'a, S> {
    /// Train one arm. Returns the records and whether the run diverged
    /// (in which case the records collected so far are kept).
    fn run(
        &self,
        seed: u64,
        method: Method,
        mut params: NetParams<S>,
        stream: &mut SeedStream,
    ) -> Result<(Vec<RunRecord<S>>, bool), ExperimentError> {
        let lr = S::from_f64(self.cfg.lr).unwrap();
        let mut records = Vec::new();
        let record = |params: &NetParams<S>,
                      step: usize,
                      records: &mut Vec<RunRecord<S>>|
         -> Result<(), ExperimentError> {
            records.push(RunRecord {
                seed,
                method,
                step,
                train_err: error_on_set(params, self.train)?,
                test_err: error_on_set(params, self.test)?,
            });
            Ok(())
        };
        record(&params, 0, &mut records)?;
        let mut step = 0usize;
        while step < self.cfg.steps {
            step += 1;
            let mut batch: Vec<(Point<S>, Label)> = Vec::with_capacity(self.cfg.batch_size);
            for _ in 0..self.cfg.batch_size {
                let (x, y) = &self.train.items()[stream.index(self.train.len())];
                let example = if method == Method::Augmented && params.is_correct(x, *y)? {
                    let t = self.tspace.sample(stream);
                    let tx = t.apply(x)?;
                    if self.target.eval(&tx)? != *y {
                        return Err(ExperimentError::LabelNotPreserved);
                    }
                    (tx, *y)
                } else {
                    (x.clone(), *y)
                };
                batch.push(example);
            }
            let step_result = if batch.len() == 1 {
                let (x, y) = &batch[0];
                params.sgd_step_mut(x, *y, lr, step).map(|_| ())
            } else {
                apply_mean_gradient(&mut params, &batch, lr)
            };
            match step_result {
                Ok(()) => {}
                Err(NetError::NonFinite { .. }) => {
                    // Divergence terminates the arm; partial records are
                    // flagged by the caller.
                    return Ok((records, true));
                }
                Err(e) => return Err(e.into()),
            }
            if step.is_multiple_of(self.cfg.eval_interval) || step == self.cfg.steps {
                record(&params, step, &mut records)?;
            }
        }
        Ok((records, false))
    }
}

fn apply_mean_gradient<S: Real>(
    params: &mut NetParams<S>,
    batch: &[(Point<S>, Label)],
    lr: S,
) -> Result<(), NetError> {
    let scale = lr / S::from_usize(batch.len()).unwrap();
    let mut grads = Vec::with_capacity(batch.len());
    for (x, y) in batch {
        let (loss, g) = params.gradient(x, *y)?;
        if !loss.is_finite() {
            return Err(NetError::NonFinite {
                what: "loss",
                step: 0,
            });
        }
        grads.push(g);
    }
    let mut mean = grads.pop().expect("non-empty batch");
    for g in &grads {
        for (a, b) in mean.w1.iter_mut().zip(&g.w1) {
            *a += *b;
        }
        for (a, b) in mean.b1.iter_mut().zip(&g.b1) {
            *a += *b;
        }
        for (a, b) in mean.w2.iter_mut().zip(&g.w2) {
            *a += *b;
        }
        mean.b2 += g.b2;
    }
    params.apply_scaled(&mean, scale);
    Ok(())
}

/// Run both arms for one seed.
///
/// Stream layout: lane 0 draws the train and test sets, lane 1 the shared
/// initialization, lanes 2 and 3 drive the baseline and augmented arms.
pub fn run_experiment<S: Real>(
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<SeedRun<S>, ExperimentError> {
    cfg.validate()?;
    let target = TargetFunction::new(cfg.target, cfg.d)?;
    let tspace = target.invariance_space::<S>()?;
    let base = SeedStream::new(seed);
    let mut data_stream = base.fork(0);
    let mut init_stream = base.fork(1);
    let mut baseline_stream = base.fork(2);
    let mut augmented_stream = base.fork(3);

    let train = uniform_cube_sample::<S>(&target, cfg.train_size, &mut data_stream)?;
    let test = uniform_cube_sample::<S>(&target, cfg.test_size, &mut data_stream)?;
    let params0 = NetParams::<S>::init(cfg.d, cfg.width, &mut init_stream);

    let arm = Arm {
        cfg,
        target: &target,
        tspace: &tspace,
        train: &train,
        test: &test,
    };
    let (mut records, baseline_diverged) = arm.run(
        seed,
        Method::Baseline,
        params0.clone(),
        &mut baseline_stream,
    )?;
    let (aug_records, augmented_diverged) =
        arm.run(seed, Method::Augmented, params0, &mut augmented_stream)?;
    records.extend(aug_records);
    Ok(SeedRun {
        records,
        baseline_diverged,
        augmented_diverged,
    })
}

/// Mean and standard deviation (population) of the test error per
/// `(method, step)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow<S> {
    pub method: Method,
    pub step: usize,
    pub mean_test_err: S,
    pub std_test_err: S,
}

/// Aggregate records over seeds. Seeds must share identical step grids
/// per method.
pub fn aggregate<S: Real>(records: &[RunRecord<S>]) -> Result<Vec<SummaryRow<S>>, ExperimentError> {
    if records.is_empty() {
        return Err(ExperimentError::BadConfig("no records to aggregate".into()));
    }
    let mut seeds: Vec<u64> = records.iter().map(|r| r.seed).collect();
    seeds.sort_unstable();
    seeds.dedup();
    let mut rows = Vec::new();
    for method in [Method::Baseline, Method::Augmented] {
        let grid_of = |seed: u64| -> Vec<usize> {
            let mut g: Vec<usize> = records
                .iter()
                .filter(|r| r.method == method && r.seed == seed)
                .map(|r| r.step)
                .collect();
            g.sort_unstable();
            g
        };
        let reference = grid_of(seeds[0]);
        for &s in &seeds[1..] {
            if grid_of(s) != reference {
                return Err(ExperimentError::RaggedGrids);
            }
        }
        for &step in &reference {
            let vals: Vec<S> = records
                .iter()
                .filter(|r| r.method == method && r.step == step)
                .map(|r| r.test_err)
                .collect();
            let n = S::from_usize(vals.len()).unwrap();
            let mean = vals.iter().fold(S::zero(), |a, &b| a + b) / n;
            let var = vals
                .iter()
                .map(|&v| (v - mean) * (v - mean))
                .fold(S::zero(), |a, b| a + b)
                / n;
            rows.push(SummaryRow {
                method,
                step,
                mean_test_err: mean,
                std_test_err: var.sqrt(),
            });
        }
    }
    Ok(rows)
}

/// Raw records CSV: `seed,method,step,train_err,test_err`.
pub fn records_to_csv<S: Real>(records: &[RunRecord<S>], comments: &[String]) -> String {
    let mut out = String::new();
    for c in comments {
        out.push_str(&format!("# {c}\n"));
    }
    out.push_str("seed,method,step,train_err,test_err\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.seed,
            r.method.as_str(),
            r.step,
            r.train_err,
            r.test_err
        ));
    }
    out
}

pub fn parse_records_csv<S: Real>(
    text: &str,
    origin: &str,
) -> Result<Vec<RunRecord<S>>, ExperimentError> {
    let mut out = Vec::new();
    let mut saw_header = false;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !saw_header {
            saw_header = true;
            continue;
        }
        let err = |msg: String| ExperimentError::Parse {
            path: origin.to_string(),
            line: lineno + 1,
            msg,
        };
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 5 {
            return Err(err(format!("expected 5 cells, got {}", cells.len())));
        }
        let seed = cells[0].parse::<u64>().map_err(|e| err(e.to_string()))?;
        let method =
            Method::parse(cells[1]).ok_or_else(|| err(format!("bad method {:?}", cells[1])))?;
        let step = cells[2].parse::<usize>().map_err(|e| err(e.to_string()))?;
        let train = cells[3].parse::<f64>().map_err(|e| err(e.to_string()))?;
        let test = cells[4].parse::<f64>().map_err(|e| err(e.to_string()))?;
        out.push(RunRecord {
            seed,
            method,
            step,
            train_err: S::from_f64(train).unwrap(),
            test_err: S::from_f64(test).unwrap(),
        });
    }
    Ok(out)
}

/// Summary CSV: `method,step,mean_test_err,std_test_err`.
pub fn summary_to_csv<S: Real>(rows: &[SummaryRow<S>], comments: &[String]) -> String {
    let mut out = String::new();
    for c in comments {
        out.push_str(&format!("# {c}\n"));
    }
    out.push_str("method,step,mean_test_err,std_test_err\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.method.as_str(),
            r.step,
            r.mean_test_err,
            r.std_test_err
        ));
    }
    out
}

/// Gnuplot-compatible emission: a whitespace data table (step, then
/// mean/std per method) and a plot script referencing it.
pub fn gnuplot_files<S: Real>(
    rows: &[SummaryRow<S>],
    data_name: &str,
    comments: &[String],
) -> (String, String) {
    let mut steps: Vec<usize> = rows.iter().map(|r| r.step).collect();
    steps.sort_unstable();
    steps.dedup();
    let mut dat = String::new();
    for c in comments {
        dat.push_str(&format!("# {c}\n"));
    }
    dat.push_str("# step baseline_mean baseline_std augmented_mean augmented_std\n");
    for step in steps {
        let cell = |m: Method| -> (String, String) {
            rows.iter()
                .find(|r| r.method == m && r.step == step)
                .map(|r| {
                    (
                        format!("{}", r.mean_test_err),
                        format!("{}", r.std_test_err),
                    )
                })
                .unwrap_or_else(|| ("nan".into(), "nan".into()))
        };
        let (bm, bs) = cell(Method::Baseline);
        let (am, austd) = cell(Method::Augmented);
        dat.push_str(&format!("{step} {bm} {bs} {am} {austd}\n"));
    }
    let mut gp = String::new();
    for c in comments {
        gp.push_str(&format!("# {c}\n"));
    }
    gp.push_str("set xlabel 'step'\n");
    gp.push_str("set ylabel 'test error'\n");
    gp.push_str("set yrange [0:0.6]\n");
    gp.push_str(&format!(
        "plot '{data_name}' using 1:2:3 with yerrorlines title 'baseline', \\\n     '{data_name}' using 1:4:5 with yerrorlines title 'augmented'\n"
    ));
    (dat, gp)
}

/// Result of the population-level invariance identity check.
#[derive(Debug, Clone)]
pub struct InvarianceReport<S> {
    pub base_error: S,
    pub max_abs_deviation: S,
    pub n_transforms: usize,
}

/// On the full cube labeled by the target, the error of any predictor is
/// unchanged by every transform of the invariance group: the transform
/// permutes the cube and preserves labels. Checked exactly (errors are
/// counts over the cube).
pub fn invariance_identity_check<S: Real>(
    predictor: &crate::domain::Predictor<S>,
    target: &TargetFunction,
) -> Result<InvarianceReport<S>, ExperimentError> {
    if target.d() > 8 {
        return Err(ExperimentError::BadConfig(format!(
            "identity check enumerates the cube; d ≤ 8 required, got {}",
            target.d()
        )));
    }
    let cube: Vec<Point<S>> = full_hypercube(target.d());
    let mut items = Vec::with_capacity(cube.len());
    for p in cube {
        let y = target.eval(&p)?;
        items.push((p, y));
    }
    let full = LabeledSample::new(items)?;
    let tspace = target.invariance_space::<S>()?;
    let transforms = tspace.enumerate()?;
    let id = crate::domain::Transform::identity(0);
    let base_error = crate::domain::empirical_error(predictor, &id, &full)?;
    let mut max_dev = S::zero();
    for t in &transforms {
        let e = crate::domain::empirical_error(predictor, t, &full)?;
        max_dev = max_dev.max((e - base_error).abs());
    }
    Ok(InvarianceReport {
        base_error,
        max_abs_deviation: max_dev,
        n_transforms: transforms.len(),
    })
}
