//! Concrete hypothesis spaces and their ERM routines.
//!
//! Enumerable spaces (finite tables, 1-d thresholds over a grid,
//! halfspaces over a query set, the lower-bound family) run ERM by exact
//! exhaustive minimization with deterministic tie-breaking: the first
//! predictor in enumeration order among the minimizers wins. The
//! two-layer network is oracle-only; its ERM is heuristic SGD and every
//! result it produces says so.

use thiserror::Error;

use crate::domain::{DomainError, Label, LabeledSample, Point, Predictor, PredictorTag};
use crate::halfspace::{enumerate_dichotomies, HalfspaceError};
use crate::lowerbound::LowerBoundConstruction;
use crate::net::{NetError, NetParams};
use crate::rng::SeedStream;
use crate::Real;

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("hypothesis space '{0}' is not enumerable; use an oracle reduction")]
    NotEnumerable(String),
    #[error("empty input")]
    Empty,
    #[error("invalid weights: {0}")]
    BadWeights(String),
    #[error("no finite query universe available for '{0}'")]
    NoUniverse(String),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Halfspace(#[from] HalfspaceError),
    #[error(transparent)]
    Net(#[from] NetError),
}

/// Labeled examples with non-negative weights summing to one.
#[derive(Debug, Clone)]
pub struct WeightedExampleSet<S> {
    items: Vec<(Point<S>, Label, S)>,
}

impl<S: Real> WeightedExampleSet<S> {
    pub fn new(items: Vec<(Point<S>, Label, S)>) -> Result<Self, LearnError> {
        if items.is_empty() {
            return Err(LearnError::Empty);
        }
        if items
            .iter()
            .any(|(_, _, w)| *w < S::zero() || !w.is_finite())
        {
            return Err(LearnError::BadWeights(
                "weights must be finite and non-negative".into(),
            ));
        }
        let total = items.iter().fold(S::zero(), |a, (_, _, w)| a + *w);
        if (total - S::one()).abs() > S::prob_tolerance() {
            return Err(LearnError::BadWeights(format!(
                "weights sum to {total}, not 1"
            )));
        }
        Ok(Self { items })
    }

    pub fn uniform(s: &LabeledSample<S>) -> Result<Self, LearnError> {
        let w = S::one() / S::from_usize(s.len()).unwrap();
        WeightedExampleSet::new(s.iter().map(|(x, y)| (x.clone(), *y, w)).collect())
    }

    pub fn items(&self) -> &[(Point<S>, Label, S)] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Weighted misclassification error of a predictor.
    pub fn error_of(&self, h: &Predictor<S>) -> Result<S, LearnError> {
        let mut err = S::zero();
        for (x, y, w) in &self.items {
            if h.classify(x)? != *y {
                err += *w;
            }
        }
        Ok(err)
    }

    /// `n` i.i.d. draws proportional to the weights.
    pub fn draw(&self, n: usize, stream: &mut SeedStream) -> Result<LabeledSample<S>, LearnError> {
        if n == 0 {
            return Err(LearnError::Empty);
        }
        let mut items = Vec::with_capacity(n);
        for _ in 0..n {
            let u = S::from_f64(stream.unit_f64()).unwrap();
            let mut acc = S::zero();
            let mut chosen = self.items.len() - 1;
            for (i, (_, _, w)) in self.items.iter().enumerate() {
                acc += *w;
                if u < acc {
                    chosen = i;
                    break;
                }
            }
            let (x, y, _) = &self.items[chosen];
            items.push((x.clone(), *y));
        }
        Ok(LabeledSample::new(items)?)
    }
}

/// Output of an ERM call. `heuristic` is set when the minimizer was
/// found by SGD rather than exhaustive search, in which case none of the
/// exact-ERM guarantees apply.
#[derive(Debug, Clone)]
pub struct ErmOutcome<S> {
    pub predictor: Predictor<S>,
    pub weighted_error: S,
    pub heuristic: bool,
}

/// Black-box ERM access, the interface the game reductions run against.
pub trait ErmOracle<S: Real> {
    fn erm_weighted(
        &self,
        examples: &WeightedExampleSet<S>,
        stream: &mut SeedStream,
    ) -> Result<ErmOutcome<S>, LearnError>;

    fn erm(
        &self,
        s: &LabeledSample<S>,
        stream: &mut SeedStream,
    ) -> Result<ErmOutcome<S>, LearnError> {
        self.erm_weighted(&WeightedExampleSet::uniform(s)?, stream)
    }

    /// True when ERM results are heuristic (no exact-minimizer promise).
    fn is_heuristic(&self) -> bool;
}

/// Exhaustive weighted ERM over an explicit predictor list. Ties go to
/// the lowest index.
pub fn exact_weighted_erm<S: Real>(
    predictors: &[Predictor<S>],
    examples: &WeightedExampleSet<S>,
) -> Result<(usize, S), LearnError> {
    if predictors.is_empty() {
        return Err(LearnError::Empty);
    }
    let mut best = 0usize;
    let mut best_err = examples.error_of(&predictors[0])?;
    for (i, h) in predictors.iter().enumerate().skip(1) {
        let e = examples.error_of(h)?;
        if e < best_err {
            best = i;
            best_err = e;
        }
    }
    Ok((best, best_err))
}

/// An explicit finite list of predictors, optionally with a finite query
/// universe for VC searches.
#[derive(Debug, Clone)]
pub struct FiniteTableSpace<S> {
    name: String,
    predictors: Vec<Predictor<S>>,
    universe: Vec<Point<S>>,
}

impl<S: Real> FiniteTableSpace<S> {
    pub fn new(
        name: impl Into<String>,
        predictors: Vec<Predictor<S>>,
        universe: Vec<Point<S>>,
    ) -> Self {
        Self {
            name: name.into(),
            predictors,
            universe,
        }
    }

    /// The two constant predictors, `+1` first.
    pub fn constants() -> Self {
        Self::new(
            "constants",
            vec![
                Predictor::constant(0, Label::Plus),
                Predictor::constant(1, Label::Minus),
            ],
            vec![Point::coords(vec![S::zero()])],
        )
    }

    /// A singleton family: the constant `+1` predictor.
    pub fn single_constant() -> Self {
        Self::new(
            "constant",
            vec![Predictor::constant(0, Label::Plus)],
            vec![Point::coords(vec![S::zero()])],
        )
    }

    /// Lookup-table predictors over an explicit point set: predictor `i`
    /// answers `tables[i][j]` on `points[j]` and rejects unknown points.
    pub fn from_truth_tables(
        points: Vec<Point<S>>,
        tables: Vec<Vec<Label>>,
    ) -> Result<Self, LearnError> {
        if points.is_empty() || tables.is_empty() {
            return Err(LearnError::Empty);
        }
        let shared: std::sync::Arc<[Point<S>]> = points.clone().into();
        let mut predictors = Vec::with_capacity(tables.len());
        for (i, table) in tables.into_iter().enumerate() {
            if table.len() != shared.len() {
                return Err(LearnError::BadWeights(format!(
                    "table {i} has {} labels for {} points",
                    table.len(),
                    shared.len()
                )));
            }
            let pts = std::sync::Arc::clone(&shared);
            predictors.push(Predictor::new(PredictorTag::Index(i), move |x| {
                pts.iter()
                    .position(|p| p == x)
                    .map(|j| table[j])
                    .ok_or_else(|| {
                        DomainError::OutsideDomain("point not in the lookup table".into())
                    })
            }));
        }
        Ok(Self::new("finite-table", predictors, points))
    }

    /// Coordinate projections `x ↦ sign(x_i)` on `{±1}^d`.
    pub fn dictators(d: usize) -> Self {
        let predictors = (0..d)
            .map(|i| {
                Predictor::new(PredictorTag::Index(i), move |x: &Point<S>| {
                    let c = x.as_coords()?;
                    if i >= c.len() {
                        return Err(DomainError::DimensionMismatch {
                            expected: i + 1,
                            got: c.len(),
                        });
                    }
                    Ok(Label::from_sign(c[i]))
                })
            })
            .collect();
        let universe = if d <= 6 {
            full_hypercube(d)
        } else {
            Vec::new()
        };
        Self::new("dictators", predictors, universe)
    }
}

/// The full hypercube `{±1}^d` in lexicographic order with `+1` first.
pub fn full_hypercube<S: Real>(d: usize) -> Vec<Point<S>> {
    assert!(d <= 20, "hypercube of dimension {d} is too large to list");
    (0..1usize << d)
        .map(|mask| {
            Point::coords(
                (0..d)
                    .map(|i| {
                        if mask >> i & 1 == 0 {
                            S::one()
                        } else {
                            -S::one()
                        }
                    })
                    .collect(),
            )
        })
        .collect()
}

/// Thresholds on the line over a declared finite grid of cut points. A
/// grid of `g` cuts yields `g + 1` predictors `x ↦ +1 iff x ≤ θ_i`,
/// ordered from the all-negative to the all-positive behavior on the
/// grid.
#[derive(Debug, Clone)]
pub struct ThresholdSpace<S> {
    grid: Vec<S>,
}

impl<S: Real> ThresholdSpace<S> {
    pub fn new(mut grid: Vec<S>) -> Result<Self, LearnError> {
        if grid.is_empty() {
            return Err(LearnError::Empty);
        }
        if grid.iter().any(|g| !g.is_finite()) {
            return Err(LearnError::BadWeights("grid values must be finite".into()));
        }
        grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
        grid.dedup();
        Ok(Self { grid })
    }

    pub fn grid(&self) -> &[S] {
        &self.grid
    }

    fn thresholds(&self) -> Vec<S> {
        let g = &self.grid;
        let two = S::from_f64(2.0).unwrap();
        let mut cuts = Vec::with_capacity(g.len() + 1);
        cuts.push(g[0] - S::one());
        for i in 1..g.len() {
            cuts.push((g[i - 1] + g[i]) / two);
        }
        cuts.push(g[g.len() - 1] + S::one());
        cuts
    }

    pub fn predictors(&self) -> Vec<Predictor<S>> {
        self.thresholds()
            .into_iter()
            .enumerate()
            .map(|(i, theta)| {
                Predictor::new(PredictorTag::Index(i), move |x: &Point<S>| {
                    let c = x.as_coords()?;
                    if c.len() != 1 {
                        return Err(DomainError::DimensionMismatch {
                            expected: 1,
                            got: c.len(),
                        });
                    }
                    Ok(if c[0] <= theta {
                        Label::Plus
                    } else {
                        Label::Minus
                    })
                })
            })
            .collect()
    }
}

/// Halfspaces in dimension ≤ 3, enumerated by their realizable sign
/// patterns on a declared query set. Each enumerated predictor carries
/// an actual witness `(w, b)` and so is defined on all of `R^d`.
#[derive(Debug, Clone)]
pub struct HalfspaceQuerySpace<S> {
    query: Vec<Point<S>>,
}

impl<S: Real> HalfspaceQuerySpace<S> {
    pub fn new(query: Vec<Point<S>>) -> Result<Self, LearnError> {
        if query.is_empty() {
            return Err(LearnError::Empty);
        }
        Ok(Self { query })
    }

    pub fn query(&self) -> &[Point<S>] {
        &self.query
    }

    pub fn predictors(&self) -> Result<Vec<Predictor<S>>, LearnError> {
        let dichotomies = enumerate_dichotomies(&self.query)?;
        Ok(dichotomies
            .into_iter()
            .enumerate()
            .map(|(i, d)| {
                Predictor::new(PredictorTag::Index(i), move |x: &Point<S>| {
                    let c = x.as_coords()?;
                    if c.len() != d.weights.len() {
                        return Err(DomainError::DimensionMismatch {
                            expected: d.weights.len(),
                            got: c.len(),
                        });
                    }
                    Ok(d.classify(c))
                })
            })
            .collect())
    }
}

/// Training budget for the heuristic (SGD) ERM of the two-layer network.
#[derive(Debug, Clone)]
pub struct NetTrainConfig {
    pub dim: usize,
    pub width: usize,
    pub steps: usize,
    pub lr: f64,
}

impl NetTrainConfig {
    pub fn new(dim: usize, width: usize, steps: usize, lr: f64) -> Self {
        Self {
            dim,
            width,
            steps,
            lr,
        }
    }
}

/// Oracle-only hypothesis space: a two-layer ReLU network of fixed width
/// trained by seeded SGD.
#[derive(Debug, Clone)]
pub struct NetSpace<S> {
    config: NetTrainConfig,
    _marker: std::marker::PhantomData<S>,
}

impl<S: Real> NetSpace<S> {
    pub fn new(config: NetTrainConfig) -> Self {
        Self {
            config,
            _marker: std::marker::PhantomData,
        }
    }

    pub fn config(&self) -> &NetTrainConfig {
        &self.config
    }

    /// Seeded heuristic ERM: init, then `steps` single-example SGD steps
    /// drawn from the weighted example distribution.
    pub fn train(
        &self,
        examples: &WeightedExampleSet<S>,
        stream: &mut SeedStream,
    ) -> Result<NetParams<S>, LearnError> {
        let mut init_stream = stream.fork(0);
        let mut draw_stream = stream.fork(1);
        let mut params = NetParams::init(self.config.dim, self.config.width, &mut init_stream);
        let lr = S::from_f64(self.config.lr).unwrap();
        for step in 0..self.config.steps {
            let batch = examples.draw(1, &mut draw_stream)?;
            let (x, y) = &batch.items()[0];
            params.sgd_step_mut(x, *y, lr, step)?;
        }
        if !params.all_finite() {
            return Err(LearnError::Net(NetError::NonFinite {
                what: "parameters",
                step: self.config.steps,
            }));
        }
        Ok(params)
    }
}

/// A hypothesis space: one of the enumerable kinds, or the oracle-only
/// two-layer network.
#[derive(Debug, Clone)]
pub enum HypothesisSpace<S> {
    FiniteTable(FiniteTableSpace<S>),
    Threshold1d(ThresholdSpace<S>),
    Halfspace(HalfspaceQuerySpace<S>),
    LowerBound(LowerBoundConstruction),
    TwoLayerNet(NetSpace<S>),
}

impl<S: Real> HypothesisSpace<S> {
    pub fn kind(&self) -> &'static str {
        match self {
            HypothesisSpace::FiniteTable(_) => "finite-table",
            HypothesisSpace::Threshold1d(_) => "threshold-1d",
            HypothesisSpace::Halfspace(_) => "halfspace",
            HypothesisSpace::LowerBound(_) => "lowerbound-hP",
            HypothesisSpace::TwoLayerNet(_) => "two-layer-net",
        }
    }

    pub fn is_enumerable(&self) -> bool {
        !matches!(self, HypothesisSpace::TwoLayerNet(_))
    }

    /// Deterministic enumeration. Tags are unique indices; behavioral
    /// duplicates are allowed.
    pub fn enumerate(&self) -> Result<Vec<Predictor<S>>, LearnError> {
        match self {
            HypothesisSpace::FiniteTable(t) => Ok(t.predictors.clone()),
            HypothesisSpace::Threshold1d(t) => Ok(t.predictors()),
            HypothesisSpace::Halfspace(h) => h.predictors(),
            HypothesisSpace::LowerBound(c) => Ok(c.hypotheses()),
            HypothesisSpace::TwoLayerNet(_) => Err(LearnError::NotEnumerable(self.kind().into())),
        }
    }

    /// A finite point set the space is naturally queried on, used by the
    /// VC searches.
    pub fn universe(&self) -> Result<Vec<Point<S>>, LearnError> {
        match self {
            HypothesisSpace::FiniteTable(t) if !t.universe.is_empty() => Ok(t.universe.clone()),
            HypothesisSpace::FiniteTable(t) => Err(LearnError::NoUniverse(t.name.clone())),
            HypothesisSpace::Threshold1d(t) => {
                Ok(t.grid.iter().map(|&g| Point::coords(vec![g])).collect())
            }
            HypothesisSpace::Halfspace(h) => Ok(h.query.clone()),
            HypothesisSpace::LowerBound(c) => Ok(c.universe()),
            HypothesisSpace::TwoLayerNet(_) => Err(LearnError::NoUniverse(self.kind().into())),
        }
    }
}

impl<S: Real> ErmOracle<S> for HypothesisSpace<S> {
    fn erm_weighted(
        &self,
        examples: &WeightedExampleSet<S>,
        stream: &mut SeedStream,
    ) -> Result<ErmOutcome<S>, LearnError> {
        match self {
            HypothesisSpace::TwoLayerNet(space) => {
                let params = space.train(examples, stream)?;
                let predictor =
                    params.predictor(PredictorTag::Digest(format!("net-seed{}", stream.seed())));
                let weighted_error = examples.error_of(&predictor)?;
                Ok(ErmOutcome {
                    predictor,
                    weighted_error,
                    heuristic: true,
                })
            }
            _ => {
                let predictors = self.enumerate()?;
                let (best, weighted_error) = exact_weighted_erm(&predictors, examples)?;
                Ok(ErmOutcome {
                    predictor: predictors[best].clone(),
                    weighted_error,
                    heuristic: false,
                })
            }
        }
    }

    fn is_heuristic(&self) -> bool {
        matches!(self, HypothesisSpace::TwoLayerNet(_))
    }
}
