//! The learning rules, each available at the matrix level (selection on a
//! tabulated [`ErrorMatrix`]) and at the sample level (spaces + data):
//!
//! - worst-case risk minimization: pick the row minimizing the maximum
//!   error over transforms;
//! - dataset inflation + single ERM, for the realizable regime;
//! - a Multiplicative Weights reduction that solves the same min-max game
//!   through an ERM oracle alone;
//! - coverage maximization: pick the row achieving error ≤ ε on as many
//!   (optionally weighted) transforms as possible;
//! - worst-case regret minimization, and its MW reduction.
//!
//! Tie-breaking is deterministic everywhere: objective value, then
//! worst-case error, then enumeration index.

use thiserror::Error;

use crate::domain::{
    empirical_error, error_matrix, DomainError, ErrorMatrix, ErrorSource, LabeledSample, Point,
    Predictor, PredictorTag, Transform,
};
use crate::hypothesis::{ErmOracle, HypothesisSpace, LearnError, WeightedExampleSet};
use crate::rng::SeedStream;
use crate::transform::{TransformError, TransformSpace};
use crate::Real;

/// Default cap on MW rounds; hitting it flags the trace as capped.
pub const DEFAULT_ROUND_CAP: usize = 200_000;

#[derive(Debug, Error)]
pub enum GameError {
    #[error("invalid parameter: {0}")]
    BadParameter(String),
    #[error("MW bound violated (lhs {lhs} > rhs {rhs}); this is an implementation bug")]
    BoundViolated { lhs: String, rhs: String },
    #[error("ERM oracle failed at round {round}: {source}")]
    OracleFailed {
        round: usize,
        #[source]
        source: LearnError,
    },
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// Lowest index among entries minimizing `(primary, secondary)`
/// lexicographically.
fn argmin_tiebreak<S: Real>(primary: &[S], secondary: &[S]) -> usize {
    let mut best = 0usize;
    for i in 1..primary.len() {
        if primary[i] < primary[best]
            || (primary[i] == primary[best] && secondary[i] < secondary[best])
        {
            best = i;
        }
    }
    best
}

fn row_max<S: Real>(row: &[S]) -> S {
    row.iter().fold(S::neg_infinity(), |a, &b| a.max(b))
}

fn join<S: Real>(xs: &[S]) -> String {
    xs.iter()
        .map(|x| format!("{x}"))
        .collect::<Vec<_>>()
        .join(",")
}

/// Outcome of a selection rule: where it landed and why.
#[derive(Debug, Clone)]
pub struct GameReport<S> {
    pub objective: &'static str,
    pub selected: PredictorTag,
    pub selected_index: usize,
    /// The empirical min-max value of the matrix.
    pub opt_inf_hat: S,
    /// Column-wise minima: the best error within H on each transform.
    pub opt_t_hat: Vec<S>,
    pub transform_names: Vec<String>,
    /// Worst-case error of the selected row.
    pub worst_risk: S,
    /// Worst-case regret of the selected row against `opt_t_hat`.
    pub worst_regret: S,
    /// The value of the rule's own objective at the selection.
    pub objective_value: S,
    /// Coverage count (weighted when a prior was supplied).
    pub coverage_count: Option<S>,
    pub eps: Option<S>,
}

impl<S: Real> GameReport<S> {
    fn from_selection(
        objective: &'static str,
        matrix: &ErrorMatrix<S>,
        index: usize,
        objective_value: S,
    ) -> Self {
        let opt_t_hat = matrix.column_minima();
        let row = &matrix.rows()[index];
        let worst_risk = row_max(row);
        let worst_regret = row
            .iter()
            .zip(&opt_t_hat)
            .map(|(&e, &o)| e - o)
            .fold(S::neg_infinity(), |a, b| a.max(b));
        let worst_rows: Vec<S> = matrix.rows().iter().map(|r| row_max(r)).collect();
        let opt_inf_hat = worst_rows.iter().fold(S::infinity(), |a, &b| a.min(b));
        debug_assert!(worst_risk >= opt_inf_hat - S::from_f64(1e-9).unwrap());
        GameReport {
            objective,
            selected: matrix.row_tags()[index].clone(),
            selected_index: index,
            opt_inf_hat,
            opt_t_hat,
            transform_names: matrix.transform_names().to_vec(),
            worst_risk,
            worst_regret,
            objective_value,
            coverage_count: None,
            eps: None,
        }
    }

    /// Flat key=value serialization, preceded by `#` comment lines.
    pub fn to_kv(&self, comments: &[String]) -> String {
        let mut out = String::new();
        for c in comments {
            out.push_str(&format!("# {c}\n"));
        }
        out.push_str(&format!("objective = {}\n", self.objective));
        out.push_str(&format!("selected = {}\n", self.selected));
        out.push_str(&format!("selected_index = {}\n", self.selected_index));
        out.push_str(&format!("opt_inf_hat = {}\n", self.opt_inf_hat));
        out.push_str(&format!("opt_t_hat = {}\n", join(&self.opt_t_hat)));
        out.push_str(&format!(
            "transforms = {}\n",
            self.transform_names.join(",")
        ));
        out.push_str(&format!("worst_risk = {}\n", self.worst_risk));
        out.push_str(&format!("worst_regret = {}\n", self.worst_regret));
        out.push_str(&format!("objective_value = {}\n", self.objective_value));
        if let Some(c) = self.coverage_count {
            out.push_str(&format!("coverage_count = {c}\n"));
        }
        if let Some(e) = self.eps {
            out.push_str(&format!("eps = {e}\n"));
        }
        out
    }
}

/// Min-max selection on a matrix: the row whose worst-case error is
/// smallest; ties to the lower index.
pub fn minmax_on_matrix<S: Real>(matrix: &ErrorMatrix<S>) -> GameReport<S> {
    let worst: Vec<S> = matrix.rows().iter().map(|r| row_max(r)).collect();
    let index = argmin_tiebreak(&worst, &worst);
    let value = worst[index];
    GameReport::from_selection("minmax", matrix, index, value)
}

/// Coverage selection on a matrix: maximize the (weighted) number of
/// transforms with error ≤ ε; ties by smaller worst-case error, then
/// index.
pub fn coverage_on_matrix<S: Real>(
    matrix: &ErrorMatrix<S>,
    eps: S,
    weights: Option<&[S]>,
) -> Result<GameReport<S>, GameError> {
    if !(eps > S::zero() && eps <= S::one()) {
        return Err(GameError::BadParameter(format!(
            "coverage needs eps in (0, 1], got {eps}"
        )));
    }
    if let Some(w) = weights {
        if w.len() != matrix.n_transforms() {
            return Err(GameError::BadParameter(format!(
                "{} weights for {} transforms",
                w.len(),
                matrix.n_transforms()
            )));
        }
        if w.iter().any(|v| *v < S::zero() || !v.is_finite()) {
            return Err(GameError::BadParameter(
                "weights must be finite and non-negative".into(),
            ));
        }
        let total = w.iter().fold(S::zero(), |a, &b| a + b);
        if total > S::one() + S::prob_tolerance() {
            return Err(GameError::BadParameter(format!(
                "weights sum to {total} > 1"
            )));
        }
    }
    let count_of = |row: &[S]| -> S {
        row.iter()
            .enumerate()
            .filter(|(_, &e)| e <= eps)
            .map(|(j, _)| weights.map_or(S::one(), |w| w[j]))
            .fold(S::zero(), |a, b| a + b)
    };
    let counts: Vec<S> = matrix.rows().iter().map(|r| count_of(r)).collect();
    // Maximize the count: minimize its negation, tie-break on worst error.
    let neg: Vec<S> = counts.iter().map(|&c| -c).collect();
    let worst: Vec<S> = matrix.rows().iter().map(|r| row_max(r)).collect();
    let index = argmin_tiebreak(&neg, &worst);
    let mut report = GameReport::from_selection("coverage", matrix, index, counts[index]);
    report.coverage_count = Some(counts[index]);
    report.eps = Some(eps);
    Ok(report)
}

/// Worst-case regret selection on a matrix: subtract the column minima
/// and minimize the row maximum of what is left.
pub fn regret_on_matrix<S: Real>(matrix: &ErrorMatrix<S>) -> GameReport<S> {
    let opt = matrix.column_minima();
    let regrets: Vec<S> = matrix
        .rows()
        .iter()
        .map(|row| {
            row.iter()
                .zip(&opt)
                .map(|(&e, &o)| e - o)
                .fold(S::neg_infinity(), |a, b| a.max(b))
        })
        .collect();
    let worst: Vec<S> = matrix.rows().iter().map(|r| row_max(r)).collect();
    let index = argmin_tiebreak(&regrets, &worst);
    GameReport::from_selection("regret", matrix, index, regrets[index])
}

/// A selection along with the predictor it names.
#[derive(Debug, Clone)]
pub struct Selection<S> {
    pub report: GameReport<S>,
    pub predictor: Predictor<S>,
}

/// Tabulate the error matrix of enumerable spaces on a sample or finite
/// distribution.
pub fn error_matrix_for<S: Real>(
    h: &HypothesisSpace<S>,
    t: &TransformSpace<S>,
    source: ErrorSource<'_, S>,
) -> Result<ErrorMatrix<S>, GameError> {
    let hs = h.enumerate()?;
    let ts = t.enumerate()?;
    Ok(error_matrix(&hs, &ts, source)?)
}

fn select_from_matrix<S: Real>(
    h: &HypothesisSpace<S>,
    report: GameReport<S>,
) -> Result<Selection<S>, GameError> {
    let hs = h.enumerate()?;
    let predictor = hs[report.selected_index].clone();
    Ok(Selection { report, predictor })
}

/// Empirical worst-case risk minimization over enumerable spaces.
pub fn minmax_erm<S: Real>(
    h: &HypothesisSpace<S>,
    t: &TransformSpace<S>,
    s: &LabeledSample<S>,
) -> Result<Selection<S>, GameError> {
    let matrix = error_matrix_for(h, t, ErrorSource::Sample(s))?;
    select_from_matrix(h, minmax_on_matrix(&matrix))
}

/// Coverage maximization over enumerable spaces. `weights` overrides the
/// transform space's own prior when given.
pub fn coverage_select<S: Real>(
    h: &HypothesisSpace<S>,
    t: &TransformSpace<S>,
    s: &LabeledSample<S>,
    eps: S,
    weights: Option<&[S]>,
) -> Result<Selection<S>, GameError> {
    let matrix = error_matrix_for(h, t, ErrorSource::Sample(s))?;
    let w = weights.or_else(|| t.weights());
    select_from_matrix(h, coverage_on_matrix(&matrix, eps, w)?)
}

/// Worst-case regret minimization over enumerable spaces.
pub fn regret_minmax<S: Real>(
    h: &HypothesisSpace<S>,
    t: &TransformSpace<S>,
    s: &LabeledSample<S>,
) -> Result<Selection<S>, GameError> {
    let matrix = error_matrix_for(h, t, ErrorSource::Sample(s))?;
    select_from_matrix(h, regret_on_matrix(&matrix))
}

/// Result of running ERM once on the inflated dataset.
#[derive(Debug, Clone)]
pub struct InflationOutcome<S> {
    pub predictor: Predictor<S>,
    /// Per-transform empirical error of the returned predictor on `t(s)`.
    pub per_transform_error: Vec<S>,
    /// True iff the predictor is consistent on every transformed sample.
    pub realizable: bool,
    pub heuristic: bool,
}

/// Inflate `s` by every transform and run a single ERM call on the
/// result. In the realizable regime the output is consistent on every
/// `t(s)`; otherwise this minimizes the average error over transforms,
/// which can differ from the min-max selection.
pub fn realizable_inflation<S: Real>(
    oracle: &dyn ErmOracle<S>,
    t: &TransformSpace<S>,
    s: &LabeledSample<S>,
    stream: &mut SeedStream,
) -> Result<InflationOutcome<S>, GameError> {
    let inflated = t.inflate(s)?;
    let outcome = oracle.erm(&inflated, stream)?;
    let transforms = t.enumerate()?;
    let mut per = Vec::with_capacity(transforms.len());
    for tr in &transforms {
        per.push(empirical_error(&outcome.predictor, tr, s)?);
    }
    let realizable = per.iter().all(|&e| e == S::zero());
    Ok(InflationOutcome {
        predictor: outcome.predictor,
        per_transform_error: per,
        realizable,
        heuristic: outcome.heuristic,
    })
}

/// How the per-round ERM sees the reweighted data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErmMode {
    /// Hand the full weighted example set `Q_r × Unif(s)` to a weighted
    /// ERM. With an exact oracle the per-round ERM step is exact.
    Exact,
    /// Draw `m_erm` i.i.d. examples from `Q_r × Unif(s)` per round.
    Sampled { m_erm: usize },
}

/// Parameters of the MW reductions.
#[derive(Debug, Clone)]
pub struct MwParams<S> {
    pub eps: S,
    pub mode: ErmMode,
    pub round_cap: usize,
}

impl<S: Real> MwParams<S> {
    pub fn exact(eps: S) -> Self {
        MwParams {
            eps,
            mode: ErmMode::Exact,
            round_cap: DEFAULT_ROUND_CAP,
        }
    }

    pub fn sampled(eps: S, m_erm: usize) -> Self {
        MwParams {
            eps,
            mode: ErmMode::Sampled { m_erm },
            round_cap: DEFAULT_ROUND_CAP,
        }
    }

    fn validate(&self) -> Result<(), GameError> {
        let half = S::from_f64(0.5).unwrap();
        if !(self.eps > S::zero() && self.eps < half) {
            return Err(GameError::BadParameter(format!(
                "eps must be in (0, 1/2), got {}",
                self.eps
            )));
        }
        if let ErmMode::Sampled { m_erm } = self.mode {
            if m_erm == 0 {
                return Err(GameError::BadParameter("m_erm must be positive".into()));
            }
        }
        Ok(())
    }
}

/// `R = ceil(8 ln |T| / eps^2)`, at least 1, truncated at the cap.
pub fn mw_round_count(n_transforms: usize, eps: f64, cap: usize) -> (usize, bool) {
    if n_transforms <= 1 {
        return (1, false);
    }
    let raw = (8.0 * (n_transforms as f64).ln() / (eps * eps)).ceil();
    let r = (raw as usize).max(1);
    if r > cap {
        (cap, true)
    } else {
        (r, false)
    }
}

/// The adversary's Multiplicative Weights state: a distribution over
/// transform indices, exponentially reweighted by observed losses.
#[derive(Debug, Clone)]
pub struct MwState<S> {
    q: Vec<S>,
    eta: S,
    round: usize,
    z_trace: Vec<S>,
}

impl<S: Real> MwState<S> {
    /// Uniform start over `n` transform indices.
    pub fn uniform(n: usize, eta: S) -> Self {
        let w = S::one() / S::from_usize(n).unwrap();
        MwState {
            q: vec![w; n],
            eta,
            round: 0,
            z_trace: Vec::new(),
        }
    }

    /// `sqrt(8 ln |T| / R)`, the rate the regret bound is stated for.
    pub fn standard_eta(n_transforms: usize, rounds: usize) -> S {
        let n = n_transforms.max(1) as f64;
        let r = rounds.max(1) as f64;
        S::from_f64((8.0 * n.ln() / r).sqrt()).unwrap()
    }

    pub fn q(&self) -> &[S] {
        &self.q
    }

    pub fn eta(&self) -> S {
        self.eta
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn z_trace(&self) -> &[S] {
        &self.z_trace
    }

    /// One multiplicative update `q_i ∝ q_i · exp(-eta · loss_i)`.
    pub fn update(&mut self, hedge_loss: &[S]) -> Result<(), GameError> {
        if hedge_loss.len() != self.q.len() {
            return Err(GameError::BadParameter(format!(
                "loss vector of length {} for {} transforms",
                hedge_loss.len(),
                self.q.len()
            )));
        }
        let mut z = S::zero();
        for (qi, &l) in self.q.iter_mut().zip(hedge_loss) {
            *qi *= (-self.eta * l).exp();
            z += *qi;
        }
        if z <= S::zero() || !z.is_finite() {
            return Err(GameError::BadParameter(format!(
                "degenerate normalization Z = {z}"
            )));
        }
        for qi in self.q.iter_mut() {
            *qi /= z;
        }
        self.z_trace.push(z);
        self.round += 1;
        let total = self.q.iter().fold(S::zero(), |a, &b| a + b);
        debug_assert!((total - S::one()).abs() <= S::prob_tolerance());
        Ok(())
    }
}

/// Which game the trace came from; fixes how hedge losses are derived
/// from the recorded error vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceKind {
    /// Hedge loss `1 - err(h_r, T(S))`.
    Risk,
    /// Hedge loss `1 - (err(h_r, T(S)) - err(ĥ_T, T(S)))`.
    Regret,
}

/// One MW round: the distribution the round was played against, the
/// oracle's answer, and its per-transform errors.
#[derive(Debug, Clone)]
pub struct TraceRound<S> {
    pub q: Vec<S>,
    pub h_tag: PredictorTag,
    pub errors: Vec<S>,
}

/// The uniform ensemble of per-round predictors. Its error on any
/// `(t, s)` is by definition the arithmetic mean of the component errors.
#[derive(Debug, Clone)]
pub struct MixtureClassifier<S> {
    components: Vec<Predictor<S>>,
}

impl<S: Real> MixtureClassifier<S> {
    pub fn new(components: Vec<Predictor<S>>) -> Result<Self, GameError> {
        if components.is_empty() {
            return Err(GameError::BadParameter(
                "a mixture needs at least one component".into(),
            ));
        }
        Ok(MixtureClassifier { components })
    }

    pub fn components(&self) -> &[Predictor<S>] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Exact mixture error: the mean of component errors on `t(s)`.
    pub fn error_on(&self, t: &Transform<S>, s: &LabeledSample<S>) -> Result<S, GameError> {
        let mut acc = S::zero();
        for h in &self.components {
            acc += empirical_error(h, t, s)?;
        }
        Ok(acc / S::from_usize(self.components.len()).unwrap())
    }

    /// Probability that the mixture mislabels `x` against `y`: the
    /// fraction of components that do.
    pub fn error_probability(&self, x: &Point<S>, y: crate::domain::Label) -> Result<S, GameError> {
        let mut wrong = 0usize;
        for h in &self.components {
            if h.classify(x)? != y {
                wrong += 1;
            }
        }
        Ok(S::from_usize(wrong).unwrap() / S::from_usize(self.components.len()).unwrap())
    }
}

/// Full record of an MW reduction run.
#[derive(Debug, Clone)]
pub struct GameTrace<S> {
    pub kind: TraceKind,
    pub transform_names: Vec<String>,
    pub eta: S,
    pub rounds: Vec<TraceRound<S>>,
    /// Per-transform ERM baseline errors (regret traces only).
    pub opt_hat: Option<Vec<S>>,
    pub mixture: MixtureClassifier<S>,
    /// Per-transform mixture error on the training sample: column means
    /// of the per-round error vectors.
    pub mixture_errors: Vec<S>,
    /// The empirical worst case over transforms of the mixture error.
    pub worst_mixture_error: S,
    /// Set when any round's ERM answer was heuristic; the exact-ERM
    /// guarantees do not apply to such traces.
    pub heuristic: bool,
    /// Set when the round budget was truncated by the cap.
    pub capped: bool,
}

impl<S: Real> GameTrace<S> {
    pub fn n_rounds(&self) -> usize {
        self.rounds.len()
    }

    pub fn n_transforms(&self) -> usize {
        self.transform_names.len()
    }

    /// The hedge loss vector the MW update saw in round `r`.
    pub fn hedge_losses(&self, r: usize) -> Vec<S> {
        let errs = &self.rounds[r].errors;
        match (self.kind, &self.opt_hat) {
            (TraceKind::Risk, _) => errs.iter().map(|&e| S::one() - e).collect(),
            (TraceKind::Regret, Some(opt)) => errs
                .iter()
                .zip(opt)
                .map(|(&e, &o)| S::one() - (e - o))
                .collect(),
            (TraceKind::Regret, None) => unreachable!("regret trace carries opt_hat"),
        }
    }

    /// Worst-case mixture regret against `opt_hat` (regret traces).
    pub fn worst_mixture_regret(&self) -> Option<S> {
        let opt = self.opt_hat.as_ref()?;
        Some(
            self.mixture_errors
                .iter()
                .zip(opt)
                .map(|(&e, &o)| e - o)
                .fold(S::neg_infinity(), |a, b| a.max(b)),
        )
    }

    /// Structured text serialization: header fields, one line per round,
    /// then the mixture summary.
    pub fn to_text(&self, comments: &[String]) -> String {
        let mut out = String::new();
        for c in comments {
            out.push_str(&format!("# {c}\n"));
        }
        out.push_str(&format!(
            "kind = {}\n",
            match self.kind {
                TraceKind::Risk => "risk",
                TraceKind::Regret => "regret",
            }
        ));
        out.push_str(&format!(
            "transforms = {}\n",
            self.transform_names.join(",")
        ));
        out.push_str(&format!("eta = {}\n", self.eta));
        out.push_str(&format!("rounds = {}\n", self.rounds.len()));
        if let Some(opt) = &self.opt_hat {
            out.push_str(&format!("opt_hat = {}\n", join(opt)));
        }
        for (r, round) in self.rounds.iter().enumerate() {
            out.push_str(&format!(
                "round r={} q={} h={} err={}\n",
                r + 1,
                join(&round.q),
                round.h_tag,
                join(&round.errors)
            ));
        }
        let tags: Vec<String> = self
            .mixture
            .components()
            .iter()
            .map(|h| h.tag().to_string())
            .collect();
        out.push_str(&format!("mixture = {}\n", tags.join(",")));
        out.push_str(&format!("mixture_err = {}\n", join(&self.mixture_errors)));
        out.push_str(&format!(
            "worst_mixture_err = {}\n",
            self.worst_mixture_error
        ));
        if let Some(reg) = self.worst_mixture_regret() {
            out.push_str(&format!("worst_mixture_regret = {reg}\n"));
        }
        out.push_str(&format!("heuristic = {}\n", self.heuristic));
        out.push_str(&format!("capped = {}\n", self.capped));
        out
    }
}

struct MwRun<'a, S: Real> {
    oracle: &'a dyn ErmOracle<S>,
    transforms: Vec<Transform<S>>,
    names: Vec<String>,
    s: &'a LabeledSample<S>,
    params: &'a MwParams<S>,
}

impl<'a, S: Real> MwRun<'a, S> {
    fn new(
        oracle: &'a dyn ErmOracle<S>,
        t: &TransformSpace<S>,
        s: &'a LabeledSample<S>,
        params: &'a MwParams<S>,
    ) -> Result<Self, GameError> {
        params.validate()?;
        let transforms = t.enumerate()?;
        let names = transforms.iter().map(|t| t.name().to_string()).collect();
        Ok(MwRun {
            oracle,
            transforms,
            names,
            s,
            params,
        })
    }

    /// The weighted example set induced by `q` over transforms and the
    /// uniform distribution over the sample, transform-major.
    fn weighted_set(&self, q: &[S]) -> Result<WeightedExampleSet<S>, GameError> {
        let m = S::from_usize(self.s.len()).unwrap();
        let mut items = Vec::with_capacity(self.transforms.len() * self.s.len());
        for (t, &qj) in self.transforms.iter().zip(q) {
            let w = qj / m;
            for (x, y) in self.s.iter() {
                items.push((t.apply(x)?, *y, w));
            }
        }
        Ok(WeightedExampleSet::new(items)?)
    }

    fn round_erm(
        &self,
        q: &[S],
        round: usize,
        stream: &mut SeedStream,
    ) -> Result<crate::hypothesis::ErmOutcome<S>, GameError> {
        let mut round_stream = stream.fork(round as u64 + 1);
        let outcome = match self.params.mode {
            ErmMode::Exact => {
                let set = self.weighted_set(q)?;
                self.oracle.erm_weighted(&set, &mut round_stream)
            }
            ErmMode::Sampled { m_erm } => {
                let set = self.weighted_set(q)?;
                match set.draw(m_erm, &mut round_stream) {
                    Ok(drawn) => self.oracle.erm(&drawn, &mut round_stream),
                    Err(source) => return Err(GameError::OracleFailed { round, source }),
                }
            }
        };
        outcome.map_err(|source| GameError::OracleFailed { round, source })
    }

    fn errors_of(&self, h: &Predictor<S>) -> Result<Vec<S>, GameError> {
        self.transforms
            .iter()
            .map(|t| empirical_error(h, t, self.s).map_err(GameError::from))
            .collect()
    }

    fn run(
        &self,
        kind: TraceKind,
        opt_hat: Option<Vec<S>>,
        stream: &mut SeedStream,
    ) -> Result<GameTrace<S>, GameError> {
        let n = self.transforms.len();
        let (rounds, capped) =
            mw_round_count(n, self.params.eps.to_f64().unwrap(), self.params.round_cap);
        let eta = MwState::standard_eta(n, rounds);
        let mut mw = MwState::uniform(n, eta);
        let mut trace_rounds = Vec::with_capacity(rounds);
        let mut components = Vec::with_capacity(rounds);
        let mut heuristic = false;
        for r in 0..rounds {
            let q = mw.q().to_vec();
            let outcome = self.round_erm(&q, r, stream)?;
            heuristic |= outcome.heuristic;
            let errors = self.errors_of(&outcome.predictor)?;
            let hedge: Vec<S> = match (&kind, &opt_hat) {
                (TraceKind::Risk, _) => errors.iter().map(|&e| S::one() - e).collect(),
                (TraceKind::Regret, Some(opt)) => errors
                    .iter()
                    .zip(opt)
                    .map(|(&e, &o)| S::one() - (e - o))
                    .collect(),
                (TraceKind::Regret, None) => unreachable!(),
            };
            mw.update(&hedge)?;
            trace_rounds.push(TraceRound {
                q,
                h_tag: outcome.predictor.tag().clone(),
                errors,
            });
            components.push(outcome.predictor);
        }
        let r_count = S::from_usize(rounds).unwrap();
        let mixture_errors: Vec<S> = (0..n)
            .map(|j| {
                trace_rounds
                    .iter()
                    .map(|round| round.errors[j])
                    .fold(S::zero(), |a, b| a + b)
                    / r_count
            })
            .collect();
        let worst_mixture_error = row_max(&mixture_errors);
        Ok(GameTrace {
            kind,
            transform_names: self.names.clone(),
            eta,
            rounds: trace_rounds,
            opt_hat,
            mixture: MixtureClassifier::new(components)?,
            mixture_errors,
            worst_mixture_error,
            heuristic,
            capped,
        })
    }
}

/// Algorithmic reduction minimizing worst-case risk with only an ERM
/// oracle: the transform player runs MW for `R = ceil(8 ln|T| / eps^2)`
/// rounds (one round when `|T| = 1`), the hypothesis player answers each
/// round's reweighted dataset with ERM, and the output is the uniform
/// mixture of the per-round answers.
pub fn mw_erm_reduction<S: Real>(
    oracle: &dyn ErmOracle<S>,
    t: &TransformSpace<S>,
    s: &LabeledSample<S>,
    params: &MwParams<S>,
    stream: &mut SeedStream,
) -> Result<GameTrace<S>, GameError> {
    let run = MwRun::new(oracle, t, s, params)?;
    run.run(TraceKind::Risk, None, stream)
}

/// Regret-objective variant: a per-transform ERM baseline `ĥ_T` is
/// computed up front and the MW update reweights by the regret
/// `err(h_r, T(S)) - err(ĥ_T, T(S))`.
pub fn mw_regret_reduction<S: Real>(
    oracle: &dyn ErmOracle<S>,
    t: &TransformSpace<S>,
    s: &LabeledSample<S>,
    params: &MwParams<S>,
    stream: &mut SeedStream,
) -> Result<GameTrace<S>, GameError> {
    let run = MwRun::new(oracle, t, s, params)?;
    let mut opt_hat = Vec::with_capacity(run.transforms.len());
    let mut baseline_stream = stream.fork(0);
    for (j, tr) in run.transforms.iter().enumerate() {
        let mut transformed = Vec::with_capacity(s.len());
        for (x, y) in s.iter() {
            transformed.push((tr.apply(x)?, *y));
        }
        let transformed = LabeledSample::new(transformed)?;
        let outcome = oracle
            .erm(&transformed, &mut baseline_stream)
            .map_err(|source| GameError::OracleFailed { round: j, source })?;
        opt_hat.push(empirical_error(
            &outcome.predictor,
            &Transform::identity(0),
            &transformed,
        )?);
    }
    run.run(TraceKind::Regret, Some(opt_hat), stream)
}

/// Outcome of re-deriving the MW regret inequality from a trace.
#[derive(Debug, Clone)]
pub struct BoundCheck<S> {
    /// Average hedge loss actually suffered: `(1/R) Σ_r ℓ(h_r, Q_r)`.
    pub lhs: S,
    /// Best fixed transform plus the regret term:
    /// `min_T (1/R) Σ_r ℓ(h_r, T) + sqrt(ln|T| / (2R))`.
    pub rhs: S,
    pub slack: S,
    /// Hedge losses were all within [0, 1]; outside that range (possible
    /// only for heuristic regret traces) the inequality is not asserted.
    pub in_range: bool,
}

/// Recompute both sides of the MW regret inequality on a finished trace
/// and assert it. A violation on in-range losses is an implementation
/// bug, never bad data: the inequality is a theorem for any loss sequence
/// in `[0, 1]`.
pub fn mw_regret_bound_check<S: Real>(trace: &GameTrace<S>) -> Result<BoundCheck<S>, GameError> {
    let r = trace.n_rounds();
    let n = trace.n_transforms();
    if r == 0 {
        return Err(GameError::BadParameter("empty trace".into()));
    }
    let r_s = S::from_usize(r).unwrap();
    let tol = S::from_f64(1e-9).unwrap();
    let mut in_range = true;
    let mut lhs = S::zero();
    let mut per_transform = vec![S::zero(); n];
    for round in 0..r {
        let losses = trace.hedge_losses(round);
        for &l in &losses {
            if l < -tol || l > S::one() + tol {
                in_range = false;
            }
        }
        let q = &trace.rounds[round].q;
        lhs += losses
            .iter()
            .zip(q)
            .map(|(&l, &w)| l * w)
            .fold(S::zero(), |a, b| a + b);
        for (acc, &l) in per_transform.iter_mut().zip(&losses) {
            *acc += l;
        }
    }
    lhs /= r_s;
    let best_fixed = per_transform
        .iter()
        .map(|&t| t / r_s)
        .fold(S::infinity(), |a, b| a.min(b));
    let margin = S::from_f64(((n.max(1) as f64).ln() / (2.0 * r as f64)).sqrt()).unwrap();
    let rhs = best_fixed + margin;
    let slack = rhs - lhs;
    if in_range && lhs > rhs + tol {
        return Err(GameError::BoundViolated {
            lhs: format!("{lhs}"),
            rhs: format!("{rhs}"),
        });
    }
    Ok(BoundCheck {
        lhs,
        rhs,
        slack,
        in_range,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Label;
    use crate::hypothesis::FiniteTableSpace;

    /// Risks of three predictors against three transformed distributions:
    /// only h1 is good on two of the three.
    fn example1() -> ErrorMatrix<f64> {
        ErrorMatrix::from_rows(
            vec!["T1".into(), "T2".into(), "T3".into()],
            vec![
                vec![0.01, 0.01, 0.49],
                vec![0.01, 0.49, 0.49],
                vec![0.49, 0.49, 0.49],
            ],
        )
        .unwrap()
    }

    /// Two predictors, four transforms: h1 dominates per-transform optima
    /// while h2 ties the min-max value.
    fn example2() -> ErrorMatrix<f64> {
        ErrorMatrix::from_rows(
            vec!["T1".into(), "T2".into(), "T3".into(), "T4".into()],
            vec![vec![0.0, 0.125, 0.25, 0.5], vec![0.5, 0.5, 0.5, 0.5]],
        )
        .unwrap()
    }

    #[test]
    fn example1_minmax_value_and_tiebreak() {
        let report = minmax_on_matrix(&example1());
        assert!((report.objective_value - 0.49).abs() < 1e-9);
        assert!((report.opt_inf_hat - 0.49).abs() < 1e-9);
        // All three rows attain 0.49; the tie goes to h1.
        assert_eq!(report.selected_index, 0);
        assert_eq!(report.selected.to_string(), "h1");
    }

    #[test]
    fn example1_coverage_counts() {
        let report = coverage_on_matrix(&example1(), 0.05, None).unwrap();
        assert_eq!(report.selected_index, 0);
        assert_eq!(report.coverage_count, Some(2.0));
        // eps = 1 puts every transform in range for every row.
        let loose = coverage_on_matrix(&example1(), 1.0, None).unwrap();
        assert_eq!(loose.coverage_count, Some(3.0));
        assert_eq!(loose.selected_index, 0);
    }

    #[test]
    fn example1_weighted_coverage_falls_back_to_worst_case_tiebreak() {
        let w = vec![0.0, 0.0, 1.0];
        let report = coverage_on_matrix(&example1(), 0.05, Some(&w)).unwrap();
        assert_eq!(report.coverage_count, Some(0.0));
        assert_eq!(report.selected_index, 0);
    }

    #[test]
    fn example2_regret_selection() {
        let report = regret_on_matrix(&example2());
        assert_eq!(report.opt_t_hat, vec![0.0, 0.125, 0.25, 0.5]);
        assert_eq!(report.objective_value, 0.0);
        assert_eq!(report.selected_index, 0);
        // Minmax risk value 1/2, attained by both rows.
        let minmax = minmax_on_matrix(&example2());
        assert!((minmax.objective_value - 0.5).abs() < 1e-9);
    }

    #[test]
    fn single_row_has_zero_regret() {
        let m =
            ErrorMatrix::from_rows(vec!["T1".into(), "T2".into()], vec![vec![0.3, 0.7]]).unwrap();
        let report = regret_on_matrix(&m);
        assert_eq!(report.objective_value, 0.0);
    }

    #[test]
    fn random_matrices_match_brute_force_oracles() {
        let mut stream = SeedStream::new(31);
        for _ in 0..50 {
            let rows = 4 + stream.index(2);
            let cols = 4 + stream.index(2);
            let entries: Vec<Vec<f64>> = (0..rows)
                .map(|_| {
                    (0..cols)
                        .map(|_| (stream.index(101) as f64) / 100.0)
                        .collect()
                })
                .collect();
            let names = (0..cols).map(|j| format!("T{}", j + 1)).collect();
            let m = ErrorMatrix::from_rows(names, entries.clone()).unwrap();

            // Brute-force minmax.
            let mut best_i = 0;
            let mut best_v = f64::INFINITY;
            for (i, row) in entries.iter().enumerate() {
                let worst = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                if worst < best_v {
                    best_v = worst;
                    best_i = i;
                }
            }
            let report = minmax_on_matrix(&m);
            assert_eq!(report.selected_index, best_i);
            assert_eq!(report.objective_value, best_v);

            // Brute-force regret.
            let opt: Vec<f64> = (0..cols)
                .map(|j| entries.iter().map(|r| r[j]).fold(f64::INFINITY, f64::min))
                .collect();
            let mut best_i = 0;
            let mut best_r = f64::INFINITY;
            let mut best_w = f64::INFINITY;
            for (i, row) in entries.iter().enumerate() {
                let reg = row
                    .iter()
                    .zip(&opt)
                    .map(|(e, o)| e - o)
                    .fold(f64::NEG_INFINITY, f64::max);
                let worst = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                if reg < best_r || (reg == best_r && worst < best_w) {
                    best_r = reg;
                    best_i = i;
                    best_w = worst;
                }
            }
            let report = regret_on_matrix(&m);
            assert_eq!(report.selected_index, best_i);
            assert_eq!(report.objective_value, best_r);

            // Coverage argmax property: no row beats the selected count.
            let eps = (stream.index(80) as f64 + 10.0) / 100.0;
            let report = coverage_on_matrix(&m, eps, None).unwrap();
            let count_of = |row: &[f64]| row.iter().filter(|&&e| e <= eps).count() as f64;
            let best_count = entries
                .iter()
                .map(|r| count_of(r))
                .fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(report.coverage_count.unwrap(), best_count);
        }
    }

    #[test]
    fn scaling_entries_preserves_selections() {
        let mut stream = SeedStream::new(77);
        for _ in 0..20 {
            let entries: Vec<Vec<f64>> = (0..4)
                .map(|_| (0..4).map(|_| (stream.index(101) as f64) / 100.0).collect())
                .collect();
            let names: Vec<String> = (0..4).map(|j| format!("T{}", j + 1)).collect();
            let m = ErrorMatrix::from_rows(names.clone(), entries.clone()).unwrap();
            let c = 0.5;
            let scaled: Vec<Vec<f64>> = entries
                .iter()
                .map(|r| r.iter().map(|e| e * c).collect())
                .collect();
            let ms = ErrorMatrix::from_rows(names, scaled).unwrap();
            assert_eq!(
                minmax_on_matrix(&m).selected_index,
                minmax_on_matrix(&ms).selected_index
            );
            let eps = 0.3;
            assert_eq!(
                coverage_on_matrix(&m, eps, None).unwrap().selected_index,
                coverage_on_matrix(&ms, eps * c, None)
                    .unwrap()
                    .selected_index
            );
        }
    }

    /// Wire an explicit matrix into (H, T, s): points p_{j,i} are tagged
    /// (j+1, i); transform j sends base point i to p_{j,i}; predictor
    /// rows label points so that err(h, T_j(s)) hits the requested cell.
    fn realize_matrix(
        entries: &[Vec<f64>],
        m: usize,
    ) -> (
        HypothesisSpace<f64>,
        TransformSpace<f64>,
        LabeledSample<f64>,
    ) {
        let rows = entries.len();
        let cols = entries[0].len();
        let transforms: Vec<Transform<f64>> = (0..cols)
            .map(|j| {
                Transform::new(j, format!("T{}", j + 1), move |x| match x {
                    Point::Tagged { group: 0, item } => Ok(Point::tagged(j as u64 + 1, *item)),
                    _ => Err(DomainError::OutsideDomain("base points only".into())),
                })
            })
            .collect();
        let hs: Vec<Predictor<f64>> = (0..rows)
            .map(|i| {
                let row = entries[i].clone();
                Predictor::new(PredictorTag::Index(i), move |x| match x {
                    Point::Tagged { group, item } if *group >= 1 => {
                        let j = (*group - 1) as usize;
                        let wrong = (row[j] * m as f64).round() as u64;
                        Ok(if *item < wrong {
                            Label::Minus
                        } else {
                            Label::Plus
                        })
                    }
                    _ => Err(DomainError::OutsideDomain("image points only".into())),
                })
            })
            .collect();
        let universe: Vec<Point<f64>> = (0..m as u64).map(|i| Point::tagged(0, i)).collect();
        let space = HypothesisSpace::FiniteTable(FiniteTableSpace::new("rows", hs, vec![]));
        let tspace = TransformSpace::finite_list(transforms).unwrap();
        let sample =
            LabeledSample::new(universe.into_iter().map(|p| (p, Label::Plus)).collect()).unwrap();
        (space, tspace, sample)
    }

    #[test]
    fn realized_matrix_reproduces_entries() {
        let entries = vec![vec![0.25, 0.5], vec![0.0, 1.0]];
        let (h, t, s) = realize_matrix(&entries, 4);
        let m = error_matrix_for(&h, &t, ErrorSource::Sample(&s)).unwrap();
        assert_eq!(m.rows(), &entries[..]);
    }

    #[test]
    fn example1_entries_from_a_population_source() {
        // The 1%/49% table computed as exact population errors over a
        // uniform 100-point distribution.
        let entries = vec![
            vec![0.01, 0.01, 0.49],
            vec![0.01, 0.49, 0.49],
            vec![0.49, 0.49, 0.49],
        ];
        let (h, t, s) = realize_matrix(&entries, 100);
        let dist = crate::domain::FiniteDistribution::uniform(s.items().to_vec()).unwrap();
        let m = error_matrix_for(&h, &t, ErrorSource::Distribution(&dist)).unwrap();
        for (row, want) in m.rows().iter().zip(&entries) {
            for (a, b) in row.iter().zip(want) {
                assert!((a - b).abs() < 1e-9);
            }
        }
        let report = minmax_on_matrix(&m);
        assert!((report.objective_value - 0.49).abs() < 1e-9);
        assert_eq!(report.selected_index, 0);
    }

    #[test]
    fn regret_reduction_with_single_transform_is_one_exact_erm() {
        let entries = vec![vec![0.25], vec![0.5], vec![0.75]];
        let (h, t, s) = realize_matrix(&entries, 4);
        let mut stream = SeedStream::new(2);
        let trace = mw_regret_reduction(&h, &t, &s, &MwParams::exact(0.2), &mut stream).unwrap();
        assert_eq!(trace.n_rounds(), 1);
        // Exact ERM: the round answer ties the per-transform baseline.
        assert_eq!(trace.worst_mixture_regret().unwrap(), 0.0);
    }

    #[test]
    fn inflation_minimizes_average_not_worst_case() {
        // h1 = (0.4, 0.4): minmax winner. h2 = (0, 0.45): average winner.
        let entries = vec![vec![0.4, 0.4], vec![0.0, 0.45]];
        let (h, t, s) = realize_matrix(&entries, 20);
        let minmax = minmax_erm(&h, &t, &s).unwrap();
        assert_eq!(minmax.report.selected_index, 0);
        let mut stream = SeedStream::new(0);
        let inflation = realizable_inflation(&h, &t, &s, &mut stream).unwrap();
        assert_eq!(inflation.predictor.tag(), &PredictorTag::Index(1));
        assert!(!inflation.realizable);
        assert_eq!(inflation.per_transform_error, vec![0.0, 0.45]);
    }

    #[test]
    fn inflation_with_identity_is_plain_erm() {
        let space = HypothesisSpace::FiniteTable(FiniteTableSpace::constants());
        let t = TransformSpace::identity_only();
        let s = LabeledSample::new(vec![
            (Point::coords(vec![0.0]), Label::Minus),
            (Point::coords(vec![1.0]), Label::Minus),
        ])
        .unwrap();
        let mut stream = SeedStream::new(0);
        let out = realizable_inflation(&space, &t, &s, &mut stream).unwrap();
        assert_eq!(out.predictor.tag(), &PredictorTag::Index(1));
        assert!(out.realizable);
    }

    #[test]
    fn mw_starts_uniform() {
        let mw = MwState::<f64>::uniform(4, 1.0);
        assert_eq!(mw.q(), &[0.25, 0.25, 0.25, 0.25]);
    }

    #[test]
    fn mw_update_matches_closed_form() {
        // eta = 1, errors (0, 1) => hedge losses (1, 0):
        // q2 = (e^-1, 1) / (1 + e^-1).
        let mut mw = MwState::<f64>::uniform(2, 1.0);
        mw.update(&[1.0, 0.0]).unwrap();
        let e = (-1.0f64).exp();
        let expect = [e / (1.0 + e), 1.0 / (1.0 + e)];
        assert!((mw.q()[0] - expect[0]).abs() < 1e-12, "{:?}", mw.q());
        assert!((mw.q()[1] - expect[1]).abs() < 1e-12);
        assert!((mw.q()[0] - 0.2689).abs() < 1e-4);
        assert!((mw.q()[1] - 0.7311).abs() < 1e-4);
    }

    #[test]
    fn single_transform_runs_one_round() {
        let space = HypothesisSpace::FiniteTable(FiniteTableSpace::constants());
        let t = TransformSpace::identity_only();
        let s = LabeledSample::new(vec![(Point::coords(vec![0.0]), Label::Plus)]).unwrap();
        let mut stream = SeedStream::new(0);
        let trace = mw_erm_reduction(&space, &t, &s, &MwParams::exact(0.1), &mut stream).unwrap();
        assert_eq!(trace.n_rounds(), 1);
        assert_eq!(trace.worst_mixture_error, 0.0);
        assert!(!trace.heuristic);
    }

    #[test]
    fn round_count_formula() {
        let (r, capped) = mw_round_count(5, 0.1, DEFAULT_ROUND_CAP);
        assert_eq!(r, (8.0 * 5f64.ln() / 0.01).ceil() as usize);
        assert!(!capped);
        let (r, capped) = mw_round_count(5, 0.1, 100);
        assert_eq!(r, 100);
        assert!(capped);
        assert_eq!(mw_round_count(1, 0.1, 100), (1, false));
    }

    #[test]
    fn exact_mode_meets_the_minmax_benchmark() {
        // Theorem-5 shape at desk scale: mixture worst-case error is
        // within eps of the exhaustive minmax value.
        let entries = vec![
            vec![0.0, 0.5, 0.25],
            vec![0.5, 0.0, 0.25],
            vec![0.25, 0.5, 0.0],
        ];
        let (h, t, s) = realize_matrix(&entries, 4);
        let eps = 0.2;
        let mut stream = SeedStream::new(7);
        let trace = mw_erm_reduction(&h, &t, &s, &MwParams::exact(eps), &mut stream).unwrap();
        let minmax = minmax_erm(&h, &t, &s).unwrap().report.objective_value;
        assert!(
            trace.worst_mixture_error <= minmax + eps + 1e-9,
            "{} > {} + {}",
            trace.worst_mixture_error,
            minmax,
            eps
        );
        // The bound check holds on the trace.
        let check = mw_regret_bound_check(&trace).unwrap();
        assert!(check.in_range);
        assert!(check.slack >= -1e-9);
    }

    #[test]
    fn mixture_error_is_mean_of_component_errors() {
        let entries = vec![vec![0.25, 0.5], vec![0.75, 0.0]];
        let (h, t, s) = realize_matrix(&entries, 4);
        let hs = h.enumerate().unwrap();
        let ts = t.enumerate().unwrap();
        let mixture = MixtureClassifier::new(vec![hs[0].clone(), hs[1].clone()]).unwrap();
        let on_t0 = mixture.error_on(&ts[0], &s).unwrap();
        assert!((on_t0 - 0.5).abs() < 1e-12);
        let on_t1 = mixture.error_on(&ts[1], &s).unwrap();
        assert!((on_t1 - 0.25).abs() < 1e-12);
    }

    #[test]
    fn identical_columns_make_regret_and_risk_reductions_agree() {
        // With identical columns the regret offsets are a constant shift,
        // so both reductions see the same normalized updates.
        let entries = vec![vec![0.25, 0.25], vec![0.5, 0.5], vec![0.0, 0.0]];
        let (h, t, s) = realize_matrix(&entries, 4);
        let params = MwParams {
            eps: 0.3,
            mode: ErmMode::Exact,
            round_cap: 40,
        };
        let mut s1 = SeedStream::new(3);
        let risk = mw_erm_reduction(&h, &t, &s, &params, &mut s1).unwrap();
        let mut s2 = SeedStream::new(3);
        let regret = mw_regret_reduction(&h, &t, &s, &params, &mut s2).unwrap();
        assert_eq!(risk.n_rounds(), regret.n_rounds());
        for r in 0..risk.n_rounds() {
            assert_eq!(risk.rounds[r].h_tag, regret.rounds[r].h_tag);
            for (a, b) in risk.rounds[r].q.iter().zip(&regret.rounds[r].q) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn regret_reduction_on_example2_instance() {
        let entries = vec![vec![0.0, 0.125, 0.25, 0.5], vec![0.5, 0.5, 0.5, 0.5]];
        let (h, t, s) = realize_matrix(&entries, 8);
        let eps = 0.25;
        let mut stream = SeedStream::new(11);
        let trace = mw_regret_reduction(&h, &t, &s, &MwParams::exact(eps), &mut stream).unwrap();
        assert_eq!(
            trace.opt_hat.as_ref().unwrap(),
            &vec![0.0, 0.125, 0.25, 0.5]
        );
        let regret = trace.worst_mixture_regret().unwrap();
        assert!(regret <= eps + 1e-9, "mixture regret {regret}");
        let check = mw_regret_bound_check(&trace).unwrap();
        assert!(check.slack >= -1e-9);
    }

    #[test]
    fn bound_check_single_round() {
        let m =
            ErrorMatrix::from_rows(vec!["T1".into(), "T2".into()], vec![vec![0.5, 0.25]]).unwrap();
        let hs = vec![Predictor::<f64>::constant(0, Label::Plus)];
        let trace = GameTrace {
            kind: TraceKind::Risk,
            transform_names: m.transform_names().to_vec(),
            eta: MwState::<f64>::standard_eta(2, 1),
            rounds: vec![TraceRound {
                q: vec![0.5, 0.5],
                h_tag: hs[0].tag().clone(),
                errors: vec![0.5, 0.25],
            }],
            opt_hat: None,
            mixture: MixtureClassifier::new(hs).unwrap(),
            mixture_errors: vec![0.5, 0.25],
            worst_mixture_error: 0.5,
            heuristic: false,
            capped: false,
        };
        let check = mw_regret_bound_check(&trace).unwrap();
        // lhs = mean of (1-0.5, 1-0.25) under uniform q = 0.625;
        // min_T column = 0.5; margin = sqrt(ln2/2).
        assert!((check.lhs - 0.625).abs() < 1e-12);
        assert!((check.rhs - (0.5 + (2f64.ln() / 2.0).sqrt())).abs() < 1e-12);
        assert!(check.slack >= 0.0);
    }

    #[test]
    fn adversarial_rounds_still_satisfy_the_bound() {
        // Feed MW the worst row (max expected error under q) each round.
        let mut stream = SeedStream::new(23);
        for _ in 0..10 {
            let cols = 2 + stream.index(3);
            let rows = 2 + stream.index(4);
            let entries: Vec<Vec<f64>> = (0..rows)
                .map(|_| {
                    (0..cols)
                        .map(|_| (stream.index(101) as f64) / 100.0)
                        .collect()
                })
                .collect();
            let r_total = 25;
            let eta = MwState::<f64>::standard_eta(cols, r_total);
            let mut mw = MwState::uniform(cols, eta);
            let mut rounds = Vec::new();
            for _ in 0..r_total {
                let q = mw.q().to_vec();
                // Adversarial pick: maximize expected error under q.
                let pick = (0..rows)
                    .max_by(|&a, &b| {
                        let ea: f64 = entries[a].iter().zip(&q).map(|(e, w)| e * w).sum();
                        let eb: f64 = entries[b].iter().zip(&q).map(|(e, w)| e * w).sum();
                        ea.partial_cmp(&eb).unwrap()
                    })
                    .unwrap();
                let errors = entries[pick].clone();
                let hedge: Vec<f64> = errors.iter().map(|e| 1.0 - e).collect();
                mw.update(&hedge).unwrap();
                rounds.push(TraceRound {
                    q,
                    h_tag: PredictorTag::Index(pick),
                    errors,
                });
            }
            let mixture =
                MixtureClassifier::new(vec![Predictor::<f64>::constant(0, Label::Plus)]).unwrap();
            let mixture_errors: Vec<f64> = (0..cols)
                .map(|j| rounds.iter().map(|r| r.errors[j]).sum::<f64>() / r_total as f64)
                .collect();
            let trace = GameTrace {
                kind: TraceKind::Risk,
                transform_names: (0..cols).map(|j| format!("T{}", j + 1)).collect(),
                eta,
                rounds,
                opt_hat: None,
                worst_mixture_error: mixture_errors
                    .iter()
                    .cloned()
                    .fold(f64::NEG_INFINITY, f64::max),
                mixture_errors,
                mixture,
                heuristic: false,
                capped: false,
            };
            let check = mw_regret_bound_check(&trace).unwrap();
            assert!(check.in_range);
            assert!(check.slack >= -1e-9, "slack {}", check.slack);
        }
    }

    #[test]
    fn sampled_mode_and_net_oracle_produce_flagged_traces() {
        use crate::hypothesis::{NetSpace, NetTrainConfig};
        let entries = vec![vec![0.25, 0.5], vec![0.0, 0.25]];
        let (h, t, s) = realize_matrix(&entries, 4);
        // Sampled mode with an exact oracle: still a valid trace.
        let params = MwParams {
            eps: 0.3,
            mode: ErmMode::Sampled { m_erm: 16 },
            round_cap: 20,
        };
        let mut stream = SeedStream::new(5);
        let trace = mw_erm_reduction(&h, &t, &s, &params, &mut stream).unwrap();
        assert!(!trace.heuristic);
        let check = mw_regret_bound_check(&trace).unwrap();
        assert!(check.in_range && check.slack >= -1e-9);

        // A network oracle marks every trace heuristic.
        let cube = crate::hypothesis::full_hypercube::<f64>(2);
        let sample = LabeledSample::new(
            cube.iter()
                .map(|p| {
                    let c = p.as_coords().unwrap();
                    (p.clone(), Label::from_sign(c[0]))
                })
                .collect(),
        )
        .unwrap();
        let net = HypothesisSpace::TwoLayerNet(NetSpace::new(NetTrainConfig::new(2, 8, 30, 0.05)));
        let bitmap = crate::transform::TransformSpace::boolean_bitmap_full(2).unwrap();
        let params = MwParams {
            eps: 0.3,
            mode: ErmMode::Sampled { m_erm: 8 },
            round_cap: 5,
        };
        let mut stream = SeedStream::new(6);
        let trace = mw_erm_reduction(&net, &bitmap, &sample, &params, &mut stream).unwrap();
        assert!(trace.heuristic);
        assert_eq!(trace.n_rounds(), 5);
        assert!(trace.capped);
    }

    #[test]
    fn eps_outside_range_is_rejected() {
        let space = HypothesisSpace::FiniteTable(FiniteTableSpace::constants());
        let t = TransformSpace::<f64>::identity_only();
        let s = LabeledSample::new(vec![(Point::coords(vec![0.0]), Label::Plus)]).unwrap();
        let mut stream = SeedStream::new(0);
        for bad in [0.0, 0.5, 0.9] {
            assert!(matches!(
                mw_erm_reduction(&space, &t, &s, &MwParams::exact(bad), &mut stream),
                Err(GameError::BadParameter(_))
            ));
        }
    }

    #[test]
    fn report_and_trace_serialize_to_stable_text() {
        let report = minmax_on_matrix(&example1());
        let kv = report.to_kv(&["seed=1".into()]);
        assert!(kv.contains("objective = minmax"));
        assert!(kv.contains("selected = h1"));
        assert!(kv.contains("opt_inf_hat = 0.49"));

        let entries = vec![vec![0.0, 0.5], vec![0.5, 0.0]];
        let (h, t, s) = realize_matrix(&entries, 2);
        let params = MwParams {
            eps: 0.3,
            mode: ErmMode::Exact,
            round_cap: 5,
        };
        let mut stream = SeedStream::new(9);
        let trace = mw_erm_reduction(&h, &t, &s, &params, &mut stream).unwrap();
        assert!(trace.capped);
        let text = trace.to_text(&[]);
        assert!(text.contains("kind = risk"));
        assert!(text.contains("round r=1"));
        assert!(text.contains("capped = true"));
    }
}
