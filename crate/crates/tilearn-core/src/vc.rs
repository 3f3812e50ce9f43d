//! Brute-force VC machinery: behavior sets, exhaustive shattering
//! searches, growth-function bounds, and sample-complexity calculators.
//!
//! Everything here is exact within its budgets. Shattering searches walk
//! candidate point sets in lexicographic order and report the first
//! witness per size, so results are deterministic; when a budget runs out
//! the report says "at least" instead of pretending exactness.

use std::collections::BTreeSet;

use itertools::Itertools;
use thiserror::Error;

use crate::domain::{DomainError, Label, Point, Predictor, PredictorTag, Transform};
use crate::halfspace::{enumerate_dichotomies, HalfspaceError};
use crate::hypothesis::{HypothesisSpace, LearnError};
use crate::transform::LinearMap;
use crate::Real;

/// Behavior computations refuse point sets larger than this.
pub const POINT_BUDGET: usize = 20;

#[derive(Debug, Error)]
pub enum VcError {
    #[error("point set of size {got} exceeds the budget {limit}")]
    PointBudget { got: usize, limit: usize },
    #[error("empty family or point set")]
    Empty,
    #[error("invalid parameter: {0}")]
    BadParameter(String),
    #[error("witness failed re-verification; this is an implementation bug")]
    BadWitness,
    #[error("{0}; this is an implementation bug")]
    LemmaViolated(String),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Halfspace(#[from] HalfspaceError),
}

/// The distinct label vectors a function family realizes on a point set,
/// stored as bitmasks (bit `i` set means point `i` labeled `+1`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BehaviorSet {
    n_points: usize,
    patterns: BTreeSet<u64>,
}

impl BehaviorSet {
    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn contains(&self, pattern: u64) -> bool {
        self.patterns.contains(&pattern)
    }

    pub fn patterns(&self) -> impl Iterator<Item = u64> + '_ {
        self.patterns.iter().copied()
    }

    pub fn is_subset_of(&self, other: &BehaviorSet) -> bool {
        self.patterns.is_subset(&other.patterns)
    }

    pub fn is_shattering(&self) -> bool {
        self.patterns.len() == 1usize << self.n_points
    }
}

fn pattern_of<S: Real>(f: &Predictor<S>, points: &[Point<S>]) -> Result<u64, VcError> {
    let mut mask = 0u64;
    for (i, p) in points.iter().enumerate() {
        if f.classify(p)? == Label::Plus {
            mask |= 1 << i;
        }
    }
    Ok(mask)
}

/// Exact distinct behaviors of `family` on `points`.
pub fn behaviors<S: Real>(
    family: &[Predictor<S>],
    points: &[Point<S>],
) -> Result<BehaviorSet, VcError> {
    if family.is_empty() || points.is_empty() {
        return Err(VcError::Empty);
    }
    if points.len() > POINT_BUDGET {
        return Err(VcError::PointBudget {
            got: points.len(),
            limit: POINT_BUDGET,
        });
    }
    let mut patterns = BTreeSet::new();
    for f in family {
        patterns.insert(pattern_of(f, points)?);
    }
    Ok(BehaviorSet {
        n_points: points.len(),
        patterns,
    })
}

/// The composed family `{x ↦ h(t(x))}`, hypothesis-major.
pub fn compose_family<S: Real>(hs: &[Predictor<S>], ts: &[Transform<S>]) -> Vec<Predictor<S>> {
    let mut out = Vec::with_capacity(hs.len() * ts.len());
    for h in hs {
        for t in ts {
            out.push(h.compose(t));
        }
    }
    out
}

/// Budgets for the exhaustive shattering search.
#[derive(Debug, Clone, Copy)]
pub struct SearchBudget {
    /// Largest candidate set size examined.
    pub max_set_size: usize,
    /// Total candidate sets examined across all sizes.
    pub max_candidates: u64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            max_set_size: POINT_BUDGET,
            max_candidates: 2_000_000,
        }
    }
}

/// Exact VC value, or a lower bound when a budget ran out first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VcValue {
    Exact(usize),
    AtLeast(usize),
}

impl VcValue {
    pub fn value(&self) -> usize {
        match self {
            VcValue::Exact(v) | VcValue::AtLeast(v) => *v,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, VcValue::Exact(_))
    }
}

/// Result of a shattering search. The witness is re-verified on
/// construction: it is genuinely shattered or the constructor refuses.
#[derive(Debug, Clone)]
pub struct VcReport {
    pub family: String,
    pub value: VcValue,
    /// Indices (into the universe) of the largest shattered set found.
    pub witness: Vec<usize>,
    pub candidates_examined: u64,
}

impl VcReport {
    fn checked<S: Real>(
        family: String,
        value: VcValue,
        witness: Vec<usize>,
        universe: &[Point<S>],
        functions: &[Predictor<S>],
        candidates_examined: u64,
    ) -> Result<Self, VcError> {
        if witness.len() != value.value() {
            return Err(VcError::BadWitness);
        }
        if !witness.is_empty() {
            let points: Vec<Point<S>> = witness.iter().map(|&i| universe[i].clone()).collect();
            if !behaviors(functions, &points)?.is_shattering() {
                return Err(VcError::BadWitness);
            }
        }
        Ok(VcReport {
            family,
            value,
            witness,
            candidates_examined,
        })
    }

    pub fn to_kv(&self, comments: &[String]) -> String {
        let mut out = String::new();
        for c in comments {
            out.push_str(&format!("# {c}\n"));
        }
        out.push_str(&format!("family = {}\n", self.family));
        match self.value {
            VcValue::Exact(v) => {
                out.push_str(&format!("vc = {v}\n"));
                out.push_str("exact = true\n");
            }
            VcValue::AtLeast(v) => {
                out.push_str(&format!("vc_lower_bound = {v}\n"));
                out.push_str("exact = false\n");
            }
        }
        out.push_str(&format!(
            "witness = {}\n",
            self.witness.iter().map(|i| i.to_string()).join(",")
        ));
        out.push_str(&format!(
            "candidates_examined = {}\n",
            self.candidates_examined
        ));
        out
    }
}

/// Exhaustive VC search of a function family over a finite universe.
///
/// Candidate sizes grow from 1; per size, candidate subsets are visited
/// in lexicographic order and the first shattered one is the witness. A
/// size with no shattered subset settles the exact value. Running out of
/// candidate budget (or reaching `max_set_size` with a witness still in
/// hand) downgrades the answer to a lower bound.
pub fn vc_dimension<S: Real>(
    name: impl Into<String>,
    functions: &[Predictor<S>],
    universe: &[Point<S>],
    budget: &SearchBudget,
) -> Result<VcReport, VcError> {
    if functions.is_empty() || universe.is_empty() {
        return Err(VcError::Empty);
    }
    let name = name.into();
    let mut labels: Vec<Vec<bool>> = Vec::with_capacity(functions.len());
    for f in functions {
        let mut row = Vec::with_capacity(universe.len());
        for p in universe {
            row.push(f.classify(p)? == Label::Plus);
        }
        labels.push(row);
    }
    // A set of n points needs 2^n distinct behaviors, so n can never
    // exceed log2 of the family size.
    let log2_cap = (usize::BITS - 1 - functions.len().leading_zeros()) as usize;
    let hard_cap = log2_cap.min(universe.len());
    let size_cap = hard_cap.min(budget.max_set_size).min(63);

    let mut witness: Vec<usize> = Vec::new();
    let mut examined = 0u64;
    let mut seen: Vec<u64> = Vec::new();
    for n in 1..=size_cap {
        let mut found: Option<Vec<usize>> = None;
        seen.clear();
        seen.resize(1usize << n, u64::MAX);
        let full = 1usize << n;
        for candidate in (0..universe.len()).combinations(n) {
            if examined >= budget.max_candidates {
                return VcReport::checked(
                    name,
                    VcValue::AtLeast(witness.len()),
                    witness,
                    universe,
                    functions,
                    examined,
                );
            }
            examined += 1;
            let stamp = examined;
            let mut distinct = 0usize;
            for row in &labels {
                let mut pattern = 0usize;
                for (bit, &point_idx) in candidate.iter().enumerate() {
                    if row[point_idx] {
                        pattern |= 1 << bit;
                    }
                }
                if seen[pattern] != stamp {
                    seen[pattern] = stamp;
                    distinct += 1;
                    if distinct == full {
                        break;
                    }
                }
            }
            if distinct == full {
                found = Some(candidate);
                break;
            }
        }
        match found {
            Some(w) => witness = w,
            None => {
                return VcReport::checked(
                    name,
                    VcValue::Exact(n - 1),
                    witness,
                    universe,
                    functions,
                    examined,
                );
            }
        }
    }
    // Every size up to the cap was shattered: exact when the cap is the
    // information-theoretic one, a lower bound when the budget cut in.
    let value = if size_cap == hard_cap {
        VcValue::Exact(witness.len())
    } else {
        VcValue::AtLeast(witness.len())
    };
    VcReport::checked(name, value, witness, universe, functions, examined)
}

/// VC search of a hypothesis space over its own query universe.
pub fn vc_of_space<S: Real>(
    space: &HypothesisSpace<S>,
    budget: &SearchBudget,
) -> Result<VcReport, VcError> {
    let functions = space.enumerate()?;
    let universe = space.universe()?;
    vc_dimension(space.kind(), &functions, &universe, budget)
}

/// Both sides of the growth-function bound for `H∘T` on `P`: the exact
/// Sauer form `|T| · Σ_{i ≤ vc(H)} C(|P|, i)` always, and the closed
/// form `|T| · (e·|P| / vc(H))^vc(H)` where it is a valid upper bound
/// (`|P| ≥ vc(H)`; below that the closed form can dip under the sum).
#[derive(Debug, Clone)]
pub struct SauerReport {
    pub behaviors: usize,
    /// `|T| · Σ_{i ≤ vc(H)} C(|P|, i)`.
    pub bound_binomial: f64,
    /// `|T| · (e·|P|/vc)^vc`, present when `|P| ≥ vc(H)`.
    pub bound_closed_form: Option<f64>,
    pub vc_h: usize,
    /// Distance to the tightest asserted bound.
    pub slack: f64,
}

impl SauerReport {
    pub fn to_kv(&self, comments: &[String]) -> String {
        let mut out = String::new();
        for c in comments {
            out.push_str(&format!("# {c}\n"));
        }
        out.push_str(&format!("behaviors = {}\n", self.behaviors));
        out.push_str(&format!("bound_binomial = {}\n", self.bound_binomial));
        match self.bound_closed_form {
            Some(b) => out.push_str(&format!("bound_closed_form = {b}\n")),
            None => out.push_str("bound_closed_form = n/a (|P| < vc)\n"),
        }
        out.push_str(&format!("vc_h = {}\n", self.vc_h));
        out.push_str(&format!("slack = {}\n", self.slack));
        out
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Check the finite-`T` growth bound on an explicit `(H, T, P)` triple.
///
/// `vc(H)` is computed exhaustively over `P ∪ T(P)`, the set of points
/// the behaviors actually probe, so the asserted inequality is the
/// honest counting statement. A violation is a hard failure.
pub fn sauer_bound_check<S: Real>(
    hs: &[Predictor<S>],
    ts: &[Transform<S>],
    points: &[Point<S>],
    budget: &SearchBudget,
) -> Result<SauerReport, VcError> {
    if hs.is_empty() || ts.is_empty() || points.is_empty() {
        return Err(VcError::Empty);
    }
    let mut universe: Vec<Point<S>> = points.to_vec();
    for t in ts {
        for p in points {
            let image = t.apply(p)?;
            if !universe.contains(&image) {
                universe.push(image);
            }
        }
    }
    let report = vc_dimension("h-for-sauer", hs, &universe, budget)?;
    let VcValue::Exact(vc_h) = report.value else {
        return Err(VcError::BadParameter(
            "vc(H) search did not complete within budget".into(),
        ));
    };
    let composed = compose_family(hs, ts);
    let count = behaviors(&composed, points)?.len();
    let m = points.len();
    let sum: f64 = (0..=vc_h.min(m)).map(|i| binomial(m, i)).sum();
    let bound_binomial = ts.len() as f64 * sum;
    let bound_closed_form = if vc_h == 0 {
        Some(ts.len() as f64)
    } else if m >= vc_h {
        Some(ts.len() as f64 * (std::f64::consts::E * m as f64 / vc_h as f64).powi(vc_h as i32))
    } else {
        None
    };
    if (count as f64) > bound_binomial {
        return Err(VcError::LemmaViolated(format!(
            "growth bound: {count} behaviors > binomial bound {bound_binomial}"
        )));
    }
    if let Some(b) = bound_closed_form {
        if (count as f64) > b {
            return Err(VcError::LemmaViolated(format!(
                "growth bound: {count} behaviors > closed-form bound {b}"
            )));
        }
    }
    let tightest = bound_closed_form.map_or(bound_binomial, |b| b.min(bound_binomial));
    Ok(SauerReport {
        behaviors: count,
        bound_binomial,
        bound_closed_form,
        vc_h,
        slack: tightest - count as f64,
    })
}

/// Composing halfspaces with linear maps stays inside the halfspace
/// family: behaviors of `H∘T` on `P` are a subset of all halfspace
/// behaviors on `P`.
#[derive(Debug, Clone)]
pub struct LinearClosureReport {
    pub composed_behaviors: usize,
    pub halfspace_behaviors: usize,
    /// `vc` of halfspaces in the ambient dimension: `d + 1`.
    pub vc_estimate: usize,
}

impl LinearClosureReport {
    pub fn to_kv(&self, comments: &[String]) -> String {
        let mut out = String::new();
        for c in comments {
            out.push_str(&format!("# {c}\n"));
        }
        out.push_str(&format!(
            "composed_behaviors = {}\n",
            self.composed_behaviors
        ));
        out.push_str(&format!(
            "halfspace_behaviors = {}\n",
            self.halfspace_behaviors
        ));
        out.push_str(&format!("vc_estimate = {}\n", self.vc_estimate));
        out
    }
}

/// Check the linear-closure property on explicit halfspace predictors,
/// linear maps, and probe points. No invertibility is assumed of the
/// maps. A violation is a hard failure.
pub fn linear_closure_check<S: Real>(
    halfspaces: &[Predictor<S>],
    maps: &[LinearMap<S>],
    points: &[Point<S>],
) -> Result<LinearClosureReport, VcError> {
    if halfspaces.is_empty() || maps.is_empty() || points.is_empty() {
        return Err(VcError::Empty);
    }
    let d = points[0].dim().ok_or(VcError::BadParameter(
        "linear closure needs coordinate points".into(),
    ))?;
    if d > 3 {
        return Err(VcError::BadParameter(format!(
            "linear closure check supports d ≤ 3, got {d}"
        )));
    }
    if points.len() > 8 {
        return Err(VcError::BadParameter(format!(
            "linear closure check supports |P| ≤ 8, got {}",
            points.len()
        )));
    }
    let ts: Vec<Transform<S>> = maps
        .iter()
        .enumerate()
        .map(|(i, m)| m.transform(i))
        .collect();
    let composed = compose_family(halfspaces, &ts);
    let composed_behaviors = behaviors(&composed, points)?;
    let mut full = BTreeSet::new();
    for dich in enumerate_dichotomies(points)? {
        let mut mask = 0u64;
        for (i, l) in dich.labels.iter().enumerate() {
            if *l == Label::Plus {
                mask |= 1 << i;
            }
        }
        full.insert(mask);
    }
    let full_set = BehaviorSet {
        n_points: points.len(),
        patterns: full,
    };
    if !composed_behaviors.is_subset_of(&full_set) {
        return Err(VcError::LemmaViolated(
            "linear closure: composed behaviors escape the halfspace family".into(),
        ));
    }
    Ok(LinearClosureReport {
        composed_behaviors: composed_behaviors.len(),
        halfspace_behaviors: full_set.len(),
        vc_estimate: d + 1,
    })
}

/// The exact quantities of the hypercube composition bound, with the
/// unverifiable O-constant left as a reported ratio.
#[derive(Debug, Clone)]
pub struct BooleanCompositionReport {
    pub vc_composed: usize,
    pub vc_h: usize,
    /// Per output bit `i`: vc of `{x ↦ T(x)_i : T ∈ T}`.
    pub vc_bits: Vec<usize>,
    /// `vc(H∘T) / ((vc(H) + Σ vc_bits) · log2 d)`; `None` when the
    /// denominator vanishes.
    pub ratio: Option<f64>,
}

impl BooleanCompositionReport {
    pub fn to_kv(&self, comments: &[String]) -> String {
        let mut out = String::new();
        for c in comments {
            out.push_str(&format!("# {c}\n"));
        }
        out.push_str(&format!("vc_composed = {}\n", self.vc_composed));
        out.push_str(&format!("vc_h = {}\n", self.vc_h));
        out.push_str(&format!(
            "vc_bits = {}\n",
            self.vc_bits.iter().map(|v| v.to_string()).join(",")
        ));
        match self.ratio {
            Some(r) => out.push_str(&format!("ratio = {r}\n")),
            None => out.push_str("ratio = undefined\n"),
        }
        out
    }
}

/// Compute `vc(H∘T)`, `vc(H)`, and every coordinate-restriction
/// `vc(T_i)` exactly over the full hypercube `{±1}^d` (`d ≤ 6`).
pub fn boolean_composition_check<S: Real>(
    hs: &[Predictor<S>],
    ts: &[Transform<S>],
    d: usize,
    budget: &SearchBudget,
) -> Result<BooleanCompositionReport, VcError> {
    if !(1..=6).contains(&d) {
        return Err(VcError::BadParameter(format!(
            "hypercube composition check supports 1 ≤ d ≤ 6, got {d}"
        )));
    }
    if hs.is_empty() || ts.is_empty() {
        return Err(VcError::Empty);
    }
    let cube = crate::hypothesis::full_hypercube::<S>(d);
    let composed = compose_family(hs, ts);
    let vc_composed = expect_exact(vc_dimension("h∘t", &composed, &cube, budget)?)?;
    let vc_h = expect_exact(vc_dimension("h", hs, &cube, budget)?)?;
    let mut vc_bits = Vec::with_capacity(d);
    for i in 0..d {
        let bit_family: Vec<Predictor<S>> = ts
            .iter()
            .map(|t| {
                let map = t.map_fn();
                Predictor::new(PredictorTag::Digest(format!("{}[{}]", t.name(), i)), {
                    move |x: &Point<S>| {
                        let image = map(x)?;
                        let c = image.as_coords()?;
                        Ok(Label::from_sign(c[i]))
                    }
                })
            })
            .collect();
        vc_bits.push(expect_exact(vc_dimension(
            format!("t-bit-{i}"),
            &bit_family,
            &cube,
            budget,
        )?)?);
    }
    let denom = (vc_h + vc_bits.iter().sum::<usize>()) as f64 * (d as f64).log2();
    let ratio = if denom > 0.0 {
        Some(vc_composed as f64 / denom)
    } else {
        None
    };
    Ok(BooleanCompositionReport {
        vc_composed,
        vc_h,
        vc_bits,
        ratio,
    })
}

fn expect_exact(report: VcReport) -> Result<usize, VcError> {
    match report.value {
        VcValue::Exact(v) => Ok(v),
        VcValue::AtLeast(_) => Err(VcError::BadParameter(
            "vc search did not complete within budget".into(),
        )),
    }
}

/// Sample-complexity shapes exposed by the calculator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleShape {
    /// `c · (vc + ln(1/δ)) / ε²` — the uniform-convergence rate behind
    /// the min-max and regret guarantees.
    Agnostic,
    /// `c · (vc · ln(1/ε) + ln(1/δ)) / ε` — the optimistic rate behind
    /// the coverage guarantee.
    Optimistic,
}

/// Calculator output: the `m(ε, δ)` estimate and, when a sample size was
/// supplied, the optimistic deviation scale `B(m, δ)`.
#[derive(Debug, Clone)]
pub struct ComplexityReport {
    pub shape: SampleShape,
    pub vc: usize,
    pub eps: f64,
    pub delta: f64,
    pub leading_constant: f64,
    pub m_estimate: f64,
    pub b_value: Option<f64>,
}

impl ComplexityReport {
    pub fn to_kv(&self, comments: &[String]) -> String {
        let mut out = String::new();
        for c in comments {
            out.push_str(&format!("# {c}\n"));
        }
        out.push_str(&format!(
            "shape = {}\n",
            match self.shape {
                SampleShape::Agnostic => "agnostic",
                SampleShape::Optimistic => "optimistic",
            }
        ));
        out.push_str(&format!("vc = {}\n", self.vc));
        out.push_str(&format!("eps = {}\n", self.eps));
        out.push_str(&format!("delta = {}\n", self.delta));
        out.push_str(&format!("c = {}\n", self.leading_constant));
        out.push_str(&format!("m_estimate = {}\n", self.m_estimate));
        if let Some(b) = self.b_value {
            out.push_str(&format!("b_value = {b}\n"));
        }
        out
    }
}

/// `m(ε, δ)` under the given shape with leading constant `c`. Natural
/// logarithms throughout.
pub fn sample_size(
    shape: SampleShape,
    vc: usize,
    eps: f64,
    delta: f64,
    c: f64,
) -> Result<f64, VcError> {
    if !(eps > 0.0 && eps < 1.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(VcError::BadParameter(format!(
            "eps and delta must be in (0, 1), got eps={eps} delta={delta}"
        )));
    }
    if c <= 0.0 {
        return Err(VcError::BadParameter(format!(
            "c must be positive, got {c}"
        )));
    }
    let v = vc as f64;
    Ok(match shape {
        SampleShape::Agnostic => c * (v + (1.0 / delta).ln()) / (eps * eps),
        SampleShape::Optimistic => c * (v * (1.0 / eps).ln() + (1.0 / delta).ln()) / eps,
    })
}

/// The optimistic deviation scale
/// `B(m, δ) = (vc · ln(2em/vc) + ln(4/δ)) / m`; needs `vc ≥ 1`.
pub fn optimistic_bound(m: usize, vc: usize, delta: f64) -> Result<f64, VcError> {
    if vc == 0 {
        return Err(VcError::BadParameter("B(m, δ) needs vc ≥ 1".into()));
    }
    if m == 0 || !(delta > 0.0 && delta < 1.0) {
        return Err(VcError::BadParameter(format!(
            "B(m, δ) needs m ≥ 1 and delta in (0, 1), got m={m} delta={delta}"
        )));
    }
    let m_f = m as f64;
    let v = vc as f64;
    Ok((v * (2.0 * std::f64::consts::E * m_f / v).ln() + (4.0 / delta).ln()) / m_f)
}

/// Bundle a sample-size estimate with the optional `B(m, δ)` value.
pub fn complexity_report(
    shape: SampleShape,
    vc: usize,
    eps: f64,
    delta: f64,
    c: f64,
    m_for_b: Option<usize>,
) -> Result<ComplexityReport, VcError> {
    let m_estimate = sample_size(shape, vc, eps, delta, c)?;
    let b_value = match m_for_b {
        Some(m) => Some(optimistic_bound(m, vc.max(1), delta)?),
        None => None,
    };
    Ok(ComplexityReport {
        shape,
        vc,
        eps,
        delta,
        leading_constant: c,
        m_estimate,
        b_value,
    })
}
