//! Instance spaces, datasets, finite-support distributions, predictors,
//! transformations, and the misclassification-error functional.
//!
//! Everything here is immutable after construction and every operation is
//! a pure function, so values can be shared freely across threads.
//!
//! Population quantities are computed against [`FiniteDistribution`]s:
//! distributions with finite support, so that "population error" is an
//! exactly computable weighted sum rather than an estimate. Sampling from
//! such a distribution reproduces the usual i.i.d. draw model.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use thiserror::Error;

use crate::rng::SeedStream;
use crate::Real;

/// Errors out of the domain layer: bad inputs, dimension clashes, and
/// dataset/matrix file problems.
#[derive(Debug, Error)]
pub enum DomainError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("expected a coordinate point, got an index-tagged point")]
    CoordsRequired,
    #[error("point outside the transform's domain: {0}")]
    OutsideDomain(String),
    #[error("sample must be non-empty")]
    EmptySample,
    #[error("sample points must share one dimension")]
    MixedDimensions,
    #[error("hypercube point required: every coordinate must be +1 or -1")]
    NotHypercube,
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid error matrix: {0}")]
    InvalidMatrix(String),
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// A ±1 classification label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Plus,
    Minus,
}

impl Label {
    pub fn value<S: Real>(self) -> S {
        match self {
            Label::Plus => S::one(),
            Label::Minus => -S::one(),
        }
    }

    /// Sign readout: strictly positive is `Plus`, everything else `Minus`.
    pub fn from_sign<S: Real>(v: S) -> Label {
        if v > S::zero() {
            Label::Plus
        } else {
            Label::Minus
        }
    }

    pub fn flip(self) -> Label {
        match self {
            Label::Plus => Label::Minus,
            Label::Minus => Label::Plus,
        }
    }

    pub fn parse(text: &str) -> Option<Label> {
        match text.trim() {
            "+1" | "1" | "+" => Some(Label::Plus),
            "-1" | "-" => Some(Label::Minus),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Plus => write!(f, "+1"),
            Label::Minus => write!(f, "-1"),
        }
    }
}

/// A point of the instance space.
///
/// Most spaces are `R^d` and use [`Point::Coords`]. Constructions that
/// only need an abstract set of distinct elements (no geometry) use
/// [`Point::Tagged`], a pair of indices identifying the element.
#[derive(Debug, Clone, PartialEq)]
pub enum Point<S> {
    Coords(Vec<S>),
    Tagged { group: u64, item: u64 },
}

impl<S: Real> Point<S> {
    pub fn coords(xs: Vec<S>) -> Self {
        Point::Coords(xs)
    }

    pub fn tagged(group: u64, item: u64) -> Self {
        Point::Tagged { group, item }
    }

    /// Dimension of a coordinate point; `None` for tagged points.
    pub fn dim(&self) -> Option<usize> {
        match self {
            Point::Coords(xs) => Some(xs.len()),
            Point::Tagged { .. } => None,
        }
    }

    pub fn as_coords(&self) -> Result<&[S], DomainError> {
        match self {
            Point::Coords(xs) => Ok(xs),
            Point::Tagged { .. } => Err(DomainError::CoordsRequired),
        }
    }

    /// True iff every coordinate is exactly +1 or −1.
    pub fn is_hypercube(&self) -> bool {
        match self {
            Point::Coords(xs) => xs.iter().all(|&x| x == S::one() || x == -S::one()),
            Point::Tagged { .. } => false,
        }
    }

    pub fn expect_hypercube(&self, d: usize) -> Result<&[S], DomainError> {
        let xs = self.as_coords()?;
        if xs.len() != d {
            return Err(DomainError::DimensionMismatch {
                expected: d,
                got: xs.len(),
            });
        }
        if !self.is_hypercube() {
            return Err(DomainError::NotHypercube);
        }
        Ok(xs)
    }
}

/// A finite ordered sequence of labeled points; all points share one
/// dimension (or are all tagged).
#[derive(Debug, Clone)]
pub struct LabeledSample<S> {
    items: Vec<(Point<S>, Label)>,
    dim: Option<usize>,
}

impl<S: Real> LabeledSample<S> {
    pub fn new(items: Vec<(Point<S>, Label)>) -> Result<Self, DomainError> {
        if items.is_empty() {
            return Err(DomainError::EmptySample);
        }
        let dim = items[0].0.dim();
        if items.iter().any(|(p, _)| p.dim() != dim) {
            return Err(DomainError::MixedDimensions);
        }
        Ok(Self { items, dim })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    pub fn items(&self) -> &[(Point<S>, Label)] {
        &self.items
    }

    pub fn iter(&self) -> impl Iterator<Item = &(Point<S>, Label)> {
        self.items.iter()
    }

    /// Seeded i.i.d. draws (with replacement) from the uniform
    /// distribution over the items.
    pub fn draw(&self, n: usize, stream: &mut SeedStream) -> Result<LabeledSample<S>, DomainError> {
        if n == 0 {
            return Err(DomainError::EmptySample);
        }
        let items = (0..n)
            .map(|_| self.items[stream.index(self.items.len())].clone())
            .collect();
        LabeledSample::new(items)
    }
}

/// A distribution over `X × {±1}` with finite support, so population
/// errors are exact weighted sums.
#[derive(Debug, Clone)]
pub struct FiniteDistribution<S> {
    support: Vec<(Point<S>, Label)>,
    mass: Vec<S>,
}

impl<S: Real> FiniteDistribution<S> {
    pub fn new(support: Vec<(Point<S>, Label)>, mass: Vec<S>) -> Result<Self, DomainError> {
        if support.is_empty() {
            return Err(DomainError::InvalidDistribution("empty support".into()));
        }
        if support.len() != mass.len() {
            return Err(DomainError::InvalidDistribution(format!(
                "support has {} items but mass has {}",
                support.len(),
                mass.len()
            )));
        }
        if mass.iter().any(|&m| m < S::zero() || !m.is_finite()) {
            return Err(DomainError::InvalidDistribution(
                "masses must be finite and non-negative".into(),
            ));
        }
        let total = mass.iter().fold(S::zero(), |a, &b| a + b);
        if (total - S::one()).abs() > S::prob_tolerance() {
            return Err(DomainError::InvalidDistribution(format!(
                "masses sum to {total}, not 1"
            )));
        }
        for i in 0..support.len() {
            for j in (i + 1)..support.len() {
                if support[i].0 == support[j].0 {
                    return Err(DomainError::InvalidDistribution(format!(
                        "support points {i} and {j} coincide"
                    )));
                }
            }
        }
        let dim = support[0].0.dim();
        if support.iter().any(|(p, _)| p.dim() != dim) {
            return Err(DomainError::MixedDimensions);
        }
        Ok(Self { support, mass })
    }

    /// Uniform distribution over distinct labeled points.
    pub fn uniform(support: Vec<(Point<S>, Label)>) -> Result<Self, DomainError> {
        let n = support.len();
        if n == 0 {
            return Err(DomainError::InvalidDistribution("empty support".into()));
        }
        let w = S::one() / S::from_usize(n).unwrap();
        FiniteDistribution::new(support, vec![w; n])
    }

    pub fn support(&self) -> &[(Point<S>, Label)] {
        &self.support
    }

    pub fn mass(&self) -> &[S] {
        &self.mass
    }

    pub fn dim(&self) -> Option<usize> {
        self.support[0].0.dim()
    }

    /// Seeded i.i.d. sample of size `m` (inverse-CDF over the support).
    pub fn sample(
        &self,
        m: usize,
        stream: &mut SeedStream,
    ) -> Result<LabeledSample<S>, DomainError> {
        if m == 0 {
            return Err(DomainError::EmptySample);
        }
        let mut items = Vec::with_capacity(m);
        for _ in 0..m {
            let u = S::from_f64(stream.unit_f64()).unwrap();
            let mut acc = S::zero();
            let mut chosen = self.support.len() - 1;
            for (i, &w) in self.mass.iter().enumerate() {
                acc += w;
                if u < acc {
                    chosen = i;
                    break;
                }
            }
            items.push(self.support[chosen].clone());
        }
        LabeledSample::new(items)
    }
}

/// Identity of a predictor: its index within an enumeration, or a digest
/// for oracle-produced predictors.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PredictorTag {
    Index(usize),
    Digest(String),
}

impl fmt::Display for PredictorTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            // Display is 1-based so reports read h1, h2, ... like the
            // usual notation.
            PredictorTag::Index(i) => write!(f, "h{}", i + 1),
            PredictorTag::Digest(s) => write!(f, "{s}"),
        }
    }
}

type EvalFn<S> = Arc<dyn Fn(&Point<S>) -> Result<Label, DomainError> + Send + Sync>;
type MapFn<S> = Arc<dyn Fn(&Point<S>) -> Result<Point<S>, DomainError> + Send + Sync>;

/// An evaluatable map `Point -> {±1}` with an identity tag. Evaluation is
/// deterministic given the tag.
#[derive(Clone)]
pub struct Predictor<S> {
    tag: PredictorTag,
    eval: EvalFn<S>,
}

impl<S: Real> Predictor<S> {
    pub fn new(
        tag: PredictorTag,
        eval: impl Fn(&Point<S>) -> Result<Label, DomainError> + Send + Sync + 'static,
    ) -> Self {
        Self {
            tag,
            eval: Arc::new(eval),
        }
    }

    pub fn constant(index: usize, label: Label) -> Self {
        Predictor::new(PredictorTag::Index(index), move |_| Ok(label))
    }

    pub fn tag(&self) -> &PredictorTag {
        &self.tag
    }

    pub fn with_tag(&self, tag: PredictorTag) -> Self {
        Self {
            tag,
            eval: Arc::clone(&self.eval),
        }
    }

    pub fn classify(&self, x: &Point<S>) -> Result<Label, DomainError> {
        (self.eval)(x)
    }

    /// The composition `x ↦ h(t(x))`.
    pub fn compose(&self, t: &Transform<S>) -> Predictor<S> {
        let h = Arc::clone(&self.eval);
        let map = t.map_fn();
        Predictor {
            tag: PredictorTag::Digest(format!("{}∘{}", self.tag, t.name())),
            eval: Arc::new(move |x| h(&map(x)?)),
        }
    }
}

impl<S> fmt::Debug for Predictor<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Predictor").field("tag", &self.tag).finish()
    }
}

/// An evaluatable map `Point -> Point` with an index and a display name.
/// Transforms preserve dimension; hypercube transforms map ±1 vectors to
/// ±1 vectors.
#[derive(Clone)]
pub struct Transform<S> {
    index: usize,
    name: String,
    map: MapFn<S>,
}

impl<S: Real> Transform<S> {
    pub fn new(
        index: usize,
        name: impl Into<String>,
        map: impl Fn(&Point<S>) -> Result<Point<S>, DomainError> + Send + Sync + 'static,
    ) -> Self {
        Self {
            index,
            name: name.into(),
            map: Arc::new(map),
        }
    }

    pub fn identity(index: usize) -> Self {
        Transform::new(index, "id", |x| Ok(x.clone()))
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn apply(&self, x: &Point<S>) -> Result<Point<S>, DomainError> {
        (self.map)(x)
    }

    pub(crate) fn map_fn(&self) -> MapFn<S> {
        Arc::clone(&self.map)
    }
}

impl<S> fmt::Debug for Transform<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Transform")
            .field("index", &self.index)
            .field("name", &self.name)
            .finish()
    }
}

/// Empirical error of `h` on the transformed sample `t(s)`:
/// the fraction of items with `h(t(x)) ≠ y`.
pub fn empirical_error<S: Real>(
    h: &Predictor<S>,
    t: &Transform<S>,
    s: &LabeledSample<S>,
) -> Result<S, DomainError> {
    if s.is_empty() {
        return Err(DomainError::EmptySample);
    }
    let mut wrong = 0usize;
    for (x, y) in s.iter() {
        if h.classify(&t.apply(x)?)? != *y {
            wrong += 1;
        }
    }
    Ok(S::from_usize(wrong).unwrap() / S::from_usize(s.len()).unwrap())
}

/// Population error of `h` on the transformed distribution `t(d)`:
/// the mass of points with `h(t(x)) ≠ y`. Exact.
pub fn population_error<S: Real>(
    h: &Predictor<S>,
    t: &Transform<S>,
    d: &FiniteDistribution<S>,
) -> Result<S, DomainError> {
    let mut err = S::zero();
    for ((x, y), &w) in d.support().iter().zip(d.mass()) {
        if h.classify(&t.apply(x)?)? != *y {
            err += w;
        }
    }
    Ok(err)
}

/// The `|H| × |T|` grid of errors `err(h_i, t_j(source))`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorMatrix<S> {
    transform_names: Vec<String>,
    row_tags: Vec<PredictorTag>,
    rows: Vec<Vec<S>>,
}

impl<S: Real> ErrorMatrix<S> {
    pub fn new(
        transform_names: Vec<String>,
        row_tags: Vec<PredictorTag>,
        rows: Vec<Vec<S>>,
    ) -> Result<Self, DomainError> {
        if transform_names.is_empty() || rows.is_empty() {
            return Err(DomainError::InvalidMatrix(
                "matrix must be non-empty".into(),
            ));
        }
        if rows.len() != row_tags.len() {
            return Err(DomainError::InvalidMatrix(format!(
                "{} rows but {} row tags",
                rows.len(),
                row_tags.len()
            )));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != transform_names.len() {
                return Err(DomainError::InvalidMatrix(format!(
                    "row {} has {} entries, expected {}",
                    i,
                    row.len(),
                    transform_names.len()
                )));
            }
            if row.iter().any(|&e| !(S::zero()..=S::one()).contains(&e)) {
                return Err(DomainError::InvalidMatrix(format!(
                    "row {i} has an entry outside [0, 1]"
                )));
            }
        }
        Ok(Self {
            transform_names,
            row_tags,
            rows,
        })
    }

    /// Matrix with implicit row tags `h1..hm`.
    pub fn from_rows(transform_names: Vec<String>, rows: Vec<Vec<S>>) -> Result<Self, DomainError> {
        let tags = (0..rows.len()).map(PredictorTag::Index).collect();
        ErrorMatrix::new(transform_names, tags, rows)
    }

    pub fn n_hypotheses(&self) -> usize {
        self.rows.len()
    }

    pub fn n_transforms(&self) -> usize {
        self.transform_names.len()
    }

    pub fn transform_names(&self) -> &[String] {
        &self.transform_names
    }

    pub fn row_tags(&self) -> &[PredictorTag] {
        &self.row_tags
    }

    pub fn rows(&self) -> &[Vec<S>] {
        &self.rows
    }

    pub fn entry(&self, i: usize, j: usize) -> S {
        self.rows[i][j]
    }

    /// Column-wise minima: the best error achievable within the rows on
    /// each transformed source.
    pub fn column_minima(&self) -> Vec<S> {
        (0..self.n_transforms())
            .map(|j| {
                self.rows
                    .iter()
                    .map(|r| r[j])
                    .fold(S::infinity(), |a, b| a.min(b))
            })
            .collect()
    }

    /// Serialize: comment lines, a header of transform names, then one
    /// comma-separated row per hypothesis.
    pub fn to_csv(&self, comments: &[String]) -> String {
        let mut out = String::new();
        for c in comments {
            out.push_str(&format!("# {c}\n"));
        }
        out.push_str(&self.transform_names.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|e| format!("{e}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn parse_csv(text: &str, origin: &str) -> Result<Self, DomainError> {
        let mut names: Option<Vec<String>> = None;
        let mut rows = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match &names {
                None => {
                    names = Some(line.split(',').map(|s| s.trim().to_string()).collect());
                }
                Some(names) => {
                    let row = parse_number_row::<S>(line, names.len(), origin, lineno + 1)?;
                    rows.push(row);
                }
            }
        }
        let names = names.ok_or_else(|| DomainError::Parse {
            path: origin.into(),
            line: 0,
            msg: "missing header row of transform names".into(),
        })?;
        ErrorMatrix::from_rows(names, rows)
    }

    pub fn read_file(path: &Path) -> Result<Self, DomainError> {
        let text = std::fs::read_to_string(path)?;
        ErrorMatrix::parse_csv(&text, &path.display().to_string())
    }
}

fn parse_number_row<S: Real>(
    line: &str,
    expected: usize,
    origin: &str,
    lineno: usize,
) -> Result<Vec<S>, DomainError> {
    let cells: Vec<&str> = line.split(',').collect();
    if cells.len() != expected {
        return Err(DomainError::Parse {
            path: origin.into(),
            line: lineno,
            msg: format!("expected {expected} cells, got {}", cells.len()),
        });
    }
    cells
        .iter()
        .map(|c| {
            c.trim()
                .parse::<f64>()
                .map_err(|e| DomainError::Parse {
                    path: origin.into(),
                    line: lineno,
                    msg: format!("bad number {c:?}: {e}"),
                })
                .map(|v| S::from_f64(v).unwrap())
        })
        .collect()
}

type ParsedRecords<S> = (Vec<(Point<S>, Label)>, Vec<S>);

/// Parse a dataset: a `d=<dim>` header, then one record per line of
/// comma-separated coordinates followed by the label. With
/// `with_mass = true`, a trailing mass column is read as well.
fn parse_records<S: Real>(
    text: &str,
    origin: &str,
    with_mass: bool,
) -> Result<ParsedRecords<S>, DomainError> {
    let mut dim: Option<usize> = None;
    let mut items = Vec::new();
    let mut masses = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if dim.is_none() {
            let d = line
                .strip_prefix("d=")
                .and_then(|v| v.trim().parse::<usize>().ok())
                .ok_or_else(|| DomainError::Parse {
                    path: origin.into(),
                    line: lineno + 1,
                    msg: "expected header line d=<dim>".into(),
                })?;
            dim = Some(d);
            continue;
        }
        let d = dim.unwrap();
        let extra = if with_mass { 2 } else { 1 };
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != d + extra {
            return Err(DomainError::Parse {
                path: origin.into(),
                line: lineno + 1,
                msg: format!("expected {} cells, got {}", d + extra, cells.len()),
            });
        }
        let coords: Result<Vec<S>, _> = cells[..d]
            .iter()
            .map(|c| {
                c.trim()
                    .parse::<f64>()
                    .map(|v| S::from_f64(v).unwrap())
                    .map_err(|e| DomainError::Parse {
                        path: origin.into(),
                        line: lineno + 1,
                        msg: format!("bad coordinate {c:?}: {e}"),
                    })
            })
            .collect();
        let label = Label::parse(cells[d]).ok_or_else(|| DomainError::Parse {
            path: origin.into(),
            line: lineno + 1,
            msg: format!("bad label {:?}", cells[d]),
        })?;
        if with_mass {
            let m = cells[d + 1]
                .trim()
                .parse::<f64>()
                .map_err(|e| DomainError::Parse {
                    path: origin.into(),
                    line: lineno + 1,
                    msg: format!("bad mass {:?}: {e}", cells[d + 1]),
                })?;
            masses.push(S::from_f64(m).unwrap());
        }
        items.push((Point::coords(coords?), label));
    }
    if dim.is_none() {
        return Err(DomainError::Parse {
            path: origin.into(),
            line: 0,
            msg: "missing d=<dim> header".into(),
        });
    }
    Ok((items, masses))
}

pub fn parse_sample<S: Real>(text: &str, origin: &str) -> Result<LabeledSample<S>, DomainError> {
    let (items, _) = parse_records(text, origin, false)?;
    LabeledSample::new(items)
}

pub fn parse_distribution<S: Real>(
    text: &str,
    origin: &str,
) -> Result<FiniteDistribution<S>, DomainError> {
    let (items, masses) = parse_records(text, origin, true)?;
    FiniteDistribution::new(items, masses)
}

pub fn read_sample_file<S: Real>(path: &Path) -> Result<LabeledSample<S>, DomainError> {
    let text = std::fs::read_to_string(path)?;
    parse_sample(&text, &path.display().to_string())
}

pub fn read_distribution_file<S: Real>(path: &Path) -> Result<FiniteDistribution<S>, DomainError> {
    let text = std::fs::read_to_string(path)?;
    parse_distribution(&text, &path.display().to_string())
}

/// What an [`ErrorMatrix`] is tabulated against.
#[derive(Debug, Clone, Copy)]
pub enum ErrorSource<'a, S> {
    Sample(&'a LabeledSample<S>),
    Distribution(&'a FiniteDistribution<S>),
}

impl<'a, S: Real> ErrorSource<'a, S> {
    pub fn error(&self, h: &Predictor<S>, t: &Transform<S>) -> Result<S, DomainError> {
        match self {
            ErrorSource::Sample(s) => empirical_error(h, t, s),
            ErrorSource::Distribution(d) => population_error(h, t, d),
        }
    }
}

/// Tabulate `err(h_i, t_j(source))` over explicit predictor and transform
/// lists. Entry order is fixed by the input order; there is no hidden
/// randomness, so the result is reproducible bit for bit.
pub fn error_matrix<S: Real>(
    hs: &[Predictor<S>],
    ts: &[Transform<S>],
    source: ErrorSource<'_, S>,
) -> Result<ErrorMatrix<S>, DomainError> {
    if hs.is_empty() || ts.is_empty() {
        return Err(DomainError::InvalidMatrix(
            "error matrix needs at least one predictor and one transform".into(),
        ));
    }
    let mut rows = Vec::with_capacity(hs.len());
    for h in hs {
        let mut row = Vec::with_capacity(ts.len());
        for t in ts {
            row.push(source.error(h, t)?);
        }
        rows.push(row);
    }
    let names = ts.iter().map(|t| t.name().to_string()).collect();
    let tags = hs.iter().map(|h| h.tag().clone()).collect();
    ErrorMatrix::new(names, tags, rows)
}

pub fn sample_to_text<S: Real>(
    s: &LabeledSample<S>,
    comments: &[String],
) -> Result<String, DomainError> {
    let mut out = String::new();
    for c in comments {
        out.push_str(&format!("# {c}\n"));
    }
    let d = s.dim().ok_or(DomainError::CoordsRequired)?;
    out.push_str(&format!("d={d}\n"));
    for (p, y) in s.iter() {
        let coords = p.as_coords()?;
        let cells: Vec<String> = coords.iter().map(|c| format!("{c}")).collect();
        out.push_str(&cells.join(","));
        out.push_str(&format!(
            ",{}\n",
            if *y == Label::Plus { "+1" } else { "-1" }
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(xs: &[f64]) -> Point<f64> {
        Point::coords(xs.to_vec())
    }

    fn sample(points: &[(&[f64], Label)]) -> LabeledSample<f64> {
        LabeledSample::new(points.iter().map(|(x, y)| (pt(x), *y)).collect()).unwrap()
    }

    /// Sign of the product of coordinates.
    fn parity_predictor(index: usize) -> Predictor<f64> {
        Predictor::new(PredictorTag::Index(index), |x| {
            let p: f64 = x.as_coords()?.iter().product();
            Ok(Label::from_sign(p))
        })
    }

    fn swap01() -> Transform<f64> {
        Transform::new(0, "swap01", |x| {
            let c = x.as_coords()?;
            if c.len() < 2 {
                return Err(DomainError::DimensionMismatch {
                    expected: 2,
                    got: c.len(),
                });
            }
            let mut out = c.to_vec();
            out.swap(0, 1);
            Ok(Point::coords(out))
        })
    }

    #[test]
    fn empirical_error_all_correct() {
        let h = Predictor::constant(0, Label::Plus);
        let s = sample(&[
            (&[0.0], Label::Plus),
            (&[1.0], Label::Plus),
            (&[2.0], Label::Plus),
            (&[3.0], Label::Plus),
        ]);
        let e = empirical_error(&h, &Transform::identity(0), &s).unwrap();
        assert_eq!(e, 0.0);
    }

    #[test]
    fn empirical_error_counts_mistakes() {
        let h = Predictor::constant(0, Label::Plus);
        let s = sample(&[
            (&[0.0], Label::Plus),
            (&[1.0], Label::Minus),
            (&[2.0], Label::Plus),
            (&[3.0], Label::Plus),
        ]);
        let e = empirical_error(&h, &Transform::identity(0), &s).unwrap();
        assert_eq!(e, 0.25);
    }

    #[test]
    fn empirical_error_matches_per_point_recount() {
        // Oracle: walk the sample by hand, transform, evaluate, count.
        let h = parity_predictor(0);
        let t = swap01();
        let s = sample(&[
            (&[1.0, -1.0], Label::Plus),
            (&[-1.0, -1.0], Label::Plus),
            (&[1.0, 1.0], Label::Minus),
        ]);
        let mut wrong = 0;
        for (x, y) in s.iter() {
            let tx = t.apply(x).unwrap();
            if h.classify(&tx).unwrap() != *y {
                wrong += 1;
            }
        }
        let expect = wrong as f64 / s.len() as f64;
        assert_eq!(empirical_error(&h, &t, &s).unwrap(), expect);
        // Parity is swap-invariant, so this also equals the untransformed error.
        assert_eq!(
            empirical_error(&h, &Transform::identity(0), &s).unwrap(),
            expect
        );
    }

    #[test]
    fn empirical_error_rejects_dimension_mismatch() {
        let h = parity_predictor(0);
        let t = swap01();
        let s = sample(&[(&[1.0], Label::Plus)]);
        assert!(matches!(
            empirical_error(&h, &t, &s),
            Err(DomainError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn population_error_uniform_two_points() {
        let h = Predictor::constant(0, Label::Plus);
        let d = FiniteDistribution::uniform(vec![
            (pt(&[0.0]), Label::Plus),
            (pt(&[1.0]), Label::Minus),
        ])
        .unwrap();
        let e = population_error(&h, &Transform::identity(0), &d).unwrap();
        assert!((e - 0.5).abs() < 1e-9);
    }

    #[test]
    fn population_error_weighted() {
        let h = Predictor::constant(0, Label::Plus);
        let d = FiniteDistribution::new(
            vec![(pt(&[0.0]), Label::Plus), (pt(&[1.0]), Label::Minus)],
            vec![0.9, 0.1],
        )
        .unwrap();
        let e = population_error(&h, &Transform::identity(0), &d).unwrap();
        assert!((e - 0.1).abs() < 1e-9);
    }

    #[test]
    fn population_error_equals_replicated_empirical_error() {
        // Masses (0.9, 0.1) replicated as 9 and 1 copies.
        let h = parity_predictor(0);
        let t = swap01();
        let a = (pt(&[1.0, -1.0]), Label::Plus);
        let b = (pt(&[-1.0, -1.0]), Label::Minus);
        let d = FiniteDistribution::new(vec![a.clone(), b.clone()], vec![0.9, 0.1]).unwrap();
        let mut items = vec![a; 9];
        items.extend(vec![b; 1]);
        let s = LabeledSample::new(items).unwrap();
        let pop = population_error(&h, &t, &d).unwrap();
        let emp = empirical_error(&h, &t, &s).unwrap();
        assert!((pop - emp).abs() < 1e-9);
    }

    #[test]
    fn population_error_with_uniform_mass_equals_empirical() {
        let h = parity_predictor(0);
        let s = sample(&[
            (&[1.0, -1.0], Label::Plus),
            (&[-1.0, -1.0], Label::Plus),
            (&[1.0, 1.0], Label::Minus),
            (&[-1.0, 1.0], Label::Minus),
        ]);
        let d = FiniteDistribution::uniform(s.items().to_vec()).unwrap();
        let id = Transform::identity(0);
        let pop = population_error(&h, &id, &d).unwrap();
        let emp = empirical_error(&h, &id, &s).unwrap();
        assert!((pop - emp).abs() < 1e-9);
    }

    #[test]
    fn one_by_one_matrix_equals_empirical_error() {
        let h = Predictor::constant(0, Label::Plus);
        let t = Transform::identity(0);
        let s = sample(&[(&[0.0], Label::Minus), (&[1.0], Label::Plus)]);
        let m = error_matrix(
            std::slice::from_ref(&h),
            std::slice::from_ref(&t),
            ErrorSource::Sample(&s),
        )
        .unwrap();
        assert_eq!(m.n_hypotheses(), 1);
        assert_eq!(m.n_transforms(), 1);
        assert_eq!(m.entry(0, 0), empirical_error(&h, &t, &s).unwrap());
    }

    #[test]
    fn matrix_is_reproducible() {
        let hs = vec![Predictor::constant(0, Label::Plus), parity_predictor(1)];
        let ts = vec![Transform::identity(0), swap01()];
        let s = sample(&[
            (&[1.0, -1.0], Label::Plus),
            (&[-1.0, 1.0], Label::Minus),
            (&[1.0, 1.0], Label::Plus),
        ]);
        let a = error_matrix(&hs, &ts, ErrorSource::Sample(&s)).unwrap();
        let b = error_matrix(&hs, &ts, ErrorSource::Sample(&s)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn distribution_rejects_bad_mass() {
        let support = vec![(pt(&[0.0]), Label::Plus), (pt(&[1.0]), Label::Minus)];
        assert!(FiniteDistribution::new(support.clone(), vec![0.5, 0.6]).is_err());
        assert!(FiniteDistribution::new(support.clone(), vec![-0.1, 1.1]).is_err());
        let dup = vec![(pt(&[0.0]), Label::Plus), (pt(&[0.0]), Label::Minus)];
        assert!(FiniteDistribution::new(dup, vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn sample_requires_consistent_dims() {
        assert!(LabeledSample::<f64>::new(vec![]).is_err());
        assert!(LabeledSample::new(vec![
            (pt(&[0.0]), Label::Plus),
            (pt(&[0.0, 1.0]), Label::Plus),
        ])
        .is_err());
    }

    #[test]
    fn dataset_round_trip() {
        let s = sample(&[(&[0.5, -1.0], Label::Plus), (&[2.0, 3.5], Label::Minus)]);
        let text = sample_to_text(&s, &["seed=1".into()]).unwrap();
        let back = parse_sample::<f64>(&text, "mem").unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back.items()[0].0, s.items()[0].0);
        assert_eq!(back.items()[1].1, Label::Minus);
    }

    #[test]
    fn distribution_file_has_trailing_mass_column() {
        let text = "d=1\n0.0,+1,0.75\n1.0,-1,0.25\n";
        let d = parse_distribution::<f64>(text, "mem").unwrap();
        assert_eq!(d.mass(), &[0.75, 0.25]);
    }

    #[test]
    fn matrix_csv_round_trip() {
        let m = ErrorMatrix::from_rows(
            vec!["T1".into(), "T2".into(), "T3".into()],
            vec![vec![0.01, 0.01, 0.49], vec![0.01, 0.49, 0.49]],
        )
        .unwrap();
        let text = m.to_csv(&[]);
        let back = ErrorMatrix::<f64>::parse_csv(&text, "mem").unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn matrix_rejects_out_of_range_entries() {
        assert!(ErrorMatrix::from_rows(vec!["T1".into()], vec![vec![1.5]]).is_err());
    }

    #[test]
    fn tagged_points_reject_coordinate_ops() {
        let x = Point::<f64>::tagged(0, 3);
        assert!(x.as_coords().is_err());
        assert_eq!(x.dim(), None);
    }

    #[test]
    fn hypercube_detection() {
        assert!(pt(&[1.0, -1.0]).is_hypercube());
        assert!(!pt(&[1.0, 0.5]).is_hypercube());
    }

    #[test]
    fn seeded_draws_follow_the_masses() {
        use crate::rng::SeedStream;
        let d = FiniteDistribution::new(
            vec![(pt(&[0.0]), Label::Plus), (pt(&[1.0]), Label::Minus)],
            vec![0.9, 0.1],
        )
        .unwrap();
        let mut stream = SeedStream::new(13);
        let s = d.sample(2000, &mut stream).unwrap();
        let heavy = s.iter().filter(|(x, _)| *x == pt(&[0.0])).count();
        assert!((1700..=1950).contains(&heavy), "heavy drawn {heavy} times");
        // Uniform draws from a sample stay inside the sample.
        let mut stream = SeedStream::new(14);
        let redraw = s.draw(50, &mut stream).unwrap();
        assert_eq!(redraw.len(), 50);
        assert!(redraw
            .iter()
            .all(|(x, _)| *x == pt(&[0.0]) || *x == pt(&[1.0])));
    }

    #[test]
    fn core_math_works_at_f32() {
        let h = Predictor::<f32>::constant(0, Label::Plus);
        let s = LabeledSample::new(vec![
            (Point::coords(vec![0.0f32]), Label::Plus),
            (Point::coords(vec![1.0f32]), Label::Minus),
        ])
        .unwrap();
        let e = empirical_error(&h, &Transform::identity(0), &s).unwrap();
        assert_eq!(e, 0.5f32);
        let thirds = FiniteDistribution::uniform(vec![
            (Point::coords(vec![0.0f32]), Label::Plus),
            (Point::coords(vec![1.0f32]), Label::Plus),
            (Point::coords(vec![2.0f32]), Label::Minus),
        ])
        .unwrap();
        let p = population_error(&h, &Transform::identity(0), &thirds).unwrap();
        assert!((p - 1.0 / 3.0).abs() < 1e-6);
    }
}
