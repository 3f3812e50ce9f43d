//! Concrete transformation collections: finite lists, coordinate
//! permutation groups, linear maps, hypercube sign flips, and the
//! lower-bound family. Collections know how to enumerate themselves (when
//! small enough), sample a member from an explicit seed stream, and
//! inflate a dataset by every member.
//!
//! Coordinate permutations use the pull convention
//! `out[i] = in[perm[i]]`.
//!
//! Boolean `{0,1}` data is recoded onto the `±1` cube at the boundary:
//! bit 0 is `+1`, bit 1 is `−1` (so XOR with a mask bit becomes a sign
//! flip of that coordinate).

use std::path::Path;

use itertools::Itertools;
use thiserror::Error;

use crate::domain::{DomainError, LabeledSample, Point, Transform};
use crate::lowerbound::LowerBoundConstruction;
use crate::rng::SeedStream;
use crate::Real;

/// Spaces above this size refuse to enumerate.
pub const ENUM_LIMIT: u128 = 100_000;

#[derive(Debug, Error)]
pub enum TransformError {
    #[error("transform space '{0}' has {1} members, above the enumeration limit {2}")]
    NotEnumerable(String, u128, u128),
    #[error("invalid weights: {0}")]
    BadWeights(String),
    #[error("invalid parameter: {0}")]
    BadParameter(String),
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// The `{0,1} ↔ {±1}` recoding used at the Boolean boundary.
pub fn bit_to_sign<S: Real>(bit: bool) -> S {
    if bit {
        -S::one()
    } else {
        S::one()
    }
}

/// A `d × d` real matrix acting on coordinate points.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMap<S> {
    rows: Vec<Vec<S>>,
}

impl<S: Real> LinearMap<S> {
    pub fn new(rows: Vec<Vec<S>>) -> Result<Self, TransformError> {
        let d = rows.len();
        if d == 0 {
            return Err(TransformError::BadParameter("empty matrix".into()));
        }
        for r in &rows {
            if r.len() != d {
                return Err(TransformError::BadParameter(format!(
                    "matrix must be square: {d} rows but a row of length {}",
                    r.len()
                )));
            }
            if r.iter().any(|v| !v.is_finite()) {
                return Err(TransformError::BadParameter(
                    "matrix entries must be finite".into(),
                ));
            }
        }
        Ok(Self { rows })
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn apply(&self, coords: &[S]) -> Result<Vec<S>, DomainError> {
        if coords.len() != self.dim() {
            return Err(DomainError::DimensionMismatch {
                expected: self.dim(),
                got: coords.len(),
            });
        }
        Ok(self
            .rows
            .iter()
            .map(|row| {
                row.iter()
                    .zip(coords)
                    .fold(S::zero(), |acc, (m, x)| acc + *m * *x)
            })
            .collect())
    }

    pub fn transform(&self, index: usize) -> Transform<S> {
        let map = self.clone();
        Transform::new(index, format!("lin{}", index + 1), move |x| {
            Ok(Point::coords(map.apply(x.as_coords()?)?))
        })
    }
}

/// Parse one or more square matrices: row-major, one row per line, comma
/// or whitespace separated, matrices separated by blank lines.
pub fn parse_linear_maps<S: Real>(
    text: &str,
    origin: &str,
) -> Result<Vec<LinearMap<S>>, TransformError> {
    let mut groups: Vec<Vec<Vec<S>>> = vec![Vec::new()];
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('#') {
            continue;
        }
        if line.is_empty() {
            if !groups.last().unwrap().is_empty() {
                groups.push(Vec::new());
            }
            continue;
        }
        let row: Result<Vec<S>, TransformError> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<f64>()
                    .map(|v| S::from_f64(v).unwrap())
                    .map_err(|e| TransformError::Parse {
                        path: origin.into(),
                        line: lineno + 1,
                        msg: format!("bad number {t:?}: {e}"),
                    })
            })
            .collect();
        groups.last_mut().unwrap().push(row?);
    }
    groups.retain(|g| !g.is_empty());
    if groups.is_empty() {
        return Err(TransformError::Parse {
            path: origin.into(),
            line: 0,
            msg: "no matrix rows found".into(),
        });
    }
    groups.into_iter().map(LinearMap::new).collect()
}

pub fn read_linear_maps_file<S: Real>(path: &Path) -> Result<Vec<LinearMap<S>>, TransformError> {
    let text = std::fs::read_to_string(path)?;
    parse_linear_maps(&text, &path.display().to_string())
}

/// Coordinate permutation with the pull convention `out[i] = in[perm[i]]`.
pub fn permutation_transform<S: Real>(index: usize, perm: Vec<usize>) -> Transform<S> {
    let name = format!("perm[{}]", perm.iter().map(|i| i.to_string()).join(","));
    Transform::new(index, name, move |x| {
        let c = x.as_coords()?;
        if c.len() != perm.len() {
            return Err(DomainError::DimensionMismatch {
                expected: perm.len(),
                got: c.len(),
            });
        }
        Ok(Point::coords(perm.iter().map(|&i| c[i]).collect()))
    })
}

/// Sign-flip transform on the hypercube: flips each coordinate whose mask
/// bit is set. Rejects non-±1 inputs.
pub fn bitmap_transform<S: Real>(index: usize, d: usize, mask: u64) -> Transform<S> {
    Transform::new(index, format!("flip{mask:b}"), move |x: &Point<S>| {
        let c: &[S] = x.expect_hypercube(d)?;
        Ok(Point::coords(
            c.iter()
                .enumerate()
                .map(|(i, &v)| if mask >> i & 1 == 1 { -v } else { v })
                .collect(),
        ))
    })
}

fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

/// A finite indexed collection of transformations, optionally weighted.
#[derive(Debug, Clone)]
pub enum TransformSpace<S> {
    /// An explicit list, with an optional prior `w` over members
    /// (non-negative, summing to at most 1).
    FiniteList {
        transforms: Vec<Transform<S>>,
        weights: Option<Vec<S>>,
    },
    /// All `d!` coordinate permutations.
    PermutationsAll { d: usize },
    /// The group generated by within-block permutations and whole-block
    /// swaps, for 3 blocks of size `d/3`.
    PermutationsBlock { d: usize },
    /// Sign-flip maps on `{±1}^d`, one per mask.
    BooleanBitmap { d: usize, masks: Vec<u64> },
    /// The `T_P` family of the lower-bound construction.
    LowerBound(LowerBoundConstruction),
}

impl<S: Real> TransformSpace<S> {
    pub fn finite_list(transforms: Vec<Transform<S>>) -> Result<Self, TransformError> {
        if transforms.is_empty() {
            return Err(TransformError::BadParameter(
                "finite list must be non-empty".into(),
            ));
        }
        Ok(TransformSpace::FiniteList {
            transforms,
            weights: None,
        })
    }

    pub fn from_linear_maps(maps: Vec<LinearMap<S>>) -> Result<Self, TransformError> {
        TransformSpace::finite_list(
            maps.iter()
                .enumerate()
                .map(|(i, m)| m.transform(i))
                .collect(),
        )
    }

    pub fn identity_only() -> Self {
        TransformSpace::FiniteList {
            transforms: vec![Transform::identity(0)],
            weights: None,
        }
    }

    pub fn permutations_all(d: usize) -> Result<Self, TransformError> {
        if d == 0 {
            return Err(TransformError::BadParameter("d must be positive".into()));
        }
        Ok(TransformSpace::PermutationsAll { d })
    }

    pub fn permutations_block(d: usize) -> Result<Self, TransformError> {
        if d == 0 || !d.is_multiple_of(3) {
            return Err(TransformError::BadParameter(format!(
                "block permutations need 3 | d, got d={d}"
            )));
        }
        Ok(TransformSpace::PermutationsBlock { d })
    }

    /// All `2^d` sign-flip masks.
    pub fn boolean_bitmap_full(d: usize) -> Result<Self, TransformError> {
        if d == 0 || d > 16 {
            return Err(TransformError::BadParameter(format!(
                "full bitmap space needs 1 ≤ d ≤ 16, got {d}"
            )));
        }
        Ok(TransformSpace::BooleanBitmap {
            d,
            masks: (0..1u64 << d).collect(),
        })
    }

    pub fn boolean_bitmap(d: usize, masks: Vec<u64>) -> Result<Self, TransformError> {
        if d == 0 || d > 63 || masks.is_empty() {
            return Err(TransformError::BadParameter(
                "bitmap space needs d in 1..=63 and at least one mask".into(),
            ));
        }
        if masks.iter().any(|&m| m >> d != 0) {
            return Err(TransformError::BadParameter(
                "mask uses bits beyond the dimension".into(),
            ));
        }
        Ok(TransformSpace::BooleanBitmap { d, masks })
    }

    /// Attach a prior over members (finite lists only).
    pub fn with_weights(self, weights: Vec<S>) -> Result<Self, TransformError> {
        let TransformSpace::FiniteList { transforms, .. } = self else {
            return Err(TransformError::BadParameter(
                "weights are only supported on finite lists".into(),
            ));
        };
        if weights.len() != transforms.len() {
            return Err(TransformError::BadWeights(format!(
                "{} weights for {} transforms",
                weights.len(),
                transforms.len()
            )));
        }
        if weights.iter().any(|w| *w < S::zero() || !w.is_finite()) {
            return Err(TransformError::BadWeights(
                "weights must be finite and non-negative".into(),
            ));
        }
        let total = weights.iter().fold(S::zero(), |a, &b| a + b);
        if total > S::one() + S::prob_tolerance() {
            return Err(TransformError::BadWeights(format!(
                "weights sum to {total} > 1"
            )));
        }
        Ok(TransformSpace::FiniteList {
            transforms,
            weights: Some(weights),
        })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            TransformSpace::FiniteList { .. } => "finite-list",
            TransformSpace::PermutationsAll { .. } => "permutations-all",
            TransformSpace::PermutationsBlock { .. } => "permutations-block",
            TransformSpace::BooleanBitmap { .. } => "boolean-bitmap",
            TransformSpace::LowerBound(_) => "lowerbound-TP",
        }
    }

    /// Number of members.
    pub fn size(&self) -> u128 {
        match self {
            TransformSpace::FiniteList { transforms, .. } => transforms.len() as u128,
            TransformSpace::PermutationsAll { d } => factorial(*d),
            TransformSpace::PermutationsBlock { d } => {
                let b = d / 3;
                factorial(b).pow(3) * 6
            }
            TransformSpace::BooleanBitmap { masks, .. } => masks.len() as u128,
            TransformSpace::LowerBound(c) => c.family_size() as u128,
        }
    }

    pub fn is_enumerable(&self) -> bool {
        self.size() <= ENUM_LIMIT
    }

    pub fn weights(&self) -> Option<&[S]> {
        match self {
            TransformSpace::FiniteList {
                weights: Some(w), ..
            } => Some(w),
            _ => None,
        }
    }

    /// Deterministic enumeration (lexicographic for the permutation
    /// groups), or an error when the space is too large.
    pub fn enumerate(&self) -> Result<Vec<Transform<S>>, TransformError> {
        if !self.is_enumerable() {
            return Err(TransformError::NotEnumerable(
                self.kind().into(),
                self.size(),
                ENUM_LIMIT,
            ));
        }
        Ok(match self {
            TransformSpace::FiniteList { transforms, .. } => transforms.clone(),
            TransformSpace::PermutationsAll { d } => (0..*d)
                .permutations(*d)
                .enumerate()
                .map(|(i, p)| permutation_transform(i, p))
                .collect(),
            TransformSpace::PermutationsBlock { d } => {
                let b = d / 3;
                let blocks: Vec<Vec<usize>> = (0..3usize).permutations(3).collect();
                let withins: Vec<Vec<usize>> = (0..b).permutations(b).collect();
                let mut out = Vec::new();
                for sigma in &blocks {
                    for p0 in &withins {
                        for p1 in &withins {
                            for p2 in &withins {
                                let pi = [p0, p1, p2];
                                let perm = block_permutation(*d, sigma, &pi);
                                out.push(permutation_transform(out.len(), perm));
                            }
                        }
                    }
                }
                out
            }
            TransformSpace::BooleanBitmap { d, masks } => masks
                .iter()
                .enumerate()
                .map(|(i, &m)| bitmap_transform(i, *d, m))
                .collect(),
            TransformSpace::LowerBound(c) => c.transforms(),
        })
    }

    /// A uniform member. For the block group, a uniform block arrangement
    /// and three uniform within-block permutations are drawn, which is
    /// uniform over the group because the factorization is unique.
    pub fn sample(&self, stream: &mut SeedStream) -> Transform<S> {
        match self {
            TransformSpace::FiniteList { transforms, .. } => {
                transforms[stream.index(transforms.len())].clone()
            }
            TransformSpace::PermutationsAll { d } => {
                permutation_transform(0, stream.permutation(*d))
            }
            TransformSpace::PermutationsBlock { d } => {
                let b = d / 3;
                let sigma = stream.permutation(3);
                let p0 = stream.permutation(b);
                let p1 = stream.permutation(b);
                let p2 = stream.permutation(b);
                let pi = [&p0, &p1, &p2];
                permutation_transform(0, block_permutation(*d, &sigma, &pi))
            }
            TransformSpace::BooleanBitmap { d, masks } => {
                let i = stream.index(masks.len());
                bitmap_transform(i, *d, masks[i])
            }
            TransformSpace::LowerBound(c) => c.transform(stream.index(c.family_size())),
        }
    }

    /// The inflated dataset `{(t(x), y) : t ∈ T, (x, y) ∈ s}`, ordered
    /// transform-major then sample order. Labels are untouched.
    pub fn inflate(&self, s: &LabeledSample<S>) -> Result<LabeledSample<S>, TransformError> {
        let transforms = self.enumerate()?;
        let mut items = Vec::with_capacity(transforms.len() * s.len());
        for t in &transforms {
            for (x, y) in s.iter() {
                items.push((t.apply(x)?, *y));
            }
        }
        Ok(LabeledSample::new(items)?)
    }
}

/// The coordinate permutation of a block-group element: output slot
/// `(j, i)` reads input coordinate `(sigma(j), pi_j(i))`.
fn block_permutation(d: usize, sigma: &[usize], pi: &[&Vec<usize>; 3]) -> Vec<usize> {
    let b = d / 3;
    let mut perm = vec![0usize; d];
    for j in 0..3 {
        for i in 0..b {
            perm[j * b + i] = sigma[j] * b + pi[j][i];
        }
    }
    perm
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Label;
    use std::collections::{BTreeSet, VecDeque};

    fn pt(xs: &[f64]) -> Point<f64> {
        Point::coords(xs.to_vec())
    }

    #[test]
    fn identity_permutation_is_identity() {
        let t = permutation_transform::<f64>(0, vec![0, 1, 2]);
        let x = pt(&[5.0, -2.0, 7.0]);
        assert_eq!(t.apply(&x).unwrap(), x);
    }

    #[test]
    fn swap_permutes_coordinates() {
        let t = permutation_transform::<f64>(0, vec![1, 0, 2]);
        let out = t.apply(&pt(&[1.0, 2.0, 3.0])).unwrap();
        assert_eq!(out, pt(&[2.0, 1.0, 3.0]));
    }

    #[test]
    fn rotation_matrix_on_unit_vector() {
        // 90° rotation sends (1, 0) to (0, 1).
        let rot = LinearMap::new(vec![vec![0.0, -1.0], vec![1.0, 0.0]]).unwrap();
        let out = rot.transform(0).apply(&pt(&[1.0, 0.0])).unwrap();
        assert_eq!(out, pt(&[0.0, 1.0]));
    }

    #[test]
    fn permutations_all_d1_samples_identity() {
        let space = TransformSpace::<f64>::permutations_all(1).unwrap();
        let mut stream = SeedStream::new(4);
        for _ in 0..5 {
            let t = space.sample(&mut stream);
            assert_eq!(t.apply(&pt(&[3.0])).unwrap(), pt(&[3.0]));
        }
    }

    /// BFS closure over the group generators, as an independent oracle
    /// for the block-group enumeration.
    fn generated_group(d: usize, generators: Vec<Vec<usize>>) -> BTreeSet<Vec<usize>> {
        let identity: Vec<usize> = (0..d).collect();
        let mut seen = BTreeSet::new();
        seen.insert(identity.clone());
        let mut queue = VecDeque::from([identity]);
        while let Some(p) = queue.pop_front() {
            for g in &generators {
                // compose: (g ∘ p)[i] = p[g[i]]
                let q: Vec<usize> = g.iter().map(|&i| p[i]).collect();
                if seen.insert(q.clone()) {
                    queue.push_back(q);
                }
            }
        }
        seen
    }

    fn block_group_generators(d: usize) -> Vec<Vec<usize>> {
        let b = d / 3;
        let mut gens = Vec::new();
        // Within-block adjacent transpositions.
        for j in 0..3 {
            for i in 0..b.saturating_sub(1) {
                let mut p: Vec<usize> = (0..d).collect();
                p.swap(j * b + i, j * b + i + 1);
                gens.push(p);
            }
        }
        // Adjacent block swaps.
        for j in 0..2 {
            let mut p: Vec<usize> = (0..d).collect();
            for i in 0..b {
                p.swap(j * b + i, (j + 1) * b + i);
            }
            gens.push(p);
        }
        gens
    }

    #[test]
    fn block_group_d3_is_s3() {
        let space = TransformSpace::<f64>::permutations_block(3).unwrap();
        assert_eq!(space.size(), 6);
        let enumerated: BTreeSet<Vec<usize>> = space
            .enumerate()
            .unwrap()
            .iter()
            .map(|t| perm_of(t, 3))
            .collect();
        let oracle = generated_group(3, block_group_generators(3));
        assert_eq!(enumerated, oracle);
        assert_eq!(oracle.len(), 6);
    }

    #[test]
    fn block_group_d6_matches_generated_closure() {
        let space = TransformSpace::<f64>::permutations_block(6).unwrap();
        assert_eq!(space.size(), 48);
        let enumerated: BTreeSet<Vec<usize>> = space
            .enumerate()
            .unwrap()
            .iter()
            .map(|t| perm_of(t, 6))
            .collect();
        assert_eq!(enumerated.len(), 48);
        let oracle = generated_group(6, block_group_generators(6));
        assert_eq!(enumerated, oracle);
    }

    /// Recover the coordinate permutation a transform implements by
    /// probing with basis-revealing points.
    fn perm_of(t: &Transform<f64>, d: usize) -> Vec<usize> {
        let probe: Vec<f64> = (0..d).map(|i| i as f64).collect();
        let out = t.apply(&pt(&probe)).unwrap();
        out.as_coords()
            .unwrap()
            .iter()
            .map(|&v| v as usize)
            .collect()
    }

    #[test]
    fn block_sampling_d3_is_uniform_over_s3() {
        // 6000 draws; each of the 6 permutations lands in 1000 ± 150,
        // a 5-sigma band for a fair die.
        let space = TransformSpace::<f64>::permutations_block(3).unwrap();
        let mut stream = SeedStream::new(2024);
        let mut counts: std::collections::BTreeMap<Vec<usize>, usize> = Default::default();
        for _ in 0..6000 {
            let t = space.sample(&mut stream);
            *counts.entry(perm_of(&t, 3)).or_default() += 1;
        }
        assert_eq!(counts.len(), 6);
        for (perm, count) in counts {
            assert!(
                (850..=1150).contains(&count),
                "perm {perm:?} drawn {count} times"
            );
        }
    }

    #[test]
    fn inflate_is_transform_major() {
        let t1 = Transform::identity(0);
        let t2 = permutation_transform(1, vec![1, 0]);
        let space = TransformSpace::finite_list(vec![t1, t2]).unwrap();
        let s = LabeledSample::new(vec![
            (pt(&[1.0, 2.0]), Label::Plus),
            (pt(&[3.0, 4.0]), Label::Minus),
            (pt(&[5.0, 6.0]), Label::Plus),
        ])
        .unwrap();
        let inflated = space.inflate(&s).unwrap();
        assert_eq!(inflated.len(), 6);
        assert_eq!(inflated.items()[0].0, pt(&[1.0, 2.0]));
        assert_eq!(inflated.items()[3].0, pt(&[2.0, 1.0]));
        // Labels ride along untouched.
        assert_eq!(inflated.items()[4].1, Label::Minus);
    }

    #[test]
    fn inflate_with_identity_returns_the_sample() {
        let space = TransformSpace::<f64>::identity_only();
        let s = LabeledSample::new(vec![(pt(&[1.0]), Label::Plus)]).unwrap();
        let inflated = space.inflate(&s).unwrap();
        assert_eq!(inflated.items(), s.items());
    }

    #[test]
    fn bitmap_transforms_stay_on_the_cube() {
        let space = TransformSpace::<f64>::boolean_bitmap_full(3).unwrap();
        assert_eq!(space.size(), 8);
        for t in space.enumerate().unwrap() {
            let out = t.apply(&pt(&[1.0, -1.0, 1.0])).unwrap();
            assert!(out.is_hypercube());
        }
        // Off-cube points are rejected.
        let t = bitmap_transform::<f64>(0, 3, 0b101);
        assert!(t.apply(&pt(&[0.5, 1.0, 1.0])).is_err());
    }

    #[test]
    fn weights_validate() {
        let space = || {
            TransformSpace::finite_list(vec![Transform::<f64>::identity(0), Transform::identity(1)])
                .unwrap()
        };
        assert!(space().with_weights(vec![0.3, 0.4]).is_ok());
        assert!(space().with_weights(vec![0.9, 0.2]).is_err());
        assert!(space().with_weights(vec![-0.1, 0.5]).is_err());
    }

    #[test]
    fn huge_spaces_refuse_enumeration_but_sample_fine() {
        let space = TransformSpace::<f64>::permutations_all(18).unwrap();
        assert!(!space.is_enumerable());
        assert!(matches!(
            space.enumerate(),
            Err(TransformError::NotEnumerable(..))
        ));
        let mut stream = SeedStream::new(0);
        let t = space.sample(&mut stream);
        let x: Vec<f64> = (0..18).map(|i| i as f64).collect();
        let out = t.apply(&pt(&x)).unwrap();
        let mut sorted = out.as_coords().unwrap().to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(sorted, x);
    }

    #[test]
    fn linear_maps_parse_from_matrix_file_format() {
        let text = "# two 2x2 maps\n0,-1\n1,0\n\n1,0\n0,0\n";
        let maps = parse_linear_maps::<f64>(text, "mem").unwrap();
        assert_eq!(maps.len(), 2);
        assert_eq!(maps[0].dim(), 2);
        // Second map is rank-deficient and that is fine.
        let out = maps[1].apply(&[3.0, 4.0]).unwrap();
        assert_eq!(out, vec![3.0, 0.0]);
    }
}
