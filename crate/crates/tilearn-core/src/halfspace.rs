//! Exhaustive enumeration of halfspace dichotomies on a small point set.
//!
//! A sign pattern `y` on points `x_1..x_n` is realizable by a halfspace
//! iff the linear system `y_i (w·x_i + b) ≥ 1` is feasible (strict
//! separability is scale-invariant, so margin 1 loses nothing). Each of
//! the `2^n` patterns is decided exactly by Fourier–Motzkin elimination
//! over arbitrary-precision rationals, and feasible patterns come with a
//! witness `(w, b)` recovered by back-substitution. The margin-1
//! formulation keeps the witness valid after rounding back to the scalar
//! type.

use num_rational::BigRational;
use num_traits::{FromPrimitive, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::domain::{Label, Point};
use crate::Real;

/// Hard cap on the intermediate constraint count during elimination.
const BLOWUP_GUARD: usize = 200_000;

/// Enumeration limits: `2^MAX_POINTS` feasibility checks, each over
/// `MAX_DIM + 1` variables.
pub const MAX_POINTS: usize = 14;
pub const MAX_DIM: usize = 4;

#[derive(Debug, Error)]
pub enum HalfspaceError {
    #[error("halfspace enumeration requires coordinate points")]
    CoordsRequired,
    #[error("empty query set")]
    EmptyQuery,
    #[error("query points must share one dimension")]
    MixedDimensions,
    #[error("dimension {0} exceeds the enumeration limit {1}")]
    DimTooLarge(usize, usize),
    #[error("{0} query points exceed the enumeration limit {1}")]
    TooManyPoints(usize, usize),
    #[error("feasibility system exceeded the internal size guard")]
    Blowup,
    #[error("witness failed to reproduce its sign pattern")]
    BadWitness,
}

/// A realizable sign pattern together with a halfspace realizing it.
#[derive(Debug, Clone)]
pub struct HalfspaceDichotomy<S> {
    /// Labels assigned to the query points, in query order.
    pub labels: Vec<Label>,
    /// Normal vector of the witness halfspace.
    pub weights: Vec<S>,
    /// Bias of the witness halfspace.
    pub bias: S,
}

impl<S: Real> HalfspaceDichotomy<S> {
    /// `+1` iff `w·x + b > 0`; exactly zero reads as `-1`.
    pub fn classify(&self, coords: &[S]) -> Label {
        let mut acc = self.bias;
        for (w, x) in self.weights.iter().zip(coords) {
            acc += *w * *x;
        }
        Label::from_sign(acc)
    }
}

/// A linear constraint `coeffs · v ≥ rhs` over rationals.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Constraint {
    coeffs: Vec<BigRational>,
    rhs: BigRational,
}

impl Constraint {
    fn normalize(mut self) -> Self {
        if let Some(lead) = self.coeffs.iter().find(|c| !c.is_zero()).cloned() {
            let scale = lead.abs();
            for c in &mut self.coeffs {
                *c /= scale.clone();
            }
            self.rhs /= scale;
        }
        self
    }
}

/// Decide feasibility of `{v : coeffs_i · v ≥ rhs_i}` and return a point
/// of the polyhedron if one exists.
fn feasible_point(
    constraints: Vec<Constraint>,
    n_vars: usize,
) -> Result<Option<Vec<BigRational>>, HalfspaceError> {
    // Eliminate variables from the last to the first, remembering each
    // level's bounds for back-substitution.
    let mut levels: Vec<(Vec<Constraint>, Vec<Constraint>)> = Vec::with_capacity(n_vars);
    let mut current = constraints;
    for var in (0..n_vars).rev() {
        let mut lowers = Vec::new(); // a_v > 0: v ≥ (rhs - rest)/a_v
        let mut uppers = Vec::new(); // a_v < 0: v ≤ (rhs - rest)/a_v
        let mut rest = Vec::new();
        for c in current {
            let a = c.coeffs[var].clone();
            if a.is_zero() {
                rest.push(c);
            } else if a.is_positive() {
                lowers.push(c);
            } else {
                uppers.push(c);
            }
        }
        let mut next: Vec<Constraint> = rest;
        for lo in &lowers {
            for up in &uppers {
                // lo has coeff a > 0, up has coeff b < 0; the combination
                // (-b)·lo + a·up zeroes the coefficient on `var`.
                let a = lo.coeffs[var].clone();
                let b = up.coeffs[var].clone();
                let mut coeffs = vec![BigRational::zero(); var];
                for (j, slot) in coeffs.iter_mut().enumerate() {
                    *slot = -b.clone() * lo.coeffs[j].clone() + a.clone() * up.coeffs[j].clone();
                }
                let rhs = -b.clone() * lo.rhs.clone() + a.clone() * up.rhs.clone();
                next.push(Constraint { coeffs, rhs }.normalize());
            }
        }
        // Truncate coefficient vectors to the remaining variables, then
        // dedupe to keep the cascade small.
        for c in &mut next {
            c.coeffs.truncate(var);
        }
        next.sort_by(|x, y| {
            x.coeffs
                .iter()
                .zip(&y.coeffs)
                .map(|(a, b)| a.cmp(b))
                .find(|o| *o != std::cmp::Ordering::Equal)
                .unwrap_or_else(|| x.rhs.cmp(&y.rhs))
        });
        next.dedup();
        if next.len() > BLOWUP_GUARD {
            return Err(HalfspaceError::Blowup);
        }
        levels.push((lowers, uppers));
        current = next;
    }

    // Only constant constraints remain: 0 ≥ rhs.
    if current.iter().any(|c| c.rhs.is_positive()) {
        return Ok(None);
    }

    // Back-substitute in increasing variable order. levels[k] holds the
    // bounds recorded when eliminating variable n_vars-1-k.
    let mut assignment = vec![BigRational::zero(); n_vars];
    for var in 0..n_vars {
        let (lowers, uppers) = &levels[n_vars - 1 - var];
        let eval_rest = |c: &Constraint| -> BigRational {
            let mut acc = BigRational::zero();
            for (j, value) in assignment.iter().enumerate().take(var) {
                acc += c.coeffs[j].clone() * value.clone();
            }
            acc
        };
        let lo = lowers
            .iter()
            .map(|c| (c.rhs.clone() - eval_rest(c)) / c.coeffs[var].clone())
            .max();
        let hi = uppers
            .iter()
            .map(|c| (c.rhs.clone() - eval_rest(c)) / c.coeffs[var].clone())
            .min();
        assignment[var] = match (lo, hi) {
            (Some(l), Some(h)) => (l + h) / BigRational::from_integer(2.into()),
            (Some(l), None) => l + BigRational::from_integer(1.into()),
            (None, Some(h)) => h - BigRational::from_integer(1.into()),
            (None, None) => BigRational::zero(),
        };
    }
    Ok(Some(assignment))
}

fn rational_coords<S: Real>(
    points: &[Point<S>],
) -> Result<(usize, Vec<Vec<BigRational>>), HalfspaceError> {
    if points.is_empty() {
        return Err(HalfspaceError::EmptyQuery);
    }
    let dim = points[0].dim().ok_or(HalfspaceError::CoordsRequired)?;
    let mut out = Vec::with_capacity(points.len());
    for p in points {
        let coords = p.as_coords().map_err(|_| HalfspaceError::CoordsRequired)?;
        if coords.len() != dim {
            return Err(HalfspaceError::MixedDimensions);
        }
        out.push(
            coords
                .iter()
                .map(|&c| BigRational::from_f64(c.to_f64().unwrap()).expect("finite coordinate"))
                .collect(),
        );
    }
    Ok((dim, out))
}

/// Is the sign pattern `labels` realizable on `points` by an affine
/// halfspace? Returns the witness if so.
pub fn separate<S: Real>(
    points: &[Point<S>],
    labels: &[Label],
) -> Result<Option<HalfspaceDichotomy<S>>, HalfspaceError> {
    let (dim, coords) = rational_coords(points)?;
    separate_rational(dim, &coords, labels)
}

fn separate_rational<S: Real>(
    dim: usize,
    coords: &[Vec<BigRational>],
    labels: &[Label],
) -> Result<Option<HalfspaceDichotomy<S>>, HalfspaceError> {
    let n_vars = dim + 1; // w_0..w_{d-1}, b
    let one = BigRational::from_integer(1.into());
    let constraints: Vec<Constraint> = coords
        .iter()
        .zip(labels)
        .map(|(x, y)| {
            let sign = match y {
                Label::Plus => one.clone(),
                Label::Minus => -one.clone(),
            };
            let mut c: Vec<BigRational> = x.iter().map(|v| sign.clone() * v.clone()).collect();
            c.push(sign.clone()); // bias coefficient
            Constraint {
                coeffs: c,
                rhs: one.clone(),
            }
            .normalize()
        })
        .collect();
    let Some(solution) = feasible_point(constraints, n_vars)? else {
        return Ok(None);
    };
    let weights: Vec<S> = solution[..dim]
        .iter()
        .map(|r| S::from_f64(r.to_f64().unwrap()).unwrap())
        .collect();
    let bias = S::from_f64(solution[dim].to_f64().unwrap()).unwrap();
    let dich = HalfspaceDichotomy {
        labels: labels.to_vec(),
        weights,
        bias,
    };
    // The rational witness has margin ≥ 1; rounding to S must not flip
    // any sign at this scale.
    for (x, y) in coords.iter().zip(labels) {
        let xs: Vec<S> = x
            .iter()
            .map(|r| S::from_f64(r.to_f64().unwrap()).unwrap())
            .collect();
        if dich.classify(&xs) != *y {
            return Err(HalfspaceError::BadWitness);
        }
    }
    Ok(Some(dich))
}

/// All halfspace-realizable dichotomies of `points`, in increasing order
/// of the pattern bitmask (bit `i` set means point `i` is labeled `+1`).
pub fn enumerate_dichotomies<S: Real>(
    points: &[Point<S>],
) -> Result<Vec<HalfspaceDichotomy<S>>, HalfspaceError> {
    let (dim, coords) = rational_coords(points)?;
    if dim > MAX_DIM {
        return Err(HalfspaceError::DimTooLarge(dim, MAX_DIM));
    }
    if points.len() > MAX_POINTS {
        return Err(HalfspaceError::TooManyPoints(points.len(), MAX_POINTS));
    }
    let n = points.len();
    let mut out = Vec::new();
    for mask in 0u64..(1u64 << n) {
        let labels: Vec<Label> = (0..n)
            .map(|i| {
                if mask >> i & 1 == 1 {
                    Label::Plus
                } else {
                    Label::Minus
                }
            })
            .collect();
        if let Some(d) = separate_rational::<S>(dim, &coords, &labels)? {
            out.push(d);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(coords: &[&[f64]]) -> Vec<Point<f64>> {
        coords.iter().map(|c| Point::coords(c.to_vec())).collect()
    }

    fn binomial(n: usize, k: usize) -> usize {
        if k > n {
            return 0;
        }
        let mut acc = 1usize;
        for i in 0..k {
            acc = acc * (n - i) / (i + 1);
        }
        acc
    }

    /// Number of halfspace dichotomies of n points in general position in
    /// R^d: 2 * sum_{i=0}^{d} C(n-1, i).
    fn cover_count(n: usize, d: usize) -> usize {
        2 * (0..=d).map(|i| binomial(n - 1, i)).sum::<usize>()
    }

    #[test]
    fn one_point_both_labels() {
        let p = pts(&[&[0.0]]);
        let ds = enumerate_dichotomies(&p).unwrap();
        assert_eq!(ds.len(), 2);
    }

    #[test]
    fn three_collinear_points_give_six_dichotomies() {
        // Thresholds in both orientations: 2*(1 + 2) = 6; the two "middle
        // point differs" patterns are not separable.
        let p = pts(&[&[0.0], &[1.0], &[2.0]]);
        let ds = enumerate_dichotomies(&p).unwrap();
        assert_eq!(ds.len(), 6);
        for d in &ds {
            let mid_differs = d.labels[1] != d.labels[0] && d.labels[1] != d.labels[2];
            assert!(!mid_differs);
        }
    }

    #[test]
    fn xor_pattern_is_not_separable() {
        let p = pts(&[&[0.0, 0.0], &[1.0, 1.0], &[0.0, 1.0], &[1.0, 0.0]]);
        let labels = vec![Label::Plus, Label::Plus, Label::Minus, Label::Minus];
        assert!(separate(&p, &labels).unwrap().is_none());
        let and_labels = vec![Label::Minus, Label::Plus, Label::Minus, Label::Minus];
        let d = separate(&p, &and_labels)
            .unwrap()
            .expect("AND is separable");
        for (point, want) in p.iter().zip(&and_labels) {
            assert_eq!(d.classify(point.as_coords().unwrap()), *want);
        }
    }

    #[test]
    fn counts_match_cover_formula_in_general_position() {
        let mut stream = crate::rng::SeedStream::new(20240601);
        for d in 1..=3usize {
            for n in (d + 1)..=6usize {
                let points: Vec<Point<f64>> = (0..n)
                    .map(|_| {
                        Point::coords(
                            (0..d)
                                .map(|_| stream.symmetric_f64(1.0))
                                .collect::<Vec<f64>>(),
                        )
                    })
                    .collect();
                let ds = enumerate_dichotomies(&points).unwrap();
                assert_eq!(
                    ds.len(),
                    cover_count(n, d),
                    "n={n} d={d}: got {} dichotomies",
                    ds.len()
                );
            }
        }
    }

    #[test]
    fn every_witness_reproduces_its_pattern() {
        let p = pts(&[
            &[0.5, 0.25],
            &[-1.0, 0.75],
            &[0.0, -0.5],
            &[1.5, 1.0],
            &[-0.5, -1.25],
        ]);
        for d in enumerate_dichotomies(&p).unwrap() {
            for (point, want) in p.iter().zip(&d.labels) {
                assert_eq!(d.classify(point.as_coords().unwrap()), *want);
            }
        }
    }

    #[test]
    fn degenerate_configurations_are_handled() {
        // Duplicate points: patterns assigning them different labels are
        // infeasible.
        let p = pts(&[&[1.0, 1.0], &[1.0, 1.0]]);
        let ds = enumerate_dichotomies(&p).unwrap();
        assert_eq!(ds.len(), 2);
        for d in ds {
            assert_eq!(d.labels[0], d.labels[1]);
        }
    }
}
