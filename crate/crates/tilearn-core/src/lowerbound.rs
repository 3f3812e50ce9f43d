//! A coupled (hypothesis, transform) family on an abstract instance space
//! where each hypothesis alone is nearly trivial — `vc(H) = 1` — yet the
//! composition `H∘T` shatters `k` points.
//!
//! The instance space has `3k` base points plus, for every k-subset `P`
//! of the base indices, a fresh block of `3k` image points. The transform
//! `T_P` maps base point `i` to the image point `(P, i)`; the hypothesis
//! `h_P` labels exactly the images `{(P, i) : i ∈ P}` negative and
//! everything else positive. Points are [`Point::Tagged`] values: group 0
//! is the base block, group `p + 1` is the image block of subset index
//! `p`. Uniqueness of the image points is by construction.

use itertools::Itertools;

use crate::domain::{DomainError, Label, Point, Predictor, PredictorTag, Transform};
use crate::Real;

/// The paired family, parameterized by `k`.
#[derive(Debug, Clone)]
pub struct LowerBoundConstruction {
    k: usize,
    /// All k-subsets of `0..3k` as bitmasks, in lexicographic order of
    /// the underlying index combinations.
    subsets: Vec<u32>,
}

impl LowerBoundConstruction {
    pub fn new(k: usize) -> Result<Self, DomainError> {
        if k == 0 || 3 * k > 30 {
            return Err(DomainError::InvalidDistribution(format!(
                "k must be in 1..=10, got {k}"
            )));
        }
        let subsets = (0..3 * k)
            .combinations(k)
            .map(|c| c.iter().fold(0u32, |m, &i| m | 1 << i))
            .collect();
        Ok(Self { k, subsets })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_base_points(&self) -> usize {
        3 * self.k
    }

    /// Number of k-subsets, i.e. the size of both families.
    pub fn family_size(&self) -> usize {
        self.subsets.len()
    }

    pub fn base_point<S: Real>(&self, i: usize) -> Point<S> {
        Point::tagged(0, i as u64)
    }

    pub fn base_points<S: Real>(&self) -> Vec<Point<S>> {
        (0..self.n_base_points())
            .map(|i| self.base_point(i))
            .collect()
    }

    pub fn image_point<S: Real>(&self, subset_index: usize, i: usize) -> Point<S> {
        Point::tagged(subset_index as u64 + 1, i as u64)
    }

    /// The whole instance space: base points then every image block.
    pub fn universe<S: Real>(&self) -> Vec<Point<S>> {
        let mut out = self.base_points();
        for p in 0..self.family_size() {
            for i in 0..self.n_base_points() {
                out.push(self.image_point(p, i));
            }
        }
        out
    }

    /// `h_P` for subset index `p`: negative exactly on `{(P, i) : i ∈ P}`.
    pub fn hypothesis<S: Real>(&self, p: usize) -> Predictor<S> {
        let mask = self.subsets[p];
        let group = p as u64 + 1;
        Predictor::new(PredictorTag::Index(p), move |x| match x {
            Point::Tagged { group: g, item } if *g == group && mask >> *item & 1 == 1 => {
                Ok(Label::Minus)
            }
            Point::Tagged { .. } => Ok(Label::Plus),
            Point::Coords(_) => Err(DomainError::OutsideDomain(
                "lower-bound hypotheses act on tagged points".into(),
            )),
        })
    }

    pub fn hypotheses<S: Real>(&self) -> Vec<Predictor<S>> {
        (0..self.family_size())
            .map(|p| self.hypothesis(p))
            .collect()
    }

    /// `T_P` for subset index `p`: defined on the base points only, which
    /// it maps to their unique images.
    pub fn transform<S: Real>(&self, p: usize) -> Transform<S> {
        let group = p as u64 + 1;
        let n = self.n_base_points() as u64;
        Transform::new(p, format!("T{}", p + 1), move |x| match x {
            Point::Tagged { group: 0, item } if *item < n => Ok(Point::tagged(group, *item)),
            _ => Err(DomainError::OutsideDomain(
                "T_P is defined on the base points only".into(),
            )),
        })
    }

    pub fn transforms<S: Real>(&self) -> Vec<Transform<S>> {
        (0..self.family_size()).map(|p| self.transform(p)).collect()
    }

    pub fn subset_mask(&self, p: usize) -> u32 {
        self.subsets[p]
    }

    /// The subset index realizing labels `y_1..y_k` on the first k base
    /// points under `h_P ∘ T_P`: take `I` to be the negatively labeled
    /// indices and pad `P = I` with filler indices from the middle third
    /// until `|P| = k`.
    pub fn shattering_subset(&self, labels: &[Label]) -> usize {
        assert_eq!(labels.len(), self.k, "one label per shattered point");
        let mut mask = 0u32;
        let mut n_minus = 0;
        for (i, y) in labels.iter().enumerate() {
            if *y == Label::Minus {
                mask |= 1 << i;
                n_minus += 1;
            }
        }
        for j in (self.k)..(2 * self.k - n_minus) {
            mask |= 1 << j;
        }
        self.subsets
            .iter()
            .position(|&m| m == mask)
            .expect("padded mask is a k-subset")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use itertools::Itertools;

    #[test]
    fn family_size_is_binomial() {
        // C(6, 2) = 15
        let c = LowerBoundConstruction::new(2).unwrap();
        assert_eq!(c.family_size(), 15);
        assert_eq!(c.hypotheses::<f64>().len(), 15);
        assert_eq!(c.transforms::<f64>().len(), 15);
    }

    #[test]
    fn hypothesis_negative_set_is_exactly_its_subset_images() {
        let c = LowerBoundConstruction::new(2).unwrap();
        for p in 0..c.family_size() {
            let h = c.hypothesis::<f64>(p);
            let mask = c.subset_mask(p);
            let mut negatives = 0;
            for x in c.universe::<f64>() {
                let label = h.classify(&x).unwrap();
                let expect_minus = matches!(
                    x,
                    Point::Tagged { group, item }
                        if group == p as u64 + 1 && mask >> item & 1 == 1
                );
                assert_eq!(label == Label::Minus, expect_minus);
                if label == Label::Minus {
                    negatives += 1;
                }
            }
            assert_eq!(negatives, c.k());
        }
    }

    #[test]
    fn images_are_unique_across_subsets_and_base_points() {
        let c = LowerBoundConstruction::new(2).unwrap();
        let ts = c.transforms::<f64>();
        let mut images = Vec::new();
        for t in &ts {
            for i in 0..c.n_base_points() {
                images.push(t.apply(&c.base_point::<f64>(i)).unwrap());
            }
        }
        for (a, b) in images.iter().tuple_combinations() {
            assert_ne!(a, b);
        }
    }

    #[test]
    fn transform_rejects_points_outside_domain() {
        let c = LowerBoundConstruction::new(2).unwrap();
        let t = c.transform::<f64>(0);
        let image = c.image_point::<f64>(0, 0);
        assert!(t.apply(&image).is_err());
        assert!(t.apply(&Point::coords(vec![0.0])).is_err());
    }

    #[test]
    fn shattering_assignment_realizes_every_labeling() {
        for k in [2usize, 3] {
            let c = LowerBoundConstruction::new(k).unwrap();
            for mask in 0u32..(1 << k) {
                let labels: Vec<Label> = (0..k)
                    .map(|i| {
                        if mask >> i & 1 == 1 {
                            Label::Minus
                        } else {
                            Label::Plus
                        }
                    })
                    .collect();
                let p = c.shattering_subset(&labels);
                let h = c.hypothesis::<f64>(p);
                let t = c.transform::<f64>(p);
                for (i, want) in labels.iter().enumerate() {
                    let got = h
                        .classify(&t.apply(&c.base_point::<f64>(i)).unwrap())
                        .unwrap();
                    assert_eq!(got, *want, "k={k} mask={mask:b} point {i}");
                }
            }
        }
    }
}
