//! A two-layer ReLU network trained with plain SGD on the squared loss.
//!
//! The network computes `out(x) = w2 · relu(W1 x + b1) + b2` and predicts
//! `sign(out)`. Loss on one example is `(out(x) - y)^2` with `y ∈ {±1}`.
//! Initialization is symmetric uniform in `±1/sqrt(fan_in)`; the
//! activation, initialization, and step budget are configuration, not
//! facts about the learning problem.

use std::path::Path;

use thiserror::Error;

use crate::domain::{DomainError, Label, Point, Predictor, PredictorTag};
use crate::rng::SeedStream;
use crate::Real;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("non-finite {what} at step {step}; run aborted")]
    NonFinite { what: &'static str, step: usize },
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Parameters of the network. `w1` is `width × dim` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct NetParams<S> {
    dim: usize,
    width: usize,
    w1: Vec<S>,
    b1: Vec<S>,
    w2: Vec<S>,
    b2: S,
}

/// Gradient of the squared loss with respect to every parameter, in the
/// same layout as [`NetParams`].
#[derive(Debug, Clone)]
pub struct NetGradient<S> {
    pub w1: Vec<S>,
    pub b1: Vec<S>,
    pub w2: Vec<S>,
    pub b2: S,
}

impl<S: Real> NetParams<S> {
    /// Symmetric-uniform initialization: layer-1 entries in
    /// `±1/sqrt(dim)`, layer-2 entries in `±1/sqrt(width)`. Draw order is
    /// w1 row-major, b1, w2, b2.
    pub fn init(dim: usize, width: usize, stream: &mut SeedStream) -> Self {
        assert!(dim > 0 && width > 0);
        let bound1 = 1.0 / (dim as f64).sqrt();
        let bound2 = 1.0 / (width as f64).sqrt();
        let mut draw = |bound: f64| S::from_f64(stream.symmetric_f64(bound)).unwrap();
        let w1 = (0..width * dim).map(|_| draw(bound1)).collect();
        let b1 = (0..width).map(|_| draw(bound1)).collect();
        let w2 = (0..width).map(|_| draw(bound2)).collect();
        let b2 = draw(bound2);
        Self {
            dim,
            width,
            w1,
            b1,
            w2,
            b2,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn width(&self) -> usize {
        self.width
    }

    fn check_input(&self, x: &Point<S>) -> Result<(), DomainError> {
        let c = x.as_coords()?;
        if c.len() != self.dim {
            return Err(DomainError::DimensionMismatch {
                expected: self.dim,
                got: c.len(),
            });
        }
        Ok(())
    }

    fn raw_forward(&self, coords: &[S]) -> S {
        let mut out = self.b2;
        for j in 0..self.width {
            let row = &self.w1[j * self.dim..(j + 1) * self.dim];
            let mut pre = self.b1[j];
            for (w, x) in row.iter().zip(coords) {
                pre += *w * *x;
            }
            if pre > S::zero() {
                out += self.w2[j] * pre;
            }
        }
        out
    }

    pub fn forward(&self, x: &Point<S>) -> Result<S, DomainError> {
        self.check_input(x)?;
        Ok(self.raw_forward(x.as_coords()?))
    }

    /// Sign readout: strictly positive output is `+1`.
    pub fn classify(&self, x: &Point<S>) -> Result<Label, DomainError> {
        Ok(Label::from_sign(self.forward(x)?))
    }

    /// "Correctly classified" for the augmentation rule: the output must
    /// be strictly on the label's side; an output of exactly 0 counts as
    /// misclassified.
    pub fn is_correct(&self, x: &Point<S>, y: Label) -> Result<bool, DomainError> {
        let out = self.forward(x)?;
        Ok(match y {
            Label::Plus => out > S::zero(),
            Label::Minus => out < S::zero(),
        })
    }

    pub fn squared_loss(&self, x: &Point<S>, y: Label) -> Result<S, DomainError> {
        let diff = self.forward(x)? - y.value();
        Ok(diff * diff)
    }

    /// Loss and full gradient of `(out(x) - y)^2` at one example. The
    /// ReLU subgradient at exactly 0 is taken to be 0.
    pub fn gradient(&self, x: &Point<S>, y: Label) -> Result<(S, NetGradient<S>), DomainError> {
        self.check_input(x)?;
        let coords = x.as_coords()?;
        let mut hidden = vec![S::zero(); self.width];
        let mut active = vec![false; self.width];
        let mut out = self.b2;
        for j in 0..self.width {
            let row = &self.w1[j * self.dim..(j + 1) * self.dim];
            let mut pre = self.b1[j];
            for (w, xv) in row.iter().zip(coords) {
                pre += *w * *xv;
            }
            if pre > S::zero() {
                hidden[j] = pre;
                active[j] = true;
                out += self.w2[j] * pre;
            }
        }
        let diff = out - y.value();
        let loss = diff * diff;
        let dout = S::from_f64(2.0).unwrap() * diff;

        let mut gw1 = vec![S::zero(); self.width * self.dim];
        let mut gb1 = vec![S::zero(); self.width];
        let mut gw2 = vec![S::zero(); self.width];
        for j in 0..self.width {
            gw2[j] = dout * hidden[j];
            if active[j] {
                let dpre = dout * self.w2[j];
                gb1[j] = dpre;
                let row = &mut gw1[j * self.dim..(j + 1) * self.dim];
                for (g, xv) in row.iter_mut().zip(coords) {
                    *g = dpre * *xv;
                }
            }
        }
        Ok((
            loss,
            NetGradient {
                w1: gw1,
                b1: gb1,
                w2: gw2,
                b2: dout,
            },
        ))
    }

    /// One in-place SGD step; returns the pre-step loss.
    pub fn sgd_step_mut(
        &mut self,
        x: &Point<S>,
        y: Label,
        lr: S,
        step: usize,
    ) -> Result<S, NetError> {
        self.check_input(x)?;
        let coords = x.as_coords()?;
        let mut hidden = vec![S::zero(); self.width];
        let mut active = vec![false; self.width];
        let mut out = self.b2;
        for j in 0..self.width {
            let row = &self.w1[j * self.dim..(j + 1) * self.dim];
            let mut pre = self.b1[j];
            for (w, xv) in row.iter().zip(coords) {
                pre += *w * *xv;
            }
            if pre > S::zero() {
                hidden[j] = pre;
                active[j] = true;
                out += self.w2[j] * pre;
            }
        }
        if !out.is_finite() {
            return Err(NetError::NonFinite {
                what: "network output",
                step,
            });
        }
        let diff = out - y.value();
        let loss = diff * diff;
        let dout = S::from_f64(2.0).unwrap() * diff;
        for j in 0..self.width {
            let w2j = self.w2[j];
            self.w2[j] = w2j - lr * dout * hidden[j];
            if active[j] {
                let dpre = dout * w2j;
                self.b1[j] -= lr * dpre;
                let row = &mut self.w1[j * self.dim..(j + 1) * self.dim];
                for (w, xv) in row.iter_mut().zip(coords) {
                    *w -= lr * dpre * *xv;
                }
            }
        }
        self.b2 -= lr * dout;
        Ok(loss)
    }

    /// Descend along a gradient: `θ ← θ - scale · g`.
    pub fn apply_scaled(&mut self, g: &NetGradient<S>, scale: S) {
        for (w, gw) in self.w1.iter_mut().zip(&g.w1) {
            *w -= scale * *gw;
        }
        for (b, gb) in self.b1.iter_mut().zip(&g.b1) {
            *b -= scale * *gb;
        }
        for (w, gw) in self.w2.iter_mut().zip(&g.w2) {
            *w -= scale * *gw;
        }
        self.b2 -= scale * g.b2;
    }

    /// Flat parameter view in the order w1, b1, w2, b2 (for gradient
    /// checks).
    pub fn flatten(&self) -> Vec<S> {
        let mut v = self.w1.clone();
        v.extend_from_slice(&self.b1);
        v.extend_from_slice(&self.w2);
        v.push(self.b2);
        v
    }

    pub fn param_count(&self) -> usize {
        self.width * self.dim + 2 * self.width + 1
    }

    pub fn perturbed(&self, index: usize, delta: S) -> NetParams<S> {
        let mut p = self.clone();
        let nw1 = p.width * p.dim;
        if index < nw1 {
            p.w1[index] += delta;
        } else if index < nw1 + p.width {
            p.b1[index - nw1] += delta;
        } else if index < nw1 + 2 * p.width {
            p.w2[index - nw1 - p.width] += delta;
        } else {
            p.b2 += delta;
        }
        p
    }

    pub fn all_finite(&self) -> bool {
        self.flatten().iter().all(|v| v.is_finite())
    }

    /// Immutable snapshot usable wherever a [`Predictor`] is expected.
    pub fn predictor(&self, tag: PredictorTag) -> Predictor<S> {
        let snapshot = self.clone();
        Predictor::new(tag, move |x| snapshot.classify(x))
    }

    /// Textual serialization: a `net dim=<d> width=<w>` header, then one
    /// line per w1 row, then b1, w2, and b2 lines (space-separated).
    pub fn to_text(&self, comments: &[String]) -> String {
        let mut out = String::new();
        for c in comments {
            out.push_str(&format!("# {c}\n"));
        }
        out.push_str(&format!("net dim={} width={}\n", self.dim, self.width));
        let line = |vals: &[S]| {
            vals.iter()
                .map(|v| format!("{v}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        for j in 0..self.width {
            out.push_str(&line(&self.w1[j * self.dim..(j + 1) * self.dim]));
            out.push('\n');
        }
        out.push_str(&line(&self.b1));
        out.push('\n');
        out.push_str(&line(&self.w2));
        out.push('\n');
        out.push_str(&format!("{}\n", self.b2));
        out
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self, NetError> {
        let err = |line: usize, msg: String| NetError::Parse {
            path: origin.to_string(),
            line,
            msg,
        };
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let (hline, header) = lines.next().ok_or_else(|| err(0, "empty file".into()))?;
        let mut dim = None;
        let mut width = None;
        for tok in header.split_whitespace().skip(1) {
            if let Some(v) = tok.strip_prefix("dim=") {
                dim = v.parse::<usize>().ok();
            } else if let Some(v) = tok.strip_prefix("width=") {
                width = v.parse::<usize>().ok();
            }
        }
        let (dim, width) = match (dim, width) {
            (Some(d), Some(w)) if d > 0 && w > 0 => (d, w),
            _ => {
                return Err(err(
                    hline + 1,
                    "expected header: net dim=<d> width=<w>".into(),
                ))
            }
        };
        let mut parse_row = |expected: usize| -> Result<Vec<S>, NetError> {
            let (lno, l) = lines
                .next()
                .ok_or_else(|| err(0, "unexpected end of file".into()))?;
            let vals: Result<Vec<S>, _> = l
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>()
                        .map(|v| S::from_f64(v).unwrap())
                        .map_err(|e| err(lno + 1, format!("bad number {t:?}: {e}")))
                })
                .collect();
            let vals = vals?;
            if vals.len() != expected {
                return Err(err(
                    lno + 1,
                    format!("expected {expected} values, got {}", vals.len()),
                ));
            }
            Ok(vals)
        };
        let mut w1 = Vec::with_capacity(width * dim);
        for _ in 0..width {
            w1.extend(parse_row(dim)?);
        }
        let b1 = parse_row(width)?;
        let w2 = parse_row(width)?;
        let b2 = parse_row(1)?[0];
        Ok(Self {
            dim,
            width,
            w1,
            b1,
            w2,
            b2,
        })
    }

    pub fn read_file(path: &Path) -> Result<Self, NetError> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, &path.display().to_string())
    }
}

/// One functional SGD step on the squared loss; the input parameters are
/// left untouched.
pub fn sgd_step<S: Real>(
    params: &NetParams<S>,
    x: &Point<S>,
    y: Label,
    lr: S,
) -> Result<NetParams<S>, NetError> {
    let mut next = params.clone();
    next.sgd_step_mut(x, y, lr, 0)?;
    if !next.all_finite() {
        return Err(NetError::NonFinite {
            what: "parameters",
            step: 0,
        });
    }
    Ok(next)
}
