//! Geometry of the n-dimensional torus `T^n = R^n / Z^n`.
//!
//! Points are stored as their canonical representative in `[0, 1)^n`. The
//! difference of two points is carried as a [`WrappedDiff`] whose entries are
//! the signed minimal representatives in `(-0.5, 0.5]`; every distance and
//! scoring kernel is a per-coordinate function of that difference.
//!
//! The three scoring kernels are scaled so that each coordinate contributes at
//! most 1, giving a maximum score of exactly `n`:
//!
//! | kind | per-coordinate kernel | derivative        |
//! |------|-----------------------|-------------------|
//! | L1   | `2 |d|`               | `2 sign(d)`       |
//! | L2   | `4 d^2`               | `8 d`             |
//! | eL2  | `sin^2(pi d)`         | `pi sin(2 pi d)`  |

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Distance family used for scoring a triple on the torus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreKind {
    L1,
    L2,
    #[serde(rename = "el2")]
    EL2,
}

impl ScoreKind {
    pub const ALL: [ScoreKind; 3] = [ScoreKind::L1, ScoreKind::L2, ScoreKind::EL2];

    pub fn as_str(self) -> &'static str {
        match self {
            ScoreKind::L1 => "l1",
            ScoreKind::L2 => "l2",
            ScoreKind::EL2 => "el2",
        }
    }

    /// Contribution of one wrapped coordinate difference to the score.
    #[inline]
    pub fn kernel(self, d: f64) -> f64 {
        match self {
            ScoreKind::L1 => 2.0 * d.abs(),
            ScoreKind::L2 => 4.0 * d * d,
            ScoreKind::EL2 => {
                let s = (PI * d).sin();
                s * s
            }
        }
    }

    /// Derivative of [`ScoreKind::kernel`] with respect to the difference.
    ///
    /// The L1 subgradient at `d = 0` is 0; at the antipode `d = 0.5` the
    /// closed form is used as-is.
    #[inline]
    pub fn kernel_derivative(self, d: f64) -> f64 {
        match self {
            ScoreKind::L1 => {
                if d > 0.0 {
                    2.0
                } else if d < 0.0 {
                    -2.0
                } else {
                    0.0
                }
            }
            ScoreKind::L2 => 8.0 * d,
            ScoreKind::EL2 => PI * (2.0 * PI * d).sin(),
        }
    }
}

impl fmt::Display for ScoreKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScoreKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(ScoreKind::L1),
            "l2" => Ok(ScoreKind::L2),
            "el2" => Ok(ScoreKind::EL2),
            other => Err(Error::InvalidArgument(format!(
                "unknown torus score kind {other:?} (expected l1, l2 or el2)"
            ))),
        }
    }
}

/// Fractional part `x - floor(x)`, always in `[0, 1)` for finite `x`.
#[inline]
pub fn frac(x: f64) -> f64 {
    let f = x - x.floor();
    // tiny negative inputs round up to exactly 1.0
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

/// Signed minimal representative of `d` modulo 1, in `(-0.5, 0.5]`.
#[inline]
pub fn wrap(d: f64) -> f64 {
    let f = frac(d);
    if f > 0.5 {
        f - 1.0
    } else {
        f
    }
}

/// Wrapped difference `([h] + [r]) - [t]` for one coordinate.
#[inline]
pub(crate) fn translation_residual(h: f64, r: f64, t: f64) -> f64 {
    wrap(frac(h + r) - t)
}

/// Score of `(h, r, t)` over raw coordinate slices of equal length.
///
/// Callers are responsible for the length check; [`score`] is the checked
/// entry point.
#[inline]
pub fn score_slices(kind: ScoreKind, h: &[f64], r: &[f64], t: &[f64]) -> f64 {
    debug_assert!(h.len() == r.len() && r.len() == t.len());
    h.iter()
        .zip(r)
        .zip(t)
        .map(|((&h, &r), &t)| kind.kernel(translation_residual(h, r, t)))
        .sum()
}

/// A point of `T^n` held by its representative in `[0, 1)^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusPoint(Vec<f64>);

impl TorusPoint {
    /// Maps an arbitrary finite real vector onto the torus.
    pub fn canonicalize(raw: &[f64]) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::InvalidArgument("torus dimension must be at least 1".into()));
        }
        if let Some(i) = raw.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "coordinate {i} is not finite ({})",
                raw[i]
            )));
        }
        Ok(TorusPoint(raw.iter().map(|&x| frac(x)).collect()))
    }

    /// The identity element of the group.
    pub fn zero(dim: usize) -> Self {
        TorusPoint(vec![0.0; dim])
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Per-coordinate signed minimal difference, each entry in `(-0.5, 0.5]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WrappedDiff(Vec<f64>);

impl WrappedDiff {
    /// Builds a difference from explicit deltas, rejecting values outside
    /// `(-0.5, 0.5]`.
    pub fn from_deltas(deltas: Vec<f64>) -> Result<Self> {
        if let Some(d) = deltas.iter().find(|d| !(**d > -0.5 && **d <= 0.5)) {
            return Err(Error::InvalidArgument(format!(
                "wrapped difference {d} outside (-0.5, 0.5]"
            )));
        }
        Ok(WrappedDiff(deltas))
    }

    pub fn deltas(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// Group operation `[a] + [b] = [a + b]`.
pub fn torus_add(a: &TorusPoint, b: &TorusPoint) -> Result<TorusPoint> {
    check_dim(a.dim(), b.dim())?;
    Ok(TorusPoint(
        a.0.iter().zip(&b.0).map(|(x, y)| frac(x + y)).collect(),
    ))
}

/// Minimal signed representative of `a - b` in every coordinate.
pub fn wrapped_diff(a: &TorusPoint, b: &TorusPoint) -> Result<WrappedDiff> {
    check_dim(a.dim(), b.dim())?;
    Ok(WrappedDiff(
        a.0.iter().zip(&b.0).map(|(x, y)| wrap(x - y)).collect(),
    ))
}

/// The metric on the torus: `d_L1`, `d_L2` or `d_eL2`.
///
/// `d_eL2` is the chordal distance after embedding each circle in the
/// complex plane via `x -> exp(2 pi i x)`.
pub fn distance(kind: ScoreKind, a: &TorusPoint, b: &TorusPoint) -> Result<f64> {
    let diff = wrapped_diff(a, b)?;
    let d = diff.deltas().iter();
    Ok(match kind {
        ScoreKind::L1 => d.map(|x| x.abs()).sum(),
        ScoreKind::L2 => d.map(|x| x * x).sum::<f64>().sqrt(),
        ScoreKind::EL2 => d
            .map(|x| {
                let s = (PI * x).sin();
                4.0 * s * s
            })
            .sum::<f64>()
            .sqrt(),
    })
}

/// Normalized score of a wrapped difference; lies in `[0, n]`.
pub fn score_of_diff(kind: ScoreKind, diff: &WrappedDiff) -> f64 {
    diff.deltas().iter().map(|&d| kind.kernel(d)).sum()
}

/// Score of the triple `(h, r, t)`: zero exactly when `[h] + [r] = [t]`.
pub fn score(kind: ScoreKind, h: &TorusPoint, r: &TorusPoint, t: &TorusPoint) -> Result<f64> {
    check_dim(h.dim(), r.dim())?;
    check_dim(h.dim(), t.dim())?;
    Ok(score_slices(kind, &h.0, &r.0, &t.0))
}

/// Gradient of the score with respect to the wrapped difference.
///
/// Equal to the gradient with respect to `h` and to `r`; the gradient with
/// respect to `t` is its negation.
pub fn score_gradient(kind: ScoreKind, diff: &WrappedDiff) -> Vec<f64> {
    diff.deltas()
        .iter()
        .map(|&d| kind.kernel_derivative(d))
        .collect()
}
