//! Stage schedules for x-y-x dimensional splitting.
//!
//! A scheme alternates axes starting and ending with `x`, with `p` x-stages
//! and `q = p - 1` y-stages whose fractions each sum to 1. Time-dependent
//! velocities are handled by giving each axis its own clock: stage `k` of
//! an axis advances that axis' cumulative time by its fraction of the full
//! step, so after the last stage both clocks sit at `t + dt`.

use crate::error::{Result, SldgError};
use crate::mesh::Axis;

/// An ordered list of `(axis, fraction)` stages.
#[derive(Debug, Clone, PartialEq)]
pub struct SplittingScheme {
    pub name: String,
    pub stages: Vec<(Axis, f64)>,
}

/// Violation of a splitting-scheme invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum SplittingViolation {
    Empty,
    DoesNotStartWithX,
    DoesNotEndWithX,
    AxesDoNotAlternate { stage: usize },
    XFractionsSum { sum: f64 },
    YFractionsSum { sum: f64 },
    NonFiniteFraction { stage: usize },
}

impl std::fmt::Display for SplittingViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Empty => write!(f, "scheme has no stages"),
            Self::DoesNotStartWithX => write!(f, "first stage must sweep x"),
            Self::DoesNotEndWithX => write!(f, "last stage must sweep x"),
            Self::AxesDoNotAlternate { stage } => write!(f, "axes do not alternate at stage {stage}"),
            Self::XFractionsSum { sum } => write!(f, "x fractions sum to {sum}, expected 1"),
            Self::YFractionsSum { sum } => write!(f, "y fractions sum to {sum}, expected 1"),
            Self::NonFiniteFraction { stage } => write!(f, "non-finite fraction at stage {stage}"),
        }
    }
}

/// Second-order Strang splitting: x for half the step, y for the full
/// step, x for the remaining half.
pub fn strang2() -> SplittingScheme {
    SplittingScheme {
        name: "strang2".into(),
        stages: vec![(Axis::X, 0.5), (Axis::Y, 1.0), (Axis::X, 0.5)],
    }
}

/// Fourth-order splitting (Ruth/Yoshida triple jump): seven stages with
/// one negative intermediate fraction per axis, built from the closed
/// forms rather than rounded decimals.
pub fn strang4() -> SplittingScheme {
    let d1 = 1.0 / (2.0 - 2.0f64.powf(1.0 / 3.0));
    let d2 = -(2.0f64.powf(1.0 / 3.0)) / (2.0 - 2.0f64.powf(1.0 / 3.0));
    let c1 = 0.5 * d1;
    let c2 = 0.5 * (d1 + d2);
    SplittingScheme {
        name: "strang4".into(),
        stages: vec![
            (Axis::X, c1),
            (Axis::Y, d1),
            (Axis::X, c2),
            (Axis::Y, d2),
            (Axis::X, c2),
            (Axis::Y, d1),
            (Axis::X, c1),
        ],
    }
}

/// Check all scheme invariants, reporting the first violation found.
pub fn validate(scheme: &SplittingScheme) -> std::result::Result<(), SplittingViolation> {
    let stages = &scheme.stages;
    if stages.is_empty() {
        return Err(SplittingViolation::Empty);
    }
    if stages[0].0 != Axis::X {
        return Err(SplittingViolation::DoesNotStartWithX);
    }
    if stages[stages.len() - 1].0 != Axis::X {
        return Err(SplittingViolation::DoesNotEndWithX);
    }
    for (i, w) in stages.windows(2).enumerate() {
        if w[0].0 == w[1].0 {
            return Err(SplittingViolation::AxesDoNotAlternate { stage: i + 1 });
        }
    }
    for (i, &(_, f)) in stages.iter().enumerate() {
        if !f.is_finite() {
            return Err(SplittingViolation::NonFiniteFraction { stage: i });
        }
    }
    let sum_x: f64 = stages.iter().filter(|(a, _)| *a == Axis::X).map(|&(_, f)| f).sum();
    let sum_y: f64 = stages.iter().filter(|(a, _)| *a == Axis::Y).map(|&(_, f)| f).sum();
    if (sum_x - 1.0).abs() > 1e-14 {
        return Err(SplittingViolation::XFractionsSum { sum: sum_x });
    }
    if (sum_y - 1.0).abs() > 1e-14 {
        return Err(SplittingViolation::YFractionsSum { sum: sum_y });
    }
    Ok(())
}

/// Resolve a scheme by name, or load `(axis, fraction)` pairs from a JSON
/// file such as `[["x", 0.5], ["y", 1.0], ["x", 0.5]]`.
pub fn resolve(name: &str) -> Result<SplittingScheme> {
    let scheme = match name {
        "strang2" => strang2(),
        "strang4" => strang4(),
        path => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                SldgError::Config(format!("splitting {path:?} is not built in and not a readable file: {e}"))
            })?;
            let pairs: Vec<(String, f64)> = serde_json::from_str(&text)
                .map_err(|e| SldgError::Config(format!("bad splitting file {path:?}: {e}")))?;
            let mut stages = Vec::with_capacity(pairs.len());
            for (axis, frac) in pairs {
                let axis = match axis.as_str() {
                    "x" | "X" => Axis::X,
                    "y" | "Y" => Axis::Y,
                    other => {
                        return Err(SldgError::Config(format!("bad axis {other:?} in {path:?}")))
                    }
                };
                stages.push((axis, frac));
            }
            SplittingScheme { name: path.to_string(), stages }
        }
    };
    validate(&scheme).map_err(|v| SldgError::Config(format!("invalid splitting: {v}")))?;
    Ok(scheme)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn strang2_shape() {
        let s = strang2();
        assert_eq!(s.stages.len(), 3);
        let sum_x: f64 = s.stages.iter().filter(|(a, _)| *a == Axis::X).map(|&(_, f)| f).sum();
        let sum_y: f64 = s.stages.iter().filter(|(a, _)| *a == Axis::Y).map(|&(_, f)| f).sum();
        assert_eq!(sum_x, 1.0);
        assert_eq!(sum_y, 1.0);
        assert!(validate(&s).is_ok());
    }

    #[test]
    fn strang4_coefficients() {
        let s = strang4();
        assert_eq!(s.stages.len(), 7);
        let d1 = s.stages[1].1;
        let d2 = s.stages[3].1;
        let c1 = s.stages[0].1;
        let c2 = s.stages[2].1;
        assert_abs_diff_eq!(d1, 1.35120719195966, epsilon = 1e-13);
        assert_abs_diff_eq!(d2, -1.70241438391932, epsilon = 1e-13);
        assert_abs_diff_eq!(c1, 0.67560359597983, epsilon = 1e-13);
        assert_abs_diff_eq!(c2, -0.17560359597983, epsilon = 1e-13);
        assert!(validate(&s).is_ok());
    }

    #[test]
    fn cumulative_time_telescopes() {
        for s in [strang2(), strang4()] {
            let (mut tx, mut ty) = (0.0, 0.0);
            for &(axis, f) in &s.stages {
                match axis {
                    Axis::X => tx += f,
                    Axis::Y => ty += f,
                }
            }
            assert_abs_diff_eq!(tx, 1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(ty, 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn violations_are_reported() {
        let bad = SplittingScheme {
            name: "xy".into(),
            stages: vec![(Axis::X, 1.0), (Axis::Y, 1.0)],
        };
        assert_eq!(validate(&bad), Err(SplittingViolation::DoesNotEndWithX));

        let bad = SplittingScheme {
            name: "short-y".into(),
            stages: vec![(Axis::X, 0.5), (Axis::Y, 0.9), (Axis::X, 0.5)],
        };
        match validate(&bad) {
            Err(SplittingViolation::YFractionsSum { sum }) => {
                assert_abs_diff_eq!(sum, 0.9, epsilon = 1e-15)
            }
            other => panic!("unexpected {other:?}"),
        }

        let bad = SplittingScheme {
            name: "xxy".into(),
            stages: vec![(Axis::X, 0.5), (Axis::X, 0.5), (Axis::Y, 1.0), (Axis::X, 0.0)],
        };
        assert!(matches!(validate(&bad), Err(SplittingViolation::AxesDoNotAlternate { stage: 1 })));
    }

    #[test]
    fn resolve_builtins_and_reject_garbage() {
        assert!(resolve("strang2").is_ok());
        assert!(resolve("strang4").is_ok());
        assert!(resolve("no-such-file.json").is_err());
    }
}
