//! Value functions: declarative predicates over a feature's values at two inputs.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{CoverageError, NeuronBounds};
use crate::features::Feature;
use crate::network::ActivationTrace;

/// Which input the ratio puts in the numerator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// `u[x2] / u[x1] >= sigma`.
    #[default]
    Forward,
    /// `u[x1] / u[x2] >= sigma`.
    Reverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Norm {
    L1,
    L2,
    #[serde(rename = "inf")]
    LInf,
}

impl Norm {
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        let diffs = a.iter().zip(b).map(|(x, y)| (x - y).abs());
        match self {
            Norm::L1 => diffs.sum(),
            Norm::L2 => diffs.map(|d| d * d).sum::<f64>().sqrt(),
            Norm::LInf => diffs.fold(0.0, f64::max),
        }
    }
}

impl FromStr for Norm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "1" | "l1" => Ok(Norm::L1),
            "2" | "l2" => Ok(Norm::L2),
            "inf" | "linf" => Ok(Norm::LInf),
            other => Err(format!("unknown norm '{other}' (use 1, 2 or inf)")),
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Norm::L1 => "1",
            Norm::L2 => "2",
            Norm::LInf => "inf",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparator {
    Le,
    Ge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValueFunction {
    /// `|u[x1] - u[x2]| >= d`.
    AbsChange {
        d: f64,
    },
    /// `u[x2]/u[x1] > d` or `< 1/d`.
    RelChange {
        d: f64,
    },
    RatioAtLeast {
        sigma: f64,
        #[serde(default)]
        orientation: Orientation,
    },
    /// `u[x2] > d`.
    UpperBound {
        d: f64,
    },
    /// `v[x2] > v_hi` for every node.
    ExceedsRecordedMax,
    /// `v[x2]` lies in section `j` of `m` equal parts of `[v_lo, v_hi]` for every node.
    InSubsection {
        j: usize,
        m: usize,
    },
    /// `||v_psi[x1] - v_psi[x2]||_p` compared with `d`.
    NormDistance {
        p: Norm,
        d: f64,
        cmp: Comparator,
    },
    /// Rank of `v[x2]` inside its layer is at most `m`.
    RankAtMost {
        m: usize,
    },
    Unconstrained,
}

impl ValueFunction {
    pub fn ratio(sigma: f64) -> Self {
        ValueFunction::RatioAtLeast {
            sigma,
            orientation: Orientation::Forward,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ValueFunction::AbsChange { .. } => "abs_change",
            ValueFunction::RelChange { .. } => "rel_change",
            ValueFunction::RatioAtLeast { .. } => "ratio_at_least",
            ValueFunction::UpperBound { .. } => "upper_bound",
            ValueFunction::ExceedsRecordedMax => "exceeds_recorded_max",
            ValueFunction::InSubsection { .. } => "in_subsection",
            ValueFunction::NormDistance { .. } => "norm_distance",
            ValueFunction::RankAtMost { .. } => "rank_at_most",
            ValueFunction::Unconstrained => "unconstrained",
        }
    }

    pub fn needs_singleton(&self) -> bool {
        matches!(
            self,
            ValueFunction::AbsChange { .. }
                | ValueFunction::RelChange { .. }
                | ValueFunction::RatioAtLeast { .. }
                | ValueFunction::UpperBound { .. }
                | ValueFunction::RankAtMost { .. }
        )
    }

    pub fn needs_bounds(&self) -> bool {
        matches!(
            self,
            ValueFunction::ExceedsRecordedMax | ValueFunction::InSubsection { .. }
        )
    }

    /// True when swapping the two inputs cannot change the outcome.
    pub fn is_symmetric(&self) -> bool {
        matches!(
            self,
            ValueFunction::AbsChange { .. }
                | ValueFunction::NormDistance { .. }
                | ValueFunction::Unconstrained
        )
    }

    /// Whether the LP engine can express this function as linear constraints.
    pub fn is_linearizable(&self) -> bool {
        !matches!(
            self,
            ValueFunction::RelChange { .. }
                | ValueFunction::NormDistance { .. }
                | ValueFunction::RankAtMost { .. }
        )
    }

    pub fn validate_params(&self) -> Result<(), CoverageError> {
        let bad = |msg: String| Err(CoverageError::BadValueFunction(msg));
        match *self {
            ValueFunction::AbsChange { d }
            | ValueFunction::RelChange { d }
            | ValueFunction::UpperBound { d }
                if !(d.is_finite() && d >= 0.0) =>
            {
                bad(format!(
                    "{}: d must be finite and non-negative, got {d}",
                    self.name()
                ))
            }
            ValueFunction::RatioAtLeast { sigma, .. } if !(sigma.is_finite() && sigma > 0.0) => {
                bad(format!(
                    "ratio_at_least: sigma must be positive, got {sigma}"
                ))
            }
            ValueFunction::InSubsection { j, m } if m == 0 || j == 0 || j > m => {
                bad(format!("in_subsection: need 1 <= j <= m, got j={j} m={m}"))
            }
            ValueFunction::NormDistance { d, .. } if !(d.is_finite() && d >= 0.0) => bad(format!(
                "norm_distance: d must be finite and non-negative, got {d}"
            )),
            ValueFunction::RankAtMost { m } if m == 0 => {
                bad("rank_at_most: m must be at least 1".into())
            }
            _ => Ok(()),
        }
    }

    /// Checks arity and context requirements for `feature`.
    pub fn check(
        &self,
        feature: &Feature,
        bounds: Option<&NeuronBounds>,
    ) -> Result<(), CoverageError> {
        self.validate_params()?;
        if self.needs_singleton() && !feature.is_singleton() {
            return Err(CoverageError::Arity {
                function: self.name(),
                size: feature.len(),
            });
        }
        if self.needs_bounds() {
            let b = bounds.ok_or(CoverageError::MissingBounds(self.name()))?;
            if let Some(n) = feature.nodes().find(|n| !b.covers(*n)) {
                return Err(CoverageError::NoBoundsFor(n));
            }
        }
        Ok(())
    }

    /// Evaluates the function without re-checking requirements.
    pub(crate) fn eval(
        &self,
        feature: &Feature,
        t1: &ActivationTrace,
        t2: &ActivationTrace,
        bounds: Option<&NeuronBounds>,
    ) -> bool {
        let first = || feature.nodes().next().expect("features are non-empty");
        match *self {
            ValueFunction::Unconstrained => true,
            ValueFunction::AbsChange { d } => {
                let n = first();
                (t1.u(n) - t2.u(n)).abs() >= d
            }
            ValueFunction::RelChange { d } => {
                let n = first();
                let (a, b) = (t1.u(n), t2.u(n));
                if a == 0.0 {
                    return false;
                }
                let r = b / a;
                r > d || r < 1.0 / d
            }
            ValueFunction::RatioAtLeast { sigma, orientation } => {
                let n = first();
                let (num, den) = match orientation {
                    Orientation::Forward => (t2.u(n), t1.u(n)),
                    Orientation::Reverse => (t1.u(n), t2.u(n)),
                };
                den != 0.0 && num / den >= sigma
            }
            ValueFunction::UpperBound { d } => t2.u(first()) > d,
            ValueFunction::ExceedsRecordedMax => {
                let b = bounds.expect("bounds checked");
                feature.nodes().all(|n| t2.v(n) > b.get(n).1)
            }
            ValueFunction::InSubsection { j, m } => {
                let b = bounds.expect("bounds checked");
                feature.nodes().all(|n| {
                    let (lo, hi) = b.get(n);
                    section_of(t2.v(n), lo, hi, m) == Some(j)
                })
            }
            ValueFunction::NormDistance { p, d, cmp } => {
                let a: Vec<f64> = feature.nodes().map(|n| t1.v(n)).collect();
                let b: Vec<f64> = feature.nodes().map(|n| t2.v(n)).collect();
                let dist = p.distance(&a, &b);
                match cmp {
                    Comparator::Le => dist <= d,
                    Comparator::Ge => dist >= d,
                }
            }
            ValueFunction::RankAtMost { m } => t2.rank(first()) <= m,
        }
    }
}

/// 1-based section of `v` among `m` equal subdivisions of `[lo, hi]`.
///
/// Sections are half-open except the last, which includes `hi`. Returns
/// `None` outside the interval or when the interval is degenerate.
pub fn section_of(v: f64, lo: f64, hi: f64, m: usize) -> Option<usize> {
    if !(hi > lo) || v < lo || v > hi || m == 0 {
        return None;
    }
    let width = (hi - lo) / m as f64;
    let idx = ((v - lo) / width).floor() as usize + 1;
    Some(idx.min(m))
}

/// Lower and upper end of section `j` of `m`.
pub fn section_bounds(lo: f64, hi: f64, j: usize, m: usize) -> (f64, f64) {
    let width = (hi - lo) / m as f64;
    let a = lo + (j - 1) as f64 * width;
    let b = if j == m { hi } else { lo + j as f64 * width };
    (a, b)
}

impl fmt::Display for ValueFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValueFunction::AbsChange { d } => write!(f, "abs:{d}"),
            ValueFunction::RelChange { d } => write!(f, "rel:{d}"),
            ValueFunction::RatioAtLeast {
                sigma,
                orientation: Orientation::Forward,
            } => write!(f, "ratio:{sigma}"),
            ValueFunction::RatioAtLeast {
                sigma,
                orientation: Orientation::Reverse,
            } => {
                write!(f, "ratio:{sigma}:rev")
            }
            ValueFunction::UpperBound { d } => write!(f, "upper:{d}"),
            ValueFunction::ExceedsRecordedMax => write!(f, "max"),
            ValueFunction::InSubsection { j, m } => write!(f, "section:{j}:{m}"),
            ValueFunction::NormDistance { p, d, cmp } => {
                let c = match cmp {
                    Comparator::Le => "le",
                    Comparator::Ge => "ge",
                };
                write!(f, "norm:{p}:{d}:{c}")
            }
            ValueFunction::RankAtMost { m } => write!(f, "rank:{m}"),
            ValueFunction::Unconstrained => write!(f, "unconstrained"),
        }
    }
}

/// Parses the compact form used on the command line, e.g. `ratio:2`,
/// `abs:0.5`, `section:1:4`, `norm:inf:0.5:ge`, `rank:2`, `max`.
impl FromStr for ValueFunction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |i: usize| -> Result<f64, String> {
            parts
                .get(i)
                .ok_or_else(|| format!("'{s}': missing parameter"))?
                .parse::<f64>()
                .map_err(|e| format!("'{s}': {e}"))
        };
        let int = |i: usize| -> Result<usize, String> {
            parts
                .get(i)
                .ok_or_else(|| format!("'{s}': missing parameter"))?
                .parse::<usize>()
                .map_err(|e| format!("'{s}': {e}"))
        };
        let arity = |n: usize| -> Result<(), String> {
            if parts.len() == n {
                Ok(())
            } else {
                Err(format!("'{s}': expected {} parameter(s)", n - 1))
            }
        };
        let g = match parts[0] {
            "unconstrained" | "any" => {
                arity(1)?;
                ValueFunction::Unconstrained
            }
            "abs" => {
                arity(2)?;
                ValueFunction::AbsChange { d: num(1)? }
            }
            "rel" => {
                arity(2)?;
                ValueFunction::RelChange { d: num(1)? }
            }
            "ratio" => match parts.len() {
                2 => ValueFunction::ratio(num(1)?),
                3 if parts[2] == "rev" => ValueFunction::RatioAtLeast {
                    sigma: num(1)?,
                    orientation: Orientation::Reverse,
                },
                _ => {
                    return Err(format!(
                        "'{s}': expected ratio:<sigma> or ratio:<sigma>:rev"
                    ))
                }
            },
            "upper" => {
                arity(2)?;
                ValueFunction::UpperBound { d: num(1)? }
            }
            "max" => {
                arity(1)?;
                ValueFunction::ExceedsRecordedMax
            }
            "section" => {
                arity(3)?;
                ValueFunction::InSubsection {
                    j: int(1)?,
                    m: int(2)?,
                }
            }
            "norm" => {
                arity(4)?;
                let cmp = match parts[3] {
                    "le" => Comparator::Le,
                    "ge" => Comparator::Ge,
                    other => {
                        return Err(format!("'{s}': comparator must be le or ge, got '{other}'"))
                    }
                };
                ValueFunction::NormDistance {
                    p: parts[1].parse()?,
                    d: num(2)?,
                    cmp,
                }
            }
            "rank" => {
                arity(2)?;
                ValueFunction::RankAtMost { m: int(1)? }
            }
            other => return Err(format!("unknown value function '{other}'")),
        };
        g.validate_params().map_err(|e| e.to_string())?;
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compact_syntax_round_trips() {
        for s in [
            "ratio:2",
            "ratio:5:rev",
            "abs:0.5",
            "upper:1",
            "max",
            "section:1:4",
            "norm:inf:0.5:ge",
            "rank:2",
            "rel:2",
            "unconstrained",
        ] {
            let g: ValueFunction = s.parse().unwrap();
            assert_eq!(g.to_string(), s);
        }
        assert!("ratio:-1".parse::<ValueFunction>().is_err());
        assert!("section:3:2".parse::<ValueFunction>().is_err());
        assert!("wobble".parse::<ValueFunction>().is_err());
        assert!("norm:3:1:ge".parse::<ValueFunction>().is_err());
    }

    #[test]
    fn sections() {
        assert_eq!(section_of(0.0, 0.0, 4.0, 4), Some(1));
        assert_eq!(section_of(1.0, 0.0, 4.0, 4), Some(2));
        assert_eq!(section_of(4.0, 0.0, 4.0, 4), Some(4));
        assert_eq!(section_of(4.1, 0.0, 4.0, 4), None);
        assert_eq!(section_of(1.0, 1.0, 1.0, 2), None);
        assert_eq!(section_bounds(0.0, 4.0, 2, 4), (1.0, 2.0));
    }

    #[test]
    fn norms() {
        let (a, b) = ([0.0, 3.0], [4.0, 0.0]);
        assert_eq!(Norm::L1.distance(&a, &b), 7.0);
        assert_eq!(Norm::L2.distance(&a, &b), 5.0);
        assert_eq!(Norm::LInf.distance(&a, &b), 4.0);
    }
}
