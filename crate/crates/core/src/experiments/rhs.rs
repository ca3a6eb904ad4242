use crate::error::{BuraError, Result};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

/// Support of the two model right-hand sides.
pub const SUPPORT: (f64, f64) = (0.5, 0.75);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RhsKind {
    /// Indicator of the support.
    F1PiecewiseConstant,
    /// Cubic B-spline (Irwin-Hall density of order 4) stretched over the
    /// support, scaled to unit peak.
    F2IrwinHall,
    /// `e_index` (0-based).
    UnitVector { index: usize },
    /// One value per line (or comma/whitespace separated).
    File { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhsSpec {
    #[serde(flatten)]
    pub kind: RhsKind,
    #[serde(default = "one")]
    pub amplitude: f64,
}

fn one() -> f64 {
    1.0
}

impl RhsSpec {
    pub fn f1() -> Self {
        Self { kind: RhsKind::F1PiecewiseConstant, amplitude: 1.0 }
    }

    pub fn f2() -> Self {
        Self { kind: RhsKind::F2IrwinHall, amplitude: 1.0 }
    }

    /// Parses `f1`, `f2`, `unit:<i>` or `file:<path>` (a bare path also
    /// counts as a file).
    pub fn parse(s: &str) -> Result<Self> {
        let kind = match s {
            "f1" => RhsKind::F1PiecewiseConstant,
            "f2" => RhsKind::F2IrwinHall,
            _ => {
                if let Some(i) = s.strip_prefix("unit:") {
                    let index = i.parse().map_err(|_| BuraError::InvalidConfig(format!("bad unit index in {s:?}")))?;
                    RhsKind::UnitVector { index }
                } else {
                    let p = s.strip_prefix("file:").unwrap_or(s);
                    if p.is_empty() {
                        return Err(BuraError::InvalidConfig("empty rhs file path".into()));
                    }
                    RhsKind::File { path: PathBuf::from(p) }
                }
            }
        };
        Ok(Self { kind, amplitude: 1.0 })
    }

    pub fn label(&self) -> String {
        match &self.kind {
            RhsKind::F1PiecewiseConstant => "f1".into(),
            RhsKind::F2IrwinHall => "f2".into(),
            RhsKind::UnitVector { index } => format!("unit{index}"),
            RhsKind::File { path } => path.display().to_string(),
        }
    }

    /// Values at the interior nodes `x_i = i h`, `i = 1..n`, `h = 1/(n+1)`.
    pub fn sample(&self, n: usize) -> Result<Vec<f64>> {
        let h = 1.0 / (n + 1) as f64;
        let node = |i: usize| (i + 1) as f64 * h;
        let v: Vec<f64> = match &self.kind {
            RhsKind::F1PiecewiseConstant => (0..n).map(|i| f1(node(i))).collect(),
            RhsKind::F2IrwinHall => (0..n).map(|i| f2(node(i))).collect(),
            RhsKind::UnitVector { index } => {
                if *index >= n {
                    return Err(BuraError::InvalidDimension(format!("unit vector index {index} >= n = {n}")));
                }
                let mut e = vec![0.0; n];
                e[*index] = 1.0;
                e
            }
            RhsKind::File { path } => {
                let text = std::fs::read_to_string(path)?;
                let vals = text
                    .split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|t| !t.is_empty())
                    .map(|t| t.parse::<f64>())
                    .collect::<std::result::Result<Vec<f64>, _>>()
                    .map_err(|e| BuraError::InvalidConfig(format!("{}: {e}", path.display())))?;
                if vals.len() != n {
                    return Err(BuraError::DimensionMismatch { expected: n, got: vals.len() });
                }
                vals
            }
        };
        Ok(v.into_iter().map(|x| x * self.amplitude).collect())
    }
}

fn in_support(x: f64) -> bool {
    (SUPPORT.0..=SUPPORT.1).contains(&x)
}

pub fn f1(x: f64) -> f64 {
    if in_support(x) {
        1.0
    } else {
        0.0
    }
}

/// Irwin-Hall density of order 4 on `[0, 4]`.
pub fn irwin_hall4(y: f64) -> f64 {
    if !(0.0..=4.0).contains(&y) {
        0.0
    } else if y < 1.0 {
        y * y * y / 6.0
    } else if y < 2.0 {
        (-3.0 * y * y * y + 12.0 * y * y - 12.0 * y + 4.0) / 6.0
    } else if y < 3.0 {
        (3.0 * y * y * y - 24.0 * y * y + 60.0 * y - 44.0) / 6.0
    } else {
        let z = 4.0 - y;
        z * z * z / 6.0
    }
}

pub fn f2(x: f64) -> f64 {
    let y = 4.0 * (x - SUPPORT.0) / (SUPPORT.1 - SUPPORT.0);
    // the density peaks at 2/3
    1.5 * irwin_hall4(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f1_indicator() {
        let v = RhsSpec::f1().sample(7).unwrap();
        // nodes 1/8 .. 7/8: 4/8, 5/8, 6/8 are in the support
        assert_eq!(v, vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn f2_shape() {
        assert_eq!(f2(0.625), 1.0);
        assert_eq!(f2(0.5), 0.0);
        assert_eq!(f2(0.75), 0.0);
        // C^2 joins: value, slope and curvature agree at the knots
        for knot in [1.0, 2.0, 3.0] {
            let e = 1e-6;
            let l = irwin_hall4(knot - e);
            let r = irwin_hall4(knot + e);
            assert!((l - r).abs() < 1e-5);
        }
        // integrates to one
        let n = 400_000;
        let s: f64 = (0..n).map(|i| irwin_hall4(4.0 * (i as f64 + 0.5) / n as f64)).sum::<f64>() * 4.0 / n as f64;
        assert!((s - 1.0).abs() < 1e-9);
        assert!((0..1000).all(|i| f2(i as f64 / 1000.0) >= 0.0));
    }

    #[test]
    fn parse_forms() {
        assert_eq!(RhsSpec::parse("f2").unwrap(), RhsSpec::f2());
        assert_eq!(RhsSpec::parse("unit:3").unwrap().kind, RhsKind::UnitVector { index: 3 });
        assert!(matches!(RhsSpec::parse("file:/tmp/x").unwrap().kind, RhsKind::File { .. }));
        assert!(RhsSpec::parse("unit:x").is_err());
        assert!(RhsSpec::parse("unit:5").unwrap().sample(3).is_err());
    }

    #[test]
    fn file_rhs() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.txt");
        std::fs::write(&p, "1.0\n2.5, 3\n").unwrap();
        let spec = RhsSpec::parse(p.to_str().unwrap()).unwrap();
        assert_eq!(spec.sample(3).unwrap(), vec![1.0, 2.5, 3.0]);
        assert!(spec.sample(4).is_err());
    }

    #[test]
    fn json_form() {
        let s: RhsSpec = serde_json::from_str(r#"{"kind":"f2_irwin_hall"}"#).unwrap();
        assert_eq!(s, RhsSpec::f2());
        let u: RhsSpec = serde_json::from_str(r#"{"kind":"unit_vector","index":2,"amplitude":3}"#).unwrap();
        assert_eq!(u.amplitude, 3.0);
    }
}
