//! Tabulated statistics with error bars, and their CSV form.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{to_f64, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    FormFactor,
    NumberVariance,
    SpacingPdf,
    Density,
    Rigidity,
    Cluster,
}

impl fmt::Display for CurveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CurveKind::FormFactor => "form_factor",
            CurveKind::NumberVariance => "number_variance",
            CurveKind::SpacingPdf => "spacing_pdf",
            CurveKind::Density => "density",
            CurveKind::Rigidity => "rigidity",
            CurveKind::Cluster => "cluster",
        })
    }
}

impl FromStr for CurveKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "form_factor" => CurveKind::FormFactor,
            "number_variance" => CurveKind::NumberVariance,
            "spacing_pdf" => CurveKind::SpacingPdf,
            "density" => CurveKind::Density,
            "rigidity" => CurveKind::Rigidity,
            "cluster" => CurveKind::Cluster,
            _ => return Err(format!("unknown curve kind '{s}'")),
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurveError {
    #[error("curve columns differ in length ({abscissa}, {values}, {stderr})")]
    LengthMismatch {
        abscissa: usize,
        values: usize,
        stderr: usize,
    },
    #[error("abscissae must be strictly increasing (violated at row {row})")]
    NotIncreasing { row: usize },
    #[error("negative standard error at row {row}")]
    NegativeStderr { row: usize },
    #[error("CSV line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Curve<T> {
    pub kind: CurveKind,
    pub abscissa: Vec<T>,
    pub values: Vec<T>,
    pub stderr: Vec<T>,
}

impl<T: Real> Curve<T> {
    pub fn new(
        kind: CurveKind,
        abscissa: Vec<T>,
        values: Vec<T>,
        stderr: Vec<T>,
    ) -> Result<Self, CurveError> {
        let c = Curve {
            kind,
            abscissa,
            values,
            stderr,
        };
        c.validate()?;
        Ok(c)
    }

    /// A curve without error bars.
    pub fn exact(kind: CurveKind, abscissa: Vec<T>, values: Vec<T>) -> Result<Self, CurveError> {
        let n = values.len();
        Self::new(kind, abscissa, values, vec![T::zero(); n])
    }

    pub fn validate(&self) -> Result<(), CurveError> {
        if self.abscissa.len() != self.values.len() || self.values.len() != self.stderr.len() {
            return Err(CurveError::LengthMismatch {
                abscissa: self.abscissa.len(),
                values: self.values.len(),
                stderr: self.stderr.len(),
            });
        }
        for (i, w) in self.abscissa.windows(2).enumerate() {
            if !(w[1] > w[0]) {
                return Err(CurveError::NotIncreasing { row: i + 1 });
            }
        }
        for (i, s) in self.stderr.iter().enumerate() {
            if *s < T::zero() {
                return Err(CurveError::NegativeStderr { row: i });
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.abscissa.len()
    }

    pub fn is_empty(&self) -> bool {
        self.abscissa.is_empty()
    }

    /// Writes `# key=value` header lines, then `abscissa,value,stderr` rows
    /// with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W, header: &[(String, String)]) -> io::Result<()> {
        writeln!(w, "# kind={}", self.kind)?;
        for (k, v) in header {
            writeln!(w, "# {k}={v}")?;
        }
        writeln!(w, "abscissa,value,stderr")?;
        for i in 0..self.len() {
            writeln!(
                w,
                "{},{},{}",
                fmt17(to_f64(self.abscissa[i])),
                fmt17(to_f64(self.values[i])),
                fmt17(to_f64(self.stderr[i]))
            )?;
        }
        Ok(())
    }
}

impl Curve<f64> {
    /// Parses the output of [`Curve::write_csv`]; returns the curve and the
    /// header fields other than `kind`.
    pub fn read_csv(text: &str) -> Result<(Self, Vec<(String, String)>), CurveError> {
        let mut kind = None;
        let mut header = Vec::new();
        let (mut a, mut v, mut s) = (Vec::new(), Vec::new(), Vec::new());
        let mut seen_columns = false;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((k, val)) = rest.trim().split_once('=') {
                    if k.trim() == "kind" {
                        kind = Some(val.trim().parse().map_err(|reason| CurveError::Parse {
                            line: i + 1,
                            reason,
                        })?);
                    } else {
                        header.push((k.trim().to_string(), val.trim().to_string()));
                    }
                }
                continue;
            }
            if !seen_columns {
                if line != "abscissa,value,stderr" {
                    return Err(CurveError::Parse {
                        line: i + 1,
                        reason: format!("expected column header, found '{line}'"),
                    });
                }
                seen_columns = true;
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 3 {
                return Err(CurveError::Parse {
                    line: i + 1,
                    reason: format!("expected 3 columns, found {}", cols.len()),
                });
            }
            let parse = |c: &str| {
                c.trim().parse::<f64>().map_err(|_| CurveError::Parse {
                    line: i + 1,
                    reason: format!("bad number '{c}'"),
                })
            };
            a.push(parse(cols[0])?);
            v.push(parse(cols[1])?);
            s.push(parse(cols[2])?);
        }
        let kind = kind.ok_or(CurveError::Parse {
            line: 0,
            reason: "missing '# kind=' header".into(),
        })?;
        Ok((Curve::new(kind, a, v, s)?, header))
    }
}

/// Scientific notation with 17 significant digits, which round-trips any `f64`.
pub fn fmt17(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(Curve::new(
            CurveKind::Density,
            vec![1.0f64, 1.0],
            vec![0.0, 0.0],
            vec![0.0, 0.0]
        )
        .is_err());
        assert!(Curve::new(CurveKind::Density, vec![1.0f64], vec![0.0, 0.0], vec![0.0]).is_err());
        assert!(Curve::new(CurveKind::Density, vec![1.0f64], vec![0.0], vec![-1.0]).is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let c = Curve::new(
            CurveKind::NumberVariance,
            vec![0.1f64, 1.0 / 3.0, 2.0],
            vec![std::f64::consts::PI, -1e-300, 0.0],
            vec![1e-3, 0.0, 2.5],
        )
        .unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf, &[("zeta".into(), "4500".into())])
            .unwrap();
        let text = String::from_utf8(buf).unwrap();
        let (back, header) = Curve::read_csv(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(header, vec![("zeta".to_string(), "4500".to_string())]);
    }
}
