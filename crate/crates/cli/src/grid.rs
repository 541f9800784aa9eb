//! Grid specifications: `lin:a:b:n`, `log:a:b:n` or a comma list.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum GridSpec {
    Lin { lo: f64, hi: f64, n: usize },
    Log { lo: f64, hi: f64, n: usize },
    List(Vec<f64>),
}

impl GridSpec {
    pub fn points(&self) -> Vec<f64> {
        match *self {
            GridSpec::Lin { lo, hi, n } => {
                if n == 1 {
                    return vec![lo];
                }
                (0..n)
                    .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
                    .collect()
            }
            GridSpec::Log { lo, hi, n } => {
                if n == 1 {
                    return vec![lo];
                }
                let ratio = (hi / lo).ln();
                (0..n)
                    .map(|i| lo * (ratio * i as f64 / (n - 1) as f64).exp())
                    .collect()
            }
            GridSpec::List(ref v) => v.clone(),
        }
    }

    pub fn first(&self) -> f64 {
        self.points()[0]
    }

    pub fn last(&self) -> f64 {
        *self.points().last().expect("grids are non-empty")
    }
}

fn parse_num(s: &str, what: &str, spec: &str) -> Result<f64, String> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("grid '{spec}': {what} '{s}' is not a number"))?;
    if !v.is_finite() {
        return Err(format!("grid '{spec}': {what} must be finite"));
    }
    Ok(v)
}

impl FromStr for GridSpec {
    type Err = String;

    fn from_str(spec: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = spec.split(':').collect();
        let grid = match parts[0] {
            "lin" | "log" => {
                if parts.len() != 4 {
                    return Err(format!("grid '{spec}': expected {}:a:b:n", parts[0]));
                }
                let lo = parse_num(parts[1], "start", spec)?;
                let hi = parse_num(parts[2], "end", spec)?;
                let n: usize = parts[3].trim().parse().map_err(|_| {
                    format!("grid '{spec}': count '{}' is not a whole number", parts[3])
                })?;
                if n == 0 {
                    return Err(format!("grid '{spec}': need at least one point"));
                }
                if n > 1 && !(hi > lo) {
                    return Err(format!("grid '{spec}': end must exceed start"));
                }
                if parts[0] == "log" {
                    if !(lo > 0.0) {
                        return Err(format!("grid '{spec}': log grids need a positive start"));
                    }
                    GridSpec::Log { lo, hi, n }
                } else {
                    GridSpec::Lin { lo, hi, n }
                }
            }
            _ => {
                let v = spec
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| parse_num(s, "value", spec))
                    .collect::<Result<Vec<_>, _>>()?;
                if v.is_empty() {
                    return Err(format!("grid '{spec}' is empty"));
                }
                if v.windows(2).any(|p| !(p[1] > p[0])) {
                    return Err(format!("grid '{spec}' must be strictly increasing"));
                }
                GridSpec::List(v)
            }
        };
        Ok(grid)
    }
}

impl TryFrom<String> for GridSpec {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<GridSpec> for String {
    fn from(g: GridSpec) -> String {
        g.to_string()
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridSpec::Lin { lo, hi, n } => write!(f, "lin:{lo}:{hi}:{n}"),
            GridSpec::Log { lo, hi, n } => write!(f, "log:{lo}:{hi}:{n}"),
            GridSpec::List(v) => {
                let s: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                f.write_str(&s.join(","))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_grid_endpoints() {
        let g: GridSpec = "log:0.1:4000:64".parse().unwrap();
        let p = g.points();
        assert_eq!(p.len(), 64);
        assert!((p[0] - 0.1).abs() < 1e-15);
        assert!((p[63] - 4000.0).abs() < 1e-9);
        assert!(p.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn lin_and_list() {
        assert_eq!(
            "lin:1:3:3".parse::<GridSpec>().unwrap().points(),
            vec![1.0, 2.0, 3.0]
        );
        assert_eq!(
            "0.5,2,7".parse::<GridSpec>().unwrap().points(),
            vec![0.5, 2.0, 7.0]
        );
    }

    #[test]
    fn rejects_bad_specs() {
        for bad in [
            "log:0:1:5",
            "lin:3:1:4",
            "lin:1:2",
            "lin:1:2:0",
            "1,1,2",
            "",
            "lin:a:2:3",
            "log:1:2:x",
        ] {
            assert!(bad.parse::<GridSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn display_round_trips() {
        for s in ["lin:1:200:100", "log:0.1:4000:64", "1,2.5,9"] {
            assert_eq!(s.parse::<GridSpec>().unwrap().to_string(), s);
        }
    }
}
