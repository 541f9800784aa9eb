use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Dyson symmetry class of a Gaussian ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Symmetry {
    /// GOE, beta = 1.
    Orthogonal,
    /// GUE, beta = 2.
    Unitary,
    /// GSE, beta = 4.
    Symplectic,
}

impl Symmetry {
    pub const ALL: [Symmetry; 3] = [
        Symmetry::Orthogonal,
        Symmetry::Unitary,
        Symmetry::Symplectic,
    ];

    pub fn beta(self) -> u32 {
        match self {
            Symmetry::Orthogonal => 1,
            Symmetry::Unitary => 2,
            Symmetry::Symplectic => 4,
        }
    }

    pub fn from_beta(beta: u32) -> Option<Self> {
        match beta {
            1 => Some(Symmetry::Orthogonal),
            2 => Some(Symmetry::Unitary),
            4 => Some(Symmetry::Symplectic),
            _ => None,
        }
    }

    /// Short name of the embedded ensemble built on this class.
    pub fn embedded_name(self) -> &'static str {
        match self {
            Symmetry::Orthogonal => "egoe",
            Symmetry::Unitary => "egue",
            Symmetry::Symplectic => "egse",
        }
    }
}

impl fmt::Display for Symmetry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Symmetry::Orthogonal => "goe",
            Symmetry::Unitary => "gue",
            Symmetry::Symplectic => "gse",
        };
        f.write_str(s)
    }
}

impl FromStr for Symmetry {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "1" | "goe" | "egoe" | "orthogonal" => Ok(Symmetry::Orthogonal),
            "2" | "gue" | "egue" | "unitary" => Ok(Symmetry::Unitary),
            "4" | "gse" | "egse" | "symplectic" => Ok(Symmetry::Symplectic),
            other => Err(format!(
                "unknown symmetry class '{other}' (expected 1, 2, 4, goe, gue or gse)"
            )),
        }
    }
}
