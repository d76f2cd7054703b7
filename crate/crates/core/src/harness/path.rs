use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::plap::critical_exponent;
use crate::{Error, Result};

/// Rule `p -> q(p)` along which a sweep approaches `p = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QPath {
    ConstantOne,
    EqualP,
    /// `q = p^beta`.
    Power { beta: f64 },
    /// One `q` per entry of the sweep's `p` list.
    Explicit { values: Vec<f64> },
}

impl QPath {
    /// `q` for the `index`-th sweep point `p`.
    pub fn q_at(&self, p: f64, index: usize) -> Result<f64> {
        let q = match self {
            QPath::ConstantOne => 1.0,
            QPath::EqualP => p,
            QPath::Power { beta } => p.powf(*beta),
            QPath::Explicit { values } => *values.get(index).ok_or_else(|| {
                Error::InvalidArgument(format!("explicit q path has no entry {index}"))
            })?,
        };
        let crit = critical_exponent(p);
        if !(q > 0.0 && q < crit) {
            return Err(Error::SupercriticalExponent { q, critical: crit });
        }
        Ok(q)
    }

    /// Checks the path against a sweep's `p` list.
    pub fn validate(&self, p_list: &[f64]) -> Result<()> {
        if let QPath::Power { beta } = self {
            if !beta.is_finite() {
                return Err(Error::InvalidArgument(format!("exponent beta = {beta} must be finite")));
            }
        }
        if let QPath::Explicit { values } = self {
            if values.len() != p_list.len() {
                return Err(Error::InvalidArgument(format!(
                    "explicit q path has {} entries for {} values of p",
                    values.len(),
                    p_list.len()
                )));
            }
        }
        for (k, &p) in p_list.iter().enumerate() {
            self.q_at(p, k)?;
        }
        Ok(())
    }

    /// Short label used in file names and reports.
    pub fn label(&self) -> String {
        match self {
            QPath::ConstantOne => "one".into(),
            QPath::EqualP => "p".into(),
            QPath::Power { beta } => format!("pow{beta}"),
            QPath::Explicit { .. } => "list".into(),
        }
    }
}

impl fmt::Display for QPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QPath::ConstantOne => write!(f, "q = 1"),
            QPath::EqualP => write!(f, "q = p"),
            QPath::Power { beta } => write!(f, "q = p^{beta}"),
            QPath::Explicit { values } => write!(f, "q in {values:?}"),
        }
    }
}

/// Parses `one`, `p` and `pow:<beta>`. Explicit lists come from files and
/// are built by the caller.
impl FromStr for QPath {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one" => Ok(QPath::ConstantOne),
            "p" => Ok(QPath::EqualP),
            _ => {
                let beta = s
                    .strip_prefix("pow:")
                    .and_then(|b| b.parse::<f64>().ok())
                    .filter(|b| b.is_finite())
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown q path '{s}'")))?;
                Ok(QPath::Power { beta })
            }
        }
    }
}
