//! Dyson index of the three classical Gaussian ensembles.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub enum Beta {
    /// GOE
    One,
    /// GUE
    Two,
    /// GSE
    Four,
}

impl Beta {
    pub fn value(self) -> f64 {
        f64::from(u32::from(self))
    }

    /// Exponent `(β+2)/(β+1)` that puts the smallest gaps on unit scale.
    pub fn gap_exponent(self) -> f64 {
        let b = self.value();
        (b + 2.0) / (b + 1.0)
    }

    /// Constant `c_β` in the limiting intensity `(1/c_β) ∫_A u^β du`.
    pub fn gap_constant(self) -> f64 {
        match self {
            Beta::One => 48.0 * PI,
            Beta::Two => 48.0 * PI * PI,
            Beta::Four => 540.0 * PI * PI,
        }
    }
}

impl TryFrom<u32> for Beta {
    type Error = Error;

    fn try_from(v: u32) -> Result<Self> {
        match v {
            1 => Ok(Beta::One),
            2 => Ok(Beta::Two),
            4 => Ok(Beta::Four),
            _ => Err(Error::InvalidArgument(format!("beta must be 1, 2 or 4, got {v}"))),
        }
    }
}

impl From<Beta> for u32 {
    fn from(b: Beta) -> u32 {
        match b {
            Beta::One => 1,
            Beta::Two => 2,
            Beta::Four => 4,
        }
    }
}

impl fmt::Display for Beta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", u32::from(*self))
    }
}
