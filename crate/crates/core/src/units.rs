use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Unit convention. Reduced Lennard-Jones units (k_B = 1) unless stated otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Units {
    pub k_b: f64,
}

impl Default for Units {
    fn default() -> Self {
        Units { k_b: 1.0 }
    }
}

impl Units {
    pub fn new(k_b: f64) -> Result<Self> {
        if !(k_b > 0.0 && k_b.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "k_b",
                reason: format!("must be positive, got {k_b}"),
            });
        }
        Ok(Units { k_b })
    }
}
