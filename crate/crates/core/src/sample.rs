use serde::{Deserialize, Serialize};

use crate::error::{AmiError, Result};

/// Paired bivariate observations `(X_j, Y_j)` with column labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    x_label: String,
    y_label: String,
    x: Vec<f64>,
    y: Vec<f64>,
}

impl Sample {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        Self::with_labels("X", "Y", x, y)
    }

    pub fn with_labels(
        x_label: impl Into<String>,
        y_label: impl Into<String>,
        x: Vec<f64>,
        y: Vec<f64>,
    ) -> Result<Self> {
        if x.len() != y.len() {
            return Err(AmiError::InvalidParameter(format!(
                "column lengths differ ({} vs {})",
                x.len(),
                y.len()
            )));
        }
        if x.is_empty() {
            return Err(AmiError::EmptyData);
        }
        if let Some(index) = x
            .iter()
            .zip(&y)
            .position(|(a, b)| !a.is_finite() || !b.is_finite())
        {
            return Err(AmiError::NonFinite { index });
        }
        Ok(Self {
            x_label: x_label.into(),
            y_label: y_label.into(),
            x,
            y,
        })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn x_label(&self) -> &str {
        &self.x_label
    }

    pub fn y_label(&self) -> &str {
        &self.y_label
    }

    /// The same observations with the roles of X and Y exchanged.
    pub fn swapped(&self) -> Sample {
        Sample {
            x_label: self.y_label.clone(),
            y_label: self.x_label.clone(),
            x: self.y.clone(),
            y: self.x.clone(),
        }
    }

    /// Rows selected by `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Sample {
        Sample {
            x_label: self.x_label.clone(),
            y_label: self.y_label.clone(),
            x: indices.iter().map(|&i| self.x[i]).collect(),
            y: indices.iter().map(|&i| self.y[i]).collect(),
        }
    }

    /// Applies `f` to the X column and `g` to the Y column.
    pub fn map(&self, f: impl Fn(f64) -> f64, g: impl Fn(f64) -> f64) -> Result<Sample> {
        Sample::with_labels(
            self.x_label.clone(),
            self.y_label.clone(),
            self.x.iter().map(|&v| f(v)).collect(),
            self.y.iter().map(|&v| g(v)).collect(),
        )
    }
}
