use std::fmt;

use serde::{Deserialize, Serialize};

use super::ClassifierError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Linear,
    Rbf,
    Sigmoid,
    Polynomial,
}

impl KernelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            KernelKind::Linear => "linear",
            KernelKind::Rbf => "rbf",
            KernelKind::Sigmoid => "sigmoid",
            KernelKind::Polynomial => "polynomial",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub c: f64,
    pub gamma: f64,
    pub coef0: f64,
    pub degree: u32,
}

impl KernelSpec {
    pub fn linear(c: f64) -> Self {
        Self {
            kind: KernelKind::Linear,
            c,
            gamma: 0.0,
            coef0: 0.0,
            degree: 0,
        }
    }

    pub fn rbf(c: f64, gamma: f64) -> Self {
        Self {
            kind: KernelKind::Rbf,
            c,
            gamma,
            coef0: 0.0,
            degree: 0,
        }
    }

    pub fn sigmoid(c: f64, gamma: f64, coef0: f64) -> Self {
        Self {
            kind: KernelKind::Sigmoid,
            c,
            gamma,
            coef0,
            degree: 0,
        }
    }

    pub fn polynomial(c: f64, gamma: f64, coef0: f64, degree: u32) -> Self {
        Self {
            kind: KernelKind::Polynomial,
            c,
            gamma,
            coef0,
            degree,
        }
    }

    pub fn validate(&self) -> Result<(), ClassifierError> {
        let bad = |m: &str| Err(ClassifierError::InvalidKernel(format!("{self}: {m}")));
        if !(self.c.is_finite() && self.c > 0.0) {
            return bad("C must be positive");
        }
        if self.kind != KernelKind::Linear && !(self.gamma.is_finite() && self.gamma > 0.0) {
            return bad("gamma must be positive");
        }
        if !self.coef0.is_finite() {
            return bad("coef0 must be finite");
        }
        if self.kind == KernelKind::Polynomial && self.degree < 2 {
            return bad("degree must be at least 2");
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64], z: &[f64]) -> f64 {
        match self.kind {
            KernelKind::Linear => dot(x, z),
            KernelKind::Rbf => {
                let d2: f64 = x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
                (-self.gamma * d2).exp()
            }
            KernelKind::Sigmoid => (self.gamma * dot(x, z) + self.coef0).tanh(),
            KernelKind::Polynomial => (self.gamma * dot(x, z) + self.coef0).powi(self.degree as i32),
        }
    }

    /// Row-major Gram matrix of `rows`.
    pub fn gram(&self, rows: &[Vec<f64>]) -> Vec<f64> {
        let n = rows.len();
        let mut k = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = self.eval(&rows[i], &rows[j]);
                k[i * n + j] = v;
                k[j * n + i] = v;
            }
        }
        k
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            KernelKind::Linear => write!(f, "linear(C={})", self.c),
            KernelKind::Rbf => write!(f, "rbf(C={}, gamma={})", self.c, self.gamma),
            KernelKind::Sigmoid => write!(f, "sigmoid(C={}, gamma={}, coef0={})", self.c, self.gamma, self.coef0),
            KernelKind::Polynomial => write!(
                f,
                "polynomial(C={}, gamma={}, coef0={}, degree={})",
                self.c, self.gamma, self.coef0, self.degree
            ),
        }
    }
}

fn dot(x: &[f64], z: &[f64]) -> f64 {
    x.iter().zip(z).map(|(a, b)| a * b).sum()
}

pub const GRID_C: [f64; 4] = [0.1, 1.0, 10.0, 100.0];
pub const GRID_GAMMA: [f64; 3] = [0.01, 0.1, 1.0];
pub const GRID_DEGREE: [u32; 2] = [2, 3];
pub const GRID_COEF0: [f64; 2] = [0.0, 1.0];

/// All four kernels over the default parameter grid, in kernel order.
pub fn default_grid() -> Vec<KernelSpec> {
    let mut grid = Vec::new();
    for c in GRID_C {
        grid.push(KernelSpec::linear(c));
    }
    grid.extend(rbf_grid());
    for c in GRID_C {
        for g in GRID_GAMMA {
            for r in GRID_COEF0 {
                grid.push(KernelSpec::sigmoid(c, g, r));
            }
        }
    }
    for c in GRID_C {
        for g in GRID_GAMMA {
            for r in GRID_COEF0 {
                for d in GRID_DEGREE {
                    grid.push(KernelSpec::polynomial(c, g, r, d));
                }
            }
        }
    }
    grid
}

/// RBF kernels over the default C and gamma values.
pub fn rbf_grid() -> Vec<KernelSpec> {
    GRID_C
        .iter()
        .flat_map(|&c| GRID_GAMMA.iter().map(move |&g| KernelSpec::rbf(c, g)))
        .collect()
}
