//! Serial first-order decay chains and the lower-triangular change of
//! variables that decouples them.
//!
//! Species `i` decays at rate `lambda_i` and is fed by species `i-1` with
//! branching ratio `y_i`, so `da_i/dt = -lambda_i a_i + y_i lambda_{i-1} a_{i-1}`.
//! With `c = T a` and
//! `T_ij = prod_{l=j}^{i-1} y_{l+1} lambda_l / (lambda_l - lambda_i)` (j < i),
//! each `c_i` satisfies `dc_i/dt = -lambda_i c_i`.

use super::PhysicsError;

/// Relative gap below which two decay rates count as equal.
const RATE_GAP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct DecayChain {
    lambdas: Vec<f64>,
    branching: Vec<f64>,
    /// Fixed to 1; kept for the record.
    retardation: Vec<f64>,
    transform: Vec<Vec<f64>>,
}

impl DecayChain {
    pub fn new(lambdas: Vec<f64>, branching: Vec<f64>) -> Result<Self, PhysicsError> {
        if lambdas.is_empty() {
            return Err(PhysicsError::EmptyChain);
        }
        if branching.len() != lambdas.len() {
            return Err(PhysicsError::ChainLengthMismatch {
                lambdas: lambdas.len(),
                branching: branching.len(),
            });
        }
        if let Some(i) = lambdas.iter().position(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(PhysicsError::InvalidDecayRate {
                species: i,
                value: lambdas[i],
            });
        }
        if let Some(i) = branching.iter().position(|&y| !(y.is_finite() && y >= 0.0)) {
            return Err(PhysicsError::InvalidBranching {
                species: i,
                value: branching[i],
            });
        }
        if branching[0] != 0.0 {
            return Err(PhysicsError::InvalidBranching {
                species: 0,
                value: branching[0],
            });
        }
        for i in 0..lambdas.len() {
            for j in 0..i {
                let scale = lambdas[i].abs().max(lambdas[j].abs());
                if (lambdas[i] - lambdas[j]).abs() <= RATE_GAP * scale {
                    return Err(PhysicsError::DuplicateDecayRates { first: j, second: i });
                }
            }
        }
        let n = lambdas.len();
        let mut transform = vec![vec![0.0; n]; n];
        for i in 0..n {
            transform[i][i] = 1.0;
            for j in 0..i {
                transform[i][j] = (j..i).map(|l| branching[l + 1] * lambdas[l] / (lambdas[l] - lambdas[i])).product();
            }
        }
        Ok(DecayChain {
            retardation: vec![1.0; n],
            lambdas,
            branching,
            transform,
        })
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn branching(&self) -> &[f64] {
        &self.branching
    }

    pub fn retardation(&self) -> &[f64] {
        &self.retardation
    }

    /// The unit lower-triangular matrix `T`.
    pub fn transform_matrix(&self) -> &[Vec<f64>] {
        &self.transform
    }

    /// `c = T a`. Also maps species sources to transformed sources.
    pub fn forward(&self, a: &[f64]) -> Vec<f64> {
        assert_eq!(a.len(), self.len(), "species count");
        self.transform
            .iter()
            .enumerate()
            .map(|(i, row)| (0..=i).map(|j| row[j] * a[j]).sum())
            .collect()
    }

    /// `a = T^{-1} c` by forward substitution.
    pub fn inverse(&self, c: &[f64]) -> Vec<f64> {
        assert_eq!(c.len(), self.len(), "species count");
        let mut a = Vec::with_capacity(c.len());
        for (i, row) in self.transform.iter().enumerate() {
            let tail: f64 = (0..i).map(|j| row[j] * a[j]).sum();
            a.push(c[i] - tail);
        }
        a
    }

    /// Reaction matrix `M` of the untransformed system, `da/dt = M a`.
    pub fn reaction_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            m[i][i] = -self.lambdas[i];
            if i > 0 {
                m[i][i - 1] = self.branching[i] * self.lambdas[i - 1];
            }
        }
        m
    }
}
