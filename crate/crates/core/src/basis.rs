//! The shared sine eigenbasis `phi_j(x) = sin(mu_j x)`, `mu_j = (2j+1) pi / (2 ell)`,
//! and the modal phase-space vector.
//!
//! Every basis function satisfies the cable conditions `v(0) = v_x(ell) = 0`
//! and the deck conditions `u(0) = u_xx(0) = u_x(ell) = u_xxx(ell) = 0`, so the
//! boundary conditions hold exactly for any coefficient vector.

use std::f64::consts::PI;

use gauss_quad::GaussLegendre;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `mu_j = (2j+1) pi / (2 ell)`.
pub fn modal_frequency(j: usize, ell: f64) -> f64 {
    (2 * j + 1) as f64 * PI / (2.0 * ell)
}

pub fn basis_value(j: usize, ell: f64, x: f64) -> f64 {
    (modal_frequency(j, ell) * x).sin()
}

/// `phi_j(xi)` for `j = 0..n`.
pub fn basis_at(n: usize, ell: f64, x: f64) -> Vec<f64> {
    (0..n).map(|j| basis_value(j, ell, x)).collect()
}

/// `sum_j c_j phi_j(x)`.
pub fn eval_series(coeffs: &[f64], ell: f64, x: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(j, c)| c * basis_value(j, ell, x))
        .sum()
}

/// `d/dx sum_j c_j phi_j(x)`.
pub fn eval_series_dx(coeffs: &[f64], ell: f64, x: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let mu = modal_frequency(j, ell);
            c * mu * (mu * x).cos()
        })
        .sum()
}

/// Spectral coefficients of `(v, v_t, u, u_t)`.
///
/// The flat layout used by the generator is `[a | adot | b | bdot]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalState {
    pub a: Vec<f64>,
    pub adot: Vec<f64>,
    pub b: Vec<f64>,
    pub bdot: Vec<f64>,
}

impl ModalState {
    pub fn zeros(n: usize) -> Self {
        ModalState {
            a: vec![0.0; n],
            adot: vec![0.0; n],
            b: vec![0.0; n],
            bdot: vec![0.0; n],
        }
    }

    /// Builds a state, checking shared length `>= 1` and finiteness.
    pub fn new(a: Vec<f64>, adot: Vec<f64>, b: Vec<f64>, bdot: Vec<f64>) -> Result<Self> {
        let s = ModalState { a, adot, b, bdot };
        s.check()?;
        Ok(s)
    }

    pub fn check(&self) -> Result<()> {
        let n = self.a.len();
        if n == 0 {
            return Err(Error::NoModes);
        }
        for len in [self.adot.len(), self.b.len(), self.bdot.len()] {
            if len != n {
                return Err(Error::DimensionMismatch { expected: n, got: len });
            }
        }
        if self.components().any(|c| c.iter().any(|x| !x.is_finite())) {
            return Err(Error::NonFiniteState);
        }
        Ok(())
    }

    pub fn n_modes(&self) -> usize {
        self.a.len()
    }

    fn components(&self) -> impl Iterator<Item = &Vec<f64>> {
        [&self.a, &self.adot, &self.b, &self.bdot].into_iter()
    }

    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_iterator(4 * self.n_modes(), self.components().flatten().copied())
    }

    pub fn from_vector(v: &DVector<f64>) -> Result<Self> {
        if v.len() % 4 != 0 || v.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: 4 * (v.len() / 4).max(1),
                got: v.len(),
            });
        }
        let n = v.len() / 4;
        let s = v.as_slice();
        Ok(ModalState {
            a: s[..n].to_vec(),
            adot: s[n..2 * n].to_vec(),
            b: s[2 * n..3 * n].to_vec(),
            bdot: s[3 * n..].to_vec(),
        })
    }

    /// Keeps displacements, zeroes velocities.
    pub fn displacements_only(&self) -> Self {
        let n = self.n_modes();
        ModalState {
            a: self.a.clone(),
            adot: vec![0.0; n],
            b: self.b.clone(),
            bdot: vec![0.0; n],
        }
    }

    /// Single cable-displacement mode `a = amplitude * e_j`.
    pub fn cable_mode(n: usize, j: usize, amplitude: f64) -> Self {
        let mut s = ModalState::zeros(n);
        s.a[j] = amplitude;
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    pub x: f64,
    pub v: f64,
    pub v_t: f64,
    pub u: f64,
    pub u_t: f64,
}

/// Pointwise values of `(v, v_t, u, u_t)` at the requested positions.
pub fn synthesize(state: &ModalState, ell: f64, xs: &[f64]) -> Vec<FieldSample> {
    xs.iter()
        .map(|&x| {
            let phi = basis_at(state.n_modes(), ell, x);
            let dot = |c: &[f64]| c.iter().zip(&phi).map(|(c, p)| c * p).sum::<f64>();
            FieldSample {
                x,
                v: dot(&state.a),
                v_t: dot(&state.adot),
                u: dot(&state.b),
                u_t: dot(&state.bdot),
            }
        })
        .collect()
}

/// Gauss–Legendre rule on `[0, ell]` with the basis tabulated at its nodes.
///
/// Projection uses the Galerkin normalization `c_j = (2/ell) int f phi_j`.
#[derive(Debug, Clone)]
pub struct Projector {
    pub ell: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// `basis[(q, j)] = phi_j(nodes[q])`.
    pub basis: DMatrix<f64>,
}

impl Projector {
    pub fn new(n_modes: usize, ell: f64, n_points: usize) -> Self {
        let rule = GaussLegendre::new(n_points.max(2)).expect("degree >= 2");
        let (nodes, weights): (Vec<f64>, Vec<f64>) = rule
            .into_node_weight_pairs()
            .into_iter()
            .map(|(x, w)| (0.5 * ell * (x + 1.0), 0.5 * ell * w))
            .unzip();
        let basis =
            DMatrix::from_fn(nodes.len(), n_modes, |q, j| basis_value(j, ell, nodes[q]));
        Projector {
            ell,
            nodes,
            weights,
            basis,
        }
    }

    /// Default order `4N + 8`.
    pub fn for_modes(n_modes: usize, ell: f64) -> Self {
        Projector::new(n_modes, ell, 4 * n_modes + 8)
    }

    pub fn n_modes(&self) -> usize {
        self.basis.ncols()
    }

    /// Values of the series at the quadrature nodes.
    pub fn evaluate(&self, coeffs: &[f64]) -> DVector<f64> {
        &self.basis * DVector::from_column_slice(coeffs)
    }

    /// Galerkin coefficients of samples given at the quadrature nodes.
    pub fn project_samples(&self, samples: &DVector<f64>) -> Vec<f64> {
        let weighted = samples.component_mul(&DVector::from_column_slice(&self.weights));
        let c = self.basis.tr_mul(&weighted) * (2.0 / self.ell);
        c.as_slice().to_vec()
    }

    pub fn project<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        let samples = DVector::from_iterator(self.nodes.len(), self.nodes.iter().map(|&x| f(x)));
        self.project_samples(&samples)
    }
}
