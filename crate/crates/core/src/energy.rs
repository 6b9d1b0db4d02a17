//! Energy functional, damping power, and the energy inner product on modal
//! coordinates.
//!
//! With `int phi_j^2 = ell/2` the energy is
//!
//! ```text
//! E = (ell/4) sum_j [ adot_j^2 + beta0 mu_j^2 a_j^2
//!                   + bdot_j^2 + (alpha mu_j^4 + alpha0 mu_j^2) b_j^2
//!                   + k (a_j - b_j)^2 ]
//! ```
//!
//! The cable potential carries `beta0` and the suspender coupling
//! `(k/2)||v - u||^2` is included; with both, `dE/dt` equals minus the damping
//! power exactly.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::basis::{basis_at, modal_frequency, ModalState};
use crate::params::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub kinetic_cable: f64,
    pub potential_cable: f64,
    pub kinetic_deck: f64,
    pub bending_deck: f64,
    pub stretching_deck: f64,
    pub coupling: f64,
    pub total: f64,
}

pub fn total_energy(state: &ModalState, params: &ModelParams) -> EnergyBreakdown {
    let q = params.ell / 4.0;
    let mut e = EnergyBreakdown::default();
    for j in 0..state.n_modes() {
        let mu2 = modal_frequency(j, params.ell).powi(2);
        let (a, b) = (state.a[j], state.b[j]);
        e.kinetic_cable += q * state.adot[j].powi(2);
        e.potential_cable += q * params.beta0 * mu2 * a * a;
        e.kinetic_deck += q * state.bdot[j].powi(2);
        e.bending_deck += q * params.alpha * mu2 * mu2 * b * b;
        e.stretching_deck += q * params.alpha0 * mu2 * b * b;
        e.coupling += q * params.k * (a - b).powi(2);
    }
    e.total = e.kinetic_cable
        + e.potential_cable
        + e.kinetic_deck
        + e.bending_deck
        + e.stretching_deck
        + e.coupling;
    e
}

/// `gamma v_t(xi)^2 + gamma0 u_t(xi)^2`.
pub fn damping_power(state: &ModalState, params: &ModelParams) -> f64 {
    let phi = basis_at(state.n_modes(), params.ell, params.xi_position());
    let dot = |c: &[f64]| c.iter().zip(&phi).map(|(c, p)| c * p).sum::<f64>();
    params.gamma * dot(&state.adot).powi(2) + params.gamma0 * dot(&state.bdot).powi(2)
}

/// Factorization `Q = C^T C` of the energy form `Q(U, U) = 2E(U)` on flat
/// `[a | adot | b | bdot]` vectors.
///
/// Per mode the displacement block `(ell/2) [[beta0 mu^2 + k, -k], [-k, s + k]]`
/// (with `s = alpha mu^4 + alpha0 mu^2`) is Cholesky-factored; velocities are
/// scaled by `sqrt(ell/2)`. In scaled coordinates `y = C U` the Euclidean norm
/// is the energy norm.
#[derive(Debug, Clone)]
pub struct EnergyMetric {
    n: usize,
    vel: f64,
    // upper factor rows: y_a = l11 a + l21 b, y_b = l22 b
    l11: Vec<f64>,
    l21: Vec<f64>,
    l22: Vec<f64>,
}

impl EnergyMetric {
    pub fn new(params: &ModelParams, n: usize) -> Self {
        let half = params.ell / 2.0;
        let mut l11 = Vec::with_capacity(n);
        let mut l21 = Vec::with_capacity(n);
        let mut l22 = Vec::with_capacity(n);
        for j in 0..n {
            let mu2 = modal_frequency(j, params.ell).powi(2);
            let m11 = half * (params.beta0 * mu2 + params.k);
            let m21 = -half * params.k;
            let m22 = half * (params.alpha * mu2 * mu2 + params.alpha0 * mu2 + params.k);
            let c11 = m11.sqrt();
            let c21 = m21 / c11;
            l11.push(c11);
            l21.push(c21);
            l22.push((m22 - c21 * c21).sqrt());
        }
        EnergyMetric {
            n,
            vel: half.sqrt(),
            l11,
            l21,
            l22,
        }
    }

    pub fn n_modes(&self) -> usize {
        self.n
    }

    /// `y = C U`.
    pub fn to_scaled(&self, u: &DVector<f64>) -> DVector<f64> {
        let n = self.n;
        let mut y = DVector::zeros(4 * n);
        for j in 0..n {
            let (a, b) = (u[j], u[2 * n + j]);
            y[j] = self.l11[j] * a + self.l21[j] * b;
            y[n + j] = self.vel * u[n + j];
            y[2 * n + j] = self.l22[j] * b;
            y[3 * n + j] = self.vel * u[3 * n + j];
        }
        y
    }

    /// `U = C^{-1} y`.
    pub fn from_scaled(&self, y: &DVector<f64>) -> DVector<f64> {
        let n = self.n;
        let mut u = DVector::zeros(4 * n);
        for j in 0..n {
            let b = y[2 * n + j] / self.l22[j];
            u[2 * n + j] = b;
            u[j] = (y[j] - self.l21[j] * b) / self.l11[j];
            u[n + j] = y[n + j] / self.vel;
            u[3 * n + j] = y[3 * n + j] / self.vel;
        }
        u
    }

    /// Sparse rows of `C` as `(row, col, value)` triplets.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let n = self.n;
        let mut t = Vec::with_capacity(5 * n);
        for j in 0..n {
            t.push((j, j, self.l11[j]));
            t.push((j, 2 * n + j, self.l21[j]));
            t.push((n + j, n + j, self.vel));
            t.push((2 * n + j, 2 * n + j, self.l22[j]));
            t.push((3 * n + j, 3 * n + j, self.vel));
        }
        t
    }

    /// Energy inner product `Q(U, V)`.
    pub fn inner(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        self.to_scaled(u).dot(&self.to_scaled(v))
    }

    /// `sqrt(Q(U, U)) = sqrt(2E)`.
    pub fn norm(&self, u: &DVector<f64>) -> f64 {
        self.to_scaled(u).norm()
    }
}
