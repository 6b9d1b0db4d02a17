//! Spectral Galerkin generator `A_N` of the linear coupled system.
//!
//! On the flat state `[a | adot | b | bdot]`:
//!
//! ```text
//! a'    = adot
//! adot' = -beta0 M^2 a - k (a - b) - (2 gamma / ell) phi (phi^T adot)
//! b'    = bdot
//! bdot' = -(alpha M^4 + alpha0 M^2) b - k (b - a) - (2 gamma0 / ell) phi (phi^T bdot)
//! ```
//!
//! with `M = diag(mu_j)` and `phi = (phi_j(xi))_j`. The point damper enters
//! through its weak form, so each damping block is rank one.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::{basis_at, modal_frequency, ModalState};
use crate::energy::EnergyMetric;
use crate::error::{Error, Result};
use crate::params::ModelParams;

/// Relative threshold on `sigma_min / ||A_N||` below which a shift is singular.
pub const SINGULAR_SHIFT_RTOL: f64 = 1e-13;
/// Accepted solves satisfy `||residual|| <= SOLVE_RTOL * ||rhs||`.
pub const SOLVE_RTOL: f64 = 1e-10;

const SVD_EPS: f64 = 1e-15;
const SVD_MAX_ITER: usize = 10_000;

#[derive(Debug)]
pub struct DiscreteGenerator {
    n: usize,
    params: ModelParams,
    phi_xi: Vec<f64>,
    matrix: DMatrix<f64>,
    metric: EnergyMetric,
    /// `C A C^{-1}`: the generator in energy-orthonormal coordinates.
    scaled: DMatrix<f64>,
    scaled_norm: OnceLock<f64>,
}

impl Clone for DiscreteGenerator {
    fn clone(&self) -> Self {
        DiscreteGenerator {
            n: self.n,
            params: self.params,
            phi_xi: self.phi_xi.clone(),
            matrix: self.matrix.clone(),
            metric: self.metric.clone(),
            scaled: self.scaled.clone(),
            scaled_norm: self.scaled_norm.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ShiftedSolveReport {
    pub shift: Complex64,
    pub solution: DVector<Complex64>,
    /// Smallest singular value of `shift - A_N` in the energy norm.
    pub sigma_min: f64,
    /// Energy norm of `(shift - A_N) x - rhs`.
    pub residual: f64,
}

/// Builds the generator for `n` modes.
pub fn assemble(params: &ModelParams, n: usize) -> Result<DiscreteGenerator> {
    let params = params.validate()?;
    if n == 0 {
        return Err(Error::NoModes);
    }
    let ell = params.ell;
    let phi = basis_at(n, ell, params.xi_position());
    let dim = 4 * n;
    let mut m = DMatrix::zeros(dim, dim);
    let cable_damp = 2.0 * params.gamma / ell;
    let deck_damp = 2.0 * params.gamma0 / ell;
    for i in 0..n {
        let mu2 = modal_frequency(i, ell).powi(2);
        let (a, ad, b, bd) = (i, n + i, 2 * n + i, 3 * n + i);
        m[(a, ad)] = 1.0;
        m[(ad, a)] = -params.beta0 * mu2 - params.k;
        m[(ad, b)] = params.k;
        m[(b, bd)] = 1.0;
        m[(bd, b)] = -(params.alpha * mu2 * mu2 + params.alpha0 * mu2) - params.k;
        m[(bd, a)] = params.k;
        for j in 0..n {
            let pp = phi[i] * phi[j];
            m[(ad, n + j)] -= cable_damp * pp;
            m[(bd, 3 * n + j)] -= deck_damp * pp;
        }
    }
    let metric = EnergyMetric::new(&params, n);
    let scaled = similarity(&m, &metric);
    Ok(DiscreteGenerator {
        n,
        params,
        phi_xi: phi,
        matrix: m,
        metric,
        scaled,
        scaled_norm: OnceLock::new(),
    })
}

// C A C^{-1}, exploiting that C and C^{-1} have at most two entries per column.
fn similarity(a: &DMatrix<f64>, metric: &EnergyMetric) -> DMatrix<f64> {
    let dim = a.nrows();
    let mut a_cinv = DMatrix::zeros(dim, dim);
    let mut e = DVector::zeros(dim);
    for j in 0..dim {
        e[j] = 1.0;
        let col = metric.from_scaled(&e);
        e[j] = 0.0;
        for (k, &w) in col.iter().enumerate() {
            if w != 0.0 {
                a_cinv.column_mut(j).axpy(w, &a.column(k), 1.0);
            }
        }
    }
    let mut out = DMatrix::zeros(dim, dim);
    for j in 0..dim {
        let col = metric.to_scaled(&a_cinv.column(j).into_owned());
        out.set_column(j, &col);
    }
    out
}

fn complexify(v: &DVector<f64>) -> DVector<Complex64> {
    v.map(|x| Complex64::new(x, 0.0))
}

pub(crate) fn singular_values(m: DMatrix<Complex64>) -> Result<DVector<f64>> {
    let dim = m.nrows();
    m.try_svd(false, false, SVD_EPS, SVD_MAX_ITER)
        .map(|s| s.singular_values)
        .ok_or(Error::EigenNonConvergence { dim })
}

impl DiscreteGenerator {
    pub fn n_modes(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        4 * self.n
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// `phi_j(xi)` for every mode.
    pub fn phi_xi(&self) -> &[f64] {
        &self.phi_xi
    }

    /// The generator in physical modal coordinates.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn metric(&self) -> &EnergyMetric {
        &self.metric
    }

    /// The generator in coordinates where the Euclidean norm is the energy norm.
    pub fn scaled_matrix(&self) -> &DMatrix<f64> {
        &self.scaled
    }

    /// Operator 2-norm of `A_N` in the energy norm.
    pub fn norm(&self) -> f64 {
        *self.scaled_norm.get_or_init(|| {
            let dim = self.scaled.nrows();
            self.scaled
                .clone()
                .try_svd(false, false, SVD_EPS, SVD_MAX_ITER)
                .map(|s| s.singular_values.max())
                // Frobenius bound if the SVD stalls
                .unwrap_or_else(|| self.scaled.norm() / (dim as f64).sqrt().max(1.0))
        })
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: len,
            });
        }
        Ok(())
    }

    /// `A_N U`.
    pub fn apply(&self, state: &ModalState) -> Result<ModalState> {
        let u = state.to_vector();
        self.check_dim(u.len())?;
        ModalState::from_vector(&(&self.matrix * u))
    }

    /// Energy inner product `Q(A_N U, U)`; equals minus the damping power.
    pub fn energy_rate(&self, u: &DVector<f64>) -> f64 {
        let y = self.metric.to_scaled(u);
        (&self.scaled * &y).dot(&y)
    }

    /// Solves `(shift - A_N) x = rhs` and reports the conditioning of the shift.
    pub fn solve_shifted(
        &self,
        shift: Complex64,
        rhs: &DVector<Complex64>,
    ) -> Result<ShiftedSolveReport> {
        self.check_dim(rhs.len())?;
        let dim = self.dim();
        let shifted = DMatrix::from_diagonal_element(dim, dim, shift) - self.scaled.map(Complex64::from);
        let sv = singular_values(shifted.clone())?;
        let sigma_min = sv.min();
        let norm = self.norm();
        if sigma_min < SINGULAR_SHIFT_RTOL * norm {
            return Err(Error::SingularShift {
                re: shift.re,
                im: shift.im,
                sigma_min,
                norm,
            });
        }
        let scaled_rhs = self.scale_complex(rhs);
        let lu = shifted.clone().lu();
        let mut y = lu.solve(&scaled_rhs).ok_or(Error::SingularShift {
            re: shift.re,
            im: shift.im,
            sigma_min,
            norm,
        })?;
        let rhs_norm = scaled_rhs.norm();
        let tolerance = SOLVE_RTOL * rhs_norm;
        let mut r = &scaled_rhs - &shifted * &y;
        if r.norm() > tolerance {
            // one step of iterative refinement
            if let Some(dy) = lu.solve(&r) {
                y += dy;
                r = &scaled_rhs - &shifted * &y;
            }
        }
        let residual = r.norm();
        if residual > tolerance && rhs_norm > 0.0 {
            return Err(Error::InaccurateSolve {
                residual,
                tolerance,
            });
        }
        Ok(ShiftedSolveReport {
            shift,
            solution: self.unscale_complex(&y),
            sigma_min,
            residual,
        })
    }

    /// Real-shift convenience around [`Self::solve_shifted`].
    pub fn solve_real(&self, shift: f64, rhs: &DVector<f64>) -> Result<DVector<f64>> {
        let rep = self.solve_shifted(Complex64::new(shift, 0.0), &complexify(rhs))?;
        Ok(rep.solution.map(|z| z.re))
    }

    /// `||A_N^{-1} U||` in the energy norm.
    pub fn h_minus1_norm(&self, state: &ModalState) -> Result<f64> {
        let u = state.to_vector();
        self.check_dim(u.len())?;
        if u.iter().all(|&x| x == 0.0) {
            return Ok(0.0);
        }
        // (0 - A) x = U  =>  A^{-1} U = -x
        let x = self.solve_real(0.0, &u)?;
        Ok(self.metric.norm(&x))
    }

    /// Stationary state `-A_N^{-1} F` of `U_t = A_N U + F`.
    pub fn steady_state(&self, forcing: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dim(forcing.len())?;
        self.solve_real(0.0, forcing)
    }

    fn scale_complex(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        let re = self.metric.to_scaled(&v.map(|z| z.re));
        let im = self.metric.to_scaled(&v.map(|z| z.im));
        re.zip_map(&im, Complex64::new)
    }

    fn unscale_complex(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        let re = self.metric.from_scaled(&v.map(|z| z.re));
        let im = self.metric.from_scaled(&v.map(|z| z.im));
        re.zip_map(&im, Complex64::new)
    }

    /// Dense row-major export with `[re, im]` pairs.
    pub fn export(&self) -> GeneratorExport {
        let rows = (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| [self.matrix[(i, j)], 0.0]).collect())
            .collect();
        GeneratorExport {
            schema: "bridgelab.generator.v1".into(),
            n_modes: self.n,
            layout: "a,adot,b,bdot".into(),
            params: self.params,
            matrix: rows,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorExport {
    pub schema: String,
    pub n_modes: usize,
    pub layout: String,
    pub params: ModelParams,
    pub matrix: Vec<Vec<[f64; 2]>>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{damping_power, total_energy};
    use crate::params::DampingPoint;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn p13() -> ModelParams {
        ModelParams::unit(DampingPoint::ratio(1, 3))
    }

    fn random_vec(rng: &mut ChaCha8Rng, dim: usize) -> DVector<f64> {
        DVector::from_fn(dim, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn one_mode_matrix_by_hand() {
        let p = p13().with_damping(1.0, 1.0);
        let g = assemble(&p, 1).unwrap();
        let mu2 = (PI / 2.0).powi(2);
        let d = 2.0 * 0.5f64.powi(2); // (2 gamma / ell) sin(pi/6)^2
        #[rustfmt::skip]
        let expected = DMatrix::from_row_slice(4, 4, &[
            0.0, 1.0, 0.0, 0.0,
            -mu2 - 1.0, -d, 1.0, 0.0,
            0.0, 0.0, 0.0, 1.0,
            1.0, 0.0, -(mu2 * mu2 + mu2) - 1.0, -d,
        ]);
        assert!((g.matrix() - expected).abs().max() < 1e-14);
    }

    #[test]
    fn zero_coupling_and_damping_is_block_diagonal() {
        let p = p13().with_coupling(0.0).with_damping(0.0, 0.0);
        let g = assemble(&p, 6).unwrap();
        let m = g.matrix();
        let n = 6;
        for i in 0..4 * n {
            for j in 0..4 * n {
                let same_mode = i % n == j % n;
                if !same_mode {
                    assert_eq!(m[(i, j)], 0.0);
                }
            }
        }
    }

    #[test]
    fn invisible_mode_block_ignores_damping() {
        let base = ModelParams::unit(DampingPoint::ratio(2, 3));
        let g0 = assemble(&base.with_damping(0.0, 0.0), 5).unwrap();
        let g1 = assemble(&base.with_damping(100.0, 100.0), 5).unwrap();
        let n = 5;
        for slot in 0..4 {
            let idx = slot * n + 1;
            for k in 0..4 * n {
                assert!((g0.matrix()[(idx, k)] - g1.matrix()[(idx, k)]).abs() < 1e-10);
                assert!((g0.matrix()[(k, idx)] - g1.matrix()[(k, idx)]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn assemble_is_deterministic() {
        let a = assemble(&p13(), 8).unwrap();
        let b = assemble(&p13(), 8).unwrap();
        assert_eq!(a.matrix(), b.matrix());
    }

    #[test]
    fn assemble_rejects_bad_input() {
        let mut p = p13();
        p.ell = -1.0;
        assert!(matches!(assemble(&p, 4), Err(Error::Params(_))));
        assert!(matches!(assemble(&p13(), 0), Err(Error::NoModes)));
    }

    #[test]
    fn dissipation_identity_on_random_states() {
        let p = p13();
        let g = assemble(&p, 12).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            // uniform in energy-orthonormal coordinates
            let u = g.metric().from_scaled(&random_vec(&mut rng, g.dim()));
            let s = ModalState::from_vector(&u).unwrap();
            let rate = g.energy_rate(&u);
            let power = damping_power(&s, &p);
            let scale = power + 2.0 * total_energy(&s, &p).total;
            assert!((rate + power).abs() <= 1e-10 * scale, "{rate} vs {power}");
        }
    }

    #[test]
    fn damping_perturbation_has_rank_at_most_two() {
        let p = p13();
        let g = assemble(&p, 10).unwrap();
        let g0 = assemble(&p.with_damping(0.0, 0.0), 10).unwrap();
        let diff = g.matrix() - g0.matrix();
        let sv = diff.singular_values();
        let big = sv.iter().filter(|&&s| s > 1e-12 * sv.max()).count();
        assert!(big <= 2, "rank {big}");
    }

    #[test]
    fn apply_matches_matrix_and_is_linear() {
        let g = assemble(&p13(), 4).unwrap();
        assert_eq!(g.apply(&ModalState::zeros(4)).unwrap(), ModalState::zeros(4));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (x, y) = (random_vec(&mut rng, 16), random_vec(&mut rng, 16));
        let ax = g.apply(&ModalState::from_vector(&x).unwrap()).unwrap().to_vector();
        let ay = g.apply(&ModalState::from_vector(&y).unwrap()).unwrap().to_vector();
        let axy = g
            .apply(&ModalState::from_vector(&(&x * 2.0 + &y)).unwrap())
            .unwrap()
            .to_vector();
        assert!((axy - (ax * 2.0 + ay)).norm() < 1e-10);
        assert!(matches!(
            g.apply(&ModalState::zeros(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn single_mode_action_without_coupling() {
        let p = p13().with_coupling(0.0);
        let g = assemble(&p, 3).unwrap();
        let mut s = ModalState::zeros(3);
        s.a[2] = 1.0;
        let out = g.apply(&s).unwrap();
        let mu2 = modal_frequency(2, 1.0).powi(2);
        assert!((out.adot[2] + mu2).abs() < 1e-12);
        assert_eq!(out.a, vec![0.0; 3]);
        assert_eq!(out.b, vec![0.0; 3]);
        assert_eq!(out.bdot, vec![0.0; 3]);
    }

    #[test]
    fn zero_shift_inverts_forward_map() {
        let g = assemble(&p13(), 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = random_vec(&mut rng, g.dim());
        let ax = g.matrix() * &x;
        let rep = g.solve_shifted(Complex64::new(0.0, 0.0), &complexify(&ax)).unwrap();
        let rec = rep.solution.map(|z| -z.re);
        assert!((rec - &x).norm() <= 1e-10 * x.norm());
        assert!(rep.sigma_min > 0.0);
    }

    #[test]
    fn undamped_eigenvalue_makes_shift_singular() {
        let p = ModelParams::unit(DampingPoint::ratio(2, 3))
            .with_coupling(0.0)
            .with_damping(1.0, 1.0);
        let g = assemble(&p, 8).unwrap();
        let rhs = complexify(&DVector::from_element(g.dim(), 1.0));
        let shift = Complex64::new(0.0, 1.5 * PI);
        assert!(matches!(
            g.solve_shifted(shift, &rhs),
            Err(Error::SingularShift { .. })
        ));

        let p = p.clone();
        let p13 = ModelParams {
            xi: DampingPoint::ratio(1, 3),
            ..p
        };
        let g = assemble(&p13, 8).unwrap();
        let rep = g.solve_shifted(shift, &rhs).unwrap();
        assert!(rep.sigma_min.is_finite() && rep.sigma_min > 1e-6);
        assert!(rep.residual <= SOLVE_RTOL * g.metric().norm(&DVector::from_element(g.dim(), 1.0)));
    }

    #[test]
    fn h_minus1_norm_inverts_generator() {
        let g = assemble(&p13(), 6).unwrap();
        assert_eq!(g.h_minus1_norm(&ModalState::zeros(6)).unwrap(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u = random_vec(&mut rng, g.dim());
        let au = ModalState::from_vector(&(g.matrix() * &u)).unwrap();
        let lhs = g.h_minus1_norm(&au).unwrap();
        assert!((lhs - g.metric().norm(&u)).abs() <= 1e-10 * lhs);
    }

    #[test]
    fn h_minus1_norm_single_mode_hand_inverse() {
        let p = p13().with_damping(0.7, 0.3);
        let g = assemble(&p, 1).unwrap();
        let y = [0.3, -1.1, 0.8, 0.25];
        // A x = y by hand: rows 0 and 2 give the velocities, rows 1 and 3 a 2x2 system.
        let mu2 = (PI / 2.0).powi(2);
        let phi2 = (PI / 6.0).sin().powi(2);
        let (c, d) = (2.0 * 0.7 * phi2, 2.0 * 0.3 * phi2);
        let (x1, x3) = (y[0], y[2]);
        let (m11, m12, m21, m22) = (-mu2 - 1.0, 1.0, 1.0, -(mu2 * mu2 + mu2) - 1.0);
        let r1 = y[1] + c * x1;
        let r2 = y[3] + d * x3;
        let det = m11 * m22 - m12 * m21;
        let x0 = (r1 * m22 - m12 * r2) / det;
        let x2 = (m11 * r2 - m21 * r1) / det;
        let x = ModalState::new(vec![x0], vec![x1], vec![x2], vec![x3]).unwrap();
        let expected = (2.0 * total_energy(&x, &p).total).sqrt();
        let got = g
            .h_minus1_norm(&ModalState::new(vec![y[0]], vec![y[1]], vec![y[2]], vec![y[3]]).unwrap())
            .unwrap();
        assert!((got - expected).abs() <= 1e-12 * expected, "{got} vs {expected}");
    }

    #[test]
    fn export_is_row_major() {
        let g = assemble(&p13(), 2).unwrap();
        let e = g.export();
        assert_eq!(e.matrix.len(), 8);
        assert_eq!(e.matrix[0][2], [1.0, 0.0]);
        let json = serde_json::to_string(&e).unwrap();
        let back: GeneratorExport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, e);
    }
}
