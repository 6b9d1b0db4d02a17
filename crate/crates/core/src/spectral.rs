//! Eigenvalues of the discrete generator, resolvent sweeps along the
//! imaginary axis, and the stability function of the decoupled wave.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::{assemble, singular_values, DiscreteGenerator, SINGULAR_SHIFT_RTOL};
use crate::params::ModelParams;

const SCHUR_EPS: f64 = 1e-15;
const SCHUR_MAX_ITER: usize = 0; // 0 = nalgebra default, unbounded

/// `|phi_j(xi)|` below this marks mode `j` as invisible to the damper.
pub const WITNESS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub schema: String,
    pub n_modes: usize,
    pub params: ModelParams,
    /// Sorted by imaginary part, then real part.
    pub eigenvalues: Vec<Complex64>,
    pub spectral_abscissa: f64,
    /// `min |Re lambda|` over the spectrum.
    pub axis_gap: f64,
    pub undamped_witnesses: Vec<usize>,
}

impl SpectrumReport {
    /// Largest distance from an eigenvalue to the nearest conjugate of another.
    pub fn conjugation_defect(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|z| {
                self.eigenvalues
                    .iter()
                    .map(|w| (w - z.conj()).norm())
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    }

    /// Eigenvalue closest to `target`.
    pub fn nearest(&self, target: Complex64) -> Option<Complex64> {
        self.eigenvalues
            .iter()
            .copied()
            .min_by(|a, b| (a - target).norm().total_cmp(&(b - target).norm()))
    }
}

/// All `4N` eigenvalues of `A_N`.
pub fn eigenvalues(gen: &DiscreteGenerator) -> Result<SpectrumReport> {
    let m = gen.scaled_matrix().clone();
    let dim = m.nrows();
    let schur = Schur::try_new(m, SCHUR_EPS, SCHUR_MAX_ITER)
        .ok_or(Error::EigenNonConvergence { dim })?;
    let mut eig: Vec<Complex64> = schur.complex_eigenvalues().iter().copied().collect();
    if eig.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::EigenNonConvergence { dim });
    }
    eig.sort_by(|a, b| a.im.total_cmp(&b.im).then(a.re.total_cmp(&b.re)));
    let spectral_abscissa = eig.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let axis_gap = eig.iter().map(|z| z.re.abs()).fold(f64::INFINITY, f64::min);
    let undamped_witnesses = gen
        .phi_xi()
        .iter()
        .enumerate()
        .filter(|(_, p)| p.abs() < WITNESS_TOL)
        .map(|(j, _)| j)
        .collect();
    Ok(SpectrumReport {
        schema: "bridgelab.spectrum.v1".into(),
        n_modes: gen.n_modes(),
        params: *gen.params(),
        eigenvalues: eig,
        spectral_abscissa,
        axis_gap,
        undamped_witnesses,
    })
}

pub fn spectral_abscissa(params: &ModelParams, n: usize) -> Result<f64> {
    Ok(eigenvalues(&assemble(params, n)?)?.spectral_abscissa)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResolventSweep {
    pub schema: String,
    pub lambdas: Vec<f64>,
    /// `||(i lambda - A_N)^{-1}||` in the energy norm; infinite at singular shifts.
    pub norms: Vec<f64>,
    pub sup: f64,
}

/// `1 / sigma_min(i lambda - A_N)`, or infinity below the singular-shift threshold.
pub fn resolvent_norm(gen: &DiscreteGenerator, lambda: f64) -> Result<f64> {
    let dim = gen.dim();
    let shifted = DMatrix::from_diagonal_element(dim, dim, Complex64::new(0.0, lambda))
        - gen.scaled_matrix().map(Complex64::from);
    let sigma_min = singular_values(shifted)?.min();
    if sigma_min < SINGULAR_SHIFT_RTOL * gen.norm() {
        Ok(f64::INFINITY)
    } else {
        Ok(1.0 / sigma_min)
    }
}

/// Resolvent norm on the uniform grid `lambda_k = k * lambda_max / (n_grid - 1)`.
pub fn pruss_sweep(gen: &DiscreteGenerator, lambda_max: f64, n_grid: usize) -> Result<ResolventSweep> {
    if n_grid < 2 {
        return Err(Error::InvalidArgument("n_grid must be at least 2".into()));
    }
    gen.norm();
    let lambdas: Vec<f64> = (0..n_grid)
        .map(|k| lambda_max * k as f64 / (n_grid - 1) as f64)
        .collect();
    let norms = lambdas
        .par_iter()
        .map(|&l| resolvent_norm(gen, l))
        .collect::<Result<Vec<f64>>>()?;
    let sup = norms.iter().copied().fold(0.0, f64::max);
    Ok(ResolventSweep {
        schema: "bridgelab.resolvent_sweep.v1".into(),
        lambdas,
        norms,
        sup,
    })
}

/// `cos^2(lambda ell / k1) + (gamma/k1)^2 sin^2(lambda xi / k1) cos^2(lambda (ell - xi) / k1)`.
#[allow(non_snake_case)]
pub fn F_xi(lambda: f64, params: &ModelParams) -> f64 {
    let k1 = params.k1();
    let xi = params.xi_position();
    let ell = params.ell;
    let g = params.gamma / k1;
    (lambda * ell / k1).cos().powi(2)
        + g * g * (lambda * xi / k1).sin().powi(2) * (lambda * (ell - xi) / k1).cos().powi(2)
}

/// Period `2 pi k1 q / ell` of [`F_xi`] for `xi/ell = p/q` in lowest terms.
pub fn f_xi_period(params: &ModelParams) -> Option<f64> {
    params
        .xi
        .lowest_terms()
        .map(|(_, q)| 2.0 * PI * params.k1() * q as f64 / params.ell)
}

pub const F_XI_SAMPLES_PER_PERIOD: usize = 100_000;
pub const GOLDEN_TOL: f64 = 1e-12;
/// Minima below this are reported as exactly zero.
pub const F_XI_ZERO: f64 = 1e-12;
const REFINED_CANDIDATES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalMinimum {
    pub lambda: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FxiInfimum {
    pub schema: String,
    pub min: f64,
    pub argmin: f64,
    pub window: (f64, f64),
    pub period: Option<f64>,
    /// False when the search covered a user window rather than a full period.
    pub exhaustive: bool,
    /// Refined minima, ascending by value then by `lambda`.
    pub minima: Vec<LocalMinimum>,
}

/// Infimum of [`F_xi`] over one period (rational `xi`) or over `fallback`
/// (float `xi`, flagged non-exhaustive).
#[allow(non_snake_case)]
pub fn F_xi_inf(params: &ModelParams, fallback: Option<(f64, f64)>) -> Result<FxiInfimum> {
    let (window, period, exhaustive) = match f_xi_period(params) {
        Some(t) => ((0.0, t), Some(t), true),
        None => match fallback {
            Some(w) if w.1 > w.0 => (w, None, false),
            _ => return Err(Error::IrrationalXi),
        },
    };
    let n = F_XI_SAMPLES_PER_PERIOD;
    let h = (window.1 - window.0) / n as f64;
    let samples: Vec<f64> = (0..=n).map(|i| F_xi(window.0 + i as f64 * h, params)).collect();

    // local minima of the samples, smallest first
    let mut cand: Vec<usize> = (0..=n)
        .filter(|&i| {
            let left = if i == 0 { f64::INFINITY } else { samples[i - 1] };
            let right = if i == n { f64::INFINITY } else { samples[i + 1] };
            samples[i] <= left && samples[i] <= right
        })
        .collect();
    cand.sort_by(|&a, &b| samples[a].total_cmp(&samples[b]).then(a.cmp(&b)));
    cand.truncate(REFINED_CANDIDATES);

    let mut minima: Vec<LocalMinimum> = cand
        .iter()
        .map(|&i| {
            let lo = window.0 + (i as f64 - 1.0).max(0.0) * h;
            let hi = window.0 + ((i + 1).min(n)) as f64 * h;
            let (lambda, value) = golden_section(|l| F_xi(l, params), lo, hi, GOLDEN_TOL);
            let value = if value < F_XI_ZERO { 0.0 } else { value };
            LocalMinimum { lambda, value }
        })
        .collect();
    minima.sort_by(|a, b| a.value.total_cmp(&b.value).then(a.lambda.total_cmp(&b.lambda)));
    let best = minima[0];
    Ok(FxiInfimum {
        schema: "bridgelab.f_xi_inf.v1".into(),
        min: best.value,
        argmin: best.lambda,
        window,
        period,
        exhaustive,
        minima,
    })
}

/// Golden-section minimization on `[a, b]`; returns `(argmin, min)`.
pub fn golden_section<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        if c >= d {
            break;
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    [(x, fx), (c, fc), (d, fd)]
        .into_iter()
        .min_by(|p, q| p.1.total_cmp(&q.1))
        .unwrap()
}
