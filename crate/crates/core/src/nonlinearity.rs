//! Suspender nonlinearities, their truncations, and the Nemytskii lift onto
//! the modal phase space.
//!
//! A spec maps displacements `(v, u)` pointwise to forces `(F, G)`; `F` acts in
//! the cable equation and `G` in the deck equation. The lifted vector is
//! `(0, P F, 0, P G)` plus an optional constant modal forcing, where `P` is the
//! Galerkin projection.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::basis::{ModalState, Projector};
use crate::energy::EnergyMetric;
use crate::error::{Error, Result};
use crate::params::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Family {
    /// `F(v) = mu1 v |v|^alpha`, `G(u) = mu2 u |u|^beta`, linear beyond `|s| = R`.
    PowerSeparated {
        mu1: f64,
        alpha: f64,
        mu2: f64,
        beta: f64,
    },
    /// `(F, G) = grad p_R` with `p_R = phi_R(r) v^{2m} u^{2n}`.
    GradientPotential { m: u32, n: u32 },
    /// `F = -k min(v - u, 0)`, `G = -k min(u - v, 0)`.
    OneSidedSpring { k: f64 },
    Zero,
}

fn default_radius() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonlinearitySpec {
    pub family: Family,
    /// Ignored by `OneSidedSpring` and `Zero`.
    #[serde(default = "default_radius")]
    pub truncation_radius: f64,
    /// Constant modal vector in the flat `[a | adot | b | bdot]` layout.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forcing: Option<Vec<f64>>,
}

impl NonlinearitySpec {
    pub fn new(family: Family, truncation_radius: f64) -> Self {
        NonlinearitySpec {
            family,
            truncation_radius,
            forcing: None,
        }
    }

    pub fn zero() -> Self {
        NonlinearitySpec::new(Family::Zero, 1.0)
    }

    pub fn with_forcing(mut self, forcing: Vec<f64>) -> Self {
        self.forcing = Some(forcing);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidNonlinearity(m.to_string()));
        match self.family {
            Family::PowerSeparated { alpha, beta, mu1, mu2 } => {
                if !(alpha > 0.0 && beta > 0.0) {
                    return bad("alpha and beta must be positive");
                }
                if !(mu1.is_finite() && mu2.is_finite()) {
                    return bad("mu1 and mu2 must be finite");
                }
            }
            Family::GradientPotential { m, n } => {
                if m < 1 || n < 1 {
                    return bad("m and n must be at least 1");
                }
            }
            Family::OneSidedSpring { k } => {
                if !(k >= 0.0 && k.is_finite()) {
                    return bad("spring stiffness must be non-negative");
                }
            }
            Family::Zero => {}
        }
        if !(self.truncation_radius > 0.0 && self.truncation_radius.is_finite()) {
            return bad("truncation radius must be positive");
        }
        if let Some(f) = &self.forcing {
            if f.iter().any(|x| !x.is_finite()) {
                return bad("forcing must be finite");
            }
        }
        Ok(())
    }

    /// True when the pointwise map vanishes at the origin (forcing aside).
    pub fn is_differentiable(&self) -> bool {
        !matches!(self.family, Family::OneSidedSpring { .. })
    }
}

/// `h(s) = 1 - 10 s^3 + 15 s^4 - 6 s^5` on `[0, 1]`.
pub fn hermite_h(s: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::DomainError(s));
    }
    Ok(hermite_derivs(s).0)
}

fn hermite_derivs(s: f64) -> (f64, f64, f64) {
    let s2 = s * s;
    let h = 1.0 - 10.0 * s2 * s + 15.0 * s2 * s2 - 6.0 * s2 * s2 * s;
    let h1 = -30.0 * s2 + 60.0 * s2 * s - 30.0 * s2 * s2;
    let h2 = -60.0 * s + 180.0 * s2 - 120.0 * s2 * s;
    (h, h1, h2)
}

/// Radial weight: `1` on `[0, R]`, a quintic blend on `(R, 2R)`, `(R/r)^{N-1}` beyond.
pub fn phi_r(r: f64, radius: f64, n_deg: u32) -> f64 {
    phi_r_derivs(r, radius, n_deg).0
}

/// `(phi_R, phi_R', phi_R'')` at `r`.
pub fn phi_r_derivs(r: f64, radius: f64, n_deg: u32) -> (f64, f64, f64) {
    if r <= radius {
        return (1.0, 0.0, 0.0);
    }
    let e = n_deg as f64 - 1.0;
    let g = (radius / r).powf(e);
    let g1 = -e / r * g;
    let g2 = e * (e + 1.0) / (r * r) * g;
    if r >= 2.0 * radius {
        return (g, g1, g2);
    }
    let (h, hs, hss) = hermite_derivs((r - radius) / radius);
    let (h1, h2) = (hs / radius, hss / (radius * radius));
    (
        h + g - h * g,
        h1 * (1.0 - g) + g1 * (1.0 - h),
        h2 * (1.0 - g) - 2.0 * h1 * g1 + g2 * (1.0 - h),
    )
}

fn truncated_power(mu: f64, expo: f64, radius: f64, s: f64) -> f64 {
    if s.abs() <= radius {
        mu * s * s.abs().powf(expo)
    } else {
        mu * radius.powf(expo) * s
    }
}

fn truncated_power_potential(mu: f64, expo: f64, radius: f64, s: f64) -> f64 {
    let inner = |s: f64| mu * s.abs().powf(expo + 2.0) / (expo + 2.0);
    if s.abs() <= radius {
        inner(s)
    } else {
        let rp = radius.powf(expo);
        inner(radius) + 0.5 * mu * rp * (s * s - radius * radius)
    }
}

/// Pointwise `(F, G)` at displacements `(v, u)`.
#[allow(non_snake_case)]
pub fn eval_F(spec: &NonlinearitySpec, v: f64, u: f64) -> (f64, f64) {
    let radius = spec.truncation_radius;
    match spec.family {
        Family::PowerSeparated { mu1, alpha, mu2, beta } => (
            truncated_power(mu1, alpha, radius, v),
            truncated_power(mu2, beta, radius, u),
        ),
        Family::GradientPotential { m, n } => {
            let (m, n) = (m as i32, n as i32);
            let n_deg = (2 * m + 2 * n) as u32;
            let r = v.hypot(u);
            let (phi, dphi, _) = phi_r_derivs(r, radius, n_deg);
            let mono = v.powi(2 * m) * u.powi(2 * n);
            let mut f = 2.0 * m as f64 * phi * v.powi(2 * m - 1) * u.powi(2 * n);
            let mut g = 2.0 * n as f64 * phi * v.powi(2 * m) * u.powi(2 * n - 1);
            if dphi != 0.0 {
                f += dphi * mono * v / r;
                g += dphi * mono * u / r;
            }
            (f, g)
        }
        Family::OneSidedSpring { k } => (-k * (v - u).min(0.0), -k * (u - v).min(0.0)),
        Family::Zero => (0.0, 0.0),
    }
}

/// Pointwise potential `p` with `(F, G) = grad p`, when one exists.
pub fn potential_density(spec: &NonlinearitySpec, v: f64, u: f64) -> Option<f64> {
    let radius = spec.truncation_radius;
    match spec.family {
        Family::PowerSeparated { mu1, alpha, mu2, beta } => Some(
            truncated_power_potential(mu1, alpha, radius, v)
                + truncated_power_potential(mu2, beta, radius, u),
        ),
        Family::GradientPotential { m, n } => {
            let n_deg = 2 * m + 2 * n;
            Some(phi_r(v.hypot(u), radius, n_deg) * v.powi(2 * m as i32) * u.powi(2 * n as i32))
        }
        Family::OneSidedSpring { .. } => None,
        Family::Zero => Some(0.0),
    }
}

/// Evaluates the lifted nonlinearity for a fixed mode count and span.
#[derive(Debug, Clone)]
pub struct NonlinearForce {
    spec: NonlinearitySpec,
    projector: Projector,
}

impl NonlinearForce {
    pub fn new(spec: &NonlinearitySpec, n_modes: usize, ell: f64) -> Result<Self> {
        spec.validate()?;
        if let Some(f) = &spec.forcing {
            if f.len() != 4 * n_modes {
                return Err(Error::DimensionMismatch {
                    expected: 4 * n_modes,
                    got: f.len(),
                });
            }
        }
        Ok(NonlinearForce {
            spec: spec.clone(),
            projector: Projector::for_modes(n_modes, ell),
        })
    }

    pub fn spec(&self) -> &NonlinearitySpec {
        &self.spec
    }

    pub fn n_modes(&self) -> usize {
        self.projector.n_modes()
    }

    /// True when nothing but a constant (possibly zero) is added.
    pub fn is_constant(&self) -> bool {
        matches!(self.spec.family, Family::Zero)
    }

    /// Lift of a flat state vector.
    pub fn lift_vector(&self, u: &DVector<f64>) -> DVector<f64> {
        let n = self.n_modes();
        let mut out = DVector::zeros(4 * n);
        if !self.is_constant() {
            let s = u.as_slice();
            let v_q = self.projector.evaluate(&s[..n]);
            let u_q = self.projector.evaluate(&s[2 * n..3 * n]);
            let (mut f_q, mut g_q) = (v_q.clone(), u_q.clone());
            for q in 0..v_q.len() {
                let (f, g) = eval_F(&self.spec, v_q[q], u_q[q]);
                f_q[q] = f;
                g_q[q] = g;
            }
            let fc = self.projector.project_samples(&f_q);
            let gc = self.projector.project_samples(&g_q);
            for j in 0..n {
                out[n + j] = fc[j];
                out[3 * n + j] = gc[j];
            }
        }
        if let Some(f) = &self.spec.forcing {
            out += DVector::from_column_slice(f);
        }
        out
    }

    pub fn lift(&self, state: &ModalState) -> DVector<f64> {
        self.lift_vector(&state.to_vector())
    }

    /// `int p(v, u) dx` by the same quadrature, when a potential exists.
    pub fn potential_energy(&self, state: &ModalState) -> Option<f64> {
        let v_q = self.projector.evaluate(&state.a);
        let u_q = self.projector.evaluate(&state.b);
        let mut acc = 0.0;
        for q in 0..v_q.len() {
            acc += self.projector.weights[q] * potential_density(&self.spec, v_q[q], u_q[q])?;
        }
        Some(acc)
    }

    /// Central difference of the lift along `direction`, Richardson-extrapolated once.
    pub fn directional_derivative(
        &self,
        state: &ModalState,
        direction: &ModalState,
    ) -> Result<DVector<f64>> {
        let u = state.to_vector();
        let d = direction.to_vector();
        if d.len() != u.len() {
            return Err(Error::DimensionMismatch {
                expected: u.len(),
                got: d.len(),
            });
        }
        let h = 1e-6 * (1.0 + u.norm());
        if !self.spec.is_differentiable() {
            let n = self.n_modes();
            // the stretch v - u must keep one strict sign over the span and
            // under the perturbation
            let stretch = |w: &DVector<f64>| {
                let s = w.as_slice();
                self.projector.evaluate(&s[..n]) - self.projector.evaluate(&s[2 * n..3 * n])
            };
            let samples = [stretch(&u), stretch(&(&u - &d * h)), stretch(&(&u + &d * h))];
            let pos = samples.iter().any(|s| s.iter().any(|&x| x > 0.0));
            let nonpos = samples.iter().any(|s| s.iter().any(|&x| x <= 0.0));
            if pos && nonpos {
                return Err(Error::NondifferentiableFamily);
            }
        }
        let central = |h: f64| (self.lift_vector(&(&u + &d * h)) - self.lift_vector(&(&u - &d * h))) / (2.0 * h);
        let coarse = central(h);
        let fine = central(0.5 * h);
        Ok((fine * 4.0 - coarse) / 3.0)
    }
}

/// Lift of `state` through a freshly built quadrature.
pub fn lift_to_state(spec: &NonlinearitySpec, state: &ModalState, ell: f64) -> Result<DVector<f64>> {
    Ok(NonlinearForce::new(spec, state.n_modes(), ell)?.lift(state))
}

pub fn directional_derivative(
    spec: &NonlinearitySpec,
    state: &ModalState,
    direction: &ModalState,
    ell: f64,
) -> Result<DVector<f64>> {
    NonlinearForce::new(spec, state.n_modes(), ell)?.directional_derivative(state, direction)
}

/// Derivative of the pointwise map along `(dv, du)`, same difference scheme.
pub fn pointwise_derivative(
    spec: &NonlinearitySpec,
    v: f64,
    u: f64,
    dv: f64,
    du: f64,
) -> Result<(f64, f64)> {
    if !spec.is_differentiable() {
        let h = 1e-6 * (1.0 + v.hypot(u));
        let lo = (v - h * dv) - (u - h * du);
        let hi = (v + h * dv) - (u + h * du);
        if lo * hi <= 0.0 {
            return Err(Error::NondifferentiableFamily);
        }
    }
    let h = 1e-6 * (1.0 + v.hypot(u));
    let central = |h: f64| {
        let (fp, gp) = eval_F(spec, v + h * dv, u + h * du);
        let (fm, gm) = eval_F(spec, v - h * dv, u - h * du);
        ((fp - fm) / (2.0 * h), (gp - gm) / (2.0 * h))
    };
    let (cf, cg) = central(h);
    let (ff, fg) = central(0.5 * h);
    Ok(((4.0 * ff - cf) / 3.0, (4.0 * fg - cg) / 3.0))
}

/// Sampled Lipschitz quotient of the pointwise map over a ball of radius `ball`.
///
/// Each family is measured in its natural argument: the power family per
/// scalar component, the spring in the stretch `s = v - u`, the gradient family
/// in the plane.
pub fn lipschitz_estimate(spec: &NonlinearitySpec, ball: f64, n_samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: f64 = 0.0;
    let radius = spec.truncation_radius;
    for _ in 0..n_samples.max(2) {
        let q = match spec.family {
            Family::Zero => 0.0,
            Family::PowerSeparated { mu1, alpha, mu2, beta } => {
                let (s, t) = (rng.random_range(-ball..=ball), rng.random_range(-ball..=ball));
                if s == t {
                    continue;
                }
                let qf = (truncated_power(mu1, alpha, radius, s) - truncated_power(mu1, alpha, radius, t)).abs();
                let qg = (truncated_power(mu2, beta, radius, s) - truncated_power(mu2, beta, radius, t)).abs();
                qf.max(qg) / (s - t).abs()
            }
            Family::OneSidedSpring { .. } => {
                let (s, t) = (rng.random_range(-ball..=ball), rng.random_range(-ball..=ball));
                if s == t {
                    continue;
                }
                let (fs, gs) = eval_F(spec, s, 0.0);
                let (ft, gt) = eval_F(spec, t, 0.0);
                (fs - ft).abs().max((gs - gt).abs()) / (s - t).abs()
            }
            Family::GradientPotential { .. } => {
                let x = sample_disk(&mut rng, ball);
                let y = sample_disk(&mut rng, ball);
                let dist = (x.0 - y.0).hypot(x.1 - y.1);
                if dist == 0.0 {
                    continue;
                }
                let fx = eval_F(spec, x.0, x.1);
                let fy = eval_F(spec, y.0, y.1);
                (fx.0 - fy.0).hypot(fx.1 - fy.1) / dist
            }
        };
        best = best.max(q);
    }
    best
}

fn sample_disk(rng: &mut ChaCha8Rng, radius: f64) -> (f64, f64) {
    loop {
        let x = rng.random_range(-radius..=radius);
        let y = rng.random_range(-radius..=radius);
        if x * x + y * y <= radius * radius {
            return (x, y);
        }
    }
}

/// Closed-form global Lipschitz bound, where one is known.
pub fn analytic_lipschitz_bound(spec: &NonlinearitySpec) -> Option<f64> {
    let r = spec.truncation_radius;
    match spec.family {
        Family::PowerSeparated { mu1, alpha, mu2, beta } => {
            Some((mu1.abs() * (alpha + 1.0) * r.powf(alpha)).max(mu2.abs() * (beta + 1.0) * r.powf(beta)))
        }
        Family::OneSidedSpring { k } => Some(k),
        Family::Zero => Some(0.0),
        Family::GradientPotential { .. } => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ff2Report {
    /// `max_t int_0^t (F(U), U) ds`.
    pub lhs_max: f64,
    /// Final value of the integral.
    pub lhs_final: f64,
    /// Smallest `kappa0 >= 0` making the inequality hold at every sample.
    pub kappa0: f64,
    pub eps: f64,
    pub c_eps: f64,
    /// `||F(0)||` in the energy norm.
    pub forcing_at_zero: f64,
}

pub const FF2_EPS: f64 = 0.25;
/// Young constant `1 / (4 eps)` for `eps = 1/4`.
pub const FF2_C_EPS: f64 = 1.0;

/// Smallest `kappa0` with
/// `int_0^t (F(U),U) <= kappa0 ||U(0)||^2 + eps ||U(t)||^2 + c_eps ||F(0)||^2`
/// along a uniformly sampled trajectory (trapezoid rule). Diagnostic only.
pub fn ff2_diagnostic(
    times: &[f64],
    states: &[ModalState],
    params: &ModelParams,
    spec: &NonlinearitySpec,
) -> Result<Ff2Report> {
    if times.len() != states.len() || states.is_empty() {
        return Err(Error::InvalidArgument("times and states must align and be non-empty".into()));
    }
    let n = states[0].n_modes();
    let force = NonlinearForce::new(spec, n, params.ell)?;
    let metric = EnergyMetric::new(params, n);
    let vecs: Vec<DVector<f64>> = states.iter().map(|s| s.to_vector()).collect();
    let integrand: Vec<f64> = vecs.iter().map(|u| metric.inner(&force.lift_vector(u), u)).collect();
    let f0 = metric.norm(&force.lift_vector(&DVector::zeros(4 * n)));
    let u0 = metric.norm(&vecs[0]).powi(2);
    let mut lhs = 0.0;
    let mut lhs_max: f64 = 0.0;
    let mut kappa0: f64 = 0.0;
    for i in 0..vecs.len() {
        if i > 0 {
            lhs += 0.5 * (times[i] - times[i - 1]) * (integrand[i] + integrand[i - 1]);
        }
        lhs_max = lhs_max.max(lhs);
        let slack = lhs - FF2_EPS * metric.norm(&vecs[i]).powi(2) - FF2_C_EPS * f0 * f0;
        if slack > 0.0 {
            kappa0 = if u0 > 0.0 { kappa0.max(slack / u0) } else { f64::INFINITY };
        }
    }
    Ok(Ff2Report {
        lhs_max,
        lhs_final: lhs,
        kappa0,
        eps: FF2_EPS,
        c_eps: FF2_C_EPS,
        forcing_at_zero: f0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::eval_series;
    use crate::params::DampingPoint;

    fn power(mu1: f64, alpha: f64, r: f64) -> NonlinearitySpec {
        NonlinearitySpec::new(Family::PowerSeparated { mu1, alpha, mu2: mu1, beta: alpha }, r)
    }

    #[test]
    fn hermite_values() {
        assert_eq!(hermite_h(0.0).unwrap(), 1.0);
        assert_eq!(hermite_h(1.0).unwrap(), 0.0);
        assert!((hermite_h(0.5).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(hermite_h(1.5), Err(Error::DomainError(_))));
        assert!(matches!(hermite_h(-0.1), Err(Error::DomainError(_))));
        for s in [0.0, 1.0] {
            let (_, d1, d2) = hermite_derivs(s);
            assert!(d1.abs() < 1e-14 && d2.abs() < 1e-12);
        }
    }

    #[test]
    fn radial_weight_values() {
        let (r, n) = (0.7, 4);
        assert_eq!(phi_r(r, r, n), 1.0);
        assert!((phi_r(2.0 * r, r, n) - 2f64.powi(1 - n as i32)).abs() < 1e-15);
        assert!(phi_r(1e6, r, n) < 1e-15);
        let (_, d1, d2) = phi_r_derivs(2.0 * r, r, n);
        let nn = n as f64;
        assert!((d1 + (nn - 1.0) / (2f64.powi(n as i32) * r)).abs() < 1e-13);
        assert!((d2 - nn * (nn - 1.0) / (2f64.powi(n as i32 + 1) * r * r)).abs() < 1e-12);
    }

    // second-order one-sided second differences
    fn second_left(f: &dyn Fn(f64) -> f64, x: f64, h: f64) -> f64 {
        (2.0 * f(x) - 5.0 * f(x - h) + 4.0 * f(x - 2.0 * h) - f(x - 3.0 * h)) / (h * h)
    }
    fn second_right(f: &dyn Fn(f64) -> f64, x: f64, h: f64) -> f64 {
        (2.0 * f(x) - 5.0 * f(x + h) + 4.0 * f(x + 2.0 * h) - f(x + 3.0 * h)) / (h * h)
    }

    #[test]
    fn radial_weight_is_c2_at_the_joints() {
        for (radius, n) in [(1.0, 4u32), (0.5, 6), (2.0, 10)] {
            let f = |r: f64| phi_r(r, radius, n);
            let h = 1e-4 * radius;
            for x in [radius, 2.0 * radius] {
                let (l, r) = (second_left(&f, x, h), second_right(&f, x, h));
                let scale = (0..=1000)
                    .map(|i| phi_r_derivs(radius * (1.0 + i as f64 / 1000.0), radius, n).2.abs())
                    .fold(0.0, f64::max);
                assert!((l - r).abs() <= 1e-5 * scale, "R={radius} N={n} x={x}: {l} vs {r}");
            }
        }
    }

    #[test]
    fn truncated_power_values() {
        let s = power(1.0, 2.0, 1.0);
        assert!((eval_F(&s, 0.5, 0.0).0 - 0.125).abs() < 1e-15);
        assert_eq!(eval_F(&s, 2.0, 0.0).0, 2.0);
        // inside the ball the truncation is the raw formula, bit for bit
        for i in -100..=100 {
            let x = i as f64 / 100.0;
            assert_eq!(eval_F(&s, x, x).0, x * x.abs().powf(2.0));
        }
    }

    #[test]
    fn one_sided_spring_values() {
        let s = NonlinearitySpec::new(Family::OneSidedSpring { k: 1.0 }, 1.0);
        assert_eq!(eval_F(&s, 0.0, 1.0).0, 1.0);
        assert_eq!(eval_F(&s, 1.0, 0.0).0, 0.0);
        assert_eq!(eval_F(&s, 1.0, 0.0).1, 1.0);
    }

    #[test]
    fn gradient_inside_ball() {
        let s = NonlinearitySpec::new(Family::GradientPotential { m: 1, n: 1 }, 2.0);
        assert_eq!(eval_F(&s, 1.0, 1.0), (2.0, 2.0));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for (m, n, radius) in [(1u32, 1u32, 1.0), (1, 2, 0.8), (2, 1, 1.5)] {
            let s = NonlinearitySpec::new(Family::GradientPotential { m, n }, radius);
            let p = |x: f64, y: f64| potential_density(&s, x, y).unwrap();
            let mut checked = 0;
            while checked < 1000 {
                let x = rng.random_range(-3.0 * radius..3.0 * radius);
                let y = rng.random_range(-3.0 * radius..3.0 * radius);
                if x.hypot(y) <= 1e-3 {
                    continue;
                }
                checked += 1;
                let h = 1e-4 * (1.0 + x.hypot(y));
                let d = |f: &dyn Fn(f64) -> f64| {
                    let c = |h: f64| (f(h) - f(-h)) / (2.0 * h);
                    (4.0 * c(h / 2.0) - c(h)) / 3.0
                };
                let fx = d(&|e| p(x + e, y));
                let fy = d(&|e| p(x, y + e));
                let (f, g) = eval_F(&s, x, y);
                let err = (fx - f).hypot(fy - g);
                assert!(err <= 1e-6 * f.hypot(g) + 1e-12, "({x},{y}): {err}");
            }
        }
    }

    #[test]
    fn power_potential_is_antiderivative() {
        let s = power(-0.7, 1.5, 0.9);
        for i in -40..=40 {
            let x = i as f64 * 0.05;
            if (x.abs() - 0.9).abs() < 1e-3 {
                continue;
            }
            let h = 1e-5;
            let d = (potential_density(&s, x + h, 0.0).unwrap() - potential_density(&s, x - h, 0.0).unwrap()) / (2.0 * h);
            assert!((d - eval_F(&s, x, 0.0).0).abs() < 1e-8);
        }
    }

    #[test]
    fn lift_cases() {
        let ell = 1.0;
        let st = ModalState {
            a: vec![0.3, -0.2, 0.1],
            adot: vec![1.0, 0.0, 0.0],
            b: vec![0.1, 0.4, 0.0],
            bdot: vec![0.0, 0.0, 2.0],
        };
        let z = lift_to_state(&NonlinearitySpec::zero(), &st, ell).unwrap();
        assert!(z.iter().all(|&x| x == 0.0));

        let f: Vec<f64> = (0..12).map(|i| i as f64 * 0.1).collect();
        let forced = NonlinearitySpec::zero().with_forcing(f.clone());
        assert_eq!(lift_to_state(&forced, &st, ell).unwrap().as_slice(), &f[..]);

        let spring = NonlinearitySpec::new(Family::OneSidedSpring { k: 3.0 }, 1.0);
        let mut same = st.clone();
        same.b = same.a.clone();
        assert!(lift_to_state(&spring, &same, ell).unwrap().iter().all(|&x| x == 0.0));

        let bad = NonlinearitySpec::zero().with_forcing(vec![0.0; 5]);
        assert!(lift_to_state(&bad, &st, ell).is_err());
    }

    #[test]
    fn lift_uses_displacements_only() {
        let ell = 1.3;
        let spec = power(1.0, 2.0, 5.0);
        let mut st = ModalState::zeros(4);
        st.a[0] = 0.8;
        st.a[2] = -0.3;
        let base = lift_to_state(&spec, &st, ell).unwrap();
        st.adot[1] = 7.0;
        st.bdot[0] = -2.0;
        assert_eq!(lift_to_state(&spec, &st, ell).unwrap(), base);
        // projected coefficients of v^3 checked against dense trapezoid quadrature
        let v = |x: f64| eval_series(&st.a, ell, x);
        for j in 0..4 {
            let m = 20_000;
            let h = ell / m as f64;
            let mut acc = 0.0;
            for i in 0..=m {
                let x = i as f64 * h;
                let w = if i == 0 || i == m { 0.5 } else { 1.0 };
                acc += w * v(x).powi(3) * crate::basis::basis_value(j, ell, x);
            }
            let expected = 2.0 / ell * acc * h;
            assert!((base[4 + j] - expected).abs() < 1e-7, "mode {j}");
        }
    }

    #[test]
    fn derivative_cases() {
        let spec = power(1.0, 2.0, 10.0);
        let (df, _) = pointwise_derivative(&spec, 1.0, 0.0, 1.0, 0.0).unwrap();
        assert!((df - 3.0).abs() < 1e-8);

        let ell = 1.0;
        let st = ModalState {
            a: vec![0.4, 0.1],
            adot: vec![0.0; 2],
            b: vec![0.5, 0.3],
            bdot: vec![0.0; 2],
        };
        let d1 = ModalState { a: vec![1.0, 0.0], adot: vec![0.0; 2], b: vec![0.0, 1.0], bdot: vec![0.0; 2] };
        let d2 = ModalState { a: vec![0.0, -0.5], adot: vec![0.0; 2], b: vec![0.2, 0.0], bdot: vec![0.0; 2] };
        let sum = ModalState::from_vector(&(d1.to_vector() * 2.0 + d2.to_vector())).unwrap();
        let g = |d: &ModalState| directional_derivative(&spec, &st, d, ell).unwrap();
        let lin = g(&d1) * 2.0 + g(&d2);
        assert!((g(&sum) - &lin).norm() <= 1e-8 * (1.0 + lin.norm()));

        let zero = NonlinearitySpec::zero();
        assert!(directional_derivative(&zero, &st, &d1, ell).unwrap().iter().all(|&x| x == 0.0));

        let spring = NonlinearitySpec::new(Family::OneSidedSpring { k: 1.0 }, 1.0);
        assert!(matches!(
            pointwise_derivative(&spring, 0.0, 0.0, 1.0, 0.0),
            Err(Error::NondifferentiableFamily)
        ));
        // v - u changes sign inside the span for this state
        assert!(matches!(
            directional_derivative(&spring, &st, &d1, ell),
            Err(Error::NondifferentiableFamily)
        ));
    }

    #[test]
    fn lipschitz_cases() {
        let spring = NonlinearitySpec::new(Family::OneSidedSpring { k: 1.0 }, 1.0);
        assert!(lipschitz_estimate(&spring, 5.0, 10_000, 1) <= 1.0 + 1e-9);
        assert_eq!(lipschitz_estimate(&NonlinearitySpec::zero(), 5.0, 100, 1), 0.0);
        let p = power(1.0, 2.0, 1.0);
        let est = lipschitz_estimate(&p, 3.0, 20_000, 2);
        assert!(est <= 3.0 + 1e-6);
        assert!(est > 2.5);
        for spec in [spring, p, power(-2.0, 0.5, 0.4)] {
            let bound = analytic_lipschitz_bound(&spec).unwrap();
            assert!(lipschitz_estimate(&spec, 4.0, 20_000, 5) <= bound + 1e-6);
        }
        let grad = NonlinearitySpec::new(Family::GradientPotential { m: 1, n: 1 }, 1.0);
        let far = lipschitz_estimate(&grad, 50.0, 20_000, 3);
        assert!(far.is_finite());
    }

    #[test]
    fn validation() {
        assert!(power(1.0, -1.0, 1.0).validate().is_err());
        assert!(NonlinearitySpec::new(Family::GradientPotential { m: 0, n: 1 }, 1.0).validate().is_err());
        assert!(NonlinearitySpec::new(Family::Zero, 0.0).validate().is_err());
        assert!(NonlinearitySpec::new(Family::OneSidedSpring { k: 2.0 }, 1.0).validate().is_ok());
    }

    #[test]
    fn spec_json_is_tagged() {
        let s = NonlinearitySpec::new(Family::OneSidedSpring { k: 2.0 }, 1.0);
        let j = serde_json::to_value(&s).unwrap();
        assert_eq!(j["family"]["type"], "one_sided_spring");
        let back: NonlinearitySpec =
            serde_json::from_str(r#"{"family":{"type":"zero"},"forcing":[1,2,3,4]}"#).unwrap();
        assert_eq!(back.family, Family::Zero);
        assert_eq!(back.truncation_radius, 1.0);
    }

    #[test]
    fn ff2_zero_family() {
        let p = ModelParams::unit(DampingPoint::ratio(1, 3));
        let states = vec![ModalState::cable_mode(2, 0, 1.0); 5];
        let times: Vec<f64> = (0..5).map(|i| i as f64 * 0.1).collect();
        let r = ff2_diagnostic(&times, &states, &p, &NonlinearitySpec::zero()).unwrap();
        assert_eq!(r.lhs_max, 0.0);
        assert_eq!(r.kappa0, 0.0);
    }
}
