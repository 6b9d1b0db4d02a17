//! Implicit midpoint integration of `U' = A_N U + F(U)` with an exact discrete
//! energy audit.
//!
//! Steps are taken in energy-scaled coordinates `y = C U`, where the energy is
//! `|y|^2 / 2`. For one step
//!
//! ```text
//! E+ - E = -dt P(U_mid) + dt W_mid,    W_mid = Q(F(U_mid), U_mid)
//! ```
//!
//! holds up to the linear solve and the fixed-point tolerance.

use nalgebra::{DMatrix, DVector, LU};
use serde::{Deserialize, Serialize};

use crate::basis::ModalState;
use crate::energy::{damping_power, total_energy, EnergyBreakdown};
use crate::error::{Error, Result};
use crate::generator::{assemble, DiscreteGenerator};
use crate::nonlinearity::{Family, NonlinearForce, NonlinearitySpec};
use crate::params::ModelParams;

pub const FIXED_POINT_TOL: f64 = 1e-12;
pub const FIXED_POINT_MAX_ITER: usize = 50;
/// Default share of the horizon skipped by [`fit_decay_rate`].
pub const DECAY_FIT_SKIP: f64 = 0.2;

/// Cached midpoint factorization for one generator and one signed step.
#[derive(Debug, Clone)]
pub struct MidpointStepper {
    gen: DiscreteGenerator,
    dt: f64,
    lhs: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    rhs: DMatrix<f64>,
    force: Option<NonlinearForce>,
    /// `C F(0)` when the force is a pure constant, else unused.
    constant: Option<DVector<f64>>,
}

/// Outcome of one step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: DVector<f64>,
    pub midpoint: DVector<f64>,
    /// `Q(F(U_mid), U_mid)`.
    pub work: f64,
    pub iterations: usize,
}

impl MidpointStepper {
    /// Linear stepper. `dt` may be negative (backward stepping).
    pub fn new(gen: &DiscreteGenerator, dt: f64) -> Result<Self> {
        Self::with_force(gen, dt, None)
    }

    pub fn semilinear(gen: &DiscreteGenerator, spec: &NonlinearitySpec, dt: f64) -> Result<Self> {
        let force = NonlinearForce::new(spec, gen.n_modes(), gen.params().ell)?;
        Self::with_force(gen, dt, Some(force))
    }

    fn with_force(gen: &DiscreteGenerator, dt: f64, force: Option<NonlinearForce>) -> Result<Self> {
        if !(dt.is_finite() && dt != 0.0) {
            return Err(Error::InvalidTimeStep(dt));
        }
        let dim = gen.dim();
        let a = gen.scaled_matrix();
        let id = DMatrix::<f64>::identity(dim, dim);
        let lhs_m = &id - a * (0.5 * dt);
        let lu = lhs_m.clone().lu();
        if !lu.is_invertible() {
            return Err(Error::SingularShift {
                re: 2.0 / dt,
                im: 0.0,
                sigma_min: 0.0,
                norm: lhs_m.norm(),
            });
        }
        let constant = match &force {
            Some(f) if f.is_constant() => {
                Some(gen.metric().to_scaled(&f.lift_vector(&DVector::zeros(dim))))
            }
            _ => None,
        };
        Ok(MidpointStepper {
            gen: gen.clone(),
            dt,
            lhs: lu,
            rhs: &id + a * (0.5 * dt),
            force,
            constant,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn generator(&self) -> &DiscreteGenerator {
        &self.gen
    }

    /// One step in scaled coordinates.
    pub fn step_scaled(&self, y: &DVector<f64>) -> Result<StepOutcome> {
        let metric = self.gen.metric();
        let base = &self.rhs * y;
        let (next, work, iterations) = match (&self.force, &self.constant) {
            (None, _) => (self.solve(base), 0.0, 0),
            (Some(_), Some(c)) => {
                let next = self.solve(base + c * self.dt);
                let mid = (y + &next) * 0.5;
                let work = c.dot(&mid);
                (next, work, 1)
            }
            (Some(force), None) => {
                let eval = |z: &DVector<f64>| {
                    let mid = (y + z) * 0.5;
                    metric.to_scaled(&force.lift_vector(&metric.from_scaled(&mid)))
                };
                let mut z = self.solve(base.clone());
                let mut prev_inc = f64::INFINITY;
                let mut growth = 0;
                let mut done = None;
                for it in 1..=FIXED_POINT_MAX_ITER {
                    let f = eval(&z);
                    let z_new = self.solve(&base + &f * self.dt);
                    let inc = (&z_new - &z).norm();
                    let ratio = inc / prev_inc;
                    z = z_new;
                    if !z.iter().all(|x| x.is_finite()) {
                        return Err(Error::FixedPointDivergence {
                            iterations: it,
                            contraction: ratio,
                        });
                    }
                    if inc <= FIXED_POINT_TOL * (1.0 + z.norm()) {
                        done = Some(it);
                        break;
                    }
                    if ratio >= 1.0 && prev_inc.is_finite() {
                        growth += 1;
                        if growth >= 3 {
                            return Err(Error::FixedPointDivergence {
                                iterations: it,
                                contraction: ratio,
                            });
                        }
                    } else {
                        growth = 0;
                    }
                    prev_inc = inc;
                }
                let Some(it) = done else {
                    return Err(Error::FixedPointDivergence {
                        iterations: FIXED_POINT_MAX_ITER,
                        contraction: prev_inc,
                    });
                };
                let mid = (y + &z) * 0.5;
                let work = eval(&z).dot(&mid);
                (z, work, it)
            }
        };
        if !next.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFiniteState);
        }
        let midpoint = (y + &next) * 0.5;
        Ok(StepOutcome {
            state: next,
            midpoint,
            work,
            iterations,
        })
    }

    fn solve(&self, b: DVector<f64>) -> DVector<f64> {
        self.lhs.solve(&b).expect("factorization checked invertible")
    }

    /// One step on a flat state vector.
    pub fn step_vector(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        let metric = self.gen.metric();
        let out = self.step_scaled(&metric.to_scaled(u))?;
        Ok(metric.from_scaled(&out.state))
    }

    pub fn step(&self, state: &ModalState) -> Result<ModalState> {
        check_dim(state, self.gen.n_modes())?;
        ModalState::from_vector(&self.step_vector(&state.to_vector())?)
    }
}

fn check_dim(state: &ModalState, n: usize) -> Result<()> {
    state.check()?;
    if state.n_modes() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: state.n_modes(),
        });
    }
    Ok(())
}

/// `(I - dt/2 A) U+ = (I + dt/2 A) U`.
pub fn step_midpoint_linear(gen: &DiscreteGenerator, state: &ModalState, dt: f64) -> Result<ModalState> {
    if !(dt > 0.0) {
        return Err(Error::InvalidTimeStep(dt));
    }
    MidpointStepper::new(gen, dt)?.step(state)
}

/// Midpoint step with the nonlinearity resolved by fixed-point iteration.
pub fn step_imex_semilinear(
    gen: &DiscreteGenerator,
    spec: &NonlinearitySpec,
    state: &ModalState,
    dt: f64,
) -> Result<ModalState> {
    if !(dt > 0.0) {
        return Err(Error::InvalidTimeStep(dt));
    }
    MidpointStepper::semilinear(gen, spec, dt)?.step(state)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeMetadata {
    pub scheme: String,
    pub dt: f64,
    pub stride: usize,
    pub n_steps: usize,
    pub n_modes: usize,
    pub fixed_point_tol: f64,
    pub fixed_point_max_iter: usize,
    pub max_iterations_used: usize,
    /// Max over all steps of `|dE + dt P_mid - dt W_mid| / E(0)`, whatever the stride.
    pub max_step_residual: f64,
}

/// Per-step audit terms, kept when every step is stored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepAudit {
    pub p_mid: f64,
    pub w_mid: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub states: Vec<ModalState>,
    pub energies: Vec<EnergyBreakdown>,
    pub damping_power: Vec<f64>,
    /// `int p(v, u) dx` for families with a potential.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audit: Option<Vec<StepAudit>>,
    pub params: ModelParams,
    pub metadata: SchemeMetadata,
}

impl TrajectoryRecord {
    pub fn total_energy(&self) -> Vec<f64> {
        self.energies.iter().map(|e| e.total).collect()
    }

    pub fn final_state(&self) -> &ModalState {
        self.states.last().expect("records are never empty")
    }

    /// `E - int p` (conserved up to damping for gradient-type forces).
    pub fn augmented_energy(&self) -> Option<Vec<f64>> {
        let pot = self.potential.as_ref()?;
        Some(self.energies.iter().zip(pot).map(|(e, p)| e.total - p).collect())
    }
}

/// Runs `ceil(t_end / dt)` steps (the last time may overshoot by under one step),
/// storing every `stride`-th state.
pub fn simulate(
    params: &ModelParams,
    spec: &NonlinearitySpec,
    initial: &ModalState,
    t_end: f64,
    dt: f64,
    stride: usize,
) -> Result<TrajectoryRecord> {
    let gen = assemble(params, initial.n_modes())?;
    simulate_with(&gen, spec, initial, t_end, dt, stride)
}

pub fn simulate_with(
    gen: &DiscreteGenerator,
    spec: &NonlinearitySpec,
    initial: &ModalState,
    t_end: f64,
    dt: f64,
    stride: usize,
) -> Result<TrajectoryRecord> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidTimeStep(dt));
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidArgument(format!("horizon must be non-negative, got {t_end}")));
    }
    if stride == 0 {
        return Err(Error::InvalidArgument("stride must be at least 1".into()));
    }
    check_dim(initial, gen.n_modes())?;
    let n_steps = (t_end / dt - 1e-9).ceil().max(0.0) as usize;
    simulate_steps(gen, spec, initial, n_steps, dt, stride)
}

/// Runs exactly `n_steps` steps.
pub fn simulate_steps(
    gen: &DiscreteGenerator,
    spec: &NonlinearitySpec,
    initial: &ModalState,
    n_steps: usize,
    dt: f64,
    stride: usize,
) -> Result<TrajectoryRecord> {
    check_dim(initial, gen.n_modes())?;
    if stride == 0 {
        return Err(Error::InvalidArgument("stride must be at least 1".into()));
    }
    let linear = matches!(spec.family, Family::Zero) && spec.forcing.is_none();
    let stepper = if linear {
        MidpointStepper::new(gen, dt)?
    } else {
        MidpointStepper::semilinear(gen, spec, dt)?
    };
    let params = *gen.params();
    let metric = gen.metric();
    let force = NonlinearForce::new(spec, gen.n_modes(), params.ell)?;
    let has_potential = !matches!(spec.family, Family::Zero) && force.potential_energy(initial).is_some();

    let cap = n_steps / stride + 2;
    let mut times = Vec::with_capacity(cap);
    let mut states = Vec::with_capacity(cap);
    let mut energies = Vec::with_capacity(cap);
    let mut power = Vec::with_capacity(cap);
    let mut potential = has_potential.then(|| Vec::with_capacity(cap));
    let mut audit = (stride == 1).then(|| Vec::with_capacity(n_steps));

    let mut push = |t: f64, s: ModalState| {
        times.push(t);
        energies.push(total_energy(&s, &params));
        power.push(damping_power(&s, &params));
        if let Some(p) = potential.as_mut() {
            p.push(force.potential_energy(&s).unwrap_or(0.0));
        }
        states.push(s);
    };

    let mut y = metric.to_scaled(&initial.to_vector());
    let e0 = 0.5 * y.norm_squared();
    push(0.0, initial.clone());
    let mut max_res: f64 = 0.0;
    let mut max_it = 0;
    for step in 1..=n_steps {
        let out = stepper.step_scaled(&y)?;
        let mid = ModalState::from_vector(&metric.from_scaled(&out.midpoint))?;
        let p_mid = damping_power(&mid, &params);
        let de = 0.5 * (out.state.norm_squared() - y.norm_squared());
        if e0 > 0.0 {
            max_res = max_res.max((de + dt * p_mid - dt * out.work).abs() / e0);
        }
        max_it = max_it.max(out.iterations);
        if let Some(a) = audit.as_mut() {
            a.push(StepAudit { p_mid, w_mid: out.work });
        }
        y = out.state;
        if step % stride == 0 || step == n_steps {
            push(step as f64 * dt, ModalState::from_vector(&metric.from_scaled(&y))?);
        }
    }
    let scheme = if linear { "implicit-midpoint" } else { "implicit-midpoint-fixed-point" };
    Ok(TrajectoryRecord {
        times,
        states,
        energies,
        damping_power: power,
        potential,
        audit,
        params,
        metadata: SchemeMetadata {
            scheme: scheme.to_string(),
            dt,
            stride,
            n_steps,
            n_modes: gen.n_modes(),
            fixed_point_tol: FIXED_POINT_TOL,
            fixed_point_max_iter: FIXED_POINT_MAX_ITER,
            max_iterations_used: max_it,
            max_step_residual: max_res,
        },
    })
}

/// Max over steps of `|dE + dt P_mid - dt W_mid| / E(0)`, recomputed from the
/// stored states and recorded work.
pub fn dissipation_residual(record: &TrajectoryRecord) -> Result<f64> {
    if record.metadata.stride != 1 {
        return Err(Error::StrideTooCoarse(record.metadata.stride));
    }
    let e0 = record.energies[0].total;
    if e0 <= 0.0 {
        return Ok(0.0);
    }
    let dt = record.metadata.dt;
    let mut worst: f64 = 0.0;
    for i in 1..record.states.len() {
        let mid_v = (record.states[i - 1].to_vector() + record.states[i].to_vector()) * 0.5;
        let mid = ModalState::from_vector(&mid_v)?;
        let p_mid = damping_power(&mid, &record.params);
        let w_mid = record.audit.as_ref().map_or(0.0, |a| a[i - 1].w_mid);
        let de = record.energies[i].total - record.energies[i - 1].total;
        worst = worst.max((de + dt * p_mid - dt * w_mid).abs() / e0);
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub mu_fit: f64,
    pub intercept: f64,
    pub window: (f64, f64),
    /// RMS residual of the regression on `log E`.
    pub residual: f64,
    pub n_points: usize,
}

/// Least squares on `(t, log E)` over `window` (default: all but the first 20%
/// of the horizon). `mu_fit = -slope / 2`.
pub fn fit_decay_rate(record: &TrajectoryRecord, window: Option<(f64, f64)>) -> Result<DecayFit> {
    let energies = record.total_energy();
    fit_log_decay(&record.times, &energies, window, 0.5)
}

/// Shared regression: `rate = -slope * factor` of `log(values)` on `times`.
pub(crate) fn fit_log_decay(
    times: &[f64],
    values: &[f64],
    window: Option<(f64, f64)>,
    factor: f64,
) -> Result<DecayFit> {
    let t_last = *times.last().ok_or(Error::ZeroEnergy)?;
    let (ta, tb) = window.unwrap_or((times[0] + DECAY_FIT_SKIP * (t_last - times[0]), t_last));
    if !(ta <= tb && ta >= times[0] - 1e-12 && tb <= t_last + 1e-12) {
        return Err(Error::InvalidArgument(format!("fit window [{ta}, {tb}] outside the trajectory")));
    }
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= ta - 1e-12 && **t <= tb + 1e-12)
        .map(|(t, e)| (*t, *e))
        .collect();
    if pts.iter().any(|(_, e)| !(*e > 0.0)) {
        return Err(Error::ZeroEnergy);
    }
    if pts.len() < 2 {
        return Err(Error::InvalidArgument("fit window holds fewer than two samples".into()));
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ml = pts.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (t, e) in &pts {
        sxy += (t - mt) * (e.ln() - ml);
        sxx += (t - mt) * (t - mt);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = ml - slope * mt;
    let rss: f64 = pts
        .iter()
        .map(|(t, e)| (e.ln() - intercept - slope * t).powi(2))
        .sum();
    Ok(DecayFit {
        mu_fit: -slope * factor,
        intercept,
        window: (ta, tb),
        residual: (rss / n).sqrt(),
        n_points: pts.len(),
    })
}
