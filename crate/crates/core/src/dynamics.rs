//! Long-time experiments: the linear/nonlinear splitting of the flow, the
//! regularity audit of its compact part, absorbing balls, and attractor probes.
//!
//! Every norm here is the energy norm `sqrt(Q)` unless stated otherwise.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::ModalState;
use crate::error::{Error, Result};
use crate::generator::{assemble, DiscreteGenerator};
use crate::nonlinearity::{NonlinearForce, NonlinearitySpec};
use crate::params::ModelParams;
use crate::spectral::golden_section;
use crate::timestepper::{simulate_with, TrajectoryRecord};

/// `U = W + V`, where `W` carries the homogeneous nonlinearity `F(W) - F(0)`
/// from `U(0)` and `V` starts at rest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionRecord {
    pub schema: String,
    pub dt: f64,
    pub times: Vec<f64>,
    pub u: Vec<ModalState>,
    pub w: Vec<ModalState>,
    pub v: Vec<ModalState>,
    pub w_norm: Vec<f64>,
    /// `||A_N V||`.
    pub av_norm: Vec<f64>,
    /// `||V_t||` by central differences (one-sided at the ends).
    pub vt_norm: Vec<f64>,
    /// `max_t ||U - (W + V)|| / (1 + ||U||)`.
    pub additivity_defect: f64,
    /// `||F(0)||`.
    pub forcing_norm: f64,
    pub u0_norm: f64,
}

impl DecompositionRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// The same spec with `F(0)` removed. Every built-in family vanishes at the
/// origin, so only the constant forcing goes.
pub fn homogeneous_part(spec: &NonlinearitySpec) -> NonlinearitySpec {
    NonlinearitySpec {
        forcing: None,
        ..spec.clone()
    }
}

pub fn decompose(
    params: &ModelParams,
    spec: &NonlinearitySpec,
    u0: &ModalState,
    t_end: f64,
    dt: f64,
) -> Result<DecompositionRecord> {
    let gen = assemble(params, u0.n_modes())?;
    decompose_with(&gen, spec, u0, t_end, dt)
}

pub fn decompose_with(
    gen: &DiscreteGenerator,
    spec: &NonlinearitySpec,
    u0: &ModalState,
    t_end: f64,
    dt: f64,
) -> Result<DecompositionRecord> {
    let spec_w = homogeneous_part(spec);
    let (ru, rw) = rayon::join(
        || simulate_with(gen, spec, u0, t_end, dt, 1),
        || simulate_with(gen, &spec_w, u0, t_end, dt, 1),
    );
    let (ru, rw) = (ru?, rw?);
    let metric = gen.metric();
    let a = gen.matrix();
    let mut v = Vec::with_capacity(ru.states.len());
    let mut w_norm = Vec::with_capacity(ru.states.len());
    let mut av_norm = Vec::with_capacity(ru.states.len());
    let mut defect: f64 = 0.0;
    let mut vvecs = Vec::with_capacity(ru.states.len());
    for (su, sw) in ru.states.iter().zip(&rw.states) {
        let (uu, ww) = (su.to_vector(), sw.to_vector());
        let vv = &uu - &ww;
        defect = defect.max(metric.norm(&(&uu - (&ww + &vv))) / (1.0 + metric.norm(&uu)));
        w_norm.push(metric.norm(&ww));
        av_norm.push(metric.norm(&(a * &vv)));
        v.push(ModalState::from_vector(&vv)?);
        vvecs.push(vv);
    }
    let vt_norm = time_derivative_norms(&vvecs, dt, |x| metric.norm(x));
    let force = NonlinearForce::new(spec, gen.n_modes(), gen.params().ell)?;
    let forcing_norm = metric.norm(&force.lift_vector(&DVector::zeros(gen.dim())));
    Ok(DecompositionRecord {
        schema: "bridgelab.decomposition.v1".into(),
        dt,
        times: ru.times.clone(),
        u: ru.states,
        w: rw.states,
        v,
        w_norm,
        av_norm,
        vt_norm,
        additivity_defect: defect,
        forcing_norm,
        u0_norm: metric.norm(&u0.to_vector()),
    })
}

fn time_derivative_norms<F: Fn(&DVector<f64>) -> f64>(xs: &[DVector<f64>], dt: f64, norm: F) -> Vec<f64> {
    let n = xs.len();
    if n < 2 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|i| {
            if i == 0 {
                norm(&((&xs[1] - &xs[0]) / dt))
            } else if i == n - 1 {
                norm(&((&xs[n - 1] - &xs[n - 2]) / dt))
            } else {
                norm(&((&xs[i + 1] - &xs[i - 1]) / (2.0 * dt)))
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemaWReport {
    pub sup_av: f64,
    pub sup_vt: f64,
    /// `sup_t ||V||`.
    pub sup_v: f64,
    pub forcing_norm: f64,
    pub u0_norm: f64,
    /// `sup_t (||V_t|| + ||V|| + ||A_N V||) / (||F(0)|| + ||U(0)||)`, `0` when both vanish.
    pub ratio: f64,
    pub finite: bool,
}

/// Regularity audit of the `V` component. Only finiteness is meaningful; the
/// constant in the bound is not known.
#[allow(non_snake_case)]
pub fn lemaW_audit(record: &DecompositionRecord, gen: &DiscreteGenerator) -> LemaWReport {
    let metric = gen.metric();
    let mut sup_v: f64 = 0.0;
    let mut sup_graph: f64 = 0.0;
    for (i, v) in record.v.iter().enumerate() {
        let nv = metric.norm(&v.to_vector());
        sup_v = sup_v.max(nv);
        sup_graph = sup_graph.max(record.vt_norm[i] + nv + record.av_norm[i]);
    }
    let sup_av = record.av_norm.iter().copied().fold(0.0, f64::max);
    let sup_vt = record.vt_norm.iter().copied().fold(0.0, f64::max);
    let denom = record.forcing_norm + record.u0_norm;
    let ratio = if denom > 0.0 { sup_graph / denom } else { 0.0 };
    LemaWReport {
        sup_av,
        sup_vt,
        sup_v,
        forcing_norm: record.forcing_norm,
        u0_norm: record.u0_norm,
        ratio,
        finite: [sup_av, sup_vt, sup_v, ratio].iter().all(|x| x.is_finite()),
    }
}

/// Draws `count` states with `||U|| <= radius`, uniformly in the energy ball.
pub fn sample_ball(gen: &DiscreteGenerator, radius: f64, count: usize, seed: u64) -> Vec<ModalState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = gen.dim();
    let unit = Uniform::new(0.0f64, 1.0).expect("valid range");
    (0..count)
        .map(|_| {
            let mut y = DVector::<f64>::from_fn(dim, |_, _| StandardNormal.sample(&mut rng));
            let n = y.norm();
            let r = radius * unit.sample(&mut rng).powf(1.0 / dim as f64);
            y *= r / n;
            ModalState::from_vector(&gen.metric().from_scaled(&y)).expect("dimension matches")
        })
        .collect()
}

/// Fit of `c1 exp(-mu t) R + c2` to the ensemble's upper envelope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeFit {
    pub c1: f64,
    pub mu: f64,
    pub c2: f64,
    /// RMS residual of the least-squares fit.
    pub residual: f64,
    /// Smallest shift of `c2` that makes the fit an upper bound on the samples.
    pub bound_shift: f64,
}

pub const ENVELOPE_MU_RANGE: (f64, f64) = (1e-4, 20.0);

/// For each `mu` the best `(c1 R, c2)` is linear least squares; `mu` itself
/// is found by golden section on `log mu`.
pub fn fit_envelope(times: &[f64], values: &[f64], radius: f64) -> EnvelopeFit {
    let solve = |mu: f64| -> (f64, f64, f64) {
        let n = times.len() as f64;
        let e: Vec<f64> = times.iter().map(|t| (-mu * t).exp()).collect();
        let (se, see) = (e.iter().sum::<f64>(), e.iter().map(|x| x * x).sum::<f64>());
        let sy = values.iter().sum::<f64>();
        let sey = e.iter().zip(values).map(|(a, b)| a * b).sum::<f64>();
        let det = n * see - se * se;
        let (a, b) = if det.abs() > 1e-300 {
            ((n * sey - se * sy) / det, (see * sy - se * sey) / det)
        } else {
            (0.0, sy / n)
        };
        let rss = e.iter().zip(values).map(|(x, y)| (a * x + b - y).powi(2)).sum::<f64>();
        (a, b, rss)
    };
    let (lo, hi) = (ENVELOPE_MU_RANGE.0.ln(), ENVELOPE_MU_RANGE.1.ln());
    // coarse scan then refine around the best bracket
    let grid = 200;
    let mut best = (0, f64::INFINITY);
    for i in 0..=grid {
        let rss = solve((lo + (hi - lo) * i as f64 / grid as f64).exp()).2;
        if rss < best.1 {
            best = (i, rss);
        }
    }
    let step = (hi - lo) / grid as f64;
    let c = lo + step * best.0 as f64;
    let (lmu, _) = golden_section(|x| solve(x.exp()).2, (c - step).max(lo), (c + step).min(hi), 1e-10);
    let mu = lmu.exp();
    let (a, b, rss) = solve(mu);
    let shift = times
        .iter()
        .zip(values)
        .map(|(t, y)| y - (a * (-mu * t).exp() + b))
        .fold(0.0, f64::max);
    EnvelopeFit {
        c1: if radius > 0.0 { a / radius } else { a },
        mu,
        c2: b,
        residual: (rss / times.len().max(1) as f64).sqrt(),
        bound_shift: shift,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsorbingReport {
    pub schema: String,
    pub ensemble_size: usize,
    pub radius: f64,
    pub seed: u64,
    pub times: Vec<f64>,
    /// Per-member `||U(t)||` at the stored times.
    pub norms: Vec<Vec<f64>>,
    pub envelope: EnvelopeFit,
    /// Radius of the candidate absorbing ball: `max(c2, late envelope) * (1 + margin)`.
    pub ball_radius: f64,
    pub margin: f64,
    /// First time after which the member stays inside the ball.
    pub entry_times: Vec<Option<f64>>,
    /// Members that never enter, or enter only inside the calibration window.
    pub flagged: Vec<usize>,
    /// Start of the late window used to calibrate `c2`.
    pub calibration_start: f64,
    pub all_entered: bool,
}

pub const ABSORBING_MARGIN: f64 = 0.1;
pub const CALIBRATION_SHARE: f64 = 0.2;

#[allow(clippy::too_many_arguments)]
pub fn absorbing_probe(
    params: &ModelParams,
    spec: &NonlinearitySpec,
    n_modes: usize,
    radius: f64,
    ensemble_size: usize,
    t_end: f64,
    dt: f64,
    stride: usize,
    seed: u64,
) -> Result<AbsorbingReport> {
    if !(radius > 0.0) || ensemble_size == 0 {
        return Err(Error::InvalidArgument("radius and ensemble size must be positive".into()));
    }
    let gen = assemble(params, n_modes)?;
    let initial = sample_ball(&gen, radius, ensemble_size, seed);
    let records: Vec<TrajectoryRecord> = initial
        .par_iter()
        .map(|u0| simulate_with(&gen, spec, u0, t_end, dt, stride))
        .collect::<Result<_>>()?;
    let metric = gen.metric();
    let times = records[0].times.clone();
    let norms: Vec<Vec<f64>> = records
        .iter()
        .map(|r| r.states.iter().map(|s| metric.norm(&s.to_vector())).collect())
        .collect();
    let envelope_series: Vec<f64> = (0..times.len())
        .map(|i| norms.iter().map(|n| n[i]).fold(0.0, f64::max))
        .collect();
    let envelope = fit_envelope(&times, &envelope_series, radius);

    let t_last = *times.last().unwrap_or(&0.0);
    let calibration_start = t_last * (1.0 - CALIBRATION_SHARE);
    let late_max = times
        .iter()
        .zip(&envelope_series)
        .filter(|(t, _)| **t >= calibration_start)
        .map(|(_, y)| *y)
        .fold(0.0, f64::max);
    let ball_radius = envelope.c2.max(late_max) * (1.0 + ABSORBING_MARGIN);
    let mut entry_times = Vec::with_capacity(ensemble_size);
    let mut flagged = Vec::new();
    for (m, series) in norms.iter().enumerate() {
        let last_out = series.iter().rposition(|x| *x > ball_radius);
        let entry = match last_out {
            None => Some(times[0]),
            Some(i) if i + 1 < times.len() => Some(times[i + 1]),
            Some(_) => None,
        };
        if entry.is_none_or(|t| t >= calibration_start) && entry != Some(times[0]) {
            flagged.push(m);
        }
        entry_times.push(entry);
    }
    Ok(AbsorbingReport {
        schema: "bridgelab.absorbing.v1".into(),
        ensemble_size,
        radius,
        seed,
        all_entered: flagged.is_empty(),
        times,
        norms,
        envelope,
        ball_radius,
        margin: ABSORBING_MARGIN,
        entry_times,
        flagged,
        calibration_start,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxCount {
    pub scale: f64,
    pub boxes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttractorReport {
    pub schema: String,
    pub ensemble_size: usize,
    pub t_star: f64,
    /// Final-time pairwise distances, row-major upper triangle included.
    pub pairwise_energy: Vec<Vec<f64>>,
    pub pairwise_h_minus1: Vec<Vec<f64>>,
    /// Per window `[k t*, (k+1) t*]`, the largest ratio `d(end) / d(start)` over pairs.
    pub contraction_factors: Vec<f64>,
    /// `sup_t ||B(U(t) - U'(t))||` over pairs, with `B` dropping velocities.
    pub seminorm: f64,
    /// `sup_t ||d/dt B U(t)||` over members.
    pub k_analogue: f64,
    /// Modal coordinates (scaled layout indices) used for box counting.
    pub projected_coords: Vec<usize>,
    pub box_counts: Vec<BoxCount>,
    pub dimension_estimate: f64,
    pub cloud_diameter: f64,
}

/// Below this diameter the late cloud counts as a single point.
pub const SINGLETON_DIAMETER: f64 = 1e-9;

#[allow(clippy::too_many_arguments)]
pub fn attractor_probe(
    params: &ModelParams,
    spec: &NonlinearitySpec,
    ensemble: &[ModalState],
    t_end: f64,
    dt: f64,
    t_star: f64,
    stride: usize,
) -> Result<AttractorReport> {
    let n = ensemble.first().ok_or(Error::InvalidArgument("empty ensemble".into()))?.n_modes();
    let gen = assemble(params, n)?;
    if !(t_star > 0.0) {
        return Err(Error::InvalidArgument("t* must be positive".into()));
    }
    let records: Vec<TrajectoryRecord> = ensemble
        .par_iter()
        .map(|u0| simulate_with(&gen, spec, u0, t_end, dt, stride))
        .collect::<Result<_>>()?;
    let metric = gen.metric();
    let times = &records[0].times;
    let vecs: Vec<Vec<DVector<f64>>> = records
        .iter()
        .map(|r| r.states.iter().map(|s| s.to_vector()).collect())
        .collect();
    let m = vecs.len();
    let last = times.len() - 1;

    let mut pe = vec![vec![0.0; m]; m];
    let mut ph = vec![vec![0.0; m]; m];
    let mut seminorm: f64 = 0.0;
    let mut dist_series: Vec<Vec<f64>> = Vec::new();
    for i in 0..m {
        for j in (i + 1)..m {
            let d = &vecs[i][last] - &vecs[j][last];
            pe[i][j] = metric.norm(&d);
            pe[j][i] = pe[i][j];
            ph[i][j] = gen.h_minus1_norm(&ModalState::from_vector(&d)?)?;
            ph[j][i] = ph[i][j];
            let series: Vec<f64> = (0..times.len())
                .map(|k| {
                    let diff = &vecs[i][k] - &vecs[j][k];
                    seminorm = seminorm.max(metric.norm(&displacements(&diff, n)));
                    metric.norm(&diff)
                })
                .collect();
            dist_series.push(series);
        }
    }

    let stored_dt = dt * stride as f64;
    let window = ((t_star / stored_dt).round() as usize).max(1);
    let mut contraction_factors = Vec::new();
    let mut start = 0;
    while start + window <= last {
        let f = dist_series
            .iter()
            .filter(|s| s[start] > 0.0)
            .map(|s| s[start + window] / s[start])
            .fold(0.0, f64::max);
        contraction_factors.push(f);
        start += window;
    }

    let mut k_analogue: f64 = 0.0;
    for v in &vecs {
        for k in 1..v.len() {
            let rate = (&v[k] - &v[k - 1]) / stored_dt;
            k_analogue = k_analogue.max(metric.norm(&displacements(&rate, n)));
        }
    }

    // late cloud in scaled coordinates
    let late_from = times.len() - 1 - (CALIBRATION_SHARE * last as f64).floor() as usize;
    let cloud: Vec<DVector<f64>> = vecs
        .iter()
        .flat_map(|v| v[late_from..].iter().map(|u| metric.to_scaled(u)))
        .collect();
    let (coords, counts, dim, diameter) = box_count(&cloud);
    Ok(AttractorReport {
        schema: "bridgelab.attractor.v1".into(),
        ensemble_size: m,
        t_star,
        pairwise_energy: pe,
        pairwise_h_minus1: ph,
        contraction_factors,
        seminorm,
        k_analogue,
        projected_coords: coords,
        box_counts: counts,
        dimension_estimate: dim,
        cloud_diameter: diameter,
    })
}

fn displacements(u: &DVector<f64>, n: usize) -> DVector<f64> {
    let mut d = u.clone();
    d.rows_mut(n, n).fill(0.0);
    d.rows_mut(3 * n, n).fill(0.0);
    d
}

/// Box counting over three halvings in the 2 to 6 highest-variance coordinates.
fn box_count(cloud: &[DVector<f64>]) -> (Vec<usize>, Vec<BoxCount>, f64, f64) {
    if cloud.is_empty() {
        return (vec![], vec![], 0.0, 0.0);
    }
    let dim = cloud[0].len();
    let n = cloud.len() as f64;
    let mean = cloud.iter().fold(DVector::zeros(dim), |acc, x| acc + x) / n;
    let mut var: Vec<(usize, f64)> = (0..dim)
        .map(|c| (c, cloud.iter().map(|x| (x[c] - mean[c]).powi(2)).sum::<f64>() / n))
        .collect();
    var.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let total: f64 = var.iter().map(|v| v.1).sum();
    let mut k = 2;
    let mut acc = var[0].1 + var.get(1).map_or(0.0, |v| v.1);
    while k < 6.min(dim) && acc < 0.99 * total {
        acc += var[k].1;
        k += 1;
    }
    let coords: Vec<usize> = var.iter().take(k.min(dim)).map(|v| v.0).collect();
    let lo: Vec<f64> = coords.iter().map(|&c| cloud.iter().map(|x| x[c]).fold(f64::INFINITY, f64::min)).collect();
    let hi: Vec<f64> = coords.iter().map(|&c| cloud.iter().map(|x| x[c]).fold(f64::NEG_INFINITY, f64::max)).collect();
    let extent = lo.iter().zip(&hi).map(|(a, b)| b - a).fold(0.0, f64::max);
    let mut diameter: f64 = 0.0;
    for (i, x) in cloud.iter().enumerate() {
        for y in &cloud[i + 1..] {
            diameter = diameter.max((x - y).norm());
        }
    }
    if diameter < SINGLETON_DIAMETER {
        let counts = (0..3).map(|s| BoxCount { scale: extent / 2f64.powi(s), boxes: 1 }).collect();
        return (coords, counts, 0.0, diameter);
    }
    let mut counts = Vec::new();
    for s in 0..3 {
        let eps = extent / 2f64.powi(s);
        let mut boxes: Vec<Vec<i64>> = cloud
            .iter()
            .map(|x| {
                coords
                    .iter()
                    .zip(&lo)
                    .map(|(&c, l)| (((x[c] - l) / eps).floor() as i64).min(2i64.pow(s as u32) - 1))
                    .collect()
            })
            .collect();
        boxes.sort();
        boxes.dedup();
        counts.push(BoxCount { scale: eps, boxes: boxes.len() });
    }
    let xs: Vec<f64> = counts.iter().map(|c| (1.0 / c.scale).ln()).collect();
    let ys: Vec<f64> = counts.iter().map(|c| (c.boxes as f64).ln()).collect();
    let mx = xs.iter().sum::<f64>() / 3.0;
    let my = ys.iter().sum::<f64>() / 3.0;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    (coords, counts, sxy / sxx, diameter)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::Family;
    use crate::params::DampingPoint;

    fn p13() -> ModelParams {
        ModelParams::unit(DampingPoint::ratio(1, 3))
    }

    fn smooth(n: usize) -> ModalState {
        let mut s = ModalState::zeros(n);
        for j in 0..n {
            s.a[j] = 0.5 / (1.0 + j as f64).powi(2);
            s.bdot[j] = 0.2 / (1.0 + j as f64).powi(2);
        }
        s
    }

    #[test]
    fn no_forcing_means_no_v() {
        let spring = NonlinearitySpec::new(Family::OneSidedSpring { k: 1.0 }, 1.0);
        for spec in [NonlinearitySpec::zero(), spring] {
            let rec = decompose(&p13(), &spec, &smooth(4), 0.5, 1e-2).unwrap();
            assert!(rec.v.iter().all(|v| v.to_vector().iter().all(|&x| x == 0.0)));
            assert_eq!(rec.additivity_defect, 0.0);
            let gen = assemble(&p13(), 4).unwrap();
            assert_eq!(lemaW_audit(&rec, &gen).ratio, 0.0);
        }
    }

    #[test]
    fn forcing_is_carried_by_v() {
        let n = 4;
        let forcing: Vec<f64> = (0..4 * n).map(|i| if i >= n && i < 2 * n { 0.3 } else { 0.0 }).collect();
        let spec = NonlinearitySpec::zero().with_forcing(forcing);
        let rec = decompose(&p13(), &spec, &smooth(n), 1.0, 1e-2).unwrap();
        assert!(rec.v[0].to_vector().iter().all(|&x| x == 0.0));
        assert!(rec.additivity_defect < 1e-14);
        assert!(rec.forcing_norm > 0.0);
    }

    #[test]
    fn envelope_recovers_exponential() {
        let times: Vec<f64> = (0..200).map(|i| i as f64 * 0.05).collect();
        let vals: Vec<f64> = times.iter().map(|t| 3.0 * (-0.7 * t).exp() * 2.0 + 0.5).collect();
        let fit = fit_envelope(&times, &vals, 2.0);
        assert!((fit.mu - 0.7).abs() < 1e-6, "{fit:?}");
        assert!((fit.c1 - 3.0).abs() < 1e-5);
        assert!((fit.c2 - 0.5).abs() < 1e-6);
        assert!(fit.residual < 1e-6);
    }

    #[test]
    fn ball_samples_respect_radius() {
        let gen = assemble(&p13(), 3).unwrap();
        let xs = sample_ball(&gen, 2.5, 50, 9);
        for x in &xs {
            assert!(gen.metric().norm(&x.to_vector()) <= 2.5 + 1e-12);
        }
        assert_eq!(xs, sample_ball(&gen, 2.5, 50, 9));
    }

    #[test]
    fn linear_attractor_is_a_point() {
        let gen = assemble(&p13(), 3).unwrap();
        let ens = sample_ball(&gen, 1.0, 4, 3);
        let rep = attractor_probe(&p13(), &NonlinearitySpec::zero(), &ens, 400.0, 0.01, 20.0, 50).unwrap();
        assert_eq!(rep.dimension_estimate, 0.0);
        assert!(rep.pairwise_energy.iter().flatten().all(|d| *d < 1e-9));
        assert!(rep.contraction_factors.iter().all(|f| *f < 1.0));
    }
}
