//! Exact characteristics solver for the decoupled damped wave
//! `v_tt - beta0 v_xx + gamma v_t(xi) delta_xi = 0`.
//!
//! In the invariants `p = v_t - k1 v_x` (right-going) and `q = v_t + k1 v_x`
//! (left-going) the equation is pure transport. With `dt = dx / k1` each step
//! shifts `p` right and `q` left by one cell, so the only arithmetic happens at
//! the two boundaries and at the damper, where incoming invariants scatter.
//!
//! The damper jump is `[[beta0 v_x]] = +gamma v_t(xi)` (the sign obtained by
//! integrating the distributional equation across `xi`). With `[[f]] = f(xi+) - f(xi-)`
//! this reads `[[p + q]] = 0`, `[[q - p]] = (gamma/k1)(p + q)(xi)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ModelParams;

/// `(p, q) = (v_t - k1 v_x, v_t + k1 v_x)`.
pub fn to_riemann(v_x: f64, v_t: f64, k1: f64) -> (f64, f64) {
    (v_t - k1 * v_x, v_t + k1 * v_x)
}

/// `(v_t, v_x) = ((p + q)/2, (q - p)/(2 k1))`.
pub fn from_riemann(p: f64, q: f64, k1: f64) -> (f64, f64) {
    (0.5 * (p + q), (q - p) / (2.0 * k1))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatterCoefficients {
    /// `p(xi-)`, arriving from the left.
    pub a: f64,
    /// `q(xi+)`, arriving from the right.
    pub d: f64,
    /// `p(xi+)`, leaving to the right.
    pub b: f64,
    /// `q(xi-)`, leaving to the left.
    pub c: f64,
    /// `gamma / k1`.
    pub ratio: f64,
}

impl ScatterCoefficients {
    /// `v_t(xi) = (b + d)/2 = (a + c)/2`.
    pub fn velocity_at_damper(&self) -> f64 {
        0.5 * (self.b + self.d)
    }

    /// `(k1/4)(a^2 + d^2 - b^2 - c^2) - gamma v_t(xi)^2`; zero up to rounding.
    pub fn power_balance_defect(&self, k1: f64) -> f64 {
        let gamma = self.ratio * k1;
        0.25 * k1 * (self.a * self.a + self.d * self.d - self.b * self.b - self.c * self.c)
            - gamma * self.velocity_at_damper().powi(2)
    }
}

/// Outgoing invariants at the damper from the incoming ones.
pub fn scatter_at_damping(a: f64, d: f64, gamma: f64, k1: f64) -> ScatterCoefficients {
    let g = gamma / k1;
    let b = (2.0 * a - g * d) / (2.0 + g);
    let c = (2.0 * d - g * a) / (2.0 + g);
    ScatterCoefficients { a, d, b, c, ratio: g }
}

/// Invariants entering the domain at the two ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GhostValues {
    /// `p(0) = -q(0)` from `v(0) = 0`.
    pub p_left: f64,
    /// `q(ell) = p(ell)` from `v_x(ell) = 0`.
    pub q_right: f64,
}

pub fn boundary_closure(field: &RiemannField) -> GhostValues {
    GhostValues {
        p_left: -field.q[0],
        q_right: field.p[field.p.len() - 1],
    }
}

/// Cell averages of `(p, q)` on a grid with `xi` and `ell` on cell edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiemannField {
    pub dx: f64,
    pub ell: f64,
    /// Number of cells in `(0, xi)`.
    pub xi_cells: usize,
    pub k1: f64,
    pub gamma: f64,
    pub t: f64,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

impl RiemannField {
    /// Zero field on `cells` uniform cells; fails unless `xi` lands on an edge.
    pub fn zeros(params: &ModelParams, cells: usize) -> Result<Self> {
        let params = params.validate()?;
        if cells < 2 {
            return Err(Error::InvalidArgument("need at least two cells".into()));
        }
        let dx = params.ell / cells as f64;
        let xi = params.xi_position();
        let xi_cells = (xi / dx).round() as usize;
        if (xi - xi_cells as f64 * dx).abs() > 1e-9 * params.ell || xi_cells == 0 || xi_cells >= cells {
            return Err(Error::IncommensurableXi { xi, dx });
        }
        Ok(RiemannField {
            dx,
            ell: params.ell,
            xi_cells,
            k1: params.k1(),
            gamma: params.gamma,
            t: 0.0,
            p: vec![0.0; cells],
            q: vec![0.0; cells],
        })
    }

    /// Field from `v` at the `cells + 1` edges and `v_t` at the cell midpoints;
    /// `v_x` is the edge difference, exact as a cell average.
    pub fn from_displacement(
        params: &ModelParams,
        v_edges: &[f64],
        v_t_mid: &[f64],
    ) -> Result<Self> {
        let cells = v_t_mid.len();
        if v_edges.len() != cells + 1 {
            return Err(Error::DimensionMismatch {
                expected: cells + 1,
                got: v_edges.len(),
            });
        }
        let mut f = RiemannField::zeros(params, cells)?;
        for i in 0..cells {
            let v_x = (v_edges[i + 1] - v_edges[i]) / f.dx;
            let (p, q) = to_riemann(v_x, v_t_mid[i], f.k1);
            f.p[i] = p;
            f.q[i] = q;
        }
        Ok(f)
    }

    pub fn cells(&self) -> usize {
        self.p.len()
    }

    pub fn dt(&self) -> f64 {
        self.dx / self.k1
    }

    pub fn midpoints(&self) -> Vec<f64> {
        (0..self.cells()).map(|i| (i as f64 + 0.5) * self.dx).collect()
    }

    /// `(dx/4) sum (p^2 + q^2)`.
    pub fn energy(&self) -> f64 {
        0.25 * self.dx * self.p.iter().chain(&self.q).map(|x| x * x).sum::<f64>()
    }

    pub fn velocity(&self) -> Vec<f64> {
        self.p.iter().zip(&self.q).map(|(p, q)| 0.5 * (p + q)).collect()
    }

    /// `v` at the cell edges, integrating `v_x` from `v(0) = 0`.
    pub fn displacement_edges(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.cells() + 1);
        let mut acc = 0.0;
        v.push(acc);
        for (p, q) in self.p.iter().zip(&self.q) {
            acc += self.dx * from_riemann(*p, *q, self.k1).1;
            v.push(acc);
        }
        v
    }

    /// One exact transport step; returns the scattering event at the damper.
    pub fn step(&mut self) -> ScatterCoefficients {
        let m = self.cells();
        let s = self.xi_cells;
        let ghost = boundary_closure(self);
        let sc = scatter_at_damping(self.p[s - 1], self.q[s], self.gamma, self.k1);
        // right-going
        for i in (1..m).rev() {
            self.p[i] = self.p[i - 1];
        }
        self.p[0] = ghost.p_left;
        self.p[s] = sc.b;
        // left-going
        for i in 0..m - 1 {
            self.q[i] = self.q[i + 1];
        }
        self.q[m - 1] = ghost.q_right;
        self.q[s - 1] = sc.c;
        self.t += self.dt();
        sc
    }
}

/// Advances `n_steps` exact steps; returns the scattering events in order.
pub fn advance_exact(field: &mut RiemannField, n_steps: usize) -> Vec<ScatterCoefficients> {
    (0..n_steps).map(|_| field.step()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharSnapshot {
    pub t: f64,
    /// `v` at the cell midpoints (mean of the bounding edges).
    pub v: Vec<f64>,
    pub v_t: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharTrajectory {
    pub x: Vec<f64>,
    pub dt: f64,
    pub snapshots: Vec<CharSnapshot>,
    /// `(t, E)` after every step, starting at `t = 0`.
    pub energy: Vec<(f64, f64)>,
    /// `dt * gamma * v_t(xi)^2` per step.
    pub dissipated: Vec<f64>,
}

fn snapshot(field: &RiemannField) -> CharSnapshot {
    let edges = field.displacement_edges();
    CharSnapshot {
        t: field.t,
        v: edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect(),
        v_t: field.velocity(),
    }
}

/// Runs the decoupled wave from `v0` (edges) and `v1` (midpoints) up to `t_end`,
/// storing a snapshot every `stride` steps. Requires `k = 0`.
pub fn run_characteristics(
    params: &ModelParams,
    v0_edges: &[f64],
    v1_mid: &[f64],
    t_end: f64,
    stride: usize,
) -> Result<CharTrajectory> {
    if params.k != 0.0 {
        return Err(Error::CoupledRegime(params.k));
    }
    let mut field = RiemannField::from_displacement(params, v0_edges, v1_mid)?;
    let dt = field.dt();
    let n_steps = (t_end / dt + 1e-9).floor() as usize;
    let stride = stride.max(1);
    let mut traj = CharTrajectory {
        x: field.midpoints(),
        dt,
        snapshots: vec![snapshot(&field)],
        energy: vec![(0.0, field.energy())],
        dissipated: Vec::with_capacity(n_steps),
    };
    for n in 1..=n_steps {
        let sc = field.step();
        traj.dissipated
            .push(dt * field.gamma * sc.velocity_at_damper().powi(2));
        traj.energy.push((field.t, field.energy()));
        if n % stride == 0 {
            traj.snapshots.push(snapshot(&field));
        }
    }
    Ok(traj)
}

/// Edge and midpoint samples of `v0`, `v1` for [`run_characteristics`].
pub fn sample_initial_data<F, G>(ell: f64, cells: usize, v0: F, v1: G) -> (Vec<f64>, Vec<f64>)
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    let dx = ell / cells as f64;
    let edges = (0..=cells).map(|i| v0(i as f64 * dx)).collect();
    let mids = (0..cells).map(|i| v1((i as f64 + 0.5) * dx)).collect();
    (edges, mids)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::DampingPoint;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn wave(xi: DampingPoint, gamma: f64) -> ModelParams {
        ModelParams::unit(xi).with_coupling(0.0).with_damping(gamma, 0.0)
    }

    #[test]
    fn riemann_examples() {
        assert_eq!(to_riemann(0.0, 1.0, 1.0), (1.0, 1.0));
        assert_eq!(to_riemann(1.0, 0.0, 1.0), (-1.0, 1.0));
    }

    proptest! {
        #[test]
        fn riemann_round_trip(vx in -10.0f64..10.0, vt in -10.0f64..10.0, k1 in 0.1f64..5.0) {
            let (p, q) = to_riemann(vx, vt, k1);
            let (vt2, vx2) = from_riemann(p, q, k1);
            prop_assert!((vt - vt2).abs() <= 1e-12 * (1.0 + vt.abs()));
            prop_assert!((vx - vx2).abs() <= 1e-12 * (1.0 + vx.abs()));
        }
    }

    #[test]
    fn scatter_without_damping_is_transparent() {
        let s = scatter_at_damping(0.7, -1.3, 0.0, 2.0);
        assert_eq!((s.b, s.c), (0.7, -1.3));
    }

    #[test]
    fn scatter_unit_ratio_by_hand() {
        // [[p+q]] = 0 and [[q-p]] = (p+q)(xi+) with a = 1, d = 0:
        // b = c + 1 and -b - c + 1 = b  =>  b = 2/3, c = -1/3
        let s = scatter_at_damping(1.0, 0.0, 1.0, 1.0);
        assert!((s.b - 2.0 / 3.0).abs() < 1e-15);
        assert!((s.c + 1.0 / 3.0).abs() < 1e-15);
        let dissipated = 0.25 * (1.0 - s.b * s.b - s.c * s.c);
        assert!((dissipated - 1.0 / 9.0).abs() < 1e-15);
        assert!((s.velocity_at_damper() - 1.0 / 3.0).abs() < 1e-15);
        assert!(s.power_balance_defect(1.0).abs() < 1e-15);
    }

    #[test]
    fn scatter_contracts_unless_velocity_vanishes() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10_000 {
            let a: f64 = rng.random_range(-5.0..5.0);
            let d: f64 = rng.random_range(-5.0..5.0);
            let g: f64 = rng.random_range(1e-3..10.0);
            let s = scatter_at_damping(a, d, g, 1.0);
            let out = s.b * s.b + s.c * s.c;
            let inc = a * a + d * d;
            if (a + s.c).abs() > 1e-9 {
                assert!(out < inc);
            } else {
                assert!(out <= inc + 1e-12);
            }
        }
    }

    #[test]
    fn boundary_ghosts() {
        let p = wave(DampingPoint::ratio(1, 2), 0.0);
        let mut f = RiemannField::zeros(&p, 4).unwrap();
        f.q[0] = 1.0;
        f.p[3] = 2.0;
        let g = boundary_closure(&f);
        assert_eq!(g.p_left, -1.0);
        assert_eq!(g.q_right, 2.0);
        let z = RiemannField::zeros(&p, 4).unwrap();
        let g = boundary_closure(&z);
        assert_eq!((g.p_left, g.q_right), (0.0, 0.0));
    }

    #[test]
    fn incommensurable_grid_is_rejected() {
        let p = wave(DampingPoint::ratio(1, 3), 0.5);
        assert!(matches!(
            RiemannField::zeros(&p, 10),
            Err(Error::IncommensurableXi { .. })
        ));
        assert!(RiemannField::zeros(&p, 9).is_ok());
        let coupled = p.with_coupling(1.0);
        assert!(matches!(
            run_characteristics(&coupled, &[0.0; 10], &[0.0; 9], 1.0, 1),
            Err(Error::CoupledRegime(_))
        ));
    }

    // Brute-force oracle on 8 cells: move every invariant sample along its
    // characteristic, one cell per step, flipping direction at the walls.
    fn brute_force_period(p0: &[f64], q0: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let m = p0.len();
        // (position, direction, value): direction +1 carries p, -1 carries q
        let mut packets: Vec<(i64, i64, f64)> = Vec::new();
        for i in 0..m {
            packets.push((i as i64, 1, p0[i]));
            packets.push((i as i64, -1, q0[i]));
        }
        for _ in 0..2 * m {
            for pk in packets.iter_mut() {
                let next = pk.0 + pk.1;
                if next < 0 {
                    // left wall: q -> p with sign flip
                    pk.1 = 1;
                    pk.2 = -pk.2;
                } else if next >= m as i64 {
                    // right wall: p -> q unchanged
                    pk.1 = -1;
                } else {
                    pk.0 = next;
                }
            }
        }
        let mut p = vec![0.0; m];
        let mut q = vec![0.0; m];
        for (pos, dir, val) in packets {
            if dir == 1 {
                p[pos as usize] += val;
            } else {
                q[pos as usize] += val;
            }
        }
        (p, q)
    }

    #[test]
    fn undamped_round_trip_matches_brute_force() {
        let p = wave(DampingPoint::ratio(3, 8), 0.0);
        let mut f = RiemannField::zeros(&p, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for i in 0..8 {
            f.p[i] = rng.random_range(-1.0..1.0);
            f.q[i] = rng.random_range(-1.0..1.0);
        }
        let (ep, eq) = brute_force_period(&f.p, &f.q);
        advance_exact(&mut f, 16);
        for i in 0..8 {
            assert!((f.p[i] - ep[i]).abs() < 1e-15);
            assert!((f.q[i] - eq[i]).abs() < 1e-15);
        }
        // two reflections compose to a sign flip after 2 ell / k1
        let mut g = RiemannField::zeros(&p, 8).unwrap();
        g.p[2] = 1.0;
        let before = g.clone();
        advance_exact(&mut g, 16);
        assert_eq!(g.p[2], -before.p[2]);
    }

    #[test]
    fn pulse_splits_at_damper() {
        let p = wave(DampingPoint::ratio(1, 2), 1.0);
        let mut f = RiemannField::zeros(&p, 10).unwrap();
        f.p[4] = 1.0; // cell just left of xi
        f.step();
        assert!((f.p[5] - 2.0 / 3.0).abs() < 1e-15);
        assert!((f.q[4] + 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn zero_field_stays_zero() {
        let p = wave(DampingPoint::ratio(1, 3), 0.5);
        let mut f = RiemannField::zeros(&p, 9).unwrap();
        advance_exact(&mut f, 50);
        assert!(f.p.iter().chain(&f.q).all(|&x| x == 0.0));
    }

    #[test]
    fn per_step_energy_identity_and_continuity() {
        let p = wave(DampingPoint::ratio(1, 3), 0.8);
        let mut f = RiemannField::zeros(&p, 30).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for i in 0..30 {
            f.p[i] = rng.random_range(-1.0..1.0);
            f.q[i] = rng.random_range(-1.0..1.0);
        }
        for _ in 0..200 {
            let e0 = f.energy();
            let sc = f.step();
            let e1 = f.energy();
            let loss = f.dt() * p.gamma * sc.velocity_at_damper().powi(2);
            assert!((e1 - e0 + loss).abs() < 1e-12);
            assert!(((sc.a + sc.c) - (sc.b + sc.d)).abs() < 1e-12);
        }
    }

    #[test]
    fn conservative_run_keeps_energy() {
        let p = wave(DampingPoint::ratio(1, 3), 0.0);
        let (v0, v1) = sample_initial_data(1.0, 60, |x| (std::f64::consts::PI * x / 2.0).sin(), |x| x * (1.0 - x));
        let tr = run_characteristics(&p, &v0, &v1, 3.0, 10).unwrap();
        let e0 = tr.energy[0].1;
        assert!(tr.energy.iter().all(|(_, e)| (e - e0).abs() <= 1e-12 * e0));
    }

    #[test]
    fn invisible_mode_keeps_energy() {
        let p = wave(DampingPoint::ratio(2, 3), 1.0);
        let mu = 1.5 * std::f64::consts::PI;
        let (v0, v1) = sample_initial_data(1.0, 300, |x| (mu * x).sin(), |_| 0.0);
        let tr = run_characteristics(&p, &v0, &v1, 2.0, 50).unwrap();
        let e0 = tr.energy[0].1;
        let worst = tr.energy.iter().map(|(_, e)| (e - e0).abs()).fold(0.0, f64::max);
        assert!(worst <= 1e-10 * e0, "{worst}");
    }

    #[test]
    fn generic_data_decays() {
        let p = wave(DampingPoint::ratio(1, 3), 0.5);
        let (v0, v1) = sample_initial_data(1.0, 300, |x| x * (1.0 - x / 2.0), |x| (3.0 * x).sin());
        let tr = run_characteristics(&p, &v0, &v1, 4.0, 100).unwrap();
        assert!(tr.energy.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-15));
        assert!(tr.energy.last().unwrap().1 < 0.9 * tr.energy[0].1);
        let total: f64 = tr.dissipated.iter().sum();
        assert!((tr.energy[0].1 - tr.energy.last().unwrap().1 - total).abs() < 1e-12);
    }
}
