//! CFL-limited explicit second-order Runge–Kutta (Heun) time stepping.

use crate::error::{Error, Result};
use crate::flow::FluxFunction;
use crate::grid::{CellField, Grid2D, VertexVelocityField};
use crate::scheme::Tendency;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CflPolicy {
    /// Safety factor, strictly inside (0, 1/2).
    pub sigma: f64,
    pub dt_min: f64,
    pub dt_max: f64,
}

impl Default for CflPolicy {
    fn default() -> Self {
        Self {
            sigma: 0.45,
            dt_min: 0.0,
            dt_max: 365.0,
        }
    }
}

impl CflPolicy {
    pub fn new(sigma: f64, dt_min: f64, dt_max: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma < 0.5) {
            return Err(Error::Config(format!("CFL factor must lie in (0, 0.5), got {sigma}")));
        }
        if !(dt_min >= 0.0 && dt_max > 0.0 && dt_min <= dt_max) {
            return Err(Error::Config(format!(
                "need 0 <= dt_min <= dt_max and dt_max > 0, got [{dt_min}, {dt_max}]"
            )));
        }
        Ok(Self { sigma, dt_min, dt_max })
    }

    /// `σ · min(dx / max|v^x f'|, dy / max|v^y f'|)`, clamped to
    /// `[dt_min, dt_max]`; `dt_max` when nothing moves.
    pub fn dt_from_speeds(&self, grid: &Grid2D, speed_x: f64, speed_y: f64) -> f64 {
        let mut dt = f64::INFINITY;
        if speed_x > 0.0 {
            dt = dt.min(grid.dx() / speed_x);
        }
        if speed_y > 0.0 {
            dt = dt.min(grid.dy() / speed_y);
        }
        if dt.is_infinite() {
            return self.dt_max;
        }
        (self.sigma * dt).clamp(self.dt_min, self.dt_max)
    }
}

/// Time step from the vertex velocities and `max|f'|` over the saturation
/// range `[min S, max S]` of the current state.
pub fn cfl_dt<F: FluxFunction>(s: &CellField, v: &VertexVelocityField, model: &F, policy: &CflPolicy) -> f64 {
    let (vx, vy) = v.max_abs();
    let fmax = state_wave_speed(s, model);
    policy.dt_from_speeds(v.grid(), vx * fmax, vy * fmax)
}

/// `max|f'|` over `[min S, max S]`.
pub fn state_wave_speed<F: FluxFunction>(s: &CellField, model: &F) -> f64 {
    model.wave_speed_bound(s.min(), s.max())
}

/// Result of one Heun step.
#[derive(Clone, Debug)]
pub struct Step {
    pub state: CellField,
    /// Water volume that entered the domain during the step, consistent
    /// with the update: `dt·(q(S) + q(S¹))/2`.
    pub water_in: f64,
}

/// Heun's method: `S¹ = S + dt·L(S)`, `S_next = (S + S¹ + dt·L(S¹)) / 2`.
pub fn rk2_step(s: &CellField, dt: f64, mut rhs: impl FnMut(&CellField) -> Tendency) -> Result<Step> {
    let k1 = rhs(s);
    let stage = s.lin_comb(1.0, &k1.rate, dt);
    let k2 = rhs(&stage);
    let mut next = stage;
    for ((out, &s0), &r) in next.values_mut().iter_mut().zip(s.values()).zip(k2.rate.values()) {
        *out = 0.5 * (s0 + (*out + dt * r));
    }
    if !next.all_finite() {
        return Err(Error::NonFinite);
    }
    Ok(Step {
        state: next,
        water_in: 0.5 * dt * (k1.water_inflow + k2.water_inflow),
    })
}

/// Outcome of [`advance`].
#[derive(Clone, Debug)]
pub struct Advance {
    pub state: CellField,
    pub steps: usize,
    pub water_in: f64,
}

/// Steps from `t_now` to `t_target` with `dt` recomputed every micro-step by
/// `dt_fn`, clipping the last step to land on `t_target` exactly.
pub fn advance(
    s: &CellField,
    t_now: f64,
    t_target: f64,
    mut rhs: impl FnMut(&CellField) -> Tendency,
    mut dt_fn: impl FnMut(&CellField) -> f64,
    max_steps: usize,
) -> Result<Advance> {
    let mut out = Advance {
        state: s.clone(),
        steps: 0,
        water_in: 0.0,
    };
    let mut t = t_now;
    while t < t_target {
        if out.steps >= max_steps {
            return Err(Error::StepLimit { limit: max_steps });
        }
        let dt = dt_fn(&out.state);
        let (dt, t_next) = if t + dt >= t_target { (t_target - t, t_target) } else { (dt, t + dt) };
        let step = rk2_step(&out.state, dt, &mut rhs)?;
        out.state = step.state;
        out.water_in += step.water_in;
        out.steps += 1;
        t = t_next;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{LinearFlux, RockFluidModel};

    fn uniform_rhs(lambda: f64) -> impl FnMut(&CellField) -> Tendency {
        move |s: &CellField| Tendency {
            rate: s.map(|v| lambda * v),
            water_inflow: 0.0,
        }
    }

    fn grid() -> Grid2D {
        Grid2D::new(2, 2, 1.0, 1.0).unwrap()
    }

    #[test]
    fn policy_validation() {
        assert!(CflPolicy::new(0.5, 0.0, 1.0).is_err());
        assert!(CflPolicy::new(0.0, 0.0, 1.0).is_err());
        assert!(CflPolicy::new(0.3, 2.0, 1.0).is_err());
        assert!(CflPolicy::new(0.45, 0.0, 1.0).is_ok());
    }

    #[test]
    fn cfl_arithmetic() {
        let p = CflPolicy::new(0.45, 0.0, 100.0).unwrap();
        let g = grid();
        assert!((p.dt_from_speeds(&g, 2.0, 1.0) - 0.225).abs() < 1e-15);
        assert_eq!(p.dt_from_speeds(&g, 0.0, 0.0), 100.0);
        let dt1 = p.dt_from_speeds(&g, 0.5, 0.25);
        let dt2 = p.dt_from_speeds(&g, 1.0, 0.5);
        assert_eq!(dt1, 2.0 * dt2);
    }

    #[test]
    fn cfl_from_vertex_velocities() {
        let g = grid();
        let p = CflPolicy::default();
        let s = CellField::constant(g, 0.5);
        let m = RockFluidModel::reference();
        assert_eq!(cfl_dt(&s, &VertexVelocityField::zeros(g), &m, &p), p.dt_max);
        let v = VertexVelocityField::uniform(g, 2.0, -1.0);
        assert!((cfl_dt(&s, &v, &LinearFlux, &p) - 0.225).abs() < 1e-15);
        let dt = cfl_dt(&s, &v, &m, &p);
        assert!((dt - 0.45 / (2.0 * m.dfds(0.5).abs())).abs() < 1e-15);
        // A range containing the inflection point of f' sees the peak speed.
        let wide = CellField::from_values(g, vec![0.21, 0.5, 0.7, 0.85]).unwrap();
        let dt = cfl_dt(&wide, &v, &m, &p);
        assert!((dt - 0.45 / (2.0 * m.max_wave_speed())).abs() < 1e-15);
    }

    #[test]
    fn heun_special_cases() {
        let g = grid();
        let s = CellField::from_values(g, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let zero = |s: &CellField| Tendency {
            rate: CellField::zeros(*s.grid()),
            water_inflow: 0.0,
        };
        assert_eq!(rk2_step(&s, 0.3, zero).unwrap().state, s);

        let c = CellField::from_values(g, vec![1.0, -2.0, 0.5, 0.25]).unwrap();
        let cc = c.clone();
        let step = rk2_step(&s, 0.5, move |_| Tendency {
            rate: cc.clone(),
            water_inflow: 2.0,
        })
        .unwrap();
        for i in 0..4 {
            assert!((step.state.values()[i] - (s.values()[i] + 0.5 * c.values()[i])).abs() < 1e-15);
        }
        assert_eq!(step.water_in, 1.0);

        let one = CellField::constant(g, 1.0);
        let next = rk2_step(&one, 0.1, uniform_rhs(-1.0)).unwrap();
        assert!(next.state.values().iter().all(|&v| (v - 0.905).abs() < 1e-15));
    }

    #[test]
    fn non_finite_state_is_reported() {
        let g = grid();
        let s = CellField::constant(g, 1.0);
        let r = rk2_step(&s, 1.0, |s: &CellField| Tendency {
            rate: s.map(|_| f64::NAN),
            water_inflow: 0.0,
        });
        assert!(matches!(r, Err(Error::NonFinite)));
    }

    #[test]
    fn heun_is_second_order() {
        let g = grid();
        let s0 = CellField::constant(g, 1.0);
        let horizon: f64 = 1.0;
        let exact = (-horizon).exp();
        let errors: Vec<f64> = [0.1, 0.05, 0.025, 0.0125]
            .iter()
            .map(|&dt| {
                let n = (horizon / dt).round() as usize;
                let adv = advance(&s0, 0.0, horizon, uniform_rhs(-1.0), |_| dt, n + 1).unwrap();
                (adv.state.values()[0] - exact).abs()
            })
            .collect();
        for w in errors.windows(2) {
            let rate = (w[0] / w[1]).log2();
            assert!((rate - 2.0).abs() <= 0.1, "rate {rate}");
        }
    }

    #[test]
    fn advance_edge_cases() {
        let g = grid();
        let s = CellField::constant(g, 0.3);
        let adv = advance(&s, 2.0, 2.0, uniform_rhs(1.0), |_| 0.1, 10).unwrap();
        assert_eq!(adv.steps, 0);
        assert_eq!(adv.state, s);

        // No flow: a single clipped step.
        let zero = |s: &CellField| Tendency {
            rate: CellField::zeros(*s.grid()),
            water_inflow: 0.0,
        };
        let adv = advance(&s, 0.0, 5.0, zero, |_| 365.0, 10).unwrap();
        assert_eq!(adv.steps, 1);
        assert_eq!(adv.state, s);

        let err = advance(&s, 0.0, 1.0, uniform_rhs(0.0), |_| 0.01, 5).unwrap_err();
        assert!(matches!(err, Error::StepLimit { limit: 5 }));
    }

    #[test]
    fn advance_lands_on_target() {
        let g = grid();
        let s = CellField::constant(g, 1.0);
        let adv = advance(&s, 0.0, 1.0, uniform_rhs(-1.0), |_| 0.3, 100).unwrap();
        assert_eq!(adv.steps, 4);
        // Three steps of 0.3 then a clipped step of 0.1.
        let heun = |dt: f64| 1.0 - dt + 0.5 * dt * dt;
        let expected = heun(0.3).powi(3) * heun(0.1);
        assert!((adv.state.values()[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn deterministic() {
        let g = grid();
        let s = CellField::from_values(g, vec![0.3, 0.1, 0.7, 0.2]).unwrap();
        let a = advance(&s, 0.0, 1.3, uniform_rhs(-0.7), |_| 0.07, 100).unwrap();
        let b = advance(&s, 0.0, 1.3, uniform_rhs(-0.7), |_| 0.07, 100).unwrap();
        for (x, y) in a.state.values().iter().zip(b.state.values()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }
}
