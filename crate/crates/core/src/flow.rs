//! Constitutive closures of the two-phase model and the flux-function
//! abstraction the transport schemes are written against.

use crate::error::{Error, Result};

/// A scalar flux function `f(s)` with the wave-speed information needed by
/// central schemes.
pub trait FluxFunction: Sync {
    fn flux(&self, s: f64) -> f64;

    fn flux_derivative(&self, s: f64) -> f64;

    /// Upper bound of `|f'(s)|` for `s` between `a` and `b`.
    fn wave_speed_bound(&self, a: f64, b: f64) -> f64;

    /// `|f'(s)|`, equal to `wave_speed_bound(s, s)`.
    fn wave_speed(&self, s: f64) -> f64 {
        self.wave_speed_bound(s, s)
    }

    /// Part of [`wave_speed_bound`](Self::wave_speed_bound) that comes from
    /// strictly inside the interval, so that
    /// `wave_speed_bound(a, b) == max(wave_speed(a), wave_speed(b), interior_speed_bound(a, b))`.
    /// Lets callers evaluate the endpoint terms once per cell.
    fn interior_speed_bound(&self, a: f64, b: f64) -> f64 {
        self.wave_speed_bound(a, b)
    }

    /// `max |f'|` over every admissible state.
    fn max_wave_speed(&self) -> f64;
}

/// Linear flux `f(s) = s`; used by the convergence studies.
#[derive(Clone, Copy, Debug, Default)]
pub struct LinearFlux;

impl FluxFunction for LinearFlux {
    fn flux(&self, s: f64) -> f64 {
        s
    }

    fn flux_derivative(&self, _s: f64) -> f64 {
        1.0
    }

    fn wave_speed_bound(&self, _a: f64, _b: f64) -> f64 {
        1.0
    }

    fn max_wave_speed(&self) -> f64 {
        1.0
    }
}

/// Residual saturations and viscosities with quadratic relative
/// permeabilities
///
/// ```text
/// k_rw(s) = ((s - s_rw) / (1 - s_rw))²
/// k_ro(s) = (1 - s / (1 - s_ro))²
/// λ(s)    = k_rw/μ_w + k_ro/μ_o
/// f(s)    = (k_rw/μ_w) / λ(s)
/// ```
///
/// Saturations are clamped to `[s_rw, 1 - s_ro]` before evaluating the
/// closures, so `f` is flat outside the mobile range.
#[derive(Clone, Debug)]
pub struct RockFluidModel {
    s_rw: f64,
    s_ro: f64,
    mu_w: f64,
    mu_o: f64,
    /// Interior zeros of `f''`, ascending.
    /// `1 / ((1 - s_rw)² μ_w)` and `1 / μ_o`.
    cw: f64,
    co: f64,
    critical_points: Vec<f64>,
    /// `|f'|` at each critical point.
    critical_speeds: Vec<f64>,
    max_speed: f64,
}

const CRITICAL_SCAN_POINTS: usize = 4096;

impl RockFluidModel {
    pub fn new(s_rw: f64, s_ro: f64, mu_w: f64, mu_o: f64) -> Result<Self> {
        let ok = s_rw >= 0.0 && s_ro >= 0.0 && s_rw < 1.0 - s_ro && mu_w > 0.0 && mu_o > 0.0;
        if !ok || ![s_rw, s_ro, mu_w, mu_o].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "need 0 <= s_rw < 1 - s_ro <= 1 and positive viscosities \
                 (s_rw={s_rw}, s_ro={s_ro}, mu_w={mu_w}, mu_o={mu_o})"
            )));
        }
        let mut model = Self {
            s_rw,
            s_ro,
            mu_w,
            mu_o,
            cw: 1.0 / ((1.0 - s_rw) * (1.0 - s_rw) * mu_w),
            co: 1.0 / mu_o,
            critical_points: Vec::new(),
            critical_speeds: Vec::new(),
            max_speed: 0.0,
        };
        model.critical_points = model.find_critical_points();
        model.critical_speeds = model.critical_points.iter().map(|&c| model.dfds(c).abs()).collect();
        model.max_speed = model.wave_speed_bound(s_rw, 1.0 - s_ro);
        Ok(model)
    }

    /// `s_rw = 0.2`, `s_ro = 0.15`, `μ_w = 0.05 cP`, `μ_o = 10 cP`.
    pub fn reference() -> Self {
        Self::new(0.2, 0.15, 0.05, 10.0).expect("reference model is valid")
    }

    pub fn s_rw(&self) -> f64 {
        self.s_rw
    }

    pub fn s_ro(&self) -> f64 {
        self.s_ro
    }

    pub fn mu_w(&self) -> f64 {
        self.mu_w
    }

    pub fn mu_o(&self) -> f64 {
        self.mu_o
    }

    /// Upper end of the mobile range, `1 - s_ro`.
    pub fn s_max(&self) -> f64 {
        1.0 - self.s_ro
    }

    pub fn critical_points(&self) -> &[f64] {
        &self.critical_points
    }

    #[inline]
    fn clamp(&self, s: f64) -> f64 {
        s.clamp(self.s_rw, 1.0 - self.s_ro)
    }

    pub fn krw(&self, s: f64) -> f64 {
        let s = s.max(self.s_rw).min(1.0);
        let r = (s - self.s_rw) / (1.0 - self.s_rw);
        r * r
    }

    pub fn kro(&self, s: f64) -> f64 {
        let s = s.min(1.0 - self.s_ro).max(0.0);
        let r = 1.0 - s / (1.0 - self.s_ro);
        r * r
    }

    /// Total mobility `λ(s)`; strictly positive for any valid model.
    pub fn mobility(&self, s: f64) -> f64 {
        self.krw(s) / self.mu_w + self.kro(s) / self.mu_o
    }

    // Water and oil mobilities with their first two derivatives, on the
    // clamped mobile range.
    #[inline]
    fn phase_terms(&self, s: f64) -> ([f64; 3], [f64; 3]) {
        let cw = self.cw;
        let dw = s - self.s_rw;
        let a = [cw * dw * dw, 2.0 * cw * dw, 2.0 * cw];

        let so = 1.0 - self.s_ro;
        let r = 1.0 - s / so;
        let co = self.co;
        let b = [co * r * r, -2.0 * co * r / so, 2.0 * co / (so * so)];
        (a, b)
    }

    pub fn fractional_flow(&self, s: f64) -> f64 {
        let s = self.clamp(s);
        let (a, b) = self.phase_terms(s);
        a[0] / (a[0] + b[0])
    }

    /// Analytic `f'(s)`; zero outside the mobile range.
    pub fn dfds(&self, s: f64) -> f64 {
        if s <= self.s_rw || s >= 1.0 - self.s_ro {
            return 0.0;
        }
        let (a, b) = self.phase_terms(s);
        let lam = a[0] + b[0];
        (a[1] * b[0] - a[0] * b[1]) / (lam * lam)
    }

    /// Analytic `f''(s)` on the open mobile range.
    pub fn d2fds2(&self, s: f64) -> f64 {
        if s <= self.s_rw || s >= 1.0 - self.s_ro {
            return 0.0;
        }
        let (a, b) = self.phase_terms(s);
        let lam = a[0] + b[0];
        let num1 = a[1] * b[0] - a[0] * b[1];
        let dnum1 = a[2] * b[0] - a[0] * b[2];
        (dnum1 * lam - 2.0 * num1 * (a[1] + b[1])) / (lam * lam * lam)
    }

    fn find_critical_points(&self) -> Vec<f64> {
        let lo = self.s_rw;
        let hi = 1.0 - self.s_ro;
        let h = (hi - lo) / CRITICAL_SCAN_POINTS as f64;
        let mut roots = Vec::new();
        let mut prev_s = lo + 0.5 * h;
        let mut prev = self.d2fds2(prev_s);
        for i in 1..CRITICAL_SCAN_POINTS {
            let s = lo + (i as f64 + 0.5) * h;
            let val = self.d2fds2(s);
            if val == 0.0 {
                roots.push(s);
            } else if prev != 0.0 && (val > 0.0) != (prev > 0.0) {
                roots.push(self.bisect_curvature_root(prev_s, s));
            }
            prev_s = s;
            prev = val;
        }
        roots
    }

    fn bisect_curvature_root(&self, mut a: f64, mut b: f64) -> f64 {
        let fa_pos = self.d2fds2(a) > 0.0;
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            let fm = self.d2fds2(m);
            if fm == 0.0 {
                return m;
            }
            if (fm > 0.0) == fa_pos {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }
}

impl FluxFunction for RockFluidModel {
    fn flux(&self, s: f64) -> f64 {
        self.fractional_flow(s)
    }

    fn flux_derivative(&self, s: f64) -> f64 {
        self.dfds(s)
    }

    /// `max |f'|` over the interval, from its endpoints and the cached
    /// interior critical points of `f'`.
    fn wave_speed_bound(&self, a: f64, b: f64) -> f64 {
        let lo = self.clamp(a.min(b));
        let hi = self.clamp(a.max(b));
        let mut m = self.dfds(lo).abs().max(self.dfds(hi).abs());
        for (&c, &speed) in self.critical_points.iter().zip(&self.critical_speeds) {
            if c > lo && c < hi {
                m = m.max(speed);
            }
        }
        m
    }

    fn wave_speed(&self, s: f64) -> f64 {
        // dfds is zero outside the mobile range, so clamping is implied.
        self.dfds(s).abs()
    }

    fn interior_speed_bound(&self, a: f64, b: f64) -> f64 {
        let lo = self.clamp(a.min(b));
        let hi = self.clamp(a.max(b));
        let mut m = 0.0;
        for (&c, &speed) in self.critical_points.iter().zip(&self.critical_speeds) {
            if c > lo && c < hi {
                m = f64::max(m, speed);
            }
        }
        m
    }

    fn max_wave_speed(&self) -> f64 {
        self.max_speed
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn invalid_models_are_rejected() {
        assert!(RockFluidModel::new(0.5, 0.5, 1.0, 1.0).is_err());
        assert!(RockFluidModel::new(0.2, 0.15, 0.0, 1.0).is_err());
        assert!(RockFluidModel::new(-0.1, 0.15, 1.0, 1.0).is_err());
        assert!(RockFluidModel::new(0.2, 0.15, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn relative_permeability_values() {
        let m = RockFluidModel::reference();
        assert_eq!(m.krw(0.2), 0.0);
        assert_eq!(m.krw(0.1), 0.0);
        assert!((m.krw(1.0) - 1.0).abs() < 1e-15);
        assert!((m.krw(0.5) - 0.140625).abs() < 1e-15);

        assert_eq!(m.kro(0.0), 1.0);
        assert_eq!(m.kro(0.85), 0.0);
        assert_eq!(m.kro(0.95), 0.0);
        let expected = (1.0 - 0.5 / 0.85_f64).powi(2);
        assert!((m.kro(0.5) - expected).abs() < 1e-15);
        assert!((m.kro(0.5) - 0.169550).abs() < 1e-6);
    }

    #[test]
    fn fractional_flow_values() {
        let m = RockFluidModel::reference();
        assert_eq!(m.fractional_flow(0.2), 0.0);
        assert_eq!(m.fractional_flow(0.85), 1.0);
        // Exact rational value 130050/130834.
        assert!(rel(m.fractional_flow(0.5), 130050.0 / 130834.0) < 1e-13);
        assert!((m.fractional_flow(0.5) - 0.99401).abs() < 1e-5);
    }

    #[test]
    fn derivative_endpoints_vanish() {
        let m = RockFluidModel::reference();
        assert_eq!(m.dfds(0.2), 0.0);
        assert_eq!(m.dfds(0.85), 0.0);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let m = RockFluidModel::reference();
        let h = 1e-6;
        for i in 1..1000 {
            let s = 0.2 + 0.65 * i as f64 / 1000.0;
            if s - h <= 0.2 || s + h >= 0.85 {
                continue;
            }
            let fd = (m.fractional_flow(s + h) - m.fractional_flow(s - h)) / (2.0 * h);
            let d = m.dfds(s);
            assert!((d - fd).abs() <= 1e-6 * d.abs().max(1.0), "s={s}: {d} vs {fd}");

            let fd2 = (m.dfds(s + h) - m.dfds(s - h)) / (2.0 * h);
            let d2 = m.d2fds2(s);
            assert!((d2 - fd2).abs() <= 1e-5 * d2.abs().max(1.0), "s={s}: {d2} vs {fd2}");
        }
    }

    #[test]
    fn derivative_at_half_matches_difference_quotient() {
        let m = RockFluidModel::reference();
        let h = 1e-6;
        let fd = (m.fractional_flow(0.5 + h) - m.fractional_flow(0.5 - h)) / (2.0 * h);
        assert!(rel(m.dfds(0.5), fd) < 1e-6);
    }

    #[test]
    fn scan_of_ranges_and_monotonicity() {
        let m = RockFluidModel::reference();
        let mut prev = -1.0;
        for i in 0..=1000 {
            let s = i as f64 / 1000.0;
            let f = m.fractional_flow(s);
            assert!((0.0..=1.0).contains(&f));
            assert!(f >= prev);
            prev = f;
            assert!(m.mobility(s) > 0.0);
            assert!((0.0..=1.0).contains(&m.krw(s)));
            assert!((0.0..=1.0).contains(&m.kro(s)));
            assert!(m.dfds(s) >= 0.0);
        }
    }

    #[test]
    fn s_shaped_flux_has_one_inflection() {
        let m = RockFluidModel::reference();
        assert_eq!(m.critical_points().len(), 1);
        let c = m.critical_points()[0];
        assert!(c > 0.2 && c < 0.85);
        assert!(m.d2fds2(c).abs() < 1e-6 * m.d2fds2(c - 0.01).abs());
    }

    fn brute_force_bound(m: &RockFluidModel, a: f64, b: f64, n: usize) -> f64 {
        (0..=n)
            .map(|i| a + (b - a) * i as f64 / n as f64)
            .map(|s| m.dfds(s).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn wave_speed_bound_matches_dense_sampling() {
        let m = RockFluidModel::reference();
        let bound = m.wave_speed_bound(0.21, 0.85);
        let brute = brute_force_bound(&m, 0.21, 0.85, 100_000);
        assert!(bound >= brute);
        assert!(rel(bound, brute) < 1e-8, "{bound} vs {brute}");
        assert_eq!(m.wave_speed_bound(0.85, 0.21), bound);
        assert_eq!(m.max_wave_speed(), m.wave_speed_bound(0.0, 1.0));
    }

    #[test]
    fn wave_speed_bound_degenerate_intervals() {
        let m = RockFluidModel::reference();
        assert_eq!(m.wave_speed_bound(0.2, 0.2), 0.0);
        for s in [0.25, 0.4, 0.7] {
            assert_eq!(m.wave_speed_bound(s, s), m.dfds(s).abs());
        }
    }

    #[test]
    fn linear_flux_is_identity() {
        assert_eq!(LinearFlux.flux(0.3), 0.3);
        assert_eq!(LinearFlux.flux_derivative(0.3), 1.0);
        assert_eq!(LinearFlux.wave_speed_bound(0.1, 0.9), 1.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn max_characteristic_speed_dominates_shock_speed(a in 0.0f64..1.0, b in 0.0f64..1.0) {
                prop_assume!((a - b).abs() > 1e-9);
                let m = RockFluidModel::reference();
                let rh = (m.fractional_flow(b) - m.fractional_flow(a)).abs() / (b - a).abs();
                prop_assert!(m.wave_speed_bound(a, b) >= rh * (1.0 - 1e-12));
            }

            #[test]
            fn bound_covers_interior_samples(a in 0.0f64..1.0, b in 0.0f64..1.0) {
                let m = RockFluidModel::reference();
                let bound = m.wave_speed_bound(a, b);
                let brute = brute_force_bound(&m, a.min(b), a.max(b), 2000);
                prop_assert!(bound >= brute * (1.0 - 1e-12));
            }
        }
    }
}
