//! Second-order theta-scheme kernels in time.
//!
//! For theta in `[0, 1/2]` the scheme works at the off-grid point
//! `t_{n-theta}`. The three-level difference
//!
//! ```text
//! D_t phi = [(3-2theta) phi^n - (4-4theta) phi^{n-1} + (1-2theta) phi^{n-2}] / (2 dt)
//! ```
//!
//! approximates the first derivative at `t_{n-theta}` to second order and is
//! exact on quadratics; theta = 1/2 reduces it to the Crank-Nicolson
//! difference and theta = 0 to the two-step backward difference (BDF2).
//! Values at `t_{n-theta}` are taken as the convex combination
//! `(1-theta) phi^n + theta phi^{n-1}`.
//!
//! The first step has no two-level history, so it always uses the
//! Crank-Nicolson form: difference `(phi^1 - phi^0)/dt` with value weights
//! `(1/2, 1/2)`, regardless of theta. This seeds the history without losing
//! second order.
//!
//! The discrete energy
//!
//! ```text
//! H[phi^n] = (3-2theta)||phi^n||^2 - (1-2theta)||phi^{n-1}||^2
//!          + (2-theta)(1-2theta)||phi^n - phi^{n-1}||^2
//! ```
//!
//! satisfies `(D_t phi, phi^{n-theta}) >= (H[phi^n] - H[phi^{n-1}])/(4 dt)`
//! and `H[phi^n] >= ||phi^n||^2 / (1-theta)`, which is what makes the family
//! unconditionally stable; both inequalities are exercised as property tests.

use crate::error::{Error, Result};

/// Time discretization parameters: theta in `[0, 1/2]`, step `dt`, and the
/// number of steps `N` with `N * dt = T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaScheme {
    theta: f64,
    dt: f64,
    num_steps: usize,
}

/// First-step coefficients (Crank-Nicolson form).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StartupCoeffs {
    /// Multipliers of `(phi^1, phi^0)` in the time difference.
    pub dt_pair: [f64; 2],
    /// Value weights of `(phi^1, phi^0)`.
    pub weights: [f64; 2],
}

impl ThetaScheme {
    pub fn new(theta: f64, dt: f64, num_steps: usize) -> Result<Self> {
        if !(0.0..=0.5).contains(&theta) {
            return Err(Error::invalid(format!(
                "theta must lie in [0, 1/2], got {theta}"
            )));
        }
        if !(dt > 0.0) {
            return Err(Error::invalid(format!("time step must be positive, got {dt}")));
        }
        if num_steps == 0 {
            return Err(Error::invalid("number of steps must be at least 1"));
        }
        Ok(ThetaScheme {
            theta,
            dt,
            num_steps,
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn num_steps(&self) -> usize {
        self.num_steps
    }

    pub fn final_time(&self) -> f64 {
        self.dt * self.num_steps as f64
    }

    /// Grid time `t_n`.
    pub fn time(&self, n: usize) -> f64 {
        self.dt * n as f64
    }

    /// Evaluation time of step `n`: `t_{n-theta}` for `n >= 2`, `t_{1/2}` for
    /// the startup step.
    pub fn eval_time(&self, n: usize) -> f64 {
        if n == 1 {
            0.5 * self.dt
        } else {
            (n as f64 - self.theta) * self.dt
        }
    }

    /// Multipliers of `(phi^n, phi^{n-1}, phi^{n-2})` in the three-level
    /// difference, valid for `n >= 2`.
    pub fn dt_coeffs(&self) -> [f64; 3] {
        let th = self.theta;
        let d = 2.0 * self.dt;
        [(3.0 - 2.0 * th) / d, -(4.0 - 4.0 * th) / d, (1.0 - 2.0 * th) / d]
    }

    /// Applies the three-level difference elementwise.
    pub fn dt_apply(&self, phi_n: &[f64], phi_nm1: &[f64], phi_nm2: &[f64]) -> Vec<f64> {
        let [a0, a1, a2] = self.dt_coeffs();
        phi_n
            .iter()
            .zip(phi_nm1)
            .zip(phi_nm2)
            .map(|((&x0, &x1), &x2)| a0 * x0 + a1 * x1 + a2 * x2)
            .collect()
    }

    /// Convex combination `(1-theta) phi^n + theta phi^{n-1}`.
    pub fn combine(&self, phi_n: &[f64], phi_nm1: &[f64]) -> Vec<f64> {
        let th = self.theta;
        phi_n
            .iter()
            .zip(phi_nm1)
            .map(|(&x0, &x1)| (1.0 - th) * x0 + th * x1)
            .collect()
    }

    /// Discrete energy from the norms of `phi^n`, `phi^{n-1}` and their
    /// difference (all taken in the same inner-product space).
    pub fn energy(&self, norm_n: f64, norm_nm1: f64, norm_diff: f64) -> f64 {
        let th = self.theta;
        (3.0 - 2.0 * th) * norm_n * norm_n - (1.0 - 2.0 * th) * norm_nm1 * norm_nm1
            + (2.0 - th) * (1.0 - 2.0 * th) * norm_diff * norm_diff
    }

    /// Crank-Nicolson startup coefficients used at `n = 1` for every theta.
    pub fn startup_coeffs(&self) -> StartupCoeffs {
        StartupCoeffs {
            dt_pair: [1.0 / self.dt, -1.0 / self.dt],
            weights: [0.5, 0.5],
        }
    }

    /// Difference multipliers and value weights for step `n`: the startup
    /// pair at `n = 1`, the theta-scheme values for `n >= 2`.
    pub fn step_coeffs(&self, n: usize) -> ([f64; 3], [f64; 2]) {
        assert!(n >= 1, "step index must be at least 1");
        if n == 1 {
            let s = self.startup_coeffs();
            ([s.dt_pair[0], s.dt_pair[1], 0.0], s.weights)
        } else {
            (self.dt_coeffs(), [1.0 - self.theta, self.theta])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn rejects_invalid_parameters() {
        assert!(ThetaScheme::new(0.6, 0.1, 10).is_err());
        assert!(ThetaScheme::new(-0.1, 0.1, 10).is_err());
        assert!(ThetaScheme::new(0.2, 0.0, 10).is_err());
        assert!(ThetaScheme::new(0.2, 0.1, 0).is_err());
    }

    #[test]
    fn dt_coefficients_sum_to_zero() {
        for &theta in &[0.0, 0.1, 0.25, 0.4, 0.5] {
            let s = ThetaScheme::new(theta, 0.05, 10).unwrap();
            let [a0, a1, a2] = s.dt_coeffs();
            assert_abs_diff_eq!(a0 + a1 + a2, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn crank_nicolson_difference_at_theta_half() {
        let s = ThetaScheme::new(0.5, 0.2, 5).unwrap();
        let d = s.dt_apply(&[3.0], &[1.0], &[100.0]);
        // Third coefficient vanishes: (phi^n - phi^{n-1}) / dt.
        assert_relative_eq!(d[0], (3.0 - 1.0) / 0.2, max_relative = 1e-14);
    }

    #[test]
    fn bdf2_difference_at_theta_zero() {
        let s = ThetaScheme::new(0.0, 0.1, 5).unwrap();
        let d = s.dt_apply(&[3.0], &[2.0], &[1.0]);
        assert_relative_eq!(d[0], (3.0 * 3.0 - 4.0 * 2.0 + 1.0) / 0.2, max_relative = 1e-14);
    }

    #[test]
    fn difference_annihilates_constants() {
        for &theta in &[0.0, 0.2, 0.35, 0.5] {
            let s = ThetaScheme::new(theta, 0.07, 4).unwrap();
            let d = s.dt_apply(&[4.2; 3], &[4.2; 3], &[4.2; 3]);
            for v in d {
                assert_abs_diff_eq!(v, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn difference_is_exact_on_quadratics() {
        // phi(t) = t^2 sampled at t_n, t_{n-1}, t_{n-2} gives exactly
        // 2 t_{n-theta}.
        for &theta in &[0.0, 0.1, 0.2, 0.3, 0.4, 0.5] {
            let dt = 0.03;
            let s = ThetaScheme::new(theta, dt, 20).unwrap();
            for n in 2..=20usize {
                let t = |k: usize| (k as f64) * dt;
                let d = s.dt_apply(
                    &[t(n) * t(n)],
                    &[t(n - 1) * t(n - 1)],
                    &[t(n - 2) * t(n - 2)],
                );
                let expect = 2.0 * (n as f64 - theta) * dt;
                assert_relative_eq!(d[0], expect, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn difference_truncation_is_second_order_on_exponential() {
        for &theta in &[0.0, 0.1, 0.2, 0.3, 0.4, 0.5] {
            let err = |dt: f64| -> f64 {
                let steps = (1.0 / dt).round() as usize;
                let s = ThetaScheme::new(theta, dt, steps).unwrap();
                let mut worst = 0.0f64;
                for n in 2..=steps {
                    let t = |k: usize| (k as f64) * dt;
                    let d = s.dt_apply(&[t(n).exp()], &[t(n - 1).exp()], &[t(n - 2).exp()]);
                    let exact = ((n as f64 - theta) * dt).exp();
                    worst = worst.max((d[0] - exact).abs());
                }
                worst
            };
            let (e1, e2) = (err(0.01), err(0.005));
            let order = (e1 / e2).log2();
            assert!(order >= 1.9, "theta={theta}: measured order {order}");
        }
    }

    #[test]
    fn combination_weights() {
        let s0 = ThetaScheme::new(0.0, 0.1, 2).unwrap();
        assert_eq!(s0.combine(&[7.0], &[1.0]), vec![7.0]);
        let s5 = ThetaScheme::new(0.5, 0.1, 2).unwrap();
        assert_eq!(s5.combine(&[7.0], &[1.0]), vec![4.0]);
    }

    #[test]
    fn combination_is_exact_on_affine_functions() {
        for &theta in &[0.0, 0.15, 0.3, 0.5] {
            let dt = 0.2;
            let s = ThetaScheme::new(theta, dt, 10).unwrap();
            let n = 4usize;
            let v = s.combine(&[n as f64 * dt], &[(n - 1) as f64 * dt]);
            assert_relative_eq!(v[0], (n as f64 - theta) * dt, max_relative = 1e-14);
        }
    }

    #[test]
    fn energy_examples() {
        let s5 = ThetaScheme::new(0.5, 0.1, 2).unwrap();
        assert_abs_diff_eq!(s5.energy(1.0, 123.0, 456.0), 2.0, epsilon = 1e-12);
        let s0 = ThetaScheme::new(0.0, 0.1, 2).unwrap();
        assert_abs_diff_eq!(s0.energy(1.0, 0.0, 1.0), 5.0, epsilon = 1e-12);
        // Constant sequence: H = 2 ||c||^2 for every theta.
        for &theta in &[0.0, 0.2, 0.4, 0.5] {
            let s = ThetaScheme::new(theta, 0.1, 2).unwrap();
            let c = 1.7f64;
            assert_relative_eq!(s.energy(c, c, 0.0), 2.0 * c * c, max_relative = 1e-13);
        }
    }

    #[test]
    fn startup_matches_crank_nicolson_with_missing_history() {
        let s = ThetaScheme::new(0.3, 0.25, 4).unwrap();
        let coeffs = s.startup_coeffs();
        assert_eq!(coeffs.dt_pair, [4.0, -4.0]);
        assert_eq!(coeffs.weights, [0.5, 0.5]);
        // Constant sequence: zero derivative.
        let ([a0, a1, _], _) = s.step_coeffs(1);
        assert_abs_diff_eq!(a0 * 3.3 + a1 * 3.3, 0.0, epsilon = 1e-12);
        // phi(t) = t: derivative 1 and value t_{1/2} = dt/2.
        let d = a0 * s.time(1) + a1 * s.time(0);
        assert_relative_eq!(d, 1.0, max_relative = 1e-14);
        let (_, [w1, w0]) = s.step_coeffs(1);
        assert_relative_eq!(
            w1 * s.time(1) + w0 * s.time(0),
            0.5 * s.dt(),
            max_relative = 1e-14
        );
        // Same numbers as the theta = 1/2 scheme with the oldest level absent.
        let cn = ThetaScheme::new(0.5, 0.25, 4).unwrap();
        let [c0, c1, c2] = cn.dt_coeffs();
        assert_eq!([c0, c1], coeffs.dt_pair);
        assert_eq!(c2, 0.0);
    }

    #[test]
    fn energy_inequalities_hold_on_random_sequences() {
        // (D_t phi, phi^{n-theta}) >= (H[phi^n] - H[phi^{n-1}]) / (4 dt)
        // and H[phi^n] >= ||phi^n||^2 / (1-theta) on scalar sequences.
        let mut rng = StdRng::seed_from_u64(20180122);
        for _ in 0..1000 {
            let theta = rng.gen_range(0.0..=0.5);
            let dt = rng.gen_range(0.01..1.0);
            let s = ThetaScheme::new(theta, dt, 3).unwrap();
            let phi: [f64; 3] = [
                rng.gen_range(-10.0..10.0),
                rng.gen_range(-10.0..10.0),
                rng.gen_range(-10.0..10.0),
            ];
            // phi[0] = phi^{n-2}, phi[1] = phi^{n-1}, phi[2] = phi^n.
            let scale = phi.iter().fold(1.0f64, |m, v| m.max(v.abs())).powi(2) / dt;
            let d = s.dt_apply(&[phi[2]], &[phi[1]], &[phi[0]])[0];
            let comb = s.combine(&[phi[2]], &[phi[1]])[0];
            let h_n = s.energy(phi[2].abs(), phi[1].abs(), (phi[2] - phi[1]).abs());
            let h_nm1 = s.energy(phi[1].abs(), phi[0].abs(), (phi[1] - phi[0]).abs());
            assert!(
                d * comb >= (h_n - h_nm1) / (4.0 * dt) - 1e-12 * scale,
                "lower-bound inequality failed: theta={theta}, phi={phi:?}"
            );
            let norm_sq = phi[2] * phi[2];
            assert!(
                h_n >= norm_sq / (1.0 - theta) - 1e-12 * scale * dt,
                "energy bound failed: theta={theta}, phi={phi:?}"
            );
        }
    }
}
