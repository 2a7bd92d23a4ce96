//! Point-wise parameterized traction–gap law for the adhesive interface.
//!
//! The attractive/repulsive normal traction follows a Lennard-Jones shaped
//! power law, expressed through the two quantities a scan actually provides:
//! the adhesion energy per unit area `delta_gamma` and the peak adhesive
//! traction `p_max`. Positive traction is attractive; repulsive contact
//! tractions are negative.
//!
//! The analytic law
//!
//! ```text
//! p_n(g) = a2 g^-3 - a1 g^-9,   a2 = (8/3) dg g0^2,  a1 = a2 g0^6
//! g0 = 16/(9 sqrt(3)) dg / p_max
//! ```
//!
//! is regularized for finite element use:
//! * for `g <= g_n0` the tangent line at `g_n0` continues the repulsive
//!   branch with a bounded slope `k_reg` (the analytic slope diverges at
//!   `g -> 0`, which would destroy the conditioning of the tangent matrix);
//! * for `g_nc1 < g <= g_nc2` a descending linear tail replaces the long
//!   attractive tail, cut so the discarded part carries 1% of the signed
//!   area under the curve;
//! * beyond `g_nc2` the traction is identically zero.
//!
//! `g_n0` is the unique gap where the analytic slope equals the requested
//! cap `k_cap`, so the composite curve is C1 there.

use crate::error::{Error, Result};

/// `16 / (9 sqrt(3))`, the equilibrium-spacing coefficient.
const C_G0: f64 = 16.0 / (9.0 * 1.7320508075688772);

/// Relative bisection tolerance for the breakpoint root finds.
const ROOT_TOL: f64 = 1e-12;

/// Coefficients and regularization breakpoints of one point-wise law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LjParams {
    /// Adhesion energy per unit area (work of separation).
    pub delta_gamma: f64,
    /// Peak attractive traction, attained at `g_max`.
    pub p_max: f64,
    /// Equilibrium spacing: `p_n(g0) = 0`.
    pub g0: f64,
    /// Traction-peak gap, `3^(1/6) g0`.
    pub g_max: f64,
    /// Power-law coefficient of the `g^-9` term.
    pub a1: f64,
    /// Power-law coefficient of the `g^-3` term.
    pub a2: f64,
    /// Repulsive-branch switch gap (slope cap reached here).
    pub g_n0: f64,
    /// Repulsive-branch slope (equals the requested cap).
    pub k_reg: f64,
    /// Start of the linear attractive tail (99% of the signed area kept).
    pub g_nc1: f64,
    /// End of the linear tail; traction is zero beyond.
    pub g_nc2: f64,
    /// Signed area under the analytic curve over `[g_n0, inf)`.
    pub area_total: f64,
    /// Cached traction at `g_n0` (repulsive, negative).
    p_n0: f64,
    /// Cached traction at `g_nc1` (attractive, positive).
    p_nc1: f64,
}

/// Fixed exponents of the power-law form.
pub const B1: f64 = -9.0;
pub const B2: f64 = -3.0;

impl LjParams {
    /// Derives all coefficients and breakpoints from `(delta_gamma, p_max)`
    /// and the tangent-slope cap `k_cap` (traction per length).
    ///
    /// Fails when `k_cap` does not exceed the analytic slope at `g0`: a
    /// tangent line with such a small slope never meets the repulsive branch,
    /// so no continuous regularization exists.
    pub fn derive(delta_gamma: f64, p_max: f64, k_cap: f64) -> Result<LjParams> {
        if !(delta_gamma > 0.0) || !delta_gamma.is_finite() {
            return Err(Error::LawParams(format!(
                "delta_gamma must be positive and finite, got {delta_gamma}"
            )));
        }
        if !(p_max > 0.0) || !p_max.is_finite() {
            return Err(Error::LawParams(format!(
                "p_max must be positive and finite, got {p_max}"
            )));
        }
        if !(k_cap > 0.0) || !k_cap.is_finite() {
            return Err(Error::LawParams(format!(
                "k_cap must be positive and finite, got {k_cap}"
            )));
        }

        let g0 = C_G0 * delta_gamma / p_max;
        let g_max = 3f64.powf(1.0 / 6.0) * g0;
        let a2 = 8.0 / 3.0 * delta_gamma * g0 * g0;
        // a1 = a2 g0^6 exactly, so p_n(g0) cancels to zero in floating point
        let g0_6 = g0.powi(6);
        let a1 = a2 * g0_6;

        let analytic_slope = |g: f64| {
            let r6 = g0_6 / g.powi(6);
            3.0 * a2 / g.powi(4) * (3.0 * r6 - 1.0)
        };
        let slope_at_g0 = 16.0 * delta_gamma / (g0 * g0);
        if k_cap <= slope_at_g0 {
            return Err(Error::LawParams(format!(
                "k_cap = {k_cap:.6e} must exceed the analytic slope at the \
                 equilibrium spacing ({slope_at_g0:.6e}); raise the cap factor"
            )));
        }

        // slope is strictly decreasing on (0, g0], from +inf down to
        // slope_at_g0 < k_cap, so the bracket below contains exactly one root
        let mut lo = g0;
        while analytic_slope(lo) <= k_cap {
            lo *= 0.5;
            if lo < 1e-300 {
                return Err(Error::LawParams("slope cap bracket collapsed".into()));
            }
        }
        let g_n0 = bisect(lo, g0, |g| analytic_slope(g) - k_cap);

        let area_to_inf = |x: f64| a2 / (2.0 * x * x) - a1 / (8.0 * x.powi(8));
        let area = |x: f64, y: f64| area_to_inf(x) - area_to_inf(y);

        let area_total = area_to_inf(g_n0);
        if !(area_total > 0.0) {
            return Err(Error::LawParams(format!(
                "signed area over [g_n0, inf) is not positive ({area_total:.3e}); \
                 the slope cap cuts too deep into the repulsive branch"
            )));
        }

        // g_nc1: keep 99% of the signed area; the integrand is positive past
        // g0, so area(g_n0, y) grows monotonically towards area_total
        let target = 0.99 * area_total;
        let mut hi = 2.0 * g_max;
        while area(g_n0, hi) < target {
            hi *= 2.0;
            if hi > 1e300 {
                return Err(Error::LawParams("tail cutoff bracket diverged".into()));
            }
        }
        let g_nc1 = bisect(g_max, hi, |y| area(g_n0, y) - target);

        let traction_analytic = |g: f64| {
            let r6 = g0_6 / g.powi(6);
            a2 / g.powi(3) * (1.0 - r6)
        };
        let p_n0 = traction_analytic(g_n0);
        let p_nc1 = traction_analytic(g_nc1);
        // linear tail encloses the remaining 1%: triangle with height p_nc1
        let g_nc2 = g_nc1 + 0.02 * area_total / p_nc1;

        Ok(LjParams {
            delta_gamma,
            p_max,
            g0,
            g_max,
            a1,
            a2,
            g_n0,
            k_reg: k_cap,
            g_nc1,
            g_nc2,
            area_total,
            p_n0,
            p_nc1,
        })
    }

    /// Regularized traction at gap `g`. Positive = attractive. Total in `g`,
    /// including arbitrarily deep penetration (`g` very negative).
    pub fn traction(&self, g: f64) -> f64 {
        if g <= self.g_n0 {
            self.p_n0 + self.k_reg * (g - self.g_n0)
        } else if g <= self.g_nc1 {
            let r6 = (self.g0 / g).powi(6);
            self.a2 / g.powi(3) * (1.0 - r6)
        } else if g <= self.g_nc2 {
            self.p_nc1 * (self.g_nc2 - g) / (self.g_nc2 - self.g_nc1)
        } else {
            0.0
        }
    }

    /// Slope `d p_n / d g` of the active branch. At a breakpoint the
    /// right-branch value is returned.
    pub fn tangent(&self, g: f64) -> f64 {
        if g < self.g_n0 {
            self.k_reg
        } else if g < self.g_nc1 {
            let r6 = (self.g0 / g).powi(6);
            3.0 * self.a2 / g.powi(4) * (3.0 * r6 - 1.0)
        } else if g < self.g_nc2 {
            -self.p_nc1 / (self.g_nc2 - self.g_nc1)
        } else {
            0.0
        }
    }

    /// Interface energy density: `psi(g) = -int_g^inf p_n ds` under the
    /// regularized law, so `psi' = p_n`, `psi(inf) = 0` and the minimum sits
    /// at the equilibrium spacing.
    pub fn energy(&self, g: f64) -> f64 {
        -self.work_to_separate(g)
    }

    /// `int_g^inf p_n ds` under the regularized law.
    fn work_to_separate(&self, g: f64) -> f64 {
        let tail = 0.01 * self.area_total;
        if g > self.g_nc2 {
            0.0
        } else if g > self.g_nc1 {
            let w = self.g_nc2 - g;
            self.p_nc1 * w * w / (2.0 * (self.g_nc2 - self.g_nc1))
        } else if g > self.g_n0 {
            self.area(g, self.g_nc1) + tail
        } else {
            let d = self.g_n0 - g;
            self.p_n0 * d - 0.5 * self.k_reg * d * d + self.area(self.g_n0, self.g_nc1) + tail
        }
    }

    /// Signed area `int_x^y p_n dg` of the analytic (uncut) law.
    pub fn area(&self, x: f64, y: f64) -> f64 {
        self.area_to_inf(x) - self.area_to_inf(y)
    }

    /// Signed area `int_x^inf p_n dg` of the analytic law.
    pub fn area_to_inf(&self, x: f64) -> f64 {
        self.a2 / (2.0 * x * x) - self.a1 / (8.0 * x.powi(8))
    }

    /// Largest softening slope magnitude, `max |dp/dg|` over `g > g0`.
    ///
    /// Attained at `g = 7.5^(1/6) g0` with value `4.8 (2/15)^(2/3) dg/g0^2`,
    /// the quantity entering the snap-back criterion.
    pub fn max_softening_slope(&self) -> f64 {
        4.8 * (2.0 / 15.0f64).powf(2.0 / 3.0) * self.delta_gamma / (self.g0 * self.g0)
    }

    /// Gap at which the softening slope peaks.
    pub fn softening_slope_gap(&self) -> f64 {
        7.5f64.powf(1.0 / 6.0) * self.g0
    }
}

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    debug_assert!(lo < hi);
    let f_lo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo) <= ROOT_TOL * mid.abs() {
            return mid;
        }
        let f_mid = f(mid);
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Snap-back predictor: softening instabilities are expected when the largest
/// softening slope of the interface law exceeds the layer stiffness `E / t`.
/// The comparison is strict.
pub fn instability_check(max_abs_slope: f64, modulus: f64, thickness: f64) -> bool {
    max_abs_slope > modulus / thickness
}

/// Normal traction law carried by an interface integration point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InterfaceLaw {
    LennardJones(LjParams),
    /// Adhesion-free comparison: constant contact stiffness for `g <= 0`,
    /// traction-free otherwise.
    Penalty { stiffness: f64 },
}

impl InterfaceLaw {
    pub fn traction(&self, g: f64) -> f64 {
        match self {
            InterfaceLaw::LennardJones(p) => p.traction(g),
            InterfaceLaw::Penalty { stiffness } => {
                if g <= 0.0 {
                    stiffness * g
                } else {
                    0.0
                }
            }
        }
    }

    pub fn tangent(&self, g: f64) -> f64 {
        match self {
            InterfaceLaw::LennardJones(p) => p.tangent(g),
            InterfaceLaw::Penalty { stiffness } => {
                if g < 0.0 {
                    *stiffness
                } else {
                    0.0
                }
            }
        }
    }

    pub fn energy(&self, g: f64) -> f64 {
        match self {
            InterfaceLaw::LennardJones(p) => p.energy(g),
            InterfaceLaw::Penalty { stiffness } => {
                if g <= 0.0 {
                    0.5 * stiffness * g * g
                } else {
                    0.0
                }
            }
        }
    }

    /// Gap beyond which the traction vanishes identically.
    pub fn cutoff(&self) -> f64 {
        match self {
            InterfaceLaw::LennardJones(p) => p.g_nc2,
            InterfaceLaw::Penalty { .. } => 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_params() -> LjParams {
        LjParams::derive(1.0, 1.0, 100.0).unwrap()
    }

    /// Cap chosen a few times above the analytic slope at `g0`, inside the
    /// window where the signed-area construction is well posed.
    fn cap_for(dg: f64, pm: f64, mult: f64) -> f64 {
        let g0 = 16.0 / (9.0 * 3f64.sqrt()) * dg / pm;
        mult * 16.0 * dg / (g0 * g0)
    }

    #[test]
    fn closed_form_spacings() {
        let p = unit_params();
        assert_relative_eq!(p.g0, 1.0264004785593347, max_relative = 1e-14);
        assert_relative_eq!(p.g_max, 3f64.powf(1.0 / 6.0) * p.g0, max_relative = 1e-15);
        assert_relative_eq!(p.g_max, 1.2326422655122395, max_relative = 1e-13);
    }

    #[test]
    fn power_coefficients_match_reference_constants() {
        let p = unit_params();
        assert_relative_eq!(p.a2, 2048.0 / 729.0, max_relative = 1e-14);
        // published rounded values: 2.809 and 3.284 (truncated)
        assert!((p.a2 - 2.809).abs() < 1e-3, "a2 = {}", p.a2);
        assert!((p.a1 - 3.284).abs() < 1e-3, "a1 = {}", p.a1);
        // scaling with material parameters
        let q = LjParams::derive(2.0, 0.5, cap_for(2.0, 0.5, 4.0)).unwrap();
        assert_relative_eq!(
            q.a2,
            2048.0 / 729.0 * 2f64.powi(3) / 0.5f64.powi(2),
            max_relative = 1e-13
        );
        assert_relative_eq!(
            q.a1 / q.delta_gamma.powi(9) * q.p_max.powi(8),
            p.a1,
            max_relative = 1e-12
        );
    }

    #[test]
    fn work_of_separation_is_delta_gamma() {
        for (dg, pm) in [(1.0, 1.0), (3.5e-5, 8.0), (0.04, 2.0)] {
            let p = LjParams::derive(dg, pm, cap_for(dg, pm, 4.0)).unwrap();
            assert_relative_eq!(p.area(p.g0, 1e308), dg, max_relative = 1e-10);
            assert_relative_eq!(p.area_to_inf(p.g0), dg, max_relative = 1e-12);
        }
    }

    #[test]
    fn quadrature_of_analytic_law_matches_antiderivative() {
        let p = unit_params();
        let analytic = |g: f64| p.a2 / g.powi(3) - p.a1 / g.powi(9);
        let big_g = 1e3 * p.g0;
        let q = simpson_adaptive(&analytic, p.g0, big_g, 1e-12, 40);
        assert_relative_eq!(q, p.area(p.g0, big_g), max_relative = 1e-9);
        // converges to delta_gamma as the upper limit grows
        assert_relative_eq!(p.area(p.g0, big_g), 1.0, max_relative = 2e-6);
        assert_relative_eq!(p.area(p.g0, 1e5 * p.g0), 1.0, max_relative = 2e-10);
    }

    #[test]
    fn traction_landmarks() {
        let p = unit_params();
        assert_eq!(p.traction(p.g0), 0.0);
        assert_relative_eq!(p.traction(p.g_max), p.p_max, max_relative = 1e-12);
        assert_eq!(p.traction(2.0 * p.g_nc2), 0.0);
        assert!(p.traction(0.9 * p.g0) < 0.0);
        assert!(p.traction(-3.0 * p.g0) < p.traction(0.0));
    }

    #[test]
    fn tangent_landmarks_and_finite_difference() {
        let p = unit_params();
        assert_abs_diff_eq!(p.tangent(p.g_max), 0.0, epsilon = 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let h = 1e-7 * p.g0;
        for _ in 0..50 {
            // sample all branches, away from the breakpoints themselves
            let g = rng.gen_range(-0.5 * p.g0..1.2 * p.g_nc2);
            let on_breakpoint = [p.g_n0, p.g_nc1, p.g_nc2]
                .iter()
                .any(|b| (g - b).abs() < 2.0 * h);
            if on_breakpoint {
                continue;
            }
            let fd = (p.traction(g + h) - p.traction(g - h)) / (2.0 * h);
            let an = p.tangent(g);
            let scale = an.abs().max(p.p_max / p.g0);
            assert!(
                (fd - an).abs() <= 1e-6 * scale,
                "g = {g}: fd = {fd}, analytic = {an}"
            );
        }
    }

    #[test]
    fn softening_slope_maximum_matches_numeric_scan() {
        let p = LjParams::derive(0.7, 1.3, 400.0).unwrap();
        // numeric maximization oracle: dense scan of the descending slope
        // (positive slopes near g0 belong to the rising branch and do not
        // drive snap-back)
        let mut best = (0.0f64, 0.0f64);
        let n = 400_000;
        for k in 0..n {
            let g = p.g0 * (1.0 + 3.0 * k as f64 / n as f64);
            let s = -p.tangent(g);
            if s > best.0 {
                best = (s, g);
            }
        }
        assert_relative_eq!(p.max_softening_slope(), best.0, max_relative = 1e-8);
        assert_relative_eq!(p.softening_slope_gap(), best.1, max_relative = 1e-4);
        assert_relative_eq!(
            p.max_softening_slope(),
            4.8 * (2.0 / 15.0f64).powf(2.0 / 3.0) * 0.7 / (p.g0 * p.g0),
            max_relative = 1e-15
        );
    }

    #[test]
    fn instability_threshold() {
        // layer stiffness E/t = 108.5 MPa / 2e-4 mm
        let e_over_t = 108.5 / 2e-4;
        assert!(instability_check(2.17e6, 108.5, 2e-4));
        assert!(!instability_check(2.17e6, 108.5 * 100.0, 2e-4));
        assert!(!instability_check(e_over_t, 108.5, 2e-4)); // strict
    }

    #[test]
    fn branches_are_continuous() {
        let p = LjParams::derive(2.0, 3.0, cap_for(2.0, 3.0, 4.0)).unwrap();
        for b in [p.g_n0, p.g_nc1, p.g_nc2] {
            // adjacent representable gaps straddle the breakpoint, so the two
            // evaluations hit the two branch formulas directly
            let jump = (p.traction(b.next_down()) - p.traction(b.next_up())).abs();
            assert!(jump < 1e-10 * p.p_max, "jump {jump} at breakpoint {b}");
        }
        // C1 at the slope-cap switch
        assert_relative_eq!(p.tangent(p.g_n0 * (1.0 + 1e-13)), p.k_reg, max_relative = 1e-9);
    }

    #[test]
    fn tail_triangle_carries_one_percent() {
        let p = LjParams::derive(0.3, 0.9, cap_for(0.3, 0.9, 5.0)).unwrap();
        let tail = 0.5 * p.traction(p.g_nc1) * (p.g_nc2 - p.g_nc1);
        assert_relative_eq!(tail, 0.01 * p.area_total, max_relative = 1e-9);
        // kept part: analytic area over [g_n0, g_nc1] is 99% of the total
        assert_relative_eq!(
            p.area(p.g_n0, p.g_nc1),
            0.99 * p.area_total,
            max_relative = 1e-9
        );
    }

    #[test]
    fn peak_location_and_value() {
        let p = LjParams::derive(4e-5, 2.0, 1e7).unwrap();
        // argmax over the attractive branch
        let mut best = (0.0f64, 0.0f64);
        for k in 0..2_000_000 {
            let g = p.g0 * (1.0 + 0.5 * k as f64 / 2e6);
            let t = p.traction(g);
            if t > best.0 {
                best = (t, g);
            }
        }
        assert!((best.1 - p.g_max).abs() <= 1e-6 * p.g0, "argmax {} vs {}", best.1, p.g_max);
        assert_relative_eq!(p.traction(p.g_max), p.p_max, max_relative = 1e-12);
    }

    #[test]
    fn repulsive_branch_is_monotone() {
        let p = unit_params();
        for k in 0..100 {
            let g = p.g_n0 - 0.05 * k as f64 * p.g0;
            assert!(p.tangent(g) > 0.0);
        }
    }

    #[test]
    fn energy_is_consistent_with_traction() {
        let p = LjParams::derive(1.5, 0.8, cap_for(1.5, 0.8, 3.0)).unwrap();
        let h = 1e-7 * p.g0;
        for g in [
            -0.4 * p.g0,
            0.5 * p.g0,
            p.g0,
            1.5 * p.g0,
            0.5 * (p.g_nc1 + p.g_nc2),
            p.g_nc2 * 1.5,
        ] {
            let fd = (p.energy(g + h) - p.energy(g - h)) / (2.0 * h);
            assert_abs_diff_eq!(fd, p.traction(g), epsilon = 1e-5 * p.p_max);
        }
        assert_eq!(p.energy(p.g_nc2 * 2.0), 0.0);
        // minimum at the equilibrium spacing
        assert!(p.energy(p.g0) < p.energy(0.8 * p.g0));
        assert!(p.energy(p.g0) < p.energy(1.3 * p.g0));
    }

    #[test]
    fn cap_below_equilibrium_slope_is_rejected() {
        // analytic slope at g0 is 16 dg / g0^2; ask for less
        let dg = 1.0;
        let pm = 1.0;
        let g0 = 16.0 / (9.0 * 3f64.sqrt()) * dg / pm;
        let too_small = 15.9 * dg / (g0 * g0);
        let err = LjParams::derive(dg, pm, too_small).unwrap_err();
        assert!(err.to_string().contains("k_cap"), "{err}");
    }

    #[test]
    fn penalty_law_is_one_sided() {
        let law = InterfaceLaw::Penalty { stiffness: 50.0 };
        assert_eq!(law.traction(-0.1), -5.0);
        assert_eq!(law.traction(0.1), 0.0);
        assert_eq!(law.tangent(-0.1), 50.0);
        assert_eq!(law.tangent(0.1), 0.0);
        assert!(law.traction(-1.0) < 0.0);
        assert_eq!(law.cutoff(), 0.0);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn scaling_covariance(
                dg in 1e-6f64..1e2,
                pm in 1e-3f64..1e3,
                lambda in 1e-3f64..1e3,
                gap_factor in -0.5f64..4.0,
            ) {
                // cap far above the slope at g0 for both scales
                let g0 = 16.0 / (9.0 * 3f64.sqrt()) * dg / pm;
                let cap = 120.0 * dg / (g0 * g0);
                let p = LjParams::derive(dg, pm, cap).unwrap();
                let q = LjParams::derive(lambda * dg, lambda * pm, lambda * cap).unwrap();
                prop_assert!((q.g0 - p.g0).abs() <= 1e-12 * p.g0);
                let g = gap_factor * p.g0;
                let (a, b) = (q.traction(g), lambda * p.traction(g));
                prop_assert!((a - b).abs() <= 1e-9 * lambda * p.p_max);
            }

            #[test]
            fn breakpoints_are_ordered(dg in 1e-4f64..10.0, pm in 1e-2f64..100.0) {
                let g0 = 16.0 / (9.0 * 3f64.sqrt()) * dg / pm;
                let cap = 120.0 * dg / (g0 * g0);
                let p = LjParams::derive(dg, pm, cap).unwrap();
                prop_assert!(0.0 < p.g_n0);
                prop_assert!(p.g_n0 < p.g0);
                prop_assert!(p.g0 < p.g_max);
                prop_assert!(p.g_max < p.g_nc1);
                prop_assert!(p.g_nc1 < p.g_nc2);
            }
        }
    }

    /// Adaptive Simpson quadrature, used here purely as an oracle.
    fn simpson_adaptive(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: usize) -> f64 {
        fn simpson(f: &impl Fn(f64) -> f64, a: f64, m: f64, b: f64) -> f64 {
            (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b))
        }
        fn recurse(
            f: &impl Fn(f64) -> f64,
            a: f64,
            b: f64,
            whole: f64,
            tol: f64,
            depth: usize,
        ) -> f64 {
            let m = 0.5 * (a + b);
            let left = simpson(f, a, 0.5 * (a + m), m);
            let right = simpson(f, m, 0.5 * (m + b), b);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                recurse(f, a, m, left, 0.5 * tol, depth - 1)
                    + recurse(f, m, b, right, 0.5 * tol, depth - 1)
            }
        }
        let m = 0.5 * (a + b);
        recurse(f, a, b, simpson(f, a, m, b), tol * (b - a).abs().max(1.0), depth)
    }
}
