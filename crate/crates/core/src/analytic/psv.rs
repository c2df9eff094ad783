use super::dist::{Cdf, ClosedFormDist, DistKind};
use crate::{Error, Result};

/// Probability of simultaneity violation for a window of duration `w`:
/// `1 - (1 - rho2) F(w)`, where `F` is the PDV distribution of the two
/// first sensors and `rho2` the drop rate of the second one.
pub fn psv<C: Cdf + ?Sized>(w: f64, rho2: f64, cdf: &C) -> f64 {
    let f = cdf.cdf(w);
    (1.0 - f) + rho2 * f
}

/// Origin of the PDV distribution used by a [`PsvCurve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsvMode {
    Comp,
    Prop,
    Empirical,
}

/// A PSV curve `W -> sigma(W)` over a fixed PDV distribution.
#[derive(Debug, Clone)]
pub struct PsvCurve<C> {
    pub mode: PsvMode,
    pub rho2: f64,
    pub cdf: C,
}

impl<C: Cdf> PsvCurve<C> {
    pub fn new(mode: PsvMode, rho2: f64, cdf: C) -> Self {
        PsvCurve { mode, rho2, cdf }
    }

    pub fn at(&self, w: f64) -> f64 {
        psv(w, self.rho2, &self.cdf)
    }

    /// The curve evaluated at the last frame boundary not after `w`, i.e.
    /// the value a frame-limited window of nominal duration `w` achieves.
    pub fn frame_sampled(&self, w: f64, frame: f64) -> f64 {
        let k = (w / frame + 1e-9).floor().max(0.0);
        self.at(k * frame)
    }
}

/// How to invert the PSV.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Inversion {
    /// Closed-form root where one exists (comp and point mass), otherwise
    /// bisection.
    Auto,
    Bisection,
}

/// Window duration `W` solving `psv(W) = target` for the distribution `dist`.
pub fn invert_psv(target: f64, rho2: f64, dist: &ClosedFormDist, method: Inversion) -> Result<f64> {
    if !(0.0..1.0).contains(&rho2) {
        return Err(Error::Domain(format!(
            "rho2 must lie in [0, 1), got {rho2}"
        )));
    }
    if target.is_nan() || target >= 1.0 {
        return Err(Error::Domain(format!(
            "target sigma must be below 1, got {target}"
        )));
    }
    if target < rho2 {
        return Err(Error::Infeasible { target, rho2 });
    }
    let level = ((1.0 - target) / (1.0 - rho2)).min(1.0);
    let (_, hi) = dist.support();
    if level >= 1.0 {
        return Ok(hi);
    }
    match (method, dist.kind()) {
        (Inversion::Auto, DistKind::CompPdv { span }) => Ok(span * (1.0 - (1.0 - level).sqrt())),
        (Inversion::Auto, DistKind::PointMass) => Ok(dist.support().0),
        _ => dist.quantile(level),
    }
}

/// A window duration designed for a target violation probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwiDesign {
    pub target: f64,
    pub rho2: f64,
    /// Exact solution of `sigma(W) = target`.
    pub w_star: f64,
    /// Smallest multiple of the frame duration with `sigma(W) <= target`.
    pub w_frame: f64,
    pub sigma_star: f64,
    pub sigma_frame: f64,
}

/// Designs the window duration for `target`, returning both the exact
/// solution and its frame-aligned (rounded up) counterpart.
pub fn design_twi(target: f64, rho2: f64, dist: &ClosedFormDist, frame: f64) -> Result<TwiDesign> {
    if !(frame > 0.0 && frame.is_finite()) {
        return Err(Error::Domain(format!("T_f must be positive, got {frame}")));
    }
    let w_star = invert_psv(target, rho2, dist, Inversion::Auto)?;
    let sigma = |w: f64| psv(w, rho2, dist);
    let meets = |k: u64| {
        let w = k as f64 * frame;
        w >= dist.support().1 || sigma(w) <= target
    };

    let mut k = (w_star / frame).ceil().max(0.0) as u64;
    while k > 0 && meets(k - 1) {
        k -= 1;
    }
    while !meets(k) {
        k += 1;
    }
    let w_frame = k as f64 * frame;
    Ok(TwiDesign {
        target,
        rho2,
        w_star,
        w_frame,
        sigma_star: sigma(w_star),
        sigma_frame: sigma(w_frame),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{comp_pdv_dist, prop_pdv_dist};
    use crate::params::{outage_probability, packet_drop_rate, sr_miss_probability};

    fn fig5_rho2() -> f64 {
        let z = sr_miss_probability(4.0).unwrap();
        let e = outage_probability(4.0, 1.0).unwrap();
        packet_drop_rate(z, e, 9, 7).unwrap()
    }

    #[test]
    fn psv_bounds() {
        let d = comp_pdv_dist(0.01, 0.5).unwrap();
        assert_eq!(psv(0.0, 0.01, &d), 1.0);
        assert!((psv(0.49, 0.01, &d) - 0.01).abs() < 1e-15);
        assert!((psv(5.0, 0.01, &d) - 0.01).abs() < 1e-15);
        let rho2 = 7.39e-5;
        let s = psv(0.475088, rho2, &d);
        assert!((s - 1e-3).abs() < 1e-6, "{s}");
    }

    #[test]
    fn design_fig5_comp_example() {
        let rho2 = fig5_rho2();
        let d = comp_pdv_dist(0.01, 0.5).unwrap();
        let design = design_twi(1e-3, rho2, &d, 0.01).unwrap();
        let level = 0.999 / (1.0 - rho2);
        assert!((level - 0.9990739).abs() < 1e-6);
        assert!((design.w_star - 0.47509).abs() < 1e-5, "{}", design.w_star);
        assert!((design.w_frame - 0.48).abs() < 1e-12);
        assert!((design.sigma_star - 1e-3).abs() < 1e-9);
        assert!(design.sigma_frame <= 1e-3);
        assert!(psv(0.47, rho2, &d) > 1e-3);
    }

    #[test]
    fn design_half_target() {
        let d = comp_pdv_dist(0.0, 1.0).unwrap();
        let design = design_twi(0.5, 0.0, &d, 0.01).unwrap();
        assert!((design.w_star - (1.0 - 0.5f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn design_at_bound_uses_full_support() {
        let d = prop_pdv_dist(100.0, 300.0).unwrap();
        let design = design_twi(0.01, 0.01, &d, 0.01).unwrap();
        assert_eq!(design.w_star, 100.0 / 300.0);
        let c = comp_pdv_dist(0.01, 0.5).unwrap();
        assert!((design_twi(0.2, 0.2, &c, 0.01).unwrap().w_star - 0.49).abs() < 1e-15);
    }

    #[test]
    fn design_errors() {
        let rho2 = fig5_rho2();
        let d = comp_pdv_dist(0.01, 0.5).unwrap();
        match design_twi(1e-5, rho2, &d, 0.01) {
            Err(Error::Infeasible { rho2: r, .. }) => assert_eq!(r, rho2),
            other => panic!("expected infeasible, got {other:?}"),
        }
        assert!(matches!(
            design_twi(1.0, 0.0, &d, 0.01),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            design_twi(0.1, 0.0, &d, 0.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn closed_form_and_bisection_agree() {
        let d = comp_pdv_dist(0.01, 0.5).unwrap();
        for &target in &[1e-1, 1e-2, 1e-3] {
            for &rho2 in &[0.0, 1e-4, 1e-2] {
                if target < rho2 {
                    continue;
                }
                let closed = invert_psv(target, rho2, &d, Inversion::Auto).unwrap();
                let bisect = invert_psv(target, rho2, &d, Inversion::Bisection).unwrap();
                assert!((closed - bisect).abs() < 1e-10, "{target} {rho2}");
            }
        }
    }

    #[test]
    fn frame_sampled_curve_is_staircase() {
        let d = comp_pdv_dist(0.01, 0.5).unwrap();
        let curve = PsvCurve::new(PsvMode::Comp, 1e-3, d);
        assert_eq!(curve.frame_sampled(0.015, 0.01), curve.at(0.01));
        assert_eq!(curve.frame_sampled(0.02, 0.01), curve.at(0.02));
        assert!(curve.frame_sampled(0.019, 0.01) >= curve.at(0.019));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn sigma_monotone_and_bounded(
                rho2 in 0.0f64..0.5,
                w1 in 0.0f64..0.6,
                w2 in 0.0f64..0.6,
                prop in any::<bool>(),
            ) {
                let d = if prop {
                    prop_pdv_dist(100.0, 300.0).unwrap()
                } else {
                    comp_pdv_dist(0.01, 0.5).unwrap()
                };
                let (lo, hi) = if w1 <= w2 { (w1, w2) } else { (w2, w1) };
                let s_lo = psv(lo, rho2, &d);
                let s_hi = psv(hi, rho2, &d);
                prop_assert!(s_hi <= s_lo);
                prop_assert!(s_hi >= rho2 && s_lo <= 1.0);
            }

            #[test]
            fn design_round_trip(target in 0.011f64..0.99, rho2 in 0.0f64..0.01, prop in any::<bool>()) {
                let d = if prop {
                    prop_pdv_dist(100.0, 300.0).unwrap()
                } else {
                    comp_pdv_dist(0.01, 0.5).unwrap()
                };
                let design = design_twi(target, rho2, &d, 0.01).unwrap();
                prop_assert!((design.sigma_star - target).abs() <= 1e-9);
                prop_assert!(design.sigma_frame <= target);
                prop_assert!(design.w_frame >= design.w_star - 1e-12);
                prop_assert!(design.w_frame < design.w_star + 0.01 + 1e-12);
            }
        }
    }
}
