//! Scenario and protocol parameters, and the per-sensor link quantities
//! derived from them.
//!
//! All values are SI (seconds, meters, watts, hertz). Direct SNR values
//! (`gamma_override`, `gamma_th_override`) take precedence over the raw
//! physical parameters they would otherwise be computed from.

use crate::{Error, Result};

/// Physical and computational side of one event.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// Event time (s).
    pub t0: f64,
    /// Propagation speed of the physical signal (m/s).
    pub speed: f64,
    /// Radius of the deployment disc (m).
    pub max_distance: f64,
    /// Number of sensors.
    pub sensors: usize,
    /// Best-case computation delay (s).
    pub comp_min: f64,
    /// Worst-case computation delay (s).
    pub comp_max: f64,
    /// Accept `comp_min == comp_max` (deterministic computation delay).
    pub allow_degenerate_comp: bool,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.t0.is_finite() {
            return Err(Error::config("t0 must be finite"));
        }
        if !(self.speed > 0.0 && self.speed.is_finite()) {
            return Err(Error::config(format!(
                "v must be positive, got {}",
                self.speed
            )));
        }
        if !(self.max_distance > 0.0 && self.max_distance.is_finite()) {
            return Err(Error::config(format!(
                "D_max must be positive, got {}",
                self.max_distance
            )));
        }
        if self.sensors < 1 {
            return Err(Error::config("sensor count I must be at least 1"));
        }
        if !(self.comp_min >= 0.0 && self.comp_max.is_finite()) || self.comp_min > self.comp_max {
            return Err(Error::config(format!(
                "computation delays need 0 <= C_min <= C_max, got ({}, {})",
                self.comp_min, self.comp_max
            )));
        }
        if self.comp_min == self.comp_max && !self.allow_degenerate_comp {
            return Err(Error::config(
                "C_min == C_max requires allow_degenerate_comp to be set",
            ));
        }
        Ok(())
    }

    /// Width of the computation-delay support, `C_max - C_min`.
    pub fn comp_span(&self) -> f64 {
        self.comp_max - self.comp_min
    }

    /// Largest propagation delay, `D_max / v`.
    pub fn prop_span(&self) -> f64 {
        self.max_distance / self.speed
    }
}

/// Frame-based random access protocol and link budget inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct CommConfig {
    /// Bandwidth B (Hz).
    pub bandwidth: Option<f64>,
    /// Frame duration T_f (s).
    pub frame: f64,
    /// Packet-transmission sub-frame duration T_p (s).
    pub pt_duration: Option<f64>,
    /// Packet size b (bits).
    pub packet_bits: Option<f64>,
    /// Noise spectral density N0 (W/Hz).
    pub noise_density: Option<f64>,
    /// Maximum number of scheduling-request attempts.
    pub max_sr_attempts: u32,
    /// Maximum number of packet-transmission attempts.
    pub max_pt_attempts: u32,
    /// Preamble length S; defaults to the sensor count.
    pub preamble_len: Option<usize>,
    /// Direct outage threshold, bypassing `2^(b / (T_p B)) - 1`.
    pub gamma_th_override: Option<f64>,
    /// Serve simultaneous grants round-robin, one packet per frame.
    pub serialize_grants: bool,
}

impl CommConfig {
    /// A configuration with the given frame and retry limits and everything
    /// else unset.
    pub fn new(frame: f64, max_sr_attempts: u32, max_pt_attempts: u32) -> Self {
        CommConfig {
            bandwidth: None,
            frame,
            pt_duration: None,
            packet_bits: None,
            noise_density: None,
            max_sr_attempts,
            max_pt_attempts,
            preamble_len: None,
            gamma_th_override: None,
            serialize_grants: false,
        }
    }

    pub fn validate(&self, sensors: usize) -> Result<()> {
        if !(self.frame > 0.0 && self.frame.is_finite()) {
            return Err(Error::config(format!(
                "T_f must be positive, got {}",
                self.frame
            )));
        }
        if let Some(tp) = self.pt_duration {
            if !(tp > 0.0 && tp < self.frame) {
                return Err(Error::config(format!(
                    "T_p must satisfy 0 < T_p < T_f, got T_p = {tp}, T_f = {}",
                    self.frame
                )));
            }
        }
        if self.max_sr_attempts < 1 {
            return Err(Error::config("M_max must be at least 1"));
        }
        if self.max_pt_attempts < 1 {
            return Err(Error::config("N_max must be at least 1"));
        }
        if let Some(s) = self.preamble_len {
            if s < sensors {
                return Err(Error::config(format!(
                    "preamble length S = {s} must be at least the sensor count I = {sensors}"
                )));
            }
        }
        if self.gamma_th_override.is_none() {
            for (name, value) in [
                ("B", self.bandwidth),
                ("T_p", self.pt_duration),
                ("b", self.packet_bits),
            ] {
                if value.is_none() {
                    return Err(Error::config(format!(
                        "missing {name}: needed to compute gamma_TH when no override is given"
                    )));
                }
            }
        }
        gamma_threshold(self).map(|_| ())
    }
}

/// Inputs describing the link of one sensor.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SensorLink {
    /// Transmit power P (W).
    pub power: Option<f64>,
    /// Large-scale fading β.
    pub beta: Option<f64>,
    /// Direct average SNR γ, bypassing `P β / (N0 B)`.
    pub gamma_override: Option<f64>,
    /// Force ζ = 0 (every scheduling request is detected).
    pub perfect_detection: bool,
    /// Force ε = 0 (no outage).
    pub perfect_transmission: bool,
}

impl SensorLink {
    pub fn with_gamma(gamma: f64) -> Self {
        SensorLink {
            gamma_override: Some(gamma),
            ..Default::default()
        }
    }

    /// Both the detection and the transmission are forced to succeed.
    pub fn perfect() -> Self {
        SensorLink {
            gamma_override: Some(1.0),
            perfect_detection: true,
            perfect_transmission: true,
            ..Default::default()
        }
    }

    /// Evaluates every derived quantity against `comm`.
    pub fn derive(&self, comm: &CommConfig) -> Result<LinkParams> {
        let gamma = average_snr(self, comm)?;
        let gamma_th = gamma_threshold(comm)?;
        let eta = detection_threshold(gamma)?;
        let zeta = if self.perfect_detection {
            0.0
        } else {
            sr_miss_probability(gamma)?
        };
        let epsilon = if self.perfect_transmission {
            0.0
        } else {
            outage_probability(gamma, gamma_th)?
        };
        let rho = packet_drop_rate(zeta, epsilon, comm.max_sr_attempts, comm.max_pt_attempts)?;
        Ok(LinkParams {
            gamma,
            gamma_th,
            eta,
            zeta,
            epsilon,
            rho,
            perfect_detection: self.perfect_detection,
            perfect_transmission: self.perfect_transmission,
        })
    }
}

/// Derived per-sensor link quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkParams {
    /// Average received SNR γ.
    pub gamma: f64,
    /// Outage threshold γ_TH.
    pub gamma_th: f64,
    /// Preamble detection threshold η.
    pub eta: f64,
    /// Probability that one scheduling request is missed, ζ.
    pub zeta: f64,
    /// Outage probability of one packet transmission, ε.
    pub epsilon: f64,
    /// Packet drop rate ρ.
    pub rho: f64,
    pub perfect_detection: bool,
    pub perfect_transmission: bool,
}

/// Complete description of an experiment: scenario, protocol and one link
/// per sensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Setup {
    pub scenario: ScenarioConfig,
    pub comm: CommConfig,
    pub links: Vec<SensorLink>,
}

impl Setup {
    /// Builds a setup where sensor 2 (and any sensor past it) uses `gamma2`,
    /// and sensor 1 defaults to the same value.
    pub fn with_uniform_gamma(scenario: ScenarioConfig, comm: CommConfig, gamma: f64) -> Self {
        let links = vec![SensorLink::with_gamma(gamma); scenario.sensors];
        Setup {
            scenario,
            comm,
            links,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.comm.validate(self.scenario.sensors)?;
        if self.links.len() != self.scenario.sensors {
            return Err(Error::config(format!(
                "{} sensor links configured for I = {} sensors",
                self.links.len(),
                self.scenario.sensors
            )));
        }
        self.derived_links().map(|_| ())
    }

    pub fn derived_links(&self) -> Result<Vec<LinkParams>> {
        self.links.iter().map(|l| l.derive(&self.comm)).collect()
    }

    /// Drop rate of the sensor whose packet is compared against the first
    /// arrival (sensor 2, or sensor 1 when I = 1).
    pub fn rho2(&self) -> Result<f64> {
        let idx = if self.links.len() >= 2 { 1 } else { 0 };
        let link = self
            .links
            .get(idx)
            .ok_or_else(|| Error::config("no sensor links configured"))?;
        Ok(link.derive(&self.comm)?.rho)
    }
}

fn require_positive(name: &str, value: Option<f64>) -> Result<f64> {
    match value {
        None => Err(Error::config(format!("missing {name}"))),
        Some(v) if v > 0.0 && v.is_finite() => Ok(v),
        Some(v) => Err(Error::config(format!("{name} must be positive, got {v}"))),
    }
}

/// Average received SNR `γ = P β / (N0 B)`, or the configured override.
pub fn average_snr(link: &SensorLink, comm: &CommConfig) -> Result<f64> {
    if let Some(g) = link.gamma_override {
        return if g > 0.0 && g.is_finite() {
            Ok(g)
        } else {
            Err(Error::config(format!("gamma must be positive, got {g}")))
        };
    }
    let p = require_positive("P (transmit power)", link.power)?;
    let beta = require_positive("beta (large-scale fading)", link.beta)?;
    let n0 = require_positive("N0 (noise spectral density)", comm.noise_density)?;
    let b = require_positive("B (bandwidth)", comm.bandwidth)?;
    Ok(p * beta / (n0 * b))
}

/// Outage SNR threshold `γ_TH = 2^(b / (T_p B)) - 1`, or the override.
pub fn gamma_threshold(comm: &CommConfig) -> Result<f64> {
    if let Some(g) = comm.gamma_th_override {
        return if g > 0.0 && g.is_finite() {
            Ok(g)
        } else {
            Err(Error::config(format!("gamma_TH must be positive, got {g}")))
        };
    }
    let bits = require_positive("b (packet size)", comm.packet_bits)?;
    let tp = require_positive("T_p (packet sub-frame)", comm.pt_duration)?;
    let b = require_positive("B (bandwidth)", comm.bandwidth)?;
    Ok((bits / (tp * b)).exp2() - 1.0)
}

fn check_snr(name: &str, gamma: f64) -> Result<()> {
    if gamma > 0.0 && !gamma.is_nan() {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "{name} must be positive, got {gamma}"
        )))
    }
}

/// Optimal preamble detection threshold `η = (1 + 1/γ) ln(1 + γ)`.
pub fn detection_threshold(gamma: f64) -> Result<f64> {
    check_snr("gamma", gamma)?;
    Ok((1.0 + gamma.recip()) * gamma.ln_1p())
}

/// Probability that the base station misses one scheduling request,
/// `ζ = 1 - (1 + γ)^(-1/γ)`.
pub fn sr_miss_probability(gamma: f64) -> Result<f64> {
    check_snr("gamma", gamma)?;
    // -expm1 keeps precision when the exponent is tiny (large gamma).
    Ok(-(-gamma.ln_1p() / gamma).exp_m1())
}

/// Rayleigh outage probability `ε = 1 - exp(-γ_TH / γ)`.
pub fn outage_probability(gamma: f64, gamma_th: f64) -> Result<f64> {
    check_snr("gamma", gamma)?;
    check_snr("gamma_TH", gamma_th)?;
    Ok(-(-gamma_th / gamma).exp_m1())
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if (0.0..1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must lie in [0, 1), got {p}")))
    }
}

/// Probability that either the scheduling requests or the packet
/// transmissions run out of attempts.
pub fn packet_drop_rate(zeta: f64, epsilon: f64, max_sr: u32, max_pt: u32) -> Result<f64> {
    check_probability("zeta", zeta)?;
    check_probability("epsilon", epsilon)?;
    if max_sr < 1 || max_pt < 1 {
        return Err(Error::domain("attempt limits must be at least 1"));
    }
    let sr_exhausted = zeta.powi(max_sr as i32);
    let pt_exhausted = epsilon.powi(max_pt as i32);
    Ok(sr_exhausted + pt_exhausted - sr_exhausted * pt_exhausted)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw_comm() -> CommConfig {
        CommConfig {
            bandwidth: Some(1.0),
            noise_density: Some(1.0),
            pt_duration: Some(0.5),
            packet_bits: Some(0.5),
            ..CommConfig::new(1.0, 5, 5)
        }
    }

    #[test]
    fn average_snr_from_physics_and_override() {
        let comm = raw_comm();
        let unit = SensorLink {
            power: Some(1.0),
            beta: Some(1.0),
            ..Default::default()
        };
        assert_eq!(average_snr(&unit, &comm).unwrap(), 1.0);
        let half = SensorLink {
            power: Some(2.0),
            beta: Some(0.5),
            ..Default::default()
        };
        assert_eq!(average_snr(&half, &comm).unwrap(), 1.0);
        let direct = SensorLink {
            power: Some(2.0),
            gamma_override: Some(4.0),
            ..Default::default()
        };
        assert_eq!(average_snr(&direct, &comm).unwrap(), 4.0);
    }

    #[test]
    fn average_snr_names_missing_field() {
        let comm = raw_comm();
        let link = SensorLink {
            power: Some(1.0),
            ..Default::default()
        };
        let err = average_snr(&link, &comm).unwrap_err();
        assert!(
            matches!(err, Error::Config(ref m) if m.contains("beta")),
            "{err}"
        );
    }

    #[test]
    fn gamma_threshold_cases() {
        // b = T_p B
        assert_eq!(gamma_threshold(&raw_comm()).unwrap(), 1.0);
        let doubled = CommConfig {
            packet_bits: Some(1.0),
            ..raw_comm()
        };
        assert_eq!(gamma_threshold(&doubled).unwrap(), 3.0);
        let overridden = CommConfig {
            gamma_th_override: Some(1.0),
            ..CommConfig::new(0.01, 5, 5)
        };
        assert_eq!(gamma_threshold(&overridden).unwrap(), 1.0);
        let bad = CommConfig {
            bandwidth: Some(0.0),
            ..raw_comm()
        };
        assert!(matches!(gamma_threshold(&bad), Err(Error::Config(_))));
    }

    #[test]
    fn detection_threshold_values() {
        assert!((detection_threshold(1.0).unwrap() - 2.0 * 2f64.ln()).abs() < 1e-12);
        assert!((detection_threshold(4.0).unwrap() - 2.011797).abs() < 1e-6);
        let g = 1e6;
        let ratio = detection_threshold(g).unwrap() / g.ln_1p();
        assert!((ratio - 1.0).abs() < 1e-5);
        assert!(matches!(detection_threshold(0.0), Err(Error::Domain(_))));
        assert!(matches!(detection_threshold(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn sr_miss_values() {
        assert!((sr_miss_probability(1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((sr_miss_probability(4.0).unwrap() - 0.331260).abs() < 1e-6);
        let tiny = sr_miss_probability(1e6).unwrap();
        assert!(tiny > 0.0 && tiny < 2e-5);
        assert!(sr_miss_probability(0.0).is_err());
    }

    #[test]
    fn outage_values() {
        assert!((outage_probability(4.0, 1.0).unwrap() - 0.221199).abs() < 1e-6);
        assert!((outage_probability(1.0, 1.0).unwrap() - 0.632121).abs() < 1e-6);
        assert!(outage_probability(1e12, 1e-12).unwrap() < 1e-20);
        assert!(outage_probability(1.0, 0.0).is_err());
    }

    #[test]
    fn drop_rate_values() {
        assert_eq!(packet_drop_rate(0.0, 0.0, 3, 3).unwrap(), 0.0);
        assert_eq!(packet_drop_rate(0.5, 0.5, 1, 1).unwrap(), 0.75);
        let zeta = sr_miss_probability(4.0).unwrap();
        let eps = outage_probability(4.0, 1.0).unwrap();
        let rho = packet_drop_rate(zeta, eps, 9, 7).unwrap();
        assert!((rho - 7.4e-5).abs() < 0.05e-5, "rho2 = {rho:e}");
        assert!(packet_drop_rate(1.0, 0.0, 1, 1).is_err());
        assert!(packet_drop_rate(0.2, -0.1, 1, 1).is_err());
    }

    #[test]
    fn perfect_flags_force_zero() {
        let comm = CommConfig {
            gamma_th_override: Some(1.0),
            ..CommConfig::new(0.01, 5, 5)
        };
        let p = SensorLink::perfect().derive(&comm).unwrap();
        assert_eq!((p.zeta, p.epsilon, p.rho), (0.0, 0.0, 0.0));
    }

    #[test]
    fn comm_validation() {
        let mut comm = raw_comm();
        comm.pt_duration = Some(1.0);
        assert!(comm.validate(2).is_err());
        let mut comm = raw_comm();
        comm.preamble_len = Some(1);
        assert!(comm.validate(2).is_err());
        let mut comm = CommConfig::new(0.01, 5, 5);
        assert!(comm.validate(2).is_err());
        comm.gamma_th_override = Some(1.0);
        comm.validate(2).unwrap();
    }

    #[test]
    fn scenario_validation() {
        let mut s = ScenarioConfig {
            t0: 0.0,
            speed: 300.0,
            max_distance: 100.0,
            sensors: 2,
            comp_min: 0.01,
            comp_max: 0.01,
            allow_degenerate_comp: false,
        };
        assert!(s.validate().is_err());
        s.allow_degenerate_comp = true;
        s.validate().unwrap();
        s.speed = 0.0;
        assert!(s.validate().is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn drop_rate_monotone_in_limits(
                zeta in 0.0f64..0.999,
                eps in 0.0f64..0.999,
                m in 1u32..20,
                n in 1u32..20,
            ) {
                let base = packet_drop_rate(zeta, eps, m, n).unwrap();
                prop_assert!((0.0..1.0).contains(&base));
                prop_assert!(packet_drop_rate(zeta, eps, m + 1, n).unwrap() <= base);
                prop_assert!(packet_drop_rate(zeta, eps, m, n + 1).unwrap() <= base);
            }

            #[test]
            fn derived_quantities_in_range(gamma in 1e-3f64..1e5, gamma_th in 1e-3f64..1e3) {
                let zeta = sr_miss_probability(gamma).unwrap();
                let eps = outage_probability(gamma, gamma_th).unwrap();
                let eta = detection_threshold(gamma).unwrap();
                prop_assert!(zeta > 0.0 && zeta < 1.0);
                prop_assert!((0.0..1.0).contains(&eps));
                prop_assert!(eta.is_finite() && eta > 0.0);
            }
        }

        #[test]
        fn miss_and_outage_decrease_with_snr() {
            let grid: Vec<f64> = (0..=100)
                .map(|k| 10f64.powf(-1.0 + k as f64 * 0.05))
                .collect();
            for w in grid.windows(2) {
                assert!(sr_miss_probability(w[1]).unwrap() < sr_miss_probability(w[0]).unwrap());
                assert!(
                    outage_probability(w[1], 1.0).unwrap() < outage_probability(w[0], 1.0).unwrap()
                );
            }
        }
    }
}
