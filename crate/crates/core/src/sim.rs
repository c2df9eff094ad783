//! Seed-deterministic simulation of one event: propagation, computation and
//! the frame-based scheduling-request / grant / packet-transmission protocol.
//!
//! Frame `k` spans `[k T_f, (k + 1) T_f)`. A sensor whose update is ready at
//! `t` joins frame `ceil(t / T_f)`; each scheduling-request attempt and each
//! packet-transmission attempt occupies one frame, and a packet counts as
//! received at the end of the frame carrying its successful transmission:
//!
//! ```text
//! t_PA = ceil((t_EA + C) / T_f) T_f + m T_f + n T_f
//! ```

use std::f64::consts::FRAC_1_SQRT_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::params::{LinkParams, Setup};
use crate::{Error, Result};

/// How scheduling-request detection and packet outage are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChannelMode {
    /// Independent coin flips with the analytic miss/outage probabilities.
    #[default]
    Statistical,
    /// Rayleigh fading and receiver noise, tested against the detection and
    /// outage thresholds.
    SignalLevel,
}

impl ChannelMode {
    pub fn name(self) -> &'static str {
        match self {
            ChannelMode::Statistical => "statistical",
            ChannelMode::SignalLevel => "signal_level",
        }
    }
}

impl std::str::FromStr for ChannelMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "statistical" => Ok(ChannelMode::Statistical),
            "signal_level" => Ok(ChannelMode::SignalLevel),
            other => Err(Error::Config(format!(
                "unknown channel mode '{other}' (expected statistical or signal_level)"
            ))),
        }
    }
}

/// Identifies the random stream of one replication.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub replication_index: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, replication_index: u64) -> Self {
        SeedSpec {
            master_seed,
            replication_index,
        }
    }

    /// ChaCha8 keyed by the master seed, on the stream of the replication.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.replication_index);
        rng
    }
}

/// Result of a sequence of bounded retries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Attempts {
    /// Succeeded on the given attempt (1-based).
    Succeeded(u32),
    /// Every allowed attempt failed.
    Exhausted(u32),
    /// Never started because an earlier phase was exhausted.
    NotStarted,
}

impl Attempts {
    pub fn succeeded(self) -> Option<u32> {
        match self {
            Attempts::Succeeded(k) => Some(k),
            _ => None,
        }
    }

    /// Number of attempts actually made.
    pub fn made(self) -> u32 {
        match self {
            Attempts::Succeeded(k) | Attempts::Exhausted(k) => k,
            Attempts::NotStarted => 0,
        }
    }
}

/// Fate of one sensor's status update in one replication.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketOutcome {
    /// 1-based sensor index.
    pub sensor_id: usize,
    pub distance: f64,
    pub action_time: f64,
    pub comp_delay: f64,
    /// Frame joined after computation, `ceil((t_EA + C) / T_f)`.
    pub sync_frame: u64,
    pub sr_attempts: Attempts,
    pub pt_attempts: Attempts,
    /// Frames spent waiting for a packet-transmission slot (only with
    /// serialized grants).
    pub deferrals: u32,
    /// Arrival time at the base station, `f64::INFINITY` when dropped.
    pub arrival_time: f64,
    pub dropped: bool,
}

impl PacketOutcome {
    /// `m + n` for a received packet.
    pub fn access_frames(&self) -> Option<u32> {
        Some(self.sr_attempts.succeeded()? + self.pt_attempts.succeeded()?)
    }

    /// Arrival time recomputed from the other fields.
    pub fn expected_arrival(&self, frame: f64) -> f64 {
        match self.access_frames() {
            Some(access) if !self.dropped => {
                (self.sync_frame + u64::from(access) + u64::from(self.deferrals)) as f64 * frame
            }
            _ => f64::INFINITY,
        }
    }
}

/// Protocol step recorded in a trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceKind {
    SrMissed,
    SrGranted,
    PtDeferred,
    PtOutage,
    PtReceived,
    Dropped,
}

impl TraceKind {
    pub fn name(self) -> &'static str {
        match self {
            TraceKind::SrMissed => "sr_missed",
            TraceKind::SrGranted => "sr_granted",
            TraceKind::PtDeferred => "pt_deferred",
            TraceKind::PtOutage => "pt_outage",
            TraceKind::PtReceived => "pt_received",
            TraceKind::Dropped => "dropped",
        }
    }
}

/// One frame-level protocol event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceEvent {
    pub replication: u64,
    pub sensor_id: usize,
    pub frame: u64,
    pub kind: TraceKind,
}

/// Distance of a sensor uniform on the disc: `D_max sqrt(U)`.
pub fn sample_distance<R: Rng + ?Sized>(rng: &mut R, max_distance: f64) -> f64 {
    max_distance * rng.random::<f64>().sqrt()
}

/// Computation delay uniform on `[C_min, C_max]`.
pub fn sample_comp_delay<R: Rng + ?Sized>(rng: &mut R, comp_min: f64, comp_max: f64) -> f64 {
    comp_min + (comp_max - comp_min) * rng.random::<f64>()
}

pub fn event_action_time(t0: f64, distance: f64, speed: f64) -> f64 {
    t0 + distance / speed
}

/// Index of the first frame starting at or after `t`. Times within 1e-9
/// frames of a boundary are treated as exactly on it.
pub fn frame_index(t: f64, frame: f64) -> u64 {
    let x = (t / frame).max(0.0);
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.max(1.0) {
        r as u64
    } else {
        x.ceil() as u64
    }
}

/// Unit-power circularly-symmetric complex Gaussian sample, as `(re, im)`.
fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    (re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
}

/// One scheduling request; `true` when the base station detects it.
///
/// In signal-level mode the correlator output normalised by the noise power
/// is `sqrt(γ) g + w` with `g, w ~ CN(0, 1)`; its energy is exponential with
/// mean `1 + γ` and is compared with the threshold `η`.
pub fn sr_attempt<R: Rng + ?Sized>(link: &LinkParams, mode: ChannelMode, rng: &mut R) -> bool {
    if link.perfect_detection {
        return true;
    }
    match mode {
        ChannelMode::Statistical => rng.random::<f64>() >= link.zeta,
        ChannelMode::SignalLevel => {
            let (gr, gi) = complex_normal(rng);
            let (wr, wi) = complex_normal(rng);
            let amp = link.gamma.sqrt();
            let (yr, yi) = (amp * gr + wr, amp * gi + wi);
            yr * yr + yi * yi >= link.eta
        }
    }
}

/// One packet transmission; `true` when it is not in outage.
///
/// In signal-level mode the instantaneous SNR is `γ |g|²` with `g ~ CN(0, 1)`.
pub fn pt_attempt<R: Rng + ?Sized>(
    link: &LinkParams,
    gamma_th: f64,
    mode: ChannelMode,
    rng: &mut R,
) -> bool {
    if link.perfect_transmission {
        return true;
    }
    match mode {
        ChannelMode::Statistical => rng.random::<f64>() >= link.epsilon,
        ChannelMode::SignalLevel => {
            let (gr, gi) = complex_normal(rng);
            link.gamma * (gr * gr + gi * gi) >= gamma_th
        }
    }
}

/// Analytic rate at which noise alone crosses the detection threshold.
/// False alarms have no effect on the protocol and are not simulated.
pub fn false_alarm_rate(eta: f64) -> f64 {
    (-eta).exp()
}

/// Distance and computation delay of one sensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorDraw {
    pub distance: f64,
    pub comp_delay: f64,
}

/// Simulator for a validated [`Setup`].
#[derive(Debug, Clone)]
pub struct Simulator {
    setup: Setup,
    links: Vec<LinkParams>,
    mode: ChannelMode,
}

struct Pending {
    outcome: PacketOutcome,
    ready_frame: u64,
    pt_made: u32,
}

impl Simulator {
    pub fn new(setup: Setup, mode: ChannelMode) -> Result<Self> {
        setup.validate()?;
        let links = setup.derived_links()?;
        Ok(Simulator { setup, links, mode })
    }

    pub fn setup(&self) -> &Setup {
        &self.setup
    }

    pub fn links(&self) -> &[LinkParams] {
        &self.links
    }

    pub fn mode(&self) -> ChannelMode {
        self.mode
    }

    /// Simulates one event and returns one outcome per sensor, in sensor
    /// order.
    pub fn run_replication(&self, seed: SeedSpec) -> Vec<PacketOutcome> {
        let mut rng = seed.rng();
        let scenario = &self.setup.scenario;
        let draws: Vec<SensorDraw> = (0..scenario.sensors)
            .map(|_| SensorDraw {
                distance: sample_distance(&mut rng, scenario.max_distance),
                comp_delay: sample_comp_delay(&mut rng, scenario.comp_min, scenario.comp_max),
            })
            .collect();
        self.run_with_draws(&draws, &mut rng, seed.replication_index, None)
    }

    /// Same as [`run_replication`](Self::run_replication), also recording
    /// every frame-level protocol event.
    pub fn run_replication_traced(
        &self,
        seed: SeedSpec,
        trace: &mut Vec<TraceEvent>,
    ) -> Vec<PacketOutcome> {
        let mut rng = seed.rng();
        let scenario = &self.setup.scenario;
        let draws: Vec<SensorDraw> = (0..scenario.sensors)
            .map(|_| SensorDraw {
                distance: sample_distance(&mut rng, scenario.max_distance),
                comp_delay: sample_comp_delay(&mut rng, scenario.comp_min, scenario.comp_max),
            })
            .collect();
        self.run_with_draws(&draws, &mut rng, seed.replication_index, Some(trace))
    }

    /// Runs the protocol with given distances and computation delays; the
    /// channel draws come from `rng`.
    pub fn run_with_draws<R: Rng + ?Sized>(
        &self,
        draws: &[SensorDraw],
        rng: &mut R,
        replication: u64,
        mut trace: Option<&mut Vec<TraceEvent>>,
    ) -> Vec<PacketOutcome> {
        let scenario = &self.setup.scenario;
        let comm = &self.setup.comm;
        let frame = comm.frame;
        let mut record = |sensor_id, frame, kind| {
            if let Some(t) = trace.as_deref_mut() {
                t.push(TraceEvent {
                    replication,
                    sensor_id,
                    frame,
                    kind,
                });
            }
        };

        let mut pending: Vec<Pending> = Vec::with_capacity(draws.len());
        for (idx, (draw, link)) in draws.iter().zip(&self.links).enumerate() {
            let sensor_id = idx + 1;
            let action_time = event_action_time(scenario.t0, draw.distance, scenario.speed);
            let sync_frame = frame_index(action_time + draw.comp_delay, frame);
            let mut sr = Attempts::Exhausted(comm.max_sr_attempts);
            for m in 1..=comm.max_sr_attempts {
                let f = sync_frame + u64::from(m - 1);
                if sr_attempt(link, self.mode, rng) {
                    record(sensor_id, f, TraceKind::SrGranted);
                    sr = Attempts::Succeeded(m);
                    break;
                }
                record(sensor_id, f, TraceKind::SrMissed);
            }
            let ready_frame = sync_frame + u64::from(sr.made());
            if matches!(sr, Attempts::Exhausted(_)) {
                record(sensor_id, ready_frame - 1, TraceKind::Dropped);
            }
            pending.push(Pending {
                outcome: PacketOutcome {
                    sensor_id,
                    distance: draw.distance,
                    action_time,
                    comp_delay: draw.comp_delay,
                    sync_frame,
                    sr_attempts: sr,
                    pt_attempts: Attempts::NotStarted,
                    deferrals: 0,
                    arrival_time: f64::INFINITY,
                    dropped: true,
                },
                ready_frame,
                pt_made: 0,
            });
        }

        if comm.serialize_grants {
            self.transmit_round_robin(&mut pending, rng, &mut record);
        } else {
            for p in pending.iter_mut() {
                if p.outcome.sr_attempts.succeeded().is_none() {
                    continue;
                }
                let link = &self.links[p.outcome.sensor_id - 1];
                let mut pt = Attempts::Exhausted(comm.max_pt_attempts);
                for n in 1..=comm.max_pt_attempts {
                    let f = p.ready_frame + u64::from(n - 1);
                    if pt_attempt(link, link.gamma_th, self.mode, rng) {
                        record(p.outcome.sensor_id, f, TraceKind::PtReceived);
                        pt = Attempts::Succeeded(n);
                        break;
                    }
                    record(p.outcome.sensor_id, f, TraceKind::PtOutage);
                }
                Self::finish(&mut p.outcome, pt, frame);
                if p.outcome.dropped {
                    let last = p.ready_frame + u64::from(comm.max_pt_attempts) - 1;
                    record(p.outcome.sensor_id, last, TraceKind::Dropped);
                }
            }
        }
        pending.into_iter().map(|p| p.outcome).collect()
    }

    /// One packet per frame; contending sensors are served round-robin by
    /// sensor index and the others wait one frame.
    fn transmit_round_robin<R: Rng + ?Sized>(
        &self,
        pending: &mut [Pending],
        rng: &mut R,
        record: &mut impl FnMut(usize, u64, TraceKind),
    ) {
        let comm = &self.setup.comm;
        let count = pending.len();
        let mut active: Vec<usize> = (0..count)
            .filter(|&i| pending[i].outcome.sr_attempts.succeeded().is_some())
            .collect();
        let mut pointer = 0usize;
        let mut current = match active.iter().map(|&i| pending[i].ready_frame).min() {
            Some(f) => f,
            None => return,
        };
        while !active.is_empty() {
            let ready: Vec<usize> = active
                .iter()
                .copied()
                .filter(|&i| pending[i].ready_frame <= current)
                .collect();
            if ready.is_empty() {
                current = active
                    .iter()
                    .map(|&i| pending[i].ready_frame)
                    .min()
                    .unwrap();
                continue;
            }
            let chosen = *ready
                .iter()
                .min_by_key(|&&i| (i + count - pointer) % count)
                .unwrap();
            pointer = (chosen + 1) % count;
            for &i in ready.iter().filter(|&&i| i != chosen) {
                pending[i].outcome.deferrals += 1;
                record(pending[i].outcome.sensor_id, current, TraceKind::PtDeferred);
            }
            let link = &self.links[chosen];
            let p = &mut pending[chosen];
            p.pt_made += 1;
            let finished = if pt_attempt(link, link.gamma_th, self.mode, rng) {
                record(p.outcome.sensor_id, current, TraceKind::PtReceived);
                Some(Attempts::Succeeded(p.pt_made))
            } else {
                record(p.outcome.sensor_id, current, TraceKind::PtOutage);
                (p.pt_made == comm.max_pt_attempts).then_some(Attempts::Exhausted(p.pt_made))
            };
            if let Some(pt) = finished {
                Self::finish(&mut p.outcome, pt, comm.frame);
                if p.outcome.dropped {
                    record(p.outcome.sensor_id, current, TraceKind::Dropped);
                }
                active.retain(|&i| i != chosen);
            }
            current += 1;
        }
    }

    fn finish(outcome: &mut PacketOutcome, pt: Attempts, frame: f64) {
        outcome.pt_attempts = pt;
        outcome.dropped = pt.succeeded().is_none();
        outcome.arrival_time = outcome.expected_arrival(frame);
    }
}
