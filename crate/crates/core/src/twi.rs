//! Base-station window buffer.
//!
//! The first stored update opens a window of duration `W`. Stored updates
//! are delivered together, and the buffer cleared, as soon as all `I`
//! updates are stored or when the window expires. An update arriving after
//! expiry opens a new window.

use crate::sim::PacketOutcome;
use crate::{Error, Result};

/// Absolute tolerance (s) when comparing arrival times with window edges.
/// An update arriving exactly at the window end is still inside it.
pub const TIME_TOLERANCE: f64 = 1e-9;

/// One delivery of buffered updates to the application.
#[derive(Debug, Clone, PartialEq)]
pub struct DeliveryRecord {
    pub delivery_time: f64,
    /// 1-based sensor ids in arrival order.
    pub delivered_ids: Vec<usize>,
    /// Whether the event these updates belong to suffered a simultaneity
    /// violation.
    pub violation: bool,
    /// `delivery_time - t0`.
    pub latency: f64,
}

/// Deliveries produced by one event.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IngestResult {
    pub deliveries: Vec<DeliveryRecord>,
    pub violation: bool,
}

impl IngestResult {
    /// Latency of the first delivery, absent when nothing was received.
    pub fn latency(&self) -> Option<f64> {
        self.deliveries.first().map(|d| d.latency)
    }
}

/// A delivery emitted by [`TwiBuffer`].
#[derive(Debug, Clone, PartialEq)]
pub struct Delivery {
    pub time: f64,
    pub ids: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct TwiBuffer {
    window: f64,
    expected_count: usize,
    stored: Vec<(usize, f64)>,
    window_start: Option<f64>,
}

impl TwiBuffer {
    pub fn new(window: f64, expected_count: usize) -> Result<Self> {
        if !(window > 0.0) || window.is_nan() {
            return Err(Error::Config(format!(
                "window W must be positive, got {window}"
            )));
        }
        if expected_count < 1 {
            return Err(Error::Config(
                "expected update count must be at least 1".into(),
            ));
        }
        Ok(TwiBuffer {
            window,
            expected_count,
            stored: Vec::with_capacity(expected_count),
            window_start: None,
        })
    }

    pub fn window_start(&self) -> Option<f64> {
        self.window_start
    }

    pub fn stored(&self) -> &[(usize, f64)] {
        &self.stored
    }

    /// Stores an update arriving at `time` (non-decreasing across calls) and
    /// returns the deliveries this triggers: possibly the expiry of the
    /// current window, then possibly a complete buffer.
    pub fn receive(&mut self, sensor_id: usize, time: f64) -> Vec<Delivery> {
        let mut out = Vec::new();
        if let Some(start) = self.window_start {
            if time > start + self.window + TIME_TOLERANCE {
                out.extend(self.expire());
            }
        }
        if self.window_start.is_none() {
            self.window_start = Some(time);
        }
        self.stored.push((sensor_id, time));
        if self.stored.len() >= self.expected_count {
            out.push(self.deliver(time));
        }
        out
    }

    /// Delivers whatever is stored at the window end.
    pub fn expire(&mut self) -> Option<Delivery> {
        let start = self.window_start?;
        Some(self.deliver(start + self.window))
    }

    fn deliver(&mut self, time: f64) -> Delivery {
        self.window_start = None;
        Delivery {
            time,
            ids: self.stored.drain(..).map(|(id, _)| id).collect(),
        }
    }
}

/// Feeds the arrivals of one event through a fresh buffer.
///
/// The event has a violation when its updates are split over two or more
/// deliveries, or when some update was delivered while another sensor
/// dropped its packet. If every packet was dropped there is no delivery and
/// no violation.
pub fn ingest(
    arrivals: &[PacketOutcome],
    window: f64,
    expected_count: usize,
    t0: f64,
) -> Result<IngestResult> {
    let times: Vec<(usize, f64)> = arrivals
        .iter()
        .map(|o| {
            (
                o.sensor_id,
                if o.dropped {
                    f64::INFINITY
                } else {
                    o.arrival_time
                },
            )
        })
        .collect();
    ingest_times(&times, window, expected_count, t0)
}

/// [`ingest`] over `(sensor_id, arrival_time)` pairs; infinite times are drops.
pub fn ingest_times(
    arrivals: &[(usize, f64)],
    window: f64,
    expected_count: usize,
    t0: f64,
) -> Result<IngestResult> {
    let mut buffer = TwiBuffer::new(window, expected_count)?;
    let mut received: Vec<(usize, f64)> = arrivals
        .iter()
        .copied()
        .filter(|(_, t)| t.is_finite())
        .collect();
    received.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let any_dropped = received.len() < arrivals.len();

    let mut deliveries: Vec<Delivery> = Vec::new();
    for &(id, t) in &received {
        deliveries.extend(buffer.receive(id, t));
    }
    deliveries.extend(buffer.expire());

    let violation = deliveries.len() >= 2 || (any_dropped && !deliveries.is_empty());
    Ok(IngestResult {
        violation,
        deliveries: deliveries
            .into_iter()
            .map(|d| DeliveryRecord {
                latency: d.time - t0,
                delivery_time: d.time,
                delivered_ids: d.ids,
                violation,
            })
            .collect(),
    })
}

/// Time from the event to the first delivery,
/// `t_first + min(pdv, W) - t0`; a dropped second packet counts as an
/// infinite PDV. Absent when nothing was received.
pub fn latency(first_arrival: f64, pdv: f64, window: f64, t0: f64) -> Option<f64> {
    first_arrival
        .is_finite()
        .then(|| first_arrival + pdv.min(window) - t0)
}

/// Range of the received arrival times, absent with fewer than two.
pub fn pdv(arrivals: &[f64]) -> Option<f64> {
    let mut finite = arrivals.iter().copied().filter(|t| t.is_finite());
    let first = finite.next()?;
    let (lo, hi, count) = finite.fold((first, first, 1usize), |(lo, hi, n), t| {
        (lo.min(t), hi.max(t), n + 1)
    });
    (count >= 2).then_some(hi - lo)
}
