//! Airspeed statistics over simulated trajectories and the forward-invariance
//! verdict for an airspeed envelope.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::Trajectory;
use crate::units::{knots_to_ms, ms_to_knots};
use crate::viability::AirspeedEnvelope;

pub const DEFAULT_BINS: usize = 50;
/// Padding of the default histogram range beyond the envelope, in knots.
pub const DEFAULT_PAD_KTS: f64 = 2.0;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("no airspeed samples to analyse")]
    EmptyInput,
    #[error("invalid histogram: {0}")]
    InvalidHistogram(String),
}

/// Fixed-width histogram. `counts[i]` holds samples in
/// `[edges[i], edges[i + 1])`; the last bin also includes its upper edge.
/// Samples outside the edges are counted separately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges_kts: Vec<f64>,
    pub counts: Vec<u64>,
    pub below: u64,
    pub above: u64,
}

impl Histogram {
    pub fn new(lo_kts: f64, hi_kts: f64, bins: usize) -> Result<Self, AnalysisError> {
        if bins == 0 || !(hi_kts > lo_kts) {
            return Err(AnalysisError::InvalidHistogram(format!(
                "{bins} bins over [{lo_kts}, {hi_kts}] kt"
            )));
        }
        let width = (hi_kts - lo_kts) / bins as f64;
        let mut edges_kts: Vec<f64> = (0..bins).map(|i| lo_kts + i as f64 * width).collect();
        edges_kts.push(hi_kts);
        Ok(Self {
            edges_kts,
            counts: vec![0; bins],
            below: 0,
            above: 0,
        })
    }

    pub fn add(&mut self, value_kts: f64) {
        let bins = self.counts.len();
        let (lo, hi) = (self.edges_kts[0], self.edges_kts[bins]);
        if value_kts < lo {
            self.below += 1;
        } else if value_kts > hi {
            self.above += 1;
        } else {
            let i = ((value_kts - lo) / (hi - lo) * bins as f64) as usize;
            self.counts[i.min(bins - 1)] += 1;
        }
    }
}

/// Aggregate airspeed statistics. Speeds are in m/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub envelope: AirspeedEnvelope,
    pub v_min_observed: f64,
    pub v_max_observed: f64,
    pub mean: f64,
    pub stddev: f64,
    pub sample_count: u64,
    pub trajectory_count: usize,
    /// Samples strictly outside the envelope.
    pub violation_count: u64,
    pub histogram: Histogram,
    pub total_sim_time_s: f64,
}

impl InvarianceReport {
    pub fn certified(&self) -> bool {
        self.violation_count == 0
    }

    /// Smallest distance from an observed extreme to the envelope boundary,
    /// in knots; negative when the envelope was left.
    pub fn margin_kts(&self) -> f64 {
        ms_to_knots((self.v_min_observed - self.envelope.v_min_ms).min(self.envelope.v_max_ms - self.v_max_observed))
    }
}

/// Statistics with the default histogram: 50 bins spanning the envelope
/// padded by 2 kt on each side.
pub fn analyze(trajs: &[Trajectory], env: &AirspeedEnvelope) -> Result<InvarianceReport, AnalysisError> {
    let lo = ms_to_knots(env.v_min_ms) - DEFAULT_PAD_KTS;
    let hi = ms_to_knots(env.v_max_ms) + DEFAULT_PAD_KTS;
    analyze_with_histogram(trajs, env, Histogram::new(lo, hi, DEFAULT_BINS)?)
}

pub fn analyze_with_histogram(
    trajs: &[Trajectory],
    env: &AirspeedEnvelope,
    mut histogram: Histogram,
) -> Result<InvarianceReport, AnalysisError> {
    let mut count = 0u64;
    let mut mean = 0.0;
    let mut m2 = 0.0;
    let mut v_min = f64::INFINITY;
    let mut v_max = f64::NEG_INFINITY;
    let mut violations = 0;
    for s in trajs.iter().flat_map(|t| t.states.iter()) {
        let v = s.airspeed_ms;
        // Welford's running mean and variance
        count += 1;
        let delta = v - mean;
        mean += delta / count as f64;
        m2 += delta * (v - mean);
        v_min = v_min.min(v);
        v_max = v_max.max(v);
        if !env.contains(v) {
            violations += 1;
        }
        histogram.add(ms_to_knots(v));
    }
    if count == 0 {
        return Err(AnalysisError::EmptyInput);
    }
    Ok(InvarianceReport {
        envelope: *env,
        v_min_observed: v_min,
        v_max_observed: v_max,
        mean,
        stddev: (m2 / count as f64).sqrt(),
        sample_count: count,
        trajectory_count: trajs.len(),
        violation_count: violations,
        histogram,
        total_sim_time_s: trajs.iter().map(Trajectory::duration_s).sum(),
    })
}

/// Envelope from a `"LO:HI"` pair of knots.
pub fn parse_envelope_kts(text: &str) -> Option<AirspeedEnvelope> {
    let (lo, hi) = text.split_once(':')?;
    let (lo, hi): (f64, f64) = (lo.trim().parse().ok()?, hi.trim().parse().ok()?);
    AirspeedEnvelope::new(knots_to_ms(lo), knots_to_ms(hi)).ok()
}
