//! Synthetic regulation signals and an ex-post check of the battery's
//! state of charge while it follows them.

use std::io::Read;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::AgcError;
use crate::par;
use crate::scenario::BessParams;

/// Seconds between signal samples.
pub const SAMPLE_SECONDS: f64 = 4.0;
/// Tolerance on the state-of-charge limits, MWh.
pub const HEADROOM_TOL: f64 = 1e-9;
const STEP_STD: f64 = 0.08;
const MAX_CORRECTIONS: usize = 64;

/// Normalized regulation signal of one interval. Positive values ask the
/// battery to inject power.
#[derive(Debug, Clone, PartialEq)]
pub struct AgcTrace {
    pub signal: Vec<f64>,
    pub sample_seconds: f64,
}

/// Samples per interval of `delta_t` hours.
pub fn samples_for(delta_t: f64) -> usize {
    (delta_t * 3600.0 / SAMPLE_SECONDS).round() as usize
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Shifts `raw` to zero mean and keeps it inside `[-1, 1]`, alternating mean
/// removal and shrinking toward zero until both hold.
pub fn zero_mean_bounded(mut v: Vec<f64>) -> Vec<f64> {
    if v.is_empty() {
        return v;
    }
    for _ in 0..MAX_CORRECTIONS {
        let m = mean(&v);
        v.iter_mut().for_each(|x| *x -= m);
        let peak = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        if peak > 1.0 {
            v.iter_mut().for_each(|x| *x = (*x / peak).clamp(-1.0, 1.0));
        }
        if mean(&v).abs() <= 1e-15 && v.iter().all(|x| x.abs() <= 1.0) {
            break;
        }
    }
    v
}

/// Seeded random walk reflected at ±1, then made zero-mean.
pub fn generate_signal(seed: u64, samples: usize) -> AgcTrace {
    assert!(samples >= 2, "a trace needs at least two samples");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let step = Normal::new(0.0, STEP_STD).expect("finite standard deviation");
    let mut x: f64 = 0.0;
    let raw: Vec<f64> = (0..samples)
        .map(|_| {
            x += step.sample(&mut rng);
            while x.abs() > 1.0 {
                x = x.signum() * 2.0 - x;
            }
            x
        })
        .collect();
    AgcTrace { signal: zero_mean_bounded(raw), sample_seconds: SAMPLE_SECONDS }
}

impl AgcTrace {
    pub fn from_samples(signal: Vec<f64>) -> Result<AgcTrace, AgcError> {
        if let Some((index, &value)) = signal.iter().enumerate().find(|(_, v)| !(v.abs() <= 1.0)) {
            return Err(AgcError::Sample { index, value });
        }
        Ok(AgcTrace { signal, sample_seconds: SAMPLE_SECONDS })
    }

    pub fn mean(&self) -> f64 {
        mean(&self.signal)
    }

    /// Battery output for each sample at the given regulation capacity, MW.
    pub fn power(&self, regcap: f64) -> Vec<f64> {
        self.signal.iter().map(|s| s * regcap).collect()
    }

    /// Σ |Δsignal| × capacity, the movement actually requested, MW.
    pub fn mileage(&self, regcap: f64) -> f64 {
        self.signal.windows(2).map(|w| (w[1] - w[0]).abs()).sum::<f64>() * regcap
    }
}

/// Reads one signal column (header optional) of 4-second samples and cuts it
/// into intervals of `per_interval` samples.
pub fn read_signal_csv<R: Read>(reader: R, per_interval: usize) -> Result<Vec<AgcTrace>, AgcError> {
    let mut rd = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(reader);
    let mut values = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| AgcError::Csv("signal".into(), e.to_string()))?;
        let Some(field) = rec.iter().next_back() else { continue };
        match field.parse::<f64>() {
            Ok(v) => values.push(v),
            Err(_) if i == 0 => {}
            Err(_) => return Err(AgcError::Csv("signal".into(), format!("row {}: '{field}' is not a number", i + 1))),
        }
    }
    if per_interval == 0 || values.is_empty() || values.len() % per_interval != 0 {
        return Err(AgcError::Length { got: values.len(), per_interval });
    }
    values.chunks(per_interval).map(|c| AgcTrace::from_samples(c.to_vec())).collect()
}

pub fn load_signal_csv(path: impl AsRef<std::path::Path>, per_interval: usize) -> Result<Vec<AgcTrace>, AgcError> {
    let p = path.as_ref();
    let f = std::fs::File::open(p).map_err(|e| AgcError::Io(p.display().to_string(), e))?;
    read_signal_csv(f, per_interval)
}

/// Cleared battery position over one interval.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TrackingInterval {
    pub soc_start: f64,
    pub supply: f64,
    pub demand: f64,
    pub regcap: f64,
    pub delta_t: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackingReport {
    pub soc_end: f64,
    /// Change of state of charge from the energy awards alone, MWh.
    pub arbitrage_delta: f64,
    /// Change at the interval end caused by following the signal, MWh.
    pub regulation_delta: f64,
    pub min_soc: f64,
    pub max_soc: f64,
    /// Largest deviation from the arbitrage-only path, MWh.
    pub max_excursion: f64,
    pub below_min: bool,
    pub above_max: bool,
    pub requested_mileage: f64,
}

impl TrackingReport {
    pub fn violates_headroom(&self) -> bool {
        self.below_min || self.above_max
    }
}

/// Integrates the battery's state of charge sample by sample while it
/// follows `trace` on top of its energy awards.
pub fn simulate_tracking(iv: &TrackingInterval, bess: &BessParams, trace: &AgcTrace) -> TrackingReport {
    let n = trace.signal.len();
    let tau = iv.delta_t / n as f64;
    let net = iv.demand - iv.supply;
    let mut reg = 0.0;
    let mut min_soc = iv.soc_start;
    let mut max_soc = iv.soc_start;
    let mut excursion: f64 = 0.0;
    for (k, s) in trace.signal.iter().enumerate() {
        reg -= s * iv.regcap * tau;
        let soc = iv.soc_start + net * tau * (k + 1) as f64 + reg;
        min_soc = min_soc.min(soc);
        max_soc = max_soc.max(soc);
        excursion = excursion.max(reg.abs());
    }
    let arbitrage_delta = net * iv.delta_t;
    TrackingReport {
        soc_end: iv.soc_start + arbitrage_delta + reg,
        arbitrage_delta,
        regulation_delta: reg,
        min_soc,
        max_soc,
        max_excursion: excursion,
        below_min: min_soc < bess.soc_min - HEADROOM_TOL,
        above_max: max_soc > bess.soc_max + HEADROOM_TOL,
        requested_mileage: trace.mileage(iv.regcap),
    }
}

/// Simulates every interval against its own seeded trace
/// (`seed + interval index`).
pub fn track_schedule(intervals: &[TrackingInterval], bess: &BessParams, seed: u64) -> Vec<TrackingReport> {
    let idx: Vec<usize> = (0..intervals.len()).collect();
    par::map(&idx, |&t| {
        let iv = &intervals[t];
        let trace = generate_signal(seed.wrapping_add(t as u64), samples_for(iv.delta_t).max(2));
        simulate_tracking(iv, bess, &trace)
    })
}
