use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::stats::ols;
use super::BenchError;

pub const BYTES_PER_MB: f64 = 1e6;
/// Number of sawtooth periods averaged.
pub const MCR_PERIODS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemorySample {
    pub t_ms: f64,
    pub bytes: u64,
}

/// Bytes in use over time, sampled at a fixed interval.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MemoryTrace {
    samples: Vec<MemorySample>,
}

impl MemoryTrace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a sample; timestamps must strictly increase.
    pub fn push(&mut self, t_ms: f64, bytes: u64) -> Result<(), BenchError> {
        if let Some(last) = self.samples.last() {
            if !(t_ms > last.t_ms) {
                return Err(BenchError::Trace(format!(
                    "sample at {t_ms} ms does not follow {} ms",
                    last.t_ms
                )));
            }
        }
        if !t_ms.is_finite() {
            return Err(BenchError::Trace("non-finite timestamp".into()));
        }
        self.samples.push(MemorySample { t_ms, bytes });
        Ok(())
    }

    pub fn samples(&self) -> &[MemorySample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// The samples taken at or after `t_ms`.
    pub fn since(&self, t_ms: f64) -> MemoryTrace {
        MemoryTrace {
            samples: self.samples.iter().filter(|s| s.t_ms >= t_ms).copied().collect(),
        }
    }

    pub fn peak_bytes(&self) -> u64 {
        self.samples.iter().map(|s| s.bytes).max().unwrap_or(0)
    }

    /// CSV with header `t_ms,bytes`.
    pub fn write_csv(&self, w: impl Write) -> Result<(), BenchError> {
        let mut out = csv::Writer::from_writer(w);
        for s in &self.samples {
            out.serialize(s)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv(r: impl Read) -> Result<Self, BenchError> {
        let mut trace = Self::new();
        for row in csv::Reader::from_reader(r).deserialize() {
            let s: MemorySample = row?;
            trace.push(s.t_ms, s.bytes)?;
        }
        Ok(trace)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McrEstimate {
    pub mcr_mb_s: f64,
    pub mean_max_mb: f64,
    pub mean_min_mb: f64,
    pub mean_period_s: f64,
    /// Ramps the averages were taken over.
    pub periods: usize,
}

/// Memory consumption rate of a sawtooth trace: (mean peak − mean trough) /
/// mean period, in MB/s.
///
/// Peaks are found per excursion above `mean + 0.1·(max − min)` (an
/// excursion ends when the trace falls below `mean − 0.1·(max − min)`); the
/// excursion's maximum counts if it is also the maximum of the 5 samples
/// centred on it. After each peak the largest drop between consecutive
/// samples before the following trough marks the release instant. Each ramp
/// between two releases is fitted by least squares, and its peak and trough
/// are the fitted line at the ramp's end and start, so sample noise does not
/// bias the extremes. At least 10 peaks are required. Thresholds and peaks
/// are taken on the trace minus its least-squares trend line.
pub fn compute_mcr(trace: &MemoryTrace) -> Result<McrEstimate, BenchError> {
    let s = trace.samples();
    let ys: Vec<f64> = s.iter().map(|x| x.bytes as f64).collect();
    let n = ys.len();
    let no_period = |found: usize| BenchError::NoPeriodicity { peaks: found };
    if n < 5 {
        return Err(no_period(0));
    }
    // Detection runs on the residual of a global linear trend, so steady
    // growth under the sawtooth does not hide it; the ramps are still fitted
    // on the raw samples.
    let r: Vec<f64> = match ols(&s.iter().zip(&ys).map(|(x, &y)| (x.t_ms, y)).collect::<Vec<_>>()) {
        Some(trend) => s.iter().zip(&ys).map(|(x, &y)| y - trend.at(x.t_ms)).collect(),
        None => ys.clone(),
    };
    let lo = r.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // Relative guard: rounding residue of a straight line is not a period.
    let scale = ys.iter().copied().fold(0.0, |a: f64, y| a.max(y.abs())).max(1.0);
    if hi - lo <= 1e-9 * scale {
        return Err(no_period(0));
    }
    let mean = r.iter().sum::<f64>() / n as f64;
    let upper = mean + 0.1 * (hi - lo);
    let lower = mean - 0.1 * (hi - lo);

    let mut peaks = Vec::new();
    let mut excursion: Option<usize> = None;
    for i in 0..n {
        match excursion {
            None if r[i] > upper => excursion = Some(i),
            Some(best) if r[i] < lower => {
                if is_local_max(&r, best) {
                    peaks.push(best);
                }
                excursion = None;
            }
            Some(best) if r[i] > r[best] => excursion = Some(i),
            _ => {}
        }
    }
    // An excursion still open at the end has no trough after it and is not
    // a complete period.
    if peaks.len() < MCR_PERIODS {
        return Err(no_period(peaks.len()));
    }

    // Release instant after each peak that has a trough behind it.
    let mut drops: Vec<usize> = Vec::new();
    for w in peaks.windows(2) {
        let (p, next) = (w[0], w[1]);
        let trough = (p..next).min_by(|&a, &b| r[a].total_cmp(&r[b])).unwrap_or(p);
        let d = (p..trough.max(p + 1))
            .filter(|&i| i + 1 < n)
            .max_by(|&a, &b| (r[a] - r[a + 1]).total_cmp(&(r[b] - r[b + 1])))
            .unwrap_or(p);
        drops.push(d);
    }
    let t_drop = |d: usize| (s[d].t_ms + s[d + 1].t_ms) / 2.0;

    let mut maxes = Vec::new();
    let mut mins = Vec::new();
    let mut periods = Vec::new();
    for w in drops.windows(2).take(MCR_PERIODS) {
        let (a, b) = (w[0], w[1]);
        let ramp: Vec<(f64, f64)> = (a + 1..=b).map(|i| (s[i].t_ms, ys[i])).collect();
        let Some(fit) = ols(&ramp) else {
            continue;
        };
        let (start, end) = (t_drop(a), t_drop(b));
        maxes.push(fit.at(end));
        mins.push(fit.at(start));
        periods.push(end - start);
    }
    if periods.is_empty() {
        return Err(no_period(peaks.len()));
    }
    let k = periods.len() as f64;
    let mean_max = maxes.iter().sum::<f64>() / k;
    let mean_min = mins.iter().sum::<f64>() / k;
    let mean_period_s = periods.iter().sum::<f64>() / k / 1000.0;
    Ok(McrEstimate {
        mcr_mb_s: (mean_max - mean_min) / BYTES_PER_MB / mean_period_s,
        mean_max_mb: mean_max / BYTES_PER_MB,
        mean_min_mb: mean_min / BYTES_PER_MB,
        mean_period_s,
        periods: periods.len(),
    })
}

fn is_local_max(ys: &[f64], i: usize) -> bool {
    let from = i.saturating_sub(2);
    let to = (i + 2).min(ys.len() - 1);
    (from..=to).all(|j| ys[j] <= ys[i])
}

/// Parameters of a synthetic sawtooth: linear ramps from `trough_mb` to
/// `peak_mb` over `period_s`, each followed by an instant release.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sawtooth {
    pub trough_mb: f64,
    pub peak_mb: f64,
    pub period_s: f64,
    pub periods: usize,
    pub samples_per_period: usize,
    /// Uniform additive noise, as a fraction of the amplitude.
    pub noise: f64,
    /// Phase offset as a fraction of a period.
    pub phase: f64,
}

impl Sawtooth {
    pub fn analytic_mcr(&self) -> f64 {
        (self.peak_mb - self.trough_mb) / self.period_s
    }

    pub fn trace(&self, seed: u64) -> MemoryTrace {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let amp = self.peak_mb - self.trough_mb;
        let dt = self.period_s / self.samples_per_period as f64;
        let mut trace = MemoryTrace::new();
        for i in 0..self.periods * self.samples_per_period {
            let t = i as f64 * dt;
            let frac = (t / self.period_s + self.phase).fract();
            let noise = if self.noise > 0.0 {
                rng.gen_range(-self.noise..=self.noise) * amp
            } else {
                0.0
            };
            let mb = self.trough_mb + amp * frac + noise;
            trace
                .push(t * 1000.0, (mb * BYTES_PER_MB).max(0.0).round() as u64)
                .expect("grid timestamps increase");
        }
        trace
    }
}
