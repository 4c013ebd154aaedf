//! In-process micro-benchmark: real measurements on the host machine.
//!
//! Runs the measurement protocol without NIC hardware: a tight loop over a
//! pool of synthetic packet buffers stands in for the forwarding path. The
//! baseline body is a buffer fetch, a first-cache-line read, and a counter
//! bump; profiled pipelines add exactly one operator body on top. Derived
//! costs are relative to that baseline, which the throughput delta cancels,
//! so the baseline only needs to be consistent, not NIC-faithful.
//!
//! Environmental controls are the caller's job: pin the process to a
//! dedicated core and disable CPU frequency scaling before trusting the
//! numbers. The harness warns but cannot enforce either.

pub mod operators;

use std::io::Write;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::derive::{derive_sweep, DeriveError, ValidityWarning};
use crate::fit::{fit_power_law, FitError};
use crate::io::profile::{ProfileDocument, FIT_SPACE, PROFILE_SCHEMA_VERSION};
use crate::model::{CostSample, MeasurementRecord, PlatformSpec, BASELINE_OPERATOR};
use crate::opq::{classify_points, OpqError};
use operators::{
    crc32, crc32_table, flow_key, format_log_line, htons_field, internet_checksum, FlowTable,
    RingLog, FLOW_KEY_LEN, FLOW_TABLE_LOAD, FLOW_TABLE_SLOTS, MIN_PACKET_SIZE,
};

#[derive(Debug, Error)]
#[non_exhaustive]
pub enum BenchError {
    #[error("unknown operator \"{name}\"; expected one of: baseline, crc, checksum, htons, hash, printf, ringlog")]
    UnknownOperator { name: String },
    #[error("bench config invalid: {reason}")]
    InvalidConfig { reason: String },
    #[error("monotonic clock granularity {granularity_ns} ns is too coarse for calibration (limit {limit_ns} ns)")]
    ClockResolutionTooCoarse { granularity_ns: u128, limit_ns: u128 },
    #[error("operator {operator}: derived cost still negative after one retry")]
    PersistentNegativeCost {
        operator: String,
        #[source]
        source: DeriveError,
    },
    #[error(transparent)]
    Derive(#[from] DeriveError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Opq(#[from] OpqError),
}

/// Benchmark parameters. Defaults: 64/128/256-byte sweeps, 0.2 s warmup and
/// 0.5 s measurement per window, 3 repetitions, a 256-buffer pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub packet_sizes: Vec<u32>,
    pub warmup_secs: f64,
    pub measure_secs: f64,
    pub repetitions: u32,
    /// Skips spin-loop calibration when the clock rate is known.
    pub cpu_hz_override: Option<f64>,
    /// Packet buffers cycled round-robin by the measurement loop.
    pub pool_size: usize,
    /// Seeds pool contents and flow-table population.
    pub seed: u64,
    /// Platform name stamped on emitted records.
    pub platform_name: String,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            packet_sizes: vec![64, 128, 256],
            warmup_secs: 0.2,
            measure_secs: 0.5,
            repetitions: 3,
            cpu_hz_override: None,
            pool_size: 256,
            seed: 0x0B_E4C4,
            platform_name: "host".to_string(),
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<(), BenchError> {
        let fail = |reason: &str| {
            Err(BenchError::InvalidConfig {
                reason: reason.to_string(),
            })
        };
        if self.packet_sizes.is_empty() {
            return fail("packet_sizes must be non-empty");
        }
        if self.packet_sizes.iter().any(|&s| s < MIN_PACKET_SIZE) {
            return fail("packet sizes must be at least 18 bytes (L2 header + payload)");
        }
        if !(self.warmup_secs > 0.0) || !(self.measure_secs > 0.0) {
            return fail("warmup and measure durations must be positive");
        }
        if self.repetitions == 0 {
            return fail("repetitions must be at least 1");
        }
        if self.pool_size == 0 {
            return fail("pool_size must be at least 1");
        }
        if self.platform_name.is_empty() {
            return fail("platform_name must be non-empty");
        }
        Ok(())
    }
}

/// The profiled operator set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OperatorId {
    Baseline,
    Crc,
    Checksum,
    Htons,
    Hash,
    Printf,
    Ringlog,
}

impl OperatorId {
    pub const ALL_PROFILED: [OperatorId; 6] = [
        OperatorId::Crc,
        OperatorId::Checksum,
        OperatorId::Htons,
        OperatorId::Hash,
        OperatorId::Printf,
        OperatorId::Ringlog,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OperatorId::Baseline => BASELINE_OPERATOR,
            OperatorId::Crc => "crc",
            OperatorId::Checksum => "checksum",
            OperatorId::Htons => "htons",
            OperatorId::Hash => "hash",
            OperatorId::Printf => "printf",
            OperatorId::Ringlog => "ringlog",
        }
    }
}

impl FromStr for OperatorId {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "baseline" => Ok(OperatorId::Baseline),
            "crc" => Ok(OperatorId::Crc),
            "checksum" => Ok(OperatorId::Checksum),
            "htons" => Ok(OperatorId::Htons),
            "hash" => Ok(OperatorId::Hash),
            "printf" => Ok(OperatorId::Printf),
            "ringlog" => Ok(OperatorId::Ringlog),
            _ => Err(BenchError::UnknownOperator {
                name: s.to_string(),
            }),
        }
    }
}

/// Pool of synthetic packet buffers in one cache-line-aligned arena.
struct PacketPool {
    data: Vec<u8>,
    stride: usize,
    size: usize,
    count: usize,
    cursor: usize,
}

impl PacketPool {
    fn new(packet_size: u32, count: usize, seed: u64) -> Self {
        let size = packet_size as usize;
        let stride = size.next_multiple_of(64);
        let mut data = vec![0u8; stride * count];
        ChaCha8Rng::seed_from_u64(seed).fill_bytes(&mut data);
        Self {
            data,
            stride,
            size,
            count,
            cursor: 0,
        }
    }

    #[inline]
    fn next_buf(&mut self) -> &mut [u8] {
        let offset = self.cursor * self.stride;
        self.cursor += 1;
        if self.cursor == self.count {
            self.cursor = 0;
        }
        &mut self.data[offset..offset + self.size]
    }

    fn buf(&self, index: usize) -> &[u8] {
        let offset = index * self.stride;
        &self.data[offset..offset + self.size]
    }
}

/// Mutable state shared by all operator bodies for one pipeline.
struct OpState {
    sink: u64,
    counter: u64,
    crc_table: [u32; 256],
    flow: FlowTable,
    ring: RingLog,
    stderr: std::io::Stderr,
    line: [u8; 64],
}

const RING_CAPACITY: usize = 1 << 20;

impl OpState {
    /// Flow table holds every pool buffer's key (so lookups always hit)
    /// plus seeded random keys up to the target load factor.
    fn new(pool: &PacketPool, seed: u64) -> Self {
        let mut flow = FlowTable::new();
        for i in 0..pool.count {
            flow.insert(flow_key(pool.buf(i)), i as u64);
        }
        let target = (FLOW_TABLE_SLOTS as f64 * FLOW_TABLE_LOAD) as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED_F10A);
        let mut value = pool.count as u64;
        while flow.len() < target {
            let mut key = [0u8; FLOW_KEY_LEN];
            rng.fill_bytes(&mut key);
            flow.insert(key, value);
            value += 1;
        }
        Self {
            sink: 0,
            counter: 0,
            crc_table: crc32_table(),
            flow,
            ring: RingLog::with_capacity(RING_CAPACITY),
            stderr: std::io::stderr(),
            line: [0u8; 64],
        }
    }
}

const LOOP_BATCH: u64 = 256;

/// One timed window: batches of the tight loop until the deadline passes.
/// Returns packets processed and the true elapsed seconds.
fn timed_window<B: FnMut(&mut [u8], &mut OpState)>(
    pool: &mut PacketPool,
    state: &mut OpState,
    body: &mut B,
    duration: Duration,
) -> (u64, f64) {
    let start = Instant::now();
    let deadline = start + duration;
    let mut packets: u64 = 0;
    loop {
        for _ in 0..LOOP_BATCH {
            let buf = pool.next_buf();
            // Baseline touch: read the first cache line, bump the counter.
            state.sink = state.sink.wrapping_add(u64::from(buf[0]));
            state.counter = state.counter.wrapping_add(1);
            body(buf, state);
        }
        packets += LOOP_BATCH;
        if Instant::now() >= deadline {
            break;
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    std::hint::black_box(state.sink);
    (packets, elapsed)
}

/// Raw pipeline output: per-(size, repetition) records plus the consumed
/// sink accumulator that keeps operator bodies observable.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub records: Vec<MeasurementRecord>,
    pub sink: u64,
}

/// Warmup + measurement windows for each repetition; statically dispatched
/// per operator body so tiny bodies stay inlined in the tight loop.
fn sweep_repetitions<B: FnMut(&mut [u8], &mut OpState)>(
    pool: &mut PacketPool,
    state: &mut OpState,
    mut body: B,
    warmup: Duration,
    measure: Duration,
    repetitions: u32,
) -> Vec<(u32, u64, f64)> {
    let mut results = Vec::with_capacity(repetitions as usize);
    for rep in 1..=repetitions {
        timed_window(pool, state, &mut body, warmup);
        let (packets, elapsed) = timed_window(pool, state, &mut body, measure);
        results.push((rep, packets, elapsed));
    }
    results
}

/// Runs one operator pipeline over the configured size sweep.
pub fn run_pipeline(config: &BenchConfig, operator: OperatorId) -> Result<PipelineRun, BenchError> {
    config.validate()?;
    let warmup = Duration::from_secs_f64(config.warmup_secs);
    let measure = Duration::from_secs_f64(config.measure_secs);
    let reps = config.repetitions;
    let mut records = Vec::new();
    let mut sink = 0u64;

    for &size in &config.packet_sizes {
        let mut pool = PacketPool::new(size, config.pool_size, config.seed ^ u64::from(size));
        let mut state = OpState::new(&pool, config.seed ^ u64::from(size));

        let results = match operator {
            OperatorId::Baseline => {
                sweep_repetitions(&mut pool, &mut state, |_buf, _state| {}, warmup, measure, reps)
            }
            OperatorId::Crc => sweep_repetitions(
                &mut pool,
                &mut state,
                |buf, state| {
                    let crc = crc32(&state.crc_table, buf);
                    state.sink = state.sink.wrapping_add(u64::from(crc));
                },
                warmup,
                measure,
                reps,
            ),
            OperatorId::Checksum => sweep_repetitions(
                &mut pool,
                &mut state,
                |buf, state| {
                    let sum = internet_checksum(buf);
                    state.sink = state.sink.wrapping_add(u64::from(sum));
                },
                warmup,
                measure,
                reps,
            ),
            OperatorId::Htons => sweep_repetitions(
                &mut pool,
                &mut state,
                |buf, state| {
                    let swapped = htons_field(buf);
                    state.sink = state.sink.wrapping_add(u64::from(swapped));
                },
                warmup,
                measure,
                reps,
            ),
            OperatorId::Hash => sweep_repetitions(
                &mut pool,
                &mut state,
                |buf, state| {
                    let key = flow_key(buf);
                    let value = state.flow.lookup(&key).unwrap_or(0);
                    state.sink = state.sink.wrapping_add(value);
                },
                warmup,
                measure,
                reps,
            ),
            OperatorId::Printf => sweep_repetitions(
                &mut pool,
                &mut state,
                |_buf, state| {
                    let mut line = state.line;
                    let n = format_log_line(&mut line, b"printf", state.counter);
                    let _ = state.stderr.write_all(&line[..n]);
                    state.sink = state.sink.wrapping_add(n as u64);
                },
                warmup,
                measure,
                reps,
            ),
            OperatorId::Ringlog => sweep_repetitions(
                &mut pool,
                &mut state,
                |_buf, state| {
                    let mut line = state.line;
                    let n = format_log_line(&mut line, b"ringlog", state.counter);
                    state.ring.append(&line[..n]);
                    state.sink = state.sink.wrapping_add(n as u64);
                },
                warmup,
                measure,
                reps,
            ),
        };

        for (rep, packets, elapsed) in results {
            records.push(MeasurementRecord {
                platform: config.platform_name.clone(),
                operator: operator.name().to_string(),
                packet_size: size,
                throughput_pps: packets as f64 / elapsed,
                run_id: Some(rep),
            });
        }

        sink = sink
            .wrapping_add(state.sink)
            .wrapping_add(state.ring.cursor() as u64);
    }

    Ok(PipelineRun { records, sink })
}

const CALIBRATION_TRIALS: usize = 5;
const CALIBRATION_SPIN_ITERS: u64 = 40_000_000;
const CLOCK_GRANULARITY_LIMIT_NS: u128 = 1_000;

/// Smallest observable step of the monotonic clock, in nanoseconds.
pub fn clock_granularity_ns() -> u128 {
    let mut min_delta = u128::MAX;
    for _ in 0..16 {
        let t0 = Instant::now();
        let mut t1 = Instant::now();
        while t1 <= t0 {
            t1 = Instant::now();
        }
        min_delta = min_delta.min((t1 - t0).as_nanos());
    }
    min_delta
}

/// Dependent single-add chain: retires ~1 cycle per iteration on current
/// x86-64 and aarch64 cores, which is the conversion factor the estimate
/// assumes. `black_box` stops the loop from being folded into a multiply.
#[inline(never)]
fn spin(iters: u64) -> u64 {
    let mut x = 0u64;
    for _ in 0..iters {
        x = std::hint::black_box(x.wrapping_add(1));
    }
    x
}

/// Returns the override if configured, otherwise estimates the clock rate
/// by timing a fixed-iteration spin loop (median of 5 trials).
///
/// The estimate tracks the *effective* frequency; with scaling enabled it
/// drifts, which is exactly why pinning the frequency is a documented
/// prerequisite.
pub fn calibrate_cpu_hz(config: &BenchConfig) -> Result<f64, BenchError> {
    if let Some(hz) = config.cpu_hz_override {
        if !(hz > 0.0) {
            return Err(BenchError::InvalidConfig {
                reason: format!("cpu_hz_override must be positive, got {hz}"),
            });
        }
        return Ok(hz);
    }

    let granularity_ns = clock_granularity_ns();
    if granularity_ns > CLOCK_GRANULARITY_LIMIT_NS {
        return Err(BenchError::ClockResolutionTooCoarse {
            granularity_ns,
            limit_ns: CLOCK_GRANULARITY_LIMIT_NS,
        });
    }

    std::hint::black_box(spin(CALIBRATION_SPIN_ITERS / 10)); // warm the core up
    let mut rates = Vec::with_capacity(CALIBRATION_TRIALS);
    for _ in 0..CALIBRATION_TRIALS {
        let start = Instant::now();
        std::hint::black_box(spin(CALIBRATION_SPIN_ITERS));
        let elapsed = start.elapsed().as_secs_f64();
        rates.push(CALIBRATION_SPIN_ITERS as f64 / elapsed);
    }
    rates.sort_by(|a, b| a.partial_cmp(b).expect("finite rates"));
    Ok(rates[rates.len() / 2])
}

/// Full host profile: curves, classification, and raw measurements.
#[derive(Debug, Clone)]
pub struct BenchReport {
    pub profile: ProfileDocument,
    /// Baseline plus operator records, in run order (CSV-ready).
    pub measurements: Vec<MeasurementRecord>,
    pub warnings: Vec<ValidityWarning>,
    pub cpu_hz: f64,
    pub sink: u64,
}

/// Runs baseline plus the requested operators, derives and fits each cost
/// curve, and classifies the host's quadrant points.
///
/// A sweep whose derivation comes back negative (operator apparently faster
/// than baseline) is re-measured once; a second failure aborts loudly.
pub fn bench_to_profile(
    config: &BenchConfig,
    operators: &[OperatorId],
) -> Result<BenchReport, BenchError> {
    config.validate()?;
    let cpu_hz = calibrate_cpu_hz(config)?;

    let baseline = run_pipeline(config, OperatorId::Baseline)?;
    let mut measurements = baseline.records.clone();
    let mut sink = baseline.sink;
    let mut warnings = stability_warnings(&baseline.records);

    let mut curves = Vec::new();
    let mut samples: Vec<CostSample> = Vec::new();

    for &op in operators.iter().filter(|&&op| op != OperatorId::Baseline) {
        let mut run = run_pipeline(config, op)?;
        let derivation = match derive_sweep(cpu_hz, &baseline.records, &run.records) {
            Ok(d) => d,
            Err(DeriveError::NegativeCost { .. }) => {
                run = run_pipeline(config, op)?;
                derive_sweep(cpu_hz, &baseline.records, &run.records).map_err(|e| {
                    if matches!(e, DeriveError::NegativeCost { .. }) {
                        BenchError::PersistentNegativeCost {
                            operator: op.name().to_string(),
                            source: e,
                        }
                    } else {
                        BenchError::Derive(e)
                    }
                })?
            }
            Err(other) => return Err(other.into()),
        };

        warnings.extend(stability_warnings(&run.records));
        measurements.extend(run.records);
        sink = sink.wrapping_add(run.sink);

        curves.push(fit_power_law(&derivation.samples)?);
        samples.extend(derivation.samples);
    }

    let opq_points = if curves.is_empty() {
        Vec::new()
    } else {
        classify_points(&curves, &config.platform_name, None)?
    };

    let profile = ProfileDocument {
        schema_version: PROFILE_SCHEMA_VERSION.to_string(),
        platform: PlatformSpec::new(
            config.platform_name.clone(),
            cpu_hz,
            format!(
                "{}/{} (spin-loop calibrated)",
                std::env::consts::ARCH,
                std::env::consts::OS
            ),
        ),
        curves,
        samples,
        opq_points,
        provenance: "bench".to_string(),
        fit_space: FIT_SPACE.to_string(),
    };

    Ok(BenchReport {
        profile,
        measurements,
        warnings,
        cpu_hz,
        sink,
    })
}

/// Flags (operator, size) groups whose repetition spread exceeds 10%.
fn stability_warnings(records: &[MeasurementRecord]) -> Vec<ValidityWarning> {
    const MAX_SPREAD: f64 = 1.10;
    let mut groups: std::collections::BTreeMap<(String, u32), Vec<f64>> =
        std::collections::BTreeMap::new();
    for r in records {
        groups
            .entry((r.operator.clone(), r.packet_size))
            .or_default()
            .push(r.throughput_pps);
    }
    let mut warnings = Vec::new();
    for ((operator, packet_size), pps) in groups {
        let max = pps.iter().copied().fold(f64::MIN, f64::max);
        let min = pps.iter().copied().fold(f64::MAX, f64::min);
        let spread = max / min;
        if spread > MAX_SPREAD {
            warnings.push(ValidityWarning::Noisy {
                operator,
                packet_size,
                spread_ratio: spread,
            });
        }
    }
    warnings
}
