//! Per-avatar, per-slot resource utilization and page-dirtying workloads.
//!
//! CPU, memory and disk utilization come either from a trace CSV or from a
//! synthetic generator. Bandwidth utilization and the dirtying rate are
//! always synthetic.
//!
//! Trace format (CSV with header):
//!
//! ```text
//! avatar_id,slot,u_cpu,u_mem,u_disk
//! 0,0,0.5,0.5,0.2
//! ```
//!
//! Each avatar id needs contiguous slots starting at 0. Queries past the end
//! of a series wrap cyclically; simulated avatar `i` reads trace series
//! `i mod <number of trace avatars>` in ascending id order.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AvatarWorkload {
    pub u_cpu: f64,
    pub u_mem: f64,
    pub u_disk: f64,
    pub u_net: f64,
    pub dirty_pages_per_slot: f64,
    pub bw_mu_mbps: f64,
    pub bw_sigma: f64,
}

/// Homogeneous avatar hardware.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AvatarSpec {
    pub mem_capacity_bits: f64,
    pub bw_capacity_mbps: f64,
    pub page_size_bits: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirtyRateMode {
    /// Redrawn for every avatar every slot.
    PerSlot,
    /// Drawn once per avatar at start.
    Fixed,
}

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error("reading trace: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("line {line}: {field} = {value} is outside [0, 1]")]
    OutOfRange { line: u64, field: &'static str, value: f64 },
    #[error("trace contains no records")]
    Empty,
    #[error("avatar {avatar}: slots must be contiguous from 0, missing slot {missing}")]
    Gap { avatar: u64, missing: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
struct TraceRow {
    avatar_id: u64,
    slot: u64,
    u_cpu: f64,
    u_mem: f64,
    u_disk: f64,
}

/// CPU/memory/disk utilization for one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtilSample {
    pub u_cpu: f64,
    pub u_mem: f64,
    pub u_disk: f64,
}

/// Immutable utilization table keyed by avatar then slot.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    ids: Vec<u64>,
    series: Vec<Vec<UtilSample>>,
}

impl Trace {
    pub fn num_avatars(&self) -> usize {
        self.series.len()
    }

    pub fn avatar_ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn slots(&self, series: usize) -> usize {
        self.series[series].len()
    }

    /// Sample for simulated avatar `avatar` at `slot`, wrapping both indices.
    pub fn get(&self, avatar: usize, slot: usize) -> UtilSample {
        let s = &self.series[avatar % self.series.len()];
        s[slot % s.len()]
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self, TraceError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut table: BTreeMap<u64, BTreeMap<u64, UtilSample>> = BTreeMap::new();
        let parse_err = |e: csv::Error| TraceError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        };
        let headers = rdr.headers().map_err(parse_err)?.clone();
        for rec in rdr.records() {
            let rec = rec.map_err(parse_err)?;
            let line = rec.position().map_or(0, |p| p.line());
            let row: TraceRow = rec.deserialize(Some(&headers)).map_err(|e| TraceError::Parse {
                line,
                message: e.to_string(),
            })?;
            for (field, value) in [("u_cpu", row.u_cpu), ("u_mem", row.u_mem), ("u_disk", row.u_disk)] {
                if !(0.0..=1.0).contains(&value) {
                    return Err(TraceError::OutOfRange { line, field, value });
                }
            }
            let sample = UtilSample {
                u_cpu: row.u_cpu,
                u_mem: row.u_mem,
                u_disk: row.u_disk,
            };
            if table
                .entry(row.avatar_id)
                .or_default()
                .insert(row.slot, sample)
                .is_some()
            {
                return Err(TraceError::Parse {
                    line,
                    message: format!("duplicate record for avatar {} slot {}", row.avatar_id, row.slot),
                });
            }
        }
        if table.is_empty() {
            return Err(TraceError::Empty);
        }
        let mut ids = Vec::with_capacity(table.len());
        let mut series = Vec::with_capacity(table.len());
        for (id, slots) in table {
            for (expected, &slot) in slots.keys().enumerate() {
                if slot != expected as u64 {
                    return Err(TraceError::Gap {
                        avatar: id,
                        missing: expected as u64,
                    });
                }
            }
            ids.push(id);
            series.push(slots.into_values().collect());
        }
        Ok(Self { ids, series })
    }
}

pub fn load_trace(path: &Path) -> Result<Trace, TraceError> {
    Trace::from_reader(std::fs::File::open(path)?)
}

/// Bandwidth demand ~ N(mu, sigma²) Mbps, clamped to [0, capacity], as a
/// fraction of capacity.
pub fn sample_bandwidth_util<R: Rng + ?Sized>(rng: &mut R, mu: f64, sigma: f64, capacity_mbps: f64) -> f64 {
    let demand = Normal::new(mu, sigma)
        .expect("bandwidth sigma must be finite and >= 0")
        .sample(rng);
    demand.clamp(0.0, capacity_mbps) / capacity_mbps
}

pub fn sample_dirty_rate<R: Rng + ?Sized>(rng: &mut R, max_pages: f64) -> f64 {
    rng.random_range(0.0..=max_pages)
}

pub fn dirty_rate_bits_per_s(pages_per_slot: f64, page_size_bits: f64, slot_seconds: f64) -> f64 {
    pages_per_slot * page_size_bits / slot_seconds
}

/// Knobs for the synthetic parts of the workload.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisParams {
    pub bw_mu_range: (f64, f64),
    /// Range of the per-avatar bandwidth variance; sigma is its square root.
    pub bw_var_range: (f64, f64),
    pub dirty_max_pages: f64,
    pub dirty_rate_mode: DirtyRateMode,
    /// Per-avatar base utilization range used without a trace.
    pub util_base_range: (f64, f64),
    /// Std-dev of per-slot noise around the base utilization.
    pub util_jitter: f64,
}

#[derive(Debug, Clone, Copy)]
struct Profile {
    base: UtilSample,
    bw_mu: f64,
    bw_sigma: f64,
    fixed_dirty: f64,
}

/// Produces one [`AvatarWorkload`] per avatar per slot from a private RNG.
///
/// The number of draws per slot depends only on the avatar count, so two
/// generators with the same seed yield the same sequence whatever the
/// consumer does with it.
pub struct WorkloadGenerator<R> {
    rng: R,
    params: SynthesisParams,
    spec: AvatarSpec,
    trace: Option<Trace>,
    profiles: Vec<Profile>,
}

fn draw_range<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    rng.random_range(lo..=hi)
}

impl<R: Rng> WorkloadGenerator<R> {
    pub fn new(
        mut rng: R,
        num_avatars: usize,
        params: SynthesisParams,
        spec: AvatarSpec,
        trace: Option<Trace>,
    ) -> Self {
        let profiles = (0..num_avatars)
            .map(|_| {
                let base = UtilSample {
                    u_cpu: draw_range(&mut rng, params.util_base_range),
                    u_mem: draw_range(&mut rng, params.util_base_range),
                    u_disk: draw_range(&mut rng, params.util_base_range),
                };
                let bw_mu = draw_range(&mut rng, params.bw_mu_range);
                let bw_sigma = draw_range(&mut rng, params.bw_var_range).sqrt();
                let fixed_dirty = sample_dirty_rate(&mut rng, params.dirty_max_pages);
                Profile {
                    base,
                    bw_mu,
                    bw_sigma,
                    fixed_dirty,
                }
            })
            .collect();
        Self {
            rng,
            params,
            spec,
            trace,
            profiles,
        }
    }

    pub fn sample_slot(&mut self, slot: usize) -> Vec<AvatarWorkload> {
        let jitter = Normal::new(0.0, self.params.util_jitter).expect("util jitter must be >= 0");
        let mut out = Vec::with_capacity(self.profiles.len());
        for (i, p) in self.profiles.iter().enumerate() {
            let noise = [
                jitter.sample(&mut self.rng),
                jitter.sample(&mut self.rng),
                jitter.sample(&mut self.rng),
            ];
            let u = match &self.trace {
                Some(t) => t.get(i, slot),
                None => UtilSample {
                    u_cpu: (p.base.u_cpu + noise[0]).clamp(0.0, 1.0),
                    u_mem: (p.base.u_mem + noise[1]).clamp(0.0, 1.0),
                    u_disk: (p.base.u_disk + noise[2]).clamp(0.0, 1.0),
                },
            };
            let u_net = sample_bandwidth_util(&mut self.rng, p.bw_mu, p.bw_sigma, self.spec.bw_capacity_mbps);
            let redraw = sample_dirty_rate(&mut self.rng, self.params.dirty_max_pages);
            let dirty = match self.params.dirty_rate_mode {
                DirtyRateMode::PerSlot => redraw,
                DirtyRateMode::Fixed => p.fixed_dirty,
            };
            out.push(AvatarWorkload {
                u_cpu: u.u_cpu,
                u_mem: u.u_mem,
                u_disk: u.u_disk,
                u_net,
                dirty_pages_per_slot: dirty,
                bw_mu_mbps: p.bw_mu,
                bw_sigma: p.bw_sigma,
            });
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params() -> SynthesisParams {
        SynthesisParams {
            bw_mu_range: (0.0, 350.0),
            bw_var_range: (0.0, 100.0),
            dirty_max_pages: 10_000.0,
            dirty_rate_mode: DirtyRateMode::PerSlot,
            util_base_range: (0.2, 0.8),
            util_jitter: 0.05,
        }
    }

    fn spec() -> AvatarSpec {
        AvatarSpec {
            mem_capacity_bits: 4.0 * 8.0 * (1u64 << 30) as f64,
            bw_capacity_mbps: 500.0,
            page_size_bits: 32_768.0,
        }
    }

    #[test]
    fn parses_a_single_row() {
        let t = Trace::from_reader("avatar_id,slot,u_cpu,u_mem,u_disk\n0,0,0.5,0.5,0.2\n".as_bytes()).unwrap();
        assert_eq!(t.num_avatars(), 1);
        assert_eq!(
            t.get(0, 0),
            UtilSample {
                u_cpu: 0.5,
                u_mem: 0.5,
                u_disk: 0.2
            }
        );
    }

    #[test]
    fn wraps_cyclically() {
        let mut csv = String::from("avatar_id,slot,u_cpu,u_mem,u_disk\n");
        for s in 0..10 {
            csv.push_str(&format!("3,{s},{},0.1,0.1\n", s as f64 / 10.0));
        }
        let t = Trace::from_reader(csv.as_bytes()).unwrap();
        assert_eq!(t.get(0, 25).u_cpu, 0.5);
        assert_eq!(t.get(7, 25).u_cpu, 0.5);
        assert_eq!(t.avatar_ids(), &[3]);
    }

    #[test]
    fn rejects_empty_input() {
        assert!(matches!(Trace::from_reader("".as_bytes()), Err(TraceError::Empty)));
        assert!(matches!(
            Trace::from_reader("avatar_id,slot,u_cpu,u_mem,u_disk\n".as_bytes()),
            Err(TraceError::Empty)
        ));
    }

    #[test]
    fn reports_line_of_malformed_row() {
        let err =
            Trace::from_reader("avatar_id,slot,u_cpu,u_mem,u_disk\n0,0,0.5,0.5,0.2\n0,1,abc,0.5,0.2\n".as_bytes())
                .unwrap_err();
        match err {
            TraceError::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn rejects_out_of_range_utilization() {
        let err = Trace::from_reader("avatar_id,slot,u_cpu,u_mem,u_disk\n0,0,0.5,1.5,0.2\n".as_bytes()).unwrap_err();
        assert!(
            matches!(
                err,
                TraceError::OutOfRange {
                    field: "u_mem",
                    line: 2,
                    ..
                }
            ),
            "{err}"
        );
    }

    #[test]
    fn rejects_slot_gaps() {
        let err =
            Trace::from_reader("avatar_id,slot,u_cpu,u_mem,u_disk\n0,0,0.5,0.5,0.2\n0,2,0.5,0.5,0.2\n".as_bytes())
                .unwrap_err();
        assert!(matches!(err, TraceError::Gap { avatar: 0, missing: 1 }));
    }

    #[test]
    fn bandwidth_degenerate_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(sample_bandwidth_util(&mut rng, 0.0, 0.0, 500.0), 0.0);
        assert!((sample_bandwidth_util(&mut rng, 350.0, 0.0, 500.0) - 0.7).abs() < 1e-15);
        assert_eq!(sample_bandwidth_util(&mut rng, 900.0, 0.0, 500.0), 1.0);
    }

    #[test]
    fn bandwidth_sample_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 100_000;
        let mean: f64 = (0..n)
            .map(|_| sample_bandwidth_util(&mut rng, 250.0, 10.0, 500.0) * 500.0)
            .sum::<f64>()
            / n as f64;
        assert!((248.0..=252.0).contains(&mean), "{mean}");
    }

    #[test]
    fn dirty_rate_range_and_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        assert_eq!(sample_dirty_rate(&mut rng, 0.0), 0.0);
        let n = 100_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let d = sample_dirty_rate(&mut rng, 10_000.0);
            assert!((0.0..=10_000.0).contains(&d));
            sum += d;
        }
        let mean = sum / n as f64;
        assert!((4900.0..=5100.0).contains(&mean), "{mean}");
    }

    #[test]
    fn dirty_rate_unit_conversion() {
        assert_eq!(dirty_rate_bits_per_s(0.0, 32_768.0, 300.0), 0.0);
        let r = dirty_rate_bits_per_s(10_000.0, 32_768.0, 300.0);
        assert!((r - 1_092_266.666_666_666_7).abs() < 1e-6);
        assert!((dirty_rate_bits_per_s(10_000.0, 32_768.0, 150.0) - 2.0 * r).abs() < 1e-6);
    }

    #[test]
    fn generator_is_deterministic_and_in_range() {
        let mut a = WorkloadGenerator::new(ChaCha8Rng::seed_from_u64(9), 50, params(), spec(), None);
        let mut b = WorkloadGenerator::new(ChaCha8Rng::seed_from_u64(9), 50, params(), spec(), None);
        for slot in 0..20 {
            let wa = a.sample_slot(slot);
            assert_eq!(wa, b.sample_slot(slot));
            for w in wa {
                for u in [w.u_cpu, w.u_mem, w.u_disk, w.u_net] {
                    assert!((0.0..=1.0).contains(&u));
                }
                assert!((0.0..=10_000.0).contains(&w.dirty_pages_per_slot));
                assert!((0.0..=350.0).contains(&w.bw_mu_mbps));
                assert!((0.0..=10.0).contains(&w.bw_sigma));
            }
        }
    }

    #[test]
    fn fixed_dirty_mode_keeps_rate() {
        let p = SynthesisParams {
            dirty_rate_mode: DirtyRateMode::Fixed,
            ..params()
        };
        let mut g = WorkloadGenerator::new(ChaCha8Rng::seed_from_u64(1), 5, p, spec(), None);
        let first = g.sample_slot(0);
        let second = g.sample_slot(1);
        for (a, b) in first.iter().zip(&second) {
            assert_eq!(a.dirty_pages_per_slot, b.dirty_pages_per_slot);
        }
    }

    #[test]
    fn trace_mode_uses_trace_utilization() {
        let t = Trace::from_reader("avatar_id,slot,u_cpu,u_mem,u_disk\n0,0,0.1,0.2,0.3\n0,1,0.4,0.5,0.6\n".as_bytes())
            .unwrap();
        let mut g = WorkloadGenerator::new(ChaCha8Rng::seed_from_u64(1), 2, params(), spec(), Some(t));
        let w = g.sample_slot(3);
        assert_eq!((w[0].u_cpu, w[0].u_mem, w[0].u_disk), (0.4, 0.5, 0.6));
        assert_eq!((w[1].u_cpu, w[1].u_mem, w[1].u_disk), (0.4, 0.5, 0.6));
    }
}
