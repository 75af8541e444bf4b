//! Simulation configuration.
//!
//! Files are TOML with one table per section. Every key has a default, and
//! key names are unique across sections, so overrides can be given as flat
//! `key=value` pairs (`num_ues=10`, `strategy=static`).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::placement::Strategy;
use crate::workload::{AvatarSpec, DirtyRateMode, SynthesisParams};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("parsing config: {0}")]
    Parse(String),
    #[error("override `{0}` is not of the form key=value")]
    MalformedOverride(String),
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("invalid config: {}", .0.join("; "))]
    Invalid(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiteConfig {
    pub x: f64,
    pub y: f64,
    pub capacity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopologySection {
    pub rows: usize,
    pub cols: usize,
    pub cell_size_m: f64,
    pub epsilon_ms_per_m: f64,
    pub capacity: usize,
    /// Explicit co-located sites; replaces the grid when non-empty.
    pub sites: Vec<SiteConfig>,
    /// Area for explicit sites.
    pub width_m: f64,
    pub height_m: f64,
}

impl Default for TopologySection {
    fn default() -> Self {
        Self {
            rows: 5,
            cols: 5,
            cell_size_m: 2000.0,
            epsilon_ms_per_m: 0.2,
            capacity: 50,
            sites: Vec::new(),
            width_m: 10_000.0,
            height_m: 10_000.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MobilitySection {
    pub v_max_mps: f64,
}

impl Default for MobilitySection {
    fn default() -> Self {
        Self { v_max_mps: 10.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MigrationMemory {
    /// M = u_mem × memory capacity.
    Used,
    /// M = memory capacity.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemoryUnits {
    /// 1 GB = 2³⁰ bytes.
    Binary,
    /// 1 GB = 10⁹ bytes.
    Decimal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkloadSection {
    /// CPU/memory/disk trace CSV; empty for synthetic utilization.
    pub trace_path: String,
    pub bw_mu_min_mbps: f64,
    pub bw_mu_max_mbps: f64,
    pub bw_var_min: f64,
    pub bw_var_max: f64,
    pub dirty_max_pages: f64,
    pub page_size_bits: f64,
    pub dirty_rate_mode: DirtyRateMode,
    pub util_base_min: f64,
    pub util_base_max: f64,
    pub util_jitter: f64,
}

impl Default for WorkloadSection {
    fn default() -> Self {
        Self {
            trace_path: String::new(),
            bw_mu_min_mbps: 0.0,
            bw_mu_max_mbps: 350.0,
            bw_var_min: 0.0,
            bw_var_max: 100.0,
            dirty_max_pages: 10_000.0,
            page_size_bits: 32_768.0,
            dirty_rate_mode: DirtyRateMode::PerSlot,
            util_base_min: 0.2,
            util_base_max: 0.8,
            util_jitter: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AvatarSection {
    pub mem_gb: f64,
    pub memory_units: MemoryUnits,
    pub bw_capacity_mbps: f64,
    pub migration_memory: MigrationMemory,
}

impl Default for AvatarSection {
    fn default() -> Self {
        Self {
            mem_gb: 4.0,
            memory_units: MemoryUnits::Binary,
            bw_capacity_mbps: 500.0,
            migration_memory: MigrationMemory::Used,
        }
    }
}

impl AvatarSection {
    pub fn mem_capacity_bits(&self) -> f64 {
        let bytes_per_gb = match self.memory_units {
            MemoryUnits::Binary => (1u64 << 30) as f64,
            MemoryUnits::Decimal => 1e9,
        };
        self.mem_gb * bytes_per_gb * 8.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MigrationSection {
    pub r_mbps: f64,
    pub m_th_bits: f64,
    pub alpha: f64,
    pub w_net: f64,
    pub w_mem: f64,
    pub w_disk: f64,
    pub w_cpu: f64,
}

impl Default for MigrationSection {
    fn default() -> Self {
        Self {
            r_mbps: 200.0,
            m_th_bits: 3_276_800.0,
            alpha: 5.0,
            w_net: 0.8,
            w_mem: 0.6,
            w_disk: 0.4,
            w_cpu: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSection {
    pub num_ues: usize,
    pub num_slots: usize,
    pub slot_seconds: f64,
    pub strategy: Strategy,
    pub seed: u64,
    /// RTT reported as this multiple of the one-way core delay.
    pub rtt_factor: f64,
}

impl Default for SimulationSection {
    fn default() -> Self {
        Self {
            num_ues: 1000,
            num_slots: 288,
            slot_seconds: 300.0,
            strategy: Strategy::Primal,
            seed: 2015,
            rtt_factor: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub topology: TopologySection,
    pub mobility: MobilitySection,
    pub workload: WorkloadSection,
    pub avatar: AvatarSection,
    pub migration: MigrationSection,
    pub simulation: SimulationSection,
}

/// One row of the validation table.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl SimConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    /// Every resolved parameter, in the same format `load` reads.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config always serializes")
    }

    /// Applies `key=value` overrides. Values are read as TOML literals, falling
    /// back to a bare string (`strategy=far`).
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self, ConfigError> {
        let mut table: toml::Table = toml::from_str(&self.to_toml()).expect("config round-trips");
        for raw in overrides {
            let raw = raw.as_ref();
            let (key, value) = raw
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .filter(|(k, _)| !k.is_empty())
                .ok_or_else(|| ConfigError::MalformedOverride(raw.to_string()))?;
            let value = parse_value(value);
            let section = table
                .iter_mut()
                .filter_map(|(_, v)| v.as_table_mut())
                .find(|t| t.contains_key(key))
                .ok_or_else(|| ConfigError::UnknownKey(key.to_string()))?;
            section.insert(key.to_string(), value);
        }
        let text = toml::to_string(&table).expect("table serializes");
        Self::from_toml(&text)
    }

    pub fn synthesis(&self) -> SynthesisParams {
        let w = &self.workload;
        SynthesisParams {
            bw_mu_range: (w.bw_mu_min_mbps, w.bw_mu_max_mbps),
            bw_var_range: (w.bw_var_min, w.bw_var_max),
            dirty_max_pages: w.dirty_max_pages,
            dirty_rate_mode: w.dirty_rate_mode,
            util_base_range: (w.util_base_min, w.util_base_max),
            util_jitter: w.util_jitter,
        }
    }

    pub fn avatar_spec(&self) -> AvatarSpec {
        AvatarSpec {
            mem_capacity_bits: self.avatar.mem_capacity_bits(),
            bw_capacity_mbps: self.avatar.bw_capacity_mbps,
            page_size_bits: self.workload.page_size_bits,
        }
    }

    pub fn rate_bits_per_s(&self) -> f64 {
        self.migration.r_mbps * 1e6
    }

    pub fn max_dirty_bits_per_s(&self) -> f64 {
        crate::workload::dirty_rate_bits_per_s(
            self.workload.dirty_max_pages,
            self.workload.page_size_bits,
            self.simulation.slot_seconds,
        )
    }

    pub fn total_capacity(&self) -> usize {
        if self.topology.sites.is_empty() {
            self.topology.rows * self.topology.cols * self.topology.capacity
        } else {
            self.topology.sites.iter().map(|s| s.capacity).sum()
        }
    }

    pub fn checks(&self) -> Vec<Check> {
        let t = &self.topology;
        let w = &self.workload;
        let a = &self.avatar;
        let m = &self.migration;
        let s = &self.simulation;
        let mut out = Vec::new();
        let mut check = |name: &'static str, passed: bool, detail: String| out.push(Check { name, passed, detail });

        if t.sites.is_empty() {
            check(
                "grid",
                t.rows >= 1 && t.cols >= 1 && t.cell_size_m > 0.0,
                format!("{}x{} cells of {} m", t.rows, t.cols, t.cell_size_m),
            );
        } else {
            let inside = t.width_m > 0.0
                && t.height_m > 0.0
                && t.sites
                    .iter()
                    .all(|p| (0.0..=t.width_m).contains(&p.x) && (0.0..=t.height_m).contains(&p.y));
            check(
                "sites",
                inside,
                format!("{} explicit sites in {} x {} m", t.sites.len(), t.width_m, t.height_m),
            );
        }
        check(
            "epsilon",
            t.epsilon_ms_per_m >= 0.0 && t.epsilon_ms_per_m.is_finite(),
            format!("{} ms/m", t.epsilon_ms_per_m),
        );
        let cap = self.total_capacity();
        check(
            "capacity",
            s.num_ues <= cap,
            if s.num_ues <= cap {
                format!("{} avatars <= capacity {cap}", s.num_ues)
            } else {
                format!("insufficient_capacity: {} avatars > capacity {cap}", s.num_ues)
            },
        );
        let rate = self.rate_bits_per_s();
        let dirty = self.max_dirty_bits_per_s();
        check(
            "divergence",
            rate > dirty,
            if rate > dirty {
                format!("R = {rate} bit/s > max dirty rate {dirty} bit/s")
            } else {
                format!("divergent_migration risk: R = {rate} bit/s <= max dirty rate {dirty} bit/s")
            },
        );
        check(
            "slots",
            s.num_slots >= 1 && s.slot_seconds > 0.0,
            format!("{} slots of {} s", s.num_slots, s.slot_seconds),
        );
        check("ues", s.num_ues >= 1, format!("{} UEs", s.num_ues));
        check(
            "speed",
            positive(self.mobility.v_max_mps),
            format!("v_max = {} m/s", self.mobility.v_max_mps),
        );
        check("rtt_factor", positive(s.rtt_factor), format!("{}", s.rtt_factor));
        check("rate", positive(m.r_mbps), format!("R = {} Mbps", m.r_mbps));
        check(
            "threshold",
            positive(m.m_th_bits),
            format!("M_th = {} bits", m.m_th_bits),
        );
        let weights = [m.w_net, m.w_mem, m.w_disk, m.w_cpu, m.alpha];
        check(
            "weights",
            weights.iter().all(|v| *v >= 0.0 && v.is_finite()),
            format!(
                "w = ({}, {}, {}, {}), alpha = {}",
                m.w_net, m.w_mem, m.w_disk, m.w_cpu, m.alpha
            ),
        );
        check("memory", positive(a.mem_gb), format!("{} GB", a.mem_gb));
        check(
            "bandwidth",
            positive(a.bw_capacity_mbps),
            format!("{} Mbps", a.bw_capacity_mbps),
        );
        check(
            "page_size",
            positive(w.page_size_bits),
            format!("{} bits", w.page_size_bits),
        );
        check(
            "bw_mu_range",
            0.0 <= w.bw_mu_min_mbps && w.bw_mu_min_mbps <= w.bw_mu_max_mbps && w.bw_mu_max_mbps.is_finite(),
            format!("[{}, {}] Mbps", w.bw_mu_min_mbps, w.bw_mu_max_mbps),
        );
        check(
            "bw_var_range",
            0.0 <= w.bw_var_min && w.bw_var_min <= w.bw_var_max && w.bw_var_max.is_finite(),
            format!("[{}, {}]", w.bw_var_min, w.bw_var_max),
        );
        check(
            "dirty_max_pages",
            w.dirty_max_pages >= 0.0 && w.dirty_max_pages.is_finite(),
            format!("{}", w.dirty_max_pages),
        );
        check(
            "util_base",
            0.0 <= w.util_base_min
                && w.util_base_min <= w.util_base_max
                && w.util_base_max <= 1.0
                && w.util_jitter >= 0.0,
            format!("[{}, {}] jitter {}", w.util_base_min, w.util_base_max, w.util_jitter),
        );
        if !w.trace_path.is_empty() {
            let exists = Path::new(&w.trace_path).is_file();
            check("trace", exists, w.trace_path.clone());
        }
        out
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let failures: Vec<String> = self
            .checks()
            .into_iter()
            .filter(|c| !c.passed)
            .map(|c| format!("{}: {}", c.name, c.detail))
            .collect();
        if failures.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(failures))
        }
    }
}

fn positive(v: f64) -> bool {
    v > 0.0 && v.is_finite()
}

fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_mirror_the_reference_setup() {
        let c = SimConfig::default();
        assert_eq!((c.topology.rows, c.topology.cols, c.topology.capacity), (5, 5, 50));
        assert_eq!(c.topology.cell_size_m, 2000.0);
        assert_eq!(c.simulation.num_ues, 1000);
        assert_eq!(c.simulation.slot_seconds, 300.0);
        assert_eq!(c.migration.r_mbps, 200.0);
        assert_eq!(c.migration.alpha, 5.0);
        assert_eq!(
            (
                c.migration.w_net,
                c.migration.w_mem,
                c.migration.w_disk,
                c.migration.w_cpu
            ),
            (0.8, 0.6, 0.4, 0.1)
        );
        assert_eq!(c.workload.page_size_bits, 32_768.0);
        assert_eq!(c.workload.dirty_max_pages, 10_000.0);
        assert_eq!(c.avatar.mem_capacity_bits(), 4.0 * 8.0 * (1u64 << 30) as f64);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn empty_file_gives_defaults_and_round_trips() {
        let c = SimConfig::from_toml("").unwrap();
        assert_eq!(c, SimConfig::default());
        let tweaked = c
            .with_overrides(&["alpha=0.5", "strategy=far", "trace_path=foo.csv"])
            .unwrap();
        assert_eq!(SimConfig::from_toml(&tweaked.to_toml()).unwrap(), tweaked);
    }

    #[test]
    fn overrides_find_their_section() {
        let c = SimConfig::default()
            .with_overrides(&[
                "num_ues=10",
                "num_slots=1",
                "strategy=static",
                "epsilon_ms_per_m=0.002",
                "dirty_rate_mode=fixed",
            ])
            .unwrap();
        assert_eq!(c.simulation.num_ues, 10);
        assert_eq!(c.simulation.num_slots, 1);
        assert_eq!(c.simulation.strategy, Strategy::Static);
        assert_eq!(c.topology.epsilon_ms_per_m, 0.002);
        assert_eq!(c.workload.dirty_rate_mode, DirtyRateMode::Fixed);
    }

    #[test]
    fn override_errors() {
        let c = SimConfig::default();
        assert!(matches!(
            c.with_overrides(&["bogus=1"]),
            Err(ConfigError::UnknownKey(_))
        ));
        assert!(matches!(
            c.with_overrides(&["num_ues"]),
            Err(ConfigError::MalformedOverride(_))
        ));
        assert!(matches!(
            c.with_overrides(&["num_ues=many"]),
            Err(ConfigError::Parse(_))
        ));
        assert!(matches!(
            c.with_overrides(&["strategy=best"]),
            Err(ConfigError::Parse(_))
        ));
    }

    #[test]
    fn rejects_unknown_keys_in_files() {
        assert!(matches!(
            SimConfig::from_toml("[simulation]\nnum_uez = 3\n"),
            Err(ConfigError::Parse(_))
        ));
    }

    #[test]
    fn flags_insufficient_capacity() {
        let c = SimConfig::default().with_overrides(&["num_ues=2000"]).unwrap();
        let failed: Vec<_> = c.checks().into_iter().filter(|c| !c.passed).collect();
        assert_eq!(failed.len(), 1);
        assert_eq!(failed[0].name, "capacity");
        assert!(failed[0].detail.contains("insufficient_capacity"));
        assert!(c.validate().is_err());
    }

    #[test]
    fn flags_divergence_risk() {
        // 10⁴ pages × 32768 bits / 300 s ≈ 1.09 Mbit/s.
        let ok = SimConfig::default().with_overrides(&["r_mbps=1.1"]).unwrap();
        assert!(ok.validate().is_ok());
        let bad = SimConfig::default().with_overrides(&["r_mbps=1.0"]).unwrap();
        let failed: Vec<_> = bad.checks().into_iter().filter(|c| !c.passed).collect();
        assert_eq!(failed.len(), 1);
        assert_eq!(failed[0].name, "divergence");
        assert!(failed[0].detail.contains("divergent_migration"));
    }

    #[test]
    fn memory_unit_interpretations() {
        let mut a = AvatarSection::default();
        assert_eq!(a.mem_capacity_bits(), 34_359_738_368.0);
        a.memory_units = MemoryUnits::Decimal;
        assert_eq!(a.mem_capacity_bits(), 3.2e10);
    }

    #[test]
    fn explicit_sites_parse() {
        let c = SimConfig::from_toml(
            "[topology]\nwidth_m = 100.0\nheight_m = 100.0\nsites = [{ x = 10.0, y = 10.0, capacity = 3 }, { x = 90.0, y = 50.0, capacity = 2 }]\n[simulation]\nnum_ues = 5\n",
        )
        .unwrap();
        assert_eq!(c.total_capacity(), 5);
        assert!(c.validate().is_ok());
    }
}
