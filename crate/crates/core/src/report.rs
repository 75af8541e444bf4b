//! CSV output for simulation reports.
//!
//! Rows are sorted by slot, then strategy (primal, far, static), then α, so
//! output order never depends on how runs were scheduled. Floats are
//! printed with six decimals.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::engine::MetricsReport;
use crate::placement::Strategy;

pub const PER_SLOT_HEADER: [&str; 9] = [
    "slot",
    "strategy",
    "alpha",
    "total_gain_ms",
    "total_cost",
    "total_profit",
    "num_migrations",
    "sum_migration_time_s",
    "mean_rtt_ms",
];

pub const SUMMARY_HEADER: [&str; 6] = [
    "strategy",
    "alpha",
    "avg_profit_per_slot",
    "avg_rtt_ms",
    "avg_migrations_per_slot",
    "avg_migration_time_s",
];

pub const PROFIT_DIFF_HEADER: [&str; 3] = ["alpha", "primal_minus_far", "primal_minus_static"];

fn f(v: f64) -> String {
    format!("{v:.6}")
}

fn strategy_rank(s: Strategy) -> usize {
    Strategy::ALL.iter().position(|&x| x == s).unwrap_or(usize::MAX)
}

fn sorted(reports: &[MetricsReport]) -> Vec<&MetricsReport> {
    let mut v: Vec<&MetricsReport> = reports.iter().collect();
    v.sort_by(|a, b| {
        strategy_rank(a.strategy)
            .cmp(&strategy_rank(b.strategy))
            .then(a.alpha.total_cmp(&b.alpha))
    });
    v
}

pub fn write_per_slot<W: Write>(out: W, reports: &[MetricsReport]) -> csv::Result<()> {
    let runs = sorted(reports);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PER_SLOT_HEADER)?;
    let slots = runs.iter().map(|r| r.slots.len()).max().unwrap_or(0);
    for t in 0..slots {
        for r in &runs {
            let Some(s) = r.slots.get(t) else { continue };
            w.write_record([
                s.slot.to_string(),
                r.strategy.to_string(),
                f(r.alpha),
                f(s.total_gain_ms),
                f(s.total_cost),
                f(s.total_profit),
                s.num_migrations.to_string(),
                f(s.sum_migration_time_s),
                f(s.mean_rtt_ms),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary<W: Write>(out: W, reports: &[MetricsReport]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for r in sorted(reports) {
        let s = &r.summary;
        w.write_record([
            r.strategy.to_string(),
            f(r.alpha),
            f(s.avg_profit_per_slot),
            f(s.avg_rtt_ms),
            f(s.avg_migrations_per_slot),
            f(s.avg_migration_time_s),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Mean per-slot profit of PRIMAL minus each baseline, one row per α that
/// has a PRIMAL run. A baseline missing at that α leaves its cell empty.
///
/// The FAR column pairs each PRIMAL slot with FAR's plan on that same
/// instance, so it is never negative. Static scores zero on any instance,
/// which makes the paired and unpaired readings coincide for it.
pub fn write_profit_diff<W: Write>(out: W, reports: &[MetricsReport]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PROFIT_DIFF_HEADER)?;
    let run = |s: Strategy, a: f64| {
        reports
            .iter()
            .find(|r| r.strategy == s && r.alpha.to_bits() == a.to_bits())
    };
    let find = |s: Strategy, a: f64| run(s, a).map(|r| r.summary.avg_profit_per_slot);
    let mut alphas: Vec<f64> = reports
        .iter()
        .filter(|r| r.strategy == Strategy::Primal)
        .map(|r| r.alpha)
        .collect();
    alphas.sort_by(f64::total_cmp);
    alphas.dedup_by(|a, b| a.to_bits() == b.to_bits());
    for a in alphas {
        let primal = run(Strategy::Primal, a).expect("alpha taken from a primal run");
        let p = primal.summary.avg_profit_per_slot;
        let diff = |s| find(s, a).map(|b| f(p - b)).unwrap_or_default();
        let far = match (find(Strategy::Far, a), primal.avg_margin_over_far()) {
            (Some(_), Some(margin)) => f(margin),
            _ => diff(Strategy::Far),
        };
        w.write_record([f(a), far, diff(Strategy::Static)])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `per_slot.csv` and `summary.csv` into `dir`, plus
/// `profit_diff.csv` when the reports include PRIMAL and a baseline.
pub fn write_all(dir: &Path, reports: &[MetricsReport]) -> csv::Result<()> {
    std::fs::create_dir_all(dir)?;
    write_per_slot(File::create(dir.join("per_slot.csv"))?, reports)?;
    write_summary(File::create(dir.join("summary.csv"))?, reports)?;
    let has = |s: Strategy| reports.iter().any(|r| r.strategy == s);
    if has(Strategy::Primal) && (has(Strategy::Far) || has(Strategy::Static)) {
        write_profit_diff(File::create(dir.join("profit_diff.csv"))?, reports)?;
    }
    Ok(())
}
