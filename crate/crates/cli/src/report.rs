//! Per-run summaries and barrier comparison reports.

use std::fmt::Write as _;

use ncbf_core::acc::{AccParams, Barrier, TrajectoryRecord};
use serde::Serialize;

/// Gap overshoot below `a₀` tolerated before a sample counts as unsafe.
pub const SAFETY_TOL: f64 = 1e-3;

/// Speed band around `v_f` used for the settle time.
pub const SETTLE_BAND: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub barrier: String,
    pub v0: f64,
    /// Gap `z` at the end of the horizon.
    pub steady_state_gap: f64,
    pub min_gap: f64,
    pub max_abs_u: f64,
    /// Earliest time after which `|v − v_f| ≤ 0.1` for the rest of the run.
    pub settle_time: Option<f64>,
    pub safety_violations: usize,
    pub solver_failures: usize,
}

impl RunSummary {
    pub fn from_records(barrier: Barrier, v0: f64, records: &[TrajectoryRecord], prm: &AccParams) -> Self {
        let last = records.last().expect("simulation yields at least one record");
        let settle_idx = records.iter().rposition(|r| (r.state.v - prm.v_f).abs() > SETTLE_BAND).map_or(0, |i| i + 1);
        RunSummary {
            barrier: barrier.as_str().to_string(),
            v0,
            steady_state_gap: last.state.z,
            min_gap: records.iter().map(|r| r.state.z).fold(f64::INFINITY, f64::min),
            max_abs_u: records.iter().map(|r| r.u.abs()).fold(0.0, f64::max),
            settle_time: records.get(settle_idx).map(|r| r.t),
            safety_violations: records.iter().filter(|r| r.theta < -SAFETY_TOL).count(),
            solver_failures: records.iter().filter(|r| r.flagged()).count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub v0: f64,
    pub primary: RunSummary,
    pub baseline: RunSummary,
    /// `primary − baseline` steady-state gap.
    pub gap_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub primary: String,
    pub baseline: String,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonReport {
    pub fn new(primary: Barrier, baseline: Barrier, pairs: Vec<(RunSummary, RunSummary)>) -> Self {
        let rows = pairs
            .into_iter()
            .map(|(p, b)| ComparisonRow {
                v0: p.v0,
                gap_delta: p.steady_state_gap - b.steady_state_gap,
                primary: p,
                baseline: b,
            })
            .collect();
        ComparisonReport { primary: primary.as_str().into(), baseline: baseline.as_str().into(), rows }
    }

    pub fn solver_failures(&self) -> usize {
        self.rows.iter().map(|r| r.primary.solver_failures + r.baseline.solver_failures).sum()
    }

    pub fn to_table(&self) -> String {
        let (p, b) = (&self.primary, &self.baseline);
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:>6} | {:>12} {:>12} {:>9} | {:>10} {:>10} | {:>9} {:>9} | {:>8} {:>8} | {:>5} {:>5}",
            "v0",
            format!("gap_{p}"),
            format!("gap_{b}"),
            "delta",
            format!("min_{p}"),
            format!("min_{b}"),
            format!("|u|_{p}"),
            format!("|u|_{b}"),
            format!("ts_{p}"),
            format!("ts_{b}"),
            "viol",
            "fail",
        );
        for r in &self.rows {
            let ts = |x: Option<f64>| x.map_or_else(|| "-".to_string(), |t| format!("{t:.1}"));
            let _ = writeln!(
                s,
                "{:>6.2} | {:>12.4} {:>12.4} {:>9.4} | {:>10.4} {:>10.4} | {:>9.1} {:>9.1} | {:>8} {:>8} | {:>5} {:>5}",
                r.v0,
                r.primary.steady_state_gap,
                r.baseline.steady_state_gap,
                r.gap_delta,
                r.primary.min_gap,
                r.baseline.min_gap,
                r.primary.max_abs_u,
                r.baseline.max_abs_u,
                ts(r.primary.settle_time),
                ts(r.baseline.settle_time),
                r.primary.safety_violations + r.baseline.safety_violations,
                r.primary.solver_failures + r.baseline.solver_failures,
            );
        }
        s
    }
}

/// gnuplot script drawing `z − a₀`, `v` and `u` against time for each CSV.
pub fn gnuplot_script(files: &[(String, String)]) -> String {
    let mut s = String::from(
        "set datafile separator ','\nset key autotitle columnhead\nset terminal pngcairo size 900,1200\n\
         set output 'trajectories.png'\nset multiplot layout 3,1\nset xlabel 't [s]'\n",
    );
    for (col, label) in [("theta", "z - a0 [m]"), ("v", "v [m/s]"), ("u", "u [N]")] {
        let _ = writeln!(s, "set ylabel '{label}'");
        let plots: Vec<String> = files
            .iter()
            .map(|(title, path)| format!("'{path}' using 't':'{col}' with lines title '{title}'"))
            .collect();
        let _ = writeln!(s, "plot {}", plots.join(", \\\n     "));
    }
    s.push_str("unset multiplot\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use ncbf_core::acc::{simulate, AccState};
    use ncbf_core::SolverConfig;

    #[test]
    fn summary_of_default_run() {
        let prm = AccParams::default();
        let recs = simulate(AccState::new(20.0, 100.0), &prm, Barrier::Ncbf, &SolverConfig::default());
        let s = RunSummary::from_records(Barrier::Ncbf, 20.0, &recs, &prm);
        assert_eq!(s.safety_violations, 0);
        assert_eq!(s.solver_failures, 0);
        assert!(s.min_gap <= s.steady_state_gap + 1e-12);
        assert!(s.max_abs_u <= prm.u_max() + 1e-9);
        let ts = s.settle_time.unwrap();
        assert!(recs.iter().filter(|r| r.t >= ts).all(|r| (r.state.v - prm.v_f).abs() <= SETTLE_BAND));
    }

    #[test]
    fn self_comparison_has_zero_deltas() {
        let prm = AccParams { horizon: 5.0, ..AccParams::default() };
        let recs = simulate(AccState::new(10.0, 100.0), &prm, Barrier::Ncbf, &SolverConfig::default());
        let s = RunSummary::from_records(Barrier::Ncbf, 10.0, &recs, &prm);
        let rep = ComparisonReport::new(Barrier::Ncbf, Barrier::Ncbf, vec![(s.clone(), s)]);
        assert_eq!(rep.rows[0].gap_delta, 0.0);
        assert!(rep.to_table().lines().count() == 2);
    }

    #[test]
    fn gnuplot_mentions_each_file() {
        let s = gnuplot_script(&[("ncbf 0".into(), "a.csv".into()), ("hocbf 0".into(), "b.csv".into())]);
        assert_eq!(s.matches("'a.csv'").count(), 3);
        assert_eq!(s.matches("'b.csv'").count(), 3);
    }
}
