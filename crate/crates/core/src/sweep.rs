//! Parameter sweeps over reconfiguration delay, propagation delay and
//! message size.
//!
//! Every cell simulates Recursive Doubling at each threshold plus the Ring
//! baseline, keeps the fastest threshold, and reports the speedup over Ring
//! as `(t_ring - t_ours) / t_ours * 100`. When no threshold beats Ring the
//! cell falls back to Ring and reports 0%.
//!
//! Cells share no state. With the `parallel` feature they are evaluated on
//! the rayon pool; results always come back in canonical `(m, delta, alpha)`
//! order so output is identical either way.

use std::io;

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost_model::switched_ag_cost;
use crate::error::{Error, Result};
use crate::flowsim::simulate_phase;
use crate::params::{AgModel, Collective, CostParams, Phase};
use crate::planner::{argmin_prefer_last, PhaseChoice};

pub const KIB: u64 = 1 << 10;
pub const MIB: u64 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub n: usize,
    pub bandwidth_gbps: f64,
    pub alpha_s_ns: f64,
    pub delta_ns: Vec<f64>,
    pub alpha_ns: Vec<f64>,
    pub m_bytes: Vec<u64>,
    pub collective: Collective,
    pub ag_model: AgModel,
}

impl Default for SweepGrid {
    /// 32 nodes at 800 Gbps, reduce-scatter, 3 sizes x 5 delta x 4 alpha.
    fn default() -> Self {
        SweepGrid {
            n: 32,
            bandwidth_gbps: 800.0,
            alpha_s_ns: 0.0,
            delta_ns: vec![4.0, 10.0, 100.0, 1000.0, 10000.0],
            alpha_ns: vec![4.0, 10.0, 100.0, 1000.0],
            m_bytes: vec![32, 4 * MIB, 32 * MIB],
            collective: Collective::ReduceScatter,
            ag_model: AgModel::Paper,
        }
    }
}

impl SweepGrid {
    /// Cell parameters in canonical order: by size, then delta, then alpha,
    /// each ascending with duplicates removed.
    pub fn cells(&self) -> Result<Vec<CostParams>> {
        if self.delta_ns.is_empty() || self.alpha_ns.is_empty() || self.m_bytes.is_empty() {
            return Err(Error::EmptyGrid);
        }
        let sorted = |v: &[f64]| {
            let mut v = v.to_vec();
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        };
        let deltas = sorted(&self.delta_ns);
        let alphas = sorted(&self.alpha_ns);
        let mut sizes = self.m_bytes.clone();
        sizes.sort_unstable();
        sizes.dedup();

        let mut cells = Vec::with_capacity(sizes.len() * deltas.len() * alphas.len());
        for &m in &sizes {
            for &d in &deltas {
                for &a in &alphas {
                    let p = CostParams {
                        n: self.n,
                        m_bytes: m,
                        alpha_ns: a,
                        alpha_s_ns: self.alpha_s_ns,
                        bandwidth_gbps: self.bandwidth_gbps,
                        delta_ns: d,
                    };
                    p.validate_rd().map_err(|e| cell_error(&p, e))?;
                    cells.push(p);
                }
            }
        }
        Ok(cells)
    }
}

fn cell_error(p: &CostParams, e: Error) -> Error {
    Error::Cell {
        m_bytes: p.m_bytes,
        alpha_ns: p.alpha_ns,
        delta_ns: p.delta_ns,
        source: Box::new(e),
    }
}

/// Outcome of one grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub params: CostParams,
    pub collective: Collective,
    /// Completion time at each threshold `0..=log2 n`.
    pub per_t_ns: Vec<f64>,
    /// Fastest threshold, ties toward the larger value. Reported even when
    /// the cell falls back to Ring.
    pub best_t: usize,
    /// `min(per_t_ns[best_t], t_ring_ns)`.
    pub t_best_ns: f64,
    pub t_ring_ns: f64,
    pub speedup_pct: f64,
    pub ring_fallback: bool,
}

fn sim_phase_total(phase: Phase, choice: PhaseChoice, p: &CostParams) -> Result<f64> {
    Ok(simulate_phase(phase, choice, p)?
        .iter()
        .map(|s| s.duration_ns())
        .sum())
}

/// AllGather at threshold `t`. The simulator's AllGather traffic is the
/// reverse of reduce-scatter, so `Reverse` is simulated while `Paper` pricing
/// has no traffic pattern behind it and is evaluated analytically.
fn allgather_total(t: usize, p: &CostParams, model: AgModel) -> Result<f64> {
    match model {
        AgModel::Reverse => {
            sim_phase_total(Phase::AllGather, PhaseChoice::Switched { threshold: t }, p)
        }
        AgModel::Paper => Ok(switched_ag_cost(t, p, AgModel::Paper)?.total_ns),
    }
}

/// Time at threshold `t`. For AllReduce the AllGather phase uses the
/// mirrored threshold `log2 n - t`, so both phases switch the same steps
/// of the shared halving/doubling schedule.
fn threshold_total(
    t: usize,
    p: &CostParams,
    collective: Collective,
    model: AgModel,
) -> Result<f64> {
    let rs = || {
        sim_phase_total(
            Phase::ReduceScatter,
            PhaseChoice::Switched { threshold: t },
            p,
        )
    };
    match collective {
        Collective::ReduceScatter => rs(),
        Collective::AllGather => allgather_total(t, p, model),
        Collective::AllReduce => Ok(rs()? + allgather_total(p.rd_steps() - t, p, model)?),
    }
}

/// Percentage by which `ours` beats `ring`; 0 when both are zero.
pub fn speedup_pct(t_ring_ns: f64, t_ours_ns: f64) -> f64 {
    if t_ours_ns > 0.0 {
        (t_ring_ns - t_ours_ns) / t_ours_ns * 100.0
    } else {
        0.0
    }
}

/// Simulates every threshold and the Ring baseline for one parameter set.
pub fn run_cell(p: &CostParams, collective: Collective, ag_model: AgModel) -> Result<SweepRecord> {
    p.validate_rd()?;
    let per_t_ns = (0..=p.rd_steps())
        .map(|t| threshold_total(t, p, collective, ag_model))
        .collect::<Result<Vec<_>>>()?;
    let (best_t, best_ns) = argmin_prefer_last(&per_t_ns).expect("at least one threshold");
    let t_ring_ns = collective
        .phases()
        .iter()
        .map(|&ph| sim_phase_total(ph, PhaseChoice::Ring, p))
        .sum::<Result<f64>>()?;
    let ring_fallback = best_ns > t_ring_ns;
    let t_best_ns = if ring_fallback { t_ring_ns } else { best_ns };
    Ok(SweepRecord {
        params: *p,
        collective,
        per_t_ns,
        best_t,
        t_best_ns,
        t_ring_ns,
        speedup_pct: speedup_pct(t_ring_ns, t_best_ns),
        ring_fallback,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Rayon pool when the `parallel` feature is on, sequential otherwise.
    #[default]
    Parallel,
}

pub fn run_grid(g: &SweepGrid) -> Result<Vec<SweepRecord>> {
    run_grid_with(g, Execution::default())
}

pub fn run_grid_with(g: &SweepGrid, exec: Execution) -> Result<Vec<SweepRecord>> {
    let cells = g.cells()?;
    let eval = |p: &CostParams| run_cell(p, g.collective, g.ag_model).map_err(|e| cell_error(p, e));
    match exec {
        Execution::Sequential => cells.iter().map(eval).collect(),
        #[cfg(feature = "parallel")]
        Execution::Parallel => cells.par_iter().map(eval).collect(),
        #[cfg(not(feature = "parallel"))]
        Execution::Parallel => cells.iter().map(eval).collect(),
    }
}

/// Static Recursive Doubling against Ring at one `(m, alpha)` point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRecord {
    pub n: usize,
    pub collective: Collective,
    pub m_bytes: u64,
    pub alpha_ns: f64,
    pub t_rd_ns: f64,
    pub t_ring_ns: f64,
    pub ratio: f64,
}

/// RD-on-static-ring / Ring completion-time ratio for reduce-scatter and
/// AllReduce at every `(m, alpha)` pair, with no startup latency and no
/// switching. A 0/0 ratio (nothing to send, no latency) is reported as 1.
pub fn ratio_experiment(
    n: usize,
    m_bytes: &[u64],
    alpha_ns: &[f64],
    bandwidth_gbps: f64,
) -> Result<Vec<RatioRecord>> {
    if m_bytes.is_empty() || alpha_ns.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mut sizes = m_bytes.to_vec();
    sizes.sort_unstable();
    sizes.dedup();
    let mut alphas = alpha_ns.to_vec();
    alphas.sort_by(f64::total_cmp);
    alphas.dedup();

    let mut out = Vec::new();
    for collective in [Collective::ReduceScatter, Collective::AllReduce] {
        for &m in &sizes {
            for &a in &alphas {
                let p = CostParams::new(n, m, a, 0.0, bandwidth_gbps, 0.0)?;
                p.validate_rd()?;
                let steps = p.rd_steps();
                let mut t_rd_ns = 0.0;
                let mut t_ring_ns = 0.0;
                for &phase in collective.phases() {
                    // all-static: RS never switches at T = L, AG at T' = 0
                    let threshold = match phase {
                        Phase::ReduceScatter => steps,
                        Phase::AllGather => 0,
                    };
                    t_rd_ns += sim_phase_total(phase, PhaseChoice::Switched { threshold }, &p)?;
                    t_ring_ns += sim_phase_total(phase, PhaseChoice::Ring, &p)?;
                }
                let ratio = if t_ring_ns == 0.0 && t_rd_ns == 0.0 {
                    1.0
                } else {
                    t_rd_ns / t_ring_ns
                };
                out.push(RatioRecord {
                    n,
                    collective,
                    m_bytes: m,
                    alpha_ns: a,
                    t_rd_ns,
                    t_ring_ns,
                    ratio,
                });
            }
        }
    }
    Ok(out)
}

fn fmt_f(v: f64) -> String {
    format!("{v}")
}

fn cell_columns(r: &SweepRecord) -> [String; 7] {
    let p = &r.params;
    [
        p.n.to_string(),
        r.collective.to_string(),
        p.m_bytes.to_string(),
        fmt_f(p.alpha_ns),
        fmt_f(p.alpha_s_ns),
        fmt_f(p.delta_ns),
        fmt_f(p.bandwidth_gbps),
    ]
}

const CELL_HEADER: [&str; 7] = [
    "n",
    "collective",
    "m_bytes",
    "alpha_ns",
    "alpha_s_ns",
    "delta_ns",
    "bandwidth_gbps",
];

/// One row per `(cell, T)`.
pub fn write_detail_csv<W: io::Write>(records: &[SweepRecord], w: W) -> io::Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(CELL_HEADER.iter().chain(&["T", "total_ns"]))?;
    for r in records {
        let cols = cell_columns(r);
        for (t, total) in r.per_t_ns.iter().enumerate() {
            wtr.write_record(cols.iter().cloned().chain([t.to_string(), fmt_f(*total)]))?;
        }
    }
    wtr.flush()
}

/// One row per cell.
pub fn write_summary_csv<W: io::Write>(records: &[SweepRecord], w: W) -> io::Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(CELL_HEADER.iter().chain(&[
        "best_T",
        "t_best_ns",
        "t_ring_ns",
        "speedup_pct",
    ]))?;
    for r in records {
        wtr.write_record(cell_columns(r).into_iter().chain([
            r.best_t.to_string(),
            fmt_f(r.t_best_ns),
            fmt_f(r.t_ring_ns),
            fmt_f(r.speedup_pct),
        ]))?;
    }
    wtr.flush()
}

pub fn write_ratio_csv<W: io::Write>(records: &[RatioRecord], w: W) -> io::Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record([
        "n",
        "collective",
        "m_bytes",
        "alpha_ns",
        "t_rd_ns",
        "t_ring_ns",
        "ratio",
    ])?;
    for r in records {
        wtr.write_record([
            r.n.to_string(),
            r.collective.to_string(),
            r.m_bytes.to_string(),
            fmt_f(r.alpha_ns),
            fmt_f(r.t_rd_ns),
            fmt_f(r.t_ring_ns),
            fmt_f(r.ratio),
        ])?;
    }
    wtr.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(m: u64, alpha: f64, delta: f64) -> CostParams {
        CostParams::new(32, m, alpha, 0.0, 800.0, delta).unwrap()
    }

    #[test]
    fn latency_cell() {
        let r = run_cell(
            &cell(32, 1000.0, 100.0),
            Collective::ReduceScatter,
            AgModel::Paper,
        )
        .unwrap();
        assert_eq!(r.best_t, 1);
        assert_eq!(r.per_t_ns.len(), 6);
        assert!((r.t_best_ns - 5400.31).abs() < 1e-6);
        assert!((r.t_ring_ns - 31000.31).abs() < 1e-6);
        assert!((r.speedup_pct - 25600.0 / 5400.31 * 100.0).abs() < 1e-6);
        assert!(!r.ring_fallback);
    }

    #[test]
    fn large_message_cell() {
        // Ring 356058.56 ns, T=1 330074.56 ns
        let r = run_cell(
            &cell(32 * MIB, 1000.0, 4.0),
            Collective::ReduceScatter,
            AgModel::Paper,
        )
        .unwrap();
        assert_eq!(r.best_t, 1);
        assert!((r.t_ring_ns - 356058.56).abs() < 1e-6);
        assert!((r.t_best_ns - 330074.56).abs() < 1e-6);
        assert!((r.speedup_pct - 7.872).abs() < 1e-3);
    }

    #[test]
    fn huge_delta_falls_back() {
        let r = run_cell(
            &cell(4 * MIB, 4.0, 1e7),
            Collective::ReduceScatter,
            AgModel::Paper,
        )
        .unwrap();
        assert!(r.ring_fallback);
        assert_eq!(r.speedup_pct, 0.0);
        assert_eq!(r.t_best_ns, r.t_ring_ns);
    }

    #[test]
    fn zero_cell_reports_zero_speedup() {
        let p = CostParams::new(8, 0, 0.0, 0.0, 800.0, 0.0).unwrap();
        let r = run_cell(&p, Collective::AllReduce, AgModel::Reverse).unwrap();
        assert_eq!(r.speedup_pct, 0.0);
        assert_eq!(r.t_best_ns, 0.0);
    }

    #[test]
    fn allreduce_cell_is_twice_reduce_scatter_with_reverse_allgather() {
        let p = cell(4 * MIB, 100.0, 100.0);
        let rs = run_cell(&p, Collective::ReduceScatter, AgModel::Reverse).unwrap();
        let ar = run_cell(&p, Collective::AllReduce, AgModel::Reverse).unwrap();
        for (a, b) in ar.per_t_ns.iter().zip(&rs.per_t_ns) {
            assert!((a - 2.0 * b).abs() <= 1e-9 * a);
        }
        assert_eq!(ar.best_t, rs.best_t);
        assert!((ar.speedup_pct - rs.speedup_pct).abs() < 1e-9);
    }

    #[test]
    fn grid_order_and_errors() {
        let g = SweepGrid {
            delta_ns: vec![100.0, 4.0],
            alpha_ns: vec![1000.0, 10.0, 10.0],
            m_bytes: vec![32],
            ..SweepGrid::default()
        };
        let recs = run_grid(&g).unwrap();
        let keys: Vec<_> = recs
            .iter()
            .map(|r| (r.params.delta_ns, r.params.alpha_ns))
            .collect();
        assert_eq!(
            keys,
            vec![(4.0, 10.0), (4.0, 1000.0), (100.0, 10.0), (100.0, 1000.0)]
        );

        let empty = SweepGrid {
            alpha_ns: vec![],
            ..SweepGrid::default()
        };
        assert_eq!(run_grid(&empty), Err(Error::EmptyGrid));

        let bad = SweepGrid {
            alpha_ns: vec![10.0, -1.0],
            ..SweepGrid::default()
        };
        match run_grid(&bad) {
            Err(Error::Cell { alpha_ns, .. }) => assert_eq!(alpha_ns, -1.0),
            other => panic!("expected a cell error, got {other:?}"),
        }
        let odd = SweepGrid {
            n: 24,
            ..SweepGrid::default()
        };
        assert!(matches!(run_grid(&odd), Err(Error::Cell { .. })));
    }

    #[test]
    fn single_cell_grid_matches_run_cell() {
        let g = SweepGrid {
            delta_ns: vec![100.0],
            alpha_ns: vec![1000.0],
            m_bytes: vec![32],
            ..SweepGrid::default()
        };
        let recs = run_grid(&g).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(
            recs[0],
            run_cell(
                &cell(32, 1000.0, 100.0),
                Collective::ReduceScatter,
                AgModel::Paper
            )
            .unwrap()
        );
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let g = SweepGrid::default();
        assert_eq!(
            run_grid_with(&g, Execution::Sequential).unwrap(),
            run_grid_with(&g, Execution::Parallel).unwrap()
        );
    }

    #[test]
    fn ratio_examples() {
        let recs = ratio_experiment(16, &[0, 4 * MIB], &[10.0, 100.0, 1000.0], 800.0).unwrap();
        assert_eq!(recs.len(), 12);
        for r in recs.iter().filter(|r| r.m_bytes == 0) {
            assert_eq!(r.ratio, 1.0);
        }
        let big = recs
            .iter()
            .find(|r| {
                r.m_bytes == 4 * MIB
                    && r.alpha_ns == 10.0
                    && r.collective == Collective::ReduceScatter
            })
            .unwrap();
        assert!((big.ratio - 2.0 / (15.0 / 16.0)).abs() < 0.05);
        assert_eq!(
            ratio_experiment(16, &[], &[1.0], 800.0),
            Err(Error::EmptyGrid)
        );
        assert_eq!(
            ratio_experiment(12, &[1], &[1.0], 800.0),
            Err(Error::NotPowerOfTwo(12))
        );
    }

    #[test]
    fn csv_headers_and_rows() {
        let g = SweepGrid {
            delta_ns: vec![100.0],
            alpha_ns: vec![1000.0],
            m_bytes: vec![32],
            ..SweepGrid::default()
        };
        let recs = run_grid(&g).unwrap();
        let mut buf = Vec::new();
        write_summary_csv(&recs, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "n,collective,m_bytes,alpha_ns,alpha_s_ns,delta_ns,bandwidth_gbps,best_T,t_best_ns,t_ring_ns,speedup_pct"
        );
        assert!(lines
            .next()
            .unwrap()
            .starts_with("32,reduce-scatter,32,1000,0,100,800,1,"));

        let mut buf = Vec::new();
        write_detail_csv(&recs, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 6);
        assert!(text.starts_with(
            "n,collective,m_bytes,alpha_ns,alpha_s_ns,delta_ns,bandwidth_gbps,T,total_ns\n"
        ));

        let mut buf = Vec::new();
        write_ratio_csv(
            &ratio_experiment(16, &[0], &[10.0], 800.0).unwrap(),
            &mut buf,
        )
        .unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "n,collective,m_bytes,alpha_ns,t_rd_ns,t_ring_ns,ratio\n\
             16,reduce-scatter,0,10,150,150,1\n\
             16,allreduce,0,10,300,300,1\n"
        );
    }
}
