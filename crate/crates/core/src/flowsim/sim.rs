use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::flows::{build_step_flows, route_and_load, step_count, Algorithm, FlowSet};
use super::topology::Topology;
use crate::error::{Error, Result};
use crate::params::{CostParams, Phase};
use crate::planner::{PhaseChoice, Plan};

/// Timing of one barrier-delimited step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub phase: Phase,
    /// Step index within its phase.
    pub step_index: usize,
    pub switched: bool,
    pub reconfig_ns: f64,
    pub propagation_ns: f64,
    pub startup_ns: f64,
    pub transmission_ns: f64,
    pub max_link_load: u32,
}

impl StepRecord {
    pub fn duration_ns(&self) -> f64 {
        self.reconfig_ns + self.propagation_ns + self.startup_ns + self.transmission_ns
    }

    /// `step=<k> mode=<static|switched> reconfig_ns=<x> prop_ns=<x> tx_ns=<x> maxload=<k>`
    pub fn timeline_line(&self, k: usize) -> String {
        format!(
            "step={k} mode={} reconfig_ns={} prop_ns={} tx_ns={} maxload={}",
            if self.switched { "switched" } else { "static" },
            self.reconfig_ns,
            self.propagation_ns,
            self.transmission_ns,
            self.max_link_load
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub steps: Vec<StepRecord>,
    pub total_ns: f64,
}

impl SimResult {
    fn from_steps(steps: Vec<StepRecord>) -> Self {
        let total_ns = steps.iter().map(StepRecord::duration_ns).sum();
        SimResult { steps, total_ns }
    }

    /// Completion time of the steps belonging to `phase`.
    pub fn phase_total_ns(&self, phase: Phase) -> f64 {
        self.steps
            .iter()
            .filter(|s| s.phase == phase)
            .map(StepRecord::duration_ns)
            .sum()
    }

    /// One timeline line per step, numbered consecutively across phases.
    pub fn timeline(&self) -> String {
        let mut out = String::new();
        for (k, s) in self.steps.iter().enumerate() {
            let _ = writeln!(out, "{}", s.timeline_line(k));
        }
        out
    }
}

/// Times one step on `topo`.
///
/// Flows start together after the optional reconfiguration and the startup
/// latency. A flow's rate is the link bandwidth divided by the occupancy of
/// the busiest link on its path, and the step ends when its slowest flow and
/// its longest path are done.
pub fn simulate_step(
    fs: &FlowSet,
    topo: &Topology,
    p: &CostParams,
    charge_reconfig: bool,
) -> Result<StepRecord> {
    let routing = route_and_load(fs, topo)?;
    let max_hops = routing.paths.iter().map(Vec::len).max().unwrap_or(0);
    let transmission_ns = fs
        .flows
        .iter()
        .enumerate()
        .map(|(idx, f)| p.tx_ns(f.chunk_bytes) * f64::from(routing.path_load(idx)))
        .fold(0.0, f64::max);
    Ok(StepRecord {
        phase: fs.phase,
        step_index: fs.step_index,
        switched: topo.is_switched(),
        reconfig_ns: if charge_reconfig { p.delta_ns } else { 0.0 },
        propagation_ns: p.alpha_ns * max_hops as f64,
        startup_ns: p.alpha_s_ns,
        transmission_ns,
        max_link_load: routing.max_load(),
    })
}

/// Steps of one phase for the given algorithm choice.
pub fn simulate_phase(
    phase: Phase,
    choice: PhaseChoice,
    p: &CostParams,
) -> Result<Vec<StepRecord>> {
    let ring = Topology::StaticRing { n: p.n };
    match choice {
        PhaseChoice::Ring => (0..step_count(Algorithm::Ring, p.n))
            .map(|i| {
                let fs = build_step_flows(Algorithm::Ring, phase, i, p.n, p.m_bytes)?;
                simulate_step(&fs, &ring, p, false)
            })
            .collect(),
        PhaseChoice::Switched { threshold } => {
            p.validate_rd()?;
            let steps = p.rd_steps();
            if threshold > steps {
                return Err(Error::ThresholdOutOfRange {
                    threshold,
                    max: steps,
                });
            }
            (0..steps)
                .map(|i| {
                    let fs =
                        build_step_flows(Algorithm::RecursiveDoubling, phase, i, p.n, p.m_bytes)?;
                    let switched = match phase {
                        Phase::ReduceScatter => i >= threshold,
                        Phase::AllGather => i < threshold,
                    };
                    if switched {
                        simulate_step(&fs, &fs.required_topology, p, true)
                    } else {
                        simulate_step(&fs, &ring, p, false)
                    }
                })
                .collect()
        }
    }
}

/// Runs every phase of `plan` back to back with a barrier after each step.
pub fn simulate_collective(plan: &Plan, p: &CostParams) -> Result<SimResult> {
    p.validate()?;
    let expected = plan.collective.phases();
    if plan.phases.len() != expected.len()
        || plan
            .phases
            .iter()
            .zip(expected)
            .any(|(ph, e)| ph.phase != *e)
    {
        return Err(Error::PlanMismatch(format!(
            "{} needs phases {:?}",
            plan.collective, expected
        )));
    }
    let mut steps = Vec::new();
    for ph in &plan.phases {
        steps.extend(simulate_phase(ph.phase, ph.choice, p)?);
    }
    Ok(SimResult::from_steps(steps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{AgModel, Collective};

    fn p1(delta: f64) -> CostParams {
        CostParams::new(4, 4, 1.0, 0.0, 8.0, delta).unwrap()
    }

    #[test]
    fn step_examples() {
        let p = p1(10.0);
        let ring_fs = build_step_flows(Algorithm::Ring, Phase::ReduceScatter, 0, 4, 4).unwrap();
        let rec = simulate_step(&ring_fs, &Topology::StaticRing { n: 4 }, &p, false).unwrap();
        assert_eq!(rec.duration_ns(), 2.0);
        assert_eq!(rec.max_link_load, 1);

        let rd1 =
            build_step_flows(Algorithm::RecursiveDoubling, Phase::ReduceScatter, 1, 4, 4).unwrap();
        let rec = simulate_step(&rd1, &Topology::StaticRing { n: 4 }, &p, false).unwrap();
        assert_eq!(rec.duration_ns(), 4.0);
        assert_eq!(
            (rec.propagation_ns, rec.transmission_ns, rec.max_link_load),
            (2.0, 2.0, 2)
        );

        let rec = simulate_step(&rd1, &rd1.required_topology, &p, true).unwrap();
        assert_eq!(rec.duration_ns(), 12.0);
        assert!(rec.switched);
    }

    #[test]
    fn collective_examples() {
        let ring = Plan::ring(Collective::ReduceScatter, &p1(0.0)).unwrap();
        let res = simulate_collective(&ring, &p1(0.0)).unwrap();
        assert_eq!(res.total_ns, 6.0);
        assert_eq!(res.steps.len(), 3);

        let rd = Plan::fixed(Collective::ReduceScatter, 2, 0, &p1(10.0), AgModel::Paper).unwrap();
        assert_eq!(simulate_collective(&rd, &p1(10.0)).unwrap().total_ns, 7.0);

        let t1 = Plan::fixed(Collective::ReduceScatter, 1, 0, &p1(10.0), AgModel::Paper).unwrap();
        let res = simulate_collective(&t1, &p1(10.0)).unwrap();
        assert_eq!(res.total_ns, 15.0);
        assert_eq!(
            res.timeline(),
            "step=0 mode=static reconfig_ns=0 prop_ns=1 tx_ns=2 maxload=1\n\
             step=1 mode=switched reconfig_ns=10 prop_ns=1 tx_ns=1 maxload=1\n"
        );
    }

    #[test]
    fn allreduce_concatenates_phases() {
        let p = p1(10.0);
        let plan = Plan::fixed(Collective::AllReduce, 1, 1, &p, AgModel::Reverse).unwrap();
        let res = simulate_collective(&plan, &p).unwrap();
        assert_eq!(res.steps.len(), 4);
        assert_eq!(res.phase_total_ns(Phase::ReduceScatter), 15.0);
        // AllGather T'=1: switched step 0 (11 + 1), static step 1 = RS step 0 (3)
        assert_eq!(res.phase_total_ns(Phase::AllGather), 15.0);
        assert_eq!(res.total_ns, 30.0);
    }

    #[test]
    fn plan_mismatch_is_rejected() {
        let p = p1(0.0);
        let mut plan = Plan::ring(Collective::AllReduce, &p).unwrap();
        plan.phases.pop();
        assert!(matches!(
            simulate_collective(&plan, &p),
            Err(Error::PlanMismatch(_))
        ));

        let plan = Plan::fixed(Collective::ReduceScatter, 2, 0, &p, AgModel::Paper).unwrap();
        let q = CostParams { n: 6, ..p };
        assert_eq!(simulate_collective(&plan, &q), Err(Error::NotPowerOfTwo(6)));
    }

    #[test]
    fn ring_runs_on_any_node_count() {
        let p = CostParams::new(7, 700, 3.0, 1.0, 8.0, 0.0).unwrap();
        let res = simulate_collective(&Plan::ring(Collective::AllReduce, &p).unwrap(), &p).unwrap();
        // 2 phases x 6 steps x (3 + 1 + 100*8/8)
        assert_eq!(res.steps.len(), 12);
        assert!((res.total_ns - 12.0 * 104.0).abs() < 1e-9);
    }

    #[test]
    fn flow_order_does_not_matter() {
        let p = CostParams::new(16, 1 << 20, 10.0, 5.0, 800.0, 50.0).unwrap();
        let ring = Topology::StaticRing { n: 16 };
        for i in 0..4 {
            let fs = build_step_flows(
                Algorithm::RecursiveDoubling,
                Phase::ReduceScatter,
                i,
                16,
                p.m_bytes,
            )
            .unwrap();
            let mut rev = fs.clone();
            rev.flows.reverse();
            rev.flows.rotate_left(5);
            assert_eq!(
                simulate_step(&fs, &ring, &p, false).unwrap(),
                simulate_step(&rev, &ring, &p, false).unwrap()
            );
        }
    }
}
