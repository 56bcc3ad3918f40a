//! Closed-form completion-time model for Ring and Recursive Doubling
//! collectives on a ring, with and without per-step circuit switching.
//!
//! Every phase cost is returned as a [`PhaseCost`] so callers can see the
//! per-step breakdown. Totals are the sum of the per-step list; the
//! `*_closed_form` functions evaluate the summed expressions directly and
//! serve as a second route in tests.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{AgModel, CostParams, Phase};

/// Durations of each step of one phase, in execution order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseCost {
    pub per_step_ns: Vec<f64>,
    pub total_ns: f64,
}

impl PhaseCost {
    pub fn from_steps(per_step_ns: Vec<f64>) -> Self {
        let total_ns = per_step_ns.iter().sum();
        PhaseCost {
            per_step_ns,
            total_ns,
        }
    }

    pub fn steps(&self) -> usize {
        self.per_step_ns.len()
    }
}

fn pow2(i: usize) -> f64 {
    (1u64 << i) as f64
}

fn check_threshold(threshold: usize, p: &CostParams) -> Result<()> {
    let max = p.rd_steps();
    if threshold > max {
        return Err(Error::ThresholdOutOfRange { threshold, max });
    }
    Ok(())
}

/// Static-ring reduce-scatter step `i`: `2^i` hops, chunk `m / 2^(i+1)`
/// shared by `2^i` flows on the busiest link.
fn static_rs_step(i: usize, p: &CostParams) -> f64 {
    let chunk_tx = p.tx_ns(p.m_bytes as f64 / pow2(i + 1));
    p.alpha_ns * pow2(i) + p.alpha_s_ns + chunk_tx * pow2(i)
}

/// Switched reduce-scatter step `i`: one hop on a dedicated circuit.
fn switched_rs_step(i: usize, p: &CostParams) -> f64 {
    p.alpha_ns + p.alpha_s_ns + p.delta_ns + p.tx_ns(p.m_bytes as f64 / pow2(i + 1))
}

/// Chunk exchanged in AllGather step `i`: `m * 2^i / n`.
fn ag_chunk_bytes(i: usize, p: &CostParams) -> f64 {
    p.m_bytes as f64 * pow2(i) / p.n as f64
}

fn switched_ag_step(i: usize, p: &CostParams) -> f64 {
    p.alpha_ns + p.alpha_s_ns + p.delta_ns + p.tx_ns(ag_chunk_bytes(i, p))
}

fn static_ag_step(i: usize, p: &CostParams, model: AgModel) -> f64 {
    let steps = p.rd_steps();
    let chunk_tx = p.tx_ns(ag_chunk_bytes(i, p));
    match model {
        AgModel::Paper => p.alpha_ns * pow2(i) + p.alpha_s_ns + chunk_tx * pow2(steps - i),
        AgModel::Reverse => {
            let hops = pow2(steps - 1 - i);
            p.alpha_ns * hops + p.alpha_s_ns + chunk_tx * hops
        }
    }
}

/// Duration of static Recursive Doubling reduce-scatter step `i`:
/// `alpha * 2^i + alpha_s + beta * m / 2`.
pub fn rd_step_cost(i: usize, p: &CostParams) -> Result<f64> {
    p.validate_rd()?;
    let steps = p.rd_steps();
    if i >= steps {
        return Err(Error::StepOutOfRange { step: i, steps });
    }
    Ok(static_rs_step(i, p))
}

/// Static Recursive Doubling reduce-scatter on the ring (`log2 n` steps).
pub fn rd_total_cost(p: &CostParams) -> Result<PhaseCost> {
    p.validate_rd()?;
    Ok(PhaseCost::from_steps(
        (0..p.rd_steps()).map(|i| static_rs_step(i, p)).collect(),
    ))
}

/// Ring reduce-scatter (or AllGather) on the static ring, `n - 1` steps of
/// `alpha + alpha_s + beta * m / n`. Any `n >= 2`.
pub fn ring_total_cost(p: &CostParams) -> Result<PhaseCost> {
    p.validate()?;
    let step = p.alpha_ns + p.alpha_s_ns + p.tx_ns(p.m_bytes as f64 / p.n as f64);
    Ok(PhaseCost::from_steps(vec![step; p.n - 1]))
}

/// `alpha (n - 1) + alpha_s log2 n + beta m log2(n) / 2`
pub fn rd_total_closed_form(p: &CostParams) -> Result<f64> {
    p.validate_rd()?;
    let l = p.rd_steps() as f64;
    Ok(p.alpha_ns * (p.n - 1) as f64 + p.alpha_s_ns * l + p.tx_full_ns() * l / 2.0)
}

/// `(alpha + alpha_s)(n - 1) + beta m (n - 1) / n`
pub fn ring_total_closed_form(p: &CostParams) -> Result<f64> {
    p.validate()?;
    let n = p.n as f64;
    Ok((p.alpha_ns + p.alpha_s_ns) * (n - 1.0) + p.tx_full_ns() * (n - 1.0) / n)
}

/// Reduce-scatter that stays on the static ring for steps `i < threshold`
/// and reconfigures into the step's perfect matching for every `i >= threshold`.
///
/// `threshold = log2 n` never reconfigures and equals [`rd_total_cost`];
/// `threshold = 0` pays `delta` on every step, including step 0 whose
/// matching the ring already provides.
pub fn switched_rs_cost(threshold: usize, p: &CostParams) -> Result<PhaseCost> {
    p.validate_rd()?;
    check_threshold(threshold, p)?;
    Ok(PhaseCost::from_steps(
        (0..p.rd_steps())
            .map(|i| {
                if i < threshold {
                    static_rs_step(i, p)
                } else {
                    switched_rs_step(i, p)
                }
            })
            .collect(),
    ))
}

/// AllGather that reconfigures on every step `i < threshold` and runs the
/// remaining steps on the static ring, priced according to `model`.
pub fn switched_ag_cost(threshold: usize, p: &CostParams, model: AgModel) -> Result<PhaseCost> {
    p.validate_rd()?;
    check_threshold(threshold, p)?;
    Ok(PhaseCost::from_steps(
        (0..p.rd_steps())
            .map(|i| {
                if i < threshold {
                    switched_ag_step(i, p)
                } else {
                    static_ag_step(i, p, model)
                }
            })
            .collect(),
    ))
}

/// Threshold-parameterised cost of either phase.
pub fn switched_phase_cost(
    phase: Phase,
    threshold: usize,
    p: &CostParams,
    model: AgModel,
) -> Result<PhaseCost> {
    match phase {
        Phase::ReduceScatter => switched_rs_cost(threshold, p),
        Phase::AllGather => switched_ag_cost(threshold, p, model),
    }
}

/// Reduce-scatter with threshold `t` followed by AllGather with threshold
/// `t_prime`, using the default AllGather pricing.
pub fn allreduce_cost(t: usize, t_prime: usize, p: &CostParams) -> Result<f64> {
    allreduce_cost_with(t, t_prime, p, AgModel::default())
}

pub fn allreduce_cost_with(
    t: usize,
    t_prime: usize,
    p: &CostParams,
    model: AgModel,
) -> Result<f64> {
    Ok(switched_rs_cost(t, p)?.total_ns + switched_ag_cost(t_prime, p, model)?.total_ns)
}
