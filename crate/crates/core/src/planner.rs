//! Chooses between Ring on the static ring and Recursive Doubling with a
//! per-phase reconfiguration threshold.
//!
//! The search is exhaustive over the `log2 n + 1` thresholds of each phase.
//! A phase only switches when its predicted time is no worse than the Ring
//! phase it replaces, so a plan never predicts more than the Ring baseline.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cost_model::{ring_total_cost, switched_phase_cost};
use crate::error::{Error, Result};
use crate::params::{AgModel, Collective, CostParams, Phase};

/// How a threshold is picked from the candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SelectionRule {
    /// First threshold whose switched cost does not exceed Ring.
    SmallestSatisfying,
    /// Threshold with the lowest switched cost; ties go to the larger value.
    #[default]
    Argmin,
}

impl FromStr for SelectionRule {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "smallest" | "smallest-satisfying" => Ok(SelectionRule::SmallestSatisfying),
            "argmin" | "best" => Ok(SelectionRule::Argmin),
            other => Err(format!(
                "unknown rule '{other}' (expected smallest or argmin)"
            )),
        }
    }
}

impl fmt::Display for SelectionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SelectionRule::SmallestSatisfying => "smallest",
            SelectionRule::Argmin => "argmin",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    RingFallback,
    RdSwitched,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::RingFallback => "RingFallback",
            Mode::RdSwitched => "RDSwitched",
        })
    }
}

/// Algorithm used for a single phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhaseChoice {
    Ring,
    /// Recursive Doubling with the given threshold. For reduce-scatter the
    /// steps `i >= threshold` are switched, for AllGather the steps
    /// `i < threshold`.
    Switched {
        threshold: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePlan {
    pub phase: Phase,
    pub choice: PhaseChoice,
    pub predicted_ns: f64,
    pub ring_ns: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub collective: Collective,
    pub phases: Vec<PhasePlan>,
    pub predicted_total_ns: f64,
    pub ring_baseline_ns: f64,
    /// Set when Recursive Doubling was not considered at all.
    pub warning: Option<String>,
}

impl Plan {
    /// `RDSwitched` as soon as any phase runs Recursive Doubling.
    pub fn mode(&self) -> Mode {
        if self
            .phases
            .iter()
            .any(|ph| matches!(ph.choice, PhaseChoice::Switched { .. }))
        {
            Mode::RdSwitched
        } else {
            Mode::RingFallback
        }
    }

    fn threshold_of(&self, phase: Phase) -> Option<usize> {
        self.phases.iter().find_map(|ph| match ph.choice {
            PhaseChoice::Switched { threshold } if ph.phase == phase => Some(threshold),
            _ => None,
        })
    }

    /// Reduce-scatter threshold `T`, if that phase switches.
    pub fn threshold(&self) -> Option<usize> {
        self.threshold_of(Phase::ReduceScatter)
    }

    /// AllGather threshold `T'`, if that phase switches.
    pub fn threshold_prime(&self) -> Option<usize> {
        self.threshold_of(Phase::AllGather)
    }

    /// Ring on every phase. Valid for any `n >= 2`.
    pub fn ring(collective: Collective, p: &CostParams) -> Result<Plan> {
        let ring = ring_total_cost(p)?.total_ns;
        let phases = collective
            .phases()
            .iter()
            .map(|&phase| PhasePlan {
                phase,
                choice: PhaseChoice::Ring,
                predicted_ns: ring,
                ring_ns: ring,
            })
            .collect();
        Ok(Plan::assemble(collective, phases, None))
    }

    /// Recursive Doubling on every phase with fixed thresholds, regardless of
    /// whether that beats Ring. `t_prime` is only read for AllGather phases.
    pub fn fixed(
        collective: Collective,
        t: usize,
        t_prime: usize,
        p: &CostParams,
        model: AgModel,
    ) -> Result<Plan> {
        let ring = ring_total_cost(p)?.total_ns;
        let phases = collective
            .phases()
            .iter()
            .map(|&phase| {
                let threshold = match phase {
                    Phase::ReduceScatter => t,
                    Phase::AllGather => t_prime,
                };
                Ok(PhasePlan {
                    phase,
                    choice: PhaseChoice::Switched { threshold },
                    predicted_ns: switched_phase_cost(phase, threshold, p, model)?.total_ns,
                    ring_ns: ring,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Plan::assemble(collective, phases, None))
    }

    fn assemble(collective: Collective, phases: Vec<PhasePlan>, warning: Option<String>) -> Plan {
        Plan {
            collective,
            predicted_total_ns: phases.iter().map(|ph| ph.predicted_ns).sum(),
            ring_baseline_ns: phases.iter().map(|ph| ph.ring_ns).sum(),
            phases,
            warning,
        }
    }
}

impl fmt::Display for Plan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.mode())?;
        if let Some(t) = self.threshold() {
            write!(f, " T={t}")?;
        }
        if let Some(t) = self.threshold_prime() {
            write!(f, " T'={t}")?;
        }
        Ok(())
    }
}

fn candidate_costs(p: &CostParams, phase: Phase, model: AgModel) -> Result<Vec<f64>> {
    (0..=p.rd_steps())
        .map(|t| Ok(switched_phase_cost(phase, t, p, model)?.total_ns))
        .collect()
}

/// Smallest threshold whose switched phase cost is at most the Ring phase
/// cost, or `None` when every threshold loses to Ring.
pub fn find_threshold(p: &CostParams, phase: Phase, model: AgModel) -> Result<Option<usize>> {
    p.validate_rd()?;
    let ring = ring_total_cost(p)?.total_ns;
    Ok(candidate_costs(p, phase, model)?
        .into_iter()
        .position(|c| c <= ring))
}

/// Index of the minimum, preferring the later index on ties.
pub(crate) fn argmin_prefer_last(costs: &[f64]) -> Option<(usize, f64)> {
    costs
        .iter()
        .copied()
        .enumerate()
        .fold(None, |best, (t, c)| match best {
            Some((_, b)) if c > b => best,
            _ => Some((t, c)),
        })
}

/// Threshold minimising the switched phase cost, with its cost. Ties go to
/// the larger threshold since it reconfigures less often.
pub fn best_threshold(p: &CostParams, phase: Phase, model: AgModel) -> Result<(usize, f64)> {
    p.validate_rd()?;
    let costs = candidate_costs(p, phase, model)?;
    Ok(argmin_prefer_last(&costs).expect("at least one candidate threshold"))
}

fn plan_phase(
    p: &CostParams,
    phase: Phase,
    rule: SelectionRule,
    model: AgModel,
    ring: f64,
) -> Result<PhasePlan> {
    let costs = candidate_costs(p, phase, model)?;
    let pick = match rule {
        SelectionRule::SmallestSatisfying => {
            costs.iter().position(|&c| c <= ring).map(|t| (t, costs[t]))
        }
        SelectionRule::Argmin => argmin_prefer_last(&costs).filter(|&(_, c)| c <= ring),
    };
    Ok(match pick {
        Some((threshold, predicted_ns)) => PhasePlan {
            phase,
            choice: PhaseChoice::Switched { threshold },
            predicted_ns,
            ring_ns: ring,
        },
        None => PhasePlan {
            phase,
            choice: PhaseChoice::Ring,
            predicted_ns: ring,
            ring_ns: ring,
        },
    })
}

/// Plans every phase of `collective` independently. Non-power-of-two node
/// counts get an all-Ring plan with a warning instead of an error.
pub fn plan(
    p: &CostParams,
    collective: Collective,
    rule: SelectionRule,
    model: AgModel,
) -> Result<Plan> {
    p.validate()?;
    if let Err(e @ Error::NotPowerOfTwo(_)) = p.validate_rd() {
        let mut fallback = Plan::ring(collective, p)?;
        fallback.warning = Some(format!("{e}; using Ring"));
        return Ok(fallback);
    }
    let ring = ring_total_cost(p)?.total_ns;
    let phases = collective
        .phases()
        .iter()
        .map(|&phase| plan_phase(p, phase, rule, model, ring))
        .collect::<Result<Vec<_>>>()?;
    Ok(Plan::assemble(collective, phases, None))
}
