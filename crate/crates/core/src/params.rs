//! Model parameters and the small enums shared by every module.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Every symbol of the cost model in one place.
///
/// Times are nanoseconds, sizes bytes, bandwidth Gbps. The inverse bandwidth
/// is never stored; [`CostParams::tx_ns`] derives transmission times from
/// `bandwidth_gbps` on demand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    pub n: usize,
    pub m_bytes: u64,
    pub alpha_ns: f64,
    pub alpha_s_ns: f64,
    pub bandwidth_gbps: f64,
    pub delta_ns: f64,
}

impl CostParams {
    pub fn new(
        n: usize,
        m_bytes: u64,
        alpha_ns: f64,
        alpha_s_ns: f64,
        bandwidth_gbps: f64,
        delta_ns: f64,
    ) -> Result<Self> {
        let p = CostParams {
            n,
            m_bytes,
            alpha_ns,
            alpha_s_ns,
            bandwidth_gbps,
            delta_ns,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(invalid("n", format!("need n >= 2, got {}", self.n)));
        }
        nonneg("alpha_ns", self.alpha_ns)?;
        nonneg("alpha_s_ns", self.alpha_s_ns)?;
        nonneg("delta_ns", self.delta_ns)?;
        if !(self.bandwidth_gbps.is_finite() && self.bandwidth_gbps > 0.0) {
            return Err(invalid(
                "bandwidth_gbps",
                format!("must be finite and > 0, got {}", self.bandwidth_gbps),
            ));
        }
        if !self.tx_full_ns().is_finite() {
            return Err(invalid("m_bytes", "transmission time overflows".into()));
        }
        Ok(())
    }

    /// Validates and additionally requires a power-of-two node count.
    pub fn validate_rd(&self) -> Result<()> {
        self.validate()?;
        if !self.n.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(self.n));
        }
        Ok(())
    }

    /// Transmission time of `bytes` over one unshared link.
    pub fn tx_ns(&self, bytes: f64) -> f64 {
        bytes * 8.0 / self.bandwidth_gbps
    }

    /// Transmission time of the whole message, `m * 8 / b`.
    pub fn tx_full_ns(&self) -> f64 {
        self.tx_ns(self.m_bytes as f64)
    }

    /// Number of recursive-doubling steps, `log2 n`. Only meaningful for
    /// power-of-two `n`.
    pub fn rd_steps(&self) -> usize {
        self.n.trailing_zeros() as usize
    }

    pub fn with_delta(self, delta_ns: f64) -> Self {
        CostParams { delta_ns, ..self }
    }

    pub fn with_alpha(self, alpha_ns: f64) -> Self {
        CostParams { alpha_ns, ..self }
    }

    pub fn with_bytes(self, m_bytes: u64) -> Self {
        CostParams { m_bytes, ..self }
    }
}

fn invalid(name: &'static str, reason: String) -> Error {
    Error::InvalidParam { name, reason }
}

fn nonneg(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("must be finite and >= 0, got {v}")))
    }
}

/// One half of a reduce-scatter/AllGather pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    ReduceScatter,
    AllGather,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Collective {
    ReduceScatter,
    AllGather,
    AllReduce,
}

impl Collective {
    /// Phases executed by the collective, in order.
    pub fn phases(self) -> &'static [Phase] {
        match self {
            Collective::ReduceScatter => &[Phase::ReduceScatter],
            Collective::AllGather => &[Phase::AllGather],
            Collective::AllReduce => &[Phase::ReduceScatter, Phase::AllGather],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Collective::ReduceScatter => "reduce-scatter",
            Collective::AllGather => "allgather",
            Collective::AllReduce => "allreduce",
        }
    }
}

impl fmt::Display for Collective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Collective {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "reduce-scatter" | "reducescatter" | "rs" => Ok(Collective::ReduceScatter),
            "allgather" | "all-gather" | "ag" => Ok(Collective::AllGather),
            "allreduce" | "all-reduce" | "ar" => Ok(Collective::AllReduce),
            other => Err(format!(
                "unknown collective '{other}' (expected reduce-scatter, allgather or allreduce)"
            )),
        }
    }
}

/// Which static-ring cost the AllGather threshold formula charges.
///
/// `Paper` charges static step `i` a path of `2^i` hops and a congestion
/// factor of `2^(log2 n - i)`, so every static step pays the full-message
/// transmission time. `Reverse` mirrors reduce-scatter: static step `i` walks
/// `2^(log2 n - 1 - i)` hops with the same congestion factor, which is what
/// the simulator's AllGather traffic pattern produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum AgModel {
    #[default]
    Paper,
    Reverse,
}

impl AgModel {
    pub fn as_str(self) -> &'static str {
        match self {
            AgModel::Paper => "paper",
            AgModel::Reverse => "reverse",
        }
    }
}

impl fmt::Display for AgModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AgModel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "paper" | "paper-verbatim" | "verbatim" => Ok(AgModel::Paper),
            "reverse" | "reverse-of-rs" => Ok(AgModel::Reverse),
            other => Err(format!(
                "unknown AllGather model '{other}' (expected paper or reverse)"
            )),
        }
    }
}
