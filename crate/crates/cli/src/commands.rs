use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use ringswitch::cost_model::{rd_total_cost, ring_total_cost, switched_phase_cost, PhaseCost};
use ringswitch::flowsim::simulate_collective;
use ringswitch::planner::{self, PhaseChoice, Plan};
use ringswitch::sweep::{self, SweepGrid, MIB};
use ringswitch::{Collective, CostParams, Phase};

use crate::config::{CliError, CliResult, Settings};

fn steps_str(c: &PhaseCost) -> String {
    let parts: Vec<String> = c.per_step_ns.iter().map(|s| format!("{s:.2}")).collect();
    format!("[{}]", parts.join(", "))
}

fn phase_name(phase: Phase) -> &'static str {
    match phase {
        Phase::ReduceScatter => "reduce-scatter",
        Phase::AllGather => "allgather",
    }
}

fn print_params(out: &mut impl Write, p: &CostParams) -> std::io::Result<()> {
    writeln!(
        out,
        "n={} m_bytes={} alpha_ns={:.2} alpha_s_ns={:.2} bandwidth_gbps={:.2} delta_ns={:.2} tx_full_ns={:.2}",
        p.n,
        p.m_bytes,
        p.alpha_ns,
        p.alpha_s_ns,
        p.bandwidth_gbps,
        p.delta_ns,
        p.tx_full_ns()
    )
}

fn io_err(e: std::io::Error) -> CliError {
    if e.kind() == std::io::ErrorKind::BrokenPipe {
        CliError::BrokenPipe
    } else {
        CliError::Io(e.to_string())
    }
}

/// Analytical totals for every threshold plus the Ring baseline.
pub fn cmd_model(s: &Settings, out: &mut impl Write) -> CliResult<()> {
    let p = s.cost_params()?;
    let collective = s.collective()?;
    let model = s.ag_model()?;
    print_params(out, &p).map_err(io_err)?;

    let ring = ring_total_cost(&p)?;
    writeln!(
        out,
        "ring                 total_ns={:.2}  steps={}",
        ring.total_ns,
        steps_str(&ring)
    )
    .map_err(io_err)?;
    if collective == Collective::AllReduce {
        writeln!(
            out,
            "ring allreduce       total_ns={:.2}",
            2.0 * ring.total_ns
        )
        .map_err(io_err)?;
    }

    p.validate_rd()?;
    let rd = rd_total_cost(&p)?;
    writeln!(
        out,
        "rd-static            total_ns={:.2}  steps={}",
        rd.total_ns,
        steps_str(&rd)
    )
    .map_err(io_err)?;
    for &phase in collective.phases() {
        let label = match phase {
            Phase::ReduceScatter => "T",
            Phase::AllGather => "T'",
        };
        let suffix = match phase {
            Phase::ReduceScatter => String::new(),
            Phase::AllGather => format!(" ({model})"),
        };
        for t in 0..=p.rd_steps() {
            let c = switched_phase_cost(phase, t, &p, model)?;
            let marker = if c.total_ns <= ring.total_ns {
                ""
            } else {
                "  > ring"
            };
            writeln!(
                out,
                "{}{suffix} {label}={t}  total_ns={:.2}  steps={}{marker}",
                phase_name(phase),
                c.total_ns,
                steps_str(&c)
            )
            .map_err(io_err)?;
        }
    }
    Ok(())
}

/// Plan from flags: forced Ring, forced thresholds, or the planner.
pub fn resolve_plan(s: &Settings, p: &CostParams) -> CliResult<Plan> {
    let collective = s.collective()?;
    let model = s.ag_model()?;
    if s.ring()? {
        return Ok(Plan::ring(collective, p)?);
    }
    let t = s.threshold()?;
    let tp = s.threshold_prime()?;
    if t.is_none() && tp.is_none() {
        return Ok(planner::plan(p, collective, s.rule()?, model)?);
    }
    p.validate_rd()?;
    let steps = p.rd_steps();
    let (t, tp) = match collective {
        Collective::ReduceScatter => match t {
            Some(t) => (t, 0),
            None => {
                return Err(CliError::Param(
                    "--threshold is required for reduce-scatter".into(),
                ))
            }
        },
        Collective::AllGather => (0, tp.or(t).unwrap_or(0)),
        Collective::AllReduce => {
            let t = t.unwrap_or_else(|| steps.saturating_sub(tp.unwrap_or(0)));
            (t, tp.unwrap_or(steps.saturating_sub(t)))
        }
    };
    Ok(Plan::fixed(collective, t, tp, p, model)?)
}

pub fn cmd_plan(s: &Settings, out: &mut impl Write) -> CliResult<()> {
    let p = s.cost_params()?;
    let plan = resolve_plan(s, &p)?;
    if let Some(w) = &plan.warning {
        eprintln!("warning: {w}");
    }
    writeln!(out, "{plan}").map_err(io_err)?;
    writeln!(out, "predicted_total_ns={:.2}", plan.predicted_total_ns).map_err(io_err)?;
    writeln!(out, "ring_baseline_ns={:.2}", plan.ring_baseline_ns).map_err(io_err)?;
    for ph in &plan.phases {
        let choice = match ph.choice {
            PhaseChoice::Ring => "ring".to_string(),
            PhaseChoice::Switched { threshold } => format!("switched threshold={threshold}"),
        };
        writeln!(
            out,
            "{}: {choice} predicted_ns={:.2} ring_ns={:.2}",
            phase_name(ph.phase),
            ph.predicted_ns,
            ph.ring_ns
        )
        .map_err(io_err)?;
    }
    Ok(())
}

pub fn cmd_simulate(s: &Settings, out: &mut impl Write) -> CliResult<()> {
    let p = s.cost_params()?;
    let plan = resolve_plan(s, &p)?;
    if let Some(w) = &plan.warning {
        eprintln!("warning: {w}");
    }
    let res = simulate_collective(&plan, &p)?;
    writeln!(out, "plan: {plan}").map_err(io_err)?;
    write!(out, "{}", res.timeline()).map_err(io_err)?;
    writeln!(out, "total_ns={:.2}", res.total_ns).map_err(io_err)?;
    Ok(())
}

fn create_csv(dir: &Path, name: &str) -> CliResult<BufWriter<File>> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    File::create(&path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))
}

pub fn cmd_sweep(s: &Settings, out: &mut impl Write) -> CliResult<()> {
    let defaults = SweepGrid::default();
    let (m_bytes, alpha_ns, delta_ns, bandwidth_gbps, alpha_s_ns) = s.grid_axes(&defaults)?;
    let grid = SweepGrid {
        n: s.nodes()?,
        bandwidth_gbps,
        alpha_s_ns,
        delta_ns,
        alpha_ns,
        m_bytes,
        collective: s.collective()?,
        ag_model: s.ag_model()?,
    };
    let records = sweep::run_grid(&grid)?;
    let dir = s.out_dir();
    sweep::write_detail_csv(&records, create_csv(&dir, "sweep_detail.csv")?).map_err(io_err)?;
    sweep::write_summary_csv(&records, create_csv(&dir, "sweep_summary.csv")?).map_err(io_err)?;
    writeln!(
        out,
        "{} cells -> {}, {}",
        records.len(),
        dir.join("sweep_detail.csv").display(),
        dir.join("sweep_summary.csv").display()
    )
    .map_err(io_err)?;
    if let Some(best) = records
        .iter()
        .max_by(|a, b| a.speedup_pct.total_cmp(&b.speedup_pct))
    {
        writeln!(
            out,
            "max speedup {:.2}% at m_bytes={} alpha_ns={:.2} delta_ns={:.2} (best_T={})",
            best.speedup_pct,
            best.params.m_bytes,
            best.params.alpha_ns,
            best.params.delta_ns,
            best.best_t
        )
        .map_err(io_err)?;
    }
    Ok(())
}

pub fn cmd_ratio(s: &Settings, out: &mut impl Write) -> CliResult<()> {
    let defaults = SweepGrid {
        m_bytes: vec![32, 1024, 64 * 1024, 4 * MIB, 32 * MIB],
        alpha_ns: vec![10.0, 20.0, 50.0, 100.0, 200.0, 500.0, 1000.0],
        ..SweepGrid::default()
    };
    let (m_bytes, alpha_ns, _, bandwidth_gbps, _) = s.grid_axes(&defaults)?;
    let n = s.nodes_or(16)?;
    let records = sweep::ratio_experiment(n, &m_bytes, &alpha_ns, bandwidth_gbps)?;
    let dir = s.out_dir();
    sweep::write_ratio_csv(&records, create_csv(&dir, "ratio.csv")?).map_err(io_err)?;
    writeln!(
        out,
        "{} rows -> {}",
        records.len(),
        dir.join("ratio.csv").display()
    )
    .map_err(io_err)?;
    Ok(())
}
