use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::continuous::{ContinuousControl, ContinuousReport, ContinuousTrajectory};
use crate::dmp::{run_forward, ControlSchedule, TargetSpec};
use crate::error::{Error, Result};
use crate::network::{InitialCondition, SpreadingNetwork};
use crate::optim::{Mode, OptimizationReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetValue {
    pub node: String,
    pub time: f64,
    pub p_infected: f64,
}

/// Per barrier weight and start summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub epsilon: f64,
    pub start: usize,
    pub iterations: usize,
    pub converged: bool,
    pub best_objective: Option<f64>,
    pub max_residual_after_update: f64,
}

/// JSON form of an optimization report. Controls live in the schedule CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportJson {
    pub mode: Mode,
    pub objective: f64,
    pub epsilon: f64,
    pub iterations: usize,
    pub converged: bool,
    pub objective_trace: Vec<f64>,
    pub residuals: Vec<f64>,
    pub max_abs_residual: f64,
    pub targets: Vec<TargetValue>,
    pub runs: Vec<RunSummary>,
    pub wall_time_s: f64,
}

impl ReportJson {
    pub fn new(
        net: &SpreadingNetwork,
        initial: &InitialCondition,
        horizon: usize,
        mode: Mode,
        target: &TargetSpec,
        report: &OptimizationReport,
    ) -> Result<Self> {
        let traj = run_forward(net, initial, &report.schedule, horizon)?;
        Ok(Self {
            mode,
            objective: report.objective,
            epsilon: report.epsilon,
            iterations: report.iterations,
            converged: report.converged,
            objective_trace: report.objective_trace.clone(),
            residuals: report.residuals.clone(),
            max_abs_residual: report.residuals.iter().fold(0.0, |m, r| m.max(r.abs())),
            targets: target
                .targets()
                .iter()
                .map(|&(i, t)| TargetValue {
                    node: net.label(i).to_string(),
                    time: t as f64,
                    p_infected: traj.pi(i, t),
                })
                .collect(),
            runs: report
                .runs
                .iter()
                .map(|r| RunSummary {
                    epsilon: r.epsilon,
                    start: r.start,
                    iterations: r.iterations,
                    converged: r.converged,
                    best_objective: r.best.as_ref().map(|b| b.0),
                    max_residual_after_update: r.max_residual_after_update,
                })
                .collect(),
            wall_time_s: report.wall_time_s,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuousReportJson {
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub objective_trace: Vec<f64>,
    pub max_abs_residual: f64,
    pub targets: Vec<TargetValue>,
}

impl ContinuousReportJson {
    pub fn new(net: &SpreadingNetwork, target: &TargetSpec, traj: &ContinuousTrajectory, report: &ContinuousReport) -> Self {
        let dt = traj.dt();
        Self {
            objective: report.objective,
            iterations: report.iterations,
            converged: report.converged,
            objective_trace: report.objective_trace.clone(),
            max_abs_residual: report.control.residuals().iter().fold(0.0, |m, r| m.max(r.abs())),
            targets: target
                .targets()
                .iter()
                .map(|&(i, t)| TargetValue {
                    node: net.label(i).to_string(),
                    time: t as f64,
                    p_infected: traj.pi(i, (t as f64 / dt).round() as usize),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ScheduleRow {
    node: String,
    t: usize,
    nu: f64,
    mu: f64,
}

/// CSV `node,t,nu,mu`, one row per node and step.
pub fn write_schedule_csv<W: Write>(net: &SpreadingNetwork, schedule: &ControlSchedule, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for t in 0..schedule.horizon() {
        for i in 0..schedule.node_count() {
            w.serialize(ScheduleRow {
                node: net.label(i).to_string(),
                t,
                nu: schedule.nu(i, t),
                mu: schedule.mu(i, t),
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a `node,t,nu,mu` CSV into a schedule of `horizon` steps. Missing
/// rows stay zero; rows at `t >= horizon` are rejected.
pub fn read_schedule_csv<R: Read>(net: &SpreadingNetwork, horizon: usize, input: R) -> Result<ControlSchedule> {
    let mut s = ControlSchedule::zeros(net.node_count(), horizon);
    let mut r = csv::Reader::from_reader(input);
    for row in r.deserialize() {
        let row: ScheduleRow = row?;
        let i = net.node_by_label(&row.node)?;
        if row.t >= horizon {
            return Err(Error::Invalid(format!(
                "schedule row for {:?} at t = {} is beyond the horizon {horizon}",
                row.node, row.t
            )));
        }
        s.set_nu(i, row.t, row.nu);
        s.set_mu(i, row.t, row.mu);
    }
    s.validate()?;
    Ok(s)
}

/// CSV `node,t,nu` with real-valued cell start times.
pub fn write_continuous_schedule_csv<W: Write>(net: &SpreadingNetwork, control: &ContinuousControl, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["node", "t", "nu"])?;
    for k in 0..control.steps() {
        let t = k as f64 * control.dt();
        for i in 0..control.node_count() {
            w.write_record([net.label(i).to_string(), t.to_string(), control.nu(i, k).to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// CSV `node,t,P_S,P_I` on the grid.
pub fn write_continuous_trajectory_csv<W: Write>(net: &SpreadingNetwork, traj: &ContinuousTrajectory, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["node", "t", "P_S", "P_I"])?;
    for k in 0..=traj.steps() {
        for i in 0..net.node_count() {
            w.write_record([
                net.label(i).to_string(),
                traj.time(k).to_string(),
                traj.ps(i, k).to_string(),
                traj.pi(i, k).to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_round_trip() {
        let net = SpreadingNetwork::new(vec!["a".into(), "b".into()], [(0, 1, 0.3)]).unwrap();
        let mut s = ControlSchedule::zeros(2, 3);
        s.set_nu(1, 2, 0.1 + 0.2);
        s.set_mu(0, 1, 1.0 / 3.0);
        let mut buf = Vec::new();
        write_schedule_csv(&net, &s, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("node,t,nu,mu\n"));
        assert_eq!(text.lines().count(), 7);
        assert_eq!(read_schedule_csv(&net, 3, buf.as_slice()).unwrap(), s);
        assert!(read_schedule_csv(&net, 2, buf.as_slice()).is_err());
    }
}
