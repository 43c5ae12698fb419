use std::io::Write;

use super::DmpTrajectory;
use crate::error::Result;
use crate::network::SpreadingNetwork;

/// CSV with columns `node,t,P_S,P_I,P_R`, one row per node and time.
pub fn write_node_csv<W: Write>(net: &SpreadingNetwork, traj: &DmpTrajectory, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["node", "t", "P_S", "P_I", "P_R"])?;
    for t in 0..=traj.horizon() {
        for i in 0..traj.node_count() {
            w.write_record([
                net.label(i).to_string(),
                t.to_string(),
                traj.ps(i, t).to_string(),
                traj.pi(i, t).to_string(),
                traj.pr(i, t).to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// CSV with columns `edge_id,t,theta,phi`.
pub fn write_edge_csv<W: Write>(traj: &DmpTrajectory, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["edge_id", "t", "theta", "phi"])?;
    for t in 0..=traj.horizon() {
        for e in 0..traj.edge_count() {
            w.write_record([
                e.to_string(),
                t.to_string(),
                traj.theta(e, t).to_string(),
                traj.phi(e, t).to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
