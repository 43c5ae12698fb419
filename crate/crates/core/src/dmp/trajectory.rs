use super::ControlSchedule;
use crate::error::{Error, Result};
use crate::network::{InitialCondition, SpreadingNetwork};

/// Round-off allowance outside `[0, 1]` before a value counts as a bug.
pub const EPS_NUM: f64 = 1e-9;

/// Full time history of the forward message-passing recursion.
///
/// Edge quantities are stored per slice as `t * m + e`, node quantities as
/// `t * n + i`. Slice 0 is the initial condition; `horizon()` steps have been
/// taken.
#[derive(Debug, Clone, PartialEq)]
pub struct DmpTrajectory {
    n: usize,
    m: usize,
    theta: Vec<f64>,
    phi: Vec<f64>,
    cav_ps: Vec<f64>,
    cav_pr: Vec<f64>,
    ps: Vec<f64>,
    pi: Vec<f64>,
    pr: Vec<f64>,
    /// Running product of `(1 - nu)(1 - mu)` per node.
    surv: Vec<f64>,
}

impl DmpTrajectory {
    /// The `t = 0` slice: `theta = 1`, `phi = P_I` of the source, cavity
    /// marginals copied from the source node.
    pub fn init(net: &SpreadingNetwork, ic: &InitialCondition) -> Result<Self> {
        ic.check_size(net.node_count())?;
        let n = net.node_count();
        let m = net.edge_count();
        let mut phi = Vec::with_capacity(m);
        let mut cav_ps = Vec::with_capacity(m);
        let mut cav_pr = Vec::with_capacity(m);
        for e in 0..m {
            let k = net.src(e);
            phi.push(ic.pi(k));
            cav_ps.push(ic.ps(k));
            cav_pr.push(ic.pr(k));
        }
        Ok(Self {
            n,
            m,
            theta: vec![1.0; m],
            phi,
            cav_ps,
            cav_pr,
            ps: (0..n).map(|i| ic.ps(i)).collect(),
            pi: (0..n).map(|i| ic.pi(i)).collect(),
            pr: (0..n).map(|i| ic.pr(i)).collect(),
            surv: vec![1.0; n],
        })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.m
    }

    /// Number of steps taken; slices `0..=horizon()` are available.
    pub fn horizon(&self) -> usize {
        self.ps.len() / self.n.max(1) - 1
    }

    #[inline]
    pub fn theta(&self, e: usize, t: usize) -> f64 {
        self.theta[t * self.m + e]
    }

    #[inline]
    pub fn phi(&self, e: usize, t: usize) -> f64 {
        self.phi[t * self.m + e]
    }

    #[inline]
    pub fn cavity_ps(&self, e: usize, t: usize) -> f64 {
        self.cav_ps[t * self.m + e]
    }

    #[inline]
    pub fn cavity_pr(&self, e: usize, t: usize) -> f64 {
        self.cav_pr[t * self.m + e]
    }

    pub fn cavity_pi(&self, e: usize, t: usize) -> f64 {
        1.0 - self.cavity_ps(e, t) - self.cavity_pr(e, t)
    }

    #[inline]
    pub fn ps(&self, i: usize, t: usize) -> f64 {
        self.ps[t * self.n + i]
    }

    #[inline]
    pub fn pi(&self, i: usize, t: usize) -> f64 {
        self.pi[t * self.n + i]
    }

    #[inline]
    pub fn pr(&self, i: usize, t: usize) -> f64 {
        self.pr[t * self.n + i]
    }

    pub fn theta_at(&self, t: usize) -> &[f64] {
        &self.theta[t * self.m..(t + 1) * self.m]
    }

    pub fn ps_at(&self, t: usize) -> &[f64] {
        &self.ps[t * self.n..(t + 1) * self.n]
    }

    pub fn pi_at(&self, t: usize) -> &[f64] {
        &self.pi[t * self.n..(t + 1) * self.n]
    }

    pub fn pr_at(&self, t: usize) -> &[f64] {
        &self.pr[t * self.n..(t + 1) * self.n]
    }

    /// Appends slice `t + 1` computed from slice `t = horizon()` and the
    /// controls at step `t`.
    pub fn step(&mut self, net: &SpreadingNetwork, controls: &ControlSchedule) -> Result<()> {
        let t = self.horizon();
        if controls.horizon() <= t || controls.node_count() != self.n {
            return Err(Error::Invalid(format!(
                "control schedule ({} nodes, {} steps) does not cover step {t} on {} nodes",
                controls.node_count(),
                controls.horizon(),
                self.n
            )));
        }
        let (n, m) = (self.n, self.m);
        let cur = t * m;
        let curn = t * n;

        let mut theta = Vec::with_capacity(m);
        for e in 0..m {
            let v = self.theta[cur + e] - net.alpha(e) * self.phi[cur + e];
            theta.push(checked("theta", e, t + 1, v)?);
        }

        let mut surv = Vec::with_capacity(n);
        for i in 0..n {
            let s = self.surv[curn + i] * (1.0 - controls.nu(i, t)) * (1.0 - controls.mu(i, t));
            surv.push(s);
        }

        // Leave-one-out products over in-edges via prefix/suffix scans.
        let mut cav_ps = vec![0.0; m];
        let mut ps = Vec::with_capacity(n);
        let mut excl: Vec<f64> = Vec::new();
        for k in 0..n {
            let ins = net.in_edges(k);
            excl.clear();
            excl.resize(ins.len(), 1.0);
            let mut acc = 1.0;
            for (j, &f) in ins.iter().enumerate() {
                excl[j] = acc;
                acc *= theta[f];
            }
            let full = acc;
            let mut acc = 1.0;
            for (j, &f) in ins.iter().enumerate().rev() {
                excl[j] *= acc;
                acc *= theta[f];
            }
            let base = self.ps[k] * surv[k];
            ps.push(checked("P_S", k, t + 1, base * full)?);
            for &e in net.out_edges(k) {
                let prod = match net.reverse(e) {
                    Some(r) => excl[net.in_position(r)],
                    None => full,
                };
                cav_ps[e] = checked("cavity P_S", e, t + 1, base * prod)?;
            }
        }

        let mut cav_pr = Vec::with_capacity(m);
        let mut phi = Vec::with_capacity(m);
        for e in 0..m {
            let k = net.src(e);
            let r = self.cav_pr[cur + e] + controls.mu(k, t) * self.cav_ps[cur + e];
            let r = checked("cavity P_R", e, t + 1, r)?;
            let f = (1.0 - net.alpha(e)) * self.phi[cur + e] + (self.cav_ps[cur + e] - cav_ps[e])
                - (r - self.cav_pr[cur + e]);
            cav_pr.push(r);
            phi.push(checked("phi", e, t + 1, f)?);
        }

        let mut pr = Vec::with_capacity(n);
        let mut pi = Vec::with_capacity(n);
        for i in 0..n {
            let r = checked(
                "P_R",
                i,
                t + 1,
                self.pr[curn + i] + controls.mu(i, t) * self.ps[curn + i],
            )?;
            pr.push(r);
            pi.push(checked("P_I", i, t + 1, 1.0 - ps[i] - r)?);
        }

        self.theta.extend(theta);
        self.phi.extend(phi);
        self.cav_ps.extend(cav_ps);
        self.cav_pr.extend(cav_pr);
        self.ps.extend(ps);
        self.pi.extend(pi);
        self.pr.extend(pr);
        self.surv.extend(surv);
        Ok(())
    }
}

#[inline]
fn checked(quantity: &'static str, index: usize, t: usize, value: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else if value >= -EPS_NUM && value <= 1.0 + EPS_NUM {
        Ok(value.clamp(0.0, 1.0))
    } else {
        Err(Error::OutOfRange {
            quantity,
            index,
            t,
            value,
        })
    }
}

/// Runs `horizon` forward steps from the initial condition.
pub fn run_forward(
    net: &SpreadingNetwork,
    ic: &InitialCondition,
    controls: &ControlSchedule,
    horizon: usize,
) -> Result<DmpTrajectory> {
    let mut traj = DmpTrajectory::init(net, ic)?;
    let reserve = horizon;
    traj.theta.reserve(reserve * traj.m);
    traj.ps.reserve(reserve * traj.n);
    for _ in 0..horizon {
        traj.step(net, controls)?;
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_edge(alpha: f64) -> SpreadingNetwork {
        SpreadingNetwork::with_unlabeled(2, [(0, 1, alpha)]).unwrap()
    }

    #[test]
    fn init_slice() {
        let net = crate::network::star_graph(4, 0.3).unwrap();
        let ic = InitialCondition::with_infected(4, &[0]).unwrap();
        let tr = DmpTrajectory::init(&net, &ic).unwrap();
        for e in 0..net.edge_count() {
            let expect = if net.src(e) == 0 { 1.0 } else { 0.0 };
            assert_eq!(tr.phi(e, 0), expect);
            assert_eq!(tr.theta(e, 0), 1.0);
        }
        let ic = InitialCondition::from_triples(vec![[0.7, 0.3, 0.0]; 4]).unwrap();
        let tr = DmpTrajectory::init(&net, &ic).unwrap();
        assert!((0..net.edge_count()).all(|e| tr.phi(e, 0) == 0.3));
    }

    #[test]
    fn isolated_node_survival() {
        let net = single_edge(0.0);
        let mut c = ControlSchedule::zeros(2, 3);
        for t in 0..3 {
            c.set_nu(1, t, 0.2);
        }
        let tr = run_forward(&net, &InitialCondition::all_susceptible(2), &c, 3).unwrap();
        assert!((tr.ps(1, 3) - 0.512).abs() < 1e-15);
        assert_eq!(tr.ps(0, 3), 1.0);
    }

    #[test]
    fn two_node_edge() {
        let net = single_edge(0.5);
        let ic = InitialCondition::with_infected(2, &[0]).unwrap();
        let tr = run_forward(&net, &ic, &ControlSchedule::zeros(2, 2), 2).unwrap();
        assert_eq!(tr.ps(1, 1), 0.5);
        assert_eq!(tr.ps(1, 2), 0.25);
        assert_eq!(tr.pi(1, 2), 0.75);
    }

    #[test]
    fn frozen_dynamics_and_zero_horizon() {
        let net = crate::network::complete_graph(4, 0.0).unwrap();
        let ic = InitialCondition::from_triples(vec![[0.5, 0.3, 0.2]; 4]).unwrap();
        let tr = run_forward(&net, &ic, &ControlSchedule::zeros(4, 4), 4).unwrap();
        for t in 0..=4 {
            assert_eq!(tr.ps_at(t), tr.ps_at(0));
            assert_eq!(tr.pi_at(t), tr.pi_at(0));
        }
        let tr0 = run_forward(&net, &ic, &ControlSchedule::zeros(4, 0), 0).unwrap();
        assert_eq!(tr0.horizon(), 0);
    }

    #[test]
    fn short_schedule_is_rejected() {
        let net = single_edge(0.5);
        let ic = InitialCondition::all_susceptible(2);
        assert!(run_forward(&net, &ic, &ControlSchedule::zeros(2, 1), 2).is_err());
    }

    #[test]
    fn range_check() {
        assert_eq!(checked("x", 0, 0, -5e-10).unwrap(), 0.0);
        assert_eq!(checked("x", 0, 0, 1.0 + 5e-10).unwrap(), 1.0);
        assert!(checked("x", 0, 0, -1e-6).is_err());
    }
}
