//! Backward sweep for the Lagrange multipliers of the forward recursion.
//!
//! The sweep works with the ratio form of the cavity and marginal updates,
//! `P_S(t+1) = P_S(t) (1 - nu(t)) (1 - mu(t)) prod_f theta_f(t+1) / theta_f(t)`,
//! which needs every `alpha < 1` so that no `theta` vanishes. Multipliers
//! are normalized so that the per-node sensitivities (`grad_nu`,
//! `grad_mu`) equal the derivative of the score
//! `s * sum_targets P_I(t_i)` with `s = +1` when maximizing and `-1` when
//! minimizing. With that convention the terminal values are
//! `lambda^S_i(T) = lambda^R_i(T) = s` for targets at `T`.

use crate::dmp::{ControlSchedule, DmpTrajectory, Sense, TargetSpec};
use crate::error::{Error, Result};
use crate::network::SpreadingNetwork;

/// Multipliers for every primal quantity at every time, plus the control
/// sensitivities they imply.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjointTrajectory {
    n: usize,
    m: usize,
    horizon: usize,
    lam_s_node: Vec<f64>,
    lam_r_node: Vec<f64>,
    lam_s_edge: Vec<f64>,
    lam_r_edge: Vec<f64>,
    lam_theta: Vec<f64>,
    lam_phi: Vec<f64>,
    grad_nu: Vec<f64>,
    grad_mu: Vec<f64>,
    /// Budget multiplier per step, when the sweep also updated controls.
    pub lambda_b: Vec<Option<f64>>,
}

impl AdjointTrajectory {
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn lambda_s_node(&self, i: usize, t: usize) -> f64 {
        self.lam_s_node[t * self.n + i]
    }

    pub fn lambda_r_node(&self, i: usize, t: usize) -> f64 {
        self.lam_r_node[t * self.n + i]
    }

    pub fn lambda_s_edge(&self, e: usize, t: usize) -> f64 {
        self.lam_s_edge[t * self.m + e]
    }

    pub fn lambda_r_edge(&self, e: usize, t: usize) -> f64 {
        self.lam_r_edge[t * self.m + e]
    }

    pub fn lambda_theta(&self, e: usize, t: usize) -> f64 {
        self.lam_theta[t * self.m + e]
    }

    pub fn lambda_phi(&self, e: usize, t: usize) -> f64 {
        self.lam_phi[t * self.m + e]
    }

    /// d score / d nu_i(t) for `t < horizon`.
    pub fn grad_nu(&self, i: usize, t: usize) -> f64 {
        self.grad_nu[t * self.n + i]
    }

    /// d score / d mu_i(t) for `t < horizon`.
    pub fn grad_mu(&self, i: usize, t: usize) -> f64 {
        self.grad_mu[t * self.n + i]
    }

    pub fn grad_nu_at(&self, t: usize) -> &[f64] {
        &self.grad_nu[t * self.n..(t + 1) * self.n]
    }

    pub fn grad_mu_at(&self, t: usize) -> &[f64] {
        &self.grad_mu[t * self.n..(t + 1) * self.n]
    }
}

/// Callback invoked once the sensitivities of step `t` are known, before the
/// sweep moves on to earlier times. It may overwrite the controls of step
/// `t`; the remaining backward recursion then uses the new values.
pub(crate) type StepUpdate<'a> =
    dyn FnMut(usize, &[f64], &[f64], &mut ControlSchedule) -> Result<Option<f64>> + 'a;

pub(crate) fn check_alpha(net: &SpreadingNetwork) -> Result<()> {
    for (s, d, a) in net.edges() {
        if a >= 1.0 {
            return Err(Error::UnitAlpha {
                src: net.label(s).to_string(),
                dst: net.label(d).to_string(),
            });
        }
    }
    Ok(())
}

/// Pure backward sweep for spontaneous-activation control.
///
/// Requires every `mu = 0` and every `alpha < 1`.
pub fn backward_sweep_targeting(
    net: &SpreadingNetwork,
    traj: &DmpTrajectory,
    controls: &ControlSchedule,
    target: &TargetSpec,
) -> Result<AdjointTrajectory> {
    for t in 0..traj.horizon() {
        if controls.mu_at(t).iter().any(|&m| m != 0.0) {
            return Err(Error::Invalid(
                "targeting sweep expects no vaccination (all mu = 0)".into(),
            ));
        }
    }
    backward_sweep(net, traj, controls, target)
}

/// Pure backward sweep for vaccination: minimizes the expected number of
/// infected nodes at the horizon. Requires every `nu = 0` and `alpha < 1`.
pub fn backward_sweep_vaccination(
    net: &SpreadingNetwork,
    traj: &DmpTrajectory,
    controls: &ControlSchedule,
) -> Result<AdjointTrajectory> {
    for t in 0..traj.horizon() {
        if controls.nu_at(t).iter().any(|&v| v != 0.0) {
            return Err(Error::Invalid(
                "vaccination sweep expects no spontaneous activation (all nu = 0)".into(),
            ));
        }
    }
    let target = TargetSpec::total_spread(net.node_count(), traj.horizon(), Sense::MinimizeInfected)?;
    backward_sweep(net, traj, controls, &target)
}

/// Backward sweep for general fixed controls and any target set.
pub fn backward_sweep(
    net: &SpreadingNetwork,
    traj: &DmpTrajectory,
    controls: &ControlSchedule,
    target: &TargetSpec,
) -> Result<AdjointTrajectory> {
    let mut c = controls.clone();
    sweep(net, traj, &mut c, target, None)
}

/// Products of `theta(t+1) / theta(t)` used by the ratio form.
struct Ratios {
    /// Per node, product over all in-edges.
    full: Vec<f64>,
    /// Per in-edge `f` of node `k`, product over the other in-edges of `k`.
    excl: Vec<f64>,
}

fn ratios(net: &SpreadingNetwork, traj: &DmpTrajectory, t: usize) -> Ratios {
    let n = net.node_count();
    let m = net.edge_count();
    let mut full = vec![1.0; n];
    let mut excl = vec![1.0; m];
    for k in 0..n {
        let ins = net.in_edges(k);
        let r = |f: usize| traj.theta(f, t + 1) / traj.theta(f, t);
        let mut acc = 1.0;
        for &f in ins {
            excl[f] = acc;
            acc *= r(f);
        }
        full[k] = acc;
        let mut acc = 1.0;
        for &f in ins.iter().rev() {
            excl[f] *= acc;
            acc *= r(f);
        }
    }
    Ratios { full, excl }
}

pub(crate) fn sweep(
    net: &SpreadingNetwork,
    traj: &DmpTrajectory,
    controls: &mut ControlSchedule,
    target: &TargetSpec,
    mut update: Option<&mut StepUpdate<'_>>,
) -> Result<AdjointTrajectory> {
    check_alpha(net)?;
    let n = net.node_count();
    let m = net.edge_count();
    let horizon = traj.horizon();
    if traj.node_count() != n || traj.edge_count() != m {
        return Err(Error::Invalid("trajectory does not belong to this network".into()));
    }
    if controls.horizon() < horizon || controls.node_count() != n {
        return Err(Error::Invalid(format!(
            "control schedule covers {} steps, trajectory has {horizon}",
            controls.horizon()
        )));
    }
    target.check(n, horizon)?;
    let sign = match target.sense() {
        Sense::MaximizeInfected => 1.0,
        Sense::MinimizeInfected => -1.0,
    };
    let mut inj = vec![0.0; (horizon + 1) * n];
    for &(i, t) in target.targets() {
        inj[t * n + i] += sign;
    }

    let rat: Vec<Ratios> = (0..horizon).map(|t| ratios(net, traj, t)).collect();
    // Ratio product over in(k) minus the reverse of e = k -> i.
    let rexcl = |e: usize, t: usize| match net.reverse(e) {
        Some(f) => rat[t].excl[f],
        None => rat[t].full[net.src(e)],
    };

    let len_n = (horizon + 1) * n;
    let len_m = (horizon + 1) * m;
    let mut adj = AdjointTrajectory {
        n,
        m,
        horizon,
        lam_s_node: vec![0.0; len_n],
        lam_r_node: vec![0.0; len_n],
        lam_s_edge: vec![0.0; len_m],
        lam_r_edge: vec![0.0; len_m],
        lam_theta: vec![0.0; len_m],
        lam_phi: vec![0.0; len_m],
        grad_nu: vec![0.0; horizon * n],
        grad_mu: vec![0.0; horizon * n],
        lambda_b: vec![None; horizon],
    };

    // Per out-edge term lambda^S_e(s) P_S^e(s) and per node total X_i(s),
    // carried from s = t + 1 to the next iteration.
    let mut y_next = vec![0.0; m];
    let mut x_next = vec![0.0; n];
    let mut y_cur = vec![0.0; m];
    let mut x_cur = vec![0.0; n];

    for t in (0..=horizon).rev() {
        let (cn, cm) = (t * n, t * m);
        let last = t == horizon;

        for e in 0..m {
            let a = net.alpha(e);
            let lphi = if last {
                0.0
            } else {
                (1.0 - a) * adj.lam_phi[cm + m + e] - a * adj.lam_theta[cm + m + e]
            };
            adj.lam_phi[cm + e] = lphi;
            adj.lam_r_edge[cm + e] = if last {
                -lphi
            } else {
                adj.lam_r_edge[cm + m + e] + adj.lam_phi[cm + m + e] - lphi
            };
        }
        for i in 0..n {
            adj.lam_r_node[cn + i] = inj[cn + i] + if last { 0.0 } else { adj.lam_r_node[cn + n + i] };
        }

        for e in 0..m {
            let mut v = -adj.lam_phi[cm + e];
            if !last {
                let k = net.src(e);
                let ck = (1.0 - controls.nu(k, t)) * (1.0 - controls.mu(k, t));
                v += adj.lam_s_edge[cm + m + e] * ck * rexcl(e, t)
                    + adj.lam_phi[cm + m + e]
                    + adj.lam_r_edge[cm + m + e] * controls.mu(k, t);
            }
            adj.lam_s_edge[cm + e] = v;
        }
        for i in 0..n {
            let mut v = inj[cn + i];
            if !last {
                let ci = (1.0 - controls.nu(i, t)) * (1.0 - controls.mu(i, t));
                v += adj.lam_s_node[cn + n + i] * ci * rat[t].full[i]
                    + adj.lam_r_node[cn + n + i] * controls.mu(i, t);
            }
            adj.lam_s_node[cn + i] = v;
        }

        if t >= 1 {
            let s = t - 1;
            let mut gnu = vec![0.0; n];
            let mut gmu = vec![0.0; n];
            for i in 0..n {
                let mut bracket = adj.lam_s_node[cn + i] * traj.ps(i, s) * rat[s].full[i];
                let mut vacc = adj.lam_r_node[cn + i] * traj.ps(i, s);
                for &e in net.out_edges(i) {
                    bracket += adj.lam_s_edge[cm + e] * traj.cavity_ps(e, s) * rexcl(e, s);
                    vacc += adj.lam_r_edge[cm + e] * traj.cavity_ps(e, s);
                }
                gnu[i] = (1.0 - controls.mu(i, s)) * bracket;
                gmu[i] = (1.0 - controls.nu(i, s)) * bracket - vacc;
            }
            if let Some(f) = update.as_deref_mut() {
                adj.lambda_b[s] = f(s, &gnu, &gmu, controls)?;
            }
            adj.grad_nu[s * n..(s + 1) * n].copy_from_slice(&gnu);
            adj.grad_mu[s * n..(s + 1) * n].copy_from_slice(&gmu);

            // X_i(t) with the (possibly updated) controls of step t - 1.
            for i in 0..n {
                let ci = (1.0 - controls.nu(i, s)) * (1.0 - controls.mu(i, s));
                let mut x = adj.lam_s_node[cn + i] * traj.ps(i, s) * ci * rat[s].full[i];
                for &e in net.out_edges(i) {
                    let y = adj.lam_s_edge[cm + e] * traj.cavity_ps(e, s) * ci * rexcl(e, s);
                    y_cur[e] = y;
                    x += y;
                }
                x_cur[i] = x;
            }
        }

        for f in 0..m {
            let i = net.dst(f);
            let back = net.reverse(f);
            let excl = |x: &[f64], y: &[f64]| x[i] - back.map_or(0.0, |e| y[e]);
            let mut delta = 0.0;
            if t >= 1 {
                delta += excl(&x_cur, &y_cur);
            }
            if !last {
                delta -= excl(&x_next, &y_next);
            }
            let carry = if last { 0.0 } else { adj.lam_theta[cm + m + f] };
            adj.lam_theta[cm + f] = carry + delta / traj.theta(f, t);
        }
        std::mem::swap(&mut x_cur, &mut x_next);
        std::mem::swap(&mut y_cur, &mut y_next);
    }
    Ok(adj)
}
