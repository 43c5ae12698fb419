use super::control::{ContinuousControl, Scheme};
use crate::dmp::TargetSpec;
use crate::error::{Error, Result};
use crate::network::{InitialCondition, SpreadingNetwork};

const THETA_SLACK: f64 = 1e-9;

/// Forward solution stored on every grid point `t_k = k dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousTrajectory {
    n: usize,
    m: usize,
    dt: f64,
    steps: usize,
    theta: Vec<f64>,
    ps: Vec<f64>,
    ps0: Vec<f64>,
}

impl ContinuousTrajectory {
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn theta(&self, e: usize, k: usize) -> f64 {
        self.theta[k * self.m + e]
    }

    pub fn ps(&self, i: usize, k: usize) -> f64 {
        self.ps[k * self.n + i]
    }

    /// `1 - P_S`: there is no removed state in this variant.
    pub fn pi(&self, i: usize, k: usize) -> f64 {
        1.0 - self.ps(i, k)
    }

    pub fn theta_at(&self, k: usize) -> &[f64] {
        &self.theta[k * self.m..(k + 1) * self.m]
    }

    pub fn ps_at(&self, k: usize) -> &[f64] {
        &self.ps[k * self.n..(k + 1) * self.n]
    }

    pub(crate) fn ps0(&self) -> &[f64] {
        &self.ps0
    }
}

/// Right-hand side of the forward system at time `t` with the rates `nu`
/// of the current cell.
pub(crate) fn rhs(
    net: &SpreadingNetwork,
    ctx: &Survival<'_>,
    t: f64,
    theta: &[f64],
    ps: &[f64],
    nu: &[f64],
    d_theta: &mut [f64],
    d_ps: &mut [f64],
) {
    for e in 0..net.edge_count() {
        d_theta[e] = net.alpha(e) * (ctx.cavity(net, e, t, theta, ps) - theta[e]);
    }
    for i in 0..net.node_count() {
        let r: f64 = net.in_edges(i).iter().map(|&k| d_theta[k] / theta[k]).sum();
        d_ps[i] = ctx.source(net, i, t, theta, ps, nu) + ps[i] * r;
    }
}

/// Evaluation of the spontaneous-survival factor.
pub(crate) struct Survival<'a> {
    #[cfg_attr(not(feature = "printed-survival"), allow(dead_code))]
    control: &'a ContinuousControl,
    #[cfg_attr(not(feature = "printed-survival"), allow(dead_code))]
    ps0: &'a [f64],
}

impl<'a> Survival<'a> {
    pub(crate) fn new(control: &'a ContinuousControl, ps0: &'a [f64]) -> Self {
        Self { control, ps0 }
    }

    /// `P_S^i(0) S_i(t) prod_{k -> i, k != j} theta_{k->i}` for `e = i -> j`.
    #[cfg(not(feature = "printed-survival"))]
    fn cavity(&self, net: &SpreadingNetwork, e: usize, _t: f64, theta: &[f64], ps: &[f64]) -> f64 {
        let src = net.src(e);
        match net.reverse(e) {
            Some(r) => ps[src] / theta[r],
            None => ps[src],
        }
    }

    /// `-nu_i P_S^i`, the spontaneous part of `d P_S^i / dt`.
    #[cfg(not(feature = "printed-survival"))]
    fn source(&self, _net: &SpreadingNetwork, i: usize, _t: f64, _theta: &[f64], ps: &[f64], nu: &[f64]) -> f64 {
        -nu[i] * ps[i]
    }

    #[cfg(feature = "printed-survival")]
    fn cavity(&self, net: &SpreadingNetwork, e: usize, t: f64, theta: &[f64], _ps: &[f64]) -> f64 {
        let src = net.src(e);
        let skip = net.reverse(e);
        let prod: f64 = net
            .in_edges(src)
            .iter()
            .filter(|&&k| Some(k) != skip)
            .map(|&k| theta[k])
            .product();
        self.ps0[src] * self.printed_factor(src, t) * prod
    }

    #[cfg(feature = "printed-survival")]
    fn source(&self, net: &SpreadingNetwork, i: usize, t: f64, theta: &[f64], _ps: &[f64], nu: &[f64]) -> f64 {
        let prod: f64 = net.in_edges(i).iter().map(|&k| theta[k]).product();
        self.ps0[i] * (-nu[i] * t).exp() * prod
    }

    /// `int_0^t exp(-nu_i(s) s) ds` for piecewise-constant `nu_i`.
    #[cfg(feature = "printed-survival")]
    fn printed_factor(&self, i: usize, t: f64) -> f64 {
        let dt = self.control.dt();
        let piece = |nu: f64, a: f64, b: f64| {
            if nu == 0.0 {
                b - a
            } else {
                ((-nu * a).exp() - (-nu * b).exp()) / nu
            }
        };
        let mut total = 0.0;
        let mut k = 0;
        while (k as f64) * dt < t && k < self.control.steps() {
            let a = k as f64 * dt;
            let b = ((k + 1) as f64 * dt).min(t);
            total += piece(self.control.nu(i, k), a, b);
            k += 1;
        }
        total
    }
}

/// Number of grid cells covering `[0, horizon]` with step `dt`.
pub(crate) fn grid_steps(horizon: f64, dt: f64) -> Result<usize> {
    let k = (horizon / dt).round();
    if horizon.is_nan() || horizon <= 0.0 || k < 1.0 || (k * dt - horizon).abs() > 1e-9 * horizon.max(1.0) {
        return Err(Error::Invalid(format!(
            "horizon {horizon} is not a positive multiple of dt = {dt}"
        )));
    }
    Ok(k as usize)
}

/// Grid index of a target time.
pub(crate) fn grid_index(t: f64, dt: f64) -> Result<usize> {
    let k = (t / dt).round();
    if (k * dt - t).abs() > 1e-9 * t.max(1.0) {
        return Err(Error::Invalid(format!("target time {t} is not on the grid of step {dt}")));
    }
    Ok(k as usize)
}

fn axpy(out: &mut [f64], base: &[f64], h: f64, d: &[f64]) {
    for ((o, b), x) in out.iter_mut().zip(base).zip(d) {
        *o = b + h * x;
    }
}

/// Integrates the forward system from `theta = 1`, `P_S = P_S(0)` over
/// `[0, horizon]` on the grid of `control`.
pub fn integrate_forward(
    net: &SpreadingNetwork,
    initial: &InitialCondition,
    control: &ContinuousControl,
    horizon: f64,
    scheme: Scheme,
) -> Result<ContinuousTrajectory> {
    let n = net.node_count();
    let m = net.edge_count();
    initial.check_size(n)?;
    if control.node_count() != n {
        return Err(Error::Invalid(format!(
            "control covers {} nodes, network has {n}",
            control.node_count()
        )));
    }
    control.validate()?;
    let dt = control.dt();
    let steps = grid_steps(horizon, dt)?;
    if control.steps() < steps {
        return Err(Error::Invalid(format!(
            "control has {} cells, horizon needs {steps}",
            control.steps()
        )));
    }
    let ps0: Vec<f64> = (0..n).map(|i| initial.ps(i)).collect();
    let ctx = Survival::new(control, &ps0);

    let mut theta = Vec::with_capacity((steps + 1) * m);
    let mut ps = Vec::with_capacity((steps + 1) * n);
    theta.extend(std::iter::repeat_n(1.0, m));
    ps.extend_from_slice(&ps0);

    let mut th = vec![1.0; m];
    let mut p = ps0.clone();
    let (mut k1t, mut k2t, mut k3t, mut k4t) = (vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; m]);
    let (mut k1p, mut k2p, mut k3p, mut k4p) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let (mut tt, mut tp) = (vec![0.0; m], vec![0.0; n]);
    for k in 0..steps {
        let nu = control.nu_at(k);
        let t = k as f64 * dt;
        match scheme {
            Scheme::Euler => {
                rhs(net, &ctx, t, &th, &p, nu, &mut k1t, &mut k1p);
                axpy(&mut tt, &th, dt, &k1t);
                axpy(&mut tp, &p, dt, &k1p);
                std::mem::swap(&mut th, &mut tt);
                std::mem::swap(&mut p, &mut tp);
            }
            Scheme::Rk4 => {
                rhs(net, &ctx, t, &th, &p, nu, &mut k1t, &mut k1p);
                axpy(&mut tt, &th, dt / 2.0, &k1t);
                axpy(&mut tp, &p, dt / 2.0, &k1p);
                rhs(net, &ctx, t + dt / 2.0, &tt, &tp, nu, &mut k2t, &mut k2p);
                axpy(&mut tt, &th, dt / 2.0, &k2t);
                axpy(&mut tp, &p, dt / 2.0, &k2p);
                rhs(net, &ctx, t + dt / 2.0, &tt, &tp, nu, &mut k3t, &mut k3p);
                axpy(&mut tt, &th, dt, &k3t);
                axpy(&mut tp, &p, dt, &k3p);
                rhs(net, &ctx, t + dt, &tt, &tp, nu, &mut k4t, &mut k4p);
                for e in 0..m {
                    th[e] += dt / 6.0 * (k1t[e] + 2.0 * k2t[e] + 2.0 * k3t[e] + k4t[e]);
                }
                for i in 0..n {
                    p[i] += dt / 6.0 * (k1p[i] + 2.0 * k2p[i] + 2.0 * k3p[i] + k4p[i]);
                }
            }
        }
        for (e, &v) in th.iter().enumerate() {
            if !v.is_finite() || !(-THETA_SLACK..=1.0 + THETA_SLACK).contains(&v) {
                return Err(Error::OutOfRange {
                    quantity: "theta",
                    index: e,
                    t: k + 1,
                    value: v,
                });
            }
        }
        if let Some(i) = p.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                iteration: k + 1,
                what: format!("P_S of node {i}"),
            });
        }
        theta.extend_from_slice(&th);
        ps.extend_from_slice(&p);
    }
    Ok(ContinuousTrajectory {
        n,
        m,
        dt,
        steps,
        theta,
        ps,
        ps0,
    })
}

/// Expected number of infected targets, `sum (1 - P_S^i(t_i))`.
pub fn objective_continuous(traj: &ContinuousTrajectory, target: &TargetSpec) -> Result<f64> {
    let mut total = 0.0;
    for &(i, t) in target.targets() {
        let k = grid_index(t as f64, traj.dt)?;
        if k > traj.steps || i >= traj.n {
            return Err(Error::Invalid(format!("target ({i}, {t}) outside the trajectory")));
        }
        total += traj.pi(i, k);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[cfg(not(feature = "printed-survival"))]
    #[test]
    fn frozen_without_coupling_or_rates() {
        let net = SpreadingNetwork::with_unlabeled(3, [(0, 1, 0.0), (1, 2, 0.0)]).unwrap();
        let ic = InitialCondition::with_infected(3, &[0]).unwrap();
        let c = ContinuousControl::zeros(3, 100, 0.01).unwrap();
        let tr = integrate_forward(&net, &ic, &c, 1.0, Scheme::Rk4).unwrap();
        assert_eq!(tr.ps_at(100), &[0.0, 1.0, 1.0]);
        assert_eq!(tr.theta_at(100), &[1.0, 1.0]);
    }

    #[test]
    fn grid_checks() {
        assert_eq!(grid_steps(1.0, 1e-3).unwrap(), 1000);
        assert!(grid_steps(1.0, 0.3).is_err());
        assert_eq!(grid_index(2.0, 0.5).unwrap(), 4);
    }
}
