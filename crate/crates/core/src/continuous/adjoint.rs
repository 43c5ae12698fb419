use super::control::{ContinuousControl, Scheme};
use super::forward::{grid_index, rhs, ContinuousTrajectory, Survival};
use crate::dmp::{Sense, TargetSpec};
use crate::error::{Error, Result};
use crate::network::SpreadingNetwork;

/// Adjoint trajectory and the gradient of the score with respect to the
/// rate of every node on every cell.
///
/// The score is `sum P_I(t_i)` for [`Sense::MaximizeInfected`] and its
/// negative otherwise, so a positive gradient entry always means "more
/// rate there helps".
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousAdjoint {
    n: usize,
    m: usize,
    steps: usize,
    lambda_s: Vec<f64>,
    lambda_theta: Vec<f64>,
    gradient: Vec<f64>,
}

impl ContinuousAdjoint {
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// `lambda^S_i` at grid point `k`, taken just before any target jump at `t_k`.
    pub fn lambda_s(&self, i: usize, k: usize) -> f64 {
        self.lambda_s[k * self.n + i]
    }

    /// `lambda^theta_e` at grid point `k`, in the product-form convention
    /// where the multiplier of `P_S^j` is folded into every incoming edge.
    pub fn lambda_theta(&self, e: usize, k: usize) -> f64 {
        self.lambda_theta[k * self.m + e]
    }

    /// `d score / d nu_i` on cell `k`.
    pub fn gradient(&self, i: usize, k: usize) -> f64 {
        self.gradient[k * self.n + i]
    }

    pub fn gradient_at(&self, k: usize) -> &[f64] {
        &self.gradient[k * self.n..(k + 1) * self.n]
    }
}

/// `J(y)^T lambda` for the forward system at state `(theta, ps)` with rates `nu`.
#[allow(clippy::too_many_arguments)]
fn jt_lambda(
    net: &SpreadingNetwork,
    theta: &[f64],
    ps: &[f64],
    nu: &[f64],
    lt: &[f64],
    ls: &[f64],
    f_theta: &mut [f64],
    gt: &mut [f64],
    gs: &mut [f64],
) {
    let u = |e: usize| net.reverse(e).map_or(1.0, |r| 1.0 / theta[r]);
    for e in 0..net.edge_count() {
        f_theta[e] = net.alpha(e) * (ps[net.src(e)] * u(e) - theta[e]);
    }
    for i in 0..net.node_count() {
        let r: f64 = net.in_edges(i).iter().map(|&k| f_theta[k] / theta[k]).sum();
        let mut g = ls[i] * (r - nu[i]);
        for &e in net.out_edges(i) {
            let j = net.dst(e);
            g += net.alpha(e) * u(e) * (lt[e] + ls[j] * ps[j] / theta[e]);
        }
        gs[i] = g;
    }
    for e in 0..net.edge_count() {
        let (i, j) = (net.src(e), net.dst(e));
        let th = theta[e];
        let mut g = -net.alpha(e) * lt[e] - ls[j] * ps[j] * net.alpha(e) * ps[i] * u(e) / (th * th);
        if let Some(r) = net.reverse(e) {
            g += -net.alpha(r) * ps[j] / (th * th) * (lt[r] + ls[i] * ps[i] / theta[r]);
        }
        gt[e] = g;
    }
}

/// Integrates the adjoint system backward from the end conditions fixed by
/// `target`, reusing the stored forward grid.
pub fn backward_continuous(
    net: &SpreadingNetwork,
    traj: &ContinuousTrajectory,
    control: &ContinuousControl,
    target: &TargetSpec,
    scheme: Scheme,
) -> Result<ContinuousAdjoint> {
    if cfg!(feature = "printed-survival") {
        return Err(Error::Invalid(
            "the adjoint sweep is only available for the exponential survival factor".into(),
        ));
    }
    let n = net.node_count();
    let m = net.edge_count();
    let steps = traj.steps();
    let dt = traj.dt();
    if control.node_count() != n || control.steps() < steps || traj.ps_at(0).len() != n {
        return Err(Error::Invalid("control, trajectory and network sizes differ".into()));
    }
    for k in 0..=steps {
        if let Some(e) = traj.theta_at(k).iter().position(|&v| v <= 0.0) {
            return Err(Error::Invalid(format!(
                "theta of edge {} -> {} vanishes at grid point {k}",
                net.label(net.src(e)),
                net.label(net.dst(e))
            )));
        }
    }
    let s = match target.sense() {
        Sense::MaximizeInfected => 1.0,
        Sense::MinimizeInfected => -1.0,
    };
    let mut jumps = vec![0.0; (steps + 1) * n];
    for &(i, t) in target.targets() {
        let k = grid_index(t as f64, dt)?;
        if k > steps || i >= n {
            return Err(Error::Invalid(format!("target ({i}, {t}) outside the trajectory")));
        }
        jumps[k * n + i] -= s;
    }

    let ctx = Survival::new(control, traj.ps0());
    let mut lambda_s = vec![0.0; (steps + 1) * n];
    let mut lambda_theta = vec![0.0; (steps + 1) * m];
    let mut gradient = vec![0.0; steps * n];

    // Right limits are what the quadrature and the next cell need.
    let mut lt = vec![0.0; m];
    let mut ls: Vec<f64> = jumps[steps * n..].to_vec();
    let record = |k: usize, lt: &[f64], ls: &[f64], lambda_s: &mut [f64], lambda_theta: &mut [f64]| {
        lambda_s[k * n..(k + 1) * n].copy_from_slice(ls);
        let th = traj.theta_at(k);
        let ps = traj.ps_at(k);
        for e in 0..m {
            let j = net.dst(e);
            lambda_theta[k * m + e] = lt[e] + ls[j] * ps[j] / th[e];
        }
    };
    record(steps, &lt, &ls, &mut lambda_s, &mut lambda_theta);

    let mut f_theta = vec![0.0; m];
    let (mut a1t, mut a2t, mut a3t, mut a4t) = (vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; m]);
    let (mut a1s, mut a2s, mut a3s, mut a4s) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let (mut tt, mut ts) = (vec![0.0; m], vec![0.0; n]);
    let (mut mid_t, mut mid_s) = (vec![0.0; m], vec![0.0; n]);
    let (mut f0t, mut f0s, mut f1t, mut f1s) = (vec![0.0; m], vec![0.0; n], vec![0.0; m], vec![0.0; n]);
    for k in (0..steps).rev() {
        let nu = control.nu_at(k);
        let (th0, ps0) = (traj.theta_at(k), traj.ps_at(k));
        let (th1, ps1) = (traj.theta_at(k + 1), traj.ps_at(k + 1));
        // Gradient contribution from the right end of the cell uses the left limit at k + 1.
        for i in 0..n {
            gradient[k * n + i] = -0.5 * dt * ls[i] * ps1[i];
        }
        match scheme {
            Scheme::Euler => {
                jt_lambda(net, th0, ps0, nu, &lt, &ls, &mut f_theta, &mut a1t, &mut a1s);
                for e in 0..m {
                    lt[e] += dt * a1t[e];
                }
                for i in 0..n {
                    ls[i] += dt * a1s[i];
                }
            }
            Scheme::Rk4 => {
                let t0 = k as f64 * dt;
                rhs(net, &ctx, t0, th0, ps0, nu, &mut f0t, &mut f0s);
                rhs(net, &ctx, t0 + dt, th1, ps1, nu, &mut f1t, &mut f1s);
                for e in 0..m {
                    mid_t[e] = 0.5 * (th0[e] + th1[e]) + dt / 8.0 * (f0t[e] - f1t[e]);
                }
                for i in 0..n {
                    mid_s[i] = 0.5 * (ps0[i] + ps1[i]) + dt / 8.0 * (f0s[i] - f1s[i]);
                }
                jt_lambda(net, th1, ps1, nu, &lt, &ls, &mut f_theta, &mut a1t, &mut a1s);
                step(&mut tt, &lt, dt / 2.0, &a1t);
                step(&mut ts, &ls, dt / 2.0, &a1s);
                jt_lambda(net, &mid_t, &mid_s, nu, &tt, &ts, &mut f_theta, &mut a2t, &mut a2s);
                step(&mut tt, &lt, dt / 2.0, &a2t);
                step(&mut ts, &ls, dt / 2.0, &a2s);
                jt_lambda(net, &mid_t, &mid_s, nu, &tt, &ts, &mut f_theta, &mut a3t, &mut a3s);
                step(&mut tt, &lt, dt, &a3t);
                step(&mut ts, &ls, dt, &a3s);
                jt_lambda(net, th0, ps0, nu, &tt, &ts, &mut f_theta, &mut a4t, &mut a4s);
                for e in 0..m {
                    lt[e] += dt / 6.0 * (a1t[e] + 2.0 * a2t[e] + 2.0 * a3t[e] + a4t[e]);
                }
                for i in 0..n {
                    ls[i] += dt / 6.0 * (a1s[i] + 2.0 * a2s[i] + 2.0 * a3s[i] + a4s[i]);
                }
            }
        }
        for i in 0..n {
            gradient[k * n + i] -= 0.5 * dt * ls[i] * ps0[i];
        }
        if let Some(i) = ls.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                iteration: k,
                what: format!("lambda^S of node {i}"),
            });
        }
        for i in 0..n {
            ls[i] += jumps[k * n + i];
        }
        record(k, &lt, &ls, &mut lambda_s, &mut lambda_theta);
    }
    Ok(ContinuousAdjoint {
        n,
        m,
        steps,
        lambda_s,
        lambda_theta,
        gradient,
    })
}

fn step(out: &mut [f64], base: &[f64], h: f64, d: &[f64]) {
    for ((o, b), x) in out.iter_mut().zip(base).zip(d) {
        *o = b + h * x;
    }
}
