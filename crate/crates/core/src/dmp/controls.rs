use crate::error::{Error, Result};

/// Per-node, per-step spontaneous activation `nu` and vaccination `mu`
/// probabilities with box bounds and a controllable set.
///
/// All arrays are time-major: entry `(i, t)` lives at `t * n + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSchedule {
    n: usize,
    horizon: usize,
    nu: Vec<f64>,
    mu: Vec<f64>,
    controllable: Vec<bool>,
    nu_lo: Vec<f64>,
    nu_hi: Vec<f64>,
    mu_lo: Vec<f64>,
    mu_hi: Vec<f64>,
}

impl ControlSchedule {
    /// All-zero schedule, every node controllable, bounds `[0, 1]`.
    pub fn zeros(n: usize, horizon: usize) -> Self {
        let len = n * horizon;
        Self {
            n,
            horizon,
            nu: vec![0.0; len],
            mu: vec![0.0; len],
            controllable: vec![true; n],
            nu_lo: vec![0.0; len],
            nu_hi: vec![1.0; len],
            mu_lo: vec![0.0; len],
            mu_hi: vec![1.0; len],
        }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    #[inline]
    fn at(&self, i: usize, t: usize) -> usize {
        debug_assert!(i < self.n && t < self.horizon);
        t * self.n + i
    }

    #[inline]
    pub fn nu(&self, i: usize, t: usize) -> f64 {
        self.nu[self.at(i, t)]
    }

    #[inline]
    pub fn mu(&self, i: usize, t: usize) -> f64 {
        self.mu[self.at(i, t)]
    }

    pub fn set_nu(&mut self, i: usize, t: usize, v: f64) {
        let k = self.at(i, t);
        self.nu[k] = v;
    }

    pub fn set_mu(&mut self, i: usize, t: usize, v: f64) {
        let k = self.at(i, t);
        self.mu[k] = v;
    }

    pub fn nu_at(&self, t: usize) -> &[f64] {
        &self.nu[t * self.n..(t + 1) * self.n]
    }

    pub fn mu_at(&self, t: usize) -> &[f64] {
        &self.mu[t * self.n..(t + 1) * self.n]
    }

    pub fn nu_at_mut(&mut self, t: usize) -> &mut [f64] {
        &mut self.nu[t * self.n..(t + 1) * self.n]
    }

    pub fn mu_at_mut(&mut self, t: usize) -> &mut [f64] {
        &mut self.mu[t * self.n..(t + 1) * self.n]
    }

    pub fn is_controllable(&self, i: usize) -> bool {
        self.controllable[i]
    }

    pub fn controllable_nodes(&self) -> Vec<usize> {
        (0..self.n).filter(|&i| self.controllable[i]).collect()
    }

    /// Restricts control to `mask`; values of other nodes are zeroed.
    pub fn set_controllable(&mut self, mask: Vec<bool>) -> Result<()> {
        if mask.len() != self.n {
            return Err(Error::Invalid(format!(
                "controllable mask has {} entries, expected {}",
                mask.len(),
                self.n
            )));
        }
        self.controllable = mask;
        for t in 0..self.horizon {
            for i in 0..self.n {
                if !self.controllable[i] {
                    self.set_nu(i, t, 0.0);
                    self.set_mu(i, t, 0.0);
                }
            }
        }
        Ok(())
    }

    pub fn nu_bounds(&self, i: usize, t: usize) -> (f64, f64) {
        let k = self.at(i, t);
        (self.nu_lo[k], self.nu_hi[k])
    }

    pub fn mu_bounds(&self, i: usize, t: usize) -> (f64, f64) {
        let k = self.at(i, t);
        (self.mu_lo[k], self.mu_hi[k])
    }

    pub fn set_nu_bounds(&mut self, i: usize, t: usize, lo: f64, hi: f64) -> Result<()> {
        check_bounds(lo, hi)?;
        let k = self.at(i, t);
        self.nu_lo[k] = lo;
        self.nu_hi[k] = hi;
        Ok(())
    }

    pub fn set_mu_bounds(&mut self, i: usize, t: usize, lo: f64, hi: f64) -> Result<()> {
        check_bounds(lo, hi)?;
        let k = self.at(i, t);
        self.mu_lo[k] = lo;
        self.mu_hi[k] = hi;
        Ok(())
    }

    /// Same bounds for every node and step.
    pub fn set_all_bounds(&mut self, nu: (f64, f64), mu: (f64, f64)) -> Result<()> {
        check_bounds(nu.0, nu.1)?;
        check_bounds(mu.0, mu.1)?;
        self.nu_lo.fill(nu.0);
        self.nu_hi.fill(nu.1);
        self.mu_lo.fill(mu.0);
        self.mu_hi.fill(mu.1);
        Ok(())
    }

    /// Schedule extended or truncated to `horizon` steps; new steps are zero
    /// with the bounds of the last existing step (or `[0, 1]`).
    pub fn resized(&self, horizon: usize) -> Self {
        let mut out = Self::zeros(self.n, horizon);
        out.controllable = self.controllable.clone();
        for t in 0..horizon {
            let src = t.min(self.horizon.saturating_sub(1));
            for i in 0..self.n {
                let k = t * self.n + i;
                if self.horizon > 0 {
                    let s = self.at(i, src);
                    out.nu_lo[k] = self.nu_lo[s];
                    out.nu_hi[k] = self.nu_hi[s];
                    out.mu_lo[k] = self.mu_lo[s];
                    out.mu_hi[k] = self.mu_hi[s];
                }
                if t < self.horizon {
                    let s = self.at(i, t);
                    out.nu[k] = self.nu[s];
                    out.mu[k] = self.mu[s];
                }
            }
        }
        out
    }

    /// Checks the schedule invariants: probabilities in `[0, 1]` and zero
    /// controls off the controllable set.
    pub fn validate(&self) -> Result<()> {
        for t in 0..self.horizon {
            for i in 0..self.n {
                let (nu, mu) = (self.nu(i, t), self.mu(i, t));
                if !(0.0..=1.0).contains(&nu) || !(0.0..=1.0).contains(&mu) {
                    return Err(Error::Invalid(format!(
                        "control of node {i} at t = {t} outside [0, 1] (nu = {nu}, mu = {mu})"
                    )));
                }
                if !self.controllable[i] && (nu != 0.0 || mu != 0.0) {
                    return Err(Error::Invalid(format!(
                        "node {i} is not controllable but has nonzero control at t = {t}"
                    )));
                }
            }
        }
        Ok(())
    }
}

fn check_bounds(lo: f64, hi: f64) -> Result<()> {
    if !(0.0 <= lo && lo < hi && hi <= 1.0) {
        return Err(Error::Invalid(format!(
            "bounds [{lo}, {hi}] must satisfy 0 <= lower < upper <= 1"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_and_masks() {
        let mut c = ControlSchedule::zeros(3, 2);
        c.set_nu(1, 1, 0.4);
        assert_eq!(c.nu_at(1), &[0.0, 0.4, 0.0]);
        c.set_controllable(vec![true, false, true]).unwrap();
        assert_eq!(c.nu(1, 1), 0.0);
        assert_eq!(c.controllable_nodes(), vec![0, 2]);
        c.set_mu(1, 0, 0.1);
        assert!(c.validate().is_err());
        assert!(c.set_nu_bounds(0, 0, 0.5, 0.5).is_err());
    }

    #[test]
    fn resize_keeps_values() {
        let mut c = ControlSchedule::zeros(2, 1);
        c.set_mu(0, 0, 0.3);
        c.set_mu_bounds(1, 0, 0.1, 0.2).unwrap();
        let r = c.resized(3);
        assert_eq!(r.mu(0, 0), 0.3);
        assert_eq!(r.mu(0, 2), 0.0);
        assert_eq!(r.mu_bounds(1, 2), (0.1, 0.2));
    }
}
