use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Euler,
    #[default]
    Rk4,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Euler => "euler",
            Scheme::Rk4 => "rk4",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euler" => Ok(Scheme::Euler),
            "rk4" => Ok(Scheme::Rk4),
            _ => Err(Error::Invalid(format!("unknown integration scheme {s:?}"))),
        }
    }
}

/// Activation rates `nu_i` constant on each cell `[k dt, (k+1) dt)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousControl {
    n: usize,
    dt: f64,
    nu: Vec<f64>,
    controllable: Vec<bool>,
    budget: Vec<f64>,
}

impl ContinuousControl {
    /// Zero rates over `steps` cells, every node controllable, zero budget.
    pub fn zeros(n: usize, steps: usize, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Invalid(format!("time step must be positive, got {dt}")));
        }
        Ok(Self {
            n,
            dt,
            nu: vec![0.0; n * steps],
            controllable: vec![true; n],
            budget: vec![0.0; steps],
        })
    }

    /// Budget split evenly over the controllable set on every cell.
    pub fn uniform(n: usize, dt: f64, controllable: Vec<bool>, budget: Vec<f64>) -> Result<Self> {
        let mut c = Self::zeros(n, budget.len(), dt)?;
        c.set_controllable(controllable)?;
        c.budget = budget;
        let w = c.controllable_nodes();
        if w.is_empty() {
            return Err(Error::Invalid("no controllable nodes".into()));
        }
        for k in 0..c.steps() {
            let v = c.budget[k] / w.len() as f64;
            for &i in &w {
                c.nu[k * n + i] = v;
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn steps(&self) -> usize {
        self.budget.len()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn nu(&self, i: usize, k: usize) -> f64 {
        self.nu[k * self.n + i]
    }

    pub fn nu_at(&self, k: usize) -> &[f64] {
        &self.nu[k * self.n..(k + 1) * self.n]
    }

    pub fn set_nu(&mut self, i: usize, k: usize, v: f64) {
        self.nu[k * self.n + i] = v;
    }

    pub fn budget(&self) -> &[f64] {
        &self.budget
    }

    pub fn set_budget(&mut self, budget: Vec<f64>) -> Result<()> {
        if budget.len() != self.steps() {
            return Err(Error::Invalid(format!(
                "budget has {} cells, control has {}",
                budget.len(),
                self.steps()
            )));
        }
        self.budget = budget;
        Ok(())
    }

    pub fn is_controllable(&self, i: usize) -> bool {
        self.controllable[i]
    }

    pub fn controllable_nodes(&self) -> Vec<usize> {
        (0..self.n).filter(|&i| self.controllable[i]).collect()
    }

    /// Sets the controllable set and zeroes rates outside it.
    pub fn set_controllable(&mut self, mask: Vec<bool>) -> Result<()> {
        if mask.len() != self.n {
            return Err(Error::Invalid(format!("mask has {} entries for {} nodes", mask.len(), self.n)));
        }
        for k in 0..self.steps() {
            for (i, &m) in mask.iter().enumerate() {
                if !m {
                    self.nu[k * self.n + i] = 0.0;
                }
            }
        }
        self.controllable = mask;
        Ok(())
    }

    /// `sum_W nu(k) - B(k)` per cell.
    pub fn residuals(&self) -> Vec<f64> {
        (0..self.steps())
            .map(|k| self.nu_at(k).iter().sum::<f64>() - self.budget[k])
            .collect()
    }

    /// Rates finite and nonnegative, zero off the controllable set.
    pub fn validate(&self) -> Result<()> {
        for k in 0..self.steps() {
            for i in 0..self.n {
                let v = self.nu(i, k);
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(Error::Invalid(format!("rate of node {i} on cell {k} is {v}")));
                }
                if !self.controllable[i] && v != 0.0 {
                    return Err(Error::Invalid(format!("node {i} is not controllable but has rate {v}")));
                }
            }
            if !(self.budget[k] >= 0.0 && self.budget[k].is_finite()) {
                return Err(Error::Invalid(format!("budget on cell {k} is {}", self.budget[k])));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_meets_budget() {
        let c = ContinuousControl::uniform(4, 0.1, vec![true, false, true, true], vec![0.3, 0.6]).unwrap();
        assert_eq!(c.nu(1, 0), 0.0);
        assert!((c.nu(0, 1) - 0.2).abs() < 1e-15);
        assert!(c.residuals().iter().all(|r| r.abs() < 1e-15));
        assert!(ContinuousControl::zeros(2, 3, 0.0).is_err());
        assert!(ContinuousControl::uniform(2, 0.1, vec![false, false], vec![1.0]).is_err());
    }

    #[test]
    fn scheme_names() {
        assert_eq!("rk4".parse::<Scheme>().unwrap(), Scheme::Rk4);
        assert_eq!(Scheme::Euler.to_string(), "euler");
        assert!("rk2".parse::<Scheme>().is_err());
    }
}
