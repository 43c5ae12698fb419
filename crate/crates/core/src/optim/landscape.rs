use std::io::Write;

use rayon::prelude::*;

use super::ProblemSpec;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LandscapePoint {
    /// Values of the free coordinates, in the order they were requested.
    pub coords: Vec<f64>,
    /// Objective, or `None` when some coordinate leaves its bounds.
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Landscape {
    pub free: Vec<(usize, usize)>,
    pub points: Vec<LandscapePoint>,
}

impl Landscape {
    /// Best valid point under the problem's sense.
    pub fn best(&self, maximize: bool) -> Option<&LandscapePoint> {
        self.points
            .iter()
            .filter(|p| p.value.is_some())
            .fold(None, |acc: Option<&LandscapePoint>, p| match acc {
                None => Some(p),
                Some(a) => {
                    let (va, vp) = (a.value.unwrap(), p.value.unwrap());
                    if (maximize && vp > va) || (!maximize && vp < va) {
                        Some(p)
                    } else {
                        Some(a)
                    }
                }
            })
    }

    /// CSV with one column per free coordinate (`c0`, `c1`, ...) and `value`
    /// (empty for invalid points).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (0..self.free.len()).map(|k| format!("c{k}")).collect();
        header.push("value".into());
        w.write_record(&header)?;
        for p in &self.points {
            let mut row: Vec<String> = p.coords.iter().map(|c| c.to_string()).collect();
            row.push(p.value.map(|v| v.to_string()).unwrap_or_default());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Evaluates the objective on a regular grid over the free `(node, time)`
/// coordinates. At each affected step the remaining controllable nodes share
/// what is left of the budget equally. Coordinates run over
/// `0, resolution, 2 resolution, ..., 1`.
pub fn objective_landscape(
    problem: &ProblemSpec<'_>,
    free: &[(usize, usize)],
    resolution: f64,
) -> Result<Landscape> {
    problem.validate()?;
    if free.is_empty() || !(resolution > 0.0 && resolution <= 1.0) {
        return Err(Error::Invalid("need free coordinates and a resolution in (0, 1]".into()));
    }
    let steps = problem.controlled_steps();
    for &(i, t) in free {
        if !problem.base.is_controllable(i) || !steps.contains(&t) {
            return Err(Error::Invalid(format!(
                "coordinate (node {i}, t = {t}) is not a controlled entry"
            )));
        }
    }
    let cells = (1.0 / resolution).round() as usize;
    let axis: Vec<f64> = (0..=cells).map(|k| (k as f64 * resolution).min(1.0)).collect();
    let total = axis.len().pow(free.len() as u32);
    let w = problem.base.controllable_nodes();

    let points = (0..total)
        .into_par_iter()
        .map(|mut idx| {
            let coords: Vec<f64> = (0..free.len())
                .map(|_| {
                    let v = axis[idx % axis.len()];
                    idx /= axis.len();
                    v
                })
                .collect();
            let value = point_value(problem, free, &coords, &w)?;
            Ok(LandscapePoint { coords, value })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Landscape {
        free: free.to_vec(),
        points,
    })
}

fn point_value(
    problem: &ProblemSpec<'_>,
    free: &[(usize, usize)],
    coords: &[f64],
    w: &[usize],
) -> Result<Option<f64>> {
    let mut c = problem.uniform_controls();
    let uses_mu = problem.mode == super::Mode::Vaccination;
    let bounds = |i, t| {
        if uses_mu {
            problem.base.mu_bounds(i, t)
        } else {
            problem.base.nu_bounds(i, t)
        }
    };
    let mut set = |i, t, v| {
        if uses_mu {
            c.set_mu(i, t, v)
        } else {
            c.set_nu(i, t, v)
        }
    };
    for t in problem.controlled_steps() {
        let fixed: Vec<(usize, f64)> = free
            .iter()
            .zip(coords)
            .filter(|((_, ft), _)| *ft == t)
            .map(|(&(i, _), &v)| (i, v))
            .collect();
        let rest: Vec<usize> = w.iter().copied().filter(|i| !fixed.iter().any(|f| f.0 == *i)).collect();
        let used: f64 = fixed.iter().map(|f| f.1).sum();
        let remainder = problem.budget[t] - used;
        let share = if rest.is_empty() {
            if remainder.abs() > 1e-9 {
                return Ok(None);
            }
            0.0
        } else {
            remainder / rest.len() as f64
        };
        for &(i, v) in &fixed {
            let (lo, hi) = bounds(i, t);
            if v < lo || v > hi {
                return Ok(None);
            }
            set(i, t, v);
        }
        for &i in &rest {
            let (lo, hi) = bounds(i, t);
            if share < lo - 1e-12 || share > hi + 1e-12 {
                return Ok(None);
            }
            set(i, t, share.clamp(lo, hi));
        }
    }
    Ok(Some(problem.evaluate(&c)?))
}
