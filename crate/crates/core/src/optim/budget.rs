//! Per-step budget allocation under a logarithmic barrier.
//!
//! For aggregate sensitivities `psi_i` the stationarity condition of each
//! controllable coordinate is
//!
//! `lambda + psi_i + eps / (x - lo) - eps / (hi - x) = 0`,
//!
//! whose unique root inside `(lo, hi)` is increasing in `lambda`. The budget
//! multiplier `lambda` is the root of `sum_i x_i(lambda) = B`.

use crate::error::{Error, Result};

/// Budget residual accepted by the root solve.
pub const BUDGET_TOL: f64 = 1e-10;
const MAX_EXPANSIONS: usize = 200;
const MAX_BISECTIONS: usize = 200;

/// Interior root of the two-sided barrier stationarity condition for one
/// coordinate with `a = lambda + psi`.
pub fn barrier_root(a: f64, lo: f64, hi: f64, eps: f64) -> f64 {
    let w = hi - lo;
    let b = a * w - 2.0 * eps;
    let sq = (a * a * w * w + 4.0 * eps * eps).sqrt();
    // Two algebraically equal forms; each is free of cancellation on its side.
    let x = if b >= 0.0 {
        (b + sq) / (2.0 * a)
    } else {
        2.0 * eps * w / (sq - b)
    };
    let v = lo + x;
    if v <= lo || v >= hi {
        // Saturated in floating point; keep the iterate strictly interior.
        if v <= lo {
            lo + w * f64::EPSILON
        } else {
            hi - w * f64::EPSILON
        }
    } else {
        v
    }
}

/// Solves for the budget multiplier and returns `(lambda_B, controls)`.
///
/// When the budget equals the sum of lower (upper) bounds every control is
/// set exactly to that bound and `lambda_B` is reported as `-inf` (`+inf`).
pub fn solve_budget_multiplier(
    psi: &[f64],
    budget: f64,
    bounds: &[(f64, f64)],
    eps: f64,
) -> Result<(f64, Vec<f64>)> {
    assert_eq!(psi.len(), bounds.len());
    if !(eps > 0.0) {
        return Err(Error::Invalid(format!("barrier weight must be positive, got {eps}")));
    }
    if let Some(p) = psi.iter().find(|p| !p.is_finite()) {
        return Err(Error::NonFinite {
            iteration: 0,
            what: format!("sensitivity {p} in budget solve"),
        });
    }
    let lower: f64 = bounds.iter().map(|b| b.0).sum();
    let upper: f64 = bounds.iter().map(|b| b.1).sum();
    let slack = BUDGET_TOL * (1.0 + upper.abs());
    if budget < lower - slack || budget > upper + slack || !budget.is_finite() {
        return Err(Error::InfeasibleBudget {
            budget,
            lower,
            upper,
        });
    }
    if budget <= lower + slack {
        return Ok((f64::NEG_INFINITY, bounds.iter().map(|b| b.0).collect()));
    }
    if budget >= upper - slack {
        return Ok((f64::INFINITY, bounds.iter().map(|b| b.1).collect()));
    }

    let eval = |lambda: f64| -> (f64, Vec<f64>) {
        let xs: Vec<f64> = psi
            .iter()
            .zip(bounds)
            .map(|(&p, &(lo, hi))| barrier_root(lambda + p, lo, hi, eps))
            .collect();
        (xs.iter().sum::<f64>() - budget, xs)
    };

    let pmax = psi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pmin = psi.iter().copied().fold(f64::INFINITY, f64::min);
    let (mut lo, mut hi) = (-pmax - 1.0, -pmin + 1.0);
    let mut step = 1.0;
    let mut expansions = 0;
    while eval(lo).0 > 0.0 {
        step *= 2.0;
        lo -= step;
        expansions += 1;
        if expansions > MAX_EXPANSIONS {
            return Err(Error::InfeasibleBudget { budget, lower, upper });
        }
    }
    step = 1.0;
    while eval(hi).0 < 0.0 {
        step *= 2.0;
        hi += step;
        expansions += 1;
        if expansions > MAX_EXPANSIONS {
            return Err(Error::InfeasibleBudget { budget, lower, upper });
        }
    }

    let mut best = eval(0.5 * (lo + hi));
    let mut best_lambda = 0.5 * (lo + hi);
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        let (r, xs) = eval(mid);
        if r.abs() < best.0.abs() {
            best = (r, xs);
            best_lambda = mid;
        }
        if r.abs() <= BUDGET_TOL || mid == lo || mid == hi {
            break;
        }
        if r < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    let (r, mut xs) = best;
    if r.abs() > BUDGET_TOL {
        polish(&mut xs, bounds, budget);
    }
    Ok((best_lambda, xs))
}

/// Removes a residual left by floating-point granularity, spreading it in
/// proportion to each coordinate's local sensitivity `(x - lo)(hi - x)`.
fn polish(xs: &mut [f64], bounds: &[(f64, f64)], budget: f64) {
    for _ in 0..4 {
        let r = xs.iter().sum::<f64>() - budget;
        if r.abs() <= BUDGET_TOL {
            return;
        }
        let weights: Vec<f64> = xs
            .iter()
            .zip(bounds)
            .map(|(&x, &(lo, hi))| (x - lo) * (hi - x))
            .collect();
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return;
        }
        for ((x, w), &(lo, hi)) in xs.iter_mut().zip(&weights).zip(bounds) {
            let moved = *x - r * w / total;
            *x = moved.clamp(lo, hi);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent scalar bisection on the stationarity condition.
    fn oracle_root(a: f64, lo: f64, hi: f64, eps: f64) -> f64 {
        let g = |x: f64| a + eps / (x - lo) - eps / (hi - x);
        let (mut l, mut h) = (lo, hi);
        for _ in 0..200 {
            let m = 0.5 * (l + h);
            if m <= l || m >= h {
                break;
            }
            if g(m) > 0.0 {
                l = m;
            } else {
                h = m;
            }
        }
        0.5 * (l + h)
    }

    #[test]
    fn root_matches_bisection() {
        for &a in &[-50.0, -1.0, -1e-3, 0.0, 1e-3, 0.7, 30.0] {
            for &(lo, hi) in &[(0.0, 1.0), (0.2, 0.3), (0.05, 0.9)] {
                for &eps in &[1e-2, 1e-4] {
                    let x = barrier_root(a, lo, hi, eps);
                    assert!(x > lo && x < hi);
                    assert!((x - oracle_root(a, lo, hi, eps)).abs() < 1e-12, "a={a} lo={lo}");
                }
            }
        }
        assert_eq!(barrier_root(0.0, 0.2, 0.6, 1e-3), 0.4);
    }

    #[test]
    fn unit_bound_closed_form() {
        let (a, eps): (f64, f64) = (0.37, 1e-3);
        let closed = (a - 2.0 * eps + (a * a + 4.0 * eps * eps).sqrt()) / (2.0 * a);
        assert!((barrier_root(a, 0.0, 1.0, eps) - closed).abs() < 1e-15);
    }

    #[test]
    fn single_node_follows_budget() {
        let (_, x) = solve_budget_multiplier(&[0.4], 0.3, &[(0.0, 1.0)], 1e-6).unwrap();
        assert!((x[0] - 0.3).abs() < 1e-5);
    }

    #[test]
    fn two_nodes_against_oracle() {
        let psi = [-1.0, -2.0];
        let b = [(0.0, 1.0); 2];
        let (lambda, x) = solve_budget_multiplier(&psi, 0.5, &b, 1e-3).unwrap();
        assert!((x[0] + x[1] - 0.5).abs() <= 1e-10);
        for i in 0..2 {
            assert!((x[i] - oracle_root(lambda + psi[i], 0.0, 1.0, 1e-3)).abs() < 1e-9);
        }
        assert!(x[0] > x[1]);
    }

    #[test]
    fn feasibility_edges() {
        let b = [(0.1, 1.0), (0.2, 0.5)];
        let (_, x) = solve_budget_multiplier(&[1.0, 2.0], 0.3, &b, 1e-3).unwrap();
        assert_eq!(x, vec![0.1, 0.2]);
        let (_, x) = solve_budget_multiplier(&[1.0, 2.0], 1.5, &b, 1e-3).unwrap();
        assert_eq!(x, vec![1.0, 0.5]);
        let (_, x) = solve_budget_multiplier(&[1.0, 2.0], 0.3 + 1e-6, &b, 1e-3).unwrap();
        assert!(x[0] > 0.1 && x[1] > 0.2);
        assert!(matches!(
            solve_budget_multiplier(&[1.0, 2.0], 1.6, &b, 1e-3),
            Err(Error::InfeasibleBudget { .. })
        ));
    }

    #[test]
    fn many_nodes_reach_tolerance() {
        let psi: Vec<f64> = (0..500).map(|i| ((i * 37) % 101) as f64 * 0.013 - 0.4).collect();
        let b = vec![(0.0, 1.0); 500];
        for &eps in &[1e-2, 1e-4] {
            for &budget in &[0.5, 25.0, 250.0, 499.0] {
                let (_, x) = solve_budget_multiplier(&psi, budget, &b, eps).unwrap();
                assert!((x.iter().sum::<f64>() - budget).abs() <= 1e-10);
                assert!(x.iter().all(|&v| v > 0.0 && v < 1.0));
            }
        }
    }
}
