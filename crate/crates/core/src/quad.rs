//! Adaptive quadrature: interval bisection on top of the double-exponential
//! rule from the `quadrature` crate.

use crate::error::{Error, Result};

const MAX_DEPTH: usize = 40;

/// `∫_a^b f` to absolute tolerance `tol`. `breaks` lists interior points
/// where `f` may be non-smooth; the interval is split there first.
pub fn integrate<F>(f: F, a: f64, b: f64, tol: f64, breaks: &[f64]) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let mut points = vec![a];
    let mut interior: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    interior.sort_by(f64::total_cmp);
    points.extend(interior);
    points.push(b);
    let pieces = (points.len() - 1) as f64;
    points
        .windows(2)
        .map(|w| adaptive(&f, w[0], w[1], tol / pieces, 0))
        .sum()
}

fn adaptive<F>(f: &F, a: f64, b: f64, tol: f64, depth: usize) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if b <= a {
        return Ok(0.0);
    }
    let out = quadrature::double_exponential::integrate(f, a, b, tol);
    if out.error_estimate <= tol {
        return Ok(out.integral);
    }
    if depth >= MAX_DEPTH {
        return Err(Error::NotConverged {
            what: "quadrature",
            iterations: depth,
            residual: out.error_estimate,
        });
    }
    let mid = 0.5 * (a + b);
    Ok(adaptive(f, a, mid, 0.5 * tol, depth + 1)? + adaptive(f, mid, b, 0.5 * tol, depth + 1)?)
}
