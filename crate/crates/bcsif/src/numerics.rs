//! Shared numerical plumbing: periodic quadrature on the torus and a
//! Brent root finder with evaluation caching and iteration accounting.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use roots::{find_root_brent, Convergency};

use crate::error::{Error, Result};

/// Per-axis cap on the automatic node floor for `d ≥ 2`.
pub const MAX_AUTO_NODES_2D: usize = 4096;

/// Per-axis node count: `max(requested, 64, ⌈48/Θ⌉)`, the last term capped
/// for `d ≥ 2` so that tensor grids stay tractable.
///
/// The kernels have poles at `E² = −Θ²`, i.e. about `Θ/2` off the real
/// `k`-axis, so the trapezoid error decays like `e^{−nΘ/2}`.
pub fn auto_nodes(d: usize, big_theta: f64, requested: usize) -> usize {
    let floor = if big_theta > 0.0 { (48.0 / big_theta).ceil().min(1e9) as usize } else { 64 };
    let floor = if d >= 2 { floor.min(MAX_AUTO_NODES_2D) } else { floor };
    requested.max(64).max(floor)
}

/// Mean of a `2π`-periodic function over `[0,2π)^d` by the `n^d` trapezoid rule,
/// i.e. `(2π)^{−d}∫dk f(k)`.
///
/// Partial sums are formed over fixed chunks and added in order, so the result
/// is bitwise independent of the thread schedule.
pub fn torus_mean<F>(d: usize, n: usize, f: F) -> f64
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    const CHUNK: usize = 4096;
    let total = n.pow(d as u32);
    let h = 2.0 * PI / n as f64;
    let chunks = total.div_ceil(CHUNK);
    let partial: Vec<f64> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut k = vec![0.0; d];
            let mut acc = 0.0;
            for idx in c * CHUNK..((c + 1) * CHUNK).min(total) {
                let mut rest = idx;
                for kj in k.iter_mut() {
                    *kj = h * (rest % n) as f64;
                    rest /= n;
                }
                acc += f(&k);
            }
            acc
        })
        .collect();
    partial.iter().sum::<f64>() / total as f64
}

/// Outcome of a bracketed root search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub fx: f64,
    pub iterations: usize,
}

struct Stop {
    ftol: f64,
    max_iter: usize,
    iterations: usize,
}

impl Convergency<f64> for Stop {
    fn is_root_found(&mut self, y: f64) -> bool {
        y.abs() <= self.ftol
    }
    fn is_converged(&mut self, x1: f64, x2: f64) -> bool {
        (x1 - x2).abs() <= 4.0 * f64::EPSILON * x1.abs().max(x2.abs()).max(f64::MIN_POSITIVE)
    }
    fn is_iteration_limit_reached(&mut self, iter: usize) -> bool {
        self.iterations = iter;
        iter >= self.max_iter
    }
}

/// Brent's method on `[a, b]` until `|f(x)| ≤ ftol` or the bracket shrinks to
/// machine precision, capped at `max_iter` iterations.
pub fn brent<F>(f: F, a: f64, b: f64, ftol: f64, max_iter: usize) -> Result<Root>
where
    F: Fn(f64) -> f64,
{
    // The underlying implementation re-evaluates bracket endpoints; memoize so
    // each abscissa costs one evaluation.
    let cache: RefCell<HashMap<u64, f64>> = RefCell::new(HashMap::new());
    let eval = |x: f64| -> f64 {
        if let Some(&v) = cache.borrow().get(&x.to_bits()) {
            return v;
        }
        let v = f(x);
        cache.borrow_mut().insert(x.to_bits(), v);
        v
    };
    let mut stop = Stop { ftol, max_iter, iterations: 0 };
    find_root_brent(a, b, eval, &mut stop)
        .map_err(|e| Error::Numerical(format!("Brent search on [{a}, {b}] failed: {e:?}")))?;
    // Report the best abscissa seen; on bracket collapse the library returns a
    // stale endpoint.
    let (x, fx) = cache
        .borrow()
        .iter()
        .map(|(&bits, &v)| (f64::from_bits(bits), v))
        .min_by(|p, q| p.1.abs().total_cmp(&q.1.abs()).then(p.0.total_cmp(&q.0)))
        .expect("at least the endpoints were evaluated");
    Ok(Root { x, fx, iterations: stop.iterations })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_mean_of_cosine_squared() {
        let m = torus_mean(2, 32, |k| k[0].cos().powi(2) + k[1].sin());
        assert!((m - 0.5).abs() < 1e-14);
    }

    #[test]
    fn brent_finds_cube_root() {
        let r = brent(|x| x * x * x - 2.0, 0.0, 2.0, 1e-14, 200).unwrap();
        assert!((r.x - 2f64.cbrt()).abs() < 1e-13);
    }

    #[test]
    fn node_floor() {
        assert_eq!(auto_nodes(1, 1.0, 8), 64);
        assert_eq!(auto_nodes(1, 1e-3, 8), 48000);
        assert_eq!(auto_nodes(2, 1e-4, 8), MAX_AUTO_NODES_2D);
    }
}
