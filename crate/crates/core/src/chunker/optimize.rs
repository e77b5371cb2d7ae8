//! Deterministic batch minimizer: limited-memory quasi-Newton steps with
//! backtracking line search, run to a gradient-norm tolerance.

use crate::scalar::{real, Real};

use super::ChunkerError;

#[derive(Debug, Clone)]
pub struct OptimizeOptions<T: Real> {
    pub max_iters: usize,
    pub grad_tol: T,
    pub memory: usize,
}

impl<T: Real> Default for OptimizeOptions<T> {
    fn default() -> Self {
        OptimizeOptions { max_iters: 200, grad_tol: real(1e-4), memory: 10 }
    }
}

#[derive(Debug, Clone)]
pub struct OptimizeReport<T: Real> {
    pub iterations: usize,
    pub final_objective: T,
    pub grad_norm: T,
    pub converged: bool,
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(x, y)| *x * *y).sum()
}

fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Minimize `f` from `x0`. `f` returns the objective and its gradient.
pub fn minimize<T: Real>(
    f: impl Fn(&[T]) -> (T, Vec<T>),
    x0: Vec<T>,
    opts: &OptimizeOptions<T>,
) -> Result<(Vec<T>, OptimizeReport<T>), ChunkerError> {
    let mut x = x0;
    let (mut fx, mut gx) = f(&x);
    check_finite(fx, 0)?;

    // Curvature history for the two-loop recursion.
    let mut s_hist: Vec<Vec<T>> = Vec::new();
    let mut y_hist: Vec<Vec<T>> = Vec::new();
    let mut rho: Vec<T> = Vec::new();

    let mut iterations = 0;
    let mut grad_norm = norm(&gx);
    while iterations < opts.max_iters && grad_norm > opts.grad_tol {
        iterations += 1;

        // Search direction from curvature pairs; falls back to steepest
        // descent on an empty history.
        let mut d: Vec<T> = gx.iter().map(|g| -*g).collect();
        if !s_hist.is_empty() {
            let m = s_hist.len();
            let mut alphas = vec![T::zero(); m];
            for i in (0..m).rev() {
                let a = rho[i] * dot(&s_hist[i], &d);
                alphas[i] = a;
                for (dk, yk) in d.iter_mut().zip(&y_hist[i]) {
                    *dk = *dk - a * *yk;
                }
            }
            let gamma = dot(&s_hist[m - 1], &y_hist[m - 1]) / dot(&y_hist[m - 1], &y_hist[m - 1]);
            for dk in d.iter_mut() {
                *dk = *dk * gamma;
            }
            for i in 0..m {
                let b = rho[i] * dot(&y_hist[i], &d);
                for (dk, sk) in d.iter_mut().zip(&s_hist[i]) {
                    *dk = *dk + (alphas[i] - b) * *sk;
                }
            }
        }
        let mut slope = dot(&gx, &d);
        if slope >= T::zero() {
            // Not a descent direction: reset to steepest descent.
            d = gx.iter().map(|g| -*g).collect();
            slope = dot(&gx, &d);
            s_hist.clear();
            y_hist.clear();
            rho.clear();
        }

        // Weak-Wolfe line search by bracketing and bisection: sufficient
        // decrease plus a curvature condition, so accepted steps always
        // yield well-posed curvature pairs.
        let c1: T = real(1e-4);
        let c2: T = real(0.9);
        let mut step = T::one();
        let mut lo = T::zero();
        let mut hi = T::infinity();
        let mut accepted = None;
        let mut fallback: Option<(Vec<T>, T, Vec<T>)> = None;
        for _ in 0..60 {
            let xt: Vec<T> = x.iter().zip(&d).map(|(xi, di)| *xi + step * *di).collect();
            let (ft, gt) = f(&xt);
            check_finite(ft, iterations)?;
            if ft > fx + c1 * step * slope {
                hi = step;
                step = (lo + hi) * real(0.5);
            } else if dot(&gt, &d) < c2 * slope {
                fallback = Some((xt, ft, gt));
                lo = step;
                step = if hi.is_infinite() { step * real(2.0) } else { (lo + hi) * real(0.5) };
            } else {
                accepted = Some((xt, ft, gt));
                break;
            }
        }
        let Some((xt, ft, gt)) = accepted.or(fallback) else {
            // Step size underflow: no further progress possible.
            break;
        };

        let s: Vec<T> = xt.iter().zip(&x).map(|(a, b)| *a - *b).collect();
        let y: Vec<T> = gt.iter().zip(&gx).map(|(a, b)| *a - *b).collect();
        let sy = dot(&s, &y);
        if sy > real::<T>(1e-10) * norm(&s) * norm(&y) {
            if s_hist.len() == opts.memory {
                s_hist.remove(0);
                y_hist.remove(0);
                rho.remove(0);
            }
            rho.push(T::one() / sy);
            s_hist.push(s);
            y_hist.push(y);
        }
        x = xt;
        fx = ft;
        gx = gt;
        grad_norm = norm(&gx);
    }

    let report = OptimizeReport {
        iterations,
        final_objective: fx,
        grad_norm,
        converged: grad_norm <= opts.grad_tol,
    };
    Ok((x, report))
}

fn check_finite<T: Real>(fx: T, iteration: usize) -> Result<(), ChunkerError> {
    if fx.is_finite() {
        Ok(())
    } else {
        Err(ChunkerError::Divergence(format!(
            "objective became {fx} at iteration {iteration}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn minimizes_a_quadratic_bowl() {
        // f(x) = (x0-3)^2 + 2*(x1+1)^2
        let f = |x: &[f64]| {
            let v = (x[0] - 3.0).powi(2) + 2.0 * (x[1] + 1.0).powi(2);
            let g = vec![2.0 * (x[0] - 3.0), 4.0 * (x[1] + 1.0)];
            (v, g)
        };
        let (x, report) = minimize(f, vec![0.0, 0.0], &OptimizeOptions::default()).unwrap();
        assert!(report.converged);
        assert_abs_diff_eq!(x[0], 3.0, epsilon = 1e-4);
        assert_abs_diff_eq!(x[1], -1.0, epsilon = 1e-4);
    }

    #[test]
    fn rosenbrock_reaches_the_valley_floor() {
        let f = |x: &[f64]| {
            let (a, b) = (x[0], x[1]);
            let v = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
            let g = vec![
                -2.0 * (1.0 - a) - 400.0 * a * (b - a * a),
                200.0 * (b - a * a),
            ];
            (v, g)
        };
        let opts = OptimizeOptions { max_iters: 500, ..Default::default() };
        let (x, report) = minimize(f, vec![-1.2, 1.0], &opts).unwrap();
        assert!(report.final_objective < 1e-8, "objective {}", report.final_objective);
        assert_abs_diff_eq!(x[0], 1.0, epsilon = 1e-3);
    }

    #[test]
    fn divergence_is_reported() {
        let f = |x: &[f64]| (x[0].ln(), vec![1.0 / x[0]]);
        // ln over a domain crossing zero produces NaN during the search.
        let err = minimize(f, vec![-1.0], &OptimizeOptions::default());
        assert!(matches!(err, Err(ChunkerError::Divergence(_))));
    }
}
