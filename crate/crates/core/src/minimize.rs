//! Small derivative-free and convex minimizers for the inner optimizations.

use crate::error::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_9;

fn finite_or_inf(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Minimizes `f` on `[lo, hi]`: `n_grid` evenly spaced evaluations, then
/// golden-section refinement to `tol` on the bracket around the best grid
/// point. Non-finite values are treated as `+inf` (infeasible).
pub fn grid_golden(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n_grid: usize, tol: f64) -> (f64, f64) {
    if !(hi > lo) || n_grid < 2 {
        return (lo, finite_or_inf(f(lo)));
    }
    let step = (hi - lo) / (n_grid - 1) as f64;
    let xs: Vec<f64> = (0..n_grid).map(|k| if k + 1 == n_grid { hi } else { lo + step * k as f64 }).collect();
    let (mut best_k, mut best) = (0, f64::INFINITY);
    for (k, &x) in xs.iter().enumerate() {
        let v = finite_or_inf(f(x));
        if v < best {
            best = v;
            best_k = k;
        }
    }
    if !best.is_finite() {
        return (xs[best_k], best);
    }
    let mut a = xs[best_k.saturating_sub(1)];
    let mut b = xs[(best_k + 1).min(n_grid - 1)];
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let (mut f1, mut f2) = (finite_or_inf(f(x1)), finite_or_inf(f(x2)));
    while b - a > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = finite_or_inf(f(x1));
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = finite_or_inf(f(x2));
        }
    }
    let mut out = (xs[best_k], best);
    for (x, v) in [(x1, f1), (x2, f2)] {
        if v < out.1 {
            out = (x, v);
        }
    }
    out
}

/// Result of a local simplex search.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
}

/// Nelder-Mead with standard coefficients. Stops when the spread of simplex
/// values falls below `tol` or after `max_evals` evaluations.
pub fn nelder_mead(
    f: &mut dyn FnMut(&[f64]) -> f64,
    x0: &[f64],
    step: f64,
    max_evals: usize,
    tol: f64,
) -> SimplexResult {
    let n = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        finite_or_inf(f(x))
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let v0 = eval(x0, &mut evals);
    simplex.push((x0.to_vec(), v0));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step;
        let v = eval(&x, &mut evals);
        simplex.push((x, v));
    }
    while evals < max_evals.max(n + 2) {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best, worst) = (simplex[0].1, simplex[n].1);
        if (worst - best).abs() <= tol && worst.is_finite() {
            break;
        }
        let centroid: Vec<f64> =
            (0..n).map(|k| simplex[..n].iter().map(|(x, _)| x[k]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> { centroid.iter().zip(&simplex[n].0).map(|(c, w)| c + t * (c - w)).collect() };
        let xr = along(1.0);
        let fr = eval(&xr, &mut evals);
        if fr < simplex[0].1 {
            let xe = along(2.0);
            let fe = eval(&xe, &mut evals);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[n].1 {
                let xc = along(0.5);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            } else {
                let xc = along(-0.5);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            };
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let x_best = simplex[0].0.clone();
                for item in simplex.iter_mut().skip(1) {
                    let x: Vec<f64> = x_best.iter().zip(&item.0).map(|(b, x)| b + 0.5 * (x - b)).collect();
                    let v = eval(&x, &mut evals);
                    *item = (x, v);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    SimplexResult { x, value, evals }
}

/// Grid search over a box with `per_axis` points per coordinate, followed by
/// Nelder-Mead from the best `starts` grid points. Points where `f` is not
/// finite are infeasible.
pub fn box_grid_simplex(
    f: &dyn Fn(&[f64]) -> f64,
    lo: &[f64],
    hi: &[f64],
    per_axis: usize,
    starts: usize,
    tol: f64,
) -> SimplexResult {
    let n = lo.len();
    let per_axis = per_axis.max(2);
    let total = per_axis.pow(n as u32);
    let coord = |k: usize, i: usize| {
        if hi[k] > lo[k] {
            lo[k] + (hi[k] - lo[k]) * i as f64 / (per_axis - 1) as f64
        } else {
            lo[k]
        }
    };
    let mut scored: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut x = vec![0.0; n];
    for idx in 0..total {
        let mut rest = idx;
        for (k, xk) in x.iter_mut().enumerate() {
            *xk = coord(k, rest % per_axis);
            rest /= per_axis;
        }
        let v = finite_or_inf(f(&x));
        if v.is_finite() {
            scored.push((v, x.clone()));
        }
    }
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = SimplexResult { x: lo.to_vec(), value: f64::INFINITY, evals: total };
    if let Some((v, x)) = scored.first() {
        best = SimplexResult { x: x.clone(), value: *v, evals: total };
    }
    let step = lo.iter().zip(hi).map(|(a, b)| (b - a) / (per_axis - 1) as f64).fold(0.0, f64::max).max(1e-6);
    for (_, x0) in scored.iter().take(starts) {
        let r = nelder_mead(&mut |x: &[f64]| f(x), x0, step, 4000, tol);
        if r.value < best.value {
            best = SimplexResult { evals: best.evals + r.evals, ..r };
        }
    }
    best
}

/// Minimizes `Σ φ_i(x_i)` subject to `Σ x_i = c` and `|x_i| <= caps[i]` for
/// convex `φ_i` with non-decreasing derivatives `deriv(i, x)`.
///
/// Solved through the dual: for a multiplier `μ`, each coordinate settles
/// where `φ_i'(x_i) = μ` (clipped to its box), and `μ` is bisected until the
/// coordinates sum to `c`.
pub fn separable_convex(deriv: &dyn Fn(usize, f64) -> f64, caps: &[f64], c: f64) -> Result<Vec<f64>> {
    let total_cap: f64 = caps.iter().sum();
    if caps.iter().any(|&k| !(k >= 0.0)) {
        return Err(Error::InvalidParameter("caps must be non-negative".into()));
    }
    if !c.is_finite() || c.abs() > total_cap + 1e-12 {
        return Err(Error::Infeasible(format!("|c| = {} exceeds the sum of caps {total_cap}", c.abs())));
    }
    let respond = |mu: f64| -> Vec<f64> {
        caps.iter()
            .enumerate()
            .map(|(i, &cap)| {
                if cap <= 0.0 {
                    return 0.0;
                }
                let d = |x: f64| {
                    let v = deriv(i, x);
                    if v.is_nan() {
                        if x > 0.0 {
                            f64::INFINITY
                        } else {
                            f64::NEG_INFINITY
                        }
                    } else {
                        v
                    }
                };
                if d(-cap) >= mu {
                    return -cap;
                }
                if d(cap) <= mu {
                    return cap;
                }
                let (mut a, mut b) = (-cap, cap);
                for _ in 0..200 {
                    let m = 0.5 * (a + b);
                    if d(m) < mu {
                        a = m;
                    } else {
                        b = m;
                    }
                    if b - a <= 1e-15 * cap.max(1e-300) {
                        break;
                    }
                }
                0.5 * (a + b)
            })
            .collect()
    };
    let sum = |v: &[f64]| v.iter().sum::<f64>();

    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    while sum(&respond(lo)) > c && lo > -1e300 {
        lo *= 4.0;
    }
    while sum(&respond(hi)) < c && hi < 1e300 {
        hi *= 4.0;
    }
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if sum(&respond(mid)) < c {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x_lo = respond(lo);
    let x_hi = respond(hi);
    let (s_lo, s_hi) = (sum(&x_lo), sum(&x_hi));
    // interpolate between the two bracketing responses, then absorb any residual
    let t = if s_hi > s_lo { ((c - s_lo) / (s_hi - s_lo)).clamp(0.0, 1.0) } else { 0.0 };
    let mut x: Vec<f64> = x_lo.iter().zip(&x_hi).map(|(a, b)| a + t * (b - a)).collect();
    let mut residual = c - sum(&x);
    for (xi, &cap) in x.iter_mut().zip(caps) {
        if residual == 0.0 {
            break;
        }
        let target = (*xi + residual).clamp(-cap, cap);
        residual -= target - *xi;
        *xi = target;
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn golden_finds_parabola_minimum() {
        let (x, v) = grid_golden(|x| (x - 0.3).powi(2) + 1.0, -1.0, 1.0, 2001, 1e-10);
        assert_abs_diff_eq!(x, 0.3, epsilon = 1e-8);
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-15);
        let (x, _) = grid_golden(|x| x, -1.0, 1.0, 11, 1e-10);
        assert_eq!(x, -1.0);
        let (x, v) = grid_golden(|x| x * 2.0, 0.5, 0.5, 2001, 1e-10);
        assert_eq!((x, v), (0.5, 1.0));
    }

    #[test]
    fn golden_skips_infeasible_points() {
        let f = |x: f64| if x < 0.2 { f64::NAN } else { (x - 0.1).abs() };
        let (x, v) = grid_golden(f, -1.0, 1.0, 2001, 1e-12);
        assert!(x >= 0.2 - 1e-9);
        assert_abs_diff_eq!(v, 0.1, epsilon = 1e-9);
    }

    #[test]
    fn nelder_mead_rosenbrock() {
        let mut f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let r = nelder_mead(&mut f, &[-1.2, 1.0], 0.5, 20_000, 1e-20);
        assert_abs_diff_eq!(r.x[0], 1.0, epsilon = 1e-4);
        assert_abs_diff_eq!(r.x[1], 1.0, epsilon = 1e-4);
    }

    #[test]
    fn separable_quadratic_matches_closed_form() {
        // minimize Σ w_i x_i² / 2 with Σ x = c: x_i ∝ 1/w_i
        let w = [1.0, 2.0, 4.0];
        let caps = [10.0; 3];
        let x = separable_convex(&|i, x| w[i] * x, &caps, 1.75).unwrap();
        assert_abs_diff_eq!(x[0], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(x[1], 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(x[2], 0.25, epsilon = 1e-9);
    }

    #[test]
    fn separable_respects_caps() {
        let w = [1.0, 1.0];
        let caps = [0.1, 5.0];
        let x = separable_convex(&|i, x| w[i] * x, &caps, 2.0).unwrap();
        assert_abs_diff_eq!(x[0], 0.1, epsilon = 1e-9);
        assert_abs_diff_eq!(x[1], 1.9, epsilon = 1e-9);
        assert!(matches!(separable_convex(&|_, x| x, &caps, 6.0), Err(Error::Infeasible(_))));
        let x = separable_convex(&|_, x| x, &caps, -5.1).unwrap();
        assert_abs_diff_eq!(x[0] + x[1], -5.1, epsilon = 1e-12);
    }

    #[test]
    fn grid_simplex_agrees_with_dual() {
        let w = [1.0, 3.0, 0.5];
        let caps = [1.0, 1.0, 1.0];
        let c = 0.7;
        let x = separable_convex(&|i, x| w[i] * x, &caps, c).unwrap();
        let dual: f64 = x.iter().zip(&w).map(|(x, w)| 0.5 * w * x * x).sum();
        let obj = |y: &[f64]| {
            let x0 = c - y[0] - y[1];
            if x0.abs() > caps[0] || y.iter().zip(&caps[1..]).any(|(v, k)| v.abs() > *k) {
                return f64::INFINITY;
            }
            0.5 * (w[0] * x0 * x0 + w[1] * y[0] * y[0] + w[2] * y[1] * y[1])
        };
        let r = box_grid_simplex(&obj, &[-1.0, -1.0], &[1.0, 1.0], 41, 5, 1e-14);
        assert_abs_diff_eq!(r.value, dual, epsilon = 1e-7);
    }
}
