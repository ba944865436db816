//! Sequential dual optimization for the soft-margin SVM dual
//!
//! min 1/2 a'Qa - e'a  s.t.  y'a = 0, 0 <= a_i <= C,  Q_ij = y_i y_j K_ij
//!
//! with second-order working-set selection.

pub const KKT_TOLERANCE: f64 = 1e-3;
/// Curvature floor for non-positive-definite kernels.
const TAU: f64 = 1e-12;
/// Iteration cap, in multiples of the problem size.
pub const MAX_PASSES: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    /// Decision function is `sum a_i y_i K(x_i, x) - rho`.
    pub rho: f64,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Solves the dual for a row-major Gram matrix `k` and labels `y` in {-1, +1}.
pub fn solve_dual(k: &[f64], y: &[f64], c: f64, tolerance: f64) -> DualSolution {
    let n = y.len();
    debug_assert_eq!(k.len(), n * n);
    let q = |i: usize, j: usize| y[i] * y[j] * k[i * n + j];
    let qd: Vec<f64> = (0..n).map(|i| k[i * n + i]).collect();
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let is_upper = |a: f64| a >= c;
    let is_lower = |a: f64| a <= 0.0;

    let max_iter = MAX_PASSES.saturating_mul(n.max(1));
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        // i: maximal violating index in I_up
        let mut gmax = f64::NEG_INFINITY;
        let mut gmax_idx = None;
        for t in 0..n {
            if y[t] > 0.0 {
                if !is_upper(alpha[t]) && -grad[t] >= gmax {
                    gmax = -grad[t];
                    gmax_idx = Some(t);
                }
            } else if !is_lower(alpha[t]) && grad[t] >= gmax {
                gmax = grad[t];
                gmax_idx = Some(t);
            }
        }
        let mut gmax2 = f64::NEG_INFINITY;
        let mut gmin_idx = None;
        let mut obj_diff_min = f64::INFINITY;
        if let Some(i) = gmax_idx {
            for j in 0..n {
                let (grad_diff, quad) = if y[j] > 0.0 {
                    if is_lower(alpha[j]) {
                        continue;
                    }
                    gmax2 = gmax2.max(grad[j]);
                    (gmax + grad[j], qd[i] + qd[j] - 2.0 * y[i] * q(i, j))
                } else {
                    if is_upper(alpha[j]) {
                        continue;
                    }
                    gmax2 = gmax2.max(-grad[j]);
                    (gmax - grad[j], qd[i] + qd[j] + 2.0 * y[i] * q(i, j))
                };
                if grad_diff > 0.0 {
                    let obj_diff = -(grad_diff * grad_diff) / if quad > 0.0 { quad } else { TAU };
                    if obj_diff <= obj_diff_min {
                        gmin_idx = Some(j);
                        obj_diff_min = obj_diff;
                    }
                }
            }
        }
        let (Some(i), Some(j)) = (gmax_idx, gmin_idx) else {
            converged = true;
            break;
        };
        if gmax + gmax2 < tolerance {
            converged = true;
            break;
        }
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let mut quad = qd[i] + qd[j] + 2.0 * q(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = qd[i] + qd[j] - 2.0 * q(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += q(i, t) * di + q(j, t) * dj;
        }
    }

    // bias from free vectors, else midpoint of the feasible interval
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut sum_free) = (0usize, 0.0);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if is_upper(alpha[t]) {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if is_lower(alpha[t]) {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum_free += yg;
        }
    }
    let rho = if free > 0 {
        sum_free / free as f64
    } else if ub.is_finite() && lb.is_finite() {
        (ub + lb) / 2.0
    } else if ub.is_finite() {
        ub
    } else if lb.is_finite() {
        lb
    } else {
        0.0
    };
    let objective = dual_objective(k, y, &alpha);
    DualSolution {
        alpha,
        rho,
        objective,
        iterations,
        converged,
    }
}

/// `1/2 a'Qa - sum a`.
pub fn dual_objective(k: &[f64], y: &[f64], alpha: &[f64]) -> f64 {
    let n = y.len();
    let mut quad = 0.0;
    for i in 0..n {
        if alpha[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            quad += alpha[i] * alpha[j] * y[i] * y[j] * k[i * n + j];
        }
    }
    0.5 * quad - alpha.iter().sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::KernelSpec;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Exact minimum by enumerating which variables sit at 0, at C or are
    /// free, solving the KKT system for the free ones.
    fn active_set_oracle(k: &[f64], y: &[f64], c: f64) -> f64 {
        let n = y.len();
        let mut best = f64::INFINITY;
        let mut state = vec![0u8; n];
        for code in 0..3usize.pow(n as u32) {
            let mut v = code;
            for s in state.iter_mut() {
                *s = (v % 3) as u8;
                v /= 3;
            }
            let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
            let mut alpha: Vec<f64> = state.iter().map(|&s| if s == 1 { c } else { 0.0 }).collect();
            if !free.is_empty() {
                let m = free.len();
                let mut a = DMatrix::zeros(m + 1, m + 1);
                let mut b = DVector::zeros(m + 1);
                for (r, &i) in free.iter().enumerate() {
                    for (s, &j) in free.iter().enumerate() {
                        a[(r, s)] = y[i] * y[j] * k[i * n + j];
                    }
                    a[(r, m)] = y[i];
                    a[(m, r)] = y[i];
                    let bound: f64 = (0..n)
                        .filter(|&j| state[j] == 1)
                        .map(|j| y[i] * y[j] * k[i * n + j] * c)
                        .sum();
                    b[r] = 1.0 - bound;
                }
                b[m] = -(0..n).filter(|&j| state[j] == 1).map(|j| y[j] * c).sum::<f64>();
                let Some(sol) = a.lu().solve(&b) else { continue };
                for (r, &i) in free.iter().enumerate() {
                    alpha[i] = sol[r];
                }
            }
            let feasible = alpha.iter().all(|&a| (-1e-12..=c + 1e-12).contains(&a))
                && alpha.iter().zip(y).map(|(a, y)| a * y).sum::<f64>().abs() < 1e-9;
            if feasible {
                best = best.min(dual_objective(k, y, &alpha));
            }
        }
        best
    }

    /// Objective minimum over a coarse lattice of feasible points; an upper
    /// bound on the true minimum.
    fn grid_upper_bound(k: &[f64], y: &[f64], c: f64, steps: usize) -> f64 {
        let n = y.len();
        let mut best = 0.0;
        let levels: Vec<f64> = (0..=steps).map(|s| c * s as f64 / steps as f64).collect();
        let mut idx = vec![0usize; n - 1];
        loop {
            let mut alpha: Vec<f64> = idx.iter().map(|&i| levels[i]).collect();
            // last variable fixed by the equality constraint
            let partial: f64 = alpha.iter().zip(y).map(|(a, y)| a * y).sum();
            let last = -partial * y[n - 1];
            if (0.0..=c).contains(&last) {
                alpha.push(last);
                let obj = dual_objective(k, y, &alpha);
                if obj < best {
                    best = obj;
                }
            }
            let mut p = 0;
            loop {
                if p == idx.len() {
                    return best;
                }
                idx[p] += 1;
                if idx[p] <= steps {
                    break;
                }
                idx[p] = 0;
                p += 1;
            }
        }
    }

    fn random_problem(rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>, f64) {
        let rows: Vec<Vec<f64>> = (0..6).map(|_| (0..2).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
        let mut y: Vec<f64> = (0..6).map(|i| if i < 3 { 1.0 } else { -1.0 }).collect();
        if rng.gen_bool(0.5) {
            y.swap(0, 5);
        }
        let c = [0.5, 1.0, 5.0][rng.gen_range(0..3)];
        let spec = KernelSpec::rbf(c, rng.gen_range(0.2..2.0));
        (spec.gram(&rows), y, c)
    }

    #[test]
    fn six_point_problems_match_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let (k, y, c) = random_problem(&mut rng);
            let sol = solve_dual(&k, &y, c, KKT_TOLERANCE);
            assert!(sol.converged);
            let exact = active_set_oracle(&k, &y, c);
            assert!((sol.objective - exact).abs() < 1e-4, "{} vs {}", sol.objective, exact);
            assert!(grid_upper_bound(&k, &y, c, 8) >= exact - 1e-9);
            let balance: f64 = sol.alpha.iter().zip(&y).map(|(a, y)| a * y).sum();
            assert!(balance.abs() < 1e-6);
            assert!(sol.alpha.iter().all(|&a| (0.0..=c).contains(&a)));
        }
    }

    #[test]
    fn two_point_closed_form() {
        // x = +-1, linear kernel: alpha = 0.5 each (hard margin), rho = 0
        let k = vec![1.0, -1.0, -1.0, 1.0];
        let y = vec![1.0, -1.0];
        let sol = solve_dual(&k, &y, 10.0, 1e-6);
        assert!((sol.alpha[0] - 0.5).abs() < 1e-9);
        assert!((sol.alpha[1] - 0.5).abs() < 1e-9);
        assert!(sol.rho.abs() < 1e-9);
        assert!((sol.objective + 0.5).abs() < 1e-9);
    }
}
