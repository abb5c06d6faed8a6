//! Nelder-Mead simplex minimization for small, smooth, unconstrained problems.

#[derive(Debug, Clone, Copy)]
pub struct NelderMead {
    pub max_iterations: usize,
    /// Stop once `f(worst) − f(best) ≤ tolerance`.
    pub tolerance: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            tolerance: 1e-12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

impl NelderMead {
    /// Minimizes `f` from `x0`, with the initial simplex formed by stepping
    /// `steps[i]` along each coordinate axis.
    pub fn minimize(&self, f: impl Fn(&[f64]) -> f64, x0: &[f64], steps: &[f64]) -> Minimum {
        let n = x0.len();
        assert!(n >= 1 && steps.len() == n);

        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        simplex.push((x0.to_vec(), f(x0)));
        for i in 0..n {
            let mut x = x0.to_vec();
            x[i] += steps[i];
            let fx = f(&x);
            simplex.push((x, fx));
        }

        let mut iterations = 0;
        while iterations < self.max_iterations {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            if simplex[n].1 - simplex[0].1 <= self.tolerance {
                break;
            }
            iterations += 1;

            let mut centroid = vec![0.0; n];
            for (x, _) in &simplex[..n] {
                for (c, xi) in centroid.iter_mut().zip(x) {
                    *c += xi / n as f64;
                }
            }
            let toward = |coef: f64, from: &[f64]| -> Vec<f64> {
                centroid
                    .iter()
                    .zip(from)
                    .map(|(c, w)| c + coef * (c - w))
                    .collect()
            };

            let worst = simplex[n].0.clone();
            let reflected = toward(REFLECT, &worst);
            let f_reflected = f(&reflected);

            if f_reflected < simplex[0].1 {
                let expanded = toward(EXPAND, &worst);
                let f_expanded = f(&expanded);
                simplex[n] = if f_expanded < f_reflected {
                    (expanded, f_expanded)
                } else {
                    (reflected, f_reflected)
                };
            } else if f_reflected < simplex[n - 1].1 {
                simplex[n] = (reflected, f_reflected);
            } else {
                let (target, f_target) = if f_reflected < simplex[n].1 {
                    (toward(CONTRACT * REFLECT, &worst), f_reflected)
                } else {
                    (toward(-CONTRACT, &worst), simplex[n].1)
                };
                let f_contracted = f(&target);
                if f_contracted < f_target {
                    simplex[n] = (target, f_contracted);
                } else {
                    let best = simplex[0].0.clone();
                    for (x, fx) in simplex.iter_mut().skip(1) {
                        for (xi, bi) in x.iter_mut().zip(&best) {
                            *xi = bi + SHRINK * (*xi - bi);
                        }
                        *fx = f(x);
                    }
                }
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (x, value) = simplex.swap_remove(0);
        Minimum {
            x,
            value,
            iterations,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let nm = NelderMead::default();
        let m = nm.minimize(
            |x| (x[0] - 1.0).powi(2) + 3.0 * (x[1] + 2.0).powi(2) + 5.0,
            &[0.0, 0.0],
            &[0.5, 0.5],
        );
        assert!((m.value - 5.0).abs() < 1e-11);
        assert!((m.x[0] - 1.0).abs() < 1e-5 && (m.x[1] + 2.0).abs() < 1e-5);
    }

    #[test]
    fn rosenbrock() {
        let nm = NelderMead {
            max_iterations: 5000,
            tolerance: 1e-14,
        };
        let m = nm.minimize(
            |x| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2),
            &[-1.2, 1.0],
            &[0.1, 0.1],
        );
        assert!(m.value < 1e-10, "{}", m.value);
    }

    #[test]
    fn respects_iteration_budget() {
        let nm = NelderMead {
            max_iterations: 3,
            tolerance: 0.0,
        };
        let m = nm.minimize(|x| x.iter().map(|v| v * v).sum(), &[1.0; 4], &[0.3; 4]);
        assert_eq!(m.iterations, 3);
    }
}
