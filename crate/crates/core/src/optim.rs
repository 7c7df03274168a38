//! Nelder–Mead simplex minimizer with box penalties and restarts.
//!
//! Shared by the geometry optimizer and the closure calibration. Coefficients
//! are the classic ones: reflection 1, expansion 2, contraction 1/2,
//! shrink 1/2. Everything is sequential and deterministic for a given start.

use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions<T> {
    /// Total objective evaluations across all restarts.
    pub max_evals: usize,
    /// Stop once every vertex lies within `tolerance` initial steps of the
    /// best one.
    pub tolerance: T,
    /// Also stop when the spread of objective values falls below this.
    pub f_tolerance: T,
    /// Fresh simplices built around the incumbent after convergence.
    pub max_restarts: usize,
}

impl<T: Scalar> Default for NelderMeadOptions<T> {
    fn default() -> Self {
        Self {
            max_evals: 400,
            tolerance: T::lit(1e-6),
            f_tolerance: T::zero(),
            max_restarts: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum<T> {
    pub x: Vec<T>,
    pub value: T,
    pub evaluations: usize,
    /// Whether the final simplex met the tolerance (as opposed to running
    /// out of evaluations).
    pub converged: bool,
}

/// Optional box. Points outside are evaluated at their projection and
/// charged a penalty growing with the distance to the box.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds<T> {
    pub lower: Vec<T>,
    pub upper: Vec<T>,
}

impl<T: Scalar> Bounds<T> {
    fn project(&self, x: &[T]) -> (Vec<T>, T) {
        let mut dist2 = T::zero();
        let p = x
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&v, (&lo, &hi))| {
                let c = v.max(lo).min(hi);
                dist2 = dist2 + (v - c) * (v - c);
                c
            })
            .collect();
        (p, dist2.sqrt())
    }
}

struct Counted<'a, T, F> {
    f: F,
    bounds: Option<&'a Bounds<T>>,
    evals: usize,
    budget: usize,
}

impl<T: Scalar, F: FnMut(&[T]) -> T> Counted<'_, T, F> {
    /// Past the budget every point is +∞ and `f` is no longer called.
    fn eval(&mut self, x: &[T]) -> T {
        if self.evals >= self.budget {
            return T::infinity();
        }
        self.evals += 1;
        let sanitize = |v: T| if v.is_nan() { T::infinity() } else { v };
        match self.bounds {
            None => sanitize((self.f)(x)),
            Some(b) => {
                let (p, dist) = b.project(x);
                let v = sanitize((self.f)(&p));
                if dist > T::zero() {
                    v + (T::one() + v.abs()) * T::lit(1e3) * dist
                } else {
                    v
                }
            }
        }
    }
}

/// Minimizes `f` from `start`, with initial simplex edges `steps` along each
/// axis. Axes with a zero step are held fixed. Non-finite objective values
/// count as +∞.
pub fn minimize<T: Scalar, F: FnMut(&[T]) -> T>(
    f: F,
    start: &[T],
    steps: &[T],
    bounds: Option<&Bounds<T>>,
    options: &NelderMeadOptions<T>,
) -> Minimum<T> {
    assert_eq!(start.len(), steps.len(), "one step per coordinate");
    let mut obj = Counted {
        f,
        bounds,
        evals: 0,
        budget: options.max_evals.max(1),
    };
    let free: Vec<usize> = (0..start.len())
        .filter(|&i| steps[i] != T::zero())
        .collect();
    let mut best_x = start.to_vec();
    let mut best_v = obj.eval(&best_x);
    if free.is_empty() {
        return Minimum {
            x: best_x,
            value: best_v,
            evaluations: obj.evals,
            converged: true,
        };
    }

    let mut converged = false;
    for round in 0..=options.max_restarts {
        if obj.evals >= options.max_evals {
            break;
        }
        let before = best_v;
        let (x, v, done) = run_simplex(&mut obj, &best_x, best_v, steps, &free, options);
        converged = done;
        if v <= best_v {
            best_x = x;
            best_v = v;
        }
        // A restart that gains nothing means the incumbent is a genuine
        // local minimum at this resolution.
        if round > 0 && !(best_v < before) {
            break;
        }
        if !done {
            break;
        }
    }
    Minimum {
        x: best_x,
        value: best_v,
        evaluations: obj.evals,
        converged,
    }
}

fn run_simplex<T: Scalar, F: FnMut(&[T]) -> T>(
    obj: &mut Counted<'_, T, F>,
    x0: &[T],
    v0: T,
    steps: &[T],
    free: &[usize],
    options: &NelderMeadOptions<T>,
) -> (Vec<T>, T, bool) {
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let n = free.len();
    let mut simplex: Vec<(Vec<T>, T)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), v0));
    for &i in free {
        if obj.evals >= options.max_evals {
            return (x0.to_vec(), v0, false);
        }
        let mut x = x0.to_vec();
        x[i] = x[i] + steps[i];
        let v = obj.eval(&x);
        simplex.push((x, v));
    }

    let combine = |a: &[T], b: &[T], t: T| -> Vec<T> {
        // a + t (b − a)
        a.iter()
            .zip(b)
            .map(|(&ai, &bi)| ai + t * (bi - ai))
            .collect()
    };

    loop {
        // Stable sort keeps ties in insertion order.
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
        let best = &simplex[0];
        let diameter = simplex[1..]
            .iter()
            .flat_map(|(x, _)| {
                free.iter()
                    .map(move |&i| ((x[i] - best.0[i]) / steps[i]).abs())
            })
            .fold(T::zero(), T::max);
        let spread = simplex[n].1 - simplex[0].1;
        if diameter < options.tolerance
            || (spread.is_finite() && spread <= options.f_tolerance && diameter < T::lit(1e-2))
        {
            return (simplex[0].0.clone(), simplex[0].1, true);
        }
        if obj.evals >= options.max_evals {
            return (simplex[0].0.clone(), simplex[0].1, false);
        }

        let mut centroid = vec![T::zero(); x0.len()];
        for (x, _) in &simplex[..n] {
            for (c, &xi) in centroid.iter_mut().zip(x) {
                *c = *c + xi;
            }
        }
        let nf = T::from_usize_lossy(n);
        for c in &mut centroid {
            *c = *c / nf;
        }
        let worst = simplex[n].clone();
        let second = simplex[n - 1].1;
        let best_v = simplex[0].1;

        let xr = combine(&centroid, &worst.0, -T::one());
        let vr = obj.eval(&xr);
        if vr < best_v {
            let xe = combine(&centroid, &worst.0, -two);
            let ve = obj.eval(&xe);
            simplex[n] = if ve < vr { (xe, ve) } else { (xr, vr) };
            continue;
        }
        if vr < second {
            simplex[n] = (xr, vr);
            continue;
        }
        let (xc, vc) = if vr < worst.1 {
            let xc = combine(&centroid, &xr, half);
            let vc = obj.eval(&xc);
            (xc, vc)
        } else {
            let xc = combine(&centroid, &worst.0, half);
            let vc = obj.eval(&xc);
            (xc, vc)
        };
        if vc < worst.1.min(vr) {
            simplex[n] = (xc, vc);
            continue;
        }
        let anchor = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            if obj.evals >= options.max_evals {
                break;
            }
            let x = combine(&anchor, &vertex.0, half);
            let v = obj.eval(&x);
            *vertex = (x, v);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> f64 {
        (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
    }

    #[test]
    fn finds_quadratic_minimum() {
        let f = |x: &[f64]| (x[0] - 3.0).powi(2) + 2.0 * (x[1] + 1.0).powi(2);
        let m = minimize(
            f,
            &[0.0, 0.0],
            &[0.5, 0.5],
            None,
            &NelderMeadOptions::default(),
        );
        assert!(
            (m.x[0] - 3.0).abs() < 1e-5 && (m.x[1] + 1.0).abs() < 1e-5,
            "{m:?}"
        );
        assert!(m.evaluations <= 400);
    }

    #[test]
    fn rosenbrock_with_budget() {
        let opts = NelderMeadOptions {
            max_evals: 2000,
            ..Default::default()
        };
        let m = minimize(rosenbrock, &[-1.2, 1.0], &[0.1, 0.1], None, &opts);
        assert!(
            (m.x[0] - 1.0).abs() < 1e-4 && (m.x[1] - 1.0).abs() < 1e-4,
            "{m:?}"
        );
    }

    #[test]
    fn respects_box() {
        let f = |x: &[f64]| (x[0] - 5.0).powi(2);
        let b = Bounds {
            lower: vec![0.0],
            upper: vec![1.0],
        };
        let m = minimize(f, &[0.5], &[0.2], Some(&b), &NelderMeadOptions::default());
        assert!((m.x[0] - 1.0).abs() < 1e-5, "{m:?}");
    }

    #[test]
    fn zero_steps_evaluate_once() {
        let mut calls = 0;
        let m = minimize(
            |x: &[f64]| {
                calls += 1;
                x[0]
            },
            &[2.5],
            &[0.0],
            None,
            &NelderMeadOptions::default(),
        );
        assert_eq!(m.x, vec![2.5]);
        assert_eq!(m.evaluations, 1);
        assert_eq!(calls, 1);
    }

    #[test]
    fn nan_is_treated_as_worst() {
        let f = |x: &[f64]| {
            if x[0] < 0.0 {
                f64::NAN
            } else {
                (x[0] - 0.3).powi(2)
            }
        };
        let m = minimize(f, &[1.0], &[0.5], None, &NelderMeadOptions::default());
        assert!((m.x[0] - 0.3).abs() < 1e-5);
    }

    #[test]
    fn deterministic() {
        let a = minimize(
            rosenbrock,
            &[0.0, 0.0],
            &[0.3, 0.3],
            None,
            &NelderMeadOptions::default(),
        );
        let b = minimize(
            rosenbrock,
            &[0.0, 0.0],
            &[0.3, 0.3],
            None,
            &NelderMeadOptions::default(),
        );
        assert_eq!(a, b);
    }

    #[test]
    fn evaluation_budget_is_hard() {
        let opts = NelderMeadOptions {
            max_evals: 37,
            ..Default::default()
        };
        let m = minimize(rosenbrock, &[-1.2, 1.0], &[0.1, 0.1], None, &opts);
        assert_eq!(m.evaluations, 37);
    }
}
