//! Small deterministic minimizers used by the calibration fits.

use crate::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum<T, P> {
    pub point: P,
    pub value: T,
    pub iterations: usize,
    pub converged: bool,
}

/// Golden-section search for the minimum of `f` on `[lo, hi]`.
pub fn golden_section<T: Real>(
    f: impl Fn(T) -> T,
    lo: T,
    hi: T,
    x_tol: T,
    max_iter: usize,
) -> Minimum<T, T> {
    let inv_phi = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iterations = 0;
    while (b - a).abs() > x_tol && iterations < max_iter {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        iterations += 1;
    }
    let converged = (b - a).abs() <= x_tol;
    // include the endpoints so a boundary minimum is reported exactly
    let mut best = if fc <= fd { (c, fc) } else { (d, fd) };
    for x in [lo, hi] {
        let fx = f(x);
        if fx < best.1 {
            best = (x, fx);
        }
    }
    Minimum {
        point: best.0,
        value: best.1,
        iterations,
        converged,
    }
}

/// Settings for [`nelder_mead`].
#[derive(Debug, Clone)]
pub struct NelderMeadOptions<T> {
    /// Initial simplex edge along each axis.
    pub step: Vec<T>,
    pub lower: Vec<T>,
    pub upper: Vec<T>,
    /// Spread of function values across the simplex at convergence.
    pub f_tol: T,
    /// Largest vertex distance from the best vertex at convergence, per axis.
    pub x_tol: T,
    /// Total iteration cap across all restarts.
    pub max_iter: usize,
    /// Rebuilds of the simplex around the best vertex after convergence.
    pub restarts: usize,
}

fn clamp_into<T: Real>(p: &mut [T], lo: &[T], hi: &[T]) {
    for ((v, &l), &h) in p.iter_mut().zip(lo).zip(hi) {
        *v = v.max(l).min(h);
    }
}

/// Box-constrained Nelder-Mead simplex descent with standard coefficients
/// (reflection 1, expansion 2, contraction 1/2, shrink 1/2). Trial points
/// are projected onto the box. Fully deterministic for a given start.
pub fn nelder_mead<T: Real>(
    f: impl Fn(&[T]) -> T,
    start: &[T],
    opts: &NelderMeadOptions<T>,
) -> Minimum<T, Vec<T>> {
    let n = start.len();
    assert!(n >= 1 && opts.step.len() == n && opts.lower.len() == n && opts.upper.len() == n);
    let half = T::lit(0.5);
    let two = T::lit(2.0);

    let eval = |p: &mut Vec<T>| {
        clamp_into(p, &opts.lower, &opts.upper);
        f(p)
    };

    let mut best = start.to_vec();
    let mut best_f = eval(&mut best);
    let mut iterations = 0;
    let mut converged = false;

    for round in 0..=opts.restarts {
        let mut simplex: Vec<(Vec<T>, T)> = Vec::with_capacity(n + 1);
        simplex.push((best.clone(), best_f));
        for i in 0..n {
            let mut p = best.clone();
            // step inward when the start sits on the upper face
            p[i] = if p[i] + opts.step[i] <= opts.upper[i] {
                p[i] + opts.step[i]
            } else {
                p[i] - opts.step[i]
            };
            let fp = eval(&mut p);
            simplex.push((p, fp));
        }

        converged = false;
        while iterations < opts.max_iter {
            // stable sort: ties keep their previous order
            simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
            let f_spread = simplex[n].1 - simplex[0].1;
            let x_spread = simplex[1..]
                .iter()
                .flat_map(|(p, _)| p.iter().zip(&simplex[0].0).map(|(a, b)| (*a - *b).abs()))
                .fold(T::zero(), T::max);
            if f_spread.abs() <= opts.f_tol && x_spread <= opts.x_tol {
                converged = true;
                break;
            }
            iterations += 1;

            let mut centroid = vec![T::zero(); n];
            for (p, _) in &simplex[..n] {
                for (c, v) in centroid.iter_mut().zip(p) {
                    *c = *c + *v;
                }
            }
            let nf = T::from_usize(n).unwrap();
            centroid.iter_mut().for_each(|c| *c = *c / nf);

            let along = |t: T| -> Vec<T> {
                centroid
                    .iter()
                    .zip(&simplex[n].0)
                    .map(|(c, w)| *c + t * (*c - *w))
                    .collect()
            };

            let mut reflected = along(T::one());
            let fr = eval(&mut reflected);
            if fr < simplex[0].1 {
                let mut expanded = along(two);
                let fe = eval(&mut expanded);
                simplex[n] = if fe < fr {
                    (expanded, fe)
                } else {
                    (reflected, fr)
                };
                continue;
            }
            if fr < simplex[n - 1].1 {
                simplex[n] = (reflected, fr);
                continue;
            }
            let (contracted, fc) = if fr < simplex[n].1 {
                let mut p = along(half);
                let fp = eval(&mut p);
                (p, fp)
            } else {
                let mut p = along(-half);
                let fp = eval(&mut p);
                (p, fp)
            };
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (contracted, fc);
                continue;
            }
            let anchor = simplex[0].0.clone();
            for (p, fp) in simplex.iter_mut().skip(1) {
                for (v, a) in p.iter_mut().zip(&anchor) {
                    *v = *a + half * (*v - *a);
                }
                *fp = eval(p);
            }
        }

        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
        let improved = simplex[0].1 < best_f;
        if simplex[0].1 <= best_f {
            best = simplex[0].0.clone();
            best_f = simplex[0].1;
        }
        if !converged || (!improved && round > 0) {
            break;
        }
    }

    Minimum {
        point: best,
        value: best_f,
        iterations,
        converged,
    }
}
