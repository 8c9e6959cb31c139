//! Box-bounded Nelder–Mead simplex search.

#[derive(Debug, Clone)]
pub struct NelderMeadOptions {
    pub max_iterations: usize,
    /// Stop once max f − min f over the simplex falls below this.
    pub f_tolerance: f64,
    /// Initial simplex offset per coordinate.
    pub step: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

fn project(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((v, lo), hi) in x.iter_mut().zip(lower).zip(upper) {
        *v = v.clamp(*lo, *hi);
    }
}

/// Minimizes `f` from `x0`; every trial point is clamped into the box.
pub fn nelder_mead<F>(f: F, x0: &[f64], opts: &NelderMeadOptions) -> Minimum
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    let mut start = x0.to_vec();
    project(&mut start, &opts.lower, &opts.upper);
    simplex.push(start.clone());
    for i in 0..n {
        let mut v = start.clone();
        v[i] += opts.step[i];
        if v[i] > opts.upper[i] {
            v[i] = start[i] - opts.step[i];
        }
        project(&mut v, &opts.lower, &opts.upper);
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(v)).collect();

    let mut iterations = 0;
    let mut converged = false;
    let trial = |centroid: &[f64], worst: &[f64], coef: f64| -> Vec<f64> {
        let mut p: Vec<f64> = centroid.iter().zip(worst).map(|(c, w)| c + coef * (c - w)).collect();
        project(&mut p, &opts.lower, &opts.upper);
        p
    };

    loop {
        // order best..worst, ties by position for determinism
        let mut idx: Vec<usize> = (0..=n).collect();
        idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
        simplex = idx.iter().map(|&i| simplex[i].clone()).collect();
        values = idx.iter().map(|&i| values[i]).collect();

        let spread = values[n] - values[0];
        if spread.is_finite() && spread < opts.f_tolerance {
            converged = true;
            break;
        }
        if iterations >= opts.max_iterations {
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for v in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / n as f64;
            }
        }

        let reflected = trial(&centroid, &simplex[n], REFLECT);
        let fr = eval(&reflected);
        if fr < values[0] {
            let expanded = trial(&centroid, &simplex[n], EXPAND);
            let fe = eval(&expanded);
            if fe < fr {
                simplex[n] = expanded;
                values[n] = fe;
            } else {
                simplex[n] = reflected;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = reflected;
            values[n] = fr;
            continue;
        }
        // contraction: outside if the reflection helped at all, else inside
        let (contracted, fc) = if fr < values[n] {
            let c = trial(&centroid, &simplex[n], CONTRACT);
            let fc = eval(&c);
            (c, fc)
        } else {
            let c = trial(&centroid, &simplex[n], -CONTRACT);
            let fc = eval(&c);
            (c, fc)
        };
        if fc < fr.min(values[n]) {
            simplex[n] = contracted;
            values[n] = fc;
            continue;
        }
        let best = simplex[0].clone();
        for i in 1..=n {
            let mut v: Vec<f64> = best.iter().zip(&simplex[i]).map(|(b, x)| b + SHRINK * (x - b)).collect();
            project(&mut v, &opts.lower, &opts.upper);
            values[i] = eval(&v);
            simplex[i] = v;
        }
    }

    Minimum { x: simplex[0].clone(), f: values[0], iterations, converged }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(n: usize, lo: f64, hi: f64) -> NelderMeadOptions {
        NelderMeadOptions {
            max_iterations: 2_000,
            f_tolerance: 1e-14,
            step: vec![0.5; n],
            lower: vec![lo; n],
            upper: vec![hi; n],
        }
    }

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let m = nelder_mead(f, &[-1.2, 1.0], &opts(2, -10.0, 10.0));
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-3 && (m.x[1] - 1.0).abs() < 1e-3, "{:?}", m.x);
    }

    #[test]
    fn respects_bounds() {
        let f = |x: &[f64]| (x[0] - 5.0).powi(2) + (x[1] + 5.0).powi(2) + x[2].powi(2);
        let m = nelder_mead(f, &[0.0, 0.0, 0.3], &opts(3, -1.0, 1.0));
        assert!((m.x[0] - 1.0).abs() < 1e-6);
        assert!((m.x[1] + 1.0).abs() < 1e-6);
        assert!(m.x[2].abs() < 1e-3);
    }

    #[test]
    fn iteration_cap_reports_not_converged() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let mut o = opts(2, -10.0, 10.0);
        o.max_iterations = 5;
        let m = nelder_mead(f, &[-1.2, 1.0], &o);
        assert!(!m.converged);
        assert_eq!(m.iterations, 5);
    }
}
