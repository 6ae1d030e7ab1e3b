/// Outcome of a Nelder–Mead minimisation.
#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Derivative-free minimisation with the standard reflection/expansion/
/// contraction/shrink coefficients (1, 2, 1/2, 1/2).
///
/// Converged when every vertex lies within `x_tol` (max-norm) of the best
/// vertex. The search is restarted from the best point with a fresh simplex
/// until a restart no longer moves the best point by more than `x_tol`, which
/// catches the simplex collapsing away from a minimum.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], step: f64, x_tol: f64, max_eval: usize) -> NelderMeadResult
where
    F: FnMut(&[f64]) -> f64,
{
    let mut evaluations = 0;
    let mut best = x0.to_vec();
    let mut best_f = f(&best);
    evaluations += 1;
    let mut step = step;
    loop {
        let (x, fx, converged) = simplex_search(&mut f, &best, best_f, step, x_tol, max_eval, &mut evaluations);
        let moved = x.iter().zip(&best).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        best = x;
        best_f = fx;
        if !converged {
            return NelderMeadResult { x: best, fx: best_f, evaluations, converged: false };
        }
        if moved <= x_tol {
            return NelderMeadResult { x: best, fx: best_f, evaluations, converged: true };
        }
        step = (moved * 2.0).max(x_tol * 100.0).min(step);
    }
}

fn simplex_search<F>(
    f: &mut F,
    start: &[f64],
    start_f: f64,
    step: f64,
    x_tol: f64,
    max_eval: usize,
    evaluations: &mut usize,
) -> (Vec<f64>, f64, bool)
where
    F: FnMut(&[f64]) -> f64,
{
    let dim = start.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    simplex.push((start.to_vec(), start_f));
    for i in 0..dim {
        let mut v = start.to_vec();
        v[i] += step;
        let fv = f(&v);
        *evaluations += 1;
        simplex.push((v, fv));
    }
    let eval = |f: &mut F, v: &[f64], evaluations: &mut usize| {
        *evaluations += 1;
        let y = f(v);
        if y.is_nan() {
            f64::INFINITY
        } else {
            y
        }
    };

    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[1..]
            .iter()
            .flat_map(|(v, _)| v.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if spread <= x_tol {
            let (x, fx) = simplex.swap_remove(0);
            return (x, fx, true);
        }
        if *evaluations >= max_eval {
            let (x, fx) = simplex.swap_remove(0);
            return (x, fx, false);
        }

        let mut centroid = vec![0.0; dim];
        for (v, _) in &simplex[..dim] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / dim as f64;
            }
        }
        let worst = simplex[dim].clone();
        let along = |t: f64| -> Vec<f64> { centroid.iter().zip(&worst.0).map(|(c, w)| c + t * (w - c)).collect() };

        let reflected = along(-1.0);
        let f_reflected = eval(f, &reflected, evaluations);
        if f_reflected < simplex[0].1 {
            let expanded = along(-2.0);
            let f_expanded = eval(f, &expanded, evaluations);
            simplex[dim] = if f_expanded < f_reflected { (expanded, f_expanded) } else { (reflected, f_reflected) };
            continue;
        }
        if f_reflected < simplex[dim - 1].1 {
            simplex[dim] = (reflected, f_reflected);
            continue;
        }
        let (contracted, f_contracted) = if f_reflected < worst.1 {
            let c = along(-0.5);
            let fc = eval(f, &c, evaluations);
            (c, fc)
        } else {
            let c = along(0.5);
            let fc = eval(f, &c, evaluations);
            (c, fc)
        };
        if f_contracted < worst.1.min(f_reflected) {
            simplex[dim] = (contracted, f_contracted);
            continue;
        }
        let best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let shrunk: Vec<f64> = best.iter().zip(&vertex.0).map(|(b, x)| b + 0.5 * (x - b)).collect();
            let fs = eval(f, &shrunk, evaluations);
            *vertex = (shrunk, fs);
        }
    }
}
