//! Derivative-free Nelder–Mead minimization with a fixed restart schedule.
//!
//! Each run stops when the simplex diameter drops below `xtol` and the
//! spread of vertex values below `ftol` (or the iteration budget is spent).
//! The search is then restarted from the best vertex with a fresh simplex
//! whose size shrinks by `restart_shrink` per restart. The overall result
//! counts as converged once a restarted run terminates on tolerance without
//! improving the best value by more than `ftol`.
//!
//! No randomness is involved: identical inputs give identical iterates.

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimplexConfig {
    pub initial_step: f64,
    pub xtol: f64,
    pub ftol: f64,
    pub max_iterations: usize,
    pub max_restarts: usize,
    pub restart_shrink: f64,
}

impl Default for SimplexConfig {
    fn default() -> Self {
        Self {
            initial_step: 0.1,
            xtol: 1e-10,
            ftol: 1e-12,
            max_iterations: 20_000,
            max_restarts: 12,
            restart_shrink: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimplexOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub restarts: usize,
    pub converged: bool,
    /// Best objective value after every iteration; non-increasing.
    pub history: Vec<f64>,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

/// Minimize `f` from `x0`.
///
/// `recenter` may map the best point to an equivalent one before each
/// restart (e.g. to remove a gauge freedom); the mapped point is only used
/// when its value is not worse.
pub fn minimize<F, R>(f: F, x0: &[f64], cfg: &SimplexConfig, recenter: R) -> SimplexOutcome
where
    F: Fn(&[f64]) -> f64,
    R: Fn(&[f64]) -> Vec<f64>,
{
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut best_x = x0.to_vec();
    let mut best_f = eval(&best_x);
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut step = cfg.initial_step;
    let mut settled_once = false;

    for restart in 0..=cfg.max_restarts {
        if restart > 0 {
            let mapped = recenter(&best_x);
            let fm = eval(&mapped);
            if fm <= best_f {
                best_x = mapped;
                best_f = fm;
            }
        }
        let run = nelder_mead(&eval, &best_x, best_f, step, cfg, &mut history);
        iterations += run.iterations;
        let improvement = best_f - run.f;
        if run.f <= best_f {
            best_x = run.x;
            best_f = run.f;
        }
        if run.settled {
            if settled_once && improvement <= cfg.ftol {
                return SimplexOutcome {
                    x: best_x,
                    f: best_f,
                    iterations,
                    restarts: restart,
                    converged: true,
                    history,
                };
            }
            settled_once = true;
        }
        step *= cfg.restart_shrink;
        if step < 10.0 * cfg.xtol {
            step = cfg.initial_step * 1e-3;
        }
    }

    SimplexOutcome {
        x: best_x,
        f: best_f,
        iterations,
        restarts: cfg.max_restarts,
        converged: false,
        history,
    }
}

struct Run {
    x: Vec<f64>,
    f: f64,
    iterations: usize,
    settled: bool,
}

fn nelder_mead(
    eval: &impl Fn(&[f64]) -> f64,
    x0: &[f64],
    f0: f64,
    step: f64,
    cfg: &SimplexConfig,
    history: &mut Vec<f64>,
) -> Run {
    let n = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), f0));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step;
        let fx = eval(&x);
        simplex.push((x, fx));
    }

    let mut iterations = 0;
    let mut last_best = f64::INFINITY;
    loop {
        // Stable sort keeps the incumbent first on ties.
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        debug_assert!(best <= last_best, "simplex best value increased");
        last_best = best;

        let spread = simplex[n].1 - best;
        let diameter = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if diameter <= cfg.xtol && spread <= cfg.ftol {
            return Run {
                x: simplex[0].0.clone(),
                f: best,
                iterations,
                settled: true,
            };
        }
        if iterations >= cfg.max_iterations {
            return Run {
                x: simplex[0].0.clone(),
                f: best,
                iterations,
                settled: false,
            };
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let xr = along(REFLECT);
        let fr = eval(&xr);
        if fr < simplex[0].1 {
            let xe = along(REFLECT * EXPAND);
            let fe = eval(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[n].1 {
                let xc = along(REFLECT * CONTRACT);
                let fc = eval(&xc);
                (xc, fc)
            } else {
                let xc = along(-CONTRACT);
                let fc = eval(&xc);
                (xc, fc)
            };
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let x_best = simplex[0].0.clone();
                for (x, fx) in simplex.iter_mut().skip(1) {
                    for (xi, bi) in x.iter_mut().zip(&x_best) {
                        *xi = bi + SHRINK * (*xi - bi);
                    }
                    *fx = eval(x);
                }
            }
        }
        history.push(simplex.iter().map(|s| s.1).fold(f64::INFINITY, f64::min));
    }
}
