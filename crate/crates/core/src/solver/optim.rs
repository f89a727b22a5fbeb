//! Box-constrained derivative-free and gradient minimizers used for best responses.

use std::cell::Cell;
use std::collections::VecDeque;

/// A scalar function to minimize.
pub trait Objective {
    fn value(&self, x: &[f64]) -> f64;

    /// Gradient estimate; central differences with per-coordinate `steps` by default.
    fn gradient(&self, x: &[f64], steps: &[f64], grad: &mut [f64]) {
        central_difference(self, x, steps, grad);
    }
}

impl<F> Objective for F
where
    F: Fn(&[f64]) -> f64,
{
    fn value(&self, x: &[f64]) -> f64 {
        self(x)
    }
}

pub fn central_difference<O: Objective + ?Sized>(
    f: &O,
    x: &[f64],
    steps: &[f64],
    grad: &mut [f64],
) {
    let mut probe = x.to_vec();
    for k in 0..x.len() {
        let h = steps[k];
        probe[k] = x[k] + h;
        let up = f.value(&probe);
        probe[k] = x[k] - h;
        let down = f.value(&probe);
        probe[k] = x[k];
        grad[k] = (up - down) / (2.0 * h);
    }
}

/// Per-coordinate closed interval constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Bounds {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), hi.len());
        Self { lo, hi }
    }

    pub fn unbounded(n: usize) -> Self {
        Self::new(vec![f64::NEG_INFINITY; n], vec![f64::INFINITY; n])
    }

    pub fn len(&self) -> usize {
        self.lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lo.is_empty()
    }

    pub fn project(&self, x: &mut [f64]) {
        for ((v, lo), hi) in x.iter_mut().zip(&self.lo).zip(&self.hi) {
            *v = v.clamp(*lo, *hi);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    /// Accepted iterations (simplex moves, or gradient steps).
    pub steps: usize,
}

/// Reflection, expansion, contraction and shrink coefficients.
const NM_REFLECT: f64 = 1.0;
const NM_EXPAND: f64 = 2.0;
const NM_CONTRACT: f64 = 0.5;
const NM_SHRINK: f64 = 0.5;

/// Nelder–Mead simplex search. The initial simplex is `x_init` plus one vertex per
/// coordinate offset by `initial_step[k]` (towards the interior if the offset
/// would leave the box). Every candidate is projected into `bounds` before it is
/// evaluated. Stops after `budget` evaluations or when the simplex has collapsed.
pub fn nelder_mead<O: Objective + ?Sized>(
    f: &O,
    x_init: &[f64],
    budget: usize,
    bounds: &Bounds,
    initial_step: &[f64],
) -> OptimResult {
    let n = x_init.len();
    let evaluations = Cell::new(0);
    let eval = |x: &[f64]| {
        evaluations.set(evaluations.get() + 1);
        f.value(x)
    };

    let mut x0 = x_init.to_vec();
    bounds.project(&mut x0);
    let f0 = eval(&x0);
    let mut simplex: Vec<(Vec<f64>, f64)> = vec![(x0.clone(), f0)];
    for k in 0..n {
        if simplex.len() >= budget {
            break;
        }
        let mut v = x0.clone();
        let step = initial_step[k];
        v[k] = if x0[k] + step <= bounds.hi[k] {
            x0[k] + step
        } else {
            x0[k] - step
        };
        bounds.project(&mut v);
        let fv = eval(&v);
        simplex.push((v, fv));
    }
    if simplex.len() < n + 1 {
        // budget too small to build a simplex: return the best probe
        return finish(simplex, evaluations.get(), 0);
    }

    let mut moves = 0;
    let mut centroid = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut trial2 = vec![0.0; n];
    loop {
        // stable sort keeps the incumbent first among ties
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        if worst - best <= 1e-15 * (1.0 + best.abs()) && diameter(&simplex) <= 1e-12 {
            break;
        }
        if evaluations.get() >= budget {
            break;
        }

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for (v, _) in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / n as f64;
            }
        }
        let worst_point = simplex[n].0.clone();
        let along = |scale: f64, out: &mut Vec<f64>| {
            for k in 0..n {
                out[k] = centroid[k] + scale * (centroid[k] - worst_point[k]);
            }
            bounds.project(out);
        };

        along(NM_REFLECT, &mut trial);
        let fr = eval(&trial);
        let second_worst = simplex[n - 1].1;

        if fr < best {
            if evaluations.get() >= budget {
                simplex[n] = (trial.clone(), fr);
                moves += 1;
                break;
            }
            along(NM_REFLECT * NM_EXPAND, &mut trial2);
            let fe = eval(&trial2);
            simplex[n] = if fe < fr {
                (trial2.clone(), fe)
            } else {
                (trial.clone(), fr)
            };
            moves += 1;
            continue;
        }
        if fr < second_worst {
            simplex[n] = (trial.clone(), fr);
            moves += 1;
            continue;
        }
        if evaluations.get() >= budget {
            if fr < worst {
                simplex[n] = (trial.clone(), fr);
            }
            break;
        }
        let (fc, outside) = if fr < worst {
            along(NM_REFLECT * NM_CONTRACT, &mut trial2);
            (eval(&trial2), true)
        } else {
            along(-NM_CONTRACT, &mut trial2);
            (eval(&trial2), false)
        };
        let accept = if outside { fc <= fr } else { fc < worst };
        if accept {
            simplex[n] = (trial2.clone(), fc);
            moves += 1;
            continue;
        }
        // shrink towards the best vertex
        let anchor = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            if evaluations.get() >= budget {
                break;
            }
            for (x, a) in vertex.0.iter_mut().zip(&anchor) {
                *x = a + NM_SHRINK * (*x - a);
            }
            bounds.project(&mut vertex.0);
            vertex.1 = eval(&vertex.0);
        }
        moves += 1;
    }
    finish(simplex, evaluations.get(), moves)
}

fn diameter(simplex: &[(Vec<f64>, f64)]) -> f64 {
    let base = &simplex[0].0;
    simplex[1..]
        .iter()
        .flat_map(|(v, _)| v.iter().zip(base).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max)
}

fn finish(simplex: Vec<(Vec<f64>, f64)>, evaluations: usize, steps: usize) -> OptimResult {
    let (x, value) = simplex
        .into_iter()
        .reduce(|best, cand| if cand.1 < best.1 { cand } else { best })
        .expect("nonempty simplex");
    OptimResult {
        x,
        value,
        evaluations,
        steps,
    }
}

const ARMIJO_C: f64 = 1e-4;
const MIN_STEP: f64 = 1e-12;
const STATIONARITY_TOL: f64 = 1e-8;
/// Curvature pairs kept for the quasi-Newton scaling.
const MEMORY: usize = 10;

/// Coordinates not held at a bound by a gradient pointing out of the box.
fn free_mask(x: &[f64], grad: &[f64], bounds: &Bounds) -> Vec<bool> {
    (0..x.len())
        .map(|k| {
            !((x[k] <= bounds.lo[k] && grad[k] > 0.0) || (x[k] >= bounds.hi[k] && grad[k] < 0.0))
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Limited-memory inverse-Hessian product `-H g` restricted to the free coordinates.
fn quasi_newton_direction(
    grad: &[f64],
    free: &[bool],
    pairs: &VecDeque<(Vec<f64>, Vec<f64>)>,
) -> Vec<f64> {
    let mut q: Vec<f64> = grad
        .iter()
        .zip(free)
        .map(|(g, &f)| if f { *g } else { 0.0 })
        .collect();
    let mut coef = Vec::with_capacity(pairs.len());
    for (s, y) in pairs.iter().rev() {
        let a = dot(s, &q) / dot(s, y);
        for (qk, yk) in q.iter_mut().zip(y) {
            *qk -= a * yk;
        }
        coef.push(a);
    }
    if let Some((s, y)) = pairs.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y), a) in pairs.iter().zip(coef.iter().rev()) {
        let b = dot(y, &q) / dot(s, y);
        for (qk, sk) in q.iter_mut().zip(s) {
            *qk += (a - b) * sk;
        }
    }
    q.iter()
        .zip(free)
        .map(|(v, &f)| if f { -v } else { 0.0 })
        .collect()
}

/// Projected gradient descent with finite-difference gradients.
///
/// Search directions are gradients rescaled by a limited-memory quasi-Newton
/// estimate of the inverse Hessian (plain steepest descent on the first step and
/// whenever the scaled direction fails). Trial points are projected into the box
/// and the step is halved until the Armijo condition holds along the projected
/// arc; a step below `1e-12` ends the search. Iterates never increase the objective.
pub fn projected_gradient<O: Objective + ?Sized>(
    f: &O,
    x_init: &[f64],
    iters: usize,
    fd_steps: &[f64],
    bounds: &Bounds,
) -> OptimResult {
    let n = x_init.len();
    let mut x = x_init.to_vec();
    bounds.project(&mut x);
    let mut fx = f.value(&x);
    let mut evaluations = 1 + 2 * n;
    let mut grad = vec![0.0; n];
    f.gradient(&x, fd_steps, &mut grad);

    let span = bounds
        .lo
        .iter()
        .zip(&bounds.hi)
        .map(|(l, h)| if (h - l).is_finite() { h - l } else { 1.0 })
        .fold(0.0f64, f64::max);
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>)> = VecDeque::with_capacity(MEMORY);
    let mut steps = 0;
    let mut trial = vec![0.0; n];
    let mut new_grad = vec![0.0; n];

    while steps < iters {
        // projected-gradient stationarity
        let pg = x
            .iter()
            .zip(&grad)
            .enumerate()
            .map(|(k, (xk, gk))| ((xk - gk).clamp(bounds.lo[k], bounds.hi[k]) - xk).abs())
            .fold(0.0f64, f64::max);
        if pg <= STATIONARITY_TOL {
            break;
        }
        let free = free_mask(&x, &grad, bounds);

        let mut accepted = None;
        for scaled in [true, false] {
            if scaled && pairs.is_empty() {
                continue;
            }
            let dir = if scaled {
                quasi_newton_direction(&grad, &free, &pairs)
            } else {
                pairs.clear();
                let gmax = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
                let scale = 0.1 * span / gmax;
                grad.iter().map(|g| -scale * g).collect()
            };
            let mut alpha = 1.0;
            while alpha >= MIN_STEP {
                for k in 0..n {
                    trial[k] = x[k] + alpha * dir[k];
                }
                bounds.project(&mut trial);
                let slope: f64 = (0..n).map(|k| grad[k] * (trial[k] - x[k])).sum();
                if slope >= 0.0 {
                    alpha *= 0.5;
                    continue;
                }
                let ft = f.value(&trial);
                evaluations += 1;
                if ft <= fx + ARMIJO_C * slope && ft < fx {
                    accepted = Some(ft);
                    break;
                }
                alpha *= 0.5;
            }
            if accepted.is_some() {
                break;
            }
        }
        let Some(ft) = accepted else { break };

        f.gradient(&trial, fd_steps, &mut new_grad);
        evaluations += 2 * n;
        let s: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = new_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * (dot(&s, &s) * dot(&y, &y)).sqrt() {
            if pairs.len() == MEMORY {
                pairs.pop_front();
            }
            pairs.push_back((s, y));
        }
        std::mem::swap(&mut x, &mut trial);
        std::mem::swap(&mut grad, &mut new_grad);
        fx = ft;
        steps += 1;
    }
    OptimResult {
        x,
        value: fx,
        evaluations,
        steps,
    }
}
