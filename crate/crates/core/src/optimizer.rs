//! Bound-constrained derivative-free minimization.
//!
//! The method keeps a simplex of `n + 1` evaluated points and fits the
//! linear model interpolating them. Each iteration minimizes that model
//! over the intersection of the trust region `|d| <= delta` and the box, in the
//! manner of Powell's COBYLA with the box as its only constraints. The
//! resolution `rho` starts at a tenth of the narrowest bound interval and only
//! ever shrinks; the trust radius stays at or above it, doubling after steps
//! the model predicted well and halving after poor ones. Every evaluated point
//! lies inside the box.
//!
//! The run stops when the evaluation budget is spent, or when the radius is
//! so small that neither the model's best step nor the spread of values over
//! the simplex exceeds the function tolerance.

use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    /// Objective-evaluation budget.
    pub max_evaluations: usize,
    pub function_tolerance: f64,
    pub bounds: Vec<(f64, f64)>,
    /// Orients the initial simplex.
    pub seed: u64,
}

impl OptimizerConfig {
    pub fn new(max_evaluations: usize, bounds: Vec<(f64, f64)>) -> Self {
        OptimizerConfig {
            max_evaluations,
            function_tolerance: 1e-8,
            bounds,
            seed: 0,
        }
    }

    fn validate(&self, x0: &[f64]) -> Result<()> {
        if self.max_evaluations == 0 {
            return Err(Error::domain("evaluation budget must be positive"));
        }
        if !(self.function_tolerance > 0.0) {
            return Err(Error::domain("function tolerance must be positive"));
        }
        if x0.is_empty() || x0.len() != self.bounds.len() {
            return Err(Error::domain(format!(
                "starting point has {} coordinates, {} bounds given",
                x0.len(),
                self.bounds.len()
            )));
        }
        for (i, (&x, &(lo, hi))) in x0.iter().zip(&self.bounds).enumerate() {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::domain(format!("bound {i} is empty or unbounded: [{lo}, {hi}]")));
            }
            if !(lo..=hi).contains(&x) {
                return Err(Error::domain(format!("x0[{i}] = {x} lies outside [{lo}, {hi}]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    BudgetExhausted,
    ToleranceMet,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub point: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizationTrace {
    pub evaluations: Vec<Evaluation>,
    pub best_point: Vec<f64>,
    pub best_value: f64,
    pub termination: Termination,
}

impl OptimizationTrace {
    /// Best value seen after each evaluation.
    pub fn running_best(&self) -> Vec<f64> {
        self.evaluations
            .iter()
            .scan(f64::INFINITY, |best, e| {
                *best = best.min(e.value);
                Some(*best)
            })
            .collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.evaluations.iter().map(|e| e.value).collect()
    }
}

/// Signals that the evaluation budget ran out mid-iteration.
struct OutOfBudget;

struct Evaluator<'a, F> {
    objective: F,
    bounds: &'a [(f64, f64)],
    budget: usize,
    trace: Vec<Evaluation>,
}

impl<F: FnMut(&[f64]) -> f64> Evaluator<'_, F> {
    fn eval(&mut self, x: Vec<f64>) -> std::result::Result<f64, OutOfBudget> {
        if self.trace.len() >= self.budget {
            return Err(OutOfBudget);
        }
        debug_assert!(x.iter().zip(self.bounds).all(|(v, (lo, hi))| (lo..=hi).contains(&v)));
        let raw = (self.objective)(&x);
        let value = if raw.is_nan() { f64::INFINITY } else { raw };
        self.trace.push(Evaluation { point: x, value });
        Ok(value)
    }
}

fn clamp_to(x: &mut [f64], bounds: &[(f64, f64)]) {
    for (v, &(lo, hi)) in x.iter_mut().zip(bounds) {
        *v = v.clamp(lo, hi);
    }
}

/// Minimizes `g . d` over `|d| <= rho`, `lower <= d <= upper` (with
/// `lower <= 0 <= upper`). The minimizer has the form `clip(-t g)`; `t` is
/// found by growing the clipped set until it is stable.
fn trust_region_step(g: &[f64], lower: &[f64], upper: &[f64], rho: f64) -> Vec<f64> {
    let n = g.len();
    let mut d = vec![0.0; n];
    let mut clipped = vec![false; n];
    loop {
        let used: f64 = (0..n).filter(|&i| clipped[i]).map(|i| d[i] * d[i]).sum();
        let free_norm: f64 = (0..n).filter(|&i| !clipped[i]).map(|i| g[i] * g[i]).sum();
        if free_norm == 0.0 {
            break;
        }
        let t = ((rho * rho - used).max(0.0) / free_norm).sqrt();
        let mut changed = false;
        for i in 0..n {
            if clipped[i] {
                continue;
            }
            let v = -t * g[i];
            if v < lower[i] || v > upper[i] {
                d[i] = v.clamp(lower[i], upper[i]);
                clipped[i] = true;
                changed = true;
            } else {
                d[i] = v;
            }
        }
        if !changed {
            break;
        }
    }
    d
}

struct Simplex {
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
}

/// Interpolation geometry relative to the best vertex.
struct Geometry {
    best: usize,
    /// Model gradient.
    gradient: Vec<f64>,
    /// Rows of the inverse direction matrix; row `r` belongs to `others[r]`.
    inverse: DMatrix<f64>,
    others: Vec<usize>,
}

impl Simplex {
    fn best(&self) -> usize {
        let mut best = 0;
        for (j, &v) in self.values.iter().enumerate() {
            if v < self.values[best] {
                best = j;
            }
        }
        best
    }

    fn geometry(&self) -> Option<Geometry> {
        let best = self.best();
        let n = self.points[0].len();
        let others: Vec<usize> = (0..=n).filter(|&j| j != best).collect();
        let xb = &self.points[best];
        let dirs = DMatrix::from_fn(n, n, |r, c| self.points[others[r]][c] - xb[c]);
        let inverse = dirs.try_inverse()?;
        let df = DVector::from_iterator(n, others.iter().map(|&j| self.values[j] - self.values[best]));
        let grad = &inverse * df;
        if grad.iter().any(|v| !v.is_finite()) {
            return None;
        }
        // inverse columns are dual to the direction rows; store them as rows
        Some(Geometry {
            best,
            gradient: grad.iter().copied().collect(),
            inverse: inverse.transpose(),
            others,
        })
    }

    fn spread(&self) -> f64 {
        let hi = self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = self.values.iter().copied().fold(f64::INFINITY, f64::min);
        hi - lo
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Derivative-free minimization of `objective` inside `config.bounds`,
/// starting from `x0`. Returns every evaluation in order.
pub fn minimize<F>(objective: F, x0: &[f64], config: &OptimizerConfig) -> Result<OptimizationTrace>
where
    F: FnMut(&[f64]) -> f64,
{
    config.validate(x0)?;
    let bounds = &config.bounds;
    let n = x0.len();
    let mut ev = Evaluator {
        objective,
        bounds,
        budget: config.max_evaluations,
        trace: Vec::new(),
    };
    let min_width = bounds.iter().map(|(lo, hi)| hi - lo).fold(f64::INFINITY, f64::min);
    let mut rho = 0.1 * min_width;
    let rho_floor = 1e-12 * min_width.max(1.0);
    let delta_max = 0.5 * min_width;
    let mut delta = rho;
    let ftol = config.function_tolerance;

    let termination = (|| -> std::result::Result<Termination, OutOfBudget> {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut simplex = Simplex {
            points: vec![x0.to_vec()],
            values: vec![ev.eval(x0.to_vec())?],
        };
        for i in 0..n {
            let (lo, hi) = bounds[i];
            let mut step = if rng.gen::<bool>() { rho } else { -rho };
            if !(lo..=hi).contains(&(x0[i] + step)) {
                step = -step;
            }
            let mut x = x0.to_vec();
            x[i] += step;
            clamp_to(&mut x, bounds);
            simplex.values.push(ev.eval(x.clone())?);
            simplex.points.push(x);
        }

        loop {
            let Some(geo) = simplex.geometry() else {
                rebuild(&mut simplex, &mut ev, delta, bounds)?;
                continue;
            };
            let xb = simplex.points[geo.best].clone();
            let fb = simplex.values[geo.best];
            let lower: Vec<f64> = xb.iter().zip(bounds).map(|(x, (lo, _))| lo - x).collect();
            let upper: Vec<f64> = xb.iter().zip(bounds).map(|(x, (_, hi))| hi - x).collect();
            let d = trust_region_step(&geo.gradient, &lower, &upper, delta);
            let predicted = -dot(&geo.gradient, &d);
            let step_len = d.iter().map(|v| v * v).sum::<f64>().sqrt();

            let mut reduce = false;
            if step_len < 0.5 * rho || predicted <= 0.0 {
                delta = (0.5 * delta).max(rho);
                if !improve_geometry(&mut simplex, &geo, &mut ev, delta, bounds)? {
                    reduce = true;
                }
            } else {
                let mut x = xb.clone();
                for (v, dv) in x.iter_mut().zip(&d) {
                    *v += dv;
                }
                clamp_to(&mut x, bounds);
                let f = ev.eval(x.clone())?;
                let ratio = (fb - f) / predicted;
                if ratio > 0.7 && step_len > 0.9 * delta {
                    delta = (2.0 * delta).min(delta_max);
                } else if ratio < 0.1 {
                    delta = (0.5 * delta).max(rho);
                }
                insert_point(&mut simplex, &geo, x, f, delta);
                if ratio < 0.1 {
                    let repaired = match simplex.geometry() {
                        Some(g) => improve_geometry(&mut simplex, &g, &mut ev, delta, bounds)?,
                        None => false,
                    };
                    reduce = !repaired && delta <= rho;
                }
            }

            if reduce {
                if predicted.max(0.0) < ftol && simplex.spread() < ftol || rho <= rho_floor {
                    return Ok(Termination::ToleranceMet);
                }
                rho = (0.5 * rho).max(rho_floor);
                delta = rho;
            }
        }
    })()
    .unwrap_or(Termination::BudgetExhausted);

    let trace = ev.trace;
    let best = trace
        .iter()
        .enumerate()
        .fold(0, |b, (i, e)| if e.value < trace[b].value { i } else { b });
    Ok(OptimizationTrace {
        best_point: trace[best].point.clone(),
        best_value: trace[best].value,
        evaluations: trace,
        termination,
    })
}

/// Puts a freshly evaluated point into the simplex, replacing the vertex
/// whose removal best preserves volume (weighted toward distant vertices).
/// The best vertex is only displaced when the new point beats it.
fn insert_point(simplex: &mut Simplex, geo: &Geometry, x: Vec<f64>, f: f64, rho: f64) {
    let xb = &simplex.points[geo.best];
    let rel: Vec<f64> = x.iter().zip(xb).map(|(a, b)| a - b).collect();
    // barycentric weights of x: mu_r for the non-best vertices, the rest on best
    let mu: Vec<f64> = (0..geo.others.len())
        .map(|r| dot(geo.inverse.row(r).transpose().as_slice(), &rel))
        .collect();
    let mu_best = 1.0 - mu.iter().sum::<f64>();

    let score = |j: usize, lambda: f64| {
        let dist = distance(&simplex.points[j], &x) / rho;
        lambda.abs() * dist.max(1.0).powi(2)
    };
    let mut choice = None;
    let mut best_score = 1e-8;
    for (r, &j) in geo.others.iter().enumerate() {
        let s = score(j, mu[r]);
        if s > best_score {
            best_score = s;
            choice = Some(j);
        }
    }
    if f < simplex.values[geo.best] {
        let s = score(geo.best, mu_best);
        if s > best_score || choice.is_none() {
            choice = Some(geo.best);
        }
    }
    if let Some(j) = choice {
        simplex.points[j] = x;
        simplex.values[j] = f;
    }
}

/// Replaces a vertex that is too far from the best point or too close to the
/// face spanned by the others. Returns `false` if the simplex was acceptable.
fn improve_geometry<F: FnMut(&[f64]) -> f64>(
    simplex: &mut Simplex,
    geo: &Geometry,
    ev: &mut Evaluator<'_, F>,
    rho: f64,
    bounds: &[(f64, f64)],
) -> std::result::Result<bool, OutOfBudget> {
    let xb = simplex.points[geo.best].clone();
    let mut far: Option<(usize, f64)> = None;
    let mut flat: Option<(usize, f64)> = None;
    for (r, &j) in geo.others.iter().enumerate() {
        let dist = distance(&simplex.points[j], &xb);
        if dist > 2.1 * rho && far.is_none_or(|(_, d)| dist > d) {
            far = Some((r, dist));
        }
        let height = 1.0 / geo.inverse.row(r).norm();
        if height < 0.25 * rho && flat.is_none_or(|(_, h)| height < h) {
            flat = Some((r, height));
        }
    }
    let Some((r, _)) = far.or(flat) else {
        return Ok(false);
    };
    let j = geo.others[r];
    let normal = geo.inverse.row(r);
    let norm = normal.norm();
    let dir: Vec<f64> = normal.iter().map(|v| rho * v / norm).collect();
    // head downhill on the model when both orientations fit in the box
    let sign = if dot(&geo.gradient, &dir) > 0.0 { -1.0 } else { 1.0 };
    let candidate = |s: f64| -> Vec<f64> { xb.iter().zip(&dir).map(|(x, d)| x + s * d).collect() };
    let inside = |x: &[f64]| x.iter().zip(bounds).all(|(v, (lo, hi))| (lo..=hi).contains(&v));
    let mut x = candidate(sign);
    if !inside(&x) {
        let flipped = candidate(-sign);
        x = if inside(&flipped) { flipped } else { x };
        clamp_to(&mut x, bounds);
    }
    if distance(&x, &xb) < 1e-3 * rho {
        return Ok(false);
    }
    let f = ev.eval(x.clone())?;
    simplex.points[j] = x;
    simplex.values[j] = f;
    Ok(true)
}

/// Rebuilds a degenerate simplex as coordinate steps around the best vertex.
fn rebuild<F: FnMut(&[f64]) -> f64>(
    simplex: &mut Simplex,
    ev: &mut Evaluator<'_, F>,
    rho: f64,
    bounds: &[(f64, f64)],
) -> std::result::Result<(), OutOfBudget> {
    let best = simplex.best();
    let xb = simplex.points[best].clone();
    let fb = simplex.values[best];
    let mut points = vec![xb.clone()];
    let mut values = vec![fb];
    for (i, &(lo, hi)) in bounds.iter().enumerate() {
        let mut x = xb.clone();
        x[i] = if xb[i] + rho <= hi { xb[i] + rho } else { (xb[i] - rho).max(lo) };
        values.push(ev.eval(x.clone())?);
        points.push(x);
    }
    simplex.points = points;
    simplex.values = values;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn convex_one_dimensional() {
        let cfg = OptimizerConfig::new(100, vec![(-10.0, 10.0)]);
        let t = minimize(|x| (x[0] - 1.0).powi(2), &[3.0], &cfg).unwrap();
        assert!((t.best_point[0] - 1.0).abs() < 1e-3, "{:?}", t.best_point);
        assert!(t.evaluations.len() <= 100);
    }

    #[test]
    fn budget_is_respected() {
        let cfg = OptimizerConfig::new(10, vec![(-5.0, 5.0); 4]);
        let t = minimize(|x| x.iter().map(|v| v.sin()).sum(), &[1.0; 4], &cfg).unwrap();
        assert_eq!(t.evaluations.len(), 10);
        assert_eq!(t.termination, Termination::BudgetExhausted);
        let cfg = OptimizerConfig::new(2, vec![(-5.0, 5.0); 4]);
        assert_eq!(minimize(|x| x[0], &[0.0; 4], &cfg).unwrap().evaluations.len(), 2);
    }

    #[test]
    fn minimum_on_box_corner() {
        let cfg = OptimizerConfig::new(500, vec![(0.5, 2.0); 2]);
        let t = minimize(|x| x[0] * x[0] + x[1] * x[1], &[1.7, 1.2], &cfg).unwrap();
        assert!(distance(&t.best_point, &[0.5, 0.5]) < 1e-3, "{:?}", t.best_point);
    }

    #[test]
    fn rosenbrock_progress() {
        let cfg = OptimizerConfig::new(3000, vec![(-2.0, 2.0); 2]);
        let f = |x: &[f64]| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2);
        let t = minimize(f, &[-1.2, 1.0], &cfg).unwrap();
        assert!(t.best_value < 1e-3, "best {}", t.best_value);
    }

    #[test]
    fn tolerance_termination() {
        let cfg = OptimizerConfig::new(10_000, vec![(-1.0, 1.0); 3]);
        let t = minimize(|x| x.iter().map(|v| (v - 0.3).powi(2)).sum(), &[0.9, -0.9, 0.0], &cfg).unwrap();
        assert_eq!(t.termination, Termination::ToleranceMet);
        assert!(t.best_value < 1e-6);
    }

    #[test]
    fn trace_contract() {
        let cfg = OptimizerConfig {
            seed: 5,
            ..OptimizerConfig::new(200, vec![(0.0, 6.0), (0.0, 3.0), (0.0, 6.0)])
        };
        let f = |x: &[f64]| (x[0] * 1.3).sin() + (x[1] * x[2]).cos() + 0.1 * x[2];
        let a = minimize(f, &[1.0, 1.0, 1.0], &cfg).unwrap();
        let b = minimize(f, &[1.0, 1.0, 1.0], &cfg).unwrap();
        assert_eq!(a, b);
        let best = a.running_best();
        assert!(best.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(*best.last().unwrap(), a.best_value);
        for e in &a.evaluations {
            assert!(e.point.iter().zip(&cfg.bounds).all(|(v, (lo, hi))| (lo..=hi).contains(&v)));
        }
    }

    #[test]
    fn invalid_inputs() {
        let cfg = OptimizerConfig::new(10, vec![(0.0, 1.0)]);
        assert!(minimize(|x| x[0], &[2.0], &cfg).is_err());
        assert!(minimize(|x| x[0], &[0.5, 0.5], &cfg).is_err());
        let empty = OptimizerConfig::new(10, vec![(1.0, 1.0)]);
        assert!(minimize(|x| x[0], &[1.0], &empty).is_err());
        let zero_tol = OptimizerConfig {
            function_tolerance: 0.0,
            ..cfg.clone()
        };
        assert!(minimize(|x| x[0], &[0.5], &zero_tol).is_err());
    }

    #[test]
    fn step_solver_respects_ball_and_box() {
        let d = trust_region_step(&[1.0, -1.0], &[-10.0; 2], &[10.0; 2], 1.0);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((d[0] + s).abs() < 1e-12 && (d[1] - s).abs() < 1e-12);
        // first coordinate blocked at its bound, the rest of the radius goes to the second
        let d = trust_region_step(&[1.0, -1.0], &[-0.1, -10.0], &[10.0; 2], 1.0);
        assert!((d[0] + 0.1).abs() < 1e-12);
        assert!((d[1] - (1.0f64 - 0.01).sqrt()).abs() < 1e-12);
        let d = trust_region_step(&[0.0, 0.0], &[-1.0; 2], &[1.0; 2], 1.0);
        assert_eq!(d, vec![0.0, 0.0]);
    }
}
