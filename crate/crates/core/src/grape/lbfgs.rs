//! Limited-memory BFGS minimization with a strong-Wolfe line search.

use std::collections::VecDeque;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsSettings {
    pub memory: usize,
    pub max_iterations: usize,
    /// Stop once `‖∇f‖_∞` falls below this.
    pub gradient_tolerance: f64,
    /// Sufficient-decrease constant.
    pub c1: f64,
    /// Curvature constant.
    pub c2: f64,
    pub max_line_search: usize,
}

impl Default for LbfgsSettings {
    fn default() -> Self {
        Self {
            memory: 10,
            max_iterations: 200,
            gradient_tolerance: 1e-6,
            c1: 1e-4,
            c2: 0.9,
            max_line_search: 30,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIterations,
    LineSearchFailure,
}

#[derive(Debug, Clone)]
pub struct LbfgsReport {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub iterations: usize,
    pub termination: Termination,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn axpy(x: &[f64], alpha: f64, d: &[f64]) -> Vec<f64> {
    x.iter().zip(d).map(|(xi, di)| xi + alpha * di).collect()
}

struct Point {
    alpha: f64,
    value: f64,
    slope: f64,
    x: Vec<f64>,
    gradient: Vec<f64>,
}

/// Minimizer of the cubic through two points with values and slopes,
/// clamped to `[lo, hi]`; bisection when the cubic has no minimizer.
fn cubic_minimizer(a: &Point, b: &Point, lo: f64, hi: f64) -> f64 {
    let d1 = a.slope + b.slope - 3.0 * (a.value - b.value) / (a.alpha - b.alpha);
    let disc = d1 * d1 - a.slope * b.slope;
    if disc >= 0.0 {
        let d2 = disc.sqrt().copysign(b.alpha - a.alpha);
        let t = b.alpha - (b.alpha - a.alpha) * (b.slope + d2 - d1) / (b.slope - a.slope + 2.0 * d2);
        if t.is_finite() {
            return t.clamp(lo, hi);
        }
    }
    0.5 * (lo + hi)
}

struct LineSearch<'a, F> {
    objective: &'a mut F,
    x: &'a [f64],
    direction: &'a [f64],
    value0: f64,
    slope0: f64,
    c1: f64,
    c2: f64,
    budget: usize,
}

impl<F> LineSearch<'_, F>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    fn eval(&mut self, alpha: f64) -> Result<Point> {
        let x = axpy(self.x, alpha, self.direction);
        let (value, gradient) = (self.objective)(&x)?;
        if !value.is_finite() || gradient.iter().any(|g| !g.is_finite()) {
            return Err(Error::Numerical(format!("objective is not finite at step {alpha:e}")));
        }
        self.budget = self.budget.saturating_sub(1);
        Ok(Point {
            alpha,
            value,
            slope: dot(&gradient, self.direction),
            x,
            gradient,
        })
    }

    fn armijo(&self, p: &Point) -> bool {
        p.value <= self.value0 + self.c1 * p.alpha * self.slope0
    }

    fn curvature(&self, p: &Point) -> bool {
        p.slope.abs() <= -self.c2 * self.slope0
    }

    /// Returns a point satisfying the strong Wolfe conditions, if found.
    fn run(mut self, initial_step: f64) -> Result<Option<Point>> {
        let mut prev = Point {
            alpha: 0.0,
            value: self.value0,
            slope: self.slope0,
            x: self.x.to_vec(),
            gradient: Vec::new(),
        };
        let mut alpha = initial_step;
        let mut first = true;
        while self.budget > 0 {
            let p = self.eval(alpha)?;
            if !self.armijo(&p) || (!first && p.value >= prev.value) {
                return self.zoom(prev, p);
            }
            if self.curvature(&p) {
                return Ok(Some(p));
            }
            if p.slope >= 0.0 {
                return self.zoom(p, prev);
            }
            first = false;
            let next = cubic_minimizer(&prev, &p, p.alpha * 1.1, p.alpha * 4.0);
            prev = p;
            alpha = next;
        }
        Ok(None)
    }

    /// Shrinks the bracket `[low, high]`, where `low` has the lower value.
    fn zoom(&mut self, mut low: Point, mut high: Point) -> Result<Option<Point>> {
        while self.budget > 0 {
            let (a, b) = (low.alpha.min(high.alpha), low.alpha.max(high.alpha));
            let width = b - a;
            if width <= 1e-14 * b.max(1e-300) {
                break;
            }
            let alpha = cubic_minimizer(&low, &high, a + 0.1 * width, b - 0.1 * width);
            let p = self.eval(alpha)?;
            if !self.armijo(&p) || p.value >= low.value {
                high = p;
            } else {
                if self.curvature(&p) {
                    return Ok(Some(p));
                }
                if p.slope * (high.alpha - low.alpha) >= 0.0 {
                    high = low;
                }
                low = p;
            }
        }
        // Out of budget: keep a strict decrease if one was found.
        Ok((low.alpha > 0.0 && self.armijo(&low)).then_some(low))
    }
}

/// Minimizes `objective` from `x0`. `on_accept` sees every accepted iterate,
/// starting with `x0`, together with its objective value.
pub fn minimize<F, C>(
    mut objective: F,
    x0: Vec<f64>,
    settings: &LbfgsSettings,
    mut on_accept: C,
) -> Result<LbfgsReport>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
    C: FnMut(&[f64], f64),
{
    let (mut value, mut gradient) = objective(&x0)?;
    if !value.is_finite() || gradient.iter().any(|g| !g.is_finite()) {
        return Err(Error::Numerical("objective is not finite at the starting point".into()));
    }
    let mut x = x0;
    on_accept(&x, value);

    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(settings.memory);
    let mut iterations = 0;
    let termination = loop {
        if inf_norm(&gradient) < settings.gradient_tolerance {
            break Termination::Converged;
        }
        if iterations >= settings.max_iterations {
            break Termination::MaxIterations;
        }

        // Two-loop recursion for d = -H∇f.
        let mut q = gradient.clone();
        let mut alphas = Vec::with_capacity(history.len());
        for (s, y, rho) in history.iter().rev() {
            let a = rho * dot(s, &q);
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
            alphas.push(a);
        }
        let gamma = history
            .back()
            .map(|(s, y, _)| dot(s, y) / dot(y, y))
            .unwrap_or(1.0);
        q.iter_mut().for_each(|qi| *qi *= gamma);
        for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
        }
        let mut direction: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&gradient, &direction);
        let mut initial_step = 1.0;
        if history.is_empty() || !(slope < 0.0) {
            history.clear();
            direction = gradient.iter().map(|g| -g).collect();
            slope = dot(&gradient, &direction);
            initial_step = 1.0 / inf_norm(&gradient);
        }

        let search = LineSearch {
            objective: &mut objective,
            x: &x,
            direction: &direction,
            value0: value,
            slope0: slope,
            c1: settings.c1,
            c2: settings.c2,
            budget: settings.max_line_search,
        };
        let accepted = match search.run(initial_step)? {
            Some(p) => p,
            None if !history.is_empty() => {
                // Retry once along steepest descent with a fresh memory.
                history.clear();
                continue;
            }
            None => break Termination::LineSearchFailure,
        };

        let s: Vec<f64> = accepted.x.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = accepted.gradient.iter().zip(&gradient).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
            if history.len() == settings.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        x = accepted.x;
        value = accepted.value;
        gradient = accepted.gradient;
        iterations += 1;
        on_accept(&x, value);
    };

    Ok(LbfgsReport {
        x,
        value,
        gradient,
        iterations,
        termination,
    })
}
