//! Momentum gradient descent and BFGS on a generic differentiable objective.
//!
//! Both optimizers keep the best point they evaluate and return it, so the
//! returned value never exceeds the starting value.

use crate::{Error, Result};

pub trait Objective {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    /// Writes the gradient into `grad` and returns the value.
    fn value_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64;
}

#[derive(Debug, Clone, PartialEq)]
pub struct GdConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
}

impl Default for GdConfig {
    fn default() -> Self {
        GdConfig {
            learning_rate: 0.05,
            momentum: 0.9,
            epochs: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BfgsConfig {
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    /// Sufficient-decrease constant of the Armijo condition.
    pub armijo: f64,
    pub max_line_search_steps: usize,
}

impl Default for BfgsConfig {
    fn default() -> Self {
        BfgsConfig {
            max_iterations: 500,
            gradient_tolerance: 1e-8,
            armijo: 1e-4,
            max_line_search_steps: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Heavy-ball gradient descent. The gradient is multiplied by
/// `gradient_scale` before each step (e.g. `1 / n` to step on a mean loss
/// while reporting the summed one).
pub fn gradient_descent<O: Objective>(
    obj: &O,
    x0: &[f64],
    config: &GdConfig,
    gradient_scale: f64,
) -> Result<OptimResult> {
    let n = obj.dim();
    let mut x = x0.to_vec();
    let mut velocity = vec![0.0; n];
    let mut grad = vec![0.0; n];
    let mut best_x = x.clone();
    let mut best = f64::INFINITY;
    for epoch in 0..=config.epochs {
        let f = obj.value_and_gradient(&x, &mut grad);
        if !f.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            if epoch == 0 {
                return Err(Error::Diverged(
                    "non-finite cost at the starting point".into(),
                ));
            }
            return Err(Error::Diverged(format!(
                "non-finite cost after {epoch} gradient steps"
            )));
        }
        if f < best {
            best = f;
            best_x.copy_from_slice(&x);
        }
        if epoch == config.epochs {
            break;
        }
        for ((xi, vi), gi) in x.iter_mut().zip(velocity.iter_mut()).zip(&grad) {
            *vi = config.momentum * *vi - config.learning_rate * gradient_scale * gi;
            *xi += *vi;
        }
    }
    Ok(OptimResult {
        x: best_x,
        value: best,
        iterations: config.epochs,
        converged: false,
    })
}

/// Quasi-Newton minimization with the BFGS inverse-Hessian update and a
/// backtracking line search (quadratic interpolation, Armijo condition).
pub fn bfgs<O: Objective>(obj: &O, x0: &[f64], config: &BfgsConfig) -> Result<OptimResult> {
    let n = obj.dim();
    let mut x = x0.to_vec();
    let mut grad = vec![0.0; n];
    let mut f = obj.value_and_gradient(&x, &mut grad);
    if !f.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::Diverged(
            "non-finite cost at the BFGS starting point".into(),
        ));
    }
    let mut h = identity(n);
    let mut first_update = true;
    let mut direction = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut new_grad = vec![0.0; n];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < config.max_iterations {
        if norm(&grad) < config.gradient_tolerance {
            converged = true;
            break;
        }
        iterations += 1;
        mat_vec_neg(&h, &grad, &mut direction);
        let mut slope = dot(&grad, &direction);
        if !(slope < 0.0) {
            h = identity(n);
            first_update = true;
            for (d, g) in direction.iter_mut().zip(&grad) {
                *d = -g;
            }
            slope = -dot(&grad, &grad);
        }

        let Some(alpha) = line_search(obj, &x, f, slope, &direction, &mut trial, config) else {
            break;
        };

        for ((t, xi), d) in trial.iter_mut().zip(&x).zip(&direction) {
            *t = xi + alpha * d;
        }
        let f_new = obj.value_and_gradient(&trial, &mut new_grad);
        if !f_new.is_finite() || new_grad.iter().any(|g| !g.is_finite()) {
            break;
        }
        let s: Vec<f64> = direction.iter().map(|d| alpha * d).collect();
        let y: Vec<f64> = new_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) {
            if first_update {
                let gamma = sy / dot(&y, &y);
                h = identity(n);
                for i in 0..n {
                    h[i * n + i] = gamma;
                }
                first_update = false;
            }
            bfgs_update(&mut h, &s, &y, sy);
        }
        if f_new > f {
            break;
        }
        x.copy_from_slice(&trial);
        grad.copy_from_slice(&new_grad);
        f = f_new;
    }
    Ok(OptimResult {
        x,
        value: f,
        iterations,
        converged,
    })
}

fn identity(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
    }
    m
}

fn mat_vec_neg(h: &[f64], v: &[f64], out: &mut [f64]) {
    let n = v.len();
    for (i, o) in out.iter_mut().enumerate() {
        *o = -dot(&h[i * n..(i + 1) * n], v);
    }
}

/// `H ← (I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ` with `ρ = 1 / yᵀs`, expanded as
/// `H + ((sᵀy + yᵀHy) ρ²) s sᵀ − ρ (H y sᵀ + s yᵀ H)`.
fn bfgs_update(h: &mut [f64], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..n).map(|i| dot(&h[i * n..(i + 1) * n], y)).collect();
    let yhy = dot(y, &hy);
    let c = (sy + yhy) * rho * rho;
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] += c * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
        }
    }
}

/// Returns a step satisfying the Armijo condition, trying the unit step and
/// the minimizer of the quadratic through `f(0)`, `f'(0)` and `f(1)` first.
fn line_search<O: Objective>(
    obj: &O,
    x: &[f64],
    f0: f64,
    slope: f64,
    d: &[f64],
    trial: &mut [f64],
    config: &BfgsConfig,
) -> Option<f64> {
    let mut eval = |alpha: f64| {
        for ((t, xi), di) in trial.iter_mut().zip(x).zip(d) {
            *t = xi + alpha * di;
        }
        let v = obj.value(trial);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    let armijo = |alpha: f64, v: f64| v <= f0 + config.armijo * alpha * slope;

    let mut alpha = 1.0;
    let mut f_alpha = eval(alpha);
    if f_alpha.is_finite() {
        let curvature = f_alpha - f0 - slope * alpha;
        if curvature > 0.0 {
            let a_q = -slope * alpha * alpha / (2.0 * curvature);
            if a_q > 1e-10 && (a_q - alpha).abs() > 1e-3 * alpha {
                let f_q = eval(a_q);
                if armijo(a_q, f_q) && (f_q < f_alpha || !armijo(alpha, f_alpha)) {
                    return Some(a_q);
                }
            }
        }
    }
    for _ in 0..config.max_line_search_steps {
        if armijo(alpha, f_alpha) {
            return Some(alpha);
        }
        let next = if f_alpha.is_finite() {
            let curvature = f_alpha - f0 - slope * alpha;
            if curvature > 0.0 {
                (-slope * alpha * alpha / (2.0 * curvature)).clamp(0.1 * alpha, 0.5 * alpha)
            } else {
                0.5 * alpha
            }
        } else {
            0.1 * alpha
        };
        alpha = next;
        f_alpha = eval(alpha);
    }
    None
}
