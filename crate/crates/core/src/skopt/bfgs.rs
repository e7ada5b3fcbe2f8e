//! Dense BFGS with a backtracking line search that treats non-finite
//! objective values as "step too long".

use nalgebra::{DMatrix, DVector};

#[derive(Clone, Copy, Debug)]
pub struct BfgsOptions {
    pub max_iter: usize,
    /// Stop when the gradient's max-norm falls below this.
    pub gtol: f64,
    /// Stop after this many consecutive steps with relative decrease below `ftol`.
    pub ftol: f64,
    pub stall_steps: usize,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        BfgsOptions { max_iter: 400, gtol: 1e-13, ftol: 1e-15, stall_steps: 5 }
    }
}

#[derive(Clone, Debug)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
}

/// Minimize `f`, which writes its gradient into the second argument.
/// Returns `None` if `f(x0)` is not finite.
pub fn minimize(mut f: impl FnMut(&[f64], &mut [f64]) -> f64, x0: &[f64], opts: BfgsOptions) -> Option<Minimum> {
    let n = x0.len();
    let mut x = DVector::from_column_slice(x0);
    let mut g = DVector::zeros(n);
    let mut fx = f(x.as_slice(), g.as_mut_slice());
    if !fx.is_finite() {
        return None;
    }
    let mut h = DMatrix::<f64>::identity(n, n);
    let mut stall = 0;
    let mut g_new = DVector::zeros(n);
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        if g.amax() < opts.gtol {
            break;
        }
        let mut d = -(&h * &g);
        let mut slope = g.dot(&d);
        if !(slope < 0.0) {
            h.fill_with_identity();
            d = -g.clone();
            slope = -g.norm_squared();
        }
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial = &x + alpha * &d;
            let ft = f(trial.as_slice(), g_new.as_mut_slice());
            if ft.is_finite() && ft <= fx + 1e-4 * alpha * slope {
                accepted = Some((trial, ft));
                break;
            }
            alpha *= 0.5;
        }
        let Some((x_new, f_new)) = accepted else { break };
        let s = &x_new - &x;
        let y = &g_new - &g;
        let sy = s.dot(&y);
        if sy > 1e-300 {
            let rho = 1.0 / sy;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            // H ← H + ρ²(sᵀy + yᵀHy) ssᵀ − ρ(Hy sᵀ + s yᵀH)
            h += (rho * rho * (sy + yhy)) * (&s * s.transpose()) - rho * (&hy * s.transpose() + &s * hy.transpose());
        }
        let rel = (fx - f_new) / fx.abs().max(1e-300);
        stall = if rel < opts.ftol { stall + 1 } else { 0 };
        x = x_new;
        fx = f_new;
        std::mem::swap(&mut g, &mut g_new);
        if stall >= opts.stall_steps || fx == 0.0 {
            break;
        }
    }
    Some(Minimum { x: x.as_slice().to_vec(), f: fx, iterations })
}
