//! Explicit Runge–Kutta integrators for the non-stiff circuit ODEs.
//!
//! Two schemes are provided: an adaptive Dormand–Prince 5(4) pair for the
//! shooting solver and transient ring-up, and a fixed-step classic RK4 used
//! for the uniform resampling/variational passes where the step count is
//! dictated by the sampling grid.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum OdeError {
    #[error("step size underflow at t = {t:.6e} (h = {h:.3e}); system may be too stiff")]
    StepUnderflow { t: f64, h: f64 },
    #[error("non-finite state encountered at t = {t:.6e}")]
    NonFiniteState { t: f64 },
    #[error("step limit of {0} exceeded")]
    StepLimit(usize),
}

/// Right-hand side `dx/dt = f(t-independent autonomous system)`.
pub trait Rhs {
    fn eval(&self, x: &[f64], dxdt: &mut [f64]);
}

impl<F: Fn(&[f64], &mut [f64])> Rhs for F {
    fn eval(&self, x: &[f64], dxdt: &mut [f64]) {
        self(x, dxdt)
    }
}

/// Integration tolerances for the adaptive scheme.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-14,
        }
    }
}

// Dormand–Prince 5(4) coefficients.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Error weights (5th minus embedded 4th order solution).
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const MAX_STEPS: usize = 50_000_000;

/// Adaptive Dormand–Prince integration of `x` over `[0, t_end]` in place.
pub fn integrate_adaptive<R: Rhs>(
    rhs: &R,
    x: &mut [f64],
    t_end: f64,
    tol: Tolerances,
) -> Result<(), OdeError> {
    let n = x.len();
    let mut k = vec![vec![0.0; n]; 7];
    let mut xs = vec![0.0; n];
    let mut xnew = vec![0.0; n];

    rhs.eval(x, &mut k[0]);
    let mut t = 0.0_f64;
    let mut h = initial_step(x, &k[0], t_end, tol);
    let mut nsteps = 0usize;

    while t < t_end {
        if nsteps > MAX_STEPS {
            return Err(OdeError::StepLimit(MAX_STEPS));
        }
        if t + h > t_end {
            h = t_end - t;
        }

        stage(&mut xs, x, h, &[(A21, &k[0])]);
        rhs.eval(&xs, &mut k[1]);
        stage(&mut xs, x, h, &[(A31, &k[0]), (A32, &k[1])]);
        rhs.eval(&xs, &mut k[2]);
        stage(&mut xs, x, h, &[(A41, &k[0]), (A42, &k[1]), (A43, &k[2])]);
        rhs.eval(&xs, &mut k[3]);
        stage(
            &mut xs,
            x,
            h,
            &[(A51, &k[0]), (A52, &k[1]), (A53, &k[2]), (A54, &k[3])],
        );
        rhs.eval(&xs, &mut k[4]);
        stage(
            &mut xs,
            x,
            h,
            &[
                (A61, &k[0]),
                (A62, &k[1]),
                (A63, &k[2]),
                (A64, &k[3]),
                (A65, &k[4]),
            ],
        );
        rhs.eval(&xs, &mut k[5]);
        stage(
            &mut xnew,
            x,
            h,
            &[(B1, &k[0]), (B3, &k[2]), (B4, &k[3]), (B5, &k[4]), (B6, &k[5])],
        );
        rhs.eval(&xnew, &mut k[6]);

        // Scaled error norm of the embedded pair.
        let mut err: f64 = 0.0;
        for i in 0..n {
            let e = h
                * (E1 * k[0][i]
                    + E3 * k[2][i]
                    + E4 * k[3][i]
                    + E5 * k[4][i]
                    + E6 * k[5][i]
                    + E7 * k[6][i]);
            let sc = tol.atol + tol.rtol * x[i].abs().max(xnew[i].abs());
            err = err.max((e / sc).abs());
        }

        if err <= 1.0 {
            t += h;
            x.copy_from_slice(&xnew);
            k.swap(0, 6); // FSAL
            if !x.iter().all(|v| v.is_finite()) {
                return Err(OdeError::NonFiniteState { t });
            }
        }

        let fac = if err > 0.0 {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        } else {
            5.0
        };
        h *= fac;
        if h < 1e-16 * t_end {
            return Err(OdeError::StepUnderflow { t, h });
        }
        nsteps += 1;
    }
    Ok(())
}

fn stage(out: &mut [f64], x: &[f64], h: f64, terms: &[(f64, &Vec<f64>)]) {
    out.copy_from_slice(x);
    for &(a, kv) in terms {
        let ah = a * h;
        for i in 0..out.len() {
            out[i] += ah * kv[i];
        }
    }
}

fn initial_step(x: &[f64], dx: &[f64], t_end: f64, tol: Tolerances) -> f64 {
    let d0: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let d1: f64 = dx.iter().map(|v| v * v).sum::<f64>().sqrt();
    let h = if d1 > 1e-30 {
        0.01 * (d0 + tol.atol) / d1
    } else {
        t_end * 1e-6
    };
    h.min(t_end / 10.0).max(t_end * 1e-12)
}

/// One classic RK4 step of size `h`, writing the result back into `x`.
pub fn rk4_step<R: Rhs>(rhs: &R, x: &mut [f64], h: f64, work: &mut Rk4Work) {
    let n = x.len();
    let Rk4Work { k1, k2, k3, k4, xs } = work;
    rhs.eval(x, k1);
    for i in 0..n {
        xs[i] = x[i] + 0.5 * h * k1[i];
    }
    rhs.eval(xs, k2);
    for i in 0..n {
        xs[i] = x[i] + 0.5 * h * k2[i];
    }
    rhs.eval(xs, k3);
    for i in 0..n {
        xs[i] = x[i] + h * k3[i];
    }
    rhs.eval(xs, k4);
    for i in 0..n {
        x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

/// Scratch buffers for [`rk4_step`], reused across steps.
pub struct Rk4Work {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    xs: Vec<f64>,
}

impl Rk4Work {
    pub fn new(n: usize) -> Self {
        Self {
            k1: vec![0.0; n],
            k2: vec![0.0; n],
            k3: vec![0.0; n],
            k4: vec![0.0; n],
            xs: vec![0.0; n],
        }
    }
}

/// Fixed-step RK4 over `n_steps` steps of size `h`, calling `observer`
/// with `(step_index, state)` before every step and once after the last.
pub fn integrate_fixed<R: Rhs>(
    rhs: &R,
    x: &mut [f64],
    h: f64,
    n_steps: usize,
    mut observer: impl FnMut(usize, &[f64]),
) {
    let mut work = Rk4Work::new(x.len());
    for s in 0..n_steps {
        observer(s, x);
        rk4_step(rhs, x, h, &mut work);
    }
    observer(n_steps, x);
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn harmonic(omega: f64) -> impl Fn(&[f64], &mut [f64]) {
        move |x, dx| {
            dx[0] = x[1];
            dx[1] = -omega * omega * x[0];
        }
    }

    #[test]
    fn adaptive_harmonic_oscillator_period() {
        let omega = 2.0 * PI * 1.3e9;
        let rhs = harmonic(omega);
        let mut x = [1.0, 0.0];
        integrate_adaptive(&rhs, &mut x, 2.0 * PI / omega, Tolerances::default()).unwrap();
        assert_relative_eq!(x[0], 1.0, max_relative = 1e-8);
        assert!(x[1].abs() < omega * 1e-8);
    }

    #[test]
    fn adaptive_exponential_decay() {
        let rhs = |x: &[f64], dx: &mut [f64]| dx[0] = -x[0];
        let mut x = [1.0];
        integrate_adaptive(&rhs, &mut x, 3.0, Tolerances::default()).unwrap();
        assert_relative_eq!(x[0], (-3.0f64).exp(), max_relative = 1e-9);
    }

    #[test]
    fn rk4_fixed_matches_adaptive() {
        let omega = 2.0 * PI;
        let rhs = harmonic(omega);
        let mut xa = [0.3, -0.1];
        let mut xf = xa;
        integrate_adaptive(&rhs, &mut xa, 1.0, Tolerances::default()).unwrap();
        integrate_fixed(&rhs, &mut xf, 1.0 / 1024.0, 1024, |_, _| {});
        assert_relative_eq!(xa[0], xf[0], epsilon = 1e-9);
        assert_relative_eq!(xa[1], xf[1], epsilon = 1e-9);
    }
}
