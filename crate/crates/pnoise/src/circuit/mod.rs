//! Nonlinear state-space circuit models with white-noise injection.
//!
//! A circuit is described in explicit ODE form `ẋ = f(x) + B(x)·ξ(t)` where
//! `x ∈ R^n` collects node voltages and branch currents, and the columns of
//! `B ∈ R^{n×p}` couple `p` independent unit-PSD white-noise sources into the
//! state equations. Each column carries the source's rms amplitude divided by
//! the node capacitance (or branch inductance), so the driving processes are
//! normalized. Algebraic device currents are substituted directly into the
//! node charge balances; there is no DAE machinery.

use nalgebra::DMatrix;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

mod osc1;
mod osc2;

pub use osc1::{osc1, Osc1Params};
pub use osc2::{osc2, Osc2Params};

#[derive(Debug, Error)]
pub enum CircuitError {
    #[error("state vector has length {got}, model has {expected} states")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("state vector contains a non-finite component")]
    NonFiniteState,
    #[error("state equation {index} ({label}) produced a non-finite derivative")]
    NonFiniteDerivative { index: usize, label: String },
    #[error("node index {index} out of range for {what} ({n} states)")]
    NodeOutOfRange {
        index: usize,
        what: &'static str,
        n: usize,
    },
    #[error("{name} must be positive, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },
}

pub type VectorFieldFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
pub type MatrixFn = Arc<dyn Fn(&[f64], &mut DMatrix<f64>) + Send + Sync>;

/// Autonomous nonlinear ODE system `ẋ = f(x)` with Jacobian and
/// noise-injection matrix `B(x) ∈ R^{n×p}`.
///
/// Models are immutable after construction and cheap to clone (the closures
/// are shared); evaluation is reentrant and safe to call from many threads.
#[derive(Clone)]
pub struct StateSpaceModel {
    n: usize,
    p: usize,
    f: VectorFieldFn,
    jac: MatrixFn,
    noise: MatrixFn,
    constant_noise: bool,
    state_labels: Vec<String>,
    noise_labels: Vec<String>,
    /// Charge/flux scale per state: the capacitance (voltage states) or
    /// inductance (current states) that converts an injected current or
    /// voltage at that state into a state derivative.
    inject_scale: Vec<f64>,
}

impl fmt::Debug for StateSpaceModel {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        fm.debug_struct("StateSpaceModel")
            .field("n", &self.n)
            .field("p", &self.p)
            .field("state_labels", &self.state_labels)
            .field("noise_labels", &self.noise_labels)
            .finish()
    }
}

impl StateSpaceModel {
    /// Assembles a model from its parts. `inject_scale` must have one entry
    /// per state; `state_labels`/`noise_labels` name the states and sources.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        f: VectorFieldFn,
        jac: MatrixFn,
        noise: MatrixFn,
        constant_noise: bool,
        state_labels: Vec<String>,
        noise_labels: Vec<String>,
        inject_scale: Vec<f64>,
    ) -> Self {
        let n = state_labels.len();
        let p = noise_labels.len();
        assert_eq!(inject_scale.len(), n, "one injection scale per state");
        Self {
            n,
            p,
            f,
            jac,
            noise,
            constant_noise,
            state_labels,
            noise_labels,
            inject_scale,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn noise_dim(&self) -> usize {
        self.p
    }

    pub fn state_labels(&self) -> &[String] {
        &self.state_labels
    }

    pub fn noise_labels(&self) -> &[String] {
        &self.noise_labels
    }

    pub fn inject_scale(&self) -> &[f64] {
        &self.inject_scale
    }

    /// True when `B` does not depend on the state (no modulated noise).
    pub fn has_constant_noise(&self) -> bool {
        self.constant_noise
    }

    pub fn state_index(&self, label: &str) -> Option<usize> {
        self.state_labels.iter().position(|l| l == label)
    }

    pub fn noise_index(&self, label: &str) -> Option<usize> {
        self.noise_labels.iter().position(|l| l == label)
    }

    /// Checked evaluation of the vector field.
    pub fn eval_vector_field(&self, x: &[f64]) -> Result<Vec<f64>, CircuitError> {
        if x.len() != self.n {
            return Err(CircuitError::DimensionMismatch {
                got: x.len(),
                expected: self.n,
            });
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(CircuitError::NonFiniteState);
        }
        let mut out = vec![0.0; self.n];
        (self.f)(x, &mut out);
        if let Some(i) = out.iter().position(|v| !v.is_finite()) {
            return Err(CircuitError::NonFiniteDerivative {
                index: i,
                label: self.state_labels[i].clone(),
            });
        }
        Ok(out)
    }

    /// Unchecked fast path for integrator inner loops.
    #[inline]
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        (self.f)(x, out)
    }

    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let mut j = DMatrix::zeros(self.n, self.n);
        (self.jac)(x, &mut j);
        j
    }

    #[inline]
    pub fn jacobian_into(&self, x: &[f64], out: &mut DMatrix<f64>) {
        (self.jac)(x, out)
    }

    pub fn noise_matrix(&self, x: &[f64]) -> DMatrix<f64> {
        let mut b = DMatrix::zeros(self.n, self.p);
        (self.noise)(x, &mut b);
        b
    }

    /// Returns a copy of this model with every noise column scaled by `s`.
    pub fn with_noise_scaled(&self, s: f64) -> Self {
        let inner = self.noise.clone();
        let mut m = self.clone();
        m.noise = Arc::new(move |x: &[f64], b: &mut DMatrix<f64>| {
            inner(x, b);
            *b *= s;
        });
        m
    }
}

/// Unilateral buffer amplifier with polynomial transconductance
/// `i_inj = Σ_{k=0..3} g_c[k] · v_in^k` (units A, A/V, A/V², A/V³).
#[derive(Debug, Clone, Copy)]
pub struct BufferCoupling {
    pub g_c: [f64; 4],
    /// Index of the sensed node in the primary oscillator's state vector.
    pub input_node: usize,
    /// Index of the driven node in the secondary oscillator's state vector.
    pub output_node: usize,
}

impl BufferCoupling {
    pub fn linear(g_c1: f64, input_node: usize, output_node: usize) -> Self {
        Self {
            g_c: [0.0, g_c1, 0.0, 0.0],
            input_node,
            output_node,
        }
    }

    /// Buffer output current for input voltage `v`.
    #[inline]
    pub fn current(&self, v: f64) -> f64 {
        self.g_c[0] + v * (self.g_c[1] + v * (self.g_c[2] + v * self.g_c[3]))
    }

    /// d(i_inj)/d(v_in).
    #[inline]
    pub fn transconductance(&self, v: f64) -> f64 {
        self.g_c[1] + v * (2.0 * self.g_c[2] + v * 3.0 * self.g_c[3])
    }
}

/// The assembled injection-locked configuration: a free-running primary
/// oscillator driving a secondary oscillator through a unilateral buffer.
#[derive(Clone)]
pub struct IloAssembly {
    pub model: StateSpaceModel,
    pub coupling: BufferCoupling,
    /// Observation node index in the combined state (where phase noise is read).
    pub observation_node: usize,
    pub n_primary: usize,
    pub n_secondary: usize,
    pub p_primary: usize,
    pub p_secondary: usize,
}

/// Stacks a primary and a secondary oscillator into one autonomous system,
/// adding the buffer current `i_inj = Σ g_ck v_in^k` into the charge balance
/// of the secondary's output node. The primary's equations are untouched, so
/// the combined Jacobian is lower block-triangular.
pub fn assemble_ilo(
    primary: &StateSpaceModel,
    secondary: &StateSpaceModel,
    coupling: BufferCoupling,
    observation_node: usize,
) -> Result<IloAssembly, CircuitError> {
    let (np, ns) = (primary.dim(), secondary.dim());
    let (pp, ps) = (primary.noise_dim(), secondary.noise_dim());
    if coupling.input_node >= np {
        return Err(CircuitError::NodeOutOfRange {
            index: coupling.input_node,
            what: "coupling input",
            n: np,
        });
    }
    if coupling.output_node >= ns {
        return Err(CircuitError::NodeOutOfRange {
            index: coupling.output_node,
            what: "coupling output",
            n: ns,
        });
    }
    if observation_node >= np + ns {
        return Err(CircuitError::NodeOutOfRange {
            index: observation_node,
            what: "observation node",
            n: np + ns,
        });
    }

    let out_scale = secondary.inject_scale()[coupling.output_node];
    let p_f = primary.f.clone();
    let s_f = secondary.f.clone();
    let cpl = coupling;
    let in_idx = coupling.input_node;
    let out_idx = np + coupling.output_node;
    let f: VectorFieldFn = Arc::new(move |x: &[f64], out: &mut [f64]| {
        let (xp, xs) = x.split_at(np);
        let (op, os) = out.split_at_mut(np);
        p_f(xp, op);
        s_f(xs, os);
        os[cpl.output_node] += cpl.current(xp[in_idx]) / out_scale;
    });

    let p_jac = primary.jac.clone();
    let s_jac = secondary.jac.clone();
    let jac: MatrixFn = Arc::new(move |x: &[f64], out: &mut DMatrix<f64>| {
        out.fill(0.0);
        let (xp, xs) = x.split_at(np);
        let mut jp = DMatrix::zeros(np, np);
        p_jac(xp, &mut jp);
        let mut js = DMatrix::zeros(ns, ns);
        s_jac(xs, &mut js);
        out.view_mut((0, 0), (np, np)).copy_from(&jp);
        out.view_mut((np, np), (ns, ns)).copy_from(&js);
        out[(out_idx, in_idx)] += cpl.transconductance(xp[in_idx]) / out_scale;
    });

    let p_noise = primary.noise.clone();
    let s_noise = secondary.noise.clone();
    let noise: MatrixFn = Arc::new(move |x: &[f64], out: &mut DMatrix<f64>| {
        out.fill(0.0);
        let (xp, xs) = x.split_at(np);
        let mut bp = DMatrix::zeros(np, pp);
        p_noise(xp, &mut bp);
        let mut bs = DMatrix::zeros(ns, ps);
        s_noise(xs, &mut bs);
        out.view_mut((0, 0), (np, pp)).copy_from(&bp);
        out.view_mut((np, pp), (ns, ps)).copy_from(&bs);
    });

    let mut state_labels: Vec<String> = primary
        .state_labels()
        .iter()
        .map(|l| format!("p.{l}"))
        .collect();
    state_labels.extend(secondary.state_labels().iter().map(|l| format!("s.{l}")));
    let mut noise_labels: Vec<String> = primary
        .noise_labels()
        .iter()
        .map(|l| format!("p.{l}"))
        .collect();
    noise_labels.extend(secondary.noise_labels().iter().map(|l| format!("s.{l}")));
    let mut inject_scale = primary.inject_scale().to_vec();
    inject_scale.extend_from_slice(secondary.inject_scale());

    let model = StateSpaceModel::from_parts(
        f,
        jac,
        noise,
        primary.has_constant_noise() && secondary.has_constant_noise(),
        state_labels,
        noise_labels,
        inject_scale,
    );

    Ok(IloAssembly {
        model,
        coupling,
        observation_node,
        n_primary: np,
        n_secondary: ns,
        p_primary: pp,
        p_secondary: ps,
    })
}
