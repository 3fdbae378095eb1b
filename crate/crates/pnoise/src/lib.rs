//! Phase-noise analysis of coupled and injection-locked oscillator circuits.
//!
//! The crate builds a complete pipeline from a nonlinear state-space circuit
//! description to closed-form phase-noise spectra:
//!
//! 1. [`circuit`] — oscillator units as ODE systems `ẋ = f(x)` with a
//!    white-noise injection matrix `B(x)`, plus the unilaterally coupled
//!    injection-locked (ILO) configuration.
//! 2. [`pss`] — periodic steady state `x_s(t)`, period `T0` by shooting–Newton,
//!    and Fourier harmonics of the orbit.
//! 3. [`floquet`] — monodromy matrix, Floquet exponents/multipliers, direct and
//!    dual periodic vectors, noise projections `λ_i(t) = v_iᵀ(t) B(x_s(t))`,
//!    and the phase-diffusion constant `c`.
//! 4. [`spectrum`] — single-sideband phase-noise spectra: the general
//!    k-oscillator macromodel, its two-mode ILO specialization, the
//!    reduced-order Kurokawa-equivalent model, the free-running Lorentzian,
//!    the standard-form fit, and quasi-sinusoidal validity diagnostics.
//! 5. [`oracle`] — brute-force validation by Euler–Maruyama ensemble
//!    simulation of the noisy circuit SDE and Welch spectral estimation.
//!
//! All analytical spectra can be checked against the stochastic oracle; the
//! two routes share nothing but the circuit description.

pub mod circuit;
pub mod floquet;
pub mod harmonics;
pub mod ode;
pub mod oracle;
pub mod pss;
pub mod spectrum;

pub use circuit::{assemble_ilo, BufferCoupling, IloAssembly, StateSpaceModel};
pub use floquet::FloquetDecomposition;
pub use harmonics::HarmonicSet;
pub use pss::PeriodicSteadyState;
pub use spectrum::{OffsetGrid, SpectrumResult};
