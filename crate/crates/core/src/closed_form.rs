//! Analytic predictions for the steered dark state.
//!
//! In the rotating frame the pair `x = ρ₋ₐ`, `y = ρ₊ₐ` obeys
//!
//! ```text
//! ẋ = i(φ̇/2)(α x − β y)
//! ẏ = −½(Γ̃ + iαφ̇) y − i(φ̇/2) β x
//! ```
//!
//! and everything below (eigenrates, exact and adiabatic coherence, loop
//! phase and visibility) follows from that 2×2 linear flow.

use core::f64::consts::PI;

use crate::densemat::{ComplexMatrix, ComplexVector};
use crate::engine::DensityMatrix;
use crate::squeeze::{dark_state, Channel, LevelBasis, SqueezeDerived, SqueezeParams};
use crate::{Error, Result, C64};

/// Principal square root, exact on the non-negative real axis.
pub fn principal_sqrt(z: C64) -> C64 {
    if z.re == 0.0 && z.im == 0.0 {
        return C64::new(0.0, 0.0);
    }
    let modulus = libm::hypot(z.re, z.im);
    if z.re >= 0.0 {
        let t = libm::sqrt(0.5 * (modulus + z.re));
        C64::new(t, z.im / (2.0 * t))
    } else {
        let t = libm::sqrt(0.5 * (modulus - z.re));
        C64::new(z.im.abs() / (2.0 * t), libm::copysign(t, z.im))
    }
}

/// Coefficient matrix of the `(ρ₋ₐ, ρ₊ₐ)` flow.
pub fn coherence_flow(derived: &SqueezeDerived, phi_rate: f64) -> [[C64; 2]; 2] {
    let half = 0.5 * phi_rate;
    [
        [
            C64::new(0.0, half * derived.alpha),
            C64::new(0.0, -half * derived.beta),
        ],
        [
            C64::new(0.0, -half * derived.beta),
            C64::new(-0.5 * derived.gamma_eff, -half * derived.alpha),
        ],
    ]
}

/// Eigenvalues of [`coherence_flow`]. `lambda_plus` is the fast, strongly
/// damped mode; `lambda_minus` the slow dark-state mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenRates {
    pub lambda_plus: C64,
    pub lambda_minus: C64,
}

/// `λ± = −Γ̃/4 ∓ ½√(Γ̃²/4 + iαΓ̃φ̇ − φ̇²)` with the principal root.
///
/// `λ₋` is obtained from the product `λ₊λ₋ = φ̇²/4 − iαΓ̃φ̇/4`, which avoids
/// the cancellation in `−Γ̃/4 + ½√…` when `φ̇ ≪ Γ̃`.
pub fn eigen_rates(derived: &SqueezeDerived, phi_rate: f64) -> EigenRates {
    let g = derived.gamma_eff;
    let disc = C64::new(
        0.25 * g * g - phi_rate * phi_rate,
        derived.alpha * g * phi_rate,
    );
    let root = principal_sqrt(disc);
    let lambda_plus = C64::new(-0.25 * g, 0.0) - root * 0.5;
    let product = C64::new(
        0.25 * phi_rate * phi_rate,
        -0.25 * derived.alpha * g * phi_rate,
    );
    EigenRates {
        lambda_plus,
        lambda_minus: product / lambda_plus,
    }
}

/// Exact `(ρ₋ₐ(t), ρ₊ₐ(t))` from the eigen-decomposition of the flow, with
/// `ρ₋ₐ(0) = coh0` and `ρ₊ₐ(0) = 0`.
pub fn exact_coherence(derived: &SqueezeDerived, phi_rate: f64, coh0: C64, t: f64) -> (C64, C64) {
    let a = coherence_flow(derived, phi_rate);
    let EigenRates {
        lambda_plus: fast,
        lambda_minus: slow,
    } = eigen_rates(derived, phi_rate);
    let e_fast = (fast * t).exp();
    let e_slow = (slow * t).exp();
    let gap = fast - slow;
    let rho_ma = coh0 * ((a[0][0] - slow) * e_fast - (a[0][0] - fast) * e_slow) / gap;
    let rho_pa = coh0 * a[1][0] * (e_fast - e_slow) / gap;
    (rho_ma, rho_pa)
}

/// Leak `ε = (β²/2)(φ̇/Γ̃)²` into the decaying mode.
pub fn leak(derived: &SqueezeDerived, phi_rate: f64) -> f64 {
    let u = phi_rate / derived.gamma_eff;
    0.5 * derived.beta * derived.beta * u * u
}

/// Two-term expansion of `ρ₋ₐ(t)` for `φ̇ ≪ Γ`:
/// `coh0[(1−ε)e^{iαφ̇t/2 − εΓ̃t} + ε e^{−iαφ̇t/2 − (Γ̃/2)(1−2ε)t}]`.
pub fn adiabatic_coherence(derived: &SqueezeDerived, phi_rate: f64, coh0: C64, t: f64) -> C64 {
    let eps = leak(derived, phi_rate);
    let g = derived.gamma_eff;
    let w = 0.5 * derived.alpha * phi_rate * t;
    let slow = C64::new(-eps * g * t, w).exp() * (1.0 - eps);
    let fast = C64::new(-0.5 * g * (1.0 - 2.0 * eps) * t, -w).exp() * eps;
    coh0 * (slow + fast)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePrediction {
    /// Lab-frame phase of `ρ_ψa(T)/ρ_ψa(0)`: `−π(1−α)`.
    pub phase: f64,
    /// `exp(−αβ²πφ̇/Γ)`
    pub visibility: f64,
    pub epsilon: f64,
}

/// Leading-order loop prediction for one period `T = 2π/φ̇`.
pub fn loop_prediction(derived: &SqueezeDerived, phi_rate: f64) -> PhasePrediction {
    PhasePrediction {
        phase: berry_phase_closed(derived),
        visibility: libm::exp(-leak_weight(derived, phi_rate)),
        epsilon: leak(derived, phi_rate),
    }
}

/// `w = αβ²πφ̇/Γ`, the first-order loss of coherence over one loop.
pub fn leak_weight(derived: &SqueezeDerived, phi_rate: f64) -> f64 {
    derived.alpha * derived.beta * derived.beta * PI * phi_rate / derived.gamma
}

/// Predicted lab-frame state after one loop started from
/// `(|ψ_DF(φ₀)⟩ + |a⟩)/√2`:
/// `(1−w)|ψ̃(T)⟩⟨ψ̃(T)| + w|ψ_DF⟩⟨ψ_DF|`.
pub fn final_mixture(derived: &SqueezeDerived, phi_rate: f64, phi0: f64) -> Result<DensityMatrix> {
    let w = leak_weight(derived, phi_rate);
    if !(w < 1.0) {
        return Err(Error::NonAdiabatic { weight: w });
    }
    let basis = LevelBasis::ThreePlusAncilla;
    let mut psi = ComplexVector::zeros(basis.dim())?;
    psi[LevelBasis::LOWER] = C64::new(derived.c, 0.0);
    psi[LevelBasis::UPPER] = -C64::from_polar(derived.s, phi0);

    let ancilla = basis.basis_vector(LevelBasis::ANCILLA)?;
    let carried = psi.scale(C64::from_polar(1.0, berry_phase_closed(derived))) + ancilla;
    let coherent = ComplexMatrix::projector(&carried.normalized()).scale_real(1.0 - w);
    let leaked = ComplexMatrix::projector(&psi).scale_real(w);
    DensityMatrix::new(coherent + leaked)
}

/// `χ_g = −π(1−α)`.
pub fn berry_phase_closed(derived: &SqueezeDerived) -> f64 {
    -PI * (1.0 - derived.alpha)
}

/// Discretized loop phase `−arg Π_k ⟨ψ(φ_k)|ψ(φ_{k+1})⟩`, `φ_k = 2πk/N`.
pub fn berry_phase_numeric(r: f64, n_steps: usize) -> Result<f64> {
    berry_phase_numeric_gauged(r, n_steps, |_| 0.0)
}

/// [`berry_phase_numeric`] with sample `k` multiplied by `e^{i gauge(k)}`.
/// The closed product is independent of the gauge.
pub fn berry_phase_numeric_gauged<F>(r: f64, n_steps: usize, gauge: F) -> Result<f64>
where
    F: Fn(usize) -> f64,
{
    if n_steps < 8 {
        return Err(Error::InvalidParameter {
            name: "n_steps",
            value: n_steps as f64,
            bound: ">= 8",
        });
    }
    let basis = LevelBasis::ThreePlusAncilla;
    let sample = |k: usize| -> Result<ComplexVector> {
        let phi = 2.0 * PI * (k % n_steps) as f64 / n_steps as f64;
        let psi = dark_state(basis, Channel::One, &SqueezeParams::new(r, phi)?)?;
        Ok(psi.scale(C64::from_polar(1.0, gauge(k % n_steps))))
    };
    let first = sample(0)?;
    let mut prev = first;
    let mut product = C64::new(1.0, 0.0);
    for k in 1..=n_steps {
        let next = if k == n_steps { first } else { sample(k)? };
        product *= prev.inner(&next);
        prev = next;
    }
    // The continuum value −2πs² lies in (−π, 0], so the principal branch is
    // continuous in r.
    Ok(-product.arg() + 0.0)
}

/// `ρ_ψ₁ψ₂(t)` for the five-level atom started in `(|ψ₁⟩ + |ψ₂⟩)/√2`.
pub fn five_level_coherence(
    d1: &SqueezeDerived,
    d2: &SqueezeDerived,
    phi_rate: f64,
    t: f64,
) -> C64 {
    let decay = (d1.beta * d1.beta / (2.0 * d1.gamma_eff)
        + d2.beta * d2.beta / (2.0 * d2.gamma_eff))
        * phi_rate
        * phi_rate;
    let rotation = -(d2.alpha - d1.alpha) * phi_rate * 0.5;
    C64::new(-decay * t, rotation * t).exp() * 0.5
}

/// Phase gained by `ρ_ψ₁ψ₂` over one loop: `π(α₁ − α₂)`.
pub fn relative_phase(d1: &SqueezeDerived, d2: &SqueezeDerived) -> f64 {
    PI * (d1.alpha - d2.alpha)
}

/// Polarization of the photon emitted by `|ψ₁⟩ + e^{iΔ}|ψ₂⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationState {
    /// `(E_R, E_L)`
    pub jones: [C64; 2],
    /// `[S₀, S₁, S₂, S₃]` with `S₁ + iS₂ = 2 E_R* E_L`, `S₃ = |E_R|² − |E_L|²`.
    pub stokes: [f64; 4],
}

impl PolarizationState {
    /// Orientation of the polarization plane, `Δ/2`.
    pub fn plane_angle(&self) -> f64 {
        0.5 * libm::atan2(self.stokes[2], self.stokes[1])
    }
}

pub fn polarization_state(relative_phase: f64) -> PolarizationState {
    let amp = core::f64::consts::FRAC_1_SQRT_2;
    let (sin, cos) = (libm::sin(relative_phase), libm::cos(relative_phase));
    PolarizationState {
        jones: [C64::new(amp, 0.0), C64::new(amp * cos, amp * sin)],
        stokes: [1.0, cos, sin, 0.0],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::squeeze::derive;

    fn derived(r: f64) -> SqueezeDerived {
        derive(&SqueezeParams::new(r, 0.0).unwrap(), 1.0).unwrap()
    }

    #[test]
    fn principal_sqrt_branches() {
        assert_eq!(principal_sqrt(C64::new(4.0, 0.0)), C64::new(2.0, 0.0));
        assert_eq!(principal_sqrt(C64::new(-4.0, 0.0)), C64::new(0.0, 2.0));
        let z = C64::new(-3.0, -4.0);
        let w = principal_sqrt(z);
        assert!((w * w - z).norm() < 1e-15);
        assert!(w.re >= 0.0);
    }

    #[test]
    fn static_rates_are_exact() {
        let d = derived(0.5);
        let rates = eigen_rates(&d, 0.0);
        assert_eq!(rates.lambda_plus, C64::new(-0.5 * d.gamma_eff, 0.0));
        assert_eq!(rates.lambda_minus, C64::new(0.0, 0.0));
    }

    #[test]
    fn exact_coherence_initial_and_static() {
        let d = derived(0.5);
        let coh0 = C64::new(0.3, -0.4);
        let (x, y) = exact_coherence(&d, 0.01, coh0, 0.0);
        assert!((x - coh0).norm() < 1e-15);
        assert!(y.norm() < 1e-15);
        for t in [1.0, 100.0, 1e4] {
            let (x, y) = exact_coherence(&d, 0.0, coh0, t);
            assert!((x - coh0).norm() < 1e-15);
            assert_eq!(y, C64::new(0.0, 0.0));
        }
    }

    #[test]
    fn adiabatic_without_squeezing() {
        let d = derived(0.0);
        let z = adiabatic_coherence(&d, 0.02, C64::new(1.0, 0.0), 40.0);
        assert!((z - C64::from_polar(1.0, 0.4)).norm() < 1e-15);
    }

    #[test]
    fn leak_value() {
        // (β²/2)(ξα)² at r = 0.5, ξ = 1e-2, from a 30-digit evaluation.
        let eps = leak(&derived(0.5), 0.01);
        assert!((eps - 1.217_979_469_999_457e-5).abs() < 1e-17);
    }

    #[test]
    fn loop_prediction_values() {
        let p = loop_prediction(&derived(0.0), 0.01);
        assert_eq!((p.phase, p.visibility), (0.0, 1.0));
        let p = loop_prediction(&derived(0.5), 0.01);
        assert!((p.phase + 1.105_670_108_319_861_4).abs() < 1e-14);
        assert!((p.visibility - 0.988_260_577_946_542_6).abs() < 1e-14);
    }

    #[test]
    fn berry_closed_values() {
        assert_eq!(berry_phase_closed(&derived(0.0)), 0.0);
        assert!((berry_phase_closed(&derived(0.5)) + 1.105_670_108_319_861_4).abs() < 1e-14);
        assert!((berry_phase_closed(&derived(1.0)) + 2.306_550_324_176_855_4).abs() < 1e-14);
        // Equivalent form −2πs².
        let d = derived(0.8);
        assert!((berry_phase_closed(&d) + 2.0 * PI * d.s * d.s).abs() < 1e-14);
    }

    #[test]
    fn berry_numeric_edge_cases() {
        assert_eq!(berry_phase_numeric(0.0, 64).unwrap(), 0.0);
        assert!(berry_phase_numeric(0.5, 7).is_err());
    }

    #[test]
    fn final_mixture_weights() {
        let d = derived(0.0);
        let rho = final_mixture(&d, 0.01, 0.0).unwrap();
        let basis = LevelBasis::ThreePlusAncilla;
        let psi0 = basis.basis_vector(LevelBasis::LOWER).unwrap()
            + basis.basis_vector(LevelBasis::ANCILLA).unwrap();
        let initial = ComplexMatrix::projector(&psi0.normalized());
        assert!(rho.matrix().frobenius_distance(&initial).unwrap() < 1e-15);

        let d = derived(0.5);
        assert!((leak_weight(&d, 0.01) - 0.011_808_873_147_430_4).abs() < 1e-15);
        assert!(matches!(
            final_mixture(&d, 2.0, 0.0),
            Err(Error::NonAdiabatic { .. })
        ));
    }

    #[test]
    fn five_level_symmetric_and_initial() {
        let d = derived(0.7);
        let z = five_level_coherence(&d, &d, 0.01, 300.0);
        assert_eq!(z.im, 0.0);
        assert!(z.re < 0.5);
        let d2 = derived(0.2);
        assert_eq!(five_level_coherence(&d, &d2, 0.01, 0.0), C64::new(0.5, 0.0));
    }

    #[test]
    fn relative_phase_values() {
        let (d1, d2) = (derived(0.5), derived(1.0));
        assert_eq!(relative_phase(&d1, &d1), 0.0);
        assert!((relative_phase(&d1, &d2) - 1.200_880_215_856_993_9).abs() < 1e-14);
        assert_eq!(relative_phase(&d1, &d2), -relative_phase(&d2, &d1));
    }

    #[test]
    fn polarization_cardinal_points() {
        let s = polarization_state(0.0).stokes;
        assert_eq!(s, [1.0, 1.0, 0.0, 0.0]);
        let s = polarization_state(PI).stokes;
        assert!((s[1] + 1.0).abs() < 1e-15 && s[2].abs() < 1e-15 && s[3] == 0.0);
        let s = polarization_state(0.5 * PI).stokes;
        assert!(s[1].abs() < 1e-15 && (s[2] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn stokes_follow_from_jones() {
        for delta in [0.0, 0.4, 1.2, 2.9, -1.7] {
            let p = polarization_state(delta);
            let [er, el] = p.jones;
            let cross = er.conj() * el * 2.0;
            assert!((cross.re - p.stokes[1]).abs() < 1e-15);
            assert!((cross.im - p.stokes[2]).abs() < 1e-15);
            assert!((er.norm_sqr() - el.norm_sqr() - p.stokes[3]).abs() < 1e-15);
            assert!((er.norm_sqr() + el.norm_sqr() - 1.0).abs() < 1e-15);
            assert!((p.plane_angle() - 0.5 * delta.sin().atan2(delta.cos())).abs() < 1e-15);
        }
    }
}
