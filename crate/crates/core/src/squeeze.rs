//! Operators and models parameterized by the squeezing `η = r e^{iφ}`.
//!
//! Basis ordering is fixed: `[|1⟩, |0⟩, |−1⟩, |a⟩]` for the three-level atom
//! with its noiseless ancilla, and `[|1⟩, |0⟩, |−1⟩, |1'⟩, |−1'⟩]` for the
//! five-level atom. The ancilla couples to nothing.

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::densemat::{ComplexMatrix, ComplexVector};
use crate::{Error, Result, C64};

/// Squeezing amplitude `r` and phase `φ` (radians).
///
/// `phi` is never reduced modulo 2π internally: the frame unitary depends
/// on `φ/2` and distinguishes `φ` from `φ + 2π`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezeParams {
    pub r: f64,
    pub phi: f64,
}

impl SqueezeParams {
    pub fn new(r: f64, phi: f64) -> Result<Self> {
        let p = Self { r, phi };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r.is_finite() && self.r >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "r",
                value: self.r,
                bound: "finite and >= 0",
            });
        }
        if !self.phi.is_finite() {
            return Err(Error::InvalidParameter {
                name: "phi",
                value: self.phi,
                bound: "finite",
            });
        }
        Ok(())
    }

    /// `η = r e^{iφ}`.
    pub fn eta(&self) -> C64 {
        C64::from_polar(self.r, self.phi)
    }

    /// Phase reduced to `[0, 2π)`, for display.
    pub fn canonical_phase(&self) -> f64 {
        let turn = 2.0 * PI;
        let m = libm::fmod(self.phi, turn);
        if m < 0.0 {
            m + turn
        } else {
            m
        }
    }
}

/// Scalars derived from the squeezing amplitude and the bare decay rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezeDerived {
    /// `cosh r / √cosh 2r`
    pub c: f64,
    /// `sinh r / √cosh 2r`
    pub s: f64,
    /// `1 / cosh 2r`
    pub alpha: f64,
    /// `−sinh 2r / cosh 2r`
    pub beta: f64,
    /// Bare decay rate `Γ`.
    pub gamma: f64,
    /// `Γ̃ = Γ cosh 2r`
    pub gamma_eff: f64,
}

pub fn derive(params: &SqueezeParams, gamma: f64) -> Result<SqueezeDerived> {
    params.validate()?;
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::InvalidParameter {
            name: "gamma",
            value: gamma,
            bound: "finite and > 0",
        });
    }
    let r = params.r;
    let cosh2 = libm::cosh(2.0 * r);
    let root = libm::sqrt(cosh2);
    Ok(SqueezeDerived {
        c: libm::cosh(r) / root,
        s: libm::sinh(r) / root,
        alpha: 1.0 / cosh2,
        beta: -libm::tanh(2.0 * r),
        gamma,
        gamma_eff: gamma * cosh2,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LevelBasis {
    /// `[|1⟩, |0⟩, |−1⟩, |a⟩]`
    ThreePlusAncilla,
    /// `[|1⟩, |0⟩, |−1⟩, |1'⟩, |−1'⟩]`
    FiveLevel,
}

impl LevelBasis {
    pub const UPPER: usize = 0;
    pub const MIDDLE: usize = 1;
    pub const LOWER: usize = 2;
    pub const ANCILLA: usize = 3;
    pub const UPPER_PRIME: usize = 3;
    pub const LOWER_PRIME: usize = 4;

    pub fn dim(self) -> usize {
        match self {
            LevelBasis::ThreePlusAncilla => 4,
            LevelBasis::FiveLevel => 5,
        }
    }

    pub fn labels(self) -> &'static [&'static str] {
        match self {
            LevelBasis::ThreePlusAncilla => &["|1>", "|0>", "|-1>", "|a>"],
            LevelBasis::FiveLevel => &["|1>", "|0>", "|-1>", "|1'>", "|-1'>"],
        }
    }

    /// `(upper, middle, lower)` indices of the ladder driven by `channel`.
    pub fn ladder(self, channel: Channel) -> Result<(usize, usize, usize)> {
        match (self, channel) {
            (_, Channel::One) => Ok((Self::UPPER, Self::MIDDLE, Self::LOWER)),
            (LevelBasis::FiveLevel, Channel::Two) => {
                Ok((Self::UPPER_PRIME, Self::MIDDLE, Self::LOWER_PRIME))
            }
            (LevelBasis::ThreePlusAncilla, Channel::Two) => Err(Error::InvalidChannel),
        }
    }

    pub fn basis_vector(self, index: usize) -> Result<ComplexVector> {
        ComplexVector::basis(self.dim(), index)
    }
}

/// Reservoir channel: 1 couples the unprimed ladder, 2 the primed one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    One,
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Frame {
    Lab,
    /// Co-moving frame in which every dark state is stationary.
    Rotating,
}

/// `S = |lower⟩⟨middle| + |middle⟩⟨upper|` on the channel's ladder.
pub fn lowering_operator(basis: LevelBasis, channel: Channel) -> Result<ComplexMatrix> {
    let (up, mid, low) = basis.ladder(channel)?;
    let mut s = ComplexMatrix::zeros(basis.dim())?;
    s[(low, mid)] = C64::new(1.0, 0.0);
    s[(mid, up)] = C64::new(1.0, 0.0);
    Ok(s)
}

/// `R(η) = S cosh r + e^{iφ} S† sinh r`.
pub fn jump_operator(
    basis: LevelBasis,
    channel: Channel,
    params: &SqueezeParams,
) -> Result<ComplexMatrix> {
    params.validate()?;
    let s = lowering_operator(basis, channel)?;
    let down = s.scale_real(libm::cosh(params.r));
    let up = s
        .adjoint()
        .scale(C64::from_polar(libm::sinh(params.r), params.phi));
    Ok(down + up)
}

/// `|ψ_DF(η)⟩ = c|lower⟩ − e^{iφ} s|upper⟩`, annihilated by `R(η)`.
pub fn dark_state(
    basis: LevelBasis,
    channel: Channel,
    params: &SqueezeParams,
) -> Result<ComplexVector> {
    let d = derive(params, 1.0)?;
    let (up, _, low) = basis.ladder(channel)?;
    let mut v = ComplexVector::zeros(basis.dim())?;
    v[low] = C64::new(d.c, 0.0);
    v[up] = -C64::from_polar(d.s, params.phi);
    Ok(v)
}

/// Frame unitary acting on one channel's `(upper, lower)` pair, identity
/// elsewhere. Maps that channel's dark state onto `e^{iφ/2}|lower⟩`.
pub fn channel_frame_unitary(
    basis: LevelBasis,
    channel: Channel,
    params: &SqueezeParams,
) -> Result<ComplexMatrix> {
    let d = derive(params, 1.0)?;
    let (up, _, low) = basis.ladder(channel)?;
    let half = 0.5 * params.phi;
    let mut o = ComplexMatrix::identity(basis.dim())?;
    o[(up, up)] = C64::from_polar(d.c, -half);
    o[(up, low)] = C64::from_polar(d.s, half);
    o[(low, up)] = -C64::from_polar(d.s, -half);
    o[(low, low)] = C64::from_polar(d.c, half);
    Ok(o)
}

/// The 4×4 frame unitary `O(η)` of the three-level atom plus ancilla.
pub fn frame_unitary(params: &SqueezeParams) -> Result<ComplexMatrix> {
    channel_frame_unitary(LevelBasis::ThreePlusAncilla, Channel::One, params)
}

/// Product of the two (commuting) channel frame unitaries.
pub fn five_level_frame_unitary(
    params1: &SqueezeParams,
    params2: &SqueezeParams,
) -> Result<ComplexMatrix> {
    let o1 = channel_frame_unitary(LevelBasis::FiveLevel, Channel::One, params1)?;
    let o2 = channel_frame_unitary(LevelBasis::FiveLevel, Channel::Two, params2)?;
    Ok(&o1 * &o2)
}

/// Closed-form `G = i (dO/dt) O†` for constant `r` and `φ̇` on one channel:
/// `(φ̇/2) [[α, β], [β, −α]]` on `(upper, lower)`.
pub fn steering_generator(
    basis: LevelBasis,
    channel: Channel,
    derived: &SqueezeDerived,
    phi_rate: f64,
) -> Result<ComplexMatrix> {
    let (up, _, low) = basis.ladder(channel)?;
    let half = 0.5 * phi_rate;
    let mut g = ComplexMatrix::zeros(basis.dim())?;
    g[(up, up)] = C64::new(half * derived.alpha, 0.0);
    g[(up, low)] = C64::new(half * derived.beta, 0.0);
    g[(low, up)] = C64::new(half * derived.beta, 0.0);
    g[(low, low)] = C64::new(-half * derived.alpha, 0.0);
    Ok(g)
}

/// [`steering_generator`] for the three-level atom plus ancilla.
pub fn steering_generator_closed(derived: &SqueezeDerived, phi_rate: f64) -> ComplexMatrix {
    steering_generator(
        LevelBasis::ThreePlusAncilla,
        Channel::One,
        derived,
        phi_rate,
    )
    .expect("channel one exists on every basis")
}

/// Central-difference `G ≈ i (O(t+dt) − O(t−dt)) / (2dt) · O†(t)`,
/// Hermitian-symmetrized. Works for any differentiable schedule, including
/// time-varying `r`.
pub fn steering_generator_numeric<F>(schedule: F, t: f64, dt: f64) -> Result<ComplexMatrix>
where
    F: Fn(f64) -> SqueezeParams,
{
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParameter {
            name: "dt",
            value: dt,
            bound: "finite and > 0",
        });
    }
    let ahead = frame_unitary(&schedule(t + dt))?;
    let behind = frame_unitary(&schedule(t - dt))?;
    let now = frame_unitary(&schedule(t))?;
    let derivative = (ahead - behind).scale(C64::new(0.0, 1.0 / (2.0 * dt)));
    let g = &derivative * &now.adjoint();
    Ok((g + g.adjoint()).scale_real(0.5))
}

/// `φ_t = φ₀ + φ̇ t` at fixed amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearPhase {
    pub start: SqueezeParams,
    pub phi_rate: f64,
}

impl LinearPhase {
    pub fn at(&self, t: f64) -> SqueezeParams {
        SqueezeParams {
            r: self.start.r,
            phi: self.start.phi + self.phi_rate * t,
        }
    }
}

pub type OperatorFn = Box<dyn Fn(f64) -> ComplexMatrix + Send + Sync>;
pub type RateFn = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// One Lindblad channel: `Γ(t) D[R(t)]`.
pub struct Dissipator {
    rate: RateFn,
    jump: OperatorFn,
}

impl Dissipator {
    pub fn new(rate: RateFn, jump: OperatorFn) -> Self {
        Self { rate, jump }
    }

    pub fn constant_rate<J>(rate: f64, jump: J) -> Self
    where
        J: Fn(f64) -> ComplexMatrix + Send + Sync + 'static,
    {
        Self::new(Box::new(move |_| rate), Box::new(jump))
    }

    pub fn rate_at(&self, t: f64) -> f64 {
        (self.rate)(t)
    }

    pub fn jump_at(&self, t: f64) -> ComplexMatrix {
        (self.jump)(t)
    }
}

/// A dissipative model: dissipators, an optional Hermitian generator
/// contributing `−i[G(t), ρ]`, and, for co-moving frames, the unitary
/// `O(t)` with `ρ_frame = O ρ_lab O†`.
pub struct ModelSpec {
    basis: LevelBasis,
    frame: Frame,
    dissipators: Vec<Dissipator>,
    generator: Option<OperatorFn>,
    frame_map: Option<OperatorFn>,
}

impl core::fmt::Debug for ModelSpec {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("ModelSpec")
            .field("basis", &self.basis)
            .field("frame", &self.frame)
            .field("dissipators", &self.dissipators.len())
            .field("generator", &self.generator.is_some())
            .finish()
    }
}

impl ModelSpec {
    /// An empty lab-frame model; add channels with [`ModelSpec::with_dissipator`].
    pub fn new(basis: LevelBasis) -> Self {
        Self {
            basis,
            frame: Frame::Lab,
            dissipators: Vec::new(),
            generator: None,
            frame_map: None,
        }
    }

    pub fn with_dissipator(mut self, dissipator: Dissipator) -> Result<Self> {
        let dim = dissipator.jump_at(0.0).dim();
        if dim != self.basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.basis.dim(),
                found: dim,
            });
        }
        self.dissipators.push(dissipator);
        Ok(self)
    }

    pub fn with_generator(mut self, generator: OperatorFn) -> Result<Self> {
        let g0 = generator(0.0);
        if g0.dim() != self.basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.basis.dim(),
                found: g0.dim(),
            });
        }
        let deviation = g0.hermiticity_deviation();
        if deviation > 1e-12 {
            return Err(Error::NotHermitian { deviation });
        }
        self.generator = Some(generator);
        Ok(self)
    }

    /// Marks the model as living in the frame `ρ_frame = O(t) ρ_lab O†(t)`.
    pub fn in_frame(mut self, frame_map: OperatorFn) -> Self {
        self.frame = Frame::Rotating;
        self.frame_map = Some(frame_map);
        self
    }

    pub fn basis(&self) -> LevelBasis {
        self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn dissipators(&self) -> &[Dissipator] {
        &self.dissipators
    }

    pub fn generator_at(&self, t: f64) -> Option<ComplexMatrix> {
        self.generator.as_ref().map(|g| g(t))
    }

    /// `O(t)` for rotating-frame models, `None` in the lab frame.
    pub fn frame_map_at(&self, t: f64) -> Option<ComplexMatrix> {
        self.frame_map.as_ref().map(|o| o(t))
    }

    /// Maps a lab-frame operator into this model's frame.
    pub fn to_frame(&self, lab: &ComplexMatrix, t: f64) -> ComplexMatrix {
        match self.frame_map_at(t) {
            Some(o) => &(&o * lab) * &o.adjoint(),
            None => *lab,
        }
    }

    /// Maps an operator in this model's frame back to the lab frame.
    pub fn to_lab(&self, framed: &ComplexMatrix, t: f64) -> ComplexMatrix {
        match self.frame_map_at(t) {
            Some(o) => &(&o.adjoint() * framed) * &o,
            None => *framed,
        }
    }
}

fn check_rate(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            bound: "finite and > 0",
        })
    }
}

fn check_phi_rate(phi_rate: f64) -> Result<()> {
    if phi_rate.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "phi_rate",
            value: phi_rate,
            bound: "finite",
        })
    }
}

/// Three-level atom plus ancilla under a linearly rotating squeezing phase.
///
/// Lab frame: one dissipator `(Γ, R(η_t))`. Rotating frame: one dissipator
/// `(Γ̃, O R O† / √cosh 2r)` plus the closed-form steering generator.
pub fn build_three_level_model(
    params0: SqueezeParams,
    phi_rate: f64,
    gamma: f64,
    frame: Frame,
) -> Result<ModelSpec> {
    check_rate("gamma", gamma)?;
    check_phi_rate(phi_rate)?;
    let derived = derive(&params0, gamma)?;
    let schedule = LinearPhase {
        start: params0,
        phi_rate,
    };
    let basis = LevelBasis::ThreePlusAncilla;

    let jump = move |t: f64| {
        jump_operator(basis, Channel::One, &schedule.at(t)).expect("validated parameters")
    };
    match frame {
        Frame::Lab => ModelSpec::new(basis).with_dissipator(Dissipator::constant_rate(gamma, jump)),
        Frame::Rotating => {
            let norm = 1.0 / libm::sqrt(libm::cosh(2.0 * params0.r));
            let framed_jump = move |t: f64| {
                let o = frame_unitary(&schedule.at(t)).expect("validated parameters");
                (&(&o * &jump(t)) * &o.adjoint()).scale_real(norm)
            };
            let g = steering_generator_closed(&derived, phi_rate);
            Ok(ModelSpec::new(basis)
                .with_dissipator(Dissipator::constant_rate(derived.gamma_eff, framed_jump))?
                .with_generator(Box::new(move |_| g))?
                .in_frame(Box::new(move |t| {
                    frame_unitary(&schedule.at(t)).expect("validated parameters")
                })))
        }
    }
}

/// Five-level atom with two independent squeezed channels sharing the
/// phase rate `φ̇`.
pub fn build_five_level_model(
    params1: SqueezeParams,
    params2: SqueezeParams,
    phi_rate: f64,
    gamma1: f64,
    gamma2: f64,
    frame: Frame,
) -> Result<ModelSpec> {
    check_rate("gamma1", gamma1)?;
    check_rate("gamma2", gamma2)?;
    check_phi_rate(phi_rate)?;
    let d1 = derive(&params1, gamma1)?;
    let d2 = derive(&params2, gamma2)?;
    let basis = LevelBasis::FiveLevel;
    let s1 = LinearPhase {
        start: params1,
        phi_rate,
    };
    let s2 = LinearPhase {
        start: params2,
        phi_rate,
    };
    let jump1 =
        move |t: f64| jump_operator(basis, Channel::One, &s1.at(t)).expect("validated parameters");
    let jump2 =
        move |t: f64| jump_operator(basis, Channel::Two, &s2.at(t)).expect("validated parameters");

    match frame {
        Frame::Lab => ModelSpec::new(basis)
            .with_dissipator(Dissipator::constant_rate(gamma1, jump1))?
            .with_dissipator(Dissipator::constant_rate(gamma2, jump2)),
        Frame::Rotating => {
            let o_at = move |t: f64| {
                five_level_frame_unitary(&s1.at(t), &s2.at(t)).expect("validated parameters")
            };
            let n1 = 1.0 / libm::sqrt(libm::cosh(2.0 * params1.r));
            let n2 = 1.0 / libm::sqrt(libm::cosh(2.0 * params2.r));
            let g = steering_generator(basis, Channel::One, &d1, phi_rate)?
                + steering_generator(basis, Channel::Two, &d2, phi_rate)?;
            ModelSpec::new(basis)
                .with_dissipator(Dissipator::constant_rate(d1.gamma_eff, move |t| {
                    let o = o_at(t);
                    (&(&o * &jump1(t)) * &o.adjoint()).scale_real(n1)
                }))?
                .with_dissipator(Dissipator::constant_rate(d2.gamma_eff, move |t| {
                    let o = o_at(t);
                    (&(&o * &jump2(t)) * &o.adjoint()).scale_real(n2)
                }))?
                .with_generator(Box::new(move |_| g))
                .map(|m| m.in_frame(Box::new(o_at)))
        }
    }
}
