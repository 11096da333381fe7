//! Fixed-step RK4 integration of the time-dependent Lindblad equation.
//!
//! The dissipator acts directly on the density matrix; no superoperator is
//! formed. States are validated (trace, Hermiticity, positivity) every
//! [`StepControl::check_stride`] steps and at every recording point.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_4, PI};

use crate::densemat::{ComplexMatrix, ComplexVector};
use crate::squeeze::{
    build_five_level_model, build_three_level_model, dark_state, derive, Channel, Frame,
    LevelBasis, ModelSpec, SqueezeParams,
};
use crate::{Error, Invariant, Result, C64};

pub const TRACE_TOL: f64 = 1e-9;
pub const HERMITICITY_TOL: f64 = 1e-10;
/// Most negative eigenvalue tolerated in a density matrix.
pub const POSITIVITY_TOL: f64 = 1e-9;

/// Largest per-step change of a tracked phase accepted by the unwrapper.
pub const MAX_PHASE_INCREMENT: f64 = FRAC_PI_4;

/// Worst-case invariant deviations seen over one or more states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateValidity {
    /// `|tr ρ − 1|`
    pub trace_error: f64,
    /// `‖ρ − ρ†‖_F`
    pub hermiticity: f64,
    pub min_eigenvalue: f64,
}

impl StateValidity {
    pub const PERFECT: Self = Self {
        trace_error: 0.0,
        hermiticity: 0.0,
        min_eigenvalue: f64::INFINITY,
    };

    pub fn of(mat: &ComplexMatrix) -> Result<Self> {
        if !mat.is_finite() {
            return Err(Error::InvalidState {
                invariant: Invariant::Finiteness,
                magnitude: f64::NAN,
            });
        }
        let hermiticity = mat.hermiticity_deviation();
        let min_eigenvalue = if hermiticity < HERMITICITY_TOL {
            mat.herm_eigvals()?[0]
        } else {
            f64::NAN
        };
        Ok(Self {
            trace_error: (mat.trace() - C64::new(1.0, 0.0)).norm(),
            hermiticity,
            min_eigenvalue,
        })
    }

    pub fn merge(self, other: Self) -> Self {
        Self {
            trace_error: self.trace_error.max(other.trace_error),
            hermiticity: self.hermiticity.max(other.hermiticity),
            min_eigenvalue: self.min_eigenvalue.min(other.min_eigenvalue),
        }
    }

    /// First violated invariant and the offending magnitude.
    pub fn violation(&self) -> Option<(Invariant, f64)> {
        if !(self.trace_error <= TRACE_TOL) {
            Some((Invariant::Trace, self.trace_error))
        } else if !(self.hermiticity < HERMITICITY_TOL) {
            Some((Invariant::Hermiticity, self.hermiticity))
        } else if !(self.min_eigenvalue >= -POSITIVITY_TOL) {
            Some((Invariant::Positivity, self.min_eigenvalue))
        } else {
            None
        }
    }
}

/// A Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix(ComplexMatrix);

impl DensityMatrix {
    pub fn new(mat: ComplexMatrix) -> Result<Self> {
        if let Some((invariant, magnitude)) = StateValidity::of(&mat)?.violation() {
            return Err(Error::InvalidState {
                invariant,
                magnitude,
            });
        }
        Ok(Self(mat))
    }

    /// `|ψ⟩⟨ψ|` for the normalized `ψ`.
    pub fn pure(psi: &ComplexVector) -> Result<Self> {
        let norm = psi.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidState {
                invariant: Invariant::Trace,
                magnitude: 1.0,
            });
        }
        Self::new(ComplexMatrix::projector(&psi.normalized()))
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        Ok(Self(
            ComplexMatrix::identity(dim)?.scale_real(1.0 / dim as f64),
        ))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn validity(&self) -> StateValidity {
        StateValidity::of(&self.0).expect("validated at construction")
    }

    pub fn into_inner(self) -> ComplexMatrix {
        self.0
    }
}

/// `⟨bra|ρ|ket⟩`.
pub fn coherence(rho: &DensityMatrix, bra: &ComplexVector, ket: &ComplexVector) -> Result<C64> {
    if bra.dim() != ket.dim() {
        return Err(Error::DimensionMismatch {
            expected: bra.dim(),
            found: ket.dim(),
        });
    }
    rho.matrix().matrix_element(bra, ket)
}

/// Lindblad right-hand side for an arbitrary operator `rho` (the map is
/// linear, so `rho` need not be a valid state):
/// `Σᵢ Γᵢ (Rᵢ ρ Rᵢ† − ½{Rᵢ†Rᵢ, ρ}) − i[G, ρ]`.
pub fn lindblad_rhs(model: &ModelSpec, rho: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    if rho.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: rho.dim(),
        });
    }
    Ok(rhs(model, rho, t))
}

fn rhs(model: &ModelSpec, rho: &ComplexMatrix, t: f64) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(rho.dim()).expect("dimension checked");
    for d in model.dissipators() {
        let rate = d.rate_at(t);
        let r = d.jump_at(t);
        let r_dag = r.adjoint();
        let k = &r_dag * &r;
        let sandwich = &(&r * rho) * &r_dag;
        let anti = &k * rho + rho * &k;
        out += sandwich.scale_real(rate) - anti.scale_real(0.5 * rate);
    }
    if let Some(g) = model.generator_at(t) {
        let comm = &g * rho - rho * &g;
        out += comm.scale(C64::new(0.0, -1.0));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordMode {
    /// Keep the full density matrix at every recording point.
    States,
    /// Keep only times, tracked coherences and phases.
    Observables,
}

/// Fixed-step settings. The step actually used is `t_end / ceil(t_end / step)`
/// so the final time is hit exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub step: f64,
    pub record_stride: usize,
    pub check_stride: usize,
    pub record: RecordMode,
}

impl StepControl {
    pub fn with_step(step: f64) -> Self {
        Self {
            step,
            record_stride: 64,
            check_stride: 64,
            record: RecordMode::States,
        }
    }

    /// `h = min(0.02 / Γ̃_max, 0.02 / |φ̇|)`.
    pub fn for_rates(gamma_eff_max: f64, phi_rate: f64) -> Self {
        let mut step = 0.02 / gamma_eff_max;
        if phi_rate != 0.0 {
            step = step.min(0.02 / phi_rate.abs());
        }
        Self::with_step(step)
    }

    pub fn recording(mut self, record: RecordMode, stride: usize) -> Self {
        self.record = record;
        self.record_stride = stride.max(1);
        self
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Empty under [`RecordMode::Observables`].
    pub states: Vec<ComplexMatrix>,
    /// Tracked coherence at each recorded time (empty without a tracker).
    pub tracked: Vec<C64>,
    /// Continuously unwrapped argument of the tracked coherence relative to
    /// its initial value.
    pub phase_track: Vec<f64>,
    pub steps: usize,
    pub step_size: f64,
    /// Worst invariant deviations over every checked state.
    pub validity: StateValidity,
    pub final_state: DensityMatrix,
}

/// Observable evaluated along the trajectory and phase-unwrapped.
pub type Tracker<'a> = &'a dyn Fn(f64, &ComplexMatrix) -> C64;

struct PhaseUnwrapper {
    last: C64,
    total: f64,
}

impl PhaseUnwrapper {
    fn push(&mut self, z: C64, t: f64) -> Result<f64> {
        if z.norm_sqr() > 0.0 && self.last.norm_sqr() > 0.0 {
            let step = (z * self.last.conj()).arg();
            if !(step.abs() < MAX_PHASE_INCREMENT) {
                return Err(Error::IntegrationFailure {
                    time: t,
                    invariant: Invariant::PhaseIncrement,
                    magnitude: step,
                });
            }
            self.total += step;
        }
        self.last = z;
        Ok(self.total)
    }
}

/// Classical RK4 from `t = 0` to `t_end`.
pub fn integrate(
    model: &ModelSpec,
    rho0: &DensityMatrix,
    t_end: f64,
    control: &StepControl,
    tracker: Option<Tracker<'_>>,
) -> Result<Trajectory> {
    if rho0.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: rho0.dim(),
        });
    }
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(Error::InvalidParameter {
            name: "t_end",
            value: t_end,
            bound: "finite and > 0",
        });
    }
    if !(control.step.is_finite() && control.step > 0.0) {
        return Err(Error::InvalidParameter {
            name: "step",
            value: control.step,
            bound: "finite and > 0",
        });
    }
    let n_steps = libm::ceil(t_end / control.step).max(1.0) as usize;
    let h = t_end / n_steps as f64;
    let record_stride = control.record_stride.max(1);
    let check_stride = control.check_stride.max(1);

    let mut rho = *rho0.matrix();
    let mut traj = Trajectory {
        times: Vec::new(),
        states: Vec::new(),
        tracked: Vec::new(),
        phase_track: Vec::new(),
        steps: n_steps,
        step_size: h,
        validity: rho0.validity(),
        final_state: *rho0,
    };
    let mut unwrapper = tracker.map(|f| PhaseUnwrapper {
        last: f(0.0, &rho),
        total: 0.0,
    });
    record(
        &mut traj,
        control.record,
        0.0,
        &rho,
        tracker,
        unwrapper.as_ref(),
    );

    for step in 1..=n_steps {
        let t0 = (step - 1) as f64 * h;
        let t_half = t0 + 0.5 * h;
        let t1 = step as f64 * h;
        let k1 = rhs(model, &rho, t0);
        let k2 = rhs(model, &(rho + k1.scale_real(0.5 * h)), t_half);
        let k3 = rhs(model, &(rho + k2.scale_real(0.5 * h)), t_half);
        let k4 = rhs(model, &(rho + k3.scale_real(h)), t1);
        rho += (k1 + k2.scale_real(2.0) + k3.scale_real(2.0) + k4).scale_real(h / 6.0);

        if let (Some(u), Some(f)) = (unwrapper.as_mut(), tracker) {
            u.push(f(t1, &rho), t1)?;
        }
        let recording = step % record_stride == 0 || step == n_steps;
        if recording || step % check_stride == 0 {
            let validity = StateValidity::of(&rho).map_err(|_| Error::IntegrationFailure {
                time: t1,
                invariant: Invariant::Finiteness,
                magnitude: f64::NAN,
            })?;
            if let Some((invariant, magnitude)) = validity.violation() {
                return Err(Error::IntegrationFailure {
                    time: t1,
                    invariant,
                    magnitude,
                });
            }
            traj.validity = traj.validity.merge(validity);
        }
        if recording {
            record(
                &mut traj,
                control.record,
                t1,
                &rho,
                tracker,
                unwrapper.as_ref(),
            );
        }
    }
    traj.final_state = DensityMatrix(rho);
    Ok(traj)
}

fn record(
    traj: &mut Trajectory,
    mode: RecordMode,
    t: f64,
    rho: &ComplexMatrix,
    tracker: Option<Tracker<'_>>,
    unwrapper: Option<&PhaseUnwrapper>,
) {
    traj.times.push(t);
    if mode == RecordMode::States {
        traj.states.push(*rho);
    }
    if let (Some(f), Some(u)) = (tracker, unwrapper) {
        traj.tracked.push(f(t, rho));
        traj.phase_track.push(u.total);
    }
}

/// Cyclic drive `φ_t = φ₀ + φ̇ t` over one period `T = 2π/φ̇`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopSchedule {
    pub phi0: f64,
    pub phi_rate: f64,
    pub period: f64,
    pub frame: Frame,
}

impl LoopSchedule {
    pub fn new(phi0: f64, phi_rate: f64, frame: Frame) -> Result<Self> {
        if !(phi_rate.is_finite() && phi_rate > 0.0) {
            return Err(Error::InvalidParameter {
                name: "phi_rate",
                value: phi_rate,
                bound: "finite and > 0",
            });
        }
        if !phi0.is_finite() {
            return Err(Error::InvalidParameter {
                name: "phi0",
                value: phi0,
                bound: "finite",
            });
        }
        Ok(Self {
            phi0,
            phi_rate,
            period: 2.0 * PI / phi_rate,
            frame,
        })
    }
}

/// Which atom runs the loop. Rates are bare decay rates `Γ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LoopSystem {
    /// Three-level atom plus ancilla; coherence `⟨ψ_DF|ρ|a⟩`.
    ThreeLevel { r: f64, gamma: f64 },
    /// Five-level atom; coherence `⟨ψ₁|ρ|ψ₂⟩`.
    FiveLevel {
        r1: f64,
        r2: f64,
        gamma1: f64,
        gamma2: f64,
    },
}

impl LoopSystem {
    fn max_gamma_eff(&self) -> Result<f64> {
        Ok(match *self {
            LoopSystem::ThreeLevel { r, gamma } => {
                derive(&SqueezeParams::new(r, 0.0)?, gamma)?.gamma_eff
            }
            LoopSystem::FiveLevel {
                r1,
                r2,
                gamma1,
                gamma2,
            } => {
                let d1 = derive(&SqueezeParams::new(r1, 0.0)?, gamma1)?;
                let d2 = derive(&SqueezeParams::new(r2, 0.0)?, gamma2)?;
                d1.gamma_eff.max(d2.gamma_eff)
            }
        })
    }

    /// Model in the schedule's frame plus the (bra, ket) of the tracked
    /// lab-frame coherence, both taken at `φ₀`.
    pub fn build(
        &self,
        schedule: &LoopSchedule,
    ) -> Result<(ModelSpec, ComplexVector, ComplexVector)> {
        match *self {
            LoopSystem::ThreeLevel { r, gamma } => {
                let p0 = SqueezeParams::new(r, schedule.phi0)?;
                let model = build_three_level_model(p0, schedule.phi_rate, gamma, schedule.frame)?;
                let basis = LevelBasis::ThreePlusAncilla;
                let bra = dark_state(basis, Channel::One, &p0)?;
                let ket = basis.basis_vector(LevelBasis::ANCILLA)?;
                Ok((model, bra, ket))
            }
            LoopSystem::FiveLevel {
                r1,
                r2,
                gamma1,
                gamma2,
            } => {
                let p1 = SqueezeParams::new(r1, schedule.phi0)?;
                let p2 = SqueezeParams::new(r2, schedule.phi0)?;
                let model = build_five_level_model(
                    p1,
                    p2,
                    schedule.phi_rate,
                    gamma1,
                    gamma2,
                    schedule.frame,
                )?;
                let basis = LevelBasis::FiveLevel;
                let bra = dark_state(basis, Channel::One, &p1)?;
                let ket = dark_state(basis, Channel::Two, &p2)?;
                Ok((model, bra, ket))
            }
        }
    }

    /// Default step control for one loop of `schedule`.
    pub fn step_control(&self, schedule: &LoopSchedule) -> Result<StepControl> {
        Ok(StepControl::for_rates(
            self.max_gamma_eff()?,
            schedule.phi_rate,
        ))
    }
}

#[derive(Debug, Clone)]
pub struct LoopResult {
    pub initial_coherence: C64,
    pub final_coherence: C64,
    /// Unwrapped phase of the final coherence relative to the initial one.
    pub phase: f64,
    /// `|final| / |initial|`
    pub visibility: f64,
    /// Final state mapped back to the lab frame.
    pub final_lab_state: ComplexMatrix,
    pub trajectory: Trajectory,
}

/// Integrates one full loop and reads out the interferometric coherence.
///
/// The default initial state is `(|bra⟩ + |ket⟩)/√2` in the lab frame. The
/// readout always uses the lab frame and the dark states at `φ₀`; a
/// rotating-frame run is mapped back with `O†(φ₀ + 2π)`.
pub fn run_loop(
    system: &LoopSystem,
    schedule: &LoopSchedule,
    rho0: Option<DensityMatrix>,
    control: Option<StepControl>,
) -> Result<LoopResult> {
    let (model, bra, ket) = system.build(schedule)?;
    let rho0 = match rho0 {
        Some(rho) => rho,
        None => DensityMatrix::pure(&(bra + ket))?,
    };
    let control = match control {
        Some(c) => c,
        None => system.step_control(schedule)?,
    };

    let tracker = |t: f64, rho: &ComplexMatrix| match model.frame_map_at(t) {
        Some(o) => {
            let b = o.apply(&bra).expect("dims agree");
            let k = o.apply(&ket).expect("dims agree");
            rho.matrix_element(&b, &k).expect("dims agree")
        }
        None => rho.matrix_element(&bra, &ket).expect("dims agree"),
    };
    let framed0 = DensityMatrix::new(model.to_frame(rho0.matrix(), 0.0))?;
    let trajectory = integrate(&model, &framed0, schedule.period, &control, Some(&tracker))?;

    let final_lab_state = model.to_lab(trajectory.final_state.matrix(), schedule.period);
    let initial_coherence = coherence(&rho0, &bra, &ket)?;
    let final_coherence = final_lab_state.matrix_element(&bra, &ket)?;
    let phase = *trajectory.phase_track.last().expect("at least one record");
    Ok(LoopResult {
        initial_coherence,
        final_coherence,
        phase,
        visibility: final_coherence.norm() / initial_coherence.norm(),
        final_lab_state,
        trajectory,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::squeeze::steering_generator_closed;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// A mixed 4×4 state with every entry populated.
    fn sample_state() -> DensityMatrix {
        let a = ComplexMatrix::from_rows(
            4,
            &[
                c(0.3, 0.0),
                c(0.1, 0.2),
                c(-0.2, 0.1),
                c(0.4, -0.3),
                c(0.2, 0.1),
                c(0.5, 0.0),
                c(0.0, 0.3),
                c(0.1, 0.1),
                c(0.1, -0.4),
                c(0.2, 0.2),
                c(0.7, 0.0),
                c(-0.3, 0.2),
                c(0.0, 0.1),
                c(0.3, -0.1),
                c(0.2, 0.0),
                c(0.6, 0.0),
            ],
        )
        .unwrap();
        let m = &a * &a.adjoint();
        let tr = m.trace().re;
        DensityMatrix::new(m.scale_real(1.0 / tr)).unwrap()
    }

    #[test]
    fn density_matrix_validation() {
        let bad = ComplexMatrix::from_diagonal(&[0.5, 0.6]).unwrap();
        assert!(matches!(
            DensityMatrix::new(bad),
            Err(Error::InvalidState {
                invariant: Invariant::Trace,
                ..
            })
        ));
        let neg = ComplexMatrix::from_diagonal(&[1.5, -0.5]).unwrap();
        assert!(matches!(
            DensityMatrix::new(neg),
            Err(Error::InvalidState {
                invariant: Invariant::Positivity,
                ..
            })
        ));
        let skew = ComplexMatrix::from_real_rows(2, &[0.5, 0.1, 0.0, 0.5]).unwrap();
        assert!(matches!(
            DensityMatrix::new(skew),
            Err(Error::InvalidState {
                invariant: Invariant::Hermiticity,
                ..
            })
        ));
    }

    #[test]
    fn coherence_examples() {
        let x = ComplexVector::basis(4, 0).unwrap();
        let y = ComplexVector::basis(4, 3).unwrap();
        let psi = (x + y).normalized();
        let rho = DensityMatrix::pure(&psi).unwrap();
        assert!((coherence(&rho, &x, &y).unwrap() - c(0.5, 0.0)).norm() < 1e-15);
        let mixed = DensityMatrix::maximally_mixed(4).unwrap();
        assert_eq!(coherence(&mixed, &x, &y).unwrap(), c(0.0, 0.0));
        let wrong = ComplexVector::basis(3, 0).unwrap();
        assert!(coherence(&mixed, &wrong, &y).is_err());
    }

    #[test]
    fn rhs_vanishes_on_static_dark_state() {
        let p = SqueezeParams::new(0.7, 1.9).unwrap();
        let model = build_three_level_model(p, 0.0, 1.0, Frame::Lab).unwrap();
        let psi = dark_state(LevelBasis::ThreePlusAncilla, Channel::One, &p).unwrap();
        let rho = DensityMatrix::pure(&psi).unwrap();
        let d = lindblad_rhs(&model, rho.matrix(), 12.0).unwrap();
        assert!(d.frobenius_norm() < 1e-12);
    }

    #[test]
    fn rhs_is_traceless_and_hermiticity_preserving() {
        let p = SqueezeParams::new(0.5, 0.2).unwrap();
        for frame in [Frame::Lab, Frame::Rotating] {
            let model = build_three_level_model(p, 0.05, 1.0, frame).unwrap();
            let d = lindblad_rhs(&model, sample_state().matrix(), 3.0).unwrap();
            assert!(d.trace().norm() < 1e-12);
            assert!(d.hermiticity_deviation() < 1e-12);
        }
    }

    #[test]
    fn rhs_rejects_wrong_dimension() {
        let p = SqueezeParams::new(0.5, 0.2).unwrap();
        let model = build_three_level_model(p, 0.05, 1.0, Frame::Lab).unwrap();
        let rho = ComplexMatrix::identity(5).unwrap();
        assert!(lindblad_rhs(&model, &rho, 0.0).is_err());
    }

    #[test]
    fn rotating_rhs_ancilla_column() {
        // Direct expansion of −i[G, ρ] at (−1, a): i(φ̇/2)(α ρ₋ₐ − β ρ₊ₐ).
        let p = SqueezeParams::new(0.5, 0.4).unwrap();
        let phi_rate = 0.03;
        let d = derive(&p, 1.0).unwrap();
        let model = build_three_level_model(p, phi_rate, 1.0, Frame::Rotating).unwrap();
        let rho = sample_state();
        let out = lindblad_rhs(&model, rho.matrix(), 7.0).unwrap();
        let m = rho.matrix();
        let expected = c(0.0, 0.5 * phi_rate) * (m[(2, 3)] * d.alpha - m[(0, 3)] * d.beta);
        assert!((out[(2, 3)] - expected).norm() < 1e-14);
    }

    #[test]
    fn rotating_jump_is_diagonal_projector() {
        let p = SqueezeParams::new(1.2, 2.5).unwrap();
        let model = build_three_level_model(p, 0.1, 1.0, Frame::Rotating).unwrap();
        for t in [0.0, 3.3, 40.0] {
            let r = model.dissipators()[0].jump_at(t);
            let k = &r.adjoint() * &r;
            let expected = ComplexMatrix::from_diagonal(&[1.0, 1.0, 0.0, 0.0]).unwrap();
            assert!(k.frobenius_distance(&expected).unwrap() < 1e-12);
        }
        let g = model.generator_at(1.0).unwrap();
        let d = derive(&p, 1.0).unwrap();
        assert_eq!(g, steering_generator_closed(&d, 0.1));
    }

    #[test]
    fn vacuum_cascade_decays_to_ground() {
        let p = SqueezeParams::new(0.0, 0.0).unwrap();
        let model = build_three_level_model(p, 0.0, 1.0, Frame::Lab).unwrap();
        let rho0 = DensityMatrix::pure(&ComplexVector::basis(4, 0).unwrap()).unwrap();
        let traj = integrate(&model, &rho0, 30.0, &StepControl::with_step(0.01), None).unwrap();
        for s in &traj.states {
            assert!((s.trace().re - 1.0).abs() < 1e-9);
        }
        let last = traj.final_state.matrix();
        assert!(last[(2, 2)].re > 1.0 - 1e-9);
        assert!(traj.validity.violation().is_none());
    }

    #[test]
    fn step_is_adjusted_to_hit_end_time() {
        let p = SqueezeParams::new(0.3, 0.0).unwrap();
        let model = build_three_level_model(p, 0.0, 1.0, Frame::Lab).unwrap();
        let rho0 = DensityMatrix::maximally_mixed(4).unwrap();
        let control = StepControl::with_step(0.3).recording(RecordMode::Observables, 4);
        let traj = integrate(&model, &rho0, 1.0, &control, None).unwrap();
        assert_eq!(traj.steps, 4);
        assert_eq!(traj.step_size, 0.25);
        assert_eq!(*traj.times.last().unwrap(), 1.0);
        assert!(traj.states.is_empty());
        assert!(integrate(&model, &rho0, 0.0, &control, None).is_err());
    }

    #[test]
    fn unstable_step_is_reported() {
        let p = SqueezeParams::new(0.5, 0.0).unwrap();
        let model = build_three_level_model(p, 0.0, 1.0, Frame::Lab).unwrap();
        let rho0 = DensityMatrix::pure(&ComplexVector::basis(4, 0).unwrap()).unwrap();
        let err = integrate(&model, &rho0, 200.0, &StepControl::with_step(5.0), None).unwrap_err();
        assert!(matches!(err, Error::IntegrationFailure { .. }));
    }

    #[test]
    fn loop_without_squeezing_is_trivial() {
        let sys = LoopSystem::ThreeLevel { r: 0.0, gamma: 1.0 };
        let sched = LoopSchedule::new(0.0, 0.1, Frame::Lab).unwrap();
        let res = run_loop(&sys, &sched, None, None).unwrap();
        assert!(res.phase.abs() < 1e-9);
        assert!((res.visibility - 1.0).abs() < 1e-9);
    }

    #[test]
    fn loop_schedule_validation() {
        assert!(LoopSchedule::new(0.0, 0.0, Frame::Lab).is_err());
        let s = LoopSchedule::new(0.3, 0.25, Frame::Lab).unwrap();
        assert!((s.period * s.phi_rate - 2.0 * PI).abs() < 1e-12);
    }
}
