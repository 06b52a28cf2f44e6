//! Desired aggregate behavior, its disaggregation via participation
//! factors, and the local PID matching loops.
//!
//! The runtime realization keeps the capacity gain `mu_i` outside the
//! stored filter: each unit steps a unit-dc reference model
//! `(1/(tau_i s + 1)) * T_des` (discretized) and scales the output by the
//! gain in force at that tick. Static, dynamic and adaptive factors all
//! share this path, which is what makes an adaptive run with constant
//! capacities reproduce the plain dynamic run bit for bit.

use crate::error::{Error, Result};
use crate::tf::{discretize_first_order, LtiSimState, RationalZ};

/// Tolerance on the participation sum check `sum(mu) = 1`.
const MU_SUM_TOL: f64 = 1e-9;

/// Desired aggregate frequency-to-power behavior `-D / (tau s + 1)`.
#[derive(Debug, Clone)]
pub struct DesiredBehavior {
    pub droop_d: f64,
    pub tau: f64,
    pub realized: RationalZ,
}

impl DesiredBehavior {
    pub fn new(droop_d: f64, tau: f64, sample_time: f64) -> Result<Self> {
        if !(droop_d.is_finite() && droop_d > 0.0) {
            return Err(Error::InvalidParameter {
                name: "droop_d",
                value: droop_d,
            });
        }
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::InvalidParameter {
                name: "tau",
                value: tau,
            });
        }
        Ok(Self {
            droop_d,
            tau,
            realized: discretize_first_order(-droop_d, tau, sample_time)?,
        })
    }
}

/// Per-unit allocation rule for the desired aggregate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParticipationSpec {
    /// Constant factor `mu` (classic filtered droop share).
    Static { mu: f64 },
    /// First-order low-pass factor `mu / (tau s + 1)`.
    Dynamic { mu: f64, tau: f64 },
    /// Low-pass factor whose dc gain follows the unit's share of the live
    /// capacity total, refreshed every tick.
    AdaptiveDynamic { tau: f64 },
    /// Band-pass complement `1/(tau s + 1) - sum(others)`; at most one per
    /// DVPP, zero steady-state contribution when the other gains sum to 1.
    Residual { tau: f64 },
}

impl ParticipationSpec {
    pub fn is_residual(&self) -> bool {
        matches!(self, ParticipationSpec::Residual { .. })
    }

    pub fn is_adaptive(&self) -> bool {
        matches!(self, ParticipationSpec::AdaptiveDynamic { .. })
    }

    fn fixed_mu(&self) -> Option<f64> {
        match self {
            ParticipationSpec::Static { mu } => Some(*mu),
            ParticipationSpec::Dynamic { mu, .. } => Some(*mu),
            _ => None,
        }
    }

    fn validate(&self) -> Result<()> {
        let check = |name: &'static str, v: f64, positive: bool| -> Result<()> {
            if !v.is_finite() || (positive && v <= 0.0) {
                return Err(Error::InvalidParameter { name, value: v });
            }
            Ok(())
        };
        match *self {
            ParticipationSpec::Static { mu } => {
                check("mu", mu, false)?;
                if !(0.0..=1.0).contains(&mu) {
                    return Err(Error::InvalidParameter {
                        name: "mu",
                        value: mu,
                    });
                }
            }
            ParticipationSpec::Dynamic { mu, tau } => {
                check("mu", mu, false)?;
                if !(0.0..=1.0).contains(&mu) {
                    return Err(Error::InvalidParameter {
                        name: "mu",
                        value: mu,
                    });
                }
                check("tau", tau, true)?;
            }
            ParticipationSpec::AdaptiveDynamic { tau } => check("tau", tau, true)?,
            ParticipationSpec::Residual { tau } => check("tau", tau, true)?,
        }
        Ok(())
    }
}

/// Capacity-proportional dc gains `mu_i = p_ref_i / sum(p_ref)`.
pub fn adaptive_gains(p_refs: &[f64]) -> Result<Vec<f64>> {
    let mut total = 0.0;
    for &p in p_refs {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::NegativeCapacity(p));
        }
        total += p;
    }
    if total <= 0.0 {
        return Err(Error::ZeroTotalCapacity);
    }
    Ok(p_refs.iter().map(|&p| p / total).collect())
}

/// Realizes the participation factors `m_i(z)` for a unit list, in input
/// order. Adaptive units take their dc gains from `p_refs` (entries for
/// non-adaptive units are ignored). The residual, when present, is built
/// last as the literal difference from the fast low-pass.
pub fn build_participation(
    specs: &[ParticipationSpec],
    p_refs: &[f64],
    sample_time: f64,
) -> Result<Vec<RationalZ>> {
    if specs.len() != p_refs.len() {
        return Err(Error::Config(
            "participation specs and capacities differ in length".into(),
        ));
    }
    for s in specs {
        s.validate()?;
    }
    if specs.iter().filter(|s| s.is_residual()).count() > 1 {
        return Err(Error::MultipleResiduals);
    }

    let adaptive_caps: Vec<f64> = specs
        .iter()
        .zip(p_refs)
        .filter(|(s, _)| s.is_adaptive())
        .map(|(_, &p)| p)
        .collect();
    let mut adaptive_mu = if adaptive_caps.is_empty() {
        Vec::new()
    } else {
        adaptive_gains(&adaptive_caps)?
    };
    // Adaptive units split the share not taken by fixed factors.
    let fixed_sum: f64 = specs.iter().filter_map(|s| s.fixed_mu()).sum();
    if adaptive_mu.is_empty() {
        if specs.iter().any(|s| !s.is_residual()) && (fixed_sum - 1.0).abs() > MU_SUM_TOL {
            return Err(Error::ParticipationSum { sum: fixed_sum });
        }
    } else {
        let remainder = 1.0 - fixed_sum;
        if remainder < -MU_SUM_TOL {
            return Err(Error::ParticipationSum { sum: fixed_sum });
        }
        for mu in &mut adaptive_mu {
            *mu *= remainder;
        }
    }

    let mut adaptive_iter = adaptive_mu.into_iter();
    let mut factors: Vec<Option<RationalZ>> = Vec::with_capacity(specs.len());
    for spec in specs {
        let f = match *spec {
            ParticipationSpec::Static { mu } => Some(RationalZ::constant(mu, sample_time)?),
            ParticipationSpec::Dynamic { mu, tau } => {
                Some(discretize_first_order(mu, tau, sample_time)?)
            }
            ParticipationSpec::AdaptiveDynamic { tau } => {
                let mu = adaptive_iter.next().expect("adaptive gain produced above");
                Some(discretize_first_order(mu, tau, sample_time)?)
            }
            ParticipationSpec::Residual { .. } => None,
        };
        factors.push(f);
    }
    if let Some(idx) = specs.iter().position(|s| s.is_residual()) {
        let tau = match specs[idx] {
            ParticipationSpec::Residual { tau } => tau,
            _ => unreachable!(),
        };
        let mut residual = discretize_first_order(1.0, tau, sample_time)?;
        for f in factors.iter().flatten() {
            residual = residual.subtract(f)?;
        }
        factors[idx] = Some(residual);
    }
    Ok(factors.into_iter().map(|f| f.expect("all built")).collect())
}

/// How a unit's reference output is scaled each tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GainMode {
    Fixed(f64),
    /// Rescaled every tick from the live capacities.
    Adaptive,
}

/// Reference model of one non-residual unit: a unit-dc shape filter times
/// the desired behavior, output scaled by the gain in force.
#[derive(Debug, Clone)]
pub struct UnitReference {
    model: LtiSimState,
    pub gain: GainMode,
}

impl UnitReference {
    /// `spec` decides the shape: static factors track `T_des` directly,
    /// dynamic and adaptive ones low-pass it with their own time constant.
    pub fn new(
        spec: &ParticipationSpec,
        desired: &DesiredBehavior,
        sample_time: f64,
    ) -> Result<Self> {
        spec.validate()?;
        let (shape, gain) = match *spec {
            ParticipationSpec::Static { mu } => (desired.realized.clone(), GainMode::Fixed(mu)),
            ParticipationSpec::Dynamic { mu, tau } => (
                discretize_first_order(1.0, tau, sample_time)?.multiply(&desired.realized)?,
                GainMode::Fixed(mu),
            ),
            ParticipationSpec::AdaptiveDynamic { tau } => (
                discretize_first_order(1.0, tau, sample_time)?.multiply(&desired.realized)?,
                GainMode::Adaptive,
            ),
            ParticipationSpec::Residual { .. } => {
                return Err(Error::Config(
                    "residual units use the statcom reference path".into(),
                ))
            }
        };
        Ok(Self {
            model: LtiSimState::new(&shape),
            gain,
        })
    }

    /// One tick of the desired local power: `mu * (shape * T_des)(delta_f)`.
    /// `mu_now` is consulted only in adaptive mode.
    pub fn desired_step(&mut self, delta_f: f64, mu_now: f64) -> Result<f64> {
        if !delta_f.is_finite() {
            return Err(Error::NonFinite {
                what: "frequency deviation",
                value: delta_f,
            });
        }
        let shaped = self.model.step(delta_f);
        let mu = match self.gain {
            GainMode::Fixed(mu) => mu,
            GainMode::Adaptive => mu_now,
        };
        Ok(mu * shaped)
    }

    pub fn reset(&mut self) {
        self.model.reset();
    }
}

/// Fast low-pass of the desired behavior feeding the residual split.
#[derive(Debug, Clone)]
pub struct ResidualReference {
    model: LtiSimState,
}

impl ResidualReference {
    pub fn new(tau: f64, desired: &DesiredBehavior, sample_time: f64) -> Result<Self> {
        let shape = discretize_first_order(1.0, tau, sample_time)?.multiply(&desired.realized)?;
        Ok(Self {
            model: LtiSimState::new(&shape),
        })
    }

    /// Fast-filtered desired aggregate at this tick.
    pub fn fast_step(&mut self, delta_f: f64) -> Result<f64> {
        if !delta_f.is_finite() {
            return Err(Error::NonFinite {
                what: "frequency deviation",
                value: delta_f,
            });
        }
        Ok(self.model.step(delta_f))
    }

    pub fn reset(&mut self) {
        self.model.reset();
    }
}

/// Residual desired power: the fast-filtered aggregate minus the slower
/// units' desired outputs for the same sample.
pub fn statcom_desired_power(fast_output: f64, others_desired: &[f64]) -> f64 {
    let mut out = fast_output;
    for &d in others_desired {
        out -= d;
    }
    out
}

/// Parallel-form PID gains with a first-order derivative filter and
/// clamping anti-windup. Gains are signed: a plant with negative gain
/// (the published wind model) takes negative `kp`/`ki`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PidConfig {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    /// Derivative filter time constant; 0 disables filtering.
    pub derivative_filter_tau: f64,
}

impl PidConfig {
    pub fn pi(kp: f64, ki: f64) -> Self {
        Self {
            kp,
            ki,
            kd: 0.0,
            derivative_filter_tau: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("kp", self.kp),
            ("ki", self.ki),
            ("kd", self.kd),
            ("derivative_filter_tau", self.derivative_filter_tau),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter { name, value: v });
            }
        }
        if self.derivative_filter_tau < 0.0 {
            return Err(Error::InvalidParameter {
                name: "derivative_filter_tau",
                value: self.derivative_filter_tau,
            });
        }
        Ok(())
    }
}

/// Matching PID state. The derivative path is disabled when `kd = 0`;
/// its memory still tracks the error so a later nonzero `kd` behaves as if
/// it had been watching all along.
#[derive(Debug, Clone)]
pub struct MatchingPid {
    cfg: PidConfig,
    sample_time: f64,
    integrator: f64,
    prev_error: f64,
    derivative: f64,
    /// Saturation interval applied on the last step.
    pub last_sat: (f64, f64),
}

impl MatchingPid {
    pub fn new(cfg: PidConfig, sample_time: f64) -> Result<Self> {
        cfg.validate()?;
        if !(sample_time.is_finite() && sample_time > 0.0) {
            return Err(Error::InvalidSampleTime(sample_time));
        }
        Ok(Self {
            cfg,
            sample_time,
            integrator: 0.0,
            prev_error: 0.0,
            derivative: 0.0,
            last_sat: (f64::NEG_INFINITY, f64::INFINITY),
        })
    }

    pub fn config(&self) -> &PidConfig {
        &self.cfg
    }

    /// One controller step on `error`, output clamped to `sat`. The
    /// integrator commits only when the output is not clamped, so a
    /// saturated interval contributes no windup at all.
    pub fn step(&mut self, error: f64, sat: (f64, f64)) -> Result<f64> {
        let (lo, hi) = sat;
        if lo > hi {
            return Err(Error::InvertedSaturation { lo, hi });
        }
        if !error.is_finite() {
            return Err(Error::NonFinite {
                what: "matching error",
                value: error,
            });
        }
        self.last_sat = sat;
        let t = self.sample_time;
        let i_candidate = self.integrator + self.cfg.ki * t * error;
        if self.cfg.kd != 0.0 {
            let raw = (error - self.prev_error) / t;
            if self.cfg.derivative_filter_tau > 0.0 {
                let alpha = self.cfg.derivative_filter_tau / (self.cfg.derivative_filter_tau + t);
                self.derivative = alpha * self.derivative + (1.0 - alpha) * raw;
            } else {
                self.derivative = raw;
            }
        } else {
            self.derivative = 0.0;
        }
        self.prev_error = error;
        let unsat = self.cfg.kp * error + i_candidate + self.cfg.kd * self.derivative;
        if unsat > hi {
            Ok(hi)
        } else if unsat < lo {
            Ok(lo)
        } else {
            self.integrator = i_candidate;
            Ok(unsat)
        }
    }

    pub fn reset(&mut self) {
        self.integrator = 0.0;
        self.prev_error = 0.0;
        self.derivative = 0.0;
    }

    /// Snapshot of the controller memory, for checkpointing or warm starts.
    pub fn state(&self) -> PidState {
        PidState {
            integrator: self.integrator,
            prev_error: self.prev_error,
            derivative: self.derivative,
        }
    }

    pub fn restore(&mut self, state: PidState) {
        self.integrator = state.integrator;
        self.prev_error = state.prev_error;
        self.derivative = state.derivative;
    }
}

/// Controller memory captured by [`MatchingPid::state`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PidState {
    pub integrator: f64,
    pub prev_error: f64,
    pub derivative: f64,
}

/// Matching-controller gains tuned in-repo against the simulation plants
/// (stabilized denominators, 10 ms tick, one-tick feedback delay).
///
/// Procedure: pick `ki` for dc convergence, then `kp` for damping, `kd`
/// left at zero. The wind plant's gain is large and negative
/// (dc ~ -2178), so its loop gain is scaled down and sign-flipped;
/// the PV loop sees a mid-band gain near +1.
pub mod default_gains {
    use super::PidConfig;

    pub const WIND: PidConfig = PidConfig {
        kp: -3.0e-4,
        ki: -3.0e-3,
        kd: 0.0,
        derivative_filter_tau: 0.0,
    };

    pub const PV: PidConfig = PidConfig {
        kp: 2.0,
        ki: 12.0,
        kd: 0.0,
        derivative_filter_tau: 0.0,
    };
}
