//! Experiment orchestration: declarative scenario description, the
//! deterministic closed-loop runner, variant comparison, and metrics.
//!
//! Tick order, fixed by the control structure: apply schedules, grid step
//! to the measured frequency deviation, desired powers (wind, PV, then the
//! STATCOM residual), matching PIDs, plant steps, absolute setpoints with
//! clamps, and finally the power balance that feeds the next tick's swing
//! step.

pub mod config;
pub mod metrics;
pub mod trace;

pub use metrics::{compute_metrics, EpsilonSpec, Metrics};
pub use trace::Trace;

use std::collections::BTreeMap;

use crate::control::{
    DesiredBehavior, MatchingPid, ParticipationSpec, PidConfig, ResidualReference, UnitReference,
};
use crate::error::{Error, Result};
use crate::grid::{freq_deviation, GridMode, GridModel, MeasurementEmulation};
use crate::plants::{
    make_plant, to_absolute_setpoint, CapacityProfile, CapacitySegment, PlantKind, PlantModel,
};

/// Participation family of a unit; the scenario's `compare` swaps this
/// while keeping everything else fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorKind {
    Static,
    Dynamic,
    Adaptive,
    Residual,
}

/// The three variants evaluated side by side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum VariantKind {
    Spf,
    Dpf,
    Adpf,
}

impl VariantKind {
    pub fn label(&self) -> &'static str {
        match self {
            VariantKind::Spf => "spf",
            VariantKind::Dpf => "dpf",
            VariantKind::Adpf => "adpf",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "spf" => Ok(VariantKind::Spf),
            "dpf" => Ok(VariantKind::Dpf),
            "adpf" => Ok(VariantKind::Adpf),
            other => Err(Error::Config(format!(
                "unknown participation kind '{other}' (expected spf, dpf or adpf)"
            ))),
        }
    }
}

/// Optional STATCOM energy budget; absent means unlimited. The storage is
/// small, so sustained output collapses once the budget drains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBudget {
    /// Usable energy, pu * s.
    pub capacity_pu_s: f64,
    /// Stored energy at t = 0, pu * s.
    pub initial_pu_s: f64,
}

/// One resource of the DVPP, fully resolved to per-unit quantities.
#[derive(Debug, Clone)]
pub struct UnitSetup {
    pub name: String,
    pub plant: PlantKind,
    /// Initial reference power (capacity share base), pu.
    pub p_ref: f64,
    /// Initial converter limit, pu.
    pub p_max: f64,
    /// Nominal dc share; ignored by residual factors, refreshed online by
    /// adaptive ones.
    pub mu: f64,
    /// Participation time constant, seconds; ignored by static factors.
    pub tau: f64,
    pub kind: FactorKind,
    /// Matching controller; the STATCOM pass-through has none.
    pub pid: Option<PidConfig>,
    pub energy_budget: Option<EnergyBudget>,
}

impl UnitSetup {
    pub fn participation_spec(&self) -> ParticipationSpec {
        match self.kind {
            FactorKind::Static => ParticipationSpec::Static { mu: self.mu },
            FactorKind::Dynamic => ParticipationSpec::Dynamic {
                mu: self.mu,
                tau: self.tau,
            },
            FactorKind::Adaptive => ParticipationSpec::AdaptiveDynamic { tau: self.tau },
            FactorKind::Residual => ParticipationSpec::Residual { tau: self.tau },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventKind {
    /// Relative change of the commanded grid frequency, pu.
    FrequencyRefStep { delta_f_pu: f64 },
    /// Relative change of the total load, pu.
    LoadStep { delta_p_pu: f64 },
    /// New capacity values for one unit (by index into `units`).
    CapacityChange {
        unit: usize,
        p_ref_pu: f64,
        p_max_pu: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub t: f64,
    pub kind: EventKind,
}

/// Grid configuration before the live model is built.
#[derive(Debug, Clone)]
pub struct GridSetup {
    pub h: f64,
    pub d: f64,
    pub mode: GridMode,
}

/// Measurement emulation flags.
#[derive(Debug, Clone, Copy)]
pub struct MeasurementSetup {
    pub quantize: bool,
    pub resolution_pu: f64,
    pub update_period_s: f64,
}

impl Default for MeasurementSetup {
    fn default() -> Self {
        Self {
            quantize: false,
            resolution_pu: 1e-5,
            update_period_s: 0.00667,
        }
    }
}

/// Declarative description of one experiment. Units are stored in the
/// semantically required stepping order: wind, PV, STATCOM.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub duration: f64,
    pub sample_time: f64,
    pub s_base_kw: f64,
    pub f_base_hz: f64,
    /// Nominal grid frequency, pu of `f_base_hz`.
    pub f_nominal_pu: f64,
    /// Total load at t = 0, pu.
    pub base_load: f64,
    pub grid: GridSetup,
    pub droop_d: f64,
    pub desired_tau: f64,
    /// Roll-off time constant of the fast aggregate filter (the residual
    /// factor's low-pass), seconds.
    pub residual_tau: f64,
    pub dvpp_enabled: bool,
    pub units: [UnitSetup; 3],
    pub events: Vec<Event>,
    pub measurement: MeasurementSetup,
}

impl Scenario {
    /// Structural validation beyond what the constructors enforce.
    pub fn validate(&self) -> Result<()> {
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(Error::InvalidParameter {
                name: "duration",
                value: self.duration,
            });
        }
        if !(self.sample_time.is_finite() && self.sample_time > 0.0) {
            return Err(Error::InvalidSampleTime(self.sample_time));
        }
        if self.units[0].plant != PlantKind::Wind
            || self.units[1].plant != PlantKind::Pv
            || self.units[2].plant != PlantKind::Statcom
        {
            return Err(Error::Config(
                "units must be one wind, one pv and one statcom".into(),
            ));
        }
        for u in &self.units {
            if u.p_ref < 0.0 {
                return Err(Error::NegativeCapacity(u.p_ref));
            }
            if u.p_max < u.p_ref {
                return Err(Error::Config(format!(
                    "unit '{}': p_max {} below p_ref {}",
                    u.name, u.p_max, u.p_ref
                )));
            }
            if let Some(pid) = &u.pid {
                pid.validate()?;
            }
        }
        for w in self.events.windows(2) {
            if w[1].t < w[0].t {
                return Err(Error::Config("events out of order".into()));
            }
        }
        for e in &self.events {
            if e.t < 0.0 || e.t > self.duration {
                return Err(Error::Config(format!(
                    "event at t = {} s outside [0, {}]",
                    e.t, self.duration
                )));
            }
            if let EventKind::CapacityChange { unit, .. } = e.kind {
                if unit >= 3 {
                    return Err(Error::Config(format!("event names unit {unit}")));
                }
            }
        }
        // participation invariants, with the initial capacities
        let specs: Vec<ParticipationSpec> =
            self.units.iter().map(|u| u.participation_spec()).collect();
        let p_refs: Vec<f64> = self.units.iter().map(|u| u.p_ref).collect();
        crate::control::build_participation(&specs, &p_refs, self.sample_time)?;
        // grid construction checks its own invariants
        GridModel::new(
            self.grid.h,
            self.grid.d,
            self.f_nominal_pu,
            self.sample_time,
            self.grid.mode,
        )?;
        DesiredBehavior::new(self.droop_d, self.desired_tau, self.sample_time)?;
        Ok(())
    }

    /// Realized participation factors `m_i(z)` for the current unit list,
    /// in unit order (wind, pv, statcom).
    pub fn participation_factors(&self) -> Result<Vec<crate::tf::RationalZ>> {
        let specs: Vec<ParticipationSpec> =
            self.units.iter().map(|u| u.participation_spec()).collect();
        let p_refs: Vec<f64> = self.units.iter().map(|u| u.p_ref).collect();
        crate::control::build_participation(&specs, &p_refs, self.sample_time)
    }

    /// A clone with every unit switched to the given participation family.
    /// SPF keeps the units' dc gains and zeroes the STATCOM share.
    pub fn with_variant(&self, kind: VariantKind) -> Scenario {
        let mut out = self.clone();
        out.name = format!("{}_{}", self.name, kind.label());
        for (i, unit) in out.units.iter_mut().enumerate() {
            let is_statcom = i == 2;
            unit.kind = match (kind, is_statcom) {
                (VariantKind::Spf, false) => FactorKind::Static,
                (VariantKind::Spf, true) => {
                    unit.mu = 0.0;
                    FactorKind::Static
                }
                (VariantKind::Dpf, false) => FactorKind::Dynamic,
                (VariantKind::Adpf, false) => FactorKind::Adaptive,
                (_, true) => FactorKind::Residual,
            };
        }
        out
    }

    /// Number of ticks in the horizon.
    pub fn ticks(&self) -> usize {
        (self.duration / self.sample_time).round() as usize
    }

    /// Deterministic fixed-step execution of the closed loop.
    pub fn run(&self) -> Result<Trace> {
        self.validate()?;
        Runner::new(self)?.run()
    }

    /// Runs the identical scenario under each requested participation kind.
    pub fn compare(&self, kinds: &[VariantKind]) -> Result<ComparisonReport> {
        let mut variants = BTreeMap::new();
        for &kind in kinds {
            let scenario = self.with_variant(kind);
            let trace = scenario.run()?;
            let window = scenario.first_event_time().unwrap_or(0.0);
            let metrics = compute_metrics(&trace, window, None, EpsilonSpec::default())?;
            variants.insert(kind, (trace, metrics));
        }
        Ok(ComparisonReport { variants })
    }

    pub fn first_event_time(&self) -> Option<f64> {
        self.events.first().map(|e| e.t)
    }
}

/// Side-by-side traces and metrics, keyed by variant.
#[derive(Debug)]
pub struct ComparisonReport {
    pub variants: BTreeMap<VariantKind, (Trace, Metrics)>,
}

/// Tick-stamped schedule entries compiled from the event list.
type Schedule = Vec<(usize, f64)>;

/// Everything mutable during one run.
struct Runner<'s> {
    scenario: &'s Scenario,
    grid: GridModel,
    measurement: MeasurementEmulation,
    references: [UnitRuntime; 2],
    statcom: StatcomRuntime,
    plants: [PlantModel; 3],
    capacity: [CapacityProfile; 3],
    /// Load deviation schedule: (tick, cumulative delta), last wins.
    load_steps: Schedule,
    /// Frequency reference schedule in pu: (tick, absolute value).
    f_ref_steps: Schedule,
}

struct UnitRuntime {
    reference: UnitReference,
    pid: MatchingPid,
    /// Last raw plant output, the matching feedback.
    feedback: f64,
}

struct StatcomRuntime {
    /// Fast-filtered desired aggregate; `None` when the unit is not a
    /// residual (then `reference` drives it like any other unit).
    fast: Option<ResidualReference>,
    reference: Option<UnitReference>,
    energy: Option<EnergyState>,
}

struct EnergyState {
    stored: f64,
    capacity: f64,
}

impl<'s> Runner<'s> {
    fn new(scenario: &'s Scenario) -> Result<Self> {
        let t = scenario.sample_time;
        let desired = DesiredBehavior::new(scenario.droop_d, scenario.desired_tau, t)?;
        let grid = GridModel::new(
            scenario.grid.h,
            scenario.grid.d,
            scenario.f_nominal_pu,
            t,
            scenario.grid.mode,
        )?;
        let measurement = if scenario.measurement.quantize {
            MeasurementEmulation::new(
                true,
                scenario.measurement.resolution_pu,
                scenario.measurement.update_period_s,
            )?
        } else {
            MeasurementEmulation::disabled()
        };

        let mut refs = Vec::new();
        for unit in &scenario.units[..2] {
            let reference = UnitReference::new(&unit.participation_spec(), &desired, t)?;
            let pid_cfg = unit.pid.ok_or_else(|| {
                Error::Config(format!("unit '{}' needs a matching controller", unit.name))
            })?;
            refs.push(UnitRuntime {
                reference,
                pid: MatchingPid::new(pid_cfg, t)?,
                feedback: 0.0,
            });
        }
        let references: [UnitRuntime; 2] = refs
            .try_into()
            .map_err(|_| Error::Config("expected wind and pv units".into()))?;

        let statcom_setup = &scenario.units[2];
        let statcom = if statcom_setup.kind == FactorKind::Residual {
            StatcomRuntime {
                fast: Some(ResidualReference::new(statcom_setup.tau, &desired, t)?),
                reference: None,
                energy: statcom_setup.energy_budget.map(EnergyState::new),
            }
        } else {
            StatcomRuntime {
                fast: None,
                reference: Some(UnitReference::new(
                    &statcom_setup.participation_spec(),
                    &desired,
                    t,
                )?),
                energy: statcom_setup.energy_budget.map(EnergyState::new),
            }
        };

        let plants = [
            make_plant(scenario.units[0].plant, t)?,
            make_plant(scenario.units[1].plant, t)?,
            make_plant(scenario.units[2].plant, t)?,
        ];

        let capacity = Self::capacity_profiles(scenario)?;
        let (load_steps, f_ref_steps) = Self::schedules(scenario);

        Ok(Self {
            scenario,
            grid,
            measurement,
            references,
            statcom,
            plants,
            capacity,
            load_steps,
            f_ref_steps,
        })
    }

    /// Compiles capacity-change events into per-unit profiles; the event
    /// times snap to the nearest tick.
    fn capacity_profiles(scenario: &Scenario) -> Result<[CapacityProfile; 3]> {
        let t = scenario.sample_time;
        let mut segments: [Vec<CapacitySegment>; 3] = std::array::from_fn(|i| {
            vec![CapacitySegment {
                start: 0.0,
                p_ref: scenario.units[i].p_ref,
                p_max: scenario.units[i].p_max,
            }]
        });
        for e in &scenario.events {
            if let EventKind::CapacityChange {
                unit,
                p_ref_pu,
                p_max_pu,
            } = e.kind
            {
                let tick = (e.t / t).round();
                let prev = *segments[unit].last().unwrap();
                segments[unit].push(CapacitySegment {
                    start: tick * t,
                    p_ref: p_ref_pu,
                    p_max: p_max_pu.unwrap_or(prev.p_max),
                });
            }
        }
        Ok([
            CapacityProfile::new(segments[0].clone())?,
            CapacityProfile::new(segments[1].clone())?,
            CapacityProfile::new(segments[2].clone())?,
        ])
    }

    fn schedules(scenario: &Scenario) -> (Schedule, Schedule) {
        let t = scenario.sample_time;
        let mut load = Vec::new();
        let mut f_ref = Vec::new();
        let mut load_acc = 0.0;
        let mut f_acc = scenario.f_nominal_pu;
        for e in &scenario.events {
            let tick = (e.t / t).round() as usize;
            match e.kind {
                EventKind::LoadStep { delta_p_pu } => {
                    load_acc += delta_p_pu;
                    load.push((tick, load_acc));
                }
                EventKind::FrequencyRefStep { delta_f_pu } => {
                    f_acc += delta_f_pu;
                    f_ref.push((tick, f_acc));
                }
                EventKind::CapacityChange { .. } => {}
            }
        }
        (load, f_ref)
    }

    fn run(mut self) -> Result<Trace> {
        let n = self.scenario.ticks();
        let t_step = self.scenario.sample_time;
        let omega_ref = self.scenario.f_nominal_pu;
        let mut trace = Trace::with_capacity(n);

        let mut dp_grid_prev = 0.0;
        let mut load_idx = 0usize;
        let mut f_idx = 0usize;
        let mut dload = 0.0;
        let mut f_ref = omega_ref;

        for k in 0..n {
            let t = k as f64 * t_step;

            // (1) schedules in force at this tick
            while load_idx < self.load_steps.len() && self.load_steps[load_idx].0 <= k {
                dload = self.load_steps[load_idx].1;
                load_idx += 1;
            }
            while f_idx < self.f_ref_steps.len() && self.f_ref_steps[f_idx].0 <= k {
                f_ref = self.f_ref_steps[f_idx].1;
                f_idx += 1;
            }
            let caps: [CapacitySegment; 3] = std::array::from_fn(|i| self.capacity[i].at(t));

            // (2) grid step and frequency measurement
            let omega = match self.grid.mode {
                GridMode::Tracking { .. } => self.grid.tracking_step(f_ref),
                GridMode::Swing { .. } => self.grid.swing_step(dp_grid_prev),
            };
            let raw_df = freq_deviation(omega, omega_ref);
            let df = self.measurement.measure(t, raw_df);
            check_signal(df, "delta_f", k, t)?;

            let (p_des, p_conv, dp_pcc, clamps) = if self.scenario.dvpp_enabled {
                // (3) desired powers: wind, pv, then the statcom residual
                let mu = self.adaptive_mu(&caps)?;
                let d_w = self.references[0].reference.desired_step(df, mu[0])?;
                let d_p = self.references[1].reference.desired_step(df, mu[1])?;
                let d_s = match (&mut self.statcom.fast, &mut self.statcom.reference) {
                    (Some(fast), _) => {
                        let aggregate = fast.fast_step(df)?;
                        crate::control::statcom_desired_power(aggregate, &[d_w, d_p])
                    }
                    (None, Some(reference)) => reference.desired_step(df, mu[2])?,
                    (None, None) => unreachable!("statcom runtime has a path"),
                };
                let p_des = [d_w, d_p, d_s];
                for (i, v) in p_des.iter().enumerate() {
                    check_signal(*v, signal_name(i, "p_des"), k, t)?;
                }

                // (4) matching controllers; saturation derives from the
                // clamp on total converter power [0, p_max]
                let mut p_ctrl = [0.0; 3];
                for i in 0..2 {
                    let sat = (-caps[i].p_ref, caps[i].p_max - caps[i].p_ref);
                    let e = p_des[i] - self.references[i].feedback;
                    p_ctrl[i] = self.references[i].pid.step(e, sat)?;
                    check_signal(p_ctrl[i], signal_name(i, "p_ctrl"), k, t)?;
                }
                p_ctrl[2] = match &mut self.statcom.energy {
                    Some(energy) => energy.limit(d_s, t_step),
                    None => d_s,
                };

                // (5) plant steps
                let mut raw = [0.0; 3];
                for i in 0..3 {
                    raw[i] = self.plants[i].step(p_ctrl[i]);
                    check_signal(raw[i], signal_name(i, "p_conv"), k, t)?;
                }
                self.references[0].feedback = raw[0];
                self.references[1].feedback = raw[1];

                // (6) absolute setpoints and clamps
                let mut p_conv = [0.0; 3];
                let mut clamps = [false; 3];
                for i in 0..3 {
                    let (abs, clamped) = to_absolute_setpoint(raw[i], caps[i].p_ref, caps[i].p_max);
                    p_conv[i] = abs - caps[i].p_ref;
                    clamps[i] = clamped;
                }
                if let Some(energy) = &mut self.statcom.energy {
                    energy.drain(p_conv[2], t_step);
                }
                let dp_pcc = p_conv[0] + p_conv[1] + p_conv[2];
                (p_des, p_conv, dp_pcc, clamps)
            } else {
                ([0.0; 3], [0.0; 3], 0.0, [false; 3])
            };

            // (7) power balance for the next tick
            let p_gov = self.grid.governor_step(omega);
            let dp_grid = dp_pcc + p_gov - dload;
            check_signal(dp_grid, "dp_grid", k, t)?;
            dp_grid_prev = dp_grid;

            trace.push(
                t,
                df,
                p_des,
                p_conv,
                dp_pcc,
                dp_grid,
                self.scenario.base_load + dload,
                clamps,
            );
        }
        Ok(trace)
    }

    /// Gains in force this tick. Fixed-gain units read their configured
    /// share; adaptive ones take the live capacity split, rescaled by
    /// whatever share the fixed units do not occupy.
    fn adaptive_mu(&self, caps: &[CapacitySegment; 3]) -> Result<[f64; 3]> {
        let units = &self.scenario.units;
        let any_adaptive = units.iter().any(|u| u.kind == FactorKind::Adaptive);
        let mut mu = [0.0; 3];
        if !any_adaptive {
            for i in 0..3 {
                mu[i] = units[i].mu;
            }
            return Ok(mu);
        }
        let fixed_sum: f64 = units
            .iter()
            .filter(|u| matches!(u.kind, FactorKind::Static | FactorKind::Dynamic))
            .map(|u| u.mu)
            .sum();
        let remainder = 1.0 - fixed_sum;
        let adaptive_total: f64 = units
            .iter()
            .enumerate()
            .filter(|(_, u)| u.kind == FactorKind::Adaptive)
            .map(|(i, _)| caps[i].p_ref)
            .sum();
        if adaptive_total <= 0.0 {
            return Err(Error::ZeroTotalCapacity);
        }
        for i in 0..3 {
            mu[i] = match units[i].kind {
                FactorKind::Adaptive => caps[i].p_ref / adaptive_total * remainder,
                _ => units[i].mu,
            };
        }
        Ok(mu)
    }
}

fn signal_name(unit: usize, what: &str) -> &'static str {
    match (what, unit) {
        ("p_des", 0) => "p_des_w",
        ("p_des", 1) => "p_des_p",
        ("p_des", 2) => "p_des_s",
        ("p_ctrl", 0) => "p_ctrl_w",
        ("p_ctrl", 1) => "p_ctrl_p",
        ("p_ctrl", 2) => "p_ctrl_s",
        ("p_conv", 0) => "p_conv_w",
        ("p_conv", 1) => "p_conv_p",
        _ => "p_conv_s",
    }
}

fn check_signal(value: f64, signal: &str, tick: usize, time: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFiniteSignal {
            signal: signal.to_string(),
            tick,
            time,
        })
    }
}

impl EnergyState {
    fn new(budget: EnergyBudget) -> Self {
        Self {
            stored: budget.initial_pu_s.min(budget.capacity_pu_s).max(0.0),
            capacity: budget.capacity_pu_s,
        }
    }

    /// Clamps a discharge/charge request to what the stored energy allows
    /// over one tick.
    fn limit(&self, requested: f64, t_step: f64) -> f64 {
        let max_discharge = self.stored / t_step;
        let max_charge = (self.capacity - self.stored) / t_step;
        requested.clamp(-max_charge, max_discharge)
    }

    fn drain(&mut self, delivered: f64, t_step: f64) {
        self.stored = (self.stored - delivered * t_step).clamp(0.0, self.capacity);
    }
}
