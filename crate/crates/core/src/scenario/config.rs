//! Scenario configuration file format (TOML) and its resolution into a
//! validated [`Scenario`] in per-unit quantities.

use std::path::Path;

use serde::Deserialize;

use crate::control::{default_gains, PidConfig};
use crate::error::{Error, Result};
use crate::grid::GridMode;
use crate::plants::PlantKind;

use super::{
    EnergyBudget, Event, EventKind, FactorKind, GridSetup, MeasurementSetup, Scenario, UnitSetup,
};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default = "default_name")]
    pub name: String,
    pub scenario: ScenarioSection,
    #[serde(default)]
    pub bases: BasesSection,
    #[serde(default)]
    pub desired: DesiredSection,
    pub grid: GridSection,
    #[serde(default)]
    pub dvpp: DvppSection,
    #[serde(default)]
    pub measurement: MeasurementSection,
    pub units: Vec<UnitSection>,
    #[serde(default)]
    pub events: Vec<EventSection>,
}

fn default_name() -> String {
    "scenario".into()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub duration_s: f64,
    #[serde(default = "default_sample_time")]
    pub sample_time_s: f64,
}

fn default_sample_time() -> f64 {
    0.01
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasesSection {
    #[serde(default = "default_s_base")]
    pub s_base_kw: f64,
    #[serde(default = "default_f_base")]
    pub f_base_hz: f64,
}

impl Default for BasesSection {
    fn default() -> Self {
        Self {
            s_base_kw: default_s_base(),
            f_base_hz: default_f_base(),
        }
    }
}

fn default_s_base() -> f64 {
    10.0
}

fn default_f_base() -> f64 {
    100.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesiredSection {
    #[serde(default = "default_droop")]
    pub droop_d: f64,
    #[serde(default = "default_desired_tau")]
    pub tau_s: f64,
}

impl Default for DesiredSection {
    fn default() -> Self {
        Self {
            droop_d: default_droop(),
            tau_s: default_desired_tau(),
        }
    }
}

fn default_droop() -> f64 {
    6.5
}

fn default_desired_tau() -> f64 {
    0.25
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub mode: String,
    #[serde(default = "default_f_nominal")]
    pub f_nominal_hz: f64,
    #[serde(default = "default_h")]
    pub h_s: f64,
    #[serde(default = "default_d")]
    pub d_pu: f64,
    #[serde(default = "default_tau_track")]
    pub tau_track_s: f64,
    #[serde(default = "default_gov_kp")]
    pub governor_kp: f64,
    #[serde(default = "default_gov_ki")]
    pub governor_ki: f64,
    #[serde(default = "default_base_load")]
    pub base_load_kw: f64,
}

fn default_f_nominal() -> f64 {
    50.0
}

fn default_h() -> f64 {
    2.0
}

fn default_d() -> f64 {
    1.5
}

fn default_tau_track() -> f64 {
    0.2
}

fn default_gov_kp() -> f64 {
    0.3
}

fn default_gov_ki() -> f64 {
    5.5
}

fn default_base_load() -> f64 {
    9.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DvppSection {
    #[serde(default = "default_true")]
    pub enabled: bool,
}

impl Default for DvppSection {
    fn default() -> Self {
        Self { enabled: true }
    }
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementSection {
    #[serde(default)]
    pub quantize: bool,
    #[serde(default = "default_resolution")]
    pub resolution_hz: f64,
    #[serde(default = "default_update_period")]
    pub update_period_s: f64,
}

impl Default for MeasurementSection {
    fn default() -> Self {
        Self {
            quantize: false,
            resolution_hz: default_resolution(),
            update_period_s: default_update_period(),
        }
    }
}

fn default_resolution() -> f64 {
    0.001
}

fn default_update_period() -> f64 {
    0.00667
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitSection {
    pub name: String,
    pub plant: String,
    pub p_ref_kw: f64,
    pub p_max_kw: f64,
    pub participation: ParticipationSection,
    #[serde(default)]
    pub pid: Option<PidSection>,
    #[serde(default)]
    pub energy_budget: Option<EnergyBudgetSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticipationSection {
    pub kind: String,
    #[serde(default)]
    pub mu: Option<f64>,
    #[serde(default)]
    pub tau_s: Option<f64>,
}

#[derive(Debug, Deserialize, Clone, Copy)]
#[serde(deny_unknown_fields)]
pub struct PidSection {
    pub kp: f64,
    pub ki: f64,
    #[serde(default)]
    pub kd: f64,
    #[serde(default)]
    pub derivative_filter_tau_s: f64,
}

#[derive(Debug, Deserialize, Clone, Copy)]
#[serde(deny_unknown_fields)]
pub struct EnergyBudgetSection {
    pub capacity_kws: f64,
    #[serde(default)]
    pub initial_kws: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventSection {
    pub t_s: f64,
    #[serde(rename = "type")]
    pub kind: String,
    #[serde(default)]
    pub delta_hz: Option<f64>,
    #[serde(default)]
    pub delta_kw: Option<f64>,
    #[serde(default)]
    pub unit: Option<String>,
    #[serde(default)]
    pub p_ref_kw: Option<f64>,
    #[serde(default)]
    pub p_max_kw: Option<f64>,
}

/// Parses a config file and resolves it into a validated scenario.
pub fn load_scenario<P: AsRef<Path>>(path: P) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    parse_scenario(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Parses a config from TOML text.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let cfg: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    resolve(cfg)
}

fn plant_kind(s: &str) -> Result<PlantKind> {
    match s {
        "wind" => Ok(PlantKind::Wind),
        "pv" => Ok(PlantKind::Pv),
        "statcom" => Ok(PlantKind::Statcom),
        other => Err(Error::Config(format!(
            "unknown plant '{other}' (expected wind, pv or statcom)"
        ))),
    }
}

fn resolve(cfg: ConfigFile) -> Result<Scenario> {
    let s_base = cfg.bases.s_base_kw;
    let f_base = cfg.bases.f_base_hz;
    if !(s_base.is_finite() && s_base > 0.0) {
        return Err(Error::Config(format!(
            "s_base_kw must be positive, got {s_base}"
        )));
    }
    if !(f_base.is_finite() && f_base > 0.0) {
        return Err(Error::Config(format!(
            "f_base_hz must be positive, got {f_base}"
        )));
    }
    let kw = |x: f64| x / s_base;
    let hz = |x: f64| x / f_base;

    let mode = match cfg.grid.mode.as_str() {
        "tracking" => GridMode::Tracking {
            tau_track: cfg.grid.tau_track_s,
        },
        "swing" => GridMode::Swing {
            governor_kp: cfg.grid.governor_kp,
            governor_ki: cfg.grid.governor_ki,
        },
        other => {
            return Err(Error::Config(format!(
                "grid.mode must be 'tracking' or 'swing', got '{other}'"
            )))
        }
    };

    // units resolve into canonical wind, pv, statcom order
    let mut slots: [Option<UnitSetup>; 3] = [None, None, None];
    let residual_total: f64 = cfg
        .units
        .iter()
        .filter(|u| u.participation.kind != "residual")
        .map(|u| u.p_ref_kw)
        .sum();
    for u in &cfg.units {
        let kind = plant_kind(&u.plant)?;
        let slot = match kind {
            PlantKind::Wind => 0,
            PlantKind::Pv => 1,
            PlantKind::Statcom => 2,
        };
        if slots[slot].is_some() {
            return Err(Error::Config(format!("duplicate {} unit", u.plant)));
        }
        let factor = match u.participation.kind.as_str() {
            "static" => FactorKind::Static,
            "dynamic" => FactorKind::Dynamic,
            "adaptive" => FactorKind::Adaptive,
            "residual" => FactorKind::Residual,
            other => {
                return Err(Error::Config(format!(
                    "unit '{}': unknown participation kind '{other}'",
                    u.name
                )))
            }
        };
        let needs_tau = factor != FactorKind::Static;
        let tau = match (u.participation.tau_s, needs_tau) {
            (Some(t), _) => t,
            (None, false) => 0.0,
            (None, true) => {
                return Err(Error::Config(format!(
                    "unit '{}': participation kind '{}' needs tau_s",
                    u.name, u.participation.kind
                )))
            }
        };
        let mu = match (u.participation.mu, factor) {
            (Some(m), _) => m,
            (None, FactorKind::Residual) => 0.0,
            // nominal share of the non-residual capacity pool
            (None, FactorKind::Adaptive) if residual_total > 0.0 => u.p_ref_kw / residual_total,
            (None, _) => {
                return Err(Error::Config(format!(
                    "unit '{}': participation kind '{}' needs mu",
                    u.name, u.participation.kind
                )))
            }
        };
        let pid = match (&u.pid, kind) {
            (Some(p), _) => Some(PidConfig {
                kp: p.kp,
                ki: p.ki,
                kd: p.kd,
                derivative_filter_tau: p.derivative_filter_tau_s,
            }),
            (None, PlantKind::Wind) => Some(default_gains::WIND),
            (None, PlantKind::Pv) => Some(default_gains::PV),
            (None, PlantKind::Statcom) => None,
        };
        let energy_budget = u.energy_budget.map(|e| EnergyBudget {
            capacity_pu_s: kw(e.capacity_kws),
            initial_pu_s: kw(e.initial_kws.unwrap_or(e.capacity_kws / 2.0)),
        });
        slots[slot] = Some(UnitSetup {
            name: u.name.clone(),
            plant: kind,
            p_ref: kw(u.p_ref_kw),
            p_max: kw(u.p_max_kw),
            mu,
            tau,
            kind: factor,
            pid,
            energy_budget,
        });
    }
    let [wind, pv, statcom] = slots;
    let units = [
        wind.ok_or_else(|| Error::Config("missing wind unit".into()))?,
        pv.ok_or_else(|| Error::Config("missing pv unit".into()))?,
        statcom.ok_or_else(|| Error::Config("missing statcom unit".into()))?,
    ];

    // the residual roll-off time constant comes from the statcom factor
    let residual_tau = if units[2].kind == FactorKind::Residual {
        units[2].tau
    } else {
        0.05
    };

    let unit_index = |name: &str| -> Result<usize> {
        units
            .iter()
            .position(|u| u.name == name || u.plant.label() == name)
            .ok_or_else(|| Error::Config(format!("event names unknown unit '{name}'")))
    };

    let mut events = Vec::new();
    for e in &cfg.events {
        let kind = match e.kind.as_str() {
            "frequency_ref_step" => EventKind::FrequencyRefStep {
                delta_f_pu: hz(e
                    .delta_hz
                    .ok_or_else(|| Error::Config("frequency_ref_step needs delta_hz".into()))?),
            },
            "load_step" => EventKind::LoadStep {
                delta_p_pu: kw(e
                    .delta_kw
                    .ok_or_else(|| Error::Config("load_step needs delta_kw".into()))?),
            },
            "capacity_change" => {
                let unit = unit_index(
                    e.unit
                        .as_deref()
                        .ok_or_else(|| Error::Config("capacity_change needs unit".into()))?,
                )?;
                EventKind::CapacityChange {
                    unit,
                    p_ref_pu: kw(e
                        .p_ref_kw
                        .ok_or_else(|| Error::Config("capacity_change needs p_ref_kw".into()))?),
                    p_max_pu: e.p_max_kw.map(kw),
                }
            }
            other => {
                return Err(Error::Config(format!(
                    "unknown event type '{other}' at t = {} s",
                    e.t_s
                )))
            }
        };
        events.push(Event { t: e.t_s, kind });
    }
    events.sort_by(|a, b| a.t.partial_cmp(&b.t).unwrap());

    let scenario = Scenario {
        name: cfg.name,
        duration: cfg.scenario.duration_s,
        sample_time: cfg.scenario.sample_time_s,
        s_base_kw: s_base,
        f_base_hz: f_base,
        f_nominal_pu: hz(cfg.grid.f_nominal_hz),
        base_load: kw(cfg.grid.base_load_kw),
        grid: GridSetup {
            h: cfg.grid.h_s,
            d: cfg.grid.d_pu,
            mode,
        },
        droop_d: cfg.desired.droop_d,
        desired_tau: cfg.desired.tau_s,
        residual_tau,
        dvpp_enabled: cfg.dvpp.enabled,
        units,
        events,
        measurement: MeasurementSetup {
            quantize: cfg.measurement.quantize,
            resolution_pu: hz(cfg.measurement.resolution_hz),
            update_period_s: cfg.measurement.update_period_s,
        },
    };
    scenario.validate()?;
    Ok(scenario)
}
