//! Equivalent grid: discrete swing equation, power balance, frequency
//! measurement, and the two speed-regulation modes of the case studies.
//!
//! All quantities are per-unit. With the default bases (10 kW, 100 Hz) the
//! nominal 50 Hz grid sits at `omega_ref = 0.5` and a frequency deviation
//! in pu equals the angular-frequency deviation in pu.

use crate::error::{Error, Result};

/// Speed-regulation mode of the machine behind the PCC.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridMode {
    /// Standard mode: the frequency tightly tracks the commanded reference
    /// through a first-order lag and ignores power imbalances.
    Tracking { tau_track: f64 },
    /// Slow mode: the swing equation responds to the power balance while a
    /// PI governor restores nominal frequency within roughly ten seconds.
    Swing { governor_kp: f64, governor_ki: f64 },
}

/// Discrete equivalent-grid state.
///
/// Swing mode advances
/// `omega(k+1) = omega(k) + (T/2H) * (dp_grid(k) + d*omega_ref - d*omega(k))`,
/// the forward-Euler form of the printed swing transfer function.
#[derive(Debug, Clone)]
pub struct GridModel {
    pub h: f64,
    pub d: f64,
    pub omega_ref: f64,
    pub sample_time: f64,
    pub mode: GridMode,
    omega: f64,
    governor_integrator: f64,
}

impl GridModel {
    pub fn new(h: f64, d: f64, omega_ref: f64, sample_time: f64, mode: GridMode) -> Result<Self> {
        for (name, v) in [("h", h), ("d", d), ("omega_ref", omega_ref)] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter { name, value: v });
            }
        }
        if h <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "h",
                value: h,
            });
        }
        if d <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "d",
                value: d,
            });
        }
        if !(sample_time.is_finite() && sample_time > 0.0) {
            return Err(Error::InvalidSampleTime(sample_time));
        }
        let euler = sample_time * d / (2.0 * h);
        if euler >= 2.0 {
            return Err(Error::UnstableGrid(euler));
        }
        if let GridMode::Tracking { tau_track } = mode {
            if !(tau_track.is_finite() && tau_track > 0.0) {
                return Err(Error::InvalidParameter {
                    name: "tau_track",
                    value: tau_track,
                });
            }
        }
        Ok(Self {
            h,
            d,
            omega_ref,
            sample_time,
            mode,
            omega: omega_ref,
            governor_integrator: 0.0,
        })
    }

    /// Measured angular frequency at the PCC, pu.
    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// One forward-Euler swing step driven by the grid power imbalance.
    /// Returns the advanced frequency.
    pub fn swing_step(&mut self, dp_grid: f64) -> f64 {
        let q = self.sample_time / (2.0 * self.h);
        self.omega += q * (dp_grid + self.d * self.omega_ref - self.d * self.omega);
        self.omega
    }

    /// One first-order tracking step toward the commanded reference
    /// frequency (pu). Power imbalances play no role here.
    pub fn tracking_step(&mut self, f_ref_pu: f64) -> f64 {
        let tau = match self.mode {
            GridMode::Tracking { tau_track } => tau_track,
            GridMode::Swing { .. } => unreachable!("tracking step in swing mode"),
        };
        self.omega += (self.sample_time / tau) * (f_ref_pu - self.omega);
        self.omega
    }

    /// PI speed governor acting on `omega_ref - omega`, producing the
    /// synchronous generator's restoring power.
    pub fn governor_step(&mut self, omega_meas: f64) -> f64 {
        let (kp, ki) = match self.mode {
            GridMode::Swing {
                governor_kp,
                governor_ki,
            } => (governor_kp, governor_ki),
            GridMode::Tracking { .. } => return 0.0,
        };
        let e = self.omega_ref - omega_meas;
        self.governor_integrator += ki * self.sample_time * e;
        kp * e + self.governor_integrator
    }

    pub fn reset(&mut self) {
        self.omega = self.omega_ref;
        self.governor_integrator = 0.0;
    }
}

/// `dp_grid(k) = sum(generation) - sum(loads)`.
pub fn power_balance(gen_powers: &[f64], load_powers: &[f64]) -> f64 {
    let gen: f64 = gen_powers.iter().sum();
    let load: f64 = load_powers.iter().sum();
    gen - load
}

/// `delta_f = (omega_meas - omega_ref) / 2pi` in SI units; in per-unit with
/// the angular base `2 pi f_base` the division cancels and the deviation is
/// the plain difference.
pub fn freq_deviation(omega_meas_pu: f64, omega_ref_pu: f64) -> f64 {
    omega_meas_pu - omega_ref_pu
}

/// Measurement-chain emulation: quantization to the acquisition resolution
/// and a hold at the acquisition update rate.
#[derive(Debug, Clone)]
pub struct MeasurementEmulation {
    pub enabled: bool,
    /// Quantization step, pu (1 mHz on a 100 Hz base is 1e-5).
    pub resolution_pu: f64,
    /// Update period of the acquisition module, seconds.
    pub update_period: f64,
    held: f64,
    last_window: i64,
}

impl MeasurementEmulation {
    pub fn new(enabled: bool, resolution_pu: f64, update_period: f64) -> Result<Self> {
        if enabled {
            if !(resolution_pu.is_finite() && resolution_pu > 0.0) {
                return Err(Error::InvalidParameter {
                    name: "resolution_pu",
                    value: resolution_pu,
                });
            }
            if !(update_period.is_finite() && update_period > 0.0) {
                return Err(Error::InvalidParameter {
                    name: "update_period",
                    value: update_period,
                });
            }
        }
        Ok(Self {
            enabled,
            resolution_pu,
            update_period,
            held: 0.0,
            last_window: -1,
        })
    }

    pub fn disabled() -> Self {
        Self {
            enabled: false,
            resolution_pu: 0.0,
            update_period: 0.0,
            held: 0.0,
            last_window: -1,
        }
    }

    /// Returns the measured deviation: quantized and held when enabled,
    /// the raw value otherwise.
    pub fn measure(&mut self, t: f64, raw: f64) -> f64 {
        if !self.enabled {
            return raw;
        }
        let window = (t / self.update_period).floor() as i64;
        if window != self.last_window {
            self.last_window = window;
            self.held = (raw / self.resolution_pu).round() * self.resolution_pu;
        }
        self.held
    }

    pub fn reset(&mut self) {
        self.held = 0.0;
        self.last_window = -1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const T: f64 = 0.01;

    fn swing_grid() -> GridModel {
        GridModel::new(
            2.0,
            1.5,
            0.5,
            T,
            GridMode::Swing {
                governor_kp: 0.3,
                governor_ki: 5.5,
            },
        )
        .unwrap()
    }

    #[test]
    fn equilibrium_is_fixed_point() {
        let mut g = swing_grid();
        for _ in 0..10_000 {
            assert_eq!(g.swing_step(0.0), 0.5);
        }
    }

    #[test]
    fn constant_imbalance_settles_at_c_over_d() {
        let mut g = swing_grid();
        let c = 0.12;
        // 20 * (2H/d) seconds
        let horizon = (20.0 * (2.0 * g.h / g.d) / T) as usize;
        let mut w = g.omega();
        for _ in 0..horizon {
            w = g.swing_step(c);
        }
        let target = 0.5 + c / g.d;
        assert!(
            ((w - 0.5) - c / g.d).abs() / (c / g.d) < 1e-3,
            "settled {w}, target {target}"
        );
    }

    #[test]
    fn halving_sample_time_halves_increment() {
        let mut a = swing_grid();
        let mut b = GridModel::new(
            2.0,
            1.5,
            0.5,
            T / 2.0,
            GridMode::Swing {
                governor_kp: 0.3,
                governor_ki: 5.5,
            },
        )
        .unwrap();
        let da = a.swing_step(0.2) - 0.5;
        let db = b.swing_step(0.2) - 0.5;
        assert_relative_eq!(db * 2.0, da, max_relative = 1e-12);
    }

    #[test]
    fn construction_rejects_unstable_euler() {
        assert!(matches!(
            GridModel::new(0.001, 1.5, 0.5, 10.0, GridMode::Tracking { tau_track: 0.2 }),
            Err(Error::UnstableGrid(_))
        ));
        assert!(GridModel::new(0.0, 1.5, 0.5, T, GridMode::Tracking { tau_track: 0.2 }).is_err());
        assert!(GridModel::new(2.0, -1.0, 0.5, T, GridMode::Tracking { tau_track: 0.2 }).is_err());
    }

    #[test]
    fn tracking_settles_to_reference() {
        let mut g =
            GridModel::new(2.0, 1.5, 0.5, T, GridMode::Tracking { tau_track: 0.2 }).unwrap();
        let f_ref = 0.5 + 0.002; // +200 mHz on the 100 Hz base
        let mut w = g.omega();
        for _ in 0..(5.0 * 0.2 / T) as usize {
            w = g.tracking_step(f_ref);
        }
        // within 1% of the step after five time constants
        assert!((w - f_ref).abs() < 0.01 * 0.002);
    }

    #[test]
    fn governor_zero_at_nominal() {
        let mut g = swing_grid();
        for _ in 0..100 {
            assert_eq!(g.governor_step(0.5), 0.0);
        }
    }

    #[test]
    fn governor_monotone_under_sustained_underfrequency() {
        let mut g = swing_grid();
        let mut prev = 0.0;
        for _ in 0..500 {
            let p = g.governor_step(0.5 - 0.01);
            assert!(p > prev);
            prev = p;
        }
    }

    #[test]
    fn governor_closes_loop_with_zero_steady_state_error() {
        // swing + governor: PI forces omega back to nominal after a load step
        let mut g = swing_grid();
        let mut dp_prev = 0.0;
        let mut w = g.omega();
        for _ in 0..(40.0 / T) as usize {
            w = g.swing_step(dp_prev);
            let p_gov = g.governor_step(w);
            dp_prev = p_gov - 0.1;
        }
        // within 1 mHz equivalent (1e-5 pu on the 100 Hz base)
        assert!((w - 0.5).abs() < 1e-5, "settled at {w}");
    }

    #[test]
    fn power_balance_sums() {
        let balanced = power_balance(&[0.3, 0.1, 0.2, 0.3], &[0.9]);
        assert!(balanced.abs() < 1e-15);
        assert_eq!(power_balance(&[0.4, 0.1], &[]), 0.5);
        assert_eq!(power_balance(&[0.6], &[0.6]), 0.0);
    }

    #[test]
    fn freq_deviation_is_scaled_difference() {
        assert_eq!(freq_deviation(0.5, 0.5), 0.0);
        // 0.2 Hz on the 100 Hz base
        assert_relative_eq!(freq_deviation(0.502, 0.5), 0.002, max_relative = 1e-12);
    }

    #[test]
    fn measurement_quantizes_to_resolution() {
        let mut m = MeasurementEmulation::new(true, 1e-5, 0.00667).unwrap();
        // 0.4 mHz reads as zero
        assert_eq!(m.measure(0.0, 0.4e-5), 0.0);
        let mut m = MeasurementEmulation::new(true, 1e-5, 0.00667).unwrap();
        let v = m.measure(0.0, 2.34e-5);
        assert_relative_eq!(v, 2e-5, max_relative = 1e-12);
    }

    #[test]
    fn measurement_holds_between_updates() {
        let mut m = MeasurementEmulation::new(true, 1e-5, 0.00667).unwrap();
        let t_fast = 0.002; // 2 ms tick, faster than the 6.67 ms update
        let mut last = f64::NAN;
        let mut changes = Vec::new();
        for k in 0..50 {
            let t = k as f64 * t_fast;
            let v = m.measure(t, (k as f64) * 1e-5);
            if v != last {
                changes.push(t);
                last = v;
            }
            // every reported value is an integer multiple of the resolution
            let q = v / 1e-5;
            assert!((q - q.round()).abs() < 1e-9);
        }
        // the held value flips only at acquisition boundaries >= 6.67 ms
        // apart; observed at the tick grid, spacing can shrink by at most
        // one tick
        for w in changes.windows(2) {
            assert!(
                w[1] - w[0] >= 0.00667 - t_fast - 1e-9,
                "changed after {}",
                w[1] - w[0]
            );
        }
    }

    #[test]
    fn measurement_disabled_passthrough() {
        let mut m = MeasurementEmulation::disabled();
        assert_eq!(m.measure(0.0, 1.234e-5), 1.234e-5);
    }
}
