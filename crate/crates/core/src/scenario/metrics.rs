//! Post-run metrics: matching accuracy, nadir, recovery.

use serde::Serialize;

use crate::error::{Error, Result};

use super::trace::Trace;

/// How the recovery band is sized.
#[derive(Debug, Clone, Copy)]
pub enum EpsilonSpec {
    /// Fraction of the peak deviation inside the evaluation window.
    FractionOfPeak(f64),
    /// Fixed band in pu.
    Absolute(f64),
}

impl Default for EpsilonSpec {
    fn default() -> Self {
        EpsilonSpec::FractionOfPeak(0.1)
    }
}

/// Duration the signal must stay inside the band to count as recovered.
const SUSTAIN_S: f64 = 1.0;

#[derive(Debug, Clone, Serialize)]
pub struct Metrics {
    /// RMS of (aggregate actual - aggregate desired) over the window, pu.
    pub rms_matching_error: f64,
    /// Extremal frequency deviation in the window, signed, pu.
    pub nadir_pu: f64,
    /// Seconds from window start to sustained re-entry into the band.
    pub recovery_s: Option<f64>,
    /// Band actually used for recovery, pu.
    pub epsilon_pu: f64,
    /// Per-unit tracking RMS (actual vs desired), order wind, pv, statcom.
    pub tracking_rms: [f64; 3],
    /// Start of the evaluation window, seconds.
    pub window_start_s: f64,
    /// End of the evaluation window, seconds.
    pub window_end_s: f64,
}

fn rms(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for v in values {
        sum += v * v;
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        (sum / n as f64).sqrt()
    }
}

/// Computes metrics over `[window_start, window_end)`; `window_end = None`
/// runs to the end of the trace.
pub fn compute_metrics(
    trace: &Trace,
    window_start: f64,
    window_end: Option<f64>,
    epsilon: EpsilonSpec,
) -> Result<Metrics> {
    if trace.is_empty() {
        return Err(Error::Config("metrics of an empty trace".into()));
    }
    let sample_time = if trace.len() > 1 {
        trace.t[1] - trace.t[0]
    } else {
        1.0
    };
    let i0 = trace.t.partition_point(|&t| t < window_start);
    let i1 = match window_end {
        Some(e) => trace.t.partition_point(|&t| t < e),
        None => trace.len(),
    };
    if i0 >= i1 {
        return Err(Error::Config("metrics window is empty".into()));
    }
    let window_end_s = window_end.unwrap_or_else(|| trace.t[trace.len() - 1] + sample_time);

    let rms_matching_error = rms((i0..i1).map(|k| trace.dp_pcc[k] - trace.desired_aggregate(k)));
    let tracking_rms =
        std::array::from_fn(|u| rms((i0..i1).map(|k| trace.p_conv[u][k] - trace.p_des[u][k])));

    let mut nadir = 0.0_f64;
    for k in i0..i1 {
        if trace.delta_f[k].abs() > nadir.abs() {
            nadir = trace.delta_f[k];
        }
    }
    let epsilon_pu = match epsilon {
        EpsilonSpec::FractionOfPeak(f) => f * nadir.abs(),
        EpsilonSpec::Absolute(e) => e,
    };

    let need = (SUSTAIN_S / sample_time).round() as usize;
    let mut run = 0usize;
    let mut recovery_s = None;
    for k in i0..i1 {
        if trace.delta_f[k].abs() <= epsilon_pu {
            run += 1;
            if run >= need.max(1) {
                recovery_s = Some(trace.t[k + 1 - run] - window_start);
                break;
            }
        } else {
            run = 0;
        }
    }

    Ok(Metrics {
        rms_matching_error,
        nadir_pu: nadir,
        recovery_s,
        epsilon_pu,
        tracking_rms,
        window_start_s: window_start,
        window_end_s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat_trace(n: usize, delta_f: f64) -> Trace {
        let mut tr = Trace::with_capacity(n);
        for k in 0..n {
            let t = k as f64 * 0.01;
            tr.push(t, delta_f, [0.0; 3], [0.0; 3], 0.0, 0.0, 0.9, [false; 3]);
        }
        tr
    }

    #[test]
    fn identical_traces_have_zero_rms() {
        let mut tr = flat_trace(200, 0.0);
        for k in 0..200 {
            let v = (k as f64 * 0.1).sin() * 0.01;
            tr.p_des[0][k] = v;
            tr.p_conv[0][k] = v;
            tr.dp_pcc[k] = v;
            tr.p_des[1][k] = 0.0;
            tr.p_des[2][k] = 0.0;
        }
        let m = compute_metrics(&tr, 0.0, None, EpsilonSpec::default()).unwrap();
        assert_eq!(m.rms_matching_error, 0.0);
        assert_eq!(m.tracking_rms, [0.0; 3]);
    }

    #[test]
    fn constant_zero_frequency_has_zero_nadir_and_immediate_recovery() {
        let tr = flat_trace(300, 0.0);
        let m = compute_metrics(&tr, 0.0, None, EpsilonSpec::default()).unwrap();
        assert_eq!(m.nadir_pu, 0.0);
        assert_eq!(m.recovery_s, Some(0.0));
    }

    #[test]
    fn recovery_requires_sustained_reentry() {
        let mut tr = flat_trace(1000, 0.0);
        for k in 0..1000 {
            // decays inside the band at k=500, but pops out at k=550
            tr.delta_f[k] = if k < 500 || k == 550 { 0.01 } else { 0.0001 };
        }
        let m = compute_metrics(&tr, 0.0, None, EpsilonSpec::FractionOfPeak(0.1)).unwrap();
        // the band is 0.001; first sustained window starts after k=550
        assert_eq!(m.recovery_s, Some(5.51));
    }

    #[test]
    fn empty_trace_rejected() {
        let tr = Trace::default();
        assert!(compute_metrics(&tr, 0.0, None, EpsilonSpec::default()).is_err());
    }
}
