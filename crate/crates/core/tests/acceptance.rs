//! Acceptance suite: one test per shipped guarantee, each printing a
//! PASS line with the measured figure next to its threshold.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the
//! per-criterion report.

use std::path::{Path, PathBuf};
use std::time::Instant;

use dvpp_core::control::{
    adaptive_gains, build_participation, DesiredBehavior, MatchingPid, ParticipationSpec, PidConfig,
};
use dvpp_core::plants::{
    self, PUBLISHED_SAMPLE_TIME, PV_DEN_PUBLISHED, PV_NUM_PUBLISHED, WIND_DEN_PUBLISHED,
    WIND_NUM_PUBLISHED,
};
use dvpp_core::scenario::config::load_scenario;
use dvpp_core::scenario::{compute_metrics, EpsilonSpec, Scenario, VariantKind};
use dvpp_core::tf::{discretize_first_order, DcGain, LtiSimState, RationalZ, Stability};

const T: f64 = PUBLISHED_SAMPLE_TIME;

fn pass(criterion: &str, detail: String) {
    println!("PASS {criterion}: {detail}");
}

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn nominal_factors() -> Vec<RationalZ> {
    let specs = [
        ParticipationSpec::Dynamic { mu: 0.4, tau: 3.5 },
        ParticipationSpec::Dynamic { mu: 0.6, tau: 0.5 },
        ParticipationSpec::Residual { tau: 0.05 },
    ];
    build_participation(&specs, &[0.2, 0.3, 0.1], T).unwrap()
}

/// Mean of a trace column over `[t0, t1)` seconds.
fn window_mean(values: &[f64], times: &[f64], t0: f64, t1: f64) -> f64 {
    let mut sum = 0.0;
    let mut n = 0;
    for (k, &t) in times.iter().enumerate() {
        if t >= t0 && t < t1 {
            sum += values[k];
            n += 1;
        }
    }
    sum / n as f64
}

#[test]
fn criterion_01_participation_identity() {
    let started = Instant::now();
    let factors = nominal_factors();
    let total = factors[0]
        .add(&factors[1])
        .unwrap()
        .add(&factors[2])
        .unwrap();
    let fast = discretize_first_order(1.0, 0.05, T).unwrap();
    assert!(
        total.equals_as_rational(&fast, 1e-12),
        "sum of participation factors deviates from the fast low-pass"
    );
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    pass(
        "criterion 1 (participation identity)",
        format!(
            "sum(m_i) = 1/(0.05 s + 1) coefficient-wise within 1e-12, {:.1} ms",
            elapsed.as_secs_f64() * 1e3
        ),
    );
}

#[test]
fn criterion_02_desired_behavior_dc() {
    let desired = DesiredBehavior::new(6.5, 0.25, T).unwrap();
    assert_eq!(
        desired.realized.dc_gain(),
        DcGain::Value(-6.5),
        "dc gain of the desired behavior must be -D exactly"
    );
    let residual = &nominal_factors()[2];
    let residual_dc = residual.dc_gain().value().expect("residual dc is a number");
    assert!(residual_dc.abs() < 1e-12, "residual dc = {residual_dc}");
    pass(
        "criterion 2 (desired-behavior dc)",
        format!("dc(T_des) = -6.5 exactly, |dc(m_s)| = {residual_dc:.3e} < 1e-12"),
    );
}

#[test]
fn criterion_03_tf_engine_oracle() {
    let started = Instant::now();
    let desired = DesiredBehavior::new(6.5, 0.25, T).unwrap();
    let mut blocks: Vec<(String, RationalZ)> = vec![("T_des".into(), desired.realized.clone())];
    for (name, factor) in ["m_w", "m_p", "m_s"].iter().zip(nominal_factors()) {
        blocks.push((
            format!("{name}*T_des"),
            factor.multiply(&desired.realized).unwrap(),
        ));
    }
    blocks.push(("P_p".into(), plants::published_pv(T).unwrap()));
    blocks.push(("P_w".into(), plants::published_wind(T).unwrap()));

    // The published wind denominator has roots outside the unit circle,
    // so its impulse response grows to ~1e7 within 50 samples; 1e-10 is
    // read against the sample magnitude there (it stays the absolute
    // tolerance for every block whose response is of order one).
    let mut worst = 0.0_f64;
    for (name, tf) in &blocks {
        let oracle = tf.impulse_series(50);
        let mut sim = LtiSimState::new(tf);
        for (k, &expected) in oracle.iter().enumerate() {
            let y = sim.step(if k == 0 { 1.0 } else { 0.0 });
            let err = (y - expected).abs() / 1.0_f64.max(expected.abs());
            worst = worst.max(err);
            assert!(
                err < 1e-10,
                "{name} sample {k}: |{y} - {expected}| -> {err}"
            );
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    pass(
        "criterion 3 (tf-engine oracle)",
        format!(
            "{} blocks, 50-sample impulse vs long division, worst |err| = {worst:.2e} < 1e-10",
            blocks.len()
        ),
    );
}

#[test]
fn criterion_04_plant_fidelity() {
    // printed tables, retyped here independently of the plants module
    let pv_num = [0.4028, -1.0303, 1.0041, -0.3767, 8.4638e-5];
    let pv_den = [1.0, -2.3955, 2.0413, -0.7444, 0.0985, -3.575e-9];
    let w_num = [0.1943, -1.1346, 2.7637, -3.5947, 2.6328, -1.0295, 0.01679];
    let w_den = [
        1.0, -6.4395, 17.7314, -27.0496, 24.6770, -13.4537, 4.0553, -0.5208,
    ];
    assert_eq!(PV_NUM_PUBLISHED, pv_num);
    assert_eq!(PV_DEN_PUBLISHED, pv_den);
    assert_eq!(WIND_NUM_PUBLISHED, w_num);
    assert_eq!(WIND_DEN_PUBLISHED, w_den);

    // The printed digits themselves place a PV pole outside the unit
    // circle (den(1) < 0 with positive leading coefficient forces a real
    // root beyond 1), so stability holds for the simulation model, whose
    // denominator reflects that root inside. Both facts are pinned.
    let published = plants::published_pv(T).unwrap().poles();
    assert_eq!(published.stability, Stability::Unstable);
    assert!(
        (published.spectral_radius() - 1.000656785662675).abs() < 1e-8,
        "published PV outside pole moved: {}",
        published.spectral_radius()
    );
    let sim_pv = plants::make_pv_plant(T).unwrap();
    let analysis = sim_pv.tf().poles();
    assert_eq!(analysis.stability, Stability::Stable);
    assert!(analysis.poles.iter().all(|p| p.norm() < 1.0 - 1e-9));
    // numerators are untouched by the reflection
    assert_eq!(sim_pv.tf().num(), &PV_NUM_PUBLISHED);

    // wind: near-integrator flag with the independently summed constants
    let wind = plants::published_wind(T).unwrap();
    match wind.dc_gain() {
        DcGain::NearIntegrator {
            num_at_one,
            den_at_one,
        } => {
            // 50-digit decimal sums of the printed coefficients
            assert!((den_at_one - 1.0e-4).abs() < 1e-12, "den(1) = {den_at_one}");
            assert!(
                (num_at_one - -0.15121).abs() < 1e-12,
                "num(1) = {num_at_one}"
            );
        }
        DcGain::Value(v) => panic!("wind dc silently computed as {v}"),
    }
    pass(
        "criterion 4 (plant fidelity)",
        "published polynomials digit-for-digit; simulation P_p strictly stable \
         (published P_p pole at 1.000657 pinned); P_w flagged near-integrator \
         with den(1) = 1e-4, num(1) = -0.15121"
            .to_string(),
    );
}

#[test]
fn criterion_05_swing_steady_state() {
    let started = Instant::now();
    let mut grid = dvpp_core::grid::GridModel::new(
        2.0,
        1.5,
        0.5,
        T,
        dvpp_core::grid::GridMode::Swing {
            governor_kp: 0.0,
            governor_ki: 0.0,
        },
    )
    .unwrap();
    let c = 0.1;
    let horizon_s = 20.0 * (2.0 * 2.0 / 1.5);
    let mut omega = grid.omega();
    for _ in 0..(horizon_s / T) as usize {
        omega = grid.swing_step(c);
    }
    let expected = c / 1.5;
    let rel = ((omega - 0.5) - expected).abs() / expected;
    assert!(rel < 1e-3, "relative error {rel}");
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    pass(
        "criterion 5 (swing steady state)",
        format!(
            "omega - omega_ref = c/d within {rel:.2e} (< 1e-3) after {horizon_s:.0} s simulated"
        ),
    );
}

#[test]
fn criterion_06_case_study_1_regression() {
    let started = Instant::now();
    let scenario = load_scenario(config_path("case1_freq_jump_dpf.toml")).unwrap();
    let trace = scenario.run().unwrap();

    // offline desired aggregate: recorded delta_f through the
    // fast-filtered desired behavior
    let desired = DesiredBehavior::new(6.5, 0.25, T).unwrap();
    let shape = discretize_first_order(1.0, 0.05, T)
        .unwrap()
        .multiply(&desired.realized)
        .unwrap();
    let mut offline = LtiSimState::new(&shape);
    let desired_offline: Vec<f64> = trace.delta_f.iter().map(|&df| offline.step(df)).collect();

    let window_start = (5.0 / T) as usize;
    let peak = desired_offline.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut sq = 0.0;
    let mut n = 0usize;
    for (&actual, &desired) in trace.dp_pcc[window_start..]
        .iter()
        .zip(&desired_offline[window_start..])
    {
        let e = actual - desired;
        sq += e * e;
        n += 1;
    }
    let rms = (sq / n as f64).sqrt();
    let rms_frac = rms / peak;
    assert!(
        rms_frac < 0.02,
        "rms {rms:.3e} is {rms_frac:.4} of peak {peak:.3e}"
    );

    // steady-state shares just before the back-step at 35 s
    let total = -6.5 * 0.002;
    let targets = [0.4 * total, 0.6 * total, 0.0];
    let mut share_err_max = 0.0_f64;
    for (u, &target) in targets.iter().enumerate() {
        let ss = window_mean(&trace.p_conv[u], &trace.t, 30.0, 35.0);
        let err = (ss - target).abs() / total.abs();
        share_err_max = share_err_max.max(err);
        assert!(
            err < 0.02,
            "unit {u}: steady share {ss:.5e} vs target {target:.5e} ({err:.4} of aggregate)"
        );
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}");
    pass(
        "criterion 6 (case study I regression)",
        format!(
            "aggregate rms = {:.2}% of peak (< 2%), worst steady share error = {:.2}% (< 2%), wall {:.2} s",
            rms_frac * 100.0,
            share_err_max * 100.0,
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_07_spf_vs_dpf_ordering() {
    let scenario = load_scenario(config_path("case1_freq_jump_dpf.toml")).unwrap();
    let report = scenario
        .compare(&[VariantKind::Spf, VariantKind::Dpf])
        .unwrap();
    let (_, spf) = &report.variants[&VariantKind::Spf];
    let (_, dpf) = &report.variants[&VariantKind::Dpf];
    assert!(
        spf.rms_matching_error > dpf.rms_matching_error,
        "aggregate: spf {:.3e} vs dpf {:.3e}",
        spf.rms_matching_error,
        dpf.rms_matching_error
    );
    assert!(
        spf.tracking_rms[0] > dpf.tracking_rms[0],
        "wind unit: spf {:.3e} vs dpf {:.3e}",
        spf.tracking_rms[0],
        dpf.tracking_rms[0]
    );
    pass(
        "criterion 7 (SPF vs DPF ordering)",
        format!(
            "aggregate rms spf {:.3e} > dpf {:.3e}; wind rms spf {:.3e} > dpf {:.3e}",
            spf.rms_matching_error,
            dpf.rms_matching_error,
            spf.tracking_rms[0],
            dpf.tracking_rms[0]
        ),
    );
}

#[test]
fn criterion_08_case_study_2_nadir_and_recovery() {
    let scenario = load_scenario(config_path("case2_load_jump_dpf.toml")).unwrap();
    let mut disabled = scenario.clone();
    disabled.dvpp_enabled = false;

    let run = |s: &Scenario| {
        let trace = s.run().unwrap();
        // first disturbance window: load step at 5 s, removed at 35 s
        compute_metrics(&trace, 5.0, Some(35.0), EpsilonSpec::default()).unwrap()
    };
    let on = run(&scenario);
    let off = run(&disabled);

    assert!(
        on.nadir_pu.abs() < off.nadir_pu.abs(),
        "nadir on {:.4e} vs off {:.4e}",
        on.nadir_pu,
        off.nadir_pu
    );
    let (rec_on, rec_off) = (
        on.recovery_s.expect("DVPP run recovers"),
        off.recovery_s.expect("baseline recovers"),
    );
    assert!(rec_on < rec_off, "recovery on {rec_on} vs off {rec_off}");
    pass(
        "criterion 8 (case study II)",
        format!(
            "nadir {:.4e} pu (DVPP) vs {:.4e} pu (off); recovery {rec_on:.2} s vs {rec_off:.2} s",
            on.nadir_pu, off.nadir_pu
        ),
    );
}

#[test]
fn criterion_09_adpf_behavior() {
    // exact gain transition at the event capacities
    assert_eq!(adaptive_gains(&[0.2, 0.3]).unwrap(), vec![0.4, 0.6]);
    let after = adaptive_gains(&[0.1, 0.3]).unwrap();
    assert_eq!(after[0], 0.25, "mu_w must hit 1/(1+3) at the event tick");
    assert!((after[1] - 0.75).abs() < 1e-12);
    assert!((after.iter().sum::<f64>() - 1.0).abs() < 1e-12);

    // full run: wind capacity halves at 30 s, shares resettle on the new mu
    let scenario = load_scenario(config_path("case1_freq_jump_adpf.toml")).unwrap();
    let trace = scenario.run().unwrap();
    let total = -6.5 * 0.002;
    let before = [0.4, 0.6];
    let after_mu = [0.25, 0.75];
    for u in 0..2 {
        let ss_before = window_mean(&trace.p_conv[u], &trace.t, 25.0, 30.0);
        let err = (ss_before - before[u] * total).abs() / total.abs();
        assert!(err < 0.02, "unit {u} pre-event share error {err:.4}");
        let ss_after = window_mean(&trace.p_conv[u], &trace.t, 45.0, 50.0);
        let err = (ss_after - after_mu[u] * total).abs() / total.abs();
        assert!(err < 0.02, "unit {u} post-event share error {err:.4}");
    }

    // with constant capacities the adaptive trace is the dynamic trace
    let base = load_scenario(config_path("case1_freq_jump_dpf.toml")).unwrap();
    let dpf = base.with_variant(VariantKind::Dpf).run().unwrap();
    let adpf = base.with_variant(VariantKind::Adpf).run().unwrap();
    assert_eq!(
        dpf.to_csv_string(),
        adpf.to_csv_string(),
        "constant-capacity ADPF deviates from DPF"
    );
    pass(
        "criterion 9 (ADPF behavior)",
        "mu_w: 0.4 -> 0.25 at the event, sum(mu) = 1 throughout, post-event \
         shares within 2%, constant-capacity ADPF byte-identical to DPF"
            .to_string(),
    );
}

#[test]
fn criterion_10_anti_windup_and_clamp_safety() {
    // sat = [0, 0] freeze, compared bit-exactly with a hand-frozen twin
    let cfg = PidConfig {
        kp: 0.7,
        ki: 9.0,
        kd: 0.05,
        derivative_filter_tau: 0.04,
    };
    let mut clamped = MatchingPid::new(cfg, T).unwrap();
    let mut twin = MatchingPid::new(cfg, T).unwrap();
    let wide = (-1e12, 1e12);
    let errors: Vec<f64> = (0..400)
        .map(|k| 0.02 * ((k as f64) * 0.07).sin() - 0.003)
        .collect();
    for (k, &e) in errors.iter().enumerate() {
        let freeze = (120..260).contains(&k);
        let y_c = clamped
            .step(e, if freeze { (0.0, 0.0) } else { wide })
            .unwrap();
        // the twin never saturates; its integrator is frozen by hand over
        // the same window
        let before = twin.state();
        let y_t = twin.step(e, wide).unwrap();
        if freeze {
            let mut state = twin.state();
            state.integrator = before.integrator;
            twin.restore(state);
            assert_eq!(y_c, 0.0);
        } else {
            assert_eq!(y_c, y_t, "outputs diverge at sample {k}");
        }
    }

    // clamp safety on a deliberately saturating scenario
    let mut scenario = load_scenario(config_path("case1_freq_jump_dpf.toml")).unwrap();
    scenario.events[0] = dvpp_core::scenario::Event {
        t: 5.0,
        kind: dvpp_core::scenario::EventKind::FrequencyRefStep { delta_f_pu: 0.03 },
    };
    scenario.units[2].p_ref = 0.01;
    scenario.units[2].p_max = 0.02;
    let trace = scenario.run().unwrap();
    let mut clamp_events = 0usize;
    for k in 0..trace.len() {
        for (u, (p_ref, p_max)) in [(0.2, 1.1), (0.3, 1.1), (0.01, 0.02)].iter().enumerate() {
            let absolute = trace.p_conv[u][k] + p_ref;
            assert!(
                (-1e-15..=p_max + 1e-15).contains(&absolute),
                "unit {u} tick {k}: absolute power {absolute}"
            );
            if trace.clamp[u][k] {
                clamp_events += 1;
            }
        }
    }
    assert!(clamp_events > 0, "scenario never clamped");
    pass(
        "criterion 10 (anti-windup and clamp safety)",
        format!(
            "frozen-interval release bit-exact; {clamp_events} clamped samples, \
             all absolute powers inside [0, p_max]"
        ),
    );
}

#[test]
fn criterion_11_determinism() {
    for preset in [
        "case1_freq_jump_spf.toml",
        "case1_freq_jump_dpf.toml",
        "case1_freq_jump_adpf.toml",
        "case2_load_jump_spf.toml",
        "case2_load_jump_dpf.toml",
        "case2_load_jump_adpf.toml",
    ] {
        let scenario = load_scenario(config_path(preset)).unwrap();
        let a = scenario.run().unwrap().to_csv_string();
        let b = scenario.run().unwrap().to_csv_string();
        assert_eq!(a, b, "{preset} not reproducible");
        assert!(!a.is_empty());
    }
    pass(
        "criterion 11 (determinism)",
        "all six shipped presets produce byte-identical traces across reruns".to_string(),
    );
}
