use super::*;
use std::f64::consts::PI;

fn s1() -> EpidemicParams {
    EpidemicParams::endemic_example()
}

fn cosine_state(n: usize, amp: f64) -> FrontState {
    FrontState::initial(&InitialData::cosine(2.0, n, amp, amp))
}

#[test]
fn config_validation() {
    assert!(SolverConfig::default().validate().is_ok());
    for bad in [
        SolverConfig { n_xi: 100, ..Default::default() },
        SolverConfig { n_xi: 99, ..Default::default() },
        SolverConfig { n_xi: 402, ..Default::default() },
        SolverConfig { cfl_safety: 0.6, ..Default::default() },
        SolverConfig { cfl_safety: 0.0, ..Default::default() },
        SolverConfig { dt_init: 0.0, ..Default::default() },
        SolverConfig { record_every: -1.0, ..Default::default() },
    ] {
        assert!(bad.validate().is_err(), "{bad:?}");
    }
}

#[test]
fn initial_data_validation() {
    let p = s1();
    let ok = InitialData::cosine(2.0, 101, 0.1, 0.1);
    assert!(ok.validate(&p, 101).unwrap().is_empty());
    assert!(ok.validate(&p, 201).is_err());
    let mut above = ok.clone();
    above.h_i0[50] = 1.5;
    assert!(above.validate(&p, 101).is_err());
    let mut nonzero_end = ok.clone();
    nonzero_end.v_i0[0] = 0.01;
    assert!(nonzero_end.validate(&p, 101).is_err());
    let zero = InitialData::cosine(2.0, 101, 0.0, 0.0);
    assert_eq!(zero.validate(&p, 101).unwrap().len(), 1);
}

#[test]
fn zero_profile_has_zero_flux() {
    let state = cosine_state(101, 0.0);
    assert_eq!(front_flux(&state, &s1()), (0.0, 0.0));
}

#[test]
fn symmetric_profile_has_mirrored_flux() {
    let state = cosine_state(401, 0.3);
    let (gd, hd) = front_flux(&state, &s1());
    assert!(hd > 0.0);
    assert!((gd + hd).abs() < 1e-14);
}

#[test]
fn cosine_flux_matches_analytic_slope() {
    let exact = 0.1 * PI / 4.0;
    let mut errors = Vec::new();
    for n in [201, 401, 801] {
        let (_, hd) = front_flux(&cosine_state(n, 0.1), &s1());
        errors.push((hd - exact).abs());
    }
    assert!(errors[0] < 1e-4);
    // Second-order stencil: error quarters under refinement.
    for w in errors.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
    }
}

#[test]
fn zero_state_is_a_fixed_point() {
    let state = cosine_state(101, 0.0);
    let next = step(&state, &s1(), &SolverConfig::default()).unwrap();
    assert_eq!(next.g, state.g);
    assert_eq!(next.h, state.h);
    assert!(next.v_i.iter().chain(&next.h_i).all(|&v| v == 0.0));
    assert!(next.t > 0.0);
}

#[test]
fn symmetric_step_keeps_center() {
    let state = cosine_state(401, 0.2);
    let next = step(&state, &s1(), &SolverConfig::default()).unwrap();
    assert!((next.g + next.h).abs() < 1e-12);
    assert!(next.h > state.h && next.g < state.g);
    let n = next.h_i.len();
    for j in 0..n {
        assert!((next.h_i[j] - next.h_i[n - 1 - j]).abs() < 1e-14);
    }
}

#[test]
fn step_stays_in_box_from_saturated_data() {
    let p = s1();
    let init = InitialData::from_profiles(1.0, 101, |_| p.n_v_star, |_| p.n_h_star);
    let mut state = FrontState::initial(&init);
    let config = SolverConfig { dt_init: 0.5, ..Default::default() };
    for _ in 0..50 {
        state = step(&state, &p, &config).unwrap();
        assert!(state.v_i.iter().all(|&v| (0.0..=p.n_v_star).contains(&v)));
        assert!(state.h_i.iter().all(|&v| (0.0..=p.n_h_star).contains(&v)));
        assert_eq!(state.v_i[0], 0.0);
        assert_eq!(*state.h_i.last().unwrap(), 0.0);
    }
}

#[test]
fn zero_data_run_has_static_fronts() {
    let init = InitialData::cosine(2.0, 101, 0.0, 0.0);
    let config = SolverConfig { n_xi: 101, t_max: 5.0, ..Default::default() };
    let trace = run(&s1(), &init, &config).unwrap();
    assert!(trace.degenerate);
    assert_eq!(trace.warnings.len(), 1);
    for s in &trace.samples {
        assert_eq!((s.g, s.h), (-2.0, 2.0));
    }
    assert!(trace.audit().all_ok());
}

#[test]
fn run_records_on_schedule() {
    let init = InitialData::cosine(2.0, 201, 0.1, 0.1);
    let config = SolverConfig {
        n_xi: 201,
        t_max: 3.0,
        record_every: 0.25,
        ..Default::default()
    };
    let mut seen = Vec::new();
    let trace = run_observed(&s1(), &init, &config, |s| seen.push(s.t)).unwrap();
    assert_eq!(trace.samples.len(), 13);
    for (k, s) in trace.samples.iter().enumerate() {
        assert_eq!(s.t, k as f64 * 0.25);
        assert_eq!(seen[k], s.t);
    }
    assert_eq!(trace.final_state.t, 3.0);
    let audit = trace.audit();
    assert!(audit.all_ok(), "{:?}", audit.violations);
}

#[test]
fn sample_integrals_match_cosine() {
    let state = cosine_state(801, 0.1);
    let s = make_sample(&state, 0.0, 0.0, 0.0);
    // ∫ 0.1 cos(xπ/4) over (-2, 2) = 0.8/π.
    assert!((s.int_hi - 0.8 / PI).abs() < 1e-5);
    assert!((s.center_hi - 0.1).abs() < 1e-15);
    assert!((s.sup_vi - 0.1).abs() < 1e-15);
}

#[test]
fn speed_bound_formula() {
    let p = s1();
    let zero = InitialData::cosine(2.0, 101, 0.0, 0.0);
    // M = sqrt(0.5 * 2 * 1 / 2) when the data term is small.
    assert!((front_speed_bound(&p, &zero) - 2.0 * 0.5f64.sqrt()).abs() < 1e-15);
    let big = InitialData::cosine(2.0, 401, 0.0, 1.0);
    let norm = 1.0 + PI / 4.0;
    let expected = 2.0 * (4.0 * norm / 3.0);
    assert!((front_speed_bound(&p, &big) - expected).abs() < 1e-4);
}

#[test]
fn logistic_zero_data_is_static() {
    let problem = LogisticProblem { a: 1.0, b: 1.0, d: 1.0, mu: 2.0 };
    let config = SolverConfig { t_max: 2.0, ..Default::default() };
    let trace = run_logistic(&problem, 1.0, &vec![0.0; 401], &config).unwrap();
    assert!(trace.degenerate);
    assert!(trace.samples.iter().all(|s| s.h == 1.0 && s.g == -1.0));
}

#[test]
fn logistic_rejects_bad_input() {
    let problem = LogisticProblem { a: 1.0, b: 0.0, d: 1.0, mu: 2.0 };
    assert!(problem.validate().is_err());
    let ok = LogisticProblem { b: 1.0, ..problem };
    let config = SolverConfig::default();
    assert!(run_logistic(&ok, 1.0, &vec![0.0; 101], &config).is_err());
    assert!(run_logistic(&ok, -1.0, &vec![0.0; 401], &config).is_err());
}

#[test]
fn logistic_box_uses_initial_supremum() {
    let problem = LogisticProblem { a: 1.0, b: 1.0, d: 1.0, mu: 1.0 };
    let init = InitialData::cosine(1.0, 201, 0.0, 3.0);
    let config = SolverConfig { n_xi: 201, t_max: 2.0, ..Default::default() };
    let trace = run_logistic(&problem, 1.0, &init.h_i0, &config).unwrap();
    assert!(trace.audit().all_ok());
    assert!(trace.samples.iter().all(|s| s.sup_hi <= 3.0 && s.sup_vi == 0.0));
    assert!(trace.last().sup_hi < 3.0);
}
