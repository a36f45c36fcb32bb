use hvc_plant::*;

const KP: f64 = 1.1196;
const T1: f64 = 0.087821;
const T2: f64 = 0.02042;

/// Continuous step response from rest to `v` volts.
fn analytic(v: f64, t: f64) -> f64 {
    KP * v * (1.0 - (T1 * (-t / T1).exp() - T2 * (-t / T2).exp()) / (T1 - T2))
}

/// First time the analytic response to a step to `v` volts reaches the lower
/// edge of the band; the response is monotone and settles below the upper
/// edge, so this is when it enters for good.
fn analytic_entry(v: f64, band: f64) -> f64 {
    let target = v - band * v.max(1.0);
    let (mut lo, mut hi) = (0.0, 2.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if analytic(v, mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

fn outputs(plant: &Plant, program: &InputProgram, steps: u64, every: u64) -> Vec<Sample> {
    let mut out = Vec::new();
    simulate(plant, &Monitor::standard(), program, 1.0, steps, every, |s| out.push(s)).unwrap();
    out
}

#[test]
fn step_response_matches_the_transfer_function() {
    let plant = Plant::identified();
    for s in outputs(&plant, &InputProgram::constant(2), 500_000, 1000) {
        assert!((s.y - analytic(10.0, s.t)).abs() < 1e-8, "t={} y={} expected {}", s.t, s.y, analytic(10.0, s.t));
    }
}

#[test]
fn dc_gain_is_kp() {
    let d = Plant::identified().discretize().unwrap();
    assert!((d.dc_gain() - 1.1196).abs() < 1e-6);
    assert!((d.dc_gain() / KP - 1.0).abs() < 1e-9);
    // final value: after 20 Tp1 the slow lag has decayed below 1e-8
    let steps = (20.0 * T1 / 1e-6) as u64;
    let last = *outputs(&Plant::identified(), &InputProgram::constant(1), steps, steps).last().unwrap();
    assert!((last.y - KP * 5.0).abs() < 1e-6, "{}", last.y);
}

#[test]
fn zero_input_keeps_zero_output() {
    let samples = outputs(&Plant::identified(), &InputProgram::constant(0), 200_000, 1000);
    assert!(samples.iter().all(|s| s.y == 0.0));
}

#[test]
fn response_is_linear_monotone_and_bounded() {
    let plant = Plant::identified();
    let one = outputs(&plant, &InputProgram::constant(1), 600_000, 500);
    let two = outputs(&plant, &InputProgram::constant(2), 600_000, 500);
    for (a, b) in one.iter().zip(&two) {
        assert!((b.y - 2.0 * a.y).abs() <= 1e-9 * b.y.abs().max(1e-12));
    }
    assert!(two.windows(2).all(|w| w[1].y >= w[0].y));
    assert!(two.iter().all(|s| s.y <= KP * 10.0));
}

#[test]
fn band_entry_is_within_the_settling_window() {
    let plant = Plant::identified();
    for u in [1.0, 2.0] {
        let t = estimate_settling_time(&plant, 0.15, u).unwrap();
        assert!(t <= 0.3668, "u={u}: {t}");
        assert!(t <= 0.370, "u={u}: {t}");
        let exact = analytic_entry(5.0 * u, 0.15);
        assert!((t - exact).abs() < 2e-6, "u={u}: {t} vs {exact}");
    }
}

#[test]
fn band_entry_baseline() {
    // measured entry times from rest, recorded as regression values
    let plant = Plant::identified();
    let t10 = estimate_settling_time(&plant, 0.15, 2.0).unwrap();
    let t5 = estimate_settling_time(&plant, 0.15, 1.0).unwrap();
    assert!((t10 - analytic_entry(10.0, 0.15)).abs() < 2e-6);
    assert_eq!(t10, t5);
}

#[test]
fn halving_the_step_barely_moves_band_entry() {
    let coarse = Plant::identified();
    let fine = coarse.with_step(5e-7);
    for u in [1.0, 2.0] {
        let a = estimate_settling_time(&coarse, 0.15, u).unwrap();
        let b = estimate_settling_time(&fine, 0.15, u).unwrap();
        assert!((a - b).abs() < 2e-6, "u={u}: {a} vs {b}");
    }
}

#[test]
fn wider_bands_are_entered_sooner() {
    let plant = Plant::identified();
    let narrow = estimate_settling_time(&plant, 0.15, 2.0).unwrap();
    let wide = estimate_settling_time(&plant, 0.50, 2.0).unwrap();
    assert!(wide < narrow);
    assert_eq!(estimate_settling_time(&plant, 0.15, 0.0).unwrap(), 0.0);
}

#[test]
fn steady_offset_outside_a_narrow_band_never_settles() {
    let r = estimate_settling_time(&Plant::identified(), 0.05, 2.0);
    assert!(matches!(r, Err(PlantError::NonConvergence)));
}

#[test]
fn coarse_steps_are_rejected() {
    let r = Plant::identified().with_step(0.01).discretize();
    assert!(matches!(r, Err(PlantError::StepTooLarge { .. })));
    let bad = PlantModel { tp1: -1.0, ..Plant::identified() };
    assert!(matches!(bad.discretize(), Err(PlantError::InvalidModel(_))));
}

#[test]
fn narrow_band_monitor_finds_the_steady_offset() {
    // 0.1196 u exceeds 0.05 u once settled
    let monitor = PHwMonitor::standard().with_band(0.05);
    let v = find_violation(&Plant::identified(), &monitor, &InputProgram::constant(2), 1.0, 1_000_000).unwrap();
    let Verdict::Violation { step, sample } = v else { panic!("{v:?}") };
    assert_eq!(step, 366_800);
    assert!(sample.e > 0.0);
}

#[test]
fn idle_input_is_valid() {
    let v = find_violation(&Plant::identified(), &Monitor::standard(), &InputProgram::constant(0), 1.0, 100_000);
    assert_eq!(v.unwrap(), Verdict::ValidWithinBound { steps: 100_000 });
}

#[test]
fn full_discharge_is_slower_than_the_window() {
    // 10 V down to 0 V must reach 0.15 V, which takes about 0.40 s
    let t = settling_time(&Plant::identified(), 0.15, 10.0, 0.0).unwrap();
    assert!(t > 0.3668 && t < 0.45, "{t}");
    let program = InputProgram { values: vec![2, 0] };
    let v = find_violation(&Plant::identified(), &Monitor::standard(), &program, 1.0, 2_000_000).unwrap();
    let Verdict::Violation { step, .. } = v else { panic!("{v:?}") };
    assert_eq!(step, 1_366_800);
}

#[test]
fn bounded_search_is_valid_at_both_bounds() {
    for max_steps in [1_000, 1_000_000] {
        let cfg = SearchConfig { max_steps, ..SearchConfig::default() };
        let report = search(&Plant::identified(), &Monitor::standard(), &cfg).unwrap();
        assert_eq!(report.verdict, Verdict::ValidWithinBound { steps: max_steps });
        assert_eq!(report.programs, 27 + 16);
        assert!(report.elapsed < 600.0);
    }
}

#[test]
fn search_reports_the_first_violating_program() {
    let cfg = SearchConfig { max_steps: 2_000_000, exhaustive_len: 2, random_programs: 0, ..SearchConfig::default() };
    let report = search(&Plant::identified(), &Monitor::standard(), &cfg).unwrap();
    let (i, p) = report.program.clone().unwrap();
    // programs are enumerated lexicographically; [2, 0] is the first fall to zero from 10 V
    assert_eq!((i, p.values), (6, vec![2, 0]));
    let json = summary_json(&report);
    assert_eq!(json["result"], "violation");
    assert_eq!(json["steps"], 1_366_800);
}

#[test]
fn random_programs_depend_only_on_the_seed() {
    assert_eq!(random_programs(4, 6, 2, 7), random_programs(4, 6, 2, 7));
    assert_ne!(random_programs(4, 6, 2, 7), random_programs(4, 6, 2, 8));
    assert_eq!(exhaustive_programs(3, 2).len(), 27);
}

#[test]
fn csv_has_the_trace_columns() {
    let samples = outputs(&Plant::identified(), &InputProgram::constant(1), 3000, 1000);
    let mut buf = Vec::new();
    write_csv(&mut buf, &samples).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,u,y,E"));
    assert_eq!(lines.count(), 3);
}
