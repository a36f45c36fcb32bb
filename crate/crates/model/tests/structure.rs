use std::collections::BTreeSet;

use hvc_core::alphabet::channel_alphabet;
use hvc_core::check::Outcome;
use hvc_core::lts::{ExplorationLimits, Lts};
use hvc_core::parse::{parse_expr, parse_process, parse_script};
use hvc_core::Label;
use hvc_model::{build, Instantiation, Model, Profile, TimeScale};

fn desk() -> Model {
    build(&Instantiation::default(), TimeScale::of(Profile::Desk), &[]).unwrap()
}

fn eval(m: &Model, src: &str) -> i64 {
    parse_expr(&m.env, src).unwrap().eval(&m.env).unwrap().as_int().unwrap()
}

fn compile(m: &Model, src: &str) -> Lts {
    Lts::compile(&m.env, &parse_process(&m.env, src).unwrap(), &ExplorationLimits::default()).unwrap()
}

/// Channel names of the visible events of an LTS.
fn alphabet(lts: &Lts) -> BTreeSet<String> {
    (0..lts.num_states() as u32)
        .flat_map(|s| lts.edges(s))
        .filter_map(|(l, _)| match l {
            Label::Event(e) => Some(e.channel.to_string()),
            Label::Tock => Some("tock".to_string()),
            _ => None,
        })
        .collect()
}

#[test]
fn duty_bands_follow_the_mapping_listing() {
    let m = desk();
    for (d, v) in [(0, 0), (19, 0), (20, 1), (60, 1), (61, 2), (100, 2)] {
        assert_eq!(eval(&m, &format!("duty2volt({d})")), v, "duty {d}");
    }
    // the script function and the Rust lookup agree everywhere
    for d in 0..=100 {
        assert_eq!(eval(&m, &format!("duty2volt({d})")), hvc_model::duty2volt(d));
    }
}

#[test]
fn controller_duty_lands_in_the_requested_band() {
    let m = desk();
    assert_eq!(eval(&m, "volt2duty(2)"), 80);
    for v in 0..=2 {
        assert_eq!(hvc_model::duty2volt(eval(&m, &format!("volt2duty({v})"))), v);
    }
}

#[test]
fn ramp_moves_one_step_and_saturates() {
    let m = desk();
    let oracle = |m: i64, sp: i64| m + (sp - m).signum() * (sp - m).abs().min(1);
    for x in 0..=2 {
        for sp in 0..=2 {
            assert_eq!(eval(&m, &format!("ramp({x}, {sp})")), oracle(x, sp), "ramp({x}, {sp})");
        }
    }
    assert_eq!(eval(&m, "ramp(0, 2)"), 1);
    assert_eq!(eval(&m, "ramp(ramp(0, 2), 2)"), 2);
}

#[test]
fn abs_diff_is_symmetric() {
    let m = desk();
    assert_eq!(eval(&m, "abs_diff(2, 0)"), 2);
    assert_eq!(eval(&m, "abs_diff(1, 2)"), 1);
    for x in 0..=2 {
        for y in 0..=2i64 {
            assert_eq!(eval(&m, &format!("abs_diff({x}, {y})")), (x - y).abs());
        }
    }
}

#[test]
fn time_conversions_round_up() {
    let m = desk();
    assert_eq!(eval(&m, "ms(10)"), 2);
    assert_eq!(eval(&m, "ms(22)"), 5);
    assert_eq!(eval(&m, "ms(370)"), 74);
    assert_eq!(eval(&m, "s(3)"), 600);
    let paper = build(&Instantiation::default(), TimeScale::of(Profile::Paper), &[]).unwrap();
    assert_eq!(eval(&paper, "ms(22)"), 11);
    assert_eq!(eval(&paper, "s(3)"), 1500);
}

#[test]
fn hv_cell_has_three_states() {
    let m = desk();
    let lts = compile(&m, "HV(0)");
    assert_eq!(lts.num_states(), 3);
    let count = |chan: &str| {
        (0..3u32).flat_map(|s| lts.edges(s)).filter(|(l, _)| matches!(l, Label::Event(e) if e.channel.as_str() == chan)).count()
    };
    assert_eq!(count("set_HV"), 9);
    assert_eq!(count("get_HV"), 3);
    assert!((0..3u32).all(|s| lts.edges(s).filter(|(l, _)| *l == Label::Tock).count() == 1));
}

#[test]
fn platform_starts_at_zero() {
    let m = desk();
    let lts = compile(&m, "HVC_Platform");
    let first: Vec<String> = lts
        .edges(0)
        .filter(|(l, _)| matches!(l, Label::Event(e) if e.channel.as_str() == "RPActualHV_out"))
        .map(|(l, _)| l.to_string())
        .collect();
    assert_eq!(first, ["RPActualHV_out.0"]);
}

#[test]
fn mapped_system_alphabet() {
    let m = desk();
    let p = parse_process(&m.env, "MappedSystem").unwrap();
    let found: BTreeSet<String> = channel_alphabet(&m.env, &p).unwrap().iter().map(|c| c.to_string()).collect();
    let expected: BTreeSet<String> =
        ["RPActualHV_out", "RPsetPoint", "RPpow24V", "RPerrorAck"].iter().map(|s| s.to_string()).collect();
    assert_eq!(found, expected);
}

#[test]
fn p1_implementation_alphabet() {
    let m = desk();
    let lts = compile(&m, "ImplP1");
    let expected: BTreeSet<String> = ["RPsetPoint", "e", "tock"].iter().map(|s| s.to_string()).collect();
    assert_eq!(alphabet(&lts), expected);
    // the static over-approximation agrees
    let p = parse_process(&m.env, "ImplP1").unwrap();
    let stat: BTreeSet<String> = channel_alphabet(&m.env, &p).unwrap().iter().map(|c| c.to_string()).collect();
    assert_eq!(stat, ["RPsetPoint", "e"].iter().map(|s| s.to_string()).collect());
}

#[test]
fn watchdog_alternates_between_its_states() {
    let mut m = desk();
    let extra = "
WatchdogOrder = Watchdog::s0 -> Watchdog::s1 -> WatchdogOrder
ControllerOrder = State_machine::Init -> State_machine::Wait24Vpower -> Running
Running = State_machine::ClosedLoop -> Running
          [] State_machine::Wait24Vpower -> Running
          [] State_machine::ErrorMode -> State_machine::Wait24Vpower -> Running
assert W: WatchdogOrder [T= mod_sys_instrumented |\\ {| Watchdog::s0, Watchdog::s1 |}
assert S: ControllerOrder [T= mod_sys_instrumented |\\ {| State_machine::Init, State_machine::Wait24Vpower,
                                                         State_machine::ClosedLoop, State_machine::ErrorMode |}
";
    let asserts = parse_script(&mut m.env, extra).unwrap();
    for a in &asserts {
        let v = hvc_core::check::check(&m.env, a, &ExplorationLimits::default());
        assert!(v.outcome.is_pass(), "{}: {:?}", a.name, v.outcome);
    }
}

#[test]
fn error_mode_is_reached_through_a_power_loss() {
    let m = desk();
    let v = m.check("Reach_ErrorMode", &ExplorationLimits::default()).unwrap();
    let Outcome::Pass { witness: Some(w) } = &v.outcome else { panic!("{:?}", v.outcome) };
    let names: Vec<String> = w.iter().map(Label::to_string).collect();
    assert_eq!(names.last().unwrap(), "State_machine::ErrorMode");
    assert!(names.iter().any(|n| n == "mod_sys::ext_pow24VStatus.in.Power_Off"), "{names:?}");
}

#[test]
fn reachability_witnesses_end_in_their_marker() {
    let m = desk();
    for (name, marker) in [
        ("Reach_Init", "State_machine::Init"),
        ("Reach_Wait24VPower", "State_machine::Wait24Vpower"),
        ("Reach_ClosedLoop", "State_machine::ClosedLoop"),
        ("Reach_Watchdog_s0", "Watchdog::s0"),
        ("Reach_Watchdog_s1", "Watchdog::s1"),
    ] {
        let v = m.check(name, &ExplorationLimits::default()).unwrap();
        let Outcome::Pass { witness: Some(w) } = &v.outcome else { panic!("{name}: {:?}", v.outcome) };
        assert_eq!(w.last().unwrap().to_string(), marker);
    }
}

#[test]
fn instantiations_without_a_band_representative_are_rejected() {
    let inst = Instantiation { duty: vec![0, 20], ..Default::default() };
    assert!(build(&inst, TimeScale::of(Profile::Desk), &[]).is_err());
    let odd = TimeScale { tick_ms: 3 };
    assert!(build(&Instantiation::default(), odd, &[]).is_err());
}
