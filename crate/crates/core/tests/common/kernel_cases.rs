// Kernel semantics cases, shared by the core test suite and the acceptance
// harness. The includer defines `kernel_cases!`, which receives every case as
// `name => block`.

use hvc_core::alphabet::channel_alphabet;
use hvc_core::check::{self, Assertion, NormalForm, Outcome, Verdict};
use hvc_core::lts::{ExplorationLimits, Lts};
use hvc_core::parse::{parse_process, parse_script};
use hvc_core::semantics::initials;
use hvc_core::{Env, Error, Label, Proc};

const BUFFER: &str = "
nametype data = {0..2}
channel in, out : data

OneStep(_) = 0

Timed(OneStep) {
  Example     = timed_priority(TimedBuffer)
  TimedBuffer = in?x -> (TimedBuffer [] (WAIT(1) ; out!x -> TimedBuffer))
}
";

struct Script {
    env: Env,
    asserts: Vec<Assertion>,
}

fn load(src: &str) -> Script {
    let mut env = Env::new();
    let asserts = parse_script(&mut env, src).unwrap_or_else(|e| panic!("script does not load: {e}"));
    Script { env, asserts }
}

/// `chans` is prepended to `body`: channel a, b, c and e : {0..2}.
fn small(body: &str) -> Script {
    load(&format!("nametype V = {{0..2}}\nchannel a, b, c\nchannel e, f : V\n{body}"))
}

impl Script {
    fn proc(&self, name: &str) -> Proc {
        self.env.process(name).unwrap()
    }

    fn lts(&self, name: &str) -> Lts {
        Lts::compile(&self.env, &self.proc(name), &ExplorationLimits::default()).unwrap()
    }

    fn label(&self, token: &str) -> Label {
        if token == "tock" {
            return Label::Tock;
        }
        self.env
            .all_events()
            .into_iter()
            .map(Label::Event)
            .find(|l| l.to_string() == token)
            .unwrap_or_else(|| panic!("no event {token}"))
    }

    fn trace(&self, trace: &str) -> Vec<Label> {
        trace.split_whitespace().map(|t| self.label(t)).collect()
    }

    fn accepts(&self, name: &str, trace: &str) -> bool {
        self.lts(name).has_trace(&self.trace(trace))
    }

    fn initials(&self, name: &str) -> Vec<String> {
        let mut ls: Vec<String> =
            initials(&self.env, &self.proc(name)).unwrap().iter().map(Label::to_string).collect();
        ls.sort();
        ls
    }

    fn check(&self, name: &str) -> Verdict {
        let a = self.asserts.iter().find(|a| a.name == name).unwrap_or_else(|| panic!("no assertion {name}"));
        check::check(&self.env, a, &ExplorationLimits::default())
    }

    fn check_with(&self, name: &str, threads: usize) -> Verdict {
        let a = self.asserts.iter().find(|a| a.name == name).unwrap();
        check::check(&self.env, a, &ExplorationLimits { threads, ..Default::default() })
    }
}

fn strs(xs: &[&str]) -> Vec<String> {
    let mut v: Vec<String> = xs.iter().map(|s| s.to_string()).collect();
    v.sort();
    v
}

fn tocks(lts: &Lts, s: u32) -> usize {
    lts.edges(s).filter(|(l, _)| *l == Label::Tock).count()
}

kernel_cases! {
    buffer_listing_loads => {
        let s = load(BUFFER);
        assert!(s.env.has_def("Example"));
        assert!(s.env.has_def("TimedBuffer"));
    },

    buffer_accepts_output_one_tock_later => {
        let s = load(BUFFER);
        for v in 0..3 {
            assert!(s.accepts("Example", &format!("in.{v} tock out.{v}")), "value {v}");
        }
    },

    buffer_rejects_output_without_delay => {
        let s = load(BUFFER);
        for v in 0..3 {
            assert!(!s.accepts("Example", &format!("in.{v} out.{v}")), "value {v}");
        }
    },

    buffer_never_outputs_a_value_it_did_not_receive => {
        let s = load(BUFFER);
        assert!(!s.accepts("Example", "in.1 tock out.2"));
        assert!(!s.accepts("Example", "tock out.0"));
    },

    buffer_choice_survives_the_passage_of_time => {
        let s = load(BUFFER);
        assert!(s.accepts("Example", "in.1 tock tock tock in.2"));
        assert!(s.accepts("Example", "in.1 tock tock tock out.1"));
    },

    buffer_new_input_discards_the_pending_output => {
        let s = load(BUFFER);
        assert!(s.accepts("Example", "in.1 in.2 tock out.2"));
        assert!(!s.accepts("Example", "in.1 in.2 tock out.1"));
    },

    buffer_compiles_to_a_finite_lts => {
        let s = load(BUFFER);
        let lts = s.lts("Example");
        let labels: Vec<String> =
            (0..lts.num_states() as u32).flat_map(|q| lts.edges(q).map(|(l, _)| l.to_string())).collect();
        assert!(labels.iter().any(|l| l.starts_with("in.")));
        assert!(labels.iter().any(|l| l.starts_with("out.")));
        assert!(labels.iter().any(|l| l == "tock"));
        assert!(lts.num_states() < 20);
    },

    buffer_refines_itself => {
        let s = load(&format!("{BUFFER}\nassert R: Example [T= Example"));
        assert_eq!(s.check("R").outcome, Outcome::Pass { witness: None });
    },

    buffer_is_deadlock_free => {
        let s = load(&format!("{BUFFER}\nassert D: Example :[deadlock free]"));
        assert!(s.check("D").outcome.is_pass());
    },

    stop_lets_time_pass_and_nothing_else => {
        let s = small("P = STOP");
        assert!(s.accepts("P", "tock tock tock tock tock"));
        assert!(!s.accepts("P", "a"));
        assert_eq!(s.initials("P"), strs(&["tock"]));
    },

    ustop_refuses_tock => {
        let s = small("P = USTOP");
        assert!(s.initials("P").is_empty());
        assert!(!s.accepts("P", "tock"));
    },

    ustop_compiles_to_one_state_without_edges => {
        let s = small("P = USTOP");
        let lts = s.lts("P");
        assert_eq!((lts.num_states(), lts.num_transitions()), (1, 0));
    },

    skip_passes_control_without_a_visible_event => {
        let s = small("P = SKIP ; a -> STOP");
        assert!(s.accepts("P", "a"));
        assert!(s.accepts("P", "tock a"));
    },

    wait_delays_by_its_duration => {
        let s = small("P = WAIT(2) ; a -> STOP");
        assert!(!s.accepts("P", "a"));
        assert!(!s.accepts("P", "tock a"));
        assert!(s.accepts("P", "tock tock a"));
    },

    wait_offers_only_tock => {
        let s = small("P = WAIT(2)");
        assert_eq!(s.initials("P"), strs(&["tock"]));
    },

    wait_zero_offers_only_termination => {
        let s = small("P = WAIT(0)");
        assert_eq!(s.initials("P"), strs(&["tick"]));
    },

    wait_zero_is_a_unit_of_sequence => {
        let s = small(
            "P = WAIT(0) ; a -> STOP\nQ = a -> STOP\nassert L: P [T= Q\nassert R: Q [T= P",
        );
        assert!(s.check("L").outcome.is_pass());
        assert!(s.check("R").outcome.is_pass());
    },

    prefix_offers_its_event_and_time => {
        let s = small("P = e?x -> STOP");
        assert_eq!(s.initials("P"), strs(&["e.0", "e.1", "e.2", "tock"]));
        assert!(s.accepts("P", "tock tock e.2"));
    },

    restricted_input_offers_only_the_comprehension => {
        let s = small("P = e?x:{x | x <- V, x > 0} -> STOP");
        assert_eq!(s.initials("P"), strs(&["e.1", "e.2", "tock"]));
    },

    output_binds_the_input_value => {
        let s = small("P = e?x -> f!x -> STOP");
        assert!(s.accepts("P", "e.2 f.2"));
        assert!(!s.accepts("P", "e.2 f.1"));
    },

    conditional_selects_a_branch => {
        let s = small("P(x) = if x > 1 then a -> STOP else b -> STOP\nQ = P(2)\nR = P(0)");
        assert!(s.accepts("Q", "a") && !s.accepts("Q", "b"));
        assert!(s.accepts("R", "b") && !s.accepts("R", "a"));
    },

    internal_choice_has_the_traces_of_both_sides => {
        let s = small(
            "P = a -> STOP |~| b -> STOP\nQ = a -> STOP [] b -> STOP\nassert L: Q [T= P\nassert R: P [T= Q",
        );
        assert!(s.accepts("P", "a") && s.accepts("P", "b"));
        assert!(s.check("L").outcome.is_pass());
        assert!(s.check("R").outcome.is_pass());
    },

    parallel_agrees_on_time => {
        let s = small("P = WAIT(1) [| {} |] e!0 -> SKIP");
        assert_eq!(s.initials("P"), strs(&["e.0", "tock"]));
    },

    parallel_synchronises_on_the_sync_set => {
        let s = small("P = a -> STOP [| {a} |] b -> a -> STOP");
        assert!(!s.accepts("P", "a"));
        assert!(s.accepts("P", "b a"));
    },

    ustop_in_parallel_stops_time => {
        let s = small("P = a -> STOP ||| USTOP");
        assert!(!s.accepts("P", "tock"));
        assert!(s.accepts("P", "a"));
    },

    interleaving_terminates_when_both_sides_do => {
        let s = small("P = (a -> SKIP ||| b -> SKIP) ; c -> STOP");
        assert!(!s.accepts("P", "a c"));
        assert!(s.accepts("P", "a b c"));
        assert!(s.accepts("P", "b a c"));
    },

    parallel_has_at_most_one_tock_edge_per_state => {
        let s = small("L = e?x -> WAIT(1) ; f!x -> L\nR = f?y -> a -> R\nP = L [| {| f |} |] (R ||| TRUN({b}))");
        let lts = s.lts("P");
        assert!((0..lts.num_states() as u32).all(|q| tocks(&lts, q) <= 1));
    },

    hiding_makes_an_event_internal => {
        let s = small("P = (a -> b -> STOP) \\ {a}");
        assert!(s.accepts("P", "b"));
        assert!(!s.accepts("P", "a"));
    },

    hidden_events_are_urgent_under_timed_priority => {
        let s = small("P = ((a -> SKIP) \\ {a}) [] b -> STOP\nQ = timed_priority(P)");
        assert!(s.accepts("P", "tock b"));
        assert!(!s.accepts("Q", "tock b"));
        assert!(s.accepts("Q", "b tock"));
    },

    projection_keeps_only_the_listed_events => {
        let s = small("P = a -> b -> c -> STOP\nQ = P |\\ {b}\nR = P |\\ {b, tock}");
        assert!(s.accepts("Q", "b") && !s.accepts("Q", "a"));
        assert!(!s.accepts("Q", "tock"));
        assert!(s.accepts("R", "tock b tock"));
    },

    renaming_maps_events => {
        let s = small("P = (a -> STOP)[[a <- b]]");
        assert!(s.accepts("P", "b"));
        assert!(!s.accepts("P", "a"));
    },

    relational_renaming_offers_every_image => {
        let s = small("P = (a -> STOP)[[a <- b, a <- c]]");
        assert!(s.accepts("P", "b"));
        assert!(s.accepts("P", "c"));
        assert!(!s.accepts("P", "b c"));
    },

    renaming_keeps_channel_values => {
        let s = small("P = (e!1 -> STOP)[[e <- f]]");
        assert!(s.accepts("P", "f.1"));
        assert!(!s.accepts("P", "f.0"));
    },

    interrupt_hands_over_on_a_handler_event => {
        let s = small("P = (a -> a -> STOP) /\\ (b -> STOP)");
        assert!(s.accepts("P", "a b"));
        assert!(!s.accepts("P", "b a"));
    },

    interrupt_is_not_triggered_by_time => {
        let s = small("P = (a -> STOP) /\\ (b -> STOP)");
        assert!(s.accepts("P", "tock tock a b"));
    },

    exception_hands_over_on_a_throw_event => {
        let s = small("P = (TRUN({a, b}) [| {b} |> SKIP) ; c -> STOP");
        assert!(s.accepts("P", "a a b c"));
        assert!(!s.accepts("P", "b a"));
        assert!(!s.accepts("P", "a c"));
    },

    trun_offers_its_events_while_time_passes => {
        let s = small("P = TRUN({a})");
        assert!(s.accepts("P", "a tock a a tock"));
        assert!(!s.accepts("P", "b"));
    },

    endby_zero_forces_the_event_before_tock => {
        let s = small("P = EndBy(a -> SKIP, 0) ; STOP");
        assert!(!s.accepts("P", "tock"));
        assert!(s.accepts("P", "a tock"));
    },

    endby_allows_exactly_d_tocks => {
        let s = small("P = EndBy(a -> SKIP, 2) ; STOP");
        assert!(s.accepts("P", "tock tock a tock"));
        assert!(!s.accepts("P", "tock tock tock"));
    },

    endby_expiry_with_pending_internal_work_is_no_timelock => {
        let s = small(
            "P = timed_priority(EndBy(WAIT(1) ; ((a -> SKIP) \\ {a}), 1) ; TRUN({b}))\nassert D: P :[deadlock free]",
        );
        assert!(s.accepts("P", "tock tock b tock"));
        assert!(check::timelock_free(&s.lts("P")));
        assert!(s.check("D").outcome.is_pass());
    },

    adeadline_requires_the_event_within_d => {
        let s = small("P = ADeadline({| e |}, {| e.0 |}, 3) ; STOP");
        assert!(s.accepts("P", "tock tock tock e.0 tock"));
        assert!(!s.accepts("P", "tock tock tock tock"));
    },

    adeadline_leaves_other_values_free => {
        let s = small("P = ADeadline({| e |}, {| e.0 |}, 3) ; STOP");
        assert!(s.accepts("P", "e.1 e.2 tock e.1 tock e.2 e.0"));
    },

    adeadline_terminates_on_the_awaited_event => {
        let s = small("P = ADeadline({| e |}, {| e.0 |}, 3) ; a -> STOP");
        assert!(s.accepts("P", "e.1 e.0 a"));
        assert!(!s.accepts("P", "e.1 a"));
    },

    missed_deadline_fails_with_a_fourth_tock => {
        let s = small(
            "Follow(d) = e?x -> (if x == 0 then Follow(d)
                                 else ((ADeadline({| e |}, {| e.0 |}, d) ; TRUN({| e.0 |})) /\\ f?y -> Follow(d)))
                          [] f?y -> Follow(d)
Spec = timed_priority(Follow(3))
Impl = e!1 -> WAIT(4) ; USTOP
assert P: Spec [T= Impl",
        );
        let v = s.check("P");
        let ce = v.outcome.counterexample().expect("counterexample").trace().to_vec();
        assert_eq!(ce, s.trace("e.1 tock tock tock tock"));
    },

    counterexamples_replay_on_the_implementation => {
        let s = small("Spec = a -> b -> STOP\nImpl = a -> c -> STOP\nassert P: Spec [T= Impl");
        let v = s.check("P");
        let ce = v.outcome.counterexample().unwrap().trace().to_vec();
        assert_eq!(ce, s.trace("a c"));
        assert!(s.lts("Impl").has_trace(&ce));
        assert!(!s.lts("Spec").has_trace(&ce));
    },

    timed_priority_keeps_visible_events_beside_tau => {
        let s = small("P = timed_priority(((b -> STOP) \\ {b}) [] a -> STOP)");
        assert_eq!(s.initials("P"), strs(&["a", "tau"]));
    },

    timed_priority_leaves_tock_only_states_alone => {
        let s = small("P = timed_priority(STOP)");
        assert_eq!(s.initials("P"), strs(&["tock"]));
    },

    stop_is_a_timed_deadlock => {
        let s = small("P = STOP\nassert D: P :[deadlock free]");
        let v = s.check("D");
        assert!(v.outcome.is_fail());
        let Some(check::Counterexample::Deadlock { trace, cycle }) = v.outcome.counterexample() else {
            panic!("expected a deadlock counterexample")
        };
        assert!(trace.is_empty());
        assert_eq!(cycle, &vec![Label::Tock]);
    },

    trun_is_deadlock_free => {
        let s = small("P = TRUN({a})\nassert D: P :[deadlock free]");
        assert!(s.check("D").outcome.is_pass());
    },

    reachability_returns_a_witness => {
        let s = small("P = a -> b -> STOP\nassert R: P :[reaches b]\nassert U: P :[reaches c]");
        assert_eq!(s.check("R").outcome, Outcome::Pass { witness: Some(s.trace("a b")) });
        assert!(s.check("U").outcome.is_fail());
    },

    memory_cell_has_three_states_and_nine_set_edges => {
        let s = small("HV(x) = e?nv -> HV(nv) [] f!x -> HV(x)");
        let root = parse_process(&s.env, "HV(0)").unwrap();
        let lts = Lts::compile(&s.env, &root, &ExplorationLimits::default()).unwrap();
        let on = |chan: &str| {
            (0..lts.num_states() as u32)
                .flat_map(|q| lts.edges(q))
                .filter(|(l, _)| l.to_string().starts_with(chan))
                .count()
        };
        assert_eq!(lts.num_states(), 3);
        assert_eq!(on("e."), 9);
        assert_eq!(on("f."), 3);
        assert!((0..3).all(|q| tocks(&lts, q) == 1));
    },

    normal_form_merges_internal_branches => {
        let s = small("P = a -> STOP |~| b -> STOP");
        let lts = s.lts("P");
        assert_eq!(lts.num_states(), 4);
        let mut nf = NormalForm::new(&lts);
        let a = nf.after(nf.initial(), s.label("a"));
        let b = nf.after(nf.initial(), s.label("b"));
        assert!(a.is_some() && b.is_some());
        assert_eq!(nf.expand(), 3);
    },

    compilation_is_deterministic => {
        let s = load(BUFFER);
        let x = s.lts("Example");
        let y = s.lts("Example");
        assert_eq!((x.num_states(), x.num_transitions()), (y.num_states(), y.num_transitions()));
        assert_eq!(x.to_json(), y.to_json());
    },

    verdicts_do_not_depend_on_thread_count => {
        let s = load(&format!("{BUFFER}\nBad = in?x -> out!x -> Bad\nassert F: Example [T= Bad"));
        let runs: Vec<Verdict> = [1, 4, 8].iter().map(|&t| s.check_with("F", t)).collect();
        assert!(runs[0].outcome.is_fail());
        for r in &runs[1..] {
            assert_eq!(r.outcome, runs[0].outcome);
            assert_eq!(r.states, runs[0].states);
        }
    },

    static_alphabet_follows_hiding_renaming_and_recursion => {
        let s = small(
            "P = a -> (e?x -> P [] b -> STOP)\nQ = (P \\ {| e |})[[b <- c]]\nR = P |\\ {| e |}",
        );
        let names = |n: &str| -> Vec<String> {
            let mut v: Vec<String> = channel_alphabet(&s.env, &s.proc(n)).unwrap().iter().map(|c| c.to_string()).collect();
            v.sort();
            v
        };
        assert_eq!(names("P"), ["a", "b", "e"]);
        assert_eq!(names("Q"), ["a", "c"]);
        assert_eq!(names("R"), ["e"]);
    },

    unguarded_recursion_is_reported => {
        let s = small("P = P [] a -> STOP");
        let r = Lts::compile(&s.env, &s.proc("P"), &ExplorationLimits::default());
        assert!(matches!(r, Err(Error::UnguardedRecursion(_))));
    },

    outputs_outside_the_domain_are_reported => {
        let s = small("P = e!7 -> STOP");
        let r = Lts::compile(&s.env, &s.proc("P"), &ExplorationLimits::default());
        assert!(matches!(r, Err(Error::DomainError { .. })));
    },

    unknown_process_names_are_reported => {
        let mut env = Env::new();
        let r = parse_script(&mut env, "channel a\nP = a -> Q");
        let err = r.err().map(|e| e.to_string()).or_else(|| {
            Lts::compile(&env, &env.process("P").unwrap(), &ExplorationLimits::default()).err().map(|e| e.to_string())
        });
        assert!(err.expect("an error").contains('Q'));
    },

    state_bound_yields_bound_exceeded => {
        let s = small("C(n) = a -> C(n + 1)\nP = C(0)\nassert D: P :[deadlock free]");
        let a = s.asserts.iter().find(|a| a.name == "D").unwrap();
        let v = check::check(&s.env, a, &ExplorationLimits { max_states: 100, ..Default::default() });
        assert!(matches!(v.outcome, Outcome::BoundExceeded { .. }));
    },
}
