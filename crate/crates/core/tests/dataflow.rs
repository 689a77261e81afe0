mod common;

use std::sync::{Arc, Mutex};

use marlkit_core::canon;
use marlkit_core::interface::{append_feature, concat_obs_act, make_team, map_to_vector};
use marlkit_core::testkit::{Spy, SpyLog};
use marlkit_core::{
    combine, flatten, identity, stack, Bundle, Error, Frame, Interface, RngStream, SlotPartition,
    SpaceSpec, Specs, Value,
};
use proptest::prelude::*;

fn log() -> SpyLog {
    Arc::new(Mutex::new(Vec::new()))
}

fn take(log: &SpyLog) -> Vec<String> {
    std::mem::take(&mut *log.lock().unwrap())
}

fn discrete_specs(n: usize) -> Specs {
    Specs::new(vec![SpaceSpec::Discrete(5); n], vec![SpaceSpec::Discrete(5); n]).unwrap()
}

fn discretes(xs: &[u64]) -> Bundle {
    Bundle::new(xs.iter().map(|&x| Value::Discrete(x)).collect()).unwrap()
}

#[test]
fn stack_orders_observations_inner_first_and_actions_outer_first() {
    let l = log();
    let mut s = stack(Spy::new("I2", &l), Spy::new("I1", &l));
    s.setup(&discrete_specs(1)).unwrap();
    s.reset(discretes(&[0])).unwrap();
    assert_eq!(take(&l), ["reset:I1", "reset:I2"]);
    s.obs_trans(Frame::initial(discretes(&[0]))).unwrap();
    assert_eq!(take(&l), ["obs:I1", "obs:I2"]);
    s.act_trans(discretes(&[0])).unwrap();
    assert_eq!(take(&l), ["act:I2", "act:I1"]);
}

#[test]
fn combine_runs_base_around_children() {
    let l = log();
    let mut c = combine(
        Spy::new("I3", &l),
        vec![Spy::new("I1", &l), Spy::new("I2", &l)],
        SlotPartition::singletons(2),
    )
    .unwrap();
    c.setup(&discrete_specs(2)).unwrap();
    c.reset(discretes(&[0, 1])).unwrap();
    take(&l);
    c.obs_trans(Frame::initial(discretes(&[0, 1]))).unwrap();
    assert_eq!(take(&l), ["obs:I3", "obs:I1", "obs:I2"]);
    c.act_trans(discretes(&[0, 1])).unwrap();
    assert_eq!(take(&l), ["act:I1", "act:I2", "act:I3"]);
}

#[test]
fn flatten_order_matches_golden_file() {
    let text = include_str!("golden/flatten_order.json");
    let cases: serde_json::Value = serde_json::from_str(text).unwrap();
    for case in cases.as_array().unwrap() {
        let v = canon::value_from_json(&case["value"]).unwrap();
        let want: Vec<f64> = case["flat"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
        assert_eq!(flatten(&v), Value::Vector(want), "{}", case["value"]);
    }
}

fn const_feature(k: f64) -> Box<dyn Interface> {
    append_feature("k", SpaceSpec::vector(1, k, k), move |_| Ok(Value::scalar(k)))
}

#[test]
fn map_to_vector_over_append_is_their_composition() {
    let inner = Specs::new(
        vec![SpaceSpec::mapping([("a", SpaceSpec::vector(2, -1.0, 1.0)), ("z", SpaceSpec::Discrete(3))])],
        vec![SpaceSpec::Discrete(2)],
    )
    .unwrap();
    let mut s = stack(map_to_vector(false), const_feature(7.0));
    let out = s.setup(&inner).unwrap();
    assert_eq!(out.obs[0], SpaceSpec::vector(4, -1.0, 7.0));
    let obs = Value::mapping([("a", Value::Vector(vec![0.5, -0.5])), ("z", Value::Discrete(2))]);
    let got = s.reset(Bundle::single(obs.clone())).unwrap();
    // by hand: append k, then flatten by ascending key a, k, z
    assert_eq!(got, Bundle::single(Value::Vector(vec![0.5, -0.5, 7.0, 2.0])));
    let f = s.obs_trans(Frame::initial(Bundle::single(obs))).unwrap();
    assert_eq!(f.obs, got);
}

#[test]
fn slot_count_checks_name_the_mismatch() {
    let mut t = make_team(SlotPartition::from_sizes(vec![2]).unwrap());
    t.setup(&discrete_specs(2)).unwrap();
    let err = t.act_trans(discretes(&[0, 1])).unwrap_err();
    assert!(matches!(err, Error::SpaceMismatch { .. }), "{err}");
    let err = t.act_trans(Bundle::single(Value::Seq(vec![Value::Discrete(0)]))).unwrap_err();
    assert!(matches!(err, Error::SpaceMismatch { slot: Some(0), .. }), "{err}");
}

#[test]
fn concat_needs_vectors_underneath() {
    let mut c = concat_obs_act(SlotPartition::whole(2));
    assert!(matches!(c.setup(&discrete_specs(2)), Err(Error::Setup(_))));
    let mut ok = stack(concat_obs_act(SlotPartition::whole(2)), map_to_vector(false));
    let out = ok.setup(&discrete_specs(2)).unwrap();
    assert_eq!(out.obs, vec![SpaceSpec::vector(2, 0.0, 4.0)]);
    assert_eq!(out.act, vec![SpaceSpec::vector(2, 0.0, 4.0)]);
    let err = ok.act_trans(Bundle::single(Value::Vector(vec![1.0, 4.5]))).unwrap_err();
    assert!(matches!(err, Error::SpaceMismatch { .. }));
}

fn leaf() -> impl Strategy<Value = SpaceSpec> {
    prop_oneof![
        (1u64..6).prop_map(SpaceSpec::Discrete),
        (1usize..4, -5.0..5.0f64, 0.0..5.0f64).prop_map(|(n, lo, w)| SpaceSpec::vector(n, lo, lo + w)),
        (1usize..3, 1usize..3, 1usize..3).prop_map(|(h, w, c)| SpaceSpec::grid([h, w, c], 0.0, 1.0)),
        Just(SpaceSpec::vector(2, f64::NEG_INFINITY, f64::INFINITY)),
        Just(SpaceSpec::vector(1, 3.0, f64::INFINITY)),
    ]
}

fn spec() -> impl Strategy<Value = SpaceSpec> {
    leaf().prop_recursive(3, 16, 4, |inner| {
        prop_oneof![
            prop::collection::btree_map("[a-d]{1,2}", inner.clone(), 1..4).prop_map(SpaceSpec::Mapping),
            prop::collection::vec(inner, 0..3).prop_map(SpaceSpec::Seq),
        ]
    })
}

proptest! {
    #[test]
    fn samples_lie_in_their_space(s in spec(), seed in any::<u64>()) {
        let v = s.sample(&mut RngStream::new(seed));
        prop_assert!(s.contains(&v), "{:?} not in {:?}", v, s);
        prop_assert!(s.contains(&s.zero_value()));
    }

    #[test]
    fn flatten_length_depends_only_on_the_space(s in spec(), a in any::<u64>(), b in any::<u64>()) {
        let x = flatten(&s.sample(&mut RngStream::new(a)));
        let y = flatten(&s.sample(&mut RngStream::new(b)));
        prop_assert_eq!(x.scalar_count(), s.flat_len());
        prop_assert_eq!(y.scalar_count(), s.flat_len());
    }

    #[test]
    fn map_to_vector_emits_members_of_its_declared_space(s in spec(), seed in any::<u64>(), one_hot in any::<bool>()) {
        let mut m = map_to_vector(one_hot);
        let out = m.setup(&Specs::new(vec![s.clone()], vec![SpaceSpec::Discrete(2)]).unwrap()).unwrap();
        let v = m.reset(Bundle::single(s.sample(&mut RngStream::new(seed)))).unwrap();
        prop_assert!(out.obs[0].contains(v.get(0).unwrap()));
    }

    #[test]
    fn canonical_text_round_trips(s in spec(), seed in any::<u64>()) {
        let v = s.sample(&mut RngStream::new(seed));
        let text = canon::to_canonical_string(&v);
        let back = canon::from_str(&text).unwrap();
        prop_assert_eq!(&back, &v);
        prop_assert_eq!(canon::to_canonical_string(&back), text);
    }

    #[test]
    fn team_act_trans_inverts_packing(
        sizes in prop::collection::vec(1usize..4, 1..4),
        seed in any::<u64>(),
    ) {
        let n: usize = sizes.iter().sum();
        let p = SlotPartition::from_sizes(sizes).unwrap();
        let mut t = make_team(p.clone());
        let out = t.setup(&discrete_specs(n)).unwrap();
        let mut rng = RngStream::new(seed);
        let raw = Bundle::new((0..n).map(|_| SpaceSpec::Discrete(5).sample(&mut rng)).collect()).unwrap();
        let packed = Bundle::new(raw.split(&p).unwrap().into_iter().map(|g| Value::Seq(g.into_vec())).collect()).unwrap();
        packed.check(&out.act).unwrap();
        prop_assert_eq!(t.act_trans(packed).unwrap(), raw);
    }

    #[test]
    fn concat_act_trans_inverts_concatenation(
        lens in prop::collection::vec(0usize..4, 1..5),
        groups in 1usize..3,
        seed in any::<u64>(),
    ) {
        // len 0 stands for a discrete member with 4 actions
        let n = lens.len();
        let groups = groups.min(n);
        let mut sizes = vec![n / groups; groups];
        sizes[0] += n % groups;
        let p = SlotPartition::from_sizes(sizes).unwrap();
        let act: Vec<SpaceSpec> = lens.iter().map(|&l| if l == 0 { SpaceSpec::Discrete(4) } else { SpaceSpec::vector(l, -2.0, 2.0) }).collect();
        let obs = vec![SpaceSpec::vector(1, 0.0, 1.0); n];
        let mut c = concat_obs_act(p.clone());
        c.setup(&Specs::new(obs, act.clone()).unwrap()).unwrap();
        let mut rng = RngStream::new(seed);
        let members: Vec<Value> = act.iter().map(|s| s.sample(&mut rng)).collect();
        let grouped = Bundle::new(
            p.split_vec(&members).unwrap().into_iter().map(|g| Value::Vector(g.iter().flat_map(|v| match v {
                Value::Discrete(i) => vec![*i as f64],
                Value::Vector(xs) => xs.clone(),
                _ => unreachable!(),
            }).collect())).collect(),
        ).unwrap();
        prop_assert_eq!(c.act_trans(grouped).unwrap(), Bundle::new(members).unwrap());
    }
}

#[test]
fn identity_frames_pass_untouched() {
    let mut i = identity();
    i.setup(&discrete_specs(2)).unwrap();
    let f = Frame { obs: discretes(&[1, 2]), rewards: vec![0.5, -1.0], alive: vec![true, false] };
    assert_eq!(i.obs_trans(f.clone()).unwrap(), f);
}
