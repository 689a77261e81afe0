use marlkit_core::{
    Agent, Bundle, Env, Frame, Grid, Interface, RandomAgent, RngStream, SpaceSpec, Specs, Value, Winner,
};
use marlkit_envs::bomber::{
    act_mask, attr, board_map, corners, legal_actions, remap_action, rotate, rotate_pos, view_action, BoardView,
    BomberConfig, BomberEnv, BomberState, Cell, Mode, PowerUp, SimpleAgent, BOMB, DOWN, IDLE, LEFT, NUM_ACTIONS,
    RIGHT, UP,
};
use proptest::prelude::*;
use rand::Rng;

fn env(mode: Mode) -> BomberEnv {
    BomberEnv::new(BomberConfig { mode, ..Default::default() }).unwrap()
}

fn acts(xs: &[u64]) -> Bundle {
    Bundle::new(xs.iter().map(|&x| Value::Discrete(x)).collect()).unwrap()
}

fn specs(e: &BomberEnv) -> Specs {
    Specs::new(e.obs_specs().to_vec(), e.act_specs().to_vec()).unwrap()
}

/// Random or rule players per slot, chosen from the seed.
fn players(seed: u64, spec: &SpaceSpec) -> Vec<Box<dyn Agent>> {
    let mut pick = RngStream::new(seed).split("players");
    (0..4)
        .map(|k| {
            let mut a: Box<dyn Agent> = if pick.gen_bool(0.5) {
                Box::new(SimpleAgent::default())
            } else {
                Box::new(RandomAgent::new(RngStream::new(seed).split("random").split(&k.to_string())))
            };
            a.setup(spec, &SpaceSpec::Discrete(NUM_ACTIONS as u64)).unwrap();
            a
        })
        .collect()
}

/// States reached by mixed random/rule play, sampled at random depths.
fn reachable_states(count: usize, seed: u64) -> Vec<(BomberState, Mode)> {
    let mut rng = RngStream::new(seed);
    let mut out = Vec::new();
    let mut ep = 0u64;
    while out.len() < count {
        let mode = if ep % 2 == 0 { Mode::Ffa } else { Mode::TwoVsTwo };
        let mut e = env(mode);
        let mut obs = e.reset(seed * 1000 + ep).unwrap();
        let mut agents = players(seed * 1000 + ep, &e.obs_specs()[0]);
        let depth = rng.gen_range(0..120);
        for t in 0..depth {
            if t % 7 == 0 {
                out.push((e.state().clone(), mode));
            }
            let a: Vec<u64> = (0..4)
                .map(|k| agents[k].step(obs.get(k).unwrap(), 0.0, false).unwrap().as_discrete().unwrap())
                .collect();
            let r = e.step(acts(&a)).unwrap();
            obs = r.obs;
            if r.done {
                break;
            }
        }
        out.push((e.state().clone(), mode));
        ep += 1;
    }
    out.truncate(count);
    out
}

/// Legality by simulation: on a copy with the other agents gone, no
/// fuses about to fire and no flames, an action is legal exactly when it
/// is idle or leaves a different state from idling.
fn oracle_mask(st: &BomberState, mode: Mode, slot: usize) -> [bool; NUM_ACTIONS] {
    let mut base = st.clone();
    for (k, a) in base.agents.iter_mut().enumerate() {
        if k != slot {
            a.alive = false;
        }
    }
    for b in base.bombs.iter_mut() {
        b.fuse = 1000;
    }
    base.flames.iter_mut().for_each(|f| *f = 0);
    let outcome = |action: u64| {
        let mut e = env(mode);
        e.reset_to(base.clone()).unwrap();
        let mut a = [IDLE; 4];
        a[slot] = action;
        e.step(acts(&a)).unwrap();
        e.state_bytes()
    };
    let idle = outcome(IDLE);
    let mut out = [false; NUM_ACTIONS];
    for a in 0..NUM_ACTIONS as u64 {
        out[a as usize] = a == IDLE || outcome(a) != idle;
    }
    out
}

#[test]
fn mask_matches_simulation_on_reachable_states() {
    let states = reachable_states(1000, 3);
    let mut seen_masked_move = false;
    for (st, mode) in &states {
        for slot in 0..4 {
            let view = BoardView::from_state(st, slot, *mode, 800);
            let mask = legal_actions(&view, slot);
            assert_eq!(mask, oracle_mask(st, *mode, slot), "tick {} slot {slot}", st.tick);
            seen_masked_move |= st.agents[slot].alive && !mask[1..5].iter().all(|&m| m);
        }
    }
    assert!(seen_masked_move);
}

#[test]
fn mask_feature_reads_the_same_from_observations() {
    for (st, mode) in reachable_states(100, 9) {
        let mut e = env(mode);
        let obs = e.reset_to(st.clone()).unwrap();
        let mut itf = act_mask();
        itf.setup(&specs(&e)).unwrap();
        let out = itf.reset(obs).unwrap();
        for k in 0..4 {
            let expect: Vec<f64> = legal_actions(&BoardView::from_state(&st, k, mode, 800), k)
                .iter()
                .map(|&b| b as u8 as f64)
                .collect();
            assert_eq!(out.get(k).unwrap().get("action_mask").unwrap(), &Value::Vector(expect));
        }
    }
}

#[test]
fn corner_start_mask() {
    let mut e = env(Mode::Ffa);
    for seed in 0..10 {
        e.reset(seed).unwrap();
        for k in 0..4 {
            let m = legal_actions(&BoardView::from_state(e.state(), k, Mode::Ffa, 800), k);
            let legal: Vec<u64> = (0..6).filter(|&a| m[a as usize]).collect();
            let expect = match k {
                0 => vec![IDLE, DOWN, RIGHT, BOMB],
                1 => vec![IDLE, DOWN, LEFT, BOMB],
                2 => vec![IDLE, UP, LEFT, BOMB],
                _ => vec![IDLE, UP, RIGHT, BOMB],
            };
            assert_eq!(legal, expect, "slot {k}");
        }
    }
    let mut st = e.state().clone();
    st.agents[0].ammo = 0;
    assert!(!legal_actions(&BoardView::from_state(&st, 0, Mode::Ffa, 800), 0)[BOMB as usize]);
    st.agents[0].alive = false;
    assert_eq!(legal_actions(&BoardView::from_state(&st, 0, Mode::Ffa, 800), 0), [true, false, false, false, false, false]);
}

#[test]
fn remap_inverts_view_on_every_action() {
    for k in 0..4 {
        for a in 0..NUM_ACTIONS as u64 {
            assert_eq!(remap_action(view_action(a, k), k), a);
            assert_eq!(view_action(remap_action(a, k), k), a);
        }
        assert_eq!(view_action(IDLE, k), IDLE);
        assert_eq!(view_action(BOMB, k), BOMB);
    }
    assert_eq!(view_action(UP, 1), LEFT);
    assert_eq!(remap_action(UP, 1), RIGHT);
}

proptest! {
    #[test]
    fn four_quarter_turns_are_identity(h in 1usize..9, c in 1usize..4, seed in any::<u64>()) {
        let mut rng = RngStream::new(seed);
        let data: Vec<f64> = (0..h * h * c).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let g = Grid::new([h, h, c], data).unwrap();
        let back = g.rot90_ccw().rot90_ccw().rot90_ccw().rot90_ccw();
        prop_assert_eq!(&back, &g);
        prop_assert_ne!(g.rot90_ccw().data().len(), 0);
    }
}

#[test]
fn each_slot_sees_itself_top_left() {
    let mut e = env(Mode::TwoVsTwo);
    let obs = e.reset(4).unwrap();
    let mut itf = rotate();
    itf.setup(&specs(&e)).unwrap();
    let out = itf.reset(obs.clone()).unwrap();
    assert_eq!(out.get(0), obs.get(0));
    for k in 0..4 {
        let v = BoardView::from_obs(out.get(k).unwrap()).unwrap();
        assert_eq!(v.agents[k].pos, (0, 0));
        assert_eq!(rotate_pos(corners(11)[k], k, 11), (0, 0));
    }
}

/// Moving through the rotated view lands where the view says it should,
/// and the env only ever sees world actions that a direct player could
/// have sent.
#[test]
fn rotated_play_matches_raw_play() {
    let mut rng = RngStream::new(77);
    for seed in 0..10 {
        let mut raw = env(Mode::Ffa);
        let mut viewed = env(Mode::Ffa);
        raw.reset(seed).unwrap();
        let mut itf = rotate();
        itf.setup(&specs(&viewed)).unwrap();
        let mut frame_obs = itf.reset(viewed.reset(seed).unwrap()).unwrap();
        for _ in 0..100 {
            let view_acts: Vec<u64> = (0..4).map(|_| rng.gen_range(0..NUM_ACTIONS as u64)).collect();
            let world = itf.act_trans(acts(&view_acts)).unwrap();
            let expect: Vec<u64> = (0..4).map(|k| remap_action(view_acts[k], k)).collect();
            assert_eq!(world, acts(&expect));
            let before: Vec<_> = (0..4).map(|k| BoardView::from_obs(frame_obs.get(k).unwrap()).unwrap()).collect();
            let a = raw.step(acts(&expect)).unwrap();
            let b = viewed.step(world).unwrap();
            assert_eq!(raw.state_bytes(), viewed.state_bytes());
            assert_eq!(a.rewards, b.rewards);
            let done = b.done;
            frame_obs = itf.obs_trans(b.frame()).unwrap().obs;
            for k in 0..4 {
                let after = BoardView::from_obs(frame_obs.get(k).unwrap()).unwrap();
                let (p0, p1) = (before[k].agents[k].pos, after.agents[k].pos);
                if p0 != p1 {
                    let step = match view_acts[k] {
                        UP => (-1, 0),
                        DOWN => (1, 0),
                        LEFT => (0, -1),
                        RIGHT => (0, 1),
                        other => panic!("moved on action {other}"),
                    };
                    assert_eq!((p0.0 + step.0, p0.1 + step.1), p1);
                }
            }
            if done {
                break;
            }
        }
    }
}

#[test]
fn mask_commutes_with_rotation() {
    for (st, mode) in reachable_states(50, 5) {
        let mut e = env(mode);
        let obs = e.reset_to(st).unwrap();
        let s = specs(&e);
        let mut a = marlkit_core::stack(rotate(), act_mask());
        let mut b = marlkit_core::stack(act_mask(), rotate());
        a.setup(&s).unwrap();
        b.setup(&s).unwrap();
        assert_eq!(a.reset(obs.clone()).unwrap(), b.reset(obs).unwrap());
    }
}

fn count(st: &BomberState, f: impl Fn(usize) -> bool) -> f64 {
    (0..st.cells.len()).filter(|&i| f(i)).count() as f64
}

#[test]
fn board_map_recounts() {
    for (st, mode) in reachable_states(100, 11) {
        let mut e = env(mode);
        let obs = e.reset_to(st.clone()).unwrap();
        let mut itf = board_map();
        itf.setup(&specs(&e)).unwrap();
        let out = itf.reset(obs).unwrap();
        for k in 0..4 {
            let g = out.get(k).unwrap().get("board_map").unwrap().as_grid().unwrap();
            assert_eq!(g.shape(), [11, 11, 8]);
            assert_eq!(g.channel_sum(0), count(&st, |i| st.cells[i] == Cell::Rigid));
            assert_eq!(g.channel_sum(1), count(&st, |i| st.cells[i] == Cell::Wood));
            assert_eq!(g.channel_sum(2), st.bombs.len() as f64);
            assert_eq!(g.channel_sum(3), count(&st, |i| st.flames[i] > 0));
            assert_eq!(g.channel_sum(4), count(&st, |i| st.powerups[i].is_some()));
            let alive = |j: usize| st.agents[j].alive;
            let mates = (0..4).filter(|&j| j != k && alive(j) && mode == Mode::TwoVsTwo && j % 2 == k % 2).count();
            let foes = (0..4).filter(|&j| j != k && alive(j)).count() - mates;
            assert_eq!(g.channel_sum(5), alive(k) as u8 as f64);
            assert_eq!(g.channel_sum(6), mates as f64);
            assert_eq!(g.channel_sum(7), foes as f64);
        }
    }
}

#[test]
fn attr_tracks_the_episode() {
    let mut e = env(Mode::Ffa);
    let mut itf = marlkit_core::stack(attr(), board_map());
    itf.setup(&specs(&e)).unwrap();
    let obs = itf.reset(e.reset(2).unwrap()).unwrap();
    for k in 0..4 {
        assert_eq!(obs.get(k).unwrap().get("attr").unwrap(), &Value::Vector(vec![0.1, 0.2, 1.0, 0.0]));
    }
    let mut agents = players(2, &e.obs_specs()[0]);
    let mut raw = e.reset(2).unwrap();
    itf.reset(raw.clone()).unwrap();
    let mut last_tick = 0.0;
    let mut rigid = None;
    loop {
        let a: Vec<u64> = (0..4)
            .map(|k| agents[k].step(raw.get(k).unwrap(), 0.0, false).unwrap().as_discrete().unwrap())
            .collect();
        let r = e.step(acts(&a)).unwrap();
        raw = r.obs.clone();
        let out = itf.obs_trans(r.frame()).unwrap().obs;
        for k in 0..4 {
            let o = out.get(k).unwrap();
            let at = o.get("attr").unwrap().as_vector().unwrap();
            assert_eq!(at[2], r.alive[k] as u8 as f64);
            if k == 0 {
                assert!(at[3] > last_tick);
                last_tick = at[3];
            }
            let ch0: Vec<f64> = o.get("board_map").unwrap().as_grid().unwrap().data().iter().step_by(8).copied().collect();
            assert_eq!(rigid.get_or_insert_with(|| ch0.clone()), &ch0);
        }
        if r.done {
            break;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn episode_invariants(seed in 0u64..10_000, ffa in any::<bool>()) {
        let mode = if ffa { Mode::Ffa } else { Mode::TwoVsTwo };
        let mut e = env(mode);
        let mut obs = e.reset(seed).unwrap();
        let mut agents = players(seed, &e.obs_specs()[0]);
        let rigid: Vec<bool> = e.state().cells.iter().map(|&c| c == Cell::Rigid).collect();
        loop {
            let before = e.state().clone();
            let a: Vec<u64> = (0..4)
                .map(|k| agents[k].step(obs.get(k).unwrap(), 0.0, false).unwrap().as_discrete().unwrap())
                .collect();
            let r = e.step(acts(&a)).unwrap();
            obs = r.obs.clone();
            let st = e.state();
            prop_assert!(st.tick <= 800);
            let now_rigid: Vec<bool> = st.cells.iter().map(|&c| c == Cell::Rigid).collect();
            prop_assert_eq!(&now_rigid, &rigid);
            let wood = |s: &BomberState| s.cells.iter().filter(|&&c| c == Cell::Wood).count();
            prop_assert!(wood(st) <= wood(&before));
            for k in 0..4 {
                let gained = e
                    .last_tick()
                    .pickups
                    .iter()
                    .filter(|&&(s, p)| s == k && p == PowerUp::Ammo && before.capacity(k) < 10)
                    .count() as u32;
                prop_assert_eq!(st.capacity(k), before.capacity(k) + gained);
                prop_assert!(!st.agents[k].alive || st.agents.iter().enumerate().all(|(j, o)| j == k || !o.alive || o.pos != st.agents[k].pos));
            }
            for (o, s) in obs.iter().zip(e.obs_specs()) {
                prop_assert!(s.contains(o));
            }
            if r.done {
                let w = Winner::from_info(&r.info).unwrap();
                let sum: f64 = r.rewards.iter().sum();
                if mode == Mode::TwoVsTwo {
                    prop_assert_eq!(sum, 0.0);
                }
                if let Winner::Team(t) = w {
                    for (k, &rw) in r.rewards.iter().enumerate() {
                        prop_assert_eq!(rw, if mode.team_of(k) == t { 1.0 } else { -1.0 });
                    }
                }
                break;
            }
            prop_assert!(r.rewards.iter().all(|&x| x == 0.0));
        }
    }
}

#[test]
fn step_limit_draw_pays_survivors_nothing() {
    let mut e = BomberEnv::new(BomberConfig { step_limit: 5, ..Default::default() }).unwrap();
    e.reset(1).unwrap();
    let mut st = e.state().clone();
    st.agents[3].alive = false;
    e.reset_to(st).unwrap();
    let mut last = None;
    for _ in 0..5 {
        last = Some(e.step(acts(&[IDLE; 4])).unwrap());
    }
    let r = last.unwrap();
    assert!(r.done);
    assert_eq!(Winner::from_info(&r.info), Some(Winner::Draw));
    assert_eq!(r.rewards, vec![0.0, 0.0, 0.0, -1.0]);
}

#[test]
fn same_seed_same_board() {
    let mut a = env(Mode::Ffa);
    let mut b = env(Mode::Ffa);
    assert_eq!(a.reset(42).unwrap(), b.reset(42).unwrap());
    assert_eq!(a.state_bytes(), b.state_bytes());
    let differs = (0..20).any(|s| {
        b.reset(s).unwrap();
        a.state_bytes() != b.state_bytes()
    });
    assert!(differs);
}

#[test]
fn simple_agent_steps_off_a_lit_fuse() {
    let mut e = env(Mode::Ffa);
    e.reset(0).unwrap();
    let mut st = e.state().clone();
    st.agents[0].ammo = 0;
    st.bombs.push(marlkit_envs::bomber::Bomb { pos: (0, 0), owner: 0, fuse: 1, blast: 1 });
    let a = SimpleAgent::default().decide(&BoardView::from_state(&st, 0, Mode::Ffa, 800));
    assert!(a == DOWN || a == RIGHT);

    // with time to spare it walks clear of the blast
    st.bombs[0].fuse = 3;
    let mut e = env(Mode::Ffa);
    e.reset_to(st).unwrap();
    for _ in 0..4 {
        let a = SimpleAgent::default().decide(&BoardView::from_state(e.state(), 0, Mode::Ffa, 800));
        let r = e.step(acts(&[a, IDLE, IDLE, IDLE])).unwrap();
        assert!(r.alive[0]);
    }
    assert!(e.last_tick().exploded.len() == 1 || e.state().bombs.is_empty());
}

#[test]
fn simple_agent_never_bombs_without_an_exit() {
    let mut e = env(Mode::Ffa);
    e.reset(0).unwrap();
    let mut st = e.state().clone();
    // boxed in by wood on both open sides
    let n = st.size;
    st.cells[1] = Cell::Wood;
    st.cells[n] = Cell::Wood;
    let v = BoardView::from_state(&st, 0, Mode::Ffa, 800);
    assert_eq!(SimpleAgent::default().decide(&v), IDLE);
}

#[test]
fn render_marks_agents_and_rigid_cells() {
    let mut e = env(Mode::Ffa);
    e.reset(0).unwrap();
    let text = e.render();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 11);
    assert!(rows[0].starts_with('0') && rows[0].ends_with('1'));
    assert!(rows[10].starts_with('3') && rows[10].ends_with('2'));
    assert_eq!(rows[1].as_bytes()[1], b'#');
}

#[test]
fn interfaces_reject_foreign_observations() {
    let s = Specs::new(vec![SpaceSpec::Discrete(3)], vec![SpaceSpec::Discrete(6)]).unwrap();
    for mut itf in [board_map(), attr(), act_mask(), rotate()] {
        assert!(itf.setup(&s).is_err());
    }
    let e = env(Mode::Ffa);
    let mut r = rotate();
    r.setup(&specs(&e)).unwrap();
    assert!(r.act_trans(acts(&[0; 4])).is_err());
    let _ = Frame::initial(acts(&[0; 4]));
}
