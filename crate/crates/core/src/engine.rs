//! The FSYNC scheduler: look, compute and move for every robot from one snapshot,
//! then a single commit of positions, merges, runs and lights.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{
    build_chain, local_view_in, run_headings, ChainConfiguration, ChainError, Frame, InitKind, LocalView,
    MergeDirective, RobotId, RunToken, Side, BLOCK_ROUNDS, INIT_PERIOD, NEIGHBORHOOD_RADIUS, VIEW_RADIUS,
};
use crate::geometry::Point2;
use crate::moves::{
    bisector_op_target, endgame_target, isolated_run_decision, joint_pair_decision, star_op_target, start_joint,
    start_single, LightEffect, MoveAction, MoveKind,
};
use crate::patterns::{detect_init, locally_isogonal, IsogonalVerdict, PatternFamily};
use crate::tolerance::Tolerances;
use crate::verify;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FrameMode {
    /// Every robot sees global coordinates shifted to itself.
    Identity,
    /// Per-robot, per-round rotation and chirality derived from this seed.
    Seeded(u64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub tol: Tolerances,
    pub frames: FrameMode,
    pub check_invariants: bool,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            tol: Tolerances::default(),
            frames: FrameMode::Seeded(0),
            check_invariants: cfg!(test),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationState {
    pub config: ChainConfiguration,
    pub tokens: Vec<RunToken>,
    pub settings: Settings,
    pub rng_seed: u64,
    pub next_token_id: u64,
    pub n_initial: usize,
}

/// Where a newly lit init came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mint {
    Pattern(PatternFamily),
    /// Combination rule: moved symmetrically last round, view no longer isogonal.
    Exceptional,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Decision {
    pub action: MoveAction,
    pub mint: Option<Mint>,
}

/// Why a shorten-type event happened.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cause {
    Run,
    Init,
    Symmetric,
    Endgame,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub robot: RobotId,
    pub op: MoveKind,
    pub pre_vec_lens: Vec<f64>,
    pub cause: Cause,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub merges: u64,
    pub shortens_large: u64,
    pub shortens_small: u64,
    pub joint_shortens: u64,
    pub hops: u64,
    pub joint_hops: u64,
    pub pass_only: u64,
    pub bisector_ops: u64,
    pub star_ops: u64,
    pub endgame_moves: u64,
    pub runs_started: u64,
    pub runs_stopped: u64,
    pub inits_minted: u64,
    pub inits_exceptional: u64,
}

impl Counters {
    pub fn add(&mut self, o: &Counters) {
        self.merges += o.merges;
        self.shortens_large += o.shortens_large;
        self.shortens_small += o.shortens_small;
        self.joint_shortens += o.joint_shortens;
        self.hops += o.hops;
        self.joint_hops += o.joint_hops;
        self.pass_only += o.pass_only;
        self.bisector_ops += o.bisector_ops;
        self.star_ops += o.star_ops;
        self.endgame_moves += o.endgame_moves;
        self.runs_started += o.runs_started;
        self.runs_stopped += o.runs_stopped;
        self.inits_minted += o.inits_minted;
        self.inits_exceptional += o.inits_exceptional;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundTrace {
    pub round: u64,
    pub n_before: usize,
    pub n_after: usize,
    pub chain_length_before: f64,
    pub chain_length_after: f64,
    pub events: Vec<Event>,
    pub counters: Counters,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Gathered { rounds: u64 },
    Timeout { rounds: u64 },
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum EngineError {
    #[error("configuration is already gathered")]
    AlreadyGathered,
    #[error("invariant {name} violated in round {round}: {detail}")]
    InvariantViolation {
        name: &'static str,
        round: u64,
        detail: String,
    },
    #[error(transparent)]
    Chain(#[from] ChainError),
}

/// Decision of one robot from its view alone.
pub fn decide(view: &LocalView, tol: &Tolerances) -> Decision {
    let me = *view.light(0);
    if view.wraps_small {
        let mut effects = Vec::new();
        if me.run_here {
            effects.push(LightEffect::StopRun);
        }
        return Decision {
            action: MoveAction {
                kind: MoveKind::Endgame,
                targets: vec![(0, endgame_target(view, tol))],
                effects,
            },
            mint: None,
        };
    }

    let iso = locally_isogonal(view, tol);
    let mint = if me.init.is_set() {
        None
    } else if me.symmetric_moved && iso == IsogonalVerdict::NotIsogonal {
        Some(Mint::Exceptional)
    } else {
        detect_init(view, tol).map(|v| Mint::Pattern(v.family))
    };

    let action = if let Some(side) = me.run_toward {
        run_decision(view, side.step(), tol)
    } else if let Some(a) = start_decision(view, tol) {
        a
    } else if !me.init.is_set() && !view.run_in_neighborhood() && !view.init_in_neighborhood() {
        symmetric_decision(view, iso, tol)
    } else {
        MoveAction::idle()
    };
    Decision { action, mint }
}

fn run_decision(view: &LocalView, h: isize, tol: &Tolerances) -> MoveAction {
    let ahead = view.light(h);
    let behind = view.light(-h);
    let facing = ahead.run_here && ahead.run_toward.map(Side::step) == Some(-h);
    let halt = MoveAction {
        kind: MoveKind::Idle,
        targets: Vec::new(),
        effects: vec![LightEffect::StopRun],
    };
    if facing {
        if behind.run_here || view.light(2 * h).run_here {
            return halt;
        }
        joint_pair_decision(view, h, tol)
    } else if ahead.run_here || behind.run_here {
        halt
    } else {
        // Another isolated run two robots ahead is heading into the same robot.
        let rival = view.light(2 * h);
        let converging = rival.run_here && rival.run_toward.map(Side::step) == Some(-h) && !view.light(3 * h).run_here;
        if converging && contest(view, 2 * h, tol) != Ordering::Less {
            return halt;
        }
        isolated_run_decision(view, h, tol)
    }
}

/// Deterministic precedence between the viewer and the robot at `k`, computed
/// identically from both sides: the smaller vertex angle wins, then the longer
/// pair of flanking edges. `Less` means the viewer wins.
fn contest(view: &LocalView, k: isize, tol: &Tolerances) -> Ordering {
    let key = |o: isize| (view.angle(o, tol).size, view.vec_len(o) + view.vec_len(o + 1));
    let (a, b) = (key(0), key(k));
    if (a.0 - b.0).abs() > tol.ang {
        return a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal);
    }
    if (a.1 - b.1).abs() > tol.len {
        return b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal);
    }
    Ordering::Equal
}

/// Two adjacent lone inits that cannot tell each other apart start together as a
/// pair, provided neither has another lone init starting on its far side.
fn tied_pair(view: &LocalView, k: isize) -> bool {
    let lone = |o: isize| fires(view.light(o)) && view.light(o).init.partner().is_none();
    !lone(-k) && !lone(2 * k) && !view.light(4 * k).run_here
}

fn fires(l: &crate::chain::RobotLights) -> bool {
    l.init.is_set() && l.init_phase == 0 && l.blocked_remaining == 0
}

fn start_decision(view: &LocalView, tol: &Tolerances) -> Option<MoveAction> {
    let me = view.light(0);
    if !me.init.is_set() || me.init_phase != 0 || me.blocked_remaining > 0 {
        return None;
    }
    if view.run_in_neighborhood() {
        return None;
    }
    match me.init.partner() {
        None => {
            // Neighbouring inits starting together: adjacent ones would move side by
            // side, ones two apart would drop new runs on the same robot.
            let spawns = |k: isize| view.pos(k - 1).distance(view.pos(k + 1)) > 1.0 + tol.len;
            for k in [-1, 1] {
                let other = view.light(k);
                let lone = fires(other) && other.init.partner().is_none();
                if lone && contest(view, k, tol) == Ordering::Equal && tied_pair(view, k) {
                    return Some(start_joint(view, k, tol));
                }
            }
            for k in [-2, -1, 1, 2] {
                let other = view.light(k);
                if !fires(other) || other.init.partner().is_some() {
                    continue;
                }
                let yields = if k.abs() == 1 {
                    contest(view, k, tol) != Ordering::Less
                } else {
                    spawns(0) && spawns(k) && contest(view, k, tol) == Ordering::Greater
                };
                if yields {
                    return None;
                }
            }
            Some(start_single(view, tol))
        }
        Some(side) => {
            let p = side.step();
            let partner = view.light(p);
            let consistent = partner.init.partner().map(Side::step) == Some(-p);
            let outer_run = view.light(p * VIEW_RADIUS as isize).run_here;
            if !consistent || partner.blocked_remaining > 0 || partner.init_phase != 0 || outer_run {
                return None;
            }
            if [-p, 2 * p].into_iter().any(|k| fires(view.light(k))) {
                return None;
            }
            Some(start_joint(view, p, tol))
        }
    }
}

fn symmetric_decision(view: &LocalView, iso: IsogonalVerdict, tol: &Tolerances) -> MoveAction {
    let (prev, me, next) = (view.pos(-1), view.pos(0), view.pos(1));
    let (kind, target) = match iso {
        IsogonalVerdict::NotIsogonal => return MoveAction::idle(),
        IsogonalVerdict::EqualLengths => (MoveKind::BisectorOp, bisector_op_target(prev, me, next, tol)),
        IsogonalVerdict::AlternatingLengths => (MoveKind::StarOp, star_op_target(prev, me, next, tol)),
    };
    match target {
        Ok(t) => MoveAction {
            kind,
            targets: vec![(0, t)],
            effects: vec![LightEffect::SetSymmetricMoved],
        },
        Err(_) => MoveAction::idle(),
    }
}

/// Per-robot decisions for one round, with targets mapped back to global coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundPlan {
    pub decisions: Vec<Decision>,
    pub targets: Vec<Point2>,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SimulationState {
    pub fn new(positions: &[Point2], settings: Settings, rng_seed: u64) -> Result<Self, EngineError> {
        let config = build_chain(positions, &settings.tol)?;
        Ok(SimulationState {
            n_initial: config.n(),
            config,
            tokens: Vec::new(),
            settings,
            rng_seed,
            next_token_id: 0,
        })
    }

    pub fn is_gathered(&self) -> bool {
        self.config.is_gathered(&self.settings.tol)
    }

    /// Frame seed of robot `id` in the current round.
    pub fn frame_seed(&self, id: RobotId) -> Option<u64> {
        match self.settings.frames {
            FrameMode::Identity => None,
            FrameMode::Seeded(base) => Some(splitmix(
                base ^ splitmix(self.config.round ^ splitmix(id.0 as u64 ^ self.rng_seed)),
            )),
        }
    }

    /// Computes every robot's decision under the given frame seeds (`None` = identity).
    pub fn plan_with_frames(&self, seeds: &[Option<u64>]) -> RoundPlan {
        let cfg = &self.config;
        let tol = &self.settings.tol;
        let heads = run_headings(cfg, &self.tokens);
        let mut decisions = Vec::with_capacity(cfg.n());
        let mut targets = Vec::with_capacity(cfg.n());
        for (i, robot) in cfg.robots.iter().enumerate() {
            let frame = match seeds[i] {
                Some(s) => Frame::from_seed(s, robot.pos),
                None => Frame::identity(robot.pos),
            };
            let view = local_view_in(cfg, &heads, i, &frame);
            let d = decide(&view, tol);
            targets.push(d.action.own_target().map_or(robot.pos, |q| frame.to_global(q)));
            decisions.push(d);
        }
        RoundPlan { decisions, targets }
    }

    pub fn plan(&self) -> RoundPlan {
        let seeds: Vec<Option<u64>> = self.config.robots.iter().map(|r| self.frame_seed(r.id)).collect();
        self.plan_with_frames(&seeds)
    }

    /// One synchronous round.
    pub fn step(&mut self) -> Result<RoundTrace, EngineError> {
        if self.is_gathered() {
            return Err(EngineError::AlreadyGathered);
        }
        let plan = self.plan();
        let trace = self.commit(plan)?;
        if self.settings.check_invariants {
            self.check_invariants()?;
        }
        Ok(trace)
    }

    pub fn check_invariants(&self) -> Result<(), EngineError> {
        let round = self.config.round;
        let fail = |name: &'static str, detail: String| EngineError::InvariantViolation { name, round, detail };
        verify::check_connectivity(&self.config, &self.settings.tol)
            .map_err(|v| fail("connectivity", v.to_string()))?;
        verify::check_run_validity(&self.config, &self.tokens).map_err(|v| fail("run_validity", v.to_string()))?;
        verify::check_init_spacing(&self.config).map_err(|v| fail("init_spacing", v.to_string()))?;
        verify::check_no_revisit(&self.tokens, self.config.n()).map_err(|v| fail("no_revisit", v.to_string()))?;
        Ok(())
    }

    pub fn run_until(&mut self, max_rounds: u64) -> Result<Outcome, EngineError> {
        self.run_until_with(max_rounds, |_, _| Ok(()))
    }

    /// Steps until gathered or `max_rounds` rounds have run, calling `observe`
    /// after every round.
    pub fn run_until_with<F>(&mut self, max_rounds: u64, mut observe: F) -> Result<Outcome, EngineError>
    where
        F: FnMut(&SimulationState, &RoundTrace) -> Result<(), EngineError>,
    {
        let start = self.config.round;
        loop {
            if self.is_gathered() {
                return Ok(Outcome::Gathered {
                    rounds: self.config.round - start,
                });
            }
            if self.config.round - start >= max_rounds {
                return Ok(Outcome::Timeout {
                    rounds: self.config.round - start,
                });
            }
            let trace = self.step()?;
            observe(self, &trace)?;
        }
    }

    fn commit(&mut self, plan: RoundPlan) -> Result<RoundTrace, EngineError> {
        let old = &self.config;
        let n = old.n();
        let tol = self.settings.tol;
        let wrap = |i: isize| i.rem_euclid(n as isize) as usize;
        let RoundPlan { decisions, targets } = plan;
        let length_before = old.chain_length();
        let mut counters = Counters::default();

        // Merges and the neighbourhoods they silence.
        let mut merges = Vec::new();
        let mut merging = vec![false; n];
        let mut silenced = vec![false; n];
        for (i, d) in decisions.iter().enumerate() {
            for e in &d.action.effects {
                if let LightEffect::MergeInto { onto, joint } = *e {
                    let j = wrap(i as isize + onto);
                    merges.push(MergeDirective {
                        from: i,
                        onto: j,
                        joint,
                    });
                    merging[i] = true;
                    if joint {
                        merging[j] = true;
                    }
                    for c in [i, j] {
                        for k in -NEIGHBORHOOD_RADIUS..=NEIGHBORHOOD_RADIUS {
                            silenced[wrap(c as isize + k)] = true;
                        }
                    }
                }
            }
        }

        // Events.
        let mut events = Vec::new();
        for (i, d) in decisions.iter().enumerate() {
            if let Some(ev) = self.event_for(i, d, &targets) {
                tally(&mut counters, &ev);
                events.push(ev);
            }
        }

        // Runs: pass, stop, spawn; then silence and collisions.
        let index_of: BTreeMap<RobotId, usize> = old.robots.iter().enumerate().map(|(k, r)| (r.id, k)).collect();
        struct Moving {
            token: RunToken,
            from: Option<usize>,
            to: usize,
        }
        let mut moving: Vec<Moving> = Vec::new();
        for t in &self.tokens {
            let Some(&i) = index_of.get(&t.holder) else {
                counters.runs_stopped += 1;
                continue;
            };
            let effects = &decisions[i].action.effects;
            if effects
                .iter()
                .any(|e| matches!(e, LightEffect::StopRun | LightEffect::MergeInto { .. }))
            {
                counters.runs_stopped += 1;
                continue;
            }
            let pass = effects.iter().find_map(|e| match *e {
                LightEffect::PassRun { to, heading } => Some((to, heading)),
                _ => None,
            });
            let mut token = t.clone();
            let to = match pass {
                Some((to, heading)) => {
                    token.heading = Side::from_step(heading);
                    wrap(i as isize + to)
                }
                None => i,
            };
            moving.push(Moving {
                token,
                from: Some(i),
                to,
            });
        }
        for (i, d) in decisions.iter().enumerate() {
            for e in &d.action.effects {
                if let LightEffect::SpawnRun { at, heading } = *e {
                    let to = wrap(i as isize + at);
                    let id = self.next_token_id;
                    self.next_token_id += 1;
                    counters.runs_started += 1;
                    moving.push(Moving {
                        token: RunToken {
                            token_id: id,
                            holder: old.robots[to].id,
                            heading: Side::from_step(heading),
                            origin: old.robots[i].id,
                            visited: Vec::new(),
                            run_vector: old.robots[to].pos - targets[i],
                            born_round: old.round + 1,
                        },
                        from: None,
                        to,
                    });
                }
            }
        }
        let mut arrivals = vec![0usize; n];
        for m in &moving {
            arrivals[m.to] += 1;
        }
        let mut kept = Vec::new();
        for m in moving {
            let stop = arrivals[m.to] > 1 || silenced[m.to] || m.from.is_some_and(|f| silenced[f]);
            if stop {
                counters.runs_stopped += 1;
            } else {
                kept.push(m);
            }
        }

        // Positions and merges.
        let (mut next, new_index) = old.apply_round_unchecked(&targets, &merges)?;
        let survives: Vec<bool> = (0..n)
            .map(|i| next.robots[new_index[i]].id == old.robots[i].id)
            .collect();
        let survivor_of = |i: usize| survives[i];

        // Lights: tick, then mints, merges and blocks.
        for r in next.robots.iter_mut() {
            let l = &mut r.lights;
            if l.init.is_set() {
                l.init_phase = (l.init_phase + 1) % INIT_PERIOD;
            }
            l.blocked_remaining = l.blocked_remaining.saturating_sub(1);
            l.symmetric_moved = false;
        }
        for (i, d) in decisions.iter().enumerate() {
            if survivor_of(i) && d.action.effects.contains(&LightEffect::SetSymmetricMoved) {
                next.robots[new_index[i]].lights.symmetric_moved = true;
            }
        }
        let mut minted: Vec<Option<Mint>> = vec![None; n];
        for (i, d) in decisions.iter().enumerate() {
            if let Some(m) = d.mint {
                if survivor_of(i) && !merging[i] {
                    let r = &mut next.robots[new_index[i]];
                    r.lights.init = InitKind::Single;
                    r.lights.init_phase = 0;
                    r.exceptional_init = m == Mint::Exceptional;
                    minted[i] = Some(m);
                    counters.inits_minted += 1;
                    if m == Mint::Exceptional {
                        counters.inits_exceptional += 1;
                    }
                }
            }
        }
        // Same-family neighbours minted together form a joint init.
        let nn = next.n();
        let mut paired = vec![false; nn];
        for i in 0..n {
            let j = wrap(i as isize + 1);
            if let (Some(Mint::Pattern(a)), Some(Mint::Pattern(b))) = (minted[i], minted[j]) {
                let (x, y) = (new_index[i], new_index[j]);
                if a == b && x != y && (x + 1) % nn == y && !paired[x] && !paired[y] {
                    next.robots[x].lights.init = InitKind::JointWithSuccessor;
                    next.robots[y].lights.init = InitKind::JointWithPredecessor;
                    paired[x] = true;
                    paired[y] = true;
                }
            }
        }
        // An exceptional init next to a lone init pairs with it.
        for i in 0..n {
            if minted[i] != Some(Mint::Exceptional) {
                continue;
            }
            let x = new_index[i];
            if next.robots[x].lights.init != InitKind::Single {
                continue;
            }
            for side in [Side::Successor, Side::Predecessor] {
                let y = (x as isize + side.step()).rem_euclid(nn as isize) as usize;
                if y != x && next.robots[y].lights.init == InitKind::Single {
                    next.robots[x].lights.init = InitKind::joint_with(side);
                    next.robots[y].lights.init = InitKind::joint_with(side.opposite());
                    next.robots[y].lights.init_phase = 0;
                    break;
                }
            }
        }
        // Init hand-over on merges.
        for m in &merges {
            let from = &old.robots[m.from];
            let s = new_index[m.onto];
            if m.joint {
                for k in [m.from, m.onto] {
                    if old.robots[k].lights.init.is_set() {
                        next.robots[s].lights.init = InitKind::None;
                        next.robots[s].exceptional_init = false;
                    }
                }
                continue;
            }
            if !from.lights.init.is_set() {
                continue;
            }
            let h = if wrap(m.from as isize + 1) == m.onto { 1 } else { -1 };
            let r2 = wrap(m.from as isize + 2 * h);
            let r3 = wrap(m.from as isize + 3 * h);
            let pass = !old.robots[r2].lights.init.is_set() && !merging[r2] && old.robots[r3].lights.init.is_set();
            if pass && !next.robots[s].lights.init.is_set() {
                let r = &mut next.robots[s];
                r.lights.init = InitKind::Single;
                r.lights.init_phase = from.lights.init_phase;
                r.exceptional_init = from.exceptional_init;
            }
        }
        for i in 0..n {
            if silenced[i] {
                next.robots[new_index[i]].lights.blocked_remaining = BLOCK_ROUNDS;
            }
        }
        // A merge that closes up three neighbouring inits costs the survivor its init.
        for m in &merges {
            let s = new_index[m.onto];
            let minted = |k: isize| {
                let r = &next.robots[(s as isize + k).rem_euclid(nn as isize) as usize];
                r.lights.init.is_set() && !r.exceptional_init
            };
            if nn >= 3
                && minted(0)
                && ((minted(-1) && minted(1)) || (minted(1) && minted(2)) || (minted(-1) && minted(-2)))
            {
                next.robots[s].lights.init = InitKind::None;
            }
        }
        normalize_joint_inits(&mut next);

        // Tokens onto the new ring.
        let mut tokens = Vec::with_capacity(kept.len());
        for m in kept {
            let mut t = m.token;
            let holder = next.robots[new_index[m.to]].id;
            if m.from.is_none() || Some(holder) != t.visited.last().copied() {
                t.visited.push(holder);
            }
            t.holder = holder;
            tokens.push(t);
        }
        let heads: BTreeMap<RobotId, Side> = tokens.iter().map(|t| (t.holder, t.heading)).collect();
        for r in next.robots.iter_mut() {
            r.lights.run_here = heads.contains_key(&r.id);
            r.lights.run_toward = heads.get(&r.id).copied();
        }

        let trace = RoundTrace {
            round: old.round,
            n_before: n,
            n_after: next.n(),
            chain_length_before: length_before,
            chain_length_after: next.chain_length(),
            events,
            counters,
            seed: self.rng_seed,
        };
        let _ = tol;
        self.config = next;
        self.tokens = tokens;
        Ok(trace)
    }

    fn event_for(&self, i: usize, d: &Decision, targets: &[Point2]) -> Option<Event> {
        let a = &d.action;
        let cfg = &self.config;
        let ii = i as isize;
        let len = |k: isize| cfg.pos(ii + k).distance(cfg.pos(ii + k - 1));
        let chord = |x: isize, y: isize| cfg.pos(ii + x).distance(cfg.pos(ii + y));
        let spawns = a.effects.iter().any(|e| matches!(e, LightEffect::SpawnRun { .. }));
        let start_merge = a.kind == MoveKind::Merge && !cfg.robots[i].lights.run_here
            || a.kind == MoveKind::JointMerge && !cfg.robots[i].lights.run_here;
        let cause = if spawns || start_merge { Cause::Init } else { Cause::Run };
        let joint_lead = a.targets.iter().any(|(k, _)| *k == 1);
        let pre = match a.kind {
            MoveKind::Idle => return None,
            MoveKind::Shorten | MoveKind::Merge | MoveKind::Hop => {
                a.own_target()?;
                vec![len(0), len(1), chord(-1, 1)]
            }
            MoveKind::PassOnly => Vec::new(),
            MoveKind::JointShorten | MoveKind::JointHop | MoveKind::JointMerge => {
                if !joint_lead {
                    return None;
                }
                vec![len(0), len(1), len(2), chord(-1, 2)]
            }
            MoveKind::BisectorOp | MoveKind::StarOp | MoveKind::Endgame => {
                vec![len(0), len(1), cfg.robots[i].pos.distance(targets[i])]
            }
        };
        let cause = match a.kind {
            MoveKind::BisectorOp | MoveKind::StarOp => Cause::Symmetric,
            MoveKind::Endgame => Cause::Endgame,
            _ => cause,
        };
        Some(Event {
            robot: cfg.robots[i].id,
            op: a.kind,
            pre_vec_lens: pre,
            cause,
        })
    }
}

fn tally(c: &mut Counters, ev: &Event) {
    match ev.op {
        MoveKind::Merge | MoveKind::JointMerge => c.merges += 1,
        MoveKind::Shorten => {
            if ev.pre_vec_lens[0] >= 0.5 && ev.pre_vec_lens[1] >= 0.5 {
                c.shortens_large += 1
            } else {
                c.shortens_small += 1
            }
        }
        MoveKind::JointShorten => c.joint_shortens += 1,
        MoveKind::Hop => c.hops += 1,
        MoveKind::JointHop => c.joint_hops += 1,
        MoveKind::PassOnly => c.pass_only += 1,
        MoveKind::BisectorOp => c.bisector_ops += 1,
        MoveKind::StarOp => c.star_ops += 1,
        MoveKind::Endgame => c.endgame_moves += 1,
        MoveKind::Idle => {}
    }
}

/// Drops joint flags whose partner no longer points back.
fn normalize_joint_inits(cfg: &mut ChainConfiguration) {
    let n = cfg.n();
    let inits: Vec<InitKind> = cfg.robots.iter().map(|r| r.lights.init).collect();
    let mut seen = BTreeSet::new();
    for i in 0..n {
        if let Some(side) = inits[i].partner() {
            let j = (i as isize + side.step()).rem_euclid(n as isize) as usize;
            let back = inits[j].partner().map(Side::step) == Some(-side.step());
            if !back || j == i || n < 2 {
                cfg.robots[i].lights.init = InitKind::Single;
            } else {
                seen.insert(i.min(j));
            }
        }
    }
    // Partners share one phase counter.
    for i in seen {
        let j = (i + 1) % n;
        let phase = cfg.robots[i].lights.init_phase.min(cfg.robots[j].lights.init_phase);
        cfg.robots[i].lights.init_phase = phase;
        cfg.robots[j].lights.init_phase = phase;
    }
}
