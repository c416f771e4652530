//! Ring data model: identities, positions, lights, merges and disoriented local views.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{vertex_angle, OrientedAngle, PlaneVector, Point2};
use crate::tolerance::Tolerances;

/// Simulation-only identity; never visible inside a [`LocalView`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RobotId(pub u32);

/// A ring neighbour, named in ring order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Successor,
    Predecessor,
}

impl Side {
    pub fn step(self) -> isize {
        match self {
            Side::Successor => 1,
            Side::Predecessor => -1,
        }
    }

    pub fn from_step(step: isize) -> Side {
        if step >= 0 {
            Side::Successor
        } else {
            Side::Predecessor
        }
    }

    pub fn opposite(self) -> Side {
        match self {
            Side::Successor => Side::Predecessor,
            Side::Predecessor => Side::Successor,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitKind {
    #[default]
    None,
    Single,
    JointWithSuccessor,
    JointWithPredecessor,
}

impl InitKind {
    pub fn is_set(self) -> bool {
        self != InitKind::None
    }

    pub fn partner(self) -> Option<Side> {
        match self {
            InitKind::JointWithSuccessor => Some(Side::Successor),
            InitKind::JointWithPredecessor => Some(Side::Predecessor),
            _ => None,
        }
    }

    pub fn joint_with(side: Side) -> InitKind {
        match side {
            Side::Successor => InitKind::JointWithSuccessor,
            Side::Predecessor => InitKind::JointWithPredecessor,
        }
    }
}

/// The constant-size visible state of one robot.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RobotLights {
    pub run_here: bool,
    pub run_toward: Option<Side>,
    pub init: InitKind,
    pub blocked_remaining: u8,
    pub init_phase: u8,
    pub symmetric_moved: bool,
}

pub const BLOCK_ROUNDS: u8 = 4;
pub const INIT_PERIOD: u8 = 7;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Robot {
    pub id: RobotId,
    pub pos: Point2,
    pub lights: RobotLights,
    /// The init light came from the combination rule rather than a pattern.
    pub exceptional_init: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainConfiguration {
    pub robots: Vec<Robot>,
    pub round: u64,
    /// Retired id → the id it merged into (possibly itself retired later).
    pub merge_map: BTreeMap<RobotId, RobotId>,
}

/// A run travelling along the chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunToken {
    pub token_id: u64,
    pub holder: RobotId,
    pub heading: Side,
    pub origin: RobotId,
    pub visited: Vec<RobotId>,
    pub run_vector: PlaneVector,
    pub born_round: u64,
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum ChainError {
    #[error("empty chain")]
    Empty,
    #[error("non-finite coordinate at index {0}")]
    NonFinite(usize),
    #[error("robots {i} and {j} are {distance} apart")]
    DisconnectedChain { i: usize, j: usize, distance: f64 },
    #[error("connectivity broken after round {round}: robots {i} and {j} are {distance} apart")]
    ConnectivityBroken {
        round: u64,
        i: usize,
        j: usize,
        distance: f64,
    },
    #[error("merge directive references robot {0} outside the ring")]
    BadMerge(usize),
}

/// Two robots joined in one round; `onto` keeps its id unless the merge is joint.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MergeDirective {
    pub from: usize,
    pub onto: usize,
    pub joint: bool,
}

/// First adjacent pair farther apart than `1 + eps`.
pub fn first_disconnected(positions: &[Point2], eps: f64) -> Option<(usize, usize, f64)> {
    let n = positions.len();
    if n < 2 {
        return None;
    }
    (0..n).find_map(|i| {
        let j = (i + 1) % n;
        let d = positions[i].distance(positions[j]);
        (d > 1.0 + eps).then_some((i, j, d))
    })
}

pub fn build_chain(positions: &[Point2], tol: &Tolerances) -> Result<ChainConfiguration, ChainError> {
    if positions.is_empty() {
        return Err(ChainError::Empty);
    }
    if let Some(i) = positions.iter().position(|p| !p.is_finite()) {
        return Err(ChainError::NonFinite(i));
    }
    if let Some((i, j, distance)) = first_disconnected(positions, tol.len) {
        return Err(ChainError::DisconnectedChain { i, j, distance });
    }
    let robots = positions
        .iter()
        .enumerate()
        .map(|(k, &pos)| Robot {
            id: RobotId(k as u32),
            pos,
            lights: RobotLights::default(),
            exceptional_init: false,
        })
        .collect();
    Ok(ChainConfiguration {
        robots,
        round: 0,
        merge_map: BTreeMap::new(),
    })
}

impl ChainConfiguration {
    pub fn n(&self) -> usize {
        self.robots.len()
    }

    pub fn positions(&self) -> Vec<Point2> {
        self.robots.iter().map(|r| r.pos).collect()
    }

    pub fn wrap(&self, i: isize) -> usize {
        i.rem_euclid(self.n() as isize) as usize
    }

    pub fn pos(&self, i: isize) -> Point2 {
        self.robots[self.wrap(i)].pos
    }

    pub fn index_of(&self, id: RobotId) -> Option<usize> {
        self.robots.iter().position(|r| r.id == id)
    }

    /// Follows the merge map to the live id that absorbed `id`.
    pub fn resolve(&self, mut id: RobotId) -> RobotId {
        while let Some(&next) = self.merge_map.get(&id) {
            id = next;
        }
        id
    }

    pub fn chain_length(&self) -> f64 {
        chain_length(&self.positions())
    }

    /// Largest pairwise distance, with a bounding-box shortcut.
    pub fn diameter(&self) -> f64 {
        diameter(&self.positions())
    }

    pub fn is_gathered(&self, tol: &Tolerances) -> bool {
        self.n() <= 1 || diameter_at_most(&self.positions(), tol.gather)
    }

    /// Moves every robot to its target, then collapses merge groups.
    /// Returns the new configuration and, for each old index, its new index.
    pub fn apply_round(
        &self,
        targets: &[Point2],
        merges: &[MergeDirective],
        tol: &Tolerances,
    ) -> Result<(ChainConfiguration, Vec<usize>), ChainError> {
        let (next, map) = self.apply_round_unchecked(targets, merges)?;
        if let Some((i, j, distance)) = first_disconnected(&next.positions(), tol.len) {
            return Err(ChainError::ConnectivityBroken {
                round: next.round,
                i,
                j,
                distance,
            });
        }
        Ok((next, map))
    }

    pub fn apply_round_unchecked(
        &self,
        targets: &[Point2],
        merges: &[MergeDirective],
    ) -> Result<(ChainConfiguration, Vec<usize>), ChainError> {
        let n = self.n();
        assert_eq!(targets.len(), n, "one target per robot");
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut mover = vec![false; n];
        let mut joint = vec![false; n];
        for m in merges {
            if m.from >= n || m.onto >= n {
                return Err(ChainError::BadMerge(m.from.max(m.onto)));
            }
            if m.joint {
                joint[m.from] = true;
                joint[m.onto] = true;
            } else {
                mover[m.from] = true;
            }
            let (a, b) = (find(&mut parent, m.from), find(&mut parent, m.onto));
            if a != b {
                parent[a] = b;
            }
        }
        let roots: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();

        // Survivor per group: a member that was not moved away, smallest id first.
        let mut survivor: BTreeMap<usize, usize> = BTreeMap::new();
        for (i, &r) in roots.iter().enumerate() {
            let rank = |k: usize| (mover[k] || joint[k], self.robots[k].id);
            match survivor.get(&r) {
                Some(&s) if rank(s) <= rank(i) => {}
                _ => {
                    survivor.insert(r, i);
                }
            }
        }

        // Groups are contiguous arcs; start the new ring at a group boundary.
        let start = (0..n).find(|&i| roots[i] != roots[(i + n - 1) % n]).unwrap_or(0);
        let mut robots = Vec::with_capacity(n);
        let mut merge_map = self.merge_map.clone();
        let mut new_index = vec![usize::MAX; n];
        let mut group_index: BTreeMap<usize, usize> = BTreeMap::new();
        for k in 0..n {
            let i = (start + k) % n;
            let r = roots[i];
            let s = survivor[&r];
            let idx = *group_index.entry(r).or_insert_with(|| {
                let mut robot = self.robots[s].clone();
                robot.pos = targets[s];
                robots.push(robot);
                robots.len() - 1
            });
            new_index[i] = idx;
            if i != s {
                merge_map.insert(self.robots[i].id, self.robots[s].id);
            }
        }
        Ok((
            ChainConfiguration {
                robots,
                round: self.round + 1,
                merge_map,
            },
            new_index,
        ))
    }
}

pub fn chain_length(positions: &[Point2]) -> f64 {
    let n = positions.len();
    if n < 2 {
        return 0.0;
    }
    (0..n).map(|i| positions[i].distance(positions[(i + 1) % n])).sum()
}

pub fn diameter(positions: &[Point2]) -> f64 {
    let mut best = 0.0f64;
    for (k, a) in positions.iter().enumerate() {
        for b in &positions[k + 1..] {
            best = best.max(a.distance(*b));
        }
    }
    best
}

fn diameter_at_most(positions: &[Point2], bound: f64) -> bool {
    let (mut lo, mut hi) = (positions[0], positions[0]);
    for p in positions {
        lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    let (w, h) = (hi.x - lo.x, hi.y - lo.y);
    if w > bound || h > bound {
        return false;
    }
    if w.hypot(h) <= bound {
        return true;
    }
    diameter(positions) <= bound
}

/// A robot's private coordinate frame: a rigid motion placing it at the origin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Frame {
    pub origin: Point2,
    pub cos: f64,
    pub sin: f64,
    pub mirrored: bool,
}

impl Frame {
    pub fn identity(origin: Point2) -> Frame {
        Frame {
            origin,
            cos: 1.0,
            sin: 0.0,
            mirrored: false,
        }
    }

    /// Rotation angle and chirality drawn from `seed`.
    pub fn from_seed(seed: u64, origin: Point2) -> Frame {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let theta: f64 = rng.gen_range(0.0..TAU);
        Frame {
            origin,
            cos: theta.cos(),
            sin: theta.sin(),
            mirrored: rng.gen_bool(0.5),
        }
    }

    pub fn to_local(&self, p: Point2) -> Point2 {
        let v = p - self.origin;
        let (x, y) = (self.cos * v.dx - self.sin * v.dy, self.sin * v.dx + self.cos * v.dy);
        if self.mirrored {
            Point2::new(x, -y)
        } else {
            Point2::new(x, y)
        }
    }

    pub fn to_global(&self, q: Point2) -> Point2 {
        let (x, y) = if self.mirrored { (q.x, -q.y) } else { (q.x, q.y) };
        self.origin + PlaneVector::new(self.cos * x + self.sin * y, -self.sin * x + self.cos * y)
    }
}

pub const VIEW_RADIUS: usize = 4;
pub const NEIGHBORHOOD_RADIUS: isize = 3;

/// What one robot perceives, indexed by ring offset `-4..=4` from itself.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalView {
    pub positions: [Point2; 2 * VIEW_RADIUS + 1],
    pub lights: [RobotLights; 2 * VIEW_RADIUS + 1],
    pub wraps_small: bool,
}

impl LocalView {
    fn slot(offset: isize) -> usize {
        assert!(offset.unsigned_abs() <= VIEW_RADIUS, "offset {offset} outside the view");
        (offset + VIEW_RADIUS as isize) as usize
    }

    pub fn pos(&self, offset: isize) -> Point2 {
        self.positions[Self::slot(offset)]
    }

    pub fn light(&self, offset: isize) -> &RobotLights {
        &self.lights[Self::slot(offset)]
    }

    /// `u` at `offset`: the vector from the robot at `offset - 1` to the one at `offset`.
    pub fn vector(&self, offset: isize) -> PlaneVector {
        self.pos(offset) - self.pos(offset - 1)
    }

    pub fn vec_len(&self, offset: isize) -> f64 {
        self.vector(offset).norm()
    }

    /// α at `offset`. A vertex coinciding with a neighbour reads as a zero angle.
    pub fn angle(&self, offset: isize, tol: &Tolerances) -> OrientedAngle {
        vertex_angle(self.pos(offset - 1), self.pos(offset), self.pos(offset + 1), tol)
            .unwrap_or(OrientedAngle { size: 0.0, turn: 0 })
    }

    pub fn neighborhood(&self) -> impl Iterator<Item = &RobotLights> {
        (-NEIGHBORHOOD_RADIUS..=NEIGHBORHOOD_RADIUS).map(move |k| self.light(k))
    }

    pub fn run_in_neighborhood(&self) -> bool {
        self.neighborhood().any(|l| l.run_here)
    }

    pub fn init_in_neighborhood(&self) -> bool {
        self.neighborhood().any(|l| l.init.is_set())
    }
}

/// Run heading per ring index, derived from the live tokens.
pub fn run_headings(config: &ChainConfiguration, tokens: &[RunToken]) -> Vec<Option<Side>> {
    let mut heads = vec![None; config.n()];
    let index: BTreeMap<RobotId, usize> = config.robots.iter().enumerate().map(|(k, r)| (r.id, k)).collect();
    for t in tokens {
        if let Some(&k) = index.get(&t.holder) {
            heads[k].get_or_insert(t.heading);
        }
    }
    heads
}

pub fn local_view_in(config: &ChainConfiguration, heads: &[Option<Side>], i: usize, frame: &Frame) -> LocalView {
    let r = VIEW_RADIUS as isize;
    let mut positions = [Point2::ORIGIN; 2 * VIEW_RADIUS + 1];
    let mut lights = [RobotLights::default(); 2 * VIEW_RADIUS + 1];
    for k in -r..=r {
        let j = config.wrap(i as isize + k);
        let slot = (k + r) as usize;
        positions[slot] = if k == 0 {
            Point2::ORIGIN
        } else {
            frame.to_local(config.robots[j].pos)
        };
        let mut l = config.robots[j].lights;
        l.run_here = heads[j].is_some();
        l.run_toward = heads[j];
        lights[slot] = l;
    }
    LocalView {
        positions,
        lights,
        wraps_small: config.n() <= 5,
    }
}

/// The view of robot `i` in the private frame derived from `frame_seed`.
pub fn local_view(config: &ChainConfiguration, tokens: &[RunToken], i: usize, frame_seed: u64) -> LocalView {
    let frame = Frame::from_seed(frame_seed, config.robots[i].pos);
    local_view_in(config, &run_headings(config, tokens), i, &frame)
}
