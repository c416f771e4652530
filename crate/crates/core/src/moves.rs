//! Target-point computation for every movement operation, plus the two run case
//! tables. All positions are in the deciding robot's private frame.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::chain::LocalView;
use crate::geometry::{
    circle_through, equidistant_bisector_point, polar_angle, rotate_about, smallest_enclosing_circle, wrap_angle,
    GeometryError, Point2,
};
use crate::tolerance::Tolerances;

pub const SHORTEN_THRESHOLD: f64 = 7.0 * PI / 8.0;
pub const SYMMETRIC_STEP: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveKind {
    Hop,
    JointHop,
    Shorten,
    JointShorten,
    Merge,
    JointMerge,
    PassOnly,
    BisectorOp,
    StarOp,
    Endgame,
    Idle,
}

impl MoveKind {
    pub const ALL: [MoveKind; 11] = [
        MoveKind::Hop,
        MoveKind::JointHop,
        MoveKind::Shorten,
        MoveKind::JointShorten,
        MoveKind::Merge,
        MoveKind::JointMerge,
        MoveKind::PassOnly,
        MoveKind::BisectorOp,
        MoveKind::StarOp,
        MoveKind::Endgame,
        MoveKind::Idle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MoveKind::Hop => "hop",
            MoveKind::JointHop => "joint_hop",
            MoveKind::Shorten => "shorten",
            MoveKind::JointShorten => "joint_shorten",
            MoveKind::Merge => "merge",
            MoveKind::JointMerge => "joint_merge",
            MoveKind::PassOnly => "pass_only",
            MoveKind::BisectorOp => "bisector_op",
            MoveKind::StarOp => "star_op",
            MoveKind::Endgame => "endgame",
            MoveKind::Idle => "idle",
        }
    }

    pub fn from_name(s: &str) -> Option<MoveKind> {
        MoveKind::ALL.into_iter().find(|k| k.name() == s)
    }
}

/// Light-state consequences of an action, from the deciding robot's perspective.
/// Offsets and headings are ring offsets relative to that robot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LightEffect {
    /// The robot's own run ends.
    StopRun,
    /// The robot's own run moves to `to` and then heads `heading`.
    PassRun {
        to: isize,
        heading: isize,
    },
    /// A new run appears at `at`, heading `heading`.
    SpawnRun {
        at: isize,
        heading: isize,
    },
    /// The robot merges with its ring neighbour at `onto`.
    MergeInto {
        onto: isize,
        joint: bool,
    },
    BlockNeighborhood,
    SetSymmetricMoved,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MoveAction {
    pub kind: MoveKind,
    /// Up to two (offset, target) pairs; joint kinds list both partners.
    pub targets: Vec<(isize, Point2)>,
    pub effects: Vec<LightEffect>,
}

impl MoveAction {
    pub fn idle() -> MoveAction {
        MoveAction {
            kind: MoveKind::Idle,
            targets: Vec::new(),
            effects: Vec::new(),
        }
    }

    /// Where the deciding robot (offset 0) ends up, if it moves.
    pub fn own_target(&self) -> Option<Point2> {
        self.targets.iter().find(|(k, _)| *k == 0).map(|(_, p)| *p)
    }
}

pub fn hop_target(prev: Point2, me: Point2, next: Point2) -> Point2 {
    next - (me - prev)
}

pub fn joint_hop_targets(prev: Point2, a: Point2, b: Point2, next: Point2) -> (Point2, Point2) {
    (prev + (next - b), next - (a - prev))
}

pub fn shorten_target(prev: Point2, next: Point2) -> Point2 {
    prev.midpoint(next)
}

pub fn joint_shorten_targets(prev: Point2, next: Point2) -> (Point2, Point2) {
    let v = next - prev;
    (prev + v * (1.0 / 3.0), next - v * (1.0 / 3.0))
}

pub fn merge_target(neighbor: Point2) -> Point2 {
    neighbor
}

/// Both partners meet at the midpoint of the two outer neighbours.
pub fn joint_merge_target(prev: Point2, next: Point2) -> Point2 {
    prev.midpoint(next)
}

/// Step toward the unit-distance bisector point, capped at 1/5 and never past
/// the centre of the circle through the three robots.
pub fn bisector_op_target(prev: Point2, me: Point2, next: Point2, tol: &Tolerances) -> Result<Point2, GeometryError> {
    let p = equidistant_bisector_point(prev, me, next, tol)?;
    let to_p = p - me;
    let dist = to_p.norm();
    let mut reach = dist.min(SYMMETRIC_STEP);
    if let Ok(c) = circle_through(prev, me, next, tol) {
        let to_c = c.center - me;
        let along = to_c.dot(to_p) / dist.max(f64::MIN_POSITIVE);
        let off_axis = (to_c.norm().powi(2) - along * along).max(0.0).sqrt();
        if along > 0.0 && along < reach && off_axis <= 1e-6 * c.radius.max(1.0) {
            reach = along;
        }
    }
    if dist <= tol.len {
        return Ok(p);
    }
    Ok(me + to_p * (reach / dist))
}

/// Rebalances the two arcs to the neighbours on the circle through the three robots.
pub fn star_op_target(prev: Point2, me: Point2, next: Point2, tol: &Tolerances) -> Result<Point2, GeometryError> {
    let c = circle_through(prev, me, next, tol)?;
    if 2.0 * c.radius <= 2.0 + tol.len {
        return Ok(c.center);
    }
    // Signed central gaps along the chain; each is below π/3 once R > 1.
    let g_prev = wrap_angle(polar_angle(c.center, me) - polar_angle(c.center, prev));
    let g_next = wrap_angle(polar_angle(c.center, next) - polar_angle(c.center, me));
    Ok(rotate_about(c.center, me, (g_next - g_prev) / 4.0))
}

/// Unit step toward the centre of the smallest circle around all distinct visible robots.
pub fn endgame_target(view: &LocalView, tol: &Tolerances) -> Point2 {
    let mut distinct: Vec<Point2> = Vec::with_capacity(view.positions.len());
    for &p in &view.positions {
        if distinct.iter().all(|q| q.distance(p) > tol.len) {
            distinct.push(p);
        }
    }
    let c = smallest_enclosing_circle(&distinct)
        .expect("view is never empty")
        .center;
    let me = view.pos(0);
    let d = me.distance(c);
    if d <= 1.0 {
        c
    } else {
        me + (c - me) * (1.0 / d)
    }
}

/// Lengths of the chain vectors `u_from..=u_to` as seen in `view`.
pub fn vec_lens(view: &LocalView, from: isize, to: isize) -> Vec<f64> {
    (from..=to).map(|k| view.vec_len(k)).collect()
}

/// Decision of a robot holding an isolated run heading `h` (±1 in ring order).
pub fn isolated_run_decision(view: &LocalView, h: isize, tol: &Tolerances) -> MoveAction {
    let (behind, me, ahead, ahead2) = (view.pos(-h), view.pos(0), view.pos(h), view.pos(2 * h));
    if Tolerances::le(behind.distance(ahead), 1.0, tol.len) {
        return MoveAction {
            kind: MoveKind::Merge,
            targets: vec![(0, merge_target(ahead))],
            effects: vec![
                LightEffect::StopRun,
                LightEffect::MergeInto { onto: h, joint: false },
                LightEffect::BlockNeighborhood,
            ],
        };
    }
    if Tolerances::le(me.distance(ahead2), 1.0, tol.len) {
        return MoveAction {
            kind: MoveKind::PassOnly,
            targets: Vec::new(),
            effects: vec![LightEffect::PassRun { to: h, heading: h }],
        };
    }
    if Tolerances::le(view.angle(0, tol).size, SHORTEN_THRESHOLD, tol.ang) {
        return MoveAction {
            kind: MoveKind::Shorten,
            targets: vec![(0, shorten_target(behind, ahead))],
            effects: vec![LightEffect::StopRun],
        };
    }
    MoveAction {
        kind: MoveKind::Hop,
        targets: vec![(0, hop_target(behind, me, ahead))],
        effects: vec![LightEffect::PassRun { to: h, heading: h }],
    }
}

/// Decision of a robot in a joint run-pair whose partner sits at offset `partner` (±1).
pub fn joint_pair_decision(view: &LocalView, partner: isize, tol: &Tolerances) -> MoveAction {
    // The pair occupies offsets a and a+1.
    let a = if partner > 0 { 0 } else { -1 };
    let (o1, pa, pb, o2) = (view.pos(a - 1), view.pos(a), view.pos(a + 1), view.pos(a + 2));
    let own_heading = partner;
    let stop = vec![LightEffect::StopRun];

    if Tolerances::lt(o1.distance(o2), 2.0, tol.len) {
        let m = joint_merge_target(o1, o2);
        return MoveAction {
            kind: MoveKind::JointMerge,
            targets: vec![(a, m), (a + 1, m)],
            effects: vec![
                LightEffect::StopRun,
                LightEffect::MergeInto {
                    onto: partner,
                    joint: true,
                },
                LightEffect::BlockNeighborhood,
            ],
        };
    }
    let small = |k: isize| Tolerances::le(view.angle(k, tol).size, SHORTEN_THRESHOLD, tol.ang);
    let (sa, sb) = (small(a), small(a + 1));
    let joint_shorten = || {
        let (ta, tb) = joint_shorten_targets(o1, o2);
        MoveAction {
            kind: MoveKind::JointShorten,
            targets: vec![(a, ta), (a + 1, tb)],
            effects: vec![LightEffect::StopRun],
        }
    };
    if sa && sb {
        return joint_shorten();
    }
    if sa {
        return MoveAction {
            kind: MoveKind::Shorten,
            targets: vec![(a, shorten_target(o1, pb))],
            effects: stop,
        };
    }
    if sb {
        return MoveAction {
            kind: MoveKind::Shorten,
            targets: vec![(a + 1, shorten_target(pa, o2))],
            effects: stop,
        };
    }
    let outer = (pa - o1).angle_to(-(o2 - pb));
    if Tolerances::le(outer, SHORTEN_THRESHOLD, tol.ang) {
        return joint_shorten();
    }
    let (ta, tb) = joint_hop_targets(o1, pa, pb, o2);
    MoveAction {
        kind: MoveKind::JointHop,
        targets: vec![(a, ta), (a + 1, tb)],
        effects: vec![LightEffect::PassRun {
            to: 2 * own_heading,
            heading: own_heading,
        }],
    }
}

/// Run start by a single init robot.
pub fn start_single(view: &LocalView, tol: &Tolerances) -> MoveAction {
    let (prev, next) = (view.pos(-1), view.pos(1));
    if Tolerances::lt(1.0, prev.distance(next), tol.len) {
        return MoveAction {
            kind: MoveKind::Shorten,
            targets: vec![(0, shorten_target(prev, next))],
            effects: vec![
                LightEffect::SpawnRun { at: 1, heading: 1 },
                LightEffect::SpawnRun { at: -1, heading: -1 },
            ],
        };
    }
    // No run direction exists yet: merge onto the nearer neighbour, successor on ties.
    let onto = if view.vec_len(0) < view.vec_len(1) { -1 } else { 1 };
    MoveAction {
        kind: MoveKind::Merge,
        targets: vec![(0, merge_target(view.pos(onto)))],
        effects: vec![
            LightEffect::MergeInto { onto, joint: false },
            LightEffect::BlockNeighborhood,
        ],
    }
}

/// Run start by a joint init pair; `partner` is the partner's offset.
pub fn start_joint(view: &LocalView, partner: isize, tol: &Tolerances) -> MoveAction {
    let a = if partner > 0 { 0 } else { -1 };
    let (o1, o2) = (view.pos(a - 1), view.pos(a + 2));
    if Tolerances::le(o1.distance(o2), 2.0, tol.len) {
        let m = joint_merge_target(o1, o2);
        return MoveAction {
            kind: MoveKind::JointMerge,
            targets: vec![(a, m), (a + 1, m)],
            effects: vec![
                LightEffect::MergeInto {
                    onto: partner,
                    joint: true,
                },
                LightEffect::BlockNeighborhood,
            ],
        };
    }
    let (ta, tb) = joint_shorten_targets(o1, o2);
    // Each partner seeds the run on its own outer side.
    let h = -partner;
    MoveAction {
        kind: MoveKind::JointShorten,
        targets: vec![(a, ta), (a + 1, tb)],
        effects: vec![LightEffect::SpawnRun { at: h, heading: h }],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::RobotLights;
    use crate::geometry::PlaneVector;
    use approx::assert_abs_diff_eq;

    fn p(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn view(points: [Point2; 9]) -> LocalView {
        let shift = points[4] - Point2::ORIGIN;
        LocalView {
            positions: points.map(|q| q - shift),
            lights: [RobotLights::default(); 9],
            wraps_small: false,
        }
    }

    #[test]
    fn hop_swaps_vectors() {
        let t = hop_target(p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0));
        assert_abs_diff_eq!(t.x, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t.y, 1.0, epsilon = 1e-12);
        assert_eq!(hop_target(p(0.0, 0.0), p(1.0, 0.0), p(2.0, 0.0)), p(1.0, 0.0));
    }

    #[test]
    fn joint_hop_square() {
        let (a, b) = joint_hop_targets(p(0.0, 0.0), p(0.0, 1.0), p(1.0, 1.0), p(1.0, 0.0));
        assert_eq!(a, p(0.0, -1.0));
        assert_eq!(b, p(1.0, -1.0));
    }

    #[test]
    fn joint_shorten_thirds() {
        let (a, b) = joint_shorten_targets(p(0.0, 0.0), p(3.0, 0.0));
        assert_abs_diff_eq!(a.x, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b.x, 2.0, epsilon = 1e-12);
        let (a, b) = joint_shorten_targets(p(1.0, 1.0), p(1.0, 1.0));
        assert_eq!((a, b), (p(1.0, 1.0), p(1.0, 1.0)));
    }

    #[test]
    fn shorten_progress_at_the_threshold() {
        let a = 0.5;
        let prev = p(-a, 0.0);
        let me = Point2::ORIGIN;
        let dir = PI - SHORTEN_THRESHOLD;
        let next = me + PlaneVector::new(dir.cos(), dir.sin()) * a;
        let t = shorten_target(prev, next);
        let before = prev.distance(me) + me.distance(next);
        let after = prev.distance(t) + t.distance(next);
        let expected = 1.0 - (0.5 * (1.0 + (PI / 8.0).cos())).sqrt();
        assert_abs_diff_eq!(before - after, expected, epsilon = 1e-12);
        assert!(before - after > 0.019);
    }

    #[test]
    fn joint_merge_meets_outer_neighbours() {
        let m = joint_merge_target(p(0.0, 0.0), p(1.8, 0.0));
        assert_abs_diff_eq!(m.x, 0.9, epsilon = 1e-12);
        assert!(m.distance(p(0.0, 0.0)) <= 1.0 && m.distance(p(1.8, 0.0)) <= 1.0);
    }

    #[test]
    fn bisector_caps_at_a_fifth() {
        let h = 3f64.sqrt() / 2.0;
        let t = bisector_op_target(p(0.5, h), p(1.0, 0.0), p(0.5, -h), &tol()).unwrap();
        assert_abs_diff_eq!(t.x, 0.8, epsilon = 1e-12);
        assert_abs_diff_eq!(t.y, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn bisector_under_cap_lands_exactly() {
        // Nearly straight chord; the bisector point sits 0.1 across from self.
        let half = 0.999f64;
        let depth = (1.0 - half * half).sqrt();
        let prev = p(-half, 0.0);
        let next = p(half, 0.0);
        let me = p(0.0, depth - 0.1);
        let t = bisector_op_target(prev, me, next, &tol()).unwrap();
        let target = equidistant_bisector_point(prev, me, next, &tol()).unwrap();
        assert!(t.distance(target) < 1e-12);
        assert!(me.distance(target) <= 0.2);
    }

    #[test]
    fn bisector_stops_at_the_centre() {
        // Small regular hexagon: radius 0.1 < 1/5.
        let r = 0.1;
        let q = |k: f64| p(r * (k * PI / 3.0).cos(), r * (k * PI / 3.0).sin());
        let t = bisector_op_target(q(-1.0), q(0.0), q(1.0), &tol()).unwrap();
        assert!(t.distance(Point2::ORIGIN) < 1e-12);
    }

    #[test]
    fn star_small_circle_goes_to_centre() {
        let r = 0.9;
        let q = |a: f64| p(r * a.cos(), r * a.sin());
        let t = star_op_target(q(-0.5), q(0.0), q(0.3), &tol()).unwrap();
        assert!(t.distance(Point2::ORIGIN) < 1e-12);
    }

    #[test]
    fn star_rotates_toward_the_long_arc() {
        let r = 2.0;
        let q = |a: f64| p(r * a.cos(), r * a.sin());
        // α = π/6 to prev (clockwise side), β = π/3 to next
        let t = star_op_target(q(-PI / 6.0), q(0.0), q(PI / 3.0), &tol()).unwrap();
        let expected = q(PI / 24.0);
        assert!(t.distance(expected) < 1e-9, "{t:?} vs {expected:?}");
        assert_abs_diff_eq!(t.distance(Point2::ORIGIN), r, epsilon = 1e-9);
    }

    #[test]
    fn star_with_both_neighbours_on_one_side() {
        let r = 2.0;
        let q = |a: f64| p(r * a.cos(), r * a.sin());
        // chain goes back 0.1 then forward 0.5: gaps -0.1 and 0.5 even out at 0.2
        let t = star_op_target(q(-0.5), q(0.0), q(-0.1), &tol()).unwrap();
        let expected = q(-0.15);
        assert!(t.distance(expected) < 1e-9, "{t:?} vs {expected:?}");
    }

    #[test]
    fn endgame_examples() {
        let r = 0.8;
        let ring: Vec<Point2> = (0..5)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / 5.0;
                p(r * a.cos(), r * a.sin())
            })
            .collect();
        let pts: [Point2; 9] = std::array::from_fn(|s| ring[(s + 5 - 4 + 5 * 4) % 5]);
        let v = view(pts);
        let t = endgame_target(&v, &tol());
        let centre = Point2::ORIGIN - (ring[0] - Point2::ORIGIN);
        assert!(t.distance(centre) < 1e-9);

        let line = [p(0.0, 0.0), p(1.0, 0.0), p(2.0, 0.0)];
        let pts: [Point2; 9] = std::array::from_fn(|s| line[(s + 3 * 3 - 4) % 3]);
        let v = view(pts);
        // self is line[0]; SEC centre is the middle robot, one unit away
        let t = endgame_target(&v, &tol());
        assert!(t.distance(v.pos(1)) < 1e-12);
    }

    #[test]
    fn isolated_case_table() {
        // straight-ish chain along x with unit spacing, self at origin
        let base: [Point2; 9] = std::array::from_fn(|s| p(s as f64 - 4.0, 0.0));
        let mut pts = base;
        pts[3] = p(-0.5, 0.8);
        pts[5] = p(0.4, 0.8);
        assert_eq!(isolated_run_decision(&view(pts), 1, &tol()).kind, MoveKind::Merge);

        let mut pts = base;
        pts[6] = p(0.7, 0.0);
        pts[5] = p(0.9, 0.3);
        pts[3] = p(-0.9, 0.0);
        assert_eq!(isolated_run_decision(&view(pts), 1, &tol()).kind, MoveKind::PassOnly);

        let mut pts = base;
        let bend = 0.05 * PI;
        pts[5] = p(bend.cos(), bend.sin());
        pts[6] = pts[5] + PlaneVector::new(1.0, 0.0);
        let a = isolated_run_decision(&view(pts), 1, &tol());
        assert_eq!(a.kind, MoveKind::Hop);
        assert_eq!(a.effects, vec![LightEffect::PassRun { to: 1, heading: 1 }]);

        let mut pts = base;
        pts[5] = p(0.2, 0.99);
        pts[6] = p(1.2, 0.99);
        assert_eq!(isolated_run_decision(&view(pts), 1, &tol()).kind, MoveKind::Shorten);
    }

    #[test]
    fn joint_case_table() {
        // pair at offsets 0 and 1
        let mut pts: [Point2; 9] = std::array::from_fn(|s| p(s as f64 - 4.0, 0.0));
        pts[3] = p(-0.5, 0.0);
        pts[5] = p(0.9, 0.0);
        pts[6] = p(1.4, 0.0);
        assert_eq!(joint_pair_decision(&view(pts), 1, &tol()).kind, MoveKind::JointMerge);

        // both vertex angles 0.8π
        let mut pts: [Point2; 9] = std::array::from_fn(|s| p(s as f64 - 4.0, 0.0));
        let turn = PI - 0.8 * PI;
        pts[3] = p(-1.0, 0.0);
        pts[5] = p(1.0, 0.0);
        pts[6] = pts[5] + PlaneVector::new(turn.cos(), turn.sin());
        pts[2] = pts[3] + PlaneVector::new(-turn.cos(), turn.sin());
        let rotated = {
            let mut q = pts;
            q[3] = p(-(turn).cos(), -(turn).sin());
            q
        };
        let v = view(rotated);
        assert!((v.angle(0, &tol()).size - 0.8 * PI).abs() < 1e-9);
        assert!((v.angle(1, &tol()).size - 0.8 * PI).abs() < 1e-9);
        assert_eq!(joint_pair_decision(&v, 1, &tol()).kind, MoveKind::JointShorten);

        // both angles 0.95π with the outer vectors bent apart: joint hop
        let bend = 0.05 * PI;
        let mut q: [Point2; 9] = std::array::from_fn(|s| p(s as f64 - 4.0, 0.0));
        q[4] = Point2::ORIGIN;
        q[5] = p(1.0, 0.0);
        q[3] = p(-bend.cos(), bend.sin());
        q[6] = q[5] + PlaneVector::new(bend.cos(), bend.sin());
        let v = view(q);
        assert!((v.angle(0, &tol()).size - 0.95 * PI).abs() < 1e-9);
        let a = joint_pair_decision(&v, 1, &tol());
        assert_eq!(a.kind, MoveKind::JointHop);
        assert_eq!(a.effects, vec![LightEffect::PassRun { to: 2, heading: 1 }]);
    }

    #[test]
    fn start_rules() {
        let mut pts: [Point2; 9] = std::array::from_fn(|s| p(s as f64 - 4.0, 0.0));
        pts[3] = p(-0.4, 0.5);
        pts[5] = p(0.4, 0.5);
        assert_eq!(start_single(&view(pts), &tol()).kind, MoveKind::Merge);
        pts[3] = p(-0.75, 0.5);
        pts[5] = p(0.75, 0.5);
        let a = start_single(&view(pts), &tol());
        assert_eq!(a.kind, MoveKind::Shorten);
        assert_eq!(
            a.effects,
            vec![
                LightEffect::SpawnRun { at: 1, heading: 1 },
                LightEffect::SpawnRun { at: -1, heading: -1 }
            ]
        );
    }
}
