//! Invariant checkers and whole-run ledgers. Everything here is pure over
//! configurations, tokens and round traces, so it runs inline or on a replayed trace.

use std::collections::BTreeSet;
use std::f64::consts::{PI, TAU};
use std::fmt;

use thiserror::Error;

use crate::chain::{first_disconnected, ChainConfiguration, RunToken, Side};
use crate::engine::{Cause, Counters, RoundTrace, SimulationState};
use crate::generators::is_isogonal;
use crate::geometry::{polar_angle, wrap_angle, Point2};
use crate::moves::MoveKind;
use crate::tolerance::Tolerances;

/// Guaranteed L decrease of a qualifying shorten.
pub const SHORTEN_PROGRESS: f64 = 0.019;
/// Per-event slack on ledger comparisons.
pub const LEDGER_EPS: f64 = 1e-9;
pub const RUNS_PER_ROBOT: f64 = 143.0;
pub const SMALL_SHORTENS_PER_ROBOT: f64 = 4.0;
pub const MAX_L_INCREASE: f64 = 0.2;
pub const SHAPE_EPS: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub check: &'static str,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.check, self.detail)
    }
}

fn violation(check: &'static str, detail: String) -> Violation {
    Violation { check, detail }
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum VerifyError {
    #[error("malformed trace at record {record}: {reason}")]
    MalformedTrace { record: usize, reason: String },
}

/// Result of a checker whose precondition may not hold.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Check {
    Passed,
    Skipped,
}

pub fn check_connectivity(config: &ChainConfiguration, tol: &Tolerances) -> Result<(), Violation> {
    if config.n() < 2 {
        return Ok(());
    }
    match first_disconnected(&config.positions(), tol.len) {
        None => Ok(()),
        Some((i, j, d)) => Err(violation(
            "connectivity",
            format!("robots at {i} and {j} are {d} apart"),
        )),
    }
}

/// Per ring index: the heading of the token held there, and how many tokens it holds.
fn placements(config: &ChainConfiguration, tokens: &[RunToken]) -> Result<Vec<Option<Side>>, Violation> {
    let mut at = vec![None; config.n()];
    for t in tokens {
        let Some(i) = config.index_of(t.holder) else {
            return Err(violation(
                "run_validity",
                format!("token {} held by vanished robot {}", t.token_id, t.holder.0),
            ));
        };
        if at[i].is_some() {
            return Err(violation("run_validity", format!("two tokens at robot {}", t.holder.0)));
        }
        at[i] = Some(t.heading);
    }
    Ok(at)
}

pub fn check_run_validity(config: &ChainConfiguration, tokens: &[RunToken]) -> Result<(), Violation> {
    let at = placements(config, tokens)?;
    let n = at.len();
    if n < 3 {
        return Ok(());
    }
    for i in 0..n {
        let (a, b, c) = (at[i], at[(i + 1) % n], at[(i + 2) % n]);
        if a.is_some() && b.is_some() && c.is_some() {
            return Err(violation(
                "run_validity",
                format!("prohibited run sequence at {i}, {}, {}", (i + 1) % n, (i + 2) % n),
            ));
        }
        if let (Some(x), Some(y)) = (a, b) {
            if !(x == Side::Successor && y == Side::Predecessor) {
                let kind = if x == y { "uni-directional" } else { "opposite" };
                return Err(violation(
                    "run_validity",
                    format!("{kind} conflicting run pair at {i}, {}", (i + 1) % n),
                ));
            }
        }
    }
    Ok(())
}

/// No three neighbouring robots carry pattern-minted inits.
pub fn check_init_spacing(config: &ChainConfiguration) -> Result<(), Violation> {
    let n = config.n();
    if n < 3 {
        return Ok(());
    }
    let minted = |k: usize| {
        let r = &config.robots[k % n];
        r.lights.init.is_set() && !r.exceptional_init
    };
    for i in 0..n {
        if minted(i) && minted(i + 1) && minted(i + 2) {
            return Err(violation(
                "init_spacing",
                format!("three inits at {i}, {}, {} of {n}", (i + 1) % n, (i + 2) % n),
            ));
        }
    }
    Ok(())
}

pub fn check_no_revisit(tokens: &[RunToken], n_alive: usize) -> Result<(), Violation> {
    if n_alive <= 5 {
        return Ok(());
    }
    for t in tokens {
        let mut seen = BTreeSet::new();
        for id in &t.visited {
            if !seen.insert(*id) {
                return Err(violation(
                    "no_revisit",
                    format!("token {} visited robot {} twice", t.token_id, id.0),
                ));
            }
        }
    }
    Ok(())
}

/// Accumulates per-round violations instead of stopping at the first.
#[derive(Clone, Debug, Default)]
pub struct Monitor {
    pub rounds: u64,
    pub violations: Vec<(u64, Violation)>,
}

impl Monitor {
    pub fn observe(&mut self, state: &SimulationState) {
        self.rounds += 1;
        let round = state.config.round;
        let checks = [
            check_connectivity(&state.config, &state.settings.tol),
            check_run_validity(&state.config, &state.tokens),
            check_init_spacing(&state.config),
            check_no_revisit(&state.tokens, state.config.n()),
        ];
        for c in checks {
            if let Err(v) = c {
                self.violations.push((round, v));
            }
        }
    }

    pub fn count(&self, check: &str) -> usize {
        self.violations.iter().filter(|(_, v)| v.check == check).count()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ledger {
    pub name: &'static str,
    pub value: f64,
    pub bound: f64,
    /// `value ≤ bound` for ceilings, `value ≥ bound` for floors.
    pub floor: bool,
}

impl Ledger {
    pub fn ok(&self) -> bool {
        if self.floor {
            self.value >= self.bound
        } else {
            self.value <= self.bound
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ProgressReport {
    pub n_initial: usize,
    pub rounds: u64,
    pub totals: Counters,
    pub ledgers: Vec<Ledger>,
}

impl ProgressReport {
    pub fn ok(&self) -> bool {
        self.ledgers.iter().all(Ledger::ok)
    }

    pub fn failures(&self) -> Vec<&Ledger> {
        self.ledgers.iter().filter(|l| !l.ok()).collect()
    }
}

fn expected_arity(op: MoveKind) -> Option<usize> {
    match op {
        MoveKind::Idle => None,
        MoveKind::PassOnly => Some(0),
        MoveKind::Shorten | MoveKind::Merge | MoveKind::Hop => Some(3),
        MoveKind::JointShorten | MoveKind::JointHop | MoveKind::JointMerge => Some(4),
        MoveKind::BisectorOp | MoveKind::StarOp | MoveKind::Endgame => Some(3),
    }
}

fn recount(trace: &RoundTrace) -> Counters {
    let mut c = Counters::default();
    for e in &trace.events {
        match e.op {
            MoveKind::Merge | MoveKind::JointMerge => c.merges += 1,
            MoveKind::Shorten => {
                if e.pre_vec_lens[0] >= 0.5 && e.pre_vec_lens[1] >= 0.5 {
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
    c
}

/// Folds a whole run's traces into the progress ledgers.
pub fn audit_progress<'a, I>(traces: I) -> Result<ProgressReport, VerifyError>
where
    I: IntoIterator<Item = &'a RoundTrace>,
{
    let mut report = ProgressReport::default();
    let mut prev: Option<&RoundTrace> = None;
    let mut min_decrease = f64::INFINITY;
    let mut mismatched = 0u64;
    let mut budget_shortens = 0u64;
    let mut increases = 0u64;
    let mut max_increase: f64 = 0.0;
    for (k, t) in traces.into_iter().enumerate() {
        let bad = |reason: String| VerifyError::MalformedTrace { record: k, reason };
        match prev {
            None => report.n_initial = t.n_before,
            Some(p) => {
                if t.round != p.round + 1 {
                    return Err(bad(format!("round {} follows {}", t.round, p.round)));
                }
                if t.n_before != p.n_after {
                    return Err(bad(format!("n {} after {}", t.n_before, p.n_after)));
                }
            }
        }
        if !t.chain_length_before.is_finite() || !t.chain_length_after.is_finite() {
            return Err(bad("non-finite chain length".into()));
        }
        for e in &t.events {
            if expected_arity(e.op) != Some(e.pre_vec_lens.len()) {
                return Err(bad(format!(
                    "{} event with {} lengths",
                    e.op.name(),
                    e.pre_vec_lens.len()
                )));
            }
            if e.pre_vec_lens.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(bad("bad vector length".into()));
            }
            if e.cause != Cause::Run {
                continue;
            }
            let l = &e.pre_vec_lens;
            let decrease = match e.op {
                MoveKind::Shorten if l[0] >= 0.5 && l[1] >= 0.5 => Some(l[0] + l[1] - l[2]),
                MoveKind::JointShorten => Some(l[0] + l[1] + l[2] - l[3]),
                _ => None,
            };
            if let Some(d) = decrease {
                budget_shortens += 1;
                min_decrease = min_decrease.min(d);
            }
        }
        if !same_event_counters(&recount(t), &t.counters) {
            mismatched += 1;
        }
        if t.n_before > 5 && t.chain_length_after > t.chain_length_before + LEDGER_EPS {
            increases += 1;
            max_increase = max_increase.max(t.chain_length_after - t.chain_length_before);
        }
        report.totals.add(&t.counters);
        report.rounds += 1;
        prev = Some(t);
    }
    let n = report.n_initial as f64;
    let c = &report.totals;
    let ceiling = |name, value: f64, bound: f64| Ledger {
        name,
        value,
        bound,
        floor: false,
    };
    report.ledgers = vec![
        ceiling("counters_match_events", mismatched as f64, 0.0),
        ceiling("merges", c.merges as f64, (n - 1.0).max(0.0)),
        Ledger {
            name: "min_shorten_decrease",
            value: if min_decrease.is_finite() {
                min_decrease
            } else {
                SHORTEN_PROGRESS
            },
            bound: SHORTEN_PROGRESS - LEDGER_EPS,
            floor: true,
        },
        ceiling(
            "small_vector_shortens",
            c.shortens_small as f64,
            SMALL_SHORTENS_PER_ROBOT * n,
        ),
        ceiling(
            "shorten_budget",
            budget_shortens as f64,
            n * (1.0 + MAX_L_INCREASE) / SHORTEN_PROGRESS,
        ),
        ceiling("runs_started", c.runs_started as f64, RUNS_PER_ROBOT * n),
        ceiling("length_increases", increases as f64, n),
        ceiling("max_length_increase", max_increase, MAX_L_INCREASE + LEDGER_EPS),
    ];
    Ok(report)
}

fn same_event_counters(a: &Counters, b: &Counters) -> bool {
    a.merges == b.merges
        && a.shortens_large == b.shortens_large
        && a.shortens_small == b.shortens_small
        && a.joint_shortens == b.joint_shortens
        && a.hops == b.hops
        && a.joint_hops == b.joint_hops
        && a.pass_only == b.pass_only
        && a.bisector_ops == b.bisector_ops
        && a.star_ops == b.star_ops
        && a.endgame_moves == b.endgame_moves
}

fn centroid(points: &[Point2]) -> Point2 {
    let n = points.len() as f64;
    let (sx, sy) = points.iter().fold((0.0, 0.0), |(x, y), p| (x + p.x, y + p.y));
    Point2::new(sx / n, sy / n)
}

/// Common circle and constant signed angular step, if `points` form a regular star.
fn regular_shape(points: &[Point2], eps: f64) -> Option<(Point2, f64, f64)> {
    let n = points.len();
    let c = centroid(points);
    let r = points[0].distance(c);
    if points.iter().all(|p| p.distance(c) <= eps) {
        return Some((c, 0.0, 0.0));
    }
    if points.iter().any(|p| (p.distance(c) - r).abs() > eps) {
        return None;
    }
    let step = |k: usize| wrap_angle(polar_angle(c, points[(k + 1) % n]) - polar_angle(c, points[k]));
    let s0 = step(0);
    let slack = eps / r.max(eps);
    if (0..n).all(|k| (step(k) - s0).abs() <= slack) {
        Some((c, r, s0))
    } else {
        None
    }
}

/// After one round from an isogonal input, every robot sits on one circle with
/// equal central gaps.
pub fn check_star_one_round(before: &[Point2], after: &[Point2], tol: &Tolerances) -> Result<Check, Violation> {
    if before.len() < 3 || !is_isogonal(before, tol) {
        return Ok(Check::Skipped);
    }
    if after.len() != before.len() {
        return Err(violation(
            "star_one_round",
            format!("{} robots became {}", before.len(), after.len()),
        ));
    }
    match regular_shape(after, SHAPE_EPS) {
        Some(_) => Ok(Check::Passed),
        None => Err(violation("star_one_round", "result is not a regular star".into())),
    }
}

/// Radius after one round of a regular n-gon of radius `r`.
pub fn predicted_radius(r: f64, n: usize) -> f64 {
    let half = PI / n as f64;
    let d = 2.0 * r * half.sin();
    let h = (1.0 - (d * half.cos()).powi(2)).max(0.0).sqrt() + d * half.sin();
    (r - h.min(0.2)).max(0.0)
}

/// For a regular convex n-gon, the next radius follows [`predicted_radius`].
pub fn check_radius_recurrence(before: &[Point2], after: &[Point2], tol: &Tolerances) -> Result<Check, Violation> {
    let n = before.len();
    let Some((c, r, step)) = regular_shape(before, tol.len.max(1e-12) * 1e3) else {
        return Ok(Check::Skipped);
    };
    if n < 3 || r == 0.0 || (step.abs() - TAU / n as f64).abs() > 1e-9 {
        return Ok(Check::Skipped);
    }
    if after.len() != n {
        return Err(violation(
            "radius_recurrence",
            format!("{n} robots became {}", after.len()),
        ));
    }
    let want = predicted_radius(r, n);
    let worst = after.iter().map(|p| (p.distance(c) - want).abs()).fold(0.0, f64::max);
    if worst <= 1e-9 {
        Ok(Check::Passed)
    } else {
        Err(violation(
            "radius_recurrence",
            format!("radius {r} should become {want}, off by {worst}"),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{build_chain, RobotId};
    use crate::engine::Event;
    use crate::geometry::PlaneVector;

    fn token(id: u64, holder: u32, heading: Side) -> RunToken {
        RunToken {
            token_id: id,
            holder: RobotId(holder),
            heading,
            origin: RobotId(holder),
            visited: vec![RobotId(holder)],
            run_vector: PlaneVector::ZERO,
            born_round: 0,
        }
    }

    fn ring(n: usize) -> ChainConfiguration {
        let pts = crate::generators::regular_star(n, 1, 1.0).unwrap();
        build_chain(&pts, &Tolerances::default()).unwrap()
    }

    #[test]
    fn connectivity_tolerance() {
        let tol = Tolerances::default();
        let ok = build_chain(&[Point2::new(0.0, 0.0), Point2::new(1.0 + 1e-10, 0.0)], &tol).unwrap();
        assert!(check_connectivity(&ok, &tol).is_ok());
        let mut bad = ok.clone();
        bad.robots[1].pos = Point2::new(1.1, 0.0);
        assert!(check_connectivity(&bad, &tol).is_err());
    }

    #[test]
    fn run_patterns() {
        let c = ring(8);
        assert!(check_run_validity(&c, &[token(0, 3, Side::Successor)]).is_ok());
        let joint = [token(0, 3, Side::Successor), token(1, 4, Side::Predecessor)];
        assert!(check_run_validity(&c, &joint).is_ok());
        let away = [token(0, 3, Side::Predecessor), token(1, 4, Side::Successor)];
        assert!(check_run_validity(&c, &away).is_err());
        let same = [token(0, 3, Side::Successor), token(1, 4, Side::Successor)];
        assert!(check_run_validity(&c, &same).is_err());
        let three = [
            token(0, 3, Side::Successor),
            token(1, 4, Side::Predecessor),
            token(2, 5, Side::Successor),
        ];
        assert!(check_run_validity(&c, &three).is_err());
        let doubled = [token(0, 3, Side::Successor), token(1, 3, Side::Successor)];
        assert!(check_run_validity(&c, &doubled).is_err());
    }

    #[test]
    fn init_triples() {
        let mut c = ring(8);
        assert!(check_init_spacing(&c).is_ok());
        c.robots[2].lights.init = crate::chain::InitKind::JointWithSuccessor;
        c.robots[3].lights.init = crate::chain::InitKind::JointWithPredecessor;
        assert!(check_init_spacing(&c).is_ok());
        c.robots[4].lights.init = crate::chain::InitKind::Single;
        assert!(check_init_spacing(&c).is_err());
        c.robots[4].exceptional_init = true;
        assert!(check_init_spacing(&c).is_ok());
    }

    #[test]
    fn revisits() {
        let mut t = token(0, 1, Side::Successor);
        assert!(check_no_revisit(&[t.clone()], 8).is_ok());
        t.visited = vec![RobotId(1), RobotId(2), RobotId(1)];
        assert!(check_no_revisit(&[t.clone()], 8).is_err());
        assert!(check_no_revisit(&[t], 5).is_ok());
    }

    fn round(k: u64, n: usize, events: Vec<Event>, counters: Counters) -> RoundTrace {
        RoundTrace {
            round: k,
            n_before: n,
            n_after: n - counters.merges as usize,
            chain_length_before: 5.0,
            chain_length_after: 5.0,
            events,
            counters,
            seed: 0,
        }
    }

    #[test]
    fn empty_trace_is_fine() {
        let r = audit_progress(&[]).unwrap();
        assert!(r.ok());
    }

    #[test]
    fn too_many_merges() {
        let merge = |id| Event {
            robot: RobotId(id),
            op: MoveKind::Merge,
            pre_vec_lens: vec![0.5, 0.5, 0.9],
            cause: Cause::Run,
        };
        let c = Counters {
            merges: 4,
            ..Counters::default()
        };
        let t = round(0, 4, (0..4).map(merge).collect(), c);
        let r = audit_progress(&[t]).unwrap();
        assert!(!r.ok());
        assert_eq!(r.failures()[0].name, "merges");
    }

    #[test]
    fn doctored_counter_is_caught() {
        let c = Counters {
            hops: 1,
            ..Counters::default()
        };
        let r = audit_progress(&[round(0, 8, Vec::new(), c)]).unwrap();
        assert_eq!(r.failures()[0].name, "counters_match_events");
    }

    #[test]
    fn malformed_sequences() {
        let a = round(0, 8, Vec::new(), Counters::default());
        let b = round(2, 8, Vec::new(), Counters::default());
        assert!(audit_progress(&[a.clone(), b]).is_err());
        let mut bad = a.clone();
        bad.events.push(Event {
            robot: RobotId(0),
            op: MoveKind::Hop,
            pre_vec_lens: vec![1.0],
            cause: Cause::Run,
        });
        assert!(audit_progress(&[bad]).is_err());
    }

    #[test]
    fn radius_prediction_small() {
        // Tiny hexagon: the bisector point is far past the centre, so the cap binds.
        assert!((predicted_radius(1.0, 6) - 0.8).abs() < 1e-12);
        assert_eq!(predicted_radius(0.1, 6), 0.0);
    }

    #[test]
    fn regular_star_detected() {
        let p = crate::generators::regular_star(7, 2, 1.0).unwrap();
        assert!(regular_shape(&p, 1e-9).is_some());
        let q = crate::generators::translated_isogonal(8, 1, 1.0, 1.0).unwrap();
        assert!(regular_shape(&q, 1e-9).is_none());
    }
}
