//! Local symmetry analysis: the pattern families that mint init lights, and the
//! local isogonality test that hands a robot to the symmetric operations.

use serde::{Deserialize, Serialize};

use crate::chain::LocalView;
use crate::tolerance::Tolerances;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PatternFamily {
    Angle,
    Orientation,
    VectorLength,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternVerdict {
    pub family: PatternFamily,
    pub variant: u8,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SymmetryLevel {
    AnglesDiffer,
    AnglesEqualOrientationsDiffer,
    FullAngleSymmetry,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum IsogonalVerdict {
    NotIsogonal,
    EqualLengths,
    AlternatingLengths,
}

/// Offsets of the visible angles.
const ANGLES: std::ops::RangeInclusive<isize> = -3..=3;
/// Offsets of the visible chain vectors.
const VECTORS: std::ops::RangeInclusive<isize> = -3..=4;

pub fn symmetry_level(view: &LocalView, tol: &Tolerances) -> SymmetryLevel {
    let angles: Vec<_> = ANGLES.map(|k| view.angle(k, tol)).collect();
    let (lo, hi) = angles.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), a| {
        (lo.min(a.size), hi.max(a.size))
    });
    if hi - lo > tol.ang {
        SymmetryLevel::AnglesDiffer
    } else if angles.iter().any(|a| a.turn != angles[0].turn) {
        SymmetryLevel::AnglesEqualOrientationsDiffer
    } else {
        SymmetryLevel::FullAngleSymmetry
    }
}

/// The robot's angle is a local minimum.
pub fn angle_pattern(view: &LocalView, tol: &Tolerances) -> Option<PatternVerdict> {
    let e = tol.ang;
    let (prev, me, next) = (
        view.angle(-1, tol).size,
        view.angle(0, tol).size,
        view.angle(1, tol).size,
    );
    let variant = if Tolerances::lt(me, prev, e) && Tolerances::le(me, next, e) {
        1
    } else if Tolerances::le(me, prev, e) && Tolerances::lt(me, next, e) {
        2
    } else {
        return None;
    };
    Some(PatternVerdict {
        family: PatternFamily::Angle,
        variant,
    })
}

pub fn orientation_pattern(view: &LocalView, tol: &Tolerances) -> Option<PatternVerdict> {
    let s = |k: isize| view.angle(k, tol).turn;
    let first = (s(-1) == s(1) && s(1) == s(2) && s(2) != s(0)) || (s(-2) == s(-1) && s(-1) == s(1) && s(1) != s(0));
    let second = (s(-1) == s(0) && s(0) != s(1) && s(1) == s(2) && s(2) == s(3))
        || (s(1) == s(0) && s(0) != s(-1) && s(-1) == s(-2) && s(-2) == s(-3));
    let variant = match (first, second) {
        (true, _) => 1,
        (false, true) => 2,
        _ => return None,
    };
    Some(PatternVerdict {
        family: PatternFamily::Orientation,
        variant,
    })
}

pub fn vector_length_pattern(view: &LocalView, tol: &Tolerances) -> Option<PatternVerdict> {
    let e = tol.len;
    let len = |k: isize| view.vec_len(k);
    let lens: Vec<f64> = VECTORS.map(len).collect();
    let locally_minimal = |k: isize| lens.iter().all(|&other| !Tolerances::lt(other, len(k), e));
    let (lt, eq) = (
        |a: f64, b: f64| Tolerances::lt(a, b, e),
        |a: f64, b: f64| Tolerances::eq(a, b, e),
    );
    let first = (locally_minimal(0) && lt(len(0), len(-1)) && lt(len(0), len(1)) && lt(len(0), len(2)))
        || (locally_minimal(1) && lt(len(1), len(0)) && lt(len(1), len(2)) && lt(len(1), len(3)));
    let second = (eq(len(-1), len(0)) && lt(len(0), len(1))) || (lt(len(1), len(0)) && eq(len(1), len(2)));
    let variant = match (first, second) {
        (true, _) => 1,
        (false, true) => 2,
        _ => return None,
    };
    Some(PatternVerdict {
        family: PatternFamily::VectorLength,
        variant,
    })
}

pub fn locally_isogonal(view: &LocalView, tol: &Tolerances) -> IsogonalVerdict {
    if symmetry_level(view, tol) != SymmetryLevel::FullAngleSymmetry {
        return IsogonalVerdict::NotIsogonal;
    }
    let lens: Vec<f64> = VECTORS.map(|k| view.vec_len(k)).collect();
    let eq = |a: f64, b: f64| Tolerances::eq(a, b, tol.len);
    if lens.iter().all(|&l| eq(l, lens[0])) {
        return IsogonalVerdict::EqualLengths;
    }
    let alternating = lens.windows(3).all(|w| eq(w[0], w[2]) && !eq(w[0], w[1]));
    if alternating {
        IsogonalVerdict::AlternatingLengths
    } else {
        IsogonalVerdict::NotIsogonal
    }
}

/// The pattern this robot fires, if it may take an init light at all.
pub fn detect_init(view: &LocalView, tol: &Tolerances) -> Option<PatternVerdict> {
    if view.init_in_neighborhood() {
        return None;
    }
    match symmetry_level(view, tol) {
        SymmetryLevel::AnglesDiffer => angle_pattern(view, tol),
        SymmetryLevel::AnglesEqualOrientationsDiffer => orientation_pattern(view, tol),
        SymmetryLevel::FullAngleSymmetry => vector_length_pattern(view, tol),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{RobotLights, VIEW_RADIUS};
    use crate::geometry::{PlaneVector, Point2};
    use std::f64::consts::PI;

    /// A view whose vertex at offset k has interior angle `sizes[k+3]` and turn
    /// `turns[k+3]`, and whose vectors have lengths `lens[k+4]` (offsets -4..=4).
    fn view_from(sizes: [f64; 7], turns: [i8; 7], lens: [f64; 9]) -> LocalView {
        // Walk the chain: heading changes by (π - size) * turn at each vertex.
        let mut positions = [Point2::ORIGIN; 2 * VIEW_RADIUS + 1];
        let mut heading: f64 = 0.0;
        let mut p = Point2::ORIGIN;
        // exterior turn at each offset -4..=4; the two ends are irrelevant
        let turn_at = |k: isize| -> f64 {
            if (-3..=3).contains(&k) {
                let i = (k + 3) as usize;
                (PI - sizes[i]) * turns[i] as f64
            } else {
                0.0
            }
        };
        positions[0] = p;
        for k in -3..=4isize {
            let l = lens[(k + 4) as usize];
            p = p + PlaneVector::new(heading.cos(), heading.sin()) * l;
            positions[(k + 4) as usize] = p;
            heading += turn_at(k);
        }
        let shift = positions[4] - Point2::ORIGIN;
        for q in positions.iter_mut() {
            *q = *q - shift;
        }
        LocalView {
            positions,
            lights: [RobotLights::default(); 9],
            wraps_small: false,
        }
    }

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    const EVEN: [f64; 9] = [0.8; 9];

    #[test]
    fn builder_reproduces_angles() {
        let sizes = [2.0, 2.1, 2.2, 2.3, 2.4, 2.5, 2.6];
        let v = view_from(sizes, [1, -1, 1, 1, -1, 1, 1], EVEN);
        for k in -3..=3 {
            let a = v.angle(k, &tol());
            assert!((a.size - sizes[(k + 3) as usize]).abs() < 1e-9, "{k}");
        }
        assert_eq!(v.angle(-2, &tol()).turn, -1);
        assert_eq!(v.angle(0, &tol()).turn, 1);
    }

    #[test]
    fn symmetry_levels() {
        let hex = view_from([2.0 * PI / 3.0; 7], [1; 7], EVEN);
        assert_eq!(symmetry_level(&hex, &tol()), SymmetryLevel::FullAngleSymmetry);
        let flipped = view_from([2.0; 7], [1, 1, -1, 1, 1, 1, 1], EVEN);
        assert_eq!(
            symmetry_level(&flipped, &tol()),
            SymmetryLevel::AnglesEqualOrientationsDiffer
        );
        let mut sizes = [2.0; 7];
        sizes[4] += 0.1;
        let bumped = view_from(sizes, [1; 7], EVEN);
        assert_eq!(symmetry_level(&bumped, &tol()), SymmetryLevel::AnglesDiffer);
    }

    #[test]
    fn angle_pattern_variants() {
        let mk = |a: f64, b: f64, c: f64| view_from([2.0, 2.0, a, b, c, 2.0, 2.0], [1; 7], EVEN);
        assert_eq!(angle_pattern(&mk(1.5, 1.2, 1.2), &tol()).map(|v| v.variant), Some(1));
        assert_eq!(angle_pattern(&mk(1.2, 1.2, 1.5), &tol()).map(|v| v.variant), Some(2));
        assert_eq!(angle_pattern(&mk(1.2, 1.2, 1.2), &tol()), None);
    }

    #[test]
    fn orientation_pattern_variants() {
        // offsets -3..=3
        let v = view_from([2.0; 7], [1, -1, 1, -1, 1, 1, 1], EVEN);
        assert_eq!(orientation_pattern(&v, &tol()).map(|v| v.variant), Some(1));
        let v = view_from([2.0; 7], [-1, -1, 1, 1, -1, -1, -1], EVEN);
        assert_eq!(orientation_pattern(&v, &tol()).map(|v| v.variant), Some(2));
        let v = view_from([2.0; 7], [1; 7], EVEN);
        assert_eq!(orientation_pattern(&v, &tol()), None);
    }

    #[test]
    fn vector_pattern_variants() {
        let sizes = [2.5; 7];
        let turns = [1; 7];
        // offsets -4..=4: u_{-1}=1, u_0=0.6, u_1=1, u_2=1
        let v = view_from(sizes, turns, [1.0, 1.0, 1.0, 1.0, 0.6, 1.0, 1.0, 1.0, 1.0]);
        assert_eq!(vector_length_pattern(&v, &tol()).map(|v| v.variant), Some(1));
        let v = view_from(sizes, turns, [1.0, 1.0, 1.0, 0.7, 0.7, 1.0, 1.0, 1.0, 1.0]);
        assert_eq!(vector_length_pattern(&v, &tol()).map(|v| v.variant), Some(2));
        let v = view_from(sizes, turns, [0.9; 9]);
        assert_eq!(vector_length_pattern(&v, &tol()), None);
    }

    #[test]
    fn isogonal_verdicts() {
        let v = view_from([2.5; 7], [1; 7], [0.9; 9]);
        assert_eq!(locally_isogonal(&v, &tol()), IsogonalVerdict::EqualLengths);
        let v = view_from([2.5; 7], [1; 7], [0.5, 0.9, 0.5, 0.9, 0.5, 0.9, 0.5, 0.9, 0.5]);
        assert_eq!(locally_isogonal(&v, &tol()), IsogonalVerdict::AlternatingLengths);
        let v = view_from([2.5; 7], [1; 7], [0.5, 0.9, 0.5, 0.9, 0.6, 0.9, 0.5, 0.9, 0.5]);
        assert_eq!(locally_isogonal(&v, &tol()), IsogonalVerdict::NotIsogonal);
    }

    #[test]
    fn neighbouring_init_suppresses_detection() {
        let mut v = view_from([2.0, 2.0, 1.5, 1.2, 1.5, 2.0, 2.0], [1; 7], EVEN);
        assert!(detect_init(&v, &tol()).is_some());
        v.lights[6].init = crate::chain::InitKind::Single;
        assert_eq!(detect_init(&v, &tol()), None);
        let iso = view_from([2.5; 7], [1; 7], [0.9; 9]);
        assert_eq!(detect_init(&iso, &tol()), None);
    }
}
