//! Initial configurations: regular and translated star polygons, jittered rings,
//! and the doubled-back straight line.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::chain::chain_length;
use crate::geometry::{vertex_angle, Point2};
use crate::tolerance::Tolerances;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum GeneratorError {
    #[error("n and d must be coprime")]
    NotCoprime,
    #[error("degenerate parameters: {0}")]
    DegenerateParameters(String),
    #[error("n must be even")]
    OddN,
    #[error("no non-isogonal sample after {0} attempts")]
    RetriesExhausted(u32),
}

pub fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn check_edge(edge: f64) -> Result<(), GeneratorError> {
    if edge > 0.0 && edge <= 1.0 {
        Ok(())
    } else {
        Err(GeneratorError::DegenerateParameters(format!(
            "edge {edge} outside (0, 1]"
        )))
    }
}

/// `{n/d}` with chord length `edge`: vertex j at polar angle 2πdj/n.
pub fn regular_star(n: usize, d: usize, edge: f64) -> Result<Vec<Point2>, GeneratorError> {
    if n < 3 || d < 1 || 2 * d >= n {
        return Err(GeneratorError::DegenerateParameters(format!(
            "need n ≥ 3 and 1 ≤ d < n/2, got n={n}, d={d}"
        )));
    }
    if gcd(n, d) != 1 {
        return Err(GeneratorError::NotCoprime);
    }
    check_edge(edge)?;
    let r = edge / (2.0 * (PI * d as f64 / n as f64).sin());
    Ok((0..n)
        .map(|j| {
            let a = TAU * (d * j) as f64 / n as f64;
            Point2::new(r * a.cos(), r * a.sin())
        })
        .collect())
}

/// Isogonal polygon with two alternating edge lengths: vertex j at polar angle
/// (2π/n)(jd + (-1)^j t), scaled so the longer edge is `edge_max`.
pub fn translated_isogonal(n: usize, d: usize, t: f64, edge_max: f64) -> Result<Vec<Point2>, GeneratorError> {
    if n % 2 == 1 {
        return Err(GeneratorError::OddN);
    }
    if n < 4 || d < 1 {
        return Err(GeneratorError::DegenerateParameters(format!("n={n}, d={d}")));
    }
    if gcd(n, d) != 1 {
        return Err(GeneratorError::NotCoprime);
    }
    if !(t > 0.0 && t < n as f64 / 2.0) {
        return Err(GeneratorError::DegenerateParameters(format!("t {t} outside (0, n/2)")));
    }
    check_edge(edge_max)?;
    let angle = |j: usize| {
        let sign = if j.is_multiple_of(2) { 1.0 } else { -1.0 };
        TAU / n as f64 * (j as f64 * d as f64 + sign * t)
    };
    let unit: Vec<Point2> = (0..n).map(|j| Point2::new(angle(j).cos(), angle(j).sin())).collect();
    let longest = (0..n).map(|j| unit[j].distance(unit[(j + 1) % n])).fold(0.0, f64::max);
    let shortest = (0..n)
        .map(|j| unit[j].distance(unit[(j + 1) % n]))
        .fold(f64::INFINITY, f64::min);
    if shortest < 1e-9 * longest {
        return Err(GeneratorError::DegenerateParameters(format!(
            "t {t} makes neighbouring vertices coincide"
        )));
    }
    let scale = edge_max / longest;
    Ok(unit
        .into_iter()
        .map(|p| Point2::new(p.x * scale, p.y * scale))
        .collect())
}

/// Whether the closed chain is isogonal: equal interior angles with a common turn,
/// and one edge length or two strictly alternating ones.
pub fn is_isogonal(points: &[Point2], tol: &Tolerances) -> bool {
    let n = points.len();
    if n < 3 {
        return false;
    }
    let at = |k: usize| points[k % n];
    let mut angles = Vec::with_capacity(n);
    for k in 0..n {
        match vertex_angle(at(k + n - 1), at(k), at(k + 1), tol) {
            Ok(a) => angles.push(a),
            Err(_) => return false,
        }
    }
    if angles
        .iter()
        .any(|a| (a.size - angles[0].size).abs() > tol.ang || a.turn != angles[0].turn)
    {
        return false;
    }
    let lens: Vec<f64> = (0..n).map(|k| at(k).distance(at(k + 1))).collect();
    let eq = |a: f64, b: f64| (a - b).abs() <= tol.len;
    if lens.iter().all(|&l| eq(l, lens[0])) {
        return true;
    }
    n.is_multiple_of(2) && (0..n).all(|k| eq(lens[k], lens[(k + 2) % n]) && !eq(lens[k], lens[(k + 1) % n]))
}

pub const PERTURB_RETRIES: u32 = 64;

/// Regular n-gon with edge `base_edge`, each vertex jittered uniformly in a disk of
/// radius `jitter` (ChaCha8 seeded by `seed`), rescaled so no edge exceeds 1.
pub fn perturbed_chain(n: usize, base_edge: f64, jitter: f64, seed: u64) -> Result<Vec<Point2>, GeneratorError> {
    if n < 3 {
        return Err(GeneratorError::DegenerateParameters(format!("n={n}")));
    }
    check_edge(base_edge)?;
    if !(jitter >= 0.0 && jitter.is_finite()) {
        return Err(GeneratorError::DegenerateParameters(format!("jitter {jitter}")));
    }
    let base = regular_star(n, 1, base_edge)?;
    if jitter == 0.0 {
        return Ok(base);
    }
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..PERTURB_RETRIES {
        let mut pts: Vec<Point2> = base
            .iter()
            .map(|p| {
                let r = jitter * rng.gen::<f64>().sqrt();
                let a = rng.gen_range(0.0..TAU);
                Point2::new(p.x + r * a.cos(), p.y + r * a.sin())
            })
            .collect();
        let longest = (0..n).map(|k| pts[k].distance(pts[(k + 1) % n])).fold(0.0, f64::max);
        if !(longest > 0.0 && longest.is_finite()) {
            continue;
        }
        if longest > 1.0 {
            let s = 1.0 / longest;
            pts.iter_mut().for_each(|p| *p = Point2::new(p.x * s, p.y * s));
        }
        if (0..n).all(|k| pts[k].distance(pts[(k + 1) % n]) > tol.len) && !is_isogonal(&pts, &tol) {
            return Ok(pts);
        }
    }
    Err(GeneratorError::RetriesExhausted(PERTURB_RETRIES))
}

/// A straight segment walked out and back, so the closed chain lies flat.
pub fn line_cycle(n: usize, spacing: f64) -> Result<Vec<Point2>, GeneratorError> {
    if n < 4 || n % 2 == 1 {
        return Err(GeneratorError::DegenerateParameters(format!(
            "line cycle needs an even n ≥ 4, got {n}"
        )));
    }
    check_edge(spacing)?;
    let half = n / 2;
    Ok((0..n)
        .map(|j| {
            let k = if j <= half { j } else { n - j };
            Point2::new(k as f64 * spacing, 0.0)
        })
        .collect())
}

/// Total length of a generated ring, for summaries.
pub fn ring_length(points: &[Point2]) -> f64 {
    chain_length(points)
}
