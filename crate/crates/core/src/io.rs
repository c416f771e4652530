//! Configuration files, JSON Lines traces and SVG frames.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{ChainConfiguration, InitKind, RobotId};
use crate::engine::{Cause, Counters, Event, RoundTrace};
use crate::geometry::Point2;
use crate::moves::MoveKind;

pub const CONFIG_FORMAT: &str = "chain-gather/1";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("unknown format {0:?}")]
    UnknownFormat(String),
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Serialize, Deserialize)]
struct ConfigFile {
    format: String,
    positions: Vec<[f64; 2]>,
}

pub fn config_to_string(positions: &[Point2]) -> String {
    let file = ConfigFile {
        format: CONFIG_FORMAT.to_string(),
        positions: positions.iter().map(|p| [p.x, p.y]).collect(),
    };
    let mut s = serde_json::to_string_pretty(&file).expect("positions serialize");
    s.push('\n');
    s
}

pub fn config_from_str(text: &str) -> Result<Vec<Point2>, IoError> {
    let file: ConfigFile = serde_json::from_str(text).map_err(|source| IoError::Json { line: 1, source })?;
    if file.format != CONFIG_FORMAT {
        return Err(IoError::UnknownFormat(file.format));
    }
    Ok(file.positions.into_iter().map(|[x, y]| Point2::new(x, y)).collect())
}

#[derive(Serialize, Deserialize)]
struct EventRecord {
    robot: u32,
    op: MoveKind,
    pre_vec_lens: Vec<f64>,
    cause: Cause,
}

#[derive(Serialize, Deserialize)]
struct TraceRecord {
    round: u64,
    n: usize,
    #[serde(rename = "L_before")]
    l_before: f64,
    #[serde(rename = "L_after")]
    l_after: f64,
    events: Vec<EventRecord>,
    counters: Counters,
    seed: u64,
}

/// One trace line, without the trailing newline.
pub fn trace_line(t: &RoundTrace) -> String {
    let rec = TraceRecord {
        round: t.round,
        n: t.n_before,
        l_before: t.chain_length_before,
        l_after: t.chain_length_after,
        events: t
            .events
            .iter()
            .map(|e| EventRecord {
                robot: e.robot.0,
                op: e.op,
                pre_vec_lens: e.pre_vec_lens.clone(),
                cause: e.cause,
            })
            .collect(),
        counters: t.counters.clone(),
        seed: t.seed,
    };
    serde_json::to_string(&rec).expect("trace serializes")
}

/// Parses one line. The robot count after the round is not stored; every merge
/// event removes exactly one robot.
pub fn parse_trace_line(line: &str, line_no: usize) -> Result<RoundTrace, IoError> {
    let rec: TraceRecord = serde_json::from_str(line).map_err(|source| IoError::Json { line: line_no, source })?;
    let merges = rec
        .events
        .iter()
        .filter(|e| matches!(e.op, MoveKind::Merge | MoveKind::JointMerge))
        .count();
    Ok(RoundTrace {
        round: rec.round,
        n_before: rec.n,
        n_after: rec.n.saturating_sub(merges),
        chain_length_before: rec.l_before,
        chain_length_after: rec.l_after,
        events: rec
            .events
            .into_iter()
            .map(|e| Event {
                robot: RobotId(e.robot),
                op: e.op,
                pre_vec_lens: e.pre_vec_lens,
                cause: e.cause,
            })
            .collect(),
        counters: rec.counters,
        seed: rec.seed,
    })
}

pub fn write_trace_line<W: Write>(out: &mut W, t: &RoundTrace) -> std::io::Result<()> {
    writeln!(out, "{}", trace_line(t))
}

pub fn read_trace<R: BufRead>(input: R) -> Result<Vec<RoundTrace>, IoError> {
    let mut traces = Vec::new();
    for (k, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        traces.push(parse_trace_line(&line, k + 1)?);
    }
    Ok(traces)
}

/// A frame of the chain: edges, robots, run holders in red, inits in blue.
pub fn render_svg(config: &ChainConfiguration, size: u32) -> String {
    let pts = config.positions();
    let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for p in &pts {
        x0 = x0.min(p.x);
        y0 = y0.min(p.y);
        x1 = x1.max(p.x);
        y1 = y1.max(p.y);
    }
    let span = (x1 - x0).max(y1 - y0).max(1e-9);
    let margin = 0.05 * span + 0.5;
    let scale = size as f64 / (span + 2.0 * margin);
    let map = |p: &Point2| ((p.x - x0 + margin) * scale, (y1 - p.y + margin) * scale);
    let dot = (0.08 * scale).clamp(1.0, 6.0);
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{size}\" height=\"{size}\" viewBox=\"0 0 {size} {size}\">\n"
    );
    s.push_str(&format!(
        "<rect width=\"{size}\" height=\"{size}\" fill=\"white\"/>\n<text x=\"4\" y=\"14\" font-size=\"12\">round {} n={}</text>\n",
        config.round,
        pts.len()
    ));
    if pts.len() > 1 {
        let path: Vec<String> = pts
            .iter()
            .map(|p| {
                let (x, y) = map(p);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        s.push_str(&format!(
            "<polygon points=\"{}\" fill=\"none\" stroke=\"#888\" stroke-width=\"1\"/>\n",
            path.join(" ")
        ));
    }
    for r in &config.robots {
        let (x, y) = map(&r.pos);
        let fill = if r.lights.run_here {
            "#d62728"
        } else if r.lights.init != InitKind::None {
            "#1f77b4"
        } else {
            "#333"
        };
        s.push_str(&format!(
            "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"{dot:.2}\" fill=\"{fill}\"/>\n"
        ));
    }
    s.push_str("</svg>\n");
    s
}
