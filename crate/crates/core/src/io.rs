//! File formats: framework and target JSON, report JSON and trace CSV.
//!
//! Framework files look like
//! `{"dim": 2, "positions": [[x, y], ...], "edges": [[i, j], ...], "angles": [[k, i, j], ...]}`
//! and target files like
//! `{"sq_distances": [[i, j, d2], ...], "cosines": [[k, i, j, c], ...], "cosines_deg": [[k, i, j, deg], ...]}`.
//! Every parse error carries the line it was detected on.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formation::{SimulationTrace, TargetSpec};
use crate::framework::Framework;
use crate::graph::{AngleTriple, Constraint, Edge, Graph};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameworkFile {
    pub dim: usize,
    pub positions: Vec<Vec<f64>>,
    #[serde(default)]
    pub edges: Vec<[usize; 2]>,
    #[serde(default)]
    pub angles: Vec<[usize; 3]>,
}

impl FrameworkFile {
    pub fn from_framework(f: &Framework) -> Self {
        FrameworkFile {
            dim: f.dim(),
            positions: f.points(),
            edges: f.graph().edges().iter().map(|&e| e.into()).collect(),
            angles: f.graph().angles().iter().map(|&a| a.into()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetFile {
    #[serde(default)]
    pub sq_distances: Vec<(usize, usize, f64)>,
    #[serde(default)]
    pub cosines: Vec<(usize, usize, usize, f64)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cosines_deg: Vec<(usize, usize, usize, f64)>,
}

impl TargetFile {
    pub fn from_targets(t: &TargetSpec) -> Self {
        let mut out = TargetFile {
            sq_distances: Vec::new(),
            cosines: Vec::new(),
            cosines_deg: Vec::new(),
        };
        for &(c, v) in t.entries() {
            match c {
                Constraint::Distance(e) => out.sq_distances.push((e.tail(), e.head(), v)),
                Constraint::Angle(a) => out.cosines.push((a.apex, a.i, a.j, v)),
            }
        }
        out
    }
}

/// 1-based line of the first occurrence of `"key"`, or 1.
fn line_of_key(text: &str, key: &str) -> usize {
    let quoted = format!("\"{key}\"");
    text.lines()
        .position(|l| l.contains(&quoted))
        .map_or(1, |i| i + 1)
}

fn json_error(e: serde_json::Error) -> Error {
    let msg = e.to_string();
    let msg = msg
        .rsplit_once(" at line ")
        .map_or(msg.as_str(), |(head, _)| head);
    Error::Parse(format!("line {}, column {}: {msg}", e.line(), e.column()))
}

fn at_line(line: usize, e: Error) -> Error {
    Error::Parse(format!("line {line}: {e}"))
}

pub fn parse_framework(text: &str) -> Result<Framework> {
    let file: FrameworkFile = serde_json::from_str(text).map_err(json_error)?;
    let edges: Vec<(usize, usize)> = file.edges.iter().map(|e| (e[0], e[1])).collect();
    let angles: Vec<(usize, usize, usize)> =
        file.angles.iter().map(|a| (a[0], a[1], a[2])).collect();
    let n = file.positions.len();
    Graph::new(n, &edges, &[]).map_err(|e| at_line(line_of_key(text, "edges"), e))?;
    let graph =
        Graph::new(n, &edges, &angles).map_err(|e| at_line(line_of_key(text, "angles"), e))?;
    Framework::new(graph, file.dim, &file.positions).map_err(|e| {
        let key = if matches!(e, Error::UnsupportedDimension(_)) {
            "dim"
        } else {
            "positions"
        };
        at_line(line_of_key(text, key), e)
    })
}

pub fn framework_to_json(f: &Framework) -> String {
    let mut s = serde_json::to_string_pretty(&FrameworkFile::from_framework(f))
        .expect("plain data serializes");
    s.push('\n');
    s
}

/// Parses targets and reorders them into the row order of `g`.
pub fn parse_targets(text: &str, g: &Graph) -> Result<TargetSpec> {
    let file: TargetFile = serde_json::from_str(text).map_err(json_error)?;
    let d: Vec<(Edge, f64)> = file
        .sq_distances
        .iter()
        .map(|&(i, j, v)| (Edge::new(i, j), v))
        .collect();
    let mut c: Vec<(AngleTriple, f64)> = file
        .cosines
        .iter()
        .map(|&(k, i, j, v)| (AngleTriple::new(k, i, j), v))
        .collect();
    c.extend(
        file.cosines_deg
            .iter()
            .map(|&(k, i, j, deg)| (AngleTriple::new(k, i, j), deg.to_radians().cos())),
    );
    let spec =
        TargetSpec::new(&d, &c).map_err(|e| at_line(line_of_key(text, "sq_distances"), e))?;
    spec.aligned_to(g)
}

pub fn targets_to_json(t: &TargetSpec) -> String {
    let mut s =
        serde_json::to_string_pretty(&TargetFile::from_targets(t)).expect("plain data serializes");
    s.push('\n');
    s
}

/// Pretty JSON of any report type, newline-terminated.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

pub fn from_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(json_error)
}

fn error_column(c: &Constraint, angle_count: usize) -> String {
    match c {
        Constraint::Distance(e) => format!("e{}{}", e.tail() + 1, e.head() + 1),
        Constraint::Angle(_) if angle_count == 1 => "ecos".to_string(),
        Constraint::Angle(a) => format!("ecos{}_{}_{}", a.apex + 1, a.i + 1, a.j + 1),
    }
}

/// Header of [`trace_to_csv`]. For the three-agent system this is
/// `time,x1,y1,x2,y2,x3,y3,e12,e13,ecos,V,detZ`.
pub fn trace_header(trace: &SimulationTrace) -> String {
    let axes = ["x", "y", "z"];
    let n = trace.positions.first().map_or(0, |p| p.len() / trace.dim);
    let angle_count = trace
        .row_labels
        .iter()
        .filter(|c| matches!(c, Constraint::Angle(_)))
        .count();
    let mut cols = vec!["time".to_string()];
    for i in 0..n {
        for axis in &axes[..trace.dim] {
            cols.push(format!("{axis}{}", i + 1));
        }
    }
    cols.extend(
        trace
            .row_labels
            .iter()
            .map(|c| error_column(c, angle_count)),
    );
    cols.push("V".into());
    if trace.det_z.is_some() {
        cols.push("detZ".into());
    }
    cols.join(",")
}

/// One row per sample, numbers with 17 significant digits.
pub fn trace_to_csv(trace: &SimulationTrace) -> String {
    let mut s = trace_header(trace);
    s.push('\n');
    for k in 0..trace.len() {
        let _ = write!(s, "{:.16e}", trace.times[k]);
        for x in trace.positions[k].iter().chain(&trace.errors[k]) {
            let _ = write!(s, ",{x:.16e}");
        }
        let _ = write!(s, ",{:.16e}", trace.lyapunov[k]);
        if let Some(d) = &trace.det_z {
            let _ = write!(s, ",{:.16e}", d[k]);
        }
        s.push('\n');
    }
    s
}
