//! Modified Henneberg construction in the plane.
//!
//! A weakly rigid 0-extension adds a vertex `ν` and the angles `θ^i_{jν}`,
//! `θ^j_{iν}`. A weakly rigid 1-extension also removes an edge `(i, j)` and
//! adds `θ^k_{ij}`. Each operation adds one vertex and nets two
//! constraints, so `|E| + |A| = 2n − 3` is preserved.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::framework::Framework;
use crate::graph::{AngleTriple, Edge, Graph};
use crate::rigidity::{is_minimally_weakly_rigid, Minimality};

/// Placement is rejected when any angle of the new triangle is below this.
pub const MIN_PLACEMENT_ANGLE_DEG: f64 = 5.0;
/// Placement is rejected when the new point is closer than this fraction of
/// the configuration diameter to an existing point.
pub const MIN_RELATIVE_SEPARATION: f64 = 0.1;
pub const MAX_PLACEMENT_ATTEMPTS: usize = 1000;
pub const DEFAULT_MIX: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtensionKind {
    Zero,
    One,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtensionStep {
    pub kind: ExtensionKind,
    pub new_vertex: usize,
    /// `[i, j]` for a 0-extension, `[i, j, k]` for a 1-extension.
    pub anchors: Vec<usize>,
    pub removed_edge: Option<Edge>,
    pub added_angles: Vec<AngleTriple>,
    pub new_position: [f64; 2],
}

impl ExtensionStep {
    /// Re-applies this step to `f`, which must have `new_vertex` vertices.
    pub fn apply(&self, f: &Framework) -> Result<Framework> {
        if f.n() != self.new_vertex {
            return Err(Error::BadAnchor(format!(
                "step adds vertex {} but framework has {} vertices",
                self.new_vertex,
                f.n()
            )));
        }
        let (out, step) = match (self.kind, self.anchors.as_slice()) {
            (ExtensionKind::Zero, &[i, j]) => zero_extension(f, i, j, self.new_position)?,
            (ExtensionKind::One, &[i, j, k]) => one_extension(f, i, j, k, self.new_position)?,
            _ => {
                return Err(Error::BadAnchor(format!(
                    "anchor list {:?} does not fit the step kind",
                    self.anchors
                )))
            }
        };
        if step.removed_edge != self.removed_edge || step.added_angles != self.added_angles {
            return Err(Error::Parse(
                "logged constraints do not match the replayed step".into(),
            ));
        }
        Ok(out)
    }
}

impl fmt::Display for ExtensionStep {
    /// One replayable log line.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            ExtensionKind::Zero => 0,
            ExtensionKind::One => 1,
        };
        let anchors: Vec<String> = self.anchors.iter().map(|a| a.to_string()).collect();
        let removed = match self.removed_edge {
            Some(e) => format!("{},{}", e.tail(), e.head()),
            None => "-".to_string(),
        };
        let angles: Vec<String> = self
            .added_angles
            .iter()
            .map(|a| format!("{}:{}:{}", a.apex, a.i, a.j))
            .collect();
        write!(
            f,
            "kind={kind} new_vertex={} anchors={} removed={removed} angles={} pos={},{}",
            self.new_vertex,
            anchors.join(","),
            angles.join(";"),
            self.new_position[0],
            self.new_position[1]
        )
    }
}

impl FromStr for ExtensionStep {
    type Err = Error;

    fn from_str(line: &str) -> Result<Self> {
        let bad = |what: &str| Error::Parse(format!("growth log: {what} in `{line}`"));
        let mut kind = None;
        let mut new_vertex = None;
        let mut anchors = None;
        let mut removed = None;
        let mut angles = None;
        let mut pos = None;
        for tok in line.split_whitespace() {
            let (key, value) = tok
                .split_once('=')
                .ok_or_else(|| bad("token without `=`"))?;
            match key {
                "kind" => {
                    kind = Some(match value {
                        "0" => ExtensionKind::Zero,
                        "1" => ExtensionKind::One,
                        _ => return Err(bad("unknown kind")),
                    })
                }
                "new_vertex" => {
                    new_vertex = Some(value.parse::<usize>().map_err(|_| bad("bad new_vertex"))?)
                }
                "anchors" => {
                    anchors = Some(
                        value
                            .split(',')
                            .map(|s| s.parse::<usize>())
                            .collect::<std::result::Result<Vec<_>, _>>()
                            .map_err(|_| bad("bad anchors"))?,
                    )
                }
                "removed" => {
                    removed = Some(if value == "-" {
                        None
                    } else {
                        let (a, b) = value
                            .split_once(',')
                            .ok_or_else(|| bad("bad removed edge"))?;
                        let a = a.parse().map_err(|_| bad("bad removed edge"))?;
                        let b = b.parse().map_err(|_| bad("bad removed edge"))?;
                        Some(Edge::new(a, b))
                    })
                }
                "angles" => {
                    let mut list = Vec::new();
                    for t in value.split(';') {
                        let parts: Vec<usize> = t
                            .split(':')
                            .map(|s| s.parse::<usize>())
                            .collect::<std::result::Result<_, _>>()
                            .map_err(|_| bad("bad angle"))?;
                        if parts.len() != 3 {
                            return Err(bad("bad angle"));
                        }
                        list.push(AngleTriple::new(parts[0], parts[1], parts[2]));
                    }
                    angles = Some(list);
                }
                "pos" => {
                    let (x, y) = value.split_once(',').ok_or_else(|| bad("bad pos"))?;
                    let x = x.parse::<f64>().map_err(|_| bad("bad pos"))?;
                    let y = y.parse::<f64>().map_err(|_| bad("bad pos"))?;
                    pos = Some([x, y]);
                }
                _ => return Err(bad("unknown key")),
            }
        }
        Ok(ExtensionStep {
            kind: kind.ok_or_else(|| bad("missing kind"))?,
            new_vertex: new_vertex.ok_or_else(|| bad("missing new_vertex"))?,
            anchors: anchors.ok_or_else(|| bad("missing anchors"))?,
            removed_edge: removed.ok_or_else(|| bad("missing removed"))?,
            added_angles: angles.ok_or_else(|| bad("missing angles"))?,
            new_position: pos.ok_or_else(|| bad("missing pos"))?,
        })
    }
}

fn require_plane(f: &Framework) -> Result<()> {
    if f.dim() != 2 {
        return Err(Error::WrongDimension {
            expected: 2,
            found: f.dim(),
        });
    }
    Ok(())
}

fn check_anchor(f: &Framework, v: usize) -> Result<()> {
    if v >= f.n() {
        return Err(Error::BadAnchor(format!(
            "vertex {v} not in framework with {} vertices",
            f.n()
        )));
    }
    Ok(())
}

/// `|sin|` of the angle at `a` between `b − a` and `c − a`.
fn abs_sine(a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    let u = [b[0] - a[0], b[1] - a[1]];
    let v = [c[0] - a[0], c[1] - a[1]];
    let cross = u[0] * v[1] - u[1] * v[0];
    let nu = u[0].hypot(u[1]);
    let nv = v[0].hypot(v[1]);
    (cross / (nu * nv)).abs()
}

fn check_placement(f: &Framework, i: usize, j: usize, pos: [f64; 2]) -> Result<()> {
    if abs_sine(f.point(i), f.point(j), &pos) < 1e-9 || !pos.iter().all(|x| x.is_finite()) {
        return Err(Error::CollinearPlacement(i, j));
    }
    Ok(())
}

fn extended(
    f: &Framework,
    edges: Vec<Edge>,
    angles: Vec<AngleTriple>,
    pos: [f64; 2],
) -> Result<Framework> {
    let graph = Graph::from_parts(f.n() + 1, edges, angles)?;
    let mut p = f.positions().to_vec();
    p.extend_from_slice(&pos);
    Framework::from_flat(graph, 2, p)
}

fn zero_extension(
    f: &Framework,
    i: usize,
    j: usize,
    pos: [f64; 2],
) -> Result<(Framework, ExtensionStep)> {
    require_plane(f)?;
    check_anchor(f, i)?;
    check_anchor(f, j)?;
    if i == j {
        return Err(Error::BadAnchor(format!("anchors coincide ({i})")));
    }
    check_placement(f, i, j, pos)?;
    let nu = f.n();
    let added = vec![AngleTriple::new(i, j, nu), AngleTriple::new(j, i, nu)];
    let mut angles = f.graph().angles().to_vec();
    angles.extend(&added);
    let out = extended(f, f.graph().edges().to_vec(), angles, pos)?;
    Ok((
        out,
        ExtensionStep {
            kind: ExtensionKind::Zero,
            new_vertex: nu,
            anchors: vec![i, j],
            removed_edge: None,
            added_angles: added,
            new_position: pos,
        },
    ))
}

fn one_extension(
    f: &Framework,
    i: usize,
    j: usize,
    k: usize,
    pos: [f64; 2],
) -> Result<(Framework, ExtensionStep)> {
    require_plane(f)?;
    for v in [i, j, k] {
        check_anchor(f, v)?;
    }
    if i == j || k == i || k == j {
        return Err(Error::BadAnchor(format!(
            "anchors ({i}, {j}, {k}) must be distinct"
        )));
    }
    let removed = Edge::new(i, j);
    if !f.graph().has_edge(removed) {
        return Err(Error::EdgeNotFound(removed));
    }
    check_placement(f, i, j, pos)?;
    let nu = f.n();
    let added = vec![
        AngleTriple::new(i, j, nu),
        AngleTriple::new(j, i, nu),
        AngleTriple::new(k, i, j),
    ];
    let edges: Vec<Edge> = f
        .graph()
        .edges()
        .iter()
        .copied()
        .filter(|e| *e != removed)
        .collect();
    let mut angles = f.graph().angles().to_vec();
    angles.extend(&added);
    let out = extended(f, edges, angles, pos)?;
    Ok((
        out,
        ExtensionStep {
            kind: ExtensionKind::One,
            new_vertex: nu,
            anchors: vec![i, j, k],
            removed_edge: Some(removed),
            added_angles: added,
            new_position: pos,
        },
    ))
}

/// Adds vertex `n` at `pos` with the angles `θ^i_{jν}` and `θ^j_{iν}`.
pub fn weakly_rigid_0_extension(
    f: &Framework,
    i: usize,
    j: usize,
    pos: [f64; 2],
) -> Result<Framework> {
    zero_extension(f, i, j, pos).map(|(out, _)| out)
}

/// Removes edge `(i, j)`, adds vertex `n` at `pos` with `θ^i_{jν}`,
/// `θ^j_{iν}` and `θ^k_{ij}`.
pub fn weakly_rigid_1_extension(
    f: &Framework,
    i: usize,
    j: usize,
    k: usize,
    pos: [f64; 2],
) -> Result<Framework> {
    one_extension(f, i, j, k, pos).map(|(out, _)| out)
}

/// Output of [`grow_random`].
#[derive(Debug, Clone)]
pub struct Growth {
    /// The seed followed by the framework after each step.
    pub frameworks: Vec<Framework>,
    pub steps: Vec<ExtensionStep>,
    /// Placements that passed the geometric filters but failed the
    /// minimality re-check, per step.
    pub verification_rejections: Vec<usize>,
}

impl Growth {
    pub fn last(&self) -> &Framework {
        self.frameworks
            .last()
            .expect("growth always holds the seed")
    }

    pub fn log(&self) -> String {
        self.steps.iter().map(|s| format!("{s}\n")).collect()
    }
}

/// Grows `steps` random extensions from a minimally (weakly) rigid seed.
///
/// `mix` is the probability of choosing a 0-extension. A 1-extension is
/// replaced by a 0-extension when fewer than two edges remain, since
/// removing the last edge would leave the scale unconstrained.
pub fn grow_random(
    seed: &Framework,
    steps: usize,
    rng_seed: u64,
    mix: f64,
    rel_tol: f64,
) -> Result<Growth> {
    require_plane(seed)?;
    if !(0.0..=1.0).contains(&mix) {
        return Err(Error::InvalidParameter(format!("mix {mix} outside [0, 1]")));
    }
    match is_minimally_weakly_rigid(seed, rel_tol) {
        Ok(Minimality::Minimal) => {}
        Ok(other) => return Err(Error::SeedNotRigid(format!("{other:?}"))),
        Err(e) => return Err(Error::SeedNotRigid(e.to_string())),
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut growth = Growth {
        frameworks: vec![seed.clone()],
        steps: Vec::with_capacity(steps),
        verification_rejections: Vec::with_capacity(steps),
    };
    for _ in 0..steps {
        let current = growth.last().clone();
        let zero = rng.random::<f64>() < mix || current.graph().m() < 2;
        let (next, step, rejected) = extend_random(&current, zero, &mut rng, rel_tol)?;
        growth.frameworks.push(next);
        growth.steps.push(step);
        growth.verification_rejections.push(rejected);
    }
    Ok(growth)
}

fn extend_random(
    f: &Framework,
    zero: bool,
    rng: &mut ChaCha8Rng,
    rel_tol: f64,
) -> Result<(Framework, ExtensionStep, usize)> {
    let n = f.n();
    let diam = f.diameter();
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for v in 0..n {
        for d in 0..2 {
            lo[d] = lo[d].min(f.point(v)[d]);
            hi[d] = hi[d].max(f.point(v)[d]);
        }
    }
    for d in 0..2 {
        lo[d] -= 0.5 * diam;
        hi[d] += 0.5 * diam;
    }
    let min_sine = MIN_PLACEMENT_ANGLE_DEG.to_radians().sin();
    let mut rejected = 0;

    for _ in 0..MAX_PLACEMENT_ATTEMPTS {
        let (i, j, k) = if zero {
            let i = rng.random_range(0..n);
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            (i, j, None)
        } else {
            let e = f.graph().edges()[rng.random_range(0..f.graph().m())];
            let mut k = rng.random_range(0..n - 2);
            let (a, b) = (e.tail(), e.head());
            if k >= a {
                k += 1;
            }
            if k >= b {
                k += 1;
            }
            (a, b, Some(k))
        };
        let pos = [
            rng.random_range(lo[0]..hi[0]),
            rng.random_range(lo[1]..hi[1]),
        ];

        let (pi, pj) = (f.point(i), f.point(j));
        let well_shaped = |a: &[f64], b: &[f64], c: &[f64]| {
            abs_sine(a, b, c) > min_sine
                && abs_sine(b, a, c) > min_sine
                && abs_sine(c, a, b) > min_sine
        };
        if !well_shaped(pi, pj, &pos) {
            continue;
        }
        if let Some(k) = k {
            if !well_shaped(f.point(k), pi, pj) {
                continue;
            }
        }
        let too_close = (0..n).any(|v| {
            let q = f.point(v);
            (q[0] - pos[0]).hypot(q[1] - pos[1]) <= MIN_RELATIVE_SEPARATION * diam
        });
        if too_close {
            continue;
        }

        let (next, step) = match k {
            None => zero_extension(f, i, j, pos)?,
            Some(k) => one_extension(f, i, j, k, pos)?,
        };
        if is_minimally_weakly_rigid(&next, rel_tol)?.is_minimal() {
            return Ok((next, step, rejected));
        }
        rejected += 1;
    }
    Err(Error::PlacementExhausted(MAX_PLACEMENT_ATTEMPTS))
}

/// Rebuilds the sequence from a seed and a growth log.
pub fn replay(seed: &Framework, log: &str) -> Result<Vec<Framework>> {
    let mut out = vec![seed.clone()];
    for line in log.lines().filter(|l| !l.trim().is_empty()) {
        let step: ExtensionStep = line.parse()?;
        let next = step.apply(out.last().expect("non-empty"))?;
        out.push(next);
    }
    Ok(out)
}

/// The triangle used as the default growth seed: `K3` at
/// `(−1.732, 0)`, `(0, 1)`, `(0, −1)`.
pub fn triangle_seed() -> Framework {
    Framework::new(
        Graph::complete(3),
        2,
        &[vec![-1.732, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]],
    )
    .expect("valid triangle")
}
