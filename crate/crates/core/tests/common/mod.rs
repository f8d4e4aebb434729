//! Random framework generators and independent oracles shared by the
//! integration tests. Nothing here calls the library's analytic code: the
//! oracles evaluate angles with `atan2`, differentiate numerically and
//! compute rank by column-pivoted QR.

#![allow(dead_code)]

use std::path::PathBuf;

use nalgebra::DMatrix;
use proptest::test_runner::{Config, RngSeed};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use weakrig::formation::TargetSpec;
use weakrig::io::{parse_framework, parse_targets};
use weakrig::{Framework, Graph};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

pub fn load(name: &str) -> Framework {
    let text = std::fs::read_to_string(data_path(name)).expect("fixture exists");
    parse_framework(&text).expect("fixture parses")
}

pub fn load_targets(name: &str, g: &Graph) -> TargetSpec {
    let text = std::fs::read_to_string(data_path(name)).expect("fixture exists");
    parse_targets(&text, g).expect("targets parse")
}

/// Points in `[-2, 2]^dim`, pairwise at least 0.3 apart and, in the plane,
/// no triple with an angle within about 6 degrees of 0 or 180.
pub fn well_spread_points(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<Vec<f64>> {
    'retry: loop {
        let pts: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        for i in 0..n {
            for j in i + 1..n {
                if dist(&pts[i], &pts[j]) < 0.3 {
                    continue 'retry;
                }
                for k in 0..n {
                    if k != i && k != j && oracle_angle(&pts[k], &pts[i], &pts[j]).sin().abs() < 0.1
                    {
                        continue 'retry;
                    }
                }
            }
        }
        return pts;
    }
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Angle at `k` between the rays to `i` and `j`, via atan2 of the cross
/// and dot products.
pub fn oracle_angle(k: &[f64], i: &[f64], j: &[f64]) -> f64 {
    let u: Vec<f64> = i.iter().zip(k).map(|(a, b)| a - b).collect();
    let v: Vec<f64> = j.iter().zip(k).map(|(a, b)| a - b).collect();
    let dot: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
    let cross = if u.len() == 2 {
        (u[0] * v[1] - u[1] * v[0]).abs()
    } else {
        let c = [
            u[1] * v[2] - u[2] * v[1],
            u[2] * v[0] - u[0] * v[2],
            u[0] * v[1] - u[1] * v[0],
        ];
        (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt()
    };
    cross.atan2(dot)
}

/// Squared lengths then angle cosines, computed without the library.
pub fn oracle_constraints(g: &Graph, dim: usize, p: &[f64]) -> Vec<f64> {
    let pt = |v: usize| &p[v * dim..(v + 1) * dim];
    let mut out: Vec<f64> = g
        .edges()
        .iter()
        .map(|e| dist(pt(e.tail()), pt(e.head())).powi(2))
        .collect();
    out.extend(
        g.angles()
            .iter()
            .map(|a| oracle_angle(pt(a.apex), pt(a.i), pt(a.j)).cos()),
    );
    out
}

/// Central-difference Jacobian of [`oracle_constraints`].
pub fn oracle_jacobian(f: &Framework, step: f64) -> DMatrix<f64> {
    let g = f.graph();
    let p = f.positions().to_vec();
    let mut jac = DMatrix::zeros(g.constraint_count(), p.len());
    for c in 0..p.len() {
        let mut plus = p.clone();
        let mut minus = p.clone();
        plus[c] += step;
        minus[c] -= step;
        let fp = oracle_constraints(g, f.dim(), &plus);
        let fm = oracle_constraints(g, f.dim(), &minus);
        for r in 0..fp.len() {
            jac[(r, c)] = (fp[r] - fm[r]) / (2.0 * step);
        }
    }
    jac
}

/// Rank from the diagonal of a column-pivoted QR factorization.
pub fn oracle_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let qr = m.clone().col_piv_qr();
    let r = qr.r();
    let diag: Vec<f64> = (0..r.nrows().min(r.ncols()))
        .map(|i| r[(i, i)].abs())
        .collect();
    let top = diag.iter().cloned().fold(0.0, f64::max);
    if top == 0.0 {
        return 0;
    }
    diag.iter().filter(|&&d| d > rel_tol * top).count()
}

/// A random constraint graph on `n` vertices. Each pair becomes an edge with
/// probability `p_edge`, each angle triple is kept with probability
/// `p_angle`; at least one constraint is always present.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, p_edge: f64, p_angle: f64) -> Graph {
    loop {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random::<f64>() < p_edge {
                    edges.push((i, j));
                }
            }
        }
        let mut angles = Vec::new();
        for k in 0..n {
            for i in 0..n {
                for j in i + 1..n {
                    if i != k && j != k && rng.random::<f64>() < p_angle {
                        angles.push((k, i, j));
                    }
                }
            }
        }
        if edges.len() + angles.len() > 0 {
            return Graph::new(n, &edges, &angles).expect("valid by construction");
        }
    }
}

/// Random planar framework with `3..=max_n` vertices.
pub fn random_planar_framework(rng: &mut ChaCha8Rng, max_n: usize, with_edges: bool) -> Framework {
    let n = rng.random_range(3..=max_n);
    let p_edge = if with_edges { 0.4 } else { 0.0 };
    let mut g = random_graph(rng, n, p_edge, 0.25);
    if with_edges && g.m() == 0 {
        g = g
            .with(weakrig::Constraint::Distance(weakrig::Edge::new(0, 1)))
            .unwrap();
    }
    Framework::new(g, 2, &well_spread_points(rng, n, 2)).unwrap()
}

/// Three-agent framework: edges apex-b and apex-c and the angle at apex,
/// with random vertex roles and random positions.
pub fn random_three_agent(rng: &mut ChaCha8Rng) -> Framework {
    let apex = rng.random_range(0..3);
    let others: Vec<usize> = (0..3).filter(|&v| v != apex).collect();
    let g = Graph::new(
        3,
        &[(apex, others[0]), (apex, others[1])],
        &[(apex, others[0], others[1])],
    )
    .unwrap();
    Framework::new(g, 2, &well_spread_points(rng, 3, 2)).unwrap()
}

/// Realizable random targets for a three-agent framework: the constraint
/// values of another random triangle.
pub fn random_three_agent_targets(rng: &mut ChaCha8Rng, f: &Framework) -> TargetSpec {
    let other = f
        .with_positions(well_spread_points(rng, 3, 2).concat())
        .unwrap();
    TargetSpec::realized_by(&other).unwrap()
}

/// Relative difference `|a - b| / max(1, |b|)`.
pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |a, x| a.max(x.abs()))
}

/// Proptest settings with a fixed seed so every run explores the same cases.
pub fn proptest_config(cases: u32) -> Config {
    Config {
        cases,
        rng_seed: RngSeed::Fixed(0x5eed_0f71),
        failure_persistence: None,
        ..Config::default()
    }
}
