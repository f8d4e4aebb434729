//! Gradient formation control `ṗ = −R_W(p)ᵀ e(p)` for single integrators.
//!
//! The controller and simulator accept any constraint graph; the E(p)
//! decomposition, det Z and the equilibrium analysis are specific to the
//! three-agent system with two distances and the angle between them.

use nalgebra::{DMatrix, DVector, Matrix3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::framework::{find_collocated, Framework};
use crate::graph::{AngleTriple, Constraint, Edge, Graph};
use crate::linalg::symmetric_eigen;
use crate::rigidity::{accumulate_rows_transposed, constraint_values};

/// Desired squared distances and cosines, one per constraint of the graph
/// in row order.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSpec {
    entries: Vec<(Constraint, f64)>,
}

impl TargetSpec {
    pub fn new(sq_distances: &[(Edge, f64)], cosines: &[(AngleTriple, f64)]) -> Result<Self> {
        let mut entries = Vec::with_capacity(sq_distances.len() + cosines.len());
        for &(e, d2) in sq_distances {
            if !(d2.is_finite() && d2 >= 0.0) {
                return Err(Error::TargetMismatch(format!(
                    "squared distance {d2} for edge {e}"
                )));
            }
            entries.push((Constraint::Distance(e), d2));
        }
        for &(a, c) in cosines {
            if !(c.is_finite() && (-1.0..=1.0).contains(&c)) {
                return Err(Error::TargetMismatch(format!(
                    "cosine {c} for angle {a} outside [-1, 1]"
                )));
            }
            entries.push((Constraint::Angle(a), c));
        }
        Ok(TargetSpec { entries })
    }

    /// Targets that the given framework already satisfies.
    pub fn realized_by(f: &Framework) -> Result<Self> {
        let values = constraint_values(f.positions(), f.dim(), f.graph())?;
        Ok(TargetSpec {
            entries: f.graph().constraints().into_iter().zip(values).collect(),
        })
    }

    pub fn entries(&self) -> &[(Constraint, f64)] {
        &self.entries
    }

    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|(_, v)| *v).collect()
    }

    /// Fails unless the targets list exactly the graph's constraints in the
    /// graph's row order.
    pub fn check_matches(&self, g: &Graph) -> Result<()> {
        let cons = g.constraints();
        if cons.len() != self.entries.len() {
            return Err(Error::TargetMismatch(format!(
                "{} targets for {} constraints",
                self.entries.len(),
                cons.len()
            )));
        }
        for (row, (c, (t, _))) in cons.iter().zip(&self.entries).enumerate() {
            if c != t {
                return Err(Error::TargetMismatch(format!(
                    "row {row}: graph has {c}, targets have {t}"
                )));
            }
        }
        Ok(())
    }

    /// Reorders the targets into the graph's row order.
    pub fn aligned_to(&self, g: &Graph) -> Result<Self> {
        let mut entries = Vec::with_capacity(self.entries.len());
        for c in g.constraints() {
            let v = self
                .entries
                .iter()
                .find(|(t, _)| *t == c)
                .map(|(_, v)| *v)
                .ok_or_else(|| Error::TargetMismatch(format!("no target for {c}")))?;
            entries.push((c, v));
        }
        if entries.len() != self.entries.len() {
            return Err(Error::TargetMismatch(format!(
                "{} targets for {} constraints",
                self.entries.len(),
                entries.len()
            )));
        }
        Ok(TargetSpec { entries })
    }

    /// Local consistency checks: positive lengths, triangle inequality on
    /// fully distance-constrained triangles, and the law of cosines where an
    /// angle's whole support triangle carries distance targets. Passing does
    /// not prove global realizability.
    pub fn realizability_precheck(&self) -> Result<()> {
        let dist = |e: Edge| {
            self.entries.iter().find_map(|(c, v)| match c {
                Constraint::Distance(x) if *x == e => Some(*v),
                _ => None,
            })
        };
        for (c, v) in &self.entries {
            match *c {
                Constraint::Distance(e) if *v <= 0.0 => {
                    return Err(Error::TargetMismatch(format!(
                        "edge {e} has non-positive target length"
                    )));
                }
                Constraint::Angle(a) => {
                    let [ki, kj, ij] = a.support_edges();
                    if let (Some(x), Some(y), Some(z)) = (dist(ki), dist(kj), dist(ij)) {
                        let c_law = (x + y - z) / (2.0 * (x * y).sqrt());
                        if (c_law - v).abs() > 1e-9 {
                            return Err(Error::TargetMismatch(format!(
                                "angle {a}: cosine {v} contradicts law of cosines value {c_law}"
                            )));
                        }
                    }
                }
                _ => {}
            }
        }
        for (c, _) in &self.entries {
            if let Constraint::Distance(e) = *c {
                for (c2, _) in &self.entries {
                    if let Constraint::Distance(e2) = *c2 {
                        if e2 <= e || !(e2.contains(e.tail()) || e2.contains(e.head())) {
                            continue;
                        }
                        let shared = if e2.contains(e.tail()) {
                            e.tail()
                        } else {
                            e.head()
                        };
                        let a = if e.tail() == shared {
                            e.head()
                        } else {
                            e.tail()
                        };
                        let b = if e2.tail() == shared {
                            e2.head()
                        } else {
                            e2.tail()
                        };
                        if let (Some(x), Some(y), Some(z)) =
                            (dist(e), dist(e2), dist(Edge::new(a, b)))
                        {
                            let (x, y, z) = (x.sqrt(), y.sqrt(), z.sqrt());
                            let slack = 1e-12 * (x + y + z);
                            if x > y + z + slack || y > x + z + slack || z > x + y + slack {
                                return Err(Error::TargetMismatch(format!(
                                    "triangle ({shared}, {a}, {b}) violates the triangle inequality"
                                )));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// `e = [d_c(p) − d_c*, c_c(p) − c_c*]`, ordered like the rows of `R_W`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorVector {
    pub e: Vec<f64>,
}

impl ErrorVector {
    pub fn norm(&self) -> f64 {
        self.e.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// `V = ½ eᵀe`.
    pub fn lyapunov(&self) -> f64 {
        0.5 * self.e.iter().map(|x| x * x).sum::<f64>()
    }
}

pub fn error_vector(f: &Framework, t: &TargetSpec) -> Result<ErrorVector> {
    t.check_matches(f.graph())?;
    Ok(ErrorVector {
        e: raw_error(f.positions(), f.dim(), f.graph(), &t.values())?,
    })
}

fn raw_error(positions: &[f64], dim: usize, g: &Graph, target: &[f64]) -> Result<Vec<f64>> {
    let mut e = constraint_values(positions, dim, g)?;
    for (x, t) in e.iter_mut().zip(target) {
        *x -= t;
    }
    Ok(e)
}

/// Velocity field of the gradient law evaluated on a raw configuration.
#[derive(Debug, Clone)]
pub(crate) struct GradientFlow<'a> {
    graph: &'a Graph,
    dim: usize,
    target: Vec<f64>,
}

impl<'a> GradientFlow<'a> {
    fn new(graph: &'a Graph, dim: usize, t: &TargetSpec) -> Result<Self> {
        t.check_matches(graph)?;
        Ok(GradientFlow {
            graph,
            dim,
            target: t.values(),
        })
    }

    fn error(&self, p: &[f64]) -> Result<Vec<f64>> {
        raw_error(p, self.dim, self.graph, &self.target)
    }

    /// Returns `(ṗ, e)` with `ṗ = −R_Wᵀ e`.
    fn velocity(&self, p: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let e = self.error(p)?;
        let mut v = vec![0.0; p.len()];
        accumulate_rows_transposed(p, self.dim, self.graph, &e, &mut v)?;
        for x in v.iter_mut() {
            *x = -*x;
        }
        Ok((v, e))
    }
}

/// `u = −R_W(p)ᵀ e(p)`.
pub fn control_law(f: &Framework, t: &TargetSpec) -> Result<DVector<f64>> {
    let flow = GradientFlow::new(f.graph(), f.dim(), t)?;
    Ok(DVector::from_vec(flow.velocity(f.positions())?.0))
}

/// Vertex roles of the three-agent system: two distance edges from `apex`
/// and the angle at `apex` between them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ThreeAgent {
    pub apex: usize,
    pub b: usize,
    pub c: usize,
}

impl ThreeAgent {
    pub fn detect(g: &Graph) -> Result<Self> {
        let wrong = || {
            Error::WrongTopology(
                "expected 3 vertices, two edges from one apex and the angle between them".into(),
            )
        };
        if g.n() != 3 || g.m() != 2 || g.q() != 1 {
            return Err(wrong());
        }
        let a = g.angles()[0];
        let expected = [Edge::new(a.apex, a.i), Edge::new(a.apex, a.j)];
        if !g.edges().iter().all(|e| expected.contains(e)) {
            return Err(wrong());
        }
        Ok(ThreeAgent {
            apex: a.apex,
            b: a.i,
            c: a.j,
        })
    }

    fn edge_rows(&self, g: &Graph) -> (usize, usize) {
        let eb = Edge::new(self.apex, self.b);
        if g.edges()[0] == eb {
            (0, 1)
        } else {
            (1, 0)
        }
    }
}

/// `E(p)` with `R_Wᵀ e = (E ⊗ I_2) p` for the three-agent system, indexed
/// by vertex.
pub fn e_matrix_three_agent(f: &Framework, t: &TargetSpec) -> Result<Matrix3<f64>> {
    if f.dim() != 2 {
        return Err(Error::WrongDimension {
            expected: 2,
            found: f.dim(),
        });
    }
    let roles = ThreeAgent::detect(f.graph())?;
    let err = error_vector(f, t)?;
    let (rb, rc) = roles.edge_rows(f.graph());
    let (e12, e13, ec) = (err.e[rb], err.e[rc], err.e[2]);

    let a2 = f.squared_distance(roles.apex, roles.b);
    let b2 = f.squared_distance(roles.apex, roles.c);
    let ab = (a2 * b2).sqrt();
    let cos = f.cosine_of_angle(AngleTriple::new(roles.apex, roles.b, roles.c))?;

    // Coefficients of p_1, p_2, p_3 (apex, b, c) in the cosine gradients.
    let alpha = [
        2.0 / ab - cos / a2 - cos / b2,
        cos / a2 - 1.0 / ab,
        cos / b2 - 1.0 / ab,
    ];
    let beta = [-1.0 / ab + cos / a2, -cos / a2, 1.0 / ab];
    let gamma = [-1.0 / ab + cos / b2, 1.0 / ab, -cos / b2];

    let role_matrix = [
        [
            2.0 * e12 + 2.0 * e13 + alpha[0] * ec,
            -2.0 * e12 + alpha[1] * ec,
            -2.0 * e13 + alpha[2] * ec,
        ],
        [
            -2.0 * e12 + beta[0] * ec,
            2.0 * e12 + beta[1] * ec,
            beta[2] * ec,
        ],
        [
            -2.0 * e13 + gamma[0] * ec,
            gamma[1] * ec,
            2.0 * e13 + gamma[2] * ec,
        ],
    ];
    let idx = [roles.apex, roles.b, roles.c];
    let mut e = Matrix3::zeros();
    for r in 0..3 {
        for c in 0..3 {
            e[(idx[r], idx[c])] = role_matrix[r][c];
        }
    }
    Ok(e)
}

/// Negative Jacobian `J(p) = −∂ṗ/∂p` by central differences of the control
/// law. This is the Hessian of `V = ½ eᵀe`.
pub fn flow_jacobian(f: &Framework, t: &TargetSpec, fd_step: f64) -> Result<DMatrix<f64>> {
    if !(fd_step > 0.0) {
        return Err(Error::InvalidParameter(
            "finite-difference step must be positive".into(),
        ));
    }
    let flow = GradientFlow::new(f.graph(), f.dim(), t)?;
    let p = f.positions();
    let nc = p.len();
    let mut jac = DMatrix::zeros(nc, nc);
    let mut work = p.to_vec();
    for c in 0..nc {
        work[c] = p[c] + fd_step;
        let (vp, _) = flow.velocity(&work)?;
        work[c] = p[c] - fd_step;
        let (vm, _) = flow.velocity(&work)?;
        work[c] = p[c];
        for r in 0..nc {
            jac[(r, c)] = -(vp[r] - vm[r]) / (2.0 * fd_step);
        }
    }
    Ok(jac)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetZ {
    /// `det [z_12 z_13]`
    pub det: f64,
    /// Rate in `d/dt det Z = −σ det Z` along the gradient flow.
    pub sigma: f64,
}

/// `det Z` and its decay rate for the three-agent system.
///
/// Along `ṗ = −R_Wᵀ e`, with `a = ‖z_12‖`, `b = ‖z_13‖`:
/// `σ = 4e_12 + 4e_13 + 2e_c (1/(ab) − cos θ (1/a² + 1/b²))`.
pub fn det_z(f: &Framework, t: &TargetSpec) -> Result<DetZ> {
    let roles = ThreeAgent::detect(f.graph())?;
    if f.dim() != 2 {
        return Err(Error::WrongDimension {
            expected: 2,
            found: f.dim(),
        });
    }
    let err = error_vector(f, t)?;
    let (rb, rc) = roles.edge_rows(f.graph());
    Ok(det_z_raw(
        f.positions(),
        roles,
        err.e[rb],
        err.e[rc],
        err.e[2],
    ))
}

fn det_z_raw(p: &[f64], roles: ThreeAgent, e12: f64, e13: f64, ec: f64) -> DetZ {
    let pt = |v: usize| &p[2 * v..2 * v + 2];
    let (p1, p2, p3) = (pt(roles.apex), pt(roles.b), pt(roles.c));
    let z12 = [p1[0] - p2[0], p1[1] - p2[1]];
    let z13 = [p1[0] - p3[0], p1[1] - p3[1]];
    let det = z12[0] * z13[1] - z12[1] * z13[0];
    let a2 = z12[0] * z12[0] + z12[1] * z12[1];
    let b2 = z13[0] * z13[0] + z13[1] * z13[1];
    let ab = (a2 * b2).sqrt();
    let cos = ((z12[0] * z13[0] + z12[1] * z13[1]) / ab).clamp(-1.0, 1.0);
    let sigma = 4.0 * e12 + 4.0 * e13 + 2.0 * ec * (1.0 / ab - cos * (1.0 / a2 + 1.0 / b2));
    DetZ { det, sigma }
}

/// `|det Z| < 1e-8 (1 + max squared distance)`.
pub fn is_collinear_three(f: &Framework) -> bool {
    if f.dim() != 2 || f.n() != 3 {
        return false;
    }
    let p = f.positions();
    let z12 = [p[0] - p[2], p[1] - p[3]];
    let z13 = [p[0] - p[4], p[1] - p[5]];
    let det = z12[0] * z13[1] - z12[1] * z13[0];
    let dmax = (0..3)
        .flat_map(|i| (i + 1..3).map(move |j| (i, j)))
        .map(|(i, j)| f.squared_distance(i, j))
        .fold(0.0, f64::max);
    det.abs() < 1e-8 * (1.0 + dmax)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EquilibriumKind {
    Desired,
    Incorrect,
    NotEquilibrium,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub kind: EquilibriumKind,
    pub error_norm: f64,
    pub gradient_norm: f64,
    /// Smallest eigenvalue of `J(p)`; reported for incorrect equilibria.
    pub min_jacobian_eig: Option<f64>,
    pub collinear: bool,
}

/// Default finite-difference step for [`flow_jacobian`].
pub const DEFAULT_FD_STEP: f64 = 1e-6;

pub fn classify_equilibrium(f: &Framework, t: &TargetSpec, tol: f64) -> Result<EquilibriumReport> {
    ThreeAgent::detect(f.graph())?;
    let err = error_vector(f, t)?;
    let grad = control_law(f, t)?;
    let (en, gn) = (err.norm(), grad.norm());
    let collinear = is_collinear_three(f);
    let (kind, min_eig) = if en < tol {
        (EquilibriumKind::Desired, None)
    } else if gn < tol {
        let (eig, _) = symmetric_eigen(&flow_jacobian(f, t, DEFAULT_FD_STEP)?);
        (EquilibriumKind::Incorrect, eig.first().copied())
    } else {
        (EquilibriumKind::NotEquilibrium, None)
    };
    Ok(EquilibriumReport {
        kind,
        error_norm: en,
        gradient_norm: gn,
        min_jacobian_eig: min_eig,
        collinear,
    })
}

/// Smallest eigenvalue of `J(p)` and its unit eigenvector.
pub fn most_negative_direction(
    f: &Framework,
    t: &TargetSpec,
    fd_step: f64,
) -> Result<(f64, DVector<f64>)> {
    let (vals, vecs) = symmetric_eigen(&flow_jacobian(f, t, fd_step)?);
    Ok((vals[0], vecs[0].clone()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub dt: f64,
    pub t_max: f64,
    pub convergence_eps: f64,
    /// Any coordinate beyond this magnitude ends the run as diverged.
    pub divergence_bound: f64,
    /// Keep every `record_every`-th step (the first and last sample are
    /// always kept).
    pub record_every: usize,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            dt: 1e-3,
            t_max: 200.0,
            convergence_eps: 1e-8,
            divergence_bound: 1e6,
            record_every: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TerminalStatus {
    Converged,
    /// Gradient vanished with nonzero error: an incorrect equilibrium.
    IncorrectEquilibrium,
    MaxTime,
    Diverged,
    Degenerate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    pub dim: usize,
    pub times: Vec<f64>,
    pub positions: Vec<Vec<f64>>,
    pub errors: Vec<Vec<f64>>,
    pub error_norm: Vec<f64>,
    pub lyapunov: Vec<f64>,
    /// `det Z` per sample, present for the three-agent topology.
    pub det_z: Option<Vec<f64>>,
    pub terminal_status: TerminalStatus,
    pub steps: usize,
    pub row_labels: Vec<Constraint>,
}

impl SimulationTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_positions(&self) -> &[f64] {
        self.positions.last().expect("trace has an initial sample")
    }

    pub fn final_error_norm(&self) -> f64 {
        *self.error_norm.last().expect("trace has an initial sample")
    }
}

/// Integrates the gradient law with classical fixed-step RK4.
pub fn simulate(f0: &Framework, t: &TargetSpec, cfg: &SimulationConfig) -> Result<SimulationTrace> {
    if !(cfg.dt > 0.0)
        || !(cfg.t_max >= 0.0)
        || !(cfg.convergence_eps > 0.0)
        || cfg.record_every == 0
    {
        return Err(Error::InvalidParameter(
            "dt and convergence_eps must be positive, t_max non-negative, record_every at least 1"
                .into(),
        ));
    }
    let flow = GradientFlow::new(f0.graph(), f0.dim(), t)?;
    let roles = if f0.dim() == 2 {
        ThreeAgent::detect(f0.graph()).ok()
    } else {
        None
    };
    let mut trace = SimulationTrace {
        dim: f0.dim(),
        times: Vec::new(),
        positions: Vec::new(),
        errors: Vec::new(),
        error_norm: Vec::new(),
        lyapunov: Vec::new(),
        det_z: roles.map(|_| Vec::new()),
        terminal_status: TerminalStatus::MaxTime,
        steps: 0,
        row_labels: f0.graph().constraints(),
    };
    let record = |trace: &mut SimulationTrace, time: f64, p: &[f64], e: &[f64]| {
        let sq: f64 = e.iter().map(|x| x * x).sum();
        trace.times.push(time);
        trace.positions.push(p.to_vec());
        trace.errors.push(e.to_vec());
        trace.error_norm.push(sq.sqrt());
        trace.lyapunov.push(0.5 * sq);
        if let (Some(r), Some(dz)) = (roles, trace.det_z.as_mut()) {
            let (rb, rc) = r.edge_rows(f0.graph());
            dz.push(det_z_raw(p, r, e[rb], e[rc], e[2]).det);
        }
    };

    let mut p = f0.positions().to_vec();
    let (mut v, mut e) = flow.velocity(&p)?;
    record(&mut trace, 0.0, &p, &e);

    let n_steps = (cfg.t_max / cfg.dt).ceil() as usize;
    let mut time = 0.0;
    let mut step = 0usize;
    let mut recorded_last = true;
    let status = loop {
        if let Some(s) = check_state(&p, &v, &e, f0.dim(), cfg) {
            break s;
        }
        if step >= n_steps {
            break TerminalStatus::MaxTime;
        }
        let h = (cfg.t_max - step as f64 * cfg.dt).min(cfg.dt);
        match rk4_step(&flow, &p, &v, h) {
            Ok(next) => p = next,
            Err(_) => break TerminalStatus::Degenerate,
        }
        step += 1;
        time = if step == n_steps {
            cfg.t_max
        } else {
            step as f64 * cfg.dt
        };
        match flow.velocity(&p) {
            Ok((nv, ne)) => {
                v = nv;
                e = ne;
            }
            Err(_) => break TerminalStatus::Degenerate,
        }
        recorded_last = step.is_multiple_of(cfg.record_every);
        if recorded_last {
            record(&mut trace, time, &p, &e);
        }
    };
    if !recorded_last {
        record(&mut trace, time, &p, &e);
    }
    trace.terminal_status = status;
    trace.steps = step;
    Ok(trace)
}

fn check_state(
    p: &[f64],
    v: &[f64],
    e: &[f64],
    dim: usize,
    cfg: &SimulationConfig,
) -> Option<TerminalStatus> {
    if p.iter()
        .any(|x| !x.is_finite() || x.abs() > cfg.divergence_bound)
    {
        return Some(TerminalStatus::Diverged);
    }
    if find_collocated(p, dim).is_some() {
        return Some(TerminalStatus::Degenerate);
    }
    let en = e.iter().map(|x| x * x).sum::<f64>().sqrt();
    if en < cfg.convergence_eps {
        return Some(TerminalStatus::Converged);
    }
    let gn = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if gn <= cfg.convergence_eps * en {
        return Some(TerminalStatus::IncorrectEquilibrium);
    }
    None
}

fn rk4_step(flow: &GradientFlow<'_>, p: &[f64], k1: &[f64], h: f64) -> Result<Vec<f64>> {
    let axpy = |base: &[f64], k: &[f64], s: f64| {
        base.iter()
            .zip(k)
            .map(|(b, k)| b + s * k)
            .collect::<Vec<_>>()
    };
    let (k2, _) = flow.velocity(&axpy(p, k1, 0.5 * h))?;
    let (k3, _) = flow.velocity(&axpy(p, &k2, 0.5 * h))?;
    let (k4, _) = flow.velocity(&axpy(p, &k3, h))?;
    Ok((0..p.len())
        .map(|i| p[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

/// Least-squares line through `(x, y)`: returns `(slope, R²)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    (slope, r2)
}

/// Log-linear fit of `‖e‖` over the last half of the samples before
/// convergence.
pub fn exponential_tail_fit(trace: &SimulationTrace) -> (f64, f64) {
    let n = trace.len();
    let start = n / 2;
    let xs: Vec<f64> = trace.times[start..].to_vec();
    let ys: Vec<f64> = trace.error_norm[start..].iter().map(|e| e.ln()).collect();
    linear_fit(&xs, &ys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;
    use approx::assert_relative_eq;

    fn three(p: [[f64; 2]; 3]) -> Framework {
        let g = build_graph(3, &[(0, 1), (0, 2)], &[(0, 1, 2)]).unwrap();
        Framework::new(g, 2, &p.map(|x| x.to_vec())).unwrap()
    }

    fn scenario_targets() -> TargetSpec {
        TargetSpec::new(
            &[(Edge::new(0, 1), 8.0), (Edge::new(0, 2), 9.0)],
            &[(AngleTriple::new(0, 1, 2), 40f64.to_radians().cos())],
        )
        .unwrap()
    }

    #[test]
    fn initial_error_of_simulation_scenario() {
        let f = three([[-3.0, 0.0], [1.0, 1.0], [-1.0, -3.0]]);
        let e = error_vector(&f, &scenario_targets()).unwrap();
        assert_eq!(e.e[0], 9.0);
        assert_eq!(e.e[1], 4.0);
        // z12 = (-4,-1), z13 = (-2,3): cos = (8-3)/(sqrt(17) sqrt(13))
        let cos = 5.0 / (17f64.sqrt() * 13f64.sqrt());
        assert_relative_eq!(e.e[2], cos - 40f64.to_radians().cos(), epsilon = 1e-15);
    }

    #[test]
    fn zero_error_at_desired_shape() {
        let f = three([[0.3, -0.2], [1.4, 0.9], [-0.7, 2.0]]);
        let t = TargetSpec::realized_by(&f).unwrap();
        assert!(error_vector(&f, &t).unwrap().norm() < 1e-15);
        assert!(control_law(&f, &t).unwrap().amax() < 1e-14);
        assert!(e_matrix_three_agent(&f, &t).unwrap().amax() < 1e-14);
    }

    #[test]
    fn swapped_targets_rejected() {
        let f = three([[-3.0, 0.0], [1.0, 1.0], [-1.0, -3.0]]);
        let t = TargetSpec::new(
            &[(Edge::new(0, 2), 9.0), (Edge::new(0, 1), 8.0)],
            &[(AngleTriple::new(0, 1, 2), 0.5)],
        )
        .unwrap();
        assert!(matches!(
            error_vector(&f, &t),
            Err(Error::TargetMismatch(_))
        ));
        assert!(error_vector(&f, &t.aligned_to(f.graph()).unwrap()).is_ok());
    }

    #[test]
    fn target_value_validation() {
        assert!(TargetSpec::new(&[], &[(AngleTriple::new(0, 1, 2), 1.5)]).is_err());
        assert!(TargetSpec::new(&[(Edge::new(0, 1), -1.0)], &[]).is_err());
        let bad = TargetSpec::new(
            &[
                (Edge::new(0, 1), 1.0),
                (Edge::new(0, 2), 1.0),
                (Edge::new(1, 2), 9.0),
            ],
            &[],
        )
        .unwrap();
        assert!(bad.realizability_precheck().is_err());
        assert!(scenario_targets().realizability_precheck().is_ok());
    }

    #[test]
    fn wrong_topology() {
        let g = build_graph(3, &[(0, 1), (1, 2)], &[(0, 1, 2)]).unwrap();
        let f = Framework::new(g, 2, &[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let t = TargetSpec::realized_by(&f).unwrap();
        assert!(matches!(
            e_matrix_three_agent(&f, &t),
            Err(Error::WrongTopology(_))
        ));
    }

    #[test]
    fn equilateral_det_z() {
        let f = three([[-1.732, 0.0], [0.0, 1.0], [0.0, -1.0]]);
        let d = det_z(&f, &scenario_targets()).unwrap();
        assert_relative_eq!(d.det, -2.0 * 1.732, epsilon = 1e-15);
        let c = three([[0.0, 0.0], [1.0, 0.0], [-2.0, 0.0]]);
        assert_eq!(det_z(&c, &scenario_targets()).unwrap().det, 0.0);
        assert!(is_collinear_three(&c));
    }

    #[test]
    fn already_converged_trace_has_one_sample() {
        let f = three([[0.3, -0.2], [1.4, 0.9], [-0.7, 2.0]]);
        let t = TargetSpec::realized_by(&f).unwrap();
        let tr = simulate(&f, &t, &SimulationConfig::default()).unwrap();
        assert_eq!(tr.terminal_status, TerminalStatus::Converged);
        assert_eq!(tr.len(), 1);
        assert_eq!(tr.times, vec![0.0]);
    }

    #[test]
    fn zero_horizon_is_max_time() {
        let f = three([[-3.0, 0.0], [1.0, 1.0], [-1.0, -3.0]]);
        let cfg = SimulationConfig {
            t_max: 0.0,
            ..Default::default()
        };
        let tr = simulate(&f, &scenario_targets(), &cfg).unwrap();
        assert_eq!(tr.terminal_status, TerminalStatus::MaxTime);
        assert_eq!(tr.len(), 1);
    }

    #[test]
    fn bad_config_rejected() {
        let f = three([[-3.0, 0.0], [1.0, 1.0], [-1.0, -3.0]]);
        let cfg = SimulationConfig {
            dt: 0.0,
            ..Default::default()
        };
        assert!(simulate(&f, &scenario_targets(), &cfg).is_err());
    }

    #[test]
    fn fit_of_exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, -1.0, -3.0, -5.0];
        let (s, r2) = linear_fit(&x, &y);
        assert_relative_eq!(s, -2.0, epsilon = 1e-14);
        assert_relative_eq!(r2, 1.0, epsilon = 1e-14);
    }
}
