//! Weak rigidity function and matrix, trivial motions, rank-based
//! classification in the plane, the distance rigidity matrix used for the
//! 3D test, and the single-removal minimality check.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::framework::{cosine_at, squared_distance, Framework};
use crate::graph::{AngleTriple, Constraint, Graph};
use crate::linalg::{inf_norm, numerical_rank, singular_values, DEFAULT_RANK_TOL};

/// `F_W(p) = [‖z_1‖², ..., ‖z_m‖², cos θ_1, ..., cos θ_q]`.
pub fn weak_rigidity_function(f: &Framework) -> Result<DVector<f64>> {
    require_dim(f, 2)?;
    Ok(DVector::from_vec(constraint_values(
        f.positions(),
        f.dim(),
        f.graph(),
    )?))
}

pub(crate) fn constraint_values(positions: &[f64], dim: usize, g: &Graph) -> Result<Vec<f64>> {
    let pt = |v: usize| &positions[v * dim..(v + 1) * dim];
    let mut out = Vec::with_capacity(g.constraint_count());
    for e in g.edges() {
        out.push(squared_distance(pt(e.tail()), pt(e.head())));
    }
    for &a in g.angles() {
        out.push(cosine_at(positions, dim, a)?);
    }
    Ok(out)
}

/// Partial derivatives of `A = (‖a‖² + ‖b‖² − ‖c‖²) / (2‖a‖‖b‖)` with
/// respect to three independent edge vectors, where `a` and `b` meet at the
/// apex and `c` is the opposite side.
#[derive(Debug, Clone, PartialEq)]
pub struct CosinePartials {
    pub wrt_a: Vec<f64>,
    pub wrt_b: Vec<f64>,
    pub wrt_c: Vec<f64>,
}

impl CosinePartials {
    pub fn new(a: &[f64], b: &[f64], c: &[f64]) -> Self {
        let na2: f64 = a.iter().map(|x| x * x).sum();
        let nb2: f64 = b.iter().map(|x| x * x).sum();
        let nc2: f64 = c.iter().map(|x| x * x).sum();
        let nab = (na2 * nb2).sqrt();
        let cos = (na2 + nb2 - nc2) / (2.0 * nab);
        CosinePartials {
            wrt_a: a.iter().map(|x| x / nab - cos * x / na2).collect(),
            wrt_b: b.iter().map(|x| x / nab - cos * x / nb2).collect(),
            wrt_c: c.iter().map(|x| -x / nab).collect(),
        }
    }
}

/// Gradient of `cos θ^k_ij` with respect to each of the three involved
/// points.
#[derive(Debug, Clone, PartialEq)]
pub struct CosineGradient {
    pub triple: AngleTriple,
    pub apex: Vec<f64>,
    pub i: Vec<f64>,
    pub j: Vec<f64>,
}

pub fn cosine_gradient_blocks(f: &Framework, triple: AngleTriple) -> Result<CosineGradient> {
    cosine_gradient_at(f.positions(), f.dim(), triple)
}

pub(crate) fn cosine_gradient_at(
    positions: &[f64],
    dim: usize,
    t: AngleTriple,
) -> Result<CosineGradient> {
    // collocation check
    cosine_at(positions, dim, t)?;
    let pt = |v: usize| &positions[v * dim..(v + 1) * dim];
    let (pk, pi, pj) = (pt(t.apex), pt(t.i), pt(t.j));
    let a: Vec<f64> = pi.iter().zip(pk).map(|(x, y)| x - y).collect();
    let b: Vec<f64> = pj.iter().zip(pk).map(|(x, y)| x - y).collect();
    let c: Vec<f64> = pi.iter().zip(pj).map(|(x, y)| x - y).collect();
    let d = CosinePartials::new(&a, &b, &c);
    // a = p_i - p_k, b = p_j - p_k, c = p_i - p_j
    let gi = (0..dim).map(|r| d.wrt_a[r] + d.wrt_c[r]).collect();
    let gj = (0..dim).map(|r| d.wrt_b[r] - d.wrt_c[r]).collect();
    let gk = (0..dim).map(|r| -d.wrt_a[r] - d.wrt_b[r]).collect();
    Ok(CosineGradient {
        triple: t,
        apex: gk,
        i: gi,
        j: gj,
    })
}

/// `R_W(p) = ∂F_W/∂p` with its row labels.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakRigidityMatrix {
    pub matrix: DMatrix<f64>,
    pub row_labels: Vec<Constraint>,
    pub framework_hash: u64,
}

impl WeakRigidityMatrix {
    /// Rows as CSV, one line per constraint, label in the first column.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("constraint");
        let dim_cols = self.matrix.ncols();
        for c in 0..dim_cols {
            s.push_str(&format!(",c{c}"));
        }
        s.push('\n');
        for (r, label) in self.row_labels.iter().enumerate() {
            let tag = match label {
                Constraint::Distance(e) => format!("d{}-{}", e.tail(), e.head()),
                Constraint::Angle(a) => format!("a{}-{}-{}", a.apex, a.i, a.j),
            };
            s.push_str(&tag);
            for c in 0..dim_cols {
                s.push_str(&format!(",{:.16e}", self.matrix[(r, c)]));
            }
            s.push('\n');
        }
        s
    }
}

pub fn weak_rigidity_matrix(f: &Framework) -> Result<WeakRigidityMatrix> {
    require_dim(f, 2)?;
    require_n(f, 3)?;
    Ok(WeakRigidityMatrix {
        matrix: rigidity_rows(f.positions(), f.dim(), f.graph())?,
        row_labels: f.graph().constraints(),
        framework_hash: framework_hash(f),
    })
}

/// Analytic Jacobian of the stacked squared distances and cosines; any
/// dimension.
pub(crate) fn rigidity_rows(positions: &[f64], dim: usize, g: &Graph) -> Result<DMatrix<f64>> {
    let cols = dim * g.n();
    let mut r = DMatrix::zeros(g.constraint_count(), cols);
    for (u, e) in g.edges().iter().enumerate() {
        let (t, h) = (e.tail(), e.head());
        for d in 0..dim {
            let z = positions[t * dim + d] - positions[h * dim + d];
            r[(u, t * dim + d)] = 2.0 * z;
            r[(u, h * dim + d)] = -2.0 * z;
        }
    }
    let m = g.m();
    for (h, &a) in g.angles().iter().enumerate() {
        let grad = cosine_gradient_at(positions, dim, a)?;
        for d in 0..dim {
            r[(m + h, a.apex * dim + d)] += grad.apex[d];
            r[(m + h, a.i * dim + d)] += grad.i[d];
            r[(m + h, a.j * dim + d)] += grad.j[d];
        }
    }
    Ok(r)
}

/// Adds `Σ_r w_r ∇F_r(p)` into `out` (`R^⊤ w` without forming `R`).
pub(crate) fn accumulate_rows_transposed(
    positions: &[f64],
    dim: usize,
    g: &Graph,
    weights: &[f64],
    out: &mut [f64],
) -> Result<()> {
    for (u, e) in g.edges().iter().enumerate() {
        let (t, h) = (e.tail(), e.head());
        let w = weights[u];
        for d in 0..dim {
            let z = positions[t * dim + d] - positions[h * dim + d];
            out[t * dim + d] += 2.0 * z * w;
            out[h * dim + d] -= 2.0 * z * w;
        }
    }
    let m = g.m();
    for (h, &a) in g.angles().iter().enumerate() {
        let w = weights[m + h];
        let grad = cosine_gradient_at(positions, dim, a)?;
        for d in 0..dim {
            out[a.apex * dim + d] += grad.apex[d] * w;
            out[a.i * dim + d] += grad.i[d] * w;
            out[a.j * dim + d] += grad.j[d] * w;
        }
    }
    Ok(())
}

/// Central finite-difference Jacobian of the constraint values (squared
/// distances and cosines). Independent of the analytic assembly above.
pub fn finite_difference_jacobian(f: &Framework, step: f64) -> Result<DMatrix<f64>> {
    let g = f.graph();
    let p = f.positions();
    let mut jac = DMatrix::zeros(g.constraint_count(), p.len());
    let mut work = p.to_vec();
    for c in 0..p.len() {
        work[c] = p[c] + step;
        let plus = constraint_values(&work, f.dim(), g)?;
        work[c] = p[c] - step;
        let minus = constraint_values(&work, f.dim(), g)?;
        work[c] = p[c];
        for r in 0..plus.len() {
            jac[(r, c)] = (plus[r] - minus[r]) / (2.0 * step);
        }
    }
    Ok(jac)
}

/// Max absolute deviation between the analytic matrix and a central
/// finite difference. In 2D this checks `R_W`; in 3D it checks `R_D` of the
/// distance closure against half the squared-distance differences.
pub fn gradient_check(f: &Framework, step: f64) -> Result<f64> {
    if !(step > 0.0) {
        return Err(Error::InvalidParameter(
            "finite-difference step must be positive".into(),
        ));
    }
    match f.dim() {
        2 => {
            let analytic = rigidity_rows(f.positions(), 2, f.graph())?;
            let fd = finite_difference_jacobian(f, step)?;
            Ok(crate::linalg::max_abs(&(analytic - fd)))
        }
        _ => {
            let closure = f.with_graph(f.graph().induced_distance_closure())?;
            let analytic = distance_rigidity_matrix(&closure)?;
            let fd = finite_difference_jacobian(&closure, step)? * 0.5;
            Ok(crate::linalg::max_abs(&(analytic - fd)))
        }
    }
}

/// Columns spanning the trivial infinitesimal motions in the plane.
#[derive(Debug, Clone, PartialEq)]
pub struct TrivialMotionBasis {
    /// `2n × k`: translations along x and y, rotation `(I_n ⊗ J)p`, and the
    /// scaling `p` when `E = ∅`.
    pub columns: DMatrix<f64>,
    pub includes_scaling: bool,
}

pub fn trivial_motion_basis(f: &Framework) -> Result<TrivialMotionBasis> {
    require_dim(f, 2)?;
    let n = f.n();
    let p = f.positions();
    let scaling = f.graph().m() == 0;
    let k = if scaling { 4 } else { 3 };
    let mut cols = DMatrix::zeros(2 * n, k);
    for i in 0..n {
        cols[(2 * i, 0)] = 1.0;
        cols[(2 * i + 1, 1)] = 1.0;
        // J = [[0, -1], [1, 0]]
        cols[(2 * i, 2)] = -p[2 * i + 1];
        cols[(2 * i + 1, 2)] = p[2 * i];
        if scaling {
            cols[(2 * i, 3)] = p[2 * i];
            cols[(2 * i + 1, 3)] = p[2 * i + 1];
        }
    }
    if numerical_rank(&cols, DEFAULT_RANK_TOL) < k {
        return Err(Error::DegenerateConfiguration(
            "trivial motions are linearly dependent (p = 0 or all points coincide)".into(),
        ));
    }
    Ok(TrivialMotionBasis {
        columns: cols,
        includes_scaling: scaling,
    })
}

fn trivial_motion_basis_3d(f: &Framework) -> DMatrix<f64> {
    let n = f.n();
    let mut cols = DMatrix::zeros(3 * n, 6);
    for i in 0..n {
        let p = f.point(i);
        for d in 0..3 {
            cols[(3 * i + d, d)] = 1.0;
        }
        // e_x × p, e_y × p, e_z × p
        let rot = [[0.0, -p[2], p[1]], [p[2], 0.0, -p[0]], [-p[1], p[0], 0.0]];
        for (axis, v) in rot.iter().enumerate() {
            for d in 0..3 {
                cols[(3 * i + d, 3 + axis)] = v[d];
            }
        }
    }
    cols
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    InfinitesimallyWeaklyRigid,
    NotInfinitesimallyWeaklyRigid,
    WeaklyRigid,
    /// 3D rank test failed; a definitive negative needs a generic
    /// configuration.
    NotWeaklyRigidGeneric,
}

impl Verdict {
    pub fn is_rigid(self) -> bool {
        matches!(
            self,
            Verdict::InfinitesimallyWeaklyRigid | Verdict::WeaklyRigid
        )
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::InfinitesimallyWeaklyRigid => "infinitesimally weakly rigid",
            Verdict::NotInfinitesimallyWeaklyRigid => "not infinitesimally weakly rigid",
            Verdict::WeaklyRigid => "weakly rigid",
            Verdict::NotWeaklyRigidGeneric => "not weakly rigid (generic)",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigidityReport {
    pub dim: usize,
    pub n: usize,
    pub rank: usize,
    pub required_rank: usize,
    pub verdict: Verdict,
    pub null_space_dim: usize,
    pub trivial_motion_residual: f64,
    pub tolerance_used: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Rank test in the plane: rank `2n − 3` when `E ≠ ∅`, `2n − 4` otherwise.
pub fn classify_infinitesimal_weak_rigidity(f: &Framework, rel_tol: f64) -> Result<RigidityReport> {
    require_dim(f, 2)?;
    require_n(f, 3)?;
    check_tol(rel_tol)?;
    if all_collinear(f) {
        return Err(Error::DegenerateConfiguration(
            "all points are collinear".into(),
        ));
    }
    let basis = trivial_motion_basis(f)?;
    let rw = rigidity_rows(f.positions(), 2, f.graph())?;
    let n = f.n();
    let rank = numerical_rank(&rw, rel_tol);
    let required = if f.graph().m() == 0 {
        2 * n - 4
    } else {
        2 * n - 3
    };
    let residual = crate::linalg::max_abs(&(&rw * &basis.columns));
    Ok(RigidityReport {
        dim: 2,
        n,
        rank,
        required_rank: required,
        verdict: if rank == required {
            Verdict::InfinitesimallyWeaklyRigid
        } else {
            Verdict::NotInfinitesimallyWeaklyRigid
        },
        null_space_dim: 2 * n - rank,
        trivial_motion_residual: residual,
        tolerance_used: rel_tol,
        note: None,
    })
}

/// `R_D(p) = ½ ∂F_D/∂p`: row per edge with `z^⊤` at the tail and `−z^⊤` at
/// the head. Angles in the graph are ignored.
pub fn distance_rigidity_matrix(f: &Framework) -> Result<DMatrix<f64>> {
    let g = f.graph();
    if g.m() == 0 {
        return Err(Error::EmptyEdgeSet);
    }
    let dim = f.dim();
    let p = f.positions();
    let mut r = DMatrix::zeros(g.m(), dim * g.n());
    for (u, e) in g.edges().iter().enumerate() {
        let (t, h) = (e.tail(), e.head());
        for d in 0..dim {
            let z = p[t * dim + d] - p[h * dim + d];
            r[(u, t * dim + d)] = z;
            r[(u, h * dim + d)] = -z;
        }
    }
    Ok(r)
}

/// Sufficient test for weak rigidity in space: the distance closure `Ḡ`
/// must reach rank `3n − 6`. A failed test is conclusive only at generic
/// configurations.
pub fn classify_weak_rigidity_3d(f: &Framework, rel_tol: f64) -> Result<RigidityReport> {
    require_dim(f, 3)?;
    require_n(f, 3)?;
    check_tol(rel_tol)?;
    let closure = f.with_graph(f.graph().induced_distance_closure())?;
    let rd = distance_rigidity_matrix(&closure)?;
    let n = f.n();
    let rank = numerical_rank(&rd, rel_tol);
    let required = 3 * n - 6;
    let residual = crate::linalg::max_abs(&(&rd * trivial_motion_basis_3d(f)));
    let rigid = rank == required;
    Ok(RigidityReport {
        dim: 3,
        n,
        rank,
        required_rank: required,
        verdict: if rigid {
            Verdict::WeaklyRigid
        } else {
            Verdict::NotWeaklyRigidGeneric
        },
        null_space_dim: 3 * n - rank,
        trivial_motion_residual: residual,
        tolerance_used: rel_tol,
        note: (!rigid).then(|| {
            "rank condition is sufficient; the negative verdict assumes a generic configuration"
                .to_string()
        }),
    })
}

/// Dispatches on dimension.
pub fn classify(f: &Framework, rel_tol: f64) -> Result<RigidityReport> {
    match f.dim() {
        2 => classify_infinitesimal_weak_rigidity(f, rel_tol),
        _ => classify_weak_rigidity_3d(f, rel_tol),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Minimality {
    Minimal,
    NotRigid {
        rank: usize,
        required_rank: usize,
    },
    /// Rigid, but each listed constraint can be dropped without losing rank.
    NotMinimal {
        removable: Vec<Constraint>,
    },
}

impl Minimality {
    pub fn is_minimal(&self) -> bool {
        matches!(self, Minimality::Minimal)
    }
}

/// Minimal weak rigidity via the infinitesimal rank test: rigid, and
/// deleting any single row of `R_W` drops the rank below the requirement.
pub fn is_minimally_weakly_rigid(f: &Framework, rel_tol: f64) -> Result<Minimality> {
    let report = classify_infinitesimal_weak_rigidity(f, rel_tol)?;
    if !report.verdict.is_rigid() {
        return Ok(Minimality::NotRigid {
            rank: report.rank,
            required_rank: report.required_rank,
        });
    }
    let rw = rigidity_rows(f.positions(), 2, f.graph())?;
    let labels = f.graph().constraints();
    let removable: Vec<Constraint> = (0..rw.nrows())
        .filter(|&r| numerical_rank(&rw.clone().remove_row(r), rel_tol) == report.required_rank)
        .map(|r| labels[r])
        .collect();
    Ok(if removable.is_empty() {
        Minimality::Minimal
    } else {
        Minimality::NotMinimal { removable }
    })
}

/// True when every point lies on one line (plane only).
pub fn all_collinear(f: &Framework) -> bool {
    if f.dim() != 2 || f.n() < 3 {
        return false;
    }
    let n = f.n();
    let mut centered = DMatrix::zeros(n, 2);
    let (mut cx, mut cy) = (0.0, 0.0);
    for i in 0..n {
        cx += f.point(i)[0];
        cy += f.point(i)[1];
    }
    cx /= n as f64;
    cy /= n as f64;
    for i in 0..n {
        centered[(i, 0)] = f.point(i)[0] - cx;
        centered[(i, 1)] = f.point(i)[1] - cy;
    }
    let s = singular_values(&centered);
    s[1] <= DEFAULT_RANK_TOL * s[0]
}

/// Stable FNV-1a fingerprint of the graph and the configuration bits.
pub fn framework_hash(f: &Framework) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut feed = |x: u64| {
        for b in x.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    };
    feed(f.dim() as u64);
    feed(f.n() as u64);
    for e in f.graph().edges() {
        feed(e.tail() as u64);
        feed(e.head() as u64);
    }
    feed(u64::MAX);
    for a in f.graph().angles() {
        feed(a.apex as u64);
        feed(a.i as u64);
        feed(a.j as u64);
    }
    for x in f.positions() {
        feed(x.to_bits());
    }
    h
}

/// `‖R v‖_∞` bound helper used by callers that want the relative residual.
pub fn relative_residual(r: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    let res = (r * v).amax();
    res / inf_norm(r).max(1.0)
}

fn require_dim(f: &Framework, dim: usize) -> Result<()> {
    if f.dim() != dim {
        return Err(Error::WrongDimension {
            expected: dim,
            found: f.dim(),
        });
    }
    Ok(())
}

fn require_n(f: &Framework, required: usize) -> Result<()> {
    if f.n() < required {
        return Err(Error::TooFewVertices { required, n: f.n() });
    }
    Ok(())
}

fn check_tol(rel_tol: f64) -> Result<()> {
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "rank tolerance {rel_tol} outside (0, 1)"
        )));
    }
    Ok(())
}
