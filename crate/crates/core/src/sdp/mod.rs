//! Dense Hermitian semidefinite programs over a lifted phase matrix V ⪰ 0,
//! plus sequential rank-one constraint relaxation (SROCR) and phase extraction.

mod ipm;

use std::io::{self, Write};

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::channel::{CMatrix, CVector, PhaseProfile, C64};
use crate::{Error, Result};
use ipm::{IpmStatus, RealSdp};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl Relation {
    fn as_str(self) -> &'static str {
        match self {
            Relation::Le => "le",
            Relation::Eq => "eq",
            Relation::Ge => "ge",
        }
    }
}

/// Tr(matrix·V) + Σ coef·s[idx]  (relation)  bound.
#[derive(Debug, Clone)]
pub struct Constraint {
    pub matrix: CMatrix,
    pub scalars: Vec<(usize, f64)>,
    pub relation: Relation,
    pub bound: f64,
}

/// Optimize Tr(C·V) + Σ cₖ·sₖ + offset over Hermitian V ⪰ 0 and scalars s ≥ 0.
#[derive(Debug, Clone)]
pub struct SdpProblem {
    pub dim: usize,
    pub sense: Sense,
    pub objective: CMatrix,
    pub scalar_objective: Vec<f64>,
    pub offset: f64,
    pub constraints: Vec<Constraint>,
    pub unit_diagonal: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    MaxIter,
    RelaxationFailed,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub v: CMatrix,
    pub scalars: Vec<f64>,
    pub objective: f64,
    /// Bound on the optimum from the dual iterate (upper for max, lower for min).
    pub dual_bound: f64,
    pub status: SdpStatus,
    /// λ_max(V)/Tr(V).
    pub rank_ratio: f64,
    pub iterations: usize,
    /// SROCR relaxation sequence δ₀, δ₁, …; empty for a plain solve.
    pub delta_trace: Vec<f64>,
    /// Largest constraint violation relative to 1 + |bound|.
    pub max_violation: f64,
    /// Objective and rank ratio of the relaxed solution before any rank-one projection.
    pub relaxed_objective: f64,
    pub relaxed_rank_ratio: f64,
}

impl SdpProblem {
    pub fn new(dim: usize, sense: Sense, objective: CMatrix) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Degenerate("SDP dimension must be at least 1".into()));
        }
        check_hermitian(&objective, dim, "objective")?;
        Ok(Self {
            dim,
            sense,
            objective,
            scalar_objective: Vec::new(),
            offset: 0.0,
            constraints: Vec::new(),
            unit_diagonal: false,
        })
    }

    pub fn with_unit_diagonal(mut self) -> Self {
        self.unit_diagonal = true;
        self
    }

    /// Adds a nonnegative scalar variable with the given objective weight; returns its index.
    pub fn add_scalar(&mut self, objective_coef: f64) -> usize {
        self.scalar_objective.push(objective_coef);
        self.scalar_objective.len() - 1
    }

    pub fn add_constraint(&mut self, matrix: CMatrix, relation: Relation, bound: f64) -> Result<()> {
        self.add_constraint_with_scalars(matrix, Vec::new(), relation, bound)
    }

    pub fn add_constraint_with_scalars(
        &mut self,
        matrix: CMatrix,
        scalars: Vec<(usize, f64)>,
        relation: Relation,
        bound: f64,
    ) -> Result<()> {
        check_hermitian(&matrix, self.dim, "constraint")?;
        if let Some(&(idx, _)) = scalars.iter().find(|(i, _)| *i >= self.scalar_objective.len()) {
            return Err(Error::Dimension { expected: self.scalar_objective.len(), got: idx + 1 });
        }
        if !bound.is_finite() || scalars.iter().any(|(_, c)| !c.is_finite()) {
            return Err(Error::Domain { what: "constraint data", value: bound });
        }
        self.constraints.push(Constraint { matrix, scalars, relation, bound });
        Ok(())
    }

    pub fn num_scalars(&self) -> usize {
        self.scalar_objective.len()
    }

    /// Objective at (V, s).
    pub fn evaluate(&self, v: &CMatrix, s: &[f64]) -> f64 {
        trace_product(&self.objective, v)
            + self.scalar_objective.iter().zip(s).map(|(c, x)| c * x).sum::<f64>()
            + self.offset
    }

    /// Largest violation of any constraint (and the unit diagonal), relative to 1 + |bound|.
    pub fn max_violation(&self, v: &CMatrix, s: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for c in &self.constraints {
            let lhs = trace_product(&c.matrix, v) + c.scalars.iter().map(|&(i, a)| a * s[i]).sum::<f64>();
            let excess = match c.relation {
                Relation::Le => lhs - c.bound,
                Relation::Ge => c.bound - lhs,
                Relation::Eq => (lhs - c.bound).abs(),
            };
            worst = worst.max(excess.max(0.0) / (1.0 + c.bound.abs()));
        }
        if self.unit_diagonal {
            for m in 0..self.dim {
                worst = worst.max((v[(m, m)].re - 1.0).abs() / 2.0);
            }
        }
        worst.max(s.iter().map(|&x| (-x).max(0.0)).fold(0.0, f64::max))
    }

    /// Writes the problem in a line-oriented text format:
    ///
    /// ```text
    /// sdp <dim> <max|min> scalars <k> unit_diagonal <0|1> offset <f>
    /// objective
    /// <dim rows of "re:im" pairs separated by spaces>
    /// scalar_objective <k values>
    /// constraint <i> <le|eq|ge> <bound> scalars <idx:coef ...>
    /// <dim rows of "re:im" pairs>
    /// ```
    pub fn write_dump<W: Write>(&self, w: &mut W) -> io::Result<()> {
        let sense = match self.sense {
            Sense::Maximize => "max",
            Sense::Minimize => "min",
        };
        writeln!(
            w,
            "sdp {} {} scalars {} unit_diagonal {} offset {:.17e}",
            self.dim,
            sense,
            self.num_scalars(),
            u8::from(self.unit_diagonal),
            self.offset
        )?;
        writeln!(w, "objective")?;
        write_matrix(w, &self.objective)?;
        let so: Vec<String> = self.scalar_objective.iter().map(|c| format!("{c:.17e}")).collect();
        writeln!(w, "scalar_objective {}", so.join(" "))?;
        for (i, c) in self.constraints.iter().enumerate() {
            let sc: Vec<String> = c.scalars.iter().map(|(k, a)| format!("{k}:{a:.17e}")).collect();
            writeln!(w, "constraint {i} {} {:.17e} scalars {}", c.relation.as_str(), c.bound, sc.join(" "))?;
            write_matrix(w, &c.matrix)?;
        }
        Ok(())
    }
}

fn write_matrix<W: Write>(w: &mut W, m: &CMatrix) -> io::Result<()> {
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|c| format!("{:.17e}:{:.17e}", m[(r, c)].re, m[(r, c)].im)).collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}

fn check_hermitian(m: &CMatrix, dim: usize, what: &str) -> Result<()> {
    if m.nrows() != dim || m.ncols() != dim {
        return Err(Error::Dimension { expected: dim, got: m.nrows().max(m.ncols()) });
    }
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    for r in 0..dim {
        for c in r..dim {
            let z = m[(r, c)];
            if !(z.re.is_finite() && z.im.is_finite()) || (z - m[(c, r)].conj()).norm() > 1e-9 * scale {
                return Err(Error::Degenerate(format!("{what} matrix is not Hermitian at ({r}, {c})")));
            }
        }
    }
    Ok(())
}

/// Re Tr(A·B) for Hermitian A, B.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.transpose().iter()).map(|(x, y)| (x * y).re).sum()
}

/// [[Re H, −Im H], [Im H, Re H]]; ⟨½R(H), R(V)⟩ = Tr(H·V).
fn realify(h: &CMatrix) -> DMatrix<f64> {
    let n = h.nrows();
    DMatrix::from_fn(2 * n, 2 * n, |r, c| {
        let z = h[(r % n, c % n)];
        match (r < n, c < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

fn complexify(x: &DMatrix<f64>, n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |r, c| {
        C64::new(0.5 * (x[(r, c)] + x[(r + n, c + n)]), 0.5 * (x[(r + n, c)] - x[(r, c + n)]))
    })
}

struct Realified {
    sdp: RealSdp,
    objective_scale: f64,
}

fn to_real(p: &SdpProblem) -> Realified {
    let n = p.dim;
    let k_scalars = p.num_scalars();
    let n_slack = p.constraints.iter().filter(|c| c.relation != Relation::Eq).count();
    let k = k_scalars + n_slack;
    let sign = match p.sense {
        Sense::Maximize => -1.0,
        Sense::Minimize => 1.0,
    };

    let mut c_dense = realify(&p.objective) * (0.5 * sign);
    let mut c_diag = DVector::zeros(k);
    for (i, &c) in p.scalar_objective.iter().enumerate() {
        c_diag[i] = sign * c;
    }
    let c_norm = (c_dense.norm_squared() + c_diag.norm_squared()).sqrt();
    let objective_scale = if c_norm > 0.0 { c_norm } else { 1.0 };
    c_dense /= objective_scale;
    c_diag /= objective_scale;

    let mut a_dense = Vec::new();
    let mut a_diag = Vec::new();
    let mut b = Vec::new();
    let mut push_row = |ad: DMatrix<f64>, ag: DVector<f64>, bi: f64| {
        let norm = (ad.norm_squared() + ag.norm_squared()).sqrt();
        let s = if norm > 0.0 { 1.0 / norm } else { 1.0 };
        a_dense.push(ad * s);
        a_diag.push(ag * s);
        b.push(bi * s);
    };
    if p.unit_diagonal {
        for m in 0..n {
            let mut ad = DMatrix::zeros(2 * n, 2 * n);
            ad[(m, m)] = 0.5;
            ad[(m + n, m + n)] = 0.5;
            push_row(ad, DVector::zeros(k), 1.0);
        }
    }
    let mut slack = k_scalars;
    for c in &p.constraints {
        let mut ag = DVector::zeros(k);
        for &(i, a) in &c.scalars {
            ag[i] += a;
        }
        match c.relation {
            Relation::Le => {
                ag[slack] = 1.0;
                slack += 1;
            }
            Relation::Ge => {
                ag[slack] = -1.0;
                slack += 1;
            }
            Relation::Eq => {}
        }
        push_row(realify(&c.matrix) * 0.5, ag, c.bound);
    }
    Realified { sdp: RealSdp { a_dense, a_diag, b: DVector::from_vec(b), c_dense, c_diag }, objective_scale }
}

/// (λ₁, λ₂, principal unit eigenvector) of a Hermitian matrix; λ₂ = 0 when n = 1.
pub fn principal_eigen(v: &CMatrix) -> (f64, f64, CVector) {
    let eig = SymmetricEigen::new(v.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    // Stable sort keeps the first index on ties.
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let l1 = eig.eigenvalues[order[0]];
    let l2 = order.get(1).map_or(0.0, |&i| eig.eigenvalues[i]);
    (l1, l2, eig.eigenvectors.column(order[0]).into_owned())
}

fn rank_ratio(v: &CMatrix) -> f64 {
    let tr = v.trace().re;
    if tr <= 0.0 {
        return 0.0;
    }
    (principal_eigen(v).0 / tr).min(1.0)
}

pub const DEFAULT_MAX_ITER: usize = 120;

pub fn solve_sdp(problem: &SdpProblem, tol: f64) -> SdpSolution {
    let real = to_real(problem);
    let out = ipm::solve_real(&real.sdp, tol, DEFAULT_MAX_ITER);
    let n = problem.dim;
    let v = complexify(&out.x, n);
    let scalars: Vec<f64> = out.xd.iter().take(problem.num_scalars()).map(|&s| s.max(0.0)).collect();
    let status = match out.status {
        IpmStatus::Optimal => SdpStatus::Optimal,
        IpmStatus::Infeasible => SdpStatus::Infeasible,
        IpmStatus::MaxIter => SdpStatus::MaxIter,
    };
    let dual = out.dobj * real.objective_scale;
    let dual_bound = match problem.sense {
        Sense::Maximize => -dual + problem.offset,
        Sense::Minimize => dual + problem.offset,
    };
    let objective = problem.evaluate(&v, &scalars);
    let ratio = rank_ratio(&v);
    SdpSolution {
        objective,
        max_violation: problem.max_violation(&v, &scalars),
        rank_ratio: ratio,
        relaxed_objective: objective,
        relaxed_rank_ratio: ratio,
        v,
        scalars,
        dual_bound,
        status,
        iterations: out.iterations,
        delta_trace: Vec::new(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SrocrSchedule {
    pub initial_step: f64,
    pub min_step: f64,
    pub target_rank_ratio: f64,
    /// Violation of the original constraints tolerated by the final rank-one projection.
    pub projection_tol: f64,
    pub max_solves: usize,
}

impl Default for SrocrSchedule {
    fn default() -> Self {
        Self { initial_step: 0.1, min_step: 1e-3, target_rank_ratio: 0.999, projection_tol: 1e-5, max_solves: 200 }
    }
}

/// Tightens u·uᴴ-alignment of V until it is effectively rank one, then projects
/// onto the unit-modulus lifting [v; 1][v; 1]ᴴ.
pub fn srocr(problem: &SdpProblem, schedule: &SrocrSchedule, tol: f64) -> Result<SdpSolution> {
    if !problem.unit_diagonal {
        return Err(Error::Degenerate("SROCR needs a unit-diagonal problem".into()));
    }
    let mut best = solve_sdp(problem, tol);
    best.delta_trace.push(0.0);
    if best.status != SdpStatus::Optimal {
        return Ok(best);
    }
    let mut delta = 0.0;
    let mut step = schedule.initial_step;
    let mut solves = 1;
    let mut last_projection: Option<SdpSolution> = None;
    let mut aimed = false;
    loop {
        if best.rank_ratio >= schedule.target_rank_ratio {
            let projected = project_rank_one(problem, &best)?;
            if projected.max_violation <= schedule.projection_tol || delta >= 1.0 {
                return Ok(projected);
            }
            last_projection = Some(projected);
        }
        let stalled = step < schedule.min_step;
        if solves >= schedule.max_solves || (stalled && (aimed || delta >= schedule.target_rank_ratio)) {
            return Ok(match last_projection {
                // Rank-one target met; only the projection tolerance was missed.
                Some(p) => p,
                None => SdpSolution { status: SdpStatus::RelaxationFailed, ..best },
            });
        }
        // Halving toward δ = 1 approaches it geometrically and can stop short of the
        // rank target, so the last attempt asks for the target itself.
        let trial = if stalled {
            aimed = true;
            schedule.target_rank_ratio
        } else if delta + step > 1.0 - 1e-12 {
            1.0
        } else {
            delta + step
        };
        let (_, _, u) = principal_eigen(&best.v);
        let mut sol = solve_tightened(problem, &u, trial, tol)?;
        solves += 1;
        if sol.status != SdpStatus::Optimal {
            // The eigenvector can miss the feasible rank-one lifts when V decouples a
            // coordinate the data never touches; its unit-modulus projection cannot.
            let projected = unit_modulus_direction(&u);
            if (&projected - &u).norm() > 1e-9 {
                sol = solve_tightened(problem, &projected, trial, tol)?;
                solves += 1;
            }
        }
        if sol.status == SdpStatus::Optimal {
            delta = trial;
            let mut trace = std::mem::take(&mut best.delta_trace);
            trace.push(delta);
            best =
                SdpSolution { max_violation: problem.max_violation(&sol.v, &sol.scalars), delta_trace: trace, ..sol };
        } else {
            step *= 0.5;
        }
    }
}

/// Solves the problem with the extra cut uᴴVu ≥ δ·Tr(V).
fn solve_tightened(problem: &SdpProblem, u: &CVector, delta: f64, tol: f64) -> Result<SdpSolution> {
    let mut augmented = problem.clone();
    let cut = u * u.adjoint() - CMatrix::identity(problem.dim, problem.dim) * C64::new(delta, 0.0);
    augmented.add_constraint(cut, Relation::Ge, 0.0)?;
    Ok(solve_sdp(&augmented, tol))
}

/// [phase(u₁/u_n), …, 1]/√n: the lift direction of the phase vector extracted from u.
fn unit_modulus_direction(u: &CVector) -> CVector {
    let n = u.len();
    let last = u[n - 1];
    let rot = if last.norm() > 0.0 { last.conj() / last.norm() } else { C64::new(1.0, 0.0) };
    let scale = 1.0 / (n as f64).sqrt();
    CVector::from_iterator(
        n,
        u.iter().enumerate().map(|(i, z)| {
            let w = z * rot;
            if i == n - 1 || w.norm() == 0.0 {
                C64::new(scale, 0.0)
            } else {
                w / w.norm() * scale
            }
        }),
    )
}

fn project_rank_one(problem: &SdpProblem, sol: &SdpSolution) -> Result<SdpSolution> {
    let phase = extract_phase(sol)?;
    let v = phase.lifted();
    let mut trace = sol.delta_trace.clone();
    trace.push(1.0);
    Ok(SdpSolution {
        objective: problem.evaluate(&v, &sol.scalars),
        max_violation: problem.max_violation(&v, &sol.scalars),
        rank_ratio: rank_ratio(&v),
        v,
        scalars: sol.scalars.clone(),
        dual_bound: sol.dual_bound,
        status: SdpStatus::Optimal,
        iterations: sol.iterations,
        delta_trace: trace,
        relaxed_objective: sol.relaxed_objective,
        relaxed_rank_ratio: sol.relaxed_rank_ratio,
    })
}

/// Unit-modulus phase vector from the principal eigenvector of V = [v; 1][v; 1]ᴴ,
/// normalized so the last entry is real and positive.
pub fn extract_phase(sol: &SdpSolution) -> Result<PhaseProfile> {
    if sol.rank_ratio < 0.9 {
        return Err(Error::Degenerate(format!("rank ratio {} below 0.9", sol.rank_ratio)));
    }
    let n = sol.v.nrows();
    let m = n - 1;
    if m <= 1 {
        // A single element's phase is unobservable in every objective.
        return Ok(PhaseProfile::zeros(m));
    }
    let (l1, l2, u) = principal_eigen(&sol.v);
    if l1 - l2 <= 1e-10 * l1.abs().max(1.0) {
        return Err(Error::Degenerate("principal eigenvalue is not simple".into()));
    }
    let last = u[m];
    let rot = if last.norm() > 0.0 { last.conj() / last.norm() } else { C64::new(1.0, 0.0) };
    let w = CVector::from_iterator(m, u.iter().take(m).map(|z| z * rot));
    Ok(PhaseProfile::from_vector(&w))
}
