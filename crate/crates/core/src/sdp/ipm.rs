//! Infeasible-start primal–dual interior-point method for
//! min ⟨C, X⟩ s.t. ⟨A_i, X⟩ = b_i, X ⪰ 0, where X = blkdiag(dense, diagonal).
//! HKM search direction with Mehrotra predictor–corrector.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

pub(crate) struct RealSdp {
    pub a_dense: Vec<DMatrix<f64>>,
    pub a_diag: Vec<DVector<f64>>,
    pub b: DVector<f64>,
    pub c_dense: DMatrix<f64>,
    pub c_diag: DVector<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum IpmStatus {
    Optimal,
    Infeasible,
    MaxIter,
}

pub(crate) struct IpmOutput {
    pub x: DMatrix<f64>,
    pub xd: DVector<f64>,
    pub dobj: f64,
    pub status: IpmStatus,
    pub iterations: usize,
}

struct Residuals {
    rp: DVector<f64>,
    rd: DMatrix<f64>,
    rdd: DVector<f64>,
}

// Fraction of the distance to the cone boundary taken per step.
const STEP_FRACTION: f64 = 0.98;
// ‖y‖ beyond which a dual ray is tested as an infeasibility certificate.
const RAY_NORM: f64 = 1e8;

impl RealSdp {
    fn m(&self) -> usize {
        self.b.len()
    }

    fn apply(&self, x: &DMatrix<f64>, xd: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.m(), |i, _| self.a_dense[i].dot(x) + self.a_diag[i].dot(xd))
    }

    fn adjoint(&self, y: &DVector<f64>) -> (DMatrix<f64>, DVector<f64>) {
        let mut d = DMatrix::zeros(self.c_dense.nrows(), self.c_dense.ncols());
        let mut v = DVector::zeros(self.c_diag.len());
        for i in 0..self.m() {
            if y[i] != 0.0 {
                d += &self.a_dense[i] * y[i];
                v.axpy(y[i], &self.a_diag[i], 1.0);
            }
        }
        (d, v)
    }
}

fn sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Largest t with X + t·dX ⪰ 0 (∞ if unbounded); X must be positive definite.
fn max_step_dense(x: &DMatrix<f64>, dx: &DMatrix<f64>) -> f64 {
    if x.nrows() == 0 {
        return f64::INFINITY;
    }
    let Some(ch) = x.clone().cholesky() else { return 0.0 };
    let l = ch.l();
    let Some(w) = l.solve_lower_triangular(dx) else { return 0.0 };
    let Some(s) = l.solve_lower_triangular(&w.transpose()) else { return 0.0 };
    let lmin = SymmetricEigen::new(sym(&s)).eigenvalues.min();
    if lmin >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lmin
    }
}

fn max_step_diag(x: &DVector<f64>, dx: &DVector<f64>) -> f64 {
    x.iter().zip(dx.iter()).filter(|(_, &d)| d < 0.0).map(|(&v, &d)| -v / d).fold(f64::INFINITY, f64::min)
}

struct Direction {
    dx: DMatrix<f64>,
    dxd: DVector<f64>,
    dy: DVector<f64>,
    dz: DMatrix<f64>,
    dzd: DVector<f64>,
}

pub(crate) fn solve_real(p: &RealSdp, tol: f64, max_iter: usize) -> IpmOutput {
    let m = p.m();
    let nd = p.c_dense.nrows();
    let k = p.c_diag.len();
    let ntot = (nd + k) as f64;

    let norm_a: Vec<f64> = (0..m).map(|i| (p.a_dense[i].norm_squared() + p.a_diag[i].norm_squared()).sqrt()).collect();
    let norm_c = (p.c_dense.norm_squared() + p.c_diag.norm_squared()).sqrt();
    let norm_b = p.b.norm();
    let dim = (nd.max(1)) as f64;
    let xi0 = (0..m).map(|i| dim * (1.0 + p.b[i].abs()) / (1.0 + norm_a[i])).fold(10f64.max(dim.sqrt()), f64::max);
    let eta0 = norm_a.iter().copied().fold(10f64.max(dim.sqrt()).max(norm_c), f64::max);

    let mut x = DMatrix::identity(nd, nd) * xi0;
    let mut xd = DVector::from_element(k, xi0);
    let mut y = DVector::zeros(m);
    let mut z = DMatrix::identity(nd, nd) * eta0;
    let mut zd = DVector::from_element(k, eta0);

    let residuals = |x: &DMatrix<f64>, xd: &DVector<f64>, y: &DVector<f64>, z: &DMatrix<f64>, zd: &DVector<f64>| {
        let rp = &p.b - p.apply(x, xd);
        let (aty, atyd) = p.adjoint(y);
        Residuals { rp, rd: &p.c_dense - z - aty, rdd: &p.c_diag - zd - atyd }
    };

    let mut status = IpmStatus::MaxIter;
    let mut iterations = 0;
    let mut best_merit = f64::INFINITY;
    let mut best = (x.clone(), xd.clone(), y.clone());
    for iter in 0..max_iter {
        iterations = iter;
        let r = residuals(&x, &xd, &y, &z, &zd);
        let pobj = p.c_dense.dot(&x) + p.c_diag.dot(&xd);
        let dobj = p.b.dot(&y);
        let relp = r.rp.norm() / (1.0 + norm_b);
        let reld = (r.rd.norm_squared() + r.rdd.norm_squared()).sqrt() / (1.0 + norm_c);
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        let merit = relp.max(reld).max(gap);
        if merit < best_merit {
            best_merit = merit;
            best = (x.clone(), xd.clone(), y.clone());
        }
        if merit < tol {
            status = IpmStatus::Optimal;
            break;
        }
        if y.norm() > RAY_NORM && dobj > 0.0 && is_primal_infeasibility_ray(p, &y) {
            status = IpmStatus::Infeasible;
            break;
        }

        let Some(zch) = z.clone().cholesky() else { break };
        let zinv = zch.inverse();
        // Schur complement M_ij = tr(A_i X A_j Z⁻¹) + Σ a_i a_j x/z.
        let ratio = xd.component_div(&zd);
        let t: Vec<DMatrix<f64>> = (0..m).map(|j| &x * &p.a_dense[j] * &zinv).collect();
        let mut schur = DMatrix::from_fn(m, m, |i, j| {
            p.a_dense[i].dot(&t[j]) + p.a_diag[i].component_mul(&p.a_diag[j]).dot(&ratio)
        });
        schur = sym(&schur);
        let scale = schur.diagonal().amax().max(1e-300);
        let factor = match schur.clone().cholesky() {
            Some(c) => SchurFactor::Chol(c),
            None => {
                for i in 0..m {
                    schur[(i, i)] += 1e-14 * scale;
                }
                SchurFactor::Lu(schur.lu())
            }
        };

        let direction = |target: f64, corr: Option<(&DMatrix<f64>, &DVector<f64>)>| -> Option<Direction> {
            let xrz = &x * &r.rd * &zinv;
            let mut rhs = p.b.clone() - p.apply(&zinv, &zd.map(|v| 1.0 / v)) * target;
            rhs += p.apply(&xrz, &xd.component_mul(&r.rdd).component_div(&zd));
            if let Some((cd, cdd)) = corr {
                rhs += p.apply(cd, cdd);
            }
            let dy = factor.solve(&rhs)?;
            let (atdy, atdyd) = p.adjoint(&dy);
            let dz = &r.rd - atdy;
            let dzd = &r.rdd - atdyd;
            let mut dx = &zinv * target - &x - &x * &dz * &zinv;
            let mut dxd = zd.map(|v| target / v) - &xd - xd.component_mul(&dzd).component_div(&zd);
            if let Some((cd, cdd)) = corr {
                dx -= cd;
                dxd -= cdd;
            }
            Some(Direction { dx: sym(&dx), dxd, dy, dz: sym(&dz), dzd })
        };

        let mu = (x.dot(&z) + xd.dot(&zd)) / ntot;
        let Some(aff) = direction(0.0, None) else { break };
        let ap = 1f64.min(max_step_dense(&x, &aff.dx)).min(max_step_diag(&xd, &aff.dxd));
        let ad = 1f64.min(max_step_dense(&z, &aff.dz)).min(max_step_diag(&zd, &aff.dzd));
        let mu_aff =
            ((&x + &aff.dx * ap).dot(&(&z + &aff.dz * ad)) + (&xd + &aff.dxd * ap).dot(&(&zd + &aff.dzd * ad))) / ntot;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);
        let corr = &aff.dx * &aff.dz * &zinv;
        let corrd = aff.dxd.component_mul(&aff.dzd).component_div(&zd);
        let Some(d) = direction(sigma * mu, Some((&corr, &corrd))) else { break };

        let ap = 1f64.min(STEP_FRACTION * max_step_dense(&x, &d.dx).min(max_step_diag(&xd, &d.dxd)));
        let ad = 1f64.min(STEP_FRACTION * max_step_dense(&z, &d.dz).min(max_step_diag(&zd, &d.dzd)));
        if ap < 1e-12 && ad < 1e-12 {
            break;
        }
        x = sym(&(&x + &d.dx * ap));
        xd += &d.dxd * ap;
        y += &d.dy * ad;
        z = sym(&(&z + &d.dz * ad));
        zd += &d.dzd * ad;
    }
    if status == IpmStatus::MaxIter && best_merit < tol.sqrt() * 1e-2 {
        // Stalled at a point that is still accurate to ~1e-6; accept it.
        status = IpmStatus::Optimal;
    }
    if status != IpmStatus::Infeasible {
        (x, xd, y) = best;
    }
    let dobj = p.b.dot(&y);
    IpmOutput { x, xd, dobj, status, iterations }
}

enum SchurFactor {
    Chol(nalgebra::Cholesky<f64, nalgebra::Dyn>),
    Lu(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
}

impl SchurFactor {
    fn solve(&self, rhs: &DVector<f64>) -> Option<DVector<f64>> {
        let out = match self {
            SchurFactor::Chol(c) => c.solve(rhs),
            SchurFactor::Lu(l) => l.solve(rhs)?,
        };
        out.iter().all(|v| v.is_finite()).then_some(out)
    }
}

/// y certifies primal infeasibility when bᵀy > 0 and −Σ yᵢAᵢ ⪰ 0.
fn is_primal_infeasibility_ray(p: &RealSdp, y: &DVector<f64>) -> bool {
    let by = p.b.dot(y);
    if by <= 0.0 {
        return false;
    }
    let yh = y / by;
    let (s, sd) = p.adjoint(&yh);
    let scale = yh.norm().max(1e-300);
    let dense_min = if s.nrows() > 0 { SymmetricEigen::new(-s).eigenvalues.min() } else { 0.0 };
    let diag_min = sd.iter().map(|v| -v).fold(f64::INFINITY, f64::min);
    dense_min.min(diag_min) >= -1e-6 * scale
}
