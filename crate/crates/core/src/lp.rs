//! Dense revised-simplex solver for small equality-form linear programs:
//! min cᵀx subject to Ax = b, x ≥ 0, started from a caller-supplied feasible
//! basis. The basis inverse is kept explicitly and refreshed periodically;
//! Bland's rule kicks in after a degeneracy stall. Desk-scale only — a few
//! thousand rows at most.

use crate::error::{Error, Result};

pub(crate) struct LpProblem {
    pub nrows: usize,
    pub ncols: usize,
    /// Column-major constraint matrix; column j is `cols[j*nrows..(j+1)*nrows]`.
    pub cols: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    /// Per-variable upper bounds used only for the duality-gap certificate.
    pub upper_hints: Vec<f64>,
}

pub(crate) struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub dual: Vec<f64>,
    pub iterations: usize,
    /// Bound on cᵀx − (optimal value) from the final reduced costs.
    pub gap_bound: f64,
    pub primal_residual: f64,
}

const TOL_RC: f64 = 1e-11;
const TOL_PIVOT: f64 = 1e-10;
const REFRESH_EVERY: usize = 256;
const STALL_LIMIT: usize = 40;

impl LpProblem {
    fn col(&self, j: usize) -> &[f64] {
        &self.cols[j * self.nrows..(j + 1) * self.nrows]
    }
}

struct Tableau<'a> {
    p: &'a LpProblem,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    /// Row-major inverse of the basis matrix.
    binv: Vec<f64>,
    xb: Vec<f64>,
}

impl<'a> Tableau<'a> {
    fn new(p: &'a LpProblem, basis: Vec<usize>) -> Result<Self> {
        if basis.len() != p.nrows {
            return Err(Error::DimensionMismatch { expected: p.nrows, got: basis.len() });
        }
        let mut is_basic = vec![false; p.ncols];
        for &j in &basis {
            is_basic[j] = true;
        }
        let mut t = Self { p, basis, is_basic, binv: Vec::new(), xb: Vec::new() };
        t.refactorize()?;
        Ok(t)
    }

    /// Rebuilds the basis inverse by Gauss-Jordan with partial pivoting.
    fn refactorize(&mut self) -> Result<()> {
        let r = self.p.nrows;
        let mut work = vec![0.0; r * 2 * r];
        for (col_pos, &j) in self.basis.iter().enumerate() {
            let col = self.p.col(j);
            for i in 0..r {
                work[i * 2 * r + col_pos] = col[i];
            }
        }
        for i in 0..r {
            work[i * 2 * r + r + i] = 1.0;
        }
        for piv in 0..r {
            let mut best = piv;
            let mut best_abs = work[piv * 2 * r + piv].abs();
            for i in (piv + 1)..r {
                let a = work[i * 2 * r + piv].abs();
                if a > best_abs {
                    best_abs = a;
                    best = i;
                }
            }
            if best_abs < 1e-12 {
                return Err(Error::SolverFailure {
                    context: "singular simplex basis".into(),
                    lower: f64::NEG_INFINITY,
                    upper: f64::INFINITY,
                });
            }
            if best != piv {
                for k in 0..2 * r {
                    work.swap(piv * 2 * r + k, best * 2 * r + k);
                }
            }
            let inv = 1.0 / work[piv * 2 * r + piv];
            for k in 0..2 * r {
                work[piv * 2 * r + k] *= inv;
            }
            for i in 0..r {
                if i == piv {
                    continue;
                }
                let factor = work[i * 2 * r + piv];
                if factor == 0.0 {
                    continue;
                }
                for k in 0..2 * r {
                    work[i * 2 * r + k] -= factor * work[piv * 2 * r + k];
                }
            }
        }
        self.binv = vec![0.0; r * r];
        for i in 0..r {
            for k in 0..r {
                self.binv[i * r + k] = work[i * 2 * r + r + k];
            }
        }
        self.xb = self.mat_vec(&self.p.b);
        for v in &mut self.xb {
            if *v < 0.0 && *v > -1e-9 {
                *v = 0.0;
            }
        }
        Ok(())
    }

    fn mat_vec(&self, v: &[f64]) -> Vec<f64> {
        let r = self.p.nrows;
        let mut out = vec![0.0; r];
        for i in 0..r {
            let row = &self.binv[i * r..(i + 1) * r];
            out[i] = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
        out
    }

    /// y = c_Bᵀ B⁻¹.
    fn duals(&self) -> Vec<f64> {
        let r = self.p.nrows;
        let mut y = vec![0.0; r];
        for (i, &j) in self.basis.iter().enumerate() {
            let cb = self.p.c[j];
            if cb == 0.0 {
                continue;
            }
            let row = &self.binv[i * r..(i + 1) * r];
            for k in 0..r {
                y[k] += cb * row[k];
            }
        }
        y
    }

    fn reduced_cost(&self, y: &[f64], j: usize) -> f64 {
        let dot: f64 = self.p.col(j).iter().zip(y).map(|(a, b)| a * b).sum();
        self.p.c[j] - dot
    }
}

pub(crate) fn solve_with_basis(
    p: &LpProblem,
    basis: Vec<usize>,
    max_iter: usize,
) -> Result<LpSolution> {
    let mut t = Tableau::new(p, basis)?;
    let mut iterations = 0usize;
    let mut stall = 0usize;
    let mut bland = false;

    loop {
        if iterations >= max_iter {
            return Err(Error::SolverFailure {
                context: format!("simplex exceeded {max_iter} iterations"),
                lower: f64::NEG_INFINITY,
                upper: f64::INFINITY,
            });
        }
        let y = t.duals();

        let mut entering = None;
        if bland {
            for j in 0..p.ncols {
                if !t.is_basic[j] && t.reduced_cost(&y, j) < -TOL_RC {
                    entering = Some(j);
                    break;
                }
            }
        } else {
            let mut best = -TOL_RC;
            for j in 0..p.ncols {
                if t.is_basic[j] {
                    continue;
                }
                let rc = t.reduced_cost(&y, j);
                if rc < best {
                    best = rc;
                    entering = Some(j);
                }
            }
        }
        let Some(e) = entering else { break };

        let d = t.mat_vec(p.col(e));
        let mut leave: Option<usize> = None;
        let mut theta = f64::INFINITY;
        for i in 0..p.nrows {
            if d[i] > TOL_PIVOT {
                let ratio = t.xb[i].max(0.0) / d[i];
                let better = match leave {
                    None => true,
                    Some(l) => {
                        ratio < theta - 1e-12
                            || ((ratio - theta).abs() <= 1e-12 && t.basis[i] < t.basis[l])
                    }
                };
                if better {
                    theta = ratio;
                    leave = Some(i);
                }
            }
        }
        let Some(l) = leave else {
            return Err(Error::SolverFailure {
                context: "unbounded linear program".into(),
                lower: f64::NEG_INFINITY,
                upper: f64::INFINITY,
            });
        };

        if theta < 1e-13 {
            stall += 1;
            if stall > STALL_LIMIT {
                bland = true;
            }
        } else {
            stall = 0;
        }

        // eta update of the inverse and the basic solution
        let r = p.nrows;
        let piv = d[l];
        for k in 0..r {
            t.binv[l * r + k] /= piv;
        }
        let pivot_row: Vec<f64> = t.binv[l * r..(l + 1) * r].to_vec();
        for i in 0..r {
            if i == l {
                continue;
            }
            let factor = d[i];
            if factor == 0.0 {
                continue;
            }
            for k in 0..r {
                t.binv[i * r + k] -= factor * pivot_row[k];
            }
        }
        for i in 0..r {
            if i != l {
                t.xb[i] -= theta * d[i];
                if t.xb[i] < 0.0 && t.xb[i] > -1e-9 {
                    t.xb[i] = 0.0;
                }
            }
        }
        t.xb[l] = theta;
        t.is_basic[t.basis[l]] = false;
        t.is_basic[e] = true;
        t.basis[l] = e;

        iterations += 1;
        if iterations % REFRESH_EVERY == 0 {
            t.refactorize()?;
        }
    }

    // final certificate pass on a freshly factorized basis
    t.refactorize()?;
    let y = t.duals();
    let mut gap_bound = 0.0;
    for j in 0..p.ncols {
        if t.is_basic[j] {
            continue;
        }
        let rc = t.reduced_cost(&y, j);
        if rc < 0.0 {
            gap_bound += (-rc) * p.upper_hints[j];
        }
    }

    let mut x = vec![0.0; p.ncols];
    for (i, &j) in t.basis.iter().enumerate() {
        x[j] = t.xb[i].max(0.0);
    }
    let mut residual = vec![0.0; p.nrows];
    for (i, r) in residual.iter_mut().enumerate() {
        *r = -p.b[i];
    }
    for j in 0..p.ncols {
        if x[j] != 0.0 {
            for (i, a) in p.col(j).iter().enumerate() {
                residual[i] += a * x[j];
            }
        }
    }
    let primal_residual = residual.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let objective = x.iter().zip(&p.c).map(|(a, b)| a * b).sum();

    Ok(LpSolution { x, objective, dual: y, iterations, gap_bound, primal_residual })
}
