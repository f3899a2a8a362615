//! Exact-per-draw suprema of linear functionals over convex hulls, with norm
//! or mean localization, plus convex-hull ERM.
//!
//! The norm-constrained problem sup { ⟨z, h⟩ : h ∈ conv(F) − conv(F),
//! ‖h‖ ≤ δ } is solved by bisection on the Lagrange multiplier of the norm
//! constraint; each multiplier value leaves a concave quadratic over the
//! difference hull, maximized by pairwise Frank–Wolfe whose linear oracle is
//! the best vertex pair. The returned value carries a primal/dual certificate:
//! a feasible point within `TOL_OPT` of a weak-duality upper bound.
//!
//! Mean-capped suprema are linear programs over a simplex with a single extra
//! cap, so their extreme points are vertices or two-vertex mixtures crossing
//! the cap; they are solved exactly by enumeration. ERM over the hull is an
//! L1 fit solved by the dense simplex in `lp`.

use rayon::prelude::*;

use crate::classdata::{clamp_dist_sq, ConvexCombination, SampledClass};
use crate::error::{Error, Result};
use crate::lp::{solve_with_basis, LpProblem};
use crate::process::{curve_from_draws, gaussian_noise, rademacher_signs, ModulusCurve};

/// Relative tolerance of the certified hull supremum.
pub const TOL_OPT: f64 = 1e-6;
/// Inner Frank–Wolfe iteration budget per multiplier value.
pub const MAX_INNER_ITERS: usize = 10_000;
const MAX_BISECTIONS: usize = 90;

/// Cached pairwise geometry of a class: the Gram matrix, the diameter and the
/// farthest pair. Build once, share across draws.
pub struct HullGeometry {
    m: usize,
    gram: Vec<f64>,
    pub diameter: f64,
}

impl HullGeometry {
    pub fn new(class: &SampledClass) -> Self {
        let m = class.m();
        let mut gram = vec![0.0; m * m];
        for i in 0..m {
            for j in i..m {
                let v = class.inner(i, j);
                gram[i * m + j] = v;
                gram[j * m + i] = v;
            }
        }
        let mut diam_sq = 0.0_f64;
        for i in 0..m {
            for j in (i + 1)..m {
                let d2 = clamp_dist_sq(gram[i * m + i] - 2.0 * gram[i * m + j] + gram[j * m + j]);
                if d2 > diam_sq {
                    diam_sq = d2;
                }
            }
        }
        Self { m, gram, diameter: diam_sq.sqrt() }
    }

    #[inline]
    fn g(&self, i: usize, j: usize) -> f64 {
        self.gram[i * self.m + j]
    }

    #[inline]
    fn col(&self, j: usize) -> &[f64] {
        &self.gram[j * self.m..(j + 1) * self.m]
    }

    fn dist_sq(&self, i: usize, j: usize) -> f64 {
        clamp_dist_sq(self.g(i, i) - 2.0 * self.g(i, j) + self.g(j, j))
    }
}

/// Iterate of the pairwise Frank–Wolfe solver over conv{e_i − e_j}.
pub struct PfwState {
    atoms: Vec<(u32, u32, f64)>,
    w: Vec<f64>,
    gw: Vec<f64>,
    cw: f64,
    wgw: f64,
    initialized: bool,
    iters_since_refresh: usize,
}

impl PfwState {
    pub fn new(m: usize) -> Self {
        Self {
            atoms: Vec::new(),
            w: vec![0.0; m],
            gw: vec![0.0; m],
            cw: 0.0,
            wgw: 0.0,
            initialized: false,
            iters_since_refresh: 0,
        }
    }

    fn reset(&mut self, geom: &HullGeometry, c: &[f64], plus: usize, minus: usize) {
        self.atoms.clear();
        self.atoms.push((plus as u32, minus as u32, 1.0));
        self.w.iter_mut().for_each(|v| *v = 0.0);
        self.w[plus] += 1.0;
        self.w[minus] -= 1.0;
        for (k, g) in self.gw.iter_mut().enumerate() {
            *g = geom.g(plus, k) - geom.g(minus, k);
        }
        self.cw = c[plus] - c[minus];
        self.wgw = geom.g(plus, plus) - 2.0 * geom.g(plus, minus) + geom.g(minus, minus);
        self.initialized = true;
        self.iters_since_refresh = 0;
    }

    /// Recomputes the objective terms after the linear objective changed
    /// (the geometry and the iterate stay warm across draws and radii).
    fn resync_objective(&mut self, c: &[f64]) {
        self.cw = self.w.iter().zip(c).map(|(a, b)| a * b).sum();
    }

    fn refresh(&mut self, geom: &HullGeometry, c: &[f64]) {
        let m = self.w.len();
        let mut total = 0.0;
        self.atoms.retain(|&(_, _, wt)| wt > 1e-15);
        for &(_, _, wt) in &self.atoms {
            total += wt;
        }
        if !self.atoms.is_empty() && (total - 1.0).abs() > 1e-12 {
            for atom in &mut self.atoms {
                atom.2 /= total;
            }
        }
        self.w.iter_mut().for_each(|v| *v = 0.0);
        self.gw.iter_mut().for_each(|v| *v = 0.0);
        for &(p, q, wt) in &self.atoms {
            self.w[p as usize] += wt;
            self.w[q as usize] -= wt;
            let (pc, qc) = (geom.col(p as usize), geom.col(q as usize));
            for k in 0..m {
                self.gw[k] += wt * (pc[k] - qc[k]);
            }
        }
        self.resync_objective(c);
        self.wgw = self.w.iter().zip(&self.gw).map(|(a, b)| a * b).sum();
        self.iters_since_refresh = 0;
    }

    fn atom_weight_index(&self, p: u32, q: u32) -> Option<usize> {
        self.atoms.iter().position(|&(a, b, _)| a == p && b == q)
    }
}

/// One converged inner maximization of c·w − τ wᵀGw over the difference hull.
struct InnerSolution {
    value: f64,
    gap: f64,
    norm_sq: f64,
    linear: f64,
}

fn solve_inner(
    geom: &HullGeometry,
    c: &[f64],
    tau: f64,
    gap_tol: f64,
    state: &mut PfwState,
) -> InnerSolution {
    let m = geom.m;
    let mut gap = f64::INFINITY;
    for _ in 0..MAX_INNER_ITERS {
        // scores of single coordinates under the current gradient c − 2τGw
        let mut s_best = 0usize;
        let mut s_val = f64::NEG_INFINITY;
        let mut r_best = 0usize;
        let mut r_val = f64::INFINITY;
        for k in 0..m {
            let g = c[k] - 2.0 * tau * state.gw[k];
            if g > s_val {
                s_val = g;
                s_best = k;
            }
            if g < r_val {
                r_val = g;
                r_best = k;
            }
        }
        let score_fw = s_val - r_val;
        let grad_dot_w = state.cw - 2.0 * tau * state.wgw;
        gap = score_fw - grad_dot_w;
        if gap <= gap_tol {
            break;
        }

        // worst active atom under the same gradient
        let mut away_idx = 0usize;
        let mut away_score = f64::INFINITY;
        for (idx, &(p, q, _)) in state.atoms.iter().enumerate() {
            let sc = (c[p as usize] - 2.0 * tau * state.gw[p as usize])
                - (c[q as usize] - 2.0 * tau * state.gw[q as usize]);
            if sc < away_score {
                away_score = sc;
                away_idx = idx;
            }
        }
        let (ap, aq, aw) = state.atoms[away_idx];
        let (s, r) = (s_best, r_best);

        let u_gu = geom.g(s, s) - 2.0 * geom.g(s, r) + geom.g(r, r);
        let pairwise = !(ap as usize == s && aq as usize == r);
        if pairwise {
            let (a, b) = (ap as usize, aq as usize);
            let u_gv = geom.g(s, a) - geom.g(s, b) - geom.g(r, a) + geom.g(r, b);
            let v_gv = geom.g(a, a) - 2.0 * geom.g(a, b) + geom.g(b, b);
            let d_gd = u_gu - 2.0 * u_gv + v_gv;
            let slope = score_fw - away_score;
            if slope <= 0.0 {
                break;
            }
            let gamma_max = aw;
            let gamma = if tau * d_gd > 1e-300 {
                (slope / (2.0 * tau * d_gd)).min(gamma_max)
            } else {
                gamma_max
            };
            if gamma <= 0.0 {
                break;
            }
            let w_gd_old = state.gw[s] - state.gw[r] - state.gw[a] + state.gw[b];
            state.w[s] += gamma;
            state.w[r] -= gamma;
            state.w[a] -= gamma;
            state.w[b] += gamma;
            let (sc, rc, ac, bc) = (geom.col(s), geom.col(r), geom.col(a), geom.col(b));
            for k in 0..m {
                state.gw[k] += gamma * (sc[k] - rc[k] - ac[k] + bc[k]);
            }
            state.cw += gamma * (c[s] - c[r] - c[a] + c[b]);
            state.wgw += 2.0 * gamma * w_gd_old + gamma * gamma * d_gd;
            state.atoms[away_idx].2 -= gamma;
            if state.atoms[away_idx].2 <= 1e-15 {
                state.atoms.swap_remove(away_idx);
            }
            match state.atom_weight_index(s as u32, r as u32) {
                Some(i) => state.atoms[i].2 += gamma,
                None => state.atoms.push((s as u32, r as u32, gamma)),
            }
        } else {
            // plain step toward the best vertex pair
            let u_gw = state.gw[s] - state.gw[r];
            let d_gd = u_gu - 2.0 * u_gw + state.wgw;
            let gamma = if tau * d_gd > 1e-300 {
                (gap / (2.0 * tau * d_gd)).clamp(0.0, 1.0)
            } else {
                1.0
            };
            if gamma <= 0.0 {
                break;
            }
            let keep = 1.0 - gamma;
            for v in state.w.iter_mut() {
                *v *= keep;
            }
            state.w[s] += gamma;
            state.w[r] -= gamma;
            let (sc, rc) = (geom.col(s), geom.col(r));
            for k in 0..m {
                state.gw[k] = keep * state.gw[k] + gamma * (sc[k] - rc[k]);
            }
            state.cw = keep * state.cw + gamma * (c[s] - c[r]);
            state.wgw = keep * keep * state.wgw
                + 2.0 * gamma * keep * u_gw
                + gamma * gamma * u_gu;
            for atom in &mut state.atoms {
                atom.2 *= keep;
            }
            match state.atom_weight_index(s as u32, r as u32) {
                Some(i) => state.atoms[i].2 += gamma,
                None => state.atoms.push((s as u32, r as u32, gamma)),
            }
            state.atoms.retain(|&(_, _, wt)| wt > 1e-15);
        }

        state.iters_since_refresh += 1;
        if state.iters_since_refresh >= 2048 {
            state.refresh(geom, c);
        }
    }
    InnerSolution {
        value: state.cw - tau * state.wgw,
        gap: gap.max(0.0),
        norm_sq: state.wgw.max(0.0),
        linear: state.cw,
    }
}

#[derive(Clone)]
struct PrimalSnapshot {
    w: Vec<f64>,
    gw: Vec<f64>,
    cw: f64,
    norm_sq: f64,
}

/// Best feasible value on the segment between an inside-ball iterate and an
/// outside-ball iterate; closes the duality gap at kinks of the dual.
fn mix_candidate(inside: &PrimalSnapshot, outside: &PrimalSnapshot, delta_sq: f64) -> f64 {
    let q11 = inside.norm_sq;
    let q22 = outside.norm_sq;
    let q12: f64 = inside.gw.iter().zip(&outside.w).map(|(a, b)| a * b).sum();
    // ‖(1−θ)·in + θ·out‖² = δ², largest θ in [0,1]
    let a = q11 - 2.0 * q12 + q22;
    let b = 2.0 * (q12 - q11);
    let c0 = q11 - delta_sq;
    let theta = if a.abs() < 1e-300 {
        if b.abs() < 1e-300 {
            0.0
        } else {
            (-c0 / b).clamp(0.0, 1.0)
        }
    } else {
        let disc = (b * b - 4.0 * a * c0).max(0.0).sqrt();
        ((-b + disc) / (2.0 * a)).clamp(0.0, 1.0)
    };
    (1.0 - theta) * inside.cw + theta * outside.cw
}

pub(crate) fn hull_pair_sup_core(
    geom: &HullGeometry,
    c: &[f64],
    delta: f64,
    state: &mut PfwState,
) -> Result<f64> {
    if delta < 0.0 {
        return Err(Error::InvalidInput(format!("radius {delta} is negative")));
    }
    if delta == 0.0 || geom.m == 0 {
        return Ok(0.0);
    }
    let mut i_max = 0usize;
    let mut i_min = 0usize;
    for k in 1..geom.m {
        if c[k] > c[i_max] {
            i_max = k;
        }
        if c[k] < c[i_min] {
            i_min = k;
        }
    }
    let v0 = c[i_max] - c[i_min];
    if v0 <= 0.0 {
        return Ok(0.0);
    }
    let delta_sq = delta * delta;
    let pair_dist_sq = geom.dist_sq(i_max, i_min);
    // the supremum of a linear functional over the difference hull sits at a
    // vertex pair; when that pair is inside the ball the formula is exact
    if pair_dist_sq <= delta_sq {
        return Ok(v0);
    }

    if !state.initialized {
        state.reset(geom, c, i_max, i_min);
    } else {
        state.resync_objective(c);
    }

    let mut outside = PrimalSnapshot {
        w: {
            let mut w = vec![0.0; geom.m];
            w[i_max] += 1.0;
            w[i_min] -= 1.0;
            w
        },
        gw: (0..geom.m).map(|k| geom.g(i_max, k) - geom.g(i_min, k)).collect(),
        cw: v0,
        norm_sq: pair_dist_sq,
    };
    let mut inside = PrimalSnapshot {
        w: vec![0.0; geom.m],
        gw: vec![0.0; geom.m],
        cw: 0.0,
        norm_sq: 0.0,
    };

    let tol_cert = TOL_OPT * v0.max(1.0);
    let gap_tol = 0.05 * tol_cert;
    let mut best_lb = mix_candidate(&inside, &outside, delta_sq).max(0.0);
    let mut best_ub = v0;
    let mut tau_lo = 0.0_f64;
    let mut tau_hi = v0 / delta_sq;

    for _ in 0..MAX_BISECTIONS {
        if best_ub - best_lb <= tol_cert {
            return Ok(best_lb);
        }
        let tau = 0.5 * (tau_lo + tau_hi);
        let sol = solve_inner(geom, c, tau, gap_tol, state);
        let ub = tau * delta_sq + sol.value + sol.gap;
        if ub < best_ub {
            best_ub = ub;
        }
        let snapshot = PrimalSnapshot {
            w: state.w.clone(),
            gw: state.gw.clone(),
            cw: sol.linear,
            norm_sq: sol.norm_sq,
        };
        if sol.norm_sq > delta_sq {
            // feasible by scaling toward the origin
            let lb = sol.linear * (delta / sol.norm_sq.sqrt());
            if lb > best_lb {
                best_lb = lb;
            }
            outside = snapshot;
            tau_lo = tau;
        } else {
            if sol.linear > best_lb {
                best_lb = sol.linear;
            }
            inside = snapshot;
            tau_hi = tau;
        }
        let mixed = mix_candidate(&inside, &outside, delta_sq);
        if mixed > best_lb {
            best_lb = mixed;
        }
    }
    if best_ub - best_lb <= tol_cert {
        return Ok(best_lb);
    }
    Err(Error::SolverFailure {
        context: format!("hull supremum at radius {delta} not certified"),
        lower: best_lb,
        upper: best_ub,
    })
}

/// Supremum of ⟨z, h⟩ over h in the difference hull conv(F) − conv(F) with
/// ‖h‖ ≤ δ in the empirical norm. `z` is applied as a plain dot product
/// against sample values, so the caller scales it per process kind.
pub fn hull_pair_sup(class: &SampledClass, z: &[f64], delta: f64) -> Result<f64> {
    if z.len() != class.n() {
        return Err(Error::DimensionMismatch { expected: class.n(), got: z.len() });
    }
    let geom = HullGeometry::new(class);
    let c: Vec<f64> = class.rows().map(|row| dot(row, z)).collect();
    let mut state = PfwState::new(class.m());
    hull_pair_sup_core(&geom, &c, delta, &mut state)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Grid-search oracle for the same supremum, exhaustive over both simplices
/// at the given step. Infeasible pairs are scaled back into the ball, which
/// keeps every candidate feasible and the value monotone under nested grid
/// refinement. Guarded against combinatorial blow-up (m ≤ 4, bounded pair
/// count).
pub fn simplex_bruteforce_sup(
    class: &SampledClass,
    z: &[f64],
    delta: f64,
    step: f64,
) -> Result<f64> {
    if z.len() != class.n() {
        return Err(Error::DimensionMismatch { expected: class.n(), got: z.len() });
    }
    if !(step > 0.0 && step <= 0.1) {
        return Err(Error::InvalidInput(format!("step {step} outside (0, 0.1]")));
    }
    if delta < 0.0 {
        return Err(Error::InvalidInput(format!("radius {delta} is negative")));
    }
    let m = class.m();
    if m > 4 {
        return Err(Error::InvalidInput(format!(
            "bruteforce oracle limited to m ≤ 4 functions, got {m}"
        )));
    }
    let levels = (1.0 / step).round() as usize;
    let points = enumerate_simplex_grid(m, levels);
    if points.len() as u128 * points.len() as u128 > 2_000_000_000u128 {
        return Err(Error::InvalidInput(format!(
            "bruteforce grid of {} points is too large",
            points.len()
        )));
    }
    let geom = HullGeometry::new(class);
    let c: Vec<f64> = class.rows().map(|row| dot(row, z)).collect();

    struct GridPoint {
        weights: Vec<f64>,
        g_lambda: Vec<f64>,
        c_val: f64,
        norm_sq: f64,
    }
    let pts: Vec<GridPoint> = points
        .iter()
        .map(|w| {
            let mut gl = vec![0.0; m];
            for (i, &wi) in w.iter().enumerate() {
                if wi == 0.0 {
                    continue;
                }
                for k in 0..m {
                    gl[k] += wi * geom.g(i, k);
                }
            }
            let c_val = dot(w, &c);
            let norm_sq = dot(w, &gl);
            GridPoint { weights: w.clone(), g_lambda: gl, c_val, norm_sq }
        })
        .collect();

    let delta_sq = delta * delta;
    let best = pts
        .par_iter()
        .map(|a| {
            let mut local = 0.0_f64;
            for b in &pts {
                let value = a.c_val - b.c_val;
                if value <= local {
                    continue;
                }
                let cross = dot(&a.g_lambda, &b.weights);
                let d_sq = clamp_dist_sq(a.norm_sq - 2.0 * cross + b.norm_sq);
                let candidate = if d_sq <= delta_sq {
                    value
                } else {
                    value * (delta / d_sq.sqrt())
                };
                if candidate > local {
                    local = candidate;
                }
            }
            local
        })
        .reduce(|| 0.0, f64::max);
    Ok(best)
}

fn enumerate_simplex_grid(m: usize, levels: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let mut current = vec![0usize; m];
    fn rec(i: usize, remaining: usize, levels: usize, current: &mut [usize], out: &mut Vec<Vec<f64>>) {
        if i == current.len() - 1 {
            current[i] = remaining;
            out.push(current.iter().map(|&k| k as f64 / levels as f64).collect());
            return;
        }
        for k in 0..=remaining {
            current[i] = k;
            rec(i + 1, remaining - k, levels, current, out);
        }
    }
    rec(0, levels, levels, &mut current, &mut out);
    out
}

/// Monte Carlo modulus of the convex hull: per draw the certified supremum of
/// the Gaussian process increment over hull pairs at distance ≤ δ. Draw
/// seeding and reduction order match `modulus_finite`, so at δ beyond the
/// diameter both paths are pathwise identical.
pub fn modulus_convex_hull(
    class: &SampledClass,
    deltas: &[f64],
    n_draws: usize,
    seed: u64,
) -> Result<ModulusCurve> {
    crate::process::validate_delta_grid(deltas)?;
    if n_draws == 0 {
        return Err(Error::InvalidInput("need at least one draw".into()));
    }
    let geom = HullGeometry::new(class);
    let scale = 1.0 / (class.n() as f64).sqrt();
    let per_draw: Vec<Vec<f64>> = (0..n_draws as u64)
        .into_par_iter()
        .map(|k| {
            let noise = gaussian_noise(class.n(), seed, k);
            let c: Vec<f64> = class.rows().map(|row| dot(row, &noise) * scale).collect();
            let mut state = PfwState::new(class.m());
            let mut running = 0.0_f64;
            let mut values = Vec::with_capacity(deltas.len());
            for &delta in deltas {
                let v = hull_pair_sup_core(&geom, &c, delta, &mut state)?;
                // the admissible set grows with δ; tiny solver noise must not
                // break pathwise monotonicity
                running = running.max(v);
                values.push(running);
            }
            Ok(values)
        })
        .collect::<Result<Vec<_>>>()?;
    curve_from_draws(deltas, &per_draw, n_draws, seed)
}

/// Exact maximum of a linear form over { λ ∈ simplex : ⟨means, λ⟩ ≤ cap }.
/// Extreme points are single vertices under the cap or two-vertex mixtures
/// sitting exactly on it. `None` when no vertex satisfies the cap.
pub(crate) fn cap_lp_max(c: &[f64], means: &[f64], cap: f64) -> Option<f64> {
    let mut best: Option<f64> = None;
    for (i, &b) in means.iter().enumerate() {
        if b <= cap {
            best = Some(best.map_or(c[i], |v: f64| v.max(c[i])));
        }
    }
    best?;
    let mut value = best.unwrap();
    for (i, &bi) in means.iter().enumerate() {
        if bi > cap {
            continue;
        }
        for (j, &bj) in means.iter().enumerate() {
            if bj <= cap || c[j] <= c[i] {
                continue;
            }
            let theta = (cap - bi) / (bj - bi);
            let mixed = c[i] + theta * (c[j] - c[i]);
            if mixed > value {
                value = mixed;
            }
        }
    }
    Some(value)
}

/// Localized Rademacher complexity of the hull: per sign draw the larger of
/// the two signed linear programs over { g ∈ conv(G) : P_n g ≤ r }, averaged
/// across draws. Empty feasible sets contribute 0.
pub fn hull_localized_rademacher(
    class: &SampledClass,
    r: f64,
    n_draws: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if !class.range_checked() {
        return Err(Error::InvalidInput(
            "localization by P_n g needs a range-checked class".into(),
        ));
    }
    if r < 0.0 {
        return Err(Error::InvalidInput(format!("localization radius {r} is negative")));
    }
    if n_draws == 0 {
        return Err(Error::InvalidInput("need at least one draw".into()));
    }
    let means: Vec<f64> = (0..class.m()).map(|i| class.mean(i)).collect();
    let feasible = means.iter().any(|&b| b <= r);
    let inv_n = 1.0 / class.n() as f64;
    let samples: Vec<f64> = (0..n_draws as u64)
        .into_par_iter()
        .map(|k| {
            if !feasible {
                return 0.0;
            }
            let signs = rademacher_signs(class.n(), seed, k);
            let c: Vec<f64> = class.rows().map(|row| dot(row, &signs) * inv_n).collect();
            let neg: Vec<f64> = c.iter().map(|v| -v).collect();
            let plus = cap_lp_max(&c, &means, r).unwrap_or(0.0);
            let minus = cap_lp_max(&neg, &means, r).unwrap_or(0.0);
            plus.max(minus)
        })
        .collect();
    Ok(crate::process::mean_and_se(&samples))
}

/// A single hull supremum problem, bundling the class, the (pre-scaled)
/// linear objective, and the localization used.
pub struct HullSupremumProblem<'a> {
    pub class: &'a SampledClass,
    pub objective: Vec<f64>,
    pub constraint: HullConstraint,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HullConstraint {
    /// ‖h‖ ≤ δ over the difference hull conv(F) − conv(F).
    NormBall(f64),
    /// P_n g ≤ r over the hull conv(F) itself.
    MeanCap(f64),
    /// The difference hull with no localization; vertex formula.
    Unconstrained,
}

impl<'a> HullSupremumProblem<'a> {
    pub fn solve(&self) -> Result<f64> {
        if self.objective.len() != self.class.n() {
            return Err(Error::DimensionMismatch {
                expected: self.class.n(),
                got: self.objective.len(),
            });
        }
        let c: Vec<f64> = self.class.rows().map(|row| dot(row, &self.objective)).collect();
        match self.constraint {
            HullConstraint::NormBall(delta) => {
                let geom = HullGeometry::new(self.class);
                let mut state = PfwState::new(self.class.m());
                hull_pair_sup_core(&geom, &c, delta, &mut state)
            }
            HullConstraint::MeanCap(r) => {
                if !self.class.range_checked() {
                    return Err(Error::InvalidInput(
                        "mean cap needs a range-checked class".into(),
                    ));
                }
                let means: Vec<f64> =
                    (0..self.class.m()).map(|i| self.class.mean(i)).collect();
                cap_lp_max(&c, &means, r).ok_or_else(|| {
                    Error::Infeasible(format!(
                        "no class member has mean ≤ {r}; smallest mean is {}",
                        means.iter().cloned().fold(f64::INFINITY, f64::min)
                    ))
                })
            }
            HullConstraint::Unconstrained => {
                let max = c.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let min = c.iter().cloned().fold(f64::INFINITY, f64::min);
                Ok(max - min)
            }
        }
    }
}

/// Empirical-risk minimizer over the convex hull.
#[derive(Debug, Clone)]
pub struct ErmSolution {
    pub combination: ConvexCombination,
    /// (1/n) Σ_k |ĝ(x_k) − y_k|, recomputed from the returned weights.
    pub objective_value: f64,
    pub iterations: usize,
    /// Worst of primal infeasibility, duality-gap bound and simplex drift.
    pub residual: f64,
}

/// Duality-gap certificate required of an ERM solve.
pub const ERM_GAP_TOL: f64 = 1e-8;

/// Minimizes (1/n) Σ_k |(Σ_i λ_i g_i)(x_k) − y_k| over the simplex, as a
/// linear program with split residuals, started from the feasible basis that
/// puts all weight on the first function.
pub fn erm_convex_hull(class: &SampledClass, y: &[f64]) -> Result<ErmSolution> {
    if !class.range_checked() {
        return Err(Error::InvalidInput("ERM needs a range-checked class".into()));
    }
    if y.len() != class.n() {
        return Err(Error::DimensionMismatch { expected: class.n(), got: y.len() });
    }
    for &v in y {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidInput(format!("target value {v} outside [0, 1]")));
        }
    }
    let m = class.m();
    let n = class.n();
    let nrows = n + 1;
    let ncols = m + 2 * n;

    let mut cols = vec![0.0; nrows * ncols];
    for i in 0..m {
        let col = &mut cols[i * nrows..(i + 1) * nrows];
        col[..n].copy_from_slice(class.row(i));
        col[n] = 1.0;
    }
    for k in 0..n {
        cols[(m + k) * nrows + k] = -1.0; // positive residual
        cols[(m + n + k) * nrows + k] = 1.0; // negative residual
    }
    let mut b = vec![0.0; nrows];
    b[..n].copy_from_slice(y);
    b[n] = 1.0;
    let mut c = vec![0.0; ncols];
    for v in c[m..].iter_mut() {
        *v = 1.0;
    }
    let upper_hints = vec![1.0; ncols]; // weights and residuals all live in [0, 1]

    let mut basis = Vec::with_capacity(nrows);
    for k in 0..n {
        if class.row(0)[k] >= y[k] {
            basis.push(m + k);
        } else {
            basis.push(m + n + k);
        }
    }
    basis.push(0);

    let p = LpProblem { nrows, ncols, cols, b, c, upper_hints };
    let max_iter = 20_000 + 40 * (n + m);
    let sol = solve_with_basis(&p, basis, max_iter)?;

    let mut weights = sol.x[..m].to_vec();
    let mut drift: f64 = 0.0;
    for w in &mut weights {
        if *w < 0.0 {
            drift = drift.max(-*w);
            *w = 0.0;
        }
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > ConvexCombination::SUM_TOL || drift > 1e-9 {
        return Err(Error::SolverFailure {
            context: format!("ERM weights left the simplex (sum {sum}, drift {drift})"),
            lower: sol.objective / n as f64,
            upper: f64::INFINITY,
        });
    }
    let combination = ConvexCombination::new(weights)?;
    let fitted = class.evaluate_combination(&combination)?;
    let objective_value =
        fitted.iter().zip(y).map(|(a, b)| (a - b).abs()).sum::<f64>() / n as f64;

    let gap = sol.gap_bound / n as f64;
    let residual = gap.max(sol.primal_residual).max((sum - 1.0).abs());
    if gap > ERM_GAP_TOL {
        return Err(Error::SolverFailure {
            context: format!("ERM duality gap {gap:.3e} above {ERM_GAP_TOL:.1e}"),
            lower: objective_value - gap,
            upper: objective_value,
        });
    }
    Ok(ErmSolution { combination, objective_value, iterations: sol.iterations, residual })
}
