//! ε-nets, covering numbers and local entropies.
//!
//! The construction is a farthest-first traversal: starting from the
//! lexicographically smallest row, repeatedly add the point farthest from the
//! chosen centers while that distance stays strictly above ε. The output is a
//! maximal ε-separated subset, hence simultaneously an ε-net, which sandwiches
//! the true covering number: N(F,ε) ≤ |centers| ≤ N(F,ε/2). Exact minimal
//! covering is NP-hard and all downstream bounds are monotone in N, so the
//! sandwich is what we report.
//!
//! Coverage uses ≤ and separation uses >, so points at distance exactly ε are
//! covered, not separated.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classdata::SampledClass;
use crate::error::{Error, Result};

/// An ε-net that is also an ε-separated set.
#[derive(Debug, Clone)]
pub struct EpsNet {
    pub radius: f64,
    /// Row indices of the chosen centers, in traversal order.
    pub center_indices: Vec<usize>,
    /// For every row, the row index of a center within `radius`.
    pub assignment: Vec<usize>,
}

impl EpsNet {
    pub fn size(&self) -> usize {
        self.center_indices.len()
    }

    /// Checks both invariants exactly: every point within `radius` of its
    /// assigned center, and distinct centers pairwise strictly farther than
    /// `radius` apart.
    pub fn verify(&self, class: &SampledClass) -> Result<()> {
        let r_sq = self.radius * self.radius;
        for (i, &c) in self.assignment.iter().enumerate() {
            if class.dist_sq(i, c) > r_sq {
                return Err(Error::InvalidInput(format!(
                    "point {i} at distance {} from its center {c} exceeds radius {}",
                    class.dist(i, c),
                    self.radius
                )));
            }
        }
        for (a, &i) in self.center_indices.iter().enumerate() {
            for &j in &self.center_indices[a + 1..] {
                if class.dist_sq(i, j) <= r_sq {
                    return Err(Error::InvalidInput(format!(
                        "centers {i} and {j} at distance {} are not separated beyond {}",
                        class.dist(i, j),
                        self.radius
                    )));
                }
            }
        }
        Ok(())
    }
}

/// The measured curve ε ↦ (N̂(F,ε), log N̂(F,ε)) on a decreasing ε grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoveringCurve {
    pub epsilons: Vec<f64>,
    pub sizes: Vec<usize>,
    pub entropies: Vec<f64>,
}

impl CoveringCurve {
    /// Builds a curve directly from knot values; sizes are forced onto the
    /// monotone envelope (running max as ε decreases). Used for synthetic
    /// reference curves; sizes may be fractional covering-number bounds.
    pub fn from_sizes(epsilons: Vec<f64>, sizes: Vec<f64>) -> Result<Self> {
        validate_grid(&epsilons)?;
        if sizes.len() != epsilons.len() {
            return Err(Error::DimensionMismatch { expected: epsilons.len(), got: sizes.len() });
        }
        let mut env = Vec::with_capacity(sizes.len());
        let mut running: f64 = 1.0;
        for &s in &sizes {
            if !s.is_finite() || s < 1.0 {
                return Err(Error::InvalidInput(format!("covering size {s} below 1")));
            }
            running = running.max(s);
            env.push(running);
        }
        let entropies = env.iter().map(|s| s.ln()).collect();
        Ok(Self {
            epsilons,
            sizes: env.iter().map(|s| s.round() as usize).collect(),
            entropies,
        })
    }

    /// Entropy at the finest knot ≤ `eps` (an upper bound for H(F, eps));
    /// below the finest knot the curve extends as a constant, which is the
    /// documented reporting convention for unresolved scales.
    pub fn entropy_upper_at(&self, eps: f64) -> f64 {
        match self.knot_at_or_below(eps) {
            Some(i) => self.entropies[i],
            None => *self.entropies.last().expect("non-empty curve"),
        }
    }

    /// Size at the finest knot ≤ `eps`; `None` when every knot is above.
    pub fn size_upper_at(&self, eps: f64) -> Option<usize> {
        self.knot_at_or_below(eps).map(|i| self.sizes[i])
    }

    /// Index of the coarsest knot that is ≤ eps (knots are decreasing).
    fn knot_at_or_below(&self, eps: f64) -> Option<usize> {
        self.epsilons.iter().position(|&e| e <= eps)
    }

    pub fn coarsest(&self) -> f64 {
        self.epsilons[0]
    }

    pub fn finest(&self) -> f64 {
        *self.epsilons.last().expect("non-empty curve")
    }
}

fn validate_grid(epsilons: &[f64]) -> Result<()> {
    if epsilons.is_empty() {
        return Err(Error::EmptyGrid);
    }
    for w in epsilons.windows(2) {
        if !(w[1] < w[0]) {
            return Err(Error::InvalidInput("ε grid must be strictly decreasing".into()));
        }
    }
    if *epsilons.last().unwrap() <= 0.0 {
        return Err(Error::InvalidInput("ε grid must be positive".into()));
    }
    Ok(())
}

/// Farthest-first traversal over a subset of rows, stopping once the largest
/// remaining distance is ≤ `stop_radius`. Returns the visit order, the
/// insertion radii (first entry `INFINITY`), and each point's nearest chosen
/// center. Ties go to the lowest row index.
struct Traversal {
    order: Vec<usize>,
    radii: Vec<f64>,
    nearest: Vec<usize>,
}

fn farthest_first(class: &SampledClass, subset: Option<&[usize]>, stop_radius: f64) -> Traversal {
    let all: Vec<usize>;
    let idx: &[usize] = match subset {
        Some(s) => s,
        None => {
            all = (0..class.m()).collect();
            &all
        }
    };
    assert!(!idx.is_empty(), "traversal over an empty subset");

    let seed = *idx
        .iter()
        .min_by(|&&a, &&b| {
            class
                .row(a)
                .partial_cmp(class.row(b))
                .expect("finite entries are totally ordered")
                .then(a.cmp(&b))
        })
        .unwrap();

    let stop_sq = stop_radius * stop_radius;
    let mut min_dist_sq = vec![f64::INFINITY; idx.len()];
    let mut nearest = vec![seed; idx.len()];
    let mut order = vec![seed];
    let mut radii = vec![f64::INFINITY];

    let mut update = |center: usize, min_dist_sq: &mut [f64], nearest: &mut [usize]| {
        for (slot, &p) in idx.iter().enumerate() {
            let d2 = class.dist_sq(p, center);
            if d2 < min_dist_sq[slot] {
                min_dist_sq[slot] = d2;
                nearest[slot] = center;
            }
        }
    };
    update(seed, &mut min_dist_sq, &mut nearest);

    loop {
        let mut best_slot = 0;
        let mut best_d2 = -1.0;
        for (slot, &d2) in min_dist_sq.iter().enumerate() {
            if d2 > best_d2 || (d2 == best_d2 && idx[slot] < idx[best_slot]) {
                best_d2 = d2;
                best_slot = slot;
            }
        }
        if best_d2 <= stop_sq {
            break;
        }
        let center = idx[best_slot];
        order.push(center);
        radii.push(best_d2.sqrt());
        update(center, &mut min_dist_sq, &mut nearest);
    }

    let mut nearest_by_point = vec![0usize; idx.len()];
    nearest_by_point.copy_from_slice(&nearest);
    Traversal { order, radii, nearest: nearest_by_point }
}

/// Greedy ε-net of the whole class: a maximal ε-separated subset together
/// with a nearest-center assignment.
pub fn greedy_net(class: &SampledClass, eps: f64) -> Result<EpsNet> {
    if !(eps > 0.0) {
        return Err(Error::InvalidInput(format!("net radius {eps} must be positive")));
    }
    let t = farthest_first(class, None, eps);
    let mut assignment = vec![0usize; class.m()];
    assignment.copy_from_slice(&t.nearest);
    Ok(EpsNet { radius: eps, center_indices: t.order, assignment })
}

/// Covering sizes over a strictly decreasing positive grid.
///
/// A single traversal serves every ε: the greedy selection order does not
/// depend on the radius, only the stopping point does, so the net for ε is a
/// prefix of the traversal. Sizes are passed through a running-max envelope
/// as ε decreases; with the shared traversal the envelope is already tight.
pub fn covering_curve(class: &SampledClass, eps_grid: &[f64]) -> Result<CoveringCurve> {
    validate_grid(eps_grid)?;
    let finest = *eps_grid.last().unwrap();
    let t = farthest_first(class, None, finest);
    let mut sizes = Vec::with_capacity(eps_grid.len());
    let mut running = 1usize;
    for &eps in eps_grid {
        let count = t.radii.iter().filter(|&&r| r > eps).count();
        running = running.max(count.max(1));
        sizes.push(running);
    }
    let entropies = sizes.iter().map(|&s| (s as f64).ln()).collect();
    Ok(CoveringCurve { epsilons: eps_grid.to_vec(), sizes, entropies })
}

/// Local entropy sup_f H(B(f,δ) ∩ F, ε): the worst entropy among the closed
/// δ-balls around class members, each measured by its own greedy net.
pub fn local_entropy(class: &SampledClass, delta: f64, eps: f64) -> Result<f64> {
    if !(delta > 0.0) || !(eps > 0.0) {
        return Err(Error::InvalidInput("local entropy needs positive δ and ε".into()));
    }
    let d_sq = delta * delta;
    let per_ball: Vec<f64> = (0..class.m())
        .into_par_iter()
        .map(|i| {
            let ball: Vec<usize> =
                (0..class.m()).filter(|&j| class.dist_sq(i, j) <= d_sq).collect();
            let t = farthest_first(class, Some(&ball), eps);
            (t.order.len() as f64).ln()
        })
        .collect();
    Ok(per_ball.into_iter().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn collinear() -> SampledClass {
        // points 0, 0.3e, 1.0e with e the unit-norm constant function
        SampledClass::from_rows(vec![vec![0.0], vec![0.3], vec![1.0]], "collinear").unwrap()
    }

    fn two_points() -> SampledClass {
        SampledClass::from_rows(vec![vec![0.0, 0.0], vec![1.0, 1.0]], "two").unwrap()
    }

    #[test]
    fn collinear_net_at_035() {
        let net = greedy_net(&collinear(), 0.35).unwrap();
        assert_eq!(net.size(), 2);
        net.verify(&collinear()).unwrap();
    }

    #[test]
    fn collinear_net_at_diameter() {
        let net = greedy_net(&collinear(), 1.0).unwrap();
        assert_eq!(net.size(), 1);
        net.verify(&collinear()).unwrap();
    }

    #[test]
    fn separated_pair_is_two_centers() {
        let class = two_points();
        let net = greedy_net(&class, 0.5).unwrap();
        assert_eq!(net.size(), 2);
        assert_eq!(net.assignment[0], 0);
        assert_eq!(net.assignment[1], 1);
        net.verify(&class).unwrap();
    }

    #[test]
    fn rejects_nonpositive_radius() {
        assert!(greedy_net(&two_points(), 0.0).is_err());
        assert!(greedy_net(&two_points(), -1.0).is_err());
    }

    #[test]
    fn singleton_curve_is_flat() {
        let class = SampledClass::from_rows(vec![vec![0.7, 0.7]], "one").unwrap();
        let curve = covering_curve(&class, &[1.0, 0.5, 0.25]).unwrap();
        assert_eq!(curve.sizes, vec![1, 1, 1]);
        assert!(curve.entropies.iter().all(|&h| h == 0.0));
    }

    #[test]
    fn two_point_curve_sizes() {
        let curve = covering_curve(&two_points(), &[1.0, 0.5, 0.25]).unwrap();
        assert_eq!(curve.sizes, vec![1, 2, 2]);
    }

    #[test]
    fn exact_distance_is_covered_not_separated() {
        // at ε equal to the pairwise distance, one ball of radius ε covers both
        let curve = covering_curve(&two_points(), &[1.0]).unwrap();
        assert_eq!(curve.sizes, vec![1]);
    }

    #[test]
    fn local_entropy_isolated_points() {
        let class = two_points();
        let h = local_entropy(&class, 0.5, 0.1).unwrap();
        assert_eq!(h, 0.0);
    }

    #[test]
    fn local_entropy_ball_swallows_class() {
        let class = collinear();
        let h_local = local_entropy(&class, 2.0, 0.1).unwrap();
        let net = greedy_net(&class, 0.1).unwrap();
        assert!((h_local - (net.size() as f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn local_entropy_collinear_example() {
        let h = local_entropy(&collinear(), 0.4, 0.1).unwrap();
        assert!((h - 2.0_f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn duplicates_collapse_at_positive_radius() {
        let class =
            SampledClass::from_rows(vec![vec![0.5, 0.5], vec![0.5, 0.5]], "dup").unwrap();
        let net = greedy_net(&class, 0.25).unwrap();
        assert_eq!(net.size(), 1);
        net.verify(&class).unwrap();
    }

    #[test]
    fn curve_rejects_bad_grids() {
        let class = two_points();
        assert!(covering_curve(&class, &[]).is_err());
        assert!(covering_curve(&class, &[0.5, 0.5]).is_err());
        assert!(covering_curve(&class, &[0.5, 1.0]).is_err());
        assert!(covering_curve(&class, &[1.0, 0.0]).is_err());
    }

    fn random_class() -> impl Strategy<Value = SampledClass> {
        (2usize..10, 1usize..5).prop_flat_map(|(m, n)| {
            proptest::collection::vec(proptest::collection::vec(0.0f64..1.0, n), m)
                .prop_map(|rows| SampledClass::from_rows(rows, "prop").unwrap())
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn net_invariants_hold_exactly(class in random_class(), eps in 0.05f64..1.5) {
            let net = greedy_net(&class, eps).unwrap();
            prop_assert!(net.verify(&class).is_ok());
        }

        #[test]
        fn curve_monotone_under_refinement(class in random_class()) {
            let grid: Vec<f64> = (0..8).map(|i| 1.4 * 0.6f64.powi(i)).collect();
            let curve = covering_curve(&class, &grid).unwrap();
            for w in curve.sizes.windows(2) {
                prop_assert!(w[1] >= w[0]);
            }
        }

        #[test]
        fn packing_self_covering(class in random_class(), eps in 0.05f64..1.0) {
            // a maximal ε-separated set A satisfies N(A, ε/2) = |A|
            let net = greedy_net(&class, eps).unwrap();
            let rows: Vec<Vec<f64>> =
                net.center_indices.iter().map(|&i| class.row(i).to_vec()).collect();
            let separated = SampledClass::from_rows(rows, "sep").unwrap();
            let refit = greedy_net(&separated, eps / 2.0).unwrap();
            prop_assert_eq!(refit.size(), net.size());
        }
    }
}
