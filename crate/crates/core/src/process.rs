//! Isonormal Gaussian and Rademacher processes on a sampled class.
//!
//! With standard normal noise z the draw W(f) = (1/√n) Σ_k z_k f(x_k) has
//! covariance E W(f)W(g) = ⟨f,g⟩ in the empirical L2 structure, i.e. it is
//! the isonormal process of that Hilbert space restricted to the class. With
//! ±1 signs the draw is the Rademacher average R_n(f) = (1/n) Σ_k ε_k f(x_k).
//!
//! Draw k of a Monte Carlo run derives its stream seed as `seed ^ k`, so
//! parallel execution is reproducible and independent of the worker count;
//! aggregation always reduces in draw-index order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classdata::SampledClass;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProcessKind {
    Gaussian,
    Rademacher,
}

/// One realization of the process on every function of a class.
#[derive(Debug, Clone)]
pub struct ProcessDraw {
    pub kind: ProcessKind,
    /// The raw noise vector: standard normal entries or ±1 signs.
    pub noise: Vec<f64>,
    /// Process value per function, in row order.
    pub values: Vec<f64>,
}

/// Monte Carlo estimate of δ ↦ E sup |W(f) − W(g)| over pairs at distance ≤ δ.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModulusCurve {
    pub deltas: Vec<f64>,
    pub estimates: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub n_draws: usize,
    pub seed: u64,
}

impl ModulusCurve {
    /// Wraps closed-form values as a curve (no Monte Carlo error). The values
    /// must satisfy the same invariants as measured curves.
    pub fn from_values(deltas: Vec<f64>, estimates: Vec<f64>) -> Result<Self> {
        if deltas.len() != estimates.len() {
            return Err(Error::DimensionMismatch { expected: deltas.len(), got: estimates.len() });
        }
        let curve = Self {
            deltas,
            estimates,
            std_errors: vec![0.0; 0],
            n_draws: 0,
            seed: 0,
        };
        let mut curve = curve;
        curve.std_errors = vec![0.0; curve.deltas.len()];
        curve.validate()?;
        Ok(curve)
    }

    pub fn validate(&self) -> Result<()> {
        validate_delta_grid(&self.deltas)?;
        if self.estimates.len() != self.deltas.len() || self.std_errors.len() != self.deltas.len()
        {
            return Err(Error::DimensionMismatch {
                expected: self.deltas.len(),
                got: self.estimates.len(),
            });
        }
        for (i, (&d, &v)) in self.deltas.iter().zip(&self.estimates).enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidInput(format!("modulus estimate {v} at δ={d} invalid")));
            }
            if d == 0.0 && v != 0.0 {
                return Err(Error::InvalidInput("modulus at δ=0 must be exactly 0".into()));
            }
            if i > 0 && v < self.estimates[i - 1] {
                return Err(Error::InvalidInput(format!(
                    "modulus estimates not monotone at δ={d}"
                )));
            }
        }
        Ok(())
    }

    /// Value at the knot matching `delta` up to relative slack 1e-9.
    pub fn value_at_knot(&self, delta: f64) -> Result<f64> {
        let tol = 1e-9 * delta.abs().max(1.0);
        self.deltas
            .iter()
            .position(|&d| (d - delta).abs() <= tol)
            .map(|i| self.estimates[i])
            .ok_or(Error::MissingKnot(delta))
    }

    pub fn std_error_at_knot(&self, delta: f64) -> Result<f64> {
        let tol = 1e-9 * delta.abs().max(1.0);
        self.deltas
            .iter()
            .position(|&d| (d - delta).abs() <= tol)
            .map(|i| self.std_errors[i])
            .ok_or(Error::MissingKnot(delta))
    }
}

pub(crate) fn validate_delta_grid(deltas: &[f64]) -> Result<()> {
    if deltas.is_empty() {
        return Err(Error::EmptyGrid);
    }
    for &d in deltas {
        if !d.is_finite() || d < 0.0 {
            return Err(Error::InvalidInput(format!("δ grid entry {d} invalid")));
        }
    }
    for w in deltas.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::InvalidInput("δ grid must be strictly increasing".into()));
        }
    }
    Ok(())
}

pub(crate) fn derive_draw_seed(seed: u64, draw_index: u64) -> u64 {
    seed ^ draw_index
}

pub(crate) fn gaussian_noise(n: usize, seed: u64, draw_index: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_draw_seed(seed, draw_index));
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

pub(crate) fn rademacher_signs(n: usize, seed: u64, draw_index: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_draw_seed(seed, draw_index));
    (0..n).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect()
}

fn process_values(class: &SampledClass, kind: ProcessKind, noise: &[f64]) -> Vec<f64> {
    let scale = match kind {
        ProcessKind::Gaussian => 1.0 / (class.n() as f64).sqrt(),
        ProcessKind::Rademacher => 1.0 / class.n() as f64,
    };
    class
        .rows()
        .map(|row| {
            let dot: f64 = row.iter().zip(noise).map(|(a, b)| a * b).sum();
            dot * scale
        })
        .collect()
}

/// A single process realization, a deterministic function of (class, kind, seed).
pub fn draw_process(class: &SampledClass, kind: ProcessKind, seed: u64) -> ProcessDraw {
    let noise = match kind {
        ProcessKind::Gaussian => gaussian_noise(class.n(), seed, 0),
        ProcessKind::Rademacher => rademacher_signs(class.n(), seed, 0),
    };
    let values = process_values(class, kind, &noise);
    ProcessDraw { kind, noise, values }
}

/// Pairs (i < j) sorted by empirical distance; shared by every draw so the
/// per-draw supremum over all admissible pairs is a prefix maximum.
pub(crate) struct PairTable {
    /// (distance, i, j), ascending by distance and then index.
    pairs: Vec<(f64, u32, u32)>,
}

impl PairTable {
    pub(crate) fn new(class: &SampledClass) -> Self {
        let m = class.m();
        let mut pairs = Vec::with_capacity(m * (m.saturating_sub(1)) / 2);
        for i in 0..m {
            for j in (i + 1)..m {
                pairs.push((class.dist(i, j), i as u32, j as u32));
            }
        }
        pairs.sort_by(|a, b| {
            a.0.partial_cmp(&b.0).expect("finite distances").then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2))
        });
        Self { pairs }
    }

    /// For each δ of the ascending grid, the max of |v_i − v_j| over pairs at
    /// distance ≤ δ (0 when no pair qualifies; the diagonal contributes 0).
    fn sup_per_delta(&self, values: &[f64], deltas: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(deltas.len());
        let mut running = 0.0_f64;
        let mut cursor = 0usize;
        for &delta in deltas {
            while cursor < self.pairs.len() && self.pairs[cursor].0 <= delta {
                let (_, i, j) = self.pairs[cursor];
                let gap = (values[i as usize] - values[j as usize]).abs();
                if gap > running {
                    running = gap;
                }
                cursor += 1;
            }
            out.push(running);
        }
        out
    }
}

pub(crate) fn mean_and_se(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Continuity modulus of the finite class: per draw the supremum of
/// |W(f)−W(g)| over ordered pairs at distance ≤ δ, averaged across draws.
pub fn modulus_finite(
    class: &SampledClass,
    deltas: &[f64],
    n_draws: usize,
    seed: u64,
) -> Result<ModulusCurve> {
    validate_delta_grid(deltas)?;
    if n_draws == 0 {
        return Err(Error::InvalidInput("need at least one draw".into()));
    }
    let table = PairTable::new(class);
    let per_draw: Vec<Vec<f64>> = (0..n_draws as u64)
        .into_par_iter()
        .map(|k| {
            let noise = gaussian_noise(class.n(), seed, k);
            let values = process_values(class, ProcessKind::Gaussian, &noise);
            table.sup_per_delta(&values, deltas)
        })
        .collect();
    curve_from_draws(deltas, &per_draw, n_draws, seed)
}

pub(crate) fn curve_from_draws(
    deltas: &[f64],
    per_draw: &[Vec<f64>],
    n_draws: usize,
    seed: u64,
) -> Result<ModulusCurve> {
    let mut estimates = Vec::with_capacity(deltas.len());
    let mut std_errors = Vec::with_capacity(deltas.len());
    let mut column = vec![0.0; per_draw.len()];
    for d in 0..deltas.len() {
        for (k, row) in per_draw.iter().enumerate() {
            column[k] = row[d];
        }
        let (mean, se) = mean_and_se(&column);
        estimates.push(mean);
        std_errors.push(se);
    }
    let curve = ModulusCurve { deltas: deltas.to_vec(), estimates, std_errors, n_draws, seed };
    curve.validate()?;
    Ok(curve)
}

/// Localized Rademacher complexity of the finite class:
/// E_ε sup { |R_n(f)| : P_n f ≤ r }, with the empty supremum set to 0.
pub fn localized_rademacher_finite(
    class: &SampledClass,
    r: f64,
    n_draws: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if !class.range_checked() {
        return Err(Error::InvalidInput(
            "localization by P_n f needs a range-checked class".into(),
        ));
    }
    if r < 0.0 {
        return Err(Error::InvalidInput(format!("localization radius {r} is negative")));
    }
    if n_draws == 0 {
        return Err(Error::InvalidInput("need at least one draw".into()));
    }
    let admissible: Vec<usize> = (0..class.m()).filter(|&i| class.mean(i) <= r).collect();
    let samples: Vec<f64> = (0..n_draws as u64)
        .into_par_iter()
        .map(|k| {
            if admissible.is_empty() {
                return 0.0;
            }
            let signs = rademacher_signs(class.n(), seed, k);
            let values = process_values(class, ProcessKind::Rademacher, &signs);
            admissible.iter().map(|&i| values[i].abs()).fold(0.0, f64::max)
        })
        .collect();
    Ok(mean_and_se(&samples))
}

/// Monte Carlo estimate of the m×m covariance of Gaussian draws; converges to
/// the empirical Gram matrix.
pub fn gaussian_covariance(class: &SampledClass, n_draws: usize, seed: u64) -> Vec<Vec<f64>> {
    let m = class.m();
    let per_draw: Vec<Vec<f64>> = (0..n_draws as u64)
        .into_par_iter()
        .map(|k| {
            let noise = gaussian_noise(class.n(), seed, k);
            process_values(class, ProcessKind::Gaussian, &noise)
        })
        .collect();
    let mut cov = vec![vec![0.0; m]; m];
    for values in &per_draw {
        for i in 0..m {
            for j in i..m {
                cov[i][j] += values[i] * values[j];
            }
        }
    }
    let scale = 1.0 / n_draws as f64;
    for i in 0..m {
        for j in i..m {
            cov[i][j] *= scale;
            cov[j][i] = cov[i][j];
        }
    }
    cov
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_points_at_unit_distance() -> SampledClass {
        SampledClass::from_rows(vec![vec![0.0, 0.0], vec![1.0, 1.0]], "two").unwrap()
    }

    #[test]
    fn draw_is_deterministic_in_seed() {
        let class = two_points_at_unit_distance();
        let a = draw_process(&class, ProcessKind::Gaussian, 42);
        let b = draw_process(&class, ProcessKind::Gaussian, 42);
        assert_eq!(a.values, b.values);
        let c = draw_process(&class, ProcessKind::Gaussian, 43);
        assert_ne!(a.values, c.values);
    }

    #[test]
    fn zero_function_has_zero_process_value() {
        let class = SampledClass::from_rows(vec![vec![0.0, 0.0, 0.0]], "zero").unwrap();
        for seed in 0..50 {
            let d = draw_process(&class, ProcessKind::Gaussian, seed);
            assert_eq!(d.values[0], 0.0);
        }
    }

    #[test]
    fn rademacher_single_point_single_sign() {
        let class = SampledClass::from_rows(vec![vec![1.0]], "one").unwrap();
        let mut seen = std::collections::HashSet::new();
        for seed in 0..200 {
            let d = draw_process(&class, ProcessKind::Rademacher, seed);
            assert!((d.values[0].abs() - 1.0).abs() < 1e-15);
            seen.insert(d.values[0] as i64);
        }
        assert_eq!(seen.len(), 2);
    }

    #[test]
    fn variance_matches_norm() {
        // ‖f‖ = 2 ⇒ Var W(f) = 4, within Monte Carlo error at 1e5 draws
        let class = SampledClass::from_rows(vec![vec![2.0, 2.0]], "f").unwrap();
        let n_draws = 100_000;
        let vals: Vec<f64> = (0..n_draws)
            .map(|s| draw_process(&class, ProcessKind::Gaussian, s).values[0])
            .collect();
        let (mean, _) = mean_and_se(&vals);
        let var =
            vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n_draws - 1) as f64;
        assert!((var - 4.0).abs() < 0.06, "sample variance {var}");
    }

    #[test]
    fn modulus_no_admissible_pair_is_zero() {
        let class = two_points_at_unit_distance();
        let curve = modulus_finite(&class, &[0.5], 2_000, 7).unwrap();
        assert_eq!(curve.estimates[0], 0.0);
        assert_eq!(curve.std_errors[0], 0.0);
    }

    #[test]
    fn modulus_two_points_matches_half_normal_mean() {
        let class = two_points_at_unit_distance();
        let curve = modulus_finite(&class, &[1.0], 100_000, 7).unwrap();
        let expected = (2.0 / std::f64::consts::PI).sqrt();
        let band = 3.0 * curve.std_errors[0];
        assert!(
            (curve.estimates[0] - expected).abs() <= band,
            "estimate {} vs {expected} (band {band})",
            curve.estimates[0]
        );
    }

    #[test]
    fn modulus_singleton_is_zero() {
        let class = SampledClass::from_rows(vec![vec![0.3, 0.9]], "one").unwrap();
        let curve = modulus_finite(&class, &[0.0, 0.5, 2.0], 500, 3).unwrap();
        assert!(curve.estimates.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn modulus_curve_monotone_and_zero_at_origin() {
        let class = SampledClass::from_rows(
            vec![vec![0.1, 0.9, 0.4], vec![0.8, 0.2, 0.6], vec![0.5, 0.5, 0.5]],
            "three",
        )
        .unwrap();
        let deltas = [0.0, 0.2, 0.4, 0.8, 1.6];
        let curve = modulus_finite(&class, &deltas, 2_000, 11).unwrap();
        curve.validate().unwrap();
        assert_eq!(curve.estimates[0], 0.0);
    }

    #[test]
    fn modulus_independent_of_thread_count() {
        let class = SampledClass::from_rows(
            vec![vec![0.1, 0.9, 0.4], vec![0.8, 0.2, 0.6], vec![0.0, 1.0, 0.3]],
            "three",
        )
        .unwrap();
        let deltas = [0.3, 0.9, 1.5];
        let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let quad = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = single.install(|| modulus_finite(&class, &deltas, 1_000, 5).unwrap());
        let b = quad.install(|| modulus_finite(&class, &deltas, 1_000, 5).unwrap());
        assert_eq!(a.estimates, b.estimates);
        assert_eq!(a.std_errors, b.std_errors);
    }

    #[test]
    fn localized_empty_set_yields_zero() {
        let class = SampledClass::from_rows(vec![vec![1.0, 1.0]], "ones")
            .unwrap()
            .assert_range_01()
            .unwrap();
        let (est, se) = localized_rademacher_finite(&class, 0.5, 500, 2).unwrap();
        assert_eq!(est, 0.0);
        assert_eq!(se, 0.0);
    }

    #[test]
    fn localized_single_point_full_radius() {
        let class = SampledClass::from_rows(vec![vec![1.0]], "one")
            .unwrap()
            .assert_range_01()
            .unwrap();
        let (est, _) = localized_rademacher_finite(&class, 1.0, 400, 2).unwrap();
        assert!((est - 1.0).abs() < 1e-15);
    }

    #[test]
    fn localized_includes_zero_function() {
        let class = SampledClass::from_rows(vec![vec![0.0, 0.0], vec![0.6, 0.2]], "z")
            .unwrap()
            .assert_range_01()
            .unwrap();
        let (with_zero, _) = localized_rademacher_finite(&class, 0.5, 1_000, 9).unwrap();
        assert!(with_zero >= 0.0);
        let solo = SampledClass::from_rows(vec![vec![0.6, 0.2]], "s")
            .unwrap()
            .assert_range_01()
            .unwrap();
        let (without, _) = localized_rademacher_finite(&solo, 0.5, 1_000, 9).unwrap();
        assert!(with_zero >= without - 1e-12);
    }

    #[test]
    fn localized_rejects_unchecked_class() {
        let class = SampledClass::from_rows(vec![vec![0.5]], "raw").unwrap();
        assert!(localized_rademacher_finite(&class, 0.5, 10, 1).is_err());
    }

    #[test]
    fn covariance_approaches_gram() {
        let class = SampledClass::from_rows(
            vec![vec![1.0, 0.0, 0.5, 0.2], vec![0.3, 0.8, 0.1, 0.9]],
            "cov",
        )
        .unwrap();
        let gram = class.empirical_gram();
        let cov = gaussian_covariance(&class, 40_000, 13);
        for i in 0..2 {
            for j in 0..2 {
                assert!(
                    (cov[i][j] - gram[i][j]).abs() < 0.05,
                    "entry ({i},{j}): {} vs {}",
                    cov[i][j],
                    gram[i][j]
                );
            }
        }
    }
}
